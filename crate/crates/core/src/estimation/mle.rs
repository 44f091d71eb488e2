use crate::error::{Error, Result};
use crate::model::{ChainKind, ChainSpec, EmissionModel, Family, ObservationSeries};

/// Smallest standard deviation or Poisson rate an estimate may take.
pub const PARAMETER_FLOOR: f64 = 1e-12;

/// Checks a change-point list against `n` and returns segment bounds
/// `[0, c_1, .., c_{K-1}, n]`.
pub(crate) fn segment_bounds(n: usize, changepoints: &[usize]) -> Result<Vec<usize>> {
    let mut bounds = Vec::with_capacity(changepoints.len() + 2);
    bounds.push(0);
    for (j, &c) in changepoints.iter().enumerate() {
        if c == 0 || c >= n {
            return Err(Error::InvalidParameter(format!(
                "change-point {c} outside 1..{n}"
            )));
        }
        if c <= *bounds.last().unwrap() {
            return Err(Error::DegenerateSegment {
                segment: j + 1,
                reason: "change-points must be strictly increasing".into(),
            });
        }
        bounds.push(c);
    }
    bounds.push(n);
    Ok(bounds)
}

/// Per-position labels from change-points and a segment-to-level map.
fn position_labels(bounds: &[usize], levels: &[usize]) -> Vec<usize> {
    let mut labels = Vec::with_capacity(*bounds.last().unwrap());
    for (j, w) in bounds.windows(2).enumerate() {
        labels.extend(std::iter::repeat_n(levels[j], w[1] - w[0]));
    }
    labels
}

/// Maximum likelihood estimates under a hard segmentation.
///
/// Segment kind: one state per segment, `eta` at its default. Level kind:
/// one level per segment, see [`mle_with_levels`] to share levels.
pub fn mle_from_segmentation(
    data: &ObservationSeries,
    changepoints: &[usize],
    family: Family,
    kind: ChainKind,
) -> Result<(EmissionModel, ChainSpec)> {
    let k = changepoints.len() + 1;
    match kind {
        ChainKind::Segment => {
            let identity: Vec<usize> = (0..k).collect();
            let (emissions, _) = fit_labelled(data, changepoints, family, &identity)?;
            Ok((emissions, ChainSpec::segment(k)?))
        }
        ChainKind::Level => {
            let identity: Vec<usize> = (0..k).collect();
            mle_with_levels(data, changepoints, family, &identity)
        }
    }
}

/// Level-model estimates where segment `j` is emitted by level `levels[j]`.
///
/// Exit probabilities count observed exits from each level over the
/// positions it occupies, the last observation excluded. A level never
/// left gets `1/n`; one always left gets `1 - 1/n`.
pub fn mle_with_levels(
    data: &ObservationSeries,
    changepoints: &[usize],
    family: Family,
    levels: &[usize],
) -> Result<(EmissionModel, ChainSpec)> {
    let (emissions, labels) = fit_labelled(data, changepoints, family, levels)?;
    let l = emissions.state_count();
    let n = labels.len();
    let mut exits = vec![0usize; l];
    let mut occupancy = vec![0usize; l];
    for w in labels.windows(2) {
        occupancy[w[0]] += 1;
        if w[1] != w[0] {
            exits[w[0]] += 1;
        }
    }
    let floor = 1.0 / n as f64;
    let exit_probs = exits
        .iter()
        .zip(&occupancy)
        .map(|(&e, &o)| {
            if e == 0 || o == 0 {
                floor
            } else if e == o {
                1.0 - floor
            } else {
                e as f64 / o as f64
            }
        })
        .collect();
    Ok((emissions, ChainSpec::level(exit_probs)?))
}

fn fit_labelled(
    data: &ObservationSeries,
    changepoints: &[usize],
    family: Family,
    levels: &[usize],
) -> Result<(EmissionModel, Vec<usize>)> {
    data.validate_for(family)?;
    let bounds = segment_bounds(data.len(), changepoints)?;
    if levels.len() != bounds.len() - 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} level labels for {} segments",
            levels.len(),
            bounds.len() - 1
        )));
    }
    let l = levels.iter().max().map_or(0, |m| m + 1);
    if let Some(unused) = (0..l).find(|r| !levels.contains(r)) {
        return Err(Error::InvalidParameter(format!(
            "level {} is assigned no segment",
            unused + 1
        )));
    }
    let labels = position_labels(&bounds, levels);

    let mut sum = vec![0.0; l];
    let mut count = vec![0usize; l];
    for (x, &r) in data.iter().zip(&labels) {
        if let Some(x) = x {
            sum[r] += x;
            count[r] += 1;
        }
    }
    if let Some(r) = (0..l).find(|&r| count[r] == 0) {
        return Err(Error::DegenerateSegment {
            segment: levels.iter().position(|&v| v == r).unwrap() + 1,
            reason: "no observed values".into(),
        });
    }
    let means: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();

    let emissions = match family {
        Family::Poisson => {
            EmissionModel::poisson(means.iter().map(|m| m.max(PARAMETER_FLOOR)).collect())?
        }
        Family::NormalHomoscedastic => {
            let mut ss = 0.0;
            for (x, &r) in data.iter().zip(&labels) {
                if let Some(x) = x {
                    ss += (x - means[r]).powi(2);
                }
            }
            let var = ss / data.observed_count() as f64;
            EmissionModel::normal(means, var.sqrt().max(PARAMETER_FLOOR))?
        }
    };
    Ok((emissions, labels))
}

/// Per-segment sample means of the observed values.
pub fn segment_means(data: &ObservationSeries, changepoints: &[usize]) -> Result<Vec<f64>> {
    let bounds = segment_bounds(data.len(), changepoints)?;
    bounds
        .windows(2)
        .enumerate()
        .map(|(j, w)| {
            let vals: Vec<f64> = (w[0]..w[1]).filter_map(|i| data.get(i)).collect();
            if vals.is_empty() {
                Err(Error::DegenerateSegment {
                    segment: j + 1,
                    reason: "no observed values".into(),
                })
            } else {
                Ok(vals.iter().sum::<f64>() / vals.len() as f64)
            }
        })
        .collect()
}

/// Assigns segments to levels: each segment joins the first existing level
/// whose founding segment mean lies within `threshold`, otherwise it opens
/// a new level. Levels are numbered in order of first appearance.
pub fn merge_levels(segment_means: &[f64], threshold: f64) -> Vec<usize> {
    let mut founders: Vec<f64> = Vec::new();
    segment_means
        .iter()
        .map(
            |&m| match founders.iter().position(|&f| (f - m).abs() < threshold) {
                Some(level) => level,
                None => {
                    founders.push(m);
                    founders.len() - 1
                }
            },
        )
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> ObservationSeries {
        ObservationSeries::new(vec![1.0, 3.0, 2.0, 8.0, 10.0, 1.0, 2.0]).unwrap()
    }

    #[test]
    fn segment_kind_means_and_pooled_sigma() {
        let (em, chain) = mle_from_segmentation(
            &data(),
            &[3, 5],
            Family::NormalHomoscedastic,
            ChainKind::Segment,
        )
        .unwrap();
        let EmissionModel::Normal { means, sigma } = em else {
            panic!("normal expected")
        };
        assert_eq!(means, vec![2.0, 9.0, 1.5]);
        // (1+1+0) + (1+1) + (0.25+0.25) = 4.5 over 7
        assert!((sigma - (4.5f64 / 7.0).sqrt()).abs() < 1e-15);
        assert_eq!(chain, ChainSpec::segment(3).unwrap());
    }

    #[test]
    fn shared_levels_pool_segments() {
        let (em, chain) = mle_with_levels(&data(), &[3, 5], Family::Poisson, &[0, 1, 0]).unwrap();
        assert_eq!(em.location(), &[9.0 / 5.0, 9.0]);
        let ChainSpec::Level { exit_probs, .. } = chain else {
            panic!("level expected")
        };
        // level 1 occupies positions 1-3 and 6 (7 is last) with one exit
        assert_eq!(exit_probs, vec![1.0 / 4.0, 1.0 / 2.0]);
    }

    #[test]
    fn unexited_level_gets_floor() {
        let (_, chain) =
            mle_from_segmentation(&data(), &[3], Family::Poisson, ChainKind::Level).unwrap();
        let ChainSpec::Level { exit_probs, .. } = chain else {
            panic!("level expected")
        };
        assert_eq!(exit_probs, vec![1.0 / 3.0, 1.0 / 7.0]);
    }

    #[test]
    fn bad_changepoints() {
        assert!(matches!(
            mle_from_segmentation(&data(), &[3, 3], Family::Poisson, ChainKind::Segment),
            Err(Error::DegenerateSegment { .. })
        ));
        assert!(mle_from_segmentation(&data(), &[7], Family::Poisson, ChainKind::Segment).is_err());
        assert!(mle_with_levels(&data(), &[3], Family::Poisson, &[0, 2]).is_err());
    }

    #[test]
    fn all_missing_segment_is_degenerate() {
        let d = ObservationSeries::from_options([Some(1.0), None, None, Some(2.0)]).unwrap();
        assert!(matches!(
            mle_from_segmentation(&d, &[1, 3], Family::Poisson, ChainKind::Segment),
            Err(Error::DegenerateSegment { segment: 2, .. })
        ));
    }

    #[test]
    fn merging_by_threshold() {
        assert_eq!(
            merge_levels(&[0.296, -0.039, 0.162, -0.636], 0.15),
            vec![0, 1, 0, 2]
        );
        assert_eq!(merge_levels(&[3.25, 1.15, 0.27], 0.15), vec![0, 1, 2]);
        assert_eq!(merge_levels(&[1.0, 2.0], 0.0), vec![0, 1]);
    }
}
