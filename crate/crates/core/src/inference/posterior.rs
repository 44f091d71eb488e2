use super::Lattice;
use crate::error::{Error, Result};
use crate::logsum::logsumexp;
use crate::model::ChainKind;

/// `exp(log_p)` with rounding overshoot above one removed.
fn prob(log_p: f64) -> f64 {
    log_p.exp().min(1.0)
}

/// Posterior distribution of change-point locations.
///
/// Entry `j` (zero-based) refers to change-point position `j + 1`, the
/// change between observations `j + 1` and `j + 2`.
#[derive(Debug, Clone, PartialEq)]
pub enum ChangePointPosterior {
    /// `P(S_i != S_{i+1} | E)` for `i = 1..n-1`.
    Level(Vec<f64>),
    /// Row `r` holds `P(CP_{r+1} = i | E)`, the probability that segment
    /// `r + 1` ends at observation `i`.
    Segment(Vec<Vec<f64>>),
}

impl ChangePointPosterior {
    pub fn kind(&self) -> ChainKind {
        match self {
            ChangePointPosterior::Level(_) => ChainKind::Level,
            ChangePointPosterior::Segment(_) => ChainKind::Segment,
        }
    }

    /// Rows of the posterior; a level posterior has a single row.
    pub fn rows(&self) -> Vec<&[f64]> {
        match self {
            ChangePointPosterior::Level(v) => vec![v.as_slice()],
            ChangePointPosterior::Segment(rows) => rows.iter().map(Vec::as_slice).collect(),
        }
    }
}

impl Lattice {
    /// `P(S_i = s | E)` for every position and state.
    pub fn posterior_states(&self) -> Result<Vec<Vec<f64>>> {
        self.require_evidence()?;
        Ok(self
            .log_forward
            .iter()
            .zip(&self.log_backward)
            .map(|(f, b)| {
                f.iter()
                    .zip(b)
                    .map(|(f, b)| prob(f + b - self.log_evidence))
                    .collect()
            })
            .collect())
    }

    fn log_pair_unnormalized(&self, i: usize, r: usize, s: usize) -> f64 {
        let w = self.chain.transition_log_unchecked(r, s);
        self.log_forward[i - 1][r] + w + self.potentials[i][s] + self.log_backward[i][s]
    }

    /// `P(S_{i-1} = r, S_i = s | E)` with `i` the zero-based index of the
    /// later position, `1 <= i < n`.
    pub fn posterior_pair(&self, i: usize, r: usize, s: usize) -> Result<f64> {
        self.require_evidence()?;
        let m = self.state_count();
        if i == 0 || i >= self.len() || r >= m || s >= m {
            return Err(Error::InvalidParameter(format!(
                "pair ({r},{s}) at position {i} out of range"
            )));
        }
        let v = self.log_pair_unnormalized(i, r, s);
        if v == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        Ok(prob(v - self.log_evidence))
    }

    /// Full `M × M` table of pair posteriors for `(S_{i-1}, S_i)`.
    pub fn pair_posteriors(&self, i: usize) -> Result<Vec<Vec<f64>>> {
        let m = self.state_count();
        (0..m)
            .map(|r| (0..m).map(|s| self.posterior_pair(i, r, s)).collect())
            .collect()
    }

    /// Change-point posterior of the lattice's model kind.
    pub fn changepoint_posterior(&self) -> Result<ChangePointPosterior> {
        self.require_evidence()?;
        let n = self.len();
        match self.kind() {
            ChainKind::Level => {
                let mut terms = Vec::new();
                let probs = (1..n)
                    .map(|i| {
                        terms.clear();
                        for (s, incoming) in self.transitions.incoming.iter().enumerate() {
                            for &(r, _) in incoming {
                                if r != s {
                                    terms.push(self.log_pair_unnormalized(i, r, s));
                                }
                            }
                        }
                        if terms.is_empty() {
                            0.0
                        } else {
                            prob(logsumexp(&terms) - self.log_evidence)
                        }
                    })
                    .collect();
                Ok(ChangePointPosterior::Level(probs))
            }
            ChainKind::Segment => {
                let k = self.state_count();
                let rows = (0..k.saturating_sub(1))
                    .map(|r| {
                        (1..n)
                            .map(|i| {
                                let v = self.log_pair_unnormalized(i, r, r + 1);
                                prob(v - self.log_evidence)
                            })
                            .collect()
                    })
                    .collect();
                Ok(ChangePointPosterior::Segment(rows))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ChainSpec, EmissionModel, ObservationSeries};

    #[test]
    fn single_point_uniform_posterior() {
        let chain = ChainSpec::level(vec![0.3, 0.3]).unwrap();
        let em = EmissionModel::poisson(vec![2.0, 2.0]).unwrap();
        let data = ObservationSeries::new(vec![3.0]).unwrap();
        let post = Lattice::standard(&chain, &em, &data)
            .unwrap()
            .posterior_states()
            .unwrap();
        assert!((post[0][0] - 0.5).abs() < 1e-15);
        assert!((post[0][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn segment_posterior_is_pinned_at_ends() {
        let chain = ChainSpec::segment(3).unwrap();
        let em = EmissionModel::normal(vec![0.0, 1.0, -1.0], 0.7).unwrap();
        let data = ObservationSeries::new(vec![0.1, 0.9, 1.2, -0.8, -1.1]).unwrap();
        let post = Lattice::standard(&chain, &em, &data)
            .unwrap()
            .posterior_states()
            .unwrap();
        assert!((post[0][0] - 1.0).abs() < 1e-12);
        assert_eq!(&post[0][1..], &[0.0, 0.0]);
        assert!((post[4][2] - 1.0).abs() < 1e-12);
        assert_eq!(post[4][0], 0.0);
    }

    #[test]
    fn forbidden_pairs_and_totals() {
        let chain = ChainSpec::segment(3).unwrap();
        let em = EmissionModel::poisson(vec![1.0, 4.0, 9.0]).unwrap();
        let data = ObservationSeries::new(vec![0.0, 2.0, 5.0, 4.0, 10.0, 8.0]).unwrap();
        let lattice = Lattice::standard(&chain, &em, &data).unwrap();
        assert_eq!(lattice.posterior_pair(3, 0, 2).unwrap(), 0.0);
        assert_eq!(lattice.posterior_pair(3, 2, 1).unwrap(), 0.0);
        for i in 1..6 {
            let total: f64 = lattice.pair_posteriors(i).unwrap().iter().flatten().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(lattice.posterior_pair(0, 0, 0).is_err());
        assert!(lattice.posterior_pair(6, 0, 0).is_err());
    }

    #[test]
    fn two_points_two_segments() {
        let chain = ChainSpec::segment(2).unwrap();
        let em = EmissionModel::poisson(vec![1.0, 4.0]).unwrap();
        let data = ObservationSeries::new(vec![0.0, 9.0]).unwrap();
        let cp = Lattice::standard(&chain, &em, &data)
            .unwrap()
            .changepoint_posterior()
            .unwrap();
        match cp {
            ChangePointPosterior::Segment(rows) => {
                assert_eq!(rows.len(), 1);
                assert!((rows[0][0] - 1.0).abs() < 1e-14);
            }
            _ => panic!("expected segment posterior"),
        }
    }

    #[test]
    fn level_changepoints_complement_staying() {
        let chain = ChainSpec::level(vec![0.2, 0.1, 0.3]).unwrap();
        let em = EmissionModel::poisson(vec![1.0, 4.0, 9.0]).unwrap();
        let data = ObservationSeries::new(vec![0.0, 2.0, 5.0, 4.0, 10.0, 8.0]).unwrap();
        let lattice = Lattice::standard(&chain, &em, &data).unwrap();
        let ChangePointPosterior::Level(cp) = lattice.changepoint_posterior().unwrap() else {
            panic!("expected level posterior");
        };
        assert_eq!(cp.len(), 5);
        for (j, p) in cp.iter().enumerate() {
            let stay: f64 = (0..3)
                .map(|r| lattice.posterior_pair(j + 1, r, r).unwrap())
                .sum();
            assert!((p + stay - 1.0).abs() < 1e-12);
        }
    }
}
