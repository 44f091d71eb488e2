use super::log_potentials;
use crate::error::{Error, Result};
use crate::model::{ChainSpec, EmissionModel, Evidence, ObservationSeries};

/// Most probable state path under the evidence and its log joint
/// probability. Ties go to the lowest state index.
pub fn viterbi(
    chain: &ChainSpec,
    emissions: &EmissionModel,
    data: &ObservationSeries,
    ev: &Evidence,
) -> Result<(Vec<usize>, f64)> {
    let phi = log_potentials(chain, emissions, data, ev)?;
    let tr = chain.transitions();
    let n = phi.len();
    let m = chain.state_count();

    let mut score: Vec<f64> = (0..m).map(|s| chain.initial_log(s) + phi[0][s]).collect();
    let mut back = vec![vec![usize::MAX; m]; n];
    for i in 1..n {
        let mut next = vec![f64::NEG_INFINITY; m];
        for s in 0..m {
            if phi[i][s] == f64::NEG_INFINITY {
                continue;
            }
            let mut best = f64::NEG_INFINITY;
            let mut arg = usize::MAX;
            for &(r, w) in &tr.incoming[s] {
                let v = score[r] + w;
                if v > best {
                    best = v;
                    arg = r;
                }
            }
            if arg != usize::MAX {
                next[s] = best + phi[i][s];
                back[i][s] = arg;
            }
        }
        score = next;
    }

    let (mut state, best) = score.iter().copied().enumerate().fold(
        (usize::MAX, f64::NEG_INFINITY),
        |(a, b), (s, v)| {
            if v > b {
                (s, v)
            } else {
                (a, b)
            }
        },
    );
    if state == usize::MAX {
        return Err(Error::NoPath);
    }
    let mut path = vec![0; n];
    path[n - 1] = state;
    for i in (1..n).rev() {
        state = back[i][state];
        path[i - 1] = state;
    }
    Ok((path, best))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::log_joint;

    #[test]
    fn single_segment_is_constant() {
        let chain = ChainSpec::segment(1).unwrap();
        let em = EmissionModel::poisson(vec![2.0]).unwrap();
        let data = ObservationSeries::new(vec![1.0, 5.0, 0.0, 2.0]).unwrap();
        let ev = Evidence::segment(4, 1).unwrap();
        let (path, _) = viterbi(&chain, &em, &data, &ev).unwrap();
        assert_eq!(path, vec![0; 4]);
    }

    #[test]
    fn separated_poisson_segments() {
        let chain = ChainSpec::segment(2).unwrap();
        let em = EmissionModel::poisson(vec![1.0, 100.0]).unwrap();
        let data = ObservationSeries::new(vec![0.0, 1.0, 120.0, 95.0]).unwrap();
        let ev = Evidence::segment(4, 2).unwrap();
        let (path, lj) = viterbi(&chain, &em, &data, &ev).unwrap();
        assert_eq!(path, vec![0, 0, 1, 1]);
        assert!((lj - log_joint(&chain, &em, &data, &path).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn sticky_level_chain_stays_put() {
        let chain = ChainSpec::level(vec![1e-9, 1e-9]).unwrap();
        let em = EmissionModel::normal(vec![0.0, 1.0], 1.0).unwrap();
        let data = ObservationSeries::new(vec![0.0, 1.0, 1.2, 0.9, 1.1]).unwrap();
        let mut ev = Evidence::level(5, 2).unwrap();
        ev.pin(0, 0).unwrap();
        let (path, _) = viterbi(&chain, &em, &data, &ev).unwrap();
        assert_eq!(path, vec![0; 5]);
    }

    #[test]
    fn ties_prefer_lowest_state() {
        let chain = ChainSpec::level(vec![0.5, 0.5]).unwrap();
        let em = EmissionModel::poisson(vec![3.0, 3.0]).unwrap();
        let data = ObservationSeries::new(vec![1.0, 2.0, 3.0]).unwrap();
        let ev = Evidence::level(3, 2).unwrap();
        let (path, _) = viterbi(&chain, &em, &data, &ev).unwrap();
        assert_eq!(path, vec![0, 0, 0]);
    }

    #[test]
    fn infeasible_evidence_has_no_path() {
        let chain = ChainSpec::segment(3).unwrap();
        let em = EmissionModel::poisson(vec![1.0, 2.0, 3.0]).unwrap();
        let data = ObservationSeries::new(vec![0.0, 1.0]).unwrap();
        let mut ev = Evidence::level(2, 3).unwrap();
        ev.pin(0, 0).unwrap().pin(1, 2).unwrap();
        assert_eq!(viterbi(&chain, &em, &data, &ev).unwrap_err(), Error::NoPath);
    }
}
