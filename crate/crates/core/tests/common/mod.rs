//! Random model instances shared by the integration suites.
#![allow(dead_code)]

use cphmm::{ChainKind, ChainSpec, EmissionModel, Family, ObservationSeries};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

#[derive(Debug, Clone)]
pub struct Instance {
    pub chain: ChainSpec,
    pub emissions: EmissionModel,
    pub data: ObservationSeries,
    pub truth: Vec<usize>,
}

pub fn random_emissions<R: Rng>(rng: &mut R, family: Family, m: usize) -> EmissionModel {
    match family {
        Family::Poisson => {
            EmissionModel::poisson((0..m).map(|_| rng.random_range(0.5..12.0)).collect()).unwrap()
        }
        Family::NormalHomoscedastic => EmissionModel::normal(
            (0..m).map(|_| rng.random_range(-3.0..3.0)).collect(),
            rng.random_range(0.4..2.0),
        )
        .unwrap(),
    }
}

pub fn emit<R: Rng>(rng: &mut R, emissions: &EmissionModel, path: &[usize]) -> Vec<f64> {
    path.iter()
        .map(|&s| match emissions {
            EmissionModel::Poisson { rates } => Poisson::new(rates[s]).unwrap().sample(rng),
            EmissionModel::Normal { means, sigma } => {
                Normal::new(means[s], *sigma).unwrap().sample(rng)
            }
        })
        .collect()
}

/// A random path of the segment model: sorted distinct cut points.
pub fn random_segmentation<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    let mut cuts = rand::seq::index::sample(rng, n - 1, k - 1)
        .into_iter()
        .map(|c| c + 1)
        .collect::<Vec<_>>();
    cuts.sort_unstable();
    let mut path = vec![0; n];
    for (i, p) in path.iter_mut().enumerate() {
        *p = cuts.iter().filter(|&&c| c <= i).count();
    }
    path
}

pub fn random_level_path<R: Rng>(rng: &mut R, n: usize, exit_probs: &[f64]) -> Vec<usize> {
    let l = exit_probs.len();
    let mut path = vec![rng.random_range(0..l)];
    for _ in 1..n {
        let r = *path.last().unwrap();
        let next = if l > 1 && rng.random::<f64>() < exit_probs[r] {
            let mut s = rng.random_range(0..l - 1);
            if s >= r {
                s += 1;
            }
            s
        } else {
            r
        };
        path.push(next);
    }
    path
}

pub fn random_instance<R: Rng>(
    rng: &mut R,
    kind: ChainKind,
    family: Family,
    n: usize,
    m: usize,
) -> Instance {
    let emissions = random_emissions(rng, family, m);
    let (chain, truth) = match kind {
        ChainKind::Level => {
            let exit: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..0.95)).collect();
            let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = raw.iter().sum();
            let initial = raw.iter().map(|v| v / total).collect();
            let truth = random_level_path(rng, n, &exit);
            (ChainSpec::level_with_initial(exit, initial).unwrap(), truth)
        }
        ChainKind::Segment => {
            let eta = rng.random_range(0.1..0.9);
            (
                ChainSpec::segment_with_eta(m, eta).unwrap(),
                random_segmentation(rng, n, m),
            )
        }
    };
    let data = ObservationSeries::new(emit(rng, &emissions, &truth)).unwrap();
    Instance {
        chain,
        emissions,
        data,
        truth,
    }
}

pub fn family_of(i: usize) -> Family {
    if i.is_multiple_of(2) {
        Family::Poisson
    } else {
        Family::NormalHomoscedastic
    }
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(u, v)| (u - v).abs()))
        .fold(0.0, f64::max)
}
