mod common;

use common::{family_of, random_instance};
use cphmm::{
    log_joint, logsumexp, viterbi, ChainKind, ChainSpec, Direction, EmissionModel, Evidence,
    Lattice,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn logsumexp_is_shift_equivariant(
        z in prop::collection::vec(-50.0f64..50.0, 1..20),
        shift in -1000.0f64..1000.0,
    ) {
        let shifted: Vec<f64> = z.iter().map(|v| v + shift).collect();
        prop_assert!((logsumexp(&shifted) - (logsumexp(&z) + shift)).abs() < 1e-9);
    }

    #[test]
    fn logsumexp_bounded_by_max(z in prop::collection::vec(-700.0f64..700.0, 1..20)) {
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let v = logsumexp(&z);
        prop_assert!(v >= max);
        prop_assert!(v <= max + (z.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn level_rows_are_distributions(exit in prop::collection::vec(0.001f64..0.999, 1..8)) {
        let chain = ChainSpec::level(exit.clone()).unwrap();
        for r in 0..exit.len() {
            let total: f64 = (0..exit.len()).map(|s| chain.transition_log(r, s).unwrap().exp()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn separator_identity_holds(seed in any::<u64>(), level in any::<bool>(), n in 2usize..60, m in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = if level { ChainKind::Level } else { ChainKind::Segment };
        let n = n.max(m);
        let inst = random_instance(&mut rng, kind, family_of(seed as usize), n, m);
        let lattice = Lattice::standard(&inst.chain, &inst.emissions, &inst.data).unwrap();
        prop_assert!(lattice.log_evidence().is_finite());
        prop_assert!(lattice.max_separator_deviation() < 1e-9);
        for row in lattice.posterior_states().unwrap() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(row.iter().all(|p| (0.0..=1.0).contains(p)));
        }
    }

    #[test]
    fn viterbi_score_is_the_path_joint(seed in any::<u64>(), level in any::<bool>(), n in 3usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = if level { ChainKind::Level } else { ChainKind::Segment };
        let inst = random_instance(&mut rng, kind, family_of(seed as usize), n, 3);
        let ev = Evidence::for_chain(&inst.chain, n).unwrap();
        let (path, score) = viterbi(&inst.chain, &inst.emissions, &inst.data, &ev).unwrap();
        let direct = log_joint(&inst.chain, &inst.emissions, &inst.data, &path).unwrap();
        prop_assert!((score - direct).abs() < 1e-10);
        if !level {
            prop_assert_eq!(path[0], 0);
            prop_assert_eq!(path[n - 1], 2);
        }
    }
}

#[test]
fn log_emission_matches_direct_density() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let rates: Vec<f64> = (0..5).map(|_| rng.random_range(0.1..20.0)).collect();
    let poisson = EmissionModel::poisson(rates.clone()).unwrap();
    for _ in 0..1000 {
        let s = rng.random_range(0..5);
        let k = rng.random_range(0..40u32);
        let mut direct = (-rates[s]).exp();
        for j in 1..=k {
            direct *= rates[s] / j as f64;
        }
        let v = poisson.log_emission(s, Some(k as f64)).unwrap();
        assert!((v - direct.ln()).abs() < 1e-12, "λ={} k={k}", rates[s]);
    }

    let means: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
    let sigma = 0.8;
    let normal = EmissionModel::normal(means.clone(), sigma).unwrap();
    for _ in 0..1000 {
        let s = rng.random_range(0..5);
        let x: f64 = rng.random_range(-8.0..8.0);
        let z = (x - means[s]) / sigma;
        let direct = (-z * z / 2.0).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let v = normal.log_emission(s, Some(x)).unwrap();
        assert!((v - direct.ln()).abs() < 1e-12);
    }
}

#[test]
fn viterbi_dominates_sampled_paths() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (t, kind) in [ChainKind::Level, ChainKind::Segment]
        .into_iter()
        .enumerate()
    {
        let inst = random_instance(&mut rng, kind, family_of(t), 40, 3);
        let ev = Evidence::for_chain(&inst.chain, 40).unwrap();
        let (_, best) = viterbi(&inst.chain, &inst.emissions, &inst.data, &ev).unwrap();
        let lattice = Lattice::compute(&inst.chain, &inst.emissions, &inst.data, &ev).unwrap();
        for path in lattice.sample_paths(Direction::Forward, 1000, 9).unwrap() {
            let lj = log_joint(&inst.chain, &inst.emissions, &inst.data, &path).unwrap();
            assert!(best >= lj - 1e-10);
        }
    }
}

#[test]
fn segment_posteriors_ignore_eta() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for t in 0..10 {
        let inst = random_instance(&mut rng, ChainKind::Segment, family_of(t), 25, 4);
        let reference = Lattice::standard(
            &ChainSpec::segment_with_eta(4, 0.5).unwrap(),
            &inst.emissions,
            &inst.data,
        )
        .unwrap();
        for eta in [0.1, 0.9] {
            let other = Lattice::standard(
                &ChainSpec::segment_with_eta(4, eta).unwrap(),
                &inst.emissions,
                &inst.data,
            )
            .unwrap();
            assert!(
                common::max_abs_diff(
                    &reference.posterior_states().unwrap(),
                    &other.posterior_states().unwrap()
                ) < 1e-9
            );
        }
    }
}
