//! Observation, emission, chain and evidence types shared by inference and
//! estimation.
//!
//! State indices are zero-based throughout the library API. Change-point
//! positions follow the usual one-based convention: change-point `i` sits
//! between observations `i` and `i + 1`, which is also the length of the
//! prefix before the change.

use std::f64::consts::PI;

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Ordered observations `x_1..x_n`, some of which may be missing.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    values: Vec<f64>,
    missing: Vec<bool>,
}

impl ObservationSeries {
    /// A fully observed series.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        let missing = vec![false; values.len()];
        Self::from_parts(values, missing)
    }

    /// A series whose `missing_positions` (one-based) are unobserved. The
    /// stored values at those positions are ignored.
    pub fn with_missing(values: Vec<f64>, missing_positions: &[usize]) -> Result<Self> {
        let mut missing = vec![false; values.len()];
        for &p in missing_positions {
            if p == 0 || p > values.len() {
                return Err(Error::param(format!(
                    "missing position {p} outside 1..={}",
                    values.len()
                )));
            }
            missing[p - 1] = true;
        }
        Self::from_parts(values, missing)
    }

    /// Build from optional values; `None` marks a missing observation.
    pub fn from_options(values: impl IntoIterator<Item = Option<f64>>) -> Result<Self> {
        let (values, missing): (Vec<f64>, Vec<bool>) = values
            .into_iter()
            .map(|v| match v {
                Some(x) => (x, false),
                None => (0.0, true),
            })
            .unzip();
        Self::from_parts(values, missing)
    }

    fn from_parts(values: Vec<f64>, missing: Vec<bool>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("observation series must be non-empty"));
        }
        for (i, (&v, &m)) in values.iter().zip(&missing).enumerate() {
            if !m && !v.is_finite() {
                return Err(Error::InvalidObservation {
                    position: i + 1,
                    reason: format!("non-finite value {v}"),
                });
            }
        }
        Ok(Self { values, missing })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at zero-based index `i`, `None` when missing.
    pub fn get(&self, i: usize) -> Option<f64> {
        if self.missing[i] {
            None
        } else {
            Some(self.values[i])
        }
    }

    pub fn is_missing(&self, i: usize) -> bool {
        self.missing[i]
    }

    pub fn has_missing(&self) -> bool {
        self.missing.iter().any(|&m| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Observed values only, in order.
    pub fn observed(&self) -> impl Iterator<Item = f64> + '_ {
        self.iter().flatten()
    }

    pub fn observed_count(&self) -> usize {
        self.missing.iter().filter(|&&m| !m).count()
    }

    /// Checks that every observed value is admissible for `family`.
    pub fn validate_for(&self, family: Family) -> Result<()> {
        if family == Family::Poisson {
            for (i, x) in self.iter().enumerate() {
                if let Some(x) = x {
                    check_count(x, i + 1)?;
                }
            }
        }
        Ok(())
    }
}

fn check_count(x: f64, position: usize) -> Result<()> {
    if x < 0.0 || x.fract() != 0.0 {
        return Err(Error::InvalidObservation {
            position,
            reason: format!("Poisson observations must be non-negative integers, got {x}"),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Poisson,
    NormalHomoscedastic,
}

/// Per-state emission distributions.
#[derive(Debug, Clone, PartialEq)]
pub enum EmissionModel {
    Poisson {
        rates: Vec<f64>,
    },
    /// Normal emissions with per-state means and one shared standard deviation.
    Normal {
        means: Vec<f64>,
        sigma: f64,
    },
}

impl EmissionModel {
    pub fn poisson(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::param("at least one Poisson rate is required"));
        }
        if let Some(r) = rates.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::param(format!("Poisson rate must be > 0, got {r}")));
        }
        Ok(EmissionModel::Poisson { rates })
    }

    pub fn normal(means: Vec<f64>, sigma: f64) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::param("at least one normal mean is required"));
        }
        if means.iter().any(|m| !m.is_finite()) {
            return Err(Error::param("normal means must be finite"));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::param(format!("sigma must be > 0, got {sigma}")));
        }
        Ok(EmissionModel::Normal { means, sigma })
    }

    pub fn family(&self) -> Family {
        match self {
            EmissionModel::Poisson { .. } => Family::Poisson,
            EmissionModel::Normal { .. } => Family::NormalHomoscedastic,
        }
    }

    pub fn state_count(&self) -> usize {
        self.location().len()
    }

    /// Rates (Poisson) or means (normal).
    pub fn location(&self) -> &[f64] {
        match self {
            EmissionModel::Poisson { rates } => rates,
            EmissionModel::Normal { means, .. } => means,
        }
    }

    /// `log β_state(x)`; a missing observation contributes `log 1 = 0`.
    pub fn log_emission(&self, state: usize, x: Option<f64>) -> Result<f64> {
        if state >= self.state_count() {
            return Err(Error::param(format!(
                "state {state} out of range for {} states",
                self.state_count()
            )));
        }
        let Some(x) = x else {
            return Ok(0.0);
        };
        match self {
            EmissionModel::Poisson { rates } => {
                check_count(x, 0)?;
                Ok(poisson_ln_pmf(rates[state], x))
            }
            EmissionModel::Normal { means, sigma } => {
                if !x.is_finite() {
                    return Err(Error::InvalidObservation {
                        position: 0,
                        reason: format!("non-finite value {x}"),
                    });
                }
                Ok(normal_ln_pdf(means[state], *sigma, x))
            }
        }
    }

    /// `n × M` table of log emissions for `data`, zero at missing positions.
    pub fn log_emission_table(&self, data: &ObservationSeries) -> Result<Vec<Vec<f64>>> {
        data.validate_for(self.family())?;
        let m = self.state_count();
        let table = data
            .iter()
            .map(|x| match x {
                None => vec![0.0; m],
                Some(x) => match self {
                    EmissionModel::Poisson { rates } => {
                        let log_fact = ln_gamma(x + 1.0);
                        rates.iter().map(|&l| x * l.ln() - l - log_fact).collect()
                    }
                    EmissionModel::Normal { means, sigma } => means
                        .iter()
                        .map(|&mu| normal_ln_pdf(mu, *sigma, x))
                        .collect(),
                },
            })
            .collect();
        Ok(table)
    }
}

fn poisson_ln_pmf(rate: f64, k: f64) -> f64 {
    k * rate.ln() - rate - ln_gamma(k + 1.0)
}

fn normal_ln_pdf(mean: f64, sigma: f64, x: f64) -> f64 {
    let z = (x - mean) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * PI).ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChainKind {
    Level,
    Segment,
}

pub const DEFAULT_SEGMENT_ETA: f64 = 0.5;

/// Homogeneous hidden chain of either model family.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainSpec {
    /// `L` levels; leaving level `r` has probability `exit_probs[r]`, spread
    /// evenly over the other levels.
    Level {
        exit_probs: Vec<f64>,
        initial: Vec<f64>,
    },
    /// `K` segments visited in order; the index moves up by one with
    /// probability `eta`. The absorbing overflow state is never represented:
    /// conditioning on ending in the last segment gives it zero mass.
    Segment { states: usize, eta: f64 },
}

impl ChainSpec {
    /// Level chain with uniform initial distribution.
    pub fn level(exit_probs: Vec<f64>) -> Result<Self> {
        let l = exit_probs.len();
        Self::level_with_initial(exit_probs, vec![1.0 / l as f64; l.max(1)])
    }

    pub fn level_with_initial(exit_probs: Vec<f64>, initial: Vec<f64>) -> Result<Self> {
        if exit_probs.is_empty() {
            return Err(Error::param("a level chain needs at least one level"));
        }
        if let Some(e) = exit_probs.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return Err(Error::param(format!(
                "exit probability must lie in (0,1), got {e}"
            )));
        }
        if initial.len() != exit_probs.len() {
            return Err(Error::dims(format!(
                "initial distribution has {} entries for {} levels",
                initial.len(),
                exit_probs.len()
            )));
        }
        if initial.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::param("initial probabilities must be non-negative"));
        }
        let total: f64 = initial.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!(
                "initial distribution sums to {total}, not 1"
            )));
        }
        Ok(ChainSpec::Level {
            exit_probs,
            initial,
        })
    }

    pub fn segment(states: usize) -> Result<Self> {
        Self::segment_with_eta(states, DEFAULT_SEGMENT_ETA)
    }

    pub fn segment_with_eta(states: usize, eta: f64) -> Result<Self> {
        if states == 0 {
            return Err(Error::param("a segment chain needs at least one segment"));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::param(format!("eta must lie in (0,1), got {eta}")));
        }
        Ok(ChainSpec::Segment { states, eta })
    }

    pub fn kind(&self) -> ChainKind {
        match self {
            ChainSpec::Level { .. } => ChainKind::Level,
            ChainSpec::Segment { .. } => ChainKind::Segment,
        }
    }

    pub fn state_count(&self) -> usize {
        match self {
            ChainSpec::Level { exit_probs, .. } => exit_probs.len(),
            ChainSpec::Segment { states, .. } => *states,
        }
    }

    /// `log μ(s)`. Segment chains always start in the first segment.
    pub fn initial_log(&self, s: usize) -> f64 {
        match self {
            ChainSpec::Level { initial, .. } => initial[s].ln(),
            ChainSpec::Segment { .. } => {
                if s == 0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// `log α(r, s)`.
    pub fn transition_log(&self, r: usize, s: usize) -> Result<f64> {
        let m = self.state_count();
        if r >= m || s >= m {
            return Err(Error::param(format!(
                "transition ({r},{s}) out of range for {m} states"
            )));
        }
        Ok(self.transition_log_unchecked(r, s))
    }

    pub(crate) fn transition_log_unchecked(&self, r: usize, s: usize) -> f64 {
        match self {
            ChainSpec::Level { exit_probs, .. } => {
                let l = exit_probs.len();
                if l == 1 {
                    // a single level cannot be left
                    0.0
                } else if r == s {
                    (-exit_probs[r]).ln_1p()
                } else {
                    (exit_probs[r] / (l - 1) as f64).ln()
                }
            }
            ChainSpec::Segment { eta, .. } => {
                if s == r {
                    (-eta).ln_1p()
                } else if s == r + 1 {
                    eta.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Non-zero transitions in both directions, for sparse recursions.
    pub(crate) fn transitions(&self) -> Transitions {
        let m = self.state_count();
        let mut incoming = vec![Vec::new(); m];
        let mut outgoing = vec![Vec::new(); m];
        let mut push = |r: usize, s: usize| {
            let w = self.transition_log_unchecked(r, s);
            if w > f64::NEG_INFINITY {
                incoming[s].push((r, w));
                outgoing[r].push((s, w));
            }
        };
        match self {
            ChainSpec::Level { .. } => {
                for r in 0..m {
                    for s in 0..m {
                        push(r, s);
                    }
                }
            }
            ChainSpec::Segment { .. } => {
                for r in 0..m {
                    push(r, r);
                    if r + 1 < m {
                        push(r, r + 1);
                    }
                }
            }
        }
        Transitions { incoming, outgoing }
    }
}

/// Sparse adjacency of a chain: `incoming[s]` lists `(r, log α(r,s))`,
/// `outgoing[r]` lists `(s, log α(r,s))`, both in ascending state order.
#[derive(Debug, Clone)]
pub(crate) struct Transitions {
    pub incoming: Vec<Vec<(usize, f64)>>,
    pub outgoing: Vec<Vec<(usize, f64)>>,
}

/// Per-position sets of admissible hidden states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    allowed: Vec<Vec<bool>>,
}

impl Evidence {
    /// No state constraints.
    pub fn level(n: usize, states: usize) -> Result<Self> {
        if n == 0 || states == 0 {
            return Err(Error::param("evidence needs n >= 1 and at least one state"));
        }
        Ok(Self {
            allowed: vec![vec![true; states]; n],
        })
    }

    /// Start in the first segment and end in the last.
    pub fn segment(n: usize, states: usize) -> Result<Self> {
        if n == 0 || states == 0 {
            return Err(Error::param("evidence needs n >= 1 and at least one state"));
        }
        if n < states {
            return Err(Error::InfeasibleEvidence(format!(
                "{states} segments cannot be placed on {n} observations"
            )));
        }
        let mut ev = Self::level(n, states)?;
        ev.pin(0, 0)?;
        ev.pin(n - 1, states - 1)?;
        Ok(ev)
    }

    /// Evidence matching the chain kind.
    pub fn for_chain(chain: &ChainSpec, n: usize) -> Result<Self> {
        match chain.kind() {
            ChainKind::Level => Self::level(n, chain.state_count()),
            ChainKind::Segment => Self::segment(n, chain.state_count()),
        }
    }

    pub fn len(&self) -> usize {
        self.allowed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.allowed.is_empty()
    }

    pub fn state_count(&self) -> usize {
        self.allowed[0].len()
    }

    pub fn is_allowed(&self, i: usize, s: usize) -> bool {
        self.allowed[i][s]
    }

    /// Allowed states at zero-based position `i`.
    pub fn allowed_states(&self, i: usize) -> Vec<usize> {
        (0..self.state_count())
            .filter(|&s| self.allowed[i][s])
            .collect()
    }

    /// Excludes state `s` at position `i`. Removing the last allowed state
    /// is rejected.
    pub fn forbid(&mut self, i: usize, s: usize) -> Result<&mut Self> {
        self.check(i, s)?;
        if self.allowed[i].iter().filter(|&&a| a).count() == 1 && self.allowed[i][s] {
            return Err(Error::InfeasibleEvidence(format!(
                "position {} would have no admissible state",
                i + 1
            )));
        }
        self.allowed[i][s] = false;
        Ok(self)
    }

    /// Restricts position `i` to state `s` alone.
    pub fn pin(&mut self, i: usize, s: usize) -> Result<&mut Self> {
        self.check(i, s)?;
        for (t, a) in self.allowed[i].iter_mut().enumerate() {
            *a = t == s;
        }
        Ok(self)
    }

    fn check(&self, i: usize, s: usize) -> Result<()> {
        if i >= self.len() || s >= self.state_count() {
            return Err(Error::param(format!(
                "({i},{s}) outside evidence of {} positions and {} states",
                self.len(),
                self.state_count()
            )));
        }
        Ok(())
    }

    pub(crate) fn check_dims(&self, n: usize, m: usize) -> Result<()> {
        if self.len() != n || self.state_count() != m {
            return Err(Error::dims(format!(
                "evidence is {}x{}, model is {n}x{m}",
                self.len(),
                self.state_count()
            )));
        }
        Ok(())
    }
}

/// Log of the joint `P(S_{1:n} = path, X_{1:n} = x)` evaluated term by term.
/// Evidence constraints on states are not applied here.
pub fn log_joint(
    chain: &ChainSpec,
    emissions: &EmissionModel,
    data: &ObservationSeries,
    path: &[usize],
) -> Result<f64> {
    if path.len() != data.len() {
        return Err(Error::dims(format!(
            "path has {} states for {} observations",
            path.len(),
            data.len()
        )));
    }
    let mut total = chain.initial_log(path[0]) + emissions.log_emission(path[0], data.get(0))?;
    for i in 1..path.len() {
        total += chain.transition_log(path[i - 1], path[i])?;
        total += emissions.log_emission(path[i], data.get(i))?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_log_emission_at_zero() {
        let m = EmissionModel::poisson(vec![1.0]).unwrap();
        assert!((m.log_emission(0, Some(0.0)).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn standard_normal_log_density_at_zero() {
        let m = EmissionModel::normal(vec![0.0], 1.0).unwrap();
        let v = m.log_emission(0, Some(0.0)).unwrap();
        assert!((v - (-0.918_938_533_204_672_7)).abs() < 1e-12);
    }

    #[test]
    fn missing_observation_is_neutral() {
        let p = EmissionModel::poisson(vec![3.0, 7.0]).unwrap();
        let n = EmissionModel::normal(vec![0.0, 2.0], 0.5).unwrap();
        assert_eq!(p.log_emission(1, None).unwrap(), 0.0);
        assert_eq!(n.log_emission(0, None).unwrap(), 0.0);
    }

    #[test]
    fn poisson_rejects_non_counts() {
        let p = EmissionModel::poisson(vec![3.0]).unwrap();
        assert!(matches!(
            p.log_emission(0, Some(-1.0)),
            Err(Error::InvalidObservation { .. })
        ));
        assert!(matches!(
            p.log_emission(0, Some(1.5)),
            Err(Error::InvalidObservation { .. })
        ));
        let data = ObservationSeries::new(vec![1.0, 2.5]).unwrap();
        assert!(matches!(
            p.log_emission_table(&data),
            Err(Error::InvalidObservation { position: 2, .. })
        ));
    }

    #[test]
    fn emission_parameters_validated() {
        assert!(EmissionModel::poisson(vec![1.0, 0.0]).is_err());
        assert!(EmissionModel::normal(vec![0.0], 0.0).is_err());
        assert!(EmissionModel::normal(vec![], 1.0).is_err());
    }

    #[test]
    fn level_transition_values() {
        let c = ChainSpec::level(vec![0.03, 0.03, 0.03]).unwrap();
        assert!((c.transition_log(0, 0).unwrap() - 0.97f64.ln()).abs() < 1e-15);
        assert!((c.transition_log(0, 2).unwrap() - 0.015f64.ln()).abs() < 1e-15);
        let c2 = ChainSpec::level(vec![0.5, 0.2]).unwrap();
        assert!((c2.transition_log(0, 1).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        assert!(c2.transition_log(0, 2).is_err());
    }

    #[test]
    fn level_rows_sum_to_one() {
        let c = ChainSpec::level(vec![0.1, 0.4, 0.7, 0.95]).unwrap();
        for r in 0..4 {
            let total: f64 = (0..4).map(|s| c.transition_log(r, s).unwrap().exp()).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        let single = ChainSpec::level(vec![0.3]).unwrap();
        assert_eq!(single.transition_log(0, 0).unwrap(), 0.0);
    }

    #[test]
    fn segment_transitions_are_sparse() {
        let c = ChainSpec::segment(3).unwrap();
        assert_eq!(c.transition_log(0, 2).unwrap(), f64::NEG_INFINITY);
        assert_eq!(c.transition_log(1, 0).unwrap(), f64::NEG_INFINITY);
        assert!((c.transition_log(2, 2).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        for k in 1..6 {
            let c = ChainSpec::segment(k).unwrap();
            let finite = (0..k)
                .flat_map(|r| (0..k).map(move |s| (r, s)))
                .filter(|&(r, s)| c.transition_log(r, s).unwrap().is_finite())
                .count();
            assert_eq!(finite, 2 * k - 1);
        }
    }

    #[test]
    fn chain_parameters_validated() {
        assert!(ChainSpec::level(vec![]).is_err());
        assert!(ChainSpec::level(vec![0.0, 0.5]).is_err());
        assert!(ChainSpec::level_with_initial(vec![0.5, 0.5], vec![0.3, 0.3]).is_err());
        assert!(ChainSpec::segment(0).is_err());
        assert!(ChainSpec::segment_with_eta(2, 1.0).is_err());
    }

    #[test]
    fn segment_evidence_pins_ends() {
        let ev = Evidence::segment(5, 3).unwrap();
        assert_eq!(ev.allowed_states(0), vec![0]);
        for i in 1..4 {
            assert_eq!(ev.allowed_states(i), vec![0, 1, 2]);
        }
        assert_eq!(ev.allowed_states(4), vec![2]);
    }

    #[test]
    fn level_evidence_single_position() {
        let ev = Evidence::level(1, 4).unwrap();
        assert_eq!(ev.allowed_states(0), vec![0, 1, 2, 3]);
    }

    #[test]
    fn too_short_for_segments() {
        assert!(matches!(
            Evidence::segment(2, 3),
            Err(Error::InfeasibleEvidence(_))
        ));
    }

    #[test]
    fn forbidding_every_state_is_rejected() {
        let mut ev = Evidence::level(3, 2).unwrap();
        ev.forbid(1, 0).unwrap();
        assert!(ev.forbid(1, 1).is_err());
        assert_eq!(ev.allowed_states(1), vec![1]);
    }

    #[test]
    fn missing_positions_are_one_based() {
        let s = ObservationSeries::with_missing(vec![1.0, 99.0, 3.0], &[2]).unwrap();
        assert_eq!(s.get(1), None);
        assert_eq!(s.observed().collect::<Vec<_>>(), vec![1.0, 3.0]);
        assert!(ObservationSeries::with_missing(vec![1.0], &[0]).is_err());
        assert!(ObservationSeries::with_missing(vec![1.0], &[2]).is_err());
        assert!(ObservationSeries::new(vec![]).is_err());
    }

    #[test]
    fn log_joint_of_a_segment_path() {
        let chain = ChainSpec::segment(2).unwrap();
        let em = EmissionModel::poisson(vec![1.0, 5.0]).unwrap();
        let data = ObservationSeries::new(vec![0.0, 1.0, 6.0]).unwrap();
        let lj = log_joint(&chain, &em, &data, &[0, 1, 1]).unwrap();
        let expected = -1.0
            + 0.5f64.ln()
            + (5.0f64.ln() - 5.0)
            + 0.5f64.ln()
            + (6.0 * 5.0f64.ln() - 5.0 - 720.0f64.ln());
        assert!((lj - expected).abs() < 1e-12);
    }
}
