//! Exhaustive reference computations for small problems.
//!
//! Everything here is deliberately naive: posteriors are obtained by summing
//! the joint probability of every admissible hidden path, without any of the
//! recursions used by [`crate::inference`]. Accumulation happens in log space
//! so that comparisons against the engine isolate recursion errors rather
//! than underflow. A plain linear-space forward-backward is also provided as
//! a reference for the log-space one.

use crate::error::{Error, Result};
use crate::inference::ChangePointPosterior;
use crate::logsum::logaddexp;
use crate::model::{ChainSpec, EmissionModel, Evidence, ObservationSeries};

/// Cap on the number of hidden paths an oracle may enumerate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_sequences: u128,
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self {
            max_sequences: 2_000_000,
        }
    }
}

impl EnumerationBudget {
    fn check(&self, required: u128) -> Result<()> {
        if required > self.max_sequences {
            Err(Error::BudgetExceeded {
                required,
                cap: self.max_sequences,
            })
        } else {
            Ok(())
        }
    }
}

/// Exact posteriors obtained by enumeration.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub log_evidence: f64,
    /// `n × M` state marginals.
    pub posterior_states: Vec<Vec<f64>>,
    /// `pair_posteriors[i][r][s] = P(S_{i-1} = r, S_i = s | E)` for
    /// zero-based `i >= 1`; entry 0 is empty.
    pub pair_posteriors: Vec<Vec<Vec<f64>>>,
    pub changepoints: ChangePointPosterior,
    /// Number of hidden paths summed.
    pub paths: u128,
}

/// Running log-space sums for every quantity the oracle reports.
struct Accumulator {
    total: f64,
    states: Vec<Vec<f64>>,
    pairs: Vec<Vec<Vec<f64>>>,
    changes: Vec<Vec<f64>>,
}

impl Accumulator {
    fn new(n: usize, m: usize, change_rows: usize) -> Self {
        let ninf = f64::NEG_INFINITY;
        Self {
            total: ninf,
            states: vec![vec![ninf; m]; n],
            pairs: (0..n)
                .map(|i| {
                    if i == 0 {
                        Vec::new()
                    } else {
                        vec![vec![ninf; m]; m]
                    }
                })
                .collect(),
            changes: vec![vec![ninf; n.saturating_sub(1)]; change_rows],
        }
    }

    fn add(&mut self, path: &[usize], weight: f64, segment: bool) {
        if weight == f64::NEG_INFINITY {
            return;
        }
        self.total = logaddexp(self.total, weight);
        for (i, &s) in path.iter().enumerate() {
            self.states[i][s] = logaddexp(self.states[i][s], weight);
            if i > 0 {
                let r = path[i - 1];
                self.pairs[i][r][s] = logaddexp(self.pairs[i][r][s], weight);
                if r != s {
                    let row = if segment { r } else { 0 };
                    self.changes[row][i - 1] = logaddexp(self.changes[row][i - 1], weight);
                }
            }
        }
    }

    fn finish(self, segment: bool, paths: u128) -> Result<OracleResult> {
        if self.total == f64::NEG_INFINITY {
            return Err(Error::UndefinedPosterior);
        }
        let z = self.total;
        let norm = |v: f64| (v - z).exp();
        let changes: Vec<Vec<f64>> = self
            .changes
            .into_iter()
            .map(|row| row.into_iter().map(norm).collect())
            .collect();
        Ok(OracleResult {
            log_evidence: z,
            posterior_states: self
                .states
                .into_iter()
                .map(|row| row.into_iter().map(norm).collect())
                .collect(),
            pair_posteriors: self
                .pairs
                .into_iter()
                .map(|t| {
                    t.into_iter()
                        .map(|row| row.into_iter().map(norm).collect())
                        .collect()
                })
                .collect(),
            changepoints: if segment {
                ChangePointPosterior::Segment(changes)
            } else {
                ChangePointPosterior::Level(changes.into_iter().next().unwrap_or_default())
            },
            paths,
        })
    }
}

/// Log emissions per position and state, evaluated one at a time.
fn emission_grid(emissions: &EmissionModel, data: &ObservationSeries) -> Result<Vec<Vec<f64>>> {
    (0..data.len())
        .map(|i| {
            (0..emissions.state_count())
                .map(|s| {
                    emissions.log_emission(s, data.get(i)).map_err(|e| match e {
                        Error::InvalidObservation { reason, .. } => Error::InvalidObservation {
                            position: i + 1,
                            reason,
                        },
                        other => other,
                    })
                })
                .collect()
        })
        .collect()
}

/// Level-chain parameters written out densely, straight from their
/// definition.
fn level_parameters(chain: &ChainSpec) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let ChainSpec::Level {
        exit_probs,
        initial,
    } = chain
    else {
        return Err(Error::InvalidParameter(
            "level oracle needs a level chain".into(),
        ));
    };
    let l = exit_probs.len();
    let alpha = (0..l)
        .map(|r| {
            (0..l)
                .map(|s| {
                    let p = if l == 1 {
                        1.0
                    } else if r == s {
                        1.0 - exit_probs[r]
                    } else {
                        exit_probs[r] / (l as f64 - 1.0)
                    };
                    p.ln()
                })
                .collect()
        })
        .collect();
    Ok((initial.iter().map(|p| p.ln()).collect(), alpha))
}

/// Sums the joint `μ(s_1) β(x_1) Π α(s_{i-1}, s_i) β(x_i)` over every
/// state sequence consistent with `ev`.
pub fn oracle_level(
    data: &ObservationSeries,
    chain: &ChainSpec,
    emissions: &EmissionModel,
    ev: &Evidence,
    budget: EnumerationBudget,
) -> Result<OracleResult> {
    let n = data.len();
    let l = chain.state_count();
    if emissions.state_count() != l || ev.len() != n || ev.state_count() != l {
        return Err(Error::DimensionMismatch(
            "oracle inputs disagree on sizes".into(),
        ));
    }
    let allowed: Vec<Vec<usize>> = (0..n).map(|i| ev.allowed_states(i)).collect();
    let required = allowed
        .iter()
        .try_fold(1u128, |acc, a| acc.checked_mul(a.len() as u128))
        .unwrap_or(u128::MAX);
    budget.check(required)?;

    let (log_init, log_alpha) = level_parameters(chain)?;
    let log_beta = emission_grid(emissions, data)?;
    let mut acc = Accumulator::new(n, l, 1);

    let mut digits = vec![0usize; n];
    let mut path = vec![0usize; n];
    loop {
        for i in 0..n {
            path[i] = allowed[i][digits[i]];
        }
        let mut w = log_init[path[0]] + log_beta[0][path[0]];
        for i in 1..n {
            w += log_alpha[path[i - 1]][path[i]] + log_beta[i][path[i]];
        }
        acc.add(&path, w, false);

        // odometer over the allowed sets
        let mut pos = n;
        loop {
            if pos == 0 {
                return acc.finish(false, required);
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < allowed[pos].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Exact posteriors of the segmentation model: every way of cutting the
/// series into `k` non-empty contiguous segments, weighted by its
/// likelihood under a uniform prior over segmentations.
#[derive(Debug, Clone)]
pub struct SegmentOracle {
    pub result: OracleResult,
    /// `log Σ_S Π_i β_{S_i}(x_i)` over all segmentations.
    pub log_likelihood_sum: f64,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, j| acc.saturating_mul(n - j) / (j + 1))
}

pub fn oracle_segment(
    data: &ObservationSeries,
    k: usize,
    emissions: &EmissionModel,
    budget: EnumerationBudget,
) -> Result<SegmentOracle> {
    let n = data.len();
    if k == 0 || emissions.state_count() != k {
        return Err(Error::DimensionMismatch(format!(
            "{k} segments with {} emission states",
            emissions.state_count()
        )));
    }
    if n < k {
        return Err(Error::InfeasibleEvidence(format!(
            "{k} segments cannot be placed on {n} observations"
        )));
    }
    let required = binomial(n as u128 - 1, k as u128 - 1);
    budget.check(required)?;
    let log_beta = emission_grid(emissions, data)?;
    let mut acc = Accumulator::new(n, k, k - 1);

    // cuts[j] = length of the prefix covered by segments 1..=j+1
    let mut cuts: Vec<usize> = (1..k).collect();
    let mut path = vec![0usize; n];
    loop {
        let mut seg = 0;
        let mut w = 0.0;
        for (i, p) in path.iter_mut().enumerate() {
            while seg < k - 1 && i >= cuts[seg] {
                seg += 1;
            }
            *p = seg;
            w += log_beta[i][seg];
        }
        acc.add(&path, w, true);

        // next combination of k-1 cut points from 1..n-1
        let mut j = k - 1;
        loop {
            if j == 0 {
                let log_likelihood_sum = acc.total;
                let mut result = acc.finish(true, required)?;
                result.log_evidence -= (required as f64).ln();
                return Ok(SegmentOracle {
                    result,
                    log_likelihood_sum,
                });
            }
            j -= 1;
            let limit = n - (k - 1 - j);
            if cuts[j] < limit {
                cuts[j] += 1;
                for t in j + 1..k - 1 {
                    cuts[t] = cuts[t - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Forward/backward tables in plain probabilities, with no rescaling.
#[derive(Debug, Clone)]
pub struct LinearLattice {
    pub forward: Vec<Vec<f64>>,
    pub backward: Vec<Vec<f64>>,
    pub evidence: f64,
}

impl LinearLattice {
    pub fn posterior_states(&self) -> Vec<Vec<f64>> {
        self.forward
            .iter()
            .zip(&self.backward)
            .map(|(f, b)| {
                f.iter()
                    .zip(b)
                    .map(|(f, b)| f * b / self.evidence)
                    .collect()
            })
            .collect()
    }
}

/// Textbook forward-backward in linear space. Underflows on long series,
/// which is the point.
pub fn linear_forward_backward(
    chain: &ChainSpec,
    emissions: &EmissionModel,
    data: &ObservationSeries,
    ev: &Evidence,
) -> Result<LinearLattice> {
    let n = data.len();
    let m = chain.state_count();
    ev.check_dims(n, m)?;
    let beta: Vec<Vec<f64>> = emission_grid(emissions, data)?
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.into_iter()
                .enumerate()
                .map(|(s, v)| if ev.is_allowed(i, s) { v.exp() } else { 0.0 })
                .collect()
        })
        .collect();
    let alpha: Vec<Vec<f64>> = (0..m)
        .map(|r| {
            (0..m)
                .map(|s| chain.transition_log_unchecked(r, s).exp())
                .collect()
        })
        .collect();

    let mut forward = vec![vec![0.0; m]; n];
    for s in 0..m {
        forward[0][s] = chain.initial_log(s).exp() * beta[0][s];
    }
    for i in 1..n {
        for s in 0..m {
            forward[i][s] =
                (0..m).map(|r| forward[i - 1][r] * alpha[r][s]).sum::<f64>() * beta[i][s];
        }
    }
    let mut backward = vec![vec![0.0; m]; n];
    for (s, b) in backward[n - 1].iter_mut().enumerate() {
        *b = if ev.is_allowed(n - 1, s) { 1.0 } else { 0.0 };
    }
    for i in (1..n).rev() {
        for r in 0..m {
            backward[i - 1][r] = (0..m)
                .map(|s| alpha[r][s] * beta[i][s] * backward[i][s])
                .sum();
        }
    }
    let evidence = forward[n - 1].iter().sum();
    Ok(LinearLattice {
        forward,
        backward,
        evidence,
    })
}
