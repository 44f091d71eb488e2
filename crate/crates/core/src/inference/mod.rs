//! Log-space forward-backward under general evidence.
//!
//! Evidence enters the recursions through a per-position log potential
//! `φ_i(s) = log β_s(x_i)` for allowed states and `-inf` otherwise, where a
//! missing observation contributes `log 1`. The start/end constraints of the
//! segment model and arbitrary state exclusions are all handled this way, so
//! there is a single recursion for every kind of evidence.
//!
//! Segment chains only visit the `(r, r)` and `(r, r + 1)` transitions, which
//! keeps their cost at `O(nK)`; level chains are dense, `O(nL²)`.

mod posterior;
mod sampling;
mod viterbi;

pub use posterior::ChangePointPosterior;
pub use sampling::Direction;
pub use viterbi::viterbi;

use crate::error::{Error, Result};
use crate::logsum::logsumexp;
use crate::model::{ChainKind, ChainSpec, EmissionModel, Evidence, ObservationSeries, Transitions};

/// Forward and backward log tables together with the log probability of
/// the evidence. Row `i` corresponds to observation `i + 1`.
#[derive(Debug, Clone)]
pub struct Lattice {
    log_forward: Vec<Vec<f64>>,
    log_backward: Vec<Vec<f64>>,
    log_evidence: f64,
    potentials: Vec<Vec<f64>>,
    chain: ChainSpec,
    transitions: Transitions,
}

/// Per-position log potentials with evidence masks folded in.
pub(crate) fn log_potentials(
    chain: &ChainSpec,
    emissions: &EmissionModel,
    data: &ObservationSeries,
    ev: &Evidence,
) -> Result<Vec<Vec<f64>>> {
    let m = chain.state_count();
    if emissions.state_count() != m {
        return Err(Error::DimensionMismatch(format!(
            "chain has {m} states, emission model has {}",
            emissions.state_count()
        )));
    }
    ev.check_dims(data.len(), m)?;
    let mut table = emissions.log_emission_table(data)?;
    for (i, row) in table.iter_mut().enumerate() {
        for (s, v) in row.iter_mut().enumerate() {
            if !ev.is_allowed(i, s) {
                *v = f64::NEG_INFINITY;
            }
        }
    }
    Ok(table)
}

fn forward_table(chain: &ChainSpec, tr: &Transitions, phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = phi.len();
    let m = chain.state_count();
    let mut f = Vec::with_capacity(n);
    f.push(
        (0..m)
            .map(|s| chain.initial_log(s) + phi[0][s])
            .collect::<Vec<_>>(),
    );
    let mut terms = Vec::with_capacity(m);
    for i in 1..n {
        let prev: &Vec<f64> = &f[i - 1];
        let row = (0..m)
            .map(|s| {
                if phi[i][s] == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                terms.clear();
                terms.extend(tr.incoming[s].iter().map(|&(r, w)| prev[r] + w));
                if terms.is_empty() {
                    f64::NEG_INFINITY
                } else {
                    logsumexp(&terms) + phi[i][s]
                }
            })
            .collect();
        f.push(row);
    }
    f
}

fn backward_table(chain: &ChainSpec, tr: &Transitions, phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = phi.len();
    let m = chain.state_count();
    let mut b = vec![Vec::new(); n];
    // B_n ≡ 1 on allowed states; the end constraint lives in φ_n.
    b[n - 1] = phi[n - 1]
        .iter()
        .map(|&p| if p == f64::NEG_INFINITY { p } else { 0.0 })
        .collect();
    let mut terms = Vec::with_capacity(m);
    for i in (1..n).rev() {
        let row = (0..m)
            .map(|r| {
                terms.clear();
                terms.extend(tr.outgoing[r].iter().map(|&(s, w)| w + phi[i][s] + b[i][s]));
                if terms.is_empty() {
                    f64::NEG_INFINITY
                } else {
                    logsumexp(&terms)
                }
            })
            .collect();
        b[i - 1] = row;
    }
    b
}

/// `log F_i(s)` for every position and state.
pub fn forward(
    chain: &ChainSpec,
    emissions: &EmissionModel,
    data: &ObservationSeries,
    ev: &Evidence,
) -> Result<Vec<Vec<f64>>> {
    let phi = log_potentials(chain, emissions, data, ev)?;
    Ok(forward_table(chain, &chain.transitions(), &phi))
}

/// `log B_i(s)` for every position and state.
pub fn backward(
    chain: &ChainSpec,
    emissions: &EmissionModel,
    data: &ObservationSeries,
    ev: &Evidence,
) -> Result<Vec<Vec<f64>>> {
    let phi = log_potentials(chain, emissions, data, ev)?;
    Ok(backward_table(chain, &chain.transitions(), &phi))
}

impl Lattice {
    /// Runs both recursions. Infeasible evidence is not an error here; it
    /// yields `log_evidence == -inf`.
    pub fn compute(
        chain: &ChainSpec,
        emissions: &EmissionModel,
        data: &ObservationSeries,
        ev: &Evidence,
    ) -> Result<Self> {
        let potentials = log_potentials(chain, emissions, data, ev)?;
        let transitions = chain.transitions();
        let log_forward = forward_table(chain, &transitions, &potentials);
        let log_backward = backward_table(chain, &transitions, &potentials);
        let log_evidence = logsumexp(&log_forward[log_forward.len() - 1]);
        assert!(!log_evidence.is_nan(), "NaN log evidence");
        let lattice = Lattice {
            log_forward,
            log_backward,
            log_evidence,
            potentials,
            chain: chain.clone(),
            transitions,
        };
        debug_assert!(
            !lattice.log_evidence.is_finite()
                || lattice.max_separator_deviation() <= 1e-9 * lattice.log_evidence.abs().max(1.0),
            "separator identity violated"
        );
        Ok(lattice)
    }

    /// Convenience for the standard evidence of the chain's kind.
    pub fn standard(
        chain: &ChainSpec,
        emissions: &EmissionModel,
        data: &ObservationSeries,
    ) -> Result<Self> {
        let ev = Evidence::for_chain(chain, data.len())?;
        Self::compute(chain, emissions, data, &ev)
    }

    pub fn len(&self) -> usize {
        self.log_forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_forward.is_empty()
    }

    pub fn state_count(&self) -> usize {
        self.chain.state_count()
    }

    pub fn kind(&self) -> ChainKind {
        self.chain.kind()
    }

    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn log_forward(&self) -> &[Vec<f64>] {
        &self.log_forward
    }

    pub fn log_backward(&self) -> &[Vec<f64>] {
        &self.log_backward
    }

    /// `log P(E) = logsumexp_s log F_n(s)`.
    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    /// `logsumexp_s (log F_i(s) + log B_i(s))` at zero-based position `i`;
    /// equal to [`Self::log_evidence`] for every `i`.
    pub fn separator_log_evidence(&self, i: usize) -> f64 {
        let terms: Vec<f64> = self.log_forward[i]
            .iter()
            .zip(&self.log_backward[i])
            .map(|(f, b)| f + b)
            .collect();
        logsumexp(&terms)
    }

    /// Largest `|separator_log_evidence(i) - log_evidence|` over positions.
    pub fn max_separator_deviation(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let v = self.separator_log_evidence(i);
                if v == self.log_evidence {
                    0.0
                } else {
                    (v - self.log_evidence).abs()
                }
            })
            .fold(0.0, f64::max)
    }

    fn require_evidence(&self) -> Result<()> {
        if self.log_evidence.is_finite() {
            Ok(())
        } else {
            Err(Error::UndefinedPosterior)
        }
    }
}
