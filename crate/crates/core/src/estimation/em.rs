use log::{debug, warn};

use super::greedy::greedy_ls_changepoints;
use super::mle::{mle_from_segmentation, mle_with_levels, PARAMETER_FLOOR};
use crate::error::{Error, Result};
use crate::inference::Lattice;
use crate::model::{ChainKind, ChainSpec, EmissionModel, Evidence, Family, ObservationSeries};

/// Posterior mass below which a state is treated as unoccupied.
pub const DEGENERATE_MASS: f64 = 1e-12;

/// Exit probabilities are kept inside `[ETA_FLOOR, 1 - ETA_FLOOR]`.
const ETA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub max_iterations: usize,
    /// Stop once the absolute change in log evidence drops below this.
    pub tolerance: f64,
    pub family: Family,
    pub kind: ChainKind,
    pub states: usize,
}

impl FitConfig {
    pub fn new(family: Family, kind: ChainKind, states: usize) -> Self {
        Self {
            max_iterations: 500,
            tolerance: 1e-8,
            family,
            kind,
            states,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be >= 1".into(),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(Error::InvalidParameter("tolerance must be > 0".into()));
        }
        if self.states == 0 {
            return Err(Error::InvalidParameter("state count must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub emissions: EmissionModel,
    pub chain: ChainSpec,
    /// Log evidence at every E-step; the last entry belongs to the returned
    /// parameters.
    pub log_evidence_trace: Vec<f64>,
    pub converged: bool,
    pub initial_changepoints: Option<Vec<usize>>,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn log_evidence(&self) -> f64 {
        *self
            .log_evidence_trace
            .last()
            .expect("trace is never empty")
    }

    /// Number of M-steps applied.
    pub fn iterations(&self) -> usize {
        self.log_evidence_trace.len() - 1
    }
}

/// Expectation-maximisation under the standard evidence of the configured
/// model kind.
pub fn em_fit(
    data: &ObservationSeries,
    config: &FitConfig,
    init: (EmissionModel, ChainSpec),
) -> Result<FitResult> {
    let ev = Evidence::for_chain(&init.1, data.len())?;
    em_fit_with_evidence(data, config, init, &ev)
}

/// Expectation-maximisation under arbitrary evidence.
pub fn em_fit_with_evidence(
    data: &ObservationSeries,
    config: &FitConfig,
    init: (EmissionModel, ChainSpec),
    ev: &Evidence,
) -> Result<FitResult> {
    config.validate()?;
    let (mut emissions, mut chain) = init;
    if emissions.family() != config.family || chain.kind() != config.kind {
        return Err(Error::InvalidParameter(
            "initial parameters do not match the fit configuration".into(),
        ));
    }
    if chain.state_count() != config.states || emissions.state_count() != config.states {
        return Err(Error::DimensionMismatch(format!(
            "configured for {} states, initial parameters have {}",
            config.states,
            chain.state_count()
        )));
    }

    let mut trace: Vec<f64> = Vec::new();
    let mut warnings = Vec::new();
    let mut converged = false;
    loop {
        let lattice = Lattice::compute(&chain, &emissions, data, ev)?;
        let le = lattice.log_evidence();
        if !le.is_finite() {
            return Err(Error::InfeasibleEvidence(
                "evidence has probability zero under the current parameters".into(),
            ));
        }
        debug!("EM step {}: log evidence {le}", trace.len());
        if let Some(&prev) = trace.last() {
            if (le - prev).abs() < config.tolerance {
                trace.push(le);
                converged = true;
                break;
            }
        }
        trace.push(le);
        if trace.len() >= config.max_iterations {
            break;
        }

        let posterior = lattice.posterior_states()?;
        let (updated, frozen) = update_emissions(data, &posterior, &emissions)?;
        for s in frozen {
            let msg = format!(
                "state {} has negligible posterior mass at iteration {}; emission frozen",
                s + 1,
                trace.len()
            );
            warn!("{msg}");
            warnings.push(msg);
        }
        emissions = updated;
        if let ChainSpec::Level { initial, .. } = &chain {
            let exit_probs = update_exit_probs(&lattice)?;
            chain = ChainSpec::level_with_initial(exit_probs, initial.clone())?;
        }
    }

    Ok(FitResult {
        emissions,
        chain,
        log_evidence_trace: trace,
        converged,
        initial_changepoints: None,
        warnings,
    })
}

/// Emission M-step from per-position state posteriors. Missing positions
/// carry no weight. Returns the updated model and the states whose
/// parameters were left unchanged for lack of posterior mass.
pub fn update_emissions(
    data: &ObservationSeries,
    posterior: &[Vec<f64>],
    current: &EmissionModel,
) -> Result<(EmissionModel, Vec<usize>)> {
    let m = current.state_count();
    let mut mass = vec![0.0; m];
    let mut weighted = vec![0.0; m];
    for (x, row) in data.iter().zip(posterior) {
        if let Some(x) = x {
            for s in 0..m {
                mass[s] += row[s];
                weighted[s] += row[s] * x;
            }
        }
    }
    let mut frozen = Vec::new();
    let location: Vec<f64> = (0..m)
        .map(|s| {
            if mass[s] < DEGENERATE_MASS {
                frozen.push(s);
                current.location()[s]
            } else {
                weighted[s] / mass[s]
            }
        })
        .collect();

    let updated = match current {
        EmissionModel::Poisson { .. } => EmissionModel::poisson(
            location
                .into_iter()
                .map(|l| l.max(PARAMETER_FLOOR))
                .collect(),
        )?,
        EmissionModel::Normal { .. } => {
            let mut ss = 0.0;
            for (x, row) in data.iter().zip(posterior) {
                if let Some(x) = x {
                    for s in 0..m {
                        ss += row[s] * (x - location[s]).powi(2);
                    }
                }
            }
            let var = ss / data.observed_count() as f64;
            EmissionModel::normal(location, var.sqrt().max(PARAMETER_FLOOR))?
        }
    };
    Ok((updated, frozen))
}

/// Level-chain M-step: expected exits from each level over its expected
/// occupancy on positions `1..n-1`.
pub fn update_exit_probs(lattice: &Lattice) -> Result<Vec<f64>> {
    let ChainSpec::Level { exit_probs, .. } = lattice.chain() else {
        return Err(Error::InvalidParameter(
            "exit probabilities exist only for level chains".into(),
        ));
    };
    let l = exit_probs.len();
    if l == 1 {
        return Ok(exit_probs.clone());
    }
    let mut leave = vec![0.0; l];
    let mut occupy = vec![0.0; l];
    for i in 1..lattice.len() {
        let pairs = lattice.pair_posteriors(i)?;
        for (r, row) in pairs.iter().enumerate() {
            for (s, &p) in row.iter().enumerate() {
                occupy[r] += p;
                if r != s {
                    leave[r] += p;
                }
            }
        }
    }
    Ok((0..l)
        .map(|r| {
            if occupy[r] < DEGENERATE_MASS {
                exit_probs[r]
            } else {
                (leave[r] / occupy[r]).clamp(ETA_FLOOR, 1.0 - ETA_FLOOR)
            }
        })
        .collect())
}

/// Greedy least-squares change-points, segment-wise estimates, then EM.
///
/// For level models `levels` maps each greedy segment to a level; its
/// length fixes the number of segments searched. Without it every segment
/// is its own level.
pub fn fit_from_greedy(
    data: &ObservationSeries,
    config: &FitConfig,
    levels: Option<&[usize]>,
) -> Result<FitResult> {
    let (init, cps) = greedy_initialisation(data, config, levels)?;
    let mut fit = em_fit(data, config, init)?;
    fit.initial_changepoints = Some(cps);
    Ok(fit)
}

/// Initial parameters from the greedy segmentation, with the change-points
/// used.
pub fn greedy_initialisation(
    data: &ObservationSeries,
    config: &FitConfig,
    levels: Option<&[usize]>,
) -> Result<((EmissionModel, ChainSpec), Vec<usize>)> {
    config.validate()?;
    let segments = match (config.kind, levels) {
        (ChainKind::Level, Some(levels)) => levels.len(),
        _ => config.states,
    };
    let cps = greedy_ls_changepoints(data, segments)?;
    let init = match (config.kind, levels) {
        (ChainKind::Level, Some(levels)) => mle_with_levels(data, &cps, config.family, levels)?,
        (kind, _) => mle_from_segmentation(data, &cps, config.family, kind)?,
    };
    if init.1.state_count() != config.states {
        return Err(Error::DimensionMismatch(format!(
            "level assignment yields {} levels, configured for {}",
            init.1.state_count(),
            config.states
        )));
    }
    Ok((init, cps))
}
