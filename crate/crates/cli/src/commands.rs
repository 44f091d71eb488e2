use log::{info, warn};
use serde_json::json;

use cphmm::estimation::{
    em_fit, greedy_initialisation, greedy_ls_changepoints, merge_levels, segment_means, FitConfig,
    FitResult,
};
use cphmm::oracle::{oracle_level, oracle_segment, EnumerationBudget};
use cphmm::{
    viterbi, ChainKind, ChainSpec, ChangePointPosterior, Direction, EmissionModel, Evidence,
    Family, Lattice, ObservationSeries,
};

use crate::args::{Format, ModelArgs};
use crate::error::CliError;
use crate::{ingest, output};

const VERIFY_TOLERANCE: f64 = 1e-9;

/// Starting parameters and the greedy change-points behind them, if any.
type Initial = ((EmissionModel, ChainSpec), Option<Vec<usize>>);

/// Parameters ready for inference, with the EM run that produced them.
struct Model {
    chain: ChainSpec,
    emissions: EmissionModel,
    fit: Option<FitResult>,
}

struct Setup {
    data: ObservationSeries,
    config: FitConfig,
}

fn setup(args: &ModelArgs) -> Result<Setup, CliError> {
    let family = Family::from(args.family);
    let kind = ChainKind::from(args.kind);
    let mut config = FitConfig::new(family, kind, args.states());
    config.max_iterations = args.max_iters;
    config.tolerance = args.tol;
    config.validate()?;
    check_flags(args)?;
    let data = ingest::load(&args.data, family)?;
    info!("loaded {} observations from {}", data.len(), args.data);
    Ok(Setup { data, config })
}

fn config_err(msg: &str) -> CliError {
    CliError::Config(msg.to_string())
}

fn check_flags(args: &ModelArgs) -> Result<(), CliError> {
    let level = ChainKind::from(args.kind) == ChainKind::Level;
    let normal = Family::from(args.family) == Family::NormalHomoscedastic;
    if args.sigma.is_some() && !normal {
        return Err(config_err("--sigma applies to the normal family only"));
    }
    if args.exit_probs.is_some() && !level {
        return Err(config_err("--exit-probs applies to level models only"));
    }
    if args.eta.is_some() && level {
        return Err(config_err("--eta applies to segment models only"));
    }
    if (args.levels.is_some() || args.merge_threshold.is_some()) && !level {
        return Err(config_err(
            "--levels and --merge-threshold apply to level models only",
        ));
    }
    if args.levels.is_some() && args.merge_threshold.is_some() {
        return Err(config_err(
            "--levels and --merge-threshold are mutually exclusive",
        ));
    }
    if args.segments.is_some() && args.merge_threshold.is_none() {
        return Err(config_err("--segments requires --merge-threshold"));
    }
    if args.fix_params.is_none() && (args.sigma.is_some() || args.exit_probs.is_some()) {
        return Err(config_err("--sigma and --exit-probs require --fix-params"));
    }
    if let Some(levels) = &args.levels {
        if levels.contains(&0) {
            return Err(config_err("--levels are one-based"));
        }
    }
    Ok(())
}

/// Zero-based level of each greedy segment, when the user asked for a
/// segments-to-levels assignment.
fn level_assignment(
    args: &ModelArgs,
    data: &ObservationSeries,
) -> Result<Option<Vec<usize>>, CliError> {
    if let Some(levels) = &args.levels {
        return Ok(Some(levels.iter().map(|l| l - 1).collect()));
    }
    if let Some(threshold) = args.merge_threshold {
        let segments = args.segments.unwrap_or(args.states());
        let cps = greedy_ls_changepoints(data, segments)?;
        let levels = merge_levels(&segment_means(data, &cps)?, threshold);
        info!("merged {segments} greedy segments into levels {levels:?}");
        return Ok(Some(levels));
    }
    Ok(None)
}

fn initial(args: &ModelArgs, s: &Setup) -> Result<Initial, CliError> {
    let levels = level_assignment(args, &s.data)?;
    let greedy = || greedy_initialisation(&s.data, &s.config, levels.as_deref());
    let Some(fixed) = &args.fix_params else {
        let (mut init, cps) = greedy()?;
        info!("greedy change-points {cps:?}");
        if let Some(eta) = args.eta {
            init.1 = ChainSpec::segment_with_eta(s.config.states, eta)?;
        }
        return Ok((init, Some(cps)));
    };
    if fixed.len() != s.config.states {
        return Err(CliError::Config(format!(
            "--fix-params has {} values for {} states",
            fixed.len(),
            s.config.states
        )));
    }
    let needs_greedy = (s.config.family == Family::NormalHomoscedastic && args.sigma.is_none())
        || (s.config.kind == ChainKind::Level && args.exit_probs.is_none());
    let base = if needs_greedy { Some(greedy()?) } else { None };
    let emissions = match s.config.family {
        Family::Poisson => EmissionModel::poisson(fixed.clone())?,
        Family::NormalHomoscedastic => {
            let sigma = match (args.sigma, &base) {
                (Some(sigma), _) => sigma,
                (None, Some(((EmissionModel::Normal { sigma, .. }, _), _))) => *sigma,
                _ => unreachable!("greedy initialisation matches the configured family"),
            };
            EmissionModel::normal(fixed.clone(), sigma)?
        }
    };
    let chain = match s.config.kind {
        ChainKind::Level => match (&args.exit_probs, &base) {
            (Some(exit), _) => ChainSpec::level(exit.clone())?,
            (None, Some(((_, chain), _))) => chain.clone(),
            _ => unreachable!("greedy initialisation runs when exit probabilities are absent"),
        },
        ChainKind::Segment => ChainSpec::segment_with_eta(
            s.config.states,
            args.eta.unwrap_or(cphmm::model::DEFAULT_SEGMENT_ETA),
        )?,
    };
    Ok(((emissions, chain), base.map(|(_, cps)| cps)))
}

fn run_em(
    s: &Setup,
    init: (EmissionModel, ChainSpec),
    cps: Option<Vec<usize>>,
) -> Result<FitResult, CliError> {
    let mut fit = em_fit(&s.data, &s.config, init)?;
    fit.initial_changepoints = cps;
    for w in &fit.warnings {
        warn!("{w}");
    }
    info!(
        "EM stopped after {} iterations, converged: {}, log evidence {}",
        fit.iterations(),
        fit.converged,
        fit.log_evidence()
    );
    Ok(fit)
}

/// Fixed parameters when given, otherwise the EM fit from the greedy start.
fn model(args: &ModelArgs, s: &Setup) -> Result<Model, CliError> {
    let ((emissions, chain), cps) = initial(args, s)?;
    if args.fix_params.is_some() {
        return Ok(Model {
            chain,
            emissions,
            fit: None,
        });
    }
    let fit = run_em(s, (emissions, chain), cps)?;
    Ok(Model {
        chain: fit.chain.clone(),
        emissions: fit.emissions.clone(),
        fit: Some(fit),
    })
}

pub fn fit(args: &ModelArgs) -> Result<(), CliError> {
    if args.format == Some(Format::Csv) {
        return Err(config_err("fit writes JSON only"));
    }
    let s = setup(args)?;
    let (init, cps) = initial(args, &s)?;
    let fit = run_em(&s, init, cps)?;
    let mut doc = output::parameters_json(&fit.emissions, &fit.chain);
    doc["log_evidence"] = json!(fit.log_evidence());
    doc["log_evidence_trace"] = json!(fit.log_evidence_trace);
    doc["iterations"] = json!(fit.iterations());
    doc["converged"] = json!(fit.converged);
    doc["initial_changepoints"] = json!(fit.initial_changepoints);
    doc["warnings"] = json!(fit.warnings);
    output::write_json(args.output.as_deref(), &doc)
}

pub fn posterior(args: &ModelArgs) -> Result<(), CliError> {
    let s = setup(args)?;
    let m = model(args, &s)?;
    let lattice = Lattice::standard(&m.chain, &m.emissions, &s.data)?;
    let states = lattice.posterior_states()?;
    let cps = lattice.changepoint_posterior()?;
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => output::write_posterior_csv(args.output.as_deref(), &states, &cps),
        Format::Json => {
            let mut doc = output::parameters_json(&m.emissions, &m.chain);
            doc["log_evidence"] = json!(lattice.log_evidence());
            doc["posterior_states"] = json!(states);
            doc["changepoints"] = match &cps {
                ChangePointPosterior::Level(p) => json!(p),
                ChangePointPosterior::Segment(rows) => json!(rows),
            };
            if let Some(fit) = &m.fit {
                doc["converged"] = json!(fit.converged);
            }
            output::write_json(args.output.as_deref(), &doc)
        }
    }
}

pub fn sample(
    args: &ModelArgs,
    count: usize,
    seed: u64,
    direction: Direction,
) -> Result<(), CliError> {
    let s = setup(args)?;
    let m = model(args, &s)?;
    let lattice = Lattice::standard(&m.chain, &m.emissions, &s.data)?;
    let paths = lattice.sample_paths(direction, count, seed)?;
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => output::write_paths_csv(args.output.as_deref(), &paths, s.data.len()),
        Format::Json => {
            let one_based: Vec<Vec<usize>> = paths
                .iter()
                .map(|p| p.iter().map(|s| s + 1).collect())
                .collect();
            output::write_json(
                args.output.as_deref(),
                &json!({ "seed": seed, "direction": format!("{direction:?}").to_lowercase(), "paths": one_based }),
            )
        }
    }
}

pub fn viterbi_path(args: &ModelArgs) -> Result<(), CliError> {
    let s = setup(args)?;
    let m = model(args, &s)?;
    let ev = Evidence::for_chain(&m.chain, s.data.len())?;
    let (path, score) = viterbi(&m.chain, &m.emissions, &s.data, &ev)?;
    let cumulative = cumulative_log_joint(&m, &s.data, &path)?;
    match args.format.unwrap_or(Format::Csv) {
        Format::Csv => output::write_viterbi_csv(args.output.as_deref(), &path, &cumulative),
        Format::Json => output::write_json(
            args.output.as_deref(),
            &json!({
                "path": path.iter().map(|s| s + 1).collect::<Vec<_>>(),
                "log_joint": score,
            }),
        ),
    }
}

fn cumulative_log_joint(
    m: &Model,
    data: &ObservationSeries,
    path: &[usize],
) -> Result<Vec<f64>, CliError> {
    let mut total = 0.0;
    let mut out = Vec::with_capacity(path.len());
    for (i, &s) in path.iter().enumerate() {
        total += if i == 0 {
            m.chain.initial_log(s)
        } else {
            m.chain.transition_log(path[i - 1], s)?
        };
        total += m.emissions.log_emission(s, data.get(i))?;
        out.push(total);
    }
    Ok(out)
}

pub fn verify(args: &ModelArgs, budget: u128) -> Result<(), CliError> {
    let s = setup(args)?;
    let m = model(args, &s)?;
    let budget = EnumerationBudget {
        max_sequences: budget,
    };
    let n = s.data.len();
    let lattice = Lattice::standard(&m.chain, &m.emissions, &s.data)?;
    let (oracle, oracle_log_evidence) = match &m.chain {
        ChainSpec::Level { .. } => {
            let ev = Evidence::level(n, m.chain.state_count())?;
            let r = oracle_level(&s.data, &m.chain, &m.emissions, &ev, budget)?;
            let le = r.log_evidence;
            (r, le)
        }
        ChainSpec::Segment { states, eta } => {
            let r = oracle_segment(&s.data, *states, &m.emissions, budget)?;
            // path prior of the constrained chain instead of the uniform prior
            let le = r.log_likelihood_sum
                + (*states - 1) as f64 * eta.ln()
                + (n - states) as f64 * (1.0 - eta).ln();
            (r.result, le)
        }
    };
    let states = lattice.posterior_states()?;
    let state_dev = max_abs_diff(
        states.iter().flatten(),
        oracle.posterior_states.iter().flatten(),
    );
    let cps = lattice.changepoint_posterior()?;
    let cp_dev = max_abs_diff(
        cps.rows().into_iter().flatten(),
        oracle.changepoints.rows().into_iter().flatten(),
    );
    let mut pair_dev: f64 = 0.0;
    for i in 1..n {
        let pairs = lattice.pair_posteriors(i)?;
        pair_dev = pair_dev.max(max_abs_diff(
            pairs.iter().flatten(),
            oracle.pair_posteriors[i].iter().flatten(),
        ));
    }
    let evidence_dev = (lattice.log_evidence() - oracle_log_evidence).abs();
    let worst = evidence_dev.max(state_dev).max(cp_dev).max(pair_dev);
    let doc = json!({
        "enumerated_paths": oracle.paths.to_string(),
        "log_evidence": lattice.log_evidence(),
        "oracle_log_evidence": oracle_log_evidence,
        "max_state_deviation": state_dev,
        "max_pair_deviation": pair_dev,
        "max_changepoint_deviation": cp_dev,
        "separator_deviation": lattice.max_separator_deviation(),
        "tolerance": VERIFY_TOLERANCE,
        "pass": worst < VERIFY_TOLERANCE,
    });
    output::write_json(args.output.as_deref(), &doc)?;
    if worst < VERIFY_TOLERANCE {
        Ok(())
    } else {
        Err(CliError::Mismatch(format!("max deviation {worst:e}")))
    }
}

fn max_abs_diff<'a>(a: impl Iterator<Item = &'a f64>, b: impl Iterator<Item = &'a f64>) -> f64 {
    a.zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
