use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Value};

use cphmm::{ChainSpec, ChangePointPosterior, EmissionModel};

use crate::error::CliError;

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Config(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// Ten significant digits.
fn prob(p: f64) -> String {
    format!("{p:.9e}")
}

pub fn parameters_json(emissions: &EmissionModel, chain: &ChainSpec) -> Value {
    let mut doc = match emissions {
        EmissionModel::Poisson { rates } => json!({ "family": "poisson", "rates": rates }),
        EmissionModel::Normal { means, sigma } => {
            json!({ "family": "normal", "means": means, "sigma": sigma })
        }
    };
    match chain {
        ChainSpec::Level {
            exit_probs,
            initial,
        } => {
            doc["model"] = json!("level");
            doc["exit_probs"] = json!(exit_probs);
            doc["initial"] = json!(initial);
        }
        ChainSpec::Segment { eta, .. } => {
            doc["model"] = json!("segment");
            doc["eta"] = json!(eta);
        }
    }
    doc["states"] = json!(chain.state_count());
    doc
}

pub fn write_json(path: Option<&Path>, doc: &Value) -> Result<(), CliError> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, doc)
        .map_err(|e| CliError::Config(format!("cannot write output: {e}")))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// One row per position: state marginals, then change-point columns. The
/// change-point entry at position `i` is the change between `i` and `i + 1`,
/// so the last row leaves it empty.
pub fn write_posterior_csv(
    path: Option<&Path>,
    states: &[Vec<f64>],
    cps: &ChangePointPosterior,
) -> Result<(), CliError> {
    let mut out = sink(path)?;
    let m = states.first().map_or(0, Vec::len);
    let rows = cps.rows();
    let mut header: Vec<String> = vec!["position".into()];
    header.extend((1..=m).map(|s| format!("state_{s}")));
    match cps {
        ChangePointPosterior::Level(_) => header.push("cp".into()),
        ChangePointPosterior::Segment(_) => {
            header.extend((1..=rows.len()).map(|r| format!("cp_{r}")))
        }
    }
    writeln!(out, "{}", header.join(","))?;
    for (i, row) in states.iter().enumerate() {
        let mut fields = vec![(i + 1).to_string()];
        fields.extend(row.iter().map(|&p| prob(p)));
        for cp in &rows {
            fields.push(cp.get(i).map_or_else(String::new, |&p| prob(p)));
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_paths_csv(
    path: Option<&Path>,
    paths: &[Vec<usize>],
    n: usize,
) -> Result<(), CliError> {
    let mut out = sink(path)?;
    let mut header = vec!["sample".to_string()];
    header.extend((1..=n).map(|i| format!("s_{i}")));
    writeln!(out, "{}", header.join(","))?;
    for (k, p) in paths.iter().enumerate() {
        let mut fields = vec![(k + 1).to_string()];
        fields.extend(p.iter().map(|s| (s + 1).to_string()));
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_viterbi_csv(
    path: Option<&Path>,
    states: &[usize],
    cumulative: &[f64],
) -> Result<(), CliError> {
    let mut out = sink(path)?;
    writeln!(out, "position,state,log_joint")?;
    for (i, (s, lj)) in states.iter().zip(cumulative).enumerate() {
        writeln!(out, "{},{},{lj:.12e}", i + 1, s + 1)?;
    }
    out.flush()?;
    Ok(())
}
