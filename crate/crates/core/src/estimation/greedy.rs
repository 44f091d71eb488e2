use crate::error::{Error, Result};
use crate::model::ObservationSeries;

/// Prefix sums of a centred series for O(1) segment squared-error queries.
struct SquaredError {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
}

impl SquaredError {
    fn new(values: &[f64]) -> Self {
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let mut sum = vec![0.0; values.len() + 1];
        let mut sum_sq = vec![0.0; values.len() + 1];
        for (i, v) in values.iter().enumerate() {
            let c = v - mean;
            sum[i + 1] = sum[i] + c;
            sum_sq[i + 1] = sum_sq[i] + c * c;
        }
        Self { sum, sum_sq }
    }

    /// Within-segment sum of squared deviations over `[a, b)`.
    fn cost(&self, a: usize, b: usize) -> f64 {
        let len = (b - a) as f64;
        let s = self.sum[b] - self.sum[a];
        (self.sum_sq[b] - self.sum_sq[a] - s * s / len).max(0.0)
    }
}

/// Binary segmentation on squared error: repeatedly apply the single split
/// that most reduces the total within-segment squared error, until `k`
/// segments exist. Returns the `k - 1` change-points in increasing order;
/// change-point `i` separates observations `i` and `i + 1`. Ties go to the
/// smallest index.
pub fn greedy_ls_changepoints(data: &ObservationSeries, k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one segment".into()));
    }
    if data.has_missing() {
        return Err(Error::InvalidParameter(
            "greedy initialisation needs a fully observed series".into(),
        ));
    }
    let values: Vec<f64> = data.observed().collect();
    let n = values.len();
    if n < k {
        return Err(Error::InfeasibleEvidence(format!(
            "{k} segments cannot be placed on {n} observations"
        )));
    }
    let cost = SquaredError::new(&values);
    let tie = 1e-10 * cost.cost(0, n).max(f64::MIN_POSITIVE);

    let mut bounds = vec![0, n];
    while bounds.len() - 1 < k {
        let mut best: Option<(f64, usize)> = None;
        for w in bounds.windows(2) {
            let (a, b) = (w[0], w[1]);
            let whole = cost.cost(a, b);
            for c in a + 1..b {
                let gain = whole - cost.cost(a, c) - cost.cost(c, b);
                let better = match best {
                    None => true,
                    Some((g, at)) => gain > g + tie || ((gain - g).abs() <= tie && c < at),
                };
                if better {
                    best = Some((gain, c));
                }
            }
        }
        let (_, at) = best.expect("a splittable segment exists while segments < n");
        let pos = bounds.partition_point(|&b| b < at);
        bounds.insert(pos, at);
    }
    Ok(bounds[1..bounds.len() - 1].to_vec())
}
