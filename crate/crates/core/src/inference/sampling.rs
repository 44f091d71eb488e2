use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Lattice;
use crate::error::Result;

/// Order in which a sampled path is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Draw `S_1` from its marginal, then `S_i | S_{i-1}`.
    Forward,
    /// Draw `S_n` from its marginal, then `S_{i-1} | S_i`.
    Backward,
}

/// Draws an index with probability proportional to `exp(log_weights)`.
fn draw<R: Rng>(rng: &mut R, candidates: &[(usize, f64)]) -> usize {
    let max = candidates
        .iter()
        .map(|&(_, w)| w)
        .fold(f64::NEG_INFINITY, f64::max);
    debug_assert!(max.is_finite(), "no admissible state to draw");
    let total: f64 = candidates.iter().map(|&(_, w)| (w - max).exp()).sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = candidates[0].0;
    for &(s, w) in candidates {
        let p = (w - max).exp();
        if p == 0.0 {
            continue;
        }
        last = s;
        if u < p {
            return s;
        }
        u -= p;
    }
    last
}

impl Lattice {
    /// `count` independent paths from `P(S_{1:n} | E)`. Paths are
    /// reproducible for a given `seed`.
    pub fn sample_paths(
        &self,
        direction: Direction,
        count: usize,
        seed: u64,
    ) -> Result<Vec<Vec<usize>>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        self.require_evidence()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.len();
        let m = self.state_count();
        let mut candidates = Vec::with_capacity(m);
        let mut paths = Vec::with_capacity(count);
        for _ in 0..count {
            let mut path = vec![0; n];
            match direction {
                Direction::Forward => {
                    candidates.clear();
                    candidates.extend(
                        (0..m).map(|s| (s, self.log_forward[0][s] + self.log_backward[0][s])),
                    );
                    path[0] = draw(&mut rng, &candidates);
                    for i in 1..n {
                        let r = path[i - 1];
                        candidates.clear();
                        candidates.extend(self.transitions.outgoing[r].iter().map(|&(s, w)| {
                            (s, w + self.potentials[i][s] + self.log_backward[i][s])
                        }));
                        path[i] = draw(&mut rng, &candidates);
                    }
                }
                Direction::Backward => {
                    candidates.clear();
                    candidates
                        .extend((0..m).map(|s| {
                            (s, self.log_forward[n - 1][s] + self.log_backward[n - 1][s])
                        }));
                    path[n - 1] = draw(&mut rng, &candidates);
                    for i in (1..n).rev() {
                        let s = path[i];
                        candidates.clear();
                        candidates.extend(
                            self.transitions.incoming[s]
                                .iter()
                                .map(|&(r, w)| (r, self.log_forward[i - 1][r] + w)),
                        );
                        path[i - 1] = draw(&mut rng, &candidates);
                    }
                }
            }
            paths.push(path);
        }
        Ok(paths)
    }
}
