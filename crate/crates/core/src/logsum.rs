//! Log-domain summation.

/// `log Σ exp(z_j)`, anchored at the largest term with `log1p` applied to
/// the residual sum. All-`-inf` input gives `-inf`.
///
/// Panics on an empty slice.
pub fn logsumexp(z: &[f64]) -> f64 {
    assert!(!z.is_empty(), "logsumexp of an empty sequence");
    let (arg, max) =
        z.iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(ai, am), (i, v)| {
                if v > am {
                    (i, v)
                } else {
                    (ai, am)
                }
            });
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let rest: f64 = z
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != arg)
        .map(|(_, &v)| (v - max).exp())
        .sum();
    max + rest.ln_1p()
}

/// Two-term form of [`logsumexp`].
#[inline]
pub fn logaddexp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halves_sum_to_one() {
        assert!(logsumexp(&[0.5f64.ln(), 0.5f64.ln()]).abs() < 1e-15);
    }

    #[test]
    fn survives_deep_underflow() {
        let v = logsumexp(&[-1000.0, -1000.0]);
        assert!((v - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn singleton_is_identity() {
        assert_eq!(logsumexp(&[0.0]), 0.0);
        assert_eq!(logsumexp(&[-3.25]), -3.25);
    }

    #[test]
    fn all_zero_probabilities() {
        let ninf = f64::NEG_INFINITY;
        assert_eq!(logsumexp(&[ninf, ninf]), ninf);
        assert_eq!(logaddexp(ninf, ninf), ninf);
        assert_eq!(logsumexp(&[ninf, -2.0]), -2.0);
    }

    #[test]
    #[should_panic]
    fn empty_is_a_contract_violation() {
        logsumexp(&[]);
    }

    #[test]
    fn pairwise_matches_slice() {
        for (a, b) in [(-1.0, -2.0), (3.0, 3.0), (-700.0, 5.0)] {
            assert!((logaddexp(a, b) - logsumexp(&[a, b])).abs() < 1e-14);
        }
    }
}
