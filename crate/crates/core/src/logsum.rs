//! Log-domain arithmetic helpers.

/// `ln(e^a + e^b)` without overflow. Either argument may be `-inf`.
#[inline]
pub fn lse2(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(sum_i e^{x_i})` over a slice; `-inf` for an empty slice.
pub fn lse(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

/// `ln(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic function `e^x / (1 + e^x)`.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Log-probabilities `(ln p(+1), ln p(-1))` of a bit given its LLR.
#[inline]
pub fn log_probs(llr: f64) -> (f64, f64) {
    (-softplus(-llr), -softplus(llr))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lse2_matches_direct_sum() {
        for &(a, b) in &[(0.0, 0.0), (1.5, -2.0), (-3.0, 4.0), (700.0, 699.0)] {
            let direct = ((a - 700.0f64).exp() + (b - 700.0f64).exp()).ln() + 700.0;
            assert!((lse2(a, b) - direct).abs() < 1e-12);
        }
        assert_eq!(lse2(f64::NEG_INFINITY, 2.0), 2.0);
        assert_eq!(lse2(f64::NEG_INFINITY, f64::NEG_INFINITY), f64::NEG_INFINITY);
    }

    #[test]
    fn lse_handles_large_and_empty() {
        assert_eq!(lse(&[]), f64::NEG_INFINITY);
        let v = lse(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log_probs_are_normalised() {
        for &l in &[-60.0, -3.0, 0.0, 0.7, 45.0] {
            let (lp, lm) = log_probs(l);
            assert!((lp.exp() + lm.exp() - 1.0).abs() < 1e-15);
            assert!((lp - lm - l).abs() < 1e-9);
        }
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }
}
