//! Tail-stable normal CDF and log-space helpers.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

/// `log(2π)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Scaled complementary error function `erfcx(x) = exp(x²)·erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 25.0 {
        erfc(x) * (x * x).exp()
    } else {
        // Laplace continued fraction, evaluated bottom-up; at x ≥ 25 fifty
        // levels are far past convergence
        let mut f = x;
        for k in (1..=50).rev() {
            f = x + (k as f64 * 0.5) / f;
        }
        1.0 / (PI.sqrt() * f)
    }
}

/// `log Φ(z)` for the standard normal CDF, accurate in both tails.
pub fn log_ndtr(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z > 0.0 {
        (-0.5 * erfc(z * FRAC_1_SQRT_2)).ln_1p()
    } else if z > -20.0 {
        (0.5 * erfc(-z * FRAC_1_SQRT_2)).ln()
    } else {
        let t = -z * FRAC_1_SQRT_2;
        (0.5 * erfcx(t)).ln() - t * t
    }
}

/// `log(1 - exp(a))` for `a ≤ 0`.
pub fn log1mexp(a: f64) -> f64 {
    if a > -LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// `log(Φ(hi) - Φ(lo))` for `hi ≥ lo`, without cancellation in either tail.
pub fn log_diff_ndtr(hi: f64, lo: f64) -> f64 {
    if hi <= lo {
        return f64::NEG_INFINITY;
    }
    if lo >= 0.0 {
        // both in the upper tail: Q(lo) - Q(hi)
        let a = log_ndtr(-lo);
        let b = log_ndtr(-hi);
        a + log1mexp(b - a)
    } else if hi <= 0.0 {
        let a = log_ndtr(hi);
        let b = log_ndtr(lo);
        a + log1mexp(b - a)
    } else {
        // 1 - Q(hi) - Φ(lo), each tail at most one half
        let tails = log_ndtr(-hi).exp() + log_ndtr(lo).exp();
        (-tails).ln_1p()
    }
}

/// `log Σ exp(v_i)`; `-∞` for an empty slice or all `-∞` entries.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `log(e^a + e^b)`.
pub fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Log-density of `N(0, σ²)` at `x`.
#[inline]
pub fn log_normal_pdf(x: f64, variance: f64) -> f64 {
    -0.5 * (LN_2PI + variance.ln() + x * x / variance)
}
