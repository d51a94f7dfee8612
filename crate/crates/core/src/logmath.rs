//! Base-2 log-space arithmetic.
//!
//! Every probability in this crate is carried as a log₂ value ("bits").
//! Impossible events are `f64::NEG_INFINITY`, which short-circuits any
//! acceptance ratio it enters.

use statrs::function::gamma::ln_gamma;
use std::f64::consts::LN_2;

/// Sentinel for an impossible event.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

#[inline]
pub fn ln_to_bits(x: f64) -> f64 {
    x / LN_2
}

#[inline]
pub fn log2_factorial(n: u64) -> f64 {
    if n < 2 {
        0.0
    } else {
        ln_to_bits(ln_gamma(n as f64 + 1.0))
    }
}

/// log₂ C(n, k); `-inf` when k > n.
pub fn log2_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return LOG_ZERO;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    log2_factorial(n) - log2_factorial(k) - log2_factorial(n - k)
}

/// log₂ of the multiset coefficient ((n k)) = C(n + k - 1, k).
pub fn log2_multiset(n: u64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if n == 0 {
        return LOG_ZERO;
    }
    log2_binomial(n + k - 1, k)
}

/// log₂ of the double factorial n!! for any n ≥ 0.
pub fn log2_double_factorial(n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n % 2 == 0 {
        // (2k)!! = 2^k k!
        let k = n / 2;
        k as f64 + log2_factorial(k)
    } else {
        // (2k-1)!! = (2k)! / (2^k k!)
        let k = n.div_ceil(2);
        log2_factorial(2 * k) - k as f64 - log2_factorial(k)
    }
}

/// log₂(Σ 2^{x_i}); returns `-inf` for an empty or all-impossible input.
pub fn log2_sum_exp(values: impl IntoIterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LOG_ZERO;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = v.iter().map(|x| (x - max).exp2()).sum();
    max + s.log2()
}

/// Binary entropy h(p) in bits with 0·log 0 = 0.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -(p * p.log2() + (1.0 - p) * (-p).ln_1p() / LN_2)
}

/// -p log₂ p with the 0·log 0 = 0 convention.
#[inline]
pub fn entropy_term(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Shannon entropy (bits) of a discrete distribution given by raw counts.
pub fn entropy_from_counts<I: IntoIterator<Item = u64>>(counts: I) -> f64 {
    let c: Vec<u64> = counts.into_iter().collect();
    let total: u64 = c.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    c.iter().map(|&k| entropy_term(k as f64 / t)).sum()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn log2_or_zero(p: f64) -> f64 {
    if p <= 0.0 {
        LOG_ZERO
    } else {
        p.log2()
    }
}

/// log₂(1 - p) accurate for small p.
#[inline]
pub fn log2_one_minus(p: f64) -> f64 {
    if p >= 1.0 {
        LOG_ZERO
    } else {
        (-p).ln_1p() / LN_2
    }
}
