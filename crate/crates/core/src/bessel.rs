//! Bessel functions of the first kind `J_m(x)` for integer order, and the
//! positive zeros `j_{m,n}` that set the Dirichlet spectrum of the disk.
//!
//! Evaluation uses the power series for `x ≤ 1`, the Hankel asymptotic
//! expansion of `J_0, J_1` followed by upward recurrence when `x ≥ 25` and
//! `m < x`, and Miller's normalized downward recurrence everywhere else.

use std::f64::consts::PI;
use std::sync::Mutex;

use crate::error::{Error, Result};

pub const MAX_ORDER: u32 = 50;
pub const MAX_ARGUMENT: f64 = 1.0e4;
pub const MAX_ZERO_INDEX: u32 = 200;

const SERIES_LIMIT: f64 = 1.0;
const ASYMPTOTIC_LIMIT: f64 = 25.0;

/// `J_m(x)` on `0 ≤ m ≤ 50`, `0 ≤ x ≤ 10⁴`.
pub fn bessel_j(m: u32, x: f64) -> Result<f64> {
    check_order(m)?;
    if !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(Error::Range { value: x, min: 0.0, max: MAX_ARGUMENT });
    }
    Ok(jn(m, x))
}

/// `J_m'(x)` on the same range as [`bessel_j`].
pub fn bessel_j_prime(m: u32, x: f64) -> Result<f64> {
    check_order(m)?;
    if !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(Error::Range { value: x, min: 0.0, max: MAX_ARGUMENT });
    }
    Ok(jn_prime(m, x))
}

fn check_order(m: u32) -> Result<()> {
    if m > MAX_ORDER {
        return Err(Error::Range { value: m as f64, min: 0.0, max: MAX_ORDER as f64 });
    }
    Ok(())
}

pub(crate) fn jn_prime(m: u32, x: f64) -> f64 {
    if m == 0 {
        -jn(1, x)
    } else {
        0.5 * (jn(m - 1, x) - jn(m + 1, x))
    }
}

pub(crate) fn jn(m: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_LIMIT {
        series(m, x)
    } else if x >= ASYMPTOTIC_LIMIT && (m as f64) < x {
        upward_from_asymptotic(m, x)
    } else {
        miller(m, x)
    }
}

fn series(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for k in 1..=m {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= q / (k as f64 * (k + m) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || k > 60 {
            break;
        }
    }
    sum
}

/// Hankel's expansion of `J_ν(x)` for `ν ∈ {0, 1}`, summed until the terms
/// stop decreasing.
fn hankel(nu: u32, x: f64) -> f64 {
    let mu = 4.0 * (nu * nu) as f64;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    let mut k = 1u32;
    loop {
        let odd = (2 * k - 1) as f64;
        term *= (mu - odd * odd) / (k as f64 * 8.0 * x);
        if term.abs() >= last || term.abs() < 1e-18 {
            break;
        }
        last = term.abs();
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        k += 1;
    }
    // χ = x - (ν/2 + 1/4)π, expanded to keep x out of the phase subtraction.
    let (s, c) = x.sin_cos();
    let (cos_chi, sin_chi) = if nu == 0 {
        ((c + s) / 2f64.sqrt(), (s - c) / 2f64.sqrt())
    } else {
        ((s - c) / 2f64.sqrt(), -(c + s) / 2f64.sqrt())
    };
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

fn upward_from_asymptotic(m: u32, x: f64) -> f64 {
    let j0 = hankel(0, x);
    if m == 0 {
        return j0;
    }
    let j1 = hankel(1, x);
    let (mut prev, mut cur) = (j0, j1);
    for k in 1..m {
        let next = 2.0 * k as f64 / x * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn miller(m: u32, x: f64) -> f64 {
    let reach = (m as f64).max(x);
    let start = reach + 14.0 * reach.cbrt() + (40.0 * reach).sqrt() + 20.0;
    let mut n = start.ceil() as u32;
    if n % 2 == 1 {
        n += 1;
    }
    let mut next = 0.0_f64;
    let mut cur = 1.0e-30_f64;
    let mut target = 0.0;
    let mut norm = 0.0;
    for k in (1..=n).rev() {
        let prev = 2.0 * k as f64 / x * cur - next;
        next = cur;
        cur = prev;
        // cur now holds the unnormalized J_{k-1}
        let order = k - 1;
        if order == m {
            target = cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            target *= 1e-250;
            norm *= 1e-250;
        }
    }
    norm += cur;
    target / norm
}

static ZERO_TABLE: Mutex<Vec<Vec<f64>>> = Mutex::new(Vec::new());

/// The `n`-th positive zero of `J_m`, for `m ≤ 50` and `1 ≤ n ≤ 200`.
///
/// Zeros of `J_0` start from McMahon's expansion; zeros of higher orders are
/// bracketed by the interlacing `j_{m-1,n} < j_{m,n} < j_{m-1,n+1}`. Tables
/// are filled on first use and shared between threads.
pub fn bessel_zero(m: u32, n: u32) -> Result<f64> {
    check_order(m)?;
    if n == 0 || n > MAX_ZERO_INDEX {
        return Err(Error::Range { value: n as f64, min: 1.0, max: MAX_ZERO_INDEX as f64 });
    }
    let mut table = ZERO_TABLE.lock().unwrap_or_else(|e| e.into_inner());
    ensure_zeros(&mut table, m as usize, n as usize);
    Ok(table[m as usize][n as usize - 1])
}

/// The first `count` positive zeros of `J_m`.
pub fn bessel_zeros(m: u32, count: u32) -> Result<Vec<f64>> {
    check_order(m)?;
    if count > MAX_ZERO_INDEX {
        return Err(Error::Range { value: count as f64, min: 0.0, max: MAX_ZERO_INDEX as f64 });
    }
    let mut table = ZERO_TABLE.lock().unwrap_or_else(|e| e.into_inner());
    ensure_zeros(&mut table, m as usize, count as usize);
    Ok(table[m as usize][..count as usize].to_vec())
}

fn ensure_zeros(table: &mut Vec<Vec<f64>>, m: usize, count: usize) {
    if table.len() <= m {
        table.resize(m + 1, Vec::new());
    }
    if table[m].len() >= count {
        return;
    }
    if m == 0 {
        for n in table[0].len() + 1..=count {
            let beta = (n as f64 - 0.25) * PI;
            let guess = beta + 1.0 / (8.0 * beta) - 31.0 / (384.0 * beta.powi(3));
            let z = refine_zero(0, guess - 0.3, guess + 0.3);
            table[0].push(z);
        }
        return;
    }
    ensure_zeros(table, m - 1, count + 1);
    for n in table[m].len()..count {
        let (lo, hi) = (table[m - 1][n], table[m - 1][n + 1]);
        let z = refine_zero(m as u32, lo, hi);
        table[m].push(z);
    }
}

/// Newton's method on `J_m`, falling back to bisection whenever a step leaves
/// the sign-change bracket `[lo, hi]`.
fn refine_zero(m: u32, mut lo: f64, mut hi: f64) -> f64 {
    let f_lo = jn(m, lo);
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let f = jn(m, x);
        if f == 0.0 {
            return x;
        }
        if (f > 0.0) == (f_lo > 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        let df = jn_prime(m, x);
        let newton = x - f / df;
        let next = if df != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        let done = (next - x).abs() <= 2.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * x;
        x = next;
        if done {
            break;
        }
    }
    x
}
