//! Memory kernels `K(t)`, their Laplace transforms as rational functions, and
//! the zeros of the transform.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{compare_roots, Polynomial};

/// Relative tolerance for cancelling a common root of numerator and denominator.
pub const COPRIME_TOL: f64 = 1e-9;

/// Relative tolerance under which two decay rates count as repeated.
const DISTINCT_DECAY_TOL: f64 = 1e-12;

/// One term `c·e^{-γt}` of an exponential-sum kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTerm {
    pub amplitude: f64,
    pub decay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    ExpSum,
    Constant,
    Tabulated,
}

impl KernelKind {
    pub fn name(self) -> &'static str {
        match self {
            KernelKind::ExpSum => "expsum",
            KernelKind::Constant => "constant",
            KernelKind::Tabulated => "tabulated",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    ExpSum(Vec<ExpTerm>),
    Constant(f64),
    Tabulated { samples: Vec<f64>, step: f64 },
}

/// A validated memory kernel. Every variant satisfies `K(0) > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    repr: Repr,
}

impl MemoryKernel {
    /// `K(t) = Σ c_j e^{-γ_j t}` with positive amplitudes and pairwise distinct
    /// positive decay rates.
    pub fn exp_sum(terms: &[(f64, f64)]) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidKernel("exponential sum needs at least one term".into()));
        }
        for (j, &(c, g)) in terms.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::InvalidKernel(format!("term {j}: amplitude {c} must be finite and > 0")));
            }
            if !(g.is_finite() && g > 0.0) {
                return Err(Error::InvalidKernel(format!("term {j}: decay rate {g} must be finite and > 0")));
            }
        }
        for i in 0..terms.len() {
            for j in (i + 1)..terms.len() {
                let (a, b) = (terms[i].1, terms[j].1);
                if (a - b).abs() <= DISTINCT_DECAY_TOL * a.max(b) {
                    return Err(Error::InvalidKernel(format!(
                        "terms {i} and {j} share decay rate {a}; repeated rates are not supported"
                    )));
                }
            }
        }
        Ok(MemoryKernel {
            repr: Repr::ExpSum(terms.iter().map(|&(amplitude, decay)| ExpTerm { amplitude, decay }).collect()),
        })
    }

    /// `K(t) = C`, the memoryless wave-equation limit.
    pub fn constant(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidKernel(format!("constant kernel value {value} must be finite and > 0")));
        }
        Ok(MemoryKernel { repr: Repr::Constant(value) })
    }

    /// Samples `K(k·step)` for `k = 0..len`, interpolated by local cubics.
    pub fn tabulated(samples: Vec<f64>, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(Error::InvalidKernel(format!("sample step {step} must be finite and > 0")));
        }
        if samples.len() < 4 {
            return Err(Error::InvalidKernel("tabulated kernel needs at least 4 samples".into()));
        }
        if let Some(bad) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidKernel(format!("sample {bad} is not finite")));
        }
        if samples[0] <= 0.0 {
            return Err(Error::InvalidKernel(format!("K(0) = {} must be > 0", samples[0])));
        }
        Ok(MemoryKernel { repr: Repr::Tabulated { samples, step } })
    }

    pub fn kind(&self) -> KernelKind {
        match self.repr {
            Repr::ExpSum(_) => KernelKind::ExpSum,
            Repr::Constant(_) => KernelKind::Constant,
            Repr::Tabulated { .. } => KernelKind::Tabulated,
        }
    }

    /// Terms of an exponential-sum kernel, `None` for the other variants.
    pub fn terms(&self) -> Option<&[ExpTerm]> {
        match &self.repr {
            Repr::ExpSum(terms) => Some(terms),
            _ => None,
        }
    }

    pub fn constant_value(&self) -> Option<f64> {
        match self.repr {
            Repr::Constant(c) => Some(c),
            _ => None,
        }
    }

    /// Last time covered by a tabulated kernel; unbounded otherwise.
    pub fn max_time(&self) -> f64 {
        match &self.repr {
            Repr::Tabulated { samples, step } => (samples.len() - 1) as f64 * step,
            _ => f64::INFINITY,
        }
    }

    /// `K(0)`.
    pub fn initial_value(&self) -> f64 {
        match &self.repr {
            Repr::ExpSum(terms) => terms.iter().map(|t| t.amplitude).sum(),
            Repr::Constant(c) => *c,
            Repr::Tabulated { samples, .. } => samples[0],
        }
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::domain(format!("kernel evaluated at t = {t} < 0")));
        }
        match &self.repr {
            Repr::ExpSum(terms) => Ok(terms.iter().map(|e| e.amplitude * (-e.decay * t).exp()).sum()),
            Repr::Constant(c) => Ok(*c),
            Repr::Tabulated { samples, step } => {
                let t_max = (samples.len() - 1) as f64 * step;
                if t > t_max * (1.0 + 1e-12) {
                    return Err(Error::Range { value: t, min: 0.0, max: t_max });
                }
                Ok(cubic_interpolate(samples, *step, t.min(t_max)))
            }
        }
    }

    /// Exact Laplace transform for the exponential-sum and constant variants.
    pub fn laplace_transform(&self) -> Result<RationalFunction> {
        match &self.repr {
            Repr::ExpSum(terms) => {
                let factors: Vec<Polynomial> = terms.iter().map(|t| Polynomial::linear_factor(-t.decay)).collect();
                let denominator = factors.iter().fold(Polynomial::constant(1.0), |acc, f| &acc * f);
                let mut numerator = Polynomial::constant(0.0);
                for (j, term) in terms.iter().enumerate() {
                    let others = factors
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != j)
                        .fold(Polynomial::constant(term.amplitude), |acc, (_, f)| &acc * f);
                    numerator = &numerator + &others;
                }
                // numerator(-γ_j) = c_j Π_{k≠j}(γ_k - γ_j) ≠ 0, so nothing cancels;
                // a tolerance test would wrongly cancel zeros that sit close to a pole
                Ok(RationalFunction { numerator, denominator })
            }
            Repr::Constant(c) => RationalFunction::new(Polynomial::constant(*c), Polynomial::new(vec![0.0, 1.0])),
            Repr::Tabulated { .. } => Err(Error::UnsupportedVariant { op: "laplace_transform", variant: "tabulated" }),
        }
    }

    /// Evaluates `K̂(λ)` directly from the kernel parameters.
    pub fn eval_khat(&self, lambda: Complex64) -> Result<Complex64> {
        match &self.repr {
            Repr::ExpSum(terms) => {
                let mut sum = Complex64::new(0.0, 0.0);
                for t in terms {
                    let shifted = lambda + t.decay;
                    if shifted.norm() <= 1e-14 * t.decay.max(1.0) {
                        return Err(Error::Pole { pole: Complex64::new(-t.decay, 0.0) });
                    }
                    sum += t.amplitude / shifted;
                }
                Ok(sum)
            }
            Repr::Constant(c) => {
                if lambda.norm() == 0.0 {
                    return Err(Error::Pole { pole: Complex64::new(0.0, 0.0) });
                }
                Ok(*c / lambda)
            }
            Repr::Tabulated { .. } => Err(Error::UnsupportedVariant { op: "eval_khat", variant: "tabulated" }),
        }
    }

    /// Zeros of `K̂`, i.e. the roots of its numerator, sorted by real part.
    pub fn khat_zeros(&self) -> Result<Vec<Complex64>> {
        let transform = self.laplace_transform()?;
        let terms = match &self.repr {
            Repr::ExpSum(terms) => terms,
            _ => return Ok(Vec::new()),
        };
        let mut zeros = transform.numerator().roots()?;
        let mut residuals = Vec::with_capacity(zeros.len());
        for z in zeros.iter_mut() {
            *z = polish_khat_zero(terms, *z);
            let (value, scale) = khat_value_and_scale(terms, *z);
            residuals.push(value.norm() / scale);
        }
        let worst = residuals.iter().cloned().fold(0.0_f64, f64::max);
        if worst > 1e-10 {
            return Err(Error::RootPolish { worst_residual: worst, tolerance: 1e-10, residuals });
        }
        zeros.sort_by(compare_roots);
        Ok(zeros)
    }
}

/// `(Σ c/(λ+γ), Σ |c/(λ+γ)|)`
fn khat_value_and_scale(terms: &[ExpTerm], z: Complex64) -> (Complex64, f64) {
    terms.iter().fold((Complex64::new(0.0, 0.0), 0.0), |(v, s), t| {
        let q = t.amplitude / (z + t.decay);
        (v + q, s + q.norm())
    })
}

fn polish_khat_zero(terms: &[ExpTerm], start: Complex64) -> Complex64 {
    let mut z = start;
    for _ in 0..30 {
        let (f, df) = terms.iter().fold((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)), |(f, df), t| {
            let inv = 1.0 / (z + t.decay);
            (f + t.amplitude * inv, df - t.amplitude * inv * inv)
        });
        if df.norm() == 0.0 || !f.is_finite() {
            break;
        }
        let step = f / df;
        z -= step;
        if step.norm() <= 2.0 * f64::EPSILON * z.norm() {
            break;
        }
    }
    if start.im == 0.0 {
        Complex64::new(z.re, 0.0)
    } else {
        z
    }
}

/// Local cubic Lagrange interpolation through the four nearest samples.
fn cubic_interpolate(samples: &[f64], step: f64, t: f64) -> f64 {
    let u = t / step;
    let i = (u.floor() as usize).min(samples.len() - 2);
    let base = i.saturating_sub(1).min(samples.len() - 4);
    let x = u - base as f64;
    let mut value = 0.0;
    for j in 0..4 {
        let mut weight = 1.0;
        for k in 0..4 {
            if k != j {
                weight *= (x - k as f64) / (j as f64 - k as f64);
            }
        }
        value += weight * samples[base + j];
    }
    value
}

/// A ratio of real polynomials with common real roots cancelled.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalFunction {
    numerator: Polynomial,
    denominator: Polynomial,
}

impl RationalFunction {
    pub fn new(numerator: Polynomial, denominator: Polynomial) -> Result<Self> {
        if denominator.is_zero() {
            return Err(Error::domain("rational function with zero denominator"));
        }
        let mut num = numerator;
        let mut den = denominator;
        if !num.is_zero() && den.degree() > 0 {
            let poles = den.roots()?;
            for pole in poles.iter().filter(|p| p.im == 0.0) {
                if num.degree() == 0 {
                    break;
                }
                let r = pole.re;
                let scale = num.max_abs_coeff() * r.abs().max(1.0).powi(num.degree() as i32);
                if num.eval(r).abs() <= COPRIME_TOL * scale {
                    num = num.divide_linear(r).0;
                    den = den.divide_linear(r).0;
                }
            }
        }
        Ok(RationalFunction { numerator: num, denominator: den })
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.denominator
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let d = self.denominator.eval_complex(z);
        if d.norm() == 0.0 {
            return Err(Error::Pole { pole: z });
        }
        Ok(self.numerator.eval_complex(z) / d)
    }
}
