//! Single-exponential memory as a damped wave, and Routh–Hurwitz stability
//! of the wave equation with exponential memory.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::propagator::LinearPropagator;
use crate::simulator::{step_count, ModalTrajectory, SolverTag, TimeFunction};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A modal control `u(t)` together with what is known about `u'`.
#[derive(Clone)]
pub enum ControlSignal {
    Zero,
    Constant(f64),
    /// `a e^{r t}`
    Exponential {
        amplitude: f64,
        rate: f64,
    },
    /// Value and derivative supplied by the caller.
    Analytic {
        value: RealFn,
        derivative: RealFn,
    },
    /// Samples at `k·step`; the derivative is taken by second-order finite
    /// differences.
    Sampled {
        step: f64,
        values: Vec<f64>,
    },
}

impl std::fmt::Debug for ControlSignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ControlSignal::Zero => write!(f, "Zero"),
            ControlSignal::Constant(c) => write!(f, "Constant({c})"),
            ControlSignal::Exponential { amplitude, rate } => write!(f, "Exponential({amplitude}, {rate})"),
            ControlSignal::Analytic { .. } => write!(f, "Analytic"),
            ControlSignal::Sampled { step, values } => write!(f, "Sampled(step={step}, len={})", values.len()),
        }
    }
}

impl ControlSignal {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            ControlSignal::Zero => 0.0,
            ControlSignal::Constant(c) => *c,
            ControlSignal::Exponential { amplitude, rate } => amplitude * (rate * t).exp(),
            ControlSignal::Analytic { value, .. } => value(t),
            ControlSignal::Sampled { step, values } => {
                TimeFunction::Sampled { step: *step, values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
                    .eval(t)
                    .re
            }
        }
    }

    /// Order of the derivative approximation; `None` when exact.
    pub fn derivative_order(&self) -> Option<u32> {
        match self {
            ControlSignal::Sampled { .. } => Some(2),
            _ => None,
        }
    }

    fn derivative_samples(step: f64, values: &[f64]) -> Vec<f64> {
        let n = values.len();
        (0..n)
            .map(|i| match (i, n) {
                (_, 1) => 0.0,
                (_, 2) => (values[1] - values[0]) / step,
                (0, _) => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step),
                (i, n) if i == n - 1 => (3.0 * values[i] - 4.0 * values[i - 1] + values[i - 2]) / (2.0 * step),
                (i, _) => (values[i + 1] - values[i - 1]) / (2.0 * step),
            })
            .collect()
    }

    /// `P = u' + γ u`
    fn reduced_forcing(&self, gamma: f64) -> TimeFunction {
        match self {
            ControlSignal::Zero => TimeFunction::Zero,
            ControlSignal::Constant(c) => {
                let p = gamma * c;
                TimeFunction::callable(move |_| Complex64::new(p, 0.0))
            }
            ControlSignal::Exponential { amplitude, rate } => {
                let coef = amplitude * (rate + gamma);
                if coef == 0.0 {
                    return TimeFunction::Zero;
                }
                let rate = *rate;
                TimeFunction::callable(move |t| Complex64::new(coef * (rate * t).exp(), 0.0))
            }
            ControlSignal::Analytic { value, derivative } => {
                let (value, derivative) = (value.clone(), derivative.clone());
                TimeFunction::callable(move |t| Complex64::new(derivative(t) + gamma * value(t), 0.0))
            }
            ControlSignal::Sampled { step, values } => {
                let du = Self::derivative_samples(*step, values);
                TimeFunction::Sampled {
                    step: *step,
                    values: values.iter().zip(&du).map(|(u, d)| Complex64::new(d + gamma * u, 0.0)).collect(),
                }
            }
        }
    }

    /// The signal as a forcing channel for the memory equation.
    pub fn as_time_function(&self) -> TimeFunction {
        match self {
            ControlSignal::Zero => TimeFunction::Zero,
            ControlSignal::Sampled { step, values } => {
                TimeFunction::Sampled { step: *step, values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
            }
            other => {
                let other = other.clone();
                TimeFunction::callable(move |t| Complex64::new(other.value(t), 0.0))
            }
        }
    }
}

/// `θ'' + γθ' + qω²θ = P(t)`, `θ(0) = θ₀`, `θ'(0) = θ₁`.
#[derive(Debug, Clone)]
pub struct DampedWaveProblem {
    pub q: f64,
    pub gamma: f64,
    pub omega: f64,
    pub forcing: TimeFunction,
    pub theta0: f64,
    pub theta1: f64,
    /// Order of the derivative approximation used to build `forcing`, if any.
    pub derivative_order: Option<u32>,
}

impl DampedWaveProblem {
    pub fn new(q: f64, gamma: f64, omega: f64, theta0: f64, theta1: f64) -> Result<Self> {
        if !(q > 0.0 && q.is_finite()) || !(gamma >= 0.0 && gamma.is_finite()) || !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::domain(format!("need q > 0, γ ≥ 0, ω > 0; got q={q}, γ={gamma}, ω={omega}")));
        }
        Ok(DampedWaveProblem { q, gamma, omega, forcing: TimeFunction::Zero, theta0, theta1, derivative_order: None })
    }
}

/// The memory equation with kernel `q e^{-γt}` on a mode of eigenvalue `ω²`,
/// differentiated once: `P = u' + γu` and `θ'(0) = u(0)` because the memory
/// integral vanishes at `t = 0`.
pub fn gp_to_damped_wave(q: f64, gamma: f64, omega: f64, xi: f64, u: &ControlSignal) -> Result<DampedWaveProblem> {
    if !(gamma > 0.0) {
        return Err(Error::domain(format!("decay rate γ = {gamma} must be > 0")));
    }
    let mut p = DampedWaveProblem::new(q, gamma, omega, xi, u.value(0.0))?;
    p.forcing = u.reduced_forcing(gamma);
    p.derivative_order = u.derivative_order();
    Ok(p)
}

/// Exact 2×2 propagator with the forcing linear on each step.
pub fn simulate_damped_wave(problem: &DampedWaveProblem, horizon: f64, step: f64) -> Result<ModalTrajectory> {
    let steps = step_count(horizon, step)?;
    let h = horizon / steps as f64;
    let stiffness = problem.q * problem.omega * problem.omega;
    let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -stiffness, -problem.gamma]);
    let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let prop = LinearPropagator::new(&a, &b, h);
    let mut state = vec![Complex64::new(problem.theta0, 0.0), Complex64::new(problem.theta1, 0.0)];
    let mut values = Vec::with_capacity(steps + 1);
    values.push(state[0]);
    let mut f0 = [problem.forcing.eval(0.0)];
    for i in 0..steps {
        let f1 = [problem.forcing.eval((i + 1) as f64 * h)];
        state = prop.advance(&state, &f0, &f1);
        values.push(state[0]);
        f0 = f1;
    }
    Ok(ModalTrajectory { step: h, values, solver: SolverTag::DampedWavePropagator, error_estimate: None })
}

/// `ω_k = kπ/L` for the 1D Dirichlet problem on `(0, L)`.
pub fn modal_frequency(k: u32, length: f64) -> Result<f64> {
    if k == 0 || !(length > 0.0 && length.is_finite()) {
        return Err(Error::domain(format!("need k ≥ 1 and L > 0; got k={k}, L={length}")));
    }
    Ok(k as f64 * PI / length)
}

/// Sign of the memory term relative to the elastic term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// Memory relaxes the elastic term: `a₀ = (αγ - q)ω²`.
    #[default]
    Adopted,
    /// The memory term exactly as printed: `a₀ = (αγ + q)ω²`.
    AsWritten,
}

/// `s³ + a₂s² + a₁s + a₀`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cubic {
    pub a2: f64,
    pub a1: f64,
    pub a0: f64,
    pub convention: SignConvention,
}

impl Cubic {
    pub fn polynomial(&self) -> Polynomial {
        Polynomial::new(vec![self.a0, self.a1, self.a2, 1.0])
    }

    pub fn roots(&self) -> Result<Vec<Complex64>> {
        self.polynomial().roots()
    }

    pub fn max_real_part(&self) -> Result<f64> {
        Ok(self.roots()?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max))
    }

    /// `a₂a₁ - a₀`
    pub fn routh_margin(&self) -> f64 {
        self.a2 * self.a1 - self.a0
    }

    pub fn is_hurwitz(&self) -> bool {
        routh_hurwitz_cubic(self.a2, self.a1, self.a0)
    }
}

/// Modal characteristic cubic of `θ_tt - αθ_xx ∓ qθ_xx * e^{-γt} = 0`.
pub fn memory_wave_cubic(alpha: f64, q: f64, gamma: f64, omega_sq: f64, convention: SignConvention) -> Result<Cubic> {
    if !(alpha > 0.0 && gamma > 0.0 && omega_sq > 0.0) || !q.is_finite() {
        return Err(Error::domain(format!(
            "need α, γ, ω² > 0 and finite q; got α={alpha}, γ={gamma}, ω²={omega_sq}, q={q}"
        )));
    }
    let a0 = match convention {
        SignConvention::Adopted => (alpha * gamma - q) * omega_sq,
        SignConvention::AsWritten => (alpha * gamma + q) * omega_sq,
    };
    Ok(Cubic { a2: gamma, a1: alpha * omega_sq, a0, convention })
}

/// All roots strictly in the left half-plane.
pub fn routh_hurwitz_cubic(a2: f64, a1: f64, a0: f64) -> bool {
    a2 > 0.0 && a0 > 0.0 && a2 * a1 > a0
}

/// Strict stability set `(lower, upper)` in `q` plus its marginal endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityInterval {
    pub lower: f64,
    pub upper: f64,
    pub marginal: [f64; 2],
    pub convention: SignConvention,
}

impl StabilityInterval {
    pub fn classify(&self, q: f64) -> Stability {
        if self.marginal.iter().any(|&e| (q - e).abs() <= 1e-12 * self.upper.abs().max(self.lower.abs())) {
            Stability::Marginal
        } else if q > self.lower && q < self.upper {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }
}

/// For every `ω² > 0` the Routh margin is `±qω²` and `a₀ = (αγ ∓ q)ω²`, so
/// the interval does not depend on `ω`.
pub fn stability_interval(alpha: f64, gamma: f64, convention: SignConvention) -> Result<StabilityInterval> {
    if !(alpha > 0.0 && gamma > 0.0) {
        return Err(Error::domain(format!("need α, γ > 0; got α={alpha}, γ={gamma}")));
    }
    let ag = alpha * gamma;
    let (lower, upper) = match convention {
        SignConvention::Adopted => (0.0, ag),
        SignConvention::AsWritten => (-ag, 0.0),
    };
    Ok(StabilityInterval { lower, upper, marginal: [lower, upper], convention })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Marginal,
    Unstable,
}

impl Stability {
    pub fn name(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Marginal => "marginal",
            Stability::Unstable => "unstable",
        }
    }
}

/// Verdict for one `(α, q, γ, ω²)` from the Routh test; zero margin or
/// `a₀ = 0` is marginal.
pub fn classify(alpha: f64, q: f64, gamma: f64, omega_sq: f64, convention: SignConvention) -> Result<Stability> {
    let c = memory_wave_cubic(alpha, q, gamma, omega_sq, convention)?;
    // the margin is a difference of two products, so round-off must not
    // decide between marginal and stable
    let tol = 1e-14 * c.a2 * c.a1;
    let (a0, margin) = (c.a0, c.routh_margin());
    if a0 < -tol || margin < -tol {
        Ok(Stability::Unstable)
    } else if a0.abs() <= tol || margin.abs() <= tol {
        Ok(Stability::Marginal)
    } else {
        Ok(Stability::Stable)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StabilityRow {
    pub q: f64,
    pub omega_sq: f64,
    pub max_re_root: f64,
    pub verdict: Stability,
}

/// Rows for every `(q, ω²)` pair, `q` outermost.
pub fn stability_map(
    alpha: f64,
    gamma: f64,
    qs: &[f64],
    omega_sqs: &[f64],
    convention: SignConvention,
) -> Result<Vec<StabilityRow>> {
    let pairs: Vec<(f64, f64)> = qs.iter().flat_map(|&q| omega_sqs.iter().map(move |&w| (q, w))).collect();
    pairs
        .par_iter()
        .map(|&(q, omega_sq)| {
            let cubic = memory_wave_cubic(alpha, q, gamma, omega_sq, convention)?;
            Ok(StabilityRow {
                q,
                omega_sq,
                max_re_root: cubic.max_real_part()?,
                verdict: classify(alpha, q, gamma, omega_sq, convention)?,
            })
        })
        .collect()
}
