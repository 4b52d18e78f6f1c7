//! Time-domain solution of the modal Volterra equation
//!
//! ```text
//! θ'(t) + λ² ∫₀ᵗ K(t-s) θ(s) ds = u(t) - ∫₀ᵗ K(t-s) b(s) ds,   θ(0) = ξ
//! ```
//!
//! by an exact augmented linear system (exponential-sum kernels) or by
//! trapezoidal convolution quadrature (any kernel), plus the Laplace-domain
//! residue expansion used as an independent oracle and the assembly of
//! full-field solutions on the disk.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disk::{harmonics, project_harmonics, synthesize, DiskGeometry, Harmonic, Mode, PolarField, PolarGrid};
use crate::error::{Error, Result};
use crate::kernel::{KernelKind, MemoryKernel};
use crate::propagator::LinearPropagator;
use crate::symbol::CharacteristicSymbol;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A scalar forcing channel on `[0, T]`.
#[derive(Clone, Default)]
pub enum TimeFunction {
    #[default]
    Zero,
    /// Values at `t = k·step`, linearly interpolated in between.
    Sampled {
        step: f64,
        values: Vec<Complex64>,
    },
    Callable(Arc<dyn Fn(f64) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for TimeFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeFunction::Zero => write!(f, "Zero"),
            TimeFunction::Sampled { step, values } => write!(f, "Sampled(step={step}, len={})", values.len()),
            TimeFunction::Callable(_) => write!(f, "Callable"),
        }
    }
}

impl TimeFunction {
    pub fn callable(f: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        TimeFunction::Callable(Arc::new(f))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, TimeFunction::Zero)
    }

    /// Last time at which the function is defined.
    pub fn horizon(&self) -> f64 {
        match self {
            TimeFunction::Sampled { step, values } => step * values.len().saturating_sub(1) as f64,
            _ => f64::INFINITY,
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        match self {
            TimeFunction::Zero => ZERO,
            TimeFunction::Callable(f) => f(t),
            TimeFunction::Sampled { step, values } => {
                if values.is_empty() {
                    return ZERO;
                }
                let u = (t / step).max(0.0);
                let i = u.floor() as usize;
                if i + 1 >= values.len() {
                    return *values.last().unwrap();
                }
                let frac = u - i as f64;
                values[i] * (1.0 - frac) + values[i + 1] * frac
            }
        }
    }

    fn check_covers(&self, horizon: f64, what: &str) -> Result<()> {
        let have = self.horizon();
        if have < horizon * (1.0 - 1e-9) {
            return Err(Error::InvalidStep(format!("{what} defined up to t = {have}, horizon is {horizon}")));
        }
        Ok(())
    }
}

/// One modal equation: eigenvalue, kernel, initial coefficient and forcing.
#[derive(Debug, Clone)]
pub struct ModalProblem {
    pub lambda_sq: f64,
    pub kernel: MemoryKernel,
    pub xi: Complex64,
    /// Projected distributed control `u_{nm}(t)`.
    pub distributed: TimeFunction,
    /// Boundary term `∫_{∂Ω} v ∂φ/∂ν dσ` before convolution with `K`.
    pub boundary: TimeFunction,
}

impl ModalProblem {
    pub fn new(lambda_sq: f64, kernel: MemoryKernel, xi: Complex64) -> Self {
        ModalProblem { lambda_sq, kernel, xi, distributed: TimeFunction::Zero, boundary: TimeFunction::Zero }
    }

    pub fn for_mode(mode: &Mode, kernel: MemoryKernel, xi: Complex64) -> Self {
        ModalProblem::new(mode.lambda_sq, kernel, xi)
    }

    pub fn with_distributed(mut self, u: TimeFunction) -> Self {
        self.distributed = u;
        self
    }

    pub fn with_boundary(mut self, b: TimeFunction) -> Self {
        self.boundary = b;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverTag {
    ExactAugmented,
    ConvolutionQuadrature,
    DampedWavePropagator,
}

impl SolverTag {
    pub fn name(self) -> &'static str {
        match self {
            SolverTag::ExactAugmented => "exact_augmented",
            SolverTag::ConvolutionQuadrature => "convolution_quadrature",
            SolverTag::DampedWavePropagator => "damped_wave_propagator",
        }
    }
}

/// `θ(t_i)` on the uniform grid `t_i = i·step`, `i = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalTrajectory {
    pub step: f64,
    pub values: Vec<Complex64>,
    pub solver: SolverTag,
    /// Estimated sup-norm discretization error, when the solver provides one.
    pub error_estimate: Option<f64>,
}

impl ModalTrajectory {
    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.values.len() - 1)
    }

    /// Linear interpolation between grid values.
    pub fn at(&self, t: f64) -> Complex64 {
        TimeFunction::Sampled { step: self.step, values: self.values.clone() }.eval(t)
    }

    /// `max_i |θ_i - other(t_i)|`.
    pub fn sup_distance(&self, other: impl Fn(f64) -> Complex64) -> f64 {
        self.values.iter().enumerate().map(|(i, v)| (v - other(self.time(i))).norm()).fold(0.0, f64::max)
    }
}

/// Number of uniform steps covering `[0, horizon]` with spacing at most `step`.
pub(crate) fn step_count(horizon: f64, step: f64) -> Result<usize> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidStep(format!("step {step} must be finite and > 0")));
    }
    if !(horizon.is_finite() && horizon > 0.0) {
        return Err(Error::InvalidStep(format!("horizon {horizon} must be finite and > 0")));
    }
    let n = (horizon / step - 1e-9).ceil().max(1.0);
    if n > 1e8 {
        return Err(Error::InvalidStep(format!("{n} steps exceeds the supported budget")));
    }
    Ok(n as usize)
}

/// Exact solution for exponential-sum kernels.
///
/// Auxiliary states `z_j = ∫ e^{-γ_j(t-s)} θ(s) ds` and
/// `w_j = ∫ e^{-γ_j(t-s)} b(s) ds` turn the Volterra equation into a linear
/// constant-coefficient system, advanced by its matrix exponential with the
/// forcing linear on each step.
pub fn solve_modal_exact(problem: &ModalProblem, horizon: f64, step: f64) -> Result<ModalTrajectory> {
    let terms = problem
        .kernel
        .terms()
        .ok_or(Error::UnsupportedVariant { op: "solve_modal_exact", variant: problem.kernel.kind().name() })?;
    let steps = step_count(horizon, step)?;
    let h = horizon / steps as f64;
    problem.distributed.check_covers(horizon, "distributed forcing")?;
    problem.boundary.check_covers(horizon, "boundary forcing")?;

    let nterms = terms.len();
    let dim = 1 + 2 * nterms;
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DMatrix::<f64>::zeros(dim, 2);
    b[(0, 0)] = 1.0;
    for (j, t) in terms.iter().enumerate() {
        let z = 1 + j;
        let w = 1 + nterms + j;
        a[(0, z)] = -problem.lambda_sq * t.amplitude;
        a[(0, w)] = -t.amplitude;
        a[(z, 0)] = 1.0;
        a[(z, z)] = -t.decay;
        a[(w, w)] = -t.decay;
        b[(w, 1)] = 1.0;
    }
    let prop = LinearPropagator::new(&a, &b, h);

    let forcing = |i: usize| {
        let t = i as f64 * h;
        [problem.distributed.eval(t), problem.boundary.eval(t)]
    };
    let mut state = vec![ZERO; dim];
    state[0] = problem.xi;
    let mut values = Vec::with_capacity(steps + 1);
    values.push(problem.xi);
    let mut f0 = forcing(0);
    for i in 0..steps {
        let f1 = forcing(i + 1);
        state = prop.advance(&state, &f0, &f1);
        values.push(state[0]);
        f0 = f1;
    }
    Ok(ModalTrajectory { step: h, values, solver: SolverTag::ExactAugmented, error_estimate: None })
}

/// Trapezoidal convolution quadrature with Crank–Nicolson time stepping;
/// second order in `h` for smooth kernels. The error estimate compares
/// against the same scheme at step `2h`.
pub fn solve_modal_quadrature(problem: &ModalProblem, horizon: f64, step: f64) -> Result<ModalTrajectory> {
    let steps = step_count(horizon, step)?;
    let fine = quadrature_run(problem, horizon, steps)?;
    let error_estimate = if steps >= 2 && steps % 2 == 0 {
        let coarse = quadrature_run(problem, horizon, steps / 2)?;
        let diff = coarse.iter().enumerate().map(|(i, c)| (c - fine[2 * i]).norm()).fold(0.0, f64::max);
        Some(diff / 3.0)
    } else {
        None
    };
    Ok(ModalTrajectory {
        step: horizon / steps as f64,
        values: fine,
        solver: SolverTag::ConvolutionQuadrature,
        error_estimate,
    })
}

fn quadrature_run(problem: &ModalProblem, horizon: f64, steps: usize) -> Result<Vec<Complex64>> {
    let h = horizon / steps as f64;
    problem.distributed.check_covers(horizon, "distributed forcing")?;
    problem.boundary.check_covers(horizon, "boundary forcing")?;
    let kernel: Vec<f64> =
        (0..=steps).map(|k| problem.kernel.eval((k as f64 * h).min(horizon))).collect::<Result<_>>()?;
    let u: Vec<Complex64> = (0..=steps).map(|i| problem.distributed.eval(i as f64 * h)).collect();

    // Trapezoidal ∫₀^{t_i} K(t_i - s) b(s) ds; b is known, so this is explicit.
    let bconv: Vec<Complex64> = if problem.boundary.is_zero() {
        vec![ZERO; steps + 1]
    } else {
        let b: Vec<Complex64> = (0..=steps).map(|i| problem.boundary.eval(i as f64 * h)).collect();
        (0..=steps)
            .map(|i| {
                if i == 0 {
                    return ZERO;
                }
                let mut acc = 0.5 * (kernel[i] * b[0] + kernel[0] * b[i]);
                for j in 1..i {
                    acc += kernel[i - j] * b[j];
                }
                acc * h
            })
            .collect()
    };

    let lam = problem.lambda_sq;
    let mut theta = Vec::with_capacity(steps + 1);
    theta.push(problem.xi);
    let mut f_prev = u[0] - bconv[0];
    let denom = 1.0 + 0.25 * h * h * lam * kernel[0];
    for i in 0..steps {
        let next = i + 1;
        // history part of the convolution at t_{i+1}, excluding the θ_{i+1} term
        let mut hist = 0.5 * kernel[next] * theta[0];
        for j in 1..next {
            hist += kernel[next - j] * theta[j];
        }
        hist *= h;
        let known = -lam * hist - bconv[next] + u[next];
        let value = (theta[i] + 0.5 * h * (f_prev + known)) / denom;
        theta.push(value);
        f_prev = known - lam * 0.5 * h * kernel[0] * value;
    }
    Ok(theta)
}

/// `θ(t) = ξ Σᵢ q(λᵢ)/p'(λᵢ) e^{λᵢ t}` over the roots of the characteristic
/// polynomial, valid when all roots are simple.
#[derive(Debug, Clone)]
pub struct ResidueExpansion {
    roots: Vec<Complex64>,
    weights: Vec<Complex64>,
}

impl ResidueExpansion {
    pub fn new(kernel: &MemoryKernel, lambda_sq: f64) -> Result<Self> {
        let symbol = CharacteristicSymbol::new(kernel, lambda_sq)?;
        let roots = symbol.roots()?;
        let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut separation = f64::INFINITY;
        for i in 0..roots.len() {
            for j in (i + 1)..roots.len() {
                separation = separation.min((roots[i] - roots[j]).norm());
            }
        }
        if separation < 1e-6 * scale {
            return Err(Error::DegenerateSpectrum { separation });
        }
        let dp = symbol.polynomial().derivative();
        let q = symbol.transfer_numerator();
        let weights = roots.iter().map(|&z| q.eval_complex(z) / dp.eval_complex(z)).collect();
        Ok(ResidueExpansion { roots, weights })
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// `Σᵢ q(λᵢ)/p'(λᵢ)`, equal to one since `deg p = deg q + 1` and both are monic.
    pub fn residue_sum(&self) -> Complex64 {
        self.weights.iter().sum()
    }

    pub fn eval(&self, xi: Complex64, t: f64) -> Complex64 {
        xi * self.roots.iter().zip(&self.weights).map(|(z, w)| w * (z * t).exp()).sum::<Complex64>()
    }
}

pub fn residue_solution(kernel: &MemoryKernel, lambda_sq: f64, xi: Complex64, t: f64) -> Result<Complex64> {
    Ok(ResidueExpansion::new(kernel, lambda_sq)?.eval(xi, t))
}

/// Boundary samples `v(t_i, α_k)` on a uniform time grid and a uniform
/// periodic angular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryTrace {
    pub step: f64,
    pub n_alpha: usize,
    /// `values[i][k] = v(i·step, 2πk/n_alpha)`
    pub values: Vec<Vec<Complex64>>,
}

impl BoundaryTrace {
    pub fn from_fn(step: f64, steps: usize, n_alpha: usize, v: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = (0..=steps)
            .map(|i| (0..n_alpha).map(|k| v(i as f64 * step, 2.0 * PI * k as f64 / n_alpha as f64)).collect())
            .collect();
        BoundaryTrace { step, n_alpha, values }
    }

    fn validate(&self) -> Result<()> {
        if self.n_alpha == 0 || !(self.step > 0.0) {
            return Err(Error::GridMismatch("boundary trace needs n_alpha > 0 and step > 0".into()));
        }
        if let Some(i) = self.values.iter().position(|row| row.len() != self.n_alpha) {
            return Err(Error::GridMismatch(format!(
                "time row {i} has {} angular samples, expected {}",
                self.values[i].len(),
                self.n_alpha
            )));
        }
        Ok(())
    }
}

/// `b_m(t) = ∫₀^{2π} v(t, α) (μ/(√π R)) e^{imα} dα`, the surface integral of
/// `v ∂φ_{nm}/∂ν` with `dσ = R dα`, by the trapezoidal rule.
pub fn boundary_moment(trace: &BoundaryTrace, mode: &Mode, geom: &DiskGeometry) -> Result<TimeFunction> {
    boundary_moment_signed(trace, mode, mode.m as i64, geom)
}

/// [`boundary_moment`] with a signed angular index in the exponential.
pub fn boundary_moment_signed(
    trace: &BoundaryTrace,
    mode: &Mode,
    angular: i64,
    geom: &DiskGeometry,
) -> Result<TimeFunction> {
    trace.validate()?;
    let factor = mode.mu / (PI.sqrt() * geom.radius());
    let dalpha = 2.0 * PI / trace.n_alpha as f64;
    let phases: Vec<Complex64> = (0..trace.n_alpha)
        .map(|k| Complex64::from_polar(factor * dalpha, angular as f64 * k as f64 * dalpha))
        .collect();
    let values = trace.values.iter().map(|row| row.iter().zip(&phases).map(|(v, p)| v * p).sum()).collect();
    Ok(TimeFunction::Sampled { step: trace.step, values })
}

type SupportFn = Arc<dyn Fn(f64, f64) -> bool + Send + Sync>;

/// Distributed control, optionally restricted to a spatial support.
#[derive(Clone)]
pub enum DistributedControl {
    /// Samples `u(k·step, ·)`, linear in time between samples.
    Sampled { step: f64, fields: Vec<PolarField>, support: Option<SupportFn> },
    /// `u(t, x) = s(t) g(x)`
    Separable { profile: PolarField, signal: Arc<dyn Fn(f64) -> f64 + Send + Sync>, support: Option<SupportFn> },
}

impl fmt::Debug for DistributedControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistributedControl::Sampled { step, fields, support } => f
                .debug_struct("Sampled")
                .field("step", step)
                .field("samples", &fields.len())
                .field("masked", &support.is_some())
                .finish(),
            DistributedControl::Separable { support, .. } => {
                f.debug_struct("Separable").field("masked", &support.is_some()).finish()
            }
        }
    }
}

fn restrict(field: &PolarField, support: &Option<SupportFn>) -> PolarField {
    match support {
        Some(keep) => field.masked(|r, a| keep(r, a)),
        None => field.clone(),
    }
}

impl DistributedControl {
    /// Modal forcing `u_{nm}(t)` for every harmonic.
    fn project(&self, hs: &[Harmonic], geom: &DiskGeometry) -> Result<Vec<TimeFunction>> {
        match self {
            DistributedControl::Sampled { step, fields, support } => {
                if !(*step > 0.0) || fields.is_empty() {
                    return Err(Error::GridMismatch("control needs a positive step and at least one sample".into()));
                }
                let projected: Vec<Vec<Complex64>> = fields
                    .par_iter()
                    .map(|field| project_harmonics(&restrict(field, support), hs, geom))
                    .collect::<Result<_>>()?;
                Ok((0..hs.len())
                    .map(|j| TimeFunction::Sampled { step: *step, values: projected.iter().map(|c| c[j]).collect() })
                    .collect())
            }
            DistributedControl::Separable { profile, signal, support } => {
                let coeffs = project_harmonics(&restrict(profile, support), hs, geom)?;
                Ok(coeffs
                    .into_iter()
                    .map(|c| {
                        let signal = signal.clone();
                        TimeFunction::callable(move |t| c * signal(t))
                    })
                    .collect())
            }
        }
    }
}

/// Full-field disk simulation request.
#[derive(Debug, Clone)]
pub struct DiskProblem {
    pub geom: DiskGeometry,
    pub kernel: MemoryKernel,
    pub xi: PolarField,
    pub control: Option<DistributedControl>,
    pub modes: Vec<Mode>,
    pub horizon: f64,
    /// Defaults to `min(0.01, 0.1/√(λ²_max K(0)))`.
    pub step: Option<f64>,
    pub snapshot_times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub time: f64,
    /// Real part of the reconstructed field.
    pub field: PolarField,
    /// Coefficients in the order of [`DiskSimulation::harmonics`].
    pub coefficients: Vec<Complex64>,
    /// Quadrature `L²` norm of the reconstructed (complex) field.
    pub l2_norm: f64,
    /// `ℓ²` norm of the coefficients.
    pub coefficient_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub initial_norm_sq: f64,
    pub captured_norm_sq: f64,
    pub tail_norm_sq: f64,
}

#[derive(Debug, Clone)]
pub struct DiskSimulation {
    pub harmonics: Vec<Harmonic>,
    pub trajectories: Vec<ModalTrajectory>,
    pub snapshots: Vec<FieldSnapshot>,
    pub truncation: TruncationReport,
    pub solver: SolverTag,
    pub step: f64,
}

pub fn default_step(kernel: &MemoryKernel, max_lambda_sq: f64) -> f64 {
    0.01_f64.min(0.1 / (max_lambda_sq * kernel.initial_value()).sqrt())
}

/// Projects the data onto the mode set, solves every modal problem
/// independently, and reconstructs the field at the requested times.
/// Exponential-sum kernels use the exact solver, others the quadrature.
pub fn simulate_disk(problem: &DiskProblem) -> Result<DiskSimulation> {
    simulate_disk_with(problem, problem.kernel.kind() == KernelKind::ExpSum)
}

/// [`simulate_disk`] with an explicit choice of the exact solver.
pub fn simulate_disk_with(problem: &DiskProblem, exact: bool) -> Result<DiskSimulation> {
    if problem.modes.is_empty() {
        return Err(Error::domain("mode set is empty"));
    }
    let geom = problem.geom;
    let hs = harmonics(&problem.modes);
    let xi_coeffs = project_harmonics(&problem.xi, &hs, &geom)?;

    let max_lambda = problem.modes.iter().map(|m| m.lambda_sq).fold(0.0, f64::max);
    let step = problem.step.unwrap_or_else(|| default_step(&problem.kernel, max_lambda));
    let steps = step_count(problem.horizon, step)?;
    let h = problem.horizon / steps as f64;

    let control_series = match &problem.control {
        None => vec![TimeFunction::Zero; hs.len()],
        Some(control) => control.project(&hs, &geom)?,
    };

    let trajectories: Vec<ModalTrajectory> = hs
        .par_iter()
        .zip(xi_coeffs.par_iter())
        .zip(control_series.par_iter())
        .map(|((harm, &xi), u)| {
            let modal = ModalProblem::for_mode(&harm.mode, problem.kernel.clone(), xi).with_distributed(u.clone());
            if exact {
                solve_modal_exact(&modal, problem.horizon, h)
            } else {
                solve_modal_quadrature(&modal, problem.horizon, h)
            }
        })
        .collect::<Result<_>>()?;

    let grid = problem.xi.grid().clone();
    let snapshots = problem
        .snapshot_times
        .par_iter()
        .map(|&t| {
            let idx = ((t / h).round().max(0.0) as usize).min(steps);
            let coefficients: Vec<Complex64> = trajectories.iter().map(|tr| tr.values[idx]).collect();
            reconstruct(grid.clone(), &hs, idx as f64 * h, coefficients)
        })
        .collect();

    let initial_norm_sq = problem.xi.l2_norm().powi(2);
    let captured_norm_sq: f64 = xi_coeffs.iter().map(|c| c.norm_sqr()).sum();
    Ok(DiskSimulation {
        harmonics: hs,
        trajectories,
        snapshots,
        truncation: TruncationReport {
            initial_norm_sq,
            captured_norm_sq,
            tail_norm_sq: (initial_norm_sq - captured_norm_sq).max(0.0),
        },
        solver: if exact { SolverTag::ExactAugmented } else { SolverTag::ConvolutionQuadrature },
        step: h,
    })
}

fn reconstruct(grid: Arc<PolarGrid>, hs: &[Harmonic], time: f64, coefficients: Vec<Complex64>) -> FieldSnapshot {
    let complex = synthesize(grid.clone(), hs, &coefficients);
    let l2_norm = complex.l2_norm();
    let real: Vec<Complex64> = complex.values().iter().map(|v| Complex64::new(v.re, 0.0)).collect();
    let field = PolarField::from_values(grid, real).expect("same grid");
    let coefficient_norm = coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    FieldSnapshot { time, field, coefficients, l2_norm, coefficient_norm }
}

impl DiskSimulation {
    /// Samples the modal solution on the concentric circle `r = radius`
    /// at every `stride`-th time step: the boundary data of the restricted
    /// problem on the inner disk.
    pub fn trace_on_circle(
        &self,
        geom: &DiskGeometry,
        radius: f64,
        n_alpha: usize,
        stride: usize,
    ) -> Result<BoundaryTrace> {
        if !(radius > 0.0 && radius <= geom.radius()) || stride == 0 || n_alpha == 0 {
            return Err(Error::GridMismatch("trace circle must lie inside the disk".into()));
        }
        let samples: Vec<Vec<Complex64>> = (0..n_alpha)
            .map(|k| {
                let alpha = 2.0 * PI * k as f64 / n_alpha as f64;
                self.harmonics.iter().map(|h| h.value(geom, radius, alpha)).collect()
            })
            .collect();
        let len = self.trajectories[0].values.len();
        let values = (0..len)
            .step_by(stride)
            .map(|i| {
                samples
                    .iter()
                    .map(|basis| basis.iter().zip(&self.trajectories).map(|(phi, tr)| phi * tr.values[i]).sum())
                    .collect()
            })
            .collect();
        Ok(BoundaryTrace { step: self.step * stride as f64, n_alpha, values })
    }
}
