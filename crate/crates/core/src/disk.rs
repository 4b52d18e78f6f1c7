//! Dirichlet eigenbasis of the disk `x² + y² < R²`.
//!
//! The orthonormal eigenfunctions are
//! `φ_{nm}(r, α) = J_m(μ r/R) e^{imα} / (√π R J_m'(μ))` with `μ = j_{m,n}`,
//! and `-Δφ_{nm} = (μ/R)² φ_{nm}`. Modes are stored with `m ≥ 0`; the
//! harmonic with angular index `-m` is the complex conjugate `conj(φ_{nm})`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bessel::{bessel_zero, jn, jn_prime};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskGeometry {
    radius: f64,
}

impl DiskGeometry {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::domain(format!("disk radius {radius} must be finite and > 0")));
        }
        Ok(DiskGeometry { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Eigenpair indices with the Bessel zero `mu = j_{m,n}` and eigenvalue
/// `lambda_sq = (mu/R)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub m: u32,
    pub n: u32,
    pub mu: f64,
    pub lambda_sq: f64,
}

impl Mode {
    pub fn new(m: u32, n: u32, geom: &DiskGeometry) -> Result<Self> {
        let mu = bessel_zero(m, n)?;
        let k = mu / geom.radius;
        Ok(Mode { m, n, mu, lambda_sq: k * k })
    }

    /// Radial factor `J_m(μ r/R) / (√π R J_m'(μ))`.
    fn radial(&self, geom: &DiskGeometry, r: f64) -> f64 {
        let big_r = geom.radius;
        jn(self.m, self.mu * r / big_r) / (PI.sqrt() * big_r * jn_prime(self.m, self.mu))
    }
}

/// All modes with `m ≤ m_max`, `1 ≤ n ≤ n_max`, ordered by `(m, n)`.
pub fn mode_set(m_max: u32, n_max: u32, geom: &DiskGeometry) -> Result<Vec<Mode>> {
    let mut modes = Vec::with_capacity(((m_max + 1) * n_max) as usize);
    for m in 0..=m_max {
        for n in 1..=n_max {
            modes.push(Mode::new(m, n, geom)?);
        }
    }
    Ok(modes)
}

/// A basis function with signed angular index: `φ_{nm}` when `angular = m`,
/// `conj(φ_{nm})` when `angular = -m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub mode: Mode,
    pub angular: i64,
}

/// Expands each mode into its `±m` harmonics, `+m` first.
pub fn harmonics(modes: &[Mode]) -> Vec<Harmonic> {
    let mut out = Vec::with_capacity(2 * modes.len());
    for &mode in modes {
        out.push(Harmonic { mode, angular: mode.m as i64 });
        if mode.m > 0 {
            out.push(Harmonic { mode, angular: -(mode.m as i64) });
        }
    }
    out
}

impl Harmonic {
    pub fn value(&self, geom: &DiskGeometry, r: f64, alpha: f64) -> Complex64 {
        self.mode.radial(geom, r) * Complex64::from_polar(1.0, self.angular as f64 * alpha)
    }
}

pub fn eigenfunction_value(mode: &Mode, geom: &DiskGeometry, r: f64, alpha: f64) -> Result<Complex64> {
    if !(0.0..=geom.radius * (1.0 + 1e-12)).contains(&r) {
        return Err(Error::domain(format!("radius {r} outside [0, {}]", geom.radius)));
    }
    let h = Harmonic { mode: *mode, angular: mode.m as i64 };
    Ok(h.value(geom, r.min(geom.radius), alpha))
}

/// `∂φ_{nm}/∂ν` on `r = R`. The `J_m'(μ)` factor of the derivative cancels the
/// one in the normalization, leaving `μ e^{imα} / (√π R²)`.
pub fn boundary_normal_derivative(mode: &Mode, geom: &DiskGeometry, alpha: f64) -> Complex64 {
    let big_r = geom.radius;
    let m = mode.m;
    let x = mode.mu;
    // derivative via J_m' = J_{m-1} - (m/x) J_m; normalization via (J_{m-1} - J_{m+1})/2
    let slope = if m == 0 { -jn(1, x) } else { jn(m - 1, x) - m as f64 / x * jn(m, x) };
    let norm = jn_prime(m, x);
    let ratio = slope / norm;
    assert!((ratio - 1.0).abs() < 1e-9, "J_m' cancellation failed for (m={}, n={}): ratio {ratio}", mode.m, mode.n);
    (mode.mu / big_r) * ratio / (PI.sqrt() * big_r) * Complex64::from_polar(1.0, m as f64 * alpha)
}

/// Tensor grid on the disk: radial quadrature nodes with weights for
/// `∫₀^R g(r) dr` and a uniform periodic angular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    geom: DiskGeometry,
    radii: Vec<f64>,
    radial_weights: Vec<f64>,
    n_alpha: usize,
}

pub const DEFAULT_RADIAL_PANELS: usize = 64;
pub const DEFAULT_GAUSS_ORDER: usize = 16;

impl PolarGrid {
    /// Composite Gauss–Legendre radial nodes on `panels` equal panels.
    pub fn gauss(geom: DiskGeometry, panels: usize, order: usize, n_alpha: usize) -> Result<Self> {
        if panels == 0 || order == 0 || n_alpha == 0 {
            return Err(Error::GridMismatch("grid sizes must be positive".into()));
        }
        let (nodes, weights) = gauss_legendre(order);
        let width = geom.radius / panels as f64;
        let mut radii = Vec::with_capacity(panels * order);
        let mut radial_weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * width;
            for (x, w) in nodes.iter().zip(&weights) {
                radii.push(mid + 0.5 * width * x);
                radial_weights.push(0.5 * width * w);
            }
        }
        Ok(PolarGrid { geom, radii, radial_weights, n_alpha })
    }

    /// Arbitrary strictly increasing radii in `(0, R]`, integrated by the
    /// trapezoidal rule with the weighted integrand vanishing at `r = 0`.
    pub fn from_radii(geom: DiskGeometry, radii: Vec<f64>, n_alpha: usize) -> Result<Self> {
        if radii.is_empty() || n_alpha == 0 {
            return Err(Error::GridMismatch("grid sizes must be positive".into()));
        }
        if radii[0] <= 0.0 || *radii.last().unwrap() > geom.radius * (1.0 + 1e-12) {
            return Err(Error::GridMismatch("radii must lie in (0, R]".into()));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch("radii must be strictly increasing".into()));
        }
        let mut radial_weights = vec![0.0; radii.len()];
        let mut prev = 0.0;
        for i in 0..radii.len() {
            let left = radii[i] - prev;
            radial_weights[i] += 0.5 * left;
            if i > 0 {
                radial_weights[i - 1] += 0.5 * left;
            }
            prev = radii[i];
        }
        Ok(PolarGrid { geom, radii, radial_weights, n_alpha })
    }

    pub fn geometry(&self) -> &DiskGeometry {
        &self.geom
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn alpha(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.n_alpha as f64
    }

    pub fn len(&self) -> usize {
        self.radii.len() * self.n_alpha
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Area weight `w_i r_i Δα` of node `(i, k)`.
    fn area_weight(&self, i: usize) -> f64 {
        self.radial_weights[i] * self.radii[i] * 2.0 * PI / self.n_alpha as f64
    }

    /// Fails with the first mode the grid cannot resolve.
    pub fn check_resolution(&self, modes: &[Mode]) -> Result<()> {
        for mode in modes {
            let needed_alpha = 8 * (mode.m.max(1) as usize);
            if self.n_alpha < needed_alpha {
                return Err(Error::Resolution {
                    m: mode.m,
                    n: mode.n,
                    reason: format!("{} angular points, need at least {needed_alpha}", self.n_alpha),
                });
            }
            let needed_r = 4 * mode.n as usize;
            if self.radii.len() < needed_r {
                return Err(Error::Resolution {
                    m: mode.m,
                    n: mode.n,
                    reason: format!("{} radial points, need at least {needed_r}", self.radii.len()),
                });
            }
        }
        Ok(())
    }
}

/// Complex samples on a [`PolarGrid`], stored radius-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarField {
    grid: Arc<PolarGrid>,
    values: Vec<Complex64>,
}

impl PolarField {
    pub fn zeros(grid: Arc<PolarGrid>) -> Self {
        let len = grid.len();
        PolarField { grid, values: vec![Complex64::new(0.0, 0.0); len] }
    }

    pub fn from_fn(grid: Arc<PolarGrid>, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &r in &grid.radii {
            for k in 0..grid.n_alpha {
                values.push(f(r, grid.alpha(k)));
            }
        }
        PolarField { grid, values }
    }

    pub fn from_values(grid: Arc<PolarGrid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {} nodes", values.len(), grid.len())));
        }
        Ok(PolarField { grid, values })
    }

    pub fn grid(&self) -> &Arc<PolarGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, i: usize, k: usize) -> Complex64 {
        self.values[i * self.grid.n_alpha + k]
    }

    /// Sets every node where `keep(r, α)` is false to zero.
    pub fn masked(&self, keep: impl Fn(f64, f64) -> bool) -> Self {
        let mut out = self.clone();
        for (i, &r) in self.grid.radii.iter().enumerate() {
            for k in 0..self.grid.n_alpha {
                if !keep(r, self.grid.alpha(k)) {
                    out.values[i * self.grid.n_alpha + k] = Complex64::new(0.0, 0.0);
                }
            }
        }
        out
    }

    pub fn l2_norm(&self) -> f64 {
        let n_alpha = self.grid.n_alpha;
        let mut sum = 0.0;
        for i in 0..self.grid.radii.len() {
            let row: f64 = self.values[i * n_alpha..(i + 1) * n_alpha].iter().map(|v| v.norm_sqr()).sum();
            sum += row * self.grid.area_weight(i);
        }
        sum.sqrt()
    }

    /// `∫ f(r,α) e^{-isα} dα` at every radius.
    fn angular_coefficient(&self, angular: i64) -> Vec<Complex64> {
        let n_alpha = self.grid.n_alpha;
        let twiddle: Vec<Complex64> = (0..n_alpha)
            .map(|k| Complex64::from_polar(2.0 * PI / n_alpha as f64, -(angular as f64) * self.grid.alpha(k)))
            .collect();
        (0..self.grid.radii.len())
            .map(|i| self.values[i * n_alpha..(i + 1) * n_alpha].iter().zip(&twiddle).map(|(v, t)| v * t).sum())
            .collect()
    }
}

/// `⟨field, φ_{nm}⟩ = ∫ field · conj(φ_{nm})` for each mode.
pub fn project(field: &PolarField, modes: &[Mode], geom: &DiskGeometry) -> Result<Vec<Complex64>> {
    let hs: Vec<Harmonic> = modes.iter().map(|&mode| Harmonic { mode, angular: mode.m as i64 }).collect();
    project_harmonics(field, &hs, geom)
}

/// Projection onto signed harmonics; `conj(φ_{nm})` for negative indices.
pub fn project_harmonics(field: &PolarField, harmonics: &[Harmonic], geom: &DiskGeometry) -> Result<Vec<Complex64>> {
    if (field.grid.geom.radius - geom.radius).abs() > 1e-12 * geom.radius {
        return Err(Error::GridMismatch(format!(
            "field grid radius {} differs from geometry radius {}",
            field.grid.geom.radius, geom.radius
        )));
    }
    let modes: Vec<Mode> = harmonics.iter().map(|h| h.mode).collect();
    field.grid.check_resolution(&modes)?;
    let grid = &field.grid;
    let mut cache: Vec<(i64, Vec<Complex64>)> = Vec::new();
    let mut out = Vec::with_capacity(harmonics.len());
    for h in harmonics {
        let idx = match cache.iter().position(|(s, _)| *s == h.angular) {
            Some(i) => i,
            None => {
                cache.push((h.angular, field.angular_coefficient(h.angular)));
                cache.len() - 1
            }
        };
        let angular = &cache[idx].1;
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &r) in grid.radii.iter().enumerate() {
            acc += angular[i] * (h.mode.radial(geom, r) * grid.radial_weights[i] * r);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Field `Σ c_h φ_h` sampled on `grid`.
pub fn synthesize(grid: Arc<PolarGrid>, harmonics: &[Harmonic], coeffs: &[Complex64]) -> PolarField {
    let geom = grid.geom;
    let n_alpha = grid.n_alpha;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (h, &c) in harmonics.iter().zip(coeffs) {
        if c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let phases: Vec<Complex64> =
            (0..n_alpha).map(|k| Complex64::from_polar(1.0, h.angular as f64 * grid.alpha(k))).collect();
        for (i, &r) in grid.radii.iter().enumerate() {
            let radial = c * h.mode.radial(&geom, r);
            for (k, ph) in phases.iter().enumerate() {
                values[i * n_alpha + k] += radial * ph;
            }
        }
    }
    PolarField { grid, values }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
