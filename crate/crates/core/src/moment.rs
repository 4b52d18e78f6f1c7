//! Moment problems `∫₀ᵀ v(t) e^{-λₖ t} dt = rₖ` at characteristic roots and
//! the minimum-norm diagnostic used to detect the clustering obstruction.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disk::{gauss_legendre, DiskGeometry, Mode};
use crate::error::{Error, Result};
use crate::kernel::MemoryKernel;
use crate::symbol::{characteristic_roots, root_sequence};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative eigenvalue cutoff below which the Gram matrix counts as singular.
pub const SPECTRAL_CUTOFF: f64 = 1e-14;

/// `v̂_{0,-m}(λ) = -(1/2π) μ ξ / (R² λ)`: the value the Laplace transform of
/// the boundary control must take at a characteristic root `λ` of mode
/// `(m, n)` for the modal solution to vanish identically.
pub fn moment_rhs(mode: &Mode, xi: Complex64, lambda: Complex64, geom: &DiskGeometry) -> Result<Complex64> {
    if lambda == ZERO {
        return Err(Error::domain("moment value undefined at λ = 0"));
    }
    let r = geom.radius();
    Ok(-(mode.mu * xi) / (2.0 * PI * r * r * lambda))
}

/// Initial coefficients `ξ_{n,m}` of a single angular index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalFamily {
    pub m: u32,
    /// `values[n - 1] = ξ_{n,m}`
    pub values: Vec<Complex64>,
}

impl ModalFamily {
    pub fn zeros(m: u32, n_max: usize) -> Self {
        ModalFamily { m, values: vec![ZERO; n_max] }
    }

    pub fn get(&self, n: u32) -> Complex64 {
        self.values.get(n as usize - 1).copied().unwrap_or(ZERO)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == ZERO)
    }
}

/// `ξ_{n,1} = 0` for odd `n`, `1` for even `n ≤ n_max`; every other mode zero.
pub fn lemma1_scenario(n_max: u32) -> Result<ModalFamily> {
    if n_max < 2 {
        return Err(Error::domain(format!("n_max = {n_max}, need at least 2")));
    }
    let values = (1..=n_max).map(|n| Complex64::new(if n % 2 == 0 { 1.0 } else { 0.0 }, 0.0)).collect();
    Ok(ModalFamily { m: 1, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentSystem {
    pub points: Vec<Complex64>,
    pub rhs: Vec<Complex64>,
    pub horizon: f64,
    /// `(m, n)` of the mode each constraint came from.
    pub origins: Vec<(u32, u32)>,
    pub min_separation: f64,
}

impl MomentSystem {
    pub fn new(points: Vec<Complex64>, rhs: Vec<Complex64>, horizon: f64, origins: Vec<(u32, u32)>) -> Result<Self> {
        if points.len() != rhs.len() || points.len() != origins.len() {
            return Err(Error::domain("points, rhs and origins must have equal length"));
        }
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::domain(format!("horizon {horizon} must be finite and > 0")));
        }
        let mut min_separation = f64::INFINITY;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                min_separation = min_separation.min((points[i] - points[j]).norm());
            }
        }
        if min_separation == 0.0 {
            return Err(Error::DegenerateSpectrum { separation: 0.0 });
        }
        Ok(MomentSystem { points, rhs, horizon, origins, min_separation })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Largest distance between two points.
    pub fn diameter(&self) -> f64 {
        diameter(&self.points)
    }

    /// `G_jk = ∫₀ᵀ e^{-(λⱼ + conj λₖ) t} dt`
    pub fn gram(&self) -> DMatrix<Complex64> {
        let n = self.len();
        DMatrix::from_fn(n, n, |j, k| exp_integral(self.points[j] + self.points[k].conj(), self.horizon))
    }
}

fn diameter(points: &[Complex64]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            d = d.max((points[i] - points[j]).norm());
        }
    }
    d
}

/// `∫₀ᵀ e^{-z t} dt`, with a series near `z = 0`.
fn exp_integral(z: Complex64, horizon: f64) -> Complex64 {
    let x = z * horizon;
    if x.norm() < 1e-4 {
        horizon * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0)
    } else {
        (1.0 - (-x).exp()) / z
    }
}

/// Selects, for each `n` in the range, the point at which a moment
/// constraint is imposed and its right-hand side.
///
/// Kernels whose transform has a nonzero zero use the root tracked towards
/// the zero nearest the origin; otherwise the root with the smallest positive
/// imaginary part is used.
pub fn build_moment_system(
    kernel: &MemoryKernel,
    family: &ModalFamily,
    n_range: std::ops::RangeInclusive<u32>,
    geom: &DiskGeometry,
    horizon: f64,
) -> Result<MomentSystem> {
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(Error::domain("radial index range must be non-empty and start at n ≥ 1"));
    }
    let m = family.m;
    let zeros = kernel.khat_zeros()?;
    let (ns, points): (Vec<u32>, Vec<Complex64>) = if let Some(target) =
        zeros.iter().copied().min_by(|a, b| a.norm().total_cmp(&b.norm()))
    {
        let seq = root_sequence(kernel, m, n_range, geom, target)?;
        seq.entries.iter().map(|e| (e.n, e.root)).unzip()
    } else {
        let ns: Vec<u32> = n_range.collect();
        let points = ns
            .par_iter()
            .map(|&n| {
                let mode = Mode::new(m, n, geom)?;
                let roots = characteristic_roots(kernel, mode.lambda_sq)?;
                roots.iter().copied().filter(|z| z.im > 0.0).min_by(|a, b| a.im.total_cmp(&b.im)).ok_or(Error::NoTarget)
            })
            .collect::<Result<Vec<_>>>()?;
        (ns, points)
    };
    let rhs = ns
        .iter()
        .zip(&points)
        .map(|(&n, &z)| moment_rhs(&Mode::new(m, n, geom)?, family.get(n), z, geom))
        .collect::<Result<Vec<_>>>()?;
    let origins = ns.iter().map(|&n| (m, n)).collect();
    MomentSystem::new(points, rhs, horizon, origins)
}

/// How the minimum-norm problem was solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GramBasis {
    /// Closed-form Gram matrix of the exponentials `e^{-conj(λₖ) t}`.
    Exponential,
    /// Gram matrix of the divided differences of `e^{-λ t}` over the
    /// points, assembled by quadrature; used when the exponential Gram
    /// matrix is numerically singular.
    Newton,
}

/// Minimum `L²(0,T)` solution `v(t) = Σ aₖ e^{-conj(λₖ) t}` of a moment system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinNormControl {
    pub coefficients: Vec<Complex64>,
    pub norm: f64,
    /// `κ₂(G)` of the exponential Gram matrix from its eigenvalues; infinite
    /// when the smallest is not positive.
    pub condition: f64,
    pub basis: GramBasis,
    /// True when the final solve was regularized by spectral truncation.
    /// The norm is then a lower bound for the exact minimum norm.
    pub singular: bool,
    /// `|∫₀ᵀ v(t) e^{-λₖ t} dt - rₖ|` for every constraint.
    pub residuals: Vec<f64>,
    pub min_eigenvalue: f64,
    pub max_eigenvalue: f64,
}

impl MinNormControl {
    /// `v(t)` from the exponential coefficients.
    pub fn eval(&self, system: &MomentSystem, t: f64) -> Complex64 {
        self.coefficients.iter().zip(&system.points).map(|(a, z)| a * (-z.conj() * t).exp()).sum()
    }
}

pub fn min_norm_control(system: &MomentSystem) -> Result<MinNormControl> {
    let n = system.len();
    if n == 0 {
        return Ok(MinNormControl {
            coefficients: Vec::new(),
            norm: 0.0,
            condition: 1.0,
            basis: GramBasis::Exponential,
            singular: false,
            residuals: Vec::new(),
            min_eigenvalue: 0.0,
            max_eigenvalue: 0.0,
        });
    }
    let gram = system.gram();
    let eig = SymmetricEigen::new(gram.clone());
    let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let condition = if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY };
    let homogeneous = system.rhs.iter().all(|r| *r == ZERO);

    if homogeneous || min_eig > SPECTRAL_CUTOFF * max_eig {
        let rhs = DVector::from_column_slice(&system.rhs);
        let coeffs = if homogeneous {
            DVector::zeros(n)
        } else {
            match Cholesky::new(gram.clone()) {
                Some(chol) => chol.solve(&rhs),
                None => truncated_solve(&eig, &rhs, SPECTRAL_CUTOFF * max_eig),
            }
        };
        let g_a = &gram * &coeffs;
        let residuals = g_a.iter().zip(rhs.iter()).map(|(x, y)| (x - y).norm()).collect();
        let norm_sq = coeffs.dotc(&g_a).re;
        return Ok(MinNormControl {
            coefficients: coeffs.iter().copied().collect(),
            norm: norm_sq.max(0.0).sqrt(),
            condition,
            basis: GramBasis::Exponential,
            singular: false,
            residuals,
            min_eigenvalue: min_eig,
            max_eigenvalue: max_eig,
        });
    }

    let newton = newton_solve(system)?;
    Ok(MinNormControl {
        coefficients: newton.coefficients,
        norm: newton.norm,
        condition,
        basis: GramBasis::Newton,
        singular: newton.singular,
        residuals: newton.residuals,
        min_eigenvalue: min_eig,
        max_eigenvalue: max_eig,
    })
}

fn truncated_solve(eig: &SymmetricEigen<Complex64, Dyn>, rhs: &DVector<Complex64>, cutoff: f64) -> DVector<Complex64> {
    let mut out = DVector::zeros(rhs.len());
    for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda > cutoff {
            let v = eig.eigenvectors.column(i);
            let proj = v.dotc(rhs);
            out += v * (proj / lambda);
        }
    }
    out
}

struct NewtonSolution {
    coefficients: Vec<Complex64>,
    norm: f64,
    singular: bool,
    residuals: Vec<f64>,
}

const NEWTON_GAUSS_ORDER: usize = 16;

/// Solves the moment problem in the basis `ψₖ = conj(Dₖ)` with
/// `Dₖ(t) = [λ₁, …, λₖ] e^{-λ t}`, the divided differences over the first
/// `k` points. The constraints become `∫ v Dₖ = [λ₁, …, λₖ] r`, which keeps
/// the information that cancels catastrophically in the exponential basis
/// when points cluster.
fn newton_solve(system: &MomentSystem) -> Result<NewtonSolution> {
    let n = system.len();
    let pts = &system.points;
    let horizon = system.horizon;
    let center = pts.iter().sum::<Complex64>() / n as f64;

    // D(t) = e^{-ct} exp(-t (B - cI)) e₁ with B lower bidiagonal: diag λₖ, subdiagonal 1.
    let mut shifted = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        shifted[(k, k)] = pts[k] - center;
        if k > 0 {
            shifted[(k, k - 1)] = Complex64::new(1.0, 0.0);
        }
    }
    let reach = pts.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let panels = (horizon * reach / 2.0).ceil().max(16.0) as usize;
    let width = horizon / panels as f64;
    let (gx, gw) = gauss_legendre(NEWTON_GAUSS_ORDER);
    let local: Vec<(f64, f64, DMatrix<Complex64>)> = gx
        .iter()
        .zip(&gw)
        .map(|(&x, &w)| {
            let tau = 0.5 * width * (x + 1.0);
            (tau, 0.5 * width * w, (&shifted * Complex64::new(-tau, 0.0)).exp())
        })
        .collect();
    let advance = (&shifted * Complex64::new(-width, 0.0)).exp();

    let mut gram = DMatrix::<Complex64>::zeros(n, n);
    // cross[(j, k)] = ∫ ψₖ e^{-λⱼ t} dt
    let mut cross = DMatrix::<Complex64>::zeros(n, n);
    let mut state = DVector::<Complex64>::zeros(n);
    state[0] = Complex64::new(1.0, 0.0);
    for p in 0..panels {
        let start = p as f64 * width;
        for (tau, weight, prop) in &local {
            let t = start + tau;
            let d = (prop * &state) * (-center * t).exp();
            gram += (&d * d.adjoint()) * Complex64::new(*weight, 0.0);
            for j in 0..n {
                let e = (-pts[j] * t).exp() * *weight;
                for k in 0..n {
                    cross[(j, k)] += d[k].conj() * e;
                }
            }
        }
        state = &advance * state;
    }

    // divided differences of the right-hand side
    let mut dd = system.rhs.clone();
    for level in 1..n {
        for i in (level..n).rev() {
            dd[i] = (dd[i] - dd[i - 1]) / (pts[i] - pts[i - level]);
        }
    }

    // Jacobi equilibration before the spectral solve
    let scale: Vec<f64> = (0..n).map(|k| 1.0 / gram[(k, k)].re.max(f64::MIN_POSITIVE).sqrt()).collect();
    let scaled = DMatrix::from_fn(n, n, |j, k| gram[(j, k)] * scale[j] * scale[k]);
    let rhs = DVector::from_fn(n, |k, _| dd[k] * scale[k]);
    let eig = SymmetricEigen::new(scaled.clone());
    let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let cutoff = SPECTRAL_CUTOFF * max_eig;
    let singular = !(min_eig > cutoff);
    let solved = if singular {
        truncated_solve(&eig, &rhs, cutoff)
    } else {
        match Cholesky::new(scaled.clone()) {
            Some(chol) => chol.solve(&rhs),
            None => truncated_solve(&eig, &rhs, cutoff),
        }
    };
    let norm_sq = solved.dotc(&(&scaled * &solved)).re;
    let b = DVector::from_fn(n, |k, _| solved[k] * scale[k]);

    let achieved = &cross * &b;
    let residuals = achieved.iter().zip(&system.rhs).map(|(x, y)| (x - y).norm()).collect();

    // ψₖ = Σ_{i≤k} conj(w_{ki}) e^{-conj(λᵢ) t}, w_{ki} = 1/Π_{l≤k, l≠i} (λᵢ - λₗ)
    let mut coefficients = vec![ZERO; n];
    for k in 0..n {
        for i in 0..=k {
            let mut w = Complex64::new(1.0, 0.0);
            for l in 0..=k {
                if l != i {
                    w /= pts[i] - pts[l];
                }
            }
            coefficients[i] += b[k] * w.conj();
        }
    }
    Ok(NewtonSolution { coefficients, norm: norm_sq.max(0.0).sqrt(), singular, residuals })
}

/// Regime separators for [`certify`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Largest diameter of the last half of the points still counted as a cluster.
    pub cluster_diameter: f64,
    /// Minimum last/first norm ratio for an obstruction.
    pub obstruction_growth: f64,
    /// Maximum last/first norm ratio for the unobstructed verdict.
    pub bounded_growth: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { cluster_diameter: 0.1, obstruction_growth: 1e3, bounded_growth: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Obstructed,
    Unobstructed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub count: u32,
    pub norm: f64,
    pub condition: f64,
    pub basis: GramBasis,
    pub singular: bool,
    pub max_residual: f64,
    pub diameter: f64,
    pub min_separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub m: u32,
    pub horizon: f64,
    pub entries: Vec<ScheduleEntry>,
    /// Diameter of the last half of the points of the largest system.
    pub cluster_diameter: f64,
    /// Norm of the last entry over the norm of the first (1 when both vanish).
    pub growth: f64,
    pub norms_nondecreasing: bool,
    pub verdict: Verdict,
    pub thresholds: Thresholds,
    pub points: Vec<Complex64>,
    pub note: String,
}

const PROXY_NOTE: &str = "minimum-norm growth over nested moment systems is a finite-dimensional proxy; \
    membership of the control transform in the Paley-Wiener class is not checked directly";

/// Solves nested moment systems with `n = 1..=count` for every count of the
/// schedule and classifies the norm growth.
pub fn certify(
    kernel: &MemoryKernel,
    family: &ModalFamily,
    geom: &DiskGeometry,
    horizon: f64,
    schedule: &[u32],
    thresholds: &Thresholds,
) -> Result<CertificationReport> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("schedule must be a non-empty, strictly increasing list of positive counts"));
    }
    let largest = *schedule.last().unwrap();
    let full = build_moment_system(kernel, family, 1..=largest, geom, horizon)?;

    let entries = schedule
        .par_iter()
        .map(|&count| {
            let k = count as usize;
            let sub = MomentSystem::new(
                full.points[..k].to_vec(),
                full.rhs[..k].to_vec(),
                horizon,
                full.origins[..k].to_vec(),
            )?;
            let control = min_norm_control(&sub)?;
            Ok(ScheduleEntry {
                count,
                norm: control.norm,
                condition: control.condition,
                basis: control.basis,
                singular: control.singular,
                max_residual: control.residuals.iter().cloned().fold(0.0, f64::max),
                diameter: sub.diameter(),
                min_separation: if k > 1 { sub.min_separation } else { f64::INFINITY },
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let half = full.points.len() / 2;
    let cluster_diameter = diameter(&full.points[half..]);
    let first = entries[0].norm;
    let last = entries.last().unwrap().norm;
    let growth = if first > 0.0 {
        last / first
    } else if last == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let norms_nondecreasing = entries.windows(2).all(|w| w[1].norm >= w[0].norm * (1.0 - 1e-9));
    let separated = full.min_separation >= thresholds.cluster_diameter;

    let verdict = if entries.iter().all(|e| e.norm == 0.0) {
        Verdict::Unobstructed
    } else if cluster_diameter < thresholds.cluster_diameter
        && norms_nondecreasing
        && growth > thresholds.obstruction_growth
    {
        Verdict::Obstructed
    } else if growth <= thresholds.bounded_growth && separated {
        Verdict::Unobstructed
    } else {
        Verdict::Inconclusive
    };

    Ok(CertificationReport {
        m: family.m,
        horizon,
        entries,
        cluster_diameter,
        growth,
        norms_nondecreasing,
        verdict,
        thresholds: *thresholds,
        points: full.points,
        note: PROXY_NOTE.to_string(),
    })
}
