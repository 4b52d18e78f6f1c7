//! The characteristic symbol `d(λ) = λ + λ²ₙₘ K̂(λ)` of a modal equation and
//! the sequence of its roots that accumulates at a nonzero zero of `K̂`.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::disk::{DiskGeometry, Mode};
use crate::error::{Error, Result};
use crate::kernel::{MemoryKernel, RationalFunction};
use crate::poly::Polynomial;

/// `p(λ) = λ·den(K̂)(λ) + λ²ₙₘ·num(K̂)(λ)`, normalized to be monic, together
/// with the matching normalization of `q = den(K̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicSymbol {
    kernel: MemoryKernel,
    lambda_sq: f64,
    transform: RationalFunction,
    polynomial: Polynomial,
    denominator: Polynomial,
}

impl CharacteristicSymbol {
    pub fn new(kernel: &MemoryKernel, lambda_sq: f64) -> Result<Self> {
        if !(lambda_sq.is_finite() && lambda_sq > 0.0) {
            return Err(Error::domain(format!("eigenvalue {lambda_sq} must be finite and > 0")));
        }
        let transform = kernel.laplace_transform()?;
        let lambda = Polynomial::new(vec![0.0, 1.0]);
        let raw = &(&lambda * transform.denominator()) + &transform.numerator().scale(lambda_sq);
        let lead = raw.leading();
        Ok(CharacteristicSymbol {
            kernel: kernel.clone(),
            lambda_sq,
            polynomial: raw.scale(1.0 / lead),
            denominator: transform.denominator().scale(1.0 / lead),
            transform,
        })
    }

    pub fn kernel(&self) -> &MemoryKernel {
        &self.kernel
    }

    pub fn lambda_sq(&self) -> f64 {
        self.lambda_sq
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.polynomial
    }

    /// `den(K̂)` scaled by the same factor as [`Self::polynomial`], so that
    /// `θ̂(λ) = ξ·q(λ)/p(λ)` for the unforced modal problem.
    pub fn transfer_numerator(&self) -> &Polynomial {
        &self.denominator
    }

    /// `d(λ) = λ + λ²ₙₘ K̂(λ)` evaluated directly.
    pub fn eval(&self, lambda: Complex64) -> Result<Complex64> {
        Ok(lambda + self.lambda_sq * self.kernel.eval_khat(lambda)?)
    }

    /// All roots of `p`, none of which is a pole of `K̂`.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        let roots = self.polynomial.roots()?;
        let den = self.transform.denominator();
        for z in &roots {
            let scale = den.max_abs_coeff() * z.norm().max(1.0).powi(den.degree() as i32);
            if den.eval_complex(*z).norm() <= 1e-12 * scale {
                return Err(Error::Pole { pole: *z });
            }
        }
        Ok(roots)
    }
}

pub fn characteristic_polynomial(kernel: &MemoryKernel, lambda_sq: f64) -> Result<Polynomial> {
    Ok(CharacteristicSymbol::new(kernel, lambda_sq)?.polynomial)
}

pub fn characteristic_roots(kernel: &MemoryKernel, lambda_sq: f64) -> Result<Vec<Complex64>> {
    CharacteristicSymbol::new(kernel, lambda_sq)?.roots()
}

/// True iff every root lies in the open left half-plane.
pub fn hurwitz_check(roots: &[Complex64]) -> bool {
    roots.iter().all(|z| z.re < 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootSequenceEntry {
    pub n: u32,
    pub lambda_sq: f64,
    pub root: Complex64,
    pub distance: f64,
}

/// For each radial index, the characteristic root nearest a fixed zero of `K̂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSequence {
    pub m: u32,
    pub target: Complex64,
    pub entries: Vec<RootSequenceEntry>,
}

impl RootSequence {
    /// Least-squares slope of `log |λₙ - λ*|` against `log λ²ₙₘ` over entries
    /// with `n ≥ min_n`.
    pub fn log_log_slope(&self, min_n: u32) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .entries
            .iter()
            .filter(|e| e.n >= min_n && e.distance > 0.0)
            .map(|e| (e.lambda_sq.ln(), e.distance.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some(sxy / sxx)
    }
}

/// Picks the root nearest `target`; ties go to the smaller `|Im|`.
pub fn nearest_root(roots: &[Complex64], target: Complex64) -> Option<Complex64> {
    roots.iter().copied().min_by(|a, b| {
        let (da, db) = ((a - target).norm(), (b - target).norm());
        if (da - db).abs() <= 1e-12 * da.max(db) {
            a.im.abs().total_cmp(&b.im.abs())
        } else {
            da.total_cmp(&db)
        }
    })
}

/// Tracks, for `n` in `n_range`, the root of `λ + λ²ₙₘK̂(λ)` closest to the
/// nonzero zero `target` of `K̂`.
pub fn root_sequence(
    kernel: &MemoryKernel,
    m: u32,
    n_range: RangeInclusive<u32>,
    geom: &DiskGeometry,
    target: Complex64,
) -> Result<RootSequence> {
    let zeros = kernel.khat_zeros()?;
    if zeros.is_empty() {
        return Err(Error::NoTarget);
    }
    let target = zeros
        .iter()
        .copied()
        .find(|z| (z - target).norm() <= 1e-8 * z.norm().max(1.0))
        .ok_or_else(|| Error::domain(format!("target {target} is not a zero of the kernel transform")))?;
    if n_range.is_empty() || *n_range.start() == 0 {
        return Err(Error::domain("radial index range must be non-empty and start at n ≥ 1"));
    }
    let ns: Vec<u32> = n_range.collect();
    let entries = ns
        .par_iter()
        .map(|&n| {
            let mode = Mode::new(m, n, geom)?;
            let roots = characteristic_roots(kernel, mode.lambda_sq)?;
            let root = nearest_root(&roots, target).expect("characteristic polynomial has positive degree");
            Ok(RootSequenceEntry { n, lambda_sq: mode.lambda_sq, root, distance: (root - target).norm() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RootSequence { m, target, entries })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_term() -> MemoryKernel {
        MemoryKernel::exp_sum(&[(1.0, 1.0), (1.0, 2.0)]).unwrap()
    }

    #[test]
    fn polynomial_examples() {
        let single = MemoryKernel::exp_sum(&[(1.0, 1.0)]).unwrap();
        assert_eq!(characteristic_polynomial(&single, 1.0).unwrap().coeffs(), &[1.0, 1.0, 1.0]);
        let c = MemoryKernel::constant(2.5).unwrap();
        assert_eq!(characteristic_polynomial(&c, 3.0).unwrap().coeffs(), &[7.5, 0.0, 1.0]);
        let lam = 7.0;
        assert_eq!(
            characteristic_polynomial(&two_term(), lam).unwrap().coeffs(),
            &[3.0 * lam, 2.0 + 2.0 * lam, 3.0, 1.0]
        );
    }

    #[test]
    fn roots_examples() {
        let single = MemoryKernel::exp_sum(&[(1.0, 1.0)]).unwrap();
        let r = characteristic_roots(&single, 1.0).unwrap();
        let s = 3f64.sqrt() / 2.0;
        assert!((r[0] - Complex64::new(-0.5, -s)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(-0.5, s)).norm() < 1e-14);
        assert!(hurwitz_check(&r));

        let c = MemoryKernel::constant(1.0).unwrap();
        let r = characteristic_roots(&c, 4.0).unwrap();
        assert!((r[0] - Complex64::new(0.0, -2.0)).norm() < 1e-14);
        assert!((r[1] - Complex64::new(0.0, 2.0)).norm() < 1e-14);
        assert!(!hurwitz_check(&r));

        let r = characteristic_roots(&two_term(), 4048.1).unwrap();
        assert!(r.iter().any(|z| (z - Complex64::new(-1.5, 0.0)).norm() < 1e-3));
    }

    #[test]
    fn routh_case_is_hurwitz() {
        let r = characteristic_roots(&two_term(), 10.0).unwrap();
        assert_eq!(r.len(), 3);
        assert!(hurwitz_check(&r));
    }

    #[test]
    fn symbol_vanishes_at_roots() {
        let sym = CharacteristicSymbol::new(&two_term(), 14.7).unwrap();
        for z in sym.roots().unwrap() {
            assert!(sym.eval(z).unwrap().norm() < 1e-10 * (1.0 + z.norm()));
        }
    }

    #[test]
    fn sequence_requires_a_target() {
        let g = DiskGeometry::new(1.0).unwrap();
        let c = MemoryKernel::constant(1.0).unwrap();
        assert_eq!(root_sequence(&c, 1, 1..=5, &g, Complex64::new(-1.5, 0.0)), Err(Error::NoTarget));
        let single = MemoryKernel::exp_sum(&[(1.0, 3.0)]).unwrap();
        assert_eq!(root_sequence(&single, 1, 1..=5, &g, Complex64::new(-1.5, 0.0)), Err(Error::NoTarget));
        assert!(root_sequence(&two_term(), 1, 1..=5, &g, Complex64::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn nearest_root_tie_prefers_real_axis() {
        let roots = [Complex64::new(0.0, 1.0), Complex64::new(1.0, 0.0)];
        let picked = nearest_root(&roots, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(picked, Complex64::new(1.0, 0.0));
    }
}
