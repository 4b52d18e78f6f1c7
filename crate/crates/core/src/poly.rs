//! Dense real polynomials in ascending-degree storage, with a companion-matrix
//! root finder followed by Newton polishing.

use nalgebra::DMatrix;
use num_complex::Complex64;
use std::cmp::Ordering;
use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// Relative residual accepted for a polished root, measured against the
/// unit-max-norm version of the polynomial.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients. Trailing exact zeros are
    /// trimmed; the zero polynomial is stored as `[0.0]`.
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    /// `λ - root`
    pub fn linear_factor(root: f64) -> Self {
        Polynomial::new(vec![-root, 1.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        *self.coeffs.last().unwrap()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0_f64, |acc, c| acc.max(c.abs()))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Polynomial::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// Divides through by the leading coefficient.
    pub fn monic(&self) -> Self {
        self.scale(1.0 / self.leading())
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn eval_complex(&self, z: Complex64) -> Complex64 {
        self.coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return Polynomial::constant(0.0);
        }
        Polynomial::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect())
    }

    /// Synthetic division by `λ - root`; returns `(quotient, remainder)`.
    pub fn divide_linear(&self, root: f64) -> (Polynomial, f64) {
        let n = self.degree();
        if n == 0 {
            return (Polynomial::constant(0.0), self.coeffs[0]);
        }
        let mut quotient = vec![0.0; n];
        let mut carry = 0.0;
        for k in (0..=n).rev() {
            let value = self.coeffs[k] + carry * root;
            if k == 0 {
                return (Polynomial::new(quotient), value);
            }
            quotient[k - 1] = value;
            carry = value;
        }
        unreachable!()
    }

    /// Residual bound used to accept a root: `|p(z)| / max|a_k|` scaled by
    /// `max(1,|z|)^deg`.
    pub fn relative_residual(&self, z: Complex64) -> f64 {
        let scale = self.max_abs_coeff() * z.norm().max(1.0).powi(self.degree() as i32);
        if scale == 0.0 {
            return 0.0;
        }
        self.eval_complex(z).norm() / scale
    }

    /// All complex roots, counted with multiplicity.
    ///
    /// The monic polynomial is rescaled in the variable so its coefficients are
    /// balanced, the companion-matrix eigenvalues are taken as starting points,
    /// and each is refined by Newton's method on the original coefficients.
    /// Roots whose imaginary part is at noise level are snapped to the real
    /// axis when a real refinement succeeds, and the remaining complex roots
    /// are paired so the result is closed under conjugation.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.is_zero() {
            return Err(Error::domain("roots of the zero polynomial are undefined"));
        }
        let n = self.degree();
        match n {
            0 => return Ok(Vec::new()),
            1 => return Ok(vec![Complex64::new(-self.coeffs[0] / self.coeffs[1], 0.0)]),
            _ => {}
        }

        let monic: Vec<f64> = self.coeffs.iter().map(|c| c / self.leading()).collect();
        // Variable scaling λ = s·ζ with s from the Fujiwara-type bound.
        let s = (0..n)
            .filter(|&k| monic[k] != 0.0)
            .map(|k| monic[k].abs().powf(1.0 / (n - k) as f64))
            .fold(0.0_f64, f64::max);
        if s == 0.0 {
            return Ok(vec![Complex64::new(0.0, 0.0); n]);
        }

        let mut companion = DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            companion[(i, i - 1)] = 1.0;
        }
        for k in 0..n {
            companion[(k, n - 1)] = -monic[k] / s.powi((n - k) as i32);
        }
        let seeds = companion.complex_eigenvalues();

        let deriv = self.derivative();
        let mut polished: Vec<Complex64> = seeds.iter().map(|z| newton_polish(self, &deriv, *z * s)).collect();

        let snap_tol = 1e-7;
        for z in polished.iter_mut() {
            if z.im != 0.0 && z.im.abs() <= snap_tol * z.norm().max(1.0) {
                let real = newton_polish_real(self, &deriv, z.re);
                let candidate = Complex64::new(real, 0.0);
                if self.relative_residual(candidate) <= ROOT_RESIDUAL_TOL {
                    *z = candidate;
                }
            }
        }
        pair_conjugates(&mut polished);

        let residuals: Vec<f64> = polished.iter().map(|z| self.relative_residual(*z)).collect();
        let worst = residuals.iter().cloned().fold(0.0_f64, f64::max);
        if !(worst <= ROOT_RESIDUAL_TOL) {
            return Err(Error::RootPolish { worst_residual: worst, tolerance: ROOT_RESIDUAL_TOL, residuals });
        }
        polished.sort_by(compare_roots);
        Ok(polished)
    }
}

fn newton_polish(p: &Polynomial, dp: &Polynomial, start: Complex64) -> Complex64 {
    let mut z = start;
    let mut best = z;
    let mut best_res = p.eval_complex(z).norm();
    for _ in 0..60 {
        let d = dp.eval_complex(z);
        if d.norm() == 0.0 {
            break;
        }
        let step = p.eval_complex(z) / d;
        z -= step;
        let res = p.eval_complex(z).norm();
        if res < best_res {
            best_res = res;
            best = z;
        }
        if step.norm() <= 4.0 * f64::EPSILON * z.norm().max(f64::MIN_POSITIVE) || res == 0.0 {
            break;
        }
    }
    best
}

fn newton_polish_real(p: &Polynomial, dp: &Polynomial, start: f64) -> f64 {
    let mut x = start;
    let mut best = x;
    let mut best_res = p.eval(x).abs();
    for _ in 0..60 {
        let d = dp.eval(x);
        if d == 0.0 {
            break;
        }
        let step = p.eval(x) / d;
        x -= step;
        let res = p.eval(x).abs();
        if res < best_res {
            best_res = res;
            best = x;
        }
        if step.abs() <= 4.0 * f64::EPSILON * x.abs() || res == 0.0 {
            break;
        }
    }
    best
}

/// Replaces each lower-half-plane root by the conjugate of its nearest
/// upper-half-plane partner, provided the two halves have equal counts.
fn pair_conjugates(roots: &mut [Complex64]) {
    let upper: Vec<Complex64> = roots.iter().filter(|z| z.im > 0.0).cloned().collect();
    let lower_idx: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].im < 0.0).collect();
    if upper.len() != lower_idx.len() {
        return;
    }
    let mut used = vec![false; upper.len()];
    for &i in &lower_idx {
        let target = roots[i].conj();
        let best = (0..upper.len()).filter(|&j| !used[j]).min_by(|&a, &b| {
            (upper[a] - target).norm().partial_cmp(&(upper[b] - target).norm()).unwrap_or(Ordering::Equal)
        });
        if let Some(j) = best {
            used[j] = true;
            roots[i] = upper[j].conj();
        }
    }
}

/// Total order on roots: ascending real part, then ascending imaginary part.
pub fn compare_roots(a: &Complex64, b: &Complex64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

impl Add for &Polynomial {
    type Output = Polynomial;

    fn add(self, rhs: &Polynomial) -> Polynomial {
        let len = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..len).map(|k| self.coeffs.get(k).unwrap_or(&0.0) + rhs.coeffs.get(k).unwrap_or(&0.0)).collect();
        Polynomial::new(coeffs)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;

    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}
