use nalgebra::DMatrix;
use num_complex::Complex64;

/// Exact one-step map for `x' = A x + B f(t)` with `f` linear on each step.
///
/// Built from the exponential of the block matrix `[[A, B, 0], [0, 0, I],
/// [0, 0, 0]]·h`, whose first block row holds `e^{Ah}` and the two forcing
/// integrals.
#[derive(Debug, Clone)]
pub struct LinearPropagator {
    step: f64,
    transition: DMatrix<f64>,
    hold: DMatrix<f64>,
    ramp: DMatrix<f64>,
}

impl LinearPropagator {
    pub fn new(a: &DMatrix<f64>, b: &DMatrix<f64>, step: f64) -> Self {
        let n = a.nrows();
        let k = b.ncols();
        assert_eq!(a.ncols(), n);
        assert_eq!(b.nrows(), n);
        let size = n + 2 * k;
        let mut block = DMatrix::<f64>::zeros(size, size);
        block.view_mut((0, 0), (n, n)).copy_from(a);
        block.view_mut((0, n), (n, k)).copy_from(b);
        for i in 0..k {
            block[(n + i, n + k + i)] = 1.0;
        }
        let exp = (block * step).exp();
        LinearPropagator {
            step,
            transition: exp.view((0, 0), (n, n)).into_owned(),
            hold: exp.view((0, n), (n, k)).into_owned(),
            ramp: exp.view((0, n + k), (n, k)).into_owned(),
        }
    }

    pub fn step_size(&self) -> f64 {
        self.step
    }

    /// Advances `state` by one step with forcing values `f0` at the start and
    /// `f1` at the end of the step.
    pub fn advance(&self, state: &[Complex64], f0: &[Complex64], f1: &[Complex64]) -> Vec<Complex64> {
        let n = self.transition.nrows();
        let k = self.hold.ncols();
        let slope: Vec<Complex64> = f0.iter().zip(f1).map(|(a, b)| (b - a) / self.step).collect();
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for (j, s) in state.iter().enumerate() {
                acc += self.transition[(i, j)] * s;
            }
            for j in 0..k {
                acc += self.hold[(i, j)] * f0[j] + self.ramp[(i, j)] * slope[j];
            }
            *o = acc;
        }
        out
    }
}
