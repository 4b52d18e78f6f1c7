use gpmemory::bessel::{bessel_j, bessel_zero};
use gpmemory::cli::{parse_config_str, KernelSpec, RunConfig};
use gpmemory::kernel::MemoryKernel;
use gpmemory::moment::{min_norm_control, MomentSystem};
use gpmemory::poly::Polynomial;
use gpmemory::simulator::{solve_modal_exact, ModalProblem, ResidueExpansion, TimeFunction};
use gpmemory::stability::{classify, memory_wave_cubic, routh_hurwitz_cubic, Cubic, SignConvention};
use gpmemory::symbol::{characteristic_roots, hurwitz_check};
use num_complex::Complex64;
use proptest::prelude::*;

/// Exponential-sum terms with rates at least 0.05 apart.
fn exp_terms(max_terms: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.05f64..4.0, 0.1f64..12.0), 1..=max_terms).prop_filter("distinct rates", |terms| {
        let mut rates: Vec<f64> = terms.iter().map(|t| t.1).collect();
        rates.sort_by(f64::total_cmp);
        rates.windows(2).all(|w| w[1] - w[0] > 0.05)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn polynomial_roots_are_accurate(coeffs in prop::collection::vec(-5.0f64..5.0, 2..8), lead in 0.5f64..3.0) {
        let mut c = coeffs;
        c.push(lead);
        let p = Polynomial::new(c);
        let roots = p.roots().unwrap();
        prop_assert_eq!(roots.len(), p.degree());
        for z in &roots {
            prop_assert!(p.relative_residual(*z) < 1e-10, "root {} residual {:e}", z, p.relative_residual(*z));
            // real coefficients: the conjugate is also a root
            prop_assert!(roots.iter().any(|w| (w - z.conj()).norm() <= 1e-8 * z.norm().max(1.0)));
        }
    }

    #[test]
    fn transform_zeros_interlace_poles(terms in exp_terms(6)) {
        let kernel = MemoryKernel::exp_sum(&terms).unwrap();
        let zeros = kernel.khat_zeros().unwrap();
        prop_assert_eq!(zeros.len(), terms.len() - 1);
        let mut poles: Vec<f64> = terms.iter().map(|t| -t.1).collect();
        poles.sort_by(|a, b| b.total_cmp(a));
        let mut reals: Vec<f64> = zeros.iter().map(|z| z.re).collect();
        reals.sort_by(|a, b| b.total_cmp(a));
        for (i, z) in reals.iter().enumerate() {
            prop_assert!(poles[i + 1] < *z && *z < poles[i]);
        }
        prop_assert!(zeros.iter().all(|z| z.im == 0.0));
    }

    #[test]
    fn positive_kernels_give_dissipative_symbols(terms in exp_terms(4), lambda_sq in 0.01f64..500.0) {
        let kernel = MemoryKernel::exp_sum(&terms).unwrap();
        let roots = characteristic_roots(&kernel, lambda_sq).unwrap();
        prop_assert_eq!(roots.len(), terms.len() + 1);
        prop_assert!(hurwitz_check(&roots));
    }

    #[test]
    fn residues_sum_to_one(terms in exp_terms(5), lambda_sq in 0.05f64..100.0) {
        let kernel = MemoryKernel::exp_sum(&terms).unwrap();
        if let Ok(expansion) = ResidueExpansion::new(&kernel, lambda_sq) {
            prop_assert!((expansion.residue_sum() - 1.0).norm() < 1e-10);
            prop_assert!((expansion.eval(Complex64::new(1.0, 0.0), 0.0) - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn modal_solution_is_linear_in_data(
        terms in exp_terms(3),
        lambda_sq in 0.1f64..20.0,
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
    ) {
        let kernel = MemoryKernel::exp_sum(&terms).unwrap();
        let solve = |xi: Complex64, u: TimeFunction| {
            solve_modal_exact(&ModalProblem::new(lambda_sq, kernel.clone(), xi).with_distributed(u), 2.0, 0.01).unwrap()
        };
        let forcing = || TimeFunction::callable(|t| Complex64::new(t.cos(), 0.0));
        let x = solve(Complex64::new(1.0, 0.0), TimeFunction::Zero);
        let y = solve(Complex64::new(0.0, 0.0), forcing());
        let combined = solve(Complex64::new(a, 0.0), TimeFunction::callable(move |t| Complex64::new(b * t.cos(), 0.0)));
        for i in 0..x.values.len() {
            let expected = a * x.values[i] + b * y.values[i];
            prop_assert!((combined.values[i] - expected).norm() < 1e-12 * (1.0 + expected.norm()));
        }
    }

    #[test]
    fn bessel_zeros_are_zeros(m in 0u32..20, n in 1u32..30) {
        let mu = bessel_zero(m, n).unwrap();
        let next = bessel_zero(m, n + 1).unwrap();
        prop_assert!(bessel_j(m, mu).unwrap().abs() < 1e-13);
        prop_assert!(mu < bessel_zero(m + 1, n).unwrap() && bessel_zero(m + 1, n).unwrap() < next);
    }

    #[test]
    fn sampled_signals_interpolate_between_samples(values in prop::collection::vec(-10.0f64..10.0, 2..20), t in 0.0f64..1.0) {
        let n = values.len() - 1;
        let f = TimeFunction::Sampled {
            step: 1.0 / n as f64,
            values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        };
        let i = ((t * n as f64).floor() as usize).min(n - 1);
        let (lo, hi) = (values[i].min(values[i + 1]), values[i].max(values[i + 1]));
        let v = f.eval(t).re;
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn routh_test_matches_roots(a2 in -5.0f64..5.0, a1 in -5.0f64..5.0, a0 in -5.0f64..5.0) {
        let c = Cubic { a2, a1, a0, convention: SignConvention::Adopted };
        let max_re = c.max_real_part().unwrap();
        // stay clear of the boundary, where either answer is round-off
        prop_assume!(max_re.abs() > 1e-6);
        prop_assert_eq!(routh_hurwitz_cubic(a2, a1, a0), max_re < 0.0);
    }

    #[test]
    fn verdict_does_not_depend_on_frequency(
        alpha in 0.1f64..5.0,
        gamma in 0.1f64..5.0,
        ratio in -1.0f64..2.0,
        w1 in 1e-2f64..1e3,
        w2 in 1e-2f64..1e3,
    ) {
        let q = ratio * alpha * gamma;
        for conv in [SignConvention::Adopted, SignConvention::AsWritten] {
            prop_assert_eq!(classify(alpha, q, gamma, w1, conv).unwrap(), classify(alpha, q, gamma, w2, conv).unwrap());
        }
        let cubic = memory_wave_cubic(alpha, q, gamma, w1, SignConvention::Adopted).unwrap();
        prop_assert!((cubic.routh_margin() - q * w1).abs() <= 1e-12 * (alpha * gamma + q.abs()) * w1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gram_is_hermitian_and_positive(
        points in prop::collection::vec((0.1f64..5.0, -5.0f64..5.0), 1..8),
        horizon in 0.5f64..10.0,
    ) {
        let pts: Vec<Complex64> = points.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
        let n = pts.len();
        let system = MomentSystem::new(pts, vec![Complex64::new(1.0, 0.0); n], horizon, vec![(0, 0); n]).unwrap();
        let g = system.gram();
        let max_diag = (0..n).map(|i| g[(i, i)].re).fold(0.0, f64::max);
        for i in 0..n {
            prop_assert!(g[(i, i)].im.abs() < 1e-15 * max_diag);
            for j in 0..n {
                prop_assert!((g[(i, j)] - g[(j, i)].conj()).norm() <= 1e-14 * max_diag);
            }
        }
        let eig = g.symmetric_eigenvalues();
        prop_assert!(eig.iter().all(|&e| e >= -1e-12 * max_diag));
    }

    #[test]
    fn min_norm_grows_with_constraints(
        rhs in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..6),
        horizon in 1.0f64..5.0,
    ) {
        let n = rhs.len();
        let points: Vec<Complex64> = (0..n).map(|k| Complex64::new(0.5 + k as f64, 0.0)).collect();
        let rhs: Vec<Complex64> = rhs.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let mut previous = 0.0;
        for k in 1..=n {
            let sub = MomentSystem::new(points[..k].to_vec(), rhs[..k].to_vec(), horizon, vec![(0, 0); k]).unwrap();
            let control = min_norm_control(&sub).unwrap();
            prop_assert!(control.residuals.iter().all(|&r| r < 1e-8 * (1.0 + control.norm)));
            prop_assert!(control.norm >= previous * (1.0 - 1e-9));
            previous = control.norm;
        }
    }

    #[test]
    fn config_round_trips_through_json(
        terms in exp_terms(4),
        alpha in 0.1f64..10.0,
        gamma in 0.1f64..10.0,
        horizon in 0.1f64..100.0,
        radius in 0.1f64..10.0,
    ) {
        let text = serde_json::json!({
            "command": "stability",
            "kernel": { "type": "expsum", "terms": terms },
            "geometry": { "radius": radius },
            "time": { "horizon": horizon },
            "stability": { "alpha": alpha, "gamma": gamma },
        })
        .to_string();
        let config: RunConfig = parse_config_str(&text).unwrap();
        let echoed = serde_json::to_string(&config).unwrap();
        prop_assert_eq!(parse_config_str(&echoed).unwrap(), config.clone());
        match config.kernel.unwrap() {
            KernelSpec::Expsum { terms: parsed } => {
                let parsed: Vec<(f64, f64)> = parsed.iter().map(|t| (t[0], t[1])).collect();
                prop_assert_eq!(parsed, terms);
            }
            other => prop_assert!(false, "unexpected kernel {:?}", other),
        }
    }
}
