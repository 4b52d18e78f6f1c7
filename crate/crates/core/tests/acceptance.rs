//! Acceptance suite. Runs as a plain binary (`harness = false`) so that
//! `cargo test` always shows one PASS/FAIL line per criterion.

use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gpmemory::bessel::{bessel_zero, bessel_zeros};
use gpmemory::cli::{parse_config, run};
use gpmemory::disk::{harmonics, mode_set, project_harmonics, DiskGeometry, Mode, PolarField, PolarGrid};
use gpmemory::kernel::MemoryKernel;
use gpmemory::moment::{certify, lemma1_scenario, Thresholds, Verdict};
use gpmemory::simulator::{
    simulate_disk, solve_modal_exact, solve_modal_quadrature, DiskProblem, ModalProblem, ResidueExpansion,
};
use gpmemory::stability::{
    classify, gp_to_damped_wave, memory_wave_cubic, simulate_damped_wave, stability_interval, ControlSignal,
    SignConvention, Stability,
};
use gpmemory::symbol::root_sequence;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    body: fn() -> Check,
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn two_term() -> MemoryKernel {
    MemoryKernel::exp_sum(&[(1.0, 1.0), (1.0, 2.0)]).unwrap()
}

fn unit_disk() -> DiskGeometry {
    DiskGeometry::new(1.0).unwrap()
}

/// Random positive exponential sum with `count` terms and rates at least
/// `gap` apart.
fn random_kernel(rng: &mut ChaCha8Rng, count: usize, c: (f64, f64), gamma: (f64, f64), gap: f64) -> MemoryKernel {
    loop {
        let mut rates: Vec<f64> = (0..count).map(|_| rng.random_range(gamma.0..gamma.1)).collect();
        rates.sort_by(f64::total_cmp);
        if rates.windows(2).any(|w| w[1] - w[0] < gap) {
            continue;
        }
        let terms: Vec<(f64, f64)> = rates.iter().map(|&g| (rng.random_range(c.0..c.1), g)).collect();
        return MemoryKernel::exp_sum(&terms).unwrap();
    }
}

// Criterion 1 oracle: J_m by its power series with compensated summation,
// zeros by plain bisection. Independent of the library's Bessel code.
fn series_j(m: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(m as i32) / (1..=m).map(f64::from).product::<f64>();
    let (mut sum, mut comp) = (0.0_f64, 0.0_f64);
    for k in 0..200u32 {
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        term *= -half * half / ((k + 1) as f64 * (k + 1 + m) as f64);
        if term.abs() < 1e-30 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn bisect_zero(m: u32, mut lo: f64, mut hi: f64) -> f64 {
    let flo = series_j(m, lo);
    assert!(flo * series_j(m, hi) < 0.0, "oracle bracket [{lo}, {hi}] has no sign change");
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        if (series_j(m, mid) > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn bessel_zeros_criterion() -> Check {
    let cases =
        [(0, 1, 2.0, 3.0, 2.404825557695773), (1, 1, 3.0, 4.5, 3.831705970207512), (0, 2, 5.0, 6.0, 5.520078110286311)];
    let mut worst = 0.0_f64;
    for (m, n, lo, hi, reference) in cases {
        let oracle = bisect_zero(m, lo, hi);
        let computed = bessel_zero(m, n).map_err(|e| e.to_string())?;
        let rel = ((computed - oracle) / oracle).abs();
        worst = worst.max(rel);
        if rel > 1e-12 || ((reference - oracle) / oracle).abs() > 1e-12 {
            return Err(format!("μ_{n}^{m}: computed {computed:.16}, oracle {oracle:.16}, table {reference}"));
        }
    }
    let table: Vec<Vec<f64>> = (0..=11).map(|m| bessel_zeros(m, 41).unwrap()).collect();
    let mut violations = 0;
    for m in 0..=10 {
        for n in 0..40 {
            let (a, b, c) = (table[m][n], table[m + 1][n], table[m][n + 1]);
            if !(a < b && b < c) {
                violations += 1;
            }
        }
    }
    ensure(
        violations == 0,
        format!("worst relative error vs bisection oracle {worst:.1e}; {violations} interlacing violations over m ≤ 10, n ≤ 40"),
    )
}

fn orthonormality_criterion() -> Check {
    let geom = unit_disk();
    let modes = mode_set(5, 5, &geom).map_err(|e| e.to_string())?;
    let hs = harmonics(&modes);
    let grid = Arc::new(PolarGrid::gauss(geom, 64, 16, 64).map_err(|e| e.to_string())?);
    let mut worst = 0.0_f64;
    for (i, h) in hs.iter().enumerate() {
        let field = PolarField::from_fn(grid.clone(), |r, a| h.value(&geom, r, a));
        let row = project_harmonics(&field, &hs, &geom).map_err(|e| e.to_string())?;
        for (j, v) in row.iter().enumerate() {
            let delta = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - delta).norm());
        }
    }
    ensure(worst < 1e-8, format!("{} basis functions, max |⟨φ, φ′⟩ − δ| = {worst:.1e}", hs.len()))
}

fn interlacing_criterion() -> Check {
    let mut rng = rng(3);
    let mut tightest = f64::INFINITY;
    for trial in 0..200 {
        let count = rng.random_range(1..=6);
        let kernel = random_kernel(&mut rng, count, (0.1, 5.0), (0.1, 20.0), 1e-2);
        let terms = kernel.terms().unwrap();
        let mut poles: Vec<f64> = terms.iter().map(|t| -t.decay).collect();
        poles.sort_by(|a, b| b.total_cmp(a));
        let zeros = kernel.khat_zeros().map_err(|e| format!("trial {trial}: {e}"))?;
        if zeros.len() != count - 1 {
            return Err(format!("trial {trial}: {} zeros for {count} terms", zeros.len()));
        }
        let mut reals = Vec::new();
        for z in &zeros {
            if z.im.abs() > 1e-12 * z.norm().max(1.0) {
                return Err(format!("trial {trial}: non-real zero {z}"));
            }
            reals.push(z.re);
        }
        reals.sort_by(|a, b| b.total_cmp(a));
        for (i, z) in reals.iter().enumerate() {
            let (upper, lower) = (poles[i], poles[i + 1]);
            if !(lower < *z && *z < upper) {
                return Err(format!("trial {trial}: zero {z} outside ({lower}, {upper})"));
            }
            tightest = tightest.min((z - lower).min(upper - z));
        }
    }
    ensure(true, format!("200 kernels, all zeros real and strictly interlacing (closest pole gap {tightest:.1e})"))
}

fn clustering_criterion() -> Check {
    let target = Complex64::new(-1.5, 0.0);
    let seq = root_sequence(&two_term(), 1, 1..=40, &unit_disk(), target).map_err(|e| e.to_string())?;
    let d: Vec<f64> = seq.entries.iter().map(|e| e.distance).collect();
    let monotone = d[3..].windows(2).all(|w| w[1] < w[0]);
    let slope = seq.log_log_slope(4).ok_or("too few points for a slope")?;
    let d20 = seq.entries[19].distance;
    ensure(
        monotone && (slope + 1.0).abs() <= 0.15 && d20 < 1e-3,
        format!("monotone beyond n=3: {monotone}; slope {slope:.4}; n=20 distance {d20:.2e}"),
    )
}

fn sup_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn solver_triple_criterion() -> Check {
    let mut rng = rng(5);
    let (horizon, step) = (10.0, 1e-3);
    let mut worst = [0.0_f64; 3];
    for trial in 0..20 {
        let count = rng.random_range(1..=3);
        let kernel = random_kernel(&mut rng, count, (0.1, 0.6), (0.3, 3.0), 0.05);
        let radius = rng.random_range(3.0..5.0);
        let geom = DiskGeometry::new(radius).unwrap();
        let mode = Mode::new(rng.random_range(0..=1), rng.random_range(1..=2), &geom).unwrap();
        let xi = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let problem = ModalProblem::for_mode(&mode, kernel.clone(), xi);
        let exact = solve_modal_exact(&problem, horizon, step).map_err(|e| e.to_string())?;
        let quad = solve_modal_quadrature(&problem, horizon, step).map_err(|e| e.to_string())?;
        let residue = ResidueExpansion::new(&kernel, mode.lambda_sq).map_err(|e| format!("trial {trial}: {e}"))?;
        let res: Vec<Complex64> = (0..exact.values.len()).map(|i| residue.eval(xi, exact.time(i))).collect();
        let diffs =
            [sup_diff(&exact.values, &quad.values), sup_diff(&exact.values, &res), sup_diff(&quad.values, &res)];
        for (w, d) in worst.iter_mut().zip(diffs) {
            *w = w.max(d);
        }
    }
    let agree = worst.iter().all(|&d| d < 1e-5);

    // observed order against the exact solver on successive halvings
    let problem = ModalProblem::new(2.0, two_term(), Complex64::new(1.0, 0.0));
    let errors: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| {
            let q = solve_modal_quadrature(&problem, horizon, h).unwrap();
            let e = solve_modal_exact(&problem, horizon, h).unwrap();
            sup_diff(&q.values, &e.values)
        })
        .collect();
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let order_ok = orders.iter().all(|p| (p - 2.0).abs() <= 0.2);
    ensure(
        agree && order_ok,
        format!(
            "sup diffs exact/quadrature {:.1e}, exact/residue {:.1e}, quadrature/residue {:.1e}; observed orders {:.3}, {:.3}",
            worst[0], worst[1], worst[2], orders[0], orders[1]
        ),
    )
}

fn residue_completeness_criterion() -> Check {
    let mut rng = rng(6);
    let mut worst = 0.0_f64;
    let mut tried = 0;
    while tried < 100 {
        let count = rng.random_range(1..=5);
        let kernel = random_kernel(&mut rng, count, (0.1, 3.0), (0.1, 10.0), 0.05);
        let lambda_sq = 10f64.powf(rng.random_range(-1.0..2.0));
        let expansion = ResidueExpansion::new(&kernel, lambda_sq).map_err(|e| e.to_string())?;
        worst = worst.max((expansion.residue_sum() - 1.0).norm());
        tried += 1;
    }
    ensure(worst < 1e-10, format!("100 symbols, max |Σ q(λᵢ)/p′(λᵢ) − 1| = {worst:.1e}"))
}

fn obstruction_criterion() -> Check {
    let family = lemma1_scenario(25).map_err(|e| e.to_string())?;
    let schedule = [5, 10, 15, 20, 25];
    let thresholds = Thresholds::default();
    let geom = unit_disk();
    let primary = certify(&two_term(), &family, &geom, 4.0, &schedule, &thresholds).map_err(|e| e.to_string())?;
    let contrast = certify(&MemoryKernel::constant(1.0).unwrap(), &family, &geom, 4.0, &schedule, &thresholds)
        .map_err(|e| e.to_string())?;
    ensure(
        primary.verdict == Verdict::Obstructed
            && primary.growth >= 1e3
            && contrast.verdict == Verdict::Unobstructed
            && contrast.growth <= 10.0,
        format!(
            "two-term kernel {:?} (growth {:.2e}); constant kernel {:?} (growth {:.3})",
            primary.verdict, primary.growth, contrast.verdict, contrast.growth
        ),
    )
}

fn reduction_criterion() -> Check {
    let mut rng = rng(8);
    let (horizon, step) = (10.0, 1e-3);
    let mut worst = 0.0_f64;
    for trial in 0..10 {
        let q = rng.random_range(0.2..3.0);
        let gamma = rng.random_range(0.2..3.0);
        let lambda_sq = rng.random_range(0.5..10.0);
        let xi = rng.random_range(-1.0..1.0);
        let u = match trial % 3 {
            0 => ControlSignal::Zero,
            1 => {
                ControlSignal::Exponential { amplitude: rng.random_range(-1.0..1.0), rate: rng.random_range(-1.0..0.5) }
            }
            _ => {
                let (a, w) = (rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0));
                ControlSignal::Analytic {
                    value: Arc::new(move |t: f64| a * (w * t).sin()),
                    derivative: Arc::new(move |t: f64| a * w * (w * t).cos()),
                }
            }
        };
        let kernel = MemoryKernel::exp_sum(&[(q, gamma)]).unwrap();
        let gp = ModalProblem::new(lambda_sq, kernel, Complex64::new(xi, 0.0)).with_distributed(u.as_time_function());
        let a = solve_modal_exact(&gp, horizon, step).map_err(|e| e.to_string())?;
        let wave = gp_to_damped_wave(q, gamma, lambda_sq.sqrt(), xi, &u).map_err(|e| e.to_string())?;
        let b = simulate_damped_wave(&wave, horizon, step).map_err(|e| e.to_string())?;
        worst = worst.max(sup_diff(&a.values, &b.values));
    }
    ensure(worst < 1e-6, format!("10 instances, max sup difference {worst:.1e}"))
}

fn stability_criterion() -> Check {
    let mut rng = rng(9);
    let omega_sqs = [0.1, 1.0, 10.0, 100.0, 1000.0];
    for trial in 0..10 {
        let alpha = rng.random_range(0.2..5.0);
        let gamma = rng.random_range(0.2..5.0);
        let ag = alpha * gamma;
        let iv = stability_interval(alpha, gamma, SignConvention::Adopted).map_err(|e| e.to_string())?;
        if iv.lower != 0.0 || (iv.upper - ag).abs() > 1e-15 * ag {
            return Err(format!("trial {trial}: interval ({}, {}) instead of (0, {ag})", iv.lower, iv.upper));
        }
        let expected = [
            (0.0, Stability::Marginal),
            (ag, Stability::Marginal),
            (0.5 * ag, Stability::Stable),
            (-0.1 * ag, Stability::Unstable),
            (1.1 * ag, Stability::Unstable),
        ];
        for (q, verdict) in expected {
            if iv.classify(q) != verdict {
                return Err(format!("trial {trial}: interval classifies q={q} as {:?}", iv.classify(q)));
            }
            for &w in &omega_sqs {
                let v = classify(alpha, q, gamma, w, SignConvention::Adopted).map_err(|e| e.to_string())?;
                if v != verdict {
                    return Err(format!("trial {trial}: q={q}, ω²={w} gives {v:?}, expected {verdict:?}"));
                }
            }
        }
        for &w in &omega_sqs {
            let below = memory_wave_cubic(alpha, ag * (1.0 - 1e-3), gamma, w, SignConvention::Adopted).unwrap();
            let above = memory_wave_cubic(alpha, ag * (1.0 + 1e-3), gamma, w, SignConvention::Adopted).unwrap();
            let (rb, ra) = (below.max_real_part().unwrap(), above.max_real_part().unwrap());
            if !(rb < 0.0 && ra > 0.0) {
                return Err(format!("trial {trial}, ω²={w}: max Re {rb:.3e} below, {ra:.3e} above αγ"));
            }
        }
        let written = stability_interval(alpha, gamma, SignConvention::AsWritten).unwrap();
        if written.lower != -ag || written.upper != 0.0 || written.convention != SignConvention::AsWritten {
            return Err(format!("trial {trial}: as-written interval ({}, {})", written.lower, written.upper));
        }
        if classify(alpha, -0.5 * ag, gamma, 1.0, SignConvention::AsWritten).unwrap() != Stability::Stable {
            return Err(format!("trial {trial}: as-written convention does not reproduce (−αγ, 0)"));
        }
    }
    ensure(
        true,
        "10 (α, γ): adopted (0, αγ) with marginal endpoints, sign change at αγ(1 ± 1e-3), ω² over 4 decades; as-written (−αγ, 0)"
            .to_string(),
    )
}

fn decay_criterion() -> Check {
    let geom = unit_disk();
    let modes = mode_set(1, 4, &geom).map_err(|e| e.to_string())?;
    let grid = Arc::new(PolarGrid::gauss(geom, 32, 16, 16).map_err(|e| e.to_string())?);
    let phi = Mode::new(0, 1, &geom).unwrap();
    let lead = harmonics(&[phi])[0];
    let xi = PolarField::from_fn(grid, |r, a| lead.value(&geom, r, a));
    let xi_norm = xi.l2_norm();
    let problem = DiskProblem {
        geom,
        kernel: two_term(),
        xi,
        control: None,
        modes,
        horizon: 50.0,
        step: None,
        snapshot_times: vec![50.0],
    };
    let sim = simulate_disk(&problem).map_err(|e| e.to_string())?;
    let snap = &sim.snapshots[0];
    ensure(snap.l2_norm < 1e-3 * xi_norm, format!("‖θ(50)‖ = {:.2e}, ‖ξ‖ = {xi_norm:.6}", snap.l2_norm))
}

fn config_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "manifest.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn determinism_criterion() -> Check {
    let mut configs: Vec<PathBuf> = std::fs::read_dir(config_dir())
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    configs.sort();
    if configs.is_empty() {
        return Err("no example configs found".into());
    }
    let scratch = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut compared = 0;
    for path in &configs {
        let config = parse_config(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let mut reference: Option<Vec<(String, Vec<u8>)>> = None;
        for (run_id, threads) in [1, 4, 2, 4, 1].into_iter().enumerate() {
            let out = scratch.path().join(format!("{}-{run_id}", path.file_stem().unwrap().to_string_lossy()));
            run(&config, &out, Some(threads)).map_err(|e| format!("{}: {e}", path.display()))?;
            let files = read_outputs(&out);
            match &reference {
                None => reference = Some(files),
                Some(r) if *r == files => compared += 1,
                Some(_) => return Err(format!("{} differs at {threads} threads", path.display())),
            }
        }
    }
    ensure(true, format!("{} configs, {compared} repeat runs at 1/2/4 threads byte-identical", configs.len()))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "bessel zeros and interlacing",
            budget: Some(Duration::from_secs(5)),
            body: bessel_zeros_criterion,
        },
        Criterion {
            id: 2,
            name: "eigenbasis orthonormality",
            budget: Some(Duration::from_secs(30)),
            body: orthonormality_criterion,
        },
        Criterion {
            id: 3,
            name: "transform zero interlacing",
            budget: Some(Duration::from_secs(5)),
            body: interlacing_criterion,
        },
        Criterion { id: 4, name: "root clustering", budget: Some(Duration::from_secs(5)), body: clustering_criterion },
        Criterion {
            id: 5,
            name: "solver triple agreement",
            budget: Some(Duration::from_secs(60)),
            body: solver_triple_criterion,
        },
        Criterion { id: 6, name: "residue completeness", budget: None, body: residue_completeness_criterion },
        Criterion {
            id: 7,
            name: "obstruction pair",
            budget: Some(Duration::from_secs(30)),
            body: obstruction_criterion,
        },
        Criterion { id: 8, name: "damped-wave reduction", budget: None, body: reduction_criterion },
        Criterion { id: 9, name: "stability interval", budget: None, body: stability_criterion },
        Criterion { id: 10, name: "decay sanity", budget: None, body: decay_criterion },
        Criterion { id: 11, name: "cli determinism", budget: None, body: determinism_criterion },
    ];
    let mut failed = 0;
    for c in &criteria {
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(c.body)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let over = c.budget.is_some_and(|b| elapsed > b);
        let (pass, detail) = match outcome {
            Ok(d) if !over => (true, d),
            Ok(d) => (false, format!("{d}; over the {:?} budget", c.budget.unwrap())),
            Err(d) => (false, d),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {}: {} [{:.2} s]",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
