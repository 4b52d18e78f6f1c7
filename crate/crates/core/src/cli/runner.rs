use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::config::{Command, FamilySpec, InitialSpec, RunConfig, SolverChoice};
use super::CliError;
use crate::disk::{mode_set, synthesize, DiskGeometry, Harmonic, Mode, PolarField, PolarGrid};
use crate::kernel::{KernelKind, MemoryKernel};
use crate::moment::{certify, lemma1_scenario, ModalFamily};
use crate::simulator::{simulate_disk, DiskProblem, DistributedControl};
use crate::stability::{modal_frequency, stability_interval, stability_map, SignConvention, Stability};
use crate::symbol::{characteristic_roots, hurwitz_check, root_sequence, CharacteristicSymbol};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub threads: usize,
    pub config: RunConfig,
    pub files: Vec<FileRecord>,
    pub wall_clock_seconds: f64,
}

type Output = (String, Vec<u8>);

/// Runs the command on a pool of `threads` workers (all cores when `None`)
/// and writes the outputs plus `manifest.json` into `out_dir`.
///
/// Every output is produced in memory before the first write, and files
/// already written are removed if a later write fails.
pub fn run(config: &RunConfig, out_dir: &Path, threads: Option<usize>) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let threads = threads.or(config.threads).unwrap_or_else(rayon::current_num_threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::invalid("threads", e.to_string()))?;
    let outputs = pool.install(|| compute(config))?;

    std::fs::create_dir_all(out_dir).map_err(|e| io_error(out_dir, e))?;
    let mut written: Vec<PathBuf> = Vec::new();
    let mut files = Vec::with_capacity(outputs.len());
    for (name, bytes) in &outputs {
        let path = out_dir.join(name);
        if let Err(e) = std::fs::write(&path, bytes) {
            written.push(path.clone());
            for p in &written {
                let _ = std::fs::remove_file(p);
            }
            return Err(io_error(&path, e));
        }
        written.push(path);
        files.push(FileRecord { name: name.clone(), bytes: bytes.len(), sha256: hex::encode(Sha256::digest(bytes)) });
    }

    let manifest = RunManifest {
        tool: "gpctl".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: config.command,
        threads,
        config: config.clone(),
        files,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    let path = out_dir.join("manifest.json");
    if let Err(e) = std::fs::write(&path, to_json(&manifest)) {
        for p in &written {
            let _ = std::fs::remove_file(p);
        }
        return Err(io_error(&path, e));
    }
    Ok(manifest)
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("serializable");
    out.push(b'\n');
    out
}

fn to_csv<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).expect("serializable");
    }
    w.into_inner().expect("in-memory writer")
}

/// All output files of a run, in a fixed order, without touching the disk.
pub fn compute(config: &RunConfig) -> Result<Vec<Output>, CliError> {
    match config.command {
        Command::Kernel => kernel_outputs(config),
        Command::Spectrum => spectrum_outputs(config),
        Command::Roots => roots_outputs(config),
        Command::Simulate => simulate_outputs(config),
        Command::Certify => certify_outputs(config),
        Command::Stability => stability_outputs(config),
    }
}

fn geometry(config: &RunConfig) -> Result<DiskGeometry, CliError> {
    Ok(DiskGeometry::new(config.geometry.radius)?)
}

fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Serialize)]
struct KernelSample {
    t: f64,
    k: f64,
}

fn kernel_outputs(config: &RunConfig) -> Result<Vec<Output>, CliError> {
    let kernel = config.kernel()?;
    let horizon = match kernel.kind() {
        KernelKind::Tabulated => config.time.horizon.min(kernel.max_time()),
        _ => config.time.horizon,
    };
    let n = config.time.samples;
    let samples = (0..n)
        .map(|i| {
            let t = horizon * i as f64 / (n - 1) as f64;
            Ok(KernelSample { t, k: kernel.eval(t)? })
        })
        .collect::<crate::Result<Vec<_>>>()?;

    let mut summary = json!({
        "kind": kernel.kind().name(),
        "initial_value": kernel.initial_value(),
    });
    if kernel.kind() != KernelKind::Tabulated {
        let transform = kernel.laplace_transform()?;
        let zeros: Vec<[f64; 2]> = kernel.khat_zeros()?.into_iter().map(pair).collect();
        let poles: Vec<[f64; 2]> = transform.denominator().roots()?.into_iter().map(pair).collect();
        summary["numerator"] = json!(transform.numerator().coeffs());
        summary["denominator"] = json!(transform.denominator().coeffs());
        summary["zeros"] = json!(zeros);
        summary["poles"] = json!(poles);
    }
    Ok(vec![("kernel.json".into(), to_json(&summary)), ("kernel_samples.csv".into(), to_csv(&samples))])
}

#[derive(Serialize)]
struct ModeRow {
    m: u32,
    n: u32,
    mu: f64,
    lambda_sq: f64,
}

#[derive(Serialize)]
struct SpectrumRow {
    m: u32,
    n: u32,
    index: usize,
    re: f64,
    im: f64,
}

fn spectrum_outputs(config: &RunConfig) -> Result<Vec<Output>, CliError> {
    use rayon::prelude::*;
    let kernel = config.kernel()?;
    let geom = geometry(config)?;
    let modes = mode_set(config.modes.m_max, config.modes.n_max, &geom)?;
    let roots: Vec<Vec<Complex64>> =
        modes.par_iter().map(|m| characteristic_roots(&kernel, m.lambda_sq)).collect::<crate::Result<_>>()?;
    let mode_rows: Vec<ModeRow> =
        modes.iter().map(|m| ModeRow { m: m.m, n: m.n, mu: m.mu, lambda_sq: m.lambda_sq }).collect();
    let mut rows = Vec::new();
    for (mode, rs) in modes.iter().zip(&roots) {
        for (index, z) in rs.iter().enumerate() {
            rows.push(SpectrumRow { m: mode.m, n: mode.n, index, re: z.re, im: z.im });
        }
    }
    let max_re = roots.iter().flatten().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let summary = json!({
        "modes": modes.len(),
        "all_hurwitz": roots.iter().all(|r| hurwitz_check(r)),
        "max_real_part": max_re,
        "degree": CharacteristicSymbol::new(&kernel, modes[0].lambda_sq)?.polynomial().degree(),
    });
    Ok(vec![
        ("modes.csv".into(), to_csv(&mode_rows)),
        ("spectrum.csv".into(), to_csv(&rows)),
        ("spectrum.json".into(), to_json(&summary)),
    ])
}

#[derive(Serialize)]
struct RootRow {
    n: u32,
    lambda_sq: f64,
    re: f64,
    im: f64,
    distance: f64,
}

fn roots_outputs(config: &RunConfig) -> Result<Vec<Output>, CliError> {
    let kernel = config.kernel()?;
    let geom = geometry(config)?;
    let r = &config.roots;
    let zeros = kernel.khat_zeros()?;
    let target = match r.target {
        Some([re, im]) => Complex64::new(re, im),
        None => zeros.iter().copied().min_by(|a, b| a.norm().total_cmp(&b.norm())).ok_or(crate::Error::NoTarget)?,
    };
    let seq = root_sequence(&kernel, r.m, r.n_min..=r.n_max, &geom, target)?;
    let rows: Vec<RootRow> = seq
        .entries
        .iter()
        .map(|e| RootRow { n: e.n, lambda_sq: e.lambda_sq, re: e.root.re, im: e.root.im, distance: e.distance })
        .collect();
    let decreasing_from = seq
        .entries
        .iter()
        .enumerate()
        .rev()
        .skip(1)
        .take_while(|(i, e)| seq.entries[i + 1].distance < e.distance)
        .last()
        .map(|(_, e)| e.n)
        .unwrap_or(r.n_max);
    let summary = json!({
        "m": seq.m,
        "target": pair(seq.target),
        "kernel_zeros": zeros.into_iter().map(pair).collect::<Vec<_>>(),
        "fit_from": r.fit_from,
        "log_log_slope": seq.log_log_slope(r.fit_from),
        "distances_decreasing_from": decreasing_from,
        "final_distance": seq.entries.last().map(|e| e.distance),
    });
    Ok(vec![("root_sequence.csv".into(), to_csv(&rows)), ("roots.json".into(), to_json(&summary))])
}

#[derive(Serialize)]
struct CoefficientRow {
    time: f64,
    m: u32,
    n: u32,
    angular: i64,
    re: f64,
    im: f64,
}

#[derive(Serialize)]
struct FieldRow {
    time: f64,
    r: f64,
    alpha: f64,
    value: f64,
}

fn initial_field(spec: &InitialSpec, grid: Arc<PolarGrid>, geom: &DiskGeometry) -> crate::Result<PolarField> {
    Ok(match *spec {
        InitialSpec::Mode { m, n, amplitude } => {
            let h = Harmonic { mode: Mode::new(m, n, geom)?, angular: m as i64 };
            PolarField::from_fn(grid, |r, a| Complex64::new(amplitude * h.value(geom, r, a).re, 0.0))
        }
        InitialSpec::Gaussian { center, width, amplitude } => PolarField::from_fn(grid, |r, a| {
            let (x, y) = (r * a.cos() - center[0], r * a.sin() - center[1]);
            Complex64::new(amplitude * (-(x * x + y * y) / (width * width)).exp(), 0.0)
        }),
    })
}

fn simulate_outputs(config: &RunConfig) -> Result<Vec<Output>, CliError> {
    let kernel: MemoryKernel = config.kernel()?;
    let geom = geometry(config)?;
    let s = &config.simulate;
    let modes = mode_set(config.modes.m_max, config.modes.n_max, &geom)?;
    let n_alpha = s.resolved_n_alpha(config.modes.m_max);
    let grid = Arc::new(PolarGrid::gauss(geom, s.radial_panels, s.gauss_order, n_alpha)?);
    let xi = initial_field(&s.initial, grid.clone(), &geom)?;

    let control = s.control.as_ref().map(|c| {
        let (cx, cy, w, amp, freq) = (c.center[0], c.center[1], c.width, c.amplitude, c.frequency);
        let profile = PolarField::from_fn(grid.clone(), |r, a| {
            let (x, y) = (r * a.cos() - cx, r * a.sin() - cy);
            Complex64::new(amp * (-(x * x + y * y) / (w * w)).exp(), 0.0)
        });
        let support = c.support_radius.map(|rad| {
            Arc::new(move |r: f64, a: f64| {
                let (x, y) = (r * a.cos() - cx, r * a.sin() - cy);
                x * x + y * y <= rad * rad
            }) as Arc<dyn Fn(f64, f64) -> bool + Send + Sync>
        });
        DistributedControl::Separable { profile, signal: Arc::new(move |t| (freq * t).cos()), support }
    });

    let snapshot_times = if s.snapshots.is_empty() { vec![0.0, config.time.horizon] } else { s.snapshots.clone() };
    let problem = DiskProblem {
        geom,
        kernel: kernel.clone(),
        xi,
        control,
        modes,
        horizon: config.time.horizon,
        step: config.time.step,
        snapshot_times,
    };
    let sim = match (s.solver, kernel.kind()) {
        (SolverChoice::Quadrature, KernelKind::ExpSum) => crate::simulator::simulate_disk_with(&problem, false)?,
        _ => simulate_disk(&problem)?,
    };

    let radii: Vec<f64> = (1..=s.output_radial).map(|i| geom.radius() * i as f64 / s.output_radial as f64).collect();
    let out_grid = Arc::new(PolarGrid::from_radii(geom, radii, s.output_angular)?);
    let mut coefficient_rows = Vec::new();
    let mut field_rows = Vec::new();
    let mut snapshots = Vec::new();
    for snap in &sim.snapshots {
        for (h, c) in sim.harmonics.iter().zip(&snap.coefficients) {
            coefficient_rows.push(CoefficientRow {
                time: snap.time,
                m: h.mode.m,
                n: h.mode.n,
                angular: h.angular,
                re: c.re,
                im: c.im,
            });
        }
        let field = synthesize(out_grid.clone(), &sim.harmonics, &snap.coefficients);
        for (i, &r) in out_grid.radii().iter().enumerate() {
            for k in 0..out_grid.n_alpha() {
                field_rows.push(FieldRow { time: snap.time, r, alpha: out_grid.alpha(k), value: field.get(i, k).re });
            }
        }
        snapshots.push(json!({
            "time": snap.time,
            "l2_norm": snap.l2_norm,
            "coefficient_norm": snap.coefficient_norm,
        }));
    }
    let initial_norm = sim.truncation.initial_norm_sq.sqrt();
    let summary = json!({
        "solver": sim.solver.name(),
        "step": sim.step,
        "harmonics": sim.harmonics.len(),
        "truncation": sim.truncation,
        "initial_norm": initial_norm,
        "snapshots": snapshots,
    });
    Ok(vec![
        ("coefficients.csv".into(), to_csv(&coefficient_rows)),
        ("field.csv".into(), to_csv(&field_rows)),
        ("summary.json".into(), to_json(&summary)),
    ])
}

#[derive(Serialize)]
struct CertifyRow<'a> {
    label: &'a str,
    count: u32,
    norm: f64,
    condition: f64,
    basis: crate::moment::GramBasis,
    singular: bool,
    max_residual: f64,
    diameter: f64,
    min_separation: f64,
}

fn certify_outputs(config: &RunConfig) -> Result<Vec<Output>, CliError> {
    let geom = geometry(config)?;
    let c = &config.certify;
    let largest = *c.schedule.last().expect("validated non-empty");
    let family = match &c.family {
        FamilySpec::Lemma1 => lemma1_scenario(largest)?,
        FamilySpec::Explicit { m, values } => {
            ModalFamily { m: *m, values: values.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
        }
    };
    let mut runs = vec![("primary", config.kernel.clone().expect("validated"))];
    if let Some(contrast) = &c.contrast {
        runs.push(("contrast", contrast.clone()));
    }
    let mut reports = Vec::new();
    let mut rows = Vec::new();
    for (label, spec) in &runs {
        let kernel = spec.build()?;
        let report = certify(&kernel, &family, &geom, c.horizon, &c.schedule, &c.thresholds)?;
        for e in &report.entries {
            rows.push(CertifyRow {
                label,
                count: e.count,
                norm: e.norm,
                condition: e.condition,
                basis: e.basis,
                singular: e.singular,
                max_residual: e.max_residual,
                diameter: e.diameter,
                min_separation: e.min_separation,
            });
        }
        reports.push(json!({ "label": label, "kernel": spec, "report": report }));
    }
    Ok(vec![("certify.csv".into(), to_csv(&rows)), ("report.json".into(), to_json(&json!({ "reports": reports })))])
}

#[derive(Serialize)]
struct StabilityCsvRow {
    q: f64,
    omega_sq: f64,
    max_re_root: f64,
    verdict: Stability,
}

fn stability_outputs(config: &RunConfig) -> Result<Vec<Output>, CliError> {
    let s = &config.stability;
    let omega_sqs =
        (1..=s.k_max).map(|k| modal_frequency(k, s.length).map(|w| w * w)).collect::<crate::Result<Vec<_>>>()?;
    let qs = s.q_values();
    let rows: Vec<StabilityCsvRow> = stability_map(s.alpha, s.gamma, &qs, &omega_sqs, s.convention)?
        .into_iter()
        .map(|r| StabilityCsvRow { q: r.q, omega_sq: r.omega_sq, max_re_root: r.max_re_root, verdict: r.verdict })
        .collect();
    let adopted = stability_interval(s.alpha, s.gamma, SignConvention::Adopted)?;
    let as_written = stability_interval(s.alpha, s.gamma, SignConvention::AsWritten)?;
    let summary = json!({
        "alpha": s.alpha,
        "gamma": s.gamma,
        "convention": s.convention,
        "interval": if s.convention == SignConvention::Adopted { adopted } else { as_written },
        "adopted": adopted,
        "as_written": as_written,
        "omega_sq": omega_sqs,
    });
    Ok(vec![("stability_map.csv".into(), to_csv(&rows)), ("stability.json".into(), to_json(&summary))])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::parse_config_str;

    fn out(config: &str) -> Vec<Output> {
        compute(&parse_config_str(config).unwrap()).unwrap()
    }

    #[test]
    fn stability_map_changes_sign_at_endpoints() {
        let files = out(r#"{"command":"stability"}"#);
        let csv = String::from_utf8(files[0].1.clone()).unwrap();
        assert!(csv.starts_with("q,omega_sq,max_re_root,verdict\n"));
        assert!(csv.contains("\n0.0,1.0,"));
        for line in csv.lines().skip(1) {
            let f: Vec<&str> = line.split(',').collect();
            let q: f64 = f[0].parse().unwrap();
            let want = if q == 0.0 || q == 1.0 {
                "marginal"
            } else if q > 0.0 && q < 1.0 {
                "stable"
            } else {
                "unstable"
            };
            assert_eq!(f[3], want, "{line}");
        }
    }

    #[test]
    fn kernel_summary_lists_zero() {
        let files = out(r#"{"command":"kernel","kernel":{"type":"expsum","terms":[[1,1],[1,2]]}}"#);
        let v: serde_json::Value = serde_json::from_slice(&files[0].1).unwrap();
        assert_eq!(v["zeros"][0][0].as_f64().unwrap(), -1.5);
        assert_eq!(v["denominator"], json!([2.0, 3.0, 1.0]));
    }
}
