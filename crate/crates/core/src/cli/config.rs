use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::bessel::{MAX_ORDER, MAX_ZERO_INDEX};
use crate::kernel::MemoryKernel;
use crate::moment::Thresholds;
use crate::stability::SignConvention;
use crate::Error;

const MAX_THREADS: usize = 1024;
const MAX_SAMPLES: usize = 1_000_000;
const MAX_STEPS: f64 = 1e7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Spectrum,
    Kernel,
    Roots,
    Simulate,
    Certify,
    Stability,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Kernel => "kernel",
            Command::Roots => "roots",
            Command::Simulate => "simulate",
            Command::Certify => "certify",
            Command::Stability => "stability",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `[[c, γ], ...]` for `Σ c e^{-γt}`
    Expsum {
        terms: Vec<[f64; 2]>,
    },
    Constant {
        value: f64,
    },
    Tabulated {
        step: f64,
        samples: Vec<f64>,
    },
}

impl KernelSpec {
    pub fn build(&self) -> crate::Result<MemoryKernel> {
        match self {
            KernelSpec::Expsum { terms } => {
                let pairs: Vec<(f64, f64)> = terms.iter().map(|t| (t[0], t[1])).collect();
                MemoryKernel::exp_sum(&pairs)
            }
            KernelSpec::Constant { value } => MemoryKernel::constant(*value),
            KernelSpec::Tabulated { step, samples } => MemoryKernel::tabulated(samples.clone(), *step),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometrySpec {
    pub radius: f64,
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec { radius: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModeSpec {
    pub m_max: u32,
    pub n_max: u32,
}

impl Default for ModeSpec {
    fn default() -> Self {
        ModeSpec { m_max: 2, n_max: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSpec {
    pub horizon: f64,
    /// Solver step; chosen from the stiffest mode when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// Number of kernel samples written by the kernel command.
    pub samples: usize,
}

impl Default for TimeSpec {
    fn default() -> Self {
        TimeSpec { horizon: 10.0, step: None, samples: 101 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RootsSpec {
    pub m: u32,
    pub n_min: u32,
    pub n_max: u32,
    /// `[re, im]` of the tracked zero; the zero nearest the origin when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<[f64; 2]>,
    /// Entries with `n` below this are left out of the slope fit.
    pub fit_from: u32,
}

impl Default for RootsSpec {
    fn default() -> Self {
        RootsSpec { m: 1, n_min: 1, n_max: 40, target: None, fit_from: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialSpec {
    /// `amplitude · Re φ_{nm}`
    Mode {
        m: u32,
        n: u32,
        #[serde(default = "one")]
        amplitude: f64,
    },
    /// `amplitude · exp(-|x - center|² / width²)`
    Gaussian {
        center: [f64; 2],
        width: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
}

fn one() -> f64 {
    1.0
}

/// `u(t, x) = amplitude · cos(frequency · t) · exp(-|x - center|² / width²)`,
/// optionally cut off outside the disk of `support_radius` around `center`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub center: [f64; 2],
    pub width: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub frequency: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support_radius: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    /// Exact for exponential sums, quadrature otherwise.
    #[default]
    Auto,
    Exact,
    Quadrature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    pub initial: InitialSpec,
    pub solver: SolverChoice,
    pub radial_panels: usize,
    pub gauss_order: usize,
    /// Angular grid size; `max(16, 8·max(m_max, 1))` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_alpha: Option<usize>,
    /// Output times; `[0, horizon]` when empty.
    pub snapshots: Vec<f64>,
    pub output_radial: usize,
    pub output_angular: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control: Option<ControlSpec>,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        SimulateSpec {
            initial: InitialSpec::Mode { m: 0, n: 1, amplitude: 1.0 },
            solver: SolverChoice::Auto,
            radial_panels: crate::disk::DEFAULT_RADIAL_PANELS,
            gauss_order: crate::disk::DEFAULT_GAUSS_ORDER,
            n_alpha: None,
            snapshots: Vec::new(),
            output_radial: 11,
            output_angular: 16,
            control: None,
        }
    }
}

impl SimulateSpec {
    pub fn resolved_n_alpha(&self, m_max: u32) -> usize {
        self.n_alpha.unwrap_or_else(|| 16.max(8 * m_max.max(1) as usize))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `ξ_{n,1} = 1` for even `n`, `0` otherwise.
    Lemma1,
    /// `ξ_{n,m} = values[n - 1]`
    Explicit { m: u32, values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifySpec {
    pub horizon: f64,
    pub schedule: Vec<u32>,
    pub thresholds: Thresholds,
    pub family: FamilySpec,
    /// Second kernel certified with the same data, for contrast.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contrast: Option<KernelSpec>,
}

impl Default for CertifySpec {
    fn default() -> Self {
        CertifySpec {
            horizon: 4.0,
            schedule: vec![5, 10, 15, 20, 25],
            thresholds: Thresholds::default(),
            family: FamilySpec::Lemma1,
            contrast: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySpec {
    pub alpha: f64,
    pub gamma: f64,
    /// Sweep bounds; `-αγ/2` and `3αγ/2` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_max: Option<f64>,
    pub q_count: usize,
    /// Modes `k = 1..=k_max` with `ω_k = kπ/length`.
    pub k_max: u32,
    pub length: f64,
    pub convention: SignConvention,
}

impl Default for StabilitySpec {
    fn default() -> Self {
        StabilitySpec {
            alpha: 1.0,
            gamma: 1.0,
            q_min: None,
            q_max: None,
            q_count: 41,
            k_max: 4,
            length: PI,
            convention: SignConvention::Adopted,
        }
    }
}

impl StabilitySpec {
    pub fn q_values(&self) -> Vec<f64> {
        let ag = self.alpha * self.gamma;
        let lo = self.q_min.unwrap_or(-0.5 * ag);
        let hi = self.q_max.unwrap_or(1.5 * ag);
        let n = self.q_count;
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub geometry: GeometrySpec,
    #[serde(default)]
    pub modes: ModeSpec,
    #[serde(default)]
    pub time: TimeSpec,
    #[serde(default)]
    pub roots: RootsSpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub certify: CertifySpec,
    #[serde(default)]
    pub stability: StabilitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

pub fn parse_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_config_str(&text)
}

/// Syntax errors map to [`CliError::Parse`]; type, range and unknown-key
/// errors to [`CliError::Validation`].
pub fn parse_config_str(text: &str) -> Result<RunConfig, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        CliError::invalid(if key == "." { "<root>".to_string() } else { key }, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

fn positive(key: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::invalid(key, format!("{v} must be finite and > 0")))
    }
}

fn within<T: PartialOrd + std::fmt::Display>(key: &str, v: T, lo: T, hi: T) -> Result<(), CliError> {
    if v >= lo && v <= hi {
        Ok(())
    } else {
        Err(CliError::invalid(key, format!("{v} outside [{lo}, {hi}]")))
    }
}

fn kernel_error(key: &str, e: Error) -> CliError {
    CliError::invalid(key, e.to_string())
}

impl RunConfig {
    /// The kernel the command needs, built and checked.
    pub fn kernel(&self) -> Result<MemoryKernel, CliError> {
        let spec = self
            .kernel
            .as_ref()
            .ok_or_else(|| CliError::invalid("kernel", format!("required by the {} command", self.command.name())))?;
        spec.build().map_err(|e| kernel_error("kernel", e))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.command != Command::Stability || self.kernel.is_some() {
            self.kernel()?;
        }
        positive("geometry.radius", self.geometry.radius)?;
        within("modes.m_max", self.modes.m_max, 0, MAX_ORDER)?;
        within("modes.n_max", self.modes.n_max, 1, MAX_ZERO_INDEX)?;

        positive("time.horizon", self.time.horizon)?;
        if let Some(h) = self.time.step {
            positive("time.step", h)?;
            if self.time.horizon / h > MAX_STEPS {
                return Err(CliError::invalid("time.step", format!("more than {MAX_STEPS} steps")));
            }
        }
        within("time.samples", self.time.samples, 2, MAX_SAMPLES)?;

        let r = &self.roots;
        within("roots.m", r.m, 0, MAX_ORDER)?;
        within("roots.n_min", r.n_min, 1, MAX_ZERO_INDEX)?;
        within("roots.n_max", r.n_max, r.n_min, MAX_ZERO_INDEX)?;
        if let Some(t) = r.target {
            if !(t[0].is_finite() && t[1].is_finite()) {
                return Err(CliError::invalid("roots.target", "must be finite"));
            }
        }

        self.validate_simulate()?;
        self.validate_certify()?;
        self.validate_stability()?;

        if let Some(n) = self.threads {
            within("threads", n, 1, MAX_THREADS)?;
        }
        Ok(())
    }

    fn validate_simulate(&self) -> Result<(), CliError> {
        let s = &self.simulate;
        match &s.initial {
            InitialSpec::Mode { m, n, amplitude } => {
                if *m > self.modes.m_max || *n > self.modes.n_max || *n == 0 {
                    return Err(CliError::invalid(
                        "simulate.initial",
                        format!(
                            "mode (m={m}, n={n}) outside the simulated set m ≤ {}, 1 ≤ n ≤ {}",
                            self.modes.m_max, self.modes.n_max
                        ),
                    ));
                }
                if !amplitude.is_finite() {
                    return Err(CliError::invalid("simulate.initial.amplitude", "must be finite"));
                }
            }
            InitialSpec::Gaussian { center, width, amplitude } => {
                positive("simulate.initial.width", *width)?;
                if !(center[0].is_finite() && center[1].is_finite() && amplitude.is_finite()) {
                    return Err(CliError::invalid("simulate.initial", "center and amplitude must be finite"));
                }
            }
        }
        within("simulate.radial_panels", s.radial_panels, 1, 4096)?;
        within("simulate.gauss_order", s.gauss_order, 1, 64)?;
        let radial = s.radial_panels * s.gauss_order;
        if radial < 4 * self.modes.n_max as usize {
            return Err(CliError::invalid(
                "simulate.radial_panels",
                format!("{radial} radial nodes cannot resolve n_max = {}", self.modes.n_max),
            ));
        }
        let n_alpha = s.resolved_n_alpha(self.modes.m_max);
        if n_alpha < 8 * self.modes.m_max.max(1) as usize || n_alpha > 4096 {
            return Err(CliError::invalid(
                "simulate.n_alpha",
                format!("{n_alpha} must lie in [8·max(m_max, 1), 4096]"),
            ));
        }
        for (i, &t) in s.snapshots.iter().enumerate() {
            if !(t >= 0.0 && t <= self.time.horizon) {
                return Err(CliError::invalid(format!("simulate.snapshots[{i}]"), format!("{t} outside [0, horizon]")));
            }
        }
        within("simulate.output_radial", s.output_radial, 1, 4096)?;
        within("simulate.output_angular", s.output_angular, 1, 4096)?;
        if let Some(c) = &s.control {
            positive("simulate.control.width", c.width)?;
            if !(c.center.iter().all(|v| v.is_finite()) && c.amplitude.is_finite() && c.frequency.is_finite()) {
                return Err(CliError::invalid("simulate.control", "center, amplitude and frequency must be finite"));
            }
            if let Some(r) = c.support_radius {
                positive("simulate.control.support_radius", r)?;
            }
        }
        if self.command == Command::Simulate && s.solver == SolverChoice::Exact {
            if let Some(spec) = &self.kernel {
                if !matches!(spec, KernelSpec::Expsum { .. }) {
                    return Err(CliError::invalid("simulate.solver", "the exact solver needs an expsum kernel"));
                }
            }
        }
        Ok(())
    }

    fn validate_certify(&self) -> Result<(), CliError> {
        let c = &self.certify;
        positive("certify.horizon", c.horizon)?;
        if c.schedule.is_empty() {
            return Err(CliError::invalid("certify.schedule", "must not be empty"));
        }
        for (i, w) in c.schedule.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(CliError::invalid(format!("certify.schedule[{}]", i + 1), "must be strictly increasing"));
            }
        }
        within("certify.schedule[0]", c.schedule[0], 1, MAX_ZERO_INDEX)?;
        let largest = *c.schedule.last().unwrap();
        within("certify.schedule", largest, 1, MAX_ZERO_INDEX)?;
        positive("certify.thresholds.cluster_diameter", c.thresholds.cluster_diameter)?;
        positive("certify.thresholds.obstruction_growth", c.thresholds.obstruction_growth)?;
        positive("certify.thresholds.bounded_growth", c.thresholds.bounded_growth)?;
        match &c.family {
            FamilySpec::Lemma1 => {
                if largest < 2 {
                    return Err(CliError::invalid(
                        "certify.schedule",
                        "the lemma1 family needs at least 2 constraints",
                    ));
                }
            }
            FamilySpec::Explicit { m, values } => {
                within("certify.family.m", *m, 0, MAX_ORDER)?;
                if values.len() < largest as usize {
                    return Err(CliError::invalid(
                        "certify.family.values",
                        format!("{} values, schedule needs {largest}", values.len()),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(CliError::invalid("certify.family.values", "must be finite"));
                }
            }
        }
        if let Some(spec) = &c.contrast {
            spec.build().map_err(|e| kernel_error("certify.contrast", e))?;
        }
        Ok(())
    }

    fn validate_stability(&self) -> Result<(), CliError> {
        let s = &self.stability;
        positive("stability.alpha", s.alpha)?;
        positive("stability.gamma", s.gamma)?;
        within("stability.q_count", s.q_count, 2, 100_000)?;
        within("stability.k_max", s.k_max, 1, 10_000)?;
        positive("stability.length", s.length)?;
        let qs = s.q_values();
        if qs.iter().any(|q| !q.is_finite()) || qs[0] >= qs[qs.len() - 1] {
            return Err(CliError::invalid("stability.q_min", "sweep needs finite q_min < q_max"));
        }
        Ok(())
    }
}
