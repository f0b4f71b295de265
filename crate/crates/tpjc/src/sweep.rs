//! Configuration-driven parameter sweeps: figure-data presets, parallel
//! grid evaluation over the analytic, reduced, and full backends, power-law
//! fitting, and bit-stable CSV/JSON export.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, HilbertSpec};
use crate::lindblad::{
    self, build_fme, evolve, liouvillian, steady_state, Liouvillian,
};
use crate::model::{manifold_projector, SystemParams, KAPPA1};
use crate::rme::{
    build_rme, optimal_hopping, optimize_brightness, BrightnessObjective,
    ReducedBasis, SearchBox,
};
use crate::weakdrive::analytic_g2;

/// Evaluation backend for one sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Full master equation on the two-mode-plus-qubit space.
    Fme,
    /// Reduced master equation on the blockaded manifold.
    Rme,
    /// Weak-drive closed form for the correlation functions.
    Analytic,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Fme => "fme",
            Backend::Rme => "rme",
            Backend::Analytic => "analytic",
        }
    }
}

/// Grid spacing of the sweep axis; log grids are base 10.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisScale {
    Linear,
    Log,
}

/// Swept parameter and its grid. `parameter` is one of the
/// [`SystemParams`] field names or `t` for a time axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub parameter: String,
    pub scale: AxisScale,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn linear(parameter: &str, start: f64, stop: f64, count: usize) -> Self {
        Self { parameter: parameter.into(), scale: AxisScale::Linear, start, stop, count }
    }

    pub fn log(parameter: &str, start: f64, stop: f64, count: usize) -> Self {
        Self { parameter: parameter.into(), scale: AxisScale::Log, start, stop, count }
    }

    /// Grid points, strictly monotone by construction.
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        if n == 0 {
            return Vec::new();
        }
        if n == 1 {
            return vec![self.start];
        }
        let (a, b) = match self.scale {
            AxisScale::Linear => (self.start, self.stop),
            AxisScale::Log => (self.start.log10(), self.stop.log10()),
        };
        (0..n)
            .map(|i| {
                let x = a + (b - a) * i as f64 / (n - 1) as f64;
                match self.scale {
                    AxisScale::Linear => x,
                    AxisScale::Log => 10f64.powf(x),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::Config("axis endpoints must be finite".into()));
        }
        if self.count > 1 && self.start == self.stop {
            return Err(Error::Config("axis grid must be strictly monotone".into()));
        }
        if self.scale == AxisScale::Log && (self.start <= 0.0 || self.stop <= 0.0) {
            return Err(Error::Config("log axis needs positive endpoints".into()));
        }
        const PARAMETERS: [&str; 9] =
            ["g", "j", "omega", "delta", "kappa2", "gamma", "gamma2ph_1", "gamma2ph_2", "t"];
        if !PARAMETERS.contains(&self.parameter.as_str()) {
            return Err(Error::Config(format!("unknown axis parameter {}", self.parameter)));
        }
        Ok(())
    }
}

/// Closed set of exportable observables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "n1")]
    N1,
    #[serde(rename = "n2")]
    N2,
    #[serde(rename = "g2_1")]
    G2Mode1,
    #[serde(rename = "g2_2")]
    G2Mode2,
    /// Fidelity of the steady state with its projection onto the
    /// zero-energy manifold (full backend only).
    #[serde(rename = "fidelity_K")]
    FidelityManifold,
    /// 1 − fidelity_K.
    #[serde(rename = "infidelity_1mF")]
    Infidelity,
    /// Single-photon purity P = 1 − g2_2.
    #[serde(rename = "purity_P")]
    Purity,
}

impl Observable {
    pub fn name(&self) -> &'static str {
        match self {
            Observable::N1 => "n1",
            Observable::N2 => "n2",
            Observable::G2Mode1 => "g2_1",
            Observable::G2Mode2 => "g2_2",
            Observable::FidelityManifold => "fidelity_K",
            Observable::Infidelity => "infidelity_1mF",
            Observable::Purity => "purity_P",
        }
    }

    fn supported_by(&self, backend: Backend) -> bool {
        match backend {
            Backend::Fme => true,
            Backend::Rme => !matches!(self, Observable::FidelityManifold | Observable::Infidelity),
            Backend::Analytic => {
                matches!(self, Observable::G2Mode1 | Observable::G2Mode2 | Observable::Purity)
            }
        }
    }
}

/// How J and Ω are chosen at each grid point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingRule {
    /// Take J and Ω from the fixed parameters (or the axis).
    #[default]
    Fixed,
    /// Closed-form optimum: J = J_opt(κ₂), Ω = 0.5κ₁.
    OptimalClosedForm,
    /// Numeric brightness maximization over (J, Ω) on the reduced model.
    OptimalNumeric,
}

/// Truncations and tolerances of the backend solvers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Photon cap of mode 1 (full backend).
    pub n_max_1: usize,
    /// Photon cap of mode 2 (full backend).
    pub n_max_2: usize,
    /// Photon cap of the driven-mode chain (reduced backend).
    pub n_max_ph: usize,
    /// Steady-state residual tolerance.
    pub tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { n_max_1: 10, n_max_2: 10, n_max_ph: 30, tol: 1e-10 }
    }
}

/// Full description of one sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub label: String,
    pub model: Backend,
    pub fixed: SystemParams,
    pub axis: Axis,
    pub observables: Vec<Observable>,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub coupling: CouplingRule,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.axis.validate()?;
        self.fixed.validate()?;
        if self.observables.is_empty() {
            return Err(Error::Config("sweep needs at least one observable".into()));
        }
        for obs in &self.observables {
            if !obs.supported_by(self.model) {
                return Err(Error::Config(format!(
                    "observable {} is not available on the {} backend",
                    obs.name(),
                    self.model.name()
                )));
            }
        }
        if self.axis.parameter == "t" && self.model != Backend::Fme {
            return Err(Error::Config("time axis requires the fme backend".into()));
        }
        if self.axis.parameter == "t" && (self.axis.start < 0.0 || self.axis.stop < self.axis.start)
        {
            return Err(Error::Config("time axis must be nonnegative and increasing".into()));
        }
        if !(self.solver.tol > 0.0) {
            return Err(Error::Config("solver tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Run metadata echoed into every export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub library: String,
    pub version: String,
    pub backend: String,
    pub n_max_1: usize,
    pub n_max_2: usize,
    pub n_max_ph: usize,
    pub tol: f64,
}

impl Provenance {
    fn for_spec(spec: &SweepSpec) -> Self {
        Self {
            library: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            backend: spec.model.name().into(),
            n_max_1: spec.solver.n_max_1,
            n_max_2: spec.solver.n_max_2,
            n_max_ph: spec.solver.n_max_ph,
            tol: spec.solver.tol,
        }
    }
}

/// One grid point: observable values in spec order; failed points carry an
/// error string and empty values instead of NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub values: Vec<Option<f64>>,
    pub residual: Option<f64>,
    /// Not exported: wall time is machine-dependent and exports are
    /// byte-stable for identical spec and version.
    #[serde(skip)]
    pub wall_time_s: f64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub provenance: Provenance,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn failed_points(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    /// (axis, value) pairs of one observable, skipping failed points.
    pub fn series(&self, obs: Observable) -> Result<Vec<(f64, f64)>> {
        let k = self
            .spec
            .observables
            .iter()
            .position(|o| *o == obs)
            .ok_or(Error::UnsupportedObservable {
                observable: obs.name().into(),
                backend: self.spec.model.name().into(),
            })?;
        Ok(self
            .rows
            .iter()
            .filter_map(|r| r.values[k].map(|v| (r.axis_value, v)))
            .collect())
    }
}

/// Evaluate a sweep: points run in parallel with deterministic row order,
/// and per-point failures become row errors rather than aborting the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let provenance = Provenance::for_spec(spec);
    let xs = spec.axis.values();

    let rows = if spec.axis.parameter == "t" {
        run_time_axis(spec, &xs)?
    } else {
        xs.par_iter()
            .map(|&x| {
                let t0 = std::time::Instant::now();
                let (values, residual, error) = match eval_point(spec, x) {
                    Ok((values, residual)) => (values, residual, None),
                    Err(e) => (vec![None; spec.observables.len()], None, Some(e.to_string())),
                };
                SweepRow {
                    axis_value: x,
                    values,
                    residual,
                    wall_time_s: t0.elapsed().as_secs_f64(),
                    error,
                }
            })
            .collect()
    };
    Ok(SweepResult { spec: spec.clone(), provenance, rows })
}

/// Resolve the parameters of one grid point, including the coupling rule.
fn point_params(spec: &SweepSpec, x: f64) -> Result<SystemParams> {
    let mut p = spec.fixed;
    match spec.axis.parameter.as_str() {
        "g" => p.g = x,
        "j" => p.j = x,
        "omega" => p.omega = x,
        "delta" => p.delta = x,
        "kappa2" => p.kappa2 = x,
        "gamma" => p.gamma = x,
        "gamma2ph_1" => p.gamma2ph_1 = x,
        "gamma2ph_2" => p.gamma2ph_2 = x,
        "t" => {}
        other => return Err(Error::Config(format!("unknown axis parameter {other}"))),
    }
    match spec.coupling {
        CouplingRule::Fixed => {}
        CouplingRule::OptimalClosedForm => {
            p.j = optimal_hopping(p.kappa2);
            p.omega = 0.5 * KAPPA1;
        }
        CouplingRule::OptimalNumeric => {
            let j_cf = optimal_hopping(p.kappa2);
            let basis = ReducedBasis::new(spec.solver.n_max_ph);
            let sbox = SearchBox { j: (0.2 * j_cf, 5.0 * j_cf), omega: (0.05, 3.0) };
            let opt =
                optimize_brightness(&p, &basis, &sbox, BrightnessObjective::UndrivenPhoton)?;
            p.j = opt.j;
            p.omega = opt.omega;
        }
    }
    p.validate()?;
    Ok(p)
}

fn eval_point(spec: &SweepSpec, x: f64) -> Result<(Vec<Option<f64>>, Option<f64>)> {
    let p = point_params(spec, x)?;
    match spec.model {
        Backend::Analytic => {
            let values = spec
                .observables
                .iter()
                .map(|obs| match obs {
                    Observable::G2Mode1 => analytic_g2(&p, 1),
                    Observable::G2Mode2 => analytic_g2(&p, 2),
                    Observable::Purity => Ok(1.0 - analytic_g2(&p, 2)?),
                    other => Err(Error::UnsupportedObservable {
                        observable: other.name().into(),
                        backend: "analytic".into(),
                    }),
                })
                .map(|r| r.map(Some))
                .collect::<Result<Vec<_>>>()?;
            Ok((values, None))
        }
        Backend::Rme => {
            let basis = ReducedBasis::new(spec.solver.n_max_ph);
            let model = build_rme(&basis, &p)?;
            let ss = steady_state(&liouvillian(&model)?, spec.solver.tol)?;
            let values = spec
                .observables
                .iter()
                .map(|obs| steady_observable(*obs, &ss.rho, None).map(Some))
                .collect::<Result<Vec<_>>>()?;
            Ok((values, Some(ss.residual)))
        }
        Backend::Fme => {
            let hspec = HilbertSpec::new(spec.solver.n_max_1, spec.solver.n_max_2);
            let model = build_fme(hspec, &p)?;
            let ss = steady_state(&liouvillian(&model)?, spec.solver.tol)?;
            let values = spec
                .observables
                .iter()
                .map(|obs| steady_observable(*obs, &ss.rho, Some(hspec)).map(Some))
                .collect::<Result<Vec<_>>>()?;
            Ok((values, Some(ss.residual)))
        }
    }
}

fn steady_observable(
    obs: Observable,
    rho: &DensityMatrix,
    hspec: Option<HilbertSpec>,
) -> Result<f64> {
    match obs {
        Observable::N1 => lindblad::mean_photon(rho, 1),
        Observable::N2 => lindblad::mean_photon(rho, 2),
        Observable::G2Mode1 => lindblad::g2_zero(rho, 1),
        Observable::G2Mode2 => lindblad::g2_zero(rho, 2),
        Observable::Purity => Ok(1.0 - lindblad::g2_zero(rho, 2)?),
        Observable::FidelityManifold | Observable::Infidelity => {
            let hspec =
                hspec.ok_or(Error::UnsupportedObservable {
                    observable: "fidelity_K".into(),
                    backend: "rme".into(),
                })?;
            let projector = manifold_projector(hspec);
            let projected = lindblad::project(rho, &projector)?;
            let f = lindblad::fidelity(rho, &projected)?;
            Ok(if obs == Observable::FidelityManifold { f } else { 1.0 - f })
        }
    }
}

/// Time-axis sweeps integrate once from the vacuum over the whole grid.
fn run_time_axis(spec: &SweepSpec, ts: &[f64]) -> Result<Vec<SweepRow>> {
    let p = point_params(spec, f64::NAN)?;
    let hspec = HilbertSpec::new(spec.solver.n_max_1, spec.solver.n_max_2);
    let model = build_fme(hspec, &p)?;
    let liou = liouvillian(&model)?;
    let rho0 = vacuum_state(&liou, hspec);
    let t0 = std::time::Instant::now();
    let states = evolve(&liou, &rho0, ts)?;
    let per_row = t0.elapsed().as_secs_f64() / ts.len().max(1) as f64;
    ts.iter()
        .zip(states.iter())
        .map(|(&t, rho)| {
            let values = spec
                .observables
                .iter()
                .map(|obs| steady_observable(*obs, rho, Some(hspec)).map(Some))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                axis_value: t,
                values,
                residual: None,
                wall_time_s: per_row,
                error: None,
            })
        })
        .collect()
}

fn vacuum_state(liou: &Liouvillian, hspec: HilbertSpec) -> DensityMatrix {
    let d = hspec.dim();
    let mut mat = nalgebra::DMatrix::from_element(d, d, num_complex::Complex64::new(0.0, 0.0));
    mat[(hspec.index(0, 0, 0), hspec.index(0, 0, 0))] = num_complex::Complex64::new(1.0, 0.0);
    DensityMatrix::new_unchecked(liou.space(), mat)
}

/// Least-squares power law y = prefactor · x^exponent on log-log data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Fit a power law to the (x, y) pairs with x inside `window` (inclusive).
/// Needs at least three in-window points, all with positive x and y.
pub fn fit_power_law(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerLawFit> {
    let selected: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|&(x, _)| x >= window.0 && x <= window.1)
        .collect();
    if selected.len() < 3 {
        return Err(Error::FitWindow(format!(
            "{} points in window [{}, {}], need at least 3",
            selected.len(),
            window.0,
            window.1
        )));
    }
    if selected.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return Err(Error::FitWindow("nonpositive data in fit window".into()));
    }
    let logs: Vec<(f64, f64)> = selected.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::FitWindow("degenerate x values in fit window".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss_res: f64 = logs
        .iter()
        .map(|&(x, y)| {
            let e = y - (intercept + exponent * x);
            e * e
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { (1.0 - ss_res / syy).clamp(0.0, 1.0) };
    Ok(PowerLawFit { exponent, prefactor: intercept.exp(), r_squared, window })
}

/// Figure-data presets. Each name expands to one spec per curve.
pub fn preset(name: &str) -> Result<Vec<SweepSpec>> {
    let weak = SystemParams {
        g: 1.0,
        j: 0.1,
        omega: 1e-4,
        delta: 0.0,
        kappa2: 1.0,
        gamma: 0.01,
        gamma2ph_1: 0.0,
        gamma2ph_2: 0.0,
    };
    let strong = SystemParams { omega: 0.5, kappa2: 0.01, ..weak };
    let specs = match name {
        // g2 of both modes vs g at weak drive, one curve per hopping value
        "fig2a" | "fig2b" => {
            let obs = if name == "fig2a" { Observable::G2Mode1 } else { Observable::G2Mode2 };
            [0.1, 1.0, 2.5]
                .iter()
                .map(|&j| SweepSpec {
                    label: format!("{name}-J{j}"),
                    model: Backend::Fme,
                    fixed: SystemParams { j, ..weak },
                    axis: Axis::log("g", 0.1, 50.0, 12),
                    observables: vec![obs],
                    solver: SolverOptions::default(),
                    coupling: CouplingRule::Fixed,
                })
                .collect()
        }
        // detuning dependence of the weak-drive g2, one curve per g
        "fig2c" => [0.1, 1.0, 10.0]
            .iter()
            .map(|&g| SweepSpec {
                label: format!("fig2c-g{g}"),
                model: Backend::Analytic,
                fixed: SystemParams { g, ..weak },
                axis: Axis::linear("delta", -15.0, 15.0, 301),
                observables: vec![Observable::G2Mode2],
                solver: SolverOptions::default(),
                coupling: CouplingRule::Fixed,
            })
            .collect(),
        // strong-drive g2 vs g, one curve per kappa2
        "fig3a" => [1.0, 0.1, 0.01]
            .iter()
            .map(|&kappa2| SweepSpec {
                label: format!("fig3a-k{kappa2}"),
                model: Backend::Fme,
                fixed: SystemParams { omega: 0.5, kappa2, ..weak },
                axis: Axis::log("g", 0.1, 50.0, 12),
                observables: vec![Observable::G2Mode2],
                solver: SolverOptions::default(),
                coupling: CouplingRule::Fixed,
            })
            .collect(),
        // reduced-model validation: n2 vs kappa2 on both backends
        "fig3d" => {
            let fixed = SystemParams { g: 20.0, omega: 0.5, ..weak };
            [Backend::Fme, Backend::Rme]
                .iter()
                .map(|&model| SweepSpec {
                    label: format!("fig3d-{}", model.name()),
                    model,
                    fixed,
                    axis: Axis::log("kappa2", 1e-3, 1.0, 8),
                    observables: vec![Observable::N2],
                    solver: SolverOptions::default(),
                    coupling: CouplingRule::Fixed,
                })
                .collect()
        }
        // optimal-point brightness vs kappa2: reduced curve plus full-model
        // crosses at g = 20
        "fig4bcd" => vec![
            SweepSpec {
                label: "fig4bcd-rme".into(),
                model: Backend::Rme,
                fixed: strong,
                axis: Axis::log("kappa2", 1e-3, 1.0, 16),
                observables: vec![Observable::N2],
                solver: SolverOptions::default(),
                coupling: CouplingRule::OptimalClosedForm,
            },
            SweepSpec {
                label: "fig4bcd-fme-crosses".into(),
                model: Backend::Fme,
                fixed: SystemParams { g: 20.0, ..strong },
                axis: Axis::log("kappa2", 1e-3, 1e-1, 3),
                observables: vec![Observable::N2, Observable::Purity, Observable::G2Mode2],
                solver: SolverOptions::default(),
                coupling: CouplingRule::OptimalClosedForm,
            },
        ],
        // projection-approximation infidelity: dynamics per g, then the
        // steady-state dependence on g at fixed J = J_opt
        "fig5ab" => {
            let j_opt = optimal_hopping(strong.kappa2);
            let fixed = SystemParams { j: j_opt, ..strong };
            let mut specs: Vec<SweepSpec> = [5.0, 10.0, 20.0]
                .iter()
                .map(|&g| SweepSpec {
                    label: format!("fig5a-g{g}"),
                    model: Backend::Fme,
                    fixed: SystemParams { g, ..fixed },
                    axis: Axis::linear("t", 0.0, 50.0, 51),
                    observables: vec![Observable::Infidelity],
                    solver: SolverOptions::default(),
                    coupling: CouplingRule::Fixed,
                })
                .collect();
            specs.push(SweepSpec {
                label: "fig5b".into(),
                model: Backend::Fme,
                fixed,
                axis: Axis::log("g", j_opt / 0.1, j_opt / 1e-3, 9),
                observables: vec![Observable::Infidelity],
                solver: SolverOptions::default(),
                coupling: CouplingRule::Fixed,
            });
            specs
        }
        // brightness vs two-photon loss under numeric (J, Omega)
        // optimization, one curve per kappa2
        "fig6ab" => [0.1, 0.01, 0.001]
            .iter()
            .map(|&kappa2| SweepSpec {
                label: format!("fig6b-k{kappa2}"),
                model: Backend::Rme,
                fixed: SystemParams { omega: 0.5, kappa2, ..weak },
                axis: Axis::log("gamma2ph_1", 1e-2, 1e2, 9),
                observables: vec![Observable::N2],
                solver: SolverOptions::default(),
                coupling: CouplingRule::OptimalNumeric,
            })
            .collect(),
        other => return Err(Error::UnknownPreset(other.into())),
    };
    Ok(specs)
}

pub const PRESET_NAMES: [&str; 8] =
    ["fig2a", "fig2b", "fig2c", "fig3a", "fig3d", "fig4bcd", "fig5ab", "fig6ab"];

/// 17-significant-digit float formatting; round-trips exactly through parse.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn quote_csv(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

/// Render a sweep as CSV: `#`-prefixed provenance comments (including the
/// machine-readable spec), a header row, then one row per grid point.
pub fn export_csv(result: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# {} {} sweep\n",
        result.provenance.library, result.provenance.version
    ));
    out.push_str(&format!(
        "# spec: {}\n",
        serde_json::to_string(&result.spec).expect("spec serializes")
    ));
    out.push_str(&format!(
        "# provenance: {}\n",
        serde_json::to_string(&result.provenance).expect("provenance serializes")
    ));
    out.push_str(&result.spec.axis.parameter);
    for obs in &result.spec.observables {
        out.push(',');
        out.push_str(obs.name());
    }
    out.push_str(",residual,error\n");
    for row in &result.rows {
        out.push_str(&fmt_f64(row.axis_value));
        for v in &row.values {
            out.push(',');
            out.push_str(&fmt_opt(*v));
        }
        out.push(',');
        out.push_str(&fmt_opt(row.residual));
        out.push(',');
        if let Some(err) = &row.error {
            out.push_str(&quote_csv(err));
        }
        out.push('\n');
    }
    out
}

/// Parse CSV produced by [`export_csv`]; re-exporting the parsed result is
/// byte-identical.
pub fn parse_csv(text: &str) -> Result<SweepResult> {
    let mut spec: Option<SweepSpec> = None;
    let mut provenance: Option<Provenance> = None;
    let mut rows = Vec::new();
    let mut header_seen = false;
    let bad = |msg: &str| Error::Config(format!("csv parse: {msg}"));
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("# spec: ") {
            spec = Some(serde_json::from_str(rest).map_err(|e| bad(&e.to_string()))?);
            continue;
        }
        if let Some(rest) = line.strip_prefix("# provenance: ") {
            provenance = Some(serde_json::from_str(rest).map_err(|e| bad(&e.to_string()))?);
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !header_seen {
            header_seen = true;
            continue;
        }
        let spec = spec.as_ref().ok_or_else(|| bad("data before spec comment"))?;
        let ncols = spec.observables.len() + 2;
        let mut fields = line.splitn(ncols + 1, ',');
        let parse_f64 = |s: &str| s.parse::<f64>().map_err(|e| bad(&e.to_string()));
        let parse_opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() { Ok(None) } else { parse_f64(s).map(Some) }
        };
        let axis_value = parse_f64(fields.next().ok_or_else(|| bad("missing axis value"))?)?;
        let mut values = Vec::with_capacity(spec.observables.len());
        for _ in 0..spec.observables.len() {
            values.push(parse_opt(fields.next().ok_or_else(|| bad("missing value"))?)?);
        }
        let residual = parse_opt(fields.next().ok_or_else(|| bad("missing residual"))?)?;
        let raw_err = fields.next().ok_or_else(|| bad("missing error field"))?;
        let error = if raw_err.is_empty() {
            None
        } else {
            let inner = raw_err
                .strip_prefix('"')
                .and_then(|s| s.strip_suffix('"'))
                .ok_or_else(|| bad("unquoted error field"))?;
            Some(inner.replace("\"\"", "\""))
        };
        rows.push(SweepRow { axis_value, values, residual, wall_time_s: 0.0, error });
    }
    Ok(SweepResult {
        spec: spec.ok_or_else(|| bad("missing spec comment"))?,
        provenance: provenance.ok_or_else(|| bad("missing provenance comment"))?,
        rows,
    })
}

/// Render a sweep as JSON: one object {spec, provenance, rows}.
pub fn export_json(result: &SweepResult) -> String {
    let mut s = serde_json::to_string_pretty(result).expect("result serializes");
    s.push('\n');
    s
}

pub fn parse_json(text: &str) -> Result<SweepResult> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("json parse: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weak_params() -> SystemParams {
        SystemParams {
            g: 1.0,
            j: 0.1,
            omega: 1e-4,
            delta: 0.0,
            kappa2: 1.0,
            gamma: 0.01,
            gamma2ph_1: 0.0,
            gamma2ph_2: 0.0,
        }
    }

    fn analytic_spec(count: usize) -> SweepSpec {
        SweepSpec {
            label: "test".into(),
            model: Backend::Analytic,
            fixed: weak_params(),
            axis: Axis::log("g", 0.1, 50.0, count),
            observables: vec![Observable::G2Mode2],
            solver: SolverOptions::default(),
            coupling: CouplingRule::Fixed,
        }
    }

    #[test]
    fn axis_grids_are_strictly_monotone() {
        for axis in [Axis::linear("g", -1.0, 2.0, 7), Axis::log("g", 0.01, 100.0, 9)] {
            let xs = axis.values();
            assert_eq!(xs.len(), 7.max(xs.len().min(9)));
            assert!(xs.windows(2).all(|w| w[1] > w[0]));
        }
        assert_eq!(Axis::linear("g", 1.0, 2.0, 1).values(), vec![1.0]);
        assert!(Axis::linear("g", 1.0, 2.0, 0).values().is_empty());
        assert!(Axis::linear("g", 1.0, 1.0, 5).validate().is_err());
        assert!(Axis::log("g", -1.0, 1.0, 5).validate().is_err());
        assert!(Axis::linear("nope", 0.0, 1.0, 5).validate().is_err());
    }

    #[test]
    fn analytic_backend_is_a_pass_through() {
        let spec = analytic_spec(12);
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 12);
        for row in &result.rows {
            let p = SystemParams { g: row.axis_value, ..weak_params() };
            assert_eq!(row.values[0].unwrap(), analytic_g2(&p, 2).unwrap());
            assert!(row.error.is_none());
        }
    }

    #[test]
    fn fme_matches_analytic_at_weak_drive() {
        let mut spec = analytic_spec(3);
        spec.model = Backend::Fme;
        spec.axis = Axis::log("g", 0.5, 10.0, 3);
        spec.observables = vec![Observable::G2Mode1, Observable::G2Mode2];
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.failed_points(), 0);
        for row in &result.rows {
            let p = SystemParams { g: row.axis_value, ..weak_params() };
            for (k, mode) in [(0usize, 1usize), (1, 2)] {
                let reference = analytic_g2(&p, mode).unwrap();
                let got = row.values[k].unwrap();
                assert!(
                    (got / reference - 1.0).abs() < 0.02,
                    "mode {mode} at g={}: fme {got} vs analytic {reference}",
                    row.axis_value
                );
            }
        }
    }

    #[test]
    fn rme_tracks_fme_brightness() {
        let fixed = SystemParams { g: 20.0, omega: 0.5, kappa2: 0.1, ..weak_params() };
        let axis = Axis::log("kappa2", 0.01, 1.0, 3);
        let mut results = Vec::new();
        for model in [Backend::Fme, Backend::Rme] {
            let spec = SweepSpec {
                label: "cmp".into(),
                model,
                fixed,
                axis: axis.clone(),
                observables: vec![Observable::N2],
                solver: SolverOptions::default(),
                coupling: CouplingRule::Fixed,
            };
            results.push(run_sweep(&spec).unwrap());
        }
        for (a, b) in results[0].rows.iter().zip(results[1].rows.iter()) {
            assert!((a.values[0].unwrap() - b.values[0].unwrap()).abs() <= 0.01);
        }
    }

    #[test]
    fn failed_points_do_not_abort_the_sweep() {
        let mut spec = analytic_spec(3);
        // gamma = 0 at delta = 0 makes the analytic form degenerate
        spec.fixed.gamma = 0.0;
        spec.axis = Axis::linear("gamma", -0.01, 0.01, 3);
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 3);
        assert!(result.rows[0].error.is_some());
        assert!(result.rows[0].values[0].is_none());
        assert!(result.rows[2].error.is_none());
        assert_eq!(result.failed_points(), 2);
    }

    #[test]
    fn config_errors_abort_the_whole_sweep() {
        let mut spec = analytic_spec(4);
        spec.observables = vec![Observable::N2];
        assert!(matches!(run_sweep(&spec), Err(Error::Config(_))));
        let mut spec = analytic_spec(4);
        spec.observables.clear();
        assert!(run_sweep(&spec).is_err());
        let mut spec = analytic_spec(4);
        spec.axis = Axis::linear("t", 0.0, 1.0, 4);
        assert!(run_sweep(&spec).is_err());
    }

    #[test]
    fn parallel_and_serial_runs_agree_bitwise() {
        let spec = analytic_spec(24);
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec).unwrap());
        let parallel = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run_sweep(&spec).unwrap());
        for (a, b) in serial.rows.iter().zip(parallel.rows.iter()) {
            assert_eq!(a.axis_value.to_bits(), b.axis_value.to_bits());
            assert_eq!(
                a.values[0].unwrap().to_bits(),
                b.values[0].unwrap().to_bits()
            );
        }
    }

    #[test]
    fn fit_recovers_exact_quartic() {
        let points: Vec<(f64, f64)> =
            (1..20).map(|i| (i as f64 * 0.5, (i as f64 * 0.5).powi(4))).collect();
        let fit = fit_power_law(&points, (0.0, 100.0)).unwrap();
        assert!((fit.exponent - 4.0).abs() < 1e-10);
        assert!((fit.prefactor - 1.0).abs() < 1e-10);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weak_drive_g2_scales_biquadratically() {
        let spec = analytic_spec(12);
        let result = run_sweep(&spec).unwrap();
        let series = result.series(Observable::G2Mode2).unwrap();
        let fit = fit_power_law(&series, (5.0, 50.0)).unwrap();
        assert!((fit.exponent + 4.0).abs() < 0.05, "exponent {}", fit.exponent);
    }

    #[test]
    fn fit_window_errors() {
        let points = vec![(1.0, 1.0), (2.0, 2.0), (3.0, -1.0), (4.0, 4.0)];
        assert!(matches!(fit_power_law(&points, (3.5, 10.0)), Err(Error::FitWindow(_))));
        assert!(matches!(fit_power_law(&points, (1.0, 4.0)), Err(Error::FitWindow(_))));
    }

    #[test]
    fn presets_pin_caption_parameters() {
        // golden table of per-panel fixed parameters
        for (name, omega, kappa2, gamma) in [
            ("fig2a", 1e-4, 1.0, 0.01),
            ("fig2b", 1e-4, 1.0, 0.01),
            ("fig2c", 1e-4, 1.0, 0.01),
            ("fig3d", 0.5, 1.0, 0.01),
            ("fig5ab", 0.5, 0.01, 0.01),
        ] {
            for spec in preset(name).unwrap() {
                assert_eq!(spec.fixed.omega, omega, "{name} omega");
                assert_eq!(spec.fixed.gamma, gamma, "{name} gamma");
                if spec.axis.parameter != "kappa2" {
                    assert_eq!(spec.fixed.kappa2, kappa2, "{name} kappa2");
                }
                spec.validate().unwrap();
            }
        }
        let fig2b = preset("fig2b").unwrap();
        assert_eq!(
            fig2b.iter().map(|s| s.fixed.j).collect::<Vec<_>>(),
            vec![0.1, 1.0, 2.5]
        );
        assert!(fig2b.iter().all(|s| s.observables == vec![Observable::G2Mode2]));
        let fig3d = preset("fig3d").unwrap();
        assert_eq!(fig3d.len(), 2);
        assert!(fig3d.iter().all(|s| s.fixed.g == 20.0 && s.fixed.j == 0.1));
        let fig3a = preset("fig3a").unwrap();
        assert_eq!(
            fig3a.iter().map(|s| s.fixed.kappa2).collect::<Vec<_>>(),
            vec![1.0, 0.1, 0.01]
        );
        let fig5 = preset("fig5ab").unwrap();
        assert!(fig5.iter().all(|s| (s.fixed.j - optimal_hopping(0.01)).abs() < 1e-15));
        assert!(matches!(preset("fig9z"), Err(Error::UnknownPreset(_))));
        for name in PRESET_NAMES {
            for spec in preset(name).unwrap() {
                spec.validate().unwrap();
            }
        }
    }

    #[test]
    fn empty_sweep_exports_header_only_csv() {
        let result = run_sweep(&analytic_spec(0)).unwrap();
        let csv = export_csv(&result);
        let data_lines: Vec<&str> =
            csv.lines().filter(|l| !l.starts_with('#')).collect();
        assert_eq!(data_lines, vec!["g,g2_2,residual,error"]);
    }

    #[test]
    fn csv_round_trip_is_byte_identical() {
        let mut spec = analytic_spec(5);
        spec.fixed.gamma = 0.0;
        spec.axis = Axis::linear("gamma", -0.01, 0.03, 5);
        let result = run_sweep(&spec).unwrap();
        assert!(result.failed_points() > 0, "want a row with an error string");
        let csv = export_csv(&result);
        let reparsed = parse_csv(&csv).unwrap();
        assert_eq!(export_csv(&reparsed), csv);
        let json = export_json(&result);
        assert_eq!(export_json(&parse_json(&json).unwrap()), json);
    }

    #[test]
    fn json_export_carries_provenance() {
        let result = run_sweep(&analytic_spec(2)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&export_json(&result)).unwrap();
        assert_eq!(v["provenance"]["version"], env!("CARGO_PKG_VERSION"));
        assert_eq!(v["provenance"]["n_max_1"], 10);
        assert_eq!(v["provenance"]["tol"], 1e-10);
        assert!(v["spec"]["axis"]["count"].is_number());
        assert!(v["rows"].as_array().unwrap().len() == 2);
    }

    #[test]
    fn time_axis_runs_the_integrator() {
        let spec = SweepSpec {
            label: "dyn".into(),
            model: Backend::Fme,
            fixed: SystemParams { g: 5.0, omega: 0.5, kappa2: 0.01, ..weak_params() },
            axis: Axis::linear("t", 0.0, 2.0, 5),
            observables: vec![Observable::N1, Observable::Infidelity],
            solver: SolverOptions { n_max_1: 4, n_max_2: 4, ..Default::default() },
            coupling: CouplingRule::Fixed,
        };
        let result = run_sweep(&spec).unwrap();
        assert_eq!(result.rows.len(), 5);
        // vacuum start: no photons, perfectly inside the manifold
        assert!(result.rows[0].values[0].unwrap().abs() < 1e-12);
        assert!(result.rows[0].values[1].unwrap().abs() < 1e-9);
        // the drive populates mode 1
        assert!(result.rows[4].values[0].unwrap() > 1e-3);
    }

    #[test]
    fn closed_form_coupling_rule_sets_the_optimum() {
        let spec = SweepSpec {
            label: "opt".into(),
            model: Backend::Rme,
            fixed: SystemParams { omega: 0.1, kappa2: 0.5, ..weak_params() },
            axis: Axis::log("kappa2", 0.01, 1.0, 3),
            observables: vec![Observable::N2],
            solver: SolverOptions::default(),
            coupling: CouplingRule::OptimalClosedForm,
        };
        let result = run_sweep(&spec).unwrap();
        for row in &result.rows {
            // the rule must hit exactly (J_opt(kappa2), 0.5), regardless of
            // the fixed j and omega
            let p = SystemParams {
                j: optimal_hopping(row.axis_value),
                omega: 0.5,
                kappa2: row.axis_value,
                ..spec.fixed
            };
            let model = build_rme(&ReducedBasis::default(), &p).unwrap();
            let rho = steady_state(&liouvillian(&model).unwrap(), 1e-10).unwrap().rho;
            let expected = crate::lindblad::mean_photon(&rho, 2).unwrap();
            assert_eq!(row.values[0].unwrap().to_bits(), expected.to_bits());
            // and near the optimum the three-level closed form is close
            if row.axis_value <= 0.011 {
                let cf = 1.0 - crate::rme::optimal_infidelity(row.axis_value);
                assert!((row.values[0].unwrap() - cf).abs() < 5e-3);
            }
        }
    }
}
