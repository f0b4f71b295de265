//! Command-line sweep runner: figure presets or TOML sweep configs in,
//! provenance-stamped CSV/JSON out.
//!
//! Exit codes: 0 success, 1 configuration error, 2 at least one grid point
//! failed (results are still exported with per-row error strings).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use tpjc::sweep::{
    export_csv, export_json, fit_power_law, parse_csv, run_sweep, preset,
    Observable, SweepResult, SweepSpec, PRESET_NAMES,
};

#[derive(Parser)]
#[command(name = "tpjc", version, about = "Steady-state sweeps for the two-photon Jaynes-Cummings model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep from a preset and/or a TOML config file.
    Sweep {
        /// Figure preset name (see `tpjc presets`).
        #[arg(long)]
        preset: Option<String>,
        /// TOML file with one or more [[sweep]] tables; flags override it.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output path; multi-spec runs append the spec label to the stem.
        /// Defaults to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Override the mode-1 photon cap of the full solver.
        #[arg(long)]
        nmax1: Option<usize>,
        /// Override the mode-2 photon cap of the full solver.
        #[arg(long)]
        nmax2: Option<usize>,
        /// Override the steady-state residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// List the available figure presets.
    Presets,
    /// Fit a power law to one observable of an exported CSV sweep.
    Fit {
        /// CSV file produced by `tpjc sweep`.
        input: PathBuf,
        /// Observable column name, e.g. g2_2.
        #[arg(long)]
        observable: String,
        /// Lower edge of the fit window on the axis.
        #[arg(long)]
        from: f64,
        /// Upper edge of the fit window on the axis.
        #[arg(long)]
        to: f64,
    },
}

/// TOML config: `[[sweep]]` tables, each deserializing to a SweepSpec.
#[derive(serde::Deserialize)]
struct ConfigFile {
    #[serde(default)]
    sweep: Vec<SweepSpec>,
}

fn load_config(path: &Path) -> anyhow::Result<Vec<SweepSpec>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let parsed: ConfigFile = toml::from_str(&text)
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    Ok(parsed.sweep)
}

fn out_path(base: &Path, label: &str, many: bool, format: Format) -> PathBuf {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    if !many {
        return base.with_extension(ext);
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
    base.with_file_name(format!("{stem}-{label}.{ext}"))
}

fn render(result: &SweepResult, format: Format) -> String {
    match format {
        Format::Csv => export_csv(result),
        Format::Json => export_json(result),
    }
}

fn run_sweep_command(
    preset_name: Option<String>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
    format: Format,
    workers: usize,
    nmax1: Option<usize>,
    nmax2: Option<usize>,
    tol: Option<f64>,
) -> anyhow::Result<bool> {
    let mut specs = Vec::new();
    if let Some(name) = &preset_name {
        specs.extend(preset(name)?);
    }
    if let Some(path) = &config {
        specs.extend(load_config(path)?);
    }
    if specs.is_empty() {
        anyhow::bail!("nothing to run: pass --preset and/or --config");
    }
    for spec in &mut specs {
        if let Some(n) = nmax1 {
            spec.solver.n_max_1 = n;
        }
        if let Some(n) = nmax2 {
            spec.solver.n_max_2 = n;
        }
        if let Some(t) = tol {
            spec.solver.tol = t;
        }
        spec.validate()?;
    }

    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| anyhow::anyhow!("worker pool: {e}"))?;
    }

    let many = specs.len() > 1;
    let mut any_failed = false;
    for spec in &specs {
        let result = run_sweep(spec)?;
        let failed = result.failed_points();
        if failed > 0 {
            any_failed = true;
            eprintln!("{}: {failed} of {} points failed", spec.label, result.rows.len());
        }
        let rendered = render(&result, format);
        match &out {
            Some(base) => {
                let path = out_path(base, &spec.label, many, format);
                std::fs::write(&path, rendered)
                    .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
                eprintln!("{}: wrote {}", spec.label, path.display());
            }
            None => print!("{rendered}"),
        }
    }
    Ok(any_failed)
}

fn run_fit(input: &Path, observable: &str, window: (f64, f64)) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| anyhow::anyhow!("{}: {e}", input.display()))?;
    let result = parse_csv(&text)?;
    let obs = result
        .spec
        .observables
        .iter()
        .copied()
        .find(|o| o.name() == observable)
        .ok_or_else(|| anyhow::anyhow!("observable {observable} not in this sweep"))?;
    let series = result.series(obs)?;
    let fit = fit_power_law(&series, window)?;
    println!(
        "observable: {}\nexponent: {:.6}\nprefactor: {:.6e}\nr_squared: {:.8}\nwindow: [{}, {}]",
        Observable::name(&obs),
        fit.exponent,
        fit.prefactor,
        fit.r_squared,
        fit.window.0,
        fit.window.1
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Presets => {
            for name in PRESET_NAMES {
                println!("{name}");
            }
            Ok(false)
        }
        Command::Fit { input, observable, from, to } => {
            run_fit(&input, &observable, (from, to)).map(|()| false)
        }
        Command::Sweep { preset, config, out, format, workers, nmax1, nmax2, tol } => {
            run_sweep_command(preset, config, out, format, workers, nmax1, nmax2, tol)
        }
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
