//! Subcommand implementations. Every command writes fixed file names into one
//! directory per (method, domain, frequency).

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use helmtrial::domains::{wavenumber, DomainSpec, Shape};
use helmtrial::network::checkpoint::save_checkpoint;
use helmtrial::network::MlpParams;
use helmtrial::oracle::{self, compare, ErrorNorms, FemOptions, FemStats, FieldGrid, OracleMethod};
use helmtrial::training::report::ReportSummary;
use helmtrial::training::{train_soft, train_trial, TrainReport};
use helmtrial::trial::TrialForm;

use crate::config::RunConfig;
use crate::CliError;

/// Marker written into a run directory whose artifacts are incomplete.
pub const FAILED_MARKER: &str = "FAILED";

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write_with<F>(path: &Path, f: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
{
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
    })
}

fn write_field(path: &Path, grid: &FieldGrid) -> Result<(), CliError> {
    write_with(path, |w| Ok(grid.write_csv(w)?))
}

pub fn read_field(path: &Path) -> Result<FieldGrid, CliError> {
    let f = File::open(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    Ok(FieldGrid::read_csv(BufReader::new(f))?)
}

fn make_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
    let marker = dir.join(FAILED_MARKER);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| CliError::Io { path: marker, source: e })?;
    }
    Ok(())
}

/// Runs `body` in `dir`, leaving a failure marker with the message on error.
fn guarded<T>(dir: &Path, body: impl FnOnce() -> Result<T, CliError>) -> Result<T, CliError> {
    make_dir(dir)?;
    body().inspect_err(|e| {
        let _ = fs::write(dir.join(FAILED_MARKER), format!("{e}\n"));
    })
}

/// A trained network together with the field it represents.
pub struct Solved {
    pub report: TrainReport,
    pub trial: Option<TrialForm>,
}

impl Solved {
    pub fn value(&self, p: helmtrial::geometry::Point2) -> f64 {
        match &self.trial {
            Some(form) => form.eval(&self.report.params, p),
            None => self.report.params.forward(p),
        }
    }

    pub fn field(&self, shape: &Shape, n: usize) -> Result<FieldGrid, CliError> {
        Ok(FieldGrid::sample(shape, n, n, |p| Ok(self.value(p)))?)
    }
}

/// Trains one frequency of `cfg` without touching the filesystem.
pub fn train(cfg: &RunConfig, f: f64) -> Result<Solved, CliError> {
    let k = wavenumber(f, cfg.speed_of_sound)?;
    let col = DomainSpec::new(cfg.domain.clone(), cfg.effective_sampling())?.sample()?;
    let net = MlpParams::init(&cfg.network.architecture()?, cfg.network.seed)?;
    match cfg.method.schedule() {
        None => {
            let form = cfg.domain.trial_form(cfg.trial.smoothness)?;
            let report = train_trial(&col, &form, &net, k, &cfg.train)?;
            Ok(Solved {
                report,
                trial: Some(form),
            })
        }
        Some((schedule, scope)) => Ok(Solved {
            report: train_soft(&col, &net, k, &schedule, scope, &cfg.train)?,
            trial: None,
        }),
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub frequency: f64,
    pub dir: PathBuf,
    pub summary: ReportSummary,
}

fn write_run(cfg: &RunConfig, f: f64, dir: &Path, solved: &Solved) -> Result<(), CliError> {
    let mut one = cfg.clone();
    one.frequencies = vec![f];
    write_with(&dir.join("config.toml"), |w| {
        w.write_all(one.to_toml()?.as_bytes())
            .map_err(|e| CliError::Io { path: dir.join("config.toml"), source: e })
    })?;
    write_with(&dir.join("report.csv"), |w| Ok(solved.report.write_csv(w)?))?;
    save_checkpoint(&dir.join("params.ckpt"), &solved.report.params)?;
    write_field(&dir.join("field.csv"), &solved.field(&cfg.domain, cfg.output.grid)?)?;
    for (name, h) in &solved.report.histograms {
        write_with(&dir.join(format!("histogram_{name}.csv")), |w| Ok(h.write_csv(w)?))?;
    }
    Ok(())
}

/// Trains every configured frequency and writes the report, checkpoint and
/// field of each.
pub fn cmd_solve(cfg: &RunConfig) -> Result<Vec<RunOutcome>, CliError> {
    cfg.validate()?;
    let mut out = Vec::new();
    for &f in &cfg.frequencies {
        let dir = cfg.run_dir(cfg.method.name(), f);
        let solved = guarded(&dir, || {
            let s = train(cfg, f)?;
            write_run(cfg, f, &dir, &s)?;
            Ok(s)
        })?;
        out.push(RunOutcome {
            frequency: f,
            dir,
            summary: solved.report.summary(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
struct Diagnostics {
    summary: ReportSummary,
    lambda_hat: Vec<f64>,
    /// Ratio of the interior to the boundary gradient spread, when both exist.
    std_ratio_all: Option<f64>,
    std_ratio_last_hidden: Option<f64>,
}

/// Like `solve`, additionally writing gradient histograms and spread statistics.
pub fn cmd_diagnose(cfg: &RunConfig, bins: usize) -> Result<Vec<RunOutcome>, CliError> {
    if bins == 0 {
        return Err(CliError::Config("diagnose needs at least one histogram bin".into()));
    }
    let mut cfg = cfg.clone();
    cfg.train.histogram_bins = bins;
    cfg.validate()?;
    let mut out = Vec::new();
    for &f in &cfg.frequencies {
        let dir = cfg.run_dir(cfg.method.name(), f);
        let solved = guarded(&dir, || {
            let s = train(&cfg, f)?;
            write_run(&cfg, f, &dir, &s)?;
            let stats = s.report.gradient_stats;
            let ratio = |d: Option<f64>, b: Option<f64>| match (d, b) {
                (Some(d), Some(b)) if b > 0.0 => Some(d / b),
                _ => None,
            };
            let diag = Diagnostics {
                summary: s.report.summary(),
                lambda_hat: s.report.lambda_hat_history(),
                std_ratio_all: ratio(stats.map(|s| s.std_d_all), stats.and_then(|s| s.std_b_all)),
                std_ratio_last_hidden: ratio(
                    stats.map(|s| s.std_d_last_hidden),
                    stats.and_then(|s| s.std_b_last_hidden),
                ),
            };
            write_json(&dir.join("diagnostics.json"), &diag)?;
            Ok(s)
        })?;
        out.push(RunOutcome {
            frequency: f,
            dir,
            summary: solved.report.summary(),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSummary {
    pub frequency: f64,
    pub wavenumber: f64,
    pub method: OracleMethod,
    pub tail_bound: Option<f64>,
    pub fem: Option<FemStats>,
    /// Finite elements against the closed form.
    pub crosscheck: Option<ErrorNorms>,
}

/// Writes the reference field for every configured frequency, with a finite
/// element cross-check where a closed form exists.
pub fn cmd_oracle(cfg: &RunConfig) -> Result<Vec<(PathBuf, OracleSummary)>, CliError> {
    cfg.validate()?;
    let n = cfg.output.grid;
    let mut out = Vec::new();
    for &f in &cfg.frequencies {
        let dir = cfg.run_dir("oracle", f);
        let summary = guarded(&dir, || {
            let k = wavenumber(f, cfg.speed_of_sound)?;
            let opts: FemOptions = cfg.oracle.fem_options(cfg.speed_of_sound, f)?;
            let r = oracle::reference(&cfg.domain, k, n, n, cfg.oracle.method, opts)?;
            write_field(&dir.join("field.csv"), &r.grid)?;
            let mut fem_stats = r.fem.as_ref().map(|s| s.stats);
            if let Some(sol) = &r.fem {
                write_with(&dir.join("mesh.txt"), |w| Ok(sol.mesh.write_text(w)?))?;
            }
            let mut crosscheck = None;
            if cfg.oracle.crosscheck && r.method == OracleMethod::Analytic {
                let fem = oracle::reference(&cfg.domain, k, n, n, OracleMethod::Fem, opts)?;
                let (norms, err) = compare(&fem.grid, &r.grid)?;
                write_field(&dir.join("fem_field.csv"), &fem.grid)?;
                write_field(&dir.join("fem_error.csv"), &err)?;
                if let Some(sol) = &fem.fem {
                    write_with(&dir.join("mesh.txt"), |w| Ok(sol.mesh.write_text(w)?))?;
                }
                fem_stats = fem.fem.map(|s| s.stats);
                crosscheck = Some(norms);
            }
            let summary = OracleSummary {
                frequency: f,
                wavenumber: k,
                method: r.method,
                tail_bound: r.tail_bound,
                fem: fem_stats,
                crosscheck,
            };
            write_json(&dir.join("oracle.json"), &summary)?;
            Ok(summary)
        })?;
        out.push((dir, summary));
    }
    Ok(out)
}

/// Compares `a` against the reference `b`, writing `metrics.json` and
/// `error.csv` into `out_dir`.
pub fn cmd_compare(a: &Path, b: &Path, out_dir: &Path) -> Result<ErrorNorms, CliError> {
    let fa = read_field(a)?;
    let fb = read_field(b)?;
    let (norms, err) = compare(&fa, &fb)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io { path: out_dir.to_path_buf(), source: e })?;
    write_json(&out_dir.join("metrics.json"), &norms)?;
    write_field(&out_dir.join("error.csv"), &err)?;
    Ok(norms)
}

/// Rasterises the trial-form geometry of `shape`: the distance `phi`, the
/// piece distances `phi_<i>`, the weights `w_<i>` and the boundary blend `g`.
pub fn cmd_adf(shape: &Shape, smoothness: u32, n: usize, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let form = shape.trial_form(smoothness)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::Io { path: out_dir.to_path_buf(), source: e })?;
    let mut written = Vec::new();
    let mut emit = |name: String, grid: FieldGrid| -> Result<(), CliError> {
        let path = out_dir.join(format!("{name}.csv"));
        write_field(&path, &grid)?;
        written.push(path);
        Ok(())
    };
    emit("phi".into(), FieldGrid::sample(shape, n, n, |p| Ok(form.geometry(p).1))?)?;
    emit("g".into(), FieldGrid::sample(shape, n, n, |p| Ok(form.geometry(p).0))?)?;
    for (i, piece) in form.pieces().iter().enumerate() {
        emit(format!("phi_{i}"), FieldGrid::sample(shape, n, n, |p| Ok(piece.adf.eval(p)))?)?;
        emit(format!("w_{i}"), FieldGrid::sample(shape, n, n, |p| Ok(form.weights(p)[i]))?)?;
    }
    Ok(written)
}

