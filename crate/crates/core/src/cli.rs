//! Command-line driver: JSON configuration, the four subcommands and the
//! files they emit.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | bad arguments, configuration, or input file contents |
//! | 3 | file system error |
//! | 4 | numerical failure (degenerate input, undefined metric) |

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bench::{
    convergence_study, run_sweep_detailed, simulate, with_pool, AggregateStats, Algorithm, ConvergenceSummary,
    ExperimentConfig, GridShift, RunRecord, DEFAULT_RUNS, DEFAULT_SIZE, DEFAULT_SPACING, FULL_RUNS,
};
use crate::error::{HoloError, Result};
use crate::field::fft_forward;
use crate::io::{
    csv_err, hologram_from_pgm, hologram_to_pgm, write_atomic, write_json, IntensityFormat, IntensityMap, Pgm,
};
use crate::metrics::{incident_power, order_powers, run_metrics, OrderPowers, RunMetrics};
use crate::mraf::{SignalRegion, TargetPower, DEFAULT_ITERATIONS, DEFAULT_MIXING, DEFAULT_SIGNAL_SIZE};
use crate::quantize::{DeviceModel, KernelChoice, ScanOrder, DEFAULT_PHASE_LEVELS};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// JSON schema of [`CliConfig`], shipped with the crate.
pub const CONFIG_SCHEMA: &str = include_str!("../schema/config.schema.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceKind {
    Pslm,
    Dmd,
}

impl DeviceKind {
    pub fn model(self, levels: u32) -> Result<DeviceModel> {
        match self {
            DeviceKind::Dmd => Ok(DeviceModel::Dmd),
            DeviceKind::Pslm => DeviceModel::pslm(levels),
        }
    }
}

impl FromStr for DeviceKind {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pslm" => Ok(DeviceKind::Pslm),
            "dmd" => Ok(DeviceKind::Dmd),
            other => Err(HoloError::Config(format!("unknown device '{other}'"))),
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeviceKind::Pslm => "pslm",
            DeviceKind::Dmd => "dmd",
        })
    }
}

/// `RxC` on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridArg(pub usize, pub usize);

impl FromStr for GridArg {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HoloError::Config(format!("grid must look like 4x4, got '{s}'"));
        let (r, c) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        Ok(GridArg(r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
    }
}

/// The configuration document. Every key is optional; unknown keys are rejected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CliConfig {
    pub devices: Vec<DeviceKind>,
    /// Phase levels of the PSLM.
    pub levels: u32,
    pub algorithms: Vec<Algorithm>,
    /// `[rows, cols]` per trap grid.
    pub grids: Vec<[usize; 2]>,
    pub runs: usize,
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub spacing: usize,
    /// Grid centroid offset from the optical axis; `null` picks the device default.
    pub shift: Option<[i64; 2]>,
    pub kernel: KernelChoice,
    pub scan: ScanOrder,
    pub mixing: f64,
    pub iterations: usize,
    /// MRAF signal window `[width, height]` centered on the grid; `null` is the whole plane.
    pub signal_region: Option<[usize; 2]>,
    pub target_power: TargetPower,
    pub out_dir: PathBuf,
    pub intensity_format: IntensityFormat,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            devices: vec![DeviceKind::Pslm, DeviceKind::Dmd],
            levels: DEFAULT_PHASE_LEVELS,
            algorithms: Algorithm::ALL.to_vec(),
            grids: [2, 4, 6, 10, 16, 20].iter().map(|&n| [n, n]).collect(),
            runs: DEFAULT_RUNS,
            seed: 0,
            width: DEFAULT_SIZE,
            height: DEFAULT_SIZE,
            spacing: DEFAULT_SPACING,
            shift: None,
            kernel: KernelChoice::default(),
            scan: ScanOrder::default(),
            mixing: DEFAULT_MIXING,
            iterations: DEFAULT_ITERATIONS,
            signal_region: Some([DEFAULT_SIGNAL_SIZE, DEFAULT_SIGNAL_SIZE]),
            target_power: TargetPower::default(),
            out_dir: PathBuf::from("out"),
            intensity_format: IntensityFormat::default(),
        }
    }
}

impl CliConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: CliConfig = serde_json::from_str(text).map_err(|e| HoloError::Parse(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Checks every (device, algorithm) experiment the document describes.
    pub fn validate(&self) -> Result<()> {
        if self.devices.is_empty() {
            return Err(HoloError::Config("at least one device is required".into()));
        }
        if self.algorithms.is_empty() {
            return Err(HoloError::Config("at least one algorithm is required".into()));
        }
        for &d in &self.devices {
            for &a in &self.algorithms {
                self.experiment(d, a)?.validate()?;
            }
        }
        Ok(())
    }

    pub fn experiment(&self, device: DeviceKind, algorithm: Algorithm) -> Result<ExperimentConfig> {
        let grids = self.grids.iter().map(|g| (g[0], g[1])).collect();
        let mut cfg = ExperimentConfig::new(device.model(self.levels)?, algorithm, grids);
        cfg.runs = self.runs;
        cfg.base_seed = self.seed;
        cfg.width = self.width;
        cfg.height = self.height;
        cfg.spacing = self.spacing;
        cfg.shift = self.shift.map(|[dx, dy]| GridShift { dx, dy });
        cfg.kernel = self.kernel;
        cfg.scan = self.scan;
        cfg.mixing = self.mixing;
        cfg.iterations = self.iterations;
        cfg.signal = match self.signal_region {
            Some([width, height]) => SignalRegion::Centered { width, height },
            None => SignalRegion::Full,
        };
        cfg.target_power = self.target_power;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.out_dir = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(runs) = o.runs {
            self.runs = runs;
        }
        if let Some(d) = o.device {
            self.devices = vec![d];
        }
        if let Some(a) = o.algorithm {
            self.algorithms = vec![a];
        }
        if !o.grid.is_empty() {
            self.grids = o.grid.iter().map(|g| [g.0, g.1]).collect();
        }
        if let Some(n) = o.iterations {
            self.iterations = n;
        }
        if let Some(p) = o.mixing {
            self.mixing = p;
        }
        if let Some(m) = o.levels {
            self.levels = m;
        }
        if let Some(k) = o.kernel {
            self.kernel = k;
        }
        if let Some(s) = o.scan {
            self.scan = s;
        }
    }

    fn first(&self) -> Result<(DeviceKind, Algorithm, (usize, usize))> {
        let d = *self.devices.first().ok_or_else(|| HoloError::Config("no device configured".into()))?;
        let a = *self.algorithms.first().ok_or_else(|| HoloError::Config("no algorithm configured".into()))?;
        let g = self.grids.first().ok_or_else(|| HoloError::Config("no grid configured".into()))?;
        Ok((d, a, (g[0], g[1])))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub aggregate: AggregateStats,
    pub runs: Vec<RunRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub device: DeviceModel,
    pub grids: Vec<ConvergenceSummary>,
}

/// Everything a command computed, with the configuration that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub command: String,
    pub config: CliConfig,
    pub wall_time_s: f64,
    #[serde(default)]
    pub sweeps: Vec<SweepReport>,
    #[serde(default)]
    pub convergence: Vec<ConvergenceReport>,
    /// Metrics of an externally supplied hologram (`simulate`).
    #[serde(default)]
    pub evaluated: Option<Evaluation>,
}

impl RunReport {
    fn new(command: &str, config: &CliConfig) -> Self {
        RunReport {
            version: VERSION.to_string(),
            command: command.to_string(),
            config: config.clone(),
            wall_time_s: 0.0,
            sweeps: Vec::new(),
            convergence: Vec::new(),
            evaluated: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        serde_json::from_str(&fs::read_to_string(path)?).map_err(|e| HoloError::Parse(format!("report: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub hologram: PathBuf,
    pub device: DeviceModel,
    pub rows: usize,
    pub cols: usize,
    pub metrics: RunMetrics,
    /// Only when the three order windows are disjoint.
    pub orders: Option<OrderPowers>,
}

/// One line of `bench.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub device: DeviceKind,
    pub algorithm: Algorithm,
    pub rows: usize,
    pub cols: usize,
    pub n_traps: usize,
    pub median_cv: f64,
    pub q25_cv: f64,
    pub q75_cv: f64,
    pub median_eff: f64,
}

/// One line of `converge.csv`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRow {
    pub device: DeviceKind,
    pub rows: usize,
    pub cols: usize,
    pub iteration: usize,
    pub median_cv: f64,
    pub median_eff: f64,
}

/// One line of `trace.csv`, written by `generate` for MRAF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub cv: f64,
    pub efficiency: f64,
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    write_atomic(path, |w| {
        let mut out = csv::Writer::from_writer(w);
        for r in rows {
            out.serialize(r).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    })
}

pub fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err)?;
    rdr.deserialize().map(|r| r.map_err(csv_err)).collect()
}

#[derive(Parser, Debug)]
#[command(name = "holotrap", version, about = "Holograms for optical trap arrays on DMDs and phase SLMs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute one hologram and write it with its image-plane intensity.
    Generate,
    /// Evaluate an existing hologram file against the configured trap grid.
    Simulate {
        #[arg(long)]
        hologram: PathBuf,
    },
    /// Seeded sweep over devices, algorithms and grid sizes.
    Bench {
        /// Use the long run count instead of the configured one.
        #[arg(long)]
        full: bool,
    },
    /// Per-iteration MRAF medians.
    Converge,
}

#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    #[arg(long, global = true)]
    pub device: Option<DeviceKind>,
    #[arg(long, global = true)]
    pub algorithm: Option<Algorithm>,
    /// `RxC`; repeat for several grids.
    #[arg(long, global = true)]
    pub grid: Vec<GridArg>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub mixing: Option<f64>,
    #[arg(long, global = true)]
    pub levels: Option<u32>,
    #[arg(long, global = true)]
    pub kernel: Option<KernelChoice>,
    #[arg(long, global = true)]
    pub scan: Option<ScanOrder>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            0
        }
        Err(e) => {
            eprintln!("holotrap: {e}");
            e.exit_code()
        }
    }
}

/// Resolves the configuration for `cli` and runs it; returns lines for stdout.
pub fn run(cli: &Cli) -> Result<Vec<String>> {
    let mut cfg = match &cli.overrides.config {
        Some(p) => CliConfig::load(p)?,
        None => CliConfig::default(),
    };
    cfg.apply(&cli.overrides);
    if let Command::Bench { full: true } = cli.command {
        cfg.runs = FULL_RUNS;
    }
    cfg.validate()?;
    match &cli.command {
        Command::Generate => cmd_generate(&cfg),
        Command::Simulate { hologram } => cmd_simulate(&cfg, hologram),
        Command::Bench { .. } => cmd_bench(&cfg),
        Command::Converge => cmd_converge(&cfg),
    }
}

fn prepare_out(cfg: &CliConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out_dir)?;
    Ok(&cfg.out_dir)
}

fn intensity_path(dir: &Path, format: IntensityFormat) -> PathBuf {
    dir.join(format!("intensity.{}", format.extension()))
}

/// Run 0 of the first configured device, algorithm and grid.
pub fn cmd_generate(cfg: &CliConfig) -> Result<Vec<String>> {
    let started = Instant::now();
    let (device, algorithm, grid) = cfg.first()?;
    let exp = cfg.experiment(device, algorithm)?;
    let sim = with_pool(|| simulate(&exp, grid, 0))??;
    let dir = prepare_out(cfg)?;
    let holo = dir.join("hologram.pgm");
    hologram_to_pgm(&sim.displayed).write(&holo)?;
    let inten = intensity_path(dir, cfg.intensity_format);
    IntensityMap::from_field(&sim.image).write(&inten, cfg.intensity_format)?;
    let mut lines = vec![
        format!("wrote {}", holo.display()),
        format!("wrote {}", inten.display()),
    ];
    if let Some(trace) = &sim.trace {
        let rows: Vec<TraceRow> = (0..trace.len())
            .map(|i| TraceRow { iteration: i + 1, cv: trace.cv[i], efficiency: trace.efficiency[i] })
            .collect();
        let p = dir.join("trace.csv");
        write_rows(&p, &rows)?;
        lines.push(format!("wrote {}", p.display()));
    }
    let record = RunRecord {
        rows: grid.0,
        cols: grid.1,
        run_index: 0,
        seed: crate::bench::run_seed(exp.base_seed, grid.0, grid.1, 0).0,
        metrics: sim.metrics,
        trace: sim.trace.clone(),
    };
    let mut report = RunReport::new("generate", cfg);
    let cfg1 = ExperimentConfig { grids: vec![grid], runs: 1, ..exp };
    report.sweeps.push(SweepReport {
        aggregate: crate::bench::aggregate(&cfg1, std::slice::from_ref(&record)),
        runs: vec![record],
    });
    report.wall_time_s = started.elapsed().as_secs_f64();
    let rp = dir.join("report.json");
    write_json(&rp, &report)?;
    lines.push(format!("wrote {}", rp.display()));
    lines.push(format!(
        "{device} {algorithm} {}x{}: cv {:.4} efficiency {:.4}",
        grid.0, grid.1, sim.metrics.cv, sim.metrics.efficiency
    ));
    Ok(lines)
}

/// Reads a displayed hologram, propagates it and scores it on the first configured grid.
pub fn cmd_simulate(cfg: &CliConfig, hologram: &Path) -> Result<Vec<String>> {
    let started = Instant::now();
    let (device, algorithm, grid) = cfg.first()?;
    let exp = cfg.experiment(device, algorithm)?;
    let pgm = Pgm::read(hologram)?;
    if pgm.width != exp.width || pgm.height != exp.height {
        return Err(HoloError::Shape(format!(
            "hologram is {}x{} but the configuration expects {}x{}",
            pgm.width, pgm.height, exp.width, exp.height
        )));
    }
    let shown = hologram_from_pgm(&pgm, exp.device)?;
    let image = fft_forward(&shown.realize());
    let layout = exp.layout(grid.0, grid.1)?;
    let incident = incident_power(exp.width, exp.height);
    let metrics = run_metrics(&image, &layout, incident)?;
    let orders = order_powers(&image, &layout, incident).ok();

    let dir = prepare_out(cfg)?;
    let inten = intensity_path(dir, cfg.intensity_format);
    IntensityMap::from_field(&image).write(&inten, cfg.intensity_format)?;
    let mut report = RunReport::new("simulate", cfg);
    report.evaluated = Some(Evaluation {
        hologram: hologram.to_path_buf(),
        device: exp.device,
        rows: grid.0,
        cols: grid.1,
        metrics,
        orders,
    });
    report.wall_time_s = started.elapsed().as_secs_f64();
    let rp = dir.join("report.json");
    write_json(&rp, &report)?;
    let mut lines = vec![
        format!("wrote {}", inten.display()),
        format!("wrote {}", rp.display()),
        format!("cv {:.4} efficiency {:.4}", metrics.cv, metrics.efficiency),
    ];
    if let Some(o) = orders {
        lines.push(format!("orders: 0th {:.4} +1 {:.4} -1 {:.4}", o.zeroth, o.plus_one, o.minus_one));
    }
    Ok(lines)
}

pub fn bench_rows(device: DeviceKind, agg: &AggregateStats) -> Vec<BenchRow> {
    agg.points
        .iter()
        .map(|p| BenchRow {
            device,
            algorithm: agg.algorithm,
            rows: p.rows,
            cols: p.cols,
            n_traps: p.n_traps,
            median_cv: p.median_cv,
            q25_cv: p.q25_cv,
            q75_cv: p.q75_cv,
            median_eff: p.median_eff,
        })
        .collect()
}

pub fn cmd_bench(cfg: &CliConfig) -> Result<Vec<String>> {
    let started = Instant::now();
    let mut report = RunReport::new("bench", cfg);
    let mut rows = Vec::new();
    for &d in &cfg.devices {
        for &a in &cfg.algorithms {
            let exp = cfg.experiment(d, a)?;
            let (aggregate, runs) = with_pool(|| run_sweep_detailed(&exp))??;
            rows.extend(bench_rows(d, &aggregate));
            report.sweeps.push(SweepReport { aggregate, runs });
        }
    }
    let dir = prepare_out(cfg)?;
    let csv_path = dir.join("bench.csv");
    write_rows(&csv_path, &rows)?;
    report.wall_time_s = started.elapsed().as_secs_f64();
    let rp = dir.join("report.json");
    write_json(&rp, &report)?;
    let mut lines = vec![format!("wrote {}", csv_path.display()), format!("wrote {}", rp.display())];
    lines.extend(rows.iter().map(|r| {
        format!(
            "{:<4} {:<9} {:>2}x{:<2} cv {:.3} [{:.3}, {:.3}] eff {:.3}",
            r.device.to_string(),
            r.algorithm.to_string(),
            r.rows,
            r.cols,
            r.median_cv,
            r.q25_cv,
            r.q75_cv,
            r.median_eff
        )
    }));
    Ok(lines)
}

pub fn cmd_converge(cfg: &CliConfig) -> Result<Vec<String>> {
    if !cfg.algorithms.contains(&Algorithm::Mraf) {
        return Err(HoloError::Config("converge only runs the mraf algorithm".into()));
    }
    let started = Instant::now();
    let mut report = RunReport::new("converge", cfg);
    let mut rows = Vec::new();
    for &d in &cfg.devices {
        let exp = cfg.experiment(d, Algorithm::Mraf)?;
        let mut grids = Vec::new();
        for g in &cfg.grids {
            let s = with_pool(|| convergence_study(&exp, (g[0], g[1]), cfg.iterations))??;
            for i in 0..s.median_cv.len() {
                rows.push(ConvergeRow {
                    device: d,
                    rows: s.rows,
                    cols: s.cols,
                    iteration: i + 1,
                    median_cv: s.median_cv[i],
                    median_eff: s.median_eff[i],
                });
            }
            grids.push(s);
        }
        report.convergence.push(ConvergenceReport { device: exp.device, grids });
    }
    let dir = prepare_out(cfg)?;
    let csv_path = dir.join("converge.csv");
    write_rows(&csv_path, &rows)?;
    report.wall_time_s = started.elapsed().as_secs_f64();
    let rp = dir.join("report.json");
    write_json(&rp, &report)?;
    Ok(vec![format!("wrote {}", csv_path.display()), format!("wrote {}", rp.display())])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_arg_parsing() {
        assert_eq!("4x5".parse::<GridArg>().unwrap(), GridArg(4, 5));
        assert_eq!("20X20".parse::<GridArg>().unwrap(), GridArg(20, 20));
        assert!("4".parse::<GridArg>().is_err());
        assert!("ax4".parse::<GridArg>().is_err());
    }

    #[test]
    fn default_config_round_trips() {
        let cfg = CliConfig::default();
        assert!(cfg.validate().is_ok());
        assert_eq!(CliConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert_eq!(CliConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = CliConfig::from_json(r#"{"runs": 3, "rnus": 4}"#).unwrap_err();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn invalid_values_rejected() {
        for doc in [
            r#"{"grids": [[0, 3]]}"#,
            r#"{"grids": []}"#,
            r#"{"runs": 0}"#,
            r#"{"mixing": 1.5}"#,
            r#"{"levels": 1}"#,
            r#"{"devices": []}"#,
            r#"{"target_power": {"fraction": -1.0}}"#,
            r#"{"kernel": "atkinson"}"#,
        ] {
            assert!(CliConfig::from_json(doc).is_err(), "{doc}");
        }
    }

    #[test]
    fn overrides_replace_lists() {
        let mut cfg = CliConfig::default();
        let o = Overrides {
            device: Some(DeviceKind::Dmd),
            grid: vec![GridArg(3, 4)],
            runs: Some(7),
            ..Default::default()
        };
        cfg.apply(&o);
        assert_eq!(cfg.devices, vec![DeviceKind::Dmd]);
        assert_eq!(cfg.grids, vec![[3, 4]]);
        assert_eq!(cfg.runs, 7);
    }
}
