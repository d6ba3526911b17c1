//! Seeded Monte-Carlo comparison of the hologram algorithms.
//!
//! Every run draws fresh random trap phases from a seed derived from
//! `(base_seed, rows, cols, run_index)` and nothing else, so a sweep gives
//! bit-identical results regardless of thread count, execution order or
//! which other grid sizes it contains.
//!
//! Quantiles use the nearest-rank rule: the `q` quantile of `n` sorted
//! values is element `max(1, ceil(q*n))` (1-based).

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HoloError, Result};
use crate::field::{build_target, fft_forward, fft_inverse, ComplexField, Pixel, RngSeed, TrapLayout};
use crate::metrics::{incident_power, run_metrics, RunMetrics};
use crate::mraf::{mraf_run, ConvergenceTrace, MrafConfig, SignalRegion, TargetPower};
use crate::quantize::{
    dither_dmd, dither_pslm, round_dmd, round_pslm, DeviceModel, DisplayedHologram, KernelChoice, ScanOrder,
};

pub const DEFAULT_SIZE: usize = 512;
pub const DEFAULT_SPACING: usize = 5;
pub const DEFAULT_RUNS: usize = 50;
pub const FULL_RUNS: usize = 1250;

/// Environment variable bounding the worker count of sweeps.
pub const THREADS_ENV: &str = "HOLO_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rounding,
    Dithering,
    Mraf,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Rounding, Algorithm::Dithering, Algorithm::Mraf];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Rounding => "rounding",
            Algorithm::Dithering => "dithering",
            Algorithm::Mraf => "mraf",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = HoloError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rounding" => Ok(Algorithm::Rounding),
            "dithering" => Ok(Algorithm::Dithering),
            "mraf" => Ok(Algorithm::Mraf),
            other => Err(HoloError::Config(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Offset of the trap grid's centroid from the optical axis, in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShift {
    pub dx: i64,
    pub dy: i64,
}

impl GridShift {
    /// `num/den` of the array in both axes.
    pub fn fraction(width: usize, height: usize, num: usize, den: usize) -> Self {
        GridShift { dx: (width * num / den) as i64, dy: (height * num / den) as i64 }
    }

    /// Diagonal offset of 3/16 of the array for a phase modulator and 7/32
    /// for a DMD. On a DMD that keeps the default 200 px signal window of a
    /// 512 px array, centered on the grid, clear of the 0th order.
    pub fn default_for(device: DeviceModel, width: usize, height: usize) -> Self {
        match device {
            DeviceModel::Dmd => GridShift::fraction(width, height, 7, 32),
            DeviceModel::Pslm { .. } => GridShift::fraction(width, height, 3, 16),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub device: DeviceModel,
    pub algorithm: Algorithm,
    /// `(rows, cols)` of each trap grid.
    pub grids: Vec<(usize, usize)>,
    pub runs: usize,
    pub base_seed: u64,
    pub width: usize,
    pub height: usize,
    pub spacing: usize,
    /// Grid centroid relative to the optical axis; `None` picks the device default.
    pub shift: Option<GridShift>,
    pub kernel: KernelChoice,
    pub scan: ScanOrder,
    pub mixing: f64,
    pub iterations: usize,
    pub signal: SignalRegion,
    pub target_power: TargetPower,
}

impl ExperimentConfig {
    pub fn new(device: DeviceModel, algorithm: Algorithm, grids: Vec<(usize, usize)>) -> Self {
        let mraf = MrafConfig::default();
        ExperimentConfig {
            device,
            algorithm,
            grids,
            runs: DEFAULT_RUNS,
            base_seed: 0,
            width: DEFAULT_SIZE,
            height: DEFAULT_SIZE,
            spacing: DEFAULT_SPACING,
            shift: None,
            kernel: KernelChoice::default(),
            scan: ScanOrder::default(),
            mixing: mraf.mixing,
            iterations: mraf.iterations,
            signal: mraf.signal,
            target_power: mraf.target_power,
        }
    }

    pub fn with_runs(mut self, runs: usize) -> Self {
        self.runs = runs;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.base_seed = seed;
        self
    }

    pub fn mraf(&self) -> MrafConfig {
        MrafConfig {
            mixing: self.mixing,
            iterations: self.iterations,
            signal: self.signal.clone(),
            device: self.device,
            target_power: self.target_power,
        }
    }

    pub fn grid_shift(&self) -> GridShift {
        self.shift.unwrap_or_else(|| GridShift::default_for(self.device, self.width, self.height))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(HoloError::Config("runs per point must be at least 1".into()));
        }
        if self.grids.is_empty() {
            return Err(HoloError::Config("at least one grid size is required".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(HoloError::Config("array size must be positive".into()));
        }
        self.device.validate()?;
        if self.algorithm == Algorithm::Mraf {
            self.mraf().validate()?;
        }
        for &(rows, cols) in &self.grids {
            let layout = self.layout(rows, cols)?;
            layout.check_fits(self.width, self.height)?;
            if self.algorithm == Algorithm::Mraf {
                self.signal.resolve(self.width, self.height, &layout)?;
            }
        }
        Ok(())
    }

    /// Trap grid for `rows x cols` at this experiment's spacing and shift.
    pub fn layout(&self, rows: usize, cols: usize) -> Result<TrapLayout> {
        if rows == 0 || cols == 0 {
            return Err(HoloError::Config(format!("trap grid must be at least 1x1, got {rows}x{cols}")));
        }
        let shift = self.grid_shift();
        let cx = (self.width / 2) as i64 + shift.dx;
        let cy = (self.height / 2) as i64 + shift.dy;
        if cx < 0 || cy < 0 {
            return Err(HoloError::Bounds(format!("grid center ({cx}, {cy}) is outside the array")));
        }
        let layout = TrapLayout::centered_on(rows, cols, self.spacing, Pixel::new(cx as usize, cy as usize))?;
        layout.check_fits(self.width, self.height)?;
        Ok(layout)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one run: SplitMix64 folded over the base seed, the grid shape
/// `(rows << 32) | cols` and the run index.
pub fn run_seed(base_seed: u64, rows: usize, cols: usize, run_index: usize) -> RngSeed {
    let grid = ((rows as u64) << 32) | (cols as u64 & 0xFFFF_FFFF);
    RngSeed(splitmix64(splitmix64(splitmix64(base_seed) ^ grid) ^ run_index as u64))
}

/// Result of one simulated hologram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rows: usize,
    pub cols: usize,
    pub run_index: usize,
    pub seed: u64,
    pub metrics: RunMetrics,
    /// Per-iteration metrics, MRAF only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<ConvergenceTrace>,
}

/// Everything one run produces, for callers that want more than metrics.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub layout: TrapLayout,
    pub target: ComplexField,
    pub displayed: DisplayedHologram,
    pub image: ComplexField,
    pub metrics: RunMetrics,
    pub trace: Option<ConvergenceTrace>,
}

/// Applies `algorithm` to a target image and returns what the device shows.
pub fn compute_hologram(
    target: &ComplexField,
    layout: &TrapLayout,
    cfg: &ExperimentConfig,
) -> Result<(DisplayedHologram, Option<ConvergenceTrace>)> {
    let kernel = cfg.kernel.kernel();
    match cfg.algorithm {
        Algorithm::Rounding => {
            let h = fft_inverse(target);
            let d = match cfg.device {
                DeviceModel::Dmd => round_dmd(&h),
                DeviceModel::Pslm { .. } => round_pslm(&h, cfg.device)?,
            };
            Ok((d, None))
        }
        Algorithm::Dithering => {
            let h = fft_inverse(target);
            let d = match cfg.device {
                DeviceModel::Dmd => dither_dmd(&h, &kernel, cfg.scan)?,
                DeviceModel::Pslm { .. } => dither_pslm(&h, cfg.device, &kernel, cfg.scan)?,
            };
            Ok((d, None))
        }
        Algorithm::Mraf => {
            let (d, trace) = mraf_run(target, layout, &cfg.mraf())?;
            Ok((d, Some(trace)))
        }
    }
}

pub fn simulate(cfg: &ExperimentConfig, grid: (usize, usize), run_index: usize) -> Result<Simulation> {
    let layout = cfg.layout(grid.0, grid.1)?;
    let seed = run_seed(cfg.base_seed, grid.0, grid.1, run_index);
    let target = build_target(&layout, cfg.width, cfg.height, seed)?;
    let (displayed, trace) = compute_hologram(&target, &layout, cfg)?;
    let image = fft_forward(&displayed.realize());
    let metrics = run_metrics(&image, &layout, incident_power(cfg.width, cfg.height))?;
    Ok(Simulation { layout, target, displayed, image, metrics, trace })
}

pub fn run_once(cfg: &ExperimentConfig, grid: (usize, usize), run_index: usize) -> Result<RunMetrics> {
    Ok(simulate(cfg, grid, run_index)?.metrics)
}

fn run_record(cfg: &ExperimentConfig, grid: (usize, usize), run_index: usize) -> Result<RunRecord> {
    let sim = simulate(cfg, grid, run_index)?;
    if sim.metrics.cv.is_nan() {
        return Err(HoloError::UndefinedMetric(format!(
            "run {run_index} of the {}x{} grid leaves every trap dark",
            grid.0, grid.1
        )));
    }
    Ok(RunRecord {
        rows: grid.0,
        cols: grid.1,
        run_index,
        seed: run_seed(cfg.base_seed, grid.0, grid.1, run_index).0,
        metrics: sim.metrics,
        trace: sim.trace,
    })
}

/// Nearest-rank quantile of already sorted data.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

/// Median and quartiles of `values` under the nearest-rank rule.
pub fn quartiles(values: &[f64]) -> (f64, f64, f64) {
    let s = sorted(values.to_vec());
    (nearest_rank(&s, 0.25), nearest_rank(&s, 0.5), nearest_rank(&s, 0.75))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridStats {
    pub rows: usize,
    pub cols: usize,
    pub n_traps: usize,
    pub runs: usize,
    pub median_cv: f64,
    pub q25_cv: f64,
    pub q75_cv: f64,
    pub median_eff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub device: DeviceModel,
    pub algorithm: Algorithm,
    pub points: Vec<GridStats>,
}

impl AggregateStats {
    pub fn point(&self, rows: usize, cols: usize) -> Option<&GridStats> {
        self.points.iter().find(|p| p.rows == rows && p.cols == cols)
    }
}

/// Runs `f` on a pool bounded by `HOLO_THREADS` when set.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .map_err(|_| HoloError::Config(format!("{THREADS_ENV} must be a positive integer, got '{v}'")))?;
            with_threads(n.max(1), f)
        }
        Err(_) => Ok(f()),
    }
}

pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| HoloError::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// Every run of every grid, in `(grid, run_index)` order.
pub fn run_all(cfg: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    let jobs: Vec<((usize, usize), usize)> =
        cfg.grids.iter().flat_map(|&g| (0..cfg.runs).map(move |r| (g, r))).collect();
    jobs.par_iter().map(|&(g, r)| run_record(cfg, g, r)).collect()
}

pub fn aggregate(cfg: &ExperimentConfig, records: &[RunRecord]) -> AggregateStats {
    let points = cfg
        .grids
        .iter()
        .map(|&(rows, cols)| {
            let mine: Vec<&RunRecord> = records.iter().filter(|r| r.rows == rows && r.cols == cols).collect();
            let cvs: Vec<f64> = mine.iter().map(|r| r.metrics.cv).collect();
            let effs: Vec<f64> = mine.iter().map(|r| r.metrics.efficiency).collect();
            let (q25_cv, median_cv, q75_cv) = quartiles(&cvs);
            let (_, median_eff, _) = quartiles(&effs);
            GridStats { rows, cols, n_traps: rows * cols, runs: mine.len(), median_cv, q25_cv, q75_cv, median_eff }
        })
        .collect();
    AggregateStats { device: cfg.device, algorithm: cfg.algorithm, points }
}

pub fn run_sweep(cfg: &ExperimentConfig) -> Result<AggregateStats> {
    Ok(run_sweep_detailed(cfg)?.0)
}

pub fn run_sweep_detailed(cfg: &ExperimentConfig) -> Result<(AggregateStats, Vec<RunRecord>)> {
    let records = run_all(cfg)?;
    Ok((aggregate(cfg, &records), records))
}

/// Per-iteration medians across seeds for one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSummary {
    pub rows: usize,
    pub cols: usize,
    pub median_cv: Vec<f64>,
    pub median_eff: Vec<f64>,
}

pub fn convergence_study(
    cfg: &ExperimentConfig,
    grid: (usize, usize),
    iterations_max: usize,
) -> Result<ConvergenceSummary> {
    if cfg.algorithm != Algorithm::Mraf {
        return Err(HoloError::Config("convergence studies need the mraf algorithm".into()));
    }
    let cfg = ExperimentConfig { iterations: iterations_max, grids: vec![grid], ..cfg.clone() };
    let records = run_all(&cfg)?;
    let traces: Vec<ConvergenceTrace> = records.into_iter().map(|r| r.trace.expect("mraf runs carry a trace")).collect();
    let per_iter = |pick: fn(&ConvergenceTrace) -> &Vec<f64>| -> Vec<f64> {
        (0..iterations_max)
            .map(|i| quartiles(&traces.iter().map(|t| pick(t)[i]).collect::<Vec<_>>()).1)
            .collect()
    };
    Ok(ConvergenceSummary {
        rows: grid.0,
        cols: grid.1,
        median_cv: per_iter(|t| &t.cv),
        median_eff: per_iter(|t| &t.efficiency),
    })
}
