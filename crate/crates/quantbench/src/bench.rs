//! End-to-end experiment runner over the technique × precision grid.
//!
//! Each grid cell executes the fixed pipeline
//! `split → scale → quantize → cast → timed fit → score`, with every
//! transform fitted on training rows only. Timing covers the model fit
//! alone, single-threaded, as the median of an odd number of repetitions
//! after one discarded warm-up run.

use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256StarStar;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::Dataset;
use crate::matrix::{LabelVector, Matrix, Precision};
use crate::model::{self, LRConfig, LRModel};
use crate::transforms::{self, FittedTransform};

/// Quantization technique applied between scaling and casting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Technique {
    QuantileTransform,
    RoundQuantize,
    #[serde(rename = "kbins_discretize")]
    KBinsDiscretize,
    None,
}

impl Technique {
    /// Report label, mirroring the names of the reference tools.
    pub fn display_name(self) -> &'static str {
        match self {
            Technique::QuantileTransform => "QuantileTransformer",
            Technique::RoundQuantize => "Numpy.round",
            Technique::KBinsDiscretize => "KBinsDiscretizer",
            Technique::None => "None",
        }
    }
}

impl std::fmt::Display for Technique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.display_name())
    }
}

fn default_test_fraction() -> f64 {
    0.10
}
fn default_split_seed() -> u64 {
    42
}
fn default_techniques() -> Vec<Technique> {
    vec![
        Technique::QuantileTransform,
        Technique::RoundQuantize,
        Technique::KBinsDiscretize,
    ]
}
fn default_precisions() -> Vec<Precision> {
    vec![Precision::F64, Precision::F32, Precision::I32]
}
fn default_n_quantiles() -> usize {
    100
}
fn default_n_bins() -> usize {
    10
}
fn default_decimals() -> u32 {
    4
}
fn default_n_levels() -> usize {
    4096
}
fn default_timing_repetitions() -> usize {
    11
}

/// One benchmark run: dataset, split, technique grid and timing protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: PathBuf,
    pub target_column: String,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_split_seed")]
    pub split_seed: u64,
    #[serde(default = "default_techniques")]
    pub techniques: Vec<Technique>,
    #[serde(default = "default_precisions")]
    pub precisions: Vec<Precision>,
    #[serde(default = "default_n_quantiles")]
    pub n_quantiles: usize,
    #[serde(default = "default_n_bins")]
    pub n_bins: usize,
    #[serde(default = "default_decimals")]
    pub decimals: u32,
    #[serde(default = "default_n_levels")]
    pub n_levels: usize,
    #[serde(default = "default_timing_repetitions")]
    pub timing_repetitions: usize,
    #[serde(default)]
    pub lr: LRConfig,
}

impl ExperimentConfig {
    pub fn new(dataset: impl Into<PathBuf>, target_column: impl Into<String>) -> Self {
        ExperimentConfig {
            dataset: dataset.into(),
            target_column: target_column.into(),
            test_fraction: default_test_fraction(),
            split_seed: default_split_seed(),
            techniques: default_techniques(),
            precisions: default_precisions(),
            n_quantiles: default_n_quantiles(),
            n_bins: default_n_bins(),
            decimals: default_decimals(),
            n_levels: default_n_levels(),
            timing_repetitions: default_timing_repetitions(),
            lr: LRConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.timing_repetitions == 0 || self.timing_repetitions % 2 == 0 {
            return Err(Error::Config(format!(
                "timing_repetitions must be odd and >= 1, got {}",
                self.timing_repetitions
            )));
        }
        if self.n_quantiles < 2 || self.n_bins < 2 || self.n_levels < 2 {
            return Err(Error::Config(
                "n_quantiles, n_bins and n_levels must all be >= 2".into(),
            ));
        }
        self.lr.validate()
    }
}

/// One (technique, precision) cell of the results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub technique: Technique,
    pub precision: Precision,
    pub accuracy: f64,
    /// Median fit wall-time over the timing repetitions, seconds.
    pub fit_time_s: f64,
    pub fit_time_min_s: f64,
    pub fit_time_max_s: f64,
    /// `100 * (1 - fit_time / baseline_fit_time)`; `None` on the baseline.
    pub time_reduction_pct: Option<f64>,
    pub iterations_run: usize,
    pub converged: bool,
}

/// Stratified train/test partition with the selected row indices.
#[derive(Debug, Clone)]
pub struct Split {
    pub x_train: Matrix,
    pub y_train: LabelVector,
    pub x_test: Matrix,
    pub y_test: LabelVector,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Deterministic stratified split.
///
/// Seeding: `Xoshiro256StarStar::seed_from_u64(seed)`. Rows of each class
/// are shuffled (class 0 first, then class 1, one generator), the test set
/// takes the per-class head with quotas assigned by largest remainder, and
/// both partitions are re-sorted into original row order.
pub fn split(x: &Matrix, y: &LabelVector, test_fraction: f64, seed: u64) -> Result<Split> {
    if x.rows() != y.len() {
        return Err(Error::Shape(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParam(format!(
            "test_fraction must be in (0, 1), got {test_fraction}"
        )));
    }
    let n = x.rows();
    let n_test = ((test_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1));

    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, label) in y.iter().enumerate() {
        by_class[usize::from(label)].push(i);
    }
    if by_class[0].is_empty() || by_class[1].is_empty() {
        return Err(Error::Stratification(
            "both classes must be present to stratify".into(),
        ));
    }

    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    by_class[0].shuffle(&mut rng);
    by_class[1].shuffle(&mut rng);

    // Largest-remainder apportionment of the test quota across classes;
    // ties broken toward the larger class, then the lower label.
    let exact: Vec<f64> = by_class
        .iter()
        .map(|c| n_test as f64 * c.len() as f64 / n as f64)
        .collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut leftover = n_test - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = vec![0, 1];
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.partial_cmp(&fa)
            .unwrap()
            .then(by_class[b].len().cmp(&by_class[a].len()))
            .then(a.cmp(&b))
    });
    for &c in &order {
        if leftover == 0 {
            break;
        }
        if quota[c] < by_class[c].len() {
            quota[c] += 1;
            leftover -= 1;
        }
    }
    for c in 0..2 {
        if quota[c] >= by_class[c].len() {
            return Err(Error::Stratification(format!(
                "class {c} would vanish from the training split"
            )));
        }
    }

    let mut test_indices: Vec<usize> = Vec::with_capacity(n_test);
    let mut train_indices: Vec<usize> = Vec::with_capacity(n - n_test);
    for c in 0..2 {
        test_indices.extend_from_slice(&by_class[c][..quota[c]]);
        train_indices.extend_from_slice(&by_class[c][quota[c]..]);
    }
    test_indices.sort_unstable();
    train_indices.sort_unstable();

    let take = |indices: &[usize]| -> Result<(Matrix, LabelVector)> {
        let mut data = Vec::with_capacity(indices.len() * x.cols());
        let mut lab = Vec::with_capacity(indices.len());
        for &i in indices {
            for c in 0..x.cols() {
                data.push(x.get(i, c));
            }
            lab.push(y.as_slice()[i]);
        }
        Ok((
            Matrix::from_vec(indices.len(), x.cols(), data)?,
            LabelVector::new(lab)?,
        ))
    };
    let (x_train, y_train) = take(&train_indices)?;
    let (x_test, y_test) = take(&test_indices)?;
    Ok(Split {
        x_train,
        y_train,
        x_test,
        y_test,
        train_indices,
        test_indices,
    })
}

/// Monotonic time source for the timing harness; injectable so hosts
/// without `std::time::Instant` support (wasm) can supply their own.
pub trait MonotonicClock {
    /// Seconds from an arbitrary fixed origin.
    fn now_s(&self) -> f64;
}

/// Default clock backed by `std::time::Instant`.
pub struct StdClock(std::time::Instant);

impl StdClock {
    #[allow(clippy::new_without_default)]
    pub fn new() -> Self {
        StdClock(std::time::Instant::now())
    }
}

impl MonotonicClock for StdClock {
    fn now_s(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingStats {
    pub median_s: f64,
    pub min_s: f64,
    pub max_s: f64,
}

/// Run `f` once as a discarded warm-up, then `repetitions` timed runs;
/// returns the median/min/max and the last run's output.
pub fn time_fit<T>(f: impl FnMut() -> T, repetitions: usize) -> Result<(TimingStats, T)> {
    time_fit_with_clock(f, repetitions, &StdClock::new())
}

pub fn time_fit_with_clock<T>(
    mut f: impl FnMut() -> T,
    repetitions: usize,
    clock: &dyn MonotonicClock,
) -> Result<(TimingStats, T)> {
    if repetitions == 0 || repetitions % 2 == 0 {
        return Err(Error::InvalidParam(format!(
            "repetitions must be odd and >= 1, got {repetitions}"
        )));
    }
    let mut result = f(); // warm-up, discarded from timing
    let mut samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = clock.now_s();
        result = f();
        let elapsed = clock.now_s() - start;
        if elapsed <= 0.0 {
            return Err(Error::Clock(format!(
                "non-positive measured duration: {elapsed}"
            )));
        }
        samples.push(elapsed);
    }
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((
        TimingStats {
            median_s: samples[repetitions / 2],
            min_s: samples[0],
            max_s: samples[repetitions - 1],
        },
        result,
    ))
}

/// Scale the split and apply the cell's technique, fitting on training rows
/// only. Returns the transformed train/test matrices and the fitted state.
pub fn fit_transform_stage(
    cfg: &ExperimentConfig,
    technique: Technique,
    split: &Split,
) -> Result<(Matrix, Matrix, transforms::ScalerParams, Option<FittedTransform>)> {
    let scaler = transforms::fit_scaler(&split.x_train)?;
    let train = transforms::apply_scaler(&scaler, &split.x_train)?;
    let test = transforms::apply_scaler(&scaler, &split.x_test)?;
    let (train, test, fitted) = match technique {
        Technique::None => (train, test, None),
        Technique::QuantileTransform => {
            let p = transforms::fit_quantile(&train, cfg.n_quantiles)?;
            let a = transforms::apply_quantile(&p, &train)?;
            let b = transforms::apply_quantile(&p, &test)?;
            (a, b, Some(FittedTransform::Quantile(p)))
        }
        Technique::RoundQuantize => {
            let p = transforms::fit_round(&train, cfg.decimals, cfg.n_levels)?;
            let a = transforms::round_quantize(&train, cfg.decimals)?;
            let b = transforms::round_quantize(&test, cfg.decimals)?;
            (a, b, Some(FittedTransform::Round(p)))
        }
        Technique::KBinsDiscretize => {
            let p = transforms::fit_bins(&train, cfg.n_bins)?;
            let a = transforms::apply_bins(&p, &train)?;
            let b = transforms::apply_bins(&p, &test)?;
            (a, b, Some(FittedTransform::Bins(p)))
        }
    };
    Ok((train, test, scaler, fitted))
}

/// Everything produced while running one cell.
pub struct CellOutcome {
    pub result: BenchResult,
    pub model: LRModel,
}

/// Load the configured dataset and run a single (technique, precision) cell.
pub fn run_cell(
    cfg: &ExperimentConfig,
    technique: Technique,
    precision: Precision,
) -> Result<BenchResult> {
    cfg.validate()?;
    let data = crate::io::load_csv(&cfg.dataset, &cfg.target_column)?;
    Ok(run_cell_on(cfg, &data, technique, precision, &StdClock::new())?
        .result)
}

/// Run one cell on preloaded data with an injected clock.
pub fn run_cell_on(
    cfg: &ExperimentConfig,
    data: &Dataset,
    technique: Technique,
    precision: Precision,
    clock: &dyn MonotonicClock,
) -> Result<CellOutcome> {
    let annotate =
        |e: Error| e.in_cell(technique.display_name(), precision.name());

    let parts = split(&data.x, &data.y, cfg.test_fraction, cfg.split_seed).map_err(annotate)?;
    let (train, test, _, _) = fit_transform_stage(cfg, technique, &parts).map_err(annotate)?;
    let train = train.cast(precision).map_err(annotate)?;
    let test = test.cast(precision).map_err(annotate)?;

    let mut fit_err = None;
    let (timing, model) = time_fit_with_clock(
        || match model::fit(&train, &parts.y_train, &cfg.lr) {
            Ok(m) => Some(m),
            Err(e) => {
                fit_err = Some(e);
                None
            }
        },
        cfg.timing_repetitions,
        clock,
    )
    .map_err(annotate)?;
    let model = match (model, fit_err) {
        (Some(m), _) => m,
        (None, Some(e)) => return Err(annotate(e)),
        (None, None) => unreachable!(),
    };

    let pred = model::predict(&model, &test).map_err(annotate)?;
    let accuracy = model::accuracy(&pred, &parts.y_test).map_err(annotate)?;
    Ok(CellOutcome {
        result: BenchResult {
            technique,
            precision,
            accuracy,
            fit_time_s: timing.median_s,
            fit_time_min_s: timing.min_s,
            fit_time_max_s: timing.max_s,
            time_reduction_pct: None,
            iterations_run: model.iterations_run,
            converged: model.converged,
        },
        model,
    })
}

/// A cell that failed while running the grid with partial output allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub technique: Technique,
    pub precision: Precision,
    pub message: String,
}

/// Grid results in table order, plus any failures when partial output is on.
pub struct GridOutcome {
    pub results: Vec<BenchResult>,
    pub failures: Vec<CellFailure>,
}

/// Run the baseline first, then every (technique, precision ∈ {F32, I32})
/// cell in technique-major order, strictly sequentially on one thread.
///
/// Any cell failure aborts with the cell named unless `allow_partial`.
pub fn run_grid(cfg: &ExperimentConfig, allow_partial: bool) -> Result<GridOutcome> {
    cfg.validate()?;
    let data = crate::io::load_csv(&cfg.dataset, &cfg.target_column)?;
    run_grid_on(cfg, &data, allow_partial, &StdClock::new())
}

pub fn run_grid_on(
    cfg: &ExperimentConfig,
    data: &Dataset,
    allow_partial: bool,
    clock: &dyn MonotonicClock,
) -> Result<GridOutcome> {
    let baseline = run_cell_on(cfg, data, Technique::None, Precision::F64, clock)?.result;
    let baseline_time = baseline.fit_time_s;

    let mut results = vec![baseline];
    let mut failures = Vec::new();
    for &technique in cfg.techniques.iter().filter(|&&t| t != Technique::None) {
        for &precision in cfg.precisions.iter().filter(|&&p| p != Precision::F64) {
            match run_cell_on(cfg, data, technique, precision, clock) {
                Ok(cell) => {
                    let mut r = cell.result;
                    r.time_reduction_pct = Some(time_reduction_pct(baseline_time, r.fit_time_s));
                    results.push(r);
                }
                Err(e) if allow_partial => failures.push(CellFailure {
                    technique,
                    precision,
                    message: e.to_string(),
                }),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(GridOutcome { results, failures })
}

/// `100 * (1 - fit_time / baseline_fit_time)`.
pub fn time_reduction_pct(baseline_s: f64, fit_time_s: f64) -> f64 {
    100.0 * (1.0 - fit_time_s / baseline_s)
}

/// One point of an accuracy-vs-quantiles sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n_quantiles: usize,
    pub precision: Precision,
    pub accuracy: f64,
}

/// Re-run the quantile-transform cell across a grid of `n_quantiles`, one
/// series per configured precision.
pub fn run_quantile_sweep(cfg: &ExperimentConfig, quantiles: &[usize]) -> Result<Vec<SweepPoint>> {
    cfg.validate()?;
    if quantiles.is_empty() {
        return Err(Error::InvalidParam("empty sweep grid".into()));
    }
    let data = crate::io::load_csv(&cfg.dataset, &cfg.target_column)?;
    let clock = StdClock::new();
    let mut points = Vec::new();
    for &n_quantiles in quantiles {
        let cell_cfg = ExperimentConfig {
            n_quantiles,
            timing_repetitions: 1,
            ..cfg.clone()
        };
        for &precision in &cfg.precisions {
            let cell = run_cell_on(
                &cell_cfg,
                &data,
                Technique::QuantileTransform,
                precision,
                &clock,
            )?;
            points.push(SweepPoint {
                n_quantiles,
                precision,
                accuracy: cell.result.accuracy,
            });
        }
    }
    Ok(points)
}

/// Seeded synthetic binary classification data: standard-normal features
/// with labels from a noisy random linear rule. Used by the timing smoke
/// checks and the browser demo.
pub fn synthetic_dataset(rows: usize, cols: usize, seed: u64) -> (Matrix, LabelVector) {
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = Xoshiro256StarStar::seed_from_u64(seed);
    let normal = StandardNormal;
    let coef: Vec<f64> = (0..cols)
        .map(|_| <StandardNormal as Distribution<f64>>::sample(&normal, &mut rng))
        .collect();
    let scale = 3.0 / (cols as f64).sqrt();
    let mut data = Vec::with_capacity(rows * cols);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let mut z = 0.0;
        for c in 0..cols {
            let v: f64 = normal.sample(&mut rng);
            z += coef[c] * v * scale;
            data.push(v);
        }
        let noise: f64 = normal.sample(&mut rng);
        labels.push(u8::from(z + noise > 0.0));
    }
    (
        Matrix::from_vec(rows, cols, data).expect("synthetic data is well-formed"),
        LabelVector::new(labels).expect("synthetic labels are binary"),
    )
}
