//! Reproducible studies: moment identity, concentration decay, nets + RQIP.
//!
//! Cell `i` of a study draws from `Stream::new(seed, study).child(i)`, so any
//! single cell can be re-run with [`cell_stream`] and the matching `*_cell`
//! function. Numeric output does not depend on the worker count.

use crate::concentration::{
    combined_bound, fit_decay_exponent, fit_envelope_constant, smallest_tail_regime_m, sorted_magnitudes,
    ConcentrationParams, DecayFit, DeviationSeries, DEFAULT_C0, DEFAULT_C_CON, DEFAULT_C_PRIME, MIN_TRIALS,
};
use crate::error::{open_interval, Error, Result};
use crate::geometry::{
    build_net, covering_bound, sample_sparse_target, verify_net, NetTarget, SparseVector,
};
use crate::rqip::{
    expected_moment, generate_matrix, moment_stat, rqip_check, sample_complexity, ComplexityInputs,
    ComplexityMode, RqipConfig, Strategy,
};
use crate::stable::{check_moment_order, stable_abs_moment_constant, StableLaw};
use crate::stream::Stream;
use crate::svg::{LogLogPlot, Series};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "RQIP_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Moments,
    Concentration,
    /// `Nets` and `Rqip` both run the combined net + RQIP study.
    Nets,
    Rqip,
}

impl Study {
    /// Stream label and artifact stem.
    pub fn name(&self) -> &'static str {
        match self {
            Study::Moments => "moments",
            Study::Concentration => "concentration",
            Study::Nets | Study::Rqip => "nets_rqip",
        }
    }
}

impl FromStr for Study {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "moments" => Ok(Study::Moments),
            "concentration" => Ok(Study::Concentration),
            "nets" | "nets_rqip" => Ok(Study::Nets),
            "rqip" => Ok(Study::Rqip),
            _ => Err(Error::domain(format!(
                "unknown study '{s}' (expected moments, concentration, nets or rqip)"
            ))),
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Test vector of a moment cell.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TestVector {
    /// `e_1`.
    Basis,
    /// Random unit-α-norm vector with `k` nonzeros, drawn from the cell stream.
    RandomSparse { k: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentCell {
    pub alpha: f64,
    pub p: f64,
    pub gamma: f64,
    #[serde(rename = "M")]
    pub rows: usize,
    #[serde(rename = "N")]
    pub dim: usize,
    pub vector: TestVector,
    /// Multiplies the test vector.
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationCell {
    pub alpha: f64,
    pub p: f64,
    pub gamma: f64,
    pub c0: f64,
    pub c_prime: f64,
    pub epsilon: f64,
    #[serde(rename = "M_grid")]
    pub ms: Vec<usize>,
    pub trials: usize,
    /// Draws used by the tail-regime diagnostic.
    pub tail_samples: usize,
}

impl ConcentrationCell {
    /// Cell with `ε = fraction · C_{α,p} γ^p` and default constants.
    pub fn relative(alpha: f64, p: f64, gamma: f64, fraction: f64, ms: Vec<usize>, trials: usize) -> Result<Self> {
        let mean = StableLaw::new(alpha, gamma)?.abs_moment(p)?;
        Ok(Self {
            alpha,
            p,
            gamma,
            c0: DEFAULT_C0,
            c_prime: DEFAULT_C_PRIME,
            epsilon: fraction * mean,
            ms,
            trials,
            tail_samples: 1_000_000,
        })
    }

    fn params(&self) -> Result<ConcentrationParams> {
        ConcentrationParams::new(StableLaw::new(self.alpha, self.gamma)?, self.p)?
            .with_c0(self.c0)?
            .with_c_prime(self.c_prime)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetCell {
    pub alpha: f64,
    pub k: usize,
    #[serde(rename = "N")]
    pub dim: usize,
    pub epsilon: f64,
    pub budget: usize,
    pub verify_trials: usize,
    /// Rows of the matrix handed to the RQIP check.
    #[serde(rename = "M")]
    pub rows: usize,
    pub gamma: f64,
    pub p: f64,
    pub delta: f64,
    pub eta: f64,
    pub c0: f64,
    pub c_con: f64,
}

impl NetCell {
    /// Defaults: budget 5000, 10^4 coverage samples, γ = 1, p = 0.2, δ = η = 0.5.
    pub fn new(alpha: f64, k: usize, dim: usize, epsilon: f64, rows: usize) -> Self {
        Self {
            alpha,
            k,
            dim,
            epsilon,
            budget: 5000,
            verify_trials: 10_000,
            rows,
            gamma: 1.0,
            p: 0.2,
            delta: 0.5,
            eta: 0.5,
            c0: DEFAULT_C0,
            c_con: DEFAULT_C_CON,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "cells")]
pub enum StudyGrid {
    Moments(Vec<MomentCell>),
    Concentration(Vec<ConcentrationCell>),
    NetsRqip(Vec<NetCell>),
}

impl StudyGrid {
    pub fn len(&self) -> usize {
        match self {
            StudyGrid::Moments(c) => c.len(),
            StudyGrid::Concentration(c) => c.len(),
            StudyGrid::NetsRqip(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub study: Study,
    pub master_seed: u64,
    pub grid: StudyGrid,
    pub output_dir: PathBuf,
}

const DEFAULT_M_GRID: [usize; 7] = [1 << 8, 1 << 9, 1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14];

impl StudyConfig {
    /// The default grid of each study.
    pub fn default_for(study: Study, master_seed: u64, output_dir: impl Into<PathBuf>) -> Self {
        let grid = match study {
            Study::Moments => {
                let mut cells = Vec::new();
                for (alpha, p, gamma) in [(0.5, 0.2, 1.0), (0.7, 0.3, 2.0)] {
                    for vector in [TestVector::Basis, TestVector::RandomSparse { k: 3 }] {
                        cells.push(MomentCell {
                            alpha,
                            p,
                            gamma,
                            rows: 1_000_000,
                            dim: 5,
                            vector,
                            scale: 1.0,
                        });
                    }
                }
                StudyGrid::Moments(cells)
            }
            Study::Concentration => StudyGrid::Concentration(
                [(0.5, 0.25), (0.7, 0.3)]
                    .iter()
                    .map(|&(a, p)| {
                        ConcentrationCell::relative(a, p, 1.0, 0.2, DEFAULT_M_GRID.to_vec(), 2000)
                            .expect("default concentration cell is valid")
                    })
                    .collect(),
            ),
            Study::Nets | Study::Rqip => StudyGrid::NetsRqip(vec![
                NetCell::new(0.5, 1, 8, 0.25, 100_000),
                NetCell::new(0.5, 2, 5, 0.25, 20_000),
            ]),
        };
        Self {
            study,
            master_seed,
            grid,
            output_dir: output_dir.into(),
        }
    }

    /// Rejects empty grids, grids of the wrong kind and out-of-domain cells.
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::domain(format!("the {} grid is empty", self.study)));
        }
        let ctx = |i: usize| move |e: Error| e.in_context(format!("cell {i}"));
        match (&self.study, &self.grid) {
            (Study::Moments, StudyGrid::Moments(cells)) => {
                for (i, c) in cells.iter().enumerate() {
                    validate_moment_cell(c).map_err(ctx(i))?;
                }
            }
            (Study::Concentration, StudyGrid::Concentration(cells)) => {
                for (i, c) in cells.iter().enumerate() {
                    validate_concentration_cell(c).map_err(ctx(i))?;
                }
            }
            (Study::Nets | Study::Rqip, StudyGrid::NetsRqip(cells)) => {
                for (i, c) in cells.iter().enumerate() {
                    validate_net_cell(c).map_err(ctx(i))?;
                }
            }
            _ => {
                return Err(Error::domain(format!(
                    "grid kind does not match the {} study",
                    self.study
                )))
            }
        }
        Ok(())
    }
}

fn validate_moment_cell(c: &MomentCell) -> Result<()> {
    StableLaw::new(c.alpha, c.gamma)?;
    check_moment_order(c.alpha, c.p)?;
    if c.rows == 0 || c.dim == 0 {
        return Err(Error::domain("M and N must be ≥ 1"));
    }
    if let TestVector::RandomSparse { k } = c.vector {
        if k == 0 || k > c.dim {
            return Err(Error::domain(format!("sparsity k = {k} must satisfy 1 ≤ k ≤ N = {}", c.dim)));
        }
    }
    if !(c.scale.is_finite() && c.scale != 0.0) {
        return Err(Error::domain(format!("scale = {} must be finite and nonzero", c.scale)));
    }
    Ok(())
}

fn validate_concentration_cell(c: &ConcentrationCell) -> Result<()> {
    c.params()?;
    if !(c.epsilon > 0.0 && c.epsilon.is_finite()) {
        return Err(Error::domain(format!("epsilon = {} must be > 0", c.epsilon)));
    }
    if c.ms.is_empty() || c.ms[0] == 0 || c.ms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("M grid must be non-empty, positive and strictly increasing"));
    }
    if c.trials < MIN_TRIALS {
        return Err(Error::domain(format!("trials = {} is below the minimum of {MIN_TRIALS}", c.trials)));
    }
    if c.tail_samples == 0 {
        return Err(Error::domain("tail_samples must be ≥ 1"));
    }
    Ok(())
}

fn validate_net_cell(c: &NetCell) -> Result<()> {
    let law = StableLaw::new(c.alpha, c.gamma)?;
    covering_bound(c.alpha, c.epsilon, c.k, c.dim)?;
    if c.budget == 0 || c.verify_trials == 0 || c.rows == 0 {
        return Err(Error::domain("budget, verify_trials and M must be ≥ 1"));
    }
    RqipConfig::new(&law, c.k, c.delta, c.p, c.dim)?;
    open_interval("eta", c.eta, 0.0, 1.0)?;
    complexity_inputs(c).validate()
}

fn complexity_inputs(c: &NetCell) -> ComplexityInputs {
    ComplexityInputs {
        dim: c.dim,
        k: c.k,
        delta: c.delta,
        eta: c.eta,
        p: c.p,
        alpha: c.alpha,
        c0: c.c0,
        c_con: c.c_con,
    }
}

/// One CSV field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Measure {
    Real(f64),
    Count(u64),
    Flag(bool),
}

impl Measure {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Measure::Real(x) => x,
            Measure::Count(n) => n as f64,
            Measure::Flag(b) => b as u8 as f64,
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Measure::Real(x) => write!(f, "{x}"),
            Measure::Count(n) => write!(f, "{n}"),
            Measure::Flag(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvironmentStamp {
    pub version: String,
    pub master_seed: u64,
    pub timestamp: String,
    pub workers: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyResult {
    pub study: Study,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Measure>>,
    /// Per CSV row: the cell it came from.
    pub row_cells: Vec<usize>,
    /// Per cell: inputs, stream label and cell-level results.
    pub cells: Vec<Value>,
    pub summary: Value,
    pub stamp: EnvironmentStamp,
    pub plots: Vec<(String, LogLogPlot)>,
}

impl StudyResult {
    /// Values of one column, as reals.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| *c == name)?;
        Some(self.rows.iter().map(|r| r[i].as_f64()).collect())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|m| m.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn manifest(&self) -> Value {
        json!({
            "study": self.study,
            "csv": format!("{}.csv", self.study.name()),
            "columns": self.columns,
            "environment": self.stamp,
            "rows": self.row_cells.iter().map(|c| json!({"cell": c})).collect::<Vec<_>>(),
            "cells": self.cells,
            "summary": self.summary,
        })
    }

    /// Writes `<study>.csv`, `<study>_manifest.json` and any plots into `dir`,
    /// creating it if needed. Returns the written paths.
    pub fn write_artifacts(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let stem = self.study.name();
        let csv_path = dir.join(format!("{stem}.csv"));
        std::fs::write(&csv_path, self.to_csv_string()?)?;
        let manifest_path = dir.join(format!("{stem}_manifest.json"));
        std::fs::write(&manifest_path, serde_json::to_string_pretty(&self.manifest())?)?;
        let mut written = vec![csv_path, manifest_path];
        for (name, plot) in &self.plots {
            let path = dir.join(name);
            plot.write(&path)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Stream of cell `index` of `study`.
pub fn cell_stream(master_seed: u64, study: Study, index: usize) -> Stream {
    Stream::new(master_seed, study.name()).child(index)
}

/// Worker count from `RQIP_THREADS`, else the hardware parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(Error::domain(format!("{THREADS_ENV} = '{v}' must be a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Runs the configured study on a pool of `workers` threads.
pub fn run_study_with_workers(cfg: &StudyConfig, workers: usize) -> Result<StudyResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::capacity(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_study(cfg))
}

/// Runs the configured study in the current pool.
pub fn run_study(cfg: &StudyConfig) -> Result<StudyResult> {
    match cfg.study {
        Study::Moments => run_moment_study(cfg),
        Study::Concentration => run_concentration_study(cfg),
        Study::Nets | Study::Rqip => run_net_and_rqip_study(cfg),
    }
}

fn stamp(cfg: &StudyConfig) -> EnvironmentStamp {
    EnvironmentStamp {
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: cfg.master_seed,
        timestamp: chrono::Utc::now().to_rfc3339(),
        workers: rayon::current_num_threads(),
    }
}

/// Runs `f` on every cell in the pool, keeping grid order and tagging errors
/// with the cell.
fn map_cells<C: Sync + Serialize, T: Send>(
    cfg: &StudyConfig,
    cells: &[C],
    f: impl Fn(&C, &Stream) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    cells
        .par_iter()
        .enumerate()
        .map(|(i, c)| {
            f(c, &cell_stream(cfg.master_seed, cfg.study, i)).map_err(|e| {
                let coords = serde_json::to_string(c).unwrap_or_default();
                e.in_context(format!("{} cell {i} {coords}", cfg.study))
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentOutcome {
    pub empirical: f64,
    pub closed_form: f64,
    pub rel_err: f64,
}

/// The test vector of a moment cell.
pub fn moment_test_vector(cell: &MomentCell, stream: &Stream) -> Result<SparseVector> {
    let x = match cell.vector {
        TestVector::Basis => SparseVector::basis(cell.dim, 0)?,
        TestVector::RandomSparse { k } => sample_sparse_target(
            cell.alpha,
            k,
            cell.dim,
            NetTarget::UnitSphere,
            &mut stream.child("vector").rng(),
        ),
    };
    Ok(x.scaled(cell.scale))
}

/// Draws the cell's matrix and compares `moment_stat` with `C_{α,p}(γ‖x‖_α)^p`.
pub fn moment_cell(cell: &MomentCell, stream: &Stream) -> Result<MomentOutcome> {
    validate_moment_cell(cell)?;
    let law = StableLaw::new(cell.alpha, cell.gamma)?;
    let x = moment_test_vector(cell, stream)?;
    let matrix = generate_matrix(law, cell.rows, cell.dim, &stream.child("matrix"))?;
    let empirical = moment_stat(&matrix, &x, cell.p)?;
    let closed_form = expected_moment(&law, &x, cell.p)?;
    Ok(MomentOutcome {
        empirical,
        closed_form,
        rel_err: (empirical / closed_form - 1.0).abs(),
    })
}

pub fn run_moment_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let StudyGrid::Moments(cells) = &cfg.grid else {
        return Err(Error::domain("moment study needs a moments grid"));
    };
    let outcomes = map_cells(cfg, cells, moment_cell)?;
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    for (i, (c, o)) in cells.iter().zip(&outcomes).enumerate() {
        rows.push(vec![
            Measure::Real(c.alpha),
            Measure::Real(c.p),
            Measure::Real(c.gamma),
            Measure::Count(c.rows as u64),
            Measure::Real(o.empirical),
            Measure::Real(o.closed_form),
            Measure::Real(o.rel_err),
        ]);
        let x = moment_test_vector(c, &cell_stream(cfg.master_seed, cfg.study, i))?;
        meta.push(json!({
            "cell": i,
            "stream": cell_stream(cfg.master_seed, cfg.study, i).label(),
            "inputs": c,
            "x": {"support": x.support(), "values": x.support().iter().map(|&j| x.entries()[j]).collect::<Vec<_>>()},
            "moment_constant": stable_abs_moment_constant(c.alpha, c.p)?,
        }));
    }
    let max_rel = outcomes.iter().map(|o| o.rel_err).fold(0.0, f64::max);
    Ok(StudyResult {
        study: cfg.study,
        columns: vec!["alpha", "p", "gamma", "M", "empirical", "closed_form", "rel_err"],
        row_cells: (0..rows.len()).collect(),
        rows,
        cells: meta,
        summary: json!({"max_rel_err": max_rel}),
        stamp: stamp(cfg),
        plots: Vec::new(),
    })
}

/// Everything computed for one concentration cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConcentrationOutcome {
    pub series: DeviationSeries,
    pub bounds: Vec<crate::concentration::CombinedBound>,
    /// `None` when fewer than four rows have `p̂ > 0`.
    pub fit: Option<DecayFit>,
    pub fit_error: Option<String>,
    /// Theoretical decay exponent `c_con`.
    pub c_con: f64,
    /// Smallest `C_con` whose envelope dominates the bound on this grid.
    #[serde(rename = "C_con_fitted")]
    pub c_con_fitted: f64,
    /// Smallest grid `M` passing the tail-regime diagnostic.
    #[serde(rename = "M0")]
    pub m0: Option<usize>,
    /// Rows where the bound is ≤ 1, so the comparison is informative.
    pub bound_cells_checked: usize,
    pub bound_violations: usize,
}

pub fn concentration_cell(cell: &ConcentrationCell, stream: &Stream) -> Result<ConcentrationOutcome> {
    validate_concentration_cell(cell)?;
    let params = cell.params()?;
    let series = DeviationSeries::estimate(&params, cell.epsilon, &cell.ms, cell.trials, &stream.child("trials"))?;
    let bounds = cell
        .ms
        .iter()
        .map(|&m| combined_bound(&params, cell.epsilon, m))
        .collect::<Result<Vec<_>>>()?;
    let (fit, fit_error) = match fit_decay_exponent(&series) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let c_con_fitted = fit_envelope_constant(&params, cell.epsilon, &cell.ms)?;
    let magnitudes = sorted_magnitudes(params.law(), cell.tail_samples, &stream.child("tail"))?;
    let m0 = smallest_tail_regime_m(&params, cell.epsilon, &cell.ms, &magnitudes)?;
    let checked: Vec<bool> = series
        .rows
        .iter()
        .zip(&bounds)
        .filter(|(_, b)| b.total <= 1.0)
        .map(|(r, b)| r.p_hat <= b.total)
        .collect();
    Ok(ConcentrationOutcome {
        c_con: params.c_con(),
        bound_cells_checked: checked.len(),
        bound_violations: checked.iter().filter(|ok| !**ok).count(),
        series,
        bounds,
        fit,
        fit_error,
        c_con_fitted,
        m0,
    })
}

fn decay_plot(cell: &ConcentrationCell, o: &ConcentrationOutcome) -> LogLogPlot {
    let mut plot = LogLogPlot::new(
        format!("alpha={} p={} eps={:.4}", cell.alpha, cell.p, cell.epsilon),
        "M",
        "P(|mean - E| > eps)",
    );
    let ms: Vec<f64> = cell.ms.iter().map(|&m| m as f64).collect();
    plot.push(
        Series::line("p_hat", ms.iter().zip(&o.series.rows).map(|(&m, r)| (m, r.p_hat)).collect()).with_markers(),
    );
    plot.push(Series::line("combined bound", ms.iter().zip(&o.bounds).map(|(&m, b)| (m, b.total)).collect()));
    plot.push(
        Series::line(
            "C_con M^-c_con",
            ms.iter().map(|&m| (m, o.c_con_fitted * m.powf(-o.c_con))).collect(),
        )
        .dashed(),
    );
    plot
}

pub fn run_concentration_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let StudyGrid::Concentration(cells) = &cfg.grid else {
        return Err(Error::domain("concentration study needs a concentration grid"));
    };
    let outcomes = map_cells(cfg, cells, concentration_cell)?;
    let mut rows = Vec::new();
    let mut row_cells = Vec::new();
    let mut meta = Vec::new();
    let mut plots = Vec::new();
    for (i, (c, o)) in cells.iter().zip(&outcomes).enumerate() {
        for (r, b) in o.series.rows.iter().zip(&o.bounds) {
            rows.push(vec![
                Measure::Real(c.alpha),
                Measure::Real(c.p),
                Measure::Real(c.epsilon),
                Measure::Count(r.m as u64),
                Measure::Real(r.p_hat),
                Measure::Real(r.std_err),
                Measure::Real(b.total),
                Measure::Real(b.hoeffding),
                Measure::Real(b.tail),
            ]);
            row_cells.push(i);
        }
        meta.push(json!({
            "cell": i,
            "stream": cell_stream(cfg.master_seed, cfg.study, i).label(),
            "inputs": c,
            "fit": o.fit,
            "fit_error": o.fit_error,
            "c_con": o.c_con,
            "C_con_fitted": o.c_con_fitted,
            "M0": o.m0,
            "bound_cells_checked": o.bound_cells_checked,
            "bound_violations": o.bound_violations,
        }));
        plots.push((format!("concentration_cell{i}.svg"), decay_plot(c, o)));
    }
    let c_con_frozen = outcomes.iter().map(|o| o.c_con_fitted).fold(0.0, f64::max);
    Ok(StudyResult {
        study: cfg.study,
        columns: vec![
            "alpha", "p", "epsilon", "M", "p_hat", "std_err", "bound_total", "bound_hoeffding", "bound_tail",
        ],
        rows,
        row_cells,
        cells: meta,
        summary: json!({
            "C_con": c_con_frozen,
            "slopes": outcomes.iter().map(|o| o.fit.map(|f| f.slope)).collect::<Vec<_>>(),
            "bound_violations": outcomes.iter().map(|o| o.bound_violations).sum::<usize>(),
        }),
        stamp: stamp(cfg),
        plots,
    })
}

/// Everything computed for one net + RQIP cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetOutcome {
    pub net_size: usize,
    pub cover_bound: f64,
    pub coverage: f64,
    pub worst_gap: f64,
    pub strategy: Strategy,
    pub max_deviation: f64,
    pub passed: bool,
    pub vectors_tested: usize,
    pub log10_m_required: f64,
    /// Brute-force maximum over basis vectors, for `k = 1`.
    pub brute_force_max_deviation: Option<f64>,
    pub brute_force_passed: Option<bool>,
}

pub fn net_cell(cell: &NetCell, stream: &Stream) -> Result<NetOutcome> {
    validate_net_cell(cell)?;
    let net = build_net(
        cell.alpha,
        cell.epsilon,
        cell.k,
        cell.dim,
        NetTarget::UnitBall,
        cell.budget,
        &stream.child("net"),
    )?;
    let coverage = verify_net(&net, cell.verify_trials, &stream.child("verify"))?;
    let law = StableLaw::new(cell.alpha, cell.gamma)?;
    let matrix = generate_matrix(law, cell.rows, cell.dim, &stream.child("matrix"))?;
    let cfg = RqipConfig::new(&law, cell.k, cell.delta, cell.p, cell.dim)?;
    let report = rqip_check(&matrix, &cfg)?;
    let brute = if cell.k == 1 {
        Some(rqip_check(&matrix, &cfg.with_strategy(Strategy::BruteForceK1))?)
    } else {
        None
    };
    let complexity = sample_complexity(&complexity_inputs(cell), ComplexityMode::EnOverK)?;
    Ok(NetOutcome {
        net_size: net.len(),
        cover_bound: covering_bound(cell.alpha, cell.epsilon, cell.k, cell.dim)?.value,
        coverage: coverage.coverage_rate,
        worst_gap: coverage.worst_gap,
        strategy: cfg.strategy,
        max_deviation: report.max_deviation,
        passed: report.passed,
        vectors_tested: report.vectors_tested,
        log10_m_required: complexity.log10_m,
        brute_force_max_deviation: brute.as_ref().map(|b| b.max_deviation),
        brute_force_passed: brute.as_ref().map(|b| b.passed),
    })
}

pub fn run_net_and_rqip_study(cfg: &StudyConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let StudyGrid::NetsRqip(cells) = &cfg.grid else {
        return Err(Error::domain("net study needs a nets_rqip grid"));
    };
    let outcomes = map_cells(cfg, cells, net_cell)?;
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    for (i, (c, o)) in cells.iter().zip(&outcomes).enumerate() {
        rows.push(vec![
            Measure::Real(c.alpha),
            Measure::Count(c.k as u64),
            Measure::Count(c.dim as u64),
            Measure::Real(c.epsilon),
            Measure::Count(o.net_size as u64),
            Measure::Real(o.cover_bound),
            Measure::Real(o.coverage),
            Measure::Real(o.max_deviation),
            Measure::Flag(o.passed),
            Measure::Real(o.log10_m_required),
            Measure::Count(c.rows as u64),
        ]);
        meta.push(json!({
            "cell": i,
            "stream": cell_stream(cfg.master_seed, cfg.study, i).label(),
            "inputs": c,
            "outcome": o,
            "net_matches_brute_force": o.brute_force_max_deviation.map(|b| {
                (b - o.max_deviation).abs() <= 1e-9 && o.brute_force_passed == Some(o.passed)
            }),
            "complexity_convention": "C_con is a convention (default 1); log10_M_required uses (eN/k)^k",
        }));
    }
    let gap_ok = cells
        .iter()
        .zip(&outcomes)
        .all(|(c, o)| o.log10_m_required >= (c.rows as f64).log10());
    Ok(StudyResult {
        study: cfg.study,
        columns: vec![
            "alpha",
            "k",
            "N",
            "epsilon",
            "net_size",
            "cover_bound",
            "coverage",
            "max_deviation",
            "passed",
            "log10_M_required",
            "M_used",
        ],
        row_cells: (0..rows.len()).collect(),
        rows,
        cells: meta,
        summary: json!({"required_M_exceeds_used_everywhere": gap_ok}),
        stamp: stamp(cfg),
        plots: Vec::new(),
    })
}
