//! Restricted quasiconvexity isometry checks.
//!
//! A matrix `Ω` with i.i.d. SαS(γ) entries satisfies the (δ, k) property when
//! every k-sparse `x` has
//!
//! ```text
//! (1-δ) C_{α,p} (γ‖x‖_α)^p ≤ (1/M) Σ_i |<ω_i, x>|^p ≤ (1+δ) C_{α,p} (γ‖x‖_α)^p.
//! ```
//!
//! [`rqip_deviation`] measures how far a single `x` is from the centre of that
//! band. [`rqip_check`] evaluates the deviation over a family of test vectors;
//! it can falsify the property but certifies it only for `k = 1`, where the
//! column check is exhaustive.
//!
//! [`sample_complexity`] evaluates the row count that guarantees the property
//! with probability `1 - η`, in log space since it is usually far beyond any
//! matrix one could actually build.

use crate::concentration::ConcentrationParams;
use crate::error::{open_interval, positive, Error, Result};
use crate::geometry::{
    alpha_quasinorm, binomial, build_net_with_limits, covering_bound, log10_biguint, net_constant,
    sample_sparse_target, NetLimits, NetTarget, SparseVector,
};
use crate::stable::{abs_pow, check_moment_order, stable_abs_moment_constant, StableLaw};
use crate::stream::Stream;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::E;

/// Largest `M · N` that [`generate_matrix`] will allocate.
pub const MAX_MATRIX_ENTRIES: usize = 1_000_000_000;
/// Rows per independently seeded block of a matrix.
const ROW_BLOCK: usize = 4096;

/// Dense row-major `M × N` matrix with i.i.d. SαS(γ) entries.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    law: StableLaw,
    stream: Stream,
}

/// Fills an `M × N` matrix; rows `[b·4096, (b+1)·4096)` come from `stream.child(b)`.
pub fn generate_matrix(law: StableLaw, rows: usize, cols: usize, stream: &Stream) -> Result<MeasurementMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::domain(format!(
            "matrix dimensions must be ≥ 1, got M = {rows}, N = {cols}"
        )));
    }
    match rows.checked_mul(cols) {
        Some(n) if n <= MAX_MATRIX_ENTRIES => {}
        _ => {
            return Err(Error::capacity(format!(
                "M · N = {rows} · {cols} exceeds the cap of {MAX_MATRIX_ENTRIES} entries"
            )))
        }
    }
    let mut entries = vec![0.0; rows * cols];
    entries
        .par_chunks_mut(ROW_BLOCK * cols)
        .enumerate()
        .for_each(|(b, block)| {
            let mut rng = stream.child(b).rng();
            block.iter_mut().for_each(|v| *v = law.sample(&mut rng));
        });
    Ok(MeasurementMatrix {
        rows,
        cols,
        entries,
        law,
        stream: stream.clone(),
    })
}

impl MeasurementMatrix {
    /// Wraps explicit entries; used for fixtures and externally produced matrices.
    pub fn from_entries(law: StableLaw, rows: usize, cols: usize, entries: Vec<f64>, stream: Stream) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: entries.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            entries,
            law,
            stream,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn law(&self) -> StableLaw {
        self.law
    }
    pub fn stream(&self) -> &Stream {
        &self.stream
    }
    pub fn seed_label(&self) -> &str {
        self.stream.label()
    }
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }
}

fn check_p(law: &StableLaw, p: f64) -> Result<()> {
    check_moment_order(law.alpha(), p)
}

/// `(1/M) Σ_i |<ω_i, x>|^p`, with inner products taken over `supp(x)`.
pub fn moment_stat(m: &MeasurementMatrix, x: &SparseVector, p: f64) -> Result<f64> {
    if x.dim() != m.cols {
        return Err(Error::DimensionMismatch {
            expected: m.cols,
            actual: x.dim(),
        });
    }
    check_p(&m.law, p)?;
    let support: Vec<(usize, f64)> = x.support().into_iter().map(|j| (j, x.entries()[j])).collect();
    if support.is_empty() {
        return Ok(0.0);
    }
    // Fixed blocks summed in order keep the result independent of thread count.
    let partial: Vec<f64> = m
        .entries
        .par_chunks(ROW_BLOCK * m.cols)
        .map(|block| {
            block
                .chunks_exact(m.cols)
                .map(|row| abs_pow(support.iter().map(|&(j, v)| row[j] * v).sum::<f64>(), p))
                .sum::<f64>()
        })
        .collect();
    Ok(partial.iter().sum::<f64>() / m.rows as f64)
}

/// Expected value of [`moment_stat`]: `C_{α,p} (γ ‖x‖_α)^p`.
pub fn expected_moment(law: &StableLaw, x: &SparseVector, p: f64) -> Result<f64> {
    let norm = alpha_quasinorm(x, law.alpha())?;
    Ok(stable_abs_moment_constant(law.alpha(), p)? * (law.gamma() * norm).powf(p))
}

/// `D(x) = |moment_stat / (C_{α,p} (γ‖x‖_α)^p) - 1|`; the property holds at
/// `x` iff `D(x) ≤ δ`.
pub fn rqip_deviation(m: &MeasurementMatrix, x: &SparseVector, p: f64) -> Result<f64> {
    if x.is_zero() {
        return Err(Error::domain("rqip_deviation is undefined for the zero vector"));
    }
    let stat = moment_stat(m, x, p)?;
    Ok((stat / expected_moment(&m.law, x, p)? - 1.0).abs())
}

/// Net radius `(δ/3)^{1/p}`: with it the net-to-point correction costs at most
/// `δ/3` of the moment.
pub fn net_epsilon_for_delta(delta: f64, p: f64) -> Result<f64> {
    open_interval("delta", delta, 0.0, 1.0)?;
    open_interval("p", p, 0.0, 1.0)?;
    Ok((delta / 3.0).powf(1.0 / p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Every point of a unit-sphere net with radius `(δ/3)^{1/p}`.
    Net,
    /// Random unit-α-norm k-sparse vectors.
    RandomDirections,
    /// Every standard basis vector; exact when `k = 1`.
    BruteForceK1,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Net => "net",
            Strategy::RandomDirections => "random_directions",
            Strategy::BruteForceK1 => "brute_force_k1",
        }
    }
}

pub const DEFAULT_NET_BUDGET: usize = 2000;
pub const DEFAULT_DIRECTION_COUNT: usize = 10_000;
/// Largest support count for which the net strategy is the default.
const NET_DEFAULT_MAX_SUPPORTS: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RqipConfig {
    pub k: usize,
    pub delta: f64,
    pub p: f64,
    pub strategy: Strategy,
    pub net_budget: usize,
    pub direction_count: usize,
    pub net_point_cap: usize,
}

impl RqipConfig {
    /// Picks the net strategy when the net is small: always for `k = 1` (the
    /// sphere is `{±e_j}`), for `k = 2` when the covering bound at radius
    /// `(δ/3)^{1/p}` fits under the point cap. Random directions otherwise.
    pub fn new(law: &StableLaw, k: usize, delta: f64, p: f64, cols: usize) -> Result<Self> {
        let small_net = || -> bool {
            if k == 0 || k > cols || binomial(cols, k) > NET_DEFAULT_MAX_SUPPORTS.into() {
                return false;
            }
            if k == 1 {
                return true;
            }
            let Ok(eps) = net_epsilon_for_delta(delta, p) else {
                return false;
            };
            k == 2
                && covering_bound(law.alpha(), eps.min(0.999), k, cols)
                    .is_ok_and(|b| b.value <= crate::geometry::DEFAULT_POINT_CAP as f64)
        };
        let strategy = if small_net() {
            Strategy::Net
        } else {
            Strategy::RandomDirections
        };
        let cfg = Self {
            k,
            delta,
            p,
            strategy,
            net_budget: DEFAULT_NET_BUDGET,
            direction_count: DEFAULT_DIRECTION_COUNT,
            net_point_cap: crate::geometry::DEFAULT_POINT_CAP,
        };
        cfg.validate(law)?;
        Ok(cfg)
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn validate(&self, law: &StableLaw) -> Result<()> {
        open_interval("delta", self.delta, 0.0, 1.0)?;
        check_p(law, self.p)?;
        if self.k == 0 {
            return Err(Error::domain("k must be ≥ 1"));
        }
        if self.net_budget == 0 || self.direction_count == 0 {
            return Err(Error::domain("net_budget and direction_count must be ≥ 1"));
        }
        if self.strategy == Strategy::BruteForceK1 && self.k != 1 {
            return Err(Error::domain(format!(
                "brute_force_k1 is exhaustive only for k = 1, got k = {}",
                self.k
            )));
        }
        Ok(())
    }
}

/// Outcome of [`rqip_check`].
#[derive(Clone, Debug, PartialEq)]
pub struct RqipReport {
    pub max_deviation: f64,
    pub witness: SparseVector,
    pub vectors_tested: usize,
    pub passed: bool,
    pub config: RqipConfig,
    pub law: StableLaw,
    pub rows: usize,
    pub cols: usize,
    pub master_seed: u64,
    pub seed_label: String,
    /// `C_{α,p}` used in the denominator.
    pub moment_constant_used: f64,
    /// Net radius, for the net strategy.
    pub net_epsilon: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct WitnessJson {
    support: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ReportJson {
    passed: bool,
    max_deviation: f64,
    witness: WitnessJson,
    vectors_tested: usize,
    strategy: Strategy,
    delta: f64,
    k: usize,
    p: f64,
    alpha: f64,
    gamma: f64,
    #[serde(rename = "M")]
    rows: usize,
    #[serde(rename = "N")]
    cols: usize,
    seed_label: String,
    master_seed: u64,
    moment_constant_used: f64,
    net_epsilon: Option<f64>,
    net_budget: usize,
    direction_count: usize,
}

impl RqipReport {
    pub fn validate(&self) -> Result<()> {
        self.config.validate(&self.law)?;
        if !(self.max_deviation >= 0.0) {
            return Err(Error::domain("max_deviation must be ≥ 0"));
        }
        if self.passed != (self.max_deviation <= self.config.delta) {
            return Err(Error::domain(format!(
                "report says passed = {} but max_deviation = {} and delta = {}",
                self.passed, self.max_deviation, self.config.delta
            )));
        }
        if self.witness.dim() != self.cols || self.witness.nnz() > self.config.k {
            return Err(Error::domain("witness is not a k-sparse vector of dimension N"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let support = self.witness.support();
        let values = support.iter().map(|&j| self.witness.entries()[j]).collect();
        let doc = ReportJson {
            passed: self.passed,
            max_deviation: self.max_deviation,
            witness: WitnessJson { support, values },
            vectors_tested: self.vectors_tested,
            strategy: self.config.strategy,
            delta: self.config.delta,
            k: self.config.k,
            p: self.config.p,
            alpha: self.law.alpha(),
            gamma: self.law.gamma(),
            rows: self.rows,
            cols: self.cols,
            seed_label: self.seed_label.clone(),
            master_seed: self.master_seed,
            moment_constant_used: self.moment_constant_used,
            net_epsilon: self.net_epsilon,
            net_budget: self.net_budget(),
            direction_count: self.config.direction_count,
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    fn net_budget(&self) -> usize {
        self.config.net_budget
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ReportJson = serde_json::from_str(s)?;
        let law = StableLaw::new(doc.alpha, doc.gamma)?;
        let config = RqipConfig {
            k: doc.k,
            delta: doc.delta,
            p: doc.p,
            strategy: doc.strategy,
            net_budget: doc.net_budget,
            direction_count: doc.direction_count,
            net_point_cap: crate::geometry::DEFAULT_POINT_CAP,
        };
        let witness = SparseVector::from_support(doc.cols, &doc.witness.support, &doc.witness.values)?;
        let witness = SparseVector::new(witness.entries().to_vec(), doc.k.min(doc.cols).max(1))?;
        let report = Self {
            max_deviation: doc.max_deviation,
            witness,
            vectors_tested: doc.vectors_tested,
            passed: doc.passed,
            config,
            law,
            rows: doc.rows,
            cols: doc.cols,
            master_seed: doc.master_seed,
            seed_label: doc.seed_label,
            moment_constant_used: doc.moment_constant_used,
            net_epsilon: doc.net_epsilon,
        };
        report.validate()?;
        Ok(report)
    }
}

/// Evaluates `D` over the strategy's test vectors and reports the maximum.
///
/// Randomness (net construction, random directions) comes from the matrix's
/// stream under the child label `rqip-check`.
pub fn rqip_check(m: &MeasurementMatrix, cfg: &RqipConfig) -> Result<RqipReport> {
    cfg.validate(&m.law)?;
    if cfg.k > m.cols {
        return Err(Error::domain(format!(
            "k = {} must not exceed N = {}",
            cfg.k, m.cols
        )));
    }
    let stream = m.stream.child("rqip-check");
    let alpha = m.law.alpha();
    let mut net_epsilon = None;
    let vectors: Vec<SparseVector> = match cfg.strategy {
        Strategy::BruteForceK1 => (0..m.cols)
            .map(|j| SparseVector::basis(m.cols, j))
            .collect::<Result<_>>()?,
        Strategy::RandomDirections => (0..cfg.direction_count)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream.child("direction").child(i).rng();
                sample_sparse_target(alpha, cfg.k, m.cols, NetTarget::UnitSphere, &mut rng)
            })
            .collect(),
        Strategy::Net => {
            let eps = net_epsilon_for_delta(cfg.delta, cfg.p)?;
            net_epsilon = Some(eps);
            let limits = NetLimits {
                point_cap: cfg.net_point_cap,
                ..NetLimits::default()
            };
            build_net_with_limits(
                alpha,
                eps,
                cfg.k,
                m.cols,
                NetTarget::UnitSphere,
                cfg.net_budget,
                &stream.child("net"),
                limits,
            )?
            .points()
            .collect()
        }
    };
    if vectors.is_empty() {
        return Err(Error::domain("no test vectors to evaluate"));
    }
    let deviations: Vec<f64> = vectors
        .par_iter()
        .map(|x| rqip_deviation(m, x, cfg.p))
        .collect::<Result<_>>()?;
    // lowest index wins ties
    let (best, max_deviation) = deviations
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc });
    Ok(RqipReport {
        max_deviation,
        witness: vectors[best].clone(),
        vectors_tested: vectors.len(),
        passed: max_deviation <= cfg.delta,
        config: *cfg,
        law: m.law,
        rows: m.rows,
        cols: m.cols,
        master_seed: m.stream.master_seed(),
        seed_label: m.stream.label().to_string(),
        moment_constant_used: stable_abs_moment_constant(alpha, cfg.p)?,
        net_epsilon,
    })
}

/// Inputs to the sample-complexity bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityInputs {
    pub dim: usize,
    pub k: usize,
    pub delta: f64,
    pub eta: f64,
    pub p: f64,
    pub alpha: f64,
    pub c0: f64,
    /// The envelope constant `C_con`; not identified by the concentration
    /// argument, so results depend on this convention.
    pub c_con: f64,
}

impl ComplexityInputs {
    pub fn from_params(params: &ConcentrationParams, dim: usize, k: usize, delta: f64, eta: f64) -> Result<Self> {
        let inputs = Self {
            dim,
            k,
            delta,
            eta,
            p: params.p(),
            alpha: params.law().alpha(),
            c0: params.c0(),
            c_con: params.c_con_envelope(),
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn validate(&self) -> Result<()> {
        open_interval("alpha", self.alpha, 0.0, 1.0)?;
        check_moment_order(self.alpha, self.p)?;
        open_interval("delta", self.delta, 0.0, 1.0)?;
        open_interval("eta", self.eta, 0.0, 1.0)?;
        open_interval("c0", self.c0, 0.0, 0.5)?;
        positive("C_con", self.c_con)?;
        if self.k == 0 || self.k > self.dim {
            return Err(Error::domain(format!(
                "sparsity k = {} must satisfy 1 ≤ k ≤ N = {}",
                self.k, self.dim
            )));
        }
        Ok(())
    }

    /// Decay exponent `c_con = c0 (α/p - 1)`.
    pub fn decay_exponent(&self) -> f64 {
        self.c0 * (self.alpha / self.p - 1.0)
    }
}

/// How the support count `C(N, k)` enters the bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComplexityMode {
    /// Exact binomial coefficient.
    BinomialExact,
    /// The relaxation `(eN/k)^k`.
    EnOverK,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleComplexity {
    pub log10_m: f64,
    /// `ceil(10^log10_m)` when it fits in 128 bits.
    pub m: Option<u128>,
}

/// `M ≥ (2 C_con/η · C_net^k (3/δ)^{k/p} · S)^{1/c_con}` with `S = C(N,k)` or
/// `(eN/k)^k`, evaluated as a base-10 logarithm.
pub fn sample_complexity(inputs: &ComplexityInputs, mode: ComplexityMode) -> Result<SampleComplexity> {
    inputs.validate()?;
    let k = inputs.k as f64;
    let supports = match mode {
        ComplexityMode::BinomialExact => log10_biguint(&binomial(inputs.dim, inputs.k)),
        ComplexityMode::EnOverK => k * (E * inputs.dim as f64 / k).log10(),
    };
    let inner = (2.0 * inputs.c_con / inputs.eta).log10()
        + k * net_constant(inputs.alpha)?.log10()
        + k / inputs.p * (3.0 / inputs.delta).log10()
        + supports;
    let log10_m = inner / inputs.decay_exponent();
    let m = if log10_m < 38.0 {
        let v = 10f64.powf(log10_m).ceil();
        (v < u128::MAX as f64).then_some(v as u128)
    } else {
        None
    };
    Ok(SampleComplexity { log10_m, m })
}
