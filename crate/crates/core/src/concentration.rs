//! Truncation-based concentration bounds for empirical fractional moments.
//!
//! For `Y_i = |X_i|^p` with `X_i ~ SαS(γ)` and `p < α`, the deviation
//! probability `P(|mean(Y) - E Y| > ε)` is split at a truncation level `T`:
//! the bounded part is handled by Hoeffding, the tail part by Markov and the
//! stable tail estimate. Each displayed bound has its own function so the
//! pieces can be evaluated and compared against Monte-Carlo estimates.

use crate::error::{open_interval, positive, Error, Result};
use crate::stable::{
    check_moment_order, empirical_tail_product, mean_abs_pow, stable_tail_constant, StableLaw,
};
use crate::stream::Stream;
use rand_distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

pub const DEFAULT_C0: f64 = 0.25;
pub const DEFAULT_C_PRIME: f64 = 1.0;
pub const DEFAULT_C_CON: f64 = 1.0;
/// Relative band for the tail-regime diagnostic.
pub const TAIL_REGIME_TOLERANCE: f64 = 0.25;

/// Constant bundle for the fractional-moment concentration bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationParams {
    law: StableLaw,
    p: f64,
    c0: f64,
    c_prime: f64,
    tail_constant: f64,
    c_con_envelope: f64,
}

impl ConcentrationParams {
    /// Defaults: `c0 = 0.25`, `C' = 1`, `C_con = 1`, closed-form tail constant.
    pub fn new(law: StableLaw, p: f64) -> Result<Self> {
        check_moment_order(law.alpha(), p)?;
        Ok(Self {
            law,
            p,
            c0: DEFAULT_C0,
            c_prime: DEFAULT_C_PRIME,
            tail_constant: stable_tail_constant(law.alpha())?,
            c_con_envelope: DEFAULT_C_CON,
        })
    }

    pub fn with_c0(mut self, c0: f64) -> Result<Self> {
        open_interval("c0", c0, 0.0, 0.5)?;
        self.c0 = c0;
        Ok(self)
    }

    pub fn with_c_prime(mut self, c_prime: f64) -> Result<Self> {
        positive("C'", c_prime)?;
        self.c_prime = c_prime;
        Ok(self)
    }

    pub fn with_tail_constant(mut self, tail_constant: f64) -> Result<Self> {
        positive("C_alpha", tail_constant)?;
        self.tail_constant = tail_constant;
        Ok(self)
    }

    pub fn with_c_con(mut self, c_con: f64) -> Result<Self> {
        positive("C_con", c_con)?;
        self.c_con_envelope = c_con;
        Ok(self)
    }

    pub fn law(&self) -> StableLaw {
        self.law
    }
    pub fn p(&self) -> f64 {
        self.p
    }
    pub fn c0(&self) -> f64 {
        self.c0
    }
    pub fn c_prime(&self) -> f64 {
        self.c_prime
    }
    pub fn tail_constant(&self) -> f64 {
        self.tail_constant
    }
    /// The envelope constant `C_con`.
    pub fn c_con_envelope(&self) -> f64 {
        self.c_con_envelope
    }

    /// `α / p`, always > 1.
    pub fn order_ratio(&self) -> f64 {
        self.law.alpha() / self.p
    }

    /// Polynomial decay exponent `c_con = c0 (α/p - 1)`.
    pub fn c_con(&self) -> f64 {
        self.c0 * (self.order_ratio() - 1.0)
    }

    /// `K = C_α γ^α / (α/p - 1)`, the bound on `E[Y 1{Y > T}] T^{α/p - 1}`.
    pub fn k_const(&self) -> f64 {
        self.tail_constant * self.law.gamma().powf(self.law.alpha()) / (self.order_ratio() - 1.0)
    }

    /// `E|X|^p = C_{α,p} γ^p`.
    pub fn mean(&self) -> f64 {
        self.law
            .abs_moment(self.p)
            .expect("moment order validated at construction")
    }

    /// Coefficient `a` in the Hoeffding exponent `-a M^{1-2c0}` once `T` is
    /// substituted: `ε^{2+2/(α/p-1)} / (8 C'^{2/(α/p-1)})`.
    pub fn hoeffding_rate(&self, epsilon: f64) -> f64 {
        let e = 2.0 / (self.order_ratio() - 1.0);
        epsilon.powf(2.0 + e) / (8.0 * self.c_prime.powf(e))
    }

    /// Row count beyond which `hoeffding(M) · M^{c_con}` decreases.
    pub fn envelope_crossover(&self, epsilon: f64) -> f64 {
        let q = 1.0 - 2.0 * self.c0;
        (self.c_con() / (self.hoeffding_rate(epsilon) * q)).powf(1.0 / q)
    }
}

fn check_eps_m(epsilon: f64, m: usize) -> Result<()> {
    positive("epsilon", epsilon)?;
    if m == 0 {
        return Err(Error::domain("M must be ≥ 1"));
    }
    Ok(())
}

/// `T = (C'/ε)^{1/(α/p-1)} · M^{c0}`.
pub fn truncation_threshold(params: &ConcentrationParams, epsilon: f64, m: usize) -> Result<f64> {
    check_eps_m(epsilon, m)?;
    Ok((params.c_prime / epsilon).powf(1.0 / (params.order_ratio() - 1.0))
        * (m as f64).powf(params.c0))
}

/// Hoeffding bound for the truncated part: `2 exp(-M ε² / (8 T²))`, in `[0, 2]`.
pub fn hoeffding_term(epsilon: f64, m: usize, threshold: f64) -> f64 {
    let v = 2.0 * (-(m as f64) * epsilon * epsilon / (8.0 * threshold * threshold)).exp();
    v.clamp(0.0, 2.0)
}

/// Markov bound for the tail part: `(4K/ε) T^{1-α/p}`.
///
/// Only meaningful once `T^{1/p}` is deep enough in the tail for the
/// asymptotic tail estimate to hold; see [`tail_regime_check`].
pub fn tail_term(params: &ConcentrationParams, epsilon: f64, threshold: f64) -> f64 {
    4.0 * params.k_const() / epsilon * threshold.powf(1.0 - params.order_ratio())
}

/// Both terms of the bound at the automatically chosen `T`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CombinedBound {
    pub threshold: f64,
    pub hoeffding: f64,
    pub tail: f64,
    pub total: f64,
    /// `C_con · M^{-c_con}`.
    pub envelope: f64,
}

pub fn combined_bound(params: &ConcentrationParams, epsilon: f64, m: usize) -> Result<CombinedBound> {
    let threshold = truncation_threshold(params, epsilon, m)?;
    let hoeffding = hoeffding_term(epsilon, m, threshold);
    let tail = tail_term(params, epsilon, threshold);
    Ok(CombinedBound {
        threshold,
        hoeffding,
        tail,
        total: hoeffding + tail,
        envelope: params.c_con_envelope * (m as f64).powf(-params.c_con()),
    })
}

/// Smallest `C_con` making `C_con M^{-c_con}` dominate `total` on every `M`.
pub fn fit_envelope_constant(params: &ConcentrationParams, epsilon: f64, ms: &[usize]) -> Result<f64> {
    let mut best = 0.0f64;
    for &m in ms {
        let b = combined_bound(params, epsilon, m)?;
        best = best.max(b.total * (m as f64).powf(params.c_con()));
    }
    Ok(best)
}

/// Monte-Carlo estimate of `P(|mean(Y) - E Y| > ε)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub exceedances: usize,
    pub trials: usize,
}

pub const MIN_TRIALS: usize = 100;

/// Runs `trials` experiments of `M` draws each; trial `i` uses `stream.child(i)`.
pub fn estimate_deviation_probability(
    params: &ConcentrationParams,
    epsilon: f64,
    m: usize,
    trials: usize,
    stream: &Stream,
) -> Result<DeviationEstimate> {
    if !(epsilon >= 0.0) {
        return Err(Error::domain(format!("epsilon = {epsilon} must be ≥ 0")));
    }
    if m == 0 {
        return Err(Error::domain("M must be ≥ 1"));
    }
    if trials < MIN_TRIALS {
        return Err(Error::domain(format!(
            "trials = {trials} is below the minimum of {MIN_TRIALS}"
        )));
    }
    let law = params.law();
    let mu = params.mean();
    let p = params.p();
    let exceedances = (0..trials)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(m),
            |buf, i| {
                let mut rng = stream.child(i).rng();
                buf.clear();
                buf.extend((0..m).map(|_| law.sample(&mut rng)));
                ((mean_abs_pow(buf, p) - mu).abs() > epsilon) as usize
            },
        )
        .sum::<usize>();
    let p_hat = exceedances as f64 / trials as f64;
    Ok(DeviationEstimate {
        p_hat,
        std_err: (p_hat * (1.0 - p_hat) / trials as f64).sqrt(),
        exceedances,
        trials,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    #[serde(rename = "M")]
    pub m: usize,
    pub p_hat: f64,
    pub trials: usize,
    pub std_err: f64,
}

/// Deviation estimates for one `ε` across increasing `M`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSeries {
    pub epsilon: f64,
    pub rows: Vec<DeviationRow>,
}

impl DeviationSeries {
    pub fn new(epsilon: f64, rows: Vec<DeviationRow>) -> Result<Self> {
        positive("epsilon", epsilon)?;
        if rows.windows(2).any(|w| w[0].m >= w[1].m) {
            return Err(Error::domain("series rows must have strictly increasing M"));
        }
        if let Some(r) = rows.iter().find(|r| !(0.0..=1.0).contains(&r.p_hat)) {
            return Err(Error::domain(format!("p_hat = {} outside [0, 1]", r.p_hat)));
        }
        Ok(Self { epsilon, rows })
    }

    /// Estimates every `M` in `ms` with `stream.child("M=<m>")`.
    pub fn estimate(
        params: &ConcentrationParams,
        epsilon: f64,
        ms: &[usize],
        trials: usize,
        stream: &Stream,
    ) -> Result<Self> {
        let rows = ms
            .iter()
            .map(|&m| {
                let e = estimate_deviation_probability(
                    params,
                    epsilon,
                    m,
                    trials,
                    &stream.child(format!("M={m}")),
                )?;
                Ok(DeviationRow {
                    m,
                    p_hat: e.p_hat,
                    trials,
                    std_err: e.std_err,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(epsilon, rows)
    }

    /// Header `M,p_hat,trials,std_err`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Least-squares line through `(ln M, ln p_hat)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub excluded_rows: usize,
}

pub const MIN_FIT_ROWS: usize = 4;

/// Fits the decay exponent; rows with `p_hat = 0` are excluded and counted.
pub fn fit_decay_exponent(series: &DeviationSeries) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .rows
        .iter()
        .filter(|r| r.p_hat > 0.0)
        .map(|r| ((r.m as f64).ln(), r.p_hat.ln()))
        .collect();
    let excluded_rows = series.rows.len() - pts.len();
    if pts.len() < MIN_FIT_ROWS {
        return Err(Error::domain(format!(
            "decay fit needs at least {MIN_FIT_ROWS} rows with p_hat > 0, found {} \
             ({excluded_rows} zero rows excluded)",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    // A flat series is fit exactly by the constant line.
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(DecayFit {
        slope,
        intercept,
        r_squared,
        excluded_rows,
    })
}

/// Where the asymptotic tail estimate is checked for one `M`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRegime {
    #[serde(rename = "M")]
    pub m: usize,
    /// Magnitude level `t = T^{1/p}`.
    pub level: f64,
    /// Empirical `t^α P̂(|X| > t)`.
    pub empirical: f64,
    /// `C_α γ^α`.
    pub reference: f64,
    pub passes: bool,
}

/// Compares `t^α P̂(|X| > t)` at `t = T^{1/p}` with `C_α γ^α`.
///
/// `sorted_abs` holds magnitudes of draws from `params.law()`, ascending.
pub fn tail_regime_check(
    params: &ConcentrationParams,
    epsilon: f64,
    m: usize,
    sorted_abs: &[f64],
) -> Result<TailRegime> {
    let level = truncation_threshold(params, epsilon, m)?.powf(1.0 / params.p());
    let empirical = empirical_tail_product(sorted_abs, params.law().alpha(), level);
    let reference = params.tail_constant() * params.law().gamma().powf(params.law().alpha());
    Ok(TailRegime {
        m,
        level,
        empirical,
        reference,
        passes: (empirical / reference - 1.0).abs() <= TAIL_REGIME_TOLERANCE,
    })
}

/// Draws `n` magnitudes and returns them sorted, for [`tail_regime_check`].
pub fn sorted_magnitudes(law: StableLaw, n: usize, stream: &Stream) -> Result<Vec<f64>> {
    let mut v: Vec<f64> = crate::stable::draw_stable(law, n, stream)?
        .values
        .into_iter()
        .map(f64::abs)
        .collect();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// First `M` (in the given order) whose tail-regime check passes.
pub fn smallest_tail_regime_m(
    params: &ConcentrationParams,
    epsilon: f64,
    ms: &[usize],
    sorted_abs: &[f64],
) -> Result<Option<usize>> {
    for &m in ms {
        if tail_regime_check(params, epsilon, m, sorted_abs)?.passes {
            return Ok(Some(m));
        }
    }
    Ok(None)
}
