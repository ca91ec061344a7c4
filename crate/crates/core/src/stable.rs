//! Symmetric α-stable laws for α ∈ (0, 1).
//!
//! The parameterization is fixed: a law with index `alpha` and scale `gamma`
//! has characteristic function `exp(-gamma^alpha |t|^alpha)`. Under this
//! convention a projection `<w, x>` of an i.i.d. SαS(γ) vector is SαS(γ‖x‖_α)
//! with no conversion factor, which is what the moment identities rely on.

use crate::error::{open_interval, positive, Error, Result};
use crate::special::gamma_pos;
use crate::stream::Stream;
use rand::Rng;
use rand_distr::{Distribution, Exp1};
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

/// Smallest index the sampler accepts.
pub const MIN_SAMPLING_ALPHA: f64 = 0.05;
/// Largest index the sampler accepts.
pub const MAX_SAMPLING_ALPHA: f64 = 0.99;

/// The pair `(alpha, gamma)` defining SαS(γ).
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StableLaw {
    alpha: f64,
    gamma: f64,
}

impl StableLaw {
    /// Builds a law that can be sampled; `alpha` must lie in `[0.05, 0.99]`.
    pub fn new(alpha: f64, gamma: f64) -> Result<Self> {
        open_interval("alpha", alpha, 0.0, 1.0)?;
        if !(MIN_SAMPLING_ALPHA..=MAX_SAMPLING_ALPHA).contains(&alpha) {
            return Err(Error::domain(format!(
                "alpha = {alpha} is outside the validated sampling range \
                 [{MIN_SAMPLING_ALPHA}, {MAX_SAMPLING_ALPHA}]"
            )));
        }
        positive("gamma", gamma)?;
        Ok(Self { alpha, gamma })
    }

    /// The γ = 1 law.
    pub fn standard(alpha: f64) -> Result<Self> {
        Self::new(alpha, 1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Same index, scale multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.alpha, self.gamma * factor)
    }

    /// `E|X|^p = C_{α,p} γ^p` for this law.
    pub fn abs_moment(&self, p: f64) -> Result<f64> {
        Ok(stable_abs_moment_constant(self.alpha, p)? * self.gamma.powf(p))
    }

    /// One standard (γ = 1) variate from the symmetric Chambers–Mallows–Stuck
    /// transform. Consumes exactly one uniform and one exponential draw.
    fn standard_variate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let a = self.alpha;
        let u = loop {
            let v: f64 = rng.random();
            if v > 0.0 {
                break PI * (v - 0.5);
            }
        };
        let w: f64 = loop {
            let e: f64 = Exp1.sample(rng);
            if e > 0.0 {
                break e;
            }
        };
        let s = (a * u).sin();
        if s == 0.0 {
            return 0.0;
        }
        // log form of sin(aU)/cos(U)^{1/a} * (cos((1-a)U)/W)^{(1-a)/a}
        let cos_u = u.cos().max(f64::MIN_POSITIVE);
        let log_mag = s.abs().ln() - cos_u.ln() / a
            + (1.0 - a) / a * (((1.0 - a) * u).cos().ln() - w.ln());
        s.signum() * log_mag.exp()
    }
}

impl Distribution<f64> for StableLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.gamma * self.standard_variate(rng)
    }
}

/// CMS output for forced internals `u ∈ (-π/2, π/2)`, `w > 0`, with γ = 1.
///
/// Exposed so the transform can be checked at chosen points.
pub fn cms_transform(alpha: f64, u: f64, w: f64) -> f64 {
    debug_assert!(u.abs() < FRAC_PI_2 && w > 0.0);
    (alpha * u).sin() / u.cos().powf(1.0 / alpha)
        * (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha)
}

/// `n` variates of one law, tagged with the stream that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub law: StableLaw,
    pub values: Vec<f64>,
    pub stream: Stream,
}

impl SampleBatch {
    pub fn count(&self) -> usize {
        self.values.len()
    }

    pub fn stream_label(&self) -> &str {
        self.stream.label()
    }

    /// One value per line under the header `value`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "value")?;
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        Ok(())
    }
}

/// Draws `n` i.i.d. SαS(γ) variates from `stream`.
pub fn draw_stable(law: StableLaw, n: usize, stream: &Stream) -> Result<SampleBatch> {
    if n == 0 {
        return Err(Error::domain("draw_stable requires n ≥ 1"));
    }
    let mut rng = stream.rng();
    let values = (0..n).map(|_| law.sample(&mut rng)).collect();
    Ok(SampleBatch {
        law,
        values,
        stream: stream.clone(),
    })
}

/// `C_{α,p} = E|X|^p` for the standard law:
/// `2^p Γ((1+p)/2) Γ(1 - p/α) / (Γ(1 - p/2) Γ(1/2))`.
pub fn stable_abs_moment_constant(alpha: f64, p: f64) -> Result<f64> {
    open_interval("alpha", alpha, 0.0, 1.0)?;
    check_moment_order(alpha, p)?;
    Ok(2f64.powf(p) * gamma_pos((1.0 + p) / 2.0) * gamma_pos(1.0 - p / alpha)
        / (gamma_pos(1.0 - p / 2.0) * PI.sqrt()))
}

/// Two-sided tail constant: `t^α P(|X| > t) → C_α γ^α` with
/// `C_α = (1 - α) / (Γ(2 - α) cos(πα/2))`.
pub fn stable_tail_constant(alpha: f64) -> Result<f64> {
    open_interval("alpha", alpha, 0.0, 1.0)?;
    Ok((1.0 - alpha) / (gamma_pos(2.0 - alpha) * (PI * alpha / 2.0).cos()))
}

pub(crate) fn check_moment_order(alpha: f64, p: f64) -> Result<()> {
    if p > 0.0 && p < alpha {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "p = {p} violates the constraint p ∈ (0, α) with α = {alpha}; \
             the p-th absolute moment is infinite for p ≥ α"
        )))
    }
}

/// `|x|^p`, going through logs when `|x|` is outside `[1e-100, 1e100]`.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else if !(1e-100..=1e100).contains(&a) {
        (p * a.ln()).exp()
    } else {
        a.powf(p)
    }
}

/// `(1/n) Σ |x_i|^p` over a batch.
pub fn empirical_abs_moment(batch: &SampleBatch, p: f64) -> Result<f64> {
    check_moment_order(batch.law.alpha(), p)?;
    if batch.values.is_empty() {
        return Err(Error::domain("empirical_abs_moment requires a nonempty batch"));
    }
    Ok(mean_abs_pow(&batch.values, p))
}

pub(crate) fn mean_abs_pow(values: &[f64], p: f64) -> f64 {
    values.iter().map(|&x| abs_pow(x, p)).sum::<f64>() / values.len() as f64
}

/// Empirical `t^α · P̂(|X| > t)` from magnitudes sorted ascending.
pub fn empirical_tail_product(sorted_abs: &[f64], alpha: f64, t: f64) -> f64 {
    let above = sorted_abs.len() - sorted_abs.partition_point(|&v| v <= t);
    t.powf(alpha) * above as f64 / sorted_abs.len() as f64
}
