//! Geometry of the sparse ℓ_α quasi-normed ball, α ∈ (0, 1).
//!
//! Distances are compared in α-power space: `d(x, y) ≤ ε` is tested as
//! `Σ |x_i - y_i|^α ≤ ε^α`, which avoids a fractional root per comparison and
//! is exact in the sense that the α-power sum is the quantity that is
//! subadditive.

use crate::error::{open_interval, Error, Result};
use crate::stream::{Stream, StreamRng};
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::E;

/// Default limit on how many supports may be enumerated.
pub const DEFAULT_SUPPORT_CAP: u64 = 1_000_000;
/// Default limit on the total number of net points.
pub const DEFAULT_POINT_CAP: usize = 200_000;
/// Tolerance for membership of the unit sphere.
pub const SPHERE_TOLERANCE: f64 = 1e-9;

/// Dense vector in `R^N` with at most `k` nonzero entries.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    entries: Vec<f64>,
    sparsity: usize,
}

impl SparseVector {
    pub fn new(entries: Vec<f64>, sparsity: usize) -> Result<Self> {
        if sparsity == 0 || sparsity > entries.len() {
            return Err(Error::domain(format!(
                "sparsity k = {sparsity} must satisfy 1 ≤ k ≤ N = {}",
                entries.len()
            )));
        }
        let nnz = entries.iter().filter(|v| **v != 0.0).count();
        if nnz > sparsity {
            return Err(Error::domain(format!(
                "vector has {nnz} nonzero entries, exceeding k = {sparsity}"
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("vector entries must be finite"));
        }
        Ok(Self { entries, sparsity })
    }

    /// Places `values` on the (0-based) `support` of an `N`-vector.
    pub fn from_support(dim: usize, support: &[usize], values: &[f64]) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: support.len(),
                actual: values.len(),
            });
        }
        let mut entries = vec![0.0; dim];
        for (&j, &v) in support.iter().zip(values) {
            if j >= dim {
                return Err(Error::domain(format!("support index {j} ≥ N = {dim}")));
            }
            entries[j] = v;
        }
        Self::new(entries, support.len().max(1))
    }

    /// `e_j` in `R^N`, 1-sparse.
    pub fn basis(dim: usize, j: usize) -> Result<Self> {
        Self::from_support(dim, &[j], &[1.0])
    }

    pub fn zeros(dim: usize, sparsity: usize) -> Result<Self> {
        Self::new(vec![0.0; dim], sparsity)
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Indices of nonzero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| self.entries[j] != 0.0).collect()
    }

    pub fn nnz(&self) -> usize {
        self.entries.iter().filter(|v| **v != 0.0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|v| *v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: self.entries.iter().map(|v| v * c).collect(),
            sparsity: self.sparsity,
        }
    }
}

/// `Σ |x_i|^α`.
pub fn alpha_power_sum(x: &[f64], alpha: f64) -> f64 {
    x.iter()
        .filter(|v| **v != 0.0)
        .map(|v| v.abs().powf(alpha))
        .sum()
}

/// `Σ |x_i - y_i|^α`.
pub fn alpha_power_distance(x: &[f64], y: &[f64], alpha: f64) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| (a - b).abs())
        .filter(|d| *d != 0.0)
        .map(|d| d.powf(alpha))
        .sum()
}

/// `‖x‖_α = (Σ |x_j|^α)^{1/α}`.
pub fn alpha_quasinorm(x: &SparseVector, alpha: f64) -> Result<f64> {
    open_interval("alpha", alpha, 0.0, 1.0)?;
    Ok(alpha_norm_of(x.entries(), alpha))
}

pub(crate) fn alpha_norm_of(x: &[f64], alpha: f64) -> f64 {
    let s = alpha_power_sum(x, alpha);
    if s == 0.0 {
        0.0
    } else {
        s.powf(1.0 / alpha)
    }
}

/// Quasi-triangle constant `2^{1/α - 1}`.
pub fn quasi_triangle_constant(alpha: f64) -> Result<f64> {
    open_interval("alpha", alpha, 0.0, 1.0)?;
    Ok(2f64.powf(1.0 / alpha - 1.0))
}

/// Covering constant `C_net = 2 C_α² + C_α` with `C_α = 2^{1/α - 1}`.
pub fn net_constant(alpha: f64) -> Result<f64> {
    let c = quasi_triangle_constant(alpha)?;
    Ok(2.0 * c * c + c)
}

/// `(C_net / ε)^k · C(N, k)`, carried as a base-10 logarithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringBound {
    pub log10: f64,
    /// `10^log10`, infinite when it overflows.
    pub value: f64,
}

fn check_k_dim(k: usize, dim: usize) -> Result<()> {
    if k == 0 || k > dim {
        return Err(Error::domain(format!(
            "sparsity k = {k} must satisfy 1 ≤ k ≤ N = {dim}"
        )));
    }
    Ok(())
}

pub fn covering_bound(alpha: f64, epsilon: f64, k: usize, dim: usize) -> Result<CoveringBound> {
    open_interval("epsilon", epsilon, 0.0, 1.0)?;
    check_k_dim(k, dim)?;
    let ratio = net_constant(alpha)? / epsilon;
    let supports = binomial(dim, k);
    let log10 = k as f64 * ratio.log10() + log10_biguint(&supports);
    // direct product while it is representable; 10^log10 loses the last digits
    let direct = supports
        .to_f64()
        .map(|c| ratio.powi(k as i32) * c)
        .filter(|v| v.is_finite() && k <= i32::MAX as usize);
    Ok(CoveringBound {
        log10,
        value: direct.unwrap_or_else(|| 10f64.powf(log10)),
    })
}

/// Exact `C(N, k)` next to the bound `(eN/k)^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinomialBound {
    pub exact: BigUint,
    pub upper: f64,
    pub log10_upper: f64,
}

impl BinomialBound {
    pub fn log10_exact(&self) -> f64 {
        log10_biguint(&self.exact)
    }
}

pub fn binomial_and_bound(dim: usize, k: usize) -> Result<BinomialBound> {
    check_k_dim(k, dim)?;
    let log10_upper = k as f64 * (E * dim as f64 / k as f64).log10();
    Ok(BinomialBound {
        exact: binomial(dim, k),
        upper: 10f64.powf(log10_upper),
        log10_upper,
    })
}

pub(crate) fn binomial(n: usize, k: usize) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

pub(crate) fn log10_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().map(f64::log10).unwrap_or(f64::INFINITY)
    } else {
        let shift = bits - 64;
        let top = (x >> shift).to_f64().expect("64-bit value");
        top.log10() + shift as f64 * 2f64.log10()
    }
}

/// Lexicographic `k`-subsets of `{0, .., N-1}`.
#[derive(Clone, Debug)]
pub struct Supports {
    current: Vec<usize>,
    dim: usize,
    done: bool,
}

impl Iterator for Supports {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let k = self.current.len();
        match (0..k).rev().find(|&i| self.current[i] < self.dim - k + i) {
            Some(i) => {
                self.current[i] += 1;
                for j in i + 1..k {
                    self.current[j] = self.current[j - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}

/// All supports of size `k`; refuses when `C(N, k)` exceeds `cap`.
pub fn enumerate_supports(dim: usize, k: usize, cap: u64) -> Result<Supports> {
    check_k_dim(k, dim)?;
    let count = binomial(dim, k);
    if count > BigUint::from(cap) {
        return Err(Error::capacity(format!(
            "C(N, k) = C({dim}, {k}) = {count} supports exceeds the enumeration cap {cap}"
        )));
    }
    Ok(Supports {
        current: (0..k).collect(),
        dim,
        done: false,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetTarget {
    UnitBall,
    UnitSphere,
}

/// Random point of the `k`-dimensional target, uniform on the ball or
/// cone-measure on the sphere.
///
/// Coordinates `g_i` have density ∝ `exp(-|g|^α)` (so `|g_i|^α ~ Gamma(1/α)`);
/// `g / ‖g‖_α` is then cone-distributed on the sphere, and a radius `U^{1/k}`
/// makes the point uniform in the ball.
pub fn sample_target<R: Rng + ?Sized>(
    alpha: f64,
    k: usize,
    target: NetTarget,
    rng: &mut R,
) -> Vec<f64> {
    let shape = Gamma::new(1.0 / alpha, 1.0).expect("alpha in (0, 1)");
    let mut g: Vec<f64> = (0..k)
        .map(|_| {
            let mag = shape.sample(rng).powf(1.0 / alpha);
            if rng.random::<bool>() {
                mag
            } else {
                -mag
            }
        })
        .collect();
    if k == 1 {
        // 1-dimensional sphere is exactly {-1, 1}
        g[0] = g[0].signum();
    } else {
        let norm = alpha_norm_of(&g, alpha);
        g.iter_mut().for_each(|v| *v /= norm);
    }
    if target == NetTarget::UnitBall {
        let r = rng.random::<f64>().powf(1.0 / k as f64);
        g.iter_mut().for_each(|v| *v *= r);
    }
    g
}

/// Random `k`-subset of `{0, .., N-1}`, sorted.
pub fn sample_support<R: Rng + ?Sized>(dim: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut s = rand::seq::index::sample(rng, dim, k).into_vec();
    s.sort_unstable();
    s
}

/// Random point of the sparse target set in `R^N`.
pub fn sample_sparse_target<R: Rng + ?Sized>(
    alpha: f64,
    k: usize,
    dim: usize,
    target: NetTarget,
    rng: &mut R,
) -> SparseVector {
    let support = sample_support(dim, k, rng);
    let values = sample_target(alpha, k, target, rng);
    SparseVector::from_support(dim, &support, &values).expect("support within dimension")
}

/// Net points sharing one support.
#[derive(Clone, Debug, PartialEq)]
pub struct NetGroup {
    pub support: Vec<usize>,
    /// Coordinates on `support`, one `k`-vector per point.
    pub points: Vec<Vec<f64>>,
}

/// A finite ε-separated subset of the sparse target set.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsilonNet {
    pub alpha: f64,
    pub epsilon: f64,
    pub k: usize,
    pub dim: usize,
    pub target: NetTarget,
    pub groups: Vec<NetGroup>,
}

#[derive(Clone, Copy, Debug)]
pub struct NetLimits {
    pub support_cap: u64,
    pub point_cap: usize,
}

impl Default for NetLimits {
    fn default() -> Self {
        Self {
            support_cap: DEFAULT_SUPPORT_CAP,
            point_cap: DEFAULT_POINT_CAP,
        }
    }
}

/// Accepted points of one support, bucketed into cubes of side ε.
///
/// Each coordinate gap is at most the α-distance, so any point within ε of a
/// candidate lies in one of the `3^k` neighbouring cubes. Above
/// `MAX_BUCKET_K` that neighbourhood outgrows a linear scan.
struct Packing {
    alpha: f64,
    threshold: f64,
    cell: f64,
    points: Vec<Vec<f64>>,
    buckets: Option<HashMap<Vec<i64>, Vec<usize>>>,
    key: Vec<i64>,
}

const MAX_BUCKET_K: usize = 6;

impl Packing {
    fn new(alpha: f64, epsilon: f64, k: usize) -> Self {
        Self {
            alpha,
            threshold: epsilon.powf(alpha),
            cell: epsilon,
            points: Vec::new(),
            buckets: (k <= MAX_BUCKET_K).then(HashMap::new),
            key: vec![0; k],
        }
    }

    fn cell_of(&self, x: &[f64]) -> Vec<i64> {
        x.iter().map(|v| (v / self.cell).floor() as i64).collect()
    }

    /// No accepted point closer than ε; with `strict`, none within ε.
    fn is_separated(&mut self, x: &[f64], strict: bool) -> bool {
        let (alpha, threshold) = (self.alpha, self.threshold);
        let too_close = |d: f64| if strict { d <= threshold } else { d < threshold };
        let Some(buckets) = &self.buckets else {
            return !self
                .points
                .iter()
                .any(|a| too_close(alpha_power_distance(a, x, alpha)));
        };
        let base = self.cell_of(x);
        let k = base.len();
        let mut offset = vec![-1i64; k];
        loop {
            for ((slot, b), o) in self.key.iter_mut().zip(&base).zip(&offset) {
                *slot = b + o;
            }
            if let Some(ids) = buckets.get(self.key.as_slice()) {
                if ids
                    .iter()
                    .any(|&i| too_close(alpha_power_distance(&self.points[i], x, alpha)))
                {
                    return false;
                }
            }
            let mut d = k;
            loop {
                if d == 0 {
                    return true;
                }
                d -= 1;
                offset[d] += 1;
                if offset[d] <= 1 {
                    break;
                }
                offset[d] = -1;
            }
        }
    }

    fn push(&mut self, x: Vec<f64>) {
        if self.buckets.is_some() {
            let key = self.cell_of(&x);
            let id = self.points.len();
            self.buckets.as_mut().unwrap().entry(key).or_default().push(id);
        }
        self.points.push(x);
    }

    fn offer(&mut self, x: &[f64], strict: bool, point_cap: usize, epsilon: f64) -> Result<bool> {
        if !self.is_separated(x, strict) {
            return Ok(false);
        }
        self.push(x.to_vec());
        if self.points.len() > point_cap {
            return Err(Error::capacity(format!(
                "net for one support exceeded the point cap {point_cap} \
                 (ε = {epsilon} is too small for this k)"
            )));
        }
        Ok(true)
    }
}

/// Greedy random packing of one `k`-dimensional target, finished by a
/// lattice sweep.
fn pack_support(
    alpha: f64,
    epsilon: f64,
    k: usize,
    target: NetTarget,
    budget: usize,
    point_cap: usize,
    rng: &mut StreamRng,
) -> Result<Vec<Vec<f64>>> {
    let mut packing = Packing::new(alpha, epsilon, k);
    if target == NetTarget::UnitBall {
        packing.push(vec![0.0; k]);
    }
    let mut rejections = 0;
    while rejections < budget {
        let candidate = sample_target(alpha, k, target, rng);
        if packing.offer(&candidate, false, point_cap, epsilon)? {
            rejections = 0;
        } else {
            rejections += 1;
        }
    }
    complete_on_lattice(k, target, point_cap, epsilon, &mut packing)?;
    Ok(packing.points)
}

/// Largest number of lattice candidates swept per support.
const LATTICE_CAP: usize = 1 << 20;
/// Finest lattice resolution per axis.
const LATTICE_MAX_SIDE: usize = 1025;

/// Offers every point of a regular lattice over `[-1, 1]^k` (pulled onto the
/// target) to the packing, in lexicographic order; only candidates strictly
/// outside every ε-ball are taken. Random candidates rarely
/// land in the small uncovered notches between non-convex balls; the sweep
/// fills every notch that contains a lattice point. Skipped when fewer than
/// five points per axis fit under `LATTICE_CAP`, and for the finite
/// 1-dimensional sphere.
fn complete_on_lattice(
    k: usize,
    target: NetTarget,
    point_cap: usize,
    epsilon: f64,
    packing: &mut Packing,
) -> Result<()> {
    if k == 1 && target == NetTarget::UnitSphere {
        return Ok(());
    }
    let alpha = packing.alpha;
    let per_axis = ((LATTICE_CAP as f64).powf(1.0 / k as f64).floor() as usize).min(LATTICE_MAX_SIDE);
    let half = (per_axis.saturating_sub(1)) / 2;
    if half < 2 {
        return Ok(());
    }
    let step = 1.0 / half as f64;
    let side = 2 * half + 1;
    let mut idx = vec![0usize; k];
    let mut candidate = vec![0.0; k];
    loop {
        for (c, &i) in candidate.iter_mut().zip(&idx) {
            *c = (i as f64 - half as f64) * step;
        }
        let norm = alpha_norm_of(&candidate, alpha);
        let on_target = match target {
            NetTarget::UnitBall => norm <= 1.0,
            NetTarget::UnitSphere => {
                if norm > 0.0 {
                    candidate.iter_mut().for_each(|v| *v /= norm);
                }
                norm > 0.0
            }
        };
        if on_target {
            packing.offer(&candidate, true, point_cap, epsilon)?;
        }
        let mut d = k;
        loop {
            if d == 0 {
                return Ok(());
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < side {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Builds an ε-separated net support by support; support `i` draws from
/// `stream.child(i)`. A support stops after `budget` consecutive rejections.
pub fn build_net(
    alpha: f64,
    epsilon: f64,
    k: usize,
    dim: usize,
    target: NetTarget,
    budget: usize,
    stream: &Stream,
) -> Result<EpsilonNet> {
    build_net_with_limits(alpha, epsilon, k, dim, target, budget, stream, NetLimits::default())
}

#[allow(clippy::too_many_arguments)]
pub fn build_net_with_limits(
    alpha: f64,
    epsilon: f64,
    k: usize,
    dim: usize,
    target: NetTarget,
    budget: usize,
    stream: &Stream,
    limits: NetLimits,
) -> Result<EpsilonNet> {
    open_interval("alpha", alpha, 0.0, 1.0)?;
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::domain(format!(
            "epsilon = {epsilon} violates the constraint epsilon ∈ (0, 1]"
        )));
    }
    if budget == 0 {
        return Err(Error::domain("rejection budget must be ≥ 1"));
    }
    let supports: Vec<Vec<usize>> = enumerate_supports(dim, k, limits.support_cap)?.collect();
    let groups = supports
        .into_par_iter()
        .enumerate()
        .map(|(i, support)| {
            let mut rng = stream.child(i).rng();
            let points = pack_support(alpha, epsilon, k, target, budget, limits.point_cap, &mut rng)?;
            Ok(NetGroup { support, points })
        })
        .collect::<Result<Vec<_>>>()?;
    let net = EpsilonNet {
        alpha,
        epsilon,
        k,
        dim,
        target,
        groups,
    };
    if net.len() > limits.point_cap {
        return Err(Error::capacity(format!(
            "net has {} points, exceeding the point cap {}",
            net.len(),
            limits.point_cap
        )));
    }
    Ok(net)
}

#[derive(Serialize, Deserialize)]
struct NetPointJson {
    support: Vec<usize>,
    values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NetJson {
    alpha: f64,
    epsilon: f64,
    k: usize,
    dim: usize,
    target: NetTarget,
    points: Vec<NetPointJson>,
}

impl EpsilonNet {
    pub fn len(&self) -> usize {
        self.groups.iter().map(|g| g.points.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every point as an `N`-dimensional sparse vector.
    pub fn points(&self) -> impl Iterator<Item = SparseVector> + '_ {
        self.groups.iter().flat_map(move |g| {
            g.points.iter().map(move |v| {
                SparseVector::from_support(self.dim, &g.support, v).expect("valid net point")
            })
        })
    }

    /// Dense `N`-vectors of all points, in group order.
    pub fn dense_points(&self) -> Vec<Vec<f64>> {
        self.points().map(|p| p.entries().to_vec()).collect()
    }

    /// Checks membership, sparsity and per-support separation.
    pub fn validate(&self) -> Result<()> {
        open_interval("alpha", self.alpha, 0.0, 1.0)?;
        check_k_dim(self.k, self.dim)?;
        let threshold = self.epsilon.powf(self.alpha);
        for g in &self.groups {
            if g.support.len() != self.k
                || g.support.windows(2).any(|w| w[0] >= w[1])
                || g.support.iter().any(|&j| j >= self.dim)
            {
                return Err(Error::domain(format!("invalid support {:?}", g.support)));
            }
            for (i, p) in g.points.iter().enumerate() {
                if p.len() != self.k {
                    return Err(Error::DimensionMismatch {
                        expected: self.k,
                        actual: p.len(),
                    });
                }
                let norm = alpha_norm_of(p, self.alpha);
                let inside = match self.target {
                    NetTarget::UnitBall => norm <= 1.0 + SPHERE_TOLERANCE,
                    NetTarget::UnitSphere => (norm - 1.0).abs() <= SPHERE_TOLERANCE,
                };
                if !inside {
                    return Err(Error::domain(format!(
                        "net point {p:?} with ‖x‖_α = {norm} is outside the {:?}",
                        self.target
                    )));
                }
                if let Some(q) = g.points[..i]
                    .iter()
                    .find(|q| alpha_power_distance(p, q, self.alpha) < threshold)
                {
                    return Err(Error::domain(format!(
                        "net points {q:?} and {p:?} are closer than ε = {}",
                        self.epsilon
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = NetJson {
            alpha: self.alpha,
            epsilon: self.epsilon,
            k: self.k,
            dim: self.dim,
            target: self.target,
            points: self
                .groups
                .iter()
                .flat_map(|g| {
                    g.points.iter().map(|v| NetPointJson {
                        support: g.support.clone(),
                        values: v.clone(),
                    })
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Parses and validates; consecutive points with the same support form a group.
    pub fn from_json(s: &str) -> Result<Self> {
        let doc: NetJson = serde_json::from_str(s)?;
        let mut groups: Vec<NetGroup> = Vec::new();
        for pt in doc.points {
            match groups.last_mut() {
                Some(g) if g.support == pt.support => g.points.push(pt.values),
                _ => groups.push(NetGroup {
                    support: pt.support,
                    points: vec![pt.values],
                }),
            }
        }
        let net = Self {
            alpha: doc.alpha,
            epsilon: doc.epsilon,
            k: doc.k,
            dim: doc.dim,
            target: doc.target,
            groups,
        };
        net.validate()?;
        Ok(net)
    }
}

/// Result of sampling the target and measuring distance to the net.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetCoverage {
    pub coverage_rate: f64,
    /// Largest observed nearest-point distance (infinite for an empty net).
    pub worst_gap: f64,
    pub trials: usize,
}

/// Nearest-point distance from `x` to any of `points`, in α-power space.
fn nearest_power_distance(points: &[Vec<f64>], x: &[f64], alpha: f64) -> f64 {
    points
        .iter()
        .map(|p| alpha_power_distance(p, x, alpha))
        .fold(f64::INFINITY, f64::min)
}

/// Samples `trials` target points (trial `i` from `stream.child(i)`) and
/// reports the fraction within ε of the net.
pub fn verify_net(net: &EpsilonNet, trials: usize, stream: &Stream) -> Result<NetCoverage> {
    if trials == 0 {
        return Err(Error::domain("verify_net requires trials ≥ 1"));
    }
    let points = net.dense_points();
    let threshold = net.epsilon.powf(net.alpha);
    let (covered, worst) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.child(i).rng();
            let x = sample_sparse_target(net.alpha, net.k, net.dim, net.target, &mut rng);
            let d = nearest_power_distance(&points, x.entries(), net.alpha);
            ((d <= threshold) as usize, d)
        })
        .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    let worst_gap = if worst.is_infinite() {
        f64::INFINITY
    } else {
        worst.powf(1.0 / net.alpha)
    };
    Ok(NetCoverage {
        coverage_rate: covered as f64 / trials as f64,
        worst_gap,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn quasinorm_examples() {
        let e1 = SparseVector::basis(7, 3).unwrap();
        assert_relative_eq!(alpha_quasinorm(&e1, 0.5).unwrap(), 1.0);
        let ones = SparseVector::new(vec![1.0, 1.0], 2).unwrap();
        assert_relative_eq!(alpha_quasinorm(&ones, 0.5).unwrap(), 4.0, max_relative = 1e-15);
        assert_eq!(alpha_quasinorm(&SparseVector::zeros(4, 1).unwrap(), 0.3).unwrap(), 0.0);
        assert!(alpha_quasinorm(&ones, 1.0).is_err());
    }

    #[test]
    fn sparse_vector_invariants() {
        assert!(SparseVector::new(vec![1.0, 2.0, 0.0], 1).is_err());
        assert!(SparseVector::new(vec![1.0, 2.0], 3).is_err());
        assert!(SparseVector::new(vec![f64::NAN], 1).is_err());
        let v = SparseVector::from_support(5, &[1, 4], &[2.0, -1.0]).unwrap();
        assert_eq!(v.support(), vec![1, 4]);
        assert_eq!(v.nnz(), 2);
        assert!(SparseVector::from_support(3, &[3], &[1.0]).is_err());
    }

    #[test]
    fn constants() {
        assert_relative_eq!(quasi_triangle_constant(0.5).unwrap(), 2.0);
        assert_relative_eq!(quasi_triangle_constant(0.25).unwrap(), 8.0);
        assert_relative_eq!(quasi_triangle_constant(1.0 - 1e-12).unwrap(), 1.0, max_relative = 1e-10);
        assert_relative_eq!(net_constant(0.5).unwrap(), 10.0);
        assert!(quasi_triangle_constant(0.0).is_err());
    }

    #[test]
    fn covering_examples() {
        let b = covering_bound(0.5, 0.5, 1, 2).unwrap();
        assert_relative_eq!(b.value, 40.0, max_relative = 1e-12);
        let b = covering_bound(0.5, 0.25, 2, 5).unwrap();
        assert_relative_eq!(b.value, 16_000.0, max_relative = 1e-12);
        assert!(covering_bound(0.5, 1.0, 1, 2).is_err());
        assert!(covering_bound(0.5, 0.5, 3, 2).is_err());
    }

    #[test]
    fn covering_monotone() {
        let mut last = f64::INFINITY;
        for i in 1..20 {
            let b = covering_bound(0.4, i as f64 / 20.0, 3, 12).unwrap().log10;
            assert!(b <= last);
            last = b;
        }
        let mut last = 0.0;
        for n in 3..40 {
            let b = covering_bound(0.4, 0.3, 3, n).unwrap().log10;
            assert!(b >= last);
            last = b;
        }
    }

    #[test]
    fn binomial_examples() {
        let b = binomial_and_bound(4, 2).unwrap();
        assert_eq!(b.exact, BigUint::from(6u32));
        assert_relative_eq!(b.upper, (2.0 * E).powi(2), max_relative = 1e-12);
        let b = binomial_and_bound(17, 1).unwrap();
        assert_eq!(b.exact, BigUint::from(17u32));
        assert_relative_eq!(b.upper, E * 17.0, max_relative = 1e-12);
        let b = binomial_and_bound(9, 9).unwrap();
        assert_eq!(b.exact, BigUint::one());
        assert_relative_eq!(b.upper, E.powi(9), max_relative = 1e-12);
        // Past f64 range the comparison still goes through logs.
        let b = binomial_and_bound(5000, 2500).unwrap();
        assert!(b.upper.is_infinite());
        assert!(b.log10_exact() <= b.log10_upper);
        assert!(binomial_and_bound(3, 0).is_err());
    }

    #[test]
    fn supports_listing() {
        let all: Vec<_> = enumerate_supports(3, 2, 10).unwrap().collect();
        assert_eq!(all, vec![vec![0, 1], vec![0, 2], vec![1, 2]]);
        assert_eq!(enumerate_supports(6, 1, 10).unwrap().count(), 6);
        assert_eq!(enumerate_supports(4, 4, 10).unwrap().count(), 1);
        assert_eq!(enumerate_supports(12, 5, 10_000).unwrap().count(), 792);
        let err = enumerate_supports(40, 20, 1_000_000).unwrap_err();
        assert!(err.to_string().contains("137846528820"), "{err}");
    }

    #[test]
    fn target_samples_lie_in_target() {
        let mut rng = Stream::new(2, "targets").rng();
        for &alpha in &[0.1, 0.5, 0.9] {
            for k in 1..5 {
                for _ in 0..200 {
                    let s = sample_target(alpha, k, NetTarget::UnitSphere, &mut rng);
                    assert!((alpha_norm_of(&s, alpha) - 1.0).abs() <= SPHERE_TOLERANCE);
                    let b = sample_target(alpha, k, NetTarget::UnitBall, &mut rng);
                    assert!(alpha_norm_of(&b, alpha) <= 1.0 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn ball_radius_is_uniform() {
        // For the uniform law on a k-dimensional ball, P(‖x‖ ≤ 1/2) = 2^{-k}.
        let mut rng = Stream::new(3, "radius").rng();
        let n = 40_000;
        let inner = (0..n)
            .filter(|_| alpha_norm_of(&sample_target(0.5, 2, NetTarget::UnitBall, &mut rng), 0.5) <= 0.5)
            .count() as f64
            / n as f64;
        assert!((inner - 0.25).abs() < 0.01, "{inner}");
    }

    #[test]
    fn unit_net_is_origin() {
        let net = build_net(0.5, 1.0, 1, 1, NetTarget::UnitBall, 500, &Stream::new(1, "n")).unwrap();
        assert_eq!(net.len(), 1);
        assert_eq!(net.groups[0].points[0], vec![0.0]);
        let cov = verify_net(&net, 2000, &Stream::new(1, "v")).unwrap();
        assert_eq!(cov.coverage_rate, 1.0);
    }

    #[test]
    fn one_dimensional_packing_count() {
        for seed in 0..10 {
            let net = build_net(0.5, 0.25, 1, 1, NetTarget::UnitBall, 2000, &Stream::new(seed, "1d")).unwrap();
            net.validate().unwrap();
            assert!((5..=9).contains(&net.len()), "seed {seed}: {}", net.len());
        }
    }

    #[test]
    fn sphere_net_for_k1_is_signed_basis() {
        let net = build_net(0.5, 0.01, 1, 4, NetTarget::UnitSphere, 200, &Stream::new(0, "s")).unwrap();
        assert_eq!(net.len(), 8);
        for g in &net.groups {
            let mut vals: Vec<f64> = g.points.iter().map(|p| p[0]).collect();
            vals.sort_by(f64::total_cmp);
            assert_eq!(vals, vec![-1.0, 1.0]);
        }
    }

    #[test]
    fn empty_net_covers_nothing() {
        let net = EpsilonNet {
            alpha: 0.5,
            epsilon: 0.3,
            k: 1,
            dim: 3,
            target: NetTarget::UnitBall,
            groups: vec![],
        };
        let cov = verify_net(&net, 10, &Stream::new(0, "e")).unwrap();
        assert_eq!(cov.coverage_rate, 0.0);
        assert!(cov.worst_gap.is_infinite());
    }

    #[test]
    fn net_built_from_samples_covers_them() {
        let stream = Stream::new(4, "self");
        let trials = 50;
        let (alpha, k, dim) = (0.6, 2, 4);
        let mut groups: Vec<NetGroup> = Vec::new();
        for i in 0..trials {
            let x = sample_sparse_target(alpha, k, dim, NetTarget::UnitBall, &mut stream.child(i).rng());
            let support = x.support();
            let values: Vec<f64> = support.iter().map(|&j| x.entries()[j]).collect();
            groups.push(NetGroup { support, points: vec![values] });
        }
        let net = EpsilonNet { alpha, epsilon: 0.01, k, dim, target: NetTarget::UnitBall, groups };
        let cov = verify_net(&net, trials, &stream).unwrap();
        assert_eq!(cov.coverage_rate, 1.0);
        assert_eq!(cov.worst_gap, 0.0);
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let net = build_net(0.5, 0.5, 2, 3, NetTarget::UnitBall, 200, &Stream::new(8, "j")).unwrap();
        let back = EpsilonNet::from_json(&net.to_json().unwrap()).unwrap();
        assert_eq!(back, net);

        let mut bad = net.clone();
        let p = bad.groups[0].points[1].clone();
        bad.groups[0].points.push(p);
        assert!(EpsilonNet::from_json(&bad.to_json().unwrap()).is_err());

        let mut outside = net;
        outside.groups[0].points[0] = vec![0.9, 0.9];
        assert!(EpsilonNet::from_json(&outside.to_json().unwrap()).is_err());
    }

    #[test]
    fn net_is_deterministic() {
        let s = Stream::new(12, "det");
        let a = build_net(0.5, 0.4, 2, 4, NetTarget::UnitSphere, 300, &s).unwrap();
        let b = build_net(0.5, 0.4, 2, 4, NetTarget::UnitSphere, 300, &s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn point_cap_is_enforced() {
        let limits = NetLimits { support_cap: 100, point_cap: 50 };
        let err = build_net_with_limits(0.5, 0.01, 2, 3, NetTarget::UnitBall, 1000, &Stream::new(0, "cap"), limits)
            .unwrap_err();
        assert!(matches!(err, Error::Capacity(_)));
    }
}
