//! Monte-Carlo oracles for the closed forms the acceptance suite relies on.

use rqip::concentration::{
    combined_bound, estimate_deviation_probability, ConcentrationParams, DeviationSeries,
};
use rqip::geometry::{alpha_quasinorm, sample_sparse_target, NetTarget, SparseVector};
use rqip::rqip::{generate_matrix, moment_stat, rqip_check, rqip_deviation, RqipConfig, Strategy};
use rqip::stable::{stable_abs_moment_constant, stable_tail_constant, StableLaw};
use rqip::Stream;

/// `n` draws, generated in parallel blocks.
fn draws(law: StableLaw, n: usize, stream: &Stream) -> Vec<f64> {
    generate_matrix(law, n, 1, stream).unwrap().entries().to_vec()
}

fn mean_abs_pow(v: &[f64], p: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(p)).sum::<f64>() / v.len() as f64
}

#[test]
fn moment_constant_half_quarter_three_seeds() {
    let law = StableLaw::standard(0.5).unwrap();
    let exact = stable_abs_moment_constant(0.5, 0.25).unwrap();
    assert!((exact - 1.567).abs() < 0.02);
    for seed in 0..3 {
        let v = draws(law, 10_000_000, &Stream::new(seed, "mc/moment-constant"));
        let m = mean_abs_pow(&v, 0.25);
        assert!((m - exact).abs() < 0.02, "seed {seed}: {m} vs {exact}");
    }
}

#[test]
fn moment_constant_near_one() {
    let law = StableLaw::standard(0.9).unwrap();
    let exact = stable_abs_moment_constant(0.9, 0.45).unwrap();
    let v = draws(law, 10_000_000, &Stream::new(9, "mc/moment-constant-0.9"));
    let m = mean_abs_pow(&v, 0.45);
    assert!((m / exact - 1.0).abs() < 0.01, "{m} vs {exact}");
}

#[test]
fn tail_constant_regression() {
    let alpha = 0.5;
    let mut v: Vec<f64> = draws(StableLaw::standard(alpha).unwrap(), 10_000_000, &Stream::new(2, "mc/tail"))
        .into_iter()
        .map(f64::abs)
        .collect();
    v.sort_by(f64::total_cmp);
    // P(|X| > t) = C t^-α + D t^-2α + O(t^-3α); at t = 10 the second term is ~13% of the first,
    // so fit t^α P̂ = C + D t^-α instead of a bare power law
    let pts: Vec<(f64, f64)> = (0..=30)
        .map(|i| {
            let t = 10f64.powf(1.0 + 3.0 * i as f64 / 30.0);
            let above = v.len() - v.partition_point(|&x| x <= t);
            (t.powf(-alpha), above as f64 / v.len() as f64 * t.powf(alpha))
        })
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let d_hat = sxy / sxx;
    let c_hat = my - d_hat * mx;
    let c = stable_tail_constant(alpha).unwrap();
    assert!((c_hat / c - 1.0).abs() < 0.10, "fitted {c_hat} vs {c}");
    // second coefficient of the symmetric α = 1/2 expansion is -1/π
    assert!((d_hat + std::f64::consts::FRAC_1_PI).abs() < 0.1, "second coefficient {d_hat}");
}

#[test]
fn sign_symmetry() {
    let law = StableLaw::standard(0.5).unwrap();
    let p = 0.2;
    let mut prev_se = f64::INFINITY;
    for n in [10_000, 100_000, 1_000_000] {
        let v = draws(law, n, &Stream::new(n as u64, "mc/sign"));
        let side = |positive: bool| -> (f64, f64, usize) {
            let xs: Vec<f64> = v.iter().filter(|x| (**x > 0.0) == positive).map(|x| x.abs().powf(p)).collect();
            let m = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            (m, var, xs.len())
        };
        let (mp, vp, np) = side(true);
        let (mn, vn, nn) = side(false);
        let se = (vp / np as f64 + vn / nn as f64).sqrt();
        assert!((mp - mn).abs() <= 3.0 * se, "n = {n}: {mp} vs {mn}, se {se}");
        assert!(se < prev_se);
        prev_se = se;
        let frac = np as f64 / n as f64;
        assert!((frac - 0.5).abs() < 3.0 * (0.25 / n as f64).sqrt() + 1e-12, "positive fraction {frac}");
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    sorted[((sorted.len() - 1) as f64 * q).round() as usize]
}

#[test]
fn projection_is_stable_with_alpha_norm_scale() {
    let law = StableLaw::standard(0.5).unwrap();
    let stream = Stream::new(6, "mc/projection");
    let (rows, cols) = (1_000_000, 6);
    let m = generate_matrix(law, rows, cols, &stream).unwrap();
    let x = sample_sparse_target(0.5, 3, cols, NetTarget::UnitBall, &mut stream.child("x").rng());
    let norm = alpha_quasinorm(&x, 0.5).unwrap();
    let mut y: Vec<f64> = (0..rows)
        .map(|i| m.row(i).iter().zip(x.entries()).map(|(a, b)| a * b).sum::<f64>().abs() / norm)
        .collect();
    let mut z: Vec<f64> = draws(law, rows, &Stream::new(6, "mc/projection-reference"))
        .into_iter()
        .map(f64::abs)
        .collect();
    y.sort_by(f64::total_cmp);
    z.sort_by(f64::total_cmp);
    for q in [0.1, 0.25, 0.5, 0.75, 0.9] {
        let (a, b) = (quantile(&y, q), quantile(&z, q));
        assert!((a / b - 1.0).abs() < 0.03, "quantile {q}: {a} vs {b}");
    }
}

#[test]
fn column_moment_matches_closed_form() {
    let law = StableLaw::new(0.5, 1.5).unwrap();
    let m = generate_matrix(law, 1_000_000, 1, &Stream::new(8, "mc/column")).unwrap();
    let stat = moment_stat(&m, &SparseVector::basis(1, 0).unwrap(), 0.2).unwrap();
    let exact = law.abs_moment(0.2).unwrap();
    assert!((stat / exact - 1.0).abs() < 0.02, "{stat} vs {exact}");
}

#[test]
fn two_sparse_deviation_is_small_at_large_m() {
    let law = StableLaw::standard(0.5).unwrap();
    let mut small = 0;
    for seed in 0..100 {
        let stream = Stream::new(seed, "mc/two-sparse");
        let m = generate_matrix(law, 100_000, 2, &stream).unwrap();
        let x = sample_sparse_target(0.5, 2, 2, NetTarget::UnitSphere, &mut stream.child("x").rng());
        if rqip_deviation(&m, &x, 0.2).unwrap() < 0.1 {
            small += 1;
        }
    }
    assert!(small >= 95, "{small}/100 below 0.1");
}

#[test]
fn k1_check_passes_on_ten_seeds() {
    let law = StableLaw::standard(0.5).unwrap();
    let cfg = RqipConfig::new(&law, 1, 0.5, 0.2, 8).unwrap();
    assert_eq!(cfg.strategy, Strategy::Net);
    for seed in 0..10 {
        let m = generate_matrix(law, 100_000, 8, &Stream::new(seed, "mc/k1")).unwrap();
        let r = rqip_check(&m, &cfg).unwrap();
        assert!(r.passed, "seed {seed}: max D {}", r.max_deviation);
    }
}

fn half_quarter() -> ConcentrationParams {
    ConcentrationParams::new(StableLaw::standard(0.5).unwrap(), 0.25).unwrap()
}

#[test]
fn huge_epsilon_is_rarely_exceeded() {
    let params = ConcentrationParams::new(StableLaw::standard(0.5).unwrap(), 0.1).unwrap();
    let e = estimate_deviation_probability(&params, 1e6, 10_000, 100, &Stream::new(1, "mc/huge-eps")).unwrap();
    assert!(e.p_hat <= 0.01);
}

#[test]
fn bound_holds_where_it_is_informative() {
    // at ε = C_{α,p} the bound drops below 1 from M = 256 on
    let params = half_quarter();
    let eps = params.mean();
    let ms = [256, 512, 1024, 2048, 4096];
    let series = DeviationSeries::estimate(&params, eps, &ms, 1000, &Stream::new(3, "mc/bound")).unwrap();
    let mut informative = 0;
    for r in &series.rows {
        let b = combined_bound(&params, eps, r.m).unwrap();
        if b.total <= 1.0 {
            informative += 1;
            assert!(r.p_hat <= b.total, "M = {}: p̂ {} > bound {}", r.m, r.p_hat, b.total);
        }
    }
    assert!(informative >= 3, "only {informative} informative rows");
}

#[test]
fn deviation_probability_trend_is_nonincreasing() {
    let params = half_quarter();
    let eps = 0.2 * params.mean();
    let ms: Vec<usize> = (8..=14).map(|e| 1usize << e).collect();
    let s = DeviationSeries::estimate(&params, eps, &ms, 2000, &Stream::new(4, "mc/trend")).unwrap();
    let inversions = s
        .rows
        .windows(2)
        .filter(|w| w[1].p_hat - 3.0 * w[1].std_err > w[0].p_hat + 3.0 * w[0].std_err)
        .count();
    assert!(inversions <= 1, "{inversions} inversions");
}

#[test]
fn std_err_scales_with_trials() {
    // a cell with p̂ near 0.3
    let params = half_quarter();
    let eps = 0.05 * params.mean();
    let a = estimate_deviation_probability(&params, eps, 256, 2000, &Stream::new(5, "mc/se-a")).unwrap();
    let b = estimate_deviation_probability(&params, eps, 256, 4000, &Stream::new(5, "mc/se-b")).unwrap();
    let c = estimate_deviation_probability(&params, eps, 256, 8000, &Stream::new(5, "mc/se-c")).unwrap();
    assert!(a.p_hat > 0.1 && a.p_hat < 0.9, "p̂ = {}", a.p_hat);
    // doubling trials divides the standard error by √2, quadrupling halves it
    assert!((b.std_err / a.std_err / std::f64::consts::FRAC_1_SQRT_2 - 1.0).abs() < 0.1);
    assert!((c.std_err / a.std_err / 0.5 - 1.0).abs() < 0.1);
}

#[test]
fn single_cell_moment_study() {
    use rqip::experiments::{run_study, MomentCell, Study, StudyConfig, StudyGrid, TestVector};
    let mut cfg = StudyConfig::default_for(Study::Moments, 11, std::env::temp_dir());
    cfg.grid = StudyGrid::Moments(vec![MomentCell {
        alpha: 0.5,
        p: 0.2,
        gamma: 1.0,
        rows: 1_000_000,
        dim: 5,
        vector: TestVector::RandomSparse { k: 3 },
        scale: 1.0,
    }]);
    let r = run_study(&cfg).unwrap();
    let rel = r.column("rel_err").unwrap();
    assert_eq!(rel.len(), 1);
    assert!(rel[0] < 0.02, "rel_err {}", rel[0]);
}
