//! Draw SαS variates and compare empirical fractional moments and tails with
//! their closed forms.
//!
//!     cargo run --release --example sample_stable

use rqip::stable::{draw_stable, empirical_abs_moment, empirical_tail_product, StableLaw};
use rqip::Stream;

fn main() -> rqip::Result<()> {
    let law = StableLaw::new(0.5, 1.0)?;
    let batch = draw_stable(law, 200_000, &Stream::new(7, "example/sample"))?;
    println!("drew {} variates from stream {}", batch.count(), batch.stream_label());

    for p in [0.1, 0.25, 0.4] {
        let empirical = empirical_abs_moment(&batch, p)?;
        let exact = law.abs_moment(p)?;
        println!("E|X|^{p:<4} empirical {empirical:.5}  closed form {exact:.5}");
    }

    let mut mags: Vec<f64> = batch.values.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let reference = rqip::stable::stable_tail_constant(0.5)?;
    for t in [1e2, 1e4, 1e6] {
        let tp = empirical_tail_product(&mags, 0.5, t);
        println!("t^α P(|X| > t) at t = {t:e}: {tp:.4}  (limit {reference:.4})");
    }

    // first few values as CSV
    let head = rqip::stable::SampleBatch {
        values: batch.values[..5].to_vec(),
        ..batch
    };
    head.write_csv(std::io::stdout())?;
    Ok(())
}
