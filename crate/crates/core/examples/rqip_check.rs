//! Check the RQIP deviation of one random matrix with the net and the
//! brute-force strategies, then with random 2-sparse directions.
//!
//!     cargo run --release --example rqip_check

use rqip::rqip::{generate_matrix, rqip_check, RqipConfig, Strategy};
use rqip::stable::StableLaw;
use rqip::Stream;

fn main() -> rqip::Result<()> {
    let law = StableLaw::new(0.5, 1.0)?;
    let matrix = generate_matrix(law, 100_000, 8, &Stream::new(3, "example/matrix"))?;

    let cfg = RqipConfig::new(&law, 1, 0.5, 0.2, 8)?;
    let net = rqip_check(&matrix, &cfg)?;
    let brute = rqip_check(&matrix, &cfg.with_strategy(Strategy::BruteForceK1))?;
    println!(
        "k=1 {}: max D = {:.6} over {} vectors, passed = {}",
        net.config.strategy.name(),
        net.max_deviation,
        net.vectors_tested,
        net.passed
    );
    println!("k=1 brute force: max D = {:.6}, passed = {}", brute.max_deviation, brute.passed);

    let cfg2 = RqipConfig::new(&law, 2, 0.5, 0.2, 8)?;
    let report = rqip_check(&matrix, &cfg2)?;
    println!("k=2 {}: max D = {:.6}", report.config.strategy.name(), report.max_deviation);
    println!("{}", report.to_json()?);
    Ok(())
}
