//! Rows required by the sample-complexity bound, in log10.
//!
//!     cargo run --example sample_complexity

use rqip::rqip::{sample_complexity, ComplexityInputs, ComplexityMode};

fn main() -> rqip::Result<()> {
    let base = ComplexityInputs {
        dim: 4,
        k: 1,
        delta: 0.5,
        eta: 0.5,
        p: 0.25,
        alpha: 0.5,
        c0: 0.25,
        c_con: 1.0,
    };
    for (dim, k) in [(4, 1), (100, 2), (1000, 5), (100_000, 10)] {
        let inputs = ComplexityInputs { dim, k, ..base };
        let loose = sample_complexity(&inputs, ComplexityMode::EnOverK)?;
        let exact = sample_complexity(&inputs, ComplexityMode::BinomialExact)?;
        println!(
            "N={dim:<7} k={k:<3} log10 M = {:.4} with (eN/k)^k, {:.4} with C(N,k)",
            loose.log10_m, exact.log10_m
        );
    }
    // C_con is a convention: M scales as C_con^(1/c_con)
    for c_con in [0.1, 1.0, 10.0] {
        let s = sample_complexity(&ComplexityInputs { c_con, ..base }, ComplexityMode::EnOverK)?;
        println!("C_con = {c_con:<4} log10 M = {:.4}", s.log10_m);
    }
    Ok(())
}
