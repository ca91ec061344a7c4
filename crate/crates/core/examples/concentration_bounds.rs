//! Truncation threshold, the two bound terms, and the `M^{-c_con}` envelope.
//!
//!     cargo run --example concentration_bounds

use rqip::concentration::{combined_bound, tail_term, truncation_threshold, ConcentrationParams};
use rqip::stable::StableLaw;

fn main() -> rqip::Result<()> {
    let params = ConcentrationParams::new(StableLaw::standard(0.5)?, 0.25)?;
    let eps = 0.5;
    println!("c_con = {}, K = {:.6}", params.c_con(), params.k_const());
    println!("envelope ratio decreasing beyond M ≈ {:.0}", params.envelope_crossover(eps));
    println!("{:>8} {:>10} {:>12} {:>12} {:>12}", "M", "T", "hoeffding", "tail", "total");
    for e in 4..=20 {
        let m = 1usize << e;
        let b = combined_bound(&params, eps, m)?;
        println!("{m:>8} {:>10.4} {:>12.4e} {:>12.4e} {:>12.4e}", b.threshold, b.hoeffding, b.tail, b.total);
    }
    // the tail term at the chosen threshold collapses to (4K/C') M^{-c_con}
    let m = 4096;
    let t = truncation_threshold(&params, eps, m)?;
    let identity = 4.0 * params.k_const() / params.c_prime() * (m as f64).powf(-params.c_con());
    println!("tail(T(M)) = {:.15}, (4K/C')M^-c_con = {identity:.15}", tail_term(&params, eps, t));
    Ok(())
}
