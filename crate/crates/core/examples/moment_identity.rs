//! The empirical p-th moment of the measurements `Ax` against
//! `C_{α,p} (γ ‖x‖_α)^p`, for a basis vector and a random 3-sparse vector.
//!
//!     cargo run --release --example moment_identity

use rqip::geometry::{alpha_quasinorm, sample_sparse_target, NetTarget, SparseVector};
use rqip::rqip::{expected_moment, generate_matrix, moment_stat};
use rqip::stable::StableLaw;
use rqip::Stream;

fn main() -> rqip::Result<()> {
    let (rows, cols) = (1_000_000, 6);
    for (alpha, p, gamma) in [(0.5, 0.2, 1.0), (0.7, 0.3, 2.0)] {
        let law = StableLaw::new(alpha, gamma)?;
        let stream = Stream::new(11, format!("example/moments/{alpha}"));
        let matrix = generate_matrix(law, rows, cols, &stream)?;
        let sparse = sample_sparse_target(alpha, 3, cols, NetTarget::UnitBall, &mut stream.child("x").rng());
        for (name, x) in [("e_1", SparseVector::basis(cols, 0)?), ("3-sparse", sparse)] {
            let empirical = moment_stat(&matrix, &x, p)?;
            let exact = expected_moment(&law, &x, p)?;
            println!(
                "α={alpha} p={p} γ={gamma} x={name:<8} ‖x‖_α={:.4}  empirical {empirical:.5}  closed form {exact:.5}  ratio {:.4}",
                alpha_quasinorm(&x, alpha)?,
                empirical / exact
            );
        }
    }
    Ok(())
}
