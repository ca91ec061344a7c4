//! Build an ε-separated net of 2-sparse vectors in the ℓ_α unit ball, compare
//! its size with the covering bound and measure coverage.
//!
//!     cargo run --release --example epsilon_net

use rqip::geometry::{build_net, covering_bound, verify_net, EpsilonNet, NetTarget};
use rqip::Stream;

fn main() -> rqip::Result<()> {
    let (alpha, eps, k, dim) = (0.5, 0.25, 2, 5);
    let net = build_net(alpha, eps, k, dim, NetTarget::UnitBall, 5000, &Stream::new(5, "example/net"))?;
    net.validate()?;
    let bound = covering_bound(alpha, eps, k, dim)?;
    let cov = verify_net(&net, 10_000, &Stream::new(5, "example/verify"))?;
    println!("net size {} (bound {:.0}) over {} supports", net.len(), bound.value, net.groups.len());
    println!("coverage {} with worst gap {:.4} < ε = {eps}", cov.coverage_rate, cov.worst_gap);

    let json = net.to_json()?;
    let back = EpsilonNet::from_json(&json)?;
    assert_eq!(back, net);
    println!("JSON round trip ok ({} bytes)", json.len());
    Ok(())
}
