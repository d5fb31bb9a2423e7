//! The cusp moved off the origin: a stationary rational solution whose
//! L^2 has potential -2/(x + c)^2.

use kpn::algebra::*;
use kpn::hierarchy::dress;
use kpn::krichever::certify_cusp;

fn main() -> kpn::Result<()> {
    let mut cfg = TruncationConfig::with_boxes(1, 8, 0, 2, &MultiIndex::new(vec![3]));
    cfg.x_lo = MultiIndex::new(vec![-8]);
    cfg.x_hi = MultiIndex::new(vec![7]);
    let ctx = Ctx::from_config(&cfg)?;

    let cert = certify_cusp(&ctx, &q(1), &MultiIndex::new(vec![3]))?;
    println!("certificate holds: {}", cert.holds());
    println!("indices with (L^a)_- = 0: {:?}", cert.certificate);
    let l2 = dress(&cert.dressing)?.power(&MultiIndex::new(vec![2]))?;
    println!(
        "potential of L^2 around x = 0: {:?}",
        l2.coeff(&MultiIndex::zero(1))
    );
    Ok(())
}
