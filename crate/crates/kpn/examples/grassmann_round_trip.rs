//! A random point of the big cell, its wave function, and the point
//! recovered from that wave function.

use kpn::algebra::*;
use kpn::grassmann::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kpn::Result<()> {
    let mut cfg = TruncationConfig::with_boxes(2, 3, 0, 2, &MultiIndex::new(vec![2, 3]));
    cfg.d_box_lo = MultiIndex::new(vec![-2, -3]);
    cfg.d_box_hi = MultiIndex::new(vec![2, 3]);
    cfg.x_lo = MultiIndex::new(vec![-2, -3]);
    cfg.x_hi = MultiIndex::new(vec![2, 2]);
    let ctx = Ctx::from_config(&cfg)?;

    let spec = RandomPointSpec {
        max_tails: 2,
        max_coeff: 3,
        max_tail_order: Some(1),
    };
    let p = random_f0_point(&ctx, &mut ChaCha8Rng::seed_from_u64(7), &spec)?;
    println!(
        "point with {} basis elements, leading set {:?}",
        p.len(),
        p.leading_set()
    );

    let w = wave_from_point(&p)?;
    println!("wave symbol: {} terms", w.sym.n_terms());
    let back = point_from_wave(&w)?;
    match back.diff(&p)? {
        None => println!("round trip: identical"),
        Some(d) => println!("round trip differs: {d}"),
    }
    Ok(())
}
