//! Residue pairing of the wave function against the adjoint wave
//! function built from the orthogonal complement.

use kpn::algebra::*;
use kpn::grassmann::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> kpn::Result<()> {
    let mut cfg = TruncationConfig::with_boxes(1, 6, 0, 2, &MultiIndex::new(vec![6]));
    cfg.x_lo = MultiIndex::new(vec![-6]);
    cfg.x_hi = MultiIndex::new(vec![5]);
    let ctx = Ctx::from_config(&cfg)?;

    let spec = RandomPointSpec {
        max_tails: 2,
        max_coeff: 3,
        max_tail_order: Some(1),
    };
    for seed in 0..3 {
        let p = random_f0_point(&ctx, &mut ChaCha8Rng::seed_from_u64(seed), &spec)?;
        let (psi, _) = adjoint_wave(&k_extend(&p)?)?;
        let w = wave_from_point(&p)?;
        let r = bilinear_check(&w.w, &psi)?;
        let ba = bilinear_check(&ba_function(&p)?, &psi)?;
        println!(
            "seed {seed}: wave residue {}, BA residue {}",
            if r.is_zero() { "0" } else { "nonzero" },
            if ba.is_zero() { "0" } else { "nonzero" }
        );
    }
    Ok(())
}
