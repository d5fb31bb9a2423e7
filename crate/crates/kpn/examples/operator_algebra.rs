//! Products, inverses, adjoints and the two splittings of a
//! two-variable pseudo-differential operator.

use kpn::algebra::*;
use kpn::pdo::Pdo;

fn main() -> kpn::Result<()> {
    let cfg = TruncationConfig::with_boxes(2, 3, 3, 1, &MultiIndex::new(vec![1, 1]));
    let ctx = Ctx::from_config(&cfg)?;
    let x1 = TimePoly::var(ctx.unit_slot(0));

    // ∂_1 · x_1 = x_1 ∂_1 + 1
    let d1 = Pdo::d(&ctx, 0);
    let x = Pdo::monomial(&ctx, MultiIndex::zero(2), x1.clone());
    println!("∂_1 x_1        = {:?}", d1.mul(&x)?);

    // (1 + x_1 ∂^(0,-1))^{-1}
    let p = Pdo::one(&ctx).add(&Pdo::monomial(&ctx, MultiIndex::new(vec![0, -1]), x1))?;
    let inv = p.invert()?;
    println!("inverse        = {inv:?}");
    println!("P · P^-1 - 1   = {:?}", p.mul(&inv)?.sub(&Pdo::one(&ctx))?);
    println!("adjoint of P   = {:?}", p.adjoint()?);

    let q = Pdo::monomial(&ctx, MultiIndex::new(vec![-1, 1]), TimePoly::one());
    for mode in [SplitMode::Revlex, SplitMode::Componentwise] {
        let c = ctx.with_split(mode);
        let q = Pdo::from_terms(&c, q.terms().map(|(e, t)| (e.clone(), t.clone())).collect());
        println!("{mode:?}: ∂^(-1,1) has plus part {:?}", q.plus());
    }
    Ok(())
}
