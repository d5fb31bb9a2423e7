//! Two-variable flows: a seed whose flows commute, and a generic seed
//! whose mixed derivatives disagree under the revlex splitting.

use kpn::algebra::*;
use kpn::hierarchy::*;
use kpn::pdo::Pdo;

fn seed(ctx: &CtxRef, terms: &[([i64; 2], TimePoly)]) -> Pdo {
    let mut t = vec![(MultiIndex::zero(2), TimePoly::one())];
    t.extend(
        terms
            .iter()
            .map(|(e, p)| (MultiIndex::new(e.to_vec()), p.clone())),
    );
    Pdo::from_terms(ctx, t)
}

fn main() -> kpn::Result<()> {
    let ctx = Ctx::from_config(&TruncationConfig::cli_default())?;
    let x1 = TimePoly::var(ctx.unit_slot(0));
    let x2 = TimePoly::var(ctx.unit_slot(1));

    let special = seed(&ctx, &[([-1, 0], x1.clone())]);
    let (_, defects) = integrate_flows_checked(&special)?;
    println!("1 + x_1 ∂^(-1,0): {} flow defects", defects.len());

    let generic = seed(
        &ctx,
        &[
            ([-1, 0], x2),
            ([0, -1], x1.add(&TimePoly::constant(q(2)))),
            ([-1, -1], TimePoly::one()),
        ],
    );
    let (_, defects) = integrate_flows_checked(&generic)?;
    println!("generic seed: {} flow defects", defects.len());
    if let Some(d) = defects.first() {
        println!(
            "  ∂_{} and ∂_{} disagree at ∂^{} {:?} by {}",
            d.beta, d.gamma, d.exponent, d.mono, d.value
        );
    }
    Ok(())
}
