//! One-variable flows from a dressing seed: L, its square and the
//! vanishing Lax residuals.

use kpn::algebra::*;
use kpn::hierarchy::*;
use kpn::pdo::Pdo;

fn main() -> kpn::Result<()> {
    let times: Vec<MultiIndex> = (1..=3).map(|k| MultiIndex::new(vec![k])).collect();
    let ctx = Ctx::plain(1, &times, 2, 7)?;
    let x = TimePoly::var(ctx.unit_slot(0));

    // S0 = 1 + x ∂^{-1}
    let s0 = Pdo::from_terms(
        &ctx,
        vec![
            (MultiIndex::zero(1), TimePoly::one()),
            (MultiIndex::new(vec![-1]), x),
        ],
    );
    let s = integrate_flows(&s0)?;
    println!("S(t) has {} terms", s.s.n_terms());
    let lax = dress(&s)?;
    let l2 = lax.power(&MultiIndex::new(vec![2]))?.plus();
    println!("(L^2)_+ = {l2:?}");
    for a in ctx.t_times() {
        let r = lax_residual(&lax, &a, 0)?;
        println!(
            "Lax residual for t_{a}: {}",
            if r.is_zero() { "0" } else { "nonzero" }
        );
    }
    Ok(())
}
