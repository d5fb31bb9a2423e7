mod common;

use common::{mi, naive};
use kpn::algebra::*;
use kpn::pdo::{Part, Pdo};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn ctx2() -> CtxRef {
    Ctx::plain(2, &[mi(&[1, 0]), mi(&[0, 1]), mi(&[1, 1])], 2, 6).unwrap()
}

fn ctx1() -> CtxRef {
    Ctx::plain(1, &[mi(&[1]), mi(&[2])], 2, 7).unwrap()
}

fn random_op(ctx: &CtxRef, rng: &mut ChaCha8Rng, order: i64, deg: u32, terms: usize) -> Pdo {
    let n = ctx.n;
    let r = mi(&vec![order; n]);
    let exps = MultiIndex::box_iter(&-&r, &r);
    let mut out = Vec::new();
    for _ in 0..terms {
        let e = exps[rng.gen_range(0..exps.len())].clone();
        let mut p = TimePoly::zero();
        for _ in 0..2 {
            let mut m = Mono::ONE;
            for _ in 0..rng.gen_range(0..=deg) {
                let k = rng.gen_range(0..ctx.nt());
                m = m.with(k, m.get(k) + 1);
            }
            p.add_term(m, qf(rng.gen_range(-4..=4), rng.gen_range(1..=3)));
        }
        out.push((e, p));
    }
    Pdo::from_terms(ctx, out)
}

fn units(ctx: &CtxRef) -> Vec<usize> {
    (0..ctx.n).map(|i| ctx.unit_slot(i)).collect()
}

/// Every term the pipeline claims to know matches the naive product, and
/// every naive term in the known region is present.
fn agrees_with_naive(a: &Pdo, b: &Pdo) -> Result<(), String> {
    let ctx = a.ctx();
    let p = a.mul(b).map_err(|e| e.to_string())?;
    let o = naive::mul(&naive::from_pdo(a), &naive::from_pdo(b), &units(ctx));
    let o = naive::to_pdo(&ctx.unwindowed(), &o);
    for (e, tp) in o.terms() {
        for (m, c) in tp.iter() {
            if p.knows(m, e) && p.coeff(e).coeff(m) != *c {
                return Err(format!(
                    "∂^{e} {m:?}: pipeline {} naive {c}",
                    p.coeff(e).coeff(m)
                ));
            }
        }
    }
    for (e, tp) in p.terms() {
        for (m, c) in tp.iter() {
            if o.coeff(e).coeff(m) != *c {
                return Err(format!(
                    "∂^{e} {m:?}: pipeline {c} naive {}",
                    o.coeff(e).coeff(m)
                ));
            }
        }
    }
    Ok(())
}

#[test]
fn product_matches_naive_leibniz_one_variable() {
    let ctx = ctx1();
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_op(&ctx, &mut rng, 3, 3, 3);
        let b = random_op(&ctx, &mut rng, 3, 3, 3);
        agrees_with_naive(&a, &b).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

#[test]
fn product_matches_naive_leibniz_two_variables() {
    let ctx = ctx2();
    for seed in 0..40 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_op(&ctx, &mut rng, 2, 3, 3);
        let b = random_op(&ctx, &mut rng, 2, 3, 3);
        agrees_with_naive(&a, &b).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}

#[test]
fn adjoint_matches_naive() {
    let ctx = ctx2();
    for seed in 0..30 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_op(&ctx, &mut rng, 2, 3, 4);
        let got = a.adjoint().unwrap();
        let want = naive::to_pdo(
            &ctx.unwindowed(),
            &naive::adjoint(&naive::from_pdo(&a), &units(&ctx)),
        );
        for (e, tp) in want.terms() {
            for (m, c) in tp.iter() {
                if got.knows(m, e) {
                    assert_eq!(got.coeff(e).coeff(m), *c, "seed {seed} ∂^{e} {m:?}");
                }
            }
        }
        assert!(
            got.sub(&want).unwrap().is_zero() || got.eq_on_common(&want).unwrap(),
            "seed {seed}"
        );
    }
}

#[test]
fn inverse_of_x_dinv() {
    let ctx = ctx1();
    let x = Mono::ONE.with(ctx.unit_slot(0), 1);
    let s = Pdo::from_terms(
        &ctx,
        vec![
            (mi(&[0]), TimePoly::one()),
            (mi(&[-1]), TimePoly::monomial(x, q(1))),
        ],
    );
    let inv = s.invert().unwrap();
    assert!(s.mul(&inv).unwrap().eq_on_common(&Pdo::one(&ctx)).unwrap());
    assert!(inv.mul(&s).unwrap().eq_on_common(&Pdo::one(&ctx)).unwrap());
    assert_eq!(inv.coeff(&mi(&[-1])), TimePoly::monomial(x, q(-1)));
    let o = naive::mul(&naive::from_pdo(&s), &naive::from_pdo(&inv), &units(&ctx));
    let o = naive::to_pdo(&ctx, &o);
    assert!(o.eq_on_common(&Pdo::one(&ctx)).unwrap());
}

#[test]
fn d_inverse_is_a_two_sided_inverse() {
    for n in [1usize, 2] {
        let times: Vec<MultiIndex> = (0..n).map(|i| MultiIndex::unit(n, i)).collect();
        let ctx = Ctx::plain(n, &times, 0, 6).unwrap();
        for i in 0..n {
            let d = Pdo::d(&ctx, i);
            let dinv = Pdo::monomial(&ctx, -&MultiIndex::unit(n, i), TimePoly::one());
            assert!(d.mul(&dinv).unwrap().eq_on_common(&Pdo::one(&ctx)).unwrap());
            assert!(dinv.mul(&d).unwrap().eq_on_common(&Pdo::one(&ctx)).unwrap());
        }
    }
}

#[test]
fn leibniz_rule_for_d_times_x() {
    let ctx = ctx1();
    let x = TimePoly::var(ctx.unit_slot(0));
    let xop = Pdo::monomial(&ctx, mi(&[0]), x.clone());
    let got = Pdo::d(&ctx, 0).mul(&xop).unwrap();
    let want = Pdo::from_terms(
        &ctx,
        vec![(mi(&[1]), x.clone()), (mi(&[0]), TimePoly::one())],
    );
    assert!(got.eq_on_common(&want).unwrap());
    // ∂^{-1} x = x ∂^{-1} - ∂^{-2}
    let dinv = Pdo::monomial(&ctx, mi(&[-1]), TimePoly::one());
    let got = dinv.mul(&xop).unwrap();
    let want = Pdo::from_terms(
        &ctx,
        vec![(mi(&[-1]), x), (mi(&[-2]), TimePoly::constant(q(-1)))],
    );
    assert!(got.eq_on_common(&want).unwrap());
}

#[test]
fn split_is_exhaustive_on_a_box() {
    for mode in [SplitMode::Revlex, SplitMode::Componentwise] {
        let ctx = ctx2().with_split(mode);
        let all = Pdo::from_terms(
            &ctx,
            MultiIndex::box_iter(&mi(&[-2, -2]), &mi(&[2, 2]))
                .into_iter()
                .map(|e| (e, TimePoly::one()))
                .collect(),
        );
        let plus = all.split(Part::Plus);
        let minus = all.split(Part::Minus);
        assert_eq!(plus.n_terms() + minus.n_terms(), all.n_terms());
        assert!(plus.add(&minus).unwrap().eq_on_common(&all).unwrap());
        for (e, _) in plus.terms() {
            assert!(minus.coeff(e).is_zero());
        }
        assert!(!plus.coeff(&mi(&[0, 0])).is_zero());
    }
    let ctx = ctx2();
    let p = Pdo::monomial(&ctx, mi(&[-1, 1]), TimePoly::one());
    assert_eq!(p.plus().n_terms(), 1);
    let m = Pdo::monomial(&ctx, mi(&[1, -1]), TimePoly::one());
    assert_eq!(m.minus().n_terms(), 1);
}

#[test]
fn adjoint_of_d_and_x() {
    let ctx = ctx1();
    let d = Pdo::d(&ctx, 0);
    assert!(d.adjoint().unwrap().eq_on_common(&d.neg()).unwrap());
    let x = Pdo::monomial(&ctx, mi(&[0]), TimePoly::var(ctx.unit_slot(0)));
    let xd = x.mul(&d).unwrap();
    // (x∂)* = -∂x = -x∂ - 1
    let want = xd.neg().sub(&Pdo::one(&ctx)).unwrap();
    assert!(xd.adjoint().unwrap().eq_on_common(&want).unwrap());
}

fn arb_op(ctx: CtxRef) -> impl Strategy<Value = Pdo> {
    any::<u64>().prop_map(move |s| {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        random_op(&ctx, &mut rng, 2, 2, 3)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multiplication_is_associative(a in arb_op(ctx2()), b in arb_op(ctx2()), c in arb_op(ctx2())) {
        let l = a.mul(&b).unwrap().mul(&c).unwrap();
        let r = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(l.eq_on_common(&r).unwrap());
    }

    #[test]
    fn multiplication_distributes(a in arb_op(ctx2()), b in arb_op(ctx2()), c in arb_op(ctx2())) {
        let l = a.mul(&b.add(&c).unwrap()).unwrap();
        let r = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(l.eq_on_common(&r).unwrap());
        let l = b.add(&c).unwrap().mul(&a).unwrap();
        let r = b.mul(&a).unwrap().add(&c.mul(&a).unwrap()).unwrap();
        prop_assert!(l.eq_on_common(&r).unwrap());
    }

    #[test]
    fn one_is_neutral(a in arb_op(ctx2())) {
        let one = Pdo::one(a.ctx());
        prop_assert!(a.mul(&one).unwrap().eq_on_common(&a).unwrap());
        prop_assert!(one.mul(&a).unwrap().eq_on_common(&a).unwrap());
    }

    #[test]
    fn adjoint_reverses_products(a in arb_op(ctx2()), b in arb_op(ctx2())) {
        let l = a.mul(&b).unwrap().adjoint().unwrap();
        let r = b.adjoint().unwrap().mul(&a.adjoint().unwrap()).unwrap();
        prop_assert!(l.eq_on_common(&r).unwrap());
        prop_assert!(a.adjoint().unwrap().adjoint().unwrap().eq_on_common(&a).unwrap());
    }

    #[test]
    fn plus_and_minus_partition(a in arb_op(ctx2())) {
        let s = a.plus().add(&a.minus()).unwrap();
        prop_assert!(s.eq_on_common(&a).unwrap());
        prop_assert!(a.plus().minus().is_zero());
        prop_assert!(a.minus().plus().is_zero());
    }

    #[test]
    fn unipotent_inverse(seed in any::<u64>()) {
        let ctx = ctx2();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zero = MultiIndex::zero(2);
        let r = random_op(&ctx, &mut rng, 2, 2, 3);
        let r = Pdo::from_terms(&ctx, r.terms().filter(|(e, _)| e.proper_subset_of(&zero)).map(|(e, p)| (e.clone(), p.clone())).collect());
        let s = Pdo::one(&ctx).add(&r).unwrap();
        let inv = s.invert().unwrap();
        prop_assert!(s.mul(&inv).unwrap().eq_on_common(&Pdo::one(&ctx)).unwrap());
        prop_assert!(inv.mul(&s).unwrap().eq_on_common(&Pdo::one(&ctx)).unwrap());
    }
}
