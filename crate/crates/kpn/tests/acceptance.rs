//! One line per acceptance criterion. All arithmetic is exact, so every
//! comparison has zero tolerance. Criteria listed in `KNOWN_FAILURES` are
//! reported as failing and must keep failing; everything else must pass.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use common::bridge::compare_with_classical;
use common::{mi, window_ctx};
use kpn::algebra::*;
use kpn::grassmann::*;
use kpn::hierarchy::*;
use kpn::krichever::*;
use kpn::pdo::{Part, Pdo};
use kpn::run::{cmd_correspondence, cmd_flow, cmd_krichever, render, RunConfig};
use kpn::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact rational arithmetic: a residual passes only if it is zero.
const TOLERANCE: i64 = 0;
const RING_OPERATORS_PER_N: usize = 102;
const SPLIT_BOX: i64 = 3;
const FLOW_SEEDS: u64 = 10;
const CLASSICAL_SEEDS: u64 = 5;
const CLASSICAL_T_DEGREE: u32 = 3;
const ROUND_TRIP_POINTS: u64 = 10;
const BILINEAR_POINTS: u64 = 3;
const DETERMINISM_RUNS: usize = 2;

/// 3: generic two-variable seeds have flows that disagree on mixed
/// derivatives under the revlex splitting; one-variable seeds all pass.
/// 7: p1-multi produces points with positive pivots, so they are not in
/// the big cell and carry no dressing operator.
const KNOWN_FAILURES: &[u32] = &[3, 7];

type Check = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Check);

fn zero(p: &Pdo, what: &str) -> Result<(), String> {
    match p.terms().next() {
        None => Ok(()),
        Some((e, tp)) => {
            let (m, c) = tp.iter().next().unwrap();
            Err(format!(
                "{what}: {c} at ∂^{e} {m:?} (tolerance {TOLERANCE})"
            ))
        }
    }
}

fn err(e: Error) -> String {
    e.to_string()
}

fn default_ctx(n: usize) -> CtxRef {
    let top = mi(&vec![if n == 3 { 1 } else { 2 }; n]);
    Ctx::from_config(&TruncationConfig::with_boxes(n, 6, 12, 3, &top)).unwrap()
}

fn random_op(ctx: &CtxRef, rng: &mut ChaCha8Rng) -> Pdo {
    let r = mi(&vec![2; ctx.n]);
    let exps = MultiIndex::box_iter(&-&r, &r);
    let mut out = Vec::new();
    for _ in 0..3 {
        let e = exps[rng.gen_range(0..exps.len())].clone();
        let mut p = TimePoly::zero();
        for _ in 0..2 {
            let mut m = Mono::ONE;
            for _ in 0..rng.gen_range(0..=2) {
                let k = rng.gen_range(0..ctx.nt());
                m = m.with(k, m.get(k) + 1);
            }
            p.add_term(m, qf(rng.gen_range(-4..=4), rng.gen_range(1..=3)));
        }
        out.push((e, p));
    }
    Pdo::from_terms(ctx, out)
}

fn criterion_1() -> Check {
    let mut count = 0;
    for n in 1..=3 {
        let ctx = default_ctx(n);
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        for k in 0..RING_OPERATORS_PER_N / 3 {
            let (a, b, c) = (
                random_op(&ctx, &mut rng),
                random_op(&ctx, &mut rng),
                random_op(&ctx, &mut rng),
            );
            let ab_c = a.mul(&b).and_then(|ab| ab.mul(&c)).map_err(err)?;
            let a_bc = b.mul(&c).and_then(|bc| a.mul(&bc)).map_err(err)?;
            zero(
                &ab_c.sub(&a_bc).map_err(err)?,
                &format!("N={n} triple {k} associativity"),
            )?;
            let left = a.mul(&b.add(&c).map_err(err)?).map_err(err)?;
            let right = a
                .mul(&b)
                .map_err(err)?
                .add(&a.mul(&c).map_err(err)?)
                .map_err(err)?;
            zero(
                &left.sub(&right).map_err(err)?,
                &format!("N={n} triple {k} left distributivity"),
            )?;
            let left = a.add(&b).map_err(err)?.mul(&c).map_err(err)?;
            let right = a
                .mul(&c)
                .map_err(err)?
                .add(&b.mul(&c).map_err(err)?)
                .map_err(err)?;
            zero(
                &left.sub(&right).map_err(err)?,
                &format!("N={n} triple {k} right distributivity"),
            )?;
            count += 3;
        }
    }
    Ok(format!("{count} operators over N = 1, 2, 3"))
}

/// Revlex sign from the last nonzero entry, computed independently of the
/// library.
fn revlex_plus(e: &[i64]) -> bool {
    e.iter().rev().find(|&&v| v != 0).is_none_or(|&v| v > 0)
}

fn criterion_2() -> Check {
    let mut checked = 0;
    let mut disagreements = 0;
    for n in 1..=3 {
        let base = TruncationConfig::with_boxes(n, SPLIT_BOX, SPLIT_BOX, 1, &mi(&vec![1; n]));
        let r = mi(&vec![SPLIT_BOX; n]);
        let exps = MultiIndex::box_iter(&-&r, &r);
        let mut by_mode = Vec::new();
        for mode in [SplitMode::Revlex, SplitMode::Componentwise] {
            let mut cfg = base.clone();
            cfg.split_mode = mode;
            let ctx = Ctx::from_config(&cfg).unwrap();
            let coeff = |i: usize| TimePoly::constant(q(i as i64 + 1));
            let p = Pdo::from_terms(
                &ctx,
                exps.iter()
                    .enumerate()
                    .map(|(i, e)| (e.clone(), coeff(i)))
                    .collect(),
            );
            let (plus, minus) = (p.plus(), p.minus());
            zero(
                &p.sub(&plus.add(&minus).map_err(err)?).map_err(err)?,
                &format!("N={n} {mode:?} P = P+ + P-"),
            )?;
            zero(
                &plus.plus().sub(&plus).map_err(err)?,
                &format!("N={n} {mode:?} (P+)+ = P+"),
            )?;
            zero(
                &minus.minus().sub(&minus).map_err(err)?,
                &format!("N={n} {mode:?} (P-)- = P-"),
            )?;
            zero(&plus.minus(), &format!("N={n} {mode:?} (P+)- = 0"))?;
            zero(
                &minus.split(Part::Plus),
                &format!("N={n} {mode:?} (P-)+ = 0"),
            )?;
            let mut side = BTreeMap::new();
            for e in &exps {
                let single = Pdo::monomial(&ctx, e.clone(), TimePoly::one());
                let is_plus = !single.plus().is_zero();
                let want = match mode {
                    SplitMode::Revlex => revlex_plus(e.entries()),
                    SplitMode::Componentwise => e.entries().iter().all(|&v| v >= 0),
                };
                if is_plus != want {
                    return Err(format!(
                        "N={n} {mode:?}: ∂^{e} classified as plus = {is_plus}"
                    ));
                }
                side.insert(e.clone(), is_plus);
                checked += 1;
            }
            by_mode.push(side);
        }
        for e in &exps {
            let differ = by_mode[0][e] != by_mode[1][e];
            let want = revlex_plus(e.entries()) && e.entries().iter().any(|&v| v < 0);
            if differ != want {
                return Err(format!("N={n}: modes disagree on ∂^{e} = {differ}"));
            }
            disagreements += differ as usize;
        }
        if n == 1 && by_mode[0] != by_mode[1] {
            return Err("N=1: modes differ".into());
        }
    }
    Ok(format!(
        "{checked} exponents, {disagreements} mode disagreements, all as predicted"
    ))
}

fn kdv_ctx(weight: i64, t_degree: u32) -> CtxRef {
    Ctx::plain(1, &[mi(&[1]), mi(&[2]), mi(&[3])], t_degree, weight).unwrap()
}

fn seed_spec() -> SeedSpec {
    SeedSpec {
        max_terms: 2,
        max_order: 2,
        max_x_degree: 2,
        max_coeff: 3,
    }
}

fn random_s0(ctx: &CtxRef, seed: u64) -> Pdo {
    random_seed(ctx, &mut ChaCha8Rng::seed_from_u64(seed), &seed_spec()).unwrap()
}

fn flow_identities(ctx: &CtxRef, s0: &Pdo) -> Result<(), String> {
    let (s, defects) = integrate_flows_checked(s0).map_err(err)?;
    if let Some(d) = defects.first() {
        return Err(format!(
            "{} flow defects, first ∂_{} vs ∂_{} at ∂^{} {:?}: {}",
            defects.len(),
            d.beta,
            d.gamma,
            d.exponent,
            d.mono,
            d.value
        ));
    }
    let lax = dress(&s).map_err(err)?;
    for a in ctx.t_times() {
        for i in 0..ctx.n {
            zero(
                &lax_residual(&lax, &a, i).map_err(err)?,
                &format!("Lax {a} L_{}", i + 1),
            )?;
        }
    }
    if let Some((i, j, d)) = lax.commutator_defect().map_err(err)? {
        zero(&d, &format!("[L_{}, L_{}]", i + 1, j + 1))?;
    }
    let wave = wave_function(&s).map_err(err)?;
    for a in ctx.t_times() {
        let r = wave_residual(&wave, &lax, &s, &a).map_err(err)?;
        let first = r.terms().next().map(|(f, tp)| format!("{tp:?} at x^{f}"));
        if let Some(t) = first {
            return Err(format!("wave {a}: {t} (tolerance {TOLERANCE})"));
        }
    }
    let times = ctx.t_times();
    for (x, a) in times.iter().enumerate() {
        for b in &times[x + 1..] {
            if let Some(d) = mixed_partials_defect(&s, a, b).map_err(err)? {
                zero(&d, &format!("mixed partials {a}, {b}"))?;
            }
        }
    }
    Ok(())
}

fn criterion_3() -> Check {
    let one = kdv_ctx(7, 2);
    let two = default_ctx(2);
    let mut failures = Vec::new();
    for (name, ctx) in [("N=1", &one), ("N=2", &two)] {
        for seed in 0..FLOW_SEEDS {
            if let Err(e) = flow_identities(ctx, &random_s0(ctx, seed)) {
                failures.push(format!("{name} seed {seed}: {e}"));
            }
        }
    }
    if failures.is_empty() {
        Ok(format!("{FLOW_SEEDS} seeds each for N = 1, 2"))
    } else {
        Err(format!(
            "{} of {} seeds fail; {}",
            failures.len(),
            2 * FLOW_SEEDS,
            failures.join("; ")
        ))
    }
}

fn criterion_4() -> Check {
    let ctx = kdv_ctx(10, CLASSICAL_T_DEGREE);
    let mut total = 0;
    for seed in 0..CLASSICAL_SEEDS {
        total += compare_with_classical(&ctx, &random_s0(&ctx, seed))
            .map_err(|e| format!("seed {seed}: {e}"))?;
    }
    Ok(format!("{CLASSICAL_SEEDS} seeds, {total} coefficients of S(t) agree to t-degree {CLASSICAL_T_DEGREE}"))
}

fn point_spec() -> RandomPointSpec {
    RandomPointSpec {
        max_tails: 2,
        max_coeff: 3,
        max_tail_order: Some(1),
    }
}

fn windows() -> [CtxRef; 2] {
    [
        window_ctx(&[-6], &[5], 2),
        window_ctx(&[-2, -3], &[2, 2], 2),
    ]
}

fn random_point(ctx: &CtxRef, seed: u64) -> Result<GrPoint, String> {
    random_f0_point(ctx, &mut ChaCha8Rng::seed_from_u64(seed), &point_spec()).map_err(err)
}

fn criterion_5() -> Check {
    for ctx in windows() {
        let n = ctx.n;
        for seed in 0..ROUND_TRIP_POINTS {
            let p = random_point(&ctx, seed)?;
            let w = wave_from_point(&p).map_err(err)?;
            if let Some(m) = wave_outside_point(&p, &w, usize::MAX).map_err(err)? {
                return Err(format!("N={n} seed {seed}: ψ leaves the point at {m:?}"));
            }
            let defects = leading_term_defects(&generating_family(&w).map_err(err)?);
            if !defects.is_empty() {
                return Err(format!(
                    "N={n} seed {seed}: leading terms fail at {defects:?}"
                ));
            }
            if let Some(d) = point_from_wave(&w).map_err(err)?.diff(&p).map_err(err)? {
                return Err(format!("N={n} seed {seed}: round trip differs: {d}"));
            }
        }
    }
    Ok(format!("{ROUND_TRIP_POINTS} points each for N = 1, 2"))
}

fn criterion_6() -> Check {
    let mut count = 0;
    for ctx in windows() {
        let n = ctx.n;
        let mut points = vec![("trivial".to_string(), GrPoint::trivial(&ctx).map_err(err)?)];
        for seed in 0..BILINEAR_POINTS {
            points.push((format!("seed {seed}"), random_point(&ctx, seed)?));
        }
        for (name, p) in points {
            let (psi, _) = adjoint_wave(&k_extend(&p).map_err(err)?).map_err(err)?;
            let w = wave_from_point(&p).map_err(err)?;
            let r = bilinear_check(&w.w, &psi).map_err(err)?;
            if !r.is_zero() {
                return Err(format!("N={n} {name}: residue of ψ·ψ* is nonzero"));
            }
            let r = bilinear_check(&ba_function(&p).map_err(err)?, &psi).map_err(err)?;
            if !r.is_zero() {
                return Err(format!(
                    "N={n} {name}: residue of the BA function against ψ* is nonzero"
                ));
            }
            count += 1;
        }
    }
    Ok(format!("{count} points, wave and BA function"))
}

fn params(kv: &[(&str, Vec<Q>)]) -> BTreeMap<String, Vec<Q>> {
    kv.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn criterion_7() -> Check {
    let mut notes = Vec::new();
    let mut failures = Vec::new();

    for ctx in [
        window_ctx(&[-4], &[3], 2),
        window_ctx(&[-2, -2], &[2, 2], 2),
    ] {
        let g = builtin_geometry(&ctx, "p1n", &BTreeMap::new()).map_err(err)?;
        let k = krichever_point(&ctx, &g, ValuationFilter::Poles).map_err(err)?;
        let s = dressing_of(&wave_from_point(k.point()).map_err(err)?).map_err(err)?;
        zero(
            &s.s.sub(&Pdo::one(&ctx)).map_err(err)?,
            &format!("p1n N={}: S - 1", ctx.n),
        )?;
    }
    notes.push("p1n gives S = 1".to_string());

    for (ctx, c) in [
        (window_ctx(&[-3], &[3], 1), vec![q(2)]),
        (window_ctx(&[-2, -2], &[2, 2], 1), vec![q(1), qf(-1, 2)]),
    ] {
        let g = builtin_geometry(&ctx, "p1-multi", &params(&[("c", c)])).map_err(err)?;
        let k = krichever_point(&ctx, &g, ValuationFilter::Poles).map_err(err)?;
        if !k.in_big_cell() {
            failures.push(format!(
                "p1-multi N={} is not F0 (missing {:?}, extra {:?})",
                ctx.n, k.f0.missing, k.f0.extra
            ));
            continue;
        }
        let s = dressing_of(&wave_from_point(k.point()).map_err(err)?).map_err(err)?;
        let top = ctx
            .t_times()
            .iter()
            .fold(MultiIndex::zero(ctx.n), |m, a| m.componentwise_max(a));
        let cert = finite_gap_certificate(&s, &top).map_err(err)?;
        if cert.is_empty() {
            failures.push(format!("p1-multi N={}: empty certificate", ctx.n));
        }
    }

    let ctx = window_ctx(&[-9], &[6], 1);
    for (name, p) in [
        ("cusp", params(&[])),
        ("node", params(&[("lambda", vec![qf(3, 2)])])),
        (
            "elliptic",
            params(&[("g2", vec![q(4)]), ("g3", vec![qf(1, 3)])]),
        ),
    ] {
        let g = builtin_geometry(&ctx, name, &p).map_err(err)?;
        let k = krichever_point(&ctx, &g, ValuationFilter::Poles).map_err(err)?;
        let leads: Vec<i64> = k.point().leading_set().iter().map(|f| f.get(0)).collect();
        let gaps = semigroup_gaps(&[2, 3], 9);
        if leads != semigroup_leads(&[2, 3], 9) || gaps != vec![1] {
            failures.push(format!("{name}: leading set {leads:?}"));
        }
        if k.f0.missing != vec![mi(&[-1])] || !k.f0.extra.is_empty() {
            failures.push(format!("{name}: expected missing [-1], got {:?}", k.f0));
        }
        if !matches!(wave_from_point(k.point()), Err(Error::NotTransversal(_))) {
            failures.push(format!("{name}: not diagnosed as non-transversal"));
        }
        if !k.ring.closure.holds() {
            failures.push(format!("{name}: ring closure fails"));
        }
    }
    notes.push("cusp, node, elliptic have gap set {1} and are non-transversal".to_string());

    let ctx = window_ctx(&[-9], &[9], 1);
    let (p, dp) = weierstrass_pair(&ctx, &q(4), &qf(1, 3)).map_err(err)?;
    let rhs = p
        .mul(&p)
        .and_then(|p2| p2.mul(&p))
        .map(|p3| p3.scale(&q(4)))
        .and_then(|r| r.sub(&p.scale(&q(4))))
        .and_then(|r| r.sub(&XSeries::one(&ctx).scale(&qf(1, 3))))
        .map_err(err)?;
    if !dp.mul(&dp).map_err(err)?.sub(&rhs).map_err(err)?.is_zero() {
        failures.push("℘'² ≠ 4℘³ - g2℘ - g3".to_string());
    }
    notes.push("℘ equation holds".to_string());

    if failures.is_empty() {
        Ok(notes.join("; "))
    } else {
        Err(failures.join("; "))
    }
}

fn criterion_8() -> Check {
    let ctx = kdv_ctx(7, 2);
    let c = Pdo::from_terms(
        &ctx,
        vec![
            (mi(&[0]), TimePoly::one()),
            (mi(&[-1]), TimePoly::constant(q(2))),
            (mi(&[-3]), TimePoly::constant(q(-1))),
        ],
    );
    for seed in 0..3 {
        let s0 = random_s0(&ctx, seed);
        let s = integrate_flows(&s0).map_err(err)?;
        let sc = integrate_flows(&s0.mul(&c).map_err(err)?).map_err(err)?;
        zero(
            &sc.s.sub(&s.s.mul(&c).map_err(err)?).map_err(err)?,
            &format!("seed {seed}: S(C) - S·C"),
        )?;
        let (l, lc) = (dress(&s).map_err(err)?, dress(&sc).map_err(err)?);
        zero(
            &l.ops[0].sub(&lc.ops[0]).map_err(err)?,
            &format!("seed {seed}: L changes"),
        )?;
    }
    Ok("3 seeds, S·C flows as S times C with the same L".to_string())
}

fn fixture(name: &str) -> RunConfig {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name);
    RunConfig::load(&path).unwrap().resolve().unwrap()
}

fn criterion_9() -> Check {
    type Cmd = fn(&RunConfig) -> kpn::Result<kpn::run::Outcome>;
    let runs: [(&str, &str, Cmd); 3] = [
        ("flow", "n1_flow.json", cmd_flow),
        ("correspondence", "n2_small.json", cmd_correspondence),
        ("krichever", "n1_curves.json", cmd_krichever),
    ];
    for (name, file, cmd) in runs {
        let reports: Vec<String> = (0..DETERMINISM_RUNS)
            .map(|_| cmd(&fixture(file)).map(|o| render(&o.report)).map_err(err))
            .collect::<Result<_, _>>()?;
        if reports.windows(2).any(|w| w[0] != w[1]) {
            return Err(format!("{name} reports differ between runs"));
        }
    }
    Ok(format!(
        "flow, correspondence, krichever byte-identical over {DETERMINISM_RUNS} runs"
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "ring axioms", criterion_1),
        (2, "splitting", criterion_2),
        (3, "flow identities", criterion_3),
        (4, "classical agreement", criterion_4),
        (5, "round trip", criterion_5),
        (6, "bilinear identity", criterion_6),
        (7, "krichever suite", criterion_7),
        (8, "right constant factor", criterion_8),
        (9, "determinism", criterion_9),
    ];
    let mut unexpected = Vec::new();
    for (k, name, f) in criteria {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {k} {name}: {tag} ({secs:.1}s) {detail}");
        if outcome.is_ok() == KNOWN_FAILURES.contains(&k) {
            unexpected.push(k);
        }
    }
    assert!(
        unexpected.is_empty(),
        "criteria with unexpected outcome: {unexpected:?}"
    );
}
