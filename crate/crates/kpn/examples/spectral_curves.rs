//! Points of rings of functions with poles at one point: the projective
//! line, the cusp, a nodal and an elliptic curve.

use std::collections::BTreeMap;

use kpn::algebra::*;
use kpn::krichever::*;

fn main() -> kpn::Result<()> {
    let mut cfg = TruncationConfig::with_boxes(1, 9, 0, 1, &MultiIndex::new(vec![9]));
    cfg.x_lo = MultiIndex::new(vec![-9]);
    cfg.x_hi = MultiIndex::new(vec![6]);
    let ctx = Ctx::from_config(&cfg)?;

    let mut params = BTreeMap::new();
    params.insert("lambda".to_string(), vec![qf(3, 2)]);
    params.insert("g2".to_string(), vec![q(4)]);
    params.insert("g3".to_string(), vec![qf(1, 3)]);
    for name in ["p1n", "cusp", "node", "elliptic"] {
        let p: BTreeMap<_, _> = params
            .iter()
            .filter(|(k, _)| match name {
                "node" => k.as_str() == "lambda",
                "elliptic" => k.as_str() != "lambda",
                _ => false,
            })
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let g = builtin_geometry(&ctx, name, &p)?;
        let k = krichever_point(&ctx, &g, ValuationFilter::Poles)?;
        let leads: Vec<i64> = k.point().leading_set().iter().map(|f| f.get(0)).collect();
        println!(
            "{name:9} leads {leads:?} missing {:?} big cell {}",
            k.f0.missing,
            k.in_big_cell()
        );
    }
    println!("gaps of <2, 3>: {:?}", semigroup_gaps(&[2, 3], 9));
    println!("gaps of <3, 5>: {:?}", semigroup_gaps(&[3, 5], 12));
    Ok(())
}
