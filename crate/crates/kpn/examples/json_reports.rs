//! Configuration in, deterministic JSON report out, the same path the
//! command-line tool takes.

use kpn::run::{cmd_flow, render, RunConfig};
use serde_json::json;

fn main() -> kpn::Result<()> {
    let cfg = RunConfig::from_json(&json!({
        "truncation": {
            "n_vars": 1,
            "d_box_lo": [-6], "d_box_hi": [6],
            "x_lo": [-6], "x_hi": [5],
            "t_degree": 2,
            "active_times": [[1], [2], [3]]
        },
        "seed": {"pdo": [[[0], [{"monomial": [], "coeff": "1"}]], [[-1], [{"monomial": [[[1], 1]], "coeff": "1"}]]]}
    }))?
    .resolve()?;
    let outcome = cmd_flow(&cfg)?;
    println!("status: {}", outcome.status.name());
    print!("{}", render(&outcome.report["residuals"]));
    Ok(())
}
