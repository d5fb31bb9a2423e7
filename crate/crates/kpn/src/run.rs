//! Batch runs: configuration, the four commands and their JSON reports.
//!
//! A report echoes the fully resolved configuration, so feeding its
//! `config` back reproduces it byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{Ctx, CtxRef, MultiIndex, SplitMode, TruncationConfig, XSeries};
use crate::error::{Error, Result};
use crate::grassmann::{
    active_leading_defects, adjoint_wave, ba_function, bilinear_check, dressing_of, k_extend,
    point_from_wave, random_f0_point, random_split_point, wave_from_point, GrPoint,
    RandomPointSpec,
};
use crate::hierarchy::{
    dress, finite_gap_certificate_lax, integrate_flows_checked, lax_residual, random_seed,
    wave_function, wave_residual, DressingOp, LaxTuple, SeedSpec,
};
use crate::io::{
    format_q, geometry_from_json, geometry_to_json, grpoint_from_json, grpoint_to_json,
    mono_to_json, parse_q, pdo_from_record, pdo_record, series_record,
};
use crate::krichever::{
    builtin_geometry, certify_cusp, closure_check, krichever_point, pure_monomial_tags,
    GeometryData, ValuationFilter,
};
use crate::pdo::Pdo;

/// Where the initial dressing operator comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedSource {
    Random(SeedSpec),
    /// A serialized operator.
    Pdo(Value),
}

/// Where the point of the Grassmannian comes from.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointSource {
    Random(RandomPointSpec),
    RandomSplit(RandomPointSpec),
    /// A serialized point.
    Point(Value),
    /// The wave of the flow seed.
    Seed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometrySource {
    Builtin {
        name: String,
        #[serde(default)]
        params: BTreeMap<String, Vec<String>>,
    },
    File(String),
    Inline(Value),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub truncation: TruncationConfig,
    pub rng_seed: u64,
    pub seed: SeedSource,
    pub point: PointSource,
    pub geometry: GeometrySource,
    /// Search box of the finite-gap certificate; defaults to the largest
    /// active time.
    pub certificate_box: Option<MultiIndex>,
    pub literal_v_filter: bool,
    /// Shift used to certify the cusp through the one-variable hierarchy.
    pub cusp_shift: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            truncation: TruncationConfig::cli_default(),
            rng_seed: 0,
            seed: SeedSource::Random(SeedSpec::default()),
            point: PointSource::Random(RandomPointSpec {
                max_tail_order: Some(1),
                ..Default::default()
            }),
            geometry: GeometrySource::Builtin {
                name: "p1n".into(),
                params: BTreeMap::new(),
            },
            certificate_box: None,
            literal_v_filter: false,
            cusp_shift: "1/1".into(),
        }
    }
}

impl RunConfig {
    pub fn from_json(v: &Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::Usage(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Error::Usage(format!("config {} is not JSON: {e}", path.display())))?;
        Self::from_json(&v)
    }

    /// Fill the defaults that depend on the truncation, so reports are
    /// self-describing.
    pub fn resolve(mut self) -> Result<Self> {
        self.truncation.validate()?;
        if self.truncation.weight.is_none() {
            self.truncation.weight = Some(self.truncation.weight_cap());
        }
        if self.truncation.grading.is_empty() {
            self.truncation.grading = self.truncation.grading_vec();
        }
        self.truncation.active_times.sort();
        self.truncation.active_times.dedup();
        if self.certificate_box.is_none() {
            let n = self.truncation.n_vars;
            let top = self
                .truncation
                .active_times
                .iter()
                .fold(MultiIndex::zero(n), |m, a| m.componentwise_max(a));
            self.certificate_box = Some(top);
        }
        self.cusp_shift = format_q(&parse_q(&self.cusp_shift)?);
        Ok(self)
    }

    pub fn ctx(&self) -> Result<CtxRef> {
        Ctx::from_config(&self.truncation)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.rng_seed)
    }

    fn to_json(&self) -> Value {
        serde_json::to_value(self).unwrap_or(Value::Null)
    }
}

/// Overall verdict of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Nothing was violated; the result is a diagnostic (e.g. a point
    /// outside the big cell).
    Diagnostic,
    Violation,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Diagnostic => "diagnostic",
            Status::Violation => "violation",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok | Status::Diagnostic => 0,
            Status::Violation => 1,
        }
    }

    fn worst(self, o: Status) -> Status {
        use Status::*;
        match (self, o) {
            (Violation, _) | (_, Violation) => Violation,
            (Diagnostic, _) | (_, Diagnostic) => Diagnostic,
            _ => Ok,
        }
    }
}

pub struct Outcome {
    pub status: Status,
    pub report: Value,
}

/// Pretty JSON with a trailing newline. Object keys are sorted, so equal
/// reports are equal bytes.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn pdo_first_term(p: &Pdo) -> Value {
    match p
        .terms()
        .next()
        .and_then(|(e, tp)| tp.iter().next().map(|(m, c)| (e, *m, c.clone())))
    {
        None => json!("0"),
        Some((e, m, c)) => {
            json!({ "exponent": e, "monomial": mono_to_json(p.ctx(), &m), "coeff": format_q(&c) })
        }
    }
}

fn series_first_term(s: &XSeries) -> Value {
    match s
        .terms()
        .next()
        .and_then(|(e, tp)| tp.iter().next().map(|(m, c)| (e, *m, c.clone())))
    {
        None => json!("0"),
        Some((e, m, c)) => {
            json!({ "exponent": e, "monomial": mono_to_json(s.ctx(), &m), "coeff": format_q(&c) })
        }
    }
}

fn is_zero_entry(v: &Value) -> bool {
    v == &json!("0")
}

/// Lax, commutator and wave residuals of a dressing operator.
fn residual_summary(s: &DressingOp) -> Result<(Status, Value, Option<LaxTuple>)> {
    let ctx = s.ctx().clone();
    let lax = match dress(s) {
        Ok(l) => l,
        Err(Error::Consistency(msg)) | Err(Error::NotDressable(msg)) => {
            return Ok((Status::Violation, json!({ "dress": msg }), None));
        }
        Err(e) => return Err(e),
    };
    let mut status = Status::Ok;
    let mut laxr = Vec::new();
    for a in ctx.t_times() {
        for i in 0..ctx.n {
            let r = pdo_first_term(&lax_residual(&lax, &a, i)?);
            if !is_zero_entry(&r) {
                status = Status::Violation;
            }
            laxr.push(json!({ "time": a, "i": i + 1, "residual": r }));
        }
    }
    let comm = match lax.commutator_defect()? {
        None => json!("0"),
        Some((i, j, c)) => {
            status = Status::Violation;
            json!({ "i": i + 1, "j": j + 1, "first": pdo_first_term(&c) })
        }
    };
    let wave = wave_function(s)?;
    let mut waver = Vec::new();
    for a in ctx.t_times() {
        let r = series_first_term(&wave_residual(&wave, &lax, s, &a)?);
        if !is_zero_entry(&r) {
            status = Status::Violation;
        }
        waver.push(json!({ "time": a, "residual": r }));
    }
    let out = json!({ "lax": laxr, "commutators": comm, "wave": waver });
    Ok((status, out, Some(lax)))
}

fn seed_operator(cfg: &RunConfig, ctx: &CtxRef) -> Result<Pdo> {
    match &cfg.seed {
        SeedSource::Random(spec) => random_seed(ctx, &mut cfg.rng(), spec),
        SeedSource::Pdo(v) => pdo_from_record(ctx, v),
    }
}

/// Integrate the flows from the seed, dress and check every residual.
pub fn cmd_flow(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = cfg.ctx()?;
    let s0 = seed_operator(cfg, &ctx)?;
    info!("flow: seed has {} terms", s0.n_terms());
    let (s, defects) = integrate_flows_checked(&s0)?;
    let mut status = Status::Ok;
    let defect_report = if defects.is_empty() {
        json!({ "count": 0 })
    } else {
        status = Status::Violation;
        let d = &defects[0];
        json!({
            "count": defects.len(),
            "first": {
                "flows": [d.beta, d.gamma],
                "exponent": d.exponent,
                "monomial": mono_to_json(&ctx, &d.mono),
                "nonunit_degree": d.degree,
                "value": format_q(&d.value),
            }
        })
    };
    let (st, residuals, lax) = residual_summary(&s)?;
    status = status.worst(st);
    let lax_json: Vec<Value> = lax
        .iter()
        .flat_map(|l| l.ops.iter().map(pdo_record))
        .collect();
    let report = json!({
        "command": "flow",
        "config": cfg.to_json(),
        "advisories": cfg.truncation.advisories(),
        "seed": pdo_record(&s0),
        "S": pdo_record(&s.s),
        "L": lax_json,
        "flow_defects": defect_report,
        "residuals": residuals,
        "status": status.name(),
    });
    Ok(Outcome { status, report })
}

fn point_of(cfg: &RunConfig, ctx: &CtxRef) -> Result<GrPoint> {
    match &cfg.point {
        PointSource::Random(spec) => random_f0_point(ctx, &mut cfg.rng(), spec),
        PointSource::RandomSplit(spec) => random_split_point(ctx, &mut cfg.rng(), spec),
        PointSource::Point(v) => grpoint_from_json(ctx, v),
        PointSource::Seed => {
            let (s, defects) = integrate_flows_checked(&seed_operator(cfg, ctx)?)?;
            if !defects.is_empty() {
                return Err(Error::FlowInconsistency(format!(
                    "{} flow mismatches in the seed",
                    defects.len()
                )));
            }
            point_from_wave(&wave_function(&s)?)
        }
    }
}

fn identity(ok: bool, detail: Value) -> Value {
    json!({ "pass": ok, "detail": detail })
}

/// Point to wave and back, Baker–Akhiezer function and bilinear identity.
pub fn cmd_correspondence(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = cfg.ctx()?;
    let p = point_of(cfg, &ctx)?;
    let (f0, rep) = p.is_f0()?;
    let mut report = json!({
        "command": "correspondence",
        "config": cfg.to_json(),
        "advisories": cfg.truncation.advisories(),
        "point": grpoint_to_json(&p),
        "f0": rep,
    });
    if !f0 {
        warn!("correspondence: point is outside the big cell");
        report["status"] = json!(Status::Diagnostic.name());
        report["diagnostic"] = json!("non-transversal");
        return Ok(Outcome {
            status: Status::Diagnostic,
            report,
        });
    }
    let wave = wave_from_point(&p)?;
    let mut ids = serde_json::Map::new();
    let back = point_from_wave(&wave)?;
    let diff = back.diff(&p)?;
    ids.insert("round_trip".into(), identity(diff.is_none(), json!(diff)));
    let defects = active_leading_defects(&wave)?;
    ids.insert(
        "leading_terms".into(),
        identity(defects.is_empty(), json!(defects)),
    );
    let (psi, _) = adjoint_wave(&k_extend(&p)?)?;
    let bw = bilinear_check(&wave.w, &psi)?;
    ids.insert(
        "bilinear_wave".into(),
        identity(bw.is_zero(), series_first_term(&bw)),
    );
    match ba_function(&p) {
        Ok(ba) => {
            let bb = bilinear_check(&ba, &psi)?;
            ids.insert(
                "bilinear_ba".into(),
                identity(bb.is_zero(), series_first_term(&bb)),
            );
            report["ba_function"] = series_record(&ba);
        }
        Err(Error::Usage(msg)) => {
            report["ba_function"] = json!({ "skipped": msg });
        }
        Err(e) => return Err(e),
    }
    let s = dressing_of(&wave)?;
    report["wave_symbol"] = series_record(&wave.sym);
    report["adjoint_wave"] = series_record(&psi);
    report["S"] = pdo_record(&s.s);
    let ok = ids.values().all(|v| v["pass"] == json!(true));
    report["identities"] = Value::Object(ids);
    let status = if ok { Status::Ok } else { Status::Violation };
    report["status"] = json!(status.name());
    Ok(Outcome { status, report })
}

fn geometry_of(cfg: &RunConfig, ctx: &CtxRef) -> Result<GeometryData> {
    match &cfg.geometry {
        GeometrySource::Builtin { name, params } => {
            let ps = params
                .iter()
                .map(|(k, v)| {
                    Ok((
                        k.clone(),
                        v.iter().map(|s| parse_q(s)).collect::<Result<Vec<_>>>()?,
                    ))
                })
                .collect::<Result<BTreeMap<_, _>>>()?;
            builtin_geometry(ctx, name, &ps)
        }
        GeometrySource::File(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Usage(format!("cannot read geometry {path}: {e}")))?;
            let v: Value = serde_json::from_str(&text)
                .map_err(|e| Error::Usage(format!("geometry {path}: {e}")))?;
            geometry_from_json(ctx, &v)
        }
        GeometrySource::Inline(v) => geometry_from_json(ctx, v),
    }
}

/// Ring of the geometry, its point, and the finite-gap solution when the
/// point is in the big cell.
pub fn cmd_krichever(cfg: &RunConfig) -> Result<Outcome> {
    let ctx = cfg.ctx()?;
    let g = geometry_of(cfg, &ctx)?;
    let filter = if cfg.literal_v_filter {
        ValuationFilter::Literal
    } else {
        ValuationFilter::Poles
    };
    let k = krichever_point(&ctx, &g, filter)?;
    let closure = &k.ring.closure;
    let mut status = if closure.holds() {
        Status::Ok
    } else {
        Status::Violation
    };
    let tags = pure_monomial_tags(k.point());
    let mut report = json!({
        "command": "krichever",
        "config": cfg.to_json(),
        "advisories": cfg.truncation.advisories(),
        "geometry": geometry_to_json(&g),
        "ring": {
            "monomials": k.ring.monomials,
            "dropped_by_filter": k.ring.dropped,
            "closure": {
                "checked": closure.checked,
                "skipped": closure.skipped,
                "defects": closure.defects.iter().map(|d| json!({"left": d.left, "right": d.right, "remainder_at": d.remainder_at})).collect::<Vec<_>>(),
            },
        },
        "point": grpoint_to_json(k.point()),
        "f0": k.f0,
        "pure_monomial_tags": tags,
    });
    let sbox = cfg
        .certificate_box
        .clone()
        .unwrap_or_else(|| MultiIndex::zero(ctx.n));
    if k.in_big_cell() {
        let wave = wave_from_point(k.point())?;
        let s = dressing_of(&wave)?;
        let (st, residuals, lax) = residual_summary(&s)?;
        status = status.worst(st);
        report["S"] = pdo_record(&s.s);
        report["residuals"] = residuals;
        if let Some(lax) = lax {
            let cert = finite_gap_certificate_lax(&lax, &sbox)?;
            let missing: Vec<&MultiIndex> = tags
                .iter()
                .filter(|t| t.subset_of(&sbox) && !cert.contains(t))
                .collect();
            if !missing.is_empty() {
                status = Status::Violation;
            }
            report["certificate"] =
                json!({ "search_box": sbox, "indices": cert, "tags_missing": missing });
        }
    } else {
        status = status.worst(Status::Diagnostic);
        report["diagnostic"] = json!("non-transversal");
        if ctx.n == 1 && g.name.as_deref() == Some("cusp") {
            let c = parse_q(&cfg.cusp_shift)?;
            let cc = certify_cusp(&ctx, &c, &sbox)?;
            if !cc.holds() {
                status = Status::Violation;
            }
            report["cusp_certificate"] = json!({
                "shift": format_q(&cc.shift),
                "indices": cc.certificate,
                "module_defects": cc.module_defects,
                "S": pdo_record(&cc.dressing.s),
                "pass": cc.holds(),
            });
        }
    }
    report["status"] = json!(status.name());
    Ok(Outcome { status, report })
}

/// Recompute the identities of a saved report from its stored artifacts.
pub fn cmd_verify(saved: &Value) -> Result<Outcome> {
    let command = saved
        .get("command")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Usage("report has no command".into()))?;
    let cfg = RunConfig::from_json(
        saved
            .get("config")
            .ok_or_else(|| Error::Usage("report has no config".into()))?,
    )?
    .resolve()?;
    let ctx = cfg.ctx()?;
    let mut status = Status::Ok;
    let mut out = json!({ "command": "verify", "verified": command });
    if let Some(sv) = saved.get("S") {
        let s = pdo_from_record(&ctx, sv)?;
        if !s.is_unipotent() {
            status = Status::Violation;
            out["S"] = json!("not of the form 1 + minus part");
        } else {
            let (st, residuals, _) = residual_summary(&DressingOp::new(s)?)?;
            status = status.worst(st);
            if let Some(old) = saved.get("residuals") {
                out["matches_saved_residuals"] = json!(old == &residuals);
            }
            out["residuals"] = residuals;
        }
    }
    if let Some(pv) = saved.get("point") {
        let p = grpoint_from_json(&ctx, pv)?;
        let (f0, rep) = p.is_f0()?;
        out["f0"] = json!(rep);
        if command == "krichever" {
            let c = closure_check(&p)?;
            if !c.holds() {
                status = Status::Violation;
            }
            out["closure_holds"] = json!(c.holds());
        }
        if f0 && command == "correspondence" {
            let back = point_from_wave(&wave_from_point(&p)?)?;
            let diff = back.diff(&p)?;
            if diff.is_some() {
                status = Status::Violation;
            }
            out["round_trip"] = identity(diff.is_none(), json!(diff));
        } else if !f0 {
            status = status.worst(Status::Diagnostic);
        }
    }
    out["status"] = json!(status.name());
    Ok(Outcome {
        status,
        report: out,
    })
}

/// Apply command-line overrides to a configuration.
pub fn with_overrides(
    mut cfg: RunConfig,
    seed_rng: Option<u64>,
    split: Option<SplitMode>,
    literal: bool,
) -> RunConfig {
    if let Some(s) = seed_rng {
        cfg.rng_seed = s;
    }
    if let Some(m) = split {
        cfg.truncation.split_mode = m;
    }
    if literal {
        cfg.literal_v_filter = true;
    }
    cfg
}

/// Exit status for a library error: configuration problems are usage
/// errors, failed identities are violations.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::FlowInconsistency(_) | Error::Consistency(_) | Error::NotDressable(_) => 1,
        _ => 2,
    }
}
