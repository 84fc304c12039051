//! Subcommand implementations. Each returns an [`Outcome`] carrying the JSON
//! document, its plain-text rendering and the exit status.

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, ValueEnum};
use serde_json::{json, Value};
use vallab::construction::{bounded_terms, qf_expand, Expansion, QuasiFinite, QuasiFiniteJson};
use vallab::defectlab::{
    as_classify, as_reduce, delta_set, invariants_report, n_of, tower_radicand, AsVerdict,
    ExtensionKind, ExtensionReport, ExtensionSpec, TowerBase,
};
use vallab::taylor::stabilize;
use vallab::{Exp, FieldCtx, GroupSpec, Series};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::eval::{evaluate, PolyAlg, SeriesAlg, WPolyAlg};
use crate::parser::parse;

pub const SCHEMA: &str = "1";

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub code: i32,
}

impl Outcome {
    fn ok(mut json: Value, text: String) -> Self {
        json["schema"] = Value::from(SCHEMA);
        Outcome { json, text, code: 0 }
    }
}

fn field(cfg: &RunConfig) -> CliResult<Arc<FieldCtx>> {
    Ok(FieldCtx::new(cfg.p, cfg.m)?)
}

fn gamma(cfg: &RunConfig) -> CliResult<Arc<GroupSpec>> {
    Ok(Arc::new(GroupSpec::p_prime(cfg.p)?))
}

fn wpoly_alg(cfg: &RunConfig) -> CliResult<WPolyAlg> {
    Ok(WPolyAlg {
        ctx: field(cfg)?,
        group: gamma(cfg)?,
        q: cfg.q,
    })
}

fn series_json(s: &Series) -> Value {
    json!(s.to_json())
}

fn expansion_terms(e: &Expansion) -> Value {
    let ctx = e.ctx();
    Value::from(
        e.terms()
            .map(|(x, j, c)| json!([x.to_string(), j, ctx.format(c)]))
            .collect::<Vec<_>>(),
    )
}

pub fn cmd_series(cfg: &RunConfig, expr: &str) -> CliResult<Outcome> {
    let ast = parse(expr)?;
    let alg = SeriesAlg::new(field(cfg)?, cfg.params(), cfg.target_prec())?;
    let s = evaluate(&alg, &ast)?;
    let v = s.valuation()?;
    Ok(Outcome::ok(
        json!({
            "command": "series",
            "input": expr,
            "series": s.to_string(),
            "valuation": v.to_string(),
            "terms": series_json(&s),
        }),
        format!("{s}, v = {v}"),
    ))
}

#[derive(Args, Clone, Debug)]
pub struct StabilizeArgs {
    /// Polynomial in `W` with coefficients in `t`, e.g. `W^2 + t`.
    #[arg(long)]
    pub f: String,
    /// Coefficient `c` of the tail perturbation `c·t^β`.
    #[arg(long, default_value = "0")]
    pub c: String,
    #[arg(long, default_value = "1")]
    pub beta: Exp,
    #[arg(long, default_value_t = 1)]
    pub lmin: u32,
    #[arg(long, default_value_t = 8)]
    pub lmax: u32,
    /// Index `r` of the tail `w_r` being truncated.
    #[arg(long, default_value_t = 0)]
    pub start: u32,
}

pub fn cmd_stabilize(cfg: &RunConfig, args: &StabilizeArgs) -> CliResult<Outcome> {
    let ctx = field(cfg)?;
    let alg = PolyAlg {
        ctx: ctx.clone(),
        group: gamma(cfg)?,
    };
    let f = evaluate(&alg, &parse(&args.f)?)?;
    let c = ctx.parse(&args.c)?;
    let mut wspec = cfg.params();
    wspec.start = args.start;
    let cert = stabilize(&f, &wspec, c, &args.beta, args.lmin, args.lmax)?;
    let mut out = cert.summary_json();
    out["command"] = Value::from("stabilize");
    out["standard_regime"] = Value::from(cert.standard_regime);
    out["e_varies"] = Value::from(cert.e_varies);
    let e = cert.e.map_or("none".to_string(), |e| e.to_string());
    let text = format!("l0 = {}, e = {e}, value = {}", cert.l0, cert.value);
    Ok(Outcome::ok(out, text))
}

#[derive(Args, Clone, Debug)]
pub struct QfArgs {
    /// JSON quasi-finite element; `w^{-1}` when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Expansion target; the configured precision when absent.
    #[arg(long)]
    pub target: Option<Exp>,
    /// Degree cap of the `g`-oracle used for the default input.
    #[arg(long, default_value_t = 16)]
    pub cap: u32,
    /// Also expand in the frame `(r, β)`.
    #[arg(long)]
    pub frame: Option<u32>,
    #[arg(long, default_value = "0")]
    pub beta: Exp,
    /// Restrict the frame expansion to weights below this bound.
    #[arg(long)]
    pub bound: Option<Exp>,
}

pub fn cmd_qf(cfg: &RunConfig, args: &QfArgs) -> CliResult<Outcome> {
    let ctx = field(cfg)?;
    let group = gamma(cfg)?;
    let y = match &args.input {
        Some(path) => {
            let raw: QuasiFiniteJson = serde_json::from_str(&std::fs::read_to_string(path)?)?;
            QuasiFinite::from_json(&raw, &ctx, &group, cfg.q)?
        }
        None => QuasiFinite::w_inverse(&ctx, &group, cfg.q, args.cap)?,
    };
    let target = args.target.clone().unwrap_or_else(|| cfg.target_prec());
    let s = qf_expand(&y, &target)?;
    let mut out = json!({
        "command": "qf",
        "target": target.to_string(),
        "series": s.to_string(),
        "terms": series_json(&s),
    });
    let mut text = format!("{s}");
    if let Some(r) = args.frame {
        let e = Expansion::from_quasifinite(&y, r, &args.beta, &target)?;
        let kept = match &args.bound {
            Some(b) => bounded_terms(&e, b),
            None => e.terms().map(|(x, j, c)| (x.clone(), j, c)).collect(),
        };
        let rendered: Vec<Value> = kept
            .iter()
            .map(|(x, j, c)| json!([x.to_string(), j, ctx.format(*c)]))
            .collect();
        text.push_str(&format!("\nframe r = {r}, beta = {}: {} term(s)", args.beta, kept.len()));
        out["frame"] = json!({
            "r": r,
            "beta": args.beta.to_string(),
            "terms": rendered,
        });
    }
    Ok(Outcome::ok(out, text))
}

#[derive(Args, Clone, Debug)]
pub struct AsArgs {
    /// Right-hand side `b` of `X^p - X - b`, a `t`-polynomial in `w`.
    #[arg(long)]
    pub b: String,
    #[arg(long, default_value_t = 1)]
    pub frame: u32,
    #[arg(long, default_value = "0")]
    pub beta: Exp,
}

fn as_input(cfg: &RunConfig, b: &str, r: u32, beta: &Exp) -> CliResult<Expansion> {
    let z = evaluate(&wpoly_alg(cfg)?, &parse(b)?)?;
    Ok(Expansion::from_wpoly(&z, r, beta)?)
}

fn verdict_text(v: &AsVerdict) -> String {
    match v {
        AsVerdict::NotImmediate { witness, steps } => {
            format!("not immediate: witness {witness} after {steps} step(s)")
        }
        AsVerdict::Inconclusive { reason, steps } => {
            format!("inconclusive ({reason:?}) after {steps} step(s)")
        }
    }
}

pub fn cmd_as(cfg: &RunConfig, args: &AsArgs) -> CliResult<Outcome> {
    let b = as_input(cfg, &args.b, args.frame, &args.beta)?;
    let verdict = as_classify(&b, cfg.max_iter)?;
    let mut chain = vec![json!({"n": n_of(&b), "b": expansion_terms(&b)})];
    let mut cur = b.clone();
    for _ in 0..cfg.max_iter {
        if delta_set(&cur).pairs.is_empty() {
            break;
        }
        let (a, next) = as_reduce(&cur)?;
        chain.push(json!({"a": expansion_terms(&a), "n": n_of(&next), "b": expansion_terms(&next)}));
        cur = next;
    }
    let delta: Vec<Value> = delta_set(&b)
        .pairs
        .iter()
        .map(|(e, j)| json!([e.to_string(), j]))
        .collect();
    Ok(Outcome::ok(
        json!({
            "command": "as",
            "delta": delta,
            "n": n_of(&b),
            "verdict": verdict,
            "chain": chain,
        }),
        verdict_text(&verdict),
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DefectKind {
    /// `L | K` for the tower.
    TowerK,
    /// `L | K′` for the tower.
    TowerKprime,
    /// `K′ | K`, the `p`-th root of `t^{p+1} + w^p`.
    KPrime,
    /// `K(z^{1/n})`.
    Radical,
    /// `X^p - X - b`.
    As,
}

#[derive(Args, Clone, Debug)]
pub struct DefectArgs {
    #[arg(long, value_enum)]
    pub kind: DefectKind,
    #[arg(long, default_value_t = 2)]
    pub n: u32,
    #[arg(long, default_value = "t")]
    pub radicand: String,
    #[arg(long, default_value = "t^-1")]
    pub b: String,
    #[arg(long, default_value_t = 1)]
    pub frame: u32,
    #[arg(long, default_value = "0")]
    pub beta: Exp,
}

pub fn report_ok(r: &ExtensionReport) -> bool {
    r.ostrowski_ok && r.fundamental_equality()
}

pub fn report_text(r: &ExtensionReport) -> String {
    let j = r.to_json();
    format!(
        "degree = {}, e = {}, f = {}, d = {}, immediate = {}, ostrowski_ok = {}, notes = {}",
        r.degree, r.e, r.f, r.d, j["immediate"].as_str().unwrap_or(""), r.ostrowski_ok, r.notes.join("; ")
    )
}

pub fn extension_spec(cfg: &RunConfig, kind: ExtensionKind) -> CliResult<ExtensionSpec> {
    Ok(ExtensionSpec {
        kind,
        base_group: gamma(cfg)?,
        params: cfg.params(),
        max_steps: cfg.max_iter,
    })
}

pub fn cmd_defect(cfg: &RunConfig, args: &DefectArgs) -> CliResult<Outcome> {
    let params = cfg.params();
    let kind = match args.kind {
        DefectKind::TowerK => ExtensionKind::PaperTower { over: TowerBase::K },
        DefectKind::TowerKprime => ExtensionKind::PaperTower {
            over: TowerBase::KPrime,
        },
        DefectKind::KPrime => ExtensionKind::Radical {
            n: cfg.p,
            radicand: tower_radicand(&params)?,
        },
        DefectKind::Radical => ExtensionKind::Radical {
            n: args.n,
            radicand: evaluate(&wpoly_alg(cfg)?, &parse(&args.radicand)?)?,
        },
        DefectKind::As => ExtensionKind::ArtinSchreier {
            b: as_input(cfg, &args.b, args.frame, &args.beta)?,
        },
    };
    let report = invariants_report(&extension_spec(cfg, kind)?)?;
    let mut out = report.to_json();
    out["command"] = Value::from("defect");
    let mut outcome = Outcome::ok(out, report_text(&report));
    if !report_ok(&report) {
        outcome.code = 1;
    }
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RunConfig {
        RunConfig::default()
    }

    #[test]
    fn series_text_for_one() {
        let o = cmd_series(&cfg(), "t^(0/1)").unwrap();
        assert_eq!(o.text, "1, v = 0");
        assert_eq!(o.json["schema"], "1");
    }

    #[test]
    fn stabilize_examples() {
        let args = |f: &str| StabilizeArgs {
            f: f.into(),
            c: "0".into(),
            beta: Exp::one(),
            lmin: 1,
            lmax: 8,
            start: 0,
        };
        let o = cmd_stabilize(&cfg(), &args("W+t^(2/3)")).unwrap();
        assert_eq!((o.json["l0"].as_u64(), o.json["value"].as_str()), (Some(2), Some("8/9")));
        let o = cmd_stabilize(&cfg(), &args("W")).unwrap();
        assert_eq!((o.json["l0"].as_u64(), o.json["e"].as_u64()), (Some(1), Some(0)));
        let err = cmd_stabilize(&cfg(), &args("0")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn as_examples() {
        let args = |b: &str| AsArgs {
            b: b.into(),
            frame: 1,
            beta: Exp::zero(),
        };
        let o = cmd_as(&cfg(), &args("t^-2")).unwrap();
        assert_eq!(o.json["verdict"]["witness"], "-1");
        assert_eq!(o.json["verdict"]["steps"], 1);
        assert_eq!(o.json["n"], 1);
        let o = cmd_as(&cfg(), &args("t^(-1/3)")).unwrap();
        assert_eq!(o.json["verdict"]["steps"], 0);
    }

    #[test]
    fn defect_kprime_is_defectless() {
        let args = DefectArgs {
            kind: DefectKind::KPrime,
            n: 2,
            radicand: "t".into(),
            b: "t^-1".into(),
            frame: 1,
            beta: Exp::zero(),
        };
        let o = cmd_defect(&cfg(), &args).unwrap();
        assert_eq!((o.json["e"].as_u64(), o.json["d"].as_u64()), (Some(2), Some(1)));
        assert_eq!(o.code, 0);
    }

    #[test]
    fn qf_default_is_w_inverse() {
        let args = QfArgs {
            input: None,
            target: Some(Exp::new(-10, 27)),
            cap: 4,
            frame: None,
            beta: Exp::zero(),
            bound: None,
        };
        let o = cmd_qf(&cfg(), &args).unwrap();
        assert!(o.text.starts_with("t^(-2/3) + t^(-4/9)"), "{}", o.text);
    }
}
