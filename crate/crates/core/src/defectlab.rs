//! Ramification and defect bookkeeping for the tower `K ⊂ K′ ⊂ L`, the
//! greedy `p`-th power subtraction, and the Artin–Schreier reduction loop.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::Coeff;
use crate::construction::{
    make_x, Expansion, QuasiFinite, WConstructionParams, WPoly, MAX_W_DEPTH,
};
use crate::error::{Error, Result};
use crate::exponents::{in_p_multiple, Exp, GroupSpec, Val};
use crate::series::Series;

/// Iterated `p`-divisibility is checked at most this deep.
const MAX_P_ORDER: u32 = 64;

/// `ε ∈ pG` and `p | j`.
pub fn p_divides(e: &Exp, j: u32, p: u32, group: &GroupSpec) -> bool {
    j.is_multiple_of(p) && in_p_multiple(e, p, group)
}

/// Largest `n` with `ε ∈ p^n G` and `p^n | j`.
pub fn p_order(e: &Exp, j: u32, p: u32, group: &GroupSpec) -> u32 {
    let mut n = 0;
    let (mut e, mut j) = (e.clone(), j);
    while n < MAX_P_ORDER && p_divides(&e, j, p, group) {
        e = e.div_int(p as i64);
        j /= p;
        n += 1;
    }
    n
}

/// The pairs `(ε, j)` of negative weight whose monomial is a `p`-th power.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeltaSet {
    pub pairs: Vec<(Exp, u32)>,
}

pub fn delta_set(b: &Expansion) -> DeltaSet {
    let p = b.ctx().p();
    let pairs = b
        .terms()
        .filter(|(e, j, _)| b.weight(e, *j).is_negative() && p_divides(e, *j, p, b.group()))
        .map(|(e, j, _)| (e.clone(), j))
        .collect();
    DeltaSet { pairs }
}

/// `n(b)`, with `n(b) = 0` for empty `Δ(b)`.
pub fn n_of(b: &Expansion) -> u32 {
    let p = b.ctx().p();
    delta_set(b)
        .pairs
        .iter()
        .map(|(e, j)| p_order(e, *j, p, b.group()))
        .max()
        .unwrap_or(0)
}

/// `a = Σ_{Δ(b)} c^{1/p} t^{ε/p} Y^{j/p}` and `b - a^p + a`.
pub fn as_reduce(b: &Expansion) -> Result<(Expansion, Expansion)> {
    let ctx = b.ctx();
    let p = ctx.p();
    let delta = delta_set(b);
    let mut powers = Vec::with_capacity(delta.pairs.len());
    let mut roots = Vec::with_capacity(delta.pairs.len());
    for (e, j) in &delta.pairs {
        let c = b.coeff(e, *j);
        powers.push((e.clone(), *j, c));
        roots.push((e.div_int(p as i64), j / p, ctx.pth_root(c)));
    }
    let frame = |terms: Vec<(Exp, u32, Coeff)>| {
        Expansion::new(ctx, b.group(), b.q(), b.r(), b.beta().clone(), terms, Val::Inf)
    };
    let a = frame(roots)?;
    let a_pow = frame(powers)?;
    let next = b.sub(&a_pow)?.add(&a)?;
    Ok((a, next))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AsStall {
    /// Budget spent with `Δ` still nonempty.
    Budget,
    /// The reduced `b` vanished, so `X^p - X - b` splits.
    ResidualVanished,
    /// The reduced `b` has nonnegative value.
    NonnegativeResidual,
    /// The residual value lies in `pG` although `Δ` is empty.
    LeadingInPGroup,
    IndeterminateValuation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum AsVerdict {
    NotImmediate { witness: Exp, steps: u32 },
    Inconclusive { reason: AsStall, steps: u32 },
}

/// Reduces `b` until `Δ` is empty, then tests whether the residual value
/// leaves `pG`.
pub fn as_classify(b: &Expansion, max_iter: u32) -> Result<AsVerdict> {
    let p = b.ctx().p();
    match b.valuation() {
        Ok(Val::Fin(v)) if v.is_negative() => {}
        Ok(_) => return Err(Error::InvalidParams("v(b) must be negative".into())),
        Err(e) => return Err(e),
    }
    let mut cur = b.clone();
    let mut steps = 0;
    while !delta_set(&cur).pairs.is_empty() {
        if steps == max_iter {
            return Ok(AsVerdict::Inconclusive {
                reason: AsStall::Budget,
                steps,
            });
        }
        cur = as_reduce(&cur)?.1;
        steps += 1;
    }
    let stall = |reason| Ok(AsVerdict::Inconclusive { reason, steps });
    match cur.valuation() {
        Ok(Val::Inf) => stall(AsStall::ResidualVanished),
        Ok(Val::Fin(v)) if !v.is_negative() => stall(AsStall::NonnegativeResidual),
        Ok(Val::Fin(v)) if in_p_multiple(&v, p, cur.group()) => stall(AsStall::LeadingInPGroup),
        Ok(Val::Fin(v)) => Ok(AsVerdict::NotImmediate { witness: v, steps }),
        Err(Error::IndeterminateValuation) => stall(AsStall::IndeterminateValuation),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PthPowerSubtraction {
    /// Accumulated `a` with `v(z - a^p)` equal to `value`.
    pub a: WPoly,
    pub value: Exp,
    pub outside_p_group: bool,
    /// Frames `w_0, w_1, …` visited.
    pub steps: u32,
}

/// Weight increments tried per frame before moving on.
const WEIGHT_RETRIES: u32 = 6;

/// Weight bound for the first expansion of `z` in frame `r`: every term when
/// `g` is a polynomial, otherwise one unit past the leading value bound.
fn initial_weight(z: &QuasiFinite, r: u32, m: &Exp) -> Result<Exp> {
    let base = z.gamma() + m + Exp::one();
    if z.g().degree_cap != u32::MAX {
        return Ok(base);
    }
    let mut top = Exp::zero();
    for h in z.h() {
        if let Some(w) = Expansion::from_wpoly(h, r, &Exp::zero())?.max_weight() {
            top = top.max(w);
        }
    }
    let all = z.gamma() + top.mul_int(z.g().max_degree() as i64) + Exp::one();
    Ok(base.max(all))
}

/// The greedy search for `a ∈ k(t^G)[w]` with `v(z - a^p) ∉ pG`: expand
/// `z - a^p` in powers of `w_r`, take the `p`-th root of every monomial that
/// is a `p`-th power, and move to `r + 1` while the residual value stays in
/// `pG`.
pub fn subtract_pth_powers(z: &QuasiFinite, max_steps: u32) -> Result<PthPowerSubtraction> {
    let Some(h0) = z.h().first() else {
        return Err(Error::InvalidParams("no arguments to g".into()));
    };
    let (ctx, group, q) = (h0.ctx().clone(), h0.group().clone(), h0.q());
    let p = ctx.p();
    let m = z.h_valuations().iter().min().expect("nonempty").clone();
    let mut a = WPoly::zero(&ctx, &group, q);
    for r in 0..max_steps {
        let a_pow = a.frobenius()?;
        let mut target = initial_weight(z, r, &m)?;
        let mut found = None;
        for _ in 0..WEIGHT_RETRIES {
            let ez = Expansion::from_quasifinite(z, r, &Exp::zero(), &target)?;
            let ea = Expansion::from_wpoly(&a_pow, r, &Exp::zero())?;
            let res = ez.sub(&ea)?;
            let divisible: Vec<(Exp, u32, Coeff)> = res
                .terms()
                .filter(|(e, j, _)| p_divides(e, *j, p, &group))
                .map(|(e, j, c)| (e.clone(), j, c))
                .collect();
            let frame = |terms: Vec<(Exp, u32, Coeff)>| {
                Expansion::new(&ctx, &group, q, r, Exp::zero(), terms, Val::Inf)
            };
            let d = frame(divisible.clone())?;
            let rest = res.sub(&d)?;
            match rest.valuation() {
                Ok(Val::Fin(v)) => {
                    let root = frame(
                        divisible
                            .iter()
                            .map(|(e, j, c)| (e.div_int(p as i64), j / p, ctx.pth_root(*c)))
                            .collect(),
                    )?;
                    found = Some((v, root.to_wpoly()?));
                    break;
                }
                Ok(Val::Inf) => return Err(Error::DegenerateZero),
                Err(Error::IndeterminateValuation) => target = target + Exp::one(),
                Err(e) => return Err(e),
            }
        }
        let Some((value, root)) = found else {
            return Err(Error::PrecisionTooLow(format!(
                "residual in frame {r} vanishes below weight {target}"
            )));
        };
        a = a.add(&root)?;
        if !in_p_multiple(&value, p, &group) {
            return Ok(PthPowerSubtraction {
                a,
                value,
                outside_p_group: true,
                steps: r + 1,
            });
        }
    }
    Err(Error::Inconclusive(max_steps))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub value: Exp,
    pub in_base_group: bool,
}

/// `v(f(x))` for `f = Σ b_j X^j` with `b_j ∈ K′`, tested against
/// `Γ′ = Γ + (1/p)Z`; `x` is materialized at `params.depth`.
pub fn immediate_probe(fcoeffs: &[WPoly], params: &WConstructionParams) -> Result<ProbeResult> {
    params.validate()?;
    if fcoeffs.len() > params.p as usize {
        return Err(Error::InvalidParams(format!(
            "at most {} coefficients",
            params.p
        )));
    }
    if fcoeffs.iter().all(WPoly::is_zero) {
        return Err(Error::DegenerateZero);
    }
    let x = make_x(params)?;
    let ambient = x.group().clone();
    let gamma_prime = GroupSpec::scaled_gamma(params.p, 1)?;
    let mut acc = Series::zero(x.ctx(), &ambient);
    let mut xpow = Series::one(x.ctx(), &ambient);
    for (j, b) in fcoeffs.iter().enumerate() {
        if j > 0 {
            xpow = xpow.mul(&x)?;
        }
        if b.is_zero() {
            continue;
        }
        let bj = b.materialize(params.depth)?.with_group(&ambient)?;
        acc = acc.add(&bj.mul(&xpow)?)?;
    }
    let value = match acc.valuation()? {
        Val::Fin(v) => v,
        Val::Inf => return Err(Error::DegenerateZero),
    };
    Ok(ProbeResult {
        in_base_group: gamma_prime.contains(&value),
        value,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TowerBase {
    /// `L | K`.
    K,
    /// `L | K′`.
    KPrime,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExtensionKind {
    /// `K(z^{1/n})`.
    Radical { n: u32, radicand: WPoly },
    /// `K[X]/(X^p - X - b)`.
    ArtinSchreier { b: Expansion },
    /// `K[X]/(X^{p²} - t^{p+1} - w^p)` over `K` or `K′`.
    PaperTower { over: TowerBase },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionSpec {
    pub kind: ExtensionKind,
    pub base_group: Arc<GroupSpec>,
    pub params: WConstructionParams,
    /// Iteration budget for the subtraction and reduction loops.
    pub max_steps: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Immediacy {
    YesAtPrecision,
    /// `witness ∈ vL \ vK`.
    No { witness: Exp },
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionReport {
    pub degree: u64,
    pub e: u64,
    pub f: u64,
    pub d: Exp,
    pub immediate: Immediacy,
    pub ostrowski_ok: bool,
    pub notes: Vec<String>,
}

fn is_power_of(d: &Exp, p: u32) -> bool {
    if !d.is_integer() || !d.is_positive() {
        return false;
    }
    let mut x = d.clone();
    while x != Exp::one() {
        let y = x.div_int(p as i64);
        if !y.is_integer() {
            return false;
        }
        x = y;
    }
    true
}

impl ExtensionReport {
    fn new(degree: u64, e: u64, f: u64, immediate: Immediacy, p: u32, notes: Vec<String>) -> Self {
        let d = Exp::new(degree as i64, (e * f) as i64);
        ExtensionReport {
            degree,
            e,
            f,
            ostrowski_ok: is_power_of(&d, p),
            d,
            immediate,
            notes,
        }
    }

    /// `e·f·d = degree`.
    pub fn fundamental_equality(&self) -> bool {
        Exp::from_int((self.e * self.f) as i64) * &self.d == Exp::from_int(self.degree as i64)
    }

    /// `{"degree":4,"e":2,"f":1,"d":2,"immediate":"inconclusive","ostrowski_ok":true,"notes":"…"}`.
    pub fn to_json(&self) -> serde_json::Value {
        let d = match i64::try_from(self.d.numer()) {
            Ok(n) if self.d.is_integer() => serde_json::Value::from(n),
            _ => serde_json::Value::from(self.d.to_string()),
        };
        let mut out = serde_json::json!({
            "degree": self.degree,
            "e": self.e,
            "f": self.f,
            "d": d,
            "immediate": match self.immediate {
                Immediacy::YesAtPrecision => "yes-at-precision",
                Immediacy::No { .. } => "no",
                Immediacy::Inconclusive => "inconclusive",
            },
            "ostrowski_ok": self.ostrowski_ok,
            "notes": self.notes.join("; "),
        });
        if let Immediacy::No { witness } = &self.immediate {
            out["witness"] = serde_json::Value::from(witness.to_string());
        }
        out
    }
}

/// Order of `g` in `Q/G`, searched up to `bound`.
fn order_mod(g: &Exp, group: &GroupSpec, bound: u32) -> Option<u32> {
    (1..=bound).find(|&k| group.contains(&g.mul_int(k as i64)))
}

fn lead_of(z: &WPoly) -> Result<(Exp, Coeff)> {
    for depth in 1..=MAX_W_DEPTH {
        let s = z.materialize(depth)?;
        if let Some((v, c)) = s.leading() {
            return Ok((v.clone(), *c));
        }
    }
    Err(Error::IndeterminateValuation)
}

fn radical_report(n: u32, z: &WPoly, spec: &ExtensionSpec) -> Result<ExtensionReport> {
    let p = spec.params.p;
    let z = z.with_group(&spec.base_group)?;
    if z.is_zero() {
        return Err(Error::DegenerateZero);
    }
    if n == 1 {
        return Ok(ExtensionReport::new(1, 1, 1, Immediacy::YesAtPrecision, p, vec!["trivial".into()]));
    }
    if !n.is_multiple_of(p) {
        let (v, c) = lead_of(&z)?;
        let e = order_mod(&v.div_int(n as i64), &spec.base_group, n)
            .expect("n·(v/n) lies in the group");
        let k = (n / e) as u64;
        let ctx = z.ctx();
        let f = (1..=n)
            .find(|&d| ctx.has_root_in_extension(c, k, d))
            .expect("a root exists in some extension of degree at most n");
        if e * f != n {
            return Err(Error::ReduciblePolynomial(format!(
                "X^{n} - z has a factor of degree {}",
                e * f
            )));
        }
        let immediate = if e > 1 {
            Immediacy::No {
                witness: v.div_int(n as i64),
            }
        } else if f > 1 {
            Immediacy::No { witness: v }
        } else {
            Immediacy::YesAtPrecision
        };
        let notes = vec!["tame".into()];
        return Ok(ExtensionReport::new(n as u64, e as u64, f as u64, immediate, p, notes));
    }
    if n != p {
        return Err(Error::Unsupported(format!(
            "radical of degree {n} is neither prime to p nor equal to p"
        )));
    }
    let qf = QuasiFinite::from_wpoly(&z)?;
    match subtract_pth_powers(&qf, spec.max_steps) {
        Ok(out) => Ok(ExtensionReport::new(
            p as u64,
            p as u64,
            1,
            Immediacy::No {
                witness: out.value.div_int(p as i64),
            },
            p,
            vec![format!(
                "v(z - a^p) = {} lies outside pG after {} frame(s)",
                out.value, out.steps
            )],
        )),
        Err(Error::Inconclusive(steps)) => Ok(ExtensionReport::new(
            p as u64,
            1,
            1,
            Immediacy::YesAtPrecision,
            p,
            vec![
                "precision-limited".into(),
                format!("every residual of z - a^p stayed in pG for {steps} frame(s)"),
            ],
        )),
        Err(Error::DegenerateZero) => Err(Error::ReduciblePolynomial(
            "the radicand is a p-th power".into(),
        )),
        Err(e) => Err(e),
    }
}

fn artin_schreier_report(b: &Expansion, spec: &ExtensionSpec) -> Result<ExtensionReport> {
    let p = spec.params.p;
    match as_classify(b, spec.max_steps)? {
        AsVerdict::NotImmediate { witness, steps } => Ok(ExtensionReport::new(
            p as u64,
            p as u64,
            1,
            Immediacy::No {
                witness: witness.div_int(p as i64),
            },
            p,
            vec![format!("reduced value {witness} lies outside pG after {steps} step(s)")],
        )),
        AsVerdict::Inconclusive {
            reason: AsStall::ResidualVanished,
            ..
        } => Err(Error::ReduciblePolynomial("b lies in the image of X^p - X".into())),
        AsVerdict::Inconclusive { reason, steps } => Ok(ExtensionReport::new(
            p as u64,
            1,
            1,
            Immediacy::Inconclusive,
            p,
            vec![
                "precision-limited".into(),
                format!("reduction stalled ({reason:?}) after {steps} step(s)"),
            ],
        )),
    }
}

/// `y = t^{(p+1)/p} + w`, the `p`-th root of `t^{p+1} + w^p`, over `Γ′`.
pub fn tower_y(params: &WConstructionParams) -> Result<WPoly> {
    let ctx = crate::coefficients::FieldCtx::new(params.p, 1)?;
    let group = Arc::new(GroupSpec::scaled_gamma(params.p, 1)?);
    let p = params.p as i64;
    WPoly::from_terms(
        &ctx,
        &group,
        params.q,
        [
            (Exp::new(p + 1, p), 0, Coeff::ONE),
            (Exp::zero(), 1, Coeff::ONE),
        ],
    )
}

/// `t^{p+1} + w^p` over `Γ`.
pub fn tower_radicand(params: &WConstructionParams) -> Result<WPoly> {
    let ctx = crate::coefficients::FieldCtx::new(params.p, 1)?;
    let group = Arc::new(GroupSpec::p_prime(params.p)?);
    WPoly::from_terms(
        &ctx,
        &group,
        params.q,
        [
            (Exp::from_int(params.p as i64 + 1), 0, Coeff::ONE),
            (Exp::zero(), params.p, Coeff::ONE),
        ],
    )
}

fn tower_report(over: TowerBase, spec: &ExtensionSpec) -> Result<ExtensionReport> {
    let params = spec.params;
    let p = params.p;
    let sub = |n, radicand: WPoly, group: GroupSpec| {
        invariants_report(&ExtensionSpec {
            kind: ExtensionKind::Radical { n, radicand },
            base_group: Arc::new(group),
            ..spec.clone()
        })
    };
    let upper = sub(p, tower_y(&params)?, GroupSpec::scaled_gamma(p, 1)?)?;
    match over {
        TowerBase::KPrime => {
            let mut r = upper;
            if r.d != Exp::one() {
                r.notes.push("defect extension at working precision".into());
            }
            Ok(r)
        }
        TowerBase::K => {
            let lower = sub(p, tower_radicand(&params)?, GroupSpec::p_prime(p)?)?;
            let immediate = match (&lower.immediate, &upper.immediate) {
                (Immediacy::No { witness }, _) | (_, Immediacy::No { witness }) => {
                    Immediacy::No {
                        witness: witness.clone(),
                    }
                }
                (Immediacy::YesAtPrecision, Immediacy::YesAtPrecision) => {
                    Immediacy::YesAtPrecision
                }
                _ => Immediacy::Inconclusive,
            };
            let mut notes = vec![format!(
                "composed from K′|K (e={}, f={}) and L|K′ (e={}, f={})",
                lower.e, lower.f, upper.e, upper.f
            )];
            notes.extend(upper.notes.iter().filter(|n| *n == "precision-limited").cloned());
            Ok(ExtensionReport::new(
                lower.degree * upper.degree,
                lower.e * upper.e,
                lower.f * upper.f,
                immediate,
                p,
                notes,
            ))
        }
    }
}

/// Degree, ramification index, residue degree and defect of a simple
/// extension in the unique-extension regime.
pub fn invariants_report(spec: &ExtensionSpec) -> Result<ExtensionReport> {
    spec.params.validate()?;
    match &spec.kind {
        ExtensionKind::Radical { n, radicand } => radical_report(*n, radicand, spec),
        ExtensionKind::ArtinSchreier { b } => artin_schreier_report(b, spec),
        ExtensionKind::PaperTower { over } => tower_report(*over, spec),
    }
}
