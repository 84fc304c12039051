//! The series `w = Σ t^{β_i}`, its `p`-th root `s`, the element
//! `x = s + t^{(p+1)/p²}`, `w`-polynomials, quasi-finite elements
//! `t^γ g(h_1, …, h_n)` and their expansions in powers of `w_r / t^β`.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::coefficients::{Coeff, FieldCtx};
use crate::error::{Error, Result};
use crate::exponents::{beta, is_prime, Exp, GroupSpec, Val};
use crate::series::Series;
use crate::taylor::{binomial_mod_p, eval, hasse, WSeries};

/// Deepest truncation of `w` tried by adaptive materialization.
pub const MAX_W_DEPTH: u32 = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WConstructionParams {
    pub p: u32,
    pub q: u32,
    /// `0` for `w` itself, `r` for the tail `w_r`.
    pub start: u32,
    pub depth: u32,
}

impl WConstructionParams {
    pub fn new(p: u32, q: u32, start: u32, depth: u32) -> Result<Self> {
        let out = WConstructionParams { p, q, start, depth };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        for n in [self.p, self.q] {
            if !is_prime(n as u64) {
                return Err(Error::NotPrime(n as u64));
            }
        }
        if self.p == self.q {
            return Err(Error::InvalidParams(format!("p = q = {}", self.p)));
        }
        if self.depth == 0 {
            return Err(Error::InvalidParams("depth must be positive".into()));
        }
        Ok(())
    }
}

/// `Σ_{i=from+1}^{to} t^{β_i}` with the given precision.
pub fn w_segment(
    ctx: &Arc<FieldCtx>,
    group: &Arc<GroupSpec>,
    q: u32,
    from: u32,
    to: u32,
    prec: Val,
) -> Result<Series> {
    let terms = (from + 1..=to).map(|i| (beta(i, q), Coeff::ONE));
    Series::from_terms(ctx, group, terms, prec)
}

pub fn make_w_in(
    params: &WConstructionParams,
    ctx: &Arc<FieldCtx>,
    group: &Arc<GroupSpec>,
) -> Result<Series> {
    params.validate()?;
    let end = params.start + params.depth;
    w_segment(ctx, group, params.q, params.start, end, Val::Fin(beta(end + 1, params.q)))
}

/// `w_start` truncated after `depth` terms, over `F_p` and `Γ`.
pub fn make_w(params: &WConstructionParams) -> Result<Series> {
    params.validate()?;
    let ctx = FieldCtx::new(params.p, 1)?;
    let group = Arc::new(GroupSpec::p_prime(params.p)?);
    make_w_in(params, &ctx, &group)
}

/// `s = w^{1/p}` in `(1/p)Γ`.
pub fn make_s(params: &WConstructionParams) -> Result<Series> {
    make_s_in(params, &FieldCtx::new(params.p, 1)?)
}

pub fn make_s_in(params: &WConstructionParams, ctx: &Arc<FieldCtx>) -> Result<Series> {
    let lifted = Arc::new(GroupSpec::scaled_gamma(params.p, 1)?);
    make_w_in(params, ctx, &lifted)?.pth_root()
}

/// `x = s + t^{(p+1)/p²}` in `(1/p²)Γ`.
pub fn make_x(params: &WConstructionParams) -> Result<Series> {
    make_x_in(params, &FieldCtx::new(params.p, 1)?)
}

pub fn make_x_in(params: &WConstructionParams, ctx: &Arc<FieldCtx>) -> Result<Series> {
    let s = make_s_in(params, ctx)?;
    let group = Arc::new(GroupSpec::scaled_gamma(params.p, 2)?);
    let p = params.p as i64;
    let bump = Series::monomial(ctx, &group, Coeff::ONE, Exp::new(p + 1, p * p))?;
    s.with_group(&group)?.add(&bump)
}

/// `X^{p²} - t^{p+1} - w^p` over `(1/p²)Γ`.
pub fn tower_polynomial(params: &WConstructionParams) -> Result<WSeries> {
    let group = Arc::new(GroupSpec::scaled_gamma(params.p, 2)?);
    let w = make_w(params)?.with_group(&group)?;
    let ctx = w.ctx().clone();
    let p = params.p as i64;
    let t_pow = Series::monomial(&ctx, &group, Coeff::ONE, Exp::from_int(p + 1))?;
    let a0 = t_pow.add(&w.frobenius()?)?.neg();
    let lead = WSeries::monomial(Series::one(&ctx, &group), (p * p) as usize);
    lead.add(&WSeries::monomial(a0, 0))
}

/// `v(y - w)` for `y = (t^{p+1} + w^p)^{1/p}`, computed on the exact head
/// `w_{0,depth}`.
pub fn y_minus_w_valuation(params: &WConstructionParams) -> Result<Val> {
    params.validate()?;
    let ctx = FieldCtx::new(params.p, 1)?;
    let group = Arc::new(GroupSpec::scaled_gamma(params.p, 1)?);
    let head = w_segment(&ctx, &group, params.q, 0, params.depth, Val::Inf)?;
    let p = params.p as i64;
    let t_pow = Series::monomial(&ctx, &group, Coeff::ONE, Exp::from_int(p + 1))?;
    let y = t_pow.add(&head.frobenius()?)?.pth_root()?;
    y.sub(&head)?.valuation()
}

/// A finite sum `Σ c t^ε w^j`.
#[derive(Clone, Debug, PartialEq)]
pub struct WPoly {
    ctx: Arc<FieldCtx>,
    group: Arc<GroupSpec>,
    q: u32,
    terms: BTreeMap<(Exp, u32), Coeff>,
}

impl WPoly {
    pub fn zero(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>, q: u32) -> Self {
        WPoly {
            ctx: ctx.clone(),
            group: group.clone(),
            q,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_terms(
        ctx: &Arc<FieldCtx>,
        group: &Arc<GroupSpec>,
        q: u32,
        terms: impl IntoIterator<Item = (Exp, u32, Coeff)>,
    ) -> Result<Self> {
        let mut out = WPoly::zero(ctx, group, q);
        for (e, j, c) in terms {
            if !group.contains(&e) {
                return Err(Error::NotInGroup(e));
            }
            out.push(e, j, c);
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    pub fn monomial(
        ctx: &Arc<FieldCtx>,
        group: &Arc<GroupSpec>,
        q: u32,
        c: Coeff,
        e: Exp,
        j: u32,
    ) -> Result<Self> {
        WPoly::from_terms(ctx, group, q, [(e, j, c)])
    }

    /// `w` itself.
    pub fn w(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>, q: u32) -> Self {
        let mut out = WPoly::zero(ctx, group, q);
        out.terms.insert((Exp::zero(), 1), Coeff::ONE);
        out
    }

    /// The polynomial in `t` given by an exact series.
    pub fn from_series(s: &Series, q: u32) -> Result<Self> {
        if !s.is_exact() {
            return Err(Error::PrecisionTooLow("w-polynomials are exact".into()));
        }
        WPoly::from_terms(
            s.ctx(),
            s.group(),
            q,
            s.terms().map(|(e, c)| (e.clone(), 0, *c)),
        )
    }

    fn push(&mut self, e: Exp, j: u32, c: Coeff) {
        let ctx = self.ctx.clone();
        self.terms
            .entry((e, j))
            .and_modify(|x| *x = ctx.add(*x, c))
            .or_insert(c);
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, u32, Coeff)> + '_ {
        self.terms.iter().map(|((e, j), c)| (e, *j, *c))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn with_group(&self, group: &Arc<GroupSpec>) -> Result<WPoly> {
        if let Some((e, _)) = self.terms.keys().find(|(e, _)| !group.contains(e)) {
            return Err(Error::NotInGroup(e.clone()));
        }
        Ok(WPoly {
            group: group.clone(),
            ..self.clone()
        })
    }

    fn check(&self, other: &WPoly) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::FieldMismatch);
        }
        if self.group != other.group || self.q != other.q {
            return Err(Error::GroupMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &WPoly) -> Result<WPoly> {
        self.check(other)?;
        let mut out = self.clone();
        for ((e, j), c) in &other.terms {
            out.push(e.clone(), *j, *c);
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    pub fn neg(&self) -> WPoly {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = self.ctx.neg(*c);
        }
        out
    }

    pub fn sub(&self, other: &WPoly) -> Result<WPoly> {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: Coeff) -> WPoly {
        let mut out = WPoly {
            terms: BTreeMap::new(),
            ..self.clone()
        };
        for ((e, j), c) in &self.terms {
            out.push(e.clone(), *j, self.ctx.mul(*c, k));
        }
        out.terms.retain(|_, c| !c.is_zero());
        out
    }

    pub fn mul(&self, other: &WPoly) -> Result<WPoly> {
        self.check(other)?;
        let mut out = WPoly::zero(&self.ctx, &self.group, self.q);
        for ((ea, ja), ca) in &self.terms {
            for ((eb, jb), cb) in &other.terms {
                out.push(ea + eb, ja + jb, self.ctx.mul(*ca, *cb));
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> Result<WPoly> {
        let mut acc = WPoly::from_terms(
            &self.ctx,
            &self.group,
            self.q,
            [(Exp::zero(), 0, Coeff::ONE)],
        )?;
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// `c t^ε w^j ↦ c^p t^{pε} w^{pj}`.
    pub fn frobenius(&self) -> Result<WPoly> {
        let p = self.ctx.p();
        let terms = self
            .terms
            .iter()
            .map(|((e, j), c)| (e.mul_int(p as i64), j * p, self.ctx.frobenius(*c)));
        WPoly::from_terms(&self.ctx, &self.group, self.q, terms.collect::<Vec<_>>())
    }

    /// Substitutes `w_{0,depth} + O(t^{β_{depth+1}})` for `w`.
    pub fn materialize(&self, depth: u32) -> Result<Series> {
        let w = w_segment(
            &self.ctx,
            &self.group,
            self.q,
            0,
            depth,
            Val::Fin(beta(depth + 1, self.q)),
        )?;
        let mut powers: BTreeMap<u32, Series> = BTreeMap::new();
        let mut acc = Series::zero(&self.ctx, &self.group);
        for ((e, j), c) in &self.terms {
            let wj = match powers.get(j) {
                Some(s) => s.clone(),
                None => {
                    let s = w.pow(*j as u64)?;
                    powers.insert(*j, s.clone());
                    s
                }
            };
            acc = acc.add(&wj.shift(e)?.scale(*c))?;
        }
        Ok(acc)
    }

    /// The valuation, materializing `w` deeper until it is determined.
    pub fn valuation(&self) -> Result<Val> {
        if self.is_zero() {
            return Ok(Val::Inf);
        }
        for depth in 1..=MAX_W_DEPTH {
            if let Ok(v) = self.materialize(depth)?.valuation() {
                return Ok(v);
            }
        }
        Err(Error::IndeterminateValuation)
    }

    pub fn to_json(&self) -> Vec<(String, u32, String)> {
        self.terms
            .iter()
            .map(|((e, j), c)| (e.to_string(), *j, self.ctx.format(*c)))
            .collect()
    }

    pub fn from_json(
        json: &[(String, u32, String)],
        ctx: &Arc<FieldCtx>,
        group: &Arc<GroupSpec>,
        q: u32,
    ) -> Result<WPoly> {
        let mut terms = Vec::with_capacity(json.len());
        for (e, j, c) in json {
            terms.push((e.parse::<Exp>()?, *j, ctx.parse(c)?));
        }
        WPoly::from_terms(ctx, group, q, terms)
    }
}

/// A multivariate power series over `k` known up to total degree `degree_cap`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GOracle {
    pub nvars: usize,
    pub degree_cap: u32,
    coeffs: BTreeMap<Vec<u32>, Coeff>,
}

impl GOracle {
    pub fn new(nvars: usize, degree_cap: u32, coeffs: BTreeMap<Vec<u32>, Coeff>) -> Result<Self> {
        for k in coeffs.keys() {
            if k.len() != nvars {
                return Err(Error::InvalidParams(format!(
                    "multi-index of length {} for {} variables",
                    k.len(),
                    nvars
                )));
            }
            if k.iter().sum::<u32>() > degree_cap {
                return Err(Error::InsufficientDegreeCap {
                    needed: k.iter().sum::<u32>() as u64,
                });
            }
        }
        let coeffs = coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        Ok(GOracle {
            nvars,
            degree_cap,
            coeffs,
        })
    }

    /// `g ≡ 1`.
    pub fn one(nvars: usize, degree_cap: u32) -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![0; nvars], Coeff::ONE);
        GOracle {
            nvars,
            degree_cap,
            coeffs,
        }
    }

    /// `g(X) = X`, known in every degree.
    pub fn identity() -> Self {
        let mut coeffs = BTreeMap::new();
        coeffs.insert(vec![1], Coeff::ONE);
        GOracle {
            nvars: 1,
            degree_cap: u32::MAX,
            coeffs,
        }
    }

    /// Largest total degree with a nonzero coefficient.
    pub fn max_degree(&self) -> u64 {
        self.coeffs
            .keys()
            .map(|k| k.iter().map(|&x| x as u64).sum())
            .max()
            .unwrap_or(0)
    }

    /// `Σ X^n = 1/(1 - X)`.
    pub fn geometric(degree_cap: u32) -> Self {
        let coeffs = (0..=degree_cap).map(|n| (vec![n], Coeff::ONE)).collect();
        GOracle {
            nvars: 1,
            degree_cap,
            coeffs,
        }
    }

    /// `Σ (-1)^n X^n = 1/(1 + X)`.
    pub fn alternating_geometric(ctx: &FieldCtx, degree_cap: u32) -> Self {
        let coeffs = (0..=degree_cap)
            .map(|n| (vec![n], if n % 2 == 0 { Coeff::ONE } else { ctx.neg(Coeff::ONE) }))
            .collect();
        GOracle {
            nvars: 1,
            degree_cap,
            coeffs,
        }
    }

    pub fn coeff(&self, idx: &[u32]) -> Coeff {
        self.coeffs.get(idx).copied().unwrap_or(Coeff::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vec<u32>, Coeff)> + '_ {
        self.coeffs.iter().map(|(k, c)| (k, *c))
    }
}

/// `t^γ g(h_1, …, h_n)` with every `v(h_i) > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuasiFinite {
    gamma: Exp,
    h: Vec<WPoly>,
    g: GOracle,
    hvals: Vec<Exp>,
}

impl QuasiFinite {
    pub fn new(gamma: Exp, h: Vec<WPoly>, g: GOracle) -> Result<Self> {
        if g.nvars != h.len() {
            return Err(Error::InvalidParams(format!(
                "g has {} variables but {} arguments were given",
                g.nvars,
                h.len()
            )));
        }
        let mut hvals = Vec::with_capacity(h.len());
        for (i, hi) in h.iter().enumerate() {
            match hi.valuation()? {
                Val::Fin(v) if v.is_positive() => hvals.push(v),
                _ => return Err(Error::NonPositiveValue(i + 1)),
            }
            if i > 0 && (hi.group != h[0].group || hi.q != h[0].q || hi.ctx != h[0].ctx) {
                return Err(Error::GroupMismatch);
            }
        }
        Ok(QuasiFinite { gamma, h, g, hvals })
    }

    /// `t^{γ}·(t^{-γ} z)` with `γ` strictly below `min(0, v(z))`.
    pub fn from_wpoly(z: &WPoly) -> Result<Self> {
        let v = match z.valuation()? {
            Val::Fin(v) => v,
            Val::Inf => return Err(Error::DegenerateZero),
        };
        let floor = Exp::from_big(v.floor_int(), 1.into());
        let gamma = floor.min(Exp::zero()) - Exp::one();
        let shift = WPoly::monomial(z.ctx(), z.group(), z.q, Coeff::ONE, -&gamma, 0)?;
        QuasiFinite::new(gamma, vec![z.mul(&shift)?], GOracle::identity())
    }

    /// `w^{-1} = t^{-β_1}·g(t^{-β_1}w - 1)` with `g = 1/(1+X)`.
    pub fn w_inverse(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>, q: u32, degree_cap: u32) -> Result<Self> {
        let b1 = beta(1, q);
        let h = WPoly::from_terms(
            ctx,
            group,
            q,
            [(-&b1, 1, Coeff::ONE), (Exp::zero(), 0, ctx.neg(Coeff::ONE))],
        )?;
        QuasiFinite::new(-b1, vec![h], GOracle::alternating_geometric(ctx, degree_cap))
    }

    pub fn gamma(&self) -> &Exp {
        &self.gamma
    }

    pub fn h(&self) -> &[WPoly] {
        &self.h
    }

    pub fn g(&self) -> &GOracle {
        &self.g
    }

    pub fn h_valuations(&self) -> &[Exp] {
        &self.hvals
    }

    fn ctx_group(&self) -> Option<(&Arc<FieldCtx>, &Arc<GroupSpec>, u32)> {
        self.h.first().map(|h| (&h.ctx, &h.group, h.q))
    }

    pub fn to_json(&self) -> QuasiFiniteJson {
        let fmt = |c: Coeff| match self.ctx_group() {
            Some((ctx, _, _)) => ctx.format(c),
            None => c.repr().to_string(),
        };
        QuasiFiniteJson {
            gamma: self.gamma.clone(),
            h: self.h.iter().map(WPoly::to_json).collect(),
            g: GOracleJson {
                degree_cap: self.g.degree_cap,
                coeffs: self
                    .g
                    .iter()
                    .map(|(k, c)| {
                        let key: Vec<String> = k.iter().map(u32::to_string).collect();
                        (key.join(","), fmt(c))
                    })
                    .collect(),
            },
        }
    }

    pub fn from_json(
        json: &QuasiFiniteJson,
        ctx: &Arc<FieldCtx>,
        group: &Arc<GroupSpec>,
        q: u32,
    ) -> Result<Self> {
        let h = json
            .h
            .iter()
            .map(|t| WPoly::from_json(t, ctx, group, q))
            .collect::<Result<Vec<_>>>()?;
        let mut coeffs = BTreeMap::new();
        for (k, c) in &json.g.coeffs {
            let idx = if k.is_empty() {
                Vec::new()
            } else {
                k.split(',')
                    .map(|x| x.trim().parse::<u32>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| Error::InvalidParams(format!("bad multi-index `{k}`")))?
            };
            coeffs.insert(idx, ctx.parse(c)?);
        }
        let g = GOracle::new(h.len(), json.g.degree_cap, coeffs)?;
        QuasiFinite::new(json.gamma.clone(), h, g)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GOracleJson {
    pub degree_cap: u32,
    pub coeffs: BTreeMap<String, String>,
}

/// `{"gamma":"-2/3","h":[[["-2/3",1,"1"],["0",0,"1"]]],"g":{"degree_cap":12,"coeffs":{"0":"1"}}}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiFiniteJson {
    pub gamma: Exp,
    pub h: Vec<Vec<(String, u32, String)>>,
    pub g: GOracleJson,
}

/// Largest total degree of `g` that can contribute below `bound` when every
/// argument has value at least `m`.
fn degree_needed(bound: &Exp, m: &Exp) -> u64 {
    if !bound.is_positive() {
        return 0;
    }
    let n: num_bigint::BigInt = bound.div_exp(m).ceil_int() - 1;
    n.to_u64().unwrap_or(u64::MAX)
}

fn power_table<T: Clone>(
    base: &T,
    n: u64,
    one: T,
    mul: impl Fn(&T, &T) -> Result<T>,
) -> Result<Vec<T>> {
    let mut out = vec![one];
    for k in 0..n as usize {
        let next = mul(&out[k], base)?;
        out.push(next);
    }
    Ok(out)
}

/// The series of `t^γ g(h_1, …, h_n)`, exact below `target`.
pub fn qf_expand(y: &QuasiFinite, target: &Exp) -> Result<Series> {
    let Some((ctx, group, _)) = y.ctx_group() else {
        return Err(Error::InvalidParams("no arguments to g".into()));
    };
    if !group.contains(&y.gamma) {
        return Err(Error::NotInGroup(y.gamma.clone()));
    }
    let bound = target - &y.gamma;
    let m = y.hvals.iter().min().expect("nonempty").clone();
    let needed = degree_needed(&bound, &m);
    if needed > y.g.degree_cap as u64 {
        return Err(Error::InsufficientDegreeCap { needed });
    }
    let needed = needed.min(y.g.max_degree());
    let bound_v = Val::Fin(bound.clone());
    let mut hs = Vec::with_capacity(y.h.len());
    for h in &y.h {
        let mut found = None;
        for depth in 1..=MAX_W_DEPTH {
            let s = h.materialize(depth)?;
            if s.prec() >= &bound_v {
                found = Some(s.truncate(&bound_v));
                break;
            }
        }
        hs.push(found.ok_or_else(|| Error::UnreachablePrecision(target.clone()))?);
    }
    let one = Series::one(ctx, group);
    let tables = hs
        .iter()
        .map(|h| power_table(h, needed, one.clone(), |a, b| Ok(a.mul(b)?.truncate(&bound_v))))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Series::zero(ctx, group).truncate(&bound_v);
    for (idx, c) in y.g.iter() {
        if idx.iter().map(|&k| k as u64).sum::<u64>() > needed {
            continue;
        }
        let mut term = Series::constant(ctx, group, c);
        for (table, &k) in tables.iter().zip(idx) {
            term = term.mul(&table[k as usize])?.truncate(&bound_v);
        }
        acc = acc.add(&term)?;
    }
    Ok(acc.shift(&y.gamma)?.truncate(&Val::Fin(target.clone())))
}

/// `Σ c_{εj} t^ε Y^j` with `Y = w_r / t^β`, known for every term of weight
/// `ε + j(β_{r+1} - β)` below `prec`.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion {
    ctx: Arc<FieldCtx>,
    group: Arc<GroupSpec>,
    q: u32,
    r: u32,
    beta: Exp,
    terms: BTreeMap<(Exp, u32), Coeff>,
    prec: Val,
}

impl Expansion {
    pub fn new(
        ctx: &Arc<FieldCtx>,
        group: &Arc<GroupSpec>,
        q: u32,
        r: u32,
        beta_shift: Exp,
        terms: impl IntoIterator<Item = (Exp, u32, Coeff)>,
        prec: Val,
    ) -> Result<Self> {
        if beta_shift.is_negative() || beta_shift >= beta(r + 1, q) || !group.contains(&beta_shift) {
            return Err(Error::FrameTooCoarse { r, beta: beta_shift });
        }
        let mut out = Expansion {
            ctx: ctx.clone(),
            group: group.clone(),
            q,
            r,
            beta: beta_shift,
            terms: BTreeMap::new(),
            prec,
        };
        for (e, j, c) in terms {
            if !group.contains(&e) {
                return Err(Error::NotInGroup(e));
            }
            out.push(e, j, c);
        }
        out.clean();
        Ok(out)
    }

    fn empty_like(&self, prec: Val) -> Expansion {
        Expansion {
            terms: BTreeMap::new(),
            prec,
            ..self.clone()
        }
    }

    fn push(&mut self, e: Exp, j: u32, c: Coeff) {
        let ctx = self.ctx.clone();
        self.terms
            .entry((e, j))
            .and_modify(|x| *x = ctx.add(*x, c))
            .or_insert(c);
    }

    fn clean(&mut self) {
        let delta = self.delta();
        let prec = self.prec.clone();
        self.terms
            .retain(|(e, j), c| !c.is_zero() && prec.exceeds(&(e + delta.mul_int(*j as i64))));
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn beta(&self) -> &Exp {
        &self.beta
    }

    pub fn prec(&self) -> &Val {
        &self.prec
    }

    /// `v(w_r / t^β) = β_{r+1} - β`.
    pub fn delta(&self) -> Exp {
        beta(self.r + 1, self.q) - &self.beta
    }

    pub fn weight(&self, e: &Exp, j: u32) -> Exp {
        e + self.delta().mul_int(j as i64)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exp, u32, Coeff)> + '_ {
        self.terms.iter().map(|((e, j), c)| (e, *j, *c))
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &Exp, j: u32) -> Coeff {
        self.terms.get(&(e.clone(), j)).copied().unwrap_or(Coeff::ZERO)
    }

    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.prec.is_inf()
    }

    /// Smallest term weight, or `prec` when no term is known.
    pub fn min_weight(&self) -> Val {
        let delta = self.delta();
        self.terms
            .keys()
            .map(|(e, j)| Val::Fin(e + delta.mul_int(*j as i64)))
            .min()
            .unwrap_or_else(|| self.prec.clone())
    }

    /// Largest term weight, `None` without terms.
    pub fn max_weight(&self) -> Option<Exp> {
        let delta = self.delta();
        self.terms
            .keys()
            .map(|(e, j)| e + delta.mul_int(*j as i64))
            .max()
    }

    /// The pair of least weight; ties go to the smaller `t`-exponent.
    pub fn leading_pair(&self) -> Option<(Exp, u32, Coeff)> {
        let delta = self.delta();
        self.terms
            .iter()
            .min_by(|((ea, ja), _), ((eb, jb), _)| {
                let wa = ea + delta.mul_int(*ja as i64);
                let wb = eb + delta.mul_int(*jb as i64);
                wa.cmp(&wb).then(ea.cmp(eb))
            })
            .map(|((e, j), c)| (e.clone(), *j, *c))
    }

    fn check(&self, other: &Expansion) -> Result<()> {
        if self.ctx != other.ctx {
            return Err(Error::FieldMismatch);
        }
        if self.group != other.group || self.q != other.q {
            return Err(Error::GroupMismatch);
        }
        if self.r != other.r || self.beta != other.beta {
            return Err(Error::FrameTooCoarse {
                r: other.r,
                beta: other.beta.clone(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Expansion) -> Result<Expansion> {
        self.check(other)?;
        let mut out = self.empty_like((&self.prec).min(&other.prec).clone());
        for ((e, j), c) in self.terms.iter().chain(other.terms.iter()) {
            out.push(e.clone(), *j, *c);
        }
        out.clean();
        Ok(out)
    }

    pub fn neg(&self) -> Expansion {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = self.ctx.neg(*c);
        }
        out
    }

    pub fn sub(&self, other: &Expansion) -> Result<Expansion> {
        self.add(&other.neg())
    }

    pub fn scale(&self, k: Coeff) -> Expansion {
        if k.is_zero() {
            return self.empty_like(Val::Inf);
        }
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = self.ctx.mul(*c, k);
        }
        out
    }

    /// Multiply by `t^e`.
    pub fn shift(&self, e: &Exp) -> Result<Expansion> {
        if !self.group.contains(e) {
            return Err(Error::NotInGroup(e.clone()));
        }
        let mut out = self.empty_like(self.prec.add_exp(e));
        for ((x, j), c) in &self.terms {
            out.push(x + e, *j, *c);
        }
        Ok(out)
    }

    pub fn truncate(&self, bound: &Val) -> Expansion {
        let mut out = self.clone();
        out.prec = (&self.prec).min(bound).clone();
        out.clean();
        out
    }

    pub fn mul(&self, other: &Expansion) -> Result<Expansion> {
        self.check(other)?;
        let prec = self
            .prec
            .add(&other.min_weight())
            .min(other.prec.add(&self.min_weight()));
        let mut out = self.empty_like(prec);
        for ((ea, ja), ca) in &self.terms {
            for ((eb, jb), cb) in &other.terms {
                out.push(ea + eb, ja + jb, self.ctx.mul(*ca, *cb));
            }
        }
        out.clean();
        Ok(out)
    }

    /// Rewrites a `w`-polynomial using `w = w_{0r} + t^β Y`.
    pub fn from_wpoly(z: &WPoly, r: u32, beta_shift: &Exp) -> Result<Expansion> {
        let mut out = Expansion::new(
            &z.ctx,
            &z.group,
            z.q,
            r,
            beta_shift.clone(),
            [],
            Val::Inf,
        )?;
        let head = w_segment(&z.ctx, &z.group, z.q, 0, r, Val::Inf)?;
        let p = z.ctx.p();
        let mut head_pows: Vec<Series> = vec![Series::one(&z.ctx, &z.group)];
        for ((e, j), c) in &z.terms {
            while head_pows.len() <= *j as usize {
                let next = head_pows.last().expect("nonempty").mul(&head)?;
                head_pows.push(next);
            }
            for k in 0..=*j {
                let binom = binomial_mod_p(*j as u64, k as u64, p);
                if binom == 0 {
                    continue;
                }
                let coef = z.ctx.mul(*c, z.ctx.from_int(binom as i64));
                let base = e + beta_shift.mul_int(k as i64);
                for (eta, a) in head_pows[(j - k) as usize].terms() {
                    out.push(&base + eta, k, z.ctx.mul(coef, *a));
                }
            }
        }
        out.clean();
        Ok(out)
    }

    /// Expands `t^γ g(h)` in the frame `(r, β)` below weight `target`.
    pub fn from_quasifinite(
        y: &QuasiFinite,
        r: u32,
        beta_shift: &Exp,
        target: &Exp,
    ) -> Result<Expansion> {
        let hs = y
            .h
            .iter()
            .map(|h| Expansion::from_wpoly(h, r, beta_shift))
            .collect::<Result<Vec<_>>>()?;
        let Some(first) = hs.first() else {
            return Err(Error::InvalidParams("no arguments to g".into()));
        };
        let coarse = || Error::FrameTooCoarse {
            r,
            beta: beta_shift.clone(),
        };
        let mut m: Option<Exp> = None;
        for h in &hs {
            match h.min_weight() {
                Val::Fin(x) if x.is_positive() => {
                    if m.as_ref().is_none_or(|cur| &x < cur) {
                        m = Some(x);
                    }
                }
                _ => return Err(coarse()),
            }
        }
        let m = m.ok_or_else(coarse)?;
        let bound = target - &y.gamma;
        let needed = degree_needed(&bound, &m);
        if needed > y.g.degree_cap as u64 {
            return Err(Error::InsufficientDegreeCap { needed });
        }
        let needed = needed.min(y.g.max_degree());
        let bound_v = Val::Fin(bound);
        let one = first.empty_like(Val::Inf);
        let one = {
            let mut o = one;
            o.push(Exp::zero(), 0, Coeff::ONE);
            o
        };
        let tables = hs
            .iter()
            .map(|h| power_table(h, needed, one.clone(), |a, b| Ok(a.mul(b)?.truncate(&bound_v))))
            .collect::<Result<Vec<_>>>()?;
        let mut acc = first.empty_like(bound_v.clone());
        for (idx, c) in y.g.iter() {
            if idx.iter().map(|&k| k as u64).sum::<u64>() > needed {
                continue;
            }
            let mut term = one.scale(c);
            for (table, &k) in tables.iter().zip(idx) {
                term = term.mul(&table[k as usize])?.truncate(&bound_v);
            }
            acc = acc.add(&term)?;
        }
        acc.shift(&y.gamma)
    }

    /// Moves to the finer frame `r' ≥ r` (same `β`) via
    /// `Y_r = t^{-β}(t^{β_{r+1}} + … + t^{β_{r'}}) + Y_{r'}`.
    pub fn reframe(&self, r_new: u32) -> Result<Expansion> {
        if r_new < self.r {
            return Err(Error::FrameTooCoarse {
                r: r_new,
                beta: self.beta.clone(),
            });
        }
        let mut out = Expansion::new(
            &self.ctx,
            &self.group,
            self.q,
            r_new,
            self.beta.clone(),
            [],
            self.prec.clone(),
        )?;
        let mid = w_segment(&self.ctx, &self.group, self.q, self.r, r_new, Val::Inf)?
            .shift(&-&self.beta)?;
        let p = self.ctx.p();
        let mut mid_pows: Vec<Series> = vec![Series::one(&self.ctx, &self.group)];
        for ((e, j), c) in &self.terms {
            while mid_pows.len() <= *j as usize {
                let next = mid_pows.last().expect("nonempty").mul(&mid)?;
                mid_pows.push(next);
            }
            for k in 0..=*j {
                let binom = binomial_mod_p(*j as u64, k as u64, p);
                if binom == 0 {
                    continue;
                }
                let coef = self.ctx.mul(*c, self.ctx.from_int(binom as i64));
                for (eta, a) in mid_pows[(j - k) as usize].terms() {
                    out.push(e + eta, k, self.ctx.mul(coef, *a));
                }
            }
        }
        out.clean();
        Ok(out)
    }

    /// Substitutes `Y = t^{-β} w_r` with `w_r` truncated after `depth` terms.
    pub fn materialize(&self, depth: u32) -> Result<Series> {
        let end = self.r + depth;
        let y = w_segment(
            &self.ctx,
            &self.group,
            self.q,
            self.r,
            end,
            Val::Fin(beta(end + 1, self.q)),
        )?
        .shift(&-&self.beta)?;
        let mut pows: BTreeMap<u32, Series> = BTreeMap::new();
        let mut acc = Series::zero(&self.ctx, &self.group);
        for ((e, j), c) in &self.terms {
            if !pows.contains_key(j) {
                pows.insert(*j, y.pow(*j as u64)?);
            }
            acc = acc.add(&pows[j].shift(e)?.scale(*c))?;
        }
        Ok(acc.truncate(&self.prec))
    }

    /// The valuation of the represented element, materializing deeper until
    /// it is determined.
    pub fn valuation(&self) -> Result<Val> {
        if self.is_exact_zero() {
            return Ok(Val::Inf);
        }
        for depth in 1..=MAX_W_DEPTH {
            if let Ok(v) = self.materialize(depth)?.valuation() {
                return Ok(v);
            }
        }
        Err(Error::IndeterminateValuation)
    }

    /// The `w`-polynomial with the same terms, using
    /// `t^ε Y^j = t^{ε - jβ}(w - w_{0r})^j`.
    pub fn to_wpoly(&self) -> Result<WPoly> {
        let head = WPoly::from_series(
            &w_segment(&self.ctx, &self.group, self.q, 0, self.r, Val::Inf)?,
            self.q,
        )?;
        let tail = WPoly::w(&self.ctx, &self.group, self.q).sub(&head)?;
        let mut out = WPoly::zero(&self.ctx, &self.group, self.q);
        for ((e, j), c) in &self.terms {
            let mono = WPoly::monomial(
                &self.ctx,
                &self.group,
                self.q,
                *c,
                e - self.beta.mul_int(*j as i64),
                0,
            )?;
            out = out.add(&mono.mul(&tail.pow(*j)?)?)?;
        }
        Ok(out)
    }
}

/// Stored terms of weight strictly below `bound`.
pub fn bounded_terms(e: &Expansion, bound: &Exp) -> Vec<(Exp, u32, Coeff)> {
    let delta = e.delta();
    e.terms
        .iter()
        .filter(|((x, j), _)| &(x + delta.mul_int(*j as i64)) < bound)
        .map(|((x, j), c)| (x.clone(), *j, *c))
        .collect()
}

/// Newton iteration from a simple residue root to a series root of `f`,
/// correct below `target`.
pub fn hensel_lift(f: &WSeries, residue_root: Coeff, target: &Exp) -> Result<Series> {
    let ctx = f.ctx();
    let group = f.group();
    let mut residue = Vec::with_capacity(f.coeffs().len());
    for a in f.coeffs() {
        if let Val::Fin(v) = a.valuation_lower() {
            if v.is_negative() {
                return Err(Error::InvalidParams(
                    "coefficients must have nonnegative valuation".into(),
                ));
            }
        }
        if !a.prec().exceeds(&Exp::zero()) {
            return Err(Error::PrecisionTooLow("constant terms of f are unknown".into()));
        }
        residue.push(a.coeff(&Exp::zero()));
    }
    let residue_eval = |coeffs: &[Coeff], x: Coeff| {
        coeffs
            .iter()
            .rev()
            .fold(Coeff::ZERO, |acc, &c| ctx.add(ctx.mul(acc, x), c))
    };
    if !residue_eval(&residue, residue_root).is_zero() {
        return Err(Error::NoResidueRoot);
    }
    let dres: Vec<Coeff> = residue
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| ctx.mul(c, ctx.from_int(i as i64)))
        .collect();
    if residue_eval(&dres, residue_root).is_zero() {
        return Err(Error::NonSimpleResidueRoot);
    }
    let df = hasse(f, 1);
    let bound = Val::Fin(target.clone());
    let mut y = Series::constant(ctx, group, residue_root);
    for _ in 0..64 {
        let fy = eval(f, &y)?;
        if !fy.valuation_lower().finite().is_some_and(|v| v < target) {
            return Ok(y.truncate(&bound));
        }
        let dfy = eval(&df, &y)?;
        let step = fy.mul(&dfy.inv_to(target)?)?.truncate(&bound);
        let next = y.sub(&step)?.truncate(&bound).head();
        if next == y {
            return Err(Error::NoConvergence);
        }
        y = next;
    }
    Err(Error::NoConvergence)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(n: i64, d: i64) -> Exp {
        Exp::new(n, d)
    }

    fn p23(depth: u32) -> WConstructionParams {
        WConstructionParams::new(2, 3, 0, depth).unwrap()
    }

    fn k2() -> (Arc<FieldCtx>, Arc<GroupSpec>) {
        (
            FieldCtx::new(2, 1).unwrap(),
            Arc::new(GroupSpec::p_prime(2).unwrap()),
        )
    }

    fn exps(s: &Series) -> Vec<Exp> {
        s.terms().map(|(e, _)| e.clone()).collect()
    }

    #[test]
    fn w_examples() {
        let w = make_w(&p23(3)).unwrap();
        assert_eq!(w.to_string(), "t^(2/3) + t^(8/9) + t^(26/27) + O(t^(80/81))");
        let w1 = make_w(&WConstructionParams::new(2, 3, 1, 2).unwrap()).unwrap();
        assert_eq!(exps(&w1), vec![e(8, 9), e(26, 27)]);
        let (k, g) = k2();
        for l in 1..5 {
            let head = w_segment(&k, &g, 3, 0, l, Val::Inf).unwrap();
            let tail = make_w(&WConstructionParams::new(2, 3, l, 6 - l).unwrap()).unwrap();
            assert_eq!(head.add(&tail).unwrap(), make_w(&p23(6)).unwrap());
        }
        assert!(WConstructionParams::new(2, 2, 0, 1).is_err());
    }

    #[test]
    fn s_and_x() {
        let s = make_s(&p23(3)).unwrap();
        assert_eq!(exps(&s), vec![e(1, 3), e(4, 9), e(13, 27)]);
        let lifted = Arc::new(GroupSpec::scaled_gamma(2, 1).unwrap());
        assert!(s.frobenius().unwrap().agrees_with(&make_w(&p23(3)).unwrap().with_group(&lifted).unwrap()));
        let x = make_x(&p23(3)).unwrap();
        assert_eq!(x.valuation().unwrap(), Val::Fin(e(1, 3)));
        for params in [p23(4), WConstructionParams::new(3, 2, 0, 4).unwrap()] {
            let f = tower_polynomial(&params).unwrap();
            let x = make_x(&params).unwrap();
            let res = eval(&f, &x).unwrap();
            assert!(res.has_no_terms());
            assert!(!res.is_exact());
            let pv = (params.p as i64 + 1, params.p as i64);
            assert_eq!(y_minus_w_valuation(&params).unwrap(), Val::Fin(e(pv.0, pv.1)));
        }
    }

    #[test]
    fn s_for_p3_needs_lift() {
        let w = make_w(&WConstructionParams::new(3, 2, 0, 3).unwrap()).unwrap();
        assert_eq!(w.pth_root(), Err(Error::SupportNotDivisible(e(1, 2))));
        let s = make_s(&WConstructionParams::new(3, 2, 0, 3).unwrap()).unwrap();
        assert_eq!(s.valuation().unwrap(), Val::Fin(e(1, 6)));
    }

    #[test]
    fn qf_w_inverse() {
        let (k, g) = k2();
        let y = QuasiFinite::w_inverse(&k, &g, 3, 12).unwrap();
        assert_eq!(y.h_valuations(), &[e(2, 9)]);
        let inv = qf_expand(&y, &e(-10, 27)).unwrap();
        assert_eq!(exps(&inv), vec![e(-2, 3), e(-4, 9)]);
        assert_eq!(inv.prec(), &Val::Fin(e(-10, 27)));
        let direct = make_w(&p23(8)).unwrap().inv().unwrap();
        assert!(inv.agrees_with(&direct));
        let w = make_w(&p23(8)).unwrap();
        assert!(inv.mul(&w).unwrap().agrees_with(&Series::one(&k, &g)));
        assert!(matches!(
            qf_expand(&y, &e(1, 3)),
            Err(Error::UnreachablePrecision(_))
        ));
        let small = QuasiFinite::w_inverse(&k, &g, 3, 1).unwrap();
        assert_eq!(
            qf_expand(&small, &e(-1, 9)),
            Err(Error::InsufficientDegreeCap { needed: 2 })
        );
    }

    #[test]
    fn qf_trivial_cases() {
        let (k, g) = k2();
        let t = WPoly::monomial(&k, &g, 3, Coeff::ONE, Exp::one(), 0).unwrap();
        let one = QuasiFinite::new(Exp::zero(), vec![t.clone()], GOracle::one(1, 10)).unwrap();
        assert!(qf_expand(&one, &e(5, 1)).unwrap().agrees_with(&Series::one(&k, &g)));
        let geo = QuasiFinite::new(Exp::zero(), vec![t], GOracle::geometric(10)).unwrap();
        let s = qf_expand(&geo, &e(5, 1)).unwrap();
        assert_eq!(exps(&s), (0..5).map(Exp::from_int).collect::<Vec<_>>());
        let bad = WPoly::monomial(&k, &g, 3, Coeff::ONE, e(-1, 1), 0).unwrap();
        assert_eq!(
            QuasiFinite::new(Exp::zero(), vec![bad], GOracle::identity()),
            Err(Error::NonPositiveValue(1))
        );
    }

    #[test]
    fn qf_json_roundtrip() {
        let (k, g) = k2();
        let y = QuasiFinite::w_inverse(&k, &g, 3, 4).unwrap();
        let j = serde_json::to_string(&y.to_json()).unwrap();
        assert!(j.starts_with(r#"{"gamma":"-2/3","h":[[["-2/3",1,"1"],["0",0,"1"]]],"g":{"degree_cap":4"#));
        let back: QuasiFiniteJson = serde_json::from_str(&j).unwrap();
        assert_eq!(QuasiFinite::from_json(&back, &k, &g, 3).unwrap(), y);
    }

    #[test]
    fn expansion_of_w_inverse() {
        let (k, g) = k2();
        let y = QuasiFinite::w_inverse(&k, &g, 3, 12).unwrap();
        let ex = Expansion::from_quasifinite(&y, 2, &e(2, 3), &e(1, 3)).unwrap();
        assert_eq!(
            bounded_terms(&ex, &e(-4, 9)),
            vec![(e(-2, 3), 0, Coeff::ONE)]
        );
        assert!(bounded_terms(&ex, &e(-2, 3)).is_empty());
        assert_eq!(bounded_terms(&ex, &e(10, 1)).len(), ex.num_terms());
        let direct = qf_expand(&y, &e(-10, 27)).unwrap();
        assert!(ex.materialize(10).unwrap().agrees_with(&direct));
        // the shift β_1 is too large for the frame r = 0
        assert!(matches!(
            Expansion::from_quasifinite(&y, 0, &e(2, 3), &e(1, 3)),
            Err(Error::FrameTooCoarse { .. })
        ));
    }

    #[test]
    fn expansion_roundtrips() {
        let (k, g) = k2();
        let z = WPoly::from_terms(
            &k,
            &g,
            3,
            [(e(1, 3), 2, Coeff::ONE), (e(-1, 1), 1, Coeff::ONE), (e(5, 1), 0, Coeff::ONE)],
        )
        .unwrap();
        let ex = Expansion::from_wpoly(&z, 2, &Exp::zero()).unwrap();
        assert_eq!(ex.to_wpoly().unwrap(), z);
        let fine = ex.reframe(4).unwrap();
        assert!(fine.materialize(6).unwrap().agrees_with(&z.materialize(10).unwrap()));
        assert_eq!(fine.to_wpoly().unwrap(), z);
    }

    #[test]
    fn hensel_examples() {
        let (k, g) = k2();
        let t = Series::monomial(&k, &g, Coeff::ONE, Exp::one()).unwrap();
        let f = WSeries::new(&k, &g, vec![t.clone(), Series::one(&k, &g), Series::one(&k, &g)]).unwrap();
        let y = hensel_lift(&f, Coeff::ZERO, &e(9, 1)).unwrap();
        assert_eq!(exps(&y), vec![e(1, 1), e(2, 1), e(4, 1), e(8, 1)]);
        assert!(eval(&f, &y.head()).unwrap().valuation_lower() >= Val::Fin(e(9, 1)));
        let y1 = hensel_lift(&f, Coeff::ONE, &e(9, 1)).unwrap();
        assert_eq!(y1, y.add(&Series::one(&k, &g)).unwrap());
        let deeper = hensel_lift(&f, Coeff::ZERO, &e(20, 1)).unwrap();
        assert!(deeper.agrees_with(&y));
        let f2 = WSeries::new(&k, &g, vec![t, Series::zero(&k, &g), Series::one(&k, &g)]).unwrap();
        assert_eq!(hensel_lift(&f2, Coeff::ZERO, &e(4, 1)), Err(Error::NonSimpleResidueRoot));
    }
}
