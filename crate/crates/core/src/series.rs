//! Truncated Hahn series `Σ c_ε t^ε + O(t^prec)` over `F_{p^m}`.
//!
//! Invariants:
//! - every stored exponent is `< prec` and lies in the series' group
//! - no stored coefficient is zero
//! - `prec = Inf` marks an exactly represented element of finite support
//!
//! Precision is propagated conservatively: a result never claims a term
//! that could still change if the inputs were known to higher precision.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::{Coeff, FieldCtx};
use crate::error::{Error, Result};
use crate::exponents::{Exp, GroupSpec, Val};

#[derive(Clone)]
pub struct Series {
    ctx: Arc<FieldCtx>,
    group: Arc<GroupSpec>,
    terms: BTreeMap<Exp, Coeff>,
    prec: Val,
}

impl PartialEq for Series {
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx
            && self.group == other.group
            && self.terms == other.terms
            && self.prec == other.prec
    }
}

impl fmt::Debug for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Series({self})")
    }
}

impl Series {
    pub fn zero(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>) -> Self {
        Series {
            ctx: ctx.clone(),
            group: group.clone(),
            terms: BTreeMap::new(),
            prec: Val::Inf,
        }
    }

    /// The unknown element `O(t^prec)`.
    pub fn big_o(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>, prec: Exp) -> Self {
        Series {
            prec: Val::Fin(prec),
            ..Series::zero(ctx, group)
        }
    }

    pub fn one(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>) -> Self {
        Series::constant(ctx, group, Coeff::ONE)
    }

    pub fn constant(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>, c: Coeff) -> Self {
        let mut s = Series::zero(ctx, group);
        if !c.is_zero() {
            s.terms.insert(Exp::zero(), c);
        }
        s
    }

    pub fn monomial(
        ctx: &Arc<FieldCtx>,
        group: &Arc<GroupSpec>,
        c: Coeff,
        e: Exp,
    ) -> Result<Self> {
        Series::from_terms(ctx, group, [(e, c)], Val::Inf)
    }

    /// Builds a series from arbitrary terms: repeated exponents are summed,
    /// zero coefficients and exponents at or beyond `prec` are dropped.
    pub fn from_terms(
        ctx: &Arc<FieldCtx>,
        group: &Arc<GroupSpec>,
        terms: impl IntoIterator<Item = (Exp, Coeff)>,
        prec: Val,
    ) -> Result<Self> {
        let mut map: BTreeMap<Exp, Coeff> = BTreeMap::new();
        for (e, c) in terms {
            if !group.contains(&e) {
                return Err(Error::NotInGroup(e));
            }
            if prec.exceeds(&e) {
                accumulate(ctx, &mut map, e, c);
            }
        }
        map.retain(|_, c| !c.is_zero());
        Ok(Series {
            ctx: ctx.clone(),
            group: group.clone(),
            terms: map,
            prec,
        })
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn prec(&self) -> &Val {
        &self.prec
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Exp, &Coeff)> + '_ {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coeff(&self, e: &Exp) -> Coeff {
        self.terms.get(e).copied().unwrap_or(Coeff::ZERO)
    }

    pub fn leading(&self) -> Option<(&Exp, &Coeff)> {
        self.terms.iter().next()
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_inf()
    }

    /// No known nonzero term (the element may still be `O(t^prec)`).
    pub fn has_no_terms(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_exact_zero(&self) -> bool {
        self.terms.is_empty() && self.prec.is_inf()
    }

    /// The `t`-adic valuation: the least exponent, `Inf` for exact zero.
    pub fn valuation(&self) -> Result<Val> {
        match self.terms.keys().next() {
            Some(e) => Ok(Val::Fin(e.clone())),
            None if self.prec.is_inf() => Ok(Val::Inf),
            None => Err(Error::IndeterminateValuation),
        }
    }

    /// A certified lower bound for the valuation of the represented element.
    pub fn valuation_lower(&self) -> Val {
        match self.terms.keys().next() {
            Some(e) => Val::Fin(e.clone()),
            None => self.prec.clone(),
        }
    }

    /// Forget everything at or beyond `bound`.
    pub fn truncate(&self, bound: &Val) -> Series {
        let prec = (&self.prec).min(bound).clone();
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| prec.exceeds(e))
            .map(|(e, c)| (e.clone(), *c))
            .collect();
        Series {
            terms,
            prec,
            ..self.clone_empty()
        }
    }

    /// The exact polynomial formed by the known terms (drops the `O` part).
    pub fn head(&self) -> Series {
        Series {
            prec: Val::Inf,
            ..self.clone()
        }
    }

    /// Re-home the series in another group containing its support.
    pub fn with_group(&self, group: &Arc<GroupSpec>) -> Result<Series> {
        if let Some(e) = self.terms.keys().find(|e| !group.contains(e)) {
            return Err(Error::NotInGroup(e.clone()));
        }
        Ok(Series {
            group: group.clone(),
            ..self.clone()
        })
    }

    /// Equal on every exponent below the smaller of the two precisions.
    pub fn agrees_with(&self, other: &Series) -> bool {
        let bound = (&self.prec).min(&other.prec).clone();
        let a = self.terms.iter().take_while(|(e, _)| bound.exceeds(e));
        let b = other.terms.iter().take_while(|(e, _)| bound.exceeds(e));
        a.eq(b)
    }

    fn clone_empty(&self) -> Series {
        Series::zero(&self.ctx, &self.group)
    }

    fn compatible(&self, other: &Series) -> Result<()> {
        if !(Arc::ptr_eq(&self.ctx, &other.ctx) || self.ctx == other.ctx) {
            return Err(Error::FieldMismatch);
        }
        if !(Arc::ptr_eq(&self.group, &other.group) || self.group == other.group) {
            return Err(Error::GroupMismatch);
        }
        Ok(())
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.compatible(other)?;
        let prec = (&self.prec).min(&other.prec).clone();
        let mut terms = BTreeMap::new();
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            if prec.exceeds(e) {
                accumulate(&self.ctx, &mut terms, e.clone(), *c);
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(Series {
            terms,
            prec,
            ..self.clone_empty()
        })
    }

    pub fn neg(&self) -> Series {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| (e.clone(), self.ctx.neg(*c)))
            .collect();
        Series {
            terms,
            prec: self.prec.clone(),
            ..self.clone_empty()
        }
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: Coeff) -> Series {
        if c.is_zero() {
            return Series {
                prec: Val::Inf,
                ..self.clone_empty()
            };
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, x)| (e.clone(), self.ctx.mul(*x, c)))
            .collect();
        Series {
            terms,
            prec: self.prec.clone(),
            ..self.clone_empty()
        }
    }

    /// Multiply by `t^e`.
    pub fn shift(&self, e: &Exp) -> Result<Series> {
        if !self.group.contains(e) {
            return Err(Error::NotInGroup(e.clone()));
        }
        let terms = self
            .terms
            .iter()
            .map(|(x, c)| (x + e, *c))
            .collect();
        Ok(Series {
            terms,
            prec: self.prec.add_exp(e),
            ..self.clone_empty()
        })
    }

    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.compatible(other)?;
        let va = self.valuation_lower();
        let vb = other.valuation_lower();
        let prec = (self.prec.add(&vb)).min(other.prec.add(&va));
        let mut terms = BTreeMap::new();
        let vb_min = other.terms.keys().next();
        for (ea, ca) in &self.terms {
            if let Some(vbm) = vb_min {
                if !prec.exceeds(&(ea + vbm)) {
                    break;
                }
            }
            for (eb, cb) in &other.terms {
                let e = ea + eb;
                if !prec.exceeds(&e) {
                    break;
                }
                accumulate(&self.ctx, &mut terms, e, self.ctx.mul(*ca, *cb));
            }
        }
        terms.retain(|_, c| !c.is_zero());
        Ok(Series {
            terms,
            prec,
            ..self.clone_empty()
        })
    }

    /// `self^n`, routing the `p`-power part through Frobenius, which keeps
    /// precision at `p·prec` instead of the generic product bound.
    pub fn pow(&self, mut n: u64) -> Result<Series> {
        let p = self.ctx.p() as u64;
        let mut base = self.clone();
        while n > 0 && n.is_multiple_of(p) {
            base = base.frobenius()?;
            n /= p;
        }
        let mut acc = Series::one(&self.ctx, &self.group);
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(acc)
    }

    /// Inverse at the natural output precision `prec - 2v`.
    pub fn inv(&self) -> Result<Series> {
        self.inv_capped(None)
    }

    /// Inverse, additionally truncated at `target`; required when `self` is
    /// exact and not a monomial.
    pub fn inv_to(&self, target: &Exp) -> Result<Series> {
        self.inv_capped(Some(target))
    }

    fn inv_capped(&self, target: Option<&Exp>) -> Result<Series> {
        let (v, c) = match self.terms.iter().next() {
            Some((v, c)) => (v.clone(), *c),
            None => return Err(Error::IndeterminateValuation),
        };
        let cinv = self.ctx.inv(c)?;
        let natural = self.prec.add_exp(&(-v.mul_int(2)));
        let out_prec = match target {
            Some(t) => (&natural).min(&Val::Fin(t.clone())).clone(),
            None => natural,
        };
        // unit part u = 1 + z with u = c^{-1} t^{-v} S, wanted to out_prec + v
        let unit = self.shift(&-&v)?.scale(cinv);
        let unit_prec = out_prec.add_exp(&v);
        let z = unit.sub(&Series::one(&self.ctx, &self.group))?;
        let mut total = Series::one(&self.ctx, &self.group);
        if !z.has_no_terms() {
            let Val::Fin(ref bound) = unit_prec else {
                return Err(Error::UnboundedPrecision);
            };
            let bound = Val::Fin(bound.clone());
            let minus_z = z.neg().truncate(&bound);
            let mut power = Series::one(&self.ctx, &self.group);
            loop {
                power = power.mul(&minus_z)?.truncate(&bound);
                if power.has_no_terms() {
                    break;
                }
                total = total.add(&power)?;
            }
        }
        let total = total.truncate(&unit_prec);
        Ok(total.shift(&-&v)?.scale(cinv).truncate(&out_prec))
    }

    /// `c t^ε ↦ c^p t^{pε}` with precision scaled by `p`.
    pub fn frobenius(&self) -> Result<Series> {
        let p = self.ctx.p() as i64;
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let ep = e.mul_int(p);
            if !self.group.contains(&ep) {
                return Err(Error::GroupMismatch);
            }
            terms.insert(ep, self.ctx.frobenius(*c));
        }
        Ok(Series {
            terms,
            prec: self.prec.mul_int(p),
            ..self.clone_empty()
        })
    }

    /// The unique `p`-th root; requires `ε/p` in the group for every term.
    pub fn pth_root(&self) -> Result<Series> {
        let p = self.ctx.p() as i64;
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let ep = e.div_int(p);
            if !self.group.contains(&ep) {
                return Err(Error::SupportNotDivisible(e.clone()));
            }
            terms.insert(ep, self.ctx.pth_root(*c));
        }
        Ok(Series {
            terms,
            prec: self.prec.div_int(p),
            ..self.clone_empty()
        })
    }

    pub fn to_json(&self) -> SeriesJson {
        SeriesJson {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.to_string(), self.ctx.format(*c)))
                .collect(),
            prec: self.prec.to_string(),
        }
    }

    pub fn from_json(
        json: &SeriesJson,
        ctx: &Arc<FieldCtx>,
        group: &Arc<GroupSpec>,
    ) -> Result<Series> {
        let prec: Val = json.prec.parse()?;
        let mut terms = Vec::with_capacity(json.terms.len());
        for (e, c) in &json.terms {
            terms.push((e.parse::<Exp>()?, ctx.parse(c)?));
        }
        Series::from_terms(ctx, group, terms, prec)
    }
}

/// Wire form: `{"terms":[["2/3","1"],...],"prec":"26/27"}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesJson {
    pub terms: Vec<(String, String)>,
    pub prec: String,
}

fn accumulate(ctx: &FieldCtx, map: &mut BTreeMap<Exp, Coeff>, e: Exp, c: Coeff) {
    map.entry(e)
        .and_modify(|x| *x = ctx.add(*x, c))
        .or_insert(c);
}

pub(crate) fn format_term(ctx: &FieldCtx, e: &Exp, c: Coeff) -> String {
    let cs = ctx.format(c);
    if e.is_zero() {
        return cs;
    }
    let mono = format!("t^({e})");
    if c == Coeff::ONE {
        mono
    } else if cs.contains('+') {
        format!("({cs})*{mono}")
    } else {
        format!("{cs}*{mono}")
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .terms
            .iter()
            .map(|(e, c)| format_term(&self.ctx, e, *c))
            .collect();
        if let Val::Fin(p) = &self.prec {
            parts.push(format!("O(t^({p}))"));
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + "))
        }
    }
}
