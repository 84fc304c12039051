//! Polynomials in `W` over [`Series`]: Hasse derivatives, evaluation,
//! Taylor expansion and the truncation-stabilization search.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coefficients::{Coeff, FieldCtx};
use crate::construction::{w_segment, WConstructionParams};
use crate::error::{Error, Result};
use crate::exponents::{beta as beta_i, Exp, GroupSpec, Val};
use crate::series::Series;

/// `Σ a_i W^i` with `Series` coefficients, trailing exact zeros trimmed.
#[derive(Clone, Debug, PartialEq)]
pub struct WSeries {
    ctx: Arc<FieldCtx>,
    group: Arc<GroupSpec>,
    coeffs: Vec<Series>,
}

impl WSeries {
    pub fn new(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>, coeffs: Vec<Series>) -> Result<Self> {
        for a in &coeffs {
            if a.ctx() != ctx {
                return Err(Error::FieldMismatch);
            }
            if a.group() != group {
                return Err(Error::GroupMismatch);
            }
        }
        let mut out = WSeries {
            ctx: ctx.clone(),
            group: group.clone(),
            coeffs,
        };
        out.trim();
        Ok(out)
    }

    pub fn zero(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>) -> Self {
        WSeries {
            ctx: ctx.clone(),
            group: group.clone(),
            coeffs: Vec::new(),
        }
    }

    /// A polynomial with constant coefficients, low degree first.
    pub fn from_consts(
        ctx: &Arc<FieldCtx>,
        group: &Arc<GroupSpec>,
        coeffs: &[Coeff],
    ) -> Self {
        let coeffs = coeffs
            .iter()
            .map(|&c| Series::constant(ctx, group, c))
            .collect();
        let mut out = WSeries {
            ctx: ctx.clone(),
            group: group.clone(),
            coeffs,
        };
        out.trim();
        out
    }

    /// `a·W^i`.
    pub fn monomial(a: Series, i: usize) -> Self {
        let mut coeffs = vec![Series::zero(a.ctx(), a.group()); i];
        let (ctx, group) = (a.ctx().clone(), a.group().clone());
        coeffs.push(a);
        let mut out = WSeries { ctx, group, coeffs };
        out.trim();
        out
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(Series::is_exact_zero) {
            self.coeffs.pop();
        }
    }

    pub fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    pub fn group(&self) -> &Arc<GroupSpec> {
        &self.group
    }

    pub fn coeffs(&self) -> &[Series] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Series {
        self.coeffs
            .get(i)
            .cloned()
            .unwrap_or_else(|| Series::zero(&self.ctx, &self.group))
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &WSeries) -> Result<WSeries> {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n)
            .map(|i| self.coeff(i).add(&other.coeff(i)))
            .collect::<Result<Vec<_>>>()?;
        WSeries::new(&self.ctx, &self.group, coeffs)
    }

    pub fn mul(&self, other: &WSeries) -> Result<WSeries> {
        if self.is_zero() || other.is_zero() {
            return Ok(WSeries::zero(&self.ctx, &self.group));
        }
        let n = self.coeffs.len() + other.coeffs.len() - 1;
        let mut coeffs = vec![Series::zero(&self.ctx, &self.group); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] = coeffs[i + j].add(&a.mul(b)?)?;
            }
        }
        WSeries::new(&self.ctx, &self.group, coeffs)
    }

    pub fn scale(&self, c: Coeff) -> WSeries {
        let coeffs = self.coeffs.iter().map(|a| a.scale(c)).collect();
        let mut out = WSeries {
            coeffs,
            ..self.clone()
        };
        out.trim();
        out
    }

    /// Re-home every coefficient in a larger group.
    pub fn with_group(&self, group: &Arc<GroupSpec>) -> Result<WSeries> {
        let coeffs = self
            .coeffs
            .iter()
            .map(|a| a.with_group(group))
            .collect::<Result<Vec<_>>>()?;
        WSeries::new(&self.ctx, group, coeffs)
    }
}

/// `C(n, k) mod p` by Lucas's theorem.
pub fn binomial_mod_p(mut n: u64, mut k: u64, p: u32) -> u32 {
    let p = p as u64;
    let mut acc = 1u64;
    while k > 0 {
        let (ni, ki) = (n % p, k % p);
        if ki > ni {
            return 0;
        }
        acc = acc * small_binomial(ni, ki, p) % p;
        n /= p;
        k /= p;
    }
    acc as u32
}

fn small_binomial(n: u64, k: u64, p: u64) -> u64 {
    let mut num = 1u64;
    let mut den = 1u64;
    for i in 0..k {
        num = num * ((n - i) % p) % p;
        den = den * ((i + 1) % p) % p;
    }
    num * mod_inverse(den, p) % p
}

fn mod_inverse(a: u64, p: u64) -> u64 {
    let mut r = 1u64;
    let mut b = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// The `b`-th Hasse derivative `∂_b f`.
pub fn hasse(f: &WSeries, b: usize) -> WSeries {
    let p = f.ctx.p();
    let coeffs: Vec<Series> = f
        .coeffs
        .iter()
        .enumerate()
        .skip(b)
        .map(|(i, a)| {
            let c = binomial_mod_p(i as u64, b as u64, p);
            a.scale(f.ctx.from_int(c as i64))
        })
        .collect();
    let mut out = WSeries {
        coeffs,
        ..f.clone()
    };
    out.trim();
    out
}

/// `Σ a_i S^i`; powers go through [`Series::pow`] so `p`-th powers keep
/// Frobenius precision.
pub fn eval(f: &WSeries, s: &Series) -> Result<Series> {
    let mut acc = Series::zero(&f.ctx, &f.group);
    for (i, a) in f.coeffs.iter().enumerate() {
        if a.is_exact_zero() {
            continue;
        }
        let term = if i == 0 {
            a.clone()
        } else {
            a.mul(&s.pow(i as u64)?)?
        };
        acc = acc.add(&term)?;
    }
    Ok(acc)
}

/// Compares `f(w0 + δ)` against `Σ ∂_i f(w0) δ^i` below their common precision.
pub fn taylor_check(f: &WSeries, w0: &Series, delta: &Series) -> Result<bool> {
    let lhs = eval(f, &w0.add(delta)?)?;
    let mut rhs = Series::zero(&f.ctx, &f.group);
    for i in 0..f.coeffs.len() {
        let d = hasse(f, i);
        if d.is_zero() {
            continue;
        }
        rhs = rhs.add(&eval(&d, w0)?.mul(&delta.pow(i as u64)?)?)?;
    }
    Ok(lhs.agrees_with(&rhs))
}

/// The line `ε ↦ intercept + slope·ε`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlopeLine {
    pub intercept: Exp,
    pub slope: u32,
}

impl SlopeLine {
    pub fn at(&self, eps: &Exp) -> Exp {
        &self.intercept + eps.mul_int(self.slope as i64)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlopeThreshold {
    pub beta: Exp,
    /// Pairwise crossings that fall inside the open interval.
    pub crossings: usize,
}

/// A point of `(lo, hi)` past which the lines are pairwise distinct: the
/// midpoint between the last interior crossing and `hi`, or `lo` when no
/// crossing is interior.
pub fn slope_threshold(lines: &[SlopeLine], lo: &Exp, hi: &Exp) -> Result<SlopeThreshold> {
    if lo >= hi {
        return Err(Error::EmptyInterval);
    }
    let mut last: Option<Exp> = None;
    let mut crossings = 0;
    for (i, a) in lines.iter().enumerate() {
        for b in &lines[i + 1..] {
            if a.slope == b.slope {
                return Err(Error::DuplicateSlopes);
            }
            let x = (&b.intercept - &a.intercept).div_int(a.slope as i64 - b.slope as i64);
            if &x > lo && &x < hi {
                crossings += 1;
                if last.as_ref().is_none_or(|m| &x > m) {
                    last = Some(x);
                }
            }
        }
    }
    let beta = match last {
        Some(x) => (x + hi).div_int(2),
        None => lo.clone(),
    };
    Ok(SlopeThreshold { beta, crossings })
}

/// One row of the stabilization search.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizationRow {
    pub l: u32,
    pub value: Val,
    /// `min_i v(∂_i f(w_{0l})) + i·δ_l` with `δ_l = v(w_l + c t^β)`.
    pub bound: Val,
    /// Indices attaining `bound`.
    pub minimizers: Vec<u32>,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilizationCert {
    pub l0: u32,
    /// `None` when `f` has no nonconstant part.
    pub e: Option<u32>,
    pub value: Exp,
    pub trace: Vec<(u32, Val)>,
    /// `β ≥ 1` (or `c = 0`).
    pub standard_regime: bool,
    /// The minimizing exponent changed inside `[l0, l_max]`.
    pub e_varies: bool,
    pub rows: Vec<StabilizationRow>,
}

impl StabilizationCert {
    /// `{"l0":2,"e":0,"value":"8/9","trace":[[1,"inf"],[2,"8/9"]]}`.
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "l0": self.l0,
            "e": self.e,
            "value": self.value,
            "trace": self.trace,
        })
    }
}

fn pow_index(i: u32, p: u32) -> Option<u32> {
    let mut x = i;
    let mut e = 0;
    while x > 1 && x.is_multiple_of(p) {
        x /= p;
        e += 1;
    }
    (x == 1).then_some(e)
}

/// Searches `[l_min, l_max]` for the first `l0` from which the truncation
/// value is constant, finite, dominates every Taylor correction, and the
/// dominating correction index is a unique power of `p`.
pub fn stabilize(
    f: &WSeries,
    wspec: &WConstructionParams,
    c: Coeff,
    beta: &Exp,
    l_min: u32,
    l_max: u32,
) -> Result<StabilizationCert> {
    let r = wspec.start;
    if l_min == 0 || l_min < r || l_min > l_max {
        return Err(Error::BadWindow(l_min, l_max));
    }
    if !c.is_zero() && !beta.is_positive() {
        return Err(Error::InvalidParams("beta must be positive".into()));
    }
    if !c.is_zero() && !f.group.contains(beta) {
        return Err(Error::NotInGroup(beta.clone()));
    }
    let p = f.ctx.p();
    let derivs: Vec<WSeries> = (1..f.coeffs.len()).map(|i| hasse(f, i)).collect();

    let mut rows = Vec::new();
    for l in l_min..=l_max {
        let head = w_segment(&f.ctx, &f.group, wspec.q, r, l, Val::Inf)?;
        let value = eval(f, &head)?.valuation()?;
        let tail_val = beta_i(l + 1, wspec.q);
        let delta = if c.is_zero() || &tail_val < beta {
            tail_val
        } else {
            beta.clone()
        };
        let mut bound = Val::Inf;
        let mut minimizers = Vec::new();
        for (k, d) in derivs.iter().enumerate() {
            let i = k as u32 + 1;
            let v = eval(d, &head)?.valuation()?;
            let cand = v.add_exp(&delta.mul_int(i as i64));
            if cand.is_inf() {
                continue;
            }
            if cand < bound {
                bound = cand;
                minimizers = vec![i];
            } else if cand == bound {
                minimizers.push(i);
            }
        }
        let dominates = match &value {
            Val::Fin(v) => bound.exceeds(v),
            Val::Inf => false,
        };
        let unique_pow = bound.is_inf()
            || (minimizers.len() == 1 && pow_index(minimizers[0], p).is_some());
        rows.push(StabilizationRow {
            l,
            value,
            bound,
            minimizers,
            valid: dominates && unique_pow,
        });
    }

    if rows.iter().all(|row| row.value.is_inf()) {
        return Err(Error::ZeroFunction);
    }
    let last = rows.last().expect("nonempty window");
    if !last.valid {
        return Err(Error::Inconclusive(l_max));
    }
    let stable_value = last.value.clone();
    let start = rows
        .iter()
        .rposition(|row| !(row.valid && row.value == stable_value))
        .map_or(0, |i| i + 1);
    let e_of = |row: &StabilizationRow| row.minimizers.first().and_then(|&i| pow_index(i, p));
    let e = e_of(&rows[start]);
    let e_varies = rows[start..].iter().any(|row| e_of(row) != e);
    let standard_regime = c.is_zero() || beta >= &Exp::one();
    Ok(StabilizationCert {
        l0: rows[start].l,
        e,
        value: stable_value.finite().cloned().expect("valid rows are finite"),
        trace: rows.iter().map(|row| (row.l, row.value.clone())).collect(),
        standard_regime,
        e_varies,
        rows,
    })
}
