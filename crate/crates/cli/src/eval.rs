//! Evaluators for parsed expressions.

use std::sync::Arc;

use vallab::construction::{make_s_in, make_w_in, make_x_in, WConstructionParams, WPoly};
use vallab::taylor::WSeries;
use vallab::{Coeff, Error, Exp, FieldCtx, GroupSpec, Series};

use crate::error::{CliError, CliResult};
use crate::parser::{Expr, Func, Kind, Name};

/// Target ring of an evaluation.
pub trait Algebra {
    type V;
    fn constant(&self, c: Coeff) -> CliResult<Self::V>;
    fn tpow(&self, e: &Exp) -> CliResult<Self::V>;
    /// `None` when the name has no meaning in this ring.
    fn name(&self, n: Name) -> Option<CliResult<Self::V>>;
    fn add(&self, a: &Self::V, b: &Self::V) -> CliResult<Self::V>;
    fn mul(&self, a: &Self::V, b: &Self::V) -> CliResult<Self::V>;
    fn pow(&self, a: &Self::V, n: u64) -> CliResult<Self::V>;
    fn call(&self, f: Func, a: &Self::V) -> Option<CliResult<Self::V>>;
    fn ctx(&self) -> &Arc<FieldCtx>;
    fn label(&self) -> &'static str;
}

fn unsupported(pos: usize, what: &str, label: &str) -> CliError {
    CliError::Parse {
        token: pos,
        message: format!("{what} is not allowed in {label}"),
    }
}

pub fn evaluate<A: Algebra>(alg: &A, e: &Expr) -> CliResult<A::V> {
    match &e.kind {
        Kind::Int(n) => alg.constant(alg.ctx().from_int(*n)),
        Kind::Gen => alg.constant(alg.ctx().generator()),
        Kind::TPow(x) => alg.tpow(x),
        Kind::Name(n) => alg
            .name(*n)
            .unwrap_or_else(|| Err(unsupported(e.pos, &format!("{n:?}"), alg.label()))),
        Kind::Add(a, b) => alg.add(&evaluate(alg, a)?, &evaluate(alg, b)?),
        Kind::Mul(a, b) => alg.mul(&evaluate(alg, a)?, &evaluate(alg, b)?),
        Kind::Pow(a, n) => alg.pow(&evaluate(alg, a)?, *n),
        Kind::Call(f, a) => {
            let v = evaluate(alg, a)?;
            alg.call(*f, &v)
                .unwrap_or_else(|| Err(unsupported(e.pos, &format!("{f:?}"), alg.label())))
        }
    }
}

/// Series over `F_{p^m}` with exponents in `(1/p²)Γ`.
pub struct SeriesAlg {
    pub ctx: Arc<FieldCtx>,
    pub group: Arc<GroupSpec>,
    pub params: WConstructionParams,
    /// Working precision for `inv` of exact non-monomials.
    pub target: Exp,
}

impl SeriesAlg {
    pub fn new(ctx: Arc<FieldCtx>, params: WConstructionParams, target: Exp) -> CliResult<Self> {
        let group = Arc::new(GroupSpec::scaled_gamma(params.p, 2)?);
        Ok(SeriesAlg {
            ctx,
            group,
            params,
            target,
        })
    }
}

impl Algebra for SeriesAlg {
    type V = Series;

    fn constant(&self, c: Coeff) -> CliResult<Series> {
        Ok(Series::constant(&self.ctx, &self.group, c))
    }

    fn tpow(&self, e: &Exp) -> CliResult<Series> {
        Ok(Series::monomial(&self.ctx, &self.group, Coeff::ONE, e.clone())?)
    }

    fn name(&self, n: Name) -> Option<CliResult<Series>> {
        let s = match n {
            Name::W => make_w_in(&self.params, &self.ctx, &self.group),
            Name::S => make_s_in(&self.params, &self.ctx).and_then(|s| s.with_group(&self.group)),
            Name::X => make_x_in(&self.params, &self.ctx),
            Name::Var => return None,
        };
        Some(s.map_err(CliError::from))
    }

    fn add(&self, a: &Series, b: &Series) -> CliResult<Series> {
        Ok(a.add(b)?)
    }

    fn mul(&self, a: &Series, b: &Series) -> CliResult<Series> {
        Ok(a.mul(b)?)
    }

    fn pow(&self, a: &Series, n: u64) -> CliResult<Series> {
        Ok(a.pow(n)?)
    }

    fn call(&self, f: Func, a: &Series) -> Option<CliResult<Series>> {
        let r = match f {
            Func::Inv => match a.inv() {
                Err(Error::UnboundedPrecision) => a.inv_to(&self.target),
                r => r,
            },
            Func::Frob => a.frobenius(),
            Func::Proot => a.pth_root(),
        };
        Some(r.map_err(CliError::from))
    }

    fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    fn label(&self) -> &'static str {
        "a series expression"
    }
}

/// Polynomials in `W` with exact coefficients over `Γ`.
pub struct PolyAlg {
    pub ctx: Arc<FieldCtx>,
    pub group: Arc<GroupSpec>,
}

impl Algebra for PolyAlg {
    type V = WSeries;

    fn constant(&self, c: Coeff) -> CliResult<WSeries> {
        Ok(WSeries::from_consts(&self.ctx, &self.group, &[c]))
    }

    fn tpow(&self, e: &Exp) -> CliResult<WSeries> {
        let m = Series::monomial(&self.ctx, &self.group, Coeff::ONE, e.clone())?;
        Ok(WSeries::monomial(m, 0))
    }

    fn name(&self, n: Name) -> Option<CliResult<WSeries>> {
        (n == Name::Var).then(|| Ok(WSeries::monomial(Series::one(&self.ctx, &self.group), 1)))
    }

    fn add(&self, a: &WSeries, b: &WSeries) -> CliResult<WSeries> {
        Ok(a.add(b)?)
    }

    fn mul(&self, a: &WSeries, b: &WSeries) -> CliResult<WSeries> {
        Ok(a.mul(b)?)
    }

    fn pow(&self, a: &WSeries, n: u64) -> CliResult<WSeries> {
        let mut acc = WSeries::from_consts(&self.ctx, &self.group, &[Coeff::ONE]);
        for _ in 0..n {
            acc = acc.mul(a)?;
        }
        Ok(acc)
    }

    fn call(&self, _: Func, _: &WSeries) -> Option<CliResult<WSeries>> {
        None
    }

    fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    fn label(&self) -> &'static str {
        "a polynomial in W"
    }
}

/// Finite `t`-polynomials in `w`.
pub struct WPolyAlg {
    pub ctx: Arc<FieldCtx>,
    pub group: Arc<GroupSpec>,
    pub q: u32,
}

impl Algebra for WPolyAlg {
    type V = WPoly;

    fn constant(&self, c: Coeff) -> CliResult<WPoly> {
        Ok(WPoly::monomial(&self.ctx, &self.group, self.q, c, Exp::zero(), 0)?)
    }

    fn tpow(&self, e: &Exp) -> CliResult<WPoly> {
        Ok(WPoly::monomial(&self.ctx, &self.group, self.q, Coeff::ONE, e.clone(), 0)?)
    }

    fn name(&self, n: Name) -> Option<CliResult<WPoly>> {
        (n == Name::W).then(|| Ok(WPoly::w(&self.ctx, &self.group, self.q)))
    }

    fn add(&self, a: &WPoly, b: &WPoly) -> CliResult<WPoly> {
        Ok(a.add(b)?)
    }

    fn mul(&self, a: &WPoly, b: &WPoly) -> CliResult<WPoly> {
        Ok(a.mul(b)?)
    }

    fn pow(&self, a: &WPoly, n: u64) -> CliResult<WPoly> {
        let n = u32::try_from(n).map_err(|_| CliError::Core(Error::InvalidParams("exponent too large".into())))?;
        Ok(a.pow(n)?)
    }

    fn call(&self, f: Func, a: &WPoly) -> Option<CliResult<WPoly>> {
        (f == Func::Frob).then(|| a.frobenius().map_err(CliError::from))
    }

    fn ctx(&self) -> &Arc<FieldCtx> {
        &self.ctx
    }

    fn label(&self) -> &'static str {
        "a w-polynomial"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse;

    fn series_alg(p: u32, q: u32, depth: u32) -> SeriesAlg {
        let params = WConstructionParams::new(p, q, 0, depth).unwrap();
        SeriesAlg::new(FieldCtx::new(p, 1).unwrap(), params, Exp::one()).unwrap()
    }

    #[test]
    fn unit_monomial_prints_as_one() {
        let s = evaluate(&series_alg(2, 3, 5), &parse("t^(0/1)").unwrap()).unwrap();
        assert_eq!(s.to_string(), "1");
        assert_eq!(s.valuation().unwrap().to_string(), "0");
    }

    #[test]
    fn inverse_of_w_leads_with_minus_two_thirds() {
        let s = evaluate(&series_alg(2, 3, 5), &parse("inv(w)").unwrap()).unwrap();
        let exps: Vec<Exp> = s.terms().take(2).map(|(e, _)| e.clone()).collect();
        assert_eq!(exps, vec![Exp::new(-2, 3), Exp::new(-4, 9)]);
        let prod = s.mul(&evaluate(&series_alg(2, 3, 5), &parse("w").unwrap()).unwrap()).unwrap();
        assert_eq!(prod.head(), Series::one(prod.ctx(), prod.group()));
    }

    #[test]
    fn inv_of_exact_binomial_uses_target() {
        let s = evaluate(&series_alg(2, 3, 5), &parse("inv(1 + t)").unwrap()).unwrap();
        assert_eq!(s.prec().to_string(), "1");
    }

    #[test]
    fn frob_then_proot_of_x_round_trips() {
        let alg = series_alg(3, 2, 4);
        let x = evaluate(&alg, &parse("x").unwrap()).unwrap();
        let y = evaluate(&alg, &parse("proot(frob(x))").unwrap()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn names_are_checked_per_ring() {
        let ctx = FieldCtx::new(2, 1).unwrap();
        let group = Arc::new(GroupSpec::p_prime(2).unwrap());
        let poly = PolyAlg {
            ctx: ctx.clone(),
            group: group.clone(),
        };
        let f = evaluate(&poly, &parse("W^2 + t").unwrap()).unwrap();
        assert_eq!(f.degree(), Some(2));
        assert!(matches!(
            evaluate(&poly, &parse("1 + w").unwrap()),
            Err(CliError::Parse { token: 3, .. })
        ));
        let wp = WPolyAlg { ctx, group, q: 3 };
        let z = evaluate(&wp, &parse("frob(w) + t^2").unwrap()).unwrap();
        assert_eq!(z.terms().count(), 2);
        assert!(evaluate(&wp, &parse("inv(w)").unwrap()).is_err());
    }
}
