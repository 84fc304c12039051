//! Exact rational exponents and the rank-one value groups they live in.
//!
//! Every group handled here is a subgroup of `Q`: the `p`-prime-denominator
//! group `Γ`, finitely generated subgroups, and finite-index extensions of
//! either obtained by adjoining a few rationals (for instance `Γ + (1/p)Z`).

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An exact rational exponent, always stored in lowest terms with a positive
/// denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Exp(BigRational);

impl Exp {
    /// Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        Exp(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_int(n: i64) -> Self {
        Exp(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        Exp(BigRational::new(num, den))
    }

    pub fn zero() -> Self {
        Exp(BigRational::zero())
    }

    pub fn one() -> Self {
        Exp(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn mul_int(&self, k: i64) -> Self {
        Exp(&self.0 * BigInt::from(k))
    }

    pub fn div_int(&self, k: i64) -> Self {
        Exp(&self.0 / BigInt::from(k))
    }

    pub fn div_exp(&self, other: &Exp) -> Self {
        Exp(&self.0 / &other.0)
    }

    pub fn abs(&self) -> Self {
        Exp(self.0.abs())
    }

    /// Smallest integer `>= self`.
    pub fn ceil_int(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn floor_int(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

}

impl fmt::Display for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Exp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Exp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::BadExponent(s.to_string());
        let t = s.trim();
        let (num, den) = match t.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (t, "1"),
        };
        let num: BigInt = num.parse().map_err(|_| bad())?;
        let den: BigInt = den.parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        Ok(Exp::from_big(num, den))
    }
}

impl Serialize for Exp {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Exp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Str(String),
            Int(i64),
        }
        match Raw::deserialize(d)? {
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Int(n) => Ok(Exp::from_int(n)),
        }
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr<&Exp> for &Exp {
            type Output = Exp;
            fn $method(self, rhs: &Exp) -> Exp {
                Exp((&self.0).$method(&rhs.0))
            }
        }
        impl $tr<Exp> for Exp {
            type Output = Exp;
            fn $method(self, rhs: Exp) -> Exp {
                Exp(self.0.$method(rhs.0))
            }
        }
        impl $tr<&Exp> for Exp {
            type Output = Exp;
            fn $method(self, rhs: &Exp) -> Exp {
                Exp(self.0.$method(&rhs.0))
            }
        }
        impl $tr<Exp> for &Exp {
            type Output = Exp;
            fn $method(self, rhs: Exp) -> Exp {
                Exp((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);

impl AddAssign<&Exp> for Exp {
    fn add_assign(&mut self, rhs: &Exp) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Exp> for Exp {
    fn sub_assign(&mut self, rhs: &Exp) {
        self.0 -= &rhs.0;
    }
}

impl Neg for Exp {
    type Output = Exp;
    fn neg(self) -> Exp {
        Exp(-self.0)
    }
}

impl Neg for &Exp {
    type Output = Exp;
    fn neg(self) -> Exp {
        Exp(-&self.0)
    }
}

/// An exponent or `+∞`; used both for valuations and for precision bounds.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Val {
    Fin(Exp),
    Inf,
}

impl Val {
    pub fn finite(&self) -> Option<&Exp> {
        match self {
            Val::Fin(e) => Some(e),
            Val::Inf => None,
        }
    }

    pub fn is_inf(&self) -> bool {
        matches!(self, Val::Inf)
    }

    pub fn add_exp(&self, e: &Exp) -> Val {
        match self {
            Val::Fin(x) => Val::Fin(x + e),
            Val::Inf => Val::Inf,
        }
    }

    pub fn add(&self, other: &Val) -> Val {
        match (self, other) {
            (Val::Fin(a), Val::Fin(b)) => Val::Fin(a + b),
            _ => Val::Inf,
        }
    }

    pub fn mul_int(&self, k: i64) -> Val {
        match self {
            Val::Fin(x) => Val::Fin(x.mul_int(k)),
            Val::Inf => Val::Inf,
        }
    }

    pub fn div_int(&self, k: i64) -> Val {
        match self {
            Val::Fin(x) => Val::Fin(x.div_int(k)),
            Val::Inf => Val::Inf,
        }
    }

    /// `a < self` with `Inf` above everything.
    pub fn exceeds(&self, a: &Exp) -> bool {
        match self {
            Val::Fin(x) => a < x,
            Val::Inf => true,
        }
    }
}

impl From<Exp> for Val {
    fn from(e: Exp) -> Self {
        Val::Fin(e)
    }
}

impl fmt::Display for Val {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Val::Fin(e) => write!(f, "{e}"),
            Val::Inf => f.write_str("inf"),
        }
    }
}

impl FromStr for Val {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "+inf" | "∞" => Ok(Val::Inf),
            other => Ok(Val::Fin(other.parse()?)),
        }
    }
}

impl Serialize for Val {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Val {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Exponent of the largest power of `p` dividing `n` (`n != 0`).
pub fn p_adic_order(n: &BigInt, p: u32) -> u32 {
    let p = BigInt::from(p);
    let mut m = n.abs();
    let mut k = 0;
    while !m.is_zero() && (&m % &p).is_zero() {
        m /= &p;
        k += 1;
    }
    k
}

/// `p`-adic valuation of a nonzero rational.
pub fn p_adic_val(e: &Exp, p: u32) -> i64 {
    p_adic_order(e.numer(), p) as i64 - p_adic_order(e.denom(), p) as i64
}

const MAX_COSET_REPS: usize = 1 << 12;

/// A rank-one subgroup of `Q`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum GroupSpec {
    /// Rationals whose denominator is prime to `p`.
    #[serde(rename = "p-prime")]
    PPrimeDenom { p: u32 },
    /// The subgroup generated by finitely many rationals.
    #[serde(rename = "fingen")]
    FinGen { gens: Vec<Exp> },
    /// `base + Σ Z·adjoined`.
    #[serde(rename = "extended")]
    Extended {
        base: Box<GroupSpec>,
        adjoined: Vec<Exp>,
    },
}

impl GroupSpec {
    pub fn p_prime(p: u32) -> Result<Self> {
        if !is_prime(p as u64) {
            return Err(Error::NotPrime(p as u64));
        }
        Ok(GroupSpec::PPrimeDenom { p })
    }

    pub fn fingen(gens: Vec<Exp>) -> Self {
        GroupSpec::FinGen { gens }
    }

    pub fn extended(base: GroupSpec, adjoined: Vec<Exp>) -> Self {
        GroupSpec::Extended {
            base: Box::new(base),
            adjoined,
        }
    }

    /// `(1/p^k)Γ = Γ + (1/p^k)Z` for the `p`-prime-denominator group `Γ`.
    pub fn scaled_gamma(p: u32, k: u32) -> Result<Self> {
        let gamma = GroupSpec::p_prime(p)?;
        if k == 0 {
            return Ok(gamma);
        }
        Ok(GroupSpec::extended(
            gamma,
            vec![Exp::new(1, (p as i64).pow(k))],
        ))
    }

    pub fn is_trivial(&self) -> bool {
        match self {
            GroupSpec::PPrimeDenom { .. } => false,
            GroupSpec::FinGen { gens } => gens.iter().all(Exp::is_zero),
            GroupSpec::Extended { base, adjoined } => {
                base.is_trivial() && adjoined.iter().all(Exp::is_zero)
            }
        }
    }

    pub fn contains(&self, g: &Exp) -> bool {
        match self {
            GroupSpec::PPrimeDenom { p } => p_adic_order(g.denom(), *p) == 0,
            GroupSpec::FinGen { gens } => fingen_contains(gens, g),
            GroupSpec::Extended { base, adjoined } => {
                if base.is_trivial() {
                    return fingen_contains(adjoined, g);
                }
                let mut bounds = Vec::with_capacity(adjoined.len());
                for a in adjoined {
                    match base.torsion_bound(a) {
                        Some(n) => bounds.push(n),
                        None => return false,
                    }
                }
                coset_search(base, adjoined, &bounds, 0, g.clone())
            }
        }
    }

    /// Some `n >= 1` with `n·a` in the group, or `None` when no multiple lands.
    fn torsion_bound(&self, a: &Exp) -> Option<u64> {
        match self {
            GroupSpec::PPrimeDenom { p } => {
                let k = p_adic_order(a.denom(), *p);
                (*p as u64).checked_pow(k)
            }
            GroupSpec::FinGen { gens } => {
                let (d, g) = fingen_normal(gens);
                if g.is_zero() {
                    return a.is_zero().then_some(1);
                }
                let ratio = Exp::from_big(a.numer() * &d, a.denom() * &g);
                ratio.denom().to_u64()
            }
            GroupSpec::Extended { base, adjoined } => {
                if base.is_trivial() {
                    return GroupSpec::fingen(adjoined.clone()).torsion_bound(a);
                }
                base.torsion_bound(a)
            }
        }
    }
}

/// Common denominator `d` and the gcd of the numerators scaled by `d`.
fn fingen_normal(gens: &[Exp]) -> (BigInt, BigInt) {
    let d = gens
        .iter()
        .fold(BigInt::one(), |acc, g| acc.lcm(g.denom()));
    let g = gens.iter().fold(BigInt::zero(), |acc, x| {
        let n = x.numer() * (&d / x.denom());
        acc.gcd(&n)
    });
    (d, g)
}

fn fingen_contains(gens: &[Exp], x: &Exp) -> bool {
    let (d, g) = fingen_normal(gens);
    if g.is_zero() {
        return x.is_zero();
    }
    let scaled = Exp::from_big(x.numer() * &d, x.denom().clone());
    scaled.is_integer() && (scaled.numer() % &g).is_zero()
}

fn coset_search(base: &GroupSpec, adj: &[Exp], bounds: &[u64], i: usize, rest: Exp) -> bool {
    if i == adj.len() {
        return base.contains(&rest);
    }
    let mut cur = rest;
    for _ in 0..bounds[i] {
        if coset_search(base, adj, bounds, i + 1, cur.clone()) {
            return true;
        }
        cur -= &adj[i];
    }
    false
}

/// Membership `γ ∈ G`.
pub fn in_group(g: &Exp, group: &GroupSpec) -> bool {
    group.contains(g)
}

/// Membership `γ ∈ pG`, i.e. `γ/p ∈ G`.
pub fn in_p_multiple(g: &Exp, p: u32, group: &GroupSpec) -> bool {
    group.contains(&g.div_int(p as i64))
}

/// The group index `[ext : base]`, computed by coset enumeration.
pub fn index(ext: &GroupSpec, base: &GroupSpec) -> Result<u64> {
    if ext == base {
        return Ok(1);
    }
    let GroupSpec::Extended {
        base: inner,
        adjoined,
    } = ext
    else {
        return Err(Error::NotAnExtension);
    };
    let below = if inner.as_ref() == base {
        1
    } else {
        index(inner, base)?
    };
    let mut bounds = Vec::with_capacity(adjoined.len());
    for a in adjoined {
        let n = inner
            .torsion_bound(a)
            .ok_or_else(|| Error::InfiniteIndex(a.clone()))?;
        bounds.push(n);
    }
    let total = bounds
        .iter()
        .try_fold(1u64, |acc, &n| acc.checked_mul(n))
        .filter(|&t| t as usize <= MAX_COSET_REPS)
        .ok_or(Error::IndexTooLarge(MAX_COSET_REPS))?;

    let mut reps: Vec<Exp> = Vec::new();
    for mut code in 0..total {
        let mut elt = Exp::zero();
        for (a, &n) in adjoined.iter().zip(&bounds) {
            elt += &a.mul_int((code % n) as i64);
            code /= n;
        }
        if reps.iter().all(|r| !inner.contains(&(&elt - r))) {
            reps.push(elt);
        }
    }
    Ok(below * reps.len() as u64)
}

/// `β_i = 1 - 1/q^i`.
pub fn beta(i: u32, q: u32) -> Exp {
    let den = BigInt::from(q).pow(i);
    Exp::one() - Exp::from_big(BigInt::one(), den)
}

/// Parses `n` as an unsigned integer-valued exponent.
pub fn exp_to_u32(e: &Exp) -> Option<u32> {
    if e.is_integer() {
        e.numer().to_u32()
    } else {
        None
    }
}
