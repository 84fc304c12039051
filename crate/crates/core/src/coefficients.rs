//! The coefficient field `k = F_{p^m}`.
//!
//! Elements are stored as their canonical residue modulo a monic irreducible
//! polynomial, packed as base-`p` digits into a `u32` (digit `i` is the
//! coefficient of `g^i`). Multiplication goes through discrete log tables
//! built once per field.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::is_prime;

const MAX_FIELD_SIZE: u64 = 1 << 16;

/// A field element, meaningful only together with its [`FieldCtx`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Coeff(u32);

impl Coeff {
    pub const ZERO: Coeff = Coeff(0);
    pub const ONE: Coeff = Coeff(1);

    pub fn repr(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

/// Shape of the field as written in configuration files.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub m: u32,
}

pub struct FieldCtx {
    p: u32,
    m: u32,
    /// Monic modulus, lowest degree first, length `m + 1`.
    modulus: Vec<u32>,
    size: u32,
    exp: Vec<u32>,
    log: Vec<u32>,
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.p == other.p && self.m == other.m && self.modulus == other.modulus
    }
}

impl Eq for FieldCtx {}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx")
            .field("p", &self.p)
            .field("m", &self.m)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl FieldCtx {
    /// `F_{p^m}` with the first monic irreducible modulus in lexicographic
    /// order of its coefficient vector.
    pub fn new(p: u32, m: u32) -> Result<Arc<Self>> {
        check_shape(p, m)?;
        let modulus = first_irreducible(p, m);
        Self::with_modulus(p, modulus)
    }

    pub fn from_spec(spec: &FieldSpec) -> Result<Arc<Self>> {
        Self::new(spec.p, spec.m)
    }

    /// `modulus` is monic, lowest degree first.
    pub fn with_modulus(p: u32, modulus: Vec<u32>) -> Result<Arc<Self>> {
        let m = modulus.len().saturating_sub(1) as u32;
        check_shape(p, m)?;
        if modulus.last() != Some(&1)
            || modulus.iter().any(|&c| c >= p)
            || !is_irreducible(p, &modulus)
        {
            return Err(Error::ReducibleModulus(m));
        }
        let size = p.pow(m);
        let mut ctx = FieldCtx {
            p,
            m,
            modulus,
            size,
            exp: Vec::new(),
            log: Vec::new(),
        };
        ctx.build_tables();
        Ok(Arc::new(ctx))
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn order(&self) -> u32 {
        self.size
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn spec(&self) -> FieldSpec {
        FieldSpec {
            p: self.p,
            m: self.m,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = Coeff> {
        (0..self.size).map(Coeff)
    }

    pub fn zero(&self) -> Coeff {
        Coeff::ZERO
    }

    pub fn one(&self) -> Coeff {
        Coeff::ONE
    }

    /// The class of the polynomial variable `g`.
    pub fn generator(&self) -> Coeff {
        self.from_digits(&[0, 1])
    }

    pub fn from_int(&self, n: i64) -> Coeff {
        Coeff(n.rem_euclid(self.p as i64) as u32)
    }

    pub fn from_repr(&self, r: u32) -> Option<Coeff> {
        (r < self.size).then_some(Coeff(r))
    }

    pub fn digits(&self, c: Coeff) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.m as usize);
        let mut r = c.0;
        for _ in 0..self.m {
            out.push(r % self.p);
            r /= self.p;
        }
        out
    }

    /// Reduces an arbitrary-length polynomial in `g` modulo the modulus.
    pub fn from_digits(&self, digits: &[u32]) -> Coeff {
        let mut poly: Vec<u32> = digits.iter().map(|d| d % self.p).collect();
        poly_rem_in_place(self.p, &mut poly, &self.modulus);
        let mut r = 0u32;
        for &d in poly.iter().take(self.m as usize).rev() {
            r = r * self.p + d;
        }
        Coeff(r)
    }

    pub fn add(&self, a: Coeff, b: Coeff) -> Coeff {
        if self.p == 2 {
            return Coeff(a.0 ^ b.0);
        }
        let (mut x, mut y) = (a.0, b.0);
        let mut r = 0u32;
        let mut place = 1u32;
        for _ in 0..self.m {
            r += ((x % self.p + y % self.p) % self.p) * place;
            x /= self.p;
            y /= self.p;
            place = place.wrapping_mul(self.p);
        }
        Coeff(r)
    }

    pub fn neg(&self, a: Coeff) -> Coeff {
        if self.p == 2 {
            return a;
        }
        let mut x = a.0;
        let mut r = 0u32;
        let mut place = 1u32;
        for _ in 0..self.m {
            r += ((self.p - x % self.p) % self.p) * place;
            x /= self.p;
            place = place.wrapping_mul(self.p);
        }
        Coeff(r)
    }

    pub fn sub(&self, a: Coeff, b: Coeff) -> Coeff {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Coeff, b: Coeff) -> Coeff {
        if a.0 == 0 || b.0 == 0 {
            return Coeff::ZERO;
        }
        let n = self.size - 1;
        let l = (self.log[a.0 as usize] + self.log[b.0 as usize]) % n;
        Coeff(self.exp[l as usize])
    }

    pub fn inv(&self, a: Coeff) -> Result<Coeff> {
        if a.0 == 0 {
            return Err(Error::DivisionByZero);
        }
        let n = self.size - 1;
        let l = (n - self.log[a.0 as usize]) % n;
        Ok(Coeff(self.exp[l as usize]))
    }

    pub fn div(&self, a: Coeff, b: Coeff) -> Result<Coeff> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: Coeff, e: u64) -> Coeff {
        if e == 0 {
            return Coeff::ONE;
        }
        if a.0 == 0 {
            return Coeff::ZERO;
        }
        let n = (self.size - 1) as u64;
        let l = (self.log[a.0 as usize] as u64 * (e % n)) % n;
        Coeff(self.exp[l as usize])
    }

    /// Frobenius `c ↦ c^p`.
    pub fn frobenius(&self, a: Coeff) -> Coeff {
        self.pow(a, self.p as u64)
    }

    /// The unique `d` with `d^p = c`, namely `c^{p^{m-1}}`.
    pub fn pth_root(&self, c: Coeff) -> Coeff {
        let mut d = c;
        for _ in 1..self.m {
            d = self.frobenius(d);
        }
        d
    }

    /// The least (by representation) `d` with `d^n = c`.
    pub fn nth_root(&self, c: Coeff, n: u64) -> Result<Coeff> {
        if n == 0 {
            return Err(Error::InvalidParams("root index must be positive".into()));
        }
        self.elements()
            .find(|&d| self.pow(d, n) == c)
            .ok_or_else(|| Error::NoRootInField {
                c: self.format(c),
                n,
            })
    }

    /// Whether `c` has an `n`-th root in the degree-`d` extension `F_{p^{md}}`.
    pub fn has_root_in_extension(&self, c: Coeff, n: u64, d: u32) -> bool {
        if c.is_zero() {
            return true;
        }
        // c^{(Q-1)/gcd(n, Q-1)} = 1 with Q = |F|^d; c already lies in F, so the
        // exponent may be reduced modulo |F| - 1.
        let q = self.size as u128;
        let big_q = match q.checked_pow(d) {
            Some(v) => v,
            None => return false,
        };
        let g = gcd_u128(n as u128, big_q - 1);
        let e = ((big_q - 1) / g) % (q - 1);
        self.pow(c, e as u64) == Coeff::ONE
    }

    /// Polynomial form in `g`, e.g. `g^2+g+1` or `2*g`.
    pub fn format(&self, c: Coeff) -> String {
        let digits = self.digits(c);
        let mut parts = Vec::new();
        for (i, &d) in digits.iter().enumerate().rev() {
            if d == 0 {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => "g".to_string(),
                _ => format!("g^{i}"),
            };
            parts.push(match (d, mono.is_empty()) {
                (_, true) => d.to_string(),
                (1, false) => mono,
                (_, false) => format!("{d}*{mono}"),
            });
        }
        if parts.is_empty() {
            "0".to_string()
        } else {
            parts.join("+")
        }
    }

    /// Inverse of [`FieldCtx::format`]; also accepts `-k` and repeated terms.
    pub fn parse(&self, s: &str) -> Result<Coeff> {
        let bad = || Error::BadCoefficient(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(bad());
        }
        let mut acc = Coeff::ZERO;
        for term in t.split('+') {
            let (k, mono) = match term.split_once('*') {
                Some((k, m)) => (k, m),
                None if term.starts_with('g') => ("1", term),
                None => (term, ""),
            };
            let k: i64 = k.parse().map_err(|_| bad())?;
            let power = if mono.is_empty() {
                0
            } else if mono == "g" {
                1
            } else if let Some(e) = mono.strip_prefix("g^") {
                e.parse::<usize>().map_err(|_| bad())?
            } else {
                return Err(bad());
            };
            let mut digits = vec![0u32; power + 1];
            digits[power] = k.rem_euclid(self.p as i64) as u32;
            acc = self.add(acc, self.from_digits(&digits));
        }
        Ok(acc)
    }

    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        let x = self.digits(Coeff(a));
        let y = self.digits(Coeff(b));
        let mut prod = vec![0u32; x.len() + y.len()];
        for (i, &xi) in x.iter().enumerate() {
            for (j, &yj) in y.iter().enumerate() {
                prod[i + j] = (prod[i + j] + xi * yj) % self.p;
            }
        }
        self.from_digits(&prod).0
    }

    fn build_tables(&mut self) {
        let n = self.size - 1;
        let factors = prime_factors(n);
        let gen = (1..self.size)
            .find(|&c| {
                factors
                    .iter()
                    .all(|&r| self.pow_slow(c, (n / r) as u64) != 1)
            })
            .expect("multiplicative group of a finite field is cyclic");
        let mut exp = vec![0u32; n as usize];
        let mut log = vec![0u32; self.size as usize];
        let mut cur = 1u32;
        for (i, slot) in exp.iter_mut().enumerate() {
            *slot = cur;
            log[cur as usize] = i as u32;
            cur = self.mul_slow(cur, gen);
        }
        self.exp = exp;
        self.log = log;
    }

    fn pow_slow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_slow(acc, base);
            }
            base = self.mul_slow(base, base);
            e >>= 1;
        }
        acc
    }
}

fn check_shape(p: u32, m: u32) -> Result<()> {
    if !is_prime(p as u64) {
        return Err(Error::NotPrime(p as u64));
    }
    if m == 0 || (p as u64).checked_pow(m).is_none_or(|s| s > MAX_FIELD_SIZE) {
        return Err(Error::FieldTooLarge { p, m });
    }
    Ok(())
}

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn trim(poly: &mut Vec<u32>) {
    while poly.last() == Some(&0) {
        poly.pop();
    }
}

/// `poly mod modulus` over `F_p`; `modulus` must be monic.
fn poly_rem_in_place(p: u32, poly: &mut Vec<u32>, modulus: &[u32]) {
    trim(poly);
    let dm = modulus.len() - 1;
    while poly.len() > dm {
        let lead = *poly.last().unwrap();
        let shift = poly.len() - 1 - dm;
        for (i, &mc) in modulus.iter().enumerate() {
            let idx = shift + i;
            poly[idx] = (poly[idx] + p - (lead * mc) % p) % p;
        }
        trim(poly);
    }
}

fn monic_polys(p: u32, deg: u32) -> impl Iterator<Item = Vec<u32>> {
    let count = p.pow(deg);
    (0..count).map(move |mut code| {
        let mut poly = Vec::with_capacity(deg as usize + 1);
        for _ in 0..deg {
            poly.push(code % p);
            code /= p;
        }
        poly.push(1);
        poly
    })
}

fn is_irreducible(p: u32, f: &[u32]) -> bool {
    let deg = f.len() as u32 - 1;
    if deg == 0 {
        return false;
    }
    (1..=deg / 2).all(|d| {
        monic_polys(p, d).all(|g| {
            let mut r = f.to_vec();
            poly_rem_in_place(p, &mut r, &g);
            !r.is_empty()
        })
    })
}

fn first_irreducible(p: u32, m: u32) -> Vec<u32> {
    monic_polys(p, m)
        .find(|f| is_irreducible(p, f))
        .expect("irreducible polynomials exist in every degree")
}
