//! Seeded sample corpora for the experiment runner.

use std::sync::Arc;

use rand::Rng;
use vallab::construction::{Expansion, WConstructionParams, WPoly};
use vallab::exponents::{beta, p_adic_val};
use vallab::{Coeff, Exp, FieldCtx, GroupSpec, Result, Val};

pub fn nonzero_coeff<R: Rng>(rng: &mut R, ctx: &FieldCtx) -> Coeff {
    loop {
        let c = ctx.from_repr(rng.gen_range(1..ctx.order())).expect("in range");
        if !c.is_zero() {
            return c;
        }
    }
}

/// `a / (p^k · q^l)` with small `a`, `k ≤ max_p`, `l ≤ 2`.
fn random_exp<R: Rng>(rng: &mut R, p: u32, q: u32, max_p: u32, lo: i64, hi: i64) -> Exp {
    let den = (p as i64).pow(rng.gen_range(0..=max_p)) * (q as i64).pow(rng.gen_range(0..=2));
    Exp::new(rng.gen_range(lo..=hi), den)
}

#[derive(Clone, Debug)]
pub struct ProbeCase {
    pub label: String,
    pub coeffs: Vec<WPoly>,
}

/// `Σ_{i ≤ k} t^{β_i/p}`, the exact head of `s`.
pub fn s_head(ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>, q: u32, p: u32, k: u32) -> Result<WPoly> {
    WPoly::from_terms(
        ctx,
        group,
        q,
        (1..=k).map(|i| (beta(i, q).div_int(p as i64), 0, Coeff::ONE)),
    )
}

fn random_wpoly<R: Rng>(rng: &mut R, ctx: &Arc<FieldCtx>, group: &Arc<GroupSpec>, p: u32, q: u32) -> Result<WPoly> {
    let n = rng.gen_range(1..=3);
    let terms: Vec<_> = (0..n)
        .map(|_| {
            (
                random_exp(rng, p, q, 1, -4, 6),
                rng.gen_range(0..=2),
                nonzero_coeff(rng, ctx),
            )
        })
        .collect();
    WPoly::from_terms(ctx, group, q, terms)
}

/// `f = Σ_{j<p} b_j X^j` with `b_j ∈ K′`; every fourth sample is built as
/// `b_1 (X - s_{0k})` so that cancellation eats the head of `x`.
pub fn probe_corpus<R: Rng>(rng: &mut R, params: &WConstructionParams, n: usize) -> Result<Vec<ProbeCase>> {
    let (p, q) = (params.p, params.q);
    let ctx = FieldCtx::new(p, 1)?;
    let group = Arc::new(GroupSpec::scaled_gamma(p, 1)?);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let idx = out.len();
        if idx % 4 == 3 {
            let k = rng.gen_range(1..=params.depth + 2);
            let b1 = random_wpoly(rng, &ctx, &group, p, q)?;
            if b1.is_zero() {
                continue;
            }
            let b0 = b1.mul(&s_head(&ctx, &group, q, p, k)?)?.neg();
            out.push(ProbeCase {
                label: format!("cancel-{k}"),
                coeffs: vec![b0, b1],
            });
            continue;
        }
        let len = rng.gen_range(1..=p as usize);
        let coeffs = (0..len)
            .map(|_| random_wpoly(rng, &ctx, &group, p, q))
            .collect::<Result<Vec<_>>>()?;
        if coeffs.iter().all(WPoly::is_zero) {
            continue;
        }
        out.push(ProbeCase {
            label: "random".into(),
            coeffs,
        });
    }
    Ok(out)
}

/// One part `c·t^{p^n u}` of a monomial-built Artin–Schreier input.
#[derive(Clone, Debug)]
pub struct AsPart {
    pub u: Exp,
    pub n: u32,
    pub c: Coeff,
}

#[derive(Clone, Debug)]
pub struct AsCase {
    pub parts: Vec<AsPart>,
    pub b: Expansion,
}

impl AsCase {
    /// `min u_i`: each chain ends at `c^{1/p^n} t^u` and the `u_i` are
    /// distinct negatives outside `pΓ`.
    pub fn expected_witness(&self) -> Exp {
        self.parts.iter().map(|a| a.u.clone()).min().expect("nonempty")
    }

    pub fn expected_steps(&self) -> u32 {
        self.parts.iter().map(|a| a.n).max().unwrap_or(0)
    }
}

/// `b = Σ c_i t^{p^{n_i} u_i}` in the frame `(1, 0)` with negative `u_i ∈ Γ \ pΓ`,
/// pairwise distinct, and `n_i ≤ 3`.
pub fn as_corpus<R: Rng>(rng: &mut R, ctx: &Arc<FieldCtx>, q: u32, n: usize) -> Result<Vec<AsCase>> {
    let p = ctx.p();
    let group = Arc::new(GroupSpec::p_prime(p)?);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let k = rng.gen_range(1..=3);
        let mut parts: Vec<AsPart> = Vec::new();
        while parts.len() < k {
            let u = random_exp(rng, p, q, 0, -9, -1);
            if p_adic_val(&u, p) > 0 || parts.iter().any(|a| a.u == u) {
                continue;
            }
            parts.push(AsPart {
                u,
                n: rng.gen_range(0..=3),
                c: nonzero_coeff(rng, ctx),
            });
        }
        let terms = parts
            .iter()
            .map(|a| (a.u.mul_int((p as i64).pow(a.n)), 0, a.c));
        let b = Expansion::new(ctx, &group, q, 1, Exp::zero(), terms, Val::Inf)?;
        out.push(AsCase { parts, b });
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct SubtractionProbe {
    pub label: String,
    pub z: WPoly,
    /// `false` for inputs whose outcome is not asserted.
    pub finite_non_power: bool,
}

/// Fixed finite-support inputs that are not `p`-th powers, followed by `z = w`.
pub fn subtraction_probes(ctx: &Arc<FieldCtx>, q: u32) -> Result<Vec<SubtractionProbe>> {
    let p = ctx.p() as i64;
    let group = Arc::new(GroupSpec::p_prime(ctx.p())?);
    let t = |e: Exp, j: u32| (e, j, Coeff::ONE);
    let inv_q = Exp::new(1, q as i64);
    type Spec<'a> = (&'a str, Vec<(Exp, u32, Coeff)>, bool);
    let specs: Vec<Spec> = vec![
        ("t^p + t^(1/q)", vec![t(Exp::from_int(p), 0), t(inv_q.clone(), 0)], true),
        ("t^(1/q)", vec![t(inv_q.clone(), 0)], true),
        (
            "t^(-2p) + t^(-p) + t^(1/q)",
            vec![t(Exp::from_int(-2 * p), 0), t(Exp::from_int(-p), 0), t(inv_q.clone(), 0)],
            true,
        ),
        ("t^(-p) + t^(-1)", vec![t(Exp::from_int(-p), 0), t(Exp::from_int(-1), 0)], true),
        ("w^p + t", vec![t(Exp::zero(), p as u32), t(Exp::one(), 0)], true),
        ("w + t^(1/q)", vec![t(Exp::zero(), 1), t(inv_q, 0)], true),
        ("w", vec![t(Exp::zero(), 1)], false),
    ];
    specs
        .into_iter()
        .map(|(label, terms, finite_non_power)| {
            Ok(SubtractionProbe {
                label: label.into(),
                z: WPoly::from_terms(ctx, &group, q, terms)?,
                finite_non_power,
            })
        })
        .collect()
}
