use thiserror::Error;

use crate::exponents::Exp;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("invalid exponent literal `{0}`")]
    BadExponent(String),
    #[error("adjoined element {0} has infinite order modulo the base group")]
    InfiniteIndex(Exp),
    #[error("group is not an extension of the requested base")]
    NotAnExtension,
    #[error("coset enumeration exceeds {0} representatives")]
    IndexTooLarge(usize),

    #[error("field of order {p}^{m} is too large (limit 65536 elements)")]
    FieldTooLarge { p: u32, m: u32 },
    #[error("modulus is not an irreducible monic polynomial of degree {0}")]
    ReducibleModulus(u32),
    #[error("no {n}-th root of {c} in the coefficient field; raise m")]
    NoRootInField { c: String, n: u64 },
    #[error("division by zero in the coefficient field")]
    DivisionByZero,
    #[error("invalid coefficient literal `{0}`")]
    BadCoefficient(String),
    #[error("operands live over different coefficient fields")]
    FieldMismatch,

    #[error("operands live in different value groups")]
    GroupMismatch,
    #[error("exponent {0} is not in the value group")]
    NotInGroup(Exp),
    #[error("valuation is not determined at the available precision")]
    IndeterminateValuation,
    #[error("exponent {0} is not divisible by p inside the value group")]
    SupportNotDivisible(Exp),
    #[error("an exact inverse needs an explicit output precision")]
    UnboundedPrecision,

    #[error("slopes must be pairwise distinct")]
    DuplicateSlopes,
    #[error("empty or inverted interval")]
    EmptyInterval,
    #[error("no stabilization certified up to l = {0}")]
    Inconclusive(u32),
    #[error("f vanishes at every tested truncation")]
    ZeroFunction,
    #[error("window [{0}, {1}] is invalid for this construction")]
    BadWindow(u32, u32),

    #[error("g-oracle degree cap too small; need at least {needed}")]
    InsufficientDegreeCap { needed: u64 },
    #[error("requested precision {0} cannot be reached from truncations of w")]
    UnreachablePrecision(Exp),
    #[error("h_{0} does not have strictly positive value")]
    NonPositiveValue(usize),
    #[error("frame r = {r}, beta = {beta} does not fit this element")]
    FrameTooCoarse { r: u32, beta: Exp },
    #[error("residue root is not simple")]
    NonSimpleResidueRoot,
    #[error("not a root of the reduced polynomial")]
    NoResidueRoot,
    #[error("Newton iteration did not reach the target precision")]
    NoConvergence,

    #[error("precision too low: {0}")]
    PrecisionTooLow(String),
    #[error("defining polynomial is reducible: {0}")]
    ReduciblePolynomial(String),
    #[error("f is identically zero")]
    DegenerateZero,
    #[error("unsupported extension: {0}")]
    Unsupported(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, Error>;
