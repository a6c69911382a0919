//! Exact, explicit, recursive and asymptotic dimensions of GE and GE-PI spaces.

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::index::{binomial, class_polynomial, mtuple_polynomial, polynomial_coefficient, LVector};
use crate::solver::Kind;

/// All dimensions of one `(lvec, kind)` pair, read off a single generating polynomial.
#[derive(Clone, Debug)]
pub struct DimTable {
    lvec: LVector,
    poly: Vec<BigUint>,
}

impl DimTable {
    pub fn new(lvec: &LVector, kind: Kind) -> Self {
        let poly = match kind {
            Kind::Ge => mtuple_polynomial(lvec),
            Kind::Gepi => class_polynomial(lvec),
        };
        DimTable { lvec: lvec.clone(), poly }
    }

    /// `|M_{l,K}|` or `|M̄_{l,K}|`.
    pub fn card(&self, k: HalfInt) -> BigUint {
        polynomial_coefficient(&self.poly, &self.lvec, k)
    }

    pub fn dim(&self, l: HalfInt) -> BigUint {
        assert!(l.twice() >= 0, "L must be non-negative");
        let a = self.card(l);
        let b = self.card(l + HalfInt::ONE);
        if a > b {
            a - b
        } else {
            BigUint::zero()
        }
    }

    /// `(L, dim)` for every admissible `L` from the smallest up to `Σl`.
    pub fn all(&self) -> Vec<(HalfInt, BigUint)> {
        let top = self.lvec.sum_ell();
        let start = HalfInt::from_twice(top.twice() % 2);
        (start.twice()..=top.twice())
            .step_by(2)
            .map(|t| {
                let l = HalfInt::from_twice(t);
                (l, self.dim(l))
            })
            .collect()
    }
}

pub fn dim_ge(lvec: &LVector, l: HalfInt) -> BigUint {
    DimTable::new(lvec, Kind::Ge).dim(l)
}

pub fn dim_gepi(lvec: &LVector, l: HalfInt) -> BigUint {
    DimTable::new(lvec, Kind::Gepi).dim(l)
}

pub fn dim(kind: Kind, lvec: &LVector, l: HalfInt) -> BigUint {
    DimTable::new(lvec, kind).dim(l)
}

fn binomial_signed(n: i64, k: i64) -> BigUint {
    if n < 0 || k < 0 || k > n {
        BigUint::zero()
    } else {
        binomial(n as u64, k as u64)
    }
}

/// Inclusion–exclusion formula over all subsets of the channels.
pub fn dim_ge_explicit(lvec: &LVector, l: HalfInt) -> Result<BigUint> {
    let n = lvec.len();
    if n > 24 {
        return Err(Error::TooManyChannels(n));
    }
    let shifted = l + lvec.sum_ell();
    if !shifted.is_integer() {
        return Ok(BigUint::zero());
    }
    match n {
        0 => return Ok(BigUint::from((l == HalfInt::ZERO) as u32)),
        1 => return Ok(BigUint::from((l == lvec.ell(0)) as u32)),
        _ => {}
    }
    let base = (shifted.twice() / 2) as i64 + n as i64 - 1;
    let sizes: Vec<i64> = lvec.ells().map(|x| x.multiplicity() as i64).collect();
    let mut acc = BigInt::zero();
    for mask in 0u32..(1u32 << n) {
        let removed: i64 = (0..n).filter(|&s| mask >> s & 1 == 1).map(|s| sizes[s]).sum();
        let term = binomial_signed(base - removed, n as i64 - 2);
        if term.is_zero() {
            continue;
        }
        let term = BigInt::from_biguint(Sign::Plus, term);
        if mask.count_ones() % 2 == 1 {
            acc += term;
        } else {
            acc -= term;
        }
    }
    Ok(acc.to_biguint().expect("dimension is non-negative"))
}

/// 1 iff `L1 + L2 + L` is an integer and the triangle rule holds.
pub fn dim_cg(l1: HalfInt, l2: HalfInt, l: HalfInt) -> u32 {
    let integral = (l1 + l2 + l).is_integer();
    let triangle = (l1 - l2).abs() <= l && l <= l1 + l2;
    (integral && triangle) as u32
}

/// `Σ_{L1} Σ_{L2 = |L-L1|}^{min(Σl2, L1+L)} dim(l1, L1) dim(l2, L2)`.
fn recursive_sum(t1: &DimTable, t2: &DimTable, s1: HalfInt, s2: HalfInt, l: HalfInt) -> BigUint {
    let mut acc = BigUint::zero();
    let mut l1 = HalfInt::from_twice(s1.twice() % 2);
    while l1 <= s1 {
        let d1 = t1.dim(l1);
        if !d1.is_zero() {
            let mut l2 = (l - l1).abs();
            let hi = s2.min(l1 + l);
            while l2 <= hi {
                acc += &d1 * t2.dim(l2);
                l2 += HalfInt::ONE;
            }
        }
        l1 += HalfInt::ONE;
    }
    acc
}

/// Recursive GE dimension for the split `lvec = (l1, l2)`.
pub fn dim_ge_recursive(l1: &LVector, l2: &LVector, l: HalfInt) -> BigUint {
    let t1 = DimTable::new(l1, Kind::Ge);
    let t2 = DimTable::new(l2, Kind::Ge);
    recursive_sum(&t1, &t2, l1.sum_ell(), l2.sum_ell(), l)
}

/// Recursive GE-PI dimension; the halves must not share a channel.
pub fn dim_gepi_recursive(l1: &LVector, l2: &LVector, l: HalfInt) -> Result<BigUint> {
    if l1.shares_channel(l2) {
        return Err(Error::IntersectingSplit);
    }
    let t1 = DimTable::new(l1, Kind::Gepi);
    let t2 = DimTable::new(l2, Kind::Gepi);
    Ok(recursive_sum(&t1, &t2, l1.sum_ell(), l2.sum_ell(), l))
}

/// Variance of the projection sum under the uniform measure on tuples (GE)
/// or classes (GE-PI).
pub fn var_l(lvec: &LVector, kind: Kind) -> f64 {
    match kind {
        Kind::Ge => lvec.ells().map(|l| l.to_f64() * (l.to_f64() + 1.0) / 3.0).sum(),
        Kind::Gepi => lvec
            .blocks()
            .iter()
            .map(|&(s, n)| {
                let (l, n) = (lvec.ell(s).to_f64(), n as f64);
                n * l * (n + 2.0 * l + 1.0) / 6.0
            })
            .sum(),
    }
}

fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits < 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

/// Leading-order estimate `normalizer·(2L+1) / (2√(2π)·Var^{3/2})`.
pub fn dim_asymptotic(lvec: &LVector, l: HalfInt, kind: Kind) -> f64 {
    let var = var_l(lvec, kind);
    if var == 0.0 {
        return if l == HalfInt::ZERO { 1.0 } else { 0.0 };
    }
    let norm = match kind {
        Kind::Ge => lvec.tuple_count(),
        Kind::Gepi => lvec.class_count(),
    };
    let ln = ln_biguint(&norm) + (2.0 * l.to_f64() + 1.0).ln()
        - (2.0 * (2.0 * std::f64::consts::PI).sqrt()).ln()
        - 1.5 * var.ln();
    ln.exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Exact,
    Explicit,
    Recursive,
    Asymptotic,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "cardinality-difference",
            Method::Explicit => "inclusion-exclusion",
            Method::Recursive => "recursive",
            Method::Asymptotic => "asymptotic",
        })
    }
}

#[derive(Clone, Debug)]
pub struct DimReport {
    pub lvec: LVector,
    pub l: HalfInt,
    pub kind: Kind,
    pub exact: BigUint,
    pub method: Method,
    pub estimate: Option<f64>,
    pub var_l: f64,
}

/// Default split for the recursive method: halves of the entries (GE) or of
/// the minimal-partition blocks (GE-PI).
pub fn default_split(lvec: &LVector, kind: Kind) -> Option<(LVector, LVector)> {
    match kind {
        Kind::Ge if lvec.len() >= 2 => Some(lvec.split_at(lvec.len() / 2)),
        Kind::Gepi if lvec.blocks().len() >= 2 => {
            let nb = lvec.blocks().len();
            Some((lvec.block_range(0..nb / 2), lvec.block_range(nb / 2..nb)))
        }
        _ => None,
    }
}

pub fn dim_report(lvec: &LVector, l: HalfInt, kind: Kind, method: Method) -> Result<DimReport> {
    let exact = match (method, kind) {
        (Method::Explicit, Kind::Ge) => dim_ge_explicit(lvec, l)?,
        (Method::Recursive, _) => match default_split(lvec, kind) {
            Some((a, b)) => match kind {
                Kind::Ge => dim_ge_recursive(&a, &b, l),
                Kind::Gepi => dim_gepi_recursive(&a, &b, l)?,
            },
            None => dim(kind, lvec, l),
        },
        _ => dim(kind, lvec, l),
    };
    let estimate = (method == Method::Asymptotic).then(|| dim_asymptotic(lvec, l, kind));
    Ok(DimReport { lvec: lvec.clone(), l, kind, exact, method, estimate, var_l: var_l(lvec, kind) })
}
