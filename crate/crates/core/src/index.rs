//! Channels, m-tuples, permutation classes and their cardinalities.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfint::HalfInt;

/// One-particle channel: radial/species tags plus the angular momentum.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct LChannel {
    pub tags: Vec<u32>,
    pub ell: HalfInt,
}

impl LChannel {
    pub fn new(tags: Vec<u32>, ell: HalfInt) -> Self {
        LChannel { tags, ell }
    }

    pub fn untagged(ell: HalfInt) -> Self {
        LChannel { tags: Vec::new(), ell }
    }
}

impl fmt::Display for LChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.tags.is_empty() {
            return write!(f, "{}", self.ell);
        }
        write!(f, "(")?;
        for t in &self.tags {
            write!(f, "{t},")?;
        }
        write!(f, "{})", self.ell)
    }
}

/// Tuple of projections aligned with an [`LVector`].
pub type MTuple = Vec<HalfInt>;

/// Canonical class representative: ascending inside every block.
pub type ClassRep = Vec<HalfInt>;

/// Sorted channel vector together with its minimal partition into blocks
/// of identical channels.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LVector {
    entries: Vec<LChannel>,
    blocks: Vec<(usize, usize)>,
}

impl LVector {
    pub fn new(mut entries: Vec<LChannel>) -> Result<Self> {
        if let Some(c) = entries.iter().find(|c| c.ell.twice() < 0) {
            return Err(Error::NegativeEll(c.ell));
        }
        entries.sort();
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        for (i, c) in entries.iter().enumerate() {
            match blocks.last_mut() {
                Some((start, len)) if entries[*start] == *c => *len += 1,
                _ => blocks.push((i, 1)),
            }
        }
        Ok(LVector { entries, blocks })
    }

    /// `n` untagged copies of `ell`.
    pub fn homogeneous(ell: HalfInt, n: usize) -> Self {
        LVector::new(vec![LChannel::untagged(ell); n]).expect("non-negative ell")
    }

    pub fn from_ells(ells: impl IntoIterator<Item = HalfInt>) -> Result<Self> {
        LVector::new(ells.into_iter().map(LChannel::untagged).collect())
    }

    pub fn entries(&self) -> &[LChannel] {
        &self.entries
    }

    /// Blocks as `(start, length)` spans.
    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ell(&self, i: usize) -> HalfInt {
        self.entries[i].ell
    }

    pub fn ells(&self) -> impl Iterator<Item = HalfInt> + '_ {
        self.entries.iter().map(|c| c.ell)
    }

    pub fn sum_ell(&self) -> HalfInt {
        self.ells().sum()
    }

    pub fn max_ell(&self) -> HalfInt {
        self.ells().max().unwrap_or(HalfInt::ZERO)
    }

    pub fn block_channel(&self, j: usize) -> &LChannel {
        &self.entries[self.blocks[j].0]
    }

    /// True if `K + Σl` is an integer, i.e. tuples with sum `K` can exist.
    pub fn parity_allows(&self, k: HalfInt) -> bool {
        (k + self.sum_ell()).is_integer()
    }

    /// `∏(2l_i + 1)`.
    pub fn tuple_count(&self) -> BigUint {
        self.ells()
            .fold(BigUint::one(), |acc, l| acc * BigUint::from(l.multiplicity()))
    }

    /// `∏_j C(N_j + 2l_j, 2l_j)`, the number of classes.
    pub fn class_count(&self) -> BigUint {
        self.blocks.iter().fold(BigUint::one(), |acc, &(s, n)| {
            let a = self.entries[s].ell.twice() as u64;
            acc * binomial(n as u64 + a, a)
        })
    }

    /// Concatenation, re-sorted into canonical order.
    pub fn concat(&self, other: &LVector) -> LVector {
        let mut e = self.entries.clone();
        e.extend(other.entries.iter().cloned());
        LVector::new(e).expect("channels already validated")
    }

    /// True if `self ++ other` is already in canonical order.
    pub fn concat_is_sorted(&self, other: &LVector) -> bool {
        match (self.entries.last(), other.entries.first()) {
            (Some(a), Some(b)) => a <= b,
            _ => true,
        }
    }

    pub fn shares_channel(&self, other: &LVector) -> bool {
        self.entries.iter().any(|c| other.entries.contains(c))
    }

    /// Splits the entry list at `n` (both halves keep canonical order).
    pub fn split_at(&self, n: usize) -> (LVector, LVector) {
        let (a, b) = self.entries.split_at(n);
        (
            LVector::new(a.to_vec()).expect("validated"),
            LVector::new(b.to_vec()).expect("validated"),
        )
    }

    /// Subvector made of whole blocks `range`.
    pub fn block_range(&self, range: std::ops::Range<usize>) -> LVector {
        let e: Vec<LChannel> = self.blocks[range]
            .iter()
            .flat_map(|&(s, n)| self.entries[s..s + n].iter().cloned())
            .collect();
        LVector::new(e).expect("validated")
    }

    pub fn admits_tuple(&self, ms: &[HalfInt]) -> bool {
        ms.len() == self.len() && ms.iter().zip(self.ells()).all(|(&m, l)| l.admits(m))
    }

    pub fn admits_class(&self, ms: &[HalfInt]) -> bool {
        self.admits_tuple(ms)
            && self
                .blocks
                .iter()
                .all(|&(s, n)| ms[s..s + n].windows(2).all(|w| w[0] <= w[1]))
    }
}

impl fmt::Display for LVector {
    /// Compact `(tags,l)xN` groups per block, or a plain list when untagged.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tagged = self.entries.iter().any(|c| !c.tags.is_empty());
        let mut first = true;
        for &(s, n) in &self.blocks {
            let c = &self.entries[s];
            if tagged {
                if !first {
                    write!(f, ",")?;
                }
                write!(f, "(")?;
                for t in &c.tags {
                    write!(f, "{t},")?;
                }
                write!(f, "{})x{n}", c.ell)?;
                first = false;
            } else {
                for _ in 0..n {
                    if !first {
                        write!(f, ",")?;
                    }
                    write!(f, "{}", c.ell)?;
                    first = false;
                }
            }
        }
        Ok(())
    }
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// Bounds of the reachable twice-sums for positions `i..`.
fn suffix_twice_ell(lvec: &LVector) -> Vec<i32> {
    let mut suf = vec![0; lvec.len() + 1];
    for i in (0..lvec.len()).rev() {
        suf[i] = suf[i + 1] + lvec.ell(i).twice();
    }
    suf
}

/// All tuples with `Σm = K`, in lexicographic order.
pub fn enum_mtuples_k(lvec: &LVector, k: HalfInt) -> Vec<MTuple> {
    let suf = suffix_twice_ell(lvec);
    let mut out = Vec::new();
    if !lvec.parity_allows(k) || k.twice().abs() > suf[0] {
        return out;
    }
    let mut cur = Vec::with_capacity(lvec.len());
    fn rec(lvec: &LVector, suf: &[i32], rem: i32, cur: &mut MTuple, out: &mut Vec<MTuple>) {
        let i = cur.len();
        if i == lvec.len() {
            out.push(cur.clone());
            return;
        }
        for m in lvec.ell(i).projections() {
            let r = rem - m.twice();
            if r.abs() <= suf[i + 1] {
                cur.push(m);
                rec(lvec, suf, r, cur, out);
                cur.pop();
            }
        }
    }
    rec(lvec, &suf, k.twice(), &mut cur, &mut out);
    out
}

/// All class representatives with `Σm = K`, in lexicographic order.
pub fn enum_classes_k(lvec: &LVector, k: HalfInt) -> Vec<ClassRep> {
    let suf = suffix_twice_ell(lvec);
    let mut out = Vec::new();
    if !lvec.parity_allows(k) || k.twice().abs() > suf[0] {
        return out;
    }
    // block end for each position
    let mut end = vec![0; lvec.len()];
    for &(s, n) in lvec.blocks() {
        end[s..s + n].fill(s + n);
    }
    let mut cur = Vec::with_capacity(lvec.len());
    fn rec(
        lvec: &LVector,
        suf: &[i32],
        end: &[usize],
        rem: i32,
        cur: &mut ClassRep,
        out: &mut Vec<ClassRep>,
    ) {
        let i = cur.len();
        if i == lvec.len() {
            out.push(cur.clone());
            return;
        }
        let e = end[i];
        let same_block_prev = i > 0 && end[i - 1] == e;
        for m in lvec.ell(i).projections() {
            if same_block_prev && m < cur[i - 1] {
                continue;
            }
            let r = rem - m.twice();
            // remaining positions of this block are at least m, the rest at least -l
            let min_rest = (e - i - 1) as i32 * m.twice() - suf[e];
            if r > suf[i + 1] || r < min_rest {
                continue;
            }
            cur.push(m);
            rec(lvec, suf, end, r, cur, out);
            cur.pop();
        }
    }
    rec(lvec, &suf, &end, k.twice(), &mut cur, &mut out);
    out
}

/// All tuples of `M_l` in lexicographic order.
pub fn all_mtuples(lvec: &LVector) -> Vec<MTuple> {
    let mut out = vec![Vec::with_capacity(lvec.len())];
    for l in lvec.ells() {
        out = out
            .into_iter()
            .flat_map(|t| {
                l.projections().map(move |m| {
                    let mut t = t.clone();
                    t.push(m);
                    t
                })
            })
            .collect();
    }
    out
}

/// All class representatives of `M̄_l` in lexicographic order.
pub fn all_classes(lvec: &LVector) -> Vec<ClassRep> {
    all_mtuples_filtered(lvec)
}

fn all_mtuples_filtered(lvec: &LVector) -> Vec<ClassRep> {
    let mut out = vec![Vec::with_capacity(lvec.len())];
    for &(s, n) in lvec.blocks() {
        let l = lvec.ell(s);
        for pos in 0..n {
            out = out
                .into_iter()
                .flat_map(|t: ClassRep| {
                    let lo = if pos == 0 { -l } else { *t.last().unwrap() };
                    l.projections().filter(move |&m| m >= lo).map(move |m| {
                        let mut t = t.clone();
                        t.push(m);
                        t
                    })
                })
                .collect();
        }
    }
    out
}

fn convolve(a: &[BigUint], b: &[BigUint]) -> Vec<BigUint> {
    let mut out = vec![BigUint::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of `∏_i Σ_{m} x^{m+l_i}`; index `K + Σl` counts tuples with sum `K`.
pub fn mtuple_polynomial(lvec: &LVector) -> Vec<BigUint> {
    let mut poly = vec![BigUint::one()];
    for l in lvec.ells() {
        let factor = vec![BigUint::one(); l.multiplicity()];
        poly = convolve(&poly, &factor);
    }
    poly
}

/// Gaussian binomial `[n + a, n]_x`: multisets of size `n` from `{0..a}` by sum.
pub fn gaussian_binomial(n: usize, a: usize) -> Vec<BigUint> {
    // g[a'] holds the polynomial for the current n and alphabet {0..a'}
    let mut g: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]; a + 1];
    for nn in 1..=n {
        let mut next: Vec<Vec<BigUint>> = Vec::with_capacity(a + 1);
        next.push(vec![BigUint::one()]);
        for aa in 1..=a {
            // G(nn, aa) = G(nn-1, aa) + x^nn G(nn, aa-1)
            let mut p = vec![BigUint::zero(); nn * aa + 1];
            for (i, c) in g[aa].iter().enumerate() {
                p[i] += c;
            }
            for (i, c) in next[aa - 1].iter().enumerate() {
                p[i + nn] += c;
            }
            next.push(p);
        }
        g = next;
    }
    g.swap_remove(a)
}

/// Coefficients of `∏_j [N_j + 2l_j, N_j]_x`; index `K + Σl` counts classes with sum `K`.
pub fn class_polynomial(lvec: &LVector) -> Vec<BigUint> {
    let mut poly = vec![BigUint::one()];
    for &(s, n) in lvec.blocks() {
        let a = lvec.ell(s).twice() as usize;
        poly = convolve(&poly, &gaussian_binomial(n, a));
    }
    poly
}

fn coefficient_at(poly: &[BigUint], lvec: &LVector, k: HalfInt) -> BigUint {
    if !lvec.parity_allows(k) {
        return BigUint::zero();
    }
    let idx = (k + lvec.sum_ell()).twice() / 2;
    if idx < 0 {
        return BigUint::zero();
    }
    poly.get(idx as usize).cloned().unwrap_or_default()
}

/// `|M_{l,K}|` without enumeration.
pub fn card_mtuples_k(lvec: &LVector, k: HalfInt) -> BigUint {
    coefficient_at(&mtuple_polynomial(lvec), lvec, k)
}

/// `|M̄_{l,K}|` without enumeration.
pub fn card_classes_k(lvec: &LVector, k: HalfInt) -> BigUint {
    coefficient_at(&class_polynomial(lvec), lvec, k)
}

/// Reads `|M_{l,K}|` (or the class analogue) from a precomputed polynomial.
pub fn polynomial_coefficient(poly: &[BigUint], lvec: &LVector, k: HalfInt) -> BigUint {
    coefficient_at(poly, lvec, k)
}

/// Occurrence counts per block, indexed by `m + l`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct CountVector(pub Vec<Vec<u32>>);

pub fn count_vector(lvec: &LVector, class: &[HalfInt]) -> CountVector {
    CountVector(
        lvec.blocks()
            .iter()
            .map(|&(s, n)| {
                let l = lvec.ell(s);
                let mut c = vec![0u32; l.multiplicity()];
                for &m in &class[s..s + n] {
                    c[l.offset(m)] += 1;
                }
                c
            })
            .collect(),
    )
}

pub fn class_of_counts(lvec: &LVector, counts: &CountVector) -> ClassRep {
    let mut out = Vec::with_capacity(lvec.len());
    for (&(s, _), c) in lvec.blocks().iter().zip(&counts.0) {
        for (m, &k) in lvec.ell(s).projections().zip(c) {
            out.extend(std::iter::repeat_n(m, k as usize));
        }
    }
    out
}

/// Canonical representative of the class containing `ms`.
pub fn class_of(lvec: &LVector, ms: &[HalfInt]) -> ClassRep {
    let mut out = ms.to_vec();
    for &(s, n) in lvec.blocks() {
        out[s..s + n].sort_unstable();
    }
    out
}

/// Number of tuples in the class, `∏_j N_j! / ∏_p λ_p!`.
pub fn class_size(lvec: &LVector, class: &[HalfInt]) -> BigUint {
    let counts = count_vector(lvec, class);
    let mut out = BigUint::one();
    for (&(_, n), c) in lvec.blocks().iter().zip(&counts.0) {
        let mut remaining = n as u64;
        for &k in c {
            out *= binomial(remaining, k as u64);
            remaining -= k as u64;
        }
    }
    out
}

/// Replaces one occurrence of `p` in block `j` by `q`, keeping the block sorted.
pub fn move_in_block(
    lvec: &LVector,
    class: &[HalfInt],
    j: usize,
    p: HalfInt,
    q: HalfInt,
) -> Option<ClassRep> {
    let (s, n) = lvec.blocks()[j];
    let slice = &class[s..s + n];
    let pos = slice.iter().position(|&m| m == p)?;
    let mut out = class.to_vec();
    let block = &mut out[s..s + n];
    block[pos] = q;
    // restore ascending order by bubbling the changed entry
    let mut i = pos;
    while i + 1 < n && block[i] > block[i + 1] {
        block.swap(i, i + 1);
        i += 1;
    }
    while i > 0 && block[i - 1] > block[i] {
        block.swap(i - 1, i);
        i -= 1;
    }
    Some(out)
}

/// Class reachable by moving one count unit `p → q` inside block `block`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Interaction {
    pub block: usize,
    pub p: HalfInt,
    pub q: HalfInt,
    pub target: ClassRep,
    /// Count of `q` in the target's block.
    pub multiplier: u32,
}

pub fn interacting_classes(lvec: &LVector, class: &[HalfInt]) -> Vec<Interaction> {
    let counts = count_vector(lvec, class);
    let mut out = Vec::new();
    for (j, &(s, _)) in lvec.blocks().iter().enumerate() {
        let l = lvec.ell(s);
        for p in l.projections() {
            if counts.0[j][l.offset(p)] == 0 {
                continue;
            }
            for q in l.projections().filter(|&q| q != p) {
                let target = move_in_block(lvec, class, j, p, q).expect("p occurs");
                out.push(Interaction {
                    block: j,
                    p,
                    q,
                    target,
                    multiplier: counts.0[j][l.offset(q)] + 1,
                });
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    fn ints(v: &[i32]) -> Vec<HalfInt> {
        v.iter().map(|&x| HalfInt::from_int(x)).collect()
    }

    #[test]
    fn minimal_partition_examples() {
        let one = HalfInt::ONE;
        let v = LVector::new(vec![
            LChannel::new(vec![0], one),
            LChannel::new(vec![0], one),
            LChannel::new(vec![1], one),
        ])
        .unwrap();
        assert_eq!(v.blocks(), &[(0, 2), (2, 1)]);
        let v = LVector::from_ells(ints(&[2, 1, 2])).unwrap();
        assert_eq!(v.ells().collect::<Vec<_>>(), ints(&[1, 2, 2]));
        assert_eq!(v.blocks(), &[(0, 1), (1, 2)]);
        let again = LVector::new(v.entries().to_vec()).unwrap();
        assert_eq!(again, v);
        assert!(LVector::from_ells([h(-1)]).is_err());
    }

    #[test]
    fn enumeration_examples() {
        let v = LVector::homogeneous(HalfInt::ONE, 2);
        let t = enum_mtuples_k(&v, HalfInt::ZERO);
        assert_eq!(t, vec![ints(&[-1, 1]), ints(&[0, 0]), ints(&[1, -1])]);
        assert!(enum_mtuples_k(&v, HalfInt::from_int(3)).is_empty());
        let c = enum_classes_k(&v, HalfInt::ZERO);
        assert_eq!(c, vec![ints(&[-1, 1]), ints(&[0, 0])]);
        assert_eq!(enum_classes_k(&v, HalfInt::from_int(2)), vec![ints(&[1, 1])]);
        let half = LVector::homogeneous(HalfInt::HALF, 2);
        assert_eq!(enum_mtuples_k(&half, HalfInt::ONE), vec![vec![h(1), h(1)]]);
        assert!(enum_mtuples_k(&half, HalfInt::HALF).is_empty());
        let eight = LVector::homogeneous(HalfInt::ONE, 8);
        assert_eq!(enum_classes_k(&eight, HalfInt::ZERO).len(), 5);
    }

    #[test]
    fn cardinality_examples() {
        let two = LVector::homogeneous(HalfInt::ONE, 2);
        let three = LVector::homogeneous(HalfInt::ONE, 3);
        assert_eq!(card_mtuples_k(&two, HalfInt::ZERO), BigUint::from(3u32));
        assert_eq!(card_mtuples_k(&three, HalfInt::ONE), BigUint::from(6u32));
        assert_eq!(card_classes_k(&two, HalfInt::ZERO), BigUint::from(2u32));
        for n in 1..=10usize {
            let v = LVector::homogeneous(HalfInt::ONE, n);
            for l in 0..=n as i32 {
                let expected = (n as i32 - l) / 2 + 1;
                assert_eq!(
                    card_classes_k(&v, HalfInt::from_int(l)),
                    BigUint::from(expected as u32)
                );
            }
            assert_eq!(card_mtuples_k(&v, v.sum_ell()), BigUint::one());
        }
    }

    #[test]
    fn gaussian_binomial_small() {
        // [4 choose 2]_x = 1 + x + 2x^2 + x^3 + x^4
        let g = gaussian_binomial(2, 2);
        let v: Vec<u32> = g.iter().map(|c| c.try_into().unwrap()).collect();
        assert_eq!(v, vec![1, 1, 2, 1, 1]);
    }

    #[test]
    fn count_vector_examples() {
        let v = LVector::homogeneous(HalfInt::ONE, 5);
        let c = ints(&[-1, -1, 0, 1, 1]);
        let cv = count_vector(&v, &c);
        assert_eq!(cv.0, vec![vec![2, 1, 2]]);
        assert_eq!(class_of_counts(&v, &cv), c);
        let low = ints(&[-1; 5]);
        assert_eq!(count_vector(&v, &low).0, vec![vec![5, 0, 0]]);
        let top = class_of_counts(&v, &CountVector(vec![vec![0, 0, 5]]));
        assert_eq!(top, ints(&[1; 5]));
        assert_eq!(class_size(&v, &c), BigUint::from(30u32));
    }

    #[test]
    fn interacting_examples() {
        let v = LVector::homogeneous(HalfInt::ONE, 2);
        let moves = interacting_classes(&v, &ints(&[0, 0]));
        let targets: Vec<_> = moves.iter().map(|m| (m.target.clone(), m.multiplier)).collect();
        assert_eq!(targets, vec![(ints(&[-1, 0]), 1), (ints(&[0, 1]), 1)]);

        let v = LVector::homogeneous(HalfInt::ONE, 3);
        let moves = interacting_classes(&v, &ints(&[-1, 0, 1]));
        let m = moves
            .iter()
            .find(|m| m.p == HalfInt::from_int(-1) && m.q == HalfInt::ZERO)
            .unwrap();
        assert_eq!(m.target, ints(&[0, 0, 1]));
        assert_eq!(m.multiplier, 2);

        let v = LVector::homogeneous(HalfInt::ONE, 4);
        let moves = interacting_classes(&v, &ints(&[-1; 4]));
        assert!(moves.iter().all(|m| m.p == HalfInt::from_int(-1)));
        assert_eq!(moves.len(), 2);
    }
}
