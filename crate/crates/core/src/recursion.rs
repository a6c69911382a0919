//! Recursive assembly of coupling bases from sub-bases and pairwise
//! Clebsch–Gordan coefficients.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use faer::Mat;

use crate::dims::dim;
use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::index::{LChannel, LVector, MTuple};
use crate::linalg::fix_sign_real;
use crate::solver::{basis, ge_basis, CouplingBasis, Kind};

/// Relative rank cut used when deduplicating spanning sets.
pub const DEDUP_TOL: f64 = 1e-8;

/// Vectors obtained by coupling two sub-bases, before any deduplication.
#[derive(Clone, Debug)]
pub struct CoupledBasis {
    pub kind: Kind,
    pub lvec: LVector,
    pub l: HalfInt,
    pub support: Vec<MTuple>,
    pub vectors: Vec<Vec<f64>>,
    /// `(L1, i1, L2, i2)` for each vector.
    pub provenance: Vec<(HalfInt, usize, HalfInt, usize)>,
}

impl CoupledBasis {
    fn empty(kind: Kind, lvec: LVector, l: HalfInt) -> Self {
        let support = CouplingBasis::canonical_support(kind, &lvec, l);
        CoupledBasis { kind, lvec, l, support, vectors: Vec::new(), provenance: Vec::new() }
    }

    fn append(&mut self, other: CoupledBasis) {
        self.vectors.extend(other.vectors);
        self.provenance.extend(other.provenance);
    }

    /// Converts to a [`CouplingBasis`] with unit-norm vectors.
    pub fn into_basis(self) -> CouplingBasis {
        let mut b = template(self.kind, &self.lvec, self.l, self.support);
        b.vectors = self.vectors.into_iter().map(normalized).collect();
        b
    }
}

fn template(kind: Kind, lvec: &LVector, l: HalfInt, support: Vec<MTuple>) -> CouplingBasis {
    let mut b = basis_shell(kind, lvec, l);
    b.support = support;
    b
}

fn basis_shell(kind: Kind, lvec: &LVector, l: HalfInt) -> CouplingBasis {
    let group = if l.is_integer() && lvec.ells().all(HalfInt::is_integer) {
        crate::solver::Group::So3
    } else {
        crate::solver::Group::Su2
    };
    CouplingBasis { group, kind, lvec: lvec.clone(), l, parity: None, support: Vec::new(), vectors: Vec::new() }
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    v
}

type CgMap = HashMap<(HalfInt, HalfInt), f64>;

/// In-memory cache of two-channel Clebsch–Gordan vectors keyed by `(2L1, 2L2, 2L)`.
#[derive(Default)]
pub struct CgCache {
    map: HashMap<(i32, i32, i32), Option<CgMap>>,
}

impl CgCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Coefficients `cg_{(k1, k2), k1 + k2}`, or `None` outside the triangle window.
    pub fn get(&mut self, l1: HalfInt, l2: HalfInt, l: HalfInt) -> Result<Option<&CgMap>> {
        let entry = match self.map.entry((l1.twice(), l2.twice(), l.twice())) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                // distinct tags keep the (L1, L2) slot order under canonical sorting
                let pair = LVector::new(vec![LChannel::new(vec![0], l1), LChannel::new(vec![1], l2)])?;
                let b = ge_basis(&pair, l)?;
                e.insert(b.vectors.first().map(|v| b.support.iter().zip(v).map(|(m, &c)| ((m[0], m[1]), c)).collect()))
            }
        };
        Ok(entry.as_ref())
    }
}

/// Parent index tuple for a coupled pair: concatenation (GE), or the merged
/// class with `(channel, m)` pairs sorted (GE-PI).
fn merge(kind: Kind, l1: &LVector, m1: &[HalfInt], l2: &LVector, m2: &[HalfInt]) -> MTuple {
    match kind {
        Kind::Ge => m1.iter().chain(m2).copied().collect(),
        Kind::Gepi => {
            let mut pairs: Vec<(&LChannel, HalfInt)> = l1
                .entries()
                .iter()
                .zip(m1.iter().copied())
                .chain(l2.entries().iter().zip(m2.iter().copied()))
                .collect();
            pairs.sort();
            pairs.into_iter().map(|p| p.1).collect()
        }
    }
}

fn check_pair(b1: &CouplingBasis, b2: &CouplingBasis) -> Result<LVector> {
    if b1.kind != b2.kind {
        return Err(Error::KindMismatch);
    }
    if b1.kind == Kind::Ge && !b1.lvec.concat_is_sorted(&b2.lvec) {
        return Err(Error::UnsortedSplit);
    }
    Ok(b1.lvec.concat(&b2.lvec))
}

/// Couples every vector of `b1` (output `L1`) with every vector of `b2`
/// (output `L2`) to total output `L`.
pub fn couple_pair(b1: &CouplingBasis, b2: &CouplingBasis, l: HalfInt, cache: &mut CgCache) -> Result<CoupledBasis> {
    let lvec = check_pair(b1, b2)?;
    let kind = b1.kind;
    let mut out = CoupledBasis::empty(kind, lvec, l);
    if b1.is_empty() || b2.is_empty() {
        return Ok(out);
    }
    let Some(cg) = cache.get(b1.l, b2.l, l)? else {
        return Ok(out);
    };
    let index: HashMap<&[HalfInt], usize> =
        out.support.iter().enumerate().map(|(i, m)| (m.as_slice(), i)).collect();
    let sums = |b: &CouplingBasis| b.support.iter().map(|m| m.iter().copied().sum()).collect::<Vec<HalfInt>>();
    let (k1s, k2s) = (sums(b1), sums(b2));
    // (parent index, i1, i2, cg) for every contributing pair of support entries
    let mut terms = Vec::new();
    for (i1, m1) in b1.support.iter().enumerate() {
        for (i2, m2) in b2.support.iter().enumerate() {
            if let Some(&c) = cg.get(&(k1s[i1], k2s[i2])) {
                if c != 0.0 {
                    let parent = index[merge(kind, &b1.lvec, m1, &b2.lvec, m2).as_slice()];
                    terms.push((parent, i1, i2, c));
                }
            }
        }
    }
    for (a, v1) in b1.vectors.iter().enumerate() {
        for (b, v2) in b2.vectors.iter().enumerate() {
            let mut v = vec![0.0; out.support.len()];
            for &(p, i1, i2, c) in &terms {
                v[p] += c * v1[i1] * v2[i2];
            }
            out.vectors.push(v);
            out.provenance.push((b1.l, a, b2.l, b));
        }
    }
    Ok(out)
}

/// Couples two families of sub-bases (one basis per output `L`).
pub fn couple_families(f1: &[CouplingBasis], f2: &[CouplingBasis], l: HalfInt, cache: &mut CgCache) -> Result<CoupledBasis> {
    let (Some(a), Some(b)) = (f1.first(), f2.first()) else {
        return Err(Error::InvalidIndex("empty basis family".into()));
    };
    let mut out = CoupledBasis::empty(a.kind, check_pair(a, b)?, l);
    for b1 in f1 {
        for b2 in f2 {
            out.append(couple_pair(b1, b2, l, cache)?);
        }
    }
    Ok(out)
}

/// Output values `L` admitted by `lvec`, ascending.
pub fn output_range(lvec: &LVector) -> impl Iterator<Item = HalfInt> {
    let top = lvec.sum_ell().twice();
    (top % 2..=top).step_by(2).map(HalfInt::from_twice)
}

/// Direct bases of `lvec` for every output `L` with nonzero dimension.
pub fn family(kind: Kind, lvec: &LVector) -> Result<Vec<CouplingBasis>> {
    output_range(lvec)
        .filter(|&l| dim(kind, lvec, l) > 0u32.into())
        .map(|l| basis(kind, lvec, l))
        .collect()
}

fn coupled_family(f1: &[CouplingBasis], f2: &[CouplingBasis], lvec: &LVector, cache: &mut CgCache) -> Result<Vec<CouplingBasis>> {
    let mut out = Vec::new();
    for l in output_range(lvec) {
        let c = couple_families(f1, f2, l, cache)?;
        if !c.vectors.is_empty() {
            out.push(c.into_basis());
        }
    }
    Ok(out)
}

fn ge_family(lvec: &LVector, cache: &mut CgCache) -> Result<Vec<CouplingBasis>> {
    if lvec.len() <= 1 {
        return family(Kind::Ge, lvec);
    }
    let (a, b) = lvec.split_at(lvec.len() / 2);
    let (fa, fb) = (ge_family(&a, cache)?, ge_family(&b, cache)?);
    coupled_family(&fa, &fb, lvec, cache)
}

/// GE basis by recursive coupling over a balanced binary split of the entries.
pub fn assemble_ge(lvec: &LVector, l: HalfInt) -> Result<CouplingBasis> {
    if lvec.len() <= 1 {
        return ge_basis(lvec, l);
    }
    let mut cache = CgCache::new();
    let (a, b) = lvec.split_at(lvec.len() / 2);
    let (fa, fb) = (ge_family(&a, &mut cache)?, ge_family(&b, &mut cache)?);
    Ok(couple_families(&fa, &fb, l, &mut cache)?.into_basis())
}

/// GE-PI basis from per-block families (each a list of GE-PI bases over one
/// minimal-partition block, one per output value), coupled left to right.
pub fn assemble_gepi_from_blocks(blocks: &[Vec<CouplingBasis>], l: HalfInt) -> Result<CouplingBasis> {
    if blocks.is_empty() || blocks.iter().any(Vec::is_empty) {
        return Err(Error::InvalidIndex("empty basis family".into()));
    }
    let lvec = blocks[1..].iter().fold(blocks[0][0].lvec.clone(), |acc, f| acc.concat(&f[0].lvec));
    let empty = || template(Kind::Gepi, &lvec, l, CouplingBasis::canonical_support(Kind::Gepi, &lvec, l));
    let mut cache = CgCache::new();
    let mut acc = blocks[0].clone();
    for (i, next) in blocks.iter().enumerate().skip(1) {
        if i + 1 == blocks.len() {
            return Ok(couple_families(&acc, next, l, &mut cache)?.into_basis());
        }
        let partial = acc[0].lvec.concat(&next[0].lvec);
        acc = coupled_family(&acc, next, &partial, &mut cache)?;
        if acc.is_empty() {
            return Ok(empty());
        }
    }
    Ok(acc.into_iter().find(|b| b.l == l).unwrap_or_else(empty))
}

/// GE-PI basis assembled block by block over the minimal partition.
pub fn assemble_gepi(lvec: &LVector, l: HalfInt) -> Result<CouplingBasis> {
    if lvec.blocks().len() <= 1 {
        return basis(Kind::Gepi, lvec, l);
    }
    let families: Vec<Vec<CouplingBasis>> = (0..lvec.blocks().len())
        .map(|j| family(Kind::Gepi, &lvec.block_range(j..j + 1)))
        .collect::<Result<_>>()?;
    if families.iter().any(Vec::is_empty) {
        return Ok(template(Kind::Gepi, lvec, l, CouplingBasis::canonical_support(Kind::Gepi, lvec, l)));
    }
    assemble_gepi_from_blocks(&families, l)
}

/// GE-PI basis from an arbitrary split `l1 ++ l2`. Shared channels make the
/// coupled family a spanning set, which is reduced by [`dedup_span`].
pub fn assemble_gepi_split(l1: &LVector, l2: &LVector, l: HalfInt) -> Result<(CoupledBasis, CouplingBasis)> {
    let (f1, f2) = (family(Kind::Gepi, l1)?, family(Kind::Gepi, l2)?);
    let lvec = l1.concat(l2);
    let mut cache = CgCache::new();
    let coupled = if f1.is_empty() || f2.is_empty() {
        CoupledBasis::empty(Kind::Gepi, lvec, l)
    } else {
        couple_families(&f1, &f2, l, &mut cache)?
    };
    let mut b = template(Kind::Gepi, &coupled.lvec, l, coupled.support.clone());
    b.vectors = dedup_span(&coupled.vectors, DEDUP_TOL)?;
    Ok((coupled, b))
}

/// Orthonormal basis of the span of unit-scale `vectors`, rank cut at
/// `σ > tol·max(σ_max, 1)` so that fully cancelled families come out empty.
pub fn dedup_span(vectors: &[Vec<f64>], tol: f64) -> Result<Vec<Vec<f64>>> {
    let Some(n) = vectors.first().map(Vec::len) else {
        return Ok(Vec::new());
    };
    if vectors.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let a = Mat::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    let svd = a.thin_svd().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let smax = if s.nrows() > 0 { s[0] } else { 0.0 };
    let rank = (0..s.nrows()).filter(|&i| s[i] > tol * smax.max(1.0)).count();
    let u = svd.U();
    Ok((0..rank)
        .map(|j| {
            let mut v: Vec<f64> = (0..n).map(|i| u[(i, j)]).collect();
            fix_sign_real(&mut v);
            v
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dims::{dim_cg, dim_gepi};

    fn h(t: i32) -> HalfInt {
        HalfInt::from_twice(t)
    }

    #[test]
    fn singlet_from_identity_bases() {
        let one = LVector::homogeneous(HalfInt::ONE, 1);
        let id = ge_basis(&one, HalfInt::ONE).unwrap();
        let mut cache = CgCache::new();
        let c = couple_pair(&id, &id, HalfInt::ZERO, &mut cache).unwrap();
        let direct = ge_basis(&LVector::homogeneous(HalfInt::ONE, 2), HalfInt::ZERO).unwrap();
        assert_eq!(c.vectors.len(), 1);
        assert_eq!(c.support, direct.support);
        let v = normalized(c.vectors[0].clone());
        let dot: f64 = v.iter().zip(&direct.vectors[0]).map(|(a, b)| a * b).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-12);
        assert!(couple_pair(&id, &id, HalfInt::from_int(3), &mut cache).unwrap().vectors.is_empty());
    }

    #[test]
    fn pair_of_pairs_count() {
        let p = LVector::homogeneous(HalfInt::ONE, 2);
        let f = family(Kind::Ge, &p).unwrap();
        let c = couple_families(&f, &f, HalfInt::ZERO, &mut CgCache::new()).unwrap();
        assert_eq!(c.vectors.len(), 3);
        let expected: u32 = f
            .iter()
            .flat_map(|a| f.iter().map(move |b| dim_cg(a.l, b.l, HalfInt::ZERO) * (a.dim() * b.dim()) as u32))
            .sum();
        assert_eq!(expected, 3);
    }

    #[test]
    fn kind_mismatch_is_rejected() {
        let one = LVector::homogeneous(HalfInt::ONE, 1);
        let a = ge_basis(&one, HalfInt::ONE).unwrap();
        let b = basis(Kind::Gepi, &one, HalfInt::ONE).unwrap();
        assert!(matches!(couple_pair(&a, &b, HalfInt::ZERO, &mut CgCache::new()), Err(Error::KindMismatch)));
    }

    #[test]
    fn block_assembly_counts() {
        let two = |tag: u32, l: i32| LVector::new(vec![LChannel::new(vec![tag], HalfInt::from_int(l)); 2]).unwrap();
        let v = two(0, 1).concat(&two(1, 1));
        assert_eq!(assemble_gepi(&v, HalfInt::ZERO).unwrap().dim(), 2);
        let v = two(0, 2).concat(&two(1, 3));
        for l in 0..=5 {
            let b = assemble_gepi(&v, HalfInt::from_int(l)).unwrap();
            assert_eq!(num_bigint::BigUint::from(b.dim()), dim_gepi(&v, HalfInt::from_int(l)));
        }
        let single = LVector::homogeneous(h(2), 3);
        assert_eq!(assemble_gepi(&single, h(2)).unwrap(), basis(Kind::Gepi, &single, h(2)).unwrap());
    }

    #[test]
    fn dedup_examples() {
        let v = vec![vec![1.0, 2.0, 0.0], vec![1.0, 2.0, 0.0]];
        assert_eq!(dedup_span(&v, DEDUP_TOL).unwrap().len(), 1);
        let e = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert_eq!(dedup_span(&e, DEDUP_TOL).unwrap().len(), 2);
        let half = LVector::homogeneous(HalfInt::ONE, 2);
        let (spanning, b) = assemble_gepi_split(&half, &half, HalfInt::ZERO).unwrap();
        assert_eq!(spanning.vectors.len(), 2);
        assert_eq!(b.dim(), 1);
    }
}
