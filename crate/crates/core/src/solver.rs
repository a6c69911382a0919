//! The fast SO(3)/SU(2) path: the supertriangular block matrix `M^up`, its
//! ladder blocks, and kernel extraction by final-block elimination plus
//! block back-substitution.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::index::{enum_classes_k, enum_mtuples_k, LVector, MTuple};
use crate::linalg::fix_sign_real;
use crate::sparse::{echelon, SparseMatrix};

const REFINE_MAX_ITER: usize = 500;
const REFINE_TOL: f64 = 1e-14;

/// Pivot drop tolerance of the final-block elimination, relative to the largest entry.
pub const ELIMINATION_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    So3,
    Su2,
    O3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Ge,
    Gepi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    #[serde(rename = "+")]
    Even,
    #[serde(rename = "-")]
    Odd,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::So3 => "so3",
            Group::Su2 => "su2",
            Group::O3 => "o3",
        })
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Ge => "ge",
            Kind::Gepi => "gepi",
        })
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "+",
            Parity::Odd => "-",
        })
    }
}

/// Index set `M_{l,K}` (GE) or `M̄_{l,K}` (GE-PI).
pub fn index_set(kind: Kind, lvec: &LVector, k: HalfInt) -> Vec<MTuple> {
    match kind {
        Kind::Ge => enum_mtuples_k(lvec, k),
        Kind::Gepi => enum_classes_k(lvec, k),
    }
}

fn lookup(cols: &[MTuple]) -> HashMap<&[HalfInt], usize> {
    cols.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect()
}

/// `½√((2l - 2m + 2)(2l + 2m))` in doubled units: `√((l-m+1)(l+m))`.
fn raise_coeff(tl: i32, tm: i32) -> f64 {
    0.5 * (((tl - tm + 2) * (tl + tm)) as f64).sqrt()
}

/// `√((l+m+1)(l-m))`.
fn lower_coeff(tl: i32, tm: i32) -> f64 {
    0.5 * (((tl + tm + 2) * (tl - tm)) as f64).sqrt()
}

/// Replaces one occurrence of `p` in a sorted block by a neighbouring value
/// `q = p ± 1`, choosing the occurrence that keeps the block sorted.
fn shift_in_sorted_block(buf: &mut [HalfInt], p: HalfInt, q: HalfInt) {
    if q > p {
        // the last occurrence of p becomes q
        let pos = buf.iter().rposition(|&m| m == p).expect("p present");
        buf[pos] = q;
    } else {
        let pos = buf.iter().position(|&m| m == p).expect("p present");
        buf[pos] = q;
    }
}

/// Raising block `B⁺_K`: rows `M_{K+1}`, columns `M_K`.
pub fn ladder_plus(kind: Kind, lvec: &LVector, rows: &[MTuple], cols: &[MTuple]) -> SparseMatrix<f64> {
    ladder(kind, lvec, rows, cols, true)
}

/// Lowering block `B⁻_K`: rows `M_{K-1}`, columns `M_K`.
pub fn ladder_minus(kind: Kind, lvec: &LVector, rows: &[MTuple], cols: &[MTuple]) -> SparseMatrix<f64> {
    ladder(kind, lvec, rows, cols, false)
}

fn ladder(kind: Kind, lvec: &LVector, rows: &[MTuple], cols: &[MTuple], plus: bool) -> SparseMatrix<f64> {
    let index = lookup(cols);
    let step = if plus { -2 } else { 2 };
    let mut out = Vec::with_capacity(rows.len());
    let mut buf: MTuple = Vec::with_capacity(lvec.len());
    for m in rows {
        let mut row = Vec::new();
        match kind {
            Kind::Ge => {
                for (j, l) in lvec.ells().enumerate() {
                    let (tl, tm) = (l.twice(), m[j].twice());
                    let target = tm + step;
                    if target.abs() > tl {
                        continue;
                    }
                    buf.clone_from(m);
                    buf[j] = HalfInt::from_twice(target);
                    if let Some(&c) = index.get(buf.as_slice()) {
                        let v = if plus { raise_coeff(tl, tm) } else { -lower_coeff(tl, tm) };
                        row.push((c, v));
                    }
                }
            }
            Kind::Gepi => {
                for &(s, n) in lvec.blocks() {
                    let tl = lvec.ell(s).twice();
                    let block = &m[s..s + n];
                    let mut i = 0;
                    while i < n {
                        let p = block[i];
                        let mut run = 1;
                        while i + run < n && block[i + run] == p {
                            run += 1;
                        }
                        i += run;
                        let tp = p.twice();
                        let q = HalfInt::from_twice(tp + step);
                        if q.twice().abs() > tl {
                            continue;
                        }
                        // multiplicity of the moved-to value in the target class
                        let lambda = block.iter().filter(|&&x| x == q).count() + 1;
                        buf.clone_from(m);
                        shift_in_sorted_block(&mut buf[s..s + n], p, q);
                        if let Some(&c) = index.get(buf.as_slice()) {
                            let v = if plus { raise_coeff(tl, tp) } else { -lower_coeff(tl, tp) };
                            row.push((c, lambda as f64 * v));
                        }
                    }
                }
            }
        }
        out.push(row);
    }
    SparseMatrix::from_rows(cols.len(), out)
}

/// Diagonal of the GE-PI ladder weight `W_K`: `∏_j ∏_p λ_{m^{(j)},p}!` per class.
pub fn ladder_weights(lvec: &LVector, classes: &[MTuple]) -> Vec<f64> {
    classes
        .iter()
        .map(|m| {
            let mut w = 1.0;
            for &(s, n) in lvec.blocks() {
                let block = &m[s..s + n];
                let mut i = 0;
                while i < n {
                    let mut run = 1;
                    while i + run < n && block[i + run] == block[i] {
                        run += 1;
                    }
                    w *= (1..=run).map(|x| x as f64).product::<f64>();
                    i += run;
                }
            }
            w
        })
        .collect()
}

/// Supertriangular block matrix `M^up` (the constant factor ½ removed).
#[derive(Clone, Debug)]
pub struct BlockMatrixUp {
    pub kind: Kind,
    pub lvec: LVector,
    pub l: HalfInt,
    /// Column index sets for `K = -L..=L`.
    pub blocks: Vec<Vec<MTuple>>,
    /// Index set for `K = L + 1` (rows of the final block).
    pub top: Vec<MTuple>,
    /// `a_K = √((L+K+1)(L-K))` for `K = -L..L-1`.
    pub diag: Vec<f64>,
    /// `B_K` for `K = -L..L-1`: rows `block K`, columns `block K+1`.
    pub upper: Vec<SparseMatrix<f64>>,
    /// `B⁺_L`: rows `top`, columns `block L`.
    pub last: SparseMatrix<f64>,
}

impl BlockMatrixUp {
    /// True when `L + Σl` is not an integer: every index set is empty.
    pub fn parity_mismatch(&self) -> bool {
        !self.lvec.parity_allows(self.l)
    }

    pub fn k_values(&self) -> impl Iterator<Item = HalfInt> {
        self.l.projections()
    }

    pub fn ncols(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    pub fn nrows(&self) -> usize {
        let n = self.blocks.len();
        self.blocks[..n - 1].iter().map(Vec::len).sum::<usize>() + self.top.len()
    }

    /// Expected kernel dimension `|M_{l,L}| - |M_{l,L+1}|`.
    pub fn expected_dim(&self) -> usize {
        self.blocks.last().map_or(0, Vec::len).saturating_sub(self.top.len())
    }

    /// Column offsets of the blocks, with the total as last entry.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = vec![0];
        for b in &self.blocks {
            off.push(off.last().unwrap() + b.len());
        }
        off
    }

    /// Concatenated column index set.
    pub fn support(&self) -> Vec<MTuple> {
        self.blocks.iter().flatten().cloned().collect()
    }

    /// Assembles the full sparse matrix.
    pub fn to_sparse(&self) -> SparseMatrix<f64> {
        let off = self.offsets();
        let mut rows = Vec::with_capacity(self.nrows());
        for (b, bk) in self.upper.iter().enumerate() {
            for i in 0..bk.nrows() {
                let mut r = vec![(off[b] + i, self.diag[b])];
                r.extend(bk.row(i).iter().map(|&(j, v)| (off[b + 1] + j, v)));
                rows.push(r);
            }
        }
        let last = self.blocks.len() - 1;
        for i in 0..self.last.nrows() {
            rows.push(self.last.row(i).iter().map(|&(j, v)| (off[last] + j, v)).collect());
        }
        SparseMatrix::from_rows(self.ncols(), rows)
    }
}

/// Index sets `M_K` for `K = -L..L` and `M_{L+1}`.
pub fn mup_index_sets(kind: Kind, lvec: &LVector, l: HalfInt) -> (Vec<Vec<MTuple>>, Vec<MTuple>) {
    assert!(l.twice() >= 0, "L must be non-negative");
    let blocks = l.projections().map(|k| index_set(kind, lvec, k)).collect();
    (blocks, index_set(kind, lvec, l + HalfInt::ONE))
}

fn build_mup(kind: Kind, lvec: &LVector, l: HalfInt) -> BlockMatrixUp {
    let (blocks, top) = mup_index_sets(kind, lvec, l);
    build_mup_from_sets(kind, lvec, l, blocks, top)
}

/// Assembles `M^up` from precomputed [`mup_index_sets`].
pub fn build_mup_from_sets(kind: Kind, lvec: &LVector, l: HalfInt, blocks: Vec<Vec<MTuple>>, top: Vec<MTuple>) -> BlockMatrixUp {
    let lf = l.to_f64();
    let mut diag = Vec::new();
    let mut upper = Vec::new();
    for (b, k) in l.projections().enumerate().take(blocks.len() - 1) {
        let kf = k.to_f64();
        diag.push(((lf + kf + 1.0) * (lf - kf)).sqrt());
        // B_K coincides with the lowering block of K+1
        upper.push(ladder_minus(kind, lvec, &blocks[b], &blocks[b + 1]));
    }
    let last = ladder_plus(kind, lvec, &top, blocks.last().unwrap());
    BlockMatrixUp { kind, lvec: lvec.clone(), l, blocks, top, diag, upper, last }
}

pub fn build_mup_ge(lvec: &LVector, l: HalfInt) -> BlockMatrixUp {
    build_mup(Kind::Ge, lvec, l)
}

pub fn build_mup_gepi(lvec: &LVector, l: HalfInt) -> BlockMatrixUp {
    build_mup(Kind::Gepi, lvec, l)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram–Schmidt with one re-orthogonalization pass; drops vectors
/// whose norm collapses below `drop` relative to their input norm.
pub fn orthonormalize(vectors: Vec<Vec<f64>>, drop: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        let norm0 = dot(&v, &v).sqrt();
        if norm0 == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let c = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        if norm <= drop * norm0 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        out.push(v);
    }
    out
}

/// `Bᵀy` for a sparse `B`.
fn mul_transpose(b: &SparseMatrix<f64>, y: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; b.ncols()];
    for (row, &yi) in b.rows().iter().zip(y) {
        for &(j, v) in row {
            out[j] += v * yi;
        }
    }
    out
}

/// Removes the row-space component of `x`: solves `B Bᵀ y = B x` by conjugate
/// gradients and subtracts `Bᵀy`.
fn project_null(b: &SparseMatrix<f64>, x: &mut [f64]) {
    let rhs = b.mul_vec(x);
    let r0 = dot(&rhs, &rhs);
    if r0 == 0.0 {
        return;
    }
    let mut y = vec![0.0; rhs.len()];
    let mut r = rhs;
    let mut p = r.clone();
    let mut rr = r0;
    for _ in 0..REFINE_MAX_ITER {
        let bp = b.mul_vec(&mul_transpose(b, &p));
        let pbp = dot(&p, &bp);
        if pbp <= 0.0 {
            break;
        }
        let alpha = rr / pbp;
        y.iter_mut().zip(&p).for_each(|(a, b)| *a += alpha * b);
        r.iter_mut().zip(&bp).for_each(|(a, b)| *a -= alpha * b);
        let next = dot(&r, &r);
        if next <= REFINE_TOL * REFINE_TOL * r0 {
            break;
        }
        p.iter_mut().zip(&r).for_each(|(a, b)| *a = b + (next / rr) * *a);
        rr = next;
    }
    x.iter_mut().zip(mul_transpose(b, &y)).for_each(|(a, b)| *a -= b);
}

/// Kernel of `M^up`: nullspace of the final block, block back-substitution,
/// then orthonormalization with sign fixing. Vectors are over the
/// concatenated column blocks.
pub fn solve_kernel(m: &BlockMatrixUp) -> Result<Vec<Vec<f64>>> {
    let expected = m.expected_dim();
    let n_last = m.blocks.last().map_or(0, Vec::len);
    if n_last == 0 {
        return Ok(Vec::new());
    }
    let ech = echelon(&m.last, ELIMINATION_TOL);
    let mut heads = orthonormalize(ech.nullspace(), 1e-12);
    heads.iter_mut().for_each(|h| project_null(&m.last, h));
    let heads = orthonormalize(heads, 1e-12);
    if heads.len() != expected {
        return Err(Error::KernelDimension { expected, found: heads.len() });
    }
    let off = m.offsets();
    let total = *off.last().unwrap();
    let nb = m.blocks.len();
    let mut vectors = Vec::with_capacity(heads.len());
    for head in heads {
        let mut c = vec![0.0; total];
        c[off[nb - 1]..].copy_from_slice(&head);
        for b in (0..nb - 1).rev() {
            let a = m.diag[b];
            debug_assert!(a > 0.0);
            let (lo, hi) = c.split_at_mut(off[b + 1]);
            let next = &hi[..off[b + 2] - off[b + 1]];
            let cur = &mut lo[off[b]..];
            for (i, row) in m.upper[b].rows().iter().enumerate() {
                let s: f64 = row.iter().map(|&(j, v)| v * next[j]).sum();
                cur[i] = -s / a;
            }
        }
        vectors.push(c);
    }
    let mut vectors = orthonormalize(vectors, 1e-12);
    if vectors.len() != expected {
        return Err(Error::KernelDimension { expected, found: vectors.len() });
    }
    vectors.iter_mut().for_each(|v| fix_sign_real(v));
    Ok(vectors)
}

/// Coupling coefficients over the restricted index set `{(m, K = Σm) : |K| ≤ L}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingBasis {
    pub group: Group,
    pub kind: Kind,
    pub lvec: LVector,
    pub l: HalfInt,
    pub parity: Option<Parity>,
    /// Index tuples (m-tuples or class representatives), ordered by `Σm`
    /// ascending and lexicographically within each sum.
    pub support: Vec<MTuple>,
    pub vectors: Vec<Vec<f64>>,
}

impl CouplingBasis {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Canonical support for `(kind, lvec, L)`.
    pub fn canonical_support(kind: Kind, lvec: &LVector, l: HalfInt) -> Vec<MTuple> {
        l.projections().flat_map(|k| index_set(kind, lvec, k)).collect()
    }

    pub fn support_index(&self) -> HashMap<&[HalfInt], usize> {
        lookup(&self.support)
    }

    pub fn coefficient(&self, vector: usize, ms: &[HalfInt]) -> f64 {
        self.support
            .iter()
            .position(|s| s.as_slice() == ms)
            .map_or(0.0, |i| self.vectors[vector][i])
    }
}

fn default_group(lvec: &LVector, l: HalfInt) -> Group {
    if l.is_integer() && lvec.ells().all(HalfInt::is_integer) {
        Group::So3
    } else {
        Group::Su2
    }
}

/// Builds `M^up` for `kind` and solves its kernel.
pub fn basis(kind: Kind, lvec: &LVector, l: HalfInt) -> Result<CouplingBasis> {
    let m = build_mup(kind, lvec, l);
    let vectors = solve_kernel(&m)?;
    Ok(CouplingBasis {
        group: default_group(lvec, l),
        kind,
        lvec: lvec.clone(),
        l,
        parity: None,
        support: m.support(),
        vectors,
    })
}

pub fn ge_basis(lvec: &LVector, l: HalfInt) -> Result<CouplingBasis> {
    basis(Kind::Ge, lvec, l)
}

pub fn gepi_basis(lvec: &LVector, l: HalfInt) -> Result<CouplingBasis> {
    basis(Kind::Gepi, lvec, l)
}

/// O(3) basis: the SO(3) basis when `parity = (-1)^{Σl}`, empty otherwise.
pub fn o3_basis(kind: Kind, lvec: &LVector, l: HalfInt, parity: Parity) -> Result<CouplingBasis> {
    if let Some(bad) = lvec.ells().chain([l]).find(|x| !x.is_integer()) {
        return Err(Error::UnsupportedGroup(bad));
    }
    let natural = if (lvec.sum_ell().twice() / 2) % 2 == 0 { Parity::Even } else { Parity::Odd };
    let mut b = if natural == parity {
        basis(kind, lvec, l)?
    } else {
        CouplingBasis {
            group: Group::O3,
            kind,
            lvec: lvec.clone(),
            l,
            parity: None,
            support: CouplingBasis::canonical_support(kind, lvec, l),
            vectors: Vec::new(),
        }
    };
    b.group = Group::O3;
    b.parity = Some(parity);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i32]) -> Vec<HalfInt> {
        v.iter().map(|&x| HalfInt::from_int(x)).collect()
    }

    #[test]
    fn matrix_sizes() {
        let v = LVector::homogeneous(HalfInt::ONE, 2);
        let m = build_mup_ge(&v, HalfInt::from_int(2));
        assert_eq!(m.ncols(), 9);
        assert_eq!(m.nrows(), 8);
        let m = build_mup_ge(&v, HalfInt::from_int(3));
        assert_eq!(m.ncols(), 9);
        assert_eq!(m.nrows(), 9);
        assert!(solve_kernel(&m).unwrap().is_empty());
    }

    #[test]
    fn singlet_of_two_spin_one() {
        let v = LVector::homogeneous(HalfInt::ONE, 2);
        let b = ge_basis(&v, HalfInt::ZERO).unwrap();
        assert_eq!(b.support, vec![ints(&[-1, 1]), ints(&[0, 0]), ints(&[1, -1])]);
        assert_eq!(b.dim(), 1);
        let s = 1.0 / 3f64.sqrt();
        for (x, e) in b.vectors[0].iter().zip([s, -s, s]) {
            assert!((x - e).abs() < 1e-14);
        }
        let p = gepi_basis(&v, HalfInt::ZERO).unwrap();
        let r = p.vectors[0][0] / p.vectors[0][1];
        assert!((r + 2.0).abs() < 1e-14);
    }

    #[test]
    fn spin_half_singlet() {
        let v = LVector::homogeneous(HalfInt::HALF, 2);
        let b = ge_basis(&v, HalfInt::ZERO).unwrap();
        assert_eq!(b.group, Group::Su2);
        assert_eq!(b.dim(), 1);
        assert!((b.vectors[0][0] + b.vectors[0][1]).abs() < 1e-14);
    }

    #[test]
    fn parity_mismatch_is_empty() {
        let v = LVector::homogeneous(HalfInt::ONE, 3);
        let m = build_mup_ge(&v, HalfInt::HALF);
        assert!(m.parity_mismatch());
        assert_eq!(m.ncols(), 0);
        assert!(ge_basis(&v, HalfInt::HALF).unwrap().is_empty());
    }

    #[test]
    fn o3_parity_selection() {
        let v = LVector::homogeneous(HalfInt::ONE, 3);
        let odd = o3_basis(Kind::Gepi, &v, HalfInt::ONE, Parity::Odd).unwrap();
        assert_eq!(odd.dim(), 1);
        let even = o3_basis(Kind::Gepi, &v, HalfInt::ONE, Parity::Even).unwrap();
        assert!(even.is_empty());
        let half = LVector::homogeneous(HalfInt::HALF, 2);
        assert!(matches!(
            o3_basis(Kind::Ge, &half, HalfInt::ZERO, Parity::Even),
            Err(Error::UnsupportedGroup(_))
        ));
    }

    #[test]
    fn ladder_weights_are_factorial_products() {
        let v = LVector::homogeneous(HalfInt::ONE, 5);
        let w = ladder_weights(&v, &[ints(&[-1, -1, 0, 1, 1]), ints(&[0; 5])]);
        assert_eq!(w, vec![4.0, 120.0]);
    }
}
