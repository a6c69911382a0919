//! Group-agnostic stacked constraint matrices built from Lie-algebra
//! generators, with dense kernel extraction.

use std::collections::{HashMap, VecDeque};

use faer::{Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::index::{all_classes, all_mtuples, interacting_classes, LChannel, LVector, MTuple};
use crate::linalg::{fix_phase, nullspace, orthonormal_span, real_basis};
use crate::sparse::SparseMatrix;
use crate::wigner::drho;
use crate::C64;

/// Default relative rank cut of [`kernel_dense`].
pub const KERNEL_TOL: f64 = 1e-10;

/// Derivative matrices `∂ρ^{l,d}` for one channel.
#[derive(Clone, Debug)]
pub struct GeneratorChannel {
    pub channel: LChannel,
    pub derivatives: Vec<Mat<C64>>,
}

/// Lie-algebra generators of a representation family, per channel.
#[derive(Clone, Debug)]
pub struct GeneratorSet {
    n_dim: usize,
    channels: Vec<GeneratorChannel>,
}

impl GeneratorSet {
    pub fn new(n_dim: usize, channels: Vec<GeneratorChannel>) -> Result<Self> {
        for c in &channels {
            let size = c.channel.ell.multiplicity();
            let shape_err = |reason: String| Error::GeneratorShape { channel: c.channel.to_string(), reason };
            if c.derivatives.len() != n_dim {
                return Err(shape_err(format!("{} matrices, expected {n_dim}", c.derivatives.len())));
            }
            if let Some(m) = c.derivatives.iter().find(|m| m.nrows() != size || m.ncols() != size) {
                return Err(shape_err(format!("{}x{} matrix, expected {size}x{size}", m.nrows(), m.ncols())));
            }
        }
        Ok(GeneratorSet { n_dim, channels })
    }

    /// SO(3)/SU(2) generators (Euler-angle derivatives) for the given `l` values.
    pub fn su2(ells: impl IntoIterator<Item = HalfInt>) -> Self {
        let mut ells: Vec<HalfInt> = ells.into_iter().collect();
        ells.sort();
        ells.dedup();
        let channels = ells
            .into_iter()
            .map(|l| GeneratorChannel {
                channel: LChannel::untagged(l),
                derivatives: (1..=3).map(|d| drho(l, d)).collect(),
            })
            .collect();
        GeneratorSet { n_dim: 3, channels }
    }

    /// SO(3)/SU(2) generators covering `lvec` and the output `L`.
    pub fn su2_for(lvec: &LVector, l: HalfInt) -> Self {
        GeneratorSet::su2(lvec.ells().chain([l]))
    }

    pub fn n_dim(&self) -> usize {
        self.n_dim
    }

    pub fn channels(&self) -> &[GeneratorChannel] {
        &self.channels
    }

    /// Matrices for `channel`, falling back to the untagged channel with the same `l`.
    pub fn get(&self, channel: &LChannel) -> Result<&[Mat<C64>]> {
        self.channels
            .iter()
            .find(|c| &c.channel == channel)
            .or_else(|| {
                self.channels
                    .iter()
                    .find(|c| c.channel.tags.is_empty() && c.channel.ell == channel.ell)
            })
            .map(|c| c.derivatives.as_slice())
            .ok_or_else(|| Error::MissingChannel(channel.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: GeneratorSetDoc = serde_json::from_str(text)?;
        let mut channels = Vec::with_capacity(doc.channels.len());
        for c in doc.channels {
            if c.two_ell_or_dim < 0 {
                return Err(Error::Parse(format!("negative two_ell_or_dim {}", c.two_ell_or_dim)));
            }
            let ell = HalfInt::from_twice(c.two_ell_or_dim);
            let derivatives = c
                .derivatives
                .iter()
                .map(|rows| {
                    let n = rows.len();
                    if rows.iter().any(|r| r.len() != n) {
                        return Err(Error::Parse("derivative matrix is not square".into()));
                    }
                    Ok(Mat::from_fn(n, n, |i, j| C64::new(rows[i][j][0], rows[i][j][1])))
                })
                .collect::<Result<Vec<_>>>()?;
            channels.push(GeneratorChannel { channel: LChannel::new(c.tags, ell), derivatives });
        }
        GeneratorSet::new(doc.n_dim, channels)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = GeneratorSetDoc {
            n_dim: self.n_dim,
            channels: self
                .channels
                .iter()
                .map(|c| ChannelDoc {
                    tags: c.channel.tags.clone(),
                    two_ell_or_dim: c.channel.ell.twice(),
                    derivatives: c
                        .derivatives
                        .iter()
                        .map(|m| {
                            (0..m.nrows())
                                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                                .collect()
                        })
                        .collect(),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }
}

#[derive(Serialize, Deserialize)]
struct GeneratorSetDoc {
    n_dim: usize,
    channels: Vec<ChannelDoc>,
}

#[derive(Serialize, Deserialize)]
struct ChannelDoc {
    tags: Vec<u32>,
    /// `2l` for a representation of size `2l + 1`.
    two_ell_or_dim: i32,
    derivatives: Vec<Vec<Vec<[f64; 2]>>>,
}

/// Stacked matrix `[M_1; ...; M_{n_dim}]` with its column labels `(index, k)`.
/// Rows of block `d` use the same `(index, k)` order as the columns.
#[derive(Clone, Debug)]
pub struct StackedMatrix {
    pub matrix: SparseMatrix<C64>,
    pub columns: Vec<(MTuple, HalfInt)>,
    pub n_dim: usize,
}

impl StackedMatrix {
    /// Rows of generator `d` (0-based) only.
    pub fn block(&self, d: usize) -> SparseMatrix<C64> {
        let n = self.columns.len();
        SparseMatrix::from_rows(n, self.matrix.rows()[d * n..(d + 1) * n].to_vec())
    }

    pub fn column_index(&self) -> HashMap<(&[HalfInt], HalfInt), usize> {
        self.columns.iter().enumerate().map(|(i, (m, k))| ((m.as_slice(), *k), i)).collect()
    }
}

fn nonzero(z: C64) -> bool {
    z.re != 0.0 || z.im != 0.0
}

fn labels(indices: &[MTuple], target: HalfInt) -> Vec<(MTuple, HalfInt)> {
    indices
        .iter()
        .flat_map(|m| target.projections().map(move |k| (m.clone(), k)))
        .collect()
}

/// Stacked GE matrix over rows `(d, m, k)` and columns `(m', k')`.
pub fn build_m_ge(gens: &GeneratorSet, lvec: &LVector, target: &LChannel) -> Result<StackedMatrix> {
    let tuples = all_mtuples(lvec);
    let nk = target.ell.multiplicity();
    let n = lvec.len();
    let sizes: Vec<usize> = lvec.ells().map(HalfInt::multiplicity).collect();
    let mut stride = vec![1usize; n];
    for j in (0..n.saturating_sub(1)).rev() {
        stride[j] = stride[j + 1] * sizes[j + 1];
    }
    let in_mats: Vec<&[Mat<C64>]> = lvec.entries().iter().map(|c| gens.get(c)).collect::<Result<_>>()?;
    let out_mats = gens.get(target)?;
    let mut rows = Vec::with_capacity(gens.n_dim() * tuples.len() * nk);
    for d in 0..gens.n_dim() {
        let rl = &out_mats[d];
        for (mi, m) in tuples.iter().enumerate() {
            let digits: Vec<usize> = m.iter().zip(lvec.ells()).map(|(&x, l)| l.offset(x)).collect();
            let diag_in: C64 = (0..n).map(|j| in_mats[j][d][(digits[j], digits[j])]).sum();
            for k in 0..nk {
                let mut row = Vec::new();
                let diag = diag_in - rl[(k, k)];
                if nonzero(diag) {
                    row.push((mi * nk + k, diag));
                }
                for k2 in (0..nk).filter(|&k2| k2 != k) {
                    let v = -rl[(k, k2)];
                    if nonzero(v) {
                        row.push((mi * nk + k2, v));
                    }
                }
                for j in 0..n {
                    let r = &in_mats[j][d];
                    for o in (0..sizes[j]).filter(|&o| o != digits[j]) {
                        let v = r[(o, digits[j])];
                        if nonzero(v) {
                            let mj = mi - digits[j] * stride[j] + o * stride[j];
                            row.push((mj * nk + k, v));
                        }
                    }
                }
                rows.push(row);
            }
        }
    }
    let ncols = tuples.len() * nk;
    Ok(StackedMatrix {
        matrix: SparseMatrix::from_rows(ncols, rows),
        columns: labels(&tuples, target.ell),
        n_dim: gens.n_dim(),
    })
}

/// Stacked GE-PI matrix over rows `(d, m̄, k)` and columns `(m̄', k')`.
pub fn build_m_gepi(gens: &GeneratorSet, lvec: &LVector, target: &LChannel) -> Result<StackedMatrix> {
    let classes = all_classes(lvec);
    let index: HashMap<&[HalfInt], usize> =
        classes.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    let nk = target.ell.multiplicity();
    let block_mats: Vec<&[Mat<C64>]> = (0..lvec.blocks().len())
        .map(|j| gens.get(lvec.block_channel(j)))
        .collect::<Result<_>>()?;
    let out_mats = gens.get(target)?;
    let moves: Vec<_> = classes.iter().map(|c| interacting_classes(lvec, c)).collect();
    let mut rows = Vec::with_capacity(gens.n_dim() * classes.len() * nk);
    for d in 0..gens.n_dim() {
        let rl = &out_mats[d];
        for (ci, c) in classes.iter().enumerate() {
            let mut diag_in = C64::new(0.0, 0.0);
            for (j, &(s, n)) in lvec.blocks().iter().enumerate() {
                let l = lvec.ell(s);
                for &m in &c[s..s + n] {
                    diag_in += block_mats[j][d][(l.offset(m), l.offset(m))];
                }
            }
            for k in 0..nk {
                let mut row = Vec::new();
                let diag = diag_in - rl[(k, k)];
                if nonzero(diag) {
                    row.push((ci * nk + k, diag));
                }
                for k2 in (0..nk).filter(|&k2| k2 != k) {
                    let v = -rl[(k, k2)];
                    if nonzero(v) {
                        row.push((ci * nk + k2, v));
                    }
                }
                for mv in &moves[ci] {
                    let l = lvec.ell(lvec.blocks()[mv.block].0);
                    let v = block_mats[mv.block][d][(l.offset(mv.q), l.offset(mv.p))] * mv.multiplier as f64;
                    if nonzero(v) {
                        row.push((index[mv.target.as_slice()] * nk + k, v));
                    }
                }
                rows.push(row);
            }
        }
    }
    let ncols = classes.len() * nk;
    Ok(StackedMatrix {
        matrix: SparseMatrix::from_rows(ncols, rows),
        columns: labels(&classes, target.ell),
        n_dim: gens.n_dim(),
    })
}

/// Orthonormal kernel basis of a dense-solved matrix.
#[derive(Clone, Debug)]
pub struct DenseKernelBasis {
    /// Columns are the kernel vectors.
    pub vectors: Mat<C64>,
    pub tol: f64,
    /// True if the basis was rotated to real coefficients.
    pub real: bool,
}

impl DenseKernelBasis {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }
}

/// Columns that must vanish on the kernel: repeatedly, a row with a single
/// remaining nonzero forces that column to zero.
fn forced_zero_columns(m: &SparseMatrix<C64>, drop: f64) -> Vec<bool> {
    let t = m.transpose();
    let mut dead = vec![false; m.ncols()];
    let mut count: Vec<usize> = m
        .rows()
        .iter()
        .map(|r| r.iter().filter(|e| e.1.norm() > drop).count())
        .collect();
    let mut queue: VecDeque<usize> = (0..m.nrows()).filter(|&i| count[i] == 1).collect();
    while let Some(i) = queue.pop_front() {
        if count[i] != 1 {
            continue;
        }
        let Some(&(c, _)) = m.row(i).iter().find(|e| !dead[e.0] && e.1.norm() > drop) else {
            continue;
        };
        dead[c] = true;
        for &(r, v) in t.row(c) {
            if v.norm() > drop {
                count[r] -= 1;
                if count[r] == 1 {
                    queue.push_back(r);
                }
            }
        }
    }
    dead
}

/// Orthonormal nullspace via singular value decomposition, rank cut at
/// `σ > tol·σ_max`; rotated to a real basis when one exists.
pub fn kernel_dense(m: &SparseMatrix<C64>, tol: f64) -> Result<DenseKernelBasis> {
    let mut scale: f64 = 0.0;
    for r in m.rows() {
        for &(_, v) in r {
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite);
            }
            scale = scale.max(v.norm());
        }
    }
    let n = m.ncols();
    let dead = forced_zero_columns(m, tol * scale);
    let alive: Vec<usize> = (0..n).filter(|&c| !dead[c]).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &c) in alive.iter().enumerate() {
        pos[c] = i;
    }
    let kept_rows: Vec<&Vec<(usize, C64)>> = m
        .rows()
        .iter()
        .filter(|r| r.iter().any(|e| !dead[e.0] && nonzero(e.1)))
        .collect();
    let mut reduced = Mat::<C64>::zeros(kept_rows.len(), alive.len());
    for (i, r) in kept_rows.iter().enumerate() {
        for &(c, v) in r.iter() {
            if !dead[c] {
                reduced[(i, pos[c])] = v;
            }
        }
    }
    let k = nullspace(reduced.as_ref(), tol)?;
    let full = Mat::from_fn(n, k.ncols(), |i, j| if dead[i] { C64::new(0.0, 0.0) } else { k[(pos[i], j)] });
    finish_basis(full, tol)
}

fn finish_basis(full: Mat<C64>, tol: f64) -> Result<DenseKernelBasis> {
    let n = full.nrows();
    if let Some(r) = real_basis(full.as_ref(), 1e-9)? {
        let vectors = Mat::from_fn(n, r.ncols(), |i, j| C64::new(r[(i, j)], 0.0));
        return Ok(DenseKernelBasis { vectors, tol, real: true });
    }
    let mut vectors = full;
    for j in 0..vectors.ncols() {
        let mut col: Vec<C64> = (0..n).map(|i| vectors[(i, j)]).collect();
        fix_phase(&mut col);
        for i in 0..n {
            vectors[(i, j)] = col[i];
        }
    }
    Ok(DenseKernelBasis { vectors, tol, real: false })
}

fn eigenpairs(a: MatRef<'_, C64>, which: usize) -> Result<(Vec<C64>, Mat<C64>)> {
    let evd = a.eigen().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = evd.S().column_vector();
    let vals: Vec<C64> = (0..s.nrows()).map(|i| s[i]).collect();
    let vecs = evd.U().to_owned();
    let sv = vecs.singular_values().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let (hi, lo) = (sv[0], *sv.last().unwrap());
    if lo.is_nan() || lo <= 1e-10 * hi {
        return Err(Error::Defective(which));
    }
    Ok((vals, vecs))
}

/// Kernel of the single GE block `M_d` (0-based `d`), spanned by tensor
/// products of eigenvectors of `(∂ρ^{l_j,d})ᵀ` and `∂ρ^{L,d}` whose
/// eigenvalues cancel.
pub fn kernel_md_eigen(gens: &GeneratorSet, lvec: &LVector, target: &LChannel, d: usize) -> Result<Mat<C64>> {
    let mut factors = Vec::with_capacity(lvec.len() + 1);
    for (j, c) in lvec.entries().iter().enumerate() {
        let a = gens.get(c)?[d].transpose().to_owned();
        factors.push(eigenpairs(a.as_ref(), j)?);
    }
    let (out_vals, out_vecs) = eigenpairs(gens.get(target)?[d].as_ref(), lvec.len())?;
    let scale = factors
        .iter()
        .flat_map(|f| f.0.iter())
        .chain(out_vals.iter())
        .map(|z| z.norm())
        .fold(1.0, f64::max);
    let sizes: Vec<usize> = factors.iter().map(|f| f.0.len()).collect();
    let total: usize = sizes.iter().product::<usize>() * out_vals.len();
    let mut selected: Vec<Vec<C64>> = Vec::new();
    let mut digits = vec![0usize; sizes.len()];
    loop {
        let sum: C64 = digits.iter().zip(&factors).map(|(&i, f)| f.0[i]).sum();
        for (ko, &mu) in out_vals.iter().enumerate() {
            if (sum - mu).norm() <= 1e-9 * scale {
                // entry (m, k) = Π_j u_j[m_j] · v[k], m in mixed radix, k fastest
                let mut v = vec![C64::new(1.0, 0.0)];
                for (f, &i) in factors.iter().zip(&digits) {
                    let u = &f.1;
                    v = v.iter().flat_map(|&x| (0..u.nrows()).map(move |r| x * u[(r, i)])).collect();
                }
                let w = &out_vecs;
                v = v.iter().flat_map(|&x| (0..w.nrows()).map(move |r| x * w[(r, ko)])).collect();
                selected.push(v);
            }
        }
        // advance the mixed-radix counter
        let mut p = sizes.len();
        loop {
            if p == 0 {
                let cols = Mat::from_fn(total, selected.len(), |i, j| selected[j][i]);
                return orthonormal_span(cols.as_ref(), KERNEL_TOL);
            }
            p -= 1;
            digits[p] += 1;
            if digits[p] < sizes[p] {
                break;
            }
            digits[p] = 0;
        }
    }
}
