//! Independent checks of generated bases: group equivariance, permutation
//! invariance of the spatial functions, ladder identities, direct-sum
//! accounting and comparison against the generic engine.

use std::collections::HashMap;

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatMut, MatRef, Par};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dims::dim;
use crate::error::{Error, Result};
use crate::generic::{build_m_ge, build_m_gepi, kernel_dense, GeneratorSet, KERNEL_TOL};
use crate::halfint::HalfInt;
use crate::index::{all_mtuples, class_of, class_size, LChannel, LVector};
use crate::linalg::max_principal_angle;
use crate::solver::{index_set, ladder_minus, ladder_plus, ladder_weights, CouplingBasis, Kind};
use crate::sparse::SparseMatrix;
use crate::wigner::{rotation_matrix, spherical_harmonics, wigner_d};
use crate::C64;

/// Largest one-particle tensor space `∏(2l_i + 1)` for the dense checks.
pub const MAX_DENSE_STATES: usize = 1000;
/// Largest stacked column count for [`cross_check_generic`].
pub const MAX_GENERIC_COLUMNS: usize = 5000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<Check>,
    pub seed: u64,
}

impl VerificationReport {
    pub fn new(seed: u64) -> Self {
        VerificationReport { checks: Vec::new(), seed }
    }

    /// Records `value ≤ threshold`.
    pub fn push(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        let pass = value <= threshold;
        self.checks.push(Check { name: name.into(), value, threshold, pass });
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Euler angles sampled uniformly in `[0, 2π) × [0, π] × [0, 2π)`.
pub fn random_angles(rng: &mut impl Rng) -> (f64, f64, f64) {
    use std::f64::consts::PI;
    (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..=PI), rng.gen_range(0.0..2.0 * PI))
}

fn tensor_size(lvec: &LVector) -> Result<usize> {
    let found = lvec.ells().map(HalfInt::multiplicity).product();
    if found > MAX_DENSE_STATES {
        return Err(Error::TooLarge { limit: MAX_DENSE_STATES, found });
    }
    Ok(found)
}

fn tuple_index(lvec: &LVector, m: &[HalfInt]) -> usize {
    m.iter().zip(lvec.ells()).fold(0, |acc, (&x, l)| acc * l.multiplicity() + l.offset(x))
}

/// `y[m, c] = Σ_{m'} ∏_j mats_j[m'_j, m_j] · x[m', c]` for `x` stored row-major
/// as `[tuple][column]` with `width` columns.
fn apply_slots(x: &[C64], sizes: &[usize], width: usize, mats: &[Mat<C64>]) -> Vec<C64> {
    let mut cur = x.to_vec();
    let mut next = vec![C64::new(0.0, 0.0); cur.len()];
    for (j, (&a, mat)) in sizes.iter().zip(mats).enumerate() {
        let inner: usize = sizes[j + 1..].iter().product::<usize>() * width;
        for (src, dst) in cur.chunks_exact(a * inner).zip(next.chunks_exact_mut(a * inner)) {
            let rhs = MatRef::from_row_major_slice(src, a, inner);
            let out = MatMut::from_row_major_slice_mut(dst, a, inner);
            matmul(out, Accum::Replace, mat.transpose(), rhs, C64::new(1.0, 0.0), Par::Seq);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    cur
}

/// Full coefficient array `[tuple][k]` for one vector, expanded from the
/// restricted support (`k = Σm`). GE-PI class coefficients are spread over
/// their classes as `c_{[m]} / |[m]|`.
fn expand(basis: &CouplingBasis, v: &[f64], n: usize) -> Vec<C64> {
    let nk = basis.l.multiplicity();
    let mut out = vec![C64::new(0.0, 0.0); n * nk];
    match basis.kind {
        Kind::Ge => {
            for (m, &c) in basis.support.iter().zip(v) {
                let k: HalfInt = m.iter().copied().sum();
                out[tuple_index(&basis.lvec, m) * nk + basis.l.offset(k)] = C64::new(c, 0.0);
            }
        }
        Kind::Gepi => {
            let index = basis.support_index();
            for m in all_mtuples(&basis.lvec) {
                let class = class_of(&basis.lvec, &m);
                if let Some(&i) = index.get(class.as_slice()) {
                    let size: f64 = class_size(&basis.lvec, &class).to_string().parse().unwrap_or(f64::INFINITY);
                    let k: HalfInt = m.iter().copied().sum();
                    out[tuple_index(&basis.lvec, &m) * nk + basis.l.offset(k)] = C64::new(v[i] / size, 0.0);
                }
            }
        }
    }
    out
}

/// Maximum over samples and vectors of the equivariance residual
/// `|Σ_{k'} c_{m,k'} D^L_{k,k'} − Σ_{m'} c_{m',k} ∏ D^{l_i}_{m'_i,m_i}|`
/// (GE), or its class-summed form (GE-PI).
pub fn check_equivariance(basis: &CouplingBasis, n_samples: usize, seed: u64) -> Result<f64> {
    let lvec = &basis.lvec;
    let n = tensor_size(lvec)?;
    let nk = basis.l.multiplicity();
    let sizes: Vec<usize> = lvec.ells().map(HalfInt::multiplicity).collect();
    let tuples = all_mtuples(lvec);
    let index = basis.support_index();
    // GE-PI: position of each tuple's class in the support (if present)
    // GE-PI: classes outside the support are numbered after it
    let mut outside: HashMap<Vec<HalfInt>, usize> = HashMap::new();
    let class_pos: Vec<usize> = match basis.kind {
        Kind::Ge => Vec::new(),
        Kind::Gepi => tuples
            .iter()
            .map(|m| {
                let class = class_of(lvec, m);
                index.get(class.as_slice()).copied().unwrap_or_else(|| {
                    let next = basis.support.len() + outside.len();
                    *outside.entry(class).or_insert(next)
                })
            })
            .collect(),
    };
    let n_classes = basis.support.len() + outside.len();
    let ge_offsets: Vec<Option<usize>> = tuples
        .iter()
        .map(|m| {
            let k: HalfInt = m.iter().copied().sum();
            basis.l.admits(k).then(|| basis.l.offset(k))
        })
        .collect();
    if basis.is_empty() {
        return Ok(0.0);
    }
    let expanded: Vec<Vec<C64>> = basis.vectors.iter().map(|v| expand(basis, v, n)).collect();
    let width = nk * expanded.len();
    // all vectors side by side: [tuple][vector][k]
    let mut stacked = vec![C64::new(0.0, 0.0); n * width];
    for (i, x) in expanded.iter().enumerate() {
        for t in 0..n {
            stacked[t * width + i * nk..t * width + (i + 1) * nk].copy_from_slice(&x[t * nk..(t + 1) * nk]);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..n_samples {
        let (a, b, g) = random_angles(&mut rng);
        let dl = wigner_d(basis.l, a, b, g)?;
        let mats: Vec<Mat<C64>> = lvec.ells().map(|l| wigner_d(l, a, b, g)).collect::<Result<_>>()?;
        let all = apply_slots(&stacked, &sizes, width, &mats);
        for (i, (v, x)) in basis.vectors.iter().zip(&expanded).enumerate() {
            let y: Vec<C64> = (0..n).flat_map(|t| all[t * width + i * nk..t * width + (i + 1) * nk].iter().copied()).collect();
            match basis.kind {
                Kind::Ge => {
                    // each tuple carries a single projection k' = Σm
                    for (t, &k2) in ge_offsets.iter().enumerate() {
                        let c = k2.map_or(C64::new(0.0, 0.0), |k2| x[t * nk + k2]);
                        for k in 0..nk {
                            let l = k2.map_or(C64::new(0.0, 0.0), |k2| c * dl[(k, k2)]);
                            worst = worst.max((l - y[t * nk + k]).norm());
                        }
                    }
                }
                Kind::Gepi => {
                    let mut rhs = vec![C64::new(0.0, 0.0); n_classes * nk];
                    for (t, &p) in class_pos.iter().enumerate() {
                        for k in 0..nk {
                            rhs[p * nk + k] += y[t * nk + k];
                        }
                    }
                    // rows of classes outside the support must vanish too
                    worst = rhs[basis.support.len() * nk..].iter().fold(worst, |w, z| w.max(z.norm()));
                    for (p, m) in basis.support.iter().enumerate() {
                        let km: HalfInt = m.iter().copied().sum();
                        let ko = basis.l.offset(km);
                        for k in 0..nk {
                            let l = dl[(k, ko)] * v[p];
                            worst = worst.max((l - rhs[p * nk + k]).norm());
                        }
                    }
                }
            }
        }
    }
    Ok(worst)
}

pub fn check_equivariance_ge(basis: &CouplingBasis, n_samples: usize, seed: u64) -> Result<f64> {
    if basis.kind != Kind::Ge {
        return Err(Error::KindMismatch);
    }
    check_equivariance(basis, n_samples, seed)
}

pub fn check_equivariance_gepi(basis: &CouplingBasis, n_samples: usize, seed: u64) -> Result<f64> {
    if basis.kind != Kind::Gepi {
        return Err(Error::KindMismatch);
    }
    check_equivariance(basis, n_samples, seed)
}

fn random_unit_vector(rng: &mut impl Rng) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
    let s = (1.0 - z * z).sqrt();
    [s * phi.cos(), s * phi.sin(), z]
}

fn rotate(q: &[[f64; 3]; 3], r: [f64; 3]) -> [f64; 3] {
    let mut o = [0.0; 3];
    for (i, row) in q.iter().enumerate() {
        o[i] = (0..3).map(|k| row[k] * r[k]).sum();
    }
    o
}

/// Harmonics `Y^{l_i}(x_p)` for every slot `i` and point `p`.
fn harmonics(lvec: &LVector, points: &[[f64; 3]]) -> Result<Vec<Vec<Vec<C64>>>> {
    lvec.ells()
        .map(|l| points.iter().map(|&x| spherical_harmonics(l, x)).collect())
        .collect()
}

/// Density form `F_k = Σ_{m̄} c_{m̄,k} ∏_i A^{l_i}_{m̄_i}` with `A_m = Σ_p Y_m(x_p)`.
fn eval_density(basis: &CouplingBasis, y: &[Vec<Vec<C64>>]) -> Vec<Vec<C64>> {
    let nk = basis.l.multiplicity();
    let a: Vec<Vec<C64>> = y
        .iter()
        .map(|slot| {
            let len = slot.first().map_or(0, Vec::len);
            (0..len).map(|m| slot.iter().map(|yp| yp[m]).sum()).collect()
        })
        .collect();
    basis
        .vectors
        .iter()
        .map(|v| {
            let mut f = vec![C64::new(0.0, 0.0); nk];
            for (m, &c) in basis.support.iter().zip(v) {
                let k: HalfInt = m.iter().copied().sum();
                let prod: C64 = m.iter().enumerate().map(|(i, &x)| a[i][basis.lvec.ell(i).offset(x)]).product();
                f[basis.l.offset(k)] += prod * c;
            }
            f
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

/// Sum-over-permutations form `F_k = Σ_{m̄} c_{m̄,k}/|[m̄]| Σ_{μ∈[m̄]} Σ_σ ∏_i Y^{l_i}_{μ_i}(x_{σ(i)})`.
fn eval_symmetrized(basis: &CouplingBasis, y: &[Vec<Vec<C64>>], perms: &[Vec<usize>]) -> Vec<Vec<C64>> {
    let lvec = &basis.lvec;
    let nk = basis.l.multiplicity();
    let index = basis.support_index();
    let mut out = vec![vec![C64::new(0.0, 0.0); nk]; basis.dim()];
    for mu in all_mtuples(lvec) {
        let class = class_of(lvec, &mu);
        let Some(&pos) = index.get(class.as_slice()) else { continue };
        let size: f64 = class_size(lvec, &class).to_string().parse().unwrap_or(f64::INFINITY);
        let s: C64 = perms
            .iter()
            .map(|p| mu.iter().enumerate().map(|(i, &m)| y[i][p[i]][lvec.ell(i).offset(m)]).product::<C64>())
            .sum();
        let k: HalfInt = mu.iter().copied().sum();
        for (f, v) in out.iter_mut().zip(&basis.vectors) {
            f[basis.l.offset(k)] += s * (v[pos] / size);
        }
    }
    out
}

fn max_diff(a: &[Vec<C64>], b: &[Vec<C64>]) -> (f64, f64) {
    let mut diff: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (x, y) in a.iter().zip(b) {
        for (p, q) in x.iter().zip(y) {
            diff = diff.max((p - q).norm());
            scale = scale.max(p.norm()).max(q.norm());
        }
    }
    (diff, scale)
}

/// Spatial check of a GE-PI basis on `n_points` random sets of `N` unit vectors:
/// permuting the points leaves the density and sum-over-permutations
/// evaluations unchanged, and a random rotation `Q` maps `F(x)` to
/// `D^L(Q) F(x)`. Returns the largest residual relative to `max(1, |F|)`.
pub fn check_permutation_spatial(basis: &CouplingBasis, n_points: usize, seed: u64) -> Result<f64> {
    if basis.kind != Kind::Gepi {
        return Err(Error::KindMismatch);
    }
    if let Some(bad) = basis.lvec.ells().chain([basis.l]).find(|l| !l.is_integer()) {
        return Err(Error::UnsupportedGroup(bad));
    }
    let n = basis.lvec.len();
    let perms = permutations(n);
    let symmetrized = n <= 6;
    if symmetrized {
        tensor_size(&basis.lvec)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut record = |(d, s): (f64, f64)| worst = worst.max(d / s.max(1.0));
    for _ in 0..n_points {
        let x: Vec<[f64; 3]> = (0..n).map(|_| random_unit_vector(&mut rng)).collect();
        let y = harmonics(&basis.lvec, &x)?;
        let dens = eval_density(basis, &y);
        let sym = if symmetrized { eval_symmetrized(basis, &y, &perms) } else { Vec::new() };
        for p in perms.iter().take(if symmetrized { perms.len() } else { 24 }) {
            let xp: Vec<[f64; 3]> = p.iter().map(|&i| x[i]).collect();
            let yp = harmonics(&basis.lvec, &xp)?;
            record(max_diff(&dens, &eval_density(basis, &yp)));
            if symmetrized {
                record(max_diff(&sym, &eval_symmetrized(basis, &yp, &perms)));
            }
        }
        let (a, b, g) = random_angles(&mut rng);
        let q = rotation_matrix(a, b, g);
        let dl = wigner_d(basis.l, a, b, g)?;
        let xq: Vec<[f64; 3]> = x.iter().map(|&r| rotate(&q, r)).collect();
        let yq = harmonics(&basis.lvec, &xq)?;
        let rotate_f = |f: &[Vec<C64>]| -> Vec<Vec<C64>> {
            f.iter()
                .map(|fk| (0..fk.len()).map(|k| (0..fk.len()).map(|k2| dl[(k, k2)] * fk[k2]).sum()).collect())
                .collect()
        };
        record(max_diff(&eval_density(basis, &yq), &rotate_f(&dens)));
        if symmetrized {
            record(max_diff(&eval_symmetrized(basis, &yq, &perms), &rotate_f(&sym)));
        }
    }
    Ok(worst)
}

/// `(Σ_L (2L+1)·dim(l, L), total)` where total is `∏(2l_i+1)` (GE) or the
/// class count (GE-PI).
pub fn direct_sum_totals(lvec: &LVector, kind: Kind) -> (BigUint, BigUint) {
    let top = lvec.sum_ell().twice();
    let lhs = (top % 2..=top)
        .step_by(2)
        .map(|t| {
            let l = HalfInt::from_twice(t);
            dim(kind, lvec, l) * BigUint::from(l.multiplicity())
        })
        .sum();
    let total = match kind {
        Kind::Ge => lvec.tuple_count(),
        Kind::Gepi => lvec.class_count(),
    };
    (lhs, total)
}

/// Direct-sum accounting for both kinds.
pub fn check_direct_sum(lvec: &LVector) -> bool {
    [Kind::Ge, Kind::Gepi].into_iter().all(|k| {
        let (a, b) = direct_sum_totals(lvec, k);
        a == b
    })
}

/// Residuals of the ladder-block identities at projection `K`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderResiduals {
    /// `(B⁻_K)ᵀ + B⁺_{K−1}` (GE) or `(B⁻_K)ᵀW_{K−1} + W_K B⁺_{K−1}` (GE-PI), max abs.
    pub transpose: f64,
    /// `(B⁺_K)ᵀW B⁺_K − (B⁻_K)ᵀW B⁻_K + 2K·W_K`, max abs relative to the largest
    /// diagonal term.
    pub quadratic: f64,
}

/// `Aᵀ·diag(w)·B` as a map `(i, j) → value` (`A`, `B` share rows).
fn gram(a: &SparseMatrix<f64>, w: &[f64], b: &SparseMatrix<f64>) -> HashMap<(usize, usize), f64> {
    let mut out = HashMap::new();
    for ((ra, rb), &wr) in a.rows().iter().zip(b.rows()).zip(w) {
        for &(i, x) in ra {
            for &(j, y) in rb {
                *out.entry((i, j)).or_insert(0.0) += x * wr * y;
            }
        }
    }
    out
}

pub fn check_ladder(kind: Kind, lvec: &LVector, k: HalfInt) -> LadderResiduals {
    let one = HalfInt::ONE;
    let (below, here, above) = (index_set(kind, lvec, k - one), index_set(kind, lvec, k), index_set(kind, lvec, k + one));
    let weights = |set: &[Vec<HalfInt>]| match kind {
        Kind::Ge => vec![1.0; set.len()],
        Kind::Gepi => ladder_weights(lvec, set),
    };
    let (w_below, w_here, w_above) = (weights(&below), weights(&here), weights(&above));
    let minus_k = ladder_minus(kind, lvec, &below, &here);
    let plus_prev = ladder_plus(kind, lvec, &here, &below);
    // (B⁻_K)ᵀ W_{K−1} has entry (j, i) = B⁻_K[i, j] · w_below[i]; W_K B⁺_{K−1} entry (j, i) = w_here[j] · B⁺_{K−1}[j, i]
    let mut sum: HashMap<(usize, usize), f64> = HashMap::new();
    for (i, (row, &w)) in minus_k.rows().iter().zip(&w_below).enumerate() {
        for &(j, v) in row {
            *sum.entry((j, i)).or_insert(0.0) += v * w;
        }
    }
    for (j, (row, &w)) in plus_prev.rows().iter().zip(&w_here).enumerate() {
        for &(i, v) in row {
            *sum.entry((j, i)).or_insert(0.0) += w * v;
        }
    }
    let transpose = sum.values().fold(0.0f64, |m, v| m.max(v.abs()));
    let plus_k = ladder_plus(kind, lvec, &above, &here);
    let mut q = gram(&plus_k, &w_above, &plus_k);
    for ((i, j), v) in gram(&minus_k, &w_below, &minus_k) {
        *q.entry((i, j)).or_insert(0.0) -= v;
    }
    let mut scale: f64 = 1.0;
    for (i, &w) in w_here.iter().enumerate() {
        *q.entry((i, i)).or_insert(0.0) += 2.0 * k.to_f64() * w;
        scale = scale.max(2.0 * k.to_f64().abs() * w);
    }
    for ((i, j), v) in gram(&plus_k, &w_above, &plus_k) {
        if i == j {
            scale = scale.max(v.abs());
        }
    }
    let quadratic = q.values().fold(0.0f64, |m, v| m.max(v.abs())) / scale;
    LadderResiduals { transpose, quadratic }
}

/// True if the transpose identity holds bit-exactly (GE only).
pub fn ladder_transpose_exact(lvec: &LVector, k: HalfInt) -> bool {
    let below = index_set(Kind::Ge, lvec, k - HalfInt::ONE);
    let here = index_set(Kind::Ge, lvec, k);
    let minus_k = ladder_minus(Kind::Ge, lvec, &below, &here);
    let plus_prev = ladder_plus(Kind::Ge, lvec, &here, &below);
    let neg_t = minus_k.transpose().map(|v| -v);
    neg_t.rows() == plus_prev.rows()
}

/// Embeds the restricted-support basis into the generic column space `(index, k)`.
pub fn embed(basis: &CouplingBasis, columns: &HashMap<(&[HalfInt], HalfInt), usize>, ncols: usize) -> Mat<C64> {
    let mut out = Mat::zeros(ncols, basis.dim());
    for (i, m) in basis.support.iter().enumerate() {
        let k: HalfInt = m.iter().copied().sum();
        let c = columns[&(m.as_slice(), k)];
        for (j, v) in basis.vectors.iter().enumerate() {
            out[(c, j)] = C64::new(v[i], 0.0);
        }
    }
    out
}

/// Largest principal angle between the solver's span and the generic-engine
/// kernel for the same problem (`π/2` if the dimensions differ).
pub fn cross_check_generic(basis: &CouplingBasis) -> Result<f64> {
    let target = LChannel::untagged(basis.l);
    let gens = GeneratorSet::su2_for(&basis.lvec, basis.l);
    let nk = basis.l.multiplicity();
    let found = match basis.kind {
        Kind::Ge => basis.lvec.tuple_count(),
        Kind::Gepi => basis.lvec.class_count(),
    } * BigUint::from(nk);
    let found: usize = found.to_string().parse().unwrap_or(usize::MAX);
    if found > MAX_GENERIC_COLUMNS {
        return Err(Error::TooLarge { limit: MAX_GENERIC_COLUMNS, found });
    }
    let stacked = match basis.kind {
        Kind::Ge => build_m_ge(&gens, &basis.lvec, &target)?,
        Kind::Gepi => build_m_gepi(&gens, &basis.lvec, &target)?,
    };
    let kernel = kernel_dense(&stacked.matrix, KERNEL_TOL)?;
    let mine = embed(basis, &stacked.column_index(), stacked.columns.len());
    max_principal_angle(mine.as_ref(), kernel.vectors.as_ref())
}

/// Runs the applicable checks on `basis` and collects them in a report.
pub fn verify_basis(basis: &CouplingBasis, n_samples: usize, seed: u64) -> Result<VerificationReport> {
    let mut report = VerificationReport::new(seed);
    let expected = dim(basis.kind, &basis.lvec, basis.l);
    let mismatch = if BigUint::from(basis.dim()) == expected { 0.0 } else { 1.0 };
    if basis.parity.is_none() || !basis.is_empty() {
        report.push("dimension", mismatch, 0.0);
    }
    if basis.is_empty() {
        return Ok(report);
    }
    let small = basis.lvec.ells().map(HalfInt::multiplicity).product::<usize>() <= MAX_DENSE_STATES;
    if small {
        report.push("equivariance", check_equivariance(basis, n_samples, seed)?, 1e-9);
        if basis.kind == Kind::Gepi && basis.l.is_integer() && basis.lvec.ells().all(HalfInt::is_integer) {
            report.push("spatial", check_permutation_spatial(basis, n_samples.min(10), seed)?, 1e-9);
        }
    }
    let ortho = basis
        .vectors
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            basis.vectors[i..].iter().enumerate().map(move |(d, b)| {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (dot - if d == 0 { 1.0 } else { 0.0 }).abs()
            })
        })
        .fold(0.0f64, f64::max);
    report.push("orthonormality", ortho, 1e-10);
    Ok(report)
}
