//! Dense helpers: SVD nullspaces, span orthonormalization, principal angles.

use faer::{Mat, MatRef};

use crate::error::{Error, Result};
use crate::C64;

fn svd_parts(a: MatRef<'_, C64>) -> Result<(Vec<f64>, Mat<C64>, Mat<C64>)> {
    let svd = a.thin_svd().map_err(|e| Error::Linalg(format!("{e:?}")))?;
    let s = svd.S().column_vector();
    let sv: Vec<f64> = (0..s.nrows()).map(|i| s[i].re).collect();
    Ok((sv, svd.U().to_owned(), svd.V().to_owned()))
}

fn check_finite(a: MatRef<'_, C64>) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite);
            }
        }
    }
    Ok(())
}

/// Orthonormal basis of `{x : A x = 0}`, cutting the rank at `σ > tol·σ_max`.
pub fn nullspace(a: MatRef<'_, C64>, tol: f64) -> Result<Mat<C64>> {
    check_finite(a)?;
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    if m == 0 {
        return Ok(Mat::identity(n, n));
    }
    // a thin SVD only returns min(m, n) right vectors; pad to square when short
    let padded;
    let a = if m < n {
        padded = Mat::from_fn(n, n, |i, j| if i < m { a[(i, j)] } else { C64::new(0.0, 0.0) });
        padded.as_ref()
    } else {
        a
    };
    let (s, _, v) = svd_parts(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..n).filter(|&i| s[i] <= tol * smax || smax == 0.0).collect();
    Ok(Mat::from_fn(n, keep.len(), |i, j| v[(i, keep[j])]))
}

/// Orthonormal basis of the column span, cutting the rank at `σ > tol·σ_max`.
pub fn orthonormal_span(a: MatRef<'_, C64>, tol: f64) -> Result<Mat<C64>> {
    check_finite(a)?;
    if a.ncols() == 0 || a.nrows() == 0 {
        return Ok(Mat::zeros(a.nrows(), 0));
    }
    let (s, u, _) = svd_parts(a)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let r = s.iter().filter(|&&x| smax > 0.0 && x > tol * smax).count();
    Ok(u.get(.., 0..r).to_owned())
}

/// Largest principal angle between the spans of two orthonormal column sets,
/// `π/2` if their dimensions differ.
pub fn max_principal_angle(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    if a.ncols() == 0 {
        return Ok(0.0);
    }
    // sines of the angles are the singular values of (I - A A^H) B
    let proj = a * (a.adjoint() * b);
    let resid = b - &proj;
    let (s, _, _) = svd_parts(resid.as_ref())?;
    let smax = s.first().copied().unwrap_or(0.0);
    Ok(smax.min(1.0).asin())
}

/// Largest principal angle after orthonormalizing both column sets.
pub fn span_distance(a: MatRef<'_, C64>, b: MatRef<'_, C64>, tol: f64) -> Result<f64> {
    let qa = orthonormal_span(a, tol)?;
    let qb = orthonormal_span(b, tol)?;
    max_principal_angle(qa.as_ref(), qb.as_ref())
}

/// Rotates a complex orthonormal basis into a real one when its span is
/// closed under conjugation; returns `None` otherwise.
pub fn real_basis(k: MatRef<'_, C64>, tol: f64) -> Result<Option<Mat<f64>>> {
    let (n, r) = (k.nrows(), k.ncols());
    if r == 0 {
        return Ok(Some(Mat::zeros(n, 0)));
    }
    let stacked = Mat::from_fn(n, 2 * r, |i, j| {
        let z = k[(i, j % r)];
        C64::new(if j < r { z.re } else { z.im }, 0.0)
    });
    let (s, u, _) = svd_parts(stacked.as_ref())?;
    let smax = s[0];
    if s.len() > r && s[r] > tol * smax {
        return Ok(None);
    }
    let mut out = Mat::from_fn(n, r, |i, j| u[(i, j)].re);
    // the real span must reproduce the complex one
    let kc = Mat::from_fn(n, r, |i, j| C64::new(out[(i, j)], 0.0));
    let resid = max_principal_angle(kc.as_ref(), k)?;
    if resid > tol.sqrt() {
        return Ok(None);
    }
    for j in 0..r {
        let mut col: Vec<f64> = (0..n).map(|i| out[(i, j)]).collect();
        fix_sign_real(&mut col);
        for i in 0..n {
            out[(i, j)] = col[i];
        }
    }
    Ok(Some(out))
}

/// Index of the first entry whose magnitude is maximal (up to rounding).
fn leading_index(mags: impl Iterator<Item = f64> + Clone) -> Option<usize> {
    let max = mags.clone().fold(0.0, f64::max);
    if max == 0.0 {
        return None;
    }
    mags.into_iter().position(|x| x >= max * (1.0 - 1e-9))
}

/// Makes the first entry of largest magnitude positive.
pub fn fix_sign_real(v: &mut [f64]) {
    if let Some(i) = leading_index(v.iter().map(|x| x.abs())) {
        if v[i] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Makes the first entry of largest magnitude real and positive.
pub fn fix_phase(v: &mut [C64]) {
    if let Some(i) = leading_index(v.iter().map(|x| x.norm())) {
        let phase = v[i].conj() / v[i].norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

/// Real column vectors as a complex matrix.
pub fn columns_to_mat(cols: &[Vec<f64>], nrows: usize) -> Mat<C64> {
    Mat::from_fn(nrows, cols.len(), |i, j| C64::new(cols[j][i], 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn nullspace_trivial_cases() {
        let z = Mat::<C64>::zeros(3, 3);
        assert_eq!(nullspace(z.as_ref(), 1e-10).unwrap().ncols(), 3);
        let i = Mat::<C64>::identity(3, 3);
        assert_eq!(nullspace(i.as_ref(), 1e-10).unwrap().ncols(), 0);
        let wide = Mat::from_fn(1, 3, |_, j| c([1.0, 1.0, 0.0][j]));
        let k = nullspace(wide.as_ref(), 1e-10).unwrap();
        assert_eq!(k.ncols(), 2);
        let prod = &wide * &k;
        assert!((0..2).all(|j| prod[(0, j)].norm() < 1e-14));
    }

    #[test]
    fn nullspace_rejects_nan() {
        let mut m = Mat::<C64>::zeros(2, 2);
        m[(0, 1)] = C64::new(f64::NAN, 0.0);
        assert!(matches!(nullspace(m.as_ref(), 1e-10), Err(Error::NonFinite)));
    }

    #[test]
    fn principal_angles_detect_rotation() {
        let a = Mat::from_fn(3, 1, |i, _| c([1.0, 0.0, 0.0][i]));
        let t: f64 = 0.1;
        let b = Mat::from_fn(3, 1, |i, _| c([t.cos(), t.sin(), 0.0][i]));
        let ang = max_principal_angle(a.as_ref(), b.as_ref()).unwrap();
        assert!((ang - t).abs() < 1e-14);
        let two = Mat::from_fn(3, 2, |i, j| c(if i == j { 1.0 } else { 0.0 }));
        assert_eq!(max_principal_angle(a.as_ref(), two.as_ref()).unwrap(), std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn real_basis_from_phased_vectors() {
        let ph = C64::from_polar(1.0, 0.7);
        let k = Mat::from_fn(2, 1, |i, _| ph * c([0.6, -0.8][i]));
        let r = real_basis(k.as_ref(), 1e-9).unwrap().unwrap();
        assert!((r[(0, 0)] - 0.6).abs() < 1e-14 || (r[(1, 0)] - 0.8).abs() < 1e-14);
        assert!(r[(1, 0)] < 0.0 || r[(0, 0)] < 0.0);
        let genuinely_complex = Mat::from_fn(2, 1, |i, _| [c(1.0), C64::new(0.0, 1.0)][i] / 2f64.sqrt());
        assert!(real_basis(genuinely_complex.as_ref(), 1e-9).unwrap().is_none());
    }

    #[test]
    fn span_dedup() {
        let v = Mat::from_fn(3, 2, |i, _| c([1.0, 2.0, 2.0][i]));
        assert_eq!(orthonormal_span(v.as_ref(), 1e-8).unwrap().ncols(), 1);
    }
}
