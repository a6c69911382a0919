//! Wigner D-matrices, their Lie-algebra derivatives and spherical harmonics.

use std::sync::OnceLock;

use faer::Mat;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::error::{Error, Result};
use crate::halfint::HalfInt;
use crate::C64;

/// Largest supported `2l` for the factorial sums.
pub const MAX_TWICE_ELL: i32 = 60;

fn factorials() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut exact = BigUint::one();
        let mut out = vec![1.0];
        for n in 1..=MAX_TWICE_ELL as u32 {
            exact *= n;
            out.push(exact.to_f64().expect("finite"));
        }
        out
    })
}

fn check_ell(ell: HalfInt) -> Result<()> {
    if ell.twice() < 0 {
        return Err(Error::NegativeEll(ell));
    }
    if ell.twice() > MAX_TWICE_ELL {
        return Err(Error::EllTooLarge(ell.twice()));
    }
    Ok(())
}

/// Small Wigner matrix `d^l_{μm}(β)`, rows `μ` and columns `m` ascending.
pub fn small_d(ell: HalfInt, beta: f64) -> Result<Mat<f64>> {
    check_ell(ell)?;
    let fact = factorials();
    let tl = ell.twice();
    let n = ell.multiplicity();
    let (c, s) = ((beta / 2.0).cos(), (beta / 2.0).sin());
    let mut d = Mat::zeros(n, n);
    for (i, mu) in ell.projections().enumerate() {
        for (j, m) in ell.projections().enumerate() {
            let (mu, m) = (mu.twice(), m.twice());
            // all factorial arguments below are integers
            let lpm = ((tl + m) / 2) as usize;
            let lmm = ((tl - m) / 2) as usize;
            let lpmu = ((tl + mu) / 2) as usize;
            let lmmu = ((tl - mu) / 2) as usize;
            let diff = (m - mu) / 2;
            let pre = (fact[lpm] * fact[lmm] * fact[lpmu] * fact[lmmu]).sqrt();
            let s_lo = 0.max(-diff) as usize;
            let s_hi = lpmu.min(lmm);
            let mut acc = 0.0;
            for k in s_lo..=s_hi {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let cos_pow = tl - diff - 2 * k as i32;
                let sin_pow = diff + 2 * k as i32;
                let den = fact[lpmu - k]
                    * fact[k]
                    * fact[(diff + k as i32) as usize]
                    * fact[lmm - k];
                acc += sign * c.powi(cos_pow) * s.powi(sin_pow) / den;
            }
            d[(i, j)] = pre * acc;
        }
    }
    Ok(d)
}

/// `D^l_{μm}(α, β, γ) = e^{-iμα} d^l_{μm}(β) e^{-imγ}` (ZYZ Euler angles).
pub fn wigner_d(ell: HalfInt, alpha: f64, beta: f64, gamma: f64) -> Result<Mat<C64>> {
    let d = small_d(ell, beta)?;
    let ms: Vec<f64> = ell.projections().map(HalfInt::to_f64).collect();
    Ok(Mat::from_fn(d.nrows(), d.ncols(), |i, j| {
        C64::from_polar(1.0, -(ms[i] * alpha + ms[j] * gamma)) * d[(i, j)]
    }))
}

/// Derivative of `D^l` at the identity with respect to Euler angle `d`
/// (1 = α, 2 = β, 3 = γ).
pub fn drho(ell: HalfInt, d: usize) -> Mat<C64> {
    assert!((1..=3).contains(&d), "generator index must be 1, 2 or 3");
    let n = ell.multiplicity();
    let l = ell.to_f64();
    let ms: Vec<f64> = ell.projections().map(HalfInt::to_f64).collect();
    let mut out = Mat::zeros(n, n);
    if d == 2 {
        for i in 0..n {
            if i + 1 < n {
                let m = ms[i + 1];
                out[(i, i + 1)] = C64::from(0.5 * ((l - m + 1.0) * (l + m)).sqrt());
            }
            if i > 0 {
                let m = ms[i - 1];
                out[(i, i - 1)] = C64::from(-0.5 * ((l + m + 1.0) * (l - m)).sqrt());
            }
        }
    } else {
        for i in 0..n {
            out[(i, i)] = C64::new(0.0, -ms[i]);
        }
    }
    out
}

/// Spherical harmonics `Y_m(r) = D^l_{m0}(φ, θ, 0)` of the direction of `r`,
/// for integer `l`, ordered `m = -l..l`. They satisfy
/// `Y(Q r) = D^l(α, β, γ) Y(r)` for `Q = R_z(α) R_y(β) R_z(γ)`.
pub fn spherical_harmonics(ell: HalfInt, r: [f64; 3]) -> Result<Vec<C64>> {
    if !ell.is_integer() {
        return Err(Error::UnsupportedGroup(ell));
    }
    let norm = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let theta = (r[2] / norm).clamp(-1.0, 1.0).acos();
    let phi = r[1].atan2(r[0]);
    let d = wigner_d(ell, phi, theta, 0.0)?;
    let col = ell.offset(HalfInt::ZERO);
    Ok((0..d.nrows()).map(|i| d[(i, col)]).collect())
}

/// Rotation matrix `R_z(α) R_y(β) R_z(γ)`.
pub fn rotation_matrix(alpha: f64, beta: f64, gamma: f64) -> [[f64; 3]; 3] {
    let rz = |a: f64| {
        let (s, c) = a.sin_cos();
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    };
    let (s, c) = beta.sin_cos();
    let ry = [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]];
    let mul = |a: [[f64; 3]; 3], b: [[f64; 3]; 3]| {
        let mut o = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                o[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        o
    };
    mul(mul(rz(alpha), ry), rz(gamma))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_abs_diff(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    #[test]
    fn small_d_at_zero_is_identity() {
        for t in 0..=12 {
            let d = small_d(HalfInt::from_twice(t), 0.0).unwrap();
            for i in 0..d.nrows() {
                for j in 0..d.ncols() {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert!((d[(i, j)] - e).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn small_d_spin_half_and_one() {
        let b = 0.7;
        let d = small_d(HalfInt::HALF, b).unwrap();
        let (c, s) = ((b / 2.0).cos(), (b / 2.0).sin());
        let expected = [[c, s], [-s, c]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((d[(i, j)] - expected[i][j]).abs() < 1e-15);
            }
        }
        let d = small_d(HalfInt::ONE, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(d[(1, 1)].abs() < 1e-15);
        let d = small_d(HalfInt::ONE, b).unwrap();
        assert!((d[(2, 1)] + b.sin() / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn too_large_ell_is_rejected() {
        assert!(matches!(
            small_d(HalfInt::from_twice(62), 0.1),
            Err(Error::EllTooLarge(62))
        ));
        assert!(small_d(HalfInt::from_twice(60), 0.1).is_ok());
    }

    #[test]
    fn alpha_rotation_is_diagonal_phase() {
        let a = 0.3;
        let d = wigner_d(HalfInt::ONE, a, 0.0, 0.0).unwrap();
        let phases = [a, 0.0, -a];
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { C64::from_polar(1.0, phases[i]) } else { C64::from(0.0) };
                assert!((d[(i, j)] - e).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn wigner_d_is_a_homomorphism() {
        // D(0,β1,0) D(0,β2,0) = D(0,β1+β2,0) and D(α,β,γ) = D(α,0,0) D(0,β,0) D(0,0,γ)
        for t in 0..=8 {
            let l = HalfInt::from_twice(t);
            let a = wigner_d(l, 0.0, 0.4, 0.0).unwrap();
            let b = wigner_d(l, 0.0, 1.1, 0.0).unwrap();
            let ab = wigner_d(l, 0.0, 1.5, 0.0).unwrap();
            assert!(max_abs_diff(&(&a * &b), &ab) < 1e-13);
            let full = wigner_d(l, 0.3, 0.8, -1.2).unwrap();
            let split = &(&wigner_d(l, 0.3, 0.0, 0.0).unwrap() * &wigner_d(l, 0.0, 0.8, 0.0).unwrap())
                * &wigner_d(l, 0.0, 0.0, -1.2).unwrap();
            assert!(max_abs_diff(&full, &split) < 1e-13);
        }
    }

    #[test]
    fn drho_examples() {
        let d1 = drho(HalfInt::ONE, 1);
        assert_eq!(d1[(0, 0)], C64::new(0.0, 1.0));
        assert_eq!(d1[(1, 1)], C64::new(0.0, 0.0));
        assert_eq!(d1[(2, 2)], C64::new(0.0, -1.0));
        let d2 = drho(HalfInt::ONE, 2);
        assert!((d2[(1, 2)].re - 0.5 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(drho(HalfInt::ONE, 3), d1);
    }

    #[test]
    fn drho_matches_finite_differences() {
        let h = 1e-6;
        for t in 0..=6 {
            let l = HalfInt::from_twice(t);
            for (d, angles) in [(1, [h, 0.0, 0.0]), (2, [0.0, h, 0.0]), (3, [0.0, 0.0, h])] {
                let plus = wigner_d(l, angles[0], angles[1], angles[2]).unwrap();
                let minus = wigner_d(l, -angles[0], -angles[1], -angles[2]).unwrap();
                let fd = Mat::from_fn(plus.nrows(), plus.ncols(), |i, j| {
                    (plus[(i, j)] - minus[(i, j)]) / (2.0 * h)
                });
                assert!(max_abs_diff(&fd, &drho(l, d)) < 1e-8, "l={l} d={d}");
            }
        }
    }

    #[test]
    fn spherical_harmonics_transform_with_d() {
        let (a, b, g) = (0.4, 1.3, -2.1);
        let q = rotation_matrix(a, b, g);
        let r = [0.3, -0.8, 0.5];
        let qr: Vec<f64> = (0..3).map(|i| (0..3).map(|k| q[i][k] * r[k]).sum()).collect();
        for l in 0..=4 {
            let l = HalfInt::from_int(l);
            let y = spherical_harmonics(l, r).unwrap();
            let yq = spherical_harmonics(l, [qr[0], qr[1], qr[2]]).unwrap();
            let d = wigner_d(l, a, b, g).unwrap();
            for i in 0..y.len() {
                let rhs: C64 = (0..y.len()).map(|j| d[(i, j)] * y[j]).sum();
                assert!((yq[i] - rhs).norm() < 1e-12);
            }
        }
    }
}
