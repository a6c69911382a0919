use gepi_core::recursion::CgCache;
use gepi_core::solver::ge_basis;
use gepi_core::wigner::{rotation_matrix, small_d, spherical_harmonics, wigner_d};
use gepi_core::{HalfInt, LVector, C64};
use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

fn fact(n: i32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Racah's closed form for `<j1 m1 j2 m2 | J M>`, all arguments doubled.
fn racah_cg(j1: i32, m1: i32, j2: i32, m2: i32, j: i32) -> f64 {
    let m = m1 + m2;
    let (a, b, c) = ((j1 + j2 - j) / 2, (j1 - j2 + j) / 2, (-j1 + j2 + j) / 2);
    let pref = ((j + 1) as f64 * fact(a) * fact(b) * fact(c) / fact((j1 + j2 + j) / 2 + 1)).sqrt()
        * (fact((j + m) / 2) * fact((j - m) / 2) * fact((j1 - m1) / 2) * fact((j1 + m1) / 2) * fact((j2 - m2) / 2) * fact((j2 + m2) / 2))
            .sqrt();
    let mut sum = 0.0;
    for k in 0..=a {
        let d = [k, a - k, (j1 - m1) / 2 - k, (j2 + m2) / 2 - k, (j - j2 + m1) / 2 + k, (j - j1 - m2) / 2 + k];
        if d.iter().all(|&x| x >= 0) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign / d.iter().map(|&x| fact(x)).product::<f64>();
        }
    }
    pref * sum
}

#[test]
fn cg_cache_matches_racah_formula() {
    let mut cache = CgCache::new();
    for j1 in 0i32..=6 {
        for j2 in 0..=6 {
            for j in ((j1 - j2).abs()..=j1 + j2).step_by(2) {
                let map = cache.get(h(j1), h(j2), h(j)).unwrap().expect("inside the triangle").clone();
                let scale = ((j + 1) as f64).sqrt();
                let mut sign = 0.0;
                for m1 in (-j1..=j1).step_by(2) {
                    for m2 in (-j2..=j2).step_by(2) {
                        if (m1 + m2).abs() > j {
                            continue;
                        }
                        let want = racah_cg(j1, m1, j2, m2, j) / scale;
                        let got = map.get(&(h(m1), h(m2))).copied().unwrap_or(0.0);
                        if sign == 0.0 && want.abs() > 1e-8 {
                            sign = (got / want).signum();
                        }
                        assert!((got - sign * want).abs() < 1e-12, "({j1},{m1};{j2},{m2}|{j}): {got} vs {want}");
                    }
                }
            }
        }
    }
}

#[test]
fn cg_cache_is_empty_outside_triangle() {
    let mut cache = CgCache::new();
    assert!(cache.get(h(2), h(2), h(6)).unwrap().is_none());
    assert!(cache.get(h(4), h(0), h(2)).unwrap().is_none());
}

#[test]
fn small_d_closed_forms() {
    for &beta in &[0.0, 0.3, 1.2, 2.9] {
        let (c, s) = (f64::cos(beta), f64::sin(beta));
        let d = small_d(h(1), beta).unwrap();
        let (ch, sh) = (f64::cos(beta / 2.0), f64::sin(beta / 2.0));
        let want = [[ch, sh], [-sh, ch]];
        for (i, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert!((d[(i, j)] - w).abs() < 1e-14);
            }
        }
        let d = small_d(h(2), beta).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let want = [
            [(1.0 + c) / 2.0, s * r, (1.0 - c) / 2.0],
            [-s * r, c, s * r],
            [(1.0 - c) / 2.0, -s * r, (1.0 + c) / 2.0],
        ];
        for (i, row) in want.iter().enumerate() {
            for (j, &w) in row.iter().enumerate() {
                assert!((d[(i, j)] - w).abs() < 1e-14, "beta {beta} ({i},{j})");
            }
        }
    }
}

#[test]
fn l1_harmonics_closed_form() {
    let (theta, phi) = (0.7f64, 2.1f64);
    let r = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
    let y = spherical_harmonics(HalfInt::ONE, r).unwrap();
    let s = theta.sin() * std::f64::consts::FRAC_1_SQRT_2;
    let want = [C64::from_polar(s, phi), C64::new(theta.cos(), 0.0), -C64::from_polar(s, -phi)];
    for (a, b) in y.iter().zip(want) {
        assert!((a - b).norm() < 1e-14, "{a} vs {b}");
    }
}

#[test]
fn two_spin_half_singlet_is_antisymmetric() {
    let b = ge_basis(&LVector::homogeneous(HalfInt::HALF, 2), HalfInt::ZERO).unwrap();
    assert_eq!(b.dim(), 1);
    let up_down = b.coefficient(0, &[h(-1), h(1)]);
    let down_up = b.coefficient(0, &[h(1), h(-1)]);
    assert!((up_down + down_up).abs() < 1e-14);
    assert!((up_down.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-14);
}

fn euler_of(q: [[f64; 3]; 3]) -> (f64, f64, f64) {
    let beta = q[2][2].clamp(-1.0, 1.0).acos();
    (q[1][2].atan2(q[0][2]), beta, q[2][1].atan2(-q[2][0]))
}

fn matmul3(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

proptest! {
    #[test]
    fn wigner_d_is_a_homomorphism(
        ell in 0i32..=4,
        a1 in 0.0..TAU, b1 in 0.05..PI - 0.05, g1 in 0.0..TAU,
        a2 in 0.0..TAU, b2 in 0.05..PI - 0.05, g2 in 0.0..TAU,
    ) {
        let q = matmul3(rotation_matrix(a1, b1, g1), rotation_matrix(a2, b2, g2));
        let (a, b, g) = euler_of(q);
        prop_assume!(b > 1e-3 && b < PI - 1e-3);
        let l = HalfInt::from_int(ell);
        let prod = wigner_d(l, a1, b1, g1).unwrap() * wigner_d(l, a2, b2, g2).unwrap();
        let direct = wigner_d(l, a, b, g).unwrap();
        let n = l.multiplicity();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((prod[(i, j)] - direct[(i, j)]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn wigner_d_is_unitary(twice in 0i32..=12, a in 0.0..TAU, b in 0.0..PI, g in 0.0..TAU) {
        let d = wigner_d(h(twice), a, b, g).unwrap();
        let p = d.adjoint() * &d;
        for i in 0..p.nrows() {
            for j in 0..p.ncols() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((p[(i, j)] - C64::new(want, 0.0)).norm() < 1e-10);
            }
        }
    }
}

/// Dimension by brute force: the number of tuples with `Σm = L` minus those with `Σm = L + 1`,
/// counted by explicit enumeration.
fn brute_dim(ells: &[i32], l: i32) -> i64 {
    fn count(ells: &[i32], target: i32) -> i64 {
        match ells.split_first() {
            None => i64::from(target == 0),
            Some((&e, rest)) => (-e..=e).step_by(2).map(|m| count(rest, target - m)).sum(),
        }
    }
    count(ells, l) - count(ells, l + 2)
}

proptest! {
    #[test]
    fn ge_kernel_dimension_matches_brute_force(ells in prop::collection::vec(0i32..=4, 1..=4), l in 0i32..=8) {
        let total: i32 = ells.iter().sum();
        let l = l + (total - l).rem_euclid(2);
        let lvec = LVector::from_ells(ells.iter().map(|&t| h(t))).unwrap();
        let expected = if l > total { 0 } else { brute_dim(&ells, l) };
        prop_assert_eq!(ge_basis(&lvec, h(l)).unwrap().dim() as i64, expected);
    }
}
