//! Jacobi elliptic functions by the descending arithmetic–geometric mean.
//!
//! All functions take the modulus `k` (not the parameter `m = k²`), with
//! `0 <= k <= 1`.

use std::f64::consts::FRAC_PI_2;

const MAX_AGM_STEPS: usize = 64;

/// Complete elliptic integral of the first kind, `K(k) = π / (2 AGM(1, k'))`.
pub fn complete_k(k: f64) -> f64 {
    let kp = (1.0 - k * k).max(0.0).sqrt();
    if kp == 0.0 {
        return f64::INFINITY;
    }
    let (mut a, mut b) = (1.0f64, kp);
    for _ in 0..MAX_AGM_STEPS {
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
    }
    FRAC_PI_2 / a
}

/// `(sn, cn, dn)` of `u` with modulus `k`.
pub fn sn_cn_dn(u: f64, k: f64) -> (f64, f64, f64) {
    let m = k * k;
    if m < 1e-300 {
        return (u.sin(), u.cos(), 1.0);
    }
    if (1.0 - m).abs() < 1e-300 {
        let sech = 1.0 / u.cosh();
        return (u.tanh(), sech, sech);
    }
    let mut a = [0.0f64; MAX_AGM_STEPS + 1];
    let mut c = [0.0f64; MAX_AGM_STEPS + 1];
    a[0] = 1.0;
    let mut b = (1.0 - m).sqrt();
    c[0] = k;
    let mut n = 0;
    while n < MAX_AGM_STEPS && c[n].abs() > f64::EPSILON * a[n] {
        let an = 0.5 * (a[n] + b);
        c[n + 1] = 0.5 * (a[n] - b);
        b = (a[n] * b).sqrt();
        a[n + 1] = an;
        n += 1;
    }
    let mut phi = (1u64 << n) as f64 * a[n] * u;
    let mut prev = phi;
    for j in (1..=n).rev() {
        prev = phi;
        phi = 0.5 * (phi + (c[j] / a[j] * phi.sin()).asin());
    }
    let (s, cph) = phi.sin_cos();
    let dn = if n == 0 { 1.0 } else { cph / (prev - phi).cos() };
    (s, cph, dn)
}

pub fn cn(u: f64, k: f64) -> f64 {
    sn_cn_dn(u, k).1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_values() {
        for k in [0.1, 0.5, 0.9] {
            let big_k = complete_k(k);
            assert_eq!(cn(0.0, k), 1.0);
            assert!(cn(big_k, k).abs() <= 1e-12, "cn(K) for k={k}");
            for i in 0..50 {
                let u = -7.0 + 0.3 * f64::from(i);
                let (s, c, d) = sn_cn_dn(u, k);
                assert!((s * s + c * c - 1.0).abs() <= 1e-12);
                assert!((d * d + k * k * s * s - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn complete_integral_reference() {
        // K(1/√2) = Γ(1/4)² / (4√π).
        let want = 1.854_074_677_301_372;
        assert!((complete_k(std::f64::consts::FRAC_1_SQRT_2) - want).abs() < 1e-14);
        assert_eq!(complete_k(0.0), FRAC_PI_2);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (k, u, h) = (0.5, 0.7, 1e-5);
        let (s, _, d) = sn_cn_dn(u, k);
        let fd = (cn(u + h, k) - cn(u - h, k)) / (2.0 * h);
        assert!((fd + s * d).abs() < 1e-9);
    }

    #[test]
    fn degenerate_moduli() {
        let (s, c, d) = sn_cn_dn(0.4, 0.0);
        assert_eq!((s, c, d), (0.4f64.sin(), 0.4f64.cos(), 1.0));
        let (s, c, _) = sn_cn_dn(0.4, 1.0);
        assert!((s - 0.4f64.tanh()).abs() < 1e-15 && (c - 1.0 / 0.4f64.cosh()).abs() < 1e-15);
    }
}
