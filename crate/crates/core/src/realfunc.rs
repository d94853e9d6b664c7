//! Real profile functions `F(t)` over ℝ^k with exact first and second derivatives.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::classics::jacobi;
use crate::holo::{eval_jet2, parse_expr, DomainError, HoloExpr};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RealFuncError {
    #[error("t = {t} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfGrid { t: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Value, gradient and row-major Hessian of a real function.
#[derive(Clone, Debug, PartialEq)]
pub struct RealValueJet {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<f64>,
}

impl RealValueJet {
    fn one(value: f64, d1: f64, d2: f64) -> Self {
        Self { value, grad: vec![d1], hess: vec![d2] }
    }

    pub fn laplacian(&self) -> f64 {
        let k = self.grad.len();
        (0..k).map(|i| self.hess[i * k + i]).sum()
    }

    /// `|DF|² ΔF - Σ F_i F_j F_ij`.
    pub fn one_laplacian(&self) -> f64 {
        crate::minimality::delta1_of(&self.grad, &self.hess)
    }
}

/// Grid of `(t, F, F')` with cubic Hermite interpolation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub t: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    #[serde(rename = "F'")]
    pub df: Vec<f64>,
}

impl Table {
    pub fn eval(&self, t: f64) -> Result<RealValueJet, RealFuncError> {
        let n = self.t.len();
        let (lo, hi) = (self.t[0], self.t[n - 1]);
        if !(lo..=hi).contains(&t) {
            return Err(RealFuncError::OutOfGrid { t, lo, hi });
        }
        let i = match self.t.partition_point(|&x| x <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.t[i + 1] - self.t[i];
        let s = (t - self.t[i]) / h;
        let (f0, f1, d0, d1) = (self.f[i], self.f[i + 1], self.df[i], self.df[i + 1]);
        let (s2, s3) = (s * s, s * s * s);
        let value = (2.0 * s3 - 3.0 * s2 + 1.0) * f0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * f1
            + (s3 - s2) * h * d1;
        let d = ((6.0 * s2 - 6.0 * s) * f0 + (-6.0 * s2 + 6.0 * s) * f1) / h
            + (3.0 * s2 - 4.0 * s + 1.0) * d0
            + (3.0 * s2 - 2.0 * s) * d1;
        let dd = ((12.0 * s - 6.0) * f0 + (-12.0 * s + 6.0) * f1) / (h * h)
            + ((6.0 * s - 4.0) * d0 + (6.0 * s - 2.0) * d1) / h;
        Ok(RealValueJet::one(value, d, dd))
    }
}

/// `F` in `f = Re h(z) - F(t)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum RealFunc {
    Zero,
    Identity,
    /// `ln cosh t`.
    LnCosh,
    /// `Σ a_i t_i + b`.
    Affine {
        coeffs: Vec<f64>,
        offset: f64,
    },
    /// `arctan(A · cn(t, k))`.
    ArctanCn {
        amplitude: f64,
        modulus: f64,
    },
    /// An expression in `z1..zk` evaluated at real arguments; the real part is used.
    Expr {
        expr: HoloExpr,
    },
    Tabulated(Table),
}

impl RealFunc {
    /// Number of real variables, `None` when any number is accepted.
    pub fn arity(&self) -> Option<usize> {
        match self {
            RealFunc::Zero => None,
            RealFunc::Identity | RealFunc::LnCosh | RealFunc::ArctanCn { .. } | RealFunc::Tabulated(_) => Some(1),
            RealFunc::Affine { coeffs, .. } => Some(coeffs.len()),
            RealFunc::Expr { expr } => Some(expr.arity()),
        }
    }

    pub fn expr(text: &str) -> Result<Self, crate::holo::ParseError> {
        parse_expr(text).map(|expr| RealFunc::Expr { expr })
    }

    pub fn eval(&self, t: &[f64]) -> Result<RealValueJet, RealFuncError> {
        let k = t.len();
        Ok(match self {
            RealFunc::Zero => RealValueJet { value: 0.0, grad: vec![0.0; k], hess: vec![0.0; k * k] },
            RealFunc::Identity => RealValueJet::one(t[0], 1.0, 0.0),
            RealFunc::LnCosh => {
                let x = t[0];
                let value = x.abs() + (-2.0 * x.abs()).exp().ln_1p() - std::f64::consts::LN_2;
                let th = x.tanh();
                RealValueJet::one(value, th, 1.0 - th * th)
            }
            RealFunc::Affine { coeffs, offset } => RealValueJet {
                value: coeffs.iter().zip(t).map(|(a, x)| a * x).sum::<f64>() + offset,
                grad: coeffs.clone(),
                hess: vec![0.0; k * k],
            },
            RealFunc::ArctanCn { amplitude, modulus } => {
                let (sn, cn, dn) = jacobi::sn_cn_dn(t[0], *modulus);
                let k2 = modulus * modulus;
                let u = amplitude * cn;
                let du = -amplitude * sn * dn;
                let ddu = amplitude * cn * (k2 * sn * sn - dn * dn);
                let q = 1.0 + u * u;
                RealValueJet::one(u.atan(), du / q, ddu / q - 2.0 * u * du * du / (q * q))
            }
            RealFunc::Expr { expr } => {
                let z: Vec<Complex64> = t.iter().map(|&x| Complex64::new(x, 0.0)).collect();
                let j = eval_jet2(expr, &z)?;
                RealValueJet {
                    value: j.value.re,
                    grad: j.grad.iter().map(|c| c.re).collect(),
                    hess: j.hess.iter().map(|c| c.re).collect(),
                }
            }
            RealFunc::Tabulated(table) => table.eval(t[0])?,
        })
    }
}

impl fmt::Display for RealFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RealFunc::Zero => f.write_str("zero"),
            RealFunc::Identity => f.write_str("identity"),
            RealFunc::LnCosh => f.write_str("lncosh"),
            RealFunc::Affine { coeffs, offset } => {
                let c: Vec<String> = coeffs.iter().map(f64::to_string).collect();
                write!(f, "affine:{};{offset}", c.join(","))
            }
            RealFunc::ArctanCn { amplitude, modulus } => write!(f, "arctan-cn:{amplitude},{modulus}"),
            RealFunc::Expr { expr } => write!(f, "expr:{expr}"),
            RealFunc::Tabulated(t) => write!(f, "table[{} points]", t.t.len()),
        }
    }
}

impl FromStr for RealFunc {
    type Err = String;

    /// Accepts `zero`, `identity`, `lncosh`, `affine:a1,..,ak;b`,
    /// `arctan-cn:A,k` and `expr:<expression>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("bad number '{x}': {e}"));
        match s {
            "zero" => return Ok(RealFunc::Zero),
            "identity" => return Ok(RealFunc::Identity),
            "lncosh" => return Ok(RealFunc::LnCosh),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("expr:") {
            return RealFunc::expr(rest).map_err(|e| e.to_string());
        }
        if let Some(rest) = s.strip_prefix("affine:") {
            let (a, b) = rest.split_once(';').ok_or("affine needs 'a1,..,ak;b'")?;
            let coeffs = a.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            return Ok(RealFunc::Affine { coeffs, offset: num(b)? });
        }
        if let Some(rest) = s.strip_prefix("arctan-cn:") {
            let (a, k) = rest.split_once(',').ok_or("arctan-cn needs 'A,k'")?;
            return Ok(RealFunc::ArctanCn { amplitude: num(a)?, modulus: num(k)? });
        }
        Err(format!("unknown F specification '{s}'"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &RealFunc, t: f64) {
        let h = 1e-4;
        let j = f.eval(&[t]).unwrap();
        let p = f.eval(&[t + h]).unwrap().value;
        let m = f.eval(&[t - h]).unwrap().value;
        let d1 = (p - m) / (2.0 * h);
        let d2 = (p - 2.0 * j.value + m) / (h * h);
        assert!((d1 - j.grad[0]).abs() <= 1e-7 * (1.0 + d1.abs()), "{f}: F' {d1} vs {}", j.grad[0]);
        assert!((d2 - j.hess[0]).abs() <= 1e-5 * (1.0 + d2.abs()), "{f}: F'' {d2} vs {}", j.hess[0]);
    }

    #[test]
    fn closed_forms_match_finite_differences() {
        for f in [
            RealFunc::LnCosh,
            RealFunc::Identity,
            RealFunc::ArctanCn { amplitude: 0.577, modulus: 0.5 },
            RealFunc::expr("-cos(t1) + t1^3").unwrap(),
        ] {
            for t in [-1.7, -0.2, 0.0, 0.9, 2.3] {
                fd_check(&f, t);
            }
        }
    }

    #[test]
    fn ln_cosh_values() {
        let j = RealFunc::LnCosh.eval(&[1.0]).unwrap();
        assert!((j.value - 1.0f64.cosh().ln()).abs() < 1e-15);
        let big = RealFunc::LnCosh.eval(&[800.0]).unwrap();
        assert!((big.value - (800.0 - std::f64::consts::LN_2)).abs() < 1e-10);
    }

    #[test]
    fn multivariate_expression_jet() {
        let f = RealFunc::expr("1 - t1^2 - t2^2 - t3^2").unwrap();
        let j = f.eval(&[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.grad, vec![-2.0, 0.0, 0.0]);
        assert_eq!(j.laplacian(), -6.0);
        let a = RealFunc::Affine { coeffs: vec![1.0, -2.0], offset: 0.5 };
        assert_eq!(a.eval(&[2.0, 1.0]).unwrap().value, 0.5);
        assert_eq!(a.arity(), Some(2));
    }

    #[test]
    fn table_interpolates_cubics_exactly() {
        let ts: Vec<f64> = (0..=10).map(|i| f64::from(i) * 0.2).collect();
        let table = Table {
            f: ts.iter().map(|t| t * t * t - t).collect(),
            df: ts.iter().map(|t| 3.0 * t * t - 1.0).collect(),
            t: ts,
        };
        let j = table.eval(0.73).unwrap();
        assert!((j.value - (0.73f64.powi(3) - 0.73)).abs() < 1e-14);
        assert!((j.hess[0] - 6.0 * 0.73).abs() < 1e-11);
        assert!(table.eval(2.0).is_ok());
        assert!(matches!(table.eval(2.01), Err(RealFuncError::OutOfGrid { .. })));
        assert!(table.eval(-0.1).is_err());
    }

    #[test]
    fn text_forms() {
        for s in ["zero", "identity", "lncosh", "affine:1,-2;0.5", "arctan-cn:0.5,0.3", "expr:z1^2"] {
            let f: RealFunc = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        assert!("banana".parse::<RealFunc>().is_err());
        let json = serde_json::to_string(&RealFunc::LnCosh).unwrap();
        assert_eq!(json, r#"{"kind":"ln-cosh"}"#);
    }
}
