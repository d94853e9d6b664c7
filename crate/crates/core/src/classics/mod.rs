//! Minimal surfaces `Re h(z) = F(t)` in ℝ³.
//!
//! With `h' = 1/g`, the zero set of `Re h(z) - F(t)` is minimal exactly when
//! `g g'' - g'^2` is a real constant and `F'' + Y(F) = 0`, where `Y` is read off
//! from `Re g' / |g|^2 = -Y(Re h)`. The solutions of the `g`-equation are the
//! three [`GFamily`] variants.

pub mod catalog;
pub mod jacobi;
pub mod ode;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::holo::{cut_distance, eval_jet2, DomainError, HoloExpr, Node};
use crate::sampling;

pub use catalog::{catalog, CatalogEntry};
pub use ode::{solve_f, step_halving_order, FProfile, OdeError};

type C = Complex64;

const I: C = C::new(0.0, 1.0);
const ONE: C = C::new(1.0, 0.0);
/// Tolerance for "a² is real" and similar parameter checks.
const PARAM_TOL: f64 = 1e-12;
/// Allowed relative spread of `Re g'/|g|²` along one level curve of `Re h`.
pub const LEVEL_CURVE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ClassicsError {
    #[error("unsupported parameters: {0}")]
    UnsupportedParameters(String),
    #[error("Re g'/|g|^2 is not a function of Re h (spread {spread:e} along a level curve)")]
    WellDefinednessViolation { spread: f64 },
    #[error("unknown catalog entry '{0}'")]
    UnknownName(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Solutions of `g'' g - g'^2 = c` with `c` real.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum GFamily {
    /// `a z + b`, `c = -a²`.
    Affine { a: C, b: C },
    /// `a e^{b z}`, `c = 0`.
    Exponential { a: C, b: C },
    /// `a sin(b z + c)`, `c_g = -a² b²`.
    Sine { a: C, b: C, c: C },
}

fn is_real(z: C) -> bool {
    z.im.abs() <= PARAM_TOL * z.norm().max(1.0)
}

fn is_imag(z: C) -> bool {
    z.re.abs() <= PARAM_TOL * z.norm().max(1.0)
}

fn nonzero(z: C, what: &str) -> Result<(), ClassicsError> {
    if z.norm() == 0.0 {
        return Err(ClassicsError::UnsupportedParameters(format!("{what} must be non-zero")));
    }
    Ok(())
}

fn real_or_imag(z: C, what: &str) -> Result<(), ClassicsError> {
    if is_real(z) || is_imag(z) {
        Ok(())
    } else {
        Err(ClassicsError::UnsupportedParameters(format!("{what} = {z} must be real or purely imaginary")))
    }
}

fn var() -> Node {
    Node::Var(0)
}

fn scaled(c: C, n: Node) -> Node {
    if c == ONE {
        n
    } else {
        Node::ScalarMul(c, Box::new(n))
    }
}

/// `s z + t`, omitting a zero shift.
fn linear(s: C, t: C) -> Node {
    let lin = scaled(s, var());
    if t == C::new(0.0, 0.0) {
        lin
    } else {
        Node::Sum(vec![lin, Node::Const(t)])
    }
}

impl GFamily {
    pub fn affine(a: impl Into<C>, b: impl Into<C>) -> Self {
        GFamily::Affine { a: a.into(), b: b.into() }
    }

    pub fn exponential(a: impl Into<C>, b: impl Into<C>) -> Self {
        GFamily::Exponential { a: a.into(), b: b.into() }
    }

    pub fn sine(a: impl Into<C>, b: impl Into<C>, c: impl Into<C>) -> Self {
        GFamily::Sine { a: a.into(), b: b.into(), c: c.into() }
    }

    /// The constant `g'' g - g'^2`.
    pub fn c_value(&self) -> C {
        match *self {
            GFamily::Affine { a, .. } => -a * a,
            GFamily::Exponential { .. } => C::new(0.0, 0.0),
            GFamily::Sine { a, b, .. } => -a * a * b * b,
        }
    }

    /// Checks the normalizations for which `h` and `Y` have closed forms.
    pub fn validate(&self) -> Result<(), ClassicsError> {
        match *self {
            GFamily::Affine { a, b } => {
                if a.norm() == 0.0 {
                    nonzero(b, "b")
                } else {
                    real_or_imag(a, "a")
                }
            }
            GFamily::Exponential { a, b } => {
                nonzero(a, "a")?;
                nonzero(b, "b")
            }
            GFamily::Sine { a, b, .. } => {
                nonzero(a, "a")?;
                nonzero(b, "b")?;
                real_or_imag(a, "a")?;
                real_or_imag(b, "b")
            }
        }
    }

    pub fn g_expr(&self) -> HoloExpr {
        let node = match *self {
            GFamily::Affine { a, b } => linear(a, b),
            GFamily::Exponential { a, b } => scaled(a, Node::Exp(Box::new(linear(b, C::new(0.0, 0.0))))),
            GFamily::Sine { a, b, c } => scaled(a, Node::Sin(Box::new(linear(b, c)))),
        };
        HoloExpr::new(node, 1).expect("single variable")
    }

    /// `(g, g', g'')` at `z`.
    pub fn eval(&self, z: C) -> (C, C, C) {
        let j = eval_jet2(&self.g_expr(), &[z]).expect("g is entire");
        (j.value, j.grad[0], j.hess[0])
    }
}

/// `g'' g - g'^2 - c`; identically zero for every family.
pub fn g_residual(g: &GFamily, z: C) -> C {
    let (g0, g1, g2) = g.eval(z);
    g2 * g0 - g1 * g1 - g.c_value()
}

/// An antiderivative of `1/g`.
///
/// * `a z + b`: `(1/a) ln(a z + b)`, written `(1/a) ln z` when `b = 0`; `z/b` when `a = 0`.
/// * `a e^{bz}`: `-e^{-bz}/(ab)`.
/// * `a sin(bz + c)`: `(1/(ab)) ln tan((bz+c)/2)` for real `b` and
///   `(1/(ab)) ln tanh(u/2)` with `u = -i(bz+c)` for imaginary `b`.
pub fn h_from_g(g: &GFamily) -> Result<HoloExpr, ClassicsError> {
    g.validate()?;
    let zero = C::new(0.0, 0.0);
    let node = match *g {
        GFamily::Affine { a, b } if a == zero => scaled(1.0 / b, var()),
        GFamily::Affine { a, b } if b == zero => scaled(1.0 / a, Node::Log(Box::new(var()))),
        GFamily::Affine { a, b } => scaled(1.0 / a, Node::Log(Box::new(linear(a, b)))),
        GFamily::Exponential { a, b } => scaled(-1.0 / (a * b), Node::Exp(Box::new(linear(-b, zero)))),
        GFamily::Sine { a, b, c } => {
            let ratio = if is_real(b) {
                // tan(w/2) = sin(w/2) / sin(w/2 + π/2)
                let half = linear(0.5 * b, 0.5 * c);
                let shifted = linear(0.5 * b, 0.5 * c + FRAC_PI_2);
                Node::Quotient(Box::new(Node::Sin(Box::new(half))), Box::new(Node::Sin(Box::new(shifted))))
            } else {
                // tanh(u/2) = (1 - e^{-u}) / (1 + e^{-u}), with -u = i(bz + c)
                let e = Node::Exp(Box::new(linear(I * b, I * c)));
                Node::Quotient(
                    Box::new(Node::Sum(vec![Node::Const(ONE), Node::ScalarMul(-ONE, Box::new(e.clone()))])),
                    Box::new(Node::Sum(vec![Node::Const(ONE), e])),
                )
            };
            scaled(1.0 / (a * b), Node::Log(Box::new(ratio)))
        }
    };
    Ok(HoloExpr::new(node, 1).expect("single variable"))
}

/// Closed forms of `Y` in `F'' + Y(F) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum YFunc {
    Zero,
    /// `slope · s`
    Linear {
        slope: f64,
    },
    /// `coef · e^{rate s}`
    Exp {
        coef: f64,
        rate: f64,
    },
    /// `coef · sinh(rate s)`
    Sinh {
        coef: f64,
        rate: f64,
    },
    /// `coef · sin(rate s)`
    Sin {
        coef: f64,
        rate: f64,
    },
}

impl YFunc {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            YFunc::Zero => 0.0,
            YFunc::Linear { slope } => slope * s,
            YFunc::Exp { coef, rate } => coef * (rate * s).exp(),
            YFunc::Sinh { coef, rate } => coef * (rate * s).sinh(),
            YFunc::Sin { coef, rate } => coef * (rate * s).sin(),
        }
    }

    pub fn derivative(&self, s: f64) -> f64 {
        match *self {
            YFunc::Zero => 0.0,
            YFunc::Linear { slope } => slope,
            YFunc::Exp { coef, rate } => coef * rate * (rate * s).exp(),
            YFunc::Sinh { coef, rate } => coef * rate * (rate * s).cosh(),
            YFunc::Sin { coef, rate } => coef * rate * (rate * s).cos(),
        }
    }
}

/// The family's `Y` in closed form, without the sampling check.
pub fn y_closed_form(g: &GFamily) -> Result<YFunc, ClassicsError> {
    g.validate()?;
    Ok(match *g {
        GFamily::Affine { a, .. } if a.norm() == 0.0 || is_imag(a) => YFunc::Zero,
        GFamily::Affine { a, .. } => YFunc::Exp { coef: -a.re, rate: -2.0 * a.re },
        GFamily::Exponential { b, .. } => YFunc::Linear { slope: b.norm_sqr() },
        GFamily::Sine { a, b, .. } => {
            let (alpha, beta) = (if is_real(a) { a.re } else { a.im }, if is_real(b) { b.re } else { b.im });
            let rate = 2.0 * alpha * beta;
            match (is_real(a), is_real(b)) {
                (true, true) | (false, false) => YFunc::Sinh { coef: beta / (2.0 * alpha), rate },
                (true, false) => YFunc::Sin { coef: beta / (2.0 * alpha), rate },
                (false, true) => YFunc::Sin { coef: -beta / (2.0 * alpha), rate },
            }
        }
    })
}

/// `Re g'(z) / |g(z)|²`.
pub fn curvature_ratio(g: &GFamily, z: C) -> f64 {
    let (g0, g1, _) = g.eval(z);
    g1.re / g0.norm_sqr()
}

/// Result of tracing level curves `Re h = s` and comparing `Re g'/|g|²` along them.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelCurveReport {
    pub curves: usize,
    pub points: usize,
    /// Largest relative spread of `Re g'/|g|²` along one curve.
    pub max_spread: f64,
    /// Largest relative gap between `Re g'/|g|²` and `-Y(s)`.
    pub max_mismatch: f64,
}

/// Solves `h(z) = target` by Newton's method, `z ← z - (h(z) - target) g(z)`.
fn newton_on_h(h: &HoloExpr, g: &GFamily, start: C, target: C) -> Option<C> {
    let mut z = start;
    for _ in 0..60 {
        let hz = h.eval(&[z]).ok()?;
        let r = hz - target;
        if r.norm() <= 1e-14 * (1.0 + target.norm()) {
            return Some(z);
        }
        z -= r * g.eval(z).0;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
    }
    None
}

/// Samples `n_curves` level curves of `Re h` in `[-2, 2]²` and checks that
/// `Re g'/|g|²` is constant along each and equal to `-Y(Re h)`.
pub fn level_curve_check(
    g: &GFamily,
    y: &YFunc,
    n_curves: usize,
    seed: u64,
) -> Result<LevelCurveReport, ClassicsError> {
    let h = h_from_g(g)?;
    let mut rng = sampling::rng(seed);
    let mut report = LevelCurveReport { curves: 0, points: 0, max_spread: 0.0, max_mismatch: 0.0 };
    let usable = |z: C| -> bool {
        let m = g.eval(z).0.norm();
        (0.2..=20.0).contains(&m) && cut_distance(&h, &[z]).is_ok_and(|d| d > 0.05)
    };
    let mut attempts = 0;
    while report.curves < n_curves && attempts < 100 * n_curves {
        attempts += 1;
        let p = sampling::uniform_in_box(&mut rng, &[(-2.0, 2.0), (-2.0, 2.0)]);
        let z0 = C::new(p[0], p[1]);
        if !usable(z0) {
            continue;
        }
        let h0 = h.eval(&[z0])?;
        let s = h0.re;
        let mut values = vec![curvature_ratio(g, z0)];
        for dir in [1.0, -1.0] {
            let mut z = z0;
            for step in 1..=6 {
                let target = h0 + I * (dir * 0.05 * f64::from(step));
                match newton_on_h(&h, g, z, target) {
                    Some(next) if usable(next) => {
                        z = next;
                        values.push(curvature_ratio(g, z));
                    }
                    _ => break,
                }
            }
        }
        let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        report.max_spread = report.max_spread.max((hi - lo) / scale);
        let want = -y.eval(s);
        let gap = values.iter().map(|v| (v - want).abs()).fold(0.0, f64::max) / scale.max(want.abs());
        report.max_mismatch = report.max_mismatch.max(gap);
        report.points += values.len();
        report.curves += 1;
    }
    Ok(report)
}

/// `Y` for the family, verified along sampled level curves of `Re h`.
pub fn recover_y(g: &GFamily) -> Result<YFunc, ClassicsError> {
    let y = y_closed_form(g)?;
    let report = level_curve_check(g, &y, 20, 0x5eed)?;
    let worst = report.max_spread.max(report.max_mismatch);
    if worst > LEVEL_CURVE_TOL || report.curves == 0 {
        return Err(ClassicsError::WellDefinednessViolation { spread: worst });
    }
    Ok(y)
}
