use num_complex::Complex64;

use super::{DomainError, DomainErrorKind, HoloExpr, Node, DELTA_SING};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Value, complex gradient and complex Hessian of a holomorphic function.
///
/// `hess` is stored row-major and is exactly symmetric: every rule below
/// computes the upper triangle and mirrors it.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: Complex64,
    pub grad: Vec<Complex64>,
    pub hess: Vec<Complex64>,
}

impl Jet2 {
    fn constant(value: Complex64, m: usize) -> Self {
        Self { value, grad: vec![ZERO; m], hess: vec![ZERO; m * m] }
    }

    fn variable(i: usize, value: Complex64, m: usize) -> Self {
        let mut j = Self::constant(value, m);
        j.grad[i] = ONE;
        j
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn hess_at(&self, i: usize, j: usize) -> Complex64 {
        self.hess[i * self.dim() + j]
    }

    /// `Σ |h'_{z_i}|²`.
    pub fn grad_norm_sqr(&self) -> f64 {
        self.grad.iter().map(|g| g.norm_sqr()).sum()
    }

    fn is_finite(&self) -> bool {
        let ok = |c: &Complex64| c.re.is_finite() && c.im.is_finite();
        ok(&self.value) && self.grad.iter().all(ok) && self.hess.iter().all(ok)
    }

    fn scale(mut self, c: Complex64) -> Self {
        self.value *= c;
        self.grad.iter_mut().for_each(|g| *g *= c);
        self.hess.iter_mut().for_each(|h| *h *= c);
        self
    }

    fn add_assign(&mut self, other: &Jet2) {
        self.value += other.value;
        for (a, b) in self.grad.iter_mut().zip(&other.grad) {
            *a += b;
        }
        for (a, b) in self.hess.iter_mut().zip(&other.hess) {
            *a += b;
        }
    }

    fn mul(&self, other: &Jet2) -> Jet2 {
        let m = self.dim();
        let (a, b) = (self.value, other.value);
        let grad = (0..m).map(|i| a * other.grad[i] + b * self.grad[i]).collect();
        let mut hess = vec![ZERO; m * m];
        for i in 0..m {
            for j in i..m {
                let v = a * other.hess[i * m + j]
                    + b * self.hess[i * m + j]
                    + self.grad[i] * other.grad[j]
                    + other.grad[i] * self.grad[j];
                hess[i * m + j] = v;
                hess[j * m + i] = v;
            }
        }
        Jet2 { value: a * b, grad, hess }
    }

    /// Chain rule for a scalar function with value `f0` and derivatives `f1`, `f2`.
    fn compose(&self, f0: Complex64, f1: Complex64, f2: Complex64) -> Jet2 {
        let m = self.dim();
        let grad = self.grad.iter().map(|g| f1 * g).collect();
        let mut hess = vec![ZERO; m * m];
        for i in 0..m {
            for j in i..m {
                let v = f1 * self.hess[i * m + j] + f2 * self.grad[i] * self.grad[j];
                hess[i * m + j] = v;
                hess[j * m + i] = v;
            }
        }
        Jet2 { value: f0, grad, hess }
    }
}

/// Real 2-jet over ℝ^{2m} with coordinates ordered `(x_1, y_1, …, x_m, y_m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RealJet {
    pub value: f64,
    pub grad: Vec<f64>,
    /// Row-major `2m × 2m`.
    pub hess: Vec<f64>,
}

struct Evaluator<'a> {
    z: &'a [Complex64],
    sing: f64,
    path: Vec<usize>,
    min_cut: f64,
}

impl Evaluator<'_> {
    fn fail(&self, kind: DomainErrorKind) -> DomainError {
        DomainError { kind, path: self.path.clone() }
    }

    fn child(&mut self, idx: usize, node: &Node) -> Result<Jet2, DomainError> {
        self.path.push(idx);
        let r = self.eval(node);
        self.path.pop();
        r
    }

    fn note_cut(&mut self, w: Complex64) {
        if w.re <= 0.0 {
            self.min_cut = self.min_cut.min(w.im.abs());
        }
    }

    fn eval(&mut self, node: &Node) -> Result<Jet2, DomainError> {
        let m = self.z.len();
        let jet = match node {
            Node::Var(i) => Jet2::variable(*i, self.z[*i], m),
            Node::Const(c) => Jet2::constant(*c, m),
            Node::Sum(children) => {
                let mut acc = self.child(0, &children[0])?;
                for (k, c) in children.iter().enumerate().skip(1) {
                    let j = self.child(k, c)?;
                    acc.add_assign(&j);
                }
                acc
            }
            Node::Product(children) => {
                let mut acc = self.child(0, &children[0])?;
                for (k, c) in children.iter().enumerate().skip(1) {
                    let j = self.child(k, c)?;
                    acc = acc.mul(&j);
                }
                acc
            }
            Node::Quotient(a, b) => {
                let num = self.child(0, a)?;
                let den = self.child(1, b)?;
                let w = den.value;
                if w.norm() <= self.sing {
                    return Err(self.fail(DomainErrorKind::DivisionByZero));
                }
                let inv = w.inv();
                num.mul(&den.compose(inv, -inv * inv, 2.0 * inv * inv * inv))
            }
            Node::RealPow(a, r) => {
                let base = self.child(0, a)?;
                self.pow(&base, *r)?
            }
            Node::Exp(a) => {
                let arg = self.child(0, a)?;
                let e = arg.value.exp();
                arg.compose(e, e, e)
            }
            Node::Log(a) => {
                let arg = self.child(0, a)?;
                let w = arg.value;
                if w.norm() <= self.sing {
                    return Err(self.fail(DomainErrorKind::LogOfZero));
                }
                self.note_cut(w);
                let inv = w.inv();
                arg.compose(w.ln(), inv, -inv * inv)
            }
            Node::Sin(a) => {
                let arg = self.child(0, a)?;
                let (s, c) = (arg.value.sin(), arg.value.cos());
                arg.compose(s, c, -s)
            }
            Node::ScalarMul(c, a) => self.child(0, a)?.scale(*c),
        };
        if !jet.is_finite() {
            return Err(self.fail(DomainErrorKind::NonFinite));
        }
        Ok(jet)
    }

    fn pow(&mut self, base: &Jet2, r: f64) -> Result<Jet2, DomainError> {
        let w = base.value;
        let near_zero = w.norm() <= self.sing;
        if r.fract() == 0.0 && r.abs() <= i32::MAX as f64 {
            let n = r as i32;
            if n >= 0 {
                let (f0, f1, f2) = match n {
                    0 => (ONE, ZERO, ZERO),
                    1 => (w, ONE, ZERO),
                    _ => {
                        let wn2 = w.powi(n - 2);
                        let nf = f64::from(n);
                        (wn2 * w * w, nf * wn2 * w, nf * (nf - 1.0) * wn2)
                    }
                };
                return Ok(base.compose(f0, f1, f2));
            }
            if near_zero {
                return Err(self.fail(DomainErrorKind::PowOfZeroNegativeExponent));
            }
            let inv = w.inv();
            let p = inv.powi(-n);
            return Ok(base.compose(p, r * p * inv, r * (r - 1.0) * p * inv * inv));
        }
        if near_zero {
            let kind = if r < 0.0 { DomainErrorKind::PowOfZeroNegativeExponent } else { DomainErrorKind::NonFinite };
            return Err(self.fail(kind));
        }
        self.note_cut(w);
        let p = w.powf(r);
        let inv = w.inv();
        Ok(base.compose(p, r * p * inv, r * (r - 1.0) * p * inv * inv))
    }
}

fn run(expr: &HoloExpr, z: &[Complex64]) -> Result<(Jet2, f64), DomainError> {
    assert_eq!(z.len(), expr.arity(), "point has {} coordinates, expression arity is {}", z.len(), expr.arity());
    let norm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut ev = Evaluator { z, sing: DELTA_SING * (1.0 + norm), path: Vec::new(), min_cut: f64::INFINITY };
    let jet = ev.eval(expr.root())?;
    Ok((jet, ev.min_cut))
}

/// Exact value, gradient and Hessian of `expr` at `z`.
///
/// # Panics
///
/// If `z.len()` differs from the expression arity.
pub fn eval_jet2(expr: &HoloExpr, z: &[Complex64]) -> Result<Jet2, DomainError> {
    run(expr, z).map(|(j, _)| j)
}

/// Smallest distance from the argument of any `Log` or non-integer
/// `RealPow` node to the principal branch cut. Infinite when no such node
/// has its argument in the closed left half-plane.
pub fn cut_distance(expr: &HoloExpr, z: &[Complex64]) -> Result<f64, DomainError> {
    run(expr, z).map(|(_, d)| d)
}

/// Real jet of `Re h` over ℝ^{2m}.
///
/// Gradient entries are `(Re h'_k, -Im h'_k)` per variable; the Hessian
/// blocks are `∂²xx = Re h''`, `∂²xy = -Im h''`, `∂²yy = -Re h''`.
pub fn real_parts_jet(expr: &HoloExpr, z: &[Complex64]) -> Result<RealJet, DomainError> {
    eval_jet2(expr, z).map(|j| real_jet_of(&j))
}

pub(crate) fn real_jet_of(j: &Jet2) -> RealJet {
    let m = j.dim();
    let n = 2 * m;
    let mut grad = vec![0.0; n];
    for k in 0..m {
        grad[2 * k] = j.grad[k].re;
        grad[2 * k + 1] = -j.grad[k].im;
    }
    let mut hess = vec![0.0; n * n];
    for a in 0..m {
        for b in 0..m {
            let h = j.hess_at(a, b);
            hess[(2 * a) * n + 2 * b] = h.re;
            hess[(2 * a) * n + 2 * b + 1] = -h.im;
            hess[(2 * a + 1) * n + 2 * b] = -h.im;
            hess[(2 * a + 1) * n + 2 * b + 1] = -h.re;
        }
    }
    RealJet { value: j.value.re, grad, hess }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holo::parse_expr;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn square_jet() {
        let e = parse_expr("z1^2").unwrap();
        let j = eval_jet2(&e, &[c(1.0, 1.0)]).unwrap();
        assert_eq!(j.value, c(0.0, 2.0));
        assert_eq!(j.grad, vec![c(2.0, 2.0)]);
        assert_eq!(j.hess, vec![c(2.0, 0.0)]);
    }

    #[test]
    fn exp_at_origin() {
        let e = parse_expr("exp(z1)").unwrap();
        let j = eval_jet2(&e, &[c(0.0, 0.0)]).unwrap();
        assert_eq!((j.value, j.grad[0], j.hess[0]), (ONE, ONE, ONE));
    }

    #[test]
    fn bilinear() {
        let e = parse_expr("z1*z2").unwrap();
        let j = eval_jet2(&e, &[c(0.0, 1.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(j.value, c(0.0, 2.0));
        assert_eq!(j.grad, vec![c(2.0, 0.0), c(0.0, 1.0)]);
        assert_eq!(j.hess, vec![ZERO, ONE, ONE, ZERO]);
    }

    #[test]
    fn real_gradient_of_re_z_and_square() {
        let e = parse_expr("z1").unwrap();
        let r = real_parts_jet(&e, &[c(0.3, -0.7)]).unwrap();
        assert_eq!(r.grad, vec![1.0, 0.0]);
        let e = parse_expr("z1^2").unwrap();
        let r = real_parts_jet(&e, &[c(1.0, 1.0)]).unwrap();
        assert_eq!(r.grad, vec![2.0, -2.0]);
        assert_eq!(r.hess, vec![2.0, 0.0, 0.0, -2.0]);
    }

    #[test]
    fn domain_errors_carry_kind_and_path() {
        let e = parse_expr("z1 + log(z2)").unwrap();
        let err = eval_jet2(&e, &[ONE, ZERO]).unwrap_err();
        assert_eq!(err.kind, DomainErrorKind::LogOfZero);
        assert_eq!(err.path, vec![1]);

        let e = parse_expr("1 / z1").unwrap();
        assert_eq!(eval_jet2(&e, &[ZERO]).unwrap_err().kind, DomainErrorKind::DivisionByZero);
        let e = parse_expr("z1^-2").unwrap();
        assert_eq!(eval_jet2(&e, &[ZERO]).unwrap_err().kind, DomainErrorKind::PowOfZeroNegativeExponent);
        let e = parse_expr("z1^0.5").unwrap();
        assert_eq!(eval_jet2(&e, &[ZERO]).unwrap_err().kind, DomainErrorKind::NonFinite);
        let e = parse_expr("exp(exp(z1))").unwrap();
        assert_eq!(eval_jet2(&e, &[c(10.0, 0.0)]).unwrap_err().kind, DomainErrorKind::NonFinite);
    }

    #[test]
    fn integer_powers_are_entire() {
        let e = parse_expr("z1^3").unwrap();
        let j = eval_jet2(&e, &[ZERO]).unwrap();
        assert_eq!(j.value, ZERO);
        assert_eq!(cut_distance(&e, &[c(-1.0, 0.0)]).unwrap(), f64::INFINITY);
    }

    #[test]
    fn principal_branch_and_cut_distance() {
        let e = parse_expr("log(z1)").unwrap();
        let j = eval_jet2(&e, &[c(-1.0, 0.0)]).unwrap();
        assert!((j.value.im - std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(cut_distance(&e, &[c(-2.0, 0.25)]).unwrap(), 0.25);
        assert_eq!(cut_distance(&e, &[c(2.0, 0.0)]).unwrap(), f64::INFINITY);
        let e = parse_expr("z1^0.5").unwrap();
        let j = eval_jet2(&e, &[c(4.0, 0.0)]).unwrap();
        assert!((j.value - c(2.0, 0.0)).norm() < 1e-15);
        assert!((j.grad[0] - c(0.25, 0.0)).norm() < 1e-15);
        assert!((j.hess[0] - c(-1.0 / 32.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn quotient_and_reciprocal() {
        let e = parse_expr("z1 / z2").unwrap();
        let j = eval_jet2(&e, &[c(1.0, 0.0), c(2.0, 0.0)]).unwrap();
        assert_eq!(j.value, c(0.5, 0.0));
        assert_eq!(j.grad, vec![c(0.5, 0.0), c(-0.25, 0.0)]);
        assert_eq!(j.hess, vec![ZERO, c(-0.25, 0.0), c(-0.25, 0.0), c(0.25, 0.0)]);
    }
}
