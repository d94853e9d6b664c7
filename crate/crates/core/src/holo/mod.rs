//! Holomorphic expressions over ℂ^m and their exact second-order jets.
//!
//! A [`HoloExpr`] is an immutable tree over a small node grammar. Evaluation
//! propagates a value, a complex gradient and a complex Hessian through the
//! tree (forward-mode 2-jets), so first and second derivatives are exact up
//! to floating-point rounding. [`real_parts_jet`] turns that holomorphic jet
//! into the real gradient and Hessian of `Re h` over ℝ^{2m} using the
//! Cauchy–Riemann identities.

mod jet;
mod parse;

pub(crate) use jet::real_jet_of;
pub use jet::{cut_distance, eval_jet2, real_parts_jet, Jet2, RealJet};
pub(crate) use parse::complex_lit;
pub use parse::{parse_expr, ParseError};

use num_complex::Complex64;
use std::fmt;

/// Singular radius, relative to `1 + |z|`, within which poles and branch
/// points are rejected.
pub const DELTA_SING: f64 = 1e-9;

/// Absolute margin kept from the principal branch cut `{Re w <= 0, Im w = 0}`.
pub const DELTA_CUT: f64 = 1e-3;

/// One node of a holomorphic expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// The complex variable `z_{i+1}` (zero-based index).
    Var(usize),
    Const(Complex64),
    Sum(Vec<Node>),
    Product(Vec<Node>),
    Quotient(Box<Node>, Box<Node>),
    /// Principal-branch power `base^r` with a real exponent.
    RealPow(Box<Node>, f64),
    Exp(Box<Node>),
    /// Principal-branch logarithm.
    Log(Box<Node>),
    Sin(Box<Node>),
    ScalarMul(Complex64, Box<Node>),
}

impl Node {
    /// Largest variable index referenced in the subtree, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::Var(i) => Some(*i),
            Node::Const(_) => None,
            Node::Sum(c) | Node::Product(c) => c.iter().filter_map(Node::max_var).max(),
            Node::Quotient(a, b) => a.max_var().max(b.max_var()),
            Node::RealPow(a, _) | Node::Exp(a) | Node::Log(a) | Node::Sin(a) | Node::ScalarMul(_, a) => a.max_var(),
        }
    }

    /// Returns a copy with every variable index shifted by `offset`.
    pub fn shift_vars(&self, offset: usize) -> Node {
        self.map_vars(&|i| i + offset)
    }

    fn map_vars(&self, f: &dyn Fn(usize) -> usize) -> Node {
        match self {
            Node::Var(i) => Node::Var(f(*i)),
            Node::Const(c) => Node::Const(*c),
            Node::Sum(c) => Node::Sum(c.iter().map(|n| n.map_vars(f)).collect()),
            Node::Product(c) => Node::Product(c.iter().map(|n| n.map_vars(f)).collect()),
            Node::Quotient(a, b) => Node::Quotient(Box::new(a.map_vars(f)), Box::new(b.map_vars(f))),
            Node::RealPow(a, r) => Node::RealPow(Box::new(a.map_vars(f)), *r),
            Node::Exp(a) => Node::Exp(Box::new(a.map_vars(f))),
            Node::Log(a) => Node::Log(Box::new(a.map_vars(f))),
            Node::Sin(a) => Node::Sin(Box::new(a.map_vars(f))),
            Node::ScalarMul(c, a) => Node::ScalarMul(*c, Box::new(a.map_vars(f))),
        }
    }

    fn check(&self, arity: usize) -> Result<(), ExprError> {
        match self {
            Node::Var(i) if *i >= arity => Err(ExprError::VarOutOfRange { index: *i, arity }),
            Node::Var(_) => Ok(()),
            Node::Const(c) if !(c.re.is_finite() && c.im.is_finite()) => Err(ExprError::NonFiniteConstant),
            Node::Const(_) => Ok(()),
            Node::Sum(c) | Node::Product(c) => {
                if c.is_empty() {
                    return Err(ExprError::EmptyChildren);
                }
                c.iter().try_for_each(|n| n.check(arity))
            }
            Node::Quotient(a, b) => {
                a.check(arity)?;
                b.check(arity)
            }
            Node::RealPow(a, r) => {
                if !r.is_finite() {
                    return Err(ExprError::NonFiniteExponent);
                }
                a.check(arity)
            }
            Node::ScalarMul(c, a) => {
                if !(c.re.is_finite() && c.im.is_finite()) {
                    return Err(ExprError::NonFiniteConstant);
                }
                a.check(arity)
            }
            Node::Exp(a) | Node::Log(a) | Node::Sin(a) => a.check(arity),
        }
    }
}

/// Structural problems found when building a [`HoloExpr`].
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ExprError {
    #[error("variable z{} used but arity is {arity}", index + 1)]
    VarOutOfRange { index: usize, arity: usize },
    #[error("RealPow exponent must be finite")]
    NonFiniteExponent,
    #[error("constant must be finite")]
    NonFiniteConstant,
    #[error("Sum and Product need at least one child")]
    EmptyChildren,
}

/// A holomorphic function ℂ^m → ℂ.
#[derive(Clone, Debug, PartialEq)]
pub struct HoloExpr {
    root: Node,
    arity: usize,
}

impl HoloExpr {
    pub fn new(root: Node, arity: usize) -> Result<Self, ExprError> {
        root.check(arity)?;
        Ok(Self { root, arity })
    }

    /// Builds an expression whose arity is the smallest one covering its variables.
    pub fn from_node(root: Node) -> Result<Self, ExprError> {
        let arity = root.max_var().map_or(0, |i| i + 1);
        Self::new(root, arity)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn into_root(self) -> Node {
        self.root
    }

    /// Same tree, declared over `arity` variables.
    pub fn with_arity(self, arity: usize) -> Result<Self, ExprError> {
        Self::new(self.root, arity)
    }

    pub fn var(i: usize, arity: usize) -> Result<Self, ExprError> {
        Self::new(Node::Var(i), arity)
    }

    /// Evaluates only the value.
    pub fn eval(&self, z: &[Complex64]) -> Result<Complex64, DomainError> {
        eval_jet2(self, z).map(|j| j.value)
    }
}

impl fmt::Display for HoloExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&parse::print_node(&self.root))
    }
}

impl std::str::FromStr for HoloExpr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_expr(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DomainErrorKind {
    DivisionByZero,
    LogOfZero,
    PowOfZeroNegativeExponent,
    NonFinite,
}

/// Raised when evaluation hits a pole or branch point.
///
/// `path` lists child indices from the root to the offending node.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{kind:?} at node path {path:?}")]
pub struct DomainError {
    pub kind: DomainErrorKind,
    pub path: Vec<usize>,
}
