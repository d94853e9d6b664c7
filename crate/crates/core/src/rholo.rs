//! The ℝ-holomorphic class: holomorphic `h` with
//! `S(z) := Σ_{i,j} conj(h''_{ij}) h'_i h'_j = μ(z) h(z)` for a real `μ`.
//!
//! Membership is certified by sampling: at seeded Gaussian points the ratio
//! `S / h` must be real. The closure combinators build `c h^r`, `h(z) g(w)`,
//! `h(z) / g(w)`, the arg-lift `i e^{z_{m+1}} h` and Lawson cones.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::holo::{cut_distance, eval_jet2, DomainError, ExprError, HoloExpr, Jet2, Node, DELTA_CUT};
use crate::sampling;
use crate::Verdict;

/// Default realness threshold.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default number of certification samples.
pub const DEFAULT_SAMPLES: usize = 200;
/// `|h|` below `DEGENERACY_FLOOR · |Dh| · (1 + |z|)` marks a degenerate sample.
pub const DEGENERACY_FLOOR: f64 = 1e-8;
const EPS_ABS: f64 = 1e-300;
const MU_FORM_REL: f64 = 1e-9;

/// `S(z) = Σ conj(h''_{ij}) h'_i h'_j` from a jet.
pub fn s_form_of(jet: &Jet2) -> Complex64 {
    let m = jet.dim();
    let mut s = Complex64::new(0.0, 0.0);
    for i in 0..m {
        for j in 0..m {
            s += jet.hess[i * m + j].conj() * jet.grad[i] * jet.grad[j];
        }
    }
    s
}

pub fn s_form(expr: &HoloExpr, z: &[Complex64]) -> Result<Complex64, DomainError> {
    eval_jet2(expr, z).map(|j| s_form_of(&j))
}

/// Everything measured at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct MuSample {
    pub h: Complex64,
    pub s: Complex64,
    pub mu: Option<f64>,
    /// `|Im(S·conj h)| / (|S||h| + ε)`.
    pub residual: f64,
    pub degenerate: bool,
    pub grad_norm_sqr: f64,
    pub hess_frob: f64,
}

pub fn mu_sample_of(jet: &Jet2, z: &[Complex64]) -> MuSample {
    let s = s_form_of(jet);
    let h = jet.value;
    let grad_norm_sqr = jet.grad_norm_sqr();
    let znorm = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let floor = DEGENERACY_FLOOR * grad_norm_sqr.sqrt() * (1.0 + znorm);
    let degenerate = h.norm() < floor;
    let p = s * h.conj();
    let residual = p.im.abs() / (s.norm() * h.norm() + EPS_ABS);
    let mu = (!degenerate).then(|| p.re / h.norm_sqr());
    let hess_frob = jet.hess.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    MuSample { h, s, mu, residual, degenerate, grad_norm_sqr, hess_frob }
}

pub fn mu_sample(expr: &HoloExpr, z: &[Complex64]) -> Result<MuSample, DomainError> {
    eval_jet2(expr, z).map(|j| mu_sample_of(&j, z))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MuValue {
    Real(f64),
    /// `|h|` is below the degeneracy floor, so `μ` is not determined.
    Degenerate,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RholoError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("S/h is not real: residual {residual:e}")]
    RealnessViolation { residual: f64 },
    #[error("invalid combinator argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

/// The real factor `μ` at `z`, or an error when `S/h` is not real to `tol`.
pub fn mu_at(expr: &HoloExpr, z: &[Complex64], tol: f64) -> Result<MuValue, RholoError> {
    let s = mu_sample(expr, z)?;
    match s.mu {
        None => Ok(MuValue::Degenerate),
        Some(_) if s.residual > tol => Err(RholoError::RealnessViolation { residual: s.residual }),
        Some(mu) => Ok(MuValue::Real(mu)),
    }
}

/// Closed form recognised in a sampled `μ` table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MuForm {
    Zero,
    Constant {
        value: f64,
    },
    /// `μ = coefficient · Σ|z_i|²`.
    NormQuadratic {
        coefficient: f64,
    },
    SampledOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MuProfile {
    pub form: MuForm,
    pub table: Vec<(Vec<Complex64>, f64)>,
}

impl MuProfile {
    pub fn from_table(table: Vec<(Vec<Complex64>, f64)>) -> Self {
        Self { form: detect_form(&table), table }
    }
}

fn all_close(values: impl Iterator<Item = f64> + Clone, target: f64) -> bool {
    values.clone().count() > 0 && values.into_iter().all(|v| (v - target).abs() <= MU_FORM_REL * target.abs())
}

fn detect_form(table: &[(Vec<Complex64>, f64)]) -> MuForm {
    if table.is_empty() {
        return MuForm::SampledOnly;
    }
    if table.iter().all(|(_, mu)| mu.abs() <= 1e-12) {
        return MuForm::Zero;
    }
    let mean = |v: &mut dyn Iterator<Item = f64>| {
        let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
        s / n as f64
    };
    let mus = table.iter().map(|(_, mu)| *mu);
    let c = mean(&mut mus.clone());
    if all_close(mus, c) {
        return MuForm::Constant { value: c };
    }
    let ratios = table.iter().map(|(z, mu)| mu / z.iter().map(|c| c.norm_sqr()).sum::<f64>());
    let q = mean(&mut ratios.clone());
    if q.is_finite() && all_close(ratios, q) {
        return MuForm::NormQuadratic { coefficient: q };
    }
    MuForm::SampledOnly
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RholoSample {
    pub z: Vec<Complex64>,
    #[serde(rename = "S")]
    pub s: Complex64,
    pub mu: Option<f64>,
    pub residual: f64,
    pub degenerate: bool,
}

/// Outcome of [`certify_rholo`]. Serializes with a fixed key order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RholoCertificate {
    pub expr: HoloExpr,
    pub arity: usize,
    pub seed: u64,
    pub tol: f64,
    pub n_samples: usize,
    pub verdict: Verdict,
    pub mu_profile: MuForm,
    pub samples: Vec<RholoSample>,
}

impl RholoCertificate {
    pub fn mu_profile(&self) -> MuProfile {
        MuProfile::from_table(self.samples.iter().filter_map(|s| s.mu.map(|mu| (s.z.clone(), mu))).collect())
    }

    pub fn max_residual(&self) -> f64 {
        self.samples.iter().filter(|s| !s.degenerate).map(|s| s.residual).fold(0.0, f64::max)
    }
}

/// Draws `n` seeded Gaussian points where `expr` evaluates and stays
/// `DELTA_CUT` away from every branch cut. Points are drawn in sequential
/// batches and screened in parallel, so the result depends only on `seed`.
pub fn admissible_points(expr: &HoloExpr, n: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = sampling::rng(seed);
    let mut out = Vec::with_capacity(n);
    let mut drawn = 0;
    while out.len() < n && drawn < 100 * n.max(1) {
        let need = n - out.len();
        let batch: Vec<_> = (0..need).map(|_| sampling::complex_gaussian(&mut rng, expr.arity())).collect();
        drawn += need;
        let ok: Vec<bool> =
            batch.par_iter().map(|z| matches!(cut_distance(expr, z), Ok(d) if d >= DELTA_CUT)).collect();
        out.extend(batch.into_iter().zip(ok).filter(|(_, ok)| *ok).map(|(z, _)| z));
    }
    out
}

/// Sampled certification of `S = μ h` with real `μ`.
///
/// Non-degenerate samples decide the verdict: all residuals `<= tol` certify,
/// any residual above `10·tol` rejects. A degenerate sample (`|h|` below the
/// floor) is excluded unless `|S|` is large there relative to `‖h''‖ |Dh|²`,
/// which also rejects. Everything else is inconclusive.
pub fn certify_rholo(expr: &HoloExpr, n_samples: usize, seed: u64, tol: f64) -> RholoCertificate {
    let points = admissible_points(expr, n_samples.max(1), seed);
    let measured: Vec<(Vec<Complex64>, MuSample)> =
        points.into_par_iter().filter_map(|z| mu_sample(expr, &z).ok().map(|s| (z, s))).collect();

    let degenerate_limit = tol.sqrt();
    let mut escalated = false;
    let mut worst: f64 = 0.0;
    let mut live = 0;
    for (_, s) in &measured {
        if s.degenerate {
            let scale = s.hess_frob * s.grad_norm_sqr + EPS_ABS;
            if s.s.norm() / scale > degenerate_limit {
                escalated = true;
            }
        } else {
            live += 1;
            worst = worst.max(s.residual);
        }
    }
    let verdict = if escalated || worst > 10.0 * tol {
        Verdict::Rejected
    } else if live > 0 && worst <= tol {
        Verdict::Certified
    } else {
        Verdict::Inconclusive
    };

    let samples: Vec<RholoSample> = measured
        .into_iter()
        .map(|(z, s)| RholoSample { z, s: s.s, mu: s.mu, residual: s.residual, degenerate: s.degenerate })
        .collect();
    let table = samples.iter().filter_map(|s| s.mu.map(|mu| (s.z.clone(), mu))).collect::<Vec<_>>();
    RholoCertificate {
        expr: expr.clone(),
        arity: expr.arity(),
        seed,
        tol,
        n_samples,
        verdict,
        mu_profile: detect_form(&table),
        samples,
    }
}

fn product_factors(node: Node) -> Vec<Node> {
    match node {
        Node::Product(children) => children,
        other => vec![other],
    }
}

/// `c · h^r`.
pub fn power(expr: &HoloExpr, r: f64, c: Complex64) -> Result<HoloExpr, RholoError> {
    if !r.is_finite() {
        return Err(RholoError::InvalidArgument(format!("exponent {r} is not finite")));
    }
    if c == Complex64::new(0.0, 0.0) {
        return Err(RholoError::InvalidArgument("scalar must be non-zero".into()));
    }
    let mut node = expr.root().clone();
    if r != 1.0 {
        node = Node::RealPow(Box::new(node), r);
    }
    if c != Complex64::new(1.0, 0.0) {
        node = Node::ScalarMul(c, Box::new(node));
    }
    Ok(HoloExpr::new(node, expr.arity())?)
}

/// `h(z) g(w)` over ℂ^{m+n}; `g`'s variables follow `h`'s.
pub fn product(h: &HoloExpr, g: &HoloExpr) -> HoloExpr {
    let m = h.arity();
    let mut factors = product_factors(h.root().clone());
    factors.extend(product_factors(g.root().shift_vars(m)));
    HoloExpr::new(Node::Product(factors), m + g.arity()).expect("shifted variables stay in range")
}

/// `h(z) / g(w)`, built as `h · g^{-1}`.
pub fn quotient(h: &HoloExpr, g: &HoloExpr) -> HoloExpr {
    let inv = power(g, -1.0, Complex64::new(1.0, 0.0)).expect("-1 and 1 are valid");
    product(h, &inv)
}

/// `i e^{z_{m+1}} h(z)`; its real zero set on `Re z_{m+1} = 0` is the graph of `arg h`.
pub fn arg_lift(h: &HoloExpr) -> HoloExpr {
    let m = h.arity();
    let mut factors = vec![Node::Exp(Box::new(Node::Var(m)))];
    factors.extend(product_factors(h.root().clone()));
    let node = Node::ScalarMul(Complex64::new(0.0, 1.0), Box::new(Node::Product(factors)));
    HoloExpr::new(node, m + 1).expect("arity covers the new variable")
}

pub fn exponent_gcd(exponents: &[u32]) -> u32 {
    fn gcd(a: u32, b: u32) -> u32 {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    exponents.iter().copied().fold(0, gcd)
}

/// `c · z_1^{p_1} ⋯ z_m^{p_m}`. Callers should warn when the exponents share a factor.
pub fn lawson_cone(exponents: &[u32], c: Complex64) -> Result<HoloExpr, RholoError> {
    if exponents.is_empty() || exponents.contains(&0) {
        return Err(RholoError::InvalidArgument("exponents must be positive integers".into()));
    }
    if c == Complex64::new(0.0, 0.0) {
        return Err(RholoError::InvalidArgument("scalar must be non-zero".into()));
    }
    let factors: Vec<Node> = exponents
        .iter()
        .enumerate()
        .map(|(k, &p)| if p == 1 { Node::Var(k) } else { Node::RealPow(Box::new(Node::Var(k)), f64::from(p)) })
        .collect();
    let mut node = if factors.len() == 1 { factors.into_iter().next().unwrap() } else { Node::Product(factors) };
    if c != Complex64::new(1.0, 0.0) {
        node = Node::ScalarMul(c, Box::new(node));
    }
    Ok(HoloExpr::new(node, exponents.len())?)
}
