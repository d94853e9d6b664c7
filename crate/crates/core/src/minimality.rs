//! Minimality of level sets `f = Re h(z) - F(t) = 0` in ℝ^N, `N = 2m + k`.
//!
//! The zero set is minimal at its regular points exactly when the
//! 1-Laplacian `Δ₁f = |Df|² Δf - Σ f_i f_j f_ij` vanishes there. This module
//! assembles the real 2-jet of `f`, evaluates `Δ₁f`, projects sample points
//! onto `f = 0` by damped Newton steps and turns the normalized residuals into
//! a [`MinimalityCertificate`].

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::holo::{cut_distance, eval_jet2, real_jet_of, DomainError, HoloExpr, RealJet, DELTA_CUT};
use crate::realfunc::{RealFunc, RealFuncError};
use crate::rholo::s_form_of;
use crate::sampling;
use crate::Verdict;

pub const DEFAULT_TOL: f64 = 1e-7;
pub const DEFAULT_SAMPLES: usize = 200;
pub const DEFAULT_MAX_ITER: usize = 50;
/// Projection stops once `|f| <= PROJECTION_TOL · |Df| · (1 + |ξ|)`.
pub const PROJECTION_TOL: f64 = 1e-12;
/// Starts with some `|z_k|` below this radius are redrawn.
pub const AXIS_EXCLUSION: f64 = 1e-2;
const EPS_ABS: f64 = 1e-300;
const MIN_SURVIVORS: usize = 10;
const SURVIVAL_FRACTION: f64 = 0.8;

/// Gradient threshold below which a point counts as singular.
pub fn delta_grad(xi: &[f64]) -> f64 {
    1e-6 * (1.0 + norm(xi))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error("ambient dimension 2m + k must be at least 2 (m = {m}, k = {k})")]
    TooSmall { m: usize, k: usize },
    #[error("h has arity {got}, expected m = {m}")]
    HoloArity { got: usize, m: usize },
    #[error("F takes {got} variables, expected k = {k}")]
    RealArity { got: usize, k: usize },
    #[error("sampling box has {got} intervals, expected {n}")]
    BoxDim { got: usize, n: usize },
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Profile(#[from] RealFuncError),
}

impl From<EvalError> for ProjectError {
    fn from(e: EvalError) -> Self {
        ProjectError::Eval(e)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ProjectError {
    #[error("|Df| = {grad_norm:e} at the start point is below the singular threshold")]
    SingularStart { grad_norm: f64 },
    #[error("projection did not converge in {iterations} iterations (|f| = {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("projection ended at a singular point (|Df| = {grad_norm:e})")]
    SingularLimit { grad_norm: f64 },
    #[error(transparent)]
    Eval(EvalError),
}

/// `f(ξ) = Re h(z) - F(t)` with `ξ = (x_1, y_1, …, x_m, y_m, t_1, …, t_k)`.
///
/// `h` may be absent (`m = 0`), in which case `f = -F`; this is how purely
/// real test functions such as the sphere are expressed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImplicitSurface {
    pub name: Option<String>,
    pub h: Option<HoloExpr>,
    #[serde(rename = "F")]
    pub f: RealFunc,
    pub m: usize,
    pub k: usize,
    /// Box for random start points, one `(lo, hi)` per coordinate of ξ.
    pub sample_box: Vec<(f64, f64)>,
    /// Preferred three-dimensional slice for meshing, when the first three
    /// coordinates through the origin are a poor choice.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub view: Option<SliceView>,
}

/// Base point and three orthonormal directions of a default slice.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceView {
    pub base: Vec<f64>,
    pub directions: [Vec<f64>; 3],
}

impl ImplicitSurface {
    pub fn new(h: Option<HoloExpr>, mut f: RealFunc, k: usize) -> Result<Self, SurfaceError> {
        // An expression profile may ignore trailing variables.
        if let RealFunc::Expr { expr } = &f {
            if expr.arity() < k {
                let widened = expr.clone().with_arity(k).expect("widening arity");
                f = RealFunc::Expr { expr: widened };
            }
        }
        let m = h.as_ref().map_or(0, HoloExpr::arity);
        if 2 * m + k < 2 {
            return Err(SurfaceError::TooSmall { m, k });
        }
        if let Some(a) = f.arity() {
            if a != k {
                return Err(SurfaceError::RealArity { got: a, k });
            }
        }
        Ok(Self { name: None, h, f, m, k, sample_box: vec![(-2.0, 2.0); 2 * m + k], view: None })
    }

    /// `Re h(z) = F(t)` with `h` over ℂ^m.
    pub fn holomorphic(h: HoloExpr, f: RealFunc, k: usize) -> Result<Self, SurfaceError> {
        Self::new(Some(h), f, k)
    }

    /// Zero set of `-F` over ℝ^k alone.
    pub fn real_only(f: RealFunc, k: usize) -> Result<Self, SurfaceError> {
        Self::new(None, f, k)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn with_box(mut self, sample_box: Vec<(f64, f64)>) -> Result<Self, SurfaceError> {
        if sample_box.len() != self.dim() {
            return Err(SurfaceError::BoxDim { got: sample_box.len(), n: self.dim() });
        }
        self.sample_box = sample_box;
        Ok(self)
    }

    pub fn with_view(mut self, base: Vec<f64>, directions: [Vec<f64>; 3]) -> Self {
        assert!(base.len() == self.dim() && directions.iter().all(|d| d.len() == self.dim()), "view dimension");
        self.view = Some(SliceView { base, directions });
        self
    }

    pub fn dim(&self) -> usize {
        2 * self.m + self.k
    }

    fn z_part(&self, xi: &[f64]) -> Vec<Complex64> {
        sampling::to_complex(xi, self.m)
    }

    /// Distance of the holomorphic part to its nearest branch cut (infinite if none).
    pub fn cut_distance(&self, xi: &[f64]) -> Result<f64, DomainError> {
        match &self.h {
            Some(h) => cut_distance(h, &self.z_part(xi)),
            None => Ok(f64::INFINITY),
        }
    }

    /// Value alone.
    pub fn value(&self, xi: &[f64]) -> Result<f64, EvalError> {
        f_jet(self, xi).map(|j| j.value)
    }
}

/// Real 2-jet of `f` at ξ.
///
/// The `(x, y)` block comes from the holomorphic jet through the
/// Cauchy–Riemann identities, the `t` block is `-F''`, and the mixed blocks
/// are zero.
pub fn f_jet(surface: &ImplicitSurface, xi: &[f64]) -> Result<RealJet, EvalError> {
    assert_eq!(xi.len(), surface.dim(), "point dimension");
    let n = surface.dim();
    let zm = 2 * surface.m;
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n * n];
    let mut value = 0.0;
    if let Some(h) = &surface.h {
        let rj = real_jet_of(&eval_jet2(h, &surface.z_part(xi))?);
        value = rj.value;
        grad[..zm].copy_from_slice(&rj.grad);
        for i in 0..zm {
            hess[i * n..i * n + zm].copy_from_slice(&rj.hess[i * zm..(i + 1) * zm]);
        }
    }
    let fj = surface.f.eval(&xi[zm..])?;
    value -= fj.value;
    let k = surface.k;
    for a in 0..k {
        grad[zm + a] = -fj.grad[a];
        for b in 0..k {
            hess[(zm + a) * n + zm + b] = -fj.hess[a * k + b];
        }
    }
    Ok(RealJet { value, grad, hess })
}

/// `|g|² tr(H) - gᵀ H g` for a row-major Hessian.
pub fn delta1_of(grad: &[f64], hess: &[f64]) -> f64 {
    let n = grad.len();
    let g2: f64 = grad.iter().map(|g| g * g).sum();
    let trace: f64 = (0..n).map(|i| hess[i * n + i]).sum();
    let mut quad = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| hess[i * n + j] * grad[j]).sum();
        quad += grad[i] * row;
    }
    g2 * trace - quad
}

pub fn delta1(surface: &ImplicitSurface, xi: &[f64]) -> Result<f64, EvalError> {
    f_jet(surface, xi).map(|j| delta1_of(&j.grad, &j.hess))
}

/// `|Δ₁f| / (|Df|² (‖D²f‖_F + ε))`.
pub fn normalized_residual(jet: &RealJet) -> f64 {
    let g2: f64 = jet.grad.iter().map(|g| g * g).sum();
    let frob = jet.hess.iter().map(|h| h * h).sum::<f64>().sqrt();
    delta1_of(&jet.grad, &jet.hess).abs() / (g2 * (frob + EPS_ABS) + EPS_ABS)
}

/// `Re S(z) + |D_z h|² ΔF + Δ₁F`, which equals `-Δ₁f` at every point.
pub fn defequa_residual(surface: &ImplicitSurface, xi: &[f64]) -> Result<f64, EvalError> {
    let zm = 2 * surface.m;
    let (re_s, dh2) = match &surface.h {
        Some(h) => {
            let j = eval_jet2(h, &surface.z_part(xi))?;
            (s_form_of(&j).re, j.grad_norm_sqr())
        }
        None => (0.0, 0.0),
    };
    let fj = surface.f.eval(&xi[zm..])?;
    Ok(re_s + dh2 * fj.laplacian() + fj.one_laplacian())
}

/// Damped Newton projection `ξ ← ξ - α f Df / |Df|²` onto `f = 0`.
///
/// Each step halves `α` until `|f|` decreases. Once `|f| <= tol · |Df| · (1 + |ξ|)`
/// up to three further steps are taken while they keep reducing `|f|`.
pub fn project_to_level(
    surface: &ImplicitSurface,
    start: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<Vec<f64>, ProjectError> {
    let mut xi = start.to_vec();
    let mut jet = f_jet(surface, &xi)?;
    let mut gnorm = norm(&jet.grad);
    if gnorm < delta_grad(&xi) {
        return Err(ProjectError::SingularStart { grad_norm: gnorm });
    }
    let mut polish = 0;
    let mut converged = false;
    for _ in 0..max_iter {
        if !converged && jet.value.abs() <= tol * gnorm * (1.0 + norm(&xi)) {
            converged = true;
        }
        if converged && (polish == 3 || jet.value == 0.0) {
            break;
        }
        match newton_step(surface, &xi, &jet, gnorm) {
            Some((next, next_jet)) => {
                xi = next;
                jet = next_jet;
                gnorm = norm(&jet.grad);
                if converged {
                    polish += 1;
                }
            }
            None if converged => break,
            None => break,
        }
    }
    if !converged && jet.value.abs() > tol * gnorm * (1.0 + norm(&xi)) {
        return Err(ProjectError::NoConvergence { iterations: max_iter, residual: jet.value.abs() });
    }
    if gnorm < delta_grad(&xi) {
        return Err(ProjectError::SingularLimit { grad_norm: gnorm });
    }
    Ok(xi)
}

fn newton_step(surface: &ImplicitSurface, xi: &[f64], jet: &RealJet, gnorm: f64) -> Option<(Vec<f64>, RealJet)> {
    let scale = jet.value / (gnorm * gnorm);
    let mut alpha = 1.0;
    for _ in 0..40 {
        let trial: Vec<f64> = xi.iter().zip(&jet.grad).map(|(x, g)| x - alpha * scale * g).collect();
        if let Ok(tj) = f_jet(surface, &trial) {
            if tj.value.abs() < jet.value.abs() {
                return Some((trial, tj));
            }
        }
        alpha *= 0.5;
    }
    None
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimalitySample {
    pub xi: Vec<f64>,
    pub abs_f: f64,
    pub grad_norm: f64,
    pub delta1: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MinimalityCertificate {
    pub surface: ImplicitSurface,
    pub seed: u64,
    pub tol: f64,
    pub n_samples: usize,
    pub verdict: Verdict,
    /// Starts that failed to project, ended singular, or ended near a branch cut.
    pub discarded: usize,
    /// Set when a single marginal violation triggered a rerun with 4× samples.
    pub retried: bool,
    pub max_residual: f64,
    pub samples: Vec<MinimalitySample>,
}

fn draw_starts(surface: &ImplicitSurface, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = sampling::rng(seed);
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 1000 * n.max(1) {
        tries += 1;
        let p = sampling::uniform_in_box(&mut rng, &surface.sample_box);
        let near_axis = (0..surface.m).any(|k| p[2 * k].hypot(p[2 * k + 1]) < AXIS_EXCLUSION);
        if !near_axis {
            out.push(p);
        }
    }
    out
}

fn evaluate_start(surface: &ImplicitSurface, start: &[f64]) -> Option<MinimalitySample> {
    let xi = project_to_level(surface, start, DEFAULT_MAX_ITER, PROJECTION_TOL).ok()?;
    if surface.cut_distance(&xi).ok()? < DELTA_CUT {
        return None;
    }
    let jet = f_jet(surface, &xi).ok()?;
    let grad_norm = norm(&jet.grad);
    if grad_norm < delta_grad(&xi) {
        return None;
    }
    Some(MinimalitySample {
        abs_f: jet.value.abs(),
        grad_norm,
        delta1: delta1_of(&jet.grad, &jet.hess),
        residual: normalized_residual(&jet),
        xi,
    })
}

fn run_once(surface: &ImplicitSurface, n: usize, seed: u64, tol: f64) -> (MinimalityCertificate, usize) {
    let starts = draw_starts(surface, n, seed);
    let results: Vec<Option<MinimalitySample>> = starts.par_iter().map(|s| evaluate_start(surface, s)).collect();
    let samples: Vec<MinimalitySample> = results.into_iter().flatten().collect();
    let discarded = n - samples.len();
    let violations = samples.iter().filter(|s| !(s.residual <= tol)).count();
    let max_residual = samples.iter().map(|s| s.residual).fold(0.0, f64::max);
    let verdict = if samples.len() < MIN_SURVIVORS {
        Verdict::InsufficientSamples
    } else if violations > 0 {
        Verdict::Rejected
    } else if (samples.len() as f64) < SURVIVAL_FRACTION * n as f64 {
        Verdict::Inconclusive
    } else {
        Verdict::Certified
    };
    let cert = MinimalityCertificate {
        surface: surface.clone(),
        seed,
        tol,
        n_samples: n,
        verdict,
        discarded,
        retried: false,
        max_residual,
        samples,
    };
    (cert, violations)
}

/// Sampled certificate that `Δ₁f ≡ 0 mod f`.
///
/// Seeded uniform starts in the surface's box are projected onto `f = 0`.
/// Survivors must number at least 10 and at least 80% of the starts, and
/// every normalized residual must be `<= tol`. When exactly one residual
/// violates `tol` by at most a factor 10, the run is repeated once with four
/// times as many samples and that run decides.
pub fn certify_minimal(surface: &ImplicitSurface, n_samples: usize, seed: u64, tol: f64) -> MinimalityCertificate {
    let n = n_samples.max(1);
    let (cert, violations) = run_once(surface, n, seed, tol);
    if violations == 1 && cert.max_residual <= 10.0 * tol {
        let (mut again, _) = run_once(surface, 4 * n, seed.wrapping_add(0x9E37_79B9_7F4A_7C15), tol);
        again.retried = true;
        return again;
    }
    cert
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holo::parse_expr;

    fn sphere() -> ImplicitSurface {
        ImplicitSurface::real_only(RealFunc::expr("1 - t1^2 - t2^2 - t3^2").unwrap(), 3).unwrap()
    }

    fn hyperplane() -> ImplicitSurface {
        ImplicitSurface::holomorphic(parse_expr("z1").unwrap(), RealFunc::Identity, 1).unwrap()
    }

    fn clifford() -> ImplicitSurface {
        ImplicitSurface::holomorphic(parse_expr("z1^2 + z2^2").unwrap(), RealFunc::Zero, 0).unwrap()
    }

    #[test]
    fn hyperplane_jet() {
        let j = f_jet(&hyperplane(), &[0.3, -1.0, 0.7]).unwrap();
        assert!((j.value - (0.3 - 0.7)).abs() < 1e-15);
        assert_eq!(j.grad, vec![1.0, 0.0, -1.0]);
        assert!(j.hess.iter().all(|&h| h == 0.0));
        assert_eq!(delta1(&hyperplane(), &[5.0, 1.0, -2.0]).unwrap(), 0.0);
    }

    #[test]
    fn catenoid_jet_at_waist() {
        let s = ImplicitSurface::holomorphic(parse_expr("log(z1)").unwrap(), RealFunc::LnCosh, 1).unwrap();
        let j = f_jet(&s, &[1.0, 0.0, 0.0]).unwrap();
        assert_eq!(j.value, 0.0);
        assert_eq!(j.grad, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn mixed_blocks_vanish() {
        let s =
            ImplicitSurface::holomorphic(parse_expr("exp(z1) * z2").unwrap(), RealFunc::expr("t1 * t2^2").unwrap(), 2)
                .unwrap();
        let j = f_jet(&s, &[0.2, 0.4, -1.0, 0.3, 0.5, 0.7]).unwrap();
        for a in 0..4 {
            for b in 4..6 {
                assert_eq!(j.hess[a * 6 + b], 0.0);
                assert_eq!(j.hess[b * 6 + a], 0.0);
            }
        }
    }

    #[test]
    fn sphere_delta1() {
        assert_eq!(delta1(&sphere(), &[1.0, 0.0, 0.0]).unwrap(), 16.0);
        // Δ₁ = 16 r² on the sphere-function family |x|² - 1.
        let v = delta1(&sphere(), &[0.0, 2.0, 0.0]).unwrap();
        assert!((v - 64.0).abs() < 1e-12);
    }

    #[test]
    fn delta1_is_cubic_in_f() {
        let grad = [0.3, -1.2, 0.5, 2.0];
        let hess = [
            1.0, 0.2, -0.3, 0.0, //
            0.2, -2.0, 0.1, 0.4, //
            -0.3, 0.1, 0.5, -1.1, //
            0.0, 0.4, -1.1, 0.7,
        ];
        let base = delta1_of(&grad, &hess);
        for lambda in [2.0, -3.0] {
            let g: Vec<f64> = grad.iter().map(|x| lambda * x).collect();
            let h: Vec<f64> = hess.iter().map(|x| lambda * x).collect();
            let v = delta1_of(&g, &h);
            assert!((v - lambda.powi(3) * base).abs() <= 1e-12 * v.abs());
        }
    }

    #[test]
    fn projections() {
        let p = project_to_level(&sphere(), &[2.0, 0.0, 0.0], 50, PROJECTION_TOL).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1] == 0.0 && p[2] == 0.0);

        let plane = ImplicitSurface::real_only(RealFunc::expr("-t1").unwrap(), 3).unwrap();
        let p = project_to_level(&plane, &[3.0, 1.0, 2.0], 50, PROJECTION_TOL).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 2.0]);

        let err = project_to_level(&clifford(), &[0.0; 4], 50, PROJECTION_TOL).unwrap_err();
        assert!(matches!(err, ProjectError::SingularStart { .. }));
    }

    #[test]
    fn reprojection_is_a_fixed_point() {
        let s = clifford();
        let p = project_to_level(&s, &[0.8, -0.3, 1.1, 0.4], 50, PROJECTION_TOL).unwrap();
        let q = project_to_level(&s, &p, 50, PROJECTION_TOL).unwrap();
        let moved = norm(&p.iter().zip(&q).map(|(a, b)| a - b).collect::<Vec<_>>());
        assert!(moved <= 1e-14, "moved {moved}");
        assert!(s.value(&p).unwrap().abs() <= 1e-10 * norm(&f_jet(&s, &p).unwrap().grad) * (1.0 + norm(&p)));
    }

    #[test]
    fn defequa_identity_off_the_level_set() {
        let s = ImplicitSurface::holomorphic(parse_expr("z1^2 * z2 + exp(z2)").unwrap(), RealFunc::LnCosh, 1).unwrap();
        for xi in [[0.3, 0.2, -1.0, 0.5, 0.9], [1.5, -0.7, 0.2, 0.1, -1.3]] {
            let a = defequa_residual(&s, &xi).unwrap();
            let b = delta1(&s, &xi).unwrap();
            assert!((a + b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
        // F ≡ 0 reduces to Re S.
        let c = clifford();
        let xi = [0.3, 0.2, -1.0, 0.5];
        let z = [Complex64::new(0.3, 0.2), Complex64::new(-1.0, 0.5)];
        let s_val = crate::rholo::s_form(c.h.as_ref().unwrap(), &z).unwrap();
        assert_eq!(defequa_residual(&c, &xi).unwrap(), s_val.re);
        // Linear h: S = 0 and |D_z h|² = |a|².
        let lin =
            ImplicitSurface::holomorphic(parse_expr("(1+2i) * z1").unwrap(), RealFunc::expr("t1^2 + t2^3").unwrap(), 2)
                .unwrap();
        let xi = [0.1, 0.2, 0.7, -0.4];
        let fj = lin.f.eval(&xi[2..]).unwrap();
        let want = -(5.0 * fj.laplacian() + fj.one_laplacian());
        assert!((defequa_residual(&lin, &xi).unwrap() + want).abs() < 1e-13);
    }

    #[test]
    fn certify_controls() {
        let cone = certify_minimal(&clifford(), 200, 4, DEFAULT_TOL);
        assert_eq!(cone.verdict, Verdict::Certified);
        assert!(cone.samples.len() >= 160);

        let sph = certify_minimal(&sphere(), 100, 4, DEFAULT_TOL);
        assert_eq!(sph.verdict, Verdict::Rejected);
        let want = 16.0 / (4.0 * 12f64.sqrt());
        for s in &sph.samples {
            assert!((s.residual - want).abs() < 1e-9);
        }

        let bad = ImplicitSurface::holomorphic(parse_expr("z1^2 + z2").unwrap(), RealFunc::Zero, 0).unwrap();
        assert_eq!(certify_minimal(&bad, 200, 4, DEFAULT_TOL).verdict, Verdict::Rejected);
    }

    #[test]
    fn surface_validation() {
        assert!(ImplicitSurface::real_only(RealFunc::Identity, 1).is_err());
        assert!(ImplicitSurface::holomorphic(parse_expr("z1").unwrap(), RealFunc::LnCosh, 2).is_err());
        assert!(hyperplane().with_box(vec![(0.0, 1.0)]).is_err());
    }
}
