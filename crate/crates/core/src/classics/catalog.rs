//! Named surfaces and reference level sets.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use super::{h_from_g, ClassicsError, GFamily};
use crate::holo::parse_expr;
use crate::minimality::ImplicitSurface;
use crate::realfunc::RealFunc;
use crate::rholo::{arg_lift, lawson_cone};

type C = Complex64;

/// `det` of the 3×3 matrix `(z1 z2 z3; z4 z5 z6; z7 z8 z9)`.
pub const DET3: &str = "z1*z5*z9 - z1*z6*z8 - z2*z4*z9 + z2*z6*z7 + z3*z4*z8 - z3*z5*z7";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CatalogEntry {
    /// `x1² + x2² = cosh² x3`
    Catenoid,
    /// `x2 / x1 = tan x3`
    Helicoid,
    /// `e^{x1} cos t = cos y`
    Scherk,
    /// `tan F = (k/k') cn(t, k)` with `h = i ln tanh(z/2)`.
    DoublyPeriodic { k: f64 },
    /// `Re Σ z_i² = 0` in ℝ^{2m}
    Clifford { m: usize },
    /// `Re det = 0` on 3×3 complex matrices
    Det3,
    /// `Re(c z1^p z2^q) = 0`
    Lawson { p: u32, q: u32, c: C },
    /// `Re(i e^{z2} z1) = 0`
    ArgLiftHelicoid,
}

/// Optional parameters supplied next to a bare catalog name.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CatalogParams {
    pub k: Option<f64>,
    pub m: Option<usize>,
    pub p: Option<u32>,
    pub q: Option<u32>,
    pub c: Option<C>,
}

pub const DEFAULT_MODULUS: f64 = 0.5;

impl CatalogEntry {
    pub const NAMES: [&'static str; 8] =
        ["catenoid", "helicoid", "scherk", "doubly-periodic", "clifford", "det3", "lawson", "arg-lift-helicoid"];

    /// Builds an entry from its name; parameters not given take their defaults
    /// (`k = 0.5`, `m = 2`, `p = q = 1`, `c = 1`).
    pub fn from_name(name: &str, params: &CatalogParams) -> Result<Self, ClassicsError> {
        Ok(match name.trim() {
            "catenoid" => CatalogEntry::Catenoid,
            "helicoid" => CatalogEntry::Helicoid,
            "scherk" => CatalogEntry::Scherk,
            "doubly-periodic" => CatalogEntry::DoublyPeriodic { k: params.k.unwrap_or(DEFAULT_MODULUS) },
            "clifford" => CatalogEntry::Clifford { m: params.m.unwrap_or(2) },
            "det3" => CatalogEntry::Det3,
            "lawson" => CatalogEntry::Lawson {
                p: params.p.unwrap_or(1),
                q: params.q.unwrap_or(1),
                c: params.c.unwrap_or(C::new(1.0, 0.0)),
            },
            "arg-lift-helicoid" => CatalogEntry::ArgLiftHelicoid,
            other => return Err(ClassicsError::UnknownName(other.to_string())),
        })
    }

    pub fn surface(&self) -> Result<ImplicitSurface, ClassicsError> {
        catalog(self)
    }
}

impl fmt::Display for CatalogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogEntry::Catenoid => f.write_str("catenoid"),
            CatalogEntry::Helicoid => f.write_str("helicoid"),
            CatalogEntry::Scherk => f.write_str("scherk"),
            CatalogEntry::DoublyPeriodic { k } => write!(f, "doubly-periodic({k})"),
            CatalogEntry::Clifford { m } => write!(f, "clifford({m})"),
            CatalogEntry::Det3 => f.write_str("det3"),
            CatalogEntry::Lawson { p, q, c } if *c == C::new(1.0, 0.0) => write!(f, "lawson({p},{q})"),
            CatalogEntry::Lawson { p, q, c } => write!(f, "lawson({p},{q},{})", crate::holo::complex_lit(*c)),
            CatalogEntry::ArgLiftHelicoid => f.write_str("arg-lift-helicoid"),
        }
    }
}

impl FromStr for CatalogEntry {
    type Err = ClassicsError;

    /// Accepts a bare name or `name(args)`, e.g. `clifford(3)`, `lawson(2,3)`,
    /// `lawson(2,3,i)` or `doubly-periodic(0.7)`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ClassicsError::UnknownName(s.to_string());
        let Some((name, rest)) = s.split_once('(') else {
            return CatalogEntry::from_name(s, &CatalogParams::default());
        };
        let args: Vec<&str> = rest.strip_suffix(')').ok_or_else(bad)?.split(',').map(str::trim).collect();
        let mut params = CatalogParams::default();
        match (name.trim(), args.as_slice()) {
            ("doubly-periodic", [k]) => params.k = Some(k.parse().map_err(|_| bad())?),
            ("clifford", [m]) => params.m = Some(m.parse().map_err(|_| bad())?),
            ("lawson", [p, q, rest @ ..]) if rest.len() <= 1 => {
                params.p = Some(p.parse().map_err(|_| bad())?);
                params.q = Some(q.parse().map_err(|_| bad())?);
                if let [c] = rest {
                    params.c = Some(parse_expr(c).ok().and_then(|e| e.eval(&[]).ok()).ok_or_else(bad)?);
                }
            }
            _ => return Err(bad()),
        }
        CatalogEntry::from_name(name, &params)
    }
}

fn combo(n: usize, parts: &[(usize, f64)]) -> Vec<f64> {
    let mut v = vec![0.0; n];
    for &(i, c) in parts {
        v[i] = c;
    }
    v
}

fn unsupported(msg: String) -> ClassicsError {
    ClassicsError::UnsupportedParameters(msg)
}

fn cone(text: &str, m: usize) -> Result<ImplicitSurface, ClassicsError> {
    let h = parse_expr(text).expect("catalog expressions parse").with_arity(m).expect("arity covers variables");
    Ok(ImplicitSurface::holomorphic(h, RealFunc::Zero, 0).expect("valid cone"))
}

/// The `(h, F)` pair of a catalog entry, with its sampling box.
pub fn catalog(entry: &CatalogEntry) -> Result<ImplicitSurface, ClassicsError> {
    let three = |g: GFamily, f: RealFunc| -> Result<ImplicitSurface, ClassicsError> {
        Ok(ImplicitSurface::holomorphic(h_from_g(&g)?, f, 1).expect("one t variable"))
    };
    let surface = match *entry {
        CatalogEntry::Catenoid => three(GFamily::affine(1.0, 0.0), RealFunc::LnCosh)?,
        CatalogEntry::Helicoid => three(GFamily::affine(C::new(0.0, 1.0), 0.0), RealFunc::Identity)?,
        CatalogEntry::Scherk => {
            three(GFamily::exponential(1.0, 1.0), RealFunc::expr("-cos(t1)").expect("valid profile"))?
        }
        CatalogEntry::DoublyPeriodic { k } => {
            if !(k > 0.0 && k < 1.0) {
                return Err(unsupported(format!("modulus k = {k} must lie in (0, 1)")));
            }
            let kp = (1.0 - k * k).sqrt();
            let g = GFamily::sine(-1.0, C::new(0.0, 1.0), 0.0);
            three(g, RealFunc::ArctanCn { amplitude: k / kp, modulus: k })?
                .with_box(vec![(0.1, 2.0), (-2.0, 2.0), (-2.0, 2.0)])
                .expect("three intervals")
        }
        CatalogEntry::Clifford { m } => {
            if m == 0 {
                return Err(unsupported("clifford needs m >= 1".into()));
            }
            let terms: Vec<String> = (1..=m).map(|i| format!("z{i}^2")).collect();
            cone(&terms.join(" + "), m)?
        }
        CatalogEntry::Det3 => {
            // Through the identity matrix, moving x1 and x5 together, then x2 and x4:
            // (1 + u/√2)² = v w. Axis-aligned slices of a multilinear form are ruled.
            let mut base = vec![0.0; 18];
            for d in [0, 8, 16] {
                base[d] = 1.0;
            }
            let dirs =
                [combo(18, &[(0, FRAC_1_SQRT_2), (8, FRAC_1_SQRT_2)]), combo(18, &[(2, 1.0)]), combo(18, &[(6, 1.0)])];
            cone(DET3, 9)?.with_view(base, dirs)
        }
        CatalogEntry::Lawson { p, q, c } => {
            let h = lawson_cone(&[p, q], c).map_err(|e| unsupported(e.to_string()))?;
            // Through z2 = 2 with x1 and x2 moving together, so z2 stays away from its singular plane.
            let dirs =
                [combo(4, &[(0, FRAC_1_SQRT_2), (2, FRAC_1_SQRT_2)]), combo(4, &[(1, 1.0)]), combo(4, &[(3, 1.0)])];
            ImplicitSurface::holomorphic(h, RealFunc::Zero, 0)
                .expect("valid cone")
                .with_view(vec![0.0, 0.0, 2.0, 0.0], dirs)
        }
        CatalogEntry::ArgLiftHelicoid => {
            let h = arg_lift(&parse_expr("z1").expect("valid"));
            let dirs = [combo(4, &[(0, 1.0)]), combo(4, &[(1, 1.0)]), combo(4, &[(3, 1.0)])];
            ImplicitSurface::holomorphic(h, RealFunc::Zero, 0).expect("valid cone").with_view(vec![0.0; 4], dirs)
        }
    };
    Ok(surface.with_name(entry.to_string()))
}

pub const ORACLE_NAMES: [&str; 2] = ["sphere3", "hyperplane"];

/// Reference level sets with known `Δ₁`: `sphere3` is `|t|² - 1` in ℝ³
/// (`Δ₁ = 16` on the unit sphere), `hyperplane` is `x1 - t` in ℝ³.
pub fn oracle(name: &str) -> Result<ImplicitSurface, ClassicsError> {
    let s = match name.trim() {
        "sphere3" => ImplicitSurface::real_only(RealFunc::expr("1 - t1^2 - t2^2 - t3^2").expect("valid"), 3),
        "hyperplane" => ImplicitSurface::holomorphic(parse_expr("z1").expect("valid"), RealFunc::Identity, 1),
        other => return Err(ClassicsError::UnknownName(other.to_string())),
    };
    Ok(s.expect("valid oracle").with_name(name.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn on_surface(s: &ImplicitSurface, xi: &[f64]) -> f64 {
        s.value(xi).unwrap().abs()
    }

    #[test]
    fn catenoid_contains_the_waist() {
        let s = catalog(&CatalogEntry::Catenoid).unwrap();
        assert_eq!(s.h.as_ref().unwrap().to_string(), "log(z1)");
        assert_eq!(s.f, RealFunc::LnCosh);
        assert_eq!(on_surface(&s, &[1.0, 0.0, 0.0]), 0.0);
        let t: f64 = 0.8;
        assert!(on_surface(&s, &[0.0, t.cosh(), t]) < 1e-15);
    }

    #[test]
    fn helicoid_relation() {
        let s = catalog(&CatalogEntry::Helicoid).unwrap();
        for t in [-1.0f64, 0.3, 1.4] {
            let r = 1.7;
            assert!(on_surface(&s, &[r * t.cos(), r * t.sin(), t]) < 1e-15);
        }
    }

    #[test]
    fn scherk_relation_on_zero_set() {
        let s = catalog(&CatalogEntry::Scherk).unwrap();
        let (y, t) = (0.4f64, -0.9f64);
        let x = (y.cos() / t.cos()).ln();
        assert!(on_surface(&s, &[x, y, t]) < 1e-15);
        assert!(on_surface(&s, &[x + 0.1, y, t]) > 1e-3);
    }

    #[test]
    fn doubly_periodic_relation() {
        // Re h = -arg tanh(z/2), so tan Re h = -sin y / sinh x, and the zero set
        // is (k/k') cn(t) = -sin y / sinh x.
        let k = 0.5;
        let s = catalog(&CatalogEntry::DoublyPeriodic { k }).unwrap();
        let kp = (1.0f64 - k * k).sqrt();
        let (x, y) = (1.5f64, 0.6f64);
        let zh = Complex64::new(x, y) / 2.0;
        let re_h = -zh.tanh().arg();
        assert!((re_h.tan() + y.sin() / x.sinh()).abs() < 1e-14);
        // pick t with F(t) = Re h
        let target = re_h.tan() * kp / k;
        assert!(target.abs() <= 1.0);
        let mut t = 1.0;
        for _ in 0..50 {
            let (sn, cn, dn) = crate::classics::jacobi::sn_cn_dn(t, k);
            t -= (cn - target) / (-sn * dn);
        }
        assert!(on_surface(&s, &[x, y, t]) < 1e-13);
    }

    #[test]
    fn cn_relation_at_symmetric_modulus() {
        // At k = k' = 1/√2 the relation reads cn(t) = sin y / sinh x up to the sign of t.
        let k = std::f64::consts::FRAC_1_SQRT_2;
        let s = catalog(&CatalogEntry::DoublyPeriodic { k }).unwrap();
        let (x, y) = (1.1f64, -0.5f64);
        let target = -y.sin() / x.sinh();
        let mut t = 1.0;
        for _ in 0..50 {
            let (sn, cn, dn) = crate::classics::jacobi::sn_cn_dn(t, k);
            t -= (cn - target) / (-sn * dn);
        }
        assert!(on_surface(&s, &[x, y, t]) < 1e-13);
    }

    #[test]
    fn cones() {
        let s = catalog(&CatalogEntry::Clifford { m: 2 }).unwrap();
        assert_eq!(s.h.as_ref().unwrap().to_string(), "z1^2 + z2^2");
        assert_eq!((s.m, s.k, s.f.clone()), (2, 0, RealFunc::Zero));
        let d = catalog(&CatalogEntry::Det3).unwrap();
        assert_eq!(d.m, 9);
        let z: Vec<Complex64> = (1..=9).map(|i| Complex64::new(f64::from(i), 0.0)).collect();
        assert_eq!(d.h.as_ref().unwrap().eval(&z).unwrap(), Complex64::new(0.0, 0.0));
        let l = catalog(&CatalogEntry::Lawson { p: 2, q: 3, c: Complex64::new(1.0, 0.0) }).unwrap();
        assert_eq!(l.h.as_ref().unwrap().to_string(), "z1^2 * z2^3");
    }

    #[test]
    fn imaginary_lawson_scalar_gives_the_arctan_relation() {
        // c = i: the zero set is p·arctan(y1/x1) + q·arctan(y2/x2) = 0 for x1, x2 > 0.
        let (p, q) = (2u32, 3u32);
        let s = catalog(&CatalogEntry::Lawson { p, q, c: Complex64::new(0.0, 1.0) }).unwrap();
        for (theta, r1, r2) in [(0.3f64, 1.0f64, 0.5f64), (-0.6, 1.7, 2.2), (0.05, 0.3, 1.1)] {
            let phi = -f64::from(p) * theta / f64::from(q);
            let xi = [r1 * theta.cos(), r1 * theta.sin(), r2 * phi.cos(), r2 * phi.sin()];
            let rel = f64::from(p) * (xi[1] / xi[0]).atan() + f64::from(q) * (xi[3] / xi[2]).atan();
            assert!(rel.abs() < 1e-15);
            assert!(on_surface(&s, &xi) < 1e-13);
            let off = [xi[0], xi[1] + 0.1, xi[2], xi[3]];
            assert!(on_surface(&s, &off) > 1e-4);
        }
    }

    #[test]
    fn names_round_trip() {
        for text in ["catenoid", "doubly-periodic(0.7)", "clifford(3)", "lawson(2,3)", "lawson(1,2,1i)", "det3"] {
            let e: CatalogEntry = text.parse().unwrap();
            assert_eq!(e.to_string(), text);
        }
        assert_eq!("clifford".parse::<CatalogEntry>().unwrap(), CatalogEntry::Clifford { m: 2 });
        assert!("torus".parse::<CatalogEntry>().is_err());
        assert!(catalog(&CatalogEntry::DoublyPeriodic { k: 1.0 }).is_err());
        assert!(oracle("cube").is_err());
    }
}
