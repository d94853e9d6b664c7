//! Run configuration: a JSON file merged with command-line flags.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use minforge::classics::catalog::{oracle, CatalogParams};
use minforge::classics::{catalog, CatalogEntry, GFamily};
use minforge::holo::{parse_expr, HoloExpr};
use minforge::meshgen::{axis_index, SliceSpec};
use minforge::minimality::ImplicitSurface;
use minforge::realfunc::{RealFunc, Table};

/// Everything a run depends on. Field names double as JSON keys and flag names.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(rename = "F", skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modulus: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub res: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub allow_empty: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<String>,
    #[serde(rename = "F0", skip_serializing_if = "Option::is_none")]
    pub f0: Option<f64>,
    #[serde(rename = "dF0", skip_serializing_if = "Option::is_none")]
    pub df0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub halving: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sidecar: Option<PathBuf>,
}

/// Problems with the configuration itself; the process exits with 64.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

pub fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

macro_rules! merge_fields {
    ($dst:ident, $src:ident, $($f:ident),*) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).or_else(|e| err(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).or_else(|e| err(format!("bad config {}: {e}", path.display())))
    }

    /// Values set in `flags` replace those in `self`.
    pub fn merge(mut self, flags: RunConfig) -> Self {
        merge_fields!(
            self,
            flags,
            command,
            expr,
            catalog,
            oracle,
            m,
            k,
            f,
            p,
            q,
            c,
            modulus,
            seed,
            samples,
            tol,
            slice,
            base,
            bounds,
            res,
            allow_empty,
            g,
            a,
            b,
            f0,
            df0,
            t0,
            range,
            step,
            bound,
            halving,
            output,
            sidecar
        );
        self
    }

    /// Fills the seed from `MINFORGE_SEED` or 0 so that it is always recorded.
    pub fn materialize_seed(&mut self) -> Result<u64, ConfigError> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        let seed = match std::env::var("MINFORGE_SEED") {
            Ok(v) => v.trim().parse().or_else(|_| err(format!("MINFORGE_SEED='{v}' is not an unsigned integer")))?,
            Err(_) => 0,
        };
        self.seed = Some(seed);
        Ok(seed)
    }

    fn sources(&self) -> usize {
        [self.expr.is_some(), self.catalog.is_some(), self.oracle.is_some()].iter().filter(|&&b| b).count()
    }

    fn check_single_source(&self) -> Result<(), ConfigError> {
        if self.sources() != 1 {
            return err("give exactly one input: expr, catalog or oracle");
        }
        Ok(())
    }

    fn catalog_entry(&self, name: &str) -> Result<CatalogEntry, ConfigError> {
        if name.contains('(') {
            return name.parse().map_err(|e| ConfigError(format!("{e}")));
        }
        let params = CatalogParams {
            k: self.modulus,
            m: self.m,
            p: self.p,
            q: self.q,
            c: self.c.as_deref().map(parse_complex).transpose()?,
        };
        CatalogEntry::from_name(name, &params).map_err(|e| ConfigError(format!("{e}")))
    }

    fn holo(&self, text: &str) -> Result<HoloExpr, ConfigError> {
        let h = parse_expr(text).map_err(|e| ConfigError(format!("cannot parse expression: {e}")))?;
        match self.m {
            Some(m) if m < h.arity() => err(format!("expression uses z{} but m = {m}", h.arity())),
            Some(m) => h.with_arity(m).map_err(|e| ConfigError(e.to_string())),
            None => Ok(h),
        }
    }

    /// `h` for the ℝ-holomorphic certifier.
    pub fn holo_source(&self) -> Result<HoloExpr, ConfigError> {
        self.check_single_source()?;
        if let Some(text) = &self.expr {
            return self.holo(text);
        }
        if let Some(name) = &self.catalog {
            let s = catalog(&self.catalog_entry(name)?).map_err(|e| ConfigError(e.to_string()))?;
            return s.h.ok_or_else(|| ConfigError(format!("catalog entry '{name}' has no holomorphic part")));
        }
        err("the oracles are real level sets; certify needs expr or catalog")
    }

    /// The level set `Re h = F` described by the configuration.
    pub fn surface(&self) -> Result<ImplicitSurface, ConfigError> {
        self.check_single_source()?;
        if let Some(name) = &self.oracle {
            return oracle(name).map_err(|e| ConfigError(e.to_string()));
        }
        if let Some(name) = &self.catalog {
            return catalog(&self.catalog_entry(name)?).map_err(|e| ConfigError(e.to_string()));
        }
        let h = self.holo(self.expr.as_deref().expect("single source"))?;
        let f = match self.f.as_deref() {
            None => RealFunc::Zero,
            Some(spec) => parse_real_func(spec)?,
        };
        // F = zero takes no variables of its own; pad to three dimensions when m = 1.
        let k = self.k.or(f.arity()).unwrap_or(3usize.saturating_sub(2 * h.arity()));
        ImplicitSurface::holomorphic(h, f, k).map_err(|e| ConfigError(e.to_string()))
    }

    /// The mesh slice: explicit axes, else the surface's own default.
    pub fn slice(&self, surface: &ImplicitSurface) -> Result<SliceSpec, ConfigError> {
        let res = self.res.unwrap_or(64);
        let mut spec = match &self.slice {
            None => SliceSpec::default_for(surface, res).map_err(|e| ConfigError(e.to_string()))?,
            Some(text) => {
                let names: Vec<&str> = text.split(',').collect();
                let axes: Vec<usize> = names
                    .iter()
                    .map(|n| {
                        axis_index(n, surface.m, surface.k)
                            .ok_or_else(|| ConfigError(format!("unknown slice axis '{n}'")))
                    })
                    .collect::<Result<_, _>>()?;
                let [a0, a1, a2] = axes[..] else {
                    return err("slice needs exactly three axes, e.g. x1,y1,x2");
                };
                let b = &surface.sample_box;
                SliceSpec::axes(vec![0.0; surface.dim()], [a0, a1, a2], [b[a0], b[a1], b[a2]], res)
                    .map_err(|e| ConfigError(e.to_string()))?
            }
        };
        if let Some(base) = &self.base {
            if base.len() != surface.dim() {
                return err(format!("base has {} coordinates, expected {}", base.len(), surface.dim()));
            }
            spec.base = base.clone();
        }
        if let Some(text) = &self.bounds {
            let (lo, hi) = parse_range(text)?;
            spec.bounds = [(lo, hi); 3];
        }
        SliceSpec::new(spec.base, spec.directions, spec.bounds, spec.resolution).map_err(|e| ConfigError(e.to_string()))
    }

    /// The `g`-family for the profile ODE.
    pub fn g_family(&self) -> Result<GFamily, ConfigError> {
        let name = self.g.as_deref().ok_or_else(|| ConfigError("ode needs --g".into()))?;
        let get = |v: &Option<String>, default: f64| -> Result<Complex64, ConfigError> {
            v.as_deref().map_or(Ok(Complex64::new(default, 0.0)), parse_complex)
        };
        let i = Complex64::new(0.0, 1.0);
        let (a, b, c) = (get(&self.a, 1.0)?, get(&self.b, 0.0)?, get(&self.c, 0.0)?);
        Ok(match name {
            "affine" => GFamily::affine(a, b),
            // The helicoid family g = i a z + b, with Y = 0. A purely imaginary
            // --a is taken as given.
            "affine-imag" | "exponential-pure-imag" => {
                if a.im == 0.0 {
                    GFamily::affine(i * a, b)
                } else if a.re == 0.0 {
                    GFamily::affine(a, b)
                } else {
                    return err(format!("affine-imag needs a real or purely imaginary a, got {a}"));
                }
            }
            "exponential" => GFamily::exponential(a, get(&self.b, 1.0)?),
            "sine" => GFamily::sine(a, get(&self.b, 1.0)?, c),
            // a sinh(bz + c) = -i a sin(i(bz + c))
            "sinh" => GFamily::sine(-i * a, i * get(&self.b, 1.0)?, i * c),
            other => return err(format!("unknown g family '{other}' (affine, affine-imag, exponential, sine, sinh)")),
        })
    }
}

pub fn parse_complex(text: &str) -> Result<Complex64, ConfigError> {
    parse_expr(text)
        .ok()
        .filter(|e| e.arity() == 0)
        .and_then(|e| e.eval(&[]).ok())
        .ok_or_else(|| ConfigError(format!("'{text}' is not a complex constant")))
}

/// `lo:hi`
pub fn parse_range(text: &str) -> Result<(f64, f64), ConfigError> {
    let bad = || ConfigError(format!("range '{text}' must look like lo:hi"));
    let (lo, hi) = text.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    if !(lo < hi) {
        return Err(bad());
    }
    Ok((lo, hi))
}

/// `F` from its text form, or `table:<path>` for a tabulated profile written by `ode`.
pub fn parse_real_func(spec: &str) -> Result<RealFunc, ConfigError> {
    if let Some(path) = spec.strip_prefix("table:") {
        #[derive(Deserialize)]
        struct Wrapped {
            table: Table,
        }
        let text = std::fs::read_to_string(path).or_else(|e| err(format!("cannot read table {path}: {e}")))?;
        let table = serde_json::from_str::<Wrapped>(&text)
            .map(|w| w.table)
            .or_else(|_| serde_json::from_str::<Table>(&text))
            .or_else(|e| err(format!("bad table {path}: {e}")))?;
        if table.t.len() < 2 || table.t.len() != table.f.len() || table.t.len() != table.df.len() {
            return err(format!("table {path} needs matching t, F, F' arrays of length >= 2"));
        }
        return Ok(RealFunc::Tabulated(table));
    }
    spec.parse().map_err(ConfigError)
}
