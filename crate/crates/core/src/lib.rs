//! Construction and numerical certification of minimal hypersurfaces of the
//! form `Re h(z) = F(t)` in ℝ^{2m+k}.
//!
//! * [`holo`]: holomorphic expression trees, their text form and exact 2-jets.
//! * [`rholo`]: the ℝ-holomorphic class and its closure combinators.
//! * [`minimality`]: the 1-Laplacian of `f = Re h - F`, level-set projection
//!   and minimality certificates.
//! * [`classics`]: the three-dimensional construction from `h' = 1/g` with the
//!   profile ODE `F'' + Y(F) = 0`, plus the catalog of named surfaces.
//! * [`meshgen`]: triangle meshes of three-dimensional slices.

// `!(a <= b)` is used on purpose so that NaN fails the test.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classics;
pub mod holo;
pub mod meshgen;
pub mod minimality;
pub mod realfunc;
pub mod rholo;
pub mod sampling;

use serde::{Deserialize, Serialize};

/// Outcome of a sampled certification run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Certified,
    Rejected,
    Inconclusive,
    /// Fewer than ten usable samples survived.
    InsufficientSamples,
}

impl Serialize for holo::HoloExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for holo::HoloExpr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        holo::parse_expr(&text).map_err(serde::de::Error::custom)
    }
}
