//! Fixed-step RK4 for `F'' + Y(F) = 0`.

use serde::Serialize;

use super::YFunc;
use crate::realfunc::{RealFunc, Table};

pub const DEFAULT_BLOWUP: f64 = 1e6;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("range [{0}, {1}] must contain the start point and have positive length")]
    BadRange(f64, f64),
    #[error("solution blew up at t = {t} (|F| or |F'| reached {value:e})")]
    BlowUp { t: f64, value: f64 },
}

/// Tabulated solution together with the data that produced it.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FProfile {
    pub y: YFunc,
    pub t0: f64,
    #[serde(rename = "F0")]
    pub f0: f64,
    #[serde(rename = "dF0")]
    pub df0: f64,
    pub step: f64,
    pub range: (f64, f64),
    pub table: Table,
}

impl FProfile {
    pub fn into_real_func(self) -> RealFunc {
        RealFunc::Tabulated(self.table)
    }

    pub fn real_func(&self) -> RealFunc {
        RealFunc::Tabulated(self.table.clone())
    }

    /// Largest `|F'' + Y(F)|` over interior grid points, with `F''` taken as
    /// the five-point central difference of the stored `F'`.
    pub fn grid_residual(&self) -> f64 {
        let (f, d, h) = (&self.table.f, &self.table.df, self.step);
        (2..f.len().saturating_sub(2))
            .map(|i| {
                let dd = (d[i - 2] - 8.0 * d[i - 1] + 8.0 * d[i + 1] - d[i + 2]) / (12.0 * h);
                (dd + self.y.eval(f[i])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Linear lookup of `F` at a grid time.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        let i = ((t - self.range.0) / self.step).round();
        (i >= 0.0 && (i as usize) < self.table.t.len()).then(|| self.table.f[i as usize])
    }
}

fn rk4(y: &YFunc, state: (f64, f64), h: f64) -> (f64, f64) {
    let rhs = |(f, d): (f64, f64)| (d, -y.eval(f));
    let (f, d) = state;
    let k1 = rhs((f, d));
    let k2 = rhs((f + 0.5 * h * k1.0, d + 0.5 * h * k1.1));
    let k3 = rhs((f + 0.5 * h * k2.0, d + 0.5 * h * k2.1));
    let k4 = rhs((f + h * k3.0, d + h * k3.1));
    (f + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), d + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1))
}

fn march(y: &YFunc, start: (f64, f64), t0: f64, h: f64, n: usize, bound: f64) -> Result<Vec<(f64, f64)>, OdeError> {
    let mut out = Vec::with_capacity(n);
    let mut s = start;
    for i in 1..=n {
        s = rk4(y, s, h);
        let big = s.0.abs().max(s.1.abs());
        if !(big <= bound) {
            return Err(OdeError::BlowUp { t: t0 + h * i as f64, value: big });
        }
        out.push(s);
    }
    Ok(out)
}

/// Integrates `F'' = -Y(F)` with `F(t0) = f0`, `F'(t0) = df0` over `range`.
///
/// The grid is `t0 + i·step`; the range ends are rounded to the nearest grid
/// points. Integration runs forward and backward from `t0`.
pub fn solve_f(
    y: &YFunc,
    f0: f64,
    df0: f64,
    t0: f64,
    range: (f64, f64),
    step: f64,
    bound: f64,
) -> Result<FProfile, OdeError> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(OdeError::BadStep(step));
    }
    let (lo, hi) = range;
    if !(lo < hi && lo <= t0 && t0 <= hi) {
        return Err(OdeError::BadRange(lo, hi));
    }
    let back = ((t0 - lo) / step).round() as usize;
    let fwd = ((hi - t0) / step).round() as usize;
    let backward = march(y, (f0, df0), t0, -step, back, bound)?;
    let forward = march(y, (f0, df0), t0, step, fwd, bound)?;
    let mut t = Vec::with_capacity(back + fwd + 1);
    let mut f = Vec::with_capacity(back + fwd + 1);
    let mut df = Vec::with_capacity(back + fwd + 1);
    let start = (f0, df0);
    let states = backward.iter().rev().chain(std::iter::once(&start)).chain(forward.iter());
    for (i, &(a, b)) in states.enumerate() {
        t.push(t0 + step * (i as f64 - back as f64));
        f.push(a);
        df.push(b);
    }
    let range = (t[0], t[t.len() - 1]);
    Ok(FProfile { y: *y, t0, f0, df0, step, range, table: Table { t, f, df } })
}

/// Observed convergence order from three runs at `step`, `step/2`, `step/4`,
/// comparing `F` at the shared grid points: `log2(|F_h - F_{h/2}| / |F_{h/2} - F_{h/4}|)`.
pub fn step_halving_order(
    y: &YFunc,
    f0: f64,
    df0: f64,
    t0: f64,
    range: (f64, f64),
    step: f64,
    bound: f64,
) -> Result<f64, OdeError> {
    let runs = [step, step / 2.0, step / 4.0]
        .iter()
        .map(|&h| solve_f(y, f0, df0, t0, range, h, bound))
        .collect::<Result<Vec<_>, _>>()?;
    let gap = |a: &FProfile, b: &FProfile| -> f64 {
        let ratio = (a.step / b.step).round() as usize;
        a.table.f.iter().enumerate().map(|(i, v)| (v - b.table.f[i * ratio]).abs()).fold(0.0, f64::max)
    };
    Ok((gap(&runs[0], &runs[1]) / gap(&runs[1], &runs[2])).log2())
}
