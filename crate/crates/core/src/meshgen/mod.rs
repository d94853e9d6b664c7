//! Triangle meshes of three-dimensional affine slices of `f = 0`.
//!
//! The field is sampled on a regular grid first and then contoured cell by
//! cell. Each cell face is contoured as a marching square (ambiguous faces go
//! through the asymptotic decider), the face segments are linked into closed
//! loops inside the cell and every loop is fan-triangulated. Neighbouring
//! cells see identical face data, so the result is crack-free wherever no cell
//! was skipped.

use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::io;

use crate::minimality::{delta_grad, f_jet, ImplicitSurface};

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("invalid slice: {0}")]
    Slice(String),
    #[error("the slice contains no zero crossing of f")]
    Empty,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// `ξ(u) = base + u_0 d_0 + u_1 d_1 + u_2 d_2` over a box in `u`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SliceSpec {
    pub base: Vec<f64>,
    pub directions: [Vec<f64>; 3],
    pub bounds: [(f64, f64); 3],
    pub resolution: [usize; 3],
}

impl SliceSpec {
    pub fn new(
        base: Vec<f64>,
        directions: [Vec<f64>; 3],
        bounds: [(f64, f64); 3],
        resolution: [usize; 3],
    ) -> Result<Self, MeshError> {
        let n = base.len();
        for (a, d) in directions.iter().enumerate() {
            if d.len() != n {
                return Err(MeshError::Slice(format!("direction {a} has length {}, expected {n}", d.len())));
            }
            for (b, e) in directions.iter().enumerate() {
                let dot: f64 = d.iter().zip(e).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-12 {
                    return Err(MeshError::Slice("directions must be orthonormal".into()));
                }
            }
        }
        if resolution.iter().any(|&r| r < 2) {
            return Err(MeshError::Slice("resolution must be at least 2 per axis".into()));
        }
        if bounds.iter().any(|&(lo, hi)| !(lo < hi)) {
            return Err(MeshError::Slice("each bound needs lo < hi".into()));
        }
        Ok(Self { base, directions, bounds, resolution })
    }

    /// Slice along three coordinate axes of ℝ^n through `base`.
    pub fn axes(base: Vec<f64>, axes: [usize; 3], bounds: [(f64, f64); 3], res: usize) -> Result<Self, MeshError> {
        let n = base.len();
        if axes.iter().any(|&a| a >= n) || axes[0] == axes[1] || axes[1] == axes[2] || axes[0] == axes[2] {
            return Err(MeshError::Slice(format!("axes {axes:?} must be distinct and below {n}")));
        }
        let unit = |a: usize| {
            let mut v = vec![0.0; n];
            v[a] = 1.0;
            v
        };
        Self::new(base, [unit(axes[0]), unit(axes[1]), unit(axes[2])], bounds, [res; 3])
    }

    /// The surface's preferred view over `[-2, 2]³`, else the first three
    /// coordinates through the origin over the sampling box.
    pub fn default_for(surface: &ImplicitSurface, res: usize) -> Result<Self, MeshError> {
        let b = &surface.sample_box;
        if b.len() < 3 {
            return Err(MeshError::Slice("surface lives in fewer than three dimensions".into()));
        }
        match &surface.view {
            Some(v) => Self::new(v.base.clone(), v.directions.clone(), [(-2.0, 2.0); 3], [res; 3]),
            None => Self::axes(vec![0.0; b.len()], [0, 1, 2], [b[0], b[1], b[2]], res),
        }
    }

    pub fn spacing(&self) -> [f64; 3] {
        std::array::from_fn(|a| (self.bounds[a].1 - self.bounds[a].0) / (self.resolution[a] - 1) as f64)
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.spacing().iter().map(|h| h * h).sum::<f64>().sqrt()
    }

    /// Slice coordinates of grid node `(i, j, k)`.
    pub fn node(&self, idx: [usize; 3]) -> [f64; 3] {
        let h = self.spacing();
        std::array::from_fn(|a| self.bounds[a].0 + h[a] * idx[a] as f64)
    }

    /// Point of ℝ^n for slice coordinates `u`.
    pub fn point(&self, u: [f64; 3]) -> Vec<f64> {
        let mut p = self.base.clone();
        for (d, &c) in self.directions.iter().zip(&u) {
            for (x, v) in p.iter_mut().zip(d) {
                *x += c * v;
            }
        }
        p
    }
}

/// Index of a coordinate name (`x3`, `y1`, `t2`) in `ξ = (x1, y1, …, xm, ym, t1, …, tk)`.
pub fn axis_index(name: &str, m: usize, k: usize) -> Option<usize> {
    let name = name.trim();
    let (head, num) = name.split_at(1.min(name.len()));
    let i: usize = num.parse().ok().filter(|&i| i >= 1)?;
    match head {
        "x" if i <= m => Some(2 * (i - 1)),
        "y" if i <= m => Some(2 * (i - 1) + 1),
        "t" if i <= k => Some(2 * m + i - 1),
        _ => None,
    }
}

/// Sampled field on the slice grid, x-fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub slice: SliceSpec,
    pub values: Vec<f64>,
    pub grad_norm: Vec<f64>,
    /// `true` where the point is singular or outside the domain.
    pub mask: Vec<bool>,
    /// Whether `grad_norm` holds real gradients, enabling the jump check in [`extract_mesh`].
    pub has_gradients: bool,
}

impl Grid {
    pub fn index(&self, idx: [usize; 3]) -> usize {
        let [nx, ny, _] = self.slice.resolution;
        idx[0] + nx * (idx[1] + ny * idx[2])
    }

    fn unindex(&self, i: usize) -> [usize; 3] {
        let [nx, ny, _] = self.slice.resolution;
        [i % nx, (i / nx) % ny, i / (nx * ny)]
    }

    /// Grid built from precomputed values, nothing masked and no gradient data.
    pub fn from_values(slice: SliceSpec, values: Vec<f64>) -> Self {
        let n = values.len();
        assert_eq!(n, slice.resolution.iter().product::<usize>(), "grid size");
        Self { slice, values, grad_norm: vec![f64::NAN; n], mask: vec![false; n], has_gradients: false }
    }
}

/// Evaluates `f` and `|Df|` at every grid node, in parallel over z-slabs.
pub fn sample_field(surface: &ImplicitSurface, slice: &SliceSpec) -> Grid {
    assert_eq!(slice.base.len(), surface.dim(), "slice dimension");
    let [nx, ny, nz] = slice.resolution;
    let slabs: Vec<Vec<(f64, f64, bool)>> = (0..nz)
        .into_par_iter()
        .map(|k| {
            let mut out = Vec::with_capacity(nx * ny);
            for j in 0..ny {
                for i in 0..nx {
                    let xi = slice.point(slice.node([i, j, k]));
                    out.push(match f_jet(surface, &xi) {
                        Ok(jet) => {
                            let g = jet.grad.iter().map(|x| x * x).sum::<f64>().sqrt();
                            let bad = !jet.value.is_finite() || !(g >= delta_grad(&xi));
                            (jet.value, g, bad)
                        }
                        Err(_) => (f64::NAN, 0.0, true),
                    });
                }
            }
            out
        })
        .collect();
    let mut grid = Grid {
        slice: slice.clone(),
        values: Vec::with_capacity(nx * ny * nz),
        grad_norm: Vec::with_capacity(nx * ny * nz),
        mask: Vec::with_capacity(nx * ny * nz),
        has_gradients: true,
    };
    for (v, g, m) in slabs.into_iter().flatten() {
        grid.values.push(v);
        grid.grad_norm.push(g);
        grid.mask.push(m);
    }
    grid
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mesh {
    /// Slice coordinates.
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    /// `|Df|` at each vertex, interpolated along its grid edge.
    pub grad_norm: Vec<f64>,
}

impl Mesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// `V - E + F`.
    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    /// Edges used by exactly one triangle.
    pub fn boundary_edge_count(&self) -> usize {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.values().filter(|&&c| c == 1).count()
    }
}

const MIN_AREA: f64 = 1e-14;
/// Cells whose corner gradients differ by more than this factor sit next to a
/// singularity of `f`, where linear interpolation is meaningless; they are skipped.
const MAX_GRAD_RATIO: f64 = 4.0;

/// Unit cube corner offsets, bit 0 = x, bit 1 = y, bit 2 = z.
fn corner(c: usize) -> [usize; 3] {
    [c & 1, (c >> 1) & 1, (c >> 2) & 1]
}

/// Contour segments of one face as pairs of face-edge numbers `0..4`.
///
/// Corners are `q0 = (0,0)`, `q1 = (1,0)`, `q2 = (1,1)`, `q3 = (0,1)` and face edge
/// `e` joins `q_e` to `q_{e+1}`. Values are relative to the iso level; zero counts
/// as positive.
fn face_segments(v: [f64; 4]) -> Vec<(usize, usize)> {
    let pos: [bool; 4] = std::array::from_fn(|i| v[i] >= 0.0);
    let crossing: Vec<usize> = (0..4).filter(|&e| pos[e] != pos[(e + 1) % 4]).collect();
    match crossing.len() {
        2 => vec![(crossing[0], crossing[1])],
        4 => {
            // Asymptotic decider: sign of the bilinear interpolant at its saddle.
            let denom = v[0] + v[2] - v[1] - v[3];
            let saddle_pos = denom == 0.0 || (v[0] * v[2] - v[1] * v[3]) / denom >= 0.0;
            // Cut off the corners whose sign differs from the saddle's.
            let isolated: Vec<usize> = (0..4).filter(|&i| pos[i] != saddle_pos).collect();
            isolated.iter().map(|&i| ((i + 3) % 4, i)).collect()
        }
        _ => Vec::new(),
    }
}

type EdgeKey = (usize, u8);

/// Contours `grid = iso`. Cells with a masked corner are skipped, as are cells
/// where `f` jumps across an edge by more than twice `|Df|` times the edge length
/// (a branch cut) or where `|Df|` varies across the corners by more than a factor 4.
pub fn extract_mesh(grid: &Grid, iso: f64) -> Result<Mesh, MeshError> {
    let [nx, ny, nz] = grid.slice.resolution;
    let h = grid.slice.spacing();
    let mut mesh = Mesh::default();
    let mut edge_vertex: HashMap<EdgeKey, usize> = HashMap::new();
    let mut weld: HashMap<[u64; 3], usize> = HashMap::new();

    // Edge from node `a` along axis `ax`, with its crossing point if any.
    let crossing = |a: usize, ax: u8| -> Option<([f64; 3], f64)> {
        let ia = grid.unindex(a);
        let mut ib = ia;
        ib[ax as usize] += 1;
        let b = grid.index(ib);
        let (fa, fb) = (grid.values[a] - iso, grid.values[b] - iso);
        if (fa >= 0.0) == (fb >= 0.0) {
            return None;
        }
        let s = fa / (fa - fb);
        let pa = grid.slice.node(ia);
        let mut p = pa;
        p[ax as usize] = pa[ax as usize] + s * h[ax as usize];
        let g = grid.grad_norm[a] + s * (grid.grad_norm[b] - grid.grad_norm[a]);
        Some((p, g))
    };
    let lipschitz_ok = |a: usize, ax: u8| -> bool {
        if !grid.has_gradients {
            return true;
        }
        let mut ib = grid.unindex(a);
        ib[ax as usize] += 1;
        let b = grid.index(ib);
        let jump = (grid.values[a] - grid.values[b]).abs();
        jump <= 2.0 * grid.grad_norm[a].max(grid.grad_norm[b]) * h[ax as usize]
    };

    for k in 0..nz - 1 {
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let nodes: [usize; 8] = std::array::from_fn(|c| {
                    let o = corner(c);
                    grid.index([i + o[0], j + o[1], k + o[2]])
                });
                if nodes.iter().any(|&n| grid.mask[n]) {
                    continue;
                }
                let pos = nodes.map(|n| grid.values[n] >= iso);
                if pos.iter().all(|&p| p) || pos.iter().all(|&p| !p) {
                    continue;
                }
                // Faces as (fixed axis, side); face axes are the other two in increasing order.
                let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
                for fixed in 0..3usize {
                    let (a0, a1) = match fixed {
                        0 => (1usize, 2usize),
                        1 => (0, 2),
                        _ => (0, 1),
                    };
                    for side in 0..2usize {
                        let q: [usize; 4] = [(0, 0), (1, 0), (1, 1), (0, 1)].map(|(s0, s1)| {
                            let mut o = [0usize; 3];
                            o[fixed] = side;
                            o[a0] = s0;
                            o[a1] = s1;
                            nodes[o[0] | (o[1] << 1) | (o[2] << 2)]
                        });
                        // Face edge e joins q_e and q_{e+1}; key it by its lower node.
                        let key = |e: usize| -> EdgeKey {
                            match e {
                                0 => (q[0], a0 as u8),
                                1 => (q[1], a1 as u8),
                                2 => (q[3], a0 as u8),
                                _ => (q[0], a1 as u8),
                            }
                        };
                        let v = q.map(|n| grid.values[n] - iso);
                        for (e0, e1) in face_segments(v) {
                            segments.push((key(e0), key(e1)));
                        }
                    }
                }
                if segments.iter().any(|&(a, b)| !lipschitz_ok(a.0, a.1) || !lipschitz_ok(b.0, b.1)) {
                    continue;
                }
                if grid.has_gradients {
                    let (lo, hi) = nodes.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &n| {
                        (lo.min(grid.grad_norm[n]), hi.max(grid.grad_norm[n]))
                    });
                    if hi > MAX_GRAD_RATIO * lo {
                        continue;
                    }
                }
                for lp in link_loops(&segments) {
                    let ids: Vec<usize> = lp
                        .iter()
                        .map(|&key| {
                            *edge_vertex.entry(key).or_insert_with(|| {
                                let (p, g) = crossing(key.0, key.1).expect("segment endpoints cross");
                                let bits = p.map(f64::to_bits);
                                *weld.entry(bits).or_insert_with(|| {
                                    mesh.vertices.push(p);
                                    mesh.grad_norm.push(g);
                                    mesh.vertices.len() - 1
                                })
                            })
                        })
                        .collect();
                    let grad = cell_gradient(grid, &nodes, h);
                    for t in 1..ids.len().saturating_sub(1) {
                        push_triangle(&mut mesh, [ids[0], ids[t], ids[t + 1]], grad);
                    }
                }
            }
        }
    }
    if mesh.is_empty() {
        return Err(MeshError::Empty);
    }
    Ok(mesh)
}

/// Chains segments into closed loops; every endpoint occurs in exactly two segments.
fn link_loops(segments: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<EdgeKey>> {
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (first, mut cur) = segments[start];
        let mut lp = vec![first];
        while cur != first {
            lp.push(cur);
            let Some(next) = (0..segments.len()).find(|&s| !used[s] && (segments[s].0 == cur || segments[s].1 == cur))
            else {
                break;
            };
            used[next] = true;
            cur = if segments[next].0 == cur { segments[next].1 } else { segments[next].0 };
        }
        loops.push(lp);
    }
    loops
}

/// Gradient of the trilinear interpolant at the cell centre.
fn cell_gradient(grid: &Grid, nodes: &[usize; 8], h: [f64; 3]) -> [f64; 3] {
    let mut g = [0.0; 3];
    for (c, &n) in nodes.iter().enumerate() {
        let o = corner(c);
        for a in 0..3 {
            let sign = if o[a] == 1 { 1.0 } else { -1.0 };
            g[a] += sign * grid.values[n] / (4.0 * h[a]);
        }
    }
    g
}

fn push_triangle(mesh: &mut Mesh, mut t: [usize; 3], grad: [f64; 3]) {
    if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
        return;
    }
    let [a, b, c] = t.map(|i| mesh.vertices[i]);
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let n = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
    let area = 0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    if !(area >= MIN_AREA) {
        return;
    }
    // Normals point towards increasing f.
    if n[0] * grad[0] + n[1] * grad[1] + n[2] * grad[2] < 0.0 {
        t.swap(1, 2);
    }
    mesh.triangles.push(t);
}

/// Nine significant digits, fixed notation for moderate exponents.
fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.8e}");
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: String| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    };
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mant.to_string()))
    }
}

/// Wavefront OBJ text: a header comment, `v` lines, then 1-based `f` lines.
pub fn to_obj(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# minforge mesh: {} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {} {} {}", fmt_num(v[0]), fmt_num(v[1]), fmt_num(v[2]));
    }
    for t in &mesh.triangles {
        let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

pub fn write_mesh(mesh: &Mesh, out: &mut impl io::Write) -> Result<(), MeshError> {
    out.write_all(to_obj(mesh).as_bytes())?;
    Ok(())
}

/// Sidecar summary of a mesh against the exact field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeshStats {
    pub vertex_count: usize,
    pub triangle_count: usize,
    pub max_abs_f: f64,
    pub mean_abs_f: f64,
    pub min_grad_norm: f64,
}

pub fn mesh_stats(surface: &ImplicitSurface, slice: &SliceSpec, mesh: &Mesh) -> MeshStats {
    let fs: Vec<f64> =
        mesh.vertices.par_iter().map(|&u| surface.value(&slice.point(u)).map_or(f64::NAN, f64::abs)).collect();
    let n = fs.len().max(1) as f64;
    MeshStats {
        vertex_count: mesh.vertices.len(),
        triangle_count: mesh.triangles.len(),
        max_abs_f: fs.iter().copied().fold(0.0, f64::max),
        mean_abs_f: fs.iter().sum::<f64>() / n,
        min_grad_norm: mesh.grad_norm.iter().copied().fold(f64::INFINITY, f64::min),
    }
}
