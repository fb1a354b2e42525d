//! Graded triangulations of the meridian half-plane.
//!
//! The aperture domain is built from structured blocks (neck, two core boxes at
//! the aperture mouths, and blended blocks out to the truncation arcs) whose
//! quads are split into triangles. Node spacing clusters toward no-slip walls
//! with a uniform viscous-layer band followed by geometric growth.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::ApertureDomain;
use crate::error::{LinerError, Result};

/// Tag carried by every boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    Wall,
    Axis,
    SpherePlus,
    SphereMinus,
}

impl BoundaryTag {
    fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Wall => "wall",
            BoundaryTag::Axis => "axis",
            BoundaryTag::SpherePlus => "sphere_plus",
            BoundaryTag::SphereMinus => "sphere_minus",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "wall" => BoundaryTag::Wall,
            "axis" => BoundaryTag::Axis,
            "sphere_plus" => BoundaryTag::SpherePlus,
            "sphere_minus" => BoundaryTag::SphereMinus,
            _ => return None,
        })
    }
}

/// A boundary edge oriented along the counter-clockwise traversal of its triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshOptions {
    /// Element size in the aperture core [m].
    pub target_h: f64,
    /// Element layers requested inside the viscous thickness √(2ν/ω).
    pub bl_layers: usize,
    /// Kinematic viscosity that sets the viscous thickness [m²/s].
    pub nu: f64,
    /// Ratio between neighbouring element sizes outside the viscous band.
    pub growth: f64,
    /// Half-width of the refined core boxes, in aperture diameters.
    pub core_extent: f64,
    /// Radius-ratio floor below which the mesh is rejected.
    pub min_quality: f64,
}

impl MeshOptions {
    pub fn new(target_h: f64, bl_layers: usize, nu: f64) -> Self {
        Self { target_h, bl_layers, nu, growth: 1.2, core_extent: 2.0, min_quality: 1e-5 }
    }
}

#[derive(Debug, Clone)]
pub struct MeridianMesh {
    /// (r, z) coordinates [m].
    pub vertices: Vec<[f64; 2]>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    /// Thickness of the first element layer at no-slip walls [m].
    pub wall_layer: f64,
    /// √(2ν/ω) at the design frequency [m], if a frequency was given.
    pub viscous_thickness: Option<f64>,
    /// False when wall grading was disabled.
    pub graded: bool,
    pub warnings: Vec<String>,
}

/// Spacing law anchored at a wall: uniform `first` inside `band`, then linear growth.
#[derive(Debug, Clone, Copy)]
struct WallSpacing {
    first: f64,
    band: f64,
    growth: f64,
    cap: f64,
}

impl WallSpacing {
    fn at(&self, dist: f64) -> f64 {
        let d = (dist - self.band).max(0.0);
        (self.first + (self.growth - 1.0) * d).min(self.cap)
    }
}

/// Nodes on [0, len] equidistributing ∫ ds / h(s).
fn distribute(len: f64, spacing: impl Fn(f64) -> f64) -> Vec<f64> {
    let probe = (0..=64).map(|k| spacing(len * k as f64 / 64.0)).fold(f64::INFINITY, f64::min);
    let samples = ((8.0 * len / probe).ceil() as usize).clamp(2000, 4_000_000);
    let ds = len / samples as f64;
    let mut cum = Vec::with_capacity(samples + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    let mut prev = 1.0 / spacing(0.0);
    for k in 1..=samples {
        let cur = 1.0 / spacing(k as f64 * ds);
        acc += 0.5 * (prev + cur) * ds;
        cum.push(acc);
        prev = cur;
    }
    let n = (acc.round() as usize).max(1);
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(0.0);
    let mut seg = 0;
    for j in 1..n {
        let target = acc * j as f64 / n as f64;
        while cum[seg + 1] < target {
            seg += 1;
        }
        let t = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
        nodes.push((seg as f64 + t) * ds);
    }
    nodes.push(len);
    nodes
}

/// Nodes on an arc of length `len` with a wall band at s = 0 and exactly `intervals` intervals.
fn distribute_with_count(len: f64, first: f64, band: f64, intervals: usize) -> Vec<f64> {
    let count = |g: f64| {
        let sp = WallSpacing { first, band, growth: g, cap: f64::INFINITY };
        let n = 4000;
        let ds = len / n as f64;
        (0..n).map(|k| ds / sp.at((k as f64 + 0.5) * ds)).sum::<f64>()
    };
    let target = intervals as f64;
    if count(1.0) <= target {
        return (0..=intervals).map(|k| len * k as f64 / intervals as f64).collect();
    }
    let (mut lo, mut hi) = (1.0, 2.0);
    while count(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if count(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let sp = WallSpacing { first, band, growth: hi, cap: f64::INFINITY };
    let mut nodes = distribute_exact(len, |s| sp.at(s), intervals);
    nodes[intervals] = len;
    nodes
}

fn distribute_exact(len: f64, spacing: impl Fn(f64) -> f64, intervals: usize) -> Vec<f64> {
    let raw = distribute(len, &spacing);
    if raw.len() == intervals + 1 {
        return raw;
    }
    // rescale the density so the count matches
    let samples = 20000;
    let ds = len / samples as f64;
    let mut cum = vec![0.0];
    let mut acc = 0.0;
    for k in 0..samples {
        acc += ds / spacing((k as f64 + 0.5) * ds);
        cum.push(acc);
    }
    let mut nodes = vec![0.0];
    let mut seg = 0;
    for j in 1..intervals {
        let target = acc * j as f64 / intervals as f64;
        while cum[seg + 1] < target {
            seg += 1;
        }
        let t = (target - cum[seg]) / (cum[seg + 1] - cum[seg]);
        nodes.push((seg as f64 + t) * ds);
    }
    nodes.push(len);
    nodes
}

/// Accumulates vertices with coordinate de-duplication.
struct Builder {
    vertices: Vec<[f64; 2]>,
    lookup: HashMap<(i64, i64), usize>,
    quantum: f64,
    triangles: Vec<[usize; 3]>,
}

impl Builder {
    fn new(scale: f64) -> Self {
        Self { vertices: Vec::new(), lookup: HashMap::new(), quantum: scale * 1e-11, triangles: Vec::new() }
    }

    fn vertex(&mut self, p: [f64; 2]) -> usize {
        let key = ((p[0] / self.quantum).round() as i64, (p[1] / self.quantum).round() as i64);
        for dr in -1..=1 {
            for dz in -1..=1 {
                if let Some(&id) = self.lookup.get(&(key.0 + dr, key.1 + dz)) {
                    let q = self.vertices[id];
                    if (q[0] - p[0]).abs() <= self.quantum && (q[1] - p[1]).abs() <= self.quantum {
                        return id;
                    }
                }
            }
        }
        let id = self.vertices.len();
        self.vertices.push(p);
        self.lookup.insert(key, id);
        id
    }

    /// Adds a structured block given as rows of points (`grid[i][j]`).
    fn block(&mut self, grid: &[Vec<[f64; 2]>]) {
        let ids: Vec<Vec<usize>> = grid
            .iter()
            .map(|row| row.iter().map(|&p| self.vertex(p)).collect())
            .collect();
        for i in 0..ids.len() - 1 {
            for j in 0..ids[i].len() - 1 {
                let q = [ids[i][j], ids[i + 1][j], ids[i + 1][j + 1], ids[i][j + 1]];
                self.quad(q);
            }
        }
    }

    fn quad(&mut self, q: [usize; 4]) {
        let p = |k: usize| self.vertices[q[k]];
        let d02 = dist2(p(0), p(2));
        let d13 = dist2(p(1), p(3));
        let tris = if d02 <= d13 {
            [[q[0], q[1], q[2]], [q[0], q[2], q[3]]]
        } else {
            [[q[0], q[1], q[3]], [q[1], q[2], q[3]]]
        };
        for mut t in tris {
            let a = signed_area(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
            if a < 0.0 {
                t.swap(1, 2);
            }
            self.triangles.push(t);
        }
    }
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

pub(crate) fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Radius ratio 2 r_in / r_circ, equal to 1 for an equilateral triangle.
pub fn radius_ratio(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    let la = dist2(b, c).sqrt();
    let lb = dist2(a, c).sqrt();
    let lc = dist2(a, b).sqrt();
    let area = signed_area(a, b, c).abs();
    if area == 0.0 {
        return 0.0;
    }
    let r_in = 2.0 * area / (la + lb + lc);
    let r_circ = la * lb * lc / (4.0 * area);
    2.0 * r_in / r_circ
}

/// Graded mesh of the truncated aperture domain, designed for angular frequency `omega`.
pub fn build_mesh(domain: &ApertureDomain, opts: &MeshOptions, omega: f64) -> Result<MeridianMesh> {
    let a = 0.5 * domain.d_ap;
    let h = domain.h_ap;
    let radius = domain.truncation_radius();
    if radius <= a {
        return Err(LinerError::Mesh(format!(
            "truncation radius {radius:.3e} m does not enclose the aperture mouth (radius {a:.3e} m)"
        )));
    }
    if !(opts.target_h > 0.0 && opts.target_h < domain.d_ap / 4.0) {
        return Err(LinerError::invalid(format!(
            "target_h = {:.3e} m must lie in (0, d_ap/4)",
            opts.target_h
        )));
    }
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(LinerError::invalid("mesh design frequency must be positive"));
    }
    let hmax = opts.target_h;
    let delta_v = (2.0 * opts.nu / omega).sqrt();
    let mut warnings = Vec::new();
    let graded = opts.bl_layers > 0;
    let wall = if graded {
        let first = (delta_v / (1.5 * opts.bl_layers as f64)).min(hmax / 4.0);
        WallSpacing { first, band: delta_v, growth: opts.growth, cap: hmax }
    } else {
        warnings.push("wall grading disabled (bl_layers = 0): viscous layer is not resolved".to_string());
        WallSpacing { first: hmax, band: 0.0, growth: 1.0, cap: hmax }
    };
    // core box half-width, kept inside the truncation radius
    let b = (opts.core_extent * domain.d_ap).max(2.0 * a).min(0.5 * radius);
    if b <= a {
        return Err(LinerError::Mesh("truncation radius too small for a core region around the aperture".into()));
    }

    // 1D distributions
    let r_inner: Vec<f64> = distribute(a, |s| wall.at(a - s));
    let r_outer: Vec<f64> = distribute(b - a, |s| wall.at(s)).into_iter().map(|s| a + s).collect();
    let r_nodes: Vec<f64> = r_inner.iter().copied().chain(r_outer.iter().skip(1).copied()).collect();
    let z_box: Vec<f64> = distribute(b, |s| wall.at(s));
    let z_neck: Vec<f64> = distribute(h, |s| wall.at(s).min(wall.at(h - s)));

    // radial layers from the core boxes to the arcs
    let n_tan = r_nodes.len().max(z_box.len()) - 1;
    let arc_spacing = radius * FRAC_PI_4 / n_tan as f64;
    let far_cap = (1.5 * arc_spacing).max(hmax);
    let radial_len = radius - b;
    let radial = distribute(radial_len, |s| (hmax + (opts.growth - 1.0) * s).min(far_cap));
    let weights: Vec<f64> = radial.iter().map(|s| s / radial_len).collect();

    let mut builder = Builder::new(radius);
    let mut upper: Vec<Vec<Vec<[f64; 2]>>> = Vec::new();

    // core box above the mouth: rows along z, columns along r
    upper.push(z_box.iter().map(|&z| r_nodes.iter().map(|&r| [r, z]).collect()).collect());

    // block above the box: tangential from the axis to the diagonal
    let n_r = r_nodes.len() - 1;
    let diag = radius * std::f64::consts::FRAC_1_SQRT_2;
    let top: Vec<Vec<[f64; 2]>> = weights
        .iter()
        .map(|&w| {
            (0..=n_r)
                .map(|j| {
                    let outer = if j == n_r {
                        [diag, diag]
                    } else {
                        let th = FRAC_PI_4 * j as f64 / n_r as f64;
                        [radius * th.sin(), radius * th.cos()]
                    };
                    let inner = [r_nodes[j], b];
                    blend(inner, outer, w)
                })
                .collect()
        })
        .collect();
    upper.push(top);

    // block beside the box: tangential from the wall to the diagonal
    let n_z = z_box.len() - 1;
    let arc_nodes = distribute_with_count(radius * FRAC_PI_4, wall.first, wall.band, n_z);
    let side: Vec<Vec<[f64; 2]>> = weights
        .iter()
        .map(|&w| {
            (0..=n_z)
                .map(|j| {
                    let outer = if j == n_z {
                        [diag, diag]
                    } else {
                        let phi = arc_nodes[j] / radius;
                        [radius * phi.cos(), radius * phi.sin()]
                    };
                    let inner = [b, z_box[j]];
                    blend(inner, outer, w)
                })
                .collect()
        })
        .collect();
    upper.push(side);

    for blk in &upper {
        builder.block(blk);
    }
    // lower half: mirror through the mid-plane of the plate
    for blk in &upper {
        let mirrored: Vec<Vec<[f64; 2]>> = blk
            .iter()
            .map(|row| row.iter().map(|p| [p[0], -h - p[1]]).collect())
            .collect();
        builder.block(&mirrored);
    }
    // neck
    let neck: Vec<Vec<[f64; 2]>> = z_neck
        .iter()
        .map(|&s| r_inner.iter().map(|&r| [r, -h + s]).collect())
        .collect();
    builder.block(&neck);

    let tol = 1e-9 * radius;
    let classify = |p: [f64; 2], q: [f64; 2]| {
        let on_upper = |x: [f64; 2]| ((x[0].hypot(x[1])) - radius).abs() < tol && x[1] >= -tol;
        let on_lower = |x: [f64; 2]| ((x[0].hypot(x[1] + h)) - radius).abs() < tol && x[1] <= -h + tol;
        if p[0] == 0.0 && q[0] == 0.0 {
            BoundaryTag::Axis
        } else if on_upper(p) && on_upper(q) {
            BoundaryTag::SpherePlus
        } else if on_lower(p) && on_lower(q) {
            BoundaryTag::SphereMinus
        } else {
            BoundaryTag::Wall
        }
    };
    let mut mesh = MeridianMesh::from_parts(builder.vertices, builder.triangles, classify)?;
    mesh.wall_layer = wall.first;
    mesh.viscous_thickness = Some(delta_v);
    mesh.graded = graded;
    mesh.warnings = warnings;
    mesh.check_quality(opts.min_quality)?;
    Ok(mesh)
}

fn blend(inner: [f64; 2], outer: [f64; 2], w: f64) -> [f64; 2] {
    if w == 0.0 {
        return inner;
    }
    if w == 1.0 {
        return outer;
    }
    [(1.0 - w) * inner[0] + w * outer[0], (1.0 - w) * inner[1] + w * outer[1]]
}

/// Closed tube of radius `radius` and length `length` with no-slip lateral wall.
///
/// The end z = length carries [`BoundaryTag::SpherePlus`], the end z = 0
/// [`BoundaryTag::SphereMinus`]. Used for oscillatory pipe-flow checks.
pub fn tube_mesh(radius: f64, length: f64, opts: &MeshOptions, omega: f64) -> Result<MeridianMesh> {
    if !(radius > 0.0 && length > 0.0) {
        return Err(LinerError::invalid("tube dimensions must be positive"));
    }
    let delta_v = (2.0 * opts.nu / omega).sqrt();
    let wall = if opts.bl_layers > 0 {
        let first = (delta_v / (1.5 * opts.bl_layers as f64)).min(opts.target_h / 4.0);
        WallSpacing { first, band: delta_v, growth: opts.growth, cap: opts.target_h }
    } else {
        WallSpacing { first: opts.target_h, band: 0.0, growth: 1.0, cap: opts.target_h }
    };
    let r_nodes = distribute(radius, |s| wall.at(radius - s));
    let z_nodes = distribute(length, |_| opts.target_h * 2.0);
    let mut builder = Builder::new(radius.max(length));
    let grid: Vec<Vec<[f64; 2]>> = z_nodes.iter().map(|&z| r_nodes.iter().map(|&r| [r, z]).collect()).collect();
    builder.block(&grid);
    let tol = 1e-12 * radius.max(length);
    let classify = |p: [f64; 2], q: [f64; 2]| {
        if p[0] == 0.0 && q[0] == 0.0 {
            BoundaryTag::Axis
        } else if (p[1] - length).abs() < tol && (q[1] - length).abs() < tol {
            BoundaryTag::SpherePlus
        } else if p[1].abs() < tol && q[1].abs() < tol {
            BoundaryTag::SphereMinus
        } else {
            BoundaryTag::Wall
        }
    };
    let mut mesh = MeridianMesh::from_parts(builder.vertices, builder.triangles, classify)?;
    mesh.wall_layer = wall.first;
    mesh.viscous_thickness = Some(delta_v);
    mesh.graded = opts.bl_layers > 0;
    Ok(mesh)
}

impl MeridianMesh {
    /// Assembles a mesh from triangles, tagging every boundary edge with `classify`.
    pub fn from_parts(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        classify: impl Fn([f64; 2], [f64; 2]) -> BoundaryTag,
    ) -> Result<Self> {
        let mut edge_use: HashMap<(usize, usize), (usize, usize, usize)> = HashMap::new();
        for t in &triangles {
            if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) <= 0.0 {
                return Err(LinerError::Mesh(format!("triangle {t:?} is degenerate or inverted")));
            }
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let e = edge_use.entry((a.min(b), a.max(b))).or_insert((a, b, 0));
                e.2 += 1;
            }
        }
        let mut boundary = Vec::new();
        for (_, &(a, b, uses)) in edge_use.iter() {
            match uses {
                1 => boundary.push(BoundaryEdge { a, b, tag: classify(vertices[a], vertices[b]) }),
                2 => {}
                n => return Err(LinerError::Mesh(format!("edge ({a}, {b}) shared by {n} triangles"))),
            }
        }
        boundary.sort_by_key(|e| (e.a.min(e.b), e.a.max(e.b)));
        if vertices.iter().any(|p| p[0] < 0.0) {
            return Err(LinerError::Mesh("vertex with negative radius".into()));
        }
        Ok(Self {
            vertices,
            triangles,
            boundary,
            wall_layer: f64::NAN,
            viscous_thickness: None,
            graded: true,
            warnings: Vec::new(),
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.boundary.iter().any(|e| e.tag == tag)
    }

    pub fn min_quality(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| radius_ratio(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn check_quality(&self, floor: f64) -> Result<()> {
        let q = self.min_quality();
        if q < floor {
            return Err(LinerError::Mesh(format!("minimum radius ratio {q:.3e} below floor {floor:.3e}")));
        }
        Ok(())
    }

    /// Smallest height of a triangle measured from a no-slip wall edge.
    pub fn smallest_wall_element(&self) -> f64 {
        let mut wall_edges: HashMap<(usize, usize), ()> = HashMap::new();
        for e in self.boundary.iter().filter(|e| e.tag == BoundaryTag::Wall) {
            wall_edges.insert((e.a.min(e.b), e.a.max(e.b)), ());
        }
        let mut best = f64::INFINITY;
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                if wall_edges.contains_key(&(a.min(b), a.max(b))) {
                    let c = t[(k + 2) % 3];
                    let area = signed_area(self.vertices[a], self.vertices[b], self.vertices[c]);
                    let base = dist2(self.vertices[a], self.vertices[b]).sqrt();
                    best = best.min(2.0 * area / base);
                }
            }
        }
        best
    }

    /// Number of element layers between a wall point and the distance `depth`, measured
    /// along the wall-normal line through `origin` in direction `normal`.
    pub fn layers_along(&self, origin: [f64; 2], normal: [f64; 2], depth: f64) -> usize {
        // count distinct crossings of triangle edges along the segment
        let end = [origin[0] + normal[0] * depth, origin[1] + normal[1] * depth];
        let mut params: Vec<f64> = Vec::new();
        let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                if seen.contains_key(&key) {
                    continue;
                }
                seen.insert(key, ());
                if let Some(s) = segment_param(origin, end, self.vertices[a], self.vertices[b]) {
                    params.push(s);
                }
            }
        }
        params.sort_by(|x, y| x.partial_cmp(y).unwrap());
        params.dedup_by(|x, y| (*x - *y).abs() < 1e-9);
        // the wall itself counts as the first crossing
        params.iter().filter(|&&s| s > 1e-9).count()
    }

    /// Splits every triangle into four through its edge midpoints.
    pub fn refine_uniform(&self) -> Self {
        let mut vertices = self.vertices.clone();
        let mut mids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| {
            *mids.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                let r = if p[0] == 0.0 && q[0] == 0.0 { 0.0 } else { 0.5 * (p[0] + q[0]) };
                vertices.push([r, 0.5 * (p[1] + q[1])]);
                vertices.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for t in &self.triangles {
            let m01 = mid(t[0], t[1], &mut vertices);
            let m12 = mid(t[1], t[2], &mut vertices);
            let m20 = mid(t[2], t[0], &mut vertices);
            triangles.push([t[0], m01, m20]);
            triangles.push([m01, t[1], m12]);
            triangles.push([m20, m12, t[2]]);
            triangles.push([m01, m12, m20]);
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for e in &self.boundary {
            let m = mids[&(e.a.min(e.b), e.a.max(e.b))];
            boundary.push(BoundaryEdge { a: e.a, b: m, tag: e.tag });
            boundary.push(BoundaryEdge { a: m, b: e.b, tag: e.tag });
        }
        Self {
            vertices,
            triangles,
            boundary,
            wall_layer: 0.5 * self.wall_layer,
            viscous_thickness: self.viscous_thickness,
            graded: self.graded,
            warnings: self.warnings.clone(),
        }
    }

    /// Writes the plain-text mesh format.
    pub fn write_text<W: Write>(&self, mut out: W) -> io::Result<()> {
        let mut s = String::new();
        writeln!(s, "# meridian mesh: r z per vertex [m], CCW triangles, tagged boundary edges").ok();
        writeln!(s, "vertices {}", self.vertices.len()).ok();
        for p in &self.vertices {
            writeln!(s, "{:.17e} {:.17e}", p[0], p[1]).ok();
        }
        writeln!(s, "triangles {}", self.triangles.len()).ok();
        for t in &self.triangles {
            writeln!(s, "{} {} {}", t[0], t[1], t[2]).ok();
        }
        writeln!(s, "edges {}", self.boundary.len()).ok();
        for e in &self.boundary {
            writeln!(s, "{} {} {}", e.a, e.b, e.tag.as_str()).ok();
        }
        out.write_all(s.as_bytes())
    }

    /// Reads the format written by [`MeridianMesh::write_text`].
    pub fn read_text<R: BufRead>(input: R) -> Result<Self> {
        let bad = |m: &str| LinerError::Mesh(format!("malformed mesh file: {m}"));
        let mut lines = input.lines().filter(|l| !matches!(l, Ok(s) if s.starts_with('#') || s.trim().is_empty()));
        let mut next = || -> Result<String> { lines.next().ok_or_else(|| bad("unexpected end"))?.map_err(Into::into) };
        let header = |line: String, key: &str| -> Result<usize> {
            let mut it = line.split_whitespace();
            if it.next() != Some(key) {
                return Err(bad(&format!("expected '{key}' section")));
            }
            it.next().and_then(|n| n.parse().ok()).ok_or_else(|| bad("missing count"))
        };
        let nv = header(next()?, "vertices")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let l = next()?;
            let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().map_err(|_| bad(&l))).collect::<Result<_>>()?;
            if v.len() != 2 {
                return Err(bad(&l));
            }
            vertices.push([v[0], v[1]]);
        }
        let nt = header(next()?, "triangles")?;
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let l = next()?;
            let v: Vec<usize> = l.split_whitespace().map(|x| x.parse().map_err(|_| bad(&l))).collect::<Result<_>>()?;
            if v.len() != 3 || v.iter().any(|&i| i >= nv) {
                return Err(bad(&l));
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        let ne = header(next()?, "edges")?;
        let mut tags = HashMap::new();
        for _ in 0..ne {
            let l = next()?;
            let v: Vec<&str> = l.split_whitespace().collect();
            if v.len() != 3 {
                return Err(bad(&l));
            }
            let a: usize = v[0].parse().map_err(|_| bad(&l))?;
            let b: usize = v[1].parse().map_err(|_| bad(&l))?;
            let tag = BoundaryTag::parse(v[2]).ok_or_else(|| bad(&l))?;
            tags.insert((a.min(b), a.max(b)), tag);
        }
        let verts = vertices.clone();
        let lookup = |p: [f64; 2], q: [f64; 2]| {
            let find = |x: [f64; 2]| verts.iter().position(|&v| v == x).unwrap_or(usize::MAX);
            let (a, b) = (find(p), find(q));
            tags.get(&(a.min(b), a.max(b))).copied().unwrap_or(BoundaryTag::Wall)
        };
        let mesh = Self::from_parts(vertices, triangles, lookup)?;
        if mesh.boundary.len() != ne {
            return Err(bad("boundary edge count does not match the triangulation"));
        }
        Ok(mesh)
    }
}

fn segment_param(p0: [f64; 2], p1: [f64; 2], q0: [f64; 2], q1: [f64; 2]) -> Option<f64> {
    let d = [p1[0] - p0[0], p1[1] - p0[1]];
    let e = [q1[0] - q0[0], q1[1] - q0[1]];
    let den = d[0] * e[1] - d[1] * e[0];
    if den.abs() < 1e-300 {
        return None;
    }
    let w = [q0[0] - p0[0], q0[1] - p0[1]];
    let s = (w[0] * e[1] - w[1] * e[0]) / den;
    let t = (w[0] * d[1] - w[1] * d[0]) / den;
    ((0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t)).then_some(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn domain(s: f64) -> ApertureDomain {
        ApertureDomain::new(1e-3, 1e-3, s).unwrap()
    }

    #[test]
    fn distribution_hits_endpoints_and_is_monotone() {
        let sp = WallSpacing { first: 1e-5, band: 5e-5, growth: 1.2, cap: 1e-4 };
        let n = distribute(1e-3, |s| sp.at(s));
        assert_eq!(n[0], 0.0);
        assert_eq!(*n.last().unwrap(), 1e-3);
        assert!(n.windows(2).all(|w| w[1] > w[0]));
        assert!((n[1] - 1e-5).abs() < 3e-6);
        let m = distribute_with_count(0.03, 1e-5, 5e-5, 25);
        assert_eq!(m.len(), 26);
        assert!(m.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn boundary_partition_is_complete() {
        let nu = 14.66e-6;
        let omega = 2.0 * PI * 1000.0;
        let mesh = build_mesh(&domain(40.0), &MeshOptions::new(0.1e-3, 3, nu), omega).unwrap();
        for tag in [BoundaryTag::Wall, BoundaryTag::Axis, BoundaryTag::SpherePlus, BoundaryTag::SphereMinus] {
            assert!(mesh.has_tag(tag), "{tag:?} missing");
        }
        let radius = 40e-3;
        for e in &mesh.boundary {
            let (p, q) = (mesh.vertices[e.a], mesh.vertices[e.b]);
            match e.tag {
                BoundaryTag::Axis => assert!(p[0] == 0.0 && q[0] == 0.0),
                BoundaryTag::SpherePlus => assert!((p[0].hypot(p[1]) - radius).abs() < 1e-9),
                BoundaryTag::SphereMinus => assert!((p[0].hypot(p[1] + 1e-3) - radius).abs() < 1e-9),
                BoundaryTag::Wall => {
                    let on_plate = |x: [f64; 2]| x[1] == 0.0 || x[1] == -1e-3 || (x[0] - 0.5e-3).abs() < 1e-15;
                    assert!(on_plate(p) && on_plate(q), "wall edge off the plate: {p:?} {q:?}");
                }
            }
        }
        // polygonal length of the upper arc approximates a quarter circle
        let arc: f64 = mesh
            .boundary
            .iter()
            .filter(|e| e.tag == BoundaryTag::SpherePlus)
            .map(|e| dist2(mesh.vertices[e.a], mesh.vertices[e.b]).sqrt())
            .sum();
        assert!((arc - PI / 2.0 * radius).abs() < 1e-3 * radius);
    }

    #[test]
    fn viscous_layer_is_resolved() {
        let nu = 14.66e-6;
        let omega = 2.0 * PI * 1000.0;
        let n = 3;
        let mesh = build_mesh(&domain(40.0), &MeshOptions::new(0.24e-3, n, nu), omega).unwrap();
        assert!(mesh.smallest_wall_element() <= 0.048e-3 / n as f64, "{}", mesh.smallest_wall_element());
        let dv = (2.0 * nu / omega).sqrt();
        // plate face, neck wall
        assert!(mesh.layers_along([2e-3, 0.0], [0.0, 1.0], dv) >= n);
        assert!(mesh.layers_along([0.5e-3, -0.5e-3], [-1.0, 0.0], dv) >= n);
        assert!(mesh.layers_along([20e-3, 0.0], [0.0, 1.0], dv) >= n);
    }

    #[test]
    fn vertex_count_grows_sublinearly_with_radius() {
        let o = MeshOptions::new(0.1e-3, 3, 14.66e-6);
        let omega = 2.0 * PI * 1000.0;
        let m1 = build_mesh(&domain(40.0), &o, omega).unwrap();
        let m2 = build_mesh(&domain(80.0), &o, omega).unwrap();
        let ratio = m2.num_vertices() as f64 / m1.num_vertices() as f64;
        assert!(ratio < 4.5, "ratio {ratio}");
    }

    #[test]
    fn uniform_mode_sets_warning() {
        let o = MeshOptions::new(0.1e-3, 0, 14.66e-6);
        let m = build_mesh(&domain(10.0), &o, 2.0 * PI * 1000.0).unwrap();
        assert!(!m.graded);
        assert!(!m.warnings.is_empty());
    }

    #[test]
    fn rejects_bad_geometry() {
        let o = MeshOptions::new(0.1e-3, 3, 14.66e-6);
        assert!(ApertureDomain::new(1e-3, 1e-3, 0.5).is_err());
        assert!(build_mesh(&domain(40.0), &MeshOptions::new(0.3e-3, 3, 14.66e-6), 1000.0).is_err());
        assert!(build_mesh(&domain(40.0), &o, 0.0).is_err());
    }

    #[test]
    fn refinement_and_text_roundtrip() {
        let o = MeshOptions::new(0.2e-3, 2, 14.66e-6);
        let m = build_mesh(&domain(5.0), &o, 2.0 * PI * 500.0).unwrap();
        let r = m.refine_uniform();
        assert_eq!(r.triangles.len(), 4 * m.triangles.len());
        assert_eq!(r.boundary.len(), 2 * m.boundary.len());
        let mut buf = Vec::new();
        m.write_text(&mut buf).unwrap();
        let back = MeridianMesh::read_text(&buf[..]).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(back.triangles, m.triangles);
        let count = |mesh: &MeridianMesh, t| mesh.boundary.iter().filter(|e| e.tag == t).count();
        assert_eq!(count(&back, BoundaryTag::SpherePlus), count(&m, BoundaryTag::SpherePlus));
        assert_eq!(count(&back, BoundaryTag::Axis), count(&m, BoundaryTag::Axis));
    }
}
