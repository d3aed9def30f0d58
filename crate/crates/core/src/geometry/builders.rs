//! Meshes for the four specimen types. Each is a quadrilateral layout in the
//! x–y plane extruded by one element through the thickness `g`.
//!
//! Conventions: Ex. 1 style gap strips put the metal at `x ∈ [0, l]` and the
//! tool at `x = l + s`. Specimens put the metal below the surface, the
//! electrolyte above it and the tool on the top face.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{EcmError, Result};
use crate::geometry::mesh::{Mesh, Region};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum GeometrySpec {
    GapStrip(GapStrip),
    Planar(Specimen),
    Curved(CurvedSpecimen),
    Rough(RoughSurface),
}

/// Square metal block next to a rectangular electrolyte gap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapStrip {
    pub l: f64,
    pub s: f64,
    pub g: f64,
}

/// Flat specimen of width `l`; the metal reaches `depth` below the surface.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Specimen {
    pub l: f64,
    pub s: f64,
    pub g: f64,
    pub depth: f64,
}

/// Specimen whose surface carries a linear elevation at `x = 0` followed by
/// a parabolic bump that vanishes at `x2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvedSpecimen {
    pub l: f64,
    pub s: f64,
    pub g: f64,
    pub depth: f64,
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
    pub vertex: [f64; 2],
}

/// Periodic rounded triangular spikes on a flat base at `y = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoughSurface {
    pub w: f64,
    /// Gap between the spike tips and the tool.
    pub s: f64,
    /// Metal depth below the valleys.
    pub h: f64,
    /// Spike height.
    pub p: f64,
    /// Tip radius.
    pub r: f64,
    /// Half base width of a spike.
    pub x1: f64,
    /// Depth of the uniformly refined band below the valleys.
    pub y1: f64,
    pub g: f64,
    #[serde(default = "default_spikes")]
    pub spikes: usize,
}

fn default_spikes() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSpec {
    /// Elements along the metal edge (gap strip) or across the specimen width.
    pub divisions: usize,
    /// Gap strip only: divisions along the top edge; the bottom keeps `divisions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_divisions: Option<usize>,
    /// Element layers across the gap; derived from the element size when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_layers: Option<usize>,
    /// Specimens: number of 2:1 coarsening layers below the refined zone.
    #[serde(default = "default_coarsening")]
    pub coarsening: usize,
    /// Specimens: depth of the refined zone as a fraction of `l`.
    #[serde(default = "default_refined")]
    pub refined_fraction: f64,
    /// Rough surface: growth factor of the graded layers.
    #[serde(default = "default_growth")]
    pub growth: f64,
}

fn default_coarsening() -> usize {
    1
}
fn default_refined() -> f64 {
    0.25
}
fn default_growth() -> f64 {
    1.2
}

impl MeshSpec {
    pub fn uniform(divisions: usize) -> Self {
        Self {
            divisions,
            top_divisions: None,
            gap_layers: None,
            coarsening: default_coarsening(),
            refined_fraction: default_refined(),
            growth: default_growth(),
        }
    }
}

pub fn build_scenario_mesh(geometry: &GeometrySpec, spec: &MeshSpec) -> Result<Mesh> {
    if spec.divisions == 0 {
        return Err(EcmError::Mesh("divisions must be positive".into()));
    }
    match geometry {
        GeometrySpec::GapStrip(g) => gap_strip(g, spec),
        GeometrySpec::Planar(p) => {
            positive(&[("l", p.l), ("s", p.s), ("g", p.g), ("depth", p.depth)])?;
            specimen(p.l, p.s, p.g, p.depth, &|_| 0.0, spec)
        }
        GeometrySpec::Curved(c) => {
            positive(&[("l", c.l), ("s", c.s), ("g", c.g), ("depth", c.depth), ("x1", c.x1), ("x2", c.x2)])?;
            let profile = CurvedProfile::new(c)?;
            specimen(c.l, c.s, c.g, c.depth, &|x| profile.height(x), spec)
        }
        GeometrySpec::Rough(r) => rough(r, spec),
    }
}

fn positive(dims: &[(&str, f64)]) -> Result<()> {
    for (name, v) in dims {
        if !(*v > 0.0) || !v.is_finite() {
            return Err(EcmError::Mesh(format!("dimension {name} = {v} must be positive")));
        }
    }
    Ok(())
}

/// Elevation profile of the curved specimen.
#[derive(Clone, Debug)]
pub struct CurvedProfile {
    x1: f64,
    x2: f64,
    y1: f64,
    y2: f64,
    vertex: [f64; 2],
}

impl CurvedProfile {
    pub fn new(c: &CurvedSpecimen) -> Result<Self> {
        let [xv, yv] = c.vertex;
        if !(c.x1 < c.x2 && xv < c.x2 && c.x2 <= c.l && yv > 0.0 && c.y2 > c.y1 && c.y1 >= 0.0) {
            return Err(EcmError::Mesh("curved profile parameters do not describe a single elevation".into()));
        }
        Ok(Self { x1: c.x1, x2: c.x2, y1: c.y1, y2: c.y2, vertex: c.vertex })
    }

    pub fn height(&self, x: f64) -> f64 {
        let line = self.y2 - (self.y2 - self.y1) * x / self.x1;
        let [xv, yv] = self.vertex;
        let u = (x - xv) / (self.x2 - xv);
        let parabola = if x <= self.x2 { yv * (1.0 - u * u) } else { 0.0 };
        line.max(parabola).max(0.0)
    }

    pub fn max_height(&self) -> f64 {
        self.y2.max(self.vertex[1])
    }
}

/// Rounded triangular spikes.
#[derive(Clone, Debug)]
pub struct SpikeProfile {
    pitch: f64,
    x1: f64,
    r: f64,
    apex: f64,
    half_angle: f64,
    spikes: usize,
}

impl SpikeProfile {
    pub fn new(s: &RoughSurface) -> Result<Self> {
        positive(&[("w", s.w), ("s", s.s), ("h", s.h), ("p", s.p), ("r", s.r), ("x1", s.x1), ("y1", s.y1), ("g", s.g)])?;
        if s.spikes == 0 {
            return Err(EcmError::Mesh("at least one spike required".into()));
        }
        let pitch = s.w / s.spikes as f64;
        if 2.0 * s.x1 > pitch {
            return Err(EcmError::Mesh(format!("spike base {} exceeds pitch {pitch}; spikes overlap", 2.0 * s.x1)));
        }
        // Sharp apex height such that the rounded tip peaks at p.
        let mut apex = s.p;
        for _ in 0..200 {
            let phi = (s.x1 / apex).atan();
            apex = s.p + s.r * (1.0 / phi.sin() - 1.0);
        }
        let half_angle = (s.x1 / apex).atan();
        if s.r * half_angle.cos() >= s.x1 || !apex.is_finite() {
            return Err(EcmError::Mesh("tip radius too large for the spike base".into()));
        }
        if s.y1 > s.h {
            return Err(EcmError::Mesh("refined band deeper than the metal".into()));
        }
        Ok(Self { pitch, x1: s.x1, r: s.r, apex, half_angle, spikes: s.spikes })
    }

    pub fn height(&self, x: f64) -> f64 {
        let k = ((x / self.pitch).floor().max(0.0) as usize).min(self.spikes - 1);
        let u = (x - (k as f64 + 0.5) * self.pitch).abs();
        if u >= self.x1 {
            return 0.0;
        }
        let tangent = self.r * self.half_angle.cos();
        if u <= tangent {
            let yc = self.apex - self.r / self.half_angle.sin();
            yc + (self.r * self.r - u * u).sqrt()
        } else {
            self.apex * (1.0 - u / self.x1)
        }
    }
}

struct Plane {
    pts: Vec<[f64; 2]>,
    lookup: HashMap<(i64, i64), usize>,
    snap: f64,
    quads: Vec<[usize; 4]>,
    regions: Vec<Region>,
}

impl Plane {
    fn new(scale: f64) -> Self {
        Self { pts: Vec::new(), lookup: HashMap::new(), snap: 1e-9 * scale, quads: Vec::new(), regions: Vec::new() }
    }

    fn point(&mut self, p: [f64; 2]) -> usize {
        let key = ((p[0] / self.snap).round() as i64, (p[1] / self.snap).round() as i64);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(&i) = self.lookup.get(&(key.0 + dx, key.1 + dy)) {
                    let q = self.pts[i];
                    if (q[0] - p[0]).abs() <= self.snap && (q[1] - p[1]).abs() <= self.snap {
                        return i;
                    }
                }
            }
        }
        self.pts.push(p);
        self.lookup.insert(key, self.pts.len() - 1);
        self.pts.len() - 1
    }

    fn quad(&mut self, mut c: [[f64; 2]; 4], region: Region) {
        let area2: f64 = (0..4).map(|i| c[i][0] * c[(i + 1) % 4][1] - c[(i + 1) % 4][0] * c[i][1]).sum();
        if area2 < 0.0 {
            c.reverse();
        }
        let ids = c.map(|p| self.point(p));
        self.quads.push(ids);
        self.regions.push(region);
    }

    /// Rows of quads over columns `xs`; row `r` of column `x` lies at `y(x, r)`.
    fn block(&mut self, xs: &[f64], rows: usize, y: impl Fn(f64, usize) -> f64, region: impl Fn([f64; 2]) -> Region) {
        for r in 0..rows {
            for i in 0..xs.len() - 1 {
                let (xa, xb) = (xs[i], xs[i + 1]);
                let c = [[xa, y(xa, r)], [xb, y(xb, r)], [xb, y(xb, r + 1)], [xa, y(xa, r + 1)]];
                let centroid = [c.iter().map(|p| p[0]).sum::<f64>() / 4.0, c.iter().map(|p| p[1]).sum::<f64>() / 4.0];
                self.quad(c, region(centroid));
            }
        }
    }

    fn grid(&mut self, xs: &[f64], ys: &[f64], region: impl Fn([f64; 2]) -> Region) {
        self.block(xs, ys.len() - 1, |_, r| ys[r], region);
    }

    /// One row halving the column count: fine nodes `x_fine` at `y_fine`,
    /// every second of them at `y_coarse`.
    fn transition(&mut self, x_fine: &[f64], y_fine: f64, y_coarse: f64, region: Region) {
        let ym = 0.5 * (y_fine + y_coarse);
        for q in 0..(x_fine.len() - 1) / 4 {
            let x = &x_fine[4 * q..4 * q + 5];
            let b = |i: usize| [x[i], y_fine];
            let m = |i: usize| [x[i], ym];
            let t = |i: usize| [x[i], y_coarse];
            self.quad([b(0), b(1), m(1), t(0)], region);
            self.quad([b(1), b(2), m(2), m(1)], region);
            self.quad([b(2), b(3), m(3), m(2)], region);
            self.quad([b(3), b(4), t(4), m(3)], region);
            self.quad([m(1), m(2), t(2), t(0)], region);
            self.quad([m(2), m(3), t(4), t(2)], region);
        }
    }

    fn extrude(self, g: f64, sets: &[(&str, &NodePredicate)]) -> Result<Mesh> {
        let n = self.pts.len();
        let mut nodes = Vec::with_capacity(2 * n);
        for z in [0.0, g] {
            nodes.extend(self.pts.iter().map(|p| [p[0], p[1], z]));
        }
        let elements = self
            .quads
            .iter()
            .map(|q| [q[0], q[1], q[2], q[3], q[0] + n, q[1] + n, q[2] + n, q[3] + n])
            .collect();
        let mut node_sets = BTreeMap::new();
        for (name, pred) in sets {
            let set: Vec<usize> = (0..nodes.len()).filter(|&i| pred(nodes[i])).collect();
            if set.is_empty() {
                return Err(EcmError::Mesh(format!("node set {name} is empty")));
            }
            node_sets.insert(name.to_string(), set);
        }
        Mesh::new(nodes, elements, self.regions, node_sets)
    }
}

/// Selects the nodes of a named set.
type NodePredicate<'a> = dyn Fn([f64; 3]) -> bool + 'a;

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| if i == n { b } else { a + (b - a) * i as f64 / n as f64 }).collect()
}

fn gap_strip(gs: &GapStrip, spec: &MeshSpec) -> Result<Mesh> {
    positive(&[("l", gs.l), ("s", gs.s), ("g", gs.g)])?;
    let GapStrip { l, s, g } = *gs;
    let nb = spec.divisions;
    let nt = spec.top_divisions.unwrap_or(nb);
    let n_gap = spec.gap_layers.unwrap_or(((s * nb as f64 / l).round() as usize).max(1));
    let mut plane = Plane::new(l + s);
    let metal = |_: [f64; 2]| Region::Metal;
    let mut edge: Vec<f64> = Vec::new();
    if nt == nb {
        let xs = linspace(0.0, l, nb);
        plane.grid(&xs, &xs, metal);
        edge = xs;
    } else {
        if nt > nb || nb % nt != 0 || !(nb / nt).is_power_of_two() {
            return Err(EcmError::Mesh(format!("distortion {nt} -> {nb} must halve the columns per level")));
        }
        let levels = (nb / nt).trailing_zeros() as usize;
        for i in 0..=levels {
            let cols = nb >> i;
            let (y0, y1) = (l * i as f64 / (levels + 1) as f64, l * (i + 1) as f64 / (levels + 1) as f64);
            let rows = (((y1 - y0) * cols as f64 / l).round() as usize).max(1);
            let ys = linspace(y0, y1, rows);
            if i == 0 {
                plane.grid(&linspace(0.0, l, cols), &ys, metal);
            } else {
                let fine = nb >> (i - 1);
                if fine % 4 != 0 {
                    return Err(EcmError::Mesh(format!("transition from {fine} columns needs a multiple of 4")));
                }
                plane.transition(&linspace(0.0, l, fine), ys[0], ys[1], Region::Metal);
                plane.grid(&linspace(0.0, l, cols), &ys[1..], metal);
            }
            let skip = usize::from(!edge.is_empty());
            edge.extend_from_slice(&ys[skip..]);
        }
    }
    plane.grid(&linspace(l, l + s, n_gap), &edge, |_| Region::Electrolyte);
    let tol = 1e-9 * (l + s);
    plane.extrude(
        g,
        &[
            ("anode", &|p: [f64; 3]| p[0].abs() <= tol),
            ("cathode", &|p: [f64; 3]| (p[0] - l - s).abs() <= tol),
        ],
    )
}

fn specimen(l: f64, s: f64, g: f64, depth: f64, profile: &dyn Fn(f64) -> f64, spec: &MeshSpec) -> Result<Mesh> {
    let nx = spec.divisions;
    let dx = l / nx as f64;
    if nx % (1 << (spec.coarsening + 1)) != 0 && spec.coarsening > 0 {
        return Err(EcmError::Mesh(format!("{nx} columns cannot be coarsened {} times", spec.coarsening)));
    }
    if !(spec.refined_fraction > 0.0 && spec.refined_fraction * l < depth) {
        return Err(EcmError::Mesh("refined zone must lie inside the specimen".into()));
    }
    let xs = linspace(0.0, l, nx);
    let heights: Vec<f64> = xs.iter().map(|&x| profile(x)).collect();
    let h_max = heights.iter().cloned().fold(0.0, f64::max);
    let h_min = heights.iter().cloned().fold(f64::INFINITY, f64::min);
    let top = h_max + s;
    let mut plane = Plane::new(l.max(depth + top));

    let n_gap = spec.gap_layers.unwrap_or((((top - h_min) / dx).round() as usize).max(1));
    plane.block(
        &xs,
        n_gap,
        |x, r| if r == n_gap { top } else { profile(x) + (top - profile(x)) * r as f64 / n_gap as f64 },
        |_| Region::Electrolyte,
    );

    let refined = spec.refined_fraction * l;
    let n_ref = (((refined + h_max) / dx).round() as usize).max(1);
    plane.block(
        &xs,
        n_ref,
        |x, r| if r == n_ref { profile(x) } else { -refined + (profile(x) + refined) * r as f64 / n_ref as f64 },
        |_| Region::Metal,
    );

    let mut y_top = -refined;
    let mut cols = nx;
    for _ in 0..spec.coarsening {
        let coarse = l / (cols / 2) as f64;
        let y_bot = y_top - coarse;
        if y_bot <= -depth {
            return Err(EcmError::Mesh("specimen too shallow for the requested coarsening".into()));
        }
        plane.transition(&linspace(0.0, l, cols), y_top, y_bot, Region::Metal);
        y_top = y_bot;
        cols /= 2;
    }
    let rows = (((y_top + depth) * cols as f64 / l).round() as usize).max(1);
    plane.grid(&linspace(0.0, l, cols), &linspace(-depth, y_top, rows), |_| Region::Metal);

    let tol = 1e-9 * l;
    let strip = -0.25 * l - tol;
    plane.extrude(
        g,
        &[
            ("anode", &|p: [f64; 3]| (p[1] + depth).abs() <= tol),
            ("cathode", &|p: [f64; 3]| (p[1] - top).abs() <= tol),
            ("inflow", &|p: [f64; 3]| p[0].abs() <= tol && p[1] >= strip),
            ("outflow", &|p: [f64; 3]| (p[0] - l).abs() <= tol && p[1] >= strip),
        ],
    )
}

/// Layer boundaries from `start` towards `end`, first layer `first`, growing geometrically.
fn graded(start: f64, end: f64, first: f64, growth: f64) -> Vec<f64> {
    let len = (end - start).abs();
    let mut sizes = vec![first];
    while sizes.iter().sum::<f64>() < len {
        let next = sizes[sizes.len() - 1] * growth;
        sizes.push(next);
    }
    let scale = len / sizes.iter().sum::<f64>();
    let dir = (end - start).signum();
    let mut out = vec![start];
    let mut y = start;
    for (i, h) in sizes.iter().enumerate() {
        y += dir * h * scale;
        out.push(if i + 1 == sizes.len() { end } else { y });
    }
    out
}

fn rough(rs: &RoughSurface, spec: &MeshSpec) -> Result<Mesh> {
    let profile = SpikeProfile::new(rs)?;
    if !(spec.growth >= 1.0) {
        return Err(EcmError::Mesh("growth factor must be at least 1".into()));
    }
    let nx = spec.divisions;
    let xs = linspace(0.0, rs.w, nx);
    let dx = rs.w / nx as f64;
    let band = rs.p + rs.y1;
    let n_band = ((band / dx).round() as usize).max(1);
    let dy = band / n_band as f64;
    let top = rs.p + rs.s;
    let mut plane = Plane::new(rs.h + top);

    let mut below = graded(-rs.y1, -rs.h, dy, spec.growth);
    below.reverse();
    plane.grid(&xs, &below, |_| Region::Metal);
    plane.grid(&xs, &linspace(-rs.y1, rs.p, n_band), |c| {
        if c[1] < profile.height(c[0]) {
            Region::Metal
        } else {
            Region::Electrolyte
        }
    });
    plane.grid(&xs, &graded(rs.p, top, dy, spec.growth), |_| Region::Electrolyte);

    let tol = 1e-9 * (rs.h + top);
    plane.extrude(
        rs.g,
        &[
            ("anode", &|p: [f64; 3]| (p[1] + rs.h).abs() <= tol),
            ("cathode", &|p: [f64; 3]| (p[1] - top).abs() <= tol),
        ],
    )
}
