//! Surfaces glued from hyperbolic triangles.
//!
//! Darts are numbered `3t + i`: dart `3t + i` is the side of triangle `t`
//! running from corner `i` to corner `i + 1`. The rotation `ρ` is fixed to
//! that within-triangle successor; the gluing `ι` pairs each dart with the
//! dart it is glued to (with reversed direction). Corners around a vertex are
//! the cycles of `ρ ∘ ι`.

use crate::hyp::{
    self, dist, exp, lcross, mdot, sides_from_angles, tangent_toward, transport_direction,
    HPoint, HTriangle, HypError, Isometry, Tangent,
};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::f64::consts::PI;
use thiserror::Error;

/// Horocycle length (per triangle corner) at which tracing into a cusp stops.
pub const DEFAULT_CUSP_CUTOFF: f64 = 1e-4;
/// Inradius of an ideal triangle, `½ log 3`.
pub fn ideal_inradius() -> f64 {
    0.5 * 3f64.ln()
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("input error: {0}")]
    Input(String),
    #[error("angle sum {sum} at vertex {orbit} differs from 2*pi")]
    AngleSum { orbit: usize, sum: f64 },
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("geodesic hits a corner of triangle {tri}")]
    CornerHit { tri: usize },
    #[error(transparent)]
    Hyp(#[from] HypError),
}

pub type Result<T> = std::result::Result<T, SurfaceError>;

#[inline]
pub fn tri_of(d: usize) -> usize {
    d / 3
}

#[inline]
pub fn corner_of(d: usize) -> usize {
    d % 3
}

/// Next dart counterclockwise within the same triangle.
#[inline]
pub fn rho(d: usize) -> usize {
    3 * (d / 3) + (d + 1) % 3
}

/// Previous dart within the same triangle.
#[inline]
pub fn rho_inv(d: usize) -> usize {
    3 * (d / 3) + (d + 2) % 3
}

/// Triangle count plus the dart involution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CombinatorialTriangulation {
    triangles: usize,
    iota: Vec<usize>,
}

impl CombinatorialTriangulation {
    pub fn new(triangles: usize, iota: Vec<usize>) -> Result<Self> {
        if triangles == 0 {
            return Err(SurfaceError::Input("no triangles".into()));
        }
        if triangles % 2 != 0 {
            return Err(SurfaceError::Input(format!(
                "triangle count {triangles} is odd"
            )));
        }
        if iota.len() != 3 * triangles {
            return Err(SurfaceError::Input(format!(
                "gluing covers {} darts, expected {}",
                iota.len(),
                3 * triangles
            )));
        }
        for (d, &e) in iota.iter().enumerate() {
            if e >= iota.len() || e == d || iota[e] != d {
                return Err(SurfaceError::Input(format!(
                    "gluing is not a fixed-point-free involution at dart {d}"
                )));
            }
        }
        let t = CombinatorialTriangulation { triangles, iota };
        if !t.is_connected() {
            return Err(SurfaceError::Input("gluing is disconnected".into()));
        }
        Ok(t)
    }

    /// Builds from a list of glued dart pairs.
    pub fn from_pairs(triangles: usize, pairs: &[[usize; 2]]) -> Result<Self> {
        let n = 3 * triangles;
        let mut iota = vec![usize::MAX; n];
        for &[a, b] in pairs {
            if a >= n || b >= n || iota[a] != usize::MAX || iota[b] != usize::MAX || a == b {
                return Err(SurfaceError::Input(format!("bad gluing pair ({a}, {b})")));
            }
            iota[a] = b;
            iota[b] = a;
        }
        if iota.iter().any(|&e| e == usize::MAX) {
            return Err(SurfaceError::Input("some darts are unglued".into()));
        }
        CombinatorialTriangulation::new(triangles, iota)
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.triangles];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(t) = stack.pop() {
            for i in 0..3 {
                let u = tri_of(self.iota[3 * t + i]);
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    pub fn triangles(&self) -> usize {
        self.triangles
    }

    pub fn darts(&self) -> usize {
        3 * self.triangles
    }

    pub fn edges(&self) -> usize {
        3 * self.triangles / 2
    }

    pub fn iota(&self, d: usize) -> usize {
        self.iota[d]
    }

    pub fn gluing(&self) -> &[usize] {
        &self.iota
    }

    /// Corner-walk permutation `ρ ∘ ι`: the next dart around the start vertex of `d`.
    pub fn sigma(&self, d: usize) -> usize {
        rho(self.iota[d])
    }

    /// Cycles of `ρ ∘ ι`, each starting at its smallest dart, ordered by that dart.
    pub fn vertex_orbits(&self) -> Vec<Vec<usize>> {
        let n = self.darts();
        let mut seen = vec![false; n];
        let mut orbits = Vec::new();
        for d in 0..n {
            if seen[d] {
                continue;
            }
            let mut cyc = vec![d];
            seen[d] = true;
            let mut e = self.sigma(d);
            while e != d {
                seen[e] = true;
                cyc.push(e);
                e = self.sigma(e);
            }
            orbits.push(cyc);
        }
        orbits
    }

    /// Glued dart pairs `(d, ι d)` with `d < ι d`, in increasing order of `d`.
    pub fn edge_pairs(&self) -> Vec<[usize; 2]> {
        (0..self.darts())
            .filter(|&d| d < self.iota[d])
            .map(|d| [d, self.iota[d]])
            .collect()
    }
}

/// Shape of a single triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TriangleShape {
    /// Ideal triangle glued with zero shear.
    Ideal,
    /// Compact triangle with the given interior angles at corners 0, 1, 2.
    Compact { angles: [f64; 3] },
}

impl TriangleShape {
    /// Side lengths of darts 0, 1, 2 (infinite for ideal triangles).
    pub fn dart_lengths(&self) -> Result<[f64; 3]> {
        match self {
            TriangleShape::Ideal => Ok([f64::INFINITY; 3]),
            TriangleShape::Compact { angles } => {
                let opp = sides_from_angles(*angles)?;
                Ok([opp[2], opp[0], opp[1]])
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SurfaceKind {
    Cusped,
    Closed,
}

/// Geometry of one triangle in its own chart.
#[derive(Debug, Clone)]
struct Chart {
    /// Corner positions: hyperboloid points, or null vectors for ideal corners.
    corners: [Vector3<f64>; 3],
    /// Outward-negative edge normals: `⟨n, x⟩ = sinh(signed distance)` with the interior positive.
    normals: [Vector3<f64>; 3],
    /// Midpoint (compact) or incircle tangency point (ideal) of each dart's side.
    mids: [HPoint; 3],
    incenter: HPoint,
    ideal: bool,
}

impl Chart {
    fn compact(angles: [f64; 3]) -> Result<Chart> {
        let t = hyp::triangle_from_angles(angles)?;
        let center = Isometry::translation_to(&t.incenter()).inverse();
        let vs = t.vertices().map(|p| center.apply(&p));
        let corners = vs.map(|p| *p.vec());
        let mids = [0, 1, 2].map(|i| hyp::midpoint(&vs[i], &vs[(i + 1) % 3]));
        Ok(Chart {
            normals: Chart::normals_of(&corners),
            corners,
            mids,
            incenter: HPoint::origin(),
            ideal: false,
        })
    }

    fn ideal() -> Chart {
        let th = |i: usize| PI / 2.0 + 2.0 * PI * i as f64 / 3.0;
        let corners = [0, 1, 2].map(|i| Vector3::new(th(i).cos(), th(i).sin(), 1.0));
        let r = ideal_inradius();
        let mids = [0, 1, 2].map(|i| HPoint::polar(r, th(i) + PI / 3.0));
        Chart {
            normals: Chart::normals_of(&corners),
            corners,
            mids,
            incenter: HPoint::origin(),
            ideal: true,
        }
    }

    fn normals_of(corners: &[Vector3<f64>; 3]) -> [Vector3<f64>; 3] {
        [0, 1, 2].map(|i| {
            let n = lcross(&corners[i], &corners[(i + 1) % 3]);
            let n = n / mdot(&n, &n).sqrt();
            if mdot(&n, &corners[(i + 2) % 3]) < 0.0 {
                -n
            } else {
                n
            }
        })
    }

    /// Unit tangent at `p` pointing along the geodesic toward corner `k`.
    fn toward_corner(&self, p: &HPoint, k: usize) -> Result<Tangent> {
        if self.ideal {
            let v = self.corners[k];
            let u = v + p.vec() * mdot(&v, p.vec());
            Ok(Tangent(u / mdot(&v, p.vec()).abs()))
        } else {
            Ok(tangent_toward(p, &HPoint::from_vec_unchecked(self.corners[k]))?)
        }
    }

    fn signed_dist(&self, i: usize, p: &HPoint) -> f64 {
        mdot(&self.normals[i], p.vec()).asinh()
    }
}

/// A point given by a triangle and coordinates in that triangle's chart.
///
/// The coordinates may leave the triangle; the chart extends to the whole
/// plane as the developed universal cover around that triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub tri: usize,
    pub pos: HPoint,
}

/// One chart-local piece of a traced geodesic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSegment {
    pub tri: usize,
    pub from: HPoint,
    pub to: HPoint,
    /// Dart of `tri` through which the path leaves, if it does.
    pub exit: Option<usize>,
}

impl PathSegment {
    pub fn length(&self) -> f64 {
        dist(&self.from, &self.to)
    }
}

/// Chart-by-chart description of a path.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath {
    pub segments: Vec<PathSegment>,
    pub closed: bool,
}

impl GeodesicPath {
    pub fn length(&self) -> f64 {
        self.segments.iter().map(|s| s.length()).sum()
    }
}

/// How a trace ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceStop {
    Length,
    Cusp,
}

#[derive(Debug, Clone)]
pub struct TraceResult {
    pub path: GeodesicPath,
    pub end: SurfacePoint,
    pub end_direction: Tangent,
    /// Map from the end chart into the start chart.
    pub end_to_start: Isometry,
    pub traveled: f64,
    pub stop: TraceStop,
}

/// A polygonal path lifted to the start triangle's chart.
///
/// For closed paths, `holonomy` continues the lift: the point after the last
/// one is `holonomy · points[0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub tri: usize,
    pub points: Vec<HPoint>,
    pub closed: bool,
    pub holonomy: Isometry,
}

impl Polyline {
    fn point(&self, k: isize) -> HPoint {
        let n = self.points.len() as isize;
        let q = k.div_euclid(n);
        let r = k.rem_euclid(n) as usize;
        let mut g = Isometry::identity();
        let h = if q >= 0 {
            self.holonomy
        } else {
            self.holonomy.inverse()
        };
        for _ in 0..q.unsigned_abs() {
            g = g.compose(&h);
        }
        g.apply(&self.points[r])
    }

    pub fn length(&self) -> f64 {
        let n = self.points.len();
        let mut l: f64 = self
            .points
            .windows(2)
            .map(|w| dist(&w[0], &w[1]))
            .sum();
        if self.closed {
            l += dist(&self.points[n - 1], &self.holonomy.apply(&self.points[0]));
        }
        l
    }

    /// Largest deviation of an interior bend angle from `π`.
    pub fn max_bend(&self) -> f64 {
        let n = self.points.len() as isize;
        let range = if self.closed { 0..n } else { 1..n - 1 };
        let mut worst: f64 = 0.0;
        for k in range {
            let (a, b, c) = (self.point(k - 1), self.point(k), self.point(k + 1));
            if let Ok(t) = hyp::angle(&b, &a, &c) {
                worst = worst.max(PI - t);
            }
        }
        worst
    }
}

/// Options for [`TriangulatedSurface::straighten_polyline`].
#[derive(Debug, Clone, Copy)]
pub struct StraightenConfig {
    pub bend_tol: f64,
    pub max_sweeps: usize,
}

impl Default for StraightenConfig {
    fn default() -> Self {
        StraightenConfig {
            bend_tol: 1e-7,
            max_sweeps: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StraightenResult {
    pub path: Polyline,
    /// Length before any sweep and after each sweep.
    pub lengths: Vec<f64>,
    pub converged: bool,
}

/// A copy of a triangle in the developed universal cover.
#[derive(Debug, Clone, Copy)]
pub struct Developed {
    pub tri: usize,
    /// Map from the triangle's chart into the base chart.
    pub map: Isometry,
    pub depth: usize,
}

/// Combinatorics, per-triangle shapes and derived chart data.
#[derive(Debug, Clone)]
pub struct TriangulatedSurface {
    kind: SurfaceKind,
    comb: CombinatorialTriangulation,
    shapes: Vec<TriangleShape>,
    charts: Vec<Chart>,
    transitions: Vec<Isometry>,
    orbits: Vec<Vec<usize>>,
    vertex_of: Vec<usize>,
    cusp_cutoff: f64,
}

/// Vertex or cusp counts and genus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerData {
    /// Vertices (closed) or cusps (cusped).
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub genus: usize,
}

impl TriangulatedSurface {
    pub fn build(comb: CombinatorialTriangulation, shapes: Vec<TriangleShape>) -> Result<Self> {
        if shapes.len() != comb.triangles() {
            return Err(SurfaceError::Input(format!(
                "{} shapes for {} triangles",
                shapes.len(),
                comb.triangles()
            )));
        }
        let ideal = matches!(shapes[0], TriangleShape::Ideal);
        if shapes
            .iter()
            .any(|s| matches!(s, TriangleShape::Ideal) != ideal)
        {
            return Err(SurfaceError::Input("mixed ideal and compact triangles".into()));
        }
        let kind = if ideal {
            SurfaceKind::Cusped
        } else {
            SurfaceKind::Closed
        };
        let charts = shapes
            .iter()
            .map(|s| match s {
                TriangleShape::Ideal => Ok(Chart::ideal()),
                TriangleShape::Compact { angles } => Chart::compact(*angles),
            })
            .collect::<Result<Vec<_>>>()?;
        let orbits = comb.vertex_orbits();
        let mut vertex_of = vec![0; comb.darts()];
        for (k, o) in orbits.iter().enumerate() {
            for &d in o {
                vertex_of[d] = k;
            }
        }
        if kind == SurfaceKind::Closed {
            for d in 0..comb.darts() {
                let e = comb.iota(d);
                let l1 = shapes[tri_of(d)].dart_lengths()?[corner_of(d)];
                let l2 = shapes[tri_of(e)].dart_lengths()?[corner_of(e)];
                if (l1 - l2).abs() > 1e-10 * (1.0 + l1) {
                    return Err(SurfaceError::Geometry(format!(
                        "glued sides {d} and {e} have lengths {l1} and {l2}"
                    )));
                }
            }
            for (k, o) in orbits.iter().enumerate() {
                let sum: f64 = o
                    .iter()
                    .map(|&d| match shapes[tri_of(d)] {
                        TriangleShape::Compact { angles } => angles[corner_of(d)],
                        TriangleShape::Ideal => 0.0,
                    })
                    .sum();
                if (sum - 2.0 * PI).abs() > 1e-9 {
                    return Err(SurfaceError::AngleSum { orbit: k, sum });
                }
            }
        }
        let mut s = TriangulatedSurface {
            kind,
            comb,
            shapes,
            charts,
            transitions: Vec::new(),
            orbits,
            vertex_of,
            cusp_cutoff: DEFAULT_CUSP_CUTOFF,
        };
        s.transitions = (0..s.comb.darts())
            .map(|d| s.compute_transition(d))
            .collect::<Result<Vec<_>>>()?;
        let e = s.euler_data();
        if s.kind == SurfaceKind::Cusped {
            let (n, c) = (s.comb.triangles() / 2, e.vertices);
            if (2 + n) < c || (2 + n - c) % 2 != 0 {
                return Err(SurfaceError::Geometry(format!(
                    "cusp count {c} inconsistent with N = {n}"
                )));
            }
        }
        Ok(s)
    }

    /// Degree-regular closed surface built from equilateral triangles with angle `2π/d`.
    pub fn equilateral(comb: CombinatorialTriangulation, degree: usize) -> Result<Self> {
        let a = 2.0 * PI / degree as f64;
        let shapes = vec![TriangleShape::Compact { angles: [a; 3] }; comb.triangles()];
        TriangulatedSurface::build(comb, shapes)
    }

    /// Cusped surface from ideal triangles glued with zero shear.
    pub fn cusped(comb: CombinatorialTriangulation) -> Result<Self> {
        let shapes = vec![TriangleShape::Ideal; comb.triangles()];
        TriangulatedSurface::build(comb, shapes)
    }

    pub fn set_cusp_cutoff(&mut self, horocycle_length: f64) {
        self.cusp_cutoff = horocycle_length;
    }

    pub fn kind(&self) -> SurfaceKind {
        self.kind
    }

    pub fn combinatorics(&self) -> &CombinatorialTriangulation {
        &self.comb
    }

    pub fn shapes(&self) -> &[TriangleShape] {
        &self.shapes
    }

    pub fn triangles(&self) -> usize {
        self.comb.triangles()
    }

    pub fn iota(&self, d: usize) -> usize {
        self.comb.iota(d)
    }

    pub fn vertex_orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    /// Vertex (or cusp) index of the start corner of dart `d`.
    pub fn vertex_of(&self, d: usize) -> usize {
        self.vertex_of[d]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.orbits[v].len()
    }

    pub fn euler_data(&self) -> EulerData {
        let v = self.orbits.len();
        let e = self.comb.edges();
        let f = self.comb.triangles();
        let genus = match self.kind {
            SurfaceKind::Closed => (2 + e - v - f) / 2,
            SurfaceKind::Cusped => (2 + f / 2).saturating_sub(v) / 2,
        };
        EulerData {
            vertices: v,
            edges: e,
            faces: f,
            genus,
        }
    }

    /// Total area: `π` minus the angle sum, summed over triangles.
    pub fn area(&self) -> f64 {
        self.shapes
            .iter()
            .map(|s| match s {
                TriangleShape::Ideal => PI,
                TriangleShape::Compact { angles } => PI - angles.iter().sum::<f64>(),
            })
            .sum()
    }

    /// Corner `k` of triangle `t` as a point; `None` for ideal corners.
    pub fn corner(&self, t: usize, k: usize) -> Option<HPoint> {
        let c = &self.charts[t];
        if c.ideal {
            None
        } else {
            Some(HPoint::from_vec_unchecked(c.corners[k]))
        }
    }

    /// Ideal corner `k` of triangle `t` as a null vector.
    pub fn ideal_corner(&self, t: usize, k: usize) -> Option<Vector3<f64>> {
        let c = &self.charts[t];
        c.ideal.then_some(c.corners[k])
    }

    /// The compact triangle `t` in its chart.
    pub fn triangle(&self, t: usize) -> Option<HTriangle> {
        Some(HTriangle {
            a: self.corner(t, 0)?,
            b: self.corner(t, 1)?,
            c: self.corner(t, 2)?,
        })
    }

    pub fn incenter(&self, t: usize) -> HPoint {
        self.charts[t].incenter
    }

    /// Midpoint of the side of dart `d` (incircle tangency point for ideal triangles).
    pub fn side_midpoint(&self, d: usize) -> HPoint {
        self.charts[tri_of(d)].mids[corner_of(d)]
    }

    /// Signed distance from `p` to the side line of dart `d`, positive inside.
    pub fn side_distance(&self, d: usize, p: &HPoint) -> f64 {
        self.charts[tri_of(d)].signed_dist(corner_of(d), p)
    }

    /// Whether `p` lies in triangle `t` up to `margin`.
    pub fn chart_contains(&self, t: usize, p: &HPoint, margin: f64) -> bool {
        (0..3).all(|i| self.charts[t].signed_dist(i, p) >= -margin)
    }

    fn compute_transition(&self, d: usize) -> Result<Isometry> {
        let e = self.comb.iota(d);
        let (t, i) = (tri_of(d), corner_of(d));
        let (u, j) = (tri_of(e), corner_of(e));
        let (ct, cu) = (&self.charts[t], &self.charts[u]);
        let m1 = ct.mids[i];
        let v1 = ct.toward_corner(&m1, (i + 1) % 3)?;
        let m2 = cu.mids[j];
        let v2 = cu.toward_corner(&m2, j)?;
        Ok(Isometry::frame_map(&m1, &v1, &m2, &v2))
    }

    /// Isometry from the chart of `d`'s triangle onto the chart of the triangle glued across `d`.
    pub fn transition(&self, d: usize) -> Isometry {
        self.transitions[d]
    }

    /// Composition of transitions once around vertex `v`, as a map of the chart of its first dart.
    pub fn vertex_holonomy(&self, v: usize) -> Isometry {
        let mut a = Isometry::identity();
        for &d in &self.orbits[v] {
            a = a.compose(&self.transitions[d].inverse());
        }
        a
    }

    /// For each dart, the map from its triangle's chart into the chart of the first dart of its vertex orbit.
    pub fn corner_maps(&self) -> Vec<Isometry> {
        let mut maps = vec![Isometry::identity(); self.comb.darts()];
        for o in &self.orbits {
            let mut a = Isometry::identity();
            for &d in o {
                maps[d] = a;
                a = a.compose(&self.transitions[d].inverse());
            }
        }
        maps
    }

    /// Breadth-first development of the universal cover around triangle `base`.
    ///
    /// Copies are deduplicated by the position of their incenter. Copies
    /// whose incenter is farther than `radius` from the base incenter are not
    /// expanded.
    pub fn develop(&self, base: usize, max_depth: usize, radius: f64) -> Vec<Developed> {
        let center = self.charts[base].incenter;
        let mut out = vec![Developed {
            tri: base,
            map: Isometry::identity(),
            depth: 0,
        }];
        let mut seen: HashMap<usize, Vec<HPoint>> = HashMap::new();
        seen.entry(base).or_default().push(center);
        let mut queue = VecDeque::from([0usize]);
        while let Some(k) = queue.pop_front() {
            let cur = out[k];
            if cur.depth >= max_depth {
                continue;
            }
            for i in 0..3 {
                let d = 3 * cur.tri + i;
                let u = tri_of(self.comb.iota(d));
                let map = cur.map.compose(&self.transitions[d].inverse());
                let c = map.apply(&self.charts[u].incenter);
                if dist(&center, &c) > radius {
                    continue;
                }
                let list = seen.entry(u).or_default();
                if list.iter().any(|p| dist(p, &c) < 1e-7) {
                    continue;
                }
                list.push(c);
                out.push(Developed {
                    tri: u,
                    map,
                    depth: cur.depth + 1,
                });
                queue.push_back(out.len() - 1);
            }
        }
        out
    }

    /// Finds a triangle containing `p` (given in the chart of `p.tri`).
    ///
    /// Returns the located point and the map from its new chart into the old one.
    pub fn locate(&self, p: &SurfacePoint) -> Result<(SurfacePoint, Isometry)> {
        if self.chart_contains(p.tri, &p.pos, 1e-12) {
            return Ok((*p, Isometry::identity()));
        }
        // Walk across the most violated side; fall back to development if it cycles.
        let (mut t, mut q, mut m) = (p.tri, p.pos, Isometry::identity());
        for _ in 0..4 * self.triangles() + 16 {
            let (i, worst) = (0..3)
                .map(|i| (i, self.charts[t].signed_dist(i, &q)))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            if worst >= -1e-12 {
                return Ok((SurfacePoint { tri: t, pos: q }, m));
            }
            let d = 3 * t + i;
            let tr = self.transitions[d];
            q = tr.apply(&q);
            m = m.compose(&tr.inverse());
            t = tri_of(self.comb.iota(d));
        }
        let r = dist(&self.charts[p.tri].incenter, &p.pos);
        let reach = r + 2.0 * self.max_inradius_bound();
        let mut depth = 8;
        loop {
            let copies = self.develop(p.tri, depth, reach);
            let mut best: Option<(f64, &Developed)> = None;
            for c in &copies {
                let q = c.map.inverse().apply(&p.pos);
                let m = (0..3)
                    .map(|i| self.charts[c.tri].signed_dist(i, &q))
                    .fold(f64::INFINITY, f64::min);
                if best.map_or(true, |(b, _)| m > b) {
                    best = Some((m, c));
                }
            }
            if let Some((m, c)) = best {
                if m >= -1e-12 {
                    let q = c.map.inverse().apply(&p.pos);
                    return Ok((SurfacePoint { tri: c.tri, pos: q }, c.map));
                }
            }
            if depth > 64 {
                return Err(SurfaceError::Geometry("point location failed".into()));
            }
            depth *= 2;
        }
    }

    fn max_inradius_bound(&self) -> f64 {
        self.charts
            .iter()
            .map(|c| {
                if c.ideal {
                    f64::INFINITY
                } else {
                    c.corners
                        .iter()
                        .map(|v| dist(&c.incenter, &HPoint::from_vec_unchecked(*v)))
                        .fold(0.0, f64::max)
                }
            })
            .fold(0.0, f64::max)
            .min(50.0)
    }

    /// Develops the geodesic from `start` in direction `dir` for `max_length`.
    pub fn trace_geodesic(
        &self,
        start: &SurfacePoint,
        dir: &Tangent,
        max_length: f64,
    ) -> Result<TraceResult> {
        if !(max_length > 0.0) {
            return Err(SurfaceError::Input("trace length must be positive".into()));
        }
        if !self.chart_contains(start.tri, &start.pos, 1e-10) {
            return Err(SurfaceError::Input("start point is not in its triangle".into()));
        }
        let mut t = start.tri;
        let mut p = start.pos;
        let mut v = *dir;
        let mut remaining = max_length;
        let mut to_start = Isometry::identity();
        let mut segments = Vec::new();
        let mut entry: Option<usize> = None;
        let mut steps = 0usize;
        loop {
            steps += 1;
            if steps > 1_000_000 {
                return Err(SurfaceError::Geometry("trace did not terminate".into()));
            }
            let chart = &self.charts[t];
            let mut exit: Option<(f64, usize)> = None;
            for i in 0..3 {
                if Some(i) == entry {
                    continue;
                }
                let a = mdot(&chart.normals[i], p.vec());
                let b = mdot(&chart.normals[i], v.vec());
                if b >= 0.0 {
                    continue;
                }
                let r = (-a / b).max(0.0);
                if r >= 1.0 {
                    continue;
                }
                let s = r.atanh();
                if exit.map_or(true, |(s0, _)| s < s0) {
                    exit = Some((s, i));
                }
            }
            let (s_exit, side) = match exit {
                Some(x) => x,
                None => (f64::INFINITY, usize::MAX),
            };
            let reach = s_exit.min(remaining);
            if chart.ideal {
                if let Some(s_cusp) = self.cusp_hit(chart, &p, &v, reach) {
                    let q = exp(&p, &v, s_cusp);
                    segments.push(PathSegment {
                        tri: t,
                        from: p,
                        to: q,
                        exit: None,
                    });
                    return Ok(TraceResult {
                        path: GeodesicPath {
                            segments,
                            closed: false,
                        },
                        end: SurfacePoint { tri: t, pos: q },
                        end_direction: transport_direction(&p, &v, s_cusp),
                        end_to_start: to_start,
                        traveled: max_length - remaining + s_cusp,
                        stop: TraceStop::Cusp,
                    });
                }
            }
            if remaining <= s_exit {
                let q = exp(&p, &v, remaining);
                segments.push(PathSegment {
                    tri: t,
                    from: p,
                    to: q,
                    exit: None,
                });
                return Ok(TraceResult {
                    path: GeodesicPath {
                        segments,
                        closed: false,
                    },
                    end: SurfacePoint { tri: t, pos: q },
                    end_direction: transport_direction(&p, &v, remaining),
                    end_to_start: to_start,
                    traveled: max_length,
                    stop: TraceStop::Length,
                });
            }
            if side == usize::MAX {
                return Err(SurfaceError::Geometry("geodesic left the chart".into()));
            }
            let x = exp(&p, &v, s_exit);
            if !chart.ideal {
                for k in [side, (side + 1) % 3] {
                    if dist(&x, &HPoint::from_vec_unchecked(chart.corners[k])) < 1e-10 {
                        return Err(SurfaceError::CornerHit { tri: t });
                    }
                }
            }
            let d = 3 * t + side;
            segments.push(PathSegment {
                tri: t,
                from: p,
                to: x,
                exit: Some(d),
            });
            let tr = self.transitions[d];
            let w = transport_direction(&p, &v, s_exit);
            remaining -= s_exit;
            to_start = to_start.compose(&tr.inverse());
            let e = self.comb.iota(d);
            t = tri_of(e);
            entry = Some(corner_of(e));
            p = tr.apply(&x);
            v = tr.apply_tangent(&w);
        }
    }

    fn cusp_hit(&self, chart: &Chart, p: &HPoint, v: &Tangent, reach: f64) -> Option<f64> {
        let mut best: Option<f64> = None;
        for k in 0..3 {
            let c = chart.corners[k];
            let level = -mdot(&chart.mids[k].vec().clone_owned(), &c) * self.cusp_cutoff;
            let a = -mdot(p.vec(), &c);
            let b = -mdot(v.vec(), &c);
            if a <= level {
                return Some(0.0);
            }
            // a cosh s + b sinh s = level, smallest positive root
            let (qa, qb, qc) = (a + b, -2.0 * level, a - b);
            let roots: Vec<f64> = if qa.abs() < 1e-14 * (a.abs() + b.abs()) {
                vec![-qc / qb]
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    continue;
                }
                let sq = disc.sqrt();
                vec![(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)]
            };
            for root in roots {
                if root > 1.0 {
                    let s = root.ln();
                    if s <= reach && best.map_or(true, |b0| s < b0) {
                        best = Some(s);
                    }
                }
            }
        }
        best
    }

    /// Lifts a chart-by-chart path into the chart of its first segment.
    pub fn polyline_of(&self, path: &GeodesicPath) -> Result<Polyline> {
        let first = path
            .segments
            .first()
            .ok_or_else(|| SurfaceError::Input("empty path".into()))?;
        let mut map = Isometry::identity();
        let mut points = vec![first.from];
        for (k, seg) in path.segments.iter().enumerate() {
            if k > 0 {
                let prev = &path.segments[k - 1];
                let d = prev.exit.ok_or_else(|| {
                    SurfaceError::Input(format!("segment {} has no exit side", k - 1))
                })?;
                if tri_of(self.comb.iota(d)) != seg.tri {
                    return Err(SurfaceError::Input(format!(
                        "segment {k} is not adjacent to segment {}",
                        k - 1
                    )));
                }
                let tr = self.transitions[d];
                if dist(&tr.apply(&prev.to), &seg.from) > 1e-8 {
                    return Err(SurfaceError::Input(format!(
                        "segments {} and {k} do not meet",
                        k - 1
                    )));
                }
                map = map.compose(&tr.inverse());
            }
            let end = map.apply(&seg.to);
            if dist(points.last().unwrap(), &end) > 1e-13 || k + 1 == path.segments.len() {
                points.push(end);
            }
        }
        let mut holonomy = Isometry::identity();
        if path.closed {
            let last = path.segments.last().unwrap();
            holonomy = match last.exit {
                Some(d) => {
                    if tri_of(self.comb.iota(d)) != first.tri {
                        return Err(SurfaceError::Input("closed path does not return".into()));
                    }
                    map.compose(&self.transitions[d].inverse())
                }
                None if last.tri == first.tri => map,
                None => return Err(SurfaceError::Input("closed path does not return".into())),
            };
            let back = holonomy.apply(&first.from);
            if dist(points.last().unwrap(), &back) > 1e-8 {
                return Err(SurfaceError::Input("closed path does not close".into()));
            }
            points.pop();
        }
        Ok(Polyline {
            tri: first.tri,
            points,
            closed: path.closed,
            holonomy,
        })
    }

    /// Shortens a polyline to a geodesic in its homotopy class.
    ///
    /// Each sweep moves bend points to the midpoint of their neighbours in
    /// alternating classes (so neighbours stay fixed while a point moves),
    /// which never increases the length. Endpoints of open paths stay fixed.
    pub fn straighten_polyline(&self, p: &Polyline, cfg: StraightenConfig) -> StraightenResult {
        let mut cur = p.clone();
        let mut lengths = vec![cur.length()];
        let n = cur.points.len();
        let mut classes: Vec<Vec<usize>> = vec![Vec::new(), Vec::new(), Vec::new()];
        if cur.closed {
            for k in 0..n {
                let c = if n % 2 == 1 && k == n - 1 { 2 } else { k % 2 };
                classes[c].push(k);
            }
        } else {
            for k in 1..n.saturating_sub(1) {
                classes[k % 2].push(k);
            }
        }
        if classes.iter().all(|c| c.is_empty()) || cur.max_bend() < cfg.bend_tol {
            return StraightenResult {
                path: cur,
                lengths,
                converged: true,
            };
        }
        let h = cur.holonomy;
        let hinv = h.inverse();
        for _ in 0..cfg.max_sweeps {
            for class in &classes {
                for &k in class {
                    let prev = if k == 0 {
                        hinv.apply(&cur.points[n - 1])
                    } else {
                        cur.points[k - 1]
                    };
                    let next = if k + 1 == n {
                        h.apply(&cur.points[0])
                    } else {
                        cur.points[k + 1]
                    };
                    cur.points[k] = hyp::midpoint(&prev, &next);
                }
            }
            lengths.push(cur.length());
            if cur.max_bend() < cfg.bend_tol {
                return StraightenResult {
                    path: cur,
                    lengths,
                    converged: true,
                };
            }
        }
        StraightenResult {
            path: cur,
            lengths,
            converged: false,
        }
    }

    /// Straightens a chart-by-chart path and re-traces the result through the triangles.
    pub fn straighten_path(&self, path: &GeodesicPath) -> Result<GeodesicPath> {
        let poly = self.polyline_of(path)?;
        let res = self.straighten_polyline(&poly, StraightenConfig::default());
        self.trace_polyline(&res.path)
    }

    /// Chart-by-chart trace of a lifted polyline.
    pub fn trace_polyline(&self, p: &Polyline) -> Result<GeodesicPath> {
        let n = p.points.len();
        let count = if p.closed { n } else { n - 1 };
        let (mut here, mut back) = self.locate(&SurfacePoint {
            tri: p.tri,
            pos: p.points[0],
        })?;
        let mut segments = Vec::new();
        for k in 0..count {
            let target = if k + 1 == n {
                p.holonomy.apply(&p.points[0])
            } else {
                p.points[k + 1]
            };
            let local_target = back.inverse().apply(&target);
            let len = dist(&here.pos, &local_target);
            if len < 1e-14 {
                continue;
            }
            let dir = tangent_toward(&here.pos, &local_target)?;
            let tr = self.trace_geodesic(&here, &dir, len)?;
            back = back.compose(&tr.end_to_start);
            segments.extend(tr.path.segments);
            here = tr.end;
        }
        Ok(GeodesicPath {
            segments,
            closed: p.closed,
        })
    }
}

/// Serialized surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceJson {
    pub kind: SurfaceKind,
    pub triangles: usize,
    pub gluing: Vec<[usize; 2]>,
    pub rotation: Vec<usize>,
    pub angles: Vec<[f64; 3]>,
}

impl TriangulatedSurface {
    pub fn to_json(&self) -> SurfaceJson {
        SurfaceJson {
            kind: self.kind,
            triangles: self.triangles(),
            gluing: self.comb.edge_pairs(),
            rotation: (0..self.comb.darts()).map(rho).collect(),
            angles: self
                .shapes
                .iter()
                .map(|s| match s {
                    TriangleShape::Ideal => [0.0; 3],
                    TriangleShape::Compact { angles } => *angles,
                })
                .collect(),
        }
    }

    pub fn from_json(j: &SurfaceJson) -> Result<Self> {
        let n = 3 * j.triangles;
        if j.rotation.len() != n || (0..n).any(|d| j.rotation[d] != rho(d)) {
            return Err(SurfaceError::Input(
                "rotation must send dart 3t+i to 3t+(i+1)%3".into(),
            ));
        }
        if j.angles.len() != j.triangles {
            return Err(SurfaceError::Input(format!(
                "{} angle triples for {} triangles",
                j.angles.len(),
                j.triangles
            )));
        }
        let comb = CombinatorialTriangulation::from_pairs(j.triangles, &j.gluing)?;
        let shapes = match j.kind {
            SurfaceKind::Cusped => vec![TriangleShape::Ideal; j.triangles],
            SurfaceKind::Closed => j
                .angles
                .iter()
                .map(|a| TriangleShape::Compact { angles: *a })
                .collect(),
        };
        TriangulatedSurface::build(comb, shapes)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let j: SurfaceJson =
            serde_json::from_str(s).map_err(|e| SurfaceError::Input(e.to_string()))?;
        TriangulatedSurface::from_json(&j)
    }
}

/// Two ideal triangles glued into a thrice-punctured sphere.
pub fn thrice_punctured_sphere() -> TriangulatedSurface {
    let comb = CombinatorialTriangulation::from_pairs(2, &[[0, 5], [1, 4], [2, 3]]).unwrap();
    TriangulatedSurface::cusped(comb).unwrap()
}

/// Two ideal triangles glued into a once-punctured torus.
pub fn once_punctured_torus() -> TriangulatedSurface {
    let comb = CombinatorialTriangulation::from_pairs(2, &[[0, 3], [1, 4], [2, 5]]).unwrap();
    TriangulatedSurface::cusped(comb).unwrap()
}
