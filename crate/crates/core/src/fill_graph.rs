//! Geodesic graphs embedded in a closed triangulated surface, and the
//! local moves that shorten them toward trivalent 2π/3 configurations.
//!
//! A vertex lives in the chart of its home triangle. An edge `(a, b, hol)`
//! stores the isometry taking the chart of `b`'s triangle into the chart of
//! `a`'s triangle; the edge is the geodesic segment from `a.pos` to
//! `hol · b.pos`. Moving a vertex inside its chart therefore straightens every
//! incident edge automatically while keeping its homotopy class.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hyp::{
    dist, exp, fermat_point, lcross, mdot, tangent_toward, direction_to, HPoint, HTriangle,
    HypError, Isometry,
};
use crate::surface::{rho, SurfaceError, SurfaceKind, SurfacePoint, TriangulatedSurface};

pub const ANGLE_TOL: f64 = 1e-9;
pub const CROSSING_TOL: f64 = 1e-9;
const NEAR_BALANCE: f64 = 1e-2;
/// A sweep that shortens the graph by less than this ends the run.
pub const SUCCESS_TOL: f64 = 1e-6;
pub const MIN_SWEEP_DECREASE: f64 = 1e-15;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("epsilon too large, retry smaller: {0}")]
    Retry(String),
    #[error("no progress: {0}")]
    NoProgress(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("input error: {0}")]
    Input(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Hyp(#[from] HypError),
}

pub type Result<T> = std::result::Result<T, GraphError>;

/// One end of an edge: `forward` leaves from `a`, otherwise from `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Half {
    pub edge: usize,
    pub forward: bool,
}

impl Half {
    pub fn twin(self) -> Half {
        Half {
            edge: self.edge,
            forward: !self.forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    /// Chart of `b`'s triangle into the chart of `a`'s triangle.
    pub hol: Isometry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TriCounts {
    pub v_tri: i64,
    pub e_tri: i64,
    pub f_tri: i64,
}

impl TriCounts {
    pub fn euler(&self) -> i64 {
        self.v_tri - self.e_tri + self.f_tri
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    #[serde(rename = "I")]
    TypeI,
    #[serde(rename = "II")]
    TypeII,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonShortestReport {
    pub vertex: usize,
    pub kind: ViolationKind,
    /// Index `k` of the angle between rotation entries `k` and `k + 1`.
    pub angle_index: usize,
    pub angle: f64,
    /// All angles at the vertex, in rotation order.
    pub angles: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EmbeddedGraph {
    genus: usize,
    vertices: Vec<SurfacePoint>,
    edges: Vec<GraphEdge>,
    rotation: Vec<Vec<Half>>,
}

impl EmbeddedGraph {
    /// Builds a graph, checking that the rotation lists every half-edge once at its origin.
    pub fn new(
        genus: usize,
        vertices: Vec<SurfacePoint>,
        edges: Vec<GraphEdge>,
        rotation: Vec<Vec<Half>>,
    ) -> Result<Self> {
        let g = EmbeddedGraph {
            genus,
            vertices,
            edges,
            rotation,
        };
        g.check_structure()?;
        Ok(g)
    }

    fn check_structure(&self) -> Result<()> {
        if self.rotation.len() != self.vertices.len() {
            return Err(GraphError::Input("one rotation list per vertex required".into()));
        }
        let mut seen = vec![[false; 2]; self.edges.len()];
        for (v, rot) in self.rotation.iter().enumerate() {
            for h in rot {
                if h.edge >= self.edges.len() {
                    return Err(GraphError::Input(format!("unknown edge {}", h.edge)));
                }
                if self.origin(*h) != v {
                    return Err(GraphError::Input(format!("half-edge {h:?} listed at wrong vertex {v}")));
                }
                let slot = &mut seen[h.edge][h.forward as usize];
                if *slot {
                    return Err(GraphError::Input(format!("half-edge {h:?} listed twice")));
                }
                *slot = true;
            }
        }
        for (e, s) in seen.iter().enumerate() {
            let ed = &self.edges[e];
            if ed.a >= self.vertices.len() || ed.b >= self.vertices.len() {
                return Err(GraphError::Input(format!("edge {e} has unknown endpoint")));
            }
            if !s[0] || !s[1] {
                return Err(GraphError::Input(format!("edge {e} missing from rotation")));
            }
        }
        Ok(())
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[SurfacePoint] {
        &self.vertices
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn rotation(&self, v: usize) -> &[Half] {
        &self.rotation[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.rotation[v].len()
    }

    pub fn origin(&self, h: Half) -> usize {
        let e = &self.edges[h.edge];
        if h.forward {
            e.a
        } else {
            e.b
        }
    }

    pub fn target(&self, h: Half) -> usize {
        self.origin(h.twin())
    }

    /// Map from the target's chart into the origin's chart along `h`.
    pub fn half_map(&self, h: Half) -> Isometry {
        let e = &self.edges[h.edge];
        if h.forward {
            e.hol
        } else {
            e.hol.inverse()
        }
    }

    /// The far endpoint of `h`, lifted into the origin's chart.
    pub fn far_point(&self, h: Half) -> HPoint {
        self.half_map(h).apply(&self.vertices[self.target(h)].pos)
    }

    /// Outgoing direction of `h` at its origin.
    pub fn direction(&self, h: Half) -> Result<f64> {
        let p = &self.vertices[self.origin(h)].pos;
        Ok(direction_to(p, &self.far_point(h))?)
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let ed = &self.edges[e];
        dist(&self.vertices[ed.a].pos, &ed.hol.apply(&self.vertices[ed.b].pos))
    }

    pub fn total_length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).sum()
    }

    /// Counterclockwise angles at `v` between consecutive rotation entries.
    pub fn angles(&self, v: usize) -> Result<Vec<f64>> {
        let rot = &self.rotation[v];
        let dirs = rot.iter().map(|h| self.direction(*h)).collect::<Result<Vec<_>>>()?;
        let n = dirs.len();
        Ok((0..n)
            .map(|k| {
                if n == 1 {
                    return 2.0 * PI;
                }
                (dirs[(k + 1) % n] - dirs[k]).rem_euclid(2.0 * PI)
            })
            .collect())
    }

    /// Whether the stored rotation at `v` agrees with the geometric order of its edges.
    pub fn rotation_consistent(&self, v: usize) -> bool {
        match self.angles(v) {
            Ok(a) => {
                let sum: f64 = a.iter().sum();
                (sum - 2.0 * PI).abs() < 1e-9 && a.iter().all(|x| *x > 1e-12)
            }
            Err(_) => false,
        }
    }

    fn positions(&self) -> HashMap<Half, (usize, usize)> {
        let mut m = HashMap::new();
        for (v, rot) in self.rotation.iter().enumerate() {
            for (k, h) in rot.iter().enumerate() {
                m.insert(*h, (v, k));
            }
        }
        m
    }

    /// Faces traced from the rotation system, each as its cycle of half-edges.
    pub fn faces(&self) -> Vec<Vec<Half>> {
        let pos = self.positions();
        let next = |h: Half| {
            let t = h.twin();
            let (v, k) = pos[&t];
            let rot = &self.rotation[v];
            rot[(k + rot.len() - 1) % rot.len()]
        };
        let mut done: HashMap<Half, bool> = HashMap::new();
        let mut out = Vec::new();
        for rot in &self.rotation {
            for &h0 in rot {
                if done.contains_key(&h0) {
                    continue;
                }
                let mut face = Vec::new();
                let mut h = h0;
                loop {
                    done.insert(h, true);
                    face.push(h);
                    h = next(h);
                    if h == h0 {
                        break;
                    }
                }
                out.push(face);
            }
        }
        out
    }

    pub fn tri_counts(&self) -> TriCounts {
        let excess: i64 = (0..self.vertices.len())
            .map(|v| self.degree(v) as i64 - 3)
            .sum();
        TriCounts {
            v_tri: self.vertices.len() as i64 + excess,
            e_tri: self.edges.len() as i64 + excess,
            f_tri: self.faces().len() as i64,
        }
    }

    /// Euler check of the traced faces against the surface genus.
    pub fn is_filling(&self) -> bool {
        let chi = self.vertices.len() as i64 - self.edges.len() as i64 + self.faces().len() as i64;
        chi == 2 - 2 * self.genus as i64
    }

    /// Re-homes vertex `v` into a triangle containing it, adjusting holonomies.
    pub fn rehome(&mut self, s: &TriangulatedSurface, v: usize) -> Result<()> {
        let (sp, m) = s.locate(&self.vertices[v])?;
        if sp.tri == self.vertices[v].tri {
            self.vertices[v] = sp;
            return Ok(());
        }
        let mi = m.inverse();
        for e in self.edges.iter_mut() {
            if e.a == v {
                e.hol = mi.compose(&e.hol);
            }
            if e.b == v {
                e.hol = e.hol.compose(&m);
            }
        }
        self.vertices[v] = sp;
        Ok(())
    }

    fn remove_edge(&mut self, e: usize) {
        for rot in self.rotation.iter_mut() {
            rot.retain(|h| h.edge != e);
        }
        let last = self.edges.len() - 1;
        self.edges.swap_remove(e);
        if e != last {
            for rot in self.rotation.iter_mut() {
                for h in rot.iter_mut() {
                    if h.edge == last {
                        h.edge = e;
                    }
                }
            }
        }
    }

    fn remove_vertex(&mut self, v: usize) {
        debug_assert!(self.rotation[v].is_empty());
        let last = self.vertices.len() - 1;
        self.vertices.swap_remove(v);
        self.rotation.swap_remove(v);
        if v != last {
            for e in self.edges.iter_mut() {
                if e.a == last {
                    e.a = v;
                }
                if e.b == last {
                    e.b = v;
                }
            }
        }
    }

    /// Two crossing edges, or a vertex lying on another edge, if any.
    pub fn find_crossing(&self, s: &TriangulatedSurface) -> Result<Option<(usize, usize)>> {
        let mut g = self.clone();
        for v in 0..g.vertices.len() {
            g.rehome(s, v)?;
        }
        let nt = s.triangles();
        let mut by_tri: Vec<Vec<usize>> = vec![Vec::new(); nt];
        for (e, ed) in g.edges.iter().enumerate() {
            by_tri[g.vertices[ed.a].tri].push(e);
        }
        let maxlen = (0..g.edges.len()).map(|e| g.edge_length(e)).fold(0.0, f64::max);
        let circ = (0..nt)
            .filter_map(|t| {
                let c = s.incenter(t);
                s.triangle(t).map(|tr| tr.vertices().iter().map(|v| dist(&c, v)).fold(0.0, f64::max))
            })
            .fold(0.0, f64::max);
        let radius = 3.0 * circ + 2.0 * maxlen + 1.0;
        let seg = |e: usize| {
            let ed = &g.edges[e];
            (g.vertices[ed.a].pos, ed.hol.apply(&g.vertices[ed.b].pos))
        };
        for t in 0..nt {
            if by_tri[t].is_empty() {
                continue;
            }
            let mine: Vec<(usize, HPoint, HPoint)> = by_tri[t]
                .iter()
                .map(|&e| {
                    let (p, q) = seg(e);
                    (e, p, q)
                })
                .collect();
            for copy in s.develop(t, usize::MAX, radius) {
                for &f in &by_tri[copy.tri] {
                    let (p, q) = seg(f);
                    let (p, q) = (copy.map.apply(&p), copy.map.apply(&q));
                    for (e, a, b) in &mine {
                        if copy.depth == 0 && *e == f {
                            continue;
                        }
                        if segments_meet(a, b, &p, &q, CROSSING_TOL) {
                            return Ok(Some((*e, f)));
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    pub fn to_json(&self) -> GraphJson {
        GraphJson {
            genus: self.genus,
            vertices: self
                .vertices
                .iter()
                .map(|v| VertexJson {
                    tri: v.tri,
                    coords: v.pos.coords(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeJson {
                    a: e.a,
                    b: e.b,
                    holonomy: e.hol.matrix(),
                })
                .collect(),
            rotation: self.rotation.clone(),
        }
    }

    pub fn from_json(j: &GraphJson) -> Result<Self> {
        let vertices = j
            .vertices
            .iter()
            .map(|v| {
                Ok(SurfacePoint {
                    tri: v.tri,
                    pos: HPoint::from_coords(v.coords)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let edges = j
            .edges
            .iter()
            .map(|e| {
                Ok(GraphEdge {
                    a: e.a,
                    b: e.b,
                    hol: Isometry::from_matrix(e.holonomy)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        EmbeddedGraph::new(j.genus, vertices, edges, j.rotation.clone())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexJson {
    pub tri: usize,
    pub coords: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeJson {
    pub a: usize,
    pub b: usize,
    pub holonomy: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub genus: usize,
    pub vertices: Vec<VertexJson>,
    pub edges: Vec<EdgeJson>,
    pub rotation: Vec<Vec<Half>>,
}

fn unit_normal(a: &HPoint, b: &HPoint) -> nalgebra::Vector3<f64> {
    let n = lcross(a.vec(), b.vec());
    n / mdot(&n, &n).max(1e-300).sqrt()
}

fn on_segment(a: &HPoint, b: &HPoint, p: &HPoint, tol: f64) -> bool {
    dist(a, p) > tol && dist(b, p) > tol && dist(a, p) + dist(p, b) - dist(a, b) < tol.sqrt() * 1e-3
}

/// Whether two geodesic segments cross, or one touches the other's interior.
///
/// Segments sharing an endpoint meet only if they leave it in the same direction.
pub fn segments_meet(a: &HPoint, b: &HPoint, c: &HPoint, d: &HPoint, tol: f64) -> bool {
    for (x, xo, y, yo) in [(a, b, c, d), (a, b, d, c), (b, a, c, d), (b, a, d, c)] {
        if dist(x, y) < tol {
            return crate::hyp::angle(x, xo, yo).map_or(true, |t| t < tol);
        }
    }
    let n1 = unit_normal(a, b);
    let n2 = unit_normal(c, d);
    let (s1, s2) = (mdot(&n1, c.vec()), mdot(&n1, d.vec()));
    let (t1, t2) = (mdot(&n2, a.vec()), mdot(&n2, b.vec()));
    let clear = [s1, s2, t1, t2].iter().all(|x| x.abs() > tol);
    if clear && s1 * s2 < 0.0 && t1 * t2 < 0.0 {
        return true;
    }
    (s1.abs() <= tol && on_segment(a, b, c, tol))
        || (s2.abs() <= tol && on_segment(a, b, d, tol))
        || (t1.abs() <= tol && on_segment(c, d, a, tol))
        || (t2.abs() <= tol && on_segment(c, d, b, tol))
}

/// The 1-skeleton of a closed triangulated surface as an embedded graph.
pub fn skeleton_graph(s: &TriangulatedSurface) -> Result<EmbeddedGraph> {
    if s.kind() != SurfaceKind::Closed {
        return Err(GraphError::Unsupported("skeleton graphs need a closed surface".into()));
    }
    let comb = s.combinatorics();
    let orbits = s.vertex_orbits();
    let maps = s.corner_maps();
    let vertices = orbits
        .iter()
        .map(|o| {
            let r = o[0];
            SurfacePoint {
                tri: r / 3,
                pos: s.corner(r / 3, r % 3).expect("closed surfaces have finite corners"),
            }
        })
        .collect::<Vec<_>>();
    let mut edges = Vec::new();
    let mut half_of = vec![Half { edge: 0, forward: true }; comb.darts()];
    for d in 0..comb.darts() {
        let e = comb.iota(d);
        if d > e {
            continue;
        }
        let hol = maps[d].compose(&maps[rho(d)].inverse());
        half_of[d] = Half {
            edge: edges.len(),
            forward: true,
        };
        half_of[e] = Half {
            edge: edges.len(),
            forward: false,
        };
        edges.push(GraphEdge {
            a: s.vertex_of(d),
            b: s.vertex_of(rho(d)),
            hol,
        });
    }
    // Orbits of σ turn clockwise, rotations are counterclockwise.
    let rotation = orbits
        .iter()
        .map(|o| o.iter().rev().map(|&d| half_of[d]).collect())
        .collect();
    let g = EmbeddedGraph::new(s.euler_data().genus, vertices, edges, rotation)?;
    for v in 0..g.vertex_count() {
        if !g.rotation_consistent(v) {
            return Err(GraphError::Invariant(format!("skeleton rotation at {v} disagrees with geometry")));
        }
    }
    Ok(g)
}

/// Largest face count a filling graph can keep and still reach a trivalent
/// configuration with all angles 2π/3: each face then needs at least seven sides.
pub fn max_faces_for_convergence(genus: usize) -> usize {
    12 * genus.saturating_sub(1)
}

/// Deletes edges separating two distinct faces while every vertex keeps degree
/// at least 3, until at most `max_faces` faces remain or no edge qualifies.
///
/// Deleting such an edge merges two disks into one, so the result stays filling.
pub fn prune_faces(g: &EmbeddedGraph, max_faces: usize) -> EmbeddedGraph {
    prune_faces_with(g, max_faces, |_| 0)
}

/// Like [`prune_faces`], breaking ties between equally small merges with `tiebreak`.
fn prune_faces_with(g: &EmbeddedGraph, max_faces: usize, mut tiebreak: impl FnMut(usize) -> u64) -> EmbeddedGraph {
    let mut out = g.clone();
    loop {
        let faces = out.faces();
        if faces.len() <= max_faces {
            return out;
        }
        let mut face_of = HashMap::new();
        for (f, face) in faces.iter().enumerate() {
            for h in face {
                face_of.insert(*h, f);
            }
        }
        // Merge the smallest face first, with its smallest neighbour.
        let pick = (0..out.edge_count())
            .filter(|&e| {
                let fwd = Half { edge: e, forward: true };
                let ed = &out.edges[e];
                let degrees_ok = if ed.a == ed.b {
                    out.degree(ed.a) > 4
                } else {
                    out.degree(ed.a) > 3 && out.degree(ed.b) > 3
                };
                degrees_ok && face_of[&fwd] != face_of[&fwd.twin()]
            })
            .map(|e| {
                let fwd = Half { edge: e, forward: true };
                let (x, y) = (faces[face_of[&fwd]].len(), faces[face_of[&fwd.twin()]].len());
                ((x.min(y), x.max(y), tiebreak(e), e), e)
            })
            .min_by_key(|(k, _)| *k)
            .map(|(_, e)| e);
        match pick {
            Some(e) => out.remove_edge(e),
            None => return out,
        }
    }
}

const PRUNE_ATTEMPTS: u64 = 200;

/// Skeleton pruned as far as possible, as a starting graph for shortening.
///
/// Fails when some face keeps fewer than seven sides, since such a face has
/// no room to reach 2π/3 corners.
pub fn shortening_start(s: &TriangulatedSurface) -> Result<EmbeddedGraph> {
    let sk = skeleton_graph(s)?;
    let smallest = |g: &EmbeddedGraph| g.faces().iter().map(|f| f.len()).min().unwrap_or(0);
    let mut best = prune_faces(&sk, 1);
    // Greedy pruning can strand small faces; retry with seeded random tie breaks.
    for seed in 0..PRUNE_ATTEMPTS {
        if smallest(&best) >= 7 {
            return Ok(best);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = prune_faces_with(&sk, 1, |_| rng.gen());
        if smallest(&g) > smallest(&best) {
            best = g;
        }
    }
    if smallest(&best) >= 7 {
        return Ok(best);
    }
    Err(GraphError::Unsupported(format!(
        "pruned skeleton keeps a face with {} sides",
        smallest(&best)
    )))
}

/// Collapses a non-loop edge to its midpoint.
pub fn shrink_edge(g: &EmbeddedGraph, s: &TriangulatedSurface, e: usize) -> Result<EmbeddedGraph> {
    let ed = *g
        .edges
        .get(e)
        .ok_or_else(|| GraphError::Precondition(format!("no edge {e}")))?;
    if ed.a == ed.b {
        return Err(GraphError::Precondition("cannot shrink a loop".into()));
    }
    let before = g.tri_counts();
    let mut out = g.clone();
    let (a, b, h) = (ed.a, ed.b, ed.hol);
    let m = crate::hyp::midpoint(&g.vertices[a].pos, &h.apply(&g.vertices[b].pos));
    out.vertices[a].pos = m;
    let hi = h.inverse();
    for (f, x) in out.edges.iter_mut().enumerate() {
        if f == e {
            continue;
        }
        if x.a == b {
            x.a = a;
            x.hol = h.compose(&x.hol);
        }
        if x.b == b {
            x.b = a;
            x.hol = x.hol.compose(&hi);
        }
    }
    let fwd = Half { edge: e, forward: true };
    let ra = &g.rotation[a];
    let rb = &g.rotation[b];
    let ka = ra.iter().position(|x| *x == fwd).expect("edge listed at a");
    let kb = rb.iter().position(|x| *x == fwd.twin()).expect("edge listed at b");
    let mut merged = Vec::with_capacity(ra.len() + rb.len() - 2);
    merged.extend((1..ra.len()).map(|i| ra[(ka + i) % ra.len()]));
    merged.extend((1..rb.len()).map(|i| rb[(kb + i) % rb.len()]));
    out.rotation[a] = merged;
    out.rotation[b].clear();
    out.remove_edge(e);
    out.remove_vertex(b);
    let a = if a == out.vertices.len() { b } else { a };
    out.rehome(s, a)?;
    let after = out.tri_counts();
    if before != after {
        return Err(GraphError::Invariant(format!("shrink changed counts {before:?} -> {after:?}")));
    }
    Ok(out)
}

/// Violations of the local shortest-position conditions at tolerance `tol`.
pub fn detect_non_shortest_tol(g: &EmbeddedGraph, tol: f64) -> Result<Vec<NonShortestReport>> {
    let mut out = Vec::new();
    for v in 0..g.vertex_count() {
        let deg = g.degree(v);
        let angles = g.angles(v)?;
        if deg > 3 {
            for (k, a) in angles.iter().enumerate() {
                if *a < PI / 2.0 - tol {
                    out.push(NonShortestReport {
                        vertex: v,
                        kind: ViolationKind::TypeI,
                        angle_index: k,
                        angle: *a,
                        angles: angles.clone(),
                    });
                }
            }
        } else if deg == 3 {
            let worst = angles
                .iter()
                .enumerate()
                .map(|(k, a)| (k, (a - 2.0 * PI / 3.0).abs()))
                .fold((0, -1.0), |x, y| if y.1 > x.1 { y } else { x });
            if worst.1 > tol {
                out.push(NonShortestReport {
                    vertex: v,
                    kind: ViolationKind::TypeII,
                    angle_index: worst.0,
                    angle: angles[worst.0],
                    angles,
                });
            }
        }
    }
    Ok(out)
}

pub fn detect_non_shortest(g: &EmbeddedGraph) -> Result<Vec<NonShortestReport>> {
    detect_non_shortest_tol(g, ANGLE_TOL)
}

fn point_along(g: &EmbeddedGraph, h: Half, eps: f64) -> Result<HPoint> {
    let p = g.vertices[g.origin(h)].pos;
    let v = tangent_toward(&p, &g.far_point(h))?;
    Ok(exp(&p, &v, eps))
}

fn min_incident_length(g: &EmbeddedGraph, v: usize) -> f64 {
    g.rotation[v]
        .iter()
        .map(|h| g.edge_length(h.edge))
        .fold(f64::INFINITY, f64::min)
}

/// Moves `v` to the Fermat point of the points at distance `eps` along its three edges.
///
/// An edge shorter than `eps` is cut at its far endpoint.
fn fermat_move(g: &EmbeddedGraph, v: usize, eps: f64) -> Result<EmbeddedGraph> {
    let rot = g.rotation[v].clone();
    if rot.len() != 3 {
        return Err(GraphError::Precondition("Fermat replacement needs degree 3".into()));
    }
    let pts = rot
        .iter()
        .map(|h| {
            if eps >= g.edge_length(h.edge) {
                Ok(g.far_point(*h))
            } else {
                point_along(g, *h, eps)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let tri = HTriangle::new(pts[0], pts[1], pts[2])?;
    let (p, _) = fermat_point(&tri)?;
    let mut out = g.clone();
    out.vertices[v].pos = p;
    Ok(out)
}

/// Inserts a vertex on one edge of the angle `k` at distance `eps` and slides the other edge onto it.
///
/// The vertex goes on entry `k` when `along_first`, otherwise on entry `k + 1`.
fn slide_move(g: &EmbeddedGraph, v: usize, k: usize, along_first: bool, eps: f64) -> Result<(EmbeddedGraph, usize)> {
    let rot = g.rotation[v].clone();
    let n_rot = rot.len();
    let k2 = (k + 1) % n_rot;
    let (h1, h2) = (rot[k], rot[k2]);
    if h1.edge == h2.edge {
        return Err(GraphError::Precondition("cannot slide a loop along itself".into()));
    }
    let (keep, drop) = if along_first { (k, k2) } else { (k2, k) };
    let pos = point_along(g, rot[keep], eps)?;
    let mut out = g.clone();
    let n = out.vertices.len();
    out.vertices.push(SurfacePoint {
        tri: g.vertices[v].tri,
        pos,
    });
    let new_e = out.edges.len();
    out.edges.push(GraphEdge {
        a: v,
        b: n,
        hol: Isometry::identity(),
    });
    for h in [h1, h2] {
        let e = &mut out.edges[h.edge];
        if h.forward {
            e.a = n;
        } else {
            e.b = n;
        }
    }
    let mut rv: Vec<Half> = Vec::with_capacity(n_rot - 1);
    for (i, h) in rot.iter().enumerate() {
        if i == keep {
            rv.push(Half {
                edge: new_e,
                forward: true,
            });
        } else if i != drop {
            rv.push(*h);
        }
    }
    out.rotation[v] = rv;
    out.rotation.push(vec![
        h1,
        h2,
        Half {
            edge: new_e,
            forward: false,
        },
    ]);
    Ok((out, n))
}

/// Splits a degree-4 vertex with right angles using the Fermat point of `v`
/// and the points at distance `eps` along the two edges of angle `k`.
fn split_move(g: &EmbeddedGraph, v: usize, k: usize, eps: f64) -> Result<(EmbeddedGraph, usize)> {
    let rot = g.rotation[v].clone();
    let (h1, h2) = (rot[k], rot[(k + 1) % rot.len()]);
    if h1.edge == h2.edge {
        return Err(GraphError::Precondition("cannot split along a single loop".into()));
    }
    let a = point_along(g, h1, eps)?;
    let b = point_along(g, h2, eps)?;
    let tri = HTriangle::new(g.vertices[v].pos, a, b)?;
    let (p, _) = fermat_point(&tri)?;
    let (mut out, n) = slide_move(g, v, k, true, eps)?;
    out.vertices[n].pos = p;
    Ok((out, n))
}

/// Change in total length between two graphs that differ only at the edges
/// incident to `moved` (indices taken in `after`), summed over those edges alone.
fn length_change(before: &EmbeddedGraph, after: &EmbeddedGraph, moved: &[usize]) -> f64 {
    let mut edges: Vec<usize> = moved
        .iter()
        .filter(|&&v| v < after.vertex_count())
        .flat_map(|&v| after.rotation[v].iter().map(|h| h.edge))
        .collect();
    edges.sort_unstable();
    edges.dedup();
    edges
        .iter()
        .map(|&e| {
            let old = if e < before.edge_count() {
                before.edge_length(e)
            } else {
                0.0
            };
            after.edge_length(e) - old
        })
        .sum()
}

/// Local checks shared by all moves: rotation agreement near the moved vertices
/// and strict length decrease.
fn accept_move(
    before: &EmbeddedGraph,
    after: &mut EmbeddedGraph,
    s: &TriangulatedSurface,
    moved: &[usize],
    eps: f64,
) -> Result<()> {
    let mut near: Vec<usize> = moved.to_vec();
    for &v in moved {
        for h in &after.rotation[v] {
            near.push(after.target(*h));
        }
    }
    near.sort_unstable();
    near.dedup();
    if near.iter().any(|&v| !after.rotation_consistent(v)) {
        return Err(GraphError::Retry("rotation order changed".into()));
    }
    let change = length_change(before, after, moved);
    if !(change < 0.0) {
        return Err(GraphError::NoProgress(format!("length change {change:e}")));
    }
    for &v in moved {
        if v < before.vertex_count() {
            let d = dist(&before.vertices[v].pos, &after.vertices[v].pos);
            if d > 2.0 * eps + 1e-12 {
                return Err(GraphError::Invariant(format!("vertex {v} moved {d} > 2ε")));
            }
        }
    }
    for &v in moved {
        after.rehome(s, v)?;
    }
    let (c0, c1) = (before.tri_counts(), after.tri_counts());
    if c0 != c1 {
        return Err(GraphError::Invariant(format!("counts changed {c0:?} -> {c1:?}")));
    }
    Ok(())
}

/// Applies the shortening move for one report with step `eps`.
pub fn apply_shortening(
    g: &EmbeddedGraph,
    s: &TriangulatedSurface,
    r: &NonShortestReport,
    eps: f64,
) -> Result<EmbeddedGraph> {
    let v = r.vertex;
    if v >= g.vertex_count() {
        return Err(GraphError::Precondition(format!("no vertex {v}")));
    }
    if !(eps > 0.0) {
        return Err(GraphError::Precondition(format!("epsilon {eps} must be positive")));
    }
    let (mut out, moved) = match r.kind {
        ViolationKind::TypeII => {
            if g.degree(v) != 3 {
                return Err(GraphError::Precondition("stale type II report".into()));
            }
            (degenerate_as_retry(fermat_move(g, v, eps))?, vec![v])
        }
        ViolationKind::TypeI => {
            if g.degree(v) <= 3 || r.angle_index >= g.degree(v) {
                return Err(GraphError::Precondition("stale type I report".into()));
            }
            let (k, along_first, len) = slide_choice(g, v, r.angle_index);
            if eps >= 0.5 * len {
                return Err(GraphError::Retry(format!("epsilon {eps} too large")));
            }
            let (o, n) = degenerate_as_retry(slide_move(g, v, k, along_first, eps))?;
            (o, vec![v, n])
        }
    };
    accept_move(g, &mut out, s, &moved, eps)?;
    Ok(out)
}

/// The angle index, whether to slide along its first edge, and that edge's length.
///
/// Slides go along the longer of the two edges.
fn slide_choice(g: &EmbeddedGraph, v: usize, k: usize) -> (usize, bool, f64) {
    let rot = &g.rotation[v];
    let l1 = g.edge_length(rot[k].edge);
    let l2 = g.edge_length(rot[(k + 1) % rot.len()].edge);
    if l1 >= l2 {
        (k, true, l1)
    } else {
        (k, false, l2)
    }
}

/// Step length for the move at `v`: a fraction of the edges the move walks along.
fn move_scale(g: &EmbeddedGraph, m: Move) -> f64 {
    match m {
        Move::Slide(v, k) => slide_choice(g, v, k).2,
        Move::Split(v, k) => {
            let rot = &g.rotation[v];
            g.edge_length(rot[k].edge).min(g.edge_length(rot[(k + 1) % rot.len()].edge))
        }
        Move::Fermat(v) => {
            // Close to balance, cut at the far endpoints: the move then places `v`
            // at its optimum for fixed neighbours.
            let near = g
                .angles(v)
                .map(|a| a.iter().all(|x| (x - 2.0 * PI / 3.0).abs() < NEAR_BALANCE))
                .unwrap_or(false);
            if near {
                f64::INFINITY
            } else {
                min_incident_length(g, v)
            }
        }
    }
}

fn degenerate_as_retry<T>(r: Result<T>) -> Result<T> {
    match r {
        Err(GraphError::Hyp(HypError::Degenerate(m))) => Err(GraphError::Retry(m)),
        Err(GraphError::Hyp(HypError::Convergence { residual, .. })) => {
            Err(GraphError::Retry(format!("Fermat solver stalled at {residual:e}")))
        }
        other => other,
    }
}

/// Splits a degree-4 vertex whose four angles are all right angles, at angle `k`.
pub fn apply_right_angle_split(
    g: &EmbeddedGraph,
    s: &TriangulatedSurface,
    v: usize,
    k: usize,
    eps: f64,
) -> Result<EmbeddedGraph> {
    if g.degree(v) != 4 || k >= 4 {
        return Err(GraphError::Precondition("split needs degree 4".into()));
    }
    if !(eps > 0.0) || eps >= 0.5 * move_scale(g, Move::Split(v, k)) {
        return Err(GraphError::Retry(format!("epsilon {eps} too large")));
    }
    let (mut out, n) = degenerate_as_retry(split_move(g, v, k, eps))?;
    accept_move(g, &mut out, s, &[v, n], eps)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortenConfig {
    pub max_iterations: usize,
    pub shrink_threshold: f64,
    /// Initial step as a fraction of the edge the move acts on.
    pub eps_factor: f64,
    pub eps_min: f64,
    /// Angle tolerance for the stopping test.
    pub angle_tol: f64,
    /// A trivalent result whose angles are all within this of 2pi/3 counts as converged.
    pub success_tol: f64,
    /// Sweeps between global embeddedness checks; 0 disables them.
    pub check_every: usize,
}

impl Default for ShortenConfig {
    fn default() -> Self {
        ShortenConfig {
            max_iterations: 10_000,
            shrink_threshold: 1e-8,
            eps_factor: 1.0,
            eps_min: 1e-12,
            angle_tol: ANGLE_TOL,
            success_tol: SUCCESS_TOL,
            check_every: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationLog {
    pub iteration: usize,
    pub length: f64,
    pub violations: usize,
    pub action: String,
}

#[derive(Debug, Clone)]
pub struct ShortenResult {
    pub graph: EmbeddedGraph,
    pub log: Vec<IterationLog>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest |angle - 2pi/3| over all corners of the result.
    pub max_angle_deviation: f64,
    /// Violations still present at `angle_tol`.
    pub residual: Vec<NonShortestReport>,
    /// Vertices where even the smallest step was rejected.
    pub flagged: Vec<usize>,
}

pub fn write_log_csv<W: Write>(log: &[IterationLog], w: W) -> std::result::Result<(), csv::Error> {
    let mut wr = csv::Writer::from_writer(w);
    for row in log {
        wr.serialize(row)?;
    }
    wr.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy)]
enum Move {
    Slide(usize, usize),
    Split(usize, usize),
    Fermat(usize),
}

fn next_move(g: &EmbeddedGraph, v: usize, tol: f64) -> Result<Option<Move>> {
    let deg = g.degree(v);
    if deg < 3 {
        return Err(GraphError::Invariant(format!("vertex {v} has degree {deg}")));
    }
    let angles = g.angles(v)?;
    if deg > 3 {
        if let Some(k) = angles.iter().position(|a| *a < PI / 2.0 - tol) {
            return Ok(Some(Move::Slide(v, k)));
        }
        // All four angles are right angles; split at the angle with the longest short side.
        let rot = &g.rotation[v];
        let k = (0..deg)
            .max_by(|&i, &j| {
                let m = |k: usize| g.edge_length(rot[k].edge).min(g.edge_length(rot[(k + 1) % deg].edge));
                m(i).total_cmp(&m(j)).then(j.cmp(&i))
            })
            .unwrap_or(0);
        return Ok(Some(Move::Split(v, k)));
    }
    if angles.iter().any(|a| (a - 2.0 * PI / 3.0).abs() > tol) {
        return Ok(Some(Move::Fermat(v)));
    }
    Ok(None)
}

fn try_move(g: &EmbeddedGraph, s: &TriangulatedSurface, m: Move, eps: f64) -> Result<EmbeddedGraph> {
    match m {
        Move::Slide(v, k) => {
            let r = NonShortestReport {
                vertex: v,
                kind: ViolationKind::TypeI,
                angle_index: k,
                angle: 0.0,
                angles: Vec::new(),
            };
            apply_shortening(g, s, &r, eps)
        }
        Move::Split(v, k) => apply_right_angle_split(g, s, v, k, eps),
        Move::Fermat(v) => {
            let r = NonShortestReport {
                vertex: v,
                kind: ViolationKind::TypeII,
                angle_index: 0,
                angle: 0.0,
                angles: Vec::new(),
            };
            apply_shortening(g, s, &r, eps)
        }
    }
}

/// Vertices whose incident edges a move at `v` may have changed.
fn touched(before: &EmbeddedGraph, after: &EmbeddedGraph, v: usize) -> Vec<usize> {
    let mut out = vec![v];
    out.extend(before.vertex_count()..after.vertex_count());
    out
}

fn shrink_short(g: &mut EmbeddedGraph, s: &TriangulatedSurface, threshold: f64, actions: &mut Vec<String>) -> Result<()> {
    while let Some(e) =
        (0..g.edge_count()).find(|&e| g.edges[e].a != g.edges[e].b && g.edge_length(e) < threshold)
    {
        *g = shrink_edge(g, s, e)?;
        actions.push(format!("shrink e{e}"));
    }
    Ok(())
}

/// Largest deviation of any corner angle from 2pi/3.
pub fn max_angle_deviation(g: &EmbeddedGraph) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for v in 0..g.vertex_count() {
        for a in g.angles(v)? {
            worst = worst.max((a - 2.0 * PI / 3.0).abs());
        }
    }
    Ok(worst)
}

/// Repeated sweeps of shrinking and local shortening moves.
///
/// One iteration is one sweep over all vertices in id order.
pub fn shorten_to_local_min(
    g: &EmbeddedGraph,
    s: &TriangulatedSurface,
    cfg: &ShortenConfig,
) -> Result<ShortenResult> {
    if !g.is_filling() {
        return Err(GraphError::Precondition("input graph is not filling".into()));
    }
    let counts = g.tri_counts();
    let mut cur = g.clone();
    let mut log = Vec::new();
    let mut flagged = Vec::new();
    let mut factor = cfg.eps_factor;
    let mut checkpoint = (cur.clone(), 0usize);
    let mut iterations = 0;
    let mut converged = false;
    let mut recorded = cur.total_length();
    while iterations < cfg.max_iterations {
        let before_sweep = cur.clone();
        let mut actions: Vec<String> = Vec::new();
        shrink_short(&mut cur, s, cfg.shrink_threshold, &mut actions)?;
        let mut moves = Vec::new();
        for v in 0..cur.vertex_count() {
            if let Some(m) = next_move(&cur, v, cfg.angle_tol)? {
                moves.push(m);
            }
        }
        if moves.is_empty() {
            converged = true;
            break;
        }
        iterations += 1;
        let violations = moves.len();
        let length_before = cur.total_length();
        let mut accepted = 0;
        let mut gain = 0.0;
        for m in moves {
            let v = match m {
                Move::Slide(v, _) | Move::Split(v, _) | Move::Fermat(v) => v,
            };
            if v >= cur.vertex_count() {
                continue;
            }
            let m = match next_move(&cur, v, cfg.angle_tol)? {
                Some(m) => m,
                None => continue,
            };
            let mut eps = factor * move_scale(&cur, m);
            loop {
                match try_move(&cur, s, m, eps) {
                    Ok(next) => {
                        gain -= length_change(&cur, &next, &touched(&cur, &next, v));
                        cur = next;
                        accepted += 1;
                        shrink_short(&mut cur, s, cfg.shrink_threshold, &mut actions)?;
                        break;
                    }
                    Err(GraphError::NoProgress(_) | GraphError::Retry(_)) if eps.is_infinite() => {
                        eps = factor * min_incident_length(&cur, v);
                    }
                    // A balanced Fermat move has nothing left to gain; slides may just need a shorter step.
                    Err(GraphError::NoProgress(_)) if matches!(m, Move::Fermat(_)) => break,
                    Err(GraphError::Retry(_) | GraphError::NoProgress(_)) => {
                        eps /= 2.0;
                        if eps < cfg.eps_min {
                            if !flagged.contains(&v) {
                                flagged.push(v);
                            }
                            break;
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        let length = cur.total_length();
        if length > length_before + 1e-12 {
            return Err(GraphError::Invariant(format!("length rose {length_before} -> {length}")));
        }
        // Below float resolution the sweep only jitters the geometry; keep the last recorded state.
        if length >= recorded {
            cur = before_sweep;
            iterations -= 1;
            break;
        }
        recorded = length;
        actions.push(format!("{accepted} moves"));
        log.push(IterationLog {
            iteration: iterations,
            length,
            violations,
            action: actions.join("; "),
        });
        if accepted == 0 || gain < MIN_SWEEP_DECREASE {
            break;
        }
        if cfg.check_every > 0 && iterations % cfg.check_every == 0 {
            if let Some((e, f)) = cur.find_crossing(s)? {
                log.push(IterationLog {
                    iteration: iterations,
                    length,
                    violations,
                    action: format!("rollback to {}: edges {e} and {f} meet", checkpoint.1),
                });
                cur = checkpoint.0.clone();
                recorded = cur.total_length();
                factor /= 2.0;
                if factor * 1.0 < cfg.eps_min {
                    break;
                }
                continue;
            }
            checkpoint = (cur.clone(), iterations);
        }
    }
    if let Some((e, f)) = cur.find_crossing(s)? {
        return Err(GraphError::Invariant(format!("result not embedded: edges {e} and {f} meet")));
    }
    if cur.tri_counts() != counts || !cur.is_filling() {
        return Err(GraphError::Invariant("counts or filling changed".into()));
    }
    let residual = detect_non_shortest_tol(&cur, cfg.angle_tol)?;
    let max_angle_deviation = max_angle_deviation(&cur)?;
    let trivalent = (0..cur.vertex_count()).all(|v| cur.degree(v) == 3);
    Ok(ShortenResult {
        converged: converged || (trivalent && max_angle_deviation <= cfg.success_tol),
        graph: cur,
        log,
        iterations,
        max_angle_deviation,
        residual,
        flagged,
    })
}
