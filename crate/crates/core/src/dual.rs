//! Dual 4-valent graphs: midpoints of the source edges joined across every
//! face corner. Following the two strands through each midpoint splits the
//! dual into closed curves.
//!
//! Everything combinatorial lives on [`CellComplex`], a surface map given by
//! its face cycles and the dart involution. The source may be an embedded
//! graph or a triangulation; the geometric data in [`DualGraph`] is only used
//! for lengths and tightening.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_rational::Rational64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fill_graph::{max_angle_deviation, EmbeddedGraph, GraphError, Half, SUCCESS_TOL};
use crate::hyp::{self, dist, midpoint, HPoint, HypError, Isometry};
use crate::surface::{tri_of, CombinatorialTriangulation, SurfaceError, SurfacePoint, TriangulatedSurface};

#[derive(Debug, Error)]
pub enum DualError {
    #[error("input error: {0}")]
    Input(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Hyp(#[from] HypError),
}

pub type Result<T> = std::result::Result<T, DualError>;

/// A closed oriented surface map: face cycles of darts plus the twin involution.
///
/// Dart `faces[f][i + 1]` follows `faces[f][i]` around face `f`. Corner `i`
/// of face `f` sits between darts `i` and `i + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellComplex {
    faces: Vec<Vec<usize>>,
    twin: Vec<usize>,
    place: Vec<(usize, usize)>,
    corner_offset: Vec<usize>,
    edge_of: Vec<usize>,
    edge_darts: Vec<[usize; 2]>,
}

impl CellComplex {
    pub fn new(faces: Vec<Vec<usize>>, twin: Vec<usize>) -> Result<Self> {
        let n = twin.len();
        let mut place = vec![(usize::MAX, 0); n];
        for (f, face) in faces.iter().enumerate() {
            if face.is_empty() {
                return Err(DualError::Input(format!("face {f} is empty")));
            }
            for (i, &d) in face.iter().enumerate() {
                if d >= n || place[d].0 != usize::MAX {
                    return Err(DualError::Input(format!("dart {d} misplaced in face {f}")));
                }
                place[d] = (f, i);
            }
        }
        if place.iter().any(|p| p.0 == usize::MAX) {
            return Err(DualError::Input("some darts lie in no face".into()));
        }
        for (d, &t) in twin.iter().enumerate() {
            if t >= n || t == d || twin[t] != d {
                return Err(DualError::Input(format!("twin is not an involution at dart {d}")));
            }
        }
        let mut corner_offset = Vec::with_capacity(faces.len() + 1);
        let mut acc = 0;
        for face in &faces {
            corner_offset.push(acc);
            acc += face.len();
        }
        corner_offset.push(acc);
        let mut edge_of = vec![usize::MAX; n];
        let mut edge_darts = Vec::new();
        for d in 0..n {
            if edge_of[d] == usize::MAX {
                edge_of[d] = edge_darts.len();
                edge_of[twin[d]] = edge_darts.len();
                edge_darts.push([d, twin[d]]);
            }
        }
        Ok(CellComplex {
            faces,
            twin,
            place,
            corner_offset,
            edge_of,
            edge_darts,
        })
    }

    /// Darts are `2e` (forward) and `2e + 1` (backward) for edge `e`.
    pub fn of_graph(g: &EmbeddedGraph) -> Self {
        let dart = |h: Half| 2 * h.edge + usize::from(!h.forward);
        let faces = g
            .faces()
            .iter()
            .map(|f| f.iter().map(|h| dart(*h)).collect())
            .collect();
        let twin = (0..2 * g.edge_count()).map(|d| d ^ 1).collect();
        CellComplex::new(faces, twin).expect("graph faces form a surface map")
    }

    /// One triangular face per triangle; darts keep their numbering.
    pub fn of_triangulation(c: &CombinatorialTriangulation) -> Self {
        let faces = (0..c.triangles()).map(|t| vec![3 * t, 3 * t + 1, 3 * t + 2]).collect();
        let twin = (0..c.darts()).map(|d| c.iota(d)).collect();
        CellComplex::new(faces, twin).expect("triangulation is a surface map")
    }

    pub fn faces(&self) -> &[Vec<usize>] {
        &self.faces
    }

    pub fn darts(&self) -> usize {
        self.twin.len()
    }

    pub fn twin(&self, d: usize) -> usize {
        self.twin[d]
    }

    /// Face and position of dart `d`.
    pub fn place(&self, d: usize) -> (usize, usize) {
        self.place[d]
    }

    pub fn edge_count(&self) -> usize {
        self.edge_darts.len()
    }

    pub fn edge_of(&self, d: usize) -> usize {
        self.edge_of[d]
    }

    pub fn edge_darts(&self, e: usize) -> [usize; 2] {
        self.edge_darts[e]
    }

    pub fn corner_count(&self) -> usize {
        *self.corner_offset.last().unwrap()
    }

    pub fn corner_id(&self, f: usize, i: usize) -> usize {
        self.corner_offset[f] + i % self.faces[f].len()
    }

    /// Face and position of corner `c`.
    pub fn corner_place(&self, c: usize) -> (usize, usize) {
        let f = self.corner_offset.partition_point(|&o| o <= c) - 1;
        (f, c - self.corner_offset[f])
    }

    fn prev_in_face(&self, d: usize) -> usize {
        let (f, i) = self.place[d];
        let k = self.faces[f].len();
        self.faces[f][(i + k - 1) % k]
    }

    /// Corner just before dart `d` in its face.
    pub fn prev_corner(&self, d: usize) -> usize {
        let (f, i) = self.place[d];
        self.corner_id(f, i + self.faces[f].len() - 1)
    }

    /// Corner just after dart `d` in its face.
    pub fn next_corner(&self, d: usize) -> usize {
        let (f, i) = self.place[d];
        self.corner_id(f, i)
    }

    /// Next dart leaving the same vertex.
    fn vertex_step(&self, d: usize) -> usize {
        self.twin[self.prev_in_face(d)]
    }

    /// Vertex cycles: darts grouped by the vertex they leave.
    pub fn vertices(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.darts()];
        let mut out = Vec::new();
        for d0 in 0..self.darts() {
            if seen[d0] {
                continue;
            }
            let mut cyc = Vec::new();
            let mut d = d0;
            while !seen[d] {
                seen[d] = true;
                cyc.push(d);
                d = self.vertex_step(d);
            }
            out.push(cyc);
        }
        out
    }

    pub fn min_degree(&self) -> usize {
        self.vertices().iter().map(|v| v.len()).min().unwrap_or(0)
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices().len() as i64 - self.edge_count() as i64 + self.faces.len() as i64
    }

    /// The two strands through the midpoint of edge `e`, as pairs of corners.
    ///
    /// A strand enters from a corner on one side of the edge and leaves into
    /// the corner at the other endpoint on the other side, so it crosses the
    /// edge transversally.
    pub fn pairing(&self, e: usize) -> [[usize; 2]; 2] {
        let [d, t] = self.edge_darts[e];
        [
            [self.prev_corner(d), self.prev_corner(t)],
            [self.next_corner(d), self.next_corner(t)],
        ]
    }

    /// The directed corner that follows `s` along its strand.
    pub fn strand_next(&self, s: DirCorner) -> DirCorner {
        let (f, i) = self.corner_place(s.corner);
        let k = self.faces[f].len();
        let end = if s.forward { self.faces[f][(i + 1) % k] } else { self.faces[f][i] };
        let t = self.twin[end];
        if s.forward {
            DirCorner {
                corner: self.prev_corner(t),
                forward: false,
            }
        } else {
            DirCorner {
                corner: self.next_corner(t),
                forward: true,
            }
        }
    }

    /// Dart at the start of a directed corner.
    pub fn start_dart(&self, s: DirCorner) -> usize {
        let (f, i) = self.corner_place(s.corner);
        let k = self.faces[f].len();
        if s.forward {
            self.faces[f][i]
        } else {
            self.faces[f][(i + 1) % k]
        }
    }

    /// Dart at the end of a directed corner.
    pub fn end_dart(&self, s: DirCorner) -> usize {
        self.start_dart(s.reversed())
    }
}

/// A dual edge traversed in one direction; `forward` runs from the midpoint
/// of dart `i` to that of dart `i + 1` of its face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirCorner {
    pub corner: usize,
    pub forward: bool,
}

impl DirCorner {
    pub fn reversed(self) -> Self {
        DirCorner {
            corner: self.corner,
            forward: !self.forward,
        }
    }
}

/// A dual vertex: the midpoint of a source edge in its home chart.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualVertex {
    pub home: SurfacePoint,
}

/// A dual edge: the chord across one face corner, drawn in the chart of that corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualEdge {
    pub chart: usize,
    pub from: HPoint,
    pub to: HPoint,
    /// Home chart of the start midpoint into this chart.
    pub from_map: Isometry,
    /// Home chart of the end midpoint into this chart.
    pub to_map: Isometry,
    pub length: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DualSource {
    Graph,
    Triangulation,
}

#[derive(Debug, Clone)]
pub struct DualGraph {
    cells: CellComplex,
    vertices: Vec<DualVertex>,
    edges: Vec<DualEdge>,
    source: DualSource,
}

impl DualGraph {
    pub fn cells(&self) -> &CellComplex {
        &self.cells
    }

    pub fn source(&self) -> DualSource {
        self.source
    }

    pub fn vertices(&self) -> &[DualVertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[DualEdge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn total_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Number of dual-edge ends at each dual vertex.
    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.vertices.len()];
        for c in 0..self.cells.corner_count() {
            let (f, i) = self.cells.corner_place(c);
            let face = &self.cells.faces[f];
            deg[self.cells.edge_of(face[i])] += 1;
            deg[self.cells.edge_of(face[(i + 1) % face.len()])] += 1;
        }
        deg
    }

    fn check(&self) -> Result<()> {
        if let Some(v) = self.degrees().iter().position(|&d| d != 4) {
            return Err(DualError::Invariant(format!("dual vertex {v} does not have degree 4")));
        }
        // Each corner end must be claimed by exactly one dual vertex.
        let mut claimed = vec![0u8; 2 * self.cells.corner_count()];
        for e in 0..self.cells.edge_count() {
            for d in self.cells.edge_darts(e) {
                claimed[2 * self.cells.prev_corner(d) + 1] += 1;
                claimed[2 * self.cells.next_corner(d)] += 1;
            }
        }
        if let Some(k) = claimed.iter().position(|&x| x != 1) {
            return Err(DualError::Invariant(format!("corner end {k} is claimed {} times", claimed[k])));
        }
        Ok(())
    }
}

/// Dual of an embedded graph whose faces are convex at every corner.
pub fn dual_of_graph(g: &EmbeddedGraph) -> Result<DualGraph> {
    let cells = CellComplex::of_graph(g);
    let half = |d: usize| Half {
        edge: d / 2,
        forward: d % 2 == 0,
    };
    let vertices = (0..g.edge_count())
        .map(|e| {
            let ed = g.edges()[e];
            let a = g.vertices()[ed.a];
            DualVertex {
                home: SurfacePoint {
                    tri: a.tri,
                    pos: midpoint(&a.pos, &ed.hol.apply(&g.vertices()[ed.b].pos)),
                },
            }
        })
        .collect::<Vec<_>>();
    // Map from the home chart of edge(h) into the chart of origin(h).
    let home_to_origin = |h: Half| {
        if h.forward {
            Isometry::identity()
        } else {
            g.edges()[h.edge].hol.inverse()
        }
    };
    let mut edges = Vec::with_capacity(cells.corner_count());
    for face in cells.faces() {
        let k = face.len();
        for i in 0..k {
            let (h_in, h_out) = (half(face[i]), half(face[(i + 1) % k]));
            let back = h_in.twin();
            let v = g.origin(h_out);
            let p = g.vertices()[v].pos;
            let gap = (g.direction(back)? - g.direction(h_out)?).rem_euclid(2.0 * PI);
            if g.degree(v) > 1 && gap >= PI - 1e-12 {
                return Err(DualError::Precondition(format!(
                    "face corner at vertex {v} has angle {gap}, not convex"
                )));
            }
            let from = midpoint(&p, &g.far_point(back));
            let to = midpoint(&p, &g.far_point(h_out));
            edges.push(DualEdge {
                chart: g.vertices()[v].tri,
                from,
                to,
                from_map: home_to_origin(back),
                to_map: home_to_origin(h_out),
                length: dist(&from, &to),
            });
        }
    }
    let d = DualGraph {
        cells,
        vertices,
        edges,
        source: DualSource::Graph,
    };
    d.check()?;
    Ok(d)
}

/// Dual of a triangulation: side midpoints (incircle tangency points for
/// ideal triangles) joined inside every triangle.
pub fn dual_of_triangulation(s: &TriangulatedSurface) -> Result<DualGraph> {
    let comb = s.combinatorics();
    let cells = CellComplex::of_triangulation(comb);
    let vertices = (0..cells.edge_count())
        .map(|e| {
            let d = cells.edge_darts(e)[0];
            DualVertex {
                home: SurfacePoint {
                    tri: tri_of(d),
                    pos: s.side_midpoint(d),
                },
            }
        })
        .collect::<Vec<_>>();
    let home_to_tri = |d: usize| {
        let home = cells.edge_darts(cells.edge_of(d))[0];
        if home == d {
            Isometry::identity()
        } else {
            s.transition(home)
        }
    };
    let mut edges = Vec::with_capacity(cells.corner_count());
    for t in 0..comb.triangles() {
        for i in 0..3 {
            let (d1, d2) = (3 * t + i, 3 * t + (i + 1) % 3);
            let (from, to) = (s.side_midpoint(d1), s.side_midpoint(d2));
            edges.push(DualEdge {
                chart: t,
                from,
                to,
                from_map: home_to_tri(d1),
                to_map: home_to_tri(d2),
                length: dist(&from, &to),
            });
        }
    }
    let d = DualGraph {
        cells,
        vertices,
        edges,
        source: DualSource::Triangulation,
    };
    d.check()?;
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub steps: Vec<DirCorner>,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSystem {
    pub curves: Vec<Curve>,
    pub total_length: f64,
}

impl CurveSystem {
    /// Curve index of every corner.
    pub fn curve_of_corner(&self, corners: usize) -> Vec<usize> {
        let mut out = vec![usize::MAX; corners];
        for (k, c) in self.curves.iter().enumerate() {
            for s in &c.steps {
                out[s.corner] = k;
            }
        }
        out
    }
}

/// Closed strands of the cell complex, each started at its lowest unvisited corner.
pub fn trace_strands(cells: &CellComplex) -> Vec<Vec<DirCorner>> {
    let mut seen = vec![false; cells.corner_count()];
    let mut out = Vec::new();
    for c in 0..cells.corner_count() {
        if seen[c] {
            continue;
        }
        let start = DirCorner { corner: c, forward: true };
        let mut steps = Vec::new();
        let mut s = start;
        loop {
            seen[s.corner] = true;
            steps.push(s);
            s = cells.strand_next(s);
            if s == start || steps.len() > 2 * cells.corner_count() {
                break;
            }
        }
        out.push(steps);
    }
    out
}

pub fn decompose_curves(d: &DualGraph) -> CurveSystem {
    let curves: Vec<Curve> = trace_strands(&d.cells)
        .into_iter()
        .map(|steps| {
            let length = steps.iter().map(|s| d.edges[s.corner].length).sum();
            Curve { steps, length }
        })
        .collect();
    let total_length = curves.iter().map(|c| c.length).sum();
    CurveSystem { curves, total_length }
}

/// The configurations bounded by a strand or a pair of strands in the cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiskCase {
    Disk,
    Monogon1,
    Monogon2,
    Bigon1,
    Bigon2,
    Bigon3,
}

impl DiskCase {
    pub const ALL: [DiskCase; 6] = [
        DiskCase::Disk,
        DiskCase::Monogon1,
        DiskCase::Monogon2,
        DiskCase::Bigon1,
        DiskCase::Bigon2,
        DiskCase::Bigon3,
    ];

    /// Boundary corners of angle 2π/3 besides the alternating pairs.
    fn extra_corners(self) -> i64 {
        match self {
            DiskCase::Disk => 0,
            DiskCase::Monogon1 => 1,
            DiskCase::Monogon2 | DiskCase::Bigon1 => 2,
            DiskCase::Bigon2 => 3,
            DiskCase::Bigon3 => 4,
        }
    }

    fn has_second_side(self) -> bool {
        matches!(self, DiskCase::Bigon1 | DiskCase::Bigon2 | DiskCase::Bigon3)
    }

    /// Lower bounds on the degrees, inside the disk, of the special boundary vertices.
    pub fn corner_degree_bounds(self) -> &'static [i64] {
        match self {
            DiskCase::Disk => &[],
            DiskCase::Monogon1 => &[3],
            DiskCase::Monogon2 => &[2],
            DiskCase::Bigon1 => &[3, 3],
            DiskCase::Bigon2 => &[3, 2],
            DiskCase::Bigon3 => &[2, 2],
        }
    }
}

/// Area of the polygon cut out by the source graph, in units of π, when every
/// corner is 2π/3 or 4π/3. `n` and `m` count the alternating corner pairs on
/// the two sides.
pub fn case_area(case: DiskCase, n: i64, m: i64) -> Rational64 {
    let third = |k: i64| Rational64::new(k, 3);
    let exterior = |interior: Rational64| Rational64::from_integer(1) - interior;
    let mut area = Rational64::from_integer(0);
    for _ in 0..case.extra_corners() {
        area += exterior(third(2));
    }
    let sides = if case.has_second_side() { [n, m] } else { [n, 0] };
    for count in sides {
        for _ in 0..count {
            area += exterior(third(2));
            area += exterior(third(4));
        }
    }
    area - Rational64::from_integer(2)
}

/// The six case areas in units of π, checked to be the same for all `n, m` in `1..=max_nm`.
pub fn gauss_bonnet_case_areas_upto(max_nm: i64) -> Result<Vec<(DiskCase, Rational64)>> {
    let mut out = Vec::new();
    for case in DiskCase::ALL {
        let value = case_area(case, 1, 1);
        for n in 1..=max_nm {
            for m in 1..=max_nm {
                if case_area(case, n, m) != value {
                    return Err(DualError::Invariant(format!("{case:?} area depends on ({n}, {m})")));
                }
            }
        }
        out.push((case, value));
    }
    Ok(out)
}

pub fn gauss_bonnet_case_areas() -> Result<Vec<(DiskCase, Rational64)>> {
    gauss_bonnet_case_areas_upto(50)
}

/// Degrees, inside a triangulated disk, of its interior and boundary vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiskDegrees {
    pub interior: Vec<i64>,
    pub boundary: Vec<i64>,
    /// Edge count, when known; used to check the degree sum.
    pub edges: Option<i64>,
}

/// `|V| - n/3 - (1/6) Σ deg`, which equals 1 for every triangulated disk.
pub fn euler_degree_check(disk: &DiskDegrees) -> Result<Rational64> {
    let sum: i64 = disk.interior.iter().chain(&disk.boundary).sum();
    if let Some(e) = disk.edges {
        if sum != 2 * e {
            return Err(DualError::Input(format!("degree sum {sum} is not twice the edge count {e}")));
        }
    }
    let v = (disk.interior.len() + disk.boundary.len()) as i64;
    let n = disk.boundary.len() as i64;
    Ok(Rational64::from_integer(v) - Rational64::new(n, 3) - Rational64::new(sum, 6))
}

/// Disk with the smallest degrees allowed when every vertex of the
/// triangulation has degree at least 6 and the case fixes the corner degrees.
pub fn extremal_disk(case: DiskCase, interior: usize, boundary: usize) -> DiskDegrees {
    let corners = case.corner_degree_bounds();
    let mut b = vec![4; boundary];
    for (k, &d) in corners.iter().enumerate() {
        b[k] = d;
    }
    DiskDegrees {
        interior: vec![6; interior],
        boundary: b,
        edges: None,
    }
}

/// Upper bound of the Euler expression in each case, checked to be independent
/// of the disk size over `1..=max_size` interior and `corners..=max_size` boundary vertices.
pub fn euler_case_bounds_upto(max_size: usize) -> Result<Vec<(DiskCase, Rational64)>> {
    let mut out = Vec::new();
    for case in DiskCase::ALL {
        let lo = case.corner_degree_bounds().len().max(1);
        let value = euler_degree_check(&extremal_disk(case, 1, lo.max(3)))?;
        for i in 0..=max_size {
            for b in lo..=max_size {
                if euler_degree_check(&extremal_disk(case, i, b))? != value {
                    return Err(DualError::Invariant(format!("{case:?} bound depends on ({i}, {b})")));
                }
            }
        }
        out.push((case, value));
    }
    Ok(out)
}

pub fn euler_case_bounds() -> Result<Vec<(DiskCase, Rational64)>> {
    euler_case_bounds_upto(50)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessKind {
    Disk,
    Monogon,
    Bigon,
}

/// A configuration found in the universal cover, reported by the source curves involved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub kind: WitnessKind,
    pub curves: Vec<usize>,
    /// Face whose lift the search was centred on.
    pub base_face: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "result")]
pub enum OracleOutcome {
    None,
    Witness(Witness),
    /// The lifted ball grew past the size budget before the search finished.
    Inconclusive { lifted_faces: usize },
}

pub const ORACLE_DEPTH: usize = 4;
const ORACLE_FACE_BUDGET: usize = 2_000_000;

/// A ball of the universal cover built face by face.
///
/// Lifted faces are copies of base faces; `nbr[l][i]` is the lifted face across
/// dart `i`. Copies are merged whenever a vertex cycle proves them equal.
struct Cover<'a> {
    cells: &'a CellComplex,
    face: Vec<usize>,
    nbr: Vec<Vec<Option<usize>>>,
    parent: Vec<usize>,
    pending: Vec<(usize, usize)>,
    degree: Vec<usize>,
}

impl<'a> Cover<'a> {
    fn new(cells: &'a CellComplex, base: usize) -> Self {
        let mut degree = vec![0; cells.darts()];
        for cyc in cells.vertices() {
            for &d in &cyc {
                degree[d] = cyc.len();
            }
        }
        Cover {
            cells,
            face: vec![base],
            nbr: vec![vec![None; cells.faces[base].len()]],
            parent: vec![0],
            pending: Vec::new(),
            degree,
        }
    }

    fn find(&mut self, mut l: usize) -> usize {
        while self.parent[l] != l {
            self.parent[l] = self.parent[self.parent[l]];
            l = self.parent[l];
        }
        l
    }

    fn link(&mut self, l: usize, i: usize) -> Option<usize> {
        let n = self.nbr[l][i]?;
        Some(self.find(n))
    }

    /// Lifted twin of lifted dart `(l, i)`, if known.
    fn twin(&mut self, l: usize, i: usize) -> Option<(usize, usize)> {
        let d = self.cells.faces[self.face[l]][i];
        let n = self.link(l, i)?;
        Some((n, self.cells.place[self.cells.twin[d]].1))
    }

    fn set_twin(&mut self, l: usize, i: usize, n: usize) {
        let d = self.cells.faces[self.face[l]][i];
        let j = self.cells.place[self.cells.twin[d]].1;
        for (a, p, b) in [(l, i, n), (n, j, l)] {
            match self.link(a, p) {
                None => self.nbr[a][p] = Some(b),
                Some(x) if x != self.find(b) => {
                    let y = self.find(b);
                    self.pending.push((x, y));
                }
                _ => {}
            }
        }
        self.process_merges();
    }

    fn add_face(&mut self, f: usize) -> usize {
        self.face.push(f);
        self.nbr.push(vec![None; self.cells.faces[f].len()]);
        self.parent.push(self.face.len() - 1);
        self.face.len() - 1
    }

    fn process_merges(&mut self) {
        while let Some((a, b)) = self.pending.pop() {
            let (a, b) = (self.find(a), self.find(b));
            if a == b {
                continue;
            }
            let (keep, gone) = (a.min(b), a.max(b));
            self.parent[gone] = keep;
            for i in 0..self.nbr[gone].len() {
                if let Some(x) = self.nbr[gone][i] {
                    match self.nbr[keep][i] {
                        None => self.nbr[keep][i] = Some(x),
                        Some(y) => {
                            if self.find(x) != self.find(y) {
                                self.pending.push((x, y));
                            }
                        }
                    }
                }
            }
        }
    }

    /// Next lifted dart leaving the same lifted vertex.
    fn step(&mut self, l: usize, i: usize) -> Option<(usize, usize)> {
        let k = self.nbr[l].len();
        self.twin(l, (i + k - 1) % k)
    }

    fn step_back(&mut self, l: usize, i: usize) -> Option<(usize, usize)> {
        let (n, j) = self.twin(l, i)?;
        Some((n, (j + 1) % self.nbr[n].len()))
    }

    /// Closes the vertex cycle through lifted dart `(l, i)` as far as the known links allow.
    fn scan(&mut self, l: usize, i: usize) {
        let l = self.find(l);
        let deg = self.degree[self.cells.faces[self.face[l]][i]];
        let mut fwd = (l, i);
        let mut k = 0;
        while k < deg {
            match self.step(fwd.0, fwd.1) {
                Some(x) => {
                    fwd = x;
                    k += 1;
                }
                None => break,
            }
        }
        if k == deg {
            let a = self.find(fwd.0);
            if a != l {
                self.pending.push((a, l));
                self.process_merges();
            }
            return;
        }
        let mut back = (l, i);
        let mut j = 0;
        while k + j + 1 < deg {
            match self.step_back(back.0, back.1) {
                Some(x) => {
                    back = x;
                    j += 1;
                }
                None => break,
            }
        }
        if k + j + 1 == deg {
            // One link is missing: the dart before `fwd` is the twin of `back`.
            let kf = self.nbr[fwd.0].len();
            let (m, p) = (self.find(fwd.0), (fwd.1 + kf - 1) % kf);
            let n = self.find(back.0);
            self.set_twin(m, p, n);
        }
    }

    fn scan_face(&mut self, l: usize) {
        for i in 0..self.nbr[l].len() {
            let l = self.find(l);
            self.scan(l, i);
        }
    }

    /// Grows the ball to `radius` face steps around the base. Returns false on budget overflow.
    fn grow(&mut self, radius: usize) -> bool {
        let mut layer = vec![0usize];
        for _ in 0..radius {
            let mut next = Vec::new();
            for &l0 in &layer {
                let l = self.find(l0);
                for i in 0..self.nbr[l].len() {
                    let l = self.find(l);
                    if self.link(l, i).is_some() {
                        continue;
                    }
                    let d = self.cells.faces[self.face[l]][i];
                    let f = self.cells.place[self.cells.twin[d]].0;
                    let n = self.add_face(f);
                    self.set_twin(l, i, n);
                    next.push(n);
                    self.scan_face(n);
                    self.scan_face(l);
                    if self.face.len() > ORACLE_FACE_BUDGET {
                        return false;
                    }
                }
            }
            layer = next;
        }
        // Settle remaining deductions.
        loop {
            let before: usize = self.nbr.iter().map(|v| v.iter().filter(|x| x.is_some()).count()).sum();
            let merged_before = (0..self.face.len()).filter(|&l| self.parent[l] != l).count();
            for l in 0..self.face.len() {
                if self.find(l) == l {
                    self.scan_face(l);
                }
            }
            let after: usize = self.nbr.iter().map(|v| v.iter().filter(|x| x.is_some()).count()).sum();
            let merged_after = (0..self.face.len()).filter(|&l| self.parent[l] != l).count();
            if before == after && merged_before == merged_after {
                break;
            }
        }
        true
    }

    /// Strand analysis of the built ball.
    fn find_witness(&mut self, curve_of: &[usize], base: usize) -> Option<Witness> {
        let live: Vec<usize> = (0..self.face.len()).filter(|&l| self.find(l) == l).collect();
        let mut offset = HashMap::new();
        let mut total = 0;
        for &l in &live {
            offset.insert(l, total);
            total += self.nbr[l].len();
        }
        let id = |l: usize, c: usize, nb: &Vec<Vec<Option<usize>>>| offset[&l] + c % nb[l].len();
        let mut uf: Vec<usize> = (0..total).collect();
        fn root(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let mut corner_base = vec![0usize; total];
        for &l in &live {
            let f = self.face[l];
            for c in 0..self.nbr[l].len() {
                corner_base[offset[&l] + c] = self.cells.corner_id(f, c);
            }
        }
        let mut closed: Option<usize> = None;
        let mut crossings: Vec<(usize, usize)> = Vec::new();
        for &l in &live {
            let k = self.nbr[l].len();
            for i in 0..k {
                let Some((n, j)) = self.twin(l, i) else { continue };
                // Visit each lifted edge once.
                if (n, j) < (l, i) {
                    continue;
                }
                let kn = self.nbr[n].len();
                let pairs = [
                    (id(l, i + k - 1, &self.nbr), id(n, j + kn - 1, &self.nbr)),
                    (id(l, i, &self.nbr), id(n, j, &self.nbr)),
                ];
                for (a, b) in pairs {
                    let (ra, rb) = (root(&mut uf, a), root(&mut uf, b));
                    if ra == rb {
                        closed.get_or_insert(a);
                    } else {
                        uf[ra] = rb;
                    }
                }
                crossings.push((pairs[0].0, pairs[1].0));
            }
        }
        let curve = |c: usize| curve_of[corner_base[c]];
        let mut seen_pairs: HashMap<(usize, usize), usize> = HashMap::new();
        let mut bigon = None;
        for &(x, y) in &crossings {
            let (rx, ry) = (root(&mut uf, x), root(&mut uf, y));
            if rx == ry {
                let c = curve(x);
                return Some(Witness {
                    kind: WitnessKind::Monogon,
                    curves: vec![c],
                    base_face: base,
                });
            }
            let key = (rx.min(ry), rx.max(ry));
            let count = seen_pairs.entry(key).or_insert(0);
            *count += 1;
            if *count == 2 && bigon.is_none() {
                let mut cs = vec![curve(x), curve(y)];
                cs.sort_unstable();
                cs.dedup();
                bigon = Some(Witness {
                    kind: WitnessKind::Bigon,
                    curves: cs,
                    base_face: base,
                });
            }
        }
        if let Some(c) = closed {
            return Some(Witness {
                kind: WitnessKind::Disk,
                curves: vec![curve(c)],
                base_face: base,
            });
        }
        bigon
    }
}

/// Searches balls of `depth` face steps in the universal cover, one around a
/// lift of every face, for a strand lift that closes up, crosses itself, or
/// crosses another lift twice.
pub fn oracle_search(cells: &CellComplex, curves: &CurveSystem, depth: usize) -> Result<OracleOutcome> {
    if depth == 0 {
        return Err(DualError::Precondition("oracle depth must be at least 1".into()));
    }
    let curve_of = curves.curve_of_corner(cells.corner_count());
    let results: Vec<OracleOutcome> = (0..cells.faces.len())
        .into_par_iter()
        .map(|f| {
            let mut cover = Cover::new(cells, f);
            if !cover.grow(depth) {
                return OracleOutcome::Inconclusive {
                    lifted_faces: cover.face.len(),
                };
            }
            match cover.find_witness(&curve_of, f) {
                Some(w) => OracleOutcome::Witness(w),
                None => OracleOutcome::None,
            }
        })
        .collect();
    // Lowest base face wins, regardless of completion order.
    if let Some(w) = results.iter().find(|r| matches!(r, OracleOutcome::Witness(_))) {
        return Ok(w.clone());
    }
    if let Some(i) = results.iter().find(|r| matches!(r, OracleOutcome::Inconclusive { .. })) {
        return Ok(i.clone());
    }
    Ok(OracleOutcome::None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateStatus {
    CertifiedMinimalPosition,
    NotApplicable,
    CounterexampleFound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grounds {
    /// Geodesic trivalent source with every angle 2π/3.
    TrivalentBalanced,
    /// Triangulation with every vertex of degree at least 6.
    MinDegreeSix,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub status: CertificateStatus,
    pub grounds: Grounds,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleOutcome>,
}

/// What a dual was built from.
#[derive(Debug, Clone, Copy)]
pub enum DualInput<'a> {
    Graph(&'a EmbeddedGraph),
    Triangulation(&'a CombinatorialTriangulation),
}

impl DualInput<'_> {
    pub fn cells(&self) -> CellComplex {
        match self {
            DualInput::Graph(g) => CellComplex::of_graph(g),
            DualInput::Triangulation(c) => CellComplex::of_triangulation(c),
        }
    }
}

/// Certifies minimal position from the hypotheses of the source, optionally
/// cross-checked by the cover search.
pub fn certify_minimal_position(
    source: DualInput,
    curves: &CurveSystem,
    oracle_depth: Option<usize>,
) -> Result<Certificate> {
    let grounds = match source {
        DualInput::Graph(g) => {
            let trivalent = (0..g.vertex_count()).all(|v| g.degree(v) == 3);
            if trivalent && max_angle_deviation(g)? <= SUCCESS_TOL {
                Grounds::TrivalentBalanced
            } else {
                Grounds::None
            }
        }
        DualInput::Triangulation(c) => {
            if CellComplex::of_triangulation(c).min_degree() >= 6 {
                Grounds::MinDegreeSix
            } else {
                Grounds::None
            }
        }
    };
    let mut status = if grounds == Grounds::None {
        CertificateStatus::NotApplicable
    } else {
        CertificateStatus::CertifiedMinimalPosition
    };
    let mut witness = None;
    let mut oracle = None;
    if let Some(depth) = oracle_depth {
        let outcome = oracle_search(&source.cells(), curves, depth)?;
        if let OracleOutcome::Witness(w) = &outcome {
            status = CertificateStatus::CounterexampleFound;
            witness = Some(w.clone());
        }
        oracle = Some(outcome);
    }
    Ok(Certificate {
        status,
        grounds,
        witness,
        oracle,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub source: f64,
    pub dual: f64,
    pub ratio: f64,
}

/// Smallest gap either side of `ℓ < ℓ_dual < 2ℓ` that still counts as strict.
pub const SANDWICH_MARGIN: f64 = 1e-9;

/// Perimeter of the midpoint triangle at each vertex and the sum of the three half edges.
pub fn corner_triangles(g: &EmbeddedGraph, d: &DualGraph) -> Vec<(f64, f64)> {
    let mut perim = vec![0.0; g.vertex_count()];
    for (c, e) in d.edges.iter().enumerate() {
        let (f, i) = d.cells.corner_place(c);
        let face = &d.cells.faces[f];
        let dart = face[(i + 1) % face.len()];
        let h = Half {
            edge: dart / 2,
            forward: dart % 2 == 0,
        };
        perim[g.origin(h)] += e.length;
    }
    (0..g.vertex_count())
        .map(|v| {
            let star: f64 = g.rotation(v).iter().map(|h| g.edge_length(h.edge) / 2.0).sum();
            (perim[v], star)
        })
        .collect()
}

/// Both lengths and their ratio, with the strict sandwich checked.
pub fn length_sandwich(g: &EmbeddedGraph, d: &DualGraph, c: &CurveSystem) -> Result<Sandwich> {
    if !(0..g.vertex_count()).all(|v| g.degree(v) == 3) || max_angle_deviation(g)? > SUCCESS_TOL {
        return Err(DualError::Precondition("source is not a trivalent 2π/3 graph".into()));
    }
    if (c.total_length - d.total_length()).abs() > 1e-9 {
        return Err(DualError::Precondition("curve system does not match the dual".into()));
    }
    let source = g.total_length();
    let dual = c.total_length;
    if !(dual - source >= SANDWICH_MARGIN && 2.0 * source - dual >= SANDWICH_MARGIN) {
        return Err(DualError::Invariant(format!(
            "sandwich fails: source {source}, dual {dual}"
        )));
    }
    Ok(Sandwich {
        source,
        dual,
        ratio: dual / source,
    })
}

/// A closed polygonal curve stored chart by chart: segment `k` runs from
/// `points[k]` to `maps[k] · points[k + 1]` in the chart of `points[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartCurve {
    pub points: Vec<SurfacePoint>,
    pub maps: Vec<Isometry>,
}

impl ChartCurve {
    fn next_in(&self, k: usize) -> HPoint {
        let n = self.points.len();
        self.maps[k].apply(&self.points[(k + 1) % n].pos)
    }

    fn prev_in(&self, k: usize) -> HPoint {
        let n = self.points.len();
        let j = (k + n - 1) % n;
        self.maps[j].inverse().apply(&self.points[j].pos)
    }

    pub fn length(&self) -> f64 {
        (0..self.points.len()).map(|k| dist(&self.points[k].pos, &self.next_in(k))).sum()
    }

    /// Largest deviation of a bend angle from π.
    pub fn max_bend(&self) -> f64 {
        (0..self.points.len())
            .filter_map(|k| hyp::angle(&self.points[k].pos, &self.prev_in(k), &self.next_in(k)).ok())
            .map(|a| PI - a)
            .fold(0.0, f64::max)
    }

    /// Moves point `k` to `pos` (in its current chart) and re-homes it.
    fn set(&mut self, s: &TriangulatedSurface, k: usize, pos: HPoint) -> Result<()> {
        let n = self.points.len();
        let (sp, m) = s.locate(&SurfacePoint {
            tri: self.points[k].tri,
            pos,
        })?;
        self.points[k] = sp;
        let j = (k + n - 1) % n;
        self.maps[j] = self.maps[j].compose(&m);
        self.maps[k] = m.inverse().compose(&self.maps[k]);
        Ok(())
    }
}

/// The dual curve as a chart-by-chart polygon through its midpoints.
pub fn chart_curve(d: &DualGraph, curve: &Curve) -> ChartCurve {
    let n = curve.steps.len();
    let ends = |s: DirCorner| {
        let e = &d.edges[s.corner];
        if s.forward {
            (e.from, e.from_map, e.to_map)
        } else {
            (e.to, e.to_map, e.from_map)
        }
    };
    let mut points = Vec::with_capacity(n);
    let mut maps = Vec::with_capacity(n);
    for k in 0..n {
        let s = curve.steps[k];
        let t = curve.steps[(k + 1) % n];
        let (start, _, end_map) = ends(s);
        let (_, next_start_map, _) = ends(t);
        points.push(SurfacePoint {
            tri: d.edges[s.corner].chart,
            pos: start,
        });
        maps.push(end_map.compose(&next_start_map.inverse()));
    }
    ChartCurve { points, maps }
}

#[derive(Debug, Clone, Copy)]
pub struct TightenConfig {
    pub bend_tol: f64,
    pub max_sweeps: usize,
}

impl Default for TightenConfig {
    fn default() -> Self {
        TightenConfig {
            bend_tol: 1e-7,
            max_sweeps: 200_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TightenedCurve {
    pub curve: ChartCurve,
    /// Length before the first sweep and after each sweep.
    pub lengths: Vec<f64>,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct Tightened {
    pub curves: Vec<TightenedCurve>,
    pub total_length: f64,
}

/// Pulls each certified dual curve tight to a closed geodesic.
///
/// Points move alternately to the midpoint of their neighbours, so no sweep
/// lengthens a curve.
pub fn tighten_dual_to_geodesics(
    s: &TriangulatedSurface,
    d: &DualGraph,
    c: &CurveSystem,
    cert: &Certificate,
    cfg: TightenConfig,
) -> Result<Tightened> {
    if cert.status != CertificateStatus::CertifiedMinimalPosition {
        return Err(DualError::Refused("curves are not certified in minimal position".into()));
    }
    let mut out = Vec::new();
    for curve in &c.curves {
        let mut cc = chart_curve(d, curve);
        let n = cc.points.len();
        let mut lengths = vec![cc.length()];
        let mut converged = cc.max_bend() < cfg.bend_tol;
        let classes: Vec<Vec<usize>> = if n % 2 == 0 {
            vec![(0..n).step_by(2).collect(), (1..n).step_by(2).collect()]
        } else {
            vec![
                (0..n - 1).step_by(2).collect(),
                (1..n - 1).step_by(2).collect(),
                vec![n - 1],
            ]
        };
        let mut sweeps = 0;
        while !converged && sweeps < cfg.max_sweeps {
            for class in &classes {
                for &k in class {
                    let m = midpoint(&cc.prev_in(k), &cc.next_in(k));
                    cc.set(s, k, m)?;
                }
            }
            sweeps += 1;
            let l = cc.length();
            if l > lengths.last().unwrap() + 1e-12 {
                return Err(DualError::Invariant(format!("tightening lengthened a curve to {l}")));
            }
            lengths.push(l);
            converged = cc.max_bend() < cfg.bend_tol;
        }
        out.push(TightenedCurve {
            curve: cc,
            lengths,
            converged,
        });
    }
    let total_length = out.iter().map(|t| t.curve.length()).sum();
    Ok(Tightened {
        curves: out,
        total_length,
    })
}

/// Serialized curve system: each curve as its cycle of directed corners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSystemJson {
    pub curves: Vec<CurveJson>,
    pub total_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveJson {
    /// `(face, corner index, forward)` per step.
    pub corners: Vec<(usize, usize, bool)>,
    pub length: f64,
}

impl CurveSystem {
    pub fn to_json(&self, cells: &CellComplex) -> CurveSystemJson {
        CurveSystemJson {
            curves: self
                .curves
                .iter()
                .map(|c| CurveJson {
                    corners: c
                        .steps
                        .iter()
                        .map(|s| {
                            let (f, i) = cells.corner_place(s.corner);
                            (f, i, s.forward)
                        })
                        .collect(),
                    length: c.length,
                })
                .collect(),
            total_length: self.total_length,
        }
    }
}

/// A complementary region of the dual curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// The polygon cut from inside one source face.
    InsideFace(usize),
    /// The region around one source vertex: a disk, or an annulus at a cusp.
    AroundVertex(usize),
}

/// Traces the faces of the dual 4-valent map and names each one.
///
/// Returns an error if some face is neither of the two expected kinds, which
/// would mean the curves do not fill.
pub fn complement_regions(cells: &CellComplex) -> Result<Vec<Region>> {
    let mut vertex_of = vec![0; cells.darts()];
    for (v, cyc) in cells.vertices().iter().enumerate() {
        for &d in cyc {
            vertex_of[d] = v;
        }
    }
    // Corner end (c, 0) sits at dart i of its face, (c, 1) at dart i + 1.
    let end = |c: usize, k: usize| 2 * c + k;
    let mut rot_pos = vec![(0usize, 0usize); 2 * cells.corner_count()];
    let mut rot = Vec::with_capacity(cells.edge_count());
    for e in 0..cells.edge_count() {
        let [d, t] = cells.edge_darts(e);
        let r = [
            end(cells.next_corner(d), 0),
            end(cells.prev_corner(d), 1),
            end(cells.next_corner(t), 0),
            end(cells.prev_corner(t), 1),
        ];
        for (k, &h) in r.iter().enumerate() {
            rot_pos[h] = (e, k);
        }
        rot.push(r);
    }
    let next = |h: usize| {
        let (e, k) = rot_pos[h ^ 1];
        rot[e][(k + 3) % 4]
    };
    let mut seen = vec![false; 2 * cells.corner_count()];
    let mut out = Vec::new();
    for h0 in 0..seen.len() {
        if seen[h0] {
            continue;
        }
        let mut corners = Vec::new();
        let mut h = h0;
        while !seen[h] {
            seen[h] = true;
            corners.push(h / 2);
            h = next(h);
        }
        let places: Vec<(usize, usize)> = corners.iter().map(|&c| cells.corner_place(c)).collect();
        let apex = |&(f, i): &(usize, usize)| {
            let face = &cells.faces()[f];
            vertex_of[face[(i + 1) % face.len()]]
        };
        let f0 = places[0].0;
        let v0 = apex(&places[0]);
        if places.iter().all(|p| p.0 == f0) && corners.len() == cells.faces()[f0].len() {
            out.push(Region::InsideFace(f0));
        } else if places.iter().all(|p| apex(p) == v0) {
            out.push(Region::AroundVertex(v0));
        } else {
            return Err(DualError::Invariant(format!(
                "complementary region through corners {corners:?} is not a face or vertex region"
            )));
        }
    }
    out.sort_by_key(|r| match *r {
        Region::InsideFace(f) => (0, f),
        Region::AroundVertex(v) => (1, v),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fill_graph::{shorten_to_local_min, shortening_start, skeleton_graph, ShortenConfig};
    use crate::fixtures::*;
    use crate::hyp::{direction_to, equilateral_side};
    use crate::surface::once_punctured_torus;
    use proptest::prelude::*;

    fn converged_genus2() -> (TriangulatedSurface, EmbeddedGraph) {
        let s = load(GENUS2_DEG8);
        let g = shortening_start(&s).unwrap();
        let r = shorten_to_local_min(&g, &s, &ShortenConfig::default()).unwrap();
        assert!(r.converged);
        (s, r.graph)
    }

    fn certified_triangulations() -> Vec<(&'static str, TriangulatedSurface)> {
        closed_fixtures().into_iter().map(|(n, j)| (n, load(j))).collect()
    }

    fn counterexamples() -> Vec<(&'static str, CombinatorialTriangulation)> {
        let g2 = load(GENUS2_DEG8).combinatorics().clone();
        vec![
            ("icosahedron-sum", connected_sum(&icosahedron(), 0, &g2, 0).unwrap()),
            ("stellar", stellar_subdivision(&g2, 0).unwrap()),
            ("icosahedron", icosahedron()),
        ]
    }

    /// Curve count by union-find over the pairing, independent of strand tracing.
    fn components_by_pairing(cells: &CellComplex) -> usize {
        let mut parent: Vec<usize> = (0..cells.corner_count()).collect();
        fn root(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                x = p[x];
            }
            x
        }
        for e in 0..cells.edge_count() {
            for [a, b] in cells.pairing(e) {
                let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                parent[ra] = rb;
            }
        }
        (0..parent.len()).filter(|&x| root(&mut parent, x) == x).count()
    }

    #[test]
    fn triangulation_duals_are_four_valent_and_split_into_strands() {
        for (name, s) in certified_triangulations() {
            let d = dual_of_triangulation(&s).unwrap();
            assert_eq!(d.vertex_count(), s.combinatorics().edges(), "{name}");
            assert_eq!(d.edge_count(), s.combinatorics().darts(), "{name}");
            assert!(d.degrees().iter().all(|&k| k == 4));
            let c = decompose_curves(&d);
            assert_eq!(c.curves.len(), components_by_pairing(d.cells()), "{name}");
            let mut seen = vec![0; d.edge_count()];
            for curve in &c.curves {
                for st in &curve.steps {
                    seen[st.corner] += 1;
                }
            }
            assert!(seen.iter().all(|&k| k == 1), "{name}");
            assert!((c.total_length - d.total_length()).abs() < 1e-9);
        }
    }

    #[test]
    fn equilateral_dual_edges_match_law_of_cosines() {
        for (name, s) in certified_triangulations() {
            let deg = s.degree(0) as f64;
            let alpha = 2.0 * PI / deg;
            let half = equilateral_side(alpha) / 2.0;
            let expect = (half.cosh().powi(2) - half.sinh().powi(2) * alpha.cos()).acosh();
            let d = dual_of_triangulation(&s).unwrap();
            for e in d.edges() {
                assert!((e.length - expect).abs() < 1e-9, "{name}: {} vs {expect}", e.length);
            }
        }
    }

    #[test]
    fn once_punctured_torus_dual() {
        let s = once_punctured_torus();
        let d = dual_of_triangulation(&s).unwrap();
        let c = decompose_curves(&d);
        let edge = 2.0 * (0.5f64).asinh();
        assert!(d.edges().iter().all(|e| (e.length - edge).abs() < 1e-9));
        assert_eq!(c.curves.len(), 3);
        assert!((c.total_length - 6.0 * edge).abs() < 1e-9);
    }

    /// Maps into the home chart of the dual vertex at edge `e`, from the chart of corner `c`.
    fn end_in_home(d: &DualGraph, c: usize, e: usize) -> (HPoint, HPoint) {
        let edge = &d.edges()[c];
        let (f, i) = d.cells().corner_place(c);
        let face = &d.cells().faces()[f];
        let (near, far, map) = if d.cells().edge_of(face[i]) == e {
            (edge.from, edge.to, edge.from_map)
        } else {
            (edge.to, edge.from, edge.to_map)
        };
        let back = map.inverse();
        (back.apply(&near), back.apply(&far))
    }

    /// The two strands at every dual vertex cross: their four directions alternate.
    fn assert_strands_cross(d: &DualGraph) {
        for e in 0..d.vertex_count() {
            let home = d.vertices()[e].home.pos;
            let [[a, b], [c, dd]] = d.cells().pairing(e);
            let mut dirs = Vec::new();
            for (strand, corner) in [(0, a), (0, b), (1, c), (1, dd)] {
                let (near, far) = end_in_home(d, corner, e);
                assert!(dist(&near, &home) < 1e-9, "corner {corner} does not start at vertex {e}");
                dirs.push((direction_to(&home, &far).unwrap(), strand));
            }
            dirs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            let order: Vec<usize> = dirs.iter().map(|x| x.1).collect();
            assert!(order == [0, 1, 0, 1] || order == [1, 0, 1, 0], "vertex {e}: {order:?}");
        }
    }

    #[test]
    fn pairing_is_transverse_in_the_metric() {
        for (_, s) in certified_triangulations() {
            assert_strands_cross(&dual_of_triangulation(&s).unwrap());
        }
        let (_, g) = converged_genus2();
        assert_strands_cross(&dual_of_graph(&g).unwrap());
    }

    #[test]
    fn gauss_bonnet_case_areas_are_constant() {
        let got: Vec<Rational64> = gauss_bonnet_case_areas().unwrap().into_iter().map(|x| x.1).collect();
        let want = [(-2, 1), (-5, 3), (-4, 3), (-4, 3), (-1, 1), (-2, 3)].map(|(a, b)| Rational64::new(a, b));
        assert_eq!(got, want);
    }

    #[test]
    fn euler_case_bounds_are_exact() {
        let got: Vec<Rational64> = euler_case_bounds().unwrap().into_iter().map(|x| x.1).collect();
        let want = [(0, 1), (1, 6), (1, 3), (1, 3), (1, 2), (2, 3)].map(|(a, b)| Rational64::new(a, b));
        assert_eq!(got, want);
        // Every bound stays below 1, so none of these disks can exist.
        assert!(got.iter().all(|x| *x < Rational64::from_integer(1)));
    }

    #[test]
    fn euler_check_rejects_inconsistent_degrees() {
        let disk = DiskDegrees {
            interior: vec![6],
            boundary: vec![3; 6],
            edges: Some(10),
        };
        assert!(matches!(euler_degree_check(&disk), Err(DualError::Input(_))));
    }

    proptest! {
        #[test]
        fn euler_expression_is_one_on_fans(k in 3i64..60, cone in any::<bool>()) {
            let disk = if cone {
                DiskDegrees { interior: vec![k], boundary: vec![3; k as usize], edges: Some(2 * k) }
            } else {
                let mut b = vec![3; k as usize];
                b[0] = k - 1;
                b[1] = 2;
                b[k as usize - 1] = 2;
                DiskDegrees { interior: vec![], boundary: b, edges: Some(2 * k - 3) }
            };
            prop_assert_eq!(euler_degree_check(&disk).unwrap(), Rational64::from_integer(1));
        }

        #[test]
        fn strands_reverse_consistently(fixture in 0usize..5, start in 0usize..10_000) {
            let (_, json) = closed_fixtures()[fixture];
            let cells = CellComplex::of_triangulation(load(json).combinatorics());
            let s0 = DirCorner { corner: start % cells.corner_count(), forward: start % 2 == 0 };
            let mut fwd = vec![s0];
            loop {
                let n = cells.strand_next(*fwd.last().unwrap());
                if n == s0 { break; }
                fwd.push(n);
            }
            let mut back = vec![s0.reversed()];
            loop {
                let n = cells.strand_next(*back.last().unwrap());
                if n == s0.reversed() { break; }
                back.push(n);
            }
            let mut rev: Vec<DirCorner> = fwd.iter().map(|x| x.reversed()).collect();
            rev[1..].reverse();
            prop_assert_eq!(rev, back);
            for w in fwd.windows(2) {
                prop_assert_eq!(cells.end_dart(w[0]), cells.twin(cells.start_dart(w[1])));
            }
        }
    }

    #[test]
    fn lifted_ball_matches_geometric_development() {
        for (name, s) in certified_triangulations() {
            let cells = CellComplex::of_triangulation(s.combinatorics());
            for depth in 1..=4 {
                let mut cover = Cover::new(&cells, 0);
                assert!(cover.grow(depth));
                let live = (0..cover.face.len()).filter(|&l| cover.find(l) == l).count();
                let developed = s.develop(0, depth, f64::INFINITY).len();
                assert_eq!(live, developed, "{name} depth {depth}");
            }
        }
    }

    #[test]
    fn oracle_finds_nothing_on_certified_inputs() {
        for (name, s) in certified_triangulations() {
            let d = dual_of_triangulation(&s).unwrap();
            let c = decompose_curves(&d);
            let cert =
                certify_minimal_position(DualInput::Triangulation(s.combinatorics()), &c, Some(ORACLE_DEPTH)).unwrap();
            assert_eq!(cert.status, CertificateStatus::CertifiedMinimalPosition, "{name}");
            assert_eq!(cert.grounds, Grounds::MinDegreeSix);
            assert_eq!(cert.oracle, Some(OracleOutcome::None), "{name}");
        }
        let (_, g) = converged_genus2();
        let d = dual_of_graph(&g).unwrap();
        let c = decompose_curves(&d);
        let cert = certify_minimal_position(DualInput::Graph(&g), &c, Some(ORACLE_DEPTH)).unwrap();
        assert_eq!(cert.grounds, Grounds::TrivalentBalanced);
        assert_eq!(cert.oracle, Some(OracleOutcome::None));
    }

    #[test]
    fn oracle_finds_witnesses_on_counterexamples() {
        for (name, comb) in counterexamples() {
            let cells = CellComplex::of_triangulation(&comb);
            let c = CurveSystem {
                curves: trace_strands(&cells)
                    .into_iter()
                    .map(|steps| Curve { steps, length: 0.0 })
                    .collect(),
                total_length: 0.0,
            };
            let cert = certify_minimal_position(DualInput::Triangulation(&comb), &c, Some(ORACLE_DEPTH)).unwrap();
            assert_eq!(cert.grounds, Grounds::None, "{name}");
            assert_eq!(cert.status, CertificateStatus::CounterexampleFound, "{name}");
            assert!(cert.witness.is_some());
        }
    }

    #[test]
    fn contractible_strand_gives_a_disk_witness() {
        let cells = CellComplex::of_triangulation(&icosahedron());
        let c = CurveSystem {
            curves: trace_strands(&cells)
                .into_iter()
                .map(|steps| Curve { steps, length: 0.0 })
                .collect(),
            total_length: 0.0,
        };
        match oracle_search(&cells, &c, ORACLE_DEPTH).unwrap() {
            OracleOutcome::Witness(w) => assert_eq!(w.kind, WitnessKind::Disk),
            other => panic!("expected a witness, got {other:?}"),
        }
        assert!(matches!(oracle_search(&cells, &c, 0), Err(DualError::Precondition(_))));
    }

    #[test]
    fn graph_dual_sandwich_and_corner_triangles() {
        let (_, g) = converged_genus2();
        let d = dual_of_graph(&g).unwrap();
        assert_eq!(d.vertex_count(), g.edge_count());
        let c = decompose_curves(&d);
        assert_eq!(c.curves.len(), components_by_pairing(d.cells()));
        let sw = length_sandwich(&g, &d, &c).unwrap();
        assert!(sw.ratio > 1.0 && sw.ratio < 2.0);
        assert!((sw.dual - 21.459713935010015).abs() < 1e-8);
        assert_eq!(c.curves.len(), 3);
        let tri = corner_triangles(&g, &d);
        let perim: f64 = tri.iter().map(|t| t.0).sum();
        assert!((perim - sw.dual).abs() < 1e-9);
        let star: f64 = tri.iter().map(|t| t.1).sum();
        assert!((star - sw.source).abs() < 1e-9);
        for (p, f) in tri {
            assert!(f < p && p < 2.0 * f);
        }
    }

    #[test]
    fn sandwich_needs_a_balanced_source() {
        let s = load(GENUS2_DEG8);
        let g = skeleton_graph(&s).unwrap();
        let d = dual_of_graph(&g).unwrap();
        let c = decompose_curves(&d);
        assert!(matches!(length_sandwich(&g, &d, &c), Err(DualError::Precondition(_))));
    }

    #[test]
    fn tightening_is_monotone_and_refuses_uncertified_input() {
        let s = load(GENUS2_DEG8);
        let d = dual_of_triangulation(&s).unwrap();
        let c = decompose_curves(&d);
        let cert = certify_minimal_position(DualInput::Triangulation(s.combinatorics()), &c, None).unwrap();
        let t = tighten_dual_to_geodesics(&s, &d, &c, &cert, TightenConfig::default()).unwrap();
        assert_eq!(t.curves.len(), c.curves.len());
        for (tc, orig) in t.curves.iter().zip(&c.curves) {
            assert!(tc.converged);
            assert!((tc.lengths[0] - orig.length).abs() < 1e-9);
            assert!(tc.lengths.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            assert!(tc.curve.max_bend() < 1e-7);
        }
        assert!(t.total_length <= c.total_length);

        let refused = Certificate {
            status: CertificateStatus::NotApplicable,
            grounds: Grounds::None,
            witness: None,
            oracle: None,
        };
        assert!(matches!(
            tighten_dual_to_geodesics(&s, &d, &c, &refused, TightenConfig::default()),
            Err(DualError::Refused(_))
        ));
    }

    #[test]
    fn tightening_graph_dual_converges() {
        let (s, g) = converged_genus2();
        let d = dual_of_graph(&g).unwrap();
        let c = decompose_curves(&d);
        let cert = certify_minimal_position(DualInput::Graph(&g), &c, None).unwrap();
        let t = tighten_dual_to_geodesics(&s, &d, &c, &cert, TightenConfig::default()).unwrap();
        assert!(t.curves.iter().all(|x| x.converged));
        assert!(t.total_length <= c.total_length + 1e-12);
    }

    #[test]
    fn serialized_forms() {
        let s = load(GENUS2_DEG8);
        let d = dual_of_triangulation(&s).unwrap();
        let c = decompose_curves(&d);
        let j = serde_json::to_string(&c).unwrap();
        let back: CurveSystem = serde_json::from_str(&j).unwrap();
        assert_eq!(back, c);
        let js = c.to_json(d.cells());
        assert_eq!(js.curves.len(), c.curves.len());
        let cert = certify_minimal_position(DualInput::Triangulation(s.combinatorics()), &c, Some(1)).unwrap();
        let v = serde_json::to_value(&cert).unwrap();
        assert_eq!(v["status"], "certified-minimal-position");
        assert_eq!(v["grounds"], "min-degree-six");
        assert_eq!(v["oracle"]["result"], "none");
    }
    #[test]
    fn complement_has_one_region_per_face_and_vertex() {
        for (name, s) in certified_triangulations() {
            let cells = CellComplex::of_triangulation(s.combinatorics());
            let r = complement_regions(&cells).unwrap();
            let faces = r.iter().filter(|x| matches!(x, Region::InsideFace(_))).count();
            assert_eq!(faces, cells.faces().len(), "{name}");
            assert_eq!(r.len() - faces, cells.vertices().len(), "{name}");
        }
        let (_, g) = converged_genus2();
        let cells = CellComplex::of_graph(&g);
        assert_eq!(complement_regions(&cells).unwrap().len(), cells.faces().len() + g.vertex_count());
    }
}
