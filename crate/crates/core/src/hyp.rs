//! Hyperbolic-plane primitives.
//!
//! Points live on the upper sheet of the hyperboloid `x² + y² − t² = −1`
//! in Minkowski space. Isometries are `SO⁺(2,1)` matrices. Nothing outside
//! this module needs to know that.

use nalgebra::{Matrix3, Vector3};
use std::f64::consts::PI;
use thiserror::Error;

/// Representation tolerance.
pub const TOL_REPR: f64 = 1e-12;
/// Tolerance for closed-form identities.
pub const TOL_IDENTITY: f64 = 1e-9;
/// Tolerance for iterative solvers.
pub const TOL_SOLVER: f64 = 1e-6;
/// Vertices closer than this are treated as coincident.
pub const TOL_DEGENERATE: f64 = 1e-10;

const FERMAT_MAX_ITERS: usize = 10_000;
const FERMAT_GRAD_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    Convergence {
        point: HPoint,
        residual: f64,
        iterations: usize,
    },
    #[error("invariant violated: {0}")]
    Invariant(String),
}

pub type Result<T> = std::result::Result<T, HypError>;

/// Minkowski form `x₀y₀ + x₁y₁ − x₂y₂`.
#[inline]
pub fn mdot(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.x * b.x + a.y * b.y - a.z * b.z
}

#[inline]
fn eta(v: Vector3<f64>) -> Vector3<f64> {
    Vector3::new(v.x, v.y, -v.z)
}

/// Lorentzian cross product; orthogonal to both arguments in the Minkowski form.
#[inline]
pub fn lcross(a: &Vector3<f64>, b: &Vector3<f64>) -> Vector3<f64> {
    eta(a.cross(b))
}

/// A point of the hyperbolic plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HPoint(Vector3<f64>);

impl HPoint {
    pub fn origin() -> Self {
        HPoint(Vector3::new(0.0, 0.0, 1.0))
    }

    /// Wraps raw coordinates, checking the hyperboloid constraint.
    pub fn from_coords(v: [f64; 3]) -> Result<Self> {
        let v = Vector3::new(v[0], v[1], v[2]);
        let n = mdot(&v, &v);
        if !v.iter().all(|c| c.is_finite()) || v.z <= 0.0 || (n + 1.0).abs() > 1e-9 * v.z * v.z
        {
            return Err(HypError::Domain(format!("{v:?} is not on the hyperboloid")));
        }
        Ok(HPoint(v).normalized())
    }

    /// Point with Poincaré-disk coordinates `(x, y)`.
    pub fn from_disk(x: f64, y: f64) -> Result<Self> {
        let r2 = x * x + y * y;
        if !(r2 < 1.0) || !x.is_finite() || !y.is_finite() {
            return Err(HypError::Domain(format!("({x}, {y}) outside the unit disk")));
        }
        let s = 1.0 / (1.0 - r2);
        Ok(HPoint(Vector3::new(2.0 * x * s, 2.0 * y * s, (1.0 + r2) * s)))
    }

    /// Point at hyperbolic distance `r` from the origin in direction `theta`.
    pub fn polar(r: f64, theta: f64) -> Self {
        HPoint(Vector3::new(
            r.sinh() * theta.cos(),
            r.sinh() * theta.sin(),
            r.cosh(),
        ))
    }

    pub fn to_disk(&self) -> (f64, f64) {
        let d = 1.0 + self.0.z;
        (self.0.x / d, self.0.y / d)
    }

    pub fn coords(&self) -> [f64; 3] {
        [self.0.x, self.0.y, self.0.z]
    }

    pub fn vec(&self) -> &Vector3<f64> {
        &self.0
    }

    pub(crate) fn from_vec_unchecked(v: Vector3<f64>) -> Self {
        HPoint(v).normalized()
    }

    fn normalized(self) -> Self {
        let n = -mdot(&self.0, &self.0);
        HPoint(self.0 / n.sqrt())
    }

    /// Distance from the model's domain constraint.
    pub fn constraint_residual(&self) -> f64 {
        (mdot(&self.0, &self.0) + 1.0).abs()
    }
}

/// Unit tangent vector at a point (a spacelike vector Minkowski-orthogonal to it).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent(pub(crate) Vector3<f64>);

impl Tangent {
    pub fn vec(&self) -> &Vector3<f64> {
        &self.0
    }
}

/// Unit tangent at `p` rotated a quarter turn counterclockwise from `v`.
pub fn rotate_quarter(p: &HPoint, v: &Tangent) -> Tangent {
    Tangent(lcross(&p.0, &v.0))
}

/// Unit tangent at `p` making oriented angle `theta` with `v`.
pub fn rotate_tangent(p: &HPoint, v: &Tangent, theta: f64) -> Tangent {
    let w = rotate_quarter(p, v);
    Tangent(v.0 * theta.cos() + w.0 * theta.sin())
}

/// The x axis carried to `p` by the translation from the origin.
pub fn reference_tangent(p: &HPoint) -> Tangent {
    Tangent(Isometry::translation_to(p).0 * Vector3::new(1.0, 0.0, 0.0))
}

/// Orientation-preserving isometry of the hyperbolic plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Isometry(Matrix3<f64>);

impl Isometry {
    pub fn identity() -> Self {
        Isometry(Matrix3::identity())
    }

    /// Translation of length `t` along the geodesic through the origin in direction `theta`.
    pub fn translation(t: f64, theta: f64) -> Self {
        let rot = Isometry::rotation(theta);
        let (c, s) = (t.cosh(), t.sinh());
        let boost = Isometry(Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, s, 0.0, c));
        rot.compose(&boost).compose(&rot.inverse())
    }

    /// The translation taking the origin to `p`.
    pub fn translation_to(p: &HPoint) -> Self {
        let [x, y, z] = p.coords();
        let k = 1.0 / (1.0 + z);
        Isometry(Matrix3::new(
            1.0 + x * x * k,
            x * y * k,
            x,
            x * y * k,
            1.0 + y * y * k,
            y,
            x,
            y,
            z,
        ))
    }

    /// Rotation about the origin by `theta` (counterclockwise).
    pub fn rotation(theta: f64) -> Self {
        let (c, s) = (theta.cos(), theta.sin());
        Isometry(Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0))
    }

    fn frame(p: &HPoint, v: &Tangent) -> Matrix3<f64> {
        let w = lcross(&p.0, &v.0);
        Matrix3::from_columns(&[v.0, w, p.0])
    }

    /// The unique isometry taking `p` to `q` and direction `v` to direction `w`.
    pub fn frame_map(p: &HPoint, v: &Tangent, q: &HPoint, w: &Tangent) -> Self {
        let fp = Isometry::frame(p, v);
        let fq = Isometry::frame(q, w);
        Isometry(fq * Isometry(fp).inverse().0)
    }

    /// Isometry taking the segment `a→b` onto `c→d`; lengths must agree.
    pub fn segment_map(a: &HPoint, b: &HPoint, c: &HPoint, d: &HPoint) -> Result<Self> {
        let (l1, l2) = (dist(a, b), dist(c, d));
        if (l1 - l2).abs() > 1e-8 * (1.0 + l1) {
            return Err(HypError::Precondition(format!(
                "segment lengths differ: {l1} vs {l2}"
            )));
        }
        let v = tangent_toward(a, b)?;
        let w = tangent_toward(c, d)?;
        Ok(Isometry::frame_map(a, &v, c, &w))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        Isometry(self.0 * other.0)
    }

    pub fn inverse(&self) -> Isometry {
        let e = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        Isometry(e * self.0.transpose() * e)
    }

    pub fn apply(&self, p: &HPoint) -> HPoint {
        HPoint::from_vec_unchecked(self.0 * p.0)
    }

    pub fn apply_tangent(&self, v: &Tangent) -> Tangent {
        Tangent(self.0 * v.0)
    }

    /// Translation length (zero for elliptic and parabolic elements).
    pub fn translation_length(&self) -> f64 {
        let tr = self.0.trace();
        let c = (tr - 1.0) / 2.0;
        if c <= 1.0 {
            0.0
        } else {
            c.acosh()
        }
    }

    /// Largest entrywise deviation from the identity matrix.
    pub fn distance_from_identity(&self) -> f64 {
        (self.0 - Matrix3::identity()).amax()
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let m = &self.0;
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self> {
        let mat = Matrix3::new(
            m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
        );
        let iso = Isometry(mat);
        let e = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        let err = (mat.transpose() * e * mat - e).amax();
        if err > 1e-8 * mat.amax().max(1.0).powi(2) || mat.determinant() <= 0.0 || m[2][2] <= 0.0
        {
            return Err(HypError::Domain("matrix is not in SO+(2,1)".into()));
        }
        Ok(iso)
    }
}

/// Hyperbolic distance.
pub fn dist(p: &HPoint, q: &HPoint) -> f64 {
    let d = p.0 - q.0;
    let c = mdot(&d, &d).max(0.0);
    2.0 * (c.sqrt() / 2.0).asinh()
}

/// Unit tangent at `p` pointing along the geodesic to `q`.
pub fn tangent_toward(p: &HPoint, q: &HPoint) -> Result<Tangent> {
    let t = Isometry::translation_to(p);
    let theta = local_direction(&t, q)?;
    Ok(Tangent(t.0 * Vector3::new(theta.cos(), theta.sin(), 0.0)))
}

fn local_direction(t: &Isometry, q: &HPoint) -> Result<f64> {
    let q0 = t.inverse().0 * q.0;
    if q0.x.hypot(q0.y) < TOL_DEGENERATE {
        return Err(HypError::Degenerate("coincident points".into()));
    }
    Ok(q0.y.atan2(q0.x))
}

/// Direction from `p` toward `q`, measured against [`reference_tangent`], in `(−π, π]`.
pub fn direction_to(p: &HPoint, q: &HPoint) -> Result<f64> {
    local_direction(&Isometry::translation_to(p), q)
}

/// Point reached from `p` after distance `t` in unit direction `v`.
pub fn exp(p: &HPoint, v: &Tangent, t: f64) -> HPoint {
    HPoint::from_vec_unchecked(p.0 * t.cosh() + v.0 * t.sinh())
}

/// Tangent of the geodesic `exp(p, v, ·)` at parameter `t`.
pub fn transport_direction(p: &HPoint, v: &Tangent, t: f64) -> Tangent {
    Tangent(p.0 * t.sinh() + v.0 * t.cosh())
}

/// Point at fraction `s` along the geodesic from `p` to `q`.
pub fn lerp(p: &HPoint, q: &HPoint, s: f64) -> HPoint {
    match tangent_toward(p, q) {
        Ok(v) => exp(p, &v, s * dist(p, q)),
        Err(_) => *p,
    }
}

pub fn midpoint(p: &HPoint, q: &HPoint) -> HPoint {
    HPoint::from_vec_unchecked(p.0 + q.0)
}

/// Oriented angle from `u` to `v` at `p`, in `(−π, π]`.
pub fn oriented_angle(p: &HPoint, u: &Tangent, v: &Tangent) -> f64 {
    let w = lcross(&p.0, &u.0);
    mdot(&w, &v.0).atan2(mdot(&u.0, &v.0))
}

/// Direction of `v` at `p` measured against [`reference_tangent`], in `[0, 2π)`.
pub fn direction_angle(p: &HPoint, v: &Tangent) -> f64 {
    let v0 = Isometry::translation_to(p).inverse().0 * v.0;
    let a = v0.y.atan2(v0.x);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Wraps an angle difference into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Angle at `vertex` between the geodesic rays toward `a` and `b`.
pub fn angle(vertex: &HPoint, a: &HPoint, b: &HPoint) -> Result<f64> {
    let t = Isometry::translation_to(vertex);
    let u = local_direction(&t, a)?;
    let v = local_direction(&t, b)?;
    Ok(wrap_angle(v - u).abs())
}

/// Ordered triple of vertices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HTriangle {
    pub a: HPoint,
    pub b: HPoint,
    pub c: HPoint,
}

impl HTriangle {
    /// Builds a triangle, rejecting coincident or collinear vertices.
    pub fn new(a: HPoint, b: HPoint, c: HPoint) -> Result<Self> {
        let t = HTriangle { a, b, c };
        t.check()?;
        Ok(t)
    }

    fn check(&self) -> Result<()> {
        let [a, b, c] = self.vertices();
        let sides = [dist(&a, &b), dist(&b, &c), dist(&c, &a)];
        if sides.iter().any(|s| *s < TOL_DEGENERATE) {
            return Err(HypError::Degenerate("coincident vertices".into()));
        }
        // Height of `c` over line `ab`, compared against the triangle's size.
        let scale = sides.iter().cloned().fold(0.0, f64::max).min(1.0);
        let n = lcross(&a.0, &b.0);
        let nn = mdot(&n, &n).sqrt();
        if (mdot(&n, &c.0) / nn).abs() < TOL_DEGENERATE * scale {
            return Err(HypError::Degenerate("collinear vertices".into()));
        }
        Ok(())
    }

    pub fn vertices(&self) -> [HPoint; 3] {
        [self.a, self.b, self.c]
    }

    /// Interior angles at a, b, c.
    pub fn angles(&self) -> Result<[f64; 3]> {
        Ok([
            angle(&self.a, &self.b, &self.c)?,
            angle(&self.b, &self.c, &self.a)?,
            angle(&self.c, &self.a, &self.b)?,
        ])
    }

    /// Side lengths opposite a, b, c.
    pub fn sides(&self) -> [f64; 3] {
        [
            dist(&self.b, &self.c),
            dist(&self.c, &self.a),
            dist(&self.a, &self.b),
        ]
    }

    pub fn perimeter(&self) -> f64 {
        self.sides().iter().sum()
    }

    /// +1 if a, b, c run counterclockwise, −1 otherwise.
    pub fn orientation(&self) -> f64 {
        let n = lcross(&self.a.0, &self.b.0);
        mdot(&n, &self.c.0).signum()
    }

    /// Incenter; barycentric weights are the sinh of the opposite sides.
    pub fn incenter(&self) -> HPoint {
        let [la, lb, lc] = self.sides();
        HPoint::from_vec_unchecked(
            self.a.0 * la.sinh() + self.b.0 * lb.sinh() + self.c.0 * lc.sinh(),
        )
    }

    /// Strict interior test; `margin` is a signed distance slack.
    pub fn contains(&self, p: &HPoint, margin: f64) -> bool {
        let s = self.orientation();
        let vs = self.vertices();
        (0..3).all(|i| {
            let n = lcross(&vs[i].0, &vs[(i + 1) % 3].0) * s;
            let nn = mdot(&n, &n).sqrt();
            (mdot(&n, &p.0) / nn).asinh() > margin
        })
    }

    /// Point with normalized barycentric weights (geodesically convex combination).
    pub fn barycentric(&self, w: [f64; 3]) -> HPoint {
        HPoint::from_vec_unchecked(self.a.0 * w[0] + self.b.0 * w[1] + self.c.0 * w[2])
    }
}

/// Area of a nondegenerate triangle, `π` minus the angle sum.
pub fn triangle_area(t: &HTriangle) -> Result<f64> {
    t.check()?;
    let s: f64 = t.angles()?.iter().sum();
    let area = PI - s;
    if !(area > 0.0 && area < PI) {
        return Err(HypError::Degenerate(format!("area {area} out of range")));
    }
    Ok(area)
}

/// Center of the circle through three points, if that circle exists.
pub fn circumcenter(t: &HTriangle) -> Result<HPoint> {
    let n = lcross(&(t.a.0 - t.b.0), &(t.a.0 - t.c.0));
    let q = mdot(&n, &n);
    if !(q < 0.0) {
        return Err(HypError::Precondition(
            "vertices lie on a horocycle or hypercycle".into(),
        ));
    }
    let n = if n.z < 0.0 { -n } else { n };
    Ok(HPoint::from_vec_unchecked(n))
}

/// Whether the triangle is a Fermat point at a vertex, or has one inside.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FermatKind {
    Interior,
    AtVertex,
}

pub fn star_sum(p: &HPoint, t: &HTriangle) -> f64 {
    t.vertices().iter().map(|v| dist(p, v)).sum()
}

fn star_gradient(p: &HPoint, t: &HTriangle) -> Option<(Vector3<f64>, f64)> {
    let mut g = Vector3::zeros();
    let mut inv = 0.0;
    for v in t.vertices() {
        let d = dist(p, &v);
        if d < 1e-14 {
            return None;
        }
        g += tangent_toward(p, &v).ok()?.0;
        inv += 1.0 / d;
    }
    Some((g, inv))
}

/// Unit-tangent sum at `p`: the negative gradient of the star length.
pub fn fermat_residual(p: &HPoint, t: &HTriangle) -> f64 {
    star_gradient(p, t)
        .map(|(g, _)| mdot(&g, &g).max(0.0).sqrt())
        .unwrap_or(f64::INFINITY)
}

/// Unit-tangent sum and Hessian of the star length, in the frame translating `p` to the origin.
fn newton_system(p: &HPoint, vs: &[HPoint; 3]) -> Option<(nalgebra::Vector2<f64>, nalgebra::Matrix2<f64>)> {
    let ti = Isometry::translation_to(p).inverse();
    let mut g = nalgebra::Vector2::zeros();
    let mut h = nalgebra::Matrix2::zeros();
    for v in vs {
        let q = ti.0 * v.0;
        let r = q.x.hypot(q.y);
        if r < 1e-300 {
            return None;
        }
        let u = nalgebra::Vector2::new(q.x / r, q.y / r);
        let d = r.asinh();
        g += u;
        h += (nalgebra::Matrix2::identity() - u * u.transpose()) / d.tanh();
    }
    Some((g, h))
}

/// The point minimizing the sum of distances to the vertices.
pub fn fermat_point(t: &HTriangle) -> Result<(HPoint, FermatKind)> {
    t.check()?;
    let angles = t.angles()?;
    let vs = t.vertices();
    for i in 0..3 {
        if angles[i] >= 2.0 * PI / 3.0 {
            return Ok((vs[i], FermatKind::AtVertex));
        }
    }
    // Directions toward nearby points lose accuracy far from the origin.
    let scale = vs.iter().map(|v| v.0.z).fold(1.0, f64::max);
    let min_side = t.sides().iter().cloned().fold(f64::INFINITY, f64::min);
    let tol = FERMAT_GRAD_TOL.max(4.0 * f64::EPSILON * scale * scale / min_side);
    let mut p = t.incenter();
    let mut residual = f64::INFINITY;
    for _ in 0..FERMAT_MAX_ITERS {
        let Some((g, h)) = newton_system(&p, &vs) else {
            break;
        };
        residual = g.norm();
        if residual < tol {
            return Ok((p, FermatKind::Interior));
        }
        let f = star_sum(&p, t);
        let delta = h.try_inverse().map(|hi| hi * g).unwrap_or(g);
        let tr = Isometry::translation_to(&p);
        let mut step = 1.0;
        loop {
            let d = delta * step;
            let q = tr.apply(&HPoint::polar(d.norm(), d.y.atan2(d.x)));
            if star_sum(&q, t) <= f || fermat_residual(&q, t) < residual || step < 1e-12 {
                p = q;
                break;
            }
            step *= 0.5;
        }
    }
    Err(HypError::Convergence {
        point: p,
        residual,
        iterations: FERMAT_MAX_ITERS,
    })
}

/// Whether all three central angles subtended at `o` by a, b, c are at most `π`.
///
/// When true, also checks that every angle of the triangle is acute.
pub fn circumcenter_sector_acute(o: &HPoint, a: &HPoint, b: &HPoint, c: &HPoint) -> Result<bool> {
    let (ra, rb, rc) = (dist(o, a), dist(o, b), dist(o, c));
    if (ra - rb).abs() > TOL_IDENTITY || (ra - rc).abs() > TOL_IDENTITY {
        return Err(HypError::Precondition(format!(
            "points not on a common circle: radii {ra}, {rb}, {rc}"
        )));
    }
    let base = tangent_toward(o, a)?;
    let mut dirs = [
        0.0,
        direction_from(o, &base, b)?,
        direction_from(o, &base, c)?,
    ];
    dirs.sort_by(|x, y| x.total_cmp(y));
    let gaps = [dirs[1] - dirs[0], dirs[2] - dirs[1], 2.0 * PI - dirs[2] + dirs[0]];
    let ok = gaps.iter().all(|g| *g <= PI + TOL_IDENTITY);
    if ok {
        let t = HTriangle::new(*a, *b, *c)?;
        for x in t.angles()? {
            if x >= PI / 2.0 + TOL_IDENTITY {
                return Err(HypError::Invariant(format!(
                    "triangle angle {x} not acute although central angles are at most pi"
                )));
            }
        }
    }
    Ok(ok)
}

fn direction_from(o: &HPoint, base: &Tangent, p: &HPoint) -> Result<f64> {
    let v = tangent_toward(o, p)?;
    let a = oriented_angle(o, base, &v);
    Ok(if a < 0.0 { a + 2.0 * PI } else { a })
}

/// Half-width of the standard collar about a closed geodesic of length `l`, minus `½ log 2`.
pub fn collar_half_width(l: f64) -> Result<f64> {
    if !(l > 0.0) || !l.is_finite() {
        return Err(HypError::Domain(format!("length must be positive, got {l}")));
    }
    Ok((1.0 / (l / 2.0).sinh()).asinh() - 0.5 * std::f64::consts::LN_2)
}

/// `(log(1/x), f(x), upper)` with `upper = 2` for `x > 1/2` and `3 log(1/x)` otherwise.
pub fn f_bounds_check(x: f64) -> Result<(f64, f64, f64)> {
    let value = collar_half_width(x)?;
    let lower = (1.0 / x).ln();
    let upper = if x > 0.5 { 2.0 } else { 3.0 * lower };
    if !(lower <= value && value <= upper) {
        return Err(HypError::Invariant(format!(
            "sandwich fails at x = {x}: {lower} <= {value} <= {upper}"
        )));
    }
    Ok((lower, value, upper))
}

/// Perimeter of `t` and twice the star length from an interior point `p`.
pub fn perimeter_vs_fermat_sum(t: &HTriangle, p: &HPoint) -> Result<(f64, f64)> {
    t.check()?;
    if !t.contains(p, 0.0) {
        return Err(HypError::Precondition("point is not inside the triangle".into()));
    }
    let perimeter = t.perimeter();
    let doubled = 2.0 * star_sum(p, t);
    if !(perimeter < doubled) {
        return Err(HypError::Invariant(format!(
            "perimeter {perimeter} not below doubled star sum {doubled}"
        )));
    }
    Ok((perimeter, doubled))
}

/// Side length of an equilateral triangle with all angles `alpha`.
pub fn equilateral_side(alpha: f64) -> f64 {
    let (c, s) = (alpha.cos(), alpha.sin());
    ((c + c * c) / (s * s)).acosh()
}

/// Side lengths `[a, b, c]` opposite angles `[alpha, beta, gamma]` (angle sum below `π`).
pub fn sides_from_angles(angles: [f64; 3]) -> Result<[f64; 3]> {
    let s: f64 = angles.iter().sum();
    if !(s < PI) || angles.iter().any(|a| !(*a > 0.0)) {
        return Err(HypError::Domain(format!("angles {angles:?} do not form a hyperbolic triangle")));
    }
    let side = |i: usize| {
        let (a, b, c) = (angles[i], angles[(i + 1) % 3], angles[(i + 2) % 3]);
        ((a.cos() + b.cos() * c.cos()) / (b.sin() * c.sin())).acosh()
    };
    Ok([side(0), side(1), side(2)])
}

/// Counterclockwise triangle with the given angles, vertex `a` at the origin and `b` on the positive x axis.
pub fn triangle_from_angles(angles: [f64; 3]) -> Result<HTriangle> {
    let [_, lb, lc] = sides_from_angles(angles)?;
    let a = HPoint::origin();
    let b = HPoint::polar(lc, 0.0);
    let c = HPoint::polar(lb, angles[0]);
    HTriangle::new(a, b, c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn translation_by_one_has_length_one() {
        let p = HPoint::from_disk(0.2, -0.1).unwrap();
        let g = Isometry::translation(1.0, 0.7);
        let g = Isometry::rotation(0.3).compose(&g);
        let q0 = Isometry::translation(1.0, 0.0).apply(&HPoint::origin());
        assert_abs_diff_eq!(dist(&HPoint::origin(), &q0), 1.0, epsilon = 1e-12);
        let h = g.compose(&Isometry::translation(1.0, 0.0)).compose(&g.inverse());
        let q = h.apply(&g.apply(&HPoint::origin()));
        assert_abs_diff_eq!(dist(&g.apply(&HPoint::origin()), &q), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(dist(&p, &p), 0.0);
    }

    #[test]
    fn ideal_limit_angles_and_area() {
        let r = 12.0;
        let t = HTriangle::new(
            HPoint::polar(r, 0.0),
            HPoint::polar(r, 2.0 * PI / 3.0),
            HPoint::polar(r, 4.0 * PI / 3.0),
        )
        .unwrap();
        for a in t.angles().unwrap() {
            assert!(a < 1e-4, "{a}");
        }
        assert!((triangle_area(&t).unwrap() - PI).abs() < 1e-4);
    }

    #[test]
    fn right_triangle_area() {
        let t = triangle_from_angles([PI / 2.0, PI / 4.0, PI / 8.0]).unwrap();
        let got = t.angles().unwrap();
        assert_abs_diff_eq!(got[0], PI / 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(got[1], PI / 4.0, epsilon = 1e-9);
        assert_abs_diff_eq!(got[2], PI / 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(triangle_area(&t).unwrap(), PI / 8.0, epsilon = 1e-9);
    }

    #[test]
    fn obtuse_vertex_is_its_own_fermat_point() {
        let t = triangle_from_angles([3.0 * PI / 4.0, 0.1, 0.1]).unwrap();
        let (p, kind) = fermat_point(&t).unwrap();
        assert_eq!(kind, FermatKind::AtVertex);
        assert_abs_diff_eq!(dist(&p, &t.a), 0.0);
    }

    #[test]
    fn equilateral_fermat_point_is_the_center() {
        let t = HTriangle::new(
            HPoint::polar(0.8, 0.0),
            HPoint::polar(0.8, 2.0 * PI / 3.0),
            HPoint::polar(0.8, 4.0 * PI / 3.0),
        )
        .unwrap();
        let (p, kind) = fermat_point(&t).unwrap();
        assert_eq!(kind, FermatKind::Interior);
        assert!(dist(&p, &HPoint::origin()) < 1e-10);
        for (x, y) in [(t.a, t.b), (t.b, t.c), (t.c, t.a)] {
            assert_abs_diff_eq!(angle(&p, &x, &y).unwrap(), 2.0 * PI / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn sector_examples() {
        let o = HPoint::from_disk(0.1, 0.2).unwrap();
        let base = reference_tangent(&o);
        let on = |th: f64| exp(&o, &rotate_tangent(&o, &base, th), 0.9);
        let eq = circumcenter_sector_acute(&o, &on(0.0), &on(2.0 * PI / 3.0), &on(4.0 * PI / 3.0));
        assert_eq!(eq, Ok(true));
        let half = circumcenter_sector_acute(&o, &on(0.0), &on(PI), &on(1.5 * PI));
        assert_eq!(half, Ok(true));
        let wide = circumcenter_sector_acute(&o, &on(0.0), &on(1.5 * PI), &on(1.75 * PI));
        assert_eq!(wide, Ok(false));
        assert!(matches!(
            circumcenter_sector_acute(&o, &on(0.0), &on(1.0), &exp(&o, &base, 0.5)),
            Err(HypError::Precondition(_))
        ));
    }

    #[test]
    fn collar_constants() {
        assert_abs_diff_eq!(collar_half_width(1.0).unwrap(), 1.06, epsilon = 0.01);
        assert_abs_diff_eq!(collar_half_width(0.5).unwrap(), 1.73, epsilon = 0.01);
        let (lo, v, hi) = f_bounds_check(0.5).unwrap();
        assert_abs_diff_eq!(hi, 3.0 * 2f64.ln(), epsilon = 1e-12);
        assert!(lo <= v && v <= hi);
        assert!(collar_half_width(0.0).is_err());
        let x = 1e-8;
        let gap = collar_half_width(x).unwrap() - (1.0 / x).ln();
        assert_abs_diff_eq!(gap, 1.5 * 2f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn circumcenter_is_equidistant() {
        let t = HTriangle::new(
            HPoint::from_disk(0.1, 0.0).unwrap(),
            HPoint::from_disk(-0.2, 0.3).unwrap(),
            HPoint::from_disk(0.0, -0.4).unwrap(),
        )
        .unwrap();
        let o = circumcenter(&t).unwrap();
        let r = dist(&o, &t.a);
        assert_abs_diff_eq!(dist(&o, &t.b), r, epsilon = 1e-10);
        assert_abs_diff_eq!(dist(&o, &t.c), r, epsilon = 1e-10);
    }

    #[test]
    fn degenerate_triangles_are_rejected() {
        let a = HPoint::origin();
        let b = HPoint::polar(1.0, 0.0);
        let c = HPoint::polar(2.0, 0.0);
        assert!(matches!(HTriangle::new(a, b, c), Err(HypError::Degenerate(_))));
        assert!(matches!(HTriangle::new(a, a, b), Err(HypError::Degenerate(_))));
    }

    #[test]
    fn equilateral_side_matches_angle() {
        let alpha = 2.0 * PI / 7.0;
        let s = equilateral_side(alpha);
        let t = triangle_from_angles([alpha; 3]).unwrap();
        for x in t.sides() {
            assert_abs_diff_eq!(x, s, epsilon = 1e-10);
        }
    }
}
