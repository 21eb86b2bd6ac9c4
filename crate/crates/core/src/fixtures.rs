//! Bundled closed surfaces built from equilateral triangles.

use std::collections::HashMap;

use crate::surface::{
    rho, rho_inv, tri_of, CombinatorialTriangulation, Result, SurfaceError, TriangulatedSurface,
};

pub const GENUS2_DEG8: &str = include_str!("../fixtures/genus2_deg8.json");
pub const GENUS3_DEG7: &str = include_str!("../fixtures/genus3_deg7.json");
pub const GENUS3_DEG8: &str = include_str!("../fixtures/genus3_deg8.json");
pub const GENUS4_DEG8: &str = include_str!("../fixtures/genus4_deg8.json");
pub const GENUS5_DEG8: &str = include_str!("../fixtures/genus5_deg8.json");

/// `(name, json)` for every bundled closed surface.
pub fn closed_fixtures() -> Vec<(&'static str, &'static str)> {
    vec![
        ("genus2_deg8", GENUS2_DEG8),
        ("genus3_deg7", GENUS3_DEG7),
        ("genus3_deg8", GENUS3_DEG8),
        ("genus4_deg8", GENUS4_DEG8),
        ("genus5_deg8", GENUS5_DEG8),
    ]
}

pub fn load(json: &str) -> TriangulatedSurface {
    TriangulatedSurface::from_json_str(json).expect("bundled fixture is valid")
}

/// Triangulation from oriented vertex triples; side `k` of a triangle runs
/// from its vertex `k` to vertex `k + 1`.
pub fn from_faces(faces: &[[usize; 3]]) -> Result<CombinatorialTriangulation> {
    let mut side = HashMap::new();
    for (t, f) in faces.iter().enumerate() {
        for k in 0..3 {
            if side.insert((f[k], f[(k + 1) % 3]), 3 * t + k).is_some() {
                return Err(SurfaceError::Input(format!(
                    "side {} -> {} appears twice",
                    f[k],
                    f[(k + 1) % 3]
                )));
            }
        }
    }
    let mut iota = vec![0; 3 * faces.len()];
    for (&(a, b), &d) in &side {
        iota[d] = *side
            .get(&(b, a))
            .ok_or_else(|| SurfaceError::Input(format!("side {a} -> {b} has no partner")))?;
    }
    CombinatorialTriangulation::new(faces.len(), iota)
}

/// The icosahedron: 20 triangles, every vertex of degree 5.
pub fn icosahedron() -> CombinatorialTriangulation {
    let mut faces = Vec::new();
    for i in 0..5 {
        let (a, b) = (1 + i, 1 + (i + 1) % 5);
        let (c, d) = (6 + i, 6 + (i + 1) % 5);
        faces.push([0, a, b]);
        faces.push([a, c, b]);
        faces.push([b, c, d]);
        faces.push([11, d, c]);
    }
    from_faces(&faces).expect("icosahedron faces are consistent")
}

/// Removes triangle `p` of `x` and `q` of `y` and glues the two boundaries.
pub fn connected_sum(
    x: &CombinatorialTriangulation,
    p: usize,
    y: &CombinatorialTriangulation,
    q: usize,
) -> Result<CombinatorialTriangulation> {
    if p >= x.triangles() || q >= y.triangles() {
        return Err(SurfaceError::Input("removed triangle out of range".into()));
    }
    let nx = x.triangles() - 1;
    let map_x = |d: usize| {
        let t = tri_of(d);
        3 * (if t > p { t - 1 } else { t }) + d % 3
    };
    let map_y = |d: usize| {
        let t = tri_of(d);
        3 * (nx + if t > q { t - 1 } else { t }) + d % 3
    };
    let mut iota = vec![0; 3 * (nx + y.triangles() - 1)];
    for d in 0..x.darts() {
        if tri_of(d) == p {
            continue;
        }
        let e = x.iota(d);
        iota[map_x(d)] = if tri_of(e) == p {
            let k = e % 3;
            map_y(y.iota(3 * q + (3 - k) % 3))
        } else {
            map_x(e)
        };
    }
    for d in 0..y.darts() {
        if tri_of(d) == q {
            continue;
        }
        let e = y.iota(d);
        iota[map_y(d)] = if tri_of(e) == q {
            let k = e % 3;
            map_x(x.iota(3 * p + (3 - k) % 3))
        } else {
            map_y(e)
        };
    }
    CombinatorialTriangulation::new(nx + y.triangles() - 1, iota)
}

/// Cones triangle `t` off to a new vertex of degree 3.
pub fn stellar_subdivision(c: &CombinatorialTriangulation, t: usize) -> Result<CombinatorialTriangulation> {
    if t >= c.triangles() {
        return Err(SurfaceError::Input(format!("triangle {t} out of range")));
    }
    let n = c.triangles();
    // Triangle t keeps side 0; new triangles n and n + 1 take sides 1 and 2.
    // In each, side 0 is the old side, side 1 runs to the apex, side 2 back.
    let home = |k: usize| if k == 0 { t } else { n + k - 1 };
    let outer = |k: usize| 3 * home(k);
    let mut iota: Vec<usize> = c.gluing().to_vec();
    iota.resize(3 * (n + 2), 0);
    for k in 0..3 {
        let old = 3 * t + k;
        let e = c.iota(old);
        let (d, e) = (outer(k), if tri_of(e) == t { outer(e % 3) } else { e });
        iota[d] = e;
        iota[e] = d;
    }
    for k in 0..3 {
        // Side 1 of corner k's triangle meets side 2 of the next one.
        let a = rho(outer(k));
        let b = rho_inv(outer((k + 1) % 3));
        iota[a] = b;
        iota[b] = a;
    }
    CombinatorialTriangulation::new(n + 2, iota)
}
