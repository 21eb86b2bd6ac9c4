//! Random cusped surfaces glued from ideal triangles along a uniform random
//! matching of their sides, and the inscribed-triangle filling curves on them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dual::{
    chart_curve, complement_regions, decompose_curves, dual_of_triangulation, CurveSystem, DualError, Region,
};
use crate::surface::{CombinatorialTriangulation, SurfaceKind, TriangulatedSurface};

pub type Result<T> = std::result::Result<T, DualError>;

/// Side length of the triangle joining the incircle tangency points of an ideal triangle.
pub fn inscribed_edge_length() -> f64 {
    2.0 * 0.5f64.asinh()
}

pub const BEND_TOL: f64 = 1e-9;
pub const DEFAULT_DEGREE_THRESHOLD: usize = 6;

/// Side pairing of `2n` triangles; darts `3t..3t + 3` are triangle `t`'s sides in ccw order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingPattern {
    pub n: usize,
    pub iota: Vec<usize>,
    pub seed: u64,
}

impl GluingPattern {
    pub fn combinatorics(&self) -> Result<CombinatorialTriangulation> {
        Ok(CombinatorialTriangulation::new(2 * self.n, self.iota.clone())?)
    }

    pub fn cusp_degrees(&self) -> Result<Vec<usize>> {
        Ok(self.combinatorics()?.vertex_orbits().iter().map(|o| o.len()).collect())
    }

    pub fn cusps(&self) -> Result<usize> {
        Ok(self.cusp_degrees()?.len())
    }

    pub fn genus(&self) -> Result<usize> {
        genus_of(self.n, self.cusps()?)
    }
}

/// Genus of a connected surface from `2n` triangles with `c` cusps.
pub fn genus_of(n: usize, c: usize) -> Result<usize> {
    if c > n + 2 || (n + 2 - c) % 2 != 0 {
        return Err(DualError::Invariant(format!("{c} cusps impossible for N = {n}")));
    }
    Ok((n + 2 - c) / 2)
}

fn is_connected(n: usize, iota: &[usize]) -> bool {
    let mut seen = vec![false; 2 * n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(t) = stack.pop() {
        for k in 0..3 {
            let u = iota[3 * t + k] / 3;
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    seen.into_iter().all(|x| x)
}

fn draw_matching(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut darts: Vec<usize> = (0..6 * n).collect();
    loop {
        darts.shuffle(rng);
        let mut iota = vec![0; 6 * n];
        for p in darts.chunks(2) {
            iota[p[0]] = p[1];
            iota[p[1]] = p[0];
        }
        // Disconnected matchings do not give a surface; redraw.
        if is_connected(n, &iota) {
            return iota;
        }
    }
}

/// Uniform connected side pairing for sample `stream` of a run seeded with `seed`.
pub fn sample_pattern_stream(n: usize, seed: u64, stream: u64) -> Result<GluingPattern> {
    if n == 0 {
        return Err(DualError::Input("N must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Ok(GluingPattern {
        n,
        iota: draw_matching(n, &mut rng),
        seed,
    })
}

pub fn sample_pattern(n: usize, seed: u64) -> Result<GluingPattern> {
    sample_pattern_stream(n, seed, 0)
}

pub fn build_cusped_surface(p: &GluingPattern) -> Result<TriangulatedSurface> {
    Ok(TriangulatedSurface::cusped(p.combinatorics()?)?)
}

/// The inscribed triangles' sides, joined across the gluings into closed curves.
///
/// Every curve is checked to pass straight through each tangency point, and
/// the complement is checked to consist of one disk per triangle and one
/// annulus per cusp.
pub fn inscribed_filling_geodesics(s: &TriangulatedSurface) -> Result<CurveSystem> {
    if s.kind() != SurfaceKind::Cusped {
        return Err(DualError::Precondition("surface is not glued from ideal triangles".into()));
    }
    let d = dual_of_triangulation(s)?;
    let c = decompose_curves(&d);
    for (k, curve) in c.curves.iter().enumerate() {
        let bend = chart_curve(&d, curve).max_bend();
        if bend > BEND_TOL {
            return Err(DualError::Invariant(format!("curve {k} bends by {bend}")));
        }
    }
    let regions = complement_regions(d.cells())?;
    let disks = regions.iter().filter(|r| matches!(r, Region::InsideFace(_))).count();
    if disks != s.triangles() || regions.len() - disks != s.vertex_orbits().len() {
        return Err(DualError::Invariant("inscribed curves do not fill".into()));
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FillingBounds {
    pub lower: f64,
    pub witness_length: f64,
    pub upper: f64,
}

/// Half the area below, the inscribed system in the middle, `6N` above.
pub fn filling_length_bounds(s: &TriangulatedSurface, c: &CurveSystem) -> Result<FillingBounds> {
    let n = s.triangles() as f64 / 2.0;
    let b = FillingBounds {
        lower: s.area() / 2.0,
        witness_length: c.total_length,
        upper: 6.0 * n,
    };
    if !(b.lower <= b.witness_length && b.witness_length < b.upper) {
        return Err(DualError::Invariant(format!(
            "{} is outside [{}, {})",
            b.witness_length, b.lower, b.upper
        )));
    }
    Ok(b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub seed: u64,
    pub sample_idx: u64,
    #[serde(rename = "N")]
    pub n: usize,
    pub cusps: usize,
    pub genus: usize,
    pub min_cusp_degree: usize,
    pub witness_length: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    #[serde(skip)]
    pub cusp_degrees: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub n: usize,
    pub samples: usize,
    pub seed: u64,
    pub degree_threshold: usize,
    pub mean_genus: f64,
    /// Fraction of samples whose smallest cusp degree reaches the threshold.
    pub frac_min_degree_at_least: f64,
    /// Fraction of samples with genus above N/2.
    pub frac_genus_above_half_n: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BmStatistics {
    pub rows: Vec<SampleRow>,
    pub aggregates: Aggregates,
}

pub fn sample_row(n: usize, seed: u64, idx: u64) -> Result<SampleRow> {
    let p = sample_pattern_stream(n, seed, idx)?;
    let s = build_cusped_surface(&p)?;
    let c = inscribed_filling_geodesics(&s)?;
    let b = filling_length_bounds(&s, &c)?;
    let cusp_degrees = p.cusp_degrees()?;
    let cusps = cusp_degrees.len();
    Ok(SampleRow {
        seed,
        sample_idx: idx,
        n,
        cusps,
        genus: genus_of(n, cusps)?,
        min_cusp_degree: *cusp_degrees.iter().min().unwrap(),
        witness_length: b.witness_length,
        lower_bound: b.lower,
        upper_bound: b.upper,
        cusp_degrees,
    })
}

pub fn aggregate(rows: &[SampleRow], seed: u64, degree_threshold: usize) -> Aggregates {
    let k = rows.len() as f64;
    let n = rows.first().map_or(0, |r| r.n);
    Aggregates {
        n,
        samples: rows.len(),
        seed,
        degree_threshold,
        mean_genus: rows.iter().map(|r| r.genus as f64).sum::<f64>() / k,
        frac_min_degree_at_least: rows.iter().filter(|r| r.min_cusp_degree >= degree_threshold).count() as f64 / k,
        frac_genus_above_half_n: rows.iter().filter(|r| 2 * r.genus > r.n).count() as f64 / k,
    }
}

/// Samples are independent streams of one seeded generator, so the output
/// does not depend on thread scheduling.
pub fn run_statistics(n: usize, samples: usize, seed: u64, degree_threshold: usize) -> Result<BmStatistics> {
    if samples == 0 {
        return Err(DualError::Input("at least one sample is required".into()));
    }
    let rows = (0..samples as u64)
        .into_par_iter()
        .map(|i| sample_row(n, seed, i))
        .collect::<Result<Vec<_>>>()?;
    let aggregates = aggregate(&rows, seed, degree_threshold);
    Ok(BmStatistics { rows, aggregates })
}

pub fn write_csv<W: Write>(rows: &[SampleRow], w: W) -> std::result::Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Every perfect matching of `0..m`, in lexicographic order.
pub fn all_matchings(m: usize) -> Vec<Vec<usize>> {
    fn rec(iota: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some(a) = iota.iter().position(|&x| x == usize::MAX) else {
            out.push(iota.clone());
            return;
        };
        for b in a + 1..iota.len() {
            if iota[b] == usize::MAX {
                iota[a] = b;
                iota[b] = a;
                rec(iota, out);
                iota[a] = usize::MAX;
                iota[b] = usize::MAX;
            }
        }
    }
    let mut out = Vec::new();
    if m % 2 == 0 {
        rec(&mut vec![usize::MAX; m], &mut out);
    }
    out
}

/// Exact law of `(cusps, genus)` over all connected side pairings of `2n` triangles.
pub fn exact_distribution(n: usize) -> Result<BTreeMap<(usize, usize), f64>> {
    let mut counts = BTreeMap::new();
    let mut total = 0usize;
    for iota in all_matchings(6 * n) {
        if !is_connected(n, &iota) {
            continue;
        }
        let p = GluingPattern { n, iota, seed: 0 };
        let c = p.cusps()?;
        *counts.entry((c, genus_of(n, c)?)).or_insert(0usize) += 1;
        total += 1;
    }
    Ok(counts.into_iter().map(|(k, v)| (k, v as f64 / total as f64)).collect())
}

/// Largest deviation of sampled frequencies from exact ones, in standard errors.
pub fn max_sigma_deviation(rows: &[SampleRow], exact: &BTreeMap<(usize, usize), f64>) -> f64 {
    let k = rows.len() as f64;
    let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for r in rows {
        *seen.entry((r.cusps, r.genus)).or_insert(0) += 1;
    }
    let mut worst: f64 = 0.0;
    for (key, &p) in exact {
        let got = *seen.get(key).unwrap_or(&0) as f64 / k;
        let sigma = (p * (1.0 - p) / k).sqrt();
        worst = worst.max((got - p).abs() / sigma);
    }
    if seen.keys().any(|key| !exact.contains_key(key)) {
        return f64::INFINITY;
    }
    worst
}

/// Half the area of `2n` ideal triangles.
pub fn area_lower_bound(n: usize) -> f64 {
    PI * n as f64
}
