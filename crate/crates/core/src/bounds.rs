//! Length bounds for filling closed geodesics in terms of genus and short geodesics.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BoundsError {
    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, BoundsError>;

/// Smallest genus from which `exact_min(g) > 7g` holds throughout the checked range.
pub const SEVEN_G_THRESHOLD: u64 = 70;

/// Upper end of the genus sweep that backs [`SEVEN_G_THRESHOLD`].
pub const SEVEN_G_SWEEP_END: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSummary {
    pub genus: u64,
    /// Lengths of the closed geodesics shorter than 1.
    pub short_lengths: Vec<f64>,
}

impl SurfaceSummary {
    pub fn new(genus: u64, short_lengths: Vec<f64>) -> Result<Self> {
        let s = SurfaceSummary { genus, short_lengths };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.genus < 2 {
            return Err(BoundsError::Input(format!("genus {} is below 2", self.genus)));
        }
        if let Some(l) = self.short_lengths.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return Err(BoundsError::Input(format!("length {l} is not in (0, 1)")));
        }
        if self.short_lengths.len() as u64 > 3 * self.genus - 3 {
            return Err(BoundsError::Input(format!(
                "{} short geodesics exceed 3g - 3 = {}",
                self.short_lengths.len(),
                3 * self.genus - 3
            )));
        }
        Ok(())
    }
}

/// `Σ log(1/ℓ)` over the short geodesics.
pub fn r_value(s: &SurfaceSummary) -> Result<f64> {
    s.validate()?;
    Ok(s.short_lengths.iter().fold(0.0, |acc, l| acc + l.recip().ln()))
}

/// Half the perimeter of the regular right-angled `(8g - 4)`-gon.
pub fn exact_min(g: u64) -> Result<f64> {
    if g < 2 {
        return Err(BoundsError::Input(format!("genus {g} is below 2")));
    }
    let k = (8 * g - 4) as f64;
    Ok(k * (2f64.sqrt() * (PI / k).cos()).acosh())
}

/// Limit of `exact_min(g) / g`.
pub fn exact_min_slope() -> f64 {
    8.0 * 2f64.sqrt().acosh()
}

/// Smallest `g` in `2..=end` with `exact_min(h) > 7h` for every `h` from `g` to `end`.
pub fn seven_g_threshold(end: u64) -> Option<u64> {
    let mut first = None;
    for g in 2..=end {
        let holds = exact_min(g).ok()? > 7.0 * g as f64;
        match (holds, first) {
            (true, None) => first = Some(g),
            (false, _) => first = None,
            _ => {}
        }
    }
    first
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub genus: u64,
    pub r: f64,
    /// `π(g - 1) + R`.
    pub lower: f64,
    /// `(7/2)g + R`, only for genus at or above [`SEVEN_G_THRESHOLD`].
    pub lower_large_genus: Option<f64>,
    /// `300g + 12R`.
    pub upper: f64,
    pub exact_min: f64,
    /// `exact_min / g`.
    pub ratio: f64,
}

/// Lower and upper length bounds for a filling geodesic system, with the polygon minimum.
pub fn genus_length_bounds(s: &SurfaceSummary) -> Result<BoundReport> {
    let r = r_value(s)?;
    let g = s.genus as f64;
    let m = exact_min(s.genus)?;
    Ok(BoundReport {
        genus: s.genus,
        r,
        lower: PI * (g - 1.0) + r,
        lower_large_genus: (s.genus >= SEVEN_G_THRESHOLD).then(|| 3.5 * g + r),
        upper: 300.0 * g + 12.0 * r,
        exact_min: m,
        ratio: m / g,
    })
}

/// `(mean^p, max^p, Σ a^p)` for positive `a`; the three are non-decreasing.
pub fn power_mean_chain(a: &[f64], p: f64) -> Result<(f64, f64, f64)> {
    if a.is_empty() || a.iter().any(|x| !(*x > 0.0)) || !(p > 0.0) {
        return Err(BoundsError::Input("need a non-empty positive tuple and p > 0".into()));
    }
    let mean = a.iter().sum::<f64>() / a.len() as f64;
    let max = a.iter().cloned().fold(0.0, f64::max);
    Ok((mean.powf(p), max.powf(p), a.iter().map(|x| x.powf(p)).sum()))
}

/// Parses a CSV list of short geodesic lengths: one number per field, any layout.
pub fn parse_lengths(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    for rec in rdr.records() {
        let rec = rec.map_err(|e| BoundsError::Input(e.to_string()))?;
        for f in rec.iter().filter(|f| !f.is_empty()) {
            out.push(f.parse::<f64>().map_err(|_| BoundsError::Input(format!("bad length {f:?}")))?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn r_value_examples() {
        let e = std::f64::consts::E;
        assert_eq!(r_value(&SurfaceSummary::new(2, vec![]).unwrap()).unwrap(), 0.0);
        let r = r_value(&SurfaceSummary::new(2, vec![1.0 / e, 1.0 / (e * e)]).unwrap()).unwrap();
        assert!((r - 3.0).abs() < 1e-12);
        let r = r_value(&SurfaceSummary::new(2, vec![0.5, 0.25]).unwrap()).unwrap();
        assert!((r - 3.0 * 2f64.ln()).abs() < 1e-12);
        assert!(SurfaceSummary::new(2, vec![1.0]).is_err());
        assert!(SurfaceSummary::new(2, vec![0.5; 4]).is_err());
        assert!(SurfaceSummary::new(1, vec![]).is_err());
    }

    #[test]
    fn genus_two_report() {
        let b = genus_length_bounds(&SurfaceSummary::new(2, vec![]).unwrap()).unwrap();
        assert!((b.lower - PI).abs() < 1e-12);
        assert_eq!(b.upper, 600.0);
        // Direct evaluation: 12 acosh(√2 cos(π/12)).
        assert!((b.exact_min - 9.977315346351729).abs() < 1e-9);
        assert!(b.lower < b.exact_min && b.exact_min < b.upper);
        assert_eq!(b.lower_large_genus, None);
    }

    #[test]
    fn slope_at_a_million() {
        let g = 1_000_000;
        let ratio = exact_min(g).unwrap() / g as f64;
        assert!((ratio - 7.0510).abs() < 1e-3);
        assert!((exact_min_slope() - 7.050988696156344).abs() < 1e-12);
    }

    #[test]
    fn seven_g_threshold_is_recorded() {
        assert_eq!(seven_g_threshold(10_000), Some(SEVEN_G_THRESHOLD));
        assert!(exact_min(SEVEN_G_THRESHOLD - 1).unwrap() <= 7.0 * (SEVEN_G_THRESHOLD - 1) as f64);
    }

    #[test]
    fn exact_min_increases() {
        let mut prev = exact_min(2).unwrap();
        for g in 3..20_000 {
            let m = exact_min(g).unwrap();
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn doubling_logs_doubles_the_r_part() {
        let a = SurfaceSummary::new(3, vec![0.5, 0.1]).unwrap();
        let b = SurfaceSummary::new(3, vec![0.25, 0.01]).unwrap();
        let (ra, rb) = (genus_length_bounds(&a).unwrap(), genus_length_bounds(&b).unwrap());
        assert!(((rb.upper - 900.0) - 2.0 * (ra.upper - 900.0)).abs() < 1e-9);
    }

    #[test]
    fn lengths_parse_from_csv() {
        assert_eq!(parse_lengths("0.5, 0.25\n0.1\n").unwrap(), vec![0.5, 0.25, 0.1]);
        assert!(parse_lengths("x").is_err());
    }

    proptest! {
        #[test]
        fn lower_stays_below_upper(g in 2u64..5000, raw in prop::collection::vec(1e-6f64..0.999, 0..6)) {
            let k = raw.len().min(3 * g as usize - 3);
            let s = SurfaceSummary::new(g, raw[..k].to_vec()).unwrap();
            let b = genus_length_bounds(&s).unwrap();
            prop_assert!(b.lower < b.upper);
            if let Some(l) = b.lower_large_genus {
                prop_assert!(l < b.upper);
            }
        }

        #[test]
        fn power_means_are_ordered(a in prop::collection::vec(1e-3f64..1e3, 1..12), pi in 0usize..4) {
            let p = [0.5, 1.0, 2.0, 3.0][pi];
            let (m, x, s) = power_mean_chain(&a, p).unwrap();
            prop_assert!(m <= x * (1.0 + 1e-12));
            prop_assert!(x <= s * (1.0 + 1e-12));
        }
    }
}
