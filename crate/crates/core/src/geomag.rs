//! Spherical-harmonic synthesis of the internal geomagnetic field from a
//! Gauss coefficient table in the IGRF text layout.
//!
//! Coefficients are held in nT. [`igrf_field_ned`] returns nT; the orbital
//! reference field handed to the rest of the crate is in tesla.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use log::warn;
use thiserror::Error;

use crate::attitude::Vec3;
use crate::orbit::{
    eci_to_ecef, eci_to_geoposition, eci_to_orbital, ned_basis_ecef, propagate_circular_orbit, sidereal_angle,
    GeoPosition, OrbitConfig, OrbitError, R_EARTH,
};

/// Geomagnetic reference radius, m.
pub const REFERENCE_RADIUS: f64 = 6371.2e3;
/// Latitudes are clamped this far inside the poles to keep `1/sin θ` finite.
pub const POLE_MARGIN: f64 = 1e-6;
/// Years past the last epoch for which secular variation is trusted.
pub const SV_VALIDITY_YEARS: f64 = 5.0;

/// IGRF-13 coefficient table shipped with the crate.
pub const IGRF13_TABLE: &str = include_str!("../data/igrf13coeffs.txt");

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomagError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("coefficient table has no epoch header (expected a `g/h n m ...` line)")]
    MissingEpochs,
    #[error("coefficient table contains no coefficients")]
    Empty,
    #[error("position radius {0} m is inside the Earth's core")]
    Radius(f64),
    #[error(transparent)]
    Orbit(#[from] OrbitError),
}

/// Index of `(n, m)` in a triangular coefficient array.
#[inline]
pub fn tri_index(n: usize, m: usize) -> usize {
    n * (n + 1) / 2 + m
}

/// One full set of Gauss coefficients, nT (or nT/yr for secular variation).
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSet {
    pub g: Vec<f64>,
    pub h: Vec<f64>,
}

impl CoeffSet {
    pub fn zeros(max_degree: usize) -> Self {
        let len = tri_index(max_degree, max_degree) + 1;
        CoeffSet {
            g: vec![0.0; len],
            h: vec![0.0; len],
        }
    }

    pub fn max_degree(&self) -> usize {
        let mut n = 0;
        while tri_index(n + 1, n + 1) < self.g.len() {
            n += 1;
        }
        n
    }

    /// Pure axial dipole with the given `g₁⁰`.
    pub fn dipole(g10: f64) -> Self {
        let mut c = CoeffSet::zeros(1);
        c.g[tri_index(1, 0)] = g10;
        c
    }
}

/// Gauss coefficient table over one or more epochs.
#[derive(Debug, Clone, PartialEq)]
pub struct GeomagCoefficients {
    pub label: String,
    pub max_degree: usize,
    pub epochs: Vec<f64>,
    /// One coefficient set per epoch.
    pub sets: Vec<CoeffSet>,
    /// Secular variation after the last epoch, nT/yr.
    pub secular_variation: CoeffSet,
}

impl GeomagCoefficients {
    /// The bundled IGRF-13 table.
    pub fn igrf13() -> Self {
        load_igrf_coefficients(IGRF13_TABLE).expect("bundled IGRF-13 table parses")
    }

    /// Single-epoch table, useful for synthetic fields.
    pub fn single_epoch(label: &str, epoch: f64, set: CoeffSet) -> Self {
        let max_degree = set.max_degree();
        GeomagCoefficients {
            label: label.to_string(),
            max_degree,
            epochs: vec![epoch],
            secular_variation: CoeffSet::zeros(max_degree),
            sets: vec![set],
        }
    }

    pub fn coefficient_count(&self) -> usize {
        // g rows plus h rows (h_n^0 does not exist).
        let n = self.max_degree;
        n * (n + 3) / 2 + n * (n + 1) / 2
    }

    /// Coefficients at `date` (decimal year): linear between epochs, secular
    /// variation past the last epoch. Dates outside the validity window are
    /// clamped with a warning.
    pub fn at_date(&self, date: f64) -> Result<CoeffSet, GeomagError> {
        let (first, last) = match (self.epochs.first(), self.epochs.last()) {
            (Some(&f), Some(&l)) => (f, l),
            _ => return Err(GeomagError::Empty),
        };
        let mut date = date;
        if date < first {
            warn!("date {date} precedes first epoch {first}; clamping");
            date = first;
        }
        if date > last + SV_VALIDITY_YEARS {
            warn!(
                "date {date} beyond model validity {}; clamping",
                last + SV_VALIDITY_YEARS
            );
            date = last + SV_VALIDITY_YEARS;
        }
        if date >= last {
            let dt = date - last;
            let base = &self.sets[self.sets.len() - 1];
            let sv = &self.secular_variation;
            return Ok(CoeffSet {
                g: base.g.iter().zip(&sv.g).map(|(c, s)| c + s * dt).collect(),
                h: base.h.iter().zip(&sv.h).map(|(c, s)| c + s * dt).collect(),
            });
        }
        let i = self.epochs.windows(2).position(|w| date < w[1]).unwrap_or(0);
        let w = (date - self.epochs[i]) / (self.epochs[i + 1] - self.epochs[i]);
        let (a, b) = (&self.sets[i], &self.sets[i + 1]);
        Ok(CoeffSet {
            g: a.g.iter().zip(&b.g).map(|(x, y)| x + w * (y - x)).collect(),
            h: a.h.iter().zip(&b.h).map(|(x, y)| x + w * (y - x)).collect(),
        })
    }
}

/// Parses the official IGRF coefficient table layout: comment lines start
/// with `#`, an optional `c/s` row, a `g/h n m <epochs...> <SV>` header, and
/// one `g|h n m <values...>` row per coefficient.
pub fn load_igrf_coefficients(text: &str) -> Result<GeomagCoefficients, GeomagError> {
    let mut label = String::from("unnamed");
    let mut epochs: Option<(Vec<f64>, bool)> = None;
    let mut rows: Vec<(usize, bool, usize, usize, Vec<f64>)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if label == "unnamed" {
                if let Some(gen) = generation_label(comment) {
                    label = gen;
                }
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens[0] {
            "c/s" => continue,
            "g/h" => {
                if tokens.len() < 4 {
                    return Err(parse_err(line_no, "epoch header lists no epochs"));
                }
                let cols = &tokens[3..];
                let has_sv = cols.last().is_some_and(|c| c[1..].contains('-'));
                let epoch_cols = if has_sv { &cols[..cols.len() - 1] } else { cols };
                let parsed = epoch_cols
                    .iter()
                    .map(|c| c.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| parse_err(line_no, "malformed epoch in header"))?;
                if parsed.is_empty() {
                    return Err(parse_err(line_no, "epoch header lists no epochs"));
                }
                if parsed.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(parse_err(line_no, "epochs must be strictly increasing"));
                }
                epochs = Some((parsed, has_sv));
            }
            "g" | "h" => {
                let (ep, has_sv) = epochs.as_ref().ok_or(GeomagError::MissingEpochs)?;
                let expected = ep.len() + usize::from(*has_sv);
                if tokens.len() != 3 + expected {
                    return Err(parse_err(
                        line_no,
                        &format!(
                            "expected {expected} value columns, found {}",
                            tokens.len().saturating_sub(3)
                        ),
                    ));
                }
                let n: usize = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(line_no, "degree is not an integer"))?;
                let m: usize = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(line_no, "order is not an integer"))?;
                let is_g = tokens[0] == "g";
                if n == 0 || m > n || (!is_g && m == 0) {
                    return Err(parse_err(line_no, &format!("invalid degree/order ({n}, {m})")));
                }
                let values = tokens[3..]
                    .iter()
                    .map(|c| c.parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| parse_err(line_no, "malformed coefficient value"))?;
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(parse_err(line_no, "non-finite coefficient"));
                }
                rows.push((line_no, is_g, n, m, values));
            }
            other => {
                return Err(parse_err(line_no, &format!("unexpected row tag `{other}`")));
            }
        }
    }

    let (epochs, has_sv) = epochs.ok_or(GeomagError::MissingEpochs)?;
    if rows.is_empty() {
        return Err(GeomagError::Empty);
    }
    let max_degree = rows.iter().map(|r| r.2).max().unwrap_or(0);
    let mut sets = vec![CoeffSet::zeros(max_degree); epochs.len()];
    let mut sv = CoeffSet::zeros(max_degree);
    for (_, is_g, n, m, values) in rows {
        let k = tri_index(n, m);
        for (set, v) in sets.iter_mut().zip(&values) {
            if is_g {
                set.g[k] = *v;
            } else {
                set.h[k] = *v;
            }
        }
        if has_sv {
            let v = values[values.len() - 1];
            if is_g {
                sv.g[k] = v;
            } else {
                sv.h[k] = v;
            }
        }
    }
    Ok(GeomagCoefficients {
        label,
        max_degree,
        epochs,
        sets,
        secular_variation: sv,
    })
}

fn parse_err(line: usize, message: &str) -> GeomagError {
    GeomagError::Parse {
        line,
        message: message.to_string(),
    }
}

fn generation_label(comment: &str) -> Option<String> {
    let lower = comment.to_ascii_lowercase();
    let pos = lower.find("generation")?;
    let ordinal = lower[..pos].split_whitespace().last()?;
    let digits: String = ordinal.chars().take_while(|c| c.is_ascii_digit()).collect();
    (!digits.is_empty()).then(|| format!("IGRF-{digits}"))
}

/// Schmidt semi-normalized associated Legendre functions `P_n^m(cos θ)` and
/// their θ-derivatives, triangular layout.
pub fn schmidt_legendre(max_degree: usize, cos_t: f64, sin_t: f64) -> (Vec<f64>, Vec<f64>) {
    let len = tri_index(max_degree, max_degree) + 1;
    let mut p = vec![0.0; len];
    let mut dp = vec![0.0; len];
    p[0] = 1.0;
    for n in 1..=max_degree {
        for m in 0..=n {
            let k = tri_index(n, m);
            if n == m {
                let prev = tri_index(n - 1, n - 1);
                if n == 1 {
                    p[k] = sin_t;
                    dp[k] = cos_t;
                } else {
                    let f = ((2 * n - 1) as f64 / (2 * n) as f64).sqrt();
                    p[k] = f * sin_t * p[prev];
                    dp[k] = f * (cos_t * p[prev] + sin_t * dp[prev]);
                }
            } else {
                let nf = n as f64;
                let mf = m as f64;
                let denom = (nf * nf - mf * mf).sqrt();
                let a = (2.0 * nf - 1.0) / denom;
                let b = ((nf - 1.0) * (nf - 1.0) - mf * mf).max(0.0).sqrt() / denom;
                let k1 = tri_index(n - 1, m);
                let (p2, dp2) = if n >= 2 && m <= n - 2 {
                    let k2 = tri_index(n - 2, m);
                    (p[k2], dp[k2])
                } else {
                    (0.0, 0.0)
                };
                p[k] = a * cos_t * p[k1] - b * p2;
                dp[k] = a * (cos_t * dp[k1] - sin_t * p[k1]) - b * dp2;
            }
        }
    }
    (p, dp)
}

/// Internal field at a geocentric position for one coefficient set.
/// Returns (north, east, down) in the units of the coefficients.
pub fn synthesize_ned(set: &CoeffSet, pos: &GeoPosition) -> Vec3 {
    let max_degree = set.max_degree();
    let lat = pos.latitude.clamp(-FRAC_PI_2 + POLE_MARGIN, FRAC_PI_2 - POLE_MARGIN);
    // Colatitude θ: cos θ = sin(lat), sin θ = cos(lat).
    let (cos_t, sin_t) = lat.sin_cos();
    let (p, dp) = schmidt_legendre(max_degree, cos_t, sin_t);
    let ratio = REFERENCE_RADIUS / pos.radius;

    let (mut br, mut bt, mut bp) = (0.0, 0.0, 0.0);
    let mut rpow = ratio * ratio;
    for n in 1..=max_degree {
        rpow *= ratio;
        let (mut sr, mut st, mut sp) = (0.0, 0.0, 0.0);
        for m in 0..=n {
            let k = tri_index(n, m);
            let (sm, cm) = (m as f64 * pos.longitude).sin_cos();
            let (g, h) = (set.g[k], set.h[k]);
            let gc = g * cm + h * sm;
            sr += gc * p[k];
            st += gc * dp[k];
            sp += m as f64 * (g * sm - h * cm) * p[k];
        }
        br += (n as f64 + 1.0) * rpow * sr;
        bt -= rpow * st;
        bp += rpow * sp;
    }
    bp /= sin_t;
    Vec3::new(-bt, bp, -br)
}

/// Field (nT, north/east/down) at `pos` on `date` (decimal year).
pub fn igrf_field_ned(coeffs: &GeomagCoefficients, pos: &GeoPosition, date: f64) -> Result<Vec3, GeomagError> {
    if pos.radius <= R_EARTH / 2.0 {
        return Err(GeomagError::Radius(pos.radius));
    }
    let set = coeffs.at_date(date)?;
    Ok(synthesize_ned(&set, pos))
}

/// Reference field at the satellite in the orbital frame, tesla.
pub fn reference_field_orbital(
    coeffs: &GeomagCoefficients,
    orbit: &OrbitConfig,
    t: f64,
    date: f64,
) -> Result<Vec3, GeomagError> {
    let set = coeffs.at_date(date)?;
    orbital_field_from_set(&set, orbit, t)
}

fn orbital_field_from_set(set: &CoeffSet, orbit: &OrbitConfig, t: f64) -> Result<Vec3, GeomagError> {
    let (pos, vel) = propagate_circular_orbit(orbit, t)?;
    let geo = eci_to_geoposition(&pos, t, orbit.gmst0);
    let ned = synthesize_ned(set, &geo);
    let ecef = ned_basis_ecef(&geo) * ned;
    let eci = eci_to_ecef(sidereal_angle(orbit.gmst0, t)).transpose() * ecef;
    Ok(eci_to_orbital(&pos, &vel) * eci * 1e-9)
}

/// Orbital-frame reference field along a fixed orbit. Coefficients are
/// evaluated at the orbit epoch and advanced by secular variation within
/// each call, so the provider is a pure function of time.
#[derive(Debug, Clone)]
pub struct ReferenceField {
    coeffs: Arc<GeomagCoefficients>,
    orbit: OrbitConfig,
    base: CoeffSet,
    rate: CoeffSet,
}

impl ReferenceField {
    pub fn new(coeffs: Arc<GeomagCoefficients>, orbit: OrbitConfig) -> Result<Self, GeomagError> {
        orbit.validate()?;
        let base = coeffs.at_date(orbit.epoch)?;
        // Per-year rate at the epoch, from a one-day forward difference.
        let day = 1.0 / 365.25;
        let next = coeffs.at_date(orbit.epoch + day)?;
        let rate = CoeffSet {
            g: next.g.iter().zip(&base.g).map(|(a, b)| (a - b) / day).collect(),
            h: next.h.iter().zip(&base.h).map(|(a, b)| (a - b) / day).collect(),
        };
        Ok(ReferenceField {
            coeffs,
            orbit,
            base,
            rate,
        })
    }

    pub fn orbit(&self) -> &OrbitConfig {
        &self.orbit
    }

    pub fn coefficients(&self) -> &GeomagCoefficients {
        &self.coeffs
    }

    /// Orbital-frame field in tesla at `t` seconds after epoch.
    pub fn at(&self, t: f64) -> Vec3 {
        let dy = t / crate::orbit::SECONDS_PER_YEAR;
        let set = CoeffSet {
            g: self.base.g.iter().zip(&self.rate.g).map(|(c, r)| c + r * dy).collect(),
            h: self.base.h.iter().zip(&self.rate.h).map(|(c, r)| c + r * dy).collect(),
        };
        orbital_field_from_set(&set, &self.orbit, t.max(0.0)).unwrap_or_else(|_| Vec3::zeros())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::orbital_rate;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const G10: f64 = -29442.0;

    fn dipole_table() -> GeomagCoefficients {
        GeomagCoefficients::single_epoch("dipole", 2015.0, CoeffSet::dipole(G10))
    }

    /// Closed-form axial dipole, (north, east, down).
    fn dipole_oracle(g10: f64, pos: &GeoPosition) -> Vec3 {
        let theta = FRAC_PI_2 - pos.latitude;
        let k = (REFERENCE_RADIUS / pos.radius).powi(3) * g10;
        let br = 2.0 * k * theta.cos();
        let bt = k * theta.sin();
        Vec3::new(-bt, 0.0, -br)
    }

    #[test]
    fn dipole_equator_and_pole() {
        let eq = GeoPosition {
            latitude: 0.0,
            longitude: 0.3,
            radius: REFERENCE_RADIUS,
        };
        let b = igrf_field_ned(&dipole_table(), &eq, 2015.0).unwrap();
        assert_abs_diff_eq!(b.x, 29442.0, epsilon = 1e-9);
        assert_abs_diff_eq!(b.z, 0.0, epsilon = 1e-9);

        let pole = GeoPosition {
            latitude: FRAC_PI_2,
            ..eq
        };
        let b = igrf_field_ned(&dipole_table(), &pole, 2015.0).unwrap();
        assert_relative_eq!(b.norm(), 2.0 * 29442.0, max_relative = 1e-9);
        assert!(b.z > 0.0);
    }

    #[test]
    fn dipole_matches_closed_form() {
        let table = dipole_table();
        for i in 0..50 {
            let pos = GeoPosition {
                latitude: -1.5 + 0.06 * i as f64,
                longitude: 0.37 * i as f64 - 3.0,
                radius: REFERENCE_RADIUS * (1.0 + 0.01 * i as f64),
            };
            let b = igrf_field_ned(&table, &pos, 2015.0).unwrap();
            let o = dipole_oracle(G10, &pos);
            assert!((b - o).norm() <= 1e-9 * o.norm());
        }
    }

    #[test]
    fn degree_scaling() {
        for n in [1usize, 2] {
            let mut set = CoeffSet::zeros(n);
            set.g[tri_index(n, 0)] = 1000.0;
            if n == 2 {
                set.g[tri_index(2, 1)] = -300.0;
                set.h[tri_index(2, 2)] = 150.0;
            }
            let at = |r: f64| {
                synthesize_ned(
                    &set,
                    &GeoPosition {
                        latitude: 0.4,
                        longitude: 1.1,
                        radius: r,
                    },
                )
                .norm()
            };
            let r1: f64 = 7e6;
            let r2 = 9e6;
            let expected = (r1 / r2).powi(n as i32 + 2);
            assert_relative_eq!(at(r2) / at(r1), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn legendre_low_degree_closed_forms() {
        let t: f64 = 0.83;
        let (c, s) = (t.cos(), t.sin());
        let (p, dp) = schmidt_legendre(3, c, s);
        let expect = [
            (1, 0, c),
            (1, 1, s),
            (2, 0, 1.5 * c * c - 0.5),
            (2, 1, 3f64.sqrt() * c * s),
            (2, 2, 0.5 * 3f64.sqrt() * s * s),
            (3, 1, (3.0 / 8.0f64).sqrt() * s * (5.0 * c * c - 1.0)),
        ];
        for (n, m, v) in expect {
            assert_abs_diff_eq!(p[tri_index(n, m)], v, epsilon = 1e-14);
        }
        let h = 1e-6;
        let (pp, _) = schmidt_legendre(3, (t + h).cos(), (t + h).sin());
        let (pm, _) = schmidt_legendre(3, (t - h).cos(), (t - h).sin());
        for k in 0..p.len() {
            assert_abs_diff_eq!(dp[k], (pp[k] - pm[k]) / (2.0 * h), epsilon = 1e-8);
        }
    }

    #[test]
    fn parses_minimal_table() {
        let text = "# test\ng/h n m 2015.0 2015-20\ng 1 0 -29442.0 10.3\n";
        let c = load_igrf_coefficients(text).unwrap();
        assert_eq!(c.max_degree, 1);
        assert_eq!(c.sets[0].g[tri_index(1, 0)], -29442.0);
        assert_eq!(c.secular_variation.g[tri_index(1, 0)], 10.3);
        let later = c.at_date(2017.0).unwrap();
        assert_abs_diff_eq!(later.g[tri_index(1, 0)], -29442.0 + 20.6, epsilon = 1e-9);
    }

    #[test]
    fn skips_comment_and_header_lines() {
        let text = "# c1\n# c2\nc/s IGRF SV\n\ng/h n m 2015.0 2015-20\ng 1 0 -29442.0 10.3\ng 1 1 -1501.0 1.0\nh 1 1 4797.1 -26.0\n";
        let c = load_igrf_coefficients(text).unwrap();
        assert_eq!(c.coefficient_count(), 3);
        assert_eq!(c.sets[0].h[tri_index(1, 1)], 4797.1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = load_igrf_coefficients("g/h n m 2015.0 2015-20\ng 1 0 -29442.0\n").unwrap_err();
        assert!(matches!(err, GeomagError::Parse { line: 2, .. }), "{err:?}");
        let err = load_igrf_coefficients("g/h n m 2015.0 2015-20\n\nh 1 0 1.0 2.0\n").unwrap_err();
        assert!(matches!(err, GeomagError::Parse { line: 3, .. }), "{err:?}");
        let err = load_igrf_coefficients("g/h n m 2015.0 2015-20\ng 1 x 1.0 2.0\n").unwrap_err();
        assert!(matches!(err, GeomagError::Parse { line: 2, .. }));
        assert_eq!(
            load_igrf_coefficients("g 1 0 1.0 2.0\n"),
            Err(GeomagError::MissingEpochs)
        );
        assert_eq!(load_igrf_coefficients("# nothing\n"), Err(GeomagError::MissingEpochs));
    }

    #[test]
    fn bundled_table_shape() {
        let c = GeomagCoefficients::igrf13();
        assert_eq!(c.label, "IGRF-13");
        assert_eq!(c.max_degree, 13);
        // Σ(n+1) g rows + Σn h rows for n = 1..13.
        let rows: usize = (1..=13).map(|n| 2 * n + 1).sum();
        assert_eq!(rows, 195);
        assert_eq!(c.coefficient_count(), rows);
        let data_rows = IGRF13_TABLE
            .lines()
            .filter(|l| l.starts_with("g ") || l.starts_with("h "))
            .count();
        assert_eq!(data_rows, rows);
        assert_eq!(c.epochs.len(), 25);
        assert!(c.sets[0].g[tri_index(1, 0)] < 0.0);
        assert_eq!(c.sets[23].g[tri_index(1, 0)], -29441.46);
    }

    #[test]
    fn interpolates_between_epochs() {
        let c = GeomagCoefficients::igrf13();
        let k = tri_index(1, 0);
        let mid = c.at_date(2012.5).unwrap();
        assert_abs_diff_eq!(mid.g[k], 0.5 * (-29496.57 + -29441.46), epsilon = 1e-9);
        let clamped = c.at_date(1800.0).unwrap();
        assert_eq!(clamped.g[k], c.sets[0].g[k]);
    }

    #[test]
    fn zero_coefficients_give_zero_field() {
        let table = GeomagCoefficients::single_epoch("zero", 2015.0, CoeffSet::zeros(3));
        let b = reference_field_orbital(&table, &OrbitConfig::default(), 100.0, 2015.0).unwrap();
        assert_eq!(b, Vec3::zeros());
    }

    #[test]
    fn equatorial_orbit_over_dipole() {
        // Equatorial prograde orbit: NED north is orbit-normal (−y orbital),
        // east is along-track (+x), down is nadir (+z).
        let orbit = OrbitConfig {
            inclination: 0.0,
            ..OrbitConfig::default()
        };
        let b = reference_field_orbital(&dipole_table(), &orbit, 0.0, 2015.0).unwrap();
        let r = orbit.radius();
        let expected_north = -G10 * (REFERENCE_RADIUS / r).powi(3) * 1e-9;
        assert_abs_diff_eq!(b.y, -expected_north, epsilon = 1e-15);
        assert_abs_diff_eq!(b.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.z, 0.0, epsilon = 1e-15);

        // Tilted dipole term g11 puts a radial component at the equator
        // that must appear on the orbital z axis.
        let mut set = CoeffSet::zeros(1);
        set.g[tri_index(1, 1)] = -2000.0;
        let tilted = GeomagCoefficients::single_epoch("g11", 2015.0, set.clone());
        let b = reference_field_orbital(&tilted, &orbit, 0.0, 2015.0).unwrap();
        let geo = GeoPosition {
            latitude: 0.0,
            longitude: 0.0,
            radius: r,
        };
        let ned = synthesize_ned(&set, &geo) * 1e-9;
        assert_abs_diff_eq!(b.z, ned.z, epsilon = 1e-15);
        assert_abs_diff_eq!(b.x, ned.y, epsilon = 1e-15);
        assert_abs_diff_eq!(b.y, -ned.x, epsilon = 1e-15);
    }

    #[test]
    fn reference_field_provider_matches_direct_evaluation() {
        let coeffs = Arc::new(GeomagCoefficients::igrf13());
        let orbit = OrbitConfig::default();
        let field = ReferenceField::new(coeffs.clone(), orbit).unwrap();
        for t in [0.0, 600.0, 1800.0] {
            let direct = reference_field_orbital(&coeffs, &orbit, t, orbit.date_at(t)).unwrap();
            assert!((field.at(t) - direct).norm() < 1e-13, "t = {t}");
        }
        let w0 = orbital_rate(&orbit);
        assert!(w0 > 0.0);
    }
}
