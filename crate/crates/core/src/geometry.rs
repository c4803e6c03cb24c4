//! Spherical primitives.
//!
//! Everything downstream treats the sky as the unit sphere through the types
//! here. Distances are great-circle angles in radians; right ascension and
//! declination are in degrees at the API boundary only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when checking that a tangent direction is orthogonal to its
/// base point.
pub const TANGENT_TOLERANCE: f64 = 1e-9;

/// A location on the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl SpherePoint {
    /// Builds a point from an arbitrary non-zero vector, normalizing it.
    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let n = norm(v);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cannot normalize vector {v:?} onto the sphere"
            )));
        }
        Ok(Self::from_unit_unchecked(scale(v, 1.0 / n)))
    }

    pub(crate) fn from_unit_unchecked(v: [f64; 3]) -> Self {
        Self {
            x: v[0],
            y: v[1],
            z: v[2],
        }
    }

    pub fn north_pole() -> Self {
        Self::from_unit_unchecked([0.0, 0.0, 1.0])
    }

    /// Converts equatorial coordinates in degrees. `ra = 0, dec = 0` maps to
    /// the +x axis, `ra = 90` to +y, `dec = 90` to +z.
    pub fn from_ra_dec(ra_deg: f64, dec_deg: f64) -> Result<Self> {
        if !(-90.0..=90.0).contains(&dec_deg) || !ra_deg.is_finite() {
            return Err(Error::InvalidInput(format!(
                "declination {dec_deg} outside [-90, 90] or non-finite right ascension {ra_deg}"
            )));
        }
        let (sin_ra, cos_ra) = ra_deg.to_radians().sin_cos();
        let (sin_dec, cos_dec) = dec_deg.to_radians().sin_cos();
        Ok(Self::from_unit_unchecked([cos_dec * cos_ra, cos_dec * sin_ra, sin_dec]))
    }

    /// Returns `(ra, dec)` in degrees with `ra` in `[0, 360)`. At the poles the
    /// right ascension is reported as 0.
    pub fn to_ra_dec(self) -> (f64, f64) {
        let dec = self.z.clamp(-1.0, 1.0).asin().to_degrees();
        let mut ra = self.y.atan2(self.x).to_degrees();
        if ra < 0.0 {
            ra += 360.0;
        }
        if ra >= 360.0 {
            ra -= 360.0;
        }
        (ra, dec)
    }

    pub fn as_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn dot(self, other: SpherePoint) -> f64 {
        dot(self.as_array(), other.as_array())
    }

    /// Orthonormal east/north basis of the tangent plane at this point. At the
    /// poles east is taken along +y.
    pub fn tangent_basis(self) -> ([f64; 3], [f64; 3]) {
        let p = self.as_array();
        let rho = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let east = if rho < 1e-12 {
            [0.0, 1.0, 0.0]
        } else {
            [-p[1] / rho, p[0] / rho, 0.0]
        };
        let north = cross(p, east);
        (east, north)
    }

    /// Unit tangent vector at `self` pointing along the great circle toward
    /// `target`. Returns `None` when the points coincide or are antipodal.
    pub fn direction_to(self, target: SpherePoint) -> Option<[f64; 3]> {
        let p = self.as_array();
        let t = target.as_array();
        let c = dot(p, t);
        let v = sub(t, scale(p, c));
        let n = norm(v);
        if n < 1e-300 {
            None
        } else {
            Some(scale(v, 1.0 / n))
        }
    }
}

/// A closed spherical cap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: SpherePoint,
    /// Angular radius in radians.
    pub radius: f64,
}

impl Disc {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidInput(format!(
                "disc radius {radius} must lie in (0, pi/2)"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: SpherePoint) -> bool {
        contains(self, p)
    }
}

/// A right-ascension/declination rectangle, in degrees.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionRect {
    pub ra_min: f64,
    pub ra_max: f64,
    pub dec_min: f64,
    pub dec_max: f64,
}

impl RegionRect {
    pub fn new(ra_min: f64, ra_max: f64, dec_min: f64, dec_max: f64) -> Result<Self> {
        let ok =
            ra_min < ra_max && ra_max - ra_min <= 360.0 && -90.0 <= dec_min && dec_min < dec_max && dec_max <= 90.0;
        if !ok {
            return Err(Error::InvalidInput(format!(
                "invalid region ra [{ra_min}, {ra_max}] dec [{dec_min}, {dec_max}]"
            )));
        }
        Ok(Self {
            ra_min,
            ra_max,
            dec_min,
            dec_max,
        })
    }

    /// Parses `ra_min,ra_max,dec_min,dec_max`.
    pub fn parse(text: &str) -> Result<Self> {
        let parts: Vec<f64> = text
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("region '{text}': {e}")))?;
        match parts.as_slice() {
            &[a, b, c, d] => Self::new(a, b, c, d),
            _ => Err(Error::InvalidInput(format!(
                "region '{text}' needs four comma-separated values"
            ))),
        }
    }

    /// Right ascension shifted into `[ra_min, ra_min + 360)`.
    fn unwrap_ra(&self, ra: f64) -> f64 {
        self.ra_min + (ra - self.ra_min).rem_euclid(360.0)
    }

    pub fn contains_ra_dec(&self, ra: f64, dec: f64) -> bool {
        dec >= self.dec_min && dec <= self.dec_max && self.unwrap_ra(ra) <= self.ra_max
    }

    pub fn contains_point(&self, p: SpherePoint) -> bool {
        let (ra, dec) = p.to_ra_dec();
        // Poles have undefined ra; accept them when the dec band reaches them.
        if p.z.abs() > 1.0 - 1e-15 {
            return dec >= self.dec_min && dec <= self.dec_max;
        }
        self.contains_ra_dec(ra, dec)
    }

    /// Solid angle in steradians.
    pub fn area(&self) -> f64 {
        (self.ra_max - self.ra_min).to_radians() * (self.dec_max.to_radians().sin() - self.dec_min.to_radians().sin())
    }

    /// Spherical centroid: the normalized mean position of the area element.
    pub fn centroid(&self) -> SpherePoint {
        let ra_mid = 0.5 * (self.ra_min + self.ra_max);
        let (s1, s2) = (self.dec_min.to_radians().sin(), self.dec_max.to_radians().sin());
        // Integral of cos(dec) over the band, per unit of sin(dec), gives the
        // mean of the equatorial radius; the mean z is (s1+s2)/2.
        let half_width = 0.5 * (self.ra_max - self.ra_min).to_radians();
        let sinc = if half_width < 1e-12 {
            1.0
        } else {
            half_width.sin() / half_width
        };
        let mean_rho = band_mean_rho(s1, s2);
        let (sin_ra, cos_ra) = ra_mid.to_radians().sin_cos();
        let v = [mean_rho * sinc * cos_ra, mean_rho * sinc * sin_ra, 0.5 * (s1 + s2)];
        SpherePoint::from_vector(v).unwrap_or_else(|_| SpherePoint::north_pole())
    }

    /// The rectangle grown by an angular margin (radians) on every side. The
    /// ra margin is widened by the secant of the most poleward declination so
    /// the grown rectangle contains every point within `margin` of `self`.
    pub fn dilated(&self, margin: f64) -> RegionRect {
        let m = margin.to_degrees();
        let dec_min = (self.dec_min - m).max(-90.0);
        let dec_max = (self.dec_max + m).min(90.0);
        let extreme = dec_min.abs().max(dec_max.abs());
        let (ra_min, ra_max) = if extreme >= 89.999 {
            (self.ra_min, self.ra_min + 360.0)
        } else {
            let cos_e = extreme.to_radians().cos();
            let ra_pad = (margin.sin() / cos_e).min(1.0).asin().to_degrees();
            let lo = self.ra_min - ra_pad;
            let hi = self.ra_max + ra_pad;
            if hi - lo >= 360.0 {
                (self.ra_min, self.ra_min + 360.0)
            } else {
                (lo, hi)
            }
        };
        RegionRect {
            ra_min,
            ra_max,
            dec_min,
            dec_max,
        }
    }

    /// How far outside the rectangle a point lies, in approximate radians
    /// (zero inside). Used only to rank boundary points.
    pub fn outside_margin(&self, p: SpherePoint) -> f64 {
        let (ra, dec) = p.to_ra_dec();
        let dec_excess = (self.dec_min - dec).max(dec - self.dec_max).max(0.0);
        let ra_u = self.unwrap_ra(ra);
        let ra_excess = if ra_u <= self.ra_max {
            0.0
        } else {
            let above = ra_u - self.ra_max;
            let below = self.ra_min + 360.0 - ra_u;
            above.min(below)
        };
        let cos_dec = dec.to_radians().cos();
        (ra_excess.to_radians() * cos_dec).hypot(dec_excess.to_radians())
    }
}

fn band_mean_rho(s1: f64, s2: f64) -> f64 {
    // mean of sqrt(1 - s^2) for s uniform in [s1, s2]
    if (s2 - s1).abs() < 1e-12 {
        return (1.0 - s1 * s1).max(0.0).sqrt();
    }
    let prim = |s: f64| 0.5 * (s * (1.0 - s * s).max(0.0).sqrt() + s.clamp(-1.0, 1.0).asin());
    (prim(s2) - prim(s1)) / (s2 - s1)
}

/// Great-circle angle between two points, via `atan2(|a x b|, a . b)`.
pub fn angular_distance(a: SpherePoint, b: SpherePoint) -> f64 {
    let (u, v) = (a.as_array(), b.as_array());
    norm(cross(u, v)).atan2(dot(u, v))
}

pub fn contains(disc: &Disc, p: SpherePoint) -> bool {
    angular_distance(disc.center, p) <= disc.radius
}

/// Walks `step` radians from `p` along the great circle leaving `p` in the
/// direction `tangent_dir`.
pub fn move_on_sphere(p: SpherePoint, tangent_dir: [f64; 3], step: f64) -> Result<SpherePoint> {
    let dn = norm(tangent_dir);
    if (dn - 1.0).abs() > TANGENT_TOLERANCE || dot(p.as_array(), tangent_dir).abs() > TANGENT_TOLERANCE {
        return Err(Error::InvalidInput(format!(
            "direction {tangent_dir:?} is not a unit tangent at {p:?}"
        )));
    }
    if !(step >= 0.0) {
        return Err(Error::InvalidInput(format!("negative step {step}")));
    }
    if step == 0.0 {
        return Ok(p);
    }
    Ok(step_unchecked(p, tangent_dir, step))
}

/// `move_on_sphere` without validation, renormalized.
pub(crate) fn step_unchecked(p: SpherePoint, dir: [f64; 3], step: f64) -> SpherePoint {
    let (s, c) = step.sin_cos();
    let v = add(scale(p.as_array(), c), scale(dir, s));
    SpherePoint::from_unit_unchecked(scale(v, 1.0 / norm(v)))
}

pub fn ra_dec_to_point(ra_deg: f64, dec_deg: f64) -> Result<SpherePoint> {
    SpherePoint::from_ra_dec(ra_deg, dec_deg)
}

pub fn point_to_ra_dec(p: SpherePoint) -> (f64, f64) {
    p.to_ra_dec()
}

/// Gnomonic projection onto the plane tangent at `center`. Returns `None` for
/// points on or behind the horizon.
pub fn gnomonic(center: SpherePoint, p: SpherePoint) -> Option<(f64, f64)> {
    let cos_c = center.dot(p);
    if cos_c <= 1e-9 {
        return None;
    }
    let (east, north) = center.tangent_basis();
    let v = p.as_array();
    Some((dot(v, east) / cos_c, dot(v, north) / cos_c))
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn scale(a: [f64; 3], k: f64) -> [f64; 3] {
    [a[0] * k, a[1] * k, a[2] * k]
}

pub(crate) fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}
