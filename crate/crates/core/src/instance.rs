//! Problem instances: catalog ingestion, subsampling and a synthetic
//! clustered galaxy-field generator.

use std::io::{Read, Write};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{self, RegionRect, SpherePoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub galaxies: Vec<SpherePoint>,
    pub region: RegionRect,
    /// Disc radius in radians.
    pub radius: f64,
    /// Maximum galaxies per disc.
    pub capacity: usize,
}

impl Instance {
    pub fn new(galaxies: Vec<SpherePoint>, region: RegionRect, radius: f64, capacity: usize) -> Result<Self> {
        if galaxies.is_empty() {
            return Err(Error::InvalidInput("instance has no galaxies".into()));
        }
        if capacity == 0 {
            return Err(Error::InvalidInput("capacity must be at least 1".into()));
        }
        if !(radius > 0.0 && radius < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidInput(format!("radius {radius} outside (0, pi/2)")));
        }
        if let Some(i) = galaxies.iter().position(|g| !region.contains_point(*g)) {
            return Err(Error::InvalidInput(format!("galaxy {i} lies outside the region")));
        }
        Ok(Self {
            galaxies,
            region,
            radius,
            capacity,
        })
    }

    pub fn len(&self) -> usize {
        self.galaxies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.galaxies.is_empty()
    }

    /// Discs needed just to hold `coverage` of the galaxies.
    pub fn capacity_lower_bound(&self, coverage: f64) -> usize {
        ((coverage * self.len() as f64 / self.capacity as f64).ceil() as usize).max(1)
    }
}

/// Result of reading a catalog: the in-region instance and the number of
/// rows that fell outside the region.
#[derive(Clone, Debug)]
pub struct CatalogLoad {
    pub instance: Instance,
    pub out_of_region: usize,
}

/// Reads `ra_deg,dec_deg` rows. Lines starting with `#` are comments; a first
/// row whose fields are all non-numeric is taken as a header.
pub fn read_catalog<R: Read>(input: R, region: RegionRect, radius: f64, capacity: usize) -> Result<CatalogLoad> {
    let (points, out_of_region) = read_points(input, Some(&region))?;
    if points.is_empty() {
        return Err(Error::EmptyCatalog(if out_of_region > 0 {
            format!("all {out_of_region} rows lie outside the region")
        } else {
            "no data rows".into()
        }));
    }
    Ok(CatalogLoad {
        instance: Instance::new(points, region, radius, capacity)?,
        out_of_region,
    })
}

/// Reads every catalog point, optionally filtering by region. Returns the kept
/// points and the count of filtered rows.
pub fn read_points<R: Read>(input: R, region: Option<&RegionRect>) -> Result<(Vec<SpherePoint>, usize)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut points = Vec::new();
    let mut out = 0usize;
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| Error::CatalogParse {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if first {
            first = false;
            if record.iter().all(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        if record.len() < 2 {
            return Err(Error::CatalogParse {
                line,
                message: "expected ra_deg,dec_deg".into(),
            });
        }
        let parse = |i: usize| {
            record[i].parse::<f64>().map_err(|e| Error::CatalogParse {
                line,
                message: format!("field '{}': {e}", &record[i]),
            })
        };
        let (ra, dec) = (parse(0)?, parse(1)?);
        let p = SpherePoint::from_ra_dec(ra, dec).map_err(|e| Error::CatalogParse {
            line,
            message: e.to_string(),
        })?;
        match region {
            Some(r) if !r.contains_point(p) => out += 1,
            _ => points.push(p),
        }
    }
    Ok((points, out))
}

/// Writes points as `ra_deg,dec_deg` rows with a header. Values use the
/// shortest representation that round-trips.
pub fn write_catalog<W: Write>(points: &[SpherePoint], mut out: W) -> Result<()> {
    writeln!(out, "ra_deg,dec_deg")?;
    for p in points {
        let (ra, dec) = p.to_ra_dec();
        writeln!(out, "{ra},{dec}")?;
    }
    Ok(())
}

/// Keeps exactly `round(fraction * n)` galaxies chosen without replacement
/// and scales the capacity by the same fraction.
pub fn subsample(inst: &Instance, fraction: f64, seed: u64) -> Result<Instance> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidInput(format!("fraction {fraction} outside (0, 1]")));
    }
    let n = inst.len();
    let keep = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, n, keep).into_vec();
    picked.sort_unstable();
    let galaxies = picked.into_iter().map(|i| inst.galaxies[i]).collect();
    let capacity = ((inst.capacity as f64 * fraction).round() as usize).max(1);
    Instance::new(galaxies, inst.region, inst.radius, capacity)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub region: RegionRect,
    pub target_count: usize,
    /// Share of points drawn from the Gaussian bumps.
    pub cluster_fraction: f64,
    pub cluster_count: usize,
    /// Per-axis standard deviation of each bump, radians.
    pub cluster_sigma: f64,
    pub seed: u64,
}

impl GeneratorConfig {
    /// Default clustering profile: 40% of points in roughly `n/500` bumps of
    /// width one disc radius.
    pub fn with_defaults(region: RegionRect, target_count: usize, radius: f64, seed: u64) -> Self {
        Self {
            region,
            target_count,
            cluster_fraction: 0.4,
            cluster_count: ((target_count as f64 / 500.0).round() as usize).max(1),
            cluster_sigma: radius,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.target_count == 0 {
            return Err(Error::InvalidInput("target_count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.cluster_fraction) {
            return Err(Error::InvalidInput("cluster_fraction outside [0, 1]".into()));
        }
        if !(self.cluster_sigma > 0.0) {
            return Err(Error::InvalidInput("cluster_sigma must be positive".into()));
        }
        if self.cluster_fraction > 0.0 && self.cluster_count == 0 {
            return Err(Error::InvalidInput("clustered points need cluster_count >= 1".into()));
        }
        if !(self.region.area() > 0.0) {
            return Err(Error::InvalidInput("region has zero area".into()));
        }
        Ok(())
    }
}

/// Area-uniform point in the region: uniform in `(ra, sin dec)`.
pub fn sample_uniform<R: Rng>(region: &RegionRect, rng: &mut R) -> SpherePoint {
    let ra = rng.random_range(region.ra_min..region.ra_max);
    let (s1, s2) = (region.dec_min.to_radians().sin(), region.dec_max.to_radians().sin());
    let z: f64 = rng.random_range(s1..s2);
    let dec = z.asin().to_degrees().clamp(region.dec_min, region.dec_max);
    SpherePoint::from_ra_dec(ra, dec).expect("dec clamped into range")
}

/// Tangent-plane Gaussian offset around `center` with per-axis deviation
/// `sigma`, mapped back onto the sphere along a great circle.
fn sample_bump<R: Rng>(center: SpherePoint, sigma: f64, rng: &mut R) -> SpherePoint {
    let gx: f64 = rng.sample(StandardNormal);
    let gy: f64 = rng.sample(StandardNormal);
    let (east, north) = center.tangent_basis();
    let len = gx.hypot(gy);
    if len == 0.0 {
        return center;
    }
    let dir = geometry::add(geometry::scale(east, gx / len), geometry::scale(north, gy / len));
    geometry::step_unchecked(center, dir, sigma * len)
}

pub fn generate(config: &GeneratorConfig, radius: f64, capacity: usize) -> Result<Instance> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.target_count;
    let clustered = ((config.cluster_fraction * n as f64).round() as usize).min(n);
    let uniform = n - clustered;
    let region = &config.region;
    let centers: Vec<SpherePoint> = if clustered > 0 {
        (0..config.cluster_count)
            .map(|_| sample_uniform(region, &mut rng))
            .collect()
    } else {
        Vec::new()
    };
    let mut galaxies = Vec::with_capacity(n);
    for _ in 0..uniform {
        galaxies.push(sample_uniform(region, &mut rng));
    }
    for _ in 0..clustered {
        let c = centers[rng.random_range(0..centers.len())];
        let mut attempts = 0;
        let p = loop {
            let p = sample_bump(c, config.cluster_sigma, &mut rng);
            if region.contains_point(p) {
                break p;
            }
            attempts += 1;
            if attempts > 10_000 {
                // A bump almost entirely outside the region; fall back to
                // the uniform law rather than spin.
                break sample_uniform(region, &mut rng);
            }
        };
        galaxies.push(p);
    }
    Instance::new(galaxies, *region, radius, capacity)
}
