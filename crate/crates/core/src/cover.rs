//! Seed covers and cover bookkeeping.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angular_distance, Disc, RegionRect, SpherePoint};
use crate::instance::Instance;
use crate::relaxation::solve_legal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Uniform,
    Improved,
}

/// An ordered set of equal-radius discs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cover {
    pub discs: Vec<Disc>,
    pub provenance: Provenance,
    /// Improvement iterations applied since the seed.
    pub iteration: usize,
}

impl Cover {
    pub fn new(discs: Vec<Disc>) -> Result<Self> {
        let Some(first) = discs.first() else {
            return Err(Error::InvalidInput("a cover needs at least one disc".into()));
        };
        if discs.iter().any(|d| d.radius != first.radius) {
            return Err(Error::InvalidInput("cover discs must share one radius".into()));
        }
        Ok(Self {
            discs,
            provenance: Provenance::Uniform,
            iteration: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.discs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.discs.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.discs.first().map(|d| d.radius).unwrap_or(0.0)
    }

    pub fn centers(&self) -> Vec<SpherePoint> {
        self.discs.iter().map(|d| d.center).collect()
    }
}

/// One entry of the cover JSON file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscRecord {
    pub ra_deg: f64,
    pub dec_deg: f64,
    pub radius_deg: f64,
}

pub fn cover_records(cover: &Cover) -> Vec<DiscRecord> {
    cover
        .discs
        .iter()
        .map(|d| {
            let (ra, dec) = d.center.to_ra_dec();
            DiscRecord {
                ra_deg: ra,
                dec_deg: dec,
                radius_deg: d.radius.to_degrees(),
            }
        })
        .collect()
}

/// Writes `[{"ra_deg":..,"dec_deg":..,"radius_deg":..}, ...]`.
pub fn write_cover_json<W: Write>(cover: &Cover, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, &cover_records(cover))?;
    Ok(())
}

pub fn read_cover_json<R: Read>(input: R) -> Result<Cover> {
    let records: Vec<DiscRecord> = serde_json::from_reader(input)?;
    let discs = records
        .iter()
        .map(|r| {
            Disc::new(
                SpherePoint::from_ra_dec(r.ra_deg, r.dec_deg)?,
                r.radius_deg.to_radians(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Cover::new(discs)
}

const GOLDEN_ANGLE: f64 = 2.399_963_229_728_653; // pi (3 - sqrt 5)

/// Spherical Fibonacci lattice point `i` of `n`.
fn fibonacci_point(i: usize, n: usize) -> SpherePoint {
    let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
    let rho = (1.0 - z * z).max(0.0).sqrt();
    let (s, c) = (GOLDEN_ANGLE * i as f64).sin_cos();
    SpherePoint::from_unit_unchecked([rho * c, rho * s, z])
}

/// Lattice points of an `n`-point global lattice falling inside `region`.
fn lattice_in(region: &RegionRect, n: usize) -> Vec<SpherePoint> {
    let z_lo = region.dec_min.to_radians().sin();
    let z_hi = region.dec_max.to_radians().sin();
    // z_i = 1 - (2i + 1)/n is decreasing in i
    let first = (((1.0 - z_hi) * n as f64 - 1.0) / 2.0).floor().max(0.0) as usize;
    let last = ((((1.0 - z_lo) * n as f64 - 1.0) / 2.0).ceil().max(0.0) as usize).min(n - 1);
    (first..=last)
        .map(|i| fibonacci_point(i, n))
        .filter(|p| region.contains_point(*p))
        .collect()
}

/// `count` discs on a near-uniform lattice clipped to the region grown by
/// one radius. The global lattice size is the smallest that puts at least
/// `count` points in the grown region; surplus points farthest outside the
/// original region are dropped.
pub fn uniform_cover(region: &RegionRect, count: usize, radius: f64) -> Cover {
    let count = count.max(1);
    let disc = |c| Disc::new(c, radius).expect("radius validated by caller");
    if count == 1 {
        return Cover::new(vec![disc(region.centroid())]).expect("non-empty");
    }
    let grown = region.dilated(radius);
    let inside = |n: usize| lattice_in(&grown, n).len();
    let guess = ((count as f64 * 4.0 * std::f64::consts::PI / grown.area()).ceil() as usize).max(count);
    // bracket [lo, hi] with inside(lo) < count <= inside(hi)
    let mut hi = guess;
    while inside(hi) < count {
        hi = hi + hi / 4 + 1;
    }
    let mut lo = (guess / 2).max(1);
    while lo > 1 && inside(lo) >= count {
        lo /= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if inside(mid) >= count {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut points = lattice_in(&grown, hi);
    if points.len() > count {
        let c = region.centroid();
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            let key = |i: usize| (region.outside_margin(points[i]), angular_distance(c, points[i]));
            let (ka, kb) = (key(a), key(b));
            kb.0.total_cmp(&ka.0).then(kb.1.total_cmp(&ka.1)).then(a.cmp(&b))
        });
        let mut drop = order[..points.len() - count].to_vec();
        drop.sort_unstable();
        for i in drop.into_iter().rev() {
            points.remove(i);
        }
    }
    Cover::new(points.into_iter().map(disc).collect()).expect("non-empty")
}

/// Keeps the `target_count` discs with the most legally assigned galaxies
/// (ties by lower index), preserving their order.
pub fn prune_cover(global: &Cover, inst: &Instance, target_count: usize) -> Cover {
    if target_count >= global.len() {
        return global.clone();
    }
    let counts = solve_legal(inst, global).per_disc(global.len());
    let keep = top_by_count(&counts, target_count.max(1));
    Cover {
        discs: keep.into_iter().map(|i| global.discs[i]).collect(),
        provenance: global.provenance,
        iteration: global.iteration,
    }
}

pub(crate) fn top_by_count(counts: &[usize], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| counts[b].cmp(&counts[a]).then(a.cmp(&b)));
    order.truncate(k);
    order.sort_unstable();
    order
}

/// Angular distance from each center to its nearest neighbor.
pub fn nearest_neighbor_spacing(centers: &[SpherePoint]) -> Vec<f64> {
    centers
        .iter()
        .enumerate()
        .map(|(i, a)| {
            centers
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, b)| angular_distance(*a, *b))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}
