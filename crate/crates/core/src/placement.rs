//! Per-disc relocation under the true (unrounded) penalty.
//!
//! Each disc only sees the galaxies the relaxed assignment gave it, so discs
//! move independently. Descent follows a halving step schedule: walk along
//! the negative gradient in steps of `alpha` while each step strictly
//! improves, recompute the gradient, halve `alpha`, and stop once `alpha`
//! drops below `alpha_final`.

use serde::{Deserialize, Serialize};

use crate::cover::{Cover, Provenance};
use crate::error::{Error, Result};
use crate::geometry::{angular_distance, norm, scale, step_unchecked, Disc, SpherePoint};
use crate::par::{self, Exec};
use crate::relaxation::{PenaltyModel, RelaxedAssignment};

/// Safety cap on steps at a single scale; a full crossing of a two-radius
/// neighborhood at the coarsest default step takes about 125.
const MAX_STEPS_PER_SCALE: usize = 100_000;

/// Closer than this to the antipode the descent direction is meaningless.
const ANTIPODAL_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MoveSchedule {
    pub alpha_init: f64,
    pub alpha_final: f64,
}

impl MoveSchedule {
    pub fn new(alpha_init: f64, alpha_final: f64) -> Result<Self> {
        if !(alpha_final > 0.0 && alpha_final <= alpha_init) {
            return Err(Error::InvalidInput(format!(
                "step schedule needs 0 < alpha_final <= alpha_init, got {alpha_final} and {alpha_init}"
            )));
        }
        Ok(Self {
            alpha_init,
            alpha_final,
        })
    }

    /// 16/1000 of a radius down to 2/1000 of a radius.
    pub fn for_radius(radius: f64) -> Self {
        Self {
            alpha_init: 0.016 * radius,
            alpha_final: 0.002 * radius,
        }
    }
}

/// `sum p(d(center, g))` over the assigned galaxies.
pub fn disc_objective(center: SpherePoint, assigned: &[SpherePoint], model: &PenaltyModel) -> f64 {
    assigned
        .iter()
        .map(|g| model.penalty(angular_distance(center, *g)))
        .sum()
}

/// Gradient of [`disc_objective`] in the tangent plane at `center`.
pub fn gradient(center: SpherePoint, assigned: &[SpherePoint], model: &PenaltyModel) -> Result<[f64; 3]> {
    let mut grad = [0.0; 3];
    for g in assigned {
        let d = angular_distance(center, *g);
        if d == 0.0 {
            // p'(0) = 0
            continue;
        }
        if d > std::f64::consts::PI - ANTIPODAL_TOLERANCE {
            return Err(Error::Antipodal);
        }
        let toward = center.direction_to(*g).ok_or(Error::Antipodal)?;
        // moving toward g shrinks d at unit rate
        let k = -model.penalty_slope(d);
        for i in 0..3 {
            grad[i] += k * toward[i];
        }
    }
    Ok(grad)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveOutcome {
    pub disc: Disc,
    pub before: f64,
    pub after: f64,
    pub steps: usize,
}

/// Runs the halving schedule from `disc`.
pub fn move_disc(
    disc: Disc,
    assigned: &[SpherePoint],
    model: &PenaltyModel,
    sched: &MoveSchedule,
) -> Result<MoveOutcome> {
    let before = disc_objective(disc.center, assigned, model);
    let mut center = disc.center;
    let mut value = before;
    let mut steps = 0;
    let mut alpha = sched.alpha_init;
    if !assigned.is_empty() {
        while alpha >= sched.alpha_final {
            let grad = gradient(center, assigned, model)?;
            let gn = norm(grad);
            if gn == 0.0 {
                break;
            }
            // carry the direction along the great circle as we walk
            let mut dir = scale(grad, -1.0 / gn);
            for _ in 0..MAX_STEPS_PER_SCALE {
                let next = step_unchecked(center, dir, alpha);
                let v = disc_objective(next, assigned, model);
                if !(v < value) {
                    break;
                }
                let (s, c) = alpha.sin_cos();
                let p = center.as_array();
                dir = [0, 1, 2].map(|i| dir[i] * c - p[i] * s);
                center = next;
                value = v;
                steps += 1;
            }
            alpha *= 0.5;
        }
    }
    debug_assert!(value <= before);
    Ok(MoveOutcome {
        disc: Disc {
            center,
            radius: disc.radius,
        },
        before,
        after: value,
        steps,
    })
}

/// Totals over one [`move_all`] call.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MoveStats {
    /// Discs that had at least one assignee.
    pub moved: usize,
    pub steps: usize,
    /// Calls where the objective went up. Always zero; kept as an audit.
    pub violations: usize,
    pub objective_before: f64,
    pub objective_after: f64,
}

pub fn move_all(
    cover: &Cover,
    relaxed: &RelaxedAssignment,
    galaxies: &[SpherePoint],
    model: &PenaltyModel,
    sched: &MoveSchedule,
) -> Result<(Cover, MoveStats)> {
    move_all_with(cover, relaxed, galaxies, model, sched, Exec::default())
}

/// Moves every disc with at least one relaxed assignee; others stay put.
pub fn move_all_with(
    cover: &Cover,
    relaxed: &RelaxedAssignment,
    galaxies: &[SpherePoint],
    model: &PenaltyModel,
    sched: &MoveSchedule,
    exec: Exec,
) -> Result<(Cover, MoveStats)> {
    let groups = relaxed.by_disc(cover.len());
    let outcomes = par::map_range(exec, cover.len(), |d| {
        let pts: Vec<SpherePoint> = groups[d].iter().map(|&g| galaxies[g]).collect();
        if pts.is_empty() {
            return Ok(None);
        }
        move_disc(cover.discs[d], &pts, model, sched).map(Some)
    });
    let mut stats = MoveStats::default();
    let mut discs = Vec::with_capacity(cover.len());
    for (d, outcome) in outcomes.into_iter().enumerate() {
        match outcome? {
            Some(o) => {
                stats.moved += 1;
                stats.steps += o.steps;
                stats.violations += usize::from(o.after > o.before);
                stats.objective_before += o.before;
                stats.objective_after += o.after;
                discs.push(o.disc);
            }
            None => discs.push(cover.discs[d]),
        }
    }
    Ok((
        Cover {
            discs,
            provenance: Provenance::Improved,
            iteration: cover.iteration + 1,
        },
        stats,
    ))
}
