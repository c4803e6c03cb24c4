//! The improve loop and the outer search over disc counts.
//!
//! A probe at disc count `k` seeds a near-uniform cover, prunes it to `k`
//! discs by legal assignment count, and (unless running the uniform
//! baseline) improves it: relaxed assignment, independent disc moves, legal
//! assignment, repeated until enough galaxies are covered or the loop gets
//! stuck twice in a row. The outer loop brackets the smallest succeeding
//! count between a failing `L` and a succeeding `U` and bisects.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::cover::{cover_records, prune_cover, uniform_cover, Cover, DiscRecord};
use crate::error::{Error, Result};
use crate::geometry::SpherePoint;
use crate::instance::Instance;
use crate::par::{self, Exec};
use crate::placement::{move_all_with, MoveSchedule};
use crate::relaxation::{solve_legal_with, LegalAssignment, PenaltyModel, RelaxedProblem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Allowed uncovered fraction.
    pub epsilon: f64,
    /// Relative gap shrink below which an iteration counts as stuck.
    pub stuck_threshold: f64,
    /// Radius reduction used while polishing.
    pub shrink: f64,
    pub l_init_factor: f64,
    pub u_init_factor: f64,
    pub adjust_step: f64,
    pub halt_disc_gap: usize,
    pub halt_rel_size: f64,
    pub halt_rel_coverage: f64,
    pub max_inner_iterations: usize,
    /// Largest `U` factor tried before declaring the instance infeasible.
    pub u_ceiling: f64,
    /// Step schedule in units of the disc radius.
    pub alpha_init_radii: f64,
    pub alpha_final_radii: f64,
    pub outside_multiplier: f64,
    pub integer_scale: i64,
    pub seed: u64,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.02,
            stuck_threshold: 0.05,
            shrink: 0.02,
            l_init_factor: 1.05,
            u_init_factor: 1.15,
            adjust_step: 0.05,
            halt_disc_gap: 1,
            halt_rel_size: 0.005,
            halt_rel_coverage: 0.005,
            max_inner_iterations: 200,
            u_ceiling: 2.0,
            alpha_init_radii: 0.016,
            alpha_final_radii: 0.002,
            outside_multiplier: crate::relaxation::OUTSIDE_MULTIPLIER,
            integer_scale: crate::relaxation::INTEGER_SCALE,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidInput(m.into()));
        if !(0.0..1.0).contains(&self.epsilon) {
            return bad("epsilon must lie in [0, 1)");
        }
        for (name, v) in [
            ("stuck_threshold", self.stuck_threshold),
            ("shrink", self.shrink),
            ("adjust_step", self.adjust_step),
            ("halt_rel_size", self.halt_rel_size),
            ("halt_rel_coverage", self.halt_rel_coverage),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(self.l_init_factor > 0.0 && self.l_init_factor < self.u_init_factor) {
            return bad("need 0 < l_init_factor < u_init_factor");
        }
        if self.u_ceiling < self.u_init_factor {
            return bad("u_ceiling below u_init_factor");
        }
        if self.max_inner_iterations == 0 {
            return bad("max_inner_iterations must be at least 1");
        }
        if !(self.outside_multiplier > 1.0) || self.integer_scale < 1 {
            return bad("penalty parameters out of range");
        }
        MoveSchedule::new(self.alpha_init_radii, self.alpha_final_radii)?;
        Ok(())
    }

    pub fn model(&self, radius: f64) -> PenaltyModel {
        PenaltyModel::with_params(radius, self.outside_multiplier, self.integer_scale)
    }

    pub fn schedule(&self, radius: f64) -> MoveSchedule {
        MoveSchedule {
            alpha_init: self.alpha_init_radii * radius,
            alpha_final: self.alpha_final_radii * radius,
        }
    }

    /// Galaxies that must be legally covered: `n` minus at most `eps n`.
    pub fn target_covered(&self, n: usize) -> usize {
        n - ((self.epsilon * n as f64) + 1e-9).floor() as usize
    }
}

/// Wall time per phase, in seconds. Kept out of the JSON report so that
/// reports are reproducible byte for byte.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimings {
    /// Uniform seed plus prune.
    pub seed: f64,
    /// Equivalence classes and flow network.
    pub build: f64,
    /// Min-cost flow and decode.
    pub flow: f64,
    #[serde(rename = "move")]
    pub move_: f64,
    pub legal: f64,
    pub total: f64,
}

impl PhaseTimings {
    fn absorb(&mut self, other: &PhaseTimings) {
        self.seed += other.seed;
        self.build += other.build;
        self.flow += other.flow;
        self.move_ += other.move_;
        self.legal += other.legal;
    }

    pub fn phase_sum(&self) -> f64 {
        self.seed + self.build + self.flow + self.move_ + self.legal
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Standard,
    Polish,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mode: Mode,
    pub covered: usize,
    /// Rounded relaxed cost (shifted, integer units).
    pub relaxed_cost: i64,
    pub relaxed_assigned: usize,
    pub classes: usize,
    pub edges: usize,
    pub stuck: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Coverage target reached.
    Reached,
    /// Stuck twice in a row.
    Converged,
    IterationCap,
}

#[derive(Clone, Debug)]
pub struct InnerOutcome {
    /// Best-covering cover seen (the last one on success).
    pub cover: Cover,
    pub legal: LegalAssignment,
    pub success: bool,
    pub termination: Termination,
    pub seed_covered: usize,
    pub trace: Vec<IterationRecord>,
    pub move_calls: usize,
    pub move_violations: usize,
    pub timings: PhaseTimings,
    /// Disc centers of the seed and after every iteration.
    pub history: Vec<Vec<SpherePoint>>,
}

/// Improves `seed` until `target_covered` galaxies are legally covered or
/// the loop converges.
pub fn inner_loop(inst: &Instance, seed: Cover, cfg: &SolverConfig) -> Result<InnerOutcome> {
    let exec = cfg.exec;
    let target = cfg.target_covered(inst.len());
    let model = cfg.model(inst.radius);
    let polish_model = model.shrunk(cfg.shrink);
    let sched = cfg.schedule(inst.radius);
    let mut timings = PhaseTimings::default();

    let t = Instant::now();
    let legal = solve_legal_with(inst, &seed, exec);
    timings.legal += secs(t.elapsed());
    let seed_covered = legal.count;
    let mut best = (seed.clone(), legal.clone());
    let mut out = InnerOutcome {
        cover: seed.clone(),
        legal,
        success: seed_covered >= target,
        termination: Termination::Reached,
        seed_covered,
        trace: Vec::new(),
        move_calls: 0,
        move_violations: 0,
        timings,
        history: vec![seed.centers()],
    };
    if out.success {
        return Ok(out);
    }

    let mut cover = seed;
    let mut mode = Mode::Standard;
    let mut gap = target - seed_covered;
    let mut stuck_run = 0;
    out.termination = Termination::IterationCap;
    for iteration in 1..=cfg.max_inner_iterations {
        let (shrink, step_model) = match mode {
            Mode::Standard => (0.0, &model),
            Mode::Polish => (cfg.shrink, &polish_model),
        };
        let t = Instant::now();
        let problem = RelaxedProblem::build(inst, &cover, &model, shrink, exec)?;
        out.timings.build += secs(t.elapsed());
        let t = Instant::now();
        let relaxed = problem.solve(inst, &cover)?;
        out.timings.flow += secs(t.elapsed());
        let t = Instant::now();
        let (moved, stats) = move_all_with(&cover, &relaxed, &inst.galaxies, step_model, &sched, exec)?;
        out.timings.move_ += secs(t.elapsed());
        out.move_calls += stats.moved;
        out.move_violations += stats.violations;
        assert_eq!(stats.violations, 0, "a disc move increased its objective");
        cover = moved;
        out.history.push(cover.centers());
        let t = Instant::now();
        let legal = solve_legal_with(inst, &cover, exec);
        out.timings.legal += secs(t.elapsed());

        let covered = legal.count;
        let new_gap = target.saturating_sub(covered);
        let stuck = covered < target && (gap as f64 - new_gap as f64) < cfg.stuck_threshold * gap as f64;
        out.trace.push(IterationRecord {
            iteration,
            mode,
            covered,
            relaxed_cost: relaxed.total_cost,
            relaxed_assigned: relaxed.assigned_count,
            classes: relaxed.class_count,
            edges: relaxed.edge_count,
            stuck,
        });
        if covered > best.1.count {
            best = (cover.clone(), legal.clone());
        }
        if covered >= target {
            out.success = true;
            out.termination = Termination::Reached;
            best = (cover.clone(), legal);
            break;
        }
        gap = new_gap;
        if stuck {
            stuck_run += 1;
            if stuck_run >= 2 {
                out.termination = Termination::Converged;
                break;
            }
            mode = match mode {
                Mode::Standard => Mode::Polish,
                Mode::Polish => Mode::Standard,
            };
        } else {
            stuck_run = 0;
        }
    }
    out.cover = best.0;
    out.legal = best.1;
    Ok(out)
}

/// What a probe does after seeding and pruning.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    /// Run the improve loop.
    Improve,
    /// Keep the pruned uniform cover as is.
    Uniform,
}

/// Discs in the uniform cover that gets pruned down to `count`: enough that
/// the part over the region itself holds about `count` discs.
pub fn seed_count(inst: &Instance, count: usize) -> usize {
    let grown = inst.region.dilated(inst.radius).area();
    ((count as f64 * grown / inst.region.area()).ceil() as usize).max(count)
}

/// Seeds, prunes, and (for [`Strategy::Improve`]) improves a cover with
/// `count` discs.
pub fn probe(inst: &Instance, count: usize, cfg: &SolverConfig, strategy: Strategy) -> Result<InnerOutcome> {
    let t = Instant::now();
    let global = uniform_cover(&inst.region, seed_count(inst, count), inst.radius);
    let seed = prune_cover(&global, inst, count);
    let seed_time = secs(t.elapsed());
    let mut out = match strategy {
        Strategy::Improve => inner_loop(inst, seed, cfg)?,
        Strategy::Uniform => seed_only(inst, seed, cfg),
    };
    out.timings.seed += seed_time;
    Ok(out)
}

fn seed_only(inst: &Instance, seed: Cover, cfg: &SolverConfig) -> InnerOutcome {
    let t = Instant::now();
    let legal = solve_legal_with(inst, &seed, cfg.exec);
    let success = legal.count >= cfg.target_covered(inst.len());
    InnerOutcome {
        seed_covered: legal.count,
        history: vec![seed.centers()],
        cover: seed,
        legal,
        success,
        termination: if success {
            Termination::Reached
        } else {
            Termination::Converged
        },
        trace: Vec::new(),
        move_calls: 0,
        move_violations: 0,
        timings: PhaseTimings {
            legal: secs(t.elapsed()),
            ..PhaseTimings::default()
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchPhase {
    Initial,
    LowerL,
    RaiseU,
    Bisect,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRecord {
    pub phase: SearchPhase,
    pub discs: usize,
    pub success: bool,
    pub seed_covered: usize,
    pub covered: usize,
    pub iterations: usize,
    pub termination: Termination,
    pub move_calls: usize,
    pub move_violations: usize,
    pub trace: Vec<IterationRecord>,
}

/// Bracket after each outer step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub phase: SearchPhase,
    pub l_discs: usize,
    pub u_discs: usize,
    pub l_covered: Option<usize>,
    pub u_covered: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub strategy: Strategy,
    pub galaxies: usize,
    pub capacity: usize,
    pub radius_deg: f64,
    pub epsilon: f64,
    pub target_covered: usize,
    /// `ceil((1 - eps) n / c)`.
    pub lower_bound: usize,
    pub disc_count: usize,
    pub covered: usize,
    pub coverage_fraction: f64,
    pub normalized_size: f64,
    /// Improve iterations spent on the returned cover.
    pub iterations: usize,
    pub move_calls: usize,
    pub move_violations: usize,
    pub config: SolverConfig,
    pub cover: Vec<DiscRecord>,
    /// Disc per galaxy in the final legal assignment.
    pub assignment: Vec<Option<usize>>,
    pub probes: Vec<ProbeRecord>,
    pub outer: Vec<OuterRecord>,
    #[serde(skip)]
    pub timings: PhaseTimings,
    #[serde(skip)]
    pub final_cover: Option<Cover>,
    /// Disc centers per iteration of the returned probe.
    #[serde(skip)]
    pub trajectory: Vec<Vec<SpherePoint>>,
}

impl RunReport {
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, self)?;
        Ok(())
    }

    /// Improve iterations summed over all probes.
    pub fn total_iterations(&self) -> usize {
        self.probes.iter().map(|p| p.iterations).sum()
    }

    /// One row per improve iteration across all probes.
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "probe",
            "discs",
            "iteration",
            "mode",
            "stuck",
            "covered",
            "relaxed_cost",
            "relaxed_assigned",
            "classes",
            "edges",
        ])
        .map_err(csv_err)?;
        for (k, p) in self.probes.iter().enumerate() {
            for it in &p.trace {
                let mode = match it.mode {
                    Mode::Standard => "standard",
                    Mode::Polish => "polish",
                };
                w.write_record([
                    k.to_string(),
                    p.discs.to_string(),
                    it.iteration.to_string(),
                    mode.to_string(),
                    it.stuck.to_string(),
                    it.covered.to_string(),
                    it.relaxed_cost.to_string(),
                    it.relaxed_assigned.to_string(),
                    it.classes.to_string(),
                    it.edges.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Runs the full search with the improve loop.
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<RunReport> {
    search(inst, cfg, Strategy::Improve)
}

/// Same search over pruned uniform covers only.
pub fn baseline(inst: &Instance, cfg: &SolverConfig) -> Result<RunReport> {
    search(inst, cfg, Strategy::Uniform)
}

struct Search<'a> {
    inst: &'a Instance,
    cfg: &'a SolverConfig,
    strategy: Strategy,
    memo: BTreeMap<usize, InnerOutcome>,
    probes: Vec<ProbeRecord>,
    timings: PhaseTimings,
}

impl Search<'_> {
    fn record(&mut self, phase: SearchPhase, count: usize, out: InnerOutcome) {
        self.timings.absorb(&out.timings);
        self.probes.push(ProbeRecord {
            phase,
            discs: count,
            success: out.success,
            seed_covered: out.seed_covered,
            covered: out.legal.count,
            iterations: out.trace.len(),
            termination: out.termination,
            move_calls: out.move_calls,
            move_violations: out.move_violations,
            trace: out.trace.clone(),
        });
        self.memo.insert(count, out);
    }

    fn run(&mut self, phase: SearchPhase, count: usize) -> Result<bool> {
        if let Some(out) = self.memo.get(&count) {
            return Ok(out.success);
        }
        let out = probe(self.inst, count, self.cfg, self.strategy)?;
        let ok = out.success;
        self.record(phase, count, out);
        Ok(ok)
    }

    fn covered(&self, count: usize) -> Option<usize> {
        self.memo.get(&count).map(|o| o.legal.count)
    }
}

pub fn search(inst: &Instance, cfg: &SolverConfig, strategy: Strategy) -> Result<RunReport> {
    cfg.validate()?;
    let start = Instant::now();
    let n = inst.len();
    let per_disc = n as f64 / inst.capacity as f64;
    let floor = inst.capacity_lower_bound(1.0 - cfg.epsilon);
    let at = |factor: f64| ((factor * per_disc).ceil() as usize).max(floor);
    let mut s = Search {
        inst,
        cfg,
        strategy,
        memo: BTreeMap::new(),
        probes: Vec::new(),
        timings: PhaseTimings::default(),
    };
    let mut outer = Vec::new();
    let snapshot = |s: &Search, phase, l: usize, u: usize| OuterRecord {
        phase,
        l_discs: l,
        u_discs: u,
        l_covered: s.covered(l),
        u_covered: s.covered(u),
    };

    let (mut l_factor, mut u_factor) = (cfg.l_init_factor, cfg.u_init_factor);
    let mut l = at(l_factor);
    let mut u = at(u_factor).max(l + 1);
    // the two opening probes are independent
    let (pl, pu) = par::join(
        cfg.exec,
        || probe(inst, l, cfg, strategy),
        || probe(inst, u, cfg, strategy),
    );
    let (pl, pu) = (pl?, pu?);
    let (mut l_ok, mut u_ok) = (pl.success, pu.success);
    s.record(SearchPhase::Initial, l, pl);
    s.record(SearchPhase::Initial, u, pu);
    outer.push(snapshot(&s, SearchPhase::Initial, l, u));

    // move L down while it succeeds
    while l_ok {
        u = l;
        u_ok = true;
        if l == floor {
            break;
        }
        let prev = l;
        while at(l_factor) >= prev && l_factor > 0.0 {
            l_factor -= cfg.adjust_step;
        }
        l = at(l_factor).min(prev - 1);
        l_ok = s.run(SearchPhase::LowerL, l)?;
        outer.push(snapshot(&s, SearchPhase::LowerL, l, u));
    }
    // move U up while it fails
    while !u_ok {
        l = u;
        let prev = u;
        while at(u_factor) <= prev {
            u_factor += cfg.adjust_step;
        }
        if u_factor > cfg.u_ceiling + 1e-12 {
            let best = s.memo.values().map(|o| o.legal.count).max().unwrap_or(0);
            return Err(Error::Infeasible {
                max_discs: prev,
                target: cfg.target_covered(n),
                best_covered: best,
            });
        }
        u = at(u_factor);
        u_ok = s.run(SearchPhase::RaiseU, u)?;
        outer.push(snapshot(&s, SearchPhase::RaiseU, l, u));
    }

    // bisect while all three clauses hold; l == u means L hit the floor
    if l < u {
        loop {
            let (lc, uc) = (s.covered(l).unwrap_or(0), s.covered(u).unwrap_or(0));
            let keep_going = u > l + cfg.halt_disc_gap
                && u as f64 >= (1.0 + cfg.halt_rel_size) * l as f64
                && uc as f64 >= (1.0 + cfg.halt_rel_coverage) * lc as f64;
            if !keep_going || u <= l + 1 {
                break;
            }
            let mid = l + (u - l) / 2;
            if s.run(SearchPhase::Bisect, mid)? {
                u = mid;
            } else {
                l = mid;
            }
            outer.push(snapshot(&s, SearchPhase::Bisect, l, u));
        }
    }

    let best = s.memo.remove(&u).expect("U was probed");
    let mut timings = s.timings;
    timings.total = secs(start.elapsed());
    let iterations = best.trace.len();
    let lower_bound = floor;
    let (move_calls, move_violations) = s
        .probes
        .iter()
        .fold((0, 0), |(c, v), p| (c + p.move_calls, v + p.move_violations));
    Ok(RunReport {
        strategy,
        galaxies: n,
        capacity: inst.capacity,
        radius_deg: inst.radius.to_degrees(),
        epsilon: cfg.epsilon,
        target_covered: cfg.target_covered(n),
        lower_bound,
        disc_count: best.cover.len(),
        covered: best.legal.count,
        coverage_fraction: best.legal.count as f64 / n as f64,
        normalized_size: best.cover.len() as f64 / lower_bound as f64,
        iterations,
        move_calls,
        move_violations,
        config: cfg.clone(),
        cover: cover_records(&best.cover),
        assignment: best.legal.assigned.clone(),
        probes: s.probes,
        outer,
        timings,
        final_cover: Some(best.cover),
        trajectory: best.history,
    })
}
