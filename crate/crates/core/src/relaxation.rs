//! The relaxed assignment problem and the legal assignment problem, both
//! reduced to network flow.
//!
//! In the relaxed problem a galaxy may go to any of its (at most three)
//! nearest discs within two radii, priced by a penalty that is mild inside a
//! disc and steep outside it. Penalties are rounded onto a short ladder so
//! galaxies collapse into few equivalence classes; each class is one flow
//! node. The legal problem only allows true containment and maximizes the
//! number of assigned galaxies.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::cover::Cover;
use crate::error::{Error, Result};
use crate::geometry::{angular_distance, SpherePoint};
use crate::instance::Instance;
use crate::netflow::{self, FlowNetwork};
use crate::par::{self, Exec};

/// Default multiplier applied to the penalty outside the disc.
pub const OUTSIDE_MULTIPLIER: f64 = 100.0;
/// Integer cost units per `r^2` of shifted penalty.
pub const INTEGER_SCALE: i64 = 4096;
/// Candidate discs considered per galaxy.
pub const MAX_CANDIDATES: usize = 3;
/// Candidate reach, in disc radii.
pub const CANDIDATE_REACH: f64 = 2.0;

/// One step of the rounding ladder. Distances up to `upper` (and above the
/// previous rung's `upper`) round to this rung.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub upper: f64,
    /// Representative center distance; its penalty is the rung's value.
    pub distance: f64,
    pub cost: i64,
}

/// Penalty pricing for one effective disc radius.
///
/// The true penalty is `p(d) = d^2 - r^2` inside the disc and
/// `m (d^2 - r^2)` outside, with `m = outside_multiplier`. For flow costs the
/// penalty is shifted by `r^2` so that it is non-negative; the shift adds the
/// same constant to every solution that assigns all galaxies and so leaves
/// the optimum unchanged.
///
/// Rounding works on the distance to the disc edge, `e = |d - r|`, which is
/// snapped to an odd power of two times `r` (`r/2, r/8, ..., r/512`) on each
/// side of the edge. Each rung absorbs edge distances within a factor of two
/// of its representative, so ten rungs cover `r/1024 <= e <= r` both inside
/// and outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyModel {
    pub radius: f64,
    pub outside_multiplier: f64,
    pub integer_scale: i64,
    ladder: Vec<Rung>,
}

impl PenaltyModel {
    pub fn new(radius: f64) -> Self {
        Self::with_params(radius, OUTSIDE_MULTIPLIER, INTEGER_SCALE)
    }

    pub fn with_params(radius: f64, outside_multiplier: f64, integer_scale: i64) -> Self {
        assert!(radius > 0.0, "radius must be positive");
        assert!(outside_multiplier > 1.0, "outside multiplier must exceed 1");
        assert!(integer_scale >= 1, "integer scale must be positive");
        let mut model = Self {
            radius,
            outside_multiplier,
            integer_scale,
            ladder: Vec::new(),
        };
        model.ladder = model.build_ladder();
        model
    }

    /// The same pricing for a disc `shrink` (fraction) smaller.
    pub fn shrunk(&self, shrink: f64) -> Self {
        Self::with_params(
            self.radius * (1.0 - shrink),
            self.outside_multiplier,
            self.integer_scale,
        )
    }

    fn build_ladder(&self) -> Vec<Rung> {
        let r = self.radius;
        // odd exponents: representatives r * 2^-1, 2^-3, ..., 2^-9
        let reps: Vec<f64> = (0..5).map(|k| r * 0.5f64.powi(2 * k + 1)).collect();
        let mut ladder = Vec::with_capacity(10);
        // inside, from the center outward: band [rep/2, 2 rep] in edge distance
        for (k, &e) in reps.iter().enumerate() {
            let lower_edge = if k + 1 == reps.len() { 0.0 } else { e / 2.0 };
            ladder.push(self.rung(r - lower_edge, r - e));
        }
        // outside, from the edge outward
        for &e in reps.iter().rev() {
            let upper_edge = if e == reps[0] { r } else { 2.0 * e };
            ladder.push(self.rung(r + upper_edge, r + e));
        }
        ladder
    }

    fn rung(&self, upper: f64, distance: f64) -> Rung {
        let units = self.shifted(distance) / (self.radius * self.radius);
        Rung {
            upper,
            distance,
            cost: (units * self.integer_scale as f64).round() as i64,
        }
    }

    /// `p(d)`: negative inside the disc, zero on its edge, steep outside.
    pub fn penalty(&self, d: f64) -> f64 {
        let r = self.radius;
        let base = d * d - r * r;
        if d <= r {
            base
        } else {
            self.outside_multiplier * base
        }
    }

    /// Derivative of `p` with respect to `d`; the inside branch at `d = r`.
    pub fn penalty_slope(&self, d: f64) -> f64 {
        if d <= self.radius {
            2.0 * d
        } else {
            2.0 * self.outside_multiplier * d
        }
    }

    /// `q(d) = p(d) + r^2`, non-negative.
    pub fn shifted(&self, d: f64) -> f64 {
        self.penalty(d) + self.radius * self.radius
    }

    pub fn ladder(&self) -> &[Rung] {
        &self.ladder
    }

    /// Largest distance that can be priced.
    pub fn reach(&self) -> f64 {
        CANDIDATE_REACH * self.radius
    }

    /// Index of the rung that `d` rounds to.
    pub fn rung_index(&self, d: f64) -> Result<usize> {
        if !(d >= 0.0) || d > self.reach() {
            return Err(Error::InvalidInput(format!(
                "distance {d} outside [0, {}]",
                self.reach()
            )));
        }
        // the ladder is short; a linear scan beats a binary search here
        Ok(self
            .ladder
            .iter()
            .position(|rung| d <= rung.upper)
            .unwrap_or(self.ladder.len() - 1))
    }

    /// Integer flow cost of assigning a galaxy at center distance `d`.
    pub fn round_penalty(&self, d: f64) -> Result<i64> {
        Ok(self.ladder[self.rung_index(d)?].cost)
    }
}

/// Uniform cell grid over disc centers in 3-space for radius queries.
#[derive(Clone, Debug)]
pub struct DiscGrid {
    centers: Vec<SpherePoint>,
    reach: f64,
    cell: f64,
    origin: [f64; 3],
    dims: [usize; 3],
    /// CSR layout: discs in cell `c` are `items[start[c]..start[c + 1]]`.
    start: Vec<usize>,
    items: Vec<u32>,
}

impl DiscGrid {
    /// Grid supporting queries up to angular radius `reach`.
    pub fn new(centers: Vec<SpherePoint>, reach: f64) -> Self {
        let cell = (2.0 * (0.5 * reach.min(std::f64::consts::PI)).sin()).max(1e-9);
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for c in &centers {
            for (k, v) in c.as_array().into_iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        if centers.is_empty() {
            lo = [0.0; 3];
            hi = [0.0; 3];
        }
        let dims = [0, 1, 2].map(|k| ((hi[k] - lo[k]) / cell).floor() as usize + 1);
        let ncells = dims[0] * dims[1] * dims[2];
        let index_of = |p: &SpherePoint| {
            let v = p.as_array();
            let ix = [0, 1, 2].map(|k| (((v[k] - lo[k]) / cell) as usize).min(dims[k] - 1));
            (ix[0] * dims[1] + ix[1]) * dims[2] + ix[2]
        };
        let mut count = vec![0usize; ncells + 1];
        let cells: Vec<usize> = centers.iter().map(index_of).collect();
        for &c in &cells {
            count[c + 1] += 1;
        }
        for i in 0..ncells {
            count[i + 1] += count[i];
        }
        let start = count.clone();
        let mut fill = count;
        let mut items = vec![0u32; centers.len()];
        for (i, &c) in cells.iter().enumerate() {
            items[fill[c]] = i as u32;
            fill[c] += 1;
        }
        Self {
            centers,
            reach,
            cell,
            origin: lo,
            dims,
            start,
            items,
        }
    }

    pub fn for_cover(cover: &Cover, reach: f64) -> Self {
        Self::new(cover.discs.iter().map(|d| d.center).collect(), reach)
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Discs whose centers lie within `angle` of `p`, as `(index, distance)`
    /// sorted by distance then index. `angle` must not exceed the build reach.
    pub fn within(&self, p: SpherePoint, angle: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        self.within_into(p, angle, &mut out);
        out
    }

    pub fn within_into(&self, p: SpherePoint, angle: f64, out: &mut Vec<(usize, f64)>) {
        assert!(angle <= self.reach * (1.0 + 1e-12), "query beyond grid reach");
        out.clear();
        if self.centers.is_empty() {
            return;
        }
        let v = p.as_array();
        // cheap reject before the exact angle; the margin keeps borderline cases exact
        let min_dot = angle.cos() - 1e-12;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for k in 0..3 {
            let a = (v[k] - self.cell - self.origin[k]) / self.cell;
            let b = (v[k] + self.cell - self.origin[k]) / self.cell;
            if b < 0.0 || a >= self.dims[k] as f64 {
                return;
            }
            lo[k] = a.max(0.0).floor() as usize;
            hi[k] = (b.floor() as usize).min(self.dims[k] - 1);
        }
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                let row = (i * self.dims[1] + j) * self.dims[2];
                for &d in &self.items[self.start[row + lo[2]]..self.start[row + hi[2] + 1]] {
                    let d = d as usize;
                    if self.centers[d].dot(p) < min_dot {
                        continue;
                    }
                    let dist = angular_distance(self.centers[d], p);
                    if dist <= angle {
                        out.push((d, dist));
                    }
                }
            }
        }
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    }
}

pub fn build_disc_grid(cover: &Cover) -> DiscGrid {
    DiscGrid::for_cover(cover, CANDIDATE_REACH * cover.radius())
}

/// Up to three `(disc + 1, rung)` slots of 40 bits, sorted by disc; zero
/// slots are empty. Compact keys keep the class table cache resident.
type ClassKey = u128;

fn pack_key(slots: &mut [(u32, u8)]) -> ClassKey {
    slots.sort_unstable();
    slots.iter().enumerate().fold(0, |key, (i, &(disc, rung))| {
        key | ((disc as u128 + 1) | (rung as u128) << 32) << (40 * i)
    })
}

fn unpack_key(key: ClassKey, model: &PenaltyModel) -> Vec<(usize, i64)> {
    (0..MAX_CANDIDATES)
        .map(|i| (key >> (40 * i)) & ((1 << 40) - 1))
        .take_while(|&slot| slot != 0)
        .map(|slot| {
            (
                (slot & 0xffff_ffff) as usize - 1,
                model.ladder()[(slot >> 32) as usize].cost,
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivClass {
    /// Galaxy ids, ascending.
    pub members: Vec<usize>,
    /// `(disc id, rounded cost)` sorted by disc id.
    pub candidates: Vec<(usize, i64)>,
    /// Nearest candidate disc of the first member.
    pub home: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivClasses {
    pub classes: Vec<EquivClass>,
    /// Galaxies with no disc center within reach.
    pub stranded: Vec<usize>,
}

impl EquivClasses {
    pub fn mean_class_size(&self) -> f64 {
        if self.classes.is_empty() {
            return 0.0;
        }
        let members: usize = self.classes.iter().map(|c| c.members.len()).sum();
        members as f64 / self.classes.len() as f64
    }
}

pub fn build_equiv_classes(inst: &Instance, cover: &Cover, model: &PenaltyModel) -> EquivClasses {
    build_equiv_classes_with(inst, cover, model, Exec::default())
}

pub fn build_equiv_classes_with(inst: &Instance, cover: &Cover, model: &PenaltyModel, exec: Exec) -> EquivClasses {
    let reach = model.reach();
    let grid = DiscGrid::for_cover(cover, reach);
    let keys: Vec<Option<(ClassKey, usize)>> = par::map(exec, &inst.galaxies, |g| {
        let near = grid.within(*g, reach);
        if near.is_empty() {
            return None;
        }
        let mut slots = [(0u32, 0u8); MAX_CANDIDATES];
        let taken = near.len().min(MAX_CANDIDATES);
        for (slot, &(disc, d)) in slots.iter_mut().zip(&near) {
            *slot = (
                disc as u32,
                model.rung_index(d.min(reach)).expect("distance within reach") as u8,
            );
        }
        Some((pack_key(&mut slots[..taken]), near[0].0))
    });
    let mut lookup: HashMap<ClassKey, usize> = HashMap::new();
    let mut out = EquivClasses::default();
    for (g, entry) in keys.into_iter().enumerate() {
        let Some((key, home)) = entry else {
            out.stranded.push(g);
            continue;
        };
        let next = out.classes.len();
        let k = *lookup.entry(key).or_insert(next);
        if k == next {
            out.classes.push(EquivClass {
                members: Vec::new(),
                candidates: unpack_key(key, model),
                home,
            });
        }
        out.classes[k].members.push(g);
    }
    out
}

/// The relaxed problem for one cover: equivalence classes with their
/// candidate discs and rounded costs.
#[derive(Clone, Debug)]
pub struct RelaxedProblem {
    pub classes: EquivClasses,
    pub model: PenaltyModel,
    pub discs: usize,
    pub capacity: usize,
}

impl RelaxedProblem {
    pub fn build(inst: &Instance, cover: &Cover, model: &PenaltyModel, radius_shrink: f64, exec: Exec) -> Result<Self> {
        if cover.is_empty() {
            return Err(Error::InvalidInput("cover has no discs".into()));
        }
        if !(0.0..1.0).contains(&radius_shrink) {
            return Err(Error::InvalidInput(format!("shrink {radius_shrink} outside [0, 1)")));
        }
        let model = if radius_shrink > 0.0 {
            model.shrunk(radius_shrink)
        } else {
            model.clone()
        };
        Ok(Self {
            classes: build_equiv_classes_with(inst, cover, &model, exec),
            model,
            discs: cover.len(),
            capacity: inst.capacity,
        })
    }

    /// Galaxies that can enter the flow problem.
    pub fn assignable(&self) -> usize {
        self.classes.classes.iter().map(|c| c.members.len()).sum()
    }

    /// The problem as an explicit flow network: node 0 is the source, node 1
    /// the sink, then one node per class, then one node per disc. Returns
    /// the network and, per class, the edge index of each candidate.
    pub fn network(&self) -> Result<(FlowNetwork, Vec<Vec<usize>>)> {
        let nc = self.classes.classes.len();
        let disc_node = |d: usize| 2 + nc + d;
        let mut network = FlowNetwork::new(2 + nc + self.discs, 0, 1)?;
        let mut class_edges = Vec::with_capacity(nc);
        for (k, class) in self.classes.classes.iter().enumerate() {
            let size = class.members.len() as i64;
            network.add_edge(0, 2 + k, size, 0)?;
            let edges = class
                .candidates
                .iter()
                .map(|&(d, cost)| network.add_edge(2 + k, disc_node(d), size, cost))
                .collect::<Result<Vec<_>>>()?;
            class_edges.push(edges);
        }
        for d in 0..self.discs {
            network.add_edge(disc_node(d), 1, self.capacity as i64, 0)?;
        }
        Ok((network, class_edges))
    }

    /// Solves with the transportation solver.
    pub fn solve(&self, inst: &Instance, cover: &Cover) -> Result<RelaxedAssignment> {
        let supplies: Vec<netflow::Supply> = self
            .classes
            .classes
            .iter()
            .map(|c| netflow::Supply {
                amount: c.members.len() as i64,
                arcs: c.candidates.clone(),
            })
            .collect();
        let result = netflow::transport(&supplies, &vec![self.capacity as i64; self.discs])?;
        Ok(self.decode(inst, cover, &result.flow, result.cost, result.shipped))
    }

    /// Solves the explicit network with the general min-cost flow solver.
    /// Same optimum as [`RelaxedProblem::solve`]; slower on large inputs.
    pub fn solve_general(&self, inst: &Instance, cover: &Cover) -> Result<RelaxedAssignment> {
        let (network, class_edges) = self.network()?;
        let result = netflow::min_cost_max_flow(&network)?;
        let flow: Vec<Vec<i64>> = class_edges
            .iter()
            .map(|edges| edges.iter().map(|&e| result.flow[e]).collect())
            .collect();
        Ok(self.decode(inst, cover, &flow, result.cost, result.value))
    }

    /// Hands out class members to discs in ascending id order.
    fn decode(
        &self,
        inst: &Instance,
        cover: &Cover,
        flow: &[Vec<i64>],
        total_cost: i64,
        shipped: i64,
    ) -> RelaxedAssignment {
        let mut assigned = vec![None; inst.len()];
        let mut penalty = vec![None; inst.len()];
        for (class, units) in self.classes.classes.iter().zip(flow) {
            let mut members = class.members.iter();
            for (&(disc, _), &f) in class.candidates.iter().zip(units) {
                for _ in 0..f {
                    let g = *members.next().expect("flow bounded by class size");
                    assigned[g] = Some(disc);
                    penalty[g] = Some(
                        self.model
                            .penalty(angular_distance(cover.discs[disc].center, inst.galaxies[g])),
                    );
                }
            }
        }
        RelaxedAssignment {
            assigned,
            penalty,
            total_cost,
            assigned_count: shipped as usize,
            stranded: self.classes.stranded.clone(),
            class_count: self.classes.classes.len(),
            edge_count: self
                .classes
                .classes
                .iter()
                .map(|c| c.candidates.len() + 1)
                .sum::<usize>()
                + self.discs,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxedAssignment {
    /// Disc per galaxy; `None` for stranded galaxies or when total candidate
    /// capacity runs out.
    pub assigned: Vec<Option<usize>>,
    /// Unrounded penalty `p(d)` of each assignment.
    pub penalty: Vec<Option<f64>>,
    /// Sum of rounded (shifted, integer) costs.
    pub total_cost: i64,
    pub assigned_count: usize,
    pub stranded: Vec<usize>,
    pub class_count: usize,
    /// Edges of the equivalent flow network.
    pub edge_count: usize,
}

impl RelaxedAssignment {
    /// Galaxies per disc, ascending galaxy id within each disc.
    pub fn by_disc(&self, discs: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); discs];
        for (g, a) in self.assigned.iter().enumerate() {
            if let Some(d) = a {
                out[*d].push(g);
            }
        }
        out
    }
}

pub fn solve_relaxed(
    inst: &Instance,
    cover: &Cover,
    model: &PenaltyModel,
    radius_shrink: f64,
) -> Result<RelaxedAssignment> {
    RelaxedProblem::build(inst, cover, model, radius_shrink, Exec::default())?.solve(inst, cover)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegalAssignment {
    pub assigned: Vec<Option<usize>>,
    pub count: usize,
}

impl LegalAssignment {
    pub fn per_disc(&self, discs: usize) -> Vec<usize> {
        let mut out = vec![0; discs];
        for d in self.assigned.iter().flatten() {
            out[*d] += 1;
        }
        out
    }
}

pub fn solve_legal(inst: &Instance, cover: &Cover) -> LegalAssignment {
    solve_legal_with(inst, cover, Exec::default())
}

/// Maximum legal assignment. Galaxies contained in exactly the same set of
/// discs are merged into one flow node; that merge is exact.
pub fn solve_legal_with(inst: &Instance, cover: &Cover, exec: Exec) -> LegalAssignment {
    let n = inst.len();
    if cover.is_empty() {
        return LegalAssignment {
            assigned: vec![None; n],
            count: 0,
        };
    }
    let r = cover.radius();
    let grid = DiscGrid::for_cover(cover, r);
    let sets: Vec<Vec<u32>> = par::map(exec, &inst.galaxies, |g| {
        let mut v: Vec<u32> = grid
            .within(*g, r)
            .into_iter()
            .filter(|&(d, _)| cover.discs[d].contains(*g))
            .map(|(d, _)| d as u32)
            .collect();
        v.sort_unstable();
        v
    });
    let mut lookup: HashMap<&[u32], usize> = HashMap::new();
    let mut groups: Vec<(&[u32], Vec<usize>)> = Vec::new();
    for (g, set) in sets.iter().enumerate() {
        if set.is_empty() {
            continue;
        }
        let next = groups.len();
        let k = *lookup.entry(set.as_slice()).or_insert(next);
        if k == next {
            groups.push((set.as_slice(), Vec::new()));
        }
        groups[k].1.push(g);
    }
    let ng = groups.len();
    let mut net = FlowNetwork::new(2 + ng + cover.len(), 0, 1).expect("valid node count");
    let mut group_edges = Vec::with_capacity(ng);
    for (k, (set, members)) in groups.iter().enumerate() {
        let size = members.len() as i64;
        net.add_edge(0, 2 + k, size, 0).expect("valid edge");
        group_edges.push(
            set.iter()
                .map(|&d| net.add_edge(2 + k, 2 + ng + d as usize, size, 0).expect("valid edge"))
                .collect::<Vec<_>>(),
        );
    }
    for d in 0..cover.len() {
        net.add_edge(2 + ng + d, 1, inst.capacity as i64, 0)
            .expect("valid edge");
    }
    let result = netflow::max_flow(&net);
    let mut assigned = vec![None; n];
    for ((set, members), edges) in groups.iter().zip(&group_edges) {
        let mut it = members.iter();
        for (&d, &e) in set.iter().zip(edges) {
            for _ in 0..result.flow[e] {
                assigned[*it.next().expect("flow bounded by group size")] = Some(d as usize);
            }
        }
    }
    LegalAssignment {
        assigned,
        count: result.value as usize,
    }
}
