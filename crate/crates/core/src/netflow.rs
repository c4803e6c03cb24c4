//! Integer maximum flow and minimum-cost maximum flow.
//!
//! [`max_flow`] is Dinic's algorithm. [`min_cost_max_flow`] first finds a
//! maximum flow, then re-optimizes its cost with Goldberg–Tarjan cost scaling
//! (push-relabel refine steps with FIFO selection and periodic global price
//! updates). Costs are multiplied by `n + 1` internally so that the final
//! `1`-optimal flow is exactly optimal.
//!
//! Everything is deterministic for a fixed edge insertion order: adjacency
//! lists follow edge indices and the active-node queue is FIFO.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub capacity: i64,
    pub cost: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowNetwork {
    nodes: usize,
    edges: Vec<Edge>,
    source: usize,
    sink: usize,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Result<Self> {
        if source >= nodes || sink >= nodes || source == sink {
            return Err(Error::Network(format!(
                "source {source} / sink {sink} invalid for {nodes} nodes"
            )));
        }
        Ok(Self {
            nodes,
            edges: Vec::new(),
            source,
            sink,
        })
    }

    /// Adds a directed edge and returns its index.
    pub fn add_edge(&mut self, tail: usize, head: usize, capacity: i64, cost: i64) -> Result<usize> {
        if tail >= self.nodes || head >= self.nodes {
            return Err(Error::Network(format!("edge {tail}->{head} out of range")));
        }
        if tail == head {
            return Err(Error::Network(format!("self-loop at node {tail}")));
        }
        if capacity < 0 {
            return Err(Error::Network(format!("negative capacity on {tail}->{head}")));
        }
        self.edges.push(Edge {
            tail,
            head,
            capacity,
            cost,
        });
        Ok(self.edges.len() - 1)
    }

    pub fn node_count(&self) -> usize {
        self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn source(&self) -> usize {
        self.source
    }

    pub fn sink(&self) -> usize {
        self.sink
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlowResult {
    /// Flow on each edge, by edge index.
    pub flow: Vec<i64>,
    pub value: i64,
    pub cost: i64,
}

struct ScaleState {
    price: Vec<i64>,
    excess: Vec<i64>,
    current: Vec<usize>,
    queue: VecDeque<usize>,
    queued: Vec<bool>,
    dist: Vec<i64>,
    heap: BinaryHeap<Reverse<(i64, usize)>>,
}

impl ScaleState {
    fn new(n: usize) -> Self {
        Self {
            price: vec![0; n],
            excess: vec![0; n],
            current: vec![0; n],
            queue: VecDeque::new(),
            queued: vec![false; n],
            dist: vec![0; n],
            heap: BinaryHeap::new(),
        }
    }
}

/// Residual graph. Edge `e` owns arcs `2e` (forward) and `2e + 1` (reverse).
struct Residual {
    n: usize,
    head: Vec<usize>,
    cap: Vec<i64>,
    cost: Vec<i64>,
    /// CSR adjacency: arcs leaving `v` are `adj[start[v]..start[v + 1]]`.
    start: Vec<usize>,
    adj: Vec<usize>,
}

impl Residual {
    fn new(net: &FlowNetwork) -> Self {
        let n = net.nodes;
        let m = net.edges.len();
        let mut head = vec![0; 2 * m];
        let mut cap = vec![0; 2 * m];
        let mut cost = vec![0; 2 * m];
        let mut degree = vec![0usize; n + 1];
        for (i, e) in net.edges.iter().enumerate() {
            head[2 * i] = e.head;
            head[2 * i + 1] = e.tail;
            cap[2 * i] = e.capacity;
            cost[2 * i] = e.cost;
            cost[2 * i + 1] = -e.cost;
            degree[e.tail] += 1;
            degree[e.head] += 1;
        }
        let mut start = vec![0; n + 1];
        for v in 0..n {
            start[v + 1] = start[v] + degree[v];
        }
        let mut fill = start.clone();
        let mut adj = vec![0; 2 * m];
        for (i, e) in net.edges.iter().enumerate() {
            adj[fill[e.tail]] = 2 * i;
            fill[e.tail] += 1;
            adj[fill[e.head]] = 2 * i + 1;
            fill[e.head] += 1;
        }
        Self {
            n,
            head,
            cap,
            cost,
            start,
            adj,
        }
    }

    #[inline]
    fn tail(&self, arc: usize) -> usize {
        self.head[arc ^ 1]
    }

    #[inline]
    fn push(&mut self, arc: usize, amount: i64) {
        self.cap[arc] -= amount;
        self.cap[arc ^ 1] += amount;
    }

    fn bfs_levels(&self, s: usize, level: &mut [i32], queue: &mut VecDeque<usize>) {
        level.fill(-1);
        level[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(v) = queue.pop_front() {
            for &a in &self.adj[self.start[v]..self.start[v + 1]] {
                let w = self.head[a];
                if self.cap[a] > 0 && level[w] < 0 {
                    level[w] = level[v] + 1;
                    queue.push_back(w);
                }
            }
        }
    }

    /// Dinic's algorithm with an explicit path stack.
    fn dinic(&mut self, s: usize, t: usize) -> i64 {
        let mut level = vec![-1i32; self.n];
        let mut it = vec![0usize; self.n];
        let mut queue = VecDeque::new();
        let mut path: Vec<usize> = Vec::new();
        let mut total = 0i64;
        loop {
            self.bfs_levels(s, &mut level, &mut queue);
            if level[t] < 0 {
                return total;
            }
            it.copy_from_slice(&self.start[..self.n]);
            path.clear();
            loop {
                let v = match path.last() {
                    Some(&a) => self.head[a],
                    None => s,
                };
                if v == t {
                    let bottleneck = path.iter().map(|&a| self.cap[a]).min().unwrap_or(0);
                    let mut cut = path.len();
                    for (k, &a) in path.iter().enumerate() {
                        self.push(a, bottleneck);
                        if self.cap[a] == 0 && cut == path.len() {
                            cut = k;
                        }
                    }
                    total += bottleneck;
                    path.truncate(cut);
                    continue;
                }
                let end = self.start[v + 1];
                let mut advanced = false;
                while it[v] < end {
                    let a = self.adj[it[v]];
                    let w = self.head[a];
                    if self.cap[a] > 0 && level[w] == level[v] + 1 {
                        path.push(a);
                        advanced = true;
                        break;
                    }
                    it[v] += 1;
                }
                if !advanced {
                    if v == s {
                        break;
                    }
                    level[v] = -1;
                    let a = path.pop().expect("non-source node has an entering arc");
                    it[self.tail(a)] += 1;
                }
            }
        }
    }

    fn flows(&self, net: &FlowNetwork) -> Vec<i64> {
        net.edges
            .iter()
            .enumerate()
            .map(|(i, e)| e.capacity - self.cap[2 * i])
            .collect()
    }

    /// Re-optimizes the cost of the current flow by cost scaling. The flow on
    /// entry must satisfy conservation (with whatever supplies it encodes);
    /// supplies are preserved.
    fn cost_scale(&mut self) {
        let mult = self.n as i64 + 1;
        let scaled: Vec<i64> = self.cost.iter().map(|&c| c * mult).collect();
        let max_cost = scaled.iter().map(|c| c.abs()).max().unwrap_or(0);
        if max_cost == 0 {
            return;
        }
        const ALPHA: i64 = 16;
        let mut st = ScaleState::new(self.n);
        let mut eps = max_cost;
        while eps > 1 {
            eps = (eps / ALPHA).max(1);
            self.refine(&scaled, eps, &mut st);
        }
    }

    /// One `eps` phase: saturate every arc with negative reduced cost, then
    /// push-relabel (FIFO) until no node has excess. Prices get a global
    /// update at the start and after every `n` relabels.
    fn refine(&mut self, scaled: &[i64], eps: i64, st: &mut ScaleState) {
        for v in 0..self.n {
            for k in self.start[v]..self.start[v + 1] {
                let a = self.adj[k];
                let w = self.head[a];
                let r = self.cap[a];
                if r > 0 && scaled[a] + st.price[v] - st.price[w] < 0 {
                    self.push(a, r);
                    st.excess[v] -= r;
                    st.excess[w] += r;
                }
            }
        }
        st.queue.clear();
        for v in 0..self.n {
            st.queued[v] = st.excess[v] > 0;
            if st.queued[v] {
                st.queue.push_back(v);
            }
        }
        if st.queue.is_empty() {
            return;
        }
        self.price_update(scaled, eps, st);
        st.current.copy_from_slice(&self.start[..self.n]);
        let mut relabels = 0usize;
        while let Some(v) = st.queue.pop_front() {
            st.queued[v] = false;
            while st.excess[v] > 0 {
                let end = self.start[v + 1];
                let mut k = st.current[v];
                while k < end && st.excess[v] > 0 {
                    let a = self.adj[k];
                    let w = self.head[a];
                    if self.cap[a] > 0 && scaled[a] + st.price[v] - st.price[w] < 0 {
                        let delta = st.excess[v].min(self.cap[a]);
                        self.push(a, delta);
                        st.excess[v] -= delta;
                        st.excess[w] += delta;
                        if st.excess[w] > 0 && !st.queued[w] {
                            st.queued[w] = true;
                            st.queue.push_back(w);
                        }
                        if self.cap[a] > 0 {
                            break;
                        }
                    }
                    k += 1;
                }
                st.current[v] = k;
                if st.excess[v] > 0 && k >= end {
                    let mut best = i64::MIN;
                    for kk in self.start[v]..end {
                        let a = self.adj[kk];
                        if self.cap[a] > 0 {
                            best = best.max(st.price[self.head[a]] - scaled[a]);
                        }
                    }
                    debug_assert!(best > i64::MIN, "active node without residual arcs");
                    if best == i64::MIN {
                        // Infeasible supplies; cannot happen for flows that
                        // started feasible.
                        st.excess[v] = 0;
                        break;
                    }
                    st.price[v] = best - eps;
                    st.current[v] = self.start[v];
                    relabels += 1;
                }
            }
            if relabels > self.n && !st.queue.is_empty() {
                relabels = 0;
                self.price_update(scaled, eps, st);
                st.current.copy_from_slice(&self.start[..self.n]);
            }
        }
    }

    /// Global price update: lowers each node's price by `eps` times its
    /// distance to the nearest deficit, where a residual arc with reduced
    /// cost `c` has length `max(0, floor(c / eps) + 1)`. Keeps the flow
    /// `eps`-optimal and makes admissible paths from excesses to deficits.
    fn price_update(&self, scaled: &[i64], eps: i64, st: &mut ScaleState) {
        const UNSET: i64 = i64::MAX;
        st.dist.fill(UNSET);
        st.heap.clear();
        let mut active = 0usize;
        for v in 0..self.n {
            if st.excess[v] < 0 {
                st.dist[v] = 0;
                st.heap.push(Reverse((0, v)));
            } else if st.excess[v] > 0 {
                active += 1;
            }
        }
        let mut reached = 0i64;
        let mut done = vec![false; self.n];
        while let Some(Reverse((d, w))) = st.heap.pop() {
            if done[w] || d > st.dist[w] {
                continue;
            }
            done[w] = true;
            reached = d;
            if st.excess[w] > 0 {
                active -= 1;
                if active == 0 {
                    break;
                }
            }
            // arcs v -> w with residual capacity are partners of w's arcs
            for &b in &self.adj[self.start[w]..self.start[w + 1]] {
                let a = b ^ 1;
                if self.cap[a] <= 0 {
                    continue;
                }
                let v = self.head[b];
                if done[v] {
                    continue;
                }
                let rc = scaled[a] + st.price[v] - st.price[w];
                let len = if rc < 0 { 0 } else { rc / eps + 1 };
                let nd = d + len;
                if nd < st.dist[v] {
                    st.dist[v] = nd;
                    st.heap.push(Reverse((nd, v)));
                }
            }
        }
        for ((p, &dist), &fin) in st.price.iter_mut().zip(&st.dist).zip(&done) {
            *p -= if fin { dist } else { reached } * eps;
        }
    }

    /// Negative-cycle search over arcs with positive residual capacity.
    /// Returns a node on a negative cycle if one exists.
    fn negative_cycle(&self) -> Option<usize> {
        let n = self.n;
        let mut dist = vec![0i64; n];
        let mut hops = vec![0usize; n];
        let mut in_queue = vec![true; n];
        let mut queue: VecDeque<usize> = (0..n).collect();
        while let Some(v) = queue.pop_front() {
            in_queue[v] = false;
            for &a in &self.adj[self.start[v]..self.start[v + 1]] {
                if self.cap[a] <= 0 {
                    continue;
                }
                let w = self.head[a];
                let nd = dist[v] + self.cost[a];
                if nd < dist[w] {
                    dist[w] = nd;
                    hops[w] = hops[v] + 1;
                    if hops[w] >= n {
                        return Some(w);
                    }
                    if !in_queue[w] {
                        in_queue[w] = true;
                        queue.push_back(w);
                    }
                }
            }
        }
        None
    }

    /// True if the arcs with positive residual capacity form a DAG.
    fn is_acyclic(&self) -> bool {
        let mut indeg = vec![0usize; self.n];
        for a in 0..self.cap.len() {
            if self.cap[a] > 0 {
                indeg[self.head[a]] += 1;
            }
        }
        let mut stack: Vec<usize> = (0..self.n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &a in &self.adj[self.start[v]..self.start[v + 1]] {
                if self.cap[a] > 0 {
                    let w = self.head[a];
                    indeg[w] -= 1;
                    if indeg[w] == 0 {
                        stack.push(w);
                    }
                }
            }
        }
        seen == self.n
    }
}

fn finish(net: &FlowNetwork, res: &Residual) -> FlowResult {
    let flow = res.flows(net);
    let value = net
        .edges
        .iter()
        .zip(&flow)
        .map(|(e, &f)| {
            if e.tail == net.source {
                f
            } else if e.head == net.source {
                -f
            } else {
                0
            }
        })
        .sum();
    let cost = net.edges.iter().zip(&flow).map(|(e, &f)| e.cost * f).sum();
    FlowResult { flow, value, cost }
}

/// Maximum flow from source to sink.
pub fn max_flow(net: &FlowNetwork) -> FlowResult {
    let mut res = Residual::new(net);
    res.dinic(net.source, net.sink);
    finish(net, &res)
}

/// A maximum flow of minimum total cost.
///
/// Fails with [`Error::NegativeCycle`] when the input network contains a
/// negative-cost cycle of positive-capacity edges.
pub fn min_cost_max_flow(net: &FlowNetwork) -> Result<FlowResult> {
    let mut res = Residual::new(net);
    if !res.is_acyclic() {
        if let Some(node) = res.negative_cycle() {
            return Err(Error::NegativeCycle { node });
        }
    }
    res.dinic(net.source, net.sink);
    res.cost_scale();
    Ok(finish(net, &res))
}

/// One supply point of a transportation problem: `amount` units that may go
/// to any of `arcs` as `(sink, unit cost)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Supply {
    pub amount: i64,
    pub arcs: Vec<(usize, i64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransportResult {
    /// Units on each arc, parallel to `Supply::arcs`.
    pub flow: Vec<Vec<i64>>,
    /// Units shipped; the rest stay at their supply.
    pub shipped: i64,
    pub cost: i64,
}

/// Ships as many units as possible from the supplies to capacitated sinks
/// and, among maximum shipments, minimizes cost. Costs must be
/// non-negative.
///
/// This is min-cost max-flow on `source -> supply -> sink -> target` solved
/// by successive shortest paths, with two twists that suit networks with
/// many supplies and few sinks. Supply nodes are condensed away: a residual
/// path between sinks `i` and `j` through supply `k` costs
/// `c(k, j) - c(k, i)`, so shortest paths run over sinks only. And unshipped
/// units go to a virtual sink with a cost larger than any rerouting chain,
/// which turns flow maximization into plain cost minimization. Each search
/// starts at an over-full sink and stops at the nearest sink with room, so
/// work stays local.
pub fn transport(supplies: &[Supply], capacity: &[i64]) -> Result<TransportResult> {
    Transport::new(supplies, capacity)?.run()
}

struct Transport<'a> {
    supplies: &'a [Supply],
    capacity: &'a [i64],
    /// Node `k` (one past the sinks) takes unshipped units.
    spill: usize,
    spill_cost: i64,
    flow: Vec<Vec<i64>>,
    spilled: Vec<i64>,
    load: Vec<i64>,
    /// `exits[i][j]`: supplies with flow on `i` that could move to `j`,
    /// keyed by the raw rerouting cost `c(k, j) - c(k, i)`.
    exits: Vec<BTreeMap<usize, BTreeSet<(i64, u32)>>>,
    potential: Vec<i64>,
}

impl<'a> Transport<'a> {
    fn new(supplies: &'a [Supply], capacity: &'a [i64]) -> Result<Self> {
        let k = capacity.len();
        if capacity.iter().any(|&c| c < 0) {
            return Err(Error::InvalidInput("negative sink capacity".into()));
        }
        let mut max_cost = 0i64;
        for s in supplies {
            if s.amount < 0 {
                return Err(Error::InvalidInput("negative supply".into()));
            }
            for (n, &(sink, cost)) in s.arcs.iter().enumerate() {
                if sink >= k {
                    return Err(Error::InvalidInput(format!("sink {sink} out of range")));
                }
                if cost < 0 {
                    return Err(Error::InvalidInput(format!("negative arc cost {cost}")));
                }
                if s.arcs[..n].iter().any(|&(o, _)| o == sink) {
                    return Err(Error::InvalidInput(format!("duplicate arc to sink {sink}")));
                }
                max_cost = max_cost.max(cost);
            }
        }
        // An alternating chain passes each sink at most once, so it gains at
        // most (k + 1) * max_cost; spilling must cost more than that.
        let spill_cost = (k as i64 + 2)
            .checked_mul(max_cost)
            .and_then(|v| v.checked_add(1))
            .ok_or_else(|| Error::InvalidInput("costs too large".into()))?;
        Ok(Self {
            supplies,
            capacity,
            spill: k,
            spill_cost,
            flow: supplies.iter().map(|s| vec![0; s.arcs.len()]).collect(),
            spilled: vec![0; supplies.len()],
            load: vec![0; k],
            exits: vec![BTreeMap::new(); k],
            potential: vec![0; k + 1],
        })
    }

    fn cost(&self, s: usize, node: usize) -> i64 {
        if node == self.spill {
            return self.spill_cost;
        }
        let arc = self.supplies[s].arcs.iter().find(|a| a.0 == node).expect("arc exists");
        arc.1
    }

    fn flow_at(&self, s: usize, node: usize) -> i64 {
        if node == self.spill {
            return self.spilled[s];
        }
        let i = self.supplies[s]
            .arcs
            .iter()
            .position(|a| a.0 == node)
            .expect("arc exists");
        self.flow[s][i]
    }

    fn add_flow(&mut self, s: usize, node: usize, delta: i64) {
        let before = self.flow_at(s, node);
        if node == self.spill {
            self.spilled[s] += delta;
        } else {
            let i = self.supplies[s]
                .arcs
                .iter()
                .position(|a| a.0 == node)
                .expect("arc exists");
            self.flow[s][i] += delta;
            self.load[node] += delta;
            // spilled units are never moved again, so only sinks get exits
            let after = before + delta;
            if (before > 0) != (after > 0) {
                let here = self.cost(s, node);
                let others: Vec<usize> = self.supplies[s]
                    .arcs
                    .iter()
                    .map(|a| a.0)
                    .filter(|&o| o != node)
                    .chain([self.spill])
                    .collect();
                for other in others {
                    let key = (self.cost(s, other) - here, s as u32);
                    let set = self.exits[node].entry(other).or_default();
                    if after > 0 {
                        set.insert(key);
                    } else {
                        set.remove(&key);
                    }
                }
            }
        }
    }

    fn run(mut self) -> Result<TransportResult> {
        // start from the cheapest arc of every supply: optimal, but possibly
        // over capacity
        for s in 0..self.supplies.len() {
            let sup = &self.supplies[s];
            if sup.amount == 0 {
                continue;
            }
            let target = sup
                .arcs
                .iter()
                .min_by_key(|&&(sink, cost)| (cost, sink))
                .map(|a| a.0)
                .unwrap_or(self.spill);
            self.add_flow(s, target, sup.amount);
        }
        let k = self.capacity.len();
        let mut search = Search::new(k + 1);
        for origin in 0..k {
            while self.load[origin] > self.capacity[origin] {
                let (target, depth) = self.shortest_path(origin, &mut search);
                let mut delta = self.load[origin] - self.capacity[origin];
                if target != self.spill {
                    delta = delta.min(self.capacity[target] - self.load[target]);
                }
                let mut v = target;
                while v != origin {
                    let (u, s) = search.pred[v];
                    delta = delta.min(self.flow_at(s as usize, u));
                    v = u;
                }
                debug_assert!(delta > 0);
                let mut v = target;
                while v != origin {
                    let (u, s) = search.pred[v];
                    self.add_flow(s as usize, u, -delta);
                    self.add_flow(s as usize, v, delta);
                    v = u;
                }
                for &v in &search.touched {
                    if search.done[v] && search.dist[v] < depth {
                        self.potential[v] += search.dist[v] - depth;
                    }
                }
            }
        }
        let mut shipped = 0;
        let mut cost = 0;
        for (sup, f) in self.supplies.iter().zip(&self.flow) {
            for (&(_, c), &x) in sup.arcs.iter().zip(f) {
                shipped += x;
                cost += c * x;
            }
        }
        Ok(TransportResult {
            flow: self.flow,
            shipped,
            cost,
        })
    }

    /// Dijkstra over sinks in reduced costs from `origin` to the nearest node
    /// with room. Returns that node and its distance.
    fn shortest_path(&self, origin: usize, search: &mut Search) -> (usize, i64) {
        search.reset();
        search.label(origin, 0, (origin, u32::MAX));
        while let Some(Reverse((d, u))) = search.heap.pop() {
            if search.done[u] || d > search.dist[u] {
                continue;
            }
            search.done[u] = true;
            if u != origin && (u == self.spill || self.load[u] < self.capacity[u]) {
                return (u, d);
            }
            for (&v, set) in &self.exits[u] {
                let Some(&(raw, s)) = set.first() else {
                    continue;
                };
                if search.done[v] {
                    continue;
                }
                let w = raw + self.potential[u] - self.potential[v];
                debug_assert!(w >= 0, "negative reduced cost {w}");
                let nd = d + w;
                if nd < search.dist[v] {
                    search.label(v, nd, (u, s));
                }
            }
        }
        unreachable!("the spill node is always reachable from an over-full sink")
    }
}

struct Search {
    dist: Vec<i64>,
    done: Vec<bool>,
    pred: Vec<(usize, u32)>,
    touched: Vec<usize>,
    heap: BinaryHeap<Reverse<(i64, usize)>>,
}

impl Search {
    fn new(n: usize) -> Self {
        Self {
            dist: vec![i64::MAX; n],
            done: vec![false; n],
            pred: vec![(0, 0); n],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.dist[v] = i64::MAX;
            self.done[v] = false;
        }
        self.touched.clear();
        self.heap.clear();
    }

    fn label(&mut self, v: usize, d: i64, pred: (usize, u32)) {
        if self.dist[v] == i64::MAX {
            self.touched.push(v);
        }
        self.dist[v] = d;
        self.pred[v] = pred;
        self.heap.push(Reverse((d, v)));
    }
}

/// Checks that `result` is a feasible maximum flow on `net` whose residual
/// graph has no negative-cost cycle (the min-cost certificate).
pub fn verify_optimality(net: &FlowNetwork, result: &FlowResult) -> bool {
    if result.flow.len() != net.edges.len() {
        return false;
    }
    let mut balance = vec![0i64; net.nodes];
    for (e, &f) in net.edges.iter().zip(&result.flow) {
        if f < 0 || f > e.capacity {
            return false;
        }
        balance[e.tail] -= f;
        balance[e.head] += f;
    }
    let conserved = (0..net.nodes)
        .filter(|&v| v != net.source && v != net.sink)
        .all(|v| balance[v] == 0);
    if !conserved || -balance[net.source] != result.value {
        return false;
    }
    let cost: i64 = net.edges.iter().zip(&result.flow).map(|(e, &f)| e.cost * f).sum();
    if cost != result.cost {
        return false;
    }
    let mut res = Residual::new(net);
    for (i, &f) in result.flow.iter().enumerate() {
        res.push(2 * i, f);
    }
    let mut level = vec![-1; net.nodes];
    res.bfs_levels(net.source, &mut level, &mut VecDeque::new());
    if level[net.sink] >= 0 {
        return false;
    }
    res.negative_cycle().is_none()
}

/// A network read from DIMACS `min` format together with the supply at its
/// source.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimacsProblem {
    pub network: FlowNetwork,
    pub supply: i64,
}

/// Writes the network in DIMACS min-cost-flow format (1-based node ids).
/// The source carries `supply` and the sink `-supply`.
pub fn write_dimacs<W: Write>(net: &FlowNetwork, supply: i64, mut out: W) -> Result<()> {
    writeln!(out, "c skycover flow network")?;
    writeln!(out, "p min {} {}", net.nodes, net.edges.len())?;
    writeln!(out, "n {} {}", net.source + 1, supply)?;
    writeln!(out, "n {} {}", net.sink + 1, -supply)?;
    for e in &net.edges {
        writeln!(out, "a {} {} 0 {} {}", e.tail + 1, e.head + 1, e.capacity, e.cost)?;
    }
    Ok(())
}

/// Reads a single-source single-sink DIMACS `min` problem.
pub fn read_dimacs<R: BufRead>(input: R) -> Result<DimacsProblem> {
    let bad = |line: usize, msg: &str| Error::Network(format!("dimacs line {line}: {msg}"));
    let mut nodes: Option<usize> = None;
    let mut arcs: Vec<(usize, usize, i64, i64)> = Vec::new();
    let mut supplies: Vec<(usize, i64)> = Vec::new();
    let mut declared_arcs = 0usize;
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let mut tok = line.split_whitespace();
        let Some(kind) = tok.next() else { continue };
        let nums: Vec<&str> = tok.collect();
        let int = |s: &str| s.parse::<i64>().map_err(|_| bad(lineno, "expected integer"));
        match kind {
            "c" => {}
            "p" => {
                if nodes.is_some() || nums.len() != 3 || nums[0] != "min" {
                    return Err(bad(lineno, "expected 'p min NODES ARCS'"));
                }
                nodes = Some(int(nums[1])? as usize);
                declared_arcs = int(nums[2])? as usize;
            }
            "n" => {
                if nums.len() != 2 {
                    return Err(bad(lineno, "expected 'n ID FLOW'"));
                }
                supplies.push((int(nums[0])? as usize, int(nums[1])?));
            }
            "a" => {
                if nums.len() != 5 {
                    return Err(bad(lineno, "expected 'a SRC DST LOW CAP COST'"));
                }
                if int(nums[2])? != 0 {
                    return Err(bad(lineno, "nonzero lower bounds are not supported"));
                }
                arcs.push((
                    int(nums[0])? as usize,
                    int(nums[1])? as usize,
                    int(nums[3])?,
                    int(nums[4])?,
                ));
            }
            _ => return Err(bad(lineno, "unknown line type")),
        }
    }
    let nodes = nodes.ok_or_else(|| bad(0, "missing problem line"))?;
    if arcs.len() != declared_arcs {
        return Err(bad(0, "arc count does not match problem line"));
    }
    let supplies: Vec<_> = supplies.into_iter().filter(|&(_, b)| b != 0).collect();
    let (source, supply, sink) = match *supplies.as_slice() {
        [(a, x), (b, y)] if x == -y && x > 0 => (a, x, b),
        [(a, x), (b, y)] if x == -y && y > 0 => (b, y, a),
        _ => return Err(bad(0, "need exactly one supply node and one demand node")),
    };
    if source == 0 || sink == 0 {
        return Err(bad(0, "node ids are 1-based"));
    }
    let mut network = FlowNetwork::new(nodes, source - 1, sink - 1)?;
    for (u, v, cap, cost) in arcs {
        if u == 0 || v == 0 {
            return Err(bad(0, "node ids are 1-based"));
        }
        network.add_edge(u - 1, v - 1, cap, cost)?;
    }
    Ok(DimacsProblem { network, supply })
}
