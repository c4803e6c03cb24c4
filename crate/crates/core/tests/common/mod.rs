//! Shared test oracles.

/// Successive shortest paths, one unit at a time, with Bellman–Ford over the
/// residual arcs. Slow and simple on purpose.
#[allow(dead_code)]
pub fn oracle(n: usize, edges: &[(usize, usize, i64, i64)], s: usize, t: usize) -> (i64, i64) {
    // residual arcs: (from, to, cap, cost, partner)
    let mut arcs: Vec<(usize, usize, i64, i64, usize)> = Vec::new();
    for &(u, v, c, w) in edges {
        let k = arcs.len();
        arcs.push((u, v, c, w, k + 1));
        arcs.push((v, u, 0, -w, k));
    }
    let (mut value, mut cost) = (0i64, 0i64);
    loop {
        let mut dist = vec![i64::MAX; n];
        let mut via = vec![usize::MAX; n];
        dist[s] = 0;
        for _ in 0..n {
            let mut changed = false;
            for (k, &(u, v, c, w, _)) in arcs.iter().enumerate() {
                if c > 0 && dist[u] != i64::MAX && dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                    via[v] = k;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if dist[t] == i64::MAX {
            return (value, cost);
        }
        let mut v = t;
        while v != s {
            let k = via[v];
            arcs[k].2 -= 1;
            let p = arcs[k].4;
            arcs[p].2 += 1;
            v = arcs[k].0;
        }
        value += 1;
        cost += dist[t];
    }
}

/// Largest number of galaxies placed in containing discs with at most `cap`
/// per disc, by depth-first search over every choice (including none),
/// pruned only when even placing all remaining galaxies cannot win.
#[allow(dead_code)]
pub fn legal_oracle(containing: &[Vec<usize>], discs: usize, cap: usize) -> usize {
    fn go(i: usize, sets: &[Vec<usize>], load: &mut [usize], cap: usize, placed: usize, best: &mut usize) {
        if placed + (sets.len() - i) <= *best {
            return;
        }
        if i == sets.len() {
            *best = placed;
            return;
        }
        for &d in &sets[i] {
            if load[d] < cap {
                load[d] += 1;
                go(i + 1, sets, load, cap, placed + 1, best);
                load[d] -= 1;
            }
        }
        go(i + 1, sets, load, cap, placed, best);
    }
    let mut best = 0;
    go(0, containing, &mut vec![0; discs], cap, 0, &mut best);
    best
}

/// Best `(assigned, cost)` over assignments of each galaxy to one of its
/// `(disc, cost)` candidates or to nothing, at most `cap` per disc: most
/// galaxies first, then least cost. Dynamic program over the vector of disc
/// loads, which enumerates every reachable load state.
#[allow(dead_code)]
pub fn relaxed_oracle(candidates: &[Vec<(usize, i64)>], discs: usize, cap: usize) -> (usize, i64) {
    use std::collections::HashMap;
    let mut states: HashMap<Vec<usize>, (usize, i64)> = HashMap::new();
    states.insert(vec![0; discs], (0, 0));
    let better = |a: (usize, i64), b: (usize, i64)| a.0 > b.0 || (a.0 == b.0 && a.1 < b.1);
    for cands in candidates {
        let mut next: HashMap<Vec<usize>, (usize, i64)> = HashMap::new();
        let mut offer = |key: Vec<usize>, val: (usize, i64)| match next.get(&key) {
            Some(&old) if !better(val, old) => {}
            _ => {
                next.insert(key, val);
            }
        };
        for (load, &(count, cost)) in &states {
            offer(load.clone(), (count, cost));
            for &(d, c) in cands {
                if load[d] < cap {
                    let mut l = load.clone();
                    l[d] += 1;
                    offer(l, (count + 1, cost + c));
                }
            }
        }
        states = next;
    }
    states
        .values()
        .copied()
        .fold((0, 0), |best, v| if better(v, best) { v } else { best })
}
