//! Brute-force transport oracle: min-cost flow on the complete bipartite graph
//! between the atoms of two measures, with arc-length costs on the circle.
//! Independent of the CDF formula used by the library.

pub fn arc(x: f64, y: f64) -> f64 {
    let d = (x - y).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Optimal transport cost between `(position, weight)` lists of equal total mass.
pub fn transport_cost(supply: &[(f64, f64)], demand: &[(f64, f64)]) -> f64 {
    let n = supply.len();
    let m = demand.len();
    let cost: Vec<Vec<f64>> = supply
        .iter()
        .map(|&(x, _)| demand.iter().map(|&(y, _)| arc(x, y)).collect())
        .collect();
    let mut left: Vec<f64> = supply.iter().map(|a| a.1).collect();
    let mut right: Vec<f64> = demand.iter().map(|b| b.1).collect();
    let mut flow = vec![vec![0.0f64; m]; n];
    // node potentials keep reduced costs nonnegative for Dijkstra
    let mut pot_l = vec![0.0f64; n];
    let mut pot_r = vec![0.0f64; m];
    let eps = 1e-15;

    for round in 0.. {
        assert!(round <= 4 * (n + m) + 16, "transport oracle failed to terminate");
        if left.iter().all(|&s| s <= eps) || right.iter().all(|&d| d <= eps) {
            break;
        }
        // Dijkstra over L ∪ R from a virtual source attached to every L node
        // that still has supply.
        let inf = f64::INFINITY;
        let mut dist_l = vec![inf; n];
        let mut dist_r = vec![inf; m];
        let mut prev_r = vec![usize::MAX; m]; // R_j reached from L_i
        let mut prev_l = vec![usize::MAX; n]; // L_i reached from R_j (backward edge)
        let mut done_l = vec![false; n];
        let mut done_r = vec![false; m];
        // supply nodes never change potential (they sit at distance 0), so
        // the source edges keep reduced cost 0
        for i in 0..n {
            if left[i] > eps {
                dist_l[i] = 0.0;
            }
        }
        loop {
            let mut best = inf;
            let mut pick: Option<(bool, usize)> = None;
            for i in 0..n {
                if !done_l[i] && dist_l[i] < best {
                    best = dist_l[i];
                    pick = Some((true, i));
                }
            }
            for j in 0..m {
                if !done_r[j] && dist_r[j] < best {
                    best = dist_r[j];
                    pick = Some((false, j));
                }
            }
            let Some((is_left, k)) = pick else { break };
            if is_left {
                done_l[k] = true;
                for j in 0..m {
                    let rc = cost[k][j] + pot_l[k] - pot_r[j];
                    let nd = dist_l[k] + rc.max(0.0);
                    if nd < dist_r[j] {
                        dist_r[j] = nd;
                        prev_r[j] = k;
                    }
                }
            } else {
                done_r[k] = true;
                for i in 0..n {
                    if flow[i][k] > eps {
                        let rc = -cost[i][k] + pot_r[k] - pot_l[i];
                        let nd = dist_r[k] + rc.max(0.0);
                        if nd < dist_l[i] {
                            dist_l[i] = nd;
                            prev_l[i] = k;
                        }
                    }
                }
            }
        }
        // cheapest sink with remaining demand, compared in true path cost
        // (the source keeps potential 0 throughout)
        let mut sink = None;
        let mut best = inf;
        for j in 0..m {
            if right[j] > eps && dist_r[j] + pot_r[j] < best {
                best = dist_r[j] + pot_r[j];
                sink = Some(j);
            }
        }
        let Some(sink) = sink else { break };
        // trace the path back and find the bottleneck
        let mut path = Vec::new(); // (i, j, forward)
        let mut j = sink;
        let source;
        loop {
            let i = prev_r[j];
            path.push((i, j, true));
            if prev_l[i] == usize::MAX {
                source = i;
                break;
            }
            let jj = prev_l[i];
            path.push((i, jj, false));
            j = jj;
        }
        let mut amount = left[source].min(right[sink]);
        for &(i, j, forward) in &path {
            if !forward {
                amount = amount.min(flow[i][j]);
            }
        }
        for &(i, j, forward) in &path {
            if forward {
                flow[i][j] += amount;
            } else {
                flow[i][j] -= amount;
            }
        }
        left[source] -= amount;
        right[sink] -= amount;
        for i in 0..n {
            if dist_l[i].is_finite() {
                pot_l[i] += dist_l[i];
            }
        }
        for j in 0..m {
            if dist_r[j].is_finite() {
                pot_r[j] += dist_r[j];
            }
        }
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..m {
            total += flow[i][j] * cost[i][j];
        }
    }
    total
}

/// Lebesgue measure discretised at `n` cell midpoints, each of weight `1/n`.
pub fn midpoint_lebesgue(n: usize) -> Vec<(f64, f64)> {
    (0..n).map(|i| ((i as f64 + 0.5) / n as f64, 1.0 / n as f64)).collect()
}
