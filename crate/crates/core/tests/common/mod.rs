//! Independent oracles shared by the integration tests. Written from the
//! task definitions, not from the library's environment code.

#![allow(dead_code)]

/// Soft (entropy-regularized) value iteration for the two-state MDP:
/// `stay` keeps the state, `switch` flips it, rewards `[[0, 0.1], [1, 0]]`.
/// `alpha = 0` gives the hard Bellman optimum.
pub fn two_state_soft_q(gamma: f64, alpha: f64) -> [[f64; 2]; 2] {
    let r = [[0.0, 0.1], [1.0, 0.0]];
    let next = |s: usize, a: usize| if a == 1 { 1 - s } else { s };
    let mut q = [[0.0f64; 2]; 2];
    for _ in 0..5000 {
        let v: Vec<f64> = (0..2)
            .map(|s| {
                if alpha == 0.0 {
                    q[s][0].max(q[s][1])
                } else {
                    let m = q[s][0].max(q[s][1]);
                    m + alpha * (((q[s][0] - m) / alpha).exp() + ((q[s][1] - m) / alpha).exp()).ln()
                }
            })
            .collect();
        let mut fresh = [[0.0; 2]; 2];
        for s in 0..2 {
            for a in 0..2 {
                fresh[s][a] = r[s][a] + gamma * v[next(s, a)];
            }
        }
        q = fresh;
    }
    q
}

/// Optimal actions of a `size x size` goal grid for every (agent, goal)
/// pair, by value iteration with reward 1 on entering the goal.
/// Actions: 0 up (y+1), 1 down, 2 left (x-1), 3 right; walls block.
/// Returns `(agent, goal, optimal action set)` for agent != goal.
pub fn grid_optimal_actions(size: usize, gamma: f64) -> Vec<((usize, usize), (usize, usize), Vec<usize>)> {
    let step = |(x, y): (usize, usize), a: usize| match a {
        0 => (x, (y + 1).min(size - 1)),
        1 => (x, y.saturating_sub(1)),
        2 => (x.saturating_sub(1), y),
        _ => ((x + 1).min(size - 1), y),
    };
    let cells: Vec<(usize, usize)> = (0..size).flat_map(|y| (0..size).map(move |x| (x, y))).collect();
    let mut out = Vec::new();
    for &goal in &cells {
        let mut v = vec![0.0f64; size * size];
        let idx = |(x, y): (usize, usize)| y * size + x;
        let q = |v: &[f64], c: (usize, usize), a: usize| {
            let n = step(c, a);
            if n == goal {
                1.0
            } else {
                gamma * v[idx(n)]
            }
        };
        for _ in 0..200 {
            let mut fresh = v.clone();
            for &c in &cells {
                fresh[idx(c)] = if c == goal { 0.0 } else { (0..4).map(|a| q(&v, c, a)).fold(f64::MIN, f64::max) };
            }
            v = fresh;
        }
        for &c in &cells {
            if c == goal {
                continue;
            }
            let qs: Vec<f64> = (0..4).map(|a| q(&v, c, a)).collect();
            let best = qs.iter().cloned().fold(f64::MIN, f64::max);
            let set = (0..4).filter(|a| qs[*a] >= best - 1e-9).collect();
            out.push((c, goal, set));
        }
    }
    out
}

/// Grid state vector for `(agent, goal)` on a `size x size` grid.
pub fn grid_state(size: usize, agent: (usize, usize), goal: (usize, usize)) -> Vec<f64> {
    let s = (size - 1) as f64;
    let (ax, ay, gx, gy) = (agent.0 as f64, agent.1 as f64, goal.0 as f64, goal.1 as f64);
    vec![ax / s, ay / s, gx / s, gy / s, (gx - ax) / s, (gy - ay) / s]
}

/// Median with unreached runs (`None`) ranked above every finite value.
pub fn median_with_misses(values: &[Option<u64>]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().map(|x| x.map_or(f64::INFINITY, |s| s as f64)).collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    let m = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
    m.is_finite().then_some(m)
}
