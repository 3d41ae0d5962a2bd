//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here reuses the library's search code: walks are enumerated
//! explicitly and the LP optimum is found by enumerating basic feasible
//! points.

#![allow(dead_code)]

use maxmin_local::instance::Instance;
use maxmin_local::io::{random_instance, GeneratorParams};
use maxmin_local::rational::Rational;
use maxmin_local::transform::{ColouredGraph, EdgeKind};
use num_bigint::BigInt;
use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Valid random instance whose parameters are drawn from `seed`.
pub fn sampled_instance(seed: u64, max_agents: usize, max_vi: usize, max_vk: usize) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = GeneratorParams::sample(&mut rng, max_agents, max_vi, max_vk);
    random_instance(&params).expect("sampled parameters are satisfiable")
}

/// Every alternating walk from `start` beginning with `first` and having at
/// most `max_edges` edges, reported as (edge count, K-length, last kind,
/// end vertex).
pub fn enumerate_walks(
    graph: &ColouredGraph,
    start: usize,
    first: EdgeKind,
    max_edges: usize,
    visit: &mut dyn FnMut(usize, u64, EdgeKind, usize),
) {
    fn go(
        graph: &ColouredGraph,
        at: usize,
        next: EdgeKind,
        edges: usize,
        k: u64,
        max_edges: usize,
        visit: &mut dyn FnMut(usize, u64, EdgeKind, usize),
    ) {
        if edges == max_edges {
            return;
        }
        for &(e, u) in graph.neighbours(at) {
            if graph.edges()[e].kind != next {
                continue;
            }
            let k = k + u64::from(next == EdgeKind::K);
            visit(edges + 1, k, next, u);
            go(graph, u, next.other(), edges + 1, k, max_edges, visit);
        }
    }
    go(graph, start, first, 0, 0, max_edges, visit);
}

/// `a(v, first, last, 0)` by enumeration. A shortest such walk never
/// repeats a (vertex, kind of next edge) state, so only walks that are
/// simple in that sense are explored.
pub fn brute_min_k_length(graph: &ColouredGraph, v: usize, first: EdgeKind, last: EdgeKind) -> Option<u64> {
    fn go(
        graph: &ColouredGraph,
        at: usize,
        next: EdgeKind,
        k: u64,
        last: EdgeKind,
        seen: &mut Vec<(usize, EdgeKind)>,
        best: &mut Option<u64>,
    ) {
        for &(e, u) in graph.neighbours(at) {
            if graph.edges()[e].kind != next {
                continue;
            }
            let k = k + u64::from(next == EdgeKind::K);
            if next == last && graph.is_zero(u) && best.is_none_or(|b| k < b) {
                *best = Some(k);
            }
            let state = (u, next.other());
            if !seen.contains(&state) {
                seen.push(state);
                go(graph, u, next.other(), k, last, seen, best);
                seen.pop();
            }
        }
    }
    let mut best = None;
    go(graph, v, first, 0, last, &mut vec![(v, first)], &mut best);
    best
}

/// `min{A(v, first), R}` by enumerating walks of up to `2R + 1` edges.
pub fn brute_max_k_length(graph: &ColouredGraph, v: usize, first: EdgeKind, radius: u64) -> u64 {
    let mut best = 0;
    enumerate_walks(graph, v, first, 2 * radius as usize + 1, &mut |_, k, _, _| {
        best = best.max(k.min(radius));
    });
    best
}

/// Small exact rationals for the enumeration oracle; coefficients are 0/±1
/// and systems are at most 7×7, far from overflowing.
pub type Small = Ratio<i128>;

/// Solves `a x = b` by Gauss-Jordan elimination; `None` if singular.
fn solve_square(mut a: Vec<Vec<Small>>, mut b: Vec<Small>) -> Option<Vec<Small>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| a[r][col] != Small::from_integer(0))?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let p = a[col][col];
        for c in &mut a[col][col..] {
            *c /= p;
        }
        b[col] /= p;
        for r in 0..n {
            if r != col && a[r][col] != Small::from_integer(0) {
                let f = a[r][col];
                let pivot_row = a[col].clone();
                for (c, t) in a[r][col..].iter_mut().zip(&pivot_row[col..]) {
                    *c -= f * t;
                }
                let t = b[col];
                b[r] -= f * t;
            }
        }
    }
    Some(b)
}

fn combinations(n: usize, k: usize, visit: &mut dyn FnMut(&[usize])) {
    fn go(start: usize, n: usize, k: usize, picked: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if picked.len() == k {
            visit(picked);
            return;
        }
        for i in start..=n - (k - picked.len()) {
            picked.push(i);
            go(i + 1, n, k, picked, visit);
            picked.pop();
        }
    }
    if k <= n {
        go(0, n, k, &mut Vec::with_capacity(k), visit);
    }
}

/// LP optimum as the best basic feasible point: every choice of `n + 1`
/// tight constraints among party rows, resource rows and the bounds
/// `x ≥ 0, ω ≥ 0` is solved exactly and kept if feasible.
pub fn bfp_optimum(instance: &Instance) -> Rational {
    let agents = instance.agents();
    let n = agents.len();
    let col = |a: &str| agents.iter().position(|b| b == a).unwrap();
    let zero = Small::from_integer(0);
    let one = Small::from_integer(1);
    // Rows `coeffs · (x, ω) ≤ rhs`.
    let mut rows: Vec<(Vec<Small>, Small)> = Vec::new();
    for members in instance.parties().values() {
        let mut r = vec![zero; n + 1];
        for m in members {
            r[col(m)] = -one;
        }
        r[n] = one;
        rows.push((r, zero));
    }
    for members in instance.resources().values() {
        let mut r = vec![zero; n + 1];
        for m in members {
            r[col(m)] = one;
        }
        rows.push((r, one));
    }
    for j in 0..=n {
        let mut r = vec![zero; n + 1];
        r[j] = -one;
        rows.push((r, zero));
    }
    let mut best: Option<Small> = None;
    combinations(rows.len(), n + 1, &mut |pick| {
        let a = pick.iter().map(|&i| rows[i].0.clone()).collect();
        let b = pick.iter().map(|&i| rows[i].1).collect();
        let Some(point) = solve_square(a, b) else {
            return;
        };
        let feasible = rows
            .iter()
            .all(|(r, rhs)| r.iter().zip(&point).map(|(c, x)| c * x).sum::<Small>() <= *rhs);
        if feasible && best.is_none_or(|b| point[n] > b) {
            best = Some(point[n]);
        }
    });
    let best = best.expect("the origin is a basic feasible point");
    Rational::new(BigInt::from(*best.numer()), BigInt::from(*best.denom()))
}
