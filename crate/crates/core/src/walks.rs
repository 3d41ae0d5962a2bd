//! Alternating-walk statistics on the coloured graph.
//!
//! A walk alternates K-edges and I-edges and may repeat vertices and edges;
//! its K-length is the number of K-edges it uses. For an x-vertex `v` we need
//!
//! * `a(v, X, Y, 0)`: the minimum K-length of a walk that starts with an
//!   X-edge, ends with a Y-edge and stops at a zero vertex (∞ if none);
//! * `A(v, X)`: the maximum K-length of any walk starting with an X-edge;
//!
//! and their truncations `b = min(a, R)`, `B = min(A, R)`. The walk needs at
//! least one edge.
//!
//! Two routes compute the same statistics: a central one ([`compute_stats`])
//! and a synchronous message-passing protocol ([`simulate_rounds`]) that runs
//! for exactly `2R` rounds.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write as _};
use std::sync::Arc;

use indexmap::IndexMap;
use thiserror::Error;

use crate::transform::ColouredGraph;
pub use crate::transform::EdgeKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtNat {
    Finite(u64),
    Infinite,
}

impl ExtNat {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtNat::Finite(_))
    }

    /// `min(self, cap)`.
    pub fn truncate(self, cap: u64) -> u64 {
        match self {
            ExtNat::Finite(n) => n.min(cap),
            ExtNat::Infinite => cap,
        }
    }

    pub fn at_most(self, bound: u64) -> bool {
        matches!(self, ExtNat::Finite(n) if n <= bound)
    }
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Finite(n) => write!(f, "{n}"),
            ExtNat::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WalkError {
    #[error("`{0}` is not an x-vertex of the graph")]
    NotXVertex(String),
    #[error("radius must be at least 1")]
    ZeroRadius,
}

/// Per x-vertex statistics consumed by the p/q rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WalkStats {
    pub radius: u64,
    /// `a(v,K,K,0) ≤ R`
    pub akk_le_r: bool,
    /// `a(v,I,K,0) ≤ R`
    pub aik_le_r: bool,
    pub bik: u64,
    pub bkk: u64,
    pub bi: u64,
    pub bk: u64,
}

impl fmt::Display for WalkStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "aKK<=R:{} aIK<=R:{} bIK:{} bKK:{} BI:{} BK:{}",
            u8::from(self.akk_le_r),
            u8::from(self.aik_le_r),
            self.bik,
            self.bkk,
            self.bi,
            self.bk
        )
    }
}

/// One `stats <id> ...` line per x-vertex.
pub fn format_stats(stats: &IndexMap<String, WalkStats>) -> String {
    let mut out = String::new();
    for (id, s) in stats {
        let _ = writeln!(out, "stats {id} {s}");
    }
    out
}

fn x_vertex(graph: &ColouredGraph, v: &str) -> Result<usize, WalkError> {
    match graph.index_of(v) {
        Some(i) if !graph.is_zero(i) => Ok(i),
        _ => Err(WalkError::NotXVertex(v.to_string())),
    }
}

/// `a(v, X, Y, 0)` for a vertex by id.
pub fn min_k_length(graph: &ColouredGraph, v: &str, first: EdgeKind, last: EdgeKind) -> Result<ExtNat, WalkError> {
    Ok(min_k_length_from(graph, x_vertex(graph, v)?, first, last))
}

/// `min{A(v, X), R}` for a vertex by id.
pub fn max_k_length_bounded(graph: &ColouredGraph, v: &str, first: EdgeKind, radius: u64) -> Result<u64, WalkError> {
    if radius == 0 {
        return Err(WalkError::ZeroRadius);
    }
    Ok(max_k_length_from(graph, x_vertex(graph, v)?, first, radius))
}

fn state(v: usize, next: EdgeKind) -> usize {
    2 * v + next.index()
}

/// 0/1 breadth-first search over states `(vertex, kind of next edge)`; a
/// K-edge costs 1 and an I-edge 0. Works from any start vertex.
pub(crate) fn min_k_length_from(graph: &ColouredGraph, start: usize, first: EdgeKind, last: EdgeKind) -> ExtNat {
    let mut dist: Vec<Option<u64>> = vec![None; 2 * graph.vertex_count()];
    let mut queue = VecDeque::new();
    dist[state(start, first)] = Some(0);
    queue.push_back((start, first, 0u64));
    let mut best = ExtNat::Infinite;
    while let Some((w, next, d)) = queue.pop_front() {
        if dist[state(w, next)] != Some(d) {
            continue;
        }
        let cost = u64::from(next == EdgeKind::K);
        let nd = d + cost;
        for (_, u) in graph.neighbours_by(w, next) {
            if next == last && graph.is_zero(u) {
                best = best.min(ExtNat::Finite(nd));
            }
            let s = state(u, next.other());
            if dist[s].is_none_or(|old| nd < old) {
                dist[s] = Some(nd);
                if cost == 0 {
                    queue.push_front((u, next.other(), nd));
                } else {
                    queue.push_back((u, next.other(), nd));
                }
            }
        }
    }
    best
}

/// K-length of an alternating walk with `edges` edges whose first edge has
/// kind `first`.
pub fn k_length_of(first: EdgeKind, edges: u64) -> u64 {
    match first {
        EdgeKind::K => edges.div_ceil(2),
        EdgeKind::I => edges / 2,
    }
}

/// Layered reachability over at most `2R + 1` edges. The K-length of an
/// alternating walk is fixed by its first kind and its edge count, so the
/// longest reachable layer gives the maximum; reaching K-length `R` stops
/// the search.
pub(crate) fn max_k_length_from(graph: &ColouredGraph, start: usize, first: EdgeKind, radius: u64) -> u64 {
    let n = graph.vertex_count();
    let mut frontier = vec![false; 2 * n];
    frontier[state(start, first)] = true;
    let mut best = 0;
    for t in 1..=2 * radius + 1 {
        let mut next_frontier = vec![false; 2 * n];
        let mut any = false;
        for w in 0..n {
            for kind in EdgeKind::BOTH {
                if !frontier[state(w, kind)] {
                    continue;
                }
                for (_, u) in graph.neighbours_by(w, kind) {
                    next_frontier[state(u, kind.other())] = true;
                    any = true;
                }
            }
        }
        if !any {
            break;
        }
        best = k_length_of(first, t).min(radius);
        if best == radius {
            break;
        }
        frontier = next_frontier;
    }
    best
}

fn stats_for(graph: &ColouredGraph, v: usize, radius: u64) -> WalkStats {
    let akk = min_k_length_from(graph, v, EdgeKind::K, EdgeKind::K);
    let aik = min_k_length_from(graph, v, EdgeKind::I, EdgeKind::K);
    WalkStats {
        radius,
        akk_le_r: akk.at_most(radius),
        aik_le_r: aik.at_most(radius),
        bik: aik.truncate(radius),
        bkk: akk.truncate(radius),
        bi: max_k_length_from(graph, v, EdgeKind::I, radius),
        bk: max_k_length_from(graph, v, EdgeKind::K, radius),
    }
}

/// Central computation of the statistics of every x-vertex, keyed by id.
pub fn compute_stats(graph: &ColouredGraph, radius: u64) -> Result<IndexMap<String, WalkStats>, WalkError> {
    if radius == 0 {
        return Err(WalkError::ZeroRadius);
    }
    Ok(graph
        .x_vertices()
        .map(|v| (graph.id(v).to_string(), stats_for(graph, v, radius)))
        .collect())
}

/// What a vertex knows about walks that start at it with a given first edge
/// kind and end with a given last edge kind: the K-lengths (at most `R`)
/// achieved, and the K-lengths of those that stop at a zero vertex.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WalkTable {
    pub achieved: BTreeSet<u64>,
    pub to_zero: BTreeSet<u64>,
}

/// Indexed `[first kind][last kind]`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeState {
    pub tables: [[WalkTable; 2]; 2],
}

impl NodeState {
    pub fn table(&self, first: EdgeKind, last: EdgeKind) -> &WalkTable {
        &self.tables[first.index()][last.index()]
    }

    fn stats(&self, radius: u64) -> WalkStats {
        let zero_k = |first: EdgeKind| self.table(first, EdgeKind::K).to_zero.first().copied();
        let longest = |first: EdgeKind| {
            EdgeKind::BOTH
                .iter()
                .filter_map(|&last| self.table(first, last).achieved.last().copied())
                .max()
                .unwrap_or(0)
        };
        let akk = zero_k(EdgeKind::K);
        let aik = zero_k(EdgeKind::I);
        WalkStats {
            radius,
            akk_le_r: akk.is_some(),
            aik_le_r: aik.is_some(),
            bik: aik.unwrap_or(radius),
            bkk: akk.unwrap_or(radius),
            bi: longest(EdgeKind::I),
            bk: longest(EdgeKind::K),
        }
    }
}

/// A state snapshot sent across one edge, tagged with the edge kind.
#[derive(Debug, Clone)]
pub struct Message {
    pub kind: EdgeKind,
    pub sender_is_zero: bool,
    pub state: Arc<NodeState>,
}

/// Synchronous lockstep simulation. Every round, each vertex sends its
/// previous-round state over each incident edge; each vertex then rebuilds
/// its state from its inbox alone.
#[derive(Debug, Clone)]
pub struct Simulation<'g> {
    graph: &'g ColouredGraph,
    radius: u64,
    states: Vec<Arc<NodeState>>,
    rounds: u64,
}

impl<'g> Simulation<'g> {
    pub fn new(graph: &'g ColouredGraph, radius: u64) -> Result<Self, WalkError> {
        if radius == 0 {
            return Err(WalkError::ZeroRadius);
        }
        Ok(Self {
            graph,
            radius,
            states: (0..graph.vertex_count())
                .map(|_| Arc::new(NodeState::default()))
                .collect(),
            rounds: 0,
        })
    }

    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn state(&self, v: usize) -> &NodeState {
        &self.states[v]
    }

    fn inbox(&self, v: usize) -> Vec<Message> {
        self.graph
            .neighbours(v)
            .iter()
            .map(|&(e, u)| Message {
                kind: self.graph.edges()[e].kind,
                sender_is_zero: self.graph.is_zero(u),
                state: Arc::clone(&self.states[u]),
            })
            .collect()
    }

    fn receive(&self, inbox: &[Message]) -> NodeState {
        let mut out = NodeState::default();
        for msg in inbox {
            // The walk starts here with `msg.kind`; the sender continues it
            // with the other kind.
            let first = msg.kind;
            let step = u64::from(first == EdgeKind::K);
            let single = &mut out.tables[first.index()][first.index()];
            if step <= self.radius {
                single.achieved.insert(step);
                if msg.sender_is_zero {
                    single.to_zero.insert(step);
                }
            }
            for last in EdgeKind::BOTH {
                let theirs = msg.state.table(first.other(), last);
                let mine = &mut out.tables[first.index()][last.index()];
                let shift = |set: &BTreeSet<u64>| {
                    set.iter()
                        .map(move |&l| l + step)
                        .filter(|&l| l <= self.radius)
                        .collect::<Vec<_>>()
                };
                mine.achieved.extend(shift(&theirs.achieved));
                mine.to_zero.extend(shift(&theirs.to_zero));
            }
        }
        out
    }

    pub fn step(&mut self) {
        let next: Vec<Arc<NodeState>> = (0..self.graph.vertex_count())
            .map(|v| Arc::new(self.receive(&self.inbox(v))))
            .collect();
        self.states = next;
        self.rounds += 1;
    }

    pub fn run(&mut self) {
        while self.rounds < 2 * self.radius {
            self.step();
        }
    }

    pub fn stats(&self) -> IndexMap<String, WalkStats> {
        self.graph
            .x_vertices()
            .map(|v| (self.graph.id(v).to_string(), self.states[v].stats(self.radius)))
            .collect()
    }
}

/// Runs the protocol for exactly `2R` rounds and reads off the statistics.
pub fn simulate_rounds(graph: &ColouredGraph, radius: u64) -> Result<IndexMap<String, WalkStats>, WalkError> {
    let mut sim = Simulation::new(graph, radius)?;
    sim.run();
    Ok(sim.stats())
}
