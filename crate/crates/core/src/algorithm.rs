//! The local p/q rule and the end-to-end solve pipeline.
//!
//! Each x-vertex picks
//!
//! ```text
//! p = b(v,I,K,0)                 if a(v,K,K,0) ≤ R, else min{b(v,I,K,0), B(v,K)}
//! q = b(v,K,K,0)                 if a(v,I,K,0) ≤ R, else min{b(v,K,K,0), B(v,I)}
//! x = p / (p + q)
//! ```
//!
//! which needs information from `2R` hops of the coloured graph only.

use std::collections::{BTreeMap, HashMap};
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use thiserror::Error;

use crate::instance::{
    self, check_feasible, degree_bounds, validate, AgentId, Assignment, Hyperedge, HypergraphView, Instance,
    InstanceError,
};
use crate::rational::{self, Rational};
use crate::reduction::{scale_back, split_with_delta, ReductionError, ReductionMap};
use crate::transform::{extract_solution, transform, ColouredGraph, Pruned, TransformError};
use crate::walks::{compute_stats, simulate_rounds, WalkError, WalkStats};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgorithmError {
    #[error("p = 0 computed for stats {0}; upstream statistics are inconsistent")]
    ZeroP(String),
    #[error("the guarantee needs R ≥ 2 (got {0})")]
    RadiusTooSmall(u64),
    #[error("the guarantee needs Δ ≥ 2 (got {0})")]
    DeltaTooSmall(usize),
    #[error(transparent)]
    Walk(#[from] WalkError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Reduction(#[from] ReductionError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error("solution violates resources {0:?}")]
    Infeasible(Vec<String>),
}

impl From<WalkError> for SolveError {
    fn from(e: WalkError) -> Self {
        SolveError::Algorithm(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PQChoice {
    pub p: u64,
    pub q: u64,
    pub x: Rational,
}

pub fn choose_pq(stats: &WalkStats) -> Result<PQChoice, AlgorithmError> {
    let p = if stats.akk_le_r {
        stats.bik
    } else {
        stats.bik.min(stats.bk)
    };
    let q = if stats.aik_le_r {
        stats.bkk
    } else {
        stats.bkk.min(stats.bi)
    };
    if p == 0 {
        return Err(AlgorithmError::ZeroP(stats.to_string()));
    }
    Ok(PQChoice {
        p,
        q,
        x: rational::ratio(p as i64, (p + q) as i64),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum StatsSource {
    /// Centralised walk searches.
    #[default]
    Central,
    /// The `2R`-round message-passing protocol.
    Rounds,
}

fn stats_by(graph: &ColouredGraph, radius: u64, source: StatsSource) -> Result<IndexMap<String, WalkStats>, WalkError> {
    match source {
        StatsSource::Central => compute_stats(graph, radius),
        StatsSource::Rounds => simulate_rounds(graph, radius),
    }
}

/// p, q and x for every x-vertex, keyed by vertex id.
pub fn pq_choices(
    graph: &ColouredGraph,
    radius: u64,
    source: StatsSource,
) -> Result<IndexMap<String, PQChoice>, AlgorithmError> {
    stats_by(graph, radius, source)?
        .into_iter()
        .map(|(v, s)| Ok((v, choose_pq(&s)?)))
        .collect()
}

/// x-vertices get their p/q value, zero vertices get 0.
pub fn assign_values(graph: &ColouredGraph, radius: u64) -> Result<HashMap<String, Rational>, AlgorithmError> {
    let choices = pq_choices(graph, radius, StatsSource::Central)?;
    Ok(vertex_values(graph, &choices))
}

fn vertex_values(graph: &ColouredGraph, choices: &IndexMap<String, PQChoice>) -> HashMap<String, Rational> {
    let mut out: HashMap<String, Rational> = graph
        .zero_vertices()
        .map(|v| (graph.id(v).to_string(), rational::zero()))
        .collect();
    out.extend(choices.iter().map(|(v, c)| (v.clone(), c.x.clone())));
    out
}

/// `Δ/2 + Δ/(2(R−1))`.
pub fn guarantee(delta: usize, radius: u64) -> Result<Rational, AlgorithmError> {
    if delta < 2 {
        return Err(AlgorithmError::DeltaTooSmall(delta));
    }
    if radius < 2 {
        return Err(AlgorithmError::RadiusTooSmall(radius));
    }
    let d = delta as i64;
    Ok(rational::ratio(d, 2) + rational::ratio(d, 2 * (radius as i64 - 1)))
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SolveOptions {
    pub stats: StatsSource,
    /// Fixed `Δ` instead of the instance's own `max(2, max |V_i|)`.
    pub delta: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub radius: u64,
    pub omega: Rational,
    /// `Δ/2 + Δ/(2(R−1))`, absent for `R = 1`.
    pub guarantee_factor: Option<Rational>,
    pub feasible: bool,
    pub delta: usize,
    /// Every agent was pruned, so the graph is empty and the output is all
    /// zero.
    pub empty_graph: bool,
    pub timings: Vec<(&'static str, Duration)>,
}

/// Every intermediate artefact of one solve.
#[derive(Debug, Clone)]
pub struct SolveTrace {
    pub assignment: Assignment,
    pub report: SolveReport,
    pub reduction: ReductionMap,
    pub pruned: Pruned,
    pub graph: ColouredGraph,
    pub choices: IndexMap<String, PQChoice>,
    pub vertex_values: HashMap<String, Rational>,
}

pub fn solve(instance: &Instance, radius: u64) -> Result<(Assignment, SolveReport), SolveError> {
    let trace = solve_traced(instance, radius, &SolveOptions::default())?;
    Ok((trace.assignment, trace.report))
}

/// split → prune → build graph → p/q values → extract → scale back, with an
/// exact feasibility check on the result.
pub fn solve_traced(instance: &Instance, radius: u64, options: &SolveOptions) -> Result<SolveTrace, SolveError> {
    if radius == 0 {
        return Err(WalkError::ZeroRadius.into());
    }
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, Duration)>| {
        let now = Instant::now();
        timings.push((name, now - clock));
        clock = now;
    };

    let reduction = split_with_delta(instance, options.delta.unwrap_or(2))?;
    lap("split", &mut timings);
    let (pruned, graph) = transform(&reduction.reduced)?;
    lap("transform", &mut timings);
    let choices = pq_choices(&graph, radius, options.stats)?;
    lap("assign", &mut timings);
    let vertex_values = vertex_values(&graph, &choices);
    let x_reduced = extract_solution(&graph, &vertex_values)?;
    let assignment = scale_back(&reduction, &x_reduced)?;
    lap("scale", &mut timings);

    let violated = check_feasible(instance, &assignment)?;
    if !violated.is_empty() {
        return Err(SolveError::Infeasible(violated));
    }
    let omega = instance::utility(instance, &assignment)?;
    lap("check", &mut timings);

    let report = SolveReport {
        radius,
        omega,
        guarantee_factor: (radius >= 2).then(|| guarantee(reduction.delta, radius)).transpose()?,
        feasible: true,
        delta: reduction.delta,
        empty_graph: graph.vertex_count() == 0,
        timings,
    };
    Ok(SolveTrace {
        assignment,
        report,
        reduction,
        pruned,
        graph,
        choices,
        vertex_values,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LocalityError {
    #[error("agent `{0}` is missing from one of the instances")]
    MissingAgent(AgentId),
    #[error("local inputs differ within radius {radius} at agent `{agent}`")]
    BallsDiffer { radius: usize, agent: AgentId },
    #[error("the instances use different Δ ({0} vs {1})")]
    DeltaDiffers(usize, usize),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocalityVerdict {
    pub agent: AgentId,
    pub radius: usize,
    pub value_a: Rational,
    pub value_b: Rational,
    pub equal: bool,
}

/// Radius of identical input needed around an agent for a horizon-`2R`
/// algorithm, including slack for pruning, padding and splitting.
pub fn locality_radius(radius: u64) -> usize {
    2 * radius as usize + 2
}

/// Local input of `v`: its incident hyperedges, compared as sets.
fn local_input(view: &HypergraphView, v: &str) -> BTreeMap<(instance::SupportKind, String), Vec<String>> {
    view.incident(v)
        .map(|Hyperedge { kind, id, members }| {
            let mut ms = members.clone();
            ms.sort();
            ((*kind, id.clone()), ms)
        })
        .collect()
}

fn effective_delta(instance: &Instance) -> Result<usize, InstanceError> {
    Ok(degree_bounds(instance)?.delta_vi.max(2))
}

/// Solves both instances and compares the value chosen by `v`, after
/// checking that every agent within `2R + 2` hops of `v` has identical local
/// input in both. `Δ` is a global constant of the pipeline, so both instances
/// must also agree on it.
pub fn locality_check(a: &Instance, b: &Instance, v: &str, radius: u64) -> Result<LocalityVerdict, LocalityError> {
    for inst in [a, b] {
        if !inst.has_agent(v) {
            return Err(LocalityError::MissingAgent(v.to_string()));
        }
        let violations = validate(inst);
        if !violations.is_empty() {
            return Err(InstanceError::Invalid(violations).into());
        }
    }
    let r = locality_radius(radius);
    let (va, vb) = (HypergraphView::new(a), HypergraphView::new(b));
    let ball_a = instance::ball(&va, v, r)?;
    let ball_b = instance::ball(&vb, v, r)?;
    if ball_a != ball_b {
        let agent = ball_a.symmetric_difference(&ball_b).next().cloned().unwrap_or_default();
        return Err(LocalityError::BallsDiffer { radius: r, agent });
    }
    if let Some(agent) = ball_a.iter().find(|u| local_input(&va, u) != local_input(&vb, u)) {
        return Err(LocalityError::BallsDiffer {
            radius: r,
            agent: agent.clone(),
        });
    }
    let (da, db) = (effective_delta(a)?, effective_delta(b)?);
    if da != db {
        return Err(LocalityError::DeltaDiffers(da, db));
    }
    let (xa, _) = solve(a, radius)?;
    let (xb, _) = solve(b, radius)?;
    let value_a = xa.get(v).cloned().expect("solve covers every agent");
    let value_b = xb.get(v).cloned().expect("solve covers every agent");
    Ok(LocalityVerdict {
        agent: v.to_string(),
        radius: r,
        equal: value_a == value_b,
        value_a,
        value_b,
    })
}
