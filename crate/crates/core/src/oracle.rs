//! Exact optimum of the max-min LP and walk-based upper bounds on it.
//!
//! The LP
//!
//! ```text
//! max ω  s.t.  ω − Σ_{v∈V_k} x_v ≤ 0  (k ∈ K)
//!              Σ_{v∈V_i} x_v ≤ 1      (i ∈ I)
//!              x ≥ 0, ω ≥ 0
//! ```
//!
//! has a feasible origin, so a slack basis starts the primal simplex
//! directly. Pivoting uses Bland's rule on a dense tableau of exact
//! rationals, which terminates without cycling.

use std::collections::HashMap;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::instance::{self, check_feasible, validate, Assignment, Instance, InstanceError};
use crate::rational::{self, Rational};
use crate::transform::{ColouredGraph, EdgeKind};
use crate::walks::{max_k_length_from, min_k_length_from, ExtNat};

pub const DEFAULT_AGENT_CAP: usize = 60;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("instance has {agents} agents, above the oracle cap of {cap}")]
    CapExceeded { agents: usize, cap: usize },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("simplex produced an inconsistent optimum: {0}")]
    Internal(String),
    #[error("malformed walk: {0}")]
    MalformedWalk(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub omega_star: Rational,
    pub witness: Assignment,
    pub iterations: u64,
}

impl OracleResult {
    /// Assignment file format plus an `iterations <n>` line.
    pub fn to_text(&self) -> String {
        let mut out = crate::io::write_assignment(&self.witness, &self.omega_star);
        out.push_str(&format!("iterations {}\n", self.iterations));
        out
    }
}

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    rows: Vec<Vec<Rational>>,
    /// Reduced costs `c_j − c_B B⁻¹ A_j`; the last entry is `−z`.
    objective: Vec<Rational>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let p = self.rows[row][col].clone();
        for a in self.rows[row].iter_mut() {
            *a /= &p;
        }
        let pivot_row = self.rows[row].clone();
        let eliminate = |target: &mut Vec<Rational>| {
            let factor = target[col].clone();
            if factor.is_zero() {
                return;
            }
            for (t, p) in target.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *t -= &factor * p;
                }
            }
        };
        for (r, target) in self.rows.iter_mut().enumerate() {
            if r != row {
                eliminate(target);
            }
        }
        eliminate(&mut self.objective);
        self.basis[row] = col;
    }

    /// Bland: smallest improving column, ratio ties broken by smallest basic
    /// variable index. Returns the number of pivots.
    fn run(&mut self) -> Result<u64, OracleError> {
        let mut iterations = 0;
        loop {
            let Some(col) = (0..self.cols).find(|&j| self.objective[j].is_positive()) else {
                return Ok(iterations);
            };
            let mut best: Option<(usize, Rational)> = None;
            for (r, row) in self.rows.iter().enumerate() {
                if !row[col].is_positive() {
                    continue;
                }
                let ratio = &row[self.cols] / &row[col];
                let better = match &best {
                    None => true,
                    Some((br, bv)) => ratio < *bv || (ratio == *bv && self.basis[r] < self.basis[*br]),
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            let Some((row, _)) = best else {
                return Err(OracleError::Internal("LP reported unbounded".into()));
            };
            self.pivot(row, col);
            iterations += 1;
        }
    }
}

pub fn optimum(instance: &Instance) -> Result<OracleResult, OracleError> {
    optimum_with_cap(instance, DEFAULT_AGENT_CAP)
}

pub fn optimum_with_cap(instance: &Instance, cap: usize) -> Result<OracleResult, OracleError> {
    let violations = validate(instance);
    if !violations.is_empty() {
        return Err(InstanceError::Invalid(violations).into());
    }
    let n = instance.agents().len();
    if n > cap {
        return Err(OracleError::CapExceeded { agents: n, cap });
    }
    let order = instance.agent_order();
    let omega = n;
    let n_rows = instance.parties().len() + instance.resources().len();
    let cols = n + 1 + n_rows;
    let mut rows = Vec::with_capacity(n_rows);
    let mut push_row = |members: &[String], omega_coeff: i64, rhs: i64| {
        let r = rows.len();
        let mut row = vec![rational::zero(); cols + 1];
        let sign = if omega_coeff == 0 { 1 } else { -1 };
        for m in members {
            row[order[m.as_str()]] = rational::int(sign);
        }
        row[omega] = rational::int(omega_coeff);
        row[n + 1 + r] = rational::one();
        row[cols] = rational::int(rhs);
        rows.push(row);
    };
    for members in instance.parties().values() {
        push_row(members, 1, 0);
    }
    for members in instance.resources().values() {
        push_row(members, 0, 1);
    }
    let mut objective = vec![rational::zero(); cols + 1];
    objective[omega] = rational::one();
    let mut tableau = Tableau {
        rows,
        objective,
        basis: (n + 1..cols).collect(),
        cols,
    };
    let iterations = tableau.run()?;

    let mut values = vec![rational::zero(); n + 1];
    for (r, &b) in tableau.basis.iter().enumerate() {
        if b <= n {
            values[b] = tableau.rows[r][cols].clone();
        }
    }
    let witness = Assignment::from_pairs(
        instance
            .agents()
            .iter()
            .zip(&values)
            .map(|(a, q)| (a.clone(), q.clone())),
    )?;
    let omega_star = instance::utility(instance, &witness)?;
    if omega_star != values[omega] || !check_feasible(instance, &witness)?.is_empty() {
        return Err(OracleError::Internal(format!(
            "ω = {} but witness utility is {}",
            rational::format(&values[omega]),
            rational::format(&omega_star)
        )));
    }
    Ok(OracleResult {
        omega_star,
        witness,
        iterations,
    })
}

/// Which walk family certified an upper bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundSource {
    /// A walk starting with an I-edge and ending with a K-edge of K-length
    /// `n` gives `ω* ≤ 1 + 1/n`.
    LongWalk { k_length: u64 },
    /// A walk between zero vertices starting and ending with K-edges of
    /// K-length `n` gives `ω* ≤ 1 − 1/n`.
    ZeroToZero { k_length: u64 },
    /// A party containing a zero vertex gives `ω* ≤ 1`.
    PaddedParty,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpperBound {
    pub value: Rational,
    pub source: BoundSource,
}

/// Tightest bound on `ω*` witnessed by walks in `graph`, `None` when no
/// family applies.
///
/// The zero-to-zero family uses exact shortest walks (searched up to
/// K-length `2|V|`); the long-walk family takes the longest walk found
/// within K-length `|V|`.
pub fn walk_upper_bound(graph: &ColouredGraph) -> Option<UpperBound> {
    let n = graph.vertex_count() as u64;
    let mut candidates: Vec<UpperBound> = Vec::new();

    let longest = (0..graph.vertex_count())
        .map(|v| longest_ik_walk(graph, v, n))
        .max()
        .unwrap_or(0);
    if longest > 0 {
        candidates.push(UpperBound {
            value: rational::one() + rational::ratio(1, longest as i64),
            source: BoundSource::LongWalk { k_length: longest },
        });
    }

    let shortest = graph
        .zero_vertices()
        .filter_map(|z| match min_k_length_from(graph, z, EdgeKind::K, EdgeKind::K) {
            ExtNat::Finite(k) if k <= 2 * n => Some(k),
            _ => None,
        })
        .min();
    if let Some(k) = shortest {
        candidates.push(UpperBound {
            value: rational::one() - rational::ratio(1, k as i64),
            source: BoundSource::ZeroToZero { k_length: k },
        });
    }

    if graph
        .zero_vertices()
        .any(|z| graph.neighbours_by(z, EdgeKind::K).next().is_some())
    {
        candidates.push(UpperBound {
            value: rational::one(),
            source: BoundSource::PaddedParty,
        });
    }

    candidates.into_iter().min_by(|a, b| a.value.cmp(&b.value))
}

/// Longest K-length (capped) of a walk from `start` that begins with an
/// I-edge and ends with a K-edge. Such walks have an even number of edges,
/// so the maximum over any-ending I-first walks is adjusted to the last
/// K-edge.
fn longest_ik_walk(graph: &ColouredGraph, start: usize, cap: u64) -> u64 {
    if cap == 0 {
        return 0;
    }
    // I-first walks of K-length ℓ ≥ 1 always have a prefix ending with
    // their ℓ-th K-edge, so the bounded maximum is already attained by one
    // ending in a K-edge.
    max_k_length_from(graph, start, EdgeKind::I, cap)
}

/// A walk in the coloured graph given by its vertex ids and edge indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk {
    pub vertices: Vec<String>,
    pub edges: Vec<usize>,
}

impl Walk {
    /// Validates that the walk is alternating and connected; returns its
    /// K-length.
    pub fn k_length(&self, graph: &ColouredGraph) -> Result<u64, OracleError> {
        let bad = |m: String| Err(OracleError::MalformedWalk(m));
        if self.edges.is_empty() || self.vertices.len() != self.edges.len() + 1 {
            return bad("need n ≥ 1 edges and n + 1 vertices".into());
        }
        let idx: Vec<usize> = self
            .vertices
            .iter()
            .map(|v| {
                graph
                    .index_of(v)
                    .ok_or_else(|| OracleError::MalformedWalk(format!("unknown vertex `{v}`")))
            })
            .collect::<Result<_, _>>()?;
        let mut k = 0;
        let mut prev: Option<EdgeKind> = None;
        for (j, &e) in self.edges.iter().enumerate() {
            let Some(edge) = graph.edges().get(e) else {
                return bad(format!("unknown edge {e}"));
            };
            let ends = [idx[j], idx[j + 1]];
            if !(edge.ends == ends || edge.ends == [ends[1], ends[0]]) {
                return bad(format!("edge {e} does not join step {j}"));
            }
            if prev == Some(edge.kind) {
                return bad(format!("edges {} and {e} do not alternate", self.edges[j - 1]));
            }
            prev = Some(edge.kind);
            k += u64::from(edge.kind == EdgeKind::K);
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkLemmaVerdict {
    pub checked: usize,
    /// Indices of sampled walks where `x*_v − x*_u > (1 − ω*) n`.
    pub violations: Vec<usize>,
}

impl WalkLemmaVerdict {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `x*_v − x*_u ≤ (1 − ω*)·n` for each sampled walk that starts with
/// an I-edge at `v`, ends with a K-edge at `u` and has K-length `n`.
/// `result` must be the optimum of the instance `graph` encodes; zero
/// vertices take the value 0.
pub fn check_walk_lemma(
    graph: &ColouredGraph,
    result: &OracleResult,
    sample_walks: &[Walk],
) -> Result<WalkLemmaVerdict, OracleError> {
    let value = |id: &str| -> Result<Rational, OracleError> {
        let v = graph.index_of(id).expect("validated by k_length");
        if graph.is_zero(v) {
            return Ok(rational::zero());
        }
        let agent = &graph.origin()[id];
        result
            .witness
            .get(agent)
            .cloned()
            .ok_or_else(|| InstanceError::MissingValue(agent.clone()).into())
    };
    let slack = rational::one() - &result.omega_star;
    let mut violations = Vec::new();
    for (j, walk) in sample_walks.iter().enumerate() {
        let n = walk.k_length(graph)?;
        let first = graph.edges()[walk.edges[0]].kind;
        let last = graph.edges()[*walk.edges.last().expect("nonempty")].kind;
        if first != EdgeKind::I || last != EdgeKind::K {
            return Err(OracleError::MalformedWalk(format!(
                "walk {j} must start with an I-edge and end with a K-edge"
            )));
        }
        let lhs = value(&walk.vertices[0])? - value(walk.vertices.last().expect("nonempty"))?;
        if lhs > &slack * rational::int(n as i64) {
            violations.push(j);
        }
    }
    Ok(WalkLemmaVerdict {
        checked: sample_walks.len(),
        violations,
    })
}

/// Graph-vertex values of an oracle witness (zero vertices are 0).
pub fn witness_on_graph(graph: &ColouredGraph, result: &OracleResult) -> HashMap<String, Rational> {
    (0..graph.vertex_count())
        .map(|v| {
            let id = graph.id(v).to_string();
            let q = if graph.is_zero(v) {
                rational::zero()
            } else {
                result
                    .witness
                    .get(&graph.origin()[&id])
                    .cloned()
                    .unwrap_or_else(rational::zero)
            };
            (id, q)
        })
        .collect()
}
