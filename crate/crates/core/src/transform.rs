//! Encoding a pairwise instance as a two-coloured multigraph.
//!
//! Agents without parties are fixed to zero and removed. Size-1 supports are
//! padded with a fresh vertex whose value is forced to zero, after which every
//! party is a K-edge and every resource an I-edge between exactly two
//! vertices.

use std::collections::{HashMap, HashSet};
use std::fmt::{self, Write as _};

use indexmap::IndexMap;
use num_traits::Zero;
use thiserror::Error;

use crate::instance::{AgentId, Assignment, Instance, InstanceError, SupportKind};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    K,
    I,
}

impl EdgeKind {
    pub const BOTH: [EdgeKind; 2] = [EdgeKind::K, EdgeKind::I];

    pub fn other(self) -> Self {
        match self {
            EdgeKind::K => EdgeKind::I,
            EdgeKind::I => EdgeKind::K,
        }
    }

    pub fn index(self) -> usize {
        match self {
            EdgeKind::K => 0,
            EdgeKind::I => 1,
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeKind::K => "K",
            EdgeKind::I => "I",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VertexColour {
    /// Free variable owned by an agent.
    X,
    /// Padding vertex fixed to zero.
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub ends: [usize; 2],
    pub kind: EdgeKind,
    /// Id of the party or resource the edge encodes.
    pub origin: String,
}

impl Edge {
    pub fn other_end(&self, v: usize) -> usize {
        if self.ends[0] == v {
            self.ends[1]
        } else {
            self.ends[0]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransformError {
    #[error("{kind} `{id}` has {size} members; split constraints to size 2 first")]
    SupportTooLarge { kind: SupportKind, id: String, size: usize },
    #[error("{kind} `{id}` has an empty support")]
    EmptySupport { kind: SupportKind, id: String },
    #[error("padding vertex `{0}` collides with an agent id")]
    IdCollision(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("vertex `{0}` is missing a value")]
    MissingValue(String),
    #[error("zero vertex `{vertex}` carries nonzero value {value}")]
    NonzeroPad { vertex: String, value: String },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    pub instance: Instance,
    pub removed: Vec<AgentId>,
}

/// Drops agents with no party and any resource left without members.
///
/// Removal only shrinks resources and never parties, so a single filter
/// pass reaches the fixed point.
pub fn prune_non_contributing(instance: &Instance) -> Pruned {
    let in_party: HashSet<&str> = instance.parties().values().flatten().map(String::as_str).collect();
    let (kept, removed): (Vec<&AgentId>, Vec<&AgentId>) =
        instance.agents().iter().partition(|a| in_party.contains(a.as_str()));
    let mut out = Instance::new();
    for a in kept {
        out.add_agent(a.clone()).expect("ids unique in source");
    }
    for (id, members) in instance.parties() {
        out.add_party(id.clone(), members.clone())
            .expect("ids unique in source");
    }
    for (id, members) in instance.resources() {
        let left: Vec<&String> = members.iter().filter(|m| in_party.contains(m.as_str())).collect();
        if !left.is_empty() {
            out.add_resource(id.clone(), left).expect("ids unique in source");
        }
    }
    Pruned {
        instance: out,
        removed: removed.into_iter().cloned().collect(),
    }
}

pub fn pad_id(support: &str) -> String {
    format!("zero_{support}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColouredGraph {
    ids: Vec<String>,
    colours: Vec<VertexColour>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    /// Per vertex: `(edge index, neighbour)`.
    adjacency: Vec<Vec<(usize, usize)>>,
    /// x-vertex id → agent id, in agent order.
    origin: IndexMap<String, AgentId>,
    pruned: Vec<AgentId>,
}

impl ColouredGraph {
    fn add_vertex(&mut self, id: String, colour: VertexColour) -> Result<usize, TransformError> {
        if self.index.contains_key(&id) {
            return Err(TransformError::IdCollision(id));
        }
        let v = self.ids.len();
        self.index.insert(id.clone(), v);
        self.ids.push(id);
        self.colours.push(colour);
        self.adjacency.push(Vec::new());
        Ok(v)
    }

    fn add_edge(&mut self, a: usize, b: usize, kind: EdgeKind, origin: String) {
        let e = self.edges.len();
        self.edges.push(Edge {
            ends: [a, b],
            kind,
            origin,
        });
        self.adjacency[a].push((e, b));
        self.adjacency[b].push((e, a));
    }

    pub fn vertex_count(&self) -> usize {
        self.ids.len()
    }

    pub fn id(&self, v: usize) -> &str {
        &self.ids[v]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn colour(&self, v: usize) -> VertexColour {
        self.colours[v]
    }

    pub fn is_zero(&self, v: usize) -> bool {
        self.colours[v] == VertexColour::Zero
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbours(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    /// Neighbours of `v` across edges of one kind.
    pub fn neighbours_by(&self, v: usize, kind: EdgeKind) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency[v]
            .iter()
            .copied()
            .filter(move |&(e, _)| self.edges[e].kind == kind)
    }

    pub fn x_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(|&v| !self.is_zero(v))
    }

    pub fn zero_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.ids.len()).filter(|&v| self.is_zero(v))
    }

    pub fn origin(&self) -> &IndexMap<String, AgentId> {
        &self.origin
    }

    pub fn pruned(&self) -> &[AgentId] {
        &self.pruned
    }

    pub fn with_pruned(mut self, pruned: Vec<AgentId>) -> Self {
        self.pruned = pruned;
        self
    }

    /// Debug dump: `vertex <id> <0|x>` then `edge <K|I> <u> <v> <origin>`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (v, id) in self.ids.iter().enumerate() {
            let c = if self.is_zero(v) { "0" } else { "x" };
            let _ = writeln!(out, "vertex {id} {c}");
        }
        for e in &self.edges {
            let _ = writeln!(
                out,
                "edge {} {} {} {}",
                e.kind, self.ids[e.ends[0]], self.ids[e.ends[1]], e.origin
            );
        }
        out
    }
}

/// Builds G from a pruned instance whose supports all have size 1 or 2.
pub fn build_graph(instance: &Instance) -> Result<ColouredGraph, TransformError> {
    let mut g = ColouredGraph {
        ids: Vec::new(),
        colours: Vec::new(),
        index: HashMap::new(),
        edges: Vec::new(),
        adjacency: Vec::new(),
        origin: IndexMap::new(),
        pruned: Vec::new(),
    };
    for a in instance.agents() {
        g.add_vertex(a.clone(), VertexColour::X)?;
        g.origin.insert(a.clone(), a.clone());
    }
    for (kind, edge_kind) in [(SupportKind::Party, EdgeKind::K), (SupportKind::Resource, EdgeKind::I)] {
        for (id, members) in instance.supports(kind) {
            let ends: Vec<usize> = members
                .iter()
                .map(|m| g.index_of(m).ok_or_else(|| InstanceError::UnknownAgent(m.clone())))
                .collect::<Result<_, _>>()?;
            let (a, b) = match ends[..] {
                [a, b] => (a, b),
                [a] => (a, g.add_vertex(pad_id(id), VertexColour::Zero)?),
                [] => return Err(TransformError::EmptySupport { kind, id: id.clone() }),
                _ => {
                    return Err(TransformError::SupportTooLarge {
                        kind,
                        id: id.clone(),
                        size: ends.len(),
                    })
                }
            };
            g.add_edge(a, b, edge_kind, id.clone());
        }
    }
    Ok(g)
}

/// Prune then build, recording the pruned agents on the graph.
pub fn transform(instance: &Instance) -> Result<(Pruned, ColouredGraph), TransformError> {
    let pruned = prune_non_contributing(instance);
    let g = build_graph(&pruned.instance)?.with_pruned(pruned.removed.clone());
    Ok((pruned, g))
}

/// Maps vertex values back to agents: x-vertices keep their value and
/// pruned agents get zero. Pad vertices must be zero.
pub fn extract_solution(
    graph: &ColouredGraph,
    vertex_values: &HashMap<String, Rational>,
) -> Result<Assignment, TransformError> {
    for v in graph.zero_vertices() {
        let id = graph.id(v);
        let value = vertex_values
            .get(id)
            .ok_or_else(|| TransformError::MissingValue(id.to_string()))?;
        if !value.is_zero() {
            return Err(TransformError::NonzeroPad {
                vertex: id.to_string(),
                value: rational::format(value),
            });
        }
    }
    let mut x = Assignment::new();
    for (vertex, agent) in &graph.origin {
        let value = vertex_values
            .get(vertex)
            .ok_or_else(|| TransformError::MissingValue(vertex.clone()))?;
        x.set(agent.clone(), value.clone())?;
    }
    for agent in &graph.pruned {
        x.set(agent.clone(), rational::zero())?;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::builtin_instance;
    use crate::rational::{int, ratio};

    fn edge_set(g: &ColouredGraph) -> Vec<(EdgeKind, String, String, String)> {
        g.edges()
            .iter()
            .map(|e| {
                (
                    e.kind,
                    g.id(e.ends[0]).to_string(),
                    g.id(e.ends[1]).to_string(),
                    e.origin.clone(),
                )
            })
            .collect()
    }

    #[test]
    fn prunes_prelim() {
        let p = prune_non_contributing(&builtin_instance("prelim").unwrap());
        assert_eq!(p.removed, vec!["4".to_string(), "5".to_string()]);
        assert!(!p.instance.resources().contains_key("i4"));
        assert_eq!(p.instance.resources()["i3"], vec!["3".to_string()]);
        assert_eq!(p.instance.agents(), &["1", "2", "3"]);
    }

    #[test]
    fn pruning_fixed_point_when_all_contribute() {
        let isp = builtin_instance("isp").unwrap();
        let p = prune_non_contributing(&isp);
        assert!(p.removed.is_empty());
        assert_eq!(p.instance, isp);
    }

    #[test]
    fn pruning_chain_keeps_resources() {
        // a - b - c chain: only c lacks a party, both resources keep a member.
        let inst = Instance::from_parts(
            ["a", "b", "c"],
            [("k".to_string(), vec!["a".to_string(), "b".to_string()])],
            [
                ("i1".to_string(), vec!["a".to_string(), "b".to_string()]),
                ("i2".to_string(), vec!["b".to_string(), "c".to_string()]),
            ],
        )
        .unwrap();
        let p = prune_non_contributing(&inst);
        assert_eq!(p.removed, vec!["c".to_string()]);
        assert_eq!(p.instance.resources().len(), 2);
        assert_eq!(p.instance.resources()["i2"], vec!["b".to_string()]);
    }

    #[test]
    fn prelim_graph_matches_figure() {
        let (_, g) = transform(&builtin_instance("prelim").unwrap()).unwrap();
        let xs: Vec<&str> = g.x_vertices().map(|v| g.id(v)).collect();
        let zs: Vec<&str> = g.zero_vertices().map(|v| g.id(v)).collect();
        assert_eq!(xs, ["1", "2", "3"]);
        assert_eq!(zs, ["zero_k1", "zero_i3"]);
        let s = |x: &str| x.to_string();
        assert_eq!(
            edge_set(&g),
            vec![
                (EdgeKind::K, s("1"), s("zero_k1"), s("k1")),
                (EdgeKind::K, s("2"), s("3"), s("k2")),
                (EdgeKind::I, s("1"), s("2"), s("i1")),
                (EdgeKind::I, s("1"), s("3"), s("i2")),
                (EdgeKind::I, s("3"), s("zero_i3"), s("i3")),
            ]
        );
        assert_eq!(g.pruned(), &["4", "5"]);
    }

    #[test]
    fn singleton_gets_two_pads() {
        let inst = Instance::from_parts(
            ["v"],
            [("k".to_string(), vec!["v".to_string()])],
            [("i".to_string(), vec!["v".to_string()])],
        )
        .unwrap();
        let g = build_graph(&inst).unwrap();
        assert_eq!(g.x_vertices().count(), 1);
        assert_eq!(g.zero_vertices().count(), 2);
        assert_eq!(g.edges().len(), 2);
        assert_eq!(
            g.dump(),
            "vertex v x\nvertex zero_k 0\nvertex zero_i 0\nedge K v zero_k k\nedge I v zero_i i\n"
        );
    }

    #[test]
    fn parallel_parties_stay_parallel() {
        let inst = Instance::from_parts(
            ["u", "v"],
            [
                ("k1".to_string(), vec!["u".to_string(), "v".to_string()]),
                ("k2".to_string(), vec!["u".to_string(), "v".to_string()]),
            ],
            [("i".to_string(), vec!["u".to_string(), "v".to_string()])],
        )
        .unwrap();
        let g = build_graph(&inst).unwrap();
        assert_eq!(g.edges().iter().filter(|e| e.kind == EdgeKind::K).count(), 2);
    }

    #[test]
    fn oversized_support_rejected() {
        let isp = builtin_instance("isp").unwrap();
        assert!(matches!(build_graph(&isp), Err(TransformError::SupportTooLarge { .. })));
    }

    #[test]
    fn pad_collision_rejected() {
        let inst = Instance::from_parts(
            ["zero_k"],
            [("k".to_string(), vec!["zero_k".to_string()])],
            [("i".to_string(), vec!["zero_k".to_string()])],
        )
        .unwrap();
        assert_eq!(build_graph(&inst), Err(TransformError::IdCollision("zero_k".into())));
    }

    fn prelim_values(pad: Rational) -> HashMap<String, Rational> {
        HashMap::from([
            ("1".to_string(), ratio(2, 3)),
            ("2".to_string(), ratio(1, 3)),
            ("3".to_string(), ratio(1, 3)),
            ("zero_k1".to_string(), int(0)),
            ("zero_i3".to_string(), pad),
        ])
    }

    #[test]
    fn extracts_prelim_solution() {
        let (_, g) = transform(&builtin_instance("prelim").unwrap()).unwrap();
        let x = extract_solution(&g, &prelim_values(int(0))).unwrap();
        assert_eq!(x.len(), 5);
        assert_eq!(x.get("1"), Some(&ratio(2, 3)));
        assert_eq!(x.get("4"), Some(&int(0)));
        assert_eq!(x.get("5"), Some(&int(0)));
    }

    #[test]
    fn all_zero_values_extract_to_zero() {
        let (_, g) = transform(&builtin_instance("prelim").unwrap()).unwrap();
        let zeros: HashMap<String, Rational> = (0..g.vertex_count()).map(|v| (g.id(v).to_string(), int(0))).collect();
        let x = extract_solution(&g, &zeros).unwrap();
        assert!(x.iter().all(|(_, q)| q.is_zero()));
    }

    #[test]
    fn nonzero_pad_rejected() {
        let (_, g) = transform(&builtin_instance("prelim").unwrap()).unwrap();
        assert!(matches!(
            extract_solution(&g, &prelim_values(ratio(1, 2))),
            Err(TransformError::NonzeroPad { .. })
        ));
    }
}
