//! The 0/1 max-min packing instance.
//!
//! Agents own activities `x_v`; parties benefit from the activities of their
//! members and the objective is the minimum benefit over all parties;
//! resources cap the total activity of their members at 1. Since every
//! coefficient is 0 or 1 the instance is stored as support sets only.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use indexmap::IndexMap;
use num_traits::Signed;
use thiserror::Error;

use crate::rational::{self, Rational};

pub type AgentId = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SupportKind {
    Party,
    Resource,
}

impl fmt::Display for SupportKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SupportKind::Party => f.write_str("party"),
            SupportKind::Resource => f.write_str("resource"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("no value for agent `{0}`")]
    MissingValue(AgentId),
    #[error("negative value {value} for agent `{agent}`")]
    NegativeValue { agent: AgentId, value: String },
    #[error("unknown agent `{0}`")]
    UnknownAgent(AgentId),
    #[error("invalid instance: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// One broken instance invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("{kind} {support} references undeclared agent {agent}")]
    UndeclaredAgent {
        kind: SupportKind,
        support: String,
        agent: AgentId,
    },
    #[error("{kind} {support} has an empty support set")]
    EmptySupport { kind: SupportKind, support: String },
    #[error("{kind} {support} lists agent {agent} more than once")]
    RepeatedMember {
        kind: SupportKind,
        support: String,
        agent: AgentId,
    },
    #[error("agent {0} has empty I_v")]
    NoResource(AgentId),
    #[error("agent {0} is declared more than once")]
    RepeatedAgent(AgentId),
    #[error("instance has no parties")]
    NoParties,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Instance {
    agents: Vec<AgentId>,
    parties: IndexMap<String, Vec<AgentId>>,
    resources: IndexMap<String, Vec<AgentId>>,
}

impl Instance {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an instance from raw parts without validating references.
    pub fn from_parts<A, P, R>(agents: A, parties: P, resources: R) -> Result<Self, InstanceError>
    where
        A: IntoIterator,
        A::Item: Into<String>,
        P: IntoIterator<Item = (String, Vec<AgentId>)>,
        R: IntoIterator<Item = (String, Vec<AgentId>)>,
    {
        let mut instance = Self::new();
        for a in agents {
            instance.add_agent(a)?;
        }
        for (id, members) in parties {
            instance.add_party(id, members)?;
        }
        for (id, members) in resources {
            instance.add_resource(id, members)?;
        }
        Ok(instance)
    }

    pub fn add_agent(&mut self, id: impl Into<String>) -> Result<(), InstanceError> {
        let id = id.into();
        if self.agents.contains(&id) {
            return Err(InstanceError::DuplicateId { kind: "agent", id });
        }
        self.agents.push(id);
        Ok(())
    }

    pub fn add_party<I, S>(&mut self, id: impl Into<String>, members: I) -> Result<(), InstanceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        insert_support(&mut self.parties, "party", id.into(), members)
    }

    pub fn add_resource<I, S>(&mut self, id: impl Into<String>, members: I) -> Result<(), InstanceError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        insert_support(&mut self.resources, "resource", id.into(), members)
    }

    /// Appends `agent` to an existing support; returns false if the support
    /// does not exist or already contains the agent.
    pub fn extend_support(&mut self, kind: SupportKind, id: &str, agent: &str) -> bool {
        let map = match kind {
            SupportKind::Party => &mut self.parties,
            SupportKind::Resource => &mut self.resources,
        };
        match map.get_mut(id) {
            Some(members) if !members.iter().any(|m| m == agent) => {
                members.push(agent.to_string());
                true
            }
            _ => false,
        }
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn parties(&self) -> &IndexMap<String, Vec<AgentId>> {
        &self.parties
    }

    pub fn resources(&self) -> &IndexMap<String, Vec<AgentId>> {
        &self.resources
    }

    pub fn supports(&self, kind: SupportKind) -> &IndexMap<String, Vec<AgentId>> {
        match kind {
            SupportKind::Party => &self.parties,
            SupportKind::Resource => &self.resources,
        }
    }

    pub fn has_agent(&self, id: &str) -> bool {
        self.agents.iter().any(|a| a == id)
    }

    /// Position of each agent in declaration order.
    pub fn agent_order(&self) -> HashMap<&str, usize> {
        self.agents.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect()
    }

    /// Ids of the supports of `kind` containing each agent (`K_v` / `I_v`).
    pub fn memberships(&self, kind: SupportKind) -> HashMap<&str, Vec<&str>> {
        let mut out: HashMap<&str, Vec<&str>> = self.agents.iter().map(|a| (a.as_str(), Vec::new())).collect();
        for (id, members) in self.supports(kind) {
            for m in members {
                if let Some(list) = out.get_mut(m.as_str()) {
                    list.push(id.as_str());
                }
            }
        }
        out
    }
}

fn insert_support<I, S>(
    map: &mut IndexMap<String, Vec<AgentId>>,
    kind: &'static str,
    id: String,
    members: I,
) -> Result<(), InstanceError>
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    if map.contains_key(&id) {
        return Err(InstanceError::DuplicateId { kind, id });
    }
    map.insert(id, members.into_iter().map(Into::into).collect());
    Ok(())
}

/// Returns every broken invariant; an empty list means the instance is valid.
pub fn validate(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut declared = HashSet::new();
    for a in &instance.agents {
        if !declared.insert(a.as_str()) {
            out.push(Violation::RepeatedAgent(a.clone()));
        }
    }
    if instance.parties.is_empty() {
        out.push(Violation::NoParties);
    }
    for kind in [SupportKind::Party, SupportKind::Resource] {
        for (id, members) in instance.supports(kind) {
            if members.is_empty() {
                out.push(Violation::EmptySupport {
                    kind,
                    support: id.clone(),
                });
            }
            let mut seen = HashSet::new();
            for m in members {
                if !declared.contains(m.as_str()) {
                    out.push(Violation::UndeclaredAgent {
                        kind,
                        support: id.clone(),
                        agent: m.clone(),
                    });
                }
                if !seen.insert(m.as_str()) {
                    out.push(Violation::RepeatedMember {
                        kind,
                        support: id.clone(),
                        agent: m.clone(),
                    });
                }
            }
        }
    }
    let in_resource: HashSet<&str> = instance.resources.values().flatten().map(String::as_str).collect();
    for a in &instance.agents {
        if !in_resource.contains(a.as_str()) {
            out.push(Violation::NoResource(a.clone()));
        }
    }
    out
}

pub(crate) fn ensure_valid(instance: &Instance) -> Result<(), InstanceError> {
    let violations = validate(instance);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(InstanceError::Invalid(violations))
    }
}

/// Exact maxima of `|I_v|`, `|K_v|`, `|V_i|` and `|V_k|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeBounds {
    pub delta_iv: usize,
    pub delta_kv: usize,
    pub delta_vi: usize,
    pub delta_vk: usize,
}

pub fn degree_bounds(instance: &Instance) -> Result<DegreeBounds, InstanceError> {
    ensure_valid(instance)?;
    let max_len = |kind| instance.memberships(kind).values().map(Vec::len).max().unwrap_or(0);
    Ok(DegreeBounds {
        delta_iv: max_len(SupportKind::Resource),
        delta_kv: max_len(SupportKind::Party),
        delta_vi: instance.resources.values().map(Vec::len).max().unwrap_or(0),
        delta_vk: instance.parties.values().map(Vec::len).max().unwrap_or(0),
    })
}

/// Activity `x_v` for every agent, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    values: IndexMap<AgentId, Rational>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn zeros(instance: &Instance) -> Self {
        Self {
            values: instance.agents.iter().map(|a| (a.clone(), rational::zero())).collect(),
        }
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self, InstanceError>
    where
        I: IntoIterator<Item = (S, Rational)>,
        S: Into<String>,
    {
        let mut x = Self::new();
        for (a, q) in pairs {
            x.set(a, q)?;
        }
        Ok(x)
    }

    pub fn set(&mut self, agent: impl Into<String>, value: Rational) -> Result<(), InstanceError> {
        let agent = agent.into();
        if value.is_negative() {
            return Err(InstanceError::NegativeValue {
                agent,
                value: rational::format(&value),
            });
        }
        self.values.insert(agent, value);
        Ok(())
    }

    pub fn get(&self, agent: &str) -> Option<&Rational> {
        self.values.get(agent)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AgentId, &Rational)> {
        self.values.iter()
    }

    fn value(&self, agent: &str) -> Result<&Rational, InstanceError> {
        self.values
            .get(agent)
            .ok_or_else(|| InstanceError::MissingValue(agent.to_string()))
    }

    fn covers(&self, instance: &Instance) -> Result<(), InstanceError> {
        instance.agents.iter().try_for_each(|a| self.value(a).map(|_| ()))
    }
}

fn support_sum(x: &Assignment, members: &[AgentId]) -> Result<Rational, InstanceError> {
    members
        .iter()
        .try_fold(rational::zero(), |acc, m| Ok(acc + x.value(m)?))
}

/// `ω(x) = min_k Σ_{v ∈ V_k} x_v`, exactly.
pub fn utility(instance: &Instance, x: &Assignment) -> Result<Rational, InstanceError> {
    x.covers(instance)?;
    let mut best: Option<Rational> = None;
    for members in instance.parties.values() {
        let s = support_sum(x, members)?;
        best = Some(match best {
            Some(b) if b <= s => b,
            _ => s,
        });
    }
    // min over an empty party set is undefined; validation rejects it, so an
    // unvalidated empty instance reports 0.
    Ok(best.unwrap_or_else(rational::zero))
}

/// Ids of the resources whose member sum exceeds 1.
pub fn check_feasible(instance: &Instance, x: &Assignment) -> Result<Vec<String>, InstanceError> {
    x.covers(instance)?;
    let one = rational::one();
    let mut out = Vec::new();
    for (id, members) in &instance.resources {
        if support_sum(x, members)? > one {
            out.push(id.clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hyperedge {
    pub kind: SupportKind,
    pub id: String,
    pub members: Vec<AgentId>,
}

/// The communication hypergraph: agents are vertices and every support set
/// (party or resource) is a hyperedge.
#[derive(Debug, Clone)]
pub struct HypergraphView {
    vertices: Vec<AgentId>,
    edges: Vec<Hyperedge>,
    incidence: HashMap<AgentId, Vec<usize>>,
}

impl HypergraphView {
    pub fn new(instance: &Instance) -> Self {
        let mut edges = Vec::new();
        for kind in [SupportKind::Resource, SupportKind::Party] {
            for (id, members) in instance.supports(kind) {
                edges.push(Hyperedge {
                    kind,
                    id: id.clone(),
                    members: members.clone(),
                });
            }
        }
        let mut incidence: HashMap<AgentId, Vec<usize>> =
            instance.agents.iter().map(|a| (a.clone(), Vec::new())).collect();
        for (e, edge) in edges.iter().enumerate() {
            for m in &edge.members {
                if let Some(list) = incidence.get_mut(m) {
                    list.push(e);
                }
            }
        }
        Self {
            vertices: instance.agents.clone(),
            edges,
            incidence,
        }
    }

    pub fn vertices(&self) -> &[AgentId] {
        &self.vertices
    }

    pub fn hyperedges(&self) -> &[Hyperedge] {
        &self.edges
    }

    /// Hyperedges containing `v`: the local input of agent `v`.
    pub fn incident(&self, v: &str) -> impl Iterator<Item = &Hyperedge> {
        self.incidence.get(v).into_iter().flatten().map(|&e| &self.edges[e])
    }

    /// Hop distance from `v` to every agent reachable within `limit` hops.
    pub fn distances(&self, v: &str, limit: usize) -> Result<HashMap<AgentId, usize>, InstanceError> {
        if !self.incidence.contains_key(v) {
            return Err(InstanceError::UnknownAgent(v.to_string()));
        }
        let mut dist = HashMap::from([(v.to_string(), 0usize)]);
        let mut queue = VecDeque::from([v.to_string()]);
        let mut used = vec![false; self.edges.len()];
        while let Some(u) = queue.pop_front() {
            let d = dist[&u];
            if d == limit {
                continue;
            }
            for &e in &self.incidence[&u] {
                if std::mem::replace(&mut used[e], true) {
                    continue;
                }
                for w in &self.edges[e].members {
                    if self.incidence.contains_key(w) && !dist.contains_key(w) {
                        dist.insert(w.clone(), d + 1);
                        queue.push_back(w.clone());
                    }
                }
            }
        }
        Ok(dist)
    }
}

/// `B_H(v, r)`: agents within `r` hyperedge hops of `v`.
pub fn ball(view: &HypergraphView, v: &str, r: usize) -> Result<BTreeSet<AgentId>, InstanceError> {
    Ok(view.distances(v, r)?.into_keys().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::builtin_instance;
    use crate::rational::{int, ratio};

    fn set(ids: &[&str]) -> BTreeSet<AgentId> {
        ids.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn prelim_is_valid() {
        assert!(validate(&builtin_instance("prelim").unwrap()).is_empty());
    }

    #[test]
    fn undeclared_agent_is_named() {
        let mut inst = builtin_instance("prelim").unwrap();
        inst.add_party("k9", ["z"]).unwrap();
        let v = validate(&inst);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().contains('z'));
    }

    #[test]
    fn agent_without_resource() {
        let inst = Instance::from_parts(
            ["1", "5"],
            [("k1".to_string(), vec!["1".to_string()])],
            [("i1".to_string(), vec!["1".to_string()])],
        )
        .unwrap();
        let v = validate(&inst);
        assert_eq!(v, vec![Violation::NoResource("5".into())]);
        assert_eq!(v[0].to_string(), "agent 5 has empty I_v");
    }

    #[test]
    fn zero_parties_rejected() {
        let inst = Instance::from_parts(["1"], [], [("i1".to_string(), vec!["1".to_string()])]).unwrap();
        assert_eq!(validate(&inst), vec![Violation::NoParties]);
        assert!(degree_bounds(&inst).is_err());
    }

    #[test]
    fn empty_support_and_repeats() {
        let mut inst = Instance::new();
        inst.add_agent("a").unwrap();
        inst.add_party("k", Vec::<String>::new()).unwrap();
        inst.add_resource("i", ["a", "a"]).unwrap();
        let v = validate(&inst);
        assert!(v.contains(&Violation::EmptySupport {
            kind: SupportKind::Party,
            support: "k".into()
        }));
        assert!(v.iter().any(|x| matches!(x, Violation::RepeatedMember { .. })));
        assert!(inst.add_agent("a").is_err());
    }

    #[test]
    fn degree_bounds_examples() {
        let isp = degree_bounds(&builtin_instance("isp").unwrap()).unwrap();
        assert_eq!((isp.delta_vk, isp.delta_vi), (2, 3));
        let prelim = degree_bounds(&builtin_instance("prelim").unwrap()).unwrap();
        assert_eq!(
            prelim,
            DegreeBounds {
                delta_iv: 2,
                delta_kv: 1,
                delta_vi: 2,
                delta_vk: 2
            }
        );
        let single = Instance::from_parts(
            ["v"],
            [("k".to_string(), vec!["v".to_string()])],
            [("i".to_string(), vec!["v".to_string()])],
        )
        .unwrap();
        let b = degree_bounds(&single).unwrap();
        assert_eq!((b.delta_iv, b.delta_kv, b.delta_vi, b.delta_vk), (1, 1, 1, 1));
    }

    fn isp_optimum() -> Assignment {
        let vals = [
            (1, ratio(2, 7)),
            (2, ratio(3, 7)),
            (3, int(0)),
            (4, ratio(5, 7)),
            (5, ratio(5, 7)),
            (6, int(0)),
            (7, ratio(2, 7)),
            (8, ratio(3, 7)),
            (9, ratio(4, 7)),
            (10, ratio(1, 7)),
            (11, int(0)),
            (12, ratio(5, 7)),
            (13, ratio(4, 7)),
            (14, ratio(1, 7)),
        ];
        Assignment::from_pairs(vals.into_iter().map(|(a, q)| (a.to_string(), q))).unwrap()
    }

    #[test]
    fn utility_examples() {
        let isp = builtin_instance("isp").unwrap();
        assert_eq!(utility(&isp, &isp_optimum()).unwrap(), ratio(5, 7));
        assert_eq!(utility(&isp, &Assignment::zeros(&isp)).unwrap(), int(0));
        let prelim = builtin_instance("prelim").unwrap();
        let x = Assignment::from_pairs([
            ("1", ratio(2, 3)),
            ("2", ratio(1, 3)),
            ("3", ratio(1, 3)),
            ("4", int(0)),
            ("5", int(0)),
        ])
        .unwrap();
        assert_eq!(utility(&prelim, &x).unwrap(), ratio(2, 3));
    }

    #[test]
    fn missing_value_is_an_error() {
        let prelim = builtin_instance("prelim").unwrap();
        let x = Assignment::from_pairs([("1", int(0))]).unwrap();
        assert!(matches!(utility(&prelim, &x), Err(InstanceError::MissingValue(_))));
        assert!(matches!(
            check_feasible(&prelim, &x),
            Err(InstanceError::MissingValue(_))
        ));
    }

    #[test]
    fn negative_values_rejected() {
        let mut x = Assignment::new();
        assert!(x.set("1", ratio(-1, 2)).is_err());
    }

    #[test]
    fn feasibility_examples() {
        let isp = builtin_instance("isp").unwrap();
        assert!(check_feasible(&isp, &isp_optimum()).unwrap().is_empty());
        let all = |q: Rational| Assignment::from_pairs(isp.agents().iter().map(|a| (a.clone(), q.clone()))).unwrap();
        let viol = check_feasible(&isp, &all(int(1))).unwrap();
        assert!(viol.contains(&"i1".to_string()));
        assert!(check_feasible(&isp, &all(ratio(1, 3))).unwrap().is_empty());
    }

    #[test]
    fn sum_exactly_one_is_feasible() {
        let prelim = builtin_instance("prelim").unwrap();
        let x = Assignment::from_pairs([
            ("1", ratio(1, 3)),
            ("2", ratio(2, 3)),
            ("3", ratio(2, 3)),
            ("4", ratio(1, 3)),
            ("5", ratio(2, 3)),
        ])
        .unwrap();
        assert!(check_feasible(&prelim, &x).unwrap().is_empty());
        let mut y = x.clone();
        y.set("5", ratio(2, 3) + ratio(1, 1_000_000_007)).unwrap();
        assert_eq!(check_feasible(&prelim, &y).unwrap(), vec!["i4".to_string()]);
    }

    #[test]
    fn ball_examples() {
        let isp = builtin_instance("isp").unwrap();
        let view = HypergraphView::new(&isp);
        assert_eq!(ball(&view, "1", 0).unwrap(), set(&["1"]));
        assert_eq!(ball(&view, "1", 1).unwrap(), set(&["1", "2", "3", "5"]));
        let everything: BTreeSet<_> = isp.agents().iter().cloned().collect();
        assert_eq!(ball(&view, "1", 100).unwrap(), everything);
        assert!(ball(&view, "nobody", 1).is_err());
    }

    #[test]
    fn hypergraph_edges_are_all_supports() {
        let isp = builtin_instance("isp").unwrap();
        let view = HypergraphView::new(&isp);
        assert_eq!(view.hyperedges().len(), 12);
        assert_eq!(view.incident("1").count(), 2);
    }
}
