//! Splitting resource constraints down to pairs.
//!
//! Every resource with `n > 2` members is replaced by the `C(n, 2)` pairwise
//! constraints over its support. A solution `x'` of the split instance is
//! mapped back with the uniform factor `2/Δ`, `Δ = max(2, max |V_i|)`, which
//! restores feasibility: summing the pairwise constraints of a resource gives
//! `(n-1) Σ x'_v ≤ C(n,2)`, so `Σ x_v ≤ n/Δ ≤ 1`. Parties are untouched, so
//! utilities scale by the same factor.

use indexmap::IndexMap;
use thiserror::Error;

use crate::instance::{self, check_feasible, degree_bounds, Assignment, Instance, InstanceError};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("party size bound is {0}, only instances with parties of size at most 2 are supported")]
    PartyTooLarge(usize),
    #[error("generated resource id `{0}` collides with an existing resource")]
    IdCollision(String),
    #[error("assignment violates resources {0:?} of the {1} instance")]
    Infeasible(Vec<String>, &'static str),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionMap {
    pub original: Instance,
    pub reduced: Instance,
    /// `Δ = max(2, max |V_i|)` of the original instance.
    pub delta: usize,
    pub scale: Rational,
    /// Original resource id → the pairwise resources replacing it.
    pub replaced: IndexMap<String, Vec<String>>,
}

pub fn pair_id(resource: &str, u: &str, v: &str) -> String {
    format!("{resource}__{u}__{v}")
}

pub fn split_constraints(instance: &Instance) -> Result<ReductionMap, ReductionError> {
    split_with_delta(instance, 2)
}

/// Same as [`split_constraints`] but with an externally fixed `Δ`. Values
/// below the largest resource size are raised to it.
pub fn split_with_delta(instance: &Instance, delta: usize) -> Result<ReductionMap, ReductionError> {
    let bounds = degree_bounds(instance)?;
    if bounds.delta_vk > 2 {
        return Err(ReductionError::PartyTooLarge(bounds.delta_vk));
    }
    let delta = delta.max(2).max(bounds.delta_vi);
    let order = instance.agent_order();
    let mut reduced = Instance::new();
    for a in instance.agents() {
        reduced.add_agent(a.clone())?;
    }
    for (id, members) in instance.parties() {
        reduced.add_party(id.clone(), members.clone())?;
    }
    let mut replaced = IndexMap::new();
    for (id, members) in instance.resources() {
        if members.len() <= 2 {
            reduced
                .add_resource(id.clone(), members.clone())
                .map_err(|_| ReductionError::IdCollision(id.clone()))?;
            continue;
        }
        let mut sorted: Vec<&String> = members.iter().collect();
        sorted.sort_by_key(|m| order[m.as_str()]);
        let mut ids = Vec::new();
        for (j, u) in sorted.iter().enumerate() {
            for v in &sorted[j + 1..] {
                let pid = pair_id(id, u, v);
                reduced
                    .add_resource(pid.clone(), [u.as_str(), v.as_str()])
                    .map_err(|_| ReductionError::IdCollision(pid.clone()))?;
                ids.push(pid);
            }
        }
        replaced.insert(id.clone(), ids);
    }
    Ok(ReductionMap {
        original: instance.clone(),
        reduced,
        delta,
        scale: rational::ratio(2, delta as i64),
        replaced,
    })
}

/// Multiplies every value by `2/Δ`. The input must be feasible for the
/// reduced instance; the output is re-checked against the original.
pub fn scale_back(map: &ReductionMap, x_reduced: &Assignment) -> Result<Assignment, ReductionError> {
    let bad = check_feasible(&map.reduced, x_reduced)?;
    if !bad.is_empty() {
        return Err(ReductionError::Infeasible(bad, "reduced"));
    }
    let mut x = Assignment::new();
    for a in map.original.agents() {
        let v = x_reduced.get(a).ok_or_else(|| InstanceError::MissingValue(a.clone()))?;
        x.set(a.clone(), v * &map.scale)?;
    }
    let bad = check_feasible(&map.original, &x)?;
    if !bad.is_empty() {
        return Err(ReductionError::Infeasible(bad, "original"));
    }
    Ok(x)
}

/// `instance::utility` on the original side of the map.
pub fn original_utility(map: &ReductionMap, x: &Assignment) -> Result<Rational, ReductionError> {
    Ok(instance::utility(&map.original, x)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::builtin_instance;
    use crate::rational::{int, ratio};

    fn tri() -> Instance {
        Instance::from_parts(
            ["1", "2", "3"],
            [("k".to_string(), vec!["1".to_string(), "2".to_string()])],
            [("i".to_string(), vec!["3".to_string(), "1".to_string(), "2".to_string()])],
        )
        .unwrap()
    }

    #[test]
    fn triple_becomes_three_pairs() {
        let map = split_constraints(&tri()).unwrap();
        let got: Vec<(&String, &Vec<String>)> = map.reduced.resources().iter().collect();
        assert_eq!(got.len(), 3);
        assert_eq!(got[0].0, "i__1__2");
        assert_eq!(got[0].1, &vec!["1".to_string(), "2".to_string()]);
        assert_eq!(got[1].0, "i__1__3");
        assert_eq!(got[2].0, "i__2__3");
        assert_eq!(map.replaced["i"].len(), 3);
        assert_eq!(map.scale, ratio(2, 3));
    }

    #[test]
    fn prelim_passes_through() {
        let prelim = builtin_instance("prelim").unwrap();
        let map = split_constraints(&prelim).unwrap();
        assert_eq!(map.reduced, prelim);
        assert_eq!(map.scale, int(1));
        assert!(map.replaced.is_empty());
    }

    #[test]
    fn isp_split_counts() {
        let map = split_constraints(&builtin_instance("isp").unwrap()).unwrap();
        assert_eq!(map.reduced.resources().len(), 13);
        assert_eq!(map.replaced.len(), 4);
        assert!(!map.replaced.contains_key("i2"));
        assert!(map.reduced.resources().contains_key("i2"));
        assert_eq!(map.scale, ratio(2, 3));
        assert_eq!(map.reduced.parties(), map.original.parties());
    }

    #[test]
    fn rejects_large_parties() {
        let inst = Instance::from_parts(
            ["1", "2", "3"],
            [("k".to_string(), vec!["1".to_string(), "2".to_string(), "3".to_string()])],
            [("i".to_string(), vec!["1".to_string(), "2".to_string(), "3".to_string()])],
        )
        .unwrap();
        assert_eq!(split_constraints(&inst), Err(ReductionError::PartyTooLarge(3)));
    }

    #[test]
    fn detects_id_collision() {
        let mut inst = tri();
        inst.add_resource("i__1__2", ["1"]).unwrap();
        assert!(matches!(split_constraints(&inst), Err(ReductionError::IdCollision(_))));
    }

    #[test]
    fn scale_back_identity_and_triple() {
        let prelim = builtin_instance("prelim").unwrap();
        let map = split_constraints(&prelim).unwrap();
        let x = Assignment::from_pairs([
            ("1", ratio(2, 3)),
            ("2", ratio(1, 3)),
            ("3", ratio(1, 3)),
            ("4", int(0)),
            ("5", int(0)),
        ])
        .unwrap();
        assert_eq!(scale_back(&map, &x).unwrap(), x);

        let map = split_constraints(&tri()).unwrap();
        let y = Assignment::from_pairs([("1", int(1)), ("2", int(0)), ("3", int(0))]).unwrap();
        let x = scale_back(&map, &y).unwrap();
        assert_eq!(x.get("1"), Some(&ratio(2, 3)));
        assert!(check_feasible(&map.original, &x).unwrap().is_empty());
    }

    #[test]
    fn scale_back_rejects_infeasible_input() {
        let map = split_constraints(&tri()).unwrap();
        let y = Assignment::from_pairs([("1", int(1)), ("2", int(1)), ("3", int(0))]).unwrap();
        assert!(matches!(
            scale_back(&map, &y),
            Err(ReductionError::Infeasible(_, "reduced"))
        ));
    }

    #[test]
    fn all_halves_are_feasible_after_scaling() {
        // x' = 1/2 everywhere satisfies every pair constraint with equality.
        let map = split_constraints(&builtin_instance("isp").unwrap()).unwrap();
        let y = Assignment::from_pairs(map.reduced.agents().iter().map(|a| (a.clone(), ratio(1, 2)))).unwrap();
        let x = scale_back(&map, &y).unwrap();
        assert_eq!(original_utility(&map, &x).unwrap(), int(1) * &map.scale);
    }
}
