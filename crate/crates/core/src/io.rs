//! Text formats, built-in instances and the seeded instance generator.
//!
//! Instance files are line based. `#` starts a comment and blank lines are
//! ignored. The first line is the header `maxmin 1`, followed by
//!
//! ```text
//! agent <id>
//! party <id> : <agent-id> [<agent-id> ...]
//! resource <id> : <agent-id> [<agent-id> ...]
//! ```
//!
//! Ids match `[A-Za-z0-9_]+` and agents must be declared before use.
//!
//! Assignment files hold one `x <agent-id> <num>/<den>` line per agent and a
//! final `omega <num>/<den>` line, optionally followed by `iterations <n>`.
//!
//! The generator draws from `ChaCha8Rng::seed_from_u64(seed)`.

use std::collections::HashSet;
use std::fmt::Write as _;

use indexmap::IndexMap;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{validate, Assignment, Instance, InstanceError};
use crate::rational::{self, Rational};

pub const HEADER: &str = "maxmin 1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no header")]
    NoHeader,
    #[error("line {line}: expected header `{HEADER}`")]
    BadHeader { line: usize },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: duplicate {kind} `{id}`")]
    Duplicate {
        line: usize,
        kind: &'static str,
        id: String,
    },
    #[error("line {line}: reference to undeclared agent `{agent}`")]
    UndeclaredAgent { line: usize, agent: String },
    #[error("input is not valid UTF-8")]
    Encoding,
}

fn is_id(token: &str) -> bool {
    !token.is_empty() && token.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Strips comments and blank lines, yielding `(line number, content)`.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

pub fn parse_instance_bytes(bytes: &[u8]) -> Result<Instance, ParseError> {
    parse_instance(std::str::from_utf8(bytes).map_err(|_| ParseError::Encoding)?)
}

pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or(ParseError::NoHeader)?;
    if header.split_whitespace().collect::<Vec<_>>() != ["maxmin", "1"] {
        return Err(ParseError::BadHeader { line });
    }
    let mut instance = Instance::new();
    let mut declared = HashSet::new();
    for (line, content) in lines {
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let syntax = |message: &str| ParseError::Syntax {
            line,
            message: message.to_string(),
        };
        match tokens[0] {
            "agent" => {
                let [_, id] = tokens[..] else {
                    return Err(syntax("expected `agent <id>`"));
                };
                if !is_id(id) {
                    return Err(syntax(&format!("invalid id `{id}`")));
                }
                if !declared.insert(id.to_string()) {
                    return Err(ParseError::Duplicate {
                        line,
                        kind: "agent",
                        id: id.to_string(),
                    });
                }
                instance.add_agent(id).expect("checked above");
            }
            kw @ ("party" | "resource") => {
                if tokens.len() < 4 || tokens[2] != ":" {
                    return Err(syntax(&format!("expected `{kw} <id> : <agent-id> ...`")));
                }
                let id = tokens[1];
                if !is_id(id) {
                    return Err(syntax(&format!("invalid id `{id}`")));
                }
                let mut seen = HashSet::new();
                for &m in &tokens[3..] {
                    if !is_id(m) {
                        return Err(syntax(&format!("invalid id `{m}`")));
                    }
                    if !declared.contains(m) {
                        return Err(ParseError::UndeclaredAgent {
                            line,
                            agent: m.to_string(),
                        });
                    }
                    if !seen.insert(m) {
                        return Err(syntax(&format!("agent `{m}` listed twice in {kw} `{id}`")));
                    }
                }
                let members = tokens[3..].iter().copied();
                let added = if kw == "party" {
                    instance.add_party(id, members)
                } else {
                    instance.add_resource(id, members)
                };
                if let Err(InstanceError::DuplicateId { kind, id }) = added {
                    return Err(ParseError::Duplicate { line, kind, id });
                }
            }
            other => return Err(syntax(&format!("unknown directive `{other}`"))),
        }
    }
    Ok(instance)
}

/// Canonical text form: header, agents, parties, resources, each in
/// declaration order.
pub fn serialize_instance(instance: &Instance) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for a in instance.agents() {
        let _ = writeln!(out, "agent {a}");
    }
    for (kw, map) in [("party", instance.parties()), ("resource", instance.resources())] {
        for (id, members) in map {
            let _ = writeln!(out, "{kw} {id} : {}", members.join(" "));
        }
    }
    out
}

pub fn write_assignment(x: &Assignment, omega: &Rational) -> String {
    let mut out = String::new();
    for (a, q) in x.iter() {
        let _ = writeln!(out, "x {a} {}", rational::format(q));
    }
    let _ = writeln!(out, "omega {}", rational::format(omega));
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentFile {
    pub values: Assignment,
    pub omega: Rational,
    pub iterations: Option<u64>,
}

pub fn parse_assignment(text: &str) -> Result<AssignmentFile, ParseError> {
    let mut values = Assignment::new();
    let mut omega = None;
    let mut iterations = None;
    for (line, content) in content_lines(text) {
        let syntax = |message: String| ParseError::Syntax { line, message };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match (tokens[..].first(), omega.is_some()) {
            (Some(&"x"), false) => {
                let [_, id, q] = tokens[..] else {
                    return Err(syntax("expected `x <agent-id> <num>/<den>`".into()));
                };
                let q = rational::parse_canonical(q).ok_or_else(|| syntax(format!("malformed rational `{q}`")))?;
                if values.get(id).is_some() {
                    return Err(ParseError::Duplicate {
                        line,
                        kind: "agent",
                        id: id.to_string(),
                    });
                }
                values.set(id, q).map_err(|e| syntax(e.to_string()))?;
            }
            (Some(&"omega"), false) => {
                let [_, q] = tokens[..] else {
                    return Err(syntax("expected `omega <num>/<den>`".into()));
                };
                omega = Some(rational::parse_canonical(q).ok_or_else(|| syntax(format!("malformed rational `{q}`")))?);
            }
            (Some(&"iterations"), true) if iterations.is_none() => {
                let [_, n] = tokens[..] else {
                    return Err(syntax("expected `iterations <n>`".into()));
                };
                iterations = Some(n.parse().map_err(|_| syntax(format!("bad count `{n}`")))?);
            }
            _ => return Err(syntax(format!("unexpected line `{content}`"))),
        }
    }
    Ok(AssignmentFile {
        values,
        omega: omega.ok_or(ParseError::Syntax {
            line: text.lines().count(),
            message: "missing final `omega` line".into(),
        })?,
        iterations,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuiltinError {
    #[error("unknown builtin instance `{0}` (known: isp, prelim)")]
    Unknown(String),
}

pub const BUILTIN_NAMES: [&str; 2] = ["isp", "prelim"];

fn pairs(list: &[(&str, &[u32])]) -> Vec<(String, Vec<String>)> {
    list.iter()
        .map(|(id, ms)| (id.to_string(), ms.iter().map(u32::to_string).collect()))
        .collect()
}

/// `isp`: seven customers sharing five access points over fourteen links.
/// `prelim`: the five-agent example used to illustrate the graph encoding.
pub fn builtin_instance(name: &str) -> Result<Instance, BuiltinError> {
    let (n, parties, resources): (u32, Vec<_>, Vec<_>) = match name {
        "isp" => (
            14,
            pairs(&[
                ("k1", &[1, 2]),
                ("k2", &[3, 4]),
                ("k3", &[5, 6]),
                ("k4", &[7, 8]),
                ("k5", &[9, 10]),
                ("k6", &[11, 12]),
                ("k7", &[13, 14]),
            ]),
            pairs(&[
                ("i1", &[1, 3, 5]),
                ("i2", &[2, 9]),
                ("i3", &[4, 7, 11]),
                ("i4", &[6, 8, 13]),
                ("i5", &[10, 12, 14]),
            ]),
        ),
        "prelim" => (
            5,
            pairs(&[("k1", &[1]), ("k2", &[2, 3])]),
            pairs(&[("i1", &[1, 2]), ("i2", &[1, 3]), ("i3", &[3, 4]), ("i4", &[4, 5])]),
        ),
        other => return Err(BuiltinError::Unknown(other.to_string())),
    };
    Ok(Instance::from_parts((1..=n).map(|v| v.to_string()), parties, resources).expect("builtin ids are unique"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorParams {
    pub n_agents: usize,
    pub n_parties: usize,
    pub n_resources: usize,
    pub max_vi: usize,
    pub max_vk: usize,
    pub max_iv: usize,
    pub max_kv: usize,
    pub seed: u64,
}

impl GeneratorParams {
    /// A parameter set whose capacities always admit a valid instance.
    pub fn sample(rng: &mut impl Rng, max_agents: usize, max_vi: usize, max_vk: usize) -> Self {
        let n_agents = rng.random_range(1..=max_agents.max(1));
        let max_vi = rng.random_range(1..=max_vi.max(1));
        let max_vk = rng.random_range(1..=max_vk.max(1));
        let max_iv = rng.random_range(1..=3);
        let max_kv = rng.random_range(1..=2);
        let lo_res = n_agents.div_ceil(max_vi);
        let hi_res = (n_agents * max_iv).max(lo_res);
        let lo_par = n_agents.div_ceil(max_vk);
        let hi_par = (n_agents * max_kv).max(lo_par);
        Self {
            n_agents,
            n_resources: rng.random_range(lo_res..=lo_res + (hi_res - lo_res) / 2),
            n_parties: rng.random_range(lo_par..=lo_par + (hi_par - lo_par) / 2),
            max_vi,
            max_vk,
            max_iv,
            max_kv,
            seed: rng.random(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("generator parameters are unsatisfiable: {0}")]
    Unsatisfiable(String),
}

/// Seeded random instance respecting the four degree caps.
///
/// Supports are first handed out round-robin over a shuffled agent order so
/// none stays empty, agents still without a support then join a random one
/// with room, and finally each agent tops up to a random target of
/// `1..=max_iv` resources and `1..=max_kv` parties among supports that still
/// have room.
pub fn random_instance(params: &GeneratorParams) -> Result<Instance, GenerateError> {
    let p = params;
    let unsat = |why: &str| Err(GenerateError::Unsatisfiable(why.to_string()));
    if p.n_agents == 0 || p.n_parties == 0 || p.n_resources == 0 {
        return unsat("need at least one agent, party and resource");
    }
    if [p.max_vi, p.max_vk, p.max_iv, p.max_kv].contains(&0) {
        return unsat("degree caps must be at least 1");
    }
    if p.n_resources * p.max_vi < p.n_agents || p.n_parties * p.max_vk < p.n_agents {
        return unsat("not enough support capacity for every agent");
    }
    if p.n_resources > p.n_agents * p.max_iv || p.n_parties > p.n_agents * p.max_kv {
        return unsat("more supports than memberships");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let resources = fill_supports(&mut rng, p.n_agents, p.n_resources, p.max_iv, p.max_vi);
    let parties = fill_supports(&mut rng, p.n_agents, p.n_parties, p.max_kv, p.max_vk);
    let name = |prefix: &str, sets: Vec<Vec<usize>>| -> IndexMap<String, Vec<String>> {
        sets.into_iter()
            .enumerate()
            .map(|(j, ms)| {
                (
                    format!("{prefix}{}", j + 1),
                    ms.into_iter().map(|v| format!("v{}", v + 1)).collect(),
                )
            })
            .collect()
    };
    let instance = Instance::from_parts(
        (1..=p.n_agents).map(|v| format!("v{v}")),
        name("k", parties),
        name("i", resources),
    )
    .expect("generated ids are unique");
    debug_assert!(validate(&instance).is_empty());
    Ok(instance)
}

/// Needs `n_supports ≤ n_agents · per_agent` and
/// `n_agents ≤ n_supports · per_support`.
fn fill_supports(
    rng: &mut ChaCha8Rng,
    n_agents: usize,
    n_supports: usize,
    per_agent: usize,
    per_support: usize,
) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = vec![Vec::new(); n_supports];
    let mut joined = vec![0usize; n_agents];
    let mut order: Vec<usize> = (0..n_agents).collect();
    order.shuffle(rng);
    for (s, set) in sets.iter_mut().enumerate() {
        let v = order[s % n_agents];
        set.push(v);
        joined[v] += 1;
    }
    let join_open = |rng: &mut ChaCha8Rng, sets: &mut Vec<Vec<usize>>, joined: &mut [usize], v: usize, count: usize| {
        let open: Vec<usize> = (0..n_supports)
            .filter(|&s| sets[s].len() < per_support && !sets[s].contains(&v))
            .collect();
        for &s in open.choose_multiple(rng, count) {
            sets[s].push(v);
            joined[v] += 1;
        }
    };
    for &v in &order[n_supports.min(n_agents)..] {
        join_open(rng, &mut sets, &mut joined, v, 1);
    }
    for &v in &order {
        let want = rng.random_range(1..=per_agent);
        let have = joined[v];
        if want > have {
            join_open(rng, &mut sets, &mut joined, v, want - have);
        }
    }
    for s in &mut sets {
        s.sort_unstable();
    }
    sets
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::degree_bounds;
    use crate::rational::ratio;

    const PRELIM_TEXT: &str = "maxmin 1
# the five-agent example
agent 1
agent 2
agent 3
agent 4
agent 5
party k1 : 1
party k2 : 2 3
resource i1 : 1 2
resource i2 : 1 3
resource i3 : 3 4
resource i4 : 4 5
";

    #[test]
    fn parses_prelim() {
        let inst = parse_instance(PRELIM_TEXT).unwrap();
        assert_eq!(inst.agents().len(), 5);
        assert_eq!(inst.parties().len(), 2);
        assert_eq!(inst.resources().len(), 4);
        assert_eq!(inst, builtin_instance("prelim").unwrap());
        assert_eq!(
            serialize_instance(&inst),
            PRELIM_TEXT.replace("# the five-agent example\n", "")
        );
    }

    #[test]
    fn empty_input_has_no_header() {
        assert_eq!(parse_instance(""), Err(ParseError::NoHeader));
        assert_eq!(parse_instance("# only a comment\n\n"), Err(ParseError::NoHeader));
        assert_eq!(parse_instance("maxmin 2\n"), Err(ParseError::BadHeader { line: 1 }));
    }

    #[test]
    fn undeclared_reference_names_agent() {
        let err = parse_instance("maxmin 1\nagent v1\nparty k1 : v9\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::UndeclaredAgent {
                line: 3,
                agent: "v9".into()
            }
        );
        assert!(err.to_string().contains("v9"));
    }

    #[test]
    fn syntax_and_duplicates() {
        let dup = parse_instance("maxmin 1\nagent a\nagent a\n").unwrap_err();
        assert!(matches!(dup, ParseError::Duplicate { line: 3, .. }));
        let dup_party = parse_instance("maxmin 1\nagent a\nparty k : a\nparty k : a\n").unwrap_err();
        assert!(matches!(
            dup_party,
            ParseError::Duplicate {
                line: 4,
                kind: "party",
                ..
            }
        ));
        let bad = parse_instance("maxmin 1\nagent a-b\n").unwrap_err();
        assert!(matches!(bad, ParseError::Syntax { line: 2, .. }));
        let no_colon = parse_instance("maxmin 1\nagent a\nparty k a\n").unwrap_err();
        assert!(matches!(no_colon, ParseError::Syntax { line: 3, .. }));
        let empty = parse_instance("maxmin 1\nagent a\nresource i :\n").unwrap_err();
        assert!(matches!(empty, ParseError::Syntax { line: 3, .. }));
        let twice = parse_instance("maxmin 1\nagent a\nresource i : a a\n").unwrap_err();
        assert!(matches!(twice, ParseError::Syntax { line: 3, .. }));
        assert_eq!(parse_instance_bytes(&[0xff, 0xfe]), Err(ParseError::Encoding));
    }

    #[test]
    fn builtin_shapes() {
        let isp = builtin_instance("isp").unwrap();
        assert_eq!(
            (isp.agents().len(), isp.parties().len(), isp.resources().len()),
            (14, 7, 5)
        );
        let prelim = builtin_instance("prelim").unwrap();
        assert_eq!(
            (prelim.agents().len(), prelim.parties().len(), prelim.resources().len()),
            (5, 2, 4)
        );
        assert!(matches!(builtin_instance("nope"), Err(BuiltinError::Unknown(_))));
    }

    #[test]
    fn round_trips_builtins() {
        for name in BUILTIN_NAMES {
            let inst = builtin_instance(name).unwrap();
            let text = serialize_instance(&inst);
            assert_eq!(parse_instance(&text).unwrap(), inst);
            assert_eq!(serialize_instance(&parse_instance(&text).unwrap()), text);
        }
    }

    #[test]
    fn assignment_format() {
        let x = Assignment::from_pairs([("1", ratio(1, 2)), ("2", ratio(0, 1))]).unwrap();
        let text = write_assignment(&x, &ratio(1, 2));
        assert_eq!(text, "x 1 1/2\nx 2 0/1\nomega 1/2\n");
        let back = parse_assignment(&format!("{text}iterations 4\n")).unwrap();
        assert_eq!(back.values, x);
        assert_eq!(back.omega, ratio(1, 2));
        assert_eq!(back.iterations, Some(4));
        assert!(parse_assignment("x 1 2/4\nomega 1/2\n").is_err());
        assert!(parse_assignment("x 1 1/2\n").is_err());
        assert!(parse_assignment("omega 1/2\nx 1 1/2\n").is_err());
    }

    fn params(seed: u64) -> GeneratorParams {
        GeneratorParams {
            n_agents: 20,
            n_parties: 12,
            n_resources: 9,
            max_vi: 3,
            max_vk: 2,
            max_iv: 2,
            max_kv: 2,
            seed,
        }
    }

    #[test]
    fn generator_is_deterministic() {
        assert_eq!(
            random_instance(&params(7)).unwrap(),
            random_instance(&params(7)).unwrap()
        );
        assert_ne!(
            random_instance(&params(7)).unwrap(),
            random_instance(&params(8)).unwrap()
        );
    }

    #[test]
    fn generator_singleton() {
        let p = GeneratorParams {
            n_agents: 1,
            n_parties: 1,
            n_resources: 1,
            max_vi: 1,
            max_vk: 1,
            max_iv: 1,
            max_kv: 1,
            seed: 0,
        };
        assert_eq!(
            serialize_instance(&random_instance(&p).unwrap()),
            "maxmin 1\nagent v1\nparty k1 : v1\nresource i1 : v1\n"
        );
    }

    #[test]
    fn generator_respects_vk_cap() {
        let b = degree_bounds(&random_instance(&params(3)).unwrap()).unwrap();
        assert!(b.delta_vk <= 2);
    }

    #[test]
    fn generator_rejects_unsatisfiable() {
        let mut p = params(1);
        p.n_resources = 2;
        assert!(random_instance(&p).is_err());
        p = params(1);
        p.max_iv = 0;
        assert!(random_instance(&p).is_err());
    }
}
