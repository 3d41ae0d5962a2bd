//! `maxmin` command-line front end.
//!
//! Exit codes: 0 ok, 1 internal error or failed self-check, 2 invalid
//! input, 3 size cap exceeded, 4 precondition violated.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::algorithm::{
    locality_check, locality_radius, solve_traced, LocalityError, SolveError, SolveOptions, StatsSource,
};
use crate::instance::{self, Instance, InstanceError, SupportKind};
use crate::io::{self, GenerateError, GeneratorParams};
use crate::oracle::{self, OracleError};
use crate::rational::{self, Rational};
use crate::reduction::ReductionError;
use crate::walks::{format_stats, WalkError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_PRECONDITION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "maxmin", version, about = "Local approximation for 0/1 max-min packing LPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the local algorithm and print the assignment.
    Solve {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        radius: Radius,
        /// Compute walk statistics centrally or by simulating rounds.
        #[arg(long, value_enum, default_value_t = StatsArg::Central)]
        stats: StatsArg,
        #[command(flatten)]
        output: Output,
    },
    /// Exact optimum by rational simplex.
    Oracle {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = oracle::DEFAULT_AGENT_CAP)]
        cap: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Solve and compare against the exact optimum and the guarantee.
    Compare {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        radius: Radius,
        #[arg(long, default_value_t = oracle::DEFAULT_AGENT_CAP)]
        cap: usize,
        #[command(flatten)]
        output: Output,
    },
    /// Print the per-vertex walk statistics of the coloured graph.
    Stats {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        radius: Radius,
        /// Also print the graph's vertices and edges.
        #[arg(long)]
        dump_graph: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Write a seeded random instance.
    Gen {
        #[arg(long, default_value_t = 10)]
        agents: usize,
        #[arg(long, default_value_t = 6)]
        parties: usize,
        #[arg(long, default_value_t = 6)]
        resources: usize,
        /// Largest resource.
        #[arg(long, default_value_t = 3)]
        max_vi: usize,
        /// Largest party.
        #[arg(long, default_value_t = 2)]
        max_vk: usize,
        /// Most resources per agent.
        #[arg(long, default_value_t = 2)]
        max_iv: usize,
        /// Most parties per agent.
        #[arg(long, default_value_t = 2)]
        max_kv: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that far-away edits leave a probe agent's value unchanged.
    Locality {
        #[command(flatten)]
        radius: Radius,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Minimum hop distance of edited agents from the probe
        /// [default: 2R + 3].
        #[arg(long)]
        edit_distance: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    #[arg(long, value_name = "FILE")]
    pub instance: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    pub builtin: Option<String>,
}

#[derive(Debug, Args)]
pub struct Radius {
    #[arg(long, short = 'R', default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub radius: u64,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the result here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    /// One JSON record per run.
    Structured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsArg {
    Central,
    Rounds,
}

/// A failed command: exit code plus message for stderr.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<InstanceError> for Failure {
    fn from(e: InstanceError) -> Self {
        Failure::new(EXIT_INVALID, e.to_string())
    }
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        let code = match e {
            ReductionError::Instance(_) | ReductionError::PartyTooLarge(_) | ReductionError::IdCollision(_) => {
                EXIT_INVALID
            }
            ReductionError::Infeasible(..) => EXIT_INTERNAL,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<SolveError> for Failure {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Instance(e) => e.into(),
            SolveError::Reduction(e) => e.into(),
            SolveError::Transform(ref t) => {
                let code = match t {
                    crate::transform::TransformError::IdCollision(_) => EXIT_INVALID,
                    crate::transform::TransformError::Instance(_) => EXIT_INVALID,
                    _ => EXIT_INTERNAL,
                };
                Failure::new(code, e.to_string())
            }
            other => Failure::new(EXIT_INTERNAL, other.to_string()),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::CapExceeded { .. } => EXIT_CAP,
            OracleError::Instance(_) => EXIT_INVALID,
            OracleError::Internal(_) | OracleError::MalformedWalk(_) => EXIT_INTERNAL,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<WalkError> for Failure {
    fn from(e: WalkError) -> Self {
        Failure::new(EXIT_PRECONDITION, e.to_string())
    }
}

type CmdResult = Result<String, Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let (result, target) = dispatch(cli.command);
    match result {
        Ok(text) => match target {
            Some(path) => match std::fs::write(&path, text) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    let _ = writeln!(err, "error: cannot write {}: {e}", path.display());
                    EXIT_INTERNAL
                }
            },
            None => {
                let _ = out.write_all(text.as_bytes());
                EXIT_OK
            }
        },
        Err(Failure { code, message }) => {
            let _ = writeln!(err, "error: {message}");
            code
        }
    }
}

fn dispatch(command: Command) -> (CmdResult, Option<PathBuf>) {
    match command {
        Command::Solve {
            source,
            radius,
            stats,
            output,
        } => (cmd_solve(&source, radius.radius, stats, output.format), output.out),
        Command::Oracle { source, cap, output } => (cmd_oracle(&source, cap, output.format), output.out),
        Command::Compare {
            source,
            radius,
            cap,
            output,
        } => (cmd_compare(&source, radius.radius, cap, output.format), output.out),
        Command::Stats {
            source,
            radius,
            dump_graph,
            output,
        } => (cmd_stats(&source, radius.radius, dump_graph, output.format), output.out),
        Command::Gen {
            agents,
            parties,
            resources,
            max_vi,
            max_vk,
            max_iv,
            max_kv,
            seed,
            out,
        } => {
            let params = GeneratorParams {
                n_agents: agents,
                n_parties: parties,
                n_resources: resources,
                max_vi,
                max_vk,
                max_iv,
                max_kv,
                seed,
            };
            (cmd_gen(&params), out)
        }
        Command::Locality {
            radius,
            seed,
            trials,
            edit_distance,
            output,
        } => (
            cmd_locality(radius.radius, seed, trials, edit_distance, output.format),
            output.out,
        ),
    }
}

fn load(source: &Source) -> Result<Instance, Failure> {
    match (&source.instance, &source.builtin) {
        (Some(path), None) => {
            let bytes = std::fs::read(path)
                .map_err(|e| Failure::new(EXIT_INVALID, format!("cannot read {}: {e}", path.display())))?;
            io::parse_instance_bytes(&bytes).map_err(|e| Failure::new(EXIT_INVALID, format!("{}: {e}", path.display())))
        }
        (None, Some(name)) => io::builtin_instance(name).map_err(|e| Failure::new(EXIT_INVALID, e.to_string())),
        _ => Err(Failure::new(
            EXIT_INVALID,
            "give exactly one of --instance or --builtin",
        )),
    }
}

fn q(value: &Rational) -> String {
    rational::format(value)
}

fn json_rational(value: Option<&Rational>) -> Value {
    value.map_or(Value::Null, |v| Value::String(q(v)))
}

fn render(format: Format, text: String, record: Value) -> String {
    match format {
        Format::Text => text,
        Format::Structured => format!("{record}\n"),
    }
}

fn cmd_solve(source: &Source, radius: u64, stats: StatsArg, format: Format) -> CmdResult {
    let inst = load(source)?;
    let options = SolveOptions {
        stats: match stats {
            StatsArg::Central => StatsSource::Central,
            StatsArg::Rounds => StatsSource::Rounds,
        },
        delta: None,
    };
    let trace = solve_traced(&inst, radius, &options)?;
    let r = &trace.report;
    let mut text = io::write_assignment(&trace.assignment, &r.omega);
    let _ = writeln!(text, "# radius {radius}");
    let _ = writeln!(text, "# delta {}", r.delta);
    let _ = writeln!(
        text,
        "# guarantee {}",
        r.guarantee_factor.as_ref().map_or("none".to_string(), q)
    );
    let _ = writeln!(text, "# feasible {}", r.feasible);
    if r.empty_graph {
        let _ = writeln!(text, "# empty graph after pruning");
    }
    for (stage, t) in &r.timings {
        let _ = writeln!(text, "# time {stage} {}us", t.as_micros());
    }
    let record = json!({
        "command": "solve",
        "radius": radius,
        "x": trace.assignment.iter().map(|(a, v)| (a.clone(), Value::String(q(v)))).collect::<serde_json::Map<_, _>>(),
        "omega": q(&r.omega),
        "guarantee": json_rational(r.guarantee_factor.as_ref()),
        "feasible": r.feasible,
        "delta": r.delta,
        "empty_graph": r.empty_graph,
        "timings_us": r.timings.iter().map(|(s, t)| (s.to_string(), json!(t.as_micros() as u64))).collect::<serde_json::Map<_, _>>(),
    });
    Ok(render(format, text, record))
}

fn cmd_oracle(source: &Source, cap: usize, format: Format) -> CmdResult {
    let inst = load(source)?;
    let result = oracle::optimum_with_cap(&inst, cap)?;
    let record = json!({
        "command": "oracle",
        "omega_star": q(&result.omega_star),
        "witness": result.witness.iter().map(|(a, v)| (a.clone(), Value::String(q(v)))).collect::<serde_json::Map<_, _>>(),
        "iterations": result.iterations,
    });
    Ok(render(format, result.to_text(), record))
}

/// `ω*/ω`, `None` meaning infinite. `ω* = 0` gives 1 by convention.
pub fn empirical_ratio(omega: &Rational, omega_star: &Rational) -> Option<Rational> {
    use num_traits::Zero;
    if omega_star.is_zero() {
        Some(rational::one())
    } else if omega.is_zero() {
        None
    } else {
        Some(omega_star / omega)
    }
}

fn cmd_compare(source: &Source, radius: u64, cap: usize, format: Format) -> CmdResult {
    use num_traits::Zero;
    let inst = load(source)?;
    let opt = oracle::optimum_with_cap(&inst, cap)?;
    let trace = solve_traced(&inst, radius, &SolveOptions::default())?;
    let r = &trace.report;
    let ratio = empirical_ratio(&r.omega, &opt.omega_star);
    let degenerate = opt.omega_star.is_zero();
    let within = match (&r.guarantee_factor, &ratio) {
        (None, _) => None,
        (Some(_), None) => Some(false),
        (Some(g), Some(e)) => Some(e <= g),
    };
    let ratio_text = ratio.as_ref().map_or("inf".to_string(), q);
    let mut text = String::new();
    let _ = writeln!(text, "omega {}", q(&r.omega));
    let _ = writeln!(text, "omega_star {}", q(&opt.omega_star));
    let _ = writeln!(text, "ratio {ratio_text}");
    if degenerate {
        let _ = writeln!(text, "# optimum is 0, ratio reported as 1");
    }
    let _ = writeln!(
        text,
        "guarantee {}",
        r.guarantee_factor.as_ref().map_or("none".to_string(), q)
    );
    let _ = writeln!(text, "radius {radius}");
    let _ = writeln!(text, "delta {}", r.delta);
    let _ = writeln!(text, "feasible {}", r.feasible);
    let verdict = match within {
        None => "unchecked",
        Some(true) => "ok",
        Some(false) => "VIOLATED",
    };
    let _ = writeln!(text, "check {verdict}");
    let record = json!({
        "command": "compare",
        "radius": radius,
        "omega": q(&r.omega),
        "omega_star": q(&opt.omega_star),
        "ratio": ratio.as_ref().map_or(Value::String("inf".into()), |e| Value::String(q(e))),
        "degenerate_optimum": degenerate,
        "guarantee": json_rational(r.guarantee_factor.as_ref()),
        "delta": r.delta,
        "feasible": r.feasible,
        "check": verdict,
    });
    let rendered = render(format, text, record);
    if within == Some(false) {
        return Err(Failure::new(
            EXIT_INTERNAL,
            format!("{rendered}empirical ratio {ratio_text} exceeds the guarantee"),
        ));
    }
    Ok(rendered)
}

fn cmd_stats(source: &Source, radius: u64, dump_graph: bool, format: Format) -> CmdResult {
    let inst = load(source)?;
    let map = crate::reduction::split_constraints(&inst)?;
    let (_, graph) =
        crate::transform::transform(&map.reduced).map_err(|e| Failure::new(EXIT_INVALID, e.to_string()))?;
    let stats = crate::walks::compute_stats(&graph, radius)?;
    let mut text = String::new();
    if dump_graph {
        text.push_str(&graph.dump());
    }
    text.push_str(&format_stats(&stats));
    let record = json!({
        "command": "stats",
        "radius": radius,
        "stats": stats.iter().map(|(id, s)| (id.clone(), json!({
            "akk_le_r": s.akk_le_r,
            "aik_le_r": s.aik_le_r,
            "bik": s.bik,
            "bkk": s.bkk,
            "bi": s.bi,
            "bk": s.bk,
        }))).collect::<serde_json::Map<_, _>>(),
        "graph": dump_graph.then(|| graph.dump()),
    });
    Ok(render(format, text, record))
}

fn cmd_gen(params: &GeneratorParams) -> CmdResult {
    io::random_instance(params)
        .map(|inst| io::serialize_instance(&inst))
        .map_err(|e: GenerateError| Failure::new(EXIT_PRECONDITION, e.to_string()))
}

/// Two instances that agree everywhere except on supports whose members
/// are all at least `edit_distance` hops from `probe`.
#[derive(Debug, Clone)]
pub struct LocalityPair {
    pub a: Instance,
    pub b: Instance,
    pub probe: String,
    pub edits: Vec<String>,
}

/// Chain-shaped instance long enough to have agents `edit_distance` hops
/// from the probe, plus one to three edits among those far agents. Both
/// instances keep the same largest resource (the first one has size 3) so
/// `Δ` is shared.
pub fn locality_pair(rng: &mut impl Rng, edit_distance: usize) -> LocalityPair {
    // Every agent is within 1 + j/2 hops of v1 and at least j/2 hops away.
    let n = 2 * edit_distance + 8;
    let name = |j: usize| format!("v{j}");
    let mut a = Instance::new();
    for j in 1..=n {
        a.add_agent(name(j)).expect("fresh id");
    }
    let mut j = 1;
    let mut k = 0;
    while j <= n {
        if rng.random_bool(0.1) {
            j += 1;
            continue;
        }
        k += 1;
        if j < n && rng.random_bool(0.7) {
            a.add_party(format!("k{k}"), [name(j), name(j + 1)]).expect("fresh id");
            j += 2;
        } else {
            a.add_party(format!("k{k}"), [name(j)]).expect("fresh id");
            j += 1;
        }
    }
    if a.parties().is_empty() {
        a.add_party("k1", [name(1)]).expect("fresh id");
    }
    a.add_resource("i1", [name(1), name(2), name(3)]).expect("fresh id");
    for j in 2..n {
        let id = format!("i{j}");
        if j + 2 <= n && rng.random_bool(0.3) {
            a.add_resource(id, [name(j), name(j + 1), name(j + 2)])
                .expect("fresh id");
        } else {
            a.add_resource(id, [name(j), name(j + 1)]).expect("fresh id");
        }
    }
    let probe = name(rng.random_range(1..=3));

    let view = instance::HypergraphView::new(&a);
    let dist = view.distances(&probe, n).expect("probe exists");
    let far: Vec<String> = a
        .agents()
        .iter()
        .filter(|v| dist.get(*v).is_none_or(|&d| d >= edit_distance))
        .cloned()
        .collect();
    let all_far = |members: &[String]| members.iter().all(|m| far.contains(m));

    let mut b = a.clone();
    let mut edits = Vec::new();
    for e in 0..rng.random_range(1..=3) {
        match rng.random_range(0..4) {
            0 => {
                let size = rng.random_range(1..=3.min(far.len()));
                let members: Vec<&String> = far.choose_multiple(rng, size).collect();
                let id = format!("extra_i{e}");
                b.add_resource(id.clone(), members.iter().map(|s| s.as_str()))
                    .expect("fresh id");
                edits.push(format!("add resource {id}"));
            }
            1 => {
                let size = rng.random_range(1..=2.min(far.len()));
                let members: Vec<&String> = far.choose_multiple(rng, size).collect();
                let id = format!("extra_k{e}");
                b.add_party(id.clone(), members.iter().map(|s| s.as_str()))
                    .expect("fresh id");
                edits.push(format!("add party {id}"));
            }
            kind => {
                let support = if kind == 2 {
                    SupportKind::Resource
                } else {
                    SupportKind::Party
                };
                let cap = if kind == 2 { 3 } else { 2 };
                let open: Vec<String> = b
                    .supports(support)
                    .iter()
                    .filter(|(_, ms)| ms.len() < cap && all_far(ms))
                    .map(|(id, _)| id.clone())
                    .collect();
                let (Some(id), Some(agent)) = (open.choose(rng), far.choose(rng)) else {
                    continue;
                };
                if b.extend_support(support, id, agent) {
                    edits.push(format!("add {agent} to {support} {id}"));
                }
            }
        }
    }
    LocalityPair { a, b, probe, edits }
}

fn cmd_locality(radius: u64, seed: u64, trials: usize, edit_distance: Option<usize>, format: Format) -> CmdResult {
    let needed = locality_radius(radius) + 1;
    let edit_distance = edit_distance.unwrap_or(needed);
    if edit_distance < needed {
        return Err(Failure::new(
            EXIT_PRECONDITION,
            format!(
                "edit distance {edit_distance} is inside the radius-{} ball; need at least {needed}",
                needed - 1
            ),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut passed = 0;
    let mut failures = Vec::new();
    for t in 0..trials {
        let pair = locality_pair(&mut rng, edit_distance);
        match locality_check(&pair.a, &pair.b, &pair.probe, radius) {
            Ok(v) if v.equal => passed += 1,
            Ok(v) => failures.push(format!(
                "trial {t}: probe {} got {} vs {} after {:?}",
                v.agent,
                q(&v.value_a),
                q(&v.value_b),
                pair.edits
            )),
            Err(e @ (LocalityError::BallsDiffer { .. } | LocalityError::DeltaDiffers(..))) => {
                return Err(Failure::new(EXIT_PRECONDITION, format!("trial {t}: {e}")));
            }
            Err(e) => return Err(Failure::new(EXIT_INTERNAL, format!("trial {t}: {e}"))),
        }
    }
    let mut text = format!(
        "locality radius {radius} horizon {} trials {trials} passed {passed}\n",
        needed - 1
    );
    for f in &failures {
        let _ = writeln!(text, "# {f}");
    }
    let record = json!({
        "command": "locality",
        "radius": radius,
        "horizon": needed - 1,
        "edit_distance": edit_distance,
        "seed": seed,
        "trials": trials,
        "passed": passed,
        "failures": failures,
    });
    let rendered = render(format, text, record);
    if failures.is_empty() {
        Ok(rendered)
    } else {
        Err(Failure::new(EXIT_INTERNAL, rendered))
    }
}
