//! `cnash`: scenario validation, solvers and limit experiments from the
//! command line.
//!
//! Exit codes: 0 success, 2 invalid input or failed hypotheses, 3 no plan or
//! profile of finite cost, 4 a `--check` criterion failed, 5 I/O error.
//! Identical arguments give byte-identical output files.

pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cournot_nash::game::{potential_closed_pure, potential_open};
use cournot_nash::limits::{hoeffding_check, lln_symmetric_check, stability_check, verify_gluing, ExperimentRecord, GammaSetup};
use cournot_nash::measures::sample_empirical;
use cournot_nash::nplayer::{
    best_response_dynamics_closed, best_response_dynamics_open, solve_closed_mixed, verify_nash_closed, verify_nash_closed_pure,
    verify_nash_open, DynamicsConfig, Init,
};
use cournot_nash::schema::BUILTIN;
use cournot_nash::{
    capacity, infimum_finite, load_builtin, median, solve_frank_wolfe, stream_rng, validate_hypotheses, verify_cournot_nash,
    DiscreteMeasure, Error, FwConfig, Scenario, ScenarioFile, StreamRng,
};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use report::{emit, strictly_decreasing, to_json};

#[derive(Debug, Parser)]
#[command(name = "cnash", version, about = "Cournot-Nash equilibria of pairwise-interaction potential games")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the scenario hypotheses and whether a finite-energy plan exists.
    Validate(Common),
    /// Minimize the energy over transport plans and certify the equilibrium.
    SolveContinuum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tol: Tolerances,
        /// Seed of the multistart used for nonconvex interactions.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Nash equilibrium of the N-player game.
    SolveNplayer {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        tol: Tolerances,
        /// JSON array of player types (indices into X).
        #[arg(long, conflicts_with = "sample", required_unless_present = "sample")]
        types: Option<PathBuf>,
        /// Sample `N` i.i.d. types from the scenario's type distribution: `N,SEED`.
        #[arg(long, value_parser = parse_sample)]
        sample: Option<(usize, u64)>,
        #[arg(long, value_enum, default_value_t = Mode::Closed)]
        mode: Mode,
    },
    /// Finite-N games against the continuum limit over a ladder of N and seeds.
    /// Writes the replica CSV to `--out` and the median summary to
    /// `--summary` (default: next to `--out` with extension `summary.json`).
    GammaExp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        ladder: Ladder,
        #[arg(long, default_value_t = 1e-8, value_parser = positive)]
        gap_tol: f64,
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Worker threads; results do not depend on it.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: u64,
        /// Record wall-clock time per replica (breaks byte-determinism).
        #[arg(long)]
        timing: bool,
    },
    /// Compare minimal energies at random pairs of type distributions with the
    /// gluing bound. Needs a scenario with a gluing operator.
    StabilityTest {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        pairs: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-8, value_parser = positive)]
        gap_tol: f64,
    },
    /// Capacity of a set of strategies (default: the strategies of finite cost).
    Capacity {
        #[command(flatten)]
        common: Common,
        /// Comma-separated strategy indices.
        #[arg(long, value_delimiter = ',')]
        set: Option<Vec<usize>>,
    },
    /// Law of large numbers for the symmetric statistic with kernel
    /// `phi(x, x') = d(x, x')` on X.
    Lln {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "100,1000,10000", value_parser = count)]
        ns: Vec<usize>,
        #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Empirical deviation frequency of the sample mean of `f(x) = d(x, x_0)`
    /// against the Hoeffding bound.
    Hoeffding {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100, value_parser = count)]
        n: usize,
        #[arg(long, default_value_t = 0.1, value_parser = positive)]
        eps: f64,
        #[arg(long, default_value_t = 1000, value_parser = trial_count)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario JSON file, or the name of a bundled scenario.
    #[arg(long)]
    pub scenario: String,
    /// Output file; `.csv` selects CSV where records apply, anything else JSON.
    /// Standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with code 4 when the command's acceptance criterion fails; no effect
    /// on `validate` and `capacity`.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct Tolerances {
    #[arg(long, default_value_t = 1e-8, value_parser = positive)]
    pub gap_tol: f64,
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub eps_nash: f64,
}

#[derive(Debug, Args)]
pub struct Ladder {
    #[arg(long, value_delimiter = ',', default_value = "8,32,128,512", value_parser = count)]
    pub ns: Vec<usize>,
    /// Number of seeds per N.
    #[arg(long, default_value_t = 32, value_parser = clap::value_parser!(u64).range(1..))]
    pub seeds: u64,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Closed,
    Open,
    Mixed,
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

fn count(s: &str) -> Result<usize, String> {
    match s.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v),
        _ => Err(format!("`{s}` is not a positive integer")),
    }
}

fn trial_count(s: &str) -> Result<usize, String> {
    match count(s)? {
        v if v >= 100 => Ok(v),
        _ => Err("at least 100 trials are required".into()),
    }
}

fn parse_sample(s: &str) -> Result<(usize, u64), String> {
    let (n, seed) = s.split_once(',').ok_or("expected N,SEED")?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad N `{n}`"))?;
    if n == 0 {
        return Err("N must be at least 1".into());
    }
    Ok((n, seed.trim().parse().map_err(|_| format!("bad seed `{seed}`"))?))
}

/// Reason for a nonzero exit.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Infeasible(String),
    Check(String),
    Io(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Infeasible(_) => 3,
            Failure::Check(_) => 4,
            Failure::Io(_) => 5,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Infeasible(m) | Failure::Check(m) | Failure::Io(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::InfimumInfinite | Error::NoFiniteStrategy(_) => Failure::Infeasible(msg),
            Error::Io(_) => Failure::Io(msg),
            _ => Failure::Validation(msg),
        }
    }
}

/// Runs one command and returns the process exit code; diagnostics go to
/// standard error.
pub fn run(config: &RunConfig) -> i32 {
    match dispatch(&config.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cmd: &Command) -> Result<(), Failure> {
    match cmd {
        Command::Validate(c) => validate(c),
        Command::SolveContinuum { common, tol, seed } => solve_continuum(common, tol, *seed),
        Command::SolveNplayer { common, tol, types, sample, mode } => solve_nplayer(common, tol, types.as_deref(), *sample, *mode),
        Command::GammaExp { common, ladder, gap_tol, summary, jobs, timing } => {
            gamma_exp(common, ladder, *gap_tol, summary.as_deref(), *jobs as usize, *timing)
        }
        Command::StabilityTest { common, pairs, seed, gap_tol } => stability_test(common, *pairs, *seed, *gap_tol),
        Command::Capacity { common, set } => capacity_cmd(common, set.as_deref()),
        Command::Lln { common, ns, seeds, seed } => lln(common, ns, *seeds, *seed),
        Command::Hoeffding { common, n, eps, trials, seed } => hoeffding(common, *n, *eps, *trials, *seed),
    }
}

struct Loaded {
    name: String,
    file: ScenarioFile,
}

impl Loaded {
    fn scenario(&self) -> &Scenario {
        &self.file.scenario
    }
}

/// Reads a scenario from disk, falling back to the bundled ones by name.
fn load_raw(spec: &str) -> Result<Loaded, Failure> {
    let path = Path::new(spec);
    let file = if path.exists() {
        ScenarioFile::load(path)?
    } else if BUILTIN.contains(&spec.strip_suffix(".json").unwrap_or(spec)) {
        load_builtin(spec)?
    } else {
        return Err(Failure::Io(format!("{spec}: no such file or bundled scenario")));
    };
    let stem = path.file_stem().map_or(spec.to_string(), |s| s.to_string_lossy().into_owned());
    Ok(Loaded { name: file.name.clone().unwrap_or(stem), file })
}

fn load(spec: &str) -> Result<Loaded, Failure> {
    let l = load_raw(spec)?;
    let rep = validate_hypotheses(l.scenario());
    if !rep.all_pass() {
        return Err(Failure::Validation(format!("{}: hypotheses fail: {}", l.name, serde_json::to_string(&rep).unwrap_or_default())));
    }
    Ok(l)
}

fn check(enabled: bool, ok: bool, what: &str) -> Result<(), Failure> {
    if enabled && !ok {
        Err(Failure::Check(what.into()))
    } else {
        Ok(())
    }
}

fn is_csv(out: Option<&Path>) -> bool {
    out.and_then(Path::extension).is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn validate(c: &Common) -> Result<(), Failure> {
    let l = load_raw(&c.scenario)?;
    let s = l.scenario();
    let rep = validate_hypotheses(s);
    let (finite, _) = infimum_finite(s);
    let doc = json!({
        "schema": 1,
        "scenario": l.name,
        "nx": s.nx(),
        "ny": s.ny(),
        "hypotheses": rep,
        "all_pass": rep.all_pass(),
        "has_gluing": l.file.gluing.is_some(),
        "infimum_finite": finite,
    });
    emit(c.out.as_deref(), &to_json(&doc))?;
    if !rep.all_pass() {
        return Err(Failure::Validation(format!("{}: hypotheses fail", l.name)));
    }
    Ok(())
}

fn fw_config(gap_tol: f64, seed: u64) -> FwConfig {
    FwConfig { gap_tol, seed, ..FwConfig::default() }
}

fn solve_continuum(c: &Common, tol: &Tolerances, seed: u64) -> Result<(), Failure> {
    let l = load(&c.scenario)?;
    let s = l.scenario();
    let (plan, report) = solve_frank_wolfe(s, &fw_config(tol.gap_tol, seed))?;
    let eq = verify_cournot_nash(s, &plan, tol.eps_nash);
    let doc = json!({
        "schema": 1,
        "scenario": l.name,
        "plan": plan.rows(),
        "report": report,
        "equilibrium": eq,
    });
    emit(c.out.as_deref(), &to_json(&doc))?;
    check(c.check, eq.is_equilibrium, "the minimizer is not a Cournot-Nash equilibrium")
}

fn read_types(path: &Path) -> Result<Vec<usize>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Validation(format!("{}: expected a JSON array of type indices: {e}", path.display())))
}

fn solve_nplayer(c: &Common, tol: &Tolerances, types: Option<&Path>, sample: Option<(usize, u64)>, mode: Mode) -> Result<(), Failure> {
    let l = load(&c.scenario)?;
    let s = l.scenario();
    let types = match (types, sample) {
        (Some(p), _) => read_types(p)?,
        (None, Some((n, seed))) => sample_empirical(s.mu(), n, seed).0,
        (None, None) => return Err(Failure::Validation("one of --types or --sample is required".into())),
    };
    let dyn_cfg = DynamicsConfig { record_moves: false, ..DynamicsConfig::default() };
    let (doc, is_nash) = match mode {
        Mode::Closed => {
            let (profile, trace) = best_response_dynamics_closed(s, &types, Init::Greedy, &dyn_cfg)?;
            let potential = potential_closed_pure(s, &profile);
            if potential.is_inf() {
                return Err(Failure::Infeasible("every reachable profile has infinite potential".into()));
            }
            let nash = verify_nash_closed_pure(s, &profile, tol.eps_nash);
            let ok = nash.is_nash;
            let doc = json!({"profile": profile, "potential": potential, "nash": nash, "dynamics": trace});
            (doc, ok)
        }
        Mode::Open => {
            let (kernels, trace) = best_response_dynamics_open(s, types.len(), &dyn_cfg)?;
            let potential = potential_open(s, &kernels);
            if potential.is_inf() {
                return Err(Failure::Infeasible("every reachable profile has infinite potential".into()));
            }
            let nash = verify_nash_open(s, &kernels, tol.eps_nash);
            let ok = nash.is_nash;
            let doc = json!({"kernels": kernels, "potential": potential, "nash": nash, "dynamics": trace});
            (doc, ok)
        }
        Mode::Mixed => {
            let sol = solve_closed_mixed(s, &types, &fw_config(tol.gap_tol, 0))?;
            let nash = verify_nash_closed(s, &types, &sol.strategies, tol.eps_nash);
            let ok = nash.is_nash;
            let doc =
                json!({"types": types, "strategies": sol.strategies, "potential": sol.report.value, "report": sol.report, "nash": nash});
            (doc, ok)
        }
    };
    let mut doc = doc;
    doc["schema"] = json!(1);
    doc["scenario"] = json!(l.name);
    doc["mode"] = json!(format!("{mode:?}").to_lowercase());
    doc["N"] = json!(types.len());
    emit(c.out.as_deref(), &to_json(&doc))?;
    check(c.check, is_nash, "the profile is not a Nash equilibrium")
}

fn default_summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.json")
}

fn gamma_exp(c: &Common, ladder: &Ladder, gap_tol: f64, summary: Option<&Path>, jobs: usize, timing: bool) -> Result<(), Failure> {
    let l = load(&c.scenario)?;
    let setup = GammaSetup::new(l.scenario(), l.name.clone(), &fw_config(gap_tol, 0), timing)?;
    let jobs_list: Vec<(usize, u64)> =
        ladder.ns.iter().flat_map(|&n| (ladder.seed..ladder.seed + ladder.seeds).map(move |seed| (n, seed))).collect();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| Failure::Io(e.to_string()))?;
    let mut records: Vec<ExperimentRecord> =
        pool.install(|| jobs_list.par_iter().map(|&(n, seed)| setup.replica(n, seed)).collect::<Result<_, _>>())?;
    let csv = report::experiment_csv(&mut records)?;
    let (summary_doc, pass) = report::experiment_summary(&l.name, setup.value_limit(), &records);
    emit(c.out.as_deref(), &csv)?;
    let summary_path = summary.map(Path::to_path_buf).or_else(|| c.out.as_deref().map(default_summary_path));
    match summary_path {
        Some(p) => emit(Some(&p), &to_json(&summary_doc))?,
        None => eprint!("{}", to_json(&summary_doc)),
    }
    check(c.check, pass, "medians do not decrease along the N ladder")
}

/// Random distribution on a random nonempty subset of `0..n`.
fn random_measure(rng: &mut StreamRng, n: usize) -> DiscreteMeasure {
    let support: Vec<usize> = loop {
        let sup: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.6)).collect();
        if !sup.is_empty() {
            break sup;
        }
    };
    let raw: Vec<f64> = support.iter().map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::new(support, raw.iter().map(|v| v / total).collect()).expect("normalized weights")
}

#[derive(Serialize)]
struct StabilityRow {
    pair: u64,
    value0: f64,
    value1: f64,
    delta: f64,
    w1: f64,
    bound: f64,
    tightness: f64,
    glue_slack: f64,
    passes: bool,
}

fn stability_test(c: &Common, pairs: u64, seed: u64, gap_tol: f64) -> Result<(), Failure> {
    let l = load(&c.scenario)?;
    let s = l.scenario();
    let g = l.file.gluing.as_ref().ok_or_else(|| Failure::Validation(format!("{}: scenario has no gluing operator", l.name)))?;
    let (verified, tight) = verify_gluing(s, g);
    if !verified {
        return Err(Failure::Validation(format!("{}: gluing constant {} is below the tight value {tight}", l.name, g.constant())));
    }
    let cfg = fw_config(gap_tol, seed);
    let mut rows = Vec::new();
    for pair in 0..pairs {
        let mut rng = stream_rng(seed, pair);
        let mu0 = random_measure(&mut rng, s.nx());
        let mu1 = random_measure(&mut rng, s.nx());
        let r = stability_check(s, g, &mu0, &mu1, &cfg)?;
        rows.push(StabilityRow {
            pair,
            value0: r.value0,
            value1: r.value1,
            delta: r.delta,
            w1: r.w1,
            bound: r.bound,
            tightness: r.tightness,
            glue_slack: r.glue_slack,
            passes: r.passes,
        });
    }
    let pass = rows.iter().all(|r| r.passes);
    let text = if is_csv(c.out.as_deref()) {
        report::records_csv(&rows)?
    } else {
        to_json(&json!({"schema": 1, "scenario": l.name, "constant": g.constant(), "tight_constant": tight, "records": rows, "pass": pass}))
    };
    emit(c.out.as_deref(), &text)?;
    check(c.check, pass, "a pair violates the stability bound")
}

fn capacity_cmd(c: &Common, set: Option<&[usize]>) -> Result<(), Failure> {
    let l = load(&c.scenario)?;
    let s = l.scenario();
    let set: Vec<usize> = match set {
        Some(k) => k.to_vec(),
        None => (0..s.ny()).filter(|&y| s.l()[y].is_finite()).collect(),
    };
    if let Some(&y) = set.iter().find(|&&y| y >= s.ny()) {
        return Err(Failure::Validation(format!("strategy {y} outside Y")));
    }
    let cap = capacity(s, &set)?;
    let (finite, witness) = infimum_finite(s);
    let doc = json!({
        "schema": 1,
        "scenario": l.name,
        "set": set,
        "capacity": cap,
        "infimum_finite": finite,
        "witness": witness.as_ref().map(|w| w.rows()),
    });
    emit(c.out.as_deref(), &to_json(&doc))
}

fn lln(c: &Common, ns: &[usize], seeds: u64, seed: u64) -> Result<(), Failure> {
    let l = load(&c.scenario)?;
    let s = l.scenario();
    let x = s.space_x();
    let phi: Vec<Vec<f64>> = (0..s.nx()).map(|a| (0..s.nx()).map(|b| x.dist(a, b)).collect()).collect();
    let seed_list: Vec<u64> = (seed..seed + seeds).collect();
    let recs = lln_symmetric_check(&phi, s.mu(), ns, &seed_list)?;
    let mut sorted_ns = ns.to_vec();
    sorted_ns.sort_unstable();
    sorted_ns.dedup();
    let medians: Vec<f64> = sorted_ns
        .iter()
        .map(|&n| {
            let mut v: Vec<f64> = recs.iter().filter(|r| r.n == n).map(|r| r.abs_err).collect();
            median(&mut v)
        })
        .collect();
    let pass = strictly_decreasing(&medians);
    let text = if is_csv(c.out.as_deref()) {
        report::records_csv(&recs)?
    } else {
        let per_n: Vec<Value> = sorted_ns.iter().zip(&medians).map(|(n, m)| json!({"N": n, "median_abs_err": m})).collect();
        to_json(&json!({"schema": 1, "scenario": l.name, "records": recs, "medians": per_n, "pass": pass}))
    };
    emit(c.out.as_deref(), &text)?;
    check(c.check, pass, "LLN medians do not decrease")
}

fn hoeffding(c: &Common, n: usize, eps: f64, trials: usize, seed: u64) -> Result<(), Failure> {
    let l = load(&c.scenario)?;
    let s = l.scenario();
    let values: Vec<f64> = (0..s.nx()).map(|x| s.space_x().dist(x, 0)).collect();
    let hi = values.iter().copied().fold(0.0, f64::max);
    let rec = hoeffding_check(&values, (0.0, hi), s.mu(), n, eps, trials, seed)?;
    let text = if is_csv(c.out.as_deref()) {
        report::records_csv(std::slice::from_ref(&rec))?
    } else {
        to_json(&json!({"schema": 1, "scenario": l.name, "record": rec, "pass": rec.passes}))
    };
    emit(c.out.as_deref(), &text)?;
    check(c.check, rec.passes, "deviation frequency exceeds the Hoeffding allowance")
}
