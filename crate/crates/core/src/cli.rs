//! Command-line front end: argument parsing, config files and report output.
//!
//! Every command prints its report (text or CSV) to `--out` or stdout and
//! returns exit status 1 when one of its internal cross-checks fails.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_traits::{ToPrimitive, Zero};

use crate::bits::BitBlock;
use crate::bounds::{
    corner_grid, curve_rows, d2d_average_optimal, d2d_per_demand, d2d_worst_exhaustive, d2d_worst_optimal, integer_t,
    parse_grid, shared_link_average, shared_link_per_demand, CurveKind, CURVE_CSV_HEADER,
};
use crate::combinatorics::{
    enumerate_compositions, fmt_float, fmt_rational, int, parse_rational, to_f64, Composition, Rational,
};
use crate::converse::{
    acyclicity_audit, converse_value, describe, is_acyclic, negative_control, report_rows, type_label, TypeLedger,
    CONVERSE_CSV_HEADER,
};
use crate::delivery::{deliver, DeliveryOptions, DemandVector, TransmissionLog};
use crate::error::{Error, Result};
use crate::inactivity::{
    monte_carlo_outage, outage_probability_exact, robust_place_and_deliver, tradeoff_curve_inactivity, DecodeStatus,
    RobustConfig, INACTIVITY_CSV_HEADER,
};
use crate::placement::{file_bits_from_seed, man_placement, MemorySharing, Scenario, SubPieceStore};
use crate::repro::{repro_fig2, repro_fig3, ReproReport};
use crate::subset::UserSet;

#[derive(Parser, Debug)]
#[command(name = "cachesim", version, about = "D2D coded caching simulator")]
pub struct Cli {
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// `key=value` file supplying defaults for unset flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Place, deliver and decode one or more demands bit by bit.
    Simulate(SimulateArgs),
    /// Achievable loads and converse bounds as CSV.
    Bounds(BoundsArgs),
    /// Brute-force converse ledger for small K.
    Converse(ConverseArgs),
    /// MDS-robust scheme: curves, end-to-end runs, outage estimates.
    Inactivity(InactivityArgs),
    /// Regenerate a reference figure and diff it.
    Repro(ReproArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct ScenarioArgs {
    /// Number of files.
    #[arg(short = 'N', long = "files")]
    pub files: Option<usize>,
    /// Number of users.
    #[arg(short = 'K', long = "users")]
    pub users: Option<usize>,
    /// Cache size in files, e.g. `1`, `2/3` or `1.5`.
    #[arg(short = 'M', long = "memory")]
    pub memory: Option<String>,
    /// File size in bits; the smallest valid size when omitted.
    #[arg(short = 'F', long = "file-bits")]
    pub file_bits: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Comma-separated 1-based files, or `worst`, `average`, `all`.
    #[arg(short = 'd', long = "demand")]
    pub demand: Option<String>,
    /// Allow non-integer `t` via memory sharing.
    #[arg(long)]
    pub envelope: bool,
    /// Write the binary transmission log here.
    #[arg(long)]
    pub dump: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Memory grid `start:step:stop`; every corner `tN/K` by default.
    #[arg(long)]
    pub grid: Option<String>,
}

#[derive(Args, Debug)]
pub struct ConverseArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Per-type CSV for every integer `t`.
    #[arg(long)]
    pub report: bool,
}

#[derive(Args, Debug)]
pub struct InactivityArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Per-user inactivity probability.
    #[arg(short = 'p', long = "p")]
    pub p: Option<String>,
    /// Tolerated inactive users; comma-separated for curves.
    #[arg(short = 'a', long = "a")]
    pub a: Option<String>,
    /// Emit trade-off corner points as CSV.
    #[arg(long)]
    pub curve: bool,
    /// Scheme used for `--curve`.
    #[arg(long, default_value = "proposed_worst")]
    pub kind: String,
    /// Smallest and largest `t` for `--curve`, as `lo:hi`.
    #[arg(long)]
    pub t_range: Option<String>,
    /// Run placement, delivery and decoding with inactive users.
    #[arg(long)]
    pub simulate: bool,
    /// Comma-separated 1-based inactive users for `--simulate`; every
    /// inactive set is tried when omitted.
    #[arg(long)]
    pub inactive: Option<String>,
    #[arg(short = 'd', long = "demand")]
    pub demand: Option<String>,
    /// Estimate the outage probability with this many trials.
    #[arg(long)]
    pub trials: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FigureArg {
    Fig2,
    Fig3,
}

#[derive(Args, Debug)]
pub struct ReproArgs {
    pub figure: FigureArg,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Resolved settings after merging flags over the config file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunConfig {
    pub files: Option<usize>,
    pub users: Option<usize>,
    pub memory: Option<Rational>,
    pub file_bits: Option<u64>,
    pub seed: u64,
    pub demand: Option<String>,
    pub p: Option<Rational>,
    pub a: Option<String>,
    pub trials: Option<u64>,
    pub grid: Option<String>,
    pub out: Option<PathBuf>,
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key=value", n + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Parse(format!("{key}: cannot parse {v:?}")))
}

impl RunConfig {
    fn from_scenario(s: &ScenarioArgs) -> Result<Self> {
        Ok(RunConfig {
            files: s.files,
            users: s.users,
            memory: s.memory.as_deref().map(parse_rational).transpose()?,
            file_bits: s.file_bits,
            seed: s.seed.unwrap_or(0),
            ..Default::default()
        })
    }

    /// Fills unset fields from `file`; explicit flags win.
    pub fn merge(mut self, file: &BTreeMap<String, String>, seed_given: bool) -> Result<Self> {
        for (key, v) in file {
            match key.as_str() {
                "N" | "files" if self.files.is_none() => self.files = Some(parse_num(key, v)?),
                "K" | "users" if self.users.is_none() => self.users = Some(parse_num(key, v)?),
                "M" | "memory" if self.memory.is_none() => self.memory = Some(parse_rational(v)?),
                "F" | "file_bits" if self.file_bits.is_none() => self.file_bits = Some(parse_num(key, v)?),
                "seed" if !seed_given => self.seed = parse_num(key, v)?,
                "demand" | "d" if self.demand.is_none() => self.demand = Some(v.clone()),
                "p" if self.p.is_none() => self.p = Some(parse_rational(v)?),
                "a" if self.a.is_none() => self.a = Some(v.clone()),
                "trials" if self.trials.is_none() => self.trials = Some(parse_num(key, v)?),
                "grid" if self.grid.is_none() => self.grid = Some(v.clone()),
                "out" if self.out.is_none() => self.out = Some(PathBuf::from(v)),
                "N" | "files" | "K" | "users" | "M" | "memory" | "F" | "file_bits" | "seed" | "demand" | "d" | "p"
                | "a" | "trials" | "grid" | "out" => {}
                other => return Err(Error::Parse(format!("unknown config key {other:?}"))),
            }
        }
        Ok(self)
    }

    fn files(&self) -> Result<usize> {
        self.files.ok_or_else(|| Error::Parse("missing -N".into()))
    }

    fn users(&self) -> Result<usize> {
        self.users.ok_or_else(|| Error::Parse("missing -K".into()))
    }

    fn memory(&self) -> Result<Rational> {
        self.memory.clone().ok_or_else(|| Error::Parse("missing -M".into()))
    }

    /// Checks `N >= 1`, `2 <= K <= 32` and `N/K <= M <= N`.
    pub fn validate(&self) -> Result<()> {
        let n = self.files()?;
        let k = self.users()?;
        if n == 0 || !(2..=crate::subset::MAX_USERS).contains(&k) {
            return Err(Error::InvalidScenario(format!(
                "need N >= 1 and 2 <= K <= 32, got N={n}, K={k}"
            )));
        }
        if let Some(m) = &self.memory {
            if m * int(k as i64) < int(n as i64) || *m > int(n as i64) {
                return Err(Error::InvalidScenario(format!(
                    "M = {m} outside [N/K, N] = [{}, {n}]",
                    fmt_rational(&(int(n as i64) / int(k as i64)))
                )));
            }
        }
        Ok(())
    }
}

/// Output of a command: report text plus whether every check passed.
#[derive(Debug, Default)]
pub struct Outcome {
    pub text: String,
    pub notes: String,
    pub ok: bool,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            ok: true,
            ..Default::default()
        }
    }

    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    fn note(&mut self, s: impl AsRef<str>) {
        self.notes.push_str(s.as_ref());
        self.notes.push('\n');
    }

    fn check(&mut self, ok: bool) {
        self.ok &= ok;
    }
}

fn ok_str(ok: bool) -> &'static str {
    if ok {
        "OK"
    } else {
        "FAIL"
    }
}

fn load_config(path: Option<&Path>) -> Result<BTreeMap<String, String>> {
    match path {
        None => Ok(BTreeMap::new()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| Error::Parse(format!("cannot read {}: {e}", p.display())))?;
            parse_config_text(&text)
        }
    }
}

/// Parses arguments and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(outcome) => {
            let out_path = cli.out.clone();
            if let Err(e) = emit(&outcome.text, out_path.as_deref()) {
                eprintln!("error: {e}");
                return 2;
            }
            eprint!("{}", outcome.notes);
            if outcome.ok {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let file = load_config(cli.config.as_deref())?;
    match &cli.command {
        Command::Simulate(a) => {
            let mut cfg = RunConfig::from_scenario(&a.scenario)?;
            cfg.demand = a.demand.clone();
            let cfg = cfg.merge(&file, a.scenario.seed.is_some())?;
            cmd_simulate(&cfg, a.envelope, a.dump.as_deref())
        }
        Command::Bounds(a) => {
            let mut cfg = RunConfig::from_scenario(&a.scenario)?;
            cfg.grid = a.grid.clone();
            let cfg = cfg.merge(&file, a.scenario.seed.is_some())?;
            cmd_bounds(&cfg)
        }
        Command::Converse(a) => {
            let cfg = RunConfig::from_scenario(&a.scenario)?.merge(&file, a.scenario.seed.is_some())?;
            cmd_converse(&cfg, a.report)
        }
        Command::Inactivity(a) => {
            let mut cfg = RunConfig::from_scenario(&a.scenario)?;
            cfg.p = a.p.as_deref().map(parse_rational).transpose()?;
            cfg.a = a.a.clone();
            cfg.demand = a.demand.clone();
            cfg.trials = a.trials;
            let cfg = cfg.merge(&file, a.scenario.seed.is_some())?;
            cmd_inactivity(&cfg, a)
        }
        Command::Repro(a) => {
            let seed = match a.seed {
                Some(s) => s,
                None => file.get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(0),
            };
            cmd_repro(a.figure, seed)
        }
    }
}

enum DemandChoice {
    Explicit(DemandVector),
    Worst,
    All { average: bool },
}

fn parse_demand(text: Option<&str>, files: usize, users: usize) -> Result<DemandChoice> {
    let text = text.ok_or_else(|| Error::Parse("missing -d".into()))?;
    match text.trim() {
        "worst" => Ok(DemandChoice::Worst),
        "all" => Ok(DemandChoice::All { average: false }),
        "average" => Ok(DemandChoice::All { average: true }),
        list => {
            let parsed: Vec<usize> = list
                .split(',')
                .map(|x| parse_num("demand", x.trim()))
                .collect::<Result<_>>()?;
            if parsed.len() != users {
                return Err(Error::InvalidDemand(format!(
                    "demand has {} entries, K = {users}",
                    parsed.len()
                )));
            }
            Ok(DemandChoice::Explicit(DemandVector::from_one_based(&parsed, files)?))
        }
    }
}

/// A demand of the type maximising the load at `t`.
fn worst_demand(files: usize, users: usize, t: usize) -> Result<DemandVector> {
    let best = enumerate_compositions(files, users)
        .into_iter()
        .map(|(c, _)| c)
        .max_by(|a, b| {
            crate::bounds::d2d_per_profile(users, t, a.profile()).cmp(&crate::bounds::d2d_per_profile(
                users,
                t,
                b.profile(),
            ))
        })
        .ok_or(Error::Empty("no demand types"))?;
    DemandVector::new(best.representative(), files)
}

/// One simulated delivery, possibly split in two memory-sharing parts.
struct Simulation {
    load: Rational,
    formula: Rational,
    codewords: Vec<Vec<usize>>,
    decoded: Vec<bool>,
    one_shot: bool,
    structure: bool,
    logs: Vec<TransmissionLog>,
}

fn simulate_part(
    scenario: &Scenario,
    contents: &[BitBlock],
    demand: &DemandVector,
) -> Result<(TransmissionLog, Vec<Option<BitBlock>>, bool, bool)> {
    let store = SubPieceStore::from_files(scenario, contents)?;
    let cache = man_placement(&store);
    let report = deliver(demand, &store, &cache, DeliveryOptions::all_active(scenario.users()));
    let files: Vec<Option<BitBlock>> = report
        .decoded
        .iter()
        .map(|d| d.as_ref().ok().map(|d| d.file.clone()))
        .collect();
    let structure = report.log.audit_structure(demand);
    Ok((report.log.clone(), files, report.one_shot(), structure))
}

fn simulate_once(plan: &Plan, demand: &DemandVector, seed: u64) -> Result<Simulation> {
    let originals: Vec<BitBlock> = (0..plan.files)
        .map(|q| file_bits_from_seed(seed, q, plan.file_bits))
        .collect();
    let users = plan.users;
    match &plan.kind {
        PlanKind::Integer(s) => {
            let (log, files, one_shot, structure) = simulate_part(s, &originals, demand)?;
            let decoded = (0..users)
                .map(|k| files[k].as_ref() == Some(&originals[demand.file_of(k)]))
                .collect();
            Ok(Simulation {
                load: log.load(),
                formula: d2d_per_demand(users, s.t(), demand),
                codewords: vec![(0..users).map(|i| log.codeword_count(i)).collect()],
                decoded,
                one_shot,
                structure,
                logs: vec![log],
            })
        }
        PlanKind::Sharing(ms) => {
            let (low_bits, high_bits) = ms.part_sizes();
            let low: Vec<BitBlock> = originals.iter().map(|w| w.slice(0, low_bits as usize)).collect();
            let high: Vec<BitBlock> = originals
                .iter()
                .map(|w| w.slice(low_bits as usize, high_bits as usize))
                .collect();
            let (log_l, files_l, os_l, st_l) = simulate_part(&ms.low, &low, demand)?;
            let (log_h, files_h, os_h, st_h) = simulate_part(&ms.high, &high, demand)?;
            let decoded = (0..users)
                .map(|k| match (&files_l[k], &files_h[k]) {
                    (Some(a), Some(b)) => BitBlock::concat([a, b]) == originals[demand.file_of(k)],
                    _ => false,
                })
                .collect();
            let f = int(plan.file_bits as i64);
            let load = int((log_l.total_bits() + log_h.total_bits()) as i64) / &f;
            let formula = int(low_bits as i64) / &f * d2d_per_demand(users, ms.low.t(), demand)
                + int(high_bits as i64) / &f * d2d_per_demand(users, ms.high.t(), demand);
            Ok(Simulation {
                load,
                formula,
                codewords: vec![
                    (0..users).map(|i| log_l.codeword_count(i)).collect(),
                    (0..users).map(|i| log_h.codeword_count(i)).collect(),
                ],
                decoded,
                one_shot: os_l && os_h,
                structure: st_l && st_h,
                logs: vec![log_l, log_h],
            })
        }
    }
}

enum PlanKind {
    Integer(Scenario),
    Sharing(MemorySharing),
}

struct Plan {
    files: usize,
    users: usize,
    file_bits: u64,
    kind: PlanKind,
}

/// Smallest `F` for which both memory-sharing parts split evenly.
fn min_sharing_bits(files: usize, users: usize, memory: &Rational) -> Result<u64> {
    let t = memory * int(users as i64) / int(files as i64);
    let step = t.denom().to_u64().unwrap_or(1);
    let mut f = step;
    while f <= 1 << 32 {
        if MemorySharing::new(files, users, memory.clone(), f).is_ok() {
            return Ok(f);
        }
        f += step;
    }
    Err(Error::InvalidScenario("no file size below 2^32 splits evenly".into()))
}

fn plan(cfg: &RunConfig, envelope: bool) -> Result<Plan> {
    cfg.validate()?;
    let (n, k, m) = (cfg.files()?, cfg.users()?, cfg.memory()?);
    match integer_t(n, k, &m) {
        Some(t) => {
            let f = cfg.file_bits.unwrap_or_else(|| Scenario::min_file_bits(k, t, 1));
            let s = Scenario::new(n, k, m, f)?;
            s.subpiece_bits()?;
            Ok(Plan {
                files: n,
                users: k,
                file_bits: f,
                kind: PlanKind::Integer(s),
            })
        }
        None if envelope => {
            let f = match cfg.file_bits {
                Some(f) => f,
                None => min_sharing_bits(n, k, &m)?,
            };
            let ms = MemorySharing::new(n, k, m, f)?;
            Ok(Plan {
                files: n,
                users: k,
                file_bits: f,
                kind: PlanKind::Sharing(ms),
            })
        }
        None => Err(Error::InvalidScenario(format!(
            "t = KM/N = {} is not an integer; pass --envelope for memory sharing",
            fmt_rational(&(m * int(k as i64) / int(n as i64)))
        ))),
    }
}

fn cmd_simulate(cfg: &RunConfig, envelope: bool, dump: Option<&Path>) -> Result<Outcome> {
    let plan = plan(cfg, envelope)?;
    let (n, k) = (plan.files, plan.users);
    let mut out = Outcome::new();
    let t_text = fmt_rational(&(cfg.memory()? * int(k as i64) / int(n as i64)));
    out.line(format!(
        "N={n} K={k} M={} t={t_text} F={} seed={}",
        fmt_rational(&cfg.memory()?),
        plan.file_bits,
        cfg.seed
    ));
    let t_for_worst = match &plan.kind {
        PlanKind::Integer(s) => s.t(),
        PlanKind::Sharing(ms) => ms.low.t(),
    };
    let demands: Vec<DemandVector> = match parse_demand(cfg.demand.as_deref(), n, k)? {
        DemandChoice::Explicit(d) => vec![d],
        DemandChoice::Worst => vec![worst_demand(n, k, t_for_worst)?],
        DemandChoice::All { .. } => DemandVector::all(n, k).collect(),
    };
    let average = matches!(
        parse_demand(cfg.demand.as_deref(), n, k)?,
        DemandChoice::All { average: true }
    );
    let single = demands.len() == 1;
    let mut total = Rational::zero();
    for d in &demands {
        let sim = simulate_once(&plan, d, cfg.seed)?;
        let equal = sim.load == sim.formula;
        let all_ok = sim.decoded.iter().all(|&x| x);
        out.check(equal && all_ok && sim.one_shot && sim.structure);
        total += &sim.load;
        if single {
            out.line(format!("demand {d}"));
            for (part, counts) in sim.codewords.iter().enumerate() {
                let label = if sim.codewords.len() > 1 {
                    format!(" part{}", part + 1)
                } else {
                    String::new()
                };
                let shown: Vec<String> = counts.iter().map(|c| c.to_string()).collect();
                out.line(format!("codewords{label} {}", shown.join(" ")));
            }
            out.line(format!(
                "load {} {}",
                fmt_rational(&sim.load),
                fmt_float(to_f64(&sim.load))
            ));
            out.line(format!(
                "formula {} {}",
                fmt_rational(&sim.formula),
                fmt_float(to_f64(&sim.formula))
            ));
            out.line(format!("equal {equal}"));
            for (u, ok) in sim.decoded.iter().enumerate() {
                out.line(format!("user {} decode {}", u + 1, ok_str(*ok)));
            }
            out.line(format!("one-shot {}", ok_str(sim.one_shot)));
            out.line(format!("decomposition {}", ok_str(sim.structure)));
            if let Some(path) = dump {
                let bytes: Vec<u8> = sim.logs.iter().flat_map(|l| l.to_bytes()).collect();
                std::fs::write(path, bytes)
                    .map_err(|e| Error::Parse(format!("cannot write {}: {e}", path.display())))?;
            }
        } else {
            out.line(format!(
                "demand {d} load {} formula {} equal {equal} decode {} one-shot {}",
                fmt_rational(&sim.load),
                fmt_rational(&sim.formula),
                ok_str(all_ok),
                ok_str(sim.one_shot)
            ));
        }
    }
    if average {
        let mean = total / int(demands.len() as i64);
        let expect = match &plan.kind {
            PlanKind::Integer(s) => d2d_average_optimal(n, k, s.t()),
            PlanKind::Sharing(ms) => {
                let f = int(plan.file_bits as i64);
                let (lo, hi) = ms.part_sizes();
                int(lo as i64) / &f * d2d_average_optimal(n, k, ms.low.t())
                    + int(hi as i64) / &f * d2d_average_optimal(n, k, ms.high.t())
            }
        };
        let equal = mean == expect;
        out.check(equal);
        out.line(format!(
            "average load {} {} formula {} equal {equal}",
            fmt_rational(&mean),
            fmt_float(to_f64(&mean)),
            fmt_rational(&expect)
        ));
    }
    Ok(out)
}

/// Demands enumerated directly only when there are at most this many.
const EXHAUSTIVE_LIMIT: u64 = 1 << 20;

fn cmd_bounds(cfg: &RunConfig) -> Result<Outcome> {
    let (n, k) = (cfg.files()?, cfg.users()?);
    RunConfig {
        memory: None,
        ..cfg.clone()
    }
    .validate()?;
    let grid = match &cfg.grid {
        Some(g) => parse_grid(g)?,
        None => corner_grid(n, k),
    };
    let mut out = Outcome::new();
    out.line(CURVE_CSV_HEADER);
    for row in curve_rows(n, k, &grid)? {
        out.line(row.to_csv());
    }
    for t in 1..=k {
        let ok = d2d_worst_optimal(n, k, t) == d2d_worst_exhaustive(n, k, t);
        out.check(ok);
        if !ok {
            out.note(format!("worst-case closed form disagrees with enumeration at t={t}"));
        }
    }
    let demands = (n as u64).checked_pow(k as u32);
    if demands.is_some_and(|d| d <= EXHAUSTIVE_LIMIT) {
        let all: Vec<DemandVector> = DemandVector::all(n, k).collect();
        let count = int(all.len() as i64);
        for t in 1..=k {
            let d2d: Rational = all.iter().map(|d| d2d_per_demand(k, t, d)).sum::<Rational>() / &count;
            let sl: Rational = all
                .iter()
                .map(|d| shared_link_per_demand(k, t, d.distinct()))
                .sum::<Rational>()
                / &count;
            let ok = d2d == d2d_average_optimal(n, k, t) && sl == shared_link_average(n, k, t);
            out.check(ok);
            if !ok {
                out.note(format!("average disagrees with demand enumeration at t={t}"));
            }
        }
        out.note(format!("cross-checked averages over all {} demands", all.len()));
    }
    Ok(out)
}

fn cmd_converse(cfg: &RunConfig, report: bool) -> Result<Outcome> {
    let (n, k) = (cfg.files()?, cfg.users()?);
    RunConfig {
        memory: None,
        ..cfg.clone()
    }
    .validate()?;
    let mut out = Outcome::new();
    if report {
        let (rows, ok) = report_rows(n, k)?;
        out.line(CONVERSE_CSV_HEADER);
        for r in rows {
            out.line(r);
        }
        out.check(ok);
    }
    let t0 = match &cfg.memory {
        Some(m) => m * int(k as i64) / int(n as i64),
        None => Rational::zero(),
    };
    for (composition, _) in enumerate_compositions(n, k) {
        let ledger = TypeLedger::build(&composition)?;
        let closed = (1..=k).all(|t| ledger.closed_form_holds(t));
        let audit = audit_type(&composition)?;
        let mut ok = ledger.symmetric && ledger.aggregate_symmetric && ledger.depends_only_on_size() && closed && audit;
        let mut line = format!(
            "type {} symmetry per-demand {} per-type {} b_t {} acyclic {}",
            type_label(&composition),
            ok_str(ledger.symmetric),
            ok_str(ledger.aggregate_symmetric),
            ok_str(closed),
            ok_str(audit)
        );
        if !t0.is_zero() {
            let rep = converse_value(&composition, &t0)?;
            ok &= rep.envelope_value == rep.lp_value && rep.convex_nonincreasing();
            if rep.achievable.is_some() {
                ok &= rep.tight();
            }
            let _ = write!(line, " {}", describe(&rep));
        }
        out.check(ok);
        if report {
            out.note(line);
        } else {
            out.line(line);
        }
    }
    Ok(out)
}

/// Audits every `(i, u)` for a representative demand of the type.
fn audit_type(composition: &Composition) -> Result<bool> {
    use itertools::Itertools;
    let d = DemandVector::new(composition.representative(), composition.files())?;
    let k = d.users();
    for i in 0..k {
        let rest: Vec<usize> = (0..k).filter(|&x| x != i).collect();
        for u in rest.iter().copied().permutations(rest.len()) {
            if !acyclicity_audit(i, &u, &d) || is_acyclic(&negative_control(i, &u, &d)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn parse_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|x| parse_num("list", x.trim()))
        .collect()
}

fn cmd_inactivity(cfg: &RunConfig, args: &InactivityArgs) -> Result<Outcome> {
    let (n, k) = (cfg.files()?, cfg.users()?);
    let p = cfg.p.clone().unwrap_or_else(Rational::zero);
    let a_list = match &cfg.a {
        Some(a) => parse_list(a)?,
        None => vec![0],
    };
    let mut out = Outcome::new();
    if args.curve {
        let kind: CurveKind = args.kind.parse()?;
        let (lo, hi) = match &args.t_range {
            Some(r) => {
                let (lo, hi) = r
                    .split_once(':')
                    .ok_or_else(|| Error::Parse("t range must be lo:hi".into()))?;
                (parse_num("t", lo)?, parse_num("t", hi)?)
            }
            None => (1, k - 1),
        };
        out.line(INACTIVITY_CSV_HEADER);
        for &a in &a_list {
            for point in tradeoff_curve_inactivity(n, k, &p, a, kind, lo..=hi)? {
                out.line(point.to_csv());
            }
        }
    }
    if args.simulate {
        cfg.validate()?;
        let m = cfg.memory()?;
        let t = integer_t(n, k, &m).ok_or_else(|| Error::InvalidScenario("--simulate needs integer t".into()))?;
        let demand = match parse_demand(cfg.demand.as_deref(), n, k)? {
            DemandChoice::Explicit(d) => d,
            DemandChoice::Worst => worst_demand(n, k, t)?,
            DemandChoice::All { .. } => return Err(Error::Parse("--simulate takes one demand".into())),
        };
        let sets: Vec<UserSet> = match &args.inactive {
            Some(list) => {
                let users = parse_list(list)?;
                if users.iter().any(|&u| u == 0 || u > k) {
                    return Err(Error::InvalidDemand(format!("inactive users must be in [1, {k}]")));
                }
                vec![users.iter().map(|u| u - 1).collect()]
            }
            None => UserSet::full(k).all_subsets().filter(|s| s.len() < k).collect(),
        };
        for &a in &a_list {
            let rc = RobustConfig::new(n, k, t, a, p.clone())?;
            out.line(format!(
                "a={a} m={} n={} factor={} M={}",
                rc.m(),
                rc.n(),
                fmt_rational(&rc.factor()),
                fmt_rational(&rc.memory())
            ));
            for inactive in &sets {
                let active = UserSet::full(k).difference(*inactive);
                let res = robust_place_and_deliver(&rc, &demand, active, cfg.seed, cfg.file_bits)?;
                let expect = inactive.len() <= a || t == k;
                let ok = res.all_decoded() == expect && res.statuses.iter().all(|(_, s)| *s != DecodeStatus::Mismatch);
                out.check(ok);
                let statuses: Vec<String> = res
                    .statuses
                    .iter()
                    .map(|(u, s)| match s {
                        DecodeStatus::Decoded => format!("{}:OK", u + 1),
                        DecodeStatus::Insufficient { have, need } => {
                            format!("{}:short({have}/{need})", u + 1)
                        }
                        DecodeStatus::Mismatch => format!("{}:MISMATCH", u + 1),
                    })
                    .collect();
                out.line(format!(
                    "inactive {} load {} users {} expected {} {}",
                    inactive,
                    fmt_rational(&res.load),
                    statuses.join(" "),
                    if expect { "decode" } else { "outage" },
                    ok_str(ok)
                ));
            }
        }
    }
    if let Some(trials) = cfg.trials {
        let pf = to_f64(&p);
        for &a in &a_list {
            let mc = monte_carlo_outage(k, pf, a, trials, cfg.seed)?;
            let exact = to_f64(&outage_probability_exact(k, &p, a));
            let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
            let ok = (mc.estimate - exact).abs() <= 3.0 * sigma;
            out.check(ok);
            out.line(format!(
                "a={a} trials={trials} estimate {} analytic {} 3sigma {} {}",
                fmt_float(mc.estimate),
                fmt_float(exact),
                fmt_float(3.0 * sigma),
                ok_str(ok)
            ));
        }
    }
    if !args.curve && !args.simulate && cfg.trials.is_none() {
        for &a in &a_list {
            out.line(format!(
                "a={a} P_out {}",
                fmt_float(to_f64(&outage_probability_exact(k, &p, a)))
            ));
        }
    }
    Ok(out)
}

fn cmd_repro(figure: FigureArg, seed: u64) -> Result<Outcome> {
    let report: ReproReport = match figure {
        FigureArg::Fig2 => repro_fig2()?,
        FigureArg::Fig3 => repro_fig3(seed)?,
    };
    let mut out = Outcome::new();
    out.line(ReproReport::POINTS_HEADER);
    for r in report.point_rows() {
        out.line(r);
    }
    for l in report.summary_lines() {
        out.note(l);
    }
    out.check(report.pass());
    Ok(out)
}

/// Applies `CACHESIM_THREADS` to the global thread pool.
pub fn configure_threads() {
    if let Some(n) = std::env::var("CACHESIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> Outcome {
        let cli = Cli::try_parse_from(std::iter::once("cachesim").chain(args.iter().copied())).unwrap();
        execute(&cli).unwrap()
    }

    #[test]
    fn simulate_worked_example() {
        let out = run(&["simulate", "-N", "2", "-K", "4", "-M", "1", "-F", "12", "-d", "1,2,1,1"]);
        assert!(out.ok);
        assert!(out.text.contains("load 11/12 0.916666666666667"));
        assert!(out.text.contains("codewords 3 2 3 3"));
    }

    #[test]
    fn simulate_small_cases() {
        let out = run(&["simulate", "-N", "1", "-K", "2", "-M", "1", "-F", "2", "-d", "1,1"]);
        assert!(out.ok && out.text.contains("load 0 0"));
        let out = run(&["simulate", "-N", "2", "-K", "3", "-M", "2/3", "-F", "6", "-d", "1,1,2"]);
        assert!(out.ok && out.text.contains("load 5/3"));
    }

    #[test]
    fn simulate_needs_envelope_for_fractional_t() {
        let cli = Cli::try_parse_from([
            "cachesim", "simulate", "-N", "2", "-K", "4", "-M", "3/4", "-d", "1,2,1,1",
        ])
        .unwrap();
        assert!(execute(&cli).is_err());
        let out = run(&[
            "simulate",
            "-N",
            "2",
            "-K",
            "4",
            "-M",
            "3/4",
            "-d",
            "1,2,1,1",
            "--envelope",
        ]);
        assert!(out.ok, "{}", out.text);
        let out = run(&[
            "simulate",
            "-N",
            "2",
            "-K",
            "3",
            "-M",
            "1",
            "-d",
            "average",
            "--envelope",
        ]);
        assert!(out.ok, "{}", out.text);
    }

    #[test]
    fn config_file_merge() {
        let map = parse_config_text("N = 2\nK=4 # users\nM=1\nF=24\ndemand=1,2,1,1\n").unwrap();
        let cfg = RunConfig {
            files: Some(3),
            ..Default::default()
        }
        .merge(&map, false)
        .unwrap();
        assert_eq!(cfg.files, Some(3));
        assert_eq!(cfg.users, Some(4));
        assert_eq!(cfg.file_bits, Some(24));
        assert!(parse_config_text("nonsense").is_err());
        assert!(RunConfig::default()
            .merge(&parse_config_text("x=1").unwrap(), false)
            .is_err());
    }

    #[test]
    fn bounds_small() {
        let out = run(&["bounds", "-N", "1", "-K", "2"]);
        assert!(out.ok);
        assert!(out.text.contains("proposed_worst,1,1,0,1,0"));
        let out = run(&["bounds", "-N", "2", "-K", "4"]);
        assert!(out.ok);
    }

    #[test]
    fn converse_report() {
        let out = run(&["converse", "-N", "2", "-K", "3", "--report"]);
        assert!(out.ok);
        assert!(out.text.starts_with(CONVERSE_CSV_HEADER));
    }

    #[test]
    fn inactivity_modes() {
        let out = run(&[
            "inactivity",
            "-N",
            "2",
            "-K",
            "4",
            "-M",
            "1",
            "-a",
            "1",
            "-d",
            "1,2,1,1",
            "--simulate",
        ]);
        assert!(out.ok, "{}", out.text);
        let out = run(&[
            "inactivity",
            "-N",
            "50",
            "-K",
            "100",
            "-p",
            "0.1",
            "-a",
            "32",
            "--curve",
            "--kind",
            "ji_worst",
            "--t-range",
            "4:4",
        ]);
        let row: Vec<f64> = out
            .text
            .lines()
            .nth(1)
            .unwrap()
            .split(',')
            .map(|x| x.parse().unwrap())
            .collect();
        assert_eq!(row[..2], [32.0, 4.0]);
        assert!((row[2] - 2.89982425307554).abs() < 1e-9);
        assert!((row[3] - 34.7978910369064).abs() / 34.8 < 1e-9);
        let out = run(&["inactivity", "-K", "4", "-N", "1", "-p", "1/2", "-a", "1"]);
        assert!(out.text.contains("P_out 0.6875"));
    }
}
