//! Command-line front end.
//!
//! Every subcommand accepts `--config FILE`, a flat JSON object keyed by flag
//! names. Flags given on the command line override the file.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::adversaries::AttackKind;
use crate::atlas::{classify, emit_grid, grid_csv, preset, steps, Mode, PRESETS};
use crate::bounds::{
    counting_bound, impossibility_region, onion_cost, optimality_overhead, trilemma_advantage,
    trilemma_compromising, BoundKind, BoundResult, CostModel, RegionPoint, TrilemmaSetting,
};
use crate::error::{Error, Result};
use crate::game::{estimate_advantage, Definition, EstimateOptions, Game, ResultRecord};
use crate::model::{AdversaryCapability, ProtocolParams};
use crate::notions::{generate_pair, generate_pair_with_len, Notion};
use crate::protocols::{Protocol, ProtocolKind};

pub const WORKERS_ENV: &str = "ACNB_WORKERS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VERIFY_FAILED: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "acn-bounds", version, about = "Anonymity bounds, games and simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a closed-form bound.
    Bound(BoundArgs),
    /// Estimate an attack's advantage by simulation.
    Simulate(SimArgs),
    /// Compare a simulated advantage with its analytic lower bound.
    Verify(SimArgs),
    /// Classify a parameter point, or emit a trade-off grid.
    Region(RegionArgs),
    /// Classify a named system.
    Atlas(AtlasArgs),
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct BoundArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// counting, optimality, trilemma-sync, trilemma-unsync, trilemma-unsync-original,
    /// compromising-sync, compromising-unsync, onion-cost
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    lmax: Option<u32>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    cp: Option<u32>,
    #[arg(long)]
    k: Option<u32>,
    /// Delivered messages for the counting bound.
    #[arg(long)]
    out: Option<u64>,
    /// Honest senders for the counting bound.
    #[arg(long)]
    h: Option<u64>,
    /// Comma-separated per-sender packet counts.
    #[arg(long)]
    sent: Option<String>,
    #[arg(long)]
    mu: Option<u64>,
    /// trilemma, counting or dropping.
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    lexp: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct SimArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long)]
    attack: Option<String>,
    #[arg(long)]
    notion: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    lmax: Option<u32>,
    #[arg(long)]
    lexp: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Total sending probability; real traffic makes up `p - beta`.
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    threshold: Option<u32>,
    #[arg(long)]
    copies: Option<u32>,
    #[arg(long)]
    rounds: Option<u32>,
    /// Rows per batch.
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cp: Option<u32>,
    #[arg(long)]
    ca: Option<u32>,
    /// Observed sender links: all, suspects or none.
    #[arg(long)]
    observe: Option<String>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// counting-form or optimality-form.
    #[arg(long)]
    definition: Option<String>,
    /// Slack added to the upper interval end in `verify`.
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct RegionArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// counting, trilemma or dropping; all three when omitted.
    #[arg(long)]
    bound: Option<String>,
    #[arg(long)]
    lmax: Option<u32>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    cp: Option<u32>,
    #[arg(long)]
    ca: Option<u32>,
    #[arg(long)]
    copies: Option<u32>,
    #[arg(long)]
    out_rate: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Defaults to n.
    #[arg(long)]
    poly: Option<f64>,
    /// Emit a CSV grid instead of a single verdict.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    grid: Option<bool>,
    #[arg(long)]
    lmax_min: Option<u32>,
    #[arg(long)]
    lmax_max: Option<u32>,
    #[arg(long)]
    beta_min: Option<f64>,
    #[arg(long)]
    beta_max: Option<f64>,
    #[arg(long)]
    beta_step: Option<f64>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
struct AtlasArgs {
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    /// A preset name; every preset when omitted.
    #[arg(long)]
    preset: Option<String>,
    /// point (alias figure3) or general.
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    n: Option<u32>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    poly: Option<f64>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}

/// Overlays explicitly given flags on the config file, if any.
fn merged<T: Serialize + DeserializeOwned>(args: T, config: Option<&PathBuf>) -> Result<T> {
    let Some(path) = config else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let file: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let Value::Object(mut base) = file else {
        return Err(Error::Config("config file must hold a JSON object".into()));
    };
    let base_keys: Vec<String> = base.keys().cloned().collect();
    let Value::Object(flags) = serde_json::to_value(&args).expect("flags serialize") else {
        unreachable!("flag structs serialize to objects");
    };
    for key in base_keys {
        if !flags.contains_key(&key) {
            return Err(Error::Config(format!("unknown config key '{key}'")));
        }
    }
    for (k, v) in flags {
        if !v.is_null() {
            base.insert(k, v);
        }
    }
    serde_json::from_value(Value::Object(base)).map_err(|e| Error::Config(e.to_string()))
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T> {
    s.parse()
}

fn pretty<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("results serialize") + "\n"
}

fn run_bound(a: BoundArgs) -> Result<String> {
    let config = a.config.clone();
    let a = merged(a, config.as_ref())?;
    let kind = a.kind.clone().ok_or_else(|| usage("--kind is required"))?;
    let lmax = a.lmax.unwrap_or(3);
    let beta = a.beta.unwrap_or(0.0);
    let p = a.p.unwrap_or(beta);
    let n = a.n.unwrap_or(10);
    let setting = |s: TrilemmaSetting| trilemma_advantage(s, lmax, beta, p, n);
    let result: BoundResult = match kind.as_str() {
        "counting" => {
            let sent: Option<Vec<u64>> = a
                .sent
                .as_deref()
                .map(|s| {
                    s.split(',')
                        .map(|x| x.trim().parse::<u64>().map_err(|e| usage(format!("--sent: {e}"))))
                        .collect()
                })
                .transpose()?;
            let c = counting_bound(a.out.unwrap_or(1), a.h.unwrap_or(n as u64), sent.as_deref())?;
            return Ok(pretty(&json!({ "bound": "counting", "result": c })));
        }
        "optimality" => {
            let mu = a.mu.unwrap_or(1);
            let v = optimality_overhead(n as u64, mu);
            return Ok(pretty(&json!({
                "bound": "optimality",
                "overhead": v,
                "counting_min_com": counting_bound(mu, n as u64, None)?.min_com,
            })));
        }
        "onion-cost" => {
            let model: CostModel = parse(a.model.as_deref().unwrap_or("trilemma"))?;
            let c = onion_cost(model, n, p, a.lexp.unwrap_or(lmax as f64), a.lambda.unwrap_or(256.0))?;
            return Ok(pretty(&c));
        }
        "trilemma-sync" => setting(TrilemmaSetting::Sync)?,
        "trilemma-unsync" => setting(TrilemmaSetting::UnsyncImproved)?,
        "trilemma-unsync-original" => setting(TrilemmaSetting::UnsyncOriginal)?,
        "compromising-sync" => {
            trilemma_compromising(TrilemmaSetting::Sync, lmax, beta, n, a.cp.unwrap_or(0), a.k.unwrap_or(lmax.max(2) - 1))?
        }
        "compromising-unsync" => trilemma_compromising(
            TrilemmaSetting::UnsyncImproved,
            lmax,
            p,
            n,
            a.cp.unwrap_or(0),
            a.k.unwrap_or(lmax.max(2) - 1),
        )?,
        other => return Err(usage(format!("unknown bound kind '{other}'"))),
    };
    Ok(pretty(&result))
}

struct Simulation {
    game: Game,
    trials: u64,
    seed: u64,
    definition: Definition,
    workers: Option<usize>,
    tol: f64,
}

fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| usage(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        Err(_) => Ok(None),
    }
}

fn simulation(a: SimArgs) -> Result<Simulation> {
    let config = a.config.clone();
    let a = merged(a, config.as_ref())?;
    let kind: ProtocolKind = parse(a.protocol.as_deref().ok_or_else(|| usage("--protocol is required"))?)?;
    let attack: AttackKind = parse(a.attack.as_deref().ok_or_else(|| usage("--attack is required"))?)?;
    let notion: Notion = parse(a.notion.as_deref().unwrap_or("SO"))?;
    let n = a.n.unwrap_or(10);
    let lmax = a.lmax.unwrap_or(3);
    let beta = a.beta.unwrap_or(0.0);
    let mut params = ProtocolParams::new(n, lmax).with_beta(beta).with_p(a.p.unwrap_or(beta));
    if let Some(v) = a.lexp {
        params = params.with_l_exp(v);
    }
    if let Some(v) = a.k {
        params = params.with_k(v);
    }
    if let Some(v) = a.threshold {
        params = params.with_threshold(v);
    }
    if let Some(v) = a.copies {
        params = params.with_copies(v);
    }
    if let Some(v) = a.rounds {
        params = params.with_rounds(v);
    }
    let protocol = Protocol::new(kind, params.clone())?;
    let seed = a.seed.unwrap_or(0);
    let pair = match a.rows {
        Some(len) => generate_pair_with_len(&notion, &params, len, seed)?,
        None => generate_pair(&notion, &params, seed)?,
    };
    let c_p = a.cp.unwrap_or(0);
    let c_a = a.ca.unwrap_or(0);
    let suspects: Vec<u32> = pair
        .batch0
        .comms()
        .iter()
        .chain(pair.batch1.comms())
        .filter_map(|c| c.sender())
        .collect();
    let observed = match a.observe.as_deref().unwrap_or("all") {
        "all" => (0..n).collect(),
        "suspects" => suspects.into_iter().collect(),
        "none" => Default::default(),
        other => return Err(usage(format!("--observe must be all, suspects or none, got '{other}'"))),
    };
    let dropping = attack == AttackKind::Dropping;
    let capability = AdversaryCapability {
        observed_senders: observed,
        receiver_corrupted: true,
        c_p,
        c_a,
        active_drop: dropping,
        knows_expected_reception: dropping,
        knows_total_real: false,
    };
    let game = Game::new(protocol, attack, capability, pair)?;
    let workers = match a.workers {
        Some(w) => Some(w),
        None => workers_from_env()?,
    };
    Ok(Simulation {
        game,
        trials: a.trials.unwrap_or(10_000),
        seed,
        definition: parse(a.definition.as_deref().unwrap_or("counting-form"))?,
        workers,
        tol: a.tol.unwrap_or(0.02),
    })
}

fn simulate(s: &Simulation) -> Result<ResultRecord> {
    let est = estimate_advantage(
        &s.game,
        s.trials,
        s.seed,
        EstimateOptions { workers: s.workers, definition: s.definition },
    )?;
    Ok(ResultRecord::new(&s.game, &est, s.seed))
}

/// The analytic lower bound a simulated game is checked against.
fn analytic_bound(game: &Game) -> Result<BoundResult> {
    let p = &game.protocol.params;
    let c_p = game.capability.c_p;
    match (game.protocol.kind, game.attack) {
        (ProtocolKind::TrilemmaSync, AttackKind::TimingInterval) => {
            trilemma_advantage(TrilemmaSetting::Sync, p.l_max, p.beta, p.p(), p.n)
        }
        (ProtocolKind::TrilemmaSync, AttackKind::PathTracing) => {
            trilemma_compromising(TrilemmaSetting::Sync, p.l_max, p.beta, p.n, c_p, p.k)
        }
        (ProtocolKind::TrilemmaUnsync, AttackKind::TimingInterval) => {
            trilemma_advantage(TrilemmaSetting::UnsyncImproved, p.l_max, p.beta, p.p(), p.n)
        }
        (ProtocolKind::TrilemmaUnsync, AttackKind::PathTracing) => {
            trilemma_compromising(TrilemmaSetting::UnsyncImproved, p.l_max, p.p(), p.n, c_p, p.k)
        }
        (kind, attack) => Err(usage(format!(
            "no analytic bound for {attack} against {kind}; use a trilemma protocol with timing-interval or path-tracing"
        ))),
    }
}

fn run_simulate(a: SimArgs) -> Result<String> {
    Ok(pretty(&simulate(&simulation(a)?)?))
}

fn run_verify(a: SimArgs) -> Result<(String, bool)> {
    let s = simulation(a)?;
    let bound = analytic_bound(&s.game)?;
    let record = simulate(&s)?;
    let pass = record.ci[1] + s.tol >= bound.delta;
    let out = json!({
        "pass": pass,
        "bound": bound.delta,
        "ci_high": record.ci[1],
        "tol": s.tol,
        "case": bound.case,
        "record": record,
    });
    Ok((pretty(&out), pass))
}

fn run_region(a: RegionArgs) -> Result<String> {
    let config = a.config.clone();
    let a = merged(a, config.as_ref())?;
    let n = a.n.unwrap_or(1000);
    let lambda = a.lambda.unwrap_or(256.0);
    let poly = a.poly.unwrap_or(n as f64);
    if a.grid.unwrap_or(false) {
        let betas = steps(a.beta_min.unwrap_or(0.0), a.beta_max.unwrap_or(1.0), a.beta_step.unwrap_or(0.05))?;
        let lo = a.lmax_min.unwrap_or(2);
        let hi = a.lmax_max.unwrap_or(10);
        return Ok(grid_csv(&emit_grid(lo..=hi, &betas, n, lambda, poly)?));
    }
    let beta = a.beta.unwrap_or(0.0);
    let point = RegionPoint {
        p: a.p.unwrap_or(beta),
        c_p: a.cp.unwrap_or(0),
        out_rate: a.out_rate.unwrap_or(1.0),
        lambda,
        copies: a.copies,
        c_a: a.ca,
        ..RegionPoint::new(a.lmax.unwrap_or(3), beta, n)
    };
    let bounds = match a.bound.as_deref() {
        Some(b) => vec![parse::<BoundKind>(b)?],
        None => BoundKind::ALL.to_vec(),
    };
    let verdicts = bounds
        .into_iter()
        .map(|b| impossibility_region(b, &point, poly))
        .collect::<Result<Vec<_>>>()?;
    Ok(pretty(&verdicts))
}

fn run_atlas(a: AtlasArgs) -> Result<String> {
    let config = a.config.clone();
    let a = merged(a, config.as_ref())?;
    let n = a.n.unwrap_or(1000);
    let lambda = a.lambda.unwrap_or(256.0);
    let poly = a.poly.unwrap_or(n as f64);
    let mode: Mode = parse(a.mode.as_deref().unwrap_or("point"))?;
    let names: Vec<&str> = match a.preset.as_deref() {
        Some(p) => vec![p],
        None => PRESETS.to_vec(),
    };
    let reports = names
        .into_iter()
        .map(|name| classify(&preset(name, n, lambda)?, mode, lambda, poly))
        .collect::<Result<Vec<_>>>()?;
    if reports.len() == 1 {
        Ok(pretty(&reports[0]))
    } else {
        Ok(pretty(&reports))
    }
}

/// Parses `args`, runs the subcommand, writes its output and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Bound(a) => run_bound(a).map(|s| (s, true)),
        Command::Simulate(a) => run_simulate(a).map(|s| (s, true)),
        Command::Verify(a) => run_verify(a),
        Command::Region(a) => run_region(a).map(|s| (s, true)),
        Command::Atlas(a) => run_atlas(a).map(|s| (s, true)),
    };
    match result {
        Ok((text, ok)) => {
            let _ = out.write_all(text.as_bytes());
            if ok {
                EXIT_OK
            } else {
                let _ = writeln!(err, "verification failed");
                EXIT_VERIFY_FAILED
            }
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}
