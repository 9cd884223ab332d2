//! Batch front-end: list and verify identities, run inversion checks,
//! validate `.qid` files, emit human and JSON reports.
//!
//! Exit codes: 0 all checks passed, 1 verification failure, 2 configuration
//! or usage error.

use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};

use crate::bailey::{invert_lower_triangular, MatrixPair, SeqSpec, System, TriMatrix};
use crate::dsl::ast::{DimSpec, Regime};
use crate::dsl::{compile, parse_document};
use crate::error::EvalError;
use crate::exact::Rational;
use crate::identities::registry::{builtin_identity, EntryKind, REGISTRY};
use crate::identities::reductions::{all_delta_reductions, all_n1_reductions, reduce_to_n1, verify_delta_reduction};
use crate::identities::replay::{verify_replay, Replay};
use crate::identities::sampling::Sampler;
use crate::identities::verify::{verify_terminating, BetaSource, VerifyConfig};
use crate::multiindex::{iter_box, MultiIndex};
use crate::numeric::{verify_truncated, TruncationPlan};
use crate::qpoch::EvalCtx;
use crate::report::{RunReport, VerificationReport};

#[derive(Parser)]
#[command(
    name = "qrs",
    about = "Exact verification of multiple basic hypergeometric series identities over A_n, C_n and D_n",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the registered identities with dimensions, regimes and anchors.
    List,
    /// Verify one identity (or "all") at seeded random rational points.
    Verify(VerifyArgs),
    /// Check a Bailey pair: closed-form product and forward-substitution inverse.
    Invert(InvertArgs),
    /// Parse and compile a .qid identity document.
    Parse { path: PathBuf },
}

#[derive(Args)]
struct VerifyArgs {
    /// Identity id or "all".
    id: String,
    /// Dimension n (defaults: 1 for one-variable entries, 2 otherwise).
    #[arg(long)]
    n: Option<usize>,
    /// Box bounds, comma separated (e.g. 2,1).
    #[arg(long = "N", value_name = "N1,N2,...")]
    bounds: Option<String>,
    #[arg(long, default_value_t = 20)]
    trials: u32,
    /// Seed; falls back to QRS_SEED, then 1.
    #[arg(long)]
    seed: Option<u64>,
    /// terminating | nonterminating | both
    #[arg(long, default_value = "terminating")]
    regime: String,
    /// delta | random:<support size>
    #[arg(long, default_value = "random:3")]
    beta: String,
    /// Pin parameters as name=p/q (repeatable); others stay seeded-random.
    #[arg(long = "param", value_name = "name=p/q")]
    params: Vec<String>,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for trials (defaults to available cores).
    #[arg(long)]
    parallel: Option<usize>,
    /// Nominal product cutoff for the nonterminating regime.
    #[arg(long, default_value_t = 16)]
    trunc_m: u32,
    /// Starting series cutoff for the nonterminating regime.
    #[arg(long, default_value_t = 16)]
    trunc_k: i64,
    /// Also run the printed delta reductions registered on the selection.
    #[arg(long)]
    reductions: bool,
    /// Also run the n = 1 term-by-term reductions.
    #[arg(long)]
    n1: bool,
    /// Also replay the proofs (inner-sum collapse through the 3phi2 oracles).
    #[arg(long)]
    replay: bool,
    /// H-factor menu choice for cn_app1 (h_single | h_global | h_ratio | h_pair | h_power).
    #[arg(long)]
    h_choice: Option<String>,
}

#[derive(Args)]
struct InvertArgs {
    /// an | cn | one
    #[arg(long)]
    system: String,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long = "N", value_name = "N1,N2,...")]
    bounds: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Pin parameters as name=p/q (x1, x2, ... pin x components).
    #[arg(long = "param", value_name = "name=p/q")]
    params: Vec<String>,
}

fn env_seed() -> u64 {
    std::env::var("QRS_SEED")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1)
}

fn parse_bounds(s: &str) -> Result<MultiIndex, String> {
    let comps: Result<Vec<i64>, _> = s.split(',').map(|p| p.trim().parse::<i64>()).collect();
    let comps = comps.map_err(|e| format!("bad box '{s}': {e}"))?;
    if comps.iter().any(|&c| c < 0) {
        return Err(format!("bad box '{s}': components must be >= 0"));
    }
    Ok(MultiIndex::new(comps))
}

fn parse_beta(s: &str) -> Result<BetaSource, String> {
    if s == "delta" {
        return Ok(BetaSource::Delta);
    }
    if let Some(size) = s.strip_prefix("random:") {
        let size: usize = size.parse().map_err(|e| format!("bad beta '{s}': {e}"))?;
        return Ok(BetaSource::Random(size.max(1)));
    }
    Err(format!("bad beta source '{s}' (use delta or random:<k>)"))
}

fn parse_param_overrides(items: &[String]) -> Result<Vec<(String, Rational)>, String> {
    items
        .iter()
        .map(|item| {
            let (name, val) = item
                .split_once('=')
                .ok_or_else(|| format!("bad --param '{item}' (use name=p/q)"))?;
            let r: Rational = val.parse().map_err(|e| format!("bad --param '{item}': {e}"))?;
            Ok((name.trim().to_string(), r))
        })
        .collect()
}

fn cmd_list() -> i32 {
    println!("{:<18} {:>4}  {:<28} anchor", "id", "dim", "regimes");
    for (id, entry) in REGISTRY.iter() {
        let dim = match entry.dim() {
            DimSpec::Fixed(d) => d.to_string(),
            DimSpec::Generic => "n".to_string(),
        };
        let regimes = match &entry.kind {
            EntryKind::Inversion(sys) => format!("inversion ({})", sys.name()),
            EntryKind::Sides { .. } => {
                let names: Vec<&str> = entry.regimes().iter().map(|r| r.name()).collect();
                names.join("+")
            }
        };
        println!("{:<18} {:>4}  {:<28} {}", id, dim, regimes, entry.anchor);
    }
    println!("{} identities registered", REGISTRY.len());
    0
}

/// Default verification geometry for one entry.
fn default_geometry(id: &str, n: Option<usize>, bounds: Option<&MultiIndex>) -> (usize, MultiIndex) {
    let entry = builtin_identity(id).expect("registered");
    let n = n.unwrap_or(match entry.dim() {
        DimSpec::Fixed(d) => d,
        DimSpec::Generic => 2,
    });
    let bounds = bounds
        .cloned()
        .unwrap_or_else(|| MultiIndex::new(if n == 1 { vec![4] } else { vec![2, 1][..n.min(2)].to_vec().into_iter().chain(std::iter::repeat(1).take(n.saturating_sub(2))).collect() }));
    (n, bounds)
}

fn inversion_report(
    system: System,
    n: usize,
    bounds: &MultiIndex,
    seed: u64,
    trials: u32,
) -> Result<VerificationReport, EvalError> {
    let mut stats = crate::report::TrialStats::default();
    let mut failures = Vec::new();
    for trial in 0..trials {
        stats.attempted += 1;
        let mut sampler = Sampler::for_trial(seed, &format!("invert:{}", system.name()), trial as u64);
        let q = sampler.q();
        let ctx = EvalCtx::new(q);
        let a = sampler.nonzero_scalar();
        let x = if n == 1 {
            vec![Rational::one()]
        } else {
            sampler.x_vector(n)
        };
        let pair = MatrixPair::new(system, &ctx, a, x);
        let f = TriMatrix::from_fn(bounds, |k, m| pair.f(k, m))?;
        let g = TriMatrix::from_fn(bounds, |k, m| pair.g(k, m))?;
        let fg_ok = f.mul(&g)?.is_identity() && g.mul(&f)?.is_identity();
        let inv = invert_lower_triangular(&f)?;
        let mut inv_ok = true;
        for k in iter_box(bounds) {
            for m in iter_box(&k) {
                if inv.entry(&k, &m) != g.entry(&k, &m) {
                    inv_ok = false;
                }
            }
        }
        if fg_ok && inv_ok {
            stats.passed += 1;
        } else {
            failures.push(crate::report::Failure {
                point: vec![("trial".to_string(), trial.to_string())],
                lhs: "F*G".to_string(),
                rhs: "identity".to_string(),
            });
        }
    }
    Ok(VerificationReport {
        id: format!("{}_bailey_inverse", system.name()),
        anchor: "Bailey pair inversion".to_string(),
        regime: "inversion".to_string(),
        n,
        bounds: bounds.to_string(),
        trials: stats,
        failures,
        residuals: vec![],
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}

fn cmd_verify(args: &VerifyArgs) -> i32 {
    let seed = args.seed.unwrap_or_else(env_seed);
    let bounds = match args.bounds.as_deref().map(parse_bounds).transpose() {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(n) = args.n {
        if n == 0 {
            eprintln!("error: dimension must be >= 1");
            return 2;
        }
    }
    let beta = match parse_beta(&args.beta) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let overrides = match parse_param_overrides(&args.params) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if let Some(threads) = args.parallel {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let regimes: Vec<Regime> = match args.regime.as_str() {
        "terminating" => vec![Regime::Terminating],
        "nonterminating" => vec![Regime::Nonterminating],
        "both" => vec![Regime::Terminating, Regime::Nonterminating],
        other => {
            eprintln!("error: unknown regime '{other}'");
            return 2;
        }
    };

    let ids: Vec<&str> = if args.id == "all" {
        REGISTRY.keys().copied().collect()
    } else if REGISTRY.contains_key(args.id.as_str()) {
        vec![REGISTRY.get_key_value(args.id.as_str()).unwrap().0]
    } else {
        eprintln!("error: unknown identity '{}'", args.id);
        return 2;
    };

    let started = Instant::now();
    let mut reports: Vec<VerificationReport> = Vec::new();
    let mut hard_error: Option<String> = None;

    for id in &ids {
        let entry = builtin_identity(id).expect("registered");
        match &entry.kind {
            EntryKind::Inversion(system) => {
                let n = args.n.unwrap_or(2);
                let b = bounds
                    .clone()
                    .unwrap_or_else(|| MultiIndex::new(vec![2; n.min(3)]));
                match inversion_report(*system, b.dim(), &b, seed, args.trials.min(5)) {
                    Ok(rep) => reports.push(rep),
                    Err(e) => hard_error = Some(format!("{id}: {e}")),
                }
            }
            EntryKind::Sides { .. } => {
                for regime in &regimes {
                    if !entry.regimes().contains(regime) {
                        continue;
                    }
                    match regime {
                        Regime::Terminating => {
                            let (n, b) = default_geometry(id, args.n, bounds.as_ref());
                            let mut cfg = VerifyConfig::new(n, b, args.trials, seed);
                            cfg.beta = beta.clone();
                            cfg.h_choice = args.h_choice.clone();
                            cfg.overrides = overrides.clone();
                            match verify_terminating(id, &cfg) {
                                Ok(rep) => reports.push(rep),
                                Err(e) => hard_error = Some(format!("{id}: {e}")),
                            }
                        }
                        Regime::Nonterminating => {
                            let n = args.n.unwrap_or(match entry.dim() {
                                DimSpec::Fixed(d) => d,
                                DimSpec::Generic => {
                                    if *id == "cn_nt6p5" {
                                        2
                                    } else {
                                        1
                                    }
                                }
                            });
                            let plan = TruncationPlan {
                                product_m: args.trunc_m,
                                series_k: args.trunc_k,
                                ..TruncationPlan::default()
                            };
                            let b = SeqSpec::delta(n);
                            let h = if *id == "cn_app1" {
                                Some(args.h_choice.clone().unwrap_or_else(|| "h_single".to_string()))
                            } else {
                                None
                            };
                            match verify_truncated(id, n, &plan, &b, h.as_deref(), seed, args.trials.min(5)) {
                                Ok(rep) => reports.push(rep),
                                Err(e) => hard_error = Some(format!("{id}: {e}")),
                            }
                        }
                    }
                }
            }
        }
        if args.reductions {
            for (host, reduction) in all_delta_reductions() {
                if host != *id {
                    continue;
                }
                let n = if args.n.unwrap_or(2) == 1 || host == "wang_ma2" { 1 } else { 2 };
                let b = if n == 1 {
                    MultiIndex::new(vec![4])
                } else {
                    MultiIndex::new(vec![2, 1])
                };
                match verify_delta_reduction(host, reduction, n, &b, seed, args.trials.min(5)) {
                    Ok(true) => println!("reduction {host}:{reduction}: pass"),
                    Ok(false) => {
                        println!("reduction {host}:{reduction}: FAIL");
                        hard_error = Some(format!("reduction {reduction} failed"));
                    }
                    Err(e) => hard_error = Some(format!("{host}:{reduction}: {e}")),
                }
            }
        }
        if args.n1 && all_n1_reductions().contains(id) {
            match reduce_to_n1(id, 3, seed, args.trials.min(5)) {
                Ok(true) => println!("n=1 reduction {id}: pass"),
                Ok(false) => {
                    println!("n=1 reduction {id}: FAIL");
                    hard_error = Some(format!("n=1 reduction {id} failed"));
                }
                Err(e) => hard_error = Some(format!("{id} n=1: {e}")),
            }
        }
        if args.replay {
            for replay in Replay::all() {
                if replay.theorem_id() != *id {
                    continue;
                }
                match verify_replay(replay, 2, &MultiIndex::new(vec![2, 1]), seed, args.trials.min(5)) {
                    Ok(true) => println!("proof replay {id}: pass"),
                    Ok(false) => {
                        println!("proof replay {id}: FAIL");
                        hard_error = Some(format!("proof replay {id} failed"));
                    }
                    Err(e) => hard_error = Some(format!("{id} replay: {e}")),
                }
            }
        }
    }

    if let Some(e) = hard_error {
        eprintln!("error: {e}");
        return 2;
    }

    let mut run = RunReport::new(reports);
    run.timing.wall_ms = started.elapsed().as_millis();
    run.timing.generated_at_ms = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);

    for rep in &run.reports {
        let status = if rep.passed() { "pass" } else { "FAIL" };
        println!(
            "{:<18} {:<15} n={} box={} trials={}/{} resampled={}: {}",
            rep.id,
            rep.regime,
            rep.n,
            rep.bounds,
            rep.trials.passed,
            rep.trials.attempted,
            rep.trials.resampled,
            status
        );
        for f in &rep.failures {
            println!("  first failing point: {:?} lhs={} rhs={}", f.point, f.lhs, f.rhs);
        }
    }

    if let Some(path) = &args.out {
        if let Err(e) = std::fs::write(path, run.to_json()) {
            eprintln!("error: cannot write report: {e}");
            return 2;
        }
    }
    if run.all_passed {
        0
    } else {
        1
    }
}

fn cmd_invert(args: &InvertArgs) -> i32 {
    let system = match args.system.as_str() {
        "an" => System::An,
        "cn" => System::Cn,
        "one" => System::OneVar,
        other => {
            eprintln!("error: unknown system '{other}' (use an|cn|one)");
            return 2;
        }
    };
    let n = if system == System::OneVar { 1 } else { args.n };
    if n == 0 {
        eprintln!("error: dimension must be >= 1");
        return 2;
    }
    let bounds = match args.bounds.as_deref().map(parse_bounds).transpose() {
        Ok(Some(b)) => {
            if b.dim() != n {
                eprintln!("error: box {} does not match dimension {n}", b);
                return 2;
            }
            b
        }
        Ok(None) => MultiIndex::new(vec![2; n]),
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let overrides = match parse_param_overrides(&args.params) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let seed = args.seed.unwrap_or_else(env_seed);
    let mut sampler = Sampler::for_trial(seed, &format!("invert:{}", system.name()), 0);
    let q = sampler.q();
    let mut a = sampler.nonzero_scalar();
    let mut x = if n == 1 {
        vec![Rational::one()]
    } else {
        sampler.x_vector(n)
    };
    for (name, val) in &overrides {
        if name == "a" {
            a = val.clone();
        } else if let Some(idx) = name.strip_prefix('x').and_then(|t| t.parse::<usize>().ok()) {
            if idx >= 1 && idx <= n {
                x[idx - 1] = val.clone();
            }
        }
    }
    // admissibility before any evaluation
    for r in 0..n {
        if x[r].is_zero() {
            eprintln!("error: inadmissible point: x{} = 0", r + 1);
            return 2;
        }
        for s in (r + 1)..n {
            if x[r] == x[s] {
                eprintln!("error: inadmissible point: x{} = x{}", r + 1, s + 1);
                return 2;
            }
        }
    }
    let ctx = EvalCtx::new(q);
    let pair = MatrixPair::new(system, &ctx, a, x);
    let f = match TriMatrix::from_fn(&bounds, |k, m| pair.f(k, m)) {
        Ok(f) => f,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let g = match TriMatrix::from_fn(&bounds, |k, m| pair.g(k, m)) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let product_ok = match (f.mul(&g), g.mul(&f)) {
        (Ok(fg), Ok(gf)) => fg.is_identity() && gf.is_identity(),
        _ => false,
    };
    let inv = match invert_lower_triangular(&f) {
        Ok(inv) => inv,
        Err(EvalError::SingularDiagonal(idx)) => {
            eprintln!("error: singular diagonal at {idx}");
            return 1;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut deviations = 0usize;
    for k in iter_box(&bounds) {
        for m in iter_box(&k) {
            if inv.entry(&k, &m) != g.entry(&k, &m) {
                deviations += 1;
            }
        }
    }
    if product_ok && deviations == 0 {
        println!(
            "identity confirmed, 0 deviations (system={}, n={n}, box={bounds})",
            system.name()
        );
        0
    } else {
        println!("FAIL: product_ok={product_ok}, forward-substitution deviations={deviations}");
        1
    }
}

fn cmd_parse(path: &PathBuf) -> i32 {
    let source = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return 2;
        }
    };
    match parse_document(&source) {
        Ok(doc) => {
            for (side, expr) in [("lhs", &doc.lhs), ("rhs", &doc.rhs)] {
                if let Err(e) = compile(&doc, expr) {
                    eprintln!("{}: {side}: {e}", path.display());
                    return 1;
                }
            }
            println!(
                "{}: ok (identity {}, {} regime)",
                path.display(),
                doc.id,
                doc.regime.name()
            );
            0
        }
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            // show the offending line when a position is available
            if let crate::dsl::ParseError::Unexpected { pos, .. } = &e {
                if let Some(line) = source.lines().nth((pos.line - 1) as usize) {
                    eprintln!("  {line}");
                    eprintln!("  {}^", " ".repeat((pos.col - 1) as usize));
                }
            }
            1
        }
    }
}

pub fn run() -> i32 {
    let cli = Cli::parse();
    match &cli.cmd {
        Cmd::List => cmd_list(),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Invert(args) => cmd_invert(args),
        Cmd::Parse { path } => cmd_parse(path),
    }
}
