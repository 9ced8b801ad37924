use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;
use simonnd_core::cd::{min_weight_search, LikelyOutput};
use simonnd_core::config::SweepConfig;
use simonnd_core::dataset::generate_to_file;
use simonnd_core::ledger::{append_json_line, now_timestamp, query_records, FieldFilter, Status};
use simonnd_core::sweep::{canonical_representatives, enum_differences, rank_hybrid, run_sweep};
use simonnd_core::{
    most_likely_output, search_characteristics, CipherId, Constraint, DataFormat, DatasetParams,
    Difference, KeyDifference, NegativeMode, SearchReport,
};

mod verify;

#[derive(Parser)]
#[command(name = "simonnd", version, about = "SIMON/SIMECK neural-distinguisher workbench")]
struct Cli {
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a labeled dataset file
    Gen(GenArgs),
    /// Enumerate differential characteristics up to a weight cap
    Search(SearchArgs),
    /// Most likely output difference by sampling, ranked by exact trails
    Likely(LikelyArgs),
    /// List candidate input differences up to a Hamming weight
    EnumDiffs(EnumArgs),
    /// Run an input-difference sweep through the external trainer
    Sweep(SweepArgs),
    /// Check test vectors and built-in oracles
    Verify(VerifyArgs),
    /// Query the experiment ledger
    Ledger(LedgerArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "simon32/64")]
    cipher: CipherId,
    #[arg(long)]
    rounds: usize,
    /// Plaintext difference, e.g. "(0x0000,0x0040)"
    #[arg(long)]
    diff: Difference,
    /// Key difference for related-key data, e.g. "(0,0,0,0x0040)"
    #[arg(long)]
    key_diff: Option<KeyDifference>,
    /// Ciphertext pairs per sample
    #[arg(long, default_value_t = 8)]
    pairs: usize,
    /// raw | diff | br | new8 (or 0-3)
    #[arg(long, default_value = "new8")]
    format: DataFormat,
    /// random-difference | random-data
    #[arg(long, default_value = "random-difference")]
    negative: NegativeMode,
    #[arg(long)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, default_value = "simon32/64")]
    cipher: CipherId,
    #[arg(long)]
    rounds: usize,
    /// Fix the output difference
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    output: Option<Difference>,
    /// Fix the input difference
    #[arg(long)]
    input: Option<Difference>,
    /// Largest weight (-log2 probability) enumerated
    #[arg(long)]
    cap: u32,
    /// Raise the cap from 0 and stop at the first weight with a characteristic
    #[arg(long)]
    min: bool,
    /// Print the report as JSON instead of a table
    #[arg(long)]
    json: bool,
    /// Append the report as one JSON line to this file
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct LikelyArgs {
    #[arg(long, default_value = "simon32/64")]
    cipher: CipherId,
    #[arg(long)]
    rounds: usize,
    #[arg(long)]
    input: Difference,
    /// Sampled pairs; default 2^22
    #[arg(long, default_value_t = 1 << 22)]
    trials: u64,
    /// Weight cap for the exact trail aggregate of tied outputs
    #[arg(long, default_value_t = 12)]
    cap: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    record: Option<PathBuf>,
}

#[derive(Args)]
struct EnumArgs {
    #[arg(long, default_value_t = 3)]
    hw: u32,
    /// Block size in bits
    #[arg(long, default_value_t = 32)]
    block: u32,
    /// One representative per joint-rotation class
    #[arg(long)]
    canonical: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, required_unless_present = "dump_config")]
    config: Option<PathBuf>,
    /// Print the effective configuration (defaults if no --config) and exit
    #[arg(long)]
    dump_config: bool,
    /// Override sweep.jobs
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    test_vectors: bool,
    #[arg(long)]
    oracles: bool,
}

#[derive(Args)]
struct LedgerArgs {
    #[arg(long, default_value = "ledger.jsonl")]
    path: PathBuf,
    /// field=value filter; repeatable
    #[arg(long = "where")]
    filters: Vec<FieldFilter>,
    /// Print matching records as JSON lines
    #[arg(long)]
    json: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.cmd {
        Cmd::Gen(a) => gen(a).map(|_| true),
        Cmd::Search(a) => search(a).map(|_| true),
        Cmd::Likely(a) => likely(a).map(|_| true),
        Cmd::EnumDiffs(a) => enum_diffs(a).map(|_| true),
        Cmd::Sweep(a) => sweep(a).map(|_| true),
        Cmd::Verify(a) => Ok(verify::run(a.test_vectors, a.oracles)),
        Cmd::Ledger(a) => ledger(a).map(|_| true),
    }
}

fn gen(a: GenArgs) -> Result<()> {
    let params = DatasetParams {
        cipher: a.cipher,
        rounds: a.rounds,
        input_diff: a.diff,
        key_diff: a.key_diff,
        pairs: a.pairs,
        format: a.format,
        negative: a.negative,
    };
    let h = generate_to_file(&a.out, &params, a.count, a.seed)
        .with_context(|| format!("generating {}", a.out.display()))?;
    println!(
        "wrote {}: {} {} rounds, Δp {}, {} samples x {} pairs, format {}, {} bytes",
        a.out.display(),
        a.cipher,
        a.rounds,
        a.diff,
        h.sample_count,
        h.pairs,
        h.format.id(),
        h.file_len()
    );
    Ok(())
}

fn print_report(r: &SearchReport) {
    let (kind, d) = match r.constraint {
        Constraint::Output(d) => ("output", d),
        Constraint::Input(d) => ("input", d),
    };
    println!(
        "{} {} rounds, fixed {kind} {d}, weight cap {}",
        r.cipher, r.rounds, r.weight_cap
    );
    if r.counts.is_empty() {
        println!("no characteristic within the cap");
        return;
    }
    println!("{:>8}  {:>10}  representative", "prob", "count");
    for (w, c) in &r.counts {
        let rep = &r.representatives[w];
        let path: Vec<String> = rep.states.iter().map(|s| s.to_string()).collect();
        println!("{:>8}  {:>10}  {}", format!("2^-{w}"), c, path.join(" -> "));
    }
    println!(
        "total {} characteristics, probability mass 2^{:.3}",
        r.total(),
        r.probability_mass().log2()
    );
}

fn search(a: SearchArgs) -> Result<()> {
    let spec = a.cipher.spec();
    let constraint = match (a.output, a.input) {
        (Some(d), None) => Constraint::Output(d),
        (None, Some(d)) => Constraint::Input(d),
        _ => bail!("give exactly one of --output / --input"),
    };
    let report = if a.min {
        match min_weight_search(&spec, a.rounds, constraint, a.cap)? {
            Some(r) => r,
            None => search_characteristics(&spec, a.rounds, constraint, a.cap)?,
        }
    } else {
        search_characteristics(&spec, a.rounds, constraint, a.cap)?
    };
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_report(&report);
    }
    if let Some(path) = a.record {
        let rec = json!({"timestamp": now_timestamp(), "kind": "search", "report": report});
        append_json_line(&path, &rec)?;
    }
    Ok(())
}

fn print_likely(r: &LikelyOutput) {
    let p = r.estimate.probability;
    println!(
        "{} {} rounds from {}: most likely output {}",
        r.cipher, r.rounds, r.input, r.output
    );
    println!(
        "  sampled p = {p:.6} (2^{:.3}) ± {:.2e}, {} of {} pairs",
        p.log2(),
        r.estimate.std_error,
        r.estimate.hits,
        r.estimate.trials
    );
    let counts: Vec<String> = r
        .trail_counts
        .iter()
        .map(|(w, c)| format!("2^-{w}:{c}"))
        .collect();
    println!(
        "  characteristics up to 2^-{}: {{{}}}, aggregate 2^{:.3}",
        r.weight_cap,
        counts.join(", "),
        r.trail_aggregate.log2()
    );
    for (d, c) in &r.runners_up {
        println!("  tied: {d} ({c} hits)");
    }
}

fn likely(a: LikelyArgs) -> Result<()> {
    let spec = a.cipher.spec();
    let r = most_likely_output(&spec, a.rounds, a.input, a.trials, a.cap, a.seed)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&r)?);
    } else {
        print_likely(&r);
    }
    if let Some(path) = a.record {
        append_json_line(&path, &json!({"timestamp": now_timestamp(), "kind": "likely", "result": r}))?;
    }
    Ok(())
}

fn enum_diffs(a: EnumArgs) -> Result<()> {
    let mut ds = enum_differences(a.hw, a.block)?;
    if a.canonical {
        ds = canonical_representatives(&ds, a.block / 2);
    }
    let n = a.block / 2;
    let mut out = String::with_capacity(ds.len() * 18);
    for d in ds {
        out.push_str(&d.display(n));
        out.push('\n');
    }
    print!("{out}");
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(p) => SweepConfig::load(p)?,
        None => SweepConfig::default(),
    };
    if let Some(j) = a.jobs {
        cfg.sweep.jobs = j;
    }
    if a.dump_config {
        print!("{}", cfg.to_toml()?);
        return Ok(());
    }
    let n = cfg.sweep.cipher.spec().n;
    let scores = run_sweep(&cfg)?;
    println!("{:<18} {:<18} {:>8} {:>8} {:>8} {:>6}  status", "Δp", "class", "acc", "tpr", "tnr", "cd");
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for s in &scores {
        println!(
            "{:<18} {:<18} {:>8} {:>8} {:>8} {:>6}  {}",
            s.delta_p.display(n),
            s.canonical.display(n),
            fmt(s.nd_accuracy),
            fmt(s.nd_tpr),
            fmt(s.nd_tnr),
            s.cd_min_weight.map_or("-".into(), |w| format!("2^-{w}")),
            s.message.as_deref().unwrap_or("ok")
        );
    }
    let ranked = rank_hybrid(&scores);
    if !ranked.is_empty() {
        println!("\nhybrid ranking ({} prepended rounds):", cfg.sweep.prepend_rounds);
        for (i, s) in ranked.iter().enumerate() {
            println!(
                "{:>3}. {}  cd 2^-{} ({} characteristics)  acc {:.4}",
                i + 1,
                s.delta_p.display(n),
                s.cd_min_weight.unwrap_or_default(),
                s.cd_count_at_min.unwrap_or_default(),
                s.nd_accuracy.unwrap_or_default()
            );
        }
    }
    let failed = scores.iter().filter(|s| s.nd_accuracy.is_none()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} candidates failed; see the ledger", scores.len());
    }
    Ok(())
}

fn ledger(a: LedgerArgs) -> Result<()> {
    let q = query_records(&a.path, &a.filters)?;
    for e in &q.errors {
        eprintln!("warning: {}:{}: {}", a.path.display(), e.line, e.message);
    }
    if a.json {
        for r in &q.records {
            println!("{}", serde_json::to_string(r)?);
        }
        return Ok(());
    }
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    for r in &q.records {
        let cipher = CipherId::from_code(r.cipher_id).map_or_else(|_| r.cipher_id.to_string(), |c| c.to_string());
        println!(
            "{}  {:<12} r{:<2} f{} Δp {} {} acc {} tpr {} tnr {}  {}",
            r.timestamp,
            cipher,
            r.rounds,
            r.format_id,
            r.delta_p,
            r.delta_k.as_ref().map_or(String::new(), |k| format!("Δk {k}")),
            fmt(r.accuracy),
            fmt(r.tpr),
            fmt(r.tnr),
            match r.status {
                Status::Ok => "ok",
                Status::Failed => "failed",
            }
        );
    }
    println!("{} record(s)", q.records.len());
    Ok(())
}
