//! Input-difference sweeps: enumerate candidates, collapse rotation classes,
//! train a distinguisher per candidate through an external trainer, and score
//! the promising ones with the prepended classical differential.

use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cd::{min_weight_search, Constraint};
use crate::config::SweepConfig;
use crate::dataset::generate_to_file;
use crate::diff::Difference;
use crate::error::{Error, Result};
use crate::ledger::{self, RunRecord, Status};
use crate::rng::SplitMix64;

/// All nonzero `(ΔL, ΔR)` of a `block_bits`-bit block with Hamming weight at
/// most `hw_max`, in ascending `(ΔL, ΔR)` order.
pub fn enum_differences(hw_max: u32, block_bits: u32) -> Result<Vec<Difference>> {
    if hw_max == 0 || hw_max > block_bits || !block_bits.is_multiple_of(2) || block_bits > 128 {
        return Err(Error::Range(format!(
            "hw_max {hw_max} for a {block_bits}-bit block"
        )));
    }
    let n = block_bits / 2;
    // combinations of bit positions over the 2n-bit value ΔL‖ΔR
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(hw_max as usize);
    fn rec(n: u32, start: u32, left: u32, pick: &mut Vec<u32>, out: &mut Vec<Difference>) {
        if !pick.is_empty() {
            let mut d = Difference::ZERO;
            for &p in pick.iter() {
                if p >= n {
                    d.dl |= 1 << (p - n);
                } else {
                    d.dr |= 1 << p;
                }
            }
            out.push(d);
        }
        if left == 0 {
            return;
        }
        for p in start..2 * n {
            pick.push(p);
            rec(n, p + 1, left - 1, pick, out);
            pick.pop();
        }
    }
    rec(n, 0, hw_max, &mut pick, &mut out);
    out.sort_unstable();
    Ok(out)
}

/// Lexicographically smallest joint rotation `(ΔL <<< i, ΔR <<< i)`.
pub fn canonical_class(d: Difference, n: u32) -> Difference {
    (0..n as i64).map(|i| d.rotate(i, n)).min().unwrap_or(d)
}

/// Number of distinct joint rotations of `d`.
pub fn class_size(d: Difference, n: u32) -> u32 {
    (1..=n).find(|&i| d.rotate(i as i64, n) == d).unwrap_or(n)
}

/// Canonical representatives of `ds`, deduplicated, in ascending order.
pub fn canonical_representatives(ds: &[Difference], n: u32) -> Vec<Difference> {
    let mut reps: Vec<_> = ds.iter().map(|&d| canonical_class(d, n)).collect();
    reps.sort_unstable();
    reps.dedup();
    reps
}

/// One training request handed to the trainer.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainJob {
    pub train_data: PathBuf,
    pub test_data: PathBuf,
    pub epochs: u32,
    pub batch_size: u32,
    pub repetitions: u32,
    pub lr: ledger::LrSchedule,
    pub seed: u64,
    pub model_out: PathBuf,
}

/// What a trainer reports back, averaged over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub accuracy: f64,
    pub tpr: f64,
    pub tnr: f64,
    #[serde(default)]
    pub model: Option<String>,
}

pub trait Trainer: Sync {
    fn train(&self, job: &TrainJob) -> Result<TrainOutcome>;
}

/// Runs `<command…> train --data … --model-out …` and parses the last line of
/// stdout as a JSON [`TrainOutcome`].
#[derive(Debug, Clone)]
pub struct ExternalTrainer {
    program: PathBuf,
    args: Vec<String>,
}

impl ExternalTrainer {
    /// Resolves the program now so a missing trainer fails before any work.
    pub fn new(command: &[String]) -> Result<Self> {
        let (prog, args) = command
            .split_first()
            .ok_or_else(|| Error::Config("empty trainer command".into()))?;
        let program = which::which(prog)
            .map_err(|e| Error::Config(format!("trainer '{prog}' not found: {e}")))?;
        Ok(ExternalTrainer {
            program,
            args: args.to_vec(),
        })
    }

    fn command(&self, job: &TrainJob) -> Command {
        let mut cmd = Command::new(&self.program);
        cmd.args(&self.args)
            .arg("train")
            .arg("--data")
            .arg(&job.train_data)
            .arg("--test-data")
            .arg(&job.test_data)
            .args(["--epochs", &job.epochs.to_string()])
            .args(["--batch", &job.batch_size.to_string()])
            .args(["--reps", &job.repetitions.to_string()])
            .args(["--lr-alpha", &job.lr.alpha.to_string()])
            .args(["--lr-beta", &job.lr.beta.to_string()])
            .args(["--lr-n", &job.lr.n.to_string()])
            .args(["--seed", &job.seed.to_string()])
            .arg("--model-out")
            .arg(&job.model_out);
        cmd
    }
}

fn tail(bytes: &[u8], lines: usize) -> String {
    let text = String::from_utf8_lossy(bytes);
    let v: Vec<&str> = text.lines().collect();
    v[v.len().saturating_sub(lines)..].join("\n")
}

impl Trainer for ExternalTrainer {
    fn train(&self, job: &TrainJob) -> Result<TrainOutcome> {
        let out = self
            .command(job)
            .output()
            .map_err(|e| Error::Trainer(format!("{}: {e}", self.program.display())))?;
        if !out.status.success() {
            return Err(Error::Trainer(format!(
                "exited with {}: {}",
                out.status,
                tail(&out.stderr, 5)
            )));
        }
        let stdout = String::from_utf8_lossy(&out.stdout);
        let last = stdout
            .lines()
            .rev()
            .find(|l| !l.trim().is_empty())
            .ok_or_else(|| Error::Trainer("no output".into()))?;
        let outcome: TrainOutcome = serde_json::from_str(last)
            .map_err(|e| Error::Trainer(format!("unparseable result line '{last}': {e}")))?;
        for v in [outcome.accuracy, outcome.tpr, outcome.tnr] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Trainer(format!("metric {v} outside [0, 1]")));
            }
        }
        Ok(outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub delta_p: Difference,
    pub canonical: Difference,
    pub status: Status,
    pub nd_accuracy: Option<f64>,
    pub nd_tpr: Option<f64>,
    pub nd_tnr: Option<f64>,
    /// Only for candidates above the accuracy threshold.
    pub cd_min_weight: Option<u32>,
    pub cd_count_at_min: Option<u64>,
    pub model_path: Option<String>,
    pub message: Option<String>,
}

/// Candidates the sweep will train, in order.
pub fn sweep_candidates(cfg: &SweepConfig) -> Result<Vec<Difference>> {
    let n = cfg.sweep.cipher.spec().n;
    if !cfg.sweep.differences.is_empty() {
        return Ok(cfg.sweep.differences.clone());
    }
    let all = enum_differences(cfg.sweep.hw_max, 2 * n)?;
    Ok(if cfg.sweep.canonical_only {
        canonical_representatives(&all, n)
    } else {
        all
    })
}

fn test_seed(master_seed: u64) -> u64 {
    SplitMix64::stream(master_seed, u64::MAX).next_u64()
}

fn file_stem(cfg: &SweepConfig, d: Difference) -> String {
    format!(
        "{}_r{}_{:x}_{:x}",
        cfg.sweep.cipher.name().replace('/', "-"),
        cfg.sweep.rounds,
        d.dl,
        d.dr
    )
}

/// Generates the two datasets for `d`, trains, and scores it. Errors here
/// mark the candidate as failed; they never abort the sweep.
fn run_candidate(
    cfg: &SweepConfig,
    trainer: &dyn Trainer,
    work_dir: &Path,
    d: Difference,
) -> Result<CandidateScore> {
    let spec = cfg.sweep.cipher.spec();
    let params = cfg.dataset_params(d);
    let stem = file_stem(cfg, d);
    let train_data = work_dir.join(format!("{stem}.train.nds"));
    let test_data = work_dir.join(format!("{stem}.test.nds"));
    let seed = cfg.dataset.master_seed;
    generate_to_file(&train_data, &params, cfg.dataset.train_size, seed)?;
    generate_to_file(&test_data, &params, cfg.dataset.test_size, test_seed(seed))?;
    let job = TrainJob {
        train_data,
        test_data,
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size,
        repetitions: cfg.train.repetitions,
        lr: cfg.train.lr,
        seed: cfg.train.seed,
        model_out: work_dir.join(format!("{stem}.model")),
    };
    let outcome = trainer.train(&job)?;
    let mut score = CandidateScore {
        delta_p: d,
        canonical: canonical_class(d, spec.n),
        status: Status::Ok,
        nd_accuracy: Some(outcome.accuracy),
        nd_tpr: Some(outcome.tpr),
        nd_tnr: Some(outcome.tnr),
        cd_min_weight: None,
        cd_count_at_min: None,
        model_path: outcome
            .model
            .or_else(|| Some(job.model_out.display().to_string())),
        message: None,
    };
    if outcome.accuracy > cfg.sweep.threshold {
        let report = min_weight_search(
            &spec,
            cfg.sweep.prepend_rounds,
            Constraint::Output(d),
            cfg.sweep.cd_weight_cap,
        )?;
        if let Some(r) = report {
            score.cd_min_weight = r.min_weight;
            score.cd_count_at_min = Some(r.count_at_min());
        }
    }
    Ok(score)
}

fn ledger_row(cfg: &SweepConfig, s: &CandidateScore) -> RunRecord {
    RunRecord {
        timestamp: ledger::now_timestamp(),
        cipher_id: cfg.sweep.cipher.code(),
        rounds: cfg.sweep.rounds,
        format_id: cfg.dataset.format.id(),
        delta_p: s.delta_p,
        delta_k: cfg.dataset.key_difference.clone(),
        related_key: cfg.dataset.key_difference.is_some(),
        master_seed: cfg.dataset.master_seed,
        train_size: cfg.dataset.train_size,
        test_size: cfg.dataset.test_size,
        epochs: cfg.train.epochs,
        batch_size: cfg.train.batch_size,
        lr: cfg.train.lr,
        repetitions: cfg.train.repetitions,
        accuracy: s.nd_accuracy,
        tpr: s.nd_tpr,
        tnr: s.nd_tnr,
        model_path: s.model_path.clone(),
        status: s.status,
        message: s.message.clone(),
        cd_rounds: s.cd_min_weight.map(|_| cfg.sweep.prepend_rounds),
        cd_min_weight: s.cd_min_weight,
        cd_count_at_min: s.cd_count_at_min,
    }
}

/// Runs the first sweep stage with the trainer named in the configuration.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<CandidateScore>> {
    cfg.validate()?;
    let trainer = ExternalTrainer::new(&cfg.trainer.command)?;
    run_sweep_with(cfg, &trainer)
}

/// [`run_sweep`] with an arbitrary trainer. Results come back in candidate
/// order; one ledger row is appended per candidate, failures included.
pub fn run_sweep_with(cfg: &SweepConfig, trainer: &dyn Trainer) -> Result<Vec<CandidateScore>> {
    cfg.validate()?;
    let candidates = sweep_candidates(cfg)?;
    let work_dir = &cfg.trainer.work_dir;
    std::fs::create_dir_all(work_dir).map_err(|e| Error::file(work_dir, e))?;
    let n = cfg.sweep.cipher.spec().n;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.sweep.jobs)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| {
        candidates
            .par_iter()
            .map(|&d| {
                let score = run_candidate(cfg, trainer, work_dir, d).unwrap_or_else(|e| {
                    CandidateScore {
                        delta_p: d,
                        canonical: canonical_class(d, n),
                        status: Status::Failed,
                        nd_accuracy: None,
                        nd_tpr: None,
                        nd_tnr: None,
                        cd_min_weight: None,
                        cd_count_at_min: None,
                        model_path: None,
                        message: Some(e.to_string()),
                    }
                });
                ledger::append_record(&cfg.trainer.ledger, &ledger_row(cfg, &score))?;
                Ok(score)
            })
            .collect()
    })
}

/// Candidates with a classical score, ordered by CD weight ascending, then
/// accuracy descending, then `Δp`.
pub fn rank_hybrid(scores: &[CandidateScore]) -> Vec<CandidateScore> {
    let mut ranked: Vec<CandidateScore> = scores
        .iter()
        .filter(|s| s.cd_min_weight.is_some() && s.nd_accuracy.is_some())
        .cloned()
        .collect();
    ranked.sort_by(|x, y| {
        x.cd_min_weight
            .cmp(&y.cd_min_weight)
            .then_with(|| {
                let (ax, ay) = (x.nd_accuracy.unwrap(), y.nd_accuracy.unwrap());
                ay.total_cmp(&ax)
            })
            .then_with(|| x.delta_p.cmp(&y.delta_p))
            .then_with(|| x.canonical.cmp(&y.canonical))
    });
    ranked
}
