//! TOML configuration for sweeps. Unknown keys are rejected; differences are
//! written as in the literature, e.g. `"(0x0000,0x0040)"`.
//!
//! ```toml
//! [sweep]
//! cipher = "simon32/64"
//! rounds = 11
//! hw_max = 1
//! canonical_only = true
//!
//! [trainer]
//! command = ["python3", "-m", "nd_trainer"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cipher::CipherId;
use crate::dataset::{DataFormat, DatasetParams, NegativeMode};
use crate::diff::{Difference, KeyDifference};
use crate::error::{Error, Result};
use crate::ledger::LrSchedule;

/// TOML integers are signed, so seeds above `i64::MAX` are written as hex
/// strings. Either form is accepted on input.
mod seed {
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u64, s: S) -> Result<S::Ok, S::Error> {
        match i64::try_from(*v) {
            Ok(i) => s.serialize_i64(i),
            Err(_) => s.serialize_str(&format!("{v:#x}")),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Int(v) => Ok(v),
            Repr::Text(t) => crate::diff::parse_hex_word(&t).map_err(D::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub cipher: CipherId,
    pub rounds: usize,
    /// Candidates are all nonzero differences up to this Hamming weight,
    /// unless `differences` is non-empty.
    pub hw_max: u32,
    pub differences: Vec<Difference>,
    /// Train one representative per joint-rotation class.
    pub canonical_only: bool,
    /// Accuracy a candidate must exceed to get a classical-differential score.
    pub threshold: f64,
    /// Rounds of the prepended classical differential.
    pub prepend_rounds: usize,
    pub cd_weight_cap: u32,
    /// Concurrent trainer processes.
    pub jobs: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            cipher: CipherId::Simon32_64,
            rounds: 11,
            hw_max: 3,
            differences: Vec::new(),
            canonical_only: true,
            threshold: 0.52,
            prepend_rounds: 3,
            cd_weight_cap: 14,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub pairs: usize,
    pub format: DataFormat,
    pub train_size: u64,
    pub test_size: u64,
    #[serde(with = "seed")]
    pub master_seed: u64,
    /// Present for related-key sweeps.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_difference: Option<KeyDifference>,
    pub negative: NegativeMode,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            pairs: 8,
            format: DataFormat::New8,
            train_size: 2_000_000,
            test_size: 200_000,
            master_seed: 0,
            key_difference: None,
            negative: NegativeMode::RandomDifference,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: u32,
    pub batch_size: u32,
    pub repetitions: u32,
    pub lr: LrSchedule,
    #[serde(with = "seed")]
    pub seed: u64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: 30,
            batch_size: 30_000,
            repetitions: 1,
            lr: LrSchedule::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainerSection {
    /// Program and leading arguments; the `train` subcommand is appended.
    pub command: Vec<String>,
    pub work_dir: PathBuf,
    pub ledger: PathBuf,
}

impl Default for TrainerSection {
    fn default() -> Self {
        TrainerSection {
            command: vec!["nd-trainer".into()],
            work_dir: PathBuf::from("sweep-work"),
            ledger: PathBuf::from("ledger.jsonl"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub sweep: SweepSection,
    pub dataset: DatasetSection,
    pub train: TrainSection,
    pub trainer: TrainerSection,
}

impl SweepConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.sweep.cipher.spec();
        let s = &self.sweep;
        if s.hw_max == 0 || s.hw_max > 2 * spec.n {
            return Err(Error::Config(format!("hw_max = {}", s.hw_max)));
        }
        if !(s.threshold > 0.5 && s.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold {} outside (0.5, 1)",
                s.threshold
            )));
        }
        if s.rounds == 0 || s.rounds > spec.total_rounds {
            return Err(Error::Config(format!(
                "{} rounds for {}",
                s.rounds,
                spec.name()
            )));
        }
        if s.prepend_rounds == 0 {
            return Err(Error::Config("prepend_rounds must be positive".into()));
        }
        if s.jobs == 0 {
            return Err(Error::Config("jobs must be positive".into()));
        }
        if let Some(d) = s.differences.iter().find(|d| d.is_zero() || !d.fits(spec.n)) {
            return Err(Error::Config(format!("invalid candidate difference {d}")));
        }
        let d = &self.dataset;
        if d.train_size == 0 || d.test_size == 0 {
            return Err(Error::Config("dataset sizes must be positive".into()));
        }
        let t = &self.train;
        if t.epochs == 0 || t.batch_size == 0 || t.repetitions == 0 {
            return Err(Error::Config(
                "epochs, batch_size and repetitions must be positive".into(),
            ));
        }
        if t.lr.alpha > t.lr.beta || t.lr.n == 0 {
            return Err(Error::Config(format!("learning-rate schedule {:?}", t.lr)));
        }
        if self.trainer.command.is_empty() {
            return Err(Error::Config("trainer.command is empty".into()));
        }
        // reuse dataset validation on a representative difference
        self.dataset_params(Difference::new(0, 1)).validate()?;
        Ok(())
    }

    pub fn dataset_params(&self, input_diff: Difference) -> DatasetParams {
        DatasetParams {
            cipher: self.sweep.cipher,
            rounds: self.sweep.rounds,
            input_diff,
            key_diff: self.dataset.key_difference.clone(),
            pairs: self.dataset.pairs,
            format: self.dataset.format,
            negative: self.dataset.negative,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = SweepConfig::default();
        let text = c.to_toml().unwrap();
        assert_eq!(SweepConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn partial_document_uses_defaults() {
        let c = SweepConfig::from_toml(
            r#"
            [sweep]
            cipher = "simeck32"
            rounds = 9
            differences = ["(0x0000,0x0040)", "0x0001,0x0004"]
            "#,
        )
        .unwrap();
        assert_eq!(c.sweep.cipher, CipherId::Simeck32_64);
        assert_eq!(c.sweep.differences[1], Difference::new(1, 4));
        assert_eq!(c.dataset, DatasetSection::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(SweepConfig::from_toml("[sweep]\nbogus = 1\n").is_err());
        assert!(SweepConfig::from_toml("[nope]\n").is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        assert!(SweepConfig::from_toml("[sweep]\nthreshold = 0.5\n").is_err());
        assert!(SweepConfig::from_toml("[sweep]\nhw_max = 0\n").is_err());
        assert!(SweepConfig::from_toml("[sweep]\nrounds = 99\n").is_err());
        assert!(SweepConfig::from_toml("[sweep]\ndifferences = [\"(0x0,0x0)\"]\n").is_err());
        assert!(SweepConfig::from_toml("[dataset]\nkey_difference = \"(0,0,0,0)\"\n").is_err());
    }

    #[test]
    fn large_seeds_survive() {
        let mut c = SweepConfig::default();
        c.dataset.master_seed = u64::MAX;
        c.train.seed = 1 << 63;
        let text = c.to_toml().unwrap();
        assert!(text.contains("0xffffffffffffffff"));
        assert_eq!(SweepConfig::from_toml(&text).unwrap(), c);
        let c = SweepConfig::from_toml("[dataset]\nmaster_seed = 7\n").unwrap();
        assert_eq!(c.dataset.master_seed, 7);
    }

    #[test]
    fn related_key_section() {
        let c = SweepConfig::from_toml(
            "[dataset]\nkey_difference = \"(0x0000,0x0000,0x0000,0x0040)\"\n",
        )
        .unwrap();
        let p = c.dataset_params(Difference::new(0, 0x40));
        assert_eq!(p.key_diff.unwrap().words, vec![0, 0, 0, 0x40]);
        let back = SweepConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
