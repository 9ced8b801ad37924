//! Labeled multi-pair datasets for (related-key) neural distinguishers.
//!
//! A sample is `s` ciphertext pairs, each projected onto the words of one
//! [`DataFormat`], plus a label. Label 1 samples come from plaintext pairs
//! with the fixed input difference; label 0 samples from pairs with a
//! uniformly random difference (or uniformly random ciphertexts, see
//! [`NegativeMode`]). Every sample uses a fresh key, drawn from its own
//! SplitMix64 stream, so generation parallelizes without changing bytes.
//!
//! # File layout
//!
//! All integers little-endian.
//!
//! | field        | size        |
//! |--------------|-------------|
//! | magic `NDS1` | 4           |
//! | version      | 1           |
//! | cipher id    | 1           |
//! | word bits    | 1           |
//! | rounds       | 1           |
//! | pairs `s`    | 1           |
//! | format id    | 1           |
//! | related key  | 1           |
//! | key words m  | 1           |
//! | reserved     | 3           |
//! | input diff   | 2 x 8       |
//! | key diff     | m x 8       |
//! | master seed  | 8           |
//! | sample count | 8           |
//!
//! followed by `sample_count` records of `s * F` 8-byte words and a label
//! byte, where `F` is the format's words per pair. Reserved byte 0 carries
//! the negative-class mode (0 for the default random-difference encryption).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cipher::{Block, CipherId, CipherSpec};
use crate::diff::{Difference, KeyDifference};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const MAGIC: &[u8; 4] = b"NDS1";
pub const VERSION: u8 = 1;

/// Samples generated per parallel batch when streaming to disk.
const CHUNK: usize = 1 << 14;

/// ΔR of the state one round before the ciphertext. The last round key
/// cancels, so this is exact for every key.
#[inline]
pub fn delta_r_prev(spec: &CipherSpec, c: Block, c2: Block) -> u64 {
    spec.f(c.1) ^ c.0 ^ spec.f(c2.1) ^ c2.0
}

/// The bits of ΔR two rounds before the ciphertext that do not depend on the
/// round keys. Returns `(value, mask)`; `value` is zero outside `mask`.
///
/// One round back, the key-free part of the state is `y = C_l ^ f(C_r)`.
/// Pushing through `f` once more, the unknown key only enters the AND term,
/// and only at bits where the difference of `y` reaches an operand of it.
#[inline]
pub fn partial_delta_r2(spec: &CipherSpec, c: Block, c2: Block) -> (u64, u64) {
    let y = c.0 ^ spec.f(c.1);
    let y2 = c2.0 ^ spec.f(c2.1);
    let d = y ^ y2;
    let mask = !(spec.rotl(d, spec.a as i64) | spec.rotl(d, spec.b as i64)) & spec.mask();
    let value = (c.1 ^ c2.1 ^ spec.f(y) ^ spec.f(y2)) & mask;
    (value, mask)
}

/// Words stored per ciphertext pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataFormat {
    /// `(C_l, C_r, C_l', C_r')`
    Raw = 0,
    /// `(ΔL, ΔR)`
    DiffOnly = 1,
    /// `(C_r, C_r', ΔR_{r-1})`
    Br = 2,
    /// `(ΔL, ΔR, C_l, C_r, C_l', C_r', ΔR_{r-1}, pΔR_{r-2})`
    New8 = 3,
}

impl DataFormat {
    pub const ALL: [DataFormat; 4] = [
        DataFormat::Raw,
        DataFormat::DiffOnly,
        DataFormat::Br,
        DataFormat::New8,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Self::ALL.get(id as usize).copied().ok_or(Error::Format(id))
    }

    pub fn words_per_pair(self) -> usize {
        match self {
            DataFormat::Raw => 4,
            DataFormat::DiffOnly => 2,
            DataFormat::Br => 3,
            DataFormat::New8 => 8,
        }
    }

    /// Appends this format's words for the pair `(c, c2)` to `out`.
    #[inline]
    pub fn project(self, spec: &CipherSpec, c: Block, c2: Block, out: &mut Vec<u64>) {
        match self {
            DataFormat::Raw => out.extend_from_slice(&[c.0, c.1, c2.0, c2.1]),
            DataFormat::DiffOnly => out.extend_from_slice(&[c.0 ^ c2.0, c.1 ^ c2.1]),
            DataFormat::Br => out.extend_from_slice(&[c.1, c2.1, delta_r_prev(spec, c, c2)]),
            DataFormat::New8 => out.extend_from_slice(&[
                c.0 ^ c2.0,
                c.1 ^ c2.1,
                c.0,
                c.1,
                c2.0,
                c2.1,
                delta_r_prev(spec, c, c2),
                partial_delta_r2(spec, c, c2).0,
            ]),
        }
    }
}

impl std::str::FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "0" | "raw" => Ok(DataFormat::Raw),
            "1" | "diff" | "diff-only" => Ok(DataFormat::DiffOnly),
            "2" | "br" => Ok(DataFormat::Br),
            "3" | "new8" => Ok(DataFormat::New8),
            _ => Err(Error::Parse(format!("unknown data format '{s}'"))),
        }
    }
}

/// How label-0 samples are produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeMode {
    /// Encrypt plaintext pairs with a uniformly random difference.
    #[default]
    RandomDifference = 0,
    /// Uniformly random ciphertext pairs, no encryption.
    RandomData = 1,
}

impl NegativeMode {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(NegativeMode::RandomDifference),
            1 => Ok(NegativeMode::RandomData),
            _ => Err(Error::Dataset(format!("unknown negative mode byte {b}"))),
        }
    }
}

impl std::str::FromStr for NegativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-difference" | "random-diff" => Ok(NegativeMode::RandomDifference),
            "random-data" => Ok(NegativeMode::RandomData),
            _ => Err(Error::Parse(format!("unknown negative mode '{s}'"))),
        }
    }
}

/// Everything that determines the content of a dataset except its size and seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetParams {
    pub cipher: CipherId,
    pub rounds: usize,
    pub input_diff: Difference,
    /// `Some` selects related-key mode.
    pub key_diff: Option<KeyDifference>,
    pub pairs: usize,
    pub format: DataFormat,
    pub negative: NegativeMode,
}

impl DatasetParams {
    pub fn new(cipher: CipherId, rounds: usize, input_diff: Difference) -> Self {
        DatasetParams {
            cipher,
            rounds,
            input_diff,
            key_diff: None,
            pairs: 8,
            format: DataFormat::New8,
            negative: NegativeMode::RandomDifference,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let spec = self.cipher.spec();
        if self.rounds > spec.total_rounds || self.rounds > u8::MAX as usize {
            return Err(Error::Range(format!(
                "{} rounds requested for {}",
                self.rounds,
                spec.name()
            )));
        }
        if self.pairs == 0 || self.pairs > u8::MAX as usize {
            return Err(Error::Range(format!("pairs per sample {}", self.pairs)));
        }
        if self.input_diff.is_zero() {
            return Err(Error::Dataset("input difference must be nonzero".into()));
        }
        if !self.input_diff.fits(spec.n) {
            return Err(Error::Shape(format!(
                "input difference {} exceeds {}-bit words",
                self.input_diff, spec.n
            )));
        }
        if let Some(kd) = &self.key_diff {
            if kd.words.len() != spec.m {
                return Err(Error::Shape(format!(
                    "key difference has {} words, {} expects {}",
                    kd.words.len(),
                    spec.name(),
                    spec.m
                )));
            }
            if kd.is_zero() {
                return Err(Error::Dataset(
                    "related-key mode needs a nonzero key difference".into(),
                ));
            }
            for &w in &kd.words {
                spec.check_word(w)?;
            }
        }
        Ok(())
    }

    pub fn words_per_sample(&self) -> usize {
        self.pairs * self.format.words_per_pair()
    }
}

/// One training example: `pairs * F` words in stored order, and a label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sample {
    pub words: Vec<u64>,
    pub label: u8,
}

impl Sample {
    /// Words of each pair record.
    pub fn records(&self, format: DataFormat) -> std::slice::Chunks<'_, u64> {
        self.words.chunks(format.words_per_pair())
    }
}

/// Label of sample `index` in a balanced dataset: even indices are positive.
#[inline]
pub fn balanced_label(index: u64) -> u8 {
    index.is_multiple_of(2) as u8
}

fn draw_key(rng: &mut SplitMix64, spec: &CipherSpec) -> Vec<u64> {
    (0..spec.m).map(|_| rng.next_word(spec.mask())).collect()
}

/// Builds one sample from `rng`.
///
/// Draw order: master key (`m` words); for label 0 in related-key mode a
/// nonzero key difference (`m` words, redrawn while zero); then per pair
/// `P_l, P_r` and, for label 0, `P'_l, P'_r` (ciphertext words in
/// random-data mode).
pub fn build_sample(params: &DatasetParams, label: u8, rng: &mut SplitMix64) -> Result<Sample> {
    let spec = params.cipher.spec();
    let mask = spec.mask();
    if label > 1 {
        return Err(Error::Dataset(format!("label {label}")));
    }
    if label == 1 && params.input_diff.is_zero() {
        return Err(Error::Dataset("input difference must be nonzero".into()));
    }
    if params.pairs == 0 {
        return Err(Error::Range("at least one pair per sample".into()));
    }
    let key = draw_key(rng, &spec);
    let key2 = match (&params.key_diff, label) {
        (None, _) => key.clone(),
        (Some(kd), 1) => kd.apply(&key),
        (Some(_), _) => loop {
            let kd = KeyDifference {
                words: draw_key(rng, &spec),
            };
            if !kd.is_zero() {
                break kd.apply(&key);
            }
        },
    };
    let rk = spec.expand_key(&key, params.rounds)?;
    let rk2 = spec.expand_key(&key2, params.rounds)?;

    let mut words = Vec::with_capacity(params.words_per_sample());
    for _ in 0..params.pairs {
        let p = (rng.next_word(mask), rng.next_word(mask));
        let (c, c2) = if label == 1 {
            let p2 = params.input_diff.apply(p);
            (
                spec.encrypt_with(p, rk.as_slice()),
                spec.encrypt_with(p2, rk2.as_slice()),
            )
        } else {
            let p2 = (rng.next_word(mask), rng.next_word(mask));
            match params.negative {
                NegativeMode::RandomDifference => (
                    spec.encrypt_with(p, rk.as_slice()),
                    spec.encrypt_with(p2, rk2.as_slice()),
                ),
                NegativeMode::RandomData => (p, p2),
            }
        };
        params.format.project(&spec, c, c2, &mut words);
    }
    Ok(Sample { words, label })
}

/// Sample `index` of the balanced dataset seeded with `master_seed`.
pub fn sample_at(params: &DatasetParams, master_seed: u64, index: u64) -> Result<Sample> {
    let mut rng = SplitMix64::stream(master_seed, index);
    build_sample(params, balanced_label(index), &mut rng)
}

/// Samples `start..end` of a balanced dataset, generated in parallel and
/// returned in index order.
pub fn generate_range(
    params: &DatasetParams,
    master_seed: u64,
    start: u64,
    end: u64,
) -> Result<Vec<Sample>> {
    params.validate()?;
    (start..end)
        .into_par_iter()
        .map(|i| sample_at(params, master_seed, i))
        .collect()
}

pub fn generate(params: &DatasetParams, count: u64, master_seed: u64) -> Result<Vec<Sample>> {
    generate_range(params, master_seed, 0, count)
}

/// File header. See the module docs for the byte layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub version: u8,
    pub cipher: CipherId,
    pub word_bits: u8,
    pub rounds: u8,
    pub pairs: u8,
    pub format: DataFormat,
    pub related_key: bool,
    pub m: u8,
    pub negative: NegativeMode,
    pub input_diff: Difference,
    pub key_diff: Vec<u64>,
    pub master_seed: u64,
    pub sample_count: u64,
}

impl DatasetHeader {
    pub fn for_params(params: &DatasetParams, master_seed: u64, sample_count: u64) -> Self {
        let spec = params.cipher.spec();
        DatasetHeader {
            version: VERSION,
            cipher: params.cipher,
            word_bits: spec.n as u8,
            rounds: params.rounds as u8,
            pairs: params.pairs as u8,
            format: params.format,
            related_key: params.key_diff.is_some(),
            m: spec.m as u8,
            negative: params.negative,
            input_diff: params.input_diff,
            key_diff: params
                .key_diff
                .as_ref()
                .map(|k| k.words.clone())
                .unwrap_or_else(|| vec![0; spec.m]),
            master_seed,
            sample_count,
        }
    }

    /// Reconstructs generation parameters from a header.
    pub fn params(&self) -> DatasetParams {
        DatasetParams {
            cipher: self.cipher,
            rounds: self.rounds as usize,
            input_diff: self.input_diff,
            key_diff: self.related_key.then(|| KeyDifference {
                words: self.key_diff.clone(),
            }),
            pairs: self.pairs as usize,
            format: self.format,
            negative: self.negative,
        }
    }

    pub fn words_per_sample(&self) -> usize {
        self.pairs as usize * self.format.words_per_pair()
    }

    pub fn record_len(&self) -> u64 {
        self.words_per_sample() as u64 * 8 + 1
    }

    pub fn encoded_len(&self) -> usize {
        15 + 16 + 8 * self.m as usize + 16
    }

    /// Total file size implied by the header.
    pub fn file_len(&self) -> u64 {
        self.encoded_len() as u64 + self.sample_count * self.record_len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&[
            self.version,
            self.cipher.code(),
            self.word_bits,
            self.rounds,
            self.pairs,
            self.format.id(),
            self.related_key as u8,
            self.m,
            self.negative as u8,
            0,
            0,
        ]);
        out.extend_from_slice(&self.input_diff.dl.to_le_bytes());
        out.extend_from_slice(&self.input_diff.dr.to_le_bytes());
        for w in &self.key_diff {
            out.extend_from_slice(&w.to_le_bytes());
        }
        out.extend_from_slice(&self.master_seed.to_le_bytes());
        out.extend_from_slice(&self.sample_count.to_le_bytes());
        out
    }

    pub fn decode<R: Read>(r: &mut R) -> Result<Self> {
        let mut fixed = [0u8; 15];
        read_exact(r, &mut fixed, "header")?;
        if &fixed[..4] != MAGIC {
            return Err(Error::Dataset(format!("bad magic {:?}", &fixed[..4])));
        }
        if fixed[4] != VERSION {
            return Err(Error::Dataset(format!(
                "unsupported version {} (expected {VERSION})",
                fixed[4]
            )));
        }
        if fixed[13] != 0 || fixed[14] != 0 {
            return Err(Error::Dataset("reserved header bytes are not zero".into()));
        }
        let cipher = CipherId::from_code(fixed[5])?;
        let spec = cipher.spec();
        let m = fixed[11];
        if fixed[6] as u32 != spec.n || m as usize != spec.m {
            return Err(Error::Dataset(format!(
                "header word size {} / key words {m} inconsistent with {}",
                fixed[6],
                spec.name()
            )));
        }
        let related_key = match fixed[10] {
            0 => false,
            1 => true,
            b => return Err(Error::Dataset(format!("related-key flag {b}"))),
        };
        let dl = read_u64(r)?;
        let dr = read_u64(r)?;
        let key_diff = (0..m).map(|_| read_u64(r)).collect::<Result<Vec<_>>>()?;
        let master_seed = read_u64(r)?;
        let sample_count = read_u64(r)?;
        Ok(DatasetHeader {
            version: fixed[4],
            cipher,
            word_bits: fixed[6],
            rounds: fixed[7],
            pairs: fixed[8],
            format: DataFormat::from_id(fixed[9])?,
            related_key,
            m,
            negative: NegativeMode::from_byte(fixed[12])?,
            input_diff: Difference::new(dl, dr),
            key_diff,
            master_seed,
            sample_count,
        })
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Dataset(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, "header")?;
    Ok(u64::from_le_bytes(b))
}

fn check_sample(header: &DatasetHeader, s: &Sample) -> Result<()> {
    if s.words.len() != header.words_per_sample() {
        return Err(Error::Dataset(format!(
            "sample has {} words, header implies {}",
            s.words.len(),
            header.words_per_sample()
        )));
    }
    if s.label > 1 {
        return Err(Error::Dataset(format!("label {}", s.label)));
    }
    Ok(())
}

/// Serializes samples in file order after a header.
pub struct DatasetWriter<W: Write> {
    inner: W,
    header: DatasetHeader,
    written: u64,
    buf: Vec<u8>,
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(mut inner: W, header: DatasetHeader) -> Result<Self> {
        inner.write_all(&header.encode())?;
        Ok(DatasetWriter {
            inner,
            header,
            written: 0,
            buf: Vec::new(),
        })
    }

    pub fn write_sample(&mut self, s: &Sample) -> Result<()> {
        check_sample(&self.header, s)?;
        if self.written == self.header.sample_count {
            return Err(Error::Dataset(format!(
                "more samples than the {} announced in the header",
                self.header.sample_count
            )));
        }
        self.buf.clear();
        for w in &s.words {
            self.buf.extend_from_slice(&w.to_le_bytes());
        }
        self.buf.push(s.label);
        self.inner.write_all(&self.buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.sample_count {
            return Err(Error::Dataset(format!(
                "{} samples written, header announces {}",
                self.written, self.header.sample_count
            )));
        }
        self.inner.flush()?;
        Ok(self.inner)
    }
}

pub fn write_dataset(path: &Path, header: &DatasetHeader, samples: &[Sample]) -> Result<()> {
    if header.sample_count != samples.len() as u64 {
        return Err(Error::Dataset(format!(
            "header announces {} samples, {} given",
            header.sample_count,
            samples.len()
        )));
    }
    let file = File::create(path).map_err(|e| Error::file(path, e))?;
    let mut w = DatasetWriter::new(BufWriter::new(file), header.clone())?;
    for s in samples {
        w.write_sample(s)?;
    }
    w.finish()?;
    Ok(())
}

/// Streams a whole balanced dataset to `path`, generating `CHUNK` samples at
/// a time in parallel. The file is removed if generation fails midway.
pub fn generate_to_file(
    path: &Path,
    params: &DatasetParams,
    count: u64,
    master_seed: u64,
) -> Result<DatasetHeader> {
    params.validate()?;
    let header = DatasetHeader::for_params(params, master_seed, count);
    let run = || -> Result<()> {
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        let mut w = DatasetWriter::new(BufWriter::new(file), header.clone())?;
        let mut start = 0;
        while start < count {
            let end = (start + CHUNK as u64).min(count);
            for s in generate_range(params, master_seed, start, end)? {
                w.write_sample(&s)?;
            }
            start = end;
        }
        w.finish()?;
        Ok(())
    };
    if let Err(e) = run() {
        let _ = std::fs::remove_file(path);
        return Err(e);
    }
    Ok(header)
}

/// Reads a dataset, validating the payload length against the header.
pub fn read_dataset(path: &Path) -> Result<(DatasetHeader, Vec<Sample>)> {
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    let actual = file.metadata().map_err(|e| Error::file(path, e))?.len();
    let mut r = BufReader::new(file);
    let header = DatasetHeader::decode(&mut r)?;
    if actual != header.file_len() {
        return Err(Error::Dataset(format!(
            "file is {actual} bytes, header implies {}",
            header.file_len()
        )));
    }
    let wps = header.words_per_sample();
    let mut record = vec![0u8; header.record_len() as usize];
    let mut samples = Vec::with_capacity(header.sample_count.min(1 << 20) as usize);
    for _ in 0..header.sample_count {
        read_exact(&mut r, &mut record, "payload")?;
        let words = record[..wps * 8]
            .chunks_exact(8)
            .map(|b| u64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        let s = Sample {
            words,
            label: record[wps * 8],
        };
        check_sample(&header, &s)?;
        samples.push(s);
    }
    Ok((header, samples))
}
