//! Bounded enumeration of differential characteristics.
//!
//! A characteristic is the full sequence of round-boundary differences. With
//! a fixed output difference the search walks backwards through the Feistel
//! network: from `(ΔL', ΔR')` the previous state is `(ΔR', ΔL' ^ β)` for
//! every `β` the round function can produce from `α = ΔR'`. With a fixed
//! input it walks forwards: `(ΔL, ΔR) -> (ΔR ^ β, ΔL)` with `β` reachable
//! from `ΔL`. Partial characteristics heavier than the cap are pruned, and
//! since all outputs of one `α` share a weight, pruning drops whole branches.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::round::RoundModel;
use crate::cipher::CipherSpec;
use crate::diff::DiffState;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "difference")]
pub enum Constraint {
    /// Characteristics ending at this difference, any input.
    Output(DiffState),
    /// Characteristics starting at this difference, any output.
    Input(DiffState),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trail {
    /// `rounds + 1` states; index 0 is the input difference.
    pub states: Vec<DiffState>,
    pub weight: u32,
}

impl Trail {
    pub fn input(&self) -> DiffState {
        self.states[0]
    }

    pub fn output(&self) -> DiffState {
        *self.states.last().expect("non-empty trail")
    }

    /// Orders representatives: lightest end point (the free end), then lexicographic.
    fn rank_key(&self, constraint: &Constraint) -> (u32, Vec<DiffState>) {
        let free = match constraint {
            Constraint::Output(_) => self.input(),
            Constraint::Input(_) => self.output(),
        };
        (free.hamming_weight(), self.states.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub cipher: String,
    pub constraint: Constraint,
    pub rounds: usize,
    pub weight_cap: u32,
    pub min_weight: Option<u32>,
    /// Number of characteristics per weight, weights `<= weight_cap` only.
    pub counts: BTreeMap<u32, u64>,
    /// Per weight, the characteristic whose free end has the smallest
    /// Hamming weight (ties broken lexicographically).
    pub representatives: BTreeMap<u32, Trail>,
}

impl SearchReport {
    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn count_at_min(&self) -> u64 {
        self.min_weight
            .and_then(|w| self.counts.get(&w).copied())
            .unwrap_or(0)
    }

    /// `Σ count · 2^-weight` over the enumerated characteristics.
    pub fn probability_mass(&self) -> f64 {
        self.counts
            .iter()
            .map(|(&w, &c)| c as f64 * (-(w as f64)).exp2())
            .sum()
    }
}

#[derive(Default)]
struct Acc {
    counts: BTreeMap<u32, u64>,
    reps: BTreeMap<u32, Trail>,
}

impl Acc {
    fn record(&mut self, constraint: &Constraint, path: &[DiffState], weight: u32) {
        *self.counts.entry(weight).or_default() += 1;
        let mut states = path.to_vec();
        if matches!(constraint, Constraint::Output(_)) {
            states.reverse();
        }
        let t = Trail { states, weight };
        match self.reps.get(&weight) {
            Some(cur) if cur.rank_key(constraint) <= t.rank_key(constraint) => {}
            _ => {
                self.reps.insert(weight, t);
            }
        }
    }

    fn merge(mut self, other: Acc, constraint: &Constraint) -> Acc {
        for (w, c) in other.counts {
            *self.counts.entry(w).or_default() += c;
        }
        for (w, t) in other.reps {
            match self.reps.get(&w) {
                Some(cur) if cur.rank_key(constraint) <= t.rank_key(constraint) => {}
                _ => {
                    self.reps.insert(w, t);
                }
            }
        }
        self
    }
}

struct Searcher<'a> {
    model: &'a RoundModel,
    constraint: Constraint,
    cap: u32,
}

impl Searcher<'_> {
    /// Successor states of `s` in the search direction, with the step weight.
    fn step(&self, s: DiffState, budget: u32, mut visit: impl FnMut(DiffState, u32)) {
        let alpha = match self.constraint {
            Constraint::Output(_) => s.dr,
            Constraint::Input(_) => s.dl,
        };
        let sp = self.model.space(alpha);
        if sp.weight > budget {
            return;
        }
        match self.constraint {
            Constraint::Output(_) => self
                .model
                .for_each_output(&sp, |b| visit(DiffState::new(s.dr, s.dl ^ b), sp.weight)),
            Constraint::Input(_) => self
                .model
                .for_each_output(&sp, |b| visit(DiffState::new(s.dr ^ b, s.dl), sp.weight)),
        }
    }

    fn dfs(&self, path: &mut Vec<DiffState>, remaining: usize, weight: u32, acc: &mut Acc) {
        let s = *path.last().expect("path starts at the constraint");
        if remaining == 0 {
            acc.record(&self.constraint, path, weight);
            return;
        }
        self.step(s, self.cap - weight, |next, w| {
            path.push(next);
            self.dfs(path, remaining - 1, weight + w, acc);
            path.pop();
        });
    }

    fn run(&self, rounds: usize) -> Acc {
        let start = match self.constraint {
            Constraint::Output(d) | Constraint::Input(d) => d,
        };
        if rounds == 0 {
            let mut acc = Acc::default();
            acc.record(&self.constraint, &[start], 0);
            return acc;
        }
        let mut first = Vec::new();
        self.step(start, self.cap, |next, w| first.push((next, w)));
        first
            .into_par_iter()
            .map(|(next, w)| {
                let mut acc = Acc::default();
                let mut path = vec![start, next];
                self.dfs(&mut path, rounds - 1, w, &mut acc);
                acc
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Acc::default(), |a, b| a.merge(b, &self.constraint))
    }
}

/// Enumerates every characteristic of `rounds` rounds satisfying
/// `constraint` with weight at most `weight_cap`.
pub fn search_characteristics(
    spec: &CipherSpec,
    rounds: usize,
    constraint: Constraint,
    weight_cap: u32,
) -> Result<SearchReport> {
    let model = RoundModel::new(spec)?;
    let (Constraint::Output(d) | Constraint::Input(d)) = constraint;
    if !d.fits(spec.n) {
        return Err(Error::Shape(format!("{d} exceeds {}-bit words", spec.n)));
    }
    let searcher = Searcher {
        model: &model,
        constraint,
        cap: weight_cap,
    };
    let acc = searcher.run(rounds);
    Ok(SearchReport {
        cipher: spec.name().to_string(),
        constraint,
        rounds,
        weight_cap,
        min_weight: acc.counts.keys().next().copied(),
        counts: acc.counts,
        representatives: acc.reps,
    })
}

/// Smallest weight of a characteristic satisfying `constraint`, found by
/// raising the cap one step at a time up to `max_cap`. Returns the report at
/// the first cap where a characteristic exists.
pub fn min_weight_search(
    spec: &CipherSpec,
    rounds: usize,
    constraint: Constraint,
    max_cap: u32,
) -> Result<Option<SearchReport>> {
    for cap in 0..=max_cap {
        let r = search_characteristics(spec, rounds, constraint, cap)?;
        if r.min_weight.is_some() {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// Characteristics from `input` to `output` with weight at most `cap`:
/// per-weight counts, forward enumeration with an exact last-round check.
pub fn trails_between(
    spec: &CipherSpec,
    rounds: usize,
    input: DiffState,
    output: DiffState,
    cap: u32,
) -> Result<BTreeMap<u32, u64>> {
    let model = RoundModel::new(spec)?;
    let mut counts = BTreeMap::new();
    if rounds == 0 {
        if input == output {
            counts.insert(0, 1);
        }
        return Ok(counts);
    }
    fn go(
        model: &RoundModel,
        s: DiffState,
        remaining: usize,
        weight: u32,
        cap: u32,
        output: DiffState,
        counts: &mut BTreeMap<u32, u64>,
    ) {
        if remaining == 1 {
            // (ΔL, ΔR) -> (ΔR ^ β, ΔL) must equal the target
            if s.dl != output.dr {
                return;
            }
            let dp = model.dp(s.dl, output.dl ^ s.dr);
            if dp.valid && weight + dp.weight <= cap {
                *counts.entry(weight + dp.weight).or_default() += 1;
            }
            return;
        }
        let sp = model.space(s.dl);
        if weight + sp.weight > cap {
            return;
        }
        model.for_each_output(&sp, |b| {
            go(
                model,
                DiffState::new(s.dr ^ b, s.dl),
                remaining - 1,
                weight + sp.weight,
                cap,
                output,
                counts,
            )
        });
    }
    go(&model, input, rounds, 0, cap, output, &mut counts);
    Ok(counts)
}

/// `Σ 2^-weight` over the characteristics counted by [`trails_between`].
pub fn trail_aggregate(counts: &BTreeMap<u32, u64>) -> f64 {
    counts
        .iter()
        .map(|(&w, &c)| c as f64 * (-(w as f64)).exp2())
        .sum()
}
