//! Group, TSV and chip yield under independent per-TSV faults.
//!
//! A group's TSVs are its f-TSVs plus the spares its structure uses; each
//! fails independently with probability `p`, and the group works iff
//! [`repairable`] accepts the realized fault set.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::{binomial, repairable, ToleranceStructure};

/// Largest group (f-TSVs plus used spares) enumerated exactly.
pub const EXACT_ENUM_LIMIT: usize = 20;

/// Monte-Carlo work is split into this many independently seeded shards, so
/// the estimate does not depend on the worker count.
const SHARDS: u64 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum YieldError {
    #[error("{0} TSVs exceed the exact enumeration limit of {EXACT_ENUM_LIMIT}")]
    EnumerationBudget(usize),
    #[error("Monte-Carlo needs a positive sample count")]
    NoSamples,
    #[error("defect probability {0} outside [0, 1)")]
    BadProbability(f64),
    #[error("{dies} dies need {} bonding and TSV yields, got {bonding} and {tsv}", dies.saturating_sub(1))]
    LengthMismatch { dies: usize, bonding: usize, tsv: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum YieldMode {
    ExactEnum,
    #[default]
    Binomial,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldParams {
    pub p: f64,
    pub mode: YieldMode,
    pub samples: u64,
    pub seed: u64,
}

impl Default for YieldParams {
    fn default() -> Self {
        Self {
            p: 0.001,
            mode: YieldMode::Binomial,
            samples: 1_000_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YieldEstimate {
    pub value: f64,
    /// Standard error of a Monte-Carlo estimate; `None` for exact values.
    pub std_error: Option<f64>,
}

/// Probability that the group survives its fault realization.
pub fn group_yield(st: &ToleranceStructure, params: &YieldParams) -> Result<YieldEstimate, YieldError> {
    let p = params.p;
    if !(0.0..1.0).contains(&p) {
        return Err(YieldError::BadProbability(p));
    }
    let mut tsvs: Vec<usize> = (0..st.num_f()).collect();
    tsvs.extend(st.used_spares());
    let exact = |value| Ok(YieldEstimate { value, std_error: None });
    match params.mode {
        YieldMode::Binomial => exact(binomial_bound(tsvs.len(), st.k(), p)),
        YieldMode::ExactEnum => {
            if tsvs.len() > EXACT_ENUM_LIMIT {
                return Err(YieldError::EnumerationBudget(tsvs.len()));
            }
            if p == 0.0 {
                return exact(1.0);
            }
            exact(exact_enum(st, &tsvs, p))
        }
        YieldMode::MonteCarlo => {
            if params.samples == 0 {
                return Err(YieldError::NoSamples);
            }
            Ok(monte_carlo(st, &tsvs, p, params.samples, params.seed))
        }
    }
}

/// `Σ_{i≤k} C(M,i) p^i (1-p)^(M-i)`.
pub fn binomial_bound(m: usize, k: usize, p: f64) -> f64 {
    (0..=k.min(m))
        .map(|i| binomial(m, i) as f64 * p.powi(i as i32) * (1.0 - p).powi((m - i) as i32))
        .sum::<f64>()
        .min(1.0)
}

fn exact_enum(st: &ToleranceStructure, tsvs: &[usize], p: f64) -> f64 {
    let m = tsvs.len();
    let num_f = st.num_f();
    let used = m - num_f;
    let f_mask = (1u32 << num_f) - 1;
    (0u32..1 << m)
        .into_par_iter()
        .map(|mask| {
            let faults = mask.count_ones() as i32;
            let weight = p.powi(faults) * (1.0 - p).powi(m as i32 - faults);
            let f_faults = (mask & f_mask).count_ones() as usize;
            let s_faults = (mask >> num_f).count_ones() as usize;
            let ok = f_faults == 0
                || (f_faults <= used - s_faults && {
                    let set: Vec<usize> = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| tsvs[i]).collect();
                    repairable(st, &set).repairable
                });
            if ok {
                weight
            } else {
                0.0
            }
        })
        .sum::<f64>()
        .min(1.0)
}

fn monte_carlo(st: &ToleranceStructure, tsvs: &[usize], p: f64, samples: u64, seed: u64) -> YieldEstimate {
    let num_f = st.num_f();
    let per_shard = samples / SHARDS;
    let extra = samples % SHARDS;
    let failures: u64 = (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(shard);
            let count = per_shard + u64::from(shard < extra);
            let mut faulty = Vec::new();
            let mut failed = 0u64;
            for _ in 0..count {
                faulty.clear();
                let mut any_f = false;
                for (i, &v) in tsvs.iter().enumerate() {
                    if rng.random::<f64>() < p {
                        faulty.push(v);
                        any_f |= i < num_f;
                    }
                }
                if any_f && !repairable(st, &faulty).repairable {
                    failed += 1;
                }
            }
            failed
        })
        .sum();
    let y = 1.0 - failures as f64 / samples as f64;
    YieldEstimate {
        value: y,
        std_error: Some((y * (1.0 - y) / samples as f64).sqrt()),
    }
}

/// `Y_TSV = Π Y_g`.
pub fn tsv_yield(group_yields: &[f64]) -> f64 {
    group_yields.iter().product()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChipYieldInputs {
    pub die_yields: Vec<f64>,
    pub bonding_yields: Vec<f64>,
    pub tsv_yields: Vec<f64>,
}

/// `Π Y_die · Π (Y_bonding · Y_TSV)` over `l` dies and `l - 1` bonding steps.
pub fn chip_yield(inputs: &ChipYieldInputs) -> Result<f64, YieldError> {
    let l = inputs.die_yields.len();
    if l == 0 || inputs.bonding_yields.len() != l - 1 || inputs.tsv_yields.len() != l - 1 {
        return Err(YieldError::LengthMismatch {
            dies: l,
            bonding: inputs.bonding_yields.len(),
            tsv: inputs.tsv_yields.len(),
        });
    }
    let stack: f64 = inputs.die_yields.iter().product();
    let steps: f64 = inputs
        .bonding_yields
        .iter()
        .zip(&inputs.tsv_yields)
        .map(|(b, t)| b * t)
        .product();
    Ok(stack * steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relgraph::RelGraph;

    fn pair() -> ToleranceStructure {
        // f1 -> s1, f2 -> s1 (k = 1, one shared spare)
        let g = RelGraph::from_edges(&["f1", "f2"], &["s1"], &[("f1", "s1"), ("f2", "s1")]).unwrap();
        ToleranceStructure::new(1, g.num_f(), g.num_vertices(), vec![vec![vec![0, 2]], vec![vec![1, 2]]])
    }

    #[test]
    fn closed_forms() {
        let st = pair();
        let p = 0.1;
        // works iff at most one of the three TSVs fails
        let want = 0.9f64.powi(3) + 3.0 * p * 0.81;
        let exact = group_yield(&st, &YieldParams { p, mode: YieldMode::ExactEnum, ..Default::default() }).unwrap();
        assert!((exact.value - want).abs() < 1e-12);
        let bin = group_yield(&st, &YieldParams { p, mode: YieldMode::Binomial, ..Default::default() }).unwrap();
        assert!((bin.value - want).abs() < 1e-12);
    }

    #[test]
    fn zero_probability() {
        let st = pair();
        for mode in [YieldMode::ExactEnum, YieldMode::Binomial, YieldMode::MonteCarlo] {
            let y = group_yield(&st, &YieldParams { p: 0.0, mode, samples: 100, seed: 1 }).unwrap();
            assert_eq!(y.value, 1.0);
        }
    }

    #[test]
    fn k_zero_binomial() {
        assert!((binomial_bound(5, 0, 0.01) - 0.99f64.powi(5)).abs() < 1e-15);
    }

    #[test]
    fn products() {
        assert!((tsv_yield(&[0.999, 0.998]) - 0.997002).abs() < 1e-15);
        assert_eq!(tsv_yield(&[]), 1.0);
        let chip = chip_yield(&ChipYieldInputs {
            die_yields: vec![0.9, 0.9],
            bonding_yields: vec![1.0],
            tsv_yields: vec![1.0],
        })
        .unwrap();
        assert!((chip - 0.81).abs() < 1e-15);
        assert!(chip_yield(&ChipYieldInputs {
            die_yields: vec![1.0, 1.0],
            bonding_yields: vec![],
            tsv_yields: vec![1.0],
        })
        .is_err());
    }

    #[test]
    fn bad_inputs() {
        let st = pair();
        assert!(group_yield(&st, &YieldParams { p: 1.0, ..Default::default() }).is_err());
        assert_eq!(
            group_yield(&st, &YieldParams { mode: YieldMode::MonteCarlo, samples: 0, ..Default::default() }),
            Err(YieldError::NoSamples)
        );
    }
}
