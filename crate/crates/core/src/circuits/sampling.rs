//! Computational-basis sampling and a shot-level noise model.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configspace::{Configuration, SectorBasis};
use crate::dynamics::StateVector;
use crate::error::{QlmError, Result};

/// Shots handled by one RNG stream; fixes the stream layout independently
/// of the worker count.
pub const SHOT_CHUNK: usize = 4096;

/// Per-gate depolarizing-style error rates and a per-bit readout flip rate.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    pub p1q: f64,
    pub p2q: f64,
    pub p_readout: f64,
}

impl NoiseModel {
    pub const NONE: NoiseModel = NoiseModel {
        p1q: 0.0,
        p2q: 0.0,
        p_readout: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1q", self.p1q), ("p2q", self.p2q), ("p_readout", self.p_readout)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(QlmError::Config(format!("{name} = {p} outside [0, 1]")));
            }
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1q == 0.0 && self.p2q == 0.0 && self.p_readout == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShotMetadata {
    pub step: Option<usize>,
    pub seed: u64,
    pub noise: Option<NoiseModel>,
}

/// Multiset of measured register bitstrings.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ShotTable {
    pub n_qubits: usize,
    counts: BTreeMap<u64, u64>,
    pub metadata: ShotMetadata,
}

impl ShotTable {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            ..Self::default()
        }
    }

    pub fn from_counts(n_qubits: usize, counts: impl IntoIterator<Item = (Configuration, u64)>) -> Self {
        let mut t = Self::new(n_qubits);
        for (c, n) in counts {
            t.add(c, n);
        }
        t
    }

    pub fn add(&mut self, c: Configuration, n: u64) {
        if n > 0 {
            *self.counts.entry(c.0).or_insert(0) += n;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn count(&self, c: Configuration) -> u64 {
        self.counts.get(&c.0).copied().unwrap_or(0)
    }

    /// `(bitstring, count)` in ascending packed order.
    pub fn iter(&self) -> impl Iterator<Item = (Configuration, u64)> + '_ {
        self.counts.iter().map(|(&c, &n)| (Configuration(c), n))
    }

    /// Every shot in ascending packed order, repeated by count.
    pub fn expand(&self) -> Vec<Configuration> {
        self.iter()
            .flat_map(|(c, n)| std::iter::repeat(c).take(n as usize))
            .collect()
    }

    fn hex_width(&self) -> usize {
        self.n_qubits.div_ceil(4).max(1)
    }

    /// CSV with header `bitstring,count`; bitstrings are zero-padded hex of
    /// the packed register (qubit `q` is bit `q`).
    pub fn to_csv(&self) -> String {
        let w = self.hex_width();
        let mut s = String::from("bitstring,count\n");
        for (c, n) in self.iter() {
            writeln!(s, "{:0w$x},{n}", c.0).expect("write to string");
        }
        s
    }

    pub fn from_csv(n_qubits: usize, text: &str) -> Result<Self> {
        let mut t = Self::new(n_qubits);
        for (k, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let bad = || QlmError::Config(format!("shot table line {}: '{line}'", k + 1));
            let (b, n) = line.split_once(',').ok_or_else(bad)?;
            let c = u64::from_str_radix(b.trim(), 16).map_err(|_| bad())?;
            if n_qubits < 64 && c >> n_qubits != 0 {
                return Err(bad());
            }
            t.add(Configuration(c), n.trim().parse().map_err(|_| bad())?);
        }
        Ok(t)
    }

    /// JSON sidecar with width, totals and metadata.
    pub fn metadata_json(&self) -> serde_json::Value {
        serde_json::json!({
            "n_qubits": self.n_qubits,
            "total": self.total(),
            "distinct": self.distinct(),
            "step": self.metadata.step,
            "seed": self.metadata.seed,
            "noise": self.metadata.noise,
        })
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// `n_shots` independent draws from `|ψ|²` over the sector.
pub fn sample_shots(psi: &StateVector, sector: &SectorBasis, n_qubits: usize, n_shots: usize, seed: u64) -> Result<ShotTable> {
    if psi.dim() != sector.len() {
        return Err(QlmError::Dimension {
            expected: sector.len(),
            got: psi.dim(),
        });
    }
    let norm = psi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(QlmError::NotNormalized(norm));
    }
    let mut cdf = psi.probabilities();
    let mut acc = 0.0;
    for p in cdf.iter_mut() {
        acc += *p;
        *p = acc;
    }
    let n_chunks = n_shots.div_ceil(SHOT_CHUNK);
    let parts: Vec<BTreeMap<u64, u64>> = (0..n_chunks)
        .into_par_iter()
        .map(|ch| {
            let mut rng = chunk_rng(seed, ch);
            let len = SHOT_CHUNK.min(n_shots - ch * SHOT_CHUNK);
            let mut m = BTreeMap::new();
            for _ in 0..len {
                let r = rng.gen::<f64>() * acc;
                let i = cdf.partition_point(|&x| x <= r).min(cdf.len() - 1);
                *m.entry(sector.states()[i]).or_insert(0) += 1;
            }
            m
        })
        .collect();
    let mut t = ShotTable::new(n_qubits);
    for m in parts {
        for (c, n) in m {
            t.add(Configuration(c), n);
        }
    }
    t.metadata.seed = seed;
    Ok(t)
}

/// Probability that a shot survives `steps` noisy steps untouched.
pub fn expected_success(n1q: usize, n2q: usize, steps: usize, p1q: f64, p2q: f64) -> f64 {
    let per_step = (1.0 - p1q).powf(n1q as f64) * (1.0 - p2q).powf(n2q as f64);
    per_step.powf(steps as f64)
}

fn corrupt(c: u64, n_qubits: usize, rng: &mut ChaCha8Rng) -> u64 {
    let mut k = 1;
    while k < n_qubits && rng.gen_bool(0.5) {
        k += 1;
    }
    let mut out = c;
    for q in rand::seq::index::sample(rng, n_qubits, k) {
        out ^= 1 << q;
    }
    out
}

/// Applies the shot-level noise model after `steps` steps of a circuit with
/// `n1q`/`n2q` gates per step.
///
/// With probability `1 − expected_success` a shot is replaced by a copy
/// with `k ≥ 1` distinct random bits flipped, `P(k) = 2^−k` (the tail is
/// folded into `k = n_qubits`). Every bit then flips independently with
/// `p_readout`.
pub fn apply_noise(
    shots: &ShotTable,
    model: &NoiseModel,
    n1q: usize,
    n2q: usize,
    steps: usize,
    seed: u64,
) -> Result<ShotTable> {
    model.validate()?;
    let mut out = ShotTable::new(shots.n_qubits);
    out.metadata = ShotMetadata {
        noise: Some(*model),
        seed,
        ..shots.metadata.clone()
    };
    if model.is_noiseless() || shots.n_qubits == 0 {
        out.counts = shots.counts.clone();
        return Ok(out);
    }
    let p_gate = 1.0 - expected_success(n1q, n2q, steps, model.p1q, model.p2q);
    let n = shots.n_qubits;
    let all = shots.expand();
    let parts: Vec<BTreeMap<u64, u64>> = all
        .par_chunks(SHOT_CHUNK)
        .enumerate()
        .map(|(ch, chunk)| {
            let mut rng = chunk_rng(seed, ch);
            let mut m = BTreeMap::new();
            for c in chunk {
                let mut x = c.0;
                if p_gate > 0.0 && rng.gen_bool(p_gate.min(1.0)) {
                    x = corrupt(x, n, &mut rng);
                }
                if model.p_readout > 0.0 {
                    for q in 0..n {
                        if rng.gen_bool(model.p_readout) {
                            x ^= 1 << q;
                        }
                    }
                }
                *m.entry(x).or_insert(0) += 1;
            }
            m
        })
        .collect();
    for m in parts {
        for (c, k) in m {
            out.add(Configuration(c), k);
        }
    }
    Ok(out)
}
