//! Post-selection of measured bitstrings against a sector and retention
//! accounting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use crate::circuits::expected_success;
use crate::circuits::ShotTable;
use crate::configspace::{Configuration, SectorBasis};
use crate::error::{QlmError, Result};

/// `Hard` keeps sector members only; `Flip1`/`Flip2` also keep strings
/// within Hamming distance 1/2 of a member, replaced by the nearest member
/// (smallest packed value on ties).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PostSelectionScheme {
    Hard,
    Flip1,
    Flip2,
}

impl PostSelectionScheme {
    pub const ALL: [PostSelectionScheme; 3] = [Self::Hard, Self::Flip1, Self::Flip2];

    pub fn max_distance(self) -> u32 {
        match self {
            Self::Hard => 0,
            Self::Flip1 => 1,
            Self::Flip2 => 2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Hard => "hard",
            Self::Flip1 => "flip1",
            Self::Flip2 => "flip2",
        }
    }
}

impl fmt::Display for PostSelectionScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PostSelectionScheme {
    type Err = QlmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "hard" => Ok(Self::Hard),
            "flip1" => Ok(Self::Flip1),
            "flip2" => Ok(Self::Flip2),
            other => Err(QlmError::Config(format!("unknown post-selection scheme '{other}'"))),
        }
    }
}

/// Nearest sector member within `max_distance` bit flips of `c`.
pub fn nearest_member(sector: &SectorBasis, n_qubits: usize, c: Configuration, max_distance: u32) -> Option<Configuration> {
    if sector.contains(c) {
        return Some(c);
    }
    let flip = |x: u64, q: usize| Configuration(x ^ (1 << q));
    if max_distance >= 1 {
        let best = (0..n_qubits).map(|q| flip(c.0, q)).filter(|&d| sector.contains(d)).min();
        if best.is_some() {
            return best;
        }
    }
    if max_distance >= 2 {
        return (0..n_qubits)
            .flat_map(|a| (a + 1..n_qubits).map(move |b| flip(flip(c.0, a).0, b)))
            .filter(|&d| sector.contains(d))
            .min();
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSelection {
    pub scheme: PostSelectionScheme,
    pub kept: ShotTable,
    pub total: u64,
    pub retention: f64,
}

/// Applies `scheme` to every distinct bitstring of `shots`.
pub fn post_select(shots: &ShotTable, scheme: PostSelectionScheme, sector: &SectorBasis) -> PostSelection {
    let d = scheme.max_distance();
    let entries: Vec<(Configuration, u64)> = shots.iter().collect();
    let mapped: Vec<Option<(Configuration, u64)>> = entries
        .par_iter()
        .map(|&(c, n)| nearest_member(sector, shots.n_qubits, c, d).map(|m| (m, n)))
        .collect();
    let mut kept = ShotTable::new(shots.n_qubits);
    kept.metadata = shots.metadata.clone();
    for (m, n) in mapped.into_iter().flatten() {
        kept.add(m, n);
    }
    let total = shots.total();
    let retention = if total == 0 { 0.0 } else { kept.total() as f64 / total as f64 };
    PostSelection {
        scheme,
        kept,
        total,
        retention,
    }
}

/// Normalized frequencies `p(c) = N(c) / N` of a post-selected table.
pub fn state_probabilities(kept: &ShotTable) -> Result<BTreeMap<Configuration, f64>> {
    let n = kept.total();
    if n == 0 {
        return Err(QlmError::EmptyShots);
    }
    Ok(kept.iter().map(|(c, k)| (c, k as f64 / n as f64)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionRow {
    pub step: usize,
    pub scheme: PostSelectionScheme,
    pub kept: u64,
    pub total: u64,
    pub retention: f64,
}

impl RetentionRow {
    pub fn new(step: usize, p: &PostSelection) -> Self {
        Self {
            step,
            scheme: p.scheme,
            kept: p.kept.total(),
            total: p.total,
            retention: p.retention,
        }
    }
}

/// CSV with columns `step,scheme,kept,total,retention`.
pub fn retention_csv(rows: &[RetentionRow]) -> String {
    let mut s = String::from("step,scheme,kept,total,retention\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{:?}\n", r.step, r.scheme, r.kept, r.total, r.retention));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::MoveSet;
    use crate::lattice::LatticeGeometry;

    fn toy() -> SectorBasis {
        let g = LatticeGeometry::with_opposite_corners(2, 2).unwrap();
        SectorBasis::from_states(&g, vec![0b0000_0000, 0b1111_0000], Configuration(0), MoveSet::ALL)
    }

    #[test]
    fn members_kept_by_all_schemes() {
        let s = toy();
        let t = ShotTable::from_counts(8, [(Configuration(0), 5), (Configuration(0b1111_0000), 7)]);
        for scheme in PostSelectionScheme::ALL {
            let p = post_select(&t, scheme, &s);
            assert_eq!(p.retention, 1.0);
            assert_eq!(p.kept, t);
        }
    }

    #[test]
    fn single_flip_rejected_by_hard_only() {
        let s = toy();
        let t = ShotTable::from_counts(8, [(Configuration(0b0000_0100), 3)]);
        assert_eq!(post_select(&t, PostSelectionScheme::Hard, &s).retention, 0.0);
        for scheme in [PostSelectionScheme::Flip1, PostSelectionScheme::Flip2] {
            let p = post_select(&t, scheme, &s);
            assert_eq!(p.kept.count(Configuration(0)), 3);
        }
    }

    #[test]
    fn double_flip_needs_flip2_and_ties_pick_smallest() {
        let s = toy();
        let t = ShotTable::from_counts(8, [(Configuration(0b0011_0000), 2)]);
        assert_eq!(post_select(&t, PostSelectionScheme::Flip1, &s).retention, 0.0);
        let p = post_select(&t, PostSelectionScheme::Flip2, &s);
        assert_eq!(p.kept.count(Configuration(0)), 2);
    }

    #[test]
    fn probabilities_normalize() {
        let t = ShotTable::from_counts(8, [(Configuration(1), 1), (Configuration(2), 3)]);
        let p = state_probabilities(&t).unwrap();
        assert_eq!(p[&Configuration(2)], 0.75);
        assert!((p.values().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(state_probabilities(&ShotTable::new(8)).is_err());
    }

    #[test]
    fn retention_csv_layout() {
        let rows = [RetentionRow {
            step: 2,
            scheme: PostSelectionScheme::Flip1,
            kept: 9,
            total: 10,
            retention: 0.9,
        }];
        assert_eq!(retention_csv(&rows), "step,scheme,kept,total,retention\n2,flip1,9,10,0.9\n");
        assert_eq!("flip2".parse::<PostSelectionScheme>().unwrap(), PostSelectionScheme::Flip2);
        assert!("soft".parse::<PostSelectionScheme>().is_err());
    }
}
