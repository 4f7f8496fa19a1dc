//! Grouping of hopping and plaquette terms into four sublayers of
//! pairwise disjoint qubit support.

use serde::{Deserialize, Serialize};

use crate::configspace::{compile_move, Move};
use crate::error::{QlmError, Result};
use crate::lattice::{Direction, LatticeGeometry};

pub const N_ENTANGLING_SUBLAYERS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SublayerSchedule {
    /// Entangling sublayers in application order; each is a list of terms.
    pub sublayers: Vec<Vec<Move>>,
    /// Qubit-support masks parallel to `sublayers`.
    #[serde(skip)]
    masks: Vec<Vec<u64>>,
}

impl SublayerSchedule {
    pub fn terms(&self) -> impl Iterator<Item = (usize, Move)> + '_ {
        self.sublayers
            .iter()
            .enumerate()
            .flat_map(|(k, s)| s.iter().map(move |&m| (k, m)))
    }

    pub fn n_terms(&self) -> usize {
        self.sublayers.iter().map(Vec::len).sum()
    }

    /// Same schedule with the terms inside each sublayer reordered.
    pub fn with_sublayer_order(&self, geom: &LatticeGeometry, order: impl Fn(usize, &mut Vec<Move>)) -> Self {
        let sublayers: Vec<Vec<Move>> = self
            .sublayers
            .iter()
            .enumerate()
            .map(|(k, s)| {
                let mut s = s.clone();
                order(k, &mut s);
                s
            })
            .collect();
        Self::from_sublayers(geom, sublayers).expect("terms already validated")
    }

    /// Wraps explicit sublayers after checking disjointness within each one.
    pub fn from_sublayers(geom: &LatticeGeometry, sublayers: Vec<Vec<Move>>) -> Result<Self> {
        let mut masks = Vec::with_capacity(sublayers.len());
        for (k, layer) in sublayers.iter().enumerate() {
            let mut used = 0u64;
            let mut layer_masks = Vec::with_capacity(layer.len());
            for &mv in layer {
                let m = compile_move(geom, mv)?.mask;
                if used & m != 0 {
                    return Err(QlmError::Schedule(format!(
                        "term {mv:?} overlaps another term in sublayer {k}"
                    )));
                }
                used |= m;
                layer_masks.push(m);
            }
            masks.push(layer_masks);
        }
        Ok(Self { sublayers, masks })
    }

    /// Verifies exact cover of all hopping and plaquette terms plus
    /// disjointness inside each sublayer.
    pub fn validate(&self, geom: &LatticeGeometry) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for (k, layer) in self.masks.iter().enumerate() {
            let mut used = 0u64;
            for (m, mv) in layer.iter().zip(&self.sublayers[k]) {
                if used & m != 0 {
                    return Err(QlmError::Schedule(format!("overlap in sublayer {k} at {mv:?}")));
                }
                used |= m;
                if !seen.insert(*mv) {
                    return Err(QlmError::Schedule(format!("{mv:?} scheduled twice")));
                }
            }
        }
        let expected = geom.n_links() + geom.plaquettes().len();
        if seen.len() != expected {
            return Err(QlmError::Schedule(format!(
                "{} of {expected} terms scheduled",
                seen.len()
            )));
        }
        Ok(())
    }
}

/// Greedy four-colouring of the term conflict graph (terms conflict when
/// they share a qubit).
///
/// Term order: x-links row-major, y-links row-major, then plaquettes with
/// even anchor parity, then odd. Each term takes the first free colour in a
/// fixed preference list: `0,1,2,3` for x-links and even plaquettes,
/// `2,3,0,1` for y-links and odd plaquettes. On an open square lattice this
/// puts x-links in colour `x mod 2`, y-links in `2 + y mod 2`, an even
/// plaquette at `(x, y)` in `1 − x mod 2` and an odd one in `3 − y mod 2`.
pub fn schedule_sublayers(geom: &LatticeGeometry) -> Result<SublayerSchedule> {
    const LOW_FIRST: [usize; 4] = [0, 1, 2, 3];
    const HIGH_FIRST: [usize; 4] = [2, 3, 0, 1];
    let plaq = geom.plaquettes();
    let mut order: Vec<(Move, [usize; 4])> = geom
        .links()
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let pref = if l.dir == Direction::X { LOW_FIRST } else { HIGH_FIRST };
            (Move::Hopping(i), pref)
        })
        .collect();
    let (even, odd): (Vec<usize>, Vec<usize>) = (0..plaq.len()).partition(|&i| plaq[i].anchor.is_even());
    order.extend(even.into_iter().map(|i| (Move::Plaquette(i), LOW_FIRST)));
    order.extend(odd.into_iter().map(|i| (Move::Plaquette(i), HIGH_FIRST)));

    let mut sublayers: Vec<Vec<Move>> = vec![Vec::new(); N_ENTANGLING_SUBLAYERS];
    let mut used = [0u64; N_ENTANGLING_SUBLAYERS];
    for (mv, pref) in order {
        let mask = compile_move(geom, mv)?.mask;
        match pref.into_iter().find(|&k| used[k] & mask == 0) {
            Some(k) => {
                used[k] |= mask;
                sublayers[k].push(mv);
            }
            None => {
                let clique: Vec<String> = sublayers
                    .iter()
                    .enumerate()
                    .flat_map(|(k, s)| {
                        s.iter()
                            .filter(|&&o| compile_move(geom, o).unwrap().mask & mask != 0)
                            .map(move |o| format!("{o:?}@{k}"))
                    })
                    .collect();
                return Err(QlmError::Schedule(format!(
                    "no free sublayer for {mv:?}; conflicts with [{}]",
                    clique.join(", ")
                )));
            }
        }
    }
    SublayerSchedule::from_sublayers(geom, sublayers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_by_four_exact_cover() {
        let g = LatticeGeometry::with_opposite_corners(5, 4).unwrap();
        let s = schedule_sublayers(&g).unwrap();
        s.validate(&g).unwrap();
        assert_eq!(s.sublayers.len(), 4);
        let hops = s.terms().filter(|t| matches!(t.1, Move::Hopping(_))).count();
        let plaqs = s.terms().filter(|t| matches!(t.1, Move::Plaquette(_))).count();
        assert_eq!((hops, plaqs), (31, 12));
    }

    #[test]
    fn two_by_two_plaquette_alone() {
        let g = LatticeGeometry::with_opposite_corners(2, 2).unwrap();
        let s = schedule_sublayers(&g).unwrap();
        s.validate(&g).unwrap();
        let k = s
            .sublayers
            .iter()
            .position(|l| l.contains(&Move::Plaquette(0)))
            .unwrap();
        assert_eq!(s.sublayers[k].len(), 1);
    }

    #[test]
    fn many_lattices_colour_with_four() {
        for lx in 2..=7 {
            for ly in 2..=7 {
                let Ok(g) = LatticeGeometry::with_opposite_corners(lx, ly) else {
                    continue;
                };
                if g.qubit_count() > 64 {
                    continue;
                }
                schedule_sublayers(&g).unwrap().validate(&g).unwrap();
            }
        }
    }

    #[test]
    fn overlapping_sublayer_rejected() {
        let g = LatticeGeometry::with_opposite_corners(2, 2).unwrap();
        let err = SublayerSchedule::from_sublayers(&g, vec![vec![Move::Hopping(0), Move::Plaquette(0)]]);
        assert!(err.is_err());
    }
}
