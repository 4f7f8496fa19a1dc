//! Minimal electric strings between the static charges, their
//! plaquette-flip distance from the initial string, and string
//! probabilities.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::configspace::{validate_path, Configuration, SectorBasis};
use crate::dynamics::StateVector;
use crate::error::{QlmError, Result};
use crate::lattice::{LatticeGeometry, Site};

/// Link qubits of a connected path from `static_even` to `static_odd`, in
/// walking order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StringPath {
    pub links: Vec<usize>,
}

impl StringPath {
    pub fn new(geom: &LatticeGeometry, links: Vec<usize>) -> Result<Self> {
        validate_path(geom, &links)?;
        Ok(Self { links })
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Bit mask of the path's link qubits; all qubits must be below 64.
    pub fn mask(&self) -> u64 {
        self.links.iter().fold(0, |m, &q| m | 1 << q)
    }

    pub fn is_minimal(&self, geom: &LatticeGeometry) -> bool {
        self.len() == geom.static_even().manhattan(geom.static_odd())
    }
}

/// All monotone (Manhattan-minimal) paths between the static charges,
/// sorted by their link sequence.
pub fn enumerate_minimal_strings(geom: &LatticeGeometry) -> Vec<StringPath> {
    fn walk(geom: &LatticeGeometry, at: Site, to: Site, path: &mut Vec<usize>, out: &mut Vec<StringPath>) {
        if at == to {
            out.push(StringPath { links: path.clone() });
            return;
        }
        let mut steps = Vec::with_capacity(2);
        if at.x != to.x {
            steps.push(Site::new(if to.x > at.x { at.x + 1 } else { at.x - 1 }, at.y));
        }
        if at.y != to.y {
            steps.push(Site::new(at.x, if to.y > at.y { at.y + 1 } else { at.y - 1 }));
        }
        for next in steps {
            path.push(geom.link_between(at, next).expect("adjacent sites"));
            walk(geom, next, to, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(geom, geom.static_even(), geom.static_odd(), &mut Vec::new(), &mut out);
    out.sort();
    out
}

/// Plaquette-flip distance `k` of every minimal string from the initial one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StringOrderMap {
    pub strings: Vec<StringPath>,
    /// Parallel to `strings`; `None` for strings not connected to the
    /// initial one.
    pub order: Vec<Option<usize>>,
    pub initial: usize,
}

#[derive(Serialize)]
struct OrderEntry<'a> {
    links: &'a [usize],
    k: Option<usize>,
}

impl StringOrderMap {
    pub fn initial_path(&self) -> &StringPath {
        &self.strings[self.initial]
    }

    pub fn order_of(&self, path: &StringPath) -> Option<usize> {
        let i = self.strings.iter().position(|s| s == path)?;
        self.order[i]
    }

    pub fn max_order(&self) -> usize {
        self.order.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Indices into `strings` grouped by order `k = 0..=max_order`.
    pub fn by_order(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.max_order() + 1];
        for (i, k) in self.order.iter().enumerate() {
            if let Some(k) = k {
                out[*k].push(i);
            }
        }
        out
    }

    /// `[{"links": [...], "k": k}, ...]`.
    pub fn to_json(&self) -> String {
        let entries: Vec<OrderEntry> = self
            .strings
            .iter()
            .zip(&self.order)
            .map(|(s, &k)| OrderEntry { links: &s.links, k })
            .collect();
        serde_json::to_string_pretty(&entries).expect("order map serializes")
    }
}

/// Breadth-first distances in the graph joining minimal strings whose link
/// sets differ by exactly the four links of one plaquette.
pub fn classify_orders(geom: &LatticeGeometry, strings: &[StringPath], initial: &StringPath) -> Result<StringOrderMap> {
    if geom.qubit_count() > crate::configspace::MAX_QUBITS {
        return Err(QlmError::Geometry(format!(
            "{} qubits exceed the 64-bit configuration width",
            geom.qubit_count()
        )));
    }
    if !initial.is_minimal(geom) {
        return Err(QlmError::Path(format!(
            "initial string of length {} is not minimal",
            initial.len()
        )));
    }
    let start = strings
        .iter()
        .position(|s| s == initial)
        .ok_or_else(|| QlmError::Path("initial string is not among the minimal strings".into()))?;
    let masks: Vec<u64> = strings.iter().map(StringPath::mask).collect();
    let index: HashMap<u64, usize> = masks.iter().enumerate().map(|(i, &m)| (m, i)).collect();
    let plaq: Vec<u64> = geom
        .plaquettes()
        .iter()
        .map(|p| p.links.iter().fold(0u64, |m, &q| m | 1 << q))
        .collect();
    let mut order = vec![None; strings.len()];
    order[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        let k = order[i].expect("visited");
        for &p in &plaq {
            let m = masks[i] ^ p;
            if (m & p).count_ones() != 2 {
                continue;
            }
            if let Some(&j) = index.get(&m) {
                if order[j].is_none() {
                    order[j] = Some(k + 1);
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(StringOrderMap {
        strings: strings.to_vec(),
        order,
        initial: start,
    })
}

fn check_dim(psi: &StateVector, sector: &SectorBasis) -> Result<()> {
    if psi.dim() != sector.len() {
        return Err(QlmError::Dimension {
            expected: sector.len(),
            got: psi.dim(),
        });
    }
    Ok(())
}

/// Weight of configurations with every link of `path` in the down state,
/// irrespective of the remaining qubits.
pub fn string_probability_local(psi: &StateVector, sector: &SectorBasis, path: &StringPath) -> Result<f64> {
    check_dim(psi, sector)?;
    let m = path.mask();
    let (states, amps) = (sector.states(), psi.amplitudes());
    Ok(crate::par::sum(states.len(), |i| if states[i] & m == m { amps[i].norm_sqr() } else { 0.0 }))
}

/// `|⟨γ|ψ⟩|²` for the string-on-vacuum configuration `γ`; zero with a
/// warning when that configuration is outside the sector.
pub fn string_probability_global(psi: &StateVector, sector: &SectorBasis, path: &StringPath) -> Result<f64> {
    check_dim(psi, sector)?;
    match sector.index_of(Configuration(path.mask())) {
        Some(i) => Ok(psi.amplitudes()[i].norm_sqr()),
        None => {
            log::warn!("string configuration {:#x} is not a sector member", path.mask());
            Ok(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StringPopulations {
    pub p_init: f64,
    /// Sum of local probabilities over minimal strings other than the
    /// initial one.
    pub p_other: f64,
    /// `p_k[k]` sums local probabilities over strings of order `k`
    /// (`p_k[0] = p_init`).
    pub p_k: Vec<f64>,
}

/// Local string probabilities aggregated by order, in one pass over the
/// sector.
pub fn string_populations(psi: &StateVector, sector: &SectorBasis, map: &StringOrderMap) -> Result<StringPopulations> {
    check_dim(psi, sector)?;
    let masks: Vec<u64> = map.strings.iter().map(StringPath::mask).collect();
    let (states, amps) = (sector.states(), psi.amplitudes());
    let per_string = crate::par::sum_vec(states.len(), masks.len(), |i, acc| {
        let p = amps[i].norm_sqr();
        if p != 0.0 {
            for (s, &m) in acc.iter_mut().zip(&masks) {
                if states[i] & m == m {
                    *s += p;
                }
            }
        }
    });
    let mut p_k = vec![0.0; map.max_order() + 1];
    for (p, k) in per_string.iter().zip(&map.order) {
        if let Some(k) = k {
            p_k[*k] += p;
        }
    }
    let p_init = per_string[map.initial];
    let p_other = per_string.iter().sum::<f64>() - p_init;
    Ok(StringPopulations { p_init, p_other, p_k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::{diagonal_path, enumerate_sector, initial_string_state, MoveSet};

    fn binom(n: usize, k: usize) -> usize {
        (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
    }

    #[test]
    fn counts_are_binomial() {
        for (lx, ly) in [(5, 4), (4, 3), (3, 2), (2, 3), (5, 6)] {
            let g = LatticeGeometry::with_opposite_corners(lx, ly).unwrap();
            let d = g.static_even().manhattan(g.static_odd());
            let dx = g.static_odd().x;
            let s = enumerate_minimal_strings(&g);
            assert_eq!(s.len(), binom(d, dx), "{lx}x{ly}");
            for p in &s {
                validate_path(&g, &p.links).unwrap();
            }
        }
    }

    #[test]
    fn adjacent_corners_single_path() {
        let g = LatticeGeometry::new(2, 2, Site::new(0, 0), Site::new(1, 0)).unwrap();
        assert_eq!(enumerate_minimal_strings(&g).len(), 1);
    }

    #[test]
    fn orders_cover_and_start_at_zero() {
        let g = LatticeGeometry::with_opposite_corners(5, 4).unwrap();
        let s = enumerate_minimal_strings(&g);
        let init = StringPath::new(&g, diagonal_path(&g)).unwrap();
        let m = classify_orders(&g, &s, &init).unwrap();
        assert_eq!(m.order_of(&init), Some(0));
        assert!(m.order.iter().all(Option::is_some));
        assert_eq!(m.by_order().iter().map(Vec::len).sum::<usize>(), 35);
    }

    #[test]
    fn non_minimal_initial_rejected() {
        let g = LatticeGeometry::with_opposite_corners(3, 2).unwrap();
        let s = enumerate_minimal_strings(&g);
        let long = StringPath {
            links: vec![9, 12, 7, 8, 11],
        };
        assert!(classify_orders(&g, &s, &long).is_err());
    }

    #[test]
    fn initial_state_probabilities() {
        let g = LatticeGeometry::with_opposite_corners(4, 3).unwrap();
        let path = diagonal_path(&g);
        let (c0, _) = initial_string_state(&g, &path).unwrap();
        let sector = enumerate_sector(&g, c0, MoveSet::ALL).unwrap();
        let psi = StateVector::basis(sector.len(), sector.index_of(c0).unwrap());
        let strings = enumerate_minimal_strings(&g);
        let init = StringPath { links: path };
        let map = classify_orders(&g, &strings, &init).unwrap();
        assert_eq!(string_probability_local(&psi, &sector, &init).unwrap(), 1.0);
        assert_eq!(string_probability_global(&psi, &sector, &init).unwrap(), 1.0);
        for s in strings.iter().filter(|s| **s != init) {
            assert_eq!(string_probability_local(&psi, &sector, s).unwrap(), 0.0);
        }
        let pop = string_populations(&psi, &sector, &map).unwrap();
        assert_eq!(pop.p_init, 1.0);
        assert_eq!(pop.p_other, 0.0);
        assert!(pop.p_k[1..].iter().all(|&p| p == 0.0));
        let json: serde_json::Value = serde_json::from_str(&map.to_json()).unwrap();
        assert_eq!(json.as_array().unwrap().len(), 10);
    }
}
