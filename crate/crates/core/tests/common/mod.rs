//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use num_complex::Complex64;
use qlm::configspace::SectorBasis;
use qlm::dynamics::StateVector;
use qlm::hamiltonian::CouplingParameters;

/// Qubit numbering written out from the layout rules: matter row-major,
/// then x-links row-major, then y-links row-major.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub lx: usize,
    pub ly: usize,
}

impl Layout {
    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn matter(&self, x: usize, y: usize) -> usize {
        x + self.lx * y
    }

    pub fn xlink(&self, x: usize, y: usize) -> usize {
        assert!(x + 1 < self.lx);
        self.n_sites() + x + (self.lx - 1) * y
    }

    pub fn ylink(&self, x: usize, y: usize) -> usize {
        assert!(y + 1 < self.ly);
        self.n_sites() + (self.lx - 1) * self.ly + x + self.lx * y
    }

    pub fn n_qubits(&self) -> usize {
        self.n_sites() + (self.lx - 1) * self.ly + self.lx * (self.ly - 1)
    }

    /// Link qubit between adjacent sites.
    pub fn link(&self, a: (usize, usize), b: (usize, usize)) -> usize {
        let (lo, hi) = if (a.1, a.0) < (b.1, b.0) { (a, b) } else { (b, a) };
        if lo.1 == hi.1 {
            self.xlink(lo.0, lo.1)
        } else {
            self.ylink(lo.0, lo.1)
        }
    }
}

fn bit(c: u64, q: usize) -> bool {
    c >> q & 1 == 1
}

/// Boson occupation of a site. Odd-site qubits store the charge, i.e. the
/// absence of a boson.
fn occupation(l: &Layout, c: u64, x: usize, y: usize) -> bool {
    let b = bit(c, l.matter(x, y));
    if (x + y) % 2 == 0 {
        b
    } else {
        !b
    }
}

fn set_occupation(l: &Layout, c: u64, x: usize, y: usize, n: bool) -> u64 {
    let b = if (x + y) % 2 == 0 { n } else { !n };
    let q = l.matter(x, y);
    (c & !(1 << q)) | (u64::from(b) << q)
}

/// Link spin up is qubit 0.
fn spin_up(c: u64, q: usize) -> bool {
    !bit(c, q)
}

fn set_spin(c: u64, q: usize, up: bool) -> u64 {
    (c & !(1 << q)) | (u64::from(!up) << q)
}

/// `(H|c⟩)` as a list of `(target, amplitude)`, built by applying the
/// ladder operators of every term to the basis state.
pub fn apply_hamiltonian(l: &Layout, p: &CouplingParameters, c: u64) -> Vec<(u64, f64)> {
    let mut out = Vec::new();
    let mut diag = 0.0;
    for y in 0..l.ly {
        for x in 0..l.lx {
            let s = if (x + y) % 2 == 0 { 1.0 } else { -1.0 };
            if occupation(l, c, x, y) {
                diag += p.mass * s;
            }
        }
    }
    for q in l.n_sites()..l.n_qubits() {
        diag -= p.efield * if spin_up(c, q) { 0.5 } else { -0.5 };
    }
    out.push((c, diag));
    let mut hop = |a: (usize, usize), b: (usize, usize), q: usize, s: f64| {
        // φ†_a S⁺ φ_b
        if !occupation(l, c, a.0, a.1) && !spin_up(c, q) && occupation(l, c, b.0, b.1) {
            let t = set_occupation(l, c, b.0, b.1, false);
            let t = set_occupation(l, t, a.0, a.1, true);
            out.push((set_spin(t, q, true), -p.kappa * s));
        }
        // φ†_b S⁻ φ_a
        if occupation(l, c, a.0, a.1) && spin_up(c, q) && !occupation(l, c, b.0, b.1) {
            let t = set_occupation(l, c, a.0, a.1, false);
            let t = set_occupation(l, t, b.0, b.1, true);
            out.push((set_spin(t, q, false), -p.kappa * s));
        }
    };
    for y in 0..l.ly {
        for x in 0..l.lx {
            if x + 1 < l.lx {
                hop((x, y), (x + 1, y), l.xlink(x, y), 1.0);
            }
            if y + 1 < l.ly {
                let s = if x % 2 == 0 { 1.0 } else { -1.0 };
                hop((x, y), (x, y + 1), l.ylink(x, y), s);
            }
        }
    }
    if p.plaq != 0.0 {
        for y in 0..l.ly - 1 {
            for x in 0..l.lx - 1 {
                let (b, r, t, lf) = (l.xlink(x, y), l.ylink(x + 1, y), l.xlink(x, y + 1), l.ylink(x, y));
                // U = S⁺_b S⁺_r S⁻_t S⁻_l
                if !spin_up(c, b) && !spin_up(c, r) && spin_up(c, t) && spin_up(c, lf) {
                    let n = set_spin(set_spin(set_spin(set_spin(c, b, true), r, true), t, false), lf, false);
                    out.push((n, p.plaq));
                }
                if spin_up(c, b) && spin_up(c, r) && !spin_up(c, t) && !spin_up(c, lf) {
                    let n = set_spin(set_spin(set_spin(set_spin(c, b, false), r, false), t, true), lf, true);
                    out.push((n, p.plaq));
                }
            }
        }
    }
    out
}

/// Reference matrix rows on the sector basis, `None` if some target
/// leaves the sector.
pub fn oracle_rows(l: &Layout, p: &CouplingParameters, sector: &SectorBasis) -> Option<Vec<HashMap<usize, f64>>> {
    let index: HashMap<u64, usize> = sector.states().iter().enumerate().map(|(i, &s)| (s, i)).collect();
    sector
        .states()
        .iter()
        .map(|&c| {
            let mut row = HashMap::new();
            for (t, a) in apply_hamiltonian(l, p, c) {
                if a != 0.0 || t == c {
                    *row.entry(*index.get(&t)?).or_insert(0.0) += a;
                }
            }
            Some(row)
        })
        .collect()
}

/// Constant the primary Hamiltonian drops from the mass term.
pub fn mass_offset(l: &Layout, p: &CouplingParameters) -> f64 {
    let odd = (0..l.ly)
        .flat_map(|y| (0..l.lx).map(move |x| (x, y)))
        .filter(|(x, y)| (x + y) % 2 == 1)
        .count();
    p.mass * odd as f64
}

/// Every shortest lattice walk between two sites, as sorted link sets.
pub fn minimal_paths(l: &Layout, from: (usize, usize), to: (usize, usize)) -> BTreeSet<Vec<usize>> {
    let d = from.0.abs_diff(to.0) + from.1.abs_diff(to.1);
    let mut out = BTreeSet::new();
    let total = 4usize.pow(d as u32);
    'walks: for code in 0..total {
        let mut at = (from.0 as i64, from.1 as i64);
        let mut seen = vec![at];
        let mut links = Vec::with_capacity(d);
        let mut c = code;
        for _ in 0..d {
            let step = [(1, 0), (-1, 0), (0, 1), (0, -1)][c % 4];
            c /= 4;
            let next = (at.0 + step.0, at.1 + step.1);
            if next.0 < 0 || next.1 < 0 || next.0 >= l.lx as i64 || next.1 >= l.ly as i64 || seen.contains(&next) {
                continue 'walks;
            }
            links.push(l.link(
                (at.0 as usize, at.1 as usize),
                (next.0 as usize, next.1 as usize),
            ));
            seen.push(next);
            at = next;
        }
        if at == (to.0 as i64, to.1 as i64) {
            links.sort_unstable();
            out.insert(links);
        }
    }
    out
}

/// `exp(−iHt)ψ` by a Taylor series on substeps of at most `0.02`, with
/// `H` given as sparse rows.
pub fn taylor_evolve(rows: &[HashMap<usize, f64>], psi: &[Complex64], t: f64) -> Vec<Complex64> {
    let n_sub = (t / 0.02).ceil().max(1.0) as usize;
    let tau = t / n_sub as f64;
    let mut v = psi.to_vec();
    for _ in 0..n_sub {
        let mut term = v.clone();
        for k in 1..40 {
            let mut next = vec![Complex64::new(0.0, 0.0); term.len()];
            for (i, row) in rows.iter().enumerate() {
                for (&j, &a) in row {
                    next[i] += a * term[j];
                }
            }
            let f = Complex64::new(0.0, -tau / k as f64);
            term = next.into_iter().map(|x| x * f).collect();
            for (a, b) in v.iter_mut().zip(&term) {
                *a += b;
            }
        }
    }
    v
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

pub fn state_error(a: &StateVector, b: &StateVector) -> f64 {
    a.distance(b)
}
