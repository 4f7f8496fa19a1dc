//! Sector-restricted sparse operators for the four Hamiltonian terms.
//!
//! Every matrix element of this model is real, so values are stored as
//! `f64`; matrix-vector products act on complex state vectors.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::configspace::{compile_move, Configuration, Move, SectorBasis};
use crate::error::{QlmError, Result};
use crate::lattice::LatticeGeometry;

/// Couplings `(κ, m, g, J)`. Time is measured in units of `1/κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParameters {
    pub kappa: f64,
    pub mass: f64,
    pub efield: f64,
    pub plaq: f64,
}

impl CouplingParameters {
    pub const fn new(kappa: f64, mass: f64, efield: f64, plaq: f64) -> Self {
        Self {
            kappa,
            mass,
            efield,
            plaq,
        }
    }

    /// Coupling of a single term with the others zeroed.
    pub fn only(term: Term, value: f64) -> Self {
        let mut p = Self::new(0.0, 0.0, 0.0, 0.0);
        match term {
            Term::Hopping => p.kappa = value,
            Term::Mass => p.mass = value,
            Term::Efield => p.efield = value,
            Term::Plaquette => p.plaq = value,
        }
        p
    }

    pub fn weight(&self, term: Term) -> f64 {
        match term {
            Term::Hopping => self.kappa,
            Term::Mass => self.mass,
            Term::Efield => self.efield,
            Term::Plaquette => self.plaq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Term {
    Hopping,
    Mass,
    Efield,
    Plaquette,
}

impl Term {
    pub const ALL: [Term; 4] = [Term::Hopping, Term::Mass, Term::Efield, Term::Plaquette];
}

/// Amplitude of the hopping term across link `link_index` (`-κ·s_{j,e_μ}`).
pub fn hopping_amplitude(geom: &LatticeGeometry, link_index: usize, kappa: f64) -> f64 {
    let l = &geom.links()[link_index];
    -kappa * f64::from(geom.staggering(l.site, Some(l.dir)))
}

/// `m · (number of excitations)`; the staggered constant is dropped.
pub fn mass_energy(geom: &LatticeGeometry, c: Configuration, mass: f64) -> f64 {
    let matter_mask = (1u64 << geom.n_sites()) - 1;
    mass * f64::from((c.0 & matter_mask).count_ones())
}

/// `-g · Σ_links S^z`.
pub fn efield_energy(geom: &LatticeGeometry, c: Configuration, g: f64) -> f64 {
    let n_links = geom.n_links() as u32;
    let down = (c.0 >> geom.n_sites()).count_ones();
    -g * 0.5 * (f64::from(n_links) - 2.0 * f64::from(down))
}

/// Compressed-sparse-row operator on a sector basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    hermitian: bool,
}

impl SparseOperator {
    /// Assembles from per-row entry lists; entries are sorted and duplicate
    /// columns accumulated.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(u32, f64)>>, hermitian: bool) -> Self {
        assert_eq!(rows.len(), dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (c, v) in row {
                if cols.len() > start && *cols.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self {
            dim,
            row_ptr,
            cols,
            vals,
            hermitian,
        }
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self {
            dim: values.len(),
            row_ptr: (0..=values.len()).collect(),
            cols: (0..values.len() as u32).collect(),
            vals: values.to_vec(),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_flagged_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().map(|&c| c as usize).zip(self.vals[r].iter().copied())
    }

    pub fn max_row_degree(&self) -> usize {
        self.row_ptr.windows(2).map(|w| w[1] - w[0]).max().unwrap_or(0)
    }

    /// Matrix element `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal_values(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    /// Exact symmetry check (real entries, so Hermitian ⇔ symmetric).
    pub fn is_hermitian(&self) -> bool {
        (0..self.dim).into_par_iter().all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    /// `y = A x`, parallel over rows.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        y.par_iter_mut().with_min_len(1024).enumerate().for_each(|(i, yi)| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k] as usize] * self.vals[k];
            }
            *yi = acc;
        });
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim];
        self.matvec(x, &mut y);
        y
    }

    /// `⟨x|A|x⟩` (real for Hermitian `A`).
    pub fn expectation(&self, x: &[Complex64]) -> f64 {
        crate::par::sum(self.dim, |i| {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += x[self.cols[k] as usize] * self.vals[k];
            }
            (x[i].conj() * acc).re
        })
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] += v;
            }
        }
        m
    }

    /// Entrywise linear combination `Σ c_k A_k` over operators of equal
    /// dimension.
    pub fn linear_combination(terms: &[(f64, &SparseOperator)]) -> Self {
        let dim = terms.first().map_or(0, |t| t.1.dim);
        let rows = (0..dim)
            .map(|i| {
                terms
                    .iter()
                    .flat_map(|(c, op)| op.row(i).map(move |(j, v)| (j as u32, c * v)))
                    .collect()
            })
            .collect();
        let hermitian = terms.iter().all(|t| t.1.hermitian);
        Self::from_rows(dim, rows, hermitian)
    }

    /// Order-sensitive digest of the sparsity pattern and values.
    pub fn checksum(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update((self.dim as u64).to_le_bytes());
        for p in &self.row_ptr {
            h.update((*p as u64).to_le_bytes());
        }
        for c in &self.cols {
            h.update(c.to_le_bytes());
        }
        for v in &self.vals {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    pub fn dump(&self) -> OperatorDump {
        OperatorDump {
            dim: self.dim,
            nnz: self.nnz(),
            max_row_degree: self.max_row_degree(),
            hermitian: self.hermitian,
            checksum: self.checksum(),
        }
    }
}

/// JSON regression record for an assembled operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorDump {
    pub dim: usize,
    pub nnz: usize,
    pub max_row_degree: usize,
    pub hermitian: bool,
    pub checksum: String,
}

fn build_weighted(
    geom: &LatticeGeometry,
    sector: &SectorBasis,
    params: &CouplingParameters,
    terms: &[Term],
) -> Result<SparseOperator> {
    let with = |t: Term| terms.contains(&t);
    let mut moves = Vec::new();
    if with(Term::Hopping) {
        for i in 0..geom.n_links() {
            let cm = compile_move(geom, Move::Hopping(i))?;
            moves.push((cm, hopping_amplitude(geom, i, params.kappa), "hopping"));
        }
    }
    if with(Term::Plaquette) {
        for i in 0..geom.plaquettes().len() {
            moves.push((compile_move(geom, Move::Plaquette(i))?, params.plaq, "plaquette"));
        }
    }
    let diag = with(Term::Mass) || with(Term::Efield);
    let rows: Vec<Vec<(u32, f64)>> = (0..sector.len())
        .into_par_iter()
        .with_min_len(256)
        .map(|i| {
            let c = sector.state(i);
            let mut row = Vec::with_capacity(1 + moves.len());
            if diag {
                let mut d = 0.0;
                if with(Term::Mass) {
                    d += mass_energy(geom, c, params.mass);
                }
                if with(Term::Efield) {
                    d += efield_energy(geom, c, params.efield);
                }
                row.push((i as u32, d));
            }
            for (m, amp, name) in &moves {
                if let Some(t) = m.apply(c) {
                    let j = sector.index_of(t).ok_or_else(|| QlmError::NotClosed {
                        config: c.0,
                        term: format!("{name} {:?}", m.mv),
                    })?;
                    row.push((j as u32, *amp));
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(SparseOperator::from_rows(sector.len(), rows, true))
}

/// Sector-restricted matrix of one Hamiltonian term.
pub fn build_term(
    geom: &LatticeGeometry,
    sector: &SectorBasis,
    term: Term,
    params: &CouplingParameters,
) -> Result<SparseOperator> {
    build_weighted(geom, sector, params, &[term])
}

/// `H_κ + H_m + H_E + H_□`. A term whose coupling is exactly zero is left
/// out of the sparsity pattern; the diagonal is always stored.
pub fn build_hamiltonian(
    geom: &LatticeGeometry,
    sector: &SectorBasis,
    params: &CouplingParameters,
) -> Result<SparseOperator> {
    let mut terms = vec![Term::Mass, Term::Efield];
    if params.kappa != 0.0 {
        terms.push(Term::Hopping);
    }
    if params.plaq != 0.0 {
        terms.push(Term::Plaquette);
    }
    build_weighted(geom, sector, params, &terms)
}

/// Diagonal operator of `G_j` for one site.
pub fn gauss_operator(geom: &LatticeGeometry, sector: &SectorBasis, site_index: usize) -> SparseOperator {
    let vals: Vec<f64> = sector
        .iter()
        .map(|c| crate::configspace::gauss_residuals(geom, c).value(site_index))
        .collect();
    SparseOperator::diagonal(&vals)
}

/// Outcome of the resonance test `2m = ℓg`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "order")]
pub enum Resonance {
    /// Resonant with an odd string segment of this many links.
    Order(u32),
    OffResonant,
    /// `g = 0`: no string tension.
    NoStringTension,
}

impl Resonance {
    pub fn order(self) -> Option<u32> {
        match self {
            Resonance::Order(l) => Some(l),
            _ => None,
        }
    }
}

/// `ℓ = 2m/g` when it is a positive odd integer (within `1e-9` relative).
pub fn resonance_order(params: &CouplingParameters) -> Resonance {
    if params.efield == 0.0 {
        return Resonance::NoStringTension;
    }
    let ratio = 2.0 * params.mass / params.efield;
    let nearest = ratio.round();
    if nearest < 1.0 || (ratio - nearest).abs() > 1e-9 * ratio.abs().max(1.0) {
        return Resonance::OffResonant;
    }
    let l = nearest as u32;
    if l % 2 == 1 {
        Resonance::Order(l)
    } else {
        Resonance::OffResonant
    }
}

/// `(2m + g) / κ`; confinement requires this to be large.
pub fn confinement_margin(params: &CouplingParameters) -> f64 {
    (2.0 * params.mass + params.efield) / params.kappa
}
