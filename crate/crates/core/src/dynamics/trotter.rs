//! First-order Trotter step: four entangling sublayers, then the
//! electric-field phase, then the mass phase.

use num_complex::Complex64;
use rayon::prelude::*;

use super::schedule::SublayerSchedule;
use super::state::StateVector;
use crate::configspace::{compile_move, Move, SectorBasis};
use crate::error::{QlmError, Result};
use crate::hamiltonian::{efield_energy, hopping_amplitude, mass_energy, CouplingParameters};
use crate::lattice::LatticeGeometry;

/// Connected index pairs of one term with its exact two-level rotation.
#[derive(Debug, Clone)]
struct TermRotation {
    mv: Move,
    pairs: Vec<(u32, u32)>,
    cos: f64,
    /// `−i·sin(|a|Δt)·sign(a)`.
    off: Complex64,
}

/// Precomputed Trotter step on a fixed sector.
#[derive(Debug, Clone)]
pub struct TrotterEngine {
    dim: usize,
    dt: f64,
    sublayers: Vec<Vec<TermRotation>>,
    efield_phase: Vec<Complex64>,
    mass_phase: Vec<Complex64>,
}

fn term_amplitude(geom: &LatticeGeometry, mv: Move, params: &CouplingParameters) -> f64 {
    match mv {
        Move::Hopping(i) => hopping_amplitude(geom, i, params.kappa),
        Move::Plaquette(_) => params.plaq,
    }
}

impl TrotterEngine {
    pub fn new(
        geom: &LatticeGeometry,
        sector: &SectorBasis,
        schedule: &SublayerSchedule,
        params: &CouplingParameters,
        dt: f64,
    ) -> Result<Self> {
        schedule.validate(geom)?;
        let sublayers = schedule
            .sublayers
            .iter()
            .map(|layer| {
                layer
                    .par_iter()
                    .filter(|&&mv| term_amplitude(geom, mv, params) != 0.0 && dt != 0.0)
                    .map(|&mv| {
                        let a = term_amplitude(geom, mv, params);
                        let cm = compile_move(geom, mv)?;
                        let mut pairs = Vec::new();
                        for (i, c) in sector.iter().enumerate() {
                            if c.0 & cm.mask != cm.pattern {
                                continue;
                            }
                            let t = cm.apply(c).expect("pattern matched");
                            let j = sector.index_of(t).ok_or_else(|| QlmError::NotClosed {
                                config: c.0,
                                term: format!("{mv:?}"),
                            })?;
                            pairs.push((i as u32, j as u32));
                        }
                        let th = a.abs() * dt;
                        Ok(TermRotation {
                            mv,
                            pairs,
                            cos: th.cos(),
                            off: Complex64::new(0.0, -th.sin() * a.signum()),
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let phases = |f: &(dyn Fn(crate::configspace::Configuration) -> f64 + Sync)| -> Vec<Complex64> {
            sector
                .states()
                .par_iter()
                .map(|&c| Complex64::from_polar(1.0, -f(crate::configspace::Configuration(c)) * dt))
                .collect()
        };
        let efield_phase = phases(&|c| efield_energy(geom, c, params.efield));
        let mass_phase = phases(&|c| mass_energy(geom, c, params.mass));
        Ok(Self {
            dim: sector.len(),
            dt,
            sublayers,
            efield_phase,
            mass_phase,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of connected pairs of each scheduled term (zero-coupling terms
    /// are omitted).
    pub fn pair_counts(&self) -> Vec<(Move, usize)> {
        self.sublayers
            .iter()
            .flatten()
            .map(|r| (r.mv, r.pairs.len()))
            .collect()
    }

    fn rotate(amps: &mut [Complex64], r: &TermRotation) {
        for &(i, j) in &r.pairs {
            let (i, j) = (i as usize, j as usize);
            let (a, b) = (amps[i], amps[j]);
            amps[i] = a * r.cos + b * r.off;
            amps[j] = b * r.cos + a * r.off;
        }
    }

    /// Applies one entangling sublayer in place.
    pub fn apply_sublayer(&self, k: usize, psi: &mut StateVector) {
        for r in &self.sublayers[k] {
            Self::rotate(psi.amplitudes_mut(), r);
        }
    }

    /// Applies one sublayer with its terms in the given order (a permutation
    /// of the scheduled order).
    pub fn apply_sublayer_permuted(&self, k: usize, order: &[usize], psi: &mut StateVector) {
        for &o in order {
            Self::rotate(psi.amplitudes_mut(), &self.sublayers[k][o]);
        }
    }

    pub fn sublayer_len(&self, k: usize) -> usize {
        self.sublayers[k].len()
    }

    pub fn apply_efield(&self, psi: &mut StateVector) {
        psi.amplitudes_mut()
            .par_iter_mut()
            .zip(&self.efield_phase)
            .for_each(|(a, p)| *a *= p);
    }

    pub fn apply_mass(&self, psi: &mut StateVector) {
        psi.amplitudes_mut()
            .par_iter_mut()
            .zip(&self.mass_phase)
            .for_each(|(a, p)| *a *= p);
    }

    /// One full step in place.
    pub fn step(&self, psi: &mut StateVector) -> Result<()> {
        if psi.dim() != self.dim {
            return Err(QlmError::Dimension {
                expected: self.dim,
                got: psi.dim(),
            });
        }
        for k in 0..self.sublayers.len() {
            self.apply_sublayer(k, psi);
        }
        self.apply_efield(psi);
        self.apply_mass(psi);
        Ok(())
    }
}

/// Convenience wrapper building a one-off engine.
pub fn trotter_step(
    geom: &LatticeGeometry,
    schedule: &SublayerSchedule,
    sector: &SectorBasis,
    params: &CouplingParameters,
    dt: f64,
    psi: &StateVector,
) -> Result<StateVector> {
    let engine = TrotterEngine::new(geom, sector, schedule, params, dt)?;
    let mut out = psi.clone();
    engine.step(&mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configspace::{diagonal_path, enumerate_sector, initial_string_state, MoveSet};
    use crate::dynamics::schedule::schedule_sublayers;

    fn setup(lx: usize, ly: usize) -> (LatticeGeometry, SectorBasis, SublayerSchedule, usize) {
        let g = LatticeGeometry::with_opposite_corners(lx, ly).unwrap();
        let (seed, _) = initial_string_state(&g, &diagonal_path(&g)).unwrap();
        let s = enumerate_sector(&g, seed, MoveSet::ALL).unwrap();
        let sch = schedule_sublayers(&g).unwrap();
        let i = s.index_of(seed).unwrap();
        (g, s, sch, i)
    }

    #[test]
    fn zero_step_is_identity() {
        let (g, s, sch, i) = setup(3, 2);
        let psi = StateVector::basis(s.len(), i);
        let p = CouplingParameters::new(1.0, 3.0, 6.0, 2.0);
        let out = trotter_step(&g, &sch, &s, &p, 0.0, &psi).unwrap();
        assert_eq!(out, psi);
    }

    #[test]
    fn norm_preserved() {
        let (g, s, sch, i) = setup(4, 3);
        let p = CouplingParameters::new(1.0, 3.0, 6.0, 2.0);
        let e = TrotterEngine::new(&g, &s, &sch, &p, 0.1).unwrap();
        let mut psi = StateVector::basis(s.len(), i);
        for _ in 0..10 {
            e.step(&mut psi).unwrap();
            assert!((psi.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn every_pair_is_counted_once() {
        let (g, s, sch, _) = setup(3, 2);
        let p = CouplingParameters::new(1.0, 0.0, 0.0, 1.0);
        let e = TrotterEngine::new(&g, &s, &sch, &p, 0.1).unwrap();
        let h = crate::hamiltonian::build_hamiltonian(&g, &s, &p).unwrap();
        let offdiag = h.nnz() - s.len();
        let pairs: usize = e.pair_counts().iter().map(|x| x.1).sum();
        assert_eq!(2 * pairs, offdiag);
    }
}
