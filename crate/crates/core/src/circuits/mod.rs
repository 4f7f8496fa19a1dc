//! Gate-level compilation of a Trotter step, resource accounting, dense
//! verification and shot sampling.

mod compile;
mod gate;
mod sampling;
pub mod sim;
mod templates;

pub use compile::{
    compile_trotter_step, hopping_block, parse_gates, plaquette_block, resource_report, BlockStats, CompiledStep,
    Provenance, ResourceReport, TermId, BLOCK_DEPTH_BUDGET_2Q, EFIELD_SUBLAYER, HOPPING_BUDGET_2Q, MASS_SUBLAYER,
    PLAQUETTE_BUDGET_2Q,
};
pub use gate::{Gate, GateKind};
pub use sampling::{apply_noise, expected_success, sample_shots, NoiseModel, ShotMetadata, ShotTable, SHOT_CHUNK};
pub use sim::verify_block;

#[cfg(test)]
mod tests {
    use super::sim::{two_level_exponential, verify_block};
    use super::*;
    use crate::configspace::{diagonal_path, enumerate_sector, initial_string_state, MoveSet};
    use crate::dynamics::{schedule_sublayers, trotter_step, StateVector};
    use crate::hamiltonian::CouplingParameters;
    use crate::lattice::LatticeGeometry;
    use num_complex::Complex64;

    #[test]
    fn blocks_match_two_level_rotation() {
        for &(amp, dt) in &[(1.0, 0.1), (-0.7, 0.35), (2.0, 1.3)] {
            for even in [true, false] {
                let u = if even { 0b010 } else { 0b111 };
                let err = verify_block(&hopping_block(even, amp, dt), &two_level_exponential(3, u, amp, dt));
                assert!(err < 1e-12, "hopping {err}");
            }
            let err = verify_block(&plaquette_block(amp, dt), &two_level_exponential(4, 0b0011, amp, dt));
            assert!(err < 1e-12, "plaquette {err}");
        }
    }

    #[test]
    fn block_budgets() {
        let h = hopping_block(true, 1.0, 0.1);
        assert_eq!(h.iter().filter(|g| g.is_two_qubit()).count(), 7);
        let p = plaquette_block(1.0, 0.1);
        assert_eq!(p.iter().filter(|g| g.is_two_qubit()).count(), 14);
    }

    #[test]
    fn resources_five_by_four() {
        let g = LatticeGeometry::with_opposite_corners(5, 4).unwrap();
        let s = schedule_sublayers(&g).unwrap();
        let step = compile_trotter_step(&g, &s, &CouplingParameters::new(1.0, 3.0, 6.0, 2.0), 0.1).unwrap();
        step.validate().unwrap();
        let r = resource_report(&step);
        assert_eq!((r.n_qubits, r.n2q, r.depth2q), (51, 385, 28));
        assert!(r.deviations.is_empty());
    }

    #[test]
    fn resources_four_by_three_without_plaquettes() {
        let g = LatticeGeometry::with_opposite_corners(4, 3).unwrap();
        let s = schedule_sublayers(&g).unwrap();
        let step = compile_trotter_step(&g, &s, &CouplingParameters::new(1.0, 3.0, 6.0, 0.0), 0.1).unwrap();
        let r = resource_report(&step);
        assert_eq!((r.n_qubits, r.n2q, r.depth2q), (29, 119, 28));
        assert_eq!(r.plaquette_blocks, 0);
    }

    #[test]
    fn empty_step_has_no_resources() {
        let g = LatticeGeometry::with_opposite_corners(4, 3).unwrap();
        let s = schedule_sublayers(&g).unwrap();
        let step = compile_trotter_step(&g, &s, &CouplingParameters::new(0.0, 0.0, 0.0, 0.0), 0.0).unwrap();
        let r = resource_report(&step);
        assert_eq!((r.n1q, r.n2q, r.depth2q, r.depth_total), (0, 0, 0, 0));
    }

    #[test]
    fn provenance_tracks_sublayers() {
        let g = LatticeGeometry::with_opposite_corners(3, 2).unwrap();
        let s = schedule_sublayers(&g).unwrap();
        let step = compile_trotter_step(&g, &s, &CouplingParameters::new(1.0, 0.5, 0.7, 1.1), 0.2).unwrap();
        let mut last = 0u8;
        for (k, _) in step.layers.iter().enumerate() {
            for p in step.layer_provenance(k) {
                assert!(p.sublayer >= last.min(EFIELD_SUBLAYER));
                last = last.max(p.sublayer.min(EFIELD_SUBLAYER));
            }
        }
        for (gate, p) in step.gates_with_provenance() {
            match p.term {
                TermId::Efield(i) => assert_eq!(gate.qubits(), vec![g.links()[i].qubit]),
                TermId::Mass(j) => assert_eq!(gate.qubits(), vec![j]),
                TermId::Hopping(i) => assert!(s.sublayers[p.sublayer as usize].contains(&crate::configspace::Move::Hopping(i))),
                TermId::Plaquette(i) => {
                    assert!(s.sublayers[p.sublayer as usize].contains(&crate::configspace::Move::Plaquette(i)))
                }
            }
        }
        let text = step.to_text();
        assert_eq!(parse_gates(&text).unwrap(), step.gates().cloned().collect::<Vec<_>>());
    }

    #[test]
    fn compiled_step_matches_sector_trotter_step() {
        let g = LatticeGeometry::with_opposite_corners(2, 3).unwrap();
        let s = schedule_sublayers(&g).unwrap();
        let path = diagonal_path(&g);
        let (c0, _) = initial_string_state(&g, &path).unwrap();
        let sector = enumerate_sector(&g, c0, MoveSet::ALL).unwrap();
        let params = CouplingParameters::new(1.0, 0.8, 1.3, 0.9);
        let dt = 0.37;
        let step = compile_trotter_step(&g, &s, &params, dt).unwrap();
        let n = g.qubit_count();
        let mut phase: Option<Complex64> = None;
        let mut max_err: f64 = 0.0;
        for (i, c) in sector.iter().enumerate() {
            let mut full = vec![Complex64::default(); 1 << n];
            full[c.0 as usize] = Complex64::new(1.0, 0.0);
            step.apply(&mut full).unwrap();
            let reference = trotter_step(&g, &s, &sector, &params, dt, &StateVector::basis(sector.len(), i)).unwrap();
            let r = reference.amplitudes();
            let leak: f64 = full
                .iter()
                .enumerate()
                .filter(|(k, _)| !sector.contains(crate::configspace::Configuration(*k as u64)))
                .map(|(_, a)| a.norm())
                .fold(0.0, f64::max);
            max_err = max_err.max(leak);
            for (j, cj) in sector.iter().enumerate() {
                let a = full[cj.0 as usize];
                if phase.is_none() && r[j].norm() > 0.1 {
                    phase = Some(a / r[j]);
                }
                let ph = phase.unwrap_or(Complex64::new(1.0, 0.0));
                max_err = max_err.max((a - ph * r[j]).norm());
            }
        }
        assert!(max_err < 1e-9, "{max_err}");
    }
}
