//! Dense simulation of gate sequences: small block unitaries and full
//! register state vectors (qubit `q` is bit `q` of the basis index).

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::gate::Gate;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// 2×2 matrix of a single-qubit gate.
pub fn matrix_1q(g: &Gate) -> Option<[[Complex64; 2]; 2]> {
    let m = match *g {
        Gate::Rz { angle, .. } => {
            let p = Complex64::from_polar(1.0, -angle / 2.0);
            [[p, c(0.0)], [c(0.0), p.conj()]]
        }
        Gate::Rx { angle, .. } => {
            let (s, co) = (angle / 2.0).sin_cos();
            [[c(co), -I * s], [-I * s, c(co)]]
        }
        Gate::Ry { angle, .. } => {
            let (s, co) = (angle / 2.0).sin_cos();
            [[c(co), c(-s)], [c(s), c(co)]]
        }
        Gate::Hadamard { .. } => {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            [[c(h), c(h)], [c(h), c(-h)]]
        }
        Gate::Custom1q { matrix, .. } => matrix,
        _ => return None,
    };
    Some(m)
}

/// 4×4 matrix of a two-qubit gate in the local basis `bit(q0) + 2·bit(q1)`.
pub fn matrix_2q(g: &Gate) -> Option<[[Complex64; 4]; 4]> {
    let z = c(0.0);
    let o = c(1.0);
    let m = match g {
        Gate::Cx { .. } => [[o, z, z, z], [z, z, z, o], [z, z, o, z], [z, o, z, z]],
        Gate::Rzz { angle, .. } => {
            let p = Complex64::from_polar(1.0, -angle / 2.0);
            let mut m = [[z; 4]; 4];
            for (k, row) in m.iter_mut().enumerate() {
                row[k] = if k == 0 || k == 3 { p } else { p.conj() };
            }
            m
        }
        Gate::Custom2q { matrix, .. } => **matrix,
        _ => return None,
    };
    Some(m)
}

/// Applies `g` in place to a register of `log2(amps.len())` qubits.
pub fn apply_gate(amps: &mut [Complex64], g: &Gate) {
    match *g {
        Gate::Rz { qubit, angle } => {
            let p = Complex64::from_polar(1.0, -angle / 2.0);
            let (p0, p1) = (p, p.conj());
            for (i, a) in amps.iter_mut().enumerate() {
                *a *= if i >> qubit & 1 == 0 { p0 } else { p1 };
            }
        }
        Gate::Cx { control, target } => {
            let (cb, tb) = (1usize << control, 1usize << target);
            for i in 0..amps.len() {
                if i & cb != 0 && i & tb == 0 {
                    amps.swap(i, i | tb);
                }
            }
        }
        Gate::Rzz { qubits: [a, b], angle } => {
            let p = Complex64::from_polar(1.0, -angle / 2.0);
            for (i, x) in amps.iter_mut().enumerate() {
                let parity = (i >> a ^ i >> b) & 1;
                *x *= if parity == 0 { p } else { p.conj() };
            }
        }
        Gate::Custom2q { qubits: [a, b], .. } => {
            let m = matrix_2q(g).expect("two-qubit gate");
            let (ab, bb) = (1usize << a, 1usize << b);
            for i in 0..amps.len() {
                if i & (ab | bb) != 0 {
                    continue;
                }
                let idx = [i, i | ab, i | bb, i | ab | bb];
                let v = idx.map(|k| amps[k]);
                for (r, &k) in idx.iter().enumerate() {
                    amps[k] = (0..4).map(|s| m[r][s] * v[s]).sum();
                }
            }
        }
        _ => {
            let m = matrix_1q(g).expect("single-qubit gate");
            let qb = 1usize << g.qubits()[0];
            for i in 0..amps.len() {
                if i & qb == 0 {
                    let (x, y) = (amps[i], amps[i | qb]);
                    amps[i] = m[0][0] * x + m[0][1] * y;
                    amps[i | qb] = m[1][0] * x + m[1][1] * y;
                }
            }
        }
    }
}

/// Dense unitary of a gate sequence on `n` qubits.
pub fn block_unitary(gates: &[Gate], n: usize) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let mut u = DMatrix::zeros(dim, dim);
    let mut col = vec![Complex64::default(); dim];
    for j in 0..dim {
        col.iter_mut().for_each(|a| *a = Complex64::default());
        col[j] = c(1.0);
        for g in gates {
            apply_gate(&mut col, g);
        }
        for (i, &a) in col.iter().enumerate() {
            u[(i, j)] = a;
        }
    }
    u
}

/// Max-norm distance between two matrices after removing the best global
/// phase, fixed on the largest entry of `b`.
pub fn max_error_up_to_phase(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    let (k, _) = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm().total_cmp(&y.1.norm()))
        .expect("nonempty matrix");
    let ratio = a[k] / b[k];
    let phase = if ratio.norm() > 0.0 { ratio / ratio.norm() } else { c(1.0) };
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - phase * y).norm())
        .fold(0.0, f64::max)
}

/// Compares the unitary of `block` (local wires `0..n`, `n ≤ 4`) with
/// `exact`, up to a global phase; returns the max-norm error.
pub fn verify_block(block: &[Gate], exact: &DMatrix<Complex64>) -> f64 {
    let dim = exact.nrows();
    if !dim.is_power_of_two() || dim > 16 || exact.ncols() != dim {
        return f64::INFINITY;
    }
    let n = dim.trailing_zeros() as usize;
    if block.iter().any(|g| g.validate(n).is_err()) {
        return f64::INFINITY;
    }
    max_error_up_to_phase(&block_unitary(block, n), exact)
}

/// `exp(−iΔt·a(|u⟩⟨v| + |v⟩⟨u|))` on `n` wires with `v = u ⊕ 1…1`.
pub fn two_level_exponential(n: usize, u: usize, amp: f64, dt: f64) -> DMatrix<Complex64> {
    let dim = 1usize << n;
    let v = u ^ (dim - 1);
    let mut m = DMatrix::identity(dim, dim);
    let (s, co) = (amp * dt).sin_cos();
    m[(u, u)] = c(co);
    m[(v, v)] = c(co);
    m[(u, v)] = -I * s;
    m[(v, u)] = -I * s;
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_block_is_exact() {
        let id = DMatrix::<Complex64>::identity(8, 8);
        assert_eq!(verify_block(&[], &id), 0.0);
    }

    #[test]
    fn hadamard_conjugates_rz_to_rx() {
        let a = block_unitary(
            &[Gate::Hadamard { qubit: 0 }, Gate::Rz { qubit: 0, angle: 0.7 }, Gate::Hadamard { qubit: 0 }],
            1,
        );
        let b = block_unitary(&[Gate::Rx { qubit: 0, angle: 0.7 }], 1);
        assert!(max_error_up_to_phase(&a, &b) < 1e-14);
    }

    #[test]
    fn rzz_equals_cx_rz_cx() {
        let a = block_unitary(&[Gate::rzz(0, 2, 0.4).unwrap()], 3);
        let b = block_unitary(
            &[Gate::cx(0, 2).unwrap(), Gate::Rz { qubit: 2, angle: 0.4 }, Gate::cx(0, 2).unwrap()],
            3,
        );
        assert!(max_error_up_to_phase(&a, &b) < 1e-14);
    }

    #[test]
    fn custom_gates_match_builtin() {
        let cx = Gate::cx(1, 0).unwrap();
        let m = matrix_2q(&Gate::cx(0, 1).unwrap()).unwrap();
        let custom = Gate::custom2q(1, 0, m).unwrap();
        let a = block_unitary(&[cx], 2);
        let b = block_unitary(&[custom], 2);
        assert!(max_error_up_to_phase(&a, &b) < 1e-15);
        let ry = Gate::Ry { qubit: 1, angle: 0.3 };
        let c1 = Gate::Custom1q {
            qubit: 1,
            matrix: matrix_1q(&ry).unwrap(),
        };
        assert!(max_error_up_to_phase(&block_unitary(&[ry], 2), &block_unitary(&[c1], 2)) < 1e-15);
    }

    #[test]
    fn global_phase_ignored_but_other_phases_not() {
        let a = block_unitary(&[Gate::Rz { qubit: 0, angle: 0.5 }], 1);
        let b = DMatrix::identity(2, 2) * Complex64::from_polar(1.0, 0.3);
        assert!(max_error_up_to_phase(&a, &b) > 0.1);
        let g = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), Complex64::from_polar(1.0, 0.5)]));
        assert!(max_error_up_to_phase(&a, &g) < 1e-15);
    }
}
