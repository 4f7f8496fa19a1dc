//! Lanczos propagator for `exp(−iHt)` on a real symmetric sparse `H`.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::StateVector;
use crate::error::{QlmError, Result};
use crate::hamiltonian::SparseOperator;

/// Complex amplitudes the Krylov basis may hold at once (256 MiB).
pub const KRYLOV_MEMORY_BUDGET: usize = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovOptions {
    /// Allowed a-posteriori error per unit time.
    pub tol: f64,
    /// Upper bound on the subspace dimension.
    pub max_dim: usize,
    /// Smallest substep before giving up.
    pub min_step: f64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_dim: 64,
            min_step: 1e-9,
        }
    }
}

impl KrylovOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }

    /// Subspace dimension actually used for a problem of size `dim`.
    pub fn effective_dim(&self, dim: usize) -> usize {
        let by_memory = (KRYLOV_MEMORY_BUDGET / dim.max(1)).max(8);
        self.max_dim.min(by_memory).min(dim).max(1)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KrylovReport {
    pub substeps: usize,
    pub matvecs: usize,
    pub max_error_estimate: f64,
    /// `|‖ψ‖ − 1|` before the final renormalization.
    pub norm_drift: f64,
}

struct Lanczos {
    basis: Vec<Vec<Complex64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    /// Norm of the residual after the last basis vector; zero on breakdown.
    residual: f64,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    crate::par::sum(a.len(), |i| a[i].conj() * b[i])
}

fn norm(a: &[Complex64]) -> f64 {
    crate::par::sum(a.len(), |i| a[i].norm_sqr()).sqrt()
}

/// `exp(−i T τ) e₁` for the tridiagonal `T = tri(β, α, β)`.
fn small_propagator(alpha: &[f64], beta: &[f64], tau: f64) -> Vec<Complex64> {
    let m = alpha.len();
    let mut t = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alpha[i];
        if i + 1 < m {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let q = &eig.eigenvectors;
    (0..m)
        .map(|r| {
            (0..m)
                .map(|k| {
                    let ph = Complex64::from_polar(1.0, -eig.eigenvalues[k] * tau);
                    ph * q[(r, k)] * q[(0, k)]
                })
                .sum()
        })
        .collect()
}

impl Lanczos {
    fn start(v0: &[Complex64]) -> Self {
        let n = norm(v0);
        Self {
            basis: vec![v0.par_iter().map(|x| x / n).collect()],
            alpha: Vec::new(),
            beta: Vec::new(),
            residual: f64::INFINITY,
        }
    }

    /// Adds one vector; returns false on breakdown (invariant subspace).
    fn extend(&mut self, h: &SparseOperator, w: &mut [Complex64]) -> bool {
        let j = self.basis.len() - 1;
        h.matvec(&self.basis[j], w);
        let a = dot(&self.basis[j], w).re;
        self.alpha.push(a);
        // Full reorthogonalization, applied twice for stability.
        for _ in 0..2 {
            for v in &self.basis {
                let c = dot(v, w);
                w.par_iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = norm(w);
        self.residual = b;
        let scale = h_scale(&self.alpha, &self.beta);
        if b <= 1e-13 * scale.max(1.0) {
            self.residual = 0.0;
            return false;
        }
        self.beta.push(b);
        self.basis.push(w.par_iter().map(|x| x / b).collect());
        true
    }

    /// Error estimate `β_m |[exp(−iT τ)e₁]_m|` and the small propagator.
    fn estimate(&self, tau: f64) -> (f64, Vec<Complex64>) {
        let m = self.alpha.len();
        let y = small_propagator(&self.alpha, &self.beta[..m - 1], tau);
        (self.residual * y[m - 1].norm(), y)
    }

    fn combine(&self, y: &[Complex64], out: &mut [Complex64]) {
        out.par_iter_mut().enumerate().for_each(|(i, o)| {
            *o = y.iter().zip(&self.basis).map(|(c, v)| c * v[i]).sum();
        });
    }
}

fn h_scale(alpha: &[f64], beta: &[f64]) -> f64 {
    alpha.iter().chain(beta).fold(0.0f64, |m, x| m.max(x.abs()))
}

/// `ψ(t) = exp(−iHt) ψ₀` with adaptive substeps.
pub fn evolve_krylov(h: &SparseOperator, psi0: &StateVector, t: f64, opts: &KrylovOptions) -> Result<StateVector> {
    evolve_krylov_report(h, psi0, t, opts).map(|(s, _)| s)
}

pub fn evolve_krylov_report(
    h: &SparseOperator,
    psi0: &StateVector,
    t: f64,
    opts: &KrylovOptions,
) -> Result<(StateVector, KrylovReport)> {
    if psi0.dim() != h.dim() {
        return Err(QlmError::Dimension {
            expected: h.dim(),
            got: psi0.dim(),
        });
    }
    if t < 0.0 || !t.is_finite() {
        return Err(QlmError::Config(format!("evolution time must be finite and ≥ 0, got {t}")));
    }
    let n0 = psi0.norm();
    if (n0 - 1.0).abs() > 1e-10 {
        return Err(QlmError::NotNormalized(n0));
    }
    let mut report = KrylovReport::default();
    let mut psi: Vec<Complex64> = psi0.amplitudes().to_vec();
    if t == 0.0 {
        return Ok((psi0.clone(), report));
    }
    let m_max = opts.effective_dim(h.dim());
    let mut w = vec![Complex64::new(0.0, 0.0); h.dim()];
    let mut remaining = t;
    let mut tau = t;
    while remaining > 0.0 {
        tau = tau.min(remaining);
        let mut lz = Lanczos::start(&psi);
        let mut accepted: Option<(f64, Vec<Complex64>)> = None;
        loop {
            let more = lz.extend(h, &mut w);
            report.matvecs += 1;
            let (err, y) = lz.estimate(tau);
            if !more || err <= opts.tol * tau {
                accepted = Some((err, y));
                break;
            }
            if lz.alpha.len() >= m_max {
                break;
            }
        }
        if accepted.is_none() {
            // Basis is full: shrink the step on the existing subspace.
            let mut s = tau;
            while s >= opts.min_step {
                s *= 0.5;
                let (err, y) = lz.estimate(s);
                if err <= opts.tol * s {
                    tau = s;
                    accepted = Some((err, y));
                    break;
                }
            }
        }
        let Some((err, y)) = accepted else {
            let (err, _) = lz.estimate(opts.min_step);
            return Err(QlmError::KrylovNonConvergence {
                residual: err / opts.min_step,
                tol: opts.tol,
            });
        };
        lz.combine(&y, &mut psi);
        report.substeps += 1;
        report.max_error_estimate = report.max_error_estimate.max(err);
        remaining -= tau;
        if remaining < 1e-15 * t {
            remaining = 0.0;
        }
        if lz.alpha.len() < m_max / 2 {
            tau *= 2.0;
        }
    }
    let mut out = StateVector::from_raw(psi);
    let n = out.norm();
    report.norm_drift = (n - 1.0).abs();
    if report.norm_drift > 1e-10 {
        return Err(QlmError::NotNormalized(n));
    }
    out.scale(1.0 / n);
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_symmetric(n: usize, seed: u64) -> SparseOperator {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            rows[i].push((i as u32, rng.gen_range(-3.0..3.0)));
            for _ in 0..3 {
                let j = rng.gen_range(0..n);
                if j != i {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    rows[i].push((j as u32, v));
                    rows[j].push((i as u32, v));
                }
            }
        }
        SparseOperator::from_rows(n, rows, true)
    }

    fn dense_evolve(h: &SparseOperator, psi: &StateVector, t: f64) -> Vec<Complex64> {
        let eig = SymmetricEigen::new(h.to_dense());
        let n = h.dim();
        let q = &eig.eigenvectors;
        let coeff: Vec<Complex64> = (0..n)
            .map(|k| (0..n).map(|i| q[(i, k)] * psi.amplitudes()[i]).sum::<Complex64>())
            .collect();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| coeff[k] * q[(i, k)] * Complex64::from_polar(1.0, -eig.eigenvalues[k] * t))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn zero_time_is_identity() {
        let h = random_symmetric(30, 1);
        let psi = StateVector::basis(30, 3);
        assert_eq!(evolve_krylov(&h, &psi, 0.0, &KrylovOptions::default()).unwrap(), psi);
    }

    #[test]
    fn diagonal_phases() {
        let d: Vec<f64> = (0..10).map(|i| i as f64 * 0.7 - 2.0).collect();
        let h = SparseOperator::diagonal(&d);
        let amps: Vec<Complex64> = (0..10).map(|i| Complex64::new(1.0 + i as f64, 0.5)).collect();
        let psi = StateVector::normalized(amps).unwrap();
        let out = evolve_krylov(&h, &psi, 1.3, &KrylovOptions::default()).unwrap();
        for i in 0..10 {
            let want = psi.amplitudes()[i] * Complex64::from_polar(1.0, -d[i] * 1.3);
            assert!((out.amplitudes()[i] - want).norm() < 1e-11);
        }
    }

    #[test]
    fn matches_dense_with_substeps() {
        let h = random_symmetric(200, 7);
        let psi = StateVector::basis(200, 0);
        let opts = KrylovOptions {
            max_dim: 12,
            ..KrylovOptions::default()
        };
        let (out, rep) = evolve_krylov_report(&h, &psi, 5.0, &opts).unwrap();
        assert!(rep.substeps > 1);
        let want = dense_evolve(&h, &psi, 5.0);
        let err = out
            .amplitudes()
            .iter()
            .zip(&want)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "err {err}");
    }

    #[test]
    fn rejects_unnormalized_and_negative_time() {
        let h = random_symmetric(5, 2);
        let bad = StateVector::from_raw(vec![Complex64::new(2.0, 0.0); 5]);
        assert!(evolve_krylov(&h, &bad, 1.0, &KrylovOptions::default()).is_err());
        let psi = StateVector::basis(5, 0);
        assert!(evolve_krylov(&h, &psi, -1.0, &KrylovOptions::default()).is_err());
    }

    #[test]
    fn tiny_dimension_breakdown_is_exact() {
        let h = SparseOperator::from_rows(2, vec![vec![(1, 1.0)], vec![(0, 1.0)]], true);
        let psi = StateVector::basis(2, 0);
        let out = evolve_krylov(&h, &psi, 0.4, &KrylovOptions::default()).unwrap();
        assert!((out.amplitudes()[0].re - 0.4f64.cos()).abs() < 1e-14);
        assert!((out.amplitudes()[1].im + 0.4f64.sin()).abs() < 1e-14);
    }
}
