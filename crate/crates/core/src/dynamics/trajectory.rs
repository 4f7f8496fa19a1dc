//! Time series of observables along a Krylov or Trotter evolution.

use serde::{Deserialize, Serialize};

use super::krylov::{evolve_krylov_report, KrylovOptions};
use super::state::StateVector;
use super::trotter::TrotterEngine;
use crate::error::Result;
use crate::hamiltonian::SparseOperator;

/// Scalar observables recorded at every time point.
pub trait Observer: Sync {
    fn names(&self) -> Vec<String>;
    fn observe(&self, psi: &StateVector) -> Vec<f64>;
}

/// Observer backed by a closure.
pub struct FnObserver<F> {
    names: Vec<String>,
    f: F,
}

impl<F: Fn(&StateVector) -> Vec<f64> + Sync> FnObserver<F> {
    pub fn new(names: Vec<String>, f: F) -> Self {
        Self { names, f }
    }
}

impl<F: Fn(&StateVector) -> Vec<f64> + Sync> Observer for FnObserver<F> {
    fn names(&self) -> Vec<String> {
        self.names.clone()
    }

    fn observe(&self, psi: &StateVector) -> Vec<f64> {
        (self.f)(psi)
    }
}

pub enum Engine<'a> {
    /// Continuous-time evolution sampled every `dt`.
    Krylov { dt: f64, options: KrylovOptions },
    Trotter(&'a TrotterEngine),
}

impl Engine<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            Engine::Krylov { .. } => "krylov",
            Engine::Trotter(_) => "trotter",
        }
    }

    pub fn dt(&self) -> f64 {
        match self {
            Engine::Krylov { dt, .. } => *dt,
            Engine::Trotter(e) => e.dt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub step: usize,
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub engine: String,
    pub dt: f64,
    pub columns: Vec<String>,
    pub points: Vec<TimePoint>,
    /// Free-form run metadata (couplings, seed, config hash).
    pub metadata: serde_json::Value,
}

impl TimeSeries {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.points.iter().map(|p| p.values[k]).collect())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,t,norm,energy");
        for c in &self.columns {
            s.push(',');
            s.push_str(c);
        }
        s.push('\n');
        for p in &self.points {
            s.push_str(&format!("{},{:?},{:?},{:?}", p.step, p.t, p.norm, p.energy));
            for v in &p.values {
                s.push_str(&format!(",{v:?}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("time series serializes")
    }
}

/// Evolves `psi0` for `n_steps` steps of the engine, recording after
/// every step (and at `t = 0`). Returns the series and the final state.
pub fn run_trajectory(
    engine: &Engine<'_>,
    h: &SparseOperator,
    psi0: &StateVector,
    n_steps: usize,
    observers: &[&dyn Observer],
) -> Result<(TimeSeries, StateVector)> {
    run_trajectory_with(engine, h, psi0, n_steps, observers, |_, _| {})
}

/// As [`run_trajectory`], calling `hook(step, ψ)` at each recorded point.
pub fn run_trajectory_with(
    engine: &Engine<'_>,
    h: &SparseOperator,
    psi0: &StateVector,
    n_steps: usize,
    observers: &[&dyn Observer],
    mut hook: impl FnMut(usize, &StateVector),
) -> Result<(TimeSeries, StateVector)> {
    let columns: Vec<String> = observers.iter().flat_map(|o| o.names()).collect();
    let record = |step: usize, psi: &StateVector| TimePoint {
        step,
        t: step as f64 * engine.dt(),
        norm: psi.norm(),
        energy: h.expectation(psi.amplitudes()),
        values: observers.iter().flat_map(|o| o.observe(psi)).collect(),
    };
    let mut psi = psi0.clone();
    let mut points = vec![record(0, &psi)];
    hook(0, &psi);
    for step in 1..=n_steps {
        match engine {
            Engine::Krylov { dt, options } => {
                let (next, rep) = evolve_krylov_report(h, &psi, *dt, options)?;
                log::debug!("krylov step {step}: {} substeps, {} matvecs", rep.substeps, rep.matvecs);
                psi = next;
            }
            Engine::Trotter(e) => e.step(&mut psi)?,
        }
        points.push(record(step, &psi));
        hook(step, &psi);
    }
    Ok((
        TimeSeries {
            engine: engine.name().to_string(),
            dt: engine.dt(),
            columns,
            points,
            metadata: serde_json::Value::Null,
        },
        psi,
    ))
}
