//! Gate set and line-oriented text form.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QlmError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    Rz,
    Rx,
    Ry,
    Hadamard,
    Cx,
    Rzz,
    Custom1q,
    Custom2q,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::Rz => "rz",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Hadamard => "hadamard",
            GateKind::Cx => "cx",
            GateKind::Rzz => "rzz",
            GateKind::Custom1q => "custom-1q",
            GateKind::Custom2q => "custom-2q",
        }
    }

    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateKind::Cx | GateKind::Rzz | GateKind::Custom2q)
    }
}

/// One gate on global qubit indices.
///
/// `rz(φ) = exp(−iφZ/2)`, `rx`, `ry` likewise, `rzz(φ) = exp(−iφ Z⊗Z/2)`.
/// Custom matrices are row-major; for two-qubit gates the local basis index
/// is `bit(q0) + 2·bit(q1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Gate {
    Rz { qubit: usize, angle: f64 },
    Rx { qubit: usize, angle: f64 },
    Ry { qubit: usize, angle: f64 },
    Hadamard { qubit: usize },
    Cx { control: usize, target: usize },
    Rzz { qubits: [usize; 2], angle: f64 },
    Custom1q { qubit: usize, matrix: [[Complex64; 2]; 2] },
    Custom2q { qubits: [usize; 2], matrix: Box<[[Complex64; 4]; 4]> },
}

fn distinct(a: usize, b: usize) -> Result<()> {
    if a == b {
        Err(QlmError::Config(format!("two-qubit gate on repeated qubit {a}")))
    } else {
        Ok(())
    }
}

impl Gate {
    pub fn cx(control: usize, target: usize) -> Result<Self> {
        distinct(control, target)?;
        Ok(Gate::Cx { control, target })
    }

    pub fn rzz(a: usize, b: usize, angle: f64) -> Result<Self> {
        distinct(a, b)?;
        Ok(Gate::Rzz { qubits: [a, b], angle })
    }

    pub fn custom2q(a: usize, b: usize, matrix: [[Complex64; 4]; 4]) -> Result<Self> {
        distinct(a, b)?;
        Ok(Gate::Custom2q {
            qubits: [a, b],
            matrix: Box::new(matrix),
        })
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rz { .. } => GateKind::Rz,
            Gate::Rx { .. } => GateKind::Rx,
            Gate::Ry { .. } => GateKind::Ry,
            Gate::Hadamard { .. } => GateKind::Hadamard,
            Gate::Cx { .. } => GateKind::Cx,
            Gate::Rzz { .. } => GateKind::Rzz,
            Gate::Custom1q { .. } => GateKind::Custom1q,
            Gate::Custom2q { .. } => GateKind::Custom2q,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.kind().is_two_qubit()
    }

    /// Qubits in canonical order (control first for `cx`).
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rz { qubit, .. }
            | Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Hadamard { qubit }
            | Gate::Custom1q { qubit, .. } => vec![qubit],
            Gate::Cx { control, target } => vec![control, target],
            Gate::Rzz { qubits, .. } | Gate::Custom2q { qubits, .. } => qubits.to_vec(),
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rz { angle, .. } | Gate::Rx { angle, .. } | Gate::Ry { angle, .. } | Gate::Rzz { angle, .. } => {
                Some(angle)
            }
            _ => None,
        }
    }

    /// Checks qubit ranges and distinctness.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let q = self.qubits();
        if let Some(&bad) = q.iter().find(|&&x| x >= n_qubits) {
            return Err(QlmError::Config(format!(
                "{} on qubit {bad} outside a {n_qubits}-qubit register",
                self.kind().name()
            )));
        }
        if q.len() == 2 {
            distinct(q[0], q[1])?;
        }
        Ok(())
    }

    /// Same gate with every qubit `q` replaced by `map[q]`.
    pub fn remap(&self, map: &[usize]) -> Self {
        let mut g = self.clone();
        match &mut g {
            Gate::Rz { qubit, .. }
            | Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Hadamard { qubit }
            | Gate::Custom1q { qubit, .. } => *qubit = map[*qubit],
            Gate::Cx { control, target } => {
                *control = map[*control];
                *target = map[*target];
            }
            Gate::Rzz { qubits, .. } | Gate::Custom2q { qubits, .. } => {
                *qubits = [map[qubits[0]], map[qubits[1]]];
            }
        }
        g
    }

    /// Parses one line of the text form.
    pub fn parse(line: &str) -> Result<Self> {
        let bad = || QlmError::Config(format!("malformed gate line '{line}'"));
        let mut it = line.split_whitespace();
        let kind = it.next().ok_or_else(bad)?;
        let rest: Vec<&str> = it.collect();
        let q = |i: usize| -> Result<usize> { rest.get(i).and_then(|s| s.parse().ok()).ok_or_else(bad) };
        let f = |i: usize| -> Result<f64> { rest.get(i).and_then(|s| s.parse().ok()).ok_or_else(bad) };
        let c = |i: usize| -> Result<Complex64> { Ok(Complex64::new(f(i)?, f(i + 1)?)) };
        let expect = |n: usize| if rest.len() == n { Ok(()) } else { Err(bad()) };
        let g = match kind {
            "rz" | "rx" | "ry" => {
                expect(2)?;
                let (qubit, angle) = (q(0)?, f(1)?);
                match kind {
                    "rz" => Gate::Rz { qubit, angle },
                    "rx" => Gate::Rx { qubit, angle },
                    _ => Gate::Ry { qubit, angle },
                }
            }
            "hadamard" => {
                expect(1)?;
                Gate::Hadamard { qubit: q(0)? }
            }
            "cx" => {
                expect(2)?;
                Gate::cx(q(0)?, q(1)?)?
            }
            "rzz" => {
                expect(3)?;
                Gate::rzz(q(0)?, q(1)?, f(2)?)?
            }
            "custom-1q" => {
                expect(9)?;
                Gate::Custom1q {
                    qubit: q(0)?,
                    matrix: [[c(1)?, c(3)?], [c(5)?, c(7)?]],
                }
            }
            "custom-2q" => {
                expect(34)?;
                let mut m = [[Complex64::default(); 4]; 4];
                for (r, row) in m.iter_mut().enumerate() {
                    for (k, v) in row.iter_mut().enumerate() {
                        *v = c(2 + 2 * (4 * r + k))?;
                    }
                }
                Gate::custom2q(q(0)?, q(1)?, m)?
            }
            _ => return Err(bad()),
        };
        Ok(g)
    }
}

impl fmt::Display for Gate {
    /// `<kind> <qubit...> <angle>`; custom gates list real/imaginary parts
    /// of their matrix entries row-major in place of an angle.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind().name())?;
        for q in self.qubits() {
            write!(f, " {q}")?;
        }
        if let Some(a) = self.angle() {
            write!(f, " {a:?}")?;
        }
        match self {
            Gate::Custom1q { matrix, .. } => {
                for v in matrix.iter().flatten() {
                    write!(f, " {:?} {:?}", v.re, v.im)?;
                }
            }
            Gate::Custom2q { matrix, .. } => {
                for v in matrix.iter().flatten() {
                    write!(f, " {:?} {:?}", v.re, v.im)?;
                }
            }
            _ => {}
        }
        Ok(())
    }
}
