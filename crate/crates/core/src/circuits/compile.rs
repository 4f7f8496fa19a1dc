//! Gate-level compilation of one Trotter step.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gate::Gate;
use super::sim::apply_gate;
use super::templates::{string_coefficient, TemplateOp, HOPPING, PLAQUETTE};
use crate::configspace::Move;
use crate::dynamics::schedule::{SublayerSchedule, N_ENTANGLING_SUBLAYERS};
use crate::error::{QlmError, Result};
use crate::hamiltonian::{hopping_amplitude, CouplingParameters};
use crate::lattice::LatticeGeometry;

/// Sublayer id of the electric-field rotations.
pub const EFIELD_SUBLAYER: u8 = 4;
/// Sublayer id of the mass rotations.
pub const MASS_SUBLAYER: u8 = 5;

pub const HOPPING_BUDGET_2Q: usize = 7;
pub const PLAQUETTE_BUDGET_2Q: usize = 14;
pub const BLOCK_DEPTH_BUDGET_2Q: usize = 7;

/// Hamiltonian term a gate belongs to. `Efield` carries a link index,
/// `Mass` a site (matter qubit) index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TermId {
    Hopping(usize),
    Plaquette(usize),
    Efield(usize),
    Mass(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Provenance {
    pub sublayer: u8,
    pub term: TermId,
}

/// Gate count and two-qubit depth of one compiled term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockStats {
    pub term: TermId,
    pub sublayer: u8,
    pub n1q: usize,
    pub n2q: usize,
    pub depth2q: usize,
}

/// A compiled step: ASAP layers separated by a barrier after each
/// entangling sublayer. Gates inside a layer act on disjoint qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledStep {
    pub n_qubits: usize,
    pub dt: f64,
    pub layers: Vec<Vec<Gate>>,
    /// Parallel to `layers`: the origin of each gate.
    pub provenance: Vec<Vec<Provenance>>,
    pub blocks: Vec<BlockStats>,
    /// Two-qubit depth of each barrier-delimited stage.
    pub stage_depth2q: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub n_qubits: usize,
    pub n1q: usize,
    pub n2q: usize,
    pub depth2q: usize,
    pub depth_total: usize,
    pub stage_depth2q: Vec<usize>,
    pub hopping_blocks: usize,
    pub plaquette_blocks: usize,
    pub max_hopping_n2q: usize,
    pub max_plaquette_n2q: usize,
    pub max_block_depth2q: usize,
    /// Budget violations; empty when every block meets 7 / 14 two-qubit
    /// gates and two-qubit depth 7.
    pub deviations: Vec<String>,
}

impl ResourceReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn emit(ops: &[TemplateOp], n: usize, u: u8, amp: f64, dt: f64) -> Vec<Gate> {
    let angle = |f: u8, s: i8| 2.0 * f64::from(s) * string_coefficient(n, u, f, amp) * dt;
    ops.iter()
        .map(|&op| match op {
            TemplateOp::H(q) => Gate::Hadamard { qubit: q },
            TemplateOp::S(q, k) => Gate::Rz {
                qubit: q,
                angle: f64::from(k) * FRAC_PI_2,
            },
            TemplateOp::Cx(a, b) => Gate::Cx { control: a, target: b },
            TemplateOp::Rz(q, f, s) => Gate::Rz {
                qubit: q,
                angle: angle(f, s),
            },
            TemplateOp::Rzz(a, b, f, s) => Gate::Rzz {
                qubits: [a, b],
                angle: angle(f, s),
            },
        })
        .collect()
}

/// Hopping block on local wires `(lower matter, link, upper matter)`
/// implementing `exp(−iΔt·a(|u⟩⟨v| + h.c.))`, with `u = 010` when the
/// lower site is even and `111` when it is odd (wire 0 is bit 0).
pub fn hopping_block(lower_even: bool, amp: f64, dt: f64) -> Vec<Gate> {
    emit(HOPPING, 3, if lower_even { 0b010 } else { 0b111 }, amp, dt)
}

/// Plaquette block on local wires `(bottom, right, top, left)` for
/// `u = 0011`.
pub fn plaquette_block(amp: f64, dt: f64) -> Vec<Gate> {
    emit(PLAQUETTE, 4, 0b0011, amp, dt)
}

fn depth2q(gates: &[Gate], n_qubits: usize) -> usize {
    let mut front = vec![0usize; n_qubits];
    let mut depth = 0;
    for g in gates.iter().filter(|g| g.is_two_qubit()) {
        let q = g.qubits();
        let d = 1 + q.iter().map(|&x| front[x]).max().unwrap_or(0);
        q.iter().for_each(|&x| front[x] = d);
        depth = depth.max(d);
    }
    depth
}

fn term_block(geom: &LatticeGeometry, mv: Move, params: &CouplingParameters, dt: f64) -> Option<(TermId, Vec<Gate>)> {
    match mv {
        Move::Hopping(i) => {
            let amp = hopping_amplitude(geom, i, params.kappa);
            if amp == 0.0 || dt == 0.0 {
                return None;
            }
            let l = &geom.links()[i];
            let wires = [geom.matter_qubit(l.site), l.qubit, geom.matter_qubit(l.head())];
            let block = hopping_block(l.site.is_even(), amp, dt);
            Some((TermId::Hopping(i), block.iter().map(|g| g.remap(&wires)).collect()))
        }
        Move::Plaquette(i) => {
            if params.plaq == 0.0 || dt == 0.0 {
                return None;
            }
            let wires = geom.plaquettes()[i].links;
            let block = plaquette_block(params.plaq, dt);
            Some((TermId::Plaquette(i), block.iter().map(|g| g.remap(&wires)).collect()))
        }
    }
}

struct Layering {
    n_qubits: usize,
    front: Vec<usize>,
    floor: usize,
    layers: Vec<Vec<Gate>>,
    provenance: Vec<Vec<Provenance>>,
}

impl Layering {
    fn push(&mut self, g: Gate, p: Provenance) {
        let q = g.qubits();
        let at = q.iter().map(|&x| self.front[x]).max().unwrap_or(0).max(self.floor);
        if at == self.layers.len() {
            self.layers.push(Vec::new());
            self.provenance.push(Vec::new());
        }
        q.iter().for_each(|&x| self.front[x] = at + 1);
        self.layers[at].push(g);
        self.provenance[at].push(p);
    }

    fn barrier(&mut self) {
        self.floor = self.layers.len();
        self.front.iter_mut().for_each(|f| *f = self.floor);
        debug_assert_eq!(self.front.len(), self.n_qubits);
    }
}

/// Compiles one first-order step: the four entangling sublayers in
/// schedule order, then `rz(−gΔt)` on every link (`−g S^z` with
/// `S^z = Z/2`) and `rz(−mΔt)` on every matter qubit (`m·n` up to a global
/// phase). Zero-angle terms are elided.
pub fn compile_trotter_step(
    geom: &LatticeGeometry,
    schedule: &SublayerSchedule,
    params: &CouplingParameters,
    dt: f64,
) -> Result<CompiledStep> {
    schedule.validate(geom)?;
    if schedule.sublayers.len() != N_ENTANGLING_SUBLAYERS {
        return Err(QlmError::Schedule(format!(
            "expected {N_ENTANGLING_SUBLAYERS} entangling sublayers, got {}",
            schedule.sublayers.len()
        )));
    }
    let n_qubits = geom.qubit_count();
    let mut lay = Layering {
        n_qubits,
        front: vec![0; n_qubits],
        floor: 0,
        layers: Vec::new(),
        provenance: Vec::new(),
    };
    let mut blocks = Vec::new();
    let mut stage_depth2q = Vec::new();
    for (k, layer) in schedule.sublayers.iter().enumerate() {
        let compiled: Vec<(TermId, Vec<Gate>)> =
            layer.par_iter().filter_map(|&mv| term_block(geom, mv, params, dt)).collect();
        let mut stage = Vec::new();
        for (term, gates) in compiled {
            let p = Provenance { sublayer: k as u8, term };
            blocks.push(BlockStats {
                term,
                sublayer: k as u8,
                n1q: gates.iter().filter(|g| !g.is_two_qubit()).count(),
                n2q: gates.iter().filter(|g| g.is_two_qubit()).count(),
                depth2q: depth2q(&gates, n_qubits),
            });
            for g in gates {
                stage.push(g.clone());
                lay.push(g, p);
            }
        }
        stage_depth2q.push(depth2q(&stage, n_qubits));
        lay.barrier();
    }
    let g_angle = -params.efield * dt;
    if g_angle != 0.0 {
        for (i, l) in geom.links().iter().enumerate() {
            let p = Provenance {
                sublayer: EFIELD_SUBLAYER,
                term: TermId::Efield(i),
            };
            lay.push(Gate::Rz { qubit: l.qubit, angle: g_angle }, p);
        }
    }
    let m_angle = -params.mass * dt;
    if m_angle != 0.0 {
        for s in 0..geom.n_sites() {
            let p = Provenance {
                sublayer: MASS_SUBLAYER,
                term: TermId::Mass(s),
            };
            lay.push(Gate::Rz { qubit: s, angle: m_angle }, p);
        }
    }
    stage_depth2q.push(0);
    Ok(CompiledStep {
        n_qubits,
        dt,
        layers: lay.layers,
        provenance: lay.provenance,
        blocks,
        stage_depth2q,
    })
}

impl CompiledStep {
    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.layers.iter().flatten()
    }

    pub fn gates_with_provenance(&self) -> impl Iterator<Item = (&Gate, &Provenance)> {
        self.layers.iter().flatten().zip(self.provenance.iter().flatten())
    }

    /// Distinct `(sublayer, term)` pairs present in layer `k`.
    pub fn layer_provenance(&self, k: usize) -> Vec<Provenance> {
        let mut out: Vec<Provenance> = Vec::new();
        for p in &self.provenance[k] {
            if !out.contains(p) {
                out.push(*p);
            }
        }
        out
    }

    /// Checks that each layer acts on disjoint qubits within range.
    pub fn validate(&self) -> Result<()> {
        for (k, layer) in self.layers.iter().enumerate() {
            let mut used = vec![false; self.n_qubits];
            for g in layer {
                g.validate(self.n_qubits)?;
                for q in g.qubits() {
                    if std::mem::replace(&mut used[q], true) {
                        return Err(QlmError::Schedule(format!("qubit {q} used twice in layer {k}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies the step to a full-register state vector in place.
    pub fn apply(&self, amps: &mut [Complex64]) -> Result<()> {
        if amps.len() != 1usize << self.n_qubits {
            return Err(QlmError::Dimension {
                expected: 1usize << self.n_qubits,
                got: amps.len(),
            });
        }
        for g in self.gates() {
            apply_gate(amps, g);
        }
        Ok(())
    }

    /// One gate per line, `# layer <k>` headers between layers.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, layer) in self.layers.iter().enumerate() {
            s.push_str(&format!("# layer {k}\n"));
            for g in layer {
                s.push_str(&g.to_string());
                s.push('\n');
            }
        }
        s
    }
}

/// Parses the text form back into a flat gate list (comments skipped).
pub fn parse_gates(text: &str) -> Result<Vec<Gate>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(Gate::parse)
        .collect()
}

pub fn resource_report(step: &CompiledStep) -> ResourceReport {
    let n2q = step.gates().filter(|g| g.is_two_qubit()).count();
    let n1q = step.gates().count() - n2q;
    let of = |hop: bool| step.blocks.iter().filter(move |b| matches!(b.term, TermId::Hopping(_)) == hop);
    let hopping_blocks = of(true).count();
    let plaquette_blocks = of(false).count();
    let max_hopping_n2q = of(true).map(|b| b.n2q).max().unwrap_or(0);
    let max_plaquette_n2q = of(false).map(|b| b.n2q).max().unwrap_or(0);
    let max_block_depth2q = step.blocks.iter().map(|b| b.depth2q).max().unwrap_or(0);
    let mut deviations = Vec::new();
    for b in &step.blocks {
        let budget = match b.term {
            TermId::Hopping(_) => HOPPING_BUDGET_2Q,
            _ => PLAQUETTE_BUDGET_2Q,
        };
        if b.n2q != budget {
            deviations.push(format!("{:?}: {} two-qubit gates, budget {budget}", b.term, b.n2q));
        }
        if b.depth2q > BLOCK_DEPTH_BUDGET_2Q {
            deviations.push(format!(
                "{:?}: two-qubit depth {}, budget {BLOCK_DEPTH_BUDGET_2Q}",
                b.term, b.depth2q
            ));
        }
    }
    ResourceReport {
        n_qubits: step.n_qubits,
        n1q,
        n2q,
        depth2q: step.stage_depth2q.iter().sum(),
        depth_total: step.layers.len(),
        stage_depth2q: step.stage_depth2q.clone(),
        hopping_blocks,
        plaquette_blocks,
        max_hopping_n2q,
        max_plaquette_n2q,
        max_block_depth2q,
        deviations,
    }
}
