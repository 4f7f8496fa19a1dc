//! Reference gate sequences for the two off-diagonal term kinds.
//!
//! A term acting as `a (|u⟩⟨v| + |v⟩⟨u|)` with `v = u ⊕ 1…1` expands into
//! the commuting Pauli strings `T_f = X⊗…⊗X · Z^f` over even-weight masks
//! `f`, with coefficients `c_f = 2a (−1)^{|f ∧ u|} / 2^n`. Each template is a
//! Clifford skeleton (Hadamard, S, CX) that returns to the identity, with one
//! rotation per string placed where the skeleton maps a single `Z` (or a
//! `Z⊗Z` pair) onto `±T_f`.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TemplateOp {
    H(usize),
    /// `S^k`, emitted as `rz(k·π/2)`.
    S(usize, i8),
    Cx(usize, usize),
    /// `rz(2·sign·c_f·Δt)` on one wire.
    Rz(usize, u8, i8),
    /// `rzz(2·sign·c_f·Δt)` on two wires.
    Rzz(usize, usize, u8, i8),
}

use TemplateOp::*;

/// Wires `(lower matter, link, upper matter)`. Seven CX, two-qubit depth 7.
pub(crate) const HOPPING: &[TemplateOp] = &[
    Cx(0, 1),
    H(0),
    H(2),
    Cx(0, 2),
    Rz(2, 0b000, 1),
    Cx(1, 2),
    Rz(2, 0b011, 1),
    H(0),
    Cx(0, 2),
    Rz(2, 0b110, 1),
    Cx(1, 2),
    Rz(2, 0b101, 1),
    S(0, 1),
    H(0),
    Cx(0, 2),
    H(0),
    Cx(0, 1),
    S(0, 3),
    H(2),
    S(2, 1),
];

/// Wires `(bottom, right, top, left)`. Twelve CX and two ZZ rotations in
/// seven layers of two disjoint gates each.
pub(crate) const PLAQUETTE: &[TemplateOp] = &[
    H(0),
    H(2),
    Cx(0, 2),
    H(1),
    H(3),
    Cx(1, 3),
    H(0),
    H(1),
    Cx(0, 1),
    S(3, 1),
    Cx(2, 3),
    Rz(3, 0b0000, 1),
    S(2, 1),
    H(2),
    Rz(2, 0b1100, -1),
    S(3, 1),
    Cx(0, 3),
    Cx(1, 2),
    Rz(2, 0b0011, -1),
    Rz(3, 0b0101, 1),
    Cx(0, 2),
    Cx(1, 3),
    Rz(2, 0b0110, -1),
    Rz(3, 0b1010, 1),
    Rzz(0, 3, 0b1111, 1),
    Rzz(1, 2, 0b1001, -1),
    Cx(0, 1),
    H(2),
    S(3, 1),
    Cx(2, 3),
    H(0),
    S(2, 1),
    Cx(0, 2),
    S(1, 1),
    H(1),
    S(3, 1),
    Cx(1, 3),
    H(0),
    H(1),
    S(1, 1),
    H(2),
    H(3),
    S(3, 3),
];

/// `c_f` for the string `X…X·Z^f` in `a (|u⟩⟨v| + h.c.)` on `n` wires.
pub(crate) fn string_coefficient(n: usize, u: u8, f: u8, amp: f64) -> f64 {
    let sign = if (f & u).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
    2.0 * amp * sign / f64::from(1u32 << n)
}
