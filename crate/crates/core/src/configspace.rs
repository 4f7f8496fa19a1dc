//! Bit-packed basis configurations, the Gauss-law generator and enumeration
//! of the dynamically connected sector.
//!
//! Bit conventions: a matter bit of 1 marks a charge excitation (positron on
//! an even site, electron on an odd site); a link bit of 1 is spin down
//! (`S^z = -1/2`), a link bit of 0 is spin up (`S^z = +1/2`).

use std::collections::HashSet;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QlmError, Result};
use crate::lattice::{LatticeGeometry, Site};

/// Largest lattice (in qubits) representable by [`Configuration`].
pub const MAX_QUBITS: usize = 64;

/// Default cap on the number of states produced by [`enumerate_sector`].
pub const DEFAULT_SECTOR_CAP: usize = 50_000_000;

const SECTOR_MAGIC: &[u8; 6] = b"QLMSEC";
const SECTOR_VERSION: u8 = b'1';
const SECTOR_HEADER_LEN: usize = 32;

/// One computational-basis state of the full qubit register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Configuration(pub u64);

impl Configuration {
    #[inline]
    pub fn bit(self, q: usize) -> bool {
        (self.0 >> q) & 1 == 1
    }

    #[inline]
    pub fn with_bit(self, q: usize, value: bool) -> Self {
        if value {
            Self(self.0 | (1 << q))
        } else {
            Self(self.0 & !(1 << q))
        }
    }

    #[inline]
    pub fn flipped(self, q: usize) -> Self {
        Self(self.0 ^ (1 << q))
    }

    pub fn count_ones(self) -> u32 {
        self.0.count_ones()
    }

    /// `S^z` of a link qubit.
    #[inline]
    pub fn sz(self, q: usize) -> f64 {
        if self.bit(q) {
            -0.5
        } else {
            0.5
        }
    }
}

impl std::fmt::LowerHex for Configuration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::LowerHex::fmt(&self.0, f)
    }
}

/// Gauss-law generator values per site, stored doubled so that the
/// half-integer boundary residuals stay exact.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GaussCharges {
    doubled: Vec<i32>,
}

impl GaussCharges {
    pub fn doubled(&self) -> &[i32] {
        &self.doubled
    }

    pub fn value(&self, site_index: usize) -> f64 {
        f64::from(self.doubled[site_index]) / 2.0
    }

    pub fn values(&self) -> Vec<f64> {
        self.doubled.iter().map(|&d| f64::from(d) / 2.0).collect()
    }
}

/// Evaluates `G_j = s_j·b_j - Σ_μ (S^z_{j,μ} - S^z_{j-μ,μ})` at every site.
///
/// Under the particle-hole encoding `φ†_j φ_j - (1 - s_j)/2` reduces to
/// `s_j` times the matter bit. Missing boundary links contribute 0.
pub fn gauss_residuals(geom: &LatticeGeometry, config: Configuration) -> GaussCharges {
    // 2·S^z = 1 - 2·bit
    let sz2 = |q: usize| 1 - 2 * i32::from(config.bit(q));
    let doubled = geom
        .sites()
        .map(|j| {
            let mut g = 2 * j.sign() * i32::from(config.bit(geom.matter_qubit(j)));
            for l in geom.links() {
                if l.site == j {
                    g -= sz2(l.qubit);
                } else if l.head() == j {
                    g += sz2(l.qubit);
                }
            }
            g
        })
        .collect();
    GaussCharges { doubled }
}

/// Off-diagonal move families used for sector enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MoveSet {
    pub hopping: bool,
    pub plaquette: bool,
}

impl MoveSet {
    pub const NONE: MoveSet = MoveSet { hopping: false, plaquette: false };
    pub const HOPPING: MoveSet = MoveSet { hopping: true, plaquette: false };
    pub const ALL: MoveSet = MoveSet { hopping: true, plaquette: true };

    pub fn flags(self) -> u8 {
        u8::from(self.hopping) | (u8::from(self.plaquette) << 1)
    }

    pub fn from_flags(flags: u8) -> Option<Self> {
        (flags < 4).then_some(MoveSet {
            hopping: flags & 1 == 1,
            plaquette: flags & 2 == 2,
        })
    }
}

/// A single off-diagonal move: a hopping term on a link (index into
/// `geom.links()`) or a plaquette term (index into `geom.plaquettes()`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Move {
    Hopping(usize),
    Plaquette(usize),
}

/// A move reduced to bit masks: it acts iff the masked bits equal `pattern`
/// or `pattern ^ mask`, and then flips every masked bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompiledMove {
    pub mv: Move,
    pub mask: u64,
    pub pattern: u64,
}

impl CompiledMove {
    #[inline]
    pub fn apply(&self, c: Configuration) -> Option<Configuration> {
        let x = c.0 & self.mask;
        (x == self.pattern || x == self.pattern ^ self.mask).then_some(Configuration(c.0 ^ self.mask))
    }

    /// Number of qubits the move touches.
    pub fn support(&self) -> u32 {
        self.mask.count_ones()
    }
}

/// Compiles a move to masks.
///
/// Hopping across a link whose lower site `j` is even acts on
/// `(b_j, link, b_{j+μ}) = (0,1,0) ↔ (1,0,1)`; when `j` is odd it acts on
/// `(1,1,1) ↔ (0,0,0)`. A plaquette acts on
/// `(bottom, right, top, left) = (1,1,0,0) ↔ (0,0,1,1)`.
pub fn compile_move(geom: &LatticeGeometry, mv: Move) -> Result<CompiledMove> {
    if geom.qubit_count() > MAX_QUBITS {
        return Err(QlmError::Geometry(format!(
            "{} qubits exceed the {MAX_QUBITS}-bit configuration width",
            geom.qubit_count()
        )));
    }
    match mv {
        Move::Hopping(i) => {
            let l = geom
                .links()
                .get(i)
                .ok_or_else(|| QlmError::Move(format!("hopping link {i} out of range")))?;
            let a = geom.matter_qubit(l.site);
            let b = geom.matter_qubit(l.head());
            let mask = (1u64 << a) | (1u64 << b) | (1u64 << l.qubit);
            let pattern = if l.site.is_even() {
                1u64 << l.qubit
            } else {
                mask
            };
            Ok(CompiledMove { mv, mask, pattern })
        }
        Move::Plaquette(i) => {
            let p = geom
                .plaquettes()
                .get(i)
                .ok_or_else(|| QlmError::Move(format!("plaquette {i} out of range")))?;
            let mask = p.links.iter().fold(0u64, |m, &q| m | (1 << q));
            let pattern = (1u64 << p.links[0]) | (1u64 << p.links[1]);
            Ok(CompiledMove { mv, mask, pattern })
        }
    }
}

/// All moves enabled by `moves`, hopping first, in geometry order.
pub fn compiled_moves(geom: &LatticeGeometry, moves: MoveSet) -> Vec<CompiledMove> {
    let mut out = Vec::new();
    if moves.hopping {
        out.extend((0..geom.n_links()).map(|i| compile_move(geom, Move::Hopping(i)).unwrap()));
    }
    if moves.plaquette {
        out.extend(
            (0..geom.plaquettes().len()).map(|i| compile_move(geom, Move::Plaquette(i)).unwrap()),
        );
    }
    out
}

/// Applies one move; `Ok(None)` when the operator annihilates `config`.
pub fn apply_move(geom: &LatticeGeometry, config: Configuration, mv: Move) -> Result<Option<Configuration>> {
    Ok(compile_move(geom, mv)?.apply(config))
}

/// Checks that `path` is a connected walk from the even static charge to the
/// odd one and returns the link qubits it visits.
pub fn validate_path(geom: &LatticeGeometry, path: &[usize]) -> Result<()> {
    if path.is_empty() {
        return Err(QlmError::Path("empty path".into()));
    }
    let mut at = geom.static_even();
    let mut seen = HashSet::new();
    for &q in path {
        let l = geom
            .link_by_qubit(q)
            .ok_or_else(|| QlmError::Path(format!("qubit {q} is not a link")))?;
        if !seen.insert(q) {
            return Err(QlmError::Path(format!("link {q} used twice")));
        }
        at = if l.site == at {
            l.head()
        } else if l.head() == at {
            l.site
        } else {
            return Err(QlmError::Path(format!(
                "link {q} {}-{} does not continue from {at}",
                l.site,
                l.head()
            )));
        };
    }
    if at != geom.static_odd() {
        return Err(QlmError::Path(format!(
            "path ends at {at}, expected static charge at {}",
            geom.static_odd()
        )));
    }
    Ok(())
}

/// The staircase path between the static charges that alternates x and y
/// steps as evenly as possible (x first on ties).
pub fn diagonal_path(geom: &LatticeGeometry) -> Vec<usize> {
    let (from, to) = (geom.static_even(), geom.static_odd());
    let (dx, dy) = (from.x.abs_diff(to.x), from.y.abs_diff(to.y));
    let (mut rx, mut ry) = (dx, dy);
    let mut at = from;
    let mut path = Vec::with_capacity(dx + dy);
    while rx + ry > 0 {
        // Compare rx/dx against ry/dy without division.
        let take_x = ry == 0 || (rx > 0 && rx * dy >= ry * dx);
        let next = if take_x {
            rx -= 1;
            Site::new(if to.x > from.x { at.x + 1 } else { at.x - 1 }, at.y)
        } else {
            ry -= 1;
            Site::new(at.x, if to.y > from.y { at.y + 1 } else { at.y - 1 })
        };
        path.push(geom.link_between(at, next).expect("adjacent sites"));
        at = next;
    }
    path
}

/// Vacuum matter with link bits set exactly on `path`.
pub fn initial_string_state(geom: &LatticeGeometry, path: &[usize]) -> Result<(Configuration, GaussCharges)> {
    if geom.qubit_count() > MAX_QUBITS {
        return Err(QlmError::Geometry(format!(
            "{} qubits exceed the {MAX_QUBITS}-bit configuration width",
            geom.qubit_count()
        )));
    }
    validate_path(geom, path)?;
    let c = Configuration(path.iter().fold(0u64, |m, &q| m | (1 << q)));
    Ok((c, gauss_residuals(geom, c)))
}

/// Sorted, deduplicated closure of a seed under a move set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorBasis {
    states: Vec<u64>,
    seed: Configuration,
    moves: MoveSet,
    geometry_hash: u64,
}

impl SectorBasis {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, i: usize) -> Configuration {
        Configuration(self.states[i])
    }

    pub fn seed(&self) -> Configuration {
        self.seed
    }

    pub fn moves(&self) -> MoveSet {
        self.moves
    }

    pub fn geometry_hash(&self) -> u64 {
        self.geometry_hash
    }

    /// Ordinal of `c` in the basis.
    #[inline]
    pub fn index_of(&self, c: Configuration) -> Option<usize> {
        self.states.binary_search(&c.0).ok()
    }

    pub fn contains(&self, c: Configuration) -> bool {
        self.index_of(c).is_some()
    }

    pub fn iter(&self) -> impl Iterator<Item = Configuration> + '_ {
        self.states.iter().map(|&s| Configuration(s))
    }

    /// Builds a basis from an arbitrary state list (sorted and deduplicated
    /// here). Closure is not checked.
    pub fn from_states(geom: &LatticeGeometry, mut states: Vec<u64>, seed: Configuration, moves: MoveSet) -> Self {
        states.sort_unstable();
        states.dedup();
        Self {
            states,
            seed,
            moves,
            geometry_hash: geom.hash64(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(SECTOR_HEADER_LEN + 8 * self.states.len());
        out.extend_from_slice(SECTOR_MAGIC);
        out.push(SECTOR_VERSION);
        out.push(self.moves.flags());
        out.extend_from_slice(&self.geometry_hash.to_le_bytes());
        out.extend_from_slice(&(self.states.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.0.to_le_bytes());
        for s in &self.states {
            out.extend_from_slice(&s.to_le_bytes());
        }
        out
    }

    fn from_bytes(bytes: &[u8], geom: &LatticeGeometry, path: &Path) -> Result<Self> {
        let err = |reason: String| QlmError::SectorFile {
            path: path.to_path_buf(),
            reason,
        };
        if bytes.len() < SECTOR_HEADER_LEN {
            return Err(err(format!("truncated header ({} bytes)", bytes.len())));
        }
        if &bytes[..6] != SECTOR_MAGIC {
            return Err(err("bad magic".into()));
        }
        if bytes[6] != SECTOR_VERSION {
            return Err(err(format!(
                "version mismatch: file has {:?}, expected {:?}",
                bytes[6] as char, SECTOR_VERSION as char
            )));
        }
        let moves = MoveSet::from_flags(bytes[7]).ok_or_else(|| err(format!("bad move flags {}", bytes[7])))?;
        let word = |at: usize| u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
        let hash = word(8);
        if hash != geom.hash64() {
            return Err(err(format!(
                "geometry hash mismatch: file {hash:016x}, lattice {:016x}",
                geom.hash64()
            )));
        }
        let count = word(16) as usize;
        let seed = Configuration(word(24));
        let body = &bytes[SECTOR_HEADER_LEN..];
        if body.len() != count * 8 {
            return Err(err(format!(
                "truncated body: {} records declared, {} bytes present",
                count,
                body.len()
            )));
        }
        let states: Vec<u64> = body
            .chunks_exact(8)
            .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if states.windows(2).any(|w| w[0] >= w[1]) {
            return Err(err("records are not strictly ascending".into()));
        }
        Ok(Self {
            states,
            seed,
            moves,
            geometry_hash: hash,
        })
    }
}

/// Options for [`enumerate_sector_with`].
#[derive(Debug, Clone, Copy)]
pub struct EnumerateOptions {
    pub cap: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            cap: DEFAULT_SECTOR_CAP,
        }
    }
}

pub fn enumerate_sector(geom: &LatticeGeometry, seed: Configuration, moves: MoveSet) -> Result<SectorBasis> {
    enumerate_sector_with(geom, seed, moves, EnumerateOptions::default())
}

/// Level-synchronous breadth-first closure of `seed`. Each frontier is
/// expanded in parallel, then sorted and deduplicated, so the result does
/// not depend on the worker count.
pub fn enumerate_sector_with(
    geom: &LatticeGeometry,
    seed: Configuration,
    moves: MoveSet,
    opts: EnumerateOptions,
) -> Result<SectorBasis> {
    if geom.qubit_count() > MAX_QUBITS {
        return Err(QlmError::Geometry(format!(
            "{} qubits exceed the {MAX_QUBITS}-bit configuration width",
            geom.qubit_count()
        )));
    }
    if geom.qubit_count() < MAX_QUBITS && seed.0 >> geom.qubit_count() != 0 {
        return Err(QlmError::Geometry(format!(
            "seed {seed:#x} has bits beyond the {}-qubit register",
            geom.qubit_count()
        )));
    }
    let table = compiled_moves(geom, moves);
    let mut visited: HashSet<u64> = HashSet::new();
    visited.insert(seed.0);
    let mut frontier = vec![seed.0];
    while !frontier.is_empty() {
        let mut next: Vec<u64> = frontier
            .par_iter()
            .flat_map_iter(|&s| table.iter().filter_map(move |m| m.apply(Configuration(s)).map(|c| c.0)))
            .filter(|c| !visited.contains(c))
            .collect();
        next.par_sort_unstable();
        next.dedup();
        visited.extend(next.iter().copied());
        if visited.len() > opts.cap {
            return Err(QlmError::SectorCap {
                cap: opts.cap,
                reached: visited.len(),
            });
        }
        frontier = next;
    }
    let mut states: Vec<u64> = visited.into_iter().collect();
    states.par_sort_unstable();
    Ok(SectorBasis {
        states,
        seed,
        moves,
        geometry_hash: geom.hash64(),
    })
}

pub fn save_sector(basis: &SectorBasis, path: impl AsRef<Path>) -> Result<()> {
    let mut f = fs::File::create(path.as_ref())?;
    f.write_all(&basis.to_bytes())?;
    Ok(())
}

pub fn load_sector(path: impl AsRef<Path>, geom: &LatticeGeometry) -> Result<SectorBasis> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    SectorBasis::from_bytes(&bytes, geom, path)
}
