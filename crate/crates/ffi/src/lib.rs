//! C ABI over the simulator. Every object crosses the boundary as an
//! opaque handle owned by the caller and released with its `_free`
//! function. Calls return a `QlmStatus`; on failure the message is kept in
//! a thread-local slot readable with `qlm_last_error`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qlm::circuits::{compile_trotter_step, resource_report, sample_shots, ShotTable};
use qlm::configspace::{diagonal_path, enumerate_sector, initial_string_state, Configuration, MoveSet, SectorBasis};
use qlm::dynamics::{evolve_krylov, schedule_sublayers, KrylovOptions, StateVector, TrotterEngine};
use qlm::hamiltonian::{build_hamiltonian, CouplingParameters, SparseOperator};
use qlm::lattice::{LatticeGeometry, Site};
use qlm::observables::{charge_density, string_region_charges};
use qlm::shots::{post_select, PostSelectionScheme};
use qlm::strings::{classify_orders, enumerate_minimal_strings, string_populations, StringOrderMap, StringPath};
use qlm::QlmError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Geometry = 3,
    Path = 4,
    SectorCap = 5,
    NotClosed = 6,
    Krylov = 7,
    Dimension = 8,
    Schedule = 9,
    EmptyShots = 10,
    Io = 11,
    Internal = 12,
}

impl From<&QlmError> for QlmStatus {
    fn from(e: &QlmError) -> Self {
        match e {
            QlmError::Geometry(_) => QlmStatus::Geometry,
            QlmError::Path(_) => QlmStatus::Path,
            QlmError::SectorCap { .. } => QlmStatus::SectorCap,
            QlmError::NotClosed { .. } => QlmStatus::NotClosed,
            QlmError::KrylovNonConvergence { .. } | QlmError::NotNormalized(_) => QlmStatus::Krylov,
            QlmError::Dimension { .. } => QlmStatus::Dimension,
            QlmError::Schedule(_) => QlmStatus::Schedule,
            QlmError::EmptyShots => QlmStatus::EmptyShots,
            QlmError::Io(_) | QlmError::SectorFile { .. } | QlmError::Json(_) => QlmStatus::Io,
            _ => QlmStatus::InvalidArgument,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = CString::new(msg.into().replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

enum Failure {
    Status(QlmStatus, String),
    Core(QlmError),
}

impl From<QlmError> for Failure {
    fn from(e: QlmError) -> Self {
        Failure::Core(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(QlmStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Status(QlmStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QlmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            QlmStatus::Ok
        }
        Ok(Err(Failure::Status(s, m))) => {
            set_error(m);
            s
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            QlmStatus::from(&e)
        }
        Err(_) => {
            set_error("internal panic");
            QlmStatus::Internal
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Copies the last error message of this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// without the terminator, or 0 when there is no error.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn qlm_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| match &*e.borrow() {
        None => 0,
        Some(msg) => {
            let bytes = msg.as_bytes();
            if !buf.is_null() && len > 0 {
                let n = bytes.len().min(len - 1);
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n) = 0;
            }
            bytes.len()
        }
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn qlm_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Lattice geometry handle.
pub struct QlmLattice {
    geom: LatticeGeometry,
}

/// `lx × ly` lattice with the even charge at `(0,0)` and the odd charge at
/// the first odd-parity corner.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn qlm_lattice_new(lx: usize, ly: usize, out: *mut *mut QlmLattice) -> QlmStatus {
    guard(|| {
        let geom = LatticeGeometry::with_opposite_corners(lx, ly)?;
        put(out, Box::into_raw(Box::new(QlmLattice { geom })), "out")
    })
}

/// Lattice with explicit static-charge corners.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn qlm_lattice_new_with_charges(
    lx: usize,
    ly: usize,
    even_x: usize,
    even_y: usize,
    odd_x: usize,
    odd_y: usize,
    out: *mut *mut QlmLattice,
) -> QlmStatus {
    guard(|| {
        let geom = LatticeGeometry::new(lx, ly, Site::new(even_x, even_y), Site::new(odd_x, odd_y))?;
        put(out, Box::into_raw(Box::new(QlmLattice { geom })), "out")
    })
}

/// # Safety
/// `lattice` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qlm_lattice_qubit_count(lattice: *const QlmLattice) -> usize {
    lattice.as_ref().map_or(0, |l| l.geom.qubit_count())
}

/// # Safety
/// `lattice` must be null or a handle from `qlm_lattice_new*`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qlm_lattice_free(lattice: *mut QlmLattice) {
    if !lattice.is_null() {
        drop(Box::from_raw(lattice));
    }
}

/// Sector handle: the states reachable from the diagonal string.
pub struct QlmSector {
    basis: SectorBasis,
}

/// Enumerates the sector of the diagonal-string state under hopping moves
/// and, when `with_plaquette` is set, plaquette moves.
///
/// # Safety
/// `lattice` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlm_sector_enumerate(
    lattice: *const QlmLattice,
    with_plaquette: bool,
    out: *mut *mut QlmSector,
) -> QlmStatus {
    guard(|| {
        let g = &as_ref(lattice, "lattice")?.geom;
        let (seed, _) = initial_string_state(g, &diagonal_path(g))?;
        let moves = if with_plaquette { MoveSet::ALL } else { MoveSet::HOPPING };
        let basis = enumerate_sector(g, seed, moves)?;
        put(out, Box::into_raw(Box::new(QlmSector { basis })), "out")
    })
}

/// # Safety
/// `sector` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qlm_sector_len(sector: *const QlmSector) -> usize {
    sector.as_ref().map_or(0, |s| s.basis.len())
}

/// Packed configuration of basis state `index`.
///
/// # Safety
/// `sector` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlm_sector_state(sector: *const QlmSector, index: usize, out: *mut u64) -> QlmStatus {
    guard(|| {
        let s = &as_ref(sector, "sector")?.basis;
        if index >= s.len() {
            return Err(invalid(format!("index {index} out of range for {} states", s.len())));
        }
        put(out, s.state(index).0, "out")
    })
}

/// Basis index of a packed configuration; `InvalidArgument` if absent.
///
/// # Safety
/// `sector` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlm_sector_index_of(sector: *const QlmSector, config: u64, out: *mut usize) -> QlmStatus {
    guard(|| {
        let s = &as_ref(sector, "sector")?.basis;
        let i = s
            .index_of(Configuration(config))
            .ok_or_else(|| invalid(format!("configuration {config:#x} is not a sector member")))?;
        put(out, i, "out")
    })
}

/// # Safety
/// `sector` must be null or a handle from `qlm_sector_enumerate`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qlm_sector_free(sector: *mut QlmSector) {
    if !sector.is_null() {
        drop(Box::from_raw(sector));
    }
}

/// Couplings `(κ, m, g, J)`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct QlmParams {
    pub kappa: f64,
    pub mass: f64,
    pub efield: f64,
    pub plaq: f64,
}

impl From<QlmParams> for CouplingParameters {
    fn from(p: QlmParams) -> Self {
        CouplingParameters::new(p.kappa, p.mass, p.efield, p.plaq)
    }
}

/// Per-step resource counts of the compiled circuit.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QlmResources {
    pub n_qubits: usize,
    pub n1q: usize,
    pub n2q: usize,
    pub depth2q: usize,
    pub depth_total: usize,
}

/// Compiles one Trotter step and reports its resources.
///
/// # Safety
/// `lattice` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlm_compile_resources(
    lattice: *const QlmLattice,
    params: QlmParams,
    dt: f64,
    out: *mut QlmResources,
) -> QlmStatus {
    guard(|| {
        let g = &as_ref(lattice, "lattice")?.geom;
        let schedule = schedule_sublayers(g)?;
        let r = resource_report(&compile_trotter_step(g, &schedule, &params.into(), dt)?);
        put(
            out,
            QlmResources {
                n_qubits: r.n_qubits,
                n1q: r.n1q,
                n2q: r.n2q,
                depth2q: r.depth2q,
                depth_total: r.depth_total,
            },
            "out",
        )
    })
}

/// String and charge observables of the current state.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct QlmObservables {
    pub t: f64,
    pub norm: f64,
    pub energy: f64,
    pub p_init: f64,
    pub p_other: f64,
    pub q_on: f64,
    pub q_off: f64,
    pub q_tot: f64,
}

/// Time-evolution handle: lattice, sector, Hamiltonian and current state,
/// starting from the diagonal string.
pub struct QlmSimulation {
    geom: LatticeGeometry,
    sector: SectorBasis,
    params: CouplingParameters,
    h: SparseOperator,
    map: StringOrderMap,
    psi: StateVector,
    t: f64,
    trotter: Option<TrotterEngine>,
}

/// Builds a simulation; the sector includes plaquette moves iff `J ≠ 0`.
///
/// # Safety
/// `lattice` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlm_simulation_new(
    lattice: *const QlmLattice,
    params: QlmParams,
    out: *mut *mut QlmSimulation,
) -> QlmStatus {
    guard(|| {
        let geom = as_ref(lattice, "lattice")?.geom.clone();
        let params: CouplingParameters = params.into();
        let path = diagonal_path(&geom);
        let (seed, _) = initial_string_state(&geom, &path)?;
        let moves = if params.plaq == 0.0 { MoveSet::HOPPING } else { MoveSet::ALL };
        let sector = enumerate_sector(&geom, seed, moves)?;
        let h = build_hamiltonian(&geom, &sector, &params)?;
        let initial = StringPath::new(&geom, path)?;
        let map = classify_orders(&geom, &enumerate_minimal_strings(&geom), &initial)?;
        let psi = StateVector::basis(sector.len(), sector.index_of(seed).expect("seed is a member"));
        let sim = QlmSimulation {
            geom,
            sector,
            params,
            h,
            map,
            psi,
            t: 0.0,
            trotter: None,
        };
        put(out, Box::into_raw(Box::new(sim)), "out")
    })
}

/// # Safety
/// `sim` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qlm_simulation_sector_dim(sim: *const QlmSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.sector.len())
}

/// Advances by `dt` with the Krylov propagator at tolerance `tol`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qlm_simulation_step_krylov(sim: *mut QlmSimulation, dt: f64, tol: f64) -> QlmStatus {
    guard(|| {
        let s = as_mut(sim, "sim")?;
        if !(tol > 0.0) {
            return Err(invalid("tol must be positive"));
        }
        s.psi = evolve_krylov(&s.h, &s.psi, dt, &KrylovOptions::with_tol(tol))?;
        s.t += dt;
        Ok(())
    })
}

/// Advances by one first-order Trotter step of size `dt`.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn qlm_simulation_step_trotter(sim: *mut QlmSimulation, dt: f64) -> QlmStatus {
    guard(|| {
        let s = as_mut(sim, "sim")?;
        if s.trotter.as_ref().map_or(true, |e| e.dt() != dt) {
            let schedule = schedule_sublayers(&s.geom)?;
            s.trotter = Some(TrotterEngine::new(&s.geom, &s.sector, &schedule, &s.params, dt)?);
        }
        s.trotter.as_ref().expect("engine built").step(&mut s.psi)?;
        s.t += dt;
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlm_simulation_observables(sim: *const QlmSimulation, out: *mut QlmObservables) -> QlmStatus {
    guard(|| {
        let s = as_ref(sim, "sim")?;
        let pop = string_populations(&s.psi, &s.sector, &s.map)?;
        let n = charge_density(&s.geom, &s.psi, &s.sector)?;
        let (q_on, q_off, q_tot) = string_region_charges(&s.geom, &n, s.map.initial_path());
        put(
            out,
            QlmObservables {
                t: s.t,
                norm: s.psi.norm(),
                energy: s.h.expectation(s.psi.amplitudes()),
                p_init: pop.p_init,
                p_other: pop.p_other,
                q_on,
                q_off,
                q_tot,
            },
            "out",
        )
    })
}

/// Writes `n(j)` for every site (row-major) into `out[0..len]`; `len` must
/// equal the number of sites.
///
/// # Safety
/// `sim` must be a live handle and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qlm_simulation_charge_density(sim: *const QlmSimulation, out: *mut f64, len: usize) -> QlmStatus {
    guard(|| {
        let s = as_ref(sim, "sim")?;
        if out.is_null() {
            return Err(null("out"));
        }
        if len != s.geom.n_sites() {
            return Err(invalid(format!("expected {} sites, got {len}", s.geom.n_sites())));
        }
        let n = charge_density(&s.geom, &s.psi, &s.sector)?;
        ptr::copy_nonoverlapping(n.as_ptr(), out, len);
        Ok(())
    })
}

/// Shot table handle.
pub struct QlmShots {
    table: ShotTable,
}

/// Draws `n_shots` computational-basis samples of the current state.
///
/// # Safety
/// `sim` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qlm_simulation_sample(
    sim: *const QlmSimulation,
    n_shots: usize,
    seed: u64,
    out: *mut *mut QlmShots,
) -> QlmStatus {
    guard(|| {
        let s = as_ref(sim, "sim")?;
        let table = sample_shots(&s.psi, &s.sector, s.geom.qubit_count(), n_shots, seed)?;
        put(out, Box::into_raw(Box::new(QlmShots { table })), "out")
    })
}

/// Hard (0), one-flip (1) or two-flip (2) post-selection against the
/// simulation's sector. Writes a new table of kept shots and the retention.
///
/// # Safety
/// `shots` and `sim` must be live handles; `out` and `retention` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qlm_shots_post_select(
    shots: *const QlmShots,
    sim: *const QlmSimulation,
    scheme: u32,
    out: *mut *mut QlmShots,
    retention: *mut f64,
) -> QlmStatus {
    guard(|| {
        let t = &as_ref(shots, "shots")?.table;
        let s = as_ref(sim, "sim")?;
        let scheme = match scheme {
            0 => PostSelectionScheme::Hard,
            1 => PostSelectionScheme::Flip1,
            2 => PostSelectionScheme::Flip2,
            k => return Err(invalid(format!("unknown scheme {k}"))),
        };
        if retention.is_null() {
            return Err(null("retention"));
        }
        let p = post_select(t, scheme, &s.sector);
        put(out, Box::into_raw(Box::new(QlmShots { table: p.kept })), "out")?;
        retention.write(p.retention);
        Ok(())
    })
}

/// # Safety
/// `shots` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qlm_shots_total(shots: *const QlmShots) -> u64 {
    shots.as_ref().map_or(0, |s| s.table.total())
}

/// # Safety
/// `shots` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qlm_shots_distinct(shots: *const QlmShots) -> usize {
    shots.as_ref().map_or(0, |s| s.table.distinct())
}

/// Entry `index` in ascending bitstring order.
///
/// # Safety
/// `shots` must be a live handle; `config` and `count` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn qlm_shots_entry(shots: *const QlmShots, index: usize, config: *mut u64, count: *mut u64) -> QlmStatus {
    guard(|| {
        let t = &as_ref(shots, "shots")?.table;
        let (c, n) = t
            .iter()
            .nth(index)
            .ok_or_else(|| invalid(format!("index {index} out of range for {} entries", t.distinct())))?;
        put(config, c.0, "config")?;
        put(count, n, "count")
    })
}

/// # Safety
/// `shots` must be null or a handle returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qlm_shots_free(shots: *mut QlmShots) {
    if !shots.is_null() {
        drop(Box::from_raw(shots));
    }
}

/// # Safety
/// `sim` must be null or a handle from `qlm_simulation_new`, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qlm_simulation_free(sim: *mut QlmSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
