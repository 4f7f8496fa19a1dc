#ifndef QLM_FFI_H
#define QLM_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QlmStatus {
  QLM_STATUS_OK = 0,
  QLM_STATUS_NULL_POINTER = 1,
  QLM_STATUS_INVALID_ARGUMENT = 2,
  QLM_STATUS_GEOMETRY = 3,
  QLM_STATUS_PATH = 4,
  QLM_STATUS_SECTOR_CAP = 5,
  QLM_STATUS_NOT_CLOSED = 6,
  QLM_STATUS_KRYLOV = 7,
  QLM_STATUS_DIMENSION = 8,
  QLM_STATUS_SCHEDULE = 9,
  QLM_STATUS_EMPTY_SHOTS = 10,
  QLM_STATUS_IO = 11,
  QLM_STATUS_INTERNAL = 12,
} QlmStatus;

// Lattice geometry handle.
typedef struct QlmLattice QlmLattice;

// Sector handle: the states reachable from the diagonal string.
typedef struct QlmSector QlmSector;

// Shot table handle.
typedef struct QlmShots QlmShots;

// Time-evolution handle: lattice, sector, Hamiltonian and current state,
// starting from the diagonal string.
typedef struct QlmSimulation QlmSimulation;

// Couplings `(κ, m, g, J)`.
typedef struct QlmParams {
  double kappa;
  double mass;
  double efield;
  double plaq;
} QlmParams;

// Per-step resource counts of the compiled circuit.
typedef struct QlmResources {
  size_t n_qubits;
  size_t n1q;
  size_t n2q;
  size_t depth2q;
  size_t depth_total;
} QlmResources;

// String and charge observables of the current state.
typedef struct QlmObservables {
  double t;
  double norm;
  double energy;
  double p_init;
  double p_other;
  double q_on;
  double q_off;
  double q_tot;
} QlmObservables;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length
// without the terminator, or 0 when there is no error.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t qlm_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *qlm_version(void);

// `lx × ly` lattice with the even charge at `(0,0)` and the odd charge at
// the first odd-parity corner.
//
// # Safety
// `out` must be a valid pointer to write the handle to.
enum QlmStatus qlm_lattice_new(size_t lx, size_t ly, struct QlmLattice **out);

// Lattice with explicit static-charge corners.
//
// # Safety
// `out` must be a valid pointer to write the handle to.
enum QlmStatus qlm_lattice_new_with_charges(size_t lx,
                                            size_t ly,
                                            size_t even_x,
                                            size_t even_y,
                                            size_t odd_x,
                                            size_t odd_y,
                                            struct QlmLattice **out);

// # Safety
// `lattice` must be null or a live handle.
size_t qlm_lattice_qubit_count(const struct QlmLattice *lattice);

// # Safety
// `lattice` must be null or a handle from `qlm_lattice_new*`, not yet freed.
void qlm_lattice_free(struct QlmLattice *lattice);

// Enumerates the sector of the diagonal-string state under hopping moves
// and, when `with_plaquette` is set, plaquette moves.
//
// # Safety
// `lattice` must be a live handle and `out` a valid pointer.
enum QlmStatus qlm_sector_enumerate(const struct QlmLattice *lattice,
                                    bool with_plaquette,
                                    struct QlmSector **out);

// # Safety
// `sector` must be null or a live handle.
size_t qlm_sector_len(const struct QlmSector *sector);

// Packed configuration of basis state `index`.
//
// # Safety
// `sector` must be a live handle and `out` a valid pointer.
enum QlmStatus qlm_sector_state(const struct QlmSector *sector, size_t index, uint64_t *out);

// Basis index of a packed configuration; `InvalidArgument` if absent.
//
// # Safety
// `sector` must be a live handle and `out` a valid pointer.
enum QlmStatus qlm_sector_index_of(const struct QlmSector *sector, uint64_t config, size_t *out);

// # Safety
// `sector` must be null or a handle from `qlm_sector_enumerate`, not yet freed.
void qlm_sector_free(struct QlmSector *sector);

// Compiles one Trotter step and reports its resources.
//
// # Safety
// `lattice` must be a live handle and `out` a valid pointer.
enum QlmStatus qlm_compile_resources(const struct QlmLattice *lattice,
                                     struct QlmParams params,
                                     double dt,
                                     struct QlmResources *out);

// Builds a simulation; the sector includes plaquette moves iff `J ≠ 0`.
//
// # Safety
// `lattice` must be a live handle and `out` a valid pointer.
enum QlmStatus qlm_simulation_new(const struct QlmLattice *lattice,
                                  struct QlmParams params,
                                  struct QlmSimulation **out);

// # Safety
// `sim` must be null or a live handle.
size_t qlm_simulation_sector_dim(const struct QlmSimulation *sim);

// Advances by `dt` with the Krylov propagator at tolerance `tol`.
//
// # Safety
// `sim` must be a live handle.
enum QlmStatus qlm_simulation_step_krylov(struct QlmSimulation *sim, double dt, double tol);

// Advances by one first-order Trotter step of size `dt`.
//
// # Safety
// `sim` must be a live handle.
enum QlmStatus qlm_simulation_step_trotter(struct QlmSimulation *sim, double dt);

// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum QlmStatus qlm_simulation_observables(const struct QlmSimulation *sim,
                                          struct QlmObservables *out);

// Writes `n(j)` for every site (row-major) into `out[0..len]`; `len` must
// equal the number of sites.
//
// # Safety
// `sim` must be a live handle and `out` must point to `len` writable doubles.
enum QlmStatus qlm_simulation_charge_density(const struct QlmSimulation *sim,
                                             double *out,
                                             size_t len);

// Draws `n_shots` computational-basis samples of the current state.
//
// # Safety
// `sim` must be a live handle and `out` a valid pointer.
enum QlmStatus qlm_simulation_sample(const struct QlmSimulation *sim,
                                     size_t n_shots,
                                     uint64_t seed,
                                     struct QlmShots **out);

// Hard (0), one-flip (1) or two-flip (2) post-selection against the
// simulation's sector. Writes a new table of kept shots and the retention.
//
// # Safety
// `shots` and `sim` must be live handles; `out` and `retention` valid pointers.
enum QlmStatus qlm_shots_post_select(const struct QlmShots *shots,
                                     const struct QlmSimulation *sim,
                                     uint32_t scheme,
                                     struct QlmShots **out,
                                     double *retention);

// # Safety
// `shots` must be null or a live handle.
uint64_t qlm_shots_total(const struct QlmShots *shots);

// # Safety
// `shots` must be null or a live handle.
size_t qlm_shots_distinct(const struct QlmShots *shots);

// Entry `index` in ascending bitstring order.
//
// # Safety
// `shots` must be a live handle; `config` and `count` valid pointers.
enum QlmStatus qlm_shots_entry(const struct QlmShots *shots,
                               size_t index,
                               uint64_t *config,
                               uint64_t *count);

// # Safety
// `shots` must be null or a handle returned by this library, not yet freed.
void qlm_shots_free(struct QlmShots *shots);

// # Safety
// `sim` must be null or a handle from `qlm_simulation_new`, not yet freed.
void qlm_simulation_free(struct QlmSimulation *sim);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QLM_FFI_H */
