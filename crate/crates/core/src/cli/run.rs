//! End-to-end experiment pipeline and artifact layout.

use std::cell::RefCell;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::{Diagnostics, EngineKind, ExperimentConfig};
use crate::circuits::{apply_noise, compile_trotter_step, resource_report, sample_shots, ResourceReport, ShotTable};
use crate::configspace::{enumerate_sector, save_sector, SectorBasis};
use crate::dynamics::{
    run_trajectory_with, schedule_sublayers, Engine, KrylovOptions, Observer, StateVector, TimeSeries, TrotterEngine,
};
use crate::error::{QlmError, Result};
use crate::hamiltonian::build_hamiltonian;
use crate::lattice::LatticeGeometry;
use crate::observables::{
    bit_marginals, estimate_from_shots, gauss_expectation, signed_charge, string_region_charges, Estimate, Region,
    ShotObservable, SnapshotGrid,
};
use crate::shots::{post_select, retention_csv, RetentionRow};
use crate::strings::{classify_orders, enumerate_minimal_strings, string_populations, StringOrderMap, StringPath};

pub const TIME_STEP_NOTE: &str =
    "preset time step is 0.1/kappa; the hardware step size is not published, so time and step columns are both emitted";

/// Per-step observables recorded in the time series.
struct RunObserver<'a> {
    geom: &'a LatticeGeometry,
    sector: &'a SectorBasis,
    map: &'a StringOrderMap,
    gauss0: Vec<f64>,
}

impl RunObserver<'_> {
    fn compute(&self, psi: &StateVector) -> Result<Vec<f64>> {
        let pop = string_populations(psi, self.sector, self.map)?;
        let m = bit_marginals(self.geom, psi, self.sector)?;
        let density = &m[..self.geom.n_sites()];
        let (q_on, q_off, q_tot) = string_region_charges(self.geom, density, self.map.initial_path());
        let signed: f64 = signed_charge(self.geom, density).iter().sum();
        let gauss_drift = gauss_expectation(self.geom, &m)
            .iter()
            .zip(&self.gauss0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let mut v = vec![pop.p_init, pop.p_other];
        v.extend(&pop.p_k[1..]);
        v.extend([q_on, q_off, q_tot, signed, gauss_drift]);
        Ok(v)
    }
}

impl Observer for RunObserver<'_> {
    fn names(&self) -> Vec<String> {
        let mut n = vec!["p_init".to_string(), "p_other".to_string()];
        n.extend((1..=self.map.max_order()).map(|k| format!("p_k{k}")));
        n.extend(["q_on", "q_off", "q_tot", "signed_charge", "gauss_drift"].map(String::from));
        n
    }

    fn observe(&self, psi: &StateVector) -> Vec<f64> {
        self.compute(psi).expect("dimensions fixed at construction")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub diagnostics: Diagnostics,
    pub geometry_hash: String,
    pub qubit_count: usize,
    pub sector_dim: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub engine: EngineKind,
    pub resources: ResourceReport,
    pub note: String,
    pub files: Vec<String>,
    pub version: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow {
    pub step: usize,
    pub t: f64,
    pub observable: String,
    pub source: String,
    pub value: f64,
    pub stderr: f64,
    pub exact: f64,
}

pub fn estimates_csv(rows: &[EstimateRow]) -> String {
    let mut s = String::from("step,t,observable,source,value,stderr,exact\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:?},{},{},{:?},{:?},{:?}\n",
            r.step, r.t, r.observable, r.source, r.value, r.stderr, r.exact
        ));
    }
    s
}

/// In-memory results of a run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub series: TimeSeries,
    pub estimates: Vec<EstimateRow>,
    pub retention: Vec<RetentionRow>,
}

/// Diagnostics printed by `--dry-run`.
#[derive(Debug, Clone, Serialize)]
pub struct DryRun {
    pub config_hash: String,
    pub diagnostics: Diagnostics,
    pub qubit_count: usize,
    pub n_steps: usize,
    pub initial_path: Vec<usize>,
}

pub fn dry_run(config: &ExperimentConfig) -> Result<DryRun> {
    let r = config.resolve()?;
    Ok(DryRun {
        config_hash: config.hash(),
        diagnostics: config.diagnostics(),
        qubit_count: r.geom.qubit_count(),
        n_steps: r.n_steps,
        initial_path: r.path,
    })
}

/// Mixes a run seed with a step index and a purpose tag.
pub fn derive_seed(seed: u64, step: usize, tag: u64) -> u64 {
    let mut z = seed ^ (step as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ tag.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn write(dir: &Path, rel: &str, contents: impl AsRef<[u8]>, files: &mut Vec<String>) -> Result<()> {
    let path = dir.join(rel);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    files.push(rel.to_string());
    Ok(())
}

/// Runs the full pipeline and writes every artifact under `out`.
pub fn run(config: &ExperimentConfig, out: &Path) -> Result<RunOutput> {
    let r = config.resolve()?;
    let diagnostics = config.diagnostics();
    log::info!(
        "resonance {:?}, confinement margin {:.3}",
        diagnostics.resonance,
        diagnostics.confinement_margin
    );
    let geom = &r.geom;
    fs::create_dir_all(out)?;
    let mut files = Vec::new();

    let sector = enumerate_sector(geom, r.initial, r.moves)?;
    log::info!("sector dimension {}", sector.len());
    save_sector(&sector, out.join("sector.bin"))?;
    files.push("sector.bin".into());

    let params = &config.params;
    let dt = config.evolution.dt;
    let h = build_hamiltonian(geom, &sector, params)?;
    let schedule = schedule_sublayers(geom)?;
    let step = compile_trotter_step(geom, &schedule, params, dt)?;
    let resources = resource_report(&step);
    write(out, "resources.json", resources.to_json(), &mut files)?;
    write(out, "circuit.txt", step.to_text(), &mut files)?;

    let strings = enumerate_minimal_strings(geom);
    let initial_path = StringPath::new(geom, r.path.clone())?;
    let map = classify_orders(geom, &strings, &initial_path)?;
    write(out, "order_map.json", map.to_json(), &mut files)?;

    let trotter;
    let engine = match config.evolution.engine {
        EngineKind::Krylov => Engine::Krylov {
            dt,
            options: KrylovOptions::with_tol(config.evolution.krylov_tol),
        },
        EngineKind::Trotter => {
            trotter = TrotterEngine::new(geom, &sector, &schedule, params, dt)?;
            Engine::Trotter(&trotter)
        }
    };
    let psi0 = StateVector::basis(sector.len(), sector.index_of(r.initial).expect("seed is a member"));
    let observer = RunObserver {
        geom,
        sector: &sector,
        map: &map,
        gauss0: gauss_expectation(geom, &bit_marginals(geom, &psi0, &sector)?),
    };

    let m = &config.measurement;
    let total_sites: Vec<usize> = Region::Total.sites(geom).iter().map(|&j| geom.matter_qubit(j)).collect();
    let estimates = RefCell::new(Vec::new());
    let retention = RefCell::new(Vec::new());
    let failure: RefCell<Option<QlmError>> = RefCell::new(None);
    let per_step = |k: usize, psi: &StateVector| -> Result<()> {
        let t = k as f64 * dt;
        let snap = SnapshotGrid::capture(geom, psi, &sector, k, t)?;
        write(out, &format!("snapshots/step_{k:04}.csv"), snap.to_csv(), &mut Vec::new())?;
        write(out, &format!("snapshots/step_{k:04}.json"), snap.to_json(), &mut Vec::new())?;
        if m.n_shots == 0 {
            return Ok(());
        }
        let ideal = sample_shots(psi, &sector, geom.qubit_count(), m.n_shots, derive_seed(config.run.seed, k, 0))?;
        let mut measured = apply_noise(&ideal, &m.noise, resources.n1q, resources.n2q, k, derive_seed(config.run.seed, k, 1))?;
        measured.metadata.step = Some(k);
        write(out, &format!("shots/step_{k:04}.csv"), measured.to_csv(), &mut Vec::new())?;
        write(
            out,
            &format!("shots/step_{k:04}.json"),
            serde_json::to_string_pretty(&measured.metadata_json())?,
            &mut Vec::new(),
        )?;
        let m_all = bit_marginals(geom, psi, &sector)?;
        let exact_p = crate::strings::string_probability_local(psi, &sector, &initial_path)?;
        let exact_q: f64 = total_sites.iter().map(|&q| m_all[q]).sum();
        let observables = [
            ("p_init", ShotObservable::StringIndicator(initial_path.clone()), exact_p),
            ("q_tot", ShotObservable::Occupation(total_sites.clone()), exact_q),
        ];
        let add = |source: &str, table: &ShotTable| -> Result<()> {
            for (name, obs, exact) in &observables {
                let e = if table.is_empty() {
                    Estimate {
                        value: f64::NAN,
                        stderr: f64::NAN,
                    }
                } else {
                    estimate_from_shots(table, obs)?
                };
                estimates.borrow_mut().push(EstimateRow {
                    step: k,
                    t,
                    observable: name.to_string(),
                    source: source.to_string(),
                    value: e.value,
                    stderr: e.stderr,
                    exact: *exact,
                });
            }
            Ok(())
        };
        add("raw", &measured)?;
        for &scheme in &m.schemes {
            let ps = post_select(&measured, scheme, &sector);
            retention.borrow_mut().push(RetentionRow::new(k, &ps));
            add(scheme.name(), &ps.kept)?;
        }
        Ok(())
    };
    let (mut series, _) = run_trajectory_with(&engine, &h, &psi0, r.n_steps, &[&observer], |k, psi| {
        if failure.borrow().is_some() {
            return;
        }
        log::info!("step {k}/{}", r.n_steps);
        if let Err(e) = per_step(k, psi) {
            *failure.borrow_mut() = Some(e);
        }
    })?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    files.push("snapshots/".into());
    if m.n_shots > 0 {
        files.push("shots/".into());
    }
    let columns: Vec<String> = ["step", "t", "norm", "energy"]
        .iter()
        .map(|s| s.to_string())
        .chain(series.columns.iter().cloned())
        .collect();
    series.metadata = serde_json::json!({
        "config_hash": config.hash(),
        "preset": config.run.preset,
        "note": TIME_STEP_NOTE,
        "sector_dim": sector.len(),
        "columns": columns,
    });
    write(out, "timeseries.csv", series.to_csv(), &mut files)?;
    write(out, "timeseries.json", series.to_json(), &mut files)?;
    let estimates = estimates.into_inner();
    let retention = retention.into_inner();
    if m.n_shots > 0 {
        write(out, "estimates.csv", estimates_csv(&estimates), &mut files)?;
        write(out, "retention.csv", retention_csv(&retention), &mut files)?;
    }
    files.push("manifest.json".into());
    let mut recorded = config.clone();
    recorded.run.out = None;
    let manifest = Manifest {
        config: recorded,
        config_hash: config.hash(),
        diagnostics,
        geometry_hash: format!("{:016x}", geom.hash64()),
        qubit_count: geom.qubit_count(),
        sector_dim: sector.len(),
        n_steps: r.n_steps,
        dt,
        engine: config.evolution.engine,
        resources,
        note: TIME_STEP_NOTE.into(),
        files,
        version: env!("CARGO_PKG_VERSION").into(),
    };
    fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunOutput {
        dir: out.to_path_buf(),
        manifest,
        series,
        estimates,
        retention,
    })
}
