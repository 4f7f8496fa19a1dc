//! Experiment configuration: TOML sections, presets and validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuits::NoiseModel;
use crate::configspace::{diagonal_path, initial_string_state, Configuration, MoveSet};
use crate::error::{QlmError, Result};
use crate::hamiltonian::{confinement_margin, resonance_order, CouplingParameters, Resonance};
use crate::lattice::{LatticeGeometry, Site};
use crate::shots::PostSelectionScheme;

/// Initial string: `"diagonal"` or an explicit list of link qubits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathSpec {
    Named(String),
    Links(Vec<usize>),
}

impl Default for PathSpec {
    fn default() -> Self {
        PathSpec::Named("diagonal".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub lx: usize,
    pub ly: usize,
    /// `[x, y]`; defaults to `[0, 0]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_even: Option<[usize; 2]>,
    /// `[x, y]`; defaults to the first odd corner.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub static_odd: Option<[usize; 2]>,
    #[serde(default)]
    pub path: PathSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Krylov,
    Trotter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionSection {
    pub engine: EngineKind,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_tol")]
    pub krylov_tol: f64,
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSection {
    #[serde(default)]
    pub n_shots: usize,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default)]
    pub schemes: Vec<PostSelectionScheme>,
}

impl Default for MeasurementSection {
    fn default() -> Self {
        Self {
            n_shots: 0,
            noise: NoiseModel::NONE,
            schemes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default)]
    pub seed: u64,
    /// Output directory; not part of the config hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Preset the config was derived from, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 0,
            out: None,
            preset: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSection,
    pub params: CouplingParameters,
    pub evolution: EvolutionSection,
    #[serde(default)]
    pub measurement: MeasurementSection,
    #[serde(default)]
    pub run: RunSection,
}

/// The four named parameter regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4a,
    Fig4b,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Fig2, Preset::Fig3, Preset::Fig4a, Preset::Fig4b];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4a => "fig4a",
            Preset::Fig4b => "fig4b",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| QlmError::Config(format!("unknown preset '{s}' (fig2, fig3, fig4a, fig4b)")))
    }

    /// Resonant 5×4 with `J = 2`; resonant 4×3 with `J = 0`; off-resonant
    /// 5×4 with `J = 2` and `J = 4`. `Δt = 0.1/κ`, 200 shots, typical noise
    /// rates, all three post-selection schemes.
    pub fn config(self) -> ExperimentConfig {
        let (lx, ly, params, n_steps) = match self {
            Preset::Fig2 => (5, 4, CouplingParameters::new(1.0, 3.0, 6.0, 2.0), 20),
            Preset::Fig3 => (4, 3, CouplingParameters::new(1.0, 3.0, 6.0, 0.0), 30),
            Preset::Fig4a => (5, 4, CouplingParameters::new(1.0, 5.0, 5.0, 2.0), 20),
            Preset::Fig4b => (5, 4, CouplingParameters::new(1.0, 5.0, 5.0, 4.0), 20),
        };
        ExperimentConfig {
            lattice: LatticeSection {
                lx,
                ly,
                static_even: None,
                static_odd: None,
                path: PathSpec::default(),
            },
            params,
            evolution: EvolutionSection {
                engine: EngineKind::Krylov,
                dt: 0.1 / params.kappa,
                n_steps: Some(n_steps),
                t_max: None,
                krylov_tol: default_tol(),
            },
            measurement: MeasurementSection {
                n_shots: 200,
                noise: NoiseModel {
                    p1q: 3e-5,
                    p2q: 1e-3,
                    p_readout: 0.0,
                },
                schemes: PostSelectionScheme::ALL.to_vec(),
            },
            run: RunSection {
                seed: 1,
                out: None,
                preset: Some(self.name().into()),
            },
        }
    }
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Everything derived from a validated config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub geom: LatticeGeometry,
    pub path: Vec<usize>,
    pub initial: Configuration,
    pub moves: MoveSet,
    pub n_steps: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub resonance: Resonance,
    pub confinement_margin: f64,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| QlmError::Config(e.to_string()))
    }

    /// Preset (if any) overlaid with the TOML text (if any).
    pub fn load(preset: Option<Preset>, text: Option<&str>) -> Result<Self> {
        match (preset, text) {
            (None, None) => Err(QlmError::Config("either a config file or a preset is required".into())),
            (None, Some(t)) => Self::from_toml(t),
            (Some(p), None) => Ok(p.config()),
            (Some(p), Some(t)) => {
                let mut base = toml::Value::try_from(p.config()).map_err(|e| QlmError::Config(e.to_string()))?;
                let over: toml::Value = toml::from_str(t).map_err(|e| QlmError::Config(e.to_string()))?;
                merge(&mut base, over);
                base.try_into().map_err(|e: toml::de::Error| QlmError::Config(e.to_string()))
            }
        }
    }

    pub fn load_file(preset: Option<Preset>, path: Option<&Path>) -> Result<Self> {
        let text = path.map(std::fs::read_to_string).transpose()?;
        Self::load(preset, text.as_deref())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form with the output directory removed.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.run.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            resonance: resonance_order(&self.params),
            confinement_margin: confinement_margin(&self.params),
        }
    }

    /// Checks every field against the geometry and derives the run inputs.
    pub fn resolve(&self) -> Result<Resolved> {
        let l = &self.lattice;
        let geom = match (l.static_even, l.static_odd) {
            (None, None) => LatticeGeometry::with_opposite_corners(l.lx, l.ly)?,
            (e, o) => {
                let fallback = LatticeGeometry::with_opposite_corners(l.lx, l.ly).ok();
                let e = e.map(|[x, y]| Site::new(x, y)).unwrap_or(Site::new(0, 0));
                let o = match o {
                    Some([x, y]) => Site::new(x, y),
                    None => fallback
                        .map(|g| g.static_odd())
                        .ok_or_else(|| QlmError::Config("static_odd is required for this lattice".into()))?,
                };
                LatticeGeometry::new(l.lx, l.ly, e, o)?
            }
        };
        let path = match &l.path {
            PathSpec::Named(n) if n == "diagonal" => diagonal_path(&geom),
            PathSpec::Named(n) => return Err(QlmError::Config(format!("unknown path spec '{n}'"))),
            PathSpec::Links(v) => v.clone(),
        };
        let (initial, _) = initial_string_state(&geom, &path)?;
        let p = &self.params;
        if ![p.kappa, p.mass, p.efield, p.plaq].iter().all(|v| v.is_finite()) {
            return Err(QlmError::Config("couplings must be finite".into()));
        }
        let e = &self.evolution;
        if !(e.dt.is_finite() && e.dt > 0.0) {
            return Err(QlmError::Config(format!("dt must be positive, got {}", e.dt)));
        }
        if !(e.krylov_tol > 0.0) {
            return Err(QlmError::Config("krylov_tol must be positive".into()));
        }
        let n_steps = match (e.n_steps, e.t_max) {
            (Some(n), None) => n,
            (None, Some(t)) if t >= 0.0 => (t / e.dt).round() as usize,
            (None, Some(t)) => return Err(QlmError::Config(format!("t_max must be nonnegative, got {t}"))),
            (Some(_), Some(_)) => return Err(QlmError::Config("give n_steps or t_max, not both".into())),
            (None, None) => return Err(QlmError::Config("n_steps or t_max is required".into())),
        };
        self.measurement.noise.validate()?;
        let moves = if p.plaq == 0.0 { MoveSet::HOPPING } else { MoveSet::ALL };
        Ok(Resolved {
            geom,
            path,
            initial,
            moves,
            n_steps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve() {
        for p in Preset::ALL {
            let c = p.config();
            let r = c.resolve().unwrap();
            assert_eq!(r.path.len(), r.geom.static_even().manhattan(r.geom.static_odd()));
            assert_eq!(Preset::parse(p.name()).unwrap(), p);
        }
        assert_eq!(Preset::Fig3.config().resolve().unwrap().moves, MoveSet::HOPPING);
    }

    #[test]
    fn toml_round_trip_and_overlay() {
        let c = Preset::Fig2.config();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        let o = ExperimentConfig::load(Some(Preset::Fig2), Some("[params]\nplaq = 4.0\n[run]\nseed = 9\n")).unwrap();
        assert_eq!(o.params.plaq, 4.0);
        assert_eq!(o.params.mass, 3.0);
        assert_eq!(o.run.seed, 9);
    }

    #[test]
    fn hash_ignores_output_dir_only() {
        let a = Preset::Fig3.config();
        let mut b = a.clone();
        b.run.out = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.evolution.dt = 0.05;
        assert_ne!(a.hash(), b.hash());
        let mut c = a.clone();
        c.measurement.noise.p_readout = 0.01;
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = Preset::Fig3.config();
        c.evolution.dt = 0.0;
        assert!(c.resolve().is_err());
        let mut c = Preset::Fig3.config();
        c.lattice.path = PathSpec::Links(vec![12, 13]);
        assert!(c.resolve().is_err());
        let mut c = Preset::Fig3.config();
        c.evolution.t_max = Some(1.0);
        assert!(c.resolve().is_err());
        assert!(ExperimentConfig::from_toml("[lattice]\nlx = 4\n").is_err());
        assert!(ExperimentConfig::load(None, None).is_err());
        assert!(Preset::parse("fig5").is_err());
    }
}
