//! Matter and link one-point observables, region charges, snapshot grids
//! and shot-based estimators.

use serde::{Deserialize, Serialize};

use crate::circuits::ShotTable;
use crate::configspace::SectorBasis;
use crate::dynamics::StateVector;
use crate::error::{QlmError, Result};
use crate::lattice::{Direction, LatticeGeometry, Site};
use crate::strings::StringPath;

/// `P(bit q = 1)` for every qubit of the register.
pub fn bit_marginals(geom: &LatticeGeometry, psi: &StateVector, sector: &SectorBasis) -> Result<Vec<f64>> {
    if psi.dim() != sector.len() {
        return Err(QlmError::Dimension {
            expected: sector.len(),
            got: psi.dim(),
        });
    }
    let n = geom.qubit_count();
    let (states, amps) = (sector.states(), psi.amplitudes());
    Ok(crate::par::sum_vec(states.len(), n, |i, acc| {
        let p = amps[i].norm_sqr();
        let mut bits = states[i];
        while bits != 0 {
            acc[bits.trailing_zeros() as usize] += p;
            bits &= bits - 1;
        }
    }))
}

/// Excitation density `n(j)` per site, indexed by matter qubit.
pub fn charge_density(geom: &LatticeGeometry, psi: &StateVector, sector: &SectorBasis) -> Result<Vec<f64>> {
    let mut m = bit_marginals(geom, psi, sector)?;
    m.truncate(geom.n_sites());
    Ok(m)
}

/// `⟨G_j⟩` per site from bit marginals; `G_j` is linear in the bits.
pub fn gauss_expectation(geom: &LatticeGeometry, marginals: &[f64]) -> Vec<f64> {
    let sz = |q: usize| 0.5 - marginals[q];
    geom.sites()
        .map(|j| {
            let mut g = f64::from(j.sign()) * marginals[geom.matter_qubit(j)];
            for l in geom.links() {
                if l.site == j {
                    g -= sz(l.qubit);
                } else if l.head() == j {
                    g += sz(l.qubit);
                }
            }
            g
        })
        .collect()
}

/// Signed charge `ρ(j) = (−1)^{j_x+j_y} n(j)`.
pub fn signed_charge(geom: &LatticeGeometry, density: &[f64]) -> Vec<f64> {
    density
        .iter()
        .enumerate()
        .map(|(q, &n)| f64::from(geom.site_of_matter_qubit(q).sign()) * n)
        .collect()
}

/// `⟨S^z⟩` per link, indexed like `geom.links()`.
pub fn link_sz(geom: &LatticeGeometry, psi: &StateVector, sector: &SectorBasis) -> Result<Vec<f64>> {
    let m = bit_marginals(geom, psi, sector)?;
    Ok(geom.links().iter().map(|l| 0.5 - m[l.qubit]).collect())
}

/// Site subsets for region charges. Static-charge sites never count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    /// Sites touched by the string.
    OnString(StringPath),
    /// Sites not touched by the string.
    OffString(StringPath),
    Total,
    Sites(Vec<Site>),
}

impl Region {
    pub fn sites(&self, geom: &LatticeGeometry) -> Vec<Site> {
        let on = |p: &StringPath| -> Vec<Site> {
            let mut s: Vec<Site> = p
                .links
                .iter()
                .filter_map(|&q| geom.link_by_qubit(q))
                .flat_map(|l| [l.site, l.head()])
                .collect();
            s.sort_by_key(|j| geom.matter_qubit(*j));
            s.dedup();
            s
        };
        let all: Vec<Site> = geom.sites().collect();
        let chosen = match self {
            Region::OnString(p) => on(p),
            Region::OffString(p) => {
                let touched = on(p);
                all.into_iter().filter(|j| !touched.contains(j)).collect()
            }
            Region::Total => all,
            Region::Sites(s) => s.clone(),
        };
        chosen
            .into_iter()
            .filter(|&j| geom.contains(j) && j != geom.static_even() && j != geom.static_odd())
            .collect()
    }
}

/// `Q_S = Σ_{j∈S} n(j)` from a density vector.
pub fn region_charge(geom: &LatticeGeometry, density: &[f64], region: &Region) -> f64 {
    region.sites(geom).iter().map(|&j| density[geom.matter_qubit(j)]).sum()
}

/// `(Q_on, Q_off, Q_tot)` relative to a string.
pub fn string_region_charges(geom: &LatticeGeometry, density: &[f64], path: &StringPath) -> (f64, f64, f64) {
    (
        region_charge(geom, density, &Region::OnString(path.clone())),
        region_charge(geom, density, &Region::OffString(path.clone())),
        region_charge(geom, density, &Region::Total),
    )
}

/// Densities and link fields at one time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotGrid {
    pub step: usize,
    pub t: f64,
    pub lx: usize,
    pub ly: usize,
    /// Row-major `n(j)`.
    pub density: Vec<f64>,
    /// `⟨S^z⟩` per link, in link order.
    pub link_sz: Vec<f64>,
    /// `(site, direction)` of each link.
    pub links: Vec<(Site, Direction)>,
}

impl SnapshotGrid {
    pub fn capture(geom: &LatticeGeometry, psi: &StateVector, sector: &SectorBasis, step: usize, t: f64) -> Result<Self> {
        let m = bit_marginals(geom, psi, sector)?;
        Ok(Self {
            step,
            t,
            lx: geom.lx(),
            ly: geom.ly(),
            density: m[..geom.n_sites()].to_vec(),
            link_sz: geom.links().iter().map(|l| 0.5 - m[l.qubit]).collect(),
            links: geom.links().iter().map(|l| (l.site, l.dir)).collect(),
        })
    }

    /// Rows `kind,x,y,dir,value`: one `site` row per site (`n`), one
    /// `link` row per link (`⟨S^z⟩`, direction `x` or `y`).
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,x,y,dir,value\n");
        for (q, n) in self.density.iter().enumerate() {
            s.push_str(&format!("site,{},{},,{n:?}\n", q % self.lx, q / self.lx));
        }
        for ((j, d), v) in self.links.iter().zip(&self.link_sz) {
            let d = if *d == Direction::X { "x" } else { "y" };
            s.push_str(&format!("link,{},{},{d},{v:?}\n", j.x, j.y));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serializes")
    }
}

/// What to average over shots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ShotObservable {
    /// Indicator that every link of the path is down.
    StringIndicator(StringPath),
    /// Indicator of one qubit being 1.
    Bit(usize),
    /// Number of excitations on a set of matter qubits.
    Occupation(Vec<usize>),
    /// `S^z` of one link qubit.
    LinkSz(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    /// `|self − reference|` with independent errors added in quadrature.
    pub fn deviation(&self, reference: &Estimate) -> Estimate {
        Estimate {
            value: (self.value - reference.value).abs(),
            stderr: self.stderr.hypot(reference.stderr),
        }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, stderr: 0.0 }
    }
}

/// Sample mean over shots. Indicators use `sqrt(p̂(1−p̂)/N)`, other
/// observables the sample standard error.
pub fn estimate_from_shots(shots: &ShotTable, obs: &ShotObservable) -> Result<Estimate> {
    let n = shots.total();
    if n == 0 {
        return Err(QlmError::EmptyShots);
    }
    let nf = n as f64;
    let value_of = |c: u64| -> f64 {
        match obs {
            ShotObservable::StringIndicator(p) => {
                let m = p.mask();
                f64::from(u8::from(c & m == m))
            }
            ShotObservable::Bit(q) => (c >> q & 1) as f64,
            ShotObservable::Occupation(qs) => qs.iter().map(|&q| (c >> q & 1) as f64).sum(),
            ShotObservable::LinkSz(q) => 0.5 - (c >> q & 1) as f64,
        }
    };
    let (s1, s2) = shots.iter().fold((0.0, 0.0), |(a, b), (c, k)| {
        let v = value_of(c.0);
        (a + k as f64 * v, b + k as f64 * v * v)
    });
    let mean = s1 / nf;
    let stderr = match obs {
        ShotObservable::StringIndicator(_) | ShotObservable::Bit(_) => (mean * (1.0 - mean) / nf).max(0.0).sqrt(),
        _ if n > 1 => ((s2 - nf * mean * mean).max(0.0) / (nf - 1.0) / nf).sqrt(),
        _ => 0.0,
    };
    Ok(Estimate { value: mean, stderr })
}
