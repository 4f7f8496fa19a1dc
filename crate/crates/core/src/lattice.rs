//! Open-boundary square lattice: site/link/plaquette indexing and staggering.
//!
//! Qubit layout is fixed as: matter block, then x-link block, then y-link
//! block, each row-major (`j_y` outer, `j_x` inner). Coordinates are 0-based
//! with `x` running along columns and `y` along rows.

use serde::{Deserialize, Serialize};

use crate::error::{QlmError, Result};

/// Site coordinate `(j_x, j_y)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub x: usize,
    pub y: usize,
}

impl Site {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn is_even(self) -> bool {
        (self.x + self.y) % 2 == 0
    }

    /// `s_j = (-1)^(j_x + j_y)`.
    pub fn sign(self) -> i32 {
        if self.is_even() {
            1
        } else {
            -1
        }
    }

    pub fn manhattan(self, other: Site) -> usize {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }
}

impl std::fmt::Display for Site {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    X,
    Y,
}

/// A link between `site` and `site + e_dir`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Link {
    pub site: Site,
    pub dir: Direction,
    /// Global qubit index.
    pub qubit: usize,
}

impl Link {
    /// The far endpoint `site + e_dir`.
    pub fn head(&self) -> Site {
        match self.dir {
            Direction::X => Site::new(self.site.x + 1, self.site.y),
            Direction::Y => Site::new(self.site.x, self.site.y + 1),
        }
    }

    /// Returns `(even endpoint, odd endpoint)`.
    pub fn even_odd(&self) -> (Site, Site) {
        if self.site.is_even() {
            (self.site, self.head())
        } else {
            (self.head(), self.site)
        }
    }
}

/// Plaquette anchored at its lower-left site; link qubits in the order
/// bottom, right, top, left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Plaquette {
    pub anchor: Site,
    pub links: [usize; 4],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeGeometry {
    lx: usize,
    ly: usize,
    static_even: Site,
    static_odd: Site,
    links: Vec<Link>,
    plaquettes: Vec<Plaquette>,
}

impl LatticeGeometry {
    /// Builds an `lx × ly` lattice with static charges at two corners.
    pub fn new(lx: usize, ly: usize, static_even: Site, static_odd: Site) -> Result<Self> {
        if lx < 2 || ly < 2 {
            return Err(QlmError::Geometry(format!(
                "lattice extents must be at least 2x2, got {lx}x{ly}"
            )));
        }
        let is_corner = |s: Site| (s.x == 0 || s.x == lx - 1) && (s.y == 0 || s.y == ly - 1);
        for s in [static_even, static_odd] {
            if !is_corner(s) {
                return Err(QlmError::Geometry(format!(
                    "static charge at {s} is not a corner of the {lx}x{ly} lattice"
                )));
            }
        }
        if static_even == static_odd {
            return Err(QlmError::Geometry("static charges must sit on distinct sites".into()));
        }
        if !static_even.is_even() {
            return Err(QlmError::Geometry(format!(
                "static_even {static_even} has odd parity"
            )));
        }
        if static_odd.is_even() {
            return Err(QlmError::Geometry(format!(
                "static_odd {static_odd} has even parity"
            )));
        }

        let n_matter = lx * ly;
        let n_xlinks = (lx - 1) * ly;
        let mut links = Vec::with_capacity(n_xlinks + lx * (ly - 1));
        for y in 0..ly {
            for x in 0..lx - 1 {
                links.push(Link {
                    site: Site::new(x, y),
                    dir: Direction::X,
                    qubit: n_matter + y * (lx - 1) + x,
                });
            }
        }
        for y in 0..ly - 1 {
            for x in 0..lx {
                links.push(Link {
                    site: Site::new(x, y),
                    dir: Direction::Y,
                    qubit: n_matter + n_xlinks + y * lx + x,
                });
            }
        }

        let mut geom = Self {
            lx,
            ly,
            static_even,
            static_odd,
            links,
            plaquettes: Vec::new(),
        };
        let mut plaquettes = Vec::with_capacity((lx - 1) * (ly - 1));
        for y in 0..ly - 1 {
            for x in 0..lx - 1 {
                let j = Site::new(x, y);
                plaquettes.push(Plaquette {
                    anchor: j,
                    links: [
                        geom.link_qubit(j, Direction::X).unwrap(),
                        geom.link_qubit(Site::new(x + 1, y), Direction::Y).unwrap(),
                        geom.link_qubit(Site::new(x, y + 1), Direction::X).unwrap(),
                        geom.link_qubit(j, Direction::Y).unwrap(),
                    ],
                });
            }
        }
        geom.plaquettes = plaquettes;
        Ok(geom)
    }

    /// The conventional setup: even charge at `(0,0)`, odd charge at the
    /// nearest opposite corner of odd parity.
    pub fn with_opposite_corners(lx: usize, ly: usize) -> Result<Self> {
        let (xm, ym) = (lx.saturating_sub(1), ly.saturating_sub(1));
        let odd = [Site::new(xm, ym), Site::new(xm, 0), Site::new(0, ym)]
            .into_iter()
            .find(|s| !s.is_even())
            .ok_or_else(|| {
                QlmError::Geometry(format!("{lx}x{ly} lattice has no odd-parity corner"))
            })?;
        Self::new(lx, ly, Site::new(0, 0), odd)
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn static_even(&self) -> Site {
        self.static_even
    }

    pub fn static_odd(&self) -> Site {
        self.static_odd
    }

    pub fn n_sites(&self) -> usize {
        self.lx * self.ly
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn qubit_count(&self) -> usize {
        self.n_sites() + self.n_links()
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    pub fn contains(&self, j: Site) -> bool {
        j.x < self.lx && j.y < self.ly
    }

    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.ly).flat_map(move |y| (0..self.lx).map(move |x| Site::new(x, y)))
    }

    pub fn matter_qubit(&self, j: Site) -> usize {
        debug_assert!(self.contains(j));
        j.y * self.lx + j.x
    }

    pub fn site_of_matter_qubit(&self, q: usize) -> Site {
        Site::new(q % self.lx, q / self.lx)
    }

    /// Qubit of link `(j, dir)`, or `None` if the link leaves the lattice.
    pub fn link_qubit(&self, j: Site, dir: Direction) -> Option<usize> {
        if !self.contains(j) {
            return None;
        }
        match dir {
            Direction::X if j.x + 1 < self.lx => {
                Some(self.n_sites() + j.y * (self.lx - 1) + j.x)
            }
            Direction::Y if j.y + 1 < self.ly => {
                Some(self.n_sites() + (self.lx - 1) * self.ly + j.y * self.lx + j.x)
            }
            _ => None,
        }
    }

    /// Link record for a link qubit index.
    pub fn link_by_qubit(&self, q: usize) -> Option<&Link> {
        q.checked_sub(self.n_sites()).and_then(|i| self.links.get(i))
    }

    /// Link connecting two nearest-neighbour sites, in either order.
    pub fn link_between(&self, a: Site, b: Site) -> Option<usize> {
        let (lo, hi) = if (a.x, a.y) <= (b.x, b.y) { (a, b) } else { (b, a) };
        if hi.y == lo.y && hi.x == lo.x + 1 {
            self.link_qubit(lo, Direction::X)
        } else if hi.x == lo.x && hi.y == lo.y + 1 {
            self.link_qubit(lo, Direction::Y)
        } else {
            None
        }
    }

    /// Link qubits incident on `j`.
    pub fn incident_links(&self, j: Site) -> Vec<usize> {
        let mut out = Vec::with_capacity(4);
        out.extend(self.link_qubit(j, Direction::X));
        out.extend(self.link_qubit(j, Direction::Y));
        if j.x > 0 {
            out.extend(self.link_qubit(Site::new(j.x - 1, j.y), Direction::X));
        }
        if j.y > 0 {
            out.extend(self.link_qubit(Site::new(j.x, j.y - 1), Direction::Y));
        }
        out
    }

    /// Staggering sign: `s_{j,e_x} = +1`, `s_{j,e_y} = (-1)^{j_x}`, and the
    /// site sign `s_j = (-1)^{j_x + j_y}` when `dir` is `None`.
    pub fn staggering(&self, j: Site, dir: Option<Direction>) -> i32 {
        match dir {
            None => j.sign(),
            Some(Direction::X) => 1,
            Some(Direction::Y) => {
                if j.x % 2 == 0 {
                    1
                } else {
                    -1
                }
            }
        }
    }

    /// Stable 64-bit fingerprint of the geometry (extents and static sites).
    pub fn hash64(&self) -> u64 {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for v in [
            self.lx,
            self.ly,
            self.static_even.x,
            self.static_even.y,
            self.static_odd.x,
            self.static_odd.y,
        ] {
            h.update((v as u64).to_le_bytes());
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().unwrap())
    }

    pub fn summary(&self) -> GeometrySummary {
        GeometrySummary {
            lx: self.lx,
            ly: self.ly,
            qubit_count: self.qubit_count(),
            static_even: self.static_even,
            static_odd: self.static_odd,
            matter: self.sites().map(|j| (j, self.matter_qubit(j))).collect(),
            links: self.links.clone(),
            plaquettes: self.plaquettes.clone(),
            hash: format!("{:016x}", self.hash64()),
        }
    }
}

/// JSON-exportable view of a geometry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub lx: usize,
    pub ly: usize,
    pub qubit_count: usize,
    pub static_even: Site,
    pub static_odd: Site,
    pub matter: Vec<(Site, usize)>,
    pub links: Vec<Link>,
    pub plaquettes: Vec<Plaquette>,
    pub hash: String,
}
