//! Torus geometry and the checkerboard edge typing.
//!
//! Sites are `(x, y)` with `0 <= x, y < N` and row-major index `y * N + x`.
//! The horizontal edge from `(x, y)` to `(x + 1, y)` is an x-edge iff `x` is
//! even; the vertical edge from `(x, y)` to `(x, y + 1)` is an x-edge iff `y`
//! is even. With this rule the plaquette whose lower-left corner has both
//! coordinates even has four x-edges, both odd gives four z-edges, and every
//! other plaquette has two of each.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub x: usize,
    pub y: usize,
}

impl Site {
    pub const fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }
}

impl From<(usize, usize)> for Site {
    fn from((x, y): (usize, usize)) -> Self {
        Self { x, y }
    }
}

/// Lattice direction of an edge leaving a site in the positive sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Horizontal,
    Vertical,
}

/// Which spin component an edge couples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeType {
    X,
    Z,
}

impl EdgeType {
    #[inline]
    fn from_parity(coordinate: usize) -> Self {
        if coordinate.is_multiple_of(2) {
            EdgeType::X
        } else {
            EdgeType::Z
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlaquetteKind {
    PureX,
    PureZ,
    Mixed,
}

impl PlaquetteKind {
    pub fn of_corner(x: usize, y: usize) -> Self {
        match (x % 2, y % 2) {
            (0, 0) => PlaquetteKind::PureX,
            (1, 1) => PlaquetteKind::PureZ,
            _ => PlaquetteKind::Mixed,
        }
    }
}

/// One edge, stored once, oriented in the positive lattice direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub kind: EdgeType,
}

/// An even `N x N` torus with precomputed adjacency.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusLattice {
    n: usize,
    // per site: +x, -x, +y, -y neighbours with the type of the connecting edge
    adjacency: Vec<[(u32, EdgeType); 4]>,
}

impl TorusLattice {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidLatticeSize(n));
        }
        let mut adjacency = Vec::with_capacity(n * n);
        for y in 0..n {
            for x in 0..n {
                let xp = (x + 1) % n;
                let xm = (x + n - 1) % n;
                let yp = (y + 1) % n;
                let ym = (y + n - 1) % n;
                adjacency.push([
                    ((y * n + xp) as u32, EdgeType::from_parity(x)),
                    ((y * n + xm) as u32, EdgeType::from_parity(xm)),
                    ((yp * n + x) as u32, EdgeType::from_parity(y)),
                    ((ym * n + x) as u32, EdgeType::from_parity(ym)),
                ]);
            }
        }
        Ok(Self { n, adjacency })
    }

    /// Linear size `N`.
    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    /// Number of sites `N^2`.
    #[inline]
    pub fn site_count(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn index(&self, site: Site) -> usize {
        site.y * self.n + site.x
    }

    #[inline]
    pub fn site(&self, index: usize) -> Site {
        Site::new(index % self.n, index / self.n)
    }

    pub fn check(&self, site: Site) -> Result<()> {
        if site.x < self.n && site.y < self.n {
            Ok(())
        } else {
            Err(Error::SiteOutOfRange {
                x: site.x,
                y: site.y,
                n: self.n,
            })
        }
    }

    /// Type of the edge leaving `site` in the positive `axis` direction.
    pub fn edge_type(&self, site: Site, axis: Axis) -> Result<EdgeType> {
        self.check(site)?;
        Ok(match axis {
            Axis::Horizontal => EdgeType::from_parity(site.x),
            Axis::Vertical => EdgeType::from_parity(site.y),
        })
    }

    pub fn plaquette_kind(&self, corner: Site) -> Result<PlaquetteKind> {
        self.check(corner)?;
        Ok(PlaquetteKind::of_corner(corner.x, corner.y))
    }

    /// The four neighbours of `site` (right, left, up, down) with edge types.
    pub fn neighbors(&self, site: Site) -> Result<[(Site, EdgeType); 4]> {
        self.check(site)?;
        let adj = &self.adjacency[self.index(site)];
        Ok(adj.map(|(j, t)| (self.site(j as usize), t)))
    }

    /// Neighbour indices and edge types of site `index`, without range checks.
    #[inline]
    pub fn adjacency(&self, index: usize) -> &[(u32, EdgeType); 4] {
        &self.adjacency[index]
    }

    /// All `2 N^2` edges, each once: the `+e1` and `+e2` edge of every site.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.site_count()).flat_map(move |i| {
            let adj = &self.adjacency[i];
            [
                Edge {
                    from: i,
                    to: adj[0].0 as usize,
                    kind: adj[0].1,
                },
                Edge {
                    from: i,
                    to: adj[2].0 as usize,
                    kind: adj[2].1,
                },
            ]
        })
    }

    /// Site indices `r, r+e1, r+e2, r+e1+e2` of the plaquette at `corner`.
    #[inline]
    pub fn plaquette_sites(&self, corner: usize) -> [usize; 4] {
        let right = self.adjacency[corner][0].0 as usize;
        let up = self.adjacency[corner][2].0 as usize;
        let diag = self.adjacency[right][2].0 as usize;
        [corner, right, up, diag]
    }

    /// The four edges of the plaquette at `corner`, in the order
    /// `(r, r+e1)`, `(r, r+e2)`, `(r+e1, r+e1+e2)`, `(r+e2, r+e1+e2)`.
    pub fn plaquette_edges(&self, corner: usize) -> [Edge; 4] {
        let [r, right, up, diag] = self.plaquette_sites(corner);
        let horizontal = self.adjacency[r][0].1;
        let vertical = self.adjacency[r][2].1;
        [
            Edge {
                from: r,
                to: right,
                kind: horizontal,
            },
            Edge {
                from: r,
                to: up,
                kind: vertical,
            },
            Edge {
                from: right,
                to: diag,
                kind: vertical,
            },
            Edge {
                from: up,
                to: diag,
                kind: horizontal,
            },
        ]
    }

    #[inline]
    pub fn plaquette_kind_at(&self, corner: usize) -> PlaquetteKind {
        PlaquetteKind::of_corner(corner % self.n, corner / self.n)
    }

    /// Corner indices of all pure plaquettes of the given type, row-major.
    pub fn pure_corners(&self, kind: EdgeType) -> impl Iterator<Item = usize> + '_ {
        let offset = match kind {
            EdgeType::X => 0,
            EdgeType::Z => 1,
        };
        let half = self.n / 2;
        (0..half * half).map(move |k| {
            let x = 2 * (k % half) + offset;
            let y = 2 * (k / half) + offset;
            y * self.n + x
        })
    }
}
