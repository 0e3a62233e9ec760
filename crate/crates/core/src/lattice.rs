//! Periodic square-lattice geometry with one qudit per edge, the vertex and
//! plaquette stabilizers, and anyon transport strings.
//!
//! Coordinates: `x` grows eastward, `y` grows southward, both periodic.
//! Vertex `(x, y)` has id `y·Lx + x`. Plaquette `(x, y)` has its north-west
//! corner at vertex `(x, y)` and the same id. Horizontal edge `h(x, y)` joins
//! vertex `(x, y)` to `(x+1, y)` and has id `y·Lx + x`; vertical edge
//! `v(x, y)` joins `(x, y)` to `(x, y+1)` and has id `Lx·Ly + y·Lx + x`.
//!
//! Spins around a site are numbered clockwise from the top:
//! vertex `(north, east, south, west) = (v(x,y-1), h(x,y), v(x,y), h(x-1,y))`,
//! plaquette `(top, east, bottom, west) = (h(x,y), v(x+1,y), h(x,y+1), v(x,y))`.
//! `A(v) = X1† X2† X3 X4` and `B(p) = Z1† Z2 Z3 Z4†`.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::algebra::{check_dim, PauliOperator};
use crate::error::{Error, Result};

/// Vertices carry charges `e_g`, plaquettes carry fluxes `m_g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKind {
    Vertex,
    Plaquette,
}

impl SiteKind {
    pub fn other(self) -> Self {
        match self {
            SiteKind::Vertex => SiteKind::Plaquette,
            SiteKind::Plaquette => SiteKind::Vertex,
        }
    }
}

impl fmt::Display for SiteKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SiteKind::Vertex => "vertex",
            SiteKind::Plaquette => "plaquette",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Clockwise,
    Anticlockwise,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeDirection {
    Horizontal,
    Vertical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    lx: usize,
    ly: usize,
    d: u32,
}

impl LatticeGeometry {
    pub fn new(lx: usize, ly: usize, d: u32) -> Result<Self> {
        check_dim(d)?;
        if lx < 2 || ly < 2 {
            return Err(Error::Config(format!("lattice must be at least 2x2, got {lx}x{ly}")));
        }
        Ok(Self { lx, ly, d })
    }

    pub fn lx(&self) -> usize {
        self.lx
    }

    pub fn ly(&self) -> usize {
        self.ly
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn num_edges(&self) -> usize {
        2 * self.lx * self.ly
    }

    pub fn num_sites(&self, _kind: SiteKind) -> usize {
        self.lx * self.ly
    }

    fn wrap(&self, x: i64, y: i64) -> (usize, usize) {
        (x.rem_euclid(self.lx as i64) as usize, y.rem_euclid(self.ly as i64) as usize)
    }

    pub fn vertex(&self, x: i64, y: i64) -> usize {
        let (x, y) = self.wrap(x, y);
        y * self.lx + x
    }

    pub fn plaquette(&self, x: i64, y: i64) -> usize {
        self.vertex(x, y)
    }

    pub fn site(&self, _kind: SiteKind, x: i64, y: i64) -> usize {
        self.vertex(x, y)
    }

    /// `(x, y)` of a vertex or plaquette id.
    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.lx, site / self.lx)
    }

    pub fn h_edge(&self, x: i64, y: i64) -> usize {
        let (x, y) = self.wrap(x, y);
        y * self.lx + x
    }

    pub fn v_edge(&self, x: i64, y: i64) -> usize {
        let (x, y) = self.wrap(x, y);
        self.lx * self.ly + y * self.lx + x
    }

    pub fn edge_info(&self, e: usize) -> (EdgeDirection, usize, usize) {
        let n = self.lx * self.ly;
        if e < n {
            (EdgeDirection::Horizontal, e % self.lx, e / self.lx)
        } else {
            (EdgeDirection::Vertical, (e - n) % self.lx, (e - n) / self.lx)
        }
    }

    pub fn check_site(&self, site: usize) -> Result<()> {
        let limit = self.lx * self.ly;
        if site >= limit {
            return Err(Error::InvalidIndex { index: site, limit });
        }
        Ok(())
    }

    pub fn check_edge(&self, e: usize) -> Result<()> {
        if e >= self.num_edges() {
            return Err(Error::InvalidIndex { index: e, limit: self.num_edges() });
        }
        Ok(())
    }

    /// Edges around a vertex in role order (north, east, south, west).
    pub fn vertex_edges(&self, v: usize) -> [usize; 4] {
        let (x, y) = self.coords(v);
        let (x, y) = (x as i64, y as i64);
        [self.v_edge(x, y - 1), self.h_edge(x, y), self.v_edge(x, y), self.h_edge(x - 1, y)]
    }

    /// Edges around a plaquette in role order (top, east, bottom, west).
    pub fn plaquette_edges(&self, p: usize) -> [usize; 4] {
        let (x, y) = self.coords(p);
        let (x, y) = (x as i64, y as i64);
        [self.h_edge(x, y), self.v_edge(x + 1, y), self.h_edge(x, y + 1), self.v_edge(x, y)]
    }

    pub fn site_edges(&self, kind: SiteKind, site: usize) -> [usize; 4] {
        match kind {
            SiteKind::Vertex => self.vertex_edges(site),
            SiteKind::Plaquette => self.plaquette_edges(site),
        }
    }

    /// The two vertices joined by an edge.
    pub fn edge_vertices(&self, e: usize) -> [usize; 2] {
        let (dir, x, y) = self.edge_info(e);
        let (x, y) = (x as i64, y as i64);
        match dir {
            EdgeDirection::Horizontal => [self.vertex(x, y), self.vertex(x + 1, y)],
            EdgeDirection::Vertical => [self.vertex(x, y), self.vertex(x, y + 1)],
        }
    }

    /// The two plaquettes separated by an edge.
    pub fn edge_plaquettes(&self, e: usize) -> [usize; 2] {
        let (dir, x, y) = self.edge_info(e);
        let (x, y) = (x as i64, y as i64);
        match dir {
            EdgeDirection::Horizontal => [self.plaquette(x, y - 1), self.plaquette(x, y)],
            EdgeDirection::Vertical => [self.plaquette(x - 1, y), self.plaquette(x, y)],
        }
    }

    pub fn edge_sites(&self, kind: SiteKind, e: usize) -> [usize; 2] {
        match kind {
            SiteKind::Vertex => self.edge_vertices(e),
            SiteKind::Plaquette => self.edge_plaquettes(e),
        }
    }

    /// Role (1–4) of edge `e` at a site, if the edge borders it.
    pub fn role(&self, kind: SiteKind, site: usize, e: usize) -> Option<usize> {
        self.site_edges(kind, site).iter().position(|&x| x == e).map(|r| r + 1)
    }

    /// Power of the site's stabilizer on edge `e`: the X power of `A(v)` or the
    /// Z power of `B(p)`, as `-1`, `+1`, or `0` off the boundary.
    pub fn stabilizer_power(&self, kind: SiteKind, site: usize, e: usize) -> i64 {
        match (kind, self.role(kind, site, e)) {
            (_, None) => 0,
            (SiteKind::Vertex, Some(1 | 2)) => -1,
            (SiteKind::Vertex, Some(_)) => 1,
            (SiteKind::Plaquette, Some(1 | 4)) => -1,
            (SiteKind::Plaquette, Some(_)) => 1,
        }
    }

    pub fn vertex_stabilizer(&self, v: usize) -> Result<PauliOperator> {
        self.stabilizer(SiteKind::Vertex, v)
    }

    pub fn plaquette_stabilizer(&self, p: usize) -> Result<PauliOperator> {
        self.stabilizer(SiteKind::Plaquette, p)
    }

    pub fn stabilizer(&self, kind: SiteKind, site: usize) -> Result<PauliOperator> {
        self.check_site(site)?;
        let mut op = PauliOperator::identity(self.num_edges(), self.d)?;
        for e in self.site_edges(kind, site) {
            let power = self.stabilizer_power(kind, site, e);
            let factor = match kind {
                SiteKind::Vertex => PauliOperator::x_on(self.num_edges(), self.d, e, power)?,
                SiteKind::Plaquette => PauliOperator::z_on(self.num_edges(), self.d, e, power)?,
            };
            op = op.compose(&factor)?;
        }
        Ok(op)
    }

    /// Single-edge operator that moves charge (or flux) `g` across `e` into
    /// the site `into`, removing `g` from the site on the other side.
    pub fn transport_step(&self, kind: SiteKind, into: usize, e: usize, g: i64) -> Result<PauliOperator> {
        self.check_edge(e)?;
        let s = self.stabilizer_power(kind, into, e);
        if s == 0 {
            return Err(Error::DisconnectedPath(format!("edge {e} does not border {kind} {into}")));
        }
        let n = self.num_edges();
        match kind {
            // c(A(w), Z_e^t) = -x_A(e)·t must equal g.
            SiteKind::Vertex => PauliOperator::z_on(n, self.d, e, -g * s),
            // c(B(w), X_e^t) = z_B(e)·t must equal g.
            SiteKind::Plaquette => PauliOperator::x_on(n, self.d, e, g * s),
        }
    }

    /// The site across `e` from `site`.
    pub fn across(&self, kind: SiteKind, site: usize, e: usize) -> Option<usize> {
        let [a, b] = self.edge_sites(kind, e);
        if a == site {
            Some(b)
        } else if b == site {
            Some(a)
        } else {
            None
        }
    }

    /// Neighbours of a site as `(edge, site)` in role order.
    pub fn neighbors(&self, kind: SiteKind, site: usize) -> [(usize, usize); 4] {
        self.site_edges(kind, site).map(|e| (e, self.across(kind, site, e).expect("edge borders site")))
    }

    /// Transport `g` from `start` along consecutive edges; returns the string
    /// operator and the site reached.
    pub fn string_along_edges(
        &self,
        kind: SiteKind,
        start: usize,
        edges: &[usize],
        g: i64,
    ) -> Result<(PauliOperator, usize)> {
        self.check_site(start)?;
        let mut op = PauliOperator::identity(self.num_edges(), self.d)?;
        let mut at = start;
        for &e in edges {
            self.check_edge(e)?;
            let next = self
                .across(kind, at, e)
                .ok_or_else(|| Error::DisconnectedPath(format!("edge {e} does not touch {kind} {at}")))?;
            op = op.compose(&self.transport_step(kind, next, e, g)?)?;
            at = next;
        }
        Ok((op, at))
    }

    /// String that carries `e_g` (or `m_g`) from `path[0]` to the last site,
    /// creating `e_g` there and `e_{-g}` at the start when applied to vacuum.
    /// Between consecutive sites joined by several edges the lowest id is used.
    pub fn string_operator(&self, kind: SiteKind, path: &[usize], g: i64) -> Result<PauliOperator> {
        let first = *path.first().ok_or_else(|| Error::DisconnectedPath("empty path".into()))?;
        let mut edges = Vec::with_capacity(path.len());
        for w in path.windows(2) {
            self.check_site(w[1])?;
            let e = self
                .site_edges(kind, w[0])
                .into_iter()
                .filter(|&e| self.across(kind, w[0], e) == Some(w[1]))
                .min()
                .ok_or_else(|| Error::DisconnectedPath(format!("{kind}s {} and {} are not adjacent", w[0], w[1])))?;
            edges.push(e);
        }
        Ok(self.string_along_edges(kind, first, &edges, g)?.0)
    }

    /// Closed path of edges encircling the plaquette (for charges) or vertex
    /// (for fluxes) `center`, starting from its north-west neighbour.
    pub fn loop_edges(&self, kind: SiteKind, center: usize, orientation: Orientation) -> (usize, Vec<usize>) {
        let (x, y) = self.coords(center);
        let (x, y) = (x as i64, y as i64);
        let (start, mut edges) = match kind {
            // A charge circles plaquette `center` through its four corners.
            SiteKind::Vertex => {
                let [top, east, bottom, west] = self.plaquette_edges(center);
                (self.vertex(x, y), vec![top, east, bottom, west])
            }
            // A flux circles vertex `center` through the four plaquettes around it.
            SiteKind::Plaquette => {
                let [north, east, south, west] = self.vertex_edges(center);
                (self.plaquette(x - 1, y - 1), vec![north, east, south, west])
            }
        };
        if orientation == Orientation::Anticlockwise {
            edges.reverse();
        }
        (start, edges)
    }

    /// Transport `g` once around the loop from `loop_edges`.
    pub fn loop_operator(&self, kind: SiteKind, center: usize, g: i64, orientation: Orientation) -> Result<PauliOperator> {
        let (start, edges) = self.loop_edges(kind, center, orientation);
        let (op, end) = self.string_along_edges(kind, start, &edges, g)?;
        debug_assert_eq!(start, end);
        Ok(op)
    }

    /// The two non-contractible charge loops (Z type), along row 0 and column 0.
    pub fn charge_cycles(&self) -> Result<[PauliOperator; 2]> {
        let horizontal: Vec<usize> = (0..self.lx as i64).map(|x| self.h_edge(x, 0)).collect();
        let vertical: Vec<usize> = (0..self.ly as i64).map(|y| self.v_edge(0, y)).collect();
        Ok([
            self.string_along_edges(SiteKind::Vertex, self.vertex(0, 0), &horizontal, 1)?.0,
            self.string_along_edges(SiteKind::Vertex, self.vertex(0, 0), &vertical, 1)?.0,
        ])
    }

    /// Breadth-first shortest path avoiding `blocked` edges. Neighbours are
    /// explored in increasing edge id, so ties resolve deterministically.
    pub fn shortest_path(
        &self,
        kind: SiteKind,
        from: usize,
        to: usize,
        blocked: &dyn Fn(usize) -> bool,
    ) -> Option<Vec<usize>> {
        let n = self.num_sites(kind);
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([from]);
        seen[from] = true;
        while let Some(s) = queue.pop_front() {
            if s == to {
                let mut edges = Vec::new();
                let mut at = to;
                while at != from {
                    let (e, p) = prev[at].expect("visited site has a predecessor");
                    edges.push(e);
                    at = p;
                }
                edges.reverse();
                return Some(edges);
            }
            let mut nbrs = self.neighbors(kind, s);
            nbrs.sort_unstable();
            for (e, t) in nbrs {
                if !seen[t] && !blocked(e) {
                    seen[t] = true;
                    prev[t] = Some((e, s));
                    queue.push_back(t);
                }
            }
        }
        None
    }

    /// Graph distances from `from` to every site, `None` where unreachable.
    pub fn distances_from(&self, kind: SiteKind, from: usize, blocked: &dyn Fn(usize) -> bool) -> Vec<Option<usize>> {
        let n = self.num_sites(kind);
        let mut dist = vec![None; n];
        dist[from] = Some(0);
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            let ds = dist[s].expect("queued sites have distances");
            for (e, t) in self.neighbors(kind, s) {
                if dist[t].is_none() && !blocked(e) {
                    dist[t] = Some(ds + 1);
                    queue.push_back(t);
                }
            }
        }
        dist
    }

    /// Taxicab distance on the torus.
    pub fn taxicab(&self, a: usize, b: usize) -> usize {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let dx = ax.abs_diff(bx);
        let dy = ay.abs_diff(by);
        dx.min(self.lx - dx) + dy.min(self.ly - dy)
    }
}
