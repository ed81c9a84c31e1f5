//! Edwards–Sokal coloring of a coupled pair into three spin configurations,
//! the spin interface sets and an exact Ising oracle for tiny boxes.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::connectivity::{BoundaryCondition, ClusterIndex, Site};
use crate::edge_config::EdgeConfig;
use crate::error::{Error, Result};
use crate::geometry::{BoxGeometry, EdgeId, Side, VertexId};
use crate::interface::{interface_edges, prune_to_minimal};

/// Largest number of free spins accepted by [`exact_ising_distribution`].
pub const MAX_EXACT_SPINS: usize = 16;

/// Edge parameter of the random-cluster representation of the Ising model
/// with `H = -Σ σ(x)σ(y)` at inverse temperature `beta`.
pub fn ising_p(beta: f64) -> f64 {
    1.0 - (-2.0 * beta).exp()
}

pub fn ising_beta(p: f64) -> f64 {
    -(1.0 - p).ln() / 2.0
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoinKind {
    /// Cluster of `Y` joined to neither side.
    Dobrushin,
    /// Interior cluster of `X` made of several clusters of `Y`.
    Merged,
}

/// One fair coin, identified by the smallest vertex of its cluster.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coin {
    pub kind: CoinKind,
    pub cluster_min: VertexId,
    pub spin: i8,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinTriple {
    pub sigma_plus: Vec<i8>,
    pub sigma_minus: Vec<i8>,
    pub sigma_d: Vec<i8>,
    pub coins: Vec<Coin>,
}

fn coin<R: Rng + ?Sized>(rng: &mut R) -> i8 {
    if rng.gen::<bool>() {
        1
    } else {
        -1
    }
}

/// Colors `(x, y)`: `σᴰ` from the clusters of `y` under the Dobrushin
/// boundary, then `σ⁺`/`σ⁻` from the clusters of `x`. Coins are drawn for
/// the `Y` clusters first, then for the merged `X` clusters, each in order of
/// the cluster's smallest vertex.
pub fn color_triple<R: Rng + ?Sized>(geometry: &BoxGeometry, x: &EdgeConfig, y: &EdgeConfig, rng: &mut R) -> Result<SpinTriple> {
    let g = geometry.graph();
    if !x.dominates(y) {
        return Err(Error::InvalidState("X does not dominate Y".into()));
    }
    let yi = ClusterIndex::build(g, y.clone(), BoundaryCondition::TopBottom)?;
    if yi.top_bottom_connected()? {
        return Err(Error::TopBottomConnected);
    }
    let xi = ClusterIndex::build(g, x.clone(), BoundaryCondition::Wired)?;
    color_with_indices(geometry, &xi, &yi, rng)
}

pub(crate) fn color_with_indices<R: Rng + ?Sized>(
    geometry: &BoxGeometry,
    xi: &ClusterIndex<'_>,
    yi: &ClusterIndex<'_>,
    rng: &mut R,
) -> Result<SpinTriple> {
    let g = geometry.graph();
    let n = g.vertex_count();
    let top = yi.site_label(Site::TopGhost)?;
    let bottom = yi.site_label(Site::BottomGhost)?;
    let wired = xi.site_label(Site::WiredGhost)?;
    let mut coins = Vec::new();

    // labels are bounded by the node count of each index
    let mut y_spin: Vec<i8> = vec![0; n + 2];
    y_spin[top as usize] = 1;
    y_spin[bottom as usize] = -1;
    let mut sigma_d = vec![0i8; n];
    for v in g.vertices() {
        let l = yi.cluster_of(v) as usize;
        if y_spin[l] == 0 {
            let s = coin(rng);
            coins.push(Coin {
                kind: CoinKind::Dobrushin,
                cluster_min: v,
                spin: s,
            });
            y_spin[l] = s;
        }
        sigma_d[v.index()] = y_spin[l];
    }

    // an interior X cluster is a single Y cluster iff its vertices share one
    // Y label
    const UNSEEN: u32 = u32::MAX;
    const MIXED: u32 = u32::MAX - 1;
    let mut x_first_y = vec![UNSEEN; n + 1];
    for v in g.vertices() {
        let lx = xi.cluster_of(v) as usize;
        let ly = yi.cluster_of(v);
        match x_first_y[lx] {
            UNSEEN => x_first_y[lx] = ly,
            MIXED => {}
            l if l != ly => x_first_y[lx] = MIXED,
            _ => {}
        }
    }
    let mut x_spin: Vec<i8> = vec![0; n + 1];
    let mut sigma_plus = vec![0i8; n];
    let mut sigma_minus = vec![0i8; n];
    for v in g.vertices() {
        let lx = xi.cluster_of(v);
        if lx == wired {
            sigma_plus[v.index()] = 1;
            sigma_minus[v.index()] = -1;
            continue;
        }
        let s = if x_first_y[lx as usize] == MIXED {
            if x_spin[lx as usize] == 0 {
                let s = coin(rng);
                coins.push(Coin {
                    kind: CoinKind::Merged,
                    cluster_min: v,
                    spin: s,
                });
                x_spin[lx as usize] = s;
            }
            x_spin[lx as usize]
        } else {
            sigma_d[v.index()]
        };
        sigma_plus[v.index()] = s;
        sigma_minus[v.index()] = s;
    }
    // keep the log in draw order: Dobrushin coins were pushed first
    Ok(SpinTriple {
        sigma_plus,
        sigma_minus,
        sigma_d,
        coins,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IsingSets {
    pub p_i: Vec<EdgeId>,
    pub i_i: Vec<EdgeId>,
}

/// Vertices joined to `side` by paths of vertices carrying `spin`.
pub fn agreement_region(geometry: &BoxGeometry, sigma: &[i8], side: Side, spin: i8) -> Vec<bool> {
    let g = geometry.graph();
    let mut seen = vec![false; g.vertex_count()];
    let mut queue = VecDeque::new();
    for v in g.vertices().filter(|&v| g.side(v) == side && sigma[v.index()] == spin) {
        seen[v.index()] = true;
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        for &e in g.incident(v) {
            let w = g.other_end(e, v);
            if !seen[w.index()] && sigma[w.index()] == spin {
                seen[w.index()] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

pub fn ising_interface_sets(geometry: &BoxGeometry, triple: &SpinTriple) -> IsingSets {
    let g = geometry.graph();
    let plus_t = agreement_region(geometry, &triple.sigma_d, Side::Top, 1);
    let minus_b = agreement_region(geometry, &triple.sigma_d, Side::Bottom, -1);
    let mut sets = IsingSets::default();
    for e in g.edges() {
        let (a, b) = g.endpoints(e);
        let (a, b) = (a.index(), b.index());
        if (plus_t[a] && minus_b[b]) || (plus_t[b] && minus_b[a]) {
            sets.p_i.push(e);
        }
        let s = triple;
        if s.sigma_plus[a] == s.sigma_plus[b] && s.sigma_minus[a] == s.sigma_minus[b] && s.sigma_d[a] != s.sigma_d[b] {
            sets.i_i.push(e);
        }
    }
    sets
}

/// Edges of `I_I ∖ P_I` for which neither endpoint's `Y` cluster has an
/// interface edge of the pair on its edge boundary. Empty for every valid
/// coloring.
pub fn unexplained_spin_interface(geometry: &BoxGeometry, x: &EdgeConfig, y: &EdgeConfig, sets: &IsingSets) -> Result<Vec<EdgeId>> {
    let g = geometry.graph();
    let yi = ClusterIndex::build(g, y.clone(), BoundaryCondition::TopBottom)?;
    let mut touched = vec![false; g.vertex_count() + 2];
    for f in interface_edges(x, y) {
        let (a, b) = g.endpoints(f);
        touched[yi.cluster_of(a) as usize] = true;
        touched[yi.cluster_of(b) as usize] = true;
    }
    Ok(sets
        .i_i
        .iter()
        .copied()
        .filter(|e| !sets.p_i.contains(e))
        .filter(|&e| {
            let (a, b) = g.endpoints(e);
            !touched[yi.cluster_of(a) as usize] && !touched[yi.cluster_of(b) as usize]
        })
        .collect())
}

/// Disagreement cuts of `σᴰ` hugging the agreement region of one side.
#[derive(Clone, Debug)]
pub struct SpinCutMap {
    /// Vertices joined to the opposite side without entering the region;
    /// exactly those separated from `side` by some disagreement cut.
    pub separated: Vec<bool>,
    /// Inclusion-minimal cut pruned from the region's edge boundary.
    pub cut: Vec<EdgeId>,
}

impl SpinCutMap {
    pub fn build(geometry: &BoxGeometry, sigma_d: &[i8], side: Side) -> Result<Self> {
        let g = geometry.graph();
        let (spin, other) = match side {
            Side::Bottom => (-1, Side::Top),
            Side::Top => (1, Side::Bottom),
            Side::Interior => return Err(Error::Params("spin cuts separate from T or B".into())),
        };
        if sigma_d.len() != g.vertex_count() {
            return Err(Error::SizeMismatch {
                expected: g.vertex_count(),
                got: sigma_d.len(),
            });
        }
        let region = agreement_region(geometry, sigma_d, side, spin);
        let mut separated = vec![false; g.vertex_count()];
        let mut queue = VecDeque::new();
        for v in g.vertices().filter(|&v| g.side(v) == other && !region[v.index()]) {
            separated[v.index()] = true;
            queue.push_back(v);
        }
        while let Some(v) = queue.pop_front() {
            for &e in g.incident(v) {
                let w = g.other_end(e, v);
                if !separated[w.index()] && !region[w.index()] {
                    separated[w.index()] = true;
                    queue.push_back(w);
                }
            }
        }
        let shell: Vec<EdgeId> = g
            .edges()
            .filter(|&e| {
                let (a, b) = g.endpoints(e);
                (region[a.index()] && separated[b.index()]) || (region[b.index()] && separated[a.index()])
            })
            .collect();
        let cut = if shell.is_empty() {
            Vec::new()
        } else {
            prune_to_minimal(g, &shell, &shell)
        };
        Ok(SpinCutMap { separated, cut })
    }

    /// Whether a disagreement cut separates `x` from the side, and the
    /// distance from `x` to the canonical one.
    pub fn query(&self, geometry: &BoxGeometry, x: VertexId) -> SpinCut {
        if !self.separated[x.index()] {
            return SpinCut {
                exists: false,
                distance: None,
            };
        }
        let d = self
            .cut
            .iter()
            .map(|&e| geometry.vertex_edge_distance(x, e))
            .fold(f64::INFINITY, f64::min);
        SpinCut {
            exists: true,
            distance: Some(d),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SpinCut {
    pub exists: bool,
    pub distance: Option<f64>,
}

pub fn spin_cut_query(geometry: &BoxGeometry, sigma_d: &[i8], x: VertexId, side: Side) -> Result<SpinCut> {
    geometry.graph().check_vertex(x)?;
    Ok(SpinCutMap::build(geometry, sigma_d, side)?.query(geometry, x))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IsingBoundary {
    Plus,
    Minus,
    Dobrushin,
}

/// Exact Gibbs law of the free (non-boundary) spins; bit `i` of a mask is
/// `+1` for the `i`-th free vertex.
#[derive(Clone, Debug)]
pub struct IsingTable {
    pub free: Vec<VertexId>,
    pub probs: Vec<f64>,
}

impl IsingTable {
    /// Mask of a full spin assignment restricted to the free vertices.
    pub fn mask_of(&self, sigma: &[i8]) -> usize {
        self.free
            .iter()
            .enumerate()
            .fold(0, |m, (i, v)| m | (usize::from(sigma[v.index()] > 0) << i))
    }

    pub fn tv_distance(&self, counts: &[u64]) -> Result<f64> {
        if counts.len() != self.probs.len() {
            return Err(Error::SizeMismatch {
                expected: self.probs.len(),
                got: counts.len(),
            });
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::Params("empty histogram".into()));
        }
        Ok(counts
            .iter()
            .zip(&self.probs)
            .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
            .sum::<f64>()
            / 2.0)
    }
}

pub fn boundary_spin(geometry: &BoxGeometry, v: VertexId, boundary: IsingBoundary) -> Option<i8> {
    match (geometry.graph().side(v), boundary) {
        (Side::Interior, _) => None,
        (_, IsingBoundary::Plus) => Some(1),
        (_, IsingBoundary::Minus) => Some(-1),
        (Side::Top, IsingBoundary::Dobrushin) => Some(1),
        (Side::Bottom, IsingBoundary::Dobrushin) => Some(-1),
    }
}

/// Enumerates `e^{-βH(σ)}` with `H(σ) = -Σ σ(x)σ(y)` over box edges.
pub fn exact_ising_distribution(geometry: &BoxGeometry, boundary: IsingBoundary, beta: f64) -> Result<IsingTable> {
    let g = geometry.graph();
    let free: Vec<VertexId> = g.vertices().filter(|&v| g.side(v) == Side::Interior).collect();
    if free.len() > MAX_EXACT_SPINS {
        return Err(Error::TooLarge(format!("{} free spins (limit {MAX_EXACT_SPINS})", free.len())));
    }
    let mut slot = vec![usize::MAX; g.vertex_count()];
    for (i, v) in free.iter().enumerate() {
        slot[v.index()] = i;
    }
    let mut sigma: Vec<i8> = g
        .vertices()
        .map(|v| boundary_spin(geometry, v, boundary).unwrap_or(0))
        .collect();
    let mut logw = Vec::with_capacity(1 << free.len());
    for mask in 0..(1usize << free.len()) {
        for (i, v) in free.iter().enumerate() {
            sigma[v.index()] = if mask >> i & 1 == 1 { 1 } else { -1 };
        }
        let agree: i64 = g
            .edges()
            .map(|e| {
                let (a, b) = g.endpoints(e);
                i64::from(sigma[a.index()] * sigma[b.index()])
            })
            .sum();
        logw.push(beta * agree as f64);
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut probs: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(IsingTable { free, probs })
}

/// One line per vertex: coordinates, `σ⁺`, `σ⁻`, `σᴰ`.
pub fn write_spin_dump<W: Write>(geometry: &BoxGeometry, triple: &SpinTriple, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# fkdyn-spins v1 dim={} vertices={}", geometry.dim(), geometry.vertex_count())?;
    for v in geometry.graph().vertices() {
        let coords: Vec<String> = geometry.vertex_coords(v).iter().map(i32::to_string).collect();
        let i = v.index();
        writeln!(
            w,
            "{} {} {} {}",
            coords.join(" "),
            triple.sigma_plus[i],
            triple.sigma_minus[i],
            triple.sigma_d[i]
        )?;
    }
    Ok(())
}
