//! Random-cluster weights, single-edge heat-bath probabilities and exact
//! enumeration of the measure on tiny graphs.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::connectivity::{BoundaryCondition, ClusterIndex};
use crate::edge_config::EdgeConfig;
use crate::error::{Error, Result};
use crate::geometry::{EdgeId, Graph, Side};

/// Largest edge count accepted by [`exact_distribution`].
pub const MAX_EXACT_EDGES: usize = 20;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct FkParams {
    p: f64,
    q: f64,
}

#[derive(Deserialize)]
struct RawParams {
    p: f64,
    q: f64,
}

impl TryFrom<RawParams> for FkParams {
    type Error = Error;
    fn try_from(r: RawParams) -> Result<Self> {
        FkParams::new(r.p, r.q)
    }
}

impl FkParams {
    /// `p ∈ [0, 1]`, `q ≥ 1`.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Params(format!("p must lie in [0, 1], got {p}")));
        }
        if !(q.is_finite() && q >= 1.0) {
            return Err(Error::Params(format!("q must be finite and >= 1, got {q}")));
        }
        Ok(FkParams { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Closing probability when the endpoints stay joined without the edge.
    #[inline]
    pub fn close_if_joined(&self) -> f64 {
        1.0 - self.p
    }

    /// Closing probability when closing the edge splits a cluster.
    #[inline]
    pub fn close_if_split(&self) -> f64 {
        let a = 1.0 - self.p;
        if a == 0.0 {
            0.0
        } else {
            a / (a + self.p / self.q)
        }
    }

    /// Density of the Bernoulli measure dominated by the random-cluster
    /// measure: `p / (p + q - pq)`.
    pub fn comparison_parameter(&self) -> f64 {
        comparison_parameter(self.p, self.q)
    }
}

pub fn comparison_parameter(p: f64, q: f64) -> f64 {
    p / (p + q - p * q)
}

/// Unnormalised log weight `Σ log p^ω(e) (1-p)^(1-ω(e)) + k(ω) log q`.
pub fn log_weight(graph: &Graph, config: &EdgeConfig, bc: BoundaryCondition, params: &FkParams) -> Result<f64> {
    let idx = ClusterIndex::build(graph, config.clone(), bc)?;
    Ok(log_weight_from_count(config.open_count(), config.len(), idx.cluster_count(), params))
}

fn log_weight_from_count(open: usize, n_edges: usize, clusters: usize, params: &FkParams) -> f64 {
    let closed = n_edges - open;
    let term = |count: usize, x: f64| if count == 0 { 0.0 } else { count as f64 * x.ln() };
    term(open, params.p) + term(closed, 1.0 - params.p) + clusters as f64 * params.q.ln()
}

/// Heat-bath probability that edge `e` is closed given every other edge.
pub fn heat_bath_close_prob(index: &mut ClusterIndex<'_>, e: EdgeId, params: &FkParams) -> Result<f64> {
    Ok(if index.connected_without(e)? {
        params.close_if_joined()
    } else {
        params.close_if_split()
    })
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Conditioning {
    None,
    /// No open path of graph edges joins a top vertex to a bottom vertex.
    Disconnected,
}

/// Normalised probabilities of every configuration of a tiny graph.
#[derive(Clone, Debug)]
pub struct ExactTable {
    n_edges: usize,
    bc: BoundaryCondition,
    condition: Conditioning,
    probs: Vec<f64>,
}

impl ExactTable {
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn condition(&self) -> Conditioning {
        self.condition
    }

    /// Probability of the configuration encoded by `mask`.
    pub fn prob(&self, mask: u64) -> f64 {
        self.probs[mask as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Total-variation distance to an empirical histogram over masks.
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
        let tv = counts
            .iter()
            .zip(&self.probs)
            .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
            .sum::<f64>();
        Ok(tv / 2.0)
    }

    /// `mask probability` lines under a versioned header.
    pub fn write_records<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# fkdyn-exact-table v1 edges={} bc={:?} condition={:?}",
            self.n_edges, self.bc, self.condition
        )?;
        for (mask, p) in self.probs.iter().enumerate() {
            writeln!(w, "{mask} {p:e}")?;
        }
        Ok(())
    }
}

/// Small union-find used for enumeration, independent of [`ClusterIndex`].
struct Dsu {
    parent: Vec<u32>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let g = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = g;
            x = g;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra as usize] = rb;
        true
    }
}

/// Whether some open path of graph edges (no ghosts) joins `T` to `B`.
pub(crate) fn top_bottom_joined(graph: &Graph, config: &EdgeConfig) -> bool {
    let mut dsu = Dsu::new(graph.vertex_count());
    for e in config.open_edges() {
        let (a, b) = graph.endpoints(e);
        dsu.union(a.0, b.0);
    }
    let tops: std::collections::HashSet<u32> = graph.top().map(|v| dsu.find(v.0)).collect();
    graph.bottom().any(|v| tops.contains(&dsu.find(v.0)))
}

/// Enumerates all `2^|E|` configurations.
pub fn exact_distribution(
    graph: &Graph,
    bc: BoundaryCondition,
    params: &FkParams,
    condition: Conditioning,
) -> Result<ExactTable> {
    let m = graph.edge_count();
    if m > MAX_EXACT_EDGES {
        return Err(Error::TooLarge(format!("{m} edges (limit {MAX_EXACT_EDGES})")));
    }
    let n = graph.vertex_count();
    let ghosts: Vec<Option<u32>> = graph
        .vertices()
        .map(|v| match (bc, graph.side(v)) {
            (BoundaryCondition::Wired, Side::Top | Side::Bottom) => Some(n as u32),
            (BoundaryCondition::TopBottom, Side::Top) => Some(n as u32),
            (BoundaryCondition::TopBottom, Side::Bottom) => Some(n as u32 + 1),
            _ => None,
        })
        .collect();
    let n_ghosts = match bc {
        BoundaryCondition::Free => 0,
        BoundaryCondition::Wired => 1,
        BoundaryCondition::TopBottom => 2,
    };
    let mut logw = Vec::with_capacity(1 << m);
    for mask in 0..(1u64 << m) {
        let cfg = EdgeConfig::from_mask(mask, m);
        if condition == Conditioning::Disconnected && top_bottom_joined(graph, &cfg) {
            logw.push(f64::NEG_INFINITY);
            continue;
        }
        let mut dsu = Dsu::new(n + n_ghosts);
        let mut clusters = n + n_ghosts;
        for (v, g) in ghosts.iter().enumerate() {
            if let Some(g) = g {
                if dsu.union(v as u32, *g) {
                    clusters -= 1;
                }
            }
        }
        for e in cfg.open_edges() {
            let (a, b) = graph.endpoints(e);
            if dsu.union(a.0, b.0) {
                clusters -= 1;
            }
        }
        logw.push(log_weight_from_count(cfg.open_count(), m, clusters, params));
    }
    let max = logw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Params("every configuration has zero weight".into()));
    }
    let mut probs: Vec<f64> = logw.iter().map(|&l| (l - max).exp()).collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(ExactTable {
        n_edges: m,
        bc,
        condition,
        probs,
    })
}

/// Expectation of a configuration functional under an exact table.
pub fn exact_mean(table: &ExactTable, observable: impl Fn(&EdgeConfig) -> f64) -> f64 {
    table
        .probs
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(mask, &p)| p * observable(&EdgeConfig::from_mask(mask as u64, table.n_edges)))
        .sum()
}
