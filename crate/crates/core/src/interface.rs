//! Interface, pivotal edges, cuts and the distances built on them.

use std::collections::VecDeque;

use serde::Serialize;

use crate::connectivity::{BoundaryCondition, ClusterIndex};
use crate::dynamics::CoupledState;
use crate::edge_config::EdgeConfig;
use crate::error::{Error, Result};
use crate::geometry::{BoxGeometry, DistanceTarget, EdgeId, Graph, Side, VertexId};

/// Edges where the two chains disagree.
pub fn interface_edges(x: &EdgeConfig, y: &EdgeConfig) -> Vec<EdgeId> {
    x.as_slice()
        .iter()
        .zip(y.as_slice())
        .enumerate()
        .filter(|(_, (a, b))| a != b)
        .map(|(i, _)| EdgeId(i as u32))
        .collect()
}

pub fn interface_set(state: &CoupledState<'_>) -> Vec<EdgeId> {
    interface_edges(state.x_config(), state.y_config())
}

/// Closed edges whose opening would join `T` to `B`.
pub fn pivotal_edges(y: &ClusterIndex<'_>) -> Result<Vec<EdgeId>> {
    if y.top_bottom_connected()? {
        return Err(Error::TopBottomConnected);
    }
    Ok(y.config()
        .closed_edges()
        .filter(|&e| y.bridges_tb(e))
        .collect())
}

pub fn pivotal_set(state: &CoupledState<'_>) -> Result<Vec<EdgeId>> {
    pivotal_edges(state.y_index())
}

/// Result of exploring from one side of a configuration without a crossing.
#[derive(Clone, Debug)]
pub struct Exploration {
    /// Vertices of the open cluster of the starting side.
    pub cluster: Vec<bool>,
    /// Vertices outside `cluster` reachable from the opposite side by
    /// geometric edges.
    pub reached: Vec<bool>,
    /// Edges from `cluster` to `reached`; all closed, and together separating.
    pub shell: Vec<EdgeId>,
    /// Edges with both endpoints in `reached`.
    pub interior: Vec<EdgeId>,
}

impl Exploration {
    pub fn interior_mask(&self, graph: &Graph) -> Vec<bool> {
        let mut m = vec![false; graph.edge_count()];
        for &e in &self.interior {
            m[e.index()] = true;
        }
        m
    }
}

fn side_vertices(graph: &Graph, side: Side) -> Result<Vec<VertexId>> {
    match side {
        Side::Top => Ok(graph.top().collect()),
        Side::Bottom => Ok(graph.bottom().collect()),
        Side::Interior => Err(Error::Params("exploration starts from T or B".into())),
    }
}

fn opposite(side: Side) -> Side {
    match side {
        Side::Top => Side::Bottom,
        _ => Side::Top,
    }
}

/// Open cluster of `from` (vertices joined to it by open edges).
fn open_cluster(graph: &Graph, config: &EdgeConfig, from: &[VertexId]) -> Vec<bool> {
    let mut seen = vec![false; graph.vertex_count()];
    let mut queue: VecDeque<VertexId> = from.iter().copied().collect();
    for v in from {
        seen[v.index()] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &e in graph.incident(v) {
            if config.is_open(e) {
                let w = graph.other_end(e, v);
                if !seen[w.index()] {
                    seen[w.index()] = true;
                    queue.push_back(w);
                }
            }
        }
    }
    seen
}

/// The shell exploration around the open cluster of `from`.
pub fn explore_cplus(geometry: &BoxGeometry, y: &EdgeConfig, from: Side) -> Result<Exploration> {
    let g = geometry.graph();
    if y.len() != g.edge_count() {
        return Err(Error::SizeMismatch {
            expected: g.edge_count(),
            got: y.len(),
        });
    }
    let start = side_vertices(g, from)?;
    let target = side_vertices(g, opposite(from))?;
    let cluster = open_cluster(g, y, &start);
    if target.iter().any(|v| cluster[v.index()]) {
        return Err(Error::TopBottomConnected);
    }
    let mut reached = vec![false; g.vertex_count()];
    let mut queue: VecDeque<VertexId> = VecDeque::new();
    for &v in &target {
        reached[v.index()] = true;
        queue.push_back(v);
    }
    while let Some(v) = queue.pop_front() {
        for &e in g.incident(v) {
            let w = g.other_end(e, v);
            if !cluster[w.index()] && !reached[w.index()] {
                reached[w.index()] = true;
                queue.push_back(w);
            }
        }
    }
    let mut shell = Vec::new();
    let mut interior = Vec::new();
    for e in g.edges() {
        let (a, b) = g.endpoints(e);
        let (ca, cb) = (cluster[a.index()], cluster[b.index()]);
        let (ra, rb) = (reached[a.index()], reached[b.index()]);
        if (ca && rb) || (cb && ra) {
            shell.push(e);
        } else if ra && rb {
            interior.push(e);
        }
    }
    Ok(Exploration {
        cluster,
        reached,
        shell,
        interior,
    })
}

/// Whether removing `set` leaves no path of graph edges from `T` to `B`.
pub fn is_separating(graph: &Graph, set: &[EdgeId]) -> bool {
    let mut removed = vec![false; graph.edge_count()];
    for &e in set {
        removed[e.index()] = true;
    }
    separates(graph, &removed)
}

fn separates(graph: &Graph, removed: &[bool]) -> bool {
    let mut seen = vec![false; graph.vertex_count()];
    let mut queue: VecDeque<VertexId> = graph.top().collect();
    for v in graph.top() {
        seen[v.index()] = true;
    }
    while let Some(v) = queue.pop_front() {
        if graph.side(v) == Side::Bottom {
            return false;
        }
        for &e in graph.incident(v) {
            if removed[e.index()] {
                continue;
            }
            let w = graph.other_end(e, v);
            if !seen[w.index()] {
                seen[w.index()] = true;
                queue.push_back(w);
            }
        }
    }
    true
}

/// Separating, and no edge can be dropped.
pub fn is_minimal_cut(graph: &Graph, set: &[EdgeId]) -> bool {
    let mut removed = vec![false; graph.edge_count()];
    for &e in set {
        removed[e.index()] = true;
    }
    if !separates(graph, &removed) {
        return false;
    }
    set.iter().all(|&e| {
        removed[e.index()] = false;
        let still = separates(graph, &removed);
        removed[e.index()] = true;
        !still
    })
}

/// Greedily drops edges from a separating set, in the given order, while it
/// stays separating. A single pass suffices: once dropping an edge breaks
/// separation, dropping it from any subset does too.
pub fn prune_to_minimal(graph: &Graph, set: &[EdgeId], order: &[EdgeId]) -> Vec<EdgeId> {
    let mut removed = vec![false; graph.edge_count()];
    for &e in set {
        removed[e.index()] = true;
    }
    for &e in order {
        if !removed[e.index()] {
            continue;
        }
        removed[e.index()] = false;
        if !separates(graph, &removed) {
            removed[e.index()] = true;
        }
    }
    let mut out: Vec<EdgeId> = set.iter().copied().filter(|e| removed[e.index()]).collect();
    out.sort();
    out
}

/// Minimal cut pruned from the shell around `O(T)`, by ascending edge id.
pub fn extract_minimal_cut(geometry: &BoxGeometry, y: &EdgeConfig) -> Result<Vec<EdgeId>> {
    extract_minimal_cut_from(geometry, y, Side::Top)
}

pub fn extract_minimal_cut_from(geometry: &BoxGeometry, y: &EdgeConfig, from: Side) -> Result<Vec<EdgeId>> {
    let ex = explore_cplus(geometry, y, from)?;
    let mut order = ex.shell.clone();
    order.sort();
    Ok(prune_to_minimal(geometry.graph(), &ex.shell, &order))
}

/// Minimal cut pruned with `keep` tried last, so it survives whenever some
/// minimal subset of the shell contains it.
pub fn extract_minimal_cut_keeping(geometry: &BoxGeometry, y: &EdgeConfig, keep: EdgeId) -> Result<Vec<EdgeId>> {
    let ex = explore_cplus(geometry, y, Side::Top)?;
    let mut order: Vec<EdgeId> = ex.shell.iter().copied().filter(|&e| e != keep).collect();
    order.sort();
    order.push(keep);
    Ok(prune_to_minimal(geometry.graph(), &ex.shell, &order))
}

/// Length (number of distinct edges) of the longest simple *-path starting
/// at `e` whose edges all satisfy `allowed`, capped at `n_max`.
pub fn longest_star_path(geometry: &BoxGeometry, allowed: &[bool], e: EdgeId, n_max: usize) -> usize {
    if n_max == 0 || !allowed[e.index()] {
        return 0;
    }
    // the component bounds the answer and lets the search stop early
    let mut comp = vec![false; allowed.len()];
    let mut stack = vec![e];
    comp[e.index()] = true;
    let mut size = 1usize;
    while let Some(f) = stack.pop() {
        if size >= n_max {
            break;
        }
        for &g in geometry.star(f) {
            if allowed[g.index()] && !comp[g.index()] {
                comp[g.index()] = true;
                size += 1;
                stack.push(g);
            }
        }
    }
    let cap = n_max.min(size);
    let mut on_path = vec![false; allowed.len()];
    on_path[e.index()] = true;
    let mut best = 1;
    dfs(geometry, allowed, &mut on_path, e, 1, cap, &mut best);
    best
}

fn dfs(geometry: &BoxGeometry, allowed: &[bool], on_path: &mut [bool], at: EdgeId, len: usize, cap: usize, best: &mut usize) {
    if len > *best {
        *best = len;
    }
    if *best >= cap {
        return;
    }
    for &g in geometry.star(at) {
        if allowed[g.index()] && !on_path[g.index()] {
            on_path[g.index()] = true;
            dfs(geometry, allowed, on_path, g, len + 1, cap, best);
            on_path[g.index()] = false;
            if *best >= cap {
                return;
            }
        }
    }
}

/// Longest simple closed *-path from a closed edge `e`, capped at `n_max`.
pub fn longest_closed_star_path_from(geometry: &BoxGeometry, y: &EdgeConfig, e: EdgeId, n_max: usize) -> Result<usize> {
    geometry.graph().check_edge(e)?;
    if y.is_open(e) {
        return Err(Error::Params(format!("{e} is open")));
    }
    let allowed: Vec<bool> = y.as_slice().iter().map(|&o| !o).collect();
    Ok(longest_star_path(geometry, &allowed, e, n_max))
}

/// Indicators of `Γ(e, n, side)` for `n = 1..=n_max`: a closed *-path of
/// length `n` from `e` separated from `side` by a cut. Such a path lies in
/// the interior of the exploration from `side`, and conversely.
pub fn gamma_lengths(geometry: &BoxGeometry, y: &EdgeConfig, ex: &Exploration, e: EdgeId, n_max: usize) -> usize {
    let g = geometry.graph();
    let mut allowed = ex.interior_mask(g);
    for (i, a) in allowed.iter_mut().enumerate() {
        *a = *a && !y.is_open(EdgeId(i as u32));
    }
    longest_star_path(geometry, &allowed, e, n_max)
}

/// `d(e, Λᶜ ∪ P ∖ {e})`.
pub fn distance_to_pivotal(geometry: &BoxGeometry, e: EdgeId, pivotal: &[EdgeId]) -> f64 {
    let mut best = geometry.complement_distance(e);
    for &f in pivotal {
        if f != e {
            best = best.min(geometry.edge_distance(e, f));
        }
    }
    best
}

/// Semi-distance `d_H^ℓ(A, B)`: edges within `ℓ` of `Λᶜ` are ignored on the
/// side being covered, and the covering set is taken whole.
pub fn hausdorff_semi_distance(geometry: &BoxGeometry, a: &[EdgeId], b: &[EdgeId], ell: f64) -> f64 {
    let one_way = |from: &[EdgeId], to: &[EdgeId]| {
        from.iter()
            .filter(|&&e| geometry.complement_distance(e) > ell)
            .map(|&e| geometry.set_distance(e, DistanceTarget::edges(to)))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// Whether every edge of `cut` reaches `targets ∪ Λᶜ` along closed *-paths.
pub fn cut_edges_reach(geometry: &BoxGeometry, y: &EdgeConfig, cut: &[EdgeId], targets: &[EdgeId]) -> Vec<EdgeId> {
    let m = geometry.edge_count();
    let mut good = vec![false; m];
    let mut queue: VecDeque<EdgeId> = VecDeque::new();
    // backwards search from the targets over closed edges
    for e in geometry.graph().edges() {
        let is_target = geometry.touches_complement(e) || targets.contains(&e);
        if is_target && !y.is_open(e) {
            good[e.index()] = true;
            queue.push_back(e);
        }
    }
    while let Some(e) = queue.pop_front() {
        for &f in geometry.star(e) {
            if !good[f.index()] && !y.is_open(f) {
                good[f.index()] = true;
                queue.push_back(f);
            }
        }
    }
    cut.iter().copied().filter(|e| !good[e.index()]).collect()
}

/// One analysis sample of a coupled state.
#[derive(Clone, Debug, Serialize)]
pub struct InterfaceReport {
    pub step: u64,
    pub interface: Vec<EdgeId>,
    pub pivotal: Vec<EdgeId>,
    pub cut: Option<Vec<EdgeId>>,
    /// `max d(e, Λᶜ ∪ P ∖ {e})` over `e ∈ I ∪ P`; `None` when both are empty.
    pub max_distance: Option<f64>,
    /// The same maximum over `e ∈ I` only.
    pub max_interface_distance: Option<f64>,
}

pub fn analyze_state(state: &CoupledState<'_>, with_cut: bool) -> Result<InterfaceReport> {
    let geometry = state.geometry();
    let interface = interface_set(state);
    let pivotal = pivotal_set(state)?;
    let cut = if with_cut {
        Some(extract_minimal_cut(geometry, state.y_config())?)
    } else {
        None
    };
    let dist = |e: EdgeId| distance_to_pivotal(geometry, e, &pivotal);
    let max_i = interface.iter().map(|&e| dist(e)).reduce(f64::max);
    let max_p = pivotal.iter().map(|&e| dist(e)).reduce(f64::max);
    let max_distance = match (max_i, max_p) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    Ok(InterfaceReport {
        step: state.time(),
        interface,
        pivotal,
        cut,
        max_distance,
        max_interface_distance: max_i,
    })
}

/// Line record: step, |I|, |P|, the maximum distance and the cut size.
impl InterfaceReport {
    pub fn to_record(&self) -> serde_json::Value {
        serde_json::json!({
            "step": self.step,
            "interface": self.interface.len(),
            "pivotal": self.pivotal.len(),
            "max_distance": self.max_distance,
            "cut_size": self.cut.as_ref().map(Vec::len),
        })
    }
}

/// TB index for a configuration, used where only `Y` is at hand.
pub fn tb_index<'g>(graph: &'g Graph, y: &EdgeConfig) -> Result<ClusterIndex<'g>> {
    ClusterIndex::build(graph, y.clone(), BoundaryCondition::TopBottom)
}
