//! Cluster structure of an edge configuration under a boundary condition.
//!
//! Boundary conditions are materialised as ghost nodes: `Wired` adds one
//! ghost joined to every boundary vertex, `TopBottom` adds one ghost for `T`
//! and one for `B`. Ghost links are permanently open, so the rest of the
//! crate never branches on the boundary condition.
//!
//! Openings merge clusters by relabelling the smaller one. Closings run two
//! interleaved searches from the endpoints; if one of them exhausts its
//! component first, that component is split off with a fresh label. Both
//! cost O(size of the smaller side).

use serde::{Deserialize, Serialize};

use crate::edge_config::EdgeConfig;
use crate::error::{Error, Result};
use crate::geometry::{EdgeId, Graph, Side, VertexId};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCondition {
    Free,
    Wired,
    #[serde(rename = "tb")]
    TopBottom,
}

impl std::str::FromStr for BoundaryCondition {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "free" => Ok(BoundaryCondition::Free),
            "wired" => Ok(BoundaryCondition::Wired),
            "tb" | "topbottom" | "dobrushin" => Ok(BoundaryCondition::TopBottom),
            other => Err(Error::Params(format!("unknown boundary condition {other:?}"))),
        }
    }
}

/// A vertex of the graph or one of the ghost nodes of the boundary condition.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Site {
    Vertex(VertexId),
    /// The single ghost of the wired boundary condition.
    WiredGhost,
    TopGhost,
    BottomGhost,
}

impl From<VertexId> for Site {
    fn from(v: VertexId) -> Self {
        Site::Vertex(v)
    }
}

const NO_GHOST: u32 = u32::MAX;

enum Split {
    Connected,
    /// The listed nodes form the component that got separated.
    Separated(Vec<u32>),
}

#[derive(Clone, Debug)]
pub struct ClusterIndex<'g> {
    graph: &'g Graph,
    bc: BoundaryCondition,
    config: EdgeConfig,
    /// Ghost node (index >= vertex count) attached to each vertex, or NO_GHOST.
    vertex_ghost: Vec<u32>,
    ghost_members: Vec<Vec<u32>>,
    label: Vec<u32>,
    size: Vec<u32>,
    free_labels: Vec<u32>,
    clusters: usize,
    // search scratch
    mark: Vec<u32>,
    stamp: u32,
    queue_a: Vec<u32>,
    queue_b: Vec<u32>,
}

impl<'g> ClusterIndex<'g> {
    /// Labels every node by search from scratch.
    pub fn build(graph: &'g Graph, config: EdgeConfig, bc: BoundaryCondition) -> Result<Self> {
        if config.len() != graph.edge_count() {
            return Err(Error::SizeMismatch {
                expected: graph.edge_count(),
                got: config.len(),
            });
        }
        let n = graph.vertex_count();
        let mut vertex_ghost = vec![NO_GHOST; n];
        let mut ghost_members: Vec<Vec<u32>> = match bc {
            BoundaryCondition::Free => Vec::new(),
            BoundaryCondition::Wired => vec![Vec::new()],
            BoundaryCondition::TopBottom => vec![Vec::new(), Vec::new()],
        };
        for v in graph.vertices() {
            let g = match (bc, graph.side(v)) {
                (BoundaryCondition::Wired, Side::Top | Side::Bottom) => Some(0),
                (BoundaryCondition::TopBottom, Side::Top) => Some(0),
                (BoundaryCondition::TopBottom, Side::Bottom) => Some(1),
                _ => None,
            };
            if let Some(g) = g {
                vertex_ghost[v.index()] = (n + g) as u32;
                ghost_members[g].push(v.0);
            }
        }
        if ghost_members.iter().any(|m| m.is_empty()) {
            return Err(Error::Geometry(format!(
                "boundary condition {bc:?} needs nonempty boundary sets"
            )));
        }
        let nodes = n + ghost_members.len();
        let mut idx = ClusterIndex {
            graph,
            bc,
            config,
            vertex_ghost,
            ghost_members,
            label: vec![0; nodes],
            size: Vec::new(),
            free_labels: Vec::new(),
            clusters: 0,
            mark: vec![0; nodes],
            stamp: 0,
            queue_a: Vec::new(),
            queue_b: Vec::new(),
        };
        idx.relabel_all();
        Ok(idx)
    }

    fn node_count(&self) -> usize {
        self.label.len()
    }

    fn relabel_all(&mut self) {
        let nodes = self.node_count();
        self.size.clear();
        self.free_labels.clear();
        let mut seen = vec![false; nodes];
        let mut stack = Vec::new();
        for start in 0..nodes {
            if seen[start] {
                continue;
            }
            let l = self.size.len() as u32;
            let mut count = 0u32;
            seen[start] = true;
            stack.push(start as u32);
            while let Some(u) = stack.pop() {
                self.label[u as usize] = l;
                count += 1;
                self.for_each_neighbor(u, None, |w| {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                });
            }
            self.size.push(count);
        }
        self.clusters = self.size.len();
    }

    #[inline]
    fn for_each_neighbor(&self, u: u32, skip: Option<EdgeId>, mut f: impl FnMut(u32)) {
        let n = self.graph.vertex_count() as u32;
        if u < n {
            let v = VertexId(u);
            for &e in self.graph.incident(v) {
                if Some(e) != skip && self.config.is_open(e) {
                    f(self.graph.other_end(e, v).0);
                }
            }
            let g = self.vertex_ghost[u as usize];
            if g != NO_GHOST {
                f(g);
            }
        } else {
            for &w in &self.ghost_members[(u - n) as usize] {
                f(w);
            }
        }
    }

    fn next_stamps(&mut self) -> (u32, u32) {
        if self.stamp >= u32::MAX - 2 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 0;
        }
        self.stamp += 2;
        (self.stamp - 1, self.stamp)
    }

    /// Grows searches from `a` and `b` in lockstep, never crossing `skip`.
    fn split_search(&mut self, a: u32, b: u32, skip: Option<EdgeId>) -> Split {
        if a == b {
            return Split::Connected;
        }
        let (sa, sb) = self.next_stamps();
        let mut qa = std::mem::take(&mut self.queue_a);
        let mut qb = std::mem::take(&mut self.queue_b);
        qa.clear();
        qb.clear();
        qa.push(a);
        qb.push(b);
        self.mark[a as usize] = sa;
        self.mark[b as usize] = sb;
        let (mut ha, mut hb) = (0usize, 0usize);
        let result = loop {
            if ha == qa.len() {
                break Split::Separated(qa.clone());
            }
            if hb == qb.len() {
                break Split::Separated(qb.clone());
            }
            if self.expand(&mut qa, &mut ha, sa, sb, skip) {
                break Split::Connected;
            }
            if self.expand(&mut qb, &mut hb, sb, sa, skip) {
                break Split::Connected;
            }
        };
        self.queue_a = qa;
        self.queue_b = qb;
        result
    }

    /// Pops one node; returns true when the other search has been reached.
    fn expand(&mut self, q: &mut Vec<u32>, head: &mut usize, own: u32, other: u32, skip: Option<EdgeId>) -> bool {
        let u = q[*head];
        *head += 1;
        let mut met = false;
        let mark = &mut self.mark;
        let graph = self.graph;
        let n = graph.vertex_count() as u32;
        let mut visit = |w: u32| {
            let m = mark[w as usize];
            if m == other {
                met = true;
            } else if m != own {
                mark[w as usize] = own;
                q.push(w);
            }
        };
        if u < n {
            let v = VertexId(u);
            for &e in graph.incident(v) {
                if Some(e) != skip && self.config.is_open(e) {
                    visit(graph.other_end(e, v).0);
                }
            }
            let g = self.vertex_ghost[u as usize];
            if g != NO_GHOST {
                visit(g);
            }
        } else {
            for &w in &self.ghost_members[(u - n) as usize] {
                visit(w);
            }
        }
        met
    }

    fn collect_cluster(&mut self, start: u32) -> Vec<u32> {
        let (s, _) = self.next_stamps();
        let mut q = std::mem::take(&mut self.queue_a);
        q.clear();
        q.push(start);
        self.mark[start as usize] = s;
        let mut head = 0;
        let mut mark = std::mem::take(&mut self.mark);
        while head < q.len() {
            let u = q[head];
            head += 1;
            self.for_each_neighbor(u, None, |w| {
                if mark[w as usize] != s {
                    mark[w as usize] = s;
                    q.push(w);
                }
            });
        }
        self.mark = mark;
        let out = q.clone();
        self.queue_a = q;
        out
    }

    fn fresh_label(&mut self) -> u32 {
        if let Some(l) = self.free_labels.pop() {
            l
        } else {
            self.size.push(0);
            (self.size.len() - 1) as u32
        }
    }

    pub fn graph(&self) -> &'g Graph {
        self.graph
    }

    pub fn boundary_condition(&self) -> BoundaryCondition {
        self.bc
    }

    pub fn config(&self) -> &EdgeConfig {
        &self.config
    }

    /// `k(ω, Λ)`: clusters meeting the box, ghosts merged into their clusters.
    pub fn cluster_count(&self) -> usize {
        self.clusters
    }

    fn node(&self, s: Site) -> Result<u32> {
        let n = self.graph.vertex_count() as u32;
        match (s, self.bc) {
            (Site::Vertex(v), _) => {
                self.graph.check_vertex(v)?;
                Ok(v.0)
            }
            (Site::WiredGhost, BoundaryCondition::Wired) => Ok(n),
            (Site::TopGhost, BoundaryCondition::TopBottom) => Ok(n),
            (Site::BottomGhost, BoundaryCondition::TopBottom) => Ok(n + 1),
            (other, bc) => Err(Error::Params(format!("{other:?} does not exist under {bc:?}"))),
        }
    }

    /// Cluster label of a vertex. Labels are only meaningful for comparison.
    #[inline]
    pub fn cluster_of(&self, v: VertexId) -> u32 {
        self.label[v.index()]
    }

    pub fn site_label(&self, s: Site) -> Result<u32> {
        Ok(self.label[self.node(s)? as usize])
    }

    pub fn same_cluster(&self, x: impl Into<Site>, y: impl Into<Site>) -> Result<bool> {
        let a = self.node(x.into())?;
        let b = self.node(y.into())?;
        Ok(self.label[a as usize] == self.label[b as usize])
    }

    /// Whether the endpoints of `e` are joined by an open path avoiding `e`
    /// (ghost links allowed).
    pub fn connected_without(&mut self, e: EdgeId) -> Result<bool> {
        self.graph.check_edge(e)?;
        Ok(self.joined_without(e))
    }

    pub(crate) fn joined_without(&mut self, e: EdgeId) -> bool {
        let (a, b) = self.graph.endpoints(e);
        if !self.config.is_open(e) {
            return self.label[a.index()] == self.label[b.index()];
        }
        matches!(self.split_search(a.0, b.0, Some(e)), Split::Connected)
    }

    /// `T ↔ B` under the TB boundary condition.
    pub fn top_bottom_connected(&self) -> Result<bool> {
        if self.bc != BoundaryCondition::TopBottom {
            return Err(Error::NotTopBottom);
        }
        let n = self.graph.vertex_count();
        Ok(self.label[n] == self.label[n + 1])
    }

    /// Whether `T ↔ B` would hold with `e` forced open.
    pub fn would_connect_tb(&self, e: EdgeId) -> Result<bool> {
        if self.bc != BoundaryCondition::TopBottom {
            return Err(Error::NotTopBottom);
        }
        self.graph.check_edge(e)?;
        Ok(self.bridges_tb(e))
    }

    #[inline]
    pub(crate) fn bridges_tb(&self, e: EdgeId) -> bool {
        let n = self.graph.vertex_count();
        let (lt, lb) = (self.label[n], self.label[n + 1]);
        if lt == lb {
            return true;
        }
        if self.config.is_open(e) {
            return false;
        }
        let (a, b) = self.graph.endpoints(e);
        let (la, lb2) = (self.label[a.index()], self.label[b.index()]);
        (la == lt && lb2 == lb) || (la == lb && lb2 == lt)
    }

    /// Sets edge `e` and updates the labelling incrementally.
    pub fn apply_flip(&mut self, e: EdgeId, open: bool) -> Result<()> {
        self.graph.check_edge(e)?;
        self.flip(e, open);
        Ok(())
    }

    pub(crate) fn flip(&mut self, e: EdgeId, open: bool) {
        if self.config.is_open(e) == open {
            return;
        }
        let (a, b) = self.graph.endpoints(e);
        if open {
            let (la, lb) = (self.label[a.index()], self.label[b.index()]);
            if la != lb {
                // relabel the smaller cluster before the edge joins them
                let (small_root, keep) = if self.size[la as usize] < self.size[lb as usize] {
                    (a.0, lb)
                } else {
                    (b.0, la)
                };
                let small = self.label[small_root as usize];
                let members = self.collect_cluster(small_root);
                for &u in &members {
                    self.label[u as usize] = keep;
                }
                self.size[keep as usize] += members.len() as u32;
                self.size[small as usize] = 0;
                self.free_labels.push(small);
                self.clusters -= 1;
            }
            self.config.set(e, true);
        } else {
            self.config.set(e, false);
            if let Split::Separated(part) = self.split_search(a.0, b.0, None) {
                let old = self.label[part[0] as usize];
                let l = self.fresh_label();
                for &u in &part {
                    self.label[u as usize] = l;
                }
                self.size[l as usize] = part.len() as u32;
                self.size[old as usize] -= part.len() as u32;
                self.clusters += 1;
            }
        }
    }

    /// Recomputes everything from the current configuration.
    pub fn rebuild(&mut self) {
        self.relabel_all();
    }

    /// Whether two indices induce the same partition of the nodes.
    pub fn same_partition(&self, other: &ClusterIndex<'_>) -> bool {
        if self.node_count() != other.node_count() {
            return false;
        }
        let mut fwd = std::collections::HashMap::new();
        let mut back = std::collections::HashMap::new();
        for (&a, &b) in self.label.iter().zip(&other.label) {
            if *fwd.entry(a).or_insert(b) != b || *back.entry(b).or_insert(a) != a {
                return false;
            }
        }
        true
    }

    /// Vertices whose cluster contains the given ghost.
    pub fn ghost_cluster_vertices(&self, ghost: Site) -> Result<Vec<VertexId>> {
        let l = self.site_label(ghost)?;
        Ok(self
            .graph
            .vertices()
            .filter(|v| self.label[v.index()] == l)
            .collect())
    }
}
