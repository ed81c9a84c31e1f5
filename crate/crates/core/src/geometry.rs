//! Lattice boxes: the (possibly tilted) cube `Λ = (V, E)` cut out of `Z^d`,
//! its boundary with the top/bottom split, and the edge metric built on
//! L∞ distances between edge midpoints.
//!
//! All geometric quantities are computed once at construction. A
//! [`BoxGeometry`] is immutable afterwards and can be shared across threads.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for orthogonality checks and for the membership / hyperplane ties.
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VertexId(pub u32);

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId(pub u32);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl EdgeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

/// Position of a vertex relative to the top/bottom split of the boundary.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Top,
    Bottom,
    Interior,
}

/// A finite graph whose boundary is split into a top part and a bottom part.
///
/// This is the combinatorial skeleton every other module works on. Boxes
/// produce one through [`BoxGeometry::graph`]; tests can also build small
/// arbitrary graphs directly.
#[derive(Clone, Debug)]
pub struct Graph {
    endpoints: Vec<(VertexId, VertexId)>,
    inc_offsets: Vec<u32>,
    inc_edges: Vec<EdgeId>,
    sides: Vec<Side>,
}

impl Graph {
    /// Builds a graph from an edge list; `sides[v]` tags each vertex.
    pub fn new(sides: Vec<Side>, edges: &[(u32, u32)]) -> Result<Self> {
        let n = sides.len();
        let mut degree = vec![0u32; n + 1];
        let mut endpoints = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a as usize >= n || b as usize >= n {
                return Err(Error::UnknownVertex(a.max(b)));
            }
            if a == b {
                return Err(Error::Geometry(format!("self-loop at vertex {a}")));
            }
            degree[a as usize] += 1;
            degree[b as usize] += 1;
            endpoints.push((VertexId(a), VertexId(b)));
        }
        let mut inc_offsets = vec![0u32; n + 1];
        for v in 0..n {
            inc_offsets[v + 1] = inc_offsets[v] + degree[v];
        }
        let mut fill = inc_offsets.clone();
        let mut inc_edges = vec![EdgeId(0); inc_offsets[n] as usize];
        for (i, &(a, b)) in endpoints.iter().enumerate() {
            for v in [a, b] {
                inc_edges[fill[v.index()] as usize] = EdgeId(i as u32);
                fill[v.index()] += 1;
            }
        }
        Ok(Graph {
            endpoints,
            inc_offsets,
            inc_edges,
            sides,
        })
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.sides.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.endpoints.len()
    }

    #[inline]
    pub fn endpoints(&self, e: EdgeId) -> (VertexId, VertexId) {
        self.endpoints[e.index()]
    }

    pub fn check_edge(&self, e: EdgeId) -> Result<()> {
        if e.index() < self.edge_count() {
            Ok(())
        } else {
            Err(Error::UnknownEdge(e))
        }
    }

    pub fn check_vertex(&self, v: VertexId) -> Result<()> {
        if v.index() < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v.0))
        }
    }

    #[inline]
    pub fn incident(&self, v: VertexId) -> &[EdgeId] {
        let lo = self.inc_offsets[v.index()] as usize;
        let hi = self.inc_offsets[v.index() + 1] as usize;
        &self.inc_edges[lo..hi]
    }

    #[inline]
    pub fn other_end(&self, e: EdgeId, v: VertexId) -> VertexId {
        let (a, b) = self.endpoints(e);
        if a == v {
            b
        } else {
            a
        }
    }

    #[inline]
    pub fn side(&self, v: VertexId) -> Side {
        self.sides[v.index()]
    }

    #[inline]
    pub fn is_boundary(&self, v: VertexId) -> bool {
        self.sides[v.index()] != Side::Interior
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeId> + '_ {
        (0..self.edge_count() as u32).map(EdgeId)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.vertex_count() as u32).map(VertexId)
    }

    pub fn top(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.side(v) == Side::Top)
    }

    pub fn bottom(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.side(v) == Side::Bottom)
    }

    pub fn boundary(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(|&v| self.is_boundary(v))
    }
}

/// Orthogonal `d × d` matrix; the cube's own axes are its columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Rotation {
    dim: usize,
    m: Vec<f64>,
}

impl Rotation {
    pub fn identity(dim: usize) -> Self {
        let mut m = vec![0.0; dim * dim];
        for i in 0..dim {
            m[i * dim + i] = 1.0;
        }
        Rotation { dim, m }
    }

    /// Rotation by `angle` in the `(i, j)` coordinate plane.
    pub fn in_plane(dim: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut r = Rotation::identity(dim);
        let (s, c) = angle.sin_cos();
        r.m[i * dim + i] = c;
        r.m[i * dim + j] = -s;
        r.m[j * dim + i] = s;
        r.m[j * dim + j] = c;
        r
    }

    pub fn planar(angle: f64) -> Self {
        Rotation::in_plane(2, 0, 1, angle)
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Geometry("rotation must be a square matrix".into()));
        }
        let r = Rotation {
            dim,
            m: rows.into_iter().flatten().collect(),
        };
        for a in 0..dim {
            for b in 0..dim {
                let dot: f64 = (0..dim).map(|k| r.get(k, a) * r.get(k, b)).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (dot - want).abs() > GEOMETRY_TOL || !dot.is_finite() {
                    return Err(Error::Geometry(format!(
                        "rotation is not orthogonal (column dot {a},{b} = {dot})"
                    )));
                }
            }
        }
        Ok(r)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.m[row * self.dim + col]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.m.chunks(self.dim).map(|c| c.to_vec()).collect()
    }

    /// Coordinate of `x` along the cube's axis `k` (i.e. `(Rᵀ x)_k`).
    #[inline]
    fn axis_coord(&self, k: usize, x: &[f64]) -> f64 {
        (0..self.dim).map(|i| self.get(i, k) * x[i]).sum()
    }

    fn column_l1(&self, k: usize) -> f64 {
        (0..self.dim).map(|i| self.get(i, k).abs()).sum()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Rotation {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Rotation::from_rows(rows)
    }
}

impl From<Rotation> for Vec<Vec<f64>> {
    fn from(r: Rotation) -> Self {
        r.rows()
    }
}

/// Everything needed to construct a box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub dim: usize,
    pub side: f64,
    pub rotation: Rotation,
    /// Centre of the cube; the origin unless a box with an even number of
    /// lattice points per side is wanted.
    pub center: Vec<f64>,
    /// Which cube axis is normal to the hyperplane splitting T from B.
    pub face_axis: usize,
}

impl BoxSpec {
    pub fn straight(dim: usize, side: f64) -> Self {
        BoxSpec {
            dim,
            side,
            rotation: Rotation::identity(dim),
            center: vec![0.0; dim],
            face_axis: dim.saturating_sub(1),
        }
    }

    pub fn with_rotation(mut self, rotation: Rotation) -> Self {
        self.rotation = rotation;
        self
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Self {
        self.center = center;
        self
    }

    pub fn with_face_axis(mut self, axis: usize) -> Self {
        self.face_axis = axis;
        self
    }
}

/// Target of a distance query: a set of edges, optionally joined with the
/// complement of the cube.
#[derive(Clone, Copy, Debug)]
pub struct DistanceTarget<'a> {
    pub edges: &'a [EdgeId],
    pub complement: bool,
}

impl<'a> DistanceTarget<'a> {
    pub fn edges(edges: &'a [EdgeId]) -> Self {
        DistanceTarget {
            edges,
            complement: false,
        }
    }

    pub fn with_complement(edges: &'a [EdgeId]) -> Self {
        DistanceTarget {
            edges,
            complement: true,
        }
    }

    pub fn complement_only() -> Self {
        DistanceTarget {
            edges: &[],
            complement: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct BoxGeometry {
    spec: BoxSpec,
    coords: Vec<i32>,
    lookup: HashMap<Vec<i32>, VertexId>,
    graph: Graph,
    edge_axis: Vec<u8>,
    /// Doubled midpoints, so that all midpoint arithmetic stays integral.
    mid2: Vec<i32>,
    star_offsets: Vec<u32>,
    star_edges: Vec<EdgeId>,
    edge_complement: Vec<f64>,
    vertex_complement: Vec<f64>,
}

/// Straight or tilted box from `(dim, side, rotation)` with the default
/// centre (origin) and face axis (the last cube axis).
pub fn build_box(dim: usize, side: f64, rotation: Rotation) -> Result<BoxGeometry> {
    BoxGeometry::build(BoxSpec::straight(dim, side).with_rotation(rotation))
}

/// Interior *-neighbour count of an edge in the infinite lattice.
///
/// Parallel edges: `3^d - 1`; for each of the `d - 1` perpendicular
/// directions, `2 · 2 · 3^(d-2)` edges.
pub fn alpha(dim: usize) -> usize {
    assert!(dim >= 2, "alpha is defined for d >= 2");
    let p3 = |k: usize| 3usize.pow(k as u32);
    p3(dim) - 1 + 4 * (dim - 1) * p3(dim - 2)
}

impl BoxGeometry {
    pub fn build(spec: BoxSpec) -> Result<Self> {
        let d = spec.dim;
        if d < 2 {
            return Err(Error::Geometry(format!("dimension must be >= 2, got {d}")));
        }
        if !(spec.side.is_finite() && spec.side > 0.0) {
            return Err(Error::Geometry(format!("side must be positive, got {}", spec.side)));
        }
        if spec.rotation.dim() != d {
            return Err(Error::Geometry("rotation dimension mismatch".into()));
        }
        // Re-validate: a Rotation may have been built with in_plane from bad input.
        Rotation::from_rows(spec.rotation.rows())?;
        if spec.center.len() != d || spec.center.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("centre must have one finite coordinate per axis".into()));
        }
        if spec.face_axis >= d {
            return Err(Error::Geometry(format!("face axis {} out of range", spec.face_axis)));
        }

        let half = spec.side / 2.0;
        let inside = |x: &[i32]| -> bool {
            let rel: Vec<f64> = x
                .iter()
                .zip(&spec.center)
                .map(|(&xi, &ci)| xi as f64 - ci)
                .collect();
            (0..d).all(|k| spec.rotation.axis_coord(k, &rel).abs() <= half + GEOMETRY_TOL)
        };

        // Bounding window: the cube's circumradius is half·√d.
        let radius = (half * (d as f64).sqrt()).ceil() as i32 + 1;
        let lo: Vec<i32> = spec.center.iter().map(|c| c.floor() as i32 - radius).collect();
        let hi: Vec<i32> = spec.center.iter().map(|c| c.ceil() as i32 + radius).collect();

        let mut coords = Vec::new();
        let mut lookup = HashMap::new();
        let mut x = lo.clone();
        'scan: loop {
            if inside(&x) {
                lookup.insert(x.clone(), VertexId((coords.len() / d) as u32));
                coords.extend_from_slice(&x);
            }
            // odometer, last coordinate fastest
            let mut k = d;
            loop {
                if k == 0 {
                    break 'scan;
                }
                k -= 1;
                if x[k] < hi[k] {
                    x[k] += 1;
                    break;
                }
                x[k] = lo[k];
            }
        }
        let n_vertices = coords.len() / d;

        let mut edges = Vec::new();
        let mut edge_axis = Vec::new();
        let mut boundary = vec![false; n_vertices];
        let mut y = vec![0i32; d];
        for v in 0..n_vertices {
            let xv = &coords[v * d..(v + 1) * d];
            for axis in 0..d {
                for sign in [1, -1] {
                    y.copy_from_slice(xv);
                    y[axis] += sign;
                    match lookup.get(&y) {
                        Some(&w) if sign == 1 => {
                            edges.push((v as u32, w.0));
                            edge_axis.push(axis as u8);
                        }
                        Some(_) => {}
                        None => boundary[v] = true,
                    }
                }
            }
        }

        let (top, bottom) = split_vertices(&spec, &coords, &boundary, spec.face_axis);
        if top.is_empty() || bottom.is_empty() {
            return Err(Error::Geometry(format!(
                "box has |T| = {}, |B| = {}; both must be nonempty",
                top.len(),
                bottom.len()
            )));
        }
        let mut sides = vec![Side::Interior; n_vertices];
        for v in top {
            sides[v.index()] = Side::Top;
        }
        for v in bottom {
            sides[v.index()] = Side::Bottom;
        }
        let graph = Graph::new(sides, &edges)?;

        let mut mid2 = Vec::with_capacity(edges.len() * d);
        for (i, &(a, _)) in edges.iter().enumerate() {
            let xa = &coords[a as usize * d..(a as usize + 1) * d];
            for k in 0..d {
                mid2.push(2 * xa[k] + i32::from(edge_axis[i] as usize == k));
            }
        }

        let mut geom = BoxGeometry {
            spec,
            coords,
            lookup,
            graph,
            edge_axis,
            mid2,
            star_offsets: Vec::new(),
            star_edges: Vec::new(),
            edge_complement: Vec::new(),
            vertex_complement: Vec::new(),
        };
        geom.build_star();
        geom.edge_complement = geom
            .graph
            .edges()
            .map(|e| geom.point_complement_distance(&geom.midpoint(e)))
            .collect();
        geom.vertex_complement = geom
            .graph
            .vertices()
            .map(|v| geom.point_complement_distance(&geom.vertex_point(v)))
            .collect();
        Ok(geom)
    }

    fn build_star(&mut self) {
        let d = self.spec.dim;
        let mut by_mid: HashMap<&[i32], EdgeId> = HashMap::with_capacity(self.graph.edge_count());
        for e in self.graph.edges() {
            by_mid.insert(&self.mid2[e.index() * d..(e.index() + 1) * d], e);
        }
        let mut offsets = vec![0u32];
        let mut out = Vec::new();
        let mut probe = vec![0i32; d];
        let mut delta = vec![-2i32; d];
        for e in self.graph.edges() {
            let m = &self.mid2[e.index() * d..(e.index() + 1) * d];
            delta.iter_mut().for_each(|x| *x = -2);
            'offsets: loop {
                if delta.iter().any(|&x| x != 0) {
                    for k in 0..d {
                        probe[k] = m[k] + delta[k];
                    }
                    if let Some(&f) = by_mid.get(probe.as_slice()) {
                        out.push(f);
                    }
                }
                let mut k = d;
                loop {
                    if k == 0 {
                        break 'offsets;
                    }
                    k -= 1;
                    if delta[k] < 2 {
                        delta[k] += 1;
                        break;
                    }
                    delta[k] = -2;
                }
            }
            let start = *offsets.last().unwrap() as usize;
            out[start..].sort_unstable();
            offsets.push(out.len() as u32);
        }
        self.star_offsets = offsets;
        self.star_edges = out;
    }

    pub fn spec(&self) -> &BoxSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn vertex_coords(&self, v: VertexId) -> &[i32] {
        let d = self.spec.dim;
        &self.coords[v.index() * d..(v.index() + 1) * d]
    }

    pub fn vertex_at(&self, x: &[i32]) -> Option<VertexId> {
        self.lookup.get(x).copied()
    }

    /// Edge between two lattice points, if both are in the box and adjacent.
    pub fn edge_between(&self, a: &[i32], b: &[i32]) -> Option<EdgeId> {
        let va = self.vertex_at(a)?;
        let vb = self.vertex_at(b)?;
        self.graph
            .incident(va)
            .iter()
            .copied()
            .find(|&e| self.graph.other_end(e, va) == vb)
    }

    pub fn edge_axis(&self, e: EdgeId) -> usize {
        self.edge_axis[e.index()] as usize
    }

    fn vertex_point(&self, v: VertexId) -> Vec<f64> {
        self.vertex_coords(v).iter().map(|&c| c as f64).collect()
    }

    /// Twice the midpoint of `e`.
    pub fn midpoint2(&self, e: EdgeId) -> &[i32] {
        let d = self.spec.dim;
        &self.mid2[e.index() * d..(e.index() + 1) * d]
    }

    pub fn midpoint(&self, e: EdgeId) -> Vec<f64> {
        self.midpoint2(e).iter().map(|&c| c as f64 / 2.0).collect()
    }

    pub fn top(&self) -> Vec<VertexId> {
        self.graph.top().collect()
    }

    pub fn bottom(&self) -> Vec<VertexId> {
        self.graph.bottom().collect()
    }

    pub fn boundary(&self) -> Vec<VertexId> {
        self.graph.boundary().collect()
    }

    /// Splits `∂Λ` by the hyperplane through the centre normal to cube axis
    /// `face_axis`. Vertices on the hyperplane go to the top.
    pub fn split_tb(&self, face_axis: usize) -> Result<(Vec<VertexId>, Vec<VertexId>)> {
        if face_axis >= self.spec.dim {
            return Err(Error::Geometry(format!("face axis {face_axis} out of range")));
        }
        let boundary: Vec<bool> = self.graph.vertices().map(|v| self.graph.is_boundary(v)).collect();
        Ok(split_vertices(&self.spec, &self.coords, &boundary, face_axis))
    }

    /// Signed distance of a lattice point to the separating hyperplane.
    pub fn signed_height(&self, v: VertexId) -> f64 {
        let rel = self.relative(&self.vertex_point(v));
        self.spec.rotation.axis_coord(self.spec.face_axis, &rel)
    }

    fn relative(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.spec.center).map(|(a, c)| a - c).collect()
    }

    /// L∞ distance from a point inside the cube to the cube's complement.
    fn point_complement_distance(&self, x: &[f64]) -> f64 {
        let rel = self.relative(x);
        let half = self.spec.side / 2.0;
        (0..self.spec.dim)
            .map(|k| {
                let slack = half - self.spec.rotation.axis_coord(k, &rel).abs();
                slack / self.spec.rotation.column_l1(k)
            })
            .fold(f64::INFINITY, f64::min)
            .max(0.0)
    }

    pub fn star_neighbors(&self, e: EdgeId) -> Result<&[EdgeId]> {
        self.graph.check_edge(e)?;
        Ok(self.star(e))
    }

    /// Unchecked variant of [`star_neighbors`](Self::star_neighbors).
    #[inline]
    pub fn star(&self, e: EdgeId) -> &[EdgeId] {
        let lo = self.star_offsets[e.index()] as usize;
        let hi = self.star_offsets[e.index() + 1] as usize;
        &self.star_edges[lo..hi]
    }

    /// An edge whose *-neighbourhood is truncated by the box; a *-path
    /// reaching it touches `Λᶜ`.
    pub fn touches_complement(&self, e: EdgeId) -> bool {
        self.star(e).len() < alpha(self.spec.dim)
    }

    pub fn edge_distance(&self, e: EdgeId, f: EdgeId) -> f64 {
        let a = self.midpoint2(e);
        let b = self.midpoint2(f);
        let m = a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0);
        m as f64 / 2.0
    }

    /// L∞ distance between a vertex and the midpoint of an edge.
    pub fn vertex_edge_distance(&self, v: VertexId, e: EdgeId) -> f64 {
        let x = self.vertex_coords(v);
        let m = self.midpoint2(e);
        let d = x.iter().zip(m).map(|(a, b)| (2 * a - b).abs()).max().unwrap_or(0);
        d as f64 / 2.0
    }

    pub fn complement_distance(&self, e: EdgeId) -> f64 {
        self.edge_complement[e.index()]
    }

    pub fn vertex_complement_distance(&self, v: VertexId) -> f64 {
        self.vertex_complement[v.index()]
    }

    /// `d(e, A)`; `+∞` for an empty target.
    pub fn set_distance(&self, e: EdgeId, target: DistanceTarget<'_>) -> f64 {
        let mut best = if target.complement {
            self.complement_distance(e)
        } else {
            f64::INFINITY
        };
        for &f in target.edges {
            best = best.min(self.edge_distance(e, f));
        }
        best
    }

    /// `𝒱(A, r)`: every edge within distance `r` of the target.
    pub fn neighborhood(&self, target: DistanceTarget<'_>, r: f64) -> Vec<EdgeId> {
        self.graph
            .edges()
            .filter(|&e| self.set_distance(e, target) <= r)
            .collect()
    }

    /// Line-delimited dump: a header, one `v` line per vertex and one `e`
    /// line per edge.
    pub fn write_dump<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "# fkdyn-geometry v1 dim={} side={} vertices={} edges={}",
            self.spec.dim,
            self.spec.side,
            self.vertex_count(),
            self.edge_count()
        )?;
        for v in self.graph.vertices() {
            let tag = match self.graph.side(v) {
                Side::Top => "T",
                Side::Bottom => "B",
                Side::Interior => "I",
            };
            write!(w, "v {}", v.0)?;
            for c in self.vertex_coords(v) {
                write!(w, " {c}")?;
            }
            writeln!(w, " {tag}")?;
        }
        for e in self.graph.edges() {
            let (a, b) = self.graph.endpoints(e);
            write!(w, "e {} {} {}", e.0, a.0, b.0)?;
            for c in self.midpoint(e) {
                write!(w, " {c}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn split_vertices(
    spec: &BoxSpec,
    coords: &[i32],
    boundary: &[bool],
    face_axis: usize,
) -> (Vec<VertexId>, Vec<VertexId>) {
    let d = spec.dim;
    let mut top = Vec::new();
    let mut bottom = Vec::new();
    for (v, &on_boundary) in boundary.iter().enumerate() {
        if !on_boundary {
            continue;
        }
        let rel: Vec<f64> = coords[v * d..(v + 1) * d]
            .iter()
            .zip(&spec.center)
            .map(|(&x, &c)| x as f64 - c)
            .collect();
        let h = spec.rotation.axis_coord(face_axis, &rel);
        if h >= -GEOMETRY_TOL {
            top.push(VertexId(v as u32));
        } else {
            bottom.push(VertexId(v as u32));
        }
    }
    (top, bottom)
}
