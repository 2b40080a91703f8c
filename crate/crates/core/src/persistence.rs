//! Extended persistence of a vertex-valued graph.
//!
//! Vertices enter the ascending sweep in order of value (ties by id) and an
//! edge enters together with its later endpoint. The descending sweep cones
//! off superlevel sets in the reverse order, an edge entering with its
//! earlier endpoint. Every class is paired, giving four kinds of points:
//!
//! * `Ord0`: sublevel components merged during the ascending sweep,
//! * `Ext0`: one per connected component, (component minimum, maximum),
//! * `Rel1`: superlevel components merged during the descending sweep,
//! * `Ext1`: independent cycles, born ascending and killed descending.
//!
//! Two implementations are provided: a boundary-matrix reduction over the
//! coned complex and a union-find sweep. They agree exactly.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{GaleError, Result};
use crate::mapper::MapperGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointClass {
    Ord0,
    Rel1,
    Ext0,
    Ext1,
}

impl PointClass {
    pub const ALL: [PointClass; 4] = [PointClass::Ord0, PointClass::Rel1, PointClass::Ext0, PointClass::Ext1];

    /// Whether points of this class lie on or above the diagonal.
    fn ascends(self) -> bool {
        matches!(self, PointClass::Ord0 | PointClass::Ext0)
    }

    pub fn tag(self) -> &'static str {
        match self {
            PointClass::Ord0 => "ord0",
            PointClass::Rel1 => "rel1",
            PointClass::Ext0 => "ext0",
            PointClass::Ext1 => "ext1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagramPoint {
    pub birth: f64,
    pub death: f64,
    pub class: PointClass,
}

impl DiagramPoint {
    pub fn new(birth: f64, death: f64, class: PointClass) -> Self {
        DiagramPoint { birth, death, class }
    }

    pub fn persistence(&self) -> f64 {
        (self.death - self.birth).abs()
    }

    fn canonical_cmp(&self, other: &Self) -> Ordering {
        self.class
            .cmp(&other.class)
            .then(self.birth.total_cmp(&other.birth))
            .then(self.death.total_cmp(&other.death))
    }
}

/// Multiset of diagram points, kept in a canonical order so that equality is
/// multiset equality.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PersistenceDiagram {
    points: Vec<DiagramPoint>,
}

impl PersistenceDiagram {
    pub fn from_points(mut points: Vec<DiagramPoint>) -> Result<Self> {
        for p in &points {
            if !(p.birth.is_finite() && p.death.is_finite()) {
                return Err(GaleError::Format(format!("non-finite point {p:?}")));
            }
            if p.birth == p.death {
                return Err(GaleError::Format(format!("zero-persistence point {p:?}")));
            }
            let up = p.death > p.birth;
            if up != p.class.ascends() {
                return Err(GaleError::Format(format!(
                    "point {p:?} lies on the wrong side of the diagonal for its class"
                )));
            }
        }
        points.sort_by(DiagramPoint::canonical_cmp);
        Ok(PersistenceDiagram { points })
    }

    /// Drops zero-persistence pairs from a raw pairing.
    pub fn from_pairs(pairs: Vec<DiagramPoint>) -> Self {
        let mut points: Vec<DiagramPoint> = pairs.into_iter().filter(|p| p.birth != p.death).collect();
        points.sort_by(DiagramPoint::canonical_cmp);
        PersistenceDiagram { points }
    }

    pub fn points(&self) -> &[DiagramPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn of_class(&self, class: PointClass) -> impl Iterator<Item = &DiagramPoint> {
        self.points.iter().filter(move |p| p.class == class)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagramStats {
    pub ord0: usize,
    pub rel1: usize,
    pub ext0: usize,
    pub ext1: usize,
    pub max_persistence: f64,
    pub total_persistence: f64,
}

pub fn diagram_stats(d: &PersistenceDiagram) -> DiagramStats {
    let count = |c| d.of_class(c).count();
    DiagramStats {
        ord0: count(PointClass::Ord0),
        rel1: count(PointClass::Rel1),
        ext0: count(PointClass::Ext0),
        ext1: count(PointClass::Ext1),
        max_persistence: d.points.iter().map(DiagramPoint::persistence).fold(0.0, f64::max),
        total_persistence: d.points.iter().map(DiagramPoint::persistence).sum(),
    }
}

/// Simple undirected graph with a value on every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct ValuedGraph {
    values: Vec<f64>,
    edges: Vec<(usize, usize)>,
}

impl ValuedGraph {
    /// Self-loops are rejected; parallel edges are collapsed.
    pub fn new(values: Vec<f64>, edges: Vec<(usize, usize)>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(GaleError::Data(format!("non-finite vertex value {v}")));
        }
        let n = values.len();
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v || u >= n || v >= n {
                return Err(GaleError::Data(format!("invalid edge ({u}, {v})")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        Ok(ValuedGraph {
            values,
            edges: set.into_iter().collect(),
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

impl From<&MapperGraph> for ValuedGraph {
    fn from(g: &MapperGraph) -> Self {
        ValuedGraph {
            values: g.node_values(),
            edges: g.edges().to_vec(),
        }
    }
}

/// Vertex order shared by both implementations.
struct Filtration {
    /// `order[k]` is the vertex at position `k`.
    order: Vec<usize>,
    /// Edges as `(low position, high position, edge index)`.
    edges: Vec<(usize, usize, usize)>,
}

impl Filtration {
    fn new(g: &ValuedGraph) -> Self {
        let n = g.values.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| g.values[a].total_cmp(&g.values[b]).then(a.cmp(&b)));
        let mut pos = vec![0; n];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let edges = g
            .edges
            .iter()
            .enumerate()
            .map(|(i, &(u, v))| {
                let (a, b) = (pos[u], pos[v]);
                (a.min(b), a.max(b), i)
            })
            .collect();
        Filtration { order, edges }
    }

    fn value_at(&self, g: &ValuedGraph, k: usize) -> f64 {
        g.values[self.order[k]]
    }

    /// Edge indices grouped by high position, each group sorted by (low, index).
    fn by_high(&self) -> Vec<Vec<(usize, usize, usize)>> {
        let mut out = vec![Vec::new(); self.order.len()];
        for &e in &self.edges {
            out[e.1].push(e);
        }
        for group in &mut out {
            group.sort_by_key(|&(lo, _, i)| (lo, i));
        }
        out
    }

    /// Edge indices grouped by low position, each group sorted by (high desc, index).
    fn by_low(&self) -> Vec<Vec<(usize, usize, usize)>> {
        let mut out = vec![Vec::new(); self.order.len()];
        for &e in &self.edges {
            out[e.0].push(e);
        }
        for group in &mut out {
            group.sort_by_key(|&(_, hi, i)| (std::cmp::Reverse(hi), i));
        }
        out
    }
}

pub fn extended_persistence_reference(g: &MapperGraph) -> PersistenceDiagram {
    PersistenceDiagram::from_pairs(extended_pairs_reference(&ValuedGraph::from(g)))
}

pub fn extended_persistence_fast(g: &MapperGraph) -> PersistenceDiagram {
    PersistenceDiagram::from_pairs(extended_pairs_fast(&ValuedGraph::from(g)))
}

#[derive(Clone, Copy)]
enum Cell {
    Cone,
    Vertex(usize),
    Edge { hi: usize },
    ConeVertex(usize),
    ConeEdge { lo: usize },
}

fn xor_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// All pairs, zero-persistence included, by reducing the boundary matrix of
/// the graph joined with a cone over its superlevel sweep. The cone apex comes
/// first so the unique essential class is the apex itself.
pub fn extended_pairs_reference(g: &ValuedGraph) -> Vec<DiagramPoint> {
    let filt = Filtration::new(g);
    let n = filt.order.len();
    let by_high = filt.by_high();
    let by_low = filt.by_low();

    let mut cells: Vec<Cell> = Vec::with_capacity(1 + 2 * (n + filt.edges.len()));
    let mut columns: Vec<Vec<usize>> = Vec::with_capacity(cells.capacity());
    cells.push(Cell::Cone);
    columns.push(Vec::new());

    let mut vertex_idx = vec![0; n];
    let mut edge_idx = vec![0; filt.edges.len()];
    for a in 0..n {
        vertex_idx[a] = cells.len();
        cells.push(Cell::Vertex(a));
        columns.push(Vec::new());
        for &(lo, hi, i) in &by_high[a] {
            edge_idx[i] = cells.len();
            cells.push(Cell::Edge { hi });
            let mut col = vec![vertex_idx[lo], vertex_idx[hi]];
            col.sort_unstable();
            columns.push(col);
        }
    }
    let mut cone_vertex_idx = vec![0; n];
    for b in (0..n).rev() {
        cone_vertex_idx[b] = cells.len();
        cells.push(Cell::ConeVertex(b));
        columns.push(vec![0, vertex_idx[b]]);
        for &(lo, hi, i) in &by_low[b] {
            cells.push(Cell::ConeEdge { lo });
            let mut col = vec![edge_idx[i], cone_vertex_idx[lo], cone_vertex_idx[hi]];
            col.sort_unstable();
            columns.push(col);
        }
    }

    let mut pivot_of: HashMap<usize, usize> = HashMap::new();
    let mut pairs = Vec::new();
    for j in 0..columns.len() {
        let mut col = std::mem::take(&mut columns[j]);
        while let Some(&low) = col.last() {
            match pivot_of.get(&low) {
                Some(&k) => col = xor_sorted(&col, &columns[k]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            pivot_of.insert(low, j);
            pairs.push((low, j));
        }
        columns[j] = col;
    }

    let val = |k: usize| filt.value_at(g, k);
    pairs
        .into_iter()
        .map(|(birth, death)| match (cells[birth], cells[death]) {
            (Cell::Vertex(a), Cell::Edge { hi, .. }) => DiagramPoint::new(val(a), val(hi), PointClass::Ord0),
            (Cell::Vertex(a), Cell::ConeVertex(b)) => DiagramPoint::new(val(a), val(b), PointClass::Ext0),
            (Cell::Edge { hi, .. }, Cell::ConeEdge { lo }) => DiagramPoint::new(val(hi), val(lo), PointClass::Ext1),
            (Cell::ConeVertex(b), Cell::ConeEdge { lo }) => DiagramPoint::new(val(b), val(lo), PointClass::Rel1),
            _ => unreachable!("pairing between incompatible cells"),
        })
        .collect()
}

/// Union-find over positions; each root remembers the position its
/// component was born at.
struct SweepSet {
    parent: Vec<usize>,
    birth: Vec<usize>,
}

impl SweepSet {
    fn new(n: usize) -> Self {
        SweepSet {
            parent: (0..n).collect(),
            birth: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// All pairs, zero-persistence included, from union-find sweeps.
///
/// Ord0 and Rel1 follow the elder rule in the ascending and descending
/// sweeps. Ext1 pairs come from counting cycles in band subgraphs: the number
/// of cycles born at or below position `a` that die at or above position `b`
/// is the cycle rank of the subgraph of edges whose endpoints both lie in
/// `[b, a]`.
pub fn extended_pairs_fast(g: &ValuedGraph) -> Vec<DiagramPoint> {
    let filt = Filtration::new(g);
    let n = filt.order.len();
    let val = |k: usize| filt.value_at(g, k);
    let by_high = filt.by_high();
    let by_low = filt.by_low();
    let mut out = Vec::new();

    // ascending sweep: Ord0, Ext0, and the positions where cycles are born
    let mut up = SweepSet::new(n);
    let mut cycle_births = vec![0usize; n];
    for a in 0..n {
        for &(lo, hi, _) in &by_high[a] {
            let (ra, rb) = (up.find(lo), up.find(hi));
            if ra == rb {
                cycle_births[a] += 1;
                continue;
            }
            let (elder, younger) = if up.birth[ra] < up.birth[rb] { (ra, rb) } else { (rb, ra) };
            out.push(DiagramPoint::new(val(up.birth[younger]), val(a), PointClass::Ord0));
            up.parent[younger] = elder;
        }
    }
    let mut comp_max: HashMap<usize, usize> = HashMap::new();
    for k in 0..n {
        let r = up.find(k);
        let m = comp_max.entry(r).or_insert(k);
        *m = (*m).max(k);
    }
    let mut roots: Vec<(usize, usize)> = comp_max.into_iter().collect();
    roots.sort_unstable();
    for (r, m) in roots {
        out.push(DiagramPoint::new(val(up.birth[r]), val(m), PointClass::Ext0));
    }

    // descending sweep: Rel1
    let mut down = SweepSet::new(n);
    for b in (0..n).rev() {
        for &(lo, hi, _) in &by_low[b] {
            let (ra, rb) = (down.find(lo), down.find(hi));
            if ra == rb {
                continue;
            }
            let (elder, younger) = if down.birth[ra] > down.birth[rb] { (ra, rb) } else { (rb, ra) };
            out.push(DiagramPoint::new(val(down.birth[younger]), val(b), PointClass::Rel1));
            down.parent[younger] = elder;
        }
    }

    // Ext1: difference of band cycle counts between consecutive birth steps
    let mut previous = vec![0usize; n];
    for a in 0..n {
        if cycle_births[a] == 0 {
            continue;
        }
        let mut band = SweepSet::new(n);
        let mut closing = vec![0usize; n];
        for b in (0..=a).rev() {
            for &(lo, hi, _) in by_low[b].iter().filter(|e| e.1 <= a) {
                let (ra, rb) = (band.find(lo), band.find(hi));
                if ra == rb {
                    closing[b] += 1;
                } else {
                    band.parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
        for b in 0..=a {
            let fresh = closing[b]
                .checked_sub(previous[b])
                .expect("band cycle counts are monotone in the birth step");
            for _ in 0..fresh {
                out.push(DiagramPoint::new(val(a), val(b), PointClass::Ext1));
            }
        }
        previous = closing;
    }
    out
}
