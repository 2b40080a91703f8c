//! Mapper graphs of the lens over the explanation space.
//!
//! The lens range is cut into `resolution` closed intervals of equal length
//! overlapping by `gain`; points falling in each interval are clustered by
//! single linkage in explanation space, every cluster becomes a node, and
//! nodes that share a point are joined by an edge.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dataio::{ExplanationMatrix, LensVector};
use crate::error::{GaleError, Result};
use crate::matrix::Matrix;

/// Half-width of the single interval used when the lens is constant.
pub const DEGENERATE_HALF_WIDTH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapperParams {
    pub resolution: usize,
    pub gain: f64,
    pub threshold_fraction: f64,
}

impl MapperParams {
    pub fn new(resolution: usize, gain: f64, threshold_fraction: f64) -> Result<Self> {
        let p = MapperParams {
            resolution,
            gain,
            threshold_fraction,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.resolution < 1 {
            return Err(GaleError::Config("resolution must be at least 1".into()));
        }
        if !(0.0..0.5).contains(&self.gain) {
            return Err(GaleError::Config(format!(
                "gain {} outside [0, 0.5)",
                self.gain
            )));
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction <= 1.0) {
            return Err(GaleError::Config(format!(
                "threshold fraction {} outside (0, 1]",
                self.threshold_fraction
            )));
        }
        Ok(())
    }
}

/// Where the cover is anchored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverAnchor {
    /// Observed lens minimum and maximum.
    #[default]
    Observed,
    /// The whole unit interval.
    Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cover {
    intervals: Vec<(f64, f64)>,
}

impl Cover {
    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }
}

/// Cover of `[lo, hi]` by `resolution` equal closed intervals with overlap
/// fraction `gain`.
pub fn cover_range(lo: f64, hi: f64, resolution: usize, gain: f64) -> Result<Cover> {
    if resolution < 1 {
        return Err(GaleError::Config("resolution must be at least 1".into()));
    }
    if !(0.0..0.5).contains(&gain) {
        return Err(GaleError::Config(format!("gain {gain} outside [0, 0.5)")));
    }
    if !(lo.is_finite() && hi.is_finite()) || hi < lo {
        return Err(GaleError::Data(format!("invalid lens range [{lo}, {hi}]")));
    }
    if hi == lo {
        return Ok(Cover {
            intervals: vec![(lo - DEGENERATE_HALF_WIDTH, lo + DEGENERATE_HALF_WIDTH)],
        });
    }
    let r = resolution as f64;
    let len = (hi - lo) / (r - (r - 1.0) * gain);
    let step = len * (1.0 - gain);
    let mut intervals: Vec<(f64, f64)> = (0..resolution)
        .map(|i| {
            let start = lo + i as f64 * step;
            (start, start + len)
        })
        .collect();
    // pin the ends so rounding never leaves the extremes uncovered
    intervals[0].0 = lo;
    intervals[resolution - 1].1 = hi;
    Ok(Cover { intervals })
}

pub fn build_cover(lens: &LensVector, resolution: usize, gain: f64) -> Result<Cover> {
    build_cover_anchored(lens, resolution, gain, CoverAnchor::Observed)
}

pub fn build_cover_anchored(
    lens: &LensVector,
    resolution: usize,
    gain: f64,
    anchor: CoverAnchor,
) -> Result<Cover> {
    if lens.is_empty() {
        return Err(GaleError::Data("empty lens".into()));
    }
    let (lo, hi) = match anchor {
        CoverAnchor::Observed => lens
            .values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))),
        CoverAnchor::Unit => (0.0, 1.0),
    };
    cover_range(lo, hi, resolution, gain)
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins, keeping labels independent of merge order
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// Single-linkage clusters of the rows `subset` of `data` cut at `cut`:
/// connected components of the graph joining rows at Euclidean distance
/// `<= cut`. Clusters hold original row indices in ascending order and are
/// ordered by their smallest member.
pub fn single_linkage_clusters(data: &Matrix, subset: &[usize], cut: f64) -> Vec<Vec<usize>> {
    let m = subset.len();
    let mut ds = DisjointSet::new(m);
    for a in 0..m {
        let ra = data.row(subset[a]);
        for b in (a + 1)..m {
            if ds.find(a) == ds.find(b) {
                continue;
            }
            let d = crate::matrix::sq_dist(ra, data.row(subset[b])).sqrt();
            if d <= cut {
                ds.union(a, b);
            }
        }
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by_key(|&k| subset[k]);
    let mut root_slot: Vec<Option<usize>> = vec![None; m];
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in order {
        let r = ds.find(k);
        let slot = *root_slot[r].get_or_insert_with(|| {
            clusters.push(Vec::new());
            clusters.len() - 1
        });
        clusters[slot].push(subset[k]);
    }
    for c in &mut clusters {
        c.dedup();
    }
    clusters
}

/// Checked form of [`single_linkage_clusters`] for external callers.
pub fn cluster_points(data: &Matrix, subset: &[usize], cut: f64) -> Result<Vec<Vec<usize>>> {
    if subset.is_empty() {
        return Err(GaleError::Data("cannot cluster an empty point set".into()));
    }
    if !(cut > 0.0) || !cut.is_finite() {
        return Err(GaleError::Config(format!("cut distance {cut} must be positive")));
    }
    if let Some(&bad) = subset.iter().find(|&&i| i >= data.rows()) {
        return Err(GaleError::Shape(format!("row {bad} out of range")));
    }
    Ok(single_linkage_clusters(data, subset, cut))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapperNode {
    pub id: usize,
    pub members: Vec<usize>,
    pub lens_mean: f64,
}

/// Nodes are clusters of points; an edge joins every pair of nodes that share
/// a point. Node `i` always has id `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MapperGraph {
    nodes: Vec<MapperNode>,
    edges: Vec<(usize, usize)>,
}

impl MapperGraph {
    /// Validates and normalizes nodes and edges (ids contiguous from zero,
    /// members sorted, edges exactly the member-sharing pairs, stored as
    /// `(small, large)` in lexicographic order).
    pub fn from_parts(mut nodes: Vec<MapperNode>, edges: Vec<(usize, usize)>) -> Result<Self> {
        nodes.sort_by_key(|n| n.id);
        for (i, n) in nodes.iter_mut().enumerate() {
            if n.id != i {
                return Err(GaleError::Format(format!(
                    "node ids must be 0..{}, found {}",
                    i, n.id
                )));
            }
            if n.members.is_empty() {
                return Err(GaleError::Format(format!("node {i} has no members")));
            }
            if !n.lens_mean.is_finite() {
                return Err(GaleError::Format(format!("node {i} has non-finite lens mean")));
            }
            n.members.sort_unstable();
            n.members.dedup();
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u == v || u >= nodes.len() || v >= nodes.len() {
                return Err(GaleError::Format(format!("invalid edge ({u}, {v})")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let expected = shared_member_edges(&nodes);
        if expected != set {
            return Err(GaleError::Format(
                "edge set does not match the node-sharing relation".into(),
            ));
        }
        Ok(MapperGraph {
            nodes,
            edges: set.into_iter().collect(),
        })
    }

    pub fn nodes(&self) -> &[MapperNode] {
        &self.nodes
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_values(&self) -> Vec<f64> {
        self.nodes.iter().map(|n| n.lens_mean).collect()
    }
}

fn shared_member_edges(nodes: &[MapperNode]) -> BTreeSet<(usize, usize)> {
    let max_point = nodes
        .iter()
        .flat_map(|n| n.members.iter().copied())
        .max()
        .map_or(0, |m| m + 1);
    let mut owners: Vec<Vec<usize>> = vec![Vec::new(); max_point];
    for n in nodes {
        for &p in &n.members {
            owners[p].push(n.id);
        }
    }
    let mut edges = BTreeSet::new();
    for list in owners {
        for a in 0..list.len() {
            for b in (a + 1)..list.len() {
                let (u, v) = (list[a], list[b]);
                edges.insert((u.min(v), u.max(v)));
            }
        }
    }
    edges
}

pub fn build_mapper(e: &ExplanationMatrix, lens: &LensVector, p: &MapperParams) -> Result<MapperGraph> {
    build_mapper_anchored(e, lens, p, CoverAnchor::Observed)
}

pub fn build_mapper_anchored(
    e: &ExplanationMatrix,
    lens: &LensVector,
    p: &MapperParams,
    anchor: CoverAnchor,
) -> Result<MapperGraph> {
    lens.check_paired(e)?;
    p.validate()?;
    build_mapper_raw(e.values(), lens.values(), p, anchor)
}

/// Mapper on unchecked inputs; shared by the bootstrap, which resamples rows.
pub(crate) fn build_mapper_raw(
    values: &Matrix,
    lens: &[f64],
    p: &MapperParams,
    anchor: CoverAnchor,
) -> Result<MapperGraph> {
    let (lo, hi) = match anchor {
        CoverAnchor::Observed => lens
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v))),
        CoverAnchor::Unit => (0.0, 1.0),
    };
    let cover = cover_range(lo, hi, p.resolution, p.gain)?;
    let (emin, emax) = values.value_range();
    let cut = p.threshold_fraction * (emax - emin);

    let mut nodes = Vec::new();
    for &(a, b) in cover.intervals() {
        let inside: Vec<usize> = (0..lens.len())
            .filter(|&i| lens[i] >= a && lens[i] <= b)
            .collect();
        if inside.is_empty() {
            continue;
        }
        for members in single_linkage_clusters(values, &inside, cut) {
            let lens_mean = members.iter().map(|&i| lens[i]).sum::<f64>() / members.len() as f64;
            nodes.push(MapperNode {
                id: nodes.len(),
                members,
                lens_mean,
            });
        }
    }
    let edges = shared_member_edges(&nodes).into_iter().collect();
    Ok(MapperGraph { nodes, edges })
}

/// Number of connected components and a component label per node (labels
/// numbered by first appearance in node order).
pub fn connected_components(g: &MapperGraph) -> (usize, Vec<usize>) {
    components_of(g.node_count(), g.edges())
}

pub fn components_of(n: usize, edges: &[(usize, usize)]) -> (usize, Vec<usize>) {
    let mut ds = DisjointSet::new(n);
    for &(u, v) in edges {
        ds.union(u, v);
    }
    let mut label = vec![usize::MAX; n];
    let mut count = 0;
    for i in 0..n {
        let r = ds.find(i);
        if label[r] == usize::MAX {
            label[r] = count;
            count += 1;
        }
        label[i] = label[r];
    }
    (count, label)
}
