//! Neighbor graphs from true positions and MHS selection strategies.
//!
//! Selecting the minimum set of hotspots such that every user with at least one
//! neighbor is covered is a set-cover instance: the candidate `u` covers its
//! closed neighborhood `N(u) ∪ {u}`. The greedy strategy picks, at each step, the
//! candidate covering the most uncovered users and is within a harmonic-number
//! factor of the optimum.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::model::{Position, UserId};

pub const GREEDY: &str = "greedy";
pub const EXHAUSTIVE: &str = "exhaustive";

/// Node cap for the exponential exact search.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Undirected, irreflexive graph over user ids. Nodes are kept sorted and
/// adjacency lists hold sorted node indices, stored back to back.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborGraph {
    ids: Vec<UserId>,
    /// Node `i` owns `targets[offsets[i]..offsets[i + 1]]`.
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Default for NeighborGraph {
    fn default() -> Self {
        NeighborGraph {
            ids: Vec::new(),
            offsets: vec![0],
            targets: Vec::new(),
        }
    }
}

impl NeighborGraph {
    /// Builds a graph from explicit edges; self-loops and duplicates are dropped.
    pub fn from_edges(
        nodes: impl IntoIterator<Item = UserId>,
        edges: impl IntoIterator<Item = (UserId, UserId)>,
    ) -> Self {
        let ids: Vec<UserId> = nodes.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); ids.len()];
        for (a, b) in edges {
            if a == b {
                continue;
            }
            let (Ok(i), Ok(j)) = (ids.binary_search(&a), ids.binary_search(&b)) else {
                continue;
            };
            adjacency[i].push(j as u32);
            adjacency[j].push(i as u32);
        }
        let mut g = NeighborGraph {
            ids,
            ..NeighborGraph::default()
        };
        for mut list in adjacency {
            list.sort_unstable();
            list.dedup();
            g.push_node(&list);
        }
        g
    }

    fn push_node(&mut self, neighbors: &[u32]) {
        self.targets.extend_from_slice(neighbors);
        self.offsets.push(self.targets.len() as u32);
    }

    fn adj(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn nodes(&self) -> &[UserId] {
        &self.ids
    }

    pub fn contains(&self, id: UserId) -> bool {
        self.ids.binary_search(&id).is_ok()
    }

    pub fn neighbors(&self, id: UserId) -> impl Iterator<Item = UserId> + '_ {
        let list = match self.ids.binary_search(&id) {
            Ok(i) => self.adj(i),
            Err(_) => &[],
        };
        list.iter().map(move |&j| self.ids[j as usize])
    }

    pub fn degree(&self, id: UserId) -> usize {
        self.ids.binary_search(&id).map(|i| self.adj(i).len()).unwrap_or(0)
    }

    pub fn has_edge(&self, a: UserId, b: UserId) -> bool {
        match (self.ids.binary_search(&a), self.ids.binary_search(&b)) {
            (Ok(i), Ok(j)) => self.adj(i).binary_search(&(j as u32)).is_ok(),
            _ => false,
        }
    }

    /// Each undirected edge once, as `(smaller, larger)`, in ascending order.
    pub fn edges(&self) -> Vec<(UserId, UserId)> {
        self.index_edges().map(|(i, j)| (self.ids[i], self.ids[j])).collect()
    }

    /// [`Self::edges`] as positions into [`Self::nodes`].
    pub fn index_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.ids.len()).flat_map(move |i| {
            self.adj(i)
                .iter()
                .map(|&j| j as usize)
                .filter(move |&j| j > i)
                .map(move |j| (i, j))
        })
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Subgraph induced by the nodes accepted by `keep`.
    pub fn induced(&self, mut keep: impl FnMut(UserId) -> bool) -> NeighborGraph {
        let kept: Vec<bool> = self.ids.iter().map(|&id| keep(id)).collect();
        let mut remap = vec![u32::MAX; self.ids.len()];
        let mut out = NeighborGraph::default();
        for (i, &k) in kept.iter().enumerate() {
            if k {
                remap[i] = out.ids.len() as u32;
                out.ids.push(self.ids[i]);
            }
        }
        for (i, &k) in kept.iter().enumerate() {
            if k {
                out.targets.extend(
                    self.adj(i)
                        .iter()
                        .filter(|&&j| kept[j as usize])
                        .map(|&j| remap[j as usize]),
                );
                out.offsets.push(out.targets.len() as u32);
            }
        }
        out
    }
}

/// Disc graph: an edge joins two users whose true positions are at most
/// `wifi_range` meters apart.
pub fn neighbor_graph(positions: &BTreeMap<UserId, Position>, wifi_range: f64) -> NeighborGraph {
    let ids: Vec<UserId> = positions.keys().copied().collect();
    let pts: Vec<Position> = positions.values().copied().collect();
    let r2 = wifi_range * wifi_range;

    // Bucket by cells of side `wifi_range` so only the 3x3 block needs checking.
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in &pts {
        (x0, y0, x1, y1) = (x0.min(p.x), y0.min(p.y), x1.max(p.x), y1.max(p.y));
    }
    // `v >= lo`, so truncation is the floor.
    let cell_of = |v: f64, lo: f64| ((v - lo) / wifi_range) as usize;
    let (cols, rows) = if pts.is_empty() {
        (0, 0)
    } else {
        (cell_of(x1, x0) + 1, cell_of(y1, y0) + 1)
    };
    // Counting sort of point indices by cell.
    let cells: Vec<usize> = pts.iter().map(|p| cell_of(p.y, y0) * cols + cell_of(p.x, x0)).collect();
    let mut start = vec![0u32; cols * rows + 1];
    for &c in &cells {
        start[c + 1] += 1;
    }
    for c in 0..cols * rows {
        start[c + 1] += start[c];
    }
    let mut fill = start.clone();
    let mut order = vec![0u32; pts.len()];
    for (i, &c) in cells.iter().enumerate() {
        order[fill[c] as usize] = i as u32;
        fill[c] += 1;
    }

    let mut g = NeighborGraph {
        ids,
        ..NeighborGraph::default()
    };
    g.offsets.reserve(pts.len());
    let mut near: Vec<u32> = Vec::new();
    for (i, p) in pts.iter().enumerate() {
        near.clear();
        let (cx, cy) = (cells[i] % cols, cells[i] / cols);
        for y in cy.saturating_sub(1)..=(cy + 1).min(rows - 1) {
            for x in cx.saturating_sub(1)..=(cx + 1).min(cols - 1) {
                let c = y * cols + x;
                for &j in &order[start[c] as usize..start[c + 1] as usize] {
                    if j as usize == i {
                        continue;
                    }
                    let q = &pts[j as usize];
                    let (ex, ey) = (p.x - q.x, p.y - q.y);
                    if ex * ex + ey * ey <= r2 {
                        near.push(j);
                    }
                }
            }
        }
        near.sort_unstable();
        g.push_node(&near);
    }
    g
}

/// Closed-neighborhood cover check: every node with degree >= 1 is selected or
/// adjacent to a selected node, and no isolated node is selected.
pub fn is_valid_cover(g: &NeighborGraph, selected: &BTreeSet<UserId>) -> bool {
    if selected.iter().any(|&s| g.degree(s) == 0) {
        return false;
    }
    g.nodes()
        .iter()
        .all(|&u| g.degree(u) == 0 || selected.contains(&u) || g.neighbors(u).any(|v| selected.contains(&v)))
}

/// Greedy set cover over closed neighborhoods, ties broken by smallest id.
pub fn greedy_mhs_select(g: &NeighborGraph) -> BTreeSet<UserId> {
    let n = g.len();
    let mut covered: Vec<bool> = (0..n).map(|i| g.adj(i).is_empty()).collect();
    let mut uncovered = covered.iter().filter(|c| !**c).count();
    let gain = |i: usize, covered: &[bool]| -> usize {
        (!covered[i]) as usize + g.adj(i).iter().filter(|&&j| !covered[j as usize]).count()
    };

    // Lazy max-heap keyed by (gain, smallest index). Gains only shrink, so an
    // entry whose stored gain is still current is the true maximum.
    let mut heap: BinaryHeap<(usize, Reverse<usize>)> = (0..n)
        .filter(|&i| !g.adj(i).is_empty())
        .map(|i| (gain(i, &covered), Reverse(i)))
        .collect();

    let mut selected = BTreeSet::new();
    while uncovered > 0 {
        let Some((stored, Reverse(i))) = heap.pop() else {
            break;
        };
        let current = gain(i, &covered);
        if current != stored {
            if current > 0 {
                heap.push((current, Reverse(i)));
            }
            continue;
        }
        selected.insert(g.ids[i]);
        for j in std::iter::once(i).chain(g.adj(i).iter().map(|&j| j as usize)) {
            if !covered[j] {
                covered[j] = true;
                uncovered -= 1;
            }
        }
    }
    selected
}

/// Minimum cover by exhaustive search; among minimum covers the
/// lexicographically smallest id list wins.
pub fn optimal_mhs_bruteforce(g: &NeighborGraph) -> Result<BTreeSet<UserId>> {
    let n = g.len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::SearchTooLarge {
            nodes: n,
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let candidates: Vec<usize> = (0..n).filter(|&i| !g.adj(i).is_empty()).collect();
    let target: u32 = candidates.iter().fold(0, |m, &i| m | (1 << i));
    let closed: Vec<u32> = (0..n)
        .map(|i| g.adj(i).iter().fold(1u32 << i, |m, &j| m | (1 << j)))
        .collect();

    fn search(
        start: usize,
        left: usize,
        acc: u32,
        cands: &[usize],
        closed: &[u32],
        target: u32,
        picked: &mut Vec<usize>,
    ) -> bool {
        if left == 0 {
            return acc & target == target;
        }
        for k in start..cands.len() {
            if cands.len() - k < left {
                break;
            }
            picked.push(cands[k]);
            if search(k + 1, left - 1, acc | closed[cands[k]], cands, closed, target, picked) {
                return true;
            }
            picked.pop();
        }
        false
    }

    let mut picked = Vec::new();
    for size in 0..=candidates.len() {
        if search(0, size, 0, &candidates, &closed, target, &mut picked) {
            return Ok(picked.iter().map(|&i| g.ids[i]).collect());
        }
    }
    unreachable!("selecting every candidate always covers the universe")
}

/// An MHS selection strategy, looked up by name at runtime.
pub trait MhsSelector: Send + Sync {
    fn name(&self) -> &'static str;

    fn select(&self, graph: &NeighborGraph) -> Result<BTreeSet<UserId>>;
}

pub struct GreedySelector;

impl MhsSelector for GreedySelector {
    fn name(&self) -> &'static str {
        GREEDY
    }

    fn select(&self, graph: &NeighborGraph) -> Result<BTreeSet<UserId>> {
        Ok(greedy_mhs_select(graph))
    }
}

/// Exact search, only usable on areas with at most [`EXHAUSTIVE_LIMIT`] users.
pub struct ExhaustiveSelector;

impl MhsSelector for ExhaustiveSelector {
    fn name(&self) -> &'static str {
        EXHAUSTIVE
    }

    fn select(&self, graph: &NeighborGraph) -> Result<BTreeSet<UserId>> {
        optimal_mhs_bruteforce(graph)
    }
}

#[derive(Clone, Default)]
pub struct SelectorRegistry {
    entries: BTreeMap<&'static str, Arc<dyn MhsSelector>>,
}

impl SelectorRegistry {
    pub fn builtin() -> Self {
        let mut r = SelectorRegistry::default();
        r.register(Arc::new(GreedySelector));
        r.register(Arc::new(ExhaustiveSelector));
        r
    }

    pub fn register(&mut self, selector: Arc<dyn MhsSelector>) {
        self.entries.insert(selector.name(), selector);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn MhsSelector>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownName {
            kind: "mhs selector",
            name: name.to_string(),
            valid: self.names(),
        })
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.keys().map(|k| k.to_string()).collect()
    }
}
