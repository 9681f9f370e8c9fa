//! Undirected simple graphs, edge/triangle statistics, exact enumeration of
//! the (edges, triangles) histogram over all labeled graphs, and
//! goodness-of-fit statistic families.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Largest node count accepted by [`enumerate_feature_histogram`]
/// (`2^28` graphs).
pub const MAX_ENUMERATION_NODES: usize = 8;

/// Undirected graph without self-loops, stored as a bit matrix.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Graph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl core::fmt::Debug for Graph {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Graph").field("n", &self.n).field("edges", &self.edges().collect::<Vec<_>>()).finish()
    }
}

impl Graph {
    /// Empty graph on `n` nodes.
    pub fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        Graph { n, words, rows: alloc::vec![0; n * words] }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::new(n);
        for i in 0..n {
            for j in i + 1..n {
                g.put(i, j, true);
            }
        }
        g
    }

    /// Graph from an edge list; duplicates and reversed pairs are merged.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::new(n);
        for &(i, j) in edges {
            g.set_edge(i, j, true)?;
        }
        Ok(g)
    }

    /// Erdős–Rényi graph with edge probability `p`.
    pub fn random<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Self {
        let mut g = Graph::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    g.put(i, j, true);
                }
            }
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of node pairs, `n(n-1)/2`.
    pub fn dyads(&self) -> usize {
        self.n * self.n.saturating_sub(1) / 2
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        for k in [i, j] {
            if k >= self.n {
                return Err(Error::IndexOutOfRange { index: k, len: self.n });
            }
        }
        if i == j {
            return Err(Error::InvalidArgument(alloc::format!("self-loop at node {i}")));
        }
        Ok(())
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.rows[i * self.words + j / 64] >> (j % 64) & 1 == 1
    }

    #[inline]
    fn put(&mut self, i: usize, j: usize, on: bool) {
        let (wi, wj) = (i * self.words + j / 64, j * self.words + i / 64);
        if on {
            self.rows[wi] |= 1 << (j % 64);
            self.rows[wj] |= 1 << (i % 64);
        } else {
            self.rows[wi] &= !(1 << (j % 64));
            self.rows[wj] &= !(1 << (i % 64));
        }
    }

    pub fn set_edge(&mut self, i: usize, j: usize, on: bool) -> Result<()> {
        self.check_pair(i, j)?;
        self.put(i, j, on);
        Ok(())
    }

    pub fn toggle(&mut self, i: usize, j: usize) -> Result<()> {
        self.check_pair(i, j)?;
        let on = !self.has_edge(i, j);
        self.put(i, j, on);
        Ok(())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.row(i).iter().map(|w| w.count_ones() as usize).sum()
    }

    /// `|N(i) ∩ N(j)|`.
    pub fn common_neighbors(&self, i: usize, j: usize) -> usize {
        self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a & b).count_ones() as usize).sum()
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).filter(move |&j| self.has_edge(i, j))
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i + 1..self.n).filter(move |&j| self.has_edge(i, j)).map(move |j| (i, j)))
    }

    pub fn edge_count(&self) -> usize {
        self.rows.iter().map(|w| w.count_ones() as usize).sum::<usize>() / 2
    }

    /// Number of dyads on which `self` and `other` differ.
    pub fn hamming(&self, other: &Graph) -> usize {
        self.rows.iter().zip(&other.rows).map(|(a, b)| (a ^ b).count_ones() as usize).sum::<usize>() / 2
    }
}

/// Edge and triangle counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct GraphStats {
    pub edges: u64,
    pub triangles: u64,
}

impl GraphStats {
    pub fn new(edges: u64, triangles: u64) -> Self {
        GraphStats { edges, triangles }
    }

    pub fn as_f64(&self) -> [f64; 2] {
        [self.edges as f64, self.triangles as f64]
    }
}

pub fn stats(g: &Graph) -> GraphStats {
    let mut tri = 0u64;
    for (i, j) in g.edges() {
        tri += g.common_neighbors(i, j) as u64;
    }
    GraphStats { edges: g.edge_count() as u64, triangles: tri / 3 }
}

/// Change in (edges, triangles) from toggling dyad `(i, j)`.
pub fn flip_delta(g: &Graph, i: usize, j: usize) -> Result<(i64, i64)> {
    g.check_pair(i, j)?;
    let common = g.common_neighbors(i, j) as i64;
    Ok(if g.has_edge(i, j) { (-1, -common) } else { (1, common) })
}

fn binom2(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

fn binom3(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// Number of labeled graphs on `n` nodes for every (edges, triangles) pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureHistogram {
    n: usize,
    max_triangles: usize,
    /// Dense `(edges, triangles)` table, row-major by edge count.
    counts: Vec<u64>,
}

impl FeatureHistogram {
    fn empty(n: usize) -> Self {
        let (e, t) = (binom2(n), binom3(n));
        FeatureHistogram { n, max_triangles: t, counts: alloc::vec![0; (e + 1) * (t + 1)] }
    }

    /// Builds a histogram from `(edges, triangles, count)` rows, checking the
    /// total against `2^C(n,2)`.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (u64, u64, u64)>) -> Result<Self> {
        if n < 2 || n > MAX_ENUMERATION_NODES {
            return Err(Error::InvalidArgument(alloc::format!("histogram node count {n} outside 2..=8")));
        }
        let mut h = FeatureHistogram::empty(n);
        for (e, t, c) in entries {
            if e as usize > h.max_edges() || t as usize > h.max_triangles {
                return Err(Error::HistogramMismatch(alloc::format!("entry ({e}, {t}) impossible for n = {n}")));
            }
            let k = h.index(e as usize, t as usize);
            h.counts[k] += c;
        }
        let total = h.total();
        if total != 1u128 << binom2(n) {
            return Err(Error::HistogramMismatch(alloc::format!("counts sum to {total}, expected 2^{}", binom2(n))));
        }
        Ok(h)
    }

    #[inline]
    fn index(&self, e: usize, t: usize) -> usize {
        e * (self.max_triangles + 1) + t
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_edges(&self) -> usize {
        binom2(self.n)
    }

    pub fn max_triangles(&self) -> usize {
        self.max_triangles
    }

    pub fn get(&self, edges: u64, triangles: u64) -> u64 {
        if edges as usize > self.max_edges() || triangles as usize > self.max_triangles {
            return 0;
        }
        self.counts[self.index(edges as usize, triangles as usize)]
    }

    /// Nonzero entries `(stats, count)` ordered by edges then triangles.
    pub fn iter(&self) -> impl Iterator<Item = (GraphStats, u64)> + '_ {
        let w = self.max_triangles + 1;
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0)
            .map(move |(k, c)| (GraphStats::new((k / w) as u64, (k % w) as u64), *c))
    }

    pub fn total(&self) -> u128 {
        self.counts.iter().map(|c| *c as u128).sum()
    }

    /// Adds another histogram over the same `n`.
    pub fn merge(&mut self, other: &FeatureHistogram) -> Result<()> {
        if other.n != self.n {
            return Err(Error::HistogramMismatch(alloc::format!("merging n = {} into n = {}", other.n, self.n)));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// CSV with header `edges,triangles,count`, nonzero rows only.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("edges,triangles,count\n");
        for (st, c) in self.iter() {
            let _ = writeln!(s, "{},{},{}", st.edges, st.triangles, c);
        }
        s
    }
}

/// Lexicographic list of dyads `(i, j)`, `i < j`.
pub fn dyad_list(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

/// Exact histogram of (edges, triangles) over all `2^C(n,2)` labeled graphs,
/// visited in binary-reflected Gray-code order over the lexicographically
/// sorted dyads so every step toggles one edge.
pub fn enumerate_feature_histogram(n: usize) -> Result<FeatureHistogram> {
    enumerate_prefix(n, 0, 0)
}

/// The part of the enumeration where the last `fixed_bits` dyads take the
/// values in `prefix` (bit `k` ↦ dyad `m - fixed_bits + k`). The `2^fixed_bits`
/// sub-walks partition all graphs and may run independently; their sum is
/// the full histogram.
pub fn enumerate_prefix(n: usize, fixed_bits: usize, prefix: u64) -> Result<FeatureHistogram> {
    if !(2..=MAX_ENUMERATION_NODES).contains(&n) {
        return Err(Error::InvalidArgument(alloc::format!(
            "enumeration supports 2 <= n <= {MAX_ENUMERATION_NODES} (2^28 graphs at n = 8), got {n}"
        )));
    }
    let dyads = dyad_list(n);
    let m = dyads.len();
    if fixed_bits > m || (fixed_bits < 64 && prefix >> fixed_bits != 0) {
        return Err(Error::InvalidArgument(alloc::format!("prefix {prefix} does not fit {fixed_bits} bits")));
    }
    let mut rows = [0u16; MAX_ENUMERATION_NODES];
    let (mut e, mut t) = (0i64, 0i64);
    let toggle = |rows: &mut [u16; MAX_ENUMERATION_NODES], e: &mut i64, t: &mut i64, (i, j): (usize, usize)| {
        let common = (rows[i] & rows[j]).count_ones() as i64;
        if rows[i] >> j & 1 == 1 {
            *e -= 1;
            *t -= common;
        } else {
            *e += 1;
            *t += common;
        }
        rows[i] ^= 1 << j;
        rows[j] ^= 1 << i;
    };
    for k in 0..fixed_bits {
        if prefix >> k & 1 == 1 {
            toggle(&mut rows, &mut e, &mut t, dyads[m - fixed_bits + k]);
        }
    }
    let mut hist = FeatureHistogram::empty(n);
    let w = hist.max_triangles + 1;
    let free = m - fixed_bits;
    hist.counts[e as usize * w + t as usize] += 1;
    for step in 1u64..(1u64 << free) {
        let bit = step.trailing_zeros() as usize;
        toggle(&mut rows, &mut e, &mut t, dyads[bit]);
        hist.counts[e as usize * w + t as usize] += 1;
    }
    Ok(hist)
}

/// Degree, edgewise shared partner and geodesic distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    /// `D_k`, `k = 0..n-1`: fraction of nodes with degree `k`.
    pub degree_dist: Vec<f64>,
    /// `EP_k`, `k = 0..n-2`: fraction of edges whose endpoints share `k`
    /// neighbours. All zero for an edgeless graph.
    pub esp_dist: Vec<f64>,
    /// `MGD_k`, `k = 1..n-1` (index `k-1`): fraction of connected pairs at
    /// distance `k`.
    pub geodesic_dist: Vec<f64>,
    /// Fraction of all node pairs that are not connected.
    pub unreachable_fraction: f64,
}

impl GofReport {
    /// `(name, values)` for the three families; geodesic bins start at 1.
    pub fn families(&self) -> [(&'static str, &[f64], usize); 3] {
        [("degree", &self.degree_dist, 0), ("esp", &self.esp_dist, 0), ("geodesic", &self.geodesic_dist, 1)]
    }
}

pub fn gof(g: &Graph) -> GofReport {
    let n = g.n();
    let mut degree = alloc::vec![0.0; n];
    for i in 0..n {
        degree[g.degree(i)] += 1.0;
    }
    if n > 0 {
        degree.iter_mut().for_each(|d| *d /= n as f64);
    }
    let mut esp = alloc::vec![0.0; n.saturating_sub(1)];
    let m = g.edge_count();
    for (i, j) in g.edges() {
        esp[g.common_neighbors(i, j)] += 1.0;
    }
    if m > 0 {
        esp.iter_mut().for_each(|v| *v /= m as f64);
    }
    let mut geo = alloc::vec![0.0; n.saturating_sub(1)];
    let mut connected = 0usize;
    let mut dist = alloc::vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist.iter_mut().for_each(|d| *d = usize::MAX);
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for &d in dist.iter().skip(s + 1) {
            if d != usize::MAX {
                geo[d - 1] += 1.0;
                connected += 1;
            }
        }
    }
    if connected > 0 {
        geo.iter_mut().for_each(|v| *v /= connected as f64);
    }
    let pairs = binom2(n);
    let unreachable = if pairs > 0 { (pairs - connected) as f64 / pairs as f64 } else { 0.0 };
    GofReport { degree_dist: degree, esp_dist: esp, geodesic_dist: geo, unreachable_fraction: unreachable }
}

/// Parses whitespace-separated `u v` pairs (0-indexed). Blank lines and `#`
/// comments are skipped, except a `# nodes N` line, which declares the node
/// count. `n` overrides any declaration; otherwise the count is the largest
/// index plus one.
pub fn parse_edge_list(text: &str, n: Option<usize>) -> Result<Graph> {
    let mut declared = n;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            if let (Some("nodes"), Some(v), None) = (it.next(), it.next(), it.next()) {
                if n.is_none() {
                    declared = Some(v.parse().map_err(|_| {
                        Error::InvalidArgument(alloc::format!("line {}: bad node count {v:?}", lineno + 1))
                    })?);
                }
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let mut next = || -> Result<usize> {
            let tok = it.next().ok_or_else(|| {
                Error::InvalidArgument(alloc::format!("line {}: expected two node indices", lineno + 1))
            })?;
            tok.parse()
                .map_err(|_| Error::InvalidArgument(alloc::format!("line {}: bad node index {tok:?}", lineno + 1)))
        };
        let (u, v) = (next()?, next()?);
        if it.next().is_some() {
            return Err(Error::InvalidArgument(alloc::format!("line {}: expected exactly two fields", lineno + 1)));
        }
        if u == v {
            return Err(Error::InvalidArgument(alloc::format!("line {}: self-loop at node {u}", lineno + 1)));
        }
        pairs.push((u, v, lineno + 1));
    }
    let n = declared.unwrap_or_else(|| pairs.iter().map(|p| p.0.max(p.1) + 1).max().unwrap_or(0));
    let mut g = Graph::new(n);
    for (u, v, line) in pairs {
        if u.max(v) >= n {
            return Err(Error::InvalidArgument(alloc::format!(
                "line {line}: node index {} not below node count {n}",
                u.max(v)
            )));
        }
        g.put(u, v, true);
    }
    Ok(g)
}

/// Edge-list text with a `# nodes N` header, one `u v` line per edge.
pub fn format_edge_list(g: &Graph) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# nodes {}", g.n());
    for (i, j) in g.edges() {
        let _ = writeln!(s, "{i} {j}");
    }
    s
}

/// First graph on `n` nodes (in a depth-first search that tries adding each
/// lexicographic dyad before skipping it) with the requested statistics.
pub fn search_graph(n: usize, target: GraphStats) -> Option<Graph> {
    let dyads = dyad_list(n);
    let mut g = Graph::new(n);
    fn go(g: &mut Graph, dyads: &[(usize, usize)], k: usize, e: u64, t: u64, target: GraphStats) -> bool {
        if e == target.edges && t == target.triangles {
            return true;
        }
        if k == dyads.len() || e >= target.edges || t > target.triangles {
            return false;
        }
        if e + ((dyads.len() - k) as u64) < target.edges {
            return false;
        }
        let (i, j) = dyads[k];
        let gain = g.common_neighbors(i, j) as u64;
        g.put(i, j, true);
        if go(g, dyads, k + 1, e + 1, t + gain, target) {
            return true;
        }
        g.put(i, j, false);
        go(g, dyads, k + 1, e, t, target)
    }
    go(&mut g, &dyads, 0, 0, 0, target).then_some(g)
}

/// The 8-node example graph with 22 edges and 29 triangles.
pub fn example_graph_g8() -> Graph {
    let g = search_graph(8, GraphStats::new(22, 29)).expect("an 8-node graph with 22 edges and 29 triangles exists");
    debug_assert_eq!(stats(&g), GraphStats::new(22, 29));
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn basic_stats() {
        assert_eq!(stats(&Graph::complete(8)), GraphStats::new(28, 56));
        assert_eq!(stats(&Graph::new(5)), GraphStats::new(0, 0));
        assert_eq!(stats(&example_graph_g8()), GraphStats::new(22, 29));
        assert_eq!(stats(&path3()), GraphStats::new(2, 0));
    }

    #[test]
    fn large_graphs_span_words() {
        let mut g = Graph::new(130);
        g.set_edge(3, 129, true).unwrap();
        g.set_edge(3, 70, true).unwrap();
        g.set_edge(70, 129, true).unwrap();
        assert_eq!(stats(&g), GraphStats::new(3, 1));
        assert_eq!(g.degree(3), 2);
        assert_eq!(flip_delta(&g, 3, 129).unwrap(), (-1, -1));
    }

    #[test]
    fn flip_examples() {
        let k3 = Graph::complete(3);
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(flip_delta(&k3, i, j).unwrap(), (-1, -1));
        }
        assert_eq!(flip_delta(&path3(), 0, 2).unwrap(), (1, 1));
        assert!(flip_delta(&path3(), 1, 1).is_err());
        assert!(Graph::new(3).set_edge(0, 3, true).is_err());
    }

    #[test]
    fn flip_matches_recount() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let n = rng.random_range(2..12);
            let mut g = Graph::random(n, rng.random(), &mut rng);
            let i = rng.random_range(0..n);
            let j = (i + rng.random_range(1..n)) % n;
            let before = stats(&g);
            let (de, dt) = flip_delta(&g, i, j).unwrap();
            g.toggle(i, j).unwrap();
            let after = stats(&g);
            assert_eq!(after.edges as i64 - before.edges as i64, de);
            assert_eq!(after.triangles as i64 - before.triangles as i64, dt);
            g.toggle(i, j).unwrap();
            assert_eq!(stats(&g), before);
        }
    }

    #[test]
    fn small_histograms() {
        let h3 = enumerate_feature_histogram(3).unwrap();
        let entries: Vec<_> = h3.iter().map(|(s, c)| (s.edges, s.triangles, c)).collect();
        assert_eq!(entries, [(0, 0, 1), (1, 0, 3), (2, 0, 3), (3, 1, 1)]);
        assert_eq!(enumerate_feature_histogram(4).unwrap().total(), 64);
        assert!(enumerate_feature_histogram(9).is_err());
        assert!(enumerate_feature_histogram(1).is_err());
    }

    #[test]
    fn prefix_walks_partition() {
        let full = enumerate_feature_histogram(5).unwrap();
        let mut sum = enumerate_prefix(5, 3, 0).unwrap();
        for p in 1..8 {
            sum.merge(&enumerate_prefix(5, 3, p).unwrap()).unwrap();
        }
        assert_eq!(sum, full);
    }

    #[test]
    fn histogram_csv_round_trip() {
        let h = enumerate_feature_histogram(4).unwrap();
        let csv = h.to_csv();
        let rows = csv.lines().skip(1).map(|l| {
            let v: Vec<u64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        });
        assert_eq!(FeatureHistogram::from_entries(4, rows).unwrap(), h);
        assert!(FeatureHistogram::from_entries(4, [(0, 0, 1)]).is_err());
    }

    #[test]
    fn gof_examples() {
        let r = gof(&Graph::complete(4));
        assert_eq!(r.degree_dist, [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(r.esp_dist, [0.0, 0.0, 1.0]);
        assert_eq!(r.geodesic_dist, [1.0, 0.0, 0.0]);
        let r = gof(&path3());
        assert!((r.degree_dist[1] - 2.0 / 3.0).abs() < 1e-15 && (r.degree_dist[2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.esp_dist, [1.0, 0.0]);
        assert!((r.geodesic_dist[0] - 2.0 / 3.0).abs() < 1e-15 && (r.geodesic_dist[1] - 1.0 / 3.0).abs() < 1e-15);
        let c5 = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let r = gof(&c5);
        assert_eq!(r.geodesic_dist, [0.5, 0.5, 0.0, 0.0]);
        assert_eq!(r.esp_dist[0], 1.0);
        let r = gof(&Graph::new(4));
        assert_eq!(r.unreachable_fraction, 1.0);
        assert!(r.esp_dist.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn edge_list_text() {
        let g = parse_edge_list("0 1\n1 2\n", Some(3)).unwrap();
        assert_eq!(g, path3());
        let g = parse_edge_list("# comment\n1 0\n0 1\n\n2 1\n", None).unwrap();
        assert_eq!(g, path3());
        assert!(parse_edge_list("0 0\n", None).is_err());
        assert!(parse_edge_list("0 3\n", Some(3)).is_err());
        assert!(parse_edge_list("0 x\n", None).is_err());
        let mut g = Graph::new(6);
        g.set_edge(0, 2, true).unwrap();
        assert_eq!(parse_edge_list(&format_edge_list(&g), None).unwrap(), g);
    }
}
