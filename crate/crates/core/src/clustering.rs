//! Grid-constrained Ward agglomeration and K-means.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, VecDeque};

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volume::{BrainMask, DataMatrix, Volume4D};

/// Undirected 6-neighborhood graph over masked voxels (feature order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoxelGraph {
    pub n_nodes: usize,
    /// Sorted pairs with `i < j`.
    pub edges: Vec<(usize, usize)>,
}

impl VoxelGraph {
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_nodes];
        for &(i, j) in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Connected-component id per node, ids in order of first node.
    pub fn components(&self) -> (Vec<usize>, usize) {
        split_regions(self, &vec![0; self.n_nodes])
    }
}

pub fn grid_to_graph(mask: &BrainMask) -> VoxelGraph {
    let [nx, ny, nz] = mask.shape();
    let lookup = mask.feature_lookup();
    let mut edges = Vec::new();
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let Some(i) = lookup[x + nx * (y + ny * z)] else { continue };
                let forward = [
                    (x + 1 < nx).then(|| x + 1 + nx * (y + ny * z)),
                    (y + 1 < ny).then(|| x + nx * (y + 1 + ny * z)),
                    (z + 1 < nz).then(|| x + nx * (y + ny * (z + 1))),
                ];
                for j in forward.into_iter().flatten().filter_map(|v| lookup[v]) {
                    edges.push((i.min(j), i.max(j)));
                }
            }
        }
    }
    edges.sort_unstable();
    VoxelGraph {
        n_nodes: mask.n_voxels(),
        edges,
    }
}

/// Splits every label into its graph-connected pieces. Region ids follow
/// the first node of each region.
pub fn split_regions(graph: &VoxelGraph, labels: &[usize]) -> (Vec<usize>, usize) {
    let adj = graph.adjacency();
    let mut region = vec![usize::MAX; graph.n_nodes];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..graph.n_nodes {
        if region[start] != usize::MAX {
            continue;
        }
        region[start] = count;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if region[v] == usize::MAX && labels[v] == labels[start] {
                    region[v] = count;
                    queue.push_back(v);
                }
            }
        }
        count += 1;
    }
    (region, count)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterMethod {
    Ward,
    KMeans,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Parcellation {
    /// Cluster id per item, ids `0..n_clusters` in order of first appearance.
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    pub method: ClusterMethod,
}

impl Parcellation {
    fn from_raw(raw: &[usize], method: ClusterMethod) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels: Vec<usize> = raw
            .iter()
            .map(|r| {
                let next = map.len();
                *map.entry(*r).or_insert(next)
            })
            .collect();
        Parcellation {
            labels,
            n_clusters: map.len(),
            method,
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// One agglomeration step: cluster `kept` absorbs `absorbed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub kept: usize,
    pub absorbed: usize,
    pub delta: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WardResult {
    pub parcellation: Parcellation,
    pub merges: Vec<Merge>,
    /// False when the graph has more components than requested clusters;
    /// the labels are then the components.
    pub feasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    delta: f64,
    a: usize,
    b: usize,
    version_a: u64,
    version_b: u64,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.delta
            .total_cmp(&other.delta)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct WardState {
    centroid: Array2<f64>,
    size: Vec<usize>,
    version: Vec<u64>,
}

impl WardState {
    fn delta(&self, a: usize, b: usize) -> f64 {
        let (na, nb) = (self.size[a] as f64, self.size[b] as f64);
        let dist: f64 = self
            .centroid
            .row(a)
            .iter()
            .zip(self.centroid.row(b))
            .map(|(p, q)| (p - q) * (p - q))
            .sum();
        na * nb / (na + nb) * dist
    }

    fn candidate(&self, a: usize, b: usize) -> Candidate {
        let (a, b) = (a.min(b), a.max(b));
        Candidate {
            delta: self.delta(a, b),
            a,
            b,
            version_a: self.version[a],
            version_b: self.version[b],
        }
    }
}

/// Agglomerates the columns (voxels) of `x` into `n_clusters` graph-connected
/// clusters, always merging the adjacent pair with the smallest Ward cost.
/// A merged cluster keeps the smaller id of the pair.
pub fn ward_agglomerate(x: ArrayView2<'_, f64>, graph: &VoxelGraph, n_clusters: usize) -> Result<WardResult> {
    let n = x.ncols();
    if graph.n_nodes != n {
        return Err(Error::LengthMismatch {
            expected: graph.n_nodes,
            got: n,
        });
    }
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::TooManyClusters {
            requested: n_clusters,
            available: n,
        });
    }
    let mut state = WardState {
        centroid: x.t().to_owned(),
        size: vec![1; n],
        version: vec![0; n],
    };
    let mut neighbors: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for &(i, j) in &graph.edges {
        neighbors[i].insert(j);
        neighbors[j].insert(i);
    }
    let mut heap: BinaryHeap<Reverse<Candidate>> = graph
        .edges
        .iter()
        .map(|&(i, j)| Reverse(state.candidate(i, j)))
        .collect();
    let mut owner: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - n_clusters);
    let mut alive = n;
    while alive > n_clusters {
        let Some(Reverse(c)) = heap.pop() else { break };
        if c.version_a != state.version[c.a] || c.version_b != state.version[c.b] {
            continue;
        }
        let (a, b) = (c.a, c.b);
        let (na, nb) = (state.size[a] as f64, state.size[b] as f64);
        let merged = (&state.centroid.row(a) * na + &state.centroid.row(b) * nb) / (na + nb);
        state.centroid.row_mut(a).assign(&merged);
        state.size[a] += state.size[b];
        state.size[b] = 0;
        state.version[a] += 1;
        state.version[b] += 1;
        let moved = std::mem::take(&mut neighbors[b]);
        for &m in &moved {
            neighbors[m].remove(&b);
            if m != a {
                neighbors[m].insert(a);
                neighbors[a].insert(m);
            }
        }
        neighbors[a].remove(&b);
        for &m in &neighbors[a] {
            heap.push(Reverse(state.candidate(a, m)));
        }
        merges.push(Merge {
            kept: a,
            absorbed: b,
            delta: c.delta,
            size: state.size[a],
        });
        alive -= 1;
    }
    for m in &merges {
        owner[m.absorbed] = m.kept;
    }
    let raw: Vec<usize> = (0..n)
        .map(|i| {
            let mut r = i;
            while owner[r] != r {
                r = owner[r];
            }
            r
        })
        .collect();
    Ok(WardResult {
        parcellation: Parcellation::from_raw(&raw, ClusterMethod::Ward),
        merges,
        feasible: alive == n_clusters,
    })
}

/// Per-cluster column means: `samples × n_clusters`.
pub fn agglomeration_transform(p: &Parcellation, x: ArrayView2<'_, f64>) -> Result<DataMatrix> {
    if x.ncols() != p.labels.len() {
        return Err(Error::LengthMismatch {
            expected: p.labels.len(),
            got: x.ncols(),
        });
    }
    let sizes = p.sizes();
    let mut out = Array2::zeros((x.nrows(), p.n_clusters));
    for (col, &l) in x.axis_iter(Axis(1)).zip(&p.labels) {
        let mut target = out.column_mut(l);
        target += &col;
    }
    for (mut col, &s) in out.axis_iter_mut(Axis(1)).zip(&sizes) {
        col /= s as f64;
    }
    Ok(out)
}

/// Broadcasts each cluster value back to its member columns.
pub fn agglomeration_inverse(p: &Parcellation, reduced: ArrayView2<'_, f64>) -> Result<DataMatrix> {
    if reduced.ncols() != p.n_clusters {
        return Err(Error::LengthMismatch {
            expected: p.n_clusters,
            got: reduced.ncols(),
        });
    }
    Ok(reduced.select(Axis(1), &p.labels))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansOptions {
    pub n_init: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        KMeansOptions {
            n_init: 10,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub parcellation: Parcellation,
    /// `k × n_dims`, row `i` is the center of cluster id `i`.
    pub centers: Array2<f64>,
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_trace: Vec<f64>,
    pub restart: usize,
}

fn sq_dist(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn plus_plus_seed(x: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = x.nrows();
    let mut centers = Array2::zeros((k, x.ncols()));
    centers.row_mut(0).assign(&x.row(rng.random_range(0..n)));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), centers.row(0))).collect();
    for c in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            d2.iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&x.row(pick));
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), centers.row(c)));
        }
    }
    centers
}

/// Nearest center per item (lowest id on ties) and the total inertia.
fn assign(x: ArrayView2<'_, f64>, centers: &Array2<f64>, labels: &mut [usize], dist: &mut [f64]) -> f64 {
    let mut inertia = 0.0;
    for (i, row) in x.outer_iter().enumerate() {
        let (best, d) = centers
            .outer_iter()
            .map(|c| sq_dist(row, c))
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (j, d)| if d < acc.1 { (j, d) } else { acc });
        labels[i] = best;
        dist[i] = d;
        inertia += d;
    }
    inertia
}

/// Means of the assigned items. An empty cluster takes over the item
/// farthest from its center among clusters with more than one member.
fn update(x: ArrayView2<'_, f64>, k: usize, labels: &mut [usize], dist: &mut [f64]) -> Array2<f64> {
    let mut counts = vec![0usize; k];
    for &l in labels.iter() {
        counts[l] += 1;
    }
    for c in 0..k {
        if counts[c] == 0 {
            let far = (0..labels.len())
                .filter(|&i| counts[labels[i]] > 1)
                .fold(None, |best: Option<usize>, i| match best {
                    Some(b) if dist[b] >= dist[i] => Some(b),
                    _ => Some(i),
                })
                .expect("k ≤ n_items");
            counts[labels[far]] -= 1;
            labels[far] = c;
            dist[far] = 0.0;
            counts[c] = 1;
        }
    }
    let mut centers = Array2::zeros((k, x.ncols()));
    for (row, &l) in x.outer_iter().zip(labels.iter()) {
        let mut c = centers.row_mut(l);
        c += &row;
    }
    for (mut c, &n) in centers.outer_iter_mut().zip(&counts) {
        c /= n as f64;
    }
    centers
}

struct Run {
    labels: Vec<usize>,
    centers: Array2<f64>,
    inertia: f64,
    trace: Vec<f64>,
}

fn lloyd(x: ArrayView2<'_, f64>, k: usize, seed: u64, opts: &KMeansOptions) -> Run {
    let n = x.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus_seed(x, k, &mut rng);
    let mut labels = vec![0; n];
    let mut dist = vec![0.0; n];
    let mut trace = Vec::new();
    for _ in 0..opts.max_iter {
        trace.push(assign(x, &centers, &mut labels, &mut dist));
        let next = update(x, k, &mut labels, &mut dist);
        let shift: f64 = next
            .outer_iter()
            .zip(centers.outer_iter())
            .map(|(a, b)| sq_dist(a, b))
            .sum();
        centers = next;
        if shift < opts.tol {
            break;
        }
    }
    let mut inertia = assign(x, &centers, &mut labels, &mut dist);
    trace.push(inertia);
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&l| counts[l] += 1);
    if counts.contains(&0) {
        centers = update(x, k, &mut labels, &mut dist);
        inertia = labels.iter().enumerate().map(|(i, &l)| sq_dist(x.row(i), centers.row(l))).sum();
        trace.push(inertia);
    }
    Run {
        labels,
        centers,
        inertia,
        trace,
    }
}

/// K-means on the rows of `x` (squared Euclidean). Restart `r` uses seed
/// `seed + r`; the lowest inertia wins, earliest restart on ties.
pub fn kmeans(x: ArrayView2<'_, f64>, k: usize, seed: u64, opts: &KMeansOptions) -> Result<KMeansResult> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::BadK(format!("k = {k} for {n} items")));
    }
    if opts.n_init == 0 {
        return Err(Error::BadParameter("n_init must be at least 1".into()));
    }
    let runs: Vec<Run> = (0..opts.n_init)
        .into_par_iter()
        .map(|r| lloyd(x, k, seed.wrapping_add(r as u64), opts))
        .collect();
    let (restart, best) = runs
        .into_iter()
        .enumerate()
        .reduce(|a, b| if b.1.inertia < a.1.inertia { b } else { a })
        .expect("n_init ≥ 1");
    let parcellation = Parcellation::from_raw(&best.labels, ClusterMethod::KMeans);
    let mut order = vec![0; k];
    for (&raw, &id) in best.labels.iter().zip(&parcellation.labels) {
        order[id] = raw;
    }
    Ok(KMeansResult {
        centers: best.centers.select(Axis(0), &order),
        parcellation,
        inertia: best.inertia,
        inertia_trace: best.trace,
        restart,
    })
}

/// Spatial box blur of every frame over a `(2r+1)³` window clipped to the
/// grid.
pub fn box_smooth(vol: &Volume4D, radius: usize) -> Volume4D {
    if radius == 0 {
        return vol.clone();
    }
    let [nx, ny, nz, nt] = vol.shape();
    let mut data = vol.data().to_vec();
    let mut line = Vec::new();
    for axis in 0..3 {
        let (len, stride) = match axis {
            0 => (nx, 1),
            1 => (ny, nx),
            _ => (nz, nx * ny),
        };
        let total = nx * ny * nz;
        for t in 0..nt {
            let frame = &mut data[t * total..(t + 1) * total];
            for start in (0..total).filter(|&v| (v / stride) % len == 0) {
                line.clear();
                line.extend((0..len).map(|i| frame[start + i * stride]));
                for i in 0..len {
                    let (lo, hi) = (i.saturating_sub(radius), (i + radius).min(len - 1));
                    frame[start + i * stride] = line[lo..=hi].iter().sum::<f64>() / (hi - lo + 1) as f64;
                }
            }
        }
    }
    Volume4D::new(vol.shape(), data, *vol.affine()).expect("same shape")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::Affine4;
    use ndarray::array;
    use rand_distr::{Distribution, StandardNormal};

    fn chain(n: usize) -> VoxelGraph {
        VoxelGraph {
            n_nodes: n,
            edges: (0..n - 1).map(|i| (i, i + 1)).collect(),
        }
    }

    #[test]
    fn grid_graph_edge_counts() {
        let m = BrainMask::full([2, 1, 1], Affine4::identity()).unwrap();
        assert_eq!(grid_to_graph(&m).edges, vec![(0, 1)]);
        let cube = BrainMask::full([2, 2, 2], Affine4::identity()).unwrap();
        assert_eq!(grid_to_graph(&cube).edges.len(), 12);
        let blobs = BrainMask::from_fn([5, 2, 2], Affine4::identity(), |x, _, _| x != 2).unwrap();
        assert_eq!(grid_to_graph(&blobs).components().1, 2);
    }

    #[test]
    fn chain_of_four_splits_in_the_middle() {
        let x = array![[0.0, 0.0, 10.0, 10.0], [0.0, 0.0, 10.0, 10.0]];
        let r = ward_agglomerate(x.view(), &chain(4), 2).unwrap();
        assert_eq!(r.parcellation.labels, vec![0, 0, 1, 1]);
        assert!(r.feasible);
        // brute force over contiguous 2-partitions of the chain
        let cost = |cut: usize| -> f64 {
            let parts = [&x.row(0).to_vec()[..cut], &x.row(0).to_vec()[cut..]];
            parts
                .iter()
                .map(|p| {
                    let m = p.iter().sum::<f64>() / p.len() as f64;
                    p.iter().map(|v| (v - m).powi(2)).sum::<f64>()
                })
                .sum()
        };
        let best = (1..4).min_by(|&a, &b| cost(a).total_cmp(&cost(b))).unwrap();
        assert_eq!(best, 2);
    }

    #[test]
    fn singletons_and_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mask = BrainMask::from_fn([5, 2, 2], Affine4::identity(), |x, _, _| x != 2).unwrap();
        let g = grid_to_graph(&mask);
        let x = Array2::from_shape_fn((3, g.n_nodes), |_| rng.random::<f64>());
        let r = ward_agglomerate(x.view(), &g, g.n_nodes).unwrap();
        assert_eq!(r.parcellation.labels, (0..g.n_nodes).collect::<Vec<_>>());
        let two = ward_agglomerate(x.view(), &g, 2).unwrap();
        assert_eq!(two.parcellation.labels, g.components().0);
        let one = ward_agglomerate(x.view(), &g, 1).unwrap();
        assert!(!one.feasible);
        assert_eq!(one.parcellation.n_clusters, 2);
        assert!(matches!(
            ward_agglomerate(x.view(), &g, g.n_nodes + 1),
            Err(Error::TooManyClusters { .. })
        ));
    }

    #[test]
    fn merge_log_is_greedy_and_clusters_are_connected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mask = BrainMask::from_fn([5, 4, 3], Affine4::identity(), |x, y, z| (x + 2 * y + z) % 5 != 0).unwrap();
        let g = grid_to_graph(&mask);
        let n = g.n_nodes;
        let x = Array2::from_shape_fn((4, n), |_| StandardNormal.sample(&mut rng));
        let r = ward_agglomerate(x.view(), &g, 3).unwrap();
        // replay the log against a brute-force minimum over adjacent pairs
        let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        let mut owner: Vec<usize> = (0..n).collect();
        let cost = |a: &[usize], b: &[usize]| -> f64 {
            let mean = |s: &[usize]| x.select(Axis(1), s).mean_axis(Axis(1)).unwrap();
            let d = mean(a) - mean(b);
            let (na, nb) = (a.len() as f64, b.len() as f64);
            na * nb / (na + nb) * d.dot(&d)
        };
        for m in &r.merges {
            let mut best = f64::INFINITY;
            for &(i, j) in &g.edges {
                let (a, b) = (owner[i], owner[j]);
                if a != b {
                    best = best.min(cost(&members[a], &members[b]));
                }
            }
            let actual = cost(&members[m.kept], &members[m.absorbed]);
            assert!((actual - m.delta).abs() <= 1e-9 * (1.0 + actual));
            assert!(m.delta <= best + 1e-9 * (1.0 + best));
            let moved = std::mem::take(&mut members[m.absorbed]);
            for &v in &moved {
                owner[v] = m.kept;
            }
            members[m.kept].extend(moved);
        }
        let (regions, count) = split_regions(&g, &r.parcellation.labels);
        assert_eq!(count, r.parcellation.n_clusters);
        assert_eq!(Parcellation::from_raw(&regions, ClusterMethod::Ward).labels, r.parcellation.labels);
    }

    #[test]
    fn agglomeration_transforms() {
        let p = Parcellation {
            labels: vec![0, 1, 0],
            n_clusters: 2,
            method: ClusterMethod::Ward,
        };
        let x = array![[1.0, 5.0, 3.0]];
        let r = agglomeration_transform(&p, x.view()).unwrap();
        assert_eq!(r, array![[2.0, 5.0]]);
        let back = agglomeration_inverse(&p, r.view()).unwrap();
        assert_eq!(back, array![[2.0, 5.0, 2.0]]);
        assert_eq!(agglomeration_transform(&p, back.view()).unwrap(), r);
        let id = Parcellation::from_raw(&[0, 1, 2], ClusterMethod::Ward);
        assert_eq!(agglomeration_transform(&id, x.view()).unwrap(), x);
        assert!(agglomeration_transform(&p, array![[1.0, 2.0]].view()).is_err());
    }

    #[test]
    fn kmeans_four_points() {
        let x = array![[0.0], [0.1], [10.0], [10.1]];
        let r = kmeans(x.view(), 2, 0, &KMeansOptions::default()).unwrap();
        assert_eq!(r.parcellation.labels, vec![0, 0, 1, 1]);
        assert!((r.centers[[0, 0]] - 0.05).abs() <= 1e-9);
        assert!((r.centers[[1, 0]] - 10.05).abs() <= 1e-9);
        assert!(r.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let full = kmeans(x.view(), 4, 3, &KMeansOptions::default()).unwrap();
        assert_eq!(full.inertia, 0.0);
        assert!(matches!(kmeans(x.view(), 5, 0, &KMeansOptions::default()), Err(Error::BadK(_))));
    }

    #[test]
    fn kmeans_duplicated_data_same_centers() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = Array2::from_shape_fn((30, 2), |(i, j)| (i % 3) as f64 * 10.0 * (j as f64 + 1.0) + rng.random::<f64>());
        let doubled = ndarray::concatenate(Axis(0), &[x.view(), x.view()]).unwrap();
        let a = kmeans(x.view(), 3, 7, &KMeansOptions::default()).unwrap();
        let b = kmeans(doubled.view(), 3, 7, &KMeansOptions::default()).unwrap();
        let sort = |c: &Array2<f64>| {
            let mut rows: Vec<Vec<f64>> = c.outer_iter().map(|r| r.to_vec()).collect();
            rows.sort_by(|p, q| p[0].total_cmp(&q[0]));
            rows
        };
        for (p, q) in sort(&a.centers).iter().zip(sort(&b.centers)) {
            for (u, v) in p.iter().zip(q) {
                assert!((u - v).abs() <= 1e-9);
            }
        }
        assert!((b.inertia - 2.0 * a.inertia).abs() <= 1e-9);
    }

    #[test]
    fn kmeans_handles_duplicate_points_without_empty_clusters() {
        let x = array![[1.0], [1.0], [1.0], [2.0]];
        let r = kmeans(x.view(), 3, 0, &KMeansOptions::default()).unwrap();
        assert_eq!(r.parcellation.n_clusters, 3);
        assert!(r.parcellation.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn box_smoothing_preserves_constants_and_mass_center() {
        let vol = Volume4D::from_fn([4, 3, 2, 1], Affine4::identity(), |_, _, _, _| 3.0).unwrap();
        assert!(box_smooth(&vol, 1).data().iter().all(|&v| (v - 3.0).abs() < 1e-12));
        let spike = Volume4D::from_fn([5, 1, 1, 1], Affine4::identity(), |x, _, _, _| if x == 2 { 3.0 } else { 0.0 }).unwrap();
        assert_eq!(box_smooth(&spike, 1).data(), &[0.0, 1.0, 1.0, 1.0, 0.0]);
    }
}
