//! Metric search and clustering over sets of normals.

use std::cmp::Ordering;
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::fisherrao::{
    calvo_oller_lower_bound, fr_distance_approx, fr_length_approx, FrGeodesic,
};
use crate::gaussian::{canonical_order, embed, embed_inverse, jeffreys, mixture_geodesic, Gmm, Mvn};
use crate::hilbert::{hilbert_distance_mvn, hilbert_geodesic_mvn, project_to_embedded, HilbertMethod};
use crate::matcore::{spd_geodesic, spd_trace_distance, SpdMatrix};

const PRUNE_SLACK: f64 = 1e-9;
const KMEDIOID_MAX_ROUNDS: usize = 100;
const TRACE_EVERY: usize = 100;

/// Dissimilarities available to the clustering drivers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distance {
    /// Length of the exact boundary-value geodesic.
    FisherRao,
    /// Upper value of the guaranteed `(1+ε)` approximation.
    FisherRaoApprox { epsilon: f64 },
    /// Jeffreys-step length of the geodesic discretized into `steps` pieces.
    FisherRaoT { steps: usize },
    Hilbert(HilbertMethod),
    JeffreysSqrt,
    CalvoOller,
}

/// Curves used by the geodesic-walking algorithms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Geodesic {
    FisherRao,
    Hilbert,
    Mixture,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricSpace {
    pub distance: Distance,
    pub geodesic: Option<Geodesic>,
}

impl MetricSpace {
    pub fn new(distance: Distance) -> Self {
        Self { distance, geodesic: None }
    }

    pub fn with_geodesic(distance: Distance, geodesic: Geodesic) -> Self {
        Self { distance, geodesic: Some(geodesic) }
    }

    /// Symmetric by construction: arguments are put in a canonical order first.
    pub fn distance(&self, a: &Mvn, b: &Mvn) -> Result<f64> {
        if a.dim() != b.dim() {
            return invalid(format!("dimension mismatch: {} vs {}", a.dim(), b.dim()));
        }
        let (a, b) = match canonical_order(a, b) {
            Ordering::Equal => return Ok(0.0),
            Ordering::Less => (a, b),
            Ordering::Greater => (b, a),
        };
        match self.distance {
            Distance::FisherRao => Ok(FrGeodesic::new(a, b)?.length()),
            Distance::FisherRaoApprox { epsilon } => Ok(fr_distance_approx(a, b, epsilon)?.value),
            Distance::FisherRaoT { steps } => fr_length_approx(a, b, steps),
            Distance::Hilbert(m) => hilbert_distance_mvn(a, b, m),
            Distance::JeffreysSqrt => Ok(jeffreys(a, b)?.max(0.0).sqrt()),
            Distance::CalvoOller => calvo_oller_lower_bound(a, b),
        }
    }

    /// Point `t` of the configured geodesic from `a` to `b`.
    pub fn geodesic_point(&self, a: &Mvn, b: &Mvn, t: f64) -> Result<Mvn> {
        match self.geodesic {
            None => invalid("metric space has no geodesic"),
            Some(Geodesic::FisherRao) => FrGeodesic::new(a, b)?.at(t),
            Some(Geodesic::Hilbert) => hilbert_geodesic_mvn(a, b, t),
            Some(Geodesic::Mixture) => mixture_geodesic(a, b, t),
        }
    }

    /// Only the Hilbert pullback is a proven metric; everything else is
    /// searched without triangle-inequality pruning.
    fn prunes(&self) -> bool {
        matches!(self.distance, Distance::Hilbert(_))
    }
}

/// Memoized pairwise distances over a fixed point set.
pub struct DistanceCache<'a> {
    metric: MetricSpace,
    points: &'a [Mvn],
    cells: Vec<OnceLock<f64>>,
}

impl<'a> DistanceCache<'a> {
    pub fn new(points: &'a [Mvn], metric: MetricSpace) -> Self {
        let n = points.len();
        Self { metric, points, cells: (0..n * n.saturating_sub(1) / 2).map(|_| OnceLock::new()).collect() }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        j * (j - 1) / 2 + i
    }

    pub fn get(&self, i: usize, j: usize) -> Result<f64> {
        if i == j {
            return Ok(0.0);
        }
        let cell = &self.cells[self.slot(i, j)];
        if let Some(&v) = cell.get() {
            return Ok(v);
        }
        let v = self.metric.distance(&self.points[i], &self.points[j])?;
        Ok(*cell.get_or_init(|| v))
    }

    /// Distances from `i` to every point, computed in parallel.
    pub fn row(&self, i: usize) -> Result<Vec<f64>> {
        (0..self.points.len()).into_par_iter().map(|j| self.get(i, j)).collect()
    }
}

// ---------------------------------------------------------------------------
// Vantage-point tree

#[derive(Clone, Debug)]
struct Node {
    vantage: usize,
    radius: f64,
    inside: Option<Box<Node>>,
    outside: Option<Box<Node>>,
}

/// Summary of one tree node, for structural checks.
#[derive(Clone, Debug, PartialEq)]
pub struct VpNodeInfo {
    pub vantage: usize,
    pub radius: f64,
    pub inside: Vec<usize>,
    pub outside: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct VpTree {
    points: Vec<Mvn>,
    metric: MetricSpace,
    root: Node,
}

impl VpTree {
    pub fn build(points: &[Mvn], metric: MetricSpace, seed: u64) -> Result<Self> {
        if points.is_empty() {
            return invalid("cannot build a tree over no points");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let items: Vec<usize> = (0..points.len()).collect();
        let root = *build_node(points, &metric, items, &mut rng)?.expect("non-empty input");
        Ok(Self { points: points.to_vec(), metric, root })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Mvn] {
        &self.points
    }

    /// Nearest stored point as `(index, distance)`; ties go to the lowest index.
    pub fn nn(&self, query: &Mvn) -> Result<(usize, f64)> {
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(&self.root, query, &mut best)?;
        Ok(best)
    }

    fn search(&self, node: &Node, q: &Mvn, best: &mut (usize, f64)) -> Result<()> {
        let d = self.metric.distance(q, &self.points[node.vantage])?;
        if d < best.1 || (d == best.1 && node.vantage < best.0) {
            *best = (node.vantage, d);
        }
        let prune = self.metric.prunes();
        let slack = PRUNE_SLACK * (1.0 + d);
        let visit_inside = |b: f64| !prune || d - b <= node.radius + slack;
        let visit_outside = |b: f64| !prune || d + b >= node.radius - slack;
        let inside_first = d <= node.radius;
        let order = if inside_first {
            [(&node.inside, true), (&node.outside, false)]
        } else {
            [(&node.outside, false), (&node.inside, true)]
        };
        for (child, is_inside) in order {
            if let Some(child) = child {
                let go = if is_inside { visit_inside(best.1) } else { visit_outside(best.1) };
                if go {
                    self.search(child, q, best)?;
                }
            }
        }
        Ok(())
    }

    /// Every node with the point sets of its two subtrees.
    pub fn audit(&self) -> Vec<VpNodeInfo> {
        let mut out = Vec::new();
        collect_info(&self.root, &mut out);
        out
    }
}

fn subtree_indices(node: &Option<Box<Node>>, out: &mut Vec<usize>) {
    if let Some(n) = node {
        out.push(n.vantage);
        subtree_indices(&n.inside, out);
        subtree_indices(&n.outside, out);
    }
}

fn collect_info(node: &Node, out: &mut Vec<VpNodeInfo>) {
    let mut inside = Vec::new();
    let mut outside = Vec::new();
    subtree_indices(&node.inside, &mut inside);
    subtree_indices(&node.outside, &mut outside);
    out.push(VpNodeInfo { vantage: node.vantage, radius: node.radius, inside, outside });
    for child in [&node.inside, &node.outside].into_iter().flatten() {
        collect_info(child, out);
    }
}

fn build_node(
    points: &[Mvn],
    metric: &MetricSpace,
    mut items: Vec<usize>,
    rng: &mut ChaCha8Rng,
) -> Result<Option<Box<Node>>> {
    if items.is_empty() {
        return Ok(None);
    }
    let vantage = items.swap_remove(rng.random_range(0..items.len()));
    if items.is_empty() {
        return Ok(Some(Box::new(Node { vantage, radius: 0.0, inside: None, outside: None })));
    }
    let dists: Vec<f64> = items
        .par_iter()
        .map(|&j| metric.distance(&points[vantage], &points[j]))
        .collect::<Result<_>>()?;
    let mut sorted = dists.clone();
    sorted.sort_by(f64::total_cmp);
    let radius = sorted[(sorted.len() - 1) / 2];
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    for (&j, &dj) in items.iter().zip(&dists) {
        if dj <= radius {
            inside.push(j);
        } else {
            outside.push(j);
        }
    }
    Ok(Some(Box::new(Node {
        vantage,
        radius,
        inside: build_node(points, metric, inside, rng)?,
        outside: build_node(points, metric, outside, rng)?,
    })))
}

/// Index and distance of the nearest point by exhaustive scan; ties go to the lowest index.
pub fn linear_scan_nn(points: &[Mvn], metric: &MetricSpace, query: &Mvn) -> Result<(usize, f64)> {
    let mut best = (usize::MAX, f64::INFINITY);
    for (i, p) in points.iter().enumerate() {
        let d = metric.distance(query, p)?;
        if d < best.1 {
            best = (i, d);
        }
    }
    Ok(best)
}

// ---------------------------------------------------------------------------
// Partitioning

#[derive(Clone, Debug, PartialEq)]
pub struct Clustering {
    pub centers: Vec<Mvn>,
    /// Input indices of the centers.
    pub center_indices: Vec<usize>,
    /// Position in `centers` for every input point.
    pub assignment: Vec<usize>,
    /// Largest point-to-assigned-center distance.
    pub radius: f64,
    /// Weighted sum of point-to-assigned-center distances.
    pub cost: f64,
    /// Cost after each k-medioid round; empty for k-center.
    pub cost_history: Vec<f64>,
}

fn check_k(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return invalid("no points");
    }
    if k == 0 || k > n {
        return invalid(format!("k must lie in 1..={n}, got {k}"));
    }
    Ok(())
}

/// Nearest center per point (ties to the earlier center) with the distances.
fn assign(cache: &DistanceCache, centers: &[usize]) -> Result<(Vec<usize>, Vec<f64>)> {
    (0..cache.len())
        .into_par_iter()
        .map(|i| {
            let mut best = (0, f64::INFINITY);
            for (c, &ci) in centers.iter().enumerate() {
                let d = cache.get(i, ci)?;
                if d < best.1 {
                    best = (c, d);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

fn build_clustering(
    points: &[Mvn],
    cache: &DistanceCache,
    centers: Vec<usize>,
    weights: &[f64],
    cost_history: Vec<f64>,
) -> Result<Clustering> {
    let (assignment, dists) = assign(cache, &centers)?;
    Ok(Clustering {
        centers: centers.iter().map(|&i| points[i].clone()).collect(),
        center_indices: centers,
        assignment,
        radius: dists.iter().copied().fold(0.0, f64::max),
        cost: dists.iter().zip(weights).map(|(d, w)| d * w).sum(),
        cost_history,
    })
}

fn gonzalez(cache: &DistanceCache, k: usize, first: usize) -> Result<Vec<usize>> {
    let mut centers = vec![first];
    let mut near = cache.row(first)?;
    while centers.len() < k {
        let (next, _) = near
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |b, (i, &d)| if d > b.1 { (i, d) } else { b });
        centers.push(next);
        for (n, d) in near.iter_mut().zip(cache.row(next)?) {
            *n = n.min(d);
        }
    }
    Ok(centers)
}

/// Farthest-first traversal from a seeded random start.
pub fn kcenter_gonzalez(points: &[Mvn], k: usize, metric: MetricSpace, seed: u64) -> Result<Clustering> {
    check_k(points.len(), k)?;
    let cache = DistanceCache::new(points, metric);
    kcenter_with_cache(points, &cache, k, seed)
}

fn kcenter_with_cache(points: &[Mvn], cache: &DistanceCache, k: usize, seed: u64) -> Result<Clustering> {
    let first = ChaCha8Rng::seed_from_u64(seed).random_range(0..points.len());
    let centers = gonzalez(cache, k, first)?;
    build_clustering(points, cache, centers, &vec![1.0; points.len()], Vec::new())
}

/// k-medioid clustering seeded by farthest-first traversal: alternating
/// assign/re-pick rounds, then best-improvement swaps until a swap-local optimum.
pub fn kmedioid(
    points: &[Mvn],
    weights: Option<&[f64]>,
    k: usize,
    metric: MetricSpace,
    seed: u64,
) -> Result<Clustering> {
    check_k(points.len(), k)?;
    let n = points.len();
    let w = match weights {
        Some(w) if w.len() != n => return invalid("weight count does not match point count"),
        Some(w) if w.iter().any(|&x| !(x > 0.0 && x.is_finite())) => {
            return invalid("weights must be positive")
        }
        Some(w) => w.to_vec(),
        None => vec![1.0; n],
    };
    let cache = DistanceCache::new(points, metric);
    let first = ChaCha8Rng::seed_from_u64(seed).random_range(0..n);
    let mut medioids = gonzalez(&cache, k, first)?;
    let weighted_cost = |dists: &[f64]| dists.iter().zip(&w).map(|(d, w)| d * w).sum::<f64>();
    let (mut assignment, dists) = assign(&cache, &medioids)?;
    let mut cost = weighted_cost(&dists);
    let mut history = vec![cost];
    for _ in 0..KMEDIOID_MAX_ROUNDS {
        let mut next = medioids.clone();
        for (c, slot) in next.iter_mut().enumerate() {
            let members: Vec<usize> = (0..n).filter(|&i| assignment[i] == c).collect();
            let in_cluster = |m: usize| -> Result<f64> {
                members.iter().map(|&i| Ok(w[i] * cache.get(i, m)?)).sum()
            };
            let mut best = (*slot, in_cluster(*slot)?);
            for &m in &members {
                let v = in_cluster(m)?;
                if v < best.1 {
                    best = (m, v);
                }
            }
            *slot = best.0;
        }
        let (next_assignment, next_dists) = assign(&cache, &next)?;
        let next_cost = weighted_cost(&next_dists);
        if next_cost < cost {
            medioids = next;
            assignment = next_assignment;
            cost = next_cost;
            history.push(cost);
        } else {
            break;
        }
    }
    // Swap phase: best single medioid/non-medioid exchange until none helps.
    for _ in 0..KMEDIOID_MAX_ROUNDS {
        let swap_cost = |slot: usize, h: usize| -> Result<f64> {
            (0..n)
                .map(|i| {
                    let mut best = cache.get(i, h)?;
                    for (c, &m) in medioids.iter().enumerate() {
                        if c != slot {
                            best = best.min(cache.get(i, m)?);
                        }
                    }
                    Ok(w[i] * best)
                })
                .sum()
        };
        let mut best: Option<(usize, usize, f64)> = None;
        for slot in 0..k {
            for h in (0..n).filter(|h| !medioids.contains(h)) {
                let v = swap_cost(slot, h)?;
                if v < best.map_or(cost * (1.0 - 1e-12), |b| b.2) {
                    best = Some((slot, h, v));
                }
            }
        }
        let Some((slot, h, _)) = best else { break };
        medioids[slot] = h;
        let (_, dists) = assign(&cache, &medioids)?;
        cost = weighted_cost(&dists);
        history.push(cost);
    }
    build_clustering(points, &cache, medioids, &w, history)
}

// ---------------------------------------------------------------------------
// Minimax centers

#[derive(Clone, Debug, PartialEq)]
pub struct Miniball {
    pub center: Mvn,
    pub radius: f64,
    /// `(iteration, radius)` every 100 iterations.
    pub radius_trace: Vec<(usize, f64)>,
}

fn farthest(dists: &[f64]) -> (usize, f64) {
    dists.iter().enumerate().fold((0, f64::NEG_INFINITY), |b, (i, &d)| if d > b.1 { (i, d) } else { b })
}

/// Geodesic walk `c_{t+1} = γ(c_t, p_far; 1/(t+1))` from `c_1 = p_1`.
pub fn miniball(points: &[Mvn], metric: MetricSpace, iterations: usize) -> Result<Miniball> {
    if points.is_empty() {
        return invalid("no points");
    }
    if metric.geodesic.is_none() {
        return invalid("miniball needs a geodesic");
    }
    let ecc = |c: &Mvn| -> Result<Vec<f64>> {
        points.par_iter().map(|p| metric.distance(c, p)).collect()
    };
    let mut center = points[0].clone();
    let mut trace = Vec::new();
    for t in 1..=iterations {
        let (far, r) = farthest(&ecc(&center)?);
        if t % TRACE_EVERY == 0 {
            trace.push((t, r));
        }
        if r > 0.0 {
            center = metric.geodesic_point(&center, &points[far], 1.0 / (t as f64 + 1.0))?;
        }
    }
    let radius = farthest(&ecc(&center)?).1;
    Ok(Miniball { center, radius, radius_trace: trace })
}

/// Miniball walk in the embedding cone under the half-trace metric, read
/// back through the projection onto the `a = 1` slice. `radius` is measured
/// in the cone.
pub fn miniball_embedded(points: &[Mvn], iterations: usize) -> Result<Miniball> {
    if points.is_empty() {
        return invalid("no points");
    }
    let lifted: Vec<SpdMatrix> = points.iter().map(|p| embed(p, 1.0)).collect::<Result<_>>()?;
    let ecc = |c: &SpdMatrix| -> Result<Vec<f64>> {
        lifted.par_iter().map(|p| spd_trace_distance(c, p, std::f64::consts::FRAC_1_SQRT_2)).collect()
    };
    let mut center = lifted[0].clone();
    let mut trace = Vec::new();
    for t in 1..=iterations {
        let (far, r) = farthest(&ecc(&center)?);
        if t % TRACE_EVERY == 0 {
            trace.push((t, r));
        }
        if r > 0.0 {
            center = spd_geodesic(&center, &lifted[far], 1.0 / (t as f64 + 1.0))?;
        }
    }
    let radius = farthest(&ecc(&center)?).1;
    let (projected, _) = project_to_embedded(&center, 1.0)?;
    Ok(Miniball { center: embed_inverse(&projected)?.0, radius, radius_trace: trace })
}

/// Inductive mean `C_i = C_{i−1} #_{1/i} S_{f_i}` over uniformly drawn inputs.
pub fn stochastic_centroid_spd(points: &[SpdMatrix], iterations: usize, seed: u64) -> Result<SpdMatrix> {
    if points.is_empty() {
        return invalid("no points");
    }
    if iterations == 0 {
        return invalid("iterations must be at least 1");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = points[rng.random_range(0..points.len())].clone();
    for i in 2..=iterations {
        let s = &points[rng.random_range(0..points.len())];
        c = spd_geodesic(&c, s, 1.0 / i as f64)?;
    }
    Ok(c)
}

/// [`stochastic_centroid_spd`] on the embedded normals, projected back onto the `a = 1` slice.
pub fn stochastic_centroid_mvn(points: &[Mvn], iterations: usize, seed: u64) -> Result<Mvn> {
    let lifted: Vec<SpdMatrix> = points.iter().map(|p| embed(p, 1.0)).collect::<Result<_>>()?;
    let c = stochastic_centroid_spd(&lifted, iterations, seed)?;
    let (projected, _) = project_to_embedded(&c, 1.0)?;
    Ok(embed_inverse(&projected)?.0)
}

// ---------------------------------------------------------------------------
// Mixture reduction

/// Reduces a mixture to `k` of its own components by weighted k-medioid;
/// each kept component collects the weights of the components assigned to it.
pub fn gmm_simplify(g: &Gmm, k: usize, metric: MetricSpace, seed: u64) -> Result<Gmm> {
    let c = kmedioid(g.components(), Some(g.weights()), k, metric, seed)?;
    let mut w = vec![0.0; k];
    for (i, &a) in c.assignment.iter().enumerate() {
        w[a] += g.weights()[i];
    }
    Gmm::normalized(w, c.centers)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Quantization {
    pub codebook: Vec<Mvn>,
    /// One simplex vector over the codebook per input mixture.
    pub weights: Vec<Vec<f64>>,
    pub radius: f64,
}

/// Shared codebook by k-center over the pooled components.
pub fn gmm_quantize(gmms: &[Gmm], k: usize, metric: MetricSpace, seed: u64) -> Result<Quantization> {
    let pooled: Vec<Mvn> = gmms.iter().flat_map(|g| g.components().iter().cloned()).collect();
    check_k(pooled.len(), k)?;
    let c = kcenter_gonzalez(&pooled, k, metric, seed)?;
    let mut offset = 0;
    let mut weights = Vec::with_capacity(gmms.len());
    for g in gmms {
        let mut w = vec![0.0; k];
        for (j, &wj) in g.weights().iter().enumerate() {
            w[c.assignment[offset + j]] += wj;
        }
        offset += g.len();
        weights.push(w);
    }
    Ok(Quantization { codebook: c.centers, weights, radius: c.radius })
}
