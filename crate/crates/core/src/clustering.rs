//! Lloyd k-means, silhouette scoring and silhouette-based choice of `k`.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_LLOYD_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub wcss: f64,
    /// Mean silhouette; `None` until scored.
    pub mean_silhouette: Option<f64>,
}

impl ClusterModel {
    /// Indices of the points assigned to each cluster.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}

/// Indices of one representative per distinct point, in first-seen order.
fn distinct_indices(points: &[Vec<f64>]) -> Vec<usize> {
    let mut reps: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !reps.iter().any(|&r| points[r] == *p) {
            reps.push(i);
        }
    }
    reps
}

pub fn wcss(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &[usize]) -> f64 {
    points.iter().zip(labels).map(|(p, &l)| sq_dist(p, &centroids[l])).sum()
}

fn nearest_centroid(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(p, c);
        if d < best_d {
            best_d = d;
            best = j;
        }
    }
    best
}

/// Recomputes centroids as cluster means, re-seeding any empty cluster with
/// the point farthest from its centroid.
fn update_centroids(points: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let dim = points[0].len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels.iter()) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for j in 0..k {
        if counts[j] > 0 {
            centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
        }
    }
    for j in 0..k {
        if counts[j] == 0 {
            let far = (0..points.len())
                .filter(|&i| counts[labels[i]] > 1 && points[i] != centroids[labels[i]])
                .max_by(|&a, &b| {
                    sq_dist(&points[a], &centroids[labels[a]]).total_cmp(&sq_dist(&points[b], &centroids[labels[b]]))
                })
                .expect("k <= distinct points leaves a donor cluster");
            let donor = labels[far];
            counts[donor] -= 1;
            labels[far] = j;
            counts[j] = 1;
            centroids[j] = points[far].clone();
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(labels.iter())
                .filter(|(_, &l)| l == donor)
                .map(|(p, _)| p)
                .collect();
            centroids[donor] = (0..dim)
                .map(|d| members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64)
                .collect();
        }
    }
}

/// One Lloyd run from the given centroids. Returns the fixed point and the
/// WCSS after every update step.
fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (ClusterModel, Vec<f64>) {
    let k = centroids.len();
    let mut labels: Vec<usize> = points.iter().map(|p| nearest_centroid(p, &centroids)).collect();
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD_ITERS {
        update_centroids(points, &mut labels, &mut centroids);
        trace.push(wcss(points, &centroids, &labels));
        let next: Vec<usize> = points.iter().map(|p| nearest_centroid(p, &centroids)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    update_centroids(points, &mut labels, &mut centroids);
    let w = wcss(points, &centroids, &labels);
    (
        ClusterModel {
            k,
            centroids,
            labels,
            wcss: w,
            mean_silhouette: None,
        },
        trace,
    )
}

/// Best-of-`restarts` Lloyd k-means with centroids initialised on distinct data points.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, restarts: usize, rng: &mut R) -> Result<ClusterModel> {
    kmeans_traced(points, k, restarts, rng).map(|(m, _)| m)
}

/// As [`kmeans`], also returning each restart's per-iteration WCSS trace.
pub fn kmeans_traced<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k: usize,
    restarts: usize,
    rng: &mut R,
) -> Result<(ClusterModel, Vec<Vec<f64>>)> {
    if k < 1 {
        return Err(Error::config("k-means needs k >= 1"));
    }
    if restarts == 0 {
        return Err(Error::config("k-means needs at least one restart"));
    }
    let distinct = distinct_indices(points);
    if k > distinct.len() {
        return Err(Error::config(format!(
            "k = {k} exceeds the {} distinct points",
            distinct.len()
        )));
    }
    let mut best: Option<ClusterModel> = None;
    let mut traces = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let init = sample(rng, distinct.len(), k)
            .into_iter()
            .map(|i| points[distinct[i]].clone())
            .collect();
        let (model, trace) = lloyd(points, init);
        traces.push(trace);
        if best.as_ref().map_or(true, |b| model.wcss < b.wcss) {
            best = Some(model);
        }
    }
    Ok((best.expect("restarts >= 1"), traces))
}

/// Per-point silhouette values; singleton clusters score 0.
pub fn silhouette_values(points: &[Vec<f64>], labels: &[usize]) -> Result<Vec<f64>> {
    if points.len() != labels.len() {
        return Err(Error::config("silhouette needs one label per point"));
    }
    let k = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &l in labels {
        sizes[l] += 1;
    }
    let present = sizes.iter().filter(|&&s| s > 0).count();
    if present < 2 {
        return Err(Error::config("silhouette is undefined for fewer than two clusters"));
    }
    let mut out = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        let own = labels[i];
        if sizes[own] == 1 {
            out.push(0.0);
            continue;
        }
        let mut sums = vec![0.0; k];
        for (j, q) in points.iter().enumerate() {
            if i != j {
                sums[labels[j]] += dist(p, q);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        out.push(if denom > 0.0 { (b - a) / denom } else { 0.0 });
    }
    Ok(out)
}

/// Mean silhouette over all points.
pub fn silhouette(points: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let values = silhouette_values(points, labels)?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Chooses the number of clusters in `[k_min, k_max]` with the highest mean
/// silhouette; ties go to the smaller `k`. `k_max` defaults to `N / 2` and is
/// capped by the number of distinct points.
pub fn select_k<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k_min: usize,
    k_max: Option<usize>,
    restarts: usize,
    rng: &mut R,
) -> Result<ClusterModel> {
    let n = points.len();
    let distinct = distinct_indices(points).len();
    let k_min = k_min.max(2);
    let k_max = k_max.unwrap_or(n / 2).min(distinct);
    if k_max < k_min {
        if n < 4 && distinct >= 2 {
            let mut model = kmeans(points, 2, restarts, rng)?;
            model.mean_silhouette = Some(silhouette(points, &model.labels)?);
            return Ok(model);
        }
        return Err(Error::config(format!(
            "no feasible k in [{k_min}, {k_max}] for {n} points ({distinct} distinct)"
        )));
    }
    let mut best: Option<ClusterModel> = None;
    for k in k_min..=k_max {
        let mut model = kmeans(points, k, restarts, rng)?;
        let s = silhouette(points, &model.labels)?;
        model.mean_silhouette = Some(s);
        let better = match &best {
            None => true,
            Some(b) => s > b.mean_silhouette.expect("scored"),
        };
        if better {
            best = Some(model);
        }
    }
    Ok(best.expect("non-empty k range"))
}
