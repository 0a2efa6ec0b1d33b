use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClusterError;

/// Fuzzy c-means hyper-parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FcmParams {
    pub k: usize,
    pub fuzzifier: f64,
    /// Stop once no center moves farther than this.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

pub const DEFAULT_SEED: u64 = 42;

impl Default for FcmParams {
    fn default() -> Self {
        Self {
            k: 5,
            fuzzifier: 2.0,
            tol: 1e-5,
            max_iter: 300,
            seed: DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcmFit {
    pub centers: Vec<Vec<f64>>,
    /// `memberships[i][j]`: membership of point `i` in cluster `j`.
    pub memberships: Vec<Vec<f64>>,
    /// Objective after every center update.
    pub objective: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

/// Memberships of one point given its squared distances to every center.
///
/// Centers at zero distance share the membership equally.
pub fn memberships_from_sq_dists(d2: &[f64], fuzzifier: f64) -> Vec<f64> {
    let zeros = d2.iter().filter(|&&d| d == 0.0).count();
    if zeros > 0 {
        let share = 1.0 / zeros as f64;
        return d2.iter().map(|&d| if d == 0.0 { share } else { 0.0 }).collect();
    }
    let exp = 1.0 / (fuzzifier - 1.0);
    // Scale by the nearest distance so the powers stay in range.
    let dmin = d2.iter().cloned().fold(f64::INFINITY, f64::min);
    let inv: Vec<f64> = d2.iter().map(|&d| (dmin / d).powf(exp)).collect();
    let total: f64 = inv.iter().sum();
    inv.iter().map(|v| v / total).collect()
}

fn objective(points: &[Vec<f64>], centers: &[Vec<f64>], u: &[Vec<f64>], m: f64) -> f64 {
    points
        .iter()
        .zip(u)
        .map(|(x, ui)| {
            centers
                .iter()
                .zip(ui)
                .map(|(c, &uij)| uij.powf(m) * sq_dist(x, c))
                .sum::<f64>()
        })
        .sum()
}

/// k-means++ seeding: first center uniform, then proportional to squared distance
/// to the nearest chosen center.
fn seed_centers(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centers = vec![points[rng.random_range(0..points.len())].clone()];
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        // At least k distinct points guarantee a positive weight here.
        let pick = WeightedIndex::new(&nearest)
            .map(|w| w.sample(rng))
            .unwrap_or_else(|_| nearest.iter().position(|&d| d > 0.0).unwrap_or(0));
        let c = points[pick].clone();
        for (n, p) in nearest.iter_mut().zip(points) {
            *n = n.min(sq_dist(p, &c));
        }
        centers.push(c);
    }
    centers
}

fn distinct_count(points: &[Vec<f64>], limit: usize) -> usize {
    let mut seen: Vec<&Vec<f64>> = Vec::new();
    for p in points {
        if !seen.contains(&p) {
            seen.push(p);
            if seen.len() >= limit {
                break;
            }
        }
    }
    seen.len()
}

/// Standard alternating fuzzy c-means on already-scaled points.
pub fn fuzzy_cmeans(points: &[Vec<f64>], params: &FcmParams) -> Result<FcmFit, ClusterError> {
    if params.k < 2 {
        return Err(ClusterError::InvalidParameter(format!("k must be at least 2, got {}", params.k)));
    }
    if !(params.fuzzifier > 1.0) || !params.fuzzifier.is_finite() {
        return Err(ClusterError::InvalidParameter(format!(
            "fuzzifier must exceed 1, got {}",
            params.fuzzifier
        )));
    }
    if !(params.tol > 0.0) {
        return Err(ClusterError::InvalidParameter(format!("tol must be positive, got {}", params.tol)));
    }
    let dim = points.first().map_or(0, |p| p.len());
    if dim == 0 || points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
        return Err(ClusterError::DegenerateData("points must be finite with equal nonzero dimension".into()));
    }
    let distinct = distinct_count(points, params.k);
    if distinct < params.k {
        return Err(ClusterError::DegenerateData(format!(
            "{distinct} distinct points for {} clusters",
            params.k
        )));
    }

    let m = params.fuzzifier;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut centers = seed_centers(points, params.k, &mut rng);
    let mut memberships = Vec::new();
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < params.max_iter {
        iterations += 1;
        memberships = points
            .iter()
            .map(|x| {
                let d2: Vec<f64> = centers.iter().map(|c| sq_dist(x, c)).collect();
                memberships_from_sq_dists(&d2, m)
            })
            .collect::<Vec<_>>();
        let mut next = vec![vec![0.0; dim]; params.k];
        for j in 0..params.k {
            let mut weight = 0.0;
            for (x, ui) in points.iter().zip(&memberships) {
                let w = ui[j].powf(m);
                weight += w;
                for (acc, v) in next[j].iter_mut().zip(x) {
                    *acc += w * v;
                }
            }
            if weight > 0.0 {
                next[j].iter_mut().for_each(|v| *v /= weight);
            } else {
                next[j].clone_from(&centers[j]);
            }
        }
        let shift = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| sq_dist(a, b).sqrt())
            .fold(0.0, f64::max);
        centers = next;
        history.push(objective(points, &centers, &memberships, m));
        if shift < params.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("fuzzy c-means stopped after {iterations} iterations without converging");
    }
    Ok(FcmFit {
        centers,
        memberships,
        objective: history,
        iterations,
        converged,
    })
}
