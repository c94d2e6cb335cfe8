//! PCA reduction of lexicon embeddings and a full-covariance Gaussian
//! mixture fitted by EM in the reduced space.
//!
//! Both fits are deterministic: PCA signs are fixed so that the
//! largest-magnitude coordinate of every component is positive, and the EM
//! initialization (k-means++ seeding followed by Lloyd refinement) draws from
//! a ChaCha stream keyed by an explicit seed. Per-point work in the E-step
//! runs on the rayon pool, but every reduction is summed in point order, so
//! results do not depend on the thread count.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::error::{Error, Result};

pub const DEFAULT_COMPONENTS: usize = 3;
pub const DEFAULT_PCA_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Row vectors, ordered by descending explained variance.
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
    /// Sum of all eigenvalues of the sample covariance.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn out_dim(&self) -> usize {
        self.components.len()
    }

    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance
            .iter()
            .map(|v| v / self.total_variance)
            .collect()
    }

    /// `components · (v − mean)`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(v.iter().zip(&self.mean))
                    .map(|(ci, (vi, mi))| ci * (vi - mi))
                    .sum()
            })
            .collect())
    }
}

/// Fits PCA on the embeddings of `words` (which must all be in `table`).
pub fn fit_pca(table: &EmbeddingTable, words: &[&str], out_dim: usize) -> Result<PcaModel> {
    let rows = words
        .iter()
        .map(|w| {
            table
                .get(w)
                .ok_or_else(|| Error::InvalidArgument(format!("`{w}` has no embedding")))
        })
        .collect::<Result<Vec<_>>>()?;
    fit_pca_rows(&rows, out_dim)
}

pub fn fit_pca_rows(rows: &[&[f64]], out_dim: usize) -> Result<PcaModel> {
    let n = rows.len();
    if out_dim == 0 {
        return Err(Error::InvalidArgument("PCA output dimension must be positive".into()));
    }
    if n <= out_dim {
        return Err(Error::Numerical(format!(
            "PCA to {out_dim} dimensions needs more than {out_dim} points, got {n}"
        )));
    }
    let d = rows[0].len();
    if out_dim > d {
        return Err(Error::InvalidArgument(format!(
            "PCA output dimension {out_dim} exceeds input dimension {d}"
        )));
    }
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: r.len(),
        });
    }

    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, x) in mean.iter_mut().zip(r.iter()) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let total_variance = cov.trace();
    if !(total_variance > 0.0) {
        return Err(Error::Numerical("degenerate covariance: all points identical".into()));
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    // descending eigenvalue, index as tie-break for determinism
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let mut components = Vec::with_capacity(out_dim);
    let mut explained_variance = Vec::with_capacity(out_dim);
    for &idx in order.iter().take(out_dim) {
        let mut c: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let pivot = c
            .iter()
            .enumerate()
            .fold(0, |best, (i, x)| if x.abs() > c[best].abs() { i } else { best });
        if c[pivot] < 0.0 {
            c.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(c);
        explained_variance.push(eig.eigenvalues[idx].max(0.0));
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}

#[derive(Clone, Debug)]
pub struct GmmConfig {
    pub components: usize,
    pub seed: u64,
    pub tol: f64,
    pub max_iter: usize,
    pub reg: f64,
    pub restarts: usize,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            components: DEFAULT_COMPONENTS,
            seed: 0,
            tol: 1e-6,
            max_iter: 500,
            reg: 1e-6,
            restarts: 1,
        }
    }
}

#[derive(Clone, Debug)]
struct Component {
    mean: DVector<f64>,
    chol: Cholesky<f64, Dyn>,
    log_det: f64,
}

impl Component {
    fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let chol = Cholesky::new(cov)
            .ok_or_else(|| Error::Numerical("covariance is not positive definite".into()))?;
        let log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        Ok(Component {
            mean,
            chol,
            log_det,
        })
    }

    fn log_density(&self, x: &DVector<f64>) -> f64 {
        let diff = x - &self.mean;
        let z = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&diff)
            .expect("Cholesky factor has a positive diagonal");
        let k = x.len() as f64;
        -0.5 * (k * (2.0 * std::f64::consts::PI).ln() + self.log_det + z.norm_squared())
    }
}

/// A fitted Gaussian mixture. Immutable; cheap to query concurrently.
#[derive(Clone, Debug)]
pub struct GmmModel {
    weights: Vec<f64>,
    components: Vec<Component>,
    covariances: Vec<DMatrix<f64>>,
    seed: u64,
    log_likelihood_trace: Vec<f64>,
    converged: bool,
}

/// Serialized form of [`GmmModel`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmParams {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Vec<Vec<f64>>>,
    pub seed: u64,
    pub converged: bool,
    /// Mean per-point log-likelihood after initialization and after every M-step.
    pub log_likelihood_trace: Vec<f64>,
}

impl GmmModel {
    fn from_parts(
        weights: Vec<f64>,
        means: Vec<DVector<f64>>,
        covariances: Vec<DMatrix<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let components = means
            .into_iter()
            .zip(&covariances)
            .map(|(m, c)| Component::new(m, c.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(GmmModel {
            weights,
            components,
            covariances,
            seed,
            log_likelihood_trace: Vec::new(),
            converged: false,
        })
    }

    pub fn from_params(params: &GmmParams) -> Result<Self> {
        let k = params.weights.len();
        if k == 0 || params.means.len() != k || params.covariances.len() != k {
            return Err(Error::InvalidArgument("inconsistent mixture parameter counts".into()));
        }
        let dim = params.means[0].len();
        let sum: f64 = params.weights.iter().sum();
        if params.weights.iter().any(|w| !(*w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument("mixture weights must be non-negative and sum to 1".into()));
        }
        let means = params
            .means
            .iter()
            .map(|m| {
                if m.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, found: m.len() });
                }
                Ok(DVector::from_column_slice(m))
            })
            .collect::<Result<Vec<_>>>()?;
        let covariances = params
            .covariances
            .iter()
            .map(|c| {
                if c.len() != dim || c.iter().any(|r| r.len() != dim) {
                    return Err(Error::InvalidArgument("covariance shape mismatch".into()));
                }
                Ok(DMatrix::from_fn(dim, dim, |i, j| c[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = GmmModel::from_parts(params.weights.clone(), means, covariances, params.seed)?;
        model.log_likelihood_trace = params.log_likelihood_trace.clone();
        model.converged = params.converged;
        Ok(model)
    }

    pub fn params(&self) -> GmmParams {
        GmmParams {
            weights: self.weights.clone(),
            means: self.components.iter().map(|c| c.mean.iter().copied().collect()).collect(),
            covariances: self
                .covariances
                .iter()
                .map(|c| c.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
            seed: self.seed,
            converged: self.converged,
            log_likelihood_trace: self.log_likelihood_trace.clone(),
        }
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.components[0].mean.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mean(&self, k: usize) -> &[f64] {
        self.components[k].mean.as_slice()
    }

    pub fn covariance(&self, k: usize) -> &DMatrix<f64> {
        &self.covariances[k]
    }

    pub fn log_likelihood_trace(&self) -> &[f64] {
        &self.log_likelihood_trace
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Returns a copy with components reordered so that new component `i`
    /// is old component `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut out = self.clone();
        out.weights = order.iter().map(|&i| self.weights[i]).collect();
        out.components = order.iter().map(|&i| self.components[i].clone()).collect();
        out.covariances = order.iter().map(|&i| self.covariances[i].clone()).collect();
        out
    }

    fn log_joint(&self, x: &DVector<f64>, out: &mut [f64]) {
        for ((slot, c), w) in out.iter_mut().zip(&self.components).zip(&self.weights) {
            *slot = w.ln() + c.log_density(x);
        }
    }

    fn check_point(&self, point: &[f64]) -> Result<DVector<f64>> {
        if point.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: point.len(),
            });
        }
        if point.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("point has non-finite coordinates".into()));
        }
        Ok(DVector::from_column_slice(point))
    }

    /// Posterior cluster probabilities, computed in log space. If every
    /// weighted density underflows (log-sum-exp is not finite) the result is
    /// one-hot on the nearest mean.
    pub fn posterior(&self, point: &[f64]) -> Result<Vec<f64>> {
        let x = self.check_point(point)?;
        let mut logp = vec![0.0; self.n_components()];
        self.log_joint(&x, &mut logp);
        let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Ok(self.nearest_mean_one_hot(&x));
        }
        let mut p: Vec<f64> = logp.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= sum);
        Ok(p)
    }

    fn nearest_mean_one_hot(&self, x: &DVector<f64>) -> Vec<f64> {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (k, c) in self.components.iter().enumerate() {
            let d = (x - &c.mean).norm_squared();
            if d < best_d {
                best = k;
                best_d = d;
            }
        }
        let mut p = vec![0.0; self.n_components()];
        p[best] = 1.0;
        p
    }

    /// Argmax of the posterior; ties go to the lowest index.
    pub fn hard_assign(&self, point: &[f64]) -> Result<usize> {
        Ok(argmax(&self.posterior(point)?))
    }

    /// Mean per-point log-likelihood.
    pub fn mean_log_likelihood(&self, points: &[Vec<f64>]) -> f64 {
        let xs: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_column_slice(p)).collect();
        let mut resp = vec![0.0; xs.len() * self.n_components()];
        self.e_step(&xs, &mut resp)
    }

    /// Fills `resp` with responsibilities and returns the mean log-likelihood.
    fn e_step(&self, xs: &[DVector<f64>], resp: &mut [f64]) -> f64 {
        let k = self.n_components();
        let lls: Vec<f64> = resp
            .par_chunks_mut(k)
            .zip(xs.par_iter())
            .map(|(r, x)| {
                self.log_joint(x, r);
                let max = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = r.iter().map(|l| (l - max).exp()).sum();
                let lse = max + sum.ln();
                r.iter_mut().for_each(|l| *l = (*l - lse).exp());
                lse
            })
            .collect();
        lls.iter().sum::<f64>() / xs.len() as f64
    }
}

/// PCA projection followed by the mixture: the full map from an embedding
/// to its cluster probabilities.
#[derive(Clone, Debug)]
pub struct ClusterModel {
    pub pca: PcaModel,
    pub gmm: GmmModel,
}

impl ClusterModel {
    /// Fits PCA and the mixture on the embeddings of `words`.
    pub fn fit(table: &EmbeddingTable, words: &[&str], pca_dim: usize, config: &GmmConfig) -> Result<Self> {
        let pca = fit_pca(table, words, pca_dim)?;
        let points = words
            .iter()
            .map(|w| pca.project(table.get(w).expect("checked by fit_pca")))
            .collect::<Result<Vec<_>>>()?;
        let gmm = fit_gmm(&points, config)?;
        Ok(ClusterModel { pca, gmm })
    }

    pub fn n_clusters(&self) -> usize {
        self.gmm.n_components()
    }

    pub fn posterior(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.gmm.posterior(&self.pca.project(v)?)
    }

    pub fn assign(&self, v: &[f64]) -> Result<usize> {
        self.gmm.hard_assign(&self.pca.project(v)?)
    }
}

pub(crate) fn argmax(p: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in p.iter().enumerate().skip(1) {
        if *v > p[best] {
            best = i;
        }
    }
    best
}

/// Fits a full-covariance mixture by EM. Non-convergence within `max_iter`
/// is reported through [`GmmModel::converged`], not as an error.
pub fn fit_gmm(points: &[Vec<f64>], config: &GmmConfig) -> Result<GmmModel> {
    let k = config.components;
    if k == 0 {
        return Err(Error::InvalidArgument("need at least one mixture component".into()));
    }
    if config.restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be at least 1".into()));
    }
    if !(config.reg >= 0.0) || !(config.tol >= 0.0) {
        return Err(Error::InvalidArgument("reg and tol must be non-negative".into()));
    }
    if points.len() < k {
        return Err(Error::Numerical(format!(
            "{} points cannot support {k} mixture components",
            points.len()
        )));
    }
    let dim = points[0].len();
    if dim == 0 {
        return Err(Error::InvalidArgument("points must have positive dimension".into()));
    }
    for p in points {
        if p.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, found: p.len() });
        }
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("points must be finite".into()));
        }
    }
    let mut distinct: Vec<&Vec<f64>> = points.iter().collect();
    distinct.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::Numerical(format!(
            "{} distinct points cannot support {k} mixture components",
            distinct.len()
        )));
    }
    let xs: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_column_slice(p)).collect();
    let spread = total_variance(&xs);
    if spread <= config.reg * dim as f64 {
        return Err(Error::Numerical(
            "points are identical up to the covariance regularization".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut best: Option<GmmModel> = None;
    for _ in 0..config.restarts {
        let model = fit_once(&xs, config, &mut rng)?;
        let ll = *model.log_likelihood_trace.last().expect("trace is never empty");
        if best
            .as_ref()
            .is_none_or(|b| ll > *b.log_likelihood_trace.last().unwrap())
        {
            best = Some(model);
        }
    }
    Ok(best.expect("at least one restart"))
}

fn total_variance(xs: &[DVector<f64>]) -> f64 {
    let n = xs.len() as f64;
    let mut mean = DVector::zeros(xs[0].len());
    for x in xs {
        mean += x;
    }
    mean /= n;
    xs.iter().map(|x| (x - &mean).norm_squared()).sum::<f64>() / n
}

fn fit_once(xs: &[DVector<f64>], config: &GmmConfig, rng: &mut ChaCha8Rng) -> Result<GmmModel> {
    let k = config.components;
    let n = xs.len();
    let labels = kmeans_init(xs, k, rng);
    let mut resp = vec![0.0; n * k];
    for (i, &l) in labels.iter().enumerate() {
        resp[i * k + l] = 1.0;
    }

    let mut model = m_step(xs, &resp, k, config.reg, config.seed)?;
    let mut ll = model.e_step(xs, &mut resp);
    let mut trace = vec![ll];
    let mut converged = false;
    for _ in 0..config.max_iter {
        let next = m_step(xs, &resp, k, config.reg, config.seed)?;
        let next_ll = next.e_step(xs, &mut resp);
        model = next;
        trace.push(next_ll);
        let improvement = next_ll - ll;
        ll = next_ll;
        if improvement < config.tol {
            converged = true;
            break;
        }
    }
    model.log_likelihood_trace = trace;
    model.converged = converged;
    Ok(model)
}

fn m_step(xs: &[DVector<f64>], resp: &[f64], k: usize, reg: f64, seed: u64) -> Result<GmmModel> {
    let n = xs.len();
    let dim = xs[0].len();
    let mut nk = vec![10.0 * f64::EPSILON; k];
    let mut means = vec![DVector::zeros(dim); k];
    for (i, x) in xs.iter().enumerate() {
        for j in 0..k {
            let r = resp[i * k + j];
            nk[j] += r;
            means[j].axpy(r, x, 1.0);
        }
    }
    for j in 0..k {
        means[j] /= nk[j];
    }
    let mut covs = vec![DMatrix::zeros(dim, dim); k];
    for (i, x) in xs.iter().enumerate() {
        for j in 0..k {
            let r = resp[i * k + j];
            if r == 0.0 {
                continue;
            }
            let diff = x - &means[j];
            covs[j].ger(r, &diff, &diff, 1.0);
        }
    }
    for j in 0..k {
        covs[j] /= nk[j];
        // exact symmetry before regularizing
        let sym = (&covs[j] + covs[j].transpose()) * 0.5;
        covs[j] = sym + DMatrix::identity(dim, dim) * reg;
    }
    let total: f64 = nk.iter().sum();
    let weights: Vec<f64> = nk.iter().map(|v| v / total).collect();
    let _ = n;
    GmmModel::from_parts(weights, means, covs, seed)
}

/// k-means++ seeding followed by Lloyd iterations; returns hard labels.
fn kmeans_init(xs: &[DVector<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = xs.len();
    let mut centers: Vec<DVector<f64>> = Vec::with_capacity(k);
    centers.push(xs[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = xs.iter().map(|x| (x - &centers[0]).norm_squared()).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = n - 1;
        for (i, d) in d2.iter().enumerate() {
            if *d > 0.0 && target < *d {
                pick = i;
                break;
            }
            target -= d;
        }
        // rounding can push past the end; fall back to the farthest point
        if d2[pick] == 0.0 {
            pick = argmax(&d2);
        }
        let c = xs[pick].clone();
        for (d, x) in d2.iter_mut().zip(xs) {
            *d = d.min((x - &c).norm_squared());
        }
        centers.push(c);
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, x) in xs.iter().enumerate() {
            let l = nearest(x, &centers);
            if labels[i] != l {
                labels[i] = l;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![DVector::zeros(xs[0].len()); k];
        let mut counts = vec![0usize; k];
        for (x, &l) in xs.iter().zip(&labels) {
            sums[l] += x;
            counts[l] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centers[j] = &sums[j] / counts[j] as f64;
            }
        }
    }
    labels
}

fn nearest(x: &DVector<f64>, centers: &[DVector<f64>]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = (x - c).norm_squared();
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}
