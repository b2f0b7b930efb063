use std::fmt;
use std::str::FromStr;

use crate::classifier::Classifier;
use crate::data::{ImageStore, PoolState};
use crate::error::{HalError, Result};
use crate::linalg::{jacobi_eigen, sample_covariance, JACOBI_TOL};

const SIGMA_EPS: f64 = 1e-8;
const DEGENERATE_TRACE: f64 = 1e-12;
const MODE_BINS: usize = 16;

/// Statistic used as the class center in the diversity feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Representation {
    #[default]
    Mean,
    Median,
    Mode,
    Max,
    Min,
}

impl Representation {
    pub const ALL: [Representation; 5] = [Self::Mean, Self::Median, Self::Mode, Self::Max, Self::Min];

    pub fn name(self) -> &'static str {
        match self {
            Self::Mean => "mean",
            Self::Median => "median",
            Self::Mode => "mode",
            Self::Max => "max",
            Self::Min => "min",
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Representation {
    type Err = HalError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| HalError::Config(format!("unknown representation `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassSummary {
    pub count: usize,
    pub mean: Vec<f64>,
    /// Center under the configured representation (equals `mean` for Mean).
    pub center: Vec<f64>,
    pub sigma: Vec<f64>,
    /// Covariance eigenvalues divided by their sum, descending. All zero
    /// for degenerate classes.
    pub spectrum: Vec<f64>,
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassStats {
    pub dim: usize,
    pub representation: Representation,
    pub classes: Vec<ClassSummary>,
}

impl ClassStats {
    /// Statistics over row embeddings grouped by label.
    pub fn from_embeddings(
        embeddings: &[Vec<f64>],
        labels: &[usize],
        classes: usize,
        dim: usize,
        representation: Representation,
    ) -> Result<Self> {
        if embeddings.len() != labels.len() {
            return Err(HalError::Shape(format!(
                "{} embeddings for {} labels",
                embeddings.len(),
                labels.len()
            )));
        }
        let mut groups: Vec<Vec<&[f64]>> = vec![Vec::new(); classes];
        for (e, &y) in embeddings.iter().zip(labels) {
            if e.len() != dim {
                return Err(HalError::Shape(format!("embedding length {} != {dim}", e.len())));
            }
            if y >= classes {
                return Err(HalError::InvalidArgument(format!("label {y} out of range")));
            }
            groups[y].push(e);
        }
        let classes = groups.iter().map(|g| summarize(g, dim, representation)).collect();
        Ok(Self {
            dim,
            representation,
            classes,
        })
    }

    /// Embeds every labeled item with the classifier and summarizes per class.
    pub fn compute(clf: &Classifier, pool: &PoolState, store: &ImageStore, representation: Representation) -> Result<Self> {
        if pool.labeled().is_empty() {
            return Err(HalError::Empty("labeled set"));
        }
        let emb = clf.embed_indices(store, pool.labeled())?;
        let labels: Vec<usize> = pool.labeled().iter().map(|&i| store.label(i)).collect();
        Self::from_embeddings(&emb, &labels, clf.classes(), clf.embedding_len(), representation)
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

fn summarize(rows: &[&[f64]], dim: usize, representation: Representation) -> ClassSummary {
    let m = rows.len();
    let mut mean = vec![0.0; dim];
    for r in rows {
        for (a, &v) in mean.iter_mut().zip(r.iter()) {
            *a += v;
        }
    }
    if m > 0 {
        mean.iter_mut().for_each(|a| *a /= m as f64);
    }
    let mut sigma = vec![0.0; dim];
    if m > 1 {
        for r in rows {
            for d in 0..dim {
                sigma[d] += (r[d] - mean[d]).powi(2);
            }
        }
        sigma.iter_mut().for_each(|s| *s = (*s / (m - 1) as f64).sqrt());
    }
    let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
    let cov = sample_covariance(&flat, m, dim);
    let trace: f64 = (0..dim).map(|d| cov[d * dim + d]).sum();
    let degenerate = m < 2 || trace < DEGENERATE_TRACE;
    let spectrum = if degenerate {
        vec![0.0; dim]
    } else {
        let eig = jacobi_eigen(&cov, dim, JACOBI_TOL);
        let clamped: Vec<f64> = eig.values.iter().map(|&v| v.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        clamped.iter().map(|v| v / total).collect()
    };
    let center = match representation {
        Representation::Mean => mean.clone(),
        _ if m == 0 => vec![0.0; dim],
        Representation::Median => per_dim(rows, dim, median),
        Representation::Mode => per_dim(rows, dim, histogram_mode),
        Representation::Max => per_dim(rows, dim, |v| v.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        Representation::Min => per_dim(rows, dim, |v| v.iter().copied().fold(f64::INFINITY, f64::min)),
    };
    ClassSummary {
        count: m,
        mean,
        center,
        sigma,
        spectrum,
        degenerate,
    }
}

fn per_dim(rows: &[&[f64]], dim: usize, f: impl Fn(&mut [f64]) -> f64) -> Vec<f64> {
    let mut col = vec![0.0; rows.len()];
    (0..dim)
        .map(|d| {
            for (c, r) in col.iter_mut().zip(rows) {
                *c = r[d];
            }
            f(&mut col)
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Center of the fullest of 16 equal-width bins spanning the values;
/// ties go to the lowest bin.
fn histogram_mode(v: &mut [f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return lo;
    }
    let width = (hi - lo) / MODE_BINS as f64;
    let mut counts = [0usize; MODE_BINS];
    for &x in v.iter() {
        let b = (((x - lo) / width) as usize).min(MODE_BINS - 1);
        counts[b] += 1;
    }
    let mut best = 0;
    for b in 1..MODE_BINS {
        if counts[b] > counts[best] {
            best = b;
        }
    }
    lo + (best as f64 + 0.5) * width
}

/// One minus the largest normalized eigenvalue per class; 0 for degenerate
/// classes.
pub fn bias_aware(stats: &ClassStats) -> Vec<f64> {
    stats
        .classes
        .iter()
        .map(|c| {
            if c.degenerate {
                0.0
            } else {
                (1.0 - c.spectrum.first().copied().unwrap_or(1.0)).clamp(0.0, 1.0)
            }
        })
        .collect()
}

/// Standardized squared distance to each class center, averaged over
/// dimensions; 0 for degenerate classes.
pub fn diversity(embedding: &[f64], stats: &ClassStats) -> Result<Vec<f64>> {
    if embedding.len() != stats.dim {
        return Err(HalError::Shape(format!(
            "embedding length {} != {}",
            embedding.len(),
            stats.dim
        )));
    }
    let n = stats.dim as f64;
    Ok(stats
        .classes
        .iter()
        .map(|c| {
            if c.degenerate {
                return 0.0;
            }
            embedding
                .iter()
                .zip(&c.center)
                .zip(&c.sigma)
                .map(|((e, mu), s)| (e - mu).powi(2) / (2.0 * s * s + SIGMA_EPS))
                .sum::<f64>()
                / n
        })
        .collect())
}

/// Shannon entropy in nats with 0 log 0 = 0.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

fn check_prob(p: &[f64], row: usize) -> Result<()> {
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || p.iter().any(|&x| !(x >= 0.0)) {
        return Err(HalError::NotNormalized { row, sum });
    }
    Ok(())
}

/// Entropy of the clean prediction minus the mean entropy of the noisy ones.
pub fn mutual_information(clean: &[f64], noisy: &[Vec<f64>]) -> Result<f64> {
    if noisy.is_empty() {
        return Err(HalError::Empty("noisy predictions"));
    }
    check_prob(clean, 0)?;
    for (i, row) in noisy.iter().enumerate() {
        if row.len() != clean.len() {
            return Err(HalError::Shape(format!("noisy row {i} has length {}", row.len())));
        }
        check_prob(row, i + 1)?;
    }
    let mean_noisy = noisy.iter().map(|r| entropy(r)).sum::<f64>() / noisy.len() as f64;
    Ok(entropy(clean) - mean_noisy)
}
