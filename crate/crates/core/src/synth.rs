//! Synthetic benchmarks: two Gaussian blobs with tunable overlap, and
//! categorical tables with a tunable label signal.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::{Metric, NeighborIndex};
use crate::rng;
use crate::sampling::SampleSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlobConfig {
    pub n: usize,
    pub minority_frac: f64,
    /// 0 puts the centers 4 sigma apart, 1 makes them coincide.
    pub overlap: f64,
    pub seed: u64,
}

impl BlobConfig {
    pub fn new(overlap: f64, seed: u64) -> Self {
        BlobConfig { n: 1000, minority_frac: 0.104, overlap, seed }
    }

    pub fn separation(&self) -> f64 {
        libm::fmax(0.0, 4.0 - 4.0 * self.overlap)
    }
}

fn class_labels(n: usize, minority_frac: f64, stream: &mut rng::StreamRng) -> Result<Vec<u8>> {
    if n == 0 {
        return Err(Error::config("n", "must be positive"));
    }
    if !(minority_frac > 0.0 && minority_frac < 1.0) {
        return Err(Error::config("minority_frac", "must lie in (0, 1)"));
    }
    let n_min = libm::round(minority_frac * n as f64) as usize;
    if n_min == 0 || n_min == n {
        return Err(Error::config("minority_frac", format!("gives {n_min} minority rows out of {n}")));
    }
    let mut labels = alloc::vec![0u8; n];
    labels[..n_min].fill(1);
    rng::shuffle(stream, &mut labels);
    Ok(labels)
}

/// Two isotropic unit-variance Gaussians in the plane. The minority class
/// (label 1) is centered at `(separation, 0)`, the majority at the origin.
pub fn generate_blobs(cfg: &BlobConfig) -> Result<SampleSet> {
    if !(0.0..=1.0).contains(&cfg.overlap) {
        return Err(Error::config("overlap", "must lie in [0, 1]"));
    }
    let mut stream = rng::stream(cfg.seed, &[]);
    let labels = class_labels(cfg.n, cfg.minority_frac, &mut stream)?;
    let sep = cfg.separation();
    let mut values = Vec::with_capacity(2 * cfg.n);
    for &y in &labels {
        let (a, b) = rng::normal_pair(&mut stream);
        values.push(a + if y == 1 { sep } else { 0.0 });
        values.push(b);
    }
    SampleSet::numeric(2, values, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatGenConfig {
    pub n: usize,
    pub n_features: usize,
    pub categories: usize,
    pub minority_frac: f64,
    /// Weight of the label-determined category against uniform noise.
    pub signal_strength: f64,
    pub seed: u64,
}

/// Categorical table where feature `j` of a row with label `y` takes
/// category `(y + j) mod m` with probability `signal_strength`, and a
/// uniform category otherwise.
pub fn generate_categorical(cfg: &CatGenConfig) -> Result<Dataset> {
    if cfg.categories < 2 {
        return Err(Error::config("categories", "at least 2 categories are required"));
    }
    if cfg.n_features == 0 {
        return Err(Error::config("n_features", "must be positive"));
    }
    if !(0.0..=1.0).contains(&cfg.signal_strength) {
        return Err(Error::config("signal_strength", "must lie in [0, 1]"));
    }
    let mut stream = rng::stream(cfg.seed, &[]);
    let labels = class_labels(cfg.n, cfg.minority_frac, &mut stream)?;
    let m = cfg.categories;
    let mut codes = Vec::with_capacity(cfg.n * cfg.n_features);
    for &y in &labels {
        for j in 0..cfg.n_features {
            let c = if rng::uniform(&mut stream) < cfg.signal_strength {
                (y as usize + j) % m
            } else {
                rng::index(&mut stream, m)
            };
            codes.push(c as u32);
        }
    }
    let names = (1..=cfg.n_features).map(|j| format!("f{j}")).collect();
    let vocab = alloc::vec![(0..m).map(|c| format!("c{c}")).collect::<Vec<String>>(); cfg.n_features];
    Dataset::new(names, vocab, codes, labels)
}

/// Leave-one-out 1-nearest-neighbor accuracy and balanced accuracy
/// (mean of the per-class recalls), Euclidean.
pub fn loo_1nn_accuracy(set: &SampleSet) -> Result<(f64, f64)> {
    let index = NeighborIndex::new(&set.values, set.width(), &Metric::Euclidean)?;
    let mut hits = [0usize; 2];
    let mut totals = [0usize; 2];
    for i in 0..set.len() {
        let nn = index.k_nearest(i, 1)?;
        let y = set.labels[i] as usize;
        totals[y] += 1;
        if set.labels[nn[0].row] as usize == y {
            hits[y] += 1;
        }
    }
    if totals.contains(&0) {
        return Err(Error::Degenerate(String::from("both classes are required")));
    }
    let acc = (hits[0] + hits[1]) as f64 / set.len() as f64;
    let bal = 0.5 * (hits[0] as f64 / totals[0] as f64 + hits[1] as f64 / totals[1] as f64);
    Ok((acc, bal))
}

/// Overlap at which the mean balanced LOO 1-NN accuracy over `seeds`
/// reaches `target`, found by bisection on `[0, 1]`.
pub fn calibrate_overlap(base: &BlobConfig, seeds: &[u64], target: f64) -> Result<f64> {
    if seeds.is_empty() {
        return Err(Error::config("seeds", "at least one seed is required"));
    }
    let score = |overlap: f64| -> Result<f64> {
        let mut total = 0.0;
        for &seed in seeds {
            let set = generate_blobs(&BlobConfig { overlap, seed, ..base.clone() })?;
            total += loo_1nn_accuracy(&set)?.1;
        }
        Ok(total / seeds.len() as f64)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..25 {
        let mid = 0.5 * (lo + hi);
        if score(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
