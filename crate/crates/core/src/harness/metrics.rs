//! Distances between distributions, with bootstrap error bars for the
//! sampled side.

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution as _};
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;
use crate::stats::{ks_statistic, Moments};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L1,
    L2,
    Ks,
    /// Total variation, half the L¹ distance.
    Tv,
}

/// One side of a comparison.
#[derive(Debug, Clone, PartialEq)]
pub enum Distribution {
    /// Deterministic density values on equal cells of measure `cell`.
    Density { values: Vec<f64>, cell: f64 },
    /// Histogram counts out of `total` draws; draws that fell outside every
    /// bin count towards `total` only.
    Histogram { counts: Vec<u64>, total: u64, cell: f64 },
    /// Raw one-dimensional samples.
    Samples(Vec<f64>),
}

impl Distribution {
    fn is_random(&self) -> bool {
        !matches!(self, Distribution::Density { .. })
    }

    fn density(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            Distribution::Density { values, cell } => Some((values.clone(), *cell)),
            Distribution::Histogram { counts, total, cell } => {
                let norm = 1.0 / (*total as f64 * cell);
                Some((counts.iter().map(|&c| c as f64 * norm).collect(), *cell))
            }
            Distribution::Samples(_) => None,
        }
    }

    fn resample<R: Rng + ?Sized>(&self, rng: &mut R) -> Distribution {
        match self {
            Distribution::Density { .. } => self.clone(),
            Distribution::Histogram { counts, total, cell } => Distribution::Histogram {
                counts: multinomial(counts, *total, rng),
                total: *total,
                cell: *cell,
            },
            Distribution::Samples(s) => {
                Distribution::Samples((0..s.len()).map(|_| *s.choose(rng).expect("nonempty")).collect())
            }
        }
    }
}

/// Draws a multinomial vector with `total` trials and cell probabilities
/// proportional to `counts`, plus an implicit overflow cell holding the rest.
fn multinomial<R: Rng + ?Sized>(counts: &[u64], total: u64, rng: &mut R) -> Vec<u64> {
    let mut left_n = total;
    let mut left_p = total as f64;
    counts
        .iter()
        .map(|&c| {
            if left_n == 0 || c == 0 {
                return 0;
            }
            let p = (c as f64 / left_p).min(1.0);
            let x = Binomial::new(left_n, p).expect("p in [0, 1]").sample(rng);
            left_n -= x;
            left_p -= c as f64;
            x
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bootstrap {
    pub replicates: usize,
    pub seed: u64,
}

impl Default for Bootstrap {
    fn default() -> Self {
        Bootstrap {
            replicates: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    pub value: f64,
    /// Bootstrap standard deviation; zero when both sides are deterministic.
    pub std_error: f64,
}

fn distance(a: &Distribution, b: &Distribution, metric: Metric) -> Result<f64> {
    if let (Distribution::Samples(x), Distribution::Samples(y)) = (a, b) {
        return match metric {
            Metric::Ks => Ok(ks_statistic(x, y)),
            _ => Err(Error::Shape("raw samples support only the KS metric".into())),
        };
    }
    let (Some((p, ca)), Some((q, cb))) = (a.density(), b.density()) else {
        return Err(Error::Shape("cannot compare raw samples with binned data".into()));
    };
    if p.len() != q.len() || (ca - cb).abs() > 1e-12 * ca.abs().max(cb.abs()) {
        return Err(Error::Shape(format!(
            "binnings differ: {} vs {} cells",
            p.len(),
            q.len()
        )));
    }
    let diff = p.iter().zip(&q).map(|(x, y)| x - y);
    Ok(match metric {
        Metric::L1 => diff.map(f64::abs).sum::<f64>() * ca,
        Metric::Tv => 0.5 * diff.map(f64::abs).sum::<f64>() * ca,
        Metric::L2 => (diff.map(|d| d * d).sum::<f64>() * ca).sqrt(),
        Metric::Ks => {
            let mut acc = 0.0f64;
            let mut worst = 0.0f64;
            for d in diff {
                acc += d * ca;
                worst = worst.max(acc.abs());
            }
            worst
        }
    })
}

/// Distance between `a` and `b` with a bootstrap error bar from resampling
/// whichever sides are random.
pub fn compare_distributions(
    a: &Distribution,
    b: &Distribution,
    metric: Metric,
    bootstrap: Bootstrap,
) -> Result<Distance> {
    let value = distance(a, b, metric)?;
    if !(a.is_random() || b.is_random()) || bootstrap.replicates < 2 {
        return Ok(Distance { value, std_error: 0.0 });
    }
    let mut rng = stream_rng(bootstrap.seed, 0x6d65_7472);
    let mut m = Moments::new();
    for _ in 0..bootstrap.replicates {
        m.push(distance(&a.resample(&mut rng), &b.resample(&mut rng), metric)?);
    }
    Ok(Distance {
        value,
        std_error: m.variance().sqrt(),
    })
}

/// Monte Carlo error of a histogram measured in a metric: the root mean
/// square distance between bootstrap replicates and the histogram itself.
pub fn histogram_error(h: &Distribution, metric: Metric, bootstrap: Bootstrap) -> Result<f64> {
    if !h.is_random() {
        return Ok(0.0);
    }
    let mut rng = stream_rng(bootstrap.seed, 0x6572_726f);
    let mut sq = 0.0;
    for _ in 0..bootstrap.replicates.max(1) {
        let d = distance(&h.resample(&mut rng), h, metric)?;
        sq += d * d;
    }
    Ok((sq / bootstrap.replicates.max(1) as f64).sqrt())
}
