use serde::{Deserialize, Serialize};

const CLIP: f64 = 10.0;
const EPS: f64 = 1e-8;

/// Running per-feature mean and variance, merged batch by batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningMeanStd {
    pub count: f64,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl RunningMeanStd {
    pub fn new(dim: usize) -> Self {
        Self {
            count: 1e-4,
            mean: vec![0.0; dim],
            var: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Merges a batch using the pairwise (Chan et al.) combination.
    pub fn update<'a>(&mut self, batch: impl IntoIterator<Item = &'a [f64]>) {
        let dim = self.dim();
        let rows: Vec<&[f64]> = batch.into_iter().collect();
        if rows.is_empty() {
            return;
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for row in &rows {
            for (m, x) in mean.iter_mut().zip(row.iter()) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for row in &rows {
            for ((v, x), m) in var.iter_mut().zip(row.iter()).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        var.iter_mut().for_each(|v| *v /= n);

        let total = self.count + n;
        for k in 0..dim {
            let delta = mean[k] - self.mean[k];
            let m2 = self.var[k] * self.count + var[k] * n + delta * delta * self.count * n / total;
            self.mean[k] += delta * n / total;
            self.var[k] = m2 / total;
        }
        self.count = total;
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.var)
            .map(|((x, m), v)| ((x - m) / (v + EPS).sqrt()).clamp(-CLIP, CLIP))
            .collect()
    }
}
