use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::OutlierScorer;
use crate::error::{Error, Result};
use crate::series::{LabeledDataset, TimeSeriesInstance};

/// Training errors at or below this are treated as an exact fit.
const EXACT_FIT_EPS: f64 = 1e-9;

/// PCA reconstruction scorer: `x̂ = mean + Wᵀ W (x − mean)` with orthonormal
/// rows in `W`. The outlier score is `‖x − x̂‖₂`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearReconstructionScorer {
    length: usize,
    channels: usize,
    mean: Vec<f64>,
    /// `d` rows of length `L·C`.
    components: Vec<Vec<f64>>,
    e_max: f64,
}

impl LinearReconstructionScorer {
    pub fn default_components(length: usize, channels: usize) -> usize {
        8.min(length * channels - 1)
    }

    pub fn fit(train: &LabeledDataset, components: usize) -> Result<Self> {
        let dim = train.length() * train.channels();
        if components == 0 || components >= dim {
            return Err(Error::InvalidValue(format!(
                "component count must be in 1..{dim} (got {components})"
            )));
        }
        let rows: Vec<&[f64]> = train.instances().iter().map(|i| i.values()).collect();
        if rows.len() < 2 || rows.iter().all(|r| *r == rows[0]) {
            return Err(Error::DegenerateData(
                "need at least two distinct training instances".into(),
            ));
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);

        let centered = DMatrix::from_fn(rows.len(), dim, |i, j| rows[i][j] - mean[j]);
        let scatter = centered.transpose() * &centered;
        let eig = SymmetricEigen::new(scatter);

        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let components: Vec<Vec<f64>> = order[..components]
            .iter()
            .map(|&k| {
                let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
                canonical_sign(&mut v);
                v
            })
            .collect();

        let mut scorer = Self {
            length: train.length(),
            channels: train.channels(),
            mean,
            components,
            e_max: 1.0,
        };
        let max_err = rows
            .iter()
            .map(|r| scorer.residual_norm(r))
            .fold(0.0_f64, f64::max);
        scorer.e_max = if max_err <= EXACT_FIT_EPS { 1.0 } else { max_err };
        Ok(scorer)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Reconstruction errors for every training instance.
    pub fn training_errors(&self, train: &LabeledDataset) -> Result<Vec<f64>> {
        train.instances().iter().map(|x| self.reconstruction_error(x)).collect()
    }

    fn residual_norm(&self, x: &[f64]) -> f64 {
        let mut residual: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| v - m).collect();
        let coords: Vec<f64> = self
            .components
            .iter()
            .map(|w| w.iter().zip(&residual).map(|(a, b)| a * b).sum())
            .collect();
        for (w, c) in self.components.iter().zip(coords) {
            for (r, wi) in residual.iter_mut().zip(w) {
                *r -= c * wi;
            }
        }
        residual.iter().map(|r| r * r).sum::<f64>().sqrt()
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let dim = self.length * self.channels;
        if self.mean.len() != dim
            || self.components.is_empty()
            || self.components.len() >= dim
            || self.components.iter().any(|c| c.len() != dim)
            || !(self.e_max > 0.0)
        {
            return Err(Error::CorruptFile("inconsistent linear scorer payload".into()));
        }
        Ok(())
    }
}

/// Flips `v` so its first nonzero coordinate is positive.
fn canonical_sign(v: &mut [f64]) {
    if let Some(first) = v.iter().find(|c| c.abs() > 1e-12) {
        if *first < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
    }
}

impl OutlierScorer for LinearReconstructionScorer {
    fn reconstruction_error(&self, x: &TimeSeriesInstance) -> Result<f64> {
        x.check_shape(self.length, self.channels)?;
        Ok(self.residual_norm(x.values()))
    }

    fn e_max(&self) -> f64 {
        self.e_max
    }
}
