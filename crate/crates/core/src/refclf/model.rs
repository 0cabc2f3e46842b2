use crate::frameseq::{resize_bilinear, ByteImage};

use super::ClfError;

/// Multinomial logistic regression over downsampled, flattened images.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    /// `K x D`, row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub input_side: usize,
    pub channels: usize,
    pub class_names: Vec<String>,
    /// Free-form record of the training configuration.
    pub config_echo: String,
}

impl ClassifierModel {
    /// All-zero parameters.
    pub fn zeros(class_names: Vec<String>, input_side: usize, channels: usize) -> Self {
        let k = class_names.len();
        let d = input_side * input_side * channels;
        Self {
            weights: vec![0.0; k * d],
            bias: vec![0.0; k],
            input_side,
            channels,
            class_names,
            config_echo: String::new(),
        }
    }

    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    pub fn n_features(&self) -> usize {
        self.input_side * self.input_side * self.channels
    }

    pub fn check(&self) -> Result<(), ClfError> {
        let (k, d) = (self.n_classes(), self.n_features());
        if self.weights.len() != k * d || self.class_names.len() != k {
            return Err(ClfError::DimensionMismatch { expected: k * d, actual: self.weights.len() });
        }
        if self.weights.iter().chain(&self.bias).any(|v| !v.is_finite()) {
            return Err(ClfError::NonFinite);
        }
        Ok(())
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>, ClfError> {
        let d = self.n_features();
        if x.len() != d {
            return Err(ClfError::DimensionMismatch { expected: d, actual: x.len() });
        }
        Ok(self
            .weights
            .chunks_exact(d)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect())
    }
}

/// Downsamples to `side x side` and scales samples to `[0, 1]`, flattened
/// channel-interleaved.
pub fn featurize(img: &ByteImage, side: usize) -> Result<Vec<f64>, ClfError> {
    let small = resize_bilinear(&img.to_frame(), side, side)?;
    Ok(small.into_data().into_iter().map(|v| v / 255.0).collect())
}

/// Softmax with max-logit subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn forward(model: &ClassifierModel, x: &[f64]) -> Result<Vec<f64>, ClfError> {
    Ok(softmax(&model.logits(x)?))
}

/// Index of the largest value; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict_features(model: &ClassifierModel, x: &[f64]) -> Result<usize, ClfError> {
    Ok(argmax(&model.logits(x)?))
}

/// Predicted class index for an 8-bit image.
pub fn predict(model: &ClassifierModel, img: &ByteImage) -> Result<usize, ClfError> {
    if img.channels() != model.channels {
        return Err(ClfError::DimensionMismatch { expected: model.channels, actual: img.channels() });
    }
    predict_features(model, &featurize(img, model.input_side)?)
}

/// Parameter gradients, laid out like the model's parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Mean cross-entropy over the batch and its analytic gradient:
/// `dW = mean((p - onehot) x^T)`, `db = mean(p - onehot)`.
pub fn loss_and_grad(model: &ClassifierModel, batch: &[(&[f64], usize)]) -> Result<(f64, Gradients), ClfError> {
    if batch.is_empty() {
        return Err(ClfError::EmptyBatch);
    }
    let (k, d) = (model.n_classes(), model.n_features());
    let mut grads = Gradients { weights: vec![0.0; k * d], bias: vec![0.0; k] };
    let mut loss = 0.0;
    for &(x, label) in batch {
        if label >= k {
            return Err(ClfError::LabelOutOfRange { label, k });
        }
        let z = model.logits(x)?;
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - z[label];
        for (c, &zc) in z.iter().enumerate() {
            let delta = (zc - lse).exp() - if c == label { 1.0 } else { 0.0 };
            grads.bias[c] += delta;
            for (g, &v) in grads.weights[c * d..(c + 1) * d].iter_mut().zip(x) {
                *g += delta * v;
            }
        }
    }
    let n = batch.len() as f64;
    grads.weights.iter_mut().chain(grads.bias.iter_mut()).for_each(|g| *g /= n);
    Ok((loss / n, grads))
}

/// Mean cross-entropy without gradients.
pub fn mean_loss(model: &ClassifierModel, batch: &[(&[f64], usize)]) -> Result<f64, ClfError> {
    if batch.is_empty() {
        return Err(ClfError::EmptyBatch);
    }
    let mut loss = 0.0;
    for &(x, label) in batch {
        if label >= model.n_classes() {
            return Err(ClfError::LabelOutOfRange { label, k: model.n_classes() });
        }
        let z = model.logits(x)?;
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        loss += lse - z[label];
    }
    Ok(loss / batch.len() as f64)
}
