use ndarray::{Array2, ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParameterVector;

/// One dense layer's shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input_width: usize,
    pub output_width: usize,
}

impl LayerSpec {
    pub fn new(input_width: usize, output_width: usize) -> Result<Self> {
        if input_width == 0 || output_width == 0 {
            return Err(Error::invalid("layer widths must be at least 1"));
        }
        Ok(Self {
            input_width,
            output_width,
        })
    }

    pub fn param_count(&self) -> usize {
        self.output_width * (self.input_width + 1)
    }
}

/// Fully-connected ReLU network with a softmax cross-entropy head.
///
/// All parameters live in a single flat buffer laid out layer by layer as
/// the row-major `output_width x input_width` weight matrix followed by the
/// bias vector. Flattening is therefore a copy of that buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    layers: Vec<LayerSpec>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

impl MlpModel {
    /// A zero-initialized model. Consecutive layers must chain.
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("a model needs at least one layer"));
        }
        for pair in layers.windows(2) {
            if pair[0].output_width != pair[1].input_width {
                return Err(Error::invalid(format!(
                    "layer output width {} does not match next input width {}",
                    pair[0].output_width, pair[1].input_width
                )));
            }
        }
        let mut offsets = Vec::with_capacity(layers.len() + 1);
        let mut total = 0;
        for layer in &layers {
            offsets.push(total);
            total += layer.param_count();
        }
        offsets.push(total);
        Ok(Self {
            layers,
            offsets,
            params: vec![0.0; total],
        })
    }

    /// Builds the layer chain `input_width -> widths[0] -> ... -> widths[last]`.
    pub fn from_widths(input_width: usize, widths: &[usize]) -> Result<Self> {
        let mut layers = Vec::with_capacity(widths.len());
        let mut prev = input_width;
        for &w in widths {
            layers.push(LayerSpec::new(prev, w)?);
            prev = w;
        }
        Self::new(layers)
    }

    /// He-uniform weights (variance `2 / input_width`), zero biases.
    pub fn init_he<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for (i, layer) in self.layers.clone().iter().enumerate() {
            let bound = (6.0 / layer.input_width as f64).sqrt();
            let start = self.offsets[i];
            let n_weights = layer.input_width * layer.output_width;
            for w in &mut self.params[start..start + n_weights] {
                *w = rng.random_range(-bound..bound);
            }
            for b in &mut self.params[start + n_weights..self.offsets[i + 1]] {
                *b = 0.0;
            }
        }
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input_width
    }

    pub fn output_width(&self) -> usize {
        self.layers[self.layers.len() - 1].output_width
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn flatten(&self) -> ParameterVector {
        ParameterVector::from_vec_unchecked(self.params.clone())
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Overwrites every parameter from `values`.
    pub fn unflatten(&mut self, values: &ParameterVector) -> Result<()> {
        values.ensure_len(self.params.len())?;
        self.params.copy_from_slice(values.as_slice());
        Ok(())
    }

    /// A copy of this architecture holding `values`.
    pub fn with_parameters(&self, values: &ParameterVector) -> Result<Self> {
        let mut model = self.clone();
        model.unflatten(values)?;
        Ok(model)
    }

    pub fn weights(&self, layer: usize) -> ArrayView2<'_, f64> {
        let spec = self.layers[layer];
        let start = self.offsets[layer];
        let n = spec.input_width * spec.output_width;
        ArrayView2::from_shape(
            (spec.output_width, spec.input_width),
            &self.params[start..start + n],
        )
        .expect("layer buffer matches its spec")
    }

    pub fn bias(&self, layer: usize) -> ArrayView1<'_, f64> {
        let spec = self.layers[layer];
        let start = self.offsets[layer] + spec.input_width * spec.output_width;
        ArrayView1::from(&self.params[start..self.offsets[layer + 1]])
    }

    fn check_batch(&self, batch: &ArrayView2<'_, f64>) -> Result<()> {
        if batch.ncols() != self.input_width() {
            return Err(Error::shape(self.input_width(), batch.ncols()));
        }
        Ok(())
    }

    fn affine(&self, layer: usize, input: &ArrayView2<'_, f64>) -> Array2<f64> {
        let mut z = input.dot(&self.weights(layer).t());
        z += &self.bias(layer);
        z
    }

    /// Output logits for each row of `batch`.
    pub fn logits(&self, batch: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_batch(&batch)?;
        let last = self.layers.len() - 1;
        let mut act = self.affine(0, &batch);
        for layer in 1..=last {
            act.mapv_inplace(relu);
            act = self.affine(layer, &act.view());
        }
        Ok(act)
    }

    /// Class probabilities for each row of `batch`.
    pub fn forward(&self, batch: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut out = self.logits(batch)?;
        for mut row in out.rows_mut() {
            softmax_in_place(row.view_mut());
        }
        Ok(out)
    }

    /// Gradient of the mean cross-entropy over `batch` and the loss itself.
    pub fn backward(
        &self,
        batch: ArrayView2<'_, f64>,
        labels: &[usize],
    ) -> Result<(ParameterVector, f64)> {
        let mut grad = vec![0.0; self.params.len()];
        let loss = self.backward_into(batch, labels, &mut grad)?;
        Ok((ParameterVector::from_vec_unchecked(grad), loss))
    }

    /// As [`MlpModel::backward`], writing into a caller-owned buffer.
    pub fn backward_into(
        &self,
        batch: ArrayView2<'_, f64>,
        labels: &[usize],
        grad: &mut [f64],
    ) -> Result<f64> {
        self.check_batch(&batch)?;
        let rows = batch.nrows();
        if rows == 0 {
            return Err(Error::invalid("cannot backpropagate an empty batch"));
        }
        if labels.len() != rows {
            return Err(Error::shape(rows, labels.len()));
        }
        if grad.len() != self.params.len() {
            return Err(Error::shape(self.params.len(), grad.len()));
        }
        let classes = self.output_width();
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::invalid(format!("label {bad} out of range")));
        }

        // Post-activation inputs to each layer.
        let last = self.layers.len() - 1;
        let mut inputs: Vec<Array2<f64>> = Vec::with_capacity(last);
        let mut z = self.affine(0, &batch);
        for layer in 1..=last {
            z.mapv_inplace(relu);
            let next = self.affine(layer, &z.view());
            inputs.push(z);
            z = next;
        }

        let scale = 1.0 / rows as f64;
        let mut loss = 0.0;
        for (mut row, &y) in z.rows_mut().into_iter().zip(labels) {
            let log_norm = log_sum_exp(row.view());
            loss -= row[y] - log_norm;
            row.mapv_inplace(|v| (v - log_norm).exp());
            row[y] -= 1.0;
            row.mapv_inplace(|v| v * scale);
        }
        let mut delta = z;

        for layer in (0..=last).rev() {
            let spec = self.layers[layer];
            let input = if layer == 0 {
                batch.view()
            } else {
                inputs[layer - 1].view()
            };
            let start = self.offsets[layer];
            let n_weights = spec.input_width * spec.output_width;
            let (w_buf, b_buf) = grad[start..self.offsets[layer + 1]].split_at_mut(n_weights);
            let mut gw =
                ArrayViewMut2::from_shape((spec.output_width, spec.input_width), w_buf)
                    .expect("layer buffer matches its spec");
            gw.assign(&delta.t().dot(&input));
            let mut gb = ArrayViewMut1::from(b_buf);
            gb.assign(&delta.sum_axis(Axis(0)));
            if layer > 0 {
                let mut upstream = delta.dot(&self.weights(layer));
                ndarray::Zip::from(&mut upstream)
                    .and(&inputs[layer - 1])
                    .for_each(|d, &a| {
                        if a <= 0.0 {
                            *d = 0.0;
                        }
                    });
                delta = upstream;
            }
        }
        Ok(loss * scale)
    }

    /// Mean cross-entropy of `batch` without computing gradients.
    pub fn loss(&self, batch: ArrayView2<'_, f64>, labels: &[usize]) -> Result<f64> {
        let logits = self.logits(batch)?;
        if labels.len() != logits.nrows() {
            return Err(Error::shape(logits.nrows(), labels.len()));
        }
        if labels.is_empty() {
            return Err(Error::invalid("cannot evaluate loss on an empty batch"));
        }
        let total: f64 = logits
            .rows()
            .into_iter()
            .zip(labels)
            .map(|(row, &y)| log_sum_exp(row) - row[y])
            .sum();
        Ok(total / labels.len() as f64)
    }
}

fn relu(v: f64) -> f64 {
    v.max(0.0)
}

fn log_sum_exp(row: ArrayView1<'_, f64>) -> f64 {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    max + row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn softmax_in_place(mut row: ArrayViewMut1<'_, f64>) {
    let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    row.mapv_inplace(|v| (v - max).exp());
    let sum = row.sum();
    row.mapv_inplace(|v| v / sum);
}

/// Row-wise softmax of a logit matrix.
pub fn softmax(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for row in out.rows_mut() {
        softmax_in_place(row);
    }
    out
}
