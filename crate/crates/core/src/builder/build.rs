use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::spec::ModelSpec;
use super::validate_spec;
use crate::error::{Error, Result};
use crate::nn::{
    Activation, ActivationKind, BatchNorm2d, Conv2d, ConvGeometry, Dense, Dropout, Flatten, Layer, LayerKind, Model,
    Pool2d, PoolKind, Real,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerInfo {
    pub kind: LayerKind,
    pub input: Vec<usize>,
    pub output: Vec<usize>,
    pub params: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BuildReport {
    pub layers: Vec<LayerInfo>,
    /// Width of the flatten layer; `None` when there is no convolutional
    /// section or no feed-forward section.
    pub flatten_dim: Option<usize>,
    pub param_count: usize,
    pub warnings: Vec<String>,
}

fn activation<T: Real>(code: i64, index: usize) -> Result<Option<Layer<T>>> {
    match ActivationKind::from_code(code) {
        Some(ActivationKind::Identity) => Ok(None),
        Some(kind) => Ok(Some(Layer::Activation(Activation::new(kind)))),
        None => Err(Error::Build { layer: index, message: format!("unknown activation code {code}") }),
    }
}

fn dropout<T: Real>(p: Option<f64>, index: usize) -> Result<Option<Layer<T>>> {
    match p {
        None => Ok(None),
        Some(p) => Dropout::new(p)
            .map(|d| Some(Layer::Dropout(d)))
            .map_err(|e| Error::Build { layer: index, message: e.to_string() }),
    }
}

/// Emits, per block, conv → [batchnorm] → [activation] → [pool] → [dropout].
pub fn build_conv_section<T: Real>(spec: &ModelSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Layer<T>>> {
    validate_spec(spec).map_err(Error::Spec)?;
    let mut layers = Vec::new();
    for i in 0..spec.layers_cnn {
        let (cin, cout) = spec.filters_list[i];
        let geometry = ConvGeometry { stride: spec.stride(i), padding: spec.padding_list[i], groups: spec.groups_list[i] };
        let conv = Conv2d::new(cin, cout, spec.kernel_list[i], geometry, spec.bias_list[i], rng)
            .map_err(|e| Error::Build { layer: i, message: e.to_string() })?;
        layers.push(Layer::Conv2d(conv));
        if spec.cnn_normalization_list[i] {
            layers.push(Layer::BatchNorm2d(BatchNorm2d::new(cout)));
        }
        layers.extend(activation(spec.activation_list[i], i)?);
        if let Some(p) = spec.pooling_list[i] {
            let kind = PoolKind::from_code(p.code)
                .ok_or_else(|| Error::Build { layer: i, message: format!("unknown pooling code {}", p.code) })?;
            layers.push(Layer::Pool2d(Pool2d::new(kind, p.kernel)));
        }
        layers.extend(dropout(spec.dropout_list[i], i)?);
    }
    Ok(layers)
}

/// Flattened per-sample size after the convolutional section for an input
/// of `(1, channels, h, w)`, from shape rules alone.
pub fn infer_flatten_dim<T: Real>(conv_section: &[Layer<T>], channels: usize, h: usize, w: usize) -> Result<usize> {
    let mut shape = vec![1, channels, h, w];
    for (i, layer) in conv_section.iter().enumerate() {
        shape = layer
            .output_shape(&shape)
            .map_err(|e| Error::Build { layer: i, message: format!("{}: {e}", layer.kind()) })?;
        if shape.contains(&0) {
            return Err(Error::Build { layer: i, message: format!("non-positive dimension in {shape:?}") });
        }
    }
    Ok(shape[1..].iter().product())
}

/// Builds the full model and a per-layer shape report. Weights are drawn
/// from a ChaCha stream seeded with `seed`, in layer order.
pub fn build_model<T: Real>(spec: &ModelSpec, seed: u64) -> Result<(Model<T>, BuildReport)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = build_conv_section::<T>(spec, &mut rng)?;
    let cnn = spec.layers_cnn;
    let total = cnn + spec.layers_ff;
    let mut warnings = Vec::new();
    if spec.bias_list.len() > total {
        let msg = format!(
            "bias_list has {} entries for {total} layers; ignoring the last {}",
            spec.bias_list.len(),
            spec.bias_list.len() - total
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let (input_shape, mut features, flatten_dim) = if cnn > 0 {
        let channels = spec.filters_list[0].0;
        let flat = infer_flatten_dim(&layers, channels, spec.h, spec.w)?;
        (vec![channels, spec.h, spec.w], flat, (spec.layers_ff > 0).then_some(flat))
    } else {
        (vec![spec.h * spec.w], spec.h * spec.w, None)
    };

    if cnn > 0 && spec.layers_ff > 0 {
        layers.push(Layer::Flatten(Flatten::default()));
    }
    for j in 0..spec.layers_ff {
        let idx = cnn + j;
        let dense = Dense::new(features, spec.neurons_list[j], spec.bias_list[idx], &mut rng)
            .map_err(|e| Error::Build { layer: idx, message: e.to_string() })?;
        layers.push(Layer::Dense(dense));
        layers.extend(activation(spec.activation_list[idx], idx)?);
        layers.extend(dropout(spec.dropout_list[idx], idx)?);
        features = spec.neurons_list[j];
    }

    let model = Model::new(layers, input_shape, seed)?;
    let trace = model.shape_trace()?;
    let infos = model
        .layers
        .iter()
        .enumerate()
        .map(|(i, l)| LayerInfo { kind: l.kind(), input: trace[i].clone(), output: trace[i + 1].clone(), params: l.param_count() })
        .collect();
    let report = BuildReport { layers: infos, flatten_dim, param_count: model.param_count(), warnings };
    Ok((model, report))
}
