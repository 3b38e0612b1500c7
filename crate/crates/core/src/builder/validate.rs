use super::spec::ModelSpec;
use crate::error::Violation;
use crate::nn::{conv_output_dim, ActivationKind, PoolKind};

/// Reports every structural problem of `spec`; an empty list means valid.
pub fn spec_violations(spec: &ModelSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    let cnn = spec.layers_cnn;
    let total = spec.layers_cnn + spec.layers_ff;

    if spec.h == 0 || spec.w == 0 {
        out.push(Violation::new("h/w", None, format!("input size ({}, {}) must be positive", spec.h, spec.w)));
    }
    if total == 0 {
        out.push(Violation::new("layers", None, "layers_cnn + layers_ff must be at least 1"));
    }

    let mut len_check = |name: &str, len: usize, want: usize| {
        if len != want {
            out.push(Violation::new(
                format!("{name} length"),
                None,
                format!("expected {want} entries, found {len}"),
            ));
        }
    };
    len_check("kernel_list", spec.kernel_list.len(), cnn);
    len_check("filters_list", spec.filters_list.len(), cnn);
    len_check("padding_list", spec.padding_list.len(), cnn);
    len_check("pooling_list", spec.pooling_list.len(), cnn);
    len_check("groups_list", spec.groups_list.len(), cnn);
    len_check("CNN_normalization_list", spec.cnn_normalization_list.len(), cnn);
    if let Some(s) = &spec.stride_list {
        len_check("stride_list", s.len(), cnn);
    }
    len_check("neurons_list", spec.neurons_list.len(), spec.layers_ff);
    len_check("activation_list", spec.activation_list.len(), total);
    len_check("dropout_list", spec.dropout_list.len(), total);
    if spec.bias_list.len() < total {
        out.push(Violation::new(
            "bias_list length",
            None,
            format!("expected at least {total} entries, found {}", spec.bias_list.len()),
        ));
    }

    for (i, pair) in spec.filters_list.windows(2).enumerate() {
        if pair[0].1 != pair[1].0 {
            out.push(Violation::new(
                "filters_list",
                Some(i + 1),
                format!("channel chain {}≠{}", pair[0].1, pair[1].0),
            ));
        }
    }
    for (i, &(cin, cout)) in spec.filters_list.iter().enumerate() {
        if cin == 0 || cout == 0 {
            out.push(Violation::new("filters_list", Some(i), "channel counts must be positive"));
        }
        if let Some(&g) = spec.groups_list.get(i) {
            if g == 0 || cin % g != 0 || cout % g != 0 {
                out.push(Violation::new(
                    "groups_list",
                    Some(i),
                    format!("groups {g} must divide in_channels {cin} and out_channels {cout}"),
                ));
            }
        }
    }
    for (i, &(kh, kw)) in spec.kernel_list.iter().enumerate() {
        if kh == 0 || kw == 0 {
            out.push(Violation::new("kernel_list", Some(i), "kernel dimensions must be positive"));
        }
    }
    if let Some(s) = &spec.stride_list {
        for (i, &(sh, sw)) in s.iter().enumerate() {
            if sh == 0 || sw == 0 {
                out.push(Violation::new("stride_list", Some(i), "strides must be positive"));
            }
        }
    }
    for (i, p) in spec.pooling_list.iter().enumerate() {
        if let Some(p) = p {
            if PoolKind::from_code(p.code).is_none() {
                out.push(Violation::new("pooling_list", Some(i), format!("unknown pooling code {}", p.code)));
            }
            if p.kernel.0 == 0 || p.kernel.1 == 0 {
                out.push(Violation::new("pooling_list", Some(i), "pooling window must be positive"));
            }
        }
    }
    for (i, &code) in spec.activation_list.iter().enumerate() {
        if ActivationKind::from_code(code).is_none() {
            out.push(Violation::new("activation_list", Some(i), format!("unknown activation code {code}")));
        }
    }
    for (i, d) in spec.dropout_list.iter().enumerate() {
        if let Some(p) = d {
            if !(0.0..1.0).contains(p) {
                out.push(Violation::new("dropout_list", Some(i), format!("probability {p} outside [0, 1)")));
            }
        }
    }
    for (i, &n) in spec.neurons_list.iter().enumerate() {
        if n == 0 {
            out.push(Violation::new("neurons_list", Some(cnn + i), "layer width must be positive"));
        }
    }

    if out.is_empty() {
        shape_violations(spec, &mut out);
    }
    out
}

/// Walks the convolutional shape chain once the lists are consistent.
fn shape_violations(spec: &ModelSpec, out: &mut Vec<Violation>) {
    let (mut h, mut w) = (spec.h, spec.w);
    for i in 0..spec.layers_cnn {
        let (kh, kw) = spec.kernel_list[i];
        let (ph, pw) = spec.padding_list[i];
        let (sh, sw) = spec.stride(i);
        match (conv_output_dim(h, kh, ph, sh), conv_output_dim(w, kw, pw, sw)) {
            (Some(oh), Some(ow)) => {
                h = oh;
                w = ow;
            }
            _ => {
                out.push(Violation::new(
                    "kernel_list",
                    Some(i),
                    format!("kernel ({kh}, {kw}) does not fit the padded input ({}, {})", h + 2 * ph, w + 2 * pw),
                ));
                return;
            }
        }
        if let Some(p) = spec.pooling_list[i] {
            if p.kernel.0 > h || p.kernel.1 > w {
                out.push(Violation::new(
                    "pooling_list",
                    Some(i),
                    format!("pooling window {:?} larger than feature map ({h}, {w})", p.kernel),
                ));
                return;
            }
            h /= p.kernel.0;
            w /= p.kernel.1;
        }
    }
}
