use std::path::Path;

use super::format::{SpecDocument, SpecValue};
use crate::error::{Error, Result};

/// The reference EEGNet specification in the on-disk format.
pub const EEGNET_SPEC: &str = include_str!("../../specs/eegnet.spec");

/// Optional pooling stage of a convolutional block: registry code and window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolingEntry {
    pub code: i64,
    pub kernel: (usize, usize),
}

/// Declarative description of a sequential CNN / feed-forward network.
///
/// Per-layer lists are indexed by convolutional block; the shared
/// activation, bias and dropout lists run over the convolutional blocks
/// first and the feed-forward layers after them. `None` entries stand for
/// the `-1` "absent" sentinel.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub h: usize,
    pub w: usize,
    pub layers_cnn: usize,
    pub kernel_list: Vec<(usize, usize)>,
    pub filters_list: Vec<(usize, usize)>,
    /// `None` when given as `-`: unit strides everywhere.
    pub stride_list: Option<Vec<(usize, usize)>>,
    pub padding_list: Vec<(usize, usize)>,
    pub pooling_list: Vec<Option<PoolingEntry>>,
    pub groups_list: Vec<usize>,
    pub cnn_normalization_list: Vec<bool>,
    pub layers_ff: usize,
    pub neurons_list: Vec<usize>,
    pub activation_list: Vec<i64>,
    pub bias_list: Vec<bool>,
    pub dropout_list: Vec<Option<f64>>,
}

const KEYS: [&str; 15] = [
    "h",
    "w",
    "layers_cnn",
    "kernel_list",
    "filters_list",
    "stride_list",
    "padding_list",
    "pooling_list",
    "groups_list",
    "CNN_normalization_list",
    "layers_ff",
    "neurons_list",
    "activation_list",
    "bias_list",
    "dropout_list",
];

fn perr(line: usize, key: &str, what: &str) -> Error {
    Error::SpecParse { line, message: format!("{key}: {what}") }
}

fn as_count(v: &SpecValue, line: usize, key: &str) -> Result<usize> {
    match v {
        SpecValue::Int(i) if *i >= 0 => Ok(*i as usize),
        _ => Err(perr(line, key, "expected a non-negative integer")),
    }
}

fn as_pair(v: &SpecValue, line: usize, key: &str) -> Result<(usize, usize)> {
    match v.items() {
        Some([a, b]) => Ok((as_count(a, line, key)?, as_count(b, line, key)?)),
        _ => Err(perr(line, key, "expected a pair like (a, b)")),
    }
}

fn as_list<'a>(v: &'a SpecValue, line: usize, key: &str) -> Result<&'a [SpecValue]> {
    match v {
        SpecValue::List(items) => Ok(items),
        _ => Err(perr(line, key, "expected a [list]")),
    }
}

fn as_bool(v: &SpecValue, line: usize, key: &str) -> Result<bool> {
    match v {
        SpecValue::Bool(b) => Ok(*b),
        _ => Err(perr(line, key, "expected True or False")),
    }
}

impl ModelSpec {
    /// The EEGNet configuration (22 × 512 input, four convolutional blocks).
    pub fn eegnet() -> Self {
        Self::parse(EEGNET_SPEC).expect("bundled spec parses")
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_document(&SpecDocument::parse(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn from_document(doc: &SpecDocument) -> Result<Self> {
        for (k, _, line) in &doc.entries {
            if !KEYS.contains(&k.as_str()) {
                return Err(perr(*line, k, "unknown key"));
            }
        }
        let scalar = |key: &str| -> Result<usize> {
            let (v, line) = doc.get(key).ok_or_else(|| perr(0, key, "missing required key"))?;
            as_count(v, line, key)
        };
        let list = |key: &str| -> Result<(Vec<SpecValue>, usize)> {
            match doc.get(key) {
                Some((v, line)) => Ok((as_list(v, line, key)?.to_vec(), line)),
                None => Ok((Vec::new(), 0)),
            }
        };
        let pairs = |key: &str| -> Result<Vec<(usize, usize)>> {
            let (items, line) = list(key)?;
            items.iter().map(|v| as_pair(v, line, key)).collect()
        };

        let stride_list = match doc.get("stride_list") {
            None | Some((SpecValue::Unset, _)) => None,
            Some(_) => Some(pairs("stride_list")?),
        };

        let (items, line) = list("pooling_list")?;
        let pooling_list = items
            .iter()
            .map(|v| match v {
                SpecValue::Int(-1) => Ok(None),
                _ => match v.items() {
                    Some([SpecValue::Int(code), k]) => {
                        Ok(Some(PoolingEntry { code: *code, kernel: as_pair(k, line, "pooling_list")? }))
                    }
                    _ => Err(perr(line, "pooling_list", "expected -1 or [code, (kh, kw)]")),
                },
            })
            .collect::<Result<Vec<_>>>()?;

        let (items, line) = list("groups_list")?;
        let groups_list = items.iter().map(|v| as_count(v, line, "groups_list")).collect::<Result<_>>()?;
        let (items, line) = list("CNN_normalization_list")?;
        let cnn_normalization_list =
            items.iter().map(|v| as_bool(v, line, "CNN_normalization_list")).collect::<Result<_>>()?;
        let (items, line) = list("neurons_list")?;
        let neurons_list = items.iter().map(|v| as_count(v, line, "neurons_list")).collect::<Result<_>>()?;
        let (items, line) = list("activation_list")?;
        let activation_list = items
            .iter()
            .map(|v| match v {
                SpecValue::Int(c) => Ok(*c),
                _ => Err(perr(line, "activation_list", "expected integer codes")),
            })
            .collect::<Result<_>>()?;
        let (items, line) = list("bias_list")?;
        let bias_list = items.iter().map(|v| as_bool(v, line, "bias_list")).collect::<Result<_>>()?;
        let (items, line) = list("dropout_list")?;
        let dropout_list = items
            .iter()
            .map(|v| match v {
                SpecValue::Int(-1) => Ok(None),
                SpecValue::Int(i) => Ok(Some(*i as f64)),
                SpecValue::Real(p) => Ok(Some(*p)),
                _ => Err(perr(line, "dropout_list", "expected -1 or a probability")),
            })
            .collect::<Result<_>>()?;

        Ok(Self {
            h: scalar("h")?,
            w: scalar("w")?,
            layers_cnn: scalar("layers_cnn")?,
            kernel_list: pairs("kernel_list")?,
            filters_list: pairs("filters_list")?,
            stride_list,
            padding_list: pairs("padding_list")?,
            pooling_list,
            groups_list,
            cnn_normalization_list,
            layers_ff: scalar("layers_ff")?,
            neurons_list,
            activation_list,
            bias_list,
            dropout_list,
        })
    }

    /// Canonical document; pairs are written as tuples.
    pub fn to_document(&self) -> SpecDocument {
        let int = |v: usize| SpecValue::Int(v as i64);
        let pair = |p: &(usize, usize)| SpecValue::Tuple(vec![int(p.0), int(p.1)]);
        let pairs = |v: &[(usize, usize)]| SpecValue::List(v.iter().map(pair).collect());
        let mut doc = SpecDocument::default();
        doc.push("h", int(self.h));
        doc.push("w", int(self.w));
        doc.push("layers_cnn", int(self.layers_cnn));
        doc.push("kernel_list", pairs(&self.kernel_list));
        doc.push("filters_list", pairs(&self.filters_list));
        doc.push("stride_list", self.stride_list.as_deref().map_or(SpecValue::Unset, pairs));
        doc.push("padding_list", pairs(&self.padding_list));
        doc.push(
            "pooling_list",
            SpecValue::List(
                self.pooling_list
                    .iter()
                    .map(|p| match p {
                        None => SpecValue::Int(-1),
                        Some(e) => SpecValue::List(vec![SpecValue::Int(e.code), pair(&e.kernel)]),
                    })
                    .collect(),
            ),
        );
        doc.push("groups_list", SpecValue::List(self.groups_list.iter().map(|&g| int(g)).collect()));
        doc.push(
            "CNN_normalization_list",
            SpecValue::List(self.cnn_normalization_list.iter().map(|&b| SpecValue::Bool(b)).collect()),
        );
        doc.push("layers_ff", int(self.layers_ff));
        doc.push("neurons_list", SpecValue::List(self.neurons_list.iter().map(|&n| int(n)).collect()));
        doc.push("activation_list", SpecValue::List(self.activation_list.iter().map(|&c| SpecValue::Int(c)).collect()));
        doc.push("bias_list", SpecValue::List(self.bias_list.iter().map(|&b| SpecValue::Bool(b)).collect()));
        doc.push(
            "dropout_list",
            SpecValue::List(
                self.dropout_list
                    .iter()
                    .map(|d| match d {
                        None => SpecValue::Int(-1),
                        Some(p) => SpecValue::Real(*p),
                    })
                    .collect(),
            ),
        );
        doc
    }

    pub fn stride(&self, i: usize) -> (usize, usize) {
        self.stride_list.as_ref().and_then(|s| s.get(i).copied()).unwrap_or((1, 1))
    }

    /// Number of output classes (width of the last dense layer).
    pub fn n_outputs(&self) -> Option<usize> {
        self.neurons_list.last().copied()
    }

    /// Same architecture adapted to another input size.
    pub fn with_input(mut self, h: usize, w: usize) -> Self {
        self.h = h;
        self.w = w;
        if let Some((kh, _)) = self.kernel_list.iter_mut().find(|(kh, _)| *kh > 1) {
            *kh = h;
        }
        self
    }

    /// Same architecture with `n` output classes.
    pub fn with_outputs(mut self, n: usize) -> Self {
        if let Some(last) = self.neurons_list.last_mut() {
            *last = n;
        }
        self
    }
}
