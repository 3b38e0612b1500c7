use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::layer::{Layer, Param};
use super::tensor::{Real, Tensor};
use super::Mode;
use crate::error::{Error, FormatError, Result};

/// Ordered stack of layers applied to inputs of a fixed per-sample shape.
#[derive(Debug, Clone)]
pub struct Model<T> {
    pub layers: Vec<Layer<T>>,
    pub mode: Mode,
    pub rng_seed: u64,
    input_shape: Vec<usize>,
    rng: ChaCha8Rng,
}

/// Copy of every trainable parameter and buffer, in layer order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSnapshot<T> {
    pub params: Vec<Tensor<T>>,
    pub buffers: Vec<Tensor<T>>,
}

const SNAPSHOT_MAGIC: [u8; 4] = *b"MNWT";
const SNAPSHOT_VERSION: u32 = 1;

impl<T: Real> ModelSnapshot<T> {
    /// Binary form: magic `MNWT`, `u32` version, then the parameter and the
    /// buffer lists, each as a `u32` count of (`u32` rank, `u32` dims, `f64`
    /// values) records. Little-endian throughout.
    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&SNAPSHOT_MAGIC)?;
        w.write_u32::<LittleEndian>(SNAPSHOT_VERSION)?;
        for list in [&self.params, &self.buffers] {
            w.write_u32::<LittleEndian>(list.len() as u32)?;
            for t in list {
                w.write_u32::<LittleEndian>(t.shape().len() as u32)?;
                for &d in t.shape() {
                    w.write_u32::<LittleEndian>(d as u32)?;
                }
                for v in t.data() {
                    w.write_f64::<LittleEndian>(v.f64())?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let eof = |e: std::io::Error| -> Error {
            match e.kind() {
                std::io::ErrorKind::UnexpectedEof => FormatError::Truncated("model weights".into()).into(),
                _ => Error::Io(e),
            }
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(eof)?;
        if magic != SNAPSHOT_MAGIC {
            return Err(FormatError::BadMagic { expected: SNAPSHOT_MAGIC, found: magic }.into());
        }
        let version = r.read_u32::<LittleEndian>().map_err(eof)?;
        if version != SNAPSHOT_VERSION {
            return Err(FormatError::UnsupportedVersion(version).into());
        }
        let mut lists = [Vec::new(), Vec::new()];
        for list in &mut lists {
            let n = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
            for _ in 0..n {
                let rank = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
                if rank > 8 {
                    return Err(FormatError::Malformed(format!("tensor rank {rank}")).into());
                }
                let mut shape = Vec::with_capacity(rank);
                for _ in 0..rank {
                    shape.push(r.read_u32::<LittleEndian>().map_err(eof)? as usize);
                }
                let len: usize = shape.iter().product();
                if len > 1 << 28 {
                    return Err(FormatError::Malformed("tensor too large".into()).into());
                }
                let mut vals = vec![0.0f64; len];
                r.read_f64_into::<LittleEndian>(&mut vals).map_err(eof)?;
                list.push(Tensor::from_vec(&shape, vals.into_iter().map(T::of).collect())?);
            }
        }
        let [params, buffers] = lists;
        Ok(Self { params, buffers })
    }
}

impl<T: Real> Model<T> {
    /// `input_shape` excludes the batch dimension. Checks that consecutive
    /// layer shapes agree.
    pub fn new(layers: Vec<Layer<T>>, input_shape: Vec<usize>, rng_seed: u64) -> Result<Self> {
        let model = Self { layers, mode: Mode::Train, rng_seed, input_shape, rng: ChaCha8Rng::seed_from_u64(rng_seed) };
        model.shape_trace()?;
        Ok(model)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    /// Batch-1 shapes after each layer, starting with the input.
    pub fn shape_trace(&self) -> Result<Vec<Vec<usize>>> {
        let mut shape: Vec<usize> = std::iter::once(1).chain(self.input_shape.iter().copied()).collect();
        let mut trace = vec![shape.clone()];
        for (i, layer) in self.layers.iter().enumerate() {
            shape = layer
                .output_shape(&shape)
                .map_err(|e| Error::Build { layer: i, message: format!("{}: {e}", layer.kind()) })?;
            trace.push(shape.clone());
        }
        Ok(trace)
    }

    pub fn output_shape(&self) -> Result<Vec<usize>> {
        Ok(self.shape_trace()?.pop().expect("trace has the input entry"))
    }

    pub fn set_mode(&mut self, mode: Mode) {
        self.mode = mode;
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    /// Accepts any `(N, ...)` tensor whose per-sample size matches the model
    /// input and reshapes it accordingly.
    pub fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let (n, per) = input.batch_dims()?;
        let want: usize = self.input_shape.iter().product();
        if per != want {
            return Err(Error::shape(format!(
                "model expects samples of shape {:?} ({want} values), got {:?}",
                self.input_shape,
                input.shape()
            )));
        }
        let shape: Vec<usize> = std::iter::once(n).chain(self.input_shape.iter().copied()).collect();
        let mut x = if input.shape() == shape.as_slice() { input.clone() } else { input.clone().reshape(&shape)? };
        for (i, layer) in self.layers.iter_mut().enumerate() {
            x = layer.forward(&x, self.mode, &mut self.rng).map_err(|e| match e {
                Error::Shape(m) => Error::Shape(format!("layer {i} ({}): {m}", layer.kind())),
                other => other,
            })?;
        }
        Ok(x)
    }

    /// Backpropagates `grad_out` through every layer, accumulating
    /// parameter gradients. Returns the input gradient if requested.
    pub fn backward(&mut self, grad_out: &Tensor<T>, need_input_grad: bool) -> Result<Option<Tensor<T>>> {
        let mut g = grad_out.clone();
        let last = self.layers.len();
        for (i, layer) in self.layers.iter_mut().enumerate().rev() {
            let need = i > 0 || need_input_grad;
            match layer.backward(&g, need)? {
                Some(next) => g = next,
                None if i == 0 => return Ok(None),
                None => return Err(Error::shape(format!("layer {i} of {last} produced no input gradient"))),
            }
        }
        Ok(need_input_grad.then_some(g))
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.param_count()).sum()
    }

    pub fn snapshot(&self) -> ModelSnapshot<T> {
        ModelSnapshot {
            params: self.params().into_iter().map(|p| p.value.clone()).collect(),
            buffers: self.layers.iter().flat_map(|l| l.buffers()).cloned().collect(),
        }
    }

    pub fn restore(&mut self, snap: &ModelSnapshot<T>) -> Result<()> {
        let mut params = self.params_mut();
        if params.len() != snap.params.len() {
            return Err(Error::invalid("snapshot does not belong to this model"));
        }
        for (p, v) in params.iter_mut().zip(&snap.params) {
            if p.value.shape() != v.shape() {
                return Err(Error::invalid("snapshot parameter shape mismatch"));
            }
            p.value = v.clone();
        }
        let mut bufs: Vec<&mut Tensor<T>> = self.layers.iter_mut().flat_map(|l| l.buffers_mut()).collect();
        if bufs.len() != snap.buffers.len() {
            return Err(Error::invalid("snapshot buffer count mismatch"));
        }
        for (b, v) in bufs.iter_mut().zip(&snap.buffers) {
            **b = v.clone();
        }
        Ok(())
    }

    /// Keeps dropout masks fixed across forward passes while set.
    pub fn freeze_dropout(&mut self, frozen: bool) {
        for l in &mut self.layers {
            if let Layer::Dropout(d) = l {
                d.frozen = frozen;
            }
        }
    }

    /// Converts every parameter and buffer to another precision.
    pub fn cast<U: Real>(&self) -> Model<U> {
        use super::layer::Flatten;
        use super::{Activation, BatchNorm2d, Conv2d, Dense, Dropout};

        fn cp<T: Real, U: Real>(p: &Param<T>) -> Param<U> {
            Param::new(p.value.cast())
        }
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Conv2d(c) => {
                    let mut n = Conv2d::<U>::new(
                        c.in_channels,
                        c.out_channels,
                        c.kernel,
                        c.geometry,
                        c.bias.is_some(),
                        &mut ChaCha8Rng::seed_from_u64(0),
                    )
                    .expect("geometry already validated");
                    n.weight = cp(&c.weight);
                    n.bias = c.bias.as_ref().map(cp);
                    Layer::Conv2d(n)
                }
                Layer::BatchNorm2d(b) => {
                    let mut n = BatchNorm2d::<U>::new(b.channels);
                    n.gamma = cp(&b.gamma);
                    n.beta = cp(&b.beta);
                    n.running_mean = b.running_mean.cast();
                    n.running_var = b.running_var.cast();
                    n.eps = b.eps;
                    n.momentum = b.momentum;
                    Layer::BatchNorm2d(n)
                }
                Layer::Activation(a) => Layer::Activation(Activation::new(a.kind)),
                Layer::Pool2d(p) => Layer::Pool2d(super::Pool2d::new(p.kind, p.kernel)),
                Layer::Dropout(d) => Layer::Dropout(Dropout::new(d.p).expect("probability already validated")),
                Layer::Dense(d) => {
                    let mut n = Dense::<U>::new(d.in_features, d.out_features, d.bias.is_some(), &mut ChaCha8Rng::seed_from_u64(0))
                        .expect("dimensions already validated");
                    n.weight = cp(&d.weight);
                    n.bias = d.bias.as_ref().map(cp);
                    Layer::Dense(n)
                }
                Layer::Flatten(_) => Layer::Flatten(Flatten::default()),
            })
            .collect();
        Model {
            layers,
            mode: self.mode,
            rng_seed: self.rng_seed,
            input_shape: self.input_shape.clone(),
            rng: ChaCha8Rng::seed_from_u64(self.rng_seed),
        }
    }
}
