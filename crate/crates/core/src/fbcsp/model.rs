use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;
use rayon::prelude::*;

use super::covariance::trial_covariance;
use super::csp::{csp_features, csp_fit, CspModel};
use super::lda::{lda_fit, lda_posterior, Lda};
use super::mi::mibif_select;
use crate::dataio::TrialSet;
use crate::error::{Error, FormatError, Result};
use crate::signal::{default_bands, filtfilt, make_filter_bank, FilterBank};

pub const MODEL_MAGIC: [u8; 4] = *b"FBCS";
const MODEL_VERSION: u32 = 1;

/// Every constant of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct FbcspConfig {
    pub bands: Vec<(f64, f64)>,
    pub order: usize,
    /// CSP filter pairs per band (`m`).
    pub pairs: usize,
    /// Features picked by mutual information before pair completion.
    pub k: usize,
    pub n_classes: usize,
}

impl Default for FbcspConfig {
    fn default() -> Self {
        Self { bands: default_bands(), order: 3, pairs: 2, k: 4, n_classes: 4 }
    }
}

impl FbcspConfig {
    pub fn n_features(&self) -> usize {
        self.bands.len() * 2 * self.pairs
    }
}

/// One binary (class vs. rest) classifier over shared band covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct FbcspHead {
    pub positive: u8,
    pub csp: Vec<CspModel>,
    pub selected: Vec<usize>,
    pub lda: Lda,
}

impl FbcspHead {
    /// All `bands * 2m` log-variance features, band-major.
    pub fn features(&self, covs: &[DMatrix<f64>]) -> Vec<f64> {
        self.csp.iter().zip(covs).flat_map(|(m, c)| csp_features(m, c)).collect()
    }

    /// Posterior of the positive class.
    pub fn posterior(&self, covs: &[DMatrix<f64>]) -> f64 {
        let all = self.features(covs);
        let x: Vec<f64> = self.selected.iter().map(|&i| all[i]).collect();
        lda_posterior(&self.lda, &x)[1]
    }
}

/// Filters every channel of every trial through each band and returns the
/// normalized covariances, indexed `[trial][band]`.
pub fn band_covariances(set: &TrialSet, bank: &FilterBank) -> Result<Vec<Vec<DMatrix<f64>>>> {
    (0..set.n_trials()).into_par_iter().map(|i| trial_band_covariances(&set.trial_f64(i), set.n_channels(), bank)).collect()
}

fn trial_band_covariances(trial: &[f64], channels: usize, bank: &FilterBank) -> Result<Vec<DMatrix<f64>>> {
    let t = trial.len() / channels;
    bank.filters
        .iter()
        .map(|f| {
            let mut filtered = Vec::with_capacity(trial.len());
            for ch in trial.chunks_exact(t) {
                filtered.extend(filtfilt(f, ch)?);
            }
            trial_covariance(&filtered, channels)
        })
        .collect()
}

fn mean_cov(covs: &[Vec<DMatrix<f64>>], pick: impl Fn(usize) -> bool, band: usize) -> DMatrix<f64> {
    let mut n = 0usize;
    let mut acc: Option<DMatrix<f64>> = None;
    for (_, c) in covs.iter().enumerate().filter(|(i, _)| pick(*i)) {
        n += 1;
        acc = Some(match acc {
            Some(a) => a + &c[band],
            None => c[band].clone(),
        });
    }
    acc.map(|a| a / n as f64).expect("caller checked class sizes")
}

fn fit_head(covs: &[Vec<DMatrix<f64>>], labels: &[u8], positive: u8, cfg: &FbcspConfig) -> Result<FbcspHead> {
    let is_pos: Vec<bool> = labels.iter().map(|&l| l == positive).collect();
    let n_pos = is_pos.iter().filter(|&&p| p).count();
    if n_pos < 2 || labels.len() - n_pos < 2 {
        return Err(Error::invalid(format!(
            "class {positive} vs rest needs at least 2 trials on each side, got {n_pos} and {}",
            labels.len() - n_pos
        )));
    }
    let csp = (0..cfg.bands.len())
        .map(|b| {
            let c_pos = mean_cov(covs, |i| is_pos[i], b);
            let c_neg = mean_cov(covs, |i| !is_pos[i], b);
            csp_fit(&c_pos, &c_neg, cfg.pairs)
        })
        .collect::<Result<Vec<_>>>()?;
    let features: Vec<Vec<f64>> =
        covs.iter().map(|c| csp.iter().zip(c).flat_map(|(m, cv)| csp_features(m, cv)).collect()).collect();
    let selected = mibif_select(&features, &is_pos, cfg.k, cfg.pairs);
    let chosen: Vec<Vec<f64>> = features.iter().map(|f| selected.iter().map(|&i| f[i]).collect()).collect();
    let lda = lda_fit(&chosen, &is_pos)?;
    Ok(FbcspHead { positive, csp, selected, lda })
}

fn check_config(cfg: &FbcspConfig, set: &TrialSet) -> Result<FilterBank> {
    if cfg.k == 0 || cfg.k > cfg.n_features() {
        return Err(Error::invalid(format!("k = {} must lie in 1..={}", cfg.k, cfg.n_features())));
    }
    if 2 * cfg.pairs > set.n_channels() || cfg.pairs == 0 {
        return Err(Error::invalid(format!("{} CSP pairs do not fit {} channels", cfg.pairs, set.n_channels())));
    }
    make_filter_bank(&cfg.bands, cfg.order, set.fs)
}

/// A single class-vs-rest FBCSP classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFbcsp {
    pub bank: FilterBank,
    pub head: FbcspHead,
}

impl BinaryFbcsp {
    pub fn posterior(&self, trial: &[f64], channels: usize) -> Result<f64> {
        Ok(self.head.posterior(&trial_band_covariances(trial, channels, &self.bank)?))
    }
}

/// Fits one head separating `positive_class` from all other trials.
pub fn fbcsp_fit(set: &TrialSet, positive_class: u8, cfg: &FbcspConfig) -> Result<BinaryFbcsp> {
    let bank = check_config(cfg, set)?;
    let covs = band_covariances(set, &bank)?;
    let head = fit_head(&covs, &set.labels, positive_class, cfg)?;
    Ok(BinaryFbcsp { bank, head })
}

/// One-vs-rest FBCSP over `n_classes` classes.
#[derive(Debug, Clone, PartialEq)]
pub struct FbcspModel {
    pub config: FbcspConfig,
    pub fs: f64,
    pub n_channels: usize,
    pub bank: FilterBank,
    pub heads: Vec<FbcspHead>,
}

pub fn ovr_fit(set: &TrialSet, cfg: &FbcspConfig) -> Result<FbcspModel> {
    let bank = check_config(cfg, set)?;
    for class in 0..cfg.n_classes as u8 {
        if !set.labels.contains(&class) {
            return Err(Error::invalid(format!("class {class} is missing from the training set")));
        }
    }
    if let Some(&l) = set.labels.iter().find(|&&l| l as usize >= cfg.n_classes) {
        return Err(Error::invalid(format!("label {l} exceeds the configured {} classes", cfg.n_classes)));
    }
    let covs = band_covariances(set, &bank)?;
    let heads = (0..cfg.n_classes as u8)
        .into_par_iter()
        .map(|c| fit_head(&covs, &set.labels, c, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(FbcspModel { config: cfg.clone(), fs: set.fs, n_channels: set.n_channels(), bank, heads })
}

/// Label whose head reports the highest positive posterior.
pub fn ovr_predict(model: &FbcspModel, trial: &[f64]) -> Result<u8> {
    let covs = trial_band_covariances(trial, model.n_channels, &model.bank)?;
    Ok(argmax_head(model, &covs))
}

fn argmax_head(model: &FbcspModel, covs: &[DMatrix<f64>]) -> u8 {
    model
        .heads
        .iter()
        .map(|h| (h.positive, h.posterior(covs)))
        .fold((0u8, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
        .0
}

impl FbcspModel {
    pub fn predict(&self, set: &TrialSet) -> Result<Vec<u8>> {
        if set.n_channels() != self.n_channels || (set.fs - self.fs).abs() > 1e-9 {
            return Err(Error::invalid(format!(
                "model expects {} channels at {} Hz, got {} at {}",
                self.n_channels,
                self.fs,
                set.n_channels(),
                set.fs
            )));
        }
        let covs = band_covariances(set, &self.bank)?;
        Ok(covs.iter().map(|c| argmax_head(self, c)).collect())
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        let c = &self.config;
        w.write_all(&MODEL_MAGIC)?;
        w.write_u32::<LittleEndian>(MODEL_VERSION)?;
        w.write_f64::<LittleEndian>(self.fs)?;
        for v in [self.n_channels, c.order, c.pairs, c.k, c.n_classes, c.bands.len()] {
            w.write_u32::<LittleEndian>(v as u32)?;
        }
        for &(lo, hi) in &c.bands {
            w.write_f64::<LittleEndian>(lo)?;
            w.write_f64::<LittleEndian>(hi)?;
        }
        w.write_u32::<LittleEndian>(self.heads.len() as u32)?;
        for h in &self.heads {
            w.write_u8(h.positive)?;
            for m in &h.csp {
                for r in 0..m.w.nrows() {
                    for v in m.w.row(r).iter() {
                        w.write_f64::<LittleEndian>(*v)?;
                    }
                }
                for &l in &m.eigenvalues {
                    w.write_f64::<LittleEndian>(l)?;
                }
            }
            w.write_u32::<LittleEndian>(h.selected.len() as u32)?;
            for &s in &h.selected {
                w.write_u32::<LittleEndian>(s as u32)?;
            }
            for &v in &h.lda.weights {
                w.write_f64::<LittleEndian>(v)?;
            }
            w.write_f64::<LittleEndian>(h.lda.bias)?;
            w.write_f64::<LittleEndian>(h.lda.priors[0])?;
            w.write_f64::<LittleEndian>(h.lda.priors[1])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self> {
        let eof = |e: std::io::Error| -> Error {
            match e.kind() {
                std::io::ErrorKind::UnexpectedEof => FormatError::Truncated("FBCSP model".into()).into(),
                _ => Error::Io(e),
            }
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(eof)?;
        if magic != MODEL_MAGIC {
            return Err(FormatError::BadMagic { expected: MODEL_MAGIC, found: magic }.into());
        }
        let version = r.read_u32::<LittleEndian>().map_err(eof)?;
        if version != MODEL_VERSION {
            return Err(FormatError::UnsupportedVersion(version).into());
        }
        let fs = r.read_f64::<LittleEndian>().map_err(eof)?;
        let mut u = [0usize; 6];
        for v in &mut u {
            *v = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
        }
        let [n_channels, order, pairs, k, n_classes, n_bands] = u;
        if n_bands > 1024 || n_channels > 4096 || 2 * pairs > n_channels || n_classes > 256 {
            return Err(FormatError::Malformed("implausible model dimensions".into()).into());
        }
        let mut bands = Vec::with_capacity(n_bands);
        for _ in 0..n_bands {
            bands.push((r.read_f64::<LittleEndian>().map_err(eof)?, r.read_f64::<LittleEndian>().map_err(eof)?));
        }
        let config = FbcspConfig { bands, order, pairs, k, n_classes };
        let n_heads = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
        if n_heads > 256 {
            return Err(FormatError::Malformed("implausible head count".into()).into());
        }
        let mut heads = Vec::with_capacity(n_heads);
        for _ in 0..n_heads {
            let positive = r.read_u8().map_err(eof)?;
            let mut csp = Vec::with_capacity(n_bands);
            for _ in 0..n_bands {
                let mut vals = vec![0.0; 2 * pairs * n_channels];
                r.read_f64_into::<LittleEndian>(&mut vals).map_err(eof)?;
                let mut eigenvalues = vec![0.0; 2 * pairs];
                r.read_f64_into::<LittleEndian>(&mut eigenvalues).map_err(eof)?;
                csp.push(CspModel { w: DMatrix::from_row_slice(2 * pairs, n_channels, &vals), eigenvalues });
            }
            let n_sel = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
            if n_sel > config.n_features() {
                return Err(FormatError::Malformed("selected more features than exist".into()).into());
            }
            let mut selected = Vec::with_capacity(n_sel);
            for _ in 0..n_sel {
                let s = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
                if s >= config.n_features() {
                    return Err(FormatError::Malformed(format!("feature index {s} out of range")).into());
                }
                selected.push(s);
            }
            let mut weights = vec![0.0; n_sel];
            r.read_f64_into::<LittleEndian>(&mut weights).map_err(eof)?;
            let bias = r.read_f64::<LittleEndian>().map_err(eof)?;
            let priors = [r.read_f64::<LittleEndian>().map_err(eof)?, r.read_f64::<LittleEndian>().map_err(eof)?];
            heads.push(FbcspHead { positive, csp, selected, lda: Lda { weights, bias, priors } });
        }
        let bank = make_filter_bank(&config.bands, config.order, fs)?;
        Ok(Self { config, fs, n_channels, bank, heads })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
