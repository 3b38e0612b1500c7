//! Flat `key = value` run configuration. Later sources override earlier
//! ones: built-in defaults, then a config file, then command-line flags.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context as _};
use motornet::evaluation::{LosoTest, Scheme};

/// Environment variable naming the directory relative data paths resolve against.
pub const DATA_DIR_ENV: &str = "MOTORNET_DATA_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MethodName {
    Eegnet,
    Fbcsp,
}

impl FromStr for MethodName {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "eegnet" => Ok(MethodName::Eegnet),
            "fbcsp" => Ok(MethodName::Fbcsp),
            _ => bail!("unknown method {s:?} (expected eegnet or fbcsp)"),
        }
    }
}

impl MethodName {
    fn as_str(self) -> &'static str {
        match self {
            MethodName::Eegnet => "eegnet",
            MethodName::Fbcsp => "fbcsp",
        }
    }
}

/// Fully resolved settings of one `run`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub method: MethodName,
    /// `None` selects the bundled EEGNet specification.
    pub spec: Option<PathBuf>,
    pub scheme: Scheme,
    pub loso_test: LosoTest,
    pub window: Option<(f64, f64)>,
    pub bandpass: Option<(f64, f64)>,
    pub filter_order: usize,
    pub ema: Option<f64>,
    pub resample: Option<f64>,
    pub epochs: usize,
    pub batch_size: usize,
    pub reps: usize,
    pub seed: u64,
    pub csp_pairs: usize,
    pub csp_features: usize,
    pub out: PathBuf,
    /// 0 lets the thread pool pick.
    pub threads: usize,
}

pub const KEYS: [&str; 18] = [
    "data",
    "method",
    "spec",
    "scheme",
    "loso_test",
    "window",
    "bandpass",
    "filter_order",
    "ema",
    "resample",
    "epochs",
    "batch_size",
    "reps",
    "seed",
    "csp_pairs",
    "csp_features",
    "out",
    "threads",
];

fn defaults() -> BTreeMap<String, String> {
    [
        ("method", "eegnet"),
        ("spec", "builtin"),
        ("scheme", "single"),
        ("loso_test", "all"),
        ("window", "2,6"),
        ("bandpass", "none"),
        ("filter_order", "3"),
        ("ema", "none"),
        ("resample", "128"),
        ("epochs", "500"),
        ("batch_size", "32"),
        ("reps", "10"),
        ("seed", "1"),
        ("csp_pairs", "2"),
        ("csp_features", "4"),
        ("out", "results"),
        ("threads", "0"),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v.to_string()))
    .collect()
}

/// Canonical key spelling: lower case with underscores.
pub fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_pairs(text: &str) -> anyhow::Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
        let key = normalize_key(k);
        if !KEYS.contains(&key.as_str()) {
            bail!("line {}: unknown key {key:?}", i + 1);
        }
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

fn disabled(v: &str) -> bool {
    matches!(v.to_ascii_lowercase().as_str(), "none" | "off" | "-")
}

fn number<T: FromStr>(key: &str, v: &str) -> anyhow::Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    v.parse().with_context(|| format!("{key}: cannot parse {v:?}"))
}

fn optional<T: FromStr>(key: &str, v: &str) -> anyhow::Result<Option<T>>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    if disabled(v) {
        Ok(None)
    } else {
        number(key, v).map(Some)
    }
}

fn pair(key: &str, v: &str) -> anyhow::Result<Option<(f64, f64)>> {
    if disabled(v) {
        return Ok(None);
    }
    let (a, b) = v.split_once(',').ok_or_else(|| anyhow!("{key}: expected two comma-separated numbers, got {v:?}"))?;
    Ok(Some((number(key, a.trim())?, number(key, b.trim())?)))
}

fn resolve_data(path: &str) -> PathBuf {
    let p = PathBuf::from(path);
    match std::env::var_os(DATA_DIR_ENV) {
        Some(dir) if p.is_relative() => Path::new(&dir).join(p),
        _ => p,
    }
}

impl RunConfig {
    /// Resolves defaults, then `file`, then `flags`. Checks values and that
    /// every input path exists; touches nothing on disk.
    pub fn resolve(file: Option<&Path>, flags: BTreeMap<String, String>) -> anyhow::Result<Self> {
        let mut map = defaults();
        if let Some(f) = file {
            let text = std::fs::read_to_string(f).with_context(|| format!("reading config {}", f.display()))?;
            map.extend(parse_pairs(&text).with_context(|| format!("in {}", f.display()))?);
        }
        map.extend(flags);
        let get = |k: &str| map.get(k).map(String::as_str).ok_or_else(|| anyhow!("missing required key {k:?}"));

        let data = resolve_data(get("data")?);
        if !data.is_file() {
            bail!("data file {} does not exist", data.display());
        }
        let spec = match get("spec")? {
            "builtin" | "eegnet" => None,
            p => {
                let p = PathBuf::from(p);
                if !p.is_file() {
                    bail!("spec file {} does not exist", p.display());
                }
                Some(p)
            }
        };
        let loso_test = match get("loso_test")? {
            "all" => LosoTest::AllSessions,
            "test" | "test_session" => LosoTest::TestSession,
            v => bail!("loso_test: expected all or test, got {v:?}"),
        };
        let cfg = RunConfig {
            data,
            method: get("method")?.parse()?,
            spec,
            scheme: get("scheme")?.parse().map_err(|e| anyhow!("scheme: {e}"))?,
            loso_test,
            window: pair("window", get("window")?)?,
            bandpass: pair("bandpass", get("bandpass")?)?,
            filter_order: number("filter_order", get("filter_order")?)?,
            ema: optional("ema", get("ema")?)?,
            resample: optional("resample", get("resample")?)?,
            epochs: number("epochs", get("epochs")?)?,
            batch_size: number("batch_size", get("batch_size")?)?,
            reps: number("reps", get("reps")?)?,
            seed: number("seed", get("seed")?)?,
            csp_pairs: number("csp_pairs", get("csp_pairs")?)?,
            csp_features: number("csp_features", get("csp_features")?)?,
            out: PathBuf::from(get("out")?),
            threads: number("threads", get("threads")?)?,
        };
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> anyhow::Result<()> {
        if self.reps == 0 {
            bail!("reps must be positive");
        }
        if self.seed == 0 {
            bail!("seed must be positive");
        }
        if self.batch_size == 0 || self.filter_order == 0 || self.csp_pairs == 0 {
            bail!("batch_size, filter_order and csp_pairs must be positive");
        }
        if let Some((a, b)) = self.window {
            if !(0.0 <= a && a < b) {
                bail!("window: need 0 <= start < end, got {a},{b}");
            }
        }
        if let Some((lo, hi)) = self.bandpass {
            if !(0.0 < lo && lo < hi) {
                bail!("bandpass: need 0 < low < high, got {lo},{hi}");
            }
        }
        if let Some(d) = self.ema {
            if !(0.0 < d && d < 1.0) {
                bail!("ema: decay must lie in (0, 1), got {d}");
            }
        }
        if let Some(r) = self.resample {
            if !(r > 0.0 && r.is_finite()) {
                bail!("resample: rate must be positive, got {r}");
            }
        }
        Ok(())
    }

    /// Every resolved setting in config-file form; feeding it back to `run
    /// --config` repeats the run.
    pub fn manifest(&self) -> String {
        let pair = |p: Option<(f64, f64)>| p.map_or("none".to_string(), |(a, b)| format!("{a},{b}"));
        let opt = |v: Option<f64>| v.map_or("none".to_string(), |v| v.to_string());
        let abs = |p: &Path| std::path::absolute(p).unwrap_or_else(|_| p.to_path_buf());
        let mut s = String::from("# motornet run manifest\n");
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("data", abs(&self.data).display().to_string());
        put("method", self.method.as_str().into());
        put("spec", self.spec.as_deref().map_or("builtin".into(), |p| abs(p).display().to_string()));
        put("scheme", self.scheme.to_string());
        put("loso_test", if self.loso_test == LosoTest::AllSessions { "all" } else { "test" }.into());
        put("window", pair(self.window));
        put("bandpass", pair(self.bandpass));
        put("filter_order", self.filter_order.to_string());
        put("ema", opt(self.ema));
        put("resample", opt(self.resample));
        put("epochs", self.epochs.to_string());
        put("batch_size", self.batch_size.to_string());
        put("reps", self.reps.to_string());
        put("seed", self.seed.to_string());
        put("csp_pairs", self.csp_pairs.to_string());
        put("csp_features", self.csp_features.to_string());
        put("out", abs(&self.out).display().to_string());
        put("threads", self.threads.to_string());
        s
    }
}
