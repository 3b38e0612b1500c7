//! Import of pre-exported trials: a manifest CSV with columns
//! `path,label,subject,session` and one CSV matrix per trial holding one
//! row per channel.

use std::path::Path;

use super::trialset::{Session, TrialSet};
use crate::error::{Error, FormatError, Result};
use crate::nn::Tensor;

fn malformed(msg: String) -> Error {
    FormatError::Malformed(msg).into()
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => malformed(format!("{other:?}")),
    }
}

fn parse_session(s: &str) -> Option<Session> {
    match s.trim().to_ascii_lowercase().as_str() {
        "0" | "train" | "t" => Some(Session::Train),
        "1" | "test" | "e" | "eval" => Some(Session::Test),
        _ => None,
    }
}

fn read_matrix(path: &Path) -> Result<Vec<Vec<f32>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_path(path).map_err(csv_err)?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            rec.iter()
                .map(|v| v.parse::<f32>().map_err(|_| malformed(format!("{}: bad sample {v:?}", path.display()))))
                .collect()
        })
        .collect()
}

/// Builds a [`TrialSet`] from a manifest; trial paths are relative to the
/// manifest's directory. Session accepts `0`/`train`/`T` or `1`/`test`/`E`.
pub fn convert_csv(manifest: impl AsRef<Path>, fs: f64) -> Result<TrialSet> {
    let manifest = manifest.as_ref();
    let base = manifest.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(manifest).map_err(csv_err)?;
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| malformed(format!("manifest lacks a {name:?} column")))
    };
    let (cp, cl, cs, ce) = (col("path")?, col("label")?, col("subject")?, col("session")?);

    let (mut data, mut labels, mut subjects, mut sessions) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut dims: Option<(usize, usize)> = None;
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let field = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize, what: &str| {
            field(i).parse::<u8>().map_err(|_| malformed(format!("manifest row {}: bad {what} {:?}", row + 1, field(i))))
        };
        labels.push(num(cl, "label")?);
        subjects.push(num(cs, "subject")?);
        sessions.push(
            parse_session(field(ce))
                .ok_or_else(|| malformed(format!("manifest row {}: bad session {:?}", row + 1, field(ce))))?,
        );
        let m = read_matrix(&base.join(field(cp)))?;
        let shape = (m.len(), m.first().map_or(0, Vec::len));
        if shape.0 == 0 || shape.1 == 0 || m.iter().any(|r| r.len() != shape.1) {
            return Err(malformed(format!("{}: empty or ragged matrix", field(cp))));
        }
        match dims {
            None => dims = Some(shape),
            Some(d) if d != shape => {
                return Err(malformed(format!("{}: shape {shape:?} differs from {d:?}", field(cp))));
            }
            _ => {}
        }
        data.extend(m.into_iter().flatten());
    }
    let (c, t) = dims.ok_or_else(|| malformed("manifest lists no trials".into()))?;
    TrialSet::new(Tensor::from_vec(&[labels.len(), c, t], data)?, labels, subjects, sessions, fs)
}

#[cfg(test)]
mod tests {
    use std::fs;

    use super::*;

    #[test]
    fn converts_manifest() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "1,2,3\n4,5,6\n").unwrap();
        fs::write(dir.path().join("b.csv"), "0.5, -1, 2e-3\n7,8,9\n").unwrap();
        fs::write(dir.path().join("m.csv"), "path,label,subject,session\na.csv,2,1,train\nb.csv,0,3,1\n").unwrap();
        let s = convert_csv(dir.path().join("m.csv"), 250.0).unwrap();
        assert_eq!((s.n_trials(), s.n_channels(), s.n_samples()), (2, 2, 3));
        assert_eq!(s.labels, vec![2, 0]);
        assert_eq!(s.subjects, vec![1, 3]);
        assert_eq!(s.sessions, vec![Session::Train, Session::Test]);
        assert_eq!(s.channel(1, 0), &[0.5, -1.0, 2e-3]);
    }

    #[test]
    fn rejects_mismatched_shapes_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "1,2,3\n4,5,6\n").unwrap();
        fs::write(dir.path().join("b.csv"), "1,2\n3,4\n").unwrap();
        fs::write(dir.path().join("m.csv"), "path,label,subject,session\na.csv,0,1,0\nb.csv,1,1,0\n").unwrap();
        assert!(convert_csv(dir.path().join("m.csv"), 250.0).is_err());
        fs::write(dir.path().join("m2.csv"), "path,label,subject,session\na.csv,9,1,0\n").unwrap();
        assert!(convert_csv(dir.path().join("m2.csv"), 250.0).is_err());
        fs::write(dir.path().join("m3.csv"), "path,label,subject\na.csv,0,1\n").unwrap();
        assert!(convert_csv(dir.path().join("m3.csv"), 250.0).is_err());
    }
}
