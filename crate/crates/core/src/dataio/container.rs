//! The `EEGT` trial container.
//!
//! Little-endian layout: magic `EEGT`, `u32` version, `u32` n_trials,
//! `u32` n_channels, `u32` n_samples, `f32` fs, then one `u8` label, one
//! `u8` subject id and one `u8` session flag per trial (three separate
//! arrays), then `f32` samples ordered trial, channel, time.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::trialset::{Session, TrialSet, MAX_CLASSES};
use crate::error::{Error, FormatError, Result};
use crate::nn::Tensor;

pub const CONTAINER_MAGIC: [u8; 4] = *b"EEGT";
pub const CONTAINER_VERSION: u32 = 1;

fn truncated(what: &str) -> impl Fn(std::io::Error) -> Error + '_ {
    move |e| match e.kind() {
        ErrorKind::UnexpectedEof => FormatError::Truncated(format!("file ends inside {what}")).into(),
        _ => Error::Io(e),
    }
}

pub fn write_container_to(set: &TrialSet, mut w: impl Write) -> Result<()> {
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::invalid(format!("dimension {v} exceeds u32")));
    w.write_all(&CONTAINER_MAGIC)?;
    w.write_u32::<LittleEndian>(CONTAINER_VERSION)?;
    w.write_u32::<LittleEndian>(dim(set.n_trials())?)?;
    w.write_u32::<LittleEndian>(dim(set.n_channels())?)?;
    w.write_u32::<LittleEndian>(dim(set.n_samples())?)?;
    w.write_f32::<LittleEndian>(set.fs as f32)?;
    w.write_all(&set.labels)?;
    w.write_all(&set.subjects)?;
    w.write_all(&set.sessions.iter().map(|s| s.flag()).collect::<Vec<_>>())?;
    for &v in set.data().data() {
        w.write_f32::<LittleEndian>(v)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_container_from(mut r: impl Read) -> Result<TrialSet> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated("magic"))?;
    if magic != CONTAINER_MAGIC {
        return Err(FormatError::BadMagic { expected: CONTAINER_MAGIC, found: magic }.into());
    }
    let version = r.read_u32::<LittleEndian>().map_err(truncated("header"))?;
    if version != CONTAINER_VERSION {
        return Err(FormatError::UnsupportedVersion(version).into());
    }
    let mut dims = [0usize; 3];
    for d in &mut dims {
        *d = r.read_u32::<LittleEndian>().map_err(truncated("header"))? as usize;
    }
    let [n, c, t] = dims;
    let fs = r.read_f32::<LittleEndian>().map_err(truncated("header"))?;

    let mut labels = vec![0u8; n];
    r.read_exact(&mut labels).map_err(truncated("labels"))?;
    if let Some((trial, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= MAX_CLASSES) {
        return Err(FormatError::LabelOutOfRange { trial, label }.into());
    }
    let mut subjects = vec![0u8; n];
    r.read_exact(&mut subjects).map_err(truncated("subject ids"))?;
    let mut flags = vec![0u8; n];
    r.read_exact(&mut flags).map_err(truncated("session flags"))?;
    let sessions = flags
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            Session::from_flag(f).ok_or_else(|| FormatError::Malformed(format!("session flag {f} at trial {i}")))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;

    let total = n
        .checked_mul(c)
        .and_then(|v| v.checked_mul(t))
        .ok_or_else(|| FormatError::Malformed("sample count overflows".into()))?;
    let mut bytes = vec![0u8; total * 4];
    r.read_exact(&mut bytes).map_err(truncated("samples"))?;
    let data = bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect();
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(FormatError::Malformed("trailing bytes after samples".into()).into());
    }
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(FormatError::Malformed(format!("sample rate {fs}")).into());
    }
    TrialSet::new(Tensor::from_vec(&[n, c, t], data)?, labels, subjects, sessions, fs as f64)
}

pub fn write_container(set: &TrialSet, path: impl AsRef<Path>) -> Result<()> {
    write_container_to(set, BufWriter::new(File::create(path)?))
}

pub fn read_container(path: impl AsRef<Path>) -> Result<TrialSet> {
    read_container_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> TrialSet {
        let data = Tensor::from_vec(&[2, 2, 3], vec![0.5, -1.25, 3.0, f32::MIN_POSITIVE, 7.0, -0.0, 1e-30, 2.0, 3.5, -4.0, 5.0, 6.0])
            .unwrap();
        TrialSet::new(data, vec![3, 1], vec![9, 4], vec![Session::Test, Session::Train], 250.0).unwrap()
    }

    fn bytes(set: &TrialSet) -> Vec<u8> {
        let mut buf = Vec::new();
        write_container_to(set, &mut buf).unwrap();
        buf
    }

    #[test]
    fn header_layout() {
        let b = bytes(&sample());
        assert_eq!(&b[..4], b"EEGT");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &2u32.to_le_bytes());
        assert_eq!(&b[12..16], &2u32.to_le_bytes());
        assert_eq!(&b[16..20], &3u32.to_le_bytes());
        assert_eq!(&b[20..24], &250f32.to_le_bytes());
        assert_eq!(&b[24..30], &[3, 1, 9, 4, 1, 0]);
        assert_eq!(&b[30..34], &0.5f32.to_le_bytes());
        assert_eq!(b.len(), 30 + 12 * 4);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let s = sample();
        let back = read_container_from(&bytes(&s)[..]).unwrap();
        assert_eq!(back.labels, s.labels);
        let bits = |t: &TrialSet| t.data().data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&back), bits(&s));
        assert_eq!(bytes(&back), bytes(&s));
    }

    #[test]
    fn distinct_error_codes() {
        let good = bytes(&sample());
        let code = |b: &[u8]| match read_container_from(b).unwrap_err() {
            Error::Format(f) => f.code(),
            e => panic!("unexpected {e}"),
        };
        let mut bad = good.clone();
        bad[..4].copy_from_slice(b"XXXX");
        let err = read_container_from(&bad[..]).unwrap_err();
        assert!(err.to_string().contains("bad magic"));
        assert_eq!(code(&bad), 1);
        let mut v2 = good.clone();
        v2[4] = 2;
        assert_eq!(code(&v2), 2);
        assert_eq!(code(&good[..good.len() - 1]), 3);
        assert_eq!(code(&good[..10]), 3);
        let mut lab = good.clone();
        lab[24] = 7;
        assert_eq!(code(&lab), 4);
        let mut sess = good.clone();
        sess[29] = 5;
        assert_eq!(code(&sess), 5);
        let mut extra = good;
        extra.push(0);
        assert_eq!(code(&extra), 5);
    }
}
