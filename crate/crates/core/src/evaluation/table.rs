use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::stats::{paired_t_test, TTest};
use crate::error::{Error, FormatError, Result};

/// AVG cells get a `*` when the attached p-value is below this.
pub const SIGNIFICANCE_LEVEL: f64 = 0.005;
pub const SUMMARY_MAGIC: [u8; 4] = *b"RSLT";
const SUMMARY_VERSION: u32 = 1;

/// One method/scheme column: accuracy per subject and repetition.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub subjects: Vec<u8>,
    /// `acc[s][r]`: accuracy (percent) of subject `s` in repetition `r`.
    pub acc: Vec<Vec<f64>>,
    pub p_value: Option<f64>,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation; 0 for fewer than two values.
fn std(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

impl Column {
    pub fn new(name: impl Into<String>, subjects: Vec<u8>, acc: Vec<Vec<f64>>) -> Result<Self> {
        let reps = acc.first().map_or(0, Vec::len);
        if subjects.is_empty() || subjects.len() != acc.len() || reps == 0 || acc.iter().any(|r| r.len() != reps) {
            return Err(Error::invalid("a column needs one equally long, non-empty repetition list per subject"));
        }
        Ok(Self { name: name.into(), subjects, acc, p_value: None })
    }

    pub fn reps(&self) -> usize {
        self.acc[0].len()
    }

    pub fn subject_mean(&self, s: usize) -> f64 {
        mean(&self.acc[s])
    }

    pub fn subject_std(&self, s: usize) -> f64 {
        std(&self.acc[s])
    }

    pub fn subject_means(&self) -> Vec<f64> {
        (0..self.subjects.len()).map(|s| self.subject_mean(s)).collect()
    }

    /// Mean over subjects of each repetition.
    pub fn repetition_means(&self) -> Vec<f64> {
        (0..self.reps()).map(|r| mean(&self.acc.iter().map(|row| row[r]).collect::<Vec<_>>())).collect()
    }

    /// Mean of the subject means.
    pub fn avg_mean(&self) -> f64 {
        mean(&self.subject_means())
    }

    /// Spread of the repetition means.
    pub fn avg_std(&self) -> f64 {
        std(&self.repetition_means())
    }

    fn cell(&self, subject: u8) -> Option<String> {
        let s = self.subjects.iter().position(|&x| x == subject)?;
        Some(format!("{:.2}±{:.2}", self.subject_mean(s), self.subject_std(s)))
    }

    fn avg_cell(&self) -> String {
        let mark = if self.p_value.is_some_and(|p| p < SIGNIFICANCE_LEVEL) { "*" } else { "" };
        format!("{:.2}±{:.2}{mark}", self.avg_mean(), self.avg_std())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
}

/// Per-subject accuracy table with an aggregate row.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultsTable {
    pub columns: Vec<Column>,
}

impl ResultsTable {
    pub fn push(&mut self, column: Column) {
        self.columns.push(column);
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    /// Paired t-test of per-subject means of two columns over their common
    /// subjects.
    pub fn compare(&self, a: &str, b: &str) -> Result<TTest> {
        let missing = |n: &str| Error::invalid(format!("no column named {n:?}"));
        let (ca, cb) = (self.column(a).ok_or_else(|| missing(a))?, self.column(b).ok_or_else(|| missing(b))?);
        let (mut xa, mut xb) = (Vec::new(), Vec::new());
        for (i, s) in ca.subjects.iter().enumerate() {
            if let Some(j) = cb.subjects.iter().position(|x| x == s) {
                xa.push(ca.subject_mean(i));
                xb.push(cb.subject_mean(j));
            }
        }
        paired_t_test(&xa, &xb)
    }

    /// Attaches `p` to the AVG cell of column `name`.
    pub fn mark(&mut self, name: &str, p: Option<f64>) -> Result<()> {
        let col = self.columns.iter_mut().find(|c| c.name == name).ok_or_else(|| Error::invalid(format!("no column named {name:?}")))?;
        col.p_value = p;
        Ok(())
    }

    fn subjects(&self) -> Vec<u8> {
        let mut s: Vec<u8> = self.columns.iter().flat_map(|c| c.subjects.iter().copied()).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .subjects()
            .into_iter()
            .map(|s| {
                std::iter::once(s.to_string())
                    .chain(self.columns.iter().map(|c| c.cell(s).unwrap_or_else(|| "-".into())))
                    .collect()
            })
            .collect();
        rows.push(std::iter::once("AVG".to_string()).chain(self.columns.iter().map(Column::avg_cell)).collect());
        rows
    }

    pub fn write_summary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(&SUMMARY_MAGIC)?;
        w.write_u32::<LittleEndian>(SUMMARY_VERSION)?;
        w.write_u32::<LittleEndian>(self.columns.len() as u32)?;
        for c in &self.columns {
            w.write_u32::<LittleEndian>(c.name.len() as u32)?;
            w.write_all(c.name.as_bytes())?;
            w.write_u32::<LittleEndian>(c.subjects.len() as u32)?;
            w.write_u32::<LittleEndian>(c.reps() as u32)?;
            w.write_all(&c.subjects)?;
            for v in c.acc.iter().flatten() {
                w.write_f64::<LittleEndian>(*v)?;
            }
            match c.p_value {
                Some(p) => {
                    w.write_u8(1)?;
                    w.write_f64::<LittleEndian>(p)?;
                }
                None => w.write_u8(0)?,
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_summary(mut r: impl Read) -> Result<Self> {
        let eof = |e: std::io::Error| -> Error {
            match e.kind() {
                std::io::ErrorKind::UnexpectedEof => FormatError::Truncated("results summary".into()).into(),
                _ => Error::Io(e),
            }
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(eof)?;
        if magic != SUMMARY_MAGIC {
            return Err(FormatError::BadMagic { expected: SUMMARY_MAGIC, found: magic }.into());
        }
        let version = r.read_u32::<LittleEndian>().map_err(eof)?;
        if version != SUMMARY_VERSION {
            return Err(FormatError::UnsupportedVersion(version).into());
        }
        let n = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
        let mut columns = Vec::with_capacity(n.min(64));
        for _ in 0..n {
            let len = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
            if len > 4096 {
                return Err(FormatError::Malformed("column name too long".into()).into());
            }
            let mut name = vec![0u8; len];
            r.read_exact(&mut name).map_err(eof)?;
            let name = String::from_utf8(name).map_err(|_| FormatError::Malformed("column name is not UTF-8".into()))?;
            let subjects_n = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
            let reps = r.read_u32::<LittleEndian>().map_err(eof)? as usize;
            if subjects_n > 256 || reps > 1 << 16 {
                return Err(FormatError::Malformed("implausible column size".into()).into());
            }
            let mut subjects = vec![0u8; subjects_n];
            r.read_exact(&mut subjects).map_err(eof)?;
            let mut flat = vec![0.0; subjects_n * reps];
            r.read_f64_into::<LittleEndian>(&mut flat).map_err(eof)?;
            let acc = flat.chunks(reps.max(1)).map(<[f64]>::to_vec).collect();
            let p_value = match r.read_u8().map_err(eof)? {
                0 => None,
                1 => Some(r.read_f64::<LittleEndian>().map_err(eof)?),
                f => return Err(FormatError::Malformed(format!("p-value flag {f}")).into()),
            };
            let mut col = Column::new(name, subjects, acc).map_err(|e| FormatError::Malformed(e.to_string()))?;
            col.p_value = p_value;
            columns.push(col);
        }
        Ok(Self { columns })
    }

    pub fn save_summary(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_summary(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load_summary(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_summary(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

/// Renders the table: one row per subject, then `AVG`. Cells read
/// `mean±std` over repetitions with two decimals.
pub fn emit_table(table: &ResultsTable, format: TableFormat) -> Result<String> {
    if table.columns.is_empty() {
        return Err(Error::invalid("nothing to tabulate"));
    }
    let header: Vec<String> = std::iter::once("subject".to_string()).chain(table.columns.iter().map(|c| c.name.clone())).collect();
    let rows = table.rows();
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).map_err(|e| Error::invalid(e.to_string()))?;
            for r in &rows {
                w.write_record(r).map_err(|e| Error::invalid(e.to_string()))?;
            }
            let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
            Ok(String::from_utf8(bytes).expect("CSV of UTF-8 cells"))
        }
        TableFormat::Markdown => {
            let mut out = String::new();
            let line = |cells: &[String]| format!("| {} |\n", cells.join(" | "));
            out.push_str(&line(&header));
            out.push_str(&line(&vec!["---".to_string(); header.len()]));
            for r in &rows {
                out.push_str(&line(r));
            }
            let reps: Vec<String> = table.columns.iter().map(|c| c.reps().to_string()).collect();
            let _ = writeln!(
                out,
                "\nAccuracy in percent, mean±std over repetitions ({}). AVG: mean of subject means, std over repetition means. * paired t-test p < {SIGNIFICANCE_LEVEL}.",
                reps.join("/")
            );
            Ok(out)
        }
    }
}
