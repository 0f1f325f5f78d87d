//! The `ybdb` text format.
//!
//! ```text
//! #ybdb v1 kind=cycleset n=3 count=5
//! 1 2 3
//! 1 2 3
//! 1 2 3
//!
//! 2 1 3
//! ...
//! ```
//!
//! Line 1 is the header: `#ybdb v1 kind=<kind> n=<n>` followed by optional
//! `count=<c>`, `partial=1` and `producer=<rest of line>` fields, in that
//! order. Each record is `n` lines of `n` space-separated 1-based integers;
//! records are separated by one blank line. Skew cycle set records are the
//! rack block followed by the `·` block (`2n` lines). Solution records are
//! the `σ_1..σ_n` block followed by the `τ_1..τ_n` block, row `x` listing
//! `σ_x(1) .. σ_x(n)`. Files ending in `.gz` are gzip-compressed.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use thiserror::Error;

use crate::canon::{canonical_form, canonical_form_skew, LabeledOrbitKey};
use crate::perm::Permutation;
use crate::props::{classify_cycle_set, classify_solution, ClassificationRecord, Summary};
use crate::tables::{
    check_cycle_set, check_rack, check_skew_cycle_set, CycleSetTable, Matrix, RackTable, SkewCycleSet, TableError, Violation,
};
use crate::yb::{skew_cycle_set_to_solution, solution_to_skew_cycle_set, verify_ybe, SolutionMap};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad header: {0}")]
    Header(String),
    #[error("record {index}: malformed: {msg}")]
    Malformed { index: usize, msg: String },
    #[error("record {index}: {what}")]
    Invalid { index: usize, what: String },
    #[error("record {index} does not match the header (kind {kind}, n={n})")]
    Mismatch { index: usize, kind: DatasetKind, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DatasetKind {
    CycleSet,
    Rack,
    SkewCycleSet,
    Solution,
}

impl DatasetKind {
    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::CycleSet => "cycleset",
            DatasetKind::Rack => "rack",
            DatasetKind::SkewCycleSet => "skewcycleset",
            DatasetKind::Solution => "solution",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "cycleset" => DatasetKind::CycleSet,
            "rack" => DatasetKind::Rack,
            "skewcycleset" => DatasetKind::SkewCycleSet,
            "solution" => DatasetKind::Solution,
            _ => return None,
        })
    }

    fn blocks(self) -> usize {
        match self {
            DatasetKind::CycleSet | DatasetKind::Rack => 1,
            DatasetKind::SkewCycleSet | DatasetKind::Solution => 2,
        }
    }
}

impl std::fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub version: u32,
    pub kind: DatasetKind,
    pub n: usize,
    pub count: Option<u64>,
    /// Set when the producing run stopped early.
    pub partial: bool,
    pub producer: Option<String>,
}

impl DatasetHeader {
    pub fn new(kind: DatasetKind, n: usize) -> Self {
        DatasetHeader {
            version: FORMAT_VERSION,
            kind,
            n,
            count: None,
            partial: false,
            producer: None,
        }
    }

    pub fn with_count(mut self, count: u64) -> Self {
        self.count = Some(count);
        self
    }

    pub fn with_producer(mut self, producer: impl Into<String>) -> Self {
        self.producer = Some(producer.into());
        self
    }

    pub fn line(&self) -> String {
        let mut s = format!("#ybdb v{} kind={} n={}", self.version, self.kind, self.n);
        if let Some(c) = self.count {
            s.push_str(&format!(" count={c}"));
        }
        if self.partial {
            s.push_str(" partial=1");
        }
        if let Some(p) = &self.producer {
            s.push_str(" producer=");
            s.push_str(p);
        }
        s
    }

    pub fn parse(line: &str) -> Result<Self, StoreError> {
        let bad = |m: &str| StoreError::Header(format!("{m} in {line:?}"));
        let rest = line.strip_prefix("#ybdb ").ok_or_else(|| bad("missing #ybdb marker"))?;
        let (fields, producer) = match rest.find(" producer=") {
            Some(at) => (&rest[..at], Some(rest[at + " producer=".len()..].to_string())),
            None => (rest, None),
        };
        let mut parts = fields.split_whitespace();
        let version = parts
            .next()
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse::<u32>().ok())
            .ok_or_else(|| bad("missing version"))?;
        if version != FORMAT_VERSION {
            return Err(bad("unsupported version"));
        }
        let (mut kind, mut n, mut count, mut partial) = (None, None, None, false);
        for p in parts {
            let (k, v) = p.split_once('=').ok_or_else(|| bad("field without '='"))?;
            match k {
                "kind" => kind = Some(DatasetKind::parse(v).ok_or_else(|| bad("unknown kind"))?),
                "n" => n = Some(v.parse::<usize>().map_err(|_| bad("bad n"))?),
                "count" => count = Some(v.parse::<u64>().map_err(|_| bad("bad count"))?),
                "partial" => partial = v == "1",
                _ => return Err(bad("unknown field")),
            }
        }
        let n = n.ok_or_else(|| bad("missing n"))?;
        if n == 0 || n > 255 {
            return Err(bad("n out of range"));
        }
        Ok(DatasetHeader {
            version,
            kind: kind.ok_or_else(|| bad("missing kind"))?,
            n,
            count,
            partial,
            producer,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Record {
    CycleSet(CycleSetTable),
    Rack(RackTable),
    Skew(SkewCycleSet),
    Solution(SolutionMap),
}

impl Record {
    pub fn kind(&self) -> DatasetKind {
        match self {
            Record::CycleSet(_) => DatasetKind::CycleSet,
            Record::Rack(_) => DatasetKind::Rack,
            Record::Skew(_) => DatasetKind::SkewCycleSet,
            Record::Solution(_) => DatasetKind::Solution,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Record::CycleSet(m) => m.n(),
            Record::Rack(r) => r.n(),
            Record::Skew(s) => s.n(),
            Record::Solution(s) => s.n(),
        }
    }

    fn blocks(&self) -> Vec<Vec<u8>> {
        match self {
            Record::CycleSet(m) => vec![m.matrix().cells().to_vec()],
            Record::Rack(r) => vec![r.matrix().cells().to_vec()],
            Record::Skew(s) => vec![s.rack().matrix().cells().to_vec(), s.m().cells().to_vec()],
            Record::Solution(s) => {
                let flat = |ps: &[Permutation]| ps.iter().flat_map(|p| p.images().to_vec()).collect();
                vec![flat(s.sigmas()), flat(s.taus())]
            }
        }
    }

    /// Isomorphism-class key; solutions are keyed through their skew cycle
    /// set.
    pub fn canonical_key(&self) -> LabeledOrbitKey {
        match self {
            Record::CycleSet(m) => canonical_form(m.matrix()).expect("valid cycle set"),
            Record::Rack(r) => canonical_form(r.matrix()).expect("valid rack"),
            Record::Skew(s) => canonical_form_skew(s.rack().matrix(), s.m()).expect("valid skew cycle set"),
            Record::Solution(s) => {
                let sc = solution_to_skew_cycle_set(s).expect("valid solution");
                canonical_form_skew(sc.rack().matrix(), sc.m()).expect("valid skew cycle set")
            }
        }
    }

    /// The same record relabeled to its canonical representative.
    pub fn canonicalized(&self) -> Record {
        let key = self.canonical_key();
        match self {
            Record::CycleSet(_) => Record::CycleSet(CycleSetTable::new_unchecked(key.canon[0].clone())),
            Record::Rack(_) => Record::Rack(RackTable::new_unchecked(key.canon[0].clone())),
            Record::Skew(_) | Record::Solution(_) => {
                let mut it = key.canon.into_iter();
                let (r, m) = (it.next().unwrap(), it.next().unwrap());
                let sc = SkewCycleSet::new_unchecked(m, r);
                match self {
                    Record::Skew(_) => Record::Skew(sc),
                    _ => Record::Solution(skew_cycle_set_to_solution(&sc)),
                }
            }
        }
    }

    pub fn classify(&self) -> Option<ClassificationRecord> {
        match self {
            Record::CycleSet(m) => Some(classify_cycle_set(m)),
            Record::Skew(s) => Some(classify_solution(&skew_cycle_set_to_solution(s))),
            Record::Solution(s) => Some(classify_solution(s)),
            Record::Rack(_) => None,
        }
    }

    /// Re-checks the axioms of the record (and the braid relation for
    /// solutions).
    pub fn verify(&self) -> Result<(), String> {
        match self {
            Record::CycleSet(m) => check_cycle_set(m.matrix()).map_err(|v| v.to_string()),
            Record::Rack(r) => check_rack(r.matrix()).map_err(|v| v.to_string()),
            Record::Skew(s) => {
                check_skew_cycle_set(s.m(), s.rack().matrix()).map_err(|v| v.to_string())?;
                verify_ybe(&skew_cycle_set_to_solution(s)).map_err(|f| f.to_string())
            }
            Record::Solution(s) => verify_ybe(s).map_err(|f| f.to_string()),
        }
    }
}

fn write_block<W: Write>(w: &mut W, n: usize, cells: &[u8]) -> io::Result<()> {
    for row in cells.chunks(n) {
        let mut line = String::with_capacity(3 * n);
        for (j, &v) in row.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&(v as usize + 1).to_string());
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Writes a header and records; returns the number of records written.
pub fn write_dataset<'a, W: Write>(
    w: &mut W,
    header: &DatasetHeader,
    records: impl IntoIterator<Item = &'a Record>,
) -> Result<u64, StoreError> {
    writeln!(w, "{}", header.line())?;
    let mut count = 0u64;
    for (index, rec) in records.into_iter().enumerate() {
        if rec.kind() != header.kind || rec.n() != header.n {
            return Err(StoreError::Mismatch {
                index: index + 1,
                kind: header.kind,
                n: header.n,
            });
        }
        if count > 0 {
            w.write_all(b"\n")?;
        }
        for block in rec.blocks() {
            write_block(w, header.n, &block)?;
        }
        count += 1;
    }
    w.flush()?;
    Ok(count)
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Writes `records` to `path` with `count` filled in; `.gz` paths are
/// compressed.
pub fn write_dataset_file(path: &Path, header: &DatasetHeader, records: &[Record]) -> Result<u64, StoreError> {
    let header = header.clone().with_count(records.len() as u64);
    let file = File::create(path)?;
    if is_gz(path) {
        let mut enc = BufWriter::new(GzEncoder::new(file, Compression::default()));
        let c = write_dataset(&mut enc, &header, records)?;
        enc.into_inner().map_err(|e| e.into_error())?.finish()?;
        Ok(c)
    } else {
        write_dataset(&mut BufWriter::new(file), &header, records)
    }
}

/// Streaming reader: yields one record at a time.
pub struct DatasetReader<R> {
    input: R,
    header: DatasetHeader,
    validate: bool,
    index: usize,
    line: String,
    done: bool,
}

impl<R: BufRead> DatasetReader<R> {
    pub fn new(mut input: R, validate: bool) -> Result<Self, StoreError> {
        let mut line = String::new();
        if input.read_line(&mut line)? == 0 {
            return Err(StoreError::Header("empty input".into()));
        }
        let header = DatasetHeader::parse(line.trim_end())?;
        Ok(DatasetReader {
            input,
            header,
            validate,
            index: 0,
            line,
            done: false,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    fn malformed(&self, msg: impl Into<String>) -> StoreError {
        StoreError::Malformed {
            index: self.index,
            msg: msg.into(),
        }
    }

    /// Reads the next non-blank line; `None` at end of input.
    fn next_line(&mut self, skip_blank: bool) -> Result<Option<&str>, StoreError> {
        loop {
            self.line.clear();
            if self.input.read_line(&mut self.line)? == 0 {
                return Ok(None);
            }
            if !skip_blank || !self.line.trim().is_empty() {
                return Ok(Some(self.line.trim_end()));
            }
        }
    }

    fn read_record(&mut self) -> Result<Option<Record>, StoreError> {
        let n = self.header.n;
        let rows = n * self.header.kind.blocks();
        let mut cells = Vec::with_capacity(rows * n);
        for r in 0..rows {
            let Some(line) = self.next_line(r == 0)? else {
                if r == 0 {
                    return Ok(None);
                }
                return Err(self.malformed("truncated record"));
            };
            let mut count = 0;
            let mut err = None;
            for tok in line.split_whitespace() {
                match tok.parse::<usize>() {
                    Ok(v) if (1..=n).contains(&v) => cells.push((v - 1) as u8),
                    _ => {
                        err = Some(format!("entry {tok:?} outside 1..={n}"));
                        break;
                    }
                }
                count += 1;
            }
            if let Some(e) = err {
                return Err(self.malformed(e));
            }
            if count != n {
                return Err(self.malformed(format!("row with {count} entries, expected {n}")));
            }
        }
        self.build(cells).map(Some)
    }

    fn build(&self, cells: Vec<u8>) -> Result<Record, StoreError> {
        let n = self.header.n;
        let invalid = |what: String| StoreError::Invalid { index: self.index, what };
        let table = |c: Vec<u8>| -> Result<Matrix, StoreError> {
            Matrix::from_cells(n, c).map_err(|e: TableError| invalid(e.to_string()))
        };
        let axiom = |v: Violation| invalid(v.to_string());
        let rec = match self.header.kind {
            DatasetKind::CycleSet => {
                let m = table(cells)?;
                if self.validate {
                    Record::CycleSet(CycleSetTable::new(m).map_err(axiom)?)
                } else {
                    Record::CycleSet(CycleSetTable::from_trusted(m))
                }
            }
            DatasetKind::Rack => {
                let r = table(cells)?;
                if self.validate {
                    Record::Rack(RackTable::new(r).map_err(axiom)?)
                } else {
                    Record::Rack(RackTable::from_trusted(r))
                }
            }
            DatasetKind::SkewCycleSet => {
                let (r, m) = cells.split_at(n * n);
                let (r, m) = (table(r.to_vec())?, table(m.to_vec())?);
                if self.validate {
                    Record::Skew(SkewCycleSet::new(m, r).map_err(axiom)?)
                } else {
                    Record::Skew(SkewCycleSet::from_trusted(m, r))
                }
            }
            DatasetKind::Solution => {
                let perms = |block: &[u8]| -> Result<Vec<Permutation>, StoreError> {
                    block
                        .chunks(n)
                        .map(|row| Permutation::from_images(row.to_vec()).map_err(|e| invalid(e.to_string())))
                        .collect()
                };
                let (s, t) = cells.split_at(n * n);
                let s = SolutionMap::new(perms(s)?, perms(t)?).map_err(|e| invalid(e.to_string()))?;
                if self.validate {
                    verify_ybe(&s).map_err(|f| invalid(f.to_string()))?;
                }
                Record::Solution(s)
            }
        };
        Ok(rec)
    }
}

impl<R: BufRead> Iterator for DatasetReader<R> {
    type Item = Result<Record, StoreError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        self.index += 1;
        match self.read_record() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => {
                self.done = true;
                None
            }
            Err(e) => {
                self.done = true;
                Some(Err(e))
            }
        }
    }
}

pub type FileReader = DatasetReader<Box<dyn BufRead + Send>>;

/// Opens a dataset file, decompressing `.gz` transparently.
pub fn open_dataset(path: &Path, validate: bool) -> Result<FileReader, StoreError> {
    let file = File::open(path)?;
    let input: Box<dyn BufRead + Send> = if is_gz(path) {
        Box::new(BufReader::new(MultiGzDecoder::new(file)))
    } else {
        Box::new(BufReader::new(file))
    };
    DatasetReader::new(input, validate)
}

/// Reads a whole dataset; checks `count` against the records found.
pub fn read_dataset(path: &Path, validate: bool) -> Result<(DatasetHeader, Vec<Record>), StoreError> {
    let reader = open_dataset(path, validate)?;
    let header = reader.header().clone();
    let records = reader.collect::<Result<Vec<_>, _>>()?;
    if let Some(c) = header.count {
        if c != records.len() as u64 {
            return Err(StoreError::Header(format!("count={c} but {} records present", records.len())));
        }
    }
    Ok((header, records))
}

/// Classification summary of a dataset (racks are counted only).
pub fn dataset_stats<R: BufRead>(reader: DatasetReader<R>) -> Result<Summary, StoreError> {
    let mut s = Summary::default();
    for rec in reader {
        match rec?.classify() {
            Some(c) => s.add(&c),
            None => s.solutions += 1,
        }
    }
    Ok(s)
}

/// Sorts records by canonical key, replacing each by its canonical
/// representative.
pub fn canonicalize(records: &[Record]) -> Vec<Record> {
    use rayon::prelude::*;
    let mut keyed: Vec<(LabeledOrbitKey, Record)> = records
        .par_iter()
        .map(|r| {
            let c = r.canonicalized();
            (c.canonical_key(), c)
        })
        .collect();
    keyed.par_sort_by(|a, b| a.0.cmp(&b.0));
    keyed.into_iter().map(|(_, r)| r).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tables::RackTable;

    fn roundtrip(header: &DatasetHeader, recs: &[Record]) -> (DatasetHeader, Vec<Record>) {
        let mut buf = Vec::new();
        write_dataset(&mut buf, header, recs).unwrap();
        let reader = DatasetReader::new(&buf[..], true).unwrap();
        let h = reader.header().clone();
        (h, reader.collect::<Result<Vec<_>, _>>().unwrap())
    }

    #[test]
    fn header_round_trip() {
        let mut h = DatasetHeader::new(DatasetKind::Rack, 4).with_count(19).with_producer("test run n=4");
        h.partial = true;
        assert_eq!(h.line(), "#ybdb v1 kind=rack n=4 count=19 partial=1 producer=test run n=4");
        assert_eq!(DatasetHeader::parse(&h.line()).unwrap(), h);
        assert!(DatasetHeader::parse("#ybdb v2 kind=rack n=4").is_err());
        assert!(DatasetHeader::parse("ybdb v1 kind=rack n=4").is_err());
        assert!(DatasetHeader::parse("#ybdb v1 kind=group n=4").is_err());
    }

    #[test]
    fn empty_dataset() {
        let h = DatasetHeader::new(DatasetKind::CycleSet, 3).with_count(0);
        let mut buf = Vec::new();
        assert_eq!(write_dataset(&mut buf, &h, &[]).unwrap(), 0);
        assert_eq!(String::from_utf8(buf).unwrap(), "#ybdb v1 kind=cycleset n=3 count=0\n");
        let (_, recs) = roundtrip(&h, &[]);
        assert!(recs.is_empty());
    }

    #[test]
    fn exact_layout() {
        let recs = vec![
            Record::Rack(RackTable::trivial(2)),
            Record::Rack(RackTable::from_rows(&[vec![2, 1], vec![2, 1]]).unwrap()),
        ];
        let h = DatasetHeader::new(DatasetKind::Rack, 2);
        let mut buf = Vec::new();
        write_dataset(&mut buf, &h, &recs).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "#ybdb v1 kind=rack n=2\n1 2\n1 2\n\n2 1\n2 1\n");
        assert_eq!(roundtrip(&h, &recs).1, recs);
    }

    #[test]
    fn corrupt_records_are_reported() {
        let text = "#ybdb v1 kind=cycleset n=2\n1 2\n1 2\n\n1 1\n2 2\n";
        let got: Vec<_> = DatasetReader::new(text.as_bytes(), true).unwrap().collect();
        assert!(got[0].is_ok());
        assert!(matches!(got[1], Err(StoreError::Invalid { index: 2, .. })));

        let text = "#ybdb v1 kind=cycleset n=2\n1 3\n1 2\n";
        let got: Vec<_> = DatasetReader::new(text.as_bytes(), true).unwrap().collect();
        assert!(matches!(got[0], Err(StoreError::Malformed { index: 1, .. })));

        let text = "#ybdb v1 kind=cycleset n=2\n1 2\n";
        let got: Vec<_> = DatasetReader::new(text.as_bytes(), true).unwrap().collect();
        assert!(matches!(got[0], Err(StoreError::Malformed { .. })));
    }

    #[test]
    fn mismatched_records_rejected_on_write() {
        let h = DatasetHeader::new(DatasetKind::CycleSet, 3);
        let recs = [Record::CycleSet(CycleSetTable::trivial(2))];
        assert!(matches!(
            write_dataset(&mut Vec::new(), &h, &recs),
            Err(StoreError::Mismatch { index: 1, .. })
        ));
    }

    #[test]
    fn gzip_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("db.ybdb.gz");
        let recs = vec![Record::Solution(SolutionMap::flip(3))];
        write_dataset_file(&path, &DatasetHeader::new(DatasetKind::Solution, 3), &recs).unwrap();
        let (h, back) = read_dataset(&path, true).unwrap();
        assert_eq!(h.count, Some(1));
        assert_eq!(back, recs);
    }
}
