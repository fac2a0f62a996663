//! Columnar datasets, loaders, bootstrap subsampling and the Trunk generator.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::real::Real;

/// Feature-major table of values plus contiguous class ids.
///
/// Immutable once built; shared read-only by every training worker.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnarDataset<T: Real = f32> {
    columns: Vec<Vec<T>>,
    labels: Vec<u32>,
    label_names: Vec<String>,
}

impl<T: Real> ColumnarDataset<T> {
    /// Build a dataset from feature columns, class ids and the name of each class id.
    pub fn new(columns: Vec<Vec<T>>, labels: Vec<u32>, label_names: Vec<String>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        if labels.is_empty() {
            return Err(Error::InvalidDataset("no samples".into()));
        }
        if label_names.len() < 2 {
            return Err(Error::TooFewClasses);
        }
        if let Some((f, c)) = columns
            .iter()
            .enumerate()
            .find(|(_, c)| c.len() != labels.len())
        {
            return Err(Error::InvalidDataset(format!(
                "column {f} has {} values, expected {}",
                c.len(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l as usize >= label_names.len()) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} outside [0, {})",
                label_names.len()
            )));
        }
        Ok(ColumnarDataset {
            columns,
            labels,
            label_names,
        })
    }

    /// Build from row-major samples; class names default to the ids.
    pub fn from_rows(rows: &[Vec<T>], labels: Vec<u32>, class_count: usize) -> Result<Self> {
        let n_features = rows.first().map_or(0, Vec::len);
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_features) {
            return Err(Error::Ragged {
                row: r,
                found: row.len(),
                expected: n_features,
            });
        }
        let columns = (0..n_features)
            .map(|f| rows.iter().map(|r| r[f]).collect())
            .collect();
        let names = (0..class_count).map(|c| c.to_string()).collect();
        Self::new(columns, labels, names)
    }

    #[inline]
    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    #[inline]
    pub fn class_count(&self) -> usize {
        self.label_names.len()
    }

    #[inline]
    pub fn column(&self, feature: usize) -> &[T] {
        &self.columns[feature]
    }

    pub fn columns(&self) -> &[Vec<T>] {
        &self.columns
    }

    #[inline]
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Original class identifiers, indexed by class id.
    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn row(&self, sample: usize) -> Vec<T> {
        self.columns.iter().map(|c| c[sample]).collect()
    }

    /// Copy of the given rows, keeping the full class mapping.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        let columns = self
            .columns
            .iter()
            .map(|c| rows.iter().map(|&r| c[r]).collect())
            .collect();
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Self::new(columns, labels, self.label_names.clone())
    }

    /// Split into the first `round(fraction * n)` rows and the rest.
    pub fn split_head(&self, fraction: f64) -> Result<(Self, Self)> {
        let n = self.n_samples();
        let k = ((fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
        let head: Vec<usize> = (0..k).collect();
        let tail: Vec<usize> = (k..n).collect();
        Ok((self.select_rows(&head)?, self.select_rows(&tail)?))
    }

    /// Write as CSV with a `f0,...,label` header. Values use shortest
    /// round-trip formatting, so reloading reproduces them bit-exactly.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        let header: Vec<String> = (0..self.n_features())
            .map(|f| format!("f{f}"))
            .chain(std::iter::once("label".to_string()))
            .collect();
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        let mut line = String::new();
        for i in 0..self.n_samples() {
            line.clear();
            for c in &self.columns {
                line.push_str(&c[i].to_string());
                line.push(',');
            }
            line.push_str(&self.label_names[self.labels[i] as usize]);
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Strictly increasing row indices into a dataset: the active samples of a node.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SampleIndexSet(Vec<u32>);

impl SampleIndexSet {
    pub fn new(indices: Vec<u32>, n_samples: usize) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidDataset(
                "sample indices must be strictly increasing".into(),
            ));
        }
        if indices.last().is_some_and(|&i| i as usize >= n_samples) {
            return Err(Error::InvalidDataset(format!(
                "sample index out of range (n_samples = {n_samples})"
            )));
        }
        Ok(SampleIndexSet(indices))
    }

    /// Caller guarantees the ordering and bounds invariants.
    pub(crate) fn from_sorted(indices: Vec<u32>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        SampleIndexSet(indices)
    }

    pub fn all(n_samples: usize) -> Self {
        SampleIndexSet((0..n_samples as u32).collect())
    }

    #[inline]
    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<u32> {
        self.0
    }
}

pub const DEFAULT_BOOTSTRAP_FRACTION: f64 = 0.632;

/// Sample `round(fraction * n)` distinct rows without replacement, sorted.
pub fn bootstrap_sample<T: Real>(
    dataset: &ColumnarDataset<T>,
    fraction: f64,
    seed: u64,
) -> Result<SampleIndexSet> {
    bootstrap_indices(dataset.n_samples(), fraction, seed)
}

pub(crate) fn bootstrap_indices(n: usize, fraction: f64, seed: u64) -> Result<SampleIndexSet> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "bootstrap fraction {fraction} not in (0, 1]"
        )));
    }
    let k = ((fraction * n as f64).round() as usize).clamp(1, n);
    if k == n {
        return Ok(SampleIndexSet::all(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<u32> = rand::seq::index::sample(&mut rng, n, k)
        .into_iter()
        .map(|i| i as u32)
        .collect();
    idx.sort_unstable();
    Ok(SampleIndexSet::from_sorted(idx))
}

/// Two balanced Gaussian classes with identity covariance and means
/// `+mu` (class 0) and `-mu` (class 1), `mu_i = 1 / sqrt(i + 1)`.
///
/// Rows alternate between the classes, so any prefix is balanced to within one.
pub fn generate_trunk<T: Real>(
    n_samples: usize,
    n_features: usize,
    seed: u64,
) -> Result<ColumnarDataset<T>> {
    if n_samples == 0 || !n_samples.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "trunk needs a positive even sample count, got {n_samples}"
        )));
    }
    if n_features == 0 {
        return Err(Error::InvalidConfig("trunk needs at least one feature".into()));
    }
    let labels: Vec<u32> = (0..n_samples).map(|i| (i % 2) as u32).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns = (0..n_features)
        .map(|f| {
            let mu = 1.0 / ((f + 1) as f64).sqrt();
            labels
                .iter()
                .map(|&c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let mean = if c == 0 { mu } else { -mu };
                    T::from_f64(mean + z)
                })
                .collect()
        })
        .collect();
    ColumnarDataset::new(columns, labels, vec!["0".into(), "1".into()])
}

/// Map raw class identifiers to contiguous ids in first-appearance order.
pub fn encode_labels<S: AsRef<str>>(raw: &[S]) -> (Vec<u32>, Vec<String>) {
    let mut ids: HashMap<&str, u32> = HashMap::new();
    let mut names = Vec::new();
    let labels = raw
        .iter()
        .map(|s| {
            let s = s.as_ref();
            *ids.entry(s).or_insert_with(|| {
                names.push(s.to_string());
                (names.len() - 1) as u32
            })
        })
        .collect();
    (labels, names)
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Integers select by 0-based index, `last` the final column, anything else a header name.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "last" => LabelColumn::Last,
            _ => match s.parse() {
                Ok(i) => LabelColumn::Index(i),
                Err(_) => LabelColumn::Name(s.to_string()),
            },
        })
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub has_header: bool,
    pub label: LabelColumn,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            has_header: true,
            label: LabelColumn::Last,
        }
    }
}

/// A parsed CSV table whose label column may be absent.
#[derive(Debug, Clone)]
pub struct RawTable<T> {
    pub columns: Vec<Vec<T>>,
    pub labels: Option<Vec<String>>,
}

impl<T> RawTable<T> {
    pub fn n_rows(&self) -> usize {
        match (&self.labels, self.columns.first()) {
            (Some(l), _) => l.len(),
            (None, Some(c)) => c.len(),
            (None, None) => 0,
        }
    }
}

/// Load a labelled CSV file. Rows and columns in errors are 1-based and count
/// the header line when present.
pub fn load_csv<T: Real>(path: impl AsRef<Path>, options: &CsvOptions) -> Result<ColumnarDataset<T>> {
    let table = read_csv_table(path, options.has_header, Some(&options.label))?;
    let raw = table.labels.unwrap_or_default();
    let (labels, names) = encode_labels(&raw);
    if names.len() < 2 {
        return Err(Error::TooFewClasses);
    }
    ColumnarDataset::new(table.columns, labels, names)
}

/// Read a CSV into columns; `label = None` treats every column as a feature.
pub fn read_csv_table<T: Real>(
    path: impl AsRef<Path>,
    has_header: bool,
    label: Option<&LabelColumn>,
) -> Result<RawTable<T>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let mut records = reader.records();
    let mut width = None;
    let mut header: Option<Vec<String>> = None;
    let mut first_data: Option<csv::StringRecord> = None;
    if let Some(first) = records.next() {
        let first = first.map_err(|e| csv_error(path, e))?;
        width = Some(first.len());
        if has_header {
            header = Some(first.iter().map(str::to_string).collect());
        } else {
            first_data = Some(first);
        }
    }
    let Some(width) = width else {
        return Err(Error::InvalidDataset(format!("{} is empty", path.display())));
    };

    let label_idx = match label {
        None => None,
        Some(LabelColumn::Last) => Some(width - 1),
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Index(i)) => {
            return Err(Error::InvalidDataset(format!(
                "label column {i} out of range ({width} columns)"
            )))
        }
        Some(LabelColumn::Name(name)) => {
            let h = header.as_ref().ok_or_else(|| {
                Error::InvalidDataset("label column by name requires a header".into())
            })?;
            Some(h.iter().position(|c| c == name).ok_or_else(|| {
                Error::InvalidDataset(format!("no column named {name:?}"))
            })?)
        }
    };
    let n_features = width - usize::from(label_idx.is_some());
    if n_features == 0 {
        return Err(Error::InvalidDataset("no feature columns".into()));
    }

    let mut columns: Vec<Vec<T>> = vec![Vec::new(); n_features];
    let mut labels = label_idx.map(|_| Vec::new());
    let row_offset = usize::from(has_header) + 1;
    let mut push = |row_no: usize, rec: &csv::StringRecord| -> Result<()> {
        if rec.len() != width {
            return Err(Error::Ragged {
                row: row_no,
                found: rec.len(),
                expected: width,
            });
        }
        let mut f = 0;
        for (col, cell) in rec.iter().enumerate() {
            if Some(col) == label_idx {
                labels.as_mut().unwrap().push(cell.to_string());
                continue;
            }
            let v = parse_value::<T>(cell).ok_or_else(|| Error::Parse {
                row: row_no,
                column: col + 1,
                message: format!("cannot parse {cell:?} as a finite number"),
            })?;
            columns[f].push(v);
            f += 1;
        }
        Ok(())
    };
    if let Some(rec) = first_data {
        push(1, &rec)?;
    }
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        push(i + row_offset, &rec)?;
    }
    if columns[0].is_empty() && labels.as_ref().is_none_or(Vec::is_empty) {
        return Err(Error::InvalidDataset(format!("{} has no data rows", path.display())));
    }
    Ok(RawTable { columns, labels })
}

fn parse_value<T: Real>(cell: &str) -> Option<T> {
    cell.parse::<T>().ok().filter(|v| v.is_finite())
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse {
            row: 0,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Load a libsvm/svmlight file (`label idx:val ...`, 1-based indices).
/// Absent entries are 0. Numeric labels are normalized, so `+1` and `1` are one class.
pub fn load_libsvm<T: Real>(path: impl AsRef<Path>, n_features: usize) -> Result<ColumnarDataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(BufReader::new(file), n_features, path)
}

fn parse_libsvm<T: Real, R: BufRead>(
    reader: R,
    n_features: usize,
    path: &Path,
) -> Result<ColumnarDataset<T>> {
    if n_features == 0 {
        return Err(Error::InvalidConfig("libsvm needs n_features >= 1".into()));
    }
    let mut columns: Vec<Vec<T>> = vec![Vec::new(); n_features];
    let mut raw_labels = Vec::new();
    for (line_no, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = line_no + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().unwrap();
        raw_labels.push(normalize_label(label));
        let row = raw_labels.len() - 1;
        for c in columns.iter_mut() {
            c.push(T::default());
        }
        for (pos, token) in tokens.enumerate() {
            let malformed = || Error::Parse {
                row: line_no,
                column: pos + 2,
                message: format!("malformed token {token:?}"),
            };
            let (idx, val) = token.split_once(':').ok_or_else(malformed)?;
            let idx: usize = idx.parse().map_err(|_| malformed())?;
            let val: T = parse_value(val).ok_or_else(malformed)?;
            if idx == 0 || idx > n_features {
                return Err(Error::FeatureOutOfRange {
                    index: idx,
                    n_features,
                    line: line_no,
                });
            }
            columns[idx - 1][row] = val;
        }
    }
    let (labels, names) = encode_labels(&raw_labels);
    if raw_labels.is_empty() {
        return Err(Error::InvalidDataset(format!("{} has no data rows", path.display())));
    }
    if names.len() < 2 {
        return Err(Error::TooFewClasses);
    }
    ColumnarDataset::new(columns, labels, names)
}

fn normalize_label(token: &str) -> String {
    // The libsvm minus sign sometimes arrives as U+2212.
    let token = token.replace('\u{2212}', "-");
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => v.to_string(),
        _ => token,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_first_appearance_labels() {
        let f = write_tmp("x,y,cls\n1,2,a\n3,4,b\n5,6,a\n");
        let ds: ColumnarDataset = load_csv(f.path(), &CsvOptions::default()).unwrap();
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.class_count(), 2);
        assert_eq!(ds.label_names(), &["a", "b"]);
        assert_eq!(ds.column(1), &[2.0, 4.0, 6.0]);
    }

    #[test]
    fn csv_label_by_name_and_index() {
        let f = write_tmp("cls,x\na,1\nb,2\n");
        let opts = CsvOptions {
            has_header: true,
            label: LabelColumn::Name("cls".into()),
        };
        let ds: ColumnarDataset<f64> = load_csv(f.path(), &opts).unwrap();
        assert_eq!(ds.n_features(), 1);
        assert_eq!(ds.column(0), &[1.0, 2.0]);
        let f = write_tmp("a,1\nb,2\n");
        let opts = CsvOptions {
            has_header: false,
            label: LabelColumn::Index(0),
        };
        let ds: ColumnarDataset<f64> = load_csv(f.path(), &opts).unwrap();
        assert_eq!(ds.labels(), &[0, 1]);
    }

    #[test]
    fn csv_bad_cell_names_location() {
        let f = write_tmp("x,y,c\n1,2,a\n3,oops,b\n");
        let err = load_csv::<f32>(f.path(), &CsvOptions::default()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(load_csv::<f32>(write_tmp("x,c\nnan,a\n1,b\n").path(), &CsvOptions::default()).is_err());
    }

    #[test]
    fn csv_single_class_and_ragged() {
        let f = write_tmp("x,c\n1,a\n2,a\n");
        let err = load_csv::<f32>(f.path(), &CsvOptions::default()).unwrap_err();
        assert!(err.to_string().contains("fewer than 2 classes"));
        let f = write_tmp("x,y,c\n1,2,a\n3,b\n");
        assert!(matches!(
            load_csv::<f32>(f.path(), &CsvOptions::default()),
            Err(Error::Ragged { row: 3, found: 2, expected: 3 })
        ));
    }

    #[test]
    fn libsvm_sparse_fill_and_labels() {
        let text = "1 3:2.5\n\u{2212}1 1:1 2:1\n";
        let ds: ColumnarDataset = parse_libsvm(Cursor::new(text), 4, Path::new("mem")).unwrap();
        assert_eq!(ds.row(0), vec![0.0, 0.0, 2.5, 0.0]);
        assert_eq!(ds.row(1), vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(ds.labels(), &[0, 1]);
        assert_eq!(ds.label_names(), &["1", "-1"]);
    }

    #[test]
    fn libsvm_errors() {
        let err = parse_libsvm::<f32, _>(Cursor::new("1 9:1\n-1 1:1\n"), 4, Path::new("m")).unwrap_err();
        assert!(matches!(err, Error::FeatureOutOfRange { index: 9, n_features: 4, line: 1 }));
        let err = parse_libsvm::<f32, _>(Cursor::new("1 3-2\n"), 4, Path::new("m")).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 1, .. }));
    }

    #[test]
    fn trunk_balanced_and_deterministic() {
        let a: ColumnarDataset = generate_trunk(1000, 10, 7).unwrap();
        let ones = a.labels().iter().filter(|&&l| l == 1).count();
        assert_eq!(ones, 500);
        let b: ColumnarDataset = generate_trunk(1000, 10, 7).unwrap();
        assert_eq!(a, b);
        assert!(generate_trunk::<f32>(999, 10, 7).is_err());
    }

    #[test]
    fn trunk_class_means() {
        let ds: ColumnarDataset<f64> = generate_trunk(100_000, 2, 3).unwrap();
        let mut sums = [0.0f64; 2];
        for (v, &l) in ds.column(0).iter().zip(ds.labels()) {
            sums[l as usize] += v;
        }
        let m0 = sums[0] / 50_000.0;
        let m1 = sums[1] / 50_000.0;
        assert!((m0 - 1.0).abs() < 0.02, "{m0}");
        assert!((m1 + 1.0).abs() < 0.02, "{m1}");
    }

    #[test]
    fn bootstrap_counts() {
        let ds: ColumnarDataset = generate_trunk(1000, 2, 1).unwrap();
        let all = bootstrap_sample(&ds, 1.0, 5).unwrap();
        assert_eq!(all.as_slice(), SampleIndexSet::all(1000).as_slice());
        let s = bootstrap_sample(&ds, 0.632, 5).unwrap();
        assert_eq!(s.len(), 632);
        assert!(s.as_slice().windows(2).all(|w| w[0] < w[1]));
        let t = bootstrap_sample(&ds, 0.632, 6).unwrap();
        assert_ne!(s, t);
        assert!(bootstrap_sample(&ds, 0.0, 1).is_err());
        assert!(bootstrap_sample(&ds, 1.5, 1).is_err());
    }

    #[test]
    fn index_set_invariants() {
        assert!(SampleIndexSet::new(vec![0, 2, 5], 6).is_ok());
        assert!(SampleIndexSet::new(vec![0, 2, 2], 6).is_err());
        assert!(SampleIndexSet::new(vec![0, 6], 6).is_err());
    }
}
