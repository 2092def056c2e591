//! Data model and file ingestion: feature matrix with a categorical label,
//! column grouping, and the text formats for both.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Result, ScreenError};

/// An n × p numeric feature matrix plus a categorical label per row.
///
/// Labels are stored as dense class indices `0..k`; the original label text
/// is kept in first-appearance order so output stays deterministic for a
/// fixed input file.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>, // row-major, n * p
    n: usize,
    p: usize,
    labels: Vec<usize>,
    class_counts: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    label_name: String,
}

impl Dataset {
    /// Build a dataset from a row-major feature buffer and class indices.
    ///
    /// Classes must be dense: every index in `0..max+1` has to occur at
    /// least once.
    pub fn from_parts(features: Vec<f64>, p: usize, labels: Vec<usize>) -> Result<Self> {
        let feature_names = (0..p).map(|j| format!("x{}", j + 1)).collect();
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let class_names = (0..k).map(|c| c.to_string()).collect();
        Self::with_names(features, p, labels, feature_names, class_names, "y".into())
    }

    /// `from_parts` with explicit column and class names.
    pub fn with_names(
        features: Vec<f64>,
        p: usize,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        label_name: String,
    ) -> Result<Self> {
        if p == 0 {
            return Err(ScreenError::NoFeatures);
        }
        if !features.len().is_multiple_of(p) {
            return Err(ScreenError::DimensionMismatch {
                len: features.len(),
                dim: p,
            });
        }
        let n = features.len() / p;
        if n < 2 {
            return Err(ScreenError::TooFewRows(n));
        }
        if labels.len() != n {
            return Err(ScreenError::LengthMismatch(n, labels.len()));
        }
        if feature_names.len() != p {
            return Err(ScreenError::LengthMismatch(p, feature_names.len()));
        }
        let k = labels.iter().max().map_or(0, |m| m + 1);
        if k < 2 {
            return Err(ScreenError::SingleClass);
        }
        if class_names.len() != k {
            return Err(ScreenError::LengthMismatch(k, class_names.len()));
        }
        let mut class_counts = vec![0usize; k];
        for &y in &labels {
            class_counts[y] += 1;
        }
        if let Some(missing) = class_counts.iter().position(|&c| c == 0) {
            return Err(ScreenError::InvalidValue(format!(
                "class index {missing} never occurs"
            )));
        }
        for (idx, v) in features.iter().enumerate() {
            if !v.is_finite() {
                return Err(ScreenError::NonFinite {
                    row: idx / p + 1,
                    column: feature_names[idx % p].clone(),
                });
            }
        }
        Ok(Dataset {
            features,
            n,
            p,
            labels,
            class_counts,
            feature_names,
            class_names,
            label_name,
        })
    }

    /// `from_parts` for raw labels that may skip class indices (for example a
    /// simulated multinomial draw where a rare class never occurred).
    /// Observed classes are renumbered densely, preserving their order.
    pub fn from_parts_compacting(
        features: Vec<f64>,
        p: usize,
        raw_labels: Vec<usize>,
    ) -> Result<Self> {
        let max = raw_labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; max];
        for &y in &raw_labels {
            seen[y] = true;
        }
        let mut remap = vec![usize::MAX; max];
        let mut next = 0usize;
        for (orig, s) in seen.iter().enumerate() {
            if *s {
                remap[orig] = next;
                next += 1;
            }
        }
        if next < 2 {
            return Err(ScreenError::SingleClass);
        }
        let labels: Vec<usize> = raw_labels.iter().map(|&y| remap[y]).collect();
        let feature_names = (0..p).map(|j| format!("x{}", j + 1)).collect();
        let class_names = (0..max)
            .filter(|&c| seen[c])
            .map(|c| c.to_string())
            .collect();
        Self::with_names(features, p, labels, feature_names, class_names, "y".into())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of classes.
    pub fn k(&self) -> usize {
        self.class_counts.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn label_name(&self) -> &str {
        &self.label_name
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.features[row * self.p + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.features[row * self.p..(row + 1) * self.p]
    }

    /// Copy one column out of the row-major buffer.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i, col)).collect()
    }

    /// Gather `columns` of every row into a contiguous n × q buffer.
    pub fn gather(&self, columns: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * columns.len());
        for i in 0..self.n {
            let row = self.row(i);
            for &c in columns {
                out.push(row[c]);
            }
        }
        out
    }

    /// Resolve a column given either its header name or a zero-based index.
    pub fn resolve_column(&self, name_or_index: &str) -> Option<usize> {
        if let Some(j) = self.feature_names.iter().position(|n| n == name_or_index) {
            return Some(j);
        }
        name_or_index
            .parse::<usize>()
            .ok()
            .filter(|&j| j < self.p)
    }

    /// Write the dataset back out as CSV. Feature values are printed with 17
    /// significant digits so a reload reproduces them bit for bit.
    pub fn save_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "{}", self.label_name)?;
        for name in &self.feature_names {
            write!(w, ",{name}")?;
        }
        writeln!(w)?;
        for i in 0..self.n {
            write!(w, "{}", self.class_names[self.labels[i]])?;
            for v in self.row(i) {
                write!(w, ",{}", fmt_f64_exact(*v))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// 17 significant digits, enough to round-trip any finite f64 exactly.
pub fn fmt_f64_exact(v: f64) -> String {
    format!("{v:.16e}")
}

/// Load a CSV file with a header row. The label column may be given by name
/// or by zero-based index; every other column is parsed as a real number.
/// Label values map to class indices in first-appearance order.
pub fn load_csv<P: AsRef<Path>>(path: P, label_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|source| ScreenError::Csv {
            path: path.into(),
            source,
        })?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|source| ScreenError::Csv {
            path: path.into(),
            source,
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .or_else(|| {
            label_column
                .parse::<usize>()
                .ok()
                .filter(|&j| j < headers.len())
        })
        .ok_or_else(|| ScreenError::LabelColumnNotFound(label_column.to_string()))?;

    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(ScreenError::NoFeatures);
    }

    let mut features = Vec::new();
    let mut labels = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, usize> = HashMap::new();

    for (rec_no, record) in reader.records().enumerate() {
        let record = record.map_err(|source| ScreenError::Csv {
            path: path.into(),
            source,
        })?;
        // +2: one for the header line, one for 1-based counting.
        let file_row = rec_no + 2;
        let mut feat_col = 0usize;
        for (j, field) in record.iter().enumerate() {
            let field = field.trim();
            if j == label_idx {
                let next = class_names.len();
                let idx = *class_index.entry(field.to_string()).or_insert_with(|| {
                    class_names.push(field.to_string());
                    next
                });
                labels.push(idx);
            } else {
                let column = &feature_names[feat_col];
                let v: f64 = field.parse().map_err(|_| ScreenError::Parse {
                    row: file_row,
                    column: column.clone(),
                    value: field.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(ScreenError::NonFinite {
                        row: file_row,
                        column: column.clone(),
                    });
                }
                features.push(v);
                feat_col += 1;
            }
        }
    }

    if labels.len() < 2 {
        return Err(ScreenError::TooFewRows(labels.len()));
    }
    if class_names.len() < 2 {
        return Err(ScreenError::SingleClass);
    }

    Dataset::with_names(
        features,
        feature_names.len(),
        labels,
        feature_names,
        class_names,
        headers[label_idx].clone(),
    )
}

/// Disjoint, nonempty groups of column indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
    names: Vec<String>,
}

impl GroupPartition {
    /// Validate and build a partition over a `p`-column dataset.
    pub fn new(groups: Vec<Vec<usize>>, names: Option<Vec<String>>, p: usize) -> Result<Self> {
        if groups.is_empty() {
            return Err(ScreenError::InvalidValue("no groups".into()));
        }
        let names = match names {
            Some(names) => {
                if names.len() != groups.len() {
                    return Err(ScreenError::LengthMismatch(groups.len(), names.len()));
                }
                names
            }
            None => (0..groups.len()).map(|l| format!("g{}", l + 1)).collect(),
        };
        let mut used = vec![false; p];
        for (group, name) in groups.iter().zip(&names) {
            if group.is_empty() {
                return Err(ScreenError::EmptyGroup(name.clone()));
            }
            for &c in group {
                if c >= p {
                    return Err(ScreenError::UnknownColumn(c.to_string()));
                }
                if used[c] {
                    return Err(ScreenError::DuplicateColumn(c.to_string()));
                }
                used[c] = true;
            }
        }
        Ok(GroupPartition { groups, names })
    }

    /// One singleton group per column: marginal screening.
    pub fn singleton(p: usize) -> Result<Self> {
        if p == 0 {
            return Err(ScreenError::NoFeatures);
        }
        let groups = (0..p).map(|j| vec![j]).collect();
        GroupPartition::new(groups, None, p)
    }

    /// Consecutive groups of equal size; `p = r * size`.
    pub fn consecutive(r: usize, size: usize) -> Result<Self> {
        let groups = (0..r)
            .map(|l| (l * size..(l + 1) * size).collect())
            .collect();
        GroupPartition::new(groups, None, r * size)
    }

    pub fn r(&self) -> usize {
        self.groups.len()
    }

    pub fn group(&self, l: usize) -> &[usize] {
        &self.groups[l]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn all_univariate(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }

    /// Serialize in the `name: col,col,...` text format (columns by name).
    pub fn save<W: Write>(&self, dataset: &Dataset, mut w: W) -> std::io::Result<()> {
        for (group, name) in self.groups.iter().zip(&self.names) {
            let cols: Vec<&str> = group
                .iter()
                .map(|&c| dataset.feature_names()[c].as_str())
                .collect();
            writeln!(w, "{}: {}", name, cols.join(","))?;
        }
        Ok(())
    }
}

/// A partition parsed from a group file plus the columns it left out.
#[derive(Debug, Clone)]
pub struct LoadedGroups {
    pub partition: GroupPartition,
    /// Columns of the dataset not mentioned by any group; they are excluded
    /// from screening.
    pub uncovered: Vec<usize>,
}

/// Parse a group file: one `group_name: col,col,...` line per group, columns
/// referenced by header name or zero-based index. Blank lines and lines
/// starting with `#` are skipped.
pub fn load_groups<P: AsRef<Path>>(path: P, dataset: &Dataset) -> Result<LoadedGroups> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| ScreenError::Io {
        path: path.into(),
        source,
    })?;
    let reader = BufReader::new(file);

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut names: Vec<String> = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|source| ScreenError::Io {
            path: path.into(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, cols) = line
            .split_once(':')
            .ok_or_else(|| ScreenError::InvalidValue(format!("malformed group line: {line}")))?;
        let name = name.trim().to_string();
        let mut group = Vec::new();
        for tok in cols.split(',') {
            let tok = tok.trim();
            if tok.is_empty() {
                continue;
            }
            let col = dataset
                .resolve_column(tok)
                .ok_or_else(|| ScreenError::UnknownColumn(tok.to_string()))?;
            group.push(col);
        }
        if group.is_empty() {
            return Err(ScreenError::EmptyGroup(name));
        }
        groups.push(group);
        names.push(name);
    }

    let partition = GroupPartition::new(groups, Some(names), dataset.p())?;
    let mut covered = vec![false; dataset.p()];
    for group in partition.groups() {
        for &c in group {
            covered[c] = true;
        }
    }
    let uncovered = (0..dataset.p()).filter(|&c| !covered[c]).collect();
    Ok(LoadedGroups {
        partition,
        uncovered,
    })
}
