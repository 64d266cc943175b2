//! Dataset ingestion, descriptive statistics, correlation, splitting, and
//! statistics-matched synthesis.
//!
//! The expected input is a UTF-8, comma-delimited CSV with a header row of
//! mix-design feature names (e.g. `C`, `Sfu`, `W`, `AR2`, ...) and one
//! numeric target column (a strength in MPa). Quartiles use linear
//! interpolation on the sorted sample and standard deviations divide by `n`
//! (population convention) throughout the crate.

use std::io::Read;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, SplitMix64};

/// A column-typed numeric table with named features and one target.
///
/// Invariants: all entries finite, `n >= 1`, `d >= 1`, feature names unique.
/// Immutable after construction; safe to share read-only across threads.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub feature_names: Vec<String>,
    pub x: Array2<f64>,
    pub y: Vec<f64>,
    pub target_name: String,
}

impl Dataset {
    pub fn new(
        feature_names: Vec<String>,
        x: Array2<f64>,
        y: Vec<f64>,
        target_name: String,
    ) -> Result<Self> {
        let (n, d) = x.dim();
        if n == 0 || y.is_empty() {
            return Err(Error::EmptyData);
        }
        if d == 0 || feature_names.len() != d {
            return Err(Error::Config(format!(
                "feature_names has {} entries for {} columns",
                feature_names.len(),
                d
            )));
        }
        if y.len() != n {
            return Err(Error::Shape {
                expected: n,
                got: y.len(),
            });
        }
        for i in 0..d {
            for j in (i + 1)..d {
                if feature_names[i] == feature_names[j] {
                    return Err(Error::Config(format!(
                        "duplicate feature name `{}`",
                        feature_names[i]
                    )));
                }
            }
        }
        for (i, row) in x.outer_iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: i + 1,
                        column: feature_names[j].clone(),
                    });
                }
            }
        }
        for (i, v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: target_name.clone(),
                });
            }
        }
        Ok(Dataset {
            feature_names,
            x,
            y,
            target_name,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Row subset in the given index order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let d = self.n_features();
        let mut x = Array2::zeros((indices.len(), d));
        let mut y = Vec::with_capacity(indices.len());
        for (r, &i) in indices.iter().enumerate() {
            x.row_mut(r).assign(&self.x.row(i));
            y.push(self.y[i]);
        }
        Dataset {
            feature_names: self.feature_names.clone(),
            x,
            y,
            target_name: self.target_name.clone(),
        }
    }

    /// Serialize as CSV: features in order, target last.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.feature_names.join(","));
        out.push(',');
        out.push_str(&self.target_name);
        out.push('\n');
        for (i, row) in self.x.outer_iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|v| format_f64(*v)).collect();
            out.push_str(&cells.join(","));
            out.push(',');
            out.push_str(&format_f64(self.y[i]));
            out.push('\n');
        }
        out
    }
}

/// Shortest decimal form that round-trips the exact double.
pub(crate) fn format_f64(v: f64) -> String {
    let mut buf = ryu_like(v);
    if buf.ends_with(".0") {
        buf.truncate(buf.len() - 2);
    }
    buf
}

fn ryu_like(v: f64) -> String {
    // `{}` on f64 is the shortest representation that parses back exactly.
    format!("{v}")
}

/// Seven descriptive statistics for one column.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ColumnStats {
    pub name: String,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
    pub max: f64,
}

impl ColumnStats {
    fn validate(&self) -> Result<()> {
        let anchors = [self.min, self.p25, self.p50, self.p75, self.max];
        if anchors.iter().any(|v| !v.is_finite()) || !self.std.is_finite() {
            return Err(Error::InvalidStats {
                column: self.name.clone(),
                reason: "non-finite statistic".into(),
            });
        }
        if self.std < 0.0 {
            return Err(Error::InvalidStats {
                column: self.name.clone(),
                reason: "negative standard deviation".into(),
            });
        }
        for w in anchors.windows(2) {
            if w[0] > w[1] {
                return Err(Error::InvalidStats {
                    column: self.name.clone(),
                    reason: format!("quantile anchors not ordered: {anchors:?}"),
                });
            }
        }
        Ok(())
    }
}

/// Per-column statistics table; features in dataset order, target last.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StatsTable {
    pub columns: Vec<ColumnStats>,
}

impl StatsTable {
    pub fn column(&self, name: &str) -> Option<&ColumnStats> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("column,mean,std,min,p25,p50,p75,max\n");
        for c in &self.columns {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                c.name,
                format_f64(c.mean),
                format_f64(c.std),
                format_f64(c.min),
                format_f64(c.p25),
                format_f64(c.p50),
                format_f64(c.p75),
                format_f64(c.max),
            ));
        }
        out
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let expected = ["column", "mean", "std", "min", "p25", "p50", "p75", "max"];
        for name in &expected {
            if !headers.iter().any(|h| h == *name) {
                return Err(Error::Schema((*name).to_string()));
            }
        }
        let pos: Vec<usize> = expected
            .iter()
            .map(|name| headers.iter().position(|h| h == *name).unwrap())
            .collect();
        let mut columns = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let get = |k: usize| -> Result<f64> {
                let raw = rec.get(pos[k]).unwrap_or("");
                raw.trim().parse::<f64>().map_err(|_| Error::Parse {
                    row: i + 1,
                    column: expected[k].to_string(),
                    value: raw.to_string(),
                })
            };
            let c = ColumnStats {
                name: rec.get(pos[0]).unwrap_or("").to_string(),
                mean: get(1)?,
                std: get(2)?,
                min: get(3)?,
                p25: get(4)?,
                p50: get(5)?,
                p75: get(6)?,
                max: get(7)?,
            };
            columns.push(c);
        }
        if columns.is_empty() {
            return Err(Error::EmptyData);
        }
        Ok(StatsTable { columns })
    }
}

/// Pearson coefficients over features plus the target (last row/column).
///
/// Constant columns are flagged and their off-diagonal entries set to 0
/// rather than NaN; the diagonal is exactly 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrMatrix {
    pub names: Vec<String>,
    pub values: Array2<f64>,
    pub constant_columns: Vec<usize>,
}

impl CorrMatrix {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("column");
        for n in &self.names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for (i, n) in self.names.iter().enumerate() {
            out.push_str(n);
            for j in 0..self.names.len() {
                out.push(',');
                out.push_str(&format_f64(self.values[[i, j]]));
            }
            out.push('\n');
        }
        out
    }
}

/// A deterministic train/test partition of row indices.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Load a CSV file. `schema` fixes the feature set and order; `None` takes
/// every non-target header column in file order. The target column is
/// required either way.
pub fn load_csv<P: AsRef<Path>>(
    path: P,
    schema: Option<&[String]>,
    target: &str,
) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    load_csv_reader(file, schema, target)
}

pub fn load_csv_reader<R: Read>(
    reader: R,
    schema: Option<&[String]>,
    target: &str,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = match rdr.headers() {
        Ok(h) => h.iter().map(|s| s.to_string()).collect(),
        Err(_) => return Err(Error::EmptyData),
    };
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::EmptyData);
    }
    let target_pos = headers
        .iter()
        .position(|h| h == target)
        .ok_or_else(|| Error::Schema(target.to_string()))?;

    let feature_names: Vec<String> = match schema {
        Some(names) => {
            for name in names {
                if !headers.iter().any(|h| h == name) {
                    return Err(Error::Schema(name.clone()));
                }
            }
            names.to_vec()
        }
        None => headers
            .iter()
            .filter(|h| h.as_str() != target)
            .cloned()
            .collect(),
    };
    if feature_names.is_empty() {
        return Err(Error::Config("no feature columns".into()));
    }
    let feature_pos: Vec<usize> = feature_names
        .iter()
        .map(|n| headers.iter().position(|h| h == n).unwrap())
        .collect();

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut y = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let parse = |pos: usize, column: &str| -> Result<f64> {
            let raw = rec.get(pos).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                row: i + 1,
                column: column.to_string(),
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i + 1,
                    column: column.to_string(),
                });
            }
            Ok(v)
        };
        let mut row = Vec::with_capacity(feature_pos.len());
        for (k, &pos) in feature_pos.iter().enumerate() {
            row.push(parse(pos, &feature_names[k])?);
        }
        y.push(parse(target_pos, target)?);
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyData);
    }
    let d = feature_names.len();
    let mut x = Array2::zeros((rows.len(), d));
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            x[[i, j]] = *v;
        }
    }
    Dataset::new(feature_names, x, y, target.to_string())
}

/// Quantile by linear interpolation on a sorted sample:
/// `h = q (n - 1)`, `p = x[floor h] + (h - floor h) (x[ceil h] - x[floor h])`.
fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn column_stats(name: &str, values: &[f64]) -> ColumnStats {
    let n = values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // Canonical (sorted) summation order keeps results permutation-invariant.
    let mean = sorted.iter().sum::<f64>() / n;
    let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    ColumnStats {
        name: name.to_string(),
        mean,
        std: var.sqrt(),
        min: sorted[0],
        p25: quantile_sorted(&sorted, 0.25),
        p50: quantile_sorted(&sorted, 0.50),
        p75: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    }
}

/// Descriptive statistics per column, population std, interpolated quartiles.
/// Features first, target last.
pub fn summarize(ds: &Dataset) -> StatsTable {
    let mut columns = Vec::with_capacity(ds.n_features() + 1);
    for (j, name) in ds.feature_names.iter().enumerate() {
        let col: Vec<f64> = ds.x.column(j).to_vec();
        columns.push(column_stats(name, &col));
    }
    columns.push(column_stats(&ds.target_name, &ds.y));
    StatsTable { columns }
}

/// Pearson correlation matrix over features plus the target.
pub fn pearson_matrix(ds: &Dataset) -> Result<CorrMatrix> {
    let n = ds.n_samples();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let d = ds.n_features();
    let k = d + 1;
    let mut cols: Vec<Vec<f64>> = (0..d).map(|j| ds.x.column(j).to_vec()).collect();
    cols.push(ds.y.clone());
    let nf = n as f64;
    let means: Vec<f64> = cols.iter().map(|c| c.iter().sum::<f64>() / nf).collect();
    let sds: Vec<f64> = cols
        .iter()
        .zip(&means)
        .map(|(c, m)| (c.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / nf).sqrt())
        .collect();
    let constant_columns: Vec<usize> = (0..k).filter(|&j| sds[j] == 0.0).collect();

    let mut values = Array2::zeros((k, k));
    for i in 0..k {
        values[[i, i]] = 1.0;
        for j in (i + 1)..k {
            let r = if sds[i] == 0.0 || sds[j] == 0.0 {
                0.0
            } else {
                let cov = cols[i]
                    .iter()
                    .zip(&cols[j])
                    .map(|(a, b)| (a - means[i]) * (b - means[j]))
                    .sum::<f64>()
                    / nf;
                (cov / (sds[i] * sds[j])).clamp(-1.0, 1.0)
            };
            values[[i, j]] = r;
            values[[j, i]] = r;
        }
    }
    let mut names = ds.feature_names.clone();
    names.push(ds.target_name.clone());
    Ok(CorrMatrix {
        names,
        values,
        constant_columns,
    })
}

/// Seeded uniform shuffle split; the first `floor(ratio * n)` permuted
/// indices are the training set.
pub fn split(ds: &Dataset, ratio: f64, seed: u64) -> Result<SplitIndices> {
    split_n(ds.n_samples(), ratio, seed)
}

/// Same as [`split`] but on a bare row count.
pub fn split_n(n: usize, ratio: f64, seed: u64) -> Result<SplitIndices> {
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} not in (0, 1)")));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = SplitMix64::new(seed);
    rng.shuffle(&mut perm);
    let n_train = (ratio * n as f64).floor() as usize;
    let test = perm.split_off(n_train);
    Ok(SplitIndices {
        train: perm,
        test,
        seed,
        ratio,
    })
}

/// A named response surface used by the synthetic generator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub enum GroundTruth {
    /// Constant target.
    Constant(f64),
    /// Smooth strength-like surface: rises with AR2, Sfu, and SF, falls with
    /// W, with a mild AR2·SF interaction. Requires those four columns.
    CsSmooth,
    /// Affine function of named features.
    Linear {
        intercept: f64,
        terms: Vec<(String, f64)>,
    },
}

impl GroundTruth {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "cs_smooth" => Ok(GroundTruth::CsSmooth),
            other => {
                if let Some(v) = other.strip_prefix("constant:") {
                    let c: f64 = v
                        .parse()
                        .map_err(|_| Error::Config(format!("bad constant in `{other}`")))?;
                    Ok(GroundTruth::Constant(c))
                } else {
                    Err(Error::Config(format!(
                        "unknown ground truth `{other}` (expected `cs_smooth` or `constant:<v>`)"
                    )))
                }
            }
        }
    }

    fn required_features(&self) -> Vec<String> {
        match self {
            GroundTruth::Constant(_) => vec![],
            GroundTruth::CsSmooth => ["AR2", "Sfu", "SF", "W"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            GroundTruth::Linear { terms, .. } => terms.iter().map(|(n, _)| n.clone()).collect(),
        }
    }

    fn eval(&self, idx: &[usize], row: &[f64]) -> f64 {
        match self {
            GroundTruth::Constant(c) => *c,
            GroundTruth::CsSmooth => {
                let ar2 = row[idx[0]];
                let sfu = row[idx[1]];
                let sf = row[idx[2]];
                let w = row[idx[3]];
                15.0 + 1.1 * ar2 + 0.45 * sfu + 2.2 * sf - 0.03 * w + 0.008 * ar2 * sf
            }
            GroundTruth::Linear { intercept, terms } => {
                let mut v = *intercept;
                for (k, (_, coef)) in terms.iter().enumerate() {
                    v += coef * row[idx[k]];
                }
                v
            }
        }
    }
}

/// Draw a dataset whose feature marginals follow the piecewise-linear
/// inverse CDF through each column's five quantile anchors, with
/// `y = ground_truth(x) + Normal(0, noise_std)`.
///
/// Every synthesized value lies in the column's `[min, max]` exactly. The
/// feature stream and the noise stream are independent substreams of `seed`,
/// so the feature matrix is identical across different `noise_std` values.
pub fn synthesize(
    stats: &StatsTable,
    ground_truth: &GroundTruth,
    noise_std: f64,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::EmptyData);
    }
    if noise_std.is_nan() || noise_std < 0.0 {
        return Err(Error::Config(format!("noise_std {noise_std} must be >= 0")));
    }
    if stats.columns.len() < 2 {
        return Err(Error::Config(
            "stats table needs at least one feature and the target".into(),
        ));
    }
    let features = &stats.columns[..stats.columns.len() - 1];
    let target_name = stats.columns.last().unwrap().name.clone();
    for c in features {
        c.validate()?;
    }
    let names: Vec<String> = features.iter().map(|c| c.name.clone()).collect();
    let gt_idx: Vec<usize> = ground_truth
        .required_features()
        .iter()
        .map(|need| {
            names
                .iter()
                .position(|n| n == need)
                .ok_or_else(|| Error::UnknownFeature(need.clone()))
        })
        .collect::<Result<Vec<usize>>>()?;

    let d = features.len();
    let mut feat_rng = SplitMix64::new(derive_seed(seed, 0));
    let mut noise_rng = SplitMix64::new(derive_seed(seed, 1));
    let mut x = Array2::zeros((n, d));
    let mut y = Vec::with_capacity(n);
    let mut row = vec![0.0; d];
    for i in 0..n {
        for (j, c) in features.iter().enumerate() {
            let anchors = [c.min, c.p25, c.p50, c.p75, c.max];
            let u = feat_rng.next_f64() * 4.0;
            let k = (u.floor() as usize).min(3);
            let frac = u - k as f64;
            let v = anchors[k] + frac * (anchors[k + 1] - anchors[k]);
            row[j] = v;
            x[[i, j]] = v;
        }
        let mut target = ground_truth.eval(&gt_idx, &row);
        if noise_std > 0.0 {
            target += noise_std * noise_rng.standard_normal();
        }
        y.push(target);
    }
    Dataset::new(names, x, y, target_name)
}

fn stats_from_rows(rows: &[(&str, [f64; 7])]) -> StatsTable {
    StatsTable {
        columns: rows
            .iter()
            .map(|(name, v)| ColumnStats {
                name: name.to_string(),
                mean: v[0],
                std: v[1],
                min: v[2],
                p25: v[3],
                p50: v[4],
                p75: v[5],
                max: v[6],
            })
            .collect(),
    }
}

/// Bundled marginal statistics profile for the compressive-strength schema.
/// Columns: mean, std, min, p25, p50, p75, max. Specimen geometry columns are
/// treated as linear centimetre dimensions even where source sheets label
/// them as volumes.
pub fn table1_stats() -> StatsTable {
    stats_from_rows(&[
        ("C", [453.18, 125.99, 180.0, 405.0, 450.0, 500.0, 980.0]),
        ("Sfu", [21.32, 29.61, 0.0, 0.0, 0.0, 48.0, 120.0]),
        ("Fagg", [646.09, 266.32, 0.0, 617.75, 712.0, 778.75, 1250.0]),
        ("CSA", [849.82, 291.72, 0.0, 800.0, 898.0, 1080.0, 1200.0]),
        ("RS", [676.71, 216.91, 0.0, 628.0, 724.0, 800.0, 980.0]),
        ("SP", [6.18, 6.67, 0.0, 0.93, 4.2, 9.9, 35.0]),
        ("FA", [18.73, 41.74, 0.0, 0.0, 0.0, 0.0, 135.0]),
        ("W", [184.01, 182.36, 125.0, 156.0, 172.0, 186.0, 805.0]),
        ("W/B", [0.36, 0.07, 0.14, 0.3, 0.35, 0.42, 0.55]),
        ("SF", [0.73, 1.45, 0.0, 0.0, 0.0, 0.9, 14.18]),
        ("AR1", [37.84, 44.26, 0.0, 0.0, 40.0, 64.0, 250.0]),
        ("PPF", [0.45, 0.76, 0.0, 0.0, 0.15, 0.57, 4.0]),
        ("AR2", [8.43, 12.35, 0.0, 3.5, 6.0, 8.33, 60.0]),
        ("HT", [16.01, 9.18, 0.0, 20.0, 20.0, 23.0, 23.0]),
        ("Cage", [26.21, 19.56, 1.0, 7.0, 28.0, 28.0, 91.0]),
        ("Swidth", [11.79, 3.08, 0.0, 10.0, 10.0, 15.0, 30.0]),
        ("Slength", [11.79, 3.08, 0.0, 10.0, 10.0, 15.0, 30.0]),
        ("Sheight", [11.79, 3.08, 0.0, 10.0, 10.0, 15.0, 30.0]),
        ("CS", [55.31, 45.82, 18.39, 38.0, 53.38, 70.8, 138.75]),
    ])
}

/// Bundled marginal statistics profile for the flexural-strength schema.
pub fn table2_stats() -> StatsTable {
    stats_from_rows(&[
        ("C", [468.28, 134.92, 200.0, 420.0, 450.0, 500.0, 980.0]),
        ("Sfu", [16.09, 26.07, 0.0, 0.0, 0.0, 40.0, 120.0]),
        ("Fagg", [635.47, 290.61, 0.0, 617.0, 712.0, 823.0, 1250.0]),
        ("CSA", [918.89, 389.03, 0.0, 800.0, 939.0, 1110.0, 1200.0]),
        ("RS", [703.98, 214.21, 0.0, 628.0, 729.0, 823.0, 980.0]),
        ("SP", [6.83, 6.36, 0.0, 2.0, 5.16, 12.5, 18.68]),
        ("FA", [19.37, 40.53, 0.0, 2.0, 0.0, 0.0, 140.0]),
        ("W", [178.03, 42.65, 125.0, 158.0, 175.0, 186.0, 372.4]),
        ("W/B", [0.36, 0.07, 0.25, 0.3, 0.35, 0.43, 0.55]),
        ("SF", [0.92, 1.70, 0.0, 0.0, 0.0, 1.0, 14.18]),
        ("AR1", [40.67, 49.99, 0.0, 0.0, 42.0, 64.0, 250.0]),
        ("PPF", [0.66, 0.94, 0.0, 0.0, 0.38, 0.75, 4.0]),
        ("AR2", [5.59, 5.81, 0.0, 0.55, 4.0, 8.3, 24.19]),
        ("HT", [18.08, 7.74, 0.0, 20.0, 20.0, 23.0, 23.0]),
        ("Cage", [24.72, 16.89, 1.0, 7.0, 28.0, 28.0, 91.0]),
        ("Swidth", [9.12, 3.84, 0.0, 8.0, 10.0, 10.0, 15.0]),
        ("Slength", [40.01, 16.11, 0.0, 40.0, 40.0, 50.0, 72.0]),
        ("Sheight", [9.37, 3.79, 0.0, 10.0, 10.0, 10.0, 15.0]),
        ("FS", [9.48, 14.73, 1.0, 5.03, 6.5, 9.24, 14.9]),
    ])
}

/// Bundled marginal statistics profile for the tensile-strength schema.
pub fn table3_stats() -> StatsTable {
    stats_from_rows(&[
        ("C", [431.19, 122.03, 180.0, 417.0, 446.0, 468.0, 800.0]),
        ("Sfu", [12.13, 20.39, 0.0, 0.0, 0.0, 26.0, 65.0]),
        ("Fagg", [700.40, 143.11, 0.0, 620.0, 712.0, 823.0, 960.0]),
        ("CSA", [868.22, 253.13, 0.0, 758.88, 875.0, 1080.0, 1200.0]),
        ("RS", [693.87, 150.99, 0.0, 620.0, 712.0, 823.0, 980.0]),
        ("SP", [5.27, 6.13, 0.0, 0.0, 4.2, 5.48, 18.68]),
        ("FA", [27.42, 52.33, 0.0, 0.0, 0.0, 0.0, 140.0]),
        ("W", [181.42, 19.64, 156.0, 163.8, 177.1, 198.0, 242.0]),
        ("W/B", [0.39, 0.07, 0.25, 0.34, 0.4, 0.45, 0.48]),
        ("SF", [0.73, 1.27, 0.0, 0.0, 0.0, 1.0, 6.1]),
        ("AR1", [41.20, 32.78, 0.0, 0.0, 46.67, 80.0, 80.0]),
        ("PPF", [0.67, 1.00, 0.0, 0.0, 0.25, 0.9, 4.0]),
        ("AR2", [5.27, 4.53, 0.0, 3.29, 5.31, 6.0, 24.19]),
        ("HT", [16.63, 8.57, 0.0, 20.0, 20.0, 22.0, 23.0]),
        ("Cage", [24.83, 16.49, 1.0, 14.0, 28.0, 28.0, 91.0]),
        ("Sdiameter", [7.89, 5.74, 0.0, 0.0, 10.0, 10.0, 15.0]),
        ("Sheight", [16.28, 11.86, 0.0, 0.0, 20.0, 30.0, 30.0]),
        ("TS", [4.99, 8.69, 0.39, 2.7, 3.74, 4.94, 9.2]),
    ])
}

/// Look up a bundled stats profile by preset name.
pub fn stats_preset(name: &str) -> Result<StatsTable> {
    match name {
        "table1" => Ok(table1_stats()),
        "table2" => Ok(table2_stats()),
        "table3" => Ok(table3_stats()),
        other => Err(Error::Config(format!(
            "unknown stats preset `{other}` (expected table1, table2, or table3)"
        ))),
    }
}
