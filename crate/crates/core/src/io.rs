//! File formats shared with the command-line front-end.
//!
//! Every reader validates its input and reports problems as
//! [`Error::Ingest`] naming the file, the 1-based line (the header is line 1)
//! and the offending column.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::copula::EnsembleBlock;
use crate::error::{Error, Result};
use crate::estimation::ProfilePoint;
use crate::marginals::{FeatureTransform, GammaMixture, JglmCoefficients, MarginalField, MarginalModel, Transform};
use crate::numerics::DenseMatrix;
use crate::panel::RainPanel;
use crate::spatial::{Location, LocationTable};

fn ingest(file: &Path, row: usize, column: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Ingest {
        file: file.display().to_string(),
        row,
        column: column.into(),
        message: message.into(),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_error(path: &Path, err: csv::Error) -> Error {
    let row = err.position().map_or(0, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(source) => io_error(path, source),
        kind => ingest(path, row, "-", format!("malformed CSV: {kind:?}")),
    }
}

/// Records of a headed CSV file, with their 1-based line numbers.
struct Table {
    path: std::path::PathBuf,
    header: Vec<String>,
    rows: Vec<(usize, Vec<String>)>,
}

impl Table {
    fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| io_error(path, e))?;
        let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(file);
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| csv_error(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.iter().all(|h| h.is_empty()) {
            return Err(ingest(path, 1, "-", "missing header"));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() != header.len() {
                return Err(ingest(
                    path,
                    line,
                    "-",
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            rows.push((line, record.iter().map(str::to_string).collect()));
        }
        Ok(Self {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    fn expect_header(&self, expected: &[&str]) -> Result<()> {
        for (k, want) in expected.iter().enumerate() {
            match self.header.get(k) {
                Some(h) if h == want => {}
                Some(h) => {
                    return Err(ingest(&self.path, 1, format!("#{}", k + 1), format!("expected header {want:?}, found {h:?}")))
                }
                None => return Err(ingest(&self.path, 1, *want, "missing column")),
            }
        }
        Ok(())
    }

    fn number(&self, line: usize, column: &str, text: &str) -> Result<f64> {
        let v: f64 = text
            .parse()
            .map_err(|_| ingest(&self.path, line, column, format!("not a number: {text:?}")))?;
        if !v.is_finite() {
            return Err(ingest(&self.path, line, column, format!("non-finite value {text:?}")));
        }
        Ok(v)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| io_error(path, e))?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(create(path)?))
}

fn finish(path: &Path, writer: csv::Writer<BufWriter<File>>) -> Result<()> {
    let mut inner = writer
        .into_inner()
        .map_err(|e| io_error(path, std::io::Error::other(e.to_string())))?;
    inner.flush().map_err(|e| io_error(path, e))
}

fn write_row<S: AsRef<[u8]>>(path: &Path, w: &mut csv::Writer<BufWriter<File>>, row: impl IntoIterator<Item = S>) -> Result<()> {
    w.write_record(row).map_err(|e| csv_error(path, e))
}

/// Shortest decimal representation that round-trips; exact zeros print `0`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Writes any serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| io_error(path, std::io::Error::other(e)))?;
    writeln!(out).and_then(|_| out.flush()).map_err(|e| io_error(path, e))
}

fn check_date(path: &Path, line: usize, text: &str) -> Result<()> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d")
        .map(|_| ())
        .map_err(|_| ingest(path, line, "date", format!("not an ISO-8601 date: {text:?}")))
}

// ---------------------------------------------------------------- locations

/// Reads `id,lat,lon,elev`.
pub fn read_locations(path: &Path) -> Result<LocationTable> {
    let t = Table::read(path)?;
    t.expect_header(&["id", "lat", "lon", "elev"])?;
    if t.rows.is_empty() {
        return Err(ingest(path, 2, "id", "no locations"));
    }
    let mut seen = HashMap::new();
    let mut locations = Vec::with_capacity(t.rows.len());
    for (line, row) in &t.rows {
        let id = row[0].clone();
        if id.is_empty() {
            return Err(ingest(path, *line, "id", "empty id"));
        }
        if let Some(first) = seen.insert(id.clone(), *line) {
            return Err(ingest(path, *line, "id", format!("duplicate id {id:?} (first on line {first})")));
        }
        let lat = t.number(*line, "lat", &row[1])?;
        let lon = t.number(*line, "lon", &row[2])?;
        let elev = t.number(*line, "elev", &row[3])?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(ingest(path, *line, "lat", format!("latitude {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(ingest(path, *line, "lon", format!("longitude {lon} outside [-180, 180]")));
        }
        locations.push(Location { id, lat, lon, elev });
    }
    LocationTable::new(locations)
}

pub fn write_locations(path: &Path, locations: &LocationTable) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, ["id", "lat", "lon", "elev"])?;
    for l in locations.iter() {
        write_row(path, &mut w, [l.id.clone(), fmt_f64(l.lat), fmt_f64(l.lon), fmt_f64(l.elev)])?;
    }
    finish(path, w)
}

// ----------------------------------------------------------------- rainfall

/// Reads the wide rainfall file: `date` then one column per location, in
/// exactly the order of `locations`.
pub fn read_rainfall(path: &Path, locations: &LocationTable) -> Result<RainPanel> {
    let t = Table::read(path)?;
    t.expect_header(&["date"])?;
    let ids = locations.ids();
    let columns = &t.header[1..];
    for (k, id) in ids.iter().enumerate() {
        match columns.get(k) {
            Some(c) if c == id => {}
            Some(c) => {
                return Err(ingest(
                    path,
                    1,
                    c.as_str(),
                    format!("column {} should be location {id:?} (locations-file order)", k + 2),
                ))
            }
            None => return Err(ingest(path, 1, id.as_str(), "location missing from header")),
        }
    }
    if let Some(extra) = columns.get(ids.len()) {
        return Err(ingest(path, 1, extra.as_str(), "column is not a known location"));
    }
    if t.rows.is_empty() {
        return Err(ingest(path, 2, "date", "no days"));
    }
    let (n, days) = (ids.len(), t.rows.len());
    let mut labels = Vec::with_capacity(days);
    let mut seen = HashMap::new();
    let mut values = vec![0.0; n * days];
    for (s, (line, row)) in t.rows.iter().enumerate() {
        check_date(path, *line, &row[0])?;
        if let Some(first) = seen.insert(row[0].clone(), *line) {
            return Err(ingest(path, *line, "date", format!("duplicate date {} (first on line {first})", row[0])));
        }
        labels.push(row[0].clone());
        for (i, id) in ids.iter().enumerate() {
            let v = t.number(*line, id, &row[i + 1])?;
            if v < 0.0 {
                return Err(ingest(path, *line, id.as_str(), format!("negative rainfall {v}")));
            }
            values[i * days + s] = v;
        }
    }
    RainPanel::new(ids, labels, values)
}

pub fn write_rainfall(path: &Path, panel: &RainPanel) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, std::iter::once("date").chain(panel.location_ids().iter().map(String::as_str)))?;
    for s in 0..panel.n_days() {
        let row = std::iter::once(panel.day_labels()[s].clone()).chain((0..panel.n_locations()).map(|i| fmt_f64(panel.get(i, s))));
        write_row(path, &mut w, row)?;
    }
    finish(path, w)
}

// ------------------------------------------------------- per-cell long files

/// Validates that a long `date,loc,...` file has exactly one row per
/// (location, day) cell and returns, for each cell `loc * T + day`, the row
/// index.
fn align_cells(t: &Table, ids: &[String], days: &[String]) -> Result<Vec<usize>> {
    let day_index: HashMap<&str, usize> = days.iter().enumerate().map(|(k, d)| (d.as_str(), k)).collect();
    let loc_index: HashMap<&str, usize> = ids.iter().enumerate().map(|(k, d)| (d.as_str(), k)).collect();
    let n_days = days.len();
    let mut cell_row = vec![usize::MAX; ids.len() * n_days];
    for (r, (line, row)) in t.rows.iter().enumerate() {
        let s = *day_index
            .get(row[0].as_str())
            .ok_or_else(|| ingest(&t.path, *line, "date", format!("date {:?} is not in the rainfall file", row[0])))?;
        let i = *loc_index
            .get(row[1].as_str())
            .ok_or_else(|| ingest(&t.path, *line, "loc", format!("location {:?} is not in the locations file", row[1])))?;
        let cell = &mut cell_row[i * n_days + s];
        if *cell != usize::MAX {
            return Err(ingest(
                &t.path,
                *line,
                "loc",
                format!("duplicate entry for {} at {} (first on line {})", row[1], row[0], t.rows[*cell].0),
            ));
        }
        *cell = r;
    }
    if let Some(missing) = cell_row.iter().position(|&r| r == usize::MAX) {
        let (i, s) = (missing / n_days, missing % n_days);
        return Err(ingest(
            &t.path,
            t.rows.last().map_or(1, |r| r.0),
            "loc",
            format!("no entry for location {} on {}", ids[i], days[s]),
        ));
    }
    Ok(cell_row)
}

/// Reads `date,loc,f1,...,fd` into a location-major matrix aligned with
/// `panel` (row `loc * T + day`).
pub fn read_features(path: &Path, panel: &RainPanel) -> Result<DenseMatrix> {
    let t = Table::read(path)?;
    t.expect_header(&["date", "loc"])?;
    let d = t.header.len() - 2;
    if d == 0 {
        return Err(ingest(path, 1, "-", "no feature columns after date,loc"));
    }
    let cells = align_cells(&t, panel.location_ids(), panel.day_labels())?;
    let mut data = Vec::with_capacity(cells.len() * d);
    for &r in &cells {
        let (line, row) = &t.rows[r];
        for k in 0..d {
            data.push(t.number(*line, &t.header[k + 2], &row[k + 2])?);
        }
    }
    DenseMatrix::from_row_major(cells.len(), d, data)
}

pub fn write_features(path: &Path, panel: &RainPanel, features: &DenseMatrix) -> Result<()> {
    let days = panel.n_days();
    let mut w = csv_writer(path)?;
    let header = ["date".to_string(), "loc".to_string()]
        .into_iter()
        .chain((1..=features.cols()).map(|k| format!("f{k}")));
    write_row(path, &mut w, header)?;
    for s in 0..days {
        for (i, id) in panel.location_ids().iter().enumerate() {
            let row = [panel.day_labels()[s].clone(), id.clone()]
                .into_iter()
                .chain(features.row(i * days + s).iter().map(|&v| fmt_f64(v)));
            write_row(path, &mut w, row)?;
        }
    }
    finish(path, w)
}

/// Writes the per-cell marginal laws as `date,loc,p,mu,phi`.
pub fn write_field(path: &Path, panel: &RainPanel, field: &MarginalField) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, ["date", "loc", "p", "mu", "phi"])?;
    for s in 0..panel.n_days() {
        for (i, id) in panel.location_ids().iter().enumerate() {
            let law = field.get(i, s);
            write_row(
                path,
                &mut w,
                [panel.day_labels()[s].clone(), id.clone(), fmt_f64(law.p()), fmt_f64(law.mu()), fmt_f64(law.phi())],
            )?;
        }
    }
    finish(path, w)
}

/// Reads `date,loc,p,mu,phi` for the locations `ids`. Days are taken in
/// order of first appearance and returned with the field.
pub fn read_field(path: &Path, ids: &[String]) -> Result<(Vec<String>, MarginalField)> {
    let t = Table::read(path)?;
    t.expect_header(&["date", "loc", "p", "mu", "phi"])?;
    if t.rows.is_empty() {
        return Err(ingest(path, 2, "date", "no marginal laws"));
    }
    let mut days = Vec::new();
    let mut seen = HashMap::new();
    for (line, row) in &t.rows {
        if !seen.contains_key(row[0].as_str()) {
            check_date(path, *line, &row[0])?;
            seen.insert(row[0].as_str(), ());
            days.push(row[0].clone());
        }
    }
    let cells = align_cells(&t, ids, &days)?;
    let laws = cells
        .iter()
        .map(|&r| {
            let (line, row) = &t.rows[r];
            let p = t.number(*line, "p", &row[2])?;
            let mu = t.number(*line, "mu", &row[3])?;
            let phi = t.number(*line, "phi", &row[4])?;
            GammaMixture::new(p, mu, phi).map_err(|e| {
                let column = if !(0.0..=1.0).contains(&p) {
                    "p"
                } else if !(mu > 0.0) {
                    "mu"
                } else {
                    "phi"
                };
                ingest(path, *line, column, e.to_string())
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((days.clone(), MarginalField::new(ids.len(), days.len(), laws)?))
}

/// Reads `date,loc,p,mu,phi` and checks it covers exactly the days of
/// `panel`, in the same order.
pub fn read_field_for(path: &Path, panel: &RainPanel) -> Result<MarginalField> {
    let (days, field) = read_field(path, panel.location_ids())?;
    if days != panel.day_labels() {
        let k = days.iter().zip(panel.day_labels()).position(|(a, b)| a != b).unwrap_or(days.len().min(panel.n_days()));
        let message = match (days.get(k), panel.day_labels().get(k)) {
            (Some(a), Some(b)) => format!("day {} is {a}, but the rainfall file has {b}", k + 1),
            (None, Some(b)) => format!("missing day {b} present in the rainfall file"),
            (Some(a), None) => format!("day {a} is not in the rainfall file"),
            (None, None) => unreachable!("day lists differ"),
        };
        return Err(ingest(path, 0, "date", message));
    }
    Ok(field)
}

// ---------------------------------------------------------- key=value files

/// Parses `key=value` lines; blank lines and `#` comments are skipped, and
/// keys must be unique.
pub fn parse_key_values(text: &str, file: &Path) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ingest(file, k + 1, "-", format!("expected key=value, found {line:?}")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ingest(file, k + 1, "-", "empty key"));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(ingest(file, k + 1, key, "duplicate key"));
        }
    }
    Ok(map)
}

pub fn read_key_values(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    parse_key_values(&text, path)
}

/// Serializes a fitted marginal model as a `key=value` document.
pub fn write_model(path: &Path, model: &MarginalModel) -> Result<()> {
    let c = &model.coefficients;
    let mut out = create(path)?;
    let mut text = String::from("# joint GLM marginal model\n");
    text += &format!("feature_dim={}\n", FeatureTransform::input_dim(&model.transform));
    match &model.transform {
        Transform::Identity { .. } => text += "transform=identity\n",
        Transform::Standardize { mean, scale } => {
            text += "transform=standardize\n";
            for (k, (m, s)) in mean.iter().zip(scale).enumerate() {
                text += &format!("mean.{}={}\nscale.{}={}\n", k + 1, fmt_f64(*m), k + 1, fmt_f64(*s));
            }
        }
    }
    for (name, intercept, slopes) in [("alpha", c.alpha0, &c.alpha), ("beta", c.beta0, &c.beta), ("gamma", c.gamma0, &c.gamma)] {
        text += &format!("{name}0={}\n", fmt_f64(intercept));
        for (k, v) in slopes.iter().enumerate() {
            text += &format!("{name}.{}={}\n", k + 1, fmt_f64(*v));
        }
    }
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| io_error(path, e))
}

/// Reads a document written by [`write_model`].
pub fn read_model(path: &Path) -> Result<MarginalModel> {
    let kv = read_key_values(path)?;
    let get = |key: &str| -> Result<&String> { kv.get(key).ok_or_else(|| ingest(path, 0, key, "missing key")) };
    let num = |key: &str| -> Result<f64> {
        let text = get(key)?;
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| ingest(path, 0, key, format!("not a finite number: {text:?}")))
    };
    let d: usize = get("feature_dim")?
        .parse()
        .map_err(|_| ingest(path, 0, "feature_dim", "not a nonnegative integer"))?;
    let vector = |name: &str| -> Result<Vec<f64>> { (1..=d).map(|k| num(&format!("{name}.{k}"))).collect() };
    let transform = match get("transform")?.as_str() {
        "identity" => Transform::identity(d),
        "standardize" => Transform::from_parts(vector("mean")?, vector("scale")?)
            .map_err(|e| ingest(path, 0, "scale", e.to_string()))?,
        other => return Err(ingest(path, 0, "transform", format!("unknown transform {other:?}"))),
    };
    let coefficients = JglmCoefficients::new(
        num("alpha0")?,
        vector("alpha")?,
        num("beta0")?,
        vector("beta")?,
        num("gamma0")?,
        vector("gamma")?,
    )
    .map_err(|e| ingest(path, 0, "-", e.to_string()))?;
    MarginalModel::new(transform, coefficients)
}

// ------------------------------------------------------------ model outputs

/// Writes ensembles as `day,replicate,loc_<id>,...`, one row per member;
/// dry cells print as `0`.
pub fn write_ensemble(path: &Path, panel_days: &[String], ids: &[String], blocks: &[EnsembleBlock]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let header = ["day".to_string(), "replicate".to_string()]
        .into_iter()
        .chain(ids.iter().map(|id| format!("loc_{id}")));
    write_row(path, &mut w, header)?;
    for b in blocks {
        if b.n_locations != ids.len() {
            return Err(Error::DimensionMismatch(format!(
                "ensemble has {} locations, header {}",
                b.n_locations,
                ids.len()
            )));
        }
        let label = panel_days
            .get(b.day)
            .ok_or_else(|| Error::Invalid(format!("ensemble day {} has no label", b.day)))?;
        for r in 0..b.m {
            let row = [label.clone(), r.to_string()]
                .into_iter()
                .chain(b.replicate(r).iter().map(|&v| fmt_f64(v)));
            write_row(path, &mut w, row)?;
        }
    }
    finish(path, w)
}

/// Reads an ensemble file written by [`write_ensemble`], checking its
/// columns against `ids` and its days against `panel_days`.
pub fn read_ensemble(path: &Path, panel_days: &[String], ids: &[String]) -> Result<Vec<EnsembleBlock>> {
    let t = Table::read(path)?;
    t.expect_header(&["day", "replicate"])?;
    let expected: Vec<String> = ids.iter().map(|id| format!("loc_{id}")).collect();
    if t.header[2..] != expected[..] {
        let k = t.header[2..]
            .iter()
            .zip(&expected)
            .position(|(a, b)| a != b)
            .unwrap_or(expected.len().min(t.header.len() - 2));
        let column = t.header.get(k + 2).cloned().unwrap_or_else(|| expected[k].clone());
        return Err(ingest(path, 1, column, "ensemble columns must be loc_<id> in locations-file order"));
    }
    let day_index: HashMap<&str, usize> = panel_days.iter().enumerate().map(|(k, d)| (d.as_str(), k)).collect();
    let n = ids.len();
    let mut blocks: Vec<EnsembleBlock> = Vec::new();
    for (line, row) in &t.rows {
        let day = *day_index
            .get(row[0].as_str())
            .ok_or_else(|| ingest(path, *line, "day", format!("day {:?} is not in the rainfall file", row[0])))?;
        let replicate: usize = row[1]
            .parse()
            .map_err(|_| ingest(path, *line, "replicate", format!("not an index: {:?}", row[1])))?;
        if blocks.last().is_none_or(|b| b.day != day) {
            if blocks.iter().any(|b| b.day == day) {
                return Err(ingest(path, *line, "day", "rows of one day must be contiguous"));
            }
            blocks.push(EnsembleBlock {
                day,
                n_locations: n,
                m: 0,
                values: Vec::new(),
            });
        }
        let block = blocks.last_mut().expect("just pushed");
        if replicate != block.m {
            return Err(ingest(path, *line, "replicate", format!("expected replicate {}, found {replicate}", block.m)));
        }
        for (k, text) in row[2..].iter().enumerate() {
            let v = t.number(*line, &expected[k], text)?;
            if v < 0.0 {
                return Err(ingest(path, *line, expected[k].as_str(), format!("negative rainfall {v}")));
            }
            block.values.push(v);
        }
        block.m += 1;
    }
    if blocks.is_empty() {
        return Err(ingest(path, 2, "day", "no ensemble rows"));
    }
    Ok(blocks)
}

/// Writes `theta,score,mc_stderr`.
pub fn write_profile(path: &Path, points: &[ProfilePoint]) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, ["theta", "score", "mc_stderr"])?;
    for p in points {
        write_row(path, &mut w, [fmt_f64(p.theta), fmt_f64(p.score), fmt_f64(p.mc_stderr)])?;
    }
    finish(path, w)
}

/// Writes a headed CSV of already formatted cells.
pub fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv_writer(path)?;
    write_row(path, &mut w, header)?;
    for row in rows {
        write_row(path, &mut w, row)?;
    }
    finish(path, w)
}
