//! Case sets on disk: `conditions.csv` with one row per case and
//! `profiles/case_<id>.csv` with the reference profiles of each case.
//!
//! Every file starts with a `# fcaug <kind>, format_version = 1` line.
//! Numbers are written in the shortest form that parses back to the same
//! `f64`, so a save/load round trip is exact.

use std::fs;
use std::path::{Path, PathBuf};

use fcaug_core::data::{CaseRecord, Provenance};
use fcaug_core::fcmodel::OperatingConditions;

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
pub const CONDITIONS_FILE: &str = "conditions.csv";
pub const PROFILES_DIR: &str = "profiles";

/// Columns of `conditions.csv` in file order.
pub const CONDITION_COLUMNS: [&str; 13] = [
    "case_id",
    "provenance",
    "t_in",
    "dt",
    "p_in_an",
    "dp_an",
    "p_in_ca",
    "dp_ca",
    "rh_an_in",
    "rh_ca_in",
    "stoich_an",
    "stoich_ca",
    "i_cell",
];

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn profile_path(dir: &Path, case_id: u32) -> PathBuf {
    dir.join(PROFILES_DIR).join(format!("case_{case_id}.csv"))
}

fn version_line(kind: &str) -> String {
    format!("# fcaug {kind}, format_version = {FORMAT_VERSION}")
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_text(kind: &str, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(header).map_err(|e| Error::Data(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| Error::Data(e.to_string()))?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Error::Data(e.to_string()))?).expect("csv output is utf-8");
    Ok(format!("{}\n{body}", version_line(kind)))
}

/// Writes `records` under `dir`, replacing existing files of the same name.
pub fn save_cases(dir: &Path, records: &[CaseRecord], y: &[f64]) -> Result<()> {
    let rows: Vec<Vec<String>> = records
        .iter()
        .map(|r| {
            let c = &r.conditions;
            let provenance = match r.provenance {
                Provenance::Synthetic => "synthetic",
                Provenance::External => "external",
            };
            let mut row = vec![r.case_id.to_string(), provenance.to_string()];
            row.extend(
                [c.t_in, c.dt, c.p_in_an, c.dp_an, c.p_in_ca, c.dp_ca, c.rh_an_in, c.rh_ca_in, c.stoich_an, c.stoich_ca, c.i_cell]
                    .map(num),
            );
            row
        })
        .collect();
    write_file(&dir.join(CONDITIONS_FILE), &csv_text("conditions", &CONDITION_COLUMNS, &rows)?)?;
    for r in records {
        if r.lambda_data.len() != y.len() {
            return Err(Error::Data(format!("case {}: profile length {} does not match the grid", r.case_id, r.lambda_data.len())));
        }
        let mut header = vec!["y", "lambda_data"];
        if r.j_data.is_some() {
            header.push("j_data");
        }
        let rows: Vec<Vec<String>> = (0..y.len())
            .map(|n| {
                let mut row = vec![num(y[n]), num(r.lambda_data[n])];
                if let Some(j) = &r.j_data {
                    row.push(num(j[n]));
                }
                row
            })
            .collect();
        write_file(&profile_path(dir, r.case_id), &csv_text("profile", &header, &rows)?)?;
    }
    Ok(())
}

struct Table {
    path: PathBuf,
    header: Vec<String>,
    /// `(line, fields)`.
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path, kind: &str) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let first = text.lines().next().unwrap_or("");
        if first.trim() != version_line(kind) {
            return Err(Error::artifact(path, format!("expected first line `{}`, found `{first}`", version_line(kind))));
        }
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| Error::schema(path, 2, "", e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                Error::schema(path, line, "", e.to_string())
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            rows.push((line, rec));
        }
        Ok(Self { path: path.to_path_buf(), header, rows })
    }

    /// Checks that `required` are present and nothing outside
    /// `required ∪ optional` is.
    fn check_columns(&self, required: &[&str], optional: &[&str]) -> Result<()> {
        for c in required {
            if !self.header.iter().any(|h| h == c) {
                return Err(Error::schema(&self.path, 2, c, "missing column"));
            }
        }
        for h in &self.header {
            if !required.contains(&h.as_str()) && !optional.contains(&h.as_str()) {
                return Err(Error::schema(&self.path, 2, h, "unknown column"));
            }
        }
        Ok(())
    }

    fn col(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    fn field<'a>(&self, row: &'a (u64, csv::StringRecord), name: &str) -> Result<&'a str> {
        let c = self.col(name).expect("column checked");
        row.1.get(c).map(str::trim).ok_or_else(|| Error::schema(&self.path, row.0, name, "missing field"))
    }

    fn float(&self, row: &(u64, csv::StringRecord), name: &str) -> Result<f64> {
        let s = self.field(row, name)?;
        match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::schema(&self.path, row.0, name, format!("`{s}` is not a finite number"))),
        }
    }
}

/// Reads the case set under `dir` and checks every profile against the
/// node grid `y`.
pub fn load_cases(dir: &Path, y: &[f64]) -> Result<Vec<CaseRecord>> {
    let table = Table::read(&dir.join(CONDITIONS_FILE), "conditions")?;
    table.check_columns(&CONDITION_COLUMNS, &[])?;
    let mut records: Vec<CaseRecord> = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let id_text = table.field(row, "case_id")?;
        let case_id: u32 =
            id_text.parse().map_err(|_| Error::schema(&table.path, row.0, "case_id", format!("`{id_text}` is not a case id")))?;
        if records.iter().any(|r| r.case_id == case_id) {
            return Err(Error::schema(&table.path, row.0, "case_id", format!("duplicate case id {case_id}")));
        }
        let provenance = match table.field(row, "provenance")? {
            "synthetic" => Provenance::Synthetic,
            "external" => Provenance::External,
            other => return Err(Error::schema(&table.path, row.0, "provenance", format!("unknown provenance `{other}`"))),
        };
        let f = |name| table.float(row, name);
        let conditions = OperatingConditions {
            case_id,
            t_in: f("t_in")?,
            dt: f("dt")?,
            p_in_an: f("p_in_an")?,
            dp_an: f("dp_an")?,
            p_in_ca: f("p_in_ca")?,
            dp_ca: f("dp_ca")?,
            rh_an_in: f("rh_an_in")?,
            rh_ca_in: f("rh_ca_in")?,
            stoich_an: f("stoich_an")?,
            stoich_ca: f("stoich_ca")?,
            i_cell: f("i_cell")?,
        };
        let (lambda_data, j_data) = load_profile(&profile_path(dir, case_id), y)?;
        let record = CaseRecord { case_id, conditions, lambda_data, j_data, provenance };
        record.validate(y.len()).map_err(|e| Error::schema(&table.path, row.0, "", e.to_string()))?;
        records.push(record);
    }
    Ok(records)
}

fn load_profile(path: &Path, y: &[f64]) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let table = Table::read(path, "profile")?;
    table.check_columns(&["y", "lambda_data"], &["j_data"])?;
    if table.rows.len() != y.len() {
        return Err(Error::artifact(path, format!("{} rows, the grid has {} nodes", table.rows.len(), y.len())));
    }
    let has_j = table.col("j_data").is_some();
    let mut lambda = Vec::with_capacity(y.len());
    let mut j = Vec::with_capacity(if has_j { y.len() } else { 0 });
    for (row, &y_n) in table.rows.iter().zip(y) {
        let y_file = table.float(row, "y")?;
        if (y_file - y_n).abs() > 1e-9 {
            return Err(Error::schema(path, row.0, "y", format!("{y_file} does not match grid node {y_n}")));
        }
        lambda.push(table.float(row, "lambda_data")?);
        if has_j {
            j.push(table.float(row, "j_data")?);
        }
    }
    Ok((lambda, has_j.then_some(j)))
}
