//! Output records and renderers. All three formats are deterministic:
//! same input bytes, same output bytes.

use serde::Serialize;

/// Left-aligned columns separated by two spaces, no trailing whitespace.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut push_row = |cells: &[String]| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i + 1 == cols {
                line.push_str(cell);
            } else {
                line.push_str(&format!("{cell:<w$}  ", w = widths[i]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    push_row(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        push_row(row);
    }
    out
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("records serialize");
    out.push('\n');
    out
}

pub fn csv_rows(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(headers).expect("csv header");
    for row in rows {
        writer.write_record(row).expect("csv row");
    }
    String::from_utf8(writer.into_inner().expect("csv flush")).expect("csv is utf-8")
}

#[derive(Serialize)]
pub struct RgRecord {
    pub set: Vec<String>,
    pub signature: Vec<String>,
    pub irreducible: bool,
    pub redundancy: usize,
}

#[derive(Serialize)]
pub struct SetRecord {
    pub set: Vec<String>,
    pub signature: Vec<String>,
}

#[derive(Serialize)]
pub struct DmRecord {
    pub m_plus: Vec<String>,
    pub m_zero: Vec<String>,
    pub m_minus: Vec<String>,
    pub x_plus: Vec<String>,
    pub x_zero: Vec<String>,
    pub x_minus: Vec<String>,
}

#[derive(Serialize)]
pub struct DetectRecord {
    pub operator: String,
    pub detectable: Vec<String>,
}

#[derive(Serialize)]
pub struct IsolateRecord {
    pub from: Vec<String>,
    pub wrt: Vec<String>,
    pub isolable: bool,
    pub witness: Option<String>,
}

#[derive(Serialize)]
pub struct MatrixRecord {
    pub faults: Vec<String>,
    pub isolable: Vec<Vec<bool>>,
}

#[derive(Serialize)]
pub struct ResidualRecord {
    pub set: Vec<String>,
    pub residual_equation: String,
    pub expression: String,
    pub sensitivity: String,
    pub variance: f64,
}

#[derive(Serialize)]
pub struct FusionRecord {
    pub target_fault: String,
    pub weights: Vec<f64>,
    pub variance: f64,
    pub residual_covariance: Vec<Vec<f64>>,
    pub expression: String,
    pub sensitivity: String,
}

#[derive(Serialize)]
pub struct ResidualReport {
    pub residuals: Vec<ResidualRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fusion: Option<FusionRecord>,
}

/// Braced id list, mirroring the display of equation sets.
pub fn braced(ids: &[String]) -> String {
    format!("{{{}}}", ids.join(","))
}

/// Shortest f64 rendering (Rust's default float Display).
pub fn num(x: f64) -> String {
    format!("{x}")
}
