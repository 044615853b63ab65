//! Time-series and dataset CSV files.
//!
//! Series files have the header `t,e,u,i,u_s,u_e,u_t,z`, `.` decimals, `\n`
//! line ends and 17 significant digits, so writing then reading reproduces
//! every value exactly. Datasets for fitting use the header `t,e,i`.

use std::fmt::Write as _;

use dbmd_core::{Dataset, Record, Sample, TimeSeries};

pub const SERIES_HEADER: [&str; 8] = ["t", "e", "u", "i", "u_s", "u_e", "u_t", "z"];
pub const DATASET_HEADER: [&str; 3] = ["t", "e", "i"];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("expected header `{expected}`, found `{found}`")]
    Header { expected: String, found: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
}

pub fn write_series(series: &TimeSeries) -> String {
    let mut out = String::with_capacity(200 * (series.len() + 1));
    out.push_str(&SERIES_HEADER.join(","));
    out.push('\n');
    for s in &series.samples {
        let v = [s.t, s.e, s.u, s.i, s.u_s, s.u_e, s.u_t, s.z];
        for (k, x) in v.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            write!(out, "{x:.16e}").expect("write to String");
        }
        out.push('\n');
    }
    out
}

fn rows(text: &str, header: &[&str]) -> Result<Vec<Vec<f64>>, CsvError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(CsvError::Header {
            expected: header.join(","),
            found: found.join(","),
        });
    }
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        let vals = rec
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| CsvError::Row {
                    row,
                    message: format!("`{f}` is not a number"),
                })
            })
            .collect::<Result<Vec<f64>, _>>()?;
        out.push(vals);
    }
    Ok(out)
}

pub fn read_series(text: &str) -> Result<TimeSeries, CsvError> {
    let samples = rows(text, &SERIES_HEADER)?
        .into_iter()
        .map(|v| Sample {
            t: v[0],
            e: v[1],
            u: v[2],
            i: v[3],
            u_s: v[4],
            u_e: v[5],
            u_t: v[6],
            z: v[7],
        })
        .collect();
    Ok(TimeSeries::from_samples(samples))
}

pub fn write_dataset(data: &Dataset) -> String {
    let mut out = DATASET_HEADER.join(",");
    out.push('\n');
    for r in &data.records {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", r.t, r.e, r.i).expect("write to String");
    }
    out
}

pub fn read_dataset(text: &str, name: &str, area: f64) -> Result<Dataset, CsvError> {
    let records = rows(text, &DATASET_HEADER)?
        .into_iter()
        .map(|v| Record {
            t: v[0],
            e: v[1],
            i: v[2],
        })
        .collect();
    Dataset::new(name, records, area).map_err(|e| CsvError::Invalid(e.to_string()))
}

/// Metrics summary of a sweep, one row per peak.
pub fn write_metrics(rows: &[(f64, f64, dbmd_core::HysteresisMetrics)]) -> String {
    let mut out = String::from("peak_pos,peak_neg,loop_area,max_branch_ratio,i_at_peak,closed\n");
    for (p, n, m) in rows {
        writeln!(
            out,
            "{p},{n},{:.16e},{:.16e},{:.16e},{}",
            m.loop_area, m.max_branch_ratio, m.i_at_peak, m.closed
        )
        .expect("write to String");
    }
    out
}
