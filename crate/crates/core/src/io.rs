//! CSV input, coordinate transforms and report output.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MnccError, Result};
use crate::sample::Sample;
use crate::special::normal_cdf;
use crate::teststat::TestReport;

/// Coordinatewise map applied to the raw columns before testing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Values must already lie in `[0, 1]`.
    #[default]
    None,
    /// Standard normal CDF.
    NormalCdf,
    /// Average rank divided by `n + 1`.
    Rank,
}

fn column_names(prefix: char, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

/// Average ranks (1-based) of `v`, ties sharing the mean rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn apply_transform(column: &mut [f64], transform: Transform) {
    match transform {
        Transform::None => {}
        Transform::NormalCdf => column.iter_mut().for_each(|v| *v = normal_cdf(*v)),
        Transform::Rank => {
            let n = column.len() as f64;
            let ranks = average_ranks(column);
            column.iter_mut().zip(ranks).for_each(|(v, r)| *v = r / (n + 1.0));
        }
    }
}

/// Read a sample from CSV text with header columns `x1..x{dx}`, `y1..`, `z1..`.
/// Other columns are ignored. Rows are numbered from 1, excluding the header.
pub fn read_csv<R: Read>(reader: R, dx: usize, dy: usize, dz: usize, transform: Transform) -> Result<Sample> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| MnccError::Io(e.to_string()))?.clone();
    let names: Vec<String> = [('x', dx), ('y', dy), ('z', dz)]
        .iter()
        .flat_map(|&(c, d)| column_names(c, d))
        .collect();
    let positions = names
        .iter()
        .map(|name| {
            headers.iter().position(|h| h == name).ok_or_else(|| MnccError::Parse {
                row: 0,
                column: name.clone(),
                message: "missing column in header".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (i, record) in rdr.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| MnccError::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for (c, &pos) in positions.iter().enumerate() {
            let cell = record.get(pos).unwrap_or("");
            let parse_err = |message: String| MnccError::Parse {
                row,
                column: names[c].clone(),
                message,
            };
            let v: f64 = cell.parse().map_err(|_| parse_err(format!("not a number: {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(format!("non-finite value {cell}")));
            }
            if transform == Transform::None && !(0.0..=1.0).contains(&v) {
                return Err(parse_err(format!("{v} outside [0, 1]; choose a transform")));
            }
            columns[c].push(v);
        }
    }
    if columns.iter().any(|c| c.is_empty()) {
        return Err(MnccError::InvalidArgument("no data rows".into()));
    }
    for c in columns.iter_mut() {
        apply_transform(c, transform);
    }
    let n = columns[0].len();
    let interleave = |cols: &[Vec<f64>]| -> Vec<f64> { (0..n).flat_map(|i| cols.iter().map(move |c| c[i])).collect() };
    Sample::new(
        dx,
        dy,
        dz,
        interleave(&columns[..dx]),
        interleave(&columns[dx..dx + dy]),
        interleave(&columns[dx + dy..]),
    )
}

pub fn load_csv(path: impl AsRef<Path>, dx: usize, dy: usize, dz: usize, transform: Transform) -> Result<Sample> {
    let file =
        std::fs::File::open(path.as_ref()).map_err(|e| MnccError::Io(format!("{}: {e}", path.as_ref().display())))?;
    read_csv(std::io::BufReader::new(file), dx, dy, dz, transform)
}

/// Write a sample with the header layout understood by [`read_csv`].
pub fn write_csv<W: Write>(writer: W, sample: &Sample) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = [('x', sample.dx()), ('y', sample.dy()), ('z', sample.dz())]
        .iter()
        .flat_map(|&(c, d)| column_names(c, d))
        .collect();
    let io = |e: csv::Error| MnccError::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for i in 0..sample.n() {
        let row: Vec<String> = sample
            .x_row(i)
            .iter()
            .chain(sample.y_row(i))
            .chain(sample.z_row(i))
            .map(|v| format!("{v:?}"))
            .collect();
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn report_to_json(report: &TestReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| MnccError::Io(e.to_string()))
}

pub fn report_from_json(text: &str) -> Result<TestReport> {
    serde_json::from_str(text).map_err(|e| MnccError::Io(e.to_string()))
}
