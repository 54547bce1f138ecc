//! Comma-separated dataset files.
//!
//! Header: `NODE,LAT,LNG,TIME,ACTIVE,PACKET,PACKET_30MIN_AVG,PACKET_1HR_AVG,PACKET_2HR_AVG,PACKET_4HR_AVG,LABEL`.
//! `TIME` is `YYYY-MM-DD HH:MM:SS`; `ACTIVE` and `LABEL` are `0`/`1`.
//! Values are written at full precision unless a display precision is requested.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use chrono::NaiveDateTime;

use super::table::{TrafficRow, TrafficTable};
use crate::error::{Error, Result};

pub const COLUMNS: [&str; 11] = [
    "NODE",
    "LAT",
    "LNG",
    "TIME",
    "ACTIVE",
    "PACKET",
    "PACKET_30MIN_AVG",
    "PACKET_1HR_AVG",
    "PACKET_2HR_AVG",
    "PACKET_4HR_AVG",
    "LABEL",
];

pub const TIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

fn fmt_value(v: f64, decimals: Option<usize>) -> String {
    match decimals {
        Some(d) => {
            let f = 10f64.powi(d as i32);
            let r = (v * f).round() / f;
            let s = format!("{r:.d$}");
            // strip trailing zeros so 10.00 prints as 10, like the display tables
            if s.contains('.') {
                s.trim_end_matches('0').trim_end_matches('.').to_string()
            } else {
                s
            }
        }
        None => format!("{v}"),
    }
}

/// Writes `table` to `out`. `decimals` rounds the averaged columns for display.
pub fn write_dataset_to<W: Write>(table: &TrafficTable, out: W, decimals: Option<usize>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COLUMNS)?;
    for r in table.rows() {
        let mut rec = vec![
            r.node_id.to_string(),
            format!("{}", r.lat),
            format!("{}", r.lng),
            r.time.format(TIME_FORMAT).to_string(),
            (r.active as u8).to_string(),
            fmt_value(r.packet, decimals),
        ];
        rec.extend(r.averages.iter().map(|v| fmt_value(*v, decimals)));
        rec.push((r.label as u8).to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<dataset>", e))?;
    Ok(())
}

pub fn write_dataset(table: &TrafficTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(table, BufWriter::new(f), None)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<TrafficTable> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset_from(BufReader::new(f), path)
}

/// Parses a dataset; `origin` only labels error messages.
pub fn read_dataset_from<R: Read>(input: R, origin: &Path) -> Result<TrafficTable> {
    let fail = |msg: String| Error::Dataset {
        path: origin.to_path_buf(),
        msg,
    };
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let headers = rdr.headers().map_err(|e| fail(format!("unreadable header: {e}")))?.clone();
    let mut idx = [0usize; 11];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| fail(format!("missing column {name}")))?;
    }

    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| fail(format!("malformed record {}: {e}", line + 2)))?;
        let field = |c: usize| -> Result<&str> {
            rec.get(idx[c])
                .map(str::trim)
                .ok_or_else(|| fail(format!("line {}: missing value for {}", line + 2, COLUMNS[c])))
        };
        let num = |c: usize| -> Result<f64> {
            let s = field(c)?;
            s.parse::<f64>()
                .map_err(|_| fail(format!("line {}: {} is not a number: {s:?}", line + 2, COLUMNS[c])))
        };
        let flag = |c: usize| -> Result<bool> {
            match field(c)? {
                "0" => Ok(false),
                "1" => Ok(true),
                s => Err(fail(format!("line {}: {} must be 0 or 1, got {s:?}", line + 2, COLUMNS[c]))),
            }
        };
        let node_id = field(0)?
            .parse::<u32>()
            .map_err(|_| fail(format!("line {}: NODE is not an integer", line + 2)))?;
        let time_s = field(3)?;
        let time = NaiveDateTime::parse_from_str(time_s, TIME_FORMAT)
            .map_err(|_| fail(format!("line {}: TIME {time_s:?} is not YYYY-MM-DD HH:MM:SS", line + 2)))?;
        rows.push(TrafficRow {
            node_id,
            lat: num(1)?,
            lng: num(2)?,
            time,
            active: flag(4)?,
            packet: num(5)?,
            averages: [num(6)?, num(7)?, num(8)?, num(9)?],
            label: flag(10)?,
        });
    }
    TrafficTable::from_rows(rows).map_err(|e| fail(e.to_string()))
}
