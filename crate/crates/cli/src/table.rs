//! Scan tables on disk.
//!
//! CSV layout: `#`-prefixed header lines carrying the scan variable, unit, seed,
//! apparatus (JSON) and per-scan context (JSON), then a header row and one row
//! per setting. Field series carry a leading `field_T` column. Settings are
//! written with 17 significant digits so a table re-reads to identical values.

use std::collections::BTreeMap;

use bels_core::detection::ChannelCounts;
use bels_core::experiment::{Apparatus, ScanResult, ScanRow, ScanVariable};
use bels_core::interference::{CoincidenceChannel, Detector};
use thiserror::Error;

use crate::config::OutputFormat;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("table holds no scans")]
    Empty,
}

fn parse_err(line: usize, message: impl Into<String>) -> TableError {
    TableError::Parse {
        line,
        message: message.into(),
    }
}

const FIELD_COLUMN: &str = "field_T";

fn is_series(scans: &[ScanResult]) -> bool {
    scans.len() > 1 || scans.iter().any(|s| s.context.contains_key(FIELD_COLUMN))
}

fn header(series: bool) -> Vec<String> {
    let mut h = Vec::with_capacity(12);
    if series {
        h.push(FIELD_COLUMN.to_string());
    }
    h.push("setting".to_string());
    h.extend(CoincidenceChannel::ALL.iter().map(|c| c.name().to_string()));
    h.extend(Detector::ALL.iter().map(|d| d.name().to_string()));
    h
}

pub fn write_csv(scans: &[ScanResult]) -> Result<String, TableError> {
    let first = scans.first().ok_or(TableError::Empty)?;
    let series = is_series(scans);
    let contexts: Vec<&BTreeMap<String, f64>> = scans.iter().map(|s| &s.context).collect();
    let mut out = String::new();
    out.push_str(&format!("# scan_variable: {}\n", first.variable.name()));
    out.push_str(&format!("# unit: {}\n", first.variable.unit()));
    out.push_str(&format!("# seed: {}\n", first.seed));
    out.push_str(&format!("# apparatus: {}\n", serde_json::to_string(&first.apparatus)?));
    out.push_str(&format!("# contexts: {}\n", serde_json::to_string(&contexts)?));

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(series))?;
    for scan in scans {
        for row in &scan.rows {
            let mut rec = Vec::with_capacity(12);
            if series {
                let field = scan.context.get(FIELD_COLUMN).copied().unwrap_or(f64::NAN);
                rec.push(format!("{field:.16e}"));
            }
            rec.push(format!("{:.16e}", row.setting));
            rec.extend(row.counts.coincidences.iter().map(u64::to_string));
            rec.extend(row.counts.singles.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
    }
    let body = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    Ok(out)
}

pub fn read_csv(text: &str) -> Result<Vec<ScanResult>, TableError> {
    let mut meta: BTreeMap<&str, (usize, &str)> = BTreeMap::new();
    let mut body_start = 0;
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        body_start = i + 1;
        let (k, v) = rest
            .split_once(':')
            .ok_or_else(|| parse_err(i + 1, "expected `# key: value`"))?;
        meta.insert(k.trim(), (i + 1, v.trim()));
    }
    let get = |k: &str| meta.get(k).copied().ok_or_else(|| parse_err(1, format!("missing `# {k}` line")));

    let (l, v) = get("scan_variable")?;
    let variable =
        ScanVariable::from_name(v).ok_or_else(|| parse_err(l, format!("unknown scan variable `{v}`")))?;
    let (l, v) = get("seed")?;
    let seed: u64 = v.parse().map_err(|_| parse_err(l, format!("bad seed `{v}`")))?;
    let (l, v) = get("apparatus")?;
    let apparatus: Apparatus =
        serde_json::from_str(v).map_err(|e| parse_err(l, format!("apparatus: {e}")))?;
    let contexts: Vec<BTreeMap<String, f64>> = match meta.get("contexts") {
        Some(&(l, v)) => serde_json::from_str(v).map_err(|e| parse_err(l, format!("contexts: {e}")))?,
        None => Vec::new(),
    };

    let body: String = text
        .lines()
        .skip(body_start)
        .flat_map(|l| [l, "\n"])
        .collect();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let head: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let series = head.first().map(String::as_str) == Some(FIELD_COLUMN);
    if head != header(series) {
        return Err(parse_err(body_start + 1, format!("unexpected columns: {}", head.join(","))));
    }
    let offset = usize::from(series);

    let mut groups: Vec<(Option<f64>, Vec<ScanRow>)> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = body_start + 2 + i;
        let rec = rec?;
        let num = |j: usize| -> Result<f64, TableError> {
            rec[j].trim().parse().map_err(|_| parse_err(line, format!("bad number `{}`", &rec[j])))
        };
        let count = |j: usize| -> Result<u64, TableError> {
            rec[j].trim().parse().map_err(|_| parse_err(line, format!("bad count `{}`", &rec[j])))
        };
        let field = if series { Some(num(0)?) } else { None };
        let mut counts = ChannelCounts::default();
        for k in 0..6 {
            counts.coincidences[k] = count(offset + 1 + k)?;
        }
        for k in 0..4 {
            counts.singles[k] = count(offset + 7 + k)?;
        }
        let row = ScanRow {
            setting: num(offset)?,
            counts,
        };
        match groups.last_mut() {
            Some((f, rows)) if f.map(f64::to_bits) == field.map(f64::to_bits) => rows.push(row),
            _ => groups.push((field, vec![row])),
        }
    }
    if groups.is_empty() {
        return Err(TableError::Empty);
    }
    if !contexts.is_empty() && contexts.len() != groups.len() {
        return Err(parse_err(
            meta["contexts"].0,
            format!("{} contexts for {} scans", contexts.len(), groups.len()),
        ));
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(k, (field, rows))| {
            let mut context = contexts.get(k).cloned().unwrap_or_default();
            if let Some(f) = field {
                context.insert(FIELD_COLUMN.to_string(), f);
            }
            ScanResult {
                variable,
                rows,
                apparatus: apparatus.clone(),
                seed,
                context,
            }
        })
        .collect())
}

pub fn write_json(scans: &[ScanResult]) -> Result<String, TableError> {
    if scans.is_empty() {
        return Err(TableError::Empty);
    }
    Ok(serde_json::to_string_pretty(scans)?)
}

pub fn read_json(text: &str) -> Result<Vec<ScanResult>, TableError> {
    let scans: Vec<ScanResult> = serde_json::from_str(text)?;
    if scans.is_empty() {
        return Err(TableError::Empty);
    }
    Ok(scans)
}

pub fn write_table(scans: &[ScanResult], format: OutputFormat) -> Result<String, TableError> {
    match format {
        OutputFormat::Csv => write_csv(scans),
        OutputFormat::Json => write_json(scans),
    }
}

/// Reads either format, guessing from the first non-blank character.
pub fn read_table(text: &str) -> Result<Vec<ScanResult>, TableError> {
    match text.trim_start().chars().next() {
        Some('[') | Some('{') => read_json(text),
        _ => read_csv(text),
    }
}

pub fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::bundled;
    use crate::runner::simulate;

    #[test]
    fn csv_round_trip_single_scan() {
        let scans = simulate(&bundled("fig4").unwrap()).unwrap().scans;
        let text = write_csv(&scans).unwrap();
        assert_eq!(read_csv(&text).unwrap(), scans);
        assert_eq!(write_csv(&read_csv(&text).unwrap()).unwrap(), text);
    }

    #[test]
    fn csv_round_trip_field_series() {
        let scans = simulate(&bundled("fig5").unwrap()).unwrap().scans;
        assert_eq!(scans.len(), 5);
        let text = write_csv(&scans).unwrap();
        assert!(text.lines().nth(5).unwrap().starts_with("field_T,setting,Hc:Hd"));
        assert_eq!(read_csv(&text).unwrap(), scans);
    }

    #[test]
    fn json_round_trip() {
        let scans = simulate(&bundled("fig4").unwrap()).unwrap().scans;
        let text = write_json(&scans).unwrap();
        assert_eq!(read_table(&text).unwrap(), scans);
    }

    #[test]
    fn bad_rows_name_the_line() {
        let scans = simulate(&bundled("fig4").unwrap()).unwrap().scans;
        let mut lines: Vec<String> = write_csv(&scans).unwrap().lines().map(String::from).collect();
        let mut cells: Vec<&str> = lines[7].split(',').collect();
        cells[2] = "x";
        lines[7] = cells.join(",");
        match read_csv(&(lines.join("\n") + "\n")) {
            Err(TableError::Parse { line, .. }) => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
        assert!(read_csv("setting\n1\n").is_err());
    }
}
