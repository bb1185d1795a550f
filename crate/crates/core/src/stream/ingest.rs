use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use csv::{ReaderBuilder, StringRecord, Trim};

use crate::error::{Error, Result};
use crate::stream::Instance;

/// Column layout of daily quote files.
pub const YAHOO_HEADER: [&str; 7] = ["Date", "Open", "High", "Low", "Close", "Volume", "Adj Close"];

/// Which column of a numeric CSV holds the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetColumn {
    Name(String),
    Index(usize),
}

impl TargetColumn {
    /// Integers select by position, anything else by header name.
    pub fn parse(s: &str) -> Self {
        match s.trim().parse::<usize>() {
            Ok(i) => TargetColumn::Index(i),
            Err(_) => TargetColumn::Name(s.trim().to_string()),
        }
    }
}

fn line_of(record: &StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}

fn number(record: &StringRecord, col: usize, name: &str) -> Result<f64> {
    let raw = record.get(col).unwrap_or("");
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            line: line_of(record),
            message: format!("column {name:?}: {raw:?} is not a finite number"),
        }),
    }
}

/// Parses a daily quote file. Features are (Open, High, Low, Volume,
/// Adj Close), the target is Close, and rows come out in ascending date order.
pub fn parse_yahoo_csv<R: Read>(input: R) -> Result<Vec<Instance>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(input);
    let mut records = reader.records();

    let header = match records.next() {
        None => return Ok(Vec::new()),
        Some(r) => r?,
    };
    let matches = header.len() == YAHOO_HEADER.len()
        && header
            .iter()
            .zip(YAHOO_HEADER)
            .all(|(got, want)| got.eq_ignore_ascii_case(want));
    if !matches {
        return Err(Error::Format(format!(
            "expected header {:?}, found {:?}",
            YAHOO_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        if record.len() != YAHOO_HEADER.len() {
            return Err(Error::Parse {
                line: line_of(&record),
                message: format!("expected 7 fields, found {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(&record[0], "%Y-%m-%d").map_err(|e| Error::Parse {
            line: line_of(&record),
            message: format!("bad date {:?}: {e}", &record[0]),
        })?;
        let mut vals = [0.0; 6];
        for (i, v) in vals.iter_mut().enumerate() {
            *v = number(&record, i + 1, YAHOO_HEADER[i + 1])?;
        }
        let [open, high, low, close, volume, adj] = vals;
        rows.push((date, vec![open, high, low, volume, adj], close));
    }
    // Stable: rows sharing a date keep file order.
    rows.sort_by_key(|r| r.0);
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, (_, x, y))| Instance::new(x, y, i as u64))
        .collect())
}

fn detect_delimiter(text: &str) -> u8 {
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    if first.contains(';') && !first.contains(',') {
        b';'
    } else {
        b','
    }
}

/// Parses a rectangular numeric CSV. A first row with any non-numeric cell
/// is taken as the header. Semicolon-separated files are detected from the
/// first line.
pub fn parse_regression_csv<R: Read>(mut input: R, target: &TargetColumn) -> Result<Vec<Instance>> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::Format(format!("reading CSV: {e}")))?;
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .delimiter(detect_delimiter(&text))
        .from_reader(text.as_bytes());

    let mut records = reader
        .records()
        .filter(|r| !matches!(r, Ok(rec) if rec.len() == 1 && rec.get(0) == Some("")))
        .peekable();

    let header: Option<Vec<String>> = match records.peek() {
        None => return Ok(Vec::new()),
        Some(Err(_)) => None,
        Some(Ok(first)) => {
            if first.iter().any(|cell| cell.parse::<f64>().is_err()) {
                let names = first.iter().map(|c| c.trim_matches('"').to_string()).collect();
                records.next();
                Some(names)
            } else {
                None
            }
        }
    };

    let mut width = header.as_ref().map(Vec::len);
    let mut target_col = None;
    let mut out = Vec::new();
    for record in records {
        let record = record?;
        let line = line_of(&record);
        let w = *width.get_or_insert(record.len());
        if record.len() != w {
            return Err(Error::Parse {
                line,
                message: format!("expected {w} fields, found {}", record.len()),
            });
        }
        let col = match target_col {
            Some(c) => c,
            None => {
                let c = resolve_target(target, header.as_deref(), w)?;
                target_col = Some(c);
                c
            }
        };
        let mut x = Vec::with_capacity(w - 1);
        let mut y = 0.0;
        for i in 0..w {
            let name = header
                .as_ref()
                .map_or_else(|| i.to_string(), |h| h[i].clone());
            let v = number(&record, i, &name)?;
            if i == col {
                y = v;
            } else {
                x.push(v);
            }
        }
        out.push(Instance::new(x, y, out.len() as u64));
    }
    if target_col.is_none() {
        if let Some(h) = &header {
            resolve_target(target, Some(h), h.len())?;
        }
    }
    Ok(out)
}

fn resolve_target(target: &TargetColumn, header: Option<&[String]>, width: usize) -> Result<usize> {
    match target {
        TargetColumn::Index(i) if *i < width => Ok(*i),
        TargetColumn::Index(i) => Err(Error::Format(format!(
            "target column {i} out of range for {width} columns"
        ))),
        TargetColumn::Name(name) => {
            let header = header.ok_or_else(|| {
                Error::Format(format!("target {name:?} given by name but file has no header"))
            })?;
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Format(format!("target column {name:?} not in header")))
        }
    }
}

pub fn read_yahoo_csv(path: impl AsRef<Path>) -> Result<Vec<Instance>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_yahoo_csv(file)
}

pub fn read_regression_csv(path: impl AsRef<Path>, target: &TargetColumn) -> Result<Vec<Instance>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_regression_csv(file, target)
}
