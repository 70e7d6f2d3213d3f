use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDateTime, TimeDelta};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spatiotemporal::StationSeries;
use crate::timeseries::{default_step, TimeSeries};

const TIME_FORMATS: [&str; 4] = ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%dT%H:%M"];

/// Column names of a station CSV. Columns not listed here are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub time: String,
    /// Station id column; when absent every row belongs to `default_station`.
    pub station_id: Option<String>,
    pub flow: String,
    pub default_station: String,
    pub step: TimeDelta,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            time: "time".into(),
            station_id: Some("station_id".into()),
            flow: "flow".into(),
            default_station: "s0".into(),
            step: default_step(),
        }
    }
}

/// A station on the uniform grid, with `None` for missing slots.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSeries {
    pub station_id: String,
    pub start: NaiveDateTime,
    pub step: TimeDelta,
    pub values: Vec<Option<f64>>,
}

impl RawSeries {
    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| v.is_none()).count()
    }

    pub fn gap_report(&self) -> GapReport {
        let mut runs = Vec::new();
        let mut t = 0;
        while t < self.values.len() {
            if self.values[t].is_none() {
                let s = t;
                while t < self.values.len() && self.values[t].is_none() {
                    t += 1;
                }
                runs.push((s, t - s));
            } else {
                t += 1;
            }
        }
        GapReport {
            station_id: self.station_id.clone(),
            total: self.values.len(),
            missing: self.missing(),
            runs,
        }
    }
}

impl From<&TimeSeries> for RawSeries {
    fn from(ts: &TimeSeries) -> Self {
        Self {
            station_id: String::new(),
            start: ts.start(),
            step: ts.step(),
            values: ts.values().iter().copied().map(Some).collect(),
        }
    }
}

/// Missing slots of one station on its grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GapReport {
    pub station_id: String,
    pub total: usize,
    pub missing: usize,
    /// `(first index, length)` of each run of missing slots.
    pub runs: Vec<(usize, usize)>,
}

fn parse_time(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    TIME_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

/// Read a station CSV onto a shared uniform grid spanning the earliest to
/// the latest timestamp of any station. Line numbers in errors count the
/// header as line 1. Empty flow cells and absent timestamps become gaps.
pub fn load_station_csv(path: &Path, schema: &CsvSchema) -> Result<Vec<RawSeries>> {
    let text = std::fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("missing column `{name}`"),
        })
    };
    let time_col = col(&schema.time)?;
    let flow_col = col(&schema.flow)?;
    let station_col = match &schema.station_id {
        Some(name) => headers.iter().position(|h| h == name),
        None => None,
    };

    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut rows: BTreeMap<String, BTreeMap<NaiveDateTime, Option<f64>>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record.map_err(|e| parse_err(line, e.to_string()))?;
        let field = |c: usize| record.get(c).unwrap_or("");
        let time = parse_time(field(time_col))
            .ok_or_else(|| parse_err(line, format!("unparseable time `{}`", field(time_col))))?;
        let raw_flow = field(flow_col);
        let flow = if raw_flow.is_empty() {
            None
        } else {
            let v: f64 = raw_flow
                .parse()
                .map_err(|_| parse_err(line, format!("non-numeric flow `{raw_flow}`")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite flow `{raw_flow}`")));
            }
            Some(v)
        };
        let station = station_col
            .map(|c| field(c).to_string())
            .unwrap_or_else(|| schema.default_station.clone());
        if rows.entry(station.clone()).or_default().insert(time, flow).is_some() {
            return Err(parse_err(line, format!("duplicate timestamp {time} for station {station}")));
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let start = rows.values().filter_map(|r| r.keys().next()).min().copied().expect("non-empty");
    let end = rows.values().filter_map(|r| r.keys().next_back()).max().copied().expect("non-empty");
    let step_s = schema.step.num_seconds();
    if step_s <= 0 {
        return Err(Error::Config("grid step must be positive".into()));
    }
    let len = ((end - start).num_seconds() / step_s) as usize + 1;
    let mut out = Vec::with_capacity(rows.len());
    for (station, series) in rows {
        let mut values = vec![None; len];
        for (time, flow) in series {
            let offset = (time - start).num_seconds();
            if offset % step_s != 0 {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: 0,
                    message: format!("timestamp {time} of station {station} is off the {step_s}s grid"),
                });
            }
            values[(offset / step_s) as usize] = flow;
        }
        out.push(RawSeries {
            station_id: station,
            start,
            step: schema.step,
            values,
        });
    }
    Ok(out)
}

/// Read an adjacency CSV of `station_id,neighbor_id` pairs (undirected).
pub fn load_adjacency(path: &Path) -> Result<BTreeMap<String, Vec<String>>> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut adj: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let (Some(a), Some(b)) = (record.get(0), record.get(1)) else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: "expected two station ids".into(),
            });
        };
        for (x, y) in [(a, b), (b, a)] {
            let list = adj.entry(x.to_string()).or_default();
            if !list.iter().any(|n| n == y) {
                list.push(y.to_string());
            }
        }
    }
    Ok(adj)
}

/// Write stations in the long `time,station_id,flow` layout.
pub fn write_station_csv(path: &Path, stations: &[StationSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "station_id", "flow"])?;
    for s in stations {
        for (t, v) in s.series.values().iter().enumerate() {
            w.write_record([
                s.series.time_at(t).format(TIME_FORMATS[0]).to_string(),
                s.station_id.clone(),
                v.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Write each station's neighbour list as `station_id,neighbor_id` pairs.
pub fn write_adjacency(path: &Path, stations: &[StationSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["station_id", "neighbor_id"])?;
    for s in stations {
        for n in &s.neighbors {
            if s.station_id < *n {
                w.write_record([&s.station_id, n])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn format_time(t: NaiveDateTime) -> String {
    t.format(TIME_FORMATS[0]).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn minimal_two_rows() {
        let f = file("time,station_id,flow\n2020-01-01 00:00:00,a,10\n2020-01-01 00:15:00,a,12\n");
        let s = load_station_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].values, vec![Some(10.0), Some(12.0)]);
    }

    #[test]
    fn bad_flow_names_the_line() {
        let mut text = String::from("time,station_id,flow,speed\n");
        for k in 0..5 {
            text.push_str(&format!("2020-01-01 0{}:00:00,a,{},88\n", k, 10 + k));
        }
        text.push_str("2020-01-01 05:00:00,a,lots,88\n");
        let f = file(&text);
        match load_station_csv(f.path(), &CsvSchema::default()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_file() {
        let f = file("");
        assert!(matches!(load_station_csv(f.path(), &CsvSchema::default()), Err(Error::EmptyFile(_))));
    }

    #[test]
    fn gaps_are_reported() {
        let f = file(
            "time,station_id,flow\n2020-01-01 00:00,a,1\n2020-01-01 00:15,a,\n2020-01-01 01:00,a,4\n2020-01-01 00:00,b,1\n2020-01-01 01:00,b,2\n",
        );
        let s = load_station_csv(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(s[0].values.len(), 5);
        let g = s[0].gap_report();
        assert_eq!((g.missing, g.runs.clone()), (3, vec![(1, 3)]));
        assert_eq!(s[1].gap_report().runs, vec![(1, 3)]);
    }

    #[test]
    fn month_has_2880_points() {
        let mut text = String::from("time,station_id,flow\n");
        let start = NaiveDateTime::parse_from_str("2019-06-01 00:00:00", TIME_FORMATS[0]).unwrap();
        for k in 0..2880 {
            let t = start + TimeDelta::minutes(15 * k);
            text.push_str(&format!("{},m25,{}\n", format_time(t), 100 + k % 7));
        }
        let s = load_station_csv(file(&text).path(), &CsvSchema::default()).unwrap();
        assert_eq!(s[0].values.len(), 2880);
        assert_eq!(s[0].missing(), 0);
    }

    #[test]
    fn off_grid_and_duplicates_fail() {
        let f = file("time,station_id,flow\n2020-01-01 00:00,a,1\n2020-01-01 00:07,a,2\n");
        assert!(load_station_csv(f.path(), &CsvSchema::default()).is_err());
        let f = file("time,station_id,flow\n2020-01-01 00:00,a,1\n2020-01-01 00:00,a,2\n");
        assert!(matches!(load_station_csv(f.path(), &CsvSchema::default()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn adjacency_is_undirected() {
        let f = file("station_id,neighbor_id\na,b\na,c\n");
        let adj = load_adjacency(f.path()).unwrap();
        assert_eq!(adj["a"], vec!["b", "c"]);
        assert_eq!(adj["b"], vec!["a"]);
    }
}
