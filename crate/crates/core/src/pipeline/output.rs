use std::path::Path;

use super::ingest::format_time;
use super::run::PipelineReport;
use crate::decomposition::ImfSet;
use crate::error::Result;
use crate::timeseries::TimeSeries;

/// `time,imf1..imfK,residue` for a decomposition of `series`.
pub fn write_imfs_csv(path: &Path, series: &TimeSeries, set: &ImfSet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["time".to_string()];
    header.extend((1..=set.imf_count()).map(|k| format!("imf{k}")));
    header.push("residue".into());
    w.write_record(&header)?;
    for t in 0..set.len() {
        let mut row = vec![format_time(series.time_at(t))];
        row.extend(set.imfs().iter().map(|m| m[t].to_string()));
        row.push(set.residue()[t].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Read the IMF columns back; the residue is the last column.
pub fn read_imfs_csv(path: &Path) -> Result<ImfSet> {
    let mut r = csv::Reader::from_path(path)?;
    let width = r.headers()?.len();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); width.saturating_sub(1)];
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        for (c, col) in cols.iter_mut().enumerate() {
            let field = rec.get(c + 1).unwrap_or("");
            col.push(field.parse().map_err(|_| crate::Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                message: format!("bad number `{field}`"),
            })?);
        }
    }
    let residue = cols.pop().unwrap_or_default();
    ImfSet::new(cols, residue)
}

/// `time,actual,<variant>...` over the test span.
pub fn write_predictions_csv(path: &Path, report: &PipelineReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["time".to_string(), "actual".to_string()];
    header.extend(report.predictions.keys().cloned());
    w.write_record(&header)?;
    for (i, t) in report.test_times.iter().enumerate() {
        let mut row = vec![format_time(*t), report.actual[i].to_string()];
        row.extend(report.predictions.values().map(|p| p[i].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `index,component1..,predicted1..` with predictions blank outside the
/// test span.
pub fn write_components_csv(path: &Path, report: &PipelineReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let k = report.component_series.len();
    let mut header = vec!["index".to_string()];
    header.extend((1..=k).map(|c| format!("component{c}")));
    header.extend((1..=k).map(|c| format!("predicted{c}")));
    w.write_record(&header)?;
    let len = report.component_series.first().map_or(0, Vec::len);
    let start = report.train_len.max(len.saturating_sub(report.actual.len()));
    for t in 0..len {
        let mut row = vec![t.to_string()];
        row.extend(report.component_series.iter().map(|c| c[t].to_string()));
        for comp in &report.components {
            row.push(if t >= start && t - start < comp.prediction.len() {
                comp.prediction[t - start].to_string()
            } else {
                String::new()
            });
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
