//! Machine-readable artifact writers: JSON first, CSV beside it, and
//! small SVG line charts for the cost curves. All content is a pure
//! function of its inputs so repeated runs produce identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use smoothread_core::engine::InferenceTrace;
use crate::sweep::SweepOutcome;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
    #[error("nothing to report")]
    EmptyReport,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ArtifactError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), ArtifactError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

/// Sweep result as CSV with a seed header comment.
pub fn sweep_csv(outcome: &SweepOutcome) -> String {
    let mut out = format!("# seed={}\n", outcome.seed);
    out.push_str("window_tokens,chunk_tokens,accuracy,virtual_time_seconds,mean_chunks_read,mean_total_tokens\n");
    for c in &outcome.cells {
        out.push_str(&format!(
            "{},{},{:.6},{:.9},{:.3},{:.1}\n",
            c.window_tokens,
            c.chunk_tokens,
            c.accuracy,
            c.virtual_time_seconds,
            c.mean_chunks_read,
            c.mean_total_tokens
        ));
    }
    out
}

/// Aggregate view over a set of run traces.
#[derive(Debug, Serialize)]
pub struct TraceReport {
    pub seed: u64,
    pub runs: usize,
    pub total_prefill_tokens: u64,
    pub total_decode_tokens: u64,
    pub total_virtual_time_seconds: f64,
    pub mean_chunks_read: f64,
    pub peak_mr_tokens: u64,
    /// chunks_read -> number of runs, for early-stopping analysis.
    pub chunks_read_histogram: BTreeMap<usize, u32>,
}

pub fn aggregate_traces(traces: &[InferenceTrace], seed: u64) -> Result<TraceReport, ArtifactError> {
    if traces.is_empty() {
        return Err(ArtifactError::EmptyReport);
    }
    let mut histogram: BTreeMap<usize, u32> = BTreeMap::new();
    for t in traces {
        *histogram.entry(t.chunks_read).or_insert(0) += 1;
    }
    Ok(TraceReport {
        seed,
        runs: traces.len(),
        total_prefill_tokens: traces.iter().map(|t| t.total_prefill_tokens).sum(),
        total_decode_tokens: traces.iter().map(|t| t.total_decode_tokens).sum(),
        total_virtual_time_seconds: traces.iter().map(|t| t.virtual_time_seconds).sum(),
        mean_chunks_read: traces.iter().map(|t| t.chunks_read).sum::<usize>() as f64
            / traces.len() as f64,
        peak_mr_tokens: traces.iter().map(|t| t.peak_mr_tokens).max().unwrap_or(0),
        chunks_read_histogram: histogram,
    })
}

/// A minimal SVG line chart: one polyline per named series.
pub fn line_chart_svg(title: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const MARGIN: f64 = 50.0;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];

    let points: Vec<(f64, f64)> = series.iter().flat_map(|(_, pts)| pts.iter().copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for (x, y) in &points {
        x0 = x0.min(*x);
        x1 = x1.max(*x);
        y0 = y0.min(*y);
        y1 = y1.max(*y);
    }
    if points.is_empty() {
        x0 = 0.0;
        x1 = 1.0;
        y0 = 0.0;
        y1 = 1.0;
    }
    if (x1 - x0).abs() < f64::EPSILON {
        x1 = x0 + 1.0;
    }
    if (y1 - y0).abs() < f64::EPSILON {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">{title}</text>\n",
        W / 2.0
    );
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#333\"/>\n\
         <line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"#333\"/>\n",
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN,
        t = MARGIN
    ));
    svg.push_str(&format!(
        "<text x=\"{m}\" y=\"{y}\" font-family=\"sans-serif\" font-size=\"11\">{x0:.0}</text>\n\
         <text x=\"{r}\" y=\"{y}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{x1:.0}</text>\n\
         <text x=\"{m2}\" y=\"{b2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{y0:.3}</text>\n\
         <text x=\"{m2}\" y=\"{t2}\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">{y1:.3}</text>\n",
        m = MARGIN,
        r = W - MARGIN,
        y = H - MARGIN + 16.0,
        m2 = MARGIN - 6.0,
        b2 = H - MARGIN,
        t2 = MARGIN + 4.0,
    ));
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = colors[i % colors.len()];
        let path: Vec<String> = pts.iter().map(|(x, y)| format!("{:.2},{:.2}", sx(*x), sy(*y))).collect();
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path.join(" ")
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{color}\">{name}</text>\n",
            W - MARGIN - 150.0,
            MARGIN + 16.0 * (i as f64 + 1.0)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_trace_list_is_an_error() {
        assert!(matches!(
            aggregate_traces(&[], 0),
            Err(ArtifactError::EmptyReport)
        ));
    }

    #[test]
    fn svg_contains_series() {
        let svg = line_chart_svg(
            "times",
            &[("sr".to_string(), vec![(0.0, 1.0), (1.0, 2.0), (2.0, 1.5)])],
        );
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("polyline"));
        assert!(svg.contains("sr"));
    }
}
