use std::fs;
use std::path::Path;

use ecekde::{softmax, LabeledDataset};
use serde::Deserialize;

use crate::CliError;

#[derive(Deserialize)]
struct JsonRow {
    label: usize,
    probs: Vec<f64>,
}

/// Reads a prediction file: CSV with a `label,p_0,...,p_{K-1}` header, or JSON lines
/// `{"label": .., "probs": [..]}`. The format is sniffed from the first non-blank byte.
pub fn read_predictions(path: &Path, logits: bool) -> Result<LabeledDataset, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let (mut rows, labels) = if text.trim_start().starts_with('{') { parse_jsonl(&text)? } else { parse_csv(&text)? };
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no prediction rows", path.display())));
    }
    if logits {
        rows = rows.iter().map(|r| softmax(r)).collect();
    }
    LabeledDataset::from_rows(&rows, &labels).map_err(|e| CliError::Data(e.to_string()))
}

fn parse_jsonl(text: &str) -> Result<(Vec<Vec<f64>>, Vec<usize>), CliError> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let r: JsonRow = serde_json::from_str(line).map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        labels.push(r.label);
        rows.push(r.probs);
    }
    Ok((rows, labels))
}

fn parse_csv(text: &str) -> Result<(Vec<Vec<f64>>, Vec<usize>), CliError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CliError::Data(e.to_string()))?.clone();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Ok((Vec::new(), Vec::new()));
    }
    let expected: Vec<String> =
        std::iter::once("label".to_string()).chain((0..header.len() - 1).map(|k| format!("p_{k}"))).collect();
    if header.iter().ne(expected.iter().map(String::as_str)) || header.len() < 2 {
        return Err(CliError::Data(format!("expected header {}, got {}", expected.join(","), header.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(e.to_string()))?;
        let line = i + 2;
        let label = rec[0].parse::<usize>().map_err(|e| CliError::Data(format!("line {line}: label: {e}")))?;
        let probs = rec
            .iter()
            .skip(1)
            .map(|v| v.parse::<f64>().map_err(|e| CliError::Data(format!("line {line}: {v:?}: {e}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        labels.push(label);
        rows.push(probs);
    }
    Ok((rows, labels))
}
