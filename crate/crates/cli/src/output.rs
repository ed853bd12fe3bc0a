use std::io::{self, Write};

use ecekde::StudyResult;
use serde::{Deserialize, Serialize};
use serde_json::ser::Formatter;

/// Bootstrap interval bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// The JSON document printed by `estimate` and `bandwidth`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub estimate: f64,
    pub kind: String,
    pub p: Option<f64>,
    pub bandwidth: Option<f64>,
    pub bins: Option<usize>,
    pub debias: String,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub seed: u64,
    pub ci: Option<Interval>,
    pub runtime_ms: f64,
}

/// Writes every float with 17 significant digits.
struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision);
    value.serialize(&mut ser).expect("in-memory serialization");
    String::from_utf8(out).expect("serde_json writes UTF-8")
}

/// `n,estimator,mean,std,reference` rows.
pub fn study_csv(result: &StudyResult) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["n", "estimator", "mean", "std", "reference"]).expect("in-memory csv");
    for r in &result.rows {
        w.write_record([r.n.to_string(), r.estimator.clone(), fmt_f64(r.mean), fmt_f64(r.std), fmt_f64(r.reference)])
            .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv writes UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_round_trips_bit_exactly() {
        let rec = ResultRecord {
            estimate: 0.1 + 0.2,
            kind: "canonical".into(),
            p: Some(1.0),
            bandwidth: Some(std::f64::consts::PI * 1e-5),
            bins: None,
            debias: "none".into(),
            n: 10,
            k: 3,
            seed: 7,
            ci: Some(Interval { lo: 1.0 / 3.0, hi: f64::MIN_POSITIVE }),
            runtime_ms: 12.5,
        };
        let text = to_json(&rec);
        assert!(text.contains("\"estimate\":3.0000000000000004e-1"), "{text}");
        assert_eq!(serde_json::from_str::<ResultRecord>(&text).unwrap(), rec);
    }
}
