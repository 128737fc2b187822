//! CSV tables and permutation files emitted by the commands, with readers
//! for each so outputs can be loaded back.

use std::io::{BufRead, BufReader, Read, Write};

use serde::Deserialize;
use seriation::eval::{AblationRow, RecoveryRow, ScalingRow};
use seriation::perm::Permutation;

use crate::CliError;

fn csv_err(e: csv::Error) -> CliError {
    CliError::Other(e.into())
}

pub fn write_montecarlo<W: Write>(rows: &[RecoveryRow], w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["p", "method", "recovery", "ci_low", "ci_high", "successes", "trials"])
        .map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.p.to_string(),
            r.method.label().to_string(),
            r.recovery.to_string(),
            r.ci_low.to_string(),
            r.ci_high.to_string(),
            r.successes.to_string(),
            r.trials.to_string(),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| CliError::Other(e.into()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MonteCarloRecord {
    pub p: f64,
    pub method: String,
    pub recovery: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub successes: usize,
    pub trials: usize,
}

pub fn write_ablation<W: Write>(rows: &[AblationRow], timing: bool, w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["variant", "n", "runs", "errors", "edge_edit_rate", "calls_per_n", "diameter"];
    if timing {
        header.push("ordering_seconds");
    }
    out.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![
            r.variant.label().to_string(),
            r.n.to_string(),
            r.runs.to_string(),
            r.errors.to_string(),
            r.edge_edit_rate.to_string(),
            r.calls_per_n.to_string(),
            r.diameter.to_string(),
        ];
        if timing {
            rec.push(r.ordering_seconds.to_string());
        }
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush().map_err(|e| CliError::Other(e.into()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct AblationRecord {
    pub variant: String,
    pub n: usize,
    pub runs: usize,
    pub errors: usize,
    pub edge_edit_rate: f64,
    pub calls_per_n: f64,
    pub diameter: f64,
    #[serde(default)]
    pub ordering_seconds: Option<f64>,
}

pub fn write_scaling<W: Write>(rows: &[ScalingRow], timing: bool, w: W) -> Result<(), CliError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![
        "n", "status", "queries", "calls_per_n", "connect", "condense", "densify", "exact",
    ];
    if timing {
        header.extend(["ordering_seconds", "pipeline_seconds"]);
    }
    out.write_record(&header).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![r.n.to_string()];
        match &r.outcome {
            Ok(p) => {
                rec.push("ok".into());
                rec.push(p.queries.to_string());
                rec.push(p.calls_per_n.to_string());
                for phase in ["connect", "condense", "densify"] {
                    rec.push(p.per_phase.get(phase).copied().unwrap_or(0).to_string());
                }
                rec.push(p.exact.to_string());
                if timing {
                    rec.push(p.ordering_seconds.to_string());
                    rec.push(p.pipeline_seconds.to_string());
                }
            }
            Err(e) => {
                rec.push(if e.starts_with("aborted") { "aborted" } else { "error" }.into());
                let blanks = if timing { 8 } else { 6 };
                rec.extend(std::iter::repeat_n(String::new(), blanks));
            }
        }
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush().map_err(|e| CliError::Other(e.into()))
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ScalingRecord {
    pub n: usize,
    pub status: String,
    pub queries: Option<u64>,
    pub calls_per_n: Option<f64>,
    pub connect: Option<u64>,
    pub condense: Option<u64>,
    pub densify: Option<u64>,
    pub exact: Option<bool>,
    #[serde(default)]
    pub ordering_seconds: Option<f64>,
    #[serde(default)]
    pub pipeline_seconds: Option<f64>,
}

pub fn read_records<T: for<'de> Deserialize<'de>, R: Read>(r: R) -> Result<Vec<T>, CliError> {
    csv::Reader::from_reader(r)
        .deserialize()
        .enumerate()
        .map(|(i, rec)| rec.map_err(|e| CliError::Parse(format!("line {}: {e}", i + 2))))
        .collect()
}

/// One item label per line.
pub fn write_permutation<W: Write>(p: &Permutation, mut w: W) -> std::io::Result<()> {
    for v in p.order() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}

pub fn read_permutation<R: Read>(r: R) -> Result<Permutation, CliError> {
    let mut order = Vec::new();
    for (i, line) in BufReader::new(r).lines().enumerate() {
        let line = line.map_err(|e| CliError::Other(e.into()))?;
        let id = line
            .trim()
            .parse()
            .map_err(|_| CliError::Parse(format!("line {}: not an item id: {line:?}", i + 1)))?;
        order.push(id);
    }
    Permutation::new(order).map_err(|e| CliError::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use seriation::eval::{Method, Variant};
    use std::collections::BTreeMap;

    #[test]
    fn montecarlo_round_trip() {
        let rows = vec![RecoveryRow {
            p: 0.6,
            method: Method::SuperChain,
            successes: 3,
            trials: 7,
            recovery: 3.0 / 7.0,
            ci_low: 0.1,
            ci_high: 0.8,
        }];
        let mut buf = Vec::new();
        write_montecarlo(&rows, &mut buf).unwrap();
        let back: Vec<MonteCarloRecord> = read_records(buf.as_slice()).unwrap();
        assert_eq!(back[0].recovery, 3.0 / 7.0);
        assert_eq!(back[0].method, "superchain");
        assert_eq!((back[0].successes, back[0].trials), (3, 7));
    }

    #[test]
    fn ablation_round_trip_with_optional_time() {
        let row = AblationRow {
            variant: Variant::NoC,
            n: 500,
            runs: 3,
            errors: 0,
            edge_edit_rate: 1.25,
            calls_per_n: 6.5,
            diameter: 12.0,
            ordering_seconds: 0.01,
        };
        for timing in [false, true] {
            let mut buf = Vec::new();
            write_ablation(std::slice::from_ref(&row), timing, &mut buf).unwrap();
            let back: Vec<AblationRecord> = read_records(buf.as_slice()).unwrap();
            assert_eq!(back[0].variant, "No-C");
            assert_eq!(back[0].edge_edit_rate, 1.25);
            assert_eq!(back[0].ordering_seconds.is_some(), timing);
        }
    }

    #[test]
    fn scaling_round_trip_with_errors() {
        let point = seriation::eval::ScalingPoint {
            queries: 10,
            per_phase: BTreeMap::from([("connect".to_string(), 4), ("condense".to_string(), 6)]),
            calls_per_n: 1.0,
            exact: true,
            ordering_seconds: 0.0,
            pipeline_seconds: 0.0,
        };
        let rows = vec![
            ScalingRow { n: 10, budget: None, outcome: Ok(point) },
            ScalingRow { n: 20, budget: Some(5), outcome: Err("aborted: ledger".into()) },
        ];
        let mut buf = Vec::new();
        write_scaling(&rows, false, &mut buf).unwrap();
        let back: Vec<ScalingRecord> = read_records(buf.as_slice()).unwrap();
        assert_eq!(back[0].queries, Some(10));
        assert_eq!(back[0].densify, Some(0));
        assert_eq!(back[1].status, "aborted");
        assert_eq!(back[1].queries, None);
    }

    #[test]
    fn permutation_round_trip() {
        let p = Permutation::new(vec![2, 0, 3, 1]).unwrap();
        let mut buf = Vec::new();
        write_permutation(&p, &mut buf).unwrap();
        assert_eq!(read_permutation(buf.as_slice()).unwrap(), p);
        assert!(read_permutation("0\nx\n".as_bytes()).is_err());
    }
}
