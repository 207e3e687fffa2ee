//! Simulation records and the above-capacity experiment.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::channel::BmsChannel;
use crate::decode::{bit_error, BitDecoderKind, ErrorMode};
use crate::error::{param, Error, Guards, Result};
use crate::rm::RmCode;
use crate::stats::ErrorEstimate;

/// Column order of every simulation CSV.
pub const CSV_HEADER: &str = "m,r,channel,decoder,trials,errors,p_hat,ci_low,ci_high,seed,wall_ms";

/// One row of simulation output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRecord {
    pub m: u32,
    pub r: u32,
    pub channel: String,
    pub decoder: String,
    pub trials: u64,
    /// Error count; fractional for exact evaluations, where it is p·2^n.
    pub errors: f64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub wall_ms: u64,
}

impl SimRecord {
    pub fn new(code: &RmCode, channel: &str, decoder: &str, est: &ErrorEstimate, seed: u64) -> Self {
        SimRecord {
            m: code.m(),
            r: code.r(),
            channel: channel.to_string(),
            decoder: decoder.to_string(),
            trials: est.trials,
            errors: est.errors,
            p_hat: est.p_hat,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            seed,
            wall_ms: 0,
        }
    }

    /// ci_low ≤ p_hat ≤ ci_high and errors ≤ trials.
    pub fn is_consistent(&self) -> bool {
        self.ci_low <= self.p_hat
            && self.p_hat <= self.ci_high
            && self.errors >= 0.0
            && self.errors <= self.trials as f64
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io.to_string()),
        other => Error::Parameter(format!("malformed CSV: {other:?}")),
    }
}

/// Writes the header and one row per record.
pub fn write_csv<W: Write>(out: W, records: &[SimRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    }
    for r in records {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SimRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header: Vec<String> = rd
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.join(",") != CSV_HEADER {
        return param(format!("unexpected CSV header {:?}", header.join(",")));
    }
    rd.deserialize().map(|r| r.map_err(csv_err)).collect()
}

/// Exit-decoder and full-observation records for a code above capacity.
#[derive(Debug, Clone, PartialEq)]
pub struct ConverseResult {
    pub exit: SimRecord,
    pub full: SimRecord,
}

impl ConverseResult {
    pub fn exit_accuracy(&self) -> f64 {
        1.0 - self.exit.p_hat
    }

    pub fn full_accuracy(&self) -> f64 {
        1.0 - self.full.p_hat
    }
}

/// Measures how well f(0^m) can be guessed when the rate exceeds capacity.
pub fn converse_experiment(
    code: &RmCode,
    ch: &BmsChannel<f64>,
    trials: u64,
    seed: u64,
    guards: &Guards,
) -> Result<ConverseResult> {
    let Some(eps) = ch.as_bsc() else {
        return param("the converse experiment runs on a BSC");
    };
    let capacity = ch.capacity();
    if code.rate() <= capacity {
        return param(format!(
            "rate {} of {code} does not exceed capacity {capacity} of {ch}",
            code.rate()
        ));
    }
    let mode = ErrorMode::MonteCarlo { trials, seed };
    let label = ch.to_string();
    let exit = bit_error(code, eps, BitDecoderKind::Exit, mode, guards)?;
    let full = bit_error(code, eps, BitDecoderKind::Full, mode, guards)?;
    Ok(ConverseResult {
        exit: SimRecord::new(code, &label, "exit", &exit, seed),
        full: SimRecord::new(code, &label, "full", &full, seed),
    })
}
