use std::fmt::Write as _;
use std::time::Instant;

use rmboost::bounds::{
    base_case_margin, bhattacharyya, boost_step_bound, conditional_tail_bound, list_error_log_bound,
    weight_enum_log_bound, BoundReport,
};
use rmboost::channel::{bms_transmit, BmsChannel};
use rmboost::decode::{bit_error, bms_exit_error_mc, BitDecoderKind, ErrorMode};
use rmboost::experiment::{converse_experiment, write_csv, SimRecord};
use rmboost::fourier::{q_function, span_dim, transform};
use rmboost::reconstruct::{reconstruct_trial, GridParams, RadiusFloor, ReconstructParams, Reconstructor};
use rmboost::rm::{encode, CoeffVector};
use rmboost::stats::{derived_rng, ErrorEstimate};
use rmboost::sunflower::{boost_paired_mc, build_sunflower, l2_boost_bound, verify_sunflower, BoostParams};
use rmboost::verify::run_suite;
use rmboost::{Channel, Error, Guards, RmCode, Word};
use serde::Serialize;

use crate::{CliError, Command, DecoderArg, FloorArg, Mode};

const STREAM_TRANSMIT: u64 = 0x7478;

pub struct Context {
    pub guards: Guards,
    pub timing: bool,
    pub to_file: bool,
}

type Out = Result<String, CliError>;

fn param(msg: impl Into<String>) -> CliError {
    CliError::Lib(Error::Parameter(msg.into()))
}

fn channel(spec: &str) -> Result<Channel, CliError> {
    Ok(spec.parse::<Channel>()?)
}

fn csv_text(records: &[SimRecord]) -> Out {
    let mut buf = Vec::new();
    write_csv(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Runs `f`, stamping wall_ms onto its record when timing is on.
fn timed(ctx: &Context, f: impl FnOnce() -> Result<SimRecord, CliError>) -> Result<SimRecord, CliError> {
    let start = Instant::now();
    let mut rec = f()?;
    if ctx.timing {
        rec.wall_ms = start.elapsed().as_millis() as u64;
    }
    Ok(rec)
}

fn floor_of(f: FloorArg) -> RadiusFloor {
    match f {
        FloorArg::One => RadiusFloor::One,
        FloorArg::Unique => RadiusFloor::UniqueDecoding,
    }
}

pub fn dispatch(cmd: &Command, ctx: &Context) -> (String, Result<(), CliError>) {
    let res = match cmd {
        Command::Encode { m, r, monomials } => encode_cmd(*m, *r, monomials),
        Command::Transmit {
            m,
            word,
            channel,
            seed,
        } => transmit_cmd(*m, word, channel, *seed),
        Command::ExitError {
            m,
            r,
            channel,
            mode,
            decoder,
            trials,
            seed,
        } => exit_error_cmd(ctx, *m, *r, channel, *mode, *decoder, *trials, *seed),
        Command::Boost {
            m_under,
            m,
            m_over,
            r,
            eps,
            petals,
            trials,
            seed,
        } => {
            let params = BoostParams {
                m_under: *m_under,
                m_mid: *m,
                m_over: *m_over,
                r: *r,
                petals: *petals,
            };
            boost_cmd(ctx, &params, *eps, *trials, *seed)
        }
        Command::Sunflower { m_under, m, m_over } => sunflower_cmd(*m_under, *m, *m_over),
        Command::Reconstruct {
            m,
            r,
            eps,
            c,
            floor,
            trials,
            seed,
        } => {
            let method = Reconstructor::List(ReconstructParams {
                c: *c,
                floor: floor_of(*floor),
            });
            reconstruct_cmd(ctx, *m, *r, *eps, &method, *trials, *seed)
        }
        Command::GridReconstruct {
            m,
            r,
            eps,
            c,
            c_prime,
            final_scale,
            floor,
            trials,
            seed,
        } => {
            let method = Reconstructor::Grid(GridParams {
                c: *c,
                c_prime: *c_prime,
                final_scale: *final_scale,
                floor: floor_of(*floor),
            });
            reconstruct_cmd(ctx, *m, *r, *eps, &method, *trials, *seed)
        }
        Command::Fourier { m, r, m_under, eps } => fourier_cmd(ctx, *m, *r, m_under.unwrap_or(*m), *eps),
        Command::Bounds {
            name,
            eps,
            d,
            p_e,
            k,
            gap,
            m,
            r,
            l,
            rate_gap,
        } => bounds_cmd(
            name,
            &BoundArgs {
                eps: *eps,
                d: *d,
                p_e: *p_e,
                k: *k,
                gap: *gap,
                m: *m,
                r: *r,
                l: *l,
                rate_gap: *rate_gap,
            },
        ),
        Command::Converse {
            m,
            r,
            channel,
            trials,
            seed,
        } => converse_cmd(ctx, *m, *r, channel, *trials, *seed),
        Command::Verify => return verify_cmd(ctx),
    };
    match res {
        Ok(text) => (text, Ok(())),
        Err(e) => (String::new(), Err(e)),
    }
}

fn encode_cmd(m: u32, r: u32, monomials: &[u64]) -> Out {
    let code = RmCode::new(m, r)?;
    let msg = CoeffVector::from_monomials(m, monomials)?;
    Ok(format!("{}\n", encode(&code, &msg)?.to_hex()))
}

fn transmit_cmd(m: u32, word: &str, spec: &str, seed: u64) -> Out {
    let ch = channel(spec)?;
    let w = Word::from_hex(m, word)?;
    let mut rng = derived_rng(seed, STREAM_TRANSMIT, 0);
    let obs = bms_transmit(&w, &ch, &mut rng)?;
    let mut out = format!("{}\n", obs.bits().to_hex());
    if ch.as_bsc().is_none() {
        let eps: Vec<String> = obs.eps().iter().map(f64::to_string).collect();
        writeln!(out, "{}", eps.join(",")).unwrap();
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn exit_error_cmd(
    ctx: &Context,
    m: u32,
    r: u32,
    channels: &[String],
    mode: Mode,
    decoder: DecoderArg,
    trials: u64,
    seed: u64,
) -> Out {
    let code = RmCode::new(m, r)?;
    let kind = match decoder {
        DecoderArg::Exit => BitDecoderKind::Exit,
        DecoderArg::Full => BitDecoderKind::Full,
    };
    let mut records = Vec::with_capacity(channels.len());
    for spec in channels {
        let ch = channel(spec)?;
        let label = ch.to_string();
        records.push(timed(ctx, || {
            let est = match (ch.as_bsc(), mode) {
                (Some(eps), Mode::Exact) => bit_error(&code, eps, kind, ErrorMode::Exact, &ctx.guards)?,
                (Some(eps), Mode::Mc) => {
                    bit_error(&code, eps, kind, ErrorMode::MonteCarlo { trials, seed }, &ctx.guards)?
                }
                (None, Mode::Exact) => return Err(param("exact mode needs a BSC channel")),
                (None, Mode::Mc) => {
                    if kind == BitDecoderKind::Full {
                        return Err(param("the full decoder is available on BSC channels only"));
                    }
                    bms_exit_error_mc(&code, &ch, trials, seed, &ctx.guards)?
                }
            };
            let seed = if mode == Mode::Exact { 0 } else { seed };
            Ok(SimRecord::new(&code, &label, kind.name(), &est, seed))
        })?);
    }
    csv_text(&records)
}

fn boost_cmd(ctx: &Context, params: &BoostParams, eps: f64, trials: u64, seed: u64) -> Out {
    let code = RmCode::new(params.m_over, params.r)?;
    let label = BmsChannel::bsc(eps)?.to_string();
    let start = Instant::now();
    let pb = boost_paired_mc(params, eps, trials, seed, &ctx.guards)?;
    let wall_ms = if ctx.timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    };
    let mut rows = vec![
        SimRecord::new(&code, &label, "boost", &pb.boost, seed),
        SimRecord::new(&code, &label, "single", &pb.single, seed),
    ];
    for row in &mut rows {
        row.wall_ms = wall_ms;
    }
    let verdict = if pb.separated(3.0) {
        "boost below single by more than 3 sigma"
    } else {
        "difference within 3 sigma"
    };
    eprintln!(
        "paired difference {:.6} (sigma {:.6}): {verdict}",
        pb.diff_mean, pb.diff_sigma
    );
    csv_text(&rows)
}

fn hex_points(points: &[u64]) -> String {
    points
        .iter()
        .map(|p| format!("{p:#x}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn sunflower_cmd(m_under: u32, m_mid: u32, m_over: u32) -> Out {
    let sf = build_sunflower(m_under, m_mid, m_over)?;
    let mut out = String::new();
    writeln!(out, "kernel {}", hex_points(sf.kernel().basis())).unwrap();
    for (i, p) in sf.petals().iter().enumerate() {
        writeln!(out, "petal {i} {}", hex_points(p.basis())).unwrap();
    }
    writeln!(out, "verified: {}", verify_sunflower(&sf)).unwrap();
    Ok(out)
}

#[derive(Serialize)]
struct ReconstructLine {
    m: u32,
    r: u32,
    eps: f64,
    seed: u64,
    trial: u64,
    radius_effective: usize,
    recovered: bool,
    hamming_to_truth: usize,
    list_len: usize,
    fallback: bool,
}

fn reconstruct_cmd(
    ctx: &Context,
    m: u32,
    r: u32,
    eps: f64,
    method: &Reconstructor,
    trials: u64,
    seed: u64,
) -> Out {
    let code = RmCode::new(m, r)?;
    let mut out = String::new();
    for trial in 0..trials {
        let (truth, rec) = reconstruct_trial(&code, eps, method, seed, trial, &ctx.guards)?;
        let line = ReconstructLine {
            m,
            r,
            eps,
            seed,
            trial,
            radius_effective: rec.radius,
            recovered: rec.word == truth,
            hamming_to_truth: rec.word.distance(&truth),
            list_len: rec.list_len,
            fallback: rec.fallback,
        };
        writeln!(out, "{}", serde_json::to_string(&line).expect("plain struct serializes")).unwrap();
    }
    Ok(out)
}

fn fourier_cmd(ctx: &Context, m: u32, r: u32, m_under: u32, eps: f64) -> Out {
    let code = RmCode::new(m, r)?;
    let q = q_function(&code, m_under, eps, &ctx.guards)?;
    let ft = transform(&q, eps)?;
    let mut out = String::from("subset_mask,dim,coefficient\n");
    for (s, c) in ft.coeffs().iter().enumerate() {
        writeln!(out, "{s:#x},{},{c}", span_dim(s as u64)).unwrap();
    }
    Ok(out)
}

struct BoundArgs {
    eps: Option<f64>,
    d: Option<u64>,
    p_e: Option<f64>,
    k: Option<u32>,
    gap: Option<u32>,
    m: Option<u32>,
    r: Option<u32>,
    l: Option<u32>,
    rate_gap: Option<f64>,
}

fn need<T>(v: Option<T>, bound: &str, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| param(format!("bound {bound} needs --{flag}")))
}

fn bounds_cmd(name: &str, a: &BoundArgs) -> Out {
    let report = match name {
        "base_case_margin" => {
            let g = need(a.rate_gap, name, "rate-gap")?;
            BoundReport::new(name, &[("rate_gap", g)], base_case_margin(g)?, false)
        }
        "conditional_tail" => {
            let (p, k, e) = (need(a.p_e, name, "p-e")?, need(a.k, name, "k")?, need(a.eps, name, "eps")?);
            let v = conditional_tail_bound(p, k, e)?;
            BoundReport::new(name, &[("p_e", p), ("k", k.into()), ("eps", e)], v, false)
        }
        "boost_step" => {
            let (p, k, e) = (need(a.p_e, name, "p-e")?, need(a.k, name, "k")?, need(a.eps, name, "eps")?);
            let gap = need(a.gap, name, "gap")?;
            let v = boost_step_bound(p, k, gap, e)?;
            BoundReport::new(
                name,
                &[("p_e", p), ("k", k.into()), ("gap", gap.into()), ("eps", e)],
                v,
                false,
            )
        }
        "l2_boost" => {
            let (p, k) = (need(a.p_e, name, "p-e")?, need(a.k, name, "k")?);
            BoundReport::new(name, &[("p_e", p), ("k", k.into())], l2_boost_bound(p, k)?, false)
        }
        "weight_enum" => {
            let (m, r, l) = (need(a.m, name, "m")?, need(a.r, name, "r")?, need(a.l, name, "l")?);
            let v = weight_enum_log_bound(m, r, l)?;
            BoundReport::new(name, &[("m", m.into()), ("r", r.into()), ("l", l.into())], v, true)
        }
        "bhattacharyya" => {
            let (e, d) = (need(a.eps, name, "eps")?, need(a.d, name, "d")?);
            if !(0.0..=1.0).contains(&e) {
                return Err(param(format!("crossover {e} outside [0,1]")));
            }
            BoundReport::new(name, &[("eps", e), ("d", d as f64)], bhattacharyya(e, d), false)
        }
        "list_error" => {
            let (m, r, l) = (need(a.m, name, "m")?, need(a.r, name, "r")?, need(a.l, name, "l")?);
            let e = need(a.eps, name, "eps")?;
            let v = list_error_log_bound(m, r, e, l)?;
            BoundReport::new(
                name,
                &[("m", m.into()), ("r", r.into()), ("eps", e), ("l", l.into())],
                v,
                true,
            )
        }
        other => {
            return Err(param(format!(
                "unknown bound {other:?}; expected one of base_case_margin, conditional_tail, \
                 boost_step, l2_boost, weight_enum, bhattacharyya, list_error"
            )))
        }
    };
    Ok(format!("name,value,log2\n{},{},{}\n", report.name, report.value, report.log2))
}

fn converse_cmd(ctx: &Context, m: u32, r: u32, spec: &str, trials: u64, seed: u64) -> Out {
    let code = RmCode::new(m, r)?;
    let ch = channel(spec)?;
    let start = Instant::now();
    let mut res = converse_experiment(&code, &ch, trials, seed, &ctx.guards)?;
    if ctx.timing {
        let ms = start.elapsed().as_millis() as u64;
        res.exit.wall_ms = ms;
        res.full.wall_ms = ms;
    }
    eprintln!(
        "rate {:.4} > capacity {:.4}; exit accuracy {:.4}, full accuracy {:.4}",
        code.rate(),
        ch.capacity(),
        res.exit_accuracy(),
        res.full_accuracy()
    );
    csv_text(&[res.exit, res.full])
}

/// Exact exit and full bit error of RM(3,1) at a few crossovers.
fn verify_sweep(ctx: &Context) -> Result<Vec<SimRecord>, CliError> {
    let code = RmCode::new(3, 1)?;
    let mut rows = Vec::new();
    for eps in [0.05, 0.1, 0.2] {
        let label = BmsChannel::bsc(eps)?.to_string();
        for kind in [BitDecoderKind::Exit, BitDecoderKind::Full] {
            rows.push(timed(ctx, || {
                let est: ErrorEstimate = bit_error(&code, eps, kind, ErrorMode::Exact, &ctx.guards)?;
                Ok(SimRecord::new(&code, &label, kind.name(), &est, 0))
            })?);
        }
    }
    Ok(rows)
}

fn verify_cmd(ctx: &Context) -> (String, Result<(), CliError>) {
    let results = run_suite(&ctx.guards);
    let mut report = String::new();
    for c in &results {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        writeln!(report, "{tag} {}: {}", c.name, c.detail).unwrap();
    }
    let failed = results.iter().filter(|c| !c.passed).count();
    let status = if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Checks(failed))
    };
    if !ctx.to_file {
        return (report, status);
    }
    eprint!("{report}");
    match verify_sweep(ctx).and_then(|rows| csv_text(&rows)) {
        Ok(csv) => (csv, status),
        Err(e) => (String::new(), Err(e)),
    }
}
