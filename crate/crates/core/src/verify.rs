//! Self-check suite run by the `verify` command: structural invariants that
//! must hold on every small instance, evaluated exhaustively where possible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{conditional_tail_bound, weight_enum_log_bound};
use crate::channel::{BmsChannel, BmsObservation};
use crate::decode::{bms_exit_verdict, exit_error, exit_error_exact, q_table, BitMap, ErrorMode, Route};
use crate::error::{Guards, Result};
use crate::fourier::{orbit_symmetry_check, restriction_identity_check, transform};
use crate::rm::{encode, is_codeword, mobius, CoeffVector, RmCode, Word};
use crate::sunflower::{build_sunflower, l2_boost_bound, sunflower_size, verify_sunflower};

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(bool, String)>) -> CheckResult {
    match f() {
        Ok((passed, detail)) => CheckResult { name, passed, detail },
        Err(e) => CheckResult {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn encode_round_trip() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut cases = 0;
    for m in 0..=8 {
        for r in 0..=m {
            let code = RmCode::new(m, r)?;
            for _ in 0..4 {
                let msg = CoeffVector::random(&code, &mut rng);
                let w = encode(&code, &msg)?;
                if mobius(&w) != msg || !is_codeword(&code, &w) {
                    return Ok((false, format!("{code} round trip failed")));
                }
                cases += 1;
            }
        }
    }
    Ok((true, format!("{cases} messages")))
}

fn routes_agree(guards: &Guards) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for r in 0..=4 {
        let code = RmCode::new(4, r)?;
        let p = BitMap::with_route(&code, Route::Primal, guards)?;
        let d = BitMap::with_route(&code, Route::Dual, guards)?;
        for _ in 0..100 {
            let y = Word::from_u64(4, rng.gen::<u64>() & 0xffff);
            let t = rng.gen_range(0..16);
            if p.exit_verdict(&y, t, 0.1) != d.exit_verdict(&y, t, 0.1)
                || p.full_verdict(&y, t, 0.1) != d.full_verdict(&y, t, 0.1)
            {
                return Ok((false, format!("{code}: primal and dual disagree")));
            }
        }
    }
    Ok((true, "RM(4,0..4), 100 words each".into()))
}

fn q_quantized(guards: &Guards) -> Result<(bool, String)> {
    let mut tables = 0;
    for m in 0..=4 {
        for r in 0..=m {
            let code = RmCode::new(m, r)?;
            let q = q_table(&code, m, 0.1f64, guards)?;
            if !q.iter().all(|&v| v == 0.0 || v == 0.5 || v == 1.0) {
                return Ok((false, format!("{code} has a Q value outside {{0,1/2,1}}")));
            }
            tables += 1;
        }
    }
    Ok((true, format!("{tables} codes with n ≤ 16")))
}

fn spectral(guards: &Guards) -> Result<(bool, String)> {
    let code = RmCode::new(3, 1)?;
    let mut worst = 0.0f64;
    for eps in [0.1f64, 0.3] {
        let q = q_table(&code, 3, eps, guards)?;
        let ft = transform(&q, eps)?;
        let inner: f64 = q
            .iter()
            .enumerate()
            .map(|(z, &v)| {
                let w = (z as u64).count_ones() as i32;
                eps.powi(w) * (1.0 - eps).powi(8 - w) * v * v
            })
            .sum();
        worst = worst.max((ft.energy() - inner).abs());
        for s in (1..256).step_by(2) {
            worst = worst.max(ft.coeff(s).abs());
        }
        for mu in [1, 2] {
            worst = worst.max(restriction_identity_check(&code, mu, eps, guards)?);
        }
        worst = worst.max(orbit_symmetry_check(&code, eps, guards)?);
    }
    Ok((worst <= 1e-9, format!("max discrepancy {worst:.3e}")))
}

fn sunflowers() -> Result<(bool, String)> {
    let mut count = 0;
    for m_over in 1..=8u32 {
        for m_mid in 1..m_over {
            for m_under in 0..m_mid {
                if m_over + m_under + 1 < 2 * m_mid {
                    continue;
                }
                let sf = build_sunflower(m_under, m_mid, m_over)?;
                let want = sunflower_size(m_under, m_mid, m_over)?;
                if sf.petals().len() as u64 != want || !verify_sunflower(&sf) {
                    return Ok((false, format!("({m_under},{m_mid},{m_over}) failed")));
                }
                count += 1;
            }
        }
    }
    Ok((true, format!("{count} triples")))
}

fn tail_bounds(guards: &Guards) -> Result<(bool, String)> {
    let code = RmCode::new(3, 1)?;
    let eps = 0.1f64;
    let p_e = exit_error_exact(&code, eps, guards)?;
    for mu in [1u32, 2] {
        let q = q_table(&code, mu, eps, guards)?;
        let bits = 1i32 << mu;
        let tail = |thr: f64| -> f64 {
            q.iter()
                .enumerate()
                .filter(|(_, &v)| v >= thr)
                .map(|(z, _)| {
                    let w = (z as u64).count_ones() as i32;
                    eps.powi(w) * (1.0 - eps).powi(bits - w)
                })
                .sum()
        };
        let k = 3 - mu;
        if tail(p_e / 2.0 + 0.25) > l2_boost_bound(p_e, k)?
            || tail(1.0 / 3.0) > conditional_tail_bound(p_e, k, eps)?
        {
            return Ok((false, format!("bound violated at m_under={mu}")));
        }
    }
    Ok((true, "RM(3,1), eps=0.1, m_under in {1,2}".into()))
}

fn weight_enum(guards: &Guards) -> Result<(bool, String)> {
    let code = RmCode::new(4, 2)?;
    let dist = code.weight_distribution(guards)?;
    for l in 1..=3u32 {
        let radius = 1usize << (4 - l);
        let count: u64 = dist[..=radius].iter().sum();
        if (count as f64).log2() > weight_enum_log_bound(4, 2, l)? {
            return Ok((false, format!("count {count} within {radius} exceeds bound")));
        }
    }
    Ok((true, "RM(4,2), l = 1..3".into()))
}

fn bms(guards: &Guards) -> Result<(bool, String)> {
    let code = RmCode::new(3, 1)?;
    let map = BitMap::new(&code, guards)?;
    for z in 0..256u64 {
        let y = Word::from_u64(3, z);
        let obs = BmsObservation::uniform(0.1f64, y.clone());
        if bms_exit_verdict(&code, &obs, guards)? != map.exit_verdict(&y, 0, 0.1) {
            return Ok((false, format!("pattern {z:#04x} differs")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let k = rng.gen_range(1..5);
        let weights: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        let comps = weights
            .iter()
            .map(|w| (w / total, rng.gen_range(0.0..0.5)))
            .collect();
        let ch = BmsChannel::new(comps)?;
        let mut prev = 0.0;
        for t in 1..=8 {
            let c = ch.quantize(1 << t)?.capacity();
            if c > ch.capacity() + 1e-12 || c + 1e-12 < prev {
                return Ok((false, format!("quantization not monotone for {ch}")));
            }
            prev = c;
        }
    }
    Ok((true, "256 patterns, 100 random channels".into()))
}

fn determinism(guards: &Guards) -> Result<(bool, String)> {
    let code = RmCode::new(3, 1)?;
    let mode = ErrorMode::MonteCarlo {
        trials: 20_000,
        seed: 99,
    };
    let mut runs = Vec::new();
    for threads in [1, 4] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| crate::Error::Io(e.to_string()))?;
        runs.push(pool.install(|| exit_error(&code, 0.1, mode, guards))?);
    }
    Ok((runs[0] == runs[1], format!("p_hat {}", runs[0].p_hat)))
}

/// Runs every check; the suite passes when all do.
pub fn run_suite(guards: &Guards) -> Vec<CheckResult> {
    vec![
        check("encode/mobius round trip", encode_round_trip),
        check("primal and dual MAP agree", || routes_agree(guards)),
        check("Q values in {0,1/2,1}", || q_quantized(guards)),
        check("spectral identities", || spectral(guards)),
        check("sunflower construction", sunflowers),
        check("tail bounds dominate", || tail_bounds(guards)),
        check("weight enumerator bound", || weight_enum(guards)),
        check("BMS consistency", || bms(guards)),
        check("thread-count determinism", || determinism(guards)),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_checks_pass() {
        let g = Guards::default();
        for r in [
            check("round trip", encode_round_trip),
            check("sunflowers", sunflowers),
            check("bounds", || tail_bounds(&g)),
            check("weights", || weight_enum(&g)),
            check("bms", || bms(&g)),
        ] {
            assert!(r.passed, "{}: {}", r.name, r.detail);
        }
    }
}
