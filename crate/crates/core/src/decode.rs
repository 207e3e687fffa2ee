//! Exact maximum-likelihood decoders for small Reed-Muller codes.
//!
//! The bitwise MAP decision for coordinate `t` compares the posterior mass of
//! codewords with `c_t = 0` against those with `c_t = 1`. On a BSC the
//! difference is, up to a positive factor, an integer polynomial in one
//! variable:
//!
//! * primal route: Σ_c ±w^{d(c,y)} over the code, with w = ε/(1-ε);
//! * dual route: the same quantity rewritten as a sum over the dual code
//!   RM(m, m-r-1) in θ = 1-2ε (Poisson summation over F2^n).
//!
//! Either route may be used; [`BitMap::new`] picks the smaller codebook. A
//! tie is an identically zero polynomial, which is detected on the integer
//! coefficients, so floating point never manufactures or hides a tie.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::BmsObservation;
use crate::error::{param, Guards, Result};
use crate::rm::{random_codeword, RmCode, Word};
use crate::scalar::Real;
use crate::stats::{derived_rng, ErrorEstimate};

const STREAM_EXIT_MC: u64 = 0x6578_6974;
const STREAM_FULL_MC: u64 = 0x6675_6c6c;

/// Outcome of a MAP comparison before any coin is flipped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Zero,
    One,
    Tie,
}

impl Verdict {
    fn from_sign(o: Ordering) -> Self {
        match o {
            Ordering::Greater => Verdict::Zero,
            Ordering::Less => Verdict::One,
            Ordering::Equal => Verdict::Tie,
        }
    }

    /// Flips a fair coin with `rng` on a tie.
    pub fn resolve<R: Rng + ?Sized>(self, rng: &mut R) -> BitDecision {
        match self {
            Verdict::Zero => BitDecision {
                value: false,
                tie: false,
            },
            Verdict::One => BitDecision {
                value: true,
                tie: false,
            },
            Verdict::Tie => BitDecision {
                value: rng.gen(),
                tie: true,
            },
        }
    }

    /// Expected error against `truth`, in halves: a tie costs 1/2.
    pub fn error_halves(self, truth: bool) -> u64 {
        match (self, truth) {
            (Verdict::Tie, _) => 1,
            (Verdict::Zero, false) | (Verdict::One, true) => 0,
            _ => 2,
        }
    }
}

/// A decoded bit; `tie` records that `value` came from a fair coin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BitDecision {
    pub value: bool,
    pub tie: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    /// Enumerate the code itself.
    Primal,
    /// Enumerate the dual code.
    Dual,
}

/// Integer polynomial whose sign at the channel parameter decides a bit:
/// positive favours 0, negative favours 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionPoly {
    route: Route,
    coefs: Vec<i64>,
}

impl DecisionPoly {
    pub fn is_zero(&self) -> bool {
        self.coefs.iter().all(|&c| c == 0)
    }

    pub fn coefs(&self) -> &[i64] {
        &self.coefs
    }

    pub fn verdict<T: Real>(&self, eps: T) -> Verdict {
        let x = match self.route {
            Route::Primal => eps / (T::one() - eps),
            Route::Dual => T::one() - eps - eps,
        };
        Verdict::from_sign(poly_sign(&self.coefs, x))
    }
}

/// Sign of Σ c_k x^k for x ∈ [0, 1], scaled by the lowest nonzero power.
fn poly_sign<T: Real>(coefs: &[i64], x: T) -> Ordering {
    let Some(lo) = coefs.iter().position(|&c| c != 0) else {
        return Ordering::Equal;
    };
    let mut acc = T::zero();
    let mut pow = T::one();
    for &c in &coefs[lo..] {
        if c != 0 {
            acc = acc + T::from_i64(c).unwrap() * pow;
        }
        pow = pow * x;
    }
    acc.partial_cmp(&T::zero()).unwrap_or(Ordering::Equal)
}

/// Bitwise MAP engine for one code, holding the enumerated codebook of the chosen route.
#[derive(Debug, Clone)]
pub struct BitMap {
    code: RmCode,
    route: Route,
    words: Vec<Word>,
}

impl BitMap {
    /// Uses the dual route when the dual code is strictly smaller.
    pub fn new(code: &RmCode, guards: &Guards) -> Result<Self> {
        let dim = code.dim();
        let dual_dim = code.n() as u32 - dim;
        let route = if dual_dim < dim {
            Route::Dual
        } else {
            Route::Primal
        };
        BitMap::with_route(code, route, guards)
    }

    pub fn with_route(code: &RmCode, route: Route, guards: &Guards) -> Result<Self> {
        let words = match route {
            Route::Primal => code.codewords(guards)?,
            Route::Dual => match code.dual() {
                Some(d) => d.codewords(guards)?,
                None => vec![Word::zeros(code.m())],
            },
        };
        Ok(BitMap {
            code: *code,
            route,
            words,
        })
    }

    pub fn code(&self) -> &RmCode {
        &self.code
    }

    pub fn route(&self) -> Route {
        self.route
    }

    fn check(&self, y: &Word, t: usize) {
        assert_eq!(y.m(), self.code.m(), "word length does not match the code");
        assert!(t < y.len(), "target coordinate out of range");
    }

    /// Decision polynomial for `c_t` from every coordinate except `t`.
    pub fn exit_poly(&self, y: &Word, t: usize) -> DecisionPoly {
        self.check(y, t);
        let n = self.code.n();
        let yt = y.get(t);
        let mut coefs = vec![0i64; n + 1];
        match self.route {
            Route::Primal => {
                for c in &self.words {
                    let ct = c.get(t);
                    let d = c.distance(y) - usize::from(ct != yt);
                    coefs[d] += if ct { -1 } else { 1 };
                }
            }
            Route::Dual => {
                for u in self.words.iter().filter(|u| u.get(t)) {
                    let parity = u.and_weight(y) - usize::from(yt);
                    coefs[u.weight() - 1] += if parity % 2 == 0 { 1 } else { -1 };
                }
            }
        }
        DecisionPoly {
            route: self.route,
            coefs,
        }
    }

    /// Decision polynomial for `c_t` from the complete word.
    pub fn full_poly(&self, y: &Word, t: usize) -> DecisionPoly {
        self.check(y, t);
        let n = self.code.n();
        let yt = y.get(t);
        let mut coefs = vec![0i64; n + 2];
        match self.route {
            Route::Primal => {
                for c in &self.words {
                    coefs[c.distance(y)] += if c.get(t) { -1 } else { 1 };
                }
            }
            Route::Dual => {
                // Difference ∝ B(θ) ± θ A(θ), + when y_t = 0.
                for u in &self.words {
                    let w = u.weight();
                    if u.get(t) {
                        let parity = u.and_weight(y) - usize::from(yt);
                        coefs[w - 1] += if parity % 2 == 0 { 1 } else { -1 };
                    } else {
                        let s = if u.and_weight(y) % 2 == 0 { 1 } else { -1 };
                        coefs[w + 1] += if yt { -s } else { s };
                    }
                }
            }
        }
        DecisionPoly {
            route: self.route,
            coefs,
        }
    }

    pub fn exit_verdict<T: Real>(&self, y: &Word, t: usize, eps: T) -> Verdict {
        self.exit_poly(y, t).verdict(eps)
    }

    pub fn full_verdict<T: Real>(&self, y: &Word, t: usize, eps: T) -> Verdict {
        self.full_poly(y, t).verdict(eps)
    }
}

/// A decoder for the bit at coordinate 0 of a word of length 2^m.
pub trait BitDecoder: Sync {
    /// Number of variables of the words this decoder accepts.
    fn word_m(&self) -> u32;

    fn decide<T: Real, R: Rng + ?Sized>(&self, y: &Word, eps: T, rng: &mut R) -> BitDecision;
}

/// Bitwise MAP for coordinate 0 that ignores the observation at coordinate 0.
#[derive(Debug, Clone)]
pub struct ExitDecoder(pub BitMap);

impl ExitDecoder {
    pub fn new(code: &RmCode, guards: &Guards) -> Result<Self> {
        Ok(ExitDecoder(BitMap::new(code, guards)?))
    }
}

impl BitDecoder for ExitDecoder {
    fn word_m(&self) -> u32 {
        self.0.code().m()
    }

    fn decide<T: Real, R: Rng + ?Sized>(&self, y: &Word, eps: T, rng: &mut R) -> BitDecision {
        self.0.exit_verdict(y, 0, eps).resolve(rng)
    }
}

/// Bitwise MAP for coordinate 0 from the complete word.
#[derive(Debug, Clone)]
pub struct FullDecoder(pub BitMap);

impl FullDecoder {
    pub fn new(code: &RmCode, guards: &Guards) -> Result<Self> {
        Ok(FullDecoder(BitMap::new(code, guards)?))
    }
}

impl BitDecoder for FullDecoder {
    fn word_m(&self) -> u32 {
        self.0.code().m()
    }

    fn decide<T: Real, R: Rng + ?Sized>(&self, y: &Word, eps: T, rng: &mut R) -> BitDecision {
        self.0.full_verdict(y, 0, eps).resolve(rng)
    }
}

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return param(format!("crossover {eps} outside (0,1/2)"));
    }
    Ok(())
}

/// MAP estimate of f(0^m) from every coordinate except 0^m.
pub fn exit_bit_map<T: Real, R: Rng + ?Sized>(
    code: &RmCode,
    noisy: &Word,
    eps: T,
    rng: &mut R,
    guards: &Guards,
) -> Result<BitDecision> {
    check_eps(eps)?;
    check_len(code, noisy)?;
    Ok(BitMap::new(code, guards)?
        .exit_verdict(noisy, 0, eps)
        .resolve(rng))
}

/// MAP estimate of f(0^m) from the complete noisy word.
pub fn bit_map_full<T: Real, R: Rng + ?Sized>(
    code: &RmCode,
    noisy: &Word,
    eps: T,
    rng: &mut R,
    guards: &Guards,
) -> Result<BitDecision> {
    check_eps(eps)?;
    check_len(code, noisy)?;
    Ok(BitMap::new(code, guards)?
        .full_verdict(noisy, 0, eps)
        .resolve(rng))
}

fn check_len(code: &RmCode, w: &Word) -> Result<()> {
    if w.m() != code.m() {
        return param(format!(
            "word has length 2^{}, code {code} has length 2^{}",
            w.m(),
            code.m()
        ));
    }
    Ok(())
}

/// Index of a candidate with maximal agreement with `noisy`, uniform among ties.
pub fn pick_max_agreement<R: Rng + ?Sized>(
    candidates: &[Word],
    noisy: &Word,
    rng: &mut R,
) -> Option<usize> {
    let best = candidates.iter().map(|c| c.distance(noisy)).min()?;
    let ties: Vec<usize> = candidates
        .iter()
        .enumerate()
        .filter(|(_, c)| c.distance(noisy) == best)
        .map(|(i, _)| i)
        .collect();
    Some(ties[rng.gen_range(0..ties.len())])
}

/// Codeword with maximal agreement with `noisy`, ties broken uniformly.
pub fn block_ml<T: Real, R: Rng + ?Sized>(
    code: &RmCode,
    noisy: &Word,
    eps: T,
    rng: &mut R,
    guards: &Guards,
) -> Result<Word> {
    check_eps(eps)?;
    check_len(code, noisy)?;
    let book = code.codewords(guards)?;
    let i = pick_max_agreement(&book, noisy, rng).expect("codebook is never empty");
    Ok(book[i].clone())
}

/// Exit MAP with coordinate-dependent crossovers revealed by a BMS channel.
///
/// Coordinates with ε = 1/2 carry no information; coordinates with ε = 0 are
/// hard constraints. Crossovers are grouped into classes of equal value and
/// the posterior difference becomes an integer polynomial in one variable per
/// class, so ties are again detected exactly.
pub fn bms_exit_verdict<T: Real>(
    code: &RmCode,
    obs: &BmsObservation<T>,
    guards: &Guards,
) -> Result<Verdict> {
    let y = obs.bits();
    check_len(code, y)?;
    let half = T::lit(0.5);
    let mut classes: Vec<T> = Vec::new();
    let mut class_masks: Vec<Word> = Vec::new();
    let mut hard = Word::zeros(code.m());
    for (x, &e) in obs.eps().iter().enumerate().skip(1) {
        if !(e >= T::zero() && e <= half) {
            return param(format!("revealed crossover {e} outside [0,1/2]"));
        }
        if e == T::zero() {
            hard.set(x, true);
        } else if e < half {
            let k = match classes.iter().position(|&c| c == e) {
                Some(k) => k,
                None => {
                    classes.push(e);
                    class_masks.push(Word::zeros(code.m()));
                    classes.len() - 1
                }
            };
            class_masks[k].set(x, true);
        }
    }

    let book = code.codewords(guards)?;
    let mut terms: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
    for c in &book {
        let diff = c.xor(y);
        if diff.and_weight(&hard) != 0 {
            continue;
        }
        let sig: Vec<u32> = class_masks
            .iter()
            .map(|mask| diff.and_weight(mask) as u32)
            .collect();
        *terms.entry(sig).or_default() += if c.get(0) { -1 } else { 1 };
    }
    terms.retain(|_, v| *v != 0);
    if terms.is_empty() {
        return Ok(Verdict::Tie);
    }

    if classes.len() <= 1 {
        // One class: the same polynomial the BSC primal route evaluates.
        let mut coefs = vec![0i64; code.n() + 1];
        for (sig, v) in &terms {
            coefs[sig.first().copied().unwrap_or(0) as usize] += v;
        }
        let eps = classes.first().copied().unwrap_or(T::lit(0.25));
        return Ok(DecisionPoly {
            route: Route::Primal,
            coefs,
        }
        .verdict(eps));
    }

    let log_w: Vec<T> = classes.iter().map(|&e| (e / (T::one() - e)).ln()).collect();
    let logs: Vec<(T, i64)> = terms
        .iter()
        .map(|(sig, &v)| {
            let l = sig
                .iter()
                .zip(&log_w)
                .fold(T::zero(), |acc, (&s, &lw)| acc + T::count(s as u64) * lw);
            (l, v)
        })
        .collect();
    let top = logs
        .iter()
        .map(|t| t.0)
        .fold(T::neg_infinity(), |a, b| a.max(b));
    let total = logs.iter().fold(T::zero(), |acc, &(l, v)| {
        acc + T::from_i64(v).unwrap() * (l - top).exp()
    });
    Ok(Verdict::from_sign(
        total.partial_cmp(&T::zero()).unwrap_or(Ordering::Equal),
    ))
}

pub fn bms_exit_bit_map<T: Real, R: Rng + ?Sized>(
    code: &RmCode,
    obs: &BmsObservation<T>,
    rng: &mut R,
    guards: &Guards,
) -> Result<BitDecision> {
    Ok(bms_exit_verdict(code, obs, guards)?.resolve(rng))
}

/// Counts of error halves per (kernel pattern, free-noise weight), transmitting 0.
///
/// The first 2^{m_under} coordinates form the kernel F2^{m_under} × 0; the
/// remaining coordinates are summed over.
struct PatternCounts {
    free_bits: u32,
    // counts[z' * (free_bits + 1) + w]
    counts: Vec<u64>,
}

fn check_m_under(code: &RmCode, m_under: u32) -> Result<()> {
    if m_under > code.m() {
        return param(format!(
            "kernel dimension {m_under} exceeds m = {}",
            code.m()
        ));
    }
    Ok(())
}

fn pattern_counts<F>(
    code: &RmCode,
    m_under: u32,
    guards: &Guards,
    verdict: F,
) -> Result<PatternCounts>
where
    F: Fn(&Word) -> Verdict + Sync,
{
    check_m_under(code, m_under)?;
    let n = code.n() as u32;
    guards.check_noise("noise-pattern sum", n)?;
    if code.m() > 6 {
        return param("exhaustive noise sums need m ≤ 6");
    }
    let kernel_bits = 1u32 << m_under;
    let free_bits = n - kernel_bits;
    let stride = free_bits as usize + 1;
    let kernel_mask = (1u64 << kernel_bits) - 1;
    let total = 1u64 << n;
    let chunk = 1u64 << 10.min(n);
    let counts = (0..total / chunk)
        .into_par_iter()
        .map(|c| {
            let mut local = vec![0u64; (1usize << kernel_bits) * stride];
            for z in c * chunk..(c + 1) * chunk {
                let halves = verdict(&Word::from_u64(code.m(), z)).error_halves(false);
                if halves != 0 {
                    let key = (z & kernel_mask) as usize;
                    let w = (z >> kernel_bits).count_ones() as usize;
                    local[key * stride + w] += halves;
                }
            }
            local
        })
        .reduce(
            || vec![0u64; (1usize << kernel_bits) * stride],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(PatternCounts { free_bits, counts })
}

impl PatternCounts {
    fn conditional<T: Real>(&self, key: usize, eps: T) -> T {
        let stride = self.free_bits as usize + 1;
        let q = T::one() - eps;
        let mut acc = T::zero();
        for (w, &h) in self.counts[key * stride..(key + 1) * stride].iter().enumerate() {
            if h != 0 {
                acc = acc
                    + T::count(h)
                        * eps.powi(w as i32)
                        * q.powi((self.free_bits as usize - w) as i32);
            }
        }
        acc / T::lit(2.0)
    }
}

/// Exact P_e(m, r, ε): probability the exit decoder misses f(0^m), ties costing 1/2.
pub fn exit_error_exact<T: Real>(code: &RmCode, eps: T, guards: &Guards) -> Result<T> {
    check_eps(eps)?;
    let map = BitMap::new(code, guards)?;
    let pc = pattern_counts(code, 0, guards, |y| map.exit_verdict(y, 0, eps))?;
    // Coordinate 0 is ignored by the decoder; average over its two values.
    Ok((pc.conditional(0, eps) * (T::one() - eps)) + pc.conditional(1, eps) * eps)
}

/// Exact error of the full-observation bit decoder at 0^m.
pub fn full_bit_error_exact<T: Real>(code: &RmCode, eps: T, guards: &Guards) -> Result<T> {
    check_eps(eps)?;
    let map = BitMap::new(code, guards)?;
    let pc = pattern_counts(code, 0, guards, |y| map.full_verdict(y, 0, eps))?;
    Ok((pc.conditional(0, eps) * (T::one() - eps)) + pc.conditional(1, eps) * eps)
}

/// P_e(m_under, m, r, ε | z') for every kernel pattern z', indexed by the pattern's bits.
pub fn q_table<T: Real>(code: &RmCode, m_under: u32, eps: T, guards: &Guards) -> Result<Vec<T>> {
    check_eps(eps)?;
    let map = BitMap::new(code, guards)?;
    let pc = pattern_counts(code, m_under, guards, |y| map.exit_verdict(y, 0, eps))?;
    Ok((0..1usize << (1u32 << m_under))
        .map(|key| pc.conditional(key, eps))
        .collect())
}

/// P_e(m_under, m, r, ε | z'): exit error given the noise on F2^{m_under} × 0 equals `z_prime`.
pub fn conditional_error<T: Real>(
    code: &RmCode,
    m_under: u32,
    z_prime: &Word,
    eps: T,
    guards: &Guards,
) -> Result<T> {
    check_eps(eps)?;
    check_m_under(code, m_under)?;
    if z_prime.m() != m_under {
        return param(format!(
            "kernel pattern has length 2^{}, expected 2^{m_under}",
            z_prime.m()
        ));
    }
    let n = code.n();
    let kernel_bits = 1usize << m_under;
    let free_bits = (n - kernel_bits) as u32;
    guards.check_noise("conditional noise sum", free_bits)?;
    let map = BitMap::new(code, guards)?;
    let q = T::one() - eps;
    let mut halves = vec![0u64; free_bits as usize + 1];
    for free in 0..1u64 << free_bits {
        let mut y = Word::zeros(code.m());
        for i in 0..kernel_bits {
            if z_prime.get(i) {
                y.set(i, true);
            }
        }
        for k in 0..free_bits as usize {
            if (free >> k) & 1 == 1 {
                y.set(kernel_bits + k, true);
            }
        }
        halves[free.count_ones() as usize] += map.exit_verdict(&y, 0, eps).error_halves(false);
    }
    Ok(halves
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (w, &h)| {
            acc + T::count(h) * eps.powi(w as i32) * q.powi((free_bits as usize - w) as i32)
        })
        / T::lit(2.0))
}

/// How a decoder error rate is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorMode {
    /// Sum over every noise pattern.
    Exact,
    /// Independent trials, trial `i` seeded from `(seed, i)`.
    MonteCarlo { trials: u64, seed: u64 },
}

/// Which bit decoder an error estimate refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitDecoderKind {
    /// Ignores the target's own observation.
    Exit,
    /// Uses the complete word.
    Full,
}

impl BitDecoderKind {
    pub fn name(self) -> &'static str {
        match self {
            BitDecoderKind::Exit => "exit",
            BitDecoderKind::Full => "full",
        }
    }
}

fn bit_error_mc<T: Real>(
    code: &RmCode,
    eps: T,
    kind: BitDecoderKind,
    trials: u64,
    seed: u64,
    guards: &Guards,
) -> Result<ErrorEstimate> {
    check_eps(eps)?;
    let map = BitMap::new(code, guards)?;
    let stream = match kind {
        BitDecoderKind::Exit => STREAM_EXIT_MC,
        BitDecoderKind::Full => STREAM_FULL_MC,
    };
    let errors: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(seed, stream, i);
            let f = random_codeword(code, &mut rng);
            let y = crate::channel::bsc_transmit(&f, eps, &mut rng).expect("eps checked");
            let v = match kind {
                BitDecoderKind::Exit => map.exit_verdict(&y, 0, eps),
                BitDecoderKind::Full => map.full_verdict(&y, 0, eps),
            };
            u64::from(v.resolve(&mut rng).value != f.get(0))
        })
        .sum();
    Ok(ErrorEstimate::monte_carlo(errors as f64, trials))
}

/// Error of the exit or full bit decoder at 0^m, exactly or by simulation.
pub fn bit_error<T: Real>(
    code: &RmCode,
    eps: T,
    kind: BitDecoderKind,
    mode: ErrorMode,
    guards: &Guards,
) -> Result<ErrorEstimate> {
    match mode {
        ErrorMode::Exact => {
            let p = match kind {
                BitDecoderKind::Exit => exit_error_exact(code, eps, guards)?,
                BitDecoderKind::Full => full_bit_error_exact(code, eps, guards)?,
            };
            Ok(ErrorEstimate::exact(p.as_f64(), 1u64 << code.n()))
        }
        ErrorMode::MonteCarlo { trials, seed } => bit_error_mc(code, eps, kind, trials, seed, guards),
    }
}

/// Monte Carlo exit error over a BMS channel, each decision using the revealed crossovers.
pub fn bms_exit_error_mc<T: Real>(
    code: &RmCode,
    ch: &crate::channel::BmsChannel<T>,
    trials: u64,
    seed: u64,
    guards: &Guards,
) -> Result<ErrorEstimate> {
    guards.check_dim("codebook enumeration", code.dim())?;
    let errors: Result<u64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(seed, STREAM_EXIT_MC, i);
            let f = random_codeword(code, &mut rng);
            let obs = crate::channel::bms_transmit(&f, ch, &mut rng)?;
            let d = bms_exit_bit_map(code, &obs, &mut rng, guards)?;
            Ok(u64::from(d.value != f.get(0)))
        })
        .sum();
    Ok(ErrorEstimate::monte_carlo(errors? as f64, trials))
}

/// P_e(m, r, ε) exactly or by simulation.
pub fn exit_error<T: Real>(
    code: &RmCode,
    eps: T,
    mode: ErrorMode,
    guards: &Guards,
) -> Result<ErrorEstimate> {
    bit_error(code, eps, BitDecoderKind::Exit, mode, guards)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{bsc_noise, BmsChannel};
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rm(m: u32, r: u32) -> RmCode {
        RmCode::new(m, r).unwrap()
    }

    const G: Guards = Guards {
        max_dim: 24,
        max_noise_bits: 16,
    };

    /// Brute-force posterior comparison straight from the likelihoods, no polynomials.
    fn oracle_verdict(code: &RmCode, y: &Word, t: usize, eps: f64, include_t: bool) -> Verdict {
        let mut mass = [0.0f64; 2];
        for c in code.codewords(&G).unwrap() {
            let mut p = 1.0;
            for x in 0..y.len() {
                if x == t && !include_t {
                    continue;
                }
                p *= if c.get(x) == y.get(x) { 1.0 - eps } else { eps };
            }
            mass[c.get(t) as usize] += p;
        }
        let scale = mass[0].max(mass[1]);
        if (mass[0] - mass[1]).abs() <= 1e-9 * scale {
            Verdict::Tie
        } else if mass[0] > mass[1] {
            Verdict::Zero
        } else {
            Verdict::One
        }
    }

    #[test]
    fn routes_agree_with_oracle_exhaustively() {
        for (m, r) in [(2, 0), (2, 1), (3, 0), (3, 1), (3, 2), (2, 2)] {
            let code = rm(m, r);
            let primal = BitMap::with_route(&code, Route::Primal, &G).unwrap();
            let dual = BitMap::with_route(&code, Route::Dual, &G).unwrap();
            for z in 0..1u64 << code.n() {
                let y = Word::from_u64(m, z);
                for t in [0, code.n() - 1] {
                    let pe = primal.exit_poly(&y, t);
                    let de = dual.exit_poly(&y, t);
                    assert_eq!(pe.is_zero(), de.is_zero());
                    let pf = primal.full_poly(&y, t);
                    let df = dual.full_poly(&y, t);
                    assert_eq!(pf.is_zero(), df.is_zero());
                    for eps in [0.05, 0.2, 0.37] {
                        let o = oracle_verdict(&code, &y, t, eps, false);
                        assert_eq!(pe.verdict(eps), o, "{code} exit primal y={z:b} t={t}");
                        assert_eq!(de.verdict(eps), o, "{code} exit dual y={z:b} t={t}");
                        let o = oracle_verdict(&code, &y, t, eps, true);
                        assert_eq!(pf.verdict(eps), o, "{code} full primal y={z:b} t={t}");
                        assert_eq!(df.verdict(eps), o, "{code} full dual y={z:b} t={t}");
                    }
                }
            }
        }
    }

    #[test]
    fn routes_agree_on_rm4() {
        // Sampled patterns for n = 16, where the two codebooks differ in size.
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for r in 0..=4 {
            let code = rm(4, r);
            let primal = BitMap::with_route(&code, Route::Primal, &G).unwrap();
            let dual = BitMap::with_route(&code, Route::Dual, &G).unwrap();
            for _ in 0..200 {
                let y = Word::from_u64(4, rng.gen::<u64>() & 0xffff);
                for eps in [0.02, 0.11, 0.3] {
                    assert_eq!(primal.exit_verdict(&y, 0, eps), dual.exit_verdict(&y, 0, eps));
                    assert_eq!(primal.full_verdict(&y, 5, eps), dual.full_verdict(&y, 5, eps));
                }
            }
        }
    }

    #[test]
    fn full_space_exit_always_ties() {
        let code = rm(1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for z in 0..4 {
            let d = exit_bit_map(&code, &Word::from_u64(1, z), 0.1, &mut rng, &G).unwrap();
            assert!(d.tie);
        }
        assert_eq!(exit_error_exact(&code, 0.1, &G).unwrap(), 0.5);
    }

    #[test]
    fn repetition_exit_error_is_binomial_tail() {
        let eps = 0.1f64;
        let tail = 3.0 * eps * eps * (1.0 - eps) + eps.powi(3);
        let p = exit_error_exact(&rm(2, 0), eps, &G).unwrap();
        assert_relative_eq!(p, tail, epsilon = 1e-15);
        assert_relative_eq!(p, 0.028, epsilon = 1e-12);
        let p32 = exit_error_exact(&rm(2, 0), 0.1f32, &G).unwrap();
        assert!((p32 as f64 - 0.028).abs() < 1e-6);
    }

    #[test]
    fn full_space_mc_exit_is_a_coin() {
        let est = exit_error(
            &rm(2, 2),
            0.1,
            ErrorMode::MonteCarlo {
                trials: 10_000,
                seed: 7,
            },
            &G,
        )
        .unwrap();
        assert!((est.p_hat - 0.5).abs() <= 5.0 * (0.25f64 / 10_000.0).sqrt());
    }

    #[test]
    fn full_decoder_on_full_space_returns_own_bit() {
        let code = rm(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for z in 0..16 {
            let y = Word::from_u64(2, z);
            let d = bit_map_full(&code, &y, 0.2, &mut rng, &G).unwrap();
            assert_eq!(d.value, y.get(0));
            assert!(!d.tie);
        }
        assert_relative_eq!(full_bit_error_exact(&code, 0.2, &G).unwrap(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn full_decoder_repetition_oracle() {
        // Exhaustive over the 16 noise patterns of the length-4 repetition code,
        // majority with a tie at two flips counted as 1/2.
        let eps = 0.1f64;
        let mut oracle = 0.0;
        for z in 0u32..16 {
            let w = z.count_ones() as i32;
            let p = eps.powi(w) * (1.0 - eps).powi(4 - w);
            oracle += p * match w {
                0 | 1 => 0.0,
                2 => 0.5,
                _ => 1.0,
            };
        }
        let p = full_bit_error_exact(&rm(2, 0), eps, &G).unwrap();
        assert_relative_eq!(p, oracle, epsilon = 1e-15);
        assert_relative_eq!(p, 0.028, epsilon = 1e-12);
    }

    #[test]
    fn full_decoder_dominates_exit_pattern_by_pattern_sum() {
        let code = rm(3, 1);
        let map = BitMap::new(&code, &G).unwrap();
        let eps = 0.1f64;
        let (mut exit, mut full) = (0.0, 0.0);
        for z in 0..256u64 {
            let y = Word::from_u64(3, z);
            let w = z.count_ones() as i32;
            let p = eps.powi(w) * (1.0 - eps).powi(8 - w);
            exit += p * map.exit_verdict(&y, 0, eps).error_halves(false) as f64 / 2.0;
            full += p * map.full_verdict(&y, 0, eps).error_halves(false) as f64 / 2.0;
        }
        assert!(full <= exit + 1e-15);
        assert_relative_eq!(exit, exit_error_exact(&code, eps, &G).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn block_ml_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let code = rm(3, 1);
        for f in code.codewords(&G).unwrap() {
            assert_eq!(block_ml(&code, &f, 0.1, &mut rng, &G).unwrap(), f);
        }
        let noisy = Word::from_bits(2, [true, true, false, true]).unwrap();
        assert_eq!(
            block_ml(&rm(2, 0), &noisy, 0.1, &mut rng, &G).unwrap(),
            Word::ones(2)
        );
    }

    #[test]
    fn block_ml_below_union_bound() {
        // Weight enumerator of RM(3,1) is 1 + 14z^4 + z^8; Bhattacharyya union bound.
        let code = rm(3, 1);
        let eps = 0.05f64;
        let z = 4.0 * eps * (1.0 - eps);
        let bound = 14.0 * z.powi(2) + z.powi(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 10_000;
        let mut errors = 0;
        for _ in 0..trials {
            let f = random_codeword(&code, &mut rng);
            let y = f.xor(&bsc_noise(3, eps, &mut rng).unwrap());
            if block_ml(&code, &y, eps, &mut rng, &G).unwrap() != f {
                errors += 1;
            }
        }
        assert!((errors as f64 / trials as f64) <= bound);
    }

    #[test]
    fn bms_single_component_matches_bsc_on_all_patterns() {
        let code = rm(3, 1);
        let map = BitMap::new(&code, &G).unwrap();
        for eps in [0.05f64, 0.1, 0.3] {
            for z in 0..256u64 {
                let y = Word::from_u64(3, z);
                let obs = BmsObservation::uniform(eps, y.clone());
                assert_eq!(
                    bms_exit_verdict(&code, &obs, &G).unwrap(),
                    map.exit_verdict(&y, 0, eps)
                );
            }
        }
        let _ = BmsChannel::bsc(0.1).unwrap();
    }

    #[test]
    fn bms_useless_coordinate_has_no_weight() {
        // Setting a coordinate to ε = 1/2 equals deleting it: compare against RM(2,0)
        // where coordinate 3 is dropped by hand.
        let code = rm(2, 0);
        for z in 0..16u64 {
            let y = Word::from_u64(2, z);
            let mut eps = vec![0.1; 4];
            eps[3] = 0.5;
            let obs = BmsObservation::new(eps, y.clone()).unwrap();
            let v = bms_exit_verdict(&code, &obs, &G).unwrap();
            let votes = y.get(1) as i32 + y.get(2) as i32;
            let expect = match votes {
                0 => Verdict::Zero,
                2 => Verdict::One,
                _ => Verdict::Tie,
            };
            assert_eq!(v, expect, "pattern {z:04b}");
        }
    }

    #[test]
    fn bms_noiseless_off_target_decodes_exactly() {
        let code = rm(3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for f in code.codewords(&G).unwrap() {
            let mut y = f.clone();
            y.flip(0);
            let mut eps = vec![0.0; 8];
            eps[0] = 0.3;
            let obs = BmsObservation::new(eps, y).unwrap();
            let d = bms_exit_bit_map(&code, &obs, &mut rng, &G).unwrap();
            assert_eq!(d.value, f.get(0));
            assert!(!d.tie);
        }
    }

    #[test]
    fn mixed_bms_matches_brute_force_posterior() {
        let code = rm(3, 1);
        let ch = BmsChannel::new(vec![(0.3, 0.02), (0.5, 0.15), (0.2, 0.4)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..300 {
            let f = random_codeword(&code, &mut rng);
            let obs = crate::channel::bms_transmit(&f, &ch, &mut rng).unwrap();
            let mut mass = [0.0f64; 2];
            for c in code.codewords(&G).unwrap() {
                let mut p = 1.0;
                for x in 1..8 {
                    let e = obs.eps()[x];
                    p *= if c.get(x) == obs.bits().get(x) { 1.0 - e } else { e };
                }
                mass[c.get(0) as usize] += p;
            }
            let v = bms_exit_verdict(&code, &obs, &G).unwrap();
            let rel = (mass[0] - mass[1]).abs() / mass[0].max(mass[1]);
            if rel > 1e-9 {
                let expect = if mass[0] > mass[1] { Verdict::Zero } else { Verdict::One };
                assert_eq!(v, expect);
            }
        }
    }

    #[test]
    fn q_values_are_quantized() {
        for (m, r) in [(2, 0), (2, 1), (3, 1), (3, 2)] {
            let code = rm(m, r);
            for q in q_table(&code, m, 0.1, &G).unwrap() {
                assert!(q == 0.0 || q == 0.5 || q == 1.0);
            }
        }
    }

    #[test]
    fn conditional_error_examples() {
        let code = rm(2, 0);
        assert_eq!(conditional_error(&code, 2, &Word::zeros(2), 0.1, &G).unwrap(), 0.0);
        // Two of the three observed coordinates flipped.
        let z = Word::from_bits(2, [false, true, true, false]).unwrap();
        assert_eq!(conditional_error(&code, 2, &z, 0.1, &G).unwrap(), 1.0);
        let total = exit_error_exact(&code, 0.1, &G).unwrap();
        for z0 in 0..2 {
            let c = conditional_error(&code, 0, &Word::from_u64(0, z0), 0.1, &G).unwrap();
            assert_relative_eq!(c, total, epsilon = 1e-15);
        }
        assert!(conditional_error(&code, 3, &Word::zeros(3), 0.1, &G).is_err());
    }

    #[test]
    fn conditional_matches_table() {
        let code = rm(3, 1);
        let table = q_table(&code, 2, 0.2, &G).unwrap();
        for (key, &q) in table.iter().enumerate() {
            let z = Word::from_u64(2, key as u64);
            let c = conditional_error(&code, 2, &z, 0.2, &G).unwrap();
            assert_relative_eq!(c, q, epsilon = 1e-15);
        }
    }

    #[test]
    fn tower_property() {
        let code = rm(3, 1);
        let eps = 0.1f64;
        let total = exit_error_exact(&code, eps, &G).unwrap();
        for mu in 0..=3 {
            let table = q_table(&code, mu, eps, &G).unwrap();
            let bits = 1u32 << mu;
            let avg: f64 = table
                .iter()
                .enumerate()
                .map(|(z, &q)| {
                    let w = (z as u64).count_ones() as i32;
                    eps.powi(w) * (1.0 - eps).powi(bits as i32 - w) * q
                })
                .sum();
            assert!((avg - total).abs() <= 1e-12, "m_under={mu}");
        }
    }

    #[test]
    fn exit_error_monotone_in_noise() {
        let code = rm(3, 1);
        let grid: Vec<f64> = (1..=45).map(|i| i as f64 * 0.01).collect();
        let errs: Vec<f64> = grid
            .iter()
            .map(|&e| exit_error_exact(&code, e, &G).unwrap())
            .collect();
        assert!(errs.windows(2).all(|w| w[0] <= w[1] + 1e-15), "{errs:?}");
    }

    #[test]
    fn exit_errors_do_not_depend_on_the_codeword() {
        let code = rm(3, 1);
        let map = BitMap::new(&code, &G).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sent: Vec<Word> = std::iter::once(Word::zeros(3))
            .chain((0..5).map(|_| random_codeword(&code, &mut rng)))
            .collect();
        for z in 0..256u64 {
            let noise = Word::from_u64(3, z);
            let reference = map.exit_verdict(&noise, 0, 0.1).error_halves(false);
            for f in &sent {
                let v = map.exit_verdict(&f.xor(&noise), 0, 0.1);
                assert_eq!(v.error_halves(f.get(0)), reference);
            }
        }
    }

    #[test]
    fn monte_carlo_agrees_with_exact() {
        let code = rm(3, 1);
        let exact = exit_error_exact(&code, 0.1, &G).unwrap();
        let est = exit_error(
            &code,
            0.1,
            ErrorMode::MonteCarlo {
                trials: 100_000,
                seed: 42,
            },
            &G,
        )
        .unwrap();
        assert!(est.ci_low <= exact && exact <= est.ci_high, "{exact} vs {est:?}");
    }

    #[test]
    fn guards_refuse_large_enumerations() {
        let tight = Guards {
            max_dim: 3,
            max_noise_bits: 4,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let y = Word::zeros(3);
        assert!(matches!(
            exit_bit_map(&rm(3, 1), &y, 0.1, &mut rng, &tight),
            Err(crate::Error::Feasibility { .. })
        ));
        assert!(matches!(
            exit_error_exact(&rm(3, 0), 0.1, &tight),
            Err(crate::Error::Feasibility { .. })
        ));
        assert!(exit_bit_map(&rm(3, 1), &y, 0.6, &mut rng, &G).is_err());
    }
}
