//! Subspace sunflowers and petal-majority boosting.
//!
//! An (m̲, m, m̄)-sunflower is a family of m-dimensional subspaces of F2^m̄
//! (petals) that pairwise intersect in one fixed m̲-dimensional kernel. Given
//! the noise on the kernel, the noise on different petals is independent, so a
//! majority over petal decoders amplifies whatever advantage each has.

use rand::Rng;
use rayon::prelude::*;

use crate::decode::{BitDecision, BitDecoder, ExitDecoder};
use crate::error::{param, Guards, Result};
use crate::gf2::{span_points, EchelonBasis, Subspace};
use crate::rm::{random_codeword, restrict_to_subspace, RmCode, Word};
use crate::scalar::Real;
use crate::stats::{derived_rng, ErrorEstimate};

const STREAM_BOOST_MC: u64 = 0x626f_6f73;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sunflower {
    m_under: u32,
    m_mid: u32,
    m_over: u32,
    kernel: Subspace,
    petals: Vec<Subspace>,
}

impl Sunflower {
    /// Assembles a sunflower without checking it; see [`verify_sunflower`].
    pub fn from_parts(
        m_under: u32,
        m_mid: u32,
        m_over: u32,
        kernel: Subspace,
        petals: Vec<Subspace>,
    ) -> Self {
        Sunflower {
            m_under,
            m_mid,
            m_over,
            kernel,
            petals,
        }
    }

    pub fn m_under(&self) -> u32 {
        self.m_under
    }

    pub fn m_mid(&self) -> u32 {
        self.m_mid
    }

    pub fn m_over(&self) -> u32 {
        self.m_over
    }

    pub fn kernel(&self) -> &Subspace {
        &self.kernel
    }

    pub fn petals(&self) -> &[Subspace] {
        &self.petals
    }

    /// Keeps only the first `b` petals.
    pub fn truncate(&mut self, b: usize) {
        self.petals.truncate(b);
    }
}

/// Number of petals the greedy construction guarantees: 2^{m̄ + m̲ + 1 − 2m}.
pub fn sunflower_size(m_under: u32, m_mid: u32, m_over: u32) -> Result<u64> {
    if !(m_under < m_mid && m_mid < m_over) {
        return param(format!(
            "sunflower needs m_under < m < m_over, got ({m_under}, {m_mid}, {m_over})"
        ));
    }
    if m_over > 30 {
        return param(format!("ambient dimension {m_over} too large"));
    }
    let exp = (m_over + m_under + 1) as i64 - 2 * m_mid as i64;
    if exp < 0 {
        return param(format!(
            "no guaranteed petals for ({m_under}, {m_mid}, {m_over}): m_over + m_under + 1 < 2m"
        ));
    }
    Ok(1u64 << exp)
}

/// Greedy construction with kernel span{e_1..e_m̲}.
///
/// Petal i grows from the kernel by repeatedly adding the smallest point
/// outside W and outside W_{i'} + W for every earlier petal W_{i'}.
pub fn build_sunflower(m_under: u32, m_mid: u32, m_over: u32) -> Result<Sunflower> {
    let b = sunflower_size(m_under, m_mid, m_over)? as usize;
    let kernel = Subspace::standard(m_over, m_under)?;
    let size = 1usize << m_over;
    let mut petals: Vec<Subspace> = Vec::with_capacity(b);
    let mut forbidden = vec![false; size];
    for _ in 0..b {
        let mut basis = kernel.basis().to_vec();
        while basis.len() < m_mid as usize {
            forbidden.iter_mut().for_each(|f| *f = false);
            for p in span_points(&basis) {
                forbidden[p as usize] = true;
            }
            for prev in &petals {
                let mut joint = EchelonBasis::new();
                let mut gens = Vec::new();
                for &v in prev.basis().iter().chain(&basis) {
                    if joint.insert(v) {
                        gens.push(v);
                    }
                }
                for p in span_points(&gens) {
                    forbidden[p as usize] = true;
                }
            }
            let Some(x) = forbidden.iter().position(|f| !f) else {
                return param(format!(
                    "greedy sunflower construction stalled at ({m_under}, {m_mid}, {m_over})"
                ));
            };
            basis.push(x as u64);
        }
        petals.push(Subspace::new(m_over, basis)?);
    }
    Ok(Sunflower {
        m_under,
        m_mid,
        m_over,
        kernel,
        petals,
    })
}

/// True iff the kernel has dimension m̲, every petal has dimension m and
/// contains the kernel, and any two petals meet exactly in the kernel.
pub fn verify_sunflower(sf: &Sunflower) -> bool {
    let kernel_ok = sf.kernel.ambient_m() == sf.m_over && sf.kernel.dim() == sf.m_under;
    let petals_ok = sf.petals.iter().all(|p| {
        p.ambient_m() == sf.m_over && p.dim() == sf.m_mid && p.contains_subspace(&sf.kernel)
    });
    if !(kernel_ok && petals_ok) {
        return false;
    }
    let want = (2 * sf.m_mid - sf.m_under) as usize;
    sf.petals.iter().enumerate().all(|(i, p)| {
        sf.petals[i + 1..]
            .iter()
            .all(|q| p.sum_dim(q) == want)
    })
}

/// Majority of a base bit decoder run on each petal restriction.
#[derive(Debug, Clone)]
pub struct Booster<D> {
    sunflower: Sunflower,
    base: D,
}

impl<D: BitDecoder> Booster<D> {
    pub fn new(sunflower: Sunflower, base: D) -> Result<Self> {
        if base.word_m() != sunflower.m_mid {
            return param(format!(
                "base decoder expects 2^{} coordinates, petals have 2^{}",
                base.word_m(),
                sunflower.m_mid
            ));
        }
        if sunflower.petals.is_empty() {
            return param("a booster needs at least one petal");
        }
        Ok(Booster { sunflower, base })
    }

    pub fn sunflower(&self) -> &Sunflower {
        &self.sunflower
    }

    pub fn base(&self) -> &D {
        &self.base
    }

    /// Base decisions on each petal, coins drawn from `rng` in petal order.
    pub fn petal_decisions<T: Real, R: Rng + ?Sized>(
        &self,
        noisy: &Word,
        eps: T,
        rng: &mut R,
    ) -> Vec<BitDecision> {
        self.sunflower
            .petals
            .iter()
            .map(|p| {
                let local = restrict_to_subspace(noisy, p).expect("petal lives in the word's space");
                self.base.decide(&local, eps, rng)
            })
            .collect()
    }
}

/// Majority of petal votes, a fair coin on an exact split.
pub fn majority<R: Rng + ?Sized>(votes: &[BitDecision], rng: &mut R) -> BitDecision {
    let ones = votes.iter().filter(|d| d.value).count();
    let zeros = votes.len() - ones;
    match ones.cmp(&zeros) {
        std::cmp::Ordering::Greater => BitDecision {
            value: true,
            tie: false,
        },
        std::cmp::Ordering::Less => BitDecision {
            value: false,
            tie: false,
        },
        std::cmp::Ordering::Equal => BitDecision {
            value: rng.gen(),
            tie: true,
        },
    }
}

impl<D: BitDecoder> BitDecoder for Booster<D> {
    fn word_m(&self) -> u32 {
        self.sunflower.m_over
    }

    fn decide<T: Real, R: Rng + ?Sized>(&self, y: &Word, eps: T, rng: &mut R) -> BitDecision {
        let votes = self.petal_decisions(y, eps, rng);
        majority(&votes, rng)
    }
}

/// Petal geometry and code for one boosting run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoostParams {
    pub m_under: u32,
    pub m_mid: u32,
    pub m_over: u32,
    pub r: u32,
    /// Petal count; `None` uses every petal of the construction.
    pub petals: Option<usize>,
}

impl BoostParams {
    /// Exit-decoder booster for RM(m, r) on the greedy sunflower.
    pub fn booster(&self, guards: &Guards) -> Result<Booster<ExitDecoder>> {
        let mut sf = build_sunflower(self.m_under, self.m_mid, self.m_over)?;
        if let Some(b) = self.petals {
            if b == 0 || b > sf.petals.len() {
                return param(format!(
                    "petal count {b} outside 1..={}",
                    sf.petals.len()
                ));
            }
            sf.truncate(b);
        }
        if self.r > self.m_mid {
            return param(format!("degree {} exceeds petal dimension {}", self.r, self.m_mid));
        }
        let code = RmCode::new(self.m_mid, self.r)?;
        Booster::new(sf, ExitDecoder::new(&code, guards)?)
    }
}

/// Estimate of f(0^m̄) by majority of exit decoders on the sunflower petals.
pub fn boost_decode_bit<T: Real, R: Rng + ?Sized>(
    noisy: &Word,
    params: &BoostParams,
    eps: T,
    rng: &mut R,
    guards: &Guards,
) -> Result<BitDecision> {
    if noisy.m() != params.m_over {
        return param(format!(
            "word has 2^{} coordinates, sunflower lives in F2^{}",
            noisy.m(),
            params.m_over
        ));
    }
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return param(format!("crossover {eps} outside (0,1/2)"));
    }
    Ok(params.booster(guards)?.decide(noisy, eps, rng))
}

/// Paired comparison of the booster against the exit decoder on the first petal alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedBoost {
    pub boost: ErrorEstimate,
    pub single: ErrorEstimate,
    /// Mean of (boost error − single error) per trial.
    pub diff_mean: f64,
    /// Standard error of `diff_mean`.
    pub diff_sigma: f64,
}

impl PairedBoost {
    /// Boost error is below the single-petal error by more than `k` standard errors.
    pub fn separated(&self, k: f64) -> bool {
        -self.diff_mean > k * self.diff_sigma
    }
}

/// Both decoders see the same codeword and noise in every trial.
pub fn boost_paired_mc<T: Real>(
    params: &BoostParams,
    eps: T,
    trials: u64,
    seed: u64,
    guards: &Guards,
) -> Result<PairedBoost> {
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return param(format!("crossover {eps} outside (0,1/2)"));
    }
    let booster = params.booster(guards)?;
    let outer = RmCode::new(params.m_over, params.r)?;
    let (boost_err, single_err, sq): (u64, u64, u64) = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(seed, STREAM_BOOST_MC, i);
            let f = random_codeword(&outer, &mut rng);
            let y = crate::channel::bsc_transmit(&f, eps, &mut rng).expect("eps checked");
            let votes = booster.petal_decisions(&y, eps, &mut rng);
            let boosted = majority(&votes, &mut rng);
            let truth = f.get(0);
            let b = u64::from(boosted.value != truth);
            let s = u64::from(votes[0].value != truth);
            (b, s, u64::from(b != s))
        })
        .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let n = trials.max(1) as f64;
    let diff_mean = (boost_err as f64 - single_err as f64) / n;
    // Per-trial differences lie in {-1, 0, 1}; sq counts the nonzero ones.
    let var = (sq as f64 / n - diff_mean * diff_mean).max(0.0);
    Ok(PairedBoost {
        boost: ErrorEstimate::monte_carlo(boost_err as f64, trials),
        single: ErrorEstimate::monte_carlo(single_err as f64, trials),
        diff_mean,
        diff_sigma: (var / n).sqrt(),
    })
}

/// Chebyshev-type bound 2^{2−k}/(1/2 − P_e)² on P[Q ≥ P_e/2 + 1/4], with k = m − m̲.
pub fn l2_boost_bound<T: Real>(p_e: T, k: u32) -> Result<T> {
    let half = T::lit(0.5);
    if !(p_e >= T::zero() && p_e < half) {
        return param(format!("error rate {p_e} outside [0,1/2)"));
    }
    if k == 0 {
        return param("k must be at least 1");
    }
    let gap = half - p_e;
    Ok(T::lit(2.0).powi(2 - k as i32) / (gap * gap))
}
