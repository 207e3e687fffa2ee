//! Binary-input symmetric channels as finite mixtures of BSCs.
//!
//! A channel draws a crossover ε per coordinate from a finite distribution,
//! reveals it to the receiver, and flips the bit with probability ε.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{param, Error, Result};
use crate::rm::Word;
use crate::scalar::Real;

/// H(p) in bits, with H(0) = H(1) = 0.
pub fn binary_entropy<T: Real>(p: T) -> T {
    if p <= T::zero() || p >= T::one() {
        return T::zero();
    }
    let q = T::one() - p;
    -(p * p.ln() + q * q.ln()) / T::LN_2()
}

/// Finite mixture of BSCs, one `(probability, crossover)` pair per component.
#[derive(Debug, Clone, PartialEq)]
pub struct BmsChannel<T> {
    components: Vec<(T, T)>,
}

impl<T: Real> BmsChannel<T> {
    pub fn new(components: Vec<(T, T)>) -> Result<Self> {
        if components.is_empty() {
            return param("channel needs at least one component");
        }
        let half = T::lit(0.5);
        let mut total = T::zero();
        for &(p, eps) in &components {
            if !(p >= T::zero() && p <= T::one()) {
                return param(format!("component probability {p} outside [0,1]"));
            }
            if !(eps >= T::zero() && eps <= half) {
                return param(format!("crossover {eps} outside [0,1/2]"));
            }
            total = total + p;
        }
        // 1e-12 is below f32 resolution; scale the tolerance with the type's epsilon.
        let tol = T::lit(1e-12).max(T::epsilon() * T::count(4 * components.len() as u64));
        if (total - T::one()).abs() > tol {
            return param(format!("component probabilities sum to {total}, not 1"));
        }
        Ok(BmsChannel { components })
    }

    pub fn bsc(eps: T) -> Result<Self> {
        BmsChannel::new(vec![(T::one(), eps)])
    }

    pub fn components(&self) -> &[(T, T)] {
        &self.components
    }

    /// The crossover of a single-component channel.
    pub fn as_bsc(&self) -> Option<T> {
        match self.components.as_slice() {
            [(_, eps)] => Some(*eps),
            _ => None,
        }
    }

    /// Σ p_i (1 - H(ε_i)).
    pub fn capacity(&self) -> T {
        self.components
            .iter()
            .fold(T::zero(), |acc, &(p, eps)| acc + p * (T::one() - binary_entropy(eps)))
    }

    /// Rounds each ε down to a multiple of 1/k, then replaces every group sharing a
    /// multiple by one component carrying the group's total probability and its
    /// probability-weighted mean ε.
    pub fn quantize(&self, k: u32) -> Result<Self> {
        if k < 2 {
            return param(format!("quantization level k = {k} must be at least 2"));
        }
        let kk = T::count(k as u64);
        let mut groups: Vec<(u64, T, T)> = Vec::new();
        for &(p, eps) in &self.components {
            let j = (eps * kk).floor().to_u64().unwrap_or(0);
            match groups.iter_mut().find(|g| g.0 == j) {
                Some(g) => {
                    g.1 = g.1 + p;
                    g.2 = g.2 + p * eps;
                }
                None => groups.push((j, p, p * eps)),
            }
        }
        groups.sort_by_key(|g| g.0);
        let comps = groups
            .into_iter()
            .filter(|g| g.1 > T::zero())
            .map(|(_, p, mass)| (p, mass / p))
            .collect();
        Ok(BmsChannel { components: comps })
    }

    /// Index of the component selected by a uniform draw `u ∈ [0,1)`.
    fn component_for(&self, u: T) -> usize {
        let mut acc = T::zero();
        for (i, &(p, _)) in self.components.iter().enumerate() {
            acc = acc + p;
            if u < acc {
                return i;
            }
        }
        self.components.len() - 1
    }
}

impl<T: Real> fmt::Display for BmsChannel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(eps) = self.as_bsc() {
            return write!(f, "bsc:{eps}");
        }
        write!(f, "bms:")?;
        for (i, (p, eps)) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}@{eps}")?;
        }
        Ok(())
    }
}

impl<T: Real + FromStr> FromStr for BmsChannel<T> {
    type Err = Error;

    /// Parses `bsc:0.05` or `bms:0.4@0.02,0.6@0.11`.
    fn from_str(s: &str) -> Result<Self> {
        let num = |t: &str| -> Result<T> {
            t.trim()
                .parse::<T>()
                .map_err(|_| Error::Parameter(format!("invalid number {t:?} in channel spec")))
        };
        let s = s.trim();
        if let Some(rest) = s.strip_prefix("bsc:") {
            return BmsChannel::bsc(num(rest)?);
        }
        if let Some(rest) = s.strip_prefix("bms:") {
            let comps = rest
                .split(',')
                .map(|part| {
                    let (p, eps) = part.split_once('@').ok_or_else(|| {
                        Error::Parameter(format!("component {part:?} is not prob@eps"))
                    })?;
                    Ok((num(p)?, num(eps)?))
                })
                .collect::<Result<Vec<_>>>()?;
            return BmsChannel::new(comps);
        }
        param(format!("channel spec {s:?} must start with bsc: or bms:"))
    }
}

/// Hard outputs plus the crossover revealed at each coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct BmsObservation<T> {
    eps: Vec<T>,
    bits: Word,
}

impl<T: Real> BmsObservation<T> {
    pub fn new(eps: Vec<T>, bits: Word) -> Result<Self> {
        if eps.len() != bits.len() {
            return param(format!(
                "{} crossover values for a word of length {}",
                eps.len(),
                bits.len()
            ));
        }
        Ok(BmsObservation { eps, bits })
    }

    /// The observation a BSC(ε) produces, with ε revealed everywhere.
    pub fn uniform(eps: T, bits: Word) -> Self {
        BmsObservation {
            eps: vec![eps; bits.len()],
            bits,
        }
    }

    pub fn eps(&self) -> &[T] {
        &self.eps
    }

    pub fn bits(&self) -> &Word {
        &self.bits
    }
}

fn check_bsc_eps<T: Real>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return param(format!("BSC crossover {eps} outside (0,1/2)"));
    }
    Ok(())
}

/// Noise pattern with each of the 2^m coordinates set independently with probability ε.
pub fn bsc_noise<T: Real, R: Rng + ?Sized>(m: u32, eps: T, rng: &mut R) -> Result<Word> {
    check_bsc_eps(eps)?;
    let e = eps.as_f64();
    let mut z = Word::zeros(m);
    for i in 0..z.len() {
        if rng.gen::<f64>() < e {
            z.set(i, true);
        }
    }
    Ok(z)
}

/// word ⊕ Z with Z ~ Bernoulli(ε)^n.
pub fn bsc_transmit<T: Real, R: Rng + ?Sized>(word: &Word, eps: T, rng: &mut R) -> Result<Word> {
    let z = bsc_noise(word.m(), eps, rng)?;
    Ok(word.xor(&z))
}

/// Per coordinate: pick a component, reveal its ε, flip with probability ε.
///
/// A single-component channel draws no component index, so it consumes the
/// random stream exactly like [`bsc_transmit`].
pub fn bms_transmit<T: Real, R: Rng + ?Sized>(
    word: &Word,
    ch: &BmsChannel<T>,
    rng: &mut R,
) -> Result<BmsObservation<T>> {
    let mut bits = word.clone();
    let mut eps = Vec::with_capacity(word.len());
    let single = ch.as_bsc();
    for i in 0..word.len() {
        let e = match single {
            Some(e) => e,
            None => ch.components[ch.component_for(T::lit(rng.gen::<f64>()))].1,
        };
        if rng.gen::<f64>() < e.as_f64() {
            bits.flip(i);
        }
        eps.push(e);
    }
    Ok(BmsObservation { eps, bits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn capacity_examples() {
        assert_eq!(BmsChannel::bsc(0.5).unwrap().capacity(), 0.0);
        assert_eq!(BmsChannel::bsc(0.0).unwrap().capacity(), 1.0);
        // 1 - H(0.11) evaluated term by term.
        let h = -(0.11f64 * 0.11f64.log2() + 0.89 * 0.89f64.log2());
        let c = BmsChannel::bsc(0.11).unwrap().capacity();
        assert_relative_eq!(c, 1.0 - h, epsilon = 1e-15);
        assert!((c - 0.5001).abs() < 5e-5);
        let c32 = BmsChannel::<f32>::bsc(0.11).unwrap().capacity();
        assert!((c32 as f64 - c).abs() < 1e-6);
    }

    #[test]
    fn capacity_decreasing_on_grid() {
        let caps: Vec<f64> = (0..50)
            .map(|i| BmsChannel::bsc(i as f64 * 0.01).unwrap().capacity())
            .collect();
        assert!(caps.windows(2).all(|w| w[0] > w[1]));
        assert!(caps.iter().all(|&c| (0.0..=1.0).contains(&c)));
    }

    #[test]
    fn parse_and_display() {
        let ch: BmsChannel<f64> = "bms:0.4@0.02,0.6@0.11".parse().unwrap();
        assert_eq!(ch.components(), &[(0.4, 0.02), (0.6, 0.11)]);
        assert_eq!(ch.to_string(), "bms:0.4@0.02,0.6@0.11");
        let b: BmsChannel<f64> = "bsc:0.05".parse().unwrap();
        assert_eq!(b.as_bsc(), Some(0.05));
        assert_eq!(b.to_string(), "bsc:0.05");
        assert!("bms:0.4@0.02".parse::<BmsChannel<f64>>().is_err());
        assert!("bsc:0.7".parse::<BmsChannel<f64>>().is_err());
        assert!("awgn:1".parse::<BmsChannel<f64>>().is_err());
        assert!("bms:0.5-0.1".parse::<BmsChannel<f64>>().is_err());
    }

    #[test]
    fn bsc_flip_rate_within_five_sigma() {
        let trials = 100_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        // 10^5 coordinate trials as 6250 words of length 16.
        let flips: usize = (0..trials / 16)
            .map(|_| bsc_noise(4, 0.01, &mut rng).unwrap().weight())
            .sum();
        let sigma = (trials as f64 * 0.01 * 0.99).sqrt();
        assert!((flips as f64 - trials as f64 * 0.01).abs() <= 5.0 * sigma);
    }

    #[test]
    fn bsc_transmit_contract() {
        let zero = Word::zeros(6);
        let a = bsc_transmit(&zero, 0.2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let z = bsc_noise(6, 0.2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, z);
        let b = bsc_transmit(&zero, 0.2, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, b);
        for bad in [0.0, 0.5, -0.1, 0.7] {
            assert!(bsc_transmit(&zero, bad, &mut ChaCha8Rng::seed_from_u64(1)).is_err());
        }
    }

    #[test]
    fn single_component_bms_matches_bsc() {
        let w = Word::from_u64(5, 0xdead_beef);
        let ch = BmsChannel::bsc(0.15).unwrap();
        let obs = bms_transmit(&w, &ch, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        let hard = bsc_transmit(&w, 0.15, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(obs.bits(), &hard);
        assert!(obs.eps().iter().all(|&e| e == 0.15));
    }

    #[test]
    fn two_component_split_and_reproducibility() {
        let d = 0.01;
        let ch = BmsChannel::new(vec![(0.5, d), (0.5, 0.5 - d)]).unwrap();
        let w = Word::zeros(10);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut low = 0usize;
        let mut total = 0usize;
        while total < 100_000 {
            let obs = bms_transmit(&w, &ch, &mut rng).unwrap();
            low += obs.eps().iter().filter(|&&e| e == d).count();
            total += obs.eps().len();
        }
        let sigma = (total as f64 * 0.25).sqrt();
        assert!((low as f64 - total as f64 / 2.0).abs() <= 5.0 * sigma);

        let a = bms_transmit(&w, &ch, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = bms_transmit(&w, &ch, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn quantize_single_component_unchanged() {
        let ch = BmsChannel::bsc(0.137).unwrap();
        for k in [2, 3, 8, 100] {
            let q = ch.quantize(k).unwrap();
            assert_eq!(q.components().len(), 1);
            assert_relative_eq!(q.components()[0].1, 0.137, epsilon = 1e-15);
        }
        assert!(ch.quantize(1).is_err());
    }

    fn random_channel(rng: &mut ChaCha8Rng, parts: usize) -> BmsChannel<f64> {
        let w: Vec<f64> = (0..parts).map(|_| rng.gen_range(0.01..1.0)).collect();
        let s: f64 = w.iter().sum();
        BmsChannel::new(
            w.iter()
                .map(|&x| (x / s, rng.gen_range(0.0..=0.5)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn quantize_never_increases_capacity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let parts = rng.gen_range(1..8);
            let ch = random_channel(&mut rng, parts);
            for k in [2, 4, 8, 16] {
                let q = ch.quantize(k).unwrap();
                assert!(q.capacity() <= ch.capacity() + 1e-12);
                assert!(q.components().len() as u32 <= k / 2 + 1);
            }
        }
    }

    #[test]
    fn quantize_capacity_increases_with_doubling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ch = random_channel(&mut rng, 5);
        let caps: Vec<f64> = (1..=12)
            .map(|t| ch.quantize(1 << t).unwrap().capacity())
            .collect();
        assert!(caps.windows(2).all(|w| w[0] <= w[1] + 1e-12), "{caps:?}");
        assert!((caps[11] - ch.capacity()).abs() < 1e-5);
    }

    #[test]
    fn nearest_rounding_would_break_monotonicity() {
        // {0.2, 0.3}: nearest multiples of 1/2 keep them apart, of 1/4 merge them.
        let nearest = |eps: f64, k: f64| (eps * k - 0.5).ceil();
        assert_ne!(nearest(0.2, 2.0), nearest(0.3, 2.0));
        assert_eq!(nearest(0.2, 4.0), nearest(0.3, 4.0));
        // Floor bins nest, so the k=4 partition refines the k=2 one.
        let ch = BmsChannel::new(vec![(0.5, 0.2), (0.5, 0.3)]).unwrap();
        assert!(ch.quantize(2).unwrap().capacity() <= ch.quantize(4).unwrap().capacity());
    }
}
