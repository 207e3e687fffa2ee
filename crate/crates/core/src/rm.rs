//! Reed-Muller code algebra.
//!
//! Coordinate `i` of a length-2^m word is the point of F2^m whose variable
//! `x_j` is bit `j-1` of `i`. A polynomial is stored by its coefficient on
//! each monomial `∏_{j∈S} x_j`, indexed by the mask of `S` under the same
//! convention, so evaluation and interpolation are the same subset-sum
//! (zeta/Möbius) transform over F2.

use std::fmt;

use rand::Rng;

use crate::error::{param, Error, Guards, Result};
use crate::gf2::{LinearMap, Subspace};

/// Largest supported variable count for an in-memory word.
pub const MAX_M: u32 = 32;

/// Σ_{j≤r} C(m, j).
pub fn binom_le(m: u32, r: u32) -> Result<u64> {
    if r > m {
        return param(format!("degree bound {r} exceeds variable count {m}"));
    }
    if m > 63 {
        return param(format!("variable count {m} too large"));
    }
    let mut total: u64 = 0;
    let mut c: u64 = 1;
    for j in 0..=r as u64 {
        total += c;
        // C(m, j+1) = C(m, j) (m-j) / (j+1), exact in u128.
        c = ((c as u128 * (m as u128 - j as u128)) / (j as u128 + 1)) as u64;
    }
    Ok(total)
}

/// The code RM(m, r).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RmCode {
    m: u32,
    r: u32,
}

impl RmCode {
    pub fn new(m: u32, r: u32) -> Result<Self> {
        if m > MAX_M {
            return param(format!("m = {m} exceeds supported maximum {MAX_M}"));
        }
        if r > m {
            return param(format!("RM({m},{r}): degree bound exceeds m"));
        }
        Ok(RmCode { m, r })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Blocklength 2^m.
    pub fn n(&self) -> usize {
        1usize << self.m
    }

    pub fn dim(&self) -> u32 {
        binom_le(self.m, self.r).expect("validated at construction") as u32
    }

    pub fn rate(&self) -> f64 {
        self.dim() as f64 / self.n() as f64
    }

    pub fn min_distance(&self) -> usize {
        1usize << (self.m - self.r)
    }

    /// RM(m, m-r-1), or `None` for the full space RM(m, m) whose dual is {0}.
    pub fn dual(&self) -> Option<RmCode> {
        (self.r < self.m).then(|| RmCode {
            m: self.m,
            r: self.m - self.r - 1,
        })
    }

    /// Monomial masks of degree ≤ r in ascending order; message bit `k` multiplies monomial `k`.
    pub fn monomials(&self) -> Vec<u64> {
        (0..1u64 << self.m)
            .filter(|s| s.count_ones() <= self.r)
            .collect()
    }

    /// Evaluation vectors of the monomials, in `monomials()` order.
    pub fn generator_rows(&self) -> Vec<Word> {
        self.monomials()
            .into_iter()
            .map(|s| {
                let mut c = CoeffVector::zero(self.m);
                c.set(s, true);
                zeta(c.0)
            })
            .collect()
    }

    /// Codeword carrying message `k` (bit `i` of `k` multiplies monomial `i`).
    pub fn codeword_for_message(&self, k: u64) -> Word {
        let mut c = CoeffVector::zero(self.m);
        for (i, s) in self.monomials().into_iter().enumerate() {
            if (k >> i) & 1 == 1 {
                c.set(s, true);
            }
        }
        zeta(c.0)
    }

    /// All 2^dim codewords indexed by message.
    pub fn codewords(&self, guards: &Guards) -> Result<Vec<Word>> {
        guards.check_dim("codebook enumeration", self.dim())?;
        let rows = self.generator_rows();
        let total = 1usize << rows.len();
        let mut out = vec![Word::zeros(self.m); total];
        let mut cur = Word::zeros(self.m);
        for i in 1..total {
            cur.xor_assign(&rows[i.trailing_zeros() as usize]);
            out[i ^ (i >> 1)] = cur.clone();
        }
        Ok(out)
    }

    /// Number of codewords of each weight, by exhaustive enumeration.
    pub fn weight_distribution(&self, guards: &Guards) -> Result<Vec<u64>> {
        let mut dist = vec![0u64; self.n() + 1];
        for w in self.codewords(guards)? {
            dist[w.weight()] += 1;
        }
        Ok(dist)
    }
}

impl fmt::Display for RmCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RM({},{})", self.m, self.r)
    }
}

/// A length-2^m bit vector, packed 64 coordinates per `u64`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Word {
    m: u32,
    bits: Vec<u64>,
}

impl Word {
    pub fn zeros(m: u32) -> Self {
        let n = 1usize << m;
        Word {
            m,
            bits: vec![0; n.div_ceil(64)],
        }
    }

    pub fn ones(m: u32) -> Self {
        let mut w = Word::zeros(m);
        for b in w.bits.iter_mut() {
            *b = u64::MAX;
        }
        w.trim();
        w
    }

    pub fn from_bits<I: IntoIterator<Item = bool>>(m: u32, bits: I) -> Result<Self> {
        let mut w = Word::zeros(m);
        let mut count = 0;
        for (i, b) in bits.into_iter().enumerate() {
            if i >= w.len() {
                return param(format!("more than 2^{m} bits supplied"));
            }
            w.set(i, b);
            count += 1;
        }
        if count != w.len() {
            return param(format!("expected {} bits, got {count}", w.len()));
        }
        Ok(w)
    }

    /// Word from the low 2^m bits of `v`; requires m ≤ 6.
    pub fn from_u64(m: u32, v: u64) -> Self {
        assert!(m <= 6, "from_u64 needs at most 64 coordinates");
        let mut w = Word::zeros(m);
        w.bits[0] = v;
        w.trim();
        w
    }

    /// The packed bits of a word with at most 64 coordinates.
    pub fn as_u64(&self) -> u64 {
        assert!(self.m <= 6, "as_u64 needs at most 64 coordinates");
        self.bits[0]
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn len(&self) -> usize {
        1usize << self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn limbs(&self) -> &[u64] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.bits[i >> 6] >> (i & 63)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, b: bool) {
        let mask = 1u64 << (i & 63);
        if b {
            self.bits[i >> 6] |= mask;
        } else {
            self.bits[i >> 6] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.bits[i >> 6] ^= 1u64 << (i & 63);
    }

    pub fn xor_assign(&mut self, other: &Word) {
        debug_assert_eq!(self.m, other.m);
        for (a, b) in self.bits.iter_mut().zip(&other.bits) {
            *a ^= b;
        }
    }

    pub fn xor(&self, other: &Word) -> Word {
        let mut w = self.clone();
        w.xor_assign(other);
        w
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn distance(&self, other: &Word) -> usize {
        debug_assert_eq!(self.m, other.m);
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    /// |self ∧ other|.
    pub fn and_weight(&self, other: &Word) -> usize {
        debug_assert_eq!(self.m, other.m);
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Hex string; character `i` holds coordinates 4i..4i+3 with the lowest in its LSB.
    pub fn to_hex(&self) -> String {
        let chars = (self.len() / 4).max(1);
        (0..chars)
            .map(|c| {
                let nib = (self.bits[(4 * c) >> 6] >> ((4 * c) & 63)) & 0xf;
                char::from_digit(nib as u32, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(m: u32, s: &str) -> Result<Self> {
        let mut w = Word::zeros(m);
        let chars = (w.len() / 4).max(1);
        let s = s.trim();
        if s.len() != chars {
            return param(format!(
                "hex word for m={m} needs {chars} digits, got {}",
                s.len()
            ));
        }
        for (c, ch) in s.chars().enumerate() {
            let nib = ch
                .to_digit(16)
                .ok_or_else(|| Error::Parameter(format!("invalid hex digit {ch:?}")))?
                as u64;
            if w.len() < 4 && nib >> w.len() != 0 {
                return param("hex word sets coordinates beyond 2^m");
            }
            w.bits[(4 * c) >> 6] |= nib << ((4 * c) & 63);
        }
        Ok(w)
    }

    fn trim(&mut self) {
        let n = self.len();
        if n < 64 {
            self.bits[0] &= (1u64 << n) - 1;
        }
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word(m={}, ", self.m)?;
        for b in self.iter() {
            write!(f, "{}", b as u8)?;
        }
        write!(f, ")")
    }
}

/// Coefficients of a multilinear polynomial over F2, indexed by monomial mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CoeffVector(Word);

impl CoeffVector {
    pub fn zero(m: u32) -> Self {
        CoeffVector(Word::zeros(m))
    }

    /// Polynomial Σ monomials, each given by its variable mask.
    pub fn from_monomials(m: u32, monomials: &[u64]) -> Result<Self> {
        let mut c = CoeffVector::zero(m);
        for &s in monomials {
            if s >> m != 0 {
                return param(format!("monomial {s:#b} uses a variable beyond x_{m}"));
            }
            let cur = c.get(s);
            c.set(s, !cur);
        }
        Ok(c)
    }

    pub fn m(&self) -> u32 {
        self.0.m
    }

    pub fn get(&self, monomial: u64) -> bool {
        self.0.get(monomial as usize)
    }

    pub fn set(&mut self, monomial: u64, b: bool) {
        self.0.set(monomial as usize, b)
    }

    /// Highest monomial degree present, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        (0..self.0.len())
            .filter(|&s| self.0.get(s))
            .map(|s| s.count_ones())
            .max()
    }

    pub fn as_word(&self) -> &Word {
        &self.0
    }

    pub fn xor(&self, other: &CoeffVector) -> CoeffVector {
        CoeffVector(self.0.xor(&other.0))
    }

    /// Uniformly random polynomial of degree ≤ r.
    pub fn random<R: Rng + ?Sized>(code: &RmCode, rng: &mut R) -> Self {
        let mut c = CoeffVector::zero(code.m);
        for s in code.monomials() {
            c.set(s, rng.gen::<bool>());
        }
        c
    }
}

const LOW_HALF: [u64; 6] = [
    0x5555_5555_5555_5555,
    0x3333_3333_3333_3333,
    0x0f0f_0f0f_0f0f_0f0f,
    0x00ff_00ff_00ff_00ff,
    0x0000_ffff_0000_ffff,
    0x0000_0000_ffff_ffff,
];

/// Subset-sum transform over F2: out[x] = XOR of in[s] over s ⊆ x. Self-inverse.
fn zeta(mut w: Word) -> Word {
    let m = w.m;
    for j in 0..m.min(6) {
        let shift = 1u32 << j;
        for limb in w.bits.iter_mut() {
            *limb ^= (*limb & LOW_HALF[j as usize]) << shift;
        }
    }
    for j in 6..m {
        let stride = 1usize << (j - 6);
        let len = w.bits.len();
        let mut base = 0;
        while base < len {
            for i in base..base + stride {
                let lo = w.bits[i];
                w.bits[i + stride] ^= lo;
            }
            base += 2 * stride;
        }
    }
    w
}

/// Evaluation vector of `msg` at every point of F2^m.
pub fn encode(code: &RmCode, msg: &CoeffVector) -> Result<Word> {
    if msg.m() != code.m {
        return param(format!(
            "message has {} variables, code has {}",
            msg.m(),
            code.m
        ));
    }
    if let Some(d) = msg.degree() {
        if d > code.r {
            return param(format!("message degree {d} exceeds r = {}", code.r));
        }
    }
    Ok(zeta(msg.0.clone()))
}

/// Coefficients of the unique multilinear polynomial with this evaluation vector.
pub fn mobius(word: &Word) -> CoeffVector {
    CoeffVector(zeta(word.clone()))
}

pub fn is_codeword(code: &RmCode, word: &Word) -> bool {
    word.m == code.m && mobius(word).degree().is_none_or(|d| d <= code.r)
}

/// Uniformly random codeword.
pub fn random_codeword<R: Rng + ?Sized>(code: &RmCode, rng: &mut R) -> Word {
    zeta(CoeffVector::random(code, rng).0)
}

/// Reads `word` at the points of `sub`, in basis-combination order.
pub fn restrict_to_subspace(word: &Word, sub: &Subspace) -> Result<Word> {
    if sub.ambient_m() != word.m {
        return param(format!(
            "subspace lives in F2^{}, word in F2^{}",
            sub.ambient_m(),
            word.m
        ));
    }
    let mut out = Word::zeros(sub.dim());
    for (i, p) in sub.points().into_iter().enumerate() {
        out.set(i, word.get(p as usize));
    }
    Ok(out)
}

/// Variables left free by fixing `fixed` (1-based), in increasing order.
fn free_vars(m: u32, fixed: &[u32]) -> Result<(u64, Vec<u32>)> {
    let mut mask = 0u64;
    for &v in fixed {
        if v == 0 || v > m {
            return param(format!("variable index {v} outside 1..={m}"));
        }
        if mask >> (v - 1) & 1 == 1 {
            return param(format!("variable x_{v} fixed twice"));
        }
        mask |= 1 << (v - 1);
    }
    let free = (1..=m).filter(|v| mask >> (v - 1) & 1 == 0).collect();
    Ok((mask, free))
}

/// Fixes the variables in `fixed` (1-based) to `values` (bit `t` for the `t`-th entry of
/// `fixed`) and reads the remaining 2^{m-|fixed|} coordinates, free variables keeping
/// their relative order.
pub fn restrict_to_slice(word: &Word, fixed: &[u32], values: u64) -> Result<Word> {
    let (_, free) = free_vars(word.m, fixed)?;
    let base = fixed
        .iter()
        .enumerate()
        .fold(0u64, |acc, (t, &v)| acc | (((values >> t) & 1) << (v - 1)));
    let mut out = Word::zeros(free.len() as u32);
    for i in 0..out.len() {
        out.set(i, word.get(slice_point(base, &free, i as u64) as usize));
    }
    Ok(out)
}

/// Ambient points of the slice coordinates read by [`restrict_to_slice`], in slice order.
pub fn slice_points(m: u32, fixed: &[u32], values: u64) -> Result<Vec<u64>> {
    let (_, free) = free_vars(m, fixed)?;
    let base = fixed
        .iter()
        .enumerate()
        .fold(0u64, |acc, (t, &v)| acc | (((values >> t) & 1) << (v - 1)));
    Ok((0..1u64 << free.len())
        .map(|i| slice_point(base, &free, i))
        .collect())
}

/// Ambient point of coordinate `i` within the slice through `base` along `free`.
pub(crate) fn slice_point(base: u64, free: &[u32], i: u64) -> u64 {
    free.iter()
        .enumerate()
        .fold(base, |acc, (k, &v)| acc | (((i >> k) & 1) << (v - 1)))
}

/// output(x) = input(T x).
pub fn apply_linear(word: &Word, t: &LinearMap) -> Result<Word> {
    if t.dim() != word.m {
        return param(format!(
            "map acts on F2^{}, word lives on F2^{}",
            t.dim(),
            word.m
        ));
    }
    let mut out = Word::zeros(word.m);
    for x in 0..word.len() {
        out.set(x, word.get(t.apply(x as u64) as usize));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn poly(m: u32, monos: &[u64]) -> CoeffVector {
        CoeffVector::from_monomials(m, monos).unwrap()
    }

    #[test]
    fn binom_le_values() {
        assert_eq!(binom_le(3, 1).unwrap(), 4);
        assert_eq!(binom_le(4, 2).unwrap(), 11);
        assert_eq!(binom_le(5, 5).unwrap(), 32);
        assert_eq!(binom_le(63, 63).unwrap(), 1u64 << 63);
        assert!(binom_le(2, 3).is_err());
    }

    #[test]
    fn encode_examples() {
        let c = RmCode::new(2, 1).unwrap();
        let w = encode(&c, &poly(2, &[0b01])).unwrap();
        assert_eq!(w.iter().collect::<Vec<_>>(), [false, true, false, true]);
        let w = encode(&c, &poly(2, &[0])).unwrap();
        assert_eq!(w, Word::ones(2));
        // x_1 x_2 over F2^3: ones exactly at indices 3 and 7.
        let c = RmCode::new(3, 2).unwrap();
        let w = encode(&c, &poly(3, &[0b011])).unwrap();
        let ones: Vec<usize> = (0..8).filter(|&i| w.get(i)).collect();
        assert_eq!(ones, [3, 7]);
    }

    #[test]
    fn encode_rejects_high_degree() {
        let c = RmCode::new(3, 1).unwrap();
        assert!(matches!(
            encode(&c, &poly(3, &[0b011])),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn mobius_examples() {
        assert_eq!(mobius(&Word::ones(2)), poly(2, &[0]));
        assert_eq!(mobius(&Word::from_u64(2, 0b1010)), poly(2, &[0b01]));
    }

    #[test]
    fn transform_matches_direct_evaluation_across_limbs() {
        // m = 8 exercises the inter-limb butterflies.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let code = RmCode::new(8, 3).unwrap();
        let msg = CoeffVector::random(&code, &mut rng);
        let w = encode(&code, &msg).unwrap();
        for x in 0..256u64 {
            let direct = (0..256u64)
                .filter(|&s| s & x == s && msg.get(s))
                .count()
                % 2
                == 1;
            assert_eq!(w.get(x as usize), direct, "point {x}");
        }
    }

    #[test]
    fn membership_examples() {
        for (m, r) in [(3, 0), (3, 2), (5, 1)] {
            assert!(is_codeword(&RmCode::new(m, r).unwrap(), &Word::ones(m)));
        }
        let x1x2 = encode(&RmCode::new(3, 2).unwrap(), &poly(3, &[0b011])).unwrap();
        assert!(!is_codeword(&RmCode::new(3, 1).unwrap(), &x1x2));
        let c = RmCode::new(3, 1).unwrap();
        let book = c.codewords(&Guards::default()).unwrap();
        assert_eq!(book.len(), 16);
        assert!(book.iter().all(|w| is_codeword(&c, w)));
    }

    #[test]
    fn random_codeword_repetition_and_determinism() {
        let c = RmCode::new(2, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let w = random_codeword(&c, &mut rng);
            assert!(w == Word::zeros(2) || w == Word::ones(2));
        }
        let c = RmCode::new(5, 2).unwrap();
        let a = random_codeword(&c, &mut ChaCha8Rng::seed_from_u64(77));
        let b = random_codeword(&c, &mut ChaCha8Rng::seed_from_u64(77));
        assert_eq!(a, b);
    }

    #[test]
    fn random_codeword_is_uniform_on_rm31() {
        let c = RmCode::new(3, 1).unwrap();
        let book = c.codewords(&Guards::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let draws = 10_000usize;
        let mut counts = vec![0usize; 16];
        for _ in 0..draws {
            let w = random_codeword(&c, &mut rng);
            counts[book.iter().position(|b| *b == w).unwrap()] += 1;
        }
        let p = 1.0 / 16.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for &k in &counts {
            assert!((k as f64 - draws as f64 * p).abs() <= 5.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn min_distance_examples() {
        assert_eq!(RmCode::new(3, 1).unwrap().min_distance(), 4);
        assert_eq!(RmCode::new(5, 0).unwrap().min_distance(), 32);
        let c = RmCode::new(3, 1).unwrap();
        let dist = c.weight_distribution(&Guards::default()).unwrap();
        assert_eq!(dist, [1, 0, 0, 0, 14, 0, 0, 0, 1]);
    }

    #[test]
    fn restrict_examples() {
        let sub = Subspace::new(3, vec![0b001, 0b010]).unwrap();
        assert_eq!(restrict_to_subspace(&Word::ones(3), &sub).unwrap(), Word::ones(2));
        let x3 = encode(&RmCode::new(3, 1).unwrap(), &poly(3, &[0b100])).unwrap();
        assert_eq!(restrict_to_subspace(&x3, &sub).unwrap(), Word::zeros(2));
        assert!(restrict_to_subspace(&x3, &Subspace::standard(4, 2).unwrap()).is_err());
    }

    #[test]
    fn slice_examples() {
        let w = Word::from_u64(2, 0b1010);
        assert_eq!(restrict_to_slice(&w, &[], 0).unwrap(), w);
        assert_eq!(restrict_to_slice(&w, &[1], 1).unwrap(), Word::ones(1));
        assert_eq!(restrict_to_slice(&w, &[1], 0).unwrap(), Word::zeros(1));
        assert!(restrict_to_slice(&w, &[3], 0).is_err());
        assert!(restrict_to_slice(&w, &[1, 1], 0).is_err());
    }

    #[test]
    fn slices_stay_in_the_code() {
        let c = RmCode::new(3, 2).unwrap();
        let sub = RmCode::new(2, 2).unwrap();
        for f in c.codewords(&Guards::default()).unwrap() {
            for v in 0..2 {
                let s = restrict_to_slice(&f, &[2], v).unwrap();
                assert!(is_codeword(&sub, &s));
            }
        }
    }

    #[test]
    fn linear_maps_preserve_rm31() {
        let c = RmCode::new(3, 1).unwrap();
        let book = c.codewords(&Guards::default()).unwrap();
        let w = book[9].clone();
        assert_eq!(apply_linear(&w, &LinearMap::identity(3)).unwrap(), w);
        for t in LinearMap::all_invertible(3) {
            for f in &book {
                let g = apply_linear(f, &t).unwrap();
                assert!(is_codeword(&c, &g));
                assert_eq!(apply_linear(&g, &t.inverse()).unwrap(), *f);
            }
        }
    }

    #[test]
    fn hex_layout() {
        let w = Word::from_u64(3, 0b1000_0001);
        assert_eq!(w.to_hex(), "18");
        assert_eq!(Word::from_hex(3, "18").unwrap(), w);
        assert_eq!(Word::from_u64(1, 0b10).to_hex(), "2");
        assert!(Word::from_hex(1, "4").is_err());
        assert!(Word::from_hex(3, "1").is_err());
    }
}
