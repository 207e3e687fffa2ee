//! Fourier-Walsh analysis under the ε-biased product measure.
//!
//! Functions here live on noise patterns z ∈ F2^N, where the N coordinates are
//! the points of some F2^k (N = 2^k). A pattern and a point set S are both
//! stored as bit masks: bit x is coordinate x, i.e. point x. The biased basis
//!
//! χ_S(z) = (ε/(1−ε))^{|S|/2} · (−(1−ε)/ε)^{|{x∈S : z_x=1}|}
//!
//! is orthonormal for ⟨G,H⟩ = Σ_z ε^{|z|}(1−ε)^{N−|z|} G(z)H(z).

use rand::Rng;
use rayon::prelude::*;

use crate::decode::q_table;
use crate::error::{param, Error, Guards, Result};
use crate::gf2::{rank, LinearMap};
use crate::rm::{RmCode, Word};
use crate::scalar::Real;
use crate::stats::derived_rng;

const STREAM_ORBIT_MC: u64 = 0x6f72_6269;

/// Largest number of coordinates a dense table may have.
pub const MAX_COORDS: u32 = 20;

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return param(format!("crossover {eps} outside (0,1/2)"));
    }
    Ok(())
}

/// Number of coordinates N of a table with 2^N entries.
fn coords_of(len: usize) -> Result<u32> {
    if len == 0 || !len.is_power_of_two() {
        return param(format!("table length {len} is not a power of two"));
    }
    let n = len.trailing_zeros();
    if n > MAX_COORDS {
        return Err(Error::Feasibility {
            what: "dense Fourier table",
            needed: n,
            limit: MAX_COORDS,
        });
    }
    Ok(n)
}

/// χ_S(z) with S and z given as coordinate masks.
pub fn chi_mask<T: Real>(s: u64, z: u64, eps: T) -> T {
    let q = T::one() - eps;
    let size = s.count_ones() as i32;
    let hits = (s & z).count_ones() as i32;
    let mag = (eps / q).sqrt().powi(size) * (q / eps).powi(hits);
    if hits % 2 == 0 {
        mag
    } else {
        -mag
    }
}

/// χ_S evaluated on a word: S is a mask over the word's coordinates.
pub fn chi<T: Real>(s: u64, z: &Word, eps: T) -> T {
    chi_mask(s, z.as_u64(), eps)
}

/// μ_ε(z) for every z ∈ F2^N.
pub fn biased_weights<T: Real>(coords: u32, eps: T) -> Vec<T> {
    let q = T::one() - eps;
    (0..1u64 << coords)
        .map(|z| {
            let w = z.count_ones() as i32;
            eps.powi(w) * q.powi(coords as i32 - w)
        })
        .collect()
}

/// ⟨G,H⟩ under the ε-biased measure.
pub fn biased_inner<T: Real>(g: &[T], h: &[T], eps: T) -> Result<T> {
    if g.len() != h.len() {
        return param(format!("table lengths differ: {} vs {}", g.len(), h.len()));
    }
    let coords = coords_of(g.len())?;
    let weights = biased_weights(coords, eps);
    Ok(weights
        .iter()
        .zip(g.iter().zip(h))
        .fold(T::zero(), |acc, (&w, (&a, &b))| acc + w * a * b))
}

/// Applies the same 2×2 map to every coordinate of a dense table.
fn butterfly<T: Real>(table: &mut [T], f: impl Fn(T, T) -> (T, T) + Sync) {
    let n = table.len();
    let mut half = 1;
    while half < n {
        table.par_chunks_mut(2 * half).for_each(|block| {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = f(*a, *b);
                *a = x;
                *b = y;
            }
        });
        half *= 2;
    }
}

/// Coefficients ⟨Q, χ_S⟩ for every S, indexed by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierTable<T> {
    coords: u32,
    eps: T,
    coeffs: Vec<T>,
}

impl<T: Real> FourierTable<T> {
    /// Builds a table directly from coefficients.
    pub fn from_coeffs(coeffs: Vec<T>, eps: T) -> Result<Self> {
        check_eps(eps)?;
        let coords = coords_of(coeffs.len())?;
        Ok(FourierTable { coords, eps, coeffs })
    }

    /// Number of coordinates N; subsets are masks below 2^N.
    pub fn coords(&self) -> u32 {
        self.coords
    }

    /// log₂ N when N is a power of two: the dimension whose points are the coordinates.
    pub fn m_under(&self) -> Option<u32> {
        self.coords
            .is_power_of_two()
            .then(|| self.coords.trailing_zeros())
    }

    pub fn eps(&self) -> T {
        self.eps
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, s: u64) -> T {
        self.coeffs[s as usize]
    }

    /// Σ_S coeff_S²; equals ⟨Q,Q⟩ by Parseval.
    pub fn energy(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, &c| acc + c * c)
    }

    /// Σ_S coeff_S χ_S as a dense table.
    pub fn inverse(&self) -> Vec<T> {
        let q = T::one() - self.eps;
        let phi0 = (self.eps / q).sqrt();
        let phi1 = -(q / self.eps).sqrt();
        let mut out = self.coeffs.clone();
        butterfly(&mut out, |a, b| (a + phi0 * b, a + phi1 * b));
        out
    }
}

/// Coefficients of a dense table over F2^N in the ε-biased basis.
pub fn transform<T: Real>(table: &[T], eps: T) -> Result<FourierTable<T>> {
    check_eps(eps)?;
    let coords = coords_of(table.len())?;
    let q = T::one() - eps;
    let s = (eps * q).sqrt();
    let mut coeffs = table.to_vec();
    butterfly(&mut coeffs, |a, b| (q * a + eps * b, s * (a - b)));
    Ok(FourierTable { coords, eps, coeffs })
}

/// The image {T x : x ∈ S} of a point-set mask.
pub fn image_mask(s: u64, t: &LinearMap) -> u64 {
    let mut out = 0u64;
    let mut bits = s;
    while bits != 0 {
        let x = bits.trailing_zeros() as u64;
        out |= 1u64 << t.apply(x);
        bits &= bits - 1;
    }
    out
}

/// dim(S): dimension of the span of the points of S.
pub fn span_dim(s: u64) -> u32 {
    let pts: Vec<u64> = (0..64).filter(|&x| (s >> x) & 1 == 1).collect();
    rank(&pts) as u32
}

/// Q_{m̲,m} as a dense table over the 2^{2^{m̲}} kernel noise patterns.
pub fn q_function<T: Real>(code: &RmCode, m_under: u32, eps: T, guards: &Guards) -> Result<Vec<T>> {
    q_table(code, m_under, eps, guards)
}

/// Largest |Q_{m̲,m}(z') − Σ_{S⊆F2^{m̲}} ⟨Q_{m,m}, χ_{e_m(S)}⟩ χ_S(z')| over all z'.
///
/// e_m embeds F2^{m̲} as F2^{m̲} × 0, which leaves point indices unchanged,
/// so the coefficient of e_m(S) sits at the same mask.
pub fn restriction_identity_check<T: Real>(
    code: &RmCode,
    m_under: u32,
    eps: T,
    guards: &Guards,
) -> Result<T> {
    check_eps(eps)?;
    let direct = q_function(code, m_under, eps, guards)?;
    if m_under == code.m() {
        // Both sides are Q_{m,m} itself.
        return Ok(T::zero());
    }
    let full = transform(&q_function(code, code.m(), eps, guards)?, eps)?;
    let sub = FourierTable::from_coeffs(full.coeffs[..direct.len()].to_vec(), eps)?;
    Ok(direct
        .iter()
        .zip(sub.inverse())
        .fold(T::zero(), |acc, (&a, b)| acc.max((a - b).abs())))
}

fn check_small_m(m: u32) -> Result<()> {
    if m > 3 {
        return Err(Error::Feasibility {
            what: "orbit enumeration over GL(m, 2)",
            needed: m,
            limit: 3,
        });
    }
    Ok(())
}

/// Largest |⟨Q_{m,m}, χ_S⟩ − ⟨Q_{m,m}, χ_{TS}⟩| over all S and all invertible T.
pub fn orbit_symmetry_check<T: Real>(code: &RmCode, eps: T, guards: &Guards) -> Result<T> {
    check_small_m(code.m())?;
    let table = transform(&q_function(code, code.m(), eps, guards)?, eps)?;
    let maps = LinearMap::all_invertible(code.m());
    let worst = (0..table.coeffs.len() as u64)
        .into_par_iter()
        .map(|s| {
            let c = table.coeff(s);
            maps.iter()
                .map(|t| (c - table.coeff(image_mask(s, t))).abs())
                .fold(T::zero(), |a, b| a.max(b))
        })
        .reduce(T::zero, |a, b| a.max(b));
    Ok(worst)
}

/// Distinct linear images of S, in increasing mask order.
pub fn linear_orbit(s: u64, m: u32) -> Result<Vec<u64>> {
    check_small_m(m)?;
    let mut orbit: Vec<u64> = LinearMap::all_invertible(m)
        .iter()
        .map(|t| image_mask(s, t))
        .collect();
    orbit.sort_unstable();
    orbit.dedup();
    Ok(orbit)
}

/// ⟨χ⁴_{S̄}⟩ where χ_{S̄} = Σ_{S' ∈ S̄} χ_{S'} over the linear orbit of S ⊆ F2^m.
pub fn l4_orbit_moment<T: Real>(s: u64, eps: T, m: u32) -> Result<T> {
    check_eps(eps)?;
    let orbit = linear_orbit(s, m)?;
    let mut coeffs = vec![T::zero(); 1usize << (1u32 << m)];
    for t in orbit {
        coeffs[t as usize] = T::one();
    }
    let x = FourierTable::from_coeffs(coeffs, eps)?.inverse();
    let sq: Vec<T> = x.iter().map(|&v| v * v).collect();
    biased_inner(&sq, &sq, eps)
}

/// 2^{2dm+8d²}(1/(ε(1−ε)))^{2^d}.
pub fn l4_bound<T: Real>(d: u32, m: u32, eps: T) -> Result<T> {
    check_eps(eps)?;
    let d_f = T::count(d as u64);
    let exp2 = T::lit(2.0) * d_f * T::count(m as u64) + T::lit(8.0) * d_f * d_f;
    let base = T::one() / (eps * (T::one() - eps));
    Ok(exp2.exp2() * base.powf(T::lit(2.0).powi(d as i32)))
}

/// Monte Carlo estimate of P[π(S) ⊆ F2^{m̲} × 0] over uniformly random invertible π.
pub fn orbit_containment_probability(
    points: &[u64],
    m: u32,
    m_under: u32,
    samples: u64,
    seed: u64,
) -> Result<f64> {
    if m > 8 || m_under > m {
        return param(format!("need m_under ≤ m ≤ 8, got m_under={m_under}, m={m}"));
    }
    if let Some(&p) = points.iter().find(|&&p| p >> m != 0) {
        return param(format!("point {p:#x} outside F2^{m}"));
    }
    if samples == 0 {
        return param("at least one sample is needed");
    }
    let limit = 1u64 << m_under;
    let hits: u64 = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = derived_rng(seed, STREAM_ORBIT_MC, i);
            let pi = LinearMap::random(m, &mut rng);
            u64::from(points.iter().all(|&x| pi.apply(x) < limit))
        })
        .sum();
    Ok(hits as f64 / samples as f64)
}

/// Random subset masks of F2^N for tests and demos.
pub fn random_mask<R: Rng + ?Sized>(coords: u32, rng: &mut R) -> u64 {
    if coords == 64 {
        rng.gen()
    } else {
        rng.gen::<u64>() & ((1u64 << coords) - 1)
    }
}
