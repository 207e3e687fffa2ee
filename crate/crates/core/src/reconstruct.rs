//! Full-codeword recovery: bitwise MAP, list decoding around the bitwise
//! estimate, and grid boosting over coordinate slices.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decode::{pick_max_agreement, BitMap};
use crate::error::{param, Guards, Result};
use crate::rm::{random_codeword, restrict_to_slice, slice_points, RmCode, Word};
use crate::scalar::Real;
use crate::stats::{derived_rng, ErrorEstimate};

const STREAM_RECONSTRUCT_MC: u64 = 0x7265_636f;

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps < T::lit(0.5)) {
        return param(format!("crossover {eps} outside (0,1/2)"));
    }
    Ok(())
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

/// Per-coordinate MAP decisions from the complete noisy word; ties take a coin
/// from `rng`, drawn in coordinate order.
pub fn bitwise_decode<T: Real, R: Rng + ?Sized>(
    code: &RmCode,
    noisy: &Word,
    eps: T,
    rng: &mut R,
    guards: &Guards,
) -> Result<Word> {
    check_eps(eps)?;
    check_len(code, noisy)?;
    let map = BitMap::new(code, guards)?;
    let verdicts: Vec<_> = (0..code.n())
        .into_par_iter()
        .map(|x| map.full_verdict(noisy, x, eps))
        .collect();
    let mut out = Word::zeros(code.m());
    for (x, v) in verdicts.into_iter().enumerate() {
        out.set(x, v.resolve(rng).value);
    }
    Ok(out)
}

/// Every codeword within `radius` of `center`, in message-index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateList {
    pub center: Word,
    pub radius: usize,
    pub members: Vec<Word>,
}

pub fn list_within(
    code: &RmCode,
    center: &Word,
    radius: usize,
    guards: &Guards,
) -> Result<CandidateList> {
    check_len(code, center)?;
    let members = code
        .codewords(guards)?
        .into_iter()
        .filter(|c| c.distance(center) <= radius)
        .collect();
    Ok(CandidateList {
        center: center.clone(),
        radius,
        members,
    })
}

/// Smallest radius the list step is allowed to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusFloor {
    /// Radius at least 1.
    #[default]
    One,
    /// Radius at least the unique-decoding radius ⌊(d_min − 1)/2⌋ (and at least 1).
    UniqueDecoding,
}

/// ⌊2^{m − scale·√m·log₂ m}/2⌋, floored by `floor` and capped at n.
pub fn list_radius(code: &RmCode, scale: f64, floor: RadiusFloor) -> usize {
    let m = code.m() as f64;
    let shrink = if code.m() <= 1 { 0.0 } else { scale * m.sqrt() * m.log2() };
    let raw = (m - shrink - 1.0).exp2().floor();
    let n = code.n();
    let lo = match floor {
        RadiusFloor::One => 1,
        RadiusFloor::UniqueDecoding => ((code.min_distance() - 1) / 2).max(1),
    };
    let raw = if raw.is_finite() && raw < n as f64 { raw as usize } else { n };
    raw.clamp(lo.min(n), n)
}

/// Radius of the list step for constant `c`: ⌊2^{m − c√m·log₂ m/2}/2⌋ clamped.
pub fn reconstruct_radius(code: &RmCode, c: f64, floor: RadiusFloor) -> usize {
    list_radius(code, c / 2.0, floor)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconstructParams {
    pub c: f64,
    pub floor: RadiusFloor,
}

impl Default for ReconstructParams {
    fn default() -> Self {
        ReconstructParams {
            c: 1.0,
            floor: RadiusFloor::One,
        }
    }
}

/// Result of a reconstruction, with the radius actually used.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconstruction {
    pub word: Word,
    pub radius: usize,
    pub list_len: usize,
    /// The list was empty and `word` is the pre-list estimate, which need not be a codeword.
    pub fallback: bool,
}

/// Keeps the list member with maximal agreement with `noisy`, or falls back to `estimate`.
fn finish<R: Rng + ?Sized>(
    code: &RmCode,
    estimate: Word,
    noisy: &Word,
    radius: usize,
    rng: &mut R,
    guards: &Guards,
) -> Result<Reconstruction> {
    let list = list_within(code, &estimate, radius, guards)?;
    let list_len = list.members.len();
    Ok(match pick_max_agreement(&list.members, noisy, rng) {
        Some(i) => Reconstruction {
            word: list.members[i].clone(),
            radius,
            list_len,
            fallback: false,
        },
        None => Reconstruction {
            word: estimate,
            radius,
            list_len,
            fallback: true,
        },
    })
}

/// Bitwise MAP, then the most noisy-consistent codeword near the bitwise estimate.
pub fn rm_reconstruct<T: Real, R: Rng + ?Sized>(
    code: &RmCode,
    noisy: &Word,
    eps: T,
    params: &ReconstructParams,
    rng: &mut R,
    guards: &Guards,
) -> Result<Reconstruction> {
    if !(params.c >= 0.0 && params.c.is_finite()) {
        return param(format!("constant c = {} must be finite and non-negative", params.c));
    }
    let estimate = bitwise_decode(code, noisy, eps, rng, guards)?;
    let radius = reconstruct_radius(code, params.c, params.floor);
    finish(code, estimate, noisy, radius, rng, guards)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    /// Sets the block count m' = ⌈√m / c⌉.
    pub c: f64,
    /// Constant passed to the per-slice reconstructions.
    pub c_prime: f64,
    /// Final list radius is ⌊2^{m − final_scale·√m·log₂ m}/2⌋.
    pub final_scale: f64,
    pub floor: RadiusFloor,
}

impl Default for GridParams {
    fn default() -> Self {
        GridParams {
            c: 1.0,
            c_prime: 1.0,
            final_scale: 1.0,
            floor: RadiusFloor::One,
        }
    }
}

/// Splits variables 1..=m into ⌈√m/c⌉ contiguous blocks, larger blocks first.
pub fn grid_partition(m: u32, c: f64) -> Result<Vec<Vec<u32>>> {
    if !(c > 0.0 && c.is_finite()) {
        return param(format!("constant c = {c} must be positive"));
    }
    if m == 0 {
        return param("grid boosting needs m ≥ 1");
    }
    let blocks = ((m as f64).sqrt() / c).ceil();
    if blocks > m as f64 {
        return param(format!("{blocks} blocks exceed m = {m}"));
    }
    let blocks = blocks as u32;
    let (q, rem) = (m / blocks, m % blocks);
    let mut next = 1;
    Ok((0..blocks)
        .map(|i| {
            let size = q + u32::from(i < rem);
            let block: Vec<u32> = (next..next + size).collect();
            next += size;
            block
        })
        .collect())
}

/// The coordinate whose restriction to block i equals `values[i]` for every i.
pub fn grid_point(blocks: &[Vec<u32>], values: &[u64]) -> u64 {
    blocks
        .iter()
        .zip(values)
        .fold(0u64, |acc, (block, &v)| {
            block
                .iter()
                .enumerate()
                .fold(acc, |a, (t, &var)| a | (((v >> t) & 1) << (var - 1)))
        })
}

/// Slice-wise reconstructions voted per coordinate, then a final list step.
pub fn rm_reconstruct_grid<T: Real, R: Rng + ?Sized>(
    code: &RmCode,
    noisy: &Word,
    eps: T,
    params: &GridParams,
    rng: &mut R,
    guards: &Guards,
) -> Result<Reconstruction> {
    check_eps(eps)?;
    check_len(code, noisy)?;
    if !(params.final_scale >= 0.0 && params.final_scale.is_finite()) {
        return param(format!("final scale {} must be non-negative", params.final_scale));
    }
    let m = code.m();
    let blocks = grid_partition(m, params.c)?;
    let inner = ReconstructParams {
        c: params.c_prime,
        floor: params.floor,
    };
    let n = code.n();
    let mut ones = vec![0u32; n];
    for block in &blocks {
        let sub_m = m - block.len() as u32;
        let sub_code = RmCode::new(sub_m, code.r().min(sub_m))?;
        for values in 0..1u64 << block.len() {
            let slice = restrict_to_slice(noisy, block, values)?;
            let rec = rm_reconstruct(&sub_code, &slice, eps, &inner, rng, guards)?;
            for (k, p) in slice_points(m, block, values)?.into_iter().enumerate() {
                ones[p as usize] += u32::from(rec.word.get(k));
            }
        }
    }
    let votes = blocks.len() as u32;
    let mut estimate = Word::zeros(m);
    for (x, &o) in ones.iter().enumerate() {
        let bit = match (2 * o).cmp(&votes) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => rng.gen(),
        };
        estimate.set(x, bit);
    }
    let radius = list_radius(code, params.final_scale, params.floor);
    finish(code, estimate, noisy, radius, rng, guards)
}

/// Which reconstruction algorithm to run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reconstructor {
    List(ReconstructParams),
    Grid(GridParams),
}

impl Reconstructor {
    pub fn name(&self) -> &'static str {
        match self {
            Reconstructor::List(_) => "reconstruct",
            Reconstructor::Grid(_) => "grid-reconstruct",
        }
    }

    pub fn run<T: Real, R: Rng + ?Sized>(
        &self,
        code: &RmCode,
        noisy: &Word,
        eps: T,
        rng: &mut R,
        guards: &Guards,
    ) -> Result<Reconstruction> {
        match self {
            Reconstructor::List(p) => rm_reconstruct(code, noisy, eps, p, rng, guards),
            Reconstructor::Grid(p) => rm_reconstruct_grid(code, noisy, eps, p, rng, guards),
        }
    }
}

/// Trial `i` of a block-error simulation: the transmitted codeword and its reconstruction.
pub fn reconstruct_trial<T: Real>(
    code: &RmCode,
    eps: T,
    method: &Reconstructor,
    seed: u64,
    i: u64,
    guards: &Guards,
) -> Result<(Word, Reconstruction)> {
    let mut rng = derived_rng(seed, STREAM_RECONSTRUCT_MC, i);
    let f = random_codeword(code, &mut rng);
    let y = crate::channel::bsc_transmit(&f, eps, &mut rng)?;
    let rec = method.run(code, &y, eps, &mut rng, guards)?;
    Ok((f, rec))
}

/// Block error rate: trial `i` sends a random codeword drawn from `(seed, i)`.
pub fn block_error_mc<T: Real>(
    code: &RmCode,
    eps: T,
    method: &Reconstructor,
    trials: u64,
    seed: u64,
    guards: &Guards,
) -> Result<ErrorEstimate> {
    check_eps(eps)?;
    // Surface parameter and guard errors before fanning out.
    method.run(
        code,
        &Word::zeros(code.m()),
        eps,
        &mut derived_rng(seed, STREAM_RECONSTRUCT_MC, u64::MAX),
        guards,
    )?;
    let failures: Result<Vec<u64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let (f, rec) = reconstruct_trial(code, eps, method, seed, i, guards)?;
            Ok(u64::from(rec.word != f))
        })
        .collect();
    let errors: u64 = failures?.iter().sum();
    Ok(ErrorEstimate::monte_carlo(errors as f64, trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::{block_ml, full_bit_error_exact};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const G: Guards = Guards {
        max_dim: 24,
        max_noise_bits: 16,
    };

    fn rm(m: u32, r: u32) -> RmCode {
        RmCode::new(m, r).unwrap()
    }

    #[test]
    fn list_examples() {
        let code = rm(2, 1);
        let l = list_within(&code, &Word::zeros(2), 1, &G).unwrap();
        assert_eq!(l.members, vec![Word::zeros(2)]);
        assert_eq!(list_within(&code, &Word::zeros(2), 4, &G).unwrap().members.len(), 8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = random_codeword(&rm(3, 1), &mut rng);
        assert_eq!(list_within(&rm(3, 1), &f, 0, &G).unwrap().members, vec![f]);
    }

    #[test]
    fn list_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (m, r) in [(3, 1), (4, 1), (4, 2)] {
            let code = rm(m, r);
            let book = code.codewords(&G).unwrap();
            for _ in 0..10 {
                let center = Word::from_u64(m, rng.gen::<u64>() & ((1u64 << code.n()) - 1));
                for radius in [0, 1, 3, 5] {
                    let brute: Vec<Word> = book
                        .iter()
                        .filter(|c| c.distance(&center) <= radius)
                        .cloned()
                        .collect();
                    let l = list_within(&code, &center, radius, &G).unwrap();
                    assert_eq!(l.members, brute);
                }
            }
        }
    }

    #[test]
    fn bitwise_on_full_space_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for z in 0..16 {
            let y = Word::from_u64(2, z);
            assert_eq!(bitwise_decode(&rm(2, 2), &y, 0.2, &mut rng, &G).unwrap(), y);
        }
    }

    #[test]
    fn bitwise_bit_error_matches_exact() {
        let code = rm(3, 1);
        let eps = 0.1;
        let exact = full_bit_error_exact(&code, eps, &G).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 20_000u64;
        let mut errs = 0u64;
        for _ in 0..trials {
            let f = random_codeword(&code, &mut rng);
            let y = crate::channel::bsc_transmit(&f, eps, &mut rng).unwrap();
            let est = bitwise_decode(&code, &y, eps, &mut rng, &G).unwrap();
            errs += u64::from(est.get(5) != f.get(5));
        }
        let e = ErrorEstimate::monte_carlo(errs as f64, trials);
        assert!(e.ci_low <= exact && exact <= e.ci_high, "{exact} vs {e:?}");
    }

    #[test]
    fn radius_values() {
        // RM(3,1), c=1: 2^{3 - √3·log₂3/2}/2 ≈ 1.54.
        assert_eq!(reconstruct_radius(&rm(3, 1), 1.0, RadiusFloor::One), 1);
        assert_eq!(reconstruct_radius(&rm(3, 1), 0.0, RadiusFloor::One), 4);
        assert_eq!(list_radius(&rm(4, 1), 1.0, RadiusFloor::One), 1);
        assert_eq!(list_radius(&rm(4, 1), 1.0, RadiusFloor::UniqueDecoding), 3);
        assert_eq!(list_radius(&rm(0, 0), 1.0, RadiusFloor::UniqueDecoding), 1);
        assert_eq!(list_radius(&rm(1, 0), 1.0, RadiusFloor::One), 1);
        // 2^{10 - √10·log₂10/2 - 1} ≈ 13.4.
        assert_eq!(reconstruct_radius(&rm(10, 2), 1.0, RadiusFloor::One), 13);
    }

    #[test]
    fn noiseless_inputs_are_fixed_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for (m, r) in [(3, 1), (4, 1), (4, 2)] {
            let code = rm(m, r);
            for _ in 0..5 {
                let f = random_codeword(&code, &mut rng);
                for eps in [0.01, 0.2] {
                    let rec = rm_reconstruct(&code, &f, eps, &ReconstructParams::default(), &mut rng, &G)
                        .unwrap();
                    assert_eq!(rec.word, f);
                    let g = rm_reconstruct_grid(&code, &f, eps, &GridParams::default(), &mut rng, &G)
                        .unwrap();
                    assert_eq!(g.word, f);
                }
            }
        }
    }

    #[test]
    fn full_radius_list_step_equals_block_ml() {
        // With radius n the list is the whole codebook, in the same order block_ml
        // scans it, so the same RNG state yields the same winner.
        let code = rm(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for z in 0..16 {
            let y = Word::from_u64(2, z);
            let est = bitwise_decode(&code, &y, 0.1, &mut rng, &G).unwrap();
            let seed = rng.gen::<u64>();
            let rec = finish(&code, est, &y, code.n(), &mut ChaCha8Rng::seed_from_u64(seed), &G)
                .unwrap();
            let ml = block_ml(&code, &y, 0.1, &mut ChaCha8Rng::seed_from_u64(seed), &G).unwrap();
            assert_eq!(rec.list_len, 8);
            assert_eq!(rec.word, ml, "noisy {z:04b}");
        }
    }

    #[test]
    fn output_is_best_in_list() {
        let code = rm(4, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = ReconstructParams::default();
        for _ in 0..50 {
            let f = random_codeword(&code, &mut rng);
            let y = crate::channel::bsc_transmit(&f, 0.15, &mut rng).unwrap();
            // Replay the bitwise stage on a copy of the RNG to recover the list centre.
            let est = bitwise_decode(&code, &y, 0.15, &mut rng.clone(), &G).unwrap();
            let rec = rm_reconstruct(&code, &y, 0.15, &p, &mut rng, &G).unwrap();
            let list = list_within(&code, &est, rec.radius, &G).unwrap();
            assert_eq!(list.members.len(), rec.list_len);
            if rec.fallback {
                assert_eq!(rec.word, est);
                continue;
            }
            assert!(list.members.contains(&rec.word));
            let got = rec.word.distance(&y);
            assert!(list.members.iter().all(|c| c.distance(&y) >= got));
        }
    }

    #[test]
    fn partition_shapes() {
        assert_eq!(grid_partition(4, 2.0).unwrap(), vec![vec![1, 2, 3, 4]]);
        assert_eq!(grid_partition(4, 1.0).unwrap(), vec![vec![1, 2], vec![3, 4]]);
        assert_eq!(
            grid_partition(9, 1.0).unwrap(),
            vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]
        );
        assert_eq!(
            grid_partition(7, 1.0).unwrap(),
            vec![vec![1, 2, 3], vec![4, 5], vec![6, 7]]
        );
        assert!(grid_partition(2, 0.5).is_err());
        assert!(grid_partition(3, 0.0).is_err());
    }

    #[test]
    fn grid_tuples_address_each_coordinate_once() {
        let blocks = grid_partition(4, 1.0).unwrap();
        let mut seen = [0u32; 16];
        for a in 0..4 {
            for b in 0..4 {
                seen[grid_point(&blocks, &[a, b]) as usize] += 1;
            }
        }
        assert!(seen.iter().all(|&s| s == 1));
        // The slice indexed by block 0 = a contains exactly the points with that restriction.
        for a in 0..4u64 {
            let pts = slice_points(4, &blocks[0], a).unwrap();
            for (b, &p) in pts.iter().enumerate() {
                assert_eq!(grid_point(&blocks, &[a, b as u64]), p);
            }
        }
    }

    #[test]
    fn single_block_grid_is_one_slice_pass() {
        // m' = 1: every coordinate gets exactly one vote, from the one slice containing it.
        let code = rm(4, 1);
        let params = GridParams {
            c: 2.0,
            c_prime: 1.0,
            final_scale: 1.0,
            floor: RadiusFloor::One,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..20 {
            let f = random_codeword(&code, &mut rng);
            let y = crate::channel::bsc_transmit(&f, 0.05, &mut rng).unwrap();
            let rec = rm_reconstruct_grid(&code, &y, 0.05, &params, &mut rng, &G).unwrap();
            // Slices are single points, so the voted estimate is the noisy word itself.
            let expect = list_within(&code, &y, rec.radius, &G).unwrap();
            if expect.members.is_empty() {
                assert!(rec.fallback);
                assert_eq!(rec.word, y);
            } else {
                assert!(expect.members.contains(&rec.word));
            }
        }
    }

    #[test]
    fn mc_is_reproducible() {
        let code = rm(3, 1);
        let m = Reconstructor::List(ReconstructParams::default());
        let a = block_error_mc(&code, 0.05, &m, 500, 11, &G).unwrap();
        let b = block_error_mc(&code, 0.05, &m, 500, 11, &G).unwrap();
        assert_eq!(a, b);
    }
}
