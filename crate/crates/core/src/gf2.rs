//! Linear algebra over F2 on points packed into `u64`.
//!
//! A point of F2^m is a `u64` whose bit `j-1` holds the coordinate `x_j`,
//! so ambient dimensions up to 63 are supported.

use rand::Rng;

use crate::error::{param, Result};

pub const MAX_AMBIENT: u32 = 63;

/// Incrementally maintained row-echelon basis, keyed by leading bit.
#[derive(Debug, Clone)]
pub struct EchelonBasis {
    pivots: [u64; 64],
    dim: usize,
}

impl Default for EchelonBasis {
    fn default() -> Self {
        EchelonBasis {
            pivots: [0; 64],
            dim: 0,
        }
    }
}

impl EchelonBasis {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_vectors(vs: &[u64]) -> Self {
        let mut b = Self::new();
        for &v in vs {
            b.insert(v);
        }
        b
    }

    /// Reduces `v` against the basis; zero iff `v` lies in the span.
    pub fn reduce(&self, mut v: u64) -> u64 {
        while v != 0 {
            let top = 63 - v.leading_zeros() as usize;
            let p = self.pivots[top];
            if p == 0 {
                break;
            }
            v ^= p;
        }
        v
    }

    /// Adds `v`; returns false if it was already in the span.
    pub fn insert(&mut self, v: u64) -> bool {
        let r = self.reduce(v);
        if r == 0 {
            return false;
        }
        let top = 63 - r.leading_zeros() as usize;
        self.pivots[top] = r;
        self.dim += 1;
        true
    }

    pub fn contains(&self, v: u64) -> bool {
        self.reduce(v) == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn rank(vs: &[u64]) -> usize {
    EchelonBasis::from_vectors(vs).dim()
}

/// All 2^k combinations of `basis`, combination `i` taking basis vector `j` when bit `j` of `i` is set.
pub fn span_points(basis: &[u64]) -> Vec<u64> {
    let mut pts = vec![0u64; 1 << basis.len()];
    for (j, &b) in basis.iter().enumerate() {
        let half = 1usize << j;
        for i in 0..half {
            pts[half + i] = pts[i] ^ b;
        }
    }
    pts
}

/// A linear subspace of F2^ambient_m given by an ordered basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    ambient_m: u32,
    basis: Vec<u64>,
}

impl Subspace {
    pub fn new(ambient_m: u32, basis: Vec<u64>) -> Result<Self> {
        if ambient_m > MAX_AMBIENT {
            return param(format!("ambient dimension {ambient_m} exceeds {MAX_AMBIENT}"));
        }
        let limit = 1u64 << ambient_m;
        if let Some(v) = basis.iter().find(|&&v| v >= limit) {
            return param(format!("basis vector {v:#x} outside F2^{ambient_m}"));
        }
        if rank(&basis) != basis.len() {
            return param("basis vectors are linearly dependent");
        }
        Ok(Subspace { ambient_m, basis })
    }

    /// Span of the first `dim` standard basis vectors.
    pub fn standard(ambient_m: u32, dim: u32) -> Result<Self> {
        if dim > ambient_m {
            return param(format!("cannot embed dimension {dim} in F2^{ambient_m}"));
        }
        Subspace::new(ambient_m, (0..dim).map(|j| 1u64 << j).collect())
    }

    pub fn ambient_m(&self) -> u32 {
        self.ambient_m
    }

    pub fn basis(&self) -> &[u64] {
        &self.basis
    }

    pub fn dim(&self) -> u32 {
        self.basis.len() as u32
    }

    /// Point addressed by combination index `i`.
    pub fn point(&self, i: u64) -> u64 {
        let mut p = 0;
        let mut bits = i;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            p ^= self.basis[j];
            bits &= bits - 1;
        }
        p
    }

    pub fn points(&self) -> Vec<u64> {
        span_points(&self.basis)
    }

    pub fn contains(&self, x: u64) -> bool {
        EchelonBasis::from_vectors(&self.basis).contains(x)
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        let e = EchelonBasis::from_vectors(&self.basis);
        other.basis.iter().all(|&v| e.contains(v))
    }

    /// Dimension of `self + other`.
    pub fn sum_dim(&self, other: &Subspace) -> usize {
        let mut e = EchelonBasis::from_vectors(&self.basis);
        for &v in &other.basis {
            e.insert(v);
        }
        e.dim()
    }
}

/// Linear map on F2^dim, stored by columns: `apply(x)` XORs column `j` for every set bit `j` of `x`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LinearMap {
    dim: u32,
    cols: Vec<u64>,
}

impl LinearMap {
    pub fn identity(dim: u32) -> Self {
        LinearMap {
            dim,
            cols: (0..dim).map(|j| 1u64 << j).collect(),
        }
    }

    /// Builds an invertible map from its columns.
    pub fn new(dim: u32, cols: Vec<u64>) -> Result<Self> {
        if dim > MAX_AMBIENT || cols.len() != dim as usize {
            return param(format!("expected {dim} columns, got {}", cols.len()));
        }
        if cols.iter().any(|&c| c >> dim != 0) {
            return param("column outside F2^dim");
        }
        if rank(&cols) != dim as usize {
            return param("linear map is singular over F2");
        }
        Ok(LinearMap { dim, cols })
    }

    /// Builds a map from row masks: bit `j` of `rows[i]` is the matrix entry (i, j).
    pub fn from_rows(dim: u32, rows: &[u64]) -> Result<Self> {
        if rows.len() != dim as usize {
            return param(format!("expected {dim} rows, got {}", rows.len()));
        }
        let cols = (0..dim)
            .map(|j| {
                rows.iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, r)| acc | (((r >> j) & 1) << i))
            })
            .collect();
        LinearMap::new(dim, cols)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn cols(&self) -> &[u64] {
        &self.cols
    }

    #[inline]
    pub fn apply(&self, x: u64) -> u64 {
        let mut y = 0;
        let mut bits = x;
        while bits != 0 {
            let j = bits.trailing_zeros() as usize;
            y ^= self.cols[j];
            bits &= bits - 1;
        }
        y
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &LinearMap) -> LinearMap {
        LinearMap {
            dim: self.dim,
            cols: other.cols.iter().map(|&c| self.apply(c)).collect(),
        }
    }

    pub fn inverse(&self) -> LinearMap {
        // Solve self(y_j) = e_j by tracking combinations alongside elimination.
        let n = self.dim as usize;
        let mut rows: Vec<(u64, u64)> = (0..n).map(|j| (self.cols[j], 1u64 << j)).collect();
        let mut pivot_of = vec![usize::MAX; n];
        let mut r = 0;
        for bit in 0..n {
            let Some(p) = (r..n).find(|&i| (rows[i].0 >> bit) & 1 == 1) else {
                continue;
            };
            rows.swap(r, p);
            for i in 0..n {
                if i != r && (rows[i].0 >> bit) & 1 == 1 {
                    rows[i].0 ^= rows[r].0;
                    rows[i].1 ^= rows[r].1;
                }
            }
            pivot_of[bit] = r;
            r += 1;
        }
        // rows[pivot_of[b]] = (e_b, combination c) with self(c) = e_b.
        let cols = (0..n).map(|b| rows[pivot_of[b]].1).collect();
        LinearMap {
            dim: self.dim,
            cols,
        }
    }

    /// Every invertible map on F2^dim (|GL(dim, 2)| of them), in lexicographic column order.
    pub fn all_invertible(dim: u32) -> Vec<LinearMap> {
        fn extend(dim: u32, cols: &mut Vec<u64>, span: &EchelonBasis, out: &mut Vec<LinearMap>) {
            if cols.len() == dim as usize {
                out.push(LinearMap {
                    dim,
                    cols: cols.clone(),
                });
                return;
            }
            for v in 1..(1u64 << dim) {
                if span.contains(v) {
                    continue;
                }
                let mut next = span.clone();
                next.insert(v);
                cols.push(v);
                extend(dim, cols, &next, out);
                cols.pop();
            }
        }
        let mut out = Vec::new();
        extend(dim, &mut Vec::new(), &EchelonBasis::new(), &mut out);
        out
    }

    /// Uniformly random invertible map: each column uniform outside the span of the previous ones.
    pub fn random<R: Rng + ?Sized>(dim: u32, rng: &mut R) -> LinearMap {
        let mut span = EchelonBasis::new();
        let mut cols = Vec::with_capacity(dim as usize);
        while cols.len() < dim as usize {
            let v = rng.gen_range(1..(1u64 << dim));
            if span.insert(v) {
                cols.push(v);
            }
        }
        LinearMap { dim, cols }
    }
}
