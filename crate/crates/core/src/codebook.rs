//! Beamsteering codebook arithmetic.
//!
//! A candidate precoder (or combiner) is a tuple of per-column angle indices
//! `q_m` in `1..=2^bits`; column `m` steers towards `2 pi q_m / 2^bits`.
//! Candidates are addressed by a mixed-radix solution index, which is what
//! the tabu list is keyed on. Tuples with a repeated index are invalid.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;

use crate::channel::{ula_response, ArrayGeometry};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// One side's codebook: `n_rf` steering columns of `n_antennas` elements,
/// each quantized with `bits` bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodebookSpec {
    n_rf: usize,
    bits: u32,
    n_antennas: usize,
    geometry: ArrayGeometry,
}

impl CodebookSpec {
    pub fn new(n_rf: usize, bits: u32, n_antennas: usize, geometry: ArrayGeometry) -> Result<Self> {
        if bits == 0 || bits > 24 {
            return Err(Error::InvalidParameter(format!(
                "quantization bits must be in 1..=24, got {bits}"
            )));
        }
        if n_rf == 0 {
            return Err(Error::InvalidParameter("need at least one RF chain".into()));
        }
        if n_rf as u64 > 1u64 << bits {
            return Err(Error::Infeasible(format!(
                "{n_rf} distinct columns cannot be drawn from {} angles",
                1u64 << bits
            )));
        }
        if bits as usize * n_rf > 62 {
            return Err(Error::InvalidParameter(format!(
                "codebook of 2^{} candidates is not addressable",
                bits as usize * n_rf
            )));
        }
        if n_antennas == 0 {
            return Err(Error::InvalidDimension("array needs at least one antenna".into()));
        }
        Ok(Self {
            n_rf,
            bits,
            n_antennas,
            geometry,
        })
    }

    pub fn n_rf(&self) -> usize {
        self.n_rf
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn n_antennas(&self) -> usize {
        self.n_antennas
    }

    pub fn geometry(&self) -> ArrayGeometry {
        self.geometry
    }

    /// Number of quantized angles, `2^bits`.
    pub fn angles(&self) -> u32 {
        1 << self.bits
    }

    /// Number of index tuples, valid or not: `2^(bits * n_rf)`.
    pub fn solution_count(&self) -> u64 {
        1u64 << (self.bits as usize * self.n_rf)
    }

    /// Number of valid (distinct-column) candidates: `2^B (2^B - 1) ... (2^B - n_rf + 1)`.
    pub fn valid_count(&self) -> u64 {
        let n = self.angles() as u64;
        (0..self.n_rf as u64).map(|i| n - i).product()
    }

    pub fn check(&self, indices: &ColumnIndices) -> Result<()> {
        if indices.len() != self.n_rf {
            return Err(Error::InvalidDimension(format!(
                "candidate has {} columns, codebook has {}",
                indices.len(),
                self.n_rf
            )));
        }
        let max = self.angles();
        match indices.0.iter().find(|&&q| q == 0 || q > max) {
            Some(&q) => Err(Error::InvalidIndex {
                index: q as u64,
                max: max as u64,
            }),
            None => Ok(()),
        }
    }

    /// All valid candidates in ascending solution-index order.
    pub fn valid_candidates(&self) -> impl Iterator<Item = ColumnIndices> + '_ {
        (1..=self.solution_count())
            .map(move |p| index_to_columns(SolutionIndex(p), self))
            .filter(ColumnIndices::is_valid)
    }

    /// Steering column for angle index `q`.
    pub fn column(&self, q: u32) -> Result<Vec<Complex64>> {
        let angle = angle_of_index(q, self.bits)?;
        ula_response(self.n_antennas, angle, self.geometry)
    }

    /// Every steering column of the codebook, `n_antennas x 2^bits`; column
    /// `q - 1` belongs to angle index `q`.
    pub fn dictionary(&self) -> Result<CMatrix> {
        let cols = (1..=self.angles())
            .map(|q| self.column(q))
            .collect::<Result<Vec<_>>>()?;
        CMatrix::from_columns(&cols)
    }
}

/// Per-column angle indices of one candidate, 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnIndices(pub Vec<u32>);

impl ColumnIndices {
    pub fn new(q: impl Into<Vec<u32>>) -> Self {
        Self(q.into())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// True when all column indices are pairwise distinct.
    pub fn is_valid(&self) -> bool {
        let q = &self.0;
        (0..q.len()).all(|i| (i + 1..q.len()).all(|j| q[i] != q[j]))
    }
}

impl fmt::Display for ColumnIndices {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{q}")?;
        }
        f.write_str("}")
    }
}

/// 1-based position of a candidate among all `2^(bits * n_rf)` tuples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SolutionIndex(pub u64);

impl SolutionIndex {
    pub fn get(self) -> u64 {
        self.0
    }

    /// 0-based slot in a tabu list.
    pub fn slot(self) -> usize {
        (self.0 - 1) as usize
    }
}

/// Quantized steering angle `2 pi n / 2^bits`.
pub fn angle_of_index(n: u32, bits: u32) -> Result<f64> {
    let max = 1u64 << bits;
    if n == 0 || n as u64 > max {
        return Err(Error::InvalidIndex { index: n as u64, max });
    }
    Ok(2.0 * PI * n as f64 / max as f64)
}

/// Stacks the steering columns of `indices` into an `n_antennas x n_rf` matrix.
pub fn materialize(indices: &ColumnIndices, spec: &CodebookSpec) -> Result<CMatrix> {
    spec.check(indices)?;
    let cols = indices.0.iter().map(|&q| spec.column(q)).collect::<Result<Vec<_>>>()?;
    CMatrix::from_columns(&cols)
}

/// `p = sum_m (q_m - 1) (2^B)^(n_rf - m) + 1`: the first column is the most
/// significant digit.
pub fn solution_index(indices: &ColumnIndices, spec: &CodebookSpec) -> Result<SolutionIndex> {
    spec.check(indices)?;
    Ok(solution_index_unchecked(indices.as_slice(), spec.bits))
}

pub(crate) fn solution_index_unchecked(q: &[u32], bits: u32) -> SolutionIndex {
    let p = q.iter().fold(0u64, |acc, &qm| (acc << bits) | (qm as u64 - 1));
    SolutionIndex(p + 1)
}

/// Inverse of [`solution_index`].
pub fn index_to_columns(p: SolutionIndex, spec: &CodebookSpec) -> ColumnIndices {
    debug_assert!(p.0 >= 1 && p.0 <= spec.solution_count());
    let mask = (1u64 << spec.bits) - 1;
    let mut rest = p.0 - 1;
    let mut q = vec![0u32; spec.n_rf];
    for slot in q.iter_mut().rev() {
        *slot = (rest & mask) as u32 + 1;
        rest >>= spec.bits;
    }
    ColumnIndices(q)
}

/// A candidate one step away from the current one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighbor {
    /// 1-based neighbor label `u`; column `ceil(u/2)` moves, odd `u` down,
    /// even `u` up.
    pub slot: usize,
    /// 0-based position of the changed column.
    pub column: usize,
    pub indices: ColumnIndices,
}

impl Neighbor {
    pub fn new_index(&self) -> u32 {
        self.indices.0[self.column]
    }
}

/// Neighbors of a valid candidate, in slot order.
///
/// A step that would leave `1..=2^bits` is clamped, so it lands on the
/// current candidate; such slots are dropped, as are slots that would repeat
/// a column index. The remaining entries keep their slot labels.
pub fn neighbors(indices: &ColumnIndices, spec: &CodebookSpec) -> Result<Vec<Neighbor>> {
    spec.check(indices)?;
    let max = spec.angles();
    let mut out = Vec::with_capacity(2 * spec.n_rf);
    for u in 1..=2 * spec.n_rf {
        let column = (u - 1) / 2;
        let q = indices.0[column];
        let moved = if u % 2 == 1 {
            q.saturating_sub(1).max(1)
        } else {
            (q + 1).min(max)
        };
        if moved == q || indices.0.iter().enumerate().any(|(i, &o)| i != column && o == moved) {
            continue;
        }
        let mut next = indices.clone();
        next.0[column] = moved;
        out.push(Neighbor {
            slot: u,
            column,
            indices: next,
        });
    }
    Ok(out)
}
