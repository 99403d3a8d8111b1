//! Exhaustive joint search over both codebooks.

use rayon::prelude::*;

use crate::channel::ChannelMatrix;
use crate::codebook::{index_to_columns, solution_index_unchecked, CodebookSpec, ColumnIndices, SolutionIndex};
use crate::error::{Error, Result};
use crate::linalg::{dot_conj, CMatrix};
use crate::metric::{effective_channel, whitened_cost, CombinerWhitener, EvalCounter, LinkBudget};

/// Default ceiling on full-search evaluations: admits 5-bit codebooks with
/// two RF chains (984064 pairs) and refuses 6-bit ones.
pub const DEFAULT_FS_CEILING: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct FsResult {
    pub best_precoder: ColumnIndices,
    pub best_combiner: ColumnIndices,
    pub best_cost: f64,
    pub evals: EvalCounter,
}

/// Number of valid pairs: ordered distinct-column arrangements per side,
/// multiplied across sides.
pub fn fs_complexity(spec_t: &CodebookSpec, spec_r: &CodebookSpec) -> u64 {
    spec_t.valid_count() * spec_r.valid_count()
}

#[derive(Debug, Clone, Copy)]
struct Best {
    cost: f64,
    precoder: SolutionIndex,
    combiner: SolutionIndex,
}

impl Best {
    /// Higher cost wins; equal costs go to the lexicographically smaller
    /// (precoder, combiner) index pair.
    fn better(self, other: Self) -> Self {
        if other.cost > self.cost
            || (other.cost == self.cost && (other.precoder, other.combiner) < (self.precoder, self.combiner))
        {
            other
        } else {
            self
        }
    }
}

/// Evaluates every valid (precoder, combiner) pair once and returns the
/// best. Refuses to start when the pair count exceeds `ceiling`.
pub fn full_search(
    h: &ChannelMatrix,
    spec_t: &CodebookSpec,
    spec_r: &CodebookSpec,
    budget: &LinkBudget,
    ceiling: u64,
) -> Result<FsResult> {
    let required = fs_complexity(spec_t, spec_r);
    if required > ceiling {
        return Err(Error::BudgetExceeded { required, ceiling });
    }
    if spec_t.n_rf() != spec_r.n_rf() {
        return Err(Error::InvalidDimension(format!(
            "{} transmit and {} receive RF chains; both must equal the stream count",
            spec_t.n_rf(),
            spec_r.n_rf()
        )));
    }
    let ns = spec_t.n_rf();
    let a = budget.per_stream_snr(ns);

    // Effective channel of every (receive column, transmit column) pair,
    // 2^Br x 2^Bt. Any candidate pair's effective channel is a submatrix.
    let dict_t = spec_t.dictionary()?;
    let dict_r = spec_r.dictionary()?;
    let all = effective_channel(h, &dict_t, &dict_r)?.into_matrix();

    let precoders: Vec<(ColumnIndices, SolutionIndex)> = spec_t
        .valid_candidates()
        .map(|q| {
            let p = solution_index_unchecked(q.as_slice(), spec_t.bits());
            (q, p)
        })
        .collect();
    let combiners: Vec<ColumnIndices> = spec_r.valid_candidates().collect();

    let (best, evals) = combiners
        .par_iter()
        .map(|cq| -> Result<(Option<Best>, u64)> {
            let c_idx = solution_index_unchecked(cq.as_slice(), spec_r.bits());
            let rows: Vec<usize> = cq.as_slice().iter().map(|&q| (q - 1) as usize).collect();
            let gram = CMatrix::from_fn(rows.len(), rows.len(), |i, j| {
                dot_conj(dict_r.column(rows[i]), dict_r.column(rows[j]))
            });
            let w = CombinerWhitener::from_gram(&gram)?;
            // Whitened rows of the combiner, against every transmit column.
            let whitened = CMatrix::from_fn(w.rank(), all.cols(), |i, col| {
                rows.iter()
                    .enumerate()
                    .map(|(k, &r)| w.coeff(i, k) * all[(r, col)])
                    .sum()
            });
            let mut local: Option<Best> = None;
            for (pq, p_idx) in &precoders {
                let cost = gathered_cost(&whitened, pq.as_slice(), a);
                let cand = Best {
                    cost,
                    precoder: *p_idx,
                    combiner: c_idx,
                };
                local = Some(match local {
                    None => cand,
                    Some(b) => b.better(cand),
                });
            }
            Ok((local, precoders.len() as u64))
        })
        .try_reduce(
            || (None, 0),
            |(a, na), (b, nb)| {
                let best = match (a, b) {
                    (Some(x), Some(y)) => Some(x.better(y)),
                    (x, None) => x,
                    (None, y) => y,
                };
                Ok((best, na + nb))
            },
        )?;
    let best = best.ok_or_else(|| Error::Infeasible("empty codebook".into()))?;
    let mut counter = EvalCounter::new();
    counter.add(evals);
    Ok(FsResult {
        best_precoder: index_to_columns(best.precoder, spec_t),
        best_combiner: index_to_columns(best.combiner, spec_r),
        best_cost: best.cost,
        evals: counter,
    })
}

/// Cost of the precoder whose columns are `q`, given whitened effective
/// responses of every transmit column.
fn gathered_cost(whitened: &CMatrix, q: &[u32], a: f64) -> f64 {
    let col = |m: usize| whitened.column((q[m] - 1) as usize);
    match whitened.rows() {
        1 => 1.0 + a * (0..q.len()).map(|m| col(m)[0].norm_sqr()).sum::<f64>(),
        2 => {
            let mut trace = 0.0;
            let mut gram_det = 0.0;
            for i in 0..q.len() {
                let ci = col(i);
                trace += ci[0].norm_sqr() + ci[1].norm_sqr();
                for j in i + 1..q.len() {
                    let cj = col(j);
                    gram_det += (ci[0] * cj[1] - cj[0] * ci[1]).norm_sqr();
                }
            }
            1.0 + a * trace + a * a * gram_det
        }
        rank => {
            let m = CMatrix::from_fn(rank, q.len(), |r, c| col(c)[r]);
            whitened_cost(&m, a)
        }
    }
}
