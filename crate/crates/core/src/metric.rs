//! Effective channels, the determinant cost and achievable rate.
//!
//! The cost of a precoder/combiner pair is
//! `det(I + rho/ns * R_n^{-1} G G^H)` with `G = C^H H P` and
//! `R_n = sigma2 * C^H C`. Everything is computed on RF-chain-sized
//! matrices; `C` only enters through its Gram matrix.

use num_complex::Complex64;

use crate::channel::ChannelMatrix;
use crate::error::{Error, Result};
use crate::linalg::{dot_conj, CMatrix};

/// Gram pivots below this fraction of the column energy count as linearly
/// dependent.
const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    rho: f64,
    sigma2: f64,
}

impl LinkBudget {
    pub fn new(rho: f64, sigma2: f64) -> Result<Self> {
        if !(rho > 0.0 && rho.is_finite() && sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "power and noise must be positive, got rho={rho} sigma2={sigma2}"
            )));
        }
        Ok(Self { rho, sigma2 })
    }

    /// Unit noise variance, `rho = 10^(snr_db / 10)`.
    pub fn from_snr_db(snr_db: f64) -> Result<Self> {
        Self::new(10f64.powf(snr_db / 10.0), 1.0)
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.rho / self.sigma2).log10()
    }

    /// `rho / (ns * sigma2)`, the factor in front of the whitened Gram.
    pub fn per_stream_snr(&self, ns: usize) -> f64 {
        self.rho / (ns as f64 * self.sigma2)
    }
}

/// `C^H H P`, shape `nr_rf x nt_rf`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    g: CMatrix,
}

impl EffectiveChannel {
    pub fn new(g: CMatrix) -> Self {
        Self { g }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.g
    }

    pub fn into_matrix(self) -> CMatrix {
        self.g
    }
}

/// Number of cost-function evaluations performed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct EvalCounter {
    count: u64,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self) -> u64 {
        self.count
    }

    pub fn tick(&mut self) {
        self.count += 1;
    }

    pub fn add(&mut self, n: u64) {
        self.count += n;
    }

    pub fn merge(&mut self, other: EvalCounter) {
        self.count += other.count;
    }
}

pub fn effective_channel(h: &ChannelMatrix, p: &CMatrix, c: &CMatrix) -> Result<EffectiveChannel> {
    if c.rows() != h.nr() || p.rows() != h.nt() {
        return Err(Error::InvalidDimension(format!(
            "combiner has {} rows and precoder {} rows for a {}x{} channel",
            c.rows(),
            p.rows(),
            h.nr(),
            h.nt()
        )));
    }
    let hp = h.matrix().matmul(p)?;
    Ok(EffectiveChannel::new(c.adjoint().matmul(&hp)?))
}

/// `c^H H v`: the effective-channel column produced by precoder column `v`.
pub fn effective_column(h: &ChannelMatrix, c: &CMatrix, v: &[Complex64]) -> Result<Vec<Complex64>> {
    if c.rows() != h.nr() {
        return Err(Error::InvalidDimension(format!(
            "combiner has {} rows, channel has {}",
            c.rows(),
            h.nr()
        )));
    }
    let hv = h.matrix().mul_vec(v)?;
    c.adjoint_mul_vec(&hv)
}

/// Replaces precoder column `position` with `new_column` and returns the
/// effective channel that results. Only column `position` of `g` changes.
pub fn update_column(
    g: &EffectiveChannel,
    h: &ChannelMatrix,
    c: &CMatrix,
    new_column: &[Complex64],
    position: usize,
) -> Result<EffectiveChannel> {
    let (rows, cols) = g.g.shape();
    if position >= cols || rows != c.cols() {
        return Err(Error::InvalidDimension(format!(
            "column {position} of a {rows}x{cols} effective channel with {} combiner columns",
            c.cols()
        )));
    }
    let col = effective_column(h, c, new_column)?;
    let mut out = g.g.clone();
    out.column_mut(position).copy_from_slice(&col);
    Ok(EffectiveChannel::new(out))
}

/// Replaces combiner column `position` with `new_column`; only row
/// `position` of `g` changes. The combiner-side twin of [`update_column`].
pub fn update_row(
    g: &EffectiveChannel,
    h: &ChannelMatrix,
    p: &CMatrix,
    new_column: &[Complex64],
    position: usize,
) -> Result<EffectiveChannel> {
    let (rows, cols) = g.g.shape();
    if position >= rows || cols != p.cols() || new_column.len() != h.nr() {
        return Err(Error::InvalidDimension(format!(
            "row {position} of a {rows}x{cols} effective channel with {} precoder columns",
            p.cols()
        )));
    }
    let hp = h.matrix().matmul(p)?;
    let mut out = g.g.clone();
    for j in 0..cols {
        out[(position, j)] = dot_conj(new_column, hp.column(j));
    }
    Ok(EffectiveChannel::new(out))
}

/// Noise whitening for a combiner, derived from its Gram matrix `C^H C`.
///
/// Holds `W` with `W^H W = (C^H C)^+`, restricted to a maximal set of
/// linearly independent combiner columns (taken in column order). For a
/// full-rank combiner this is `L^{-1}` of the Cholesky factor. Codebook
/// columns with different indices can still be identical steering vectors
/// (`sin(x) = sin(pi - x)`), in which case the redundant outputs carry no
/// extra information and are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinerWhitener {
    /// `rank x n_rf`, row-major by retained column.
    w: Vec<Complex64>,
    rank: usize,
    n_rf: usize,
}

impl CombinerWhitener {
    pub fn from_combiner(c: &CMatrix) -> Result<Self> {
        let n = c.cols();
        let gram = CMatrix::from_fn(n, n, |i, j| dot_conj(c.column(i), c.column(j)));
        Self::from_gram(&gram)
    }

    /// `gram` must be Hermitian positive semidefinite.
    pub fn from_gram(gram: &CMatrix) -> Result<Self> {
        let n = gram.rows();
        if gram.cols() != n {
            return Err(Error::InvalidDimension("Gram matrix must be square".into()));
        }
        // Incremental Cholesky over the columns, skipping dependent ones.
        let mut kept: Vec<usize> = Vec::with_capacity(n);
        // l[a][b]: row `a` of the Cholesky factor over kept columns.
        let mut l: Vec<Vec<Complex64>> = Vec::with_capacity(n);
        for j in 0..n {
            let diag = gram[(j, j)].re;
            let mut row = Vec::with_capacity(kept.len() + 1);
            for (a, &ka) in kept.iter().enumerate() {
                let mut s = gram[(j, ka)];
                for b in 0..a {
                    s -= row[b] * l[a][b].conj();
                }
                row.push(s / l[a][a].re);
            }
            let pivot = diag - row.iter().map(Complex64::norm_sqr).sum::<f64>();
            if diag > 0.0 && pivot > RANK_TOL * diag {
                row.push(Complex64::new(pivot.sqrt(), 0.0));
                kept.push(j);
                l.push(row);
            }
        }
        let rank = kept.len();
        if rank == 0 {
            return Err(Error::SingularCombiner);
        }
        // W = L^{-1} S, S selecting the kept columns. Forward substitution.
        let mut linv = vec![vec![Complex64::new(0.0, 0.0); rank]; rank];
        #[allow(clippy::needless_range_loop)]
        for i in 0..rank {
            linv[i][i] = Complex64::new(1.0, 0.0) / l[i][i];
            for j in 0..i {
                let mut s = Complex64::new(0.0, 0.0);
                for k in j..i {
                    s += l[i][k] * linv[k][j];
                }
                linv[i][j] = -s / l[i][i];
            }
        }
        let mut w = vec![Complex64::new(0.0, 0.0); rank * n];
        for i in 0..rank {
            for (j, &kj) in kept.iter().enumerate() {
                w[i * n + kj] = linv[i][j];
            }
        }
        Ok(Self { w, rank, n_rf: n })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n_rf(&self) -> usize {
        self.n_rf
    }

    /// Entry `(i, j)` of `W`.
    pub fn coeff(&self, i: usize, j: usize) -> Complex64 {
        self.w[i * self.n_rf + j]
    }

    /// `W g`, shape `rank x g.cols()`.
    pub fn apply(&self, g: &CMatrix) -> Result<CMatrix> {
        if g.rows() != self.n_rf {
            return Err(Error::InvalidDimension(format!(
                "effective channel has {} rows, combiner has {} columns",
                g.rows(),
                self.n_rf
            )));
        }
        Ok(CMatrix::from_fn(self.rank, g.cols(), |i, c| {
            (0..self.n_rf).map(|k| self.coeff(i, k) * g[(k, c)]).sum()
        }))
    }
}

/// `det(I + a M M^H)` for a whitened effective channel `M`.
///
/// The value is at least 1 because `M M^H` is positive semidefinite; the
/// one- and two-row cases use closed forms that keep it so exactly.
pub fn whitened_cost(m: &CMatrix, a: f64) -> f64 {
    match m.rows() {
        0 => 1.0,
        1 => 1.0 + a * m.frobenius_norm_sqr(),
        2 => {
            let trace = m.frobenius_norm_sqr();
            // Cauchy-Binet: det(M M^H) = sum over column pairs of |2x2 minor|^2.
            let mut gram_det = 0.0;
            for i in 0..m.cols() {
                for j in i + 1..m.cols() {
                    gram_det += (m[(0, i)] * m[(1, j)] - m[(0, j)] * m[(1, i)]).norm_sqr();
                }
            }
            1.0 + a * trace + a * a * gram_det
        }
        r => {
            let mut t = m.matmul(&m.adjoint()).expect("conformable by construction");
            t.scale(Complex64::new(a, 0.0));
            for i in 0..r {
                t[(i, i)] += 1.0;
            }
            hermitian_pd_det(&t).max(1.0)
        }
    }
}

/// Determinant of a Hermitian positive-definite matrix via Cholesky.
fn hermitian_pd_det(t: &CMatrix) -> f64 {
    let n = t.rows();
    let mut l = CMatrix::zeros(n, n);
    let mut det = 1.0;
    for j in 0..n {
        let mut d = t[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        det *= d;
        let djj = d.max(f64::MIN_POSITIVE).sqrt();
        l[(j, j)] = Complex64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = t[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    det
}

/// Cost `det(I_ns + rho/ns * R_n^{-1} g g^H)` of an effective channel `g`
/// seen through combiner `c`. Counts one evaluation.
pub fn cost(
    g: &EffectiveChannel,
    c: &CMatrix,
    budget: &LinkBudget,
    ns: usize,
    counter: &mut EvalCounter,
) -> Result<f64> {
    let whitener = CombinerWhitener::from_combiner(c)?;
    cost_whitened(g, &whitener, budget, ns, counter)
}

/// [`cost`] with a precomputed combiner whitener.
pub fn cost_whitened(
    g: &EffectiveChannel,
    whitener: &CombinerWhitener,
    budget: &LinkBudget,
    ns: usize,
    counter: &mut EvalCounter,
) -> Result<f64> {
    if ns == 0 {
        return Err(Error::InvalidDimension("need at least one stream".into()));
    }
    let m = whitener.apply(&g.g)?;
    counter.tick();
    Ok(whitened_cost(&m, budget.per_stream_snr(ns)))
}

/// Achievable rate in bit/s/Hz, `log2(cost)`.
pub fn rate(cost_value: f64) -> Result<f64> {
    if cost_value.is_nan() || cost_value < 1.0 {
        return Err(Error::Domain(cost_value));
    }
    Ok(cost_value.log2())
}
