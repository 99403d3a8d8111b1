//! Effective-channel probes: the only view of the channel a per-side search
//! gets.
//!
//! A probe is anchored at the current candidate of the side being searched
//! (the other side is fixed) and reports costs of that candidate and of its
//! one-column neighbors. Neighbor costs reuse the anchored effective channel
//! and swap in the single column (precoder side) or row (combiner side) that
//! differs.

use num_complex::Complex64;

use crate::channel::ChannelMatrix;
use crate::codebook::{materialize, CodebookSpec, ColumnIndices, Neighbor};
use crate::error::{Error, Result};
use crate::linalg::{dot_conj, CMatrix};
use crate::metric::{
    cost_whitened, effective_channel, effective_column, CombinerWhitener, EffectiveChannel, EvalCounter, LinkBudget,
};

pub trait CostProbe {
    /// Codebook of the side being searched.
    fn spec(&self) -> &CodebookSpec;

    /// Anchors the probe at `solution` without evaluating its cost.
    fn set_current(&mut self, solution: &ColumnIndices) -> Result<()>;

    /// Cost of the anchored solution. One evaluation.
    fn current_cost(&mut self) -> Result<f64>;

    /// Cost of a neighbor of the anchored solution. One evaluation.
    fn neighbor_cost(&mut self, neighbor: &Neighbor) -> Result<f64>;

    fn evals(&self) -> EvalCounter;
}

/// Searches precoders with the combiner held fixed.
#[derive(Debug)]
pub struct PrecoderProbe<'a> {
    h: &'a ChannelMatrix,
    combiner: CMatrix,
    whitener: CombinerWhitener,
    spec: CodebookSpec,
    budget: LinkBudget,
    ns: usize,
    columns: Vec<Option<Vec<Complex64>>>,
    current: Option<(ColumnIndices, EffectiveChannel)>,
    counter: EvalCounter,
}

impl<'a> PrecoderProbe<'a> {
    pub fn new(
        h: &'a ChannelMatrix,
        combiner: CMatrix,
        spec: CodebookSpec,
        budget: LinkBudget,
        ns: usize,
    ) -> Result<Self> {
        if spec.n_antennas() != h.nt() || combiner.rows() != h.nr() {
            return Err(Error::InvalidDimension(format!(
                "precoder codebook for {} antennas and {}-row combiner on a {}x{} channel",
                spec.n_antennas(),
                combiner.rows(),
                h.nr(),
                h.nt()
            )));
        }
        let whitener = CombinerWhitener::from_combiner(&combiner)?;
        Ok(Self {
            h,
            combiner,
            whitener,
            spec,
            budget,
            ns,
            columns: vec![None; spec.angles() as usize],
            current: None,
            counter: EvalCounter::new(),
        })
    }

    /// `C^H H f_t(q)`, memoized per angle index.
    fn column(&mut self, q: u32) -> Result<&[Complex64]> {
        let slot = (q - 1) as usize;
        if self.columns[slot].is_none() {
            let v = self.spec.column(q)?;
            self.columns[slot] = Some(effective_column(self.h, &self.combiner, &v)?);
        }
        Ok(self.columns[slot].as_deref().expect("filled above"))
    }

    fn anchored(&self) -> Result<&(ColumnIndices, EffectiveChannel)> {
        self.current
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("probe has no current solution".into()))
    }
}

impl CostProbe for PrecoderProbe<'_> {
    fn spec(&self) -> &CodebookSpec {
        &self.spec
    }

    fn set_current(&mut self, solution: &ColumnIndices) -> Result<()> {
        self.spec.check(solution)?;
        let mut g = CMatrix::zeros(self.combiner.cols(), self.spec.n_rf());
        for (m, &q) in solution.as_slice().iter().enumerate() {
            let col = self.column(q)?.to_vec();
            g.column_mut(m).copy_from_slice(&col);
        }
        self.current = Some((solution.clone(), EffectiveChannel::new(g)));
        Ok(())
    }

    fn current_cost(&mut self) -> Result<f64> {
        self.anchored()?;
        let (_, g) = self.current.as_ref().expect("checked above");
        cost_whitened(g, &self.whitener, &self.budget, self.ns, &mut self.counter)
    }

    fn neighbor_cost(&mut self, neighbor: &Neighbor) -> Result<f64> {
        let col = self.column(neighbor.new_index())?.to_vec();
        let (_, g) = self.anchored()?;
        let mut m = g.matrix().clone();
        m.column_mut(neighbor.column).copy_from_slice(&col);
        cost_whitened(
            &EffectiveChannel::new(m),
            &self.whitener,
            &self.budget,
            self.ns,
            &mut self.counter,
        )
    }

    fn evals(&self) -> EvalCounter {
        self.counter
    }
}

/// Searches combiners with the precoder held fixed.
#[derive(Debug)]
pub struct CombinerProbe<'a> {
    spec: CodebookSpec,
    budget: LinkBudget,
    ns: usize,
    /// `H P`, `nr x nt_rf`.
    hp: CMatrix,
    dictionary: CMatrix,
    rows: Vec<Option<Vec<Complex64>>>,
    current: Option<(ColumnIndices, EffectiveChannel)>,
    counter: EvalCounter,
    _channel: std::marker::PhantomData<&'a ChannelMatrix>,
}

impl<'a> CombinerProbe<'a> {
    pub fn new(
        h: &'a ChannelMatrix,
        precoder: &CMatrix,
        spec: CodebookSpec,
        budget: LinkBudget,
        ns: usize,
    ) -> Result<Self> {
        if spec.n_antennas() != h.nr() || precoder.rows() != h.nt() {
            return Err(Error::InvalidDimension(format!(
                "combiner codebook for {} antennas and {}-row precoder on a {}x{} channel",
                spec.n_antennas(),
                precoder.rows(),
                h.nr(),
                h.nt()
            )));
        }
        Ok(Self {
            spec,
            budget,
            ns,
            hp: h.matrix().matmul(precoder)?,
            dictionary: spec.dictionary()?,
            rows: vec![None; spec.angles() as usize],
            current: None,
            counter: EvalCounter::new(),
            _channel: std::marker::PhantomData,
        })
    }

    /// `f_r(q)^H H P`, memoized per angle index.
    fn row(&mut self, q: u32) -> &[Complex64] {
        let slot = (q - 1) as usize;
        if self.rows[slot].is_none() {
            let f = self.dictionary.column(slot);
            let row = (0..self.hp.cols()).map(|j| dot_conj(f, self.hp.column(j))).collect();
            self.rows[slot] = Some(row);
        }
        self.rows[slot].as_deref().expect("filled above")
    }

    fn whitener(&self, q: &[u32]) -> Result<CombinerWhitener> {
        let gram = CMatrix::from_fn(q.len(), q.len(), |i, j| {
            dot_conj(
                self.dictionary.column((q[i] - 1) as usize),
                self.dictionary.column((q[j] - 1) as usize),
            )
        });
        CombinerWhitener::from_gram(&gram)
    }

    fn evaluate(&mut self, q: &[u32], g: &EffectiveChannel) -> Result<f64> {
        let w = self.whitener(q)?;
        cost_whitened(g, &w, &self.budget, self.ns, &mut self.counter)
    }

    fn anchored(&self) -> Result<&(ColumnIndices, EffectiveChannel)> {
        self.current
            .as_ref()
            .ok_or_else(|| Error::InvalidParameter("probe has no current solution".into()))
    }
}

impl CostProbe for CombinerProbe<'_> {
    fn spec(&self) -> &CodebookSpec {
        &self.spec
    }

    fn set_current(&mut self, solution: &ColumnIndices) -> Result<()> {
        self.spec.check(solution)?;
        let mut g = CMatrix::zeros(self.spec.n_rf(), self.hp.cols());
        for (m, &q) in solution.as_slice().iter().enumerate() {
            let row = self.row(q).to_vec();
            for (j, v) in row.into_iter().enumerate() {
                g[(m, j)] = v;
            }
        }
        self.current = Some((solution.clone(), EffectiveChannel::new(g)));
        Ok(())
    }

    fn current_cost(&mut self) -> Result<f64> {
        let (q, g) = self.anchored()?.clone();
        self.evaluate(q.as_slice(), &g)
    }

    fn neighbor_cost(&mut self, neighbor: &Neighbor) -> Result<f64> {
        let row = self.row(neighbor.new_index()).to_vec();
        let (_, g) = self.anchored()?;
        let mut m = g.matrix().clone();
        for (j, v) in row.into_iter().enumerate() {
            m[(neighbor.column, j)] = v;
        }
        self.evaluate(neighbor.indices.as_slice(), &EffectiveChannel::new(m))
    }

    fn evals(&self) -> EvalCounter {
        self.counter
    }
}

/// Cost of a full precoder/combiner pair, computed from scratch, with one
/// stream per RF chain.
pub fn pair_cost(
    h: &ChannelMatrix,
    precoder: &ColumnIndices,
    spec_t: &CodebookSpec,
    combiner: &ColumnIndices,
    spec_r: &CodebookSpec,
    budget: &LinkBudget,
    counter: &mut EvalCounter,
) -> Result<f64> {
    let p = materialize(precoder, spec_t)?;
    let c = materialize(combiner, spec_r)?;
    let g = effective_channel(h, &p, &c)?;
    crate::metric::cost(&g, &c, budget, spec_t.n_rf(), counter)
}
