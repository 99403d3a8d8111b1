//! Turbo-like joint search: alternate combiner search (precoder fixed) and
//! precoder search (combiner fixed) for `K` rounds, each side searched by
//! multistart tabu search through its effective-channel probe.

use crate::channel::ChannelMatrix;
use crate::codebook::{materialize, CodebookSpec, ColumnIndices};
use crate::error::{Error, Result};
use crate::metric::{rate, LinkBudget};
use crate::probe::{CombinerProbe, PrecoderProbe};
use crate::search_ts::{initial_solutions, inject_start, ts_multistart_from, TsParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurboParams {
    pub k_iterations: usize,
    pub ts_tx: TsParams,
    pub ts_rx: TsParams,
    /// Seed each round's search with that side's previous solution, which
    /// makes the per-round rate nondecreasing.
    pub warm_start: bool,
}

impl TurboParams {
    pub fn new(k_iterations: usize, ts: TsParams) -> Result<Self> {
        let p = Self {
            k_iterations,
            ts_tx: ts,
            ts_rx: ts,
            warm_start: true,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_iterations == 0 {
            return Err(Error::InvalidParameter("need at least one turbo round".into()));
        }
        self.ts_tx.validate()?;
        self.ts_rx.validate()
    }

    /// Tuned settings for 4, 5 and 6 quantization bits with `K = 4`.
    pub fn preset(bits: u32) -> Option<Self> {
        let (max_iter, max_len, m) = match bits {
            4 => (500, 100, 1),
            5 => (1000, 200, 2),
            6 => (3000, 600, 5),
            _ => return None,
        };
        let ts = TsParams {
            max_iter,
            max_len,
            m_restarts: m,
        };
        Some(Self {
            k_iterations: 4,
            ts_tx: ts,
            ts_rx: ts,
            warm_start: true,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurboResult {
    pub precoder: ColumnIndices,
    pub combiner: ColumnIndices,
    pub rate: f64,
    pub cost: f64,
    /// Neighborhood evaluations over all rounds, sides and restarts; never
    /// more than [`ts_complexity`].
    pub evals_total: u64,
    /// One start evaluation per restart, kept apart from `evals_total`.
    pub start_evals: u64,
    /// Rate of the pair held after each round.
    pub per_round_rates: Vec<f64>,
    /// Precoder/combiner exchanges between the two ends, one per round.
    pub message_rounds: usize,
}

pub fn turbo_search(
    h: &ChannelMatrix,
    spec_t: &CodebookSpec,
    spec_r: &CodebookSpec,
    budget: &LinkBudget,
    params: &TurboParams,
) -> Result<TurboResult> {
    params.validate()?;
    if spec_t.n_rf() != spec_r.n_rf() {
        return Err(Error::InvalidDimension(format!(
            "{} transmit and {} receive RF chains; both must equal the stream count",
            spec_t.n_rf(),
            spec_r.n_rf()
        )));
    }
    let ns = spec_t.n_rf();
    let tx_starts = initial_solutions(spec_t, params.ts_tx.m_restarts)?;
    let rx_starts = initial_solutions(spec_r, params.ts_rx.m_restarts)?;

    let mut precoder = tx_starts[0].clone();
    let mut combiner: Option<ColumnIndices> = None;
    let mut cost = f64::NAN;
    let mut evals_total = 0;
    let mut start_evals = 0;
    let mut per_round_rates = Vec::with_capacity(params.k_iterations);

    for _ in 0..params.k_iterations {
        let p = materialize(&precoder, spec_t)?;
        let mut probe = CombinerProbe::new(h, &p, *spec_r, *budget, ns)?;
        let mut starts = rx_starts.clone();
        if let (true, Some(prev)) = (params.warm_start, &combiner) {
            inject_start(&mut starts, prev, spec_r)?;
        }
        let rx = ts_multistart_from(&mut probe, &params.ts_rx, &starts)?;
        evals_total += rx.evals;
        start_evals += rx.start_evals;

        let c = materialize(&rx.solution, spec_r)?;
        let mut probe = PrecoderProbe::new(h, c, *spec_t, *budget, ns)?;
        let mut starts = tx_starts.clone();
        if params.warm_start {
            inject_start(&mut starts, &precoder, spec_t)?;
        }
        let tx = ts_multistart_from(&mut probe, &params.ts_tx, &starts)?;
        evals_total += tx.evals;
        start_evals += tx.start_evals;

        precoder = tx.solution;
        combiner = Some(rx.solution);
        cost = tx.cost;
        per_round_rates.push(rate(cost)?);
    }

    Ok(TurboResult {
        precoder,
        combiner: combiner.expect("at least one round"),
        rate: rate(cost)?,
        cost,
        evals_total,
        start_evals,
        per_round_rates,
        message_rounds: params.k_iterations,
    })
}

/// Worst-case evaluation budget `(2 Nt_rf max_iter + 2 Nr_rf max_iter) M K`;
/// with per-side settings each side contributes its own `max_iter * M`.
pub fn ts_complexity(params: &TurboParams, spec_t: &CodebookSpec, spec_r: &CodebookSpec) -> u64 {
    let tx = params.ts_tx.eval_bound(spec_t.n_rf()) * params.ts_tx.m_restarts as u64;
    let rx = params.ts_rx.eval_bound(spec_r.n_rf()) * params.ts_rx.m_restarts as u64;
    (tx + rx) * params.k_iterations as u64
}
