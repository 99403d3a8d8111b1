//! Tabu search over one side's codebook, the other side held fixed.
//!
//! The tabu list is keyed on whole solutions (solution index), not on moves.
//! Each iteration evaluates every admissible neighbor of the current
//! solution, then walks them best-first and takes the first one that either
//! beats the best-so-far (aspiration) or is not tabu. If none qualifies, the
//! tabu bits of that neighborhood are cleared and the walk repeats. A
//! non-improving selection becomes tabu and bumps the stagnation counter; an
//! improving one becomes the new best and resets it.

use std::cmp::Ordering;

use crate::codebook::{
    index_to_columns, neighbors, solution_index, solution_index_unchecked, CodebookSpec, ColumnIndices, SolutionIndex,
};
use crate::error::{Error, Result};
use crate::probe::CostProbe;

/// Stopping and restart parameters of one side's search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TsParams {
    /// Iteration cap per restart.
    pub max_iter: usize,
    /// Stop after this many consecutive non-improving iterations.
    pub max_len: usize,
    /// Number of stratified initial solutions.
    pub m_restarts: usize,
}

impl TsParams {
    /// `max_len >= max_iter` is accepted; the stagnation stop then never
    /// fires before the iteration cap.
    pub fn new(max_iter: usize, max_len: usize, m_restarts: usize) -> Result<Self> {
        let p = Self {
            max_iter,
            max_len,
            m_restarts,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 || self.max_len == 0 || self.m_restarts == 0 {
            return Err(Error::InvalidParameter(format!(
                "max_iter, max_len and restarts must be at least 1, got {}, {}, {}",
                self.max_iter, self.max_len, self.m_restarts
            )));
        }
        Ok(())
    }

    /// Worst-case neighborhood evaluations of one restart, `2 n_rf max_iter`.
    pub fn eval_bound(&self, n_rf: usize) -> u64 {
        (2 * n_rf * self.max_iter) as u64
    }
}

/// How the selected neighbor got past the tabu list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Admission {
    /// Not tabu.
    NonTabu,
    /// Tabu, but better than the best-so-far.
    Aspiration,
    /// Nothing qualified; the neighborhood's tabu bits were cleared first.
    AfterReset,
}

/// What one iteration did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub selected: ColumnIndices,
    pub index: SolutionIndex,
    pub cost: f64,
    pub admission: Admission,
    /// Tabu bit of the selected solution before the step.
    pub was_tabu: bool,
    pub improved: bool,
    /// Neighbors evaluated in this step.
    pub evaluated: usize,
}

#[derive(Debug, Clone)]
pub struct TabuState {
    spec: CodebookSpec,
    tabu: Vec<bool>,
    flag: usize,
    best: (ColumnIndices, f64),
    current: ColumnIndices,
    iterations: usize,
    neighborhood_evals: u64,
}

impl TabuState {
    /// Fresh state at `start`, whose cost is already known. Invalid
    /// (repeated-column) solutions start and stay tabu.
    pub fn new(spec: CodebookSpec, start: ColumnIndices, start_cost: f64) -> Result<Self> {
        spec.check(&start)?;
        if !start.is_valid() {
            return Err(Error::InvalidParameter(format!("start {start} repeats a column")));
        }
        let tabu = (1..=spec.solution_count())
            .map(|p| !index_to_columns(SolutionIndex(p), &spec).is_valid())
            .collect();
        Ok(Self {
            spec,
            tabu,
            flag: 0,
            best: (start.clone(), start_cost),
            current: start,
            iterations: 0,
            neighborhood_evals: 0,
        })
    }

    pub fn flag(&self) -> usize {
        self.flag
    }

    pub fn best(&self) -> (&ColumnIndices, f64) {
        (&self.best.0, self.best.1)
    }

    pub fn current(&self) -> &ColumnIndices {
        &self.current
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn neighborhood_evals(&self) -> u64 {
        self.neighborhood_evals
    }

    pub fn is_tabu(&self, p: SolutionIndex) -> bool {
        self.tabu[p.slot()]
    }

    fn index(&self, q: &ColumnIndices) -> SolutionIndex {
        solution_index_unchecked(q.as_slice(), self.spec.bits())
    }
}

/// One tabu-search iteration from `state.current`.
pub fn ts_step<P: CostProbe + ?Sized>(state: &mut TabuState, probe: &mut P) -> Result<StepReport> {
    let hood = neighbors(&state.current, &state.spec)?;
    if hood.is_empty() {
        return Err(Error::DegenerateNeighborhood);
    }
    probe.set_current(&state.current)?;
    let mut ranked = Vec::with_capacity(hood.len());
    for v in hood {
        let cost = probe.neighbor_cost(&v)?;
        state.neighborhood_evals += 1;
        let p = state.index(&v.indices);
        ranked.push((v.indices, p, cost));
    }
    let evaluated = ranked.len();
    ranked.sort_by(|a, b| match b.2.total_cmp(&a.2) {
        Ordering::Equal => a.1.cmp(&b.1),
        o => o,
    });

    let best_cost = state.best.1;
    let pick = ranked
        .iter()
        .position(|(_, p, cost)| *cost > best_cost || !state.tabu[p.slot()]);
    let (pos, admission) = match pick {
        Some(i) if state.tabu[ranked[i].1.slot()] => (i, Admission::Aspiration),
        Some(i) => (i, Admission::NonTabu),
        None => {
            // every neighbor is valid, so none of these bits is permanent
            for (_, p, _) in &ranked {
                state.tabu[p.slot()] = false;
            }
            (0, Admission::AfterReset)
        }
    };
    let (selected, index, cost) = ranked.swap_remove(pos);
    // a reset only happens when every neighbor was tabu
    let was_tabu = admission != Admission::NonTabu;

    let improved = cost > best_cost;
    if improved {
        state.tabu[index.slot()] = false;
        state.best = (selected.clone(), cost);
        state.flag = 0;
    } else {
        state.tabu[index.slot()] = true;
        state.flag += 1;
    }
    state.current = selected.clone();
    state.iterations += 1;

    Ok(StepReport {
        selected,
        index,
        cost,
        admission,
        was_tabu,
        improved,
        evaluated,
    })
}

/// Result of a search over one side.
#[derive(Debug, Clone, PartialEq)]
pub struct TsOutcome {
    pub solution: ColumnIndices,
    pub index: SolutionIndex,
    pub cost: f64,
    /// Neighborhood evaluations; bounded by `2 n_rf max_iter` per restart.
    pub evals: u64,
    /// Evaluations of start solutions, one per restart.
    pub start_evals: u64,
    pub iterations: usize,
}

/// Single tabu search from `start`.
pub fn ts_search<P: CostProbe + ?Sized>(start: &ColumnIndices, probe: &mut P, params: &TsParams) -> Result<TsOutcome> {
    ts_search_observed(start, probe, params, |_, _| {})
}

/// [`ts_search`], calling `observe` after every step.
pub fn ts_search_observed<P, F>(
    start: &ColumnIndices,
    probe: &mut P,
    params: &TsParams,
    mut observe: F,
) -> Result<TsOutcome>
where
    P: CostProbe + ?Sized,
    F: FnMut(&TabuState, &StepReport),
{
    params.validate()?;
    let spec = *probe.spec();
    probe.set_current(start)?;
    let start_cost = probe.current_cost()?;
    let mut state = TabuState::new(spec, start.clone(), start_cost)?;
    while state.iterations < params.max_iter && state.flag < params.max_len {
        let report = ts_step(&mut state, probe)?;
        observe(&state, &report);
    }
    let (best, cost) = state.best();
    Ok(TsOutcome {
        solution: best.clone(),
        index: solution_index(best, &spec)?,
        cost,
        evals: state.neighborhood_evals,
        start_evals: 1,
        iterations: state.iterations,
    })
}

/// `m` valid starts spread evenly over the solution indices: the `i`-th sits
/// at `round((i - 1/2) * 2^(bits n_rf) / m)`, moved forward (wrapping) to the
/// next valid index when it repeats a column.
pub fn initial_solutions(spec: &CodebookSpec, m: usize) -> Result<Vec<ColumnIndices>> {
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one initial solution".into()));
    }
    if spec.valid_count() == 0 {
        return Err(Error::Infeasible("codebook has no distinct-column candidate".into()));
    }
    let total = spec.solution_count() as u128;
    let m128 = m as u128;
    (1..=m as u128)
        .map(|i| {
            // round half up of (2i - 1) total / 2m
            let p = (((2 * i - 1) * total + m128) / (2 * m128)).clamp(1, total) as u64;
            Ok(next_valid(SolutionIndex(p), spec))
        })
        .collect()
}

fn next_valid(start: SolutionIndex, spec: &CodebookSpec) -> ColumnIndices {
    let total = spec.solution_count();
    let mut p = start.0;
    loop {
        let q = index_to_columns(SolutionIndex(p), spec);
        if q.is_valid() {
            return q;
        }
        p = if p == total { 1 } else { p + 1 };
    }
}

/// Replaces the stratified start nearest (in solution index) to `warm` by
/// `warm`; ties go to the earlier start.
pub fn inject_start(starts: &mut [ColumnIndices], warm: &ColumnIndices, spec: &CodebookSpec) -> Result<()> {
    let target = solution_index(warm, spec)?.0;
    let nearest = starts
        .iter()
        .enumerate()
        .min_by_key(|(i, q)| {
            (
                solution_index_unchecked(q.as_slice(), spec.bits()).0.abs_diff(target),
                *i,
            )
        })
        .map(|(i, _)| i);
    if let Some(i) = nearest {
        starts[i] = warm.clone();
    }
    Ok(())
}

/// Tabu search from each stratified start; keeps the best result.
pub fn ts_multistart<P: CostProbe + ?Sized>(probe: &mut P, params: &TsParams) -> Result<TsOutcome> {
    let starts = initial_solutions(probe.spec(), params.m_restarts)?;
    ts_multistart_from(probe, params, &starts)
}

/// Tabu search from each of `starts`, each with a fresh tabu list. Returns
/// the highest-cost result (ties to the smaller solution index) with
/// evaluation counts summed over restarts.
pub fn ts_multistart_from<P: CostProbe + ?Sized>(
    probe: &mut P,
    params: &TsParams,
    starts: &[ColumnIndices],
) -> Result<TsOutcome> {
    let mut best: Option<TsOutcome> = None;
    let (mut evals, mut start_evals, mut iterations) = (0, 0, 0);
    for start in starts {
        let r = ts_search(start, probe, params)?;
        evals += r.evals;
        start_evals += r.start_evals;
        iterations += r.iterations;
        let better = match &best {
            None => true,
            Some(b) => r.cost > b.cost || (r.cost == b.cost && r.index < b.index),
        };
        if better {
            best = Some(r);
        }
    }
    let mut best = best.ok_or_else(|| Error::InvalidParameter("no start solutions".into()))?;
    best.evals = evals;
    best.start_evals = start_evals;
    best.iterations = iterations;
    Ok(best)
}
