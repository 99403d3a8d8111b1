#![allow(dead_code)]

use std::collections::HashSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use beamform::channel::{assemble_channel, draw_paths, ula_response, ArrayGeometry, ChannelMatrix, SystemDims};
use beamform::codebook::{
    materialize, neighbors, solution_index, CodebookSpec, ColumnIndices, Neighbor, SolutionIndex,
};
use beamform::linalg::CMatrix;
use beamform::metric::{cost, effective_channel, rate, update_column, update_row, EvalCounter, LinkBudget};
use beamform::probe::CostProbe;
use beamform::search_ts::{ts_search, ts_step, Admission, TabuState, TsParams};
use beamform::Result;

/// Probe over an explicit cost table indexed by solution index.
pub struct TableProbe {
    spec: CodebookSpec,
    table: Vec<f64>,
    current: Option<ColumnIndices>,
    counter: EvalCounter,
}

impl TableProbe {
    pub fn new(spec: CodebookSpec, table: Vec<f64>) -> Self {
        assert_eq!(table.len() as u64, spec.solution_count());
        Self {
            spec,
            table,
            current: None,
            counter: EvalCounter::new(),
        }
    }

    pub fn cost_of(&self, q: &ColumnIndices) -> f64 {
        self.table[solution_index(q, &self.spec).unwrap().slot()]
    }
}

impl CostProbe for TableProbe {
    fn spec(&self) -> &CodebookSpec {
        &self.spec
    }

    fn set_current(&mut self, solution: &ColumnIndices) -> Result<()> {
        self.spec.check(solution)?;
        self.current = Some(solution.clone());
        Ok(())
    }

    fn current_cost(&mut self) -> Result<f64> {
        self.counter.tick();
        Ok(self.cost_of(self.current.as_ref().expect("anchored")))
    }

    fn neighbor_cost(&mut self, neighbor: &Neighbor) -> Result<f64> {
        self.counter.tick();
        Ok(self.cost_of(&neighbor.indices))
    }

    fn evals(&self) -> EvalCounter {
        self.counter
    }
}

pub fn spec(n_rf: usize, bits: u32, n: usize) -> CodebookSpec {
    CodebookSpec::new(n_rf, bits, n, ArrayGeometry::default()).unwrap()
}

pub fn random_channel(nt: usize, nr: usize, seed: u64) -> ChannelMatrix {
    let dims = SystemDims::new(nt, nr, 1).unwrap();
    let paths = draw_paths(3, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
    assemble_channel(&dims, &paths, ArrayGeometry::default()).unwrap()
}

fn random_valid(spec: &CodebookSpec, rng: &mut impl Rng) -> ColumnIndices {
    loop {
        let q: Vec<u32> = (0..spec.n_rf()).map(|_| rng.random_range(1..=spec.angles())).collect();
        let q = ColumnIndices::new(q);
        if q.is_valid() {
            return q;
        }
    }
}

/// Checks the tabu-search step invariants on `runs` random cost tables and
/// search settings. Costs are drawn from a small set so ties are common.
pub fn check_ts_mechanics(runs: usize, seed: u64) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shapes = [(1, 2), (1, 3), (1, 4), (2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (4, 3)];
    for run in 0..runs {
        let (n_rf, bits) = shapes[rng.random_range(0..shapes.len())];
        let sp = spec(n_rf, bits, 8);
        let levels = rng.random_range(2..=40);
        let table: Vec<f64> = (0..sp.solution_count())
            .map(|_| 1.0 + rng.random_range(0..levels) as f64)
            .collect();
        let params = TsParams::new(rng.random_range(1..=80), rng.random_range(1..=25), 1).unwrap();
        let start = random_valid(&sp, &mut rng);
        let ctx = |msg: String| format!("run {run} ({n_rf} chains, {bits} bits, {params:?}): {msg}");

        let mut probe = TableProbe::new(sp, table.clone());
        let start_cost = probe.cost_of(&start);
        let mut state = TabuState::new(sp, start.clone(), start_cost).unwrap();
        let mut best = start_cost;
        let mut stagnant = 0;
        while state.iterations() < params.max_iter && state.flag() < params.max_len {
            let current = state.current().clone();
            let hood = neighbors(&current, &sp).unwrap();
            let bits_before: Vec<bool> = hood
                .iter()
                .map(|v| state.is_tabu(solution_index(&v.indices, &sp).unwrap()))
                .collect();
            let costs: Vec<f64> = hood.iter().map(|v| probe.cost_of(&v.indices)).collect();
            let evals_before = state.neighborhood_evals();

            let r = ts_step(&mut state, &mut probe).unwrap();

            if r.evaluated != hood.len() || state.neighborhood_evals() - evals_before != hood.len() as u64 {
                return Err(ctx("evaluation count differs from neighborhood size".into()));
            }
            let pos = hood
                .iter()
                .position(|v| v.indices == r.selected)
                .ok_or_else(|| ctx("selected a non-neighbor".into()))?;
            let aspirational = costs[pos] > best;
            let none_admissible = costs.iter().zip(&bits_before).all(|(&c, &t)| t && c <= best);
            if bits_before[pos] && !aspirational && !none_admissible {
                return Err(ctx(format!(
                    "tabu solution {} re-selected without aspiration or reset",
                    r.selected
                )));
            }
            if none_admissible && r.admission != Admission::AfterReset {
                return Err(ctx("reset not reported".into()));
            }
            // the chosen neighbor is the best-ranked admissible one
            let admissible = |i: usize| none_admissible || costs[i] > best || !bits_before[i];
            let top = (0..hood.len())
                .filter(|&i| admissible(i))
                .max_by(|&a, &b| {
                    costs[a].total_cmp(&costs[b]).then_with(|| {
                        let pa = solution_index(&hood[a].indices, &sp).unwrap();
                        let pb = solution_index(&hood[b].indices, &sp).unwrap();
                        pb.cmp(&pa)
                    })
                })
                .unwrap();
            if top != pos {
                return Err(ctx("did not take the best admissible neighbor".into()));
            }

            let prev_best = best;
            if costs[pos] > best {
                best = costs[pos];
                stagnant = 0;
            } else {
                stagnant += 1;
            }
            if state.best().1 < prev_best {
                return Err(ctx("best cost decreased".into()));
            }
            if state.best().1 != best {
                return Err(ctx("best cost is not the running maximum".into()));
            }
            if state.flag() != stagnant {
                return Err(ctx(format!("flag {} but {} stagnant steps", state.flag(), stagnant)));
            }
            if r.improved == state.is_tabu(r.index) {
                return Err(ctx("tabu bit of the selection not updated".into()));
            }
        }
        if state.neighborhood_evals() > params.eval_bound(n_rf) {
            return Err(ctx("evaluation bound exceeded".into()));
        }
        if state.iterations() != params.max_iter && state.flag() != params.max_len {
            return Err(ctx("stopped without meeting a stopping rule".into()));
        }
        for p in 1..=sp.solution_count() {
            let q = beamform::codebook::index_to_columns(SolutionIndex(p), &sp);
            if !q.is_valid() && !state.is_tabu(SolutionIndex(p)) {
                return Err(ctx(format!("invalid solution {q} lost its tabu bit")));
            }
        }

        // the packaged search agrees with the stepped one
        let mut probe = TableProbe::new(sp, table);
        let out = ts_search(&start, &mut probe, &params).unwrap();
        if out.cost != state.best().1 || &out.solution != state.best().0 {
            return Err(ctx("ts_search disagrees with stepping".into()));
        }
        if out.evals > params.eval_bound(n_rf) || out.start_evals != 1 {
            return Err(ctx("ts_search evaluation accounting".into()));
        }
        if probe.evals().get() != out.evals + out.start_evals {
            return Err(ctx("probe and search counters disagree".into()));
        }
    }
    Ok(())
}

/// Cost table with a four-solution loop next to the start, laid out so that
/// forbidding only the reverse of the last move walks the loop forever.
pub struct LoopFixture {
    pub spec: CodebookSpec,
    pub table: Vec<f64>,
    pub start: ColumnIndices,
    /// The loop, in the order a greedy walk meets it.
    pub ring: [ColumnIndices; 4],
}

pub fn loop_fixture() -> LoopFixture {
    let sp = spec(2, 3, 8);
    let q = |a, b| ColumnIndices::new(vec![a, b]);
    let start = q(2, 6);
    let ring = [q(3, 6), q(4, 6), q(4, 7), q(3, 7)];
    let mut table: Vec<f64> = (1..=sp.solution_count()).map(|p| 0.001 * p as f64).collect();
    for (sol, c) in [
        (&start, 5.0),
        (&ring[0], 4.0),
        (&ring[1], 6.0),
        (&ring[2], 5.5),
        (&ring[3], 5.2),
    ] {
        table[solution_index(sol, &sp).unwrap().slot()] = c;
    }
    LoopFixture {
        spec: sp,
        table,
        start,
        ring,
    }
}

/// Conventional move tabu: a move is (column, direction), and the reverse of
/// the latest move is forbidden unless it beats the best so far. Returns the
/// visited solutions, start included.
pub fn move_tabu_walk(fx: &LoopFixture, steps: usize) -> Vec<ColumnIndices> {
    let probe = TableProbe::new(fx.spec, fx.table.clone());
    let mut current = fx.start.clone();
    let mut best = probe.cost_of(&current);
    let mut forbidden: Option<(usize, bool)> = None;
    let mut path = vec![current.clone()];
    for _ in 0..steps {
        let mut ranked: Vec<(f64, Neighbor)> = neighbors(&current, &fx.spec)
            .unwrap()
            .into_iter()
            .map(|v| (probe.cost_of(&v.indices), v))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        let is_up = |v: &Neighbor| v.slot.is_multiple_of(2);
        let pick = ranked
            .iter()
            .find(|(c, v)| *c > best || forbidden != Some((v.column, is_up(v))))
            .unwrap_or(&ranked[0]);
        let (c, v) = pick.clone();
        best = best.max(c);
        forbidden = Some((v.column, !is_up(&v)));
        current = v.indices;
        path.push(current.clone());
    }
    path
}

/// Solution-tabu walk over the same table, with the step reports.
pub fn solution_tabu_walk(fx: &LoopFixture, steps: usize) -> Vec<(ColumnIndices, Admission, bool)> {
    let mut probe = TableProbe::new(fx.spec, fx.table.clone());
    let mut state = TabuState::new(fx.spec, fx.start.clone(), probe.cost_of(&fx.start)).unwrap();
    (0..steps)
        .map(|_| {
            let r = ts_step(&mut state, &mut probe).unwrap();
            (r.selected, r.admission, r.improved)
        })
        .collect()
}

/// Outcome of the loop fixture under both tabu kinds.
pub struct LoopReport {
    /// Times move tabu re-entered a solution it had left by a non-improving step.
    pub move_repeats: usize,
    pub move_distinct: usize,
    /// Same count for solution tabu, before its first neighborhood reset.
    pub solution_repeats: usize,
    pub solution_distinct: usize,
}

pub fn run_loop_fixture(steps: usize) -> LoopReport {
    let fx = loop_fixture();
    let table = TableProbe::new(fx.spec, fx.table.clone());

    let path = move_tabu_walk(&fx, steps);
    let mut best = table.cost_of(&path[0]);
    let mut left_worse: HashSet<ColumnIndices> = HashSet::new();
    let mut move_repeats = 0;
    for sol in &path[1..] {
        let c = table.cost_of(sol);
        if left_worse.contains(sol) && c <= best {
            move_repeats += 1;
        }
        if c <= best {
            left_worse.insert(sol.clone());
        }
        best = best.max(c);
    }
    let move_distinct = path.iter().collect::<HashSet<_>>().len();

    let walk = solution_tabu_walk(&fx, steps);
    let mut left_worse: HashSet<ColumnIndices> = HashSet::new();
    let mut solution_repeats = 0;
    for (sol, admission, improved) in &walk {
        if *admission == Admission::AfterReset {
            break;
        }
        if left_worse.contains(sol) && !improved {
            solution_repeats += 1;
        }
        if !improved {
            left_worse.insert(sol.clone());
        }
    }
    let mut visited: HashSet<&ColumnIndices> = walk.iter().map(|(s, _, _)| s).collect();
    visited.insert(&fx.start);
    LoopReport {
        move_repeats,
        move_distinct,
        solution_repeats,
        solution_distinct: visited.len(),
    }
}

fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn rel_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    let scale = a.as_slice().iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    a.max_abs_diff(b) / scale
}

/// Incremental effective-channel updates against full recomputation, cost
/// range and SNR monotonicity, and unit-norm steering vectors, each on
/// `instances` random draws.
pub fn check_numerical_core(instances: usize, seed: u64) -> std::result::Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = ArrayGeometry::default();
    for i in 0..instances {
        let nt = rng.random_range(2..=64);
        let nr = rng.random_range(2..=32);
        let n_rf = rng.random_range(1..=nr.min(nt).min(4));
        let h = random_channel(nt, nr, rng.random());
        let p = random_matrix(nt, n_rf, &mut rng);
        let c = random_matrix(nr, n_rf, &mut rng);
        let eff = effective_channel(&h, &p, &c).unwrap();
        let pos = rng.random_range(0..n_rf);

        let v = ula_response(nt, rng.random_range(0.0..std::f64::consts::TAU), g).unwrap();
        let updated = update_column(&eff, &h, &c, &v, pos).unwrap();
        let mut p2 = p.clone();
        p2.column_mut(pos).copy_from_slice(&v);
        let full = effective_channel(&h, &p2, &c).unwrap();
        if rel_diff(full.matrix(), updated.matrix()) > 1e-10 {
            return Err(format!("instance {i}: column update differs from recomputation"));
        }

        let w = ula_response(nr, rng.random_range(0.0..std::f64::consts::TAU), g).unwrap();
        let updated = update_row(&eff, &h, &p, &w, pos).unwrap();
        let mut c2 = c.clone();
        c2.column_mut(pos).copy_from_slice(&w);
        let full = effective_channel(&h, &p, &c2).unwrap();
        if rel_diff(full.matrix(), updated.matrix()) > 1e-10 {
            return Err(format!("instance {i}: row update differs from recomputation"));
        }

        for (n, s) in [(nt, &v), (nr, &w)] {
            let norm: f64 = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-12 || s.len() != n {
                return Err(format!("instance {i}: steering vector norm {norm}"));
            }
        }

        // codebook pair at increasing SNR
        let bits = rng.random_range(2..=5);
        let (st, sr) = (spec(n_rf, bits, nt), spec(n_rf, bits, nr));
        if n_rf > st.angles() as usize {
            continue;
        }
        let pq = random_valid(&st, &mut rng);
        let cq = random_valid(&sr, &mut rng);
        let pm = materialize(&pq, &st).unwrap();
        let cm = materialize(&cq, &sr).unwrap();
        let eff = effective_channel(&h, &pm, &cm).unwrap();
        let mut last = f64::NEG_INFINITY;
        for snr in [-20.0, -10.0, -3.0, 0.0, 5.0, 10.0, 20.0] {
            let budget = LinkBudget::from_snr_db(snr).unwrap();
            let value = cost(&eff, &cm, &budget, n_rf, &mut EvalCounter::new()).unwrap();
            if value.is_nan() || value < 1.0 {
                return Err(format!("instance {i}: cost {value} below 1 at {snr} dB"));
            }
            let r = rate(value).unwrap();
            if r < last - 1e-12 {
                return Err(format!("instance {i}: rate fell from {last} to {r} at {snr} dB"));
            }
            last = r;
        }
    }
    Ok(())
}
