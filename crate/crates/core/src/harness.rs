//! Seeded Monte-Carlo experiments, parameter sweeps and CSV output.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{assemble_channel, draw_paths, ArrayGeometry, ChannelMatrix, SystemDims};
use crate::codebook::CodebookSpec;
use crate::error::{Error, Result};
use crate::metric::{rate, LinkBudget};
use crate::search_fs::{fs_complexity, full_search, DEFAULT_FS_CEILING};
use crate::search_ts::TsParams;
use crate::turbo::{turbo_search, TurboParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Fs,
    TurboTs,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Fs => "fs",
            Scheme::TurboTs => "turbo_ts",
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fs" => Ok(Scheme::Fs),
            "turbo_ts" | "turbo-ts" | "ts" => Ok(Scheme::TurboTs),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dims: SystemDims,
    pub geometry: ArrayGeometry,
    pub bits_t: u32,
    pub bits_r: u32,
    pub l_paths: usize,
    pub snr_db_list: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub schemes: Vec<Scheme>,
    pub turbo: TurboParams,
    pub fs_ceiling: u64,
    /// Worker threads; 0 lets the thread pool decide. Never affects results.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dims: SystemDims::new(64, 16, 2).expect("valid defaults"),
            geometry: ArrayGeometry::half_wavelength(),
            bits_t: 4,
            bits_r: 4,
            l_paths: 3,
            snr_db_list: vec![0.0],
            trials: 100,
            seed: 42,
            schemes: vec![Scheme::Fs, Scheme::TurboTs],
            turbo: TurboParams::preset(4).expect("preset exists"),
            fs_ceiling: DEFAULT_FS_CEILING,
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn codebooks(&self) -> Result<(CodebookSpec, CodebookSpec)> {
        Ok((
            CodebookSpec::new(self.dims.nt_rf, self.bits_t, self.dims.nt, self.geometry)?,
            CodebookSpec::new(self.dims.nr_rf, self.bits_r, self.dims.nr, self.geometry)?,
        ))
    }

    pub fn validate(&self) -> Result<()> {
        self.dims.validate()?;
        self.turbo.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.snr_db_list.is_empty() || self.snr_db_list.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR list must be nonempty and finite".into()));
        }
        if self.schemes.is_empty() {
            return Err(Error::Config("no scheme selected".into()));
        }
        if self.l_paths == 0 {
            return Err(Error::Config("path count must be at least 1".into()));
        }
        let (st, sr) = self.codebooks()?;
        if self.schemes.contains(&Scheme::Fs) {
            let required = fs_complexity(&st, &sr);
            if required > self.fs_ceiling {
                return Err(Error::BudgetExceeded {
                    required,
                    ceiling: self.fs_ceiling,
                });
            }
        }
        Ok(())
    }
}

/// One (trial, scheme, SNR) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub scheme: Scheme,
    pub snr_db: f64,
    pub nt: usize,
    pub nr: usize,
    pub nrf: usize,
    pub bits_t: u32,
    pub bits_r: u32,
    pub rate: f64,
    pub evals: u64,
    pub message_rounds: usize,
    pub seed_used: u64,
}

/// Seed of trial `trial_id`: a SplitMix64 mix of the master seed and the
/// trial number, so trials are independent of how many others run.
pub fn trial_seed(master: u64, trial_id: u64) -> u64 {
    let mut z = master ^ trial_id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Channel realization of one trial.
pub fn trial_channel(config: &ExperimentConfig, seed: u64) -> Result<ChannelMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let paths = draw_paths(config.l_paths, &mut rng)?;
    assemble_channel(&config.dims, &paths, config.geometry)
}

fn run_trial(config: &ExperimentConfig, trial_id: u64) -> Result<Vec<TrialRecord>> {
    let (st, sr) = config.codebooks()?;
    let seed = trial_seed(config.seed, trial_id);
    let h = trial_channel(config, seed)?;
    let mut out = Vec::with_capacity(config.schemes.len() * config.snr_db_list.len());
    for &snr_db in &config.snr_db_list {
        let budget = LinkBudget::from_snr_db(snr_db)?;
        for &scheme in &config.schemes {
            let (r, evals, rounds) = match scheme {
                Scheme::Fs => {
                    let fs = full_search(&h, &st, &sr, &budget, config.fs_ceiling)?;
                    (rate(fs.best_cost)?, fs.evals.get(), 0)
                }
                Scheme::TurboTs => {
                    let t = turbo_search(&h, &st, &sr, &budget, &config.turbo)?;
                    (t.rate, t.evals_total, t.message_rounds)
                }
            };
            out.push(TrialRecord {
                trial_id,
                scheme,
                snr_db,
                nt: config.dims.nt,
                nr: config.dims.nr,
                nrf: config.dims.ns,
                bits_t: config.bits_t,
                bits_r: config.bits_r,
                rate: r,
                evals,
                message_rounds: rounds,
                seed_used: seed,
            });
        }
    }
    Ok(out)
}

fn sort_records(records: &mut [TrialRecord]) {
    records.sort_by(|a, b| {
        (a.trial_id, a.scheme)
            .cmp(&(b.trial_id, b.scheme))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
}

/// Runs every trial, each on its own channel shared by all schemes and SNR
/// points. Records come back sorted by (trial, scheme, SNR).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let per_trial: Vec<Vec<TrialRecord>> = pool.install(|| {
        (0..config.trials as u64)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect::<Result<_>>()
    })?;
    let mut records: Vec<TrialRecord> = per_trial.into_iter().flatten().collect();
    sort_records(&mut records);
    Ok(records)
}

/// Mean rate of `scheme` at `snr_db`, or `None` when absent.
pub fn mean_rate(records: &[TrialRecord], scheme: Scheme, snr_db: f64) -> Option<f64> {
    let rates: Vec<f64> = records
        .iter()
        .filter(|r| r.scheme == scheme && r.snr_db == snr_db)
        .map(|r| r.rate)
        .collect();
    (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    MaxIter,
    MaxLen,
    Restarts,
    KIterations,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "max_iter" | "max-iter" => Ok(SweepAxis::MaxIter),
            "max_len" | "max-len" => Ok(SweepAxis::MaxLen),
            "m_restarts" | "restarts" | "m" => Ok(SweepAxis::Restarts),
            "k_iterations" | "k" => Ok(SweepAxis::KIterations),
            other => Err(Error::Config(format!("unknown sweep axis '{other}'"))),
        }
    }
}

impl SweepAxis {
    fn apply(self, turbo: &mut TurboParams, value: usize) {
        let set = |ts: &mut TsParams| match self {
            SweepAxis::MaxIter => ts.max_iter = value,
            SweepAxis::MaxLen => ts.max_len = value,
            SweepAxis::Restarts => ts.m_restarts = value,
            SweepAxis::KIterations => {}
        };
        set(&mut turbo.ts_tx);
        set(&mut turbo.ts_rx);
        if self == SweepAxis::KIterations {
            turbo.k_iterations = value;
        }
    }
}

/// Turbo-TS mean rate (first SNR point) for each value of `axis`.
pub fn parameter_sweep(config: &ExperimentConfig, axis: SweepAxis, values: &[usize]) -> Result<Vec<(usize, f64)>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let snr = *config
        .snr_db_list
        .first()
        .ok_or_else(|| Error::Config("SNR list must be nonempty".into()))?;
    values
        .iter()
        .map(|&v| {
            let mut c = config.clone();
            c.schemes = vec![Scheme::TurboTs];
            axis.apply(&mut c.turbo, v);
            let records = run_experiment(&c)?;
            let mean = mean_rate(&records, Scheme::TurboTs, snr).expect("turbo records present");
            Ok((v, mean))
        })
        .collect()
}

pub const CSV_HEADER: &str = "trial_id,scheme,snr_db,nt,nr,nrf,bits_t,bits_r,rate_bps_hz,evals,message_rounds,seed";

/// Formats `x` with six significant digits in plain decimal notation.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new digit (9.999995 -> 10.00000)
    let carried = s.trim_start_matches('-').split('.').next().map_or(0, str::len) as i32 > magnitude.max(0) + 1;
    if carried && decimals > 0 {
        format!("{x:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

/// CSV text: header plus one row per record, in record order.
pub fn emit_csv(records: &[TrialRecord]) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyOutput);
    }
    let mut sorted = records.to_vec();
    sort_records(&mut sorted);
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &sorted {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.trial_id,
            r.scheme.as_str(),
            r.snr_db,
            r.nt,
            r.nr,
            r.nrf,
            r.bits_t,
            r.bits_r,
            format_sig6(r.rate),
            r.evals,
            r.message_rounds,
            r.seed_used
        )
        .expect("writing to a String cannot fail");
    }
    Ok(out)
}

/// Parses `-20:2:10` (inclusive range) or `0,5,10`.
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad SNR list '{s}'"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop): (f64, f64, f64) = (
                start.trim().parse().map_err(|_| bad())?,
                step.trim().parse().map_err(|_| bad())?,
                stop.trim().parse().map_err(|_| bad())?,
            );
            if step.is_nan() || step <= 0.0 || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| start + i as f64 * step).collect())
        }
        [_] => s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
            .collect(),
        _ => Err(bad()),
    }
}

pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<T>()
                .map_err(|_| Error::Config(format!("bad {what} '{}'", v.trim())))
        })
        .collect()
}

/// Applies one `key=value` setting. Keys follow the config field names;
/// `nrf` sets both RF-chain counts and the stream count, and the TS keys
/// both sides. `bits` sets both codebooks and, for 4, 5 or 6 bits, loads the
/// tuned search settings, so search keys given before it are replaced.
pub fn apply_setting(config: &mut ExperimentConfig, key: &str, value: &str) -> Result<()> {
    fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
        v.trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
    }
    let v = value.trim();
    match key.trim() {
        "nt" => config.dims.nt = num(key, v)?,
        "nr" => config.dims.nr = num(key, v)?,
        "nrf" | "ns" | "nt_rf" | "nr_rf" => {
            let n: usize = num(key, v)?;
            config.dims.nt_rf = n;
            config.dims.nr_rf = n;
            config.dims.ns = n;
        }
        "bits" => {
            config.bits_t = num(key, v)?;
            config.bits_r = config.bits_t;
            if let Some(p) = TurboParams::preset(config.bits_t) {
                config.turbo = TurboParams {
                    warm_start: config.turbo.warm_start,
                    ..p
                };
            }
        }
        "bits_t" => config.bits_t = num(key, v)?,
        "bits_r" => config.bits_r = num(key, v)?,
        "l_paths" => config.l_paths = num(key, v)?,
        "snr_db_list" | "snr" => config.snr_db_list = parse_snr_list(v)?,
        "trials" => config.trials = num(key, v)?,
        "seed" => config.seed = num(key, v)?,
        "schemes" | "scheme" => config.schemes = parse_list(v, "scheme")?,
        "k_iterations" | "k" => config.turbo.k_iterations = num(key, v)?,
        "max_iter" => {
            config.turbo.ts_tx.max_iter = num(key, v)?;
            config.turbo.ts_rx.max_iter = config.turbo.ts_tx.max_iter;
        }
        "max_len" => {
            config.turbo.ts_tx.max_len = num(key, v)?;
            config.turbo.ts_rx.max_len = config.turbo.ts_tx.max_len;
        }
        "m_restarts" | "restarts" => {
            config.turbo.ts_tx.m_restarts = num(key, v)?;
            config.turbo.ts_rx.m_restarts = config.turbo.ts_tx.m_restarts;
        }
        "warm_start" => config.turbo.warm_start = num(key, v)?,
        "fs_ceiling" => config.fs_ceiling = num(key, v)?,
        "workers" => config.workers = num(key, v)?,
        "spacing_over_wavelength" => config.geometry = ArrayGeometry::new(num(key, v)?)?,
        other => return Err(Error::Config(format!("unknown key '{other}'"))),
    }
    Ok(())
}

/// Parses flat `key=value` text, one setting per line, `#` comments.
pub fn parse_config_text(text: &str, config: &mut ExperimentConfig) -> Result<()> {
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
        apply_setting(config, key, value).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
    }
    Ok(())
}
