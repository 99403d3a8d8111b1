use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beamform::channel::{ArrayGeometry, SystemDims};
use beamform::codebook::CodebookSpec;
use beamform::harness::{
    apply_setting, emit_csv, mean_rate, parameter_sweep, parse_config_text, parse_list, run_experiment,
    ExperimentConfig, SweepAxis,
};
use beamform::search_fs::fs_complexity;
use beamform::turbo::{ts_complexity, TurboParams};
use beamform::{Error, Result};

#[derive(Parser)]
#[command(
    name = "beamform",
    version,
    about = "Codebook beamforming search and Monte-Carlo rate simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials and write one CSV row per (trial, scheme, SNR).
    Run {
        #[command(flatten)]
        setup: Setup,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean turbo-TS rate while varying one search parameter.
    Sweep {
        #[command(flatten)]
        setup: Setup,
        /// max_iter, max_len, m_restarts or k.
        #[arg(long)]
        axis: String,
        /// Comma-separated values, e.g. 1,2,3,4,5,6.
        #[arg(long)]
        values: String,
    },
    /// Full-search pair count, turbo-TS budget and their ratio.
    Complexity {
        #[arg(long, default_value = "4,5,6")]
        bits: String,
        #[arg(long, default_value_t = 2)]
        nrf: usize,
        #[arg(long, default_value_t = 64)]
        nt: usize,
        #[arg(long, default_value_t = 16)]
        nr: usize,
    },
}

/// Experiment settings. A config file is read first; flags override it.
#[derive(Args)]
struct Setup {
    /// key=value file; keys mirror the config field names.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    nt: Option<usize>,
    #[arg(long)]
    nr: Option<usize>,
    #[arg(long)]
    nrf: Option<usize>,
    /// Bits on both sides; also selects the tuned search settings for 4, 5 or 6 bits.
    #[arg(long)]
    bits: Option<u32>,
    /// `start:step:stop` or a comma list, in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma list of fs, turbo_ts.
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    max_len: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Restart every round from the stratified starts only.
    #[arg(long)]
    cold: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    fs_ceiling: Option<u64>,
}

impl Setup {
    fn build(&self) -> Result<ExperimentConfig> {
        let mut config = ExperimentConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            parse_config_text(&text, &mut config)?;
        }
        let overrides: [(&str, Option<String>); 14] = [
            ("nt", self.nt.map(|v| v.to_string())),
            ("nr", self.nr.map(|v| v.to_string())),
            ("nrf", self.nrf.map(|v| v.to_string())),
            ("bits", self.bits.map(|v| v.to_string())),
            ("snr_db_list", self.snr.clone()),
            ("trials", self.trials.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
            ("schemes", self.scheme.clone()),
            ("max_iter", self.max_iter.map(|v| v.to_string())),
            ("max_len", self.max_len.map(|v| v.to_string())),
            ("m_restarts", self.restarts.map(|v| v.to_string())),
            ("k_iterations", self.k.map(|v| v.to_string())),
            ("workers", self.workers.map(|v| v.to_string())),
            ("fs_ceiling", self.fs_ceiling.map(|v| v.to_string())),
        ];
        for (key, value) in overrides {
            if let Some(v) = value {
                apply_setting(&mut config, key, &v)?;
            }
        }
        if self.cold {
            config.turbo.warm_start = false;
        }
        config.validate()?;
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { setup, out } => {
            let config = setup.build()?;
            let records = run_experiment(&config)?;
            let csv = emit_csv(&records)?;
            match out {
                Some(path) => fs::write(&path, csv).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?,
                None => print!("{csv}"),
            }
            for &scheme in &config.schemes {
                for &snr in &config.snr_db_list {
                    if let Some(m) = mean_rate(&records, scheme, snr) {
                        eprintln!("{:>8} {:>6} dB  mean rate {:.4} bit/s/Hz", scheme.as_str(), snr, m);
                    }
                }
            }
        }
        Command::Sweep { setup, axis, values } => {
            let config = setup.build()?;
            let axis: SweepAxis = axis.parse()?;
            let values: Vec<usize> = parse_list(&values, "sweep value")?;
            println!("value,mean_rate_bps_hz");
            for (v, m) in parameter_sweep(&config, axis, &values)? {
                println!("{v},{m:.6}");
            }
        }
        Command::Complexity { bits, nrf, nt, nr } => {
            let dims = SystemDims::new(nt, nr, nrf)?;
            let geometry = ArrayGeometry::default();
            println!("bits,fs_evaluations,ts_budget,ratio_percent");
            for b in parse_list::<u32>(&bits, "bits")? {
                let params = TurboParams::preset(b)
                    .ok_or_else(|| Error::Config(format!("no tuned search settings for {b} bits")))?;
                let st = CodebookSpec::new(dims.nt_rf, b, dims.nt, geometry)?;
                let sr = CodebookSpec::new(dims.nr_rf, b, dims.nr, geometry)?;
                let fs = fs_complexity(&st, &sr);
                let ts = ts_complexity(&params, &st, &sr);
                println!("{b},{fs},{ts},{:.2}", 100.0 * ts as f64 / fs as f64);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("beamform: error: {e}");
            ExitCode::FAILURE
        }
    }
}
