use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use iacomp_core::beamforming::Scheme;
use iacomp_core::codec::golden::{self, GoldenRecord};
use iacomp_core::codec::{decompress_v, encode_report, CodecParams, CsiReport};
use iacomp_core::harness::{self, ExperimentSpec, Quantization};
use iacomp_core::linalg::CMat;
use iacomp_core::scenario::{generate_channels_with, Preset, PresetParams, ScenarioConfig};
use iacomp_core::{Error, Result};

#[derive(Parser)]
#[command(name = "iacomp", version, about = "IA / CoMP link-level simulator with compressed CSI feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a full sweep and write results.csv and summary.json.
    Run {
        /// Experiment spec (JSON). Defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        drops: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// on, off or both.
        #[arg(long)]
        quantization: Option<Quantization>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check the golden vectors and fuzz pack/unpack.
    CodecSelftest {
        #[arg(long, default_value_t = 10_000)]
        roundtrips: usize,
    },
    /// Codec utilities.
    Codec {
        #[command(subcommand)]
        action: CodecAction,
    },
    /// Dump per-iteration max-SINR leakage and SINR as CSV.
    Convergence {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        drop: usize,
        #[arg(long, default_value = "ia")]
        scheme: Scheme,
        #[arg(long, default_value_t = 0)]
        subcarrier: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List scenario presets and their C/I statistics.
    Presets,
}

#[derive(Subcommand)]
enum CodecAction {
    /// Encode a random channel and print `<hex> <params>`.
    Encode {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        ng: usize,
        #[arg(long)]
        ia: bool,
    },
    /// Decode a hex report and print V̂ per reported subcarrier.
    Decode {
        hex: String,
        /// Parameter tuple `(m,n,b_psi,b_phi,n_g,n_sc,ia)`.
        params: String,
    },
    /// Same as `codec-selftest`.
    Selftest {
        #[arg(long, default_value_t = 10_000)]
        roundtrips: usize,
    },
    /// Regenerate the golden vector file.
    Golden {
        #[arg(long)]
        out: PathBuf,
    },
}

fn io_err(path: &std::path::Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn load_spec(config: Option<&PathBuf>) -> Result<ExperimentSpec> {
    match config {
        Some(p) => ExperimentSpec::from_json_file(p),
        None => Ok(ExperimentSpec::default()),
    }
}

fn run(
    config: Option<PathBuf>,
    seed: Option<u64>,
    drops: Option<usize>,
    out: Option<PathBuf>,
    quantization: Option<Quantization>,
    workers: Option<usize>,
) -> Result<()> {
    let mut spec = load_spec(config.as_ref())?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(d) = drops {
        spec.n_drops = d;
    }
    if let Some(q) = quantization {
        spec.quantization = q;
    }
    if let Some(w) = workers {
        spec.workers = w;
    }
    if out.is_some() {
        spec.output = out;
    }
    let dir = spec.output_dir();
    let result = harness::run_and_write(&spec, &dir)?;
    println!("{:<10} {:>4} {:>5} {:>8} {:>9} {:>8} {:>9}", "scheme", "ng", "quant", "rms_ns", "mean", "stderr", "vs_tdma");
    for c in &result.summary.cells {
        let gain = c.gain_vs_tdma.map_or_else(|| "-".to_string(), |g| format!("{:+.1}%", 100.0 * g));
        println!(
            "{:<10} {:>4} {:>5} {:>8} {:>9.3} {:>8.3} {:>9}",
            c.scheme.name(),
            c.n_g,
            c.quantized as u8,
            c.rms_ds_ns,
            c.mean,
            c.stderr,
            gain
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

fn selftest(roundtrips: usize) -> Result<()> {
    let s = golden::selftest(roundtrips, 0x5e1f)?;
    println!("codec selftest passed: {} golden records, {} round trips", s.golden_records, s.roundtrips);
    Ok(())
}

fn codec(action: CodecAction) -> Result<()> {
    match action {
        CodecAction::Encode { seed, ng, ia } => {
            let params = CodecParams { n_g: ng, ia_block_reduction: ia, ..CodecParams::default() };
            let cfg = ScenarioConfig::default();
            let ch = generate_channels_with(&cfg, &mut ChaCha8Rng::seed_from_u64(seed));
            let big: Vec<CMat> = (0..cfg.n_sc).map(|s| ch.big_h(0, s)).collect();
            let report = encode_report(&big, cfg.sigma_nominal_sq.sqrt(), params)?;
            println!("{} {}", hex::encode(&report.packed), golden::format_params(&params));
        }
        CodecAction::Decode { hex, params } => {
            let params = golden::parse_params(&params)?;
            let bytes = hex::decode(hex.trim()).map_err(|e| Error::Config(format!("hex: {e}")))?;
            let report = CsiReport::unpack(&bytes, params)?;
            println!("avg_idx {:?}", report.snr.avg_idx);
            for (sc, entry) in report.v_indices().iter().zip(&report.angles) {
                let v = decompress_v(entry, &params)?;
                let cells: Vec<String> = v.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
                println!("sc {sc}: phi {:?} psi {:?} vhat(col-major) [{}]", entry.phi, entry.psi, cells.join(", "));
            }
        }
        CodecAction::Selftest { roundtrips } => selftest(roundtrips)?,
        CodecAction::Golden { out } => {
            let records = golden::generate_records()?;
            for r in &records {
                r.verify()?;
                GoldenRecord::parse_line(&r.to_line())?;
            }
            std::fs::write(&out, golden::render_file(&records)).map_err(io_err(&out))?;
            println!("wrote {} records to {}", records.len(), out.display());
        }
    }
    Ok(())
}

fn convergence(
    config: Option<PathBuf>,
    seed: u64,
    drop: usize,
    scheme: Scheme,
    subcarrier: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let mut spec = load_spec(config.as_ref())?;
    spec.seed = seed;
    let trace = harness::convergence_trace(&spec, drop, scheme, subcarrier)?;
    let mut text = String::from("iteration,leakage,sum_rate");
    for i in 0..trace.sinr.len() {
        text.push_str(&format!(",sinr_{i}"));
    }
    text.push('\n');
    for rec in &trace.trace {
        let rate: f64 = rec.sinr.iter().map(|s| (1.0 + s).log2()).sum();
        text.push_str(&format!("{},{},{}", rec.iteration, rec.leakage, rate));
        for s in &rec.sinr {
            text.push_str(&format!(",{s}"));
        }
        text.push('\n');
    }
    match out {
        Some(p) => std::fs::write(&p, text).map_err(io_err(&p))?,
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io_err(std::path::Path::new("<stdout>")))?,
    }
    eprintln!("{} iterations, converged: {}", trace.iterations, trace.converged);
    Ok(())
}

fn presets() {
    let p = PresetParams::default();
    println!("los    C/I_min ~ U{:?} dB, C/I_max = C/I_min + U{:?} dB, mean {:.2} dB", p.los_ci_min_db, p.los_ci_spread_db, p.mean_ci_db(Preset::Los));
    println!("nlos   both C/I ~ U{:?} dB, mean {:.2} dB", p.nlos_ci_db, p.mean_ci_db(Preset::Nlos));
    println!("mixed  los or nlos with equal probability per drop, mean {:.2} dB", p.mean_ci_db(Preset::Mixed));
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Run { config, seed, drops, out, quantization, workers } => {
            run(config, seed, drops, out, quantization, workers)
        }
        Command::CodecSelftest { roundtrips } => selftest(roundtrips),
        Command::Codec { action } => codec(action),
        Command::Convergence { config, seed, drop, scheme, subcarrier, out } => {
            convergence(config, seed, drop, scheme, subcarrier, out)
        }
        Command::Presets => {
            presets();
            Ok(())
        }
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
