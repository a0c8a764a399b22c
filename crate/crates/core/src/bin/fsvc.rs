use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fsvc::io::PipelineConfig;
use fsvc::pipeline::{self, ExtractOutputs, TrainSynthOptions};

#[derive(Parser)]
#[command(name = "fsvc", version, about = "PPG-based voice conversion")]
struct Cli {
    /// Pipeline config (flat TOML); defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed (training order, initialization, vocoder noise).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a wav into feature files.
    Extract {
        wav: PathBuf,
        #[arg(long)]
        mfcc: Option<PathBuf>,
        #[arg(long)]
        ppg: Option<PathBuf>,
        #[arg(long)]
        prosody: Option<PathBuf>,
        #[arg(long)]
        feat: Option<PathBuf>,
        /// Extractor model, required for --ppg.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Train the PPG extractor on x.wav/x.lab pairs.
    TrainPpg {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a target-speaker synthesizer and write its profile.
    TrainSynth {
        corpus: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        init_from: Option<PathBuf>,
        #[arg(long)]
        extractor: Option<PathBuf>,
        #[arg(long)]
        speaker: Option<String>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Convert a source utterance into the profile's voice.
    Convert {
        source: PathBuf,
        #[arg(long)]
        profile: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Speech rate; above 1 is faster. Defaults to the config value.
        #[arg(long)]
        rate: Option<f64>,
    },
    /// Synthesize a wav from a 20-dim feature file.
    Vocode {
        feat: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Time parallel generation against autoregressive emulation.
    Bench {
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "64,128,256,512")]
        lengths: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> fsvc::Result<()> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    match cli.command {
        Command::Extract { wav, mfcc, ppg, prosody, feat, model } => {
            let outputs = ExtractOutputs { mfcc, ppg, prosody, feat };
            let a = pipeline::cmd_extract(&wav, &outputs, model.as_deref(), &config)?;
            println!("extracted {} frames from {}", a.grid.n_frames, wav.display());
        }
        Command::TrainPpg { corpus, out } => {
            let p = pipeline::cmd_train_ppg(&corpus, &out, &config)?;
            println!(
                "trained extractor: {} epochs, final loss {:.6}",
                p.epochs,
                p.final_loss().unwrap_or(f64::NAN)
            );
        }
        Command::TrainSynth { corpus, profile, init_from, extractor, speaker, epochs } => {
            if let Some(e) = epochs {
                config.synth_epochs = e;
            }
            let options = TrainSynthOptions { speaker_id: speaker, init_from, extractor };
            let r = pipeline::cmd_train_synth(&corpus, &profile, &config, &options)?;
            println!(
                "wrote {} ({} utterances, {} skipped, final loss {:.6})",
                profile.display(),
                r.profile.utterances,
                r.skipped.len(),
                r.synthesizer.final_loss().unwrap_or(f64::NAN)
            );
        }
        Command::Convert { source, profile, out, rate } => {
            let rate = rate.unwrap_or(config.rate);
            let c = pipeline::cmd_convert(&source, &profile, rate, &out, config.seed)?;
            println!(
                "wrote {} ({} frames, {} samples)",
                out.display(),
                c.features.len(),
                c.synthesis.signal.len()
            );
        }
        Command::Vocode { feat, out } => {
            let s = pipeline::cmd_vocode(&feat, &out, config.seed)?;
            println!("wrote {} ({} samples)", out.display(), s.signal.len());
        }
        Command::Bench { profile, lengths, repeats, out } => {
            let csv = pipeline::cmd_bench(&profile, &lengths, repeats)?.to_csv();
            match out {
                Some(path) => std::fs::write(&path, csv).map_err(|e| fsvc::Error::Io { path, source: e })?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid usage");
            eprintln!("error[usage]: {}", first.trim_start_matches("error: "));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.code(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
