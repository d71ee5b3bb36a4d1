//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 runtime failure
//! (generation error, failed verification or failed self-test).

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, SimulationConfig};
use crate::dataset::{generate_dataset, MANIFEST_FILE};
use crate::error::{ConfigError, DatasetError, VerifyError};
use crate::gof::{selftest, DEFAULT_SAMPLES, DEFAULT_SELFTEST_SEED, DEFAULT_SIGNIFICANCE};
use crate::verify::verify_dataset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

/// Output directory used when neither `--out` nor the config names one.
pub const DEFAULT_OUTPUT_DIR: &str = "sporegen-out";

#[derive(Debug, Parser)]
#[command(
    name = "sporegen",
    version,
    about = "Synthetic time-aligned fungal growth image datasets"
)]
pub struct Cli {
    /// Increase verbosity (-v prints the resolved config to stderr).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the simulation and write frame_%05d.png images plus manifest.json.
    Generate(GenerateArgs),
    /// Re-check a generated dataset against its manifest.
    Verify {
        /// Path to manifest.json.
        #[arg(long)]
        manifest: PathBuf,
    },
    /// Run goodness-of-fit tests on every sampling law.
    Selftest {
        /// Master seed for the test streams.
        #[arg(long, default_value_t = DEFAULT_SELFTEST_SEED)]
        seed: u64,
        /// Samples drawn per law.
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        /// Significance level of each test.
        #[arg(long, default_value_t = DEFAULT_SIGNIFICANCE)]
        alpha: f64,
    },
}

#[derive(Debug, Args, Default, Clone)]
pub struct GenerateArgs {
    /// JSON config file; omitted fields take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of frames (overrides `total_frames`).
    #[arg(long)]
    pub frames: Option<usize>,
    /// Initial spore count (overrides `lifecycle.initial_spores`).
    #[arg(long)]
    pub spores: Option<usize>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Image width in pixels (overrides `render.width`).
    #[arg(long)]
    pub width: Option<u32>,
    /// Image height in pixels (overrides `render.height`).
    #[arg(long)]
    pub height: Option<u32>,
    /// Worker threads for rendering; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
}

impl GenerateArgs {
    /// Loads the config (or defaults) and applies the flag overrides.
    pub fn resolve(&self) -> Result<SimulationConfig, ConfigError> {
        let mut config = match &self.config {
            Some(path) => load_config(path)?,
            None => SimulationConfig::default(),
        };
        apply_overrides(&mut config, self);
        config.validate()?;
        Ok(config)
    }
}

/// Applies the override flags to `config` field by field.
pub fn apply_overrides(config: &mut SimulationConfig, args: &GenerateArgs) {
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(frames) = args.frames {
        config.total_frames = frames;
    }
    if let Some(spores) = args.spores {
        config.lifecycle.initial_spores = spores;
    }
    if let Some(out) = &args.out {
        config.output_dir = Some(out.clone());
    }
    if let Some(w) = args.width {
        config.render.width = w;
    }
    if let Some(h) = args.height {
        config.render.height = h;
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_CONFIG
            } else {
                // --help and --version
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    match cli.command {
        Command::Generate(args) => run_generate(&args, cli.verbose, stdout, stderr),
        Command::Verify { manifest } => run_verify(&manifest, stdout, stderr),
        Command::Selftest {
            seed,
            samples,
            alpha,
        } => run_selftest(seed, samples, alpha, stdout, stderr),
    }
}

fn run_generate(
    args: &GenerateArgs,
    verbose: u8,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let config = match args.resolve() {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_CONFIG;
        }
    };
    if args.workers == 0 {
        let _ = writeln!(stderr, "error: --workers must be at least 1");
        return EXIT_CONFIG;
    }
    if verbose >= 1 {
        let _ = writeln!(stderr, "{}", config.to_json_pretty());
    }
    let out_dir = config
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR));
    match generate_dataset(&config, &out_dir, args.workers) {
        Ok(manifest) => {
            let _ = writeln!(
                stdout,
                "wrote {} frames and {}",
                manifest.frames.len(),
                out_dir.join(MANIFEST_FILE).display()
            );
            EXIT_OK
        }
        Err(DatasetError::Config(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn run_verify(manifest: &PathBuf, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    match verify_dataset(manifest) {
        Ok(report) => {
            let _ = write!(stdout, "{report}");
            if report.all_passed() {
                EXIT_OK
            } else {
                EXIT_RUNTIME
            }
        }
        Err(e @ VerifyError::Io { .. }) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_CONFIG
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_RUNTIME
        }
    }
}

fn run_selftest(
    seed: u64,
    samples: usize,
    alpha: f64,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    if samples < 100 || !(alpha > 0.0 && alpha < 1.0) {
        let _ = writeln!(stderr, "error: need --samples >= 100 and 0 < --alpha < 1");
        return EXIT_CONFIG;
    }
    let checks = selftest(seed, samples, alpha);
    for c in &checks {
        let _ = writeln!(stdout, "{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed == 0 {
        let _ = writeln!(stdout, "all {} laws pass at alpha = {alpha}", checks.len());
        EXIT_OK
    } else {
        let _ = writeln!(
            stdout,
            "{failed} of {} laws failed at alpha = {alpha}",
            checks.len()
        );
        EXIT_RUNTIME
    }
}
