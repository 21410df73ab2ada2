use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use speclab::exec::Execution;
use speclab::harness::{self, ExperimentConfig, RunError, LIBRARY_VERSION};

#[derive(Parser)]
#[command(name = "speclab", version = LIBRARY_VERSION, about = "Eigenvalue studies of frame and Gabor concentration operators")]
struct Cli {
    /// Overwrite existing outputs.
    #[arg(long, global = true)]
    force: bool,
    /// Run every configuration on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Print the normalized config instead of running it.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    out: String,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GaborArgs {
    #[arg(long)]
    length: Option<usize>,
    #[arg(long)]
    shift: Option<usize>,
    #[arg(long = "mod")]
    modulation: Option<usize>,
    /// gauss | boxcar:w | file:@path
    #[arg(long)]
    window: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Spectrum of one Gabor or frame concentration operator.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gabor: GaborArgs,
        /// Shape descriptor or @mask file.
        #[arg(long)]
        domain: String,
        /// @file or random:M,n instead of a Gabor system.
        #[arg(long)]
        frame: Option<String>,
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Spectrum plus all right-hand-side bounds and geometry.
    Bounds {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gabor: GaborArgs,
        #[arg(long)]
        domain: String,
        #[arg(long)]
        frame: Option<String>,
        #[arg(long)]
        deltas: Option<String>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long = "s-grid")]
        s_grid: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Lattice refinement ladder for a fixed shape.
    Refine {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        window: Option<String>,
        #[arg(long)]
        domain: String,
        /// Rungs as "a,b;a,b;…".
        #[arg(long)]
        ladder: String,
        #[arg(long)]
        deltas: Option<String>,
    },
    /// Dilations of a shape on a fixed lattice.
    Dilate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gabor: GaborArgs,
        #[arg(long)]
        domain: String,
        #[arg(long)]
        factors: String,
        #[arg(long)]
        deltas: Option<String>,
    },
    /// Mixed-state localization operator.
    Mixed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        windows: String,
        #[arg(long)]
        weights: String,
        #[arg(long)]
        domain: String,
        #[arg(long)]
        length: Option<usize>,
        #[arg(long)]
        deltas: Option<String>,
    },
    /// Discrete time-frequency limiting operator.
    Prolate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        freq: String,
        #[arg(long)]
        time: String,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Plunge counts across lengths and interval sizes.
    ProlateStudy {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lengths: String,
        #[arg(long)]
        sizes: String,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Run a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

struct Pairs(Vec<(&'static str, String)>);

impl Pairs {
    fn new(kind: &str, common: &Common) -> Self {
        let mut p = Pairs(vec![("kind", kind.to_string()), ("out", common.out.clone())]);
        p.opt("seed", common.seed);
        p
    }

    fn set(&mut self, key: &'static str, value: impl ToString) {
        self.0.push((key, value.to_string()));
    }

    fn opt<T: ToString>(&mut self, key: &'static str, value: Option<T>) {
        if let Some(v) = value {
            self.set(key, v);
        }
    }

    fn gabor(&mut self, g: &GaborArgs) {
        self.opt("length", g.length);
        self.opt("shift", g.shift);
        self.opt("mod", g.modulation);
        self.opt("window", g.window.clone());
    }
}

fn build_config(command: &Command) -> Result<ExperimentConfig, RunError> {
    let cwd = Path::new(".");
    let pairs = match command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)
                .map_err(|e| RunError::Input(format!("{}: {e}", config.display())))?;
            let base = config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(cwd);
            return harness::parse_config(&text, base).map_err(RunError::Config);
        }
        Command::Spectrum { common, gabor, domain, frame, deltas, gamma } => {
            let mut p = Pairs::new("spectrum", common);
            p.gabor(gabor);
            p.set("domain", domain);
            p.opt("frame", frame.clone());
            p.opt("deltas", deltas.clone());
            p.opt("gamma", *gamma);
            p
        }
        Command::Bounds { common, gabor, domain, frame, deltas, gamma, s_grid, alpha, beta } => {
            let mut p = Pairs::new("bounds", common);
            p.gabor(gabor);
            p.set("domain", domain);
            p.opt("frame", frame.clone());
            p.opt("deltas", deltas.clone());
            p.opt("gamma", *gamma);
            p.opt("s_grid", s_grid.clone());
            p.opt("alpha", *alpha);
            p.opt("beta", *beta);
            p
        }
        Command::Refine { common, length, window, domain, ladder, deltas } => {
            let mut p = Pairs::new("refine", common);
            p.set("length", length);
            p.opt("window", window.clone());
            p.set("domain", domain);
            p.set("ladder", ladder);
            p.opt("deltas", deltas.clone());
            p
        }
        Command::Dilate { common, gabor, domain, factors, deltas } => {
            let mut p = Pairs::new("dilate", common);
            p.gabor(gabor);
            p.set("domain", domain);
            p.set("factors", factors);
            p.opt("deltas", deltas.clone());
            p
        }
        Command::Mixed { common, windows, weights, domain, length, deltas } => {
            let mut p = Pairs::new("mixed", common);
            p.set("windows", windows);
            p.set("weights", weights);
            p.set("domain", domain);
            p.opt("length", *length);
            p.opt("deltas", deltas.clone());
            p
        }
        Command::Prolate { common, length, freq, time, delta } => {
            let mut p = Pairs::new("prolate", common);
            p.set("length", length);
            p.set("freq", freq);
            p.set("time", time);
            p.opt("delta", *delta);
            p
        }
        Command::ProlateStudy { common, lengths, sizes, delta } => {
            let mut p = Pairs::new("prolate-study", common);
            p.set("lengths", lengths);
            p.set("sizes", sizes);
            p.opt("delta", *delta);
            p
        }
    };
    ExperimentConfig::from_pairs(&pairs.0, cwd).map_err(RunError::Config)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 3 } else { 0 });
        }
    };
    let config = match build_config(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("speclab: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if cli.dry_run {
        print!("{}", harness::serialize_config(&config));
        return ExitCode::SUCCESS;
    }
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match harness::run_and_emit(&config, Path::new("."), cli.force, exec) {
        Ok(out) => {
            for s in out.summary.spectra.iter().filter(|s| s.status != "ok") {
                eprintln!("speclab: {} skipped ({})", s.label, s.status);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("speclab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
