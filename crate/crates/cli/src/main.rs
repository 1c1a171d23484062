use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use thermofield::experiment::{
    expand_grid, render, run_grid, EngineChoice, ExperimentConfig, ExperimentName, Format, GridAxis, ResultDocument,
    Temperature,
};
use thermofield::teleport::ChannelVariant;
use thermofield::{InverseTemperature, TfdError};

/// Environment variable naming the default output directory.
const OUTPUT_DIR_ENV: &str = "TFD_OUTPUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "tfd", version, about = "Run thermofield-dynamics experiments and emit result tables")]
struct Cli {
    /// expectation-equivalence | teleport | mandel | gibbs-hadamard | no-clone | broadcast | overlap | mixture
    experiment: ExperimentName,

    /// Inverse temperature, or `inf` for zero temperature.
    #[arg(long, conflicts_with = "nbar")]
    beta: Option<InverseTemperature>,
    /// Mean occupation, converted to an inverse temperature.
    #[arg(long)]
    nbar: Option<f64>,
    /// Second inverse temperature (Bob's, or the target/partner temperature).
    #[arg(long, conflicts_with = "nbar2")]
    beta2: Option<InverseTemperature>,
    #[arg(long)]
    nbar2: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    /// Fock cutoff N; each sector keeps |0⟩..|N⟩.
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    a0: Option<f64>,
    #[arg(long = "a0-im", allow_negative_numbers = true)]
    a0_im: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    a1: Option<f64>,
    #[arg(long = "a1-im", allow_negative_numbers = true)]
    a1_im: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// abstract | numeric | both
    #[arg(long)]
    engine: Option<EngineChoice>,
    #[arg(long)]
    seed: Option<u64>,
    /// Teleportation channel: thermo | cross | 00 | 11 | 01 | 10
    #[arg(long)]
    channel: Option<ChannelVariant>,
    /// Output file; defaults to `<experiment>.<format>` in $TFD_OUTPUT_DIR or the current directory.
    /// `-` writes to stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// json | csv
    #[arg(long, default_value = "json")]
    format: Format,
    /// Sweep a config key, e.g. `--grid nbar=0.5,1,2`. Repeatable.
    #[arg(long)]
    grid: Vec<GridAxis>,
    /// Record wall time in the output file, which makes it run-dependent.
    #[arg(long)]
    include_timing: bool,
}

impl Cli {
    /// Config fields given explicitly on the command line.
    fn given(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let mut mark = |set: bool, key: &'static str| {
            if set {
                out.push(key);
            }
        };
        mark(self.beta.is_some() || self.nbar.is_some(), "beta");
        mark(self.beta2.is_some() || self.nbar2.is_some(), "beta2");
        mark(self.omega.is_some(), "omega");
        mark(self.cutoff.is_some(), "cutoff");
        mark(self.a0.is_some() || self.a0_im.is_some(), "a0");
        mark(self.a1.is_some() || self.a1_im.is_some(), "a1");
        mark(self.mu.is_some(), "mu");
        mark(self.engine.is_some(), "engine");
        mark(self.seed.is_some(), "seed");
        mark(self.channel.is_some(), "channel");
        out
    }

    fn config(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(self.experiment);
        if let Some(b) = self.beta {
            cfg.beta = Temperature::Beta(b);
        }
        if let Some(n) = self.nbar {
            cfg.beta = Temperature::Nbar(n);
        }
        if let Some(b) = self.beta2 {
            cfg.beta2 = Some(Temperature::Beta(b));
        }
        if let Some(n) = self.nbar2 {
            cfg.beta2 = Some(Temperature::Nbar(n));
        }
        if let Some(w) = self.omega {
            cfg.omega = w;
        }
        if let Some(n) = self.cutoff {
            cfg.cutoff = n;
        }
        if self.a0.is_some() || self.a0_im.is_some() {
            cfg.a0 = thermofield::C64::new(self.a0.unwrap_or(0.0), self.a0_im.unwrap_or(0.0));
        }
        if self.a1.is_some() || self.a1_im.is_some() {
            cfg.a1 = thermofield::C64::new(self.a1.unwrap_or(0.0), self.a1_im.unwrap_or(0.0));
        }
        if let Some(m) = self.mu {
            cfg.mu = m;
        }
        if let Some(e) = self.engine {
            cfg.engine = e;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(c) = self.channel {
            cfg.channel = c;
        }
        cfg
    }

    fn output_path(&self, env_dir: Option<OsString>) -> Option<PathBuf> {
        match &self.output {
            Some(p) if p.as_os_str() == "-" => None,
            Some(p) => Some(p.clone()),
            None => {
                let dir = env_dir.map_or_else(|| PathBuf::from("."), PathBuf::from);
                Some(dir.join(format!("{}.{}", self.experiment, self.format.extension())))
            }
        }
    }
}

fn grid_key(key: &str) -> &str {
    match key {
        "nbar" => "beta",
        "nbar2" => "beta2",
        "a0-im" => "a0",
        "a1-im" => "a1",
        k => k,
    }
}

fn exit_code(e: &TfdError) -> u8 {
    match e {
        TfdError::Config(_) | TfdError::Domain(_) | TfdError::Io(_) => 2,
        _ => 1,
    }
}

fn fail(e: &TfdError, err: &mut dyn Write) -> u8 {
    let _ = writeln!(err, "tfd: {e}");
    exit_code(e)
}

/// Runs the parsed command and returns the process exit code.
fn run(cli: &Cli, env_dir: Option<OsString>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let uses = cli.experiment.uses();
    for key in cli.given().into_iter().chain(cli.grid.iter().map(|a| grid_key(&a.key))) {
        if !uses.contains(&key) {
            let _ = writeln!(err, "warning: {key} is ignored by {}", cli.experiment);
        }
    }

    let start = Instant::now();
    let configs = match expand_grid(&cli.config(), &cli.grid) {
        Ok(c) => c,
        Err(e) => return fail(&e, err),
    };
    let mut docs: Vec<ResultDocument> = Vec::with_capacity(configs.len());
    for (i, result) in run_grid(&configs, cli.include_timing).into_iter().enumerate() {
        match result {
            Ok(d) => docs.push(d),
            Err(e) => {
                if configs.len() > 1 {
                    let _ = writeln!(err, "tfd: run {i} failed");
                }
                return fail(&e, err);
            }
        }
    }
    let _ = writeln!(err, "wall time: {:.3} s", start.elapsed().as_secs_f64());

    let text = match render(&docs, cli.format) {
        Ok(t) => t,
        Err(e) => return fail(&e, err),
    };
    match cli.output_path(env_dir) {
        None => {
            if let Err(e) = out.write_all(text.as_bytes()) {
                return fail(&TfdError::Io(format!("stdout: {e}")), err);
            }
        }
        Some(path) => {
            if let Err(e) = std::fs::write(&path, text) {
                return fail(&TfdError::Io(format!("{}: {e}", path.display())), err);
            }
            let _ = writeln!(err, "wrote {}", path.display());
        }
    }

    let mut all_pass = true;
    for (i, doc) in docs.iter().enumerate() {
        let prefix = if docs.len() > 1 { format!("run {i}: ") } else { String::new() };
        let _ = writeln!(err, "{prefix}{}/{} checks passed", doc.summary.passed, doc.summary.total);
        for name in &doc.summary.failing {
            let ch = doc.checks.iter().find(|c| &c.name == name).expect("failing check is recorded");
            let _ = writeln!(
                err,
                "{prefix}FAIL {name}: value {} expected {} tolerance {:e}",
                ch.value, ch.expected, ch.tolerance
            );
        }
        all_pass &= doc.all_pass();
    }
    u8::from(!all_pass)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run(&cli, std::env::var_os(OUTPUT_DIR_ENV), &mut std::io::stdout().lock(), &mut std::io::stderr());
    ExitCode::from(code)
}
