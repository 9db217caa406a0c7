use std::path::PathBuf;
use std::process::ExitCode;

use bels_cli::config::{self, Config, OutputFormat, BUNDLED};
use bels_cli::runner::{self, Run, RunError};
use bels_core::detection::{count_coincidences, parse_timestamps};
use bels_core::interference::CoincidenceChannel;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bels", version, about = "Two-photon interference simulator and analyzer")]
struct Cli {
    /// Override the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files (defaults to the configured one).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Scan table format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    /// Print nothing but errors.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and analyze the scan described by a TOML config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit a previously written scan table.
    Fit {
        #[arg(long)]
        input: PathBuf,
        /// Take the analysis settings from this config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Count coincidences in a `detector<TAB>time_seconds` event file.
    CountCoincidences {
        #[arg(long)]
        input: PathBuf,
        /// Window in seconds.
        #[arg(long, default_value_t = 5e-9)]
        window: f64,
    },
    /// Run one of the bundled figure configs.
    Reproduce {
        #[arg(value_parser = clap::builder::PossibleValuesParser::new(BUNDLED.map(|(n, _)| n)))]
        figure: String,
    },
}

fn apply_overrides(cli: &Cli, cfg: &mut Config) {
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.output.dir = dir.clone();
    }
    if let Some(f) = cli.format {
        cfg.output.format = f;
    }
}

fn finish(cli: &Cli, run: &Run, cfg: &Config) -> Result<ExitCode, RunError> {
    let files = runner::write_outputs(run, &cfg.output.dir, &cfg.output.prefix, cfg.output.format)?;
    if !cli.quiet {
        print_summary(run);
        for f in &files {
            println!("wrote {}", f.display());
        }
    }
    for f in &run.summary.failures {
        eprintln!("error: {f}");
    }
    Ok(if run.summary.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn print_summary(run: &Run) {
    let s = &run.summary;
    println!(
        "{} scan: {} scan(s), {} rows, seed {}",
        s.scan_variable.name(),
        s.scans,
        s.rows,
        s.seed
    );
    let failed = run.fits.iter().filter(|e| e.fit.is_none()).count();
    if failed > 0 {
        println!("{failed} of {} channel fits did not converge (see fits file)", run.fits.len());
    }
    if let Some(v) = &s.visibility {
        println!("visibility {}: {:.4} ± {:.4}", v.channel, v.estimate.value, v.estimate.uncertainty);
    }
    if let Some(c) = &s.coherence {
        println!(
            "coherence length: {:.2} ± {:.2} um ({:.1} fs)",
            c.estimate.length.value, c.estimate.length.uncertainty, c.estimate.time.value
        );
    }
    for p in &s.field_points {
        match &p.visibility {
            Some(v) => println!("B = {:.2} T: visibility {:.4} ± {:.4}", p.field_t, v.value, v.uncertainty),
            None => println!("B = {:.2} T: no visibility fit", p.field_t),
        }
    }
    for e in &s.hwp_endpoints {
        println!("{}: {:.0} at 0 deg, {:.0} at 45 deg", e.channel, e.at_0deg, e.at_45deg);
    }
    if let Some(b) = &s.bell_fractions {
        let f = b.estimate.fractions;
        println!(
            "Bell fractions: phi+ {:.3}, phi- {:.3}, psi+ {:.3}, psi- {:.3} (max error {:.3})",
            f.phi_plus, f.phi_minus, f.psi_plus, f.psi_minus, b.max_abs_error
        );
        for w in &b.estimate.warnings {
            println!("warning: {w}");
        }
    }
    if let Some(v) = &s.verdet {
        println!(
            "Verdet constant: {:.2} ± {:.2} rad/(T m)",
            v.estimate.verdet.value, v.estimate.verdet.uncertainty
        );
        if let (Some(x), Some(ok)) = (v.expected, v.within_tolerance) {
            println!("expected {x}: {}", if ok { "within tolerance" } else { "OUT OF TOLERANCE" });
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, RunError> {
    match &cli.command {
        Command::Simulate { config } => {
            let mut cfg = config::load_config(config)?;
            apply_overrides(cli, &mut cfg);
            let run = runner::simulate(&cfg)?;
            finish(cli, &run, &cfg)
        }
        Command::Reproduce { figure } => {
            let mut cfg = config::bundled(figure)?;
            apply_overrides(cli, &mut cfg);
            let run = runner::simulate(&cfg)?;
            finish(cli, &run, &cfg)
        }
        Command::Fit { input, config } => {
            let scans = runner::load_scans(input)?;
            let mut cfg = match config {
                Some(p) => config::load_config(p)?,
                None => fit_only_config(&scans[0])?,
            };
            apply_overrides(cli, &mut cfg);
            if cfg.analysis.bell_fractions || cfg.analysis.verdet.is_some() {
                eprintln!("note: Bell fractions and Verdet estimates need `simulate`; fitting only");
            }
            let run = runner::analyze(&scans, &cfg.analysis, cfg.description.clone());
            finish(cli, &run, &cfg)
        }
        Command::CountCoincidences { input, window } => {
            let text = std::fs::read_to_string(input).map_err(|source| RunError::Io {
                path: input.clone(),
                source,
            })?;
            let streams = parse_timestamps(&text)?;
            let counts = count_coincidences(&streams, *window)?;
            let format = cli.format.unwrap_or_default();
            let out = match format {
                OutputFormat::Json => serde_json::to_string_pretty(&counts)? + "\n",
                OutputFormat::Csv => {
                    let mut s = String::from("channel,count\n");
                    for ch in CoincidenceChannel::ALL {
                        s.push_str(&format!("{},{}\n", ch, counts.get(ch)));
                    }
                    for d in bels_core::Detector::ALL {
                        s.push_str(&format!("{},{}\n", d, counts.singles_at(d)));
                    }
                    s
                }
            };
            match &cli.out_dir {
                Some(dir) => {
                    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
                        path: dir.clone(),
                        source,
                    })?;
                    let path = dir.join(format!("coincidences.{}", bels_cli::table::extension(format)));
                    std::fs::write(&path, &out).map_err(|source| RunError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    if !cli.quiet {
                        println!("wrote {}", path.display());
                    }
                }
                None => print!("{out}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Analysis defaults for a bare scan table: the apparatus comes from the file
/// header and the scan section is only a placeholder.
fn fit_only_config(scan: &bels_core::experiment::ScanResult) -> Result<Config, RunError> {
    let mut cfg = config::bundled("fig2")?;
    cfg.description = None;
    cfg.seed = scan.seed;
    cfg.apparatus = scan.apparatus.clone();
    cfg.analysis.bell_fractions = false;
    cfg.analysis.verdet = None;
    cfg.analysis.visibility_channel = CoincidenceChannel::HcHd;
    cfg.output.prefix = "fit".into();
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
