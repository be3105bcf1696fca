use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use relaxlab::config::{RunConfig, Scenario};
use relaxlab::pipeline::{self, error_json, reference_rate, ScenarioReport};
use relaxlab::{LabError, Result};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "relaxlab", version, about = "Rarefaction and periodic-wave experiments for the relaxation system")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON config file; its `scenario` key picks the preset it overrides
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// preset used when no config file is given
    #[arg(long, global = true)]
    preset: Option<String>,
    /// artifact directory (default: $RELAXLAB_OUT/<scenario>)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// root for default artifact directories
    #[arg(long, env = "RELAXLAB_OUT", default_value = "relaxlab-out", global = true, hide_env_values = true)]
    out_root: PathBuf,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the constitutive hypotheses of the material
    ValidateMaterial,
    /// Structural and decay checks of the smooth rarefaction
    RarefactionCheck,
    /// Exponential decay of the far-field periodic cells
    PeriodicDecay {
        /// also rerun the cells at half the grid spacing
        #[arg(long)]
        refine: bool,
    },
    /// Residuals of the ansatz and their decay rates
    AnsatzResiduals,
    /// Full pipeline with all enabled verdicts
    Run,
    /// Print the verdicts stored in an artifact directory
    Report,
}

fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match (&c.config, &c.preset) {
        (Some(path), _) => RunConfig::from_path(path)?,
        (None, Some(name)) => {
            let cfg = RunConfig::preset(Scenario::parse(name)?);
            cfg.validate()?;
            cfg
        }
        (None, None) => RunConfig::preset(Scenario::Default),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn out_dir(c: &Common, cfg: &RunConfig) -> PathBuf {
    c.out
        .clone()
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| c.out_root.join(cfg.scenario.name()))
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn print_report(r: &ScenarioReport) {
    for v in &r.verdicts {
        let tag = match (v.gated, v.passed) {
            (false, _) => "INFO",
            (true, true) => "PASS",
            (true, false) => "FAIL",
        };
        println!("{tag} {}: {}", v.name, v.summary);
    }
    println!(
        "{} {} in {:.1} s -> {}",
        if r.passed { "PASSED" } else { "FAILED" },
        r.scenario,
        r.elapsed_seconds,
        r.out_dir.display()
    );
}

/// Ok(true) when every verdict of the command passed.
fn execute(cli: &Cli) -> Result<bool> {
    let c = &cli.common;
    if let Command::Report = cli.command {
        let dir = match &c.out {
            Some(d) => d.clone(),
            None => out_dir(c, &load_config(c)?),
        };
        let text = std::fs::read_to_string(dir.join("verdicts.json"))?;
        let v: Value = serde_json::from_str(&text)?;
        let passed = v["passed"].as_bool().unwrap_or(false);
        for verdict in v["verdicts"].as_array().into_iter().flatten() {
            let tag = match (verdict["gated"].as_bool(), verdict["passed"].as_bool()) {
                (Some(false), _) => "INFO",
                (_, Some(true)) => "PASS",
                _ => "FAIL",
            };
            println!(
                "{tag} {}: {}",
                verdict["name"].as_str().unwrap_or("?"),
                verdict["summary"].as_str().unwrap_or("")
            );
        }
        println!("{}", if passed { "PASSED" } else { "FAILED" });
        return Ok(passed);
    }
    let cfg = load_config(c)?;
    let out = out_dir(c, &cfg);
    match cli.command {
        Command::ValidateMaterial => {
            let h = pipeline::validate_material(&cfg)?;
            let v = serde_json::to_value(&h)?;
            write_json(&out, "material.json", &v)?;
            for check in &h.checks {
                println!("{} {}: {}", if check.passed { "PASS" } else { "FAIL" }, check.name, check.detail);
            }
            println!("E1 = {}, E = {}, a1 = {}, a2 = {}", h.e1, h.young, h.a1, h.a2);
            Ok(h.passed)
        }
        Command::RarefactionCheck => {
            let r = pipeline::rarefaction_check(&cfg)?;
            std::fs::create_dir_all(&out)?;
            r.write_csv(std::fs::File::create(out.join("rarefaction_sweep.csv"))?)?;
            let summary = json!({
                "passed": r.passed,
                "sup_ratio": r.sup_ratio,
                "sup_monotone": r.sup_monotone,
                "exponents": r.exponents,
                "vt_positive": r.vt_positive,
                "transport_constant": r.transport_constant,
                "transport_bound": r.transport_bound,
                "max_residual": r.max_residual,
            });
            write_json(&out, "rarefaction.json", &summary)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(r.passed)
        }
        Command::PeriodicDecay { refine } => {
            let d = pipeline::periodic_decay(&cfg, refine)?;
            let v = serde_json::to_value(&d)?;
            write_json(&out, "periodic_decay.json", &v)?;
            for side in &d {
                let fit = side.measurement.outcome.fit();
                println!(
                    "{}: {}{}",
                    side.side,
                    fit.map(|f| format!("alpha {:.5}, R^2 {:.4}", f.rate, f.r2))
                        .unwrap_or_else(|| "decayed to floor".into()),
                    side.refinement_stable
                        .map(|s| format!(", refinement stable: {s}"))
                        .unwrap_or_default()
                );
            }
            let relax = cfg.periodic.mode == relaxlab::periodic::PeriodicMode::Relaxation;
            Ok(!relax
                || d.iter().all(|s| {
                    (s.measurement.alpha_claimed || s.measurement.outcome.fit().is_none())
                        && s.refinement_stable.unwrap_or(true)
                }))
        }
        Command::AnsatzResiduals => {
            let d = pipeline::periodic_decay(&cfg, false)?;
            let r = pipeline::ansatz_residuals(&cfg, reference_rate(cfg.periodic.mode, &d))?;
            let v = serde_json::to_value(&r)?;
            write_json(&out, "ansatz_residuals.json", &v)?;
            for f in &r.report.fits {
                println!(
                    "{} {}: {}",
                    if f.passed { "PASS" } else { "FAIL" },
                    f.name,
                    f.outcome
                        .fit()
                        .map(|x| format!("alpha {:.5}, R^2 {:.4}", x.rate, x.r2))
                        .unwrap_or_else(|| "decayed to floor".into())
                );
            }
            println!(
                "expansion gap {:.2e}, identity residuals {:.2e} / {:.2e}",
                r.max_expansion_gap, r.max_s1, r.max_s2
            );
            Ok(r.report.passed)
        }
        Command::Run => {
            let r = pipeline::run_scenario(&cfg, &out)?;
            print_report(&r);
            Ok(r.passed)
        }
        Command::Report => unreachable!("handled above"),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.common.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot configure {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            report_error(&cli, &e);
            ExitCode::from(2)
        }
    }
}

fn report_error(cli: &Cli, e: &LabError) {
    let doc = error_json(e);
    println!("{}", serde_json::to_string_pretty(&doc).unwrap_or_default());
    if let Some(dir) = &cli.common.out {
        let _ = write_json(dir, "error.json", &doc);
    }
}
