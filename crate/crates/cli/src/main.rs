use std::process::ExitCode;

use lossscape_cli::config::Config;
use lossscape_cli::{check, pipeline, sweep, CliError};

const USAGE: &str = "\
lossscape — loss-landscape topology at desk scale

USAGE:
    lossscape <COMMAND> [--config FILE] [--KEY VALUE]...

COMMANDS:
    pipeline      run the full analysis: model, directions, landscape,
                  topology, metrics
    sample        stages 1-3 only: write landscape.csv + landscape.meta.json
    analyze       recompute topology + metrics from a saved landscape CSV
                  (set --input path/to/landscape.csv)
    beta-sweep    train one model per wave speed in sweep.betas and tabulate
                  the metrics (sweep.csv)
    mlp-demo      cross demo.variants with demo.seeds and tabulate (demo.csv)
    oracle-check  run the brute-force equivalence suite

Any configuration key doubles as a flag: `--pinn.beta 3` overrides the
`pinn.beta` entry of the config file; flags win over the file. See the
README for the full key list. Exit codes: 0 ok, 2 config error, 3 numeric
failure, 4 i/o failure.
";

fn parse_args(args: &[String]) -> Result<(String, Config), CliError> {
    if args.is_empty() {
        return Err(CliError::Config("missing subcommand (try --help)".into()));
    }
    let command = args[0].clone();
    let mut cfg = Config::default();
    // First pass: the config file, so flags can override it.
    let mut i = 1;
    let mut overrides: Vec<(String, String)> = Vec::new();
    while i < args.len() {
        let token = &args[i];
        let Some(stripped) = token.strip_prefix("--") else {
            return Err(CliError::Config(format!(
                "unexpected argument `{token}` (flags look like --key value)"
            )));
        };
        let (key, value) = match stripped.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let value = args.get(i + 1).ok_or_else(|| {
                    CliError::Config(format!("flag --{stripped} is missing a value"))
                })?;
                i += 1;
                (stripped.to_string(), value.clone())
            }
        };
        if key == "config" {
            cfg.load_file(std::path::Path::new(&value))?;
        } else {
            overrides.push((key, value));
        }
        i += 1;
    }
    for (key, value) in overrides {
        cfg.set(&key, &value)?;
    }
    Ok((command, cfg))
}

fn run() -> Result<(), CliError> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--help" || a == "-h") || args.is_empty() {
        print!("{USAGE}");
        return Ok(());
    }
    if args.iter().any(|a| a == "--version" || a == "-V") {
        println!("lossscape {}", env!("CARGO_PKG_VERSION"));
        return Ok(());
    }
    let (command, cfg) = parse_args(&args)?;
    match command.as_str() {
        "pipeline" => {
            let summary = pipeline::run_pipeline(&cfg)?;
            println!(
                "minima={} saddles={} avg_persistence={} (finite-only {})",
                summary.topo_with_essential.n_minima,
                summary.topo_with_essential.n_saddles,
                summary.topo_with_essential.avg_persistence,
                summary.topo_finite_only.avg_persistence,
            );
            if let Some(h) = &summary.hessian {
                println!(
                    "lambda1={} lambda2={} trace={}",
                    h.lambda1, h.lambda2, h.trace_estimate
                );
            }
            println!("outputs in {}", summary.output_dir.display());
            Ok(())
        }
        "sample" => {
            pipeline::run_sample(&cfg)?;
            println!("landscape written to {}", cfg.output_dir().display());
            Ok(())
        }
        "analyze" => {
            let summary = pipeline::run_analyze(&cfg)?;
            println!(
                "minima={} saddles={} avg_persistence={} (finite-only {})",
                summary.topo_with_essential.n_minima,
                summary.topo_with_essential.n_saddles,
                summary.topo_with_essential.avg_persistence,
                summary.topo_finite_only.avg_persistence,
            );
            Ok(())
        }
        "beta-sweep" => {
            sweep::run_beta_sweep(&cfg)?;
            Ok(())
        }
        "mlp-demo" => {
            sweep::run_mlp_demo(&cfg)?;
            Ok(())
        }
        "oracle-check" => check::run_oracle_check(),
        other => Err(CliError::Config(format!(
            "unknown subcommand `{other}` (try --help)"
        ))),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
