use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Arg, ArgMatches, Command};
use unifilter_bench::experiment::write_curve;
use unifilter_bench::{
    regret_curve, run_experiment, run_oracle, run_scan, verify, ConfigMap, ExperimentConfig, Result, Suite,
    VerifyOptions, KEYS,
};

const USAGE_ERROR: u8 = 1;
const VERIFY_FAILED: u8 = 2;

fn with_keys(cmd: Command) -> Command {
    let cmd = cmd.arg(
        Arg::new("config")
            .long("config")
            .value_name("PATH")
            .value_parser(clap::value_parser!(PathBuf))
            .help("key = value configuration file"),
    );
    KEYS.iter().fold(cmd, |cmd, (key, help)| {
        cmd.arg(
            Arg::new(*key)
                .long(*key)
                .value_name("VALUE")
                .allow_negative_numbers(true)
                .help(*help),
        )
    })
}

fn cli() -> Command {
    let suites: Vec<&'static str> = Suite::ALL.iter().map(|s| s.name()).collect();
    Command::new("unifilter")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Seeded filtering experiments with regret reports as CSV")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(with_keys(Command::new("run").about("Per-seed traces and summary.csv")))
        .subcommand(with_keys(
            Command::new("curve").about("Mean regret per horizon with ln T and T fits"),
        ))
        .subcommand(with_keys(Command::new("scan").about("Worst-interval regret per seed")))
        .subcommand(with_keys(Command::new("oracle").about("Best fixed filter per seed")))
        .subcommand(
            with_keys(Command::new("verify").about("Run a verification suite; exits 2 if any check fails"))
                .arg(
                    Arg::new("suite")
                        .required(true)
                        .value_parser(clap::builder::PossibleValuesParser::new(suites)),
                )
                .arg(
                    Arg::new("quick")
                        .long("quick")
                        .action(clap::ArgAction::SetTrue)
                        .help("reduced sample sizes"),
                ),
        )
}

fn settings(m: &ArgMatches) -> Result<ConfigMap> {
    let mut map = match m.get_one::<PathBuf>("config") {
        Some(path) => ConfigMap::load(path)?,
        None => ConfigMap::new(),
    };
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            map.set(key, v)?;
        }
    }
    Ok(map)
}

fn print_rows(header: &str, rows: impl IntoIterator<Item = String>) {
    println!("{header}");
    for r in rows {
        println!("{r}");
    }
}

fn execute(name: &str, m: &ArgMatches) -> Result<u8> {
    let map = settings(m)?;
    if name == "verify" {
        let suite: Suite = m.get_one::<String>("suite").expect("required").parse()?;
        let mut opts = if m.get_flag("quick") {
            VerifyOptions::quick()
        } else {
            VerifyOptions::default()
        };
        if let Some(seed) = map.get("seed") {
            opts.seed = seed.parse().map_err(|e| unifilter_bench::BenchError::Field {
                key: "seed",
                reason: format!("`{seed}`: {e}"),
            })?;
        }
        if let Some(s2) = map.get("sigma2") {
            opts.declared_sigma2 = Some(s2.parse().map_err(|e| unifilter_bench::BenchError::Field {
                key: "sigma2",
                reason: format!("`{s2}`: {e}"),
            })?);
        }
        let report = verify(suite, &opts)?;
        report.write_csv(io::stdout().lock())?;
        if let Some(out) = map.get("out") {
            let dir = PathBuf::from(out);
            unifilter_bench::output::ensure_dir(&dir)?;
            let path = dir.join(format!("verify_{}.csv", suite.name()));
            let file =
                std::fs::File::create(&path).map_err(|source| unifilter_bench::BenchError::Output { path, source })?;
            report.write_csv(file)?;
        }
        return Ok(if report.passed() { 0 } else { VERIFY_FAILED });
    }

    let config = ExperimentConfig::from_map(&map)?;
    match name {
        "run" => {
            let summaries = run_experiment(&config)?;
            print_rows(
                "seed,regret_full,adaptive_regret",
                summaries
                    .iter()
                    .map(|s| format!("{},{:.6},{:.6}", s.seed, s.regret_full, s.adaptive_regret)),
            );
        }
        "curve" => {
            let curve = regret_curve(&config, &config.horizons)?;
            write_curve(&curve, &config.out)?;
            print_rows(
                "T,mean_regret,std_error",
                curve
                    .points
                    .iter()
                    .map(|p| format!("{},{:.6},{:.6}", p.horizon, p.mean_regret, p.std_error)),
            );
            println!(
                "ln_T fit r2 {:.4}, T fit slope {:.6}",
                curve.log_fit.r_squared, curve.linear_fit.slope
            );
        }
        "scan" => {
            let summaries = run_scan(&config)?;
            print_rows(
                "seed,worst_interval_r,worst_interval_s,adaptive_regret",
                summaries.iter().map(|s| {
                    format!(
                        "{},{},{},{:.6}",
                        s.seed, s.worst_interval_r, s.worst_interval_s, s.adaptive_regret
                    )
                }),
            );
        }
        "oracle" => {
            let rows = run_oracle(&config)?;
            print_rows(
                "seed,loss,lambda",
                rows.iter().map(|r| format!("{},{:.6},{:.6}", r.seed, r.loss, r.lambda)),
            );
        }
        _ => unreachable!("clap rejects unknown subcommands"),
    }
    Ok(0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let code = if e.use_stderr() { USAGE_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand required");
    match execute(name, sub) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(USAGE_ERROR)
        }
    }
}
