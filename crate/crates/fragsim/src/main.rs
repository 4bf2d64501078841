use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fragsim::{parse_measure, run_suite, ConfigFile, SuiteOptions};
use fragsim_core::run_replica;
use fragsim_core::trace_csv::{fmt_real, write_events, write_snapshots};

#[derive(Parser)]
#[command(
    name = "fragsim",
    version,
    about = "Ranked fragmentation simulator and verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate replicas and write event and snapshot CSV traces.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "fragsim_out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Run a verification suite and print its JSON report.
    Verify {
        suite: String,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        replicas: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
        /// Also write the JSON report to this file.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Print the tail nu(s2 >= x), its generalized inverse f(x) and the
    /// dust integral of a measure.
    Tail {
        #[arg(long)]
        measure: String,
        /// Comma-separated points.
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
}

enum Failure {
    Checks,
    Config(String),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate {
            config,
            out,
            seed,
            replicas,
        } => simulate(&config, &out, seed, replicas),
        Command::Verify {
            suite,
            config,
            seed,
            replicas,
            threads,
            report,
        } => verify(&suite, &config, seed, replicas, threads, report.as_deref()),
        Command::Tail { measure, x } => tail(&measure, &x),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {}", msg);
            ExitCode::from(2)
        }
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn simulate(path: &Path, out: &Path, seed: Option<u64>, replicas: Option<usize>) -> Result<(), Failure> {
    let cfg = ConfigFile::load(path).map_err(config_err)?;
    cfg.check_keys(&[]).map_err(config_err)?;
    let mut sim = cfg.sim_config().map_err(config_err)?;
    if let Some(s) = seed {
        sim.seed = s;
    }
    let n = replicas.or(cfg.usize_opt("replicas").map_err(config_err)?).unwrap_or(1);
    fs::create_dir_all(out).map_err(|e| config_err(format!("{}: {}", out.display(), e)))?;
    println!("replica,events,lambda1,dust,cap_hit");
    for r in 0..n as u64 {
        let traj = run_replica(&sim, r).map_err(config_err)?;
        let io = |e: io::Error| config_err(format!("writing traces: {}", e));
        let ev = File::create(out.join(format!("events_{:04}.csv", r))).map_err(io)?;
        write_events(&traj, BufWriter::new(ev)).map_err(io)?;
        let sn = File::create(out.join(format!("snapshots_{:04}.csv", r))).map_err(io)?;
        write_snapshots(&traj, BufWriter::new(sn)).map_err(io)?;
        let (l1, dust) = traj
            .snapshots
            .last()
            .map(|s| (s.state.lambda(1), s.state.dust()))
            .unwrap_or((f64::NAN, f64::NAN));
        println!(
            "{},{},{},{},{}",
            r,
            traj.event_count,
            fmt_real(l1),
            fmt_real(dust),
            traj.cap_hit
        );
    }
    Ok(())
}

fn verify(
    suite: &str,
    path: &Path,
    seed: Option<u64>,
    replicas: Option<usize>,
    threads: Option<usize>,
    report_path: Option<&Path>,
) -> Result<(), Failure> {
    let cfg = ConfigFile::load(path).map_err(config_err)?;
    let opts = SuiteOptions {
        seed,
        replicas,
        threads,
    };
    let report = run_suite(suite, &cfg, &opts).map_err(config_err)?;
    let json = report.to_json();
    print!("{}", json);
    if let Some(p) = report_path {
        fs::write(p, &json).map_err(|e| config_err(format!("{}: {}", p.display(), e)))?;
    }
    eprint!("{}", report.summary());
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn tail(measure: &str, grid: &str) -> Result<(), Failure> {
    let law = parse_measure(measure).map_err(config_err)?;
    let xs = grid
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| config_err(format!("`{}`: {}", s, e))))
        .collect::<Result<Vec<f64>, _>>()?;
    if xs.is_empty() {
        return Err(config_err("empty --x grid"));
    }
    let stdout = io::stdout();
    let mut w = stdout.lock();
    let io = |e: io::Error| config_err(e.to_string());
    writeln!(w, "x,tail_nu2,gen_inverse_f").map_err(io)?;
    for x in xs {
        writeln!(
            w,
            "{},{},{}",
            fmt_real(x),
            fmt_real(law.tail_nu2(x)),
            fmt_real(law.gen_inverse_f(x))
        )
        .map_err(io)?;
    }
    writeln!(w, "dust_integral,{}", fmt_real(law.dust_integral())).map_err(io)?;
    Ok(())
}
