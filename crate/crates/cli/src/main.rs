use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use certopt::algorithms::Algorithm;
use certopt::harness::{
    check_all_rates, check_correspondence, check_identities, check_soundness, run_from,
    AlphaPolicy, CorrespondenceOptions, IterationTrace, RunConfig, RunStatus, VerificationReport,
};
use certopt::instances::{BuiltInstance, InstanceKind, InstanceSpec};

#[derive(Parser, Debug)]
#[command(
    name = "certopt",
    version,
    about = "Certified primal-dual averaging methods"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one method and write its trace as CSV.
    Run(RunArgs),
    /// Run a verification suite and write a JSON report.
    Verify(VerifyArgs),
    /// Iterations to an epsilon-certificate for several methods over an epsilon sweep.
    Compare(CompareArgs),
    /// Write a self-contained instance file.
    GenInstance(GenArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    algorithm: Algorithm,
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    epsilon: f64,
    /// Overrides the instance weight and the epsilon policy.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 1)]
    record_every: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace destination; defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write wall_ns as 0 so reruns are byte-identical.
    #[arg(long)]
    no_wall_time: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Correspondence,
    Rates,
    Soundness,
    Identities,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    suite: Suite,
    #[arg(long)]
    instance: PathBuf,
    /// Iterations per correspondence or rate check.
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Correspondence tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    /// Target accuracy of the soundness suite.
    #[arg(long, default_value_t = 1e-2)]
    epsilon: f64,
    /// Grid resolution of the soundness suite.
    #[arg(long, default_value_t = 1e-4)]
    resolution: f64,
    #[arg(long, default_value_t = 100_000)]
    max_iters: usize,
    /// Random samples of the identities suite.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report destination; defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[arg(long)]
    instance: PathBuf,
    /// Comma-separated method names, at least two.
    #[arg(
        long = "algorithm",
        alias = "algorithms",
        value_delimiter = ',',
        required = true
    )]
    algorithms: Vec<Algorithm>,
    #[arg(
        long = "epsilon",
        alias = "epsilons",
        value_delimiter = ',',
        default_value = "1e-1,1e-2,1e-3"
    )]
    epsilons: Vec<f64>,
    /// Fixed weight instead of alpha = epsilon / (2M).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1_000_000)]
    max_iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    n: usize,
    /// Number of buyers (fisher only); defaults to n.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "L")]
    lipschitz: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Game,
    Fisher,
    Quadbox,
}

impl From<KindArg> for InstanceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Game => InstanceKind::Game,
            KindArg::Fisher => InstanceKind::Fisher,
            KindArg::Quadbox => InstanceKind::Quadbox,
        }
    }
}

/// Writes through a sibling temporary file and a rename.
fn write_atomic(path: &Path, contents: &str) -> anyhow::Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| anyhow!("out: not a file path: {}", path.display()))?;
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        name.to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, contents)
        .with_context(|| format!("out: cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("out: cannot write {}", path.display()))
}

fn emit(out: Option<&Path>, contents: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => write_atomic(p, contents),
        None => {
            std::io::stdout().write_all(contents.as_bytes())?;
            Ok(())
        }
    }
}

fn load(path: &Path) -> anyhow::Result<(InstanceSpec, BuiltInstance)> {
    let spec = InstanceSpec::load(path).with_context(|| format!("instance {}", path.display()))?;
    let built = spec
        .build()
        .with_context(|| format!("instance {}", path.display()))?;
    Ok((spec, built))
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn trace_csv(policy: &str, rows: &[IterationTrace]) -> String {
    let mut s = format!("# {policy}\niter,phi,psi,cert_gap,pd_gap,wall_ns\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.iter,
            real(r.phi_at_test),
            opt_real(r.psi_at_dual),
            opt_real(r.cert_gap),
            opt_real(r.pd_gap),
            r.wall_ns
        );
    }
    s
}

fn cmd_run(a: RunArgs) -> anyhow::Result<ExitCode> {
    let (spec, built) = load(&a.instance)?;
    let mut cfg = RunConfig::new(a.algorithm, a.epsilon);
    cfg.max_iters = a.max_iters;
    cfg.record_every = a.record_every;
    cfg.seed = a.seed;
    cfg.record_wall_time = !a.no_wall_time;
    let source = match (a.alpha, spec.alpha) {
        (Some(v), _) => {
            cfg.alpha_policy = AlphaPolicy::Explicit(v);
            "flag"
        }
        (None, Some(v)) => {
            cfg.alpha_policy = AlphaPolicy::Explicit(v);
            "instance"
        }
        (None, None) => "epsilon",
    };
    let out = run_from(&built.oracles, &built.y0, &cfg)?;
    let policy = match source {
        "epsilon" => cfg.policy_label(out.alpha),
        s => format!("{s} alpha={:.16e}", out.alpha),
    };
    emit(a.out.as_deref(), &trace_csv(&policy, &out.traces))?;
    let gap = out.last.cert_gap.or(out.last.pd_gap);
    eprintln!(
        "{} {} after {} iterations, final gap {}",
        a.algorithm,
        out.status.as_str(),
        out.iterations(),
        gap.map(real).unwrap_or_else(|| "unavailable".into())
    );
    Ok(match out.status {
        RunStatus::BudgetExhausted => ExitCode::from(2),
        _ => ExitCode::SUCCESS,
    })
}

fn cmd_verify(a: VerifyArgs) -> anyhow::Result<ExitCode> {
    let (_, built) = load(&a.instance)?;
    let (p, y0) = (&built.oracles, &built.y0);
    let report: VerificationReport = match a.suite {
        Suite::Correspondence => {
            let opts = CorrespondenceOptions {
                k_max: a.iters,
                tol: a.tol,
                ..Default::default()
            };
            check_correspondence(p, y0, &opts)?
        }
        Suite::Rates => check_all_rates(p, y0, a.iters)?,
        Suite::Soundness => check_soundness(p, y0, a.epsilon, a.resolution, a.max_iters)?,
        Suite::Identities => check_identities(p, a.samples, a.seed)?,
    };
    emit(a.out.as_deref(), &(report.to_json()? + "\n"))?;
    for c in report.failures() {
        eprintln!(
            "FAIL {}: violation {:e} > tol {:e}",
            c.desc, c.violation, c.tol
        );
    }
    eprintln!(
        "{}: {}",
        report.suite,
        if report.overall { "pass" } else { "fail" }
    );
    Ok(if report.overall {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

/// Least-squares slope of `log iters` against `log(1/epsilon)`.
fn loglog_slope(points: &[(f64, usize)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, k)| *k > 0)
        .map(|&(e, k)| ((1.0 / e).ln(), (k as f64).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn cmd_compare(a: CompareArgs) -> anyhow::Result<ExitCode> {
    if a.algorithms.len() < 2 {
        bail!("algorithm: compare needs at least two methods");
    }
    if a.epsilons.is_empty() {
        bail!("epsilon: at least one value required");
    }
    let (_, built) = load(&a.instance)?;
    for alg in &a.algorithms {
        alg.check_compatible(&built.oracles)?;
    }
    let jobs: Vec<(usize, usize)> = (0..a.epsilons.len())
        .flat_map(|i| (0..a.algorithms.len()).map(move |j| (i, j)))
        .collect();
    let results: Vec<anyhow::Result<(usize, RunStatus)>> = jobs
        .par_iter()
        .map(|&(i, j)| {
            let mut cfg = RunConfig::new(a.algorithms[j], a.epsilons[i]);
            cfg.max_iters = a.max_iters;
            cfg.record_every = usize::MAX;
            cfg.record_wall_time = false;
            cfg.seed = a.seed;
            if let Some(v) = a.alpha {
                cfg.alpha_policy = AlphaPolicy::Explicit(v);
            }
            let out = run_from(&built.oracles, &built.y0, &cfg)?;
            Ok((out.iterations(), out.status))
        })
        .collect();
    let mut table = vec![vec![None; a.algorithms.len()]; a.epsilons.len()];
    let mut exhausted = false;
    for (&(i, j), r) in jobs.iter().zip(results) {
        let (iters, status) = r?;
        if status == RunStatus::BudgetExhausted {
            exhausted = true;
        } else {
            table[i][j] = Some(iters);
        }
    }
    let policy = match a.alpha {
        Some(v) => format!("flag alpha={v:.16e}"),
        None => "from_epsilon alpha=epsilon/(2M)".to_string(),
    };
    let mut csv = format!("# {policy}\nepsilon");
    for alg in &a.algorithms {
        let _ = write!(csv, ",{alg}");
    }
    csv.push('\n');
    for (i, row) in table.iter().enumerate() {
        csv.push_str(&real(a.epsilons[i]));
        for cell in row {
            csv.push(',');
            if let Some(k) = cell {
                let _ = write!(csv, "{k}");
            }
        }
        csv.push('\n');
    }
    emit(a.out.as_deref(), &csv)?;
    for (j, alg) in a.algorithms.iter().enumerate() {
        let pts: Vec<(f64, usize)> = a
            .epsilons
            .iter()
            .zip(&table)
            .filter_map(|(&e, row)| row[j].map(|k| (e, k)))
            .collect();
        match loglog_slope(&pts) {
            Some(s) => eprintln!("{alg}: log-log slope {s:.4}"),
            None => eprintln!("{alg}: slope unavailable"),
        }
    }
    Ok(if exhausted {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_gen(a: GenArgs) -> anyhow::Result<ExitCode> {
    let mut spec = InstanceSpec::new(a.kind.into(), a.n, a.seed);
    spec.m = a.m;
    spec.alpha = a.alpha;
    spec.lipschitz = a.lipschitz;
    let spec = spec.materialize()?;
    spec.build()?;
    emit(a.out.as_deref(), &(spec.to_json()? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("CERTOPT_THREADS") {
        let n: usize = v
            .parse()
            .map_err(|_| anyhow!("CERTOPT_THREADS: expected a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Compare(a) => cmd_compare(a),
        Command::GenInstance(a) => cmd_gen(a),
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts = [(1e-1, 10), (1e-2, 100), (1e-3, 1000)];
        assert!((loglog_slope(&pts).unwrap() - 1.0).abs() < 1e-12);
        assert!(loglog_slope(&[(1e-1, 3)]).is_none());
    }

    #[test]
    fn csv_leaves_unsupported_fields_empty() {
        let row = IterationTrace {
            iter: 3,
            phi_at_test: 0.5,
            psi_at_dual: None,
            cert_gap: Some(1.0),
            pd_gap: None,
            wall_ns: 0,
        };
        let csv = trace_csv("p", &[row]);
        assert_eq!(
            csv.lines().nth(2).unwrap(),
            "3,5.0000000000000000e-1,,1.0000000000000000e0,,0"
        );
    }
}
