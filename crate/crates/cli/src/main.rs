use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use cutoff_lab::cutoff::{analyze, AnalysisReport, CertificateEntry, CutoffParams};
use cutoff_lab::harness::{emit_report, format_number as num, sweep, ReportFormat, SweepSpec};
use cutoff_lab::spectral::{chi_square_mixture, stationary_distribution, Generator};
use cutoff_lab::verify::{run_suite, Suite};
use cutoff_lab::{lemma31, ExpMixture, ParametricFamily};

/// Cutoff location, width and correction of exponential-mixture distances.
#[derive(Debug, Parser)]
#[command(name = "cutoff-lab", version)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Location, width, correction, conditions and certificates of a mixture.
    Analyze {
        /// Mixture JSON: {"terms": [{"a" | "log_a": .., "rho": ..}, ..]}
        #[arg(long)]
        mixture: PathBuf,
        /// Constant of the coefficient-growth condition a_i <= α A_{i-1}.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        /// Window offsets, repeated or comma-separated; lower certificates for
        /// c < 0, upper for c > 0.
        #[arg(long = "c", value_delimiter = ',', allow_hyphen_values = true)]
        c: Vec<f64>,
    },
    /// Parameters (and terms, when small enough) of a family member.
    Family {
        /// Short form such as `lemma31/const:1`, `single-ou`, `hypercube`,
        /// or a JSON descriptor.
        #[arg(long)]
        descriptor: String,
        #[arg(long)]
        n: u64,
        /// Also print the realized terms.
        #[arg(long)]
        terms: bool,
    },
    /// Runs a sweep and writes its report.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Report path; `.json` writes JSON, anything else CSV.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Chi-square distance of a reversible chain as an exponential mixture.
    Spectral {
        /// Chain JSON: {"states": N, "Q": [[..], ..]}
        #[arg(long)]
        chain: PathBuf,
        /// Starting state, 0-based.
        #[arg(long)]
        state: usize,
    },
    /// Runs a bundled acceptance suite.
    Verify {
        #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(Suite::NAMES))]
        suite: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Exit status of a completed run.
enum Outcome {
    Ok,
    AssertionFailed,
}

/// Families with at most this many terms print them without `--terms`.
const SMALL_MIXTURE: usize = 64;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::AssertionFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(raw) = std::env::var("CUTOFF_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("CUTOFF_LAB_THREADS={raw:?} is not a thread count"))?;
    if threads == 0 {
        bail!("CUTOFF_LAB_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    let json = cli.json;
    match cli.command {
        Command::Analyze { mixture, alpha, c } => {
            if alpha.is_nan() || alpha <= 0.0 {
                bail!("--alpha must be positive");
            }
            let m =
                ExpMixture::read_json(&mixture).with_context(|| format!("reading {}", mixture.display()))?;
            let report = analyze(&m, alpha, &c);
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_analysis(&report, &m, alpha);
            }
            Ok(Outcome::Ok)
        }
        Command::Family { descriptor, n, terms } => {
            let family = ParametricFamily::from_descriptor(&descriptor)?;
            print_family(&family, n, terms, json)?;
            Ok(Outcome::Ok)
        }
        Command::Sweep { spec, out, format } => {
            let spec = SweepSpec::read_json(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let format = match format {
                Some(Format::Csv) => ReportFormat::Csv,
                Some(Format::Json) => ReportFormat::Json,
                None => ReportFormat::from_path(&out),
            };
            let rows = sweep(&spec)?;
            emit_report(&rows, format, &out).with_context(|| format!("writing {}", out.display()))?;
            let failed: Vec<_> = rows.iter().filter(|r| r.is_fatal()).collect();
            println!("rows = {}", rows.len());
            println!("failed = {}", failed.len());
            for r in &failed {
                let why = r
                    .error
                    .clone()
                    .unwrap_or_else(|| format!("slack = {}", num(r.slack)));
                println!("  n = {}, c = {}: {why}", r.n, num(r.c));
            }
            println!("report = {}", out.display());
            Ok(if failed.is_empty() {
                Outcome::Ok
            } else {
                Outcome::AssertionFailed
            })
        }
        Command::Spectral { chain, state } => {
            let g = Generator::read_json(&chain).with_context(|| format!("reading {}", chain.display()))?;
            let m = chi_square_mixture(&g, state)?;
            if json {
                println!("{}", m.to_json_string());
            } else {
                let pi = stationary_distribution(&g)?;
                println!("states = {}", g.size());
                println!("start = {state}");
                println!("pi[start] = {}", num(pi[state]));
                println!("chi2(0) = {}", num(m.evaluate(0.0).exp()));
                print_terms(&m);
                match CutoffParams::from_mixture(&m) {
                    Ok(p) => print_params(&p),
                    Err(e) => println!("params: {e}"),
                }
            }
            Ok(Outcome::Ok)
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let results = run_suite(suite);
            if json {
                println!("{}", serde_json::to_string_pretty(&results)?);
            } else {
                for r in &results {
                    println!("{r}");
                }
            }
            Ok(if results.iter().all(|r| r.passed) {
                Outcome::Ok
            } else {
                Outcome::AssertionFailed
            })
        }
    }
}

fn print_params(p: &CutoffParams) {
    println!("t = {}", num(p.t));
    println!("w = {}", num(p.w));
    println!("r = {}", num(p.r));
    println!("argmax_index = {}", p.argmax_index);
}

fn print_terms(m: &ExpMixture) {
    println!("terms = {}", m.len());
    for (i, term) in m.terms().iter().enumerate() {
        println!(
            "  {:>4}  ln_a = {:<20} rho = {}",
            i + 1,
            num(term.log_a()),
            num(term.rho())
        );
    }
}

fn print_analysis(report: &AnalysisReport, m: &ExpMixture, alpha: f64) {
    println!("terms = {}", m.len());
    println!("t = {}", num(report.t));
    println!("w = {}", num(report.w));
    match report.r {
        Some(r) => println!("r = {}", num(r)),
        None => println!("r = undefined (rho_1 t <= 1)"),
    }
    println!("argmax_index = {}", report.argmax_index);
    println!(
        "condition t > 0: {}",
        if report.conditions.tn_positive {
            "ok"
        } else {
            "violated"
        }
    );
    println!(
        "condition alpha = {}: {}",
        num(alpha),
        if report.conditions.alpha.ok {
            "ok"
        } else {
            "violated"
        }
    );
    println!("condition peres: {} (needs a family)", report.conditions.peres);
    for entry in &report.certificates {
        match entry {
            CertificateEntry::Lower(l) => println!(
                "lower c = {}: eps = {}, i* = {}, t_eval = {}, ln_bound = {}, ln_floor = {}",
                num(l.c),
                num(l.epsilon),
                l.i_star,
                num(l.eval_time),
                num(l.log_bound),
                num(l.floor())
            ),
            CertificateEntry::Upper(u) => println!(
                "upper c = {}: l = {}, C = {}, t_eval = {}, ln_bound = {}",
                num(u.c),
                u.l_index,
                num(u.big_c),
                num(u.eval_time),
                num(u.log_bound)
            ),
            CertificateEntry::Failed { c, error } => println!("certificate c = {}: {error}", num(*c)),
        }
    }
}

fn print_family(family: &ParametricFamily, n: u64, with_terms: bool, json: bool) -> anyhow::Result<()> {
    let params = family.params(n);
    // the two-scale family is never materialized unless asked for
    let realizable = match family {
        ParametricFamily::Lemma31 { .. } => n <= lemma31::MAX_MATERIALIZE_N,
        _ => true,
    };
    let mixture = if with_terms {
        if !realizable {
            bail!("{family} at n = {n} has too many terms to list");
        }
        Some(family.mixture(n)?)
    } else if !matches!(family, ParametricFamily::Lemma31 { .. }) {
        Some(family.mixture(n)?).filter(|m| m.len() <= SMALL_MIXTURE)
    } else {
        None
    };

    if json {
        let mut out = serde_json::json!({ "family": family.label(), "n": n });
        match &params {
            Ok(p) => out["params"] = serde_json::to_value(p)?,
            Err(e) => out["params_error"] = e.to_string().into(),
        }
        if let Some(beta) = family.beta() {
            out["beta"] = beta.at(n)?.into();
        }
        if let Some(m) = &mixture {
            out["mixture"] = serde_json::from_str(&m.to_json_string())?;
        }
        println!("{}", serde_json::to_string_pretty(&out)?);
        return Ok(());
    }

    println!("family = {}", family.label());
    println!("n = {n}");
    if let Some(beta) = family.beta() {
        println!("beta = {}", num(beta.at(n)?));
    }
    match &params {
        Ok(p) => {
            print_params(p);
            println!("rho_1 t = {}", num(p.peres_product()));
        }
        Err(e) => println!("params: {e}"),
    }
    if let Some(m) = &mixture {
        print_terms(m);
    }
    Ok(())
}
