use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use budget_nsw::equilibrium::{
    allocation_at_prices, run_fptas, verify_approx_equilibrium, verify_equilibrium,
};
use budget_nsw::error::{Error, Result};
use budget_nsw::flow::money_clearing;
use budget_nsw::gen::{gen_e3lin2, gen_fixture, gen_hardness, gen_random, FixtureName};
use budget_nsw::instance::{
    cap_valuations, perturb, to_market, unperturbed, MarketInstance, NswInstance, PerturbedMarket,
};
use budget_nsw::io::{self, InstanceFile, StateFile};
use budget_nsw::oracle::{brute_equilibrium, brute_money_clearing, brute_nsw};
use budget_nsw::rational::{self, Rational};
use budget_nsw::report;
use budget_nsw::rounding::{self, pipeline};

#[derive(Parser)]
#[command(
    name = "budget-nsw",
    version,
    about = "Nash social welfare for budget-additive valuations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Omit the timestamp from the report header.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Write the main artifact (state, instance or report) here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an equilibrium of the perturbed market.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "1/4", value_parser = parse_rational)]
        epsilon: Rational,
        /// Solve the market itself (no perturbation); markets that are not
        /// money clearing are searched exhaustively.
        #[arg(long)]
        exact: bool,
        /// Print the event trace.
        #[arg(long)]
        trace: bool,
    },
    /// Run the full allocation pipeline with the given ε''.
    Pipeline {
        instance: PathBuf,
        #[arg(long, default_value = "1/4", value_parser = parse_rational)]
        epsilon: Rational,
        #[arg(long)]
        trace: bool,
    },
    /// Round an equilibrium state of an allocation instance.
    Round { instance: PathBuf, state: PathBuf },
    /// Check a state file against an instance.
    Verify { instance: PathBuf, state: PathBuf },
    /// Brute-force references.
    Oracle { instance: PathBuf },
    /// Generate an instance.
    Gen {
        #[arg(long, value_enum, default_value = "random")]
        kind: Kind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 8)]
        vmax: u64,
        #[arg(long, default_value_t = 20)]
        cmax: u64,
        #[arg(long)]
        fixture: Option<String>,
    },
    /// Pipeline over seeded random instances or a directory of instances.
    Bench {
        /// Instance files to run instead of generated ones.
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long, default_value = "1/4", value_parser = parse_rational)]
        epsilon: Rational,
        /// First seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of seeds.
        #[arg(long, default_value_t = 50)]
        seeds: u64,
        #[arg(long, default_value_t = 3)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 8)]
        vmax: u64,
        #[arg(long, default_value_t = 20)]
        cmax: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Random,
    Fixture,
    E3lin2,
}

fn parse_rational(s: &str) -> std::result::Result<Rational, String> {
    rational::parse(s).ok_or_else(|| format!("`{s}` is not p/q or an integer"))
}

/// Exit status of a command that ran to completion.
enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok((text, outcome)) => {
            print!("{text}");
            match outcome {
                Outcome::Pass => ExitCode::SUCCESS,
                Outcome::Fail => ExitCode::from(1),
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<(String, Outcome)> {
    let stamp = !cli.no_timestamp;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Solve {
            instance,
            epsilon,
            exact,
            trace,
        } => solve(instance, epsilon, *exact, *trace, stamp, out),
        Command::Pipeline {
            instance,
            epsilon,
            trace,
        } => run_pipeline(instance, epsilon, *trace, stamp, out),
        Command::Round { instance, state } => round(instance, state, stamp),
        Command::Verify { instance, state } => verify(instance, state, stamp),
        Command::Oracle { instance } => oracle(instance, stamp),
        Command::Gen {
            kind,
            seed,
            n,
            m,
            vmax,
            cmax,
            fixture,
        } => {
            let text = match kind {
                Kind::Random => io::write_nsw(&gen_random(*n, *m, *vmax, *cmax, *seed)?),
                Kind::E3lin2 => io::write_nsw(&gen_hardness(&gen_e3lin2(*n, *m, *seed)?)?),
                Kind::Fixture => {
                    let name = fixture
                        .as_deref()
                        .ok_or_else(|| Error::InvalidInstance("--fixture is required".into()))?;
                    fixture_file(FixtureName::parse(name)?)
                }
            };
            emit(text, out)
        }
        Command::Bench {
            dir,
            epsilon,
            seed,
            seeds,
            n,
            m,
            vmax,
            cmax,
        } => {
            let instances: Vec<(String, NswInstance)> = match dir {
                Some(d) => read_dir(d)?,
                None => (*seed..seed + seeds)
                    .map(|s| Ok((format!("seed{s}"), gen_random(*n, *m, *vmax, *cmax, s)?)))
                    .collect::<Result<_>>()?,
            };
            let (text, ok) = bench(&instances, epsilon, stamp)?;
            let (text, _) = emit(text, out)?;
            Ok((text, if ok { Outcome::Pass } else { Outcome::Fail }))
        }
    }
}

/// Writes `text` to `out` when given (returning a short note), else returns
/// it for stdout.
fn emit(text: String, out: Option<&Path>) -> Result<(String, Outcome)> {
    match out {
        Some(p) => {
            std::fs::write(p, &text)?;
            Ok((format!("wrote {}\n", p.display()), Outcome::Pass))
        }
        None => Ok((text, Outcome::Pass)),
    }
}

fn fixture_file(name: FixtureName) -> String {
    let f = gen_fixture(name);
    let mut s = format!("# fixture {name}\n");
    let scale: Vec<String> = f.utility_scale.iter().map(u64::to_string).collect();
    let _ = writeln!(s, "# utility scale per buyer: {}", scale.join(" "));
    for p in &f.expected_prices {
        let p: Vec<String> = p.iter().map(rational::to_text).collect();
        let _ = writeln!(s, "# expected prices: {}", p.join(" "));
    }
    let _ = writeln!(s, "# money clearing: {}", f.money_clearing);
    s + &io::write_market(&f.market)
}

fn read_dir(dir: &Path) -> Result<Vec<(String, NswInstance)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| match io::read_instance(&p)? {
            InstanceFile::Nsw(inst) => Ok((p.display().to_string(), inst)),
            InstanceFile::Market(_) => Err(Error::InvalidInstance(format!(
                "{} is a market; bench needs allocation instances",
                p.display()
            ))),
        })
        .collect()
}

/// The market a state file refers to: allocation instances are capped and
/// run with raised caps, as in the pipeline; `ε = 0` means unperturbed.
fn market_for(inst: &InstanceFile, epsilon: &Rational) -> Result<PerturbedMarket> {
    let (market, raise) = match inst {
        InstanceFile::Nsw(i) => (to_market(&cap_valuations(i))?, true),
        InstanceFile::Market(m) => (m.clone(), false),
    };
    if epsilon.is_zero() {
        return Ok(unperturbed(&market));
    }
    let mk = perturb(&market, epsilon)?;
    Ok(if raise { mk.with_raised_caps() } else { mk })
}

fn base_market(inst: &InstanceFile) -> Result<MarketInstance> {
    match inst {
        InstanceFile::Nsw(i) => to_market(&cap_valuations(i)),
        InstanceFile::Market(m) => Ok(m.clone()),
    }
}

fn solve(
    path: &Path,
    epsilon: &Rational,
    exact: bool,
    trace: bool,
    stamp: bool,
    out: Option<&Path>,
) -> Result<(String, Outcome)> {
    let inst = io::read_instance(path)?;
    if !exact && (!epsilon.is_positive() || *epsilon > Rational::from_integer(1.into())) {
        return Err(Error::InvalidInstance("epsilon must lie in (0, 1]".into()));
    }
    let eps = if exact {
        Rational::zero()
    } else {
        epsilon.clone()
    };
    let mk = market_for(&inst, &eps)?;
    let mut s = report::header("solve", stamp);
    let _ = writeln!(s, "epsilon {}", rational::to_text(&eps));
    let clearing = money_clearing(&mk.base);
    let _ = writeln!(s, "money_clearing {clearing}");

    if !clearing {
        if !exact {
            return Err(Error::NotMoneyClearing);
        }
        let Some(eq) = brute_equilibrium(&mk.base)? else {
            return Err(Error::NotMoneyClearing);
        };
        let _ = writeln!(s, "method exhaustive");
        let state = StateFile {
            epsilon: eps,
            prices: eq.prices.clone(),
            allocation: eq.allocation.clone(),
            shadow_prices: vec![None; eq.prices.len()],
        };
        return finish_solve(s, &mk, &state, out);
    }

    let run = run_fptas(&mk)?;
    let _ = writeln!(s, "method descending-price");
    s += &report::run_summary(&mk, &run);
    if trace {
        s += &report::trace_lines(&run);
    }
    let state = StateFile::from_state(&eps, &run.state);
    finish_solve(s, &mk, &state, out)
}

fn finish_solve(
    mut s: String,
    mk: &PerturbedMarket,
    state: &StateFile,
    out: Option<&Path>,
) -> Result<(String, Outcome)> {
    let state_text = io::write_state(state);
    let exact = verify_equilibrium(mk, &state.prices, &state.allocation);
    s += &report::verify_lines("exact", &exact);
    if state.epsilon.is_positive() {
        let approx =
            verify_approx_equilibrium(&mk.base, &state.prices, &state.allocation, &state.epsilon);
        s += &report::verify_lines("approx", &approx);
    }
    match out {
        Some(p) => {
            std::fs::write(p, &state_text)?;
            let _ = writeln!(s, "state written to {}", p.display());
        }
        None => s += &state_text,
    }
    if !exact.passed() {
        return Err(Error::Internal(format!(
            "solver output fails verification\n{s}"
        )));
    }
    Ok((s, Outcome::Pass))
}

fn run_pipeline(
    path: &Path,
    epsilon: &Rational,
    trace: bool,
    stamp: bool,
    out: Option<&Path>,
) -> Result<(String, Outcome)> {
    let InstanceFile::Nsw(inst) = io::read_instance(path)? else {
        return Err(Error::InvalidInstance(
            "pipeline needs an allocation (nsw) instance".into(),
        ));
    };
    let res = pipeline(&inst, epsilon)?;
    let mut s = report::header("pipeline", stamp);
    s += &res.certificate.to_string();
    if !res.certificate.opt_zero {
        let _ = writeln!(s, "observed_gap {:.12e}", res.certificate.observed_gap());
    }
    if let Some(d) = &res.details {
        s += &report::run_summary(&d.market, &d.run);
        if trace {
            s += &report::trace_lines(&d.run);
        }
        s += &d.lemmas.to_string();
    }
    s += &report::assignment_lines(&res.allocation);
    let passed = res.certificate.passed() && res.details.as_ref().is_none_or(|d| d.lemmas.passed());
    let (s, _) = emit(s, out)?;
    Ok((s, if passed { Outcome::Pass } else { Outcome::Fail }))
}

fn round(path: &Path, state_path: &Path, stamp: bool) -> Result<(String, Outcome)> {
    let inst = io::read_instance(path)?;
    let InstanceFile::Nsw(nsw) = &inst else {
        return Err(Error::InvalidInstance(
            "round needs an allocation (nsw) instance".into(),
        ));
    };
    let file = io::read_state(state_path)?;
    let mk = market_for(&inst, &file.epsilon)?;
    let report = verify_equilibrium(&mk, &file.prices, &file.allocation);
    let mut s = report::header("round", stamp);
    s += &report::verify_lines("input", &report);
    if !report.passed() {
        return Ok((s, Outcome::Fail));
    }
    let state = file.to_state();
    let forest_alloc = rounding::flow_to_forest(&state, &file.allocation)?;
    let norm = rounding::normalize(&mk, &state, &forest_alloc)?;
    let forest = rounding::preprocess(&norm, &forest_alloc)?;
    let rounded = rounding::round(&norm, &forest);
    let lemmas = rounding::check_lemmas(&norm, &forest, &rounded);
    let _ = writeln!(s, "trees {}", forest.trees.len());
    for (k, t) in forest.trees.iter().enumerate() {
        let agents: Vec<String> = t.agents.iter().map(|i| (i + 1).to_string()).collect();
        let goods: Vec<String> = t.goods.iter().map(|j| (j + 1).to_string()).collect();
        let _ = writeln!(
            s,
            "tree {} root {} zero_price {} agents {} goods {}",
            k + 1,
            t.root + 1,
            t.zero_price,
            agents.join(","),
            if goods.is_empty() {
                "-".into()
            } else {
                goods.join(",")
            }
        );
    }
    s += &lemmas.to_string();
    let alloc = rounded.allocation(nsw.agents());
    let value = budget_nsw::instance::nsw_value(&cap_valuations(nsw), &alloc);
    s += &report::value_line("nsw_product", &value.product);
    s += &report::assignment_lines(&alloc);
    Ok((
        s,
        if lemmas.passed() {
            Outcome::Pass
        } else {
            Outcome::Fail
        },
    ))
}

fn verify(path: &Path, state_path: &Path, stamp: bool) -> Result<(String, Outcome)> {
    let inst = io::read_instance(path)?;
    let file = io::read_state(state_path)?;
    let mk = market_for(&inst, &file.epsilon)?;
    let mut s = report::header("verify", stamp);
    let empty = file.allocation.matrix().iter().flatten().all(Zero::is_zero);
    let alloc = if empty && file.prices.iter().all(Signed::is_positive) {
        match allocation_at_prices(&mk, &file.prices)? {
            Some(a) => {
                let _ = writeln!(s, "allocation derived from prices");
                a
            }
            None => {
                let _ = writeln!(s, "no equilibrium allocation at these prices");
                let _ = writeln!(s, "verify fail");
                return Ok((s, Outcome::Fail));
            }
        }
    } else {
        file.allocation.clone()
    };
    let exact = verify_equilibrium(&mk, &file.prices, &alloc);
    s += &report::verify_lines("exact", &exact);
    let mut ok = exact.passed();
    if file.epsilon.is_positive() {
        let approx =
            verify_approx_equilibrium(&base_market(&inst)?, &file.prices, &alloc, &file.epsilon);
        s += &report::verify_lines("approx", &approx);
        ok &= approx.passed();
    }
    Ok((s, if ok { Outcome::Pass } else { Outcome::Fail }))
}

fn oracle(path: &Path, stamp: bool) -> Result<(String, Outcome)> {
    let inst = io::read_instance(path)?;
    let mut s = report::header("oracle", stamp);
    match &inst {
        InstanceFile::Nsw(nsw) => {
            let best = brute_nsw(nsw)?;
            let _ = writeln!(s, "n {}", best.agents);
            s += &report::value_line("opt_product", &best.product);
            s += &report::assignment_lines(&best.allocation());
        }
        InstanceFile::Market(market) => {
            let flow = money_clearing(market);
            let brute = brute_money_clearing(market)?;
            let _ = writeln!(s, "money_clearing flow {flow} subsets {brute}");
            match brute_equilibrium(market)? {
                Some(eq) => {
                    for (j, p) in eq.prices.iter().enumerate() {
                        let _ = writeln!(s, "price {} {}", j + 1, rational::to_text(p));
                    }
                    for i in 0..eq.allocation.buyers() {
                        for j in 0..eq.allocation.goods() {
                            let x = eq.allocation.get(i, j);
                            if !x.is_zero() {
                                let _ = writeln!(
                                    s,
                                    "alloc {} {} {}",
                                    i + 1,
                                    j + 1,
                                    rational::to_text(x)
                                );
                            }
                        }
                    }
                }
                None => {
                    let _ = writeln!(s, "no positive-price equilibrium");
                }
            }
            if flow != brute {
                return Err(Error::Internal("money-clearing tests disagree".into()));
            }
        }
    }
    Ok((s, Outcome::Pass))
}

struct BenchRow {
    name: String,
    n: usize,
    m: usize,
    iterations: usize,
    phases: usize,
    max_decrease: f64,
    opt_ratio: Option<f64>,
    margin: f64,
    pass: bool,
}

fn bench(
    instances: &[(String, NswInstance)],
    epsilon: &Rational,
    stamp: bool,
) -> Result<(String, bool)> {
    let rows: Vec<BenchRow> = instances
        .par_iter()
        .map(|(name, inst)| bench_one(name, inst, epsilon))
        .collect::<Result<_>>()?;
    let mut s = report::header("bench", stamp);
    let _ = writeln!(
        s,
        "{:<24} {:>3} {:>3} {:>6} {:>6} {:>12} {:>12} {:>12} ratio_check",
        "instance", "n", "m", "iters", "phases", "max_decr", "opt/nsw", "margin"
    );
    let mut all = true;
    for r in &rows {
        all &= r.pass;
        let ratio = r.opt_ratio.map_or("-".to_string(), |x| format!("{x:.6}"));
        let _ = writeln!(
            s,
            "{:<24} {:>3} {:>3} {:>6} {:>6} {:>12.6} {:>12} {:>12.6} {}",
            r.name,
            r.n,
            r.m,
            r.iterations,
            r.phases,
            r.max_decrease,
            ratio,
            r.margin,
            if r.pass { "pass" } else { "fail" }
        );
    }
    let _ = writeln!(s, "instances {} all_pass {all}", rows.len());
    Ok((s, all))
}

fn bench_one(name: &str, inst: &NswInstance, epsilon: &Rational) -> Result<BenchRow> {
    let res = pipeline(inst, epsilon)?;
    let cert = &res.certificate;
    let n = inst.agents();
    let (iterations, phases, max_decrease) = match &res.details {
        Some(d) => {
            let min_x = d
                .run
                .trace
                .iter()
                .map(|t| rational::to_f64(&t.x))
                .fold(1.0, f64::min);
            (
                d.run.iterations(),
                d.run
                    .trace
                    .iter()
                    .filter(|t| t.kind.ends_iteration())
                    .count(),
                1.0 / min_x,
            )
        }
        None => (0, 0, 1.0),
    };
    let opt_ratio = match brute_nsw(&res.instance) {
        Ok(best) if !cert.nsw_product.is_zero() => {
            Some(rational::to_f64(&(&best.product / &cert.nsw_product)).powf(1.0 / n as f64))
        }
        _ => None,
    };
    let margin = if cert.opt_zero || cert.upper_bound_product.is_zero() {
        f64::INFINITY
    } else {
        let lhs = &cert.nsw_product
            * rational::pow(&pipeline::rounding_factor(), n as u32)
            * rational::pow(
                &(Rational::from_integer(1.into()) + &cert.epsilon_prime),
                (n * n) as u32,
            );
        rational::to_f64(&(lhs / &cert.upper_bound_product)).powf(1.0 / n as f64)
    };
    Ok(BenchRow {
        name: name.to_string(),
        n,
        m: inst.items(),
        iterations,
        phases,
        max_decrease,
        opt_ratio,
        margin,
        pass: cert.passed(),
    })
}
