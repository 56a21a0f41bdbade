//! Text reports shared by the command-line front end and the examples.
//! Exact values are printed as `num/den`; floats, where shown, use 12
//! significant digits.

use std::fmt::Write as _;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::equilibrium::fptas::iteration_budget;
use crate::equilibrium::{FptasRun, VerifyReport};
use crate::instance::{Allocation, PerturbedMarket};
use crate::rational::{self, Rational};

/// First report line: the command and, unless suppressed, a Unix timestamp.
pub fn header(command: &str, timestamp: bool) -> String {
    if timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        format!("# budget-nsw {command} at {secs}\n")
    } else {
        format!("# budget-nsw {command}\n")
    }
}

/// `name exact (approx)`.
pub fn value_line(name: &str, r: &Rational) -> String {
    format!(
        "{name} {} ({})\n",
        rational::to_text(r),
        rational::display(r)
    )
}

/// `assign <j> <i>` per assigned item, 1-based.
pub fn assignment_lines(alloc: &Allocation) -> String {
    let mut s = String::new();
    if let Some(owner) = alloc.assignment() {
        for (j, o) in owner.iter().enumerate() {
            if let Some(i) = o {
                let _ = writeln!(s, "assign {} {}", j + 1, i + 1);
            }
        }
    }
    s
}

/// Prices, iteration counts and the logged iteration budget of a run.
pub fn run_summary(mk: &PerturbedMarket, run: &FptasRun) -> String {
    let mut s = String::new();
    for (j, p) in run.state.prices.iter().enumerate() {
        let _ = writeln!(s, "price {} {}", j + 1, rational::to_text(p));
    }
    let phases = run.trace.iter().filter(|t| t.kind.ends_iteration()).count();
    let _ = writeln!(s, "iterations {}", run.iterations());
    let _ = writeln!(s, "phases {phases}");
    let _ = writeln!(s, "detachments {}", run.detachments.len());
    let _ = writeln!(s, "releases {}", run.releases.len());
    if mk.epsilon > Rational::from_integer(0.into()) {
        let budget = iteration_budget(mk, &run.floor);
        let within = (run.iterations() as f64) <= budget;
        let _ = writeln!(
            s,
            "iteration_budget {budget:.12e} {}",
            if within { "within" } else { "exceeded" }
        );
    }
    s
}

pub fn trace_lines(run: &FptasRun) -> String {
    run.trace.iter().map(|t| t.line() + "\n").collect()
}

pub fn verify_lines(label: &str, report: &VerifyReport) -> String {
    report
        .to_string()
        .lines()
        .map(|l| format!("{label} {l}\n"))
        .collect()
}
