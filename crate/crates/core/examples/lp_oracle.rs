//! The minimum-factor LPs met during a run, solved by the simplex and by
//! vertex enumeration.

use budget_nsw::equilibrium::{run_fptas_with, FptasOptions};
use budget_nsw::flow::lp;
use budget_nsw::gen::gen_random;
use budget_nsw::instance::{cap_valuations, perturb, to_market};
use budget_nsw::oracle::lp_oracle;
use budget_nsw::rational::{frac, to_text};
use budget_nsw::Result;

fn main() -> Result<()> {
    let inst = gen_random(3, 4, 6, 8, 50_004)?;
    let mk = perturb(&to_market(&cap_valuations(&inst))?, &frac(1, 2))?;
    let opts = FptasOptions {
        capture_lps: true,
        ..FptasOptions::default()
    };
    let run = run_fptas_with(&mk, &opts)?;
    for (k, sys) in run.captured.iter().enumerate() {
        let simplex = lp::solve(&sys.lp);
        let oracle = lp_oracle(&sys.lp)?;
        let show = |o: &lp::LpOutcome| o.value().map(to_text).unwrap_or_else(|| format!("{o:?}"));
        println!(
            "system {}: {} edges, {} constraints, simplex x = {}, enumeration x = {}",
            k + 1,
            sys.edges.len(),
            sys.lp.constraints.len(),
            show(&simplex),
            show(&oracle)
        );
        assert_eq!(simplex.value(), oracle.value());
    }
    Ok(())
}
