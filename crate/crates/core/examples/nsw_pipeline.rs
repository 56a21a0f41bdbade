//! End to end: allocation instance, equilibrium, rounding, certificate,
//! compared with the brute-force optimum.
//!
//! cargo run --example nsw_pipeline [seed]

use budget_nsw::gen::gen_random;
use budget_nsw::instance::nsw_value;
use budget_nsw::oracle::brute_nsw;
use budget_nsw::rational::{frac, to_f64};
use budget_nsw::rounding::pipeline;
use budget_nsw::Result;

fn main() -> Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(3);
    let inst = gen_random(4, 6, 8, 10, seed)?;
    let out = pipeline(&inst, &frac(1, 4))?;
    print!("{}", out.certificate);

    let owner = out
        .allocation
        .assignment()
        .expect("rounded allocations are integral");
    for (j, o) in owner.iter().enumerate() {
        if let Some(i) = o {
            println!("item {} -> agent {}", j + 1, i + 1);
        }
    }

    let n = inst.agents() as f64;
    let opt = brute_nsw(&inst)?;
    let ours = nsw_value(&inst, &out.allocation);
    let mean = |p: f64| p.powf(1.0 / n);
    println!(
        "geometric means: rounded {:.4}, optimum {:.4}, ratio {:.4}",
        mean(to_f64(&ours.product)),
        mean(to_f64(&opt.product)),
        mean(to_f64(&opt.product)) / mean(to_f64(&ours.product))
    );
    Ok(())
}
