//! The product upper bound read off an equilibrium, against the optimum.

use budget_nsw::gen::gen_random;
use budget_nsw::oracle::brute_nsw;
use budget_nsw::rational::frac;
use budget_nsw::rational::to_f64;
use budget_nsw::rounding::pipeline;
use budget_nsw::Result;

fn main() -> Result<()> {
    println!("seed  n  m  OPT^n           bound           bound/OPT");
    for seed in 0..8 {
        let n = 2 + (seed % 3) as usize;
        let inst = gen_random(n, n + 2, 8, 9, 400 + seed)?;
        let out = pipeline(&inst, &frac(1, 4))?;
        if out.certificate.opt_zero {
            println!("{seed:4} {n:2} {:2}  not money clearing, optimum 0", n + 2);
            continue;
        }
        let opt = brute_nsw(&inst)?.product;
        let ub = &out.certificate.upper_bound_product;
        assert!(opt <= *ub);
        println!(
            "{seed:4} {n:2} {:2}  {:<15.6e} {:<15.6e} {:.4}",
            n + 2,
            to_f64(&opt),
            to_f64(ub),
            to_f64(&(ub / &opt))
        );
    }
    Ok(())
}
