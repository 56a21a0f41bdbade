//! The rounding stage step by step: equilibrium, forest, normalization,
//! preprocessing, tree rounding and the per-tree lemma checks.

use budget_nsw::equilibrium::run_fptas;
use budget_nsw::gen::gen_random;
use budget_nsw::instance::{cap_valuations, perturb, to_market};
use budget_nsw::rational::{frac, to_f64};
use budget_nsw::rounding::{check_lemmas, flow_to_forest, normalize, preprocess, round};
use budget_nsw::Result;

fn main() -> Result<()> {
    let inst = cap_valuations(&gen_random(5, 7, 8, 16, 4)?);
    let mk = perturb(&to_market(&inst)?, &frac(1, 20))?.with_raised_caps();
    let run = run_fptas(&mk)?;

    let x = flow_to_forest(&run.state, &run.allocation)?;
    let norm = normalize(&mk, &run.state, &x)?;
    for i in 0..inst.agents() {
        let row: Vec<String> = x
            .row(i)
            .iter()
            .map(|v| format!("{:.3}", to_f64(v)))
            .collect();
        println!(
            "agent {} capped {} zero-price {} x [{}]",
            i + 1,
            norm.capped[i],
            norm.b0[i],
            row.join(" ")
        );
    }

    let forest = preprocess(&norm, &x)?;
    let rounding = round(&norm, &forest);
    for (tree, path) in forest.trees.iter().zip(&rounding.paths) {
        let one = |v: &[usize]| v.iter().map(|a| a + 1).collect::<Vec<_>>();
        println!(
            "tree root {} agents {:?} goods {:?} path agents {:?} goods {:?} child counts {:?}",
            tree.root + 1,
            one(&tree.agents),
            one(&tree.goods),
            one(&path.agents),
            one(&path.goods),
            path.child_counts
        );
    }
    let owner: Vec<usize> = rounding.owner.iter().map(|i| i + 1).collect();
    println!("owner of each item {owner:?}");
    print!("{}", check_lemmas(&norm, &forest, &rounding));
    Ok(())
}
