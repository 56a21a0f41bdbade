//! The reduction from E3-LIN2: one switch per literal pair and twelve
//! items per equation.

use budget_nsw::gen::{gen_e3lin2, gen_hardness, literal_agent, E3Lin2Instance};
use budget_nsw::Result;

fn main() -> Result<()> {
    let single = E3Lin2Instance::new(3, vec![([0, 1, 2], true)])?;
    let inst = gen_hardness(&single)?;
    println!(
        "x1 + x2 + x3 = 1: {} agents, {} items, caps {:?}",
        inst.agents(),
        inst.items(),
        inst.caps()
    );
    for j in 0..inst.items() {
        let valued: Vec<String> = (0..inst.agents())
            .filter(|&i| inst.value(i, j) > 0)
            .map(|i| format!("a{}={}", i + 1, inst.value(i, j)))
            .collect();
        println!("item {:2}: {}", j + 1, valued.join(" "));
    }
    println!("literal x2 = true is agent {}", literal_agent(1, true) + 1);

    let lin = gen_e3lin2(6, 4, 11)?;
    let gadget = gen_hardness(&lin)?;
    let best = (0..1u32 << lin.variables())
        .map(|mask| {
            let a: Vec<bool> = (0..lin.variables()).map(|v| mask >> v & 1 == 1).collect();
            lin.satisfied(&a)
        })
        .max()
        .unwrap_or(0);
    println!(
        "random system: {} variables, {} equations, best assignment satisfies {best}; gadget has {} agents, {} items",
        lin.variables(),
        lin.equations().len(),
        gadget.agents(),
        gadget.items()
    );
    Ok(())
}
