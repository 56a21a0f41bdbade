//! Writing an instance and a solved state in the text formats and reading
//! them back.

use budget_nsw::equilibrium::{run_fptas, verify_equilibrium};
use budget_nsw::gen::gen_random;
use budget_nsw::instance::{cap_valuations, perturb, to_market};
use budget_nsw::io::{self, InstanceFile, StateFile};
use budget_nsw::rational::frac;
use budget_nsw::Result;

fn main() -> Result<()> {
    let inst = gen_random(2, 3, 5, 6, 9)?;
    let text = io::write_nsw(&inst);
    print!("{text}");
    let InstanceFile::Nsw(back) = io::parse_instance(&text)? else {
        unreachable!("an nsw header parses as an nsw instance");
    };
    assert_eq!(back, inst);

    let eps = frac(1, 2);
    let mk = perturb(&to_market(&cap_valuations(&inst))?, &eps)?;
    let run = run_fptas(&mk)?;
    let state = io::write_state(&StateFile::from_state(&eps, &run.state));
    print!("{state}");

    let read = io::parse_state(&state)?.to_state();
    let ok = verify_equilibrium(&mk, &read.prices, &read.allocation()).passed();
    println!("state read back is an equilibrium: {ok}");
    Ok(())
}
