//! The money-clearing test by one max-flow, against subset enumeration.

use budget_nsw::flow::money_clearing;
use budget_nsw::gen::{gen_fixture, gen_random_market, FixtureName};
use budget_nsw::oracle::brute_money_clearing;
use budget_nsw::Result;

fn main() -> Result<()> {
    for name in FixtureName::ALL {
        let fx = gen_fixture(name);
        println!("{name}: money clearing {}", money_clearing(&fx.market));
    }
    let mut clearing = 0;
    for seed in 0..200 {
        let market = gen_random_market(6, 6, 2 + seed % 4, seed)?;
        let flow = money_clearing(&market);
        assert_eq!(flow, brute_money_clearing(&market)?);
        clearing += usize::from(flow);
    }
    println!("200 random 6x6 markets: {clearing} clearing, max-flow agrees with enumeration");
    Ok(())
}
