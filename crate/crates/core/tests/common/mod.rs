#![allow(dead_code)]

use budget_nsw::flow::money_clearing;
use budget_nsw::gen::gen_random;
use budget_nsw::instance::{cap_valuations, to_market, NswInstance};

/// Random money-clearing allocation instances with `n ≤ 5`, `n ≤ m ≤ 7`
/// and values at most 8, one per seed until `count` are collected.
pub fn corpus(count: usize) -> Vec<(u64, NswInstance)> {
    let mut out = Vec::with_capacity(count);
    let mut seed = 0u64;
    while out.len() < count {
        let n = 1 + (seed % 5) as usize;
        let m = n + ((seed / 5) % (8 - n as u64)) as usize;
        let cmax = 4 + seed % 13;
        let inst = gen_random(n, m, 8, cmax, 1000 + seed).expect("valid bounds");
        let market = to_market(&cap_valuations(&inst)).expect("capped");
        if money_clearing(&market) {
            out.push((seed, inst));
        }
        seed += 1;
    }
    out
}
