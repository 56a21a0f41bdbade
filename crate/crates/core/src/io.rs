//! Line-oriented text formats. `#` starts a comment, tokens are separated
//! by whitespace and indices are 1-based.
//!
//! Instance files start with `nsw <n> <m>` followed by `cap <i> <c>` and
//! sparse `val <i> <j> <v>` lines, or with `market <n> <m>` followed by
//! `budget <i> <m>`, `ucap <i> <c>`, `ecap <j> <d>` and sparse
//! `util <i> <j> <u>` lines.
//!
//! State files start with `state <n> <m>` and hold `epsilon <r>`,
//! `price <j> <r>`, sparse `alloc <i> <j> <r>` and, for goods whose price
//! was set to zero, `shadow <j> <r>`. Rationals are written `num/den` or
//! as integers.

use std::fmt::Write as _;
use std::path::Path;

use num_traits::{Signed, Zero};

use crate::equilibrium::state::MarketState;
use crate::error::{Error, Result};
use crate::instance::{Allocation, MarketInstance, NswInstance};
use crate::rational::{self, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceFile {
    Nsw(NswInstance),
    Market(MarketInstance),
}

/// Non-empty lines with comments stripped, paired with 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(k, line)| {
        let body = line.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        (!tokens.is_empty()).then_some((k + 1, tokens))
    })
}

fn int_at(line: usize, tok: &str) -> Result<u64> {
    tok.parse().map_err(|_| {
        Error::parse(
            line,
            format!("expected a non-negative integer, got `{tok}`"),
        )
    })
}

fn rat_at(line: usize, tok: &str) -> Result<Rational> {
    rational::parse(tok)
        .ok_or_else(|| Error::parse(line, format!("expected a rational, got `{tok}`")))
}

fn index_at(line: usize, tok: &str, bound: usize, what: &str) -> Result<usize> {
    let k = int_at(line, tok)? as usize;
    if k == 0 || k > bound {
        return Err(Error::parse(
            line,
            format!("{what} index {k} outside 1..={bound}"),
        ));
    }
    Ok(k - 1)
}

fn arity(line: usize, tokens: &[&str], want: usize) -> Result<()> {
    if tokens.len() != want {
        return Err(Error::parse(
            line,
            format!(
                "`{}` takes {} fields, got {}",
                tokens[0],
                want - 1,
                tokens.len() - 1
            ),
        ));
    }
    Ok(())
}

/// Parses an instance file.
pub fn parse_instance(text: &str) -> Result<InstanceFile> {
    let mut it = lines(text);
    let Some((hline, htokens)) = it.next() else {
        return Err(Error::parse(1, "empty file"));
    };
    arity(hline, &htokens, 3)?;
    let n = int_at(hline, htokens[1])? as usize;
    let m = int_at(hline, htokens[2])? as usize;
    if n == 0 || m == 0 {
        return Err(Error::parse(hline, "sizes must be positive"));
    }
    match htokens[0] {
        "nsw" => {
            let mut caps: Vec<Option<u64>> = vec![None; n];
            let mut values = vec![vec![0u64; m]; n];
            for (line, t) in it {
                match t[0] {
                    "cap" => {
                        arity(line, &t, 3)?;
                        let i = index_at(line, t[1], n, "agent")?;
                        caps[i] = Some(int_at(line, t[2])?);
                    }
                    "val" => {
                        arity(line, &t, 4)?;
                        let i = index_at(line, t[1], n, "agent")?;
                        let j = index_at(line, t[2], m, "item")?;
                        values[i][j] = int_at(line, t[3])?;
                    }
                    other => return Err(Error::parse(line, format!("unknown record `{other}`"))),
                }
            }
            let caps = complete(caps, hline, "cap")?;
            NswInstance::new(values, caps)
                .map(InstanceFile::Nsw)
                .map_err(|e| Error::parse(hline, e.to_string()))
        }
        "market" => {
            let mut budgets = vec![None; n];
            let mut ucaps = vec![None; n];
            let mut ecaps = vec![None; m];
            let mut utils = vec![vec![0u64; m]; n];
            for (line, t) in it {
                match t[0] {
                    "budget" | "ucap" => {
                        arity(line, &t, 3)?;
                        let i = index_at(line, t[1], n, "buyer")?;
                        let v = Some(int_at(line, t[2])?);
                        if t[0] == "budget" {
                            budgets[i] = v;
                        } else {
                            ucaps[i] = v;
                        }
                    }
                    "ecap" => {
                        arity(line, &t, 3)?;
                        let j = index_at(line, t[1], m, "good")?;
                        ecaps[j] = Some(int_at(line, t[2])?);
                    }
                    "util" => {
                        arity(line, &t, 4)?;
                        let i = index_at(line, t[1], n, "buyer")?;
                        let j = index_at(line, t[2], m, "good")?;
                        utils[i][j] = int_at(line, t[3])?;
                    }
                    other => return Err(Error::parse(line, format!("unknown record `{other}`"))),
                }
            }
            let budgets = complete(budgets, hline, "budget")?;
            let ucaps = complete(ucaps, hline, "ucap")?;
            let ecaps = complete(ecaps, hline, "ecap")?;
            MarketInstance::new(budgets, utils, ucaps, ecaps)
                .map(InstanceFile::Market)
                .map_err(|e| Error::parse(hline, e.to_string()))
        }
        other => Err(Error::parse(hline, format!("unknown header `{other}`"))),
    }
}

fn complete(v: Vec<Option<u64>>, line: usize, what: &str) -> Result<Vec<u64>> {
    v.iter()
        .enumerate()
        .map(|(k, x)| x.ok_or_else(|| Error::parse(line, format!("missing `{what} {}`", k + 1))))
        .collect()
}

pub fn read_instance(path: &Path) -> Result<InstanceFile> {
    parse_instance(&std::fs::read_to_string(path)?)
}

pub fn write_nsw(inst: &NswInstance) -> String {
    let mut s = format!("nsw {} {}\n", inst.agents(), inst.items());
    for i in 0..inst.agents() {
        let _ = writeln!(s, "cap {} {}", i + 1, inst.cap(i));
    }
    for i in 0..inst.agents() {
        for j in 0..inst.items() {
            if inst.value(i, j) > 0 {
                let _ = writeln!(s, "val {} {} {}", i + 1, j + 1, inst.value(i, j));
            }
        }
    }
    s
}

pub fn write_market(market: &MarketInstance) -> String {
    let (n, m) = (market.buyers(), market.goods());
    let mut s = format!("market {n} {m}\n");
    for i in 0..n {
        let _ = writeln!(s, "budget {} {}", i + 1, market.budgets[i]);
    }
    for i in 0..n {
        let _ = writeln!(s, "ucap {} {}", i + 1, market.utility_caps[i]);
    }
    for j in 0..m {
        let _ = writeln!(s, "ecap {} {}", j + 1, market.earning_caps[j]);
    }
    for i in 0..n {
        for j in 0..m {
            if market.utilities[i][j] > 0 {
                let _ = writeln!(s, "util {} {} {}", i + 1, j + 1, market.utilities[i][j]);
            }
        }
    }
    s
}

pub fn write_instance(inst: &InstanceFile) -> String {
    match inst {
        InstanceFile::Nsw(i) => write_nsw(i),
        InstanceFile::Market(m) => write_market(m),
    }
}

/// Prices and allocation of an equilibrium, with the perturbation it was
/// computed for.
#[derive(Clone, Debug, PartialEq)]
pub struct StateFile {
    pub epsilon: Rational,
    pub prices: Vec<Rational>,
    pub allocation: Allocation,
    pub shadow_prices: Vec<Option<Rational>>,
}

impl StateFile {
    pub fn from_state(epsilon: &Rational, state: &MarketState) -> Self {
        StateFile {
            epsilon: epsilon.clone(),
            prices: state.prices.clone(),
            allocation: state.allocation(),
            shadow_prices: state.shadow_prices.clone(),
        }
    }

    /// Solver state with money flow `x·p` on positive prices; goods with a
    /// shadow price and the buyers holding them are frozen.
    pub fn to_state(&self) -> MarketState {
        let n = self.allocation.buyers();
        let m = self.allocation.goods();
        let mut flow = vec![vec![Rational::zero(); m]; n];
        for (i, row) in flow.iter_mut().enumerate() {
            for (j, f) in row.iter_mut().enumerate() {
                *f = self.allocation.get(i, j) * &self.prices[j];
            }
        }
        let mut state = MarketState::new(self.prices.clone(), flow);
        state.shadow_prices = self.shadow_prices.clone();
        for j in 0..m {
            state.frozen_goods[j] = self.shadow_prices[j].is_some();
        }
        for i in 0..n {
            let frozen =
                (0..m).any(|j| state.frozen_goods[j] && self.allocation.get(i, j).is_positive());
            if frozen {
                state.frozen_buyers[i] = true;
                state.frozen_alloc[i] = self.allocation.row(i).to_vec();
                state.flow[i] = vec![Rational::zero(); m];
            }
            state.zero_surplus[i] = true;
        }
        state
    }
}

pub fn write_state(state: &StateFile) -> String {
    let n = state.allocation.buyers();
    let m = state.allocation.goods();
    let mut s = format!("state {n} {m}\n");
    let _ = writeln!(s, "epsilon {}", rational::to_text(&state.epsilon));
    for (j, p) in state.prices.iter().enumerate() {
        let _ = writeln!(s, "price {} {}", j + 1, rational::to_text(p));
    }
    for (j, sp) in state.shadow_prices.iter().enumerate() {
        if let Some(sp) = sp {
            let _ = writeln!(s, "shadow {} {}", j + 1, rational::to_text(sp));
        }
    }
    for i in 0..n {
        for j in 0..m {
            let x = state.allocation.get(i, j);
            if !x.is_zero() {
                let _ = writeln!(s, "alloc {} {} {}", i + 1, j + 1, rational::to_text(x));
            }
        }
    }
    s
}

pub fn parse_state(text: &str) -> Result<StateFile> {
    let mut it = lines(text);
    let Some((hline, h)) = it.next() else {
        return Err(Error::parse(1, "empty file"));
    };
    arity(hline, &h, 3)?;
    if h[0] != "state" {
        return Err(Error::parse(hline, format!("unknown header `{}`", h[0])));
    }
    let n = int_at(hline, h[1])? as usize;
    let m = int_at(hline, h[2])? as usize;
    let mut epsilon = None;
    let mut prices: Vec<Option<Rational>> = vec![None; m];
    let mut shadow_prices = vec![None; m];
    let mut allocation = Allocation::zeros(n, m);
    for (line, t) in it {
        match t[0] {
            "epsilon" => {
                arity(line, &t, 2)?;
                epsilon = Some(rat_at(line, t[1])?);
            }
            "price" | "shadow" => {
                arity(line, &t, 3)?;
                let j = index_at(line, t[1], m, "good")?;
                let p = rat_at(line, t[2])?;
                if p.is_negative() {
                    return Err(Error::parse(line, "negative price"));
                }
                if t[0] == "price" {
                    prices[j] = Some(p);
                } else {
                    shadow_prices[j] = Some(p);
                }
            }
            "alloc" => {
                arity(line, &t, 4)?;
                let i = index_at(line, t[1], n, "buyer")?;
                let j = index_at(line, t[2], m, "good")?;
                allocation.set(i, j, rat_at(line, t[3])?);
            }
            other => return Err(Error::parse(line, format!("unknown record `{other}`"))),
        }
    }
    let prices = prices
        .into_iter()
        .enumerate()
        .map(|(j, p)| p.ok_or_else(|| Error::parse(hline, format!("missing `price {}`", j + 1))))
        .collect::<Result<Vec<_>>>()?;
    Ok(StateFile {
        epsilon: epsilon.unwrap_or_else(Rational::zero),
        prices,
        allocation,
        shadow_prices,
    })
}

pub fn read_state(path: &Path) -> Result<StateFile> {
    parse_state(&std::fs::read_to_string(path)?)
}
