//! End-to-end: allocation instance → perturbed market equilibrium →
//! integral allocation with a welfare certificate.

use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::equilibrium::{run_fptas, verify_equilibrium, FptasRun};
use crate::error::{Error, Result};
use crate::flow::money_clearing;
use crate::instance::{
    cap_valuations, nsw_value, perturb, to_market, Allocation, NswInstance, PerturbedMarket,
};
use crate::rational::{self, Rational};
use crate::rounding::forest::flow_to_forest;
use crate::rounding::normalize::{normalize, raw_upper_bound, NormalizedInstance};
use crate::rounding::tree::{
    all_positive, check_lemmas, preprocess, round, LemmaReport, Rounding, RoundingForest,
};

/// The published rational bound on the rounding factor `2e^{1/2e}`.
pub fn rounding_factor() -> Rational {
    rational::frac(2404, 1000)
}

/// What the pipeline proves about its output.
///
/// With `opt_zero` the market is not money clearing, so no allocation has
/// positive welfare and any allocation is optimal. Otherwise `ratio_check`
/// is `nsw·(2404/1000)^n·(1+ε')^{n²} ≥ upper_bound` and `tight_check` the
/// same with `(1+ε')^n`; both sides are n-th powers of geometric means.
#[derive(Clone, Debug, PartialEq)]
pub struct Certificate {
    pub nsw_product: Rational,
    pub upper_bound_product: Rational,
    pub agents: usize,
    pub epsilon_prime: Rational,
    pub opt_zero: bool,
    pub ratio_check: bool,
    pub tight_check: bool,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.opt_zero || self.ratio_check
    }

    /// `upper_bound / nsw` as a float for reports; infinite on zero welfare.
    pub fn observed_gap(&self) -> f64 {
        if self.nsw_product.is_zero() {
            return f64::INFINITY;
        }
        let r = &self.upper_bound_product / &self.nsw_product;
        rational::to_f64(&r).powf(1.0 / self.agents as f64)
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = |b: bool| if b { "pass" } else { "fail" };
        writeln!(f, "nsw_product {}", rational::to_text(&self.nsw_product))?;
        writeln!(
            f,
            "upper_bound_product {}",
            rational::to_text(&self.upper_bound_product)
        )?;
        writeln!(f, "n {}", self.agents)?;
        writeln!(
            f,
            "epsilon_prime {}",
            rational::to_text(&self.epsilon_prime)
        )?;
        if self.opt_zero {
            writeln!(f, "opt_zero true")?;
        }
        writeln!(f, "ratio_check {}", verdict(self.passed()))?;
        writeln!(
            f,
            "tight_check {}",
            verdict(self.opt_zero || self.tight_check)
        )
    }
}

/// Intermediate results of a money-clearing pipeline run.
#[derive(Clone, Debug)]
pub struct PipelineDetails {
    pub market: PerturbedMarket,
    pub run: FptasRun,
    pub forest_allocation: Allocation,
    pub normalized: NormalizedInstance,
    pub forest: RoundingForest,
    pub rounding: Rounding,
    pub lemmas: LemmaReport,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub instance: NswInstance,
    pub allocation: Allocation,
    pub certificate: Certificate,
    pub details: Option<PipelineDetails>,
}

/// Runs the whole procedure with `ε' = ε''/n`.
pub fn pipeline(inst: &NswInstance, epsilon: &Rational) -> Result<PipelineOutput> {
    if !epsilon.is_positive() {
        return Err(Error::InvalidInstance("epsilon must be positive".into()));
    }
    let capped = cap_valuations(inst);
    let n = capped.agents();
    let m = capped.items();
    let eps = epsilon / rational::uint(n as u64);
    let market = to_market(&capped)?;
    if !money_clearing(&market) {
        let owner: Vec<Option<usize>> = (0..m)
            .map(|j| Some((0..n).find(|&i| capped.value(i, j) > 0).unwrap_or(0)))
            .collect();
        let allocation = Allocation::from_assignment(n, &owner);
        let nsw = nsw_value(&capped, &allocation);
        return Ok(PipelineOutput {
            instance: capped,
            allocation,
            certificate: Certificate {
                nsw_product: nsw.product,
                upper_bound_product: Rational::zero(),
                agents: n,
                epsilon_prime: eps,
                opt_zero: true,
                ratio_check: true,
                tight_check: true,
            },
            details: None,
        });
    }

    let mk = perturb(&market, &eps)?.with_raised_caps();
    let run = run_fptas(&mk)?;
    let report = verify_equilibrium(&mk, &run.state.prices, &run.allocation);
    if !report.passed() {
        return Err(Error::internal(format!(
            "solver output is not an equilibrium: {}",
            report.violations.join("; ")
        )));
    }
    let forest_allocation = flow_to_forest(&run.state, &run.allocation)?;
    let normalized = normalize(&mk, &run.state, &forest_allocation)?;
    let forest = preprocess(&normalized, &forest_allocation)?;
    let rounding = round(&normalized, &forest);
    if !all_positive(&normalized, &rounding) {
        return Err(Error::internal(
            "an agent ends with zero value on a money-clearing instance",
        ));
    }
    let lemmas = check_lemmas(&normalized, &forest, &rounding);
    let allocation = rounding.allocation(n);
    let nsw = nsw_value(&capped, &allocation);
    let upper = raw_upper_bound(&normalized);
    let growth = Rational::one() + &eps;
    let scaled = &nsw.product * rational::pow(&rounding_factor(), n as u32);
    let ratio_check = &scaled * rational::pow(&growth, (n * n) as u32) >= upper;
    let tight_check = &scaled * rational::pow(&growth, n as u32) >= upper;
    Ok(PipelineOutput {
        instance: capped,
        allocation,
        certificate: Certificate {
            nsw_product: nsw.product,
            upper_bound_product: upper,
            agents: n,
            epsilon_prime: eps,
            opt_zero: false,
            ratio_check,
            tight_check,
        },
        details: Some(PipelineDetails {
            market: mk,
            run,
            forest_allocation,
            normalized,
            forest,
            rounding,
            lemmas,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    #[test]
    fn non_clearing_instance_has_opt_zero() {
        let inst = NswInstance::new(vec![vec![3], vec![2]], vec![5, 5]).unwrap();
        let out = pipeline(&inst, &frac(1, 4)).unwrap();
        assert!(out.certificate.opt_zero);
        assert!(out.certificate.passed());
        assert!(out.allocation.is_integral());
    }

    #[test]
    fn single_agent_takes_everything() {
        let inst = NswInstance::new(vec![vec![2, 0, 3]], vec![4]).unwrap();
        let out = pipeline(&inst, &frac(1, 4)).unwrap();
        assert_eq!(out.allocation.assignment().unwrap(), vec![Some(0); 3]);
        assert_eq!(out.certificate.nsw_product, int(4));
        assert!(out.certificate.passed());
    }

    #[test]
    fn diagonal_instance() {
        let inst = NswInstance::new(vec![vec![3, 1], vec![1, 3]], vec![10, 10]).unwrap();
        let out = pipeline(&inst, &frac(1, 4)).unwrap();
        assert_eq!(out.certificate.nsw_product, int(9));
        assert!(out.certificate.passed());
        assert!(out.details.unwrap().lemmas.passed());
    }
}
