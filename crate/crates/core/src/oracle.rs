//! Exact classical solution of the recourse program and the usual
//! stochastic-programming benchmarks (here-and-now, wait-and-see, expected
//! value). Everything here is plain enumeration and serves as ground truth
//! for the quantum pipeline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{InstanceSpec, Prices, Scenario, DEFAULT_SCENARIO_CAP};

/// Default cap on the number of first-stage vectors enumerated.
pub const DEFAULT_SEARCH_CAP: u128 = 1 << 24;

/// Absolute tolerance for currency comparisons (argmin ties, report checks).
pub const COST_TOL: f64 = 1e-9;

/// Intraday correction for one timestep and one scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecourseSplit {
    pub buy: i64,
    pub sell: i64,
}

/// Cost-minimal recourse: buy the shortfall or sell the surplus, never both.
pub fn recourse_split(j: i64, p: i64) -> RecourseSplit {
    RecourseSplit {
        buy: (j - p).max(0),
        sell: (p - j).max(0),
    }
}

/// First-stage plus recourse cost of plan `j` when `p` realizes.
pub fn scenario_cost(j: &[i64], p: &[i64], prices: &Prices) -> f64 {
    debug_assert_eq!(j.len(), p.len());
    j.iter()
        .zip(p)
        .map(|(&j, &p)| step_cost(j as f64, p as f64, prices))
        .sum()
}

/// [`scenario_cost`] with real-valued PV outputs, used for the mean scenario.
pub fn scenario_cost_real(j: &[i64], p: &[f64], prices: &Prices) -> f64 {
    debug_assert_eq!(j.len(), p.len());
    j.iter()
        .zip(p)
        .map(|(&j, &p)| step_cost(j as f64, p, prices))
        .sum()
}

fn step_cost(j: f64, p: f64, prices: &Prices) -> f64 {
    -prices.ev_price * j + prices.intraday_buy * (j - p).max(0.0)
        - prices.intraday_sell * (p - j).max(0.0)
}

#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub scenario_cap: usize,
    pub search_cap: u128,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            scenario_cap: DEFAULT_SCENARIO_CAP,
            search_cap: DEFAULT_SEARCH_CAP,
        }
    }
}

/// Classical solver bound to one instance. Joint scenarios are materialized
/// once at construction.
#[derive(Debug, Clone)]
pub struct Oracle<'a> {
    instance: &'a InstanceSpec,
    scenarios: Vec<Scenario>,
    limits: Limits,
}

impl<'a> Oracle<'a> {
    pub fn new(instance: &'a InstanceSpec) -> Result<Self> {
        Self::with_limits(instance, Limits::default())
    }

    pub fn with_limits(instance: &'a InstanceSpec, limits: Limits) -> Result<Self> {
        instance.validate()?;
        let scenarios = instance.joint_scenarios_capped(limits.scenario_cap)?;
        Ok(Self {
            instance,
            scenarios,
            limits,
        })
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    /// Expected total cost of plan `j` over all joint scenarios.
    pub fn expected_cost(&self, j: &[i64]) -> f64 {
        let prices = &self.instance.prices;
        self.scenarios
            .iter()
            .map(|s| s.probability * scenario_cost(j, &s.values, prices))
            .sum()
    }

    fn search_space(&self) -> Result<FirstStageBox> {
        let size = self
            .instance
            .steps
            .iter()
            .map(|s| s.first_stage.cardinality() as u128)
            .fold(1u128, |a, b| a.saturating_mul(b));
        if size > self.limits.search_cap {
            return Err(Error::SearchSpaceTooLarge {
                size,
                cap: self.limits.search_cap,
            });
        }
        Ok(FirstStageBox::new(self.instance))
    }

    /// Exhaustive argmin of `f` over the first-stage box, keeping the
    /// lexicographically smallest vector among ties.
    fn argmin(&self, mut f: impl FnMut(&[i64]) -> f64) -> Result<(Vec<i64>, f64)> {
        let mut best: Option<(Vec<i64>, f64)> = None;
        let mut space = self.search_space()?;
        while let Some(j) = space.next_point() {
            let v = f(j);
            match &best {
                Some((_, b)) if v >= b - COST_TOL => {}
                _ => best = Some((j.to_vec(), v)),
            }
        }
        Ok(best.expect("first-stage box is never empty"))
    }

    /// Here-and-now optimum `(j*, z*)`.
    pub fn solve_here_and_now(&self) -> Result<(Vec<i64>, f64)> {
        self.argmin(|j| self.expected_cost(j))
    }

    /// Probability-weighted cost of deciding with perfect foresight.
    pub fn solve_wait_and_see(&self) -> Result<f64> {
        self.search_space()?;
        let prices = &self.instance.prices;
        let steps = &self.instance.steps;
        // The scenario cost is a sum of per-timestep terms, each depending on
        // j_t alone, so the minimum over the box splits by timestep.
        Ok(self
            .scenarios
            .iter()
            .map(|s| {
                let best: f64 = steps
                    .iter()
                    .zip(&s.values)
                    .map(|(step, &p)| {
                        step.first_stage
                            .values()
                            .map(|j| step_cost(j as f64, p as f64, prices))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .sum();
                s.probability * best
            })
            .sum())
    }

    /// Plan that is optimal for the mean scenario, and its expected cost.
    pub fn solve_expected_value(&self) -> Result<(Vec<i64>, f64)> {
        let mean = self.instance.expected_scenario();
        let prices = &self.instance.prices;
        let (j, _) = self.argmin(|j| scenario_cost_real(j, &mean, prices))?;
        let eev = self.expected_cost(&j);
        Ok((j, eev))
    }

    pub fn benchmark_report(&self) -> Result<SolutionReport> {
        let (hn_j, hn_value) = self.solve_here_and_now()?;
        let ws_value = self.solve_wait_and_see()?;
        let (ev_j, eev_value) = self.solve_expected_value()?;
        Ok(SolutionReport {
            hn_j,
            hn_value,
            ws_value,
            ev_j,
            eev_value,
            evpi: hn_value - ws_value,
            vss: eev_value - hn_value,
        })
    }
}

/// Odometer over the integer box of first-stage vectors, in lexicographic
/// order (last timestep fastest).
struct FirstStageBox {
    lo: Vec<i64>,
    hi: Vec<i64>,
    current: Vec<i64>,
    started: bool,
    done: bool,
}

impl FirstStageBox {
    fn new(instance: &InstanceSpec) -> Self {
        let lo: Vec<i64> = instance.steps.iter().map(|s| s.first_stage.min()).collect();
        let hi = instance.steps.iter().map(|s| s.first_stage.max()).collect();
        Self {
            current: lo.clone(),
            lo,
            hi,
            started: false,
            done: false,
        }
    }

    fn next_point(&mut self) -> Option<&[i64]> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.current);
        }
        for t in (0..self.current.len()).rev() {
            if self.current[t] < self.hi[t] {
                self.current[t] += 1;
                return Some(&self.current);
            }
            self.current[t] = self.lo[t];
        }
        self.done = true;
        None
    }
}

/// Classical benchmark bundle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub hn_j: Vec<i64>,
    pub hn_value: f64,
    pub ws_value: f64,
    pub ev_j: Vec<i64>,
    pub eev_value: f64,
    pub evpi: f64,
    pub vss: f64,
}

impl SolutionReport {
    /// `ws <= hn <= eev` within [`COST_TOL`].
    pub fn is_consistent(&self) -> bool {
        self.ws_value <= self.hn_value + COST_TOL && self.hn_value <= self.eev_value + COST_TOL
    }
}

/// Convenience wrapper: validate, enumerate and report with default limits.
pub fn benchmark_report(instance: &InstanceSpec) -> Result<SolutionReport> {
    Oracle::new(instance)?.benchmark_report()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{FirstStageVar, ScenarioDistribution, Timestep};

    const REFERENCE: Prices = Prices {
        ev_price: 0.25,
        intraday_buy: 0.4,
        intraday_sell: 0.1,
    };

    /// Cheapest (buy, sell) pair satisfying `j - buy + sell = p`, by search.
    fn brute_split(j: i64, p: i64, bound: i64) -> (RecourseSplit, f64) {
        let mut best = None;
        for buy in 0..=bound {
            for sell in 0..=bound {
                if j - buy + sell != p {
                    continue;
                }
                let cost = -REFERENCE.ev_price * j as f64 + REFERENCE.intraday_buy * buy as f64
                    - REFERENCE.intraday_sell * sell as f64;
                match best {
                    Some((_, c)) if cost >= c => {}
                    _ => best = Some((RecourseSplit { buy, sell }, cost)),
                }
            }
        }
        best.unwrap()
    }

    #[test]
    fn split_examples_match_brute_force() {
        assert_eq!(brute_split(2, 3, 3).0, RecourseSplit { buy: 0, sell: 1 });
        assert_eq!(brute_split(3, 1, 3).0, RecourseSplit { buy: 2, sell: 0 });
        assert_eq!(recourse_split(2, 3), RecourseSplit { buy: 0, sell: 1 });
        assert_eq!(recourse_split(2, 2), RecourseSplit { buy: 0, sell: 0 });
        assert_eq!(recourse_split(3, 1), RecourseSplit { buy: 2, sell: 0 });
    }

    #[test]
    fn split_satisfies_balance_and_complementarity() {
        for j in -64..=64 {
            for p in -64..=64 {
                let s = recourse_split(j, p);
                assert_eq!(j - s.buy + s.sell, p);
                assert_eq!(s.buy * s.sell, 0);
                assert!(s.buy >= 0 && s.sell >= 0);
            }
        }
    }

    #[test]
    fn scenario_cost_equals_brute_force_minimum() {
        for j in 0..=7 {
            for p in 0..=7 {
                let (_, brute) = brute_split(j, p, 16);
                let closed = scenario_cost(&[j], &[p], &REFERENCE);
                assert!((brute - closed).abs() < 1e-12, "j={j} p={p}");
            }
        }
    }

    #[test]
    fn scenario_cost_examples() {
        assert!((scenario_cost(&[2], &[1], &REFERENCE) - (-0.10)).abs() < 1e-12);
        assert_eq!(scenario_cost(&[0], &[0], &REFERENCE), 0.0);
        assert!((scenario_cost(&[2], &[3], &REFERENCE) - (-0.60)).abs() < 1e-12);
    }

    fn point_mass(value: i64) -> InstanceSpec {
        InstanceSpec::new(
            REFERENCE,
            vec![Timestep {
                first_stage: FirstStageVar::new(2, 0),
                scenarios: ScenarioDistribution::point_mass(value),
                recourse_bits: 2,
            }],
        )
    }

    #[test]
    fn here_and_now_examples() {
        let inst = InstanceSpec::reference();
        let oracle = Oracle::new(&inst).unwrap();
        let (j, z) = oracle.solve_here_and_now().unwrap();
        assert_eq!(j, vec![2]);
        assert!((z + 0.45).abs() < 1e-9);

        let pm = point_mass(2);
        let (j, z) = Oracle::new(&pm).unwrap().solve_here_and_now().unwrap();
        assert_eq!(j, vec![2]);
        assert!((z + 0.5).abs() < 1e-9);

        let mut fixed = InstanceSpec::reference();
        fixed.steps[0].first_stage = FirstStageVar::new(0, 0);
        let (j, z) = Oracle::new(&fixed).unwrap().solve_here_and_now().unwrap();
        assert_eq!(j, vec![0]);
        assert!((z + 0.21).abs() < 1e-9);
    }

    #[test]
    fn ties_prefer_lexicographically_smallest() {
        // Equal buy and EV prices make every j >= p equally good.
        let mut inst = point_mass(1);
        inst.prices = Prices::new(0.25, 0.25 + 1e-12, 0.1);
        let (j, _) = Oracle::new(&inst).unwrap().solve_here_and_now().unwrap();
        assert_eq!(j, vec![1]);
    }

    #[test]
    fn point_mass_benchmarks_collapse() {
        let pm = point_mass(2);
        let r = benchmark_report(&pm).unwrap();
        assert!((r.ws_value - r.hn_value).abs() < 1e-12);
        assert!((r.eev_value - r.hn_value).abs() < 1e-12);
        assert!(r.evpi.abs() < 1e-12 && r.vss.abs() < 1e-12);
    }

    #[test]
    fn expected_value_solution() {
        let inst = InstanceSpec::reference();
        let (j, eev) = Oracle::new(&inst).unwrap().solve_expected_value().unwrap();
        assert_eq!(j, vec![2]);
        assert!((eev + 0.45).abs() < 1e-9);
    }

    #[test]
    fn search_cap_is_enforced() {
        let inst = InstanceSpec::reference();
        let limits = Limits {
            scenario_cap: 10,
            search_cap: 3,
        };
        let oracle = Oracle::with_limits(&inst, limits).unwrap();
        assert!(matches!(
            oracle.solve_here_and_now(),
            Err(Error::SearchSpaceTooLarge { size: 4, cap: 3 })
        ));
        assert!(oracle.solve_wait_and_see().is_err());
    }

    #[test]
    fn invalid_instance_is_rejected() {
        let mut inst = InstanceSpec::reference();
        inst.prices.intraday_sell = 0.5;
        assert!(matches!(Oracle::new(&inst), Err(Error::Invalid(_))));
    }

    #[test]
    fn report_serializes_with_fixed_names() {
        let r = benchmark_report(&InstanceSpec::reference()).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        for k in [
            "hn_j",
            "hn_value",
            "ws_value",
            "ev_j",
            "eev_value",
            "evpi",
            "vss",
        ] {
            assert!(keys.contains(&k.to_string()), "{k}");
        }
        assert_eq!(keys.len(), 7);
    }
}
