//! Stochastic QAOA: the PV distribution is amplitude-encoded into scenario
//! registers that control the `p`-dependent field rotations, so one circuit
//! evaluates the expected energy over all scenarios at once. Scenario qubits
//! get no mixer, hence branch-local constants only contribute unobservable
//! phases and are added back classically.

mod circuit;
pub mod optimizer;
mod sweep;

pub use circuit::{phase_layer, StochasticQaoa};
pub use optimizer::{OptimizerKind, Termination};
pub use sweep::{layer_sweep, LayerSummary, SweepRow, SweepTable};

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::DEFAULT_PENALTY;
use crate::error::{Error, Result};
use crate::model::InstanceSpec;
use crate::simulator::ShotCounts;
use optimizer::{CobylaStyle, Evaluator, NelderMead, Spsa, Stop};

pub const DEFAULT_SHOTS: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitStrategy {
    /// `gamma` rising linearly to `gamma_max`, `beta` falling to zero.
    AnnealingRamp,
    /// Uniform in `[0, pi)`.
    Random,
    /// Every angle 0.5.
    Constant,
}

impl std::str::FromStr for InitStrategy {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "annealing-ramp" | "annealing" => Ok(Self::AnnealingRamp),
            "random" => Ok(Self::Random),
            "constant" => Ok(Self::Constant),
            other => Err(format!("unknown init strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum EvalMode {
    Exact,
    Sampled { shots: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QaoaConfig {
    pub layers: usize,
    pub init: InitStrategy,
    pub gamma_max: f64,
    pub beta_max: f64,
    pub optimizer: OptimizerKind,
    pub eval_mode: EvalMode,
    pub max_evaluations: usize,
    pub seed: u64,
    pub penalty: f64,
    /// Store wall-clock time in results. Off by default so that reruns are
    /// byte-identical.
    pub record_timing: bool,
}

impl Default for QaoaConfig {
    fn default() -> Self {
        Self {
            layers: 1,
            init: InitStrategy::AnnealingRamp,
            gamma_max: 1.0,
            beta_max: 1.0,
            optimizer: OptimizerKind::NelderMead,
            eval_mode: EvalMode::Exact,
            max_evaluations: 2000,
            seed: 0,
            penalty: DEFAULT_PENALTY,
            record_timing: false,
        }
    }
}

impl QaoaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("layers must be at least 1".into()));
        }
        if self.max_evaluations == 0 {
            return Err(Error::Config("max_evaluations must be at least 1".into()));
        }
        if let EvalMode::Sampled { shots: 0 } = self.eval_mode {
            return Err(Error::Config("shots must be at least 1".into()));
        }
        if !(self.penalty > 0.0 && self.penalty.is_finite()) {
            return Err(Error::NonPositivePenalty(self.penalty));
        }
        if !(self.gamma_max.is_finite() && self.beta_max.is_finite()) {
            return Err(Error::Config(
                "gamma_max and beta_max must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Initial `(gammas, betas)` for `layers` layers.
pub fn init_params(
    strategy: InitStrategy,
    layers: usize,
    gamma_max: f64,
    beta_max: f64,
    rng: &mut impl Rng,
) -> (Vec<f64>, Vec<f64>) {
    match strategy {
        InitStrategy::AnnealingRamp => {
            let frac = |k: usize| (k + 1) as f64 / layers as f64;
            (
                (0..layers).map(|k| frac(k) * gamma_max).collect(),
                (0..layers).map(|k| (1.0 - frac(k)) * beta_max).collect(),
            )
        }
        InitStrategy::Random => {
            let mut draw = || {
                (0..layers)
                    .map(|_| rng.random_range(0.0..std::f64::consts::PI))
                    .collect()
            };
            let g = draw();
            let b = draw();
            (g, b)
        }
        InitStrategy::Constant => (vec![0.5; layers], vec![0.5; layers]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Params {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JProbability {
    pub j: Vec<i64>,
    pub probability: f64,
}

/// What the final state does within one scenario branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchReport {
    pub p: Vec<i64>,
    /// Probability of observing this scenario in the final state.
    pub probability: f64,
    /// Distribution of `j` conditional on this scenario.
    pub conditional_j: Vec<JProbability>,
    /// Most likely decision bitstring conditional on this scenario, decoded.
    pub modal_j: Vec<i64>,
    pub modal_buy: Vec<i64>,
    pub modal_sell: Vec<i64>,
    pub modal_probability: f64,
    pub balanced: bool,
    pub complementary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub layers: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub initial_params: Params,
    pub best_params: Params,
    pub initial_expectation: f64,
    pub best_expectation: f64,
    pub evaluations: usize,
    pub termination: Termination,
    pub cost_trace: Vec<f64>,
    pub decision_marginal: Vec<JProbability>,
    pub modal_j: Vec<i64>,
    pub feasibility_report: Vec<BranchReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shot_counts: Option<ShotCounts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

impl RunResult {
    pub fn probability_of(&self, j: &[i64]) -> f64 {
        self.decision_marginal
            .iter()
            .find(|e| e.j == j)
            .map_or(0.0, |e| e.probability)
    }
}

/// RNG streams derived from one seed.
fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const INIT_STREAM: u64 = 0;
const OPTIMIZER_STREAM: u64 = 1;
const SHOT_STREAM: u64 = 2;
const FINAL_STREAM: u64 = 3;

impl StochasticQaoa {
    /// Objective value at `params = [gammas..., betas...]`.
    fn objective_at(&self, params: &[f64], mode: EvalMode, rng: &mut ChaCha8Rng) -> Result<f64> {
        let (g, b) = params.split_at(params.len() / 2);
        match mode {
            EvalMode::Exact => self.expectation(g, b),
            EvalMode::Sampled { shots } => {
                Ok(self.sampled_expectation(g, b, shots, rng.random())?.0)
            }
        }
    }

    /// Exact objective, or a shot estimate seeded by `seed` in sampled mode.
    pub fn objective(&self, gammas: &[f64], betas: &[f64], config: &QaoaConfig) -> Result<f64> {
        let mut params = gammas.to_vec();
        params.extend_from_slice(betas);
        self.objective_at(
            &params,
            config.eval_mode,
            &mut stream(config.seed, SHOT_STREAM),
        )
    }

    /// One seeded optimization run.
    pub fn optimize(&self, config: &QaoaConfig) -> Result<RunResult> {
        config.validate()?;
        let started = Instant::now();
        let layers = config.layers;
        let (g0, b0) = init_params(
            config.init,
            layers,
            config.gamma_max,
            config.beta_max,
            &mut stream(config.seed, INIT_STREAM),
        );
        let mut x0 = g0.clone();
        x0.extend_from_slice(&b0);

        let mut shot_rng = stream(config.seed, SHOT_STREAM);
        let mut failure: Option<Error> = None;
        let objective = |x: &[f64]| match self.objective_at(x, config.eval_mode, &mut shot_rng) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        };
        let mut ev = Evaluator::new(objective, config.max_evaluations, x0.len());
        let outcome = match config.optimizer {
            OptimizerKind::NelderMead => NelderMead::default().minimize(&mut ev, &x0),
            OptimizerKind::Spsa => {
                Spsa::default().minimize(&mut ev, &x0, &mut stream(config.seed, OPTIMIZER_STREAM))
            }
            OptimizerKind::CobylaStyle => CobylaStyle::default().minimize(&mut ev, &x0),
        };
        let termination = match outcome {
            Ok(()) | Err(Stop::Converged) => Termination::Converged,
            Err(Stop::Budget) => Termination::Budget,
            Err(Stop::NonFinite(value)) => {
                drop(ev);
                return Err(failure.unwrap_or(Error::NonFinite {
                    value,
                    evaluation: 0,
                }));
            }
        };
        let Evaluator {
            trace,
            best_x,
            best_f,
            ..
        } = ev;
        let (gb, bb) = best_x.split_at(layers);
        let state = self.final_state(gb, bb)?;

        let (weights, shot_counts): (BTreeMap<u64, f64>, _) = match config.eval_mode {
            EvalMode::Exact => (
                state
                    .probabilities()
                    .into_iter()
                    .enumerate()
                    .filter(|(_, p)| *p > 0.0)
                    .map(|(z, p)| (z as u64, p))
                    .collect(),
                None,
            ),
            EvalMode::Sampled { shots } => {
                let counts =
                    ShotCounts::draw_with(&state, shots, &mut stream(config.seed, FINAL_STREAM));
                let w = counts
                    .counts
                    .iter()
                    .map(|(&z, &c)| (z, c as f64 / shots as f64))
                    .collect();
                (w, Some(counts))
            }
        };
        let (decision_marginal, modal_j, feasibility_report) = self.analyse(&weights);

        Ok(RunResult {
            layers,
            seed: config.seed,
            optimizer: config.optimizer,
            initial_params: Params {
                gamma: g0,
                beta: b0,
            },
            best_params: Params {
                gamma: gb.to_vec(),
                beta: bb.to_vec(),
            },
            initial_expectation: trace[0],
            best_expectation: best_f,
            evaluations: trace.len(),
            termination,
            cost_trace: trace,
            decision_marginal,
            modal_j,
            feasibility_report,
            shot_counts,
            wall_ms: config
                .record_timing
                .then(|| started.elapsed().as_secs_f64() * 1e3),
        })
    }

    /// Marginal over `j`, its mode, and per-scenario branch reports from a
    /// probability (or frequency) assignment over basis states.
    fn analyse(
        &self,
        weights: &BTreeMap<u64, f64>,
    ) -> (Vec<JProbability>, Vec<i64>, Vec<BranchReport>) {
        let inst = self.instance();
        let layout = self.layout();
        let mut marginal: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
        let mut branches: BTreeMap<Vec<i64>, BTreeMap<u64, f64>> = BTreeMap::new();
        for (&z, &w) in weights {
            *marginal
                .entry(layout.first_stage_of(z, inst))
                .or_insert(0.0) += w;
            *branches
                .entry(layout.scenario_of(z, inst))
                .or_default()
                .entry(z & layout.decision_mask())
                .or_insert(0.0) += w;
        }
        let modal_j = mode(&marginal);
        let decision_marginal = to_list(marginal);

        let reports = branches
            .into_iter()
            .map(|(p, decisions)| {
                let total: f64 = decisions.values().sum();
                let mut cond: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
                for (&x, &w) in &decisions {
                    *cond.entry(layout.first_stage_of(x, inst)).or_insert(0.0) += w / total;
                }
                let (&best_x, &best_w) = decisions
                    .iter()
                    .fold(None, |acc: Option<(&u64, &f64)>, (x, w)| match acc {
                        Some((_, bw)) if *w <= *bw => acc,
                        _ => Some((x, w)),
                    })
                    .expect("non-empty branch");
                let mut d = layout.decode(best_x, inst);
                d.p = p.clone();
                BranchReport {
                    probability: total,
                    conditional_j: to_list(cond),
                    modal_j: d.j.clone(),
                    modal_buy: d.buy.clone(),
                    modal_sell: d.sell.clone(),
                    modal_probability: best_w / total,
                    balanced: d.is_balanced(),
                    complementary: d.is_complementary(),
                    p,
                }
            })
            .collect();
        (decision_marginal, modal_j, reports)
    }
}

/// Most probable key; the lexicographically smallest wins ties.
fn mode(dist: &BTreeMap<Vec<i64>, f64>) -> Vec<i64> {
    let mut best: Option<(&Vec<i64>, f64)> = None;
    for (k, &v) in dist {
        match best {
            Some((_, bv)) if v <= bv => {}
            _ => best = Some((k, v)),
        }
    }
    best.map(|(k, _)| k.clone()).unwrap_or_default()
}

fn to_list(dist: BTreeMap<Vec<i64>, f64>) -> Vec<JProbability> {
    dist.into_iter()
        .map(|(j, probability)| JProbability { j, probability })
        .collect()
}

/// Compiles `instance` and runs one optimization.
pub fn optimize(instance: &InstanceSpec, config: &QaoaConfig) -> Result<RunResult> {
    config.validate()?;
    StochasticQaoa::new(instance, config.penalty)?.optimize(config)
}
