//! Gradient-free minimizers for the variational loop.
//!
//! All three share an [`Evaluator`] that enforces the evaluation budget,
//! records every objective value and keeps the best point seen. Running out
//! of budget unwinds through `?` and is not an error for the caller.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Relative improvement below which a run counts as stalled.
pub const STALL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    NelderMead,
    Spsa,
    /// Linear-model trust-region search in the manner of COBYLA (no
    /// constraints).
    #[serde(rename = "cobyla-style")]
    CobylaStyle,
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "nelder-mead" => Ok(Self::NelderMead),
            "spsa" => Ok(Self::Spsa),
            "cobyla-style" | "cobyla" => Ok(Self::CobylaStyle),
            other => Err(format!("unknown optimizer {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stop {
    Budget,
    Converged,
    NonFinite(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Budget,
    Converged,
}

pub struct Evaluator<F> {
    f: F,
    budget: usize,
    pub trace: Vec<f64>,
    pub best_x: Vec<f64>,
    pub best_f: f64,
    history: Vec<f64>,
    window: usize,
}

impl<F: FnMut(&[f64]) -> f64> Evaluator<F> {
    pub fn new(f: F, budget: usize, dim: usize) -> Self {
        Self {
            f,
            budget,
            trace: Vec::new(),
            best_x: Vec::new(),
            best_f: f64::INFINITY,
            history: Vec::new(),
            window: 2 * dim.max(1),
        }
    }

    pub fn eval(&mut self, x: &[f64]) -> Result<f64, Stop> {
        if self.trace.len() >= self.budget {
            return Err(Stop::Budget);
        }
        let v = (self.f)(x);
        self.trace.push(v);
        if !v.is_finite() {
            return Err(Stop::NonFinite(v));
        }
        if v < self.best_f {
            self.best_f = v;
            self.best_x = x.to_vec();
        }
        Ok(v)
    }

    /// Marks the end of one optimizer iteration with the optimizer's own
    /// progress measure (simplex mean, current iterate value, ...); stops once
    /// no iteration in the last `2 * dim` improved on it by more than
    /// [`STALL_TOL`] (relative).
    pub fn end_iteration(&mut self, progress: f64) -> Result<(), Stop> {
        self.history.push(progress);
        let n = self.history.len();
        if n > self.window {
            let old = self.history[n - 1 - self.window];
            let recent = self.history[n - self.window..]
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            let gain = old - recent;
            if gain <= STALL_TOL * old.abs().max(1e-12) {
                return Err(Stop::Converged);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub initial_step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
        }
    }
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        ev: &mut Evaluator<F>,
        x0: &[f64],
    ) -> Result<(), Stop> {
        let n = x0.len();
        let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
        simplex.push((ev.eval(x0)?, x0.to_vec()));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            simplex.push((ev.eval(&x)?, x));
        }
        loop {
            simplex.sort_by(|a, b| a.0.total_cmp(&b.0));
            ev.end_iteration(simplex.iter().map(|v| v.0).sum::<f64>() / (n + 1) as f64)?;
            if simplex[n].0 - simplex[0].0 <= 1e-14 * simplex[0].0.abs().max(1.0)
                && diameter(&simplex) < 1e-10
            {
                return Err(Stop::Converged);
            }
            let centroid: Vec<f64> = (0..n)
                .map(|d| simplex[..n].iter().map(|(_, x)| x[d]).sum::<f64>() / n as f64)
                .collect();
            let worst = simplex[n].clone();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst.1)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let xr = along(self.reflection);
            let fr = ev.eval(&xr)?;
            if fr < simplex[0].0 {
                let xe = along(self.reflection * self.expansion);
                let fe = ev.eval(&xe)?;
                simplex[n] = if fe < fr { (fe, xe) } else { (fr, xr) };
                continue;
            }
            if fr < simplex[n - 1].0 {
                simplex[n] = (fr, xr);
                continue;
            }
            // contraction: outside if the reflection beat the worst point
            let (xc, fc) = if fr < worst.0 {
                let xc = along(self.reflection * self.contraction);
                let fc = ev.eval(&xc)?;
                (xc, fc)
            } else {
                let xc = along(-self.contraction);
                let fc = ev.eval(&xc)?;
                (xc, fc)
            };
            if fc < fr.min(worst.0) {
                simplex[n] = (fc, xc);
                continue;
            }
            // shrink toward the best vertex
            let best = simplex[0].1.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x: Vec<f64> = best
                    .iter()
                    .zip(&vertex.1)
                    .map(|(b, v)| b + self.shrink * (v - b))
                    .collect();
                *vertex = (ev.eval(&x)?, x);
            }
        }
    }
}

fn diameter(simplex: &[(f64, Vec<f64>)]) -> f64 {
    let best = &simplex[0].1;
    simplex
        .iter()
        .map(|(_, x)| {
            x.iter()
                .zip(best)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Simultaneous-perturbation stochastic approximation with gains
/// `a_k = a / (k + 1)^alpha` and `c_k = c / (k + 1)^gamma`.
#[derive(Debug, Clone, Copy)]
pub struct Spsa {
    pub a: f64,
    pub c: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl Default for Spsa {
    fn default() -> Self {
        Self {
            a: 0.1,
            c: 0.1,
            alpha: 0.602,
            gamma: 0.101,
        }
    }
}

impl Spsa {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        ev: &mut Evaluator<F>,
        x0: &[f64],
        rng: &mut impl Rng,
    ) -> Result<(), Stop> {
        let n = x0.len();
        let mut x = x0.to_vec();
        ev.eval(&x)?;
        for k in 0.. {
            let ak = self.a / ((k + 1) as f64).powf(self.alpha);
            let ck = self.c / ((k + 1) as f64).powf(self.gamma);
            let delta: Vec<f64> = (0..n)
                .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                .collect();
            let plus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v + ck * d).collect();
            let minus: Vec<f64> = x.iter().zip(&delta).map(|(v, d)| v - ck * d).collect();
            let diff = ev.eval(&plus)? - ev.eval(&minus)?;
            for (v, d) in x.iter_mut().zip(&delta) {
                *v -= ak * diff / (2.0 * ck * d);
            }
            let fx = ev.eval(&x)?;
            ev.end_iteration(fx)?;
        }
        unreachable!()
    }
}

/// Trust-region search on linear interpolation models built from `n + 1`
/// points, shrinking the radius whenever the model step fails to improve.
#[derive(Debug, Clone, Copy)]
pub struct CobylaStyle {
    pub rho_begin: f64,
    pub rho_end: f64,
}

impl Default for CobylaStyle {
    fn default() -> Self {
        Self {
            rho_begin: 0.25,
            rho_end: 1e-6,
        }
    }
}

impl CobylaStyle {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(
        &self,
        ev: &mut Evaluator<F>,
        x0: &[f64],
    ) -> Result<(), Stop> {
        let n = x0.len();
        let mut rho = self.rho_begin;
        let mut base = (ev.eval(x0)?, x0.to_vec());
        let mut points = self.poll(ev, &base.1, rho)?;
        loop {
            ev.end_iteration(ev.best_f)?;
            if rho < self.rho_end {
                return Err(Stop::Converged);
            }
            // Keep the best point as the model centre.
            if let Some(k) = (0..n).min_by(|&a, &b| points[a].0.total_cmp(&points[b].0)) {
                if points[k].0 < base.0 {
                    std::mem::swap(&mut points[k], &mut base);
                }
            }
            let Some(grad) = linear_model(&base, &points) else {
                points = self.poll(ev, &base.1, rho)?;
                continue;
            };
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm == 0.0 {
                rho *= 0.5;
                points = self.poll(ev, &base.1, rho)?;
                continue;
            }
            let trial: Vec<f64> = base
                .1
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - rho * g / norm)
                .collect();
            let ft = ev.eval(&trial)?;
            if ft < base.0 {
                // Replace the interpolation point farthest from the new centre.
                let far = (0..n)
                    .max_by(|&a, &b| {
                        dist(&points[a].1, &trial).total_cmp(&dist(&points[b].1, &trial))
                    })
                    .unwrap_or(0);
                points[far] = std::mem::replace(&mut base, (ft, trial));
            } else {
                rho *= 0.5;
                points = self.poll(ev, &base.1, rho)?;
            }
        }
    }

    fn poll<F: FnMut(&[f64]) -> f64>(
        &self,
        ev: &mut Evaluator<F>,
        centre: &[f64],
        rho: f64,
    ) -> Result<Vec<(f64, Vec<f64>)>, Stop> {
        (0..centre.len())
            .map(|i| {
                let mut x = centre.to_vec();
                x[i] += rho;
                Ok((ev.eval(&x)?, x))
            })
            .collect()
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Gradient of the affine function interpolating `base` and `points`.
fn linear_model(base: &(f64, Vec<f64>), points: &[(f64, Vec<f64>)]) -> Option<Vec<f64>> {
    let n = base.1.len();
    let mut m: Vec<Vec<f64>> = points
        .iter()
        .map(|(f, x)| {
            let mut row: Vec<f64> = x.iter().zip(&base.1).map(|(a, b)| a - b).collect();
            row.push(f - base.0);
            row
        })
        .collect();
    // Gaussian elimination with partial pivoting on the augmented system.
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-14 {
            return None;
        }
        m.swap(col, pivot);
        for r in col + 1..n {
            let factor = m[r][col] / m[col][col];
            let (upper, lower) = m.split_at_mut(r);
            for (x, y) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= factor * y;
            }
        }
    }
    let mut g = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * g[c]).sum();
        g[r] = (m[r][n] - s) / m[r][r];
    }
    Some(g)
}
