//! Classical minimizers: L-BFGS with a strong-Wolfe line search, mini-batch
//! SGD, and a seeded multi-restart driver.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LbfgsConfig {
    /// Number of stored correction pairs.
    pub memory: usize,
    pub max_iterations: usize,
    /// Stop once the gradient 2-norm drops to this value.
    pub grad_tolerance: f64,
    /// Stop once the relative cost decrease of an accepted step falls below this.
    pub cost_tolerance: f64,
    pub c1: f64,
    pub c2: f64,
    /// Function evaluations allowed per line search.
    pub max_line_search: usize,
}

impl Default for LbfgsConfig {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iterations: 500,
            grad_tolerance: 1e-6,
            cost_tolerance: f64::EPSILON * 1e7,
            c1: 1e-4,
            c2: 0.9,
            max_line_search: 40,
        }
    }
}

impl LbfgsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.memory == 0 {
            return Err(Error::invalid("L-BFGS memory must be ≥ 1"));
        }
        if !(0.0 < self.c1 && self.c1 < self.c2 && self.c2 < 1.0) {
            return Err(Error::invalid(format!(
                "Wolfe constants need 0 < c1 < c2 < 1, got c1 = {}, c2 = {}",
                self.c1, self.c2
            )));
        }
        if self.max_line_search == 0 {
            return Err(Error::invalid("line search needs at least one evaluation"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Full-batch gradient norm under which the run is reported as converged.
    pub grad_tolerance: f64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            batch_size: 20,
            epochs: 100,
            seed: 0,
            grad_tolerance: 1e-6,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be ≥ 1"));
        }
        Ok(())
    }
}

/// Outcome of one minimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub params: Vec<f64>,
    pub cost: f64,
    /// Cost after each accepted L-BFGS step or each SGD epoch, starting with the initial cost.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

struct Probe {
    step: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, kept
/// inside the middle 80% of the interval; bisection otherwise.
fn cubic_step(a: f64, fa: f64, da: f64, b: f64, fb: f64, db: f64) -> f64 {
    let d1 = da + db - 3.0 * (fa - fb) / (a - b);
    let disc = d1 * d1 - da * db;
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let margin = 0.1 * (hi - lo);
    if disc >= 0.0 {
        let d2 = (b - a).signum() * disc.sqrt();
        let t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
        if t.is_finite() && t >= lo + margin && t <= hi - margin {
            return t;
        }
    }
    0.5 * (a + b)
}

/// Strong-Wolfe line search along `dir`. Returns `None` when no acceptable
/// step is found within the evaluation budget.
#[allow(clippy::too_many_arguments)]
fn wolfe_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    slope0: f64,
    dir: &[f64],
    first_step: f64,
    cfg: &LbfgsConfig,
    evaluations: &mut usize,
) -> Result<Option<Probe>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut probe = |step: f64, evaluations: &mut usize| -> Result<Probe> {
        let xs: Vec<f64> = x.iter().zip(dir).map(|(xi, di)| xi + step * di).collect();
        let (fs, gs) = f(&xs)?;
        *evaluations += 1;
        let slope = dot(&gs, dir);
        Ok(Probe {
            step,
            x: xs,
            f: fs,
            g: gs,
            slope,
        })
    };
    let armijo = |p: &Probe| p.f <= f0 + cfg.c1 * p.step * slope0 && p.f.is_finite();
    let curvature = |p: &Probe| p.slope.abs() <= -cfg.c2 * slope0;

    let mut budget = cfg.max_line_search;
    let mut prev = Probe {
        step: 0.0,
        x: x.to_vec(),
        f: f0,
        g: Vec::new(),
        slope: slope0,
    };
    let mut step = first_step;
    let mut first = true;
    let (mut lo, mut hi) = loop {
        if budget == 0 {
            return Ok(None);
        }
        budget -= 1;
        let cur = probe(step, evaluations)?;
        if !armijo(&cur) || (!first && cur.f >= prev.f) {
            break (prev, cur);
        }
        if curvature(&cur) {
            return Ok(Some(cur));
        }
        if cur.slope >= 0.0 {
            break (cur, prev);
        }
        first = false;
        step = cur.step * 2.0;
        prev = cur;
    };

    // zoom: lo satisfies sufficient decrease and has the lower cost
    while budget > 0 {
        budget -= 1;
        let hi_f = if hi.f.is_finite() { hi.f } else { f64::MAX };
        let t = if hi.f.is_finite() {
            cubic_step(lo.step, lo.f, lo.slope, hi.step, hi_f, hi.slope)
        } else {
            0.5 * (lo.step + hi.step)
        };
        if (t - lo.step).abs() <= f64::EPSILON * t.abs().max(1.0) {
            break;
        }
        let cur = probe(t, evaluations)?;
        if !armijo(&cur) || cur.f >= lo.f {
            hi = cur;
        } else {
            if curvature(&cur) {
                return Ok(Some(cur));
            }
            if cur.slope * (hi.step - lo.step) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
    // Budget exhausted: fall back to the best point with sufficient decrease.
    if lo.step > 0.0 && !lo.g.is_empty() {
        return Ok(Some(lo));
    }
    Ok(None)
}

/// Limited-memory BFGS. `f` returns the cost and its gradient.
///
/// Stops when the gradient norm reaches `grad_tolerance` or an accepted step
/// lowers the cost by less than `cost_tolerance` (relative), both reported as
/// converged; otherwise runs to `max_iterations`. A failed line search ends
/// the run with the best point so far and `converged = false`.
pub fn lbfgs_minimize<F>(mut f: F, x0: &[f64], cfg: &LbfgsConfig) -> Result<TrainResult>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    cfg.validate()?;
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x)?;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "objective is not finite at the starting point ({fx})"
        )));
    }
    let mut evaluations = 1;
    let mut trace = vec![fx];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.memory);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iterations {
        if norm(&g) <= cfg.grad_tolerance {
            converged = true;
            break;
        }

        // two-loop recursion
        let mut q = g.clone();
        let mut coeffs = Vec::with_capacity(pairs.len());
        for (s, y, rho) in pairs.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            coeffs.push(a);
        }
        let gamma = pairs.back().map_or(1.0, |(s, y, _)| dot(s, y) / dot(y, y));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in pairs.iter().zip(coeffs.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope.is_nan() || slope >= 0.0 {
            pairs.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
        }
        let first_step = if pairs.is_empty() {
            (1.0 / norm(&g)).min(1.0)
        } else {
            1.0
        };

        let mut found = wolfe_search(&mut f, &x, fx, slope, &dir, first_step, cfg, &mut evaluations)?;
        if found.is_none() && !pairs.is_empty() {
            // retry from steepest descent with fresh memory
            pairs.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -dot(&g, &g);
            let step = (1.0 / norm(&g)).min(1.0);
            found = wolfe_search(&mut f, &x, fx, slope, &dir, step, cfg, &mut evaluations)?;
        }
        let Some(next) = found else {
            break;
        };
        iterations += 1;

        let s: Vec<f64> = next.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = next.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if pairs.len() == cfg.memory {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        let decrease = fx - next.f;
        x = next.x;
        fx = next.f;
        g = next.g;
        trace.push(fx);
        if decrease <= cfg.cost_tolerance * fx.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged && norm(&g) <= cfg.grad_tolerance {
        converged = true;
    }

    Ok(TrainResult {
        params: x,
        cost: fx,
        trace,
        iterations,
        evaluations,
        converged,
    })
}

/// A cost that is a sum of per-point terms and can be evaluated on subsets.
pub trait BatchObjective {
    fn num_terms(&self) -> usize;

    /// Sum of the selected terms and its gradient.
    fn batch_cost_grad(&self, params: &[f64], batch: &[usize]) -> Result<(f64, Vec<f64>)>;

    /// Sum of all terms.
    fn cost(&self, params: &[f64]) -> Result<f64> {
        let all: Vec<usize> = (0..self.num_terms()).collect();
        Ok(self.batch_cost_grad(params, &all)?.0)
    }
}

/// Mini-batch SGD. Each epoch shuffles the term indices with a seed derived
/// from `(cfg.seed, epoch)`, splits them into consecutive batches and takes
/// one step `p ← p - η ḡ` per batch, `ḡ` being the batch-averaged gradient.
pub fn sgd_minimize<O: BatchObjective + ?Sized>(objective: &O, x0: &[f64], cfg: &SgdConfig) -> Result<TrainResult> {
    cfg.validate()?;
    let n = objective.num_terms();
    if n == 0 {
        return Err(Error::invalid("SGD needs at least one training term"));
    }
    if cfg.batch_size > n {
        return Err(Error::invalid(format!(
            "batch size {} exceeds the {n} training points",
            cfg.batch_size
        )));
    }
    let mut x = x0.to_vec();
    let mut trace = vec![objective.cost(&x)?];
    let mut evaluations = 1;
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 0..cfg.epochs {
        let mut prng = rng::seeded(rng::derive_seed(cfg.seed, epoch as u64));
        order.sort_unstable();
        order.shuffle(&mut prng);
        for batch in order.chunks(cfg.batch_size) {
            let (_, g) = objective.batch_cost_grad(&x, batch)?;
            evaluations += 1;
            let scale = cfg.learning_rate / batch.len() as f64;
            x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= scale * gi);
        }
        let c = objective.cost(&x)?;
        evaluations += 1;
        if !c.is_finite() {
            return Err(Error::invalid(format!("SGD diverged at epoch {epoch}")));
        }
        trace.push(c);
    }
    let all: Vec<usize> = (0..n).collect();
    let (cost, g) = objective.batch_cost_grad(&x, &all)?;
    evaluations += 1;
    Ok(TrainResult {
        params: x,
        cost,
        trace,
        iterations: cfg.epochs,
        evaluations,
        converged: norm(&g) <= cfg.grad_tolerance,
    })
}

/// The epoch's batches, as [`sgd_minimize`] visits them.
pub fn sgd_epoch_batches(n: usize, batch_size: usize, seed: u64, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut prng = rng::seeded(rng::derive_seed(seed, epoch as u64));
    order.shuffle(&mut prng);
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

/// Seed used by restart `index` of a run with `base_seed`.
pub fn restart_seed(base_seed: u64, index: usize) -> u64 {
    base_seed.wrapping_add(index as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RestartSummary<T> {
    pub best_index: usize,
    pub final_costs: Vec<f64>,
    pub best: T,
}

/// Runs `trainer` once per restart seed (concurrently) and keeps the run with
/// the lowest final cost; ties go to the earliest restart.
pub fn multi_restart<T, F>(restarts: usize, base_seed: u64, trainer: F) -> Result<RestartSummary<T>>
where
    T: Send,
    F: Fn(u64) -> Result<(f64, T)> + Sync,
{
    if restarts == 0 {
        return Err(Error::invalid("restarts must be ≥ 1"));
    }
    let runs = (0..restarts)
        .into_par_iter()
        .map(|r| trainer(restart_seed(base_seed, r)))
        .collect::<Result<Vec<_>>>()?;
    let final_costs: Vec<f64> = runs.iter().map(|(c, _)| *c).collect();
    let key = |c: f64| if c.is_nan() { f64::INFINITY } else { c };
    let best_index = (0..restarts).fold(0, |best, i| {
        if key(final_costs[i]) < key(final_costs[best]) {
            i
        } else {
            best
        }
    });
    let best = runs
        .into_iter()
        .nth(best_index)
        .map(|(_, t)| t)
        .expect("index in range");
    Ok(RestartSummary {
        best_index,
        final_costs,
        best,
    })
}
