//! Max-min solver for one SCA subproblem.
//!
//! Maximizes the log-sum-exp soft minimum of the concave surrogate terms by
//! projected gradient ascent on the Frobenius ball `‖W‖_F² ≤ K`. The
//! temperature is annealed geometrically; each stage uses a
//! Barzilai-Borwein trial step followed by Armijo backtracking. The best
//! iterate under the hard minimum is returned, so the result is never worse
//! than the expansion point.

use nalgebra::DMatrix;

use super::surrogate::SurrogatePoint;
use crate::linalg::{frobenius_sq, C64};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tau_start: f64,
    pub tau_end: f64,
    /// Temperature multiplier between stages.
    pub tau_factor: f64,
    pub armijo_beta: f64,
    pub armijo_c: f64,
    /// Stop a stage when the projected-gradient norm drops below this.
    pub pg_tol: f64,
    pub max_inner: usize,
    /// Allowed excess of `‖W‖_F²` over the budget.
    pub tol_feas: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tau_start: 1.0,
            tau_end: 1e-3,
            tau_factor: 0.1,
            armijo_beta: 0.5,
            armijo_c: 1e-4,
            pg_tol: 1e-6,
            max_inner: 2000,
            tol_feas: 1e-6,
        }
    }
}

impl SolverOptions {
    fn temperatures(&self) -> Vec<f64> {
        let mut out = vec![self.tau_start];
        let mut t = self.tau_start;
        while t > self.tau_end * (1.0 + 1e-9) {
            t = (t * self.tau_factor).max(self.tau_end);
            out.push(t);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub w_next: DMatrix<C64>,
    /// Hard minimum of the surrogate terms at `w_next`.
    pub xi: f64,
    /// Same quantity at the expansion point.
    pub xi_start: f64,
    pub feasibility_violation: f64,
    pub inner_iterations: usize,
    /// False when some stage hit its iteration cap before the
    /// projected-gradient test passed.
    pub converged: bool,
}

fn project(w: &mut DMatrix<C64>, budget: f64) {
    let p = frobenius_sq(w);
    if p > budget {
        w.scale_mut((budget / p).sqrt());
    }
}

/// Real inner product `Re tr(A^H B)`.
fn real_dot(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

struct Objective<'a> {
    point: &'a SurrogatePoint,
    vals: Vec<f64>,
}

impl<'a> Objective<'a> {
    fn new(point: &'a SurrogatePoint) -> Self {
        Self { point, vals: Vec::with_capacity(point.pairs().len()) }
    }

    /// Soft minimum at temperature `tau` and the hard minimum.
    fn value(&mut self, w: &DMatrix<C64>, tau: f64) -> (f64, f64) {
        let (zl, ze) = self.point.rows(w);
        self.point.term_values(&zl, &ze, &mut self.vals);
        soft_min(&self.vals, tau)
    }

    fn value_and_grad(&mut self, w: &DMatrix<C64>, tau: f64) -> (f64, f64, DMatrix<C64>) {
        let (zl, ze) = self.point.rows(w);
        self.point.term_values(&zl, &ze, &mut self.vals);
        let (soft, hard) = soft_min(&self.vals, tau);
        let mut dl = DMatrix::zeros(zl.nrows(), zl.ncols());
        let mut de = DMatrix::zeros(ze.nrows(), ze.ncols());
        let z: f64 = self.vals.iter().map(|g| (-(g - hard) / tau).exp()).sum();
        for (p, g) in self.vals.iter().enumerate() {
            let weight = (-(g - hard) / tau).exp() / z;
            if weight > 1e-300 {
                self.point.accumulate_grad(p, weight, &zl, &ze, &mut dl, &mut de);
            }
        }
        (soft, hard, self.point.grad_w(&dl, &de))
    }
}

/// `(−τ ln Σ exp(−g/τ), min g)`
pub fn soft_min(vals: &[f64], tau: f64) -> (f64, f64) {
    let hard = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let s: f64 = vals.iter().map(|g| (-(g - hard) / tau).exp()).sum();
    (hard - tau * s.ln(), hard)
}

/// Solves `max_W min_p g_p(W)` subject to `‖W‖_F² ≤ budget`, starting from
/// the expansion point.
pub fn solve_subproblem(point: &SurrogatePoint, budget: f64, opts: &SolverOptions) -> SubproblemSolution {
    let mut obj = Objective::new(point);
    let mut w = point.w_t.clone();
    project(&mut w, budget);

    let (_, xi_start) = obj.value(&w, 1.0);
    let mut best = (xi_start, w.clone());
    let temps = opts.temperatures();
    let per_stage = (opts.max_inner / temps.len()).max(1);
    let mut iterations = 0;
    let mut converged = true;
    let mut step = f64::NAN;

    for &tau in &temps {
        let (mut f, _, mut g) = obj.value_and_grad(&w, tau);
        let mut prev: Option<(DMatrix<C64>, DMatrix<C64>)> = None;
        let mut stage_done = false;
        for _ in 0..per_stage {
            iterations += 1;
            // Barzilai-Borwein trial step, backtracked below.
            let mut s = match &prev {
                Some((dw, dg)) => {
                    let sy = -real_dot(dw, dg);
                    let ss = frobenius_sq(dw);
                    if sy > 0.0 && ss > 0.0 {
                        ss / sy
                    } else {
                        step * 4.0
                    }
                }
                None if step.is_finite() => step,
                None => 1.0 / frobenius_sq(&g).sqrt().max(1e-12),
            };
            let (w_new, f_new) = loop {
                let mut cand = &w + g.scale(s);
                project(&mut cand, budget);
                let (fc, hard) = obj.value(&cand, tau);
                if hard > best.0 {
                    best = (hard, cand.clone());
                }
                let ascent = real_dot(&g, &(&cand - &w));
                if fc >= f + opts.armijo_c * ascent || s < 1e-30 {
                    break (cand, fc);
                }
                s *= opts.armijo_beta;
            };
            let dw = &w_new - &w;
            let pg = frobenius_sq(&dw).sqrt() / s;
            step = s;
            if pg < opts.pg_tol || f_new - f <= 0.0 && frobenius_sq(&dw) == 0.0 {
                stage_done = true;
                w = w_new;
                break;
            }
            let (f2, hard, g2) = obj.value_and_grad(&w_new, tau);
            if hard > best.0 {
                best = (hard, w_new.clone());
            }
            prev = Some((dw, &g2 - &g));
            w = w_new;
            f = f2;
            g = g2;
        }
        if !stage_done {
            converged = false;
        }
    }

    let (xi, w_next) = best;
    let feasibility_violation = (frobenius_sq(&w_next) - budget).max(0.0);
    SubproblemSolution {
        w_next,
        xi,
        xi_start,
        feasibility_violation,
        inner_iterations: iterations,
        converged,
    }
}
