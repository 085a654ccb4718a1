//! Newton-Raphson iteration with incremental loading.

use crate::error::{NomError, Result};
use crate::sparse::{solve_linear, CsrMatrix};

/// Settings for [`newton_solve`].
#[derive(Debug, Clone)]
pub struct NewtonOptions {
    /// Stop when `‖Δu^{k+1}‖ / ‖Σ Δu‖ <= tol` within a load step.
    pub tol: f64,
    pub max_iter: usize,
    /// Load factors applied in sequence, typically ending at 1.
    pub load_factors: Vec<f64>,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 25,
            load_factors: vec![1.0],
        }
    }
}

impl NewtonOptions {
    /// `steps` equal increments up to a load factor of one.
    pub fn with_load_steps(mut self, steps: usize) -> Self {
        let steps = steps.max(1);
        self.load_factors = (1..=steps).map(|s| s as f64 / steps as f64).collect();
        self
    }
}

/// One Newton iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonState {
    /// Load step, counted from 1.
    pub step: usize,
    /// Iteration within the step, counted from 1.
    pub iter: usize,
    pub rel_increment: f64,
    /// `‖R‖` after the update.
    pub residual_norm: f64,
}

impl std::fmt::Display for NewtonState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} {:.6e} {:.6e}",
            self.step, self.iter, self.rel_increment, self.residual_norm
        )
    }
}

/// Result of a load-stepped Newton solve.
#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub u: Vec<f64>,
    pub history: Vec<NewtonState>,
    /// Converged solution at the end of each load step.
    pub step_solutions: Vec<Vec<f64>>,
}

const RESIDUAL_DROP: f64 = 1e-4;
/// Halvings of an update that inverts a material point before giving up.
const MAX_CUTS: usize = 8;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `R(u, λ) = 0` for each load factor `λ` by Newton's method.
///
/// A step is accepted when the relative increment drops below `tol`, or when
/// the residual has dropped below `RESIDUAL_DROP * tol` times its value at the
/// start of the step (which lets linear problems finish after a single solve).
/// An update that inverts the material is halved up to `MAX_CUTS` times.
pub fn newton_solve<R, K>(
    mut residual: R,
    mut stiffness: K,
    u0: Vec<f64>,
    options: &NewtonOptions,
    mut log: impl FnMut(&NewtonState),
) -> Result<NewtonReport>
where
    R: FnMut(&[f64], f64) -> Result<Vec<f64>>,
    K: FnMut(&[f64], f64) -> Result<CsrMatrix>,
{
    if !(options.tol > 0.0) {
        return Err(NomError::InvalidArgument(format!(
            "tolerance must be positive, got {}",
            options.tol
        )));
    }
    if options.load_factors.is_empty() || options.max_iter == 0 {
        return Err(NomError::InvalidArgument(
            "need at least one load step and one iteration".into(),
        ));
    }
    let mut u = u0;
    let mut history = Vec::new();
    let mut step_solutions = Vec::with_capacity(options.load_factors.len());
    for (s, &lambda) in options.load_factors.iter().enumerate() {
        let step = s + 1;
        let mut r = residual(&u, lambda).map_err(|e| e.with_context(step, 0))?;
        let r0 = norm(&r);
        let mut total = vec![0.0; u.len()];
        let mut converged = r0 == 0.0;
        let mut iter = 0;
        while !converged {
            iter += 1;
            if iter > options.max_iter {
                return Err(NomError::NoConvergence(format!(
                    "step {step}: no convergence in {} iterations (last relative increment {:.3e})",
                    options.max_iter,
                    history
                        .last()
                        .map(|h: &NewtonState| h.rel_increment)
                        .unwrap_or(f64::NAN)
                )));
            }
            let k = stiffness(&u, lambda).map_err(|e| e.with_context(step, iter))?;
            let neg: Vec<f64> = r.iter().map(|v| -v).collect();
            let mut du = solve_linear(&k, &neg).map_err(|e| e.with_context(step, iter))?;
            let mut cuts = 0;
            let trial = loop {
                let candidate: Vec<f64> = u.iter().zip(&du).map(|(a, b)| a + b).collect();
                match residual(&candidate, lambda) {
                    Err(NomError::InvertedElement { .. }) if cuts < MAX_CUTS => {
                        cuts += 1;
                        du.iter_mut().for_each(|d| *d *= 0.5);
                    }
                    other => {
                        break other
                            .map(|r| (candidate, r))
                            .map_err(|e| e.with_context(step, iter))?
                    }
                }
            };
            for (ti, d) in total.iter_mut().zip(&du) {
                *ti += d;
            }
            u = trial.0;
            r = trial.1;
            let total_norm = norm(&total);
            let rel = if total_norm > 0.0 {
                norm(&du) / total_norm
            } else {
                0.0
            };
            let rn = norm(&r);
            if !rn.is_finite() || !rel.is_finite() {
                return Err(NomError::NoConvergence(format!(
                    "step {step}, iter {iter}: iteration diverged"
                )));
            }
            let state = NewtonState {
                step,
                iter,
                rel_increment: rel,
                residual_norm: rn,
            };
            log(&state);
            history.push(state);
            converged = rel <= options.tol || rn <= RESIDUAL_DROP * options.tol * r0;
        }
        step_solutions.push(u.clone());
    }
    Ok(NewtonReport {
        u,
        history,
        step_solutions,
    })
}
