//! Derivative-free minimizers.
//!
//! [`Cobyla`] follows Powell's linear-approximation trust-region scheme
//! without constraints: a linear model interpolates the objective on `n + 1`
//! points, the next trial point minimizes that model on a ball of radius `ρ`,
//! and `ρ` shrinks from `rho_begin` to `rho_end` whenever the model stops
//! predicting progress. [`NelderMead`] is the simplex alternative behind the
//! same [`Minimizer`] interface.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// Best point found by a minimizer.
#[derive(Clone, Debug, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub evaluations: usize,
    /// Trust-region radius (or simplex size) at termination.
    pub radius: T,
}

pub trait Minimizer<T: Scalar> {
    fn name(&self) -> &'static str;

    /// Minimize `objective` from `start` using at most `max_evaluations`
    /// objective calls.
    fn minimize(&self, objective: &mut dyn FnMut(&[T]) -> T, start: &[T], max_evaluations: usize) -> Result<Minimum<T>>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    #[default]
    Cobyla,
    NelderMead,
}

/// Call budget and bookkeeping shared by both minimizers.
struct Budget<'a, T> {
    objective: &'a mut dyn FnMut(&[T]) -> T,
    used: usize,
    max: usize,
}

impl<T: Scalar> Budget<'_, T> {
    fn exhausted(&self) -> bool {
        self.used >= self.max
    }

    fn eval(&mut self, x: &[T]) -> Option<T> {
        if self.exhausted() {
            return None;
        }
        self.used += 1;
        let v = (self.objective)(x);
        Some(if v.is_nan() { T::infinity() } else { v })
    }
}

fn check_setup<T: Scalar>(start: &[T], rho_begin: T, rho_end: T, max_evaluations: usize) -> Result<()> {
    if max_evaluations == 0 {
        return Err(Error::ZeroBudget);
    }
    if start.is_empty() || start.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateSimplex("start point must be non-empty and finite".into()));
    }
    if !(rho_end > T::zero() && rho_begin > rho_end && rho_begin.is_finite()) {
        return Err(Error::DegenerateSimplex(format!(
            "need rho_begin > rho_end > 0, got {rho_begin} and {rho_end}"
        )));
    }
    Ok(())
}

/// Interpolation set, linear model and trust region of one COBYLA run.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    /// `n + 1` interpolation points.
    pub points: Vec<Vec<T>>,
    pub values: Vec<T>,
    /// Gradient of the current linear model.
    pub gradient: Vec<T>,
    /// Last proposed step `Δθ` from the best point.
    pub step: Vec<T>,
    pub radius: T,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn best(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v < self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn best_point(&self) -> (&[T], T) {
        let b = self.best();
        (&self.points[b], self.values[b])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cobyla<T> {
    pub rho_begin: T,
    pub rho_end: T,
}

impl<T: Scalar> Cobyla<T> {
    pub fn new(rho_begin: T, rho_end: T) -> Self {
        Self { rho_begin, rho_end }
    }

    fn reduce(&self, rho: T) -> T {
        let next = rho * T::lit(0.5);
        if next <= T::lit(1.5) * self.rho_end {
            self.rho_end
        } else {
            next
        }
    }
}

const GEOMETRY_FAR: f64 = 2.1;
const GEOMETRY_FLAT: f64 = 0.25;
const GEOMETRY_STEP: f64 = 0.5;
const POOR_RATIO: f64 = 0.1;
const EDGE_LIMIT: f64 = 1.1;

impl<T: Scalar> Minimizer<T> for Cobyla<T> {
    fn name(&self) -> &'static str {
        "cobyla"
    }

    fn minimize(&self, objective: &mut dyn FnMut(&[T]) -> T, start: &[T], max_evaluations: usize) -> Result<Minimum<T>> {
        check_setup(start, self.rho_begin, self.rho_end, max_evaluations)?;
        let n = start.len();
        let mut budget = Budget {
            objective,
            used: 0,
            max: max_evaluations,
        };
        let f0 = budget.eval(start).expect("budget >= 1");
        let mut state = OptimizerState {
            points: vec![start.to_vec()],
            values: vec![f0],
            gradient: vec![T::zero(); n],
            step: vec![T::zero(); n],
            radius: self.rho_begin,
        };
        // each initial vertex steps off the best point found so far
        for j in 0..n {
            let mut x = state.best_point().0.to_vec();
            x[j] = x[j] + state.radius;
            match budget.eval(&x) {
                Some(v) => {
                    state.points.push(x);
                    state.values.push(v);
                }
                None => return Ok(finish(&state, budget.used)),
            }
        }

        // geometry is only repaired after a trust step that made no progress
        let mut after_trust_step = true;
        while !budget.exhausted() {
            let best = state.best();
            let base = state.points[best].clone();
            let others: Vec<usize> = (0..=n).filter(|&i| i != best).collect();
            let offsets: Vec<Vec<T>> = others.iter().map(|&i| sub(&state.points[i], &base)).collect();
            let Some(inverse) = invert(&offsets) else {
                // collapsed simplex: rebuild the coordinate simplex around the best point
                for (j, &i) in others.iter().enumerate() {
                    let mut x = base.clone();
                    x[j] = x[j] + state.radius;
                    match budget.eval(&x) {
                        Some(v) => {
                            state.points[i] = x;
                            state.values[i] = v;
                        }
                        None => break,
                    }
                }
                continue;
            };
            let df: Vec<T> = others.iter().map(|&i| state.values[i] - state.values[best]).collect();
            // D g = df, so g = D⁻¹ df; column j of D⁻¹ is dual to offset j
            state.gradient = (0..n)
                .map(|r| (0..n).fold(T::zero(), |acc, c| acc + inverse[r][c] * df[c]))
                .collect();
            let duals: Vec<Vec<T>> = (0..n).map(|j| (0..n).map(|r| inverse[r][j]).collect()).collect();
            let rho = state.radius;
            let dist: Vec<T> = offsets.iter().map(|o| norm(o)).collect();
            let sigma: Vec<T> = duals.iter().map(|v| T::one() / norm(v)).collect();
            let far = argmax(&dist);
            let flat = argmin(&sigma);
            let acceptable = dist[far] <= T::lit(GEOMETRY_FAR) * rho && sigma[flat] >= T::lit(GEOMETRY_FLAT) * rho;

            if !after_trust_step && !acceptable {
                let j = if dist[far] > T::lit(GEOMETRY_FAR) * rho { far } else { flat };
                let scale = T::lit(GEOMETRY_STEP) * rho / norm(&duals[j]);
                let mut d: Vec<T> = duals[j].iter().map(|&v| v * scale).collect();
                if dot(&state.gradient, &d) > T::zero() {
                    d.iter_mut().for_each(|v| *v = -*v);
                }
                let x = add(&base, &d);
                let Some(v) = budget.eval(&x) else { break };
                state.step = d;
                state.points[others[j]] = x;
                state.values[others[j]] = v;
                continue;
            }

            let gnorm = norm(&state.gradient);
            let mut progress = false;
            if gnorm > T::zero() {
                let d: Vec<T> = state.gradient.iter().map(|&g| -g * rho / gnorm).collect();
                let x = add(&base, &d);
                let Some(v) = budget.eval(&x) else { break };
                after_trust_step = true;
                let reduction = state.values[best] - v;
                if let Some(j) = vertex_to_drop(&duals, &sigma, &offsets, &dist, &d, rho, reduction > T::zero()) {
                    state.points[others[j]] = x;
                    state.values[others[j]] = v;
                    progress = reduction > T::zero() && reduction >= T::lit(POOR_RATIO) * rho * gnorm;
                }
                state.step = d;
            }
            if progress {
                continue;
            }
            if !acceptable {
                after_trust_step = false;
                continue;
            }
            if rho <= self.rho_end {
                break;
            }
            state.radius = self.reduce(rho);
        }
        Ok(finish(&state, budget.used))
    }
}

/// Vertex the trial point `base + d` replaces, if any. A worse trial point is
/// admitted only when it enlarges the simplex.
fn vertex_to_drop<T: Scalar>(
    duals: &[Vec<T>],
    sigma: &[T],
    offsets: &[Vec<T>],
    dist: &[T],
    d: &[T],
    rho: T,
    improved: bool,
) -> Option<usize> {
    let mut threshold = if improved { T::zero() } else { T::one() };
    let mut drop = None;
    let mut sigbar = Vec::with_capacity(duals.len());
    for (j, dual) in duals.iter().enumerate() {
        let volume = dot(dual, d).abs();
        if volume > threshold {
            drop = Some(j);
            threshold = volume;
        }
        sigbar.push(volume * sigma[j]);
    }
    let mut longest = T::lit(EDGE_LIMIT) * rho;
    for j in 0..duals.len() {
        if sigbar[j] >= T::lit(GEOMETRY_FLAT) * rho || sigbar[j] >= sigma[j] {
            let edge = if improved { norm(&sub(d, &offsets[j])) } else { dist[j] };
            if edge > longest {
                drop = Some(j);
                longest = edge;
            }
        }
    }
    drop
}

fn finish<T: Scalar>(state: &OptimizerState<T>, evaluations: usize) -> Minimum<T> {
    let (x, value) = state.best_point();
    Minimum {
        x: x.to_vec(),
        value,
        evaluations,
        radius: state.radius,
    }
}

/// Nelder-Mead simplex search with the standard coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMead<T> {
    /// Edge length of the initial simplex.
    pub initial_step: T,
    /// Stop once every vertex lies within this distance of the best.
    pub tolerance: T,
}

impl<T: Scalar> Minimizer<T> for NelderMead<T> {
    fn name(&self) -> &'static str {
        "nelder-mead"
    }

    fn minimize(&self, objective: &mut dyn FnMut(&[T]) -> T, start: &[T], max_evaluations: usize) -> Result<Minimum<T>> {
        check_setup(start, self.initial_step, self.tolerance, max_evaluations)?;
        let n = start.len();
        let mut budget = Budget {
            objective,
            used: 0,
            max: max_evaluations,
        };
        let mut simplex: Vec<(Vec<T>, T)> = vec![(start.to_vec(), budget.eval(start).expect("budget >= 1"))];
        for j in 0..n {
            let mut x = start.to_vec();
            x[j] = x[j] + self.initial_step;
            let Some(v) = budget.eval(&x) else { break };
            simplex.push((x, v));
        }
        let half = T::lit(0.5);
        let two = T::lit(2.0);
        while simplex.len() == n + 1 && !budget.exhausted() {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("values are not NaN"));
            let size = simplex[1..]
                .iter()
                .map(|(x, _)| norm(&sub(x, &simplex[0].0)))
                .fold(T::zero(), T::max);
            if size <= self.tolerance {
                break;
            }
            let centroid: Vec<T> = (0..n)
                .map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<T>() / T::lit(n as f64))
                .collect();
            let worst = simplex[n].clone();
            let toward = |coef: T| -> Vec<T> {
                centroid
                    .iter()
                    .zip(&worst.0)
                    .map(|(&c, &w)| c + coef * (c - w))
                    .collect()
            };
            let reflected = toward(T::one());
            let Some(fr) = budget.eval(&reflected) else { break };
            if fr < simplex[0].1 {
                let expanded = toward(two);
                let Some(fe) = budget.eval(&expanded) else {
                    simplex[n] = (reflected, fr);
                    break;
                };
                simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (reflected, fr);
            } else {
                let coef = if fr < worst.1 { half } else { -half };
                let contracted = toward(coef);
                let Some(fc) = budget.eval(&contracted) else { break };
                if fc < worst.1.min(fr) {
                    simplex[n] = (contracted, fc);
                } else {
                    let best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let x: Vec<T> = best.iter().zip(&vertex.0).map(|(&b, &v)| b + half * (v - b)).collect();
                        let Some(v) = budget.eval(&x) else { break };
                        *vertex = (x, v);
                    }
                }
            }
        }
        let (x, value) = simplex
            .iter()
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("values are not NaN"))
            .cloned()
            .expect("simplex is non-empty");
        let radius = simplex
            .iter()
            .map(|(v, _)| norm(&sub(v, &x)))
            .fold(T::zero(), T::max);
        Ok(Minimum {
            x,
            value,
            evaluations: budget.used,
            radius,
        })
    }
}

fn sub<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

fn add<T: Scalar>(a: &[T], b: &[T]) -> Vec<T> {
    a.iter().zip(b).map(|(&x, &y)| x + y).collect()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn argmax<T: Scalar>(v: &[T]) -> usize {
    (0..v.len()).fold(0, |best, i| if v[i] > v[best] { i } else { best })
}

fn argmin<T: Scalar>(v: &[T]) -> usize {
    (0..v.len()).fold(0, |best, i| if v[i] < v[best] { i } else { best })
}

/// Inverse of the matrix whose rows are `rows`, by Gauss-Jordan elimination.
/// `None` when (numerically) singular.
fn invert<T: Scalar>(rows: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = rows.len();
    let scale = rows.iter().flatten().fold(T::zero(), |m, &x| m.max(x.abs()));
    if !scale.is_finite() || scale <= T::zero() {
        return None;
    }
    let mut a: Vec<Vec<T>> = rows.to_vec();
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).fold(col, |p, r| if a[r][col].abs() > a[p][col].abs() { r } else { p });
        if a[pivot][col].abs() <= T::epsilon() * T::lit(1e3) * scale {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let p = a[col][col];
        for k in 0..n {
            a[col][k] = a[col][k] / p;
            inv[col][k] = inv[col][k] / p;
        }
        for r in 0..n {
            if r != col {
                let factor = a[r][col];
                if factor != T::zero() {
                    for k in 0..n {
                        a[r][k] = a[r][k] - factor * a[col][k];
                        inv[r][k] = inv[r][k] - factor * inv[col][k];
                    }
                }
            }
        }
    }
    Some(inv)
}
