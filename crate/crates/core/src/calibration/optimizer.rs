//! Nelder-Mead on logit-transformed box coordinates.
//!
//! Each bounded coordinate `x in [lo, hi]` is searched as `u` with
//! `x = lo + (hi - lo) * logistic(u)`, so every evaluated point lies inside
//! the box. `u` is held within `+-LOGIT_LIMIT`, which keeps a simplex chasing
//! a bound from drifting off to infinity while still reaching the bound to
//! within a relative `1e-15` of the interval width.

use crate::model::logistic;

pub const LOGIT_LIMIT: f64 = 36.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once the largest vertex-to-vertex distance in `u` falls below this.
    pub diameter_tol: f64,
    /// Edge length of the initial simplex in `u`.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iterations: 2000, diameter_tol: 1e-10, initial_step: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    /// Best point in the original coordinates.
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Bijection between a box and `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxMap {
    bounds: Vec<(f64, f64)>,
}

impl BoxMap {
    pub fn new(bounds: &[(f64, f64)]) -> Self {
        debug_assert!(bounds.iter().all(|(lo, hi)| lo < hi));
        Self { bounds: bounds.to_vec() }
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn to_box(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.bounds)
            .map(|(&u, &(lo, hi))| (lo + (hi - lo) * logistic(u.clamp(-LOGIT_LIMIT, LOGIT_LIMIT))).clamp(lo, hi))
            .collect()
    }

    pub fn to_free(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds)
            .map(|(&x, &(lo, hi))| {
                let p = (x - lo) / (hi - lo);
                (p / (1.0 - p)).ln().clamp(-LOGIT_LIMIT, LOGIT_LIMIT)
            })
            .collect()
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in simplex.iter().enumerate() {
        for b in &simplex[i + 1..] {
            let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
            d = d.max(s.sqrt());
        }
    }
    d
}

/// Minimizes `f` over the box from `x0` (which must lie in the box).
/// Non-finite objective values are treated as `+inf`.
pub fn nelder_mead<F>(f: F, x0: &[f64], map: &BoxMap, opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = map.dim();
    let mut evaluations = 0usize;
    let mut eval = |u: &[f64]| {
        evaluations += 1;
        let v = f(&map.to_box(u));
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let clamp = |u: Vec<f64>| u.into_iter().map(|v| v.clamp(-LOGIT_LIMIT, LOGIT_LIMIT)).collect::<Vec<_>>();

    let build = |u0: &[f64]| {
        let mut simplex = vec![u0.to_vec()];
        for i in 0..n {
            let mut v = u0.to_vec();
            // Step inward when sitting on the clamp so the vertex stays distinct.
            v[i] += if v[i] + opts.initial_step > LOGIT_LIMIT { -opts.initial_step } else { opts.initial_step };
            simplex.push(v);
        }
        simplex
    };

    let mut simplex = build(&map.to_free(x0));
    let mut values: Vec<f64> = simplex.iter().map(|u| eval(u)).collect();
    let mut start_best = values.iter().copied().fold(f64::INFINITY, f64::min);

    let mut iterations = 0;
    let mut converged = false;
    loop {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        if diameter(&simplex) < opts.diameter_tol {
            // A simplex can collapse onto a face, most often when some
            // coordinates sit on the clamp. Rebuild around the best vertex
            // and accept only once a rebuild brings no improvement.
            if values[0] < start_best {
                start_best = values[0];
                let best = simplex[0].clone();
                let f0 = values[0];
                simplex = build(&best);
                values = std::iter::once(f0).chain(simplex[1..].iter().map(|u| eval(u))).collect();
                continue;
            }
            converged = true;
            break;
        }
        if iterations >= opts.max_iterations {
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n).map(|j| simplex[..n].iter().map(|v| v[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| clamp(centroid.iter().zip(&simplex[n]).map(|(c, w)| c + t * (c - w)).collect());

        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = eval(&xe);
            if fe < fr {
                simplex[n] = xe;
                values[n] = fe;
            } else {
                simplex[n] = xr;
                values[n] = fr;
            }
            continue;
        }
        if fr < values[n - 1] {
            simplex[n] = xr;
            values[n] = fr;
            continue;
        }
        let (xc, fc) = if fr < values[n] {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < fr.min(values[n]) {
            simplex[n] = xc;
            values[n] = fc;
            continue;
        }
        for i in 1..=n {
            simplex[i] = simplex[0].iter().zip(&simplex[i]).map(|(b, v)| b + 0.5 * (v - b)).collect();
            values[i] = eval(&simplex[i]);
        }
    }

    NelderMeadResult { x: map.to_box(&simplex[0]), f: values[0], iterations, evaluations, converged }
}
