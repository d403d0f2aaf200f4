//! Downhill simplex (Nelder–Mead) minimisation on an unconstrained space.

use alloc::vec::Vec;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when every vertex is within this (max-norm) distance of the best one…
    pub tol_x: f64,
    /// …and the objective spread across vertices is below this.
    pub tol_f: f64,
    /// Relative displacement used to build the initial simplex.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol_x: 1e-8,
            tol_f: 1e-10,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Initial simplex around `start`: one vertex per coordinate, displaced by
/// `step` relative to the coordinate (absolute `step` when it is zero).
pub fn initial_simplex(start: &[f64], step: f64) -> Vec<Vec<f64>> {
    let mut simplex = Vec::with_capacity(start.len() + 1);
    simplex.push(start.to_vec());
    for i in 0..start.len() {
        let mut v = start.to_vec();
        v[i] = if v[i] != 0.0 { v[i] * (1.0 + step) } else { step };
        simplex.push(v);
    }
    simplex
}

/// Minimises `f` from the given starting simplex (n + 1 vertices).
pub fn minimize<F>(mut f: F, simplex: Vec<Vec<f64>>, opts: &NelderMeadOptions) -> Result<NelderMeadResult>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let n = simplex[0].len();
    debug_assert_eq!(simplex.len(), n + 1);
    let mut evaluations = 0usize;
    let mut eval = |x: &[f64], evaluations: &mut usize| -> Result<f64> {
        *evaluations += 1;
        let v = f(x)?;
        Ok(if v.is_nan() { f64::INFINITY } else { v })
    };

    let mut verts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    for v in simplex {
        let fv = eval(&v, &mut evaluations)?;
        verts.push((v, fv));
    }

    let mut iterations = 0;
    let mut converged = false;
    loop {
        // stable sort keeps the result independent of evaluation order ties
        verts.sort_by(|l, r| l.1.total_cmp(&r.1));
        let best = &verts[0];
        let spread = verts[n].1 - best.1;
        let diameter = verts[1..]
            .iter()
            .map(|(v, _)| {
                v.iter()
                    .zip(&best.0)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if diameter < opts.tol_x && spread < opts.tol_f {
            converged = true;
            break;
        }
        if best.1 == 0.0 && spread == 0.0 {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = alloc::vec![0.0; n];
        for (v, _) in &verts[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }
        let worst = verts[n].0.clone();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let fr = eval(&xr, &mut evaluations)?;
        if fr < verts[0].1 {
            let xe = along(EXPAND);
            let fe = eval(&xe, &mut evaluations)?;
            verts[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < verts[n - 1].1 {
            verts[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < verts[n].1 {
            let xc = along(CONTRACT);
            let fc = eval(&xc, &mut evaluations)?;
            (xc, fc)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&xc, &mut evaluations)?;
            (xc, fc)
        };
        if fc < fr.min(verts[n].1) {
            verts[n] = (xc, fc);
            continue;
        }
        let anchor = verts[0].0.clone();
        for (v, fv) in verts.iter_mut().skip(1) {
            for (x, a) in v.iter_mut().zip(&anchor) {
                *x = a + SHRINK * (*x - a);
            }
            *fv = eval(v, &mut evaluations)?;
        }
    }
    let (x, fx) = verts.swap_remove(0);
    Ok(NelderMeadResult {
        x,
        f: fx,
        iterations,
        evaluations,
        converged,
    })
}
