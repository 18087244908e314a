//! Preconditioned conjugate gradients on the free degrees of freedom.

use rayon::prelude::*;

use super::operator::GridOperator;

pub(crate) trait Preconditioner {
    fn apply(&mut self, r: &[f64], z: &mut [f64]);
}

pub(crate) fn masked_inverse(diag: &[f64], mask: &[bool]) -> Vec<f64> {
    diag.iter()
        .zip(mask)
        .map(|(&d, &fixed)| if fixed || d == 0.0 { 0.0 } else { 1.0 / d })
        .collect()
}

pub(crate) struct Jacobi {
    pub inv_diag: Vec<f64>,
}

impl Preconditioner for Jacobi {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        z.par_iter_mut()
            .zip(r.par_iter().zip(self.inv_diag.par_iter()))
            .for_each(|(z, (r, d))| *z = r * d);
    }
}

const CHUNK: usize = 1 << 14;

/// Dot product with a fixed summation tree, independent of the thread count.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    partial.iter().sum()
}

pub(crate) struct PcgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
    pub converged: bool,
}

/// Solves `K u = 0` on the free DOFs with `u` fixed on `mask` at its initial
/// values. Convergence is measured against the norm of the load produced by
/// the prescribed values alone.
pub(crate) fn pcg(
    op: &GridOperator,
    mask: &[bool],
    u: &mut [f64],
    precond: &mut dyn Preconditioner,
    tol: f64,
    max_iters: usize,
) -> PcgOutcome {
    let n = u.len();
    let zero_fixed = |v: &mut [f64]| {
        v.par_iter_mut().zip(mask.par_iter()).for_each(|(x, &fixed)| {
            if fixed {
                *x = 0.0;
            }
        })
    };

    let mut work = vec![0.0; n];
    let prescribed: Vec<f64> = u
        .par_iter()
        .zip(mask.par_iter())
        .map(|(&x, &fixed)| if fixed { x } else { 0.0 })
        .collect();
    op.apply(&prescribed, &mut work);
    zero_fixed(&mut work);
    let reference = dot(&work, &work).sqrt();

    let mut r = vec![0.0; n];
    op.apply(u, &mut r);
    r.par_iter_mut().for_each(|x| *x = -*x);
    zero_fixed(&mut r);
    let scale = if reference > 0.0 { reference } else { 1.0 };

    let mut res = dot(&r, &r).sqrt() / scale;
    if res <= tol {
        return PcgOutcome {
            iterations: 0,
            relative_residual: res,
            converged: true,
        };
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    zero_fixed(&mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let q = &mut work;
    for it in 1..=max_iters {
        op.apply(&p, q);
        zero_fixed(q);
        let alpha = rz / dot(&p, q);
        u.par_iter_mut().zip(p.par_iter()).for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut().zip(q.par_iter()).for_each(|(x, q)| *x -= alpha * q);
        res = dot(&r, &r).sqrt() / scale;
        if res <= tol {
            return PcgOutcome {
                iterations: it,
                relative_residual: res,
                converged: true,
            };
        }
        precond.apply(&r, &mut z);
        zero_fixed(&mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(z.par_iter()).for_each(|(p, z)| *p = z + beta * *p);
    }
    PcgOutcome {
        iterations: max_iters,
        relative_residual: res,
        converged: false,
    }
}
