//! Geometric multigrid preconditioner with Galerkin coarse operators.

use nalgebra::{DMatrix, DVector, Matrix3};
use rayon::prelude::*;

use super::element::{node_offset, Mat24};
use super::operator::{from_flat, to_flat, GridOperator, ELEM_LEN};
use super::solver::Preconditioner;

/// Displacement component `comp` prescribed on both faces normal to `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct FaceConstraint {
    pub comp: usize,
    pub axis: usize,
}

pub(crate) fn constraint_mask(nodes_per_side: usize, constraints: &[FaceConstraint]) -> Vec<bool> {
    let m = nodes_per_side;
    let mut mask = vec![false; 3 * m * m * m];
    for k in 0..m {
        for j in 0..m {
            for i in 0..m {
                let node = i + m * (j + m * k);
                let idx = [i, j, k];
                for fc in constraints {
                    if idx[fc.axis] == 0 || idx[fc.axis] == m - 1 {
                        mask[3 * node + fc.comp] = true;
                    }
                }
            }
        }
    }
    mask
}

/// Interpolation from the 8 coarse nodes of an element to the 8 nodes of its
/// child in octant `o`, expanded to 24 x 24 (component-wise).
fn octant_interpolation(o: usize) -> Mat24 {
    let oo = node_offset(o);
    let mut w = Mat24::zeros();
    for b in 0..8 {
        let ob = node_offset(b);
        let xi: Vec<f64> = (0..3).map(|d| (oo[d] + ob[d]) as f64 * 0.5).collect();
        for a in 0..8 {
            let oa = node_offset(a);
            let weight: f64 = (0..3).map(|d| if oa[d] == 1 { xi[d] } else { 1.0 - xi[d] }).product();
            for c in 0..3 {
                w[(3 * b + c, 3 * a + c)] = weight;
            }
        }
    }
    w
}

/// Galerkin coarsening `P^T K P` of a grid with an even number of elements per side.
pub(crate) fn coarsen(fine: &GridOperator) -> GridOperator {
    assert!(fine.n % 2 == 0);
    let nc = fine.n / 2;
    let w: Vec<Mat24> = (0..8).map(octant_interpolation).collect();
    let base = from_flat(&fine.base[..]);
    let q: Vec<Mat24> = w.iter().map(|w| w.transpose() * base * w).collect();
    let base_c: Mat24 = q.iter().sum();

    let mut elem_scale = vec![0.0; nc * nc * nc];
    let mut elem_mixed = vec![0u32; nc * nc * nc];
    let mut mixed = Vec::new();
    for ez in 0..nc {
        for ey in 0..nc {
            for ex in 0..nc {
                let e = ex + nc * (ey + nc * ez);
                let children: Vec<usize> = (0..8)
                    .map(|o| {
                        let oo = node_offset(o);
                        fine.elem_index(2 * ex + oo[0], 2 * ey + oo[1], 2 * ez + oo[2])
                    })
                    .collect();
                let s0 = fine.elem_scale[children[0]];
                if !s0.is_nan() && children.iter().all(|&c| fine.elem_scale[c] == s0) {
                    elem_scale[e] = s0;
                    continue;
                }
                let mut k = Mat24::zeros();
                for (o, &c) in children.iter().enumerate() {
                    let s = fine.elem_scale[c];
                    if s.is_nan() {
                        k += w[o].transpose() * fine.element_matrix(c) * w[o];
                    } else {
                        k += q[o] * s;
                    }
                }
                elem_scale[e] = f64::NAN;
                elem_mixed[e] = (mixed.len() / ELEM_LEN) as u32;
                mixed.extend_from_slice(&to_flat(&k)[..]);
            }
        }
    }
    GridOperator::new(nc, to_flat(&base_c), elem_scale, elem_mixed, mixed)
}

/// Grids of a multigrid hierarchy, finest first. Shared by all load cases.
pub(crate) struct Hierarchy {
    pub levels: Vec<GridOperator>,
    diagonals: Vec<Vec<f64>>,
    /// Nodal 3 x 3 diagonal blocks of every level but the coarsest.
    blocks: Vec<Vec<[f64; 9]>>,
}

pub(crate) const MAX_COARSE_DOFS: usize = 1100;

impl Hierarchy {
    /// Coarsens while possible; hands the fine grid back if the coarsest grid
    /// stays too large for a dense factorisation.
    pub fn build(fine: GridOperator) -> Result<Hierarchy, GridOperator> {
        let mut levels = vec![fine];
        loop {
            let last = levels.last().unwrap();
            if last.dofs() <= MAX_COARSE_DOFS {
                break;
            }
            if last.n % 2 != 0 || last.n < 4 {
                return Err(levels.swap_remove(0));
            }
            let next = coarsen(last);
            levels.push(next);
        }
        let diagonals = vec![levels[0].diagonal()];
        let blocks = levels[..levels.len() - 1].iter().map(|l| l.block_diagonal()).collect();
        Ok(Hierarchy {
            levels,
            diagonals,
            blocks,
        })
    }

    /// Single-level hierarchy (Jacobi preconditioning only).
    pub fn single(fine: GridOperator) -> Hierarchy {
        let diagonals = vec![fine.diagonal()];
        Hierarchy {
            levels: vec![fine],
            diagonals,
            blocks: Vec::new(),
        }
    }

    pub fn fine(&self) -> &GridOperator {
        &self.levels[0]
    }

    pub fn fine_diagonal(&self) -> &[f64] {
        &self.diagonals[0]
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn v_cycle(&self, constraints: &[FaceConstraint]) -> VCycle<'_> {
        let masks: Vec<Vec<bool>> = self
            .levels
            .iter()
            .map(|l| constraint_mask(l.nodes_per_side(), constraints))
            .collect();
        let inv_blocks = self
            .blocks
            .iter()
            .zip(&masks)
            .map(|(b, m)| b.iter().enumerate().map(|(node, b)| masked_block_inverse(b, &m[3 * node..3 * node + 3])).collect())
            .collect();
        let coarse = dense_factor(self.levels.last().unwrap(), masks.last().unwrap());
        let buffers = self.levels.iter().map(|l| LevelBuffers::new(l.dofs())).collect();
        VCycle {
            hierarchy: self,
            masks,
            inv_blocks,
            coarse,
            buffers,
        }
    }
}

/// Inverse of a nodal block restricted to its free components, zero elsewhere.
fn masked_block_inverse(block: &[f64; 9], fixed: &[bool]) -> [f64; 9] {
    let mut b = Matrix3::from_row_slice(block);
    for c in 0..3 {
        if fixed[c] {
            b.row_mut(c).fill(0.0);
            b.column_mut(c).fill(0.0);
            b[(c, c)] = 1.0;
        }
    }
    let mut inv = b.try_inverse().unwrap_or_else(Matrix3::zeros);
    for c in 0..3 {
        if fixed[c] {
            inv.row_mut(c).fill(0.0);
            inv.column_mut(c).fill(0.0);
        }
    }
    let mut out = [0.0; 9];
    for r in 0..3 {
        for c in 0..3 {
            out[3 * r + c] = inv[(r, c)];
        }
    }
    out
}

fn dense_factor(op: &GridOperator, mask: &[bool]) -> nalgebra::Cholesky<f64, nalgebra::Dyn> {
    let n = op.dofs();
    let mut k = DMatrix::zeros(n, n);
    for ez in 0..op.n {
        for ey in 0..op.n {
            for ex in 0..op.n {
                let dofs = op.element_dofs(ex, ey, ez);
                let ke = op.element_matrix(op.elem_index(ex, ey, ez));
                for p in 0..24 {
                    if mask[dofs[p]] {
                        continue;
                    }
                    for q in 0..24 {
                        if !mask[dofs[q]] {
                            k[(dofs[p], dofs[q])] += ke[(p, q)];
                        }
                    }
                }
            }
        }
    }
    for (i, &fixed) in mask.iter().enumerate() {
        if fixed {
            k[(i, i)] = 1.0;
        }
    }
    k.cholesky().expect("coarse operator must be positive definite")
}

struct LevelBuffers {
    rhs: Vec<f64>,
    x: Vec<f64>,
    tmp: Vec<f64>,
}

impl LevelBuffers {
    fn new(n: usize) -> Self {
        Self {
            rhs: vec![0.0; n],
            x: vec![0.0; n],
            tmp: vec![0.0; n],
        }
    }
}

/// One symmetric V-cycle: nodal block Gauss-Seidel in eight-colour order
/// (forward before the coarse correction, backward after) and a dense
/// coarse solve. Nodes of one colour share no element, so each colour is
/// updated in parallel without changing the result.
pub(crate) struct VCycle<'a> {
    hierarchy: &'a Hierarchy,
    masks: Vec<Vec<bool>>,
    inv_blocks: Vec<Vec<[f64; 9]>>,
    coarse: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    buffers: Vec<LevelBuffers>,
}

const SMOOTHING_STEPS: usize = 2;

impl VCycle<'_> {
    fn smooth(&mut self, level: usize, forward: bool) {
        let op = &self.hierarchy.levels[level];
        let inv = &self.inv_blocks[level];
        let buf = &mut self.buffers[level];
        let m = op.nodes_per_side();
        let plane = 3 * m * m;
        for step in 0..8 {
            let colour = if forward { step } else { 7 - step };
            let (cx, cy, cz) = (colour & 1, (colour >> 1) & 1, colour >> 2);
            let x = &buf.x;
            let rhs = &buf.rhs;
            buf.tmp.par_chunks_mut(plane).enumerate().filter(|(k, _)| k % 2 == cz).for_each(|(k, out)| {
                for j in (cy..m).step_by(2) {
                    for i in (cx..m).step_by(2) {
                        let node = op.node_index(i, j, k);
                        let ax = op.apply_node(x, i, j, k, node);
                        let r = [0, 1, 2].map(|c| rhs[3 * node + c] - ax[c]);
                        let b = &inv[node];
                        let at = 3 * (i + m * j);
                        for c in 0..3 {
                            out[at + c] = b[3 * c] * r[0] + b[3 * c + 1] * r[1] + b[3 * c + 2] * r[2];
                        }
                    }
                }
            });
            let tmp = &buf.tmp;
            buf.x.par_chunks_mut(plane).enumerate().filter(|(k, _)| k % 2 == cz).for_each(|(k, xs)| {
                let ts = &tmp[k * plane..(k + 1) * plane];
                for j in (cy..m).step_by(2) {
                    for i in (cx..m).step_by(2) {
                        let at = 3 * (i + m * j);
                        for c in 0..3 {
                            xs[at + c] += ts[at + c];
                        }
                    }
                }
            });
        }
    }

    fn cycle(&mut self, level: usize) {
        let last = self.hierarchy.levels.len() - 1;
        if level == last {
            let buf = &mut self.buffers[level];
            let mut rhs = DVector::from_column_slice(&buf.rhs);
            for (r, &fixed) in rhs.iter_mut().zip(&self.masks[level]) {
                if fixed {
                    *r = 0.0;
                }
            }
            self.coarse.solve_mut(&mut rhs);
            buf.x.copy_from_slice(rhs.as_slice());
            return;
        }
        self.buffers[level].x.fill(0.0);
        for _ in 0..SMOOTHING_STEPS {
            self.smooth(level, true);
        }

        // restrict the residual
        let (fine_bufs, coarse_bufs) = self.buffers.split_at_mut(level + 1);
        let fb = &mut fine_bufs[level];
        let cb = &mut coarse_bufs[0];
        let op = &self.hierarchy.levels[level];
        op.apply(&fb.x, &mut fb.tmp);
        fb.tmp
            .par_iter_mut()
            .zip(fb.rhs.par_iter().zip(self.masks[level].par_iter()))
            .for_each(|(t, (b, &fixed))| *t = if fixed { 0.0 } else { b - *t });
        restrict(op.n, &fb.tmp, &mut cb.rhs);
        for (r, &fixed) in cb.rhs.iter_mut().zip(&self.masks[level + 1]) {
            if fixed {
                *r = 0.0;
            }
        }

        self.cycle(level + 1);

        let (fine_bufs, coarse_bufs) = self.buffers.split_at_mut(level + 1);
        let fb = &mut fine_bufs[level];
        prolongate_add(op.n, &coarse_bufs[0].x, &mut fb.x, &self.masks[level]);
        for _ in 0..SMOOTHING_STEPS {
            self.smooth(level, false);
        }
    }
}

impl Preconditioner for VCycle<'_> {
    fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        self.buffers[0].rhs.copy_from_slice(r);
        self.cycle(0);
        z.copy_from_slice(&self.buffers[0].x);
    }
}

/// Fine node coordinate -> contributing coarse nodes with weights.
fn parents(f: usize) -> [(usize, f64); 2] {
    if f % 2 == 0 {
        [(f / 2, 1.0), (f / 2, 0.0)]
    } else {
        [((f - 1) / 2, 0.5), ((f + 1) / 2, 0.5)]
    }
}

/// Adds `P xc` to `xf` on free degrees of freedom (`nf` fine elements per side).
fn prolongate_add(nf: usize, xc: &[f64], xf: &mut [f64], mask: &[bool]) {
    let mf = nf + 1;
    let mc = nf / 2 + 1;
    xf.par_chunks_mut(3 * mf * mf).enumerate().for_each(|(k, plane)| {
        let pk = parents(k);
        for j in 0..mf {
            let pj = parents(j);
            for i in 0..mf {
                let pi = parents(i);
                let mut acc = [0.0; 3];
                for &(ck, wk) in &pk {
                    for &(cj, wj) in &pj {
                        for &(ci, wi) in &pi {
                            let w = wk * wj * wi;
                            if w == 0.0 {
                                continue;
                            }
                            let cn = ci + mc * (cj + mc * ck);
                            for c in 0..3 {
                                acc[c] += w * xc[3 * cn + c];
                            }
                        }
                    }
                }
                let base = 3 * (i + mf * j);
                let node = i + mf * (j + mf * k);
                for c in 0..3 {
                    if !mask[3 * node + c] {
                        plane[base + c] += acc[c];
                    }
                }
            }
        }
    });
}

/// `rc = P^T rf`.
fn restrict(nf: usize, rf: &[f64], rc: &mut [f64]) {
    let mf = nf + 1;
    let mc = nf / 2 + 1;
    rc.par_chunks_mut(3 * mc * mc).enumerate().for_each(|(kc, plane)| {
        for jc in 0..mc {
            for ic in 0..mc {
                let mut acc = [0.0; 3];
                for dk in -1isize..=1 {
                    let k = 2 * kc as isize + dk;
                    if k < 0 || k >= mf as isize {
                        continue;
                    }
                    for dj in -1isize..=1 {
                        let j = 2 * jc as isize + dj;
                        if j < 0 || j >= mf as isize {
                            continue;
                        }
                        for di in -1isize..=1 {
                            let i = 2 * ic as isize + di;
                            if i < 0 || i >= mf as isize {
                                continue;
                            }
                            let w = [di, dj, dk].iter().map(|d| if *d == 0 { 1.0 } else { 0.5 }).product::<f64>();
                            let fnode = i as usize + mf * (j as usize + mf * k as usize);
                            for c in 0..3 {
                                acc[c] += w * rf[3 * fnode + c];
                            }
                        }
                    }
                }
                plane[3 * (ic + mc * jc)..3 * (ic + mc * jc) + 3].copy_from_slice(&acc);
            }
        }
    });
}
