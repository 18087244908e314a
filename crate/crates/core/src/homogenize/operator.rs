//! Matrix-free stiffness operator on a structured hexahedral grid.
//!
//! Every element is either a scaled copy of one reference matrix or, on
//! coarse multigrid levels, an explicitly stored matrix. Products are formed
//! node by node (each output node gathers from its up to eight elements), so
//! there are no write conflicts and the result is independent of scheduling.

use rayon::prelude::*;

use super::element::{node_offset, Mat24};

pub(crate) const ELEM_LEN: usize = 576;

/// Offsets `(dx, dy, dz)` in `{-1, 0, 1}^3`, x fastest.
fn offset(d: usize) -> [isize; 3] {
    [(d % 3) as isize - 1, ((d / 3) % 3) as isize - 1, (d / 9) as isize - 1]
}

pub(crate) fn to_flat(m: &Mat24) -> Box<[f64; ELEM_LEN]> {
    let mut out = Box::new([0.0; ELEM_LEN]);
    for i in 0..24 {
        for j in 0..24 {
            out[24 * i + j] = m[(i, j)];
        }
    }
    out
}

pub(crate) fn from_flat(m: &[f64]) -> Mat24 {
    Mat24::from_fn(|i, j| m[24 * i + j])
}

#[derive(Clone, Debug)]
pub(crate) struct GridOperator {
    /// Elements per side; nodes per side is `n + 1`.
    pub n: usize,
    /// Element matrix of a unit-scale element at this level, row-major.
    pub base: Box<[f64; ELEM_LEN]>,
    /// Scale of each element, `NaN` when the element has its own matrix.
    pub elem_scale: Vec<f64>,
    /// Index into `mixed` for elements with their own matrix.
    pub elem_mixed: Vec<u32>,
    pub mixed: Vec<f64>,
    /// 27-point stencil of an interior node whose elements all share one scale.
    stencil: Box<[[f64; 9]; 27]>,
    /// Common scale of the eight elements around each interior node, else `NaN`.
    node_scale: Vec<f64>,
}

impl GridOperator {
    pub fn new(n: usize, base: Box<[f64; ELEM_LEN]>, elem_scale: Vec<f64>, elem_mixed: Vec<u32>, mixed: Vec<f64>) -> Self {
        let stencil = build_stencil(&base);
        let mut op = Self {
            n,
            base,
            elem_scale,
            elem_mixed,
            mixed,
            stencil,
            node_scale: Vec::new(),
        };
        op.node_scale = op.classify_nodes();
        op
    }

    /// Operator whose elements are all scaled copies of `base`.
    pub fn uniform_phases(n: usize, base: Box<[f64; ELEM_LEN]>, elem_scale: Vec<f64>) -> Self {
        let count = elem_scale.len();
        Self::new(n, base, elem_scale, vec![0; count], Vec::new())
    }

    pub fn nodes_per_side(&self) -> usize {
        self.n + 1
    }

    pub fn dofs(&self) -> usize {
        3 * self.nodes_per_side().pow(3)
    }

    pub fn elem_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n * (j + self.n * k)
    }

    pub fn node_index(&self, i: usize, j: usize, k: usize) -> usize {
        let m = self.n + 1;
        i + m * (j + m * k)
    }

    /// Scale and matrix of element `e`.
    pub fn element(&self, e: usize) -> (f64, &[f64]) {
        let s = self.elem_scale[e];
        if s.is_nan() {
            let start = self.elem_mixed[e] as usize * ELEM_LEN;
            (1.0, &self.mixed[start..start + ELEM_LEN])
        } else {
            (s, &self.base[..])
        }
    }

    pub fn element_matrix(&self, e: usize) -> Mat24 {
        let (s, m) = self.element(e);
        from_flat(m) * s
    }

    fn classify_nodes(&self) -> Vec<f64> {
        let m = self.n + 1;
        let mut out = vec![f64::NAN; m * m * m];
        for k in 1..self.n {
            for j in 1..self.n {
                for i in 1..self.n {
                    let first = self.elem_scale[self.elem_index(i - 1, j - 1, k - 1)];
                    if first.is_nan() {
                        continue;
                    }
                    let same = (0..8).all(|a| {
                        let o = node_offset(a);
                        self.elem_scale[self.elem_index(i - 1 + o[0], j - 1 + o[1], k - 1 + o[2])] == first
                    });
                    if same {
                        out[self.node_index(i, j, k)] = first;
                    }
                }
            }
        }
        out
    }

    /// Elements touching node `(i, j, k)` with the node's local index in each.
    fn adjacent(&self, i: usize, j: usize, k: usize, mut f: impl FnMut(usize, [usize; 3], usize)) {
        let range = |c: usize| c.saturating_sub(1)..=c.min(self.n - 1);
        for ez in range(k) {
            for ey in range(j) {
                for ex in range(i) {
                    let a = (i - ex) + 2 * (j - ey) + 4 * (k - ez);
                    f(self.elem_index(ex, ey, ez), [ex, ey, ez], a);
                }
            }
        }
    }

    /// `y = K u` over all degrees of freedom.
    pub fn apply(&self, u: &[f64], y: &mut [f64]) {
        let m = self.n + 1;
        let plane = 3 * m * m;
        y.par_chunks_mut(plane).enumerate().for_each(|(k, out)| {
            for j in 0..m {
                for i in 0..m {
                    let node = self.node_index(i, j, k);
                    let acc = self.apply_node(u, i, j, k, node);
                    out[3 * (i + m * j)..3 * (i + m * j) + 3].copy_from_slice(&acc);
                }
            }
        });
    }

    #[inline]
    pub fn apply_node(&self, u: &[f64], i: usize, j: usize, k: usize, node: usize) -> [f64; 3] {
        let m = self.n + 1;
        let mut acc = [0.0; 3];
        let s = self.node_scale[node];
        if !s.is_nan() {
            let stride = [1, m as isize, (m * m) as isize];
            for (d, block) in self.stencil.iter().enumerate() {
                let o = offset(d);
                let nb = (node as isize + o[0] * stride[0] + o[1] * stride[1] + o[2] * stride[2]) as usize;
                let v: &[f64; 3] = u[3 * nb..3 * nb + 3].try_into().unwrap();
                acc[0] += block[0] * v[0] + block[1] * v[1] + block[2] * v[2];
                acc[1] += block[3] * v[0] + block[4] * v[1] + block[5] * v[2];
                acc[2] += block[6] * v[0] + block[7] * v[1] + block[8] * v[2];
            }
            return acc.map(|a| a * s);
        }
        self.adjacent(i, j, k, |e, lo, a| {
            let (s, mat) = self.element(e);
            let mut part = [0.0; 3];
            for b in 0..8 {
                let o = node_offset(b);
                let nb = self.node_index(lo[0] + o[0], lo[1] + o[1], lo[2] + o[2]);
                let v = &u[3 * nb..3 * nb + 3];
                for c in 0..3 {
                    let row = &mat[24 * (3 * a + c) + 3 * b..24 * (3 * a + c) + 3 * b + 3];
                    part[c] += row[0] * v[0] + row[1] * v[1] + row[2] * v[2];
                }
            }
            for c in 0..3 {
                acc[c] += s * part[c];
            }
        });
        acc
    }

    /// Diagonal of the assembled matrix.
    pub fn diagonal(&self) -> Vec<f64> {
        let m = self.n + 1;
        let mut out = vec![0.0; self.dofs()];
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let node = self.node_index(i, j, k);
                    self.adjacent(i, j, k, |e, _, a| {
                        let (s, mat) = self.element(e);
                        for c in 0..3 {
                            out[3 * node + c] += s * mat[24 * (3 * a + c) + 3 * a + c];
                        }
                    });
                }
            }
        }
        out
    }

    /// 3 x 3 diagonal block of every node, row-major.
    pub fn block_diagonal(&self) -> Vec<[f64; 9]> {
        let m = self.n + 1;
        let mut out = vec![[0.0; 9]; m * m * m];
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let node = self.node_index(i, j, k);
                    self.adjacent(i, j, k, |e, _, a| {
                        let (s, mat) = self.element(e);
                        for c in 0..3 {
                            for d in 0..3 {
                                out[node][3 * c + d] += s * mat[24 * (3 * a + c) + 3 * a + d];
                            }
                        }
                    });
                }
            }
        }
        out
    }

    /// Global DOF indices of element `(ex, ey, ez)` in local order.
    pub fn element_dofs(&self, ex: usize, ey: usize, ez: usize) -> [usize; 24] {
        let mut dofs = [0; 24];
        for b in 0..8 {
            let o = node_offset(b);
            let node = self.node_index(ex + o[0], ey + o[1], ez + o[2]);
            for c in 0..3 {
                dofs[3 * b + c] = 3 * node + c;
            }
        }
        dofs
    }
}

fn build_stencil(base: &[f64; ELEM_LEN]) -> Box<[[f64; 9]; 27]> {
    let mut st = Box::new([[0.0; 9]; 27]);
    // centre node sits at local index a in the element whose lowest node is (1,1,1) - offset(a)
    for a in 0..8 {
        let oa = node_offset(a);
        for b in 0..8 {
            let ob = node_offset(b);
            let d = (0..3).map(|t| ob[t] as isize - oa[t] as isize + 1).collect::<Vec<_>>();
            let idx = (d[0] + 3 * d[1] + 9 * d[2]) as usize;
            for c in 0..3 {
                for e in 0..3 {
                    st[idx][3 * c + e] += base[24 * (3 * a + c) + 3 * b + e];
                }
            }
        }
    }
    st
}
