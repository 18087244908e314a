//! Trilinear hexahedral voxel element.

use nalgebra::SMatrix;
#[cfg(test)]
use nalgebra::SVector;

pub type Mat24 = SMatrix<f64, 24, 24>;
pub type Mat6x24 = SMatrix<f64, 6, 24>;
pub type Mat6 = SMatrix<f64, 6, 6>;

/// Isotropic constitutive matrix in Voigt order (11, 22, 33, 23, 31, 12) with
/// engineering shear strains.
pub fn constitutive(lambda: f64, mu: f64) -> Mat6 {
    let mut d = Mat6::zeros();
    for i in 0..3 {
        for j in 0..3 {
            d[(i, j)] = lambda;
        }
        d[(i, i)] = lambda + 2.0 * mu;
        d[(i + 3, i + 3)] = mu;
    }
    d
}

/// Local node `a = ax + 2 ay + 4 az` sits at `(ax, ay, az) * h`.
pub fn node_offset(a: usize) -> [usize; 3] {
    [a & 1, (a >> 1) & 1, (a >> 2) & 1]
}

/// Strain-displacement matrix at reference point `xi` in `[0, 1]^3`.
pub fn strain_displacement(xi: [f64; 3], h: f64) -> Mat6x24 {
    let mut b = Mat6x24::zeros();
    for a in 0..8 {
        let o = node_offset(a);
        let f = |d: usize, x: f64| if o[d] == 1 { x } else { 1.0 - x };
        let df = |d: usize| if o[d] == 1 { 1.0 } else { -1.0 };
        let dx = df(0) * f(1, xi[1]) * f(2, xi[2]) / h;
        let dy = f(0, xi[0]) * df(1) * f(2, xi[2]) / h;
        let dz = f(0, xi[0]) * f(1, xi[1]) * df(2) / h;
        let c = 3 * a;
        b[(0, c)] = dx;
        b[(1, c + 1)] = dy;
        b[(2, c + 2)] = dz;
        b[(3, c + 1)] = dz;
        b[(3, c + 2)] = dy;
        b[(4, c)] = dz;
        b[(4, c + 2)] = dx;
        b[(5, c)] = dy;
        b[(5, c + 1)] = dx;
    }
    b
}

/// Stiffness of a cube element of edge `h`, integrated with 2x2x2 Gauss points.
pub fn hex_element_stiffness(lambda: f64, mu: f64, h: f64) -> Mat24 {
    let d = constitutive(lambda, mu);
    let g = 0.5 / 3f64.sqrt();
    let pts = [0.5 - g, 0.5 + g];
    let weight = h * h * h / 8.0;
    let mut k = Mat24::zeros();
    for &x in &pts {
        for &y in &pts {
            for &z in &pts {
                let b = strain_displacement([x, y, z], h);
                k += b.transpose() * d * b * weight;
            }
        }
    }
    // exact symmetry; the products above can differ in the last bit
    (k + k.transpose()) * 0.5
}

/// Maps element nodal displacements to the element-averaged stress.
pub fn stress_operator(lambda: f64, mu: f64, h: f64) -> Mat6x24 {
    constitutive(lambda, mu) * strain_displacement([0.5; 3], h)
}

/// Nodal displacement vector of a uniform strain field `u = E x` (engineering
/// shear in `strain`), sampled at the element's nodes with origin at node 0.
#[cfg(test)]
pub fn affine_nodal(strain: &[f64; 6], h: f64) -> SVector<f64, 24> {
    let e = macro_tensor(strain);
    let mut u = SVector::<f64, 24>::zeros();
    for a in 0..8 {
        let o = node_offset(a);
        for c in 0..3 {
            u[3 * a + c] = (0..3).map(|d| e[c][d] * o[d] as f64 * h).sum();
        }
    }
    u
}

/// Symmetric displacement-gradient tensor of a Voigt strain with engineering shear.
pub fn macro_tensor(strain: &[f64; 6]) -> [[f64; 3]; 3] {
    let [e11, e22, e33, g23, g31, g12] = *strain;
    [
        [e11, 0.5 * g12, 0.5 * g31],
        [0.5 * g12, e22, 0.5 * g23],
        [0.5 * g31, 0.5 * g23, e33],
    ]
}
