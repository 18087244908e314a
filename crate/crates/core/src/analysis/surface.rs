//! Directional Young's modulus of a cubic solid and its surface mesh.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::CubicConstants;
use crate::geometry::Vec3;
use crate::voxel::TriMesh;
use crate::{Error, Result};

/// Independent compliances of a cubic solid, GPa^-1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Compliance {
    pub s11: f64,
    pub s12: f64,
    pub s44: f64,
}

pub fn compliance(cc: &CubicConstants) -> Result<Compliance> {
    let det = (cc.c11 - cc.c12) * (cc.c11 + 2.0 * cc.c12);
    if det == 0.0 || cc.c44 == 0.0 {
        return Err(Error::DegenerateInput(format!(
            "singular cubic stiffness ({}, {}, {})",
            cc.c11, cc.c12, cc.c44
        )));
    }
    Ok(Compliance {
        s11: (cc.c11 + cc.c12) / det,
        s12: -cc.c12 / det,
        s44: 1.0 / cc.c44,
    })
}

/// Young's modulus along the unit direction `n`, GPa.
pub fn directional_modulus(s: &Compliance, n: &Vec3) -> Result<f64> {
    if (n.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("direction {n:?} is not a unit vector")));
    }
    let (a, b, c) = (n.x * n.x, n.y * n.y, n.z * n.z);
    let inv = s.s11 - 2.0 * (s.s11 - s.s12 - 0.5 * s.s44) * (a * b + b * c + c * a);
    if !(inv > 0.0) {
        return Err(Error::DegenerateInput(format!("non-positive compliance {inv} along {n:?}")));
    }
    Ok(1.0 / inv)
}

/// Unit icosphere: the icosahedron with every face split `subdivisions` times.
pub fn icosphere(subdivisions: u32) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::from(*p).normalize())
    .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut mid = |a: u32, b: u32, vertices: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                vertices.push(((vertices[a as usize] + vertices[b as usize]) * 0.5).normalize());
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    TriMesh {
        vertices,
        triangles,
        watertight: true,
    }
}

/// Icosphere whose vertex along `n` sits at radius `E(n) / E_s`.
pub fn ymsurface_mesh(cc: &CubicConstants, e_s_gpa: f64, subdivisions: u32) -> Result<TriMesh> {
    if !(e_s_gpa > 0.0) {
        return Err(Error::InvalidArgument(format!("base modulus must be positive, got {e_s_gpa}")));
    }
    let s = compliance(cc)?;
    let mut mesh = icosphere(subdivisions);
    for v in &mut mesh.vertices {
        let r = directional_modulus(&s, v)? / e_s_gpa;
        *v *= r;
    }
    Ok(mesh)
}
