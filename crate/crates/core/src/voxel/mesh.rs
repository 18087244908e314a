//! Marching-cubes surfaces and mesh file formats.

use std::collections::HashMap;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::sync::OnceLock;

use super::sdf::{CellSolid, Lattice, SignedDistance, StrutUnion};
use crate::error::{Error, Result};
use crate::geometry::{StrutModel, Vec3};

/// Triangle soup with shared vertices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TriMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
    pub watertight: bool,
}

impl TriMesh {
    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    pub fn corners(&self, t: &[u32; 3]) -> [Vec3; 3] {
        t.map(|v| self.vertices[v as usize])
    }

    /// Non-normalised normal, twice the triangle area in length.
    fn raw_normal(&self, t: &[u32; 3]) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn normal(&self, t: &[u32; 3]) -> Vec3 {
        let n = self.raw_normal(t);
        let len = n.norm();
        if len > 0.0 {
            n / len
        } else {
            Vec3::zeros()
        }
    }

    /// Total area, summed in triangle order.
    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| 0.5 * self.raw_normal(t).norm()).sum()
    }

    /// Signed enclosed volume (divergence theorem); meaningful for closed meshes.
    pub fn volume(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| {
                let [a, b, c] = self.corners(t);
                a.dot(&b.cross(&c)) / 6.0
            })
            .sum()
    }

    /// True when every undirected edge is shared by exactly two triangles.
    pub fn check_watertight(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        let mut uses: HashMap<(u32, u32), u32> = HashMap::new();
        for t in &self.triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                *uses.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        uses.values().all(|&c| c == 2)
    }

    fn drop_degenerate(&mut self) {
        let verts = &self.vertices;
        self.triangles.retain(|t| {
            let [a, b, c] = t.map(|v| verts[v as usize]);
            (b - a).cross(&(c - a)).norm_squared() > 0.0
        });
    }
}

const CORNER: [[usize; 3]; 8] = {
    let mut c = [[0; 3]; 8];
    let mut i = 0;
    while i < 8 {
        c[i] = [i & 1, (i >> 1) & 1, (i >> 2) & 1];
        i += 1;
    }
    c
};

/// Cube edges as `(low corner, axis)`; the high corner is `low | 1 << axis`.
fn cube_edges() -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(12);
    for axis in 0..3 {
        for c in 0..8 {
            if c & (1 << axis) == 0 {
                edges.push((c, axis));
            }
        }
    }
    edges
}

fn edge_between(edges: &[(usize, usize)], p: usize, q: usize) -> usize {
    let low = p.min(q);
    let axis = (p ^ q).trailing_zeros() as usize;
    edges.iter().position(|&e| e == (low, axis)).unwrap()
}

/// Corner cycles of the six cube faces, counter-clockwise seen from outside.
fn face_cycles() -> Vec<[usize; 4]> {
    let mut faces = Vec::with_capacity(6);
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in 0..2 {
            let mut corners: Vec<usize> = (0..8).filter(|&c| CORNER[c][axis] == side).collect();
            corners.sort_by(|&p, &q| {
                let ang = |c: usize| (CORNER[c][v] as f64 - 0.5).atan2(CORNER[c][u] as f64 - 0.5);
                ang(p).total_cmp(&ang(q))
            });
            if side == 0 {
                corners.reverse();
            }
            faces.push([corners[0], corners[1], corners[2], corners[3]]);
        }
    }
    faces
}

/// Triangles (as local edge triples) for each of the 256 corner sign patterns.
///
/// On every face the inside corners are cut off run by run, which makes the
/// choice on ambiguous faces depend only on that face, so neighbouring cells
/// agree and the surface closes up.
fn case_table() -> &'static [Vec<[u8; 3]>; 256] {
    static TABLE: OnceLock<[Vec<[u8; 3]>; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let edges = cube_edges();
        let faces = face_cycles();
        let build = |mask: usize| -> Vec<[u8; 3]> {
            let inside = |c: usize| mask & (1 << c) != 0;
            let mut next: HashMap<usize, usize> = HashMap::new();
            for face in &faces {
                let mut entries = Vec::new();
                let mut exits = Vec::new();
                for k in 0..4 {
                    let (p, q) = (face[k], face[(k + 1) % 4]);
                    if inside(p) && !inside(q) {
                        exits.push((k, edge_between(&edges, p, q)));
                    } else if !inside(p) && inside(q) {
                        entries.push((k, edge_between(&edges, p, q)));
                    }
                }
                for &(k, entry) in &entries {
                    let exit = (1..=4)
                        .map(|s| (k + s) % 4)
                        .find_map(|pos| exits.iter().find(|e| e.0 == pos))
                        .unwrap()
                        .1;
                    next.insert(entry, exit);
                }
            }
            let mut starts: Vec<usize> = next.keys().copied().collect();
            starts.sort_unstable();
            let mut seen = vec![false; 12];
            let mut tris = Vec::new();
            for s in starts {
                if seen[s] {
                    continue;
                }
                let mut lp = vec![s];
                seen[s] = true;
                let mut e = next[&s];
                while e != s {
                    seen[e] = true;
                    lp.push(e);
                    e = next[&e];
                }
                for k in 1..lp.len() - 1 {
                    tris.push([lp[0] as u8, lp[k] as u8, lp[k + 1] as u8]);
                }
            }
            tris
        };
        let mut table: [Vec<[u8; 3]>; 256] = std::array::from_fn(build);

        // orient so that normals point from inside (negative) to outside
        let mid = |e: usize| {
            let (c, axis) = edges[e];
            let mut p = Vec3::new(CORNER[c][0] as f64, CORNER[c][1] as f64, CORNER[c][2] as f64);
            p[axis] += 0.5;
            p
        };
        let t = table[1][0];
        let [a, b, c] = t.map(|e| mid(e as usize));
        if (b - a).cross(&(c - a)).dot(&Vec3::repeat(1.0)) < 0.0 {
            for tris in table.iter_mut() {
                for t in tris.iter_mut() {
                    t.swap(1, 2);
                }
            }
        }
        table
    })
}

/// Triangulates the zero level set of `values` sampled on `lattice`
/// (negative = inside). Outward normals point towards positive values.
pub fn marching_cubes(values: &[f64], lattice: &Lattice) -> TriMesh {
    let table = case_table();
    let edges = cube_edges();
    let p = lattice.points;
    assert_eq!(values.len(), lattice.len());
    let mut mesh = TriMesh::default();
    let mut vertex_of: HashMap<(usize, usize), u32> = HashMap::new();
    if p < 2 {
        return mesh;
    }
    let stride = [1, p, p * p];
    for k in 0..p - 1 {
        for j in 0..p - 1 {
            for i in 0..p - 1 {
                let base = lattice.index(i, j, k);
                let corner_index = |c: usize| {
                    base + CORNER[c][0] * stride[0] + CORNER[c][1] * stride[1] + CORNER[c][2] * stride[2]
                };
                let mut mask = 0;
                for c in 0..8 {
                    if values[corner_index(c)] < 0.0 {
                        mask |= 1 << c;
                    }
                }
                if mask == 0 || mask == 255 {
                    continue;
                }
                for tri in &table[mask] {
                    let ids = tri.map(|e| {
                        let (c, axis) = edges[e as usize];
                        let lo = corner_index(c);
                        *vertex_of.entry((lo, axis)).or_insert_with(|| {
                            let hi = lo + stride[axis];
                            let (v0, v1) = (values[lo], values[hi]);
                            let t = (v0 / (v0 - v1)).clamp(1e-6, 1.0 - 1e-6);
                            let (li, lj, lk) = (lo % p, (lo / p) % p, lo / (p * p));
                            let mut pos = lattice.point(li, lj, lk);
                            pos[axis] += t * lattice.pitch;
                            mesh.vertices.push(pos);
                            (mesh.vertices.len() - 1) as u32
                        })
                    });
                    mesh.triangles.push(ids);
                }
            }
        }
    }
    mesh.drop_degenerate();
    mesh.watertight = mesh.check_watertight();
    mesh
}

/// Samples any field on `lattice` and triangulates its zero set.
pub fn mesh_field(field: &impl SignedDistance, lattice: &Lattice) -> TriMesh {
    marching_cubes(&field.fill_lattice(lattice), lattice)
}

fn check_mesh_resolution(n: usize) -> Result<()> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "surface meshing needs resolution >= 8, got {n}"
        )));
    }
    Ok(())
}

/// Open strut surface: the capsule union on the `(n+1)^3` cell-corner lattice.
/// Where struts leave the cell the surface simply stops, so the cut disks on
/// the cell faces carry no area.
pub fn surface_mesh(model: &StrutModel, resolution: usize) -> Result<TriMesh> {
    check_mesh_resolution(resolution)?;
    let h = model.cell_size_mm / resolution as f64;
    let lattice = Lattice {
        origin: Vec3::repeat(-model.half_size()),
        pitch: h,
        points: resolution + 1,
    };
    let mesh = mesh_field(&StrutUnion::new(model), &lattice);
    if mesh.is_empty() {
        return Err(Error::EmptyModel);
    }
    Ok(mesh)
}

/// Closed solid for printing: the strut union trimmed by the cell box, sampled
/// at voxel centres plus one layer outside the cell.
pub fn surface_mesh_capped(model: &StrutModel, resolution: usize) -> Result<TriMesh> {
    check_mesh_resolution(resolution)?;
    let h = model.cell_size_mm / resolution as f64;
    let lattice = Lattice {
        origin: Vec3::repeat(-model.half_size() - 0.5 * h),
        pitch: h,
        points: resolution + 2,
    };
    let mesh = mesh_field(&CellSolid::new(model), &lattice);
    if mesh.is_empty() {
        return Err(Error::EmptyModel);
    }
    Ok(mesh)
}

/// Binary little-endian STL; normals are recomputed from the winding.
pub fn write_stl(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_stl_to(mesh, BufWriter::new(f))
}

pub fn write_stl_to(mesh: &TriMesh, w: impl Write) -> Result<()> {
    write_stl_labelled(mesh, w, "nestlat binary STL")
}

/// Binary STL whose 80-byte header holds `label`, truncated to fit.
pub fn write_stl_labelled(mesh: &TriMesh, mut w: impl Write, label: &str) -> Result<()> {
    if mesh.is_empty() {
        return Err(Error::EmptyModel);
    }
    let mut header = [0u8; 80];
    let label = label.as_bytes();
    let len = label.len().min(80);
    header[..len].copy_from_slice(&label[..len]);
    w.write_all(&header)?;
    w.write_all(&(mesh.triangles.len() as u32).to_le_bytes())?;
    for t in &mesh.triangles {
        let n = mesh.normal(t);
        let [a, b, c] = mesh.corners(t);
        for v in [n, a, b, c] {
            for x in v.iter() {
                w.write_all(&(*x as f32).to_le_bytes())?;
            }
        }
        w.write_all(&[0, 0])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a binary STL as an unwelded triangle soup.
pub fn read_stl(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 84 {
        return Err(Error::parse(path, "file shorter than the STL header"));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    if bytes.len() != 84 + 50 * count {
        return Err(Error::parse(
            path,
            format!("{count} triangles need {} bytes, file has {}", 84 + 50 * count, bytes.len()),
        ));
    }
    let mut mesh = TriMesh::default();
    for t in 0..count {
        let rec = &bytes[84 + 50 * t..84 + 50 * (t + 1)];
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap()) as f64;
        for v in 1..4 {
            mesh.vertices.push(Vec3::new(f(3 * v), f(3 * v + 1), f(3 * v + 2)));
        }
        let b = 3 * t as u32;
        mesh.triangles.push([b, b + 1, b + 2]);
    }
    Ok(mesh)
}

/// Wavefront OBJ with 1-based face indices.
pub fn write_obj(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_obj_to(mesh, BufWriter::new(f))
}

pub fn write_obj_to(mesh: &TriMesh, mut w: impl Write) -> Result<()> {
    for v in &mesh.vertices {
        writeln!(w, "v {:.8e} {:.8e} {:.8e}", v.x, v.y, v.z)?;
    }
    for t in &mesh.triangles {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    w.flush()?;
    Ok(())
}
