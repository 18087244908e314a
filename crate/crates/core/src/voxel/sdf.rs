//! Signed distance fields over strut models.

use rayon::prelude::*;

use crate::geometry::{Segment, StrutModel, Vec3};

/// A regular sample lattice `origin + pitch * (i, j, k)` for `i, j, k < points`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lattice {
    pub origin: Vec3,
    pub pitch: f64,
    pub points: usize,
}

impl Lattice {
    pub fn len(&self) -> usize {
        self.points.pow(3)
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.points * (j + self.points * k)
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(
            self.origin.x + self.pitch * i as f64,
            self.origin.y + self.pitch * j as f64,
            self.origin.z + self.pitch * k as f64,
        )
    }

    /// Index range along one axis of lattice points with coordinate in `[lo, hi]`.
    fn span(&self, origin: f64, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let first = ((lo - origin) / self.pitch).ceil().max(0.0);
        let last = ((hi - origin) / self.pitch).floor();
        if last < 0.0 || first > last {
            return 0..0;
        }
        let end = (last as usize + 1).min(self.points);
        (first as usize).min(end)..end
    }
}

/// Anything with a signed distance: negative inside, positive outside.
pub trait SignedDistance: Sync {
    fn distance(&self, p: &Vec3) -> f64;

    /// Samples the field at every lattice point. Implementations may clamp
    /// values far from the surface, but must keep the sign and the exact
    /// value wherever `|distance| < lattice.pitch * 1.5`.
    fn fill_lattice(&self, lattice: &Lattice) -> Vec<f64> {
        let n = lattice.points;
        let mut out = vec![0.0; lattice.len()];
        out.par_chunks_mut(n * n).enumerate().for_each(|(k, plane)| {
            for j in 0..n {
                for i in 0..n {
                    plane[i + n * j] = self.distance(&lattice.point(i, j, k));
                }
            }
        });
        out
    }
}

/// Signed distance of `p` to the axis-aligned box `[-h, h]^3`.
pub fn box_distance(p: &Vec3, h: f64) -> f64 {
    let q = p.abs() - Vec3::repeat(h);
    let outside = q.sup(&Vec3::zeros()).norm();
    let inside = q.max().min(0.0);
    outside + inside
}

/// Union of capsules without the cell box; used for open surfaces.
#[derive(Clone, Copy, Debug)]
pub struct StrutUnion<'a> {
    pub segments: &'a [Segment],
}

impl<'a> StrutUnion<'a> {
    pub fn new(model: &'a StrutModel) -> Self {
        Self {
            segments: &model.segments,
        }
    }
}

impl SignedDistance for StrutUnion<'_> {
    fn distance(&self, p: &Vec3) -> f64 {
        self.segments
            .iter()
            .map(|s| s.capsule_distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Narrow-band rasterisation: each capsule only touches the lattice points
    /// inside its bounding box grown by the band. Points farther than the band
    /// from every capsule hold `band` instead of their exact distance.
    fn fill_lattice(&self, lattice: &Lattice) -> Vec<f64> {
        let n = lattice.points;
        let band = 1.5 * lattice.pitch;
        let mut out = vec![band; lattice.len()];
        out.par_chunks_mut(n * n).enumerate().for_each(|(k, plane)| {
            let z = lattice.origin.z + lattice.pitch * k as f64;
            for s in self.segments {
                let reach = s.radius_mm + band;
                if z < s.a.z.min(s.b.z) - reach || z > s.a.z.max(s.b.z) + reach {
                    continue;
                }
                let xs = lattice.span(lattice.origin.x, s.a.x.min(s.b.x) - reach, s.a.x.max(s.b.x) + reach);
                let ys = lattice.span(lattice.origin.y, s.a.y.min(s.b.y) - reach, s.a.y.max(s.b.y) + reach);
                for j in ys {
                    for i in xs.clone() {
                        let d = s.capsule_distance(&lattice.point(i, j, k));
                        let slot = &mut plane[i + n * j];
                        if d < *slot {
                            *slot = d;
                        }
                    }
                }
            }
        });
        out
    }
}

/// The solid of a unit cell: capsule union intersected with the cell box.
#[derive(Clone, Copy, Debug)]
pub struct CellSolid<'a> {
    pub struts: StrutUnion<'a>,
    pub half_size: f64,
}

impl<'a> CellSolid<'a> {
    pub fn new(model: &'a StrutModel) -> Self {
        Self {
            struts: StrutUnion::new(model),
            half_size: model.half_size(),
        }
    }
}

impl SignedDistance for CellSolid<'_> {
    fn distance(&self, p: &Vec3) -> f64 {
        self.struts.distance(p).max(box_distance(p, self.half_size))
    }

    fn fill_lattice(&self, lattice: &Lattice) -> Vec<f64> {
        let mut values = self.struts.fill_lattice(lattice);
        let n = lattice.points;
        values.par_chunks_mut(n * n).enumerate().for_each(|(k, plane)| {
            for j in 0..n {
                for i in 0..n {
                    let b = box_distance(&lattice.point(i, j, k), self.half_size);
                    let v = &mut plane[i + n * j];
                    *v = v.max(b);
                }
            }
        });
        values
    }
}

/// Signed distance of the strut solid of a unit cell; `+inf` for an empty model.
pub fn sdf(model: &StrutModel, p: &Vec3) -> f64 {
    CellSolid::new(model).distance(p)
}

/// A solid ball, mostly useful as a test fixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl SignedDistance for Sphere {
    fn distance(&self, p: &Vec3) -> f64 {
        (p - self.center).norm() - self.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rod() -> StrutModel {
        StrutModel::new(
            8.75,
            vec![Segment::new(Vec3::new(-4.375, 0.0, 0.0), Vec3::new(4.375, 0.0, 0.0), 0.4)],
        )
    }

    #[test]
    fn sdf_examples() {
        let m = rod();
        assert_eq!(sdf(&m, &Vec3::new(1.0, 0.0, 0.0)), -0.4);
        assert!(sdf(&m, &Vec3::new(1.0, 0.4, 0.0)).abs() < 1e-15);
        // inside the capsule cap but outside the box
        assert!(sdf(&m, &Vec3::new(4.5, 0.0, 0.0)) > 0.0);
        assert_eq!(sdf(&StrutModel::empty(8.75), &Vec3::zeros()), f64::INFINITY);
    }

    #[test]
    fn box_distance_values() {
        assert_eq!(box_distance(&Vec3::zeros(), 1.0), -1.0);
        assert_eq!(box_distance(&Vec3::new(2.0, 0.0, 0.0), 1.0), 1.0);
        assert!((box_distance(&Vec3::new(2.0, 2.0, 0.0), 1.0) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn narrow_band_agrees_with_exact_near_surface() {
        let model = crate::geometry::build_unit_cell(&crate::geometry::design("XNFS:0-1:0-15").unwrap()).unwrap();
        let lattice = Lattice {
            origin: Vec3::repeat(-4.375),
            pitch: 8.75 / 24.0,
            points: 25,
        };
        let banded = StrutUnion::new(&model).fill_lattice(&lattice);
        let exact = SignedDistance::fill_lattice(&Exact(StrutUnion::new(&model)), &lattice);
        for (b, e) in banded.iter().zip(&exact) {
            assert_eq!(b.signum(), e.signum());
            if e.abs() < 1.5 * lattice.pitch {
                assert_eq!(b, e);
            } else {
                assert!(*b >= 1.5 * lattice.pitch || b == e);
            }
        }
    }

    /// Uses only the per-point default path.
    struct Exact<'a>(StrutUnion<'a>);

    impl SignedDistance for Exact<'_> {
        fn distance(&self, p: &Vec3) -> f64 {
            self.0.distance(p)
        }
    }

    proptest! {
        #[test]
        fn capsule_distance_is_one_lipschitz(
            a in prop::array::uniform3(-3.0..3.0f64),
            b in prop::array::uniform3(-3.0..3.0f64),
            p in prop::array::uniform3(-5.0..5.0f64),
            dir in prop::array::uniform3(-1.0..1.0f64),
            r in 0.1..1.0f64,
        ) {
            let s = Segment::new(Vec3::from(a), Vec3::from(b), r);
            let d = Vec3::from(dir);
            prop_assume!(d.norm() > 1e-3);
            let d = d.normalize();
            let p = Vec3::from(p);
            for step in [1e-3, 0.1, 0.7, 2.5] {
                let q = p + d * step;
                prop_assert!((s.capsule_distance(&q) - s.capsule_distance(&p)).abs() <= step * (1.0 + 1e-12));
            }
        }
    }
}
