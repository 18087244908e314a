//! Strut geometry of nested X-cross lattice unit cells.
//!
//! A unit cell is the cube `[-L0/2, L0/2]^3` centred on the origin. Each
//! nesting order `i` contributes an X-cross: the two face diagonals of the
//! three central planes of a cube of side `L_i`, turned by `theta_i` about the
//! orientation axis. The base structure is then made cubic-symmetric by
//! unioning its 90-degree images about Y, X and Z in turn and trimming
//! everything outside the cell.

mod catalog;
mod io;

use nalgebra::{Rotation3, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use catalog::{all_designs, catalog, design, Family};
pub use io::{model_from_str, model_to_string, read_model, write_model};

pub type Vec3 = Vector3<f64>;

pub const DEFAULT_CELL_SIZE_MM: f64 = 8.75;
pub const DEFAULT_SPACING_MM: f64 = 1.81;
pub const DEFAULT_DIAMETER_MM: f64 = 0.8;

/// Endpoint tolerance used when deduplicating segments.
pub const DEDUP_TOL_MM: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    #[default]
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::x(),
            Axis::Y => Vec3::y(),
            Axis::Z => Vec3::z(),
        }
    }

    /// Exact right-handed quarter turn of `p` about this axis through the origin.
    pub fn quarter_turn(self, p: &Vec3) -> Vec3 {
        // `+ 0.0` folds negative zeros so that rotated copies compare and sort cleanly.
        match self {
            Axis::X => Vec3::new(p.x + 0.0, -p.z + 0.0, p.y + 0.0),
            Axis::Y => Vec3::new(p.z + 0.0, p.y + 0.0, -p.x + 0.0),
            Axis::Z => Vec3::new(-p.y + 0.0, p.x + 0.0, p.z + 0.0),
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "X" => Ok(Axis::X),
            "Y" => Ok(Axis::Y),
            "Z" => Ok(Axis::Z),
            other => Err(Error::InvalidArgument(format!("unknown axis {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingOrderSpec {
    pub index: usize,
    pub orientation_deg: f64,
    pub diameter_mm: f64,
}

/// Parametric description of one lattice design.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestedLatticeSpec {
    #[serde(default)]
    pub name: String,
    pub cell_size_mm: f64,
    /// Radial gap between successive nesting rings, one entry per transition.
    #[serde(default)]
    pub spacing_mm: Vec<f64>,
    #[serde(default)]
    pub orientation_axis: Axis,
    #[serde(default)]
    pub orders: Vec<NestingOrderSpec>,
}

impl NestedLatticeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size_mm > 0.0 && self.cell_size_mm.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "cell_size_mm must be positive, got {}",
                self.cell_size_mm
            )));
        }
        if let Some(a) = self.spacing_mm.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidSpec(format!("spacing_mm entries must be positive, got {a}")));
        }
        for w in self.orders.windows(2) {
            if w[1].index != w[0].index + 1 {
                return Err(Error::InvalidSpec(format!(
                    "nesting orders must be contiguous and sorted, found {} after {}",
                    w[1].index, w[0].index
                )));
            }
        }
        if self.orders.len() > 1 && self.orders[0].index != 0 {
            return Err(Error::InvalidSpec(
                "multi-order specs must start at nesting order 0".into(),
            ));
        }
        for order in &self.orders {
            if !(order.diameter_mm > 0.0 && order.diameter_mm.is_finite()) {
                return Err(Error::InvalidSpec(format!(
                    "order {} diameter must be positive, got {}",
                    order.index, order.diameter_mm
                )));
            }
            if !order.orientation_deg.is_finite() {
                return Err(Error::InvalidSpec(format!("order {} orientation is not finite", order.index)));
            }
            if order.index == 0 && order.orientation_deg != 0.0 {
                return Err(Error::InvalidSpec(
                    "nesting order 0 must keep orientation 0 deg".into(),
                ));
            }
        }
        self.side_lengths().map(|_| ())
    }

    pub fn max_index(&self) -> Option<usize> {
        self.orders.iter().map(|o| o.index).max()
    }

    /// Side lengths `L_0 ..= L_max` of every nesting order up to the deepest one used.
    pub fn side_lengths(&self) -> Result<Vec<f64>> {
        let count = self.max_index().map_or(1, |m| m + 1);
        nesting_side_lengths(self.cell_size_mm, &self.spacing_mm, count)
    }

    /// Ring radii `R_i = L_i / sqrt(2)`.
    pub fn ring_radii(&self) -> Result<Vec<f64>> {
        Ok(self
            .side_lengths()?
            .into_iter()
            .map(|l| l / std::f64::consts::SQRT_2)
            .collect())
    }

    pub fn order_mut(&mut self, index: usize) -> Option<&mut NestingOrderSpec> {
        self.orders.iter_mut().find(|o| o.index == index)
    }

    pub fn with_uniform_diameter(mut self, diameter_mm: f64) -> Self {
        for order in &mut self.orders {
            order.diameter_mm = diameter_mm;
        }
        self
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidSpec(e.to_string()))
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let spec: NestedLatticeSpec =
            toml::from_str(s).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Vec3,
    pub b: Vec3,
    pub radius_mm: f64,
}

impl Segment {
    pub fn new(a: Vec3, b: Vec3, radius_mm: f64) -> Self {
        Self { a, b, radius_mm }
    }

    pub fn length(&self) -> f64 {
        (self.b - self.a).norm()
    }

    /// Distance from `p` to the segment axis.
    pub fn axis_distance(&self, p: &Vec3) -> f64 {
        let ab = self.b - self.a;
        let ap = p - self.a;
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 {
            (ap.dot(&ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (ap - ab * t).norm()
    }

    /// Signed distance to the capsule around the axis.
    pub fn capsule_distance(&self, p: &Vec3) -> f64 {
        self.axis_distance(p) - self.radius_mm
    }

    pub fn map(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self::new(f(&self.a), f(&self.b), self.radius_mm)
    }

    fn reversed(&self) -> Self {
        Self::new(self.b, self.a, self.radius_mm)
    }

    fn matches(&self, other: &Segment, tol: f64) -> bool {
        let close = |p: &Vec3, q: &Vec3| (p - q).amax() <= tol;
        let radius_tol = 1e-12 * self.radius_mm.abs().max(1.0);
        (self.radius_mm - other.radius_mm).abs() <= radius_tol
            && ((close(&self.a, &other.a) && close(&self.b, &other.b))
                || (close(&self.a, &other.b) && close(&self.b, &other.a)))
    }

    /// Endpoint order such that `a` precedes `b` lexicographically (with tolerance).
    fn canonical(&self, tol: f64) -> Self {
        for k in 0..3 {
            let d = self.b[k] - self.a[k];
            if d.abs() > tol {
                return if d > 0.0 { *self } else { self.reversed() };
            }
        }
        *self
    }

    fn sort_key(&self) -> [f64; 7] {
        [
            self.a.x,
            self.a.y,
            self.a.z,
            self.b.x,
            self.b.y,
            self.b.z,
            self.radius_mm,
        ]
    }
}

/// Strut axes with radii plus the bounding cell.
#[derive(Clone, Debug, PartialEq)]
pub struct StrutModel {
    pub name: String,
    pub cell_size_mm: f64,
    pub segments: Vec<Segment>,
    pub spec: Option<NestedLatticeSpec>,
}

impl StrutModel {
    /// Builds an ad-hoc model; the segment list is deduplicated.
    pub fn new(cell_size_mm: f64, segments: Vec<Segment>) -> Self {
        Self {
            name: String::new(),
            cell_size_mm,
            segments: dedup_segments(&segments, DEDUP_TOL_MM),
            spec: None,
        }
    }

    pub fn empty(cell_size_mm: f64) -> Self {
        Self {
            name: String::new(),
            cell_size_mm,
            segments: Vec::new(),
            spec: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn half_size(&self) -> f64 {
        0.5 * self.cell_size_mm
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn min_diameter(&self) -> Option<f64> {
        self.segments
            .iter()
            .map(|s| 2.0 * s.radius_mm)
            .min_by(f64::total_cmp)
    }

    fn with_segments(&self, segments: Vec<Segment>) -> Self {
        Self {
            name: self.name.clone(),
            cell_size_mm: self.cell_size_mm,
            segments: dedup_segments(&segments, DEDUP_TOL_MM),
            spec: self.spec.clone(),
        }
    }

    /// Set equality of the segment lists within `tol`.
    pub fn same_segments(&self, other: &StrutModel, tol: f64) -> bool {
        self.segments.len() == other.segments.len()
            && self
                .segments
                .iter()
                .all(|s| other.segments.iter().any(|o| s.matches(o, tol)))
    }

    pub fn quarter_turned(&self, axis: Axis) -> StrutModel {
        let turned = self
            .segments
            .iter()
            .map(|s| s.map(|p| axis.quarter_turn(p)))
            .collect();
        self.with_segments(turned)
    }

    /// True when the segment set maps onto itself under a quarter turn about each principal axis.
    pub fn is_cubic_invariant(&self, tol: f64) -> bool {
        Axis::ALL
            .iter()
            .all(|&axis| self.quarter_turned(axis).same_segments(self, tol))
    }
}

/// Side lengths of successive nesting orders: `L_{i+1} = sqrt(2) * (L_i / sqrt(2) - alpha_i)`.
pub fn nesting_side_lengths(l0: f64, spacings: &[f64], count: usize) -> Result<Vec<f64>> {
    if !(l0 > 0.0) {
        return Err(Error::NonPositiveLength {
            index: 0,
            length_mm: l0,
        });
    }
    if count == 0 {
        return Ok(Vec::new());
    }
    if spacings.len() + 1 < count {
        return Err(Error::InvalidSpec(format!(
            "{count} nesting orders need {} spacings, got {}",
            count - 1,
            spacings.len()
        )));
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut lengths = Vec::with_capacity(count);
    lengths.push(l0);
    for (i, alpha) in spacings.iter().take(count - 1).enumerate() {
        if !(*alpha > 0.0) {
            return Err(Error::InvalidSpec(format!("spacing {i} must be positive, got {alpha}")));
        }
        let next = sqrt2 * (lengths[i] / sqrt2 - alpha);
        if !(next > 0.0) {
            return Err(Error::NonPositiveLength {
                index: i + 1,
                length_mm: next,
            });
        }
        lengths.push(next);
    }
    Ok(lengths)
}

/// The six X-cross struts of one nesting order: both diagonals of the XY, YZ
/// and XZ central planes of a cube of side `side_mm`, turned anti-clockwise by
/// `orientation_deg` about `axis` through `center`.
pub fn xcross_struts(
    side_mm: f64,
    orientation_deg: f64,
    axis: Axis,
    diameter_mm: f64,
    center: Vec3,
) -> Vec<Segment> {
    let h = 0.5 * side_mm;
    let r = 0.5 * diameter_mm;
    let rot = Rotation3::from_axis_angle(&Unit::new_unchecked(axis.unit()), orientation_deg.to_radians());
    let v = |x: f64, y: f64, z: f64| center + rot * Vec3::new(x, y, z);
    vec![
        // XY
        Segment::new(v(-h, -h, 0.0), v(h, h, 0.0), r),
        Segment::new(v(-h, h, 0.0), v(h, -h, 0.0), r),
        // YZ
        Segment::new(v(0.0, -h, -h), v(0.0, h, h), r),
        Segment::new(v(0.0, -h, h), v(0.0, h, -h), r),
        // XZ
        Segment::new(v(-h, 0.0, -h), v(h, 0.0, h), r),
        Segment::new(v(-h, 0.0, h), v(h, 0.0, -h), r),
    ]
}

/// Nested base structure: one X-cross per order, all centred in the cell.
pub fn build_base(spec: &NestedLatticeSpec) -> Result<StrutModel> {
    spec.validate()?;
    let lengths = spec.side_lengths()?;
    let segments: Vec<Segment> = spec
        .orders
        .iter()
        .flat_map(|o| {
            xcross_struts(
                lengths[o.index],
                o.orientation_deg,
                spec.orientation_axis,
                o.diameter_mm,
                Vec3::zeros(),
            )
        })
        .collect();
    Ok(StrutModel {
        name: spec.name.clone(),
        cell_size_mm: spec.cell_size_mm,
        segments: dedup_segments(&segments, DEDUP_TOL_MM),
        spec: Some(spec.clone()),
    })
}

/// Union of the model with its 90, 180 and 270 degree images about `axis`.
pub fn fourfold(model: &StrutModel, axis: Axis) -> StrutModel {
    let mut all = Vec::with_capacity(4 * model.segments.len());
    let mut current = model.segments.clone();
    for _ in 0..4 {
        all.extend_from_slice(&current);
        current = current
            .iter()
            .map(|s| s.map(|p| axis.quarter_turn(p)))
            .collect();
    }
    model.with_segments(all)
}

/// Four-fold unions about Y, then X, then Z, followed by trimming every strut
/// axis to the cell box.
pub fn t4fas_fold(model: &StrutModel) -> StrutModel {
    let folded = fourfold(&fourfold(&fourfold(model, Axis::Y), Axis::X), Axis::Z);
    let h = model.half_size();
    let clipped = folded
        .segments
        .iter()
        .filter_map(|s| clip_to_box(s, h))
        .collect();
    model.with_segments(clipped)
}

/// Build + fold in one call.
pub fn build_unit_cell(spec: &NestedLatticeSpec) -> Result<StrutModel> {
    Ok(t4fas_fold(&build_base(spec)?))
}

/// Liang-Barsky clip of a segment axis against `[-h, h]^3`.
fn clip_to_box(s: &Segment, h: f64) -> Option<Segment> {
    let d = s.b - s.a;
    let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
    for k in 0..3 {
        for (p, q) in [(-d[k], s.a[k] + h), (d[k], h - s.a[k])] {
            if p == 0.0 {
                if q < 0.0 {
                    return None;
                }
            } else {
                let t = q / p;
                if p < 0.0 {
                    t0 = t0.max(t);
                } else {
                    t1 = t1.min(t);
                }
            }
        }
    }
    if t0 >= t1 {
        return None;
    }
    let clamp = |p: Vec3| p.map(|c| c.clamp(-h, h));
    let a = if t0 > 0.0 { clamp(s.a + d * t0) } else { s.a };
    let b = if t1 < 1.0 { clamp(s.a + d * t1) } else { s.b };
    ((b - a).norm() > DEDUP_TOL_MM).then(|| Segment::new(a, b, s.radius_mm))
}

/// Collapses segments whose endpoint pairs agree within `tol` in either order
/// (radii must match). Output is sorted by canonicalised endpoints.
pub fn dedup_segments(segments: &[Segment], tol: f64) -> Vec<Segment> {
    let mut kept: Vec<Segment> = Vec::with_capacity(segments.len());
    for s in segments {
        let c = s.canonical(tol);
        if !kept.iter().any(|k| k.matches(&c, tol)) {
            kept.push(c);
        }
    }
    kept.sort_by(|x, y| {
        x.sort_key()
            .iter()
            .zip(y.sort_key().iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cross_has(segs: &[Segment], a: Vec3, b: Vec3) -> bool {
        let probe = Segment::new(a, b, segs[0].radius_mm);
        segs.iter().any(|s| s.matches(&probe, 1e-9))
    }

    #[test]
    fn side_lengths_follow_ring_recursion() {
        let l = nesting_side_lengths(8.75, &[1.81, 1.81], 3).unwrap();
        assert_eq!(l.len(), 3);
        assert!((l[0] - 8.75).abs() < 1e-12);
        assert!((l[1] - 6.1903).abs() < 1e-3);
        assert!((l[2] - 3.6305).abs() < 1e-3);

        assert_eq!(nesting_side_lengths(10.0, &[], 1).unwrap(), vec![10.0]);
    }

    #[test]
    fn oversized_spacing_is_rejected() {
        match nesting_side_lengths(8.75, &[4.0, 4.0], 3) {
            Err(Error::NonPositiveLength { index, .. }) => assert_eq!(index, 2),
            other => panic!("expected NonPositiveLength, got {other:?}"),
        }
    }

    #[test]
    fn telescoped_lengths_match_recursion() {
        let alphas = [0.3, 0.7, 0.11, 0.52];
        let l = nesting_side_lengths(9.3, &alphas, 5).unwrap();
        for i in 0..5 {
            let telescoped = 9.3 - std::f64::consts::SQRT_2 * alphas[..i].iter().sum::<f64>();
            assert_relative_eq!(l[i], telescoped, max_relative = 1e-12);
        }
    }

    #[test]
    fn xcross_struts_are_face_diagonals() {
        let segs = xcross_struts(4.0, 0.0, Axis::Z, 0.8, Vec3::zeros());
        assert_eq!(segs.len(), 6);
        for s in &segs {
            assert_relative_eq!(s.length(), 4.0 * std::f64::consts::SQRT_2, epsilon = 1e-12);
            assert_eq!(s.radius_mm, 0.4);
        }
        assert!(cross_has(&segs, Vec3::new(-2.0, -2.0, 0.0), Vec3::new(2.0, 2.0, 0.0)));
        assert!(cross_has(&segs, Vec3::new(-2.0, 2.0, 0.0), Vec3::new(2.0, -2.0, 0.0)));
    }

    #[test]
    fn xcross_struts_rotate_anticlockwise() {
        let segs = xcross_struts(4.0, 45.0, Axis::Z, 0.8, Vec3::zeros());
        let r = 2.0 * std::f64::consts::SQRT_2;
        assert!(cross_has(&segs, Vec3::new(0.0, -r, 0.0), Vec3::new(0.0, r, 0.0)));
        assert!(cross_has(&segs, Vec3::new(-r, 0.0, 0.0), Vec3::new(r, 0.0, 0.0)));
        for s in &segs {
            assert_relative_eq!(s.length(), 4.0 * std::f64::consts::SQRT_2, epsilon = 1e-12);
        }
        // a positive turn carries +x towards +y
        let turned = xcross_struts(4.0, 10.0, Axis::Z, 0.8, Vec3::zeros());
        let end = turned[0].b;
        assert!(end.y > end.x);
    }

    #[test]
    fn base_has_six_struts_per_order() {
        let mono = design("XNFS:1:15").unwrap();
        assert_eq!(build_base(&mono).unwrap().segments.len(), 6);
        let tri = design("XNFS:0-15-30").unwrap();
        assert_eq!(build_base(&tri).unwrap().segments.len(), 18);
    }

    #[test]
    fn infeasible_spec_fails_in_build() {
        let mut spec = design("XNFS:0-0-0").unwrap();
        spec.spacing_mm = vec![4.0, 4.0];
        assert!(matches!(build_base(&spec), Err(Error::NonPositiveLength { .. })));
    }

    #[test]
    fn spec_validation() {
        let mut spec = design("XNFS:0-1:0-30").unwrap();
        spec.orders[0].orientation_deg = 15.0;
        assert!(spec.validate().is_err());

        let mut spec = design("XNFS:0-1:0-30").unwrap();
        spec.orders[1].diameter_mm = 0.0;
        assert!(spec.validate().is_err());

        let mut spec = design("XNFS:0-15-30").unwrap();
        spec.orders.remove(1);
        assert!(spec.validate().is_err());

        let mut spec = design("XNFS:0:0").unwrap();
        spec.cell_size_mm = -1.0;
        assert!(spec.validate().is_err());

        // a lone deeper order is a valid custom spec
        let mono = design("XNFS:2:30").unwrap();
        assert!(mono.validate().is_ok());
    }

    #[test]
    fn fourfold_of_empty_is_empty() {
        let m = StrutModel::empty(8.75);
        assert!(fourfold(&m, Axis::Y).is_empty());
        assert!(t4fas_fold(&m).is_empty());
    }

    #[test]
    fn fourfold_single_diagonal_orbit() {
        // the quarter turns about Y carry one XY diagonal to both XY and both YZ diagonals
        let h = 4.375;
        let m = StrutModel::new(
            8.75,
            vec![Segment::new(Vec3::new(-h, -h, 0.0), Vec3::new(h, h, 0.0), 0.4)],
        );
        let folded = fourfold(&m, Axis::Y);
        // brute-force orbit
        let mut orbit = Vec::new();
        let mut s = m.segments[0];
        for _ in 0..4 {
            orbit.push(s);
            s = s.map(|p| Axis::Y.quarter_turn(p));
        }
        let expected = dedup_segments(&orbit, DEDUP_TOL_MM);
        assert_eq!(expected.len(), 4);
        assert_eq!(folded.segments, expected);
        assert!(fourfold(&folded, Axis::Y).same_segments(&folded, 1e-9));
    }

    #[test]
    fn fold_of_symmetric_cross_is_fixed_point() {
        let spec = design("XNFS:0:0").unwrap();
        let base = build_base(&spec).unwrap();
        let folded = t4fas_fold(&base);
        assert_eq!(folded.segments.len(), 6);
        assert!(folded.same_segments(&base, 1e-9));
    }

    #[test]
    fn clip_keeps_interior_portion() {
        let s = Segment::new(Vec3::new(-6.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0), 0.3);
        let c = clip_to_box(&s, 4.375).unwrap();
        assert_eq!(c.a, Vec3::new(-4.375, 0.0, 0.0));
        assert_eq!(c.b, s.b);
        let outside = Segment::new(Vec3::new(5.0, 0.0, 0.0), Vec3::new(6.0, 1.0, 0.0), 0.3);
        assert!(clip_to_box(&outside, 4.375).is_none());
    }

    #[test]
    fn dedup_rules() {
        let a = Vec3::new(0.1, 0.2, 0.3);
        let b = Vec3::new(1.0, -2.0, 0.5);
        let s = Segment::new(a, b, 0.4);
        assert_eq!(dedup_segments(&[s, s], 1e-6).len(), 1);
        assert_eq!(dedup_segments(&[s, s.reversed()], 1e-6).len(), 1);
        let shifted = s.map(|p| p + Vec3::new(0.0, 0.0, 1e-5));
        assert_eq!(dedup_segments(&[s, shifted], 1e-6).len(), 2);
        let fatter = Segment::new(a, b, 0.5);
        assert_eq!(dedup_segments(&[s, fatter], 1e-6).len(), 2);
    }

    /// The 24 proper rotations of the cube as integer matrices, by closure.
    fn octahedral_group() -> Vec<nalgebra::Matrix3<f64>> {
        use nalgebra::Matrix3;
        let gens = [
            Matrix3::new(1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0),
            Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 0.0),
        ];
        let mut group = vec![Matrix3::identity()];
        let mut i = 0;
        while i < group.len() {
            for g in &gens {
                let m = g * group[i];
                if !group.iter().any(|q| (q - m).amax() < 1e-12) {
                    group.push(m);
                }
            }
            i += 1;
        }
        group
    }

    fn orbit_oracle(model: &StrutModel) -> Vec<Segment> {
        let h = model.half_size();
        let all: Vec<Segment> = octahedral_group()
            .iter()
            .flat_map(|r| model.segments.iter().map(move |s| s.map(|p| r * p)))
            .filter_map(|s| clip_to_box(&s, h))
            .collect();
        dedup_segments(&all, DEDUP_TOL_MM)
    }

    #[test]
    fn group_has_24_elements() {
        assert_eq!(octahedral_group().len(), 24);
    }

    #[test]
    fn fold_of_one_diagonal_gives_all_central_diagonals() {
        let h = 4.375;
        let m = StrutModel::new(
            8.75,
            vec![Segment::new(Vec3::new(-h, -h, 0.0), Vec3::new(h, h, 0.0), 0.4)],
        );
        let folded = t4fas_fold(&m);
        assert_eq!(folded.segments.len(), 6);
        let oracle = StrutModel::new(8.75, orbit_oracle(&m));
        assert!(folded.same_segments(&oracle, 1e-9));
    }

    #[test]
    fn sequential_fold_matches_group_orbit_on_catalog() {
        for spec in all_designs() {
            let base = build_base(&spec).unwrap();
            let folded = t4fas_fold(&base);
            let oracle = StrutModel::new(spec.cell_size_mm, orbit_oracle(&base));
            assert!(folded.same_segments(&oracle, 1e-9), "{}", spec.name);
            assert!(folded.is_cubic_invariant(1e-9), "{}", spec.name);
        }
    }

    #[test]
    fn orientation_axis_does_not_change_folded_set() {
        for spec in all_designs() {
            let reference = build_unit_cell(&spec).unwrap();
            for axis in [Axis::X, Axis::Y] {
                let mut other = spec.clone();
                other.orientation_axis = axis;
                let folded = build_unit_cell(&other).unwrap();
                assert!(folded.same_segments(&reference, 1e-9), "{} about {axis:?}", spec.name);
            }
        }
    }

    fn arb_segment() -> impl Strategy<Value = Segment> {
        let coord = -6.0..6.0f64;
        (
            [coord.clone(), coord.clone(), coord.clone()],
            [coord.clone(), coord.clone(), coord],
            0.05..0.8f64,
        )
            .prop_filter("distinct endpoints", |(a, b, _)| {
                (Vec3::from(*a) - Vec3::from(*b)).norm() > 1e-3
            })
            .prop_map(|(a, b, r)| Segment::new(Vec3::from(a), Vec3::from(b), r))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn fold_is_cubic_invariant_and_idempotent(segs in prop::collection::vec(arb_segment(), 1..4)) {
            let m = StrutModel::new(8.75, segs);
            let once = t4fas_fold(&m);
            prop_assert!(once.is_cubic_invariant(1e-6));
            let twice = t4fas_fold(&once);
            prop_assert!(twice.same_segments(&once, 1e-6));
            let h = m.half_size();
            for s in &once.segments {
                prop_assert!(s.a.amax() <= h && s.b.amax() <= h);
            }
        }
    }

    #[test]
    fn spec_toml_round_trip() {
        let spec = design("XNFS:0-15-45").unwrap();
        let text = spec.to_toml_string().unwrap();
        assert!(text.contains("cell_size_mm"));
        assert!(text.contains("[[orders]]"));
        let back = NestedLatticeSpec::from_toml_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
