use std::str::FromStr;

use super::{
    Axis, NestedLatticeSpec, NestingOrderSpec, DEFAULT_CELL_SIZE_MM, DEFAULT_DIAMETER_MM,
    DEFAULT_SPACING_MM,
};
use crate::error::{Error, Result};

const ORIENTATIONS: [f64; 4] = [0.0, 15.0, 30.0, 45.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Mono,
    Bi,
    Tri,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Mono, Family::Bi, Family::Tri];
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mono" => Ok(Family::Mono),
            "bi" => Ok(Family::Bi),
            "tri" => Ok(Family::Tri),
            other => Err(Error::InvalidArgument(format!("unknown catalog family {other:?}"))),
        }
    }
}

fn spec(name: String, orders: &[(usize, f64)]) -> NestedLatticeSpec {
    NestedLatticeSpec {
        name,
        cell_size_mm: DEFAULT_CELL_SIZE_MM,
        spacing_mm: vec![DEFAULT_SPACING_MM; 2],
        orientation_axis: Axis::Z,
        orders: orders
            .iter()
            .map(|&(index, orientation_deg)| NestingOrderSpec {
                index,
                orientation_deg,
                diameter_mm: DEFAULT_DIAMETER_MM,
            })
            .collect(),
    }
}

/// Named designs of one family with the default cell size, spacing and diameter.
pub fn catalog(family: Family) -> Vec<NestedLatticeSpec> {
    match family {
        Family::Mono => {
            let mut out = vec![spec("XNFS:0:0".into(), &[(0, 0.0)])];
            for index in 1..=2 {
                for t in ORIENTATIONS {
                    out.push(spec(format!("XNFS:{index}:{t}"), &[(index, t)]));
                }
            }
            out
        }
        Family::Bi => ORIENTATIONS
            .iter()
            .map(|&t| spec(format!("XNFS:0-1:0-{t}"), &[(0, 0.0), (1, t)]))
            .collect(),
        Family::Tri => ORIENTATIONS
            .iter()
            .flat_map(|&t1| {
                ORIENTATIONS
                    .iter()
                    .map(move |&t2| spec(format!("XNFS:0-{t1}-{t2}"), &[(0, 0.0), (1, t1), (2, t2)]))
            })
            .collect(),
    }
}

pub fn all_designs() -> Vec<NestedLatticeSpec> {
    Family::ALL.iter().flat_map(|&f| catalog(f)).collect()
}

/// Looks up a catalog design by name, e.g. `XNFS:1:45`, `XNFS:0-1:0-30` or `XNFS:0-15-30`.
pub fn design(name: &str) -> Result<NestedLatticeSpec> {
    let name = name.trim();
    all_designs()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown design {name:?}")))
}
