//! Parameter grids over a base design.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DEFAULT_SWEEP_RESOLUTION;
use crate::geometry::{design, NestedLatticeSpec};
use crate::homogenize::HomogenizeOptions;
use crate::{Error, Result};

/// One adjustable quantity of a design.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ParamPath {
    /// Every diameter at once: `d`.
    Diameter,
    /// `d{i}`, diameter of nesting order `i`.
    DiameterOf(usize),
    /// `theta{i}`, orientation of nesting order `i` in degrees.
    Theta(usize),
    /// `alpha{i}`, spacing between orders `i` and `i + 1`.
    Alpha(usize),
    Resolution,
    /// `ratio:d{i}/d{j}`: sets `d_i = value * d_j` after all other axes.
    Ratio { num: usize, den: usize },
}

impl fmt::Display for ParamPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamPath::Diameter => write!(f, "d"),
            ParamPath::DiameterOf(i) => write!(f, "d{i}"),
            ParamPath::Theta(i) => write!(f, "theta{i}"),
            ParamPath::Alpha(i) => write!(f, "alpha{i}"),
            ParamPath::Resolution => write!(f, "resolution"),
            ParamPath::Ratio { num, den } => write!(f, "ratio:d{num}/d{den}"),
        }
    }
}

fn indexed(s: &str, prefix: &str) -> Option<usize> {
    s.strip_prefix(prefix).and_then(|rest| rest.parse().ok())
}

impl FromStr for ParamPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidPlan(format!("unknown parameter path {s:?}"));
        if let Some(ratio) = s.strip_prefix("ratio:") {
            let (a, b) = ratio.split_once('/').ok_or_else(bad)?;
            return match (indexed(a, "d"), indexed(b, "d")) {
                (Some(num), Some(den)) => Ok(ParamPath::Ratio { num, den }),
                _ => Err(bad()),
            };
        }
        match s {
            "d" => Ok(ParamPath::Diameter),
            "resolution" | "n" => Ok(ParamPath::Resolution),
            _ => indexed(s, "theta")
                .map(ParamPath::Theta)
                .or_else(|| indexed(s, "alpha").map(ParamPath::Alpha))
                .or_else(|| indexed(s, "d").map(ParamPath::DiameterOf))
                .ok_or_else(bad),
        }
    }
}

impl TryFrom<String> for ParamPath {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ParamPath> for String {
    fn from(p: ParamPath) -> String {
        p.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub path: ParamPath,
    pub values: Vec<f64>,
}

/// A base design plus the axes of a Cartesian parameter grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepPlan {
    pub base_spec: NestedLatticeSpec,
    pub resolution: usize,
    pub options: HomogenizeOptions,
    pub axes: Vec<SweepAxis>,
}

/// On-disk form; `design` names a catalog entry in place of `base_spec`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanFile {
    design: Option<String>,
    base_spec: Option<NestedLatticeSpec>,
    resolution: Option<usize>,
    #[serde(default)]
    options: HomogenizeOptions,
    #[serde(default)]
    axes: Vec<SweepAxis>,
}

impl SweepPlan {
    pub fn new(base_spec: NestedLatticeSpec, axes: Vec<SweepAxis>) -> Self {
        Self {
            base_spec,
            resolution: DEFAULT_SWEEP_RESOLUTION,
            options: HomogenizeOptions::default(),
            axes,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let file: PlanFile = toml::from_str(s).map_err(|e| Error::InvalidPlan(e.to_string()))?;
        let base_spec = match (file.design, file.base_spec) {
            (Some(name), None) => design(&name)?,
            (None, Some(spec)) => spec,
            _ => return Err(Error::InvalidPlan("give exactly one of `design` and `base_spec`".into())),
        };
        let plan = SweepPlan {
            base_spec,
            resolution: file.resolution.unwrap_or(DEFAULT_SWEEP_RESOLUTION),
            options: file.options,
            axes: file.axes,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidPlan(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidPlan(m));
        self.base_spec.validate()?;
        self.options.material.validate()?;
        if self.resolution == 0 {
            return invalid("resolution must be positive".into());
        }
        if self.axes.is_empty() {
            return invalid("a plan needs at least one axis".into());
        }
        let has_order = |i: usize| self.base_spec.orders.iter().any(|o| o.index == i);
        let mut seen = HashSet::new();
        for axis in &self.axes {
            if !seen.insert(axis.path) {
                return invalid(format!("axis {} appears twice", axis.path));
            }
            if axis.values.is_empty() {
                return invalid(format!("axis {} has no values", axis.path));
            }
            if let Some(v) = axis.values.iter().find(|v| !v.is_finite()) {
                return invalid(format!("axis {} has non-finite value {v}", axis.path));
            }
            match axis.path {
                ParamPath::DiameterOf(i) | ParamPath::Theta(i) if !has_order(i) => {
                    return invalid(format!("{}: the base design has no nesting order {i}", axis.path));
                }
                ParamPath::Alpha(i) if i >= self.base_spec.spacing_mm.len() => {
                    return invalid(format!("{}: the base design has no spacing {i}", axis.path));
                }
                ParamPath::Ratio { num, den } => {
                    if num == den || !has_order(num) || !has_order(den) {
                        return invalid(format!("{}: needs two distinct existing orders", axis.path));
                    }
                    if self.axes.iter().any(|a| a.path == ParamPath::DiameterOf(num)) {
                        return invalid(format!("{} conflicts with a d{num} axis", axis.path));
                    }
                }
                ParamPath::Resolution => {
                    if let Some(v) = axis.values.iter().find(|v| !(v.fract() == 0.0 && **v >= 1.0)) {
                        return invalid(format!("resolution values must be positive integers, got {v}"));
                    }
                }
                _ => {}
            }
        }
        self.ratio_order().map(|_| ())
    }

    /// Ratio axes ordered so that every denominator is final before it is used.
    fn ratio_order(&self) -> Result<Vec<usize>> {
        let ratios: Vec<(usize, usize, usize)> = self
            .axes
            .iter()
            .enumerate()
            .filter_map(|(k, a)| match a.path {
                ParamPath::Ratio { num, den } => Some((k, num, den)),
                _ => None,
            })
            .collect();
        let mut targets = HashSet::new();
        for (_, num, _) in &ratios {
            if !targets.insert(*num) {
                return Err(Error::InvalidPlan(format!("d{num} is the target of two ratio axes")));
            }
        }
        let mut done: Vec<usize> = Vec::new();
        let mut pending = ratios;
        while !pending.is_empty() {
            let ready: Vec<_> = pending
                .iter()
                .filter(|(_, _, den)| !pending.iter().any(|(_, n, _)| n == den))
                .copied()
                .collect();
            if ready.is_empty() {
                return Err(Error::InvalidPlan("ratio axes form a cycle".into()));
            }
            pending.retain(|r| !ready.contains(r));
            done.extend(ready.iter().map(|(k, _, _)| *k));
        }
        Ok(done)
    }

    /// Every grid point in Cartesian order, last axis fastest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = vec![Vec::new()];
        for axis in &self.axes {
            out = out
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// The design and resolution at one grid point.
pub fn apply_point(plan: &SweepPlan, values: &[f64]) -> Result<(NestedLatticeSpec, usize)> {
    if values.len() != plan.axes.len() {
        return Err(Error::InvalidPlan(format!(
            "{} values for {} axes",
            values.len(),
            plan.axes.len()
        )));
    }
    let mut spec = plan.base_spec.clone();
    let mut resolution = plan.resolution;
    for (axis, &v) in plan.axes.iter().zip(values) {
        match axis.path {
            ParamPath::Diameter => spec = spec.with_uniform_diameter(v),
            ParamPath::DiameterOf(i) => order(&mut spec, i)?.diameter_mm = v,
            ParamPath::Theta(i) => order(&mut spec, i)?.orientation_deg = v,
            ParamPath::Alpha(i) => *spec.spacing_mm.get_mut(i).ok_or_else(|| missing(axis.path))? = v,
            ParamPath::Resolution => resolution = v as usize,
            ParamPath::Ratio { .. } => {}
        }
    }
    for k in plan.ratio_order()? {
        if let ParamPath::Ratio { num, den } = plan.axes[k].path {
            let d = order(&mut spec, den)?.diameter_mm;
            order(&mut spec, num)?.diameter_mm = values[k] * d;
        }
    }
    spec.validate()?;
    Ok((spec, resolution))
}

fn missing(path: ParamPath) -> Error {
    Error::InvalidPlan(format!("{path} does not resolve against the base design"))
}

fn order(spec: &mut NestedLatticeSpec, i: usize) -> Result<&mut crate::geometry::NestingOrderSpec> {
    spec.order_mut(i).ok_or_else(|| missing(ParamPath::DiameterOf(i)))
}
