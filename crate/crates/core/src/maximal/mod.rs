mod cubes;
mod rects;
mod shapes;

use serde::{Deserialize, Serialize};

use crate::convex::ConvexBody;
use crate::error::{Error, Result};
use crate::grid::{GridMask, Window};

/// Added to every threshold before the strict comparison `average > α`, so that averages
/// which equal `α` as rationals never flip on rounding.
pub const NUDGE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BasisKind {
    Cubes,
    Balls,
    StrongRects,
    Convex { body: ConvexBody },
}

/// Discretization limits: largest element size in cells (`None` = whatever the window
/// allows) and the size step in cells.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BasisLimits {
    #[serde(default)]
    pub max_cells: Option<usize>,
    #[serde(default = "one")]
    pub stride: usize,
}

fn one() -> usize {
    1
}

impl Default for BasisLimits {
    fn default() -> Self {
        BasisLimits {
            max_cells: None,
            stride: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    #[serde(flatten)]
    pub kind: BasisKind,
    #[serde(flatten, default)]
    pub limits: BasisLimits,
}

impl Basis {
    pub fn cubes() -> Self {
        Basis::new(BasisKind::Cubes)
    }

    pub fn balls() -> Self {
        Basis::new(BasisKind::Balls)
    }

    pub fn strong() -> Self {
        Basis::new(BasisKind::StrongRects)
    }

    pub fn convex(body: ConvexBody) -> Self {
        Basis::new(BasisKind::Convex { body })
    }

    pub fn new(kind: BasisKind) -> Self {
        Basis {
            kind,
            limits: BasisLimits::default(),
        }
    }

    pub fn with_limits(mut self, limits: BasisLimits) -> Self {
        self.limits = limits;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            BasisKind::Cubes => "cubes",
            BasisKind::Balls => "balls",
            BasisKind::StrongRects => "strong_rects",
            BasisKind::Convex { .. } => "convex",
        }
    }

    fn validate(&self, window: &Window) -> Result<()> {
        if self.limits.stride == 0 || self.limits.max_cells == Some(0) {
            return Err(Error::Domain("basis limits must be positive".into()));
        }
        match &self.kind {
            BasisKind::Cubes if !window.is_isotropic() => Err(Error::InvalidWindow(
                "cubes need equal cell sizes on every axis".into(),
            )),
            BasisKind::Convex { body } if body.n() != window.n() => Err(Error::WindowMismatch),
            _ => Ok(()),
        }
    }
}

/// Exact form of the comparison `count / cells > α + NUDGE`, with the threshold written
/// as `m / 2^shift`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Level {
    m: i128,
    shift: u32,
    t: f64,
}

impl Level {
    pub(crate) fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!("threshold α = {alpha} must lie in (0, 1)")));
        }
        let t = alpha + NUDGE;
        let bits = t.to_bits();
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let mut m = ((bits & ((1u64 << 52) - 1)) | (1u64 << 52)) as i128;
        let mut shift = (1075 - exp) as u32;
        while m % 2 == 0 && shift > 0 {
            m /= 2;
            shift -= 1;
        }
        Ok(Level { m, shift, t })
    }

    pub(crate) fn t(&self) -> f64 {
        self.t
    }

    pub(crate) fn exceeds(&self, count: u64, cells: u64) -> bool {
        ((count as i128) << self.shift) > self.m * cells as i128
    }

    /// `count·2^shift − m·cells`; positive iff `exceeds`.
    pub(crate) fn excess(&self, count: u64, cells: u64) -> i128 {
        ((count as i128) << self.shift) - self.m * cells as i128
    }
}

/// Values of the maximal function `M_B χ_E` on every cell of the window.
#[derive(Clone, Debug, PartialEq)]
pub struct MaximalField {
    pub window: Window,
    pub values: Vec<f64>,
    /// Set when the basis limits were cut down to what the window can hold.
    pub clamped: bool,
}

impl MaximalField {
    pub fn get(&self, c: &[usize]) -> f64 {
        self.values[self.window.linear(c)]
    }

    /// Cells with value `> α` (same nudge as [`halo_set`]).
    pub fn superlevel(&self, alpha: f64) -> Result<GridMask> {
        let t = Level::new(alpha)?.t();
        GridMask::from_bits(&self.window, self.values.iter().map(|&v| v > t).collect())
    }
}

/// Halo set together with the clamping flag of the computation.
#[derive(Clone, Debug)]
pub struct Halo {
    pub mask: GridMask,
    pub clamped: bool,
}

fn check_nonempty(e: &GridMask) -> Result<()> {
    if e.is_empty() {
        Err(Error::EmptySet("maximal function of an empty set".into()))
    } else {
        Ok(())
    }
}

pub fn maximal_field(e: &GridMask, basis: &Basis) -> Result<MaximalField> {
    check_nonempty(e)?;
    basis.validate(e.window())?;
    let window = e.window().clone();
    let (values, clamped) = match &basis.kind {
        BasisKind::StrongRects => (rects::field(e), basis.limits.max_cells.is_some()),
        BasisKind::Cubes => cubes::field(e, &basis.limits),
        BasisKind::Balls => shapes::field(e, &shapes::Profile::Ball, &basis.limits)?,
        BasisKind::Convex { body } => {
            shapes::field(e, &shapes::Profile::Body(body.clone()), &basis.limits)?
        }
    };
    Ok(MaximalField {
        window,
        values,
        clamped,
    })
}

pub fn halo(e: &GridMask, basis: &Basis, alpha: f64) -> Result<Halo> {
    let level = Level::new(alpha)?;
    check_nonempty(e)?;
    basis.validate(e.window())?;
    let (bits, clamped) = match &basis.kind {
        BasisKind::StrongRects => (rects::halo(e, &level), basis.limits.max_cells.is_some()),
        BasisKind::Cubes => cubes::halo(e, &level, &basis.limits),
        BasisKind::Balls => shapes::halo(e, &level, &shapes::Profile::Ball, &basis.limits)?,
        BasisKind::Convex { body } => {
            shapes::halo(e, &level, &shapes::Profile::Body(body.clone()), &basis.limits)?
        }
    };
    Ok(Halo {
        mask: GridMask::from_bits(e.window(), bits)?,
        clamped,
    })
}

/// `H_{B,α}(E)`: cells where the maximal function exceeds `α`.
pub fn halo_set(e: &GridMask, basis: &Basis, alpha: f64) -> Result<GridMask> {
    Ok(halo(e, basis, alpha)?.mask)
}

/// `|H_{B,α}(E)| / |E|`.
pub fn halo_ratio(e: &GridMask, basis: &Basis, alpha: f64) -> Result<f64> {
    let h = halo_set(e, basis, alpha)?;
    Ok(h.count() as f64 / e.count() as f64)
}
