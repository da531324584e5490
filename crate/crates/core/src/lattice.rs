//! Planar lattice geometry: sites, boxes, neighborhoods and spin fields.

use std::fmt;
use std::ops::Neg;

/// A site of the square lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub x: i32,
    pub y: i32,
}

impl Site {
    pub const fn new(x: i32, y: i32) -> Self {
        Site { x, y }
    }

    pub fn l1(self, other: Site) -> u32 {
        self.x.abs_diff(other.x) + self.y.abs_diff(other.y)
    }

    pub fn linf(self, other: Site) -> u32 {
        self.x.abs_diff(other.x).max(self.y.abs_diff(other.y))
    }

    pub fn offset(self, dx: i32, dy: i32) -> Site {
        Site::new(self.x + dx, self.y + dy)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Offsets of the nearest neighbors, in the order E, N, W, S.
pub const DIRS4: [(i32, i32); 4] = [(1, 0), (0, 1), (-1, 0), (0, -1)];

/// Offsets of the `*`-neighbors, counter-clockwise starting from E.
pub const DIRS8: [(i32, i32); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];

/// Nearest neighbors of `s` in the order E, N, W, S.
pub fn neighbors4(s: Site) -> [Site; 4] {
    DIRS4.map(|(dx, dy)| s.offset(dx, dy))
}

/// Sites at `l∞`-distance one from `s`.
pub fn neighbors8(s: Site) -> [Site; 8] {
    DIRS8.map(|(dx, dy)| s.offset(dx, dy))
}

/// An axis-aligned box `[x0, x0 + width - 1] × [y0, y0 + height - 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BoxRegion {
    pub origin: Site,
    pub width: u32,
    pub height: u32,
}

impl BoxRegion {
    /// Panics on an empty extent.
    pub fn new(origin: Site, width: u32, height: u32) -> Self {
        assert!(width >= 1 && height >= 1, "box extents must be positive");
        BoxRegion {
            origin,
            width,
            height,
        }
    }

    /// The crossing box `[0, n] × [0, m]` (inclusive coordinates).
    pub fn crossing(n: u32, m: u32) -> Self {
        BoxRegion::new(Site::new(0, 0), n + 1, m + 1)
    }

    /// The `l∞` ball `B(center, radius)`.
    pub fn ball(center: Site, radius: u32) -> Self {
        let r = radius as i32;
        BoxRegion::new(center.offset(-r, -r), 2 * radius + 1, 2 * radius + 1)
    }

    pub fn len(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn x_min(&self) -> i32 {
        self.origin.x
    }

    pub fn x_max(&self) -> i32 {
        self.origin.x + self.width as i32 - 1
    }

    pub fn y_min(&self) -> i32 {
        self.origin.y
    }

    pub fn y_max(&self) -> i32 {
        self.origin.y + self.height as i32 - 1
    }

    pub fn contains(&self, s: Site) -> bool {
        s.x >= self.x_min() && s.x <= self.x_max() && s.y >= self.y_min() && s.y <= self.y_max()
    }

    pub fn contains_box(&self, other: &BoxRegion) -> bool {
        self.contains(other.origin) && self.contains(Site::new(other.x_max(), other.y_max()))
    }

    /// Row-major index of `s`, or `None` outside the box.
    #[inline]
    pub fn index(&self, s: Site) -> Option<usize> {
        if self.contains(s) {
            Some(self.index_unchecked(s))
        } else {
            None
        }
    }

    #[inline]
    pub fn index_unchecked(&self, s: Site) -> usize {
        (s.y - self.origin.y) as usize * self.width as usize + (s.x - self.origin.x) as usize
    }

    #[inline]
    pub fn site(&self, index: usize) -> Site {
        let w = self.width as usize;
        self.origin
            .offset((index % w) as i32, (index / w) as i32)
    }

    /// Sites in row-major order (bottom row first).
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }

    /// The box enlarged by `margin` on every side.
    pub fn expand(&self, margin: u32) -> BoxRegion {
        let m = margin as i32;
        BoxRegion::new(
            self.origin.offset(-m, -m),
            self.width + 2 * margin,
            self.height + 2 * margin,
        )
    }

    /// Internal boundary: sites of the box with a nearest neighbor outside it.
    pub fn boundary(&self) -> Vec<Site> {
        self.sites()
            .filter(|&s| neighbors4(s).iter().any(|&n| !self.contains(n)))
            .collect()
    }

    /// The same box with the roles of the axes exchanged.
    pub fn transpose(&self) -> BoxRegion {
        BoxRegion::new(
            Site::new(self.origin.y, self.origin.x),
            self.height,
            self.width,
        )
    }
}

/// An Ising spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Spin {
    Minus,
    Plus,
}

impl Spin {
    pub fn value(self) -> i32 {
        match self {
            Spin::Minus => -1,
            Spin::Plus => 1,
        }
    }

    pub fn from_value(v: i32) -> Option<Spin> {
        match v {
            1 => Some(Spin::Plus),
            -1 => Some(Spin::Minus),
            _ => None,
        }
    }

    pub fn is_plus(self) -> bool {
        self == Spin::Plus
    }

    pub fn from_bool(plus: bool) -> Spin {
        if plus {
            Spin::Plus
        } else {
            Spin::Minus
        }
    }
}

impl Neg for Spin {
    type Output = Spin;

    fn neg(self) -> Spin {
        match self {
            Spin::Minus => Spin::Plus,
            Spin::Plus => Spin::Minus,
        }
    }
}

/// Spins on a finite box, stored row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpinField {
    region: BoxRegion,
    values: Vec<Spin>,
}

impl SpinField {
    pub fn filled(region: BoxRegion, spin: Spin) -> Self {
        SpinField {
            region,
            values: vec![spin; region.len()],
        }
    }

    pub fn from_fn(region: BoxRegion, mut f: impl FnMut(Site) -> Spin) -> Self {
        let values = region.sites().map(&mut f).collect();
        SpinField { region, values }
    }

    /// Panics if the length does not match the region.
    pub fn from_values(region: BoxRegion, values: Vec<Spin>) -> Self {
        assert_eq!(values.len(), region.len(), "spin array does not match region");
        SpinField { region, values }
    }

    pub fn region(&self) -> BoxRegion {
        self.region
    }

    pub fn values(&self) -> &[Spin] {
        &self.values
    }

    pub fn get(&self, s: Site) -> Option<Spin> {
        self.region.index(s).map(|i| self.values[i])
    }

    /// Panics outside the region.
    pub fn at(&self, s: Site) -> Spin {
        self.get(s)
            .unwrap_or_else(|| panic!("site {s} outside spin field"))
    }

    pub fn set(&mut self, s: Site, spin: Spin) {
        let i = self
            .region
            .index(s)
            .unwrap_or_else(|| panic!("site {s} outside spin field"));
        self.values[i] = spin;
    }

    pub fn restrict(&self, window: BoxRegion) -> Option<SpinField> {
        if !self.region.contains_box(&window) {
            return None;
        }
        Some(SpinField::from_fn(window, |s| self.at(s)))
    }

    /// Pointwise order: `self(x) <= other(x)` at every site. Regions must agree.
    pub fn le(&self, other: &SpinField) -> bool {
        self.region == other.region && self.values.iter().zip(&other.values).all(|(a, b)| a <= b)
    }

    pub fn count_plus(&self) -> usize {
        self.values.iter().filter(|s| s.is_plus()).count()
    }

    pub fn flipped(&self) -> SpinField {
        SpinField {
            region: self.region,
            values: self.values.iter().map(|&s| -s).collect(),
        }
    }

    /// Reflection across the diagonal, so columns become rows.
    pub fn transpose(&self) -> SpinField {
        let t = self.region.transpose();
        SpinField::from_fn(t, |s| self.at(Site::new(s.y, s.x)))
    }
}

/// A real value per site of a box (thresholds, flip times).
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    region: BoxRegion,
    values: Vec<f64>,
}

impl ScalarField {
    /// Panics if the length does not match the region.
    pub fn from_values(region: BoxRegion, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), region.len(), "value array does not match region");
        ScalarField { region, values }
    }

    pub fn from_fn(region: BoxRegion, f: impl FnMut(Site) -> f64) -> Self {
        ScalarField {
            region,
            values: region.sites().map(f).collect(),
        }
    }

    pub fn region(&self) -> BoxRegion {
        self.region
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: Site) -> Option<f64> {
        self.region.index(s).map(|i| self.values[i])
    }

    pub fn at(&self, s: Site) -> f64 {
        self.get(s)
            .unwrap_or_else(|| panic!("site {s} outside field"))
    }

    pub fn restrict(&self, window: BoxRegion) -> Option<ScalarField> {
        if !self.region.contains_box(&window) {
            return None;
        }
        Some(ScalarField::from_fn(window, |s| self.at(s)))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            region: self.region,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// The spin field that is `+1` exactly where `plus(value)` holds.
    pub fn to_spins(&self, plus: impl Fn(f64) -> bool) -> SpinField {
        SpinField::from_values(
            self.region,
            self.values.iter().map(|&v| Spin::from_bool(plus(v))).collect(),
        )
    }
}
