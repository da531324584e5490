//! Connectivity of spin fields: clusters, crossings, arms.
//!
//! `+1` sites connect through nearest neighbors; `-1` sites through the
//! `*`-adjacency (the eight sites at `ℓ∞` distance one).

use crate::lattice::{BoxRegion, ScalarField, Site, Spin, SpinField, DIRS4, DIRS8};

/// Disjoint sets over `0..n` with path halving and union by size.
#[derive(Clone, Debug)]
pub struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] as usize != i {
            let g = self.parent[self.parent[i] as usize];
            self.parent[i] = g;
            i = g as usize;
        }
        i
    }

    /// Returns `true` if the sets were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return false;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a as u32;
        self.size[a] += self.size[b];
        true
    }

    pub fn connected(&mut self, a: usize, b: usize) -> bool {
        self.find(a) == self.find(b)
    }
}

/// Which sites cluster and how they are adjacent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Connectivity {
    /// `+1` sites, nearest-neighbor adjacency.
    Plus,
    /// `-1` sites, `*`-adjacency.
    MinusStar,
}

impl Connectivity {
    pub fn spin(self) -> Spin {
        match self {
            Connectivity::Plus => Spin::Plus,
            Connectivity::MinusStar => Spin::Minus,
        }
    }

    fn steps(self) -> &'static [(i32, i32)] {
        match self {
            Connectivity::Plus => &DIRS4,
            Connectivity::MinusStar => &DIRS8,
        }
    }
}

/// Cluster labels of a field. A label is the smallest row-major index of
/// the cluster; sites of the other spin carry no label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterLabels {
    pub region: BoxRegion,
    pub kind: Connectivity,
    labels: Vec<u32>,
}

impl ClusterLabels {
    pub const NONE: u32 = u32::MAX;

    pub fn label(&self, s: Site) -> Option<u32> {
        self.region
            .index(s)
            .map(|i| self.labels[i])
            .filter(|&l| l != Self::NONE)
    }

    pub fn raw(&self) -> &[u32] {
        &self.labels
    }

    pub fn cluster_count(&self) -> usize {
        self.labels
            .iter()
            .enumerate()
            .filter(|&(i, &l)| l as usize == i)
            .count()
    }
}

fn union_clusters(field: &SpinField, window: &BoxRegion, kind: Connectivity) -> UnionFind {
    let spin = kind.spin();
    let mut uf = UnionFind::new(window.len());
    for (i, s) in window.sites().enumerate() {
        if field.at(s) != spin {
            continue;
        }
        // only look at half the steps; the other half is symmetric
        for &(dx, dy) in kind.steps() {
            if (dy, dx) < (0, 0) {
                continue;
            }
            let t = s.offset(dx, dy);
            if window.contains(t) && field.at(t) == spin {
                uf.union(i, window.index_unchecked(t));
            }
        }
    }
    uf
}

pub fn label_clusters(field: &SpinField, kind: Connectivity) -> ClusterLabels {
    let region = field.region();
    let mut uf = union_clusters(field, &region, kind);
    let mut smallest = vec![ClusterLabels::NONE; region.len()];
    let mut labels = vec![ClusterLabels::NONE; region.len()];
    for (i, &v) in field.values().iter().enumerate() {
        if v == kind.spin() {
            let r = uf.find(i);
            if smallest[r] == ClusterLabels::NONE {
                smallest[r] = i as u32;
            }
            labels[i] = smallest[r];
        }
    }
    ClusterLabels {
        region,
        kind,
        labels,
    }
}

/// Whether some site in `from` connects to some site in `to` within `window`.
fn sides_connected(
    field: &SpinField,
    window: &BoxRegion,
    kind: Connectivity,
    from: impl Iterator<Item = Site>,
    to: impl Iterator<Item = Site>,
) -> bool {
    assert!(field.region().contains_box(window), "box must lie inside the field");
    let spin = kind.spin();
    let mut uf = union_clusters(field, window, kind);
    let mut sources: Vec<usize> = from
        .filter(|&s| field.at(s) == spin)
        .map(|s| window.index_unchecked(s))
        .collect();
    for r in sources.iter_mut() {
        *r = uf.find(*r);
    }
    sources.sort_unstable();
    to.filter(|&s| field.at(s) == spin)
        .any(|s| sources.binary_search(&uf.find(window.index_unchecked(s))).is_ok())
}

fn column(b: &BoxRegion, x: i32) -> impl Iterator<Item = Site> {
    (b.y_min()..=b.y_max()).map(move |y| Site::new(x, y))
}

fn row(b: &BoxRegion, y: i32) -> impl Iterator<Item = Site> {
    (b.x_min()..=b.x_max()).map(move |x| Site::new(x, y))
}

/// Left-right crossing of `b` by a nearest-neighbor path of `+1` sites.
pub fn plus_crossing(field: &SpinField, b: &BoxRegion) -> bool {
    sides_connected(field, b, Connectivity::Plus, column(b, b.x_min()), column(b, b.x_max()))
}

/// Left-right crossing of `b` by a `*`-path of `-1` sites.
pub fn star_minus_crossing(field: &SpinField, b: &BoxRegion) -> bool {
    sides_connected(field, b, Connectivity::MinusStar, column(b, b.x_min()), column(b, b.x_max()))
}

/// Bottom-top crossing of `b` by a `*`-path of `-1` sites.
pub fn vertical_star_minus_crossing(field: &SpinField, b: &BoxRegion) -> bool {
    sides_connected(field, b, Connectivity::MinusStar, row(b, b.y_min()), row(b, b.y_max()))
}

/// Exactly one of a horizontal `+1` crossing and a vertical `*`-crossing of
/// `-1` sites occurs in `b`.
pub fn check_duality(field: &SpinField, b: &BoxRegion) -> bool {
    plus_crossing(field, b) != vertical_star_minus_crossing(field, b)
}

/// `+1` path from `∂B(center, m)` to the outer boundary of `B(center, n)`
/// (sites at `ℓ∞` distance `n + 1`), using only sites at distance `m..=n+1`.
///
/// Panics unless `m < n` and `B(center, n + 1)` lies inside the field.
pub fn arm_event(field: &SpinField, center: Site, m: u32, n: u32) -> bool {
    assert!(m < n, "arm event needs m < n");
    let outer = BoxRegion::ball(center, n + 1);
    assert!(field.region().contains_box(&outer), "B(center, n + 1) must lie inside the field");
    let annulus = |s: &Site| s.linf(center) >= m;
    let mut uf = UnionFind::new(outer.len());
    for (i, s) in outer.sites().enumerate() {
        if !annulus(&s) || !field.at(s).is_plus() {
            continue;
        }
        for (dx, dy) in [(1, 0), (0, 1)] {
            let t = s.offset(dx, dy);
            if outer.contains(t) && annulus(&t) && field.at(t).is_plus() {
                uf.union(i, outer.index_unchecked(t));
            }
        }
    }
    let mut inner: Vec<usize> = outer
        .sites()
        .enumerate()
        .filter(|(_, s)| s.linf(center) == m && field.at(*s).is_plus())
        .map(|(i, _)| uf.find(i))
        .collect();
    inner.sort_unstable();
    let hit = outer
        .sites()
        .enumerate()
        .filter(|(_, s)| s.linf(center) == n + 1 && field.at(*s).is_plus())
        .any(|(i, _)| inner.binary_search(&uf.find(i)).is_ok());
    hit
}

/// The smallest `v` such that the sites with value `<= v` contain a
/// left-right nearest-neighbor crossing of `b`: the minimum over crossing
/// paths of the largest value on the path. `+∞` if every path meets `+∞`.
pub fn minimax_crossing(values: &ScalarField, b: &BoxRegion) -> f64 {
    assert!(values.region().contains_box(b), "box must lie inside the field");
    let n = b.len();
    let (left, right) = (n, n + 1);
    let mut order: Vec<(f64, usize)> = b
        .sites()
        .enumerate()
        .map(|(i, s)| (values.at(s), i))
        .collect();
    order.sort_unstable_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut uf = UnionFind::new(n + 2);
    let mut open = vec![false; n];
    let w = b.width as usize;
    for (v, i) in order {
        open[i] = true;
        let (cx, cy) = (i % w, i / w);
        if cx == 0 {
            uf.union(i, left);
        }
        if cx == w - 1 {
            uf.union(i, right);
        }
        let mut link = |j: usize| {
            if open[j] {
                uf.union(i, j);
            }
        };
        if cx + 1 < w {
            link(i + 1);
        }
        if cx > 0 {
            link(i - 1);
        }
        if i + w < n {
            link(i + w);
        }
        if cy > 0 {
            link(i - w);
        }
        if uf.connected(left, right) {
            return v;
        }
    }
    f64::INFINITY
}
