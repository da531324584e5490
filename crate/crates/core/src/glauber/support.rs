//! Genealogy of the graphical construction: which sites can influence which.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::lattice::{BoxRegion, Site};
use crate::randomness::MarkSet;

use super::neighbor_indices;

/// The sites whose initial spins and marks can affect the anchor at the horizon.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportSet {
    pub anchor: Site,
    /// Sorted row-major, always containing `anchor`.
    pub members: Vec<Site>,
    /// Whether the exploration wanted to leave the mark region.
    pub truncated: bool,
}

impl SupportSet {
    pub fn contains(&self, s: Site) -> bool {
        self.members.contains(&s)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Smallest box around the members.
    pub fn bounding_box(&self) -> BoxRegion {
        let x0 = self.members.iter().map(|s| s.x).min().unwrap_or(self.anchor.x);
        let x1 = self.members.iter().map(|s| s.x).max().unwrap_or(self.anchor.x);
        let y0 = self.members.iter().map(|s| s.y).min().unwrap_or(self.anchor.y);
        let y1 = self.members.iter().map(|s| s.y).max().unwrap_or(self.anchor.y);
        BoxRegion::new(Site::new(x0, y0), (x1 - x0 + 1) as u32, (y1 - y0 + 1) as u32)
    }
}

#[derive(PartialEq)]
pub(super) struct Timed(pub(super) f64, pub(super) usize);

impl Eq for Timed {}

impl PartialOrd for Timed {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timed {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Earliest time at which a chain of increasing marks started at `x` can sit
/// at each site, over all marks (keep-bits ignored). `+∞` where no chain
/// with times `< t` arrives.
pub fn earliest_arrivals(x: Site, marks: &MarkSet, t: f64) -> Vec<f64> {
    let region = marks.region();
    let mut arrival = vec![f64::INFINITY; region.len()];
    let Some(start) = region.index(x) else {
        return arrival;
    };
    let index = marks.site_index();
    let all = marks.marks();
    let first_after = |i: usize, after: f64| -> f64 {
        let list = index.of(i);
        let p = list.partition_point(|&q| all[q as usize].time <= after);
        list.get(p)
            .map(|&q| all[q as usize].time)
            .filter(|&time| time < t)
            .unwrap_or(f64::INFINITY)
    };
    let a0 = first_after(start, f64::NEG_INFINITY);
    if a0 == f64::INFINITY {
        return arrival;
    }
    arrival[start] = a0;
    // min-heap through reversed ordering
    let mut heap = BinaryHeap::new();
    heap.push(std::cmp::Reverse(Timed(a0, start)));
    while let Some(std::cmp::Reverse(Timed(a, i))) = heap.pop() {
        if a > arrival[i] {
            continue;
        }
        for j in neighbor_indices(&region, i) {
            if j == usize::MAX {
                continue;
            }
            let b = first_after(j, a);
            if b < arrival[j] {
                arrival[j] = b;
                heap.push(std::cmp::Reverse(Timed(b, j)));
            }
        }
    }
    arrival
}

/// `x →ᵗ y`: a nearest-neighbor path from `x` to `y` carrying marks with
/// strictly increasing times, all below `t`, one at every site of the path
/// including both ends.
pub fn reaches(x: Site, y: Site, marks: &MarkSet, t: f64) -> bool {
    match marks.region().index(y) {
        Some(j) => earliest_arrivals(x, marks, t)[j] < t,
        None => false,
    }
}

/// Sites whose time-0 data can influence `x` at time `t` through the marks
/// (keep-bits ignored): `x` itself and every `y` adjacent to a site `z` with
/// `z →ᵗ x`. The value of `σ_t(x)` is a function of the initial spins on
/// this set and the marks of the chains.
pub fn backward_support(x: Site, marks: &MarkSet, t: f64) -> SupportSet {
    let region = marks.region();
    let Some(start) = region.index(x) else {
        return SupportSet {
            anchor: x,
            members: vec![x],
            truncated: true,
        };
    };
    let index = marks.site_index();
    let all = marks.marks();
    // need[i]: latest time at which the state of i matters
    let mut need = vec![f64::NEG_INFINITY; region.len()];
    let mut member = vec![false; region.len()];
    need[start] = t;
    member[start] = true;
    let mut truncated = false;
    let mut heap = BinaryHeap::new();
    heap.push(Timed(t, start));
    while let Some(Timed(s, i)) = heap.pop() {
        if s < need[i] {
            continue;
        }
        let list = index.of(i);
        let p = list.partition_point(|&q| all[q as usize].time < s);
        if p == 0 {
            continue;
        }
        let latest = all[list[p - 1] as usize].time;
        if neighbor_indices(&region, i).contains(&usize::MAX) {
            truncated = true;
        }
        for j in neighbor_indices(&region, i) {
            if j == usize::MAX {
                continue;
            }
            member[j] = true;
            if latest > need[j] {
                need[j] = latest;
                heap.push(Timed(latest, j));
            }
        }
    }
    let members = member
        .iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| region.site(i))
        .collect();
    SupportSet {
        anchor: x,
        members,
        truncated,
    }
}

/// Natural log of `c₁(t)·exp(-¼·d·log d)` with `c₁(t) = exp(2¹¹·t·log(8t))`,
/// an upper bound on `P[x →ᵗ y]` for `|x - y|₁ = d`.
pub fn light_cone_log_bound(t: f64, distance: u32) -> f64 {
    let d = distance as f64;
    let decay = if distance == 0 { 0.0 } else { 0.25 * d * d.ln() };
    2048.0 * t * (8.0 * t).ln() - decay
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::{sample_marks, Mark};

    fn region() -> BoxRegion {
        BoxRegion::new(Site::new(0, 0), 5, 5)
    }

    fn mark(x: i32, y: i32, time: f64, index: u32) -> Mark {
        Mark {
            site: Site::new(x, y),
            time,
            rate_uniform: 0.5,
            keep: true,
            index,
        }
    }

    #[test]
    fn empty_marks() {
        let marks = MarkSet::empty(region(), 1.0, 1);
        let a = Site::new(2, 2);
        assert!(!reaches(a, Site::new(2, 3), &marks, 1.0));
        let s = backward_support(a, &marks, 1.0);
        assert_eq!(s.members, vec![a]);
        assert!(!s.truncated);
    }

    #[test]
    fn one_step_chain() {
        let marks =
            MarkSet::from_marks(region(), 1.0, 1, vec![mark(1, 1, 0.2, 0), mark(2, 1, 0.7, 0)]).unwrap();
        let (a, b) = (Site::new(1, 1), Site::new(2, 1));
        assert!(reaches(a, b, &marks, 1.0));
        assert!(!reaches(b, a, &marks, 1.0));
        assert!(!reaches(a, b, &marks, 0.7));
        assert!(reaches(a, a, &marks, 1.0));
        let s = backward_support(b, &marks, 1.0);
        let mut want = vec![a, b, Site::new(3, 1), Site::new(2, 0), Site::new(2, 2)];
        want.extend([Site::new(0, 1), Site::new(1, 0), Site::new(1, 2)]);
        want.sort_by_key(|s| (s.y, s.x));
        assert_eq!(s.members, want);
        assert_eq!(backward_support(b, &marks, 0.0).members, vec![b]);
    }

    #[test]
    fn truncation_flag() {
        let marks = MarkSet::from_marks(region(), 1.0, 1, vec![mark(0, 2, 0.5, 0)]).unwrap();
        assert!(backward_support(Site::new(0, 2), &marks, 1.0).truncated);
        assert!(!backward_support(Site::new(0, 2), &marks, 0.4).truncated);
    }

    #[test]
    fn light_cone_bound_shape() {
        assert!(light_cone_log_bound(1.0, 6) > 4000.0);
        assert!(light_cone_log_bound(1.0, 7) < light_cone_log_bound(1.0, 6));
    }

    #[test]
    fn arrivals_are_mark_times() {
        let r = BoxRegion::new(Site::new(-4, -4), 9, 9);
        let marks = sample_marks(r, 2.0, 1, 11).unwrap();
        let arr = earliest_arrivals(Site::new(0, 0), &marks, 2.0);
        for (i, a) in arr.iter().enumerate() {
            if a.is_finite() {
                let s = r.site(i);
                assert!(marks.marks().iter().any(|m| m.site == s && m.time == *a));
            }
        }
    }
}
