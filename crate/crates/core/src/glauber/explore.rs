//! Backward evaluation of single spins and certification of finite windows.

use std::collections::BinaryHeap;

use crate::lattice::{BoxRegion, Site, Spin};
use crate::randomness::{spin_from_seed, MarkSet, SeedField, SiteIndex};
use crate::{Error, Result};

use super::support::Timed;
use super::{neighbor_indices, AcceptanceTable, GlauberParams};

const UNKNOWN: i8 = 0;

/// Evaluates `σ_τ(x)` by exploring the kept marks backward from `(x, τ)`,
/// sharing work between queries.
pub struct BackwardEvaluator<'a> {
    seeds: &'a SeedField,
    marks: &'a MarkSet,
    region: BoxRegion,
    rho: f64,
    horizon: f64,
    table: AcceptanceTable,
    kept: SiteIndex,
    /// Value right after each mark, by mark position.
    memo: Vec<i8>,
}

/// A pending evaluation: the state of site `i` just after the kept mark at `pos`.
#[derive(Clone, Copy)]
struct Frame {
    site: usize,
    pos: u32,
}

impl<'a> BackwardEvaluator<'a> {
    pub fn new(seeds: &'a SeedField, marks: &'a MarkSet, rho: f64, params: &GlauberParams) -> Result<Self> {
        if seeds.region() != marks.region() {
            return Err(Error::InvalidParameter("seed field and marks cover different regions".into()));
        }
        if marks.horizon() < params.horizon {
            return Err(Error::InvalidParameter("marks do not cover the horizon".into()));
        }
        Ok(BackwardEvaluator {
            seeds,
            marks,
            region: marks.region(),
            rho,
            horizon: params.horizon,
            table: AcceptanceTable::new(params.beta),
            kept: marks.kept_site_index(),
            memo: vec![UNKNOWN; marks.len()],
        })
    }

    /// Position of the latest kept mark at site `i` strictly before `time`.
    fn latest_before(&self, i: usize, time: f64) -> Option<u32> {
        let list = self.kept.of(i);
        let all = self.marks.marks();
        let p = list.partition_point(|&q| all[q as usize].time < time);
        (p > 0).then(|| list[p - 1])
    }

    fn initial(&self, i: usize) -> i8 {
        spin_from_seed(self.seeds.uniforms()[i], self.rho).value() as i8
    }

    /// `σ_τ(x)`.
    pub fn value(&mut self, x: Site) -> Result<Spin> {
        self.value_at(x, self.horizon)
    }

    /// The state of `x` after all kept marks with time `< time`.
    pub fn value_at(&mut self, x: Site, time: f64) -> Result<Spin> {
        let i = self.region.index(x).ok_or(Error::SupportEscaped { site: x })?;
        let v = match self.latest_before(i, time) {
            None => self.initial(i),
            Some(pos) => self.resolve(Frame { site: i, pos })?,
        };
        Ok(Spin::from_bool(v > 0))
    }

    fn resolve(&mut self, root: Frame) -> Result<i8> {
        let all = self.marks.marks();
        let mut stack = vec![root];
        while let Some(&f) = stack.last() {
            if self.memo[f.pos as usize] != UNKNOWN {
                stack.pop();
                continue;
            }
            let m = all[f.pos as usize];
            if let Some(s) = self.table.death(m.rate_uniform) {
                self.memo[f.pos as usize] = s.value() as i8;
                stack.pop();
                continue;
            }
            let mut sum = 0i32;
            let mut pending = false;
            for j in neighbor_indices(&self.region, f.site) {
                if j == usize::MAX {
                    return Err(Error::SupportEscaped { site: m.site });
                }
                match self.latest_before(j, m.time) {
                    None => sum += self.initial(j) as i32,
                    Some(q) => match self.memo[q as usize] {
                        UNKNOWN => {
                            pending = true;
                            stack.push(Frame { site: j, pos: q });
                        }
                        v => sum += v as i32,
                    },
                }
            }
            if !pending {
                self.memo[f.pos as usize] = if m.rate_uniform <= self.table.get(sum) { 1 } else { -1 };
                stack.pop();
            }
        }
        Ok(self.memo[root.pos as usize])
    }
}

/// `σ_τ(x)` by backward exploration; fails if the exploration needs a site
/// outside the region of `marks`.
pub fn backward_explore_value(
    x: Site,
    marks: &MarkSet,
    seeds: &SeedField,
    rho: f64,
    params: &GlauberParams,
) -> Result<Spin> {
    BackwardEvaluator::new(seeds, marks, rho, params)?.value(x)
}

/// Checks that the state of every site of `window` at the horizon is
/// determined by marks and seeds inside the region of `marks`, whatever the
/// density and the boundary condition. Reports the first site that would
/// have to be read outside the region.
pub fn certify_window(window: BoxRegion, marks: &MarkSet, params: &GlauberParams) -> Result<()> {
    let region = marks.region();
    if !region.contains_box(&window) {
        return Err(Error::WindowOutsideRegion);
    }
    let table = AcceptanceTable::new(params.beta);
    let kept = marks.kept_site_index();
    let all = marks.marks();
    let mut need = vec![f64::NEG_INFINITY; region.len()];
    let mut heap = BinaryHeap::new();
    for s in window.sites() {
        let i = region.index_unchecked(s);
        need[i] = params.horizon;
        heap.push(Timed(params.horizon, i));
    }
    while let Some(Timed(s, i)) = heap.pop() {
        if s < need[i] {
            continue;
        }
        let list = kept.of(i);
        let p = list.partition_point(|&q| all[q as usize].time < s);
        // latest mark before s that reads its neighbors
        let Some(latest) = list[..p]
            .iter()
            .rev()
            .map(|&q| &all[q as usize])
            .find(|m| table.death(m.rate_uniform).is_none())
            .map(|m| m.time)
        else {
            continue;
        };
        for (d, j) in neighbor_indices(&region, i).into_iter().enumerate() {
            if j == usize::MAX {
                let (dx, dy) = crate::lattice::DIRS4[d];
                return Err(Error::SupportEscaped {
                    site: region.site(i).offset(dx, dy),
                });
            }
            if latest > need[j] {
                need[j] = latest;
                heap.push(Timed(latest, j));
            }
        }
    }
    Ok(())
}
