//! Crossing-exploration algorithm and audits of the sharp-threshold
//! machinery conditionally on a mark skeleton `μ′`.
//!
//! Given `μ′`, the binary randomness is the initial spin of every site of
//! the window and the keep-bit of every mark before the horizon. The
//! crossing indicator is a monotone function of the spins on that cube.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::exec::map_replicates;
use crate::geometry::minimax_crossing;
use crate::glauber::{
    backward_support, evolve_field, neighbor_indices, threshold_field, AcceptanceTable,
    BoundaryCondition, GlauberParams, SupportSet,
};
use crate::lattice::{BoxRegion, Site, Spin, SpinField};
use crate::randomness::{sample_marks, sample_seed_field, MarkSet};
use crate::rng::{replicate_seed, Purpose, RngStream, StreamLabel};
use crate::{Error, Result};

/// Largest hypercube dimension accepted by [`exact_audit`].
pub const MAX_EXACT_VARIABLES: usize = 24;

/// A mark skeleton on a finite window with fixed dynamics parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct QuenchedInstance {
    pub window: BoxRegion,
    pub crossing_box: BoxRegion,
    pub params: GlauberParams,
    pub bc: BoundaryCondition,
    skeleton: MarkSet,
}

/// One point of the hypercube: a spin per window site (row-major) and a
/// keep-bit per skeleton mark (time order).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub spins: Vec<Spin>,
    pub keep: Vec<bool>,
}

impl QuenchedInstance {
    /// Marks at or after the horizon are dropped; keep-bits are ignored.
    pub fn new(
        window: BoxRegion,
        crossing_box: BoxRegion,
        params: GlauberParams,
        bc: BoundaryCondition,
        skeleton: &MarkSet,
    ) -> Result<Self> {
        if !window.contains_box(&crossing_box) || skeleton.region() != window {
            return Err(Error::WindowOutsideRegion);
        }
        let marks: Vec<_> = skeleton
            .marks()
            .iter()
            .filter(|m| m.time < params.horizon)
            .map(|m| crate::randomness::Mark { keep: true, ..*m })
            .collect();
        let skeleton = MarkSet::from_marks(window, params.horizon, params.thickening, marks)?;
        Ok(QuenchedInstance {
            window,
            crossing_box,
            params,
            bc,
            skeleton,
        })
    }

    /// Skeleton drawn from `seed` on `window`.
    pub fn sample(
        window: BoxRegion,
        crossing_box: BoxRegion,
        params: GlauberParams,
        bc: BoundaryCondition,
        seed: u64,
    ) -> Result<Self> {
        let marks = if params.horizon > 0.0 {
            sample_marks(window, params.horizon, params.thickening, seed)?
        } else {
            MarkSet::empty(window, 0.0, params.thickening)
        };
        QuenchedInstance::new(window, crossing_box, params, bc, &marks)
    }

    pub fn skeleton(&self) -> &MarkSet {
        &self.skeleton
    }

    pub fn site_count(&self) -> usize {
        self.window.len()
    }

    pub fn mark_count(&self) -> usize {
        self.skeleton.len()
    }

    pub fn variable_count(&self) -> usize {
        self.site_count() + self.mark_count()
    }

    /// `ceil(log n)` for a box of width `n + 1`, at least 1.
    pub fn default_radius(&self) -> u32 {
        let n = (self.crossing_box.width.max(2) - 1) as f64;
        (n.ln().ceil() as u32).max(1)
    }

    /// `σ_τ` on the window for one assignment.
    pub fn evaluate(&self, a: &Assignment) -> SpinField {
        let marks = self.skeleton.with_keep_bits(a.keep.iter().copied());
        let initial = SpinField::from_values(self.window, a.spins.clone());
        evolve_field(&initial, &marks, self.params.beta, self.params.horizon, self.bc)
    }

    /// Supports of the crossing-box sites, in row-major order of the box.
    pub fn supports(&self) -> Vec<SupportSet> {
        self.crossing_box
            .sites()
            .map(|x| backward_support(x, &self.skeleton, self.params.horizon))
            .collect()
    }
}

/// `𝓖_x = [𝓑(x) ⊆ B(x, radius)]` for the sites of the crossing box.
#[derive(Clone, Debug, PartialEq)]
pub struct GoodEvent {
    pub per_site: Vec<(Site, bool)>,
    pub holds: bool,
}

fn good_from_supports(supports: &[SupportSet], radius: u32) -> GoodEvent {
    let per_site: Vec<(Site, bool)> = supports
        .iter()
        .map(|s| (s.anchor, s.members.iter().all(|y| y.linf(s.anchor) <= radius)))
        .collect();
    let holds = per_site.iter().all(|p| p.1);
    GoodEvent { per_site, holds }
}

pub fn good_event(instance: &QuenchedInstance, radius: u32) -> GoodEvent {
    good_from_supports(&instance.supports(), radius)
}

/// Explores the `+1` clusters meeting column `z` of the box (columns counted
/// from 0), querying sites in row-major order of the column and then
/// breadth-first with neighbor order E, N, W, S. Returns whether some
/// explored cluster touches both vertical sides.
fn explore_column(b: &BoxRegion, z: u32, plus: impl Fn(usize) -> bool, mut query: impl FnMut(usize)) -> bool {
    let w = b.width as usize;
    let h = b.height as usize;
    let z = z as usize;
    let mut seen = vec![false; b.len()];
    let mut crossing = false;
    let mut queue = VecDeque::new();
    for row in 0..h {
        let start = row * w + z;
        if seen[start] {
            continue;
        }
        seen[start] = true;
        query(start);
        if !plus(start) {
            continue;
        }
        let (mut left, mut right) = (false, false);
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            let (cx, cy) = (i % w, i / w);
            left |= cx == 0;
            right |= cx == w - 1;
            let nbs = [
                (cx + 1 < w).then(|| i + 1),
                (cy + 1 < h).then(|| i + w),
                (cx > 0).then(|| i - 1),
                (cy > 0).then(|| i - w),
            ];
            for j in nbs.into_iter().flatten() {
                if !seen[j] {
                    seen[j] = true;
                    query(j);
                    if plus(j) {
                        queue.push_back(j);
                    }
                }
            }
        }
        crossing |= left && right;
    }
    crossing
}

/// Decision and revealed variables of one run of the algorithm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgorithmOutcome {
    pub decision: bool,
    pub good_event: bool,
    /// Window sites whose initial spin was revealed, row-major.
    pub revealed_sites: Vec<Site>,
    /// Positions in the skeleton of the marks whose keep-bit was revealed.
    pub revealed_marks: Vec<usize>,
}

/// Runs the crossing-exploration algorithm on one assignment with column `z`
/// of the crossing box. Querying a site reveals the spins of its support and
/// the keep-bits of the marks on it. Off the good event every variable on
/// the supports of the box is revealed.
pub fn run_algorithm(instance: &QuenchedInstance, a: &Assignment, z: u32, radius: u32) -> Result<AlgorithmOutcome> {
    let b = instance.crossing_box;
    if z >= b.width {
        return Err(Error::InvalidParameter(format!("column {z} outside a box of width {}", b.width)));
    }
    if a.spins.len() != instance.site_count() || a.keep.len() != instance.mark_count() {
        return Err(Error::InvalidParameter("assignment does not match the instance".into()));
    }
    let supports = instance.supports();
    let good = good_from_supports(&supports, radius).holds;
    let field = instance.evaluate(a);
    let plus = |i: usize| field.at(b.site(i)).is_plus();
    let mut revealed = vec![false; instance.window.len()];
    let mut reveal = |i: usize| {
        for y in &supports[i].members {
            revealed[instance.window.index_unchecked(*y)] = true;
        }
    };
    let decision = if good {
        explore_column(&b, z, plus, &mut reveal)
    } else {
        (0..b.len()).for_each(&mut reveal);
        crate::geometry::plus_crossing(&field, &b)
    };
    let revealed_sites: Vec<Site> = instance
        .window
        .sites()
        .zip(&revealed)
        .filter(|(_, &r)| r)
        .map(|(s, _)| s)
        .collect();
    let revealed_marks = instance
        .skeleton
        .marks()
        .iter()
        .enumerate()
        .filter(|(_, m)| revealed[instance.window.index_unchecked(m.site)])
        .map(|(i, _)| i)
        .collect();
    Ok(AlgorithmOutcome {
        decision,
        good_event: good,
        revealed_sites,
        revealed_marks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VariableKind {
    Spin,
    KeepBit,
}

/// Revealment and influence of one variable.
#[derive(Clone, Debug, PartialEq)]
pub struct VariableReport {
    pub kind: VariableKind,
    pub site: Site,
    /// Position in the skeleton, for keep-bits.
    pub mark: Option<usize>,
    pub time: Option<f64>,
    pub revealment: f64,
    pub revealment_stderr: f64,
    /// `None` when the audit did not compute influences.
    pub influence: Option<f64>,
    pub influence_stderr: f64,
}

/// Result of an audit at one density. Standard errors are zero for exact audits.
#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub rho: f64,
    pub exact: bool,
    pub replicates: u64,
    pub probability: f64,
    pub probability_stderr: f64,
    pub variance: f64,
    pub variance_stderr: f64,
    /// `d/dρ P[crossing | μ′]`.
    pub russo_lhs: f64,
    pub russo_lhs_stderr: f64,
    /// Sum of the initial-spin influences.
    pub russo_rhs: f64,
    pub russo_rhs_stderr: f64,
    pub osss_lhs: f64,
    /// `4 · Σ δ · Inf` over all variables.
    pub osss_rhs: f64,
    pub good_event_fraction: f64,
    pub max_site_revealment: f64,
    pub variables: Vec<VariableReport>,
}

impl AuditReport {
    /// One row per variable: `kind,id,x,y,time,revealment,revealment_stderr,influence,influence_stderr`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,id,x,y,time,revealment,revealment_stderr,influence,influence_stderr\n");
        let mut spin_id = 0;
        for v in &self.variables {
            let (kind, id) = match v.kind {
                VariableKind::Spin => {
                    spin_id += 1;
                    ("spin", spin_id - 1)
                }
                VariableKind::KeepBit => ("keep", v.mark.unwrap_or(0)),
            };
            let time = v.time.map(|t| t.to_string()).unwrap_or_default();
            let inf = v.influence.map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{kind},{id},{},{},{time},{},{},{inf},{}",
                v.site.x, v.site.y, v.revealment, v.revealment_stderr, v.influence_stderr
            );
        }
        out
    }

    pub fn osss_holds(&self) -> bool {
        self.osss_lhs <= self.osss_rhs
    }
}

/// A tiny instance as bit operations on `u32` masks: bit `i < sites` is the
/// spin of window site `i`, bit `sites + j` the keep-bit of mark `j`.
struct Compiled {
    sites: usize,
    marks: Vec<(usize, [usize; 4], f64)>,
    table: AcceptanceTable,
    outside: i32,
    window_bits: u32,
    box_bits: u32,
    left_bits: u32,
    right_bits: u32,
    not_first_col: u32,
    not_last_col: u32,
    width: usize,
}

impl Compiled {
    fn new(inst: &QuenchedInstance) -> Self {
        let w = inst.window;
        let width = w.width as usize;
        let marks = inst
            .skeleton
            .marks()
            .iter()
            .map(|m| {
                let i = w.index_unchecked(m.site);
                (i, neighbor_indices(&w, i), m.rate_uniform)
            })
            .collect();
        let bits = |pred: &dyn Fn(Site) -> bool| {
            w.sites()
                .enumerate()
                .filter(|(_, s)| pred(*s))
                .fold(0u32, |acc, (i, _)| acc | 1 << i)
        };
        let b = inst.crossing_box;
        Compiled {
            sites: w.len(),
            marks,
            table: AcceptanceTable::new(inst.params.beta),
            outside: match inst.bc {
                BoundaryCondition::AllPlus => 1,
                BoundaryCondition::AllMinus => -1,
                BoundaryCondition::Free => 0,
            },
            window_bits: bits(&|_| true),
            box_bits: bits(&|s| b.contains(s)),
            left_bits: bits(&|s| b.contains(s) && s.x == b.x_min()),
            right_bits: bits(&|s| b.contains(s) && s.x == b.x_max()),
            not_first_col: !bits(&|s| s.x == w.x_min()),
            not_last_col: !bits(&|s| s.x == w.x_max()),
            width,
        }
    }

    fn final_state(&self, assignment: u32) -> u32 {
        let mut state = assignment & self.window_bits;
        for (j, &(i, nb, r)) in self.marks.iter().enumerate() {
            if assignment >> (self.sites + j) & 1 == 0 {
                continue;
            }
            let mut sum = 0;
            for n in nb {
                sum += if n == usize::MAX {
                    self.outside
                } else if state >> n & 1 == 1 {
                    1
                } else {
                    -1
                };
            }
            if r <= self.table.get(sum) {
                state |= 1 << i;
            } else {
                state &= !(1 << i);
            }
        }
        state
    }

    fn crosses(&self, state: u32) -> bool {
        let open = state & self.box_bits;
        let mut reach = open & self.left_bits;
        loop {
            let spread = ((reach << 1) & self.not_first_col)
                | ((reach >> 1) & self.not_last_col)
                | (reach << self.width)
                | (reach >> self.width);
            let next = reach | (spread & open);
            if next == reach {
                return reach & self.right_bits != 0;
            }
            reach = next;
        }
    }
}

/// Powers `x^0 … x^n`.
fn powers(x: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|e| x.powi(e as i32)).collect()
}

/// Exact audit by enumerating the hypercube, at each density of `rhos`
/// (all in `(0, 1)`). Revealments average over every column of the box.
pub fn exact_audit(instance: &QuenchedInstance, rhos: &[f64], radius: u32) -> Result<Vec<AuditReport>> {
    let nv = instance.variable_count();
    if nv > MAX_EXACT_VARIABLES {
        return Err(Error::InstanceTooLarge {
            variables: nv,
            limit: MAX_EXACT_VARIABLES,
        });
    }
    if let Some(r) = rhos.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
        return Err(Error::InvalidParameter(format!("exact audits need 0 < rho < 1, got {r}")));
    }
    let c = Compiled::new(instance);
    let ns = c.sites;
    let nm = c.marks.len();
    let b = instance.crossing_box;
    let w = instance.window;

    let supports = instance.supports();
    let good = good_from_supports(&supports, radius);
    let mark_bits_at = |site: usize| -> u32 {
        c.marks
            .iter()
            .enumerate()
            .filter(|(_, m)| m.0 == site)
            .fold(0, |acc, (j, _)| acc | 1 << (ns + j))
    };
    let support_masks: Vec<u32> = supports
        .iter()
        .map(|s| {
            s.members.iter().fold(0u32, |acc, y| {
                let i = w.index_unchecked(*y);
                acc | 1 << i | mark_bits_at(i)
            })
        })
        .collect();
    let everything = support_masks.iter().fold(0, |a, m| a | m);
    let box_to_window: Vec<usize> = b.sites().map(|s| w.index_unchecked(s)).collect();

    let kp = 1.0 / instance.params.thickening as f64;
    let keep_pow = powers(kp, nm);
    let drop_pow = powers(1.0 - kp, nm);
    let spin_mask = (1u32 << ns) - 1;
    struct Acc {
        p: f64,
        by_count: Vec<f64>,
        inf: Vec<f64>,
        rev: Vec<f64>,
        rp: Vec<f64>,
        rq: Vec<f64>,
    }
    let mut accs: Vec<Acc> = rhos
        .iter()
        .map(|&r| Acc {
            p: 0.0,
            by_count: vec![0.0; ns + 1],
            inf: vec![0.0; nv],
            rev: vec![0.0; nv],
            rp: powers(r, ns),
            rq: powers(1.0 - r, ns),
        })
        .collect();

    let total = 1u64 << nv;
    let states: Vec<u32> = (0..total).map(|a| c.final_state(a as u32)).collect();
    let f: Vec<bool> = states.iter().map(|&s| c.crosses(s)).collect();
    let columns = b.width;
    for a in 0..total as u32 {
        let plus_count = (a & spin_mask).count_ones() as usize;
        let kept_count = (a >> ns).count_ones() as usize;
        let wk = keep_pow[kept_count] * drop_pow[nm - kept_count];
        // revealed masks per column, independent of ρ
        let mut reveal_sum = vec![0u32; nv];
        if good.holds {
            let state = states[a as usize];
            for z in 0..columns {
                let mut revealed = 0u32;
                explore_column(
                    &b,
                    z,
                    |i| state >> box_to_window[i] & 1 == 1,
                    |i| revealed |= support_masks[i],
                );
                for (v, slot) in reveal_sum.iter_mut().enumerate() {
                    *slot += revealed >> v & 1;
                }
            }
        } else {
            for (v, slot) in reveal_sum.iter_mut().enumerate() {
                *slot = (everything >> v & 1) * columns;
            }
        }
        let fa = f[a as usize];
        for acc in accs.iter_mut() {
            let wgt = acc.rp[plus_count] * acc.rq[ns - plus_count] * wk;
            if fa {
                acc.p += wgt;
                acc.by_count[plus_count] += wk;
            }
            for (v, &cnt) in reveal_sum.iter().enumerate() {
                if cnt > 0 {
                    acc.rev[v] += wgt * cnt as f64 / columns as f64;
                }
            }
            for v in 0..nv {
                if a >> v & 1 == 1 || f[(a | 1 << v) as usize] == fa {
                    continue;
                }
                // weight of the other coordinates
                let other = if v < ns {
                    acc.rp[plus_count] * acc.rq[ns - 1 - plus_count] * wk
                } else {
                    acc.rp[plus_count] * acc.rq[ns - plus_count] * keep_pow[kept_count] * drop_pow[nm - 1 - kept_count]
                };
                acc.inf[v] += other;
            }
        }
    }

    Ok(rhos
        .iter()
        .zip(accs)
        .map(|(&rho, acc)| {
            let russo_lhs: f64 = acc
                .by_count
                .iter()
                .enumerate()
                .map(|(k, &ck)| {
                    let up = if k > 0 { k as f64 * rho.powi(k as i32 - 1) * (1.0 - rho).powi((ns - k) as i32) } else { 0.0 };
                    let down = if k < ns {
                        (ns - k) as f64 * rho.powi(k as i32) * (1.0 - rho).powi((ns - k - 1) as i32)
                    } else {
                        0.0
                    };
                    ck * (up - down)
                })
                .sum();
            let russo_rhs: f64 = acc.inf[..ns].iter().sum();
            let variables: Vec<VariableReport> = (0..nv)
                .map(|v| {
                    let (kind, site, mark, time) = if v < ns {
                        (VariableKind::Spin, w.site(v), None, None)
                    } else {
                        let m = &instance.skeleton.marks()[v - ns];
                        (VariableKind::KeepBit, m.site, Some(v - ns), Some(m.time))
                    };
                    VariableReport {
                        kind,
                        site,
                        mark,
                        time,
                        revealment: acc.rev[v],
                        revealment_stderr: 0.0,
                        influence: Some(acc.inf[v]),
                        influence_stderr: 0.0,
                    }
                })
                .collect();
            let osss_rhs = 4.0 * (0..nv).map(|v| acc.rev[v] * acc.inf[v]).sum::<f64>();
            let variance = acc.p * (1.0 - acc.p);
            AuditReport {
                rho,
                exact: true,
                replicates: total,
                probability: acc.p,
                probability_stderr: 0.0,
                variance,
                variance_stderr: 0.0,
                russo_lhs,
                russo_lhs_stderr: 0.0,
                russo_rhs,
                russo_rhs_stderr: 0.0,
                osss_lhs: variance,
                osss_rhs,
                good_event_fraction: good.holds as u8 as f64,
                max_site_revealment: acc.rev[..ns].iter().cloned().fold(0.0, f64::max),
                variables,
            }
        })
        .collect())
}

/// Half-width of the symmetric difference quotient for `d/dρ`.
pub const RUSSO_STEP: f64 = 0.02;

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let e = crate::estimators::Estimate::from_samples(xs);
    (e.mean, e.stderr)
}

fn variance_of_indicator(hits: &[f64]) -> (f64, f64) {
    let (p, se) = mean_and_stderr(hits);
    // delta method for p(1-p)
    (p * (1.0 - p), (1.0 - 2.0 * p).abs() * se)
}

struct McSample {
    hit: f64,
    russo: f64,
    revealed: Vec<bool>,
    influence: Vec<f64>,
}

/// Monte Carlo audit of a fixed instance: spins, keep-bits and the column
/// are resampled `replicates` times. Influences come from forcing each
/// variable both ways; the derivative is a common-random-number difference
/// quotient with step [`RUSSO_STEP`].
pub fn monte_carlo_audit_instance(
    instance: &QuenchedInstance,
    rho: f64,
    radius: u32,
    replicates: u64,
    seed: u64,
) -> Result<AuditReport> {
    let ns = instance.site_count();
    let nm = instance.mark_count();
    let b = instance.crossing_box;
    let kp = 1.0 / instance.params.thickening as f64;
    let supports = instance.supports();
    let good = good_from_supports(&supports, radius).holds;
    let crosses = |spins: &[Spin], keep: &[bool]| -> bool {
        let a = Assignment {
            spins: spins.to_vec(),
            keep: keep.to_vec(),
        };
        crate::geometry::plus_crossing(&instance.evaluate(&a), &b)
    };
    let samples: Vec<Result<McSample>> = map_replicates(replicates, |r| {
        let mut rng = RngStream::new(replicate_seed(seed, r), StreamLabel::new(Purpose::Algorithm, 0, 0, 0));
        let u: Vec<f64> = (0..ns).map(|_| rng.uniform()).collect();
        let keep: Vec<bool> = (0..nm).map(|_| rng.bernoulli(kp)).collect();
        let z = rng.below(b.width as u64) as u32;
        let spins_at = |p: f64| -> Vec<Spin> { u.iter().map(|&x| Spin::from_bool(x < p)).collect() };
        let a = Assignment {
            spins: spins_at(rho),
            keep: keep.clone(),
        };
        let out = run_algorithm(instance, &a, z, radius)?;
        let mut revealed = vec![false; ns + nm];
        for s in &out.revealed_sites {
            revealed[instance.window.index_unchecked(*s)] = true;
        }
        for &j in &out.revealed_marks {
            revealed[ns + j] = true;
        }
        let up = crosses(&spins_at((rho + RUSSO_STEP).min(1.0)), &keep) as u8 as f64;
        let down = crosses(&spins_at((rho - RUSSO_STEP).max(0.0)), &keep) as u8 as f64;
        let mut influence = vec![0.0; ns + nm];
        for v in 0..ns {
            let mut s = a.spins.clone();
            s[v] = Spin::Plus;
            let hi = crosses(&s, &keep);
            s[v] = Spin::Minus;
            influence[v] = (hi != crosses(&s, &keep)) as u8 as f64;
        }
        for j in 0..nm {
            let mut k = keep.clone();
            k[j] = true;
            let hi = crosses(&a.spins, &k);
            k[j] = false;
            influence[ns + j] = (hi != crosses(&a.spins, &k)) as u8 as f64;
        }
        Ok(McSample {
            hit: out.decision as u8 as f64,
            russo: (up - down) / (2.0 * RUSSO_STEP),
            revealed,
            influence,
        })
    });
    let samples: Vec<McSample> = samples.into_iter().collect::<Result<_>>()?;
    let column = |f: &dyn Fn(&McSample) -> f64| -> Vec<f64> { samples.iter().map(f).collect() };
    let hits = column(&|s| s.hit);
    let (p, p_se) = mean_and_stderr(&hits);
    let (variance, var_se) = variance_of_indicator(&hits);
    let (russo_lhs, russo_lhs_se) = mean_and_stderr(&column(&|s| s.russo));
    let spin_inf_sum = column(&|s| s.influence[..ns].iter().sum());
    let (russo_rhs, russo_rhs_se) = mean_and_stderr(&spin_inf_sum);
    let mut variables = Vec::with_capacity(ns + nm);
    let mut osss = 0.0;
    for v in 0..ns + nm {
        let (rev, rev_se) = mean_and_stderr(&column(&|s| s.revealed[v] as u8 as f64));
        let (inf, inf_se) = mean_and_stderr(&column(&|s| s.influence[v]));
        osss += rev * inf;
        let (kind, site, mark, time) = if v < ns {
            (VariableKind::Spin, instance.window.site(v), None, None)
        } else {
            let m = &instance.skeleton.marks()[v - ns];
            (VariableKind::KeepBit, m.site, Some(v - ns), Some(m.time))
        };
        variables.push(VariableReport {
            kind,
            site,
            mark,
            time,
            revealment: rev,
            revealment_stderr: rev_se,
            influence: Some(inf),
            influence_stderr: inf_se,
        });
    }
    let max_site_revealment = variables[..ns].iter().map(|v| v.revealment).fold(0.0, f64::max);
    Ok(AuditReport {
        rho,
        exact: false,
        replicates,
        probability: p,
        probability_stderr: p_se,
        variance,
        variance_stderr: var_se,
        russo_lhs,
        russo_lhs_stderr: russo_lhs_se,
        russo_rhs,
        russo_rhs_stderr: russo_rhs_se,
        osss_lhs: variance,
        osss_rhs: 4.0 * osss,
        good_event_fraction: if good { 1.0 } else { 0.0 },
        max_site_revealment,
        variables,
    })
}

/// Random skeletons for [`monte_carlo_audit`]: the crossing box
/// `[0, n] × [0, m]` inside a window enlarged by `radius + 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleSpec {
    pub params: GlauberParams,
    pub n: u32,
    pub m: u32,
    /// `None` selects `ceil(log n)`.
    pub radius: Option<u32>,
}

impl EnsembleSpec {
    pub fn radius(&self) -> u32 {
        self.radius
            .unwrap_or_else(|| ((self.n.max(2) as f64).ln().ceil() as u32).max(1))
    }
}

/// Monte Carlo audit over fresh skeletons: per replicate a skeleton,
/// seeds, keep-bits and a column are drawn. Reports revealments of the box
/// spins, the crossing variance and a difference-quotient derivative;
/// influences are not computed.
pub fn monte_carlo_audit(spec: &EnsembleSpec, rho: f64, replicates: u64, seed: u64) -> Result<AuditReport> {
    let b = BoxRegion::crossing(spec.n, spec.m);
    let radius = spec.radius();
    let window = b.expand(radius + 1);
    let params = spec.params;
    let samples: Vec<Result<(f64, f64, bool, Vec<bool>)>> = map_replicates(replicates, |r| {
        let rs = replicate_seed(seed, r);
        let instance = QuenchedInstance::sample(window, b, params, BoundaryCondition::AllMinus, rs)?;
        let marks = if params.horizon > 0.0 {
            sample_marks(window, params.horizon, params.thickening, rs)?
        } else {
            MarkSet::empty(window, 0.0, params.thickening)
        };
        let seeds = sample_seed_field(window, rs);
        let mut rng = RngStream::new(rs, StreamLabel::new(Purpose::Algorithm, 1, 0, 0));
        let z = rng.below(b.width as u64) as u32;
        let keep: Vec<bool> = marks
            .marks()
            .iter()
            .filter(|m| m.time < params.horizon)
            .map(|m| m.keep)
            .collect();
        let a = Assignment {
            spins: seeds.initial_field(rho).values().to_vec(),
            keep,
        };
        let out = run_algorithm(&instance, &a, z, radius)?;
        let mut revealed = vec![false; b.len()];
        for s in out.revealed_sites.iter().filter(|s| b.contains(**s)) {
            revealed[b.index_unchecked(*s)] = true;
        }
        let theta = threshold_field(&seeds, &marks, &params, BoundaryCondition::AllMinus);
        let star = minimax_crossing(&theta, &b);
        let russo = ((rho - RUSSO_STEP) <= star && star < (rho + RUSSO_STEP)) as u8 as f64 / (2.0 * RUSSO_STEP);
        Ok((out.decision as u8 as f64, russo, out.good_event, revealed))
    });
    let samples: Vec<_> = samples.into_iter().collect::<Result<_>>()?;
    let hits: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let (p, p_se) = mean_and_stderr(&hits);
    let (variance, var_se) = variance_of_indicator(&hits);
    let (russo_lhs, russo_se) = mean_and_stderr(&samples.iter().map(|s| s.1).collect::<Vec<_>>());
    let good_event_fraction = samples.iter().filter(|s| s.2).count() as f64 / samples.len() as f64;
    let variables: Vec<VariableReport> = b
        .sites()
        .enumerate()
        .map(|(i, site)| {
            let (rev, se) = mean_and_stderr(&samples.iter().map(|s| s.3[i] as u8 as f64).collect::<Vec<_>>());
            VariableReport {
                kind: VariableKind::Spin,
                site,
                mark: None,
                time: None,
                revealment: rev,
                revealment_stderr: se,
                influence: None,
                influence_stderr: 0.0,
            }
        })
        .collect();
    let max_site_revealment = variables.iter().map(|v| v.revealment).fold(0.0, f64::max);
    Ok(AuditReport {
        rho,
        exact: false,
        replicates,
        probability: p,
        probability_stderr: p_se,
        variance,
        variance_stderr: var_se,
        russo_lhs,
        russo_lhs_stderr: russo_se,
        russo_rhs: f64::NAN,
        russo_rhs_stderr: f64::NAN,
        osss_lhs: variance,
        osss_rhs: f64::NAN,
        good_event_fraction,
        max_site_revealment,
        variables,
    })
}
