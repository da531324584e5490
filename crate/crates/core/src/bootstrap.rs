//! One-way bootstrap dynamics: sites start at `-1` and flip to `+1` for good
//! at kept marks with `R <= λ(neighborhood)`.

use std::collections::BinaryHeap;
use std::fmt::Write as _;
use std::path::Path;

use crate::geometry::minimax_crossing;
use crate::lattice::{BoxRegion, ScalarField, Site, Spin, SpinField, DIRS4};
use crate::randomness::MarkSet;
use crate::{Error, Result};

/// Bit of the center in a neighborhood index; neighbors E, N, W, S follow.
const CENTER: usize = 1;

/// Neighborhood index from the center spin and the E, N, W, S neighbors.
pub fn neighborhood_index(center: Spin, nb: [Spin; 4]) -> usize {
    let mut idx = center.is_plus() as usize;
    for (d, s) in nb.iter().enumerate() {
        idx |= (s.is_plus() as usize) << (d + 1);
    }
    idx
}

fn neighborhood_of(idx: usize) -> (Spin, [Spin; 4]) {
    (
        Spin::from_bool(idx & CENTER != 0),
        std::array::from_fn(|d| Spin::from_bool(idx >> (d + 1) & 1 == 1)),
    )
}

/// Quarter turn of the neighbors: E→N→W→S→E.
fn rotate(idx: usize) -> usize {
    let nb = (idx >> 1) & 0xf;
    let turned = ((nb << 1) | (nb >> 3)) & 0xf;
    (idx & CENTER) | (turned << 1)
}

/// Flip rates `λ` for the 32 neighborhoods of a site.
#[derive(Clone, Debug, PartialEq)]
pub struct RateTable {
    entries: [f64; 32],
}

impl RateTable {
    /// Validated table.
    pub fn new(entries: [f64; 32]) -> Result<Self> {
        let t = RateTable { entries };
        let v = t.violations();
        if v.is_empty() {
            Ok(t)
        } else {
            Err(Error::InvalidRateTable(v.join("; ")))
        }
    }

    /// A table that is not checked against the constraints, for comparison
    /// processes such as a constant rate below one.
    pub fn unchecked(entries: [f64; 32]) -> Self {
        RateTable { entries }
    }

    /// `λ = ε + (1 - ε)·(number of + neighbors)/4`.
    pub fn counting(epsilon: f64) -> Result<Self> {
        RateTable::new(std::array::from_fn(|i| {
            let plus = ((i >> 1) & 0xf).count_ones() as f64;
            epsilon + (1.0 - epsilon) * plus / 4.0
        }))
    }

    /// `λ ≡ value`; only a valid table for `value = 1`.
    pub fn constant(value: f64) -> Self {
        RateTable::unchecked([value; 32])
    }

    pub fn epsilon(&self) -> f64 {
        self.entries[0]
    }

    pub fn entries(&self) -> &[f64; 32] {
        &self.entries
    }

    pub fn rate(&self, center: Spin, nb: [Spin; 4]) -> f64 {
        self.entries[neighborhood_index(center, nb)]
    }

    /// Every violated constraint, empty for a valid table.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let e = &self.entries;
        if !(e[0] > 0.0 && e[0] <= 1.0) {
            out.push(format!("rate of the all-minus neighborhood must be in (0, 1], got {}", e[0]));
        }
        if e[31] != 1.0 {
            out.push(format!("rate of the all-plus neighborhood must be 1, got {}", e[31]));
        }
        for (i, &v) in e.iter().enumerate() {
            if !(v >= e[0] && v <= 1.0) {
                out.push(format!("rate {v} of neighborhood {} outside [epsilon, 1]", describe(i)));
            }
        }
        for i in 0..32 {
            for j in 0..32 {
                if i != j && i & j == i && e[i] > e[j] {
                    out.push(format!(
                        "not monotone: {} has rate {} above {} with rate {}",
                        describe(i),
                        e[i],
                        describe(j),
                        e[j]
                    ));
                }
            }
            if e[rotate(i)] != e[i] {
                out.push(format!(
                    "not rotation invariant: {} has rate {} but its quarter turn {} has {}",
                    describe(i),
                    e[i],
                    describe(rotate(i)),
                    e[rotate(i)]
                ));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        RateTable::new(self.entries).map(|_| ())
    }

    /// Parses 32 lines `c e n w s rate` with spins written as `1` / `-1`.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = [f64::NAN; 32];
        let mut seen = [false; 32];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| Error::Format(format!("rate table line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(bad("expected `c e n w s rate`"));
            }
            let mut spins = [Spin::Minus; 5];
            for (k, f) in fields[..5].iter().enumerate() {
                spins[k] = f
                    .parse::<i32>()
                    .ok()
                    .and_then(Spin::from_value)
                    .ok_or_else(|| bad("spins must be 1 or -1"))?;
            }
            let rate: f64 = fields[5].parse().map_err(|_| bad("rate is not a number"))?;
            let idx = neighborhood_index(spins[0], [spins[1], spins[2], spins[3], spins[4]]);
            if seen[idx] {
                return Err(bad("neighborhood listed twice"));
            }
            seen[idx] = true;
            entries[idx] = rate;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(Error::Format(format!("rate table misses neighborhood {}", describe(i))));
        }
        RateTable::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        RateTable::parse(&std::fs::read_to_string(path)?)
    }

    /// The text form read by [`RateTable::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::from("# c e n w s rate\n");
        for (i, v) in self.entries.iter().enumerate() {
            let (c, nb) = neighborhood_of(i);
            let _ = write!(out, "{}", c.value());
            for s in nb {
                let _ = write!(out, " {}", s.value());
            }
            let _ = writeln!(out, " {v}");
        }
        out
    }
}

fn describe(idx: usize) -> String {
    let (c, nb) = neighborhood_of(idx);
    let sign = |s: Spin| if s.is_plus() { '+' } else { '-' };
    format!("(c{} e{} n{} w{} s{})", sign(c), sign(nb[0]), sign(nb[1]), sign(nb[2]), sign(nb[3]))
}

/// Flip times of the sites of a window, `+∞` for sites still `-1` at the horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct FlipSchedule {
    pub horizon: f64,
    times: ScalarField,
}

impl FlipSchedule {
    pub fn region(&self) -> BoxRegion {
        self.times.region()
    }

    pub fn flip_times(&self) -> &ScalarField {
        &self.times
    }

    pub fn flip_time(&self, s: Site) -> Option<f64> {
        self.times.get(s)
    }

    /// `σ_t`: `+1` exactly where the flip time is `<= t`.
    pub fn field_at(&self, t: f64) -> SpinField {
        self.times.to_spins(|f| f <= t)
    }

    /// First time at which `b` has a left-right `+1` crossing.
    pub fn first_crossing_time(&self, b: &BoxRegion) -> f64 {
        minimax_crossing(&self.times, b)
    }
}

/// Flip times over the whole region of `marks` with `-1` outside, using the
/// kept marks with time `< marks.horizon()`.
pub fn flip_times(marks: &MarkSet, table: &RateTable) -> ScalarField {
    let region = marks.region();
    let w = region.width as usize;
    let h = region.height as usize;
    let horizon = marks.horizon();
    let mut times = vec![f64::INFINITY; region.len()];
    for m in marks.kept() {
        if m.time >= horizon {
            break;
        }
        let i = region.index_unchecked(m.site);
        if times[i].is_finite() {
            continue;
        }
        let (cx, cy) = (i % w, i / w);
        let plus = |ok: bool, j: usize| ok && times[j].is_finite();
        let idx = (plus(cx + 1 < w, i.wrapping_add(1)) as usize) << 1
            | (plus(cy + 1 < h, i.wrapping_add(w)) as usize) << 2
            | (plus(cx > 0, i.wrapping_sub(1)) as usize) << 3
            | (plus(cy > 0, i.wrapping_sub(w)) as usize) << 4;
        if m.rate_uniform <= table.entries[idx] {
            times[i] = m.time;
        }
    }
    ScalarField::from_values(region, times)
}

#[derive(PartialEq)]
struct Need(f64, usize);

impl Eq for Need {}

impl PartialOrd for Need {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Need {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
    }
}

/// Checks that the flip times of `window` up to the horizon do not depend on
/// anything outside the region of `marks`.
pub fn certify_bootstrap(window: BoxRegion, marks: &MarkSet, table: &RateTable) -> Result<()> {
    certify_bootstrap_until(window, marks, table, marks.horizon())
}

/// As [`certify_bootstrap`] for the flips strictly before `until`.
pub fn certify_bootstrap_until(window: BoxRegion, marks: &MarkSet, table: &RateTable, until: f64) -> Result<()> {
    let region = marks.region();
    if !region.contains_box(&window) {
        return Err(Error::WindowOutsideRegion);
    }
    // rates reachable from a `-1` center
    let low = table.entries.iter().step_by(2).cloned().fold(f64::INFINITY, f64::min);
    let high = table.entries.iter().step_by(2).cloned().fold(f64::NEG_INFINITY, f64::max);
    let kept = marks.kept_site_index();
    let all = marks.marks();
    let horizon = until.min(marks.horizon());
    let mut need = vec![f64::NEG_INFINITY; region.len()];
    let mut heap = BinaryHeap::new();
    for s in window.sites() {
        let i = region.index_unchecked(s);
        need[i] = horizon;
        heap.push(Need(horizon, i));
    }
    while let Some(Need(s, i)) = heap.pop() {
        if s < need[i] {
            continue;
        }
        let mut latest = None;
        for &q in kept.of(i) {
            let m = &all[q as usize];
            if m.time >= s {
                break;
            }
            if m.rate_uniform <= low {
                break;
            }
            if m.rate_uniform <= high {
                latest = Some(m.time);
            }
        }
        let Some(t) = latest else { continue };
        let site = region.site(i);
        for (dx, dy) in DIRS4 {
            let n = site.offset(dx, dy);
            let Some(j) = region.index(n) else {
                return Err(Error::SupportEscaped { site: n });
            };
            if t > need[j] {
                need[j] = t;
                heap.push(Need(t, j));
            }
        }
    }
    Ok(())
}

/// Flip schedule of `window` from the all-minus start, certified against
/// the finite region.
pub fn evolve_bootstrap(marks: &MarkSet, table: &RateTable, window: BoxRegion) -> Result<FlipSchedule> {
    certify_bootstrap(window, marks, table)?;
    let times = flip_times(marks, table).restrict(window).expect("window checked");
    Ok(FlipSchedule {
        horizon: marks.horizon(),
        times,
    })
}
