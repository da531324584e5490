//! The random inputs of the graphical construction: per-site coupling
//! uniforms and thickened Poisson clock marks.

use crate::lattice::{BoxRegion, Site, Spin, SpinField};
use crate::rng::{uniform_at, Purpose, RngStream, StreamLabel};
use crate::{Error, Result};

/// Per-site uniforms `U^x` coupling all initial densities.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedField {
    region: BoxRegion,
    uniforms: Vec<f64>,
}

impl SeedField {
    pub fn from_uniforms(region: BoxRegion, uniforms: Vec<f64>) -> Result<Self> {
        if uniforms.len() != region.len() {
            return Err(Error::InvalidParameter(format!(
                "seed field has {} entries for a region of {} sites",
                uniforms.len(),
                region.len()
            )));
        }
        if let Some(u) = uniforms.iter().find(|u| !(0.0..1.0).contains(*u)) {
            return Err(Error::InvalidParameter(format!("seed uniform {u} outside [0, 1)")));
        }
        Ok(SeedField { region, uniforms })
    }

    pub fn region(&self) -> BoxRegion {
        self.region
    }

    pub fn uniforms(&self) -> &[f64] {
        &self.uniforms
    }

    pub fn get(&self, s: Site) -> Option<f64> {
        self.region.index(s).map(|i| self.uniforms[i])
    }

    /// The initial configuration at density `rho`.
    pub fn initial_field(&self, rho: f64) -> SpinField {
        SpinField::from_values(
            self.region,
            self.uniforms.iter().map(|&u| spin_from_seed(u, rho)).collect(),
        )
    }
}

/// Draws `U^x` for every site of `region` from `(master_seed, x)` alone.
pub fn sample_seed_field(region: BoxRegion, master_seed: u64) -> SeedField {
    let uniforms = region
        .sites()
        .map(|s| seed_uniform(master_seed, s))
        .collect();
    SeedField { region, uniforms }
}

#[inline]
pub(crate) fn seed_uniform(master_seed: u64, s: Site) -> f64 {
    uniform_at(master_seed, StreamLabel::new(Purpose::Seed, s.x as i64, s.y as i64, 0))
}

/// `+1` iff `u < rho`.
#[inline]
pub fn spin_from_seed(u: f64, rho: f64) -> Spin {
    Spin::from_bool(u < rho)
}

/// One point `(X, T, R, D)` of the thickened mark process.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mark {
    pub site: Site,
    pub time: f64,
    pub rate_uniform: f64,
    pub keep: bool,
    /// Position of the mark among the marks of its site, in time order.
    pub index: u32,
}

/// Marks of a space-time window sorted by `(time, site, index)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MarkSet {
    region: BoxRegion,
    horizon: f64,
    thickening: u32,
    marks: Vec<Mark>,
}

impl MarkSet {
    pub fn empty(region: BoxRegion, horizon: f64, thickening: u32) -> Self {
        MarkSet {
            region,
            horizon,
            thickening,
            marks: Vec::new(),
        }
    }

    /// Builds a mark set from arbitrary marks inside `region`, sorting them.
    pub fn from_marks(
        region: BoxRegion,
        horizon: f64,
        thickening: u32,
        mut marks: Vec<Mark>,
    ) -> Result<Self> {
        if !(horizon >= 0.0) || thickening == 0 {
            return Err(Error::InvalidParameter(format!(
                "mark set needs horizon >= 0 and k >= 1 (got {horizon}, {thickening})"
            )));
        }
        for m in &marks {
            if !region.contains(m.site) {
                return Err(Error::InvalidParameter(format!("mark at {} outside region", m.site)));
            }
            if !(0.0..=horizon).contains(&m.time) || !(0.0..1.0).contains(&m.rate_uniform) {
                return Err(Error::InvalidParameter(format!("mark {m:?} has invalid time or uniform")));
            }
        }
        sort_marks(region, &mut marks);
        Ok(MarkSet {
            region,
            horizon,
            thickening,
            marks,
        })
    }

    pub fn region(&self) -> BoxRegion {
        self.region
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn thickening(&self) -> u32 {
        self.thickening
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn kept(&self) -> impl Iterator<Item = &Mark> {
        self.marks.iter().filter(|m| m.keep)
    }

    /// Same skeleton with keep-bits redrawn from `keep_seed`.
    pub fn resample_keep(&self, keep_seed: u64) -> MarkSet {
        let p = 1.0 / self.thickening as f64;
        let marks = self
            .marks
            .iter()
            .map(|m| Mark {
                keep: keep_uniform(keep_seed, m.site, m.index) < p,
                ..*m
            })
            .collect();
        MarkSet { marks, ..*self }
    }

    /// Same skeleton with the given keep-bits, one per mark in sorted order.
    pub fn with_keep_bits(&self, bits: impl IntoIterator<Item = bool>) -> MarkSet {
        let mut out = self.clone();
        let mut n = 0;
        for (m, b) in out.marks.iter_mut().zip(bits) {
            m.keep = b;
            n += 1;
        }
        assert_eq!(n, self.marks.len(), "one keep-bit per mark required");
        out
    }

    /// Per-site lists of mark positions in time order.
    pub fn site_index(&self) -> SiteIndex {
        SiteIndex::build(self.region, self.marks.iter().enumerate().map(|(i, m)| (i, m.site)))
    }

    /// Per-site lists of kept mark positions in time order.
    pub fn kept_site_index(&self) -> SiteIndex {
        SiteIndex::build(
            self.region,
            self.marks
                .iter()
                .enumerate()
                .filter(|(_, m)| m.keep)
                .map(|(i, m)| (i, m.site)),
        )
    }

    /// Marks restricted to a sub-window, keeping their labels.
    pub fn restrict(&self, window: BoxRegion) -> Result<MarkSet> {
        if !self.region.contains_box(&window) {
            return Err(Error::WindowOutsideRegion);
        }
        let marks = self
            .marks
            .iter()
            .filter(|m| window.contains(m.site))
            .copied()
            .collect();
        Ok(MarkSet {
            region: window,
            marks,
            ..*self
        })
    }
}

/// CSR layout of mark positions per site.
#[derive(Clone, Debug)]
pub struct SiteIndex {
    offsets: Vec<u32>,
    positions: Vec<u32>,
}

impl SiteIndex {
    fn build(region: BoxRegion, items: impl Iterator<Item = (usize, Site)> + Clone) -> Self {
        let n = region.len();
        let mut offsets = vec![0u32; n + 1];
        for (_, s) in items.clone() {
            offsets[region.index_unchecked(s) + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let mut fill = offsets.clone();
        let mut positions = vec![0u32; offsets[n] as usize];
        for (pos, s) in items {
            let i = region.index_unchecked(s);
            positions[fill[i] as usize] = pos as u32;
            fill[i] += 1;
        }
        SiteIndex { offsets, positions }
    }

    /// Positions (into the mark list) of the marks at the site with row-major index `i`.
    #[inline]
    pub fn of(&self, i: usize) -> &[u32] {
        &self.positions[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

fn sort_marks(region: BoxRegion, marks: &mut [Mark]) {
    marks.sort_unstable_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then_with(|| region.index_unchecked(a.site).cmp(&region.index_unchecked(b.site)))
            .then_with(|| a.index.cmp(&b.index))
    });
}

#[inline]
fn keep_uniform(seed: u64, s: Site, index: u32) -> f64 {
    uniform_at(seed, StreamLabel::new(Purpose::Keep, s.x as i64, s.y as i64, index as u64))
}

/// Pushes the marks of one site onto `out`: a rate-`k` Poisson clock on
/// `(0, horizon]`, each tick carrying a uniform.
pub(crate) fn site_marks(master_seed: u64, s: Site, horizon: f64, k: u32, out: &mut Vec<Mark>) {
    let mut stream = RngStream::new(master_seed, StreamLabel::new(Purpose::Marks, s.x as i64, s.y as i64, 0));
    let rate = k as f64;
    let p = 1.0 / rate;
    let mut t = 0.0;
    let mut index = 0u32;
    loop {
        t += stream.exponential(rate);
        if t > horizon {
            break;
        }
        let rate_uniform = stream.uniform();
        out.push(Mark {
            site: s,
            time: t,
            rate_uniform,
            keep: keep_uniform(master_seed, s, index) < p,
            index,
        });
        index += 1;
    }
}

/// Samples the thickened mark process on `region × [0, horizon]`.
///
/// Each site carries an independent rate-`k` clock (drawn as exponential
/// gaps, so a longer horizon extends the same marks), a uniform per tick and
/// a keep-bit with probability `1/k`. All of it is a function of
/// `(master_seed, site)`.
pub fn sample_marks(region: BoxRegion, horizon: f64, k: u32, master_seed: u64) -> Result<MarkSet> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    if k == 0 {
        return Err(Error::InvalidParameter("thickening k must be at least 1".into()));
    }
    let mut marks = Vec::with_capacity((region.len() as f64 * horizon * k as f64 * 1.1) as usize + 16);
    for s in region.sites() {
        site_marks(master_seed, s, horizon, k, &mut marks);
    }
    sort_marks(region, &mut marks);
    Ok(MarkSet {
        region,
        horizon,
        thickening: k,
        marks,
    })
}

/// Keeps the marks with `keep = 1`; the result is a rate-1 process (`k = 1`).
pub fn thin(marks: &MarkSet) -> MarkSet {
    let mut counts = vec![0u32; marks.region.len()];
    let kept = marks
        .marks
        .iter()
        .filter(|m| m.keep)
        .map(|m| {
            let c = &mut counts[marks.region.index_unchecked(m.site)];
            let out = Mark { index: *c, ..*m };
            *c += 1;
            out
        })
        .collect();
    MarkSet {
        region: marks.region,
        horizon: marks.horizon,
        thickening: 1,
        marks: kept,
    }
}
