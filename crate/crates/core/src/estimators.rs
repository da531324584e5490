//! Monte Carlo estimators over independent replicates.
//!
//! Replicate `r` of a run with master seed `s` draws all of its randomness
//! from `replicate_seed(s, r)`. Every simulation runs on the target window
//! enlarged by a margin and is certified exact for the window; the margin is
//! doubled on failure.

use crate::bootstrap::{certify_bootstrap_until, flip_times, RateTable};
use crate::exec::map_replicates;
use crate::geometry::{arm_event, minimax_crossing, plus_crossing};
use crate::glauber::{certify_window, evolve, threshold_field, BoundaryCondition, GlauberParams};
use crate::lattice::{BoxRegion, ScalarField, Site, Spin};
use crate::randomness::{sample_marks, sample_seed_field, MarkSet, SeedField};
use crate::rng::{derive_seed, replicate_seed};
use crate::{Error, Result};

const SKELETON_TAG: u64 = 1;
const INNER_TAG: u64 = 2;

/// Mean of i.i.d. samples with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(replicates)`.
    pub stderr: f64,
    pub replicates: u64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Estimate {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Estimate {
            mean,
            stderr: (var / n as f64).sqrt(),
            replicates: n as u64,
        }
    }

    pub fn from_indicators(hits: &[bool]) -> Estimate {
        let xs: Vec<f64> = hits.iter().map(|&b| b as u8 as f64).collect();
        Estimate::from_samples(&xs)
    }

    /// `|self - other| <= z · sqrt(se₁² + se₂²)`.
    pub fn agrees_with(&self, other: &Estimate, z: f64) -> bool {
        (self.mean - other.mean).abs() <= z * self.stderr.hypot(other.stderr)
    }
}

/// Per-replicate exact thresholds of a monotone crossing event.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSample {
    pub values: Vec<f64>,
}

impl ThresholdSample {
    fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn median(&self) -> f64 {
        let v = self.sorted();
        let n = v.len();
        assert!(n > 0, "empty threshold sample");
        if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        }
    }

    /// 95% order-statistic interval for the median: ranks `N/2 ± 0.98·sqrt(N)`.
    pub fn median_ci(&self) -> (f64, f64) {
        let v = self.sorted();
        let n = v.len() as f64;
        let half = 0.98 * n.sqrt();
        let lo = (n / 2.0 - half).floor().max(0.0) as usize;
        let hi = ((n / 2.0 + half).ceil() as usize).min(v.len() - 1);
        (v[lo], v[hi])
    }

    /// Half-width of [`ThresholdSample::median_ci`] divided by 1.96.
    pub fn median_stderr(&self) -> f64 {
        let (lo, hi) = self.median_ci();
        (hi - lo) / (2.0 * 1.96)
    }

    /// Fraction of replicates whose event holds at `p`.
    pub fn fraction_below(&self, p: f64) -> f64 {
        self.values.iter().filter(|&&v| v < p).count() as f64 / self.values.len() as f64
    }
}

/// Initial margin and number of doublings before giving up.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MarginPolicy {
    /// `None` selects `ceil(4τ) + 16`.
    pub initial: Option<u32>,
    pub doublings: u32,
}

impl Default for MarginPolicy {
    fn default() -> Self {
        MarginPolicy {
            initial: None,
            doublings: 3,
        }
    }
}

impl MarginPolicy {
    pub fn initial_margin(&self, horizon: f64) -> u32 {
        self.initial.unwrap_or_else(|| (4.0 * horizon).ceil() as u32 + 16)
    }

    /// Runs `attempt` with growing margins until it stops escaping.
    pub fn run<T>(&self, horizon: f64, mut attempt: impl FnMut(u32) -> Result<T>) -> Result<T> {
        let mut margin = self.initial_margin(horizon);
        for _ in 0..=self.doublings {
            match attempt(margin) {
                Err(Error::SupportEscaped { .. }) => margin *= 2,
                other => return other,
            }
        }
        Err(Error::MarginExhausted {
            attempts: self.doublings,
            margin: margin / 2,
        })
    }
}

fn glauber_marks(region: BoxRegion, params: &GlauberParams, seed: u64) -> Result<MarkSet> {
    if params.horizon == 0.0 {
        Ok(MarkSet::empty(region, 0.0, params.thickening))
    } else {
        sample_marks(region, params.horizon, params.thickening, seed)
    }
}

/// Seeds and marks of one replicate on `window` enlarged until the window
/// is certified exact.
pub fn certified_realization(
    window: BoxRegion,
    params: &GlauberParams,
    seed: u64,
    policy: &MarginPolicy,
) -> Result<(SeedField, MarkSet)> {
    policy.run(params.horizon, |margin| {
        let region = window.expand(margin);
        let marks = glauber_marks(region, params, seed)?;
        certify_window(window, &marks, params)?;
        Ok((sample_seed_field(region, seed), marks))
    })
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

fn check_replicates(replicates: u64) -> Result<()> {
    if replicates < 2 {
        return Err(Error::InvalidParameter("at least two replicates are needed".into()));
    }
    Ok(())
}

/// `P[C(n, m)]`: left-right `+1` crossing of `[0, n] × [0, m]` at time `τ`.
pub fn estimate_crossing(
    params: &GlauberParams,
    rho: f64,
    n: u32,
    m: u32,
    replicates: u64,
    seed: u64,
) -> Result<Estimate> {
    check_replicates(replicates)?;
    let window = BoxRegion::crossing(n, m);
    let policy = MarginPolicy::default();
    let hits = collect(map_replicates(replicates, |r| {
        let rs = replicate_seed(seed, r);
        let (seeds, marks) = certified_realization(window, params, rs, &policy)?;
        let field = evolve(&seeds, &marks, rho, params, BoundaryCondition::AllMinus, window)?;
        Ok(plus_crossing(&field, &window))
    }))?;
    Ok(Estimate::from_indicators(&hits))
}

/// Crossing threshold `ρ*` of `window` for one certified realization: the
/// crossing holds at density `ρ` iff `ρ > ρ*`.
pub fn rho_threshold(seeds: &SeedField, marks: &MarkSet, params: &GlauberParams, window: &BoxRegion) -> f64 {
    let theta = threshold_field(seeds, marks, params, BoundaryCondition::AllMinus);
    minimax_crossing(&theta, window).clamp(0.0, 1.0)
}

/// Per-replicate `ρ*` for the crossing of `[0, n] × [0, m]`.
pub fn rho_threshold_sample(
    params: &GlauberParams,
    n: u32,
    m: u32,
    replicates: u64,
    seed: u64,
) -> Result<ThresholdSample> {
    let window = BoxRegion::crossing(n, m);
    let policy = MarginPolicy::default();
    let values = collect(map_replicates(replicates, |r| {
        let rs = replicate_seed(seed, r);
        let (seeds, marks) = certified_realization(window, params, rs, &policy)?;
        Ok(rho_threshold(&seeds, &marks, params, &window))
    }))?;
    Ok(ThresholdSample { values })
}

/// First crossing time of `window` in one replicate of the bootstrap
/// dynamics, extending the horizon until a crossing occurs.
pub fn bootstrap_crossing_time(
    table: &RateTable,
    window: BoxRegion,
    thickening: u32,
    seed: u64,
    policy: &MarginPolicy,
) -> Result<f64> {
    let mut horizon = 2.0 / table.epsilon();
    loop {
        let t = policy.run(0.0, |margin| {
            let region = window.expand(margin);
            let marks = sample_marks(region, horizon, thickening, seed)?;
            let times = flip_times(&marks, table);
            let t = minimax_crossing(&times, &window);
            if t.is_finite() {
                certify_bootstrap_until(window, &marks, table, t.next_up())?;
            }
            Ok(t)
        })?;
        if t.is_finite() {
            return Ok(t);
        }
        horizon *= 2.0;
        if horizon > 1e6 {
            return Err(Error::InvalidParameter("no crossing before time 1e6".into()));
        }
    }
}

/// Per-replicate first crossing times `t*` of `[0, n] × [0, m]`.
pub fn t_threshold_sample(
    table: &RateTable,
    n: u32,
    m: u32,
    thickening: u32,
    replicates: u64,
    seed: u64,
) -> Result<ThresholdSample> {
    let window = BoxRegion::crossing(n, m);
    let policy = MarginPolicy::default();
    let values = collect(map_replicates(replicates, |r| {
        bootstrap_crossing_time(table, window, thickening, replicate_seed(seed, r), &policy)
    }))?;
    Ok(ThresholdSample { values })
}

/// Sample covariance of `σ_τ(0)` and `σ_τ((d, 0))` for each `d`.
pub fn covariance_decay(
    params: &GlauberParams,
    rho: f64,
    distances: &[u32],
    replicates: u64,
    seed: u64,
) -> Result<Vec<Estimate>> {
    check_replicates(replicates)?;
    let far = distances.iter().copied().max().unwrap_or(0);
    let window = BoxRegion::new(Site::new(0, 0), far + 1, 1);
    let policy = MarginPolicy::default();
    let rows = collect(map_replicates(replicates, |r| {
        let rs = replicate_seed(seed, r);
        let (seeds, marks) = certified_realization(window, params, rs, &policy)?;
        let f = evolve(&seeds, &marks, rho, params, BoundaryCondition::AllMinus, window)?;
        Ok(f.values().iter().map(|s| s.value() as f64).collect::<Vec<f64>>())
    }))?;
    let n = rows.len() as f64;
    let mean_at = |d: usize| rows.iter().map(|row| row[d]).sum::<f64>() / n;
    let m0 = mean_at(0);
    Ok(distances
        .iter()
        .map(|&d| {
            let md = mean_at(d as usize);
            let products: Vec<f64> = rows.iter().map(|row| (row[0] - m0) * (row[d as usize] - md)).collect();
            let e = Estimate::from_samples(&products);
            Estimate {
                mean: e.mean * n / (n - 1.0),
                ..e
            }
        })
        .collect())
}

/// Distribution of the quenched arm probabilities `P[Arm(m, n) | μ′]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuenchedArmSummary {
    /// One estimate per mark skeleton, in replicate order.
    pub quenched: Vec<f64>,
    /// Mean of the quenched estimates; an estimate of the annealed probability.
    pub annealed: Estimate,
}

impl QuenchedArmSummary {
    /// Empirical quantile of the quenched probabilities (nearest rank).
    pub fn quantile(&self, q: f64) -> f64 {
        let mut v = self.quenched.clone();
        v.sort_by(f64::total_cmp);
        let rank = ((q * v.len() as f64).ceil() as usize).clamp(1, v.len());
        v[rank - 1]
    }
}

/// Inner replicates of a quenched functional: the skeleton sampled from
/// `skeleton_seed` is fixed; seeds and keep-bits are redrawn per inner run.
fn quenched_mean(
    window: BoxRegion,
    params: &GlauberParams,
    skeleton_seed: u64,
    inner: u64,
    policy: &MarginPolicy,
    event: impl Fn(&SeedField, &MarkSet) -> Result<bool>,
) -> Result<f64> {
    policy.run(params.horizon, |margin| {
        let region = window.expand(margin);
        let skeleton = glauber_marks(region, params, skeleton_seed)?;
        let mut hits = 0u64;
        for j in 0..inner {
            let js = derive_seed(skeleton_seed, INNER_TAG, j);
            let marks = skeleton.resample_keep(js);
            certify_window(window, &marks, params)?;
            let seeds = sample_seed_field(region, js);
            hits += event(&seeds, &marks)? as u64;
        }
        Ok(hits as f64 / inner as f64)
    })
}

pub fn quenched_arm_estimate(
    params: &GlauberParams,
    rho: f64,
    m: u32,
    n: u32,
    outer: u64,
    inner: u64,
    seed: u64,
) -> Result<QuenchedArmSummary> {
    if m >= n {
        return Err(Error::InvalidParameter(format!("arm event needs m < n, got {m} and {n}")));
    }
    check_replicates(outer)?;
    let center = Site::new(0, 0);
    let window = BoxRegion::ball(center, n + 1);
    let policy = MarginPolicy::default();
    let quenched = collect(map_replicates(outer, |r| {
        let skeleton_seed = derive_seed(replicate_seed(seed, r), SKELETON_TAG, 0);
        quenched_mean(window, params, skeleton_seed, inner, &policy, |seeds, marks| {
            let f = evolve(seeds, marks, rho, params, BoundaryCondition::AllMinus, window)?;
            Ok(arm_event(&f, center, m, n))
        })
    }))?;
    let annealed = Estimate::from_samples(&quenched);
    Ok(QuenchedArmSummary { quenched, annealed })
}

/// Per-site minimal density for `+1` at time `τ` on `window` itself, with
/// boundary condition `bc` outside.
pub fn heatmap(params: &GlauberParams, bc: BoundaryCondition, window: BoxRegion, seed: u64) -> Result<ScalarField> {
    let marks = glauber_marks(window, params, seed)?;
    let seeds = sample_seed_field(window, seed);
    crate::glauber::min_rho_map(&seeds, &marks, params, bc, window)
}

/// Pearson correlation of the values over all nearest-neighbor pairs.
pub fn lag1_autocorrelation(field: &ScalarField) -> f64 {
    let region = field.region();
    let mut pairs = Vec::new();
    for s in region.sites() {
        for t in [s.offset(1, 0), s.offset(0, 1)] {
            if let Some(v) = field.get(t) {
                pairs.push((field.at(s), v));
            }
        }
    }
    let n = pairs.len() as f64;
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for &(x, y) in &pairs {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    // constant fields leave only rounding noise
    if saa.min(sbb) <= 1e-20 * n {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Variance across skeletons of `Z = P[crossing | μ′]` for one thickening.
#[derive(Clone, Debug, PartialEq)]
pub struct ThinningRow {
    pub k: u32,
    /// Sample variance of the estimated `Z`, with its standard error.
    pub variance: Estimate,
    pub mean_z: f64,
    pub bound: f64,
}

impl ThinningRow {
    pub fn within_bound(&self, z: f64) -> bool {
        self.variance.mean <= self.bound + z * self.variance.stderr
    }
}

pub fn thinning_variance_check(
    beta: f64,
    tau: f64,
    rho: f64,
    n: u32,
    m: u32,
    k_values: &[u32],
    outer: u64,
    inner: u64,
    seed: u64,
) -> Result<Vec<ThinningRow>> {
    check_replicates(outer)?;
    let window = BoxRegion::crossing(n, m);
    let policy = MarginPolicy::default();
    k_values
        .iter()
        .map(|&k| {
            let params = GlauberParams::new(beta, tau, k)?;
            let zs = collect(map_replicates(outer, |r| {
                let skeleton_seed = derive_seed(replicate_seed(seed, r), SKELETON_TAG, k as u64);
                quenched_mean(window, &params, skeleton_seed, inner, &policy, |seeds, marks| {
                    let f = evolve(seeds, marks, rho, &params, BoundaryCondition::AllMinus, window)?;
                    Ok(plus_crossing(&f, &window))
                })
            }))?;
            let z = Estimate::from_samples(&zs);
            let squares: Vec<f64> = zs.iter().map(|v| (v - z.mean).powi(2)).collect();
            let sq = Estimate::from_samples(&squares);
            let nn = zs.len() as f64;
            Ok(ThinningRow {
                k,
                variance: Estimate {
                    mean: sq.mean * nn / (nn - 1.0),
                    ..sq
                },
                mean_z: z.mean,
                bound: 1.0 / k as f64,
            })
        })
        .collect()
}

/// Whether `σ_τ(x) = +1` in a certified realization around `x`; used for
/// single-site marginals.
pub fn site_marginal(params: &GlauberParams, rho: f64, replicates: u64, seed: u64) -> Result<Estimate> {
    check_replicates(replicates)?;
    let window = BoxRegion::new(Site::new(0, 0), 1, 1);
    let policy = MarginPolicy::default();
    let hits = collect(map_replicates(replicates, |r| {
        let rs = replicate_seed(seed, r);
        let (seeds, marks) = certified_realization(window, params, rs, &policy)?;
        let f = evolve(&seeds, &marks, rho, params, BoundaryCondition::AllMinus, window)?;
        Ok(f.at(Site::new(0, 0)) == Spin::Plus)
    }))?;
    Ok(Estimate::from_indicators(&hits))
}
