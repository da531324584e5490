//! Glauber dynamics of the Ising model through its graphical construction.
//!
//! A site updates at each kept mark `(x, T, R, D = 1)` to `+1` iff
//! `R <= S_β(neighbors at T-)`. Because the update is monotone in the
//! neighbors and the initial spins are coupled through `U^x < ρ`, every site
//! has a pathwise threshold `θ(x)` with `σ_τ(x) = +1 ⇔ ρ > θ(x)`;
//! [`threshold_field`] computes it exactly in one forward pass.

mod explore;
mod support;

pub use explore::{backward_explore_value, certify_window, BackwardEvaluator};
pub use support::{
    backward_support, earliest_arrivals, light_cone_log_bound, reaches, SupportSet,
};

use crate::lattice::{BoxRegion, ScalarField, Spin, SpinField};
use crate::randomness::{MarkSet, SeedField};
use crate::{Error, Result};

/// Inverse temperature, horizon and thickening of a Glauber run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlauberParams {
    /// `f64::INFINITY` selects the zero-temperature rule.
    pub beta: f64,
    pub horizon: f64,
    pub thickening: u32,
}

impl GlauberParams {
    pub fn new(beta: f64, horizon: f64, thickening: u32) -> Result<Self> {
        if beta.is_nan() || beta < 0.0 {
            return Err(Error::InvalidParameter(format!("beta must be in [0, inf], got {beta}")));
        }
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon must be finite and >= 0, got {horizon}")));
        }
        if thickening == 0 {
            return Err(Error::InvalidParameter("thickening k must be at least 1".into()));
        }
        Ok(GlauberParams {
            beta,
            horizon,
            thickening,
        })
    }
}

/// Spins imposed outside the simulated region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    AllPlus,
    AllMinus,
    /// Missing neighbors contribute nothing to the local field.
    Free,
}

impl BoundaryCondition {
    fn contribution(self) -> i32 {
        match self {
            BoundaryCondition::AllPlus => 1,
            BoundaryCondition::AllMinus => -1,
            BoundaryCondition::Free => 0,
        }
    }
}

/// Update probability as a function of the neighbor sum `Σz`.
pub fn s_beta_sum(sum: i32, beta: f64) -> f64 {
    if beta == f64::INFINITY {
        match sum.signum() {
            1 => 1.0,
            -1 => 0.0,
            _ => 0.5,
        }
    } else {
        1.0 / (1.0 + (-2.0 * beta * sum as f64).exp())
    }
}

/// `exp(βΣz) / (exp(βΣz) + exp(-βΣz))`, with the pointwise limit at `β = ∞`.
pub fn s_beta(z: [Spin; 4], beta: f64) -> f64 {
    s_beta_sum(z.iter().map(|s| s.value()).sum(), beta)
}

/// The update function: `+1` iff `u <= S_β(z)`.
pub fn g_beta(z: [Spin; 4], u: f64, beta: f64) -> Spin {
    Spin::from_bool(u <= s_beta(z, beta))
}

/// Offspring probability `p_β(5) = S_β(1,1,1,1) - S_β(-1,-1,-1,-1)` of the
/// branching process that dominates the backward exploration.
pub fn gw_offspring_prob(beta: f64) -> f64 {
    s_beta_sum(4, beta) - s_beta_sum(-4, beta)
}

/// `S_β` tabulated over the possible sums `-4..=4`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AcceptanceTable {
    table: [f64; 9],
}

impl AcceptanceTable {
    pub(crate) fn new(beta: f64) -> Self {
        let mut table = [0.0; 9];
        for (i, v) in table.iter_mut().enumerate() {
            *v = s_beta_sum(i as i32 - 4, beta);
        }
        AcceptanceTable { table }
    }

    #[inline]
    pub(crate) fn get(&self, sum: i32) -> f64 {
        self.table[(sum + 4) as usize]
    }

    /// Whether a mark with this uniform ignores its neighbors, and the forced value.
    #[inline]
    pub(crate) fn death(&self, r: f64) -> Option<Spin> {
        if r <= self.table[0] {
            Some(Spin::Plus)
        } else if r > self.table[8] {
            Some(Spin::Minus)
        } else {
            None
        }
    }
}

/// Neighbor indices within a region; `usize::MAX` marks a missing neighbor.
#[inline]
pub(crate) fn neighbor_indices(region: &BoxRegion, i: usize) -> [usize; 4] {
    let w = region.width as usize;
    let h = region.height as usize;
    let (cx, cy) = (i % w, i / w);
    [
        if cx + 1 < w { i + 1 } else { usize::MAX },
        if cy + 1 < h { i + w } else { usize::MAX },
        if cx > 0 { i - 1 } else { usize::MAX },
        if cy > 0 { i - w } else { usize::MAX },
    ]
}

fn check_inputs(seeds: &SeedField, marks: &MarkSet, params: &GlauberParams, window: &BoxRegion) -> Result<()> {
    if seeds.region() != marks.region() {
        return Err(Error::InvalidParameter("seed field and marks cover different regions".into()));
    }
    if !marks.region().contains_box(window) {
        return Err(Error::WindowOutsideRegion);
    }
    if marks.horizon() < params.horizon {
        return Err(Error::InvalidParameter(format!(
            "marks sampled up to {} but the run needs {}",
            marks.horizon(),
            params.horizon
        )));
    }
    Ok(())
}

/// Runs the dynamics from an explicit initial configuration over the whole
/// region of `marks`, applying every kept mark with time `< horizon`.
pub fn evolve_field(
    initial: &SpinField,
    marks: &MarkSet,
    beta: f64,
    horizon: f64,
    bc: BoundaryCondition,
) -> SpinField {
    let region = marks.region();
    assert_eq!(initial.region(), region, "initial field must cover the mark region");
    let table = AcceptanceTable::new(beta);
    let outside = bc.contribution();
    let mut state: Vec<i8> = initial.values().iter().map(|s| s.value() as i8).collect();
    for m in marks.kept() {
        if m.time >= horizon {
            break;
        }
        let i = region.index_unchecked(m.site);
        let sum: i32 = neighbor_indices(&region, i)
            .iter()
            .map(|&j| if j == usize::MAX { outside } else { state[j] as i32 })
            .sum();
        state[i] = if m.rate_uniform <= table.get(sum) { 1 } else { -1 };
    }
    SpinField::from_values(
        region,
        state.into_iter().map(|v| Spin::from_bool(v > 0)).collect(),
    )
}

/// `σ_τ` at density `rho`, restricted to `window`.
pub fn evolve(
    seeds: &SeedField,
    marks: &MarkSet,
    rho: f64,
    params: &GlauberParams,
    bc: BoundaryCondition,
    window: BoxRegion,
) -> Result<SpinField> {
    check_inputs(seeds, marks, params, &window)?;
    let out = evolve_field(&seeds.initial_field(rho), marks, params.beta, params.horizon, bc);
    Ok(out.restrict(window).expect("window checked"))
}

/// Exact pathwise thresholds over the whole region: `σ_τ(x) = +1` at density
/// `ρ` iff `ρ > θ(x)`. Values are `-∞` for sites forced to `+1` and `+∞` for
/// sites forced to `-1`.
pub fn threshold_field(
    seeds: &SeedField,
    marks: &MarkSet,
    params: &GlauberParams,
    bc: BoundaryCondition,
) -> ScalarField {
    let region = marks.region();
    assert_eq!(seeds.region(), region, "seed field must cover the mark region");
    let table = AcceptanceTable::new(params.beta);
    let outside = match bc {
        BoundaryCondition::AllPlus => Some(f64::NEG_INFINITY),
        BoundaryCondition::AllMinus => Some(f64::INFINITY),
        BoundaryCondition::Free => None,
    };
    let mut theta: Vec<f64> = seeds.uniforms().to_vec();
    for m in marks.kept() {
        if m.time >= params.horizon {
            break;
        }
        let i = region.index_unchecked(m.site);
        let mut nb = [0.0f64; 4];
        let mut d = 0usize;
        for j in neighbor_indices(&region, i) {
            let v = if j == usize::MAX { outside } else { Some(theta[j]) };
            if let Some(v) = v {
                // insertion keeps `nb[..d]` ascending
                let mut p = d;
                while p > 0 && nb[p - 1] > v {
                    nb[p] = nb[p - 1];
                    p -= 1;
                }
                nb[p] = v;
                d += 1;
            }
        }
        let needed = (0..=d).find(|&j| m.rate_uniform <= table.get(2 * j as i32 - d as i32));
        theta[i] = match needed {
            None => f64::INFINITY,
            Some(0) => f64::NEG_INFINITY,
            Some(j) => nb[j - 1],
        };
    }
    ScalarField::from_values(region, theta)
}

/// Per-site minimum density making the site `+1` at time `τ`, clamped to `[0, 1]`.
pub fn min_rho_map(
    seeds: &SeedField,
    marks: &MarkSet,
    params: &GlauberParams,
    bc: BoundaryCondition,
    window: BoxRegion,
) -> Result<ScalarField> {
    check_inputs(seeds, marks, params, &window)?;
    let theta = threshold_field(seeds, marks, params, bc);
    Ok(theta
        .restrict(window)
        .expect("window checked")
        .map(|v| v.clamp(0.0, 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Site;
    use crate::randomness::{sample_marks, sample_seed_field};
    use approx::assert_abs_diff_eq;
    use Spin::{Minus as M, Plus as P};

    const ALL: [[Spin; 4]; 16] = {
        let mut out = [[M; 4]; 16];
        let mut i = 0;
        while i < 16 {
            let mut j = 0;
            while j < 4 {
                if i >> j & 1 == 1 {
                    out[i][j] = P;
                }
                j += 1;
            }
            i += 1;
        }
        out
    };

    #[test]
    fn s_beta_values() {
        for z in ALL {
            assert_eq!(s_beta(z, 0.0), 0.5);
        }
        for beta in [0.1, 1.0, 7.0, f64::INFINITY] {
            assert_eq!(s_beta([P, M, P, M], beta), 0.5);
        }
        assert_abs_diff_eq!(s_beta([P, P, M, P], 1.0), 0.982_013_790_037_908_4, epsilon = 1e-12);
        assert_eq!(s_beta([P, P, M, P], f64::INFINITY), 1.0);
        assert_eq!(s_beta([M, P, M, M], f64::INFINITY), 0.0);
    }

    #[test]
    fn g_beta_cases_and_monotonicity() {
        for z in ALL {
            for beta in [0.0, 0.3, 2.0, 50.0] {
                assert_eq!(g_beta(z, 0.0, beta), P);
            }
            assert_eq!(g_beta(z, 0.999_999, 0.0), M);
        }
        for a in ALL {
            for b in ALL {
                if a.iter().zip(&b).all(|(x, y)| x <= y) {
                    for beta in [0.0, 0.4, 1.5, f64::INFINITY] {
                        for u in [0.0, 0.1, 0.3, 0.5, 0.7, 0.9, 0.999] {
                            assert!(g_beta(a, u, beta) <= g_beta(b, u, beta));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn offspring_probability() {
        assert_eq!(gw_offspring_prob(0.0), 0.0);
        assert_abs_diff_eq!(gw_offspring_prob(60.0), 1.0, epsilon = 1e-12);
        assert_eq!(gw_offspring_prob(f64::INFINITY), 1.0);
        let p = gw_offspring_prob(0.05);
        let want = 1.0 / (1.0 + (-0.4f64).exp()) - 1.0 / (1.0 + 0.4f64.exp());
        assert_abs_diff_eq!(p, want, epsilon = 1e-15);
        assert_abs_diff_eq!(p, 0.197_375, epsilon = 1e-6);
        assert!(p < 0.2);
    }

    #[test]
    fn params_validation() {
        assert!(GlauberParams::new(-1.0, 1.0, 1).is_err());
        assert!(GlauberParams::new(f64::NAN, 1.0, 1).is_err());
        assert!(GlauberParams::new(1.0, -0.1, 1).is_err());
        assert!(GlauberParams::new(1.0, 1.0, 0).is_err());
        assert!(GlauberParams::new(f64::INFINITY, 0.0, 3).is_ok());
    }

    fn setup(seed: u64, w: u32, tau: f64, k: u32) -> (SeedField, MarkSet) {
        let r = BoxRegion::new(Site::new(0, 0), w, w);
        (sample_seed_field(r, seed), sample_marks(r, tau, k, seed).unwrap())
    }

    #[test]
    fn zero_horizon_returns_initial_field() {
        let (seeds, marks) = setup(1, 12, 1.0, 1);
        let params = GlauberParams::new(1.0, 0.0, 1).unwrap();
        let out = evolve(&seeds, &marks, 0.4, &params, BoundaryCondition::Free, marks.region()).unwrap();
        assert_eq!(out, seeds.initial_field(0.4));
    }

    #[test]
    fn all_plus_is_absorbing_at_zero_temperature() {
        let (seeds, marks) = setup(2, 12, 3.0, 1);
        let params = GlauberParams::new(f64::INFINITY, 3.0, 1).unwrap();
        let out = evolve(&seeds, &marks, 1.0, &params, BoundaryCondition::Free, marks.region()).unwrap();
        assert_eq!(out.count_plus(), out.region().len());
    }

    #[test]
    fn rejects_window_outside_region() {
        let (seeds, marks) = setup(3, 8, 1.0, 1);
        let params = GlauberParams::new(1.0, 1.0, 1).unwrap();
        let bad = BoxRegion::new(Site::new(4, 4), 8, 8);
        assert!(matches!(
            evolve(&seeds, &marks, 0.5, &params, BoundaryCondition::Free, bad),
            Err(Error::WindowOutsideRegion)
        ));
        let long = GlauberParams::new(1.0, 2.0, 1).unwrap();
        assert!(evolve(&seeds, &marks, 0.5, &long, BoundaryCondition::Free, marks.region()).is_err());
    }

    #[test]
    fn monotone_in_rho_and_boundary() {
        for seed in 0..100 {
            let (seeds, marks) = setup(seed, 10, 1.0, 1);
            let params = GlauberParams::new(1.0, 1.0, 1).unwrap();
            let run = |rho, bc| evolve(&seeds, &marks, rho, &params, bc, marks.region()).unwrap();
            let lo = run(0.4, BoundaryCondition::Free);
            let hi = run(0.6, BoundaryCondition::Free);
            assert!(lo.le(&hi));
            let minus = run(0.5, BoundaryCondition::AllMinus);
            let free = run(0.5, BoundaryCondition::Free);
            let plus = run(0.5, BoundaryCondition::AllPlus);
            assert!(minus.le(&free) && free.le(&plus));
        }
    }

    #[test]
    fn threshold_field_matches_evolve() {
        for seed in 0..40 {
            for (beta, bc) in [
                (0.7, BoundaryCondition::Free),
                (f64::INFINITY, BoundaryCondition::AllPlus),
                (2.0, BoundaryCondition::AllMinus),
            ] {
                let (seeds, marks) = setup(seed, 9, 1.5, 2);
                let params = GlauberParams::new(beta, 1.5, 2).unwrap();
                let theta = threshold_field(&seeds, &marks, &params, bc);
                for rho in [0.0, 0.13, 0.5, 0.77, 1.0] {
                    let out = evolve(&seeds, &marks, rho, &params, bc, marks.region()).unwrap();
                    assert_eq!(out, theta.to_spins(|t| rho > t), "seed {seed} rho {rho}");
                }
            }
        }
    }

    #[test]
    fn unmarked_sites_have_seed_threshold() {
        let (seeds, marks) = setup(5, 10, 0.3, 1);
        let params = GlauberParams::new(1.0, 0.3, 1).unwrap();
        let map = min_rho_map(&seeds, &marks, &params, BoundaryCondition::Free, marks.region()).unwrap();
        let idx = marks.kept_site_index();
        let mut checked = 0;
        for (i, s) in marks.region().sites().enumerate() {
            if idx.of(i).is_empty() {
                assert_eq!(map.at(s), seeds.get(s).unwrap());
                checked += 1;
            }
        }
        assert!(checked > 10);
    }

    #[test]
    fn min_rho_map_brackets_flip() {
        let (seeds, marks) = setup(8, 12, 2.0, 1);
        let params = GlauberParams::new(1.2, 2.0, 1).unwrap();
        let bc = BoundaryCondition::Free;
        let map = min_rho_map(&seeds, &marks, &params, bc, marks.region()).unwrap();
        let step = 2f64.powi(-19);
        for s in marks.region().sites().step_by(7) {
            let t = map.at(s);
            if t + step <= 1.0 {
                let out = evolve(&seeds, &marks, t + step, &params, bc, marks.region()).unwrap();
                assert_eq!(out.at(s), P);
            }
            if t - step >= 0.0 {
                let out = evolve(&seeds, &marks, t - step, &params, bc, marks.region()).unwrap();
                assert_eq!(out.at(s), M);
            }
        }
        assert_eq!(map, min_rho_map(&seeds, &marks, &params, bc, marks.region()).unwrap());
    }
}
