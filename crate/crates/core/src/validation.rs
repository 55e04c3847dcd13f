//! Independent checks: sandwich bounds, rectangle-wise distribution error,
//! density of order-0 envelopes, the non-closure fixture, and random pair
//! generators for property runs.

use std::sync::Arc;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cdf::{upper_envelope, CdfSpec, Target};
use crate::function::{GridFunction, Order};
use crate::grid::{Domain, Grid, Rect};
use crate::metrics::{self, Ball, DistanceReport};
use crate::{Error, Result};

/// Tolerance on the sandwich and ordering inequalities.
pub const SANDWICH_TOL: f64 = 2e-8;
/// Rectangles with `Δ_A F < -DIST_TOL` count as violations.
pub const DIST_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rho: f64,
    pub eta_minus: f64,
    pub hat: f64,
    pub eta_plus: f64,
    /// Lattice lower estimate of the ρ-distance.
    pub oracle: f64,
    /// Bound on how far the lattice maximum can sit below the true ρ-distance.
    pub lattice_slack: f64,
    pub hat_2rho: f64,
    pub sandwich_ok: bool,
    pub ordering_ok: bool,
    pub failures: Vec<String>,
}

/// Lattice spacing of [`metrics::dl_rho_oracle`] at `samples` points per axis.
///
/// Point-to-hypograph distances are 1-Lipschitz in the sup norm, so the
/// difference of two is 2-Lipschitz, and every point of the sampled box lies
/// within half a spacing of the lattice.
pub fn oracle_lattice_slack(domain: &Domain, ball: Ball, samples: usize) -> f64 {
    let c = domain.anchor();
    let steps = (samples.max(2) - 1) as f64;
    let spatial = (0..domain.dim())
        .map(|i| (c[i] + ball.rho).min(domain.upper()[i]) - (c[i] - ball.rho).max(domain.lower()[i]))
        .fold(0.0, f64::max);
    spatial.max(ball.rho) / steps
}

/// Computes η⁻, d̂l_ρ, η⁺, the ρ-distance oracle and d̂l_{2ρ}, and checks
/// `η⁻ <= d̂l_ρ <= η⁺` and `d̂l_ρ <= oracle + slack`, `oracle <= d̂l_{2ρ}`.
pub fn verify_sandwich(
    f: &GridFunction,
    g: &GridFunction,
    ball: Ball,
    grid: &Grid,
    oracle_samples: usize,
    tol: f64,
) -> Result<SandwichReport> {
    let eta_minus = metrics::eta_minus(f, g, ball, grid, tol)?;
    let eta_plus = metrics::eta_plus(f, g, ball, grid, tol)?;
    let hat = metrics::hat_dl_rho(f, g, ball, tol)?;
    let hat_2rho = metrics::hat_dl_rho(f, g, Ball::new(2.0 * ball.rho)?, tol)?;
    let oracle = metrics::dl_rho_oracle(f, g, ball, oracle_samples)?;
    let lattice_slack = oracle_lattice_slack(f.grid().domain(), ball, oracle_samples);

    let mut failures = Vec::new();
    if eta_minus > hat + SANDWICH_TOL {
        failures.push(format!("eta_minus {eta_minus} > hat {hat}"));
    }
    if hat > eta_plus + SANDWICH_TOL {
        failures.push(format!("hat {hat} > eta_plus {eta_plus}"));
    }
    let sandwich_ok = failures.is_empty();
    let mut ordering_ok = true;
    if hat > oracle + lattice_slack + SANDWICH_TOL {
        ordering_ok = false;
        failures.push(format!("hat {hat} > oracle {oracle} + slack {lattice_slack}"));
    }
    if oracle > hat_2rho + SANDWICH_TOL {
        ordering_ok = false;
        failures.push(format!("oracle {oracle} > hat(2 rho) {hat_2rho}"));
    }
    Ok(SandwichReport {
        rho: ball.rho,
        eta_minus,
        hat,
        eta_plus,
        oracle,
        lattice_slack,
        hat_2rho,
        sandwich_ok,
        ordering_ok,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionErrorReport {
    pub percent: f64,
    pub checked: u64,
    pub violations: u64,
    pub exhaustive: bool,
    pub seed: u64,
    pub worst: f64,
}

fn pairs_on_axis(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Percentage of node-pair rectangles `A` with `Δ_A F < -1e-9`. All
/// rectangles are checked when there are at most `budget`, otherwise `budget`
/// rectangles drawn uniformly with `seed`.
pub fn distribution_error_pct(f: &GridFunction, budget: u64, seed: u64) -> Result<DistributionErrorReport> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be >= 1".into()));
    }
    let grid = f.grid();
    let m = grid.dim();
    let nodes = grid.nodes_per_axis();
    let per_axis: Vec<u64> = nodes.iter().map(|&n| pairs_on_axis(n)).collect();
    let total = per_axis.iter().try_fold(1u64, |acc, &p| acc.checked_mul(p)).unwrap_or(u64::MAX);

    let delta = |lo: &[usize], hi: &[usize]| -> f64 {
        match f.order() {
            Order::One => {
                let mut idx = vec![0; m];
                (0..1usize << m)
                    .map(|bits| {
                        let mut at_lower = 0;
                        for i in 0..m {
                            if bits >> i & 1 == 1 {
                                idx[i] = hi[i];
                            } else {
                                idx[i] = lo[i];
                                at_lower += 1;
                            }
                        }
                        let sign = if at_lower % 2 == 0 { 1.0 } else { -1.0 };
                        sign * f.values()[grid.node_index(&idx)]
                    })
                    .sum()
            }
            Order::Zero => {
                let rect = Rect::new(grid.node_at(lo), grid.node_at(hi));
                f.delta_rect(&rect).expect("node rectangle lies in the domain")
            }
        }
    };

    let (mut checked, mut violations, mut worst) = (0u64, 0u64, f64::INFINITY);
    let mut tally = |d: f64| {
        checked += 1;
        worst = worst.min(d);
        if d < -DIST_TOL {
            violations += 1;
        }
    };
    let exhaustive = total <= budget;
    if exhaustive {
        let pair_lists: Vec<Vec<(usize, usize)>> = nodes
            .iter()
            .map(|&n| (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect())
            .collect();
        let mut counter = vec![0usize; m];
        let (mut lo, mut hi) = (vec![0; m], vec![0; m]);
        'outer: loop {
            for i in 0..m {
                (lo[i], hi[i]) = pair_lists[i][counter[i]];
            }
            tally(delta(&lo, &hi));
            for i in (0..m).rev() {
                counter[i] += 1;
                if counter[i] < pair_lists[i].len() {
                    continue 'outer;
                }
                counter[i] = 0;
            }
            break;
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut lo, mut hi) = (vec![0; m], vec![0; m]);
        for _ in 0..budget {
            for i in 0..m {
                let pick = sample(&mut rng, nodes[i], 2);
                let (a, b) = (pick.index(0), pick.index(1));
                (lo[i], hi[i]) = (a.min(b), a.max(b));
            }
            tally(delta(&lo, &hi));
        }
    }
    Ok(DistributionErrorReport {
        percent: if checked == 0 { 0.0 } else { 100.0 * violations as f64 / checked as f64 },
        checked,
        violations,
        exhaustive,
        seed,
        worst: if checked == 0 { 0.0 } else { worst },
    })
}

/// Hypo-distance estimates between the order-0 upper envelope of `target` on
/// uniform grids with `levels` cells per axis and its realization on a grid
/// with `fine_cells` cells per axis.
pub fn density_convergence(
    target: &CdfSpec,
    domain: &Domain,
    levels: &[usize],
    fine_cells: usize,
    quad_points: usize,
) -> Result<Vec<DistanceReport>> {
    if levels.len() < 2 {
        return Err(Error::InvalidArgument("density study needs at least 2 levels".into()));
    }
    let fine = target.realize(Arc::new(Grid::with_cells(domain.clone(), fine_cells)?))?;
    levels
        .iter()
        .map(|&cells| {
            let grid = Arc::new(Grid::with_cells(domain.clone(), cells)?);
            let env = upper_envelope(target, grid)?;
            metrics::hypo_dist_estimate(&env, &fine, quad_points, 1e-9)
        })
        .collect()
}

/// Indicator of the closed region of `[0,1]²` on or above the segment from
/// `(0, 1)` to `(1, 1 - t)`.
#[derive(Clone, Copy, Debug)]
struct AboveSegment {
    t: f64,
}

impl Target for AboveSegment {
    fn value(&self, x: &[f64]) -> f64 {
        if x[1] >= 1.0 - self.t * x[0] {
            1.0
        } else {
            0.0
        }
    }

    // An upper set meets a box iff it contains the box's upper corner.
    fn sup_over(&self, rect: &Rect) -> f64 {
        self.value(&rect.upper)
    }
}

#[derive(Clone, Debug)]
pub struct ClosureFixture {
    pub f_nu: GridFunction,
    pub f_limit: GridFunction,
    pub delta_a_nu: f64,
    pub delta_a_limit: f64,
    pub distance: DistanceReport,
}

pub const CLOSURE_CELLS: usize = 64;

/// Non-closure example on `S = A = [0,1]²`: `F^ν` is the indicator above the
/// segment from `(x1, y2)` to `(x2, y2 - (1 - 1/ν)(y2 - y1))`, and the limit is
/// the indicator of the closed upper triangle above the anti-diagonal. Both are
/// stored as order-0 envelopes on a dyadic grid, which is exact here.
pub fn closure_fixture(nu: usize, quad_points: usize) -> Result<ClosureFixture> {
    if nu == 0 {
        return Err(Error::InvalidArgument("nu must be >= 1".into()));
    }
    let grid = Arc::new(Grid::with_cells(Domain::unit(2), CLOSURE_CELLS)?);
    let f_nu = upper_envelope(&AboveSegment { t: 1.0 - 1.0 / nu as f64 }, grid.clone())?;
    let f_limit = upper_envelope(&AboveSegment { t: 1.0 }, grid)?;
    let a = Rect::new(vec![0.0, 0.0], vec![1.0, 1.0]);
    let distance = metrics::hypo_dist_estimate(&f_nu, &f_limit, quad_points, 1e-9)?;
    Ok(ClosureFixture {
        delta_a_nu: f_nu.delta_rect(&a)?,
        delta_a_limit: f_limit.delta_rect(&a)?,
        f_nu,
        f_limit,
        distance,
    })
}

/// Random nondecreasing order-1 function on `grid`: half of the draws are
/// scaled CDFs of random cell masses, the rest running maxima of random
/// increments (monotone but generally violating the distribution condition).
pub fn random_monotone(grid: Arc<Grid>, rng: &mut impl Rng) -> Result<GridFunction> {
    let n = grid.num_nodes();
    let m = grid.dim();
    let mut v = vec![0.0; n];
    let cdf_like = rng.gen_bool(0.5);
    let sparsity: f64 = rng.gen_range(0.2..1.0);
    for k in 0..n {
        let idx = grid.node_multi_index(k);
        let mut lower_max: f64 = 0.0;
        let mut inc_excl = 0.0;
        for i in 0..m {
            if idx[i] > 0 {
                let mut j = idx.clone();
                j[i] -= 1;
                let p = grid.node_index(&j);
                lower_max = lower_max.max(v[p]);
            }
        }
        if cdf_like {
            // Inclusion-exclusion over the lower neighbours plus a fresh cell mass.
            if idx.iter().all(|&c| c > 0) {
                inc_excl = rng.gen::<f64>() * f64::from(rng.gen_bool(sparsity) as u8);
            }
            let mut s = 0.0;
            for bits in 1..1usize << m {
                let mut j = idx.clone();
                let mut ok = true;
                for i in 0..m {
                    if bits >> i & 1 == 1 {
                        if j[i] == 0 {
                            ok = false;
                            break;
                        }
                        j[i] -= 1;
                    }
                }
                if ok {
                    let sign = if bits.count_ones() % 2 == 1 { 1.0 } else { -1.0 };
                    s += sign * v[grid.node_index(&j)];
                }
            }
            v[k] = (s + inc_excl).max(lower_max);
        } else {
            v[k] = lower_max + rng.gen::<f64>() * f64::from(rng.gen_bool(sparsity) as u8);
        }
    }
    let top = v.iter().cloned().fold(0.0, f64::max);
    let scale = if top > 0.0 { rng.gen_range(0.3..=1.0) / top } else { 0.0 };
    GridFunction::from_node_values_clamped(grid, v.into_iter().map(|x| x * scale).collect())
}

/// Random nondecreasing order-1 function whose sup-norm Lipschitz modulus is
/// at most `kappa`: `min(1, c + Σ φ_i(x_i))` with each `φ_i` piecewise linear
/// and slopes in `[0, kappa / m]`.
pub fn random_lipschitz(grid: Arc<Grid>, kappa: f64, rng: &mut impl Rng) -> Result<GridFunction> {
    let m = grid.dim();
    let phis: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let axis = grid.axis(i);
            let mut acc = 0.0;
            let mut out = vec![0.0];
            for w in axis.windows(2) {
                acc += rng.gen::<f64>() * kappa / m as f64 * (w[1] - w[0]);
                out.push(acc);
            }
            out
        })
        .collect();
    let c: f64 = rng.gen_range(0.0..0.5);
    let values = (0..grid.num_nodes())
        .map(|k| {
            let idx = grid.node_multi_index(k);
            (c + (0..m).map(|i| phis[i][idx[i]]).sum::<f64>()).min(1.0)
        })
        .collect();
    GridFunction::new(grid, Order::One, values)
}
