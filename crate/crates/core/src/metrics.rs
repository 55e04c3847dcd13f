//! Distances between hypographs of functions on a rectangle.
//!
//! Points of `S x R` are measured in the norm `max(|x|_inf, |x0|)`. Every
//! ball is centred at the anchor of the domain (the point of `S` nearest the
//! origin, i.e. the origin itself whenever `0 ∈ S`).

use serde::{Deserialize, Serialize};

use crate::function::GridFunction;
use crate::grid::{Domain, Grid};
use crate::par;
use crate::{Error, Result};

/// Bisection steps for point-to-hypograph distances.
const POINT_DIST_STEPS: usize = 60;
/// Slack absorbing interpolation round-off in the finite constraint checks.
const CHECK_TOL: f64 = 1e-12;

/// Ball of radius `rho` in `S x R`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub rho: f64,
}

impl Ball {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidArgument(format!("ball radius must be finite and >= 0, got {rho}")));
        }
        Ok(Self { rho })
    }

    /// `1 + diam(S)`: large enough that the ball covers `S` and truncation at
    /// `rho` never bites for `[0, 1]`-valued functions.
    pub fn covering(domain: &Domain) -> Self {
        Self {
            rho: 1.0 + domain.diameter(),
        }
    }

    /// Per-axis interval of `S` inside the ball.
    fn spatial_box(&self, domain: &Domain) -> (Vec<f64>, Vec<f64>) {
        let c = domain.anchor();
        let lo = (0..domain.dim()).map(|i| (c[i] - self.rho).max(domain.lower()[i])).collect();
        let hi = (0..domain.dim()).map(|i| (c[i] + self.rho).min(domain.upper()[i])).collect();
        (lo, hi)
    }

    fn contains_spatial(&self, domain: &Domain, x: &[f64]) -> bool {
        let c = domain.anchor();
        x.iter().zip(&c).all(|(v, c)| (v - c).abs() <= self.rho)
    }
}

/// `clip(x + eta 1)` onto the domain.
fn shifted(domain: &Domain, x: &[f64], eta: f64) -> Vec<f64> {
    x.iter()
        .zip(domain.upper())
        .zip(domain.lower())
        .map(|((v, b), a)| (v + eta).clamp(*a, *b))
        .collect()
}

fn same_domain(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if f.grid().domain() != g.grid().domain() {
        return Err(Error::InvalidArgument("functions live on different domains".into()));
    }
    Ok(())
}

fn require_monotone(f: &GridFunction, g: &GridFunction) -> Result<()> {
    if !f.is_monotone() || !g.is_monotone() {
        return Err(Error::InvalidArgument("hat-distance formula needs nondecreasing functions".into()));
    }
    Ok(())
}

/// Distance from `(x, x0)` to the hypograph of `f`, for `x ∈ S`.
///
/// Uses `dist = min { r >= 0 : max_{B(x, r) ∩ S} f >= x0 - r }`; the left-hand
/// side is nondecreasing and right-continuous in `r`, so bisection converges
/// to the minimizer.
pub fn point_hypo_dist(f: &GridFunction, x: &[f64], x0: f64) -> Result<f64> {
    let fx = f.eval(x)?;
    if x0 <= fx {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, x0 - fx);
    let mut a = vec![0.0; x.len()];
    let mut b = vec![0.0; x.len()];
    for _ in 0..POINT_DIST_STEPS {
        let mid = 0.5 * (lo + hi);
        for i in 0..x.len() {
            a[i] = x[i] - mid;
            b[i] = x[i] + mid;
        }
        if f.box_max(&a, &b)? + mid >= x0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Regular lattice of `n` points on `[a, b]` (one point when the interval is degenerate).
fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n <= 1 || a == b {
        return vec![a];
    }
    (0..n)
        .map(|k| if k == n - 1 { b } else { a + (b - a) * k as f64 / (n - 1) as f64 })
        .collect()
}

fn lattice_point(axes: &[Vec<f64>], mut idx: usize, out: &mut Vec<f64>) {
    out.clear();
    out.resize(axes.len(), 0.0);
    for i in (0..axes.len()).rev() {
        let n = axes[i].len();
        out[i] = axes[i][idx % n];
        idx /= n;
    }
}

/// Lower estimate of the ρ-distance: the maximum of
/// `|dist(x̄, hypo f) - dist(x̄, hypo g)|` over a lattice of `samples_per_axis`
/// points per spatial axis and per height inside the ball. Heights below zero
/// lie in both hypographs and are skipped.
pub fn dl_rho_oracle(f: &GridFunction, g: &GridFunction, ball: Ball, samples_per_axis: usize) -> Result<f64> {
    same_domain(f, g)?;
    let domain = f.grid().domain();
    let (lo, hi) = ball.spatial_box(domain);
    let axes: Vec<Vec<f64>> = (0..domain.dim()).map(|i| linspace(lo[i], hi[i], samples_per_axis)).collect();
    let heights = linspace(0.0, ball.rho, samples_per_axis);
    let total: usize = axes.iter().map(Vec::len).product();
    let worst = par::map_range(total, |idx| {
        let mut x = Vec::new();
        lattice_point(&axes, idx, &mut x);
        let mut best: f64 = 0.0;
        for &x0 in &heights {
            let df = point_hypo_dist(f, &x, x0)?;
            let dg = point_hypo_dist(g, &x, x0)?;
            best = best.max((df - dg).abs());
        }
        Ok(best)
    });
    worst.into_iter().try_fold(0.0_f64, |acc, r: Result<f64>| Ok(acc.max(r?)))
}

/// Hypo-distance integral of the lattice ρ-distance oracle over `[0, rho_max]`
/// with a midpoint rule; the tail beyond `rho_max` uses `dl_ρ <= 1`.
pub fn hypo_dist_oracle(
    f: &GridFunction,
    g: &GridFunction,
    samples_per_axis: usize,
    quad_points: usize,
    rho_max: f64,
) -> Result<f64> {
    let h = rho_max / quad_points as f64;
    let mut total = 0.0;
    for i in 0..quad_points {
        let (a, b) = (i as f64 * h, (i + 1) as f64 * h);
        let d = dl_rho_oracle(f, g, Ball::new(0.5 * (a + b))?, samples_per_axis)?;
        total += d * ((-a).exp() - (-b).exp());
    }
    Ok(total + (-rho_max).exp() * dl_rho_oracle(f, g, Ball::new(rho_max)?, samples_per_axis)?)
}

/// Per-axis coordinates at which the hat-distance constraints are checked:
/// nodes of both grids and the edges of the ball's box, each also shifted by
/// `-eta`, restricted to the box.
fn kenmochi_axes(f: &GridFunction, g: &GridFunction, ball: Ball, eta: f64) -> Vec<Vec<f64>> {
    let domain = f.grid().domain();
    let (lo, hi) = ball.spatial_box(domain);
    f.grid()
        .merged_axes(g.grid())
        .into_iter()
        .enumerate()
        .map(|(i, nodes)| {
            let mut v: Vec<f64> = nodes
                .iter()
                .chain([&lo[i], &hi[i]])
                .flat_map(|&t| [t, (t - eta).max(domain.lower()[i])])
                .filter(|&t| lo[i] <= t && t <= hi[i])
                .collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect()
}

/// Whether `eta` satisfies the hat-distance inequalities
/// `f(clip(x + eta 1)) + eta >= min(g(x), rho)` and the symmetric one at every
/// lattice point `x` of the ball.
pub fn kenmochi_ok(f: &GridFunction, g: &GridFunction, ball: Ball, eta: f64) -> Result<bool> {
    same_domain(f, g)?;
    require_monotone(f, g)?;
    if !(eta >= 0.0) {
        return Err(Error::InvalidArgument(format!("eta must be >= 0, got {eta}")));
    }
    Ok(kenmochi_holds(f, g, ball, eta))
}

fn kenmochi_holds(f: &GridFunction, g: &GridFunction, ball: Ball, eta: f64) -> bool {
    let domain = f.grid().domain();
    let axes = kenmochi_axes(f, g, ball, eta);
    let total: usize = axes.iter().map(Vec::len).product();
    !par::any_range(total, |idx| {
        let mut x = Vec::new();
        lattice_point(&axes, idx, &mut x);
        let y = shifted(domain, &x, eta);
        let fy = f.eval_unchecked(&y);
        let gy = g.eval_unchecked(&y);
        fy + eta < g.eval_unchecked(&x).min(ball.rho) - CHECK_TOL
            || gy + eta < f.eval_unchecked(&x).min(ball.rho) - CHECK_TOL
    })
}

/// Smallest `eta` in `[0, 1]` (to within `tol`) for which `feasible` holds,
/// assuming `feasible(1)`. Returns the feasible end of the final bracket.
pub(crate) fn bisect_eta(tol: f64, feasible: impl Fn(f64) -> bool) -> f64 {
    if feasible(0.0) {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be > 0, got {tol}")));
    }
    Ok(())
}

/// Hat-distance of two nondecreasing functions on the ball, by bisection on η.
pub fn hat_dl_rho(f: &GridFunction, g: &GridFunction, ball: Ball, tol: f64) -> Result<f64> {
    same_domain(f, g)?;
    require_monotone(f, g)?;
    check_tol(tol)?;
    Ok(bisect_eta(tol, |eta| kenmochi_holds(f, g, ball, eta)))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Corner {
    Upper,
    Lower,
}

/// Whether `eta` satisfies the finitely many cell constraints of η⁺
/// (`Corner::Upper`) or η⁻ (`Corner::Lower`).
fn partition_holds(
    f: &GridFunction,
    g: &GridFunction,
    ball: Ball,
    grid: &Grid,
    eta: f64,
    corner: Corner,
) -> Result<bool> {
    let domain = grid.domain();
    let violated = par::map_range(grid.num_cells(), |k| -> Result<bool> {
        let cell = grid.cell(k);
        let l = &cell.lower;
        if corner == Corner::Lower && !ball.contains_spatial(domain, l) {
            return Ok(false);
        }
        let top = shifted(domain, l, eta);
        let f_max = f.box_max(l, &top)?;
        let g_max = g.box_max(l, &top)?;
        let at = if corner == Corner::Upper { &cell.upper } else { l };
        let f_at = f.eval_unchecked(at).min(ball.rho);
        let g_at = g.eval_unchecked(at).min(ball.rho);
        Ok(g_max + eta < f_at - CHECK_TOL || f_max + eta < g_at - CHECK_TOL)
    });
    for v in violated {
        if v? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn eta_partition(f: &GridFunction, g: &GridFunction, ball: Ball, grid: &Grid, tol: f64, corner: Corner) -> Result<f64> {
    same_domain(f, g)?;
    if grid.domain() != f.grid().domain() {
        return Err(Error::InvalidArgument("partition grid lives on a different domain".into()));
    }
    check_tol(tol)?;
    // Surface evaluation errors (e.g. non-monotone m > 2 inputs) before bisecting.
    partition_holds(f, g, ball, grid, 1.0, corner)?;
    Ok(bisect_eta(tol, |eta| partition_holds(f, g, ball, grid, eta, corner).unwrap_or(false)))
}

/// η⁺: upper bound on the hat-distance from cell constraints using upper corners.
pub fn eta_plus(f: &GridFunction, g: &GridFunction, ball: Ball, grid: &Grid, tol: f64) -> Result<f64> {
    eta_partition(f, g, ball, grid, tol, Corner::Upper)
}

/// η⁻: lower bound on the hat-distance from cell constraints at lower corners
/// inside the ball.
pub fn eta_minus(f: &GridFunction, g: &GridFunction, ball: Ball, grid: &Grid, tol: f64) -> Result<f64> {
    eta_partition(f, g, ball, grid, tol, Corner::Lower)
}

/// Hypo-distance estimate with bracketing bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub value: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub method: String,
    /// Radius beyond which the hat-distance no longer changes.
    pub rho_bar: f64,
    /// Width of the bracket contributed by the quadrature on `[0, rho_bar]`.
    pub quadrature_width: f64,
    /// Width contributed by the tail beyond `rho_bar`.
    pub tail_width: f64,
}

/// Hypo-distance `∫ dl_ρ e^{-ρ} dρ` estimated from hat-distances.
///
/// On each of `quad_points` subintervals `[a, b]` of `[0, rho_bar]` the
/// integrand is sandwiched between `d̂l_a` and `d̂l_{2b}`; the reported value
/// uses `(d̂l_ρ + d̂l_{2ρ}) / 2` at the midpoint. For `ρ >= rho_bar` the ball
/// covers `S` and truncation is inactive, so `d̂l_ρ` is constant and the tail
/// contributes `e^{-rho_bar} d̂l_{rho_bar}`. The single-radius bounds
/// `d̂l_ρ e^{-ρ} <= dl <= e^{-ρ} + (1 - e^{-ρ}) d̂l_{2ρ}` are intersected in.
pub fn hypo_dist_estimate(f: &GridFunction, g: &GridFunction, quad_points: usize, tol: f64) -> Result<DistanceReport> {
    same_domain(f, g)?;
    require_monotone(f, g)?;
    check_tol(tol)?;
    if quad_points < 2 {
        return Err(Error::InvalidArgument("need at least 2 quadrature points".into()));
    }
    let domain = f.grid().domain();
    let rho_bar = domain.anchor_radius().max(1.0);
    let n = quad_points;
    let half = rho_bar / (2 * n) as f64;
    // Radii are j * half for j = 0..=2n; larger radii saturate at j = 2n.
    let hats = par::map_range(2 * n + 1, |j| {
        let ball = Ball { rho: j as f64 * half };
        bisect_eta(tol, |eta| kenmochi_holds(f, g, ball, eta))
    });
    let hat = |j: usize| hats[j.min(2 * n)];

    let (mut value, mut lower, mut upper) = (0.0, 0.0, 0.0);
    let mut prop_lower: f64 = 0.0;
    let mut prop_upper: f64 = 1.0;
    for i in 0..n {
        let (ja, jb, jm) = (2 * i, 2 * i + 2, 2 * i + 1);
        let a = ja as f64 * half;
        let w = (-a).exp() - (-(jb as f64 * half)).exp();
        value += w * 0.5 * (hat(jm) + hat(2 * jm));
        lower += w * hat(ja);
        upper += w * hat(2 * jb);
        prop_lower = prop_lower.max(hat(ja) * (-a).exp());
        prop_upper = prop_upper.min((-a).exp() + (1.0 - (-a).exp()) * hat(2 * ja));
    }
    let tail = (-rho_bar).exp() * hat(2 * n);
    value += tail;
    lower += tail;
    upper += tail;
    prop_lower = prop_lower.max(tail);
    prop_upper = prop_upper.min(hat(2 * n));
    let quadrature_width = upper - lower;
    Ok(DistanceReport {
        value,
        lower_bound: lower.max(prop_lower),
        upper_bound: upper.min(prop_upper),
        method: format!("hat-distance midpoint rule, {n} intervals"),
        rho_bar,
        quadrature_width,
        tail_width: 0.0,
    })
}
