//! Brute-force cross-checks for the fixed-horizon Fuller problem
//! `1/2 int_0^t1 x^2 dt -> min`, `x' = y`, `y' = u`, `|u| <= 1`,
//! `(x, y)(0) = p0`, `(x, y)(t1) = p1`.
//!
//! [`bangbang_search`] optimizes switch times of piecewise-constant controls;
//! [`collocation_cost`] solves a trapezoidal transcription by accelerated
//! projected gradient. Neither uses the synthesis in [`crate::fuller`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fuller::{arc_cost, propagate_arc, PhasePoint};

/// Desk-scale cap on the number of switches.
pub const MAX_SWITCHES: usize = 12;
pub const DEFAULT_STARTS: usize = 50;
/// Endpoint tolerance for a candidate to count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-6;

const PENALTY_ROUNDS: usize = 5;
const PENALTY_START: f64 = 10.0;
const PENALTY_SWEEPS: usize = 8;
const REDUCED_SWEEPS: usize = 40;
const GOLDEN_EVALS: usize = 32;

/// A piecewise-constant control with values in `{-1, 0, 1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SwitchCandidate {
    pub initial_control: i8,
    /// Strictly increasing, inside `(0, t1)`.
    pub switch_times: Vec<f64>,
    /// Control on each of the `switch_times.len() + 1` intervals.
    pub controls: Vec<i8>,
}

impl SwitchCandidate {
    /// Endpoint and exact cost on `[0, t1]` from `p0`.
    pub fn evaluate(&self, p0: PhasePoint, t1: f64) -> (PhasePoint, f64) {
        evaluate(&self.controls, &self.switch_times, p0, t1)
    }
}

/// Best candidate found by [`bangbang_search`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BangbangResult {
    pub candidate: SwitchCandidate,
    pub cost: f64,
    pub endpoint_error: f64,
    pub max_switches: usize,
    pub starts: usize,
    pub seed: u64,
    /// Local searches that ended within [`FEASIBILITY_TOL`] of `p1`.
    pub feasible_starts: usize,
}

/// Search settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SearchOptions {
    pub max_switches: usize,
    /// Random starts per switch count.
    pub starts: usize,
    pub seed: u64,
}

fn evaluate(controls: &[i8], times: &[f64], p0: PhasePoint, t1: f64) -> (PhasePoint, f64) {
    let mut p = p0;
    let mut cost = 0.0;
    let mut t = 0.0;
    for (i, &u) in controls.iter().enumerate() {
        let end = times.get(i).copied().unwrap_or(t1);
        let d = (end - t).max(0.0);
        cost += arc_cost(p, u, d);
        p = propagate_arc(p, u, d);
        t = end.max(t);
    }
    (p, cost)
}

fn endpoint_error(end: PhasePoint, p1: PhasePoint) -> f64 {
    (end.x - p1.x).abs().max((end.y - p1.y).abs())
}

/// Sensitivity of the endpoint to switch `i`: `(u_i - u_{i+1}) (t1 - s_i, 1)`.
fn jac_column(controls: &[i8], times: &[f64], i: usize, t1: f64) -> (f64, f64) {
    let du = f64::from(controls[i] - controls[i + 1]);
    (du * (t1 - times[i]), du)
}

/// Newton projection onto the endpoint constraint, moving switches `j` and `k`.
fn project(
    controls: &[i8],
    times: &mut [f64],
    pair: (usize, usize),
    p0: PhasePoint,
    p1: PhasePoint,
    t1: f64,
) -> bool {
    let (j, k) = pair;
    for _ in 0..30 {
        let (end, _) = evaluate(controls, times, p0, t1);
        let (rx, ry) = (end.x - p1.x, end.y - p1.y);
        if rx.abs().max(ry.abs()) < 1e-14 * (1.0 + t1 * t1) {
            return true;
        }
        let (a, c) = jac_column(controls, times, j, t1);
        let (b, d) = jac_column(controls, times, k, t1);
        let det = a * d - b * c;
        if det.abs() < 1e-14 {
            return false;
        }
        times[j] -= (d * rx - b * ry) / det;
        times[k] -= (-c * rx + a * ry) / det;
        if !ordered(times, t1) {
            return false;
        }
    }
    let (end, _) = evaluate(controls, times, p0, t1);
    endpoint_error(end, p1) < 1e-12 * (1.0 + t1 * t1)
}

fn ordered(times: &[f64], t1: f64) -> bool {
    let mut prev = 0.0;
    for &s in times {
        if !(s >= prev) {
            return false;
        }
        prev = s;
    }
    prev <= t1
}

/// Pair of switches other than `skip` with the best-conditioned Jacobian.
fn best_pair(controls: &[i8], times: &[f64], skip: Option<usize>, t1: f64) -> Option<(usize, usize)> {
    let mut best = None;
    let mut best_det = 0.0;
    for j in 0..times.len() {
        for k in j + 1..times.len() {
            if Some(j) == skip || Some(k) == skip {
                continue;
            }
            let (a, c) = jac_column(controls, times, j, t1);
            let (b, d) = jac_column(controls, times, k, t1);
            let det = (a * d - b * c).abs();
            if det > best_det {
                best_det = det;
                best = Some((j, k));
            }
        }
    }
    best
}

/// Minimizes `f` over `[lo, hi]` by golden-section search.
fn golden<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, current: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_EVALS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let fcur = f(current);
    let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
    if fx < fcur {
        (x, fx)
    } else {
        (current, fcur)
    }
}

/// Control patterns with exactly `k` switches: alternating bang arcs, or
/// `m` bang arcs, a `u = 0` arc, then `k - m` bang arcs. Shorter patterns
/// arise from these when arcs shrink to zero length.
fn patterns(k: usize) -> Vec<Vec<i8>> {
    let alt = |first: i8, n: usize| -> Vec<i8> { (0..n).map(|i| if i % 2 == 0 { first } else { -first }).collect() };
    let mut out = vec![alt(1, k + 1), alt(-1, k + 1)];
    for m in 0..=k {
        for (s, t) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
            let before = alt(s, m);
            let after = alt(t, k - m);
            if (m == 0 && s == -1) || (m == k && t == -1) {
                continue;
            }
            let mut p = before;
            p.push(0);
            p.extend(after);
            if p.len() == k + 1 {
                out.push(p);
            }
        }
    }
    out
}

struct LocalResult {
    controls: Vec<i8>,
    times: Vec<f64>,
    cost: f64,
    error: f64,
}

fn local_search(
    controls: Vec<i8>,
    mut times: Vec<f64>,
    p0: PhasePoint,
    p1: PhasePoint,
    t1: f64,
) -> LocalResult {
    let k = times.len();
    let obj = |times: &[f64], rho: f64| {
        let (end, cost) = evaluate(&controls, times, p0, t1);
        cost + rho * ((end.x - p1.x).powi(2) + (end.y - p1.y).powi(2))
    };
    // penalty phase, weight x10 per round
    let mut rho = PENALTY_START;
    for _ in 0..PENALTY_ROUNDS {
        for _ in 0..PENALTY_SWEEPS {
            let before = obj(&times, rho);
            for i in 0..k {
                let lo = if i == 0 { 0.0 } else { times[i - 1] };
                let hi = if i + 1 == k { t1 } else { times[i + 1] };
                let cur = times[i];
                let mut trial = times.clone();
                let (x, _) = golden(
                    |s| {
                        trial[i] = s;
                        obj(&trial, rho)
                    },
                    lo,
                    hi,
                    cur,
                );
                times[i] = x;
            }
            if before - obj(&times, rho) < 1e-15 * (1.0 + before) {
                break;
            }
        }
        rho *= 10.0;
    }
    // projection, then coordinate descent on the constraint set
    if k >= 2 {
        if let Some(pair) = best_pair(&controls, &times, None, t1) {
            let mut trial = times.clone();
            if project(&controls, &mut trial, pair, p0, p1, t1) {
                times = trial;
                for _ in 0..REDUCED_SWEEPS {
                    let before = evaluate(&controls, &times, p0, t1).1;
                    for i in 0..k {
                        let Some(pair) = best_pair(&controls, &times, Some(i), t1) else { continue };
                        let lo = if i == 0 { 0.0 } else { times[i - 1] };
                        let hi = if i + 1 == k { t1 } else { times[i + 1] };
                        let base = times.clone();
                        let mut best_times = None;
                        let (x, _) = golden(
                            |s| {
                                let mut tr = base.clone();
                                tr[i] = s;
                                if project(&controls, &mut tr, pair, p0, p1, t1) {
                                    let c = evaluate(&controls, &tr, p0, t1).1;
                                    c
                                } else {
                                    f64::INFINITY
                                }
                            },
                            lo,
                            hi,
                            base[i],
                        );
                        let mut tr = base.clone();
                        tr[i] = x;
                        if project(&controls, &mut tr, pair, p0, p1, t1) {
                            best_times = Some(tr);
                        }
                        if let Some(tr) = best_times {
                            if evaluate(&controls, &tr, p0, t1).1 <= evaluate(&controls, &times, p0, t1).1 {
                                times = tr;
                            }
                        }
                    }
                    if before - evaluate(&controls, &times, p0, t1).1 < 1e-15 * (1.0 + before) {
                        break;
                    }
                }
            }
        }
    }
    let (end, cost) = evaluate(&controls, &times, p0, t1);
    LocalResult {
        controls,
        times,
        cost,
        error: endpoint_error(end, p1),
    }
}

fn random_start(rng: &mut ChaCha8Rng, k: usize, t1: f64) -> Vec<f64> {
    let mut times: Vec<f64> = if rng.random_bool(0.5) {
        (0..k).map(|_| rng.random_range(0.0..t1)).collect()
    } else {
        // clustered toward a random accumulation time
        let centre = rng.random_range(0.0..t1);
        (0..k)
            .map(|_| {
                let r: f64 = rng.random_range(0.0f64..1.0).powi(3);
                (centre - r * centre).clamp(0.0, t1)
            })
            .collect()
    };
    times.sort_by(f64::total_cmp);
    times
}

/// Merges zero-length arcs and equal neighbouring controls.
fn normalize(controls: &[i8], times: &[f64], t1: f64) -> SwitchCandidate {
    let mut out_c: Vec<i8> = Vec::new();
    let mut out_t: Vec<f64> = Vec::new();
    let mut start = 0.0;
    for (i, &u) in controls.iter().enumerate() {
        let end = times.get(i).copied().unwrap_or(t1);
        if end - start <= 0.0 {
            continue;
        }
        if out_c.last() == Some(&u) {
            start = end;
            continue;
        }
        if !out_c.is_empty() {
            out_t.push(start);
        }
        out_c.push(u);
        start = end;
    }
    if out_c.is_empty() {
        out_c.push(controls[0]);
    }
    SwitchCandidate {
        initial_control: out_c[0],
        switch_times: out_t,
        controls: out_c,
    }
}

fn candidate_key(a: &(f64, SwitchCandidate), b: &(f64, SwitchCandidate)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then_with(|| {
        a.1.controls
            .cmp(&b.1.controls)
            .then_with(|| {
                for (x, y) in a.1.switch_times.iter().zip(&b.1.switch_times) {
                    let o = x.total_cmp(y);
                    if o.is_ne() {
                        return o;
                    }
                }
                a.1.switch_times.len().cmp(&b.1.switch_times.len())
            })
    })
}

/// Multi-start switch-time optimization with [`DEFAULT_STARTS`] starts per switch count.
pub fn bangbang_search(
    p0: PhasePoint,
    p1: PhasePoint,
    t1: f64,
    max_switches: usize,
    seed: u64,
) -> Result<BangbangResult> {
    bangbang_search_with(
        p0,
        p1,
        t1,
        &SearchOptions {
            max_switches,
            starts: DEFAULT_STARTS,
            seed,
        },
    )
}

/// For every switch count `k <= max_switches`, runs `starts` random local
/// searches plus one seeded with the best candidate so far, and keeps the
/// cheapest feasible result. The answer for `k` switches is therefore never
/// worse than for fewer switches with the same seed.
pub fn bangbang_search_with(
    p0: PhasePoint,
    p1: PhasePoint,
    t1: f64,
    opts: &SearchOptions,
) -> Result<BangbangResult> {
    if opts.max_switches > MAX_SWITCHES {
        return Err(Error::InvalidInput(format!(
            "max_switches = {} exceeds the desk-scale cap {MAX_SWITCHES}",
            opts.max_switches
        )));
    }
    if !(t1 > 0.0) || !t1.is_finite() {
        return Err(Error::InvalidInput(format!("t1 must be positive, got {t1}")));
    }
    let mut best: Option<(f64, SwitchCandidate, f64)> = None;
    let mut feasible = 0usize;
    for k in 0..=opts.max_switches {
        let pats = patterns(k);
        let mut jobs: Vec<(Vec<i8>, Vec<f64>)> = (0..opts.starts)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    opts.seed ^ ((k as u64) << 32) ^ (i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                let pat = if i < pats.len() {
                    pats[i].clone()
                } else {
                    pats[rng.random_range(0..pats.len())].clone()
                };
                (pat, random_start(&mut rng, k, t1))
            })
            .collect();
        if let Some((_, c, _)) = &best {
            // embed the incumbent by padding with zero-length arcs
            let mut controls = c.controls.clone();
            let mut times = c.switch_times.clone();
            while controls.len() < k + 1 {
                let last = *controls.last().unwrap_or(&0);
                controls.push(if last == 0 { 1 } else { -last });
                times.push(t1);
            }
            if controls.len() == k + 1 {
                jobs.push((controls, times));
            }
        }
        let mut results: Vec<(f64, SwitchCandidate, f64)> = jobs
            .into_par_iter()
            .map(|(pat, times)| local_search(pat, times, p0, p1, t1))
            .filter(|r| r.error < FEASIBILITY_TOL)
            .map(|r| (r.cost, normalize(&r.controls, &r.times, t1), r.error))
            .collect();
        feasible += results.len();
        results.sort_by(|a, b| candidate_key(&(a.0, a.1.clone()), &(b.0, b.1.clone())));
        if let Some(r) = results.into_iter().next() {
            if best.as_ref().is_none_or(|b| r.0 < b.0) {
                best = Some(r);
            }
        }
    }
    let (cost, candidate, error) = best.ok_or(Error::NoFeasibleCandidate {
        tolerance: FEASIBILITY_TOL,
    })?;
    Ok(BangbangResult {
        candidate,
        cost,
        endpoint_error: error,
        max_switches: opts.max_switches,
        starts: opts.starts,
        seed: opts.seed,
        feasible_starts: feasible,
    })
}

/// Trapezoidal transcription on `n` uniform intervals.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollocationGrid {
    pub n: usize,
    pub p0: PhasePoint,
    pub p1: PhasePoint,
    pub t1: f64,
    /// Node values, length `n + 1`, filled in by [`collocation_cost`].
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Final gradient-mapping size `max |u - P(u - grad/L)|`.
    pub stationarity: f64,
}

/// First-order stationarity target.
pub const STATIONARITY_TOL: f64 = 1e-8;
pub const MAX_ITERATIONS: usize = 2_000_000;

impl CollocationGrid {
    pub fn new(n: usize, p0: PhasePoint, p1: PhasePoint, t1: f64) -> Result<Self> {
        if n < 50 {
            return Err(Error::InvalidInput(format!("collocation needs n >= 50, got {n}")));
        }
        if !(t1 > 0.0) || !t1.is_finite() {
            return Err(Error::InvalidInput(format!("t1 must be positive, got {t1}")));
        }
        Ok(CollocationGrid {
            n,
            p0,
            p1,
            t1,
            x: Vec::new(),
            y: Vec::new(),
            u: vec![0.0; n + 1],
            iterations: 0,
            stationarity: f64::INFINITY,
        })
    }

    fn h(&self) -> f64 {
        self.t1 / self.n as f64
    }

    /// `y_{k+1} = y_k + h/2 (u_k + u_{k+1})`, `x_{k+1} = x_k + h/2 (y_k + y_{k+1})`.
    fn states(&self, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let h = self.h();
        let mut x = Vec::with_capacity(self.n + 1);
        let mut y = Vec::with_capacity(self.n + 1);
        let (mut xk, mut yk) = (self.p0.x, self.p0.y);
        x.push(xk);
        y.push(yk);
        for k in 0..self.n {
            let yn = yk + 0.5 * h * (u[k] + u[k + 1]);
            xk += 0.5 * h * (yk + yn);
            yk = yn;
            x.push(xk);
            y.push(yk);
        }
        (x, y)
    }

    fn weight(&self, k: usize) -> f64 {
        if k == 0 || k == self.n {
            0.5
        } else {
            1.0
        }
    }

    /// Discrete cost `h sum' x_k^2 / 2`.
    fn cost_of(&self, x: &[f64]) -> f64 {
        let h = self.h();
        x.iter()
            .enumerate()
            .map(|(k, v)| 0.5 * h * self.weight(k) * v * v)
            .sum()
    }

    /// Adjoint gradient of the cost with respect to the node controls.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let h = self.h();
        let (bx, by) = (0.25 * h * h, 0.5 * h);
        let n = self.n;
        // lam[k] = d cost / d state_k, including all later nodes
        let mut lam = vec![(0.0, 0.0); n + 1];
        lam[n] = (h * self.weight(n) * x[n], 0.0);
        for k in (0..n).rev() {
            let (lx, ly) = lam[k + 1];
            lam[k] = (h * self.weight(k) * x[k] + lx, h * lx + ly);
        }
        let mut g = vec![0.0; n + 1];
        for k in 0..n {
            let (lx, ly) = lam[k + 1];
            let b = bx * lx + by * ly;
            g[k] += b;
            g[k + 1] += b;
        }
        g
    }

    /// Gradient-mapping residual `max |u - P(u - step grad)|`.
    fn stationarity_of(
        &self,
        u: &[f64],
        ax: &[f64],
        ay: &[f64],
        b: (f64, f64),
        step: f64,
        nu: &mut (f64, f64),
    ) -> Result<f64> {
        let (x, _) = self.states(u);
        let g = self.gradient(&x);
        let trial: Vec<f64> = u.iter().zip(&g).map(|(a, d)| a - step * d).collect();
        let p = project_box_affine(&trial, ax, ay, b, nu)
            .ok_or_else(|| Error::Convergence("projection onto the feasible set failed".into()))?;
        Ok(p.iter().zip(u).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max))
    }

    /// Rows of the affine map `u -> (x_n, y_n)`.
    fn endpoint_rows(&self) -> (Vec<f64>, Vec<f64>, f64, f64) {
        let h = self.h();
        let n = self.n;
        let mut ax = vec![0.0; n + 1];
        let mut ay = vec![0.0; n + 1];
        for k in 0..n {
            let m = (n - 1 - k) as f64;
            let cx = 0.25 * h * h + m * h * 0.5 * h;
            let cy = 0.5 * h;
            ax[k] += cx;
            ax[k + 1] += cx;
            ay[k] += cy;
            ay[k + 1] += cy;
        }
        let t = self.t1;
        let bx = self.p1.x - (self.p0.x + self.p0.y * t);
        let by = self.p1.y - self.p0.y;
        (ax, ay, bx, by)
    }
}

/// Euclidean projection onto `{|u| <= 1, A u = b}` for a two-row `A`,
/// by Newton's method on the concave dual.
fn project_box_affine(v: &[f64], ax: &[f64], ay: &[f64], b: (f64, f64), nu: &mut (f64, f64)) -> Option<Vec<f64>> {
    let primal = |nu: (f64, f64)| -> Vec<f64> {
        v.iter()
            .zip(ax.iter().zip(ay))
            .map(|(vi, (a, c))| (vi - a * nu.0 - c * nu.1).clamp(-1.0, 1.0))
            .collect()
    };
    let dual = |u: &[f64], nu: (f64, f64)| -> (f64, f64, f64) {
        let mut q = 0.0;
        let (mut rx, mut ry) = (-b.0, -b.1);
        for ((ui, vi), (a, c)) in u.iter().zip(v).zip(ax.iter().zip(ay)) {
            q += 0.5 * (ui - vi) * (ui - vi);
            rx += a * ui;
            ry += c * ui;
        }
        (q + nu.0 * rx + nu.1 * ry, rx, ry)
    };
    let scale = 1.0 + b.0.abs() + b.1.abs();
    let mut u = primal(*nu);
    let (mut g, mut rx, mut ry) = dual(&u, *nu);
    for _ in 0..100 {
        if rx.abs().max(ry.abs()) < 1e-13 * scale {
            return Some(u);
        }
        // generalized Hessian of the dual is -A_F A_F^T on the unclipped set
        let (mut hxx, mut hxy, mut hyy) = (0.0, 0.0, 0.0);
        for ((vi, a), c) in v.iter().zip(ax).zip(ay) {
            let w = vi - a * nu.0 - c * nu.1;
            if w.abs() < 1.0 {
                hxx += a * a;
                hxy += a * c;
                hyy += c * c;
            }
        }
        let reg = 1e-14 * (1.0 + hxx + hyy);
        let (hxx, hyy) = (hxx + reg, hyy + reg);
        let det = hxx * hyy - hxy * hxy;
        let (mut dx, mut dy) = if det > 1e-30 {
            ((hyy * rx - hxy * ry) / det, (-hxy * rx + hxx * ry) / det)
        } else {
            (rx, ry)
        };
        let mut accepted = false;
        for _ in 0..60 {
            let trial = (nu.0 + dx, nu.1 + dy);
            let ut = primal(trial);
            let (gt, rxt, ryt) = dual(&ut, trial);
            let shrinks = rxt.abs().max(ryt.abs()) < 0.9 * rx.abs().max(ry.abs());
            if gt >= g - 1e-15 * g.abs().max(1.0) || shrinks {
                *nu = trial;
                u = ut;
                g = gt;
                rx = rxt;
                ry = ryt;
                accepted = true;
                break;
            }
            dx *= 0.5;
            dy *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (rx.abs().max(ry.abs()) < 1e-9 * scale).then_some(u)
}

/// Solves the transcription by FISTA with adaptive restart, starting from
/// the current `grid.u`, and returns the discrete cost.
pub fn collocation_cost(grid: &mut CollocationGrid) -> Result<f64> {
    collocation_cost_with(grid, MAX_ITERATIONS)
}

pub fn collocation_cost_with(grid: &mut CollocationGrid, max_iterations: usize) -> Result<f64> {
    let n = grid.n;
    let (ax, ay, bx, by) = grid.endpoint_rows();
    if grid.u.len() != n + 1 {
        grid.u = vec![0.0; n + 1];
    }
    // Lipschitz constant of the gradient by power iteration
    let mut z: Vec<f64> = (0..=n).map(|k| 1.0 + (k % 7) as f64).collect();
    let zero_grid = CollocationGrid {
        p0: PhasePoint::ORIGIN,
        ..grid.clone()
    };
    let mut lip = 0.0;
    for _ in 0..60 {
        let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
        z.iter_mut().for_each(|v| *v /= norm);
        let (xz, _) = zero_grid.states(&z);
        let gz = zero_grid.gradient(&xz);
        lip = gz.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        z = gz;
    }
    let step = 1.0 / (1.05 * lip.max(1e-300));
    let mut nu = (0.0, 0.0);
    let mut u = project_box_affine(&grid.u, &ax, &ay, (bx, by), &mut nu)
        .ok_or_else(|| Error::InvalidInput("endpoint constraints infeasible on this grid".into()))?;
    let mut yv = u.clone();
    let mut t = 1.0f64;
    let mut nu_check = (0.0, 0.0);
    for it in 0..max_iterations {
        let (xs, _) = grid.states(&yv);
        let g = grid.gradient(&xs);
        let trial: Vec<f64> = yv.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let Some(un) = project_box_affine(&trial, &ax, &ay, (bx, by), &mut nu) else {
            return Err(Error::Convergence("projection onto the feasible set failed".into()));
        };
        // gradient-based adaptive restart
        let uphill: f64 = yv.iter().zip(&un).zip(&u).map(|((y, a), b)| (y - a) * (a - b)).sum();
        let tn = if uphill > 0.0 { 1.0 } else { 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt()) };
        let beta = if uphill > 0.0 { 0.0 } else { (t - 1.0) / tn };
        yv = un.iter().zip(&u).map(|(a, b)| a + beta * (a - b)).collect();
        u = un;
        t = tn;
        if it % 25 == 0 {
            let stat = grid.stationarity_of(&u, &ax, &ay, (bx, by), step, &mut nu_check)?;
            if stat < STATIONARITY_TOL {
                let (x, y) = grid.states(&u);
                let cost = grid.cost_of(&x);
                grid.x = x;
                grid.y = y;
                grid.u = u;
                grid.iterations = it + 1;
                grid.stationarity = stat;
                return Ok(cost);
            }
        }
    }
    grid.u = u;
    Err(Error::MaxIterations(max_iterations))
}

/// Solves on `n/8, n/4, n/2, n` nodes, each warm-started from the previous
/// grid by linear interpolation.
pub fn collocation_refined(n: usize, p0: PhasePoint, p1: PhasePoint, t1: f64) -> Result<CollocationGrid> {
    let mut sizes = vec![n];
    while sizes.last().is_some_and(|&m| m / 2 >= 50) && sizes.len() < 4 {
        let m = sizes.last().unwrap() / 2;
        sizes.push(m);
    }
    sizes.reverse();
    let mut prev: Option<CollocationGrid> = None;
    for m in sizes {
        let mut g = CollocationGrid::new(m, p0, p1, t1)?;
        if let Some(p) = &prev {
            g.u = (0..=m)
                .map(|k| {
                    let s = k as f64 * p.n as f64 / m as f64;
                    let i = (s.floor() as usize).min(p.n - 1);
                    let f = s - i as f64;
                    (1.0 - f) * p.u[i] + f * p.u[i + 1]
                })
                .collect();
        }
        collocation_cost(&mut g)?;
        prev = Some(g);
    }
    Ok(prev.expect("at least one grid"))
}

/// Discrete cost stored on a solved grid.
pub fn grid_cost(grid: &CollocationGrid) -> f64 {
    grid.cost_of(&grid.x)
}

/// `{analytic_cost, oracle_cost, gap, n_or_switches, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub analytic_cost: f64,
    pub oracle_cost: f64,
    pub gap: f64,
    pub n_or_switches: usize,
    pub seed: Option<u64>,
}

impl ComparisonReport {
    pub fn new(analytic_cost: f64, oracle_cost: f64, n_or_switches: usize, seed: Option<u64>) -> Self {
        ComparisonReport {
            analytic_cost,
            oracle_cost,
            gap: oracle_cost - analytic_cost,
            n_or_switches,
            seed,
        }
    }
}
