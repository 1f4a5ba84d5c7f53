//! Euclidean projection onto a velocity-constrained chain of points.
//!
//! A chain is a fixed anchor followed by `free` movable points and an
//! optional fixed terminal. Consecutive points must stay within `radius`
//! of each other under the chain's norm. The step constraints are split
//! into even and odd edges; within each group the edges share no points,
//! so each group has a closed-form projection, and Dykstra's method
//! alternates between the two groups.
//!
//! Under the Euclidean norm the projection is instead computed exactly by a
//! projected Newton method on the edge multipliers: for fixed multipliers
//! the optimal points solve one tridiagonal system, so every Newton step
//! costs a handful of linear solves. This stays fast on nearly taut chains,
//! where Dykstra's method crawls.
//!
//! Dykstra increments and Newton multipliers are kept per edge in
//! [`ProjectionState`] and can be reused across calls with a different input
//! point.

use crate::geometry::{NormKind, Vec2};

/// Relative slack below which a pinned chain counts as exactly taut.
pub(crate) const TAUT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub(crate) struct Chain {
    pub anchor: Vec2,
    pub terminal: Option<Vec2>,
    pub free: usize,
    pub radius: f64,
    pub norm: NormKind,
}

/// Warm-start data per edge: Dykstra increments `[low end, high end]` and
/// Newton multipliers.
#[derive(Debug, Clone, Default)]
pub(crate) struct ProjectionState {
    inc: Vec<[Vec2; 2]>,
    mult: Vec<f64>,
}

impl ProjectionState {
    /// Forgets the first `k` edges, for when the anchor moves `k` slots on.
    pub fn drop_front(&mut self, k: usize) {
        self.inc.drain(..k.min(self.inc.len()));
        self.mult.drain(..k.min(self.mult.len()));
    }
}

#[derive(Debug, Clone)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) struct Projection {
    pub points: Vec<Vec2>,
    pub sweeps: usize,
    pub converged: bool,
}

/// Projection of a displacement onto the radius-`r` ball of `norm`.
pub(crate) fn project_step(d: Vec2, r: f64, norm: NormKind) -> Vec2 {
    match norm {
        NormKind::Euclidean => {
            let n = d.norm();
            if n <= r {
                d
            } else {
                d * (r / n)
            }
        }
        NormKind::Manhattan => {
            let (ax, ay) = (d.x.abs(), d.y.abs());
            if ax + ay <= r {
                return d;
            }
            let theta = 0.5 * (ax + ay - r);
            if ax > theta && ay > theta {
                Vec2::new((ax - theta).copysign(d.x), (ay - theta).copysign(d.y))
            } else if ax >= ay {
                Vec2::new(r.copysign(d.x), 0.0)
            } else {
                Vec2::new(0.0, r.copysign(d.y))
            }
        }
    }
}

impl Chain {
    pub fn edges(&self) -> usize {
        self.free + usize::from(self.terminal.is_some())
    }

    /// Distance from anchor to terminal over the total reach of the chain.
    pub fn tension(&self) -> Option<f64> {
        self.terminal.map(|t| self.norm.length(t - self.anchor) / (self.radius * (self.free + 1) as f64))
    }

    /// Evenly spaced points from anchor to terminal.
    fn straight(&self, terminal: Vec2) -> Vec<Vec2> {
        let n = self.free + 1;
        (1..=self.free).map(|i| self.anchor.lerp(terminal, i as f64 / n as f64)).collect()
    }

    /// Feasible starting point: the straight line to the terminal, or a
    /// chain parked at the anchor.
    pub fn initial(&self) -> Vec<Vec2> {
        match self.terminal {
            Some(t) => self.straight(t),
            None => vec![self.anchor; self.free],
        }
    }

    /// Largest step-length excess over the radius (0 when feasible).
    pub fn max_violation(&self, points: &[Vec2]) -> f64 {
        let mut prev = self.anchor;
        let mut worst = 0.0f64;
        for p in points.iter().copied().chain(self.terminal) {
            worst = worst.max(self.norm.length(p - prev) - self.radius);
            prev = p;
        }
        worst
    }

    /// Projection of `z` onto the chain. `tol` is an absolute distance
    /// tolerance; `max_sweeps` caps Dykstra sweeps for the Manhattan norm.
    pub fn project(&self, z: &[Vec2], state: &mut ProjectionState, tol: f64, max_sweeps: usize) -> Projection {
        debug_assert_eq!(z.len(), self.free);
        if self.free == 0 {
            return Projection { points: Vec::new(), sweeps: 0, converged: true };
        }
        match self.norm {
            NormKind::Euclidean => {
                if let (Some(t), Some(tension)) = (self.terminal, self.tension()) {
                    // A taut Euclidean chain has exactly one feasible point.
                    if tension >= 1.0 - TAUT_SLACK {
                        state.mult.clear();
                        return Projection { points: self.straight(t), sweeps: 0, converged: true };
                    }
                }
                self.project_newton(z, &mut state.mult, tol, NEWTON_MAX_ITER)
            }
            NormKind::Manhattan => self.project_dykstra(z, state, tol, max_sweeps),
        }
    }

    pub fn project_dykstra(&self, z: &[Vec2], state: &mut ProjectionState, tol: f64, max_sweeps: usize) -> Projection {
        let edges = self.edges();
        if state.inc.len() != edges {
            state.inc.resize(edges, [Vec2::ZERO; 2]);
        }

        let mut y = vec![Vec2::ZERO; self.free];
        let mut x = vec![Vec2::ZERO; self.free];
        let mut prev = z.to_vec();
        for sweep in 1..=max_sweeps {
            self.half_sweep(z, &mut state.inc, 0, &mut y);
            self.half_sweep(z, &mut state.inc, 1, &mut x);
            let mut gap = 0.0f64;
            let mut change = 0.0f64;
            for i in 0..self.free {
                gap = gap.max((x[i] - y[i]).norm());
                change = change.max((x[i] - prev[i]).norm());
            }
            if gap <= tol && change <= tol {
                return Projection { points: x, sweeps: sweep, converged: true };
            }
            prev.copy_from_slice(&x);
        }
        Projection { points: x, sweeps: max_sweeps, converged: false }
    }

    /// Free-point index of chain position `p` (anchor is 0, terminal `free + 1`).
    fn free_index(&self, p: usize) -> Option<usize> {
        (1..=self.free).contains(&p).then(|| p - 1)
    }

    fn position(&self, x: &[Vec2], p: usize) -> Vec2 {
        match self.free_index(p) {
            Some(i) => x[i],
            None if p == 0 => self.anchor,
            None => self.terminal.expect("position past the free points needs a terminal"),
        }
    }

    /// Minimiser of the Lagrangian for fixed multipliers, with its
    /// tridiagonal factorisation.
    fn inner_solve(&self, z: &[Vec2], mult: &[f64]) -> (Vec<Vec2>, Tridiagonal) {
        let n = self.free;
        let edges = mult.len();
        let diag: Vec<f64> = (0..n).map(|i| 1.0 + mult[i] + if i + 1 < edges { mult[i + 1] } else { 0.0 }).collect();
        let off: Vec<f64> = (0..n.saturating_sub(1)).map(|i| -mult[i + 1]).collect();
        let tri = Tridiagonal::factor(&diag, &off);
        let mut x = z.to_vec();
        x[0] += self.anchor * mult[0];
        if let Some(t) = self.terminal {
            x[n - 1] += t * mult[n];
        }
        tri.solve(&mut x);
        (x, tri)
    }

    /// Dual value and per-edge constraint values `(|step|^2 - r^2) / 2`.
    fn dual(&self, z: &[Vec2], x: &[Vec2], mult: &[f64]) -> (f64, Vec<f64>, Vec<Vec2>) {
        let r2 = self.radius * self.radius;
        let steps: Vec<Vec2> = (0..mult.len()).map(|k| self.position(x, k + 1) - self.position(x, k)).collect();
        let cons: Vec<f64> = steps.iter().map(|d| 0.5 * (d.norm_sq() - r2)).collect();
        let value = 0.5 * x.iter().zip(z).map(|(a, b)| (*a - *b).norm_sq()).sum::<f64>()
            + mult.iter().zip(&cons).map(|(m, c)| m * c).sum::<f64>();
        (value, cons, steps)
    }

    pub fn project_newton(&self, z: &[Vec2], mult: &mut Vec<f64>, tol: f64, max_iter: usize) -> Projection {
        let n = self.free;
        let edges = self.edges();
        if mult.len() != edges {
            mult.clear();
            mult.resize(edges, 0.0);
        }
        // A constraint value of c moves the step length by about c / r.
        let cons_tol = tol * self.radius;
        let (mut x, mut tri) = self.inner_solve(z, mult);
        let (mut value, mut cons, mut steps) = self.dual(z, &x, mult);
        for iter in 1..=max_iter {
            let free_set: Vec<usize> = (0..edges).filter(|&k| mult[k] > 0.0 || cons[k] > 0.0).collect();
            let worst = residual(mult, &cons);
            if worst <= cons_tol {
                return Projection { points: x, sweeps: iter - 1, converged: true };
            }

            // Curvature of the dual on the free edges: S^T A^{-1} S, where
            // column k of S is the gradient of edge k's constraint in x.
            let f = free_set.len();
            let mut columns = Vec::with_capacity(f);
            for &k in &free_set {
                let mut u = vec![Vec2::ZERO; n];
                if let Some(i) = self.free_index(k) {
                    u[i] -= steps[k];
                }
                if let Some(i) = self.free_index(k + 1) {
                    u[i] += steps[k];
                }
                tri.solve(&mut u);
                columns.push(u);
            }
            let mut hess = vec![0.0; f * f];
            for (a, &j) in free_set.iter().enumerate() {
                for (b, w) in columns.iter().enumerate() {
                    let hi = self.free_index(j + 1).map_or(Vec2::ZERO, |i| w[i]);
                    let lo = self.free_index(j).map_or(Vec2::ZERO, |i| w[i]);
                    hess[a * f + b] = steps[j].dot(hi - lo);
                }
            }
            let grad: Vec<f64> = free_set.iter().map(|&k| cons[k]).collect();
            let Some(dir) = solve_regularised(&mut hess, &grad, f) else {
                break;
            };

            let mut alpha = 1.0;
            let mut accepted = false;
            let mut trial = mult.clone();
            for _ in 0..60 {
                for k in 0..edges {
                    trial[k] = if mult[k] == 0.0 && cons[k] <= 0.0 { 0.0 } else { mult[k] };
                }
                for (a, &k) in free_set.iter().enumerate() {
                    trial[k] = (mult[k] + alpha * dir[a]).max(0.0);
                }
                let (tx, ttri) = self.inner_solve(z, &trial);
                let (tv, tc, ts) = self.dual(z, &tx, &trial);
                let gain: f64 = (0..edges).map(|k| cons[k] * (trial[k] - mult[k])).sum();
                // Close to the optimum the dual value stalls at rounding
                // level; a smaller constraint residual then decides.
                let noise = 1e-13 * (value.abs() + 1.0);
                let sufficient = tv >= value + 1e-4 * gain;
                let refined = tv >= value - noise && residual(&trial, &tc) < worst;
                if sufficient || refined {
                    mult.copy_from_slice(&trial);
                    (x, tri, value, cons, steps) = (tx, ttri, tv, tc, ts);
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Projection { points: x, sweeps: max_iter, converged: residual(mult, &cons) <= cons_tol }
    }

    /// Projects `z` minus the other group's increments onto the edges of one
    /// parity, writing the result into `out` and refreshing that group's
    /// increments.
    fn half_sweep(&self, z: &[Vec2], inc: &mut [[Vec2; 2]], parity: usize, out: &mut [Vec2]) {
        let n = self.free;
        let edges = inc.len();
        // Free point i (1-based) is the high end of edge i-1 and the low end
        // of edge i; exactly one of the two has the other parity.
        for i in 1..=n {
            let (edge, end) = if (i - 1) % 2 != parity { (i - 1, 1) } else { (i, 0) };
            let shift = if edge < edges { inc[edge][end] } else { Vec2::ZERO };
            out[i - 1] = z[i - 1] - shift;
        }
        let r = self.radius;
        let norm = self.norm;
        let mut e = parity;
        while e < edges {
            let lo_free = e >= 1;
            let hi_free = e < n;
            match (lo_free, hi_free) {
                (true, true) => {
                    let (a, b) = (out[e - 1], out[e]);
                    let d = b - a;
                    if norm.length(d) > r {
                        let mid = (a + b) * 0.5;
                        let half = project_step(d, r, norm) * 0.5;
                        out[e - 1] = mid - half;
                        out[e] = mid + half;
                    }
                    inc[e] = [a - out[e - 1], b - out[e]];
                }
                (false, true) => {
                    let b = out[e];
                    out[e] = self.anchor + project_step(b - self.anchor, r, norm);
                    inc[e] = [Vec2::ZERO, b - out[e]];
                }
                (true, false) => {
                    let t = self.terminal.expect("edge past the last free point needs a terminal");
                    let a = out[e - 1];
                    out[e - 1] = t + project_step(a - t, r, norm);
                    inc[e] = [a - out[e - 1], Vec2::ZERO];
                }
                (false, false) => {}
            }
            e += 2;
        }
    }
}

const NEWTON_MAX_ITER: usize = 200;

/// Largest violation of the dual optimality conditions: active edges must
/// be tight, inactive edges feasible.
fn residual(mult: &[f64], cons: &[f64]) -> f64 {
    mult.iter().zip(cons).map(|(m, c)| if *m > 0.0 { c.abs() } else { c.max(0.0) }).fold(0.0, f64::max)
}

/// LDL-free Thomas factorisation of a symmetric positive definite
/// tridiagonal matrix.
struct Tridiagonal {
    /// Super-diagonal divided by the running pivot.
    upper: Vec<f64>,
    pivot: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    fn factor(diag: &[f64], off: &[f64]) -> Self {
        let n = diag.len();
        let mut upper = vec![0.0; n];
        let mut pivot = vec![0.0; n];
        for i in 0..n {
            let below = if i > 0 { off[i - 1] * upper[i - 1] } else { 0.0 };
            pivot[i] = diag[i] - below;
            if i + 1 < n {
                upper[i] = off[i] / pivot[i];
            }
        }
        Self { upper, pivot, off: off.to_vec() }
    }

    fn solve(&self, rhs: &mut [Vec2]) {
        let n = rhs.len();
        for i in 0..n {
            if i > 0 {
                let prev = rhs[i - 1];
                rhs[i] -= prev * self.off[i - 1];
            }
            rhs[i] = rhs[i] / self.pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            let next = rhs[i + 1];
            rhs[i] -= next * self.upper[i];
        }
    }
}

/// Solves `(H + tau I) d = g` for a symmetric positive semidefinite `H`
/// stored row-major, increasing `tau` until the Cholesky factor exists.
fn solve_regularised(hess: &mut [f64], grad: &[f64], n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| hess[i * n + i]).fold(0.0, f64::max).max(1e-300);
    let base = hess.to_vec();
    let mut tau = 1e-14 * scale;
    for _ in 0..30 {
        hess.copy_from_slice(&base);
        for i in 0..n {
            hess[i * n + i] += tau;
        }
        if cholesky_in_place(hess, n) {
            let mut d = grad.to_vec();
            for i in 0..n {
                let s: f64 = (0..i).map(|k| hess[i * n + k] * d[k]).sum();
                d[i] = (d[i] - s) / hess[i * n + i];
            }
            for i in (0..n).rev() {
                let s: f64 = (i + 1..n).map(|k| hess[k * n + i] * d[k]).sum();
                d[i] = (d[i] - s) / hess[i * n + i];
            }
            return Some(d);
        }
        tau = (tau * 100.0).max(1e-12 * scale);
    }
    None
}

fn cholesky_in_place(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let s: f64 = (0..j).map(|k| a[j * n + k] * a[j * n + k]).sum();
        let d = a[j * n + j] - s;
        if d.is_nan() || d <= 0.0 {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let s: f64 = (0..j).map(|k| a[i * n + k] * a[j * n + k]).sum();
            a[i * n + j] = (a[i * n + j] - s) / d;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sq_dist(a: &[Vec2], b: &[Vec2]) -> f64 {
        a.iter().zip(b).map(|(p, q)| (*p - *q).norm_sq()).sum()
    }

    #[test]
    fn manhattan_step_projection() {
        let r = 1.0;
        let p = project_step(Vec2::new(0.5, 0.25), r, NormKind::Manhattan);
        assert_eq!(p, Vec2::new(0.5, 0.25));
        let p = project_step(Vec2::new(2.0, 1.0), r, NormKind::Manhattan);
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 0.0, epsilon = 1e-15);
        let p = project_step(Vec2::new(-1.0, 0.8), r, NormKind::Manhattan);
        assert_abs_diff_eq!(p.x, -0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y, 0.4, epsilon = 1e-15);
        // projection onto a diamond beats every vertex and a dense edge sample
        let d = Vec2::new(-1.0, 0.8);
        let best = (d - p).norm_sq();
        for k in 0..=1000 {
            let s = k as f64 / 1000.0;
            let q = Vec2::new(-s, 1.0 - s);
            assert!((d - q).norm_sq() >= best - 1e-12);
        }
    }

    #[test]
    fn feasible_input_is_fixed_point() {
        let chain = Chain {
            anchor: Vec2::ZERO,
            terminal: Some(Vec2::new(3.0, 0.0)),
            free: 2,
            radius: 1.5,
            norm: NormKind::Euclidean,
        };
        let z = vec![Vec2::new(1.0, 0.5), Vec2::new(2.0, 0.5)];
        let p = chain.project(&z, &mut ProjectionState::default(), 1e-12, 1000);
        assert!(p.converged);
        assert!(sq_dist(&p.points, &z) < 1e-20);
    }

    #[test]
    fn taut_chain_is_straight() {
        let chain = Chain {
            anchor: Vec2::ZERO,
            terminal: Some(Vec2::new(4.0, 0.0)),
            free: 3,
            radius: 1.0,
            norm: NormKind::Euclidean,
        };
        let z = vec![Vec2::new(0.0, 5.0); 3];
        let p = chain.project(&z, &mut ProjectionState::default(), 1e-12, 10);
        assert_eq!(p.points, vec![Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(3.0, 0.0)]);
    }

    /// The result must be feasible and no farther from `z` than any other
    /// feasible chain: check against random feasible perturbations, which
    /// cannot improve on a true projection by the variational inequality
    /// `<z - p, q - p> <= 0`.
    #[test]
    fn variational_inequality_on_random_chains() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for norm in [NormKind::Euclidean, NormKind::Manhattan] {
            for _ in 0..40 {
                let free = rng.gen_range(1..8);
                let radius = rng.gen_range(0.5..2.0);
                let anchor = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
                let terminal = if rng.gen_bool(0.5) {
                    let reach = radius * (free + 1) as f64 * rng.gen_range(0.2..0.95);
                    let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                    let dir = match norm {
                        NormKind::Euclidean => Vec2::new(ang.cos(), ang.sin()),
                        NormKind::Manhattan => {
                            let v = Vec2::new(ang.cos(), ang.sin());
                            v / v.norm1()
                        }
                    };
                    Some(anchor + dir * reach)
                } else {
                    None
                };
                let chain = Chain { anchor, terminal, free, radius, norm };
                let z: Vec<Vec2> =
                    (0..free).map(|_| Vec2::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0))).collect();
                let p = chain.project(&z, &mut ProjectionState::default(), 1e-12, 2_000_000);
                assert!(p.converged, "no convergence for {chain:?}");
                assert!(chain.max_violation(&p.points) < 1e-9);
                // candidates: convex combinations with other feasible chains
                let others = [chain.initial(), {
                    let mut s = ProjectionState::default();
                    let zz: Vec<Vec2> = z.iter().map(|q| *q * -1.0).collect();
                    chain.project(&zz, &mut s, 1e-12, 2_000_000).points
                }];
                for q in others {
                    let vi: f64 =
                        z.iter().zip(&p.points).zip(&q).map(|((zi, pi), qi)| (*zi - *pi).dot(*qi - *pi)).sum();
                    assert!(vi <= 1e-7, "variational inequality violated: {vi}");
                }
            }
        }
    }

    #[test]
    fn newton_agrees_with_dykstra() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..60 {
            let free = rng.gen_range(1..12);
            let radius = rng.gen_range(0.5..2.0);
            let anchor = Vec2::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let terminal = rng.gen_bool(0.7).then(|| {
                let reach = radius * (free + 1) as f64 * rng.gen_range(0.2..0.999);
                let ang: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                anchor + Vec2::new(ang.cos(), ang.sin()) * reach
            });
            let chain = Chain { anchor, terminal, free, radius, norm: NormKind::Euclidean };
            let z: Vec<Vec2> =
                (0..free).map(|_| Vec2::new(rng.gen_range(-8.0..8.0), rng.gen_range(-8.0..8.0))).collect();
            let newton = chain.project_newton(&z, &mut Vec::new(), 1e-13, 200);
            let dykstra = chain.project_dykstra(&z, &mut ProjectionState::default(), 1e-13, 5_000_000);
            assert!(newton.converged && dykstra.converged);
            assert!(sq_dist(&newton.points, &dykstra.points).sqrt() < 1e-8, "{chain:?}");
            assert!(chain.max_violation(&newton.points) < 1e-10);
        }
    }

    #[test]
    fn newton_handles_nearly_taut_chains() {
        let free = 40;
        let chain = Chain {
            anchor: Vec2::ZERO,
            terminal: Some(Vec2::new((free + 1) as f64 * (1.0 - 1e-7), 0.0)),
            free,
            radius: 1.0,
            norm: NormKind::Euclidean,
        };
        let z = vec![Vec2::new(10.0, 30.0); free];
        let p = chain.project_newton(&z, &mut Vec::new(), 1e-12, 200);
        assert!(p.converged);
        assert!(p.sweeps < 200);
        assert!(chain.max_violation(&p.points) < 1e-11);
        // every interior point lies within the thin feasible lens
        for (i, q) in p.points.iter().enumerate() {
            assert!((q.x - (i + 1) as f64).abs() < 1e-2 && q.y.abs() < 1e-1);
        }
    }

    #[test]
    fn warm_start_after_shift_still_converges() {
        let chain = Chain {
            anchor: Vec2::ZERO,
            terminal: Some(Vec2::new(6.0, 0.0)),
            free: 7,
            radius: 1.0,
            norm: NormKind::Euclidean,
        };
        let z = vec![Vec2::new(3.0, 4.0); 7];
        let mut state = ProjectionState::default();
        let first = chain.project(&z, &mut state, 1e-12, 1_000_000);
        assert!(first.converged);

        let shifted = Chain { anchor: first.points[0], free: 6, ..chain.clone() };
        state.drop_front(1);
        let warm = shifted.project(&z[1..], &mut state, 1e-12, 1_000_000);
        let cold = shifted.project(&z[1..], &mut ProjectionState::default(), 1e-12, 1_000_000);
        assert!(warm.converged && cold.converged);
        assert!(sq_dist(&warm.points, &cold.points) < 1e-16);
        assert!(warm.sweeps <= cold.sweeps);
    }
}
