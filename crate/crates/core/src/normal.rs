//! Grid backward induction for a Normal mean with known variance.
//!
//! With `Z_k | θ ~ N(θ, σ²)` and `θ ~ N(0, σ₀²)` the posterior variance
//! `ψ_n²` is deterministic, so the posterior mean `S_n` is the only state.
//! `S_{n+1} | S_n` is Gaussian with mean `S_n`, and the Bellman recursion is
//! swept on a fixed grid with truncated, renormalised Gaussian weights.

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::RngStream;
use crate::error::{Error, Result};

/// Transition kernels are cut at this many standard deviations.
pub const KERNEL_TRUNCATION_SDS: f64 = 8.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalDesignSpec {
    /// Observation variance `σ²`.
    pub sigma2: f64,
    /// Prior variance `σ₀²`.
    pub sigma0_2: f64,
    /// Cost per patient.
    pub cost: f64,
    pub horizon: u32,
    pub grid_min: f64,
    pub grid_max: f64,
    pub grid_points: usize,
}

impl Default for NormalDesignSpec {
    fn default() -> Self {
        Self { sigma2: 4.0, sigma0_2: 1.0, cost: 0.005, horizon: 50, grid_min: -6.0, grid_max: 6.0, grid_points: 4001 }
    }
}

impl NormalDesignSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad(format!("sigma2 must be positive, got {}", self.sigma2));
        }
        if !(self.sigma0_2 > 0.0 && self.sigma0_2.is_finite()) {
            return bad(format!("sigma0_2 must be positive, got {}", self.sigma0_2));
        }
        if !(self.cost >= 0.0 && self.cost.is_finite()) {
            return bad(format!("cost must be finite and >= 0, got {}", self.cost));
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".into());
        }
        if !(self.grid_min < 0.0 && self.grid_max > 0.0 && self.grid_min.is_finite() && self.grid_max.is_finite()) {
            return bad(format!("grid [{}, {}] must straddle 0", self.grid_min, self.grid_max));
        }
        if self.grid_points < 101 {
            return bad(format!("grid_points must be at least 101, got {}", self.grid_points));
        }
        if !(self.spacing() > 0.0) {
            return bad("grid spacing is not positive".into());
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.grid_max - self.grid_min) / (self.grid_points - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let dx = self.spacing();
        (0..self.grid_points).map(|j| self.grid_min + j as f64 * dx).collect()
    }
}

/// `ψ_n²` for `n = 0..=T`.
pub fn variance_schedule(spec: &NormalDesignSpec) -> Vec<f64> {
    let mut psi2 = Vec::with_capacity(spec.horizon as usize + 1);
    psi2.push(spec.sigma0_2);
    for n in 1..=spec.horizon as usize {
        let prev = psi2[n - 1];
        psi2.push(spec.sigma2 * prev / (spec.sigma2 + prev));
    }
    psi2
}

/// Standard deviation of `S_{n+1} − S_n`.
pub fn transition_std(spec: &NormalDesignSpec, n: u32) -> Result<f64> {
    if n >= spec.horizon {
        return Err(Error::Domain(format!("no transition out of stage {n} with horizon {}", spec.horizon)));
    }
    let psi2 = variance_schedule(spec)[n as usize];
    Ok((psi2 * psi2 / (spec.sigma2 + psi2)).sqrt())
}

/// Loss of stopping now: `min(0, −s)`.
#[inline]
pub fn stop_loss(s: f64) -> f64 {
    (-s).min(0.0)
}

/// Truncated Gaussian kernel on the grid, for one stage.
#[derive(Debug, Clone)]
pub struct StageKernel {
    /// `φ(k·Δs/τ)` for `k = 0..=half_width` (unnormalised).
    taps: Vec<f64>,
}

impl StageKernel {
    pub fn new(tau: f64, dx: f64) -> Self {
        let half_width = (KERNEL_TRUNCATION_SDS * tau / dx).floor() as usize;
        let taps = (0..=half_width)
            .map(|k| {
                let u = k as f64 * dx / tau;
                (-0.5 * u * u).exp()
            })
            .collect();
        Self { taps }
    }

    pub fn half_width(&self) -> usize {
        self.taps.len() - 1
    }

    /// Normalised weights `w_{ij}` for source index `j`, as `(first i, weights)`.
    pub fn row(&self, j: usize, g: usize) -> (usize, Vec<f64>) {
        let m = self.half_width();
        let lo = j.saturating_sub(m);
        let hi = (j + m).min(g - 1);
        let mut w: Vec<f64> = (lo..=hi).map(|i| self.taps[i.abs_diff(j)]).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        (lo, w)
    }

    fn expect(&self, j: usize, next: &[f64]) -> f64 {
        let m = self.half_width();
        let lo = j.saturating_sub(m);
        let hi = (j + m).min(next.len() - 1);
        let (mut num, mut den) = (0.0, 0.0);
        for (i, v) in next.iter().enumerate().take(hi + 1).skip(lo) {
            let w = self.taps[i.abs_diff(j)];
            num += w * v;
            den += w;
        }
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalAction {
    Continue,
    StopTreatment,
    StopControl,
}

impl NormalAction {
    pub fn is_stop(self) -> bool {
        self != NormalAction::Continue
    }
}

/// Boundary of the continuation region at one stage, in units of `S_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalBoundary {
    pub stage: u32,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct NormalPolicy {
    spec: NormalDesignSpec,
    grid: Vec<f64>,
    psi2: Vec<f64>,
    values: Vec<Vec<f64>>,
    actions: Vec<Vec<NormalAction>>,
    boundaries: Vec<NormalBoundary>,
}

pub fn solve_normal(spec: &NormalDesignSpec) -> Result<NormalPolicy> {
    spec.validate()?;
    let grid = spec.grid();
    let psi2 = variance_schedule(spec);
    let reach = 6.0 * spec.sigma0_2.sqrt();
    if spec.grid_min > -reach || spec.grid_max < reach {
        log::warn!("grid [{}, {}] does not cover ±6 prior standard deviations ({reach:.3})", spec.grid_min, spec.grid_max);
    }
    let t = spec.horizon as usize;
    let dx = spec.spacing();
    let stop_action = |s: f64| if s > 0.0 { NormalAction::StopTreatment } else { NormalAction::StopControl };

    let mut values = vec![Vec::new(); t + 1];
    let mut actions = vec![Vec::new(); t + 1];
    values[t] = grid.iter().map(|&s| stop_loss(s)).collect();
    actions[t] = grid.iter().map(|&s| stop_action(s)).collect();

    for n in (0..t).rev() {
        let kernel = StageKernel::new(transition_std(spec, n as u32)?, dx);
        let next = &values[n + 1];
        let (v, a): (Vec<f64>, Vec<NormalAction>) = grid
            .par_iter()
            .enumerate()
            .map(|(j, &s)| {
                let h = stop_loss(s);
                let q = spec.cost + kernel.expect(j, next);
                if q < h {
                    (q, NormalAction::Continue)
                } else {
                    (h, stop_action(s))
                }
            })
            .unzip();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at stage {n}")));
        }
        values[n] = v;
        actions[n] = a;
    }

    let boundaries = actions
        .iter()
        .enumerate()
        .map(|(n, row)| {
            let first = row.iter().position(|a| !a.is_stop());
            let last = row.iter().rposition(|a| !a.is_stop());
            NormalBoundary { stage: n as u32, lower: first.map(|i| grid[i]), upper: last.map(|i| grid[i]) }
        })
        .collect();

    Ok(NormalPolicy { spec: spec.clone(), grid, psi2, values, actions, boundaries })
}

impl NormalPolicy {
    pub fn spec(&self) -> &NormalDesignSpec {
        &self.spec
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn variance_schedule(&self) -> &[f64] {
        &self.psi2
    }

    pub fn values(&self, n: u32) -> &[f64] {
        &self.values[n as usize]
    }

    pub fn actions(&self, n: u32) -> &[NormalAction] {
        &self.actions[n as usize]
    }

    pub fn boundaries(&self) -> &[NormalBoundary] {
        &self.boundaries
    }

    /// Grid index nearest to `s`, or `None` off the grid.
    pub fn grid_index(&self, s: f64) -> Option<usize> {
        let pos = (s - self.spec.grid_min) / self.spec.spacing();
        if !(pos > -0.5 && pos < self.grid.len() as f64 - 0.5) {
            return None;
        }
        Some(pos.round() as usize)
    }

    /// Action at `(n, s)` using the nearest grid point; off-grid states stop.
    pub fn action_at(&self, n: u32, s: f64) -> NormalAction {
        match self.grid_index(s) {
            Some(j) => self.actions[n as usize][j],
            None if s > 0.0 => NormalAction::StopTreatment,
            None => NormalAction::StopControl,
        }
    }

    /// Value at `(n, s)` by linear interpolation, `h(s)` off the grid.
    pub fn value_at(&self, n: u32, s: f64) -> f64 {
        let pos = (s - self.spec.grid_min) / self.spec.spacing();
        if pos < 0.0 || pos > (self.grid.len() - 1) as f64 {
            return stop_loss(s);
        }
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let f = pos - i as f64;
        let row = &self.values[n as usize];
        row[i] * (1.0 - f) + row[i + 1] * f
    }

    pub fn write_boundaries_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["stage", "lower_s", "upper_s"])?;
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        for b in &self.boundaries {
            w.write_record([b.stage.to_string(), fmt(b.lower), fmt(b.upper)])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Decision {
    Treatment,
    Control,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalPath {
    pub theta: f64,
    pub stop_stage: u32,
    pub decision: Decision,
    /// `S_0, …, S_stop`.
    pub path: Vec<f64>,
    /// Observations `z_1, …, z_stop`.
    pub observations: Vec<f64>,
}

impl NormalPath {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["stage", "S_n"])?;
        for (n, s) in self.path.iter().enumerate() {
            w.write_record([n.to_string(), format!("{s:.8}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Runs one trial under `policy` with true mean `theta`.
pub fn simulate_normal_path(policy: &NormalPolicy, theta: f64, rng: &mut RngStream) -> Result<NormalPath> {
    let spec = &policy.spec;
    let noise = Normal::new(theta, spec.sigma2.sqrt()).map_err(|e| Error::Domain(e.to_string()))?;
    let mut s = 0.0;
    let mut precision = 1.0 / spec.sigma0_2;
    let mut path = vec![s];
    let mut observations = Vec::new();
    let mut n = 0u32;
    while n < spec.horizon && !policy.action_at(n, s).is_stop() {
        let z = noise.sample(rng);
        let next_precision = precision + 1.0 / spec.sigma2;
        s = (s * precision + z / spec.sigma2) / next_precision;
        precision = next_precision;
        observations.push(z);
        path.push(s);
        n += 1;
    }
    let decision = if s > 0.0 { Decision::Treatment } else { Decision::Control };
    Ok(NormalPath { theta, stop_stage: n, decision, path, observations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_spec() -> NormalDesignSpec {
        NormalDesignSpec::default()
    }

    #[test]
    fn schedule_examples() {
        let spec = reference_spec();
        let psi2 = variance_schedule(&spec);
        assert!((psi2[1] - 0.8).abs() < 1e-15);
        for (n, v) in psi2.iter().enumerate() {
            let closed = 1.0 / (1.0 / spec.sigma0_2 + n as f64 / spec.sigma2);
            assert!((v - closed).abs() < 1e-14);
        }
        assert!(psi2.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn transition_std_examples() {
        let spec = NormalDesignSpec { horizon: 5000, ..reference_spec() };
        assert!((transition_std(&spec, 0).unwrap() - 0.2f64.sqrt()).abs() < 1e-15);
        let psi2 = variance_schedule(&spec);
        for n in [0u32, 1, 10, 100, 4999] {
            let t = transition_std(&spec, n).unwrap();
            assert!(t * t < psi2[n as usize]);
        }
        assert!(transition_std(&spec, 4999).unwrap() < 0.001);
        assert!(transition_std(&spec, 5000).is_err());
    }

    #[test]
    fn kernel_rows_normalised() {
        let spec = reference_spec();
        let g = spec.grid_points;
        for n in [0u32, 10, 49] {
            let k = StageKernel::new(transition_std(&spec, n).unwrap(), spec.spacing());
            for j in [0, 1, 17, g / 2, g - 40, g - 1] {
                let (_, w) = k.row(j, g);
                assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn validation() {
        assert!(NormalDesignSpec { grid_points: 50, ..reference_spec() }.validate().is_err());
        assert!(NormalDesignSpec { grid_min: 0.5, ..reference_spec() }.validate().is_err());
        assert!(NormalDesignSpec { sigma2: 0.0, ..reference_spec() }.validate().is_err());
        assert!(NormalDesignSpec { horizon: 0, ..reference_spec() }.validate().is_err());
        assert!(solve_normal(&NormalDesignSpec { cost: -1.0, ..reference_spec() }).is_err());
    }

    #[test]
    fn terminal_stage_and_region_shape() {
        let policy = solve_normal(&reference_spec()).unwrap();
        let t = policy.spec().horizon;
        for (s, v) in policy.grid().iter().zip(policy.values(t)) {
            assert_eq!(*v, stop_loss(*s));
        }
        assert!(policy.actions(t).iter().all(|a| a.is_stop()));
        for b in policy.boundaries() {
            if let (Some(l), Some(u)) = (b.lower, b.upper) {
                assert!(l <= 0.0 && u >= 0.0, "{b:?}");
            }
        }
        let width = |b: &NormalBoundary| b.upper.zip(b.lower).map_or(0.0, |(u, l)| u - l);
        let widths: Vec<f64> = policy.boundaries().iter().map(width).collect();
        assert!(widths[0] > widths[t as usize / 2]);
        assert!(widths[t as usize / 2] > widths[t as usize - 1]);
        assert_eq!(widths[t as usize], 0.0);
    }

    #[test]
    fn value_shape() {
        let policy = solve_normal(&reference_spec()).unwrap();
        for n in [0u32, 10, 30] {
            let v = policy.values(n);
            let g = policy.grid();
            for j in 1..g.len() {
                if g[j] <= 0.0 {
                    assert!(v[j] <= v[j - 1] + 1e-15, "stage {n} at {}", g[j]);
                }
            }
            assert_eq!(v[0], stop_loss(g[0]));
            assert_eq!(v[g.len() - 1], stop_loss(g[g.len() - 1]));
        }
    }

    #[test]
    fn expensive_sampling_never_continues() {
        let spec = NormalDesignSpec { cost: 6.0, ..reference_spec() };
        let policy = solve_normal(&spec).unwrap();
        for n in 0..=spec.horizon {
            assert!(policy.actions(n).iter().all(|a| a.is_stop()));
        }
        for (s, v) in policy.grid().iter().zip(policy.values(0)) {
            assert_eq!(*v, stop_loss(*s));
        }
    }

    #[test]
    fn free_information_always_continues_at_zero() {
        let spec = NormalDesignSpec { cost: 0.0, ..reference_spec() };
        let policy = solve_normal(&spec).unwrap();
        let zero = policy.grid_index(0.0).unwrap();
        assert_eq!(policy.grid()[zero], 0.0);
        for n in 0..spec.horizon {
            assert!(policy.values(n)[zero] < 0.0);
            assert_eq!(policy.actions(n)[zero], NormalAction::Continue);
        }
    }

    #[test]
    fn refinement_oracle() {
        let coarse = solve_normal(&reference_spec()).unwrap();
        let fine = solve_normal(&NormalDesignSpec { grid_points: 4 * 4000 + 1, ..reference_spec() }).unwrap();
        for (a, b) in coarse.boundaries().iter().zip(fine.boundaries()) {
            for (x, y) in [(a.lower, b.lower), (a.upper, b.upper)] {
                match (x, y) {
                    (Some(x), Some(y)) => assert!((x - y).abs() <= 0.02, "stage {}: {x} vs {y}", a.stage),
                    (None, None) => {}
                    other => panic!("stage {}: {other:?}", a.stage),
                }
            }
        }
        let doubled = solve_normal(&NormalDesignSpec { grid_points: 8001, ..reference_spec() }).unwrap();
        assert!((coarse.value_at(0, 0.0) - doubled.value_at(0, 0.0)).abs() < 1e-3);
    }

    #[test]
    fn large_effect_stops_early_for_treatment() {
        let policy = solve_normal(&reference_spec()).unwrap();
        let mut treat = 0;
        let mut stages = 0;
        for r in 0..1000 {
            let mut rng = RngStream::new(5, r);
            let p = simulate_normal_path(&policy, 3.0, &mut rng).unwrap();
            treat += (p.decision == Decision::Treatment) as u32;
            stages += p.stop_stage;
        }
        assert!(treat >= 990, "{treat}");
        assert!((stages as f64 / 1000.0) < 10.0);
    }

    #[test]
    fn null_effect_splits_evenly() {
        let policy = solve_normal(&reference_spec()).unwrap();
        let n = 10_000u64;
        let treat: u64 = (0..n)
            .map(|r| {
                let mut rng = RngStream::new(6, r);
                (simulate_normal_path(&policy, 0.0, &mut rng).unwrap().decision == Decision::Treatment) as u64
            })
            .sum();
        let p = treat as f64 / n as f64;
        assert!((p - 0.5).abs() < 4.0 * (0.25 / n as f64).sqrt(), "{p}");
    }

    #[test]
    fn path_satisfies_update_identity() {
        let spec = reference_spec();
        let policy = solve_normal(&spec).unwrap();
        let psi2 = variance_schedule(&spec);
        let mut rng = RngStream::new(7, 0);
        for theta in [-0.5, 0.1, 0.8] {
            let p = simulate_normal_path(&policy, theta, &mut rng).unwrap();
            assert_eq!(p.path.len(), p.stop_stage as usize + 1);
            for n in 1..p.path.len() {
                let lhs = p.path[n] / psi2[n];
                let rhs = p.path[n - 1] / psi2[n - 1] + p.observations[n - 1] / spec.sigma2;
                assert!((lhs - rhs).abs() < 1e-12);
            }
            let mut buf = Vec::new();
            p.write_csv(&mut buf).unwrap();
            assert!(String::from_utf8(buf).unwrap().starts_with("stage,S_n\n0,"));
        }
    }

    #[test]
    fn boundary_csv_header() {
        let policy = solve_normal(&NormalDesignSpec { horizon: 5, grid_points: 401, ..reference_spec() }).unwrap();
        let mut buf = Vec::new();
        policy.write_boundaries_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("stage,lower_s,upper_s\n"));
        assert_eq!(text.lines().count(), 7);
    }
}
