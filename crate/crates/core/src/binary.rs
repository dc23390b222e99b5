//! Exact backward induction for two-arm Beta-Binomial trials.
//!
//! One patient per arm enters at every stage. After `k` stages the trial is
//! summarised by the success counts `(s1, s0)`, so stage `k` has `(k+1)²`
//! states and the whole table `Σ (k+1)²`. Each continuation value is a
//! weighted sum of four successor values with closed-form predictive
//! weights; no quadrature is involved.
//!
//! The terminal loss is `-max(0, δ̂_k)` where `δ̂_k` is the difference of the
//! posterior means. The calibrated variant gates the reward on the normal
//! approximation of `Pr(p1 > p0 | data)` exceeding `γ`.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{prob_superior_exact, prob_superior_mc, prob_superior_normal_approx, BetaParams, RngStream};
use crate::error::{Error, Result};

/// Monte-Carlo draws used for declarations when the priors are not integer.
pub const DECLARATION_MC_DRAWS: usize = 100_000;
const DECLARATION_SEED: u64 = 0x5EED_DEC1_A7E5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryDesignSpec {
    /// Prior on the treatment arm.
    pub prior1: BetaParams,
    /// Prior on the control arm.
    pub prior0: BetaParams,
    /// Cost of one stage, in the units of the treatment effect.
    pub cost_per_stage: f64,
    /// Number of stages `T`.
    pub horizon: u32,
    /// Threshold on `Pr(p1 > p0 | data)` for declaring treatment superior.
    pub gamma: f64,
    /// Gate the terminal reward on `γ` inside the recursion.
    pub calibrated: bool,
}

impl BinaryDesignSpec {
    pub fn new(prior1: BetaParams, prior0: BetaParams, cost_per_stage: f64, horizon: u32, gamma: f64, calibrated: bool) -> Result<Self> {
        let spec = Self { prior1, prior0, cost_per_stage, horizon, gamma, calibrated };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cost_per_stage >= 0.0 && self.cost_per_stage.is_finite()) {
            return Err(Error::Config(format!("cost_per_stage must be finite and >= 0, got {}", self.cost_per_stage)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if self.horizon > 2000 {
            return Err(Error::Config(format!("horizon {} exceeds the supported maximum of 2000", self.horizon)));
        }
        Ok(())
    }

    pub fn posterior1(&self, state: BinaryState) -> BetaParams {
        self.prior1.update(state.s1, state.k)
    }

    pub fn posterior0(&self, state: BinaryState) -> BetaParams {
        self.prior0.update(state.s0, state.k)
    }

    /// Posterior mean treatment effect `δ̂_k`.
    pub fn delta_hat(&self, state: BinaryState) -> f64 {
        predictive_success(&self.prior1, state.s1, state.k) - predictive_success(&self.prior0, state.s0, state.k)
    }

    /// Expected loss of the best terminal decision at `state`.
    pub fn terminal_value(&self, state: BinaryState) -> f64 {
        let delta = self.delta_hat(state);
        if delta <= 0.0 {
            return 0.0;
        }
        if self.calibrated {
            let p = prob_superior_normal_approx(&self.posterior1(state), &self.posterior0(state));
            if p <= self.gamma {
                return 0.0;
            }
        }
        -delta
    }

    /// Posterior probability that treatment is superior, exact when the
    /// posterior shapes are integers and Monte-Carlo otherwise. The
    /// Monte-Carlo stream is keyed by the state so the result is a fixed
    /// function of `(spec, state)`.
    pub fn declaration_probability(&self, state: BinaryState) -> f64 {
        let (p1, p0) = (self.posterior1(state), self.posterior0(state));
        match prob_superior_exact(&p1, &p0) {
            Ok(p) => p,
            Err(_) => {
                let mut rng = RngStream::new(DECLARATION_SEED, state.flat_index() as u64);
                prob_superior_mc(&p1, &p0, DECLARATION_MC_DRAWS, &mut rng).expect("draws > 0")
            }
        }
    }

    /// Predictive probabilities of the four paired outcomes
    /// `(y1, y0) = (0,0), (0,1), (1,0), (1,1)`.
    pub fn transition_weights(&self, state: BinaryState) -> [f64; 4] {
        let p1 = predictive_success(&self.prior1, state.s1, state.k);
        let p0 = predictive_success(&self.prior0, state.s0, state.k);
        [(1.0 - p1) * (1.0 - p0), (1.0 - p1) * p0, p1 * (1.0 - p0), p1 * p0]
    }
}

/// Posterior predictive probability of a success on the next patient.
#[inline]
pub fn predictive_success(prior: &BetaParams, successes: u32, stage: u32) -> f64 {
    (prior.alpha() + successes as f64) / (prior.alpha() + prior.beta() + stage as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryState {
    pub k: u32,
    pub s1: u32,
    pub s0: u32,
}

impl BinaryState {
    pub fn new(k: u32, s1: u32, s0: u32) -> Result<Self> {
        if s1 > k || s0 > k {
            return Err(Error::Domain(format!("successes ({s1}, {s0}) exceed stage {k}")));
        }
        Ok(Self { k, s1, s0 })
    }

    pub fn origin() -> Self {
        Self { k: 0, s1: 0, s0: 0 }
    }

    /// Position in the stage-major flat layout.
    pub fn flat_index(&self) -> usize {
        stage_offset(self.k) + self.s1 as usize * (self.k as usize + 1) + self.s0 as usize
    }

    pub fn successor(&self, y1: bool, y0: bool) -> Self {
        Self { k: self.k + 1, s1: self.s1 + y1 as u32, s0: self.s0 + y0 as u32 }
    }
}

/// Number of states in stages `0..k`.
#[inline]
pub fn stage_offset(k: u32) -> usize {
    let k = k as usize;
    k * (k + 1) * (2 * k + 1) / 6
}

/// Total states `Σ_{k=0}^{T} (k+1)²`.
pub fn total_states(horizon: u32) -> usize {
    stage_offset(horizon + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum Action {
    Continue = 0,
    StopDeclareTreatment = 1,
    StopDeclareControl = 2,
}

impl Action {
    pub fn is_stop(self) -> bool {
        self != Action::Continue
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Action::Continue),
            1 => Some(Action::StopDeclareTreatment),
            2 => Some(Action::StopDeclareControl),
            _ => None,
        }
    }
}

/// Solved policy: value and action for every lattice state.
#[derive(Debug)]
pub struct BinaryPolicyTable {
    spec: BinaryDesignSpec,
    values: Vec<f64>,
    actions: Vec<Action>,
    declarations: Mutex<HashMap<usize, f64>>,
}

/// Solves the Bellman recursion, splitting each stage across the rayon pool.
pub fn solve(spec: &BinaryDesignSpec) -> Result<BinaryPolicyTable> {
    solve_with(spec, true)
}

/// Single-threaded or parallel solve; both give bit-identical tables.
pub fn solve_with(spec: &BinaryDesignSpec, parallel: bool) -> Result<BinaryPolicyTable> {
    spec.validate()?;
    let horizon = spec.horizon;
    let n = total_states(horizon);
    let mut values = vec![0.0f64; n];
    let mut actions = vec![Action::Continue; n];

    let stop = |state: BinaryState| {
        let h = spec.terminal_value(state);
        let action = if h < 0.0 { Action::StopDeclareTreatment } else { Action::StopDeclareControl };
        (h, action)
    };

    let (head, last) = values.split_at_mut(stage_offset(horizon));
    let (ahead, alast) = actions.split_at_mut(stage_offset(horizon));
    fill_stage(horizon, last, alast, parallel, stop);

    // Sweep backward keeping the solved stage k+1 borrowed immutably.
    let mut next: &[f64] = last;
    let mut rest_v = head;
    let mut rest_a = ahead;
    for k in (0..horizon).rev() {
        let (before_v, cur_v) = rest_v.split_at_mut(stage_offset(k));
        let (before_a, cur_a) = rest_a.split_at_mut(stage_offset(k));
        let width_next = k as usize + 2;
        let cost = spec.cost_per_stage;
        fill_stage(k, cur_v, cur_a, parallel, |state| {
            let (h, stop_action) = stop(state);
            let w = spec.transition_weights(state);
            let base = state.s1 as usize * width_next + state.s0 as usize;
            let cont = cost
                + w[0] * next[base]
                + w[1] * next[base + 1]
                + w[2] * next[base + width_next]
                + w[3] * next[base + width_next + 1];
            if cont < h {
                (cont, Action::Continue)
            } else {
                (h, stop_action)
            }
        });
        next = cur_v;
        rest_v = before_v;
        rest_a = before_a;
    }

    Ok(BinaryPolicyTable { spec: spec.clone(), values, actions, declarations: Mutex::new(HashMap::new()) })
}

fn fill_stage<F>(k: u32, values: &mut [f64], actions: &mut [Action], parallel: bool, f: F)
where
    F: Fn(BinaryState) -> (f64, Action) + Sync,
{
    let width = k as usize + 1;
    let row = |(s1, (vrow, arow)): (usize, (&mut [f64], &mut [Action]))| {
        for s0 in 0..width {
            let (v, a) = f(BinaryState { k, s1: s1 as u32, s0: s0 as u32 });
            vrow[s0] = v;
            arow[s0] = a;
        }
    };
    if parallel && width >= 32 {
        values.par_chunks_mut(width).zip(actions.par_chunks_mut(width)).enumerate().for_each(row);
    } else {
        values.chunks_mut(width).zip(actions.chunks_mut(width)).enumerate().for_each(row);
    }
}

/// One visited lattice state on a simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceStep {
    pub k: u32,
    pub s1: u32,
    pub s0: u32,
    pub delta_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathOutcome {
    pub stop_stage: u32,
    pub declared: bool,
    pub prob_superior: f64,
    pub trace: Vec<TraceStep>,
}

impl BinaryPolicyTable {
    pub fn spec(&self) -> &BinaryDesignSpec {
        &self.spec
    }

    pub fn horizon(&self) -> u32 {
        self.spec.horizon
    }

    pub fn num_states(&self) -> usize {
        self.values.len()
    }

    pub fn value(&self, state: BinaryState) -> f64 {
        self.values[state.flat_index()]
    }

    pub fn action(&self, state: BinaryState) -> Action {
        self.actions[state.flat_index()]
    }

    /// Actions at stage `k`, row-major in `(s1, s0)`.
    pub fn stage_actions(&self, k: u32) -> &[Action] {
        &self.actions[stage_offset(k)..stage_offset(k + 1)]
    }

    pub fn stage_values(&self, k: u32) -> &[f64] {
        &self.values[stage_offset(k)..stage_offset(k + 1)]
    }

    /// `c + E[V_{k+1}]` recomputed from the table, for `k < T`.
    pub fn continuation_value(&self, state: BinaryState) -> Option<f64> {
        if state.k >= self.spec.horizon {
            return None;
        }
        let w = self.spec.transition_weights(state);
        let succ = [
            state.successor(false, false),
            state.successor(false, true),
            state.successor(true, false),
            state.successor(true, true),
        ];
        Some(self.spec.cost_per_stage + w.iter().zip(succ).map(|(w, s)| w * self.value(s)).sum::<f64>())
    }

    /// Declaration probability at `state`, memoised for non-integer priors.
    pub fn declaration_probability(&self, state: BinaryState) -> f64 {
        let integer = self.spec.prior1.has_integer_params() && self.spec.prior0.has_integer_params();
        if integer {
            return self.spec.declaration_probability(state);
        }
        let key = state.flat_index();
        if let Some(p) = self.declarations.lock().expect("declaration cache").get(&key) {
            return *p;
        }
        let p = self.spec.declaration_probability(state);
        self.declarations.lock().expect("declaration cache").insert(key, p);
        p
    }

    /// Follows the policy along a stream of per-stage `(y1, y0)` outcomes
    /// until the first stop action or the horizon.
    pub fn evaluate_outcomes<I>(&self, outcomes: I) -> Result<PathOutcome>
    where
        I: IntoIterator<Item = (bool, bool)>,
    {
        let mut state = BinaryState::origin();
        let mut trace = vec![self.trace_step(state)];
        let mut outcomes = outcomes.into_iter();
        while state.k < self.spec.horizon && !self.action(state).is_stop() {
            let (y1, y0) = outcomes
                .next()
                .ok_or_else(|| Error::Domain(format!("outcome stream ended at stage {} before the policy stopped", state.k)))?;
            state = state.successor(y1, y0);
            trace.push(self.trace_step(state));
        }
        let prob = self.declaration_probability(state);
        Ok(PathOutcome { stop_stage: state.k, declared: prob > self.spec.gamma, prob_superior: prob, trace })
    }

    /// [`Self::evaluate_outcomes`] on a slice holding at least `T` stages.
    pub fn evaluate_path(&self, outcomes: &[(bool, bool)]) -> Result<PathOutcome> {
        if outcomes.len() < self.spec.horizon as usize {
            return Err(Error::Domain(format!(
                "outcome sequence has {} stages, horizon is {}",
                outcomes.len(),
                self.spec.horizon
            )));
        }
        self.evaluate_outcomes(outcomes.iter().copied())
    }

    fn trace_step(&self, state: BinaryState) -> TraceStep {
        TraceStep { k: state.k, s1: state.s1, s0: state.s0, delta_hat: self.spec.delta_hat(state) }
    }

    pub fn states(&self, k: u32) -> impl Iterator<Item = BinaryState> {
        (0..=k).flat_map(move |s1| (0..=k).map(move |s0| BinaryState { k, s1, s0 }))
    }
}

/// Operating characteristics computed exactly by pushing probability mass
/// forward through the policy under fixed true response rates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactOc {
    pub expected_n: f64,
    pub declare_prob: f64,
    /// `Pr(stop at stage k)` for `k = 0..=T`.
    pub stop_distribution: Vec<f64>,
}

impl ExactOc {
    /// Smallest stage with cumulative stopping probability at least 1/2.
    pub fn median_stop(&self) -> u32 {
        let mut acc = 0.0;
        for (k, p) in self.stop_distribution.iter().enumerate() {
            acc += p;
            if acc >= 0.5 {
                return k as u32;
            }
        }
        self.stop_distribution.len() as u32 - 1
    }
}

impl BinaryPolicyTable {
    pub fn exact_oc(&self, p1: f64, p0: f64) -> Result<ExactOc> {
        if !(0.0..=1.0).contains(&p1) || !(0.0..=1.0).contains(&p0) {
            return Err(Error::Domain(format!("response rates ({p1}, {p0}) outside [0, 1]")));
        }
        let horizon = self.horizon();
        let mut mass = vec![1.0f64];
        let mut stop_distribution = Vec::with_capacity(horizon as usize + 1);
        let (mut expected_n, mut declare_prob) = (0.0, 0.0);
        for k in 0..=horizon {
            let width = k as usize + 1;
            let mut next = vec![0.0f64; (width + 1) * (width + 1)];
            let mut stopped = 0.0;
            for state in self.states(k) {
                let m = mass[state.s1 as usize * width + state.s0 as usize];
                if m == 0.0 {
                    continue;
                }
                if k == horizon || self.action(state).is_stop() {
                    stopped += m;
                    if self.declaration_probability(state) > self.spec.gamma {
                        declare_prob += m;
                    }
                    continue;
                }
                let base = state.s1 as usize * (width + 1) + state.s0 as usize;
                next[base] += m * (1.0 - p1) * (1.0 - p0);
                next[base + 1] += m * (1.0 - p1) * p0;
                next[base + width + 1] += m * p1 * (1.0 - p0);
                next[base + width + 2] += m * p1 * p0;
            }
            expected_n += k as f64 * stopped;
            stop_distribution.push(stopped);
            mass = next;
        }
        Ok(ExactOc { expected_n, declare_prob, stop_distribution })
    }
}

/// Per-stage projection of the policy onto `δ̂_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionRow {
    pub stage: u32,
    /// Largest `δ̂` among states that stop for control.
    pub lower_delta: Option<f64>,
    /// Smallest `δ̂` among states that stop for treatment.
    pub upper_delta: Option<f64>,
    /// Range of `δ̂` over continuation states.
    pub continue_min: Option<f64>,
    pub continue_max: Option<f64>,
    pub continue_states: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingRegion {
    pub rows: Vec<RegionRow>,
}

pub fn stopping_region(table: &BinaryPolicyTable) -> StoppingRegion {
    let spec = table.spec();
    let rows = (0..=table.horizon())
        .map(|k| {
            let mut row = RegionRow {
                stage: k,
                lower_delta: None,
                upper_delta: None,
                continue_min: None,
                continue_max: None,
                continue_states: 0,
            };
            for state in table.states(k) {
                let d = spec.delta_hat(state);
                match table.action(state) {
                    Action::StopDeclareTreatment => row.upper_delta = Some(row.upper_delta.map_or(d, |u| u.min(d))),
                    Action::StopDeclareControl => row.lower_delta = Some(row.lower_delta.map_or(d, |l| l.max(d))),
                    Action::Continue => {
                        row.continue_states += 1;
                        row.continue_min = Some(row.continue_min.map_or(d, |m| m.min(d)));
                        row.continue_max = Some(row.continue_max.map_or(d, |m| m.max(d)));
                    }
                }
            }
            row
        })
        .collect();
    StoppingRegion { rows }
}

impl StoppingRegion {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["stage", "lower_delta", "upper_delta"])?;
        let fmt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
        for r in &self.rows {
            w.write_record([r.stage.to_string(), fmt(r.lower_delta), fmt(r.upper_delta)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Serialised policy: the spec plus run-length-encoded action rows.
///
/// Each stage `k` holds `k+1` rows (one per `s1`); a row is a flat list of
/// `[code, run, code, run, ...]` pairs over `s0 = 0..=k` with codes
/// `0 = continue`, `1 = stop for treatment`, `2 = stop for control`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyExport {
    pub format: String,
    pub spec: BinaryDesignSpec,
    pub total_states: usize,
    pub stages: Vec<Vec<Vec<u32>>>,
}

pub const POLICY_FORMAT: &str = "seqtrial.binary-policy.v1";

impl PolicyExport {
    pub fn from_table(table: &BinaryPolicyTable) -> Self {
        let stages = (0..=table.horizon())
            .map(|k| {
                let width = k as usize + 1;
                table.stage_actions(k).chunks(width).map(run_length_encode).collect()
            })
            .collect();
        Self { format: POLICY_FORMAT.to_string(), spec: table.spec.clone(), total_states: table.num_states(), stages }
    }

    /// Expands the rows back into a flat action vector in table layout.
    pub fn decode_actions(&self) -> Result<Vec<Action>> {
        if self.format != POLICY_FORMAT {
            return Err(Error::Config(format!("unknown policy format {:?}", self.format)));
        }
        let mut out = Vec::with_capacity(self.total_states);
        for (k, rows) in self.stages.iter().enumerate() {
            if rows.len() != k + 1 {
                return Err(Error::Config(format!("stage {k} has {} rows, expected {}", rows.len(), k + 1)));
            }
            for row in rows {
                let before = out.len();
                for pair in row.chunks(2) {
                    let [code, run] = pair else {
                        return Err(Error::Config(format!("odd-length run list at stage {k}")));
                    };
                    let action = Action::from_code(*code as u8)
                        .ok_or_else(|| Error::Config(format!("unknown action code {code}")))?;
                    out.extend(std::iter::repeat(action).take(*run as usize));
                }
                if out.len() - before != k + 1 {
                    return Err(Error::Config(format!("row at stage {k} decodes to {} states", out.len() - before)));
                }
            }
        }
        Ok(out)
    }
}

fn run_length_encode(row: &[Action]) -> Vec<u32> {
    let mut out = Vec::new();
    let mut iter = row.iter().peekable();
    while let Some(&a) = iter.next() {
        let mut run = 1u32;
        while iter.peek() == Some(&&a) {
            iter.next();
            run += 1;
        }
        out.push(a.code() as u32);
        out.push(run);
    }
    out
}
