//! On-board receding-horizon controller.
//!
//! Each control step enumerates candidate inputs over the feasible set for
//! both switch values, simulates one plant step per candidate, and scores
//! `stage cost + terminal value at the predicted successor`. The first
//! input of the best sequence is applied. The disturbance is held constant
//! over the horizon; for horizons beyond one step the terminal value is
//! summed at every predicted step, not only at the end.
//!
//! The terminal value is pluggable: the learned per-bin linear model in
//! production, or a trip's exact DP value interpolant for consistency
//! checks.

use crate::dp::{stage_cost_from_outputs, ValueTable, TIE_EPS_GAL};
use crate::learn::PolicyParams;
use crate::powertrain::{
    candidate_beats, candidate_inputs, fallback_input, step_strict, ControlInput, Disturbance,
    PowertrainParams, PowertrainState,
};
use crate::trip::{FeatureVector, RouteStats, SimHistory};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpcConfig {
    /// Prediction horizon N_h in steps.
    pub horizon: usize,
    /// Engine-torque candidates per switch value.
    pub torque_candidates: usize,
}

impl Default for MpcConfig {
    fn default() -> Self {
        MpcConfig { horizon: 1, torque_candidates: 41 }
    }
}

/// Everything the controller may causally read at time t.
#[derive(Clone, Copy)]
pub struct ControlCtx<'a> {
    pub state: PowertrainState,
    pub dist: Disturbance,
    pub vehicle_speed_mps: f64,
    pub position_m: f64,
    pub step_index: usize,
    pub history: &'a SimHistory,
    pub hsg_remaining_s: f64,
}

/// Terminal cost at a predicted successor state.
pub trait TerminalCost {
    fn eval(
        &self,
        stage_next: usize,
        state_next: &PowertrainState,
        features_next: &FeatureVector,
        position_next_m: f64,
    ) -> f64;
}

/// Learned value function: per-bin linear model over scaled features.
pub struct LearnedTerminal<'a>(pub &'a PolicyParams);

impl TerminalCost for LearnedTerminal<'_> {
    fn eval(
        &self,
        _stage_next: usize,
        _state_next: &PowertrainState,
        features_next: &FeatureVector,
        position_next_m: f64,
    ) -> f64 {
        let bin = self.0.bins.bin_for(position_next_m);
        self.0.evaluate_vhat(features_next, bin).expect("bin_for stays in range")
    }
}

/// Exact DP value interpolant for the same trip (consistency checks).
pub struct DpTerminal<'a>(pub &'a ValueTable);

impl TerminalCost for DpTerminal<'_> {
    fn eval(
        &self,
        stage_next: usize,
        state_next: &PowertrainState,
        _features_next: &FeatureVector,
        _position_next_m: f64,
    ) -> f64 {
        let stage = stage_next.min(self.0.stage_count);
        self.0.interp_value(stage, state_next.soc, state_next.engine_on)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MpcStepResult {
    pub chosen: ControlInput,
    /// Objective of the best candidate sequence, gallons-equivalent.
    pub predicted_cost_gal: f64,
    pub candidate_count: usize,
    pub fallback_used: bool,
}

/// Deterministic selection among scored candidates: lowest cost wins, ties
/// within `TIE_EPS_GAL` prefer engine off, then the smaller torque
/// magnitude.
pub fn tie_break(
    candidates: impl IntoIterator<Item = (f64, ControlInput)>,
) -> Option<(f64, ControlInput)> {
    let mut best: Option<(f64, ControlInput)> = None;
    for (cost, input) in candidates {
        match &best {
            None => best = Some((cost, input)),
            Some((bc, bi)) => {
                if candidate_beats(cost, &input, *bc, bi, TIE_EPS_GAL) {
                    best = Some((cost, input));
                }
            }
        }
    }
    best
}

/// Score all first-step candidates and apply the argmin.
pub fn mpc_step(
    ctx: &ControlCtx<'_>,
    terminal: &dyn TerminalCost,
    stats: &RouteStats,
    params: &PowertrainParams,
    cfg: &MpcConfig,
) -> MpcStepResult {
    let shaft = params.shaft_speed(&ctx.dist);
    let mut cands = Vec::new();
    candidate_inputs(ctx.state.engine_on, shaft, cfg.torque_candidates, params, &mut cands);
    let candidate_count = cands.len();

    let mut best: Option<(f64, ControlInput)> = None;
    for cand in &cands {
        let Some(total) = sequence_cost(
            ctx.state,
            ctx.hsg_remaining_s,
            ctx.history,
            ctx.position_m,
            ctx.step_index,
            ctx.vehicle_speed_mps,
            &ctx.dist,
            cand,
            terminal,
            stats,
            params,
            cfg,
            cfg.horizon,
        ) else {
            continue;
        };
        match &best {
            None => best = Some((total, *cand)),
            Some((bc, bi)) => {
                if candidate_beats(total, cand, *bc, bi, TIE_EPS_GAL) {
                    best = Some((total, *cand));
                }
            }
        }
    }

    match best {
        Some((cost, input)) => MpcStepResult {
            chosen: input,
            predicted_cost_gal: cost,
            candidate_count,
            fallback_used: false,
        },
        None => MpcStepResult {
            chosen: fallback_input(&ctx.state, &ctx.dist, params),
            predicted_cost_gal: f64::INFINITY,
            candidate_count,
            fallback_used: true,
        },
    }
}

/// Cost of committing to `first` now and continuing optimally for
/// `depth_left - 1` further steps under the frozen disturbance
/// `(frozen_speed, frozen_dist)`: each level contributes
/// `stage cost + terminal(successor)`.
#[allow(clippy::too_many_arguments)]
fn sequence_cost(
    state: PowertrainState,
    hsg_remaining_s: f64,
    history: &SimHistory,
    position_m: f64,
    stage: usize,
    frozen_speed: f64,
    frozen_dist: &Disturbance,
    first: &ControlInput,
    terminal: &dyn TerminalCost,
    stats: &RouteStats,
    params: &PowertrainParams,
    cfg: &MpcConfig,
    depth_left: usize,
) -> Option<f64> {
    let res = step_strict(&state, first, frozen_dist, params, hsg_remaining_s).ok()?;
    let cost = stage_cost_from_outputs(&res.outputs, params);
    let position_next =
        (position_m + frozen_speed * params.sample_time_s).min(stats.bins.total_distance_m);
    let features_next =
        history.predict_features(&res.next, res.outputs.fuel_mass_kg, position_next, stats);
    let vhat = terminal.eval(stage + 1, &res.next, &features_next, position_next);
    if vhat.is_infinite() {
        return None;
    }
    let mut total = cost + vhat;

    if depth_left > 1 {
        let mut advanced = history.clone();
        advanced.add_fuel(res.outputs.fuel_mass_kg);
        advanced.observe(frozen_speed, frozen_dist.aux_power_w, position_next, stats);

        let shaft = params.shaft_speed(frozen_dist);
        let mut cands = Vec::new();
        candidate_inputs(res.next.engine_on, shaft, cfg.torque_candidates, params, &mut cands);
        let mut best_tail: Option<(f64, ControlInput)> = None;
        for cand in &cands {
            let Some(tail) = sequence_cost(
                res.next,
                res.hsg_remaining_s,
                &advanced,
                position_next,
                stage + 1,
                frozen_speed,
                frozen_dist,
                cand,
                terminal,
                stats,
                params,
                cfg,
                depth_left - 1,
            ) else {
                continue;
            };
            match &best_tail {
                None => best_tail = Some((tail, *cand)),
                Some((bc, bi)) => {
                    if candidate_beats(tail, cand, *bc, bi, TIE_EPS_GAL) {
                        best_tail = Some((tail, *cand));
                    }
                }
            }
        }
        total += best_tail?.0;
    }
    Some(total)
}
