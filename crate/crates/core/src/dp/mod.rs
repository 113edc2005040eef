//! Offline trip optimizer: backward Bellman recursion on a
//! (stage × SOC × engine-status) lattice.
//!
//! Stage count equals the trip sample count; the terminal layer is
//! identically zero. Values interpolate piecewise-linearly over the SOC
//! grid and exactly over the binary engine dimension. Infeasible cells hold
//! `f64::INFINITY`; interpolation between a finite and an infinite value
//! saturates to infinity, so infeasibility propagates conservatively.
//!
//! Backups within one stage are independent across cells (each reads only
//! the immutable next layer) and run in parallel; stages are strictly
//! sequential. The forward rollout re-solves the one-cell minimization at
//! the continuous state (no grid-snap of the argmin) while walking the real
//! plant, so the reported optimal cost uses the same accounting as every
//! closed-loop controller.

mod brute;
mod io;

pub use brute::{enumerate_optimal, MAX_ORACLE_STAGES};
pub use io::{load_table, load_trajectory, save_table, save_trajectory, TRAJECTORY_CSV_HEADER};

use rayon::prelude::*;
use thiserror::Error;

use crate::powertrain::{
    candidate_beats, candidate_inputs, fallback_input, step, step_model, step_strict,
    ControlInput, Disturbance, PowertrainParams, PowertrainState, StepOutputs,
};
use crate::trip::{RouteStats, SimHistory, Trip};

/// Tie band for argmin selection, gallons-equivalent.
pub const TIE_EPS_GAL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DpError {
    #[error("trip is infeasible from the given initial state")]
    InfeasibleTrip,
    #[error("trip sample time {trip_s} s does not match params sample time {params_s} s")]
    SampleTimeMismatch { trip_s: f64, params_s: f64 },
    #[error("initial SOC {0} outside [soc_min, soc_max]")]
    BadInitialState(f64),
    #[error("invalid grid: {0}")]
    BadGrid(String),
    #[error("value table io: {0}")]
    Io(String),
}

/// Discretization of the DP problem.
#[derive(Clone, Debug, PartialEq)]
pub struct DpGrid {
    /// Strictly increasing SOC points spanning [soc_min, soc_max].
    pub soc_points: Vec<f64>,
    /// Engine-torque candidates per cell.
    pub torque_points: usize,
}

impl DpGrid {
    pub const DEFAULT_SOC_POINTS: usize = 201;
    pub const DEFAULT_TORQUE_POINTS: usize = 21;

    /// Uniform SOC grid over the params' SOC window.
    pub fn uniform(params: &PowertrainParams, soc_count: usize, torque_points: usize) -> DpGrid {
        let n = soc_count.max(2);
        let soc_points = (0..n)
            .map(|i| {
                params.soc_min
                    + (params.soc_max - params.soc_min) * (i as f64) / ((n - 1) as f64)
            })
            .collect();
        DpGrid { soc_points, torque_points: torque_points.max(2) }
    }

    pub fn default_for(params: &PowertrainParams) -> DpGrid {
        Self::uniform(params, Self::DEFAULT_SOC_POINTS, Self::DEFAULT_TORQUE_POINTS)
    }

    pub fn validate(&self, params: &PowertrainParams) -> Result<(), DpError> {
        if self.soc_points.len() < 2 {
            return Err(DpError::BadGrid("need at least 2 SOC points".into()));
        }
        if self.soc_points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DpError::BadGrid("SOC points must be strictly increasing".into()));
        }
        let lo = *self.soc_points.first().unwrap();
        let hi = *self.soc_points.last().unwrap();
        if (lo - params.soc_min).abs() > 1e-9 || (hi - params.soc_max).abs() > 1e-9 {
            return Err(DpError::BadGrid("SOC grid must span [soc_min, soc_max]".into()));
        }
        if self.torque_points < 2 {
            return Err(DpError::BadGrid("need at least 2 torque points".into()));
        }
        Ok(())
    }
}

/// Optimal cost-to-go over the lattice, plus the per-cell argmin input.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    pub soc_points: Vec<f64>,
    /// Number of transitions; the table holds `stage_count + 1` value layers.
    pub stage_count: usize,
    values: Vec<f64>,
    argmin_torque: Vec<f64>,
    argmin_switch: Vec<u8>,
}

impl ValueTable {
    fn new_empty(soc_points: Vec<f64>, stage_count: usize) -> ValueTable {
        let nsoc = soc_points.len();
        let mut values = vec![f64::INFINITY; (stage_count + 1) * nsoc * 2];
        // terminal layer identically zero
        for v in values[stage_count * nsoc * 2..].iter_mut() {
            *v = 0.0;
        }
        ValueTable {
            soc_points,
            stage_count,
            values,
            argmin_torque: vec![0.0; stage_count * nsoc * 2],
            argmin_switch: vec![0; stage_count * nsoc * 2],
        }
    }

    pub(crate) fn from_raw(
        soc_points: Vec<f64>,
        stage_count: usize,
        values: Vec<f64>,
        argmin_torque: Vec<f64>,
        argmin_switch: Vec<u8>,
    ) -> ValueTable {
        ValueTable { soc_points, stage_count, values, argmin_torque, argmin_switch }
    }

    fn nsoc(&self) -> usize {
        self.soc_points.len()
    }

    fn idx(&self, stage: usize, si: usize, engine_on: bool) -> usize {
        (stage * self.nsoc() + si) * 2 + engine_on as usize
    }

    /// Stored value at a lattice cell.
    pub fn value(&self, stage: usize, si: usize, engine_on: bool) -> f64 {
        self.values[self.idx(stage, si, engine_on)]
    }

    /// Layer slice for one stage, laid out `[soc][engine]`.
    pub fn layer(&self, stage: usize) -> &[f64] {
        let n = self.nsoc() * 2;
        &self.values[stage * n..(stage + 1) * n]
    }

    pub fn argmin(&self, stage: usize, si: usize, engine_on: bool) -> ControlInput {
        let i = self.idx(stage, si, engine_on);
        ControlInput {
            engine_torque_nm: self.argmin_torque[i],
            engine_switch: self.argmin_switch[i] != 0,
        }
    }

    pub(crate) fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn raw_argmin(&self) -> (&[f64], &[u8]) {
        (&self.argmin_torque, &self.argmin_switch)
    }

    /// Piecewise-linear interpolation of a layer over SOC, exact in the
    /// engine dimension.
    pub fn interp_value(&self, stage: usize, soc: f64, engine_on: bool) -> f64 {
        interp_layer(&self.soc_points, self.layer(stage), soc, engine_on)
    }
}

/// Interpolate one value layer (`[soc][engine]` layout) over SOC.
///
/// Queries exactly on a grid point return the stored value (infinity for an
/// infeasible cell). Inside a segment with exactly one infeasible endpoint,
/// the finite endpoint's value extends into the segment: actual transition
/// feasibility is enforced exactly per candidate, so letting an isolated
/// infeasible cell poison its neighborhood would only spread spurious
/// infeasibility across the lattice.
pub fn interp_layer(soc_points: &[f64], layer: &[f64], soc: f64, engine_on: bool) -> f64 {
    let n = soc_points.len();
    let e = engine_on as usize;
    let at = |si: usize| layer[si * 2 + e];
    if soc <= soc_points[0] {
        return at(0);
    }
    if soc >= soc_points[n - 1] {
        return at(n - 1);
    }
    let hi = soc_points.partition_point(|p| *p <= soc);
    let lo = hi - 1;
    if soc == soc_points[lo] {
        return at(lo);
    }
    let (va, vb) = (at(lo), at(hi));
    match (va.is_infinite(), vb.is_infinite()) {
        (true, true) => f64::INFINITY,
        (true, false) => vb,
        (false, true) => va,
        (false, false) => {
            let t = (soc - soc_points[lo]) / (soc_points[hi] - soc_points[lo]);
            va + t * (vb - va)
        }
    }
}

/// Per-step stage cost: fuel power plus internal battery power, converted
/// to gallons-equivalent. Negative during net regeneration.
pub fn stage_cost_from_outputs(outputs: &StepOutputs, params: &PowertrainParams) -> f64 {
    (outputs.fuel_power_w + outputs.internal_power_w) * params.sample_time_s
        / params.joules_per_gallon()
}

/// Stage cost of applying `input` at `(state, dist)` under the DP's Markov
/// transition model. Errors when the input is infeasible there.
pub fn stage_cost(
    state: &PowertrainState,
    input: &ControlInput,
    dist: &Disturbance,
    params: &PowertrainParams,
) -> Result<f64, DpError> {
    let res = step_model(state, input, dist, params).map_err(|_| DpError::InfeasibleTrip)?;
    Ok(stage_cost_from_outputs(&res.outputs, params))
}

/// Minimize one cell: returns the optimal (cost-to-go, input) over the
/// candidate grid, or `(INFINITY, engine-off)` when nothing is feasible.
fn backup_cell(
    state: &PowertrainState,
    dist: &Disturbance,
    params: &PowertrainParams,
    soc_points: &[f64],
    next_layer: &[f64],
    candidates: &[ControlInput],
) -> (f64, ControlInput) {
    let mut best_cost = f64::INFINITY;
    let mut best_input = ControlInput::ENGINE_OFF;
    for cand in candidates {
        let res = match step_model(state, cand, dist, params) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let v_next = interp_layer(soc_points, next_layer, res.next.soc, res.next.engine_on);
        if v_next.is_infinite() {
            continue;
        }
        let total = stage_cost_from_outputs(&res.outputs, params) + v_next;
        if candidate_beats(total, cand, best_cost, &best_input, TIE_EPS_GAL) {
            best_cost = total;
            best_input = *cand;
        }
    }
    (best_cost, best_input)
}

/// Compute value layer `k` from layer `k+1`. Exposed for the consistency
/// audit; `solve_dp` drives it backwards over all stages.
pub fn bellman_backup(
    k: usize,
    next_layer: &[f64],
    trip: &Trip,
    grid: &DpGrid,
    params: &PowertrainParams,
) -> (Vec<f64>, Vec<f64>, Vec<u8>) {
    let dist = trip.disturbance(k);
    let shaft = params.shaft_speed(&dist);
    let mut cands_off = Vec::new();
    let mut cands_on = Vec::new();
    candidate_inputs(false, shaft, grid.torque_points, params, &mut cands_off);
    candidate_inputs(true, shaft, grid.torque_points, params, &mut cands_on);

    let nsoc = grid.soc_points.len();
    let cells: Vec<(f64, ControlInput)> = (0..nsoc * 2)
        .into_par_iter()
        .map(|cell| {
            let si = cell / 2;
            let engine_on = cell % 2 == 1;
            let state = PowertrainState::new(grid.soc_points[si], engine_on);
            let cands = if engine_on { &cands_on } else { &cands_off };
            backup_cell(&state, &dist, params, &grid.soc_points, next_layer, cands)
        })
        .collect();

    let mut values = Vec::with_capacity(nsoc * 2);
    let mut torque = Vec::with_capacity(nsoc * 2);
    let mut switch = Vec::with_capacity(nsoc * 2);
    for (v, input) in cells {
        values.push(v);
        torque.push(input.engine_torque_nm);
        switch.push(input.engine_switch as u8);
    }
    (values, torque, switch)
}

/// Re-evaluate the minimization at one cell against the stored next layer.
/// Bitwise-reproduces the stored value (used by the consistency audit).
pub fn reevaluate_cell(
    table: &ValueTable,
    trip: &Trip,
    params: &PowertrainParams,
    torque_points: usize,
    stage: usize,
    si: usize,
    engine_on: bool,
) -> f64 {
    let dist = trip.disturbance(stage);
    let shaft = params.shaft_speed(&dist);
    let mut cands = Vec::new();
    candidate_inputs(engine_on, shaft, torque_points, params, &mut cands);
    let state = PowertrainState::new(table.soc_points[si], engine_on);
    backup_cell(&state, &dist, params, &table.soc_points, table.layer(stage + 1), &cands).0
}

/// One step of the optimal trajectory rollout.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryStep {
    pub state: PowertrainState,
    pub input: ControlInput,
    pub outputs: StepOutputs,
    /// True plant stage cost, gallons-equivalent.
    pub cost_gal: f64,
    /// V interpolated at this step's state.
    pub value_gal: f64,
    pub position_m: f64,
}

/// DP-optimal state/input/cost trajectory for one trip.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub trip_id: String,
    pub route_id: String,
    pub sample_time_s: f64,
    pub steps: Vec<TrajectoryStep>,
    pub terminal_state: PowertrainState,
    pub terminal_position_m: f64,
}

impl Trajectory {
    /// Total rollout cost with true plant accounting.
    pub fn total_cost_gal(&self) -> f64 {
        self.steps.iter().map(|s| s.cost_gal).sum()
    }

    pub fn infeasible_steps(&self) -> usize {
        self.steps.iter().filter(|s| s.outputs.infeasible).count()
    }
}

/// Full DP solution: value table plus the forward rollout.
#[derive(Clone, Debug)]
pub struct DpSolution {
    pub table: ValueTable,
    pub trajectory: Trajectory,
    /// V_0 interpolated at the initial state.
    pub v0_gal: f64,
}

/// Solve the trip's optimal control problem: backward sweep over all stages
/// then a forward rollout from `x0`.
pub fn solve_dp(
    trip: &Trip,
    params: &PowertrainParams,
    grid: &DpGrid,
    x0: PowertrainState,
) -> Result<DpSolution, DpError> {
    grid.validate(params)?;
    if ((trip.sample_time_s - params.sample_time_s) / params.sample_time_s).abs() > 1e-9 {
        return Err(DpError::SampleTimeMismatch {
            trip_s: trip.sample_time_s,
            params_s: params.sample_time_s,
        });
    }
    if x0.soc < params.soc_min - 1e-12 || x0.soc > params.soc_max + 1e-12 {
        return Err(DpError::BadInitialState(x0.soc));
    }

    let n = trip.samples.len();
    let mut table = ValueTable::new_empty(grid.soc_points.clone(), n);
    for k in (0..n).rev() {
        let (values, torque, switch) = {
            let next = table.layer(k + 1);
            bellman_backup(k, next, trip, grid, params)
        };
        let nsoc = table.nsoc();
        let base = k * nsoc * 2;
        table.values[base..base + nsoc * 2].copy_from_slice(&values);
        table.argmin_torque[base..base + nsoc * 2].copy_from_slice(&torque);
        table.argmin_switch[base..base + nsoc * 2].copy_from_slice(&switch);
    }

    let v0 = table.interp_value(0, x0.soc, x0.engine_on);
    if v0.is_infinite() {
        return Err(DpError::InfeasibleTrip);
    }

    let trajectory = rollout(&table, trip, params, grid.torque_points, x0);
    Ok(DpSolution { table, trajectory, v0_gal: v0 })
}

/// Greedy forward pass: at each step re-solve the one-cell minimization at
/// the continuous state against the stored next layer, then advance the real
/// plant (HSG draw spread over steps) with the chosen input.
pub fn rollout(
    table: &ValueTable,
    trip: &Trip,
    params: &PowertrainParams,
    torque_points: usize,
    x0: PowertrainState,
) -> Trajectory {
    let n = trip.samples.len();
    let mut state = x0;
    let mut hsg_remaining = 0.0;
    let mut steps = Vec::with_capacity(n);
    let mut cands = Vec::new();

    for k in 0..n {
        let dist = trip.disturbance(k);
        let shaft = params.shaft_speed(&dist);
        candidate_inputs(state.engine_on, shaft, torque_points, params, &mut cands);

        let mut best: Option<(f64, ControlInput)> = None;
        for cand in &cands {
            let res = match step_strict(&state, cand, &dist, params, hsg_remaining) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let v_next = table.interp_value(k + 1, res.next.soc, res.next.engine_on);
            if v_next.is_infinite() {
                continue;
            }
            let total = stage_cost_from_outputs(&res.outputs, params) + v_next;
            match &best {
                None => best = Some((total, *cand)),
                Some((bc, bi)) => {
                    if candidate_beats(total, cand, *bc, bi, TIE_EPS_GAL) {
                        best = Some((total, *cand));
                    }
                }
            }
        }
        let input = best.map(|(_, i)| i).unwrap_or_else(|| fallback_input(&state, &dist, params));

        let res = step(&state, &input, &dist, params, hsg_remaining);
        steps.push(TrajectoryStep {
            state,
            input,
            outputs: res.outputs,
            cost_gal: stage_cost_from_outputs(&res.outputs, params),
            value_gal: table.interp_value(k, state.soc, state.engine_on),
            position_m: trip.samples[k].position_m,
        });
        state = res.next;
        hsg_remaining = res.hsg_remaining_s;
    }

    Trajectory {
        trip_id: trip.trip_id.clone(),
        route_id: trip.route_id.clone(),
        sample_time_s: trip.sample_time_s,
        steps,
        terminal_state: state,
        terminal_position_m: trip.total_distance_m(),
    }
}

/// One training pair for the value-function learner.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSample {
    pub trip_id: String,
    pub step: usize,
    pub bin: usize,
    pub features: crate::trip::FeatureVector,
    pub value_gal: f64,
}

/// Walk the optimal trajectory and emit one `(bin, features, V)` sample per
/// time step, terminal included (with value exactly zero). Exogenous
/// history comes from the trip signals, powertrain history from the
/// trajectory, `est_time_left` from the supplied route statistics.
pub fn values_on_trajectory(
    trajectory: &Trajectory,
    trip: &Trip,
    stats: &RouteStats,
) -> Vec<TrainingSample> {
    let n = trajectory.steps.len();
    assert_eq!(n, trip.samples.len(), "trajectory and trip must align");
    let mut history = SimHistory::new(trip.sample_time_s);
    let mut out = Vec::with_capacity(n + 1);
    for (k, step) in trajectory.steps.iter().enumerate() {
        let s = &trip.samples[k];
        history.observe(s.vehicle_speed_mps, s.aux_power_w, s.position_m, stats);
        out.push(TrainingSample {
            trip_id: trajectory.trip_id.clone(),
            step: k,
            bin: stats.bins.bin_for(s.position_m),
            features: history.features(&step.state),
            value_gal: step.value_gal,
        });
        history.add_fuel(step.outputs.fuel_mass_kg);
    }
    // terminal sample: repeat the last exogenous signals, value is zero
    if let Some(last) = trip.samples.last() {
        history.observe(
            last.vehicle_speed_mps,
            last.aux_power_w,
            trajectory.terminal_position_m,
            stats,
        );
        out.push(TrainingSample {
            trip_id: trajectory.trip_id.clone(),
            step: n,
            bin: stats.bins.bin_for(trajectory.terminal_position_m),
            features: history.features(&trajectory.terminal_state),
            value_gal: 0.0,
        });
    }
    out
}

#[cfg(test)]
pub(crate) mod tests;
