//! Exhaustive-enumeration oracle for toy instances.
//!
//! Walks every input sequence over the same per-state candidate grids the
//! DP uses, advancing the real plant (strict semantics, HSG draw threaded)
//! and summing true stage costs. Independent of the value-table machinery:
//! no interpolation, no stored layers. Exponential — guard rails reject
//! anything beyond toy size.

use crate::powertrain::{
    candidate_inputs, step_strict, ControlInput, PowertrainParams, PowertrainState,
};
use crate::trip::Trip;

use super::stage_cost_from_outputs;

/// Largest stage count the oracle accepts.
pub const MAX_ORACLE_STAGES: usize = 14;

/// Minimum-cost input sequence by exhaustive enumeration, or `None` when no
/// feasible sequence exists. Panics if the instance exceeds toy size.
pub fn enumerate_optimal(
    trip: &Trip,
    params: &PowertrainParams,
    torque_points: usize,
    x0: PowertrainState,
) -> Option<(f64, Vec<ControlInput>)> {
    let n = trip.samples.len();
    assert!(
        n <= MAX_ORACLE_STAGES,
        "enumeration oracle limited to {MAX_ORACLE_STAGES} stages, got {n}"
    );

    let mut best: Option<(f64, Vec<ControlInput>)> = None;
    let mut prefix: Vec<ControlInput> = Vec::with_capacity(n);
    search(trip, params, torque_points, x0, 0.0, 0, 0.0, &mut prefix, &mut best);
    best
}

#[allow(clippy::too_many_arguments)]
fn search(
    trip: &Trip,
    params: &PowertrainParams,
    torque_points: usize,
    state: PowertrainState,
    hsg_remaining_s: f64,
    k: usize,
    cost_so_far: f64,
    prefix: &mut Vec<ControlInput>,
    best: &mut Option<(f64, Vec<ControlInput>)>,
) {
    if k == trip.samples.len() {
        let better = match best {
            None => true,
            Some((c, _)) => cost_so_far < *c,
        };
        if better {
            *best = Some((cost_so_far, prefix.clone()));
        }
        return;
    }
    let dist = trip.disturbance(k);
    let shaft = params.shaft_speed(&dist);
    let mut cands = Vec::new();
    candidate_inputs(state.engine_on, shaft, torque_points, params, &mut cands);
    for cand in cands {
        let res = match step_strict(&state, &cand, &dist, params, hsg_remaining_s) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let c = stage_cost_from_outputs(&res.outputs, params);
        prefix.push(cand);
        search(
            trip,
            params,
            torque_points,
            res.next,
            res.hsg_remaining_s,
            k + 1,
            cost_so_far + c,
            prefix,
            best,
        );
        prefix.pop();
    }
}
