use emslab::dp::{solve_dp, DpGrid};
use emslab::powertrain::{PowertrainParams, PowertrainState};
use emslab::trip::{generate_trip, CycleSpec};
use std::time::Instant;

fn main() {
    let params = PowertrainParams::synthetic_default();
    let spec = CycleSpec::load(std::path::Path::new("configs/cycles/hillcrest.toml")).unwrap();
    let trip = generate_trip(&spec, 1).unwrap();
    println!("trip: {} samples, {:.1} m, {:.0} s", trip.samples.len(), trip.total_distance_m(), trip.duration_s());
    let grid = DpGrid::default_for(&params);
    let x0 = PowertrainState::new(0.825, false);
    let t = Instant::now();
    let sol = solve_dp(&trip, &params, &grid, x0).unwrap();
    println!("dp solve: {:.2} s; cost {:.4} gal; V0 {:.4}; infeasible steps {}",
        t.elapsed().as_secs_f64(), sol.trajectory.total_cost_gal(), sol.v0_gal, sol.trajectory.infeasible_steps());
    println!("final soc {:.4}, engine starts {}", sol.trajectory.terminal_state.soc,
        sol.trajectory.steps.windows(2).filter(|w| !w[0].state.engine_on && w[1].state.engine_on).count());
}
