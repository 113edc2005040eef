//! Discrete-time parallel-hybrid powertrain model.
//!
//! Pre-transmission architecture: engine couples to the gearbox input shaft
//! through a clutch, the motor sits on the same shaft, the HSG only cranks
//! the engine. The clutch is closed exactly when the engine is on, so the
//! engine and motor share the shaft speed `axle_speed * gear_ratio`.
//!
//! Sign conventions: positive battery power discharges the pack; negative
//! mechanical motor power (regeneration) charges it. Engine torque is
//! commanded only while the switch is on; the commanded torque takes effect
//! only while the engine state is on (the start step itself transmits
//! nothing — the clutch closes with the state update).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interp::{Table1D, Table2D};

pub const GEAR_COUNT: usize = 6;

/// Tolerance for strict torque-bound feasibility checks (N·m scale).
const TORQUE_EPS: f64 = 1e-9;
/// Tolerance for SOC bound checks.
const SOC_EPS: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PowertrainError {
    #[error("battery cannot deliver {requested_w:.1} W at soc {soc:.4} (discriminant negative)")]
    PowerLimitExceeded { requested_w: f64, soc: f64 },
    #[error("no feasible input for the given state and demand")]
    NoFeasibleInput,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamsError {
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error("failed to read parameter file: {0}")]
    Io(String),
    #[error("failed to parse parameter file: {0}")]
    Parse(String),
}

pub const SCHEMA_VERSION: u32 = 1;

/// All constants and tabulated maps of the powertrain model.
///
/// The shipped defaults are a synthetic mid-size PHEV calibration; the
/// real manufacturer maps are not public. Units are documented per field
/// and repeated in the parameter file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowertrainParams {
    /// Battery capacity Q_b, ampere-seconds.
    pub battery_capacity_as: f64,
    /// Open-circuit voltage vs SOC, volts.
    pub voc_map: Table1D,
    /// Internal resistance vs SOC, ohms.
    pub rb_map: Table1D,
    /// Motor efficiency vs (torque N·m, speed rad/s), in (0, 1].
    pub motor_eff_map: Table2D,
    /// Engine efficiency vs (torque N·m, speed rad/s), in (0, 1].
    pub engine_eff_map: Table2D,
    /// Fuel lower heating value, J/kg.
    pub fuel_lhv_j_per_kg: f64,
    /// Gear ratios g_1..g_6 (input shaft speed / axle speed), final drive included.
    pub gear_ratios: [f64; GEAR_COUNT],
    /// Transmission efficiency, constant in (0, 1].
    pub trans_eff: f64,
    /// Clutch efficiency applied to engine torque, constant in (0, 1].
    pub clutch_eff: f64,
    /// Constant HSG power draw during an engine start, watts.
    pub hsg_start_power_w: f64,
    /// Duration of the HSG draw per start event, seconds (0.5 exactly).
    pub hsg_start_duration_s: f64,
    /// Engine torque bounds vs engine speed rad/s, N·m.
    pub engine_torque_min_map: Table1D,
    pub engine_torque_max_map: Table1D,
    /// Motor torque bounds vs motor speed rad/s, N·m (min is the regen bound, ≤ 0).
    pub motor_torque_min_map: Table1D,
    pub motor_torque_max_map: Table1D,
    /// SOC operating window.
    pub soc_min: f64,
    pub soc_max: f64,
    /// Control/simulation sampling time t_s, seconds.
    pub sample_time_s: f64,
    /// Energy equivalence for MPGe, kWh per gallon.
    pub kwh_per_gallon: f64,
}

/// On-disk wrapper adding the schema version tag.
#[derive(Serialize, Deserialize)]
struct ParamsFile {
    schema_version: u32,
    #[serde(flatten)]
    params: PowertrainParams,
}

impl PowertrainParams {
    pub fn load(path: &std::path::Path) -> Result<Self, ParamsError> {
        let text = std::fs::read_to_string(path).map_err(|e| ParamsError::Io(e.to_string()))?;
        let file: ParamsFile =
            toml::from_str(&text).map_err(|e| ParamsError::Parse(e.to_string()))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(ParamsError::SchemaVersion(file.schema_version));
        }
        file.params.validate()?;
        Ok(file.params)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ParamsError> {
        let file = ParamsFile { schema_version: SCHEMA_VERSION, params: self.clone() };
        let text = toml::to_string(&file).map_err(|e| ParamsError::Parse(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| ParamsError::Io(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        let bad = |msg: &str| Err(ParamsError::Invalid(msg.to_string()));
        if !(self.battery_capacity_as > 0.0) {
            return bad("battery_capacity_as must be positive");
        }
        if !(self.fuel_lhv_j_per_kg > 0.0) {
            return bad("fuel_lhv_j_per_kg must be positive");
        }
        if self.gear_ratios.iter().any(|g| !(*g > 0.0)) {
            return bad("gear_ratios must be positive");
        }
        for (name, eff) in [("trans_eff", self.trans_eff), ("clutch_eff", self.clutch_eff)] {
            if !(eff > 0.0 && eff <= 1.0) {
                return bad(&format!("{name} must be in (0, 1]"));
            }
        }
        if !(self.hsg_start_power_w >= 0.0) {
            return bad("hsg_start_power_w must be nonnegative");
        }
        if self.hsg_start_duration_s != 0.5 {
            return bad("hsg_start_duration_s must be exactly 0.5");
        }
        if !(self.soc_min < self.soc_max && self.soc_min >= 0.0 && self.soc_max <= 1.0) {
            return bad("require 0 <= soc_min < soc_max <= 1");
        }
        if !(self.sample_time_s > 0.0) {
            return bad("sample_time_s must be positive");
        }
        if !(self.kwh_per_gallon > 0.0) {
            return bad("kwh_per_gallon must be positive");
        }
        for eff_map in [&self.motor_eff_map, &self.engine_eff_map] {
            // spot-check map corners and centers; full grids are validated on build
            for &(t, w) in &[(-400.0, 0.0), (0.0, 0.0), (200.0, 250.0), (400.0, 500.0)] {
                let e = eff_map.eval(t, w);
                if !(e > 0.0 && e <= 1.0) {
                    return bad("efficiency maps must stay within (0, 1]");
                }
            }
        }
        Ok(())
    }

    /// Synthetic mid-size PHEV calibration used as the built-in default.
    pub fn synthetic_default() -> Self {
        let speed_grid: Vec<f64> = vec![0.0, 50.0, 100.0, 150.0, 200.0, 250.0, 300.0, 350.0, 400.0, 450.0];
        let motor_torque_grid: Vec<f64> =
            vec![-320.0, -240.0, -160.0, -80.0, -20.0, 0.0, 20.0, 80.0, 160.0, 240.0, 320.0];
        let motor_eff = |t: f64, w: f64| -> f64 {
            let dt = (t.abs() - 90.0) / 160.0;
            let dw = (w - 230.0) / 220.0;
            0.80 + 0.12 * (-(dt * dt + dw * dw)).exp()
        };
        let motor_eff_map = Table2D::new(
            motor_torque_grid.clone(),
            speed_grid.clone(),
            motor_torque_grid
                .iter()
                .map(|&t| speed_grid.iter().map(|&w| motor_eff(t, w)).collect())
                .collect(),
        )
        .expect("motor efficiency grid");

        let engine_torque_grid: Vec<f64> = vec![0.0, 25.0, 50.0, 75.0, 100.0, 125.0, 150.0, 170.0];
        let engine_speed_grid: Vec<f64> = vec![0.0, 75.0, 150.0, 225.0, 300.0, 375.0, 450.0];
        let engine_eff = |t: f64, w: f64| -> f64 {
            let dt = (t - 110.0) / 130.0;
            let dw = (w - 280.0) / 300.0;
            0.10 + 0.26 * (-(dt * dt + dw * dw)).exp()
        };
        let engine_eff_map = Table2D::new(
            engine_torque_grid.clone(),
            engine_speed_grid.clone(),
            engine_torque_grid
                .iter()
                .map(|&t| engine_speed_grid.iter().map(|&w| engine_eff(t, w)).collect())
                .collect(),
        )
        .expect("engine efficiency grid");

        let bound_speeds = vec![0.0, 160.0, 200.0, 250.0, 300.0, 350.0, 400.0, 450.0];
        // 300 N·m to 160 rad/s, then 48 kW constant power.
        let motor_max: Vec<f64> = bound_speeds
            .iter()
            .map(|&w| if w <= 160.0 { 300.0 } else { 48_000.0 / w })
            .collect();
        let motor_min: Vec<f64> = motor_max.iter().map(|t| -t).collect();

        PowertrainParams {
            battery_capacity_as: 18_000.0,
            voc_map: Table1D::new(vec![0.0, 1.0], vec![340.0, 400.0]).unwrap(),
            rb_map: Table1D::new(vec![0.0, 1.0], vec![0.12, 0.09]).unwrap(),
            motor_eff_map,
            engine_eff_map,
            fuel_lhv_j_per_kg: 43.5e6,
            gear_ratios: [13.0, 8.4, 5.8, 4.1, 3.1, 2.5],
            trans_eff: 0.96,
            clutch_eff: 0.98,
            hsg_start_power_w: 8000.0,
            hsg_start_duration_s: 0.5,
            engine_torque_min_map: Table1D::constant(0.0),
            engine_torque_max_map: Table1D::new(
                vec![0.0, 100.0, 200.0, 300.0, 400.0, 450.0],
                vec![120.0, 150.0, 160.0, 155.0, 140.0, 130.0],
            )
            .unwrap(),
            motor_torque_min_map: Table1D::new(bound_speeds.clone(), motor_min).unwrap(),
            motor_torque_max_map: Table1D::new(bound_speeds, motor_max).unwrap(),
            soc_min: 0.15,
            soc_max: 0.90,
            sample_time_s: 0.2,
            kwh_per_gallon: 33.7,
        }
    }

    pub fn gear_ratio(&self, gear: u8) -> f64 {
        let idx = (gear as usize).clamp(1, GEAR_COUNT) - 1;
        self.gear_ratios[idx]
    }

    /// Gearbox input-shaft speed (motor speed; engine speed when the clutch
    /// is closed), rad/s.
    pub fn shaft_speed(&self, dist: &Disturbance) -> f64 {
        dist.axle_speed_radps * self.gear_ratio(dist.gear)
    }

    /// Joules of one gallon-equivalent.
    pub fn joules_per_gallon(&self) -> f64 {
        self.kwh_per_gallon * 3.6e6
    }
}

/// DP/MPC state x = [SOC, engine status].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowertrainState {
    pub soc: f64,
    pub engine_on: bool,
}

impl PowertrainState {
    pub fn new(soc: f64, engine_on: bool) -> Self {
        PowertrainState { soc, engine_on }
    }
}

/// Control input u = [T_e, engine switch].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlInput {
    pub engine_torque_nm: f64,
    pub engine_switch: bool,
}

impl ControlInput {
    pub const ENGINE_OFF: ControlInput =
        ControlInput { engine_torque_nm: 0.0, engine_switch: false };

    pub fn engine_on(torque_nm: f64) -> Self {
        ControlInput { engine_torque_nm: torque_nm, engine_switch: true }
    }

    /// Torque actually commanded: zero unless the switch is on.
    pub fn effective_torque(&self) -> f64 {
        if self.engine_switch {
            self.engine_torque_nm
        } else {
            0.0
        }
    }
}

/// Exogenous signals per step: w = [P_aux, T_d] plus the known trip signals
/// (axle speed, gear) that the torque and speed relations need.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    pub aux_power_w: f64,
    pub wheel_torque_nm: f64,
    pub axle_speed_radps: f64,
    pub gear: u8,
}

impl Disturbance {
    pub const COAST: Disturbance =
        Disturbance { aux_power_w: 0.0, wheel_torque_nm: 0.0, axle_speed_radps: 0.0, gear: 1 };
}

/// Per-step outputs of the plant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepOutputs {
    /// Fuel consumed this step, kg.
    pub fuel_mass_kg: f64,
    /// Fuel power P_f, W.
    pub fuel_power_w: f64,
    /// Battery terminal power P_b, W (positive discharges).
    pub battery_power_w: f64,
    /// Internal battery power P_q, W (terminal power plus resistive loss).
    pub internal_power_w: f64,
    /// Motor torque T_m actually applied, N·m.
    pub motor_torque_nm: f64,
    /// Friction-brake torque absorbed at the input shaft, N·m (≤ 0).
    pub friction_torque_nm: f64,
    /// HSG energy drawn this step, J.
    pub hsg_energy_j: f64,
    /// Set when the commanded input violated a constraint and was clamped.
    pub infeasible: bool,
}

/// Result of advancing the plant one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepResult {
    pub next: PowertrainState,
    pub outputs: StepOutputs,
    /// Seconds of HSG startup draw still pending after this step.
    pub hsg_remaining_s: f64,
}

/// Why a strict transition was rejected.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Infeasibility {
    EngineTorque,
    MotorTorque,
    BatteryPower,
    SocLow,
    SocHigh,
}

// ---------------------------------------------------------------------------
// Elementary operations
// ---------------------------------------------------------------------------

/// Motor torque solving the traction balance
/// `T_d = g_i * eta_t * (T_m + c_on * eta_c * T_e)` for T_m.
pub fn motor_torque_required(
    input: &ControlInput,
    dist: &Disturbance,
    params: &PowertrainParams,
    engine_on: bool,
) -> f64 {
    let g = params.gear_ratio(dist.gear);
    let base = dist.wheel_torque_nm / (g * params.trans_eff);
    if engine_on {
        base - params.clutch_eff * input.effective_torque()
    } else {
        base
    }
}

/// Battery terminal power P_b = P_m + P_HSG + P_aux, with the motor power
/// converted through the efficiency map. Regeneration multiplies by the
/// efficiency instead of dividing, so losses always dissipate.
pub fn electrical_power(
    motor_torque_nm: f64,
    motor_speed_radps: f64,
    hsg_power_w: f64,
    aux_power_w: f64,
    params: &PowertrainParams,
) -> f64 {
    let mech = motor_torque_nm * motor_speed_radps;
    let eff = params.motor_eff_map.eval(motor_torque_nm, motor_speed_radps);
    let motor_electrical = if mech > 0.0 {
        mech / eff
    } else if mech < 0.0 {
        mech * eff
    } else {
        0.0
    };
    motor_electrical + hsg_power_w + aux_power_w
}

struct BatterySolve {
    internal_power_w: f64,
    soc_next: f64,
}

fn solve_battery(
    soc: f64,
    battery_power_w: f64,
    params: &PowertrainParams,
) -> Result<BatterySolve, PowertrainError> {
    let voc = params.voc_map.eval(soc);
    let rb = params.rb_map.eval(soc);
    let mut disc = voc * voc - 4.0 * rb * battery_power_w;
    if disc < 0.0 {
        // absorb float fuzz exactly at the maximum-power boundary
        if disc > -voc * voc * 1e-12 {
            disc = 0.0;
        } else {
            return Err(PowertrainError::PowerLimitExceeded {
                requested_w: battery_power_w,
                soc,
            });
        }
    }
    let current_a = (voc - disc.sqrt()) / (2.0 * rb);
    let internal_power_w = voc * current_a;
    let soc_next = soc - params.sample_time_s * current_a / params.battery_capacity_as;
    Ok(BatterySolve { internal_power_w, soc_next })
}

/// One-step SOC update (Euler-discretized battery state equation).
pub fn soc_next(
    soc: f64,
    battery_power_w: f64,
    params: &PowertrainParams,
) -> Result<f64, PowertrainError> {
    Ok(solve_battery(soc, battery_power_w, params)?.soc_next)
}

/// Internal battery power P_q = V_oc * I: the discharge rate of stored
/// battery energy, used as the electricity term of the stage cost.
pub fn internal_battery_power(
    battery_power_w: f64,
    soc: f64,
    params: &PowertrainParams,
) -> Result<f64, PowertrainError> {
    Ok(solve_battery(soc, battery_power_w, params)?.internal_power_w)
}

/// Fuel power and mass rate for a commanded engine torque.
pub fn fuel_outputs(
    engine_torque_nm: f64,
    engine_speed_radps: f64,
    engine_on: bool,
    params: &PowertrainParams,
) -> (f64, f64) {
    if !engine_on {
        return (0.0, 0.0);
    }
    let mech = engine_torque_nm * engine_speed_radps;
    if mech == 0.0 {
        return (0.0, 0.0);
    }
    let eff = params.engine_eff_map.eval(engine_torque_nm, engine_speed_radps);
    let fuel_power = mech / eff;
    (fuel_power, fuel_power / params.fuel_lhv_j_per_kg)
}

// ---------------------------------------------------------------------------
// One-step transition
// ---------------------------------------------------------------------------

fn transition(
    state: &PowertrainState,
    input: &ControlInput,
    dist: &Disturbance,
    params: &PowertrainParams,
    hsg_avg_power_w: f64,
    hsg_energy_j: f64,
    clamp: bool,
) -> Result<StepResult, Infeasibility> {
    let shaft = params.shaft_speed(dist);
    let mut infeasible = false;
    let mut torque = input.effective_torque();

    // Engine torque bounds apply while the engine transmits (state on, switch on).
    if state.engine_on && input.engine_switch {
        let tmin = params.engine_torque_min_map.eval(shaft);
        let tmax = params.engine_torque_max_map.eval(shaft);
        if torque < tmin - TORQUE_EPS || torque > tmax + TORQUE_EPS {
            if !clamp {
                return Err(Infeasibility::EngineTorque);
            }
            torque = torque.clamp(tmin, tmax);
            infeasible = true;
        }
    }

    let cmd = ControlInput { engine_torque_nm: torque, engine_switch: input.engine_switch };
    let required_tm = motor_torque_required(&cmd, dist, params, state.engine_on);
    let motor_max = params.motor_torque_max_map.eval(shaft);
    let motor_min = params.motor_torque_min_map.eval(shaft);
    let mut motor_torque = required_tm;
    let mut friction = 0.0;
    if required_tm > motor_max + TORQUE_EPS {
        // traction deficit: the plant cannot meet the demand
        if !clamp {
            return Err(Infeasibility::MotorTorque);
        }
        motor_torque = motor_max;
        infeasible = true;
    } else if required_tm < motor_min {
        // braking beyond regen capability: friction brakes absorb the rest
        motor_torque = motor_min;
        friction = required_tm - motor_min;
    }

    let mut battery_power =
        electrical_power(motor_torque, shaft, hsg_avg_power_w, dist.aux_power_w, params);
    let mut solved = match solve_battery(state.soc, battery_power, params) {
        Ok(s) => s,
        Err(_) => {
            if !clamp {
                return Err(Infeasibility::BatteryPower);
            }
            infeasible = true;
            let voc = params.voc_map.eval(state.soc);
            let rb = params.rb_map.eval(state.soc);
            // deliver what the pack can; the motor under-delivers the rest
            battery_power = voc * voc / (4.0 * rb);
            solve_battery(state.soc, battery_power, params).expect("boundary power is deliverable")
        }
    };

    // Regen cutoff at a full battery: reduce motor regeneration until the
    // one-step SOC stays at the ceiling, friction brakes absorbing the rest.
    if solved.soc_next > params.soc_max + SOC_EPS && motor_torque < 0.0 {
        let solve_at = |t: f64| {
            let pb = electrical_power(t, shaft, hsg_avg_power_w, dist.aux_power_w, params);
            (pb, solve_battery(state.soc, pb, params).expect("reduced regen is deliverable"))
        };
        let (mut lo, mut hi) = (motor_torque, 0.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if solve_at(mid).1.soc_next <= params.soc_max {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        friction += motor_torque - hi;
        motor_torque = hi;
        let (pb, s) = solve_at(hi);
        battery_power = pb;
        solved = s;
    }

    let mut soc = solved.soc_next;
    if soc < params.soc_min - SOC_EPS {
        if !clamp {
            return Err(Infeasibility::SocLow);
        }
        soc = params.soc_min;
        infeasible = true;
    } else if soc > params.soc_max + SOC_EPS {
        if !clamp {
            return Err(Infeasibility::SocHigh);
        }
        soc = params.soc_max;
        infeasible = true;
    } else {
        soc = soc.clamp(params.soc_min, params.soc_max);
    }

    let (fuel_power, fuel_rate) = fuel_outputs(torque, shaft, state.engine_on, params);

    Ok(StepResult {
        next: PowertrainState { soc, engine_on: input.engine_switch },
        outputs: StepOutputs {
            fuel_mass_kg: fuel_rate * params.sample_time_s,
            fuel_power_w: fuel_power,
            battery_power_w: battery_power,
            internal_power_w: solved.internal_power_w,
            motor_torque_nm: motor_torque,
            friction_torque_nm: friction,
            hsg_energy_j,
            infeasible,
        },
        hsg_remaining_s: 0.0,
    })
}

fn is_crank(state: &PowertrainState, input: &ControlInput) -> bool {
    input.engine_switch && !state.engine_on
}

/// Advance the plant one step, spreading each engine-start HSG draw over
/// `hsg_start_duration / t_s` steps (the last step partial). The caller
/// threads `hsg_remaining_s` between steps; a fresh start resets it.
///
/// Never fails: constraint violations clamp the offending quantity and set
/// the `infeasible` flag so closed-loop runs always complete.
pub fn step(
    state: &PowertrainState,
    input: &ControlInput,
    dist: &Disturbance,
    params: &PowertrainParams,
    hsg_remaining_s: f64,
) -> StepResult {
    let remaining = if is_crank(state, input) {
        params.hsg_start_duration_s
    } else {
        hsg_remaining_s.max(0.0)
    };
    let draw_s = remaining.min(params.sample_time_s);
    let avg_power = params.hsg_start_power_w * draw_s / params.sample_time_s;
    let energy = params.hsg_start_power_w * draw_s;
    let mut res = transition(state, input, dist, params, avg_power, energy, true)
        .expect("clamping transition cannot fail");
    res.hsg_remaining_s = remaining - draw_s;
    res
}

/// One-step transition as the DP and MPC predictors see it: Markov in
/// (SOC, engine status), with the whole start-event energy priced at the
/// crank step. Strict: constraint violations reject the input instead of
/// clamping.
pub fn step_model(
    state: &PowertrainState,
    input: &ControlInput,
    dist: &Disturbance,
    params: &PowertrainParams,
) -> Result<StepResult, Infeasibility> {
    let (avg_power, energy) = if is_crank(state, input) {
        let e = params.hsg_start_power_w * params.hsg_start_duration_s;
        (e / params.sample_time_s, e)
    } else {
        (0.0, 0.0)
    };
    transition(state, input, dist, params, avg_power, energy, false)
}

/// Strict plant-semantics transition (spread HSG draw, no clamping).
/// Used for feasibility classification against the real plant.
pub fn step_strict(
    state: &PowertrainState,
    input: &ControlInput,
    dist: &Disturbance,
    params: &PowertrainParams,
    hsg_remaining_s: f64,
) -> Result<StepResult, Infeasibility> {
    let remaining = if is_crank(state, input) {
        params.hsg_start_duration_s
    } else {
        hsg_remaining_s.max(0.0)
    };
    let draw_s = remaining.min(params.sample_time_s);
    let avg_power = params.hsg_start_power_w * draw_s / params.sample_time_s;
    let energy = params.hsg_start_power_w * draw_s;
    let mut res = transition(state, input, dist, params, avg_power, energy, false)?;
    res.hsg_remaining_s = remaining - draw_s;
    Ok(res)
}

// ---------------------------------------------------------------------------
// Feasible input set
// ---------------------------------------------------------------------------

/// Closed engine-torque interval, `lo <= hi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorqueInterval {
    pub lo: f64,
    pub hi: f64,
}

/// Feasible engine-torque intervals per switch value. A `None` branch means
/// that switch value admits no feasible torque.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeasibleInputSet {
    /// Interval for switch off; when present it is the single point {0}.
    pub switch_off: Option<TorqueInterval>,
    /// Interval for switch on. While the engine state is off (start step)
    /// the commanded torque transmits nothing, so the interval is {0}.
    pub switch_on: Option<TorqueInterval>,
}

impl FeasibleInputSet {
    pub fn is_empty(&self) -> bool {
        self.switch_off.is_none() && self.switch_on.is_none()
    }

    pub fn contains(&self, input: &ControlInput, tol: f64) -> bool {
        let iv = if input.engine_switch { &self.switch_on } else { &self.switch_off };
        match iv {
            Some(TorqueInterval { lo, hi }) => {
                input.effective_torque() >= lo - tol && input.effective_torque() <= hi + tol
            }
            None => false,
        }
    }
}

/// Compute the feasible input set at a state and demand, against strict
/// plant semantics (`hsg_remaining_s` as the plant would see it).
///
/// Feasibility of a torque means: engine bounds hold, the implied motor
/// torque is within motor limits (regen overflow goes to friction brakes and
/// stays feasible), the battery discriminant is nonnegative and the one-step
/// SOC stays inside its window.
pub fn feasible_input_set(
    state: &PowertrainState,
    dist: &Disturbance,
    params: &PowertrainParams,
    hsg_remaining_s: f64,
) -> Result<FeasibleInputSet, PowertrainError> {
    let ok = |input: &ControlInput| -> bool {
        step_strict(state, input, dist, params, hsg_remaining_s).is_ok()
    };

    let switch_off = ok(&ControlInput::ENGINE_OFF).then_some(TorqueInterval { lo: 0.0, hi: 0.0 });

    let switch_on = if !state.engine_on {
        // start step: torque transmits nothing, the canonical input is 0
        ok(&ControlInput::engine_on(0.0)).then_some(TorqueInterval { lo: 0.0, hi: 0.0 })
    } else {
        let shaft = params.shaft_speed(dist);
        let tmin = params.engine_torque_min_map.eval(shaft);
        let tmax = params.engine_torque_max_map.eval(shaft);
        feasible_torque_interval(tmin, tmax, |t| ok(&ControlInput::engine_on(t)))
    };

    let set = FeasibleInputSet { switch_off, switch_on };
    if set.is_empty() {
        return Err(PowertrainError::NoFeasibleInput);
    }
    Ok(set)
}

/// Find the feasible subinterval of [tmin, tmax] for a monotone-boundary
/// feasibility predicate: coarse scan for a feasible seed, then bisection
/// to refine both edges.
fn feasible_torque_interval(
    tmin: f64,
    tmax: f64,
    ok: impl Fn(f64) -> bool,
) -> Option<TorqueInterval> {
    if tmin > tmax {
        return None;
    }
    if tmax - tmin <= f64::EPSILON {
        return ok(tmin).then_some(TorqueInterval { lo: tmin, hi: tmin });
    }
    const SCAN: usize = 256;
    const BISECT: usize = 50;
    let at = |i: usize| tmin + (tmax - tmin) * (i as f64) / (SCAN as f64);
    let seed = (0..=SCAN).find(|&i| ok(at(i)))?;

    let mut lo = at(seed);
    if seed > 0 {
        // invariant: ok(hi_b) is true, ok(lo_b) is false
        let (mut lo_b, mut hi_b) = (at(seed - 1), at(seed));
        for _ in 0..BISECT {
            let mid = 0.5 * (lo_b + hi_b);
            if ok(mid) {
                hi_b = mid;
            } else {
                lo_b = mid;
            }
        }
        lo = hi_b;
    } else if ok(tmin) {
        lo = tmin;
    }

    let seed_hi = (seed..=SCAN).take_while(|&i| ok(at(i))).last().unwrap_or(seed);
    let mut hi = at(seed_hi);
    if seed_hi < SCAN {
        let (mut lo_b, mut hi_b) = (at(seed_hi), at(seed_hi + 1));
        for _ in 0..BISECT {
            let mid = 0.5 * (lo_b + hi_b);
            if ok(mid) {
                lo_b = mid;
            } else {
                hi_b = mid;
            }
        }
        hi = lo_b;
    } else if ok(tmax) {
        hi = tmax;
    }
    Some(TorqueInterval { lo, hi })
}

/// Deterministic candidate preference: strictly lower cost wins; within the
/// tie band prefer engine off, then the smaller torque magnitude.
pub fn candidate_beats(
    cost_new: f64,
    input_new: &ControlInput,
    cost_best: f64,
    input_best: &ControlInput,
    tie_eps: f64,
) -> bool {
    if cost_new < cost_best - tie_eps {
        return true;
    }
    if cost_new > cost_best + tie_eps {
        return false;
    }
    match (input_new.engine_switch, input_best.engine_switch) {
        (false, true) => true,
        (true, false) => false,
        _ => {
            input_new.effective_torque().abs() < input_best.effective_torque().abs()
                && cost_new <= cost_best + tie_eps
        }
    }
}

/// Least-violation input for a state with an empty feasible set: excess
/// traction gets full engine assist (starting the engine if needed), excess
/// braking coasts engine-off and lets the friction brakes absorb the rest.
/// The plant clamps whatever remains and flags the step.
pub fn fallback_input(
    state: &PowertrainState,
    dist: &Disturbance,
    params: &PowertrainParams,
) -> ControlInput {
    if dist.wheel_torque_nm > 0.0 {
        if state.engine_on {
            let shaft = params.shaft_speed(dist);
            ControlInput::engine_on(params.engine_torque_max_map.eval(shaft))
        } else {
            ControlInput::engine_on(0.0)
        }
    } else {
        ControlInput::ENGINE_OFF
    }
}

/// Candidate inputs shared by the DP sweep, the DP rollout, the MPC and the
/// A-ECMS: torque grid over the engine bounds for switch-on (when the engine
/// transmits), plus the canonical single-point inputs. Candidates are
/// generated unfiltered; callers reject infeasible ones via the strict
/// transitions so every consumer sees identical grid positions.
pub fn candidate_inputs(
    engine_on: bool,
    shaft_speed_radps: f64,
    torque_points: usize,
    params: &PowertrainParams,
    out: &mut Vec<ControlInput>,
) {
    out.clear();
    out.push(ControlInput::ENGINE_OFF);
    if !engine_on {
        out.push(ControlInput::engine_on(0.0));
        return;
    }
    let tmin = params.engine_torque_min_map.eval(shaft_speed_radps);
    let tmax = params.engine_torque_max_map.eval(shaft_speed_radps);
    if tmax < tmin {
        return;
    }
    let n = torque_points.max(2);
    for i in 0..n {
        let t = tmin + (tmax - tmin) * (i as f64) / ((n - 1) as f64);
        out.push(ControlInput::engine_on(t));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> PowertrainParams {
        PowertrainParams::synthetic_default()
    }

    /// Params with flat test maps so hand arithmetic is exact.
    fn flat_params() -> PowertrainParams {
        let mut p = params();
        p.voc_map = Table1D::constant(360.0);
        p.rb_map = Table1D::constant(0.1);
        p.battery_capacity_as = 28_800.0;
        p.motor_eff_map =
            Table2D::new(vec![0.0], vec![0.0], vec![vec![0.9]]).unwrap();
        p.engine_eff_map =
            Table2D::new(vec![0.0], vec![0.0], vec![vec![0.35]]).unwrap();
        p
    }

    #[test]
    fn motor_torque_zero_demand() {
        let p = params();
        let d = Disturbance { wheel_torque_nm: 0.0, ..Disturbance::COAST };
        let tm = motor_torque_required(&ControlInput::ENGINE_OFF, &d, &p, false);
        assert_eq!(tm, 0.0);
    }

    #[test]
    fn motor_torque_engine_exactly_covers_demand() {
        let mut p = params();
        p.gear_ratios = [4.0; 6];
        p.trans_eff = 0.95;
        p.clutch_eff = 0.98;
        let te = 50.0;
        let d = Disturbance {
            wheel_torque_nm: 4.0 * 0.95 * 0.98 * te,
            axle_speed_radps: 10.0,
            gear: 1,
            aux_power_w: 0.0,
        };
        let tm = motor_torque_required(&ControlInput::engine_on(te), &d, &p, true);
        assert_relative_eq!(tm, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn motor_torque_engine_off_hand_value() {
        let mut p = params();
        p.gear_ratios = [4.0; 6];
        p.trans_eff = 0.95;
        let d = Disturbance {
            wheel_torque_nm: 100.0,
            axle_speed_radps: 10.0,
            gear: 1,
            aux_power_w: 0.0,
        };
        let tm = motor_torque_required(&ControlInput::ENGINE_OFF, &d, &p, false);
        assert_relative_eq!(tm, 26.315789473684212, max_relative = 1e-12);
    }

    #[test]
    fn electrical_power_traction_and_regen() {
        let p = flat_params();
        assert_eq!(electrical_power(0.0, 0.0, 0.0, 0.0, &p), 0.0);
        // 10 kW mechanical at eta 0.9
        assert_relative_eq!(
            electrical_power(100.0, 100.0, 0.0, 0.0, &p),
            11111.111111111111,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            electrical_power(-100.0, 100.0, 0.0, 0.0, &p),
            -9000.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn soc_next_zero_power_fixed_point() {
        let p = flat_params();
        for soc in [0.15, 0.3, 0.62, 0.9] {
            assert_eq!(soc_next(soc, 0.0, &p).unwrap(), soc);
        }
    }

    #[test]
    fn soc_next_hand_value() {
        let p = flat_params();
        let next = soc_next(0.5, 10_000.0, &p).unwrap();
        // ts*(Voc - sqrt(Voc^2-4*Rb*Pb))/(2*Rb*Qb) with Voc=360, Rb=0.1, Qb=28800
        assert_relative_eq!(0.5 - next, 1.944130925907296e-4, max_relative = 1e-12);
    }

    #[test]
    fn soc_next_maximum_power_boundary() {
        let p = flat_params();
        let pb = 360.0 * 360.0 / (4.0 * 0.1);
        let next = soc_next(0.5, pb, &p).unwrap();
        assert_relative_eq!(0.5 - next, 0.2 * 360.0 / (2.0 * 0.1 * 28_800.0), max_relative = 1e-12);
        assert!(matches!(
            soc_next(0.5, pb * 1.001, &p),
            Err(PowertrainError::PowerLimitExceeded { .. })
        ));
    }

    #[test]
    fn internal_power_hand_values() {
        let p = flat_params();
        assert_eq!(internal_battery_power(0.0, 0.5, &p).unwrap(), 0.0);
        let pq = internal_battery_power(10_000.0, 0.5, &p).unwrap();
        assert_relative_eq!(pq, 10078.374719903422, max_relative = 1e-12);
        assert!(pq >= 10_000.0);
        let pq_chg = internal_battery_power(-10_000.0, 0.5, &p).unwrap();
        assert_relative_eq!(pq_chg, -9924.007769894377, max_relative = 1e-12);
        assert!(pq_chg.abs() < 10_000.0);
    }

    #[test]
    fn fuel_outputs_engine_off_and_hand_values() {
        let p = flat_params();
        assert_eq!(fuel_outputs(100.0, 200.0, false, &p), (0.0, 0.0));
        let (pf, _) = fuel_outputs(100.0, 200.0, true, &p);
        assert_relative_eq!(pf, 57142.857142857145, max_relative = 1e-12);
        let mut p2 = p.clone();
        p2.fuel_lhv_j_per_kg = 44.0e6;
        p2.engine_eff_map = Table2D::new(vec![0.0], vec![0.0], vec![vec![1.0]]).unwrap();
        let (_, rate) = fuel_outputs(220.0, 200.0, true, &p2);
        assert_relative_eq!(rate, 0.001, max_relative = 1e-12);
    }

    #[test]
    fn step_idle_is_identity() {
        let p = params();
        let s = PowertrainState::new(0.6, false);
        let r = step(&s, &ControlInput::ENGINE_OFF, &Disturbance::COAST, &p, 0.0);
        assert_eq!(r.next, s);
        assert_eq!(r.outputs.fuel_mass_kg, 0.0);
        assert_eq!(r.outputs.battery_power_w, 0.0);
        assert_eq!(r.outputs.internal_power_w, 0.0);
        assert!(!r.outputs.infeasible);
    }

    #[test]
    fn hsg_draw_spreads_full_full_half() {
        let p = params();
        let s = PowertrainState::new(0.6, false);
        let d = Disturbance::COAST;
        let crank = ControlInput::engine_on(0.0);
        let r1 = step(&s, &crank, &d, &p, 0.0);
        assert_relative_eq!(r1.outputs.hsg_energy_j, 8000.0 * 0.2, max_relative = 1e-12);
        assert!(r1.next.engine_on);
        let stay = ControlInput::engine_on(0.0);
        let r2 = step(&r1.next, &stay, &d, &p, r1.hsg_remaining_s);
        assert_relative_eq!(r2.outputs.hsg_energy_j, 8000.0 * 0.2, max_relative = 1e-12);
        let r3 = step(&r2.next, &stay, &d, &p, r2.hsg_remaining_s);
        assert_relative_eq!(r3.outputs.hsg_energy_j, 8000.0 * 0.1, max_relative = 1e-12);
        let r4 = step(&r3.next, &stay, &d, &p, r3.hsg_remaining_s);
        assert_eq!(r4.outputs.hsg_energy_j, 0.0);
        let total = r1.outputs.hsg_energy_j + r2.outputs.hsg_energy_j + r3.outputs.hsg_energy_j;
        assert_relative_eq!(total, 8000.0 * 0.5, max_relative = 1e-12);
    }

    #[test]
    fn step_model_prices_whole_start_at_crank() {
        let p = params();
        let s = PowertrainState::new(0.6, false);
        let r = step_model(&s, &ControlInput::engine_on(0.0), &Disturbance::COAST, &p).unwrap();
        assert_relative_eq!(r.outputs.hsg_energy_j, 8000.0 * 0.5, max_relative = 1e-12);
        assert_relative_eq!(r.outputs.battery_power_w, 8000.0 * 0.5 / 0.2, max_relative = 1e-12);
    }

    #[test]
    fn step_composition_matches_elementary_ops() {
        let p = params();
        let s = PowertrainState::new(0.7, true);
        let input = ControlInput::engine_on(40.0);
        let d = Disturbance {
            aux_power_w: 500.0,
            wheel_torque_nm: 300.0,
            axle_speed_radps: 40.0,
            gear: 3,
        };
        let r = step(&s, &input, &d, &p, 0.0);
        let shaft = p.shaft_speed(&d);
        let tm = motor_torque_required(&input, &d, &p, true);
        let pb = electrical_power(tm, shaft, 0.0, d.aux_power_w, &p);
        let soc_expect = soc_next(s.soc, pb, &p).unwrap();
        assert_relative_eq!(r.next.soc, soc_expect, max_relative = 1e-12);
        assert_relative_eq!(r.outputs.motor_torque_nm, tm, max_relative = 1e-12);
        assert!(!r.outputs.infeasible);
    }

    #[test]
    fn energy_accounting_identity() {
        // P_q * t_s == Q_b * V_oc(soc_k) * (SOC_k - SOC_{k+1})
        let p = params();
        let s = PowertrainState::new(0.55, true);
        let d = Disturbance {
            aux_power_w: 800.0,
            wheel_torque_nm: 450.0,
            axle_speed_radps: 35.0,
            gear: 4,
        };
        let r = step(&s, &ControlInput::engine_on(20.0), &d, &p, 0.0);
        let lhs = r.outputs.internal_power_w * p.sample_time_s;
        let rhs = p.battery_capacity_as * p.voc_map.eval(s.soc) * (s.soc - r.next.soc);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-9);
    }

    #[test]
    fn regen_overflow_goes_to_friction() {
        let p = params();
        let s = PowertrainState::new(0.5, false);
        // hard braking far beyond the regen bound
        let d = Disturbance {
            aux_power_w: 0.0,
            wheel_torque_nm: -6000.0,
            axle_speed_radps: 40.0,
            gear: 2,
        };
        let r = step(&s, &ControlInput::ENGINE_OFF, &d, &p, 0.0);
        assert!(!r.outputs.infeasible);
        let shaft = p.shaft_speed(&d);
        assert_relative_eq!(
            r.outputs.motor_torque_nm,
            p.motor_torque_min_map.eval(shaft),
            max_relative = 1e-12
        );
        assert!(r.outputs.friction_torque_nm < 0.0);
        // battery charges
        assert!(r.next.soc > s.soc);
    }

    #[test]
    fn traction_deficit_clamps_and_flags() {
        let p = params();
        let s = PowertrainState::new(0.5, false);
        let d = Disturbance {
            aux_power_w: 0.0,
            wheel_torque_nm: 8000.0,
            axle_speed_radps: 40.0,
            gear: 2,
        };
        let r = step(&s, &ControlInput::ENGINE_OFF, &d, &p, 0.0);
        assert!(r.outputs.infeasible);
        let shaft = p.shaft_speed(&d);
        assert_relative_eq!(
            r.outputs.motor_torque_nm,
            p.motor_torque_max_map.eval(shaft),
            max_relative = 1e-12
        );
    }

    #[test]
    fn soc_floor_clamps_and_flags() {
        let p = params();
        let s = PowertrainState::new(p.soc_min, false);
        let d = Disturbance {
            aux_power_w: 0.0,
            wheel_torque_nm: 500.0,
            axle_speed_radps: 30.0,
            gear: 3,
        };
        let r = step(&s, &ControlInput::ENGINE_OFF, &d, &p, 0.0);
        assert!(r.outputs.infeasible);
        assert_eq!(r.next.soc, p.soc_min);
    }

    #[test]
    fn feasible_set_zero_demand() {
        let p = params();
        let s = PowertrainState::new(0.5, false);
        let set = feasible_input_set(&s, &Disturbance::COAST, &p, 0.0).unwrap();
        let off = set.switch_off.unwrap();
        assert_eq!((off.lo, off.hi), (0.0, 0.0));
        assert!(set.switch_on.is_some());
    }

    #[test]
    fn feasible_set_excludes_discharge_at_soc_floor() {
        let p = params();
        let s = PowertrainState::new(p.soc_min, false);
        let d = Disturbance {
            aux_power_w: 200.0,
            wheel_torque_nm: 80.0,
            axle_speed_radps: 20.0,
            gear: 2,
        };
        let set = feasible_input_set(&s, &d, &p, 0.0);
        match set {
            Ok(s) => assert!(s.switch_off.is_none()),
            Err(PowertrainError::NoFeasibleInput) => {}
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn feasible_interval_matches_brute_force_scan() {
        // soundness and completeness against a 1000-point torque scan
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let p = params();
        for _ in 0..40 {
            let state = PowertrainState::new(
                rng.random_range(p.soc_min..p.soc_max),
                rng.random_bool(0.5),
            );
            let d = Disturbance {
                aux_power_w: rng.random_range(0.0..3000.0),
                wheel_torque_nm: rng.random_range(-2000.0..2500.0),
                axle_speed_radps: rng.random_range(0.1..110.0),
                gear: rng.random_range(1..=6),
            };
            let set = feasible_input_set(&state, &d, &p, 0.0);
            let shaft = p.shaft_speed(&d);
            let tmin = p.engine_torque_min_map.eval(shaft);
            let tmax = p.engine_torque_max_map.eval(shaft);
            let cell = (tmax - tmin) / 1000.0;
            for i in 0..=1000usize {
                let t = tmin + (tmax - tmin) * (i as f64) / 1000.0;
                for switch in [false, true] {
                    let input = if switch {
                        ControlInput::engine_on(if state.engine_on { t } else { 0.0 })
                    } else {
                        ControlInput::ENGINE_OFF
                    };
                    let feasible =
                        step_strict(&state, &input, &d, &p, 0.0).is_ok();
                    let in_set = match &set {
                        Ok(s) => s.contains(&input, 0.0),
                        Err(_) => false,
                    };
                    if feasible != in_set {
                        // disagreement is tolerable only within one scan
                        // cell of an interval edge
                        let near_edge = match &set {
                            Ok(s) => {
                                let iv = if switch { &s.switch_on } else { &s.switch_off };
                                iv.map_or(false, |iv| {
                                    (input.effective_torque() - iv.lo).abs() <= cell
                                        || (input.effective_torque() - iv.hi).abs() <= cell
                                })
                            }
                            Err(_) => false,
                        };
                        assert!(
                            near_edge,
                            "mismatch at torque {t} switch {switch} state {state:?} dist {d:?}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn params_roundtrip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.toml");
        let p = params();
        p.save(&path).unwrap();
        let loaded = PowertrainParams::load(&path).unwrap();
        assert_eq!(loaded.battery_capacity_as, p.battery_capacity_as);
        assert_eq!(loaded.voc_map, p.voc_map);
        assert_eq!(loaded.gear_ratios, p.gear_ratios);

        let mut bad = p.clone();
        bad.hsg_start_duration_s = 0.4;
        assert!(bad.validate().is_err());
        let mut bad2 = p;
        bad2.soc_min = 0.95;
        assert!(bad2.validate().is_err());
    }

    #[test]
    fn schema_version_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("params.toml");
        PowertrainParams::synthetic_default().save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let hacked = text.replace("schema_version = 1", "schema_version = 9");
        std::fs::write(&path, hacked).unwrap();
        assert!(matches!(
            PowertrainParams::load(&path),
            Err(ParamsError::SchemaVersion(9))
        ));
    }
}
