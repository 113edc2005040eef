//! C ABI for the on-board layer: load powertrain parameters and a trained
//! policy file, build a controller (MPC / CD-CS / A-ECMS), and drive it
//! step by step together with the plant model.
//!
//! Conventions: every constructor writes an opaque handle through an out
//! pointer and returns a status code; every handle has a matching `_free`;
//! all pointers are checked for null; strings are NUL-terminated UTF-8.
//! Handles are not thread-safe — callers own them exclusively.
//!
//! The intended integration loop mirrors the Rust harness:
//! `ems_controller_step` → apply the control through `ems_plant_step`
//! (or the real vehicle) → `ems_controller_commit` with the executed
//! fuel mass, carrying `EmsState` between steps.

use std::ffi::{c_char, CStr};
use std::path::Path;

use emslab::baselines::{Aecms, AecmsConfig, CdCs, CdCsConfig, RepresentativeSocProfile};
use emslab::learn::PolicyParams;
use emslab::mpc::{mpc_step, ControlCtx, LearnedTerminal, MpcConfig};
use emslab::powertrain::{step, ControlInput, Disturbance, PowertrainParams, PowertrainState};
use emslab::trip::{RouteBins, RouteStats, SimHistory};

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum EmsStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    Utf8 = 2,
    /// File could not be read.
    Io = 3,
    /// File contents failed to parse or validate.
    Parse = 4,
    /// Arguments outside the supported range.
    Invalid = 5,
}

/// Powertrain state plus the pending engine-start draw, carried by the
/// caller between steps.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct EmsState {
    pub soc: f64,
    pub engine_on: bool,
    /// Seconds of HSG startup draw still pending (0 when idle).
    pub hsg_remaining_s: f64,
}

/// Exogenous signals at the current control step.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct EmsDisturbance {
    pub aux_power_w: f64,
    pub wheel_torque_nm: f64,
    pub axle_speed_radps: f64,
    /// Gear number 1..=6.
    pub gear: u8,
    pub vehicle_speed_mps: f64,
    /// Distance along the route, meters.
    pub position_m: f64,
}

/// Control input: engine torque command and engine switch.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct EmsControl {
    pub engine_torque_nm: f64,
    pub engine_switch: bool,
}

/// Outputs of one plant step.
#[repr(C)]
#[derive(Clone, Copy)]
pub struct EmsPlantOutputs {
    pub next: EmsState,
    pub fuel_mass_kg: f64,
    pub fuel_power_w: f64,
    pub battery_power_w: f64,
    pub internal_power_w: f64,
    pub motor_torque_nm: f64,
    pub hsg_energy_j: f64,
    /// Set when the command violated a constraint and was clamped.
    pub infeasible: bool,
}

/// Opaque powertrain parameter set.
pub struct EmsParams(PowertrainParams);

/// Opaque trained policy (the cloud-to-vehicle payload).
pub struct EmsPolicy(PolicyParams);

enum ControllerKind {
    Mpc { policy: Box<PolicyParams>, cfg: MpcConfig },
    CdCs(CdCs),
    Aecms(Box<Aecms>),
}

/// Opaque supervisory controller with its causal history.
pub struct EmsController {
    params: PowertrainParams,
    stats: RouteStats,
    history: SimHistory,
    step_index: usize,
    kind: ControllerKind,
}

fn read_str<'a>(ptr: *const c_char) -> Result<&'a str, EmsStatus> {
    if ptr.is_null() {
        return Err(EmsStatus::NullPointer);
    }
    unsafe { CStr::from_ptr(ptr) }.to_str().map_err(|_| EmsStatus::Utf8)
}

fn write_handle<T>(out: *mut *mut T, value: T) -> EmsStatus {
    if out.is_null() {
        return EmsStatus::NullPointer;
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    EmsStatus::Ok
}

/// Single-bin placeholder statistics for controllers that do not consume
/// the time-left feature.
fn placeholder_stats() -> RouteStats {
    RouteStats {
        bins: RouteBins {
            route_id: "unbound".to_string(),
            bin_length_m: 1e9,
            bin_count: 1,
            total_distance_m: 1e9,
        },
        mean_remaining_s: vec![0.0],
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ems_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Human-readable description of a status code (static storage).
#[no_mangle]
pub extern "C" fn ems_status_message(status: EmsStatus) -> *const c_char {
    let msg: &'static str = match status {
        EmsStatus::Ok => "ok\0",
        EmsStatus::NullPointer => "null pointer argument\0",
        EmsStatus::Utf8 => "string argument is not valid UTF-8\0",
        EmsStatus::Io => "file could not be read\0",
        EmsStatus::Parse => "file failed to parse or validate\0",
        EmsStatus::Invalid => "argument out of range\0",
    };
    msg.as_ptr() as *const c_char
}

/// Built-in synthetic powertrain calibration.
#[no_mangle]
pub extern "C" fn ems_params_default(out: *mut *mut EmsParams) -> EmsStatus {
    write_handle(out, EmsParams(PowertrainParams::synthetic_default()))
}

/// Load powertrain parameters from a TOML file.
#[no_mangle]
pub extern "C" fn ems_params_load(path: *const c_char, out: *mut *mut EmsParams) -> EmsStatus {
    let path = match read_str(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match PowertrainParams::load(Path::new(path)) {
        Ok(p) => write_handle(out, EmsParams(p)),
        Err(emslab::powertrain::ParamsError::Io(_)) => EmsStatus::Io,
        Err(_) => EmsStatus::Parse,
    }
}

/// # Safety
/// `params` must come from `ems_params_default`/`ems_params_load` and not
/// have been freed already. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ems_params_free(params: *mut EmsParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Load a trained policy file.
#[no_mangle]
pub extern "C" fn ems_policy_load(path: *const c_char, out: *mut *mut EmsPolicy) -> EmsStatus {
    let path = match read_str(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match PolicyParams::load(Path::new(path)) {
        Ok(p) => write_handle(out, EmsPolicy(p)),
        Err(emslab::learn::LearnError::Io(_)) => EmsStatus::Io,
        Err(_) => EmsStatus::Parse,
    }
}

/// # Safety
/// `policy` must come from `ems_policy_load` and not have been freed
/// already. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ems_policy_free(policy: *mut EmsPolicy) {
    if !policy.is_null() {
        drop(unsafe { Box::from_raw(policy) });
    }
}

/// MPC controller with the learned terminal value. The policy is copied
/// into the handle.
///
/// # Safety
/// `params` and `policy` must be valid handles.
#[no_mangle]
pub unsafe extern "C" fn ems_controller_new_mpc(
    params: *const EmsParams,
    policy: *const EmsPolicy,
    torque_candidates: u32,
    horizon: u32,
    out: *mut *mut EmsController,
) -> EmsStatus {
    if params.is_null() || policy.is_null() {
        return EmsStatus::NullPointer;
    }
    if torque_candidates < 2 || horizon < 1 {
        return EmsStatus::Invalid;
    }
    let params = unsafe { &*params };
    let policy = unsafe { &*policy };
    let controller = EmsController {
        params: params.0.clone(),
        stats: policy.0.stats.clone(),
        history: SimHistory::new(params.0.sample_time_s),
        step_index: 0,
        kind: ControllerKind::Mpc {
            policy: Box::new(policy.0.clone()),
            cfg: MpcConfig {
                horizon: horizon as usize,
                torque_candidates: torque_candidates as usize,
            },
        },
    };
    write_handle(out, controller)
}

/// CD-CS baseline controller.
///
/// # Safety
/// `params` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ems_controller_new_cdcs(
    params: *const EmsParams,
    out: *mut *mut EmsController,
) -> EmsStatus {
    if params.is_null() {
        return EmsStatus::NullPointer;
    }
    let params = unsafe { &*params };
    let controller = EmsController {
        params: params.0.clone(),
        stats: placeholder_stats(),
        history: SimHistory::new(params.0.sample_time_s),
        step_index: 0,
        kind: ControllerKind::CdCs(CdCs::new(CdCsConfig::default())),
    };
    write_handle(out, controller)
}

/// A-ECMS controller tracking the representative SOC profile loaded from
/// `profile_path`.
///
/// # Safety
/// `params` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ems_controller_new_aecms(
    params: *const EmsParams,
    profile_path: *const c_char,
    out: *mut *mut EmsController,
) -> EmsStatus {
    if params.is_null() {
        return EmsStatus::NullPointer;
    }
    let path = match read_str(profile_path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    let profile = match RepresentativeSocProfile::load(Path::new(path)) {
        Ok(p) => p,
        Err(emslab::baselines::BaselineError::Io(_)) => return EmsStatus::Io,
        Err(_) => return EmsStatus::Parse,
    };
    let params = unsafe { &*params };
    let controller = EmsController {
        params: params.0.clone(),
        stats: placeholder_stats(),
        history: SimHistory::new(params.0.sample_time_s),
        step_index: 0,
        kind: ControllerKind::Aecms(Box::new(Aecms::new(AecmsConfig::default(), profile))),
    };
    write_handle(out, controller)
}

/// # Safety
/// `controller` must come from a controller constructor and not have been
/// freed already. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ems_controller_free(controller: *mut EmsController) {
    if !controller.is_null() {
        drop(unsafe { Box::from_raw(controller) });
    }
}

/// Compute the control for the current step. Call once per sample period,
/// then advance the plant (or the vehicle) with the returned control and
/// report the executed fuel mass via `ems_controller_commit`.
///
/// # Safety
/// `controller` must be a valid handle; `out` must point to writable
/// memory.
#[no_mangle]
pub unsafe extern "C" fn ems_controller_step(
    controller: *mut EmsController,
    state: EmsState,
    dist: EmsDisturbance,
    out: *mut EmsControl,
) -> EmsStatus {
    if controller.is_null() || out.is_null() {
        return EmsStatus::NullPointer;
    }
    if dist.gear < 1 || dist.gear > 6 || !state.soc.is_finite() {
        return EmsStatus::Invalid;
    }
    let ctl = unsafe { &mut *controller };
    ctl.history.observe(dist.vehicle_speed_mps, dist.aux_power_w, dist.position_m, &ctl.stats);
    let ctx = ControlCtx {
        state: PowertrainState::new(state.soc, state.engine_on),
        dist: Disturbance {
            aux_power_w: dist.aux_power_w,
            wheel_torque_nm: dist.wheel_torque_nm,
            axle_speed_radps: dist.axle_speed_radps,
            gear: dist.gear,
        },
        vehicle_speed_mps: dist.vehicle_speed_mps,
        position_m: dist.position_m,
        step_index: ctl.step_index,
        history: &ctl.history,
        hsg_remaining_s: state.hsg_remaining_s,
    };
    let input: ControlInput = match &mut ctl.kind {
        ControllerKind::Mpc { policy, cfg } => {
            let terminal = LearnedTerminal(policy);
            mpc_step(&ctx, &terminal, &policy.stats, &ctl.params, cfg).chosen
        }
        ControllerKind::CdCs(inner) => inner.step(&ctx, &ctl.params),
        ControllerKind::Aecms(inner) => inner.step(&ctx, &ctl.params),
    };
    ctl.step_index += 1;
    unsafe {
        *out = EmsControl {
            engine_torque_nm: input.engine_torque_nm,
            engine_switch: input.engine_switch,
        };
    }
    EmsStatus::Ok
}

/// Report the fuel mass actually burned while executing the last control,
/// keeping the controller's cumulative-fuel feature honest.
///
/// # Safety
/// `controller` must be a valid handle.
#[no_mangle]
pub unsafe extern "C" fn ems_controller_commit(
    controller: *mut EmsController,
    fuel_mass_kg: f64,
) -> EmsStatus {
    if controller.is_null() {
        return EmsStatus::NullPointer;
    }
    if !(fuel_mass_kg >= 0.0) {
        return EmsStatus::Invalid;
    }
    unsafe { &mut *controller }.history.add_fuel(fuel_mass_kg);
    EmsStatus::Ok
}

/// Advance the plant model one sample period. Infeasible commands are
/// clamped and flagged, never rejected.
///
/// # Safety
/// `params` must be a valid handle; `out` must point to writable memory.
#[no_mangle]
pub unsafe extern "C" fn ems_plant_step(
    params: *const EmsParams,
    state: EmsState,
    control: EmsControl,
    dist: EmsDisturbance,
    out: *mut EmsPlantOutputs,
) -> EmsStatus {
    if params.is_null() || out.is_null() {
        return EmsStatus::NullPointer;
    }
    if dist.gear < 1 || dist.gear > 6 || !state.soc.is_finite() {
        return EmsStatus::Invalid;
    }
    let params = unsafe { &*params };
    let res = step(
        &PowertrainState::new(state.soc, state.engine_on),
        &ControlInput {
            engine_torque_nm: control.engine_torque_nm,
            engine_switch: control.engine_switch,
        },
        &Disturbance {
            aux_power_w: dist.aux_power_w,
            wheel_torque_nm: dist.wheel_torque_nm,
            axle_speed_radps: dist.axle_speed_radps,
            gear: dist.gear,
        },
        &params.0,
        state.hsg_remaining_s,
    );
    unsafe {
        *out = EmsPlantOutputs {
            next: EmsState {
                soc: res.next.soc,
                engine_on: res.next.engine_on,
                hsg_remaining_s: res.hsg_remaining_s,
            },
            fuel_mass_kg: res.outputs.fuel_mass_kg,
            fuel_power_w: res.outputs.fuel_power_w,
            battery_power_w: res.outputs.battery_power_w,
            internal_power_w: res.outputs.internal_power_w,
            motor_torque_nm: res.outputs.motor_torque_nm,
            hsg_energy_j: res.outputs.hsg_energy_j,
            infeasible: res.outputs.infeasible,
        };
    }
    EmsStatus::Ok
}
