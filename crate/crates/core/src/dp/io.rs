//! Value-table and trajectory persistence.
//!
//! Value table binary layout (little-endian):
//!
//! ```text
//! magic   8 bytes  "EMSVTB01"
//! u32     soc point count S
//! u32     stage count N
//! f64*S   SOC grid
//! f64*(N+1)*S*2   value layers, stage-major, [soc][engine off, on]
//! f64*N*S*2       argmin engine torque layers, same order
//! u8*N*S*2        argmin engine switch layers, same order
//! ```
//!
//! Infeasible cells persist as IEEE infinity. The trajectory sidecar is a
//! CSV with one row per step plus a terminal row (zeroed input/outputs,
//! value 0), consumed by the value-function learner.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::powertrain::{ControlInput, PowertrainState, StepOutputs};

use super::{DpError, Trajectory, TrajectoryStep, ValueTable};

const MAGIC: &[u8; 8] = b"EMSVTB01";

pub fn save_table(table: &ValueTable, path: &Path) -> Result<(), DpError> {
    let io = |e: std::io::Error| DpError::Io(format!("{}: {e}", path.display()));
    let mut w = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    w.write_all(MAGIC).map_err(io)?;
    w.write_u32::<LittleEndian>(table.soc_points.len() as u32).map_err(io)?;
    w.write_u32::<LittleEndian>(table.stage_count as u32).map_err(io)?;
    for &p in &table.soc_points {
        w.write_f64::<LittleEndian>(p).map_err(io)?;
    }
    for &v in table.raw_values() {
        w.write_f64::<LittleEndian>(v).map_err(io)?;
    }
    let (torque, switch) = table.raw_argmin();
    for &t in torque {
        w.write_f64::<LittleEndian>(t).map_err(io)?;
    }
    w.write_all(switch).map_err(io)?;
    w.flush().map_err(io)
}

pub fn load_table(path: &Path) -> Result<ValueTable, DpError> {
    let io = |e: std::io::Error| DpError::Io(format!("{}: {e}", path.display()));
    let mut r = std::io::BufReader::new(std::fs::File::open(path).map_err(io)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != MAGIC {
        return Err(DpError::Io(format!("{}: not a value-table file", path.display())));
    }
    let nsoc = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    let stages = r.read_u32::<LittleEndian>().map_err(io)? as usize;
    if nsoc < 2 {
        return Err(DpError::Io("corrupt table: fewer than 2 SOC points".into()));
    }
    let mut soc_points = vec![0.0; nsoc];
    r.read_f64_into::<LittleEndian>(&mut soc_points).map_err(io)?;
    let mut values = vec![0.0; (stages + 1) * nsoc * 2];
    r.read_f64_into::<LittleEndian>(&mut values).map_err(io)?;
    let mut torque = vec![0.0; stages * nsoc * 2];
    r.read_f64_into::<LittleEndian>(&mut torque).map_err(io)?;
    let mut switch = vec![0u8; stages * nsoc * 2];
    r.read_exact(&mut switch).map_err(io)?;
    Ok(ValueTable::from_raw(soc_points, stages, values, torque, switch))
}

pub const TRAJECTORY_CSV_HEADER: &str = "step,position_m,soc,engine_on,engine_torque_Nm,engine_switch,motor_torque_Nm,friction_torque_Nm,fuel_power_W,battery_power_W,internal_power_W,fuel_mass_kg,hsg_energy_J,infeasible,stage_cost_gal,value_gal";

pub fn save_trajectory(traj: &Trajectory, path: &Path) -> Result<(), DpError> {
    let io = |e: csv::Error| DpError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(TRAJECTORY_CSV_HEADER.split(',')).map_err(io)?;
    let mut row = |step: usize,
                   pos: f64,
                   state: &PowertrainState,
                   input: &ControlInput,
                   out: &StepOutputs,
                   cost: f64,
                   value: f64|
     -> Result<(), DpError> {
        w.write_record(&[
            step.to_string(),
            pos.to_string(),
            state.soc.to_string(),
            (state.engine_on as u8).to_string(),
            input.engine_torque_nm.to_string(),
            (input.engine_switch as u8).to_string(),
            out.motor_torque_nm.to_string(),
            out.friction_torque_nm.to_string(),
            out.fuel_power_w.to_string(),
            out.battery_power_w.to_string(),
            out.internal_power_w.to_string(),
            out.fuel_mass_kg.to_string(),
            out.hsg_energy_j.to_string(),
            (out.infeasible as u8).to_string(),
            cost.to_string(),
            value.to_string(),
        ])
        .map_err(|e| DpError::Io(format!("{}: {e}", path.display())))
    };
    for (k, s) in traj.steps.iter().enumerate() {
        row(k, s.position_m, &s.state, &s.input, &s.outputs, s.cost_gal, s.value_gal)?;
    }
    row(
        traj.steps.len(),
        traj.terminal_position_m,
        &traj.terminal_state,
        &ControlInput::ENGINE_OFF,
        &StepOutputs::default(),
        0.0,
        0.0,
    )?;
    w.flush().map_err(|e| DpError::Io(format!("{}: {e}", path.display())))
}

/// Load a trajectory sidecar. Route and trip ids come from the file name
/// (`route__trip__traj.csv` convention used by the pipeline).
pub fn load_trajectory(path: &Path, sample_time_s: f64) -> Result<Trajectory, DpError> {
    let io = |e: csv::Error| DpError::Io(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(io)?;
    let headers = r.headers().map_err(io)?.clone();
    if headers.iter().collect::<Vec<_>>().join(",") != TRAJECTORY_CSV_HEADER {
        return Err(DpError::Io(format!("{}: unexpected trajectory header", path.display())));
    }
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
    let parts: Vec<&str> = stem.split("__").collect();
    let (route_id, trip_id) = match parts.as_slice() {
        [route, trip, ..] => (route.to_string(), trip.to_string()),
        _ => ("route".to_string(), stem.to_string()),
    };

    let mut rows: Vec<(f64, PowertrainState, ControlInput, StepOutputs, f64, f64)> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(io)?;
        let f = |i: usize| -> Result<f64, DpError> {
            rec.get(i)
                .ok_or_else(|| DpError::Io("short trajectory row".into()))?
                .parse::<f64>()
                .map_err(|e| DpError::Io(format!("bad trajectory value: {e}")))
        };
        let state = PowertrainState::new(f(2)?, f(3)? != 0.0);
        let input = ControlInput { engine_torque_nm: f(4)?, engine_switch: f(5)? != 0.0 };
        let outputs = StepOutputs {
            motor_torque_nm: f(6)?,
            friction_torque_nm: f(7)?,
            fuel_power_w: f(8)?,
            battery_power_w: f(9)?,
            internal_power_w: f(10)?,
            fuel_mass_kg: f(11)?,
            hsg_energy_j: f(12)?,
            infeasible: f(13)? != 0.0,
        };
        rows.push((f(1)?, state, input, outputs, f(14)?, f(15)?));
    }
    if rows.len() < 2 {
        return Err(DpError::Io(format!("{}: trajectory too short", path.display())));
    }
    let terminal = rows.pop().expect("length checked");
    let steps = rows
        .into_iter()
        .map(|(pos, state, input, outputs, cost, value)| TrajectoryStep {
            state,
            input,
            outputs,
            cost_gal: cost,
            value_gal: value,
            position_m: pos,
        })
        .collect();
    Ok(Trajectory {
        trip_id,
        route_id,
        sample_time_s,
        steps,
        terminal_state: terminal.1,
        terminal_position_m: terminal.0,
    })
}
