//! Trip CSV schema (v1) and ingestion.
//!
//! Header: `time_s,position_m,vehicle_speed_mps,axle_speed_radps,
//! wheel_torque_Nm,aux_power_W,gear,elevation_m`. The exact column set is
//! the version contract; `elevation_m` is optional. Route and trip
//! identifiers come from the file name, `route__trip[__tag].csv`, falling
//! back to the parent directory name and the bare stem.

use std::path::Path;

use super::{Trip, TripError, TripSample};

pub const TRIP_CSV_HEADER: &str = "time_s,position_m,vehicle_speed_mps,axle_speed_radps,wheel_torque_Nm,aux_power_W,gear,elevation_m";

const REQUIRED_COLUMNS: [&str; 7] = [
    "time_s",
    "position_m",
    "vehicle_speed_mps",
    "axle_speed_radps",
    "wheel_torque_Nm",
    "aux_power_W",
    "gear",
];

fn ids_from_path(path: &Path) -> (String, String, String) {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trip");
    let parts: Vec<&str> = stem.split("__").collect();
    match parts.as_slice() {
        [route, trip, tag, ..] => (route.to_string(), trip.to_string(), tag.to_string()),
        [route, trip] => (route.to_string(), trip.to_string(), String::new()),
        _ => {
            let route = path
                .parent()
                .and_then(|p| p.file_name())
                .and_then(|s| s.to_str())
                .unwrap_or("route")
                .to_string();
            (route, stem.to_string(), String::new())
        }
    }
}

/// Load a trip CSV, validate it, and resample it to `sample_time_s` if the
/// source rate differs.
pub fn load_trip(path: &Path, sample_time_s: f64) -> Result<Trip, TripError> {
    let io_err = |e: csv::Error| TripError::Io { path: path.display().to_string(), msg: e.to_string() };
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| TripError::Io { path: path.display().to_string(), msg: e.to_string() })?;

    let headers = reader.headers().map_err(io_err)?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let mut idx = [0usize; 7];
    for (i, name) in REQUIRED_COLUMNS.iter().enumerate() {
        idx[i] = col(name)
            .ok_or_else(|| TripError::Schema(format!("missing required column `{name}`")))?;
    }
    let elev_idx = col("elevation_m");

    let mut samples = Vec::new();
    for (row_no, record) in reader.records().enumerate() {
        let record = record.map_err(io_err)?;
        let field = |i: usize| -> Result<f64, TripError> {
            record
                .get(i)
                .ok_or_else(|| TripError::Parse(format!("row {row_no}: short record")))?
                .trim()
                .parse::<f64>()
                .map_err(|e| TripError::Parse(format!("row {row_no}: {e}")))
        };
        let gear_raw = field(idx[6])?;
        if !(1.0..=6.0).contains(&gear_raw) || gear_raw.fract() != 0.0 {
            return Err(TripError::Parse(format!("row {row_no}: gear must be an integer 1..6")));
        }
        samples.push(TripSample {
            time_s: field(idx[0])?,
            position_m: field(idx[1])?,
            vehicle_speed_mps: field(idx[2])?,
            axle_speed_radps: field(idx[3])?,
            wheel_torque_nm: field(idx[4])?,
            aux_power_w: field(idx[5])?,
            gear: gear_raw as u8,
            elevation_m: elev_idx.map_or(Ok(0.0), field)?,
        });
    }

    let (route_id, trip_id, tag) = ids_from_path(path);
    let src_dt = if samples.len() >= 2 { samples[1].time_s - samples[0].time_s } else { sample_time_s };
    let trip = Trip { route_id, trip_id, tag, sample_time_s: src_dt, samples };
    trip.validate()?;
    Ok(trip.resample(sample_time_s))
}

/// Write a trip in schema v1.
pub fn save_trip(trip: &Trip, path: &Path) -> Result<(), TripError> {
    let mut w = csv::Writer::from_path(path)
        .map_err(|e| TripError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    w.write_record(TRIP_CSV_HEADER.split(','))
        .map_err(|e| TripError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    for s in &trip.samples {
        w.write_record(&[
            s.time_s.to_string(),
            s.position_m.to_string(),
            s.vehicle_speed_mps.to_string(),
            s.axle_speed_radps.to_string(),
            s.wheel_torque_nm.to_string(),
            s.aux_power_w.to_string(),
            s.gear.to_string(),
            s.elevation_m.to_string(),
        ])
        .map_err(|e| TripError::Io { path: path.display().to_string(), msg: e.to_string() })?;
    }
    w.flush().map_err(|e| TripError::Io { path: path.display().to_string(), msg: e.to_string() })
}
