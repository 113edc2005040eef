//! Trip data model, position binning and per-route statistics.
//!
//! A trip is a uniformly sampled time series of the exogenous signals the
//! powertrain needs (axle speed, wheel torque demand, auxiliary power, gear)
//! plus position along the route. Trips on the same route share a set of
//! fixed-length position bins; bins are the index `k` of the learned value
//! function, so trips of different durations line up by position.

mod csv_io;
mod features;
mod gen;

pub use csv_io::{load_trip, save_trip, TRIP_CSV_HEADER};
pub use features::{SimHistory, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
pub use gen::{gear_for_speed, generate_trip, road_load_torque, CycleSpec, GradeSpec, RoadLoadParams, SegmentKind, SegmentSpec};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::powertrain::Disturbance;

#[derive(Debug, Error)]
pub enum TripError {
    #[error("failed to read {path}: {msg}")]
    Io { path: String, msg: String },
    #[error("malformed trip data: {0}")]
    Parse(String),
    #[error("trip csv schema violation: {0}")]
    Schema(String),
    #[error("trip validation failed: {0}")]
    Validation(String),
    #[error("invalid cycle spec: {0}")]
    Spec(String),
    #[error("route mismatch: {0}")]
    RouteMismatch(String),
}

/// One sample of the recorded (or generated) trip signals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripSample {
    pub time_s: f64,
    pub position_m: f64,
    pub vehicle_speed_mps: f64,
    pub axle_speed_radps: f64,
    pub wheel_torque_nm: f64,
    pub aux_power_w: f64,
    pub gear: u8,
    pub elevation_m: f64,
}

/// A uniformly sampled trip on a named route.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub route_id: String,
    pub trip_id: String,
    /// Free direction/time-of-day label, e.g. "morning".
    pub tag: String,
    pub sample_time_s: f64,
    pub samples: Vec<TripSample>,
}

impl Trip {
    pub fn total_distance_m(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.position_m)
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 * self.sample_time_s
    }

    /// Disturbance vector for stage `k`.
    pub fn disturbance(&self, k: usize) -> Disturbance {
        let s = &self.samples[k];
        Disturbance {
            aux_power_w: s.aux_power_w,
            wheel_torque_nm: s.wheel_torque_nm,
            axle_speed_radps: s.axle_speed_radps,
            gear: s.gear,
        }
    }

    pub fn validate(&self) -> Result<(), TripError> {
        if self.samples.is_empty() {
            return Err(TripError::Validation("trip has no samples".into()));
        }
        if !(self.sample_time_s > 0.0) {
            return Err(TripError::Validation("sample_time_s must be positive".into()));
        }
        let mut prev_t = f64::NEG_INFINITY;
        let mut prev_pos = f64::NEG_INFINITY;
        for (i, s) in self.samples.iter().enumerate() {
            if !(s.time_s > prev_t) {
                return Err(TripError::Validation(format!("non-increasing time at row {i}")));
            }
            if s.position_m < prev_pos {
                return Err(TripError::Validation(format!("decreasing position at row {i}")));
            }
            if s.vehicle_speed_mps < 0.0 || s.axle_speed_radps < 0.0 {
                return Err(TripError::Validation(format!("negative speed at row {i}")));
            }
            if s.gear < 1 || s.gear > 6 {
                return Err(TripError::Validation(format!("gear out of range at row {i}")));
            }
            prev_t = s.time_s;
            prev_pos = s.position_m;
        }
        Ok(())
    }

    /// Resample onto a uniform grid with spacing `dt`. Continuous signals
    /// interpolate linearly; gear snaps to the nearest source sample.
    pub fn resample(&self, dt: f64) -> Trip {
        let src_dt = if self.samples.len() >= 2 {
            self.samples[1].time_s - self.samples[0].time_s
        } else {
            self.sample_time_s
        };
        if ((src_dt - dt) / dt).abs() < 1e-9 && (self.sample_time_s - dt).abs() < 1e-12 {
            return self.clone();
        }
        let t0 = self.samples[0].time_s;
        let t_end = self.samples.last().unwrap().time_s;
        let n = (((t_end - t0) / dt).floor() as usize) + 1;
        let mut samples = Vec::with_capacity(n);
        let mut j = 0usize;
        for i in 0..n {
            let t = t0 + i as f64 * dt;
            while j + 1 < self.samples.len() && self.samples[j + 1].time_s <= t {
                j += 1;
            }
            let a = &self.samples[j];
            let s = if j + 1 < self.samples.len() {
                let b = &self.samples[j + 1];
                let w = (t - a.time_s) / (b.time_s - a.time_s);
                let lerp = |x: f64, y: f64| x + w * (y - x);
                TripSample {
                    time_s: t - t0,
                    position_m: lerp(a.position_m, b.position_m),
                    vehicle_speed_mps: lerp(a.vehicle_speed_mps, b.vehicle_speed_mps),
                    axle_speed_radps: lerp(a.axle_speed_radps, b.axle_speed_radps),
                    wheel_torque_nm: lerp(a.wheel_torque_nm, b.wheel_torque_nm),
                    aux_power_w: lerp(a.aux_power_w, b.aux_power_w),
                    gear: if w < 0.5 { a.gear } else { b.gear },
                    elevation_m: lerp(a.elevation_m, b.elevation_m),
                }
            } else {
                TripSample { time_s: t - t0, ..*a }
            };
            samples.push(s);
        }
        Trip { sample_time_s: dt, samples, ..self.clone() }
    }
}

/// Fixed-length position bins shared by all trips on a route.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteBins {
    pub route_id: String,
    pub bin_length_m: f64,
    pub bin_count: usize,
    pub total_distance_m: f64,
}

impl RouteBins {
    /// Bin index for a position; clamped to the route ends so the mapping
    /// is total.
    pub fn bin_for(&self, position_m: f64) -> usize {
        if position_m <= 0.0 {
            return 0;
        }
        let k = (position_m / self.bin_length_m).floor() as usize;
        k.min(self.bin_count - 1)
    }

    /// Center position of bin `k`, clamped to the route length.
    pub fn center_m(&self, k: usize) -> f64 {
        ((k as f64 + 0.5) * self.bin_length_m).min(self.total_distance_m)
    }
}

/// Build the shared bin set for a collection of trips on one route.
pub fn make_bins(trips: &[&Trip], bin_length_m: f64) -> Result<RouteBins, TripError> {
    if trips.is_empty() {
        return Err(TripError::RouteMismatch("no trips given".into()));
    }
    if !(bin_length_m > 0.0) {
        return Err(TripError::Validation("bin length must be positive".into()));
    }
    let route_id = trips[0].route_id.clone();
    let mut max_dist: f64 = 0.0;
    let mut min_dist = f64::INFINITY;
    for t in trips {
        if t.route_id != route_id {
            return Err(TripError::RouteMismatch(format!(
                "trip {} is on route {}, expected {}",
                t.trip_id, t.route_id, route_id
            )));
        }
        max_dist = max_dist.max(t.total_distance_m());
        min_dist = min_dist.min(t.total_distance_m());
    }
    if max_dist <= 0.0 {
        // degenerate zero-distance corpus still gets one bin
        return Ok(RouteBins { route_id, bin_length_m, bin_count: 1, total_distance_m: 0.0 });
    }
    if (max_dist - min_dist) / max_dist > 0.01 {
        return Err(TripError::RouteMismatch(format!(
            "trip lengths disagree beyond 1%: {min_dist:.1} m vs {max_dist:.1} m"
        )));
    }
    let bin_count = (max_dist / bin_length_m).ceil() as usize;
    Ok(RouteBins { route_id, bin_length_m, bin_count: bin_count.max(1), total_distance_m: max_dist })
}

/// Historical per-bin mean remaining travel time for a route, the source of
/// the `est_time_left` feature. Built from training trips only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RouteStats {
    pub bins: RouteBins,
    /// Mean remaining travel time (s) from the first entry into each bin.
    pub mean_remaining_s: Vec<f64>,
}

impl RouteStats {
    pub fn from_trips(trips: &[&Trip], bins: &RouteBins) -> RouteStats {
        let mut sums = vec![0.0f64; bins.bin_count];
        let mut counts = vec![0usize; bins.bin_count];
        for trip in trips {
            let duration = trip.duration_s();
            let mut entered = vec![false; bins.bin_count];
            for s in &trip.samples {
                let k = bins.bin_for(s.position_m);
                if !entered[k] {
                    entered[k] = true;
                    sums[k] += duration - s.time_s;
                    counts[k] += 1;
                }
            }
        }
        let mut mean = vec![0.0f64; bins.bin_count];
        let mut last = 0.0;
        // fill never-entered bins by carrying the previous bin's mean
        for k in (0..bins.bin_count).rev() {
            if counts[k] > 0 {
                last = sums[k] / counts[k] as f64;
            }
            mean[k] = last;
        }
        RouteStats { bins: bins.clone(), mean_remaining_s: mean }
    }

    pub fn mean_total_s(&self) -> f64 {
        self.mean_remaining_s.first().copied().unwrap_or(0.0)
    }
}
