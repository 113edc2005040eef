//! Synthetic drive-cycle generation.
//!
//! Stands in for the proprietary trip corpus: a route is a fixed sequence of
//! segments (urban/arterial/highway) with a sinusoidal grade profile; each
//! seed produces a distinct speed trace over that common route via an
//! Ornstein-Uhlenbeck speed process with scheduled stops. Wheel torque
//! demand comes from a documented longitudinal road-load model
//! (inertia + rolling + aerodynamic + grade), gear from a fixed
//! speed-threshold shift map. Generation is bit-reproducible per
//! `(spec, seed)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use super::{Trip, TripError, TripSample};

pub const CYCLE_SCHEMA_VERSION: u32 = 1;

const GRAVITY_MPS2: f64 = 9.81;
/// Comfortable service-brake deceleration used to plan stop approaches.
const BRAKE_DECEL_MPS2: f64 = 1.5;
/// Speed below which the vehicle counts as stopped.
const STANDSTILL_MPS: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentKind {
    Urban,
    Arterial,
    Highway,
}

/// One stretch of the route with its traffic statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpec {
    pub kind: SegmentKind,
    pub length_m: f64,
    pub mean_speed_mps: f64,
    pub speed_std_mps: f64,
    /// Expected full stops per km (signals, congestion).
    pub stops_per_km: f64,
}

/// Sinusoidal grade profile: grade(pos) = amplitude * sin(2π pos/wavelength + phase).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradeSpec {
    pub amplitude: f64,
    pub wavelength_m: f64,
    pub phase_rad: f64,
}

impl Default for GradeSpec {
    fn default() -> Self {
        GradeSpec { amplitude: 0.0, wavelength_m: 1000.0, phase_rad: 0.0 }
    }
}

/// Longitudinal road-load constants for torque synthesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoadLoadParams {
    pub mass_kg: f64,
    /// Drag coefficient times frontal area, m².
    pub drag_area_m2: f64,
    pub air_density_kgpm3: f64,
    pub rolling_coeff: f64,
    pub wheel_radius_m: f64,
    /// Rotating-mass factor applied to the inertial term.
    pub inertia_factor: f64,
}

impl Default for RoadLoadParams {
    fn default() -> Self {
        RoadLoadParams {
            mass_kg: 1850.0,
            drag_area_m2: 0.66,
            air_density_kgpm3: 1.2,
            rolling_coeff: 0.009,
            wheel_radius_m: 0.32,
            inertia_factor: 1.06,
        }
    }
}

/// Route and traffic definition for the generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub schema_version: u32,
    pub route_id: String,
    pub segments: Vec<SegmentSpec>,
    #[serde(default)]
    pub grade: GradeSpec,
    pub aux_power_mean_w: f64,
    #[serde(default)]
    pub aux_power_jitter_w: f64,
    pub sample_time_s: f64,
    #[serde(default)]
    pub road_load: RoadLoadParams,
    /// Mean-speed multiplier applied to odd seeds ("afternoon" traffic).
    #[serde(default = "default_afternoon_factor")]
    pub afternoon_speed_factor: f64,
    /// Hard cap on generated duration, seconds.
    #[serde(default = "default_max_duration")]
    pub max_duration_s: f64,
}

fn default_afternoon_factor() -> f64 {
    0.82
}

fn default_max_duration() -> f64 {
    7200.0
}

impl CycleSpec {
    pub fn load(path: &std::path::Path) -> Result<Self, TripError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TripError::Io { path: path.display().to_string(), msg: e.to_string() })?;
        let spec: CycleSpec =
            toml::from_str(&text).map_err(|e| TripError::Parse(e.to_string()))?;
        if spec.schema_version != CYCLE_SCHEMA_VERSION {
            return Err(TripError::Schema(format!(
                "unsupported cycle schema_version {}",
                spec.schema_version
            )));
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), TripError> {
        let text = toml::to_string(self).map_err(|e| TripError::Parse(e.to_string()))?;
        std::fs::write(path, text)
            .map_err(|e| TripError::Io { path: path.display().to_string(), msg: e.to_string() })
    }

    pub fn validate(&self) -> Result<(), TripError> {
        if self.segments.is_empty() {
            return Err(TripError::Spec("cycle needs at least one segment".into()));
        }
        for (i, seg) in self.segments.iter().enumerate() {
            if !(seg.length_m > 0.0) {
                return Err(TripError::Spec(format!("segment {i}: length must be positive")));
            }
            if seg.mean_speed_mps < 0.0 || seg.speed_std_mps < 0.0 || seg.stops_per_km < 0.0 {
                return Err(TripError::Spec(format!("segment {i}: negative statistic")));
            }
        }
        if !(self.sample_time_s > 0.0) {
            return Err(TripError::Spec("sample_time_s must be positive".into()));
        }
        if !(self.road_load.mass_kg > 0.0 && self.road_load.wheel_radius_m > 0.0) {
            return Err(TripError::Spec("road load mass and wheel radius must be positive".into()));
        }
        if !(self.max_duration_s > 0.0) {
            return Err(TripError::Spec("max_duration_s must be positive".into()));
        }
        Ok(())
    }

    pub fn total_length_m(&self) -> f64 {
        self.segments.iter().map(|s| s.length_m).sum()
    }

    fn segment_at(&self, pos: f64) -> &SegmentSpec {
        let mut acc = 0.0;
        for seg in &self.segments {
            acc += seg.length_m;
            if pos < acc {
                return seg;
            }
        }
        self.segments.last().expect("validated non-empty")
    }

    pub fn grade_at(&self, pos: f64) -> f64 {
        let g = &self.grade;
        if g.amplitude == 0.0 {
            return 0.0;
        }
        g.amplitude * (2.0 * std::f64::consts::PI * pos / g.wavelength_m + g.phase_rad).sin()
    }

    pub fn elevation_at(&self, pos: f64) -> f64 {
        let g = &self.grade;
        if g.amplitude == 0.0 {
            return 0.0;
        }
        let k = 2.0 * std::f64::consts::PI / g.wavelength_m;
        -g.amplitude / k * ((k * pos + g.phase_rad).cos() - g.phase_rad.cos())
    }
}

/// Wheel torque demand from the longitudinal road-load balance:
/// `T_d = r_w * (f_i*m*a + m*g*(c_rr + grade) + 0.5*rho*CdA*v^2)`.
/// Rolling resistance applies only while moving; a stopped vehicle with no
/// launch demand coasts at zero torque (brakes hold it).
pub fn road_load_torque(
    speed_mps: f64,
    accel_mps2: f64,
    grade: f64,
    rl: &RoadLoadParams,
) -> f64 {
    if speed_mps < STANDSTILL_MPS && accel_mps2 <= 0.0 {
        return 0.0;
    }
    let rolling = if speed_mps >= STANDSTILL_MPS {
        rl.mass_kg * GRAVITY_MPS2 * rl.rolling_coeff
    } else {
        0.0
    };
    let force = rl.inertia_factor * rl.mass_kg * accel_mps2
        + rolling
        + rl.mass_kg * GRAVITY_MPS2 * grade
        + 0.5 * rl.air_density_kgpm3 * rl.drag_area_m2 * speed_mps * speed_mps;
    force * rl.wheel_radius_m
}

/// Fixed speed-threshold shift map.
pub fn gear_for_speed(speed_mps: f64) -> u8 {
    const THRESHOLDS: [f64; 5] = [4.0, 8.0, 13.0, 18.0, 24.0];
    for (i, th) in THRESHOLDS.iter().enumerate() {
        if speed_mps < *th {
            return (i + 1) as u8;
        }
    }
    6
}

/// Acceleration ceiling vs speed, keeping demands within the combined
/// engine+motor envelope of the default powertrain.
fn accel_cap(speed_mps: f64) -> f64 {
    (2.3 - 0.055 * speed_mps).clamp(0.5, 2.3)
}

/// Generate one trip over the spec's route. Odd seeds are tagged
/// "afternoon" and drive the route at scaled-down mean speeds.
pub fn generate_trip(spec: &CycleSpec, seed: u64) -> Result<Trip, TripError> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dt = spec.sample_time_s;
    let total_len = spec.total_length_m();
    let afternoon = seed % 2 == 1;
    let speed_factor = if afternoon { spec.afternoon_speed_factor } else { 1.0 };

    // Schedule stop positions per segment, then a terminal stop at route end.
    let mut stops: Vec<f64> = Vec::new();
    let mut seg_start = 0.0;
    for seg in &spec.segments {
        let expected = seg.stops_per_km * seg.length_m / 1000.0;
        let mut count = expected.floor() as usize;
        if rng.random::<f64>() < expected.fract() {
            count += 1;
        }
        let margin = (seg.length_m * 0.1).min(60.0);
        for _ in 0..count {
            stops.push(rng.random_range(seg_start + margin..seg_start + seg.length_m - margin));
        }
        seg_start += seg.length_m;
    }
    stops.sort_by(|a, b| a.partial_cmp(b).unwrap());
    stops.push(total_len);

    let aux_phase: f64 = rng.random_range(0.0..(2.0 * std::f64::consts::PI));
    let theta: f64 = 0.12; // OU mean reversion, 1/s

    let mut speeds: Vec<f64> = Vec::new();
    let mut positions: Vec<f64> = Vec::new();
    let mut v: f64 = 0.0;
    let mut pos: f64 = 0.0;
    let mut stop_idx = 0usize;
    let mut dwell_left = 0.0f64;
    let max_steps = (spec.max_duration_s / dt).ceil() as usize;

    for _ in 0..max_steps {
        speeds.push(v);
        positions.push(pos);

        if pos >= total_len - 0.5 && v < STANDSTILL_MPS {
            break;
        }

        let seg = spec.segment_at(pos.min(total_len - 1e-6));
        let mut target = seg.mean_speed_mps * speed_factor;

        // stop approach: ramp the target down along a braking parabola
        while stop_idx + 1 < stops.len() && pos > stops[stop_idx] + 5.0 {
            stop_idx += 1;
        }
        let next_stop = stops[stop_idx];
        let dist_to_stop = (next_stop - pos).max(0.0);
        if dwell_left > 0.0 {
            target = 0.0;
            dwell_left -= dt;
            if dwell_left <= 0.0 && stop_idx + 1 < stops.len() {
                stop_idx += 1;
            }
        } else if dist_to_stop < v * v / (2.0 * BRAKE_DECEL_MPS2) + 2.0 {
            target = (2.0 * BRAKE_DECEL_MPS2 * dist_to_stop).sqrt().min(target);
            if v < STANDSTILL_MPS && dist_to_stop < 5.0 {
                if stop_idx + 1 == stops.len() {
                    // terminal stop handled by the loop exit above
                    target = 0.0;
                } else {
                    dwell_left = rng.random_range(4.0..22.0);
                    target = 0.0;
                }
            }
        }

        // OU speed process expressed as a clamped acceleration
        let noise: f64 = rng.random_range(-1.0..1.0);
        let sigma = seg.speed_std_mps * (2.0 * theta).sqrt();
        let accel =
            (theta * (target - v) + sigma * noise / dt.sqrt()).clamp(-3.0, accel_cap(v));
        let mut v_next = (v + accel * dt).max(0.0);
        if target == 0.0 && dist_to_stop < 2.0 {
            v_next = 0.0;
        }
        pos += 0.5 * (v + v_next) * dt;
        v = v_next;
    }

    if speeds.len() < 2 {
        return Err(TripError::Spec("generated trip came out empty".into()));
    }

    let n = speeds.len();
    let rl = &spec.road_load;
    let mut samples = Vec::with_capacity(n);
    for k in 0..n {
        let v_k = speeds[k];
        let accel = if k + 1 < n { (speeds[k + 1] - v_k) / dt } else { 0.0 };
        let grade = spec.grade_at(positions[k]);
        let t = k as f64 * dt;
        let aux = spec.aux_power_mean_w
            + spec.aux_power_jitter_w * (2.0 * std::f64::consts::PI * t / 600.0 + aux_phase).sin();
        samples.push(TripSample {
            time_s: t,
            position_m: positions[k],
            vehicle_speed_mps: v_k,
            axle_speed_radps: v_k / rl.wheel_radius_m,
            wheel_torque_nm: road_load_torque(v_k, accel, grade, rl),
            aux_power_w: aux.max(0.0),
            gear: gear_for_speed(v_k),
            elevation_m: spec.elevation_at(positions[k]),
        });
    }

    let trip = Trip {
        route_id: spec.route_id.clone(),
        trip_id: format!("trip{seed:04}"),
        tag: if afternoon { "afternoon".into() } else { "morning".into() },
        sample_time_s: dt,
        samples,
    };
    trip.validate()?;
    Ok(trip)
}
