//! The seven feature states (plus bias) that index the learned value
//! function: SOC, engine status, average auxiliary load, cumulative fuel,
//! average speed, average acceleration, and estimated time left.
//!
//! Averages are cumulative means over the trip so far, so extraction is
//! causal and parameter-free. `est_time_left` re-anchors to the route
//! statistic at each bin entry and counts down in between.

use serde::{Deserialize, Serialize};

use super::RouteStats;
use crate::powertrain::PowertrainState;

pub const FEATURE_COUNT: usize = 8;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "soc",
    "engine_status",
    "avg_aux_power_w",
    "fuel_consumed_kg",
    "avg_speed_mps",
    "avg_accel_mps2",
    "est_time_left_s",
    "bias",
];

/// Feature vector in the fixed order of [`FEATURE_NAMES`]; the last entry
/// is the constant bias 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; FEATURE_COUNT]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Causal accumulator of the trip-so-far signals a controller has seen.
///
/// Call [`SimHistory::observe`] once per step with the current exogenous
/// sample before choosing an input, and [`SimHistory::add_fuel`] with the
/// step's fuel mass after the plant advances.
#[derive(Clone, Debug, PartialEq)]
pub struct SimHistory {
    n: usize,
    sum_aux_w: f64,
    sum_speed_mps: f64,
    sum_accel_mps2: f64,
    prev_speed_mps: Option<f64>,
    cur_aux_w: f64,
    cur_speed_mps: f64,
    cur_accel_mps2: f64,
    fuel_cum_kg: f64,
    est_time_left_s: f64,
    cur_bin: Option<usize>,
    sample_time_s: f64,
}

impl SimHistory {
    pub fn new(sample_time_s: f64) -> Self {
        SimHistory {
            n: 0,
            sum_aux_w: 0.0,
            sum_speed_mps: 0.0,
            sum_accel_mps2: 0.0,
            prev_speed_mps: None,
            cur_aux_w: 0.0,
            cur_speed_mps: 0.0,
            cur_accel_mps2: 0.0,
            fuel_cum_kg: 0.0,
            est_time_left_s: 0.0,
            cur_bin: None,
            sample_time_s,
        }
    }

    /// Record the step-`k` exogenous sample (before the control decision).
    pub fn observe(&mut self, speed_mps: f64, aux_power_w: f64, position_m: f64, stats: &RouteStats) {
        let accel = match self.prev_speed_mps {
            Some(prev) => (speed_mps - prev) / self.sample_time_s,
            None => 0.0,
        };
        self.n += 1;
        self.sum_aux_w += aux_power_w;
        self.sum_speed_mps += speed_mps;
        self.sum_accel_mps2 += accel;
        self.prev_speed_mps = Some(speed_mps);
        self.cur_aux_w = aux_power_w;
        self.cur_speed_mps = speed_mps;
        self.cur_accel_mps2 = accel;

        let bin = stats.bins.bin_for(position_m);
        if self.cur_bin != Some(bin) {
            self.cur_bin = Some(bin);
            self.est_time_left_s = stats.mean_remaining_s[bin];
        } else {
            self.est_time_left_s = (self.est_time_left_s - self.sample_time_s).max(0.0);
        }
    }

    /// Account the fuel burned while executing the chosen input.
    pub fn add_fuel(&mut self, fuel_mass_kg: f64) {
        self.fuel_cum_kg += fuel_mass_kg;
    }

    pub fn fuel_cum_kg(&self) -> f64 {
        self.fuel_cum_kg
    }

    pub fn steps_observed(&self) -> usize {
        self.n
    }

    pub fn avg_speed_mps(&self) -> f64 {
        if self.n == 0 { 0.0 } else { self.sum_speed_mps / self.n as f64 }
    }

    pub fn avg_accel_mps2(&self) -> f64 {
        if self.n == 0 { 0.0 } else { self.sum_accel_mps2 / self.n as f64 }
    }

    pub fn avg_aux_w(&self) -> f64 {
        if self.n == 0 { 0.0 } else { self.sum_aux_w / self.n as f64 }
    }

    pub fn est_time_left_s(&self) -> f64 {
        self.est_time_left_s
    }

    /// Feature vector at the current step, given the powertrain state.
    pub fn features(&self, state: &PowertrainState) -> FeatureVector {
        FeatureVector([
            state.soc,
            if state.engine_on { 1.0 } else { 0.0 },
            self.avg_aux_w(),
            self.fuel_cum_kg,
            self.avg_speed_mps(),
            self.avg_accel_mps2(),
            self.est_time_left_s,
            1.0,
        ])
    }

    /// Feature vector one step ahead under the frozen-disturbance
    /// assumption: the averages absorb one repeated sample (zero added
    /// acceleration since the frozen speed is constant), fuel and the
    /// powertrain state come from the candidate's predicted step, and the
    /// time-left estimate re-anchors at bin boundaries.
    pub fn predict_features(
        &self,
        next_state: &PowertrainState,
        fuel_step_kg: f64,
        position_next_m: f64,
        stats: &RouteStats,
    ) -> FeatureVector {
        let n1 = (self.n + 1) as f64;
        let avg_aux = (self.sum_aux_w + self.cur_aux_w) / n1;
        let avg_speed = (self.sum_speed_mps + self.cur_speed_mps) / n1;
        let avg_accel = self.sum_accel_mps2 / n1;
        let next_bin = stats.bins.bin_for(position_next_m);
        let etl = if self.cur_bin == Some(next_bin) {
            (self.est_time_left_s - self.sample_time_s).max(0.0)
        } else {
            stats.mean_remaining_s[next_bin]
        };
        FeatureVector([
            next_state.soc,
            if next_state.engine_on { 1.0 } else { 0.0 },
            avg_aux,
            self.fuel_cum_kg + fuel_step_kg,
            avg_speed,
            avg_accel,
            etl,
            1.0,
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trip::{make_bins, RouteStats, Trip, TripSample};

    fn stats_for(n: usize, speed: f64) -> (Trip, RouteStats) {
        let dt = 1.0;
        let samples = (0..n)
            .map(|i| TripSample {
                time_s: i as f64 * dt,
                position_m: i as f64 * dt * speed,
                vehicle_speed_mps: speed,
                axle_speed_radps: speed / 0.32,
                wheel_torque_nm: 100.0,
                aux_power_w: 200.0,
                gear: 3,
                elevation_m: 0.0,
            })
            .collect();
        let trip = Trip {
            route_id: "r".into(),
            trip_id: "t".into(),
            tag: String::new(),
            sample_time_s: dt,
            samples,
        };
        let bins = make_bins(&[&trip], 100.0).unwrap();
        let stats = RouteStats::from_trips(&[&trip], &bins);
        (trip, stats)
    }

    #[test]
    fn empty_history_defaults_to_instantaneous() {
        let (trip, stats) = stats_for(101, 10.0);
        let mut h = SimHistory::new(1.0);
        let s0 = &trip.samples[0];
        h.observe(s0.vehicle_speed_mps, s0.aux_power_w, s0.position_m, &stats);
        let f = h.features(&PowertrainState::new(0.9, false));
        assert_eq!(f.0[0], 0.9);
        assert_eq!(f.0[1], 0.0);
        assert_eq!(f.0[2], 200.0);
        assert_eq!(f.0[3], 0.0);
        assert_eq!(f.0[4], 10.0);
        assert_eq!(f.0[5], 0.0); // a(0) backward difference is zero
        assert_eq!(f.0[6], stats.mean_total_s());
        assert_eq!(f.0[7], 1.0);
    }

    #[test]
    fn constant_speed_means_stay_constant() {
        let (trip, stats) = stats_for(101, 10.0);
        let mut h = SimHistory::new(1.0);
        for s in &trip.samples {
            h.observe(s.vehicle_speed_mps, s.aux_power_w, s.position_m, &stats);
        }
        assert!((h.avg_speed_mps() - 10.0).abs() < 1e-12);
        assert!((h.avg_accel_mps2()).abs() < 1e-12);
        assert!((h.avg_aux_w() - 200.0).abs() < 1e-12);
    }

    #[test]
    fn running_means_match_hand_computation() {
        let (_, stats) = stats_for(101, 10.0);
        let mut h = SimHistory::new(1.0);
        let speeds = [2.0, 4.0, 9.0];
        let auxes = [100.0, 300.0, 200.0];
        for i in 0..3 {
            h.observe(speeds[i], auxes[i], i as f64, &stats);
        }
        assert!((h.avg_speed_mps() - 5.0).abs() < 1e-12);
        assert!((h.avg_aux_w() - 200.0).abs() < 1e-12);
        // accels: 0, 2, 5 -> mean 7/3
        assert!((h.avg_accel_mps2() - 7.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn fuel_accumulates() {
        let (_, stats) = stats_for(11, 10.0);
        let mut h = SimHistory::new(1.0);
        h.observe(10.0, 0.0, 0.0, &stats);
        h.add_fuel(0.002);
        h.observe(10.0, 0.0, 10.0, &stats);
        h.add_fuel(0.003);
        let f = h.features(&PowertrainState::new(0.5, true));
        assert!((f.0[3] - 0.005).abs() < 1e-15);
        assert_eq!(f.0[1], 1.0);
    }

    #[test]
    fn time_left_anchors_then_counts_down() {
        let (trip, stats) = stats_for(401, 1.0); // 400 m, 100 m bins
        let mut h = SimHistory::new(1.0);
        h.observe(1.0, 0.0, trip.samples[0].position_m, &stats);
        let t0 = h.est_time_left_s();
        assert_eq!(t0, stats.mean_remaining_s[0]);
        h.observe(1.0, 0.0, trip.samples[1].position_m, &stats);
        assert_eq!(h.est_time_left_s(), t0 - 1.0);
        // jump to the next bin: re-anchor
        h.observe(1.0, 0.0, 150.0, &stats);
        assert_eq!(h.est_time_left_s(), stats.mean_remaining_s[1]);
    }

    #[test]
    fn prediction_is_one_repeated_sample() {
        let (_, stats) = stats_for(101, 10.0);
        let mut h = SimHistory::new(1.0);
        h.observe(10.0, 200.0, 0.0, &stats);
        h.observe(12.0, 400.0, 10.0, &stats);
        let next = PowertrainState::new(0.8, true);
        let f = h.predict_features(&next, 0.001, 22.0, &stats);
        // repeated sample: aux (200+400+400)/3, speed (10+12+12)/3
        assert!((f.0[2] - 1000.0 / 3.0).abs() < 1e-12);
        assert!((f.0[4] - 34.0 / 3.0).abs() < 1e-12);
        // accel sum unchanged over n+1
        assert!((f.0[5] - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(f.0[0], 0.8);
        assert_eq!(f.0[1], 1.0);
        assert!((f.0[3] - 0.001).abs() < 1e-15);
    }
}
