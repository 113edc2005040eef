//! Reference controllers: CD-CS (production-style baseline) and A-ECMS
//! tracking a representative DP-derived SOC profile.
//!
//! CD-CS drives electric-only until the SOC reaches the sustaining target,
//! then holds it there: the engine covers demand and load-levels the
//! battery toward the target with a proportional law, with hysteresis on
//! the engine state across the band edges. A-ECMS minimizes
//! `P_f + s(t) * P_q` per step, adapting the equivalence factor `s` by a
//! PI law on the SOC tracking error with conditional-integration
//! anti-windup.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dp::Trajectory;
use crate::mpc::{tie_break, ControlCtx};
use crate::powertrain::{
    candidate_inputs, fallback_input, step_strict, ControlInput, PowertrainParams,
};
use crate::trip::RouteBins;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("no DP solutions supplied for the representative profile")]
    EmptyCorpus,
    #[error("profile io: {0}")]
    Io(String),
    #[error("profile parse: {0}")]
    Parse(String),
}

// ---------------------------------------------------------------------------
// CD-CS
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CdCsConfig {
    /// Half-width of the sustaining band around the target.
    pub cs_band: f64,
    /// Proportional load-leveling gain, W per unit SOC error.
    pub level_gain_w: f64,
}

impl Default for CdCsConfig {
    fn default() -> Self {
        CdCsConfig { cs_band: 0.02, level_gain_w: 250_000.0 }
    }
}

impl CdCsConfig {
    pub fn cs_target(&self, params: &PowertrainParams) -> f64 {
        params.soc_min + self.cs_band
    }
}

/// Charge-depleting / charge-sustaining controller.
pub struct CdCs {
    cfg: CdCsConfig,
    torque_candidates: usize,
    sustaining: bool,
    engine_requested: bool,
}

impl CdCs {
    pub fn new(cfg: CdCsConfig) -> CdCs {
        CdCs { cfg, torque_candidates: 41, sustaining: false, engine_requested: false }
    }

    pub fn is_sustaining(&self) -> bool {
        self.sustaining
    }

    pub fn step(&mut self, ctx: &ControlCtx<'_>, params: &PowertrainParams) -> ControlInput {
        let target = self.cfg.cs_target(params);
        if !self.sustaining && ctx.state.soc <= target {
            self.sustaining = true;
        }

        if !self.sustaining {
            return self.depleting_step(ctx, params);
        }
        self.sustaining_step(ctx, params, target)
    }

    /// CD phase: electric whenever the motor alone can deliver, otherwise
    /// the smallest feasible engine assist.
    fn depleting_step(&mut self, ctx: &ControlCtx<'_>, params: &PowertrainParams) -> ControlInput {
        let off = ControlInput::ENGINE_OFF;
        if step_strict(&ctx.state, &off, &ctx.dist, params, ctx.hsg_remaining_s).is_ok() {
            self.engine_requested = false;
            return off;
        }
        // motor alone cannot meet the demand: bring the engine in at the
        // smallest torque that works
        let shaft = params.shaft_speed(&ctx.dist);
        let mut cands = Vec::new();
        candidate_inputs(ctx.state.engine_on, shaft, self.torque_candidates, params, &mut cands);
        let feasible = cands
            .into_iter()
            .filter(|c| c.engine_switch)
            .filter(|c| step_strict(&ctx.state, c, &ctx.dist, params, ctx.hsg_remaining_s).is_ok())
            .min_by(|a, b| a.engine_torque_nm.total_cmp(&b.engine_torque_nm));
        self.engine_requested = true;
        feasible.unwrap_or_else(|| fallback_input(&ctx.state, &ctx.dist, params))
    }

    /// CS phase: engine covers demand and levels the battery toward the
    /// target; hysteresis turns the engine off at the top of the band and
    /// back on at the target.
    fn sustaining_step(
        &mut self,
        ctx: &ControlCtx<'_>,
        params: &PowertrainParams,
        target: f64,
    ) -> ControlInput {
        let band = self.cfg.cs_band;
        if self.engine_requested {
            if ctx.state.soc >= target + 0.75 * band {
                self.engine_requested = false;
            }
        } else if ctx.state.soc <= target {
            self.engine_requested = true;
        }

        if !self.engine_requested {
            let off = ControlInput::ENGINE_OFF;
            if step_strict(&ctx.state, &off, &ctx.dist, params, ctx.hsg_remaining_s).is_ok() {
                return off;
            }
            self.engine_requested = true;
        }

        // engine on: pick the candidate whose battery power best matches
        // the leveling law, while never overshooting the band top
        let desired_pb = (ctx.state.soc - target) * self.cfg.level_gain_w;
        let shaft = params.shaft_speed(&ctx.dist);
        let mut cands = Vec::new();
        candidate_inputs(ctx.state.engine_on, shaft, self.torque_candidates, params, &mut cands);
        let ceiling = target + band;
        let scored = cands.iter().filter(|c| c.engine_switch).filter_map(|c| {
            let res = step_strict(&ctx.state, c, &ctx.dist, params, ctx.hsg_remaining_s).ok()?;
            if res.next.soc > ceiling {
                return None;
            }
            Some(((res.outputs.battery_power_w - desired_pb).abs(), *c))
        });
        match tie_break(scored) {
            Some((_, input)) => input,
            None => fallback_input(&ctx.state, &ctx.dist, params),
        }
    }
}

// ---------------------------------------------------------------------------
// Representative SOC profile + A-ECMS
// ---------------------------------------------------------------------------

pub const PROFILE_SCHEMA_VERSION: u32 = 1;

/// Per-bin mean of the DP-optimal SOC over the training trips of a route.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentativeSocProfile {
    pub schema_version: u32,
    pub route_id: String,
    pub bins: RouteBins,
    pub soc_per_bin: Vec<f64>,
}

impl RepresentativeSocProfile {
    /// Reference SOC at a position: linear interpolation between bin
    /// centers, clamped at the route ends.
    pub fn soc_at(&self, position_m: f64) -> f64 {
        let n = self.soc_per_bin.len();
        if n == 1 {
            return self.soc_per_bin[0];
        }
        let first = self.bins.center_m(0);
        let last = self.bins.center_m(n - 1);
        if position_m <= first {
            return self.soc_per_bin[0];
        }
        if position_m >= last {
            return self.soc_per_bin[n - 1];
        }
        let k = self.bins.bin_for(position_m);
        let (a, b) = if position_m >= self.bins.center_m(k) {
            (k, (k + 1).min(n - 1))
        } else {
            (k - 1, k)
        };
        if a == b {
            return self.soc_per_bin[a];
        }
        let (pa, pb) = (self.bins.center_m(a), self.bins.center_m(b));
        let t = (position_m - pa) / (pb - pa);
        self.soc_per_bin[a] + t * (self.soc_per_bin[b] - self.soc_per_bin[a])
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), BaselineError> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| BaselineError::Io(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| BaselineError::Io(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<Self, BaselineError> {
        let text =
            std::fs::read_to_string(path).map_err(|e| BaselineError::Io(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| BaselineError::Parse(e.to_string()))
    }
}

/// Average the DP-optimal SOC traces at bin centers.
pub fn representative_profile(
    solutions: &[&Trajectory],
    bins: &RouteBins,
) -> Result<RepresentativeSocProfile, BaselineError> {
    if solutions.is_empty() {
        return Err(BaselineError::EmptyCorpus);
    }
    let mut soc_per_bin = vec![0.0f64; bins.bin_count];
    for traj in solutions {
        for (k, soc) in soc_trace_at_centers(traj, bins).into_iter().enumerate() {
            soc_per_bin[k] += soc;
        }
    }
    for v in &mut soc_per_bin {
        *v /= solutions.len() as f64;
    }
    Ok(RepresentativeSocProfile {
        schema_version: PROFILE_SCHEMA_VERSION,
        route_id: bins.route_id.clone(),
        bins: bins.clone(),
        soc_per_bin,
    })
}

/// SOC interpolated at every bin center for one trajectory. Stopped
/// stretches (position plateaus) take the first crossing.
fn soc_trace_at_centers(traj: &Trajectory, bins: &RouteBins) -> Vec<f64> {
    let mut out = Vec::with_capacity(bins.bin_count);
    let steps = &traj.steps;
    let mut j = 0usize;
    for k in 0..bins.bin_count {
        let center = bins.center_m(k);
        while j + 1 < steps.len() && steps[j + 1].position_m < center {
            j += 1;
        }
        let soc = if j + 1 >= steps.len() {
            traj.terminal_state.soc
        } else {
            let (p0, p1) = (steps[j].position_m, steps[j + 1].position_m);
            let (s0, s1) = (steps[j].state.soc, steps[j + 1].state.soc);
            if p1 <= p0 {
                s1
            } else {
                let t = ((center - p0) / (p1 - p0)).clamp(0.0, 1.0);
                s0 + t * (s1 - s0)
            }
        };
        out.push(soc);
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct AecmsConfig {
    /// Initial (nominal) equivalence factor.
    pub s0: f64,
    /// Proportional gain on SOC tracking error.
    pub kp: f64,
    /// Integral gain, 1/s.
    pub ki: f64,
    pub torque_candidates: usize,
}

impl Default for AecmsConfig {
    fn default() -> Self {
        AecmsConfig { s0: 2.5, kp: 40.0, ki: 0.02, torque_candidates: 41 }
    }
}

/// Adaptive-ECMS controller following a representative SOC profile.
pub struct Aecms {
    cfg: AecmsConfig,
    profile: RepresentativeSocProfile,
    integral: f64,
}

impl Aecms {
    pub fn new(cfg: AecmsConfig, profile: RepresentativeSocProfile) -> Aecms {
        Aecms { cfg, profile, integral: 0.0 }
    }

    /// Current equivalence factor for a given tracking error.
    fn equivalence_factor(&self, err: f64) -> f64 {
        (self.cfg.s0 + self.cfg.kp * err + self.cfg.ki * self.integral)
            .clamp(0.5 * self.cfg.s0, 2.0 * self.cfg.s0)
    }

    pub fn step(&mut self, ctx: &ControlCtx<'_>, params: &PowertrainParams) -> ControlInput {
        let reference = self.profile.soc_at(ctx.position_m);
        let err = reference - ctx.state.soc;
        let raw = self.cfg.s0 + self.cfg.kp * err + self.cfg.ki * self.integral;
        let s = self.equivalence_factor(err);
        // conditional integration: freeze the integral while saturated
        if (raw - s).abs() < f64::EPSILON {
            self.integral += err * params.sample_time_s;
        }

        let shaft = params.shaft_speed(&ctx.dist);
        let mut cands = Vec::new();
        candidate_inputs(ctx.state.engine_on, shaft, self.cfg.torque_candidates, params, &mut cands);
        let scored = cands.iter().filter_map(|c| {
            let res = step_strict(&ctx.state, c, &ctx.dist, params, ctx.hsg_remaining_s).ok()?;
            let cost = (res.outputs.fuel_power_w + s * res.outputs.internal_power_w)
                * params.sample_time_s;
            Some((cost, *c))
        });
        match tie_break(scored) {
            Some((_, input)) => input,
            None => fallback_input(&ctx.state, &ctx.dist, params),
        }
    }
}
