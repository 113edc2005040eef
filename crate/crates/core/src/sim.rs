//! Closed-loop simulation harness and energy metrics.
//!
//! Any controller implementing [`Controller`] runs against a trip through
//! the real plant; the harness records full traces, counts constraint
//! violations instead of aborting, and reduces everything to MPGe. The
//! four-way comparison (CD-CS / A-ECMS / proposed MPC / DP) shares this one
//! accounting path: the DP column converts the forward rollout, so every
//! column is "what a vehicle driving this input sequence would consume".

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{representative_profile, Aecms, AecmsConfig, CdCs, CdCsConfig};
use crate::dp::Trajectory;
use crate::learn::{fit, leave_one_out, PolicyParams, SolvedTrip};
use crate::mpc::{mpc_step, ControlCtx, DpTerminal, LearnedTerminal, MpcConfig, TerminalCost};
use crate::powertrain::{step, ControlInput, PowertrainParams, PowertrainState};
use crate::trip::{RouteStats, SimHistory, Trip};

pub const METERS_PER_MILE: f64 = 1609.344;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("trip covers zero distance")]
    ZeroDistance,
    #[error("missing artifacts: {0}")]
    MissingArtifacts(String),
    #[error("result io: {0}")]
    Io(String),
}

/// A causal supervisory controller advanced step by step by the harness.
pub trait Controller {
    fn label(&self) -> &'static str;
    fn control(&mut self, ctx: &ControlCtx<'_>, params: &PowertrainParams) -> ControlInput;
}

/// Per-step traces of a closed-loop run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    pub soc: Vec<f64>,
    pub engine_on: Vec<bool>,
    pub engine_torque_nm: Vec<f64>,
    pub motor_torque_nm: Vec<f64>,
    pub battery_power_w: Vec<f64>,
    pub internal_power_w: Vec<f64>,
    pub fuel_power_w: Vec<f64>,
    pub fuel_mass_kg: Vec<f64>,
    pub infeasible: Vec<bool>,
}

/// Aggregates of one closed-loop run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub distance_miles: f64,
    pub duration_s: f64,
    /// Fuel energy over the trip, gallons-equivalent.
    pub fuel_gallons: f64,
    pub fuel_kg: f64,
    /// Signed integral of internal battery power, kWh.
    pub battery_kwh: f64,
    /// Net battery depletion floored at zero, kWh (the MPGe term).
    pub net_battery_kwh: f64,
    pub infeasible_steps: usize,
    pub engine_starts: usize,
    pub final_soc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trip_id: String,
    pub route_id: String,
    pub controller: String,
    pub sample_time_s: f64,
    pub traces: Traces,
    pub totals: Totals,
}

/// Run a controller against a trip. Deterministic; infeasible commands are
/// clamped by the plant and counted, never thrown.
pub fn simulate(
    trip: &Trip,
    controller: &mut dyn Controller,
    params: &PowertrainParams,
    stats: &RouteStats,
    x0: PowertrainState,
) -> SimResult {
    let n = trip.samples.len();
    let mut traces = Traces::default();
    let reserve = |v: &mut Vec<f64>| v.reserve(n);
    reserve(&mut traces.soc);
    reserve(&mut traces.engine_torque_nm);
    reserve(&mut traces.motor_torque_nm);
    reserve(&mut traces.battery_power_w);
    reserve(&mut traces.internal_power_w);
    reserve(&mut traces.fuel_power_w);
    reserve(&mut traces.fuel_mass_kg);

    let mut history = SimHistory::new(trip.sample_time_s);
    let mut state = x0;
    let mut hsg_remaining = 0.0;
    let mut engine_starts = 0usize;

    for k in 0..n {
        let sample = &trip.samples[k];
        history.observe(sample.vehicle_speed_mps, sample.aux_power_w, sample.position_m, stats);
        let ctx = ControlCtx {
            state,
            dist: trip.disturbance(k),
            vehicle_speed_mps: sample.vehicle_speed_mps,
            position_m: sample.position_m,
            step_index: k,
            history: &history,
            hsg_remaining_s: hsg_remaining,
        };
        let input = controller.control(&ctx, params);
        if input.engine_switch && !state.engine_on {
            engine_starts += 1;
        }
        let res = step(&state, &input, &ctx.dist, params, hsg_remaining);

        traces.soc.push(state.soc);
        traces.engine_on.push(state.engine_on);
        traces.engine_torque_nm.push(input.effective_torque());
        traces.motor_torque_nm.push(res.outputs.motor_torque_nm);
        traces.battery_power_w.push(res.outputs.battery_power_w);
        traces.internal_power_w.push(res.outputs.internal_power_w);
        traces.fuel_power_w.push(res.outputs.fuel_power_w);
        traces.fuel_mass_kg.push(res.outputs.fuel_mass_kg);
        traces.infeasible.push(res.outputs.infeasible);

        history.add_fuel(res.outputs.fuel_mass_kg);
        state = res.next;
        hsg_remaining = res.hsg_remaining_s;
    }

    let totals = totals_from_traces(&traces, trip, params, state.soc, engine_starts);
    SimResult {
        trip_id: trip.trip_id.clone(),
        route_id: trip.route_id.clone(),
        controller: controller.label().to_string(),
        sample_time_s: trip.sample_time_s,
        traces,
        totals,
    }
}

fn totals_from_traces(
    traces: &Traces,
    trip: &Trip,
    params: &PowertrainParams,
    final_soc: f64,
    engine_starts: usize,
) -> Totals {
    let ts = trip.sample_time_s;
    let fuel_j: f64 = traces.fuel_power_w.iter().map(|p| p * ts).sum();
    let battery_j: f64 = traces.internal_power_w.iter().map(|p| p * ts).sum();
    Totals {
        distance_miles: trip.total_distance_m() / METERS_PER_MILE,
        duration_s: trip.duration_s(),
        fuel_gallons: fuel_j / params.joules_per_gallon(),
        fuel_kg: traces.fuel_mass_kg.iter().sum(),
        battery_kwh: battery_j / 3.6e6,
        net_battery_kwh: (battery_j / 3.6e6).max(0.0),
        infeasible_steps: traces.infeasible.iter().filter(|b| **b).count(),
        engine_starts,
        final_soc,
    }
}

/// Convert a DP rollout into the shared result shape, so the DP column of
/// every report uses the same accounting as the causal controllers.
pub fn sim_result_from_trajectory(
    traj: &Trajectory,
    trip: &Trip,
    params: &PowertrainParams,
) -> SimResult {
    let mut traces = Traces::default();
    let mut engine_starts = 0usize;
    for s in &traj.steps {
        if s.input.engine_switch && !s.state.engine_on {
            engine_starts += 1;
        }
        traces.soc.push(s.state.soc);
        traces.engine_on.push(s.state.engine_on);
        traces.engine_torque_nm.push(s.input.effective_torque());
        traces.motor_torque_nm.push(s.outputs.motor_torque_nm);
        traces.battery_power_w.push(s.outputs.battery_power_w);
        traces.internal_power_w.push(s.outputs.internal_power_w);
        traces.fuel_power_w.push(s.outputs.fuel_power_w);
        traces.fuel_mass_kg.push(s.outputs.fuel_mass_kg);
        traces.infeasible.push(s.outputs.infeasible);
    }
    let totals =
        totals_from_traces(&traces, trip, params, traj.terminal_state.soc, engine_starts);
    SimResult {
        trip_id: trip.trip_id.clone(),
        route_id: trip.route_id.clone(),
        controller: "dp".to_string(),
        sample_time_s: trip.sample_time_s,
        traces,
        totals,
    }
}

/// Miles per gallon-equivalent: distance over fuel gallons plus net battery
/// depletion converted at the configured kWh-per-gallon equivalence. Trips
/// that end net-charged credit the battery term at zero.
pub fn mpge(result: &SimResult, params: &PowertrainParams) -> Result<f64, SimError> {
    if result.totals.distance_miles <= 0.0 {
        return Err(SimError::ZeroDistance);
    }
    let gallons =
        result.totals.fuel_gallons + result.totals.net_battery_kwh / params.kwh_per_gallon;
    if gallons <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(result.totals.distance_miles / gallons)
}

// ---------------------------------------------------------------------------
// Controller adapters
// ---------------------------------------------------------------------------

/// Proposed EMS: MPC with the learned terminal value.
pub struct ProposedController {
    pub policy: PolicyParams,
    pub cfg: MpcConfig,
}

impl Controller for ProposedController {
    fn label(&self) -> &'static str {
        "mpc"
    }
    fn control(&mut self, ctx: &ControlCtx<'_>, params: &PowertrainParams) -> ControlInput {
        let terminal = LearnedTerminal(&self.policy);
        mpc_step(ctx, &terminal, &self.policy.stats, params, &self.cfg).chosen
    }
}

/// MPC with a trip's own DP value interpolant as terminal cost
/// (consistency runs).
pub struct DpValueMpcController<'a> {
    pub table: &'a crate::dp::ValueTable,
    pub stats: RouteStats,
    pub cfg: MpcConfig,
}

impl Controller for DpValueMpcController<'_> {
    fn label(&self) -> &'static str {
        "mpc-dp-value"
    }
    fn control(&mut self, ctx: &ControlCtx<'_>, params: &PowertrainParams) -> ControlInput {
        let terminal = DpTerminal(self.table);
        mpc_step(ctx, &terminal, &self.stats, params, &self.cfg).chosen
    }
}

/// Generic MPC adapter over any terminal cost.
pub struct TerminalMpcController<T: TerminalCost> {
    pub terminal: T,
    pub stats: RouteStats,
    pub cfg: MpcConfig,
    pub name: &'static str,
}

impl<T: TerminalCost> Controller for TerminalMpcController<T> {
    fn label(&self) -> &'static str {
        self.name
    }
    fn control(&mut self, ctx: &ControlCtx<'_>, params: &PowertrainParams) -> ControlInput {
        mpc_step(ctx, &self.terminal, &self.stats, params, &self.cfg).chosen
    }
}

pub struct CdCsController(pub CdCs);

impl Controller for CdCsController {
    fn label(&self) -> &'static str {
        "cdcs"
    }
    fn control(&mut self, ctx: &ControlCtx<'_>, params: &PowertrainParams) -> ControlInput {
        self.0.step(ctx, params)
    }
}

pub struct AecmsController(pub Aecms);

impl Controller for AecmsController {
    fn label(&self) -> &'static str {
        "aecms"
    }
    fn control(&mut self, ctx: &ControlCtx<'_>, params: &PowertrainParams) -> ControlInput {
        self.0.step(ctx, params)
    }
}

// ---------------------------------------------------------------------------
// Route comparison
// ---------------------------------------------------------------------------

/// Per-trip MPGe of the four controllers. `mpc` is absent when
/// leave-one-out training was impossible (single-trip corpus).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripComparison {
    pub trip_id: String,
    pub tag: String,
    pub cdcs_mpge: f64,
    pub aecms_mpge: f64,
    pub mpc_mpge: Option<f64>,
    pub dp_mpge: f64,
}

/// Route-level aggregate: arithmetic means over trips plus the percentage
/// deltas the evaluation protocol reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub route_id: String,
    pub trips: Vec<TripComparison>,
    pub avg_cdcs_mpge: f64,
    pub avg_aecms_mpge: f64,
    pub avg_mpc_mpge: Option<f64>,
    pub avg_dp_mpge: f64,
    /// (proposed - CD-CS) / CD-CS, percent.
    pub mpc_vs_cdcs_pct: Option<f64>,
    /// (proposed - DP) / DP, percent.
    pub mpc_vs_dp_pct: Option<f64>,
    /// (A-ECMS - CD-CS) / CD-CS, percent.
    pub aecms_vs_cdcs_pct: f64,
}

/// Controller configurations for a comparison run.
#[derive(Clone, Debug)]
pub struct CompareConfig {
    pub mpc: MpcConfig,
    pub cdcs: CdCsConfig,
    pub aecms: AecmsConfig,
    pub ridge_lambda: f64,
    pub bin_length_m: f64,
    pub x0: PowertrainState,
}

impl CompareConfig {
    pub fn default_for(params: &PowertrainParams) -> CompareConfig {
        CompareConfig {
            mpc: MpcConfig::default(),
            cdcs: CdCsConfig::default(),
            aecms: AecmsConfig::default(),
            ridge_lambda: crate::learn::DEFAULT_RIDGE_LAMBDA,
            bin_length_m: 100.0,
            x0: PowertrainState::new(0.9 * params.soc_max + 0.1 * params.soc_min, false),
        }
    }
}

/// Run the full four-way comparison over one route's solved corpus with
/// leave-one-out training per target trip.
pub fn compare_route(
    corpus: &[SolvedTrip],
    params: &PowertrainParams,
    cfg: &CompareConfig,
) -> Result<ComparisonReport, SimError> {
    if corpus.is_empty() {
        return Err(SimError::MissingArtifacts("empty corpus".into()));
    }
    let route_id = corpus[0].trip.route_id.clone();
    let mut rows = Vec::with_capacity(corpus.len());

    for target in corpus {
        let trip = &target.trip;

        // leave-one-out artifacts; impossible with a single trip
        let loo = if corpus.len() >= 2 {
            let training = leave_one_out(corpus, &trip.trip_id, cfg.bin_length_m)
                .map_err(|e| SimError::MissingArtifacts(e.to_string()))?;
            let policy = fit(&training, cfg.ridge_lambda)
                .map_err(|e| SimError::MissingArtifacts(e.to_string()))?;
            let others: Vec<&Trajectory> = corpus
                .iter()
                .filter(|s| s.trip.trip_id != trip.trip_id)
                .map(|s| &s.trajectory)
                .collect();
            let profile = representative_profile(&others, &policy.bins)
                .map_err(|e| SimError::MissingArtifacts(e.to_string()))?;
            Some((policy, profile))
        } else {
            None
        };

        // baseline stats must also be leave-one-out for causal fairness;
        // fall back to the trip itself only in the degenerate case
        let stats = match &loo {
            Some((policy, _)) => policy.stats.clone(),
            None => {
                let bins = crate::trip::make_bins(&[trip], cfg.bin_length_m)
                    .map_err(|e| SimError::MissingArtifacts(e.to_string()))?;
                RouteStats::from_trips(&[trip], &bins)
            }
        };

        let mut cdcs = CdCsController(CdCs::new(cfg.cdcs));
        let cdcs_res = simulate(trip, &mut cdcs, params, &stats, cfg.x0);

        let aecms_res = match &loo {
            Some((_, profile)) => {
                let mut aecms = AecmsController(Aecms::new(cfg.aecms.clone(), profile.clone()));
                simulate(trip, &mut aecms, params, &stats, cfg.x0)
            }
            None => {
                // degenerate corpus: track the trip's own DP SOC profile
                let bins = stats.bins.clone();
                let profile = representative_profile(&[&target.trajectory], &bins)
                    .map_err(|e| SimError::MissingArtifacts(e.to_string()))?;
                let mut aecms = AecmsController(Aecms::new(cfg.aecms.clone(), profile));
                simulate(trip, &mut aecms, params, &stats, cfg.x0)
            }
        };

        let mpc_mpge = match &loo {
            Some((policy, _)) => {
                let mut proposed =
                    ProposedController { policy: policy.clone(), cfg: cfg.mpc };
                let res = simulate(trip, &mut proposed, params, &stats, cfg.x0);
                Some(mpge(&res, params)?)
            }
            None => None,
        };

        let dp_res = sim_result_from_trajectory(&target.trajectory, trip, params);

        rows.push(TripComparison {
            trip_id: trip.trip_id.clone(),
            tag: trip.tag.clone(),
            cdcs_mpge: mpge(&cdcs_res, params)?,
            aecms_mpge: mpge(&aecms_res, params)?,
            mpc_mpge,
            dp_mpge: mpge(&dp_res, params)?,
        });
    }

    let mean = |f: &dyn Fn(&TripComparison) -> f64| -> f64 {
        rows.iter().map(|r| f(r)).sum::<f64>() / rows.len() as f64
    };
    let avg_cdcs = mean(&|r| r.cdcs_mpge);
    let avg_aecms = mean(&|r| r.aecms_mpge);
    let avg_dp = mean(&|r| r.dp_mpge);
    let avg_mpc = if rows.iter().all(|r| r.mpc_mpge.is_some()) {
        Some(mean(&|r| r.mpc_mpge.unwrap()))
    } else {
        None
    };

    Ok(ComparisonReport {
        route_id,
        trips: rows,
        avg_cdcs_mpge: avg_cdcs,
        avg_aecms_mpge: avg_aecms,
        avg_mpc_mpge: avg_mpc,
        avg_dp_mpge: avg_dp,
        mpc_vs_cdcs_pct: avg_mpc.map(|m| 100.0 * (m - avg_cdcs) / avg_cdcs),
        mpc_vs_dp_pct: avg_mpc.map(|m| 100.0 * (m - avg_dp) / avg_dp),
        aecms_vs_cdcs_pct: 100.0 * (avg_aecms - avg_cdcs) / avg_cdcs,
    })
}

// ---------------------------------------------------------------------------
// Persistence: traces, summaries, report tables, charts
// ---------------------------------------------------------------------------

pub const TRACE_CSV_HEADER: &str =
    "step,soc,engine_on,engine_torque_Nm,motor_torque_Nm,battery_power_W,internal_power_W,fuel_power_W,fuel_mass_kg,infeasible";

pub fn save_traces(result: &SimResult, path: &std::path::Path) -> Result<(), SimError> {
    let io = |e: csv::Error| SimError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(TRACE_CSV_HEADER.split(',')).map_err(io)?;
    let t = &result.traces;
    for k in 0..t.soc.len() {
        w.write_record(&[
            k.to_string(),
            t.soc[k].to_string(),
            (t.engine_on[k] as u8).to_string(),
            t.engine_torque_nm[k].to_string(),
            t.motor_torque_nm[k].to_string(),
            t.battery_power_w[k].to_string(),
            t.internal_power_w[k].to_string(),
            t.fuel_power_w[k].to_string(),
            t.fuel_mass_kg[k].to_string(),
            (t.infeasible[k] as u8).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| SimError::Io(format!("{}: {e}", path.display())))
}

pub fn save_summary(result: &SimResult, path: &std::path::Path) -> Result<(), SimError> {
    #[derive(Serialize)]
    struct Summary<'a> {
        trip_id: &'a str,
        route_id: &'a str,
        controller: &'a str,
        totals: &'a Totals,
    }
    let text = serde_json::to_string_pretty(&Summary {
        trip_id: &result.trip_id,
        route_id: &result.route_id,
        controller: &result.controller,
        totals: &result.totals,
    })
    .map_err(|e| SimError::Io(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| SimError::Io(e.to_string()))
}

pub fn save_report_csv(report: &ComparisonReport, path: &std::path::Path) -> Result<(), SimError> {
    let io = |e: csv::Error| SimError::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["route_id", "trip_id", "tag", "cdcs_mpge", "aecms_mpge", "mpc_mpge", "dp_mpge"])
        .map_err(io)?;
    for r in &report.trips {
        w.write_record(&[
            report.route_id.clone(),
            r.trip_id.clone(),
            r.tag.clone(),
            r.cdcs_mpge.to_string(),
            r.aecms_mpge.to_string(),
            r.mpc_mpge.map_or_else(|| "unavailable".into(), |v| v.to_string()),
            r.dp_mpge.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| SimError::Io(format!("{}: {e}", path.display())))
}

/// Plain-text table of the route averages and deltas.
pub fn render_report(report: &ComparisonReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("route {}\n", report.route_id));
    out.push_str(&format!("{:<12}{:>12}\n", "controller", "avg MPGe"));
    out.push_str(&format!("{:<12}{:>12.2}\n", "cdcs", report.avg_cdcs_mpge));
    out.push_str(&format!("{:<12}{:>12.2}\n", "aecms", report.avg_aecms_mpge));
    match report.avg_mpc_mpge {
        Some(v) => out.push_str(&format!("{:<12}{:>12.2}\n", "mpc", v)),
        None => out.push_str(&format!("{:<12}{:>12}\n", "mpc", "unavailable")),
    }
    out.push_str(&format!("{:<12}{:>12.2}\n", "dp", report.avg_dp_mpge));
    if let (Some(vs_cdcs), Some(vs_dp)) = (report.mpc_vs_cdcs_pct, report.mpc_vs_dp_pct) {
        out.push_str(&format!("mpc vs cdcs: {vs_cdcs:+.2}%\n"));
        out.push_str(&format!("mpc vs dp:   {vs_dp:+.2}%\n"));
    }
    out.push_str(&format!("aecms vs cdcs: {:+.2}%\n", report.aecms_vs_cdcs_pct));
    out
}

/// Grouped per-trip MPGe bars as a static SVG.
pub fn render_report_svg(report: &ComparisonReport) -> String {
    let series: [(&str, &str); 4] =
        [("cdcs", "#888888"), ("aecms", "#4477aa"), ("mpc", "#cc6633"), ("dp", "#228833")];
    let n = report.trips.len().max(1);
    let group_w = 56.0;
    let bar_w = 11.0;
    let height = 320.0;
    let plot_h = 260.0;
    let width = 60.0 + group_w * n as f64;
    let max_mpge = report
        .trips
        .iter()
        .flat_map(|t| {
            [t.cdcs_mpge, t.aecms_mpge, t.mpc_mpge.unwrap_or(0.0), t.dp_mpge]
        })
        .fold(1.0f64, f64::max);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    svg.push_str(&format!(
        "<text x=\"{:.0}\" y=\"16\" font-family=\"sans-serif\" font-size=\"13\">route {} MPGe per trip</text>\n",
        width / 2.0 - 70.0,
        report.route_id
    ));
    for (i, t) in report.trips.iter().enumerate() {
        let x0 = 50.0 + group_w * i as f64;
        let values = [Some(t.cdcs_mpge), Some(t.aecms_mpge), t.mpc_mpge, Some(t.dp_mpge)];
        for (j, (value, (_, color))) in values.iter().zip(series.iter()).enumerate() {
            if let Some(v) = value {
                let h = (v / max_mpge * plot_h).max(1.0);
                svg.push_str(&format!(
                    "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{bar_w}\" height=\"{h:.1}\" fill=\"{color}\"/>\n",
                    x0 + bar_w * j as f64,
                    30.0 + plot_h - h,
                ));
            }
        }
        svg.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"10\">{}</text>\n",
            x0,
            height - 12.0,
            t.trip_id,
        ));
    }
    for (j, (name, color)) in series.iter().enumerate() {
        let x = 50.0 + 120.0 * j as f64;
        svg.push_str(&format!(
            "<rect x=\"{x:.0}\" y=\"{:.0}\" width=\"10\" height=\"10\" fill=\"{color}\"/><text x=\"{:.0}\" y=\"{:.0}\" font-family=\"sans-serif\" font-size=\"11\">{name}</text>\n",
            height - 40.0, x + 14.0, height - 31.0,
        ));
    }
    svg.push_str("</svg>\n");
    svg
}
