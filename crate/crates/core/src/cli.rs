//! Pipeline commands behind the `emslab` binary: generate trips, solve DP,
//! train policies, simulate controllers, and compare — the file-handoff
//! realization of the cloud/on-board split. The `train` output is the
//! cloud-to-vehicle payload; `simulate` consumes it read-only.
//!
//! Configuration precedence everywhere: CLI flag > config file > built-in
//! default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::baselines::{representative_profile, Aecms, AecmsConfig, CdCs, CdCsConfig, RepresentativeSocProfile};
use crate::dp::{self, DpError, DpGrid};
use crate::learn::{self, PolicyParams, SolvedTrip};
use crate::mpc::MpcConfig;
use crate::powertrain::{ParamsError, PowertrainParams, PowertrainState};
use crate::sim::{
    self, mpge, simulate, AecmsController, CdCsController, CompareConfig,
    DpValueMpcController, ProposedController,
};
use crate::trip::{self, CycleSpec, RouteStats, Trip, TripError};
use crate::workspace::{sha256_bytes, sha256_file, ArtifactRecord, WorkspaceLayout, TOOL_VERSION};

/// Failure classes with distinct process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Parse/validation problems in inputs or flags (exit 2).
    Validation(String),
    /// A required artifact is absent (exit 3).
    Missing(String),
    /// The optimization problem itself is infeasible (exit 4).
    Infeasible(String),
    /// Existing artifact with mismatched provenance (exit 5).
    Provenance(String),
    /// Everything else, mostly raw io (exit 1).
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Other(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Missing(_) => 3,
            CliError::Infeasible(_) => 4,
            CliError::Provenance(_) => 5,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Missing(m) => write!(f, "missing artifact: {m}"),
            CliError::Infeasible(m) => write!(f, "infeasible: {m}"),
            CliError::Provenance(m) => write!(f, "{m}"),
            CliError::Other(m) => write!(f, "{m}"),
        }
    }
}

impl From<TripError> for CliError {
    fn from(e: TripError) -> Self {
        match e {
            TripError::Io { .. } => CliError::Missing(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ParamsError> for CliError {
    fn from(e: ParamsError) -> Self {
        match e {
            ParamsError::Io(_) => CliError::Missing(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<DpError> for CliError {
    fn from(e: DpError) -> Self {
        match e {
            DpError::InfeasibleTrip => CliError::Infeasible(e.to_string()),
            DpError::Io(_) => CliError::Missing(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<crate::workspace::WorkspaceError> for CliError {
    fn from(e: crate::workspace::WorkspaceError) -> Self {
        match e {
            crate::workspace::WorkspaceError::ProvenanceConflict(_) => {
                CliError::Provenance(e.to_string())
            }
            _ => CliError::Other(e.to_string()),
        }
    }
}

/// Load powertrain parameters: explicit file, or the built-in synthetic
/// calibration. Returns the params plus a stable content hash for
/// provenance.
pub fn load_params(path: Option<&Path>) -> Result<(PowertrainParams, String), CliError> {
    match path {
        Some(p) => {
            let params = PowertrainParams::load(p)?;
            Ok((params, sha256_file(p)?))
        }
        None => {
            let params = PowertrainParams::synthetic_default();
            let canonical = toml::to_string(&params).map_err(|e| CliError::Other(e.to_string()))?;
            Ok((params, sha256_bytes(canonical.as_bytes())))
        }
    }
}

/// Parse a seed list: `1-16`, `3`, or `1,4,9`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Validation(format!("cannot parse seed list `{text}`"));
    let text = text.trim();
    if let Some((a, b)) = text.split_once('-') {
        let lo: u64 = a.trim().parse().map_err(|_| bad())?;
        let hi: u64 = b.trim().parse().map_err(|_| bad())?;
        if hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(|s| s.trim().parse::<u64>().map_err(|_| bad())).collect()
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Other(format!("{}: {e}", path.display())))
}

/// Generate one trip file per seed. The spec is validated and all trips are
/// synthesized before anything is written, so a bad spec leaves no partial
/// output.
pub fn cmd_generate(
    ws: &WorkspaceLayout,
    spec_path: &Path,
    seeds: &[u64],
    out_dir: Option<&Path>,
    force: bool,
) -> Result<Vec<PathBuf>, CliError> {
    let spec = CycleSpec::load(spec_path)?;
    let spec_hash = sha256_file(spec_path)?;
    let mut generated = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let trip = trip::generate_trip(&spec, seed).map_err(CliError::from)?;
        generated.push((seed, trip));
    }

    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| ws.trips_dir(&spec.route_id));
    create_dir(&dir)?;
    let mut manifest = ws.load_manifest()?;

    let planned: Vec<(PathBuf, ArtifactRecord, &Trip)> = generated
        .iter()
        .map(|(seed, trip)| {
            let name = format!("{}__{}__{}.csv", trip.route_id, trip.trip_id, trip.tag);
            let record = ArtifactRecord {
                inputs: BTreeMap::from([(spec_path.display().to_string(), spec_hash.clone())]),
                config_hash: sha256_bytes(format!("generate seed={seed}").as_bytes()),
                tool_version: TOOL_VERSION.into(),
                command: "generate".into(),
            };
            (dir.join(name), record, trip)
        })
        .collect();

    for (path, record, _) in &planned {
        ws.check_artifact(&manifest, path, record, force)?;
    }
    let mut written = Vec::with_capacity(planned.len());
    for (path, record, trip) in planned {
        trip::save_trip(trip, &path).map_err(CliError::from)?;
        ws.record_artifact(&mut manifest, &path, record);
        written.push(path);
    }
    ws.save_manifest(&manifest)?;
    Ok(written)
}

pub struct SolveDpArgs {
    pub soc_points: usize,
    pub torque_points: usize,
    pub soc0: Option<f64>,
    pub oracle: bool,
}

impl Default for SolveDpArgs {
    fn default() -> Self {
        SolveDpArgs {
            soc_points: DpGrid::DEFAULT_SOC_POINTS,
            torque_points: DpGrid::DEFAULT_TORQUE_POINTS,
            soc0: None,
            oracle: false,
        }
    }
}

pub fn default_initial_state(params: &PowertrainParams) -> PowertrainState {
    PowertrainState::new(0.9 * params.soc_max + 0.1 * params.soc_min, false)
}

/// Solve one trip's optimal control problem and persist the value table
/// plus the trajectory sidecar.
pub fn cmd_solve_dp(
    ws: &WorkspaceLayout,
    trip_path: &Path,
    params_path: Option<&Path>,
    args: &SolveDpArgs,
    out_dir: Option<&Path>,
    force: bool,
) -> Result<(PathBuf, PathBuf), CliError> {
    let (params, params_hash) = load_params(params_path)?;
    let trip = trip::load_trip(trip_path, params.sample_time_s)?;
    let grid = DpGrid::uniform(&params, args.soc_points, args.torque_points);
    let x0 = match args.soc0 {
        Some(soc) => PowertrainState::new(soc, false),
        None => default_initial_state(&params),
    };
    let solution = dp::solve_dp(&trip, &params, &grid, x0)?;

    if args.oracle {
        if trip.samples.len() > dp::MAX_ORACLE_STAGES {
            return Err(CliError::Validation(format!(
                "oracle check limited to {} stages, trip has {}",
                dp::MAX_ORACLE_STAGES,
                trip.samples.len()
            )));
        }
        let oracle = dp::enumerate_optimal(&trip, &params, args.torque_points, x0)
            .ok_or_else(|| CliError::Infeasible("oracle found no feasible sequence".into()))?;
        let rollout = solution.trajectory.total_cost_gal();
        println!("oracle cost: {:.12e} gal, rollout cost: {:.12e} gal", oracle.0, rollout);
        if rollout != oracle.0 {
            return Err(CliError::Validation(format!(
                "rollout cost {rollout:e} differs from enumeration optimum {:e}",
                oracle.0
            )));
        }
        println!("oracle check passed");
    }

    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| ws.dp_dir(&trip.route_id));
    create_dir(&dir)?;
    let table_path = dir.join(format!("{}__{}__table.vt", trip.route_id, trip.trip_id));
    let traj_path = dir.join(format!("{}__{}__traj.csv", trip.route_id, trip.trip_id));

    let record = ArtifactRecord {
        inputs: BTreeMap::from([
            (trip_path.display().to_string(), sha256_file(trip_path)?),
            ("params".to_string(), params_hash),
        ]),
        config_hash: sha256_bytes(
            format!(
                "solve-dp soc_points={} torque_points={} soc0={:?}",
                args.soc_points, args.torque_points, args.soc0
            )
            .as_bytes(),
        ),
        tool_version: TOOL_VERSION.into(),
        command: "solve-dp".into(),
    };
    let mut manifest = ws.load_manifest()?;
    ws.check_artifact(&manifest, &table_path, &record, force)?;
    ws.check_artifact(&manifest, &traj_path, &record, force)?;
    dp::save_table(&solution.table, &table_path)?;
    dp::save_trajectory(&solution.trajectory, &traj_path)?;
    ws.record_artifact(&mut manifest, &table_path, record.clone());
    ws.record_artifact(&mut manifest, &traj_path, record);
    ws.save_manifest(&manifest)?;

    println!(
        "trip {}: optimal cost {:.6} gal-equivalent over {:.2} mi (V0 {:.6})",
        trip.trip_id,
        solution.trajectory.total_cost_gal(),
        trip.total_distance_m() / sim::METERS_PER_MILE,
        solution.v0_gal,
    );
    Ok((table_path, traj_path))
}

/// All trips of a route, sorted by trip id.
pub fn load_route_trips(
    ws: &WorkspaceLayout,
    route_id: &str,
    sample_time_s: f64,
) -> Result<Vec<Trip>, CliError> {
    let dir = ws.trips_dir(route_id);
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
        .map_err(|e| CliError::Missing(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Missing(format!("no trips in {}", dir.display())));
    }
    paths.iter().map(|p| trip::load_trip(p, sample_time_s).map_err(CliError::from)).collect()
}

/// Pair each trip with its persisted DP trajectory.
pub fn load_route_solutions(
    ws: &WorkspaceLayout,
    route_id: &str,
    trips: Vec<Trip>,
) -> Result<Vec<SolvedTrip>, CliError> {
    let dir = ws.dp_dir(route_id);
    trips
        .into_iter()
        .map(|trip| {
            let path = dir.join(format!("{}__{}__traj.csv", trip.route_id, trip.trip_id));
            if !path.exists() {
                return Err(CliError::Missing(format!(
                    "no DP trajectory for trip {} (expected {})",
                    trip.trip_id,
                    path.display()
                )));
            }
            let trajectory = dp::load_trajectory(&path, trip.sample_time_s)?;
            if trajectory.steps.len() != trip.samples.len() {
                return Err(CliError::Validation(format!(
                    "trajectory {} does not match trip length",
                    path.display()
                )));
            }
            Ok(SolvedTrip { trip, trajectory })
        })
        .collect()
}

fn route_input_hashes(
    ws: &WorkspaceLayout,
    route_id: &str,
) -> Result<BTreeMap<String, String>, CliError> {
    let mut inputs = BTreeMap::new();
    for dir in [ws.trips_dir(route_id), ws.dp_dir(route_id)] {
        if !dir.exists() {
            continue;
        }
        let mut paths: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(|e| CliError::Other(format!("{}: {e}", dir.display())))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        paths.sort();
        for p in paths {
            inputs.insert(ws.rel(&p), sha256_file(&p)?);
        }
    }
    Ok(inputs)
}

/// Train the leave-one-out policy and the representative SOC profile for
/// one target trip.
pub fn cmd_train(
    ws: &WorkspaceLayout,
    route_id: &str,
    exclude_trip_id: &str,
    params_path: Option<&Path>,
    ridge_lambda: f64,
    bin_length_m: f64,
    out_dir: Option<&Path>,
    force: bool,
) -> Result<(PathBuf, PathBuf), CliError> {
    let (params, params_hash) = load_params(params_path)?;
    let trips = load_route_trips(ws, route_id, params.sample_time_s)?;
    let corpus = load_route_solutions(ws, route_id, trips)?;

    let training = learn::leave_one_out(&corpus, exclude_trip_id, bin_length_m)
        .map_err(|e| match e {
            learn::LearnError::UnknownTrip(_) | learn::LearnError::CorpusTooSmall(_) => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Other(e.to_string()),
        })?;
    let policy =
        learn::fit(&training, ridge_lambda).map_err(|e| CliError::Other(e.to_string()))?;
    let others: Vec<&dp::Trajectory> = corpus
        .iter()
        .filter(|s| s.trip.trip_id != exclude_trip_id)
        .map(|s| &s.trajectory)
        .collect();
    let profile = representative_profile(&others, &policy.bins)
        .map_err(|e| CliError::Other(e.to_string()))?;

    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| ws.policies_dir());
    create_dir(&dir)?;
    let policy_path = dir.join(format!("{route_id}__{exclude_trip_id}__policy.json"));
    let profile_path = dir.join(format!("{route_id}__{exclude_trip_id}__profile.json"));

    let mut inputs = route_input_hashes(ws, route_id)?;
    inputs.insert("params".into(), params_hash);
    let record = ArtifactRecord {
        inputs,
        config_hash: sha256_bytes(
            format!("train exclude={exclude_trip_id} ridge={ridge_lambda} bin={bin_length_m}")
                .as_bytes(),
        ),
        tool_version: TOOL_VERSION.into(),
        command: "train".into(),
    };
    let mut manifest = ws.load_manifest()?;
    ws.check_artifact(&manifest, &policy_path, &record, force)?;
    ws.check_artifact(&manifest, &profile_path, &record, force)?;
    policy.save(&policy_path).map_err(|e| CliError::Other(e.to_string()))?;
    profile.save(&profile_path).map_err(|e| CliError::Other(e.to_string()))?;
    ws.record_artifact(&mut manifest, &policy_path, record.clone());
    ws.record_artifact(&mut manifest, &profile_path, record);
    ws.save_manifest(&manifest)?;

    println!(
        "trained policy for route {route_id} excluding {exclude_trip_id}: {} bins, {} rows",
        policy.bins.bin_count,
        training.rows.len()
    );
    Ok((policy_path, profile_path))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControllerKind {
    CdCs,
    Aecms,
    Mpc,
    Dp,
}

impl ControllerKind {
    pub fn label(&self) -> &'static str {
        match self {
            ControllerKind::CdCs => "cdcs",
            ControllerKind::Aecms => "aecms",
            ControllerKind::Mpc => "mpc",
            ControllerKind::Dp => "dp",
        }
    }
}

pub struct SimulateArgs {
    pub controller: ControllerKind,
    pub policy_path: Option<PathBuf>,
    pub profile_path: Option<PathBuf>,
    pub table_path: Option<PathBuf>,
    pub soc0: Option<f64>,
    pub torque_candidates: usize,
    pub horizon: usize,
}

/// Closed-loop run of one controller over one trip; writes traces and a
/// summary document.
pub fn cmd_simulate(
    ws: &WorkspaceLayout,
    trip_path: &Path,
    params_path: Option<&Path>,
    args: &SimulateArgs,
    out_dir: Option<&Path>,
    force: bool,
) -> Result<PathBuf, CliError> {
    let (params, params_hash) = load_params(params_path)?;
    let trip = trip::load_trip(trip_path, params.sample_time_s)?;
    let x0 = match args.soc0 {
        Some(soc) => PowertrainState::new(soc, false),
        None => default_initial_state(&params),
    };

    let mut inputs = BTreeMap::from([
        (trip_path.display().to_string(), sha256_file(trip_path)?),
        ("params".to_string(), params_hash),
    ]);

    let policy_default =
        ws.policies_dir().join(format!("{}__{}__policy.json", trip.route_id, trip.trip_id));
    let profile_default =
        ws.policies_dir().join(format!("{}__{}__profile.json", trip.route_id, trip.trip_id));
    let table_default =
        ws.dp_dir(&trip.route_id).join(format!("{}__{}__table.vt", trip.route_id, trip.trip_id));

    let load_policy = |path: &Path| -> Result<PolicyParams, CliError> {
        if !path.exists() {
            return Err(CliError::Missing(format!(
                "policy file {} (train it first)",
                path.display()
            )));
        }
        PolicyParams::load(path).map_err(|e| CliError::Validation(e.to_string()))
    };

    // route stats for the feature bookkeeping: from the policy when one is
    // available, otherwise from the trip itself
    let self_stats = || -> Result<RouteStats, CliError> {
        let bins = trip::make_bins(&[&trip], 100.0)?;
        Ok(RouteStats::from_trips(&[&trip], &bins))
    };

    let mpc_cfg = MpcConfig { horizon: args.horizon, torque_candidates: args.torque_candidates };
    let result = match args.controller {
        ControllerKind::CdCs => {
            let mut ctl = CdCsController(CdCs::new(CdCsConfig::default()));
            simulate(&trip, &mut ctl, &params, &self_stats()?, x0)
        }
        ControllerKind::Aecms => {
            let path = args.profile_path.clone().unwrap_or(profile_default);
            if !path.exists() {
                return Err(CliError::Missing(format!(
                    "representative profile {} (train it first)",
                    path.display()
                )));
            }
            inputs.insert(ws.rel(&path), sha256_file(&path)?);
            let profile = RepresentativeSocProfile::load(&path)
                .map_err(|e| CliError::Validation(e.to_string()))?;
            let mut ctl = AecmsController(Aecms::new(AecmsConfig::default(), profile));
            simulate(&trip, &mut ctl, &params, &self_stats()?, x0)
        }
        ControllerKind::Mpc => {
            let path = args.policy_path.clone().unwrap_or(policy_default);
            let policy = load_policy(&path)?;
            inputs.insert(ws.rel(&path), sha256_file(&path)?);
            let stats = policy.stats.clone();
            let mut ctl = ProposedController { policy, cfg: mpc_cfg };
            simulate(&trip, &mut ctl, &params, &stats, x0)
        }
        ControllerKind::Dp => {
            let path = args.table_path.clone().unwrap_or(table_default);
            if !path.exists() {
                return Err(CliError::Missing(format!(
                    "value table {} (solve-dp first)",
                    path.display()
                )));
            }
            inputs.insert(ws.rel(&path), sha256_file(&path)?);
            let table = dp::load_table(&path)?;
            let stats = self_stats()?;
            let mut ctl =
                DpValueMpcController { table: &table, stats: stats.clone(), cfg: mpc_cfg };
            simulate(&trip, &mut ctl, &params, &stats, x0)
        }
    };

    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| ws.results_dir());
    create_dir(&dir)?;
    let stem = format!("{}__{}__{}", trip.route_id, trip.trip_id, args.controller.label());
    let traces_path = dir.join(format!("{stem}__traces.csv"));
    let summary_path = dir.join(format!("{stem}__summary.json"));

    let record = ArtifactRecord {
        inputs,
        config_hash: sha256_bytes(
            format!(
                "simulate controller={} soc0={:?} candidates={} horizon={}",
                args.controller.label(),
                args.soc0,
                args.torque_candidates,
                args.horizon
            )
            .as_bytes(),
        ),
        tool_version: TOOL_VERSION.into(),
        command: "simulate".into(),
    };
    let mut manifest = ws.load_manifest()?;
    ws.check_artifact(&manifest, &traces_path, &record, force)?;
    ws.check_artifact(&manifest, &summary_path, &record, force)?;
    sim::save_traces(&result, &traces_path).map_err(|e| CliError::Other(e.to_string()))?;
    sim::save_summary(&result, &summary_path).map_err(|e| CliError::Other(e.to_string()))?;
    ws.record_artifact(&mut manifest, &traces_path, record.clone());
    ws.record_artifact(&mut manifest, &summary_path, record);
    ws.save_manifest(&manifest)?;

    let mpge_value = mpge(&result, &params).map_err(|e| CliError::Validation(e.to_string()))?;
    println!(
        "{} on {}: {:.2} MPGe ({} infeasible steps, {} engine starts)",
        args.controller.label(),
        trip.trip_id,
        mpge_value,
        result.totals.infeasible_steps,
        result.totals.engine_starts
    );
    Ok(summary_path)
}

/// Four-way comparison over a route with leave-one-out training per trip.
pub fn cmd_compare(
    ws: &WorkspaceLayout,
    route_id: &str,
    params_path: Option<&Path>,
    ridge_lambda: f64,
    bin_length_m: f64,
    soc0: Option<f64>,
    out_dir: Option<&Path>,
    force: bool,
) -> Result<PathBuf, CliError> {
    let (params, params_hash) = load_params(params_path)?;
    let trips = load_route_trips(ws, route_id, params.sample_time_s)?;
    let corpus = load_route_solutions(ws, route_id, trips)?;

    let mut cfg = CompareConfig::default_for(&params);
    cfg.ridge_lambda = ridge_lambda;
    cfg.bin_length_m = bin_length_m;
    if let Some(soc) = soc0 {
        cfg.x0 = PowertrainState::new(soc, false);
    }
    let report = sim::compare_route(&corpus, &params, &cfg).map_err(|e| match e {
        sim::SimError::MissingArtifacts(m) => CliError::Missing(m),
        other => CliError::Other(other.to_string()),
    })?;

    let dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| ws.results_dir());
    create_dir(&dir)?;
    let csv_path = dir.join(format!("{route_id}__report.csv"));
    let txt_path = dir.join(format!("{route_id}__report.txt"));
    let svg_path = dir.join(format!("{route_id}__chart.svg"));

    let mut inputs = route_input_hashes(ws, route_id)?;
    inputs.insert("params".into(), params_hash);
    let record = ArtifactRecord {
        inputs,
        config_hash: sha256_bytes(
            format!("compare ridge={ridge_lambda} bin={bin_length_m} soc0={soc0:?}").as_bytes(),
        ),
        tool_version: TOOL_VERSION.into(),
        command: "compare".into(),
    };
    let mut manifest = ws.load_manifest()?;
    for p in [&csv_path, &txt_path, &svg_path] {
        ws.check_artifact(&manifest, p, &record, force)?;
    }
    sim::save_report_csv(&report, &csv_path).map_err(|e| CliError::Other(e.to_string()))?;
    let rendered = sim::render_report(&report);
    std::fs::write(&txt_path, &rendered)
        .map_err(|e| CliError::Other(format!("{}: {e}", txt_path.display())))?;
    std::fs::write(&svg_path, sim::render_report_svg(&report))
        .map_err(|e| CliError::Other(format!("{}: {e}", svg_path.display())))?;
    for p in [&csv_path, &txt_path, &svg_path] {
        ws.record_artifact(&mut manifest, p, record.clone());
    }
    ws.save_manifest(&manifest)?;

    print!("{rendered}");
    Ok(csv_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists_parse() {
        assert_eq!(parse_seeds("1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_seeds("7").unwrap(), vec![7]);
        assert_eq!(parse_seeds("1,5,9").unwrap(), vec![1, 5, 9]);
        assert!(parse_seeds("x").is_err());
        assert!(parse_seeds("9-1").is_err());
    }

    #[test]
    fn exit_codes_are_distinct() {
        let codes = [
            CliError::Other("".into()).exit_code(),
            CliError::Validation("".into()).exit_code(),
            CliError::Missing("".into()).exit_code(),
            CliError::Infeasible("".into()).exit_code(),
            CliError::Provenance("".into()).exit_code(),
        ];
        let mut sorted = codes.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), codes.len());
        assert!(codes.iter().all(|c| *c != 0));
    }

    #[test]
    fn builtin_params_hash_is_stable() {
        let (_, h1) = load_params(None).unwrap();
        let (_, h2) = load_params(None).unwrap();
        assert_eq!(h1, h2);
    }
}
