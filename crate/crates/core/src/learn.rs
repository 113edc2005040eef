//! Value-function learner: fits one linear model per position bin mapping
//! the seven feature states (plus bias) to the DP-optimal cost-to-go.
//!
//! Features are standardized to zero mean and unit variance over the
//! training route before fitting (the bias column is exempt); the scaling
//! record travels with the weights, so evaluation is invariant to it. Bins
//! with fewer than [`SPARSE_BIN_MIN_ROWS`] rows borrow the route-global
//! regression instead of extrapolating from a handful of samples.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dp::TrainingSample;
use crate::trip::{FeatureVector, RouteBins, RouteStats, Trip, FEATURE_COUNT};

pub const POLICY_SCHEMA_VERSION: u32 = 1;
/// Bins with fewer rows than this fall back to the route-global fit.
pub const SPARSE_BIN_MIN_ROWS: usize = 16;
/// Default ridge regularization on scaled features.
pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum LearnError {
    #[error("trip `{0}` is not in the corpus")]
    UnknownTrip(String),
    #[error("corpus of {0} trips is too small for leave-one-out")]
    CorpusTooSmall(usize),
    #[error("bin {0} is degenerate even after the route-global fallback")]
    DegenerateBin(usize),
    #[error("bin {bin} out of range (route has {count} bins)")]
    BinOutOfRange { bin: usize, count: usize },
    #[error("policy io: {0}")]
    Io(String),
    #[error("policy parse: {0}")]
    Parse(String),
    #[error("unsupported policy schema_version {0}")]
    SchemaVersion(u32),
    #[error("empty training set")]
    EmptyTrainingSet,
}

/// Per-feature standardization record. The bias entry is pinned to
/// (mean 0, scale 1) so offsets stay representable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mean: [f64; FEATURE_COUNT],
    pub scale: [f64; FEATURE_COUNT],
}

impl FeatureScaling {
    pub fn fit(rows: &[TrainingRow]) -> FeatureScaling {
        let n = rows.len().max(1) as f64;
        let mut mean = [0.0; FEATURE_COUNT];
        for r in rows {
            for (m, x) in mean.iter_mut().zip(r.features.0.iter()) {
                *m += x;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = [0.0; FEATURE_COUNT];
        for r in rows {
            for j in 0..FEATURE_COUNT {
                let d = r.features.0[j] - mean[j];
                var[j] += d * d;
            }
        }
        let mut scale = [1.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT - 1 {
            let s = (var[j] / n).sqrt();
            scale[j] = if s > 1e-12 { s } else { 1.0 };
        }
        // bias column passes through untouched
        mean[FEATURE_COUNT - 1] = 0.0;
        scale[FEATURE_COUNT - 1] = 1.0;
        FeatureScaling { mean, scale }
    }

    pub fn apply(&self, f: &FeatureVector) -> [f64; FEATURE_COUNT] {
        let mut out = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            out[j] = (f.0[j] - self.mean[j]) / self.scale[j];
        }
        out
    }
}

/// One regression row with provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingRow {
    pub trip_id: String,
    pub step: usize,
    pub bin: usize,
    pub features: FeatureVector,
    pub target_gal: f64,
}

/// Assembled regression data for one route (one leave-one-out split).
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingSet {
    pub route_id: String,
    pub excluded_trip_id: Option<String>,
    pub bins: RouteBins,
    pub stats: RouteStats,
    pub rows: Vec<TrainingRow>,
}

/// A DP-solved trip ready for training.
pub struct SolvedTrip {
    pub trip: Trip,
    pub trajectory: crate::dp::Trajectory,
}

/// Build the leave-one-out training set: route statistics and feature rows
/// come from every corpus trip except the target.
pub fn leave_one_out(
    corpus: &[SolvedTrip],
    target_trip_id: &str,
    bin_length_m: f64,
) -> Result<TrainingSet, LearnError> {
    if corpus.len() < 2 {
        return Err(LearnError::CorpusTooSmall(corpus.len()));
    }
    if !corpus.iter().any(|s| s.trip.trip_id == target_trip_id) {
        return Err(LearnError::UnknownTrip(target_trip_id.to_string()));
    }
    let training: Vec<&SolvedTrip> =
        corpus.iter().filter(|s| s.trip.trip_id != target_trip_id).collect();
    build_training_set(&training, Some(target_trip_id.to_string()), bin_length_m)
}

/// Build a training set from all given solved trips (no exclusion).
pub fn build_training_set(
    trips: &[&SolvedTrip],
    excluded_trip_id: Option<String>,
    bin_length_m: f64,
) -> Result<TrainingSet, LearnError> {
    if trips.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let trip_refs: Vec<&Trip> = trips.iter().map(|s| &s.trip).collect();
    let bins = crate::trip::make_bins(&trip_refs, bin_length_m)
        .map_err(|e| LearnError::Parse(e.to_string()))?;
    let stats = RouteStats::from_trips(&trip_refs, &bins);
    let mut rows = Vec::new();
    for solved in trips {
        let samples = crate::dp::values_on_trajectory(&solved.trajectory, &solved.trip, &stats);
        rows.extend(samples.into_iter().map(|s: TrainingSample| TrainingRow {
            trip_id: s.trip_id,
            step: s.step,
            bin: s.bin,
            features: s.features,
            target_gal: s.value_gal,
        }));
    }
    Ok(TrainingSet {
        route_id: trip_refs[0].route_id.clone(),
        excluded_trip_id,
        bins,
        stats,
        rows,
    })
}

/// Learned policy: one weight vector per position bin plus the scaling and
/// route statistics needed to evaluate it on-board. This file is the
/// cloud-to-vehicle payload.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub schema_version: u32,
    pub route_id: String,
    pub excluded_trip_id: Option<String>,
    pub bins: RouteBins,
    pub stats: RouteStats,
    pub scaling: FeatureScaling,
    pub ridge_lambda: f64,
    pub weights: Vec<[f64; FEATURE_COUNT]>,
    pub sample_counts: Vec<u32>,
    /// Route-global regression, also the sparse-bin fallback.
    pub global_weights: [f64; FEATURE_COUNT],
}

impl PolicyParams {
    /// V̂ at a feature vector for position bin `k`: inner product of the
    /// bin's weights with the scaled features.
    pub fn evaluate_vhat(&self, features: &FeatureVector, bin: usize) -> Result<f64, LearnError> {
        let w = self
            .weights
            .get(bin)
            .ok_or(LearnError::BinOutOfRange { bin, count: self.weights.len() })?;
        let x = self.scaling.apply(features);
        Ok(dot(w, &x))
    }

    /// Active weight vector for a route position (clamped at the ends).
    pub fn policy_for_position(&self, position_m: f64) -> (&[f64; FEATURE_COUNT], usize) {
        let bin = self.bins.bin_for(position_m);
        (&self.weights[bin], bin)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), LearnError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| LearnError::Io(e.to_string()))?;
        std::fs::write(path, text).map_err(|e| LearnError::Io(e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> Result<PolicyParams, LearnError> {
        let text = std::fs::read_to_string(path).map_err(|e| LearnError::Io(e.to_string()))?;
        let policy: PolicyParams =
            serde_json::from_str(&text).map_err(|e| LearnError::Parse(e.to_string()))?;
        if policy.schema_version != POLICY_SCHEMA_VERSION {
            return Err(LearnError::SchemaVersion(policy.schema_version));
        }
        Ok(policy)
    }
}

fn dot(a: &[f64; FEATURE_COUNT], b: &[f64; FEATURE_COUNT]) -> f64 {
    let mut acc = 0.0;
    for j in 0..FEATURE_COUNT {
        acc += a[j] * b[j];
    }
    acc
}

/// Ridge solve of the normal equations `(XᵀX + λI) w = Xᵀy` for one set of
/// scaled rows. `None` when the system is singular beyond repair (λ = 0 and
/// rank-deficient).
fn ridge_solve(
    rows: &[(&TrainingRow, [f64; FEATURE_COUNT])],
    ridge_lambda: f64,
) -> Option<[f64; FEATURE_COUNT]> {
    let mut xtx = [[0.0f64; FEATURE_COUNT]; FEATURE_COUNT];
    let mut xty = [0.0f64; FEATURE_COUNT];
    for (row, x) in rows {
        for i in 0..FEATURE_COUNT {
            xty[i] += x[i] * row.target_gal;
            for j in i..FEATURE_COUNT {
                xtx[i][j] += x[i] * x[j];
            }
        }
    }
    for i in 0..FEATURE_COUNT {
        for j in 0..i {
            xtx[i][j] = xtx[j][i];
        }
        xtx[i][i] += ridge_lambda;
    }
    let a =
        nalgebra::SMatrix::<f64, { FEATURE_COUNT }, { FEATURE_COUNT }>::from_fn(|i, j| xtx[i][j]);
    let b = nalgebra::SVector::<f64, { FEATURE_COUNT }>::from_fn(|i, _| xty[i]);
    let solved = a.lu().solve(&b)?;
    let mut w = [0.0; FEATURE_COUNT];
    for j in 0..FEATURE_COUNT {
        if !solved[j].is_finite() {
            return None;
        }
        w[j] = solved[j];
    }
    Some(w)
}

/// Fit the per-bin weight vectors. Deterministic: identical training sets
/// and λ produce bit-identical policies.
pub fn fit(training: &TrainingSet, ridge_lambda: f64) -> Result<PolicyParams, LearnError> {
    if training.rows.is_empty() {
        return Err(LearnError::EmptyTrainingSet);
    }
    let scaling = FeatureScaling::fit(&training.rows);
    let scaled: Vec<(&TrainingRow, [f64; FEATURE_COUNT])> =
        training.rows.iter().map(|r| (r, scaling.apply(&r.features))).collect();

    let global_weights =
        ridge_solve(&scaled, ridge_lambda).ok_or(LearnError::DegenerateBin(usize::MAX))?;

    let bin_count = training.bins.bin_count;
    let mut weights = Vec::with_capacity(bin_count);
    let mut sample_counts = Vec::with_capacity(bin_count);
    for bin in 0..bin_count {
        let rows: Vec<(&TrainingRow, [f64; FEATURE_COUNT])> =
            scaled.iter().filter(|(r, _)| r.bin == bin).cloned().collect();
        sample_counts.push(rows.len() as u32);
        if rows.len() < SPARSE_BIN_MIN_ROWS {
            weights.push(global_weights);
            continue;
        }
        match ridge_solve(&rows, ridge_lambda) {
            Some(w) => weights.push(w),
            None => weights.push(global_weights),
        }
    }

    Ok(PolicyParams {
        schema_version: POLICY_SCHEMA_VERSION,
        route_id: training.route_id.clone(),
        excluded_trip_id: training.excluded_trip_id.clone(),
        bins: training.bins.clone(),
        stats: training.stats.clone(),
        scaling,
        ridge_lambda,
        weights,
        sample_counts,
        global_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn synthetic_rows(rng: &mut ChaCha12Rng, n_per_bin: usize, bins: usize) -> Vec<TrainingRow> {
        let mut rows = Vec::new();
        for bin in 0..bins {
            for i in 0..n_per_bin {
                let features = FeatureVector([
                    rng.random_range(0.2..0.9),
                    if rng.random_bool(0.5) { 1.0 } else { 0.0 },
                    rng.random_range(100.0..900.0),
                    rng.random_range(0.0..0.8),
                    rng.random_range(2.0..30.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(30.0..900.0),
                    1.0,
                ]);
                rows.push(TrainingRow {
                    trip_id: format!("t{}", i % 4),
                    step: i,
                    bin,
                    features,
                    target_gal: 0.0,
                });
            }
        }
        rows
    }

    fn training_set_from(rows: Vec<TrainingRow>, bins: usize) -> TrainingSet {
        let route_bins = RouteBins {
            route_id: "r".into(),
            bin_length_m: 100.0,
            bin_count: bins,
            total_distance_m: bins as f64 * 100.0,
        };
        TrainingSet {
            route_id: "r".into(),
            excluded_trip_id: None,
            bins: route_bins.clone(),
            stats: RouteStats { bins: route_bins, mean_remaining_s: vec![60.0; bins] },
            rows,
        }
    }

    /// Independent normal-equations solver: plain Gauss-Jordan elimination,
    /// no shared code with the production path.
    fn oracle_least_squares(rows: &[(Vec<f64>, f64)], lambda: f64) -> Option<Vec<f64>> {
        let m = rows[0].0.len();
        let mut a = vec![vec![0.0f64; m + 1]; m];
        for (x, y) in rows {
            for i in 0..m {
                a[i][m] += x[i] * y;
                for j in 0..m {
                    a[i][j] += x[i] * x[j];
                }
            }
        }
        for i in 0..m {
            a[i][i] += lambda;
        }
        for col in 0..m {
            let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[piv][col].abs() < 1e-14 {
                return None;
            }
            a.swap(col, piv);
            let d = a[col][col];
            for v in a[col].iter_mut() {
                *v /= d;
            }
            for r in 0..m {
                if r != col {
                    let f = a[r][col];
                    for c in 0..=m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
        Some((0..m).map(|i| a[i][m]).collect())
    }

    #[test]
    fn exact_recovery_of_linear_targets() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut rows = synthetic_rows(&mut rng, 40, 3);
        let scaling = FeatureScaling::fit(&rows);
        let w_true = [0.4, -0.2, 0.13, 1.7, -0.9, 0.05, 0.33, 0.08];
        for r in &mut rows {
            let x = scaling.apply(&r.features);
            r.target_gal = x.iter().zip(w_true.iter()).map(|(a, b)| a * b).sum();
        }
        let ts = training_set_from(rows, 3);
        let policy = fit(&ts, 0.0).unwrap();
        for bin in 0..3 {
            for j in 0..FEATURE_COUNT {
                let rel =
                    (policy.weights[bin][j] - w_true[j]).abs() / w_true[j].abs().max(1e-12);
                assert!(
                    rel < 1e-8,
                    "bin {bin} weight {j}: {} vs {}",
                    policy.weights[bin][j],
                    w_true[j]
                );
            }
        }
    }

    #[test]
    fn constant_target_lands_on_bias() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let mut rows = synthetic_rows(&mut rng, 60, 1);
        for r in &mut rows {
            r.target_gal = 0.37;
        }
        let ts = training_set_from(rows, 1);
        let policy = fit(&ts, 0.0).unwrap();
        let w = &policy.weights[0];
        for j in 0..FEATURE_COUNT - 1 {
            assert!(w[j].abs() < 1e-9, "weight {j} = {}", w[j]);
        }
        assert!((w[FEATURE_COUNT - 1] - 0.37).abs() < 1e-9);
    }

    #[test]
    fn fitted_residual_beats_zero_weights() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let mut rows = synthetic_rows(&mut rng, 50, 4);
        for r in &mut rows {
            r.target_gal = 0.1 * r.features.0[0] + rng.random_range(-0.01..0.01);
        }
        let ts = training_set_from(rows, 4);
        let policy = fit(&ts, 1e-8).unwrap();
        for bin in 0..4 {
            let mut fitted = 0.0;
            let mut zero = 0.0;
            for r in ts.rows.iter().filter(|r| r.bin == bin) {
                let p = policy.evaluate_vhat(&r.features, bin).unwrap();
                fitted += (p - r.target_gal).powi(2);
                zero += r.target_gal.powi(2);
            }
            assert!(fitted <= zero);
        }
    }

    #[test]
    fn predictions_match_independent_solver() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let mut rows = synthetic_rows(&mut rng, 80, 2);
        for r in &mut rows {
            r.target_gal =
                0.02 * r.features.0[4] - 0.3 * r.features.0[0] + rng.random_range(-0.05..0.05);
        }
        let ts = training_set_from(rows.clone(), 2);
        let policy = fit(&ts, 0.0).unwrap();
        let scaling = &policy.scaling;
        for bin in 0..2 {
            let oracle_rows: Vec<(Vec<f64>, f64)> = rows
                .iter()
                .filter(|r| r.bin == bin)
                .map(|r| (scaling.apply(&r.features).to_vec(), r.target_gal))
                .collect();
            let w = oracle_least_squares(&oracle_rows, 0.0).unwrap();
            for r in rows.iter().filter(|r| r.bin == bin) {
                let ours = policy.evaluate_vhat(&r.features, bin).unwrap();
                let x = scaling.apply(&r.features);
                let theirs: f64 = x.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
                assert!((ours - theirs).abs() < 1e-10, "bin {bin}: {ours} vs oracle {theirs}");
            }
        }
    }

    #[test]
    fn evaluate_vhat_is_affine_in_features() {
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let mut rows = synthetic_rows(&mut rng, 40, 1);
        for r in &mut rows {
            r.target_gal = rng.random_range(0.0..1.0);
        }
        let ts = training_set_from(rows.clone(), 1);
        let policy = fit(&ts, 1e-6).unwrap();
        let a = &ts.rows[0].features;
        let b = &ts.rows[1].features;
        let mut mid = [0.0; FEATURE_COUNT];
        for j in 0..FEATURE_COUNT {
            mid[j] = 0.5 * a.0[j] + 0.5 * b.0[j];
        }
        let va = policy.evaluate_vhat(a, 0).unwrap();
        let vb = policy.evaluate_vhat(b, 0).unwrap();
        let vm = policy.evaluate_vhat(&FeatureVector(mid), 0).unwrap();
        assert!((vm - 0.5 * (va + vb)).abs() < 1e-12);
    }

    #[test]
    fn zero_scaled_features_return_bias_weight() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let mut rows = synthetic_rows(&mut rng, 40, 1);
        for r in &mut rows {
            r.target_gal = rng.random_range(0.0..1.0);
        }
        let ts = training_set_from(rows, 1);
        let policy = fit(&ts, 1e-6).unwrap();
        // features exactly at the stored means scale to zero everywhere
        // except the bias entry
        let mut at_mean = [0.0; FEATURE_COUNT];
        at_mean.copy_from_slice(&policy.scaling.mean);
        at_mean[FEATURE_COUNT - 1] = 1.0;
        let v = policy.evaluate_vhat(&FeatureVector(at_mean), 0).unwrap();
        assert!((v - policy.weights[0][FEATURE_COUNT - 1]).abs() < 1e-12);
    }

    #[test]
    fn scaling_equivariance_of_predictions() {
        // rescale a raw feature and refit: predictions at matched raw
        // points are unchanged (the stored record absorbs the scaling)
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let mut rows = synthetic_rows(&mut rng, 60, 1);
        for r in &mut rows {
            r.target_gal = 0.2 * r.features.0[2] / 100.0 + 0.05 * r.features.0[0];
        }
        let ts = training_set_from(rows.clone(), 1);
        let policy = fit(&ts, 0.0).unwrap();
        let mut rows2 = rows.clone();
        for r in &mut rows2 {
            r.features.0[2] *= 1000.0; // aux in milliwatts now
        }
        let ts2 = training_set_from(rows2.clone(), 1);
        let policy2 = fit(&ts2, 0.0).unwrap();
        for (r, r2) in rows.iter().zip(rows2.iter()) {
            let v1 = policy.evaluate_vhat(&r.features, 0).unwrap();
            let v2 = policy2.evaluate_vhat(&r2.features, 0).unwrap();
            assert!((v1 - v2).abs() < 1e-9, "{v1} vs {v2}");
        }
    }

    #[test]
    fn ridge_shrinks_weight_norm_monotonically() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        let mut rows = synthetic_rows(&mut rng, 64, 1);
        for r in &mut rows {
            r.target_gal =
                0.3 * r.features.0[0] - 0.1 * r.features.0[5] + rng.random_range(-0.02..0.02);
        }
        let ts = training_set_from(rows, 1);
        let mut prev_norm = f64::INFINITY;
        for lambda in [0.0, 1e-4, 1e-2, 1.0, 100.0] {
            let policy = fit(&ts, lambda).unwrap();
            let norm: f64 = policy.weights[0].iter().map(|w| w * w).sum::<f64>().sqrt();
            assert!(norm <= prev_norm + 1e-12, "norm grew at lambda {lambda}");
            prev_norm = norm;
        }
    }

    #[test]
    fn sparse_bins_borrow_global_fit() {
        let mut rng = ChaCha12Rng::seed_from_u64(13);
        let mut rows = synthetic_rows(&mut rng, 40, 2);
        // bin 2 gets only three rows
        for i in 0..3 {
            let mut r = rows[i].clone();
            r.bin = 2;
            rows.push(r);
        }
        for r in &mut rows {
            r.target_gal = 0.1 * r.features.0[4];
        }
        let ts = training_set_from(rows, 3);
        let policy = fit(&ts, 1e-6).unwrap();
        assert_eq!(policy.weights[2], policy.global_weights);
        assert_eq!(policy.sample_counts[2], 3);
        assert_ne!(policy.weights[0], policy.global_weights);
    }

    #[test]
    fn fit_is_deterministic() {
        let mut rng = ChaCha12Rng::seed_from_u64(14);
        let mut rows = synthetic_rows(&mut rng, 50, 3);
        for r in &mut rows {
            r.target_gal = 0.07 * r.features.0[6] / 100.0;
        }
        let ts = training_set_from(rows, 3);
        let a = fit(&ts, 1e-6).unwrap();
        let b = fit(&ts, 1e-6).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn policy_roundtrips_and_checks_schema() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let mut rows = synthetic_rows(&mut rng, 40, 2);
        for r in &mut rows {
            r.target_gal = 0.01;
        }
        let ts = training_set_from(rows, 2);
        let policy = fit(&ts, 1e-6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.json");
        policy.save(&path).unwrap();
        let back = PolicyParams::load(&path).unwrap();
        assert_eq!(back, policy);

        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replace("\"schema_version\": 1", "\"schema_version\": 3"))
            .unwrap();
        assert!(matches!(PolicyParams::load(&path), Err(LearnError::SchemaVersion(3))));
    }

    #[test]
    fn bin_out_of_range_rejected() {
        let mut rng = ChaCha12Rng::seed_from_u64(16);
        let mut rows = synthetic_rows(&mut rng, 40, 1);
        for r in &mut rows {
            r.target_gal = 0.01;
        }
        let ts = training_set_from(rows, 1);
        let policy = fit(&ts, 1e-6).unwrap();
        let f = FeatureVector([0.5, 0.0, 100.0, 0.0, 10.0, 0.0, 60.0, 1.0]);
        assert!(matches!(
            policy.evaluate_vhat(&f, 5),
            Err(LearnError::BinOutOfRange { bin: 5, count: 1 })
        ));
    }

    #[test]
    fn policy_for_position_agrees_with_bins() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let mut rows = synthetic_rows(&mut rng, 40, 3);
        for r in &mut rows {
            r.target_gal = 0.01;
        }
        let ts = training_set_from(rows, 3);
        let bins = ts.bins.clone();
        let policy = fit(&ts, 1e-6).unwrap();
        assert_eq!(policy.policy_for_position(0.0).1, 0);
        assert_eq!(policy.policy_for_position(bins.total_distance_m).1, 2);
        assert_eq!(policy.policy_for_position(150.0).1, bins.bin_for(150.0));
    }
}
