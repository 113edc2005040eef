use emslab::powertrain::PowertrainParams;
use emslab::trip::{CycleSpec, GradeSpec, RoadLoadParams, SegmentKind, SegmentSpec};
use std::path::Path;

fn main() {
    PowertrainParams::synthetic_default().save(Path::new("configs/phev_default.toml")).unwrap();

    let riverside = CycleSpec {
        schema_version: 1,
        route_id: "riverside".into(),
        segments: vec![
            SegmentSpec { kind: SegmentKind::Urban, length_m: 1800.0, mean_speed_mps: 8.5, speed_std_mps: 2.2, stops_per_km: 2.2 },
            SegmentSpec { kind: SegmentKind::Arterial, length_m: 2600.0, mean_speed_mps: 14.0, speed_std_mps: 2.0, stops_per_km: 0.8 },
            SegmentSpec { kind: SegmentKind::Urban, length_m: 1600.0, mean_speed_mps: 9.0, speed_std_mps: 2.4, stops_per_km: 1.8 },
        ],
        grade: GradeSpec { amplitude: 0.012, wavelength_m: 1400.0, phase_rad: 0.4 },
        aux_power_mean_w: 420.0,
        aux_power_jitter_w: 90.0,
        sample_time_s: 0.2,
        road_load: RoadLoadParams::default(),
        afternoon_speed_factor: 0.80,
        max_duration_s: 2400.0,
    };
    riverside.save(Path::new("configs/cycles/riverside.toml")).unwrap();

    let hillcrest = CycleSpec {
        schema_version: 1,
        route_id: "hillcrest".into(),
        segments: vec![
            SegmentSpec { kind: SegmentKind::Arterial, length_m: 2200.0, mean_speed_mps: 13.0, speed_std_mps: 2.2, stops_per_km: 0.9 },
            SegmentSpec { kind: SegmentKind::Highway, length_m: 3800.0, mean_speed_mps: 26.0, speed_std_mps: 1.8, stops_per_km: 0.0 },
            SegmentSpec { kind: SegmentKind::Urban, length_m: 1400.0, mean_speed_mps: 8.0, speed_std_mps: 2.0, stops_per_km: 2.0 },
        ],
        grade: GradeSpec { amplitude: 0.022, wavelength_m: 2100.0, phase_rad: 1.1 },
        aux_power_mean_w: 500.0,
        aux_power_jitter_w: 120.0,
        sample_time_s: 0.2,
        road_load: RoadLoadParams::default(),
        afternoon_speed_factor: 0.84,
        max_duration_s: 2400.0,
    };
    hillcrest.save(Path::new("configs/cycles/hillcrest.toml")).unwrap();

    let lakeview = CycleSpec {
        schema_version: 1,
        route_id: "lakeview".into(),
        segments: vec![
            SegmentSpec { kind: SegmentKind::Highway, length_m: 4200.0, mean_speed_mps: 28.0, speed_std_mps: 1.6, stops_per_km: 0.0 },
            SegmentSpec { kind: SegmentKind::Arterial, length_m: 2400.0, mean_speed_mps: 15.0, speed_std_mps: 2.4, stops_per_km: 0.7 },
        ],
        grade: GradeSpec { amplitude: 0.008, wavelength_m: 1800.0, phase_rad: 2.3 },
        aux_power_mean_w: 380.0,
        aux_power_jitter_w: 70.0,
        sample_time_s: 0.2,
        road_load: RoadLoadParams::default(),
        afternoon_speed_factor: 0.86,
        max_duration_s: 2400.0,
    };
    lakeview.save(Path::new("configs/cycles/lakeview.toml")).unwrap();
    println!("configs written");
}
