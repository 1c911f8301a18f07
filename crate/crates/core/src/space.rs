//! Cognitive Load Index to spatial parameter remapping.
//!
//! Every variable follows `Round(V_max × (1 − CLI/100))` with half-away-from-zero
//! rounding. Ceiling height is additionally clamped to the 2–10 m range, and
//! furniture area never exceeds `⌊0.5 × S_floor⌋`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default square floor footprint (10 m × 10 m).
pub const DEFAULT_FLOOR_AREA_M2: u32 = 100;
/// Smallest accepted footprint (3 m × 3 m).
pub const MIN_FLOOR_AREA_M2: u32 = 9;
/// Ceiling height of the control scene.
pub const CONTROL_CEILING_M: u32 = 3;

pub const CEILING_MIN_M: f64 = 2.0;
pub const CEILING_MAX_M: f64 = 10.0;
pub const MAX_WINDOWS: u32 = 10;
pub const MAX_PARTITIONS: u32 = 15;
/// Furniture may cover at most this fraction of the floor.
pub const MAX_FURNITURE_RATIO: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum SpaceError {
    #[error("cognitive load index {0} lies outside [0, 100]")]
    CliOutOfRange(f64),
    #[error("floor area {0} m² is below the {MIN_FLOOR_AREA_M2} m² minimum")]
    FloorTooSmall(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariableKind {
    CeilingHeight,
    WindowCount,
    PartitionCount,
    FurnitureDensity,
}

impl VariableKind {
    pub const ALL: [VariableKind; 4] = [
        VariableKind::CeilingHeight,
        VariableKind::WindowCount,
        VariableKind::PartitionCount,
        VariableKind::FurnitureDensity,
    ];
}

/// Range of one spatial variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableSpec {
    pub kind: VariableKind,
    pub v_min: f64,
    pub v_max: f64,
    pub unit: &'static str,
}

impl VariableSpec {
    pub fn new(kind: VariableKind, floor_area_m2: u32) -> Self {
        match kind {
            VariableKind::CeilingHeight => Self {
                kind,
                v_min: CEILING_MIN_M,
                v_max: CEILING_MAX_M,
                unit: "m",
            },
            VariableKind::WindowCount => Self {
                kind,
                v_min: 0.0,
                v_max: MAX_WINDOWS as f64,
                unit: "count",
            },
            VariableKind::PartitionCount => Self {
                kind,
                v_min: 0.0,
                v_max: MAX_PARTITIONS as f64,
                unit: "count",
            },
            VariableKind::FurnitureDensity => Self {
                kind,
                v_min: 0.0,
                v_max: MAX_FURNITURE_RATIO * floor_area_m2 as f64,
                unit: "m2",
            },
        }
    }
}

fn check_cli(cli: f64) -> Result<(), SpaceError> {
    if (0.0..=100.0).contains(&cli) {
        Ok(())
    } else {
        Err(SpaceError::CliOutOfRange(cli))
    }
}

/// Discrete remap of one variable.
pub fn remap_variable(cli: f64, spec: &VariableSpec) -> Result<f64, SpaceError> {
    check_cli(cli)?;
    // (100 - cli) and v_max·(100 - cli) are exact for integral inputs, so exact
    // half-integers survive the division and round away from zero.
    let value = (spec.v_max * (100.0 - cli) / 100.0).round();
    Ok(match spec.kind {
        VariableKind::CeilingHeight => value.clamp(spec.v_min, spec.v_max),
        // Odd floor areas give a half-integer cap that rounding would exceed.
        VariableKind::FurnitureDensity => value.min(spec.v_max.floor()),
        _ => value,
    })
}

/// The four generated spatial variables plus the index that produced them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialConfig {
    pub cli: f64,
    pub ceiling_height_m: u32,
    pub window_count: u32,
    pub partition_count: u32,
    pub furniture_area_m2: u32,
    pub floor_area_m2: u32,
}

impl SpatialConfig {
    /// Furniture area as a fraction of the floor.
    pub fn furniture_density(&self) -> f64 {
        self.furniture_area_m2 as f64 / self.floor_area_m2 as f64
    }

    pub fn value(&self, kind: VariableKind) -> u32 {
        match kind {
            VariableKind::CeilingHeight => self.ceiling_height_m,
            VariableKind::WindowCount => self.window_count,
            VariableKind::PartitionCount => self.partition_count,
            VariableKind::FurnitureDensity => self.furniture_area_m2,
        }
    }

    pub fn is_valid(&self) -> bool {
        (CEILING_MIN_M as u32..=CEILING_MAX_M as u32).contains(&self.ceiling_height_m)
            && self.window_count <= MAX_WINDOWS
            && self.partition_count <= MAX_PARTITIONS
            && self.furniture_area_m2 as f64 <= MAX_FURNITURE_RATIO * self.floor_area_m2 as f64
    }
}

pub fn spatial_config_from_cli(cli: f64, floor_area_m2: u32) -> Result<SpatialConfig, SpaceError> {
    if floor_area_m2 < MIN_FLOOR_AREA_M2 {
        return Err(SpaceError::FloorTooSmall(floor_area_m2));
    }
    let get = |kind| remap_variable(cli, &VariableSpec::new(kind, floor_area_m2)).map(|v| v as u32);
    Ok(SpatialConfig {
        cli,
        ceiling_height_m: get(VariableKind::CeilingHeight)?,
        window_count: get(VariableKind::WindowCount)?,
        partition_count: get(VariableKind::PartitionCount)?,
        furniture_area_m2: get(VariableKind::FurnitureDensity)?,
        floor_area_m2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Control,
    Ceiling,
    Windows,
    Partitions,
    Furniture,
}

/// One of the five calibration scenes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub kind: SceneKind,
    /// Interference intensity in percent: 0 for control, 100 for extremes.
    pub intensity: f64,
    pub config: SpatialConfig,
}

/// The control room followed by four single-variable extremes.
///
/// Scene configs are not remap outputs: the control keeps a 3 m ceiling and
/// each extreme raises exactly one variable to its maximum.
pub fn extremum_scenes(floor_area_m2: u32) -> Result<[Scene; 5], SpaceError> {
    if floor_area_m2 < MIN_FLOOR_AREA_M2 {
        return Err(SpaceError::FloorTooSmall(floor_area_m2));
    }
    let control = SpatialConfig {
        cli: 100.0,
        ceiling_height_m: CONTROL_CEILING_M,
        window_count: 0,
        partition_count: 0,
        furniture_area_m2: 0,
        floor_area_m2,
    };
    let extreme = |kind: SceneKind| {
        let mut c = SpatialConfig {
            cli: 0.0,
            ..control
        };
        match kind {
            SceneKind::Control => {
                return Scene {
                    kind,
                    intensity: 0.0,
                    config: control,
                }
            }
            SceneKind::Ceiling => c.ceiling_height_m = CEILING_MAX_M as u32,
            SceneKind::Windows => c.window_count = MAX_WINDOWS,
            SceneKind::Partitions => c.partition_count = MAX_PARTITIONS,
            SceneKind::Furniture => {
                c.furniture_area_m2 = (MAX_FURNITURE_RATIO * floor_area_m2 as f64).floor() as u32
            }
        }
        Scene {
            kind,
            intensity: 100.0,
            config: c,
        }
    };
    Ok([
        extreme(SceneKind::Control),
        extreme(SceneKind::Ceiling),
        extreme(SceneKind::Windows),
        extreme(SceneKind::Partitions),
        extreme(SceneKind::Furniture),
    ])
}
