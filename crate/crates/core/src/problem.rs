//! Problem instances: the cell grid and the scheduled rectangular modules to
//! place on it.
//!
//! Module start times and durations come from an upstream schedule and are
//! fixed; only positions and orientations are free. Two modules may share
//! cells when their half-open time spans `[start, start + duration)` are
//! disjoint.

use std::collections::HashSet;
use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Electrode pitch used when the problem file does not give one.
pub const DEFAULT_PITCH_MM: f64 = 1.5;

const PCR_FIXTURE: &str = include_str!("../fixtures/pcr.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows_max: u32,
    pub cols_max: u32,
    pub pitch_mm: f64,
}

impl GridSpec {
    pub fn max_dim(&self) -> u32 {
        self.rows_max.max(self.cols_max)
    }

    pub fn cell_count(&self) -> u64 {
        u64::from(self.rows_max) * u64::from(self.cols_max)
    }
}

/// A scheduled module. `width_cells` spans columns and `height_cells` spans
/// rows when unrotated; both include the segregation ring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub id: String,
    pub width_cells: u32,
    pub height_cells: u32,
    pub start_time_s: f64,
    pub duration_s: f64,
    pub rotatable: bool,
}

impl ModuleSpec {
    /// `(cols, rows)` covered in the given orientation.
    pub fn footprint(&self, rotated: bool) -> (u32, u32) {
        if rotated {
            (self.height_cells, self.width_cells)
        } else {
            (self.width_cells, self.height_cells)
        }
    }

    pub fn cell_count(&self) -> u32 {
        self.width_cells * self.height_cells
    }

    pub fn end_time_s(&self) -> f64 {
        self.start_time_s + self.duration_s
    }
}

/// A validated placement problem. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProblem")]
pub struct ProblemInstance {
    pub grid: GridSpec,
    pub modules: Vec<ModuleSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    rows_max: Option<u32>,
    cols_max: Option<u32>,
    pitch_mm: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModule {
    id: String,
    width_cells: u32,
    height_cells: u32,
    start_time_s: f64,
    duration_s: f64,
    #[serde(default = "default_rotatable")]
    rotatable: bool,
}

fn default_rotatable() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    #[serde(default)]
    grid: Option<RawGrid>,
    modules: Vec<RawModule>,
}

impl ProblemInstance {
    /// Validates and builds an instance from explicit parts.
    pub fn new(grid: GridSpec, modules: Vec<ModuleSpec>) -> Result<Self> {
        let inst = ProblemInstance { grid, modules };
        inst.validate()?;
        Ok(inst)
    }

    fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.rows_max == 0 {
            return Err(Error::InvalidGrid {
                field: "rows_max",
                reason: "must be at least 1".into(),
            });
        }
        if g.cols_max == 0 {
            return Err(Error::InvalidGrid {
                field: "cols_max",
                reason: "must be at least 1".into(),
            });
        }
        if !(g.pitch_mm.is_finite() && g.pitch_mm > 0.0) {
            return Err(Error::InvalidGrid {
                field: "pitch_mm",
                reason: format!("must be positive, got {}", g.pitch_mm),
            });
        }
        if self.modules.is_empty() {
            return Err(Error::NoModules);
        }

        let mut seen = HashSet::new();
        for m in &self.modules {
            let bad = |field: &'static str, reason: String| Error::InvalidModule {
                module: m.id.clone(),
                field,
                reason,
            };
            if m.id.is_empty() {
                return Err(bad("id", "must not be empty".into()));
            }
            if !seen.insert(m.id.as_str()) {
                return Err(bad("id", "duplicate id".into()));
            }
            for (field, v) in [
                ("width_cells", m.width_cells),
                ("height_cells", m.height_cells),
            ] {
                if v == 0 {
                    return Err(bad(field, "must be at least 1".into()));
                }
                if v > g.max_dim() {
                    return Err(bad(
                        field,
                        format!("{v} exceeds grid bound {}", g.max_dim()),
                    ));
                }
            }
            if !(m.start_time_s.is_finite() && m.start_time_s >= 0.0) {
                return Err(bad(
                    "start_time_s",
                    format!("must be nonnegative, got {}", m.start_time_s),
                ));
            }
            if !(m.duration_s.is_finite() && m.duration_s > 0.0) {
                return Err(bad(
                    "duration_s",
                    format!("must be positive, got {}", m.duration_s),
                ));
            }
            let fits = |rot: bool| {
                let (w, h) = m.footprint(rot);
                w <= g.cols_max && h <= g.rows_max
            };
            if !(fits(false) || (m.rotatable && fits(true))) {
                return Err(bad(
                    "width_cells",
                    format!(
                        "{}x{} footprint does not fit a {}x{} grid",
                        m.width_cells, m.height_cells, g.rows_max, g.cols_max
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn module(&self, id: &str) -> Option<&ModuleSpec> {
        self.modules.iter().find(|m| m.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.modules.iter().position(|m| m.id == id)
    }

    /// Bounds in cells: `(rows_max, cols_max)`.
    pub fn bounds(&self) -> (u32, u32) {
        (self.grid.rows_max, self.grid.cols_max)
    }

    /// Largest module footprint in cells.
    pub fn largest_module_cells(&self) -> u32 {
        self.modules
            .iter()
            .map(ModuleSpec::cell_count)
            .max()
            .unwrap_or(0)
    }

    /// Serializes to the problem file format with every optional field
    /// written out.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }

    /// Replaces the grid bounds, revalidating.
    pub fn with_bounds(&self, rows_max: u32, cols_max: u32) -> Result<Self> {
        let grid = GridSpec {
            rows_max,
            cols_max,
            ..self.grid
        };
        ProblemInstance::new(grid, self.modules.clone())
    }
}

/// Parses and validates a problem file.
///
/// Missing grid bounds default to the sum of every module's larger dimension,
/// which always admits a diagonal staircase of all modules. A missing pitch
/// defaults to [`DEFAULT_PITCH_MM`] and `rotatable` defaults to true.
pub fn load_problem<R: Read>(source: R) -> Result<ProblemInstance> {
    let raw: RawProblem = serde_json::from_reader(source)?;
    from_raw(raw)
}

pub fn parse_problem(text: &str) -> Result<ProblemInstance> {
    load_problem(text.as_bytes())
}

impl TryFrom<RawProblem> for ProblemInstance {
    type Error = Error;

    fn try_from(raw: RawProblem) -> Result<Self> {
        from_raw(raw)
    }
}

fn from_raw(raw: RawProblem) -> Result<ProblemInstance> {
    if raw.modules.is_empty() {
        return Err(Error::NoModules);
    }
    let modules: Vec<ModuleSpec> = raw
        .modules
        .into_iter()
        .map(|m| ModuleSpec {
            id: m.id,
            width_cells: m.width_cells,
            height_cells: m.height_cells,
            start_time_s: m.start_time_s,
            duration_s: m.duration_s,
            rotatable: m.rotatable,
        })
        .collect();
    let default_bound: u32 = modules
        .iter()
        .map(|m| m.width_cells.max(m.height_cells))
        .sum();
    let grid = raw.grid.unwrap_or(RawGrid {
        rows_max: None,
        cols_max: None,
        pitch_mm: None,
    });
    let grid = GridSpec {
        rows_max: grid.rows_max.unwrap_or(default_bound),
        cols_max: grid.cols_max.unwrap_or(default_bound),
        pitch_mm: grid.pitch_mm.unwrap_or(DEFAULT_PITCH_MM),
    };
    ProblemInstance::new(grid, modules)
}

/// The seven-mixer PCR mixing stage.
///
/// Footprints and mixing times follow the published resource binding; start
/// times come from the schedule stored in `fixtures/pcr.json`.
pub fn pcr_fixture() -> ProblemInstance {
    parse_problem(PCR_FIXTURE).expect("bundled PCR fixture is valid")
}

/// Raw text of the bundled PCR fixture file.
pub fn pcr_fixture_source() -> &'static str {
    PCR_FIXTURE
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_module(w: u32, h: u32, rows: u32, cols: u32) -> String {
        format!(
            r#"{{"grid": {{"rows_max": {rows}, "cols_max": {cols}, "pitch_mm": 1.5}},
                "modules": [{{"id": "A", "width_cells": {w}, "height_cells": {h},
                              "start_time_s": 0, "duration_s": 1}}]}}"#
        )
    }

    #[test]
    fn minimal_instance() {
        let inst = parse_problem(&one_module(1, 1, 1, 1)).unwrap();
        assert_eq!(inst.bounds(), (1, 1));
        assert_eq!(inst.modules.len(), 1);
        assert!(inst.modules[0].rotatable);
    }

    #[test]
    fn oversized_module_rejected() {
        let err = parse_problem(&one_module(5, 5, 4, 4)).unwrap_err();
        match err {
            Error::InvalidModule { module, field, .. } => {
                assert_eq!(module, "A");
                assert_eq!(field, "width_cells");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_duration_errors() {
        let dup = r#"{"modules": [
            {"id": "A", "width_cells": 1, "height_cells": 1, "start_time_s": 0, "duration_s": 1},
            {"id": "A", "width_cells": 1, "height_cells": 1, "start_time_s": 0, "duration_s": 1}]}"#;
        assert!(matches!(
            parse_problem(dup),
            Err(Error::InvalidModule { field: "id", .. })
        ));
        let zero = r#"{"modules": [
            {"id": "B", "width_cells": 1, "height_cells": 1, "start_time_s": 0, "duration_s": 0}]}"#;
        match parse_problem(zero) {
            Err(Error::InvalidModule { module, field, .. }) => {
                assert_eq!((module.as_str(), field), ("B", "duration_s"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_is_parse_error() {
        assert!(matches!(parse_problem("{ not json"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_problem(r#"{"modules": [{"id": "A"}]}"#),
            Err(Error::Parse(_))
        ));
        assert!(matches!(
            parse_problem(r#"{"modules": []}"#),
            Err(Error::NoModules)
        ));
    }

    #[test]
    fn unrotatable_module_must_fit_as_given() {
        let text = r#"{"grid": {"rows_max": 2, "cols_max": 5},
            "modules": [{"id": "A", "width_cells": 2, "height_cells": 5,
                         "start_time_s": 0, "duration_s": 1, "rotatable": false}]}"#;
        assert!(parse_problem(text).is_err());
        let ok = text.replace("\"rotatable\": false", "\"rotatable\": true");
        assert!(parse_problem(&ok).is_ok());
    }

    #[test]
    fn default_bounds_sum_module_dims() {
        let inst = pcr_fixture();
        assert_eq!(inst.bounds(), (4 + 6 + 5 + 6 + 6 + 4 + 6, 37));
        assert_eq!(inst.grid.pitch_mm, 1.5);
    }

    #[test]
    fn pcr_module_dimensions() {
        let inst = pcr_fixture();
        let expect = [
            ("M1", 4, 4, 10.0),
            ("M2", 3, 6, 5.0),
            ("M3", 4, 5, 6.0),
            ("M4", 3, 6, 5.0),
            ("M5", 3, 6, 5.0),
            ("M6", 4, 4, 10.0),
            ("M7", 4, 6, 3.0),
        ];
        assert_eq!(inst.modules.len(), 7);
        for (id, w, h, d) in expect {
            let m = inst.module(id).unwrap();
            assert_eq!(
                (m.width_cells, m.height_cells, m.duration_s),
                (w, h, d),
                "{id}"
            );
        }
    }

    #[test]
    fn pcr_schedule() {
        let inst = pcr_fixture();
        let span = |id: &str| {
            let m = inst.module(id).unwrap();
            (m.start_time_s, m.end_time_s())
        };
        assert_eq!(span("M1"), (0.0, 10.0));
        assert_eq!(span("M2"), (0.0, 5.0));
        assert_eq!(span("M4"), (0.0, 5.0));
        // M5 waits for M2 and M4, M6 for M1 and M3, M7 for M5 and M6.
        assert_eq!(span("M5").0, span("M2").1.max(span("M4").1));
        assert_eq!(span("M6").0, span("M1").1.max(span("M3").1));
        assert_eq!(span("M7").0, span("M5").1.max(span("M6").1));
        assert_eq!(span("M7"), (26.0, 29.0));
    }

    #[test]
    fn serialize_round_trip() {
        let inst = pcr_fixture();
        let text = inst.to_json();
        let back = parse_problem(&text).unwrap();
        assert_eq!(inst, back);
        assert_eq!(text, back.to_json());
    }
}
