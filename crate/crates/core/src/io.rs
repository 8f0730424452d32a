//! Result files and layout drawings.
//!
//! Every file is pretty-printed JSON with a trailing newline and carries a
//! `schema_version`. Field order is fixed by the record types, and no timing
//! or host information is written, so identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::anneal::{AnnealParams, CostWeights};
use crate::empty_rect::{maximal_empty_rects, MaximalEmptyRect};
use crate::error::Result;
use crate::fault::CoverageReport;
use crate::pipeline::{StageResult, SweepEntry};
use crate::placement::{
    bounding_array, occupancy_in, time_overlap, Concurrency, PlacedModule, Placement,
};
use crate::problem::ProblemInstance;

pub const SCHEMA_VERSION: u32 = 1;

/// Settings a run was made with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunParameters {
    pub anneal: Option<AnnealParams>,
    pub weights: Option<CostWeights>,
    pub t_ltsa: Option<f64>,
}

/// Geometry and scores of one placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRecord {
    pub modules: Vec<PlacedModule>,
    pub rows_used: u32,
    pub cols_used: u32,
    pub cell_count: u64,
    pub area_mm2: f64,
    pub k: u64,
    pub fti: f64,
}

impl LayoutRecord {
    pub fn from_result(r: &StageResult) -> Self {
        LayoutRecord {
            modules: r.placement.placed(),
            rows_used: r.rows_used,
            cols_used: r.cols_used,
            cell_count: r.cell_count,
            area_mm2: r.area_mm2,
            k: r.k,
            fti: r.fti,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: u32,
    pub command: String,
    pub seed: Option<u64>,
    pub parameters: RunParameters,
    pub problem: ProblemInstance,
    pub layout: LayoutRecord,
}

impl ResultRecord {
    pub fn new(
        command: &str,
        seed: Option<u64>,
        parameters: RunParameters,
        r: &StageResult,
    ) -> Self {
        ResultRecord {
            schema_version: SCHEMA_VERSION,
            command: command.to_owned(),
            seed,
            parameters,
            problem: r.placement.instance().clone(),
            layout: LayoutRecord::from_result(r),
        }
    }

    /// Rebuilds the placement the record describes.
    pub fn placement(&self) -> Result<Placement> {
        Placement::from_placed(Arc::new(self.problem.clone()), &self.layout.modules)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRun {
    pub beta: f64,
    pub seed: u64,
    pub layout: LayoutRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub schema_version: u32,
    pub command: String,
    pub base_seed: u64,
    pub parameters: RunParameters,
    pub problem: ProblemInstance,
    pub runs: Vec<SweepRun>,
}

impl SweepRecord {
    pub fn new(base_seed: u64, parameters: RunParameters, entries: &[SweepEntry]) -> Self {
        SweepRecord {
            schema_version: SCHEMA_VERSION,
            command: "sweep".into(),
            base_seed,
            parameters,
            problem: entries[0].result.placement.instance().clone(),
            runs: entries
                .iter()
                .map(|e| SweepRun {
                    beta: e.beta,
                    seed: e.result.seed,
                    layout: LayoutRecord::from_result(&e.result),
                })
                .collect(),
        }
    }

    /// Plain-text `(beta, area, FTI)` table.
    pub fn table(&self) -> String {
        let mut out = String::from("beta\tcells\tarea_mm2\tk\tfti\tseed\n");
        for r in &self.runs {
            let _ = writeln!(
                out,
                "{}\t{}\t{}\t{}\t{:.4}\t{}",
                r.beta, r.layout.cell_count, r.layout.area_mm2, r.layout.k, r.layout.fti, r.seed
            );
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRecord {
    pub schema_version: u32,
    pub command: String,
    pub grid_rows: u32,
    pub grid_cols: u32,
    pub origin_row: u32,
    pub origin_col: u32,
    pub k: u64,
    pub fti: f64,
    /// One string per row, top row first; `1` marks a covered cell.
    pub covered: Vec<String>,
}

impl CoverageRecord {
    pub fn new(report: &CoverageReport) -> Self {
        let covered = (1..=report.grid_rows)
            .rev()
            .map(|r| {
                (1..=report.grid_cols)
                    .map(|c| {
                        if report.is_covered_local(r, c) {
                            '1'
                        } else {
                            '0'
                        }
                    })
                    .collect()
            })
            .collect();
        CoverageRecord {
            schema_version: SCHEMA_VERSION,
            command: "fti".into(),
            grid_rows: report.grid_rows,
            grid_cols: report.grid_cols,
            origin_row: report.origin_row,
            origin_col: report.origin_col,
            k: report.k,
            fti: report.fti(),
            covered,
        }
    }
}

/// Maximal empty rectangles each module sees once lifted off the layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleRects {
    pub id: String,
    pub rects: Vec<MaximalEmptyRect>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RectsRecord {
    pub schema_version: u32,
    pub command: String,
    /// Rectangles use coordinates local to the bounding array.
    pub origin_row: u32,
    pub origin_col: u32,
    pub modules: Vec<ModuleRects>,
}

impl RectsRecord {
    pub fn new(p: &Placement) -> Result<Self> {
        let region = bounding_array(p);
        let conc = Concurrency::new(p.instance());
        let modules = p
            .instance()
            .modules
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let occ = occupancy_in(p, &conc, i, None, region)?;
                Ok(ModuleRects {
                    id: m.id.clone(),
                    rects: maximal_empty_rects(&occ).into_iter().collect(),
                })
            })
            .collect::<Result<_>>()?;
        Ok(RectsRecord {
            schema_version: SCHEMA_VERSION,
            command: "rects".into(),
            origin_row: region.row0,
            origin_col: region.col0,
            modules,
        })
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("records serialize");
    s.push('\n');
    s
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_result<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    fs::write(path, to_json(value))?;
    Ok(())
}

pub fn read_result(path: &Path) -> Result<ResultRecord> {
    from_json(&fs::read_to_string(path)?)
}

const CELL_PX: u32 = 32;
const MARGIN_PX: u32 = 24;
const PALETTE: [&str; 8] = [
    "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#9c755f",
];

/// For each module, the other modules whose cells it reuses at another time.
fn time_sharing_partners(p: &Placement) -> Vec<Vec<usize>> {
    let inst = p.instance();
    let fps = p.footprints();
    (0..fps.len())
        .map(|i| {
            (0..fps.len())
                .filter(|&j| {
                    j != i
                        && !time_overlap(&inst.modules[i], &inst.modules[j])
                        && fps[i].intersection(&fps[j]) > 0
                })
                .collect()
        })
        .collect()
}

/// SVG drawing of the bounding array: grid lines, one labelled rectangle per
/// module, hatching and a badge on modules that share cells across time,
/// and an `x` on every uncovered cell when a report is given.
pub fn render_svg(p: &Placement, report: Option<&CoverageReport>) -> String {
    let bb = bounding_array(p);
    let (rows, cols) = (bb.rows(), bb.cols());
    let width = cols * CELL_PX + 2 * MARGIN_PX;
    let height = rows * CELL_PX + 2 * MARGIN_PX;
    let x_of = |col: u32| MARGIN_PX + (col - bb.col0) * CELL_PX;
    let y_of = |row: u32| MARGIN_PX + (bb.row1 - row) * CELL_PX;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    s.push_str("<defs>\n");
    for (i, color) in PALETTE.iter().enumerate() {
        // Alternate hatch angles so stacked time-sharing modules stay distinguishable.
        let angle = if i % 2 == 0 { 45 } else { -45 };
        let _ = writeln!(
            s,
            r#"<pattern id="hatch{i}" patternUnits="userSpaceOnUse" width="8" height="8" patternTransform="rotate({angle})"><line x1="0" y1="0" x2="0" y2="8" stroke="{color}" stroke-width="3"/></pattern>"#
        );
    }
    s.push_str("</defs>\n");
    let _ = writeln!(
        s,
        r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
    );

    s.push_str(r##"<g class="grid" stroke="#cccccc" stroke-width="1">"##);
    s.push('\n');
    for c in 0..=cols {
        let x = MARGIN_PX + c * CELL_PX;
        let _ = writeln!(
            s,
            r#"<line x1="{x}" y1="{MARGIN_PX}" x2="{x}" y2="{}"/>"#,
            MARGIN_PX + rows * CELL_PX
        );
    }
    for r in 0..=rows {
        let y = MARGIN_PX + r * CELL_PX;
        let _ = writeln!(
            s,
            r#"<line x1="{MARGIN_PX}" y1="{y}" x2="{}" y2="{y}"/>"#,
            MARGIN_PX + cols * CELL_PX
        );
    }
    s.push_str("</g>\n");

    let partners = time_sharing_partners(p);
    let inst = p.instance();
    for (i, spec) in inst.modules.iter().enumerate() {
        let fp = p.footprint(i);
        let color = PALETTE[i % PALETTE.len()];
        let (x, y) = (x_of(fp.col0), y_of(fp.row1));
        let (w, h) = (fp.cols() * CELL_PX, fp.rows() * CELL_PX);
        let shared = !partners[i].is_empty();
        let fill = if shared {
            format!("url(#hatch{})", i % PALETTE.len())
        } else {
            color.to_owned()
        };
        let opacity = if shared { "0.9" } else { "0.35" };
        let _ = writeln!(
            s,
            r#"<g class="module" data-id="{id}"><rect x="{x}" y="{y}" width="{w}" height="{h}" fill="{fill}" fill-opacity="{opacity}" stroke="{color}" stroke-width="2"/>"#,
            id = xml_escape(&spec.id)
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{} [{}, {})</text>"#,
            x + w / 2,
            y + h / 2 + 4,
            xml_escape(&spec.id),
            spec.start_time_s,
            spec.end_time_s()
        );
        if shared {
            let _ = writeln!(
                s,
                r##"<g class="shared-badge"><circle cx="{cx}" cy="{cy}" r="8" fill="#333333"/><text x="{cx}" y="{ty}" font-size="10" fill="white" text-anchor="middle">{n}</text></g>"##,
                cx = x + w - 10,
                cy = y + 10,
                ty = y + 14,
                n = partners[i].len()
            );
        }
        s.push_str("</g>\n");
    }

    if let Some(rep) = report {
        for (r, c) in rep.uncovered() {
            let (gr, gc) = (rep.origin_row + r - 1, rep.origin_col + c - 1);
            if !bb.contains(gr, gc) {
                continue;
            }
            let (x, y) = (x_of(gc), y_of(gr));
            let pad = 8;
            let _ = writeln!(
                s,
                r##"<path class="uncovered" d="M{} {} L{} {} M{} {} L{} {}" stroke="#c0392b" stroke-width="2"/>"##,
                x + pad,
                y + pad,
                x + CELL_PX - pad,
                y + CELL_PX - pad,
                x + CELL_PX - pad,
                y + pad,
                x + pad,
                y + CELL_PX - pad
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn render_layout(p: &Placement, report: Option<&CoverageReport>, path: &Path) -> Result<()> {
    fs::write(path, render_svg(p, report))?;
    Ok(())
}

/// Text drawing of the bounding array, top row first. Each cell shows the
/// id of the module using it, `*n` when `n` modules share it over time, or
/// `.` when unused. With a report, a second grid marks covered cells `C`
/// and uncovered ones `x`.
pub fn render_ascii(p: &Placement, report: Option<&CoverageReport>) -> String {
    let bb = bounding_array(p);
    let fps = p.footprints();
    let inst = p.instance();
    let width = inst
        .modules
        .iter()
        .map(|m| m.id.chars().count())
        .max()
        .unwrap_or(1)
        .max(2);

    let mut out = String::new();
    for r in (bb.row0..=bb.row1).rev() {
        for c in bb.col0..=bb.col1 {
            let users: Vec<usize> = (0..fps.len()).filter(|&i| fps[i].contains(r, c)).collect();
            let label = match users.as_slice() {
                [] => ".".to_owned(),
                [one] => inst.modules[*one].id.clone(),
                many => format!("*{}", many.len()),
            };
            let _ = write!(out, " {label:>width$}");
        }
        out.push('\n');
    }
    if let Some(rep) = report {
        out.push('\n');
        for r in (1..=rep.grid_rows).rev() {
            for c in 1..=rep.grid_cols {
                out.push(' ');
                out.push(if rep.is_covered_local(r, c) { 'C' } else { 'x' });
            }
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "k = {} of {} cells, FTI = {:.4}",
            rep.k,
            rep.cell_count(),
            rep.fti()
        );
    }
    out
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fault::{coverage_report, coverage_report_over};
    use crate::pipeline::greedy_baseline;
    use crate::placement::{CellRect, Position};
    use crate::problem::{pcr_fixture, GridSpec, ModuleSpec};

    fn single() -> Placement {
        let grid = GridSpec {
            rows_max: 6,
            cols_max: 6,
            pitch_mm: 1.5,
        };
        let m = ModuleSpec {
            id: "A".into(),
            width_cells: 2,
            height_cells: 3,
            start_time_s: 0.0,
            duration_s: 1.0,
            rotatable: true,
        };
        let inst = Arc::new(ProblemInstance::new(grid, vec![m]).unwrap());
        Placement::new(inst, vec![Position::new(1, 1, false)]).unwrap()
    }

    #[test]
    fn result_round_trip_is_byte_stable() {
        let r = greedy_baseline(Arc::new(pcr_fixture())).unwrap();
        let rec = ResultRecord::new(
            "greedy",
            None,
            RunParameters {
                anneal: None,
                weights: None,
                t_ltsa: None,
            },
            &r,
        );
        let text = to_json(&rec);
        let back: ResultRecord = from_json(&text).unwrap();
        assert_eq!(back, rec);
        assert_eq!(to_json(&back), text);
        assert_eq!(back.placement().unwrap(), r.placement);
        assert!(text.contains("\"schema_version\": 1"));
        assert!(text.contains("\"id\": \"M1\""));
    }

    #[test]
    fn empty_region_coverage_record() {
        let p = single();
        let region = CellRect {
            row0: 1,
            col0: 3,
            row1: 2,
            col1: 4,
        };
        let rep = coverage_report_over(&p, region).unwrap();
        let rec = CoverageRecord::new(&rep);
        assert_eq!(rec.fti, 1.0);
        assert_eq!(rec.covered, vec!["11", "11"]);
    }

    #[test]
    fn svg_single_module() {
        let p = single();
        let svg = render_svg(&p, None);
        assert_eq!(svg.matches("class=\"module\"").count(), 1);
        assert!(svg.contains(&format!(
            r#"<rect x="{MARGIN_PX}" y="{MARGIN_PX}" width="64" height="96""#
        )));
        assert!(!svg.contains("shared-badge"));
    }

    #[test]
    fn svg_overlay_marks_uncovered() {
        let p = single();
        let rep = coverage_report(&p).unwrap();
        let svg = render_svg(&p, Some(&rep));
        let marked = svg.matches("class=\"uncovered\"").count() as u64;
        assert_eq!(marked, rep.cell_count() - rep.k);
        assert_eq!(marked, 6);
    }

    #[test]
    fn svg_badges_time_sharing() {
        let r = greedy_baseline(Arc::new(pcr_fixture())).unwrap();
        let svg = render_svg(&r.placement, Some(&r.coverage));
        assert_eq!(svg.matches("class=\"module\"").count(), 7);
        assert!(svg.contains("shared-badge"));
        assert_eq!(
            svg.matches("class=\"uncovered\"").count() as u64,
            r.cell_count - r.k
        );
    }

    #[test]
    fn ascii_grid() {
        let p = single();
        let rep = coverage_report(&p).unwrap();
        let text = render_ascii(&p, Some(&rep));
        assert!(text.starts_with("  A  A\n  A  A\n  A  A\n"));
        assert!(text.contains("k = 0 of 6 cells"));
    }

    #[test]
    fn rects_record_lists_every_module() {
        let r = greedy_baseline(Arc::new(pcr_fixture())).unwrap();
        let rec = RectsRecord::new(&r.placement).unwrap();
        assert_eq!(rec.modules.len(), 7);
        assert!(rec.modules.iter().all(|m| !m.rects.is_empty()));
    }
}
