#![allow(dead_code)]

use std::sync::Arc;

use biochip_place::{GridSpec, ModuleSpec, Placement, Position, ProblemInstance};
use rand::Rng;

pub fn module(id: &str, w: u32, h: u32, start: f64, duration: f64) -> ModuleSpec {
    ModuleSpec {
        id: id.into(),
        width_cells: w,
        height_cells: h,
        start_time_s: start,
        duration_s: duration,
        rotatable: true,
    }
}

pub fn instance(rows: u32, cols: u32, modules: Vec<ModuleSpec>) -> Arc<ProblemInstance> {
    let grid = GridSpec {
        rows_max: rows,
        cols_max: cols,
        pitch_mm: 1.5,
    };
    Arc::new(ProblemInstance::new(grid, modules).unwrap())
}

/// A random feasible placement on a grid of at most `max_rows x max_cols`
/// with between one and `max_modules` modules. Modules that find no free
/// spot after a few tries are dropped.
pub fn random_feasible<R: Rng>(
    rng: &mut R,
    max_rows: u32,
    max_cols: u32,
    max_modules: usize,
) -> Placement {
    loop {
        let rows = rng.gen_range(1..=max_rows);
        let cols = rng.gen_range(1..=max_cols);
        let n = rng.gen_range(1..=max_modules);
        let mut specs: Vec<ModuleSpec> = Vec::new();
        let mut rects: Vec<(u32, u32, u32, u32)> = Vec::new();
        let mut positions = Vec::new();
        for i in 0..n {
            let mut spec = module(
                &format!("m{i}"),
                rng.gen_range(1..=cols.min(4)),
                rng.gen_range(1..=rows.min(4)),
                f64::from(rng.gen_range(0..4u32)),
                f64::from(rng.gen_range(1..=2u32)),
            );
            spec.rotatable = rng.gen_bool(0.7);
            for _ in 0..20 {
                let rotated = spec.rotatable && rng.gen_bool(0.5);
                let (w, h) = spec.footprint(rotated);
                if w > cols || h > rows {
                    continue;
                }
                let r = rng.gen_range(1..=rows - h + 1);
                let c = rng.gen_range(1..=cols - w + 1);
                let rect = (r, c, r + h - 1, c + w - 1);
                let clash = specs.iter().zip(&rects).any(|(other, o)| {
                    biochip_place::placement::time_overlap(&spec, other)
                        && o.0 <= rect.2
                        && rect.0 <= o.2
                        && o.1 <= rect.3
                        && rect.1 <= o.3
                });
                if !clash {
                    specs.push(spec.clone());
                    rects.push(rect);
                    positions.push(Position::new(r, c, rotated));
                    break;
                }
            }
        }
        if specs.is_empty() {
            continue;
        }
        let inst = instance(rows, cols, specs);
        return Placement::new(inst, positions).unwrap();
    }
}

/// A feasible PCR layout whose bounding array is 7 rows by 11 columns.
pub fn pcr_7x11() -> Placement {
    let inst = Arc::new(biochip_place::pcr_fixture());
    let at = |id: &str, row, col| biochip_place::PlacedModule {
        module_id: id.into(),
        row,
        col,
        rotated: false,
    };
    Placement::from_placed(
        inst,
        &[
            at("M1", 1, 7),
            at("M2", 1, 1),
            at("M3", 1, 1),
            at("M4", 1, 4),
            at("M5", 1, 1),
            at("M6", 1, 1),
            at("M7", 2, 8),
        ],
    )
    .unwrap()
}
