//! Plane partitioning, rasterization of private shapes into grid serials,
//! and the classical set-intersection oracle.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracles::register_width;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeometryError {
    #[error("grid must have at least one row and one column (got {rows}x{cols})")]
    EmptyGrid { rows: usize, cols: usize },
    #[error("cell ({row}, {col}) is outside the {rows}x{cols} grid")]
    OutOfGrid {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("{field}: {detail}")]
    InvalidShape { field: String, detail: String },
    #[error("serial {serial} is outside [1, {max}]")]
    SerialOutOfRange { serial: usize, max: usize },
    #[error("scene covers no cells")]
    EmptyScene,
    #[error("grid set is not sorted and unique")]
    Unsorted,
    #[error("scene file {path}: {detail}")]
    Parse { path: String, detail: String },
}

pub type Result<T> = std::result::Result<T, GeometryError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridConfig {
    pub rows: usize,
    pub cols: usize,
}

impl GridConfig {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(GeometryError::EmptyGrid { rows, cols });
        }
        Ok(GridConfig { rows, cols })
    }

    /// Number of cells `R`.
    pub fn cell_count(&self) -> usize {
        self.rows * self.cols
    }

    /// Data register width `r = ⌈log₂ R⌉` (at least 1).
    pub fn data_bits(&self) -> usize {
        register_width(self.cell_count())
    }

    pub fn serial(&self, row: usize, col: usize) -> Result<usize> {
        grid_serial(row, col, self)
    }

    /// Inverse of [`grid_serial`].
    pub fn cell(&self, serial: usize) -> Result<(usize, usize)> {
        if serial == 0 || serial > self.cell_count() {
            return Err(GeometryError::SerialOutOfRange {
                serial,
                max: self.cell_count(),
            });
        }
        Ok(((serial - 1) / self.cols, (serial - 1) % self.cols))
    }

    /// Value loaded into a data register for `serial`: the serial itself,
    /// except that `R = 2^r` wraps to 0 so every cell fits in `r` bits.
    pub fn code(&self, serial: usize) -> usize {
        serial & ((1usize << self.data_bits()) - 1)
    }
}

/// Row-major, 1-based from the top-left cell.
pub fn grid_serial(row: usize, col: usize, grid: &GridConfig) -> Result<usize> {
    if row >= grid.rows || col >= grid.cols {
        return Err(GeometryError::OutOfGrid {
            row,
            col,
            rows: grid.rows,
            cols: grid.cols,
        });
    }
    Ok(row * grid.cols + col + 1)
}

/// A shape in a scene file: `{"rect": [r0, c0, r1, c1]}` (inclusive cell
/// bounds) or `{"cells": [serial, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum Shape {
    Rect([usize; 4]),
    Cells(Vec<usize>),
}

/// A party's private graph on a grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub grid: GridConfig,
    #[serde(default)]
    pub shapes: Vec<Shape>,
    /// Shorthand for a single `cells` shape.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<usize>,
}

impl Scene {
    pub fn new(grid: GridConfig, shapes: Vec<Shape>) -> Self {
        Scene {
            grid,
            shapes,
            cells: Vec::new(),
        }
    }

    pub fn rect(grid: GridConfig, r0: usize, c0: usize, r1: usize, c1: usize) -> Self {
        Self::new(grid, vec![Shape::Rect([r0, c0, r1, c1])])
    }

    pub fn from_cells(grid: GridConfig, cells: Vec<usize>) -> Self {
        Self::new(grid, vec![Shape::Cells(cells)])
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Reads and validates a scene file. Diagnostics carry line and column
    /// for syntax errors and the offending field for semantic ones.
    pub fn load(path: &Path) -> Result<Self> {
        let display = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Parse {
            path: display.clone(),
            detail: e.to_string(),
        })?;
        let scene = Self::from_json(&text).map_err(|e| GeometryError::Parse {
            path: display.clone(),
            detail: e.to_string(),
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let g = GridConfig::new(self.grid.rows, self.grid.cols)?;
        for (k, shape) in self.shapes.iter().enumerate() {
            match shape {
                Shape::Rect([r0, c0, r1, c1]) => {
                    let field = format!("shapes[{k}].rect");
                    if r0 > r1 || c0 > c1 {
                        return Err(GeometryError::InvalidShape {
                            field,
                            detail: format!("corners ({r0},{c0})-({r1},{c1}) are reversed"),
                        });
                    }
                    if *r1 >= g.rows || *c1 >= g.cols {
                        return Err(GeometryError::InvalidShape {
                            field,
                            detail: format!(
                                "cell ({r1},{c1}) is outside the {}x{} grid",
                                g.rows, g.cols
                            ),
                        });
                    }
                }
                Shape::Cells(cells) => {
                    check_serials(cells, &g, &format!("shapes[{k}].cells"))?;
                }
            }
        }
        check_serials(&self.cells, &g, "cells")
    }
}

fn check_serials(cells: &[usize], grid: &GridConfig, field: &str) -> Result<()> {
    for (i, &s) in cells.iter().enumerate() {
        if s == 0 || s > grid.cell_count() {
            return Err(GeometryError::InvalidShape {
                field: format!("{field}[{i}]"),
                detail: format!("serial {s} is outside [1, {}]", grid.cell_count()),
            });
        }
    }
    Ok(())
}

/// Sorted, duplicate-free grid serials.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridSet {
    serials: Vec<usize>,
}

impl GridSet {
    pub fn new(serials: Vec<usize>) -> Result<Self> {
        if serials.windows(2).any(|w| w[0] >= w[1]) {
            return Err(GeometryError::Unsorted);
        }
        if serials.first() == Some(&0) {
            return Err(GeometryError::SerialOutOfRange { serial: 0, max: 0 });
        }
        Ok(GridSet { serials })
    }

    pub fn from_unsorted(serials: impl IntoIterator<Item = usize>) -> Result<Self> {
        let set: BTreeSet<usize> = serials.into_iter().collect();
        Self::new(set.into_iter().collect())
    }

    pub fn serials(&self) -> &[usize] {
        &self.serials
    }

    pub fn len(&self) -> usize {
        self.serials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.serials.is_empty()
    }
}

pub fn rasterize(scene: &Scene) -> Result<GridSet> {
    scene.validate()?;
    let g = scene.grid;
    let mut cells = BTreeSet::new();
    for shape in &scene.shapes {
        match shape {
            Shape::Rect([r0, c0, r1, c1]) => {
                for row in *r0..=*r1 {
                    for col in *c0..=*c1 {
                        cells.insert(g.serial(row, col)?);
                    }
                }
            }
            Shape::Cells(list) => cells.extend(list.iter().copied()),
        }
    }
    cells.extend(scene.cells.iter().copied());
    if cells.is_empty() {
        return Err(GeometryError::EmptyScene);
    }
    GridSet::new(cells.into_iter().collect())
}

/// Merge of two sorted lists.
pub fn classical_intersect(a: &GridSet, b: &GridSet) -> (bool, GridSet) {
    let (x, y) = (a.serials(), b.serials());
    let (mut i, mut j) = (0, 0);
    let mut common = Vec::new();
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                common.push(x[i]);
                i += 1;
                j += 1;
            }
        }
    }
    (!common.is_empty(), GridSet { serials: common })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g4() -> GridConfig {
        GridConfig::new(4, 4).unwrap()
    }

    fn set(v: &[usize]) -> GridSet {
        GridSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn serial_numbering() {
        assert_eq!(grid_serial(0, 0, &g4()).unwrap(), 1);
        assert_eq!(grid_serial(1, 1, &g4()).unwrap(), 6);
        assert_eq!(grid_serial(3, 3, &g4()).unwrap(), 16);
        assert!(matches!(
            grid_serial(4, 0, &g4()),
            Err(GeometryError::OutOfGrid { .. })
        ));
    }

    #[test]
    fn serial_round_trip() {
        let g = GridConfig::new(5, 7).unwrap();
        let mut seen = BTreeSet::new();
        for row in 0..5 {
            for col in 0..7 {
                let s = g.serial(row, col).unwrap();
                assert_eq!(g.cell(s).unwrap(), (row, col));
                seen.insert(s);
            }
        }
        assert_eq!(seen, (1..=35).collect());
    }

    #[test]
    fn worked_example_rasterization() {
        assert_eq!(
            rasterize(&Scene::rect(g4(), 0, 0, 1, 1)).unwrap(),
            set(&[1, 2, 5, 6])
        );
        assert_eq!(
            rasterize(&Scene::rect(g4(), 1, 1, 2, 2)).unwrap(),
            set(&[6, 7, 10, 11])
        );
    }

    #[test]
    fn overlapping_shapes_dedup() {
        let scene = Scene::new(
            g4(),
            vec![
                Shape::Rect([0, 0, 1, 1]),
                Shape::Rect([1, 1, 1, 2]),
                Shape::Cells(vec![6, 1]),
            ],
        );
        assert_eq!(rasterize(&scene).unwrap(), set(&[1, 2, 5, 6, 7]));
    }

    #[test]
    fn empty_scene_rejected() {
        assert_eq!(
            rasterize(&Scene::new(g4(), vec![])),
            Err(GeometryError::EmptyScene)
        );
    }

    #[test]
    fn invalid_shapes_name_the_field() {
        let scene = Scene::new(g4(), vec![Shape::Rect([0, 0, 1, 1]), Shape::Rect([0, 0, 4, 1])]);
        match rasterize(&scene).unwrap_err() {
            GeometryError::InvalidShape { field, .. } => assert_eq!(field, "shapes[1].rect"),
            e => panic!("unexpected {e}"),
        }
        let scene = Scene::from_cells(g4(), vec![3, 17]);
        assert!(rasterize(&scene)
            .unwrap_err()
            .to_string()
            .starts_with("shapes[0].cells[1]"));
    }

    #[test]
    fn scene_json_formats() {
        let a = Scene::from_json(r#"{"grid":{"rows":4,"cols":4},"shapes":[{"rect":[0,0,1,1]}]}"#)
            .unwrap();
        assert_eq!(rasterize(&a).unwrap(), set(&[1, 2, 5, 6]));
        let b = Scene::from_json(r#"{"grid":{"rows":4,"cols":4},"shapes":[{"cells":[6,7,10,11]}]}"#)
            .unwrap();
        assert_eq!(rasterize(&b).unwrap(), set(&[6, 7, 10, 11]));
        let c = Scene::from_json(r#"{"grid":{"rows":4,"cols":4},"cells":[11,10,7,6]}"#).unwrap();
        assert_eq!(rasterize(&c).unwrap(), set(&[6, 7, 10, 11]));
        assert!(Scene::from_json(r#"{"grid":{"rows":4,"cols":4},"shapes":[{"circle":[1]}]}"#).is_err());
    }

    #[test]
    fn data_codes() {
        assert_eq!(g4().data_bits(), 4);
        assert_eq!(g4().code(6), 6);
        assert_eq!(g4().code(16), 0);
        assert_eq!(GridConfig::new(1, 1).unwrap().data_bits(), 1);
        let g = GridConfig::new(3, 5).unwrap();
        assert_eq!(g.data_bits(), 4);
        assert_eq!(g.code(15), 15);
    }

    #[test]
    fn intersection_examples() {
        assert_eq!(
            classical_intersect(&set(&[1, 2, 5, 6]), &set(&[6, 7, 10, 11])),
            (true, set(&[6]))
        );
        assert_eq!(
            classical_intersect(&set(&[1, 2]), &set(&[3, 4])),
            (false, set(&[]))
        );
        let a = set(&[2, 9, 13]);
        assert_eq!(classical_intersect(&a, &a), (true, a.clone()));
    }

    proptest! {
        #[test]
        fn intersection_symmetric_and_idempotent(
            a in proptest::collection::btree_set(1usize..65, 1..12),
            b in proptest::collection::btree_set(1usize..65, 1..12),
        ) {
            let (sa, sb) = (GridSet::from_unsorted(a.clone()).unwrap(), GridSet::from_unsorted(b.clone()).unwrap());
            let (hit, common) = classical_intersect(&sa, &sb);
            prop_assert_eq!((hit, common.clone()), classical_intersect(&sb, &sa));
            prop_assert_eq!(classical_intersect(&common, &common).1, common.clone());
            let expected: Vec<usize> = a.intersection(&b).copied().collect();
            prop_assert_eq!(common.serials(), &expected[..]);
        }

        #[test]
        fn rasterized_cells_stay_in_range(rows in 1usize..8, cols in 1usize..8, r0 in 0usize..8, c0 in 0usize..8, h in 0usize..8, w in 0usize..8) {
            let g = GridConfig::new(rows, cols).unwrap();
            let (r0, c0) = (r0 % rows, c0 % cols);
            let (r1, c1) = ((r0 + h).min(rows - 1), (c0 + w).min(cols - 1));
            let s = rasterize(&Scene::rect(g, r0, c0, r1, c1)).unwrap();
            prop_assert_eq!(s.len(), (r1 - r0 + 1) * (c1 - c0 + 1));
            prop_assert!(s.serials().iter().all(|&x| x >= 1 && x <= g.cell_count()));
        }
    }
}
