use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Cylinder;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Dirichlet,
    Neumann,
    Periodic,
}

/// Uniform lattice over a cylinder: `cells` per spatial axis and `steps` time steps.
///
/// Dirichlet and Neumann grids carry `cells + 1` nodes per axis including both faces;
/// periodic grids carry `cells` nodes and identify the last face with the first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub cylinder: Cylinder,
    pub cells: usize,
    pub steps: usize,
    pub kind: BoundaryKind,
}

impl Grid {
    pub fn new(cylinder: Cylinder, cells: usize, steps: usize, kind: BoundaryKind) -> Result<Self> {
        let n = cylinder.dim();
        if n > 2 {
            return Err(Error::precondition(format!(
                "solver supports n <= 2, got n = {n}"
            )));
        }
        if cells < 2 || steps < 1 {
            return Err(Error::precondition(format!(
                "grid needs cells >= 2 and steps >= 1, got {cells} and {steps}"
            )));
        }
        Ok(Grid {
            cylinder,
            cells,
            steps,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.cylinder.dim()
    }

    pub fn h(&self) -> f64 {
        2.0 * self.cylinder.radius / self.cells as f64
    }

    pub fn dt(&self) -> f64 {
        self.cylinder.height / self.steps as f64
    }

    pub fn per_axis(&self) -> usize {
        match self.kind {
            BoundaryKind::Periodic => self.cells,
            _ => self.cells + 1,
        }
    }

    pub fn nodes(&self) -> usize {
        self.per_axis().pow(self.dim() as u32)
    }

    pub fn levels(&self) -> usize {
        self.steps + 1
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps {
            self.cylinder.t0
        } else {
            self.cylinder.t_bottom() + m as f64 * self.dt()
        }
    }

    /// Multi-index of a node, first axis fastest.
    pub fn index(&self, node: usize) -> Vec<usize> {
        let k = self.per_axis();
        let mut rest = node;
        (0..self.dim())
            .map(|_| {
                let i = rest % k;
                rest /= k;
                i
            })
            .collect()
    }

    pub fn node(&self, idx: &[usize]) -> usize {
        let k = self.per_axis();
        idx.iter().rev().fold(0, |acc, &i| acc * k + i)
    }

    pub fn coordinate(&self, i: usize, axis: usize) -> f64 {
        let lo = self.cylinder.x0[axis] - self.cylinder.radius;
        if i == self.cells {
            self.cylinder.x0[axis] + self.cylinder.radius
        } else {
            lo + i as f64 * self.h()
        }
    }

    pub fn position(&self, node: usize) -> Vec<f64> {
        self.index(node)
            .iter()
            .enumerate()
            .map(|(axis, &i)| self.coordinate(i, axis))
            .collect()
    }

    /// Whether the node lies on `∂K_R` (never true on periodic grids).
    pub fn on_boundary(&self, node: usize) -> bool {
        self.kind != BoundaryKind::Periodic
            && self.index(node).iter().any(|&i| i == 0 || i == self.cells)
    }

    /// Whether the node touches `∂K_R` or its first interior layer.
    pub fn near_boundary(&self, node: usize) -> bool {
        self.kind != BoundaryKind::Periodic
            && self
                .index(node)
                .iter()
                .any(|&i| i <= 1 || i + 1 >= self.cells)
    }

    /// Spatial control volume: `h^n`, halved per axis on which the node sits on a face.
    pub fn control_volume(&self, node: usize) -> f64 {
        let h = self.h();
        self.index(node)
            .iter()
            .map(|&i| {
                if self.kind != BoundaryKind::Periodic && (i == 0 || i == self.cells) {
                    0.5 * h
                } else {
                    h
                }
            })
            .product()
    }

    /// Refined copy with `factor` times more cells and `time_factor` times more steps.
    pub fn refined(&self, factor: usize, time_factor: usize) -> Grid {
        Grid {
            cells: self.cells * factor,
            steps: self.steps * time_factor,
            ..self.clone()
        }
    }
}

/// Nodal values on every time level, time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        let len = grid.nodes() * grid.levels();
        Field {
            grid,
            values: vec![0.0; len],
        }
    }

    /// Field sampled from `f(t, x)` on every node and level.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, &[f64]) -> f64) -> Self {
        let mut field = Field::zeros(grid);
        let positions: Vec<Vec<f64>> = (0..field.grid.nodes())
            .map(|k| field.grid.position(k))
            .collect();
        for m in 0..field.grid.levels() {
            let t = field.grid.time(m);
            for (k, x) in positions.iter().enumerate() {
                *field.at_mut(m, k) = f(t, x);
            }
        }
        field
    }

    pub fn slice(&self, m: usize) -> &[f64] {
        let k = self.grid.nodes();
        &self.values[m * k..(m + 1) * k]
    }

    pub fn slice_mut(&mut self, m: usize) -> &mut [f64] {
        let k = self.grid.nodes();
        &mut self.values[m * k..(m + 1) * k]
    }

    pub fn at(&self, m: usize, node: usize) -> f64 {
        self.values[m * self.grid.nodes() + node]
    }

    pub fn at_mut(&mut self, m: usize, node: usize) -> &mut f64 {
        let k = self.grid.nodes();
        &mut self.values[m * k + node]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Writes `<stem>.json` (header) and `<stem>.bin` (little-endian f64, time-major).
    pub fn write_dump(
        &self,
        dir: &Path,
        stem: &str,
        header: &DumpLabels,
    ) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json_path = dir.join(format!("{stem}.json"));
        let bin_path = dir.join(format!("{stem}.bin"));
        let head = DumpHeader {
            grid: self.grid.clone(),
            weight: header.weight.clone(),
            flux: header.flux.clone(),
            levels: self.grid.levels(),
            nodes: self.grid.nodes(),
            byte_order: "little-endian".into(),
            layout: "time-major, first spatial axis fastest".into(),
            data: format!("{stem}.bin"),
        };
        let text = serde_json::to_string_pretty(&head)?;
        fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(&bin_path, bytes).map_err(|e| Error::io(&bin_path, e))?;
        Ok((json_path, bin_path))
    }

    pub fn read_dump(json_path: &Path) -> Result<(Field, DumpHeader)> {
        let text = fs::read_to_string(json_path).map_err(|e| Error::io(json_path, e))?;
        let head: DumpHeader = serde_json::from_str(&text)?;
        let bin_path = json_path.with_file_name(&head.data);
        let bytes = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
        if bytes.len() != head.levels * head.nodes * 8 {
            return Err(Error::Config(format!(
                "{} holds {} bytes, header expects {}",
                bin_path.display(),
                bytes.len(),
                head.levels * head.nodes * 8
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok((
            Field {
                grid: head.grid.clone(),
                values,
            },
            head,
        ))
    }

    /// One time level as CSV with columns `x0[,x1],u`.
    pub fn write_csv_slice(&self, path: &Path, m: usize) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        let mut out = Vec::new();
        let axes: Vec<String> = (0..self.grid.dim()).map(|d| format!("x{d}")).collect();
        writeln!(out, "{},u", axes.join(",")).expect("write to vec");
        for (k, v) in self.slice(m).iter().enumerate() {
            let x: Vec<String> = self
                .grid
                .position(k)
                .iter()
                .map(|c| format!("{c:.17e}"))
                .collect();
            writeln!(out, "{},{v:.17e}", x.join(",")).expect("write to vec");
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Labels recorded alongside a field dump.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DumpLabels {
    pub weight: String,
    pub flux: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpHeader {
    pub grid: Grid,
    pub weight: String,
    pub flux: String,
    pub levels: usize,
    pub nodes: usize,
    pub byte_order: String,
    pub layout: String,
    pub data: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(kind: BoundaryKind, n: usize) -> Grid {
        Grid::new(
            Cylinder::new(1.0, vec![0.0; n], 1.0, 0.5).unwrap(),
            4,
            5,
            kind,
        )
        .unwrap()
    }

    #[test]
    fn control_volumes_tile_the_cube() {
        for kind in [
            BoundaryKind::Dirichlet,
            BoundaryKind::Neumann,
            BoundaryKind::Periodic,
        ] {
            for n in [1, 2] {
                let g = grid(kind, n);
                let total: f64 = (0..g.nodes()).map(|k| g.control_volume(k)).sum();
                assert!(
                    (total - 2f64.powi(n as i32)).abs() < 1e-14,
                    "{kind:?} n={n}"
                );
            }
        }
    }

    #[test]
    fn indexing_round_trips_and_hits_faces() {
        let g = grid(BoundaryKind::Dirichlet, 2);
        for k in 0..g.nodes() {
            assert_eq!(g.node(&g.index(k)), k);
        }
        assert_eq!(g.position(g.nodes() - 1), vec![1.0, 1.0]);
        assert_eq!(g.time(0), 0.5);
        assert_eq!(g.time(5), 1.0);
        assert!(g.on_boundary(0) && !g.on_boundary(g.node(&[2, 2])));
    }

    #[test]
    fn dump_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = Field::from_fn(grid(BoundaryKind::Neumann, 2), |t, x| t + x[0] - 3.0 * x[1]);
        let labels = DumpLabels {
            weight: "unit".into(),
            flux: "model".into(),
        };
        let (json, _) = f
            .write_dump(&dir.path().join("nested"), "u", &labels)
            .unwrap();
        let (back, head) = Field::read_dump(&json).unwrap();
        assert_eq!(back, f);
        assert_eq!(head.flux, "model");
        let csv = dir.path().join("slice.csv");
        f.write_csv_slice(&csv, 2).unwrap();
        let text = fs::read_to_string(csv).unwrap();
        assert_eq!(text.lines().count(), 1 + f.grid.nodes());
        assert!(text.starts_with("x0,x1,u"));
    }
}
