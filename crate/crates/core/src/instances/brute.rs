//! Grid-search reference minimizer for instances of dimension at most 3.
//!
//! The mesh has spacing `(hi - lo) / N` per coordinate with
//! `N = ceil(width / resolution)`, so box faces and simplex faces lie on it.
//! Grids up to [`FULL_GRID_LIMIT`] points are enumerated exhaustively;
//! larger ones are searched coarse-to-fine, each level scanning a window of
//! [`ZOOM_MARGIN`] coarse cells around the incumbent at a tenfold finer stride.
//! Convexity of every shipped objective keeps the minimizer inside the window.

use serde::Serialize;

use crate::oracle::{Domain, ProblemOracles};
use crate::{Error, Result};

pub const MAX_GRID_DIM: usize = 3;
pub const FULL_GRID_LIMIT: usize = 1_000_000;
pub const ZOOM_MARGIN: i64 = 3;

/// Which objective the grid minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridObjective {
    /// `phi = f + h`.
    Unregularized,
    /// `phi^alpha = f + h + alpha w`.
    Regularized,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridMinimum {
    pub point: Vec<f64>,
    pub value: f64,
    /// `(curvature / 2) * spacing^2 * d`, where `d` is the mesh dimension
    /// and the curvature is `L`, plus `alpha` times the local curvature of
    /// `w` for the regularized objective.
    pub error_bound: f64,
    pub spacing: f64,
    pub evaluations: usize,
}

/// Mesh description: free coordinates `i_k in [0, cells]`, mapped to points.
struct Mesh<'a> {
    dims: usize,
    cells: i64,
    domain: &'a Domain,
}

impl Mesh<'_> {
    fn point(&self, idx: &[i64]) -> Option<Vec<f64>> {
        let n = self.cells as f64;
        match self.domain {
            Domain::Simplex { .. } => {
                let used: i64 = idx.iter().sum();
                if used > self.cells {
                    return None;
                }
                let mut x: Vec<f64> = idx.iter().map(|&i| i as f64 / n).collect();
                x.push((self.cells - used) as f64 / n);
                Some(x)
            }
            Domain::Box { lo, hi } => Some(
                idx.iter()
                    .zip(lo.iter().zip(hi))
                    .map(|(&i, (&l, &h))| {
                        if i == self.cells {
                            h
                        } else {
                            l + (h - l) * (i as f64 / n)
                        }
                    })
                    .collect(),
            ),
        }
    }

    fn spacing(&self) -> f64 {
        let width = match self.domain {
            Domain::Simplex { .. } => 1.0,
            Domain::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(l, h)| h - l)
                .fold(0.0_f64, f64::max),
        };
        width / self.cells as f64
    }
}

fn axis(from: i64, to: i64, stride: i64) -> Vec<i64> {
    let mut out: Vec<i64> = (from..=to).step_by(stride as usize).collect();
    if out.last() != Some(&to) {
        out.push(to);
    }
    out
}

fn scan(
    mesh: &Mesh<'_>,
    axes: &[Vec<i64>],
    eval: &dyn Fn(&[f64]) -> f64,
    best: &mut Option<(Vec<i64>, Vec<f64>, f64)>,
    evaluations: &mut usize,
) {
    let mut counter = vec![0usize; axes.len()];
    loop {
        let idx: Vec<i64> = counter.iter().zip(axes).map(|(&c, a)| a[c]).collect();
        if let Some(x) = mesh.point(&idx) {
            let v = eval(&x);
            *evaluations += 1;
            if best.as_ref().is_none_or(|b| v < b.2) {
                *best = Some((idx, x, v));
            }
        }
        let mut k = 0;
        loop {
            if k == axes.len() {
                return;
            }
            counter[k] += 1;
            if counter[k] < axes[k].len() {
                break;
            }
            counter[k] = 0;
            k += 1;
        }
    }
}

/// Minimizes the chosen objective over the instance domain on a mesh of the
/// given resolution.
pub fn brute_force_min(
    problem: &ProblemOracles,
    objective: GridObjective,
    resolution: f64,
) -> Result<GridMinimum> {
    let n = problem.dim();
    if n > MAX_GRID_DIM {
        return Err(Error::invalid(
            "dimension",
            format!("grid search supports at most {MAX_GRID_DIM} coordinates, got {n}"),
        ));
    }
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::invalid(
            "resolution",
            format!("must be positive, got {resolution}"),
        ));
    }
    let domain = problem.domain();
    let (dims, width) = match domain {
        Domain::Simplex { n } => (n - 1, 1.0),
        Domain::Box { lo, hi } => (
            lo.len(),
            lo.iter()
                .zip(hi)
                .map(|(l, h)| h - l)
                .fold(0.0_f64, f64::max),
        ),
    };
    let cells = ((width / resolution).ceil() as i64).max(1);
    let mesh = Mesh {
        dims,
        cells,
        domain,
    };
    let eval = |x: &[f64]| -> f64 {
        match objective {
            GridObjective::Unregularized => problem.eval_f(x),
            GridObjective::Regularized => problem.eval_f(x) + problem.alpha() * problem.eval_w(x),
        }
    };

    let mut best = None;
    let mut evaluations = 0;
    if mesh.dims == 0 {
        scan(&mesh, &[], &eval, &mut best, &mut evaluations);
    } else {
        let per_axis = (FULL_GRID_LIMIT as f64)
            .powf(1.0 / mesh.dims as f64)
            .floor() as i64
            - 1;
        let mut stride = ((cells + per_axis - 1) / per_axis).max(1);
        let axes: Vec<Vec<i64>> = (0..mesh.dims).map(|_| axis(0, cells, stride)).collect();
        scan(&mesh, &axes, &eval, &mut best, &mut evaluations);
        while stride > 1 {
            let centre = best.as_ref().expect("mesh has feasible points").0.clone();
            let next = (stride / 10).max(1);
            let axes: Vec<Vec<i64>> = centre
                .iter()
                .map(|&c| {
                    axis(
                        (c - ZOOM_MARGIN * stride).max(0),
                        (c + ZOOM_MARGIN * stride).min(cells),
                        next,
                    )
                })
                .collect();
            scan(&mesh, &axes, &eval, &mut best, &mut evaluations);
            stride = next;
        }
    }
    let (_, point, value) = best.expect("mesh has feasible points");
    let spacing = mesh.spacing();
    let curvature = match objective {
        GridObjective::Unregularized => problem.lipschitz(),
        GridObjective::Regularized => {
            let local_w = match domain {
                Domain::Simplex { .. } => point
                    .iter()
                    .map(|&p| 1.0 / p.max(spacing))
                    .fold(0.0_f64, f64::max),
                Domain::Box { .. } => 1.0,
            };
            problem.lipschitz() + problem.alpha() * local_w
        }
    };
    Ok(GridMinimum {
        error_bound: 0.5 * curvature * spacing * spacing * dims.max(1) as f64,
        point,
        value,
        spacing,
        evaluations,
    })
}
