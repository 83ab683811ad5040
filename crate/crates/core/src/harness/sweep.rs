//! One solve per gap distance, certified against a coarser mesh.

use super::analysis::compare_asymptotics;
use super::config::ExperimentConfig;
use crate::concentration::{
    argmax_gradient, assemble_system, axis_maximum, estimate_starred, total_field, AxisMaximum, ConcentrationSystem,
    StarredData,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::fem::{build_gap_mesh, gradient_at, ElasticProblem, FieldSolution, MeshParams};
use crate::geometry::GapGeometry;
use nalgebra::{DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use std::time::Instant;

/// Absolute floor below which Q, C and gradient changes are not resolved.
const CHANGE_FLOOR: f64 = 1e-9;

/// Wall-clock seconds spent on one gap distance (both meshes).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub epsilon: f64,
    pub mesh_s: f64,
    pub factor_s: f64,
    pub solve_s: f64,
    pub post_s: f64,
    pub total_s: f64,
}

/// Everything computed on one mesh.
pub struct LevelSolution {
    pub problem: ElasticProblem,
    pub solutions: Vec<FieldSolution>,
    pub system: ConcentrationSystem,
    pub total: FieldSolution,
    pub axis: AxisMaximum,
}

impl LevelSolution {
    pub fn solve(cfg: &ExperimentConfig, g: &GapGeometry, params: MeshParams, timing: &mut Timing) -> Result<Self> {
        let t = Instant::now();
        let mesh = Arc::new(build_gap_mesh(g, params)?);
        let t_mesh = t.elapsed().as_secs_f64();
        let problem = ElasticProblem::new(mesh, cfg.tensor(), cfg.solver)?;
        let t_factor = t.elapsed().as_secs_f64();
        let solutions = problem.solve_all(&cfg.phi())?;
        let t_solve = t.elapsed().as_secs_f64();
        let system = assemble_system(&solutions, g.epsilon)?;
        let total = total_field(&solutions, &system.c)?;
        let axis = axis_maximum(&total, g, cfg.sweep.axis_samples)?;
        let t_all = t.elapsed().as_secs_f64();
        timing.mesh_s += t_mesh;
        timing.factor_s += t_factor - t_mesh;
        timing.solve_s += t_solve - t_factor;
        timing.post_s += t_all - t_solve;
        timing.total_s += t_all;
        Ok(LevelSolution { problem, solutions, system, total, axis })
    }
}

/// Fine-mesh solution at one gap distance with its certification data.
pub struct PointSolution {
    pub geometry: GapGeometry,
    pub fine: LevelSolution,
    pub coarse_system: ConcentrationSystem,
    pub coarse_axis: f64,
    pub mesh_change: f64,
    pub certified: bool,
    pub timing: Timing,
}

fn relative_change(fine: &[f64], coarse: &[f64], floor: f64) -> f64 {
    let scale = fine.iter().chain(coarse).fold(floor, |m, v| m.max(v.abs()));
    fine.iter().zip(coarse).fold(0.0, |m, (a, b)| m.max((a - b).abs() / scale))
}

/// Largest relative change of A (entrywise against `√(a_ii a_jj)`), Q, C and
/// the axis maximum between two meshes.
pub fn mesh_change(fine: &ConcentrationSystem, coarse: &ConcentrationSystem, axis: (f64, f64)) -> f64 {
    let n = fine.a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s = (fine.a[(i, i)] * fine.a[(j, j)]).sqrt();
            worst = worst.max((fine.a[(i, j)] - coarse.a[(i, j)]).abs() / s);
        }
    }
    worst = worst.max(relative_change(fine.y.as_slice(), coarse.y.as_slice(), CHANGE_FLOOR));
    worst = worst.max(relative_change(fine.c.as_slice(), coarse.c.as_slice(), CHANGE_FLOOR));
    worst.max(relative_change(&[axis.0], &[axis.1], CHANGE_FLOOR))
}

/// Solve on the configured mesh and on the mesh refined by
/// `cfg.sweep.refinement`; report the refined one.
pub fn solve_point(cfg: &ExperimentConfig, eps: f64) -> Result<PointSolution> {
    let geometry = cfg.geometry.geometry(eps)?;
    let mut timing = Timing { epsilon: eps, ..Default::default() };
    let coarse = LevelSolution::solve(cfg, &geometry, cfg.mesh, &mut timing)?;
    let coarse_system = coarse.system;
    let coarse_axis = coarse.axis.value;
    drop(coarse.problem);
    let fine = LevelSolution::solve(cfg, &geometry, cfg.mesh.refined(cfg.sweep.refinement), &mut timing)?;
    let change = mesh_change(&fine.system, &coarse_system, (fine.axis.value, coarse_axis));
    Ok(PointSolution {
        geometry,
        certified: change <= cfg.sweep.certify_tol,
        mesh_change: change,
        fine,
        coarse_system,
        coarse_axis,
        timing,
    })
}

/// `(ε^{1/(1+α)}, mid-gap height)`: the edge of the concentration zone.
pub fn edge_point(g: &GapGeometry) -> Result<[f64; 2]> {
    let x1 = g.epsilon.powf(1.0 / (1.0 + g.profile.alpha));
    let lower = g.profile.lower.value(&[x1]);
    Ok([x1, lower + 0.5 * g.gap_thickness(&[x1])?])
}

/// `(0, ε/2)`: the centre of the narrowest cross-section.
pub fn center_point(g: &GapGeometry) -> [f64; 2] {
    [0.0, 0.5 * g.epsilon]
}

/// One gap distance of a sweep. Gradients are stored row-major,
/// `g_ab = ∂_b u^a`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    /// `ok`, or the error that stopped this point.
    pub status: String,
    pub certified: bool,
    pub mesh_change: f64,
    pub nodes: usize,
    pub elements: usize,
    pub a11: f64,
    pub a12: f64,
    pub a13: f64,
    pub a22: f64,
    pub a23: f64,
    pub a33: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub residual: f64,
    pub min_eigenvalue: f64,
    pub max_grad_axis: f64,
    pub axis_x2: f64,
    pub argmax_x1: f64,
    pub argmax_x2: f64,
    pub argmax_grad: f64,
    pub center_x2: f64,
    pub center_g11: f64,
    pub center_g12: f64,
    pub center_g21: f64,
    pub center_g22: f64,
    pub edge_x1: f64,
    pub edge_x2: f64,
    pub edge_g11: f64,
    pub edge_g12: f64,
    pub edge_g21: f64,
    pub edge_g22: f64,
    /// Leading-order prediction of the dominant gradient component at the
    /// centre point, and its relative error against the FEM value.
    pub predicted_center: f64,
    pub rel_error_center: f64,
}

impl SweepRecord {
    fn failed(eps: f64, err: &Error) -> Self {
        let nan = f64::NAN;
        SweepRecord {
            epsilon: eps,
            status: format!("error: {err}"),
            certified: false,
            mesh_change: nan,
            nodes: 0,
            elements: 0,
            a11: nan,
            a12: nan,
            a13: nan,
            a22: nan,
            a23: nan,
            a33: nan,
            q1: nan,
            q2: nan,
            q3: nan,
            c1: nan,
            c2: nan,
            c3: nan,
            residual: nan,
            min_eigenvalue: nan,
            max_grad_axis: nan,
            axis_x2: nan,
            argmax_x1: nan,
            argmax_x2: nan,
            argmax_grad: nan,
            center_x2: nan,
            center_g11: nan,
            center_g12: nan,
            center_g21: nan,
            center_g22: nan,
            edge_x1: nan,
            edge_x2: nan,
            edge_g11: nan,
            edge_g12: nan,
            edge_g21: nan,
            edge_g22: nan,
            predicted_center: nan,
            rel_error_center: nan,
        }
    }

    pub fn from_point(p: &PointSolution) -> Result<Self> {
        let s = &p.fine.system;
        let g = &p.geometry;
        let center = center_point(g);
        let edge = edge_point(g)?;
        let gc = gradient_at(&p.fine.total, center)?;
        let ge = gradient_at(&p.fine.total, edge)?;
        let (arg, argv) = argmax_gradient(&p.fine.total, g.profile.r);
        Ok(SweepRecord {
            epsilon: g.epsilon,
            status: "ok".into(),
            certified: p.certified,
            mesh_change: p.mesh_change,
            nodes: p.fine.problem.mesh.nodes.len(),
            elements: p.fine.problem.mesh.elements.len(),
            a11: s.a(1, 1),
            a12: s.a(1, 2),
            a13: s.a(1, 3),
            a22: s.a(2, 2),
            a23: s.a(2, 3),
            a33: s.a(3, 3),
            q1: s.q(1),
            q2: s.q(2),
            q3: s.q(3),
            c1: s.c[0],
            c2: s.c[1],
            c3: s.c[2],
            residual: s.residual,
            min_eigenvalue: s.min_eigenvalue,
            max_grad_axis: p.fine.axis.value,
            axis_x2: p.fine.axis.at[1],
            argmax_x1: arg[0],
            argmax_x2: arg[1],
            argmax_grad: argv,
            center_x2: center[1],
            center_g11: gc[(0, 0)],
            center_g12: gc[(0, 1)],
            center_g21: gc[(1, 0)],
            center_g22: gc[(1, 1)],
            edge_x1: edge[0],
            edge_x2: edge[1],
            edge_g11: ge[(0, 0)],
            edge_g12: ge[(0, 1)],
            edge_g21: ge[(1, 0)],
            edge_g22: ge[(1, 1)],
            predicted_center: f64::NAN,
            rel_error_center: f64::NAN,
        })
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    /// Usable in summaries: solved and mesh-certified.
    pub fn is_certified(&self) -> bool {
        self.is_ok() && self.certified
    }

    pub fn center_gradient(&self) -> Matrix2<f64> {
        Matrix2::new(self.center_g11, self.center_g12, self.center_g21, self.center_g22)
    }

    pub fn edge_gradient(&self) -> Matrix2<f64> {
        Matrix2::new(self.edge_g11, self.edge_g12, self.edge_g21, self.edge_g22)
    }

    /// Rebuild (and re-validate) the free-constant system.
    pub fn system(&self) -> Result<ConcentrationSystem> {
        let a = DMatrix::from_row_slice(
            3,
            3,
            &[self.a11, self.a12, self.a13, self.a12, self.a22, self.a23, self.a13, self.a23, self.a33],
        );
        let y = DVector::from_vec(vec![self.q1, self.q2, self.q3]);
        ConcentrationSystem::from_parts(2, a, y, self.epsilon)
    }
}

/// Result of [`run_sweep`].
#[derive(Clone, Debug)]
pub struct SweepOutput {
    pub records: Vec<SweepRecord>,
    pub timings: Vec<Timing>,
    pub starred: Option<StarredData>,
    /// Why starred data or predictions are missing, if they are.
    pub note: Option<String>,
}

/// Starred data from the certified records (at least three are needed).
pub fn starred_from_records(cfg: &ExperimentConfig, records: &[SweepRecord]) -> Result<StarredData> {
    let systems = records
        .iter()
        .filter(|r| r.is_certified())
        .map(SweepRecord::system)
        .collect::<Result<Vec<_>>>()?;
    estimate_starred(&systems, cfg.alpha(), cfg.tau(), cfg.lame, cfg.fit)
}

/// Solve every gap distance (concurrently, up to `cfg.workers` threads),
/// then extrapolate starred data and attach centre-point predictions.
/// Failed points are recorded and the sweep continues.
pub fn run_sweep(cfg: &ExperimentConfig) -> SweepOutput {
    let results = exec::with_workers(cfg.workers, || {
        exec::map(&cfg.eps_list, |&eps| {
            let t = Instant::now();
            match solve_point(cfg, eps).and_then(|p| Ok((SweepRecord::from_point(&p)?, p.timing))) {
                Ok((r, timing)) => (r, timing),
                Err(e) => {
                    let timing = Timing { epsilon: eps, total_s: t.elapsed().as_secs_f64(), ..Default::default() };
                    (SweepRecord::failed(eps, &e), timing)
                }
            }
        })
    });
    let (mut records, timings): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let mut note = None;
    let starred = match starred_from_records(cfg, &records) {
        Ok(s) => Some(s),
        Err(e) => {
            note = Some(format!("starred data unavailable: {e}"));
            None
        }
    };
    if let Some(st) = &starred {
        match compare_asymptotics(cfg, &records, st) {
            Ok(table) => {
                for row in &table.rows {
                    if let Some(r) = records.iter_mut().find(|r| r.epsilon == row.epsilon) {
                        r.predicted_center = row.center_pred;
                        r.rel_error_center = row.center_error;
                    }
                }
                note = table.note;
            }
            Err(e) => note = Some(format!("comparison unavailable: {e}")),
        }
    }
    SweepOutput { records, timings, starred, note }
}
