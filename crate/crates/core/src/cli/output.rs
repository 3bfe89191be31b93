//! `grasp.json`, `trace.csv` and `bench.csv`.

use std::path::Path;

use nalgebra::{DVector, Vector3};
use serde::{Deserialize, Serialize};

use super::{PlanRun, RunConfig};
use crate::error::{Error, Result};
use crate::kinematics::{GraspState, Pose};
use crate::quality::MetricReport;
use crate::splitter::ParallelGrasp;
use crate::surface::{SurfaceModel, SurfacePoint};
use crate::trace::{Phase, TraceRow};

/// 17 significant digits, `.` decimal separator.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PalmRecord {
    /// Row-major rotation.
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub map_ms: f64,
    pub cpo_ms: f64,
    pub ppo_ms: f64,
    pub tangent_ms: f64,
    pub projection_ms: f64,
    pub collision_ms: f64,
    pub total_ms: f64,
}

/// Contents of `grasp.json`. Positions are in the model frame (the mesh
/// centred on its vertex centroid); add `mesh_offset` to return to the
/// coordinates of the source file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraspRecord {
    pub palm: PalmRecord,
    pub q: Vec<f64>,
    pub contacts: Vec<[f64; 3]>,
    pub normals: Vec<[f64; 3]>,
    pub vertex_ids: Vec<usize>,
    pub parallel_grasp: ParallelGrasp,
    pub metrics_before: MetricReport,
    pub metrics_after: MetricReport,
    pub outer_iterations: usize,
    pub cpo_iterations: usize,
    pub ppo_iterations: usize,
    pub timing: TimingRecord,
    pub termination: String,
    pub n_vertices: usize,
    pub mesh_offset: [f64; 3],
    pub config_echo: RunConfig,
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

impl GraspRecord {
    pub fn from_run(run: &PlanRun, surface: &SurfaceModel, cfg: &RunConfig) -> Self {
        let r = &run.result;
        let state = &r.final_state;
        // the object stays at the origin, so palm-in-object is the palm pose
        let (rotation, translation) = state.palm_in_object().to_row_major();
        let t = &r.timing;
        GraspRecord {
            palm: PalmRecord { rotation, translation },
            q: state.q.iter().copied().collect(),
            contacts: state.contacts.iter().map(|c| c.position.into()).collect(),
            normals: state.contacts.iter().map(|c| c.normal.into()).collect(),
            vertex_ids: state.contacts.iter().map(|c| c.vertex_id).collect(),
            parallel_grasp: run.grasp,
            metrics_before: r.metrics_before,
            metrics_after: r.metrics_after,
            outer_iterations: r.outer_iterations,
            cpo_iterations: r.iterations(Phase::Cpo),
            ppo_iterations: r.iterations(Phase::Ppo),
            timing: TimingRecord {
                map_ms: ms(t.map),
                cpo_ms: ms(t.cpo.total()),
                ppo_ms: ms(t.ppo.total()),
                tangent_ms: ms(t.cpo.tangent + t.ppo.tangent),
                projection_ms: ms(t.cpo.projection + t.ppo.projection),
                collision_ms: ms(t.cpo.collision + t.ppo.collision),
                total_ms: ms(run.wall_time),
            },
            termination: r.termination.label(),
            n_vertices: run.n_vertices,
            mesh_offset: surface.offset().into(),
            config_echo: cfg.clone(),
        }
    }

    /// Rebuilds the final grasp state (object at the origin).
    pub fn state(&self) -> GraspState {
        GraspState {
            palm: Pose::from_row_major(&self.palm.rotation, &self.palm.translation),
            q: DVector::from_column_slice(&self.q),
            contacts: self
                .contacts
                .iter()
                .zip(&self.normals)
                .zip(&self.vertex_ids)
                .map(|((c, n), &id)| SurfacePoint {
                    position: Vector3::from(*c),
                    normal: Vector3::from(*n),
                    vertex_id: id,
                })
                .collect(),
            object_pose: Pose::identity(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

pub fn write_grasp_json(path: &Path, record: &GraspRecord) -> Result<()> {
    let text = serde_json::to_string_pretty(record)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

const TRACE_HEADER: [&str; 17] = [
    "phase",
    "iteration",
    "q_total",
    "q_object",
    "q_hand",
    "c1_x",
    "c1_y",
    "c1_z",
    "c2_x",
    "c2_y",
    "c2_z",
    "c3_x",
    "c3_y",
    "c3_z",
    "residual_a",
    "residual_b",
    "gap",
];

pub fn write_trace_csv(path: &Path, trace: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(TRACE_HEADER)?;
    for row in trace {
        let mut rec = vec![row.phase.as_str().to_string(), row.iteration.to_string()];
        rec.extend([row.q_total, row.q_object, row.q_hand].map(format_float));
        for c in &row.contacts {
            rec.extend(c.iter().map(|&x| format_float(x)));
        }
        rec.extend([row.residual_a, row.residual_b, row.gap].map(format_float));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn parse_phase(s: &str) -> Option<Phase> {
    match s {
        "init" => Some(Phase::Init),
        "cpo" => Some(Phase::Cpo),
        "ppo" => Some(Phase::Ppo),
        _ => None,
    }
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |msg: &str| Error::parse("trace csv", format!("row {}", line + 1), msg.to_string());
        if rec.len() != TRACE_HEADER.len() {
            return Err(bad("wrong column count"));
        }
        let f = |k: usize| rec[k].parse::<f64>().map_err(|_| bad("bad number"));
        let c = |k: usize| -> Result<Vector3<f64>> { Ok(Vector3::new(f(k)?, f(k + 1)?, f(k + 2)?)) };
        out.push(TraceRow {
            phase: parse_phase(&rec[0]).ok_or_else(|| bad("bad phase"))?,
            iteration: rec[1].parse().map_err(|_| bad("bad iteration"))?,
            q_total: f(2)?,
            q_object: f(3)?,
            q_hand: f(4)?,
            contacts: [c(5)?, c(8)?, c(11)?],
            residual_a: f(14)?,
            residual_b: f(15)?,
            gap: f(16)?,
        });
    }
    Ok(out)
}

/// One line of `bench.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub object: String,
    pub status: String,
    pub values: Option<[f64; 17]>,
}

pub const BENCH_COLUMNS: [&str; 17] = [
    "outer_iters",
    "cpo_iters",
    "ppo_iters",
    "time_ms",
    "tangent_ms",
    "projection_ms",
    "collision_ms",
    "n_vertices",
    "Q_before",
    "Q_after",
    "isotropy_before",
    "isotropy_after",
    "volume_before",
    "volume_after",
    "fc_before",
    "fc_after",
    "map_ms",
];

impl BenchRow {
    pub fn from_run(object: &str, run: &PlanRun) -> Self {
        let r = &run.result;
        let t = &r.timing;
        let (b, a) = (&r.metrics_before, &r.metrics_after);
        BenchRow {
            object: object.to_string(),
            status: r.termination.label(),
            values: Some([
                r.outer_iterations as f64,
                r.iterations(Phase::Cpo) as f64,
                r.iterations(Phase::Ppo) as f64,
                ms(run.wall_time),
                ms(t.cpo.tangent + t.ppo.tangent),
                ms(t.cpo.projection + t.ppo.projection),
                ms(t.cpo.collision + t.ppo.collision),
                run.n_vertices as f64,
                b.q_total,
                a.q_total,
                b.isotropy,
                a.isotropy,
                b.wrench_volume,
                a.wrench_volume,
                b.ferrari_canny,
                a.ferrari_canny,
                ms(t.map),
            ]),
        }
    }

    pub fn failed(object: &str, reason: &str) -> Self {
        BenchRow {
            object: object.to_string(),
            status: format!("failed: {reason}"),
            values: None,
        }
    }
}

/// Writes one row per object and a final `mean` row over the successful ones.
pub fn write_bench_csv(path: &Path, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["object", "status"];
    header.extend(BENCH_COLUMNS);
    w.write_record(&header)?;
    let mut sum = [0.0; 17];
    let mut ok = 0usize;
    for row in rows {
        let mut rec = vec![row.object.clone(), row.status.clone()];
        match &row.values {
            Some(v) => {
                for (s, x) in sum.iter_mut().zip(v) {
                    *s += x;
                }
                ok += 1;
                rec.extend(v.iter().map(|&x| format_float(x)));
            }
            None => rec.extend(std::iter::repeat_n(String::new(), BENCH_COLUMNS.len())),
        }
        w.write_record(&rec)?;
    }
    let mut mean = vec!["mean".to_string(), format!("{ok}/{}", rows.len())];
    if ok > 0 {
        mean.extend(sum.iter().map(|s| format_float(s / ok as f64)));
    } else {
        mean.extend(std::iter::repeat_n(String::new(), BENCH_COLUMNS.len()));
    }
    w.write_record(&mean)?;
    w.flush().map_err(|e| Error::io(path, e))
}
