//! Configuration, planning runs, batch benchmarks and artifact writers used
//! by the `fingersplit` binary.

mod output;
mod scene;

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{error, info, warn};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::collision::{CollisionParams, CollisionProxy};
use crate::context::{AlignmentPredicate, PlanContext};
use crate::error::{Error, Result};
use crate::kinematics::HandModel;
use crate::par::{with_workers, Execution};
use crate::quality::QualityWeights;
use crate::splitter::{run_split, seed_antipodal, ParallelGrasp, PlanResult, SeedParams, SplitterParams, Termination};
use crate::surface::{load_mesh, MeshFormat, SurfaceModel};

pub use output::{
    format_float, read_trace_csv, write_bench_csv, write_grasp_json, write_trace_csv, BenchRow, GraspRecord,
    PalmRecord, TimingRecord, BENCH_COLUMNS,
};
pub use scene::{export_scene, SceneCounts};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_PLANNER: i32 = 3;

/// Everything a planning run needs. Mirrors the command-line flags; flags
/// override values read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: Option<PathBuf>,
    /// Taken from the mesh extension when absent.
    pub format: Option<MeshFormat>,
    pub scale: f64,
    /// Built-in 8-DOF hand when absent.
    pub hand: Option<PathBuf>,
    pub seed: u64,
    /// Skips seeding when present.
    pub grasp: Option<ParallelGrasp>,
    pub out: PathBuf,
    pub weights: QualityWeights,
    pub splitter: SplitterParams,
    pub seeding: SeedParams,
    pub collision: CollisionParams,
    /// Collision proxy voxel size (m); 2% of the bbox diagonal when absent.
    pub proxy_cell: Option<f64>,
    pub alignment: AlignmentPredicate,
    pub execution: Execution,
    /// Worker threads for batch runs (0 = one per core).
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mesh: None,
            format: None,
            scale: 1.0,
            hand: None,
            seed: 0,
            grasp: None,
            out: PathBuf::from("out"),
            weights: QualityWeights::default(),
            splitter: SplitterParams::default(),
            seeding: SeedParams::default(),
            collision: CollisionParams::default(),
            proxy_cell: None,
            alignment: AlignmentPredicate::default(),
            execution: Execution::default(),
            workers: 0,
        }
    }
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Parameter checks that do not touch the file system.
    pub fn validate_params(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::Parameter(format!("scale must be positive, got {}", self.scale)));
        }
        if let Some(cell) = self.proxy_cell {
            if !(cell > 0.0) {
                return Err(Error::Parameter(format!("proxy_cell must be positive, got {cell}")));
            }
        }
        if let Some(g) = &self.grasp {
            ParallelGrasp::new(g.c1, g.c2, g.v_ap)?;
        }
        self.splitter.validate()
    }

    /// Full validation, including that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        let mesh = self
            .mesh
            .as_ref()
            .ok_or_else(|| Error::Parameter("no mesh given".into()))?;
        for path in std::iter::once(mesh).chain(self.hand.as_ref()) {
            if !path.is_file() {
                return Err(Error::io(
                    path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "file not found"),
                ));
            }
        }
        self.validate_params()
    }

    pub fn mesh_format(&self, path: &Path) -> Result<MeshFormat> {
        self.format
            .or_else(|| MeshFormat::from_path(path))
            .ok_or_else(|| Error::Parameter(format!("cannot tell the mesh format of {}", path.display())))
    }

    pub fn load_hand(&self) -> Result<HandModel> {
        match &self.hand {
            Some(path) => HandModel::load(path),
            None => Ok(HandModel::default_barrett()),
        }
    }

    pub fn load_surface(&self, path: &Path, scale: f64) -> Result<SurfaceModel> {
        let surface = load_mesh(path, self.mesh_format(path)?)?;
        if scale == 1.0 {
            Ok(surface)
        } else {
            surface.scaled(scale)
        }
    }
}

/// Parses `c1x,c1y,c1z;c2x,c2y,c2z;vx,vy,vz`.
pub fn parse_grasp(text: &str) -> Result<ParallelGrasp> {
    let bad = || {
        Error::Parameter(format!(
            "grasp must be 'c1x,c1y,c1z;c2x,c2y,c2z;vx,vy,vz', got '{text}'"
        ))
    };
    let groups: Vec<Vector3<f64>> = text
        .split(';')
        .map(|g| {
            let v: Vec<f64> = g
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad())?;
            (v.len() == 3).then(|| Vector3::new(v[0], v[1], v[2])).ok_or_else(bad)
        })
        .collect::<Result<_>>()?;
    if groups.len() != 3 {
        return Err(bad());
    }
    ParallelGrasp::new(groups[0], groups[1], groups[2])
}

/// Exit code for an error raised before or during planning.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Seeding(_) | Error::InfeasibleGrasp(_) => EXIT_INFEASIBLE,
        Error::Io { .. }
        | Error::Parse { .. }
        | Error::DegenerateMesh(_)
        | Error::Parameter(_)
        | Error::Hand(_)
        | Error::Json(_)
        | Error::Csv(_) => EXIT_IO,
        Error::DegenerateContact(_) => EXIT_PLANNER,
    }
}

/// A finished plan together with the inputs that produced it.
#[derive(Debug, Clone)]
pub struct PlanRun {
    pub grasp: ParallelGrasp,
    pub result: PlanResult,
    pub n_vertices: usize,
    pub wall_time: Duration,
}

/// Seeds (unless a grasp is supplied) and plans on an already loaded model.
pub fn plan_on(surface: &SurfaceModel, hand: &HandModel, cfg: &RunConfig) -> Result<PlanRun> {
    let start = Instant::now();
    let proxy = match cfg.proxy_cell {
        Some(cell) => CollisionProxy::from_surface(surface, cell)?,
        None => CollisionProxy::with_default_cell(surface)?,
    };
    let ctx = PlanContext {
        surface,
        hand,
        proxy: &proxy,
        collision: cfg.collision,
        weights: cfg.weights,
        alignment: cfg.alignment,
        execution: cfg.execution,
    };
    let grasp = match cfg.grasp {
        Some(g) => ParallelGrasp::new(g.c1, g.c2, g.v_ap)?,
        None => {
            let seeding = SeedParams {
                seed: cfg.seed,
                ..cfg.seeding
            };
            let max_width = seeding.width_fraction * hand.max_span();
            seed_antipodal(surface, &seeding, max_width, &ctx)?
        }
    };
    info!(
        "grasp: c1 {:?} c2 {:?} approach {:?} (width {:.4} m)",
        grasp.c1.as_slice(),
        grasp.c2.as_slice(),
        grasp.v_ap.as_slice(),
        grasp.width()
    );
    let result = run_split(&grasp, &cfg.splitter, &ctx)?;
    Ok(PlanRun {
        grasp,
        result,
        n_vertices: surface.len(),
        wall_time: start.elapsed(),
    })
}

/// Writes `grasp.json`, `trace.csv` and `scene.obj` into `dir`.
pub fn write_outputs(
    dir: &Path,
    run: &PlanRun,
    surface: &SurfaceModel,
    hand: &HandModel,
    cfg: &RunConfig,
) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let record = GraspRecord::from_run(run, surface, cfg);
    write_grasp_json(&dir.join("grasp.json"), &record)?;
    write_trace_csv(&dir.join("trace.csv"), &run.result.trace)?;
    export_scene(&run.result.final_state, hand, surface, &dir.join("scene.obj"))?;
    Ok(())
}

/// Runs one planning job end to end and returns the process exit code.
pub fn cmd_plan(cfg: &RunConfig) -> i32 {
    let loaded = cfg.validate().and_then(|_| {
        let mesh = cfg.mesh.as_ref().expect("validated");
        Ok((cfg.load_surface(mesh, cfg.scale)?, cfg.load_hand()?))
    });
    let (surface, hand) = match loaded {
        Ok(x) => x,
        Err(e) => {
            error!("{e}");
            return exit_code(&e);
        }
    };
    let run = match plan_on(&surface, &hand, cfg) {
        Ok(run) => run,
        Err(e) => {
            error!("{e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = write_outputs(&cfg.out, &run, &surface, &hand, cfg) {
        error!("{e}");
        return EXIT_IO;
    }
    let r = &run.result;
    info!(
        "{}: {} outer iterations, Q {:.6e} -> {:.6e}, {:.1} ms",
        r.termination.label(),
        r.outer_iterations,
        r.metrics_before.q_total,
        r.metrics_after.q_total,
        run.wall_time.as_secs_f64() * 1e3
    );
    match r.termination {
        Termination::Error(_) => EXIT_PLANNER,
        _ => EXIT_OK,
    }
}

/// One entry of a benchmark list: a mesh path and an optional scale.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchItem {
    pub path: PathBuf,
    pub scale: f64,
}

/// Reads a benchmark list: one `path [scale]` per line, `#` comments and
/// blank lines ignored, relative paths resolved against the list's folder.
pub fn read_bench_list(path: &Path) -> Result<Vec<BenchItem>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut items = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let mesh = PathBuf::from(parts.next().expect("non-empty line"));
        let scale = match parts.next() {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::parse("bench list", format!("line {}", no + 1), format!("bad scale '{s}'")))?,
            None => 1.0,
        };
        if parts.next().is_some() {
            return Err(Error::parse(
                "bench list",
                format!("line {}", no + 1),
                "expected 'path [scale]'",
            ));
        }
        let mesh = if mesh.is_relative() { base.join(mesh) } else { mesh };
        items.push(BenchItem { path: mesh, scale });
    }
    if items.is_empty() {
        return Err(Error::Parameter(format!("{} lists no meshes", path.display())));
    }
    Ok(items)
}

fn object_name(path: &Path, index: usize) -> String {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("object");
    format!("{index:02}_{stem}")
}

/// Plans every mesh of the list concurrently and writes `bench.csv` plus a
/// per-object output folder. Per-object failures become rows.
pub fn cmd_bench(cfg: &RunConfig, list: &Path) -> i32 {
    let items = match read_bench_list(list).and_then(|items| {
        cfg.validate_params()?;
        Ok(items)
    }) {
        Ok(items) => items,
        Err(e) => {
            error!("{e}");
            return exit_code(&e);
        }
    };
    let hand = match cfg.load_hand() {
        Ok(h) => h,
        Err(e) => {
            error!("{e}");
            return exit_code(&e);
        }
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out) {
        error!("{}", Error::io(&cfg.out, e));
        return EXIT_IO;
    }
    let indexed: Vec<(usize, &BenchItem)> = items.iter().enumerate().collect();
    let rows = with_workers(cfg.workers, || {
        cfg.execution.map_slice(&indexed, |&(i, item)| {
            let name = object_name(&item.path, i);
            let outcome = cfg.load_surface(&item.path, item.scale).and_then(|surface| {
                let run = plan_on(&surface, &hand, cfg)?;
                write_outputs(&cfg.out.join(&name), &run, &surface, &hand, cfg)?;
                Ok(run)
            });
            match outcome {
                Ok(run) => BenchRow::from_run(&name, &run),
                Err(e) => {
                    warn!("{name}: {e}");
                    BenchRow::failed(&name, &e.to_string())
                }
            }
        })
    });
    match write_bench_csv(&cfg.out.join("bench.csv"), &rows) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            error!("{e}");
            EXIT_IO
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grasp_flag_parses() {
        let g = parse_grasp("0.01,0,0; -0.01,0,0 ;0,0,2").unwrap();
        assert_eq!(g.c1, Vector3::new(0.01, 0.0, 0.0));
        assert_eq!(g.v_ap, Vector3::z());
        assert!(parse_grasp("1,2,3;4,5,6").is_err());
        assert!(parse_grasp("1,2,3;4,5,6;7,8").is_err());
        assert!(parse_grasp("1,2,x;4,5,6;7,8,9").is_err());
        assert!(matches!(
            parse_grasp("1,2,3;1,2,3;0,0,1"),
            Err(Error::InfeasibleGrasp(_))
        ));
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_fields() {
        let cfg = RunConfig {
            seed: 7,
            scale: 0.001,
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
        let partial: RunConfig = serde_json::from_str(r#"{"splitter": {"cpo": {"sigma_cpo": 0.3}}}"#).unwrap();
        assert_eq!(partial.splitter.cpo.sigma_cpo, 0.3);
        assert_eq!(partial.splitter.ppo, crate::ppo::PpoParams::default());
        assert!(serde_json::from_str::<RunConfig>(r#"{"sede": 3}"#).is_err());
    }

    #[test]
    fn validation_reports_missing_files() {
        let cfg = RunConfig {
            mesh: Some(PathBuf::from("/nonexistent/mesh.obj")),
            ..RunConfig::default()
        };
        let e = cfg.validate().unwrap_err();
        assert_eq!(exit_code(&e), EXIT_IO);
        let no_mesh = RunConfig::default();
        assert!(no_mesh.validate().is_err());
    }

    #[test]
    fn bench_list_resolves_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let list = dir.path().join("list.txt");
        std::fs::write(&list, "# objects\na.obj\n\n/abs/b.stl 0.001 # scaled\n").unwrap();
        let items = read_bench_list(&list).unwrap();
        assert_eq!(items.len(), 2);
        assert_eq!(items[0].path, dir.path().join("a.obj"));
        assert_eq!(
            items[1],
            BenchItem {
                path: PathBuf::from("/abs/b.stl"),
                scale: 0.001
            }
        );
        std::fs::write(&list, "a.obj 1 2\n").unwrap();
        assert!(read_bench_list(&list).is_err());
        std::fs::write(&list, "# nothing\n").unwrap();
        assert!(read_bench_list(&list).is_err());
    }
}
