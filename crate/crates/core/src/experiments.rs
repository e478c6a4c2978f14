//! Time loop and the convergence / mesh-ratio studies.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use thiserror::Error;

use crate::diagnostics::{convergence_order, fitted_order, projection_error, ErrorReport};
use crate::error::{Error, Result};
use crate::flows::{EllipseRadialFlow, VelocityField};
use crate::mesh::{Circle, CurveMesh, Ellipse};
use crate::solver::Stepper;

/// Step counts paired with `J = 16, 32, 64, 128` in the spatial study, per
/// degree, so that `tau = O(h^k)`.
pub fn spatial_steps(k: usize) -> Option<[usize; 4]> {
    match k {
        1 => Some([16, 32, 64, 128]),
        2 => Some([16, 64, 256, 1024]),
        3 => Some([8, 64, 512, 4096]),
        _ => None,
    }
}

pub const SPATIAL_ELEMENTS: [usize; 4] = [16, 32, 64, 128];
pub const TEMPORAL_STEPS: [usize; 6] = [2, 4, 8, 16, 32, 64];
/// Step count of the reference run that estimates the spatial error floor.
pub const TEMPORAL_REFERENCE_STEPS: usize = 512;
pub const TEMPORAL_DEFAULT_ELEMENTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialCurve {
    /// `(cos 2 pi s, sin(2 pi s) / 3)`.
    #[default]
    Ellipse,
    UnitCircle,
}

impl InitialCurve {
    pub fn mesh(self, elements: usize, degree: usize) -> Result<CurveMesh> {
        match self {
            InitialCurve::Ellipse => {
                CurveMesh::interpolate(&Ellipse::three_to_one(), elements, degree)
            }
            InitialCurve::UnitCircle => CurveMesh::interpolate(&Circle::unit(), elements, degree),
        }
    }
}

impl fmt::Display for InitialCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InitialCurve::Ellipse => "ellipse",
            InitialCurve::UnitCircle => "circle",
        })
    }
}

impl FromStr for InitialCurve {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ellipse" => Ok(InitialCurve::Ellipse),
            "circle" => Ok(InitialCurve::UnitCircle),
            other => Err(Error::Parse(format!("unknown initial curve `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowConfig {
    pub degree: usize,
    pub elements: usize,
    pub steps: usize,
    pub t_max: f64,
    pub field: VelocityField,
    pub stepper: Stepper,
    pub curve: InitialCurve,
    /// Diagnostics are recorded every `snapshot_stride` steps and at the end.
    pub snapshot_stride: usize,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            degree: 2,
            elements: 64,
            steps: 256,
            t_max: 1.0,
            field: VelocityField::EllipseRadial,
            stepper: Stepper::Bgn,
            curve: InitialCurve::Ellipse,
            snapshot_stride: 1,
        }
    }
}

impl FlowConfig {
    pub fn tau(&self) -> f64 {
        self.t_max / self.steps as f64
    }

    pub fn h(&self) -> f64 {
        1.0 / self.elements as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree == 0 {
            return Err(Error::InvalidDegree(0));
        }
        if self.elements < 3 {
            return Err(Error::InvalidArgument("need at least 3 elements".into()));
        }
        if self.steps == 0 || !(self.t_max > 0.0) {
            return Err(Error::InvalidArgument(
                "steps and t_max must be positive".into(),
            ));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidArgument(
                "snapshot stride must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Errors are measured only when the exact flow applies.
    pub fn measures_error(&self) -> bool {
        self.field.has_exact_flow() && self.curve == InitialCurve::Ellipse
    }
}

/// Diagnostics recorded at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub mesh_ratio: f64,
    pub error: Option<ErrorReport>,
}

#[derive(Debug, Clone)]
pub struct FlowRun {
    pub snapshots: Vec<Snapshot>,
    /// Last accepted mesh and its time level.
    pub final_mesh: CurveMesh,
    pub final_t: f64,
}

impl FlowRun {
    pub fn initial_mesh_ratio(&self) -> f64 {
        self.snapshots.first().map_or(f64::NAN, |s| s.mesh_ratio)
    }

    pub fn final_mesh_ratio(&self) -> f64 {
        self.snapshots.last().map_or(f64::NAN, |s| s.mesh_ratio)
    }

    pub fn final_time(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    fn max_error(&self, pick: impl Fn(&ErrorReport) -> f64) -> Option<f64> {
        let mut values = self
            .snapshots
            .iter()
            .filter_map(|s| s.error.as_ref())
            .peekable();
        values.peek()?;
        Some(values.map(pick).fold(0.0, f64::max))
    }

    /// `max_m ||e^m||_{L2}` over recorded snapshots.
    pub fn err_l2(&self) -> Option<f64> {
        self.max_error(|r| r.err_l2)
    }

    pub fn err_h1(&self) -> Option<f64> {
        self.max_error(|r| r.err_h1)
    }

    pub fn err_max(&self) -> Option<f64> {
        self.max_error(|r| r.err_max)
    }

    /// Nodal distance to the exact curve at the final time.
    pub fn final_err_max(&self) -> Option<f64> {
        self.snapshots.last()?.error.map(|r| r.err_max)
    }
}

/// A run that stopped early; `partial` holds everything up to the last
/// accepted step, or nothing if the initial mesh could not be built.
#[derive(Debug, Error)]
#[error("flow failed at step {step} (t = {t}): {source}")]
pub struct FlowFailure {
    pub step: usize,
    pub t: f64,
    #[source]
    pub source: Error,
    pub partial: Option<Box<FlowRun>>,
}

impl From<FlowFailure> for Error {
    fn from(f: FlowFailure) -> Self {
        Error::StepFailed {
            step: f.step,
            source: Box::new(f.source),
        }
    }
}

fn snapshot(cfg: &FlowConfig, mesh: &CurveMesh, step: usize, t: f64) -> Result<Snapshot> {
    let error = if cfg.measures_error() {
        Some(projection_error(mesh, &EllipseRadialFlow, t)?)
    } else {
        None
    };
    Ok(Snapshot {
        step,
        t,
        mesh_ratio: mesh.mesh_ratio(),
        error,
    })
}

/// Steps the configured scheme `steps` times from the interpolated initial
/// curve, recording diagnostics at `t = 0`, every `snapshot_stride` steps and
/// at the final time.
pub fn run_flow(cfg: &FlowConfig) -> std::result::Result<FlowRun, FlowFailure> {
    let fail = |step, t, source, run: FlowRun| FlowFailure {
        step,
        t,
        source,
        partial: Some(Box::new(run)),
    };
    let early = |source| FlowFailure {
        step: 0,
        t: 0.0,
        source,
        partial: None,
    };
    cfg.validate().map_err(early)?;
    let tau = cfg.tau();
    let mut mesh = cfg.curve.mesh(cfg.elements, cfg.degree).map_err(early)?;
    let mut run = FlowRun {
        snapshots: Vec::new(),
        final_mesh: mesh.clone(),
        final_t: 0.0,
    };
    match snapshot(cfg, &mesh, 0, 0.0) {
        Ok(s) => run.snapshots.push(s),
        Err(e) => return Err(fail(0, 0.0, e, run)),
    }
    for m in 0..cfg.steps {
        let t = m as f64 * tau;
        let t_next = (m + 1) as f64 * tau;
        mesh = match cfg.stepper.step(&mesh, &cfg.field, t, tau) {
            Ok(next) => next,
            Err(e) => return Err(fail(m + 1, t_next, e, run)),
        };
        let step = m + 1;
        if step % cfg.snapshot_stride == 0 || step == cfg.steps {
            match snapshot(cfg, &mesh, step, t_next) {
                Ok(s) => run.snapshots.push(s),
                Err(e) => return Err(fail(step, t_next, e, run)),
            }
        }
        run.final_mesh = mesh.clone();
        run.final_t = t_next;
    }
    Ok(run)
}

/// One CSV row of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentRecord {
    pub experiment: String,
    pub k: usize,
    pub elements: usize,
    pub h: f64,
    pub steps: usize,
    pub tau: f64,
    pub t_final: f64,
    pub err_l2: Option<f64>,
    pub err_h1: Option<f64>,
    pub err_max: Option<f64>,
    pub order_l2: Option<f64>,
    pub mesh_ratio_initial: f64,
    pub mesh_ratio_final: f64,
    pub wall_ms: f64,
}

impl ExperimentRecord {
    pub fn from_run(experiment: &str, cfg: &FlowConfig, run: &FlowRun, wall_ms: f64) -> Self {
        ExperimentRecord {
            experiment: experiment.to_string(),
            k: cfg.degree,
            elements: cfg.elements,
            h: cfg.h(),
            steps: cfg.steps,
            tau: cfg.tau(),
            t_final: run.final_time(),
            err_l2: run.err_l2(),
            err_h1: run.err_h1(),
            err_max: run.err_max(),
            order_l2: None,
            mesh_ratio_initial: run.initial_mesh_ratio(),
            mesh_ratio_final: run.final_mesh_ratio(),
            wall_ms,
        }
    }
}

fn timed_run(experiment: &str, cfg: FlowConfig) -> Result<(ExperimentRecord, FlowRun)> {
    let start = Instant::now();
    let run = run_flow(&cfg)?;
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok((
        ExperimentRecord::from_run(experiment, &cfg, &run, wall_ms),
        run,
    ))
}

/// Runs independent configurations on scoped threads; results keep input order.
fn run_all(experiment: &str, cfgs: Vec<FlowConfig>) -> Result<Vec<ExperimentRecord>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> = cfgs
            .into_iter()
            .map(|cfg| scope.spawn(move || timed_run(experiment, cfg).map(|(rec, _)| rec)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("flow worker panicked"))
            .collect()
    })
}

/// Fills `order_l2` of each row against the previous row, using `h` or `tau`.
fn fill_orders(records: &mut [ExperimentRecord], by: impl Fn(&ExperimentRecord) -> f64) {
    for i in 1..records.len() {
        let (prev, cur) = (&records[i - 1], &records[i]);
        records[i].order_l2 = match (prev.err_l2, cur.err_l2) {
            (Some(a), Some(b)) => convergence_order(&[a, b], &[by(prev), by(cur)])
                .ok()
                .and_then(|o| o[0]),
            _ => None,
        };
    }
}

fn ellipse_config(degree: usize, elements: usize, steps: usize, stepper: Stepper) -> FlowConfig {
    FlowConfig {
        degree,
        elements,
        steps,
        t_max: 1.0,
        field: VelocityField::EllipseRadial,
        stepper,
        curve: InitialCurve::Ellipse,
        snapshot_stride: 1,
    }
}

/// Four runs `h = 2^-4 .. 2^-7` with `tau = O(h^k)`.
pub fn run_spatial_convergence(k: usize) -> Result<Vec<ExperimentRecord>> {
    let steps = spatial_steps(k).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "spatial study is defined for k = 1, 2, 3 (got {k})"
        ))
    })?;
    let cfgs = SPATIAL_ELEMENTS
        .iter()
        .zip(steps)
        .map(|(&j, nt)| ellipse_config(k, j, nt, Stepper::Bgn))
        .collect();
    let mut records = run_all("spatial", cfgs)?;
    fill_orders(&mut records, |r| r.h);
    Ok(records)
}

#[derive(Debug, Clone)]
pub struct TemporalStudy {
    /// One row per `Nt` in [`TEMPORAL_STEPS`], raw orders in `tau`.
    pub records: Vec<ExperimentRecord>,
    /// Fine-`tau` run estimating the spatial error floor.
    pub reference: ExperimentRecord,
}

impl TemporalStudy {
    /// Errors with the reference floor subtracted.
    pub fn corrected_errors(&self) -> Vec<f64> {
        let floor = self.reference.err_l2.unwrap_or(0.0);
        self.records
            .iter()
            .map(|r| r.err_l2.unwrap_or(f64::NAN) - floor)
            .collect()
    }

    /// Least-squares order in `tau` over the last `points` rows after
    /// subtracting the floor.
    pub fn corrected_order(&self, points: usize) -> Option<f64> {
        let n = self.records.len();
        if points < 2 || points > n {
            return None;
        }
        let errs = &self.corrected_errors()[n - points..];
        let taus: Vec<f64> = self.records[n - points..].iter().map(|r| r.tau).collect();
        fitted_order(errs, &taus)
    }

    /// Orders of successive differences `e(tau) - e(tau/2)`, which need no
    /// floor estimate.
    pub fn richardson_orders(&self) -> Vec<Option<f64>> {
        let errs: Vec<f64> = self
            .records
            .iter()
            .map(|r| r.err_l2.unwrap_or(f64::NAN))
            .collect();
        let diffs: Vec<f64> = errs.windows(2).map(|w| (w[0] - w[1]).abs()).collect();
        diffs
            .windows(2)
            .map(|d| (d[0] > 0.0 && d[1] > 0.0).then(|| (d[0] / d[1]).log2()))
            .collect()
    }
}

/// Fixed mesh, `Nt = 2 .. 64`, plus a reference run at
/// [`TEMPORAL_REFERENCE_STEPS`].
pub fn run_temporal_convergence(k: usize, elements: usize) -> Result<TemporalStudy> {
    let mut cfgs: Vec<FlowConfig> = TEMPORAL_STEPS
        .iter()
        .map(|&nt| ellipse_config(k, elements, nt, Stepper::Bgn))
        .collect();
    cfgs.push(ellipse_config(
        k,
        elements,
        TEMPORAL_REFERENCE_STEPS,
        Stepper::Bgn,
    ));
    let mut records = run_all("temporal", cfgs)?;
    let mut reference = records.pop().expect("reference run");
    reference.experiment = "temporal-reference".into();
    fill_orders(&mut records, |r| r.tau);
    Ok(TemporalStudy { records, reference })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub stepper: Stepper,
    pub step: usize,
    pub t: f64,
    pub mesh_ratio: f64,
}

#[derive(Debug, Clone)]
pub struct MeshRatioStudy {
    pub records: Vec<ExperimentRecord>,
    pub series: Vec<SeriesPoint>,
}

impl MeshRatioStudy {
    pub fn series_for(&self, stepper: Stepper) -> impl Iterator<Item = &SeriesPoint> {
        self.series.iter().filter(move |p| p.stepper == stepper)
    }
}

pub const MESH_RATIO_ELEMENTS: usize = 64;
pub const MESH_RATIO_STEPS: usize = 64;

/// BGN against plain nodal advection on the radial field, `J = 64`, `k = 1`,
/// `Nt = 64`, sampled every step.
pub fn run_mesh_ratio_study() -> Result<MeshRatioStudy> {
    let mut records = Vec::new();
    let mut series = Vec::new();
    for stepper in [Stepper::Bgn, Stepper::Lagrangian] {
        let cfg = ellipse_config(1, MESH_RATIO_ELEMENTS, MESH_RATIO_STEPS, stepper);
        let (rec, run) = timed_run(&format!("meshratio-{stepper}"), cfg)?;
        records.push(rec);
        series.extend(run.snapshots.iter().map(|s| SeriesPoint {
            stepper,
            step: s.step,
            t: s.t,
            mesh_ratio: s.mesh_ratio,
        }));
    }
    Ok(MeshRatioStudy { records, series })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_circle_is_stationary() {
        let cfg = FlowConfig {
            degree: 2,
            elements: 16,
            steps: 10,
            field: VelocityField::Zero,
            curve: InitialCurve::UnitCircle,
            ..FlowConfig::default()
        };
        let run = run_flow(&cfg).unwrap();
        let initial = cfg.curve.mesh(16, 2).unwrap();
        for (a, b) in run.final_mesh.positions().iter().zip(initial.positions()) {
            assert!(a.distance(*b) <= 1e-9);
        }
        assert_eq!(run.snapshots.len(), 11);
        assert!(run.err_l2().is_none());
    }

    #[test]
    fn strided_snapshots_match_full_run() {
        let base = FlowConfig {
            degree: 1,
            elements: 16,
            steps: 8,
            ..FlowConfig::default()
        };
        let full = run_flow(&base).unwrap();
        let strided = run_flow(&FlowConfig {
            snapshot_stride: 3,
            ..base.clone()
        })
        .unwrap();
        let steps: Vec<usize> = strided.snapshots.iter().map(|s| s.step).collect();
        assert_eq!(steps, vec![0, 3, 6, 8]);
        for s in &strided.snapshots {
            let f = &full.snapshots[s.step];
            let (a, b) = (s.error.unwrap(), f.error.unwrap());
            assert!((a.err_l2 - b.err_l2).abs() <= 1e-14);
            assert!((s.mesh_ratio - f.mesh_ratio).abs() <= 1e-14);
        }
    }

    #[test]
    fn invalid_config_fails_at_step_zero() {
        let cfg = FlowConfig {
            elements: 2,
            ..FlowConfig::default()
        };
        let err = run_flow(&cfg).unwrap_err();
        assert_eq!(err.step, 0);
    }

    #[test]
    fn divergence_reports_failing_step_and_keeps_partial_run() {
        // a huge time step throws the nodes out of the retraction tube
        let cfg = FlowConfig {
            degree: 1,
            elements: 16,
            steps: 2,
            t_max: 40.0,
            ..FlowConfig::default()
        };
        let err = run_flow(&cfg).unwrap_err();
        assert!(err.step >= 1);
        let partial = err.partial.as_ref().expect("partial run");
        assert_eq!(partial.snapshots.len(), err.step);
        let wrapped: Error = err.into();
        assert!(matches!(wrapped, Error::StepFailed { .. }));
    }

    #[test]
    fn spatial_study_rejects_unknown_degree() {
        assert!(run_spatial_convergence(4).is_err());
    }

    #[test]
    fn initial_curve_tokens() {
        assert_eq!(
            "ellipse".parse::<InitialCurve>().unwrap(),
            InitialCurve::Ellipse
        );
        assert_eq!(
            "circle".parse::<InitialCurve>().unwrap(),
            InitialCurve::UnitCircle
        );
        assert!("square".parse::<InitialCurve>().is_err());
    }
}
