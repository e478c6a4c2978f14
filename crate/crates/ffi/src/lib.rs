//! C ABI for `bgnflow`.
//!
//! Meshes are opaque `BgnMesh` handles created by the `bgn_mesh_new_*`
//! functions and released with `bgn_mesh_free`. Fallible functions return a
//! `BgnStatus`; on failure a description is available from
//! `bgn_last_error_message` on the same thread. Panics never cross the
//! boundary: they are reported as `BGN_STATUS_PANIC`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bgnflow::diagnostics::projection_error;
use bgnflow::{
    bgn_step, lagrangian_step, Circle, CurveMesh, Ellipse, EllipseRadialFlow, Error, Vec2,
    VelocityField,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    BufferTooSmall = 3,
    InvalidGeometry = 4,
    MeshDegeneration = 5,
    DegenerateNormal = 6,
    SingularSystem = 7,
    InaccurateSolve = 8,
    FieldDomain = 9,
    ProjectionDomain = 10,
    NonConvergence = 11,
    Internal = 12,
    Panic = 13,
}

impl From<&Error> for BgnStatus {
    fn from(e: &Error) -> Self {
        match e.root() {
            Error::InvalidDegree(_) | Error::InvalidArgument(_) | Error::Parse(_) => {
                BgnStatus::InvalidArgument
            }
            Error::InvalidGeometry(_) => BgnStatus::InvalidGeometry,
            Error::MeshDegeneration { .. } => BgnStatus::MeshDegeneration,
            Error::DegenerateNormal { .. } => BgnStatus::DegenerateNormal,
            Error::SingularSystem { .. } => BgnStatus::SingularSystem,
            Error::InaccurateSolve { .. } => BgnStatus::InaccurateSolve,
            Error::FieldDomain { .. } => BgnStatus::FieldDomain,
            Error::ProjectionDomain { .. } => BgnStatus::ProjectionDomain,
            Error::NonConvergence { .. } => BgnStatus::NonConvergence,
            _ => BgnStatus::Internal,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgnFieldKind {
    Zero = 0,
    /// Uniform velocity `(cx, cy)`.
    Constant = 1,
    /// Rigid rotation about the origin with angular speed `omega`.
    Rotation = 2,
    /// The radial field carrying the 3:1 ellipse onto the unit circle at t = 1.
    EllipseRadial = 3,
}

/// Velocity field description; parameters unused by `kind` are ignored.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BgnField {
    pub kind: BgnFieldKind,
    pub cx: f64,
    pub cy: f64,
    pub omega: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BgnStepper {
    Bgn = 0,
    /// Plain forward-Euler advection of the nodes.
    Lagrangian = 1,
}

/// Projection error against the exact ellipse-to-circle flow.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BgnErrorReport {
    pub t: f64,
    pub err_l2: f64,
    pub err_h1: f64,
    pub err_max: f64,
    pub mesh_ratio: f64,
}

/// Opaque mesh handle.
pub struct BgnMesh {
    mesh: CurveMesh,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(message: &str) {
    let text = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = text);
}

fn fail(status: BgnStatus, message: &str) -> BgnStatus {
    set_last_error(message);
    status
}

fn fail_with(e: &Error) -> BgnStatus {
    fail(BgnStatus::from(e), &e.to_string())
}

/// Runs `body`, converting panics into `BgnStatus::Panic`.
fn guard(body: impl FnOnce() -> Result<(), BgnStatus>) -> BgnStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_last_error("");
            BgnStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(BgnStatus::Panic, &format!("panic: {msg}"))
        }
    }
}

unsafe fn mesh_ref<'a>(mesh: *const BgnMesh) -> Result<&'a BgnMesh, BgnStatus> {
    mesh.as_ref()
        .ok_or_else(|| fail(BgnStatus::NullPointer, "mesh handle is null"))
}

fn field_from(field: &BgnField) -> VelocityField {
    match field.kind {
        BgnFieldKind::Zero => VelocityField::Zero,
        BgnFieldKind::Constant => VelocityField::Constant(Vec2::new(field.cx, field.cy)),
        BgnFieldKind::Rotation => VelocityField::Rotation(field.omega),
        BgnFieldKind::EllipseRadial => VelocityField::EllipseRadial,
    }
}

unsafe fn store_mesh(
    out: *mut *mut BgnMesh,
    built: bgnflow::Result<CurveMesh>,
) -> Result<(), BgnStatus> {
    let mesh = built.map_err(|e| fail_with(&e))?;
    *out = Box::into_raw(Box::new(BgnMesh { mesh }));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bgn_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread (empty after a success).
/// The pointer stays valid until the next call into the library on this
/// thread.
#[no_mangle]
pub extern "C" fn bgn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Interpolates the ellipse `(a cos 2 pi s, b sin 2 pi s)` with `elements`
/// elements of degree `degree`.
#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_new_ellipse(
    a: f64,
    b: f64,
    elements: usize,
    degree: usize,
    out: *mut *mut BgnMesh,
) -> BgnStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(BgnStatus::NullPointer, "output pointer is null"));
        }
        *out = ptr::null_mut();
        if !(a > 0.0 && b > 0.0) {
            return Err(fail(
                BgnStatus::InvalidArgument,
                "semi-axes must be positive",
            ));
        }
        store_mesh(
            out,
            CurveMesh::interpolate(&Ellipse::new(a, b), elements, degree),
        )
    })
}

#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_new_circle(
    cx: f64,
    cy: f64,
    radius: f64,
    elements: usize,
    degree: usize,
    out: *mut *mut BgnMesh,
) -> BgnStatus {
    guard(|| {
        if out.is_null() {
            return Err(fail(BgnStatus::NullPointer, "output pointer is null"));
        }
        *out = ptr::null_mut();
        if !(radius > 0.0) {
            return Err(fail(BgnStatus::InvalidArgument, "radius must be positive"));
        }
        let circle = Circle::new(Vec2::new(cx, cy), radius);
        store_mesh(out, CurveMesh::interpolate(&circle, elements, degree))
    })
}

/// Builds a mesh from `node_count` interleaved `(x, y)` pairs, ordered
/// counterclockwise with junction nodes every `degree` entries.
#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_from_positions(
    degree: usize,
    xy: *const f64,
    node_count: usize,
    out: *mut *mut BgnMesh,
) -> BgnStatus {
    guard(|| {
        if out.is_null() || xy.is_null() {
            return Err(fail(BgnStatus::NullPointer, "null pointer argument"));
        }
        *out = ptr::null_mut();
        let coords = std::slice::from_raw_parts(xy, 2 * node_count);
        let positions = coords
            .chunks_exact(2)
            .map(|c| Vec2::new(c[0], c[1]))
            .collect();
        store_mesh(out, CurveMesh::from_positions(degree, positions))
    })
}

/// Releases a mesh; null is accepted and ignored.
#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_free(mesh: *mut BgnMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

/// Number of nodes `N = J k`, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_node_count(mesh: *const BgnMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.node_count())
}

#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_element_count(mesh: *const BgnMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.element_count())
}

#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_degree(mesh: *const BgnMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.mesh.degree())
}

/// Copies the node positions as interleaved `(x, y)` pairs into `out_xy`,
/// which must hold `2 * capacity` doubles with `capacity >= node count`.
#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_positions(
    mesh: *const BgnMesh,
    out_xy: *mut f64,
    capacity: usize,
) -> BgnStatus {
    guard(|| {
        let m = mesh_ref(mesh)?;
        if out_xy.is_null() {
            return Err(fail(BgnStatus::NullPointer, "output buffer is null"));
        }
        let n = m.mesh.node_count();
        if capacity < n {
            return Err(fail(
                BgnStatus::BufferTooSmall,
                &format!("buffer holds {capacity} nodes, mesh has {n}"),
            ));
        }
        let out = std::slice::from_raw_parts_mut(out_xy, 2 * n);
        for (dst, p) in out.chunks_exact_mut(2).zip(m.mesh.positions()) {
            dst[0] = p.x;
            dst[1] = p.y;
        }
        Ok(())
    })
}

/// Ratio of the longest to the shortest element arc length.
#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_ratio(mesh: *const BgnMesh, out: *mut f64) -> BgnStatus {
    guard(|| {
        let m = mesh_ref(mesh)?;
        if out.is_null() {
            return Err(fail(BgnStatus::NullPointer, "output pointer is null"));
        }
        *out = m.mesh.mesh_ratio();
        Ok(())
    })
}

/// Advances the mesh in place from `t` to `t + tau`. For the BGN stepper the
/// curvature multipliers are written to `kappa_out` when it is non-null
/// (capacity in entries); the Lagrangian stepper leaves it untouched. On
/// failure the mesh is unchanged.
#[no_mangle]
pub unsafe extern "C" fn bgn_mesh_step(
    mesh: *mut BgnMesh,
    stepper: BgnStepper,
    field: *const BgnField,
    t: f64,
    tau: f64,
    kappa_out: *mut f64,
    kappa_capacity: usize,
) -> BgnStatus {
    guard(|| {
        let m = mesh
            .as_mut()
            .ok_or_else(|| fail(BgnStatus::NullPointer, "mesh handle is null"))?;
        let field = field
            .as_ref()
            .map(field_from)
            .ok_or_else(|| fail(BgnStatus::NullPointer, "field is null"))?;
        let n = m.mesh.node_count();
        if !kappa_out.is_null() && kappa_capacity < n {
            return Err(fail(
                BgnStatus::BufferTooSmall,
                &format!("curvature buffer holds {kappa_capacity} entries, mesh has {n} nodes"),
            ));
        }
        match stepper {
            BgnStepper::Bgn => {
                let outcome = bgn_step(&m.mesh, &field, t, tau).map_err(|e| fail_with(&e))?;
                if !kappa_out.is_null() {
                    std::slice::from_raw_parts_mut(kappa_out, n)
                        .copy_from_slice(&outcome.curvature);
                }
                m.mesh = outcome.mesh;
            }
            BgnStepper::Lagrangian => {
                m.mesh = lagrangian_step(&m.mesh, &field, t, tau).map_err(|e| fail_with(&e))?;
            }
        }
        Ok(())
    })
}

/// Projection error of the mesh against the exact ellipse-to-circle curve at
/// time `t` in `[0, 1]`.
#[no_mangle]
pub unsafe extern "C" fn bgn_projection_error(
    mesh: *const BgnMesh,
    t: f64,
    report: *mut BgnErrorReport,
) -> BgnStatus {
    guard(|| {
        let m = mesh_ref(mesh)?;
        if report.is_null() {
            return Err(fail(BgnStatus::NullPointer, "report pointer is null"));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(fail(BgnStatus::InvalidArgument, "t must lie in [0, 1]"));
        }
        let r = projection_error(&m.mesh, &EllipseRadialFlow, t).map_err(|e| fail_with(&e))?;
        *report = BgnErrorReport {
            t: r.t,
            err_l2: r.err_l2,
            err_h1: r.err_h1,
            err_max: r.err_max,
            mesh_ratio: r.mesh_ratio,
        };
        Ok(())
    })
}

/// Evaluates `field` at `(x, y)`, writing the velocity to `out_xy[0..2]`.
#[no_mangle]
pub unsafe extern "C" fn bgn_field_eval(
    field: *const BgnField,
    x: f64,
    y: f64,
    t: f64,
    out_xy: *mut f64,
) -> BgnStatus {
    guard(|| {
        let field = field
            .as_ref()
            .map(field_from)
            .ok_or_else(|| fail(BgnStatus::NullPointer, "field is null"))?;
        if out_xy.is_null() {
            return Err(fail(BgnStatus::NullPointer, "output pointer is null"));
        }
        let v = field.eval(Vec2::new(x, y), t).map_err(|e| fail_with(&e))?;
        *out_xy = v.x;
        *out_xy.add(1) = v.y;
        Ok(())
    })
}
