//! C ABI over `nfris-core`.
//!
//! Every fallible function returns an [`NfrisStatus`]; on failure the message
//! is kept per thread and can be copied out with [`nfris_last_error_message`].
//! Objects are opaque heap handles released with the matching `_free`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use nfris_core::analysis::{cophase_profile, effective_dof, EdofMethod};
use nfris_core::beamforming::elementwise_power;
use nfris_core::channel::{cascaded_links, end_to_end, CascadedLinkSet, ChannelMatrix, PathLossModel, RisProfile};
use nfris_core::codebook::{build_hierarchical, HierarchicalCodebook};
use nfris_core::geometry::{classify_region, rayleigh_distance, FieldRegion, RisGeometry, Vec3};
use nfris_core::training::{hierarchical_training, MeasurementOracle};
use nfris_core::Error;
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfrisStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Geometry = 3,
    Dimension = 4,
    Config = 5,
    Panic = 6,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfrisRegion {
    Near = 0,
    Far = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfrisPathLoss {
    FreeSpace = 0,
    Unit = 1,
}

/// Opaque surface or antenna array.
pub struct NfrisGeometry(RisGeometry);

/// Opaque cascaded channel set.
pub struct NfrisLinks(CascadedLinkSet);

/// Opaque hierarchical codebook.
pub struct NfrisCodebook(HierarchicalCodebook);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: NfrisStatus, msg: impl Into<String>) -> NfrisStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> NfrisStatus {
    let status = match e {
        Error::Domain(_) => NfrisStatus::Domain,
        Error::Geometry(_) => NfrisStatus::Geometry,
        Error::Dimension(_) => NfrisStatus::Dimension,
        Error::Config(_) => NfrisStatus::Config,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> Result<(), NfrisStatus>) -> NfrisStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NfrisStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => fail(NfrisStatus::Panic, "internal panic"),
    }
}

trait OrStatus<T> {
    fn status(self) -> Result<T, NfrisStatus>;
}

impl<T> OrStatus<T> for nfris_core::Result<T> {
    fn status(self) -> Result<T, NfrisStatus> {
        self.map_err(from_error)
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, NfrisStatus> {
    p.as_ref()
        .ok_or_else(|| fail(NfrisStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, NfrisStatus> {
    p.as_mut()
        .ok_or_else(|| fail(NfrisStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn vec3(p: *const f64, name: &str) -> Result<Vec3, NfrisStatus> {
    if p.is_null() {
        return Err(fail(NfrisStatus::NullPointer, format!("`{name}` is null")));
    }
    let s = std::slice::from_raw_parts(p, 3);
    Ok(Vec3::new(s[0], s[1], s[2]))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`) and returns the full message length plus
/// one. Returns 0 when there is no error.
#[no_mangle]
pub unsafe extern "C" fn nfris_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            std::ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// `2D²/λ`.
#[no_mangle]
pub unsafe extern "C" fn nfris_rayleigh_distance(aperture: f64, lambda: f64, out_distance: *mut f64) -> NfrisStatus {
    guard(|| {
        let o = out(out_distance, "out_distance")?;
        *o = rayleigh_distance(aperture, lambda).status()?;
        Ok(())
    })
}

/// Planar array of `rows × cols` elements centred at `center[3]` with unit
/// normal `normal[3]`.
#[no_mangle]
pub unsafe extern "C" fn nfris_geometry_planar(
    rows: usize,
    cols: usize,
    spacing: f64,
    center: *const f64,
    normal: *const f64,
    out_geometry: *mut *mut NfrisGeometry,
) -> NfrisStatus {
    guard(|| {
        let o = out(out_geometry, "out_geometry")?;
        let g = RisGeometry::planar(rows, cols, spacing, vec3(center, "center")?, vec3(normal, "normal")?).status()?;
        *o = Box::into_raw(Box::new(NfrisGeometry(g)));
        Ok(())
    })
}

/// A single antenna at `position[3]`.
#[no_mangle]
pub unsafe extern "C" fn nfris_geometry_point(
    position: *const f64,
    out_geometry: *mut *mut NfrisGeometry,
) -> NfrisStatus {
    guard(|| {
        let o = out(out_geometry, "out_geometry")?;
        let g = RisGeometry::point(vec3(position, "position")?).status()?;
        *o = Box::into_raw(Box::new(NfrisGeometry(g)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfris_geometry_free(geometry: *mut NfrisGeometry) {
    if !geometry.is_null() {
        drop(Box::from_raw(geometry));
    }
}

#[no_mangle]
pub unsafe extern "C" fn nfris_geometry_element_count(
    geometry: *const NfrisGeometry,
    out_count: *mut usize,
) -> NfrisStatus {
    guard(|| {
        *out(out_count, "out_count")? = deref(geometry, "geometry")?.0.len();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfris_geometry_aperture(
    geometry: *const NfrisGeometry,
    out_aperture: *mut f64,
) -> NfrisStatus {
    guard(|| {
        *out(out_aperture, "out_aperture")? = deref(geometry, "geometry")?.0.aperture();
        Ok(())
    })
}

/// Near field iff the distance from the array centre is below the Rayleigh distance.
#[no_mangle]
pub unsafe extern "C" fn nfris_classify_region(
    geometry: *const NfrisGeometry,
    point: *const f64,
    lambda: f64,
    out_region: *mut NfrisRegion,
) -> NfrisStatus {
    guard(|| {
        let o = out(out_region, "out_region")?;
        let r = classify_region(&deref(geometry, "geometry")?.0, vec3(point, "point")?, lambda).status()?;
        *o = match r {
            FieldRegion::NearField => NfrisRegion::Near,
            FieldRegion::FarField => NfrisRegion::Far,
        };
        Ok(())
    })
}

/// Exact spherical-wavefront cascaded channels `tx → ris → rx`.
#[no_mangle]
pub unsafe extern "C" fn nfris_links_create(
    tx: *const NfrisGeometry,
    ris: *const NfrisGeometry,
    rx: *const NfrisGeometry,
    lambda: f64,
    path_loss: NfrisPathLoss,
    out_links: *mut *mut NfrisLinks,
) -> NfrisStatus {
    guard(|| {
        let o = out(out_links, "out_links")?;
        let model = match path_loss {
            NfrisPathLoss::FreeSpace => PathLossModel::FreeSpaceCascaded,
            NfrisPathLoss::Unit => PathLossModel::UnitGain,
        };
        let l = cascaded_links(
            &deref(tx, "tx")?.0,
            &deref(ris, "ris")?.0,
            &deref(rx, "rx")?.0,
            lambda,
            model,
        )
        .status()?;
        *o = Box::into_raw(Box::new(NfrisLinks(l)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfris_links_free(links: *mut NfrisLinks) {
    if !links.is_null() {
        drop(Box::from_raw(links));
    }
}

/// `|H_{rx,tx}|²` under the co-phasing profile for that antenna pair.
#[no_mangle]
pub unsafe extern "C" fn nfris_cophase_gain(
    links: *const NfrisLinks,
    rx_index: usize,
    tx_index: usize,
    out_gain: *mut f64,
) -> NfrisStatus {
    guard(|| {
        let o = out(out_gain, "out_gain")?;
        let l = &deref(links, "links")?.0;
        let p = cophase_profile(l, rx_index, tx_index).status()?;
        *o = end_to_end(l, &p).status()?.get(rx_index, tx_index).norm_sqr();
        Ok(())
    })
}

/// Entropy-based effective rank of a row-major `rows × cols` complex matrix
/// stored as interleaved `(re, im)` pairs.
#[no_mangle]
pub unsafe extern "C" fn nfris_effective_rank(
    rows: usize,
    cols: usize,
    data: *const f64,
    out_rank: *mut f64,
) -> NfrisStatus {
    guard(|| {
        let o = out(out_rank, "out_rank")?;
        if data.is_null() {
            return Err(fail(NfrisStatus::NullPointer, "`data` is null"));
        }
        let len = rows
            .checked_mul(cols)
            .and_then(|n| n.checked_mul(2))
            .ok_or_else(|| fail(NfrisStatus::Dimension, "matrix size overflows"))?;
        let raw = std::slice::from_raw_parts(data, len);
        let entries = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let h = ChannelMatrix::new(rows, cols, entries).status()?;
        *o = effective_dof(&h, EdofMethod::EffectiveRank).status()?.effective_rank;
        Ok(())
    })
}

/// Single-user element-wise received-power ascent on the pair `(0, 0)`.
/// `init_phases` may be null (all-zero start). `out_phases` receives the
/// element count of phases.
#[no_mangle]
pub unsafe extern "C" fn nfris_elementwise_power(
    links: *const NfrisLinks,
    init_phases: *const f64,
    max_sweeps: usize,
    tol: f64,
    out_phases: *mut f64,
    out_objective: *mut f64,
    out_sweeps: *mut usize,
    out_converged: *mut bool,
) -> NfrisStatus {
    guard(|| {
        let l = &deref(links, "links")?.0;
        let n = l.n_elements();
        if out_phases.is_null() {
            return Err(fail(NfrisStatus::NullPointer, "`out_phases` is null"));
        }
        let (objective, sweeps, converged) = (
            out(out_objective, "out_objective")?,
            out(out_sweeps, "out_sweeps")?,
            out(out_converged, "out_converged")?,
        );
        let init = if init_phases.is_null() {
            RisProfile::identity(n)
        } else {
            RisProfile::from_phases(std::slice::from_raw_parts(init_phases, n))
        };
        let (profile, trace) = elementwise_power(l, &init, max_sweeps, tol).status()?;
        std::slice::from_raw_parts_mut(out_phases, n).copy_from_slice(&profile.phases().expect("reflect-only profile"));
        *objective = trace.final_value();
        *sweeps = trace.sweeps;
        *converged = trace.converged;
        Ok(())
    })
}

/// Hierarchical codebook for a line array over the default polar domain.
#[no_mangle]
pub unsafe extern "C" fn nfris_codebook_create(
    ris: *const NfrisGeometry,
    lambda: f64,
    l1: usize,
    l2: usize,
    distance_branches: usize,
    out_codebook: *mut *mut NfrisCodebook,
) -> NfrisStatus {
    guard(|| {
        let o = out(out_codebook, "out_codebook")?;
        let cb = build_hierarchical(&deref(ris, "ris")?.0, lambda, l1, l2, distance_branches, None).status()?;
        *o = Box::into_raw(Box::new(NfrisCodebook(cb)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn nfris_codebook_free(codebook: *mut NfrisCodebook) {
    if !codebook.is_null() {
        drop(Box::from_raw(codebook));
    }
}

#[no_mangle]
pub unsafe extern "C" fn nfris_codebook_pilot_count(
    codebook: *const NfrisCodebook,
    out_pilots: *mut usize,
) -> NfrisStatus {
    guard(|| {
        *out(out_pilots, "out_pilots")? = deref(codebook, "codebook")?.0.pilot_count();
        Ok(())
    })
}

/// One hierarchical training run for a user at `user[3]` served from a
/// single-antenna base station at `bs[3]`. Reports the achieved and the
/// best achievable codeword gain and the pilots used.
#[no_mangle]
pub unsafe extern "C" fn nfris_train_hierarchical(
    codebook: *const NfrisCodebook,
    bs: *const f64,
    user: *const f64,
    noise_variance: f64,
    seed: u64,
    out_achieved: *mut f64,
    out_truth: *mut f64,
    out_pilots: *mut usize,
) -> NfrisStatus {
    guard(|| {
        let cb = &deref(codebook, "codebook")?.0;
        let (achieved, truth, pilots) = (
            out(out_achieved, "out_achieved")?,
            out(out_truth, "out_truth")?,
            out(out_pilots, "out_pilots")?,
        );
        let mut oracle = MeasurementOracle::from_scene(
            vec3(bs, "bs")?,
            cb.geometry(),
            vec3(user, "user")?,
            cb.lambda(),
            PathLossModel::FreeSpaceCascaded,
            noise_variance,
            seed,
        )
        .status()?;
        let r = hierarchical_training(&mut oracle, cb);
        *achieved = r.achieved_gain;
        *truth = r.truth_gain;
        *pilots = r.pilot_count;
        Ok(())
    })
}
