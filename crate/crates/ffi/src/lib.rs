//! C ABI over the caliblab library.
//!
//! Objects are opaque handles created by `*_new` and released by `*_free`.
//! Every fallible call returns a [`CaliblabStatus`]; on failure the message is
//! kept per thread and read back with [`caliblab_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use caliblab::error::Error;
use caliblab::exterior::{KForm, Vector};
use caliblab::structure::{
    contraction_identity_check, contraction_identity_check_corrupted, standard_kit, Case,
    StructureKit,
};
use caliblab::submanifold::catalog::patch_by_id;
use caliblab::submanifold::{volume, Euclidean, Patch, QuadratureRule};
use caliblab::variation::{
    family_for_case, random_generator, theorem_a_experiment, theorem_b_defect, theorem_rule,
    Tolerances, UmBackground,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CaliblabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    BufferTooSmall = 4,
    Panic = 5,
}

/// Structure data of one case.
pub struct CaliblabKit {
    inner: StructureKit,
}

/// A catalog patch.
pub struct CaliblabPatch {
    inner: Arc<dyn Patch>,
}

/// A constant-coefficient differential form.
pub struct CaliblabForm {
    inner: KForm,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> CaliblabStatus {
    match e {
        Error::Config(_)
        | Error::InvalidIndex(_)
        | Error::InvalidDegree { .. }
        | Error::DimensionMismatch { .. }
        | Error::UnsupportedDimension(_)
        | Error::WrongCase { .. }
        | Error::InvalidStructure(_)
        | Error::OutsideDomain(_) => CaliblabStatus::InvalidArgument,
        _ => CaliblabStatus::Numerical,
    }
}

/// Run `f`, turning errors and panics into status codes.
fn guard<F>(f: F) -> CaliblabStatus
where
    F: FnOnce() -> Result<(), (CaliblabStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CaliblabStatus::Ok,
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside caliblab");
            CaliblabStatus::Panic
        }
    }
}

fn lib<T>(r: caliblab::error::Result<T>) -> Result<T, (CaliblabStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (CaliblabStatus, String) {
    (CaliblabStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (CaliblabStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        (
            CaliblabStatus::InvalidArgument,
            format!("{what} is not UTF-8"),
        )
    })
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, (CaliblabStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (CaliblabStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Copy the last error message of this thread into `buf` (NUL-terminated).
/// Returns the message length in bytes, excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn caliblab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn caliblab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Create the standard kit of a case: "um" (with m and k), "associative",
/// "coassociative" or "cayley". m and k are ignored for the other cases.
///
/// # Safety
/// `case_name` must be a NUL-terminated string, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn caliblab_kit_new(
    case_name: *const c_char,
    m: usize,
    k: usize,
    out: *mut *mut CaliblabKit,
) -> CaliblabStatus {
    guard(|| {
        let name = str_arg(case_name, "case_name")?;
        let out = out_arg(out, "out")?;
        let mut case: Case = lib(name.parse())?;
        if let Case::AlmostComplex { .. } = case {
            case = Case::AlmostComplex { m, k };
        }
        let kit = lib(standard_kit(case))?;
        *out = Box::into_raw(Box::new(CaliblabKit { inner: kit }));
        Ok(())
    })
}

/// # Safety
/// `kit` must be null or a handle from `caliblab_kit_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn caliblab_kit_free(kit: *mut CaliblabKit) {
    if !kit.is_null() {
        drop(Box::from_raw(kit));
    }
}

/// Ambient dimension n and calibrated dimension k of a kit.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_kit_dims(
    kit: *const CaliblabKit,
    n: *mut usize,
    k: *mut usize,
) -> CaliblabStatus {
    guard(|| {
        let kit = ref_arg(kit, "kit")?;
        *out_arg(n, "n")? = kit.inner.n();
        *out_arg(k, "k")? = kit.inner.calibrated_dim();
        Ok(())
    })
}

/// Run the exact contraction identities of a G2 or Spin(7) kit. `corrupt`
/// flips one structure constant first (negative control).
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_identity_check(
    kit: *const CaliblabKit,
    corrupt: bool,
    families: *mut usize,
    max_violation: *mut i64,
) -> CaliblabStatus {
    guard(|| {
        let kit = ref_arg(kit, "kit")?;
        let report = if corrupt {
            lib(contraction_identity_check_corrupted(&kit.inner))?
        } else {
            lib(contraction_identity_check(&kit.inner))?
        };
        *out_arg(families, "families")? = report.families.len();
        *out_arg(max_violation, "max_violation")? = report.max_violation();
        Ok(())
    })
}

/// μ(v₁, …, v_k) for k vectors of length n stored one after another.
///
/// # Safety
/// `vectors` must hold `count * n` doubles, `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_calibration_value(
    kit: *const CaliblabKit,
    vectors: *const f64,
    count: usize,
    out: *mut f64,
) -> CaliblabStatus {
    guard(|| {
        let kit = ref_arg(kit, "kit")?;
        if vectors.is_null() {
            return Err(null("vectors"));
        }
        let n = kit.inner.n();
        let data = std::slice::from_raw_parts(vectors, count * n);
        let vs: Vec<Vector> = data.chunks(n).map(Vector::from_column_slice).collect();
        *out_arg(out, "out")? = lib(kit.inner.calibration().evaluate(&vs))?;
        Ok(())
    })
}

/// The G2 cross product x × y into `out` (7 doubles each).
///
/// # Safety
/// `x`, `y` and `out` must each hold 7 doubles.
#[no_mangle]
pub unsafe extern "C" fn caliblab_cross_product(
    kit: *const CaliblabKit,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> CaliblabStatus {
    guard(|| {
        let kit = ref_arg(kit, "kit")?;
        if x.is_null() || y.is_null() || out.is_null() {
            return Err(null("vector argument"));
        }
        let xv = Vector::from_column_slice(std::slice::from_raw_parts(x, 7));
        let yv = Vector::from_column_slice(std::slice::from_raw_parts(y, 7));
        let z = lib(kit.inner.cross(&xv, &yv))?;
        std::slice::from_raw_parts_mut(out, 7).copy_from_slice(z.as_slice());
        Ok(())
    })
}

/// Parse a form such as "e123 + e145 - 2 e167" in dimension n.
///
/// # Safety
/// `text` must be NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_form_parse(
    n: usize,
    text: *const c_char,
    out: *mut *mut CaliblabForm,
) -> CaliblabStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let out = out_arg(out, "out")?;
        let f = lib(KForm::parse(n, text))?;
        *out = Box::into_raw(Box::new(CaliblabForm { inner: f }));
        Ok(())
    })
}

/// # Safety
/// `form` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn caliblab_form_free(form: *mut CaliblabForm) {
    if !form.is_null() {
        drop(Box::from_raw(form));
    }
}

/// Dimension, degree and coefficient count of a form.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_form_shape(
    form: *const CaliblabForm,
    n: *mut usize,
    degree: *mut usize,
    len: *mut usize,
) -> CaliblabStatus {
    guard(|| {
        let f = &ref_arg(form, "form")?.inner;
        *out_arg(n, "n")? = f.n();
        *out_arg(degree, "degree")? = f.degree();
        *out_arg(len, "len")? = f.coeffs().len();
        Ok(())
    })
}

/// Copy the coefficients, in lexicographic order of increasing multi-indices.
///
/// # Safety
/// `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn caliblab_form_coeffs(
    form: *const CaliblabForm,
    buf: *mut f64,
    len: usize,
) -> CaliblabStatus {
    guard(|| {
        let f = &ref_arg(form, "form")?.inner;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let c = f.coeffs();
        if len < c.len() {
            return Err((
                CaliblabStatus::BufferTooSmall,
                format!("need {} doubles, got {len}", c.len()),
            ));
        }
        std::slice::from_raw_parts_mut(buf, c.len()).copy_from_slice(c);
        Ok(())
    })
}

/// a ∧ b as a new handle.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_form_wedge(
    a: *const CaliblabForm,
    b: *const CaliblabForm,
    out: *mut *mut CaliblabForm,
) -> CaliblabStatus {
    guard(|| {
        let w = lib(ref_arg(a, "a")?.inner.wedge(&ref_arg(b, "b")?.inner))?;
        *out_arg(out, "out")? = Box::into_raw(Box::new(CaliblabForm { inner: w }));
        Ok(())
    })
}

/// Euclidean Hodge star as a new handle.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_form_hodge_star(
    a: *const CaliblabForm,
    out: *mut *mut CaliblabForm,
) -> CaliblabStatus {
    guard(|| {
        let s = ref_arg(a, "a")?.inner.hodge_star_euclidean();
        *out_arg(out, "out")? = Box::into_raw(Box::new(CaliblabForm { inner: s }));
        Ok(())
    })
}

/// Look up a catalog patch by id.
///
/// # Safety
/// `id` must be NUL-terminated, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_patch_new(
    id: *const c_char,
    out: *mut *mut CaliblabPatch,
) -> CaliblabStatus {
    guard(|| {
        let id = str_arg(id, "id")?;
        let out = out_arg(out, "out")?;
        let p = lib(patch_by_id(id))?;
        *out = Box::into_raw(Box::new(CaliblabPatch { inner: p }));
        Ok(())
    })
}

/// # Safety
/// `patch` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn caliblab_patch_free(patch: *mut CaliblabPatch) {
    if !patch.is_null() {
        drop(Box::from_raw(patch));
    }
}

/// Euclidean volume by Gauss–Legendre quadrature.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_patch_volume(
    patch: *const CaliblabPatch,
    order: usize,
    cells: usize,
    out: *mut f64,
) -> CaliblabStatus {
    guard(|| {
        let p = &ref_arg(patch, "patch")?.inner;
        let rule = lib(QuadratureRule::new(order, cells))?;
        *out_arg(out, "out")? = lib(volume(p.as_ref(), &Euclidean(p.n()), &rule))?;
        Ok(())
    })
}

/// Theorem A with one random generator drawn from `seed`: writes the first
/// variation ½∫Tr_g h vol, the largest pointwise integrand error, and whether
/// every expected claim held.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_theorem_a(
    kit: *const CaliblabKit,
    patch: *const CaliblabPatch,
    seed: u64,
    order: usize,
    first_variation: *mut f64,
    integrand_error: *mut f64,
    passed: *mut bool,
) -> CaliblabStatus {
    guard(|| {
        let kit = ref_arg(kit, "kit")?;
        let p = &ref_arg(patch, "patch")?.inner;
        let case = kit.inner.case();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = lib(random_generator(case, p.as_ref(), 2, &mut rng))?;
        let fam = lib(family_for_case(
            case,
            Arc::new(g),
            UmBackground::Flat,
            false,
        ))?;
        let rule = lib(theorem_rule(p.as_ref(), order))?;
        let v = lib(theorem_a_experiment(
            p.as_ref(),
            &fam,
            &rule,
            Tolerances::default(),
        ))?;
        *out_arg(first_variation, "first_variation")? = v.analytic_first_variation;
        *out_arg(integrand_error, "integrand_error")? = v.integrand_max_error;
        *out_arg(passed, "passed")? = v.passed();
        Ok(())
    })
}

/// The Theorem B defect integral of a patch; zero iff it is calibrated.
///
/// # Safety
/// All pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn caliblab_theorem_b_defect(
    kit: *const CaliblabKit,
    patch: *const CaliblabPatch,
    order: usize,
    out: *mut f64,
) -> CaliblabStatus {
    guard(|| {
        let kit = ref_arg(kit, "kit")?;
        let p = &ref_arg(patch, "patch")?.inner;
        let rule = lib(QuadratureRule::new(order, 1))?;
        *out_arg(out, "out")? = lib(theorem_b_defect(&kit.inner, p.as_ref(), &rule))?;
        Ok(())
    })
}
