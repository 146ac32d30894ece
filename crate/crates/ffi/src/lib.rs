//! C ABI over the arboreal library.
//!
//! Every fallible call returns an [`ArbStatus`]; on failure the message is kept in a
//! thread-local slot readable through [`arb_last_error`]. Strings returned as
//! `char *` are owned by the caller and released with [`arb_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use arboreal::config::Config;
use arboreal::correspondence::CorrespondencePoset;
use arboreal::expand::{corpus, draw_valid_constants, svg, total_expansion, ArborealGraph, CurveGerm2D, Mode};
use arboreal::linalg::Coefficients;
use arboreal::quiver::functor_check;
use arboreal::sections::{build_stalk_diagram, global_k0};
use arboreal::topology::build_link_complex;
use arboreal::tree::RootedTree;
use arboreal::Error;

/// Largest tree accepted by [`arb_functor_check`].
const FUNCTOR_GUARD: usize = 6;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Composition = 5,
    Domain = 6,
    Numerical = 7,
    InvalidGerm = 8,
    Constants = 9,
    NotArboreal = 10,
    SizeGuard = 11,
    Internal = 12,
    Io = 13,
    Json = 14,
    Panic = 15,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArbMode {
    Full = 0,
    Intro = 1,
}

/// Opaque rooted tree.
pub struct ArbTree {
    tree: RootedTree,
}

/// Opaque expansion: the input germ and its arboreal graph.
pub struct ArbExpansion {
    germ: CurveGerm2D,
    graph: ArborealGraph,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nuls removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> ArbStatus {
    match e {
        Error::Parse(_) => ArbStatus::Parse,
        Error::Validation(_) => ArbStatus::Validation,
        Error::Composition(_) => ArbStatus::Composition,
        Error::Domain(_) => ArbStatus::Domain,
        Error::Numerical { .. } => ArbStatus::Numerical,
        Error::InvalidGerm(_) => ArbStatus::InvalidGerm,
        Error::Constants(_) => ArbStatus::Constants,
        Error::NotArboreal { .. } => ArbStatus::NotArboreal,
        Error::TooLarge(_) => ArbStatus::SizeGuard,
        Error::Internal(_) => ArbStatus::Internal,
        Error::Io(_) => ArbStatus::Io,
        Error::Json(_) => ArbStatus::Json,
    }
}

enum Fail {
    Status(ArbStatus, String),
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

/// Run `f`, recording any failure (including a panic) as the last error.
fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> ArbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ArbStatus::Ok
        }
        Ok(Err(Fail::Status(s, msg))) => {
            set_error(&msg);
            s
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(&format!("{}: {e}", e.code()));
            status_of(&e)
        }
        Err(_) => {
            set_error("panic inside the arboreal library");
            ArbStatus::Panic
        }
    }
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Status(ArbStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Status(ArbStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail::Status(ArbStatus::NullPointer, format!("{what} is null")))
}

fn check_out<T>(p: *mut T, what: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail::Status(ArbStatus::NullPointer, format!("{what} is null")))
    } else {
        Ok(())
    }
}

fn into_c(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nuls removed").into_raw()
}

/// Message of the last failed call on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn arb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn arb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse `(root (child ...) ...)` text into a new tree handle.
///
/// # Safety
/// `text` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arb_tree_parse(text: *const c_char, out: *mut *mut ArbTree) -> ArbStatus {
    guard(|| {
        check_out(out, "out")?;
        let tree = RootedTree::parse(read_str(text, "text")?)?;
        *out = Box::into_raw(Box::new(ArbTree { tree }));
        Ok(())
    })
}

/// # Safety
/// `tree` must come from [`arb_tree_parse`] and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn arb_tree_free(tree: *mut ArbTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// Number of vertices, or 0 for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn arb_tree_size(tree: *const ArbTree) -> usize {
    tree.as_ref().map_or(0, |t| t.tree.len())
}

/// Canonical text of the tree, or null for a null handle.
///
/// # Safety
/// `tree` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn arb_tree_to_text(tree: *const ArbTree) -> *mut c_char {
    tree.as_ref().map_or(ptr::null_mut(), |t| into_c(t.tree.to_string()))
}

/// Size of the correspondence poset.
///
/// # Safety
/// `tree` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arb_poset_size(tree: *const ArbTree, out: *mut usize) -> ArbStatus {
    guard(|| {
        check_out(out, "out")?;
        let t = deref(tree, "tree")?;
        *out = CorrespondencePoset::build(&t.tree)?.len();
        Ok(())
    })
}

/// Reduced rational Betti numbers of the link: `out_betti[k]` for `k < capacity`,
/// with the number of degrees written to `out_len`. An empty link has no degrees.
///
/// # Safety
/// `tree` must be a live handle, `out_betti` valid for `capacity` writes, `out_len` valid.
#[no_mangle]
pub unsafe extern "C" fn arb_link_betti(
    tree: *const ArbTree,
    out_betti: *mut u64,
    capacity: usize,
    out_len: *mut usize,
) -> ArbStatus {
    guard(|| {
        check_out(out_len, "out_len")?;
        let t = deref(tree, "tree")?;
        let betti = build_link_complex(&t.tree)?.homology(Coefficients::Rational)?;
        let values: Vec<u64> = betti.reduced_betti.values().copied().collect();
        *out_len = values.len();
        if values.len() > capacity {
            return Err(Fail::Status(ArbStatus::SizeGuard, format!("need room for {} degrees", values.len())));
        }
        if !values.is_empty() {
            check_out(out_betti, "out_betti")?;
            ptr::copy_nonoverlapping(values.as_ptr(), out_betti, values.len());
        }
        Ok(())
    })
}

/// Multiplicativity check over all composable pairs; trees above six vertices are refused.
///
/// # Safety
/// `tree` must be a live handle; `out_pairs` and `out_passed` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arb_functor_check(tree: *const ArbTree, out_pairs: *mut usize, out_passed: *mut bool) -> ArbStatus {
    guard(|| {
        check_out(out_pairs, "out_pairs")?;
        check_out(out_passed, "out_passed")?;
        let t = deref(tree, "tree")?;
        if t.tree.len() > FUNCTOR_GUARD {
            return Err(Error::TooLarge(format!("at most {FUNCTOR_GUARD} vertices, got {}", t.tree.len())).into());
        }
        let report = functor_check(&t.tree, t.tree.len() <= 4)?;
        *out_pairs = report.composable_pairs;
        *out_passed = report.passed();
        Ok(())
    })
}

/// JSON of a bundled germ (`line`, `example15`, `crossing`, `star1` .. `star8`), or null.
///
/// # Safety
/// `name` must be null or a valid C string.
#[no_mangle]
pub unsafe extern "C" fn arb_corpus_germ(name: *const c_char) -> *mut c_char {
    if name.is_null() {
        return ptr::null_mut();
    }
    match CStr::from_ptr(name).to_str().ok().and_then(corpus::by_name) {
        Some(g) => into_c(g.to_json()),
        None => ptr::null_mut(),
    }
}

/// Expand a germ given as JSON, drawing constants from `seed` with the default ranges.
///
/// # Safety
/// `germ_json` must be a valid C string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn arb_expand(germ_json: *const c_char, seed: u64, mode: u32, out: *mut *mut ArbExpansion) -> ArbStatus {
    guard(|| {
        check_out(out, "out")?;
        let mode = match mode {
            m if m == ArbMode::Full as u32 => Mode::Full,
            m if m == ArbMode::Intro as u32 => Mode::Intro,
            m => return Err(Fail::Status(ArbStatus::Validation, format!("unknown mode {m}"))),
        };
        let germ = CurveGerm2D::from_json(read_str(germ_json, "germ_json")?)?;
        let config = Config { seed, ..Config::default() };
        let c = draw_valid_constants(&germ, &config.constants, mode, &config.geometry(), &mut config.rng())?;
        let graph = total_expansion(&germ, &c, mode, &config.geometry(), &config.classify())?;
        *out = Box::into_raw(Box::new(ArbExpansion { germ, graph }));
        Ok(())
    })
}

/// # Safety
/// `exp` must come from [`arb_expand`] and not have been freed; null is ignored.
#[no_mangle]
pub unsafe extern "C" fn arb_expansion_free(exp: *mut ArbExpansion) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Node census such as `"A2:2 END:2"`, or null for a null handle.
///
/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn arb_expansion_census(exp: *const ArbExpansion) -> *mut c_char {
    exp.as_ref().map_or(ptr::null_mut(), |e| into_c(e.graph.census().to_string()))
}

/// Graph JSON, or null for a null handle.
///
/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn arb_expansion_graph_json(exp: *const ArbExpansion) -> *mut c_char {
    exp.as_ref().map_or(ptr::null_mut(), |e| into_c(e.graph.to_json()))
}

/// SVG picture of the germ and its expansion, or null for a null handle.
///
/// # Safety
/// `exp` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn arb_expansion_svg(exp: *const ArbExpansion) -> *mut c_char {
    exp.as_ref().map_or(ptr::null_mut(), |e| into_c(svg::render(Some(&e.germ), &e.graph)))
}

/// Rank of the global K_0 sections and the number of invariant factors above one.
///
/// # Safety
/// `exp` must be a live handle; `out_rank` and `out_torsion` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn arb_expansion_sections(exp: *const ArbExpansion, out_rank: *mut usize, out_torsion: *mut usize) -> ArbStatus {
    guard(|| {
        check_out(out_rank, "out_rank")?;
        check_out(out_torsion, "out_torsion")?;
        let e = deref(exp, "expansion")?;
        let g = global_k0(&build_stalk_diagram(&e.graph)?);
        *out_rank = g.rank;
        *out_torsion = g.invariant_factors.len();
        Ok(())
    })
}
