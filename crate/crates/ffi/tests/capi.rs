use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use arboreal_ffi::*;

fn take(s: *mut std::ffi::c_char) -> String {
    assert!(!s.is_null());
    let out = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_string();
    unsafe { arb_string_free(s) };
    out
}

fn last_error() -> String {
    let p = arb_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

fn parse(text: &str) -> *mut ArbTree {
    let c = CString::new(text).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { arb_tree_parse(c.as_ptr(), &mut t) }, ArbStatus::Ok);
    t
}

#[test]
fn tree_handle_lifecycle() {
    let t = parse("(a (b (c)))");
    unsafe {
        assert_eq!(arb_tree_size(t), 3);
        assert_eq!(take(arb_tree_to_text(t)), "(a (b (c)))");
        let mut n = 0;
        assert_eq!(arb_poset_size(t, &mut n), ArbStatus::Ok);
        assert_eq!(n, 11);
        let mut betti = [0u64; 4];
        let mut len = 0;
        assert_eq!(arb_link_betti(t, betti.as_mut_ptr(), betti.len(), &mut len), ArbStatus::Ok);
        assert_eq!(&betti[..len], &[0, 3]);
        assert_eq!(arb_link_betti(t, betti.as_mut_ptr(), 1, &mut len), ArbStatus::SizeGuard);
        arb_tree_free(t);
    }
}

#[test]
fn errors_are_reported() {
    let bad = CString::new("(a (b)").unwrap();
    let mut t = ptr::null_mut();
    unsafe {
        assert_eq!(arb_tree_parse(bad.as_ptr(), &mut t), ArbStatus::Parse);
        assert!(t.is_null());
        assert!(last_error().starts_with("parse:"));
        assert_eq!(arb_tree_parse(ptr::null(), &mut t), ArbStatus::NullPointer);
        let mut n = 0;
        assert_eq!(arb_poset_size(ptr::null(), &mut n), ArbStatus::NullPointer);
        assert_eq!(arb_tree_size(ptr::null()), 0);
        arb_tree_free(ptr::null_mut());
        arb_string_free(ptr::null_mut());
    }
    let big = parse("(a (b) (c) (d) (e) (f) (g))");
    let (mut pairs, mut passed) = (0, false);
    assert_eq!(unsafe { arb_functor_check(big, &mut pairs, &mut passed) }, ArbStatus::SizeGuard);
    unsafe { arb_tree_free(big) };
}

#[test]
fn functor_check_small_tree() {
    let t = parse("(a (b))");
    let (mut pairs, mut passed) = (0, false);
    assert_eq!(unsafe { arb_functor_check(t, &mut pairs, &mut passed) }, ArbStatus::Ok);
    assert!(passed);
    assert_eq!(pairs, 7);
    unsafe { arb_tree_free(t) };
}

#[test]
fn expansion_handle() {
    let name = CString::new("example15").unwrap();
    let germ = take(unsafe { arb_corpus_germ(name.as_ptr()) });
    let germ = CString::new(germ).unwrap();
    let mut e = ptr::null_mut();
    unsafe {
        assert_eq!(arb_expand(germ.as_ptr(), 3, ArbMode::Full as u32, &mut e), ArbStatus::Ok);
        assert_eq!(take(arb_expansion_census(e)), "A2:6 END:2");
        assert!(take(arb_expansion_svg(e)).starts_with("<svg"));
        let json = take(arb_expansion_graph_json(e));
        assert!(json.contains("\"nodes\""));
        let (mut rank, mut torsion) = (0, 0);
        assert_eq!(arb_expansion_sections(e, &mut rank, &mut torsion), ArbStatus::Ok);
        assert_eq!((rank, torsion), (7, 0));
        arb_expansion_free(e);

        let mut e2 = ptr::null_mut();
        assert_eq!(arb_expand(germ.as_ptr(), 3, 7, &mut e2), ArbStatus::Validation);
        let junk = CString::new("{}").unwrap();
        assert_eq!(arb_expand(junk.as_ptr(), 3, 0, &mut e2), ArbStatus::Parse);
        let missing = CString::new("nope").unwrap();
        assert!(arb_corpus_germ(missing.as_ptr()).is_null());
    }
}

#[test]
fn header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/arboreal.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for f in ["arb_tree_parse", "arb_expand", "arb_last_error", "arb_string_free", "ARB_STATUS_SIZE_GUARD"] {
        assert!(text.contains(f), "{f} missing from the header");
    }
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c"]).arg(&header).status() else {
        return;
    };
    assert!(status.success());
}
