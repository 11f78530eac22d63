use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

use singulab_ffi::*;

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn last_error() -> String {
    let p = sg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn polynomial_round_trip() {
    let vars = [c("x"), c("y")];
    let ptrs: Vec<_> = vars.iter().map(|v| v.as_ptr()).collect();
    let mut poly = ptr::null_mut();
    unsafe {
        assert_eq!(sg_poly_parse(c("x^3 - y^2").as_ptr(), ptrs.as_ptr(), 2, &mut poly), SgStatus::Ok);
        assert!(sg_last_error_message().is_null());
        let mut n = 0;
        assert_eq!(sg_poly_nvars(poly, &mut n), SgStatus::Ok);
        assert_eq!(n, 2);
        let mut v = f64::NAN;
        assert_eq!(sg_poly_eval(poly, [2.0, 3.0].as_ptr(), 2, &mut v), SgStatus::Ok);
        assert_eq!(v, -1.0);
        assert_eq!(sg_poly_eval(poly, [2.0].as_ptr(), 1, &mut v), SgStatus::InvalidArgument);
        assert!(last_error().contains("dimension"));
        sg_poly_free(poly);
    }
}

#[test]
fn parse_errors_carry_the_offset() {
    let x = c("x");
    let mut poly = ptr::null_mut();
    let status = unsafe { sg_poly_parse(c("x^^2").as_ptr(), &x.as_ptr(), 1, &mut poly) };
    assert_eq!(status, SgStatus::Parse);
    assert!(poly.is_null());
    assert!(last_error().contains("offset 2"), "{}", last_error());
}

#[test]
fn null_arguments_are_rejected() {
    let mut poly = ptr::null_mut();
    unsafe {
        assert_eq!(sg_poly_parse(ptr::null(), ptr::null(), 0, &mut poly), SgStatus::NullPointer);
        assert_eq!(sg_germ_load(c("x.germ").as_ptr(), ptr::null_mut()), SgStatus::NullPointer);
        let mut pass = false;
        assert_eq!(sg_report_pass(ptr::null(), &mut pass), SgStatus::NullPointer);
        sg_poly_free(ptr::null_mut());
        sg_germ_free(ptr::null_mut());
        sg_report_free(ptr::null_mut());
        sg_string_free(ptr::null_mut());
    }
}

#[test]
fn germ_files_load_and_run() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/corpus/cusp.germ");
    let path = c(path.to_str().unwrap());
    let mut germ = ptr::null_mut();
    unsafe {
        assert_eq!(sg_germ_load(path.as_ptr(), &mut germ), SgStatus::Ok);
        let mut name = ptr::null();
        assert_eq!(sg_germ_name(germ, &mut name), SgStatus::Ok);
        assert_eq!(CStr::from_ptr(name).to_str().unwrap(), "cusp");
        let mut dim = 0;
        assert_eq!(sg_germ_dimension(germ, &mut dim), SgStatus::Ok);
        assert_eq!(dim, 2);

        let mut report = ptr::null_mut();
        assert_eq!(sg_run(germ, c("lemma-link").as_ptr(), 0, 1, &mut report), SgStatus::Ok);
        let mut pass = false;
        assert_eq!(sg_report_pass(report, &mut pass), SgStatus::Ok);
        assert!(pass);
        let (mut l, mut sl, mut r, mut sr) = (0.0, 0.0, 0.0, 0.0);
        assert_eq!(sg_report_values(report, &mut l, &mut sl, &mut r, &mut sr), SgStatus::Ok);
        assert_eq!((l, r), (2.0, 2.0));
        let mut text = ptr::null_mut();
        assert_eq!(sg_report_toml(report, &mut text), SgStatus::Ok);
        assert!(CStr::from_ptr(text).to_str().unwrap().contains("theorem = \"lemma-link\""));
        sg_string_free(text);
        sg_report_free(report);

        assert_eq!(sg_run(germ, c("all").as_ptr(), 0, 1, &mut report), SgStatus::InvalidArgument);
        sg_germ_free(germ);
    }
}

#[test]
fn bad_documents_map_to_status_codes() {
    let mut germ = ptr::null_mut();
    unsafe {
        assert_eq!(sg_germ_load(c("/no/such/file.germ").as_ptr(), &mut germ), SgStatus::Io);
        assert_eq!(sg_germ_from_toml(c("name = 3").as_ptr(), &mut germ), SgStatus::Schema);
        let doc = "name = \"t\"\ndimension = 1\nvariables = [\"x\"]\nf = \"x+\"\n[[strata]]\ndimension = 1\n";
        assert_eq!(sg_germ_from_toml(c(doc).as_ptr(), &mut germ), SgStatus::Parse);
        assert!(last_error().contains("`f`"), "{}", last_error());
        let good = doc.replace("x+", "x");
        assert_eq!(sg_germ_from_toml(c(&good).as_ptr(), &mut germ), SgStatus::Ok);
        sg_germ_free(germ);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/singulab.h")).unwrap();
    for name in [
        "sg_last_error_message",
        "sg_poly_parse",
        "sg_poly_nvars",
        "sg_poly_eval",
        "sg_poly_free",
        "sg_germ_load",
        "sg_germ_from_toml",
        "sg_germ_name",
        "sg_germ_dimension",
        "sg_germ_free",
        "sg_run",
        "sg_report_pass",
        "sg_report_values",
        "sg_report_toml",
        "sg_report_free",
        "sg_string_free",
        "SG_STATUS_PANIC",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}
