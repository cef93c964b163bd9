use std::ffi::{c_char, CStr, CString};
use std::ptr;

use idforge_ffi::*;

unsafe fn take(s: *mut c_char) -> String {
    assert!(!s.is_null());
    let out = CStr::from_ptr(s).to_str().unwrap().to_string();
    idf_string_free(s);
    out
}

fn last_error() -> Option<String> {
    let p = idf_last_error_message();
    if p.is_null() {
        None
    } else {
        Some(unsafe { take(p) })
    }
}

#[test]
fn check_digits() {
    unsafe {
        let mut c: c_char = 0;
        assert_eq!(idf_run_check_digit(12_345_678, &mut c), IdfStatus::Ok);
        assert_eq!(c as u8, b'5');
        assert_eq!(idf_run_check_digit(0, &mut c), IdfStatus::Range);
        assert!(last_error().unwrap().contains('0'));

        let field = CString::new("520727").unwrap();
        assert_eq!(idf_mrz_check_digit(field.as_ptr(), &mut c), IdfStatus::Ok);
        assert_eq!(c as u8, b'3');
        assert_eq!(idf_mrz_check_digit(ptr::null(), &mut c), IdfStatus::NullPointer);

        let mut s = ptr::null_mut();
        assert_eq!(idf_format_run(12_345_678, b'5' as c_char, &mut s), IdfStatus::Ok);
        assert_eq!(take(s), "12.345.678-5");
        assert_eq!(idf_format_run(12_345_678, b'4' as c_char, &mut s), IdfStatus::Invalid);
    }
}

#[test]
fn success_clears_last_error() {
    unsafe {
        let mut c: c_char = 0;
        assert_eq!(idf_run_check_digit(0, &mut c), IdfStatus::Range);
        assert!(last_error().is_some());
        assert_eq!(idf_run_check_digit(1, &mut c), IdfStatus::Ok);
        assert!(last_error().is_none());
    }
}

#[test]
fn persona_and_prompts() {
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(
            idf_persona_json(7, IdfProfile::Extranjero as u32, &mut s),
            IdfStatus::Ok
        );
        let json = take(s);
        assert!(json.contains("\"display\""));
        assert!(json.contains("INCHL"));
        assert_eq!(idf_persona_json(7, 9, &mut s), IdfStatus::Range);

        assert_eq!(idf_card_prompt(7, IdfProfile::Citizen as u32, &mut s), IdfStatus::Ok);
        assert!(take(s).starts_with("Chile ID card with surnames"));

        let (mut pos, mut neg) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(idf_face_prompt(3, &mut pos, &mut neg), IdfStatus::Ok);
        assert!(take(pos).starts_with("RAW front photo"));
        assert!(take(neg).ends_with("side view."));
        assert_eq!(idf_face_prompt(3, ptr::null_mut(), &mut neg), IdfStatus::NullPointer);
    }
}

#[test]
fn layout_handles() {
    unsafe {
        let id = CString::new("citizen").unwrap();
        let mut layout = ptr::null_mut();
        assert_eq!(idf_layout_builtin(id.as_ptr(), &mut layout), IdfStatus::Ok);
        let (mut w, mut h) = (0, 0);
        assert_eq!(idf_layout_canvas(layout, &mut w, &mut h), IdfStatus::Ok);
        assert_eq!((w, h), (600, 377));
        let n = idf_layout_component_count(layout);
        assert!(n > 0);

        let mut json = ptr::null_mut();
        assert_eq!(idf_layout_to_json(layout, &mut json), IdfStatus::Ok);
        let text = CString::new(take(json)).unwrap();
        idf_layout_free(layout);

        let mut again = ptr::null_mut();
        assert_eq!(idf_layout_parse(text.as_ptr(), &mut again), IdfStatus::Ok);
        assert_eq!(idf_layout_component_count(again), n);
        idf_layout_free(again);

        let bad = CString::new("{ not json").unwrap();
        assert_eq!(idf_layout_parse(bad.as_ptr(), &mut again), IdfStatus::Syntax);
        let text = text
            .to_str()
            .unwrap()
            .replacen("\"opacity\": 0.65", "\"opacity\": 1.5", 1);
        let invalid = CString::new(text).unwrap();
        assert_eq!(idf_layout_parse(invalid.as_ptr(), &mut again), IdfStatus::Invalid);
        assert!(last_error().unwrap().contains("opacity"));
        assert_eq!(idf_layout_component_count(ptr::null()), 0);
        idf_layout_free(ptr::null_mut());
    }
}

#[test]
fn scores_round_trip() {
    unsafe {
        let h = idf_scores_new();
        let bona = CString::new("bonafide").unwrap();
        let print = CString::new("print").unwrap();
        let (mut rate, mut t) = (0.0, 0.0);
        assert_eq!(idf_scores_eer(h, false, &mut rate, &mut t), IdfStatus::EmptyClass);
        for (c, s) in [(&bona, 0.2), (&bona, 0.6), (&print, 0.4), (&print, 0.8)] {
            assert_eq!(idf_scores_push(h, c.as_ptr(), s), IdfStatus::Ok);
        }
        assert_eq!(idf_scores_push(h, print.as_ptr(), f64::NAN), IdfStatus::Range);
        assert_eq!(idf_scores_len(h), 4);
        assert_eq!(idf_scores_eer(h, false, &mut rate, &mut t), IdfStatus::Ok);
        assert_eq!(rate, 0.5);

        let mut b = 0.0;
        assert_eq!(idf_scores_bpcer_at_apcer(h, 1.0, &mut b, &mut t), IdfStatus::Ok);
        assert_eq!(b, 0.0);
        assert_eq!(idf_scores_bpcer_at_apcer(h, 0.0, &mut b, &mut t), IdfStatus::Range);

        let mut json = ptr::null_mut();
        assert_eq!(idf_scores_report_json(h, f64::NAN, false, &mut json), IdfStatus::Ok);
        let report = take(json);
        assert!(report.contains("\"eer\": 0.5"));
        idf_scores_free(h);
    }
}

#[test]
fn fid_from_arrays() {
    unsafe {
        let a = [-1.0f32, 0.0, 1.0];
        let b = [1.0f32, 3.0, 5.0];
        let mut v = 0.0;
        assert_eq!(idf_fid(a.as_ptr(), 3, b.as_ptr(), 3, 1, &mut v), IdfStatus::Ok);
        assert!((v - 10.0).abs() < 1e-9);
        assert_eq!(idf_fid(a.as_ptr(), 1, b.as_ptr(), 3, 1, &mut v), IdfStatus::Invalid);
        assert_eq!(
            idf_fid(ptr::null(), 3, b.as_ptr(), 3, 1, &mut v),
            IdfStatus::NullPointer
        );
        let wide = [0.0f32, 1.0, 2.0, 3.0, 4.0, 6.0];
        assert_eq!(idf_fid(wide.as_ptr(), 3, b.as_ptr(), 3, 1, &mut v), IdfStatus::Ok);
        assert_eq!(idf_fid(wide.as_ptr(), 3, wide.as_ptr(), 2, 2, &mut v), IdfStatus::Ok);
    }
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(idf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
