use std::ffi::{c_char, CString};
use std::ptr;

use roarbench_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0u8; 256];
    let n = unsafe { rb_last_error_message(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    buf.truncate(n.min(255));
    String::from_utf8(buf).unwrap()
}

#[test]
fn default_world_yields_witness() {
    let mut world = ptr::null_mut();
    assert_eq!(unsafe { rb_world_default(&mut world) }, RbStatus::Ok);
    let mut report = RbSearchReport::default();
    assert_eq!(unsafe { rb_world_search(world, 1_000_000, &mut report) }, RbStatus::Ok);
    assert!(report.found && report.dpi_holds);
    assert!(report.mi_plain - report.mi_coarse > 1e-9);
    assert!(report.bayes_coarse <= report.bayes_plain);
    unsafe { rb_world_free(world) };
}

#[test]
fn world_text_round_trip_and_parse_errors() {
    let text = CString::new(
        "pixels 2\nvalues 2\nclasses 2\ndrop 1\nexplainer a 1\np 0 0 0 0.5\np 1 1 1 0.5\nrank a * : 0 1\n",
    )
    .unwrap();
    let mut world = ptr::null_mut();
    assert_eq!(unsafe { rb_world_parse(text.as_ptr(), &mut world) }, RbStatus::Ok);
    let mut report = RbSearchReport::default();
    assert_eq!(unsafe { rb_world_search(world, 100, &mut report) }, RbStatus::Ok);
    assert!(!report.partial);
    unsafe { rb_world_free(world) };

    let bad = CString::new("pixels 2\nbogus\n").unwrap();
    let mut world = ptr::null_mut();
    assert_eq!(unsafe { rb_world_parse(bad.as_ptr(), &mut world) }, RbStatus::Parse);
    assert!(world.is_null());
    assert!(last_error().contains("line 2"), "{}", last_error());
}

#[test]
fn null_pointers_are_reported() {
    assert_eq!(unsafe { rb_world_default(ptr::null_mut()) }, RbStatus::NullPointer);
    assert!(last_error().contains("out_world"));
    let mut report = RbSearchReport::default();
    assert_eq!(unsafe { rb_world_search(ptr::null(), 1, &mut report) }, RbStatus::NullPointer);
    assert_eq!(unsafe { rb_records_len(ptr::null()) }, 0);
    unsafe {
        rb_world_free(ptr::null_mut());
        rb_records_free(ptr::null_mut());
    }
}

#[test]
fn error_message_truncates_safely() {
    assert_eq!(unsafe { rb_world_default(ptr::null_mut()) }, RbStatus::NullPointer);
    let full = unsafe { rb_last_error_message(ptr::null_mut(), 0) };
    let mut small = [0x7f as c_char; 4];
    assert_eq!(unsafe { rb_last_error_message(small.as_mut_ptr(), small.len()) }, full);
    assert_eq!(small[3], 0);
}

#[test]
fn information_measures() {
    let table = [0.4, 0.1, 0.1, 0.4];
    let mut mi = 0.0;
    assert_eq!(unsafe { rb_mutual_information(table.as_ptr(), 2, 2, &mut mi) }, RbStatus::Ok);
    assert!((mi - 0.2781).abs() < 1e-4);
    let mut acc = 0.0;
    assert_eq!(unsafe { rb_bayes_accuracy(table.as_ptr(), 2, 2, &mut acc) }, RbStatus::Ok);
    assert!((acc - 0.8).abs() < 1e-12);
    let bad = [0.5, 0.6];
    assert_eq!(unsafe { rb_mutual_information(bad.as_ptr(), 1, 2, &mut mi) }, RbStatus::InvalidInput);
    let mut violations = u64::MAX;
    assert_eq!(unsafe { rb_dpi_sweep(50, &mut violations) }, RbStatus::Ok);
    assert_eq!(violations, 0);
}

#[test]
fn linear_fit_through_c_abi() {
    let xs = [0.0, 1.0, 2.0, 3.0];
    let ys = [1.0, 3.0, 5.0, 7.0];
    let mut fit = RbFit::default();
    assert_eq!(unsafe { rb_linear_fit(xs.as_ptr(), ys.as_ptr(), 4, &mut fit) }, RbStatus::Ok);
    assert!((fit.slope - 2.0).abs() < 1e-12 && (fit.r_squared - 1.0).abs() < 1e-12 && fit.n_points == 4);
    assert_eq!(unsafe { rb_linear_fit(xs.as_ptr(), ys.as_ptr(), 2, &mut fit) }, RbStatus::InvalidInput);
}

#[test]
fn small_sweep_records_and_csv() {
    let mut cfg = std::mem::MaybeUninit::<RbSweepConfig>::uninit();
    assert_eq!(unsafe { rb_sweep_config_default(cfg.as_mut_ptr()) }, RbStatus::Ok);
    let rates = [0.3];
    let methods = CString::new("grad2").unwrap();
    let postprocs = CString::new("plain,maxpool").unwrap();
    let mode = CString::new("road").unwrap();
    let cfg = RbSweepConfig {
        methods: methods.as_ptr(),
        postprocs: postprocs.as_ptr(),
        mode: mode.as_ptr(),
        drop_rates: rates.as_ptr(),
        n_drop_rates: 1,
        trials: 1,
        n_train: 120,
        n_test: 40,
        epochs: 1,
        seed: 3,
        ..unsafe { cfg.assume_init() }
    };
    let mut records = ptr::null_mut();
    assert_eq!(unsafe { rb_sweep_run(&cfg, &mut records) }, RbStatus::Ok);
    assert_eq!(unsafe { rb_records_len(records) }, 2);
    let mut rec = RbRecord::default();
    assert_eq!(unsafe { rb_records_get(records, 1, &mut rec) }, RbStatus::Ok);
    assert_eq!(rec.drop_rate, 0.3);
    assert!((0.0..=1.0).contains(&rec.accuracy) && !rec.failed);
    assert_eq!(unsafe { rb_records_get(records, 2, &mut rec) }, RbStatus::InvalidInput);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("road.csv");
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { rb_records_write_csv(records, cpath.as_ptr()) }, RbStatus::Ok);
    assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 3);
    unsafe { rb_records_free(records) };

    let bad_mode = CString::new("sideways").unwrap();
    let cfg = RbSweepConfig { mode: bad_mode.as_ptr(), ..cfg };
    let mut records = ptr::null_mut();
    assert_eq!(unsafe { rb_sweep_run(&cfg, &mut records) }, RbStatus::InvalidInput);
}

#[test]
fn header_declares_every_export_and_compiles_as_c() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let header = std::fs::read_to_string(format!("{dir}/include/roarbench.h")).unwrap();
    let src = std::fs::read_to_string(format!("{dir}/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 14);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "header lacks {name}");
    }
    match std::process::Command::new("cc").args(["-fsyntax-only", "-std=c99", "-x", "c"]).arg(format!("{dir}/include/roarbench.h")).status() {
        Ok(status) => assert!(status.success(), "header is not valid C99"),
        Err(_) => eprintln!("no C compiler found; skipped syntax check"),
    }
}
