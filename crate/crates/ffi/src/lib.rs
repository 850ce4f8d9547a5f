//! C ABI over roarbench: the exact information oracle, protocol sweeps and
//! the TV–accuracy regression.
//!
//! Every fallible call returns an [`RbStatus`]; on failure the message is
//! kept per thread and read with [`rb_last_error_message`]. Handles are
//! opaque and released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use roarbench::attributors::MethodSpec;
use roarbench::data::{SynthKind, SynthSpec};
use roarbench::diffcore::TrainConfig;
use roarbench::mioracle::{self, Coarsening, DiscreteWorld, SearchOutcome};
use roarbench::pipeline::{self, Mode, ProtocolConfig, RunRecord};
use roarbench::postproc::PostprocSpec;
use roarbench::{report, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Parse = 3,
    Io = 4,
    Numerical = 5,
    Unsupported = 6,
    Internal = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("NUL bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(err: &Error) -> RbStatus {
    match err {
        Error::InvalidInput(_) | Error::ShapeMismatch { .. } | Error::ContractViolation(_) => RbStatus::InvalidInput,
        Error::Parse { .. } | Error::Syntax { .. } => RbStatus::Parse,
        Error::Io { .. } => RbStatus::Io,
        Error::Numerical(_) | Error::TrainingDiverged { .. } => RbStatus::Numerical,
        Error::UnsupportedMethod(_) => RbStatus::Unsupported,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RbStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            RbStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            RbStatus::Internal
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn text<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Core(Error::InvalidInput(format!("{what} is not UTF-8"))))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `cap > 0`) and returns its full length in
/// bytes, or 0 when no error has been recorded.
///
/// # Safety
/// `buf` must be null or valid for `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn rb_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Opaque discrete world for the information oracle.
pub struct RbWorld(DiscreteWorld);

/// Opaque list of protocol records.
pub struct RbRecords(Vec<RunRecord>);

/// Stores the shipped three-pixel world in `*out`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_world_default(out_world: *mut *mut RbWorld) -> RbStatus {
    guard(|| {
        *out(out_world, "out_world")? = Box::into_raw(Box::new(RbWorld(mioracle::default_world())));
        Ok(())
    })
}

/// Parses a world from its plain-text format.
///
/// # Safety
/// `world_text` must be a NUL-terminated string; `out_world` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_world_parse(world_text: *const c_char, out_world: *mut *mut RbWorld) -> RbStatus {
    guard(|| {
        let w = mioracle::parse_world(text(world_text, "world_text")?)?;
        *out(out_world, "out_world")? = Box::into_raw(Box::new(RbWorld(w)));
        Ok(())
    })
}

/// # Safety
/// `world` must be null or come from an `rb_world_*` constructor, freed once.
#[no_mangle]
pub unsafe extern "C" fn rb_world_free(world: *mut RbWorld) {
    if !world.is_null() {
        drop(Box::from_raw(world));
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RbSearchReport {
    /// True when a witness coarsening was found.
    pub found: bool,
    /// True when the budget stopped the search early.
    pub partial: bool,
    /// Witness position in the enumeration, or candidates examined.
    pub index: u64,
    pub mi_plain: f64,
    pub mi_coarse: f64,
    pub bayes_plain: f64,
    pub bayes_coarse: f64,
    pub dpi_lhs: f64,
    pub dpi_rhs: f64,
    pub dpi_holds: bool,
}

/// Searches for a coarsening that lowers I(X′; Y) without breaking the
/// data-processing inequality.
///
/// # Safety
/// `world` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_world_search(world: *const RbWorld, budget: u64, out_report: *mut RbSearchReport) -> RbStatus {
    guard(|| {
        let w = &deref(world, "world")?.0;
        let dst = out(out_report, "out_report")?;
        *dst = match mioracle::conjecture_search(w, budget)? {
            SearchOutcome::Found(f) => RbSearchReport {
                found: true,
                partial: false,
                index: f.index,
                mi_plain: f.mi_plain,
                mi_coarse: f.mi_coarse,
                bayes_plain: f.bayes_plain,
                bayes_coarse: f.bayes_coarse,
                dpi_lhs: f.dpi.lhs,
                dpi_rhs: f.dpi.rhs,
                dpi_holds: f.dpi.holds,
            },
            other => {
                let (examined, partial) = match other {
                    SearchOutcome::None { examined } => (examined, false),
                    SearchOutcome::Partial { examined, .. } => (examined, true),
                    SearchOutcome::Found(_) => unreachable!(),
                };
                let (mi_plain, _) = mioracle::modified_mi(w, &Coarsening::identity(w.pixels))?;
                RbSearchReport { partial, index: examined, mi_plain, mi_coarse: mi_plain, ..RbSearchReport::default() }
            }
        };
        Ok(())
    })
}

/// Counts data-processing-inequality violations over `pairs` random
/// (world, coarsening) pairs.
///
/// # Safety
/// `out_violations` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_dpi_sweep(pairs: u64, out_violations: *mut u64) -> RbStatus {
    guard(|| {
        let dst = out(out_violations, "out_violations")?;
        let mut n = 0;
        for i in 0..pairs {
            let w = mioracle::random_world(i);
            n += u64::from(!mioracle::dpi_check(&w, &Coarsening::random(w.pixels, i))?.holds);
        }
        *dst = n;
        Ok(())
    })
}

/// I(U; V) in bits of a row-major `rows × cols` joint table.
///
/// # Safety
/// `table` must hold `rows * cols` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_mutual_information(table: *const f64, rows: usize, cols: usize, out_bits: *mut f64) -> RbStatus {
    guard(|| {
        let t = table_rows(table, rows, cols)?;
        *out(out_bits, "out_bits")? = mioracle::mutual_information(&t)?;
        Ok(())
    })
}

/// Σ_u max_v p(u, v) of a row-major joint table.
///
/// # Safety
/// `table` must hold `rows * cols` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_bayes_accuracy(table: *const f64, rows: usize, cols: usize, out_accuracy: *mut f64) -> RbStatus {
    guard(|| {
        let t = table_rows(table, rows, cols)?;
        *out(out_accuracy, "out_accuracy")? = mioracle::bayes_accuracy(&t)?;
        Ok(())
    })
}

unsafe fn table_rows(table: *const f64, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>, Fail> {
    let n = rows.checked_mul(cols).ok_or_else(|| Fail::Core(Error::InvalidInput("table size overflows".into())))?;
    Ok(slice(table, n, "table")?.chunks(cols.max(1)).map(<[f64]>::to_vec).collect())
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RbFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n_points: usize,
}

/// Ordinary least squares of `ys` on `xs`.
///
/// # Safety
/// `xs` and `ys` must each hold `n` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_linear_fit(xs: *const f64, ys: *const f64, n: usize, out_fit: *mut RbFit) -> RbStatus {
    guard(|| {
        let pts: Vec<(f64, f64)> =
            slice(xs, n, "xs")?.iter().copied().zip(slice(ys, n, "ys")?.iter().copied()).collect();
        let f = report::linear_fit(&pts)?;
        *out(out_fit, "out_fit")? =
            RbFit { slope: f.slope, intercept: f.intercept, r_squared: f.r_squared, n_points: f.n_points };
        Ok(())
    })
}

/// Settings of a ROAR/ROAD sweep on generated data. Strings are
/// NUL-terminated; `methods` and `postprocs` are comma-separated.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct RbSweepConfig {
    /// `shapes`, `block-signal` or `scatter-signal`.
    pub dataset: *const c_char,
    /// `roar` or `road`.
    pub mode: *const c_char,
    pub methods: *const c_char,
    pub postprocs: *const c_char,
    pub drop_rates: *const f64,
    pub n_drop_rates: usize,
    pub trials: usize,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs: usize,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
}

const DEFAULT_RATES: [f64; 3] = [0.1, 0.3, 0.5];

/// Fills `out` with the desk-scale defaults (static strings).
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_sweep_config_default(out_config: *mut RbSweepConfig) -> RbStatus {
    guard(|| {
        *out(out_config, "out_config")? = RbSweepConfig {
            dataset: c"shapes".as_ptr(),
            mode: c"roar".as_ptr(),
            methods: c"grad2,gi2,ig2,sg2,sgsq,vg".as_ptr(),
            postprocs: c"plain,gaussian,maxpool".as_ptr(),
            drop_rates: DEFAULT_RATES.as_ptr(),
            n_drop_rates: DEFAULT_RATES.len(),
            trials: 5,
            seed: 0,
            n_train: 2000,
            n_test: 500,
            epochs: TrainConfig::default().epochs,
            jobs: 0,
        };
        Ok(())
    })
}

fn list<T>(s: &str, f: impl Fn(&str) -> roarbench::Result<T>) -> roarbench::Result<Vec<T>> {
    s.split(',').map(str::trim).filter(|p| !p.is_empty()).map(f).collect()
}

/// Generates data, runs the sweep and stores the records in `*out`.
///
/// # Safety
/// `config` must point to a filled [`RbSweepConfig`]; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_sweep_run(config: *const RbSweepConfig, out_records: *mut *mut RbRecords) -> RbStatus {
    guard(|| {
        let c = deref(config, "config")?;
        let kind = SynthKind::parse(text(c.dataset, "dataset")?)?;
        let mode = Mode::parse(text(c.mode, "mode")?)?;
        let cfg = ProtocolConfig {
            mode,
            methods: list(text(c.methods, "methods")?, MethodSpec::parse)?,
            postprocs: list(text(c.postprocs, "postprocs")?, PostprocSpec::parse)?,
            drop_rates: slice(c.drop_rates, c.n_drop_rates, "drop_rates")?.to_vec(),
            trials: c.trials,
            seed: c.seed,
            jobs: c.jobs,
            ..ProtocolConfig::default()
        };
        let spec = SynthSpec { n_train: c.n_train, n_test: c.n_test, ..SynthSpec::desk(kind, roarbench::seed::derive(c.seed, &["data"])) };
        let train = TrainConfig { epochs: c.epochs, seed: roarbench::seed::derive(c.seed, &["shuffle"]), ..TrainConfig::default() };
        let records = match mode {
            Mode::Roar => pipeline::roar_run(&cfg, &spec, &train)?,
            Mode::Road => pipeline::road_run(&cfg, &spec, &train)?,
        };
        *out(out_records, "out_records")? = Box::into_raw(Box::new(RbRecords(records)));
        Ok(())
    })
}

/// Number of records, 0 for a null handle.
///
/// # Safety
/// `records` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rb_records_len(records: *const RbRecords) -> usize {
    records.as_ref().map_or(0, |r| r.0.len())
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RbRecord {
    pub drop_rate: f64,
    pub trial: usize,
    /// NaN when the cell failed.
    pub accuracy: f64,
    pub mask_tv: f64,
    pub seed: u64,
    pub failed: bool,
}

/// Numeric fields of record `index`; names are in the CSV output.
///
/// # Safety
/// `records` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn rb_records_get(records: *const RbRecords, index: usize, out_record: *mut RbRecord) -> RbStatus {
    guard(|| {
        let all = &deref(records, "records")?.0;
        let r = all
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("record {index} out of range (len {})", all.len())))?;
        *out(out_record, "out_record")? = RbRecord {
            drop_rate: r.drop_rate,
            trial: r.trial,
            accuracy: r.accuracy,
            mask_tv: r.mask_tv,
            seed: r.seed,
            failed: r.failed.is_some(),
        };
        Ok(())
    })
}

/// Writes the records as CSV to `path`.
///
/// # Safety
/// `records` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rb_records_write_csv(records: *const RbRecords, path: *const c_char) -> RbStatus {
    guard(|| {
        let all = &deref(records, "records")?.0;
        report::write_csv(Path::new(text(path, "path")?), all)?;
        Ok(())
    })
}

/// # Safety
/// `records` must be null or come from [`rb_sweep_run`], freed once.
#[no_mangle]
pub unsafe extern "C" fn rb_records_free(records: *mut RbRecords) {
    if !records.is_null() {
        drop(Box::from_raw(records));
    }
}
