//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 runtime
//! failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::attributors::MethodSpec;
use crate::data::{self, SynthKind, SynthSpec};
use crate::diffcore::{evaluate, train, Architecture, Model, TrainConfig};
use crate::error::{Error, Result};
use crate::masking::top_t_mask;
use crate::mioracle::{self, Coarsening, SearchOutcome};
use crate::pipeline::{self, aggregate, prepare_maps, AggregateRow, Mode, ProtocolConfig, RunRecord};
use crate::postproc::PostprocSpec;
use crate::report;
use crate::seed;

const PRECEDENCE: &str = "Settings resolve as: command-line flags > --config file > built-in defaults.\n\
Config files hold `key = value` lines (`#` comments); keys are the long flag names\n\
with `_` or `-`, plus height, width, classes, noise_std, road_noise_std,\n\
learning_rate, batch_size, ig_steps, ensemble_n and sg_noise_frac.";

#[derive(Parser, Debug)]
#[command(name = "roarbench", version, about = "ROAR/ROAD attribution benchmark on synthetic images", after_help = PRECEDENCE)]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Plain-text key=value settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<String>,
    #[arg(long, global = true)]
    out_dir: Option<String>,
    /// Parallel worker threads for protocol cells (0 = all cores).
    #[arg(long, global = true)]
    jobs: Option<String>,
    /// Comma-separated drop fractions in (0, 1).
    #[arg(long, global = true)]
    drop_rates: Option<String>,
    /// Comma-separated methods, e.g. grad2,gi2,ig2,sg2,sgsq,vg,gc2,sobel2,rand,block.
    #[arg(long, global = true)]
    methods: Option<String>,
    /// Comma-separated post-processings: plain, gaussian, maxpool.
    #[arg(long, global = true)]
    postprocs: Option<String>,
    #[arg(long, global = true)]
    trials: Option<String>,
    /// shapes, block-signal or scatter-signal.
    #[arg(long, global = true)]
    dataset: Option<String>,
    #[arg(long, global = true)]
    epochs: Option<String>,
    #[arg(long, global = true)]
    n_train: Option<String>,
    #[arg(long, global = true)]
    n_test: Option<String>,
    /// JSON-lines file for resuming interrupted roar/road sweeps.
    #[arg(long, global = true)]
    checkpoint: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate the train/test splits as .rlab files.
    GenData,
    /// Train a model and save it as JSON.
    Train,
    /// Write attribution maps and masks of a few test images as PGM.
    Attribute {
        #[arg(long, default_value_t = 4)]
        samples: usize,
        /// Model JSON from `train`; trained afresh when omitted.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Remove-and-retrain sweep; writes roar.csv.
    Roar,
    /// Remove-and-debias sweep on the original model; writes road.csv.
    Road,
    /// Exact information checks on a discrete world.
    MiCheck {
        /// `default` or a world file.
        #[arg(long, default_value = "default")]
        world: String,
        /// Random (world, coarsening) pairs for the DPI sweep.
        #[arg(long, default_value_t = 1000)]
        sweep: usize,
        #[arg(long, default_value_t = mioracle::DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Aggregate CSV files and fit accuracy against mask TV.
    Report {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Settings {
    seed: u64,
    out_dir: PathBuf,
    protocol: ProtocolConfig,
    spec: SynthSpec,
    train: TrainConfig,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            seed: 0,
            out_dir: PathBuf::from("out"),
            protocol: ProtocolConfig::default(),
            spec: SynthSpec::desk(SynthKind::Shapes, 0),
            train: TrainConfig::default(),
        }
    }
}

fn list<T>(value: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(f).collect()
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::invalid(format!("{key}: cannot parse {value:?}")))
}

impl Settings {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let p = &mut self.protocol;
        match key.as_str() {
            "seed" => self.seed = num(&key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value.trim()),
            "jobs" => p.jobs = num(&key, value)?,
            "drop_rates" => p.drop_rates = list(value, |s| num("drop_rates", s))?,
            "methods" => p.methods = list(value, MethodSpec::parse)?,
            "postprocs" => p.postprocs = list(value, PostprocSpec::parse)?,
            "trials" => p.trials = num(&key, value)?,
            "road_noise_std" => p.road_noise_std = num(&key, value)?,
            "checkpoint" => p.checkpoint = Some(PathBuf::from(value.trim())),
            "ig_steps" => p.estimator.ig_steps = num(&key, value)?,
            "ensemble_n" => p.estimator.ensemble_n = num(&key, value)?,
            "sg_noise_frac" => p.estimator.sg_noise_frac = num(&key, value)?,
            "dataset" => {
                let kind = SynthKind::parse(value.trim())?;
                // Switching kind resets the kind-dependent noise default.
                self.spec.noise_std = SynthSpec::desk(kind, 0).noise_std;
                self.spec.kind = kind;
            }
            "n_train" => self.spec.n_train = num(&key, value)?,
            "n_test" => self.spec.n_test = num(&key, value)?,
            "height" => self.spec.height = num(&key, value)?,
            "width" => self.spec.width = num(&key, value)?,
            "classes" => self.spec.num_classes = num(&key, value)?,
            "noise_std" => self.spec.noise_std = num(&key, value)?,
            "epochs" => self.train.epochs = num(&key, value)?,
            "learning_rate" => self.train.learning_rate = num(&key, value)?,
            "batch_size" => self.train.batch_size = num(&key, value)?,
            _ => return Err(Error::invalid(format!("unknown setting '{key}'"))),
        }
        Ok(())
    }

    fn apply_config(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Syntax { line: i + 1, message: "expected key = value".into() })?;
            self.set(k, v).map_err(|e| Error::Syntax { line: i + 1, message: e.to_string() })?;
        }
        Ok(())
    }

    fn resolve(global: &GlobalArgs) -> std::result::Result<Self, Failure> {
        let mut s = Settings::default();
        if let Some(path) = &global.config {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(Error::io(path, e)))?;
            s.apply_config(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        }
        let flags = [
            ("seed", &global.seed),
            ("out_dir", &global.out_dir),
            ("jobs", &global.jobs),
            ("drop_rates", &global.drop_rates),
            ("methods", &global.methods),
            ("postprocs", &global.postprocs),
            ("trials", &global.trials),
            ("dataset", &global.dataset),
            ("epochs", &global.epochs),
            ("n_train", &global.n_train),
            ("n_test", &global.n_test),
            ("checkpoint", &global.checkpoint),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.set(key, v).map_err(|e| Failure::Usage(format!("--{}: {e}", key.replace('_', "-"))))?;
            }
        }
        s.spec.seed = seed::derive(s.seed, &["data"]);
        s.protocol.seed = s.seed;
        s.protocol.estimator.seed = seed::derive(s.seed, &["estimator"]);
        s.train.seed = seed::derive(s.seed, &["shuffle"]);
        let checked = s.spec.validate().and(s.train.validate()).and(s.protocol.validate());
        checked.map_err(|e| Failure::Usage(e.to_string()))?;
        Ok(s)
    }

    fn out_path(&self, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| Error::io(&self.out_dir, e))?;
        Ok(self.out_dir.join(name))
    }
}

/// Runs the CLI on `args` (program name first) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let outcome = Settings::resolve(&cli.global).and_then(|s| dispatch(&cli.command, &s));
    match outcome {
        Ok(text) => {
            print!("{text}");
            0
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            1
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn dispatch(command: &Command, s: &Settings) -> std::result::Result<String, Failure> {
    Ok(match command {
        Command::GenData => gen_data(s)?,
        Command::Train => {
            let (model, acc) = train_model(s)?;
            let path = s.out_path("model.json")?;
            save_model(&path, &model)?;
            format!("model {} test accuracy {acc:.6}\nwrote {}\n", model.checksum(), path.display())
        }
        Command::Attribute { samples, model } => attribute(s, *samples, model.as_deref())?,
        Command::Roar => sweep(s, Mode::Roar)?,
        Command::Road => sweep(s, Mode::Road)?,
        Command::MiCheck { world, sweep, budget } => mi_check(world, *sweep, *budget)?,
        Command::Report { inputs } => {
            let mut records = Vec::new();
            for path in inputs {
                records.extend(report::read_csv(path)?);
            }
            summary(&records)?
        }
    })
}

fn gen_data(s: &Settings) -> Result<String> {
    let generated = data::generate(&s.spec)?;
    let mut out = String::new();
    for (split, set) in [("train", &generated.train), ("test", &generated.test)] {
        let path = s.out_path(&format!("{}-{split}.rlab", s.spec.kind.name()))?;
        data::save(set, &path)?;
        let _ = writeln!(out, "wrote {} ({} samples)", path.display(), set.len());
    }
    Ok(out)
}

fn train_model(s: &Settings) -> Result<(Model, f64)> {
    let generated = data::generate(&s.spec)?;
    let init = Model::new(
        Architecture::SmallCnn,
        generated.train.image_shape(),
        generated.train.num_classes(),
        seed::derive(s.seed, &["init"]),
    )?;
    let model = train(&init, &generated.train, &s.train)?;
    let acc = evaluate(&model, &generated.test)?;
    Ok((model, acc))
}

fn save_model(path: &Path, model: &Model) -> Result<()> {
    let json = serde_json::to_string(model).map_err(|e| Error::invalid(format!("serializing model: {e}")))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

fn load_model(path: &Path) -> Result<Model> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: Model = serde_json::from_str(&text).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Model::from_params(m.arch(), m.input_shape(), m.num_classes(), m.params().to_vec())
}

fn attribute(s: &Settings, samples: usize, model_path: Option<&Path>) -> Result<String> {
    let generated = data::generate(&s.spec)?;
    let model = match model_path {
        Some(p) => load_model(p)?,
        None => train_model(s)?.0,
    };
    let n = samples.min(generated.test.len());
    let picked: Vec<usize> = (0..n).collect();
    let subset = data::Dataset::new(
        picked.iter().map(|&i| generated.test.samples()[i].clone()).collect(),
        generated.test.num_classes(),
        "attribute",
        generated.test.samples().len() as u64,
    )?;
    let p = &s.protocol;
    let maps = prepare_maps(&model, &subset, 0, &p.methods, &p.postprocs, &p.estimator)?;
    let dir = s.out_path("attributions")?;
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let [_, h, w] = subset.image_shape();
    let mut written = 0;
    for (i, sample) in subset.samples().iter().enumerate() {
        let channel0 = &sample.image.data()[..h * w];
        report::write_pgm(&dir.join(format!("{i:03}-input.pgm")), channel0, h, w)?;
        written += 1;
        for (m, per_post) in p.methods.iter().zip(&maps) {
            for (post, per_sample) in p.postprocs.iter().zip(per_post) {
                let stem = format!("{i:03}-{}-{}", m.label(), post.name());
                report::write_map_pgm(&dir.join(format!("{stem}.pgm")), &per_sample[i])?;
                for &t in &p.drop_rates {
                    let mask = top_t_mask(&per_sample[i], t)?;
                    report::write_mask_pgm(&dir.join(format!("{stem}-t{t}.pgm")), &mask)?;
                }
                written += 1 + p.drop_rates.len();
            }
        }
    }
    Ok(format!("wrote {written} PGM files to {}\n", dir.display()))
}

fn sweep(s: &Settings, mode: Mode) -> Result<String> {
    let cfg = ProtocolConfig { mode, ..s.protocol.clone() };
    let records = match mode {
        Mode::Roar => pipeline::roar_run(&cfg, &s.spec, &s.train)?,
        Mode::Road => pipeline::road_run(&cfg, &s.spec, &s.train)?,
    };
    let path = s.out_path(&format!("{}.csv", mode.name()))?;
    report::write_csv(&path, &records)?;
    Ok(format!("{}wrote {} ({} records)\n", summary(&records)?, path.display(), records.len()))
}

fn summary(records: &[RunRecord]) -> Result<String> {
    let rows = aggregate(records);
    let mut out = String::from("method,postproc,drop_rate,mean_accuracy,std_accuracy,mean_tv,count,failed\n");
    for r in &rows {
        let _ = writeln!(
            out,
            "{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            r.method, r.postproc, r.drop_rate, r.mean_accuracy, r.std_accuracy, r.mean_tv, r.count, r.failed
        );
    }
    out.push_str(&fits_text(&rows));
    Ok(out)
}

fn fits_text(rows: &[AggregateRow]) -> String {
    let mut out = String::new();
    for (t, fit) in report::tv_accuracy_fits(rows) {
        let _ = match fit {
            Ok(f) => writeln!(
                out,
                "fit t={t:.6}: accuracy = {:.6} + {:.6} * tv, R^2 = {:.6}, n = {}",
                f.intercept, f.slope, f.r_squared, f.n_points
            ),
            Err(e) => writeln!(out, "fit t={t:.6}: skipped ({e})"),
        };
    }
    out
}

fn mi_check(world: &str, sweep: usize, budget: u64) -> Result<String> {
    let w = if world == "default" {
        mioracle::default_world()
    } else {
        let path = Path::new(world);
        mioracle::parse_world(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?
    };
    let mut out = String::new();
    let id = Coarsening::identity(w.pixels);
    let (mi_plain, _) = mioracle::modified_mi(&w, &id)?;
    let _ = writeln!(out, "world: {} pixels, {} explainers, drop {}", w.pixels, w.explainers.len(), w.drop);
    let _ = writeln!(out, "I(X';Y) = {mi_plain:.9} bits");
    match mioracle::conjecture_search(&w, budget)? {
        SearchOutcome::Found(found) => {
            let perms = mioracle::permutations(w.pixels);
            let _ = writeln!(out, "witness #{}: I(X~';Y) = {:.9} bits", found.index, found.mi_coarse);
            let _ = writeln!(out, "bayes accuracy: plain {:.6}, coarsened {:.6}", found.bayes_plain, found.bayes_coarse);
            let _ = writeln!(out, "DPI: I(E;A|X) = {:.9} >= I(E;A~|X) = {:.9}: {}", found.dpi.lhs, found.dpi.rhs, found.dpi.holds);
            for (a, &b) in found.k.map.iter().enumerate().filter(|(a, b)| a != *b) {
                let _ = writeln!(out, "k: {:?} -> {:?}", perms[a], perms[b]);
            }
        }
        SearchOutcome::None { examined } => {
            let _ = writeln!(out, "no witness among all {examined} coarsenings");
        }
        SearchOutcome::Partial { examined, total } => {
            let total = total.map_or("more than 2^64".to_string(), |t| t.to_string());
            let _ = writeln!(out, "partial search: no witness among {examined} of {total} coarsenings");
        }
    }
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for i in 0..sweep as u64 {
        let rw = mioracle::random_world(i);
        let r = mioracle::dpi_check(&rw, &Coarsening::random(rw.pixels, i))?;
        worst = worst.max(r.rhs - r.lhs);
        violations += usize::from(!r.holds);
    }
    let _ = writeln!(out, "DPI sweep: {sweep} pairs, {violations} violations, max I(E;A~|X) - I(E;A|X) = {worst:.3e}");
    if violations > 0 {
        return Err(Error::Numerical(format!("{out}data-processing inequality violated")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn globals(cli: &[&str]) -> GlobalArgs {
        Cli::try_parse_from(cli.iter().copied()).unwrap().global
    }

    #[test]
    fn flags_override_config_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "# demo\nseed = 5\ntrials = 2\nmethods = grad2\n").unwrap();
        let c = cfg.to_str().unwrap();
        let s = Settings::resolve(&globals(&["x", "roar", "--config", c, "--seed", "9"])).unwrap();
        assert_eq!(s.seed, 9);
        assert_eq!(s.protocol.trials, 2);
        assert_eq!(s.protocol.methods, vec![MethodSpec::parse("grad2").unwrap()]);
        assert_eq!(s.protocol.drop_rates, ProtocolConfig::default().drop_rates);
    }

    #[test]
    fn bad_settings_are_usage_errors() {
        assert!(matches!(Settings::resolve(&globals(&["x", "roar", "--methods", "nope"])), Err(Failure::Usage(_))));
        assert!(matches!(Settings::resolve(&globals(&["x", "roar", "--drop-rates", "1.5"])), Err(Failure::Usage(_))));
        let mut s = Settings::default();
        assert!(matches!(s.apply_config("seed 3"), Err(Error::Syntax { line: 1, .. })));
        assert!(s.apply_config("\nbogus = 1").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["roarbench"]), 1);
        assert_eq!(run(["roarbench", "frobnicate"]), 1);
        assert_eq!(run(["roarbench", "roar", "--no-such-flag"]), 1);
        assert_eq!(run(["roarbench", "--help"]), 0);
        assert_eq!(run(["roarbench", "report", "/nonexistent/r.csv"]), 2);
        assert_eq!(run(["roarbench", "mi-check", "--sweep", "10"]), 0);
    }
}
