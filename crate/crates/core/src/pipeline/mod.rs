//! Remove-and-retrain (ROAR) and its no-retrain imputation variant (ROAD).
//!
//! Per trial one model is trained; every (method, postproc, drop rate) cell of
//! that trial reuses its attributions. Cells are independent afterwards and run
//! on a rayon pool of `jobs` threads.

mod aggregate;
mod checkpoint;
mod impute;

use std::collections::{HashMap, HashSet};
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use aggregate::{aggregate, AggregateRow};
pub use impute::{laplace_impute, noisy_impute, JACOBI_TOL};

use crate::attributors::{explain_methods, predicted_classes, AttributionMap, EstimatorConfig, MethodSpec};
use crate::data::{generate, Dataset, SynthSpec};
use crate::diffcore::{count_correct, evaluate, train, Architecture, Model, Tensor, TrainConfig};
use crate::error::{Error, Result};
use crate::masking::{apply_mask, top_t_mask, Mask};
use crate::postproc::{self, PostprocSpec};
use crate::seed;
use checkpoint::Checkpoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Roar,
    Road,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Roar => "roar",
            Mode::Road => "road",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "roar" => Ok(Mode::Roar),
            "road" => Ok(Mode::Road),
            _ => Err(Error::invalid(format!("unknown mode '{s}' (expected roar or road)"))),
        }
    }
}

/// One finished cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    pub method: String,
    pub postproc: String,
    pub drop_rate: f64,
    pub trial: usize,
    /// Retrained-model accuracy (ROAR) or original-model accuracy on imputed
    /// inputs (ROAD); NaN when the cell failed.
    #[serde(with = "checkpoint::nan_as_null")]
    pub accuracy: f64,
    /// Mean total variation of the masks used in this cell.
    pub mask_tv: f64,
    pub mode: Mode,
    /// Seed of the trial's original model.
    pub seed: u64,
    pub wall_time: f64,
    pub failed: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub drop_rates: Vec<f64>,
    pub trials: usize,
    pub methods: Vec<MethodSpec>,
    pub postprocs: Vec<PostprocSpec>,
    pub mode: Mode,
    pub road_noise_std: f64,
    pub seed: u64,
    pub architecture: Architecture,
    /// Estimator settings; its `seed` is replaced per trial.
    pub estimator: EstimatorConfig,
    /// Worker threads; 0 uses rayon's default.
    pub jobs: usize,
    pub checkpoint: Option<PathBuf>,
}

pub const DEFAULT_METHODS: [&str; 6] = ["grad2", "gi2", "ig2", "sg2", "sgsq", "vg"];

impl Default for ProtocolConfig {
    fn default() -> Self {
        ProtocolConfig {
            drop_rates: vec![0.1, 0.3, 0.5],
            trials: 5,
            methods: DEFAULT_METHODS.iter().map(|m| MethodSpec::parse(m).expect("default method")).collect(),
            postprocs: ["plain", "gaussian", "maxpool"]
                .iter()
                .map(|p| PostprocSpec::parse(p).expect("default postproc"))
                .collect(),
            mode: Mode::Roar,
            road_noise_std: 0.01,
            seed: 0,
            architecture: Architecture::SmallCnn,
            estimator: EstimatorConfig::default(),
            jobs: 0,
            checkpoint: None,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.drop_rates.is_empty() {
            return Err(Error::invalid("at least one drop rate is required"));
        }
        if let Some(t) = self.drop_rates.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
            return Err(Error::invalid(format!("drop rate must lie in (0, 1), got {t}")));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.methods.is_empty() || self.postprocs.is_empty() {
            return Err(Error::invalid("at least one method and one post-processing are required"));
        }
        let labels: HashSet<String> = self.methods.iter().map(|m| m.label()).collect();
        if labels.len() != self.methods.len() {
            return Err(Error::invalid("methods contain duplicates"));
        }
        let names: HashSet<&str> = self.postprocs.iter().map(|p| p.name()).collect();
        if names.len() != self.postprocs.len() {
            return Err(Error::invalid("postprocs contain duplicates"));
        }
        for p in &self.postprocs {
            p.validate()?;
        }
        if !(self.road_noise_std >= 0.0 && self.road_noise_std.is_finite()) {
            return Err(Error::invalid(format!("road_noise_std must be >= 0, got {}", self.road_noise_std)));
        }
        self.estimator.validate()
    }
}

/// Square (already applied upstream) → channel sum → filter → upsample to (H, W).
pub fn postprocess(map: &AttributionMap, post: &PostprocSpec, height: usize, width: usize) -> Result<AttributionMap> {
    let reduced = postproc::reduce_channels(map)?;
    let filtered = postproc::apply(post, &reduced)?;
    if filtered.values.shape() == [height, width] {
        Ok(filtered)
    } else {
        postproc::upsample_nearest(&filtered, height, width)
    }
}

/// Post-processed 2-D maps of `dataset` for every (method, postproc) pair,
/// indexed `[method][postproc][sample]`. Samples are attributed at the model's
/// predicted class; sample ids start at `id_offset`.
pub fn prepare_maps(
    model: &Model,
    dataset: &Dataset,
    id_offset: usize,
    methods: &[MethodSpec],
    postprocs: &[PostprocSpec],
    estimator: &EstimatorConfig,
) -> Result<Vec<Vec<Vec<AttributionMap>>>> {
    let raw = attribute_dataset(model, dataset, id_offset, methods, estimator)?;
    let [_, h, w] = dataset.image_shape();
    raw.iter()
        .map(|maps| {
            postprocs
                .iter()
                .map(|p| maps.iter().map(|m| postprocess(m, p, h, w)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

fn attribute_dataset(
    model: &Model,
    dataset: &Dataset,
    id_offset: usize,
    methods: &[MethodSpec],
    estimator: &EstimatorConfig,
) -> Result<Vec<Vec<AttributionMap>>> {
    let classes = predicted_classes(model, dataset)?;
    let xs: Vec<&Tensor> = dataset.samples().iter().map(|s| &s.image).collect();
    let ids: Vec<usize> = (id_offset..id_offset + dataset.len()).collect();
    explain_methods(model, &xs, &classes, &ids, methods, estimator)
}

pub fn masks_at(maps: &[AttributionMap], t: f64) -> Result<Vec<Mask>> {
    maps.iter().map(|m| top_t_mask(m, t)).collect()
}

fn mean_tv(masks: &[Mask]) -> f64 {
    masks.iter().map(Mask::tv).sum::<f64>() / masks.len() as f64
}

fn cell_seed(base: u64, method: &str, post: &str, t: f64, trial: usize) -> u64 {
    seed::derive(base, &["cell", method, post, &format!("{t}"), &trial.to_string()])
}

pub fn trial_seed(base: u64, trial: usize) -> u64 {
    seed::derive(base, &["trial", &trial.to_string()])
}

fn dataset_digest(d: &Dataset) -> String {
    let mut h = Sha256::new();
    for s in d.samples() {
        for v in s.image.data() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update((s.label as u64).to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

fn fingerprint(cfg: &ProtocolConfig, train_set: &Dataset, test_set: &Dataset, train_cfg: &TrainConfig) -> String {
    let view = serde_json::json!({
        "drop_rates": cfg.drop_rates,
        "trials": cfg.trials,
        "methods": cfg.methods,
        "postprocs": cfg.postprocs,
        "mode": cfg.mode,
        "road_noise_std": cfg.road_noise_std,
        "seed": cfg.seed,
        "architecture": cfg.architecture,
        "estimator": cfg.estimator,
        "train": train_cfg,
        "train_data": dataset_digest(train_set),
        "test_data": dataset_digest(test_set),
    });
    let digest = Sha256::digest(view.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

type CellKey = (usize, usize, usize, usize);

fn key_of(r: &RunRecord, cfg: &ProtocolConfig) -> Option<CellKey> {
    let m = cfg.methods.iter().position(|s| s.label() == r.method)?;
    let p = cfg.postprocs.iter().position(|s| s.name() == r.postproc)?;
    let t = cfg.drop_rates.iter().position(|&t| t == r.drop_rate)?;
    Some((r.trial, m, p, t))
}

/// Runs every pending cell of the protocol on the given splits. Records come
/// back sorted by (trial, method, postproc, drop rate) in configuration order.
pub fn run_protocol(
    cfg: &ProtocolConfig,
    train_set: &Dataset,
    test_set: &Dataset,
    train_cfg: &TrainConfig,
) -> Result<Vec<RunRecord>> {
    cfg.validate()?;
    train_cfg.validate()?;
    if train_set.image_shape() != test_set.image_shape() || train_set.num_classes() != test_set.num_classes() {
        return Err(Error::invalid("train and test splits differ in image shape or class count"));
    }
    let (checkpoint, previous) = match &cfg.checkpoint {
        Some(path) => {
            let (cp, recs) = Checkpoint::open(path, &fingerprint(cfg, train_set, test_set, train_cfg))?;
            (Some(cp), recs)
        }
        None => (None, Vec::new()),
    };
    let mut done: HashMap<CellKey, RunRecord> = HashMap::new();
    for r in previous {
        if let Some(k) = key_of(&r, cfg) {
            done.insert(k, r);
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    let mut records: Vec<(CellKey, RunRecord)> = done.iter().map(|(k, r)| (*k, r.clone())).collect();

    for trial in 0..cfg.trials {
        let mut pending: Vec<(usize, usize, Vec<usize>)> = Vec::new();
        for m in 0..cfg.methods.len() {
            for p in 0..cfg.postprocs.len() {
                let ts: Vec<usize> =
                    (0..cfg.drop_rates.len()).filter(|&t| !done.contains_key(&(trial, m, p, t))).collect();
                if !ts.is_empty() {
                    pending.push((m, p, ts));
                }
            }
        }
        if pending.is_empty() {
            continue;
        }
        let ctx = TrialContext::build(cfg, train_set, test_set, train_cfg, trial, &pending, &pool)?;
        let results: Vec<Result<Vec<(CellKey, RunRecord)>>> = pool.install(|| {
            pending
                .par_iter()
                .map(|(m, p, ts)| {
                    let out = ctx.run_group(*m, *p, ts)?;
                    if let Some(cp) = &checkpoint {
                        for (_, r) in &out {
                            cp.append(r)?;
                        }
                    }
                    Ok(out)
                })
                .collect()
        });
        for r in results {
            records.extend(r?);
        }
    }
    records.sort_by_key(|(k, _)| *k);
    Ok(records.into_iter().map(|(_, r)| r).collect())
}

/// Shared, read-only state of one trial.
struct TrialContext<'a> {
    cfg: &'a ProtocolConfig,
    train_set: &'a Dataset,
    test_set: &'a Dataset,
    train_cfg: &'a TrainConfig,
    trial: usize,
    trial_seed: u64,
    model: Model,
    /// Raw maps per method index; train maps are empty under ROAD.
    train_maps: HashMap<usize, Vec<AttributionMap>>,
    test_maps: HashMap<usize, Vec<AttributionMap>>,
}

impl<'a> TrialContext<'a> {
    fn build(
        cfg: &'a ProtocolConfig,
        train_set: &'a Dataset,
        test_set: &'a Dataset,
        train_cfg: &'a TrainConfig,
        trial: usize,
        pending: &[(usize, usize, Vec<usize>)],
        pool: &rayon::ThreadPool,
    ) -> Result<Self> {
        let trial_seed = trial_seed(cfg.seed, trial);
        let init = Model::new(
            cfg.architecture,
            train_set.image_shape(),
            train_set.num_classes(),
            seed::derive(trial_seed, &["init"]),
        )?;
        let tcfg = TrainConfig { seed: seed::derive(trial_seed, &["shuffle"]), ..train_cfg.clone() };
        let model = train(&init, train_set, &tcfg)?;

        let mut wanted: Vec<usize> = pending.iter().map(|(m, _, _)| *m).collect();
        wanted.dedup();
        let specs: Vec<MethodSpec> = wanted.iter().map(|&m| cfg.methods[m]).collect();
        let est = EstimatorConfig { seed: seed::derive(trial_seed, &["attribution"]), ..cfg.estimator };
        let (train_raw, test_raw) = pool.install(|| {
            rayon::join(
                || match cfg.mode {
                    Mode::Roar => attribute_dataset(&model, train_set, 0, &specs, &est),
                    Mode::Road => Ok(vec![Vec::new(); specs.len()]),
                },
                || attribute_dataset(&model, test_set, train_set.len(), &specs, &est),
            )
        });
        Ok(TrialContext {
            cfg,
            train_set,
            test_set,
            train_cfg,
            trial,
            trial_seed,
            model,
            train_maps: wanted.iter().copied().zip(train_raw?).collect(),
            test_maps: wanted.iter().copied().zip(test_raw?).collect(),
        })
    }

    fn processed(&self, maps: &[AttributionMap], post: &PostprocSpec) -> Result<Vec<AttributionMap>> {
        let [_, h, w] = self.train_set.image_shape();
        maps.iter().map(|m| postprocess(m, post, h, w)).collect()
    }

    fn run_group(&self, m: usize, p: usize, ts: &[usize]) -> Result<Vec<(CellKey, RunRecord)>> {
        let method = self.cfg.methods[m];
        let post = &self.cfg.postprocs[p];
        let train_maps = self.processed(&self.train_maps[&m], post)?;
        let test_maps = self.processed(&self.test_maps[&m], post)?;
        let mut out = Vec::with_capacity(ts.len());
        for &ti in ts {
            let t = self.cfg.drop_rates[ti];
            let started = Instant::now();
            let cseed = cell_seed(self.cfg.seed, &method.label(), post.name(), t, self.trial);
            let test_masks = masks_at(&test_maps, t)?;
            let (accuracy, tv, failed) = match self.cfg.mode {
                Mode::Roar => {
                    let train_masks = masks_at(&train_maps, t)?;
                    let all: Vec<Mask> = train_masks.iter().chain(&test_masks).cloned().collect();
                    let (acc, failed) = self.retrain_cell(&train_masks, &test_masks, cseed, t)?;
                    (acc, mean_tv(&all), failed)
                }
                Mode::Road => (self.road_cell(&test_masks, cseed)?, mean_tv(&test_masks), None),
            };
            let record = RunRecord {
                dataset: self.train_set.name.clone(),
                method: method.label(),
                postproc: post.name().to_string(),
                drop_rate: t,
                trial: self.trial,
                accuracy,
                mask_tv: tv,
                mode: self.cfg.mode,
                seed: self.trial_seed,
                wall_time: started.elapsed().as_secs_f64(),
                failed,
            };
            out.push(((self.trial, m, p, ti), record));
        }
        Ok(out)
    }

    fn retrain_cell(
        &self,
        train_masks: &[Mask],
        test_masks: &[Mask],
        cseed: u64,
        t: f64,
    ) -> Result<(f64, Option<String>)> {
        let name = format!("{}-masked-{t}", self.train_set.name);
        let masked_train = self.train_set.map_images(&name, |i, x| apply_mask(x, &train_masks[i]))?;
        let masked_test = self.test_set.map_images(&name, |i, x| apply_mask(x, &test_masks[i]))?;
        // Fresh initialization from the cell's own stream; never a fine-tune of the trial model.
        let init = Model::new(
            self.cfg.architecture,
            self.train_set.image_shape(),
            self.train_set.num_classes(),
            seed::derive(cseed, &["init"]),
        )?;
        let tcfg = TrainConfig { seed: seed::derive(cseed, &["shuffle"]), ..self.train_cfg.clone() };
        match train(&init, &masked_train, &tcfg) {
            Ok(retrained) => Ok((evaluate(&retrained, &masked_test)?, None)),
            Err(e @ Error::TrainingDiverged { .. }) => Ok((f64::NAN, Some(e.to_string()))),
            Err(e) => Err(e),
        }
    }

    fn road_cell(&self, test_masks: &[Mask], cseed: u64) -> Result<f64> {
        let before = self.model.checksum();
        let mut rng = seed::rng(cseed, &["road-noise"]);
        let mut correct = 0usize;
        let idx: Vec<usize> = (0..self.test_set.len()).collect();
        for chunk in idx.chunks(256) {
            let imputed = chunk
                .iter()
                .map(|&i| noisy_impute(&self.test_set.samples()[i].image, &test_masks[i], self.cfg.road_noise_std, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            let refs: Vec<&Tensor> = imputed.iter().collect();
            let labels: Vec<usize> = chunk.iter().map(|&i| self.test_set.samples()[i].label).collect();
            correct += count_correct(&self.model, &Tensor::stack(&refs)?, &labels)?;
        }
        if self.model.checksum() != before {
            return Err(Error::ContractViolation("ROAD evaluation modified the trained model".into()));
        }
        Ok(correct as f64 / self.test_set.len() as f64)
    }
}

/// ROAR on freshly generated synthetic splits.
pub fn roar_run(cfg: &ProtocolConfig, spec: &SynthSpec, train_cfg: &TrainConfig) -> Result<Vec<RunRecord>> {
    let data = generate(spec)?;
    let cfg = ProtocolConfig { mode: Mode::Roar, ..cfg.clone() };
    run_protocol(&cfg, &data.train, &data.test, train_cfg)
}

/// ROAD on freshly generated synthetic splits.
pub fn road_run(cfg: &ProtocolConfig, spec: &SynthSpec, train_cfg: &TrainConfig) -> Result<Vec<RunRecord>> {
    let data = generate(spec)?;
    let cfg = ProtocolConfig { mode: Mode::Road, ..cfg.clone() };
    run_protocol(&cfg, &data.train, &data.test, train_cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::SynthKind;

    fn tiny_spec(kind: SynthKind) -> SynthSpec {
        SynthSpec { n_train: 120, n_test: 40, height: 8, width: 8, ..SynthSpec::desk(kind, 3) }
    }

    fn tiny_cfg() -> ProtocolConfig {
        ProtocolConfig {
            drop_rates: vec![0.2, 0.5],
            trials: 2,
            methods: vec![MethodSpec::parse("grad2").unwrap(), MethodSpec::parse("block").unwrap()],
            postprocs: vec![PostprocSpec::plain(), PostprocSpec::gaussian(1.0)],
            estimator: EstimatorConfig { ig_steps: 4, ensemble_n: 3, ..EstimatorConfig::default() },
            ..ProtocolConfig::default()
        }
    }

    fn quick_train() -> TrainConfig {
        TrainConfig { epochs: 2, ..TrainConfig::default() }
    }

    #[test]
    fn roar_produces_one_record_per_cell_in_order() {
        let recs = roar_run(&tiny_cfg(), &tiny_spec(SynthKind::Shapes), &quick_train()).unwrap();
        assert_eq!(recs.len(), 2 * 2 * 2 * 2);
        assert_eq!(
            (recs[0].trial, recs[0].method.as_str(), recs[0].postproc.as_str(), recs[0].drop_rate),
            (0, "grad2", "plain", 0.2)
        );
        assert_eq!(recs[1].drop_rate, 0.5);
        assert!(recs.iter().all(|r| r.failed.is_none() && (0.0..=1.0).contains(&r.accuracy)));
        assert!(recs.iter().all(|r| r.mode == Mode::Roar));
    }

    #[test]
    fn reruns_are_identical() {
        let strip = |rs: Vec<RunRecord>| rs.into_iter().map(|r| RunRecord { wall_time: 0.0, ..r }).collect::<Vec<_>>();
        let cfg = ProtocolConfig { trials: 1, ..tiny_cfg() };
        let a = strip(road_run(&cfg, &tiny_spec(SynthKind::BlockSignal), &quick_train()).unwrap());
        let b = strip(road_run(&ProtocolConfig { jobs: 2, ..cfg }, &tiny_spec(SynthKind::BlockSignal), &quick_train()).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn road_with_tiny_rate_matches_clean_accuracy_closely() {
        // round(0.001·64) = 0 pixels: imputation is the identity.
        let spec = tiny_spec(SynthKind::Shapes);
        let data = generate(&spec).unwrap();
        let cfg = ProtocolConfig { trials: 1, drop_rates: vec![0.001], methods: vec![MethodSpec::parse("grad").unwrap()], postprocs: vec![PostprocSpec::plain()], mode: Mode::Road, ..tiny_cfg() };
        let recs = run_protocol(&cfg, &data.train, &data.test, &quick_train()).unwrap();
        let ts = trial_seed(cfg.seed, 0);
        let init = Model::new(Architecture::SmallCnn, [1, 8, 8], 4, seed::derive(ts, &["init"])).unwrap();
        let model = train(&init, &data.train, &TrainConfig { seed: seed::derive(ts, &["shuffle"]), ..quick_train() }).unwrap();
        assert_eq!(recs[0].accuracy, evaluate(&model, &data.test).unwrap());
        assert_eq!(recs[0].mask_tv, 0.0);
    }

    #[test]
    fn masked_fraction_is_exact() {
        let data = generate(&tiny_spec(SynthKind::Shapes)).unwrap();
        let model = Model::new(Architecture::SmallCnn, [1, 8, 8], 4, 1).unwrap();
        let maps = prepare_maps(
            &model,
            &data.test,
            0,
            &[MethodSpec::parse("gc2").unwrap()],
            &[PostprocSpec::maxpool(3)],
            &EstimatorConfig::default(),
        )
        .unwrap();
        assert_eq!(maps[0][0][0].values.shape(), &[8, 8]);
        for m in masks_at(&maps[0][0], 0.3).unwrap() {
            assert_eq!(m.count(), 19);
        }
    }

    #[test]
    fn checkpoint_resumes_without_recomputing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cells.jsonl");
        let data = generate(&tiny_spec(SynthKind::Shapes)).unwrap();
        let cfg = ProtocolConfig { checkpoint: Some(path.clone()), trials: 1, ..tiny_cfg() };
        let full = run_protocol(&cfg, &data.train, &data.test, &quick_train()).unwrap();

        // Simulate an interruption: keep the header and two records plus a torn line.
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + full.len());
        std::fs::write(&path, format!("{}\n{}\n{}\n{{\"dataset\":", lines[0], lines[1], lines[2])).unwrap();
        let resumed = run_protocol(&cfg, &data.train, &data.test, &quick_train()).unwrap();
        let strip = |rs: &[RunRecord]| rs.iter().map(|r| RunRecord { wall_time: 0.0, ..r.clone() }).collect::<Vec<_>>();
        assert_eq!(strip(&full), strip(&resumed));
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 1 + full.len());

        let other = ProtocolConfig { seed: 99, ..cfg };
        assert!(run_protocol(&other, &data.train, &data.test, &quick_train()).is_err());
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            ProtocolConfig { drop_rates: vec![1.0], ..tiny_cfg() },
            ProtocolConfig { trials: 0, ..tiny_cfg() },
            ProtocolConfig { methods: vec![], ..tiny_cfg() },
            ProtocolConfig { road_noise_std: -1.0, ..tiny_cfg() },
        ];
        for cfg in bad {
            assert!(cfg.validate().is_err());
        }
    }
}
