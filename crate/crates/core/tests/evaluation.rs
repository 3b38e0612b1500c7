use std::collections::HashSet;

use motornet::dataio::{synth_mi, Session, SynthConfig, TrialSet};
use motornet::evaluation::{
    emit_table, make_splits, paired_t_test, run_experiment, Method, ResultsTable, Scheme, SplitOptions, TableFormat,
};
use motornet::fbcsp::FbcspConfig;
use motornet::nn::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

/// Two-sided p by Simpson integration of the Student t density on [0, |t|].
fn simpson_p(t: f64, df: f64) -> f64 {
    let c = (ln_gamma((df + 1.0) / 2.0) - ln_gamma(df / 2.0)).exp() / (df * std::f64::consts::PI).sqrt();
    let f = |x: f64| c * (1.0 + x * x / df).powf(-(df + 1.0) / 2.0);
    let n = 20_000;
    let h = t.abs() / n as f64;
    let mut s = f(0.0) + f(t.abs());
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    1.0 - 2.0 * s * h / 3.0
}

#[test]
fn t_test_matches_numeric_integration() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for case in 0..50 {
        let n = rng.random_range(2..=12);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..90.0)).collect();
        let shift = rng.random_range(-8.0..8.0);
        let b: Vec<f64> = a.iter().map(|v| v + shift + rng.random_range(-6.0..6.0)).collect();
        let r = paired_t_test(&a, &b).unwrap();
        let want = simpson_p(r.t, r.df as f64);
        assert!((r.p.unwrap() - want).abs() < 1e-6, "case {case}: {:?} vs {want}", r.p);
    }
}

#[test]
fn one_two_three_differences() {
    let r = paired_t_test(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap();
    assert!((r.p.unwrap() - 0.0742).abs() < 1e-4);
    assert!((simpson_p(r.t, 2.0) - r.p.unwrap()).abs() < 1e-9);
}

/// Random metadata layout: 9..=12 subjects, a few trials per session each.
fn random_layout(rng: &mut ChaCha8Rng) -> TrialSet {
    let subjects = rng.random_range(9..=12u8);
    let (mut labels, mut subj, mut sess) = (Vec::new(), Vec::new(), Vec::new());
    for s in 1..=subjects {
        for session in [Session::Train, Session::Test] {
            for _ in 0..rng.random_range(1..=6) {
                labels.push(rng.random_range(0..4u8));
                subj.push(s);
                sess.push(session);
            }
        }
    }
    let n = labels.len();
    // distinct payloads so the trial hashes identify trials
    let data = Tensor::from_vec(&[n, 1, 2], (0..2 * n).map(|v| v as f32 + rng.random_range(0.0..0.5)).collect()).unwrap();
    TrialSet::new(data, labels, subj, sess, 250.0).unwrap()
}

#[test]
fn splits_never_leak_across_subjects() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for case in 0..100 {
        let set = random_layout(&mut rng);
        let opts = SplitOptions { seed: case, ..Default::default() };
        for scheme in Scheme::ALL {
            let plan = make_splits(scheme, &set, &opts).unwrap();
            for f in &plan.folds {
                let train: HashSet<usize> = f.train.iter().copied().collect();
                let test: HashSet<usize> = f.test.iter().copied().collect();
                assert!(train.is_disjoint(&test));
                if let Some(v) = &f.validation {
                    assert!(v.iter().all(|i| !test.contains(i) && !train.contains(i)));
                }
                let subjects = |idx: &[usize]| idx.iter().map(|&i| set.subjects[i]).collect::<HashSet<_>>();
                match scheme {
                    Scheme::Loso => {
                        assert!(subjects(&f.train).is_disjoint(&subjects(&f.test)));
                        let hashes: HashSet<u64> = f.train.iter().map(|&i| set.trial_hash(i)).collect();
                        assert!(f.test.iter().all(|&i| !hashes.contains(&set.trial_hash(i))));
                    }
                    Scheme::Lawhern => {
                        let (tr, va, te) = (subjects(&f.train), subjects(f.validation.as_ref().unwrap()), subjects(&f.test));
                        assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
                        assert_eq!((tr.len(), va.len(), te.len()), (5, 3, 1));
                    }
                    Scheme::Mixed => {
                        let want: Vec<usize> = (0..set.n_trials()).filter(|&i| set.sessions[i] == Session::Train).collect();
                        assert_eq!(f.train, want);
                    }
                    Scheme::Single => {
                        assert_eq!(subjects(&f.train), subjects(&f.test));
                    }
                }
            }
        }
    }
}

fn synthetic_subjects(seed: u64) -> TrialSet {
    synth_mi(&SynthConfig { subjects: 3, trials_per_class: 20, ..SynthConfig::two_class(seed) }).unwrap()
}

#[test]
fn fbcsp_repetitions_are_identical() {
    let set = synthetic_subjects(1);
    let plan = make_splits(Scheme::Single, &set, &SplitOptions::default()).unwrap();
    let cfg = FbcspConfig { n_classes: 2, ..Default::default() };
    let out = run_experiment(&Method::Fbcsp(cfg), &set, &plan, 3, 9, true).unwrap();
    for s in 0..3 {
        assert_eq!(out.column.subject_std(s), 0.0);
        assert!(out.column.subject_mean(s) >= 90.0, "{:?}", out.column.acc);
    }
    assert_eq!(out.records.len(), 9);
    assert_eq!(out.models.len(), 3);
    assert_eq!(out.column.name, "FBCSP-single");
}

#[test]
fn separable_data_under_every_scheme() {
    let set = synth_mi(&SynthConfig { subjects: 9, trials_per_class: 10, ..SynthConfig::two_class(2) }).unwrap();
    let cfg = FbcspConfig { n_classes: 2, ..Default::default() };
    for scheme in Scheme::ALL {
        let plan = make_splits(scheme, &set, &SplitOptions::default()).unwrap();
        let out = run_experiment(&Method::Fbcsp(cfg.clone()), &set, &plan, 1, 0, false).unwrap();
        assert!(out.column.avg_mean() >= 90.0, "{scheme}: {}", out.column.avg_mean());
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let set = synthetic_subjects(3);
    let plan = make_splits(Scheme::Mixed, &set, &SplitOptions::default()).unwrap();
    let method = Method::EegNet(motornet::evaluation::EegNetMethod::new(motornet::ModelSpec::eegnet(), 2));
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| run_experiment(&method, &set, &plan, 2, 5, false).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.column, b.column);
    assert_eq!(a.records.len(), 6);
    // mixed: one training per repetition shared by all folds
    assert_eq!(a.records.iter().map(|r| r.group).collect::<HashSet<_>>().len(), 1);
}

#[test]
fn table_from_experiments() {
    let set = synthetic_subjects(4);
    let plan = make_splits(Scheme::Single, &set, &SplitOptions::default()).unwrap();
    let cfg = FbcspConfig { n_classes: 2, ..Default::default() };
    let mut table = ResultsTable::default();
    table.push(run_experiment(&Method::Fbcsp(cfg), &set, &plan, 2, 0, false).unwrap().column);
    let csv = emit_table(&table, TableFormat::Csv).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.lines().last().unwrap().starts_with("AVG,"));
}
