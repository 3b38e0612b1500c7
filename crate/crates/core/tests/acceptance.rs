//! One line per acceptance criterion. The dataset-dependent checks run only
//! when `MOTORNET_D2A` names a converted trial container; they are reported
//! as SKIP otherwise.

use std::collections::HashSet;
use std::time::{Duration, Instant};

use motornet::builder::{build_model, ModelSpec};
use motornet::dataio::{extract_window, read_container, synth_mi, Preprocess, Session, SynthConfig, TrialSet, DEFAULT_WINDOW};
use motornet::evaluation::{make_splits, paired_t_test, run_experiment, EegNetMethod, Method, ResultsTable, Scheme, SplitOptions};
use motornet::fbcsp::{csp_fit, FbcspConfig};
use motornet::nn::{
    gradcheck_layer, gradcheck_model, Activation, ActivationKind, BatchNorm2d, Conv2d, ConvGeometry, Dense, Dropout,
    GradcheckOptions, Layer, LayerKind, Pool2d, PoolKind, Tensor,
};
use motornet::signal::{butter_bandpass, default_bands, filtfilt, make_filter_bank, resample};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn randn(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

fn gradient_suite() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let o = GradcheckOptions::default();
    let distinct: Vec<f64> = (0..96).map(|i| ((i * 97) % 96) as f64 * 0.05).collect();
    let mut bn = BatchNorm2d::<f64>::new(3);
    bn.gamma.value = randn(&[3], 7).map(|v| v + 1.5);
    let cases: Vec<(&str, Layer<f64>, Tensor<f64>)> = vec![
        ("dense", Layer::Dense(Dense::new(4, 3, true, &mut rng).unwrap()), randn(&[5, 4], 2)),
        (
            "conv2d",
            Layer::Conv2d(
                Conv2d::new(8, 16, (3, 4), ConvGeometry { stride: (1, 2), padding: (1, 2), groups: 8 }, true, &mut rng)
                    .unwrap(),
            ),
            randn(&[2, 8, 5, 9], 4),
        ),
        ("batchnorm", Layer::BatchNorm2d(bn), randn(&[2, 3, 2, 5], 10)),
        ("elu", Layer::Activation(Activation::new(ActivationKind::Elu)), randn(&[3, 6], 11).map(|v| 3.0 * v)),
        ("logsoftmax", Layer::Activation(Activation::new(ActivationKind::LogSoftmax)), randn(&[3, 6], 12)),
        ("maxpool", Layer::Pool2d(Pool2d::new(PoolKind::Max, (2, 3))), Tensor::from_vec(&[2, 3, 2, 8], distinct.clone()).unwrap()),
        ("avgpool", Layer::Pool2d(Pool2d::new(PoolKind::Average, (2, 3))), Tensor::from_vec(&[2, 3, 2, 8], distinct).unwrap()),
        ("dropout", Layer::Dropout(Dropout::new(0.5).unwrap()), randn(&[4, 10], 13)),
    ];
    let mut worst = (String::new(), 0.0f64);
    for (name, mut layer, x) in cases {
        let e = gradcheck_layer(&mut layer, &x, &o).unwrap().max_rel_error();
        if e > worst.1 {
            worst = (name.to_string(), e);
        }
    }
    let (mut model, _) = build_model::<f64>(&ModelSpec::eegnet(), 21).unwrap();
    let full = gradcheck_model(&mut model, &randn(&[1, 1, 22, 512], 22), &GradcheckOptions { max_entries: Some(400), step: 1e-5, ..o })
        .unwrap()
        .max_rel_error();
    let el = t0.elapsed();
    verdict(
        worst.1 < 1e-4 && full < 1e-4 && el < Duration::from_secs(120),
        format!("worst layer {} {:.2e}, full model {full:.2e}, {:.1}s", worst.0, worst.1, el.as_secs_f64()),
    )
}

fn builder_golden() -> Outcome {
    let (_, report) = build_model::<f32>(&ModelSpec::eegnet(), 0).unwrap();
    let mut blocks: Vec<Vec<LayerKind>> = Vec::new();
    for l in &report.layers {
        match (l.kind, blocks.last_mut()) {
            (LayerKind::Conv2d | LayerKind::Flatten, _) | (_, None) => blocks.push(vec![l.kind]),
            (k, Some(b)) => b.push(k),
        }
    }
    let full = [LayerKind::Activation, LayerKind::Pool2d, LayerKind::Dropout];
    let carries: Vec<bool> = blocks[..4].iter().map(|b| full.iter().all(|k| b.contains(k))).collect();
    let bare = [0, 2].iter().all(|&i| !blocks[i].iter().any(|k| full.contains(k)));
    verdict(
        report.flatten_dim == Some(240) && report.param_count == 1972 && carries == [false, true, false, true] && bare,
        format!(
            "flatten {:?}, params {}, activation+pool+dropout per conv block {carries:?}",
            report.flatten_dim, report.param_count
        ),
    )
}

fn random_psd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n + 3, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose()
}

fn csp_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(618);
    let (mut white, mut sums) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = rng.random_range(2..=8);
        let (c1, c2) = (random_psd(n, &mut rng), random_psd(n, &mut rng));
        let m = csp_fit(&c1, &c2, n / 2).unwrap();
        let w = &m.w;
        let id = w * (&c1 + &c2) * w.transpose();
        white = white.max((id - DMatrix::identity(w.nrows(), w.nrows())).abs().max());
        // each row splits unit variance between the classes as λ and 1 − λ
        for (r, lam) in m.eigenvalues.iter().enumerate() {
            let row = w.row(r);
            let l1 = (row * &c1 * row.transpose())[0];
            let l2 = (row * &c2 * row.transpose())[0];
            sums = sums.max((l1 + l2 - 1.0).abs()).max((l1 - lam).abs());
        }
    }
    let c1 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.8, 0.2]));
    let c2 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, 0.8]));
    let hand = csp_fit(&c1, &c2, 1).unwrap();
    let hand_err = (hand.eigenvalues[0] - 0.8)
        .abs()
        .max((hand.eigenvalues[1] - 0.2).abs())
        .max((hand.w.clone().abs() - DMatrix::identity(2, 2)).abs().max());
    verdict(
        white < 1e-8 && sums < 1e-8 && hand_err < 1e-10,
        format!("whitening {white:.1e}, pair sums {sums:.1e}, 2x2 case {hand_err:.1e}"),
    )
}

fn dsp_suite() -> Outcome {
    let wide = butter_bandpass(3, 4.0, 40.0, 250.0).unwrap();
    let narrow = butter_bandpass(3, 8.0, 12.0, 250.0).unwrap();
    let bank = make_filter_bank(&default_bands(), 3, 250.0).unwrap();
    let stable = wide.is_stable() && narrow.is_stable() && bank.filters.iter().all(|f| f.is_stable());
    let bounds = wide.gain_db(0.0) < -60.0
        && wide.gain_db((4.0f64 * 40.0).sqrt()) > -1.0
        && narrow.gain_db(4.0) < -15.0
        && narrow.gain_db(24.0) < -15.0;

    let n = 2000;
    let x: Vec<f64> = (0..n).map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / 250.0).sin()).collect();
    let y = filtfilt(&wide, &x).unwrap();
    let core = 250..n - 250;
    let xc = |lag: isize| core.clone().map(|i| x[i] * y[(i as isize + lag) as usize]).sum::<f64>();
    let best = (-10isize..=10).max_by(|&a, &b| xc(a).total_cmp(&xc(b))).unwrap();
    let amp = core.clone().map(|i| y[i].abs()).fold(0.0, f64::max);

    let tone = |fs: f64, len: usize| -> Vec<f64> {
        (0..len).map(|i| (2.0 * std::f64::consts::PI * 5.0 * i as f64 / fs).sin()).collect()
    };
    let r = resample(&tone(250.0, 1000), 250.0, 128.0).unwrap();
    let truth = tone(128.0, r.len());
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let corr = dot(&r, &truth) / (dot(&r, &r) * dot(&truth, &truth)).sqrt();
    verdict(
        stable && bounds && best == 0 && (amp - 1.0).abs() < 0.02 && r.len() == 512 && corr > 0.99,
        format!(
            "stable {stable}, dB bounds {bounds}, lag {best}, amplitude {amp:.4}, 1000->{} samples, corr {corr:.4}",
            r.len()
        ),
    )
}

fn split_leakage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(620);
    let mut problems = Vec::new();
    for case in 0..100u64 {
        let subjects = rng.random_range(9..=12u8);
        let (mut labels, mut subj, mut sess) = (Vec::new(), Vec::new(), Vec::new());
        for s in 1..=subjects {
            for session in [Session::Train, Session::Test] {
                for _ in 0..rng.random_range(1..=5) {
                    labels.push(rng.random_range(0..4u8));
                    subj.push(s);
                    sess.push(session);
                }
            }
        }
        let n = labels.len();
        let set = TrialSet::new(Tensor::zeros(&[n, 1, 1]), labels, subj, sess, 250.0).unwrap();
        let opts = SplitOptions { seed: case, ..Default::default() };
        let ids = |idx: &[usize]| idx.iter().map(|&i| set.subjects[i]).collect::<HashSet<_>>();
        for scheme in [Scheme::Loso, Scheme::Lawhern] {
            for f in make_splits(scheme, &set, &opts).unwrap().folds {
                let mut groups = vec![ids(&f.train), ids(&f.test)];
                groups.extend(f.validation.as_deref().map(ids));
                for a in 0..groups.len() {
                    for b in a + 1..groups.len() {
                        if !groups[a].is_disjoint(&groups[b]) {
                            problems.push(format!("{scheme} case {case}"));
                        }
                    }
                }
            }
        }
        let want: Vec<usize> = (0..n).filter(|&i| set.sessions[i] == Session::Train).collect();
        if make_splits(Scheme::Mixed, &set, &opts).unwrap().folds.iter().any(|f| f.train != want) {
            problems.push(format!("mixed case {case}"));
        }
    }
    verdict(problems.is_empty(), format!("100 random sets, {} violations {:?}", problems.len(), problems.first()))
}

fn single_scheme(set: &TrialSet, method: &Method) -> f64 {
    let plan = make_splits(Scheme::Single, set, &SplitOptions::default()).unwrap();
    run_experiment(method, set, &plan, 1, 7, false).unwrap().column.avg_mean()
}

fn synthetic_end_to_end() -> Outcome {
    let t0 = Instant::now();
    let eegnet = |epochs| Method::EegNet(EegNetMethod::new(ModelSpec::eegnet(), epochs));
    let fbcsp = |k| Method::Fbcsp(FbcspConfig { n_classes: k, ..Default::default() });

    let two = synth_mi(&SynthConfig::two_class(11)).unwrap();
    let four = synth_mi(&SynthConfig::four_class(12)).unwrap();
    // the null control needs enough test trials for ±10 points to be a real test
    let noise = synth_mi(&SynthConfig { snr: 0.0, trials_per_class: 200, ..SynthConfig::two_class(13) }).unwrap();

    let acc = [
        single_scheme(&two, &fbcsp(2)),
        single_scheme(&two, &eegnet(40)),
        single_scheme(&four, &fbcsp(4)),
        single_scheme(&four, &eegnet(40)),
        single_scheme(&noise, &fbcsp(2)),
        single_scheme(&noise, &eegnet(40)),
    ];
    let el = t0.elapsed();
    let ok = acc[0] >= 95.0
        && acc[1] >= 90.0
        && acc[2] >= 85.0
        && acc[3] >= 85.0
        && (acc[4] - 50.0).abs() <= 10.0
        && (acc[5] - 50.0).abs() <= 10.0
        && el < Duration::from_secs(600);
    verdict(
        ok,
        format!(
            "2-class FBCSP {:.1}% EEGNet {:.1}%, 4-class FBCSP {:.1}% EEGNet {:.1}%, noise FBCSP {:.1}% EEGNet {:.1}%, {:.0}s",
            acc[0],
            acc[1],
            acc[2],
            acc[3],
            acc[4],
            acc[5],
            el.as_secs_f64()
        ),
    )
}

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

fn statistics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(622);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=12);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(20.0..90.0)).collect();
        let b: Vec<f64> = a.iter().map(|v| v + rng.random_range(-10.0..6.0)).collect();
        let r = paired_t_test(&a, &b).unwrap();
        worst = worst.max((r.p.unwrap() - simpson_p(r.t, r.df as f64)).abs());
    }
    let p = paired_t_test(&[1.0, 2.0, 3.0], &[0.0; 3]).unwrap().p.unwrap();
    verdict(worst < 1e-6 && (p - 0.0742).abs() < 1e-4, format!("oracle gap {worst:.1e}, [1,2,3] p = {p:.4}"))
}

/// Dataset-2a runs at reduced scale: 100 epochs, `MOTORNET_D2A_REPS` reps.
struct Dataset {
    raw: TrialSet,
    preprocessed: TrialSet,
    reps: usize,
}

fn dataset() -> Option<Dataset> {
    let path = std::env::var_os("MOTORNET_D2A")?;
    let set = read_container(&path).expect("MOTORNET_D2A must name a readable trial container");
    let set = if set.n_samples() as f64 >= DEFAULT_WINDOW.1 * set.fs {
        extract_window(&set, DEFAULT_WINDOW.0, DEFAULT_WINDOW.1).unwrap()
    } else {
        set
    };
    let raw = Preprocess { resample_hz: Some(128.0), ..Default::default() }.apply(&set).unwrap();
    let preprocessed = Preprocess {
        bandpass: Some((4.0, 40.0)),
        filter_order: Some(3),
        ema_decay: Some(0.999),
        resample_hz: Some(128.0),
    }
    .apply(&set)
    .unwrap();
    let reps = std::env::var("MOTORNET_D2A_REPS").ok().and_then(|v| v.parse().ok()).unwrap_or(3);
    Some(Dataset { raw, preprocessed, reps })
}

fn column(d: &Dataset, set: &TrialSet, method: &Method, scheme: Scheme) -> motornet::evaluation::Column {
    let plan = make_splits(scheme, set, &SplitOptions::default()).unwrap();
    run_experiment(method, set, &plan, d.reps, 2024, false).unwrap().column
}

fn dataset_criteria() -> [(&'static str, Outcome); 3] {
    let skip = || Outcome::Skip("set MOTORNET_D2A to a converted dataset-2a container".into());
    let Some(d) = dataset() else {
        return [("subject-dependent EEGNet", skip()), ("scheme ordering", skip()), ("raw vs preprocessed", skip())];
    };
    let eeg = Method::EegNet(EegNetMethod::new(ModelSpec::eegnet(), 100));
    let fb = Method::Fbcsp(FbcspConfig::default());
    let mut table = ResultsTable::default();
    for (method, scheme) in [(&eeg, Scheme::Single), (&fb, Scheme::Single), (&eeg, Scheme::Mixed), (&eeg, Scheme::Loso), (&fb, Scheme::Loso)] {
        table.push(column(&d, &d.raw, method, scheme));
    }
    let avg = |name: &str| table.column(name).unwrap().avg_mean();
    let (es, fs, em, el, fl) = (avg("EEGNet-single"), avg("FBCSP-single"), avg("EEGNet-mixed"), avg("EEGNet-loso"), avg("FBCSP-loso"));
    let p = table.compare("EEGNet-loso", "FBCSP-loso").unwrap().p;

    let lawhern = |set: &TrialSet| column(&d, set, &eeg, Scheme::Lawhern).avg_mean();
    let (raw, pre) = (lawhern(&d.raw), lawhern(&d.preprocessed));
    [
        (
            "subject-dependent EEGNet",
            verdict((es - 67.88).abs() <= 7.0 && es > fs, format!("EEGNet-single {es:.2}%, FBCSP-single {fs:.2}%")),
        ),
        (
            "scheme ordering",
            verdict(
                em > es && el - fl > 15.0 && p.is_some_and(|p| p < 0.005),
                format!("mixed {em:.2}% vs single {es:.2}%, loso EEGNet {el:.2}% vs FBCSP {fl:.2}%, p {p:?}"),
            ),
        ),
        ("raw vs preprocessed", verdict(raw >= pre, format!("lawhern raw {raw:.2}%, preprocessed {pre:.2}%"))),
    ]
}

#[test]
fn acceptance() {
    let mut rows: Vec<(&str, Outcome)> = vec![
        ("gradient suite", gradient_suite()),
        ("builder golden", builder_golden()),
        ("CSP suite", csp_suite()),
        ("DSP suite", dsp_suite()),
        ("split leakage", split_leakage()),
        ("synthetic end-to-end", synthetic_end_to_end()),
        ("statistics", statistics()),
    ];
    rows.extend(dataset_criteria());
    let mut failed = Vec::new();
    for (name, outcome) in &rows {
        match outcome {
            Outcome::Pass(d) => println!("PASS {name}: {d}"),
            Outcome::Fail(d) => {
                println!("FAIL {name}: {d}");
                failed.push(*name);
            }
            Outcome::Skip(d) => println!("SKIP {name}: {d}"),
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
