use motornet::builder::{build_conv_section, build_model, infer_flatten_dim, validate_spec, ModelSpec};
use motornet::dataio::{read_container_from, write_container_to, Session, TrialSet};
use motornet::error::{Error, FormatError};
use motornet::nn::{Mode, ModelSnapshot, Tensor};
use motornet::builder::PoolingEntry;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn trial_set() -> impl Strategy<Value = TrialSet> {
    (1usize..6, 1usize..5, 1usize..20, prop_oneof![Just(128.0f32), Just(250.0), 1.0f32..1000.0].prop_map(f64::from)).prop_flat_map(
        |(n, c, t, fs)| {
            (
                prop::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), n * c * t),
                prop::collection::vec(0u8..4, n),
                prop::collection::vec(any::<u8>(), n),
                prop::collection::vec(any::<bool>(), n),
            )
                .prop_map(move |(data, labels, subjects, test)| {
                    let sessions = test.into_iter().map(|t| if t { Session::Test } else { Session::Train }).collect();
                    TrialSet::new(Tensor::from_vec(&[n, c, t], data).unwrap(), labels, subjects, sessions, fs).unwrap()
                })
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn container_round_trip(set in trial_set()) {
        let mut buf = Vec::new();
        write_container_to(&set, &mut buf).unwrap();
        let back = read_container_from(buf.as_slice()).unwrap();
        prop_assert_eq!(back, set);
    }

    #[test]
    fn truncated_containers_are_rejected(set in trial_set(), cut in 1usize..64) {
        let mut buf = Vec::new();
        write_container_to(&set, &mut buf).unwrap();
        buf.truncate(buf.len().saturating_sub(cut));
        prop_assert!(read_container_from(buf.as_slice()).is_err());
    }
}

#[test]
fn snapshot_round_trip() {
    let (mut model, _) = build_model::<f32>(&ModelSpec::eegnet().with_input(4, 64), 3).unwrap();
    model.forward(&Tensor::from_vec(&[2, 1, 4, 64], (0..512).map(|i| (i as f32 * 0.37).sin()).collect()).unwrap()).unwrap();
    let snap = model.snapshot();
    let mut buf = Vec::new();
    snap.write_to(&mut buf).unwrap();
    let back = ModelSnapshot::<f32>::read_from(buf.as_slice()).unwrap();
    assert_eq!(back, snap);
    buf[0] = b'X';
    assert!(matches!(
        ModelSnapshot::<f32>::read_from(buf.as_slice()),
        Err(Error::Format(FormatError::BadMagic { .. }))
    ));
}

/// Random CNN spec; some draws are deliberately infeasible.
fn random_spec(rng: &mut ChaCha8Rng) -> ModelSpec {
    let cnn = rng.random_range(1..=4);
    let mut s = ModelSpec {
        h: rng.random_range(1..=12),
        w: rng.random_range(8..=96),
        layers_cnn: cnn,
        kernel_list: vec![],
        filters_list: vec![],
        stride_list: rng.random_bool(0.5).then(Vec::new),
        padding_list: vec![],
        pooling_list: vec![],
        groups_list: vec![],
        cnn_normalization_list: vec![],
        layers_ff: 1,
        neurons_list: vec![rng.random_range(2..=5)],
        activation_list: vec![],
        bias_list: vec![],
        dropout_list: vec![],
    };
    let mut cin = 1;
    for _ in 0..cnn {
        let groups = if cin > 1 && rng.random_bool(0.5) { cin } else { 1 };
        let cout = groups * rng.random_range(1..=3);
        s.filters_list.push((cin, cout));
        s.groups_list.push(groups);
        s.kernel_list.push((rng.random_range(1..=3), rng.random_range(1..=9)));
        s.padding_list.push((rng.random_range(0..=1), rng.random_range(0..=4)));
        if let Some(st) = &mut s.stride_list {
            st.push((rng.random_range(1..=2), rng.random_range(1..=3)));
        }
        s.pooling_list.push(
            rng.random_bool(0.5)
                .then(|| PoolingEntry { code: rng.random_range(0..=1), kernel: (1, rng.random_range(1..=4)) }),
        );
        s.cnn_normalization_list.push(rng.random_bool(0.5));
        s.activation_list.push([-1, 3][rng.random_range(0..2)]);
        s.dropout_list.push(rng.random_bool(0.3).then_some(0.25));
        s.bias_list.push(rng.random_bool(0.5));
        cin = cout;
    }
    s.activation_list.push(9);
    s.dropout_list.push(None);
    s.bias_list.push(true);
    s
}

#[test]
fn inferred_flatten_matches_forward_pass() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut valid = 0;
    for case in 0..100 {
        let spec = random_spec(&mut rng);
        if validate_spec(&spec).is_err() {
            assert!(build_model::<f64>(&spec, case).is_err());
            continue;
        }
        valid += 1;
        let mut conv = build_conv_section::<f64>(&spec, &mut ChaCha8Rng::seed_from_u64(case)).unwrap();
        let inferred = infer_flatten_dim(&conv, 1, spec.h, spec.w).unwrap();
        let mut x = Tensor::from_vec(&[3, 1, spec.h, spec.w], vec![0.5; 3 * spec.h * spec.w]).unwrap();
        for layer in &mut conv {
            x = layer.forward(&x, Mode::Eval, &mut rng).unwrap();
        }
        assert_eq!(x.shape()[0], 3);
        assert_eq!(x.shape()[1..].iter().product::<usize>(), inferred, "case {case}: {spec:?}");
        let (mut model, report) = build_model::<f64>(&spec, case).unwrap();
        assert_eq!(report.flatten_dim, Some(inferred));
        model.set_mode(Mode::Eval);
        let y = model.forward(&Tensor::from_vec(&[3, 1, spec.h, spec.w], vec![0.1; 3 * spec.h * spec.w]).unwrap()).unwrap();
        assert_eq!(y.shape(), &[3, spec.neurons_list[0]]);
    }
    assert!(valid >= 30, "only {valid} feasible specs drawn");
}
