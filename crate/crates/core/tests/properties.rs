use proptest::collection::vec;
use proptest::prelude::*;

use sst_core::activation::sigmoid;
use sst_core::checkpoint;
use sst_core::data::{parse_dsv, to_dsv, SequenceDataset, Targets};
use sst_core::dense::{dense_forward, DenseParams};
use sst_core::gru::{forward_sequence, init_params};
use sst_core::metrics::{accuracy, auc, confusion_matrix, roc_points};
use sst_core::model::{build_model, ModelConfig, Task};
use sst_core::{ActivationKind, GruVariant, Matrix, Rng, Vector};

proptest! {
    #[test]
    fn squared_activations_bounded_odd_and_below_originals(x in -50.0f64..50.0) {
        let ss = ActivationKind::Ss.value(x);
        let st = ActivationKind::St.value(x);
        prop_assert!((0.0..=1.0).contains(&ss));
        prop_assert!((-1.0..=1.0).contains(&st));
        prop_assert_eq!(ActivationKind::St.value(-x), -st);
        prop_assert!(ss <= sigmoid(x));
        prop_assert!(st.abs() <= x.tanh().abs());
    }

    #[test]
    fn squared_activations_non_decreasing(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for k in [ActivationKind::Ss, ActivationKind::St] {
            prop_assert!(k.value(lo) <= k.value(hi), "{k} at {lo} vs {hi}");
        }
    }

    #[test]
    fn st_dense_layer_bounded(seed in any::<u64>(), xs in vec(-1e3f64..1e3, 5)) {
        let mut rng = Rng::new(seed);
        let mut layer = DenseParams::init(&mut rng, 5, 4, ActivationKind::St).unwrap();
        for w in layer.w.data_mut() {
            *w *= 10.0;
        }
        let (y, _) = dense_forward(&layer, &Vector::from(xs)).unwrap();
        prop_assert!(y.iter().all(|v| (-1.0..=1.0).contains(v)));
    }

    #[test]
    fn gru_states_bounded_for_any_input(seed in any::<u64>(), scale in 0.1f64..100.0, sst in any::<bool>()) {
        let mut rng = Rng::new(seed);
        let params = init_params(&mut rng, 2, 3).unwrap();
        let data: Vec<f64> = (0..20).map(|_| scale * rng.normal()).collect();
        let xs = Matrix::from_vec(10, 2, data).unwrap();
        let variant = if sst { GruVariant::sst() } else { GruVariant::classical() };
        let (hs, _) = forward_sequence(&params, &variant, &xs, &Vector::zeros(3)).unwrap();
        prop_assert!(hs.data().iter().all(|h| h.abs() <= 1.0));
    }

    #[test]
    fn roc_monotone_and_accuracy_is_trace(scores in vec(0.0f64..1.0, 4..80), seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let mut truth: Vec<bool> = scores.iter().map(|_| rng.next_f64() < 0.5).collect();
        truth[0] = true;
        truth[1] = false;
        let pts = roc_points(&scores, &truth).unwrap();
        prop_assert_eq!(pts[0], (0.0, 0.0));
        prop_assert_eq!(*pts.last().unwrap(), (1.0, 1.0));
        prop_assert!(pts.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
        let a = auc(&pts);
        prop_assert!((0.0..=1.0).contains(&a));

        let preds: Vec<usize> = scores.iter().map(|&s| usize::from(s > 0.5)).collect();
        let labels: Vec<usize> = truth.iter().map(|&t| usize::from(t)).collect();
        let m = confusion_matrix(&preds, &labels, 2).unwrap();
        let hits = preds.iter().zip(&labels).filter(|(p, l)| p == l).count();
        prop_assert_eq!(accuracy(&m), hits as f64 / preds.len() as f64);
    }

    #[test]
    fn delimited_text_roundtrip(values in vec(-1e6f64..1e6, 12), labels in vec(0usize..3, 2)) {
        let seqs = vec![
            Matrix::from_vec(3, 2, values[..6].to_vec()).unwrap(),
            Matrix::from_vec(3, 2, values[6..].to_vec()).unwrap(),
        ];
        let ds = SequenceDataset::new("p", seqs, Targets::Labels { labels, classes: 3 }).unwrap();
        let (text, schema) = to_dsv(&ds);
        let back = parse_dsv(&text, &schema, "mem").unwrap();
        prop_assert_eq!(back.sequences, ds.sequences);
        prop_assert_eq!(back.targets, ds.targets);
    }

    #[test]
    fn checkpoint_roundtrip(seed in any::<u64>(), hidden in 1usize..6, regression in any::<bool>()) {
        let task = if regression { Task::Regression { out_dim: 2 } } else { Task::Classification { classes: 3 } };
        let mut cfg = ModelConfig::classical(2, hidden, task);
        cfg.seed = seed;
        let model = build_model(&cfg).unwrap();
        let back = checkpoint::parse(&checkpoint::to_text(&model, None), "mem").unwrap().model;
        prop_assert_eq!(back.tensors(), model.tensors());
        prop_assert_eq!(back.variant, model.variant);
    }
}
