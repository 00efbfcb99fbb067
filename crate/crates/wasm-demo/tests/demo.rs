use sst_wasm_demo::demo::{curves, gate_trajectory, train_roc};

#[test]
fn curve_table_layout() {
    let t = curves(-6.0, 6.0, 1201).unwrap();
    assert_eq!(t.len(), 1201 * 9);
    let mid = &t[600 * 9..601 * 9];
    assert_eq!(&mid[..5], &[0.0, 0.5, 0.25, 0.0, 0.0]);
    assert!(curves(1.0, 0.0, 10).is_err());
    assert!(curves(0.0, 1.0, 1).is_err());
}

#[test]
fn squared_gates_sit_below_sigmoid_gates() {
    let t = gate_trajectory(3, 64, 0.2).unwrap();
    assert_eq!(t.input.len(), 64);
    assert_eq!(t.input.iter().filter(|v| **v == 0.0).count(), 13);
    for (c, s) in t.classical_z.iter().zip(&t.sst_z) {
        assert!(s < c, "{s} vs {c}");
    }
    assert!(t.sst_h.iter().chain(&t.classical_h).all(|h| h.abs() < 1.0));
    assert_eq!(t, gate_trajectory(3, 64, 0.2).unwrap());
    assert!(gate_trajectory(3, 4, 0.2).is_err());
}

#[test]
fn roc_run_is_valid_curve() {
    let r = train_roc(true, 1, 15, 0.2).unwrap();
    assert_eq!(r.fpr.len(), r.tpr.len());
    assert_eq!((r.fpr[0], r.tpr[0]), (0.0, 0.0));
    assert_eq!((*r.fpr.last().unwrap(), *r.tpr.last().unwrap()), (1.0, 1.0));
    assert!((0.0..=1.0).contains(&r.auc));
    assert!(train_roc(false, 1, 0, 0.2).is_err());
}
