//! Data generation → training → checkpoint → prediction through the public API.

use pnn_core::numcore::{seeded_rng, Activation, RealArray};
use pnn_core::pnn::{Checkpoint, FlowDataset, FlowModel, ModelKind, ModelSpec, PhiSpec, ThetaSpec};
use pnn_core::sympnet::SympNetKind;
use pnn_core::systems::{generate_trajectory, IntegratorConfig, SystemSpec};
use pnn_core::train::{self, TrainConfig};
use proptest::prelude::*;

fn lv_spec() -> ModelSpec {
    ModelSpec {
        model: ModelKind::Pnn,
        theta: Some(ThetaSpec::Nvp {
            partition: 1,
            layers: 2,
            sublayers: 1,
            width: 8,
        }),
        phi: Some(PhiSpec {
            kind: SympNetKind::G,
            layers: 2,
            sublayers: None,
            width: Some(8),
        }),
        latent: None,
        m: 1,
        activation: Activation::Sigmoid,
    }
}

fn lv_data() -> FlowDataset {
    let sys = SystemSpec::LotkaVolterra;
    let cfg = IntegratorConfig::default();
    let trajs: Vec<RealArray> = [[1.0, 0.8], [1.0, 1.2]]
        .iter()
        .map(|y0| generate_trajectory(&sys, y0, 0.1, 30, &cfg).unwrap())
        .collect();
    FlowDataset::from_trajectories(&trajs, 0.1).unwrap()
}

#[test]
fn training_reduces_the_loss_and_checkpoints_reload_exactly() {
    let data = lv_data();
    let mut model = lv_spec().build(2, &mut seeded_rng(3)).unwrap();
    let cfg = TrainConfig {
        iterations: 300,
        log_interval: 100,
        ..TrainConfig::default()
    };
    let log = train::train(&mut model, &data, &cfg, |_, _| {}).unwrap();
    let first = log.history[0].1;
    assert!(log.final_loss < 0.5 * first, "{first} -> {}", log.final_loss);

    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("ck.json");
    model.to_checkpoint(serde_json::json!({"h": 0.1})).save(&path).unwrap();
    let back = FlowModel::from_checkpoint(&Checkpoint::load(&path).unwrap()).unwrap();
    let x0 = RealArray::matrix(1, 2, vec![1.3, 0.9]);
    let a = model.predict(&x0, 50, false).unwrap();
    let b = back.predict(&x0, 50, false).unwrap();
    for (p, q) in a.iter().zip(&b) {
        assert_eq!(p.data(), q.data());
    }
    assert_eq!(
        train::one_step_mse(&model, &data).unwrap(),
        train::one_step_mse(&back, &data).unwrap()
    );
}

#[test]
fn substeps_interleave_with_grid_predictions() {
    let spec = ModelSpec { m: 3, ..lv_spec() };
    let mut model = spec.build(2, &mut seeded_rng(5)).unwrap();
    // Move off the identity so the check is not vacuous.
    let cfg = TrainConfig {
        iterations: 20,
        ..TrainConfig::default()
    };
    train::train(&mut model, &lv_data(), &cfg, |_, _| {}).unwrap();
    let x0 = RealArray::matrix(1, 2, vec![0.9, 1.1]);
    let grid = model.predict(&x0, 4, false).unwrap();
    let fine = model.predict(&x0, 4, true).unwrap();
    assert_eq!(fine.len(), 12);
    for (k, g) in grid.iter().enumerate() {
        let f = &fine[3 * k + 2];
        for (a, b) in g.data().iter().zip(f.data()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }
}

#[test]
fn extended_pendulum_data_keep_energy_and_casimir() {
    let sys = SystemSpec::ExtendedPendulum;
    let y0 = [0.0, 1.0, 1.0];
    let traj = generate_trajectory(&sys, &y0, 0.1, 200, &IntegratorConfig::default()).unwrap();
    let h0 = sys.hamiltonian(&y0).unwrap();
    let casimir = |y: &[f64]| y[2] - y[0] * y[0] - y[1] * y[1];
    for k in 0..traj.rows() {
        let y = traj.row(k);
        assert!((sys.hamiltonian(y).unwrap() - h0).abs() < 1e-9);
        assert!((casimir(y) - casimir(&y0)).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn bare_sympnets_reload_to_the_same_map(seed in 0u64..1000, layers in 1usize..4, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let spec = ModelSpec {
            model: ModelKind::Sympnet,
            theta: None,
            phi: Some(PhiSpec { kind: SympNetKind::G, layers, sublayers: None, width: Some(6) }),
            latent: None,
            m: 1,
            activation: Activation::Tanh,
        };
        let mut model = spec.build(4, &mut seeded_rng(seed)).unwrap();
        let pairs = RealArray::matrix(2, 4, vec![x, y, 0.2, -0.3, 0.1, x, y, 0.5]);
        let data = FlowDataset::from_pairs(&pairs, &pairs.map(|v| 0.9 * v), 0.1).unwrap();
        train::train(&mut model, &data, &TrainConfig { iterations: 5, ..TrainConfig::default() }, |_, _| {}).unwrap();
        let back = FlowModel::from_checkpoint(&model.to_checkpoint(serde_json::Value::Null)).unwrap();
        let x0 = RealArray::matrix(1, 4, vec![x, -y, y, x]);
        let (a, b) = (model.step(&x0).unwrap(), back.step(&x0).unwrap());
        prop_assert_eq!(a.data(), b.data());
    }
}
