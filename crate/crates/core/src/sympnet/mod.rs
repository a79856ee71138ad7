//! Symplectic networks (LA- and G-SympNets) and their extension to
//! maps that fix trailing coordinates (E-SympNets).
//!
//! Storage order is `(p₁..p_d, q₁..q_d, c₁..c_{n-2d})`. Nets alternate
//! module sides starting with `up`.

mod modules;
mod net;

pub use modules::{ActivationModule, ExtendedModule, GradientModule, LinearModule};
pub use net::{SympModule, SympNet, SympNetKind};

pub use crate::serial::Side;

use crate::numcore::RealArray;

/// `‖DᵀJD − J‖_max` for a `2d x 2d` Jacobian `D`, with `J = [[0, I], [-I, 0]]`.
pub fn symplectic_defect(jac: &RealArray, d: usize) -> f64 {
    let n = 2 * d;
    assert_eq!(jac.shape(), &[n, n], "symplectic_defect needs a 2d x 2d matrix");
    let dm = jac.data();
    let j = |r: usize, c: usize| -> f64 {
        if r < d && c == r + d {
            1.0
        } else if r >= d && c + d == r {
            -1.0
        } else {
            0.0
        }
    };
    // JD
    let mut jd = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            jd[r * n + c] = (0..n).map(|k| j(r, k) * dm[k * n + c]).sum();
        }
    }
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let v: f64 = (0..n).map(|k| dm[k * n + r] * jd[k * n + c]).sum();
            worst = worst.max((v - j(r, c)).abs());
        }
    }
    worst
}

/// Leading `m x m` block of a square matrix.
pub fn leading_block(jac: &RealArray, m: usize) -> RealArray {
    let n = jac.cols();
    let mut out = Vec::with_capacity(m * m);
    for r in 0..m {
        out.extend_from_slice(&jac.data()[r * n..r * n + m]);
    }
    RealArray::matrix(m, m, out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{
        finite_diff_vjp, flat_grads, flat_params, layer_jacobian, randomize_params, relative_error, seeded_rng,
        set_flat_params, Activation, DifferentiableLayer,
    };
    use proptest::prelude::*;

    const SIG: Activation = Activation::Sigmoid;

    fn v(x: &[f64]) -> RealArray {
        RealArray::vector(x.to_vec())
    }

    #[test]
    fn defect_of_identity_and_shear() {
        let id = RealArray::matrix(2, 2, vec![1.0, 0.0, 0.0, 1.0]);
        assert_eq!(symplectic_defect(&id, 1), 0.0);
        let shear = RealArray::matrix(2, 2, vec![1.0, 3.0, 0.0, 1.0]);
        assert!(symplectic_defect(&shear, 1) < 1e-15);
        let stretch = RealArray::matrix(2, 2, vec![2.0, 0.0, 0.0, 1.0]);
        assert!((symplectic_defect(&stretch, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn linear_zero_is_identity() {
        let m = LinearModule::new(2, 1, Side::Up);
        let x = v(&[0.3, -1.0, 2.0, 5.0]);
        assert_eq!(m.forward(&x).unwrap(), x);
    }

    #[test]
    fn linear_upper_factor_shears_p() {
        let mut m = LinearModule::new(1, 1, Side::Up);
        m.params_mut().get_mut("a0").unwrap().value = RealArray::matrix(1, 1, vec![1.0]);
        assert_eq!(m.forward(&v(&[1.0, 1.0])).unwrap().data(), &[3.0, 1.0]);
    }

    #[test]
    fn activation_examples() {
        let mut m = ActivationModule::new(1, Side::Up, SIG);
        assert_eq!(m.forward(&v(&[0.4, -0.2])).unwrap().data(), &[0.4, -0.2]);
        m.params_mut().get_mut("a").unwrap().value = v(&[2.0]);
        assert_eq!(m.forward(&v(&[0.0, 0.0])).unwrap().data(), &[1.0, 0.0]);
    }

    #[test]
    fn gradient_examples() {
        let mut rng = seeded_rng(1);
        let mut m = GradientModule::new(1, 1, Side::Up, SIG, &mut rng);
        let x = v(&[0.7, -0.4]);
        assert_eq!(m.forward(&x).unwrap(), x);
        let ps = m.params_mut();
        ps.get_mut("k").unwrap().value = RealArray::matrix(1, 1, vec![1.0]);
        ps.get_mut("a").unwrap().value = v(&[1.0]);
        assert_eq!(m.forward(&v(&[0.0, 0.0])).unwrap().data(), &[0.5, 0.0]);
    }

    #[test]
    fn extended_zero_scaling_is_identity() {
        let mut rng = seeded_rng(2);
        let m = ExtendedModule::new(5, 2, 8, Side::Low, SIG, &mut rng).unwrap();
        let x = v(&[0.1, 0.2, 0.3, 0.4, 0.5]);
        assert_eq!(m.forward(&x).unwrap(), x);
    }

    #[test]
    fn extended_without_trailing_coords_matches_gradient_bitwise() {
        let mut rng = seeded_rng(3);
        for side in [Side::Up, Side::Low] {
            let mut e = ExtendedModule::new(4, 2, 6, side, SIG, &mut rng).unwrap();
            randomize_params(&mut e, &mut rng, 1.0);
            let mut g = GradientModule::new(2, 6, side, SIG, &mut rng);
            // Same parameter order: k/k1, a, b.
            set_flat_params(&mut g, &flat_params(&e));
            let x = rng.uniform_array(&[7, 4], -2.0, 2.0);
            assert_eq!(e.forward(&x).unwrap(), g.forward(&x).unwrap());
        }
    }

    #[test]
    fn extended_n3_d1_preserves_c_and_area() {
        let mut rng = seeded_rng(4);
        let mut m = ExtendedModule::new(3, 1, 10, Side::Up, SIG, &mut rng).unwrap();
        randomize_params(&mut m, &mut rng, 1.0);
        for _ in 0..10 {
            let x = rng.uniform_array(&[3], -2.0, 2.0);
            let y = m.forward(&x).unwrap();
            assert_eq!(y.data()[2].to_bits(), x.data()[2].to_bits());
            let jac = layer_jacobian(&m, x.data(), 1e-3).unwrap();
            let b = leading_block(&jac, 2);
            let det = b.data()[0] * b.data()[3] - b.data()[1] * b.data()[2];
            assert!((det - 1.0).abs() < 1e-10, "det = {det}");
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut rng = seeded_rng(5);
        let g = GradientModule::new(2, 3, Side::Up, SIG, &mut rng);
        assert!(g.forward(&v(&[1.0, 2.0, 3.0])).is_err());
        let net = SympNet::e(5, 2, 2, 4, SIG, &mut rng).unwrap();
        assert!(net.forward(&v(&[1.0; 4])).is_err());
        assert!(SympNet::e(3, 2, 2, 4, SIG, &mut rng).is_err());
    }

    #[test]
    fn layer_counts_follow_terminology() {
        let la = SympNet::la(2, 3, 2, SIG).unwrap();
        let kinds: Vec<&str> = la
            .modules()
            .iter()
            .map(|m| match m {
                SympModule::Linear(_) => "L",
                SympModule::Activation(_) => "A",
                _ => "?",
            })
            .collect();
        assert_eq!(kinds, ["L", "A", "L", "A", "L"]);
        let mut rng = seeded_rng(6);
        let g = SympNet::g(1, 4, 5, SIG, &mut rng).unwrap();
        let sides: Vec<Side> = g
            .modules()
            .iter()
            .map(|m| match m {
                SympModule::Gradient(g) => g.side(),
                _ => unreachable!(),
            })
            .collect();
        assert_eq!(sides, [Side::Up, Side::Low, Side::Up, Side::Low]);
        assert_eq!(SympNet::e(3, 1, 3, 5, SIG, &mut rng).unwrap().modules().len(), 3);
    }

    #[test]
    fn empty_and_identity_nets() {
        let mut rng = seeded_rng(7);
        let x = v(&[0.5, -0.5, 2.0]);
        let e = SympNet::e(3, 1, 0, 4, SIG, &mut rng).unwrap();
        assert_eq!(e.forward(&x).unwrap(), x);
        let la = SympNet::la(1, 3, 2, SIG).unwrap();
        let y = v(&[0.5, -0.5]);
        assert_eq!(la.forward(&y).unwrap(), y);
    }

    #[test]
    fn la_with_only_biases_translates() {
        let mut net = SympNet::la(1, 2, 2, SIG).unwrap();
        let biases = [[0.5, -1.0], [0.25, 2.0]];
        let mut k = 0;
        for m in net.modules_mut() {
            if let SympModule::Linear(l) = m {
                l.params_mut().get_mut("b").unwrap().value = v(&biases[k]);
                k += 1;
            }
        }
        let y = net.forward(&v(&[1.0, 1.0])).unwrap();
        assert_eq!(y.data(), &[1.75, 2.0]);
    }

    #[test]
    fn g_net_width_30_is_symplectic() {
        let mut rng = seeded_rng(8);
        let mut net = SympNet::g(1, 3, 30, SIG, &mut rng).unwrap();
        randomize_params(&mut net, &mut rng, 1.0);
        for _ in 0..5 {
            let x = rng.uniform_array(&[2], -2.0, 2.0);
            let jac = layer_jacobian(&net, x.data(), 1e-3).unwrap();
            assert!(symplectic_defect(&jac, 1) < 1e-8);
        }
    }

    #[test]
    fn random_linear_module_is_symplectic() {
        let mut rng = seeded_rng(9);
        for parity in [Side::Up, Side::Low] {
            let mut m = LinearModule::new(3, 4, parity);
            randomize_params(&mut m, &mut rng, 1.0);
            let x = rng.uniform_array(&[6], -1.0, 1.0);
            let jac = layer_jacobian(&m, x.data(), 1e-2).unwrap();
            assert!(symplectic_defect(&jac, 3) < 1e-8);
        }
    }

    #[test]
    fn batch_rows_match_single_samples() {
        let mut rng = seeded_rng(10);
        let mut net = SympNet::e(4, 1, 3, 6, SIG, &mut rng).unwrap();
        randomize_params(&mut net, &mut rng, 1.0);
        let batch = rng.uniform_array(&[5, 4], -1.0, 1.0);
        let out = net.forward(&batch).unwrap();
        for r in 0..5 {
            let single = net.forward(&v(batch.row(r))).unwrap();
            assert!(relative_error(single.data(), out.row(r)) < 1e-14);
        }
    }

    fn check_vjp<L: DifferentiableLayer>(layer: &mut L, n: usize, rng: &mut crate::numcore::SeededRng) {
        randomize_params(layer, rng, 1.0);
        let x = rng.uniform_array(&[3, n], -1.5, 1.5);
        let g = rng.uniform_array(&[3, n], -1.0, 1.0);
        let est = finite_diff_vjp(layer, &x, &g, 1e-6).unwrap();
        layer.zero_grad();
        let gx = layer.backward(&x, &g).unwrap();
        assert!(relative_error(gx.data(), est.input.data()) < 1e-5);
        assert!(relative_error(&flat_grads(layer), &est.params) < 1e-5);
    }

    #[test]
    fn module_backward_matches_finite_differences() {
        let mut rng = seeded_rng(11);
        for side in [Side::Up, Side::Low] {
            check_vjp(&mut LinearModule::new(2, 3, side), 4, &mut rng);
            check_vjp(&mut ActivationModule::new(2, side, SIG), 4, &mut rng);
            check_vjp(&mut GradientModule::new(2, 5, side, SIG, &mut rng), 4, &mut rng);
            check_vjp(
                &mut ExtendedModule::new(5, 2, 5, side, SIG, &mut rng).unwrap(),
                5,
                &mut rng,
            );
        }
        check_vjp(&mut SympNet::la(2, 3, 2, SIG).unwrap(), 4, &mut rng);
        check_vjp(&mut SympNet::e(3, 1, 4, 6, SIG, &mut rng).unwrap(), 3, &mut rng);
    }

    #[test]
    fn json_round_trip() {
        let mut rng = seeded_rng(12);
        let mut nets = vec![
            SympNet::la(2, 3, 2, SIG).unwrap(),
            SympNet::g(1, 3, 7, Activation::Tanh, &mut rng).unwrap(),
            SympNet::e(5, 2, 2, 4, SIG, &mut rng).unwrap(),
        ];
        for net in &mut nets {
            randomize_params(net, &mut rng, 1.0);
            let text = serde_json::to_string(&net.to_json()).unwrap();
            let back = SympNet::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
            assert_eq!(&back, net);
        }
    }

    #[test]
    fn json_with_bad_dims_rejected() {
        let mut rng = seeded_rng(13);
        let net = SympNet::g(1, 2, 3, SIG, &mut rng).unwrap();
        let mut doc = net.to_json();
        doc["n"] = serde_json::json!(4);
        assert!(SympNet::from_json(&doc).is_err());
        let mut doc = net.to_json();
        doc["modules"][0]["params"]["k"] = serde_json::json!([[1.0, 2.0]]);
        assert!(SympNet::from_json(&doc).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn composed_nets_are_symplectic(seed in 0u64..1_000, d in prop::sample::select(vec![1usize, 2, 5])) {
            let mut rng = seeded_rng(seed);
            let mut la = SympNet::la(d, 2, 2, SIG).unwrap();
            let mut g = SympNet::g(d, 3, 8, SIG, &mut rng).unwrap();
            let mut e = SympNet::e(2 * d + 2, d, 3, 8, SIG, &mut rng).unwrap();
            randomize_params(&mut la, &mut rng, 0.5);
            randomize_params(&mut g, &mut rng, 1.0);
            randomize_params(&mut e, &mut rng, 1.0);
            let x = rng.uniform_array(&[2 * d], -1.0, 1.0);
            prop_assert!(symplectic_defect(&layer_jacobian(&la, x.data(), 1e-3).unwrap(), d) <= 1e-8);
            prop_assert!(symplectic_defect(&layer_jacobian(&g, x.data(), 1e-3).unwrap(), d) <= 1e-8);
            let xe = rng.uniform_array(&[2 * d + 2], -1.0, 1.0);
            let ye = e.forward(&xe).unwrap();
            prop_assert_eq!(&ye.data()[2 * d..], &xe.data()[2 * d..]);
            let jac = leading_block(&layer_jacobian(&e, xe.data(), 1e-3).unwrap(), 2 * d);
            prop_assert!(symplectic_defect(&jac, d) <= 1e-8);
        }
    }
}
