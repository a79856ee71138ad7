//! Bundled experiment configs with the published architectures and
//! iteration budgets.

use pnn_core::numcore::Activation;
use pnn_core::pnn::{LossKind, ModelKind, ModelSpec, PhiSpec, ThetaSpec};
use pnn_core::sympnet::SympNetKind;
use pnn_core::systems::{IntegratorConfig, RenderConfig, SystemSpec};
use pnn_core::train::TrainConfig;

use crate::config::{DataSpec, EvalSpec, ExperimentConfig, Initial};

pub const RECIPES: [&str; 9] = [
    "lv_pnn",
    "lv_sympnet3",
    "lv_sympnet1",
    "pendulum_ext",
    "lorentz_vp",
    "lorentz_nvp",
    "lorentz_vpnn",
    "al_n20",
    "twobody",
];

/// Recipe used by `--system` shorthands.
pub fn recipe_for_system(system: &str) -> Option<&'static str> {
    Some(match system {
        "lv" | "lotka_volterra" => "lv_pnn",
        "pendulum" | "extended_pendulum" => "pendulum_ext",
        "lorentz" => "lorentz_vp",
        "al" | "ablowitz_ladik" => "al_n20",
        "twobody" | "two_body" => "twobody",
        _ => return None,
    })
}

fn data(h: f64, initial: Initial, train_steps: usize, test_steps: usize) -> DataSpec {
    DataSpec {
        h,
        initial,
        train_steps,
        test_steps,
        integrator: IntegratorConfig::default(),
        render: None,
        refine: 1,
    }
}

fn coupling(vp: bool, partition: usize, layers: usize, sublayers: usize, width: usize) -> ThetaSpec {
    if vp {
        ThetaSpec::Vp {
            partition,
            layers,
            sublayers,
            width,
        }
    } else {
        ThetaSpec::Nvp {
            partition,
            layers,
            sublayers,
            width,
        }
    }
}

fn phi(kind: SympNetKind, layers: usize, width: usize) -> PhiSpec {
    PhiSpec {
        kind,
        layers,
        sublayers: None,
        width: Some(width),
    }
}

fn model(
    kind: ModelKind,
    theta: Option<ThetaSpec>,
    phi: Option<PhiSpec>,
    latent: Option<usize>,
    m: usize,
) -> ModelSpec {
    ModelSpec {
        model: kind,
        theta,
        phi,
        latent,
        m,
        activation: Activation::Sigmoid,
    }
}

fn train(iterations: usize, loss: Option<LossKind>) -> TrainConfig {
    TrainConfig {
        iterations,
        loss,
        log_interval: (iterations / 100).max(1),
        ..Default::default()
    }
}

fn lv_states() -> Initial {
    Initial::States(vec![vec![1.0, 0.8], vec![1.0, 1.0], vec![1.0, 1.2]])
}

pub fn recipe(name: &str) -> Option<ExperimentConfig> {
    let cfg = |system, data, model, train| ExperimentConfig {
        name: name.to_string(),
        system,
        data,
        model,
        train,
        eval: EvalSpec::default(),
        output: None,
    };
    let lorentz = || {
        (
            SystemSpec::Lorentz { full: false },
            data(0.1, Initial::States(vec![vec![1.0, 0.5, 0.5, 1.0]]), 1500, 300),
        )
    };
    Some(match name {
        "lv_pnn" => cfg(
            SystemSpec::LotkaVolterra,
            data(0.1, lv_states(), 100, 0),
            model(
                ModelKind::Pnn,
                Some(coupling(false, 1, 3, 2, 30)),
                Some(phi(SympNetKind::G, 3, 30)),
                None,
                1,
            ),
            train(200_000, None),
        ),
        "lv_sympnet3" | "lv_sympnet1" => {
            let initial = if name == "lv_sympnet3" {
                lv_states()
            } else {
                Initial::States(vec![vec![1.0, 1.0]])
            };
            cfg(
                SystemSpec::LotkaVolterra,
                data(0.1, initial, 100, 0),
                model(ModelKind::Sympnet, None, Some(phi(SympNetKind::G, 6, 30)), None, 1),
                train(200_000, None),
            )
        }
        "pendulum_ext" => cfg(
            SystemSpec::ExtendedPendulum,
            data(
                0.1,
                Initial::States(vec![
                    vec![0.0, 1.0, 1.0],
                    vec![0.0, 1.5, 1.5 * 1.5 + 0.1],
                    vec![0.0, 2.0, 4.0 + 0.2],
                ]),
                100,
                1000,
            ),
            model(
                ModelKind::Pnn,
                Some(coupling(false, 2, 3, 2, 30)),
                Some(phi(SympNetKind::E, 3, 30)),
                Some(2),
                1,
            ),
            train(100_000, None),
        ),
        "lorentz_vp" | "lorentz_nvp" => {
            let (system, data) = lorentz();
            cfg(
                system,
                data,
                model(
                    ModelKind::Pnn,
                    Some(coupling(name == "lorentz_vp", 2, 10, 3, 50)),
                    Some(phi(SympNetKind::G, 10, 50)),
                    None,
                    1,
                ),
                train(2_000_000, None),
            )
        }
        "lorentz_vpnn" => {
            let (system, data) = lorentz();
            cfg(
                system,
                data,
                model(ModelKind::Vpnn, Some(coupling(true, 2, 20, 3, 50)), None, None, 1),
                train(2_000_000, None),
            )
        }
        "al_n20" => cfg(
            SystemSpec::AblowitzLadik { sites: 20 },
            data(0.01, Initial::AlProfile, 500, 100),
            model(
                ModelKind::Pnn,
                Some(coupling(false, 20, 3, 2, 100)),
                Some(phi(SympNetKind::G, 10, 100)),
                None,
                1,
            ),
            train(1_000_000, None),
        ),
        "twobody" => {
            // Unequal masses: with equal ones, frames half a period apart show
            // the balls swapped and the movie revisits the same image.
            let mut d = data(0.6, Initial::Kepler { a: 1.0, e: 0.1 }, 100, 300);
            d.render = Some(RenderConfig::default());
            d.refine = 2;
            let mut c = cfg(
                SystemSpec::TwoBody {
                    masses: [1.0, 0.5],
                    gravity: 1.0,
                },
                d,
                model(
                    ModelKind::Pnn,
                    Some(ThetaSpec::Ae { layers: 2, width: 50 }),
                    Some(PhiSpec {
                        kind: SympNetKind::La,
                        layers: 3,
                        sublayers: Some(2),
                        width: None,
                    }),
                    Some(2),
                    2,
                ),
                train(500_000, Some(LossKind::Alternative { lambda: 1.0 })),
            );
            c.eval.eps = 0.02;
            c
        }
        _ => return None,
    })
}
