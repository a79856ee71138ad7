//! Benchmark Poisson systems, their canonical coordinates, a
//! structure-preserving integrator and a ball renderer for image data.

mod bracket;
mod integrate;
mod render;
mod spec;

pub use bracket::{check_poisson_bracket, BracketReport, BRACKET_FD_STEP};
pub use integrate::{
    generate_trajectory, generate_trajectory_direct, integrate, midpoint_step, rk4, step, IntegratorConfig, Scheme,
};
pub use render::{read_pgm, render_two_body, write_pgm, PixelMovie, RenderConfig, Viewport};
pub use spec::{al_sigma, al_tau, vector_potential, SystemSpec};
