//! Fixtures shared by the benchmarks.

use fkdyn::dynamics::{init_state, CoupledState, DynamicsParams};
use fkdyn::{BoxGeometry, BoxSpec, FkParams};

pub fn straight_box(dim: usize, side: f64) -> BoxGeometry {
    BoxGeometry::build(BoxSpec::straight(dim, side)).expect("valid box")
}

/// A coupled state advanced by `warm` ticks.
pub fn warmed_state(geometry: &BoxGeometry, p: f64, q: f64, warm: u64) -> CoupledState<'_> {
    let dp = DynamicsParams::new(FkParams::new(p, q).expect("valid parameters"));
    let mut s = init_state(geometry, &dp, 42, 0).expect("initial state");
    for _ in 0..warm {
        s.step();
    }
    s
}
