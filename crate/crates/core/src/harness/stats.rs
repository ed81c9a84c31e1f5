//! Per-sample statistics and the per-replica driver that produces them.

use std::collections::{BTreeMap, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{init_state, CoupledState, Diagnostics};
use crate::error::Result;
use crate::geometry::{BoxGeometry, EdgeId, Side, VertexId};
use crate::harness::config::{ExperimentConfig, Statistic};
use crate::interface::{
    distance_to_pivotal, explore_cplus, extract_minimal_cut_from, gamma_lengths, hausdorff_semi_distance,
    interface_set, pivotal_set,
};
use crate::spins::{color_triple, ising_interface_sets, SpinCutMap, SpinTriple};

/// One measured value, tagged with where it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub replica: u32,
    pub step: u64,
    pub stat: Statistic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    /// `None` for an empty maximum or an infinite distance.
    pub values: Vec<Option<f64>>,
    pub seed: u64,
    pub stream: u64,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn max_opt(it: impl Iterator<Item = f64>) -> Option<f64> {
    it.reduce(f64::max)
}

/// `[max over P ∪ I, max over I]` of `d(e, Λᶜ ∪ P ∖ {e})`.
pub fn stat_localization_fk(state: &CoupledState<'_>) -> Result<Vec<Option<f64>>> {
    let g = state.geometry();
    let interface = interface_set(state);
    let pivotal = pivotal_set(state)?;
    let d = |e: &EdgeId| distance_to_pivotal(g, *e, &pivotal);
    let over_i = max_opt(interface.iter().map(d));
    let over_p = max_opt(pivotal.iter().map(d));
    let both = match (over_i, over_p) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    Ok(vec![both, over_i])
}

/// `max d(e, Λᶜ ∪ P_I)` over `e ∈ I_I`.
pub fn stat_localization_ising(geometry: &BoxGeometry, triple: &SpinTriple) -> Vec<Option<f64>> {
    let sets = ising_interface_sets(geometry, triple);
    let v = max_opt(sets.i_i.iter().map(|&e| {
        let mut d = geometry.complement_distance(e);
        for &f in &sets.p_i {
            d = d.min(geometry.edge_distance(e, f));
        }
        d
    }));
    vec![v]
}

/// Distances from mismatched vertices to the canonical spin cut separating
/// them from the far side: `[σ⁺=+1,σᴰ=−1 vs B; σ⁻=−1,σᴰ=+1 vs T; overall;
/// overall over vertices farther than trim from Λᶜ]`.
pub fn stat_spin_mismatch(geometry: &BoxGeometry, triple: &SpinTriple, trim: f64) -> Result<Vec<Option<f64>>> {
    let to_b = SpinCutMap::build(geometry, &triple.sigma_d, Side::Bottom)?;
    let to_t = SpinCutMap::build(geometry, &triple.sigma_d, Side::Top)?;
    let mut first: Option<f64> = None;
    let mut second: Option<f64> = None;
    let mut trimmed: Option<f64> = None;
    let bump = |slot: &mut Option<f64>, d: f64| *slot = Some(slot.map_or(d, |m| m.max(d)));
    for v in geometry.graph().vertices() {
        let i = v.index();
        let mut hits = Vec::with_capacity(2);
        if triple.sigma_plus[i] == 1 && triple.sigma_d[i] == -1 {
            if let Some(d) = to_b.query(geometry, v).distance {
                bump(&mut first, d);
                hits.push(d);
            }
        }
        if triple.sigma_minus[i] == -1 && triple.sigma_d[i] == 1 {
            if let Some(d) = to_t.query(geometry, v).distance {
                bump(&mut second, d);
                hits.push(d);
            }
        }
        if geometry.vertex_complement_distance(v) > trim {
            for d in hits {
                bump(&mut trimmed, d);
            }
        }
    }
    let overall = match (first, second) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, b) => a.or(b),
    };
    Ok(vec![first.and_then(finite), second.and_then(finite), overall.and_then(finite), trimmed.and_then(finite)])
}

/// Closed-path counts: `[probes, #(len ≥ 1), …, #(len ≥ n_max)]`, pooled
/// over both sides.
pub fn stat_peierls(state: &CoupledState<'_>, probes: &[EdgeId], n_max: usize) -> Result<Vec<Option<f64>>> {
    let g = state.geometry();
    let y = state.y_config();
    let mut counts = vec![0u64; n_max + 1];
    for side in [Side::Top, Side::Bottom] {
        let ex = explore_cplus(g, y, side)?;
        for &e in probes {
            let len = gamma_lengths(g, y, &ex, e, n_max);
            for c in counts.iter_mut().take(len + 1).skip(1) {
                *c += 1;
            }
        }
    }
    counts[0] = 2 * probes.len() as u64;
    Ok(counts.into_iter().map(|c| Some(c as f64)).collect())
}

/// For every edge, the larger distance to the two canonical cuts.
fn cut_clearance(state: &CoupledState<'_>) -> Result<Vec<f64>> {
    let g = state.geometry();
    let cuts = [
        extract_minimal_cut_from(g, state.y_config(), Side::Top)?,
        extract_minimal_cut_from(g, state.y_config(), Side::Bottom)?,
    ];
    Ok(g.graph()
        .edges()
        .map(|e| {
            cuts.iter()
                .map(|c| c.iter().map(|&f| g.edge_distance(e, f)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max)
        })
        .collect())
}

struct SpeedProbe {
    t: u64,
    clearance: Vec<f64>,
    remaining: usize,
}

struct DriftWindow {
    t: u64,
    pivotal: Vec<EdgeId>,
    max: f64,
}

/// Everything one replica produced.
#[derive(Clone, Debug)]
pub struct ReplicaOutput {
    pub replica: u32,
    pub records: Vec<ObservableRecord>,
    pub checkpoint: crate::dynamics::Checkpoint,
    pub diagnostics: Diagnostics,
}

/// Runs one replica: burn-in, then `steps` ticks with a sample every stride.
pub fn run_replica(cfg: &ExperimentConfig, geometry: &BoxGeometry, replica: u32) -> Result<ReplicaOutput> {
    let seed = cfg.run.seed;
    let dyn_stream = 2 * u64::from(replica);
    let color_stream = dyn_stream + 1;
    let mut state = init_state(geometry, &cfg.dynamics_params()?, seed, dyn_stream)?;
    let mut color_rng = ChaCha8Rng::seed_from_u64(seed);
    color_rng.set_stream(color_stream);

    let stats = &cfg.run.statistics;
    let want = |s: Statistic| stats.contains(&s);
    let st = &cfg.stats;
    let stride = cfg.stride(geometry);
    let window = cfg.window(geometry);
    let probes: Vec<EdgeId> = geometry
        .graph()
        .edges()
        .filter(|&e| geometry.complement_distance(e) >= st.probe_margin)
        .collect();
    let track_pivotal = want(Statistic::PivotalSpeed) || want(Statistic::SemidistanceDrift);

    for _ in 0..cfg.dynamics.burn_in {
        state.step();
    }

    let mut records = Vec::new();
    let push = |records: &mut Vec<ObservableRecord>, step: u64, stat: Statistic, key: Option<String>, values: Vec<Option<f64>>, stream: u64| {
        records.push(ObservableRecord {
            replica,
            step,
            stat,
            key,
            values,
            seed,
            stream,
        })
    };

    let mut probes_pending: BTreeMap<u64, Vec<(u64, u64)>> = BTreeMap::new();
    let mut speed_probes: HashMap<u64, SpeedProbe> = HashMap::new();
    let mut drift: Vec<DriftWindow> = Vec::new();
    let mut current_p: Vec<EdgeId> = if track_pivotal { pivotal_set(&state)? } else { Vec::new() };

    for i in 1..=cfg.dynamics.steps {
        let o = state.step();
        let t = state.time();
        if track_pivotal && o.y_changed {
            current_p = pivotal_set(&state)?;
            for w in drift.iter_mut() {
                w.max = w.max.max(hausdorff_semi_distance(geometry, &w.pivotal, &current_p, st.drift_ell));
            }
        }
        // windows and probes that come due at this tick
        while drift.first().is_some_and(|w| t - w.t >= window) {
            let w = drift.remove(0);
            push(&mut records, w.t, Statistic::SemidistanceDrift, None, vec![finite(w.max)], dyn_stream);
        }
        if let Some(due) = probes_pending.remove(&t) {
            for (id, s) in due {
                let probe = speed_probes.get_mut(&id).expect("pending probe");
                let mut values = Vec::with_capacity(2 * st.ell_grid.len());
                for &ell in &st.ell_grid {
                    let (mut num, mut den) = (0u64, 0u64);
                    for e in geometry.graph().edges() {
                        if geometry.complement_distance(e) > ell && probe.clearance[e.index()] >= ell {
                            den += 1;
                            num += u64::from(current_p.binary_search(&e).is_ok());
                        }
                    }
                    values.push(Some(num as f64));
                    values.push(Some(den as f64));
                }
                let probe_t = probe.t;
                probe.remaining -= 1;
                if probe.remaining == 0 {
                    speed_probes.remove(&id);
                }
                push(&mut records, probe_t, Statistic::PivotalSpeed, Some(format!("s={s}")), values, dyn_stream);
            }
        }

        if i % stride != 0 {
            continue;
        }
        if want(Statistic::LocalizationFk) {
            let v = stat_localization_fk(&state)?;
            push(&mut records, t, Statistic::LocalizationFk, None, v, dyn_stream);
        }
        if want(Statistic::LocalizationIsing) || want(Statistic::SpinMismatch) {
            let triple = color_triple(geometry, state.x_config(), state.y_config(), &mut color_rng)?;
            if want(Statistic::LocalizationIsing) {
                let v = stat_localization_ising(geometry, &triple);
                push(&mut records, t, Statistic::LocalizationIsing, None, v, color_stream);
            }
            if want(Statistic::SpinMismatch) {
                let v = stat_spin_mismatch(geometry, &triple, st.trim)?;
                push(&mut records, t, Statistic::SpinMismatch, None, v, color_stream);
            }
        }
        if want(Statistic::PeierlsDecay) {
            let v = stat_peierls(&state, &probes, st.n_max)?;
            push(&mut records, t, Statistic::PeierlsDecay, None, v, dyn_stream);
        }
        if want(Statistic::PivotalSpeed) {
            let due: Vec<u64> = st.s_grid.iter().copied().filter(|&s| i + s <= cfg.dynamics.steps).collect();
            if !due.is_empty() {
                let id = t;
                speed_probes.insert(
                    id,
                    SpeedProbe {
                        t,
                        clearance: cut_clearance(&state)?,
                        remaining: due.len(),
                    },
                );
                for s in due {
                    probes_pending.entry(t + s).or_default().push((id, s));
                }
            }
        }
        if want(Statistic::SemidistanceDrift) && i + window <= cfg.dynamics.steps {
            drift.push(DriftWindow {
                t,
                pivotal: current_p.clone(),
                max: 0.0,
            });
        }
    }
    Ok(ReplicaOutput {
        replica,
        records,
        checkpoint: state.checkpoint(),
        diagnostics: *state.diagnostics(),
    })
}

/// Vertex whose spin cut is farthest; used by the regression fixtures.
pub fn farthest_mismatch(geometry: &BoxGeometry, triple: &SpinTriple) -> Result<Option<(VertexId, f64)>> {
    let to_b = SpinCutMap::build(geometry, &triple.sigma_d, Side::Bottom)?;
    let mut best: Option<(VertexId, f64)> = None;
    for v in geometry.graph().vertices() {
        let i = v.index();
        if triple.sigma_plus[i] == 1 && triple.sigma_d[i] == -1 {
            if let Some(d) = to_b.query(geometry, v).distance {
                if best.is_none_or(|(_, b)| d > b) {
                    best = Some((v, d));
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DynamicsParams, InitRule};
    use crate::edge_config::EdgeConfig;
    use crate::fk::FkParams;
    use crate::geometry::BoxSpec;

    fn box_side(l: f64) -> BoxGeometry {
        BoxGeometry::build(BoxSpec::straight(2, l)).unwrap()
    }

    #[test]
    fn localization_fk_cases() {
        let b = box_side(6.0);
        let m = b.edge_count();
        // identical chains: no interface, only the lateral pivotal edges
        let dp = DynamicsParams::new(FkParams::new(0.5, 2.0).unwrap()).with_init(InitRule::AllClosed);
        let s = init_state(&b, &dp, 1, 0).unwrap();
        let v = stat_localization_fk(&s).unwrap();
        assert_eq!(v[1], None);
        assert!(v[0].is_some());

        // an interface edge next to a pivotal one
        let gap = b.edge_between(&[0, 0], &[0, 1]).unwrap();
        let mut y = EdgeConfig::all_closed(m);
        for h in -3..3 {
            let e = b.edge_between(&[0, h], &[0, h + 1]).unwrap();
            if e != gap {
                y.set(e, true);
            }
        }
        let mut x = y.clone();
        let neighbour = b.edge_between(&[1, 0], &[1, 1]).unwrap();
        x.set(neighbour, true);
        let dp = dp.with_init(InitRule::Supplied { x, y });
        let s = init_state(&b, &dp, 1, 0).unwrap();
        let v = stat_localization_fk(&s).unwrap();
        assert_eq!(v[1], Some(1.0));
    }

    #[test]
    fn mismatch_null_when_spins_agree() {
        let b = box_side(4.0);
        let c = EdgeConfig::all_closed(40);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let t = color_triple(&b, &c, &c, &mut rng).unwrap();
        // σ⁺ = σᴰ off the boundary; on B σ⁺ = +1, σᴰ = −1 but B vertices
        // are never separated from B
        let v = stat_spin_mismatch(&b, &t, 0.0).unwrap();
        assert_eq!(v[0], None);
        assert_eq!(v[1], None);
    }

    #[test]
    fn mismatch_components_are_consistent() {
        let b = box_side(6.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dp = DynamicsParams::new(FkParams::new(0.6, 2.0).unwrap());
        let mut s = init_state(&b, &dp, 7, 0).unwrap();
        for _ in 0..20 {
            for _ in 0..500 {
                s.step();
            }
            let t = color_triple(&b, s.x_config(), s.y_config(), &mut rng).unwrap();
            let v = stat_spin_mismatch(&b, &t, 1.0).unwrap();
            let overall = match (v[0], v[1]) {
                (Some(a), Some(c)) => Some(a.max(c)),
                (a, c) => a.or(c),
            };
            assert_eq!(v[2], overall);
            if let Some(tr) = v[3] {
                assert!(tr <= v[2].unwrap());
            }
            assert!(v.iter().flatten().all(|&d| d >= 0.0));
            if let Some((_, d)) = farthest_mismatch(&b, &t).unwrap() {
                assert_eq!(Some(d), v[0]);
            }
        }
    }

    #[test]
    fn replica_is_deterministic() {
        let mut cfg = ExperimentConfig::smoke();
        cfg.dynamics.steps = 3000;
        cfg.dynamics.burn_in = 500;
        cfg.stats.s_grid = vec![1, 10];
        cfg.stats.window = Some(50);
        let g = cfg.validate().unwrap();
        let a = run_replica(&cfg, &g, 0).unwrap();
        let b = run_replica(&cfg, &g, 0).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.diagnostics.violations(), 0);
        let c = run_replica(&cfg, &g, 1).unwrap();
        assert_ne!(a.records, c.records);
        for stat in Statistic::ALL {
            assert!(a.records.iter().any(|r| r.stat == stat), "{stat:?} missing");
        }
        // drift at s = 0 is zero, and windows never shrink the maximum
        assert!(a
            .records
            .iter()
            .filter(|r| r.stat == Statistic::SemidistanceDrift)
            .all(|r| r.values[0].is_none_or(|v| v >= 0.0)));
        // pivotal-speed numerators never exceed denominators
        for r in a.records.iter().filter(|r| r.stat == Statistic::PivotalSpeed) {
            for pair in r.values.chunks(2) {
                assert!(pair[0].unwrap() <= pair[1].unwrap());
            }
        }
        // peierls counts are non-increasing in n
        for r in a.records.iter().filter(|r| r.stat == Statistic::PeierlsDecay) {
            let c: Vec<f64> = r.values.iter().map(|v| v.unwrap()).collect();
            assert!(c[1..].windows(2).all(|w| w[0] >= w[1]));
            assert!(c[1] <= c[0]);
        }
    }

    #[test]
    fn peierls_counts_on_all_closed() {
        let b = box_side(6.0);
        let dp = DynamicsParams::new(FkParams::new(0.5, 2.0).unwrap()).with_init(InitRule::AllClosed);
        let s = init_state(&b, &dp, 1, 0).unwrap();
        let probes: Vec<EdgeId> = b.graph().edges().filter(|&e| b.complement_distance(e) >= 1.0).collect();
        let v = stat_peierls(&s, &probes, 4).unwrap();
        // every probe below the top shell has long closed paths there
        assert!(v[4].unwrap() > 0.0);
        assert_eq!(v[0].unwrap(), 2.0 * probes.len() as f64);
    }
}
