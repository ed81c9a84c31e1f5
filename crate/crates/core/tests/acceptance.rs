//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Oracles here are written independently of the library code.

use std::collections::VecDeque;
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use fkdyn::dynamics::{init_state, marginal_check, Chain, CoupledState, DynamicsParams, InitRule};
use fkdyn::estimate::{batch_means_se, least_squares, quantile};
use fkdyn::fk::{comparison_parameter, exact_distribution, heat_bath_close_prob};
use fkdyn::geometry::alpha;
use fkdyn::harness::stats::run_replica;
use fkdyn::harness::{run_experiment, ExperimentConfig, Statistic};
use fkdyn::interface::{
    cut_edges_reach, explore_cplus, extract_minimal_cut, is_minimal_cut, is_separating, pivotal_set,
};
use fkdyn::spins::{color_triple, exact_ising_distribution, ising_beta, ising_interface_sets, IsingBoundary};
use fkdyn::{
    BoundaryCondition, BoxGeometry, BoxSpec, ClusterIndex, Conditioning, EdgeConfig, EdgeId, FkParams, Graph, Side,
    VertexId,
};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------------------------------------------------------------------------
// independent oracles

/// Union-find over vertices plus up to two ghosts.
struct Dsu(Vec<usize>);

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu((0..n).collect())
    }
    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }
    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.0[ra] = rb;
    }
}

/// Unnormalized weight `p^o (1-p)^c q^k`, where `k` counts components of the
/// graph with boundary ghosts attached.
fn oracle_weight(g: &Graph, open: &[bool], bc: BoundaryCondition, p: f64, q: f64) -> f64 {
    let n = g.vertex_count();
    let mut d = Dsu::new(n + 2);
    let (ghost_t, ghost_b) = (n, n + 1);
    let mut nodes = n;
    match bc {
        BoundaryCondition::Free => {}
        BoundaryCondition::Wired => {
            nodes += 1;
            for v in g.vertices().filter(|&v| g.side(v) != Side::Interior) {
                d.union(v.index(), ghost_t);
            }
        }
        BoundaryCondition::TopBottom => {
            nodes += 2;
            for v in g.vertices() {
                match g.side(v) {
                    Side::Top => d.union(v.index(), ghost_t),
                    Side::Bottom => d.union(v.index(), ghost_b),
                    Side::Interior => {}
                }
            }
        }
    }
    let mut o = 0i32;
    for e in g.edges() {
        if open[e.index()] {
            o += 1;
            let (a, b) = g.endpoints(e);
            d.union(a.index(), b.index());
        }
    }
    let k = (0..nodes).filter(|&i| d.find(i) == i).count();
    let c = g.edge_count() as i32 - o;
    p.powi(o) * (1.0 - p).powi(c) * q.powi(k as i32)
}

/// BFS from every top vertex through allowed edges; true if a bottom vertex
/// is reached.
fn oracle_tb_connected(g: &Graph, allowed: impl Fn(EdgeId) -> bool) -> bool {
    let mut seen = vec![false; g.vertex_count()];
    let mut queue: VecDeque<VertexId> = g.top().collect();
    for v in &queue {
        seen[v.index()] = true;
    }
    while let Some(v) = queue.pop_front() {
        if g.side(v) == Side::Bottom {
            return true;
        }
        for &e in g.incident(v) {
            let w = g.other_end(e, v);
            if allowed(e) && !seen[w.index()] {
                seen[w.index()] = true;
                queue.push_back(w);
            }
        }
    }
    false
}

fn oracle_separates(g: &Graph, set: &[EdgeId]) -> bool {
    let mut removed = vec![false; g.edge_count()];
    for e in set {
        removed[e.index()] = true;
    }
    !oracle_tb_connected(g, |e| !removed[e.index()])
}

fn oracle_pivotal(g: &Graph, y: &EdgeConfig) -> Vec<EdgeId> {
    g.edges()
        .filter(|&e| !y.is_open(e) && oracle_tb_connected(g, |f| f == e || y.is_open(f)))
        .collect()
}

fn tiny_box() -> BoxGeometry {
    BoxGeometry::build(BoxSpec::straight(2, 1.0).with_center(vec![0.5, 0.5])).unwrap()
}

fn straight(dim: usize, side: f64) -> BoxGeometry {
    BoxGeometry::build(BoxSpec::straight(dim, side)).unwrap()
}

fn state<'b>(g: &'b BoxGeometry, p: f64, q: f64, x_bc: BoundaryCondition, seed: u64) -> CoupledState<'b> {
    let dp = DynamicsParams::new(FkParams::new(p, q).unwrap())
        .with_x_bc(x_bc)
        .with_init(InitRule::AllClosed);
    init_state(g, &dp, seed, 0).unwrap()
}

/// Wired `X` started all open, `Y` all closed.
fn coupled(g: &BoxGeometry, p: f64, seed: u64) -> CoupledState<'_> {
    let dp = DynamicsParams::new(FkParams::new(p, 2.0).unwrap());
    init_state(g, &dp, seed, 0).unwrap()
}

// ---------------------------------------------------------------------------
// criteria

fn c1_y_marginal() -> Outcome {
    let g = tiny_box();
    let fk = FkParams::new(0.7, 2.0).unwrap();
    let table = exact_distribution(g.graph(), BoundaryCondition::TopBottom, &fk, Conditioning::Disconnected).unwrap();
    let mut s = state(&g, 0.7, 2.0, BoundaryCondition::Wired, 11);
    let start = Instant::now();
    let tv = marginal_check(&mut s, &table, Chain::Y, 10_000, 1_000_000, 1).unwrap();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        g.edge_count() == 4 && tv < 0.02 && secs < 30.0,
        format!("edges {} TV {tv:.5} < 0.02, {secs:.1}s < 30s", g.edge_count()),
    )
}

fn c2_x_marginal() -> Outcome {
    let g = tiny_box();
    let fk = FkParams::new(0.7, 2.0).unwrap();
    let table = exact_distribution(g.graph(), BoundaryCondition::Wired, &fk, Conditioning::None).unwrap();
    let mut s = state(&g, 0.7, 2.0, BoundaryCondition::Wired, 12);
    let tv = marginal_check(&mut s, &table, Chain::X, 10_000, 1_000_000, 1).unwrap();

    // q = 1: every edge is an independent Bernoulli(p)
    let p = 0.7;
    let mut s = state(&g, p, 1.0, BoundaryCondition::Wired, 13);
    for _ in 0..10_000 {
        s.step();
    }
    let m = g.edge_count();
    let n = 1_000_000;
    let mut series = vec![Vec::with_capacity(n); m];
    for _ in 0..n {
        s.step();
        for (i, ser) in series.iter_mut().enumerate() {
            ser.push(f64::from(u8::from(s.x_config().is_open(EdgeId(i as u32)))));
        }
    }
    let mut worst: f64 = 0.0;
    for ser in &series {
        let freq = ser.iter().sum::<f64>() / n as f64;
        let se = batch_means_se(ser, 100).unwrap();
        worst = worst.max((freq - p).abs() / se);
    }
    outcome(tv < 0.02 && worst < 3.0, format!("wired TV {tv:.5} < 0.02; q=1 max |freq-p|/SE {worst:.2} < 3"))
}

fn c3_invariants() -> Outcome {
    let cases: [(usize, f64, f64); 3] = [(2, 8.0, 0.6), (2, 16.0, 0.9), (3, 6.0, 0.75)];
    let results: Vec<(String, u64)> = cases
        .par_iter()
        .map(|&(dim, side, p)| {
            let g = straight(dim, side);
            let graph = g.graph();
            let mut s = coupled(&g, p, 3 + dim as u64);
            let mut bad = 0u64;
            let fk = FkParams::new(p, 2.0).unwrap();
            for t in 0..1_000_000u64 {
                let o = s.step();
                if o.threshold_x > o.threshold_y || (o.y_open && !o.x_open) {
                    bad += 1;
                }
                if o.y_changed && o.y_open && oracle_tb_connected(graph, |f| s.y_config().is_open(f)) {
                    bad += 1;
                }
                if t % 997 == 0 {
                    if !s.x_config().dominates(s.y_config()) {
                        bad += 1;
                    }
                    // recompute both thresholds for a random edge from scratch
                    let e = o.edge;
                    let joined = |cfg: &EdgeConfig, bc: BoundaryCondition| {
                        let mut c = cfg.clone();
                        c.set(e, false);
                        let mut idx = ClusterIndex::build(graph, c, bc).unwrap();
                        heat_bath_close_prob(&mut idx, e, &fk).unwrap()
                    };
                    let tx = joined(s.x_config(), BoundaryCondition::Wired);
                    let ty = joined(s.y_config(), BoundaryCondition::TopBottom);
                    if tx > ty + 1e-15 {
                        bad += 1;
                    }
                }
            }
            bad += s.diagnostics().violations();
            (format!("d={dim} L={side}"), bad)
        })
        .collect();
    let total: u64 = results.iter().map(|r| r.1).sum();
    let detail = results.iter().map(|(n, b)| format!("{n}: {b}")).collect::<Vec<_>>().join(", ");
    outcome(total == 0, format!("violations over 10^6 steps each: {detail}"))
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Graph {
    let mut pairs: Vec<(u32, u32)> = (0..n as u32).flat_map(|a| (a + 1..n as u32).map(move |b| (a, b))).collect();
    pairs.shuffle(rng);
    let mut sides = vec![Side::Interior; n];
    sides[0] = Side::Top;
    sides[1] = Side::Top;
    sides[2] = Side::Bottom;
    Graph::new(sides, &pairs[..m]).unwrap()
}

fn c4_heat_bath() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_graph(&mut rng, 6, 8);
    let m = g.edge_count();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_balance: f64 = 0.0;
    let mut worst_table: f64 = 0.0;
    for &(p, q) in &[(0.3, 2.0), (0.7, 2.0), (0.55, 3.7), (0.9, 1.0)] {
        let fk = FkParams::new(p, q).unwrap();
        for bc in [BoundaryCondition::Free, BoundaryCondition::Wired, BoundaryCondition::TopBottom] {
            let weights: Vec<f64> = (0..1u64 << m)
                .map(|mask| oracle_weight(&g, EdgeConfig::from_mask(mask, m).as_slice(), bc, p, q))
                .collect();
            let z: f64 = weights.iter().sum();
            let table = exact_distribution(&g, bc, &fk, Conditioning::None).unwrap();
            for (mask, w) in weights.iter().enumerate() {
                worst_table = worst_table.max((table.prob(mask as u64) - w / z).abs() / (w / z));
            }
            for mask in 0..1u64 << m {
                let cfg = EdgeConfig::from_mask(mask, m);
                let mut idx = ClusterIndex::build(&g, cfg, bc).unwrap();
                for e in g.edges() {
                    let bit = 1u64 << e.index();
                    let (w_open, w_closed) = (weights[(mask | bit) as usize], weights[(mask & !bit) as usize]);
                    let want = w_closed / (w_open + w_closed);
                    let got = heat_bath_close_prob(&mut idx, e, &fk).unwrap();
                    worst_ratio = worst_ratio.max(rel(got, want));
                    // π(ω) K(ω → ω^e) against π(ω^e) K(ω^e → ω), with ω^e the flip
                    let here = mask & bit != 0;
                    let to_flip = if here { got } else { 1.0 - got };
                    let back = if here { 1.0 - got } else { got };
                    let lhs = weights[mask as usize] * to_flip;
                    let rhs = weights[(mask ^ bit) as usize] * back;
                    worst_balance = worst_balance.max(rel(lhs, rhs));
                }
            }
        }
    }
    let tol = 1e-12;
    outcome(
        worst_ratio < tol && worst_balance < tol && worst_table < tol,
        format!(
            "{m} edges, 256 configs x 3 bcs x 4 (p,q): close-prob rel err {worst_ratio:.1e}, balance {worst_balance:.1e}, table {worst_table:.1e} < 1e-12"
        ),
    )
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn c5_ising() -> Outcome {
    let g = BoxGeometry::build(BoxSpec::straight(2, 3.0).with_center(vec![0.5, 0.5])).unwrap();
    let p = 0.75;
    let beta = ising_beta(p);
    let tables: Vec<_> = [IsingBoundary::Plus, IsingBoundary::Minus, IsingBoundary::Dobrushin]
        .iter()
        .map(|&b| exact_ising_distribution(&g, b, beta).unwrap())
        .collect();
    let literal: Vec<_> = [IsingBoundary::Plus, IsingBoundary::Minus, IsingBoundary::Dobrushin]
        .iter()
        .map(|&b| exact_ising_distribution(&g, b, 4f64.ln()).unwrap())
        .collect();
    let start = Instant::now();
    let mut s = coupled(&g, p, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let stride = 2 * g.edge_count();
    for _ in 0..100 * stride {
        s.step();
    }
    let n_free = tables[0].free.len();
    let mut counts = vec![vec![0u64; 1 << n_free]; 3];
    for _ in 0..100_000 {
        for _ in 0..stride {
            s.step();
        }
        let t = color_triple(&g, s.x_config(), s.y_config(), &mut rng).unwrap();
        for (k, sigma) in [&t.sigma_plus, &t.sigma_minus, &t.sigma_d].into_iter().enumerate() {
            counts[k][tables[k].mask_of(sigma)] += 1;
        }
    }
    let tv: Vec<f64> = (0..3).map(|k| tables[k].tv_distance(&counts[k]).unwrap()).collect();
    let tv_literal: Vec<f64> = (0..3).map(|k| literal[k].tv_distance(&counts[k]).unwrap()).collect();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        n_free == 4 && tv.iter().all(|&d| d < 0.02) && secs < 120.0,
        format!(
            "{n_free} free spins, beta {beta:.4}: TV +/-/D {:.4} {:.4} {:.4} < 0.02, {secs:.1}s; at beta=ln4: {:.3} {:.3} {:.3}",
            tv[0], tv[1], tv[2], tv_literal[0], tv_literal[1], tv_literal[2]
        ),
    )
}

fn c6_inclusion() -> Outcome {
    let g = straight(2, 10.0);
    let mut s = coupled(&g, 0.9, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(66);
    let stride = g.edge_count();
    for _ in 0..50 * stride {
        s.step();
    }
    let (mut violations, mut nonempty, mut oracle_mismatch) = (0u64, 0u64, 0u64);
    for i in 0..10_000 {
        for _ in 0..stride {
            s.step();
        }
        let t = color_triple(&g, s.x_config(), s.y_config(), &mut rng).unwrap();
        let sets = ising_interface_sets(&g, &t);
        let p = pivotal_set(&s).unwrap();
        if i % 100 == 0 && p != oracle_pivotal(g.graph(), s.y_config()) {
            oracle_mismatch += 1;
        }
        nonempty += u64::from(!p.is_empty());
        violations += p.iter().filter(|e| sets.p_i.binary_search(e).is_err()).count() as u64;
    }
    outcome(
        violations == 0 && oracle_mismatch == 0,
        format!("10^4 pairs ({nonempty} with P nonempty): {violations} edges of P outside P_I, {oracle_mismatch} pivotal oracle mismatches"),
    )
}

fn c7_cuts() -> Outcome {
    let g = straight(2, 12.0);
    let graph = g.graph();
    let mut s = coupled(&g, 0.9, 7);
    let stride = g.edge_count();
    for _ in 0..50 * stride {
        s.step();
    }
    let mut fails = [0u64; 4];
    for _ in 0..1000 {
        for _ in 0..stride {
            s.step();
        }
        let y = s.y_config();
        for side in [Side::Top, Side::Bottom] {
            let ex = explore_cplus(&g, y, side).unwrap();
            if !is_separating(graph, &ex.shell) || !oracle_separates(graph, &ex.shell) {
                fails[0] += 1;
            }
        }
        let cut = extract_minimal_cut(&g, y).unwrap();
        let minimal_by_oracle = oracle_separates(graph, &cut)
            && (0..cut.len()).all(|i| {
                let mut fewer = cut.clone();
                fewer.remove(i);
                !oracle_separates(graph, &fewer)
            });
        if !is_minimal_cut(graph, &cut) || !minimal_by_oracle {
            fails[1] += 1;
        }
        if cut.iter().any(|&e| y.is_open(e)) {
            fails[2] += 1;
        }
        let pivotal = pivotal_set(&s).unwrap();
        fails[3] += cut_edges_reach(&g, y, &cut, &pivotal).len() as u64;
    }
    outcome(
        fails.iter().all(|&f| f == 0),
        format!(
            "10^3 configs: shell not separating {}, cut not minimal {}, open cut edges {}, cut edges without closed *-path {}",
            fails[0], fails[1], fails[2], fails[3]
        ),
    )
}

fn c8_peierls() -> Outcome {
    let mut cfg = ExperimentConfig::smoke();
    cfg.box_.side = 16.0;
    cfg.model.p = Some(0.95);
    cfg.model.q = 2.0;
    cfg.dynamics.burn_in = 200 * 544;
    cfg.dynamics.steps = 3000 * 544;
    cfg.run.statistics = vec![Statistic::PeierlsDecay];
    cfg.stats.n_max = 8;
    let g = cfg.validate().unwrap();
    let start = Instant::now();
    let outs: Vec<_> = (0..4u32).into_par_iter().map(|r| run_replica(&cfg, &g, r).unwrap()).collect();
    let mut total = [0.0; 9];
    for r in outs.iter().flat_map(|o| &o.records) {
        for (t, v) in total.iter_mut().zip(&r.values) {
            *t += v.unwrap();
        }
    }
    let (ns, logs): (Vec<f64>, Vec<f64>) = (2..=8)
        .filter(|&n| total[n] > 0.0)
        .map(|n| (n as f64, (total[n] / total[0]).ln()))
        .unzip();
    let slope = least_squares(&ns, &logs).map(|(s, _)| s);
    let f = comparison_parameter(0.95, 2.0);
    let bound = (alpha(2) as f64 * (1.0 - f)).ln() + 0.5;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ns.len() >= 3 && slope.is_some_and(|s| s <= bound) && secs < 600.0,
        format!(
            "fitted slope {} over n={:?} <= ln(alpha(1-f)) + 0.5 = {bound:.4}, {secs:.1}s",
            slope.map_or("-".into(), |s| format!("{s:.4}")),
            ns
        ),
    )
}

fn c9_localization() -> Outcome {
    let sides = [8.0, 16.0, 24.0, 32.0];
    let start = Instant::now();
    let per_l: Vec<(f64, Vec<f64>)> = sides
        .par_iter()
        .map(|&side| {
            let mut cfg = ExperimentConfig::smoke();
            cfg.box_.side = side;
            cfg.model.p = Some(0.95);
            cfg.run.statistics = vec![Statistic::LocalizationFk];
            let g = cfg.validate().unwrap();
            let m = g.edge_count() as u64;
            cfg.dynamics.burn_in = 200 * m;
            cfg.dynamics.steps = 6000 * m;
            let vals: Vec<f64> = (0..4u32)
                .into_par_iter()
                .map(|r| run_replica(&cfg, &g, r).unwrap())
                .collect::<Vec<_>>()
                .iter()
                .flat_map(|o| o.records.iter().map(|r| r.values[1].unwrap_or(0.0)))
                .collect();
            ((g.vertex_count() as f64).ln().powi(2), vals)
        })
        .collect();
    let q99: Vec<f64> = per_l.iter().map(|(_, v)| quantile(v, 0.99).unwrap()).collect();
    let xs: Vec<f64> = per_l.iter().map(|(x, _)| *x).collect();
    let ratios: Vec<f64> = q99.iter().zip(&xs).map(|(q, x)| q / x).collect();
    let ratio_ok = ratios.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    // smallest a with q99 <= a ln^2|V| at every size
    let a = ratios.iter().copied().fold(0.0, f64::max);
    let exceedance = |a: f64| -> Vec<f64> {
        per_l
            .iter()
            .map(|(x, v)| v.iter().filter(|&&d| d > a * x).count() as f64 / v.len() as f64)
            .collect()
    };
    let exceed = exceedance(a);
    // consecutive sizes may not rise by more than two binomial standard
    // errors, and the largest box may not sit above the smallest
    let n = per_l.iter().map(|(_, v)| v.len()).min().unwrap() as f64;
    let exceed_ok = exceed.windows(2).all(|w| {
        let pooled = (w[0] + w[1]) / 2.0;
        w[1] <= w[0] + 2.0 * (2.0 * pooled * (1.0 - pooled) / n).sqrt()
    }) && exceed[exceed.len() - 1] <= exceed[0];
    let a_ls = xs.iter().zip(&q99).map(|(x, q)| x * q).sum::<f64>() / xs.iter().map(|x| x * x).sum::<f64>();
    let fmt = |v: &[f64]| v.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(" ");
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ratio_ok && exceed_ok && secs < 1800.0,
        format!(
            "q99 {q99:?}; q99/ln^2|V| [{}] non-increasing; a = {a:.4}, exceedance at a ln^2|V| [{}] decreasing within 2 SE; (least-squares a = {a_ls:.4}: [{}]) {secs:.1}s",
            fmt(&ratios),
            fmt(&exceed),
            fmt(&exceedance(a_ls))
        ),
    )
}

fn c10_determinism() -> Outcome {
    let tmp = std::env::temp_dir().join(format!("fkdyn-acceptance-{}", std::process::id()));
    let run = |sub: &str| {
        let mut cfg = ExperimentConfig::smoke();
        cfg.dynamics.steps = 20_000;
        cfg.run.replicas = 3;
        cfg.run.output = Some(tmp.join(sub));
        run_experiment(&cfg).unwrap();
        let read = |f: &str| std::fs::read(tmp.join(sub).join(f)).unwrap();
        (
            read("records.jsonl"),
            read("summary.txt"),
            read("checkpoints/replica-002.ckpt"),
        )
    };
    let a = run("a");
    let b = run("b");
    let _ = std::fs::remove_dir_all(&tmp);
    outcome(
        a == b,
        format!("records {} bytes, summary and checkpoints identical: {}", a.0.len(), a == b),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("exact Y marginal", c1_y_marginal),
        ("exact X marginal", c2_x_marginal),
        ("coupling invariants", c3_invariants),
        ("heat-bath correctness", c4_heat_bath),
        ("Ising marginals", c5_ising),
        ("P subset of P_I", c6_inclusion),
        ("cut machinery", c7_cuts),
        ("Peierls trend", c8_peierls),
        ("localization trend", c9_localization),
        ("determinism", c10_determinism),
    ];
    // the harness passes libtest flags; a bare word filters by number
    let only: Option<usize> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.is_some_and(|k| k != n) {
            continue;
        }
        let start = Instant::now();
        let o = f();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2} {verdict} {name}: {} [{:.1}s]", o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
