//! The coupled heat-bath chain `(X_t, Y_t)`.
//!
//! Both chains see the same edge `E_t` and uniform `U_t` at every tick. `X`
//! is the plain heat-bath chain; `Y` runs under the top/bottom boundary
//! condition and refuses any opening that would join the top to the bottom.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connectivity::{BoundaryCondition, ClusterIndex};
use crate::edge_config::EdgeConfig;
use crate::error::{Error, Result};
use crate::fk::{ExactTable, FkParams};
use crate::geometry::{BoxGeometry, BoxSpec, EdgeId};

const CHECKPOINT_HEADER: &str = "fkdyn-checkpoint v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitRule {
    AllClosed,
    XOpenYClosed,
    #[serde(skip)]
    Supplied { x: EdgeConfig, y: EdgeConfig },
}

#[derive(Clone, Debug)]
pub struct DynamicsParams {
    pub fk: FkParams,
    pub init: InitRule,
    pub x_bc: BoundaryCondition,
    pub burn_in: u64,
    pub steps: u64,
}

impl DynamicsParams {
    pub fn new(fk: FkParams) -> Self {
        DynamicsParams {
            fk,
            init: InitRule::XOpenYClosed,
            x_bc: BoundaryCondition::Wired,
            burn_in: 0,
            steps: 0,
        }
    }

    pub fn with_init(mut self, init: InitRule) -> Self {
        self.init = init;
        self
    }

    pub fn with_x_bc(mut self, bc: BoundaryCondition) -> Self {
        self.x_bc = bc;
        self
    }
}

/// What happened at one tick.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub edge: EdgeId,
    pub u: f64,
    pub threshold_x: f64,
    pub threshold_y: f64,
    pub x_open: bool,
    pub y_open: bool,
    /// `Y` wanted to open but the edge would have joined `T` to `B`.
    pub vetoed: bool,
    pub x_changed: bool,
    pub y_changed: bool,
}

/// Per-chain counters of invariant checks, updated on every tick.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub steps: u64,
    pub vetoes: u64,
    pub dominance_violations: u64,
    pub disconnection_violations: u64,
    pub threshold_violations: u64,
}

impl Diagnostics {
    pub fn violations(&self) -> u64 {
        self.dominance_violations + self.disconnection_violations + self.threshold_violations
    }
}

pub struct CoupledState<'b> {
    geometry: &'b BoxGeometry,
    params: FkParams,
    x: ClusterIndex<'b>,
    y: ClusterIndex<'b>,
    t: u64,
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
    diagnostics: Diagnostics,
}

impl<'b> CoupledState<'b> {
    pub fn geometry(&self) -> &'b BoxGeometry {
        self.geometry
    }

    pub fn params(&self) -> &FkParams {
        &self.params
    }

    pub fn x_config(&self) -> &EdgeConfig {
        self.x.config()
    }

    pub fn y_config(&self) -> &EdgeConfig {
        self.y.config()
    }

    pub fn x_index(&self) -> &ClusterIndex<'b> {
        &self.x
    }

    pub fn y_index(&self) -> &ClusterIndex<'b> {
        &self.y
    }

    pub fn x_bc(&self) -> BoundaryCondition {
        self.x.boundary_condition()
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// Draws `(E_t, U_t)` and applies the update.
    pub fn step(&mut self) -> StepOutcome {
        let m = self.geometry.edge_count() as u32;
        let e = EdgeId(self.rng.gen_range(0..m));
        let u: f64 = self.rng.gen();
        self.update(e, u)
    }

    /// Applies the update for a given edge and uniform without touching the
    /// random stream.
    pub fn step_with(&mut self, e: EdgeId, u: f64) -> Result<StepOutcome> {
        self.geometry.graph().check_edge(e)?;
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Params(format!("uniform {u} outside [0, 1]")));
        }
        Ok(self.update(e, u))
    }

    fn update(&mut self, e: EdgeId, u: f64) -> StepOutcome {
        let p = &self.params;
        let threshold_x = if self.x.joined_without(e) {
            p.close_if_joined()
        } else {
            p.close_if_split()
        };
        let threshold_y = if self.y.joined_without(e) {
            p.close_if_joined()
        } else {
            p.close_if_split()
        };
        let x_open = u >= threshold_x;
        let (y_open, vetoed) = if u < threshold_y {
            (false, false)
        } else if self.y.bridges_tb(e) {
            (false, true)
        } else {
            (true, false)
        };
        let x_changed = self.x.config().is_open(e) != x_open;
        let y_changed = self.y.config().is_open(e) != y_open;
        self.x.flip(e, x_open);
        self.y.flip(e, y_open);
        self.t += 1;

        let d = &mut self.diagnostics;
        d.steps += 1;
        d.vetoes += u64::from(vetoed);
        if threshold_x > threshold_y {
            d.threshold_violations += 1;
            debug_assert!(
                self.x.boundary_condition() != BoundaryCondition::Wired,
                "threshold ordering failed under the wired X chain"
            );
        }
        if y_open && !x_open {
            d.dominance_violations += 1;
        }
        if self.y.top_bottom_connected().unwrap_or(false) {
            d.disconnection_violations += 1;
        }
        StepOutcome {
            edge: e,
            u,
            threshold_x,
            threshold_y,
            x_open,
            y_open,
            vetoed,
            x_changed,
            y_changed,
        }
    }

    /// Whole-state check of `X ≥ Y` and `T ↛ B` in `Y`.
    pub fn check_invariants(&self) -> Result<()> {
        check_pair(self.x.config(), &self.y)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            box_spec: self.geometry.spec().clone(),
            params: self.params,
            x_bc: self.x.boundary_condition(),
            t: self.t,
            seed: self.seed,
            stream: self.stream,
            word_pos: self.rng.get_word_pos(),
            x: self.x.config().clone(),
            y: self.y.config().clone(),
        }
    }

    /// Rebuilds a state from a checkpoint taken on the same geometry.
    pub fn restore(geometry: &'b BoxGeometry, cp: &Checkpoint) -> Result<Self> {
        if geometry.spec() != &cp.box_spec {
            return Err(Error::InvalidState("checkpoint was taken on a different box".into()));
        }
        let mut s = build_state(geometry, cp.params, cp.x_bc, cp.x.clone(), cp.y.clone(), cp.seed, cp.stream)?;
        s.t = cp.t;
        s.rng.set_word_pos(cp.word_pos);
        Ok(s)
    }
}

fn check_pair(x: &EdgeConfig, y: &ClusterIndex<'_>) -> Result<()> {
    if !x.dominates(y.config()) {
        return Err(Error::InvalidState("X does not dominate Y".into()));
    }
    if y.top_bottom_connected()? {
        return Err(Error::TopBottomConnected);
    }
    Ok(())
}

fn build_state<'b>(
    geometry: &'b BoxGeometry,
    params: FkParams,
    x_bc: BoundaryCondition,
    x: EdgeConfig,
    y: EdgeConfig,
    seed: u64,
    stream: u64,
) -> Result<CoupledState<'b>> {
    let g = geometry.graph();
    let x = ClusterIndex::build(g, x, x_bc)?;
    let y = ClusterIndex::build(g, y, BoundaryCondition::TopBottom)?;
    check_pair(x.config(), &y)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    Ok(CoupledState {
        geometry,
        params,
        x,
        y,
        t: 0,
        seed,
        stream,
        rng,
        diagnostics: Diagnostics::default(),
    })
}

/// Builds the initial pair; `stream` selects an independent random stream
/// under the same seed (one per replica).
pub fn init_state<'b>(geometry: &'b BoxGeometry, dparams: &DynamicsParams, seed: u64, stream: u64) -> Result<CoupledState<'b>> {
    let m = geometry.edge_count();
    let (x, y) = match &dparams.init {
        InitRule::AllClosed => (EdgeConfig::all_closed(m), EdgeConfig::all_closed(m)),
        InitRule::XOpenYClosed => (EdgeConfig::all_open(m), EdgeConfig::all_closed(m)),
        InitRule::Supplied { x, y } => (x.clone(), y.clone()),
    };
    build_state(geometry, dparams.fk, dparams.x_bc, x, y, seed, stream)
}

/// Sampled by [`run`] every `stride()` ticks.
pub trait Observer {
    fn stride(&self) -> u64;
    fn observe(&mut self, state: &CoupledState<'_>) -> Result<()>;
}

/// Advances `n_steps` ticks, calling each observer whenever the clock is a
/// multiple of its stride. An observer error stops the run at that tick;
/// whatever the observers accumulated so far stays with them.
pub fn run(state: &mut CoupledState<'_>, n_steps: u64, observers: &mut [&mut dyn Observer]) -> Result<()> {
    for _ in 0..n_steps {
        state.step();
        for obs in observers.iter_mut() {
            let stride = obs.stride().max(1);
            if state.t.is_multiple_of(stride) {
                obs.observe(state).map_err(|e| Error::Observer(format!("at t={}: {e}", state.t)))?;
            }
        }
    }
    Ok(())
}

/// Serializable snapshot sufficient to resume a chain bit-exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub box_spec: BoxSpec,
    pub params: FkParams,
    pub x_bc: BoundaryCondition,
    pub t: u64,
    pub seed: u64,
    pub stream: u64,
    pub word_pos: u128,
    pub x: EdgeConfig,
    pub y: EdgeConfig,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "{CHECKPOINT_HEADER}");
        let _ = writeln!(s, "box {}", serde_json::to_string(&self.box_spec).map_err(|e| Error::Parse(e.to_string()))?);
        let _ = writeln!(s, "p {}", self.params.p());
        let _ = writeln!(s, "q {}", self.params.q());
        let _ = writeln!(s, "x_bc {}", bc_name(self.x_bc));
        let _ = writeln!(s, "t {}", self.t);
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "stream {}", self.stream);
        let _ = writeln!(s, "word_pos {}", self.word_pos);
        let _ = writeln!(s, "x {}", self.x.to_bit_string());
        let _ = writeln!(s, "y {}", self.y.to_bit_string());
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != CHECKPOINT_HEADER {
            return Err(Error::Parse(format!("bad checkpoint header {header:?}")));
        }
        let mut fields = std::collections::HashMap::new();
        for line in lines {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("malformed checkpoint line {line:?}")))?;
            fields.insert(k.to_string(), v.trim().to_string());
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| Error::Parse(format!("checkpoint lacks {k}")));
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Parse(format!("bad value {v:?} for {k}")))
        }
        let box_spec: BoxSpec = serde_json::from_str(get("box")?).map_err(|e| Error::Parse(e.to_string()))?;
        let params = FkParams::new(num("p", get("p")?)?, num("q", get("q")?)?)?;
        let x_bc: BoundaryCondition = get("x_bc")?.parse()?;
        Ok(Checkpoint {
            box_spec,
            params,
            x_bc,
            t: num("t", get("t")?)?,
            seed: num("seed", get("seed")?)?,
            stream: num("stream", get("stream")?)?,
            word_pos: num("word_pos", get("word_pos")?)?,
            x: EdgeConfig::from_bit_string(get("x")?)?,
            y: EdgeConfig::from_bit_string(get("y")?)?,
        })
    }
}

fn bc_name(bc: BoundaryCondition) -> &'static str {
    match bc {
        BoundaryCondition::Free => "free",
        BoundaryCondition::Wired => "wired",
        BoundaryCondition::TopBottom => "tb",
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Chain {
    X,
    Y,
}

/// Histogram of configuration masks visited by one chain.
#[derive(Clone, Debug)]
pub struct ConfigHistogram {
    pub counts: Vec<u64>,
    pub samples: u64,
}

/// Runs `burn_in` ticks, then records the chosen chain's configuration every
/// `stride` ticks until `samples` are collected.
pub fn sample_histogram(state: &mut CoupledState<'_>, which: Chain, burn_in: u64, samples: u64, stride: u64) -> Result<ConfigHistogram> {
    let m = state.geometry.edge_count();
    if m > 20 {
        return Err(Error::TooLarge(format!("{m} edges")));
    }
    for _ in 0..burn_in {
        state.step();
    }
    let mut counts = vec![0u64; 1 << m];
    for _ in 0..samples {
        for _ in 0..stride.max(1) {
            state.step();
        }
        let cfg = match which {
            Chain::X => state.x_config(),
            Chain::Y => state.y_config(),
        };
        counts[cfg.to_mask() as usize] += 1;
    }
    Ok(ConfigHistogram { counts, samples })
}

/// Total-variation distance between a chain's empirical law and an exact
/// table.
pub fn marginal_check(state: &mut CoupledState<'_>, table: &ExactTable, which: Chain, burn_in: u64, samples: u64, stride: u64) -> Result<f64> {
    let m = state.geometry.edge_count();
    if table.n_edges() != m {
        return Err(Error::SizeMismatch {
            expected: m,
            got: table.n_edges(),
        });
    }
    let expected_bc = match which {
        Chain::X => state.x_bc(),
        Chain::Y => BoundaryCondition::TopBottom,
    };
    if table.boundary_condition() != expected_bc {
        return Err(Error::Params(format!(
            "table is for {:?}, chain runs under {expected_bc:?}",
            table.boundary_condition()
        )));
    }
    let h = sample_histogram(state, which, burn_in, samples, stride)?;
    table.tv_distance(&h.counts)
}
