//! Aggregates records across replicas into a plain-text summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::estimate::{bootstrap_ci, least_squares, mean};
use crate::fk::comparison_parameter;
use crate::geometry::alpha;
use crate::harness::config::{ExperimentConfig, Statistic};
use crate::harness::stats::ObservableRecord;

/// Mean of one record component with a replica-bootstrap interval.
#[derive(Clone, Debug, Serialize)]
pub struct ComponentSummary {
    pub stat: Statistic,
    pub key: Option<String>,
    pub component: usize,
    /// Samples with a finite value.
    pub samples: usize,
    /// Samples with a null value.
    pub nulls: usize,
    pub mean: Option<f64>,
    pub ci: Option<(f64, f64)>,
    /// `(threshold, fraction of samples exceeding it)`; nulls count as
    /// not exceeding.
    pub exceedance: Vec<(f64, f64)>,
}

/// Pooled pivotal-speed frequency for one `(s, ℓ)`.
#[derive(Clone, Debug, Serialize)]
pub struct SpeedSummary {
    pub s: String,
    pub ell: f64,
    pub hits: f64,
    pub trials: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PeierlsSummary {
    /// `P(len ≥ n)` for `n = 1..=n_max`, pooled over probes and samples.
    pub tail: Vec<f64>,
    /// Least-squares slope of `ln P(len ≥ n)` against `n`, over the
    /// positive entries.
    pub slope: Option<f64>,
    /// `ln(α(1 − f))`, the rate the slope should not exceed.
    pub reference: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub replicas: u32,
    pub components: Vec<ComponentSummary>,
    pub speed: Vec<SpeedSummary>,
    pub peierls: Option<PeierlsSummary>,
}

type Key = (Statistic, Option<String>);

pub fn summarize(cfg: &ExperimentConfig, dim: usize, records: &[ObservableRecord]) -> Summary {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.run.seed ^ 0x5eed);
    let mut groups: BTreeMap<Key, Vec<&ObservableRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.stat, r.key.clone())).or_default().push(r);
    }

    let mut components = Vec::new();
    let mut speed = Vec::new();
    let mut peierls = None;
    for ((stat, key), rs) in &groups {
        match stat {
            Statistic::PivotalSpeed => {
                for (j, &ell) in cfg.stats.ell_grid.iter().enumerate() {
                    let sum = |k: usize| rs.iter().filter_map(|r| r.values.get(2 * j + k).copied().flatten()).sum::<f64>();
                    speed.push(SpeedSummary {
                        s: key.clone().unwrap_or_default().trim_start_matches("s=").to_string(),
                        ell,
                        hits: sum(0),
                        trials: sum(1),
                    });
                }
            }
            Statistic::PeierlsDecay => {
                let width = rs.iter().map(|r| r.values.len()).max().unwrap_or(0);
                let total: Vec<f64> = (0..width)
                    .map(|k| rs.iter().filter_map(|r| r.values.get(k).copied().flatten()).sum())
                    .collect();
                if let Some((&probes, counts)) = total.split_first() {
                    let tail: Vec<f64> = counts.iter().map(|c| if probes > 0.0 { c / probes } else { 0.0 }).collect();
                    let (ns, logs): (Vec<f64>, Vec<f64>) = tail
                        .iter()
                        .enumerate()
                        .filter(|(_, &t)| t > 0.0)
                        .map(|(i, &t)| ((i + 1) as f64, t.ln()))
                        .unzip();
                    let f = comparison_parameter(cfg.fk_params().map(|p| p.p()).unwrap_or(0.0), cfg.model.q);
                    peierls = Some(PeierlsSummary {
                        slope: least_squares(&ns, &logs).map(|(s, _)| s),
                        reference: (alpha(dim) as f64 * (1.0 - f)).ln(),
                        tail,
                    });
                }
            }
            _ => {
                let width = rs.iter().map(|r| r.values.len()).max().unwrap_or(0);
                for c in 0..width {
                    let mut per_replica: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
                    let mut nulls = 0;
                    let mut all = Vec::new();
                    for r in rs {
                        match r.values.get(c).copied().flatten() {
                            Some(v) => {
                                per_replica.entry(r.replica).or_default().push(v);
                                all.push(v);
                            }
                            None => nulls += 1,
                        }
                    }
                    let replica_means: Vec<f64> = per_replica.values().filter_map(|v| mean(v)).collect();
                    let n_total = (all.len() + nulls).max(1) as f64;
                    let exceedance = cfg
                        .stats
                        .thresholds
                        .iter()
                        .map(|&t| (t, all.iter().filter(|&&v| v > t).count() as f64 / n_total))
                        .collect();
                    components.push(ComponentSummary {
                        stat: *stat,
                        key: key.clone(),
                        component: c,
                        samples: all.len(),
                        nulls,
                        mean: mean(&replica_means),
                        ci: if replica_means.len() > 1 {
                            bootstrap_ci(&replica_means, cfg.run.bootstrap, 0.95, &mut rng)
                        } else {
                            None
                        },
                        exceedance,
                    });
                }
            }
        }
    }
    Summary {
        replicas: cfg.run.replicas,
        components,
        speed,
        peierls,
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

impl Summary {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "replicas {}", self.replicas);
        for c in &self.components {
            let ci = c.ci.map_or_else(|| "-".into(), |(a, b)| format!("[{a:.4}, {b:.4}]"));
            let _ = writeln!(
                s,
                "{}[{}] mean {} ci95 {} samples {} nulls {}",
                c.stat.name(),
                c.component,
                opt(c.mean),
                ci,
                c.samples,
                c.nulls
            );
            let ex: Vec<String> = c.exceedance.iter().map(|(t, f)| format!("{t}:{f:.4}")).collect();
            let _ = writeln!(s, "  exceed {}", ex.join(" "));
        }
        for sp in &self.speed {
            let freq = if sp.trials > 0.0 { Some(sp.hits / sp.trials) } else { None };
            let _ = writeln!(
                s,
                "pivotal_speed s={} ell={} freq {} ({} / {})",
                sp.s,
                sp.ell,
                opt(freq),
                sp.hits,
                sp.trials
            );
        }
        if let Some(p) = &self.peierls {
            let tail: Vec<String> = p.tail.iter().map(|t| format!("{t:.4e}")).collect();
            let _ = writeln!(s, "peierls_decay tail {}", tail.join(" "));
            let _ = writeln!(s, "  slope {} reference {:.4}", opt(p.slope), p.reference);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(replica: u32, stat: Statistic, key: Option<&str>, values: Vec<Option<f64>>) -> ObservableRecord {
        ObservableRecord {
            replica,
            step: 0,
            stat,
            key: key.map(String::from),
            values,
            seed: 0,
            stream: 0,
        }
    }

    #[test]
    fn aggregates_components() {
        let mut cfg = ExperimentConfig::smoke();
        cfg.run.replicas = 2;
        cfg.stats.thresholds = vec![1.0, 3.0];
        cfg.stats.ell_grid = vec![0.0];
        let rs = vec![
            rec(0, Statistic::LocalizationFk, None, vec![Some(2.0), None]),
            rec(0, Statistic::LocalizationFk, None, vec![Some(4.0), Some(1.0)]),
            rec(1, Statistic::LocalizationFk, None, vec![Some(0.0), None]),
            rec(0, Statistic::PivotalSpeed, Some("s=1"), vec![Some(1.0), Some(4.0)]),
            rec(1, Statistic::PivotalSpeed, Some("s=1"), vec![Some(0.0), Some(4.0)]),
            rec(0, Statistic::PeierlsDecay, None, vec![Some(10.0), Some(5.0), Some(1.0)]),
        ];
        let s = summarize(&cfg, 2, &rs);
        let c0 = &s.components[0];
        // replica means 3 and 0
        assert_eq!(c0.mean, Some(1.5));
        assert_eq!(c0.exceedance, vec![(1.0, 2.0 / 3.0), (3.0, 1.0 / 3.0)]);
        assert_eq!(s.components[1].nulls, 2);
        assert_eq!(s.speed[0].hits, 1.0);
        assert_eq!(s.speed[0].trials, 8.0);
        let p = s.peierls.unwrap();
        assert_eq!(p.tail, vec![0.5, 0.1]);
        assert!((p.slope.unwrap() - (0.1f64 / 0.5).ln()).abs() < 1e-12);
        assert!(s_contains(&Summary { replicas: 2, components: vec![], speed: vec![], peierls: None }.render(), "replicas 2"));
    }

    fn s_contains(s: &str, needle: &str) -> bool {
        s.contains(needle)
    }
}
