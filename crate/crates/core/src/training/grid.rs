//! Hyperparameter grids: cartesian products over override keys, one
//! training run per cell, ranked by final evaluation mean.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use toml::Value;

use super::config::ConfigLoader;
use super::{cartesian, train};
use crate::env::Role;
use crate::error::{Error, Result};

/// Candidate values per dotted config key.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub role: Role,
    pub values: BTreeMap<String, Vec<Value>>,
}

impl GridSpec {
    pub fn new(role: Role) -> Self {
        GridSpec {
            role,
            values: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, values: impl IntoIterator<Item = Value>) -> Self {
        self.values
            .entry(key.to_string())
            .or_default()
            .extend(values);
        self
    }

    /// Deduplicated cells, each a list of `key=value` overrides.
    pub fn cells(&self) -> Vec<Vec<String>> {
        cartesian(&self.values)
            .into_iter()
            .map(|cell| cell.into_iter().map(|(k, v)| format!("{k}={v}")).collect())
            .collect()
    }

    /// The published search space for `role`. With `gamma_cut` the discount
    /// is fixed at 0.99, as it was after the first sweep.
    pub fn paper(role: Role, gamma_cut: bool) -> Self {
        let hidden: Vec<Value> = match role {
            Role::Nominal => vec![arr(&[64, 64]), arr(&[128, 64]), arr(&[128, 128])],
            Role::Attacker | Role::Defender => vec![arr(&[64, 64]), arr(&[128, 64])],
        };
        let gammas: &[f64] = if gamma_cut { &[0.99] } else { &[0.85, 0.99] };
        GridSpec::new(role)
            .with("ppo.steps_per_actor", [Value::from(5120), Value::from(10240)])
            .with("network.hidden", hidden)
            .with("ppo.learning_rate", [Value::from(1e-4), Value::from(3e-4)])
            .with("ppo.minibatch_size", [Value::from(128), Value::from(256)])
            .with("ppo.epochs", [Value::from(10)])
            .with("ppo.gamma", gammas.iter().map(|&g| Value::from(g)))
    }
}

fn arr(widths: &[i64]) -> Value {
    Value::Array(widths.iter().map(|&w| Value::from(w)).collect())
}

/// One ranked grid row. Failed cells carry the error and no score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridResult {
    pub rank: usize,
    pub cell: usize,
    pub overrides: String,
    pub final_eval_mean: Option<f64>,
    pub best_eval_mean: Option<f64>,
    pub iterations: Option<usize>,
    pub error: Option<String>,
}

pub const GRID_RANKING_FILE: &str = "ranking.csv";

/// Trains every cell of `grid` on top of `base` into `out_dir/cell_NNN` and
/// writes `ranking.csv`. A failing cell is recorded, not fatal. Every cell
/// uses the same master seed.
pub fn grid_search(base: &ConfigLoader, grid: &GridSpec, out_dir: &Path) -> Result<Vec<GridResult>> {
    let cells = grid.cells();
    if cells.is_empty() || grid.values.values().any(Vec::is_empty) {
        return Err(Error::Config("grid is empty".into()));
    }
    // The base alone may be incomplete; each cell is validated when built.
    let role = base.role()?;
    if role != grid.role {
        return Err(Error::Config(format!(
            "grid is for {} but the base config trains {role}",
            grid.role
        )));
    }
    log::info!("grid: {} cells for {}", cells.len(), grid.role);
    let mut rows = Vec::with_capacity(cells.len());
    for (i, overrides) in cells.iter().enumerate() {
        let run = || -> Result<(f64, f64, usize)> {
            let mut loader = base.clone();
            for o in overrides {
                loader.set(o)?;
            }
            let config = loader.build()?;
            let outcome = train(&config, &out_dir.join(format!("cell_{i:03}")))?;
            let m = &outcome.manifest;
            let last = m.evals.last().map_or(f64::NAN, |e| e.mean_reward);
            Ok((last, m.best_eval_mean, m.iterations))
        };
        let row = match run() {
            Ok((last, best, iters)) => GridResult {
                rank: 0,
                cell: i,
                overrides: overrides.join(" "),
                final_eval_mean: Some(last),
                best_eval_mean: Some(best),
                iterations: Some(iters),
                error: None,
            },
            Err(e) => {
                log::warn!("grid cell {i} failed: {e}");
                GridResult {
                    rank: 0,
                    cell: i,
                    overrides: overrides.join(" "),
                    final_eval_mean: None,
                    best_eval_mean: None,
                    iterations: None,
                    error: Some(e.to_string()),
                }
            }
        };
        rows.push(row);
    }
    rank(&mut rows);
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut w = csv::Writer::from_path(out_dir.join(GRID_RANKING_FILE))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(out_dir.join(GRID_RANKING_FILE), e))?;
    Ok(rows)
}

/// Sorts by final evaluation mean, best first, failures last.
fn rank(rows: &mut [GridResult]) {
    rows.sort_by(|a, b| {
        let key = |r: &GridResult| r.final_eval_mean.filter(|v| v.is_finite());
        match (key(a), key(b)) {
            (Some(x), Some(y)) => y.total_cmp(&x).then(a.cell.cmp(&b.cell)),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => a.cell.cmp(&b.cell),
        }
    });
    for (i, r) in rows.iter_mut().enumerate() {
        r.rank = i + 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_grid_sizes() {
        assert_eq!(GridSpec::paper(Role::Nominal, false).cells().len(), 48);
        assert_eq!(GridSpec::paper(Role::Nominal, true).cells().len(), 24);
        assert_eq!(GridSpec::paper(Role::Attacker, false).cells().len(), 32);
        assert_eq!(GridSpec::paper(Role::Defender, false).cells().len(), 32);
    }

    #[test]
    fn two_by_two() {
        let g = GridSpec::new(Role::Nominal)
            .with("ppo.learning_rate", [Value::from(1e-4), Value::from(3e-4)])
            .with("ppo.minibatch_size", [Value::from(128), Value::from(256), Value::from(128)]);
        assert_eq!(g.cells().len(), 4);
    }

    #[test]
    fn ranking_puts_failures_last() {
        let mk = |cell, v: Option<f64>| GridResult {
            rank: 0,
            cell,
            overrides: String::new(),
            final_eval_mean: v,
            best_eval_mean: v,
            iterations: None,
            error: None,
        };
        let mut rows = vec![mk(0, None), mk(1, Some(1.0)), mk(2, Some(5.0))];
        rank(&mut rows);
        let order: Vec<usize> = rows.iter().map(|r| r.cell).collect();
        assert_eq!(order, vec![2, 1, 0]);
        assert_eq!(rows[2].rank, 3);
    }
}
