//! Text exports of trajectories.

use std::fmt::Write as _;

use serde_json::{json, Value};

use super::{SimError, TrajectoryMeta, Trajectories};
use crate::numfmt::format_sig;
use crate::NodeId;

/// Columnar table: header `step,node_0,...`, one row per step, 6 significant digits.
pub fn to_csv(tr: &Trajectories) -> String {
    let mut out = String::from("step");
    for id in &tr.node_ids {
        let _ = write!(out, ",node_{id}");
    }
    out.push('\n');
    for t in 0..tr.seq_len {
        let _ = write!(out, "{t}");
        for row in &tr.values {
            let _ = write!(out, ",{}", format_sig(row[t], 6));
        }
        out.push('\n');
    }
    out
}

/// Structured document `{meta: {seed, substeps, scenario_id, seq_len, node_ids}, values}`.
pub fn to_json(tr: &Trajectories) -> Value {
    json!({
        "meta": {
            "seed": tr.meta.seed,
            "substeps": tr.meta.substeps,
            "scenario_id": tr.meta.scenario_id,
            "seq_len": tr.seq_len,
            "node_ids": tr.node_ids,
        },
        "values": tr.values,
    })
}

/// Inverse of [`to_json`].
pub fn from_json(v: &Value) -> Result<Trajectories, SimError> {
    let bad = |what: &str| SimError::Format(format!("trajectory document: {what}"));
    let meta = v.get("meta").ok_or_else(|| bad("missing `meta`"))?;
    let seq_len = meta["seq_len"].as_u64().ok_or_else(|| bad("`meta.seq_len` is not an integer"))? as usize;
    let node_ids: Vec<NodeId> =
        serde_json::from_value(meta["node_ids"].clone()).map_err(|e| bad(&format!("`meta.node_ids`: {e}")))?;
    let values: Vec<Vec<f64>> =
        serde_json::from_value(v["values"].clone()).map_err(|e| bad(&format!("`values`: {e}")))?;
    if values.len() != node_ids.len() || values.iter().any(|r| r.len() != seq_len) {
        return Err(bad("`values` shape does not match node_ids x seq_len"));
    }
    Ok(Trajectories {
        values,
        seq_len,
        node_ids,
        meta: TrajectoryMeta {
            seed: meta["seed"].as_u64().ok_or_else(|| bad("`meta.seed` is not an integer"))?,
            substeps: meta["substeps"].as_u64().ok_or_else(|| bad("`meta.substeps` is not an integer"))? as u32,
            scenario_id: meta["scenario_id"].as_str().map(str::to_string),
        },
    })
}

/// One `t,value` table per node.
pub fn plot_series(tr: &Trajectories) -> Vec<(NodeId, String)> {
    tr.node_ids
        .iter()
        .zip(&tr.values)
        .map(|(&id, row)| {
            let mut out = String::from("t,value\n");
            for (t, v) in row.iter().enumerate() {
                let _ = writeln!(out, "{t},{}", format_sig(*v, 6));
            }
            (id, out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectories {
        Trajectories {
            values: vec![vec![100.0, 101.234567], vec![0.0, 1e-3]],
            seq_len: 2,
            node_ids: vec![0, 1],
            meta: TrajectoryMeta {
                seed: 7,
                substeps: 10,
                scenario_id: Some("task_0030".into()),
            },
        }
    }

    #[test]
    fn csv_layout() {
        assert_eq!(to_csv(&sample()), "step,node_0,node_1\n0,100,0\n1,101.235,0.001\n");
    }

    #[test]
    fn json_round_trip() {
        let tr = sample();
        let v = to_json(&tr);
        assert_eq!(v["meta"]["seq_len"], 2);
        assert_eq!(from_json(&v).unwrap(), tr);
    }

    #[test]
    fn plot_tables() {
        let series = plot_series(&sample());
        assert_eq!(series.len(), 2);
        assert_eq!(series[1].1, "t,value\n0,0\n1,0.001\n");
    }
}
