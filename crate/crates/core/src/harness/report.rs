use std::collections::BTreeMap;
use std::io::{Read, Write};

use super::{HarnessError, ResultRow, AVERAGE_SEED};

/// Revision policies compared by [`dependency_report`].
pub const DEPENDENCY_POLICIES: [&str; 3] = ["fifo", "dom", "v_dom/wdeg"];

pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<ResultRow>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Population variance: mean squared deviation from the mean.
pub fn variance(values: &[f64]) -> Result<f64, HarnessError> {
    if values.is_empty() {
        return Err(HarnessError::Empty);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DependencyRow {
    pub instance: String,
    pub var_heur: String,
    /// Node counts in the order of [`DEPENDENCY_POLICIES`].
    pub nodes: [f64; 3],
    pub variance: f64,
}

/// Variance of node counts across the three revision policies, per
/// instance and variable heuristic. Averaged rows stand in for their
/// per-seed rows; remaining duplicates are averaged. Incomplete groups are
/// skipped with a warning.
pub fn dependency_report(rows: &[ResultRow]) -> Vec<DependencyRow> {
    type Key = (String, String);
    let mut cells: BTreeMap<Key, [Vec<f64>; 3]> = BTreeMap::new();
    let mut has_avg: BTreeMap<(Key, usize), bool> = BTreeMap::new();
    let mut order: Vec<Key> = Vec::new();
    for r in rows {
        let Some(slot) = DEPENDENCY_POLICIES.iter().position(|&p| p == r.rev_heur) else {
            continue;
        };
        let key = (r.instance.clone(), r.var_heur.clone());
        if !cells.contains_key(&key) {
            order.push(key.clone());
        }
        let entry = cells.entry(key.clone()).or_default();
        let avg = r.seed == AVERAGE_SEED;
        let seen_avg = has_avg.entry((key, slot)).or_insert(false);
        if avg && !*seen_avg {
            entry[slot].clear();
            *seen_avg = true;
        }
        if avg || !*seen_avg {
            entry[slot].push(r.nodes);
        }
    }
    let mut out = Vec::new();
    for key in order {
        let slots = &cells[&key];
        if slots.iter().any(Vec::is_empty) {
            log::warn!(
                "{} / {}: not every revision policy of {:?} is present, skipped",
                key.0,
                key.1,
                DEPENDENCY_POLICIES
            );
            continue;
        }
        let nodes = [0, 1, 2].map(|i| slots[i].iter().sum::<f64>() / slots[i].len() as f64);
        let variance = variance(&nodes).expect("three values");
        out.push(DependencyRow {
            instance: key.0,
            var_heur: key.1,
            nodes,
            variance,
        });
    }
    out
}

fn aligned(header: &[&str], body: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in body {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut s = String::new();
    let line = |cells: &mut dyn Iterator<Item = &str>, s: &mut String| {
        let parts: Vec<String> = cells.zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
        s.push_str(parts.join("  ").trim_end());
        s.push('\n');
    };
    line(&mut header.iter().copied(), &mut s);
    for row in body {
        line(&mut row.iter().map(String::as_str), &mut s);
    }
    s
}

fn num(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v:.2}")
    }
}

/// Human-readable aligned table of result rows.
pub fn format_table(rows: &[ResultRow]) -> String {
    let header = [
        "instance", "scheme", "var_heur", "rev_heur", "restart", "values", "seed", "result", "time_ms", "nodes",
        "checks", "revisions", "dwos",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.instance.clone(),
                r.scheme.clone(),
                r.var_heur.clone(),
                r.rev_heur.clone(),
                r.restart.clone(),
                r.value_order.clone(),
                r.seed.clone(),
                r.result.clone(),
                format!("{:.1}", r.time_ms),
                num(r.nodes),
                num(r.checks),
                num(r.revisions),
                num(r.dwos),
            ]
        })
        .collect();
    aligned(&header, &body)
}

pub fn format_dependency(rows: &[DependencyRow]) -> String {
    let header = ["instance", "var_heur", "n(fifo)", "n(dom)", "n(v_dom/wdeg)", "variance"];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.instance.clone(),
                r.var_heur.clone(),
                num(r.nodes[0]),
                num(r.nodes[1]),
                num(r.nodes[2]),
                format!("{:.3}", r.variance),
            ]
        })
        .collect();
    aligned(&header, &body)
}
