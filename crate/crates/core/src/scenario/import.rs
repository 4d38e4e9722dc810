//! Trace CSV import/export.
//!
//! Column order is fixed: `t,link_id,ptx_dbm,prx_dbm`. Leading `#` comment
//! lines carry the seed and generator of synthetic traces so emitted files
//! re-import to an identical trace. Floats are written in Rust's shortest
//! round-trip form.

use super::{AttenuationTrace, ScenarioError};
use crate::net::NetworkTopology;
use std::io::Write;
use std::path::Path;

/// What to do about missing samples in an imported trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapPolicy {
    Reject,
    ForwardFill,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImportWarning {
    pub link: String,
    pub step: usize,
    pub message: String,
}

/// Reads a trace CSV, ordering links by the topology's edge list.
pub fn import_trace(
    path: &Path,
    topo: &NetworkTopology,
    policy: GapPolicy,
) -> Result<AttenuationTrace, ScenarioError> {
    let (trace, _warnings) = import_trace_with_warnings(path, topo, policy)?;
    Ok(trace)
}

pub fn import_trace_with_warnings(
    path: &Path,
    topo: &NetworkTopology,
    policy: GapPolicy,
) -> Result<(AttenuationTrace, Vec<ImportWarning>), ScenarioError> {
    let text = std::fs::read_to_string(path)?;
    let mut seed = None;
    let mut generator = String::from("imported");
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if let Some(rest) = line.trim_start_matches('#').trim().strip_prefix("seed=") {
            seed = rest.trim().parse::<u64>().ok();
        }
        if let Some(rest) = line.trim_start_matches('#').trim().strip_prefix("generator=") {
            generator = rest.trim().to_string();
        }
    }

    let n_links = topo.num_edges();
    let labels: Vec<String> = (0..n_links).map(|e| topo.edge_label(e)).collect();

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    // Per link: (timestamps, ptx, prx) in file order.
    let mut columns: Vec<(Vec<usize>, Vec<f64>, Vec<f64>)> =
        vec![(Vec::new(), Vec::new(), Vec::new()); n_links];
    for result in reader.records() {
        let record = result?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| ScenarioError::Malformed { line, message };
        if record.len() != 4 {
            return Err(parse_err(format!("expected 4 columns, found {}", record.len())));
        }
        let t: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad time-step {:?}", &record[0])))?;
        let label = record[1].trim();
        let link = topo
            .edge_by_label(label)
            .ok_or_else(|| ScenarioError::UnknownLink(label.to_string()))?;
        let ptx: f64 = record[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad ptx_dbm {:?}", &record[2])))?;
        let prx: f64 = record[3]
            .trim()
            .parse()
            .map_err(|_| parse_err(format!("bad prx_dbm {:?}", &record[3])))?;
        if !ptx.is_finite() || !prx.is_finite() {
            return Err(parse_err("non-finite signal level".into()));
        }
        let col = &mut columns[link];
        if let Some(&last) = col.0.last() {
            if t <= last {
                return Err(parse_err(format!(
                    "non-monotone time-step {} after {} for link {}",
                    t, last, label
                )));
            }
        }
        col.0.push(t);
        col.1.push(ptx);
        col.2.push(prx);
    }

    let steps = columns
        .iter()
        .filter_map(|(ts, _, _)| ts.last().map(|&t| t + 1))
        .max()
        .unwrap_or(0);

    // Re-grid each link onto 0..steps, forward-filling gaps when allowed.
    let mut warnings = Vec::new();
    let mut per_link: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(n_links);
    for (link, (ts, ptxs, prxs)) in columns.iter().enumerate() {
        let label = &labels[link];
        let mut ptx_g = Vec::with_capacity(steps);
        let mut prx_g = Vec::with_capacity(steps);
        let mut cursor = 0usize;
        for t in 0..steps {
            if cursor < ts.len() && ts[cursor] == t {
                ptx_g.push(ptxs[cursor]);
                prx_g.push(prxs[cursor]);
                cursor += 1;
            } else {
                match policy {
                    GapPolicy::Reject => {
                        return Err(ScenarioError::LengthMismatch(label.clone(), ts.len(), steps));
                    }
                    GapPolicy::ForwardFill => {
                        let (p, r) = match (ptx_g.last(), prx_g.last()) {
                            (Some(&p), Some(&r)) => (p, r),
                            _ => {
                                return Err(ScenarioError::LengthMismatch(
                                    label.clone(),
                                    ts.len(),
                                    steps,
                                ));
                            }
                        };
                        warnings.push(ImportWarning {
                            link: label.clone(),
                            step: t,
                            message: "missing sample forward-filled".into(),
                        });
                        ptx_g.push(p);
                        prx_g.push(r);
                    }
                }
            }
        }
        per_link.push((ptx_g, prx_g));
    }

    let ptx = (0..steps)
        .map(|t| (0..n_links).map(|l| per_link[l].0[t]).collect())
        .collect();
    let prx = (0..steps)
        .map(|t| (0..n_links).map(|l| per_link[l].1[t]).collect())
        .collect();
    Ok((AttenuationTrace::new(labels, ptx, prx, seed, generator), warnings))
}

/// Writes a trace CSV (atomically: temp file then rename).
pub fn write_trace(path: &Path, trace: &AttenuationTrace) -> Result<(), ScenarioError> {
    let tmp = path.with_extension("csv.tmp");
    {
        let mut file = std::fs::File::create(&tmp)?;
        if let Some(seed) = trace.seed {
            writeln!(file, "# seed={}", seed)?;
        }
        writeln!(file, "# generator={}", trace.generator)?;
        writeln!(file, "t,link_id,ptx_dbm,prx_dbm")?;
        for t in 0..trace.len() {
            for (l, label) in trace.link_labels().iter().enumerate() {
                let s = trace.sample(t, l);
                writeln!(file, "{},{},{},{}", t, label, s.ptx_dbm, s.prx_dbm)?;
            }
        }
        file.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}
