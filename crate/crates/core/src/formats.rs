//! Text formats for traces, block files and plot-ready outputs.
//!
//! A sample trace is ASCII, one record per line, after a header binding it to
//! its graph:
//!
//! ```text
//! #blockkit-trace n=<n> m=<m> hash=<hex>
//! <chain> <step> <logp> <k> <g_0> <g_1> ... <g_{n-1}>
//! ```
//!
//! Block files use the same layout with a single line whose `logp` field holds
//! the mean reduced mutual information and whose `k` field holds `q`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::blocks::{BlockAssignment, MergeTrace};
use crate::comembership::{CoMatrix, Histogram};
use crate::error::{Error, Result};
use crate::graph::{Fingerprint, Graph};
use crate::partition::Partition;
use crate::sampler::{LogpPoint, SampleEnsemble, SampleRecord};

pub const TRACE_MAGIC: &str = "#blockkit-trace";

pub fn trace_header(fp: &Fingerprint) -> String {
    format!("{TRACE_MAGIC} n={} m={} hash={}", fp.n, fp.m, fp.hash)
}

pub fn parse_trace_header(line: &str) -> Result<Fingerprint> {
    let bad = |msg: &str| Error::Parse {
        line: 1,
        msg: msg.to_string(),
    };
    let mut parts = line.split_whitespace();
    if parts.next() != Some(TRACE_MAGIC) {
        return Err(bad("missing #blockkit-trace header"));
    }
    let (mut n, mut m, mut hash) = (None, None, None);
    for field in parts {
        match field.split_once('=') {
            Some(("n", v)) => n = v.parse().ok(),
            Some(("m", v)) => m = v.parse().ok(),
            Some(("hash", v)) => hash = Some(v.to_string()),
            _ => return Err(bad(&format!("unexpected header field {field:?}"))),
        }
    }
    match (n, m, hash) {
        (Some(n), Some(m), Some(hash)) => Ok(Fingerprint { n, m, hash }),
        _ => Err(bad("header needs n=, m= and hash=")),
    }
}

fn write_record_line<W: Write>(out: &mut W, chain: u32, step: u64, value: f64, labels: &[u32], k: usize) -> Result<()> {
    write!(out, "{chain} {step} {value} {k}")?;
    for l in labels {
        write!(out, " {l}")?;
    }
    writeln!(out)?;
    Ok(())
}

pub fn write_trace<W: Write>(ensemble: &SampleEnsemble, mut out: W) -> Result<()> {
    writeln!(out, "{}", trace_header(ensemble.fingerprint()))?;
    for r in ensemble.records() {
        write_record_line(
            &mut out,
            r.chain,
            r.step,
            r.log_posterior,
            r.partition.labels(),
            r.partition.community_count(),
        )?;
    }
    Ok(())
}

struct RawRecord {
    chain: u32,
    step: u64,
    value: f64,
    labels: Vec<u32>,
}

fn parse_record_line(line: &str, lineno: usize, n: usize) -> Result<RawRecord> {
    let err = |msg: String| Error::Parse { line: lineno, msg };
    let tokens: Vec<&str> = line.split_whitespace().collect();
    if tokens.len() != n + 4 {
        return Err(err(format!("expected {} fields, found {}", n + 4, tokens.len())));
    }
    let chain = tokens[0].parse().map_err(|_| err("bad chain id".into()))?;
    let step = tokens[1].parse().map_err(|_| err("bad step".into()))?;
    let value: f64 = tokens[2].parse().map_err(|_| err("bad log posterior".into()))?;
    let k: usize = tokens[3].parse().map_err(|_| err("bad community count".into()))?;
    let labels = tokens[4..]
        .iter()
        .map(|t| t.parse::<u32>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| err("bad label".into()))?;
    let p = Partition::new(labels.clone()).map_err(|e| err(e.to_string()))?;
    if p.community_count() != k {
        return Err(err(format!("k = {k} but labels use {}", p.community_count())));
    }
    Ok(RawRecord {
        chain,
        step,
        value,
        labels,
    })
}

pub fn read_trace<R: BufRead>(reader: R) -> Result<SampleEnsemble> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or(Error::EmptyInput("trace file"))??;
    let fp = parse_trace_header(&header)?;
    let n = fp.n;
    let mut ensemble = SampleEnsemble::new(fp);
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let raw = parse_record_line(&line, idx + 2, n)?;
        ensemble
            .push(SampleRecord {
                chain: raw.chain,
                step: raw.step,
                log_posterior: raw.value,
                partition: Partition::new(raw.labels)?,
            })
            .map_err(|e| Error::Parse {
                line: idx + 2,
                msg: e.to_string(),
            })?;
    }
    Ok(ensemble)
}

pub fn write_blocks<W: Write>(fp: &Fingerprint, blocks: &BlockAssignment, mean_rmi: f64, mut out: W) -> Result<()> {
    writeln!(out, "{}", trace_header(fp))?;
    write_record_line(&mut out, 0, 0, mean_rmi, blocks.labels(), blocks.block_count())
}

pub fn read_blocks<R: BufRead>(reader: R) -> Result<(Fingerprint, BlockAssignment, f64)> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or(Error::EmptyInput("block file"))??;
    let fp = parse_trace_header(&header)?;
    for (idx, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let raw = parse_record_line(&line, idx + 2, fp.n)?;
        return Ok((fp, BlockAssignment::new(raw.labels)?, raw.value));
    }
    Err(Error::EmptyInput("block file has no assignment line"))
}

/// Writes the matrix with node labels as the first row and column, entries
/// to 6 decimals, rows and columns in `order` (identity if `None`).
pub fn write_comatrix_csv<W: Write>(
    matrix: &CoMatrix,
    labels: &[String],
    order: Option<&[usize]>,
    mut out: W,
) -> Result<()> {
    let identity: Vec<usize>;
    let order = match order {
        Some(o) => o,
        None => {
            identity = (0..matrix.node_count()).collect();
            &identity
        }
    };
    write!(out, "node")?;
    for &j in order {
        write!(out, ",{}", labels[j])?;
    }
    writeln!(out)?;
    for &i in order {
        write!(out, "{}", labels[i])?;
        for &j in order {
            write!(out, ",{:.6}", matrix.get(i, j))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn write_histograms_json<W: Write>(hists: &BTreeMap<String, Histogram>, out: W) -> Result<()> {
    serde_json::to_writer_pretty(out, hists)?;
    Ok(())
}

/// `q,mean_rmi,merged_a,merged_b`; the merged fields are empty on the first
/// (all-singletons) row.
pub fn write_rmi_curve_csv<W: Write>(trace: &MergeTrace, mut out: W) -> Result<()> {
    writeln!(out, "q,mean_rmi,merged_a,merged_b")?;
    for e in &trace.entries {
        match e.merged {
            Some((a, b)) => writeln!(out, "{},{},{a},{b}", e.q, e.mean_rmi)?,
            None => writeln!(out, "{},{},,", e.q, e.mean_rmi)?,
        }
    }
    Ok(())
}

pub fn write_logp_csv<W: Write>(series: &[LogpPoint], mut out: W) -> Result<()> {
    writeln!(out, "chain,step,logp,k")?;
    for p in series {
        writeln!(out, "{},{},{},{}", p.chain, p.step, p.log_posterior, p.communities)?;
    }
    Ok(())
}

/// `node label` per line, nodes named by their graph labels.
pub fn write_labels<W: Write>(graph: &Graph, partition: &Partition, mut out: W) -> Result<()> {
    for i in 0..graph.node_count() {
        writeln!(out, "{} {}", graph.label(i), partition.community_of(i))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::load_edge_list;

    #[test]
    fn header_round_trip() {
        let g = load_edge_list("a b\nb c".as_bytes()).unwrap();
        let fp = g.fingerprint();
        assert_eq!(parse_trace_header(&trace_header(&fp)).unwrap(), fp);
        assert!(parse_trace_header("# something else").is_err());
        assert!(parse_trace_header("#blockkit-trace n=3").is_err());
    }

    #[test]
    fn malformed_record_reports_line() {
        let text = "#blockkit-trace n=3 m=2 hash=00\n0 1 -2.5 2 0 1 1\n0 2 -2.5 2 0 1\n";
        match read_trace(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let wrong_k = "#blockkit-trace n=3 m=2 hash=00\n0 1 -2.5 3 0 1 1\n";
        assert!(read_trace(wrong_k.as_bytes()).is_err());
    }

    #[test]
    fn curve_csv_layout() {
        use crate::blocks::TraceEntry;
        let trace = MergeTrace {
            entries: vec![
                TraceEntry { q: 2, mean_rmi: 0.0, merged: None },
                TraceEntry { q: 1, mean_rmi: 0.0, merged: Some((0, 1)) },
            ],
            best: 0,
        };
        let mut buf = Vec::new();
        write_rmi_curve_csv(&trace, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "q,mean_rmi,merged_a,merged_b\n2,0,,\n1,0,0,1\n");
    }
}
