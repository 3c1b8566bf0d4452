//! Trace persistence: one CSV per chain, a weights sidecar per chain, and a
//! small JSON file with the run layout.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inference::{Trace, TraceRecord, WeightSnapshot};
use crate::io::atomic_write;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceMeta {
    pub p: usize,
    pub n_nodes: usize,
    pub thin: usize,
    pub burnin: usize,
    pub chains: Vec<usize>,
}

pub fn trace_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("trace_chain{chain}.csv"))
}

pub fn weights_path(dir: &Path, chain: usize) -> PathBuf {
    dir.join(format!("weights_chain{chain}.csv"))
}

pub fn meta_path(dir: &Path) -> PathBuf {
    dir.join("trace_meta.json")
}

/// Round-trip decimal form with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn trace_header(p: usize) -> Vec<String> {
    let mut h: Vec<String> = ["iter", "chain", "logalpha", "sigma", "tau"].map(String::from).to_vec();
    for name in ["a", "b", "wstar"] {
        h.extend((1..=p).map(|k| format!("{name}_{k}")));
    }
    h.extend(["mean_w", "logtarget", "acc_hmc", "acc_mh"].map(String::from));
    h
}

fn write_csv(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io(path, e.into_error()))?;
    atomic_write(path, &bytes)
}

pub fn write_trace_csv(trace: &Trace, path: &Path) -> Result<()> {
    let rows = trace.records.iter().map(|r| {
        let mut v = vec![
            r.iter.to_string(),
            trace.chain.to_string(),
            fmt_f64(r.log_alpha),
            fmt_f64(r.sigma),
            fmt_f64(r.tau),
        ];
        v.extend(r.a.iter().chain(&r.b).chain(&r.w_star).map(|x| fmt_f64(*x)));
        v.push(fmt_f64(r.mean_w));
        v.push(fmt_f64(r.log_target));
        v.push(u8::from(r.acc_hmc).to_string());
        v.push(u8::from(r.acc_mh).to_string());
        v
    });
    write_csv(path, &trace_header(trace.p), rows)
}

pub fn weights_header(n_nodes: usize, p: usize) -> Vec<String> {
    let mut h = vec!["iter".to_string()];
    for i in 0..n_nodes {
        h.extend((1..=p).map(|k| format!("w_{i}_{k}")));
    }
    h
}

pub fn write_weights_csv(trace: &Trace, path: &Path) -> Result<()> {
    let rows = trace.snapshots.iter().map(|s| {
        let mut v = vec![s.iter.to_string()];
        v.extend(s.weights.iter().map(|x| fmt_f64(*x)));
        v
    });
    write_csv(path, &weights_header(trace.n_nodes, trace.p), rows)
}

/// Write every chain plus the layout file into `dir` (created if needed).
pub fn save_traces(traces: &[Trace], dir: &Path) -> Result<()> {
    let first = traces
        .first()
        .ok_or_else(|| Error::Domain("no traces to save".into()))?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for t in traces {
        if (t.p, t.n_nodes, t.thin, t.burnin) != (first.p, first.n_nodes, first.thin, first.burnin) {
            return Err(Error::Shape("traces disagree on layout".into()));
        }
        write_trace_csv(t, &trace_path(dir, t.chain))?;
        write_weights_csv(t, &weights_path(dir, t.chain))?;
    }
    let meta = TraceMeta {
        p: first.p,
        n_nodes: first.n_nodes,
        thin: first.thin,
        burnin: first.burnin,
        chains: traces.iter().map(|t| t.chain).collect(),
    };
    atomic_write(&meta_path(dir), serde_json::to_string_pretty(&meta)?.as_bytes())
}

fn parse_err(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

fn read_csv(path: &Path, expected: &[String]) -> Result<Vec<csv::StringRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let header = r.headers()?.clone();
    if header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_err(path, 1, "header does not match the expected columns"));
    }
    r.records().map(|x| x.map_err(Error::from)).collect()
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, ix: usize, path: &Path, line: usize) -> Result<T> {
    rec.get(ix)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| parse_err(path, line, format!("bad value in column {}", ix + 1)))
}

pub fn read_trace_csv(path: &Path, p: usize) -> Result<(usize, Vec<TraceRecord>)> {
    let rows = read_csv(path, &trace_header(p))?;
    let mut chain = None;
    let mut out = Vec::with_capacity(rows.len());
    for (ix, rec) in rows.iter().enumerate() {
        let line = ix + 2;
        let f = |c: usize| field::<f64>(rec, c, path, line);
        let vec_at = |start: usize| (start..start + p).map(f).collect::<Result<Vec<f64>>>();
        let c: usize = field(rec, 1, path, line)?;
        if *chain.get_or_insert(c) != c {
            return Err(parse_err(path, line, "mixed chain ids in one file"));
        }
        let flag = |col: usize| -> Result<bool> {
            match rec.get(col) {
                Some("1") => Ok(true),
                Some("0") => Ok(false),
                _ => Err(parse_err(path, line, format!("bad flag in column {}", col + 1))),
            }
        };
        let tail = 5 + 3 * p;
        out.push(TraceRecord {
            iter: field(rec, 0, path, line)?,
            log_alpha: f(2)?,
            sigma: f(3)?,
            tau: f(4)?,
            a: vec_at(5)?,
            b: vec_at(5 + p)?,
            w_star: vec_at(5 + 2 * p)?,
            mean_w: f(tail)?,
            log_target: f(tail + 1)?,
            acc_hmc: flag(tail + 2)?,
            acc_mh: flag(tail + 3)?,
        });
    }
    Ok((chain.unwrap_or(usize::MAX), out))
}

pub fn read_weights_csv(path: &Path, n_nodes: usize, p: usize) -> Result<Vec<WeightSnapshot>> {
    let rows = read_csv(path, &weights_header(n_nodes, p))?;
    rows.iter()
        .enumerate()
        .map(|(ix, rec)| {
            let line = ix + 2;
            Ok(WeightSnapshot {
                iter: field(rec, 0, path, line)?,
                weights: (1..=n_nodes * p)
                    .map(|c| field(rec, c, path, line))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

/// Load every chain listed in the layout file of `dir`.
pub fn load_traces(dir: &Path) -> Result<Vec<Trace>> {
    let mp = meta_path(dir);
    let text = std::fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    let meta: TraceMeta = serde_json::from_str(&text)?;
    meta.chains
        .iter()
        .map(|&c| {
            let tp = trace_path(dir, c);
            let (found, records) = read_trace_csv(&tp, meta.p)?;
            if !records.is_empty() && found != c {
                return Err(parse_err(&tp, 2, format!("chain id {found}, expected {c}")));
            }
            let snapshots = read_weights_csv(&weights_path(dir, c), meta.n_nodes, meta.p)?;
            Ok(Trace {
                chain: c,
                p: meta.p,
                n_nodes: meta.n_nodes,
                thin: meta.thin,
                burnin: meta.burnin,
                records,
                snapshots,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_trace(chain: usize, n_records: usize, rng: &mut ChaCha8Rng) -> Trace {
        let (p, n) = (2, 3);
        let mut t = Trace::new(chain, p, n, 5, 100);
        for r in 0..n_records {
            let it = 5 * r + 4;
            let mut x = || rng.random::<f64>() * 10f64.powi(rng.random_range(-12..12));
            t.records.push(TraceRecord {
                iter: it,
                log_alpha: x().ln(),
                sigma: 1.0 - x(),
                tau: x(),
                a: vec![x(), x()],
                b: vec![x(), x()],
                w_star: vec![x(), 0.0],
                mean_w: x(),
                log_target: -x(),
                acc_hmc: r % 2 == 0,
                acc_mh: r % 3 == 0,
            });
            if r % 4 == 0 {
                t.snapshots.push(WeightSnapshot {
                    iter: it,
                    weights: (0..n * p).map(|_| x()).collect(),
                });
            }
        }
        t
    }

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let traces: Vec<Trace> = (0..3).map(|c| random_trace(c, 100, &mut rng)).collect();
        let dir = tempfile::tempdir().unwrap();
        save_traces(&traces, dir.path()).unwrap();
        let back = load_traces(dir.path()).unwrap();
        assert_eq!(back, traces);
        let total: usize = back.iter().map(|t| t.records.len()).sum();
        assert_eq!(total, 300);
    }

    #[test]
    fn empty_trace_writes_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let t = Trace::new(0, 1, 2, 1, 0);
        save_traces(std::slice::from_ref(&t), dir.path()).unwrap();
        let text = std::fs::read_to_string(trace_path(dir.path(), 0)).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert_eq!(load_traces(dir.path()).unwrap(), vec![t]);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, "iter,chain,logalpha\n1,0,0.5\n").unwrap();
        assert!(matches!(read_trace_csv(&path, 1), Err(Error::Parse { line: 1, .. })));
    }
}
