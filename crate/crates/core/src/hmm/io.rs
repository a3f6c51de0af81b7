//! The `MSHMM v1` model file format: UTF-8 text with optional `codebook`,
//! `hmm`, `anchors` and `labels` sections. Floats are written with 17
//! significant digits so save/load round-trips are byte-exact.

use crate::error::{Error, Result};

use super::vq::Codebook;
use super::DiscreteHmm;

/// Contents of one model file. Any subset of sections may be present.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelFile {
    pub codebook: Option<Codebook>,
    pub hmm: Option<DiscreteHmm>,
    pub anchors: Option<Vec<usize>>,
    pub labels: Option<Vec<String>>,
}

const HEADER: &str = "MSHMM v1";

/// 17 significant digits; enough to reconstruct any finite f64 exactly.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_row(row: &[f64]) -> String {
    row.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ")
}

/// Serialize to canonical text.
pub fn save_model_file(mf: &ModelFile) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    if let Some(cb) = &mf.codebook {
        out.push_str(&format!("codebook {} {}\n", cb.len(), cb.dim));
        for c in &cb.centroids {
            out.push_str(&fmt_row(c));
            out.push('\n');
        }
    }
    if let Some(hmm) = &mf.hmm {
        out.push_str(&format!("hmm {} {}\n", hmm.n_states, hmm.n_symbols));
        out.push_str(&format!("pi {}\n", fmt_row(&hmm.pi)));
        out.push_str("a\n");
        for i in 0..hmm.n_states {
            out.push_str(&fmt_row(&hmm.a[i * hmm.n_states..(i + 1) * hmm.n_states]));
            out.push('\n');
        }
        out.push_str(&format!("exit {}\n", fmt_f64(hmm.exit)));
        out.push_str("b\n");
        for i in 0..hmm.n_states {
            out.push_str(&fmt_row(&hmm.b[i * hmm.n_symbols..(i + 1) * hmm.n_symbols]));
            out.push('\n');
        }
    }
    if let Some(anchors) = &mf.anchors {
        out.push_str(&format!("anchors {}\n", anchors.len()));
        let line: Vec<String> = anchors.iter().map(|a| a.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    if let Some(labels) = &mf.labels {
        out.push_str(&format!("labels {}\n", labels.len()));
        out.push_str(&labels.join(" "));
        out.push('\n');
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    peeked: Option<(usize, &'a str)>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate(), peeked: None }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        self.peeked.take().or_else(|| self.inner.next())
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next().ok_or_else(|| Error::ModelFormat(format!("unexpected end of file, wanted {what}")))
    }
}

fn bad(lineno: usize, msg: impl std::fmt::Display) -> Error {
    Error::ModelFormat(format!("line {}: {msg}", lineno + 1))
}

fn parse_floats(lineno: usize, line: &str, want: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = line
        .split_whitespace()
        .map(|tok| tok.parse::<f64>().map_err(|_| bad(lineno, format!("bad float `{tok}`"))))
        .collect::<Result<_>>()?;
    if vals.len() != want {
        return Err(bad(lineno, format!("expected {want} values, found {}", vals.len())));
    }
    Ok(vals)
}

/// Parse model file text.
pub fn load_model_file(text: &str) -> Result<ModelFile> {
    let mut lines = Lines::new(text);
    let (n0, header) = lines.expect("header")?;
    if header.trim_end() != HEADER {
        return Err(bad(n0, "expected `MSHMM v1` header"));
    }

    let mut mf = ModelFile::default();
    while let Some((lineno, line)) = lines.next() {
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = line.split_whitespace();
        let section = toks.next().unwrap();
        match section {
            "codebook" => {
                let k: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(lineno, "codebook wants `codebook K dim`"))?;
                let dim: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(lineno, "codebook wants `codebook K dim`"))?;
                let mut centroids = Vec::with_capacity(k);
                for _ in 0..k {
                    let (n, l) = lines.expect("centroid row")?;
                    centroids.push(parse_floats(n, l, dim)?);
                }
                mf.codebook = Some(Codebook { dim, centroids });
            }
            "hmm" => {
                let s: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(lineno, "hmm wants `hmm S K`"))?;
                let k: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(lineno, "hmm wants `hmm S K`"))?;

                let (n, l) = lines.expect("pi row")?;
                let pi_line = l
                    .strip_prefix("pi ")
                    .ok_or_else(|| bad(n, "expected `pi ...`"))?;
                let pi = parse_floats(n, pi_line, s)?;

                let (n, l) = lines.expect("a header")?;
                if l.trim() != "a" {
                    return Err(bad(n, "expected `a`"));
                }
                let mut a = Vec::with_capacity(s * s);
                for _ in 0..s {
                    let (n, l) = lines.expect("transition row")?;
                    a.extend(parse_floats(n, l, s)?);
                }

                let (n, l) = lines.expect("exit line")?;
                let exit_tok =
                    l.strip_prefix("exit ").ok_or_else(|| bad(n, "expected `exit ...`"))?;
                let exit: f64 =
                    exit_tok.trim().parse().map_err(|_| bad(n, "bad exit value"))?;

                let (n, l) = lines.expect("b header")?;
                if l.trim() != "b" {
                    return Err(bad(n, "expected `b`"));
                }
                let mut b = Vec::with_capacity(s * k);
                for _ in 0..s {
                    let (n, l) = lines.expect("emission row")?;
                    b.extend(parse_floats(n, l, k)?);
                }

                let hmm = DiscreteHmm::new(pi, a, exit, b)
                    .map_err(|e| Error::ModelFormat(format!("invalid hmm section: {e}")))?;
                mf.hmm = Some(hmm);
            }
            "anchors" => {
                let count: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(lineno, "anchors wants a count"))?;
                let (n, l) = lines.expect("anchors row")?;
                let anchors: Vec<usize> = l
                    .split_whitespace()
                    .map(|t| t.parse().map_err(|_| bad(n, format!("bad anchor `{t}`"))))
                    .collect::<Result<_>>()?;
                if anchors.len() != count {
                    return Err(bad(n, "anchor count mismatch"));
                }
                mf.anchors = Some(anchors);
            }
            "labels" => {
                let count: usize = toks
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad(lineno, "labels wants a count"))?;
                let (n, l) = lines.expect("labels row")?;
                let labels: Vec<String> = l.split_whitespace().map(str::to_string).collect();
                if labels.len() != count {
                    return Err(bad(n, "label count mismatch"));
                }
                mf.labels = Some(labels);
            }
            other => return Err(bad(lineno, format!("unknown section `{other}`"))),
        }
    }
    Ok(mf)
}
