//! Text and JSON formats for polynomials and corpora.
//!
//! Text: one term per line, `coeff e1 e2 … en`. Blank lines and `#` comments
//! are ignored, except `# n=<count>` which fixes the dimension (needed for the
//! zero polynomial). A corpus is a sequence of such polynomials separated by
//! lines holding `---`; `# id=<name>` names the polynomial it appears in.
//!
//! JSON: `{"n": 2, "terms": [{"coeff": 1.5, "exponents": [1, 0]}]}`; a corpus
//! is `{"polynomials": [{"id": "p0", "n": …, "terms": …}, …]}`.

use serde::{Deserialize, Serialize};

use super::Polynomial;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub n: usize,
    pub terms: Vec<TermJson>,
}

impl PolyJson {
    pub fn to_polynomial(&self) -> Result<Polynomial> {
        Polynomial::from_terms(self.n, self.terms.iter().map(|t| (t.exponents.clone(), t.coeff)))
    }
}

impl From<&Polynomial> for PolyJson {
    fn from(p: &Polynomial) -> Self {
        PolyJson {
            id: None,
            n: p.n(),
            terms: p
                .terms()
                .iter()
                .map(|(e, c)| TermJson {
                    coeff: *c,
                    exponents: e.clone(),
                })
                .collect(),
        }
    }
}

impl Polynomial {
    pub fn to_text(&self) -> String {
        let mut s = format!("# n={}\n", self.n());
        for (e, c) in self.terms() {
            s.push_str(&format!("{c:?}"));
            for k in e {
                s.push_str(&format!(" {k}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        parse_text_block(text, 0).map(|(_, p)| p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&PolyJson::from(self)).expect("serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let pj: PolyJson = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        pj.to_polynomial()
    }

    /// JSON if the input starts with `{`, text otherwise.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            Self::from_json(text)
        } else {
            Self::parse_text(text)
        }
    }
}

/// Parses one text-format polynomial whose first line is `first_line`
/// (1-based) in the enclosing file; returns its optional id.
fn parse_text_block(text: &str, line_offset: usize) -> Result<(Option<String>, Polynomial)> {
    let mut n: Option<usize> = None;
    let mut id = None;
    let mut terms = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = line_offset + i + 1;
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("n=") {
                let declared: usize = v.trim().parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad dimension directive '{line}'"),
                })?;
                n = Some(declared);
            } else if let Some(v) = comment.strip_prefix("id=") {
                id = Some(v.trim().to_string());
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let coeff: f64 = fields.next().unwrap().parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("bad coefficient in '{line}'"),
        })?;
        let exps: Vec<u32> = fields
            .map(|f| {
                f.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad exponent '{f}'"),
                })
            })
            .collect::<Result<_>>()?;
        match n {
            None => n = Some(exps.len()),
            Some(m) if m != exps.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected {m} exponents, found {}", exps.len()),
                })
            }
            _ => {}
        }
        terms.push((exps, coeff));
    }
    let n = n.ok_or(Error::Parse {
        line: line_offset + 1,
        msg: "empty polynomial without a '# n=' directive".into(),
    })?;
    let p = Polynomial::from_terms(n, terms).map_err(|e| Error::Parse {
        line: line_offset + 1,
        msg: e.to_string(),
    })?;
    Ok((id, p))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusEntry {
    pub id: String,
    pub poly: Polynomial,
}

/// An ordered, named list of polynomials.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Corpus {
    pub entries: Vec<CorpusEntry>,
}

#[derive(Serialize, Deserialize)]
struct CorpusJson {
    polynomials: Vec<PolyJson>,
}

impl Corpus {
    pub fn from_polys(polys: impl IntoIterator<Item = Polynomial>) -> Self {
        Self {
            entries: polys
                .into_iter()
                .enumerate()
                .map(|(i, poly)| CorpusEntry {
                    id: format!("p{i}"),
                    poly,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("# id={}\n{}", e.id, e.poly.to_text()))
            .collect::<Vec<_>>()
            .join("---\n")
    }

    pub fn to_json(&self) -> String {
        let cj = CorpusJson {
            polynomials: self
                .entries
                .iter()
                .map(|e| PolyJson {
                    id: Some(e.id.clone()),
                    ..PolyJson::from(&e.poly)
                })
                .collect(),
        };
        serde_json::to_string_pretty(&cj).expect("serializable")
    }
}

/// Parses a corpus in either format.
pub fn parse_corpus(text: &str) -> Result<Corpus> {
    let mut entries = Vec::new();
    if text.trim_start().starts_with('{') {
        let cj: CorpusJson = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        for (i, pj) in cj.polynomials.iter().enumerate() {
            entries.push(CorpusEntry {
                id: pj.id.clone().unwrap_or_else(|| format!("p{i}")),
                poly: pj.to_polynomial()?,
            });
        }
    } else {
        let mut block = String::new();
        let mut start = 0usize;
        let flush = |block: &mut String, start: usize, entries: &mut Vec<CorpusEntry>| -> Result<()> {
            if block.lines().any(|l| !l.trim().is_empty()) {
                let (id, poly) = parse_text_block(block, start)?;
                let index = entries.len();
                entries.push(CorpusEntry {
                    id: id.unwrap_or_else(|| format!("p{index}")),
                    poly,
                });
            }
            block.clear();
            Ok(())
        };
        for (i, line) in text.lines().enumerate() {
            if line.trim() == "---" {
                flush(&mut block, start, &mut entries)?;
                start = i + 1;
            } else {
                block.push_str(line);
                block.push('\n');
            }
        }
        flush(&mut block, start, &mut entries)?;
    }
    Ok(Corpus { entries })
}
