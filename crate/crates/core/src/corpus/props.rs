use std::collections::HashSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ArgumentSpan, Corpus, CorpusError, PredicateInstance, RoleLabel, Sentence};

/// Per-predicate-column metadata supplied next to a props file, in column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub sentence_id: String,
    pub pred_index: usize,
    pub lemma: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sense: Option<String>,
}

/// Parses props column text into predicate instances, using default sentence ids.
pub fn parse_props(column_text: &str) -> Result<Vec<PredicateInstance>, CorpusError> {
    parse_corpus(column_text, None).map(|c| c.instances)
}

/// Renders the predicate columns of one sentence. An empty instance list yields the token
/// column alone.
pub fn serialize_props(
    sentence: &Sentence,
    instances: &[PredicateInstance],
) -> Result<String, CorpusError> {
    let mut columns = Vec::with_capacity(instances.len());
    for inst in instances {
        if inst.sentence.id != sentence.id || inst.sentence.tokens != sentence.tokens {
            return Err(CorpusError::MixedSentences);
        }
        columns.push(encode_column(sentence, inst)?);
    }
    let mut out = String::new();
    for (i, token) in sentence.tokens.iter().enumerate() {
        out.push_str(token);
        for col in &columns {
            out.push('\t');
            out.push_str(&col[i]);
        }
        out.push('\n');
    }
    Ok(out)
}

fn encode_column(sentence: &Sentence, inst: &PredicateInstance) -> Result<Vec<String>, CorpusError> {
    let n = sentence.len();
    let mut spans: Vec<(String, usize, usize)> = inst
        .gold_args
        .iter()
        .map(|a| (a.label.canonical(), a.start, a.end))
        .collect();
    spans.push(("V".to_string(), inst.pred_index, inst.pred_end));
    spans.sort_by_key(|&(_, start, end)| (start, end));

    for (_, start, end) in &spans {
        if start > end || *end >= n {
            return Err(CorpusError::SpanOutOfBounds {
                start: *start,
                end: *end,
                len: n,
            });
        }
    }
    for pair in spans.windows(2) {
        let (_, s1, e1) = &pair[0];
        let (_, s2, e2) = &pair[1];
        if s2 <= e1 {
            return Err(CorpusError::OverlappingSpansWithinColumn {
                first_start: *s1,
                first_end: *e1,
                second_start: *s2,
                second_end: *e2,
            });
        }
    }

    let mut tags = vec!["*".to_string(); n];
    for (label, start, end) in spans {
        if start == end {
            tags[start] = format!("({label}*)");
        } else {
            tags[start] = format!("({label}*");
            tags[end] = "*)".to_string();
        }
    }
    Ok(tags)
}

enum Tag<'a> {
    Star,
    Open(&'a str),
    Close,
    Single(&'a str),
}

fn parse_tag(tag: &str) -> Option<Tag<'_>> {
    match tag {
        "*" => return Some(Tag::Star),
        "*)" => return Some(Tag::Close),
        _ => {}
    }
    let body = tag.strip_prefix('(')?;
    let (label, tag) = if let Some(label) = body.strip_suffix("*)") {
        (label, Tag::Single(label))
    } else {
        let label = body.strip_suffix('*')?;
        (label, Tag::Open(label))
    };
    let clean = !label.is_empty() && !label.contains(['(', ')', '*']);
    clean.then_some(tag)
}

struct Row<'a> {
    line: usize,
    cols: Vec<&'a str>,
}

pub(super) fn parse_corpus(
    text: &str,
    sidecar: Option<&[SidecarEntry]>,
) -> Result<Corpus, CorpusError> {
    let blocks = split_sentences(text)?;
    let mut corpus = Corpus::default();
    let mut sidecar_iter = sidecar.map(|s| s.iter());
    let mut seen_ids = HashSet::new();

    for (ordinal, rows) in blocks.iter().enumerate() {
        let width = rows[0].cols.len();
        for row in rows {
            if row.cols.len() != width {
                return Err(CorpusError::ColumnCountMismatch {
                    line: row.line,
                    expected: width,
                    found: row.cols.len(),
                });
            }
        }
        let tokens: Vec<String> = rows.iter().map(|r| r.cols[0].to_string()).collect();
        let n_columns = width - 1;

        let mut meta = Vec::with_capacity(n_columns);
        if let Some(iter) = sidecar_iter.as_mut() {
            for _ in 0..n_columns {
                let entry = iter.next().ok_or_else(|| {
                    CorpusError::Sidecar(format!(
                        "ran out of entries at sentence starting on line {}",
                        rows[0].line
                    ))
                })?;
                meta.push(entry);
            }
        }
        let id = match meta.first() {
            Some(first) => {
                if meta.iter().any(|m| m.sentence_id != first.sentence_id) {
                    return Err(CorpusError::Sidecar(format!(
                        "entries for the sentence on line {} disagree on sentence_id",
                        rows[0].line
                    )));
                }
                first.sentence_id.clone()
            }
            None => format!("s{ordinal}"),
        };
        if !seen_ids.insert(id.clone()) {
            return Err(CorpusError::Sidecar(format!("duplicate sentence id {id:?}")));
        }
        let sentence = Arc::new(Sentence::new(id, tokens)?);

        for column in 1..width {
            let (pred_index, pred_end, gold_args) = decode_column(rows, column, &sentence)?;
            let (lemma, gold_sense) = match meta.get(column - 1) {
                Some(entry) => {
                    if entry.pred_index != pred_index {
                        return Err(CorpusError::Sidecar(format!(
                            "entry for sentence {:?} says pred_index {} but the V span starts at {}",
                            entry.sentence_id, entry.pred_index, pred_index
                        )));
                    }
                    (entry.lemma.to_lowercase(), entry.sense.clone())
                }
                None => (sentence.tokens[pred_index].to_lowercase(), None),
            };
            corpus.instances.push(PredicateInstance {
                sentence: Arc::clone(&sentence),
                pred_index,
                pred_end,
                lemma,
                gold_args,
                gold_sense,
            });
        }
        corpus.sentences.push(sentence);
    }

    if let Some(mut rest) = sidecar_iter {
        if rest.next().is_some() {
            return Err(CorpusError::Sidecar(
                "more entries than predicate columns".to_string(),
            ));
        }
    }
    Ok(corpus)
}

fn split_sentences(text: &str) -> Result<Vec<Vec<Row<'_>>>, CorpusError> {
    let mut blocks = Vec::new();
    let mut current: Vec<Row<'_>> = Vec::new();
    let mut pending_blank: Option<usize> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let cols: Vec<&str> = raw.split_whitespace().collect();
        if cols.is_empty() {
            if !current.is_empty() {
                blocks.push(std::mem::take(&mut current));
                pending_blank = None;
            } else if !blocks.is_empty() && pending_blank.is_none() {
                pending_blank = Some(line);
            }
            continue;
        }
        if let Some(blank) = pending_blank.take() {
            // two separators in a row delimit a sentence with no tokens
            return Err(CorpusError::EmptySentence { line: blank });
        }
        current.push(Row { line, cols });
    }
    if !current.is_empty() {
        blocks.push(current);
    }
    Ok(blocks)
}

type DecodedColumn = (usize, usize, Vec<ArgumentSpan>);

fn decode_column(
    rows: &[Row<'_>],
    column: usize,
    sentence: &Sentence,
) -> Result<DecodedColumn, CorpusError> {
    let mut open: Option<(&str, usize, usize)> = None;
    let mut verb: Option<(usize, usize)> = None;
    let mut args = Vec::new();

    let mut close = |label: &str, start: usize, end: usize, line: usize| {
        if label.eq_ignore_ascii_case("V") {
            if verb.replace((start, end)).is_some() {
                return Err(CorpusError::DuplicateVerbSpan { line, column });
            }
            return Ok(());
        }
        let role = RoleLabel::parse(label)
            .map_err(|source| CorpusError::UnknownLabel { line, source })?;
        args.push(ArgumentSpan::new(sentence, role, start, end)?);
        Ok(())
    };

    for (tok, row) in rows.iter().enumerate() {
        let raw = row.cols[column];
        let tag = parse_tag(raw).ok_or_else(|| CorpusError::MalformedTag {
            line: row.line,
            column,
            tag: raw.to_string(),
        })?;
        let unbalanced = |detail: &str| CorpusError::UnbalancedBracket {
            line: row.line,
            column,
            detail: detail.to_string(),
        };
        match tag {
            Tag::Star => {}
            Tag::Open(label) => {
                if open.is_some() {
                    return Err(unbalanced("bracket opened inside an open span"));
                }
                open = Some((label, tok, row.line));
            }
            Tag::Close => {
                let (label, start, _) = open
                    .take()
                    .ok_or_else(|| unbalanced("closing bracket without an open span"))?;
                close(label, start, tok, row.line)?;
            }
            Tag::Single(label) => {
                if open.is_some() {
                    return Err(unbalanced("bracket opened inside an open span"));
                }
                close(label, tok, tok, row.line)?;
            }
        }
    }
    if let Some((_, _, line)) = open {
        return Err(CorpusError::UnbalancedBracket {
            line,
            column,
            detail: "bracket never closed".to_string(),
        });
    }
    let (pred_index, pred_end) = verb.ok_or(CorpusError::MissingVerbSpan {
        line: rows[0].line,
        column,
    })?;
    Ok((pred_index, pred_end, args))
}
