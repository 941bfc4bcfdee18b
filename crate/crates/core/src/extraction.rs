//! Turning free-form model output into structured answers.

use std::collections::HashSet;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::corpus::RoleLabel;
use crate::framebank::RoleMap;
use crate::matcher::ratio;
use crate::prompting::render_answer;

pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.75;

#[derive(Debug, Error, PartialEq)]
pub enum ExtractError {
    #[error("no option letter or option text found in the response")]
    NoChoiceFound,
    #[error("at least one option is required")]
    NoOptions,
    #[error("no JSON object found in the response")]
    NoJsonObject,
    #[error("the answer object is empty")]
    EmptyObject,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChoiceAnswer {
    pub index: usize,
    pub raw: String,
}

/// Picks the option a sense-disambiguation response settled on.
///
/// The first standalone capital letter inside the option range wins; failing that, the
/// longest option text found in the response (case-insensitive).
pub fn parse_choice<S: AsRef<str>>(response: &str, options: &[S]) -> Result<ChoiceAnswer, ExtractError> {
    if options.is_empty() {
        return Err(ExtractError::NoOptions);
    }
    let chars: Vec<char> = response.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if !c.is_ascii_uppercase() {
            continue;
        }
        let before = i.checked_sub(1).map(|p| chars[p]);
        let after = chars.get(i + 1).copied();
        let standalone = !before.is_some_and(char::is_alphanumeric) && !after.is_some_and(char::is_alphanumeric);
        let index = (c as u8 - b'A') as usize;
        if standalone && index < options.len() {
            return Ok(ChoiceAnswer { index, raw: c.to_string() });
        }
    }

    let haystack = response.to_lowercase();
    let mut best: Option<(usize, usize)> = None;
    for (index, option) in options.iter().enumerate() {
        let needle = option.as_ref().trim().to_lowercase();
        if needle.is_empty() || !haystack.contains(&needle) {
            continue;
        }
        if best.is_none_or(|(_, len)| needle.len() > len) {
            best = Some((index, needle.len()));
        }
    }
    best.map(|(index, _)| ChoiceAnswer {
        index,
        raw: options[index].as_ref().trim().to_string(),
    })
    .ok_or(ExtractError::NoChoiceFound)
}

/// Role/argument pairs recovered from a labeling response.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RawPrediction {
    /// The outer predicate key, or empty when the model answered with a bare role object.
    pub predicate: String,
    pub args: Vec<(RoleLabel, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parse_notes: Vec<String>,
}

impl RawPrediction {
    /// Renders the prediction in the answer shape the labeling prompt asks for.
    pub fn to_answer(&self) -> String {
        render_answer(&self.predicate, &self.args)
    }
}

pub fn parse_argument_json(
    response: &str,
    known_roles: &HashSet<RoleLabel>,
    role_descriptions: &RoleMap,
) -> Result<RawPrediction, ExtractError> {
    parse_argument_json_with(response, known_roles, role_descriptions, DEFAULT_SIMILARITY_THRESHOLD)
}

/// Extracts the first balanced JSON object from `response` and maps its keys onto roles.
///
/// A key is taken as a role when it parses as a label whose base role is known, or when
/// its similarity to some role description reaches `threshold`. Anything else is dropped
/// with a note. When two keys land on the same role the more similar one is kept.
pub fn parse_argument_json_with(
    response: &str,
    known_roles: &HashSet<RoleLabel>,
    role_descriptions: &RoleMap,
    threshold: f64,
) -> Result<RawPrediction, ExtractError> {
    // An echoed format line such as `{<predicate>: {role: argument}}` parses but maps to no
    // role, so the first object that yields an argument wins.
    let mut first = None;
    for object in json_objects(response) {
        let result = interpret(object, known_roles, role_descriptions, threshold);
        if matches!(&result, Ok(p) if !p.args.is_empty()) {
            return result;
        }
        first.get_or_insert(result);
    }
    first.unwrap_or(Err(ExtractError::NoJsonObject))
}

fn interpret(
    object: serde_json::Map<String, Value>,
    known_roles: &HashSet<RoleLabel>,
    role_descriptions: &RoleMap,
    threshold: f64,
) -> Result<RawPrediction, ExtractError> {
    let mut notes = Vec::new();

    let (predicate, inner) = match object.len() {
        1 if object.values().next().is_some_and(Value::is_object) => {
            let (key, value) = object.into_iter().next().expect("length checked");
            let Value::Object(inner) = value else { unreachable!() };
            (key, inner)
        }
        _ => (String::new(), object),
    };
    if inner.is_empty() {
        return Err(ExtractError::EmptyObject);
    }

    struct Candidate {
        key: String,
        label: RoleLabel,
        similarity: f64,
        texts: Vec<String>,
    }
    let mut winners: IndexMap<RoleLabel, Candidate> = IndexMap::new();

    for (key, value) in inner {
        let texts = argument_texts(&key, value, &mut notes);
        let Some((label, similarity)) = map_key(&key, known_roles, role_descriptions, threshold) else {
            notes.push(format!("dropped key {key:?}: no matching role"));
            continue;
        };
        if similarity < 1.0 {
            notes.push(format!("mapped key {key:?} to {label} (description similarity {similarity:.3})"));
        }
        let candidate = Candidate { key, label: label.clone(), similarity, texts };
        match winners.get_mut(&label) {
            Some(existing) => {
                if candidate.similarity > existing.similarity {
                    notes.push(format!(
                        "keys {:?} and {:?} both map to {label}; kept {:?}",
                        existing.key, candidate.key, candidate.key
                    ));
                    *existing = candidate;
                } else {
                    notes.push(format!(
                        "keys {:?} and {:?} both map to {label}; kept {:?}",
                        existing.key, candidate.key, existing.key
                    ));
                }
            }
            None => {
                winners.insert(label, candidate);
            }
        }
    }

    let args = winners
        .into_values()
        .flat_map(|c| {
            let label = c.label;
            c.texts.into_iter().map(move |t| (label.clone(), t))
        })
        .collect();
    Ok(RawPrediction { predicate, args, parse_notes: notes })
}

fn map_key(
    key: &str,
    known_roles: &HashSet<RoleLabel>,
    role_descriptions: &RoleMap,
    threshold: f64,
) -> Option<(RoleLabel, f64)> {
    if let Ok(label) = RoleLabel::parse(key) {
        if known_roles.contains(label.base()) {
            return Some((label, 1.0));
        }
    }
    let key = key.trim().to_lowercase();
    let mut best: Option<(&RoleLabel, f64)> = None;
    for (label, description) in role_descriptions {
        let score = ratio(&key, &description.trim().to_lowercase());
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((label, score));
        }
    }
    best.filter(|(_, s)| *s >= threshold).map(|(l, s)| (l.clone(), s))
}

fn argument_texts(key: &str, value: Value, notes: &mut Vec<String>) -> Vec<String> {
    match value {
        Value::Null => Vec::new(),
        Value::String(s) => clean(&s).into_iter().collect(),
        Value::Number(n) => vec![n.to_string()],
        Value::Bool(b) => vec![b.to_string()],
        Value::Array(items) => items
            .into_iter()
            .flat_map(|item| argument_texts(key, item, notes))
            .collect(),
        Value::Object(_) => {
            notes.push(format!("ignored nested object under key {key:?}"));
            Vec::new()
        }
    }
}

fn clean(text: &str) -> Option<String> {
    let quotes: &[char] = &['"', '\'', '\u{201c}', '\u{201d}', '\u{2018}', '\u{2019}', '`'];
    let t = text.trim().trim_matches(quotes).trim();
    (!t.is_empty()).then(|| t.to_string())
}

/// Byte ranges of balanced `{...}` regions, scanning left to right. Braces inside
/// double-quoted strings are ignored.
fn balanced_objects(text: &str) -> impl Iterator<Item = &str> + '_ {
    let mut from = 0;
    std::iter::from_fn(move || {
        while let Some(offset) = text[from..].find('{') {
            let start = from + offset;
            from = start + 1;
            if let Some(end) = balanced_end(&text[start..]) {
                return Some(&text[start..start + end]);
            }
        }
        None
    })
}

fn balanced_end(text: &str) -> Option<usize> {
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text.char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth = depth.checked_sub(1)?;
                if depth == 0 {
                    return Some(i + 1);
                }
            }
            _ => {}
        }
    }
    None
}

fn json_objects(text: &str) -> impl Iterator<Item = serde_json::Map<String, Value>> + '_ {
    balanced_objects(text).filter_map(|candidate| {
        let value = serde_json::from_str::<Value>(candidate)
            .ok()
            .or_else(|| serde_json::from_str::<Value>(&relax(candidate)).ok())?;
        match value {
            Value::Object(map) => Some(map),
            _ => None,
        }
    })
}

/// Rewrites common near-JSON into JSON: single-quoted strings, unquoted keys and values,
/// and trailing commas.
fn relax(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() + 16);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '"' | '\'' => {
                let (literal, next) = read_string(&chars, i);
                out.push_str(&serde_json::to_string(&literal).expect("string"));
                i = next;
            }
            '{' | '}' | '[' | ']' | ':' => {
                out.push(c);
                i += 1;
            }
            ',' => {
                let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
                if !matches!(next, Some('}') | Some(']')) {
                    out.push(',');
                }
                i += 1;
            }
            c if c.is_whitespace() => {
                out.push(c);
                i += 1;
            }
            _ => {
                let start = i;
                while i < chars.len() && !matches!(chars[i], '{' | '}' | '[' | ']' | ':' | ',') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let word = word.trim();
                let bare = matches!(word, "true" | "false" | "null") || word.parse::<f64>().is_ok();
                if bare {
                    out.push_str(word);
                } else {
                    out.push_str(&serde_json::to_string(word).expect("string"));
                }
            }
        }
    }
    out
}

/// Reads a quoted string starting at `chars[start]`; returns its content and the index
/// past the closing quote.
fn read_string(chars: &[char], start: usize) -> (String, usize) {
    let quote = chars[start];
    let mut literal = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            '\\' if i + 1 < chars.len() => {
                let escaped = chars[i + 1];
                literal.push(match escaped {
                    'n' => '\n',
                    't' => '\t',
                    other => other,
                });
                i += 2;
            }
            c if c == quote => return (literal, i + 1),
            c => {
                literal.push(c);
                i += 1;
            }
        }
    }
    (literal, i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sell_roles() -> RoleMap {
        let mut roles = RoleMap::new();
        roles.insert(RoleLabel::core(0), "seller".to_string());
        roles.insert(RoleLabel::core(1), "thing sold".to_string());
        roles.insert(RoleLabel::adjunct("TMP"), "temporal".to_string());
        roles
    }

    fn known(roles: &RoleMap) -> HashSet<RoleLabel> {
        roles.keys().cloned().collect()
    }

    fn parse(response: &str) -> Result<RawPrediction, ExtractError> {
        let roles = sell_roles();
        parse_argument_json(response, &known(&roles), &roles)
    }

    fn pairs(p: &RawPrediction) -> Vec<(String, &str)> {
        p.args.iter().map(|(l, t)| (l.short(), t.as_str())).collect()
    }

    #[test]
    fn choice_by_letter() {
        let opts = ["x", "y", "z"];
        assert_eq!(parse_choice("Answer: B", &opts).unwrap().index, 1);
        assert_eq!(parse_choice("(C)", &opts).unwrap().index, 2);
        let two = ["transfer ownership", "betray"];
        assert_eq!(parse_choice("The best option is A: transfer ownership", &two).unwrap().index, 0);
    }

    #[test]
    fn choice_failures_and_text_fallback() {
        let two = ["transfer ownership", "betray"];
        assert_eq!(parse_choice("I am not sure.", &two), Err(ExtractError::NoChoiceFound));
        let c = parse_choice("it means to betray someone", &two).unwrap();
        assert_eq!((c.index, c.raw.as_str()), (1, "betray"));
        // out-of-range letters are skipped
        assert_eq!(parse_choice("Z or maybe B", &two).unwrap().index, 1);
        let none: [&str; 0] = [];
        assert_eq!(parse_choice("A", &none), Err(ExtractError::NoOptions));
    }

    #[test]
    fn choice_prefers_longest_option_text() {
        let opts = ["sell", "sell out"];
        assert_eq!(parse_choice("they would sell out", &opts).unwrap().index, 1);
    }

    #[test]
    fn direct_parse() {
        let p = parse(r#"{"sold": {"A0": "John", "A1": "the book"}}"#).unwrap();
        assert_eq!(p.predicate, "sold");
        assert_eq!(pairs(&p), vec![("A0".into(), "John"), ("A1".into(), "the book")]);
        assert!(p.parse_notes.is_empty());
    }

    #[test]
    fn fences_and_case() {
        let p = parse("```json\n{\"sold\": {\"a0\": \"John\"}}\n```").unwrap();
        assert_eq!(pairs(&p), vec![("A0".into(), "John")]);
    }

    #[test]
    fn description_keys_map_by_similarity() {
        let p = parse(r#"Sure! {"sold": {"the seller": "John"}}"#).unwrap();
        assert_eq!(pairs(&p), vec![("A0".into(), "John")]);
        assert_eq!(p.parse_notes.len(), 1);
        let p = parse(r#"{"sold": {"buyer": "Mary"}}"#).unwrap();
        assert!(p.args.is_empty());
        assert!(p.parse_notes[0].contains("dropped"));
    }

    #[test]
    fn collisions_keep_the_closer_key() {
        let p = parse(r#"{"sold": {"the seller": "Mary", "A0": "John"}}"#).unwrap();
        assert_eq!(pairs(&p), vec![("A0".into(), "John")]);
        assert!(p.parse_notes.iter().any(|n| n.contains("both map to A0")));
    }

    #[test]
    fn lists_nulls_and_empties() {
        let p = parse(r#"{"sold": {"TMP": ["today", " 'at noon' "], "A0": null, "A1": ""}}"#).unwrap();
        assert_eq!(pairs(&p), vec![("TMP".into(), "today"), ("TMP".into(), "at noon")]);
    }

    #[test]
    fn bare_role_object_and_continuations() {
        let p = parse(r#"{"A0": "John", "C-A1": "was it"}"#).unwrap();
        assert_eq!(p.predicate, "");
        assert_eq!(pairs(&p), vec![("A0".into(), "John"), ("C-A1".into(), "was it")]);
    }

    #[test]
    fn errors() {
        assert_eq!(parse("no json here"), Err(ExtractError::NoJsonObject));
        assert_eq!(parse("{}"), Err(ExtractError::EmptyObject));
        assert_eq!(parse(r#"{"sold": {}}"#), Err(ExtractError::EmptyObject));
        assert_eq!(parse("{ unbalanced"), Err(ExtractError::NoJsonObject));
    }

    #[test]
    fn skips_unparseable_objects() {
        let p = parse(r#"Format: {<predicate>: {role: argument}}. Answer: {"sold": {"A0": "John"}}"#).unwrap();
        assert_eq!(pairs(&p), vec![("A0".into(), "John")]);
    }

    #[test]
    fn relaxed_json() {
        let p = parse("{sold: {A0: John, 'A1': 'the book',}}").unwrap();
        assert_eq!(pairs(&p), vec![("A0".into(), "John"), ("A1".into(), "the book")]);
    }

    #[test]
    fn braces_inside_strings() {
        let p = parse(r#"{"sold": {"A1": "a {curly} book"}} trailing }"#).unwrap();
        assert_eq!(pairs(&p), vec![("A1".into(), "a {curly} book")]);
    }

    fn arb_prediction() -> impl Strategy<Value = RawPrediction> {
        let label = prop_oneof![
            Just(RoleLabel::core(0)),
            Just(RoleLabel::core(1)),
            Just(RoleLabel::adjunct("TMP")),
            Just(RoleLabel::Continuation(Box::new(RoleLabel::core(1)))),
        ];
        (
            "[a-z]{1,8}",
            proptest::collection::vec((label, "[A-Za-z0-9 ,.'{}]{0,12}[A-Za-z]"), 1..6),
        )
            .prop_map(|(predicate, args)| {
                // group entries by role so the rendered object re-parses in the same order
                let mut grouped: IndexMap<RoleLabel, Vec<String>> = IndexMap::new();
                for (l, t) in args {
                    grouped.entry(l).or_default().push(t.trim().to_string());
                }
                let args = grouped
                    .into_iter()
                    .flat_map(|(l, ts)| ts.into_iter().map(move |t| (l.clone(), t)))
                    .filter(|(_, t)| clean(t).as_deref() == Some(t.as_str()))
                    .collect();
                RawPrediction { predicate, args, parse_notes: vec![] }
            })
            .prop_filter("non-empty", |p| !p.args.is_empty())
    }

    proptest! {
        #[test]
        fn never_panics(s in ".{0,200}") {
            let _ = parse(&s);
        }

        #[test]
        fn never_panics_on_json_like(s in "[{}\\[\\]\"':, a-zA-Z0-9\\\\]{0,80}") {
            let _ = parse(&s);
        }

        #[test]
        fn answer_round_trip(p in arb_prediction()) {
            let again = parse(&format!("Answer: {}", p.to_answer())).unwrap();
            prop_assert_eq!(again, p);
        }
    }
}
