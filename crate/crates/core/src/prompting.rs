//! Prompt assembly for sense disambiguation and argument labeling.
//!
//! Label prompts are built from one of six templates. `original` and `v1`..`v4` are kept
//! character for character, including the misspelled "prdicate" in `v1` (switch it off
//! with `fix_typos`). `no_description` is `original` without the role/description clause.

use std::fmt;
use std::str::FromStr;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{PredicateInstance, RoleLabel};
use crate::framebank::RoleMap;

const SLOT_SENTENCE: &str = "<sentence>";
const SLOT_PREDICATE: &str = "<predicate>";
const SLOT_ROLES: &str = "<{role: description}>";

const ANSWER_FORMAT: &str =
    "\nProvide the answer in JSON format as follows: {<predicate>: {role: argument}}.";

const ORIGINAL: &str = "Give a sentence: <sentence>, a predicate: <predicate>, all possible argument roles and their descriptions: <{role: description}>, please label the arguments about predicate <predicate> of the sentence.";
const V1: &str = "Give a sentence: <sentence>, all the possible arguments of the prdicate <predicate> and their descriptions: <{role: description}>, please label the arguments about predicate <predicate> of the sentence.";
const V2: &str = "Give sentence: <sentence>, predicate: <predicate>, possible argument and descriptions: <{role: description}>, please label the arguments about predicate <predicate> of the sentence.";
const V3: &str = "Give sentence: <sentence>, predicate: <predicate>, please label the arguments about predicate <predicate> of the sentence.";
const V4: &str = "Give sentence: <sentence>, predicate: <predicate>, please label the arguments about predicate <predicate> of the sentence in the given PropBank-style semantic role labels.";
const NO_DESCRIPTION: &str = "Give a sentence: <sentence>, a predicate: <predicate>, please label the arguments about predicate <predicate> of the sentence.";

const SENSE_HEAD: &str = "Give a sentence: <sentence>.\nQuestion: What is the sense of predicate <predicate> in the given sentence above?";
const SENSE_TAIL: &str = "Please give the best option as the answer. Answer:";

/// Separator between exemplar blocks and the target block.
pub const BLOCK_SEPARATOR: &str = "\n\n";
pub const MAX_OPTIONS: usize = 26;

#[derive(Debug, Error, PartialEq)]
pub enum PromptError {
    #[error("{0} sense options exceed the A-Z letter range")]
    TooManyOptions(usize),
    #[error("no sense options to choose from")]
    NoOptions,
    #[error("variant {variant} needs a role list but {id} has none")]
    MissingRoles { variant: PromptVariant, id: String },
    #[error("unknown prompt variant {0:?}")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptVariant {
    Original,
    V1,
    V2,
    V3,
    V4,
    NoDescription,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 6] = [
        PromptVariant::Original,
        PromptVariant::V1,
        PromptVariant::V2,
        PromptVariant::V3,
        PromptVariant::V4,
        PromptVariant::NoDescription,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PromptVariant::Original => "original",
            PromptVariant::V1 => "v1",
            PromptVariant::V2 => "v2",
            PromptVariant::V3 => "v3",
            PromptVariant::V4 => "v4",
            PromptVariant::NoDescription => "no_description",
        }
    }

    /// Whether the template carries the role/description object.
    pub fn lists_roles(self) -> bool {
        matches!(
            self,
            PromptVariant::Original | PromptVariant::V1 | PromptVariant::V2
        )
    }

    /// The instruction sentence, with slots, followed by the answer-format line.
    pub fn template(self, fix_typos: bool) -> String {
        let head = match self {
            PromptVariant::Original => ORIGINAL,
            PromptVariant::V1 => V1,
            PromptVariant::V2 => V2,
            PromptVariant::V3 => V3,
            PromptVariant::V4 => V4,
            PromptVariant::NoDescription => NO_DESCRIPTION,
        };
        let mut text = format!("{head}{ANSWER_FORMAT}");
        if fix_typos {
            text = text.replace("prdicate", "predicate");
        }
        text
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for PromptVariant {
    type Err = PromptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let key = match key.as_str() {
            "0" | "prompt0" => "original",
            "1" | "prompt1" => "v1",
            "2" | "prompt2" => "v2",
            "3" | "prompt3" => "v3",
            "4" | "prompt4" => "v4",
            other => other,
        };
        PromptVariant::ALL
            .into_iter()
            .find(|v| v.id() == key)
            .ok_or_else(|| PromptError::UnknownVariant(s.to_string()))
    }
}

/// A fully assembled prompt with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub text: String,
    /// `None` for sense-disambiguation prompts.
    pub variant: Option<PromptVariant>,
    pub shots: usize,
    pub exemplar_ids: Vec<String>,
    pub target: String,
}

/// One sentence/predicate pair to be rendered through a label template.
#[derive(Debug, Clone, Copy)]
pub struct LabelQuery<'a> {
    pub id: &'a str,
    pub sentence: &'a str,
    pub predicate: &'a str,
    pub roles: &'a RoleMap,
}

#[derive(Debug, Clone, Copy)]
pub struct ShotExample<'a> {
    pub query: LabelQuery<'a>,
    /// Gold answer line in the `{"<predicate>": {"<role>": "<argument>"}}` shape.
    pub answer: &'a str,
}

/// Renders roles as a one-line JSON object keyed by short labels, in map order.
pub fn render_role_json(roles: &RoleMap) -> String {
    let body: Vec<String> = roles
        .iter()
        .map(|(label, description)| format!("{}: {}", quote(&label.short()), quote(description)))
        .collect();
    format!("{{{}}}", body.join(", "))
}

/// Renders an answer line. Repeated roles collapse into a JSON list, in first-seen order.
pub fn render_answer(predicate: &str, args: &[(RoleLabel, String)]) -> String {
    let mut grouped: IndexMap<&RoleLabel, Vec<&str>> = IndexMap::new();
    for (label, text) in args {
        grouped.entry(label).or_default().push(text);
    }
    let body: Vec<String> = grouped
        .iter()
        .map(|(label, texts)| {
            let value = match texts.as_slice() {
                [single] => quote(single),
                many => {
                    let items: Vec<String> = many.iter().map(|t| quote(t)).collect();
                    format!("[{}]", items.join(", "))
                }
            };
            format!("{}: {}", quote(&label.short()), value)
        })
        .collect();
    format!("{{{}: {{{}}}}}", quote(predicate), body.join(", "))
}

/// The exemplar answer line for a gold instance.
pub fn render_gold_answer(instance: &PredicateInstance) -> String {
    let args: Vec<(RoleLabel, String)> = instance
        .gold_args
        .iter()
        .map(|a| (a.label.clone(), a.surface.clone()))
        .collect();
    render_answer(&instance.predicate_text(), &args)
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn fill(template: &str, sentence: &str, predicate: &str, roles_json: &str) -> String {
    let slots = [
        (SLOT_SENTENCE, sentence),
        (SLOT_PREDICATE, predicate),
        (SLOT_ROLES, roles_json),
    ];
    let mut out = String::with_capacity(template.len() + sentence.len() + roles_json.len());
    let mut rest = template;
    loop {
        let next = slots
            .iter()
            .filter_map(|(slot, value)| rest.find(slot).map(|at| (at, *slot, *value)))
            .min_by_key(|(at, _, _)| *at);
        match next {
            Some((at, slot, value)) => {
                out.push_str(&rest[..at]);
                out.push_str(value);
                rest = &rest[at + slot.len()..];
            }
            None => {
                out.push_str(rest);
                return out;
            }
        }
    }
}

pub fn build_sense_prompt<S: AsRef<str>>(
    sentence: &str,
    predicate: &str,
    options: &[S],
) -> Result<PromptBundle, PromptError> {
    if options.is_empty() {
        return Err(PromptError::NoOptions);
    }
    if options.len() > MAX_OPTIONS {
        return Err(PromptError::TooManyOptions(options.len()));
    }
    let mut lines = vec![fill(SENSE_HEAD, sentence, predicate, "")];
    for (letter, option) in ('A'..='Z').zip(options) {
        lines.push(format!("{letter}: {}", option.as_ref()));
    }
    lines.push(SENSE_TAIL.to_string());
    Ok(PromptBundle {
        text: lines.join("\n"),
        variant: None,
        shots: 0,
        exemplar_ids: Vec::new(),
        target: String::new(),
    })
}

fn render_block(
    query: &LabelQuery<'_>,
    variant: PromptVariant,
    template: &str,
) -> Result<String, PromptError> {
    if variant.lists_roles() && query.roles.is_empty() {
        return Err(PromptError::MissingRoles {
            variant,
            id: query.id.to_string(),
        });
    }
    let roles_json = if variant.lists_roles() {
        render_role_json(query.roles)
    } else {
        String::new()
    };
    Ok(fill(template, query.sentence, query.predicate, &roles_json))
}

/// Builds a k-shot labeling prompt: one answered block per exemplar, then the target block
/// without an answer.
pub fn build_label_prompt(
    target: &LabelQuery<'_>,
    variant: PromptVariant,
    exemplars: &[ShotExample<'_>],
    fix_typos: bool,
) -> Result<PromptBundle, PromptError> {
    let template = variant.template(fix_typos);
    let mut blocks = Vec::with_capacity(exemplars.len() + 1);
    for shot in exemplars {
        let block = render_block(&shot.query, variant, &template)?;
        blocks.push(format!("{block}\n{}", shot.answer));
    }
    blocks.push(render_block(target, variant, &template)?);
    Ok(PromptBundle {
        text: blocks.join(BLOCK_SEPARATOR),
        variant: Some(variant),
        shots: exemplars.len(),
        exemplar_ids: exemplars.iter().map(|s| s.query.id.to_string()).collect(),
        target: target.id.to_string(),
    })
}

/// Number of answer lines (lines opening with `{`) in a prompt.
pub fn count_answer_lines(text: &str) -> usize {
    text.lines().filter(|l| l.starts_with('{')).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sell_roles() -> RoleMap {
        let mut roles = RoleMap::new();
        roles.insert(RoleLabel::core(0), "seller".to_string());
        roles.insert(RoleLabel::core(1), "thing sold".to_string());
        roles
    }

    #[test]
    fn sense_prompt_letters_options() {
        let bundle =
            build_sense_prompt("John sold the book.", "sold", &["transfer ownership", "betray"])
                .unwrap();
        assert_eq!(
            bundle.text,
            "Give a sentence: John sold the book..\n\
             Question: What is the sense of predicate sold in the given sentence above?\n\
             A: transfer ownership\n\
             B: betray\n\
             Please give the best option as the answer. Answer:"
        );
    }

    #[test]
    fn sense_prompt_option_limits() {
        let one = build_sense_prompt("s", "p", &["only"]).unwrap();
        assert!(one.text.contains("\nA: only\n"));
        assert!(!one.text.contains("\nB: "));
        let many: Vec<String> = (0..27).map(|i| format!("o{i}")).collect();
        assert_eq!(build_sense_prompt("s", "p", &many).unwrap_err(), PromptError::TooManyOptions(27));
        assert!(build_sense_prompt("s", "p", &many[..26]).is_ok());
        let none: [&str; 0] = [];
        assert_eq!(build_sense_prompt("s", "p", &none).unwrap_err(), PromptError::NoOptions);
    }

    #[test]
    fn role_json_rendering() {
        let mut roles = RoleMap::new();
        assert_eq!(render_role_json(&roles), "{}");
        roles.insert(RoleLabel::core(0), "seller".to_string());
        assert_eq!(render_role_json(&roles), r#"{"A0": "seller"}"#);
        roles.insert(RoleLabel::adjunct("TMP"), "temporal".to_string());
        let first = render_role_json(&roles);
        assert_eq!(first, r#"{"A0": "seller", "TMP": "temporal"}"#);
        assert_eq!(render_role_json(&roles), first);
    }

    #[test]
    fn zero_shot_original_matches_template() {
        let roles = sell_roles();
        let target = LabelQuery { id: "t", sentence: "John sold the book .", predicate: "sold", roles: &roles };
        let bundle = build_label_prompt(&target, PromptVariant::Original, &[], false).unwrap();
        assert_eq!(
            bundle.text,
            "Give a sentence: John sold the book ., a predicate: sold, all possible argument roles and their descriptions: {\"A0\": \"seller\", \"A1\": \"thing sold\"}, please label the arguments about predicate sold of the sentence.\n\
             Provide the answer in JSON format as follows: {sold: {role: argument}}."
        );
    }

    #[test]
    fn variants_without_roles() {
        let empty = RoleMap::new();
        let target = LabelQuery { id: "t", sentence: "s", predicate: "p", roles: &empty };
        for v in [PromptVariant::V3, PromptVariant::V4, PromptVariant::NoDescription] {
            let text = build_label_prompt(&target, v, &[], false).unwrap().text;
            assert!(!text.contains("description"), "{v}: {text}");
        }
        for v in [PromptVariant::Original, PromptVariant::V1, PromptVariant::V2] {
            assert!(matches!(
                build_label_prompt(&target, v, &[], false),
                Err(PromptError::MissingRoles { .. })
            ));
        }
        let roles = sell_roles();
        let target = LabelQuery { roles: &roles, ..target };
        let text = build_label_prompt(&target, PromptVariant::V3, &[], false).unwrap().text;
        assert!(!text.contains("seller"));
    }

    #[test]
    fn shot_count_law() {
        let roles = sell_roles();
        let answer = r#"{"sold": {"A0": "John"}}"#;
        let shot = ShotExample {
            query: LabelQuery { id: "e", sentence: "John sold it", predicate: "sold", roles: &roles },
            answer,
        };
        let target = LabelQuery { id: "t", sentence: "Mary sold a car", predicate: "sold", roles: &roles };
        for k in [0usize, 1, 3, 5, 7] {
            let shots = vec![shot; k];
            let bundle = build_label_prompt(&target, PromptVariant::Original, &shots, false).unwrap();
            assert_eq!(count_answer_lines(&bundle.text), k);
            assert_eq!(bundle.shots, k);
            assert_eq!(bundle.exemplar_ids.len(), k);
            assert!(bundle.text.ends_with("{sold: {role: argument}}."));
        }
    }

    #[test]
    fn fix_typos_only_touches_v1() {
        assert!(PromptVariant::V1.template(false).contains("prdicate"));
        assert!(!PromptVariant::V1.template(true).contains("prdicate"));
        for v in PromptVariant::ALL {
            if v != PromptVariant::V1 {
                assert_eq!(v.template(false), v.template(true));
            }
        }
    }

    #[test]
    fn variant_ids_parse() {
        for v in PromptVariant::ALL {
            assert_eq!(v.id().parse::<PromptVariant>().unwrap(), v);
        }
        assert_eq!("no-description".parse::<PromptVariant>().unwrap(), PromptVariant::NoDescription);
        assert!("v9".parse::<PromptVariant>().is_err());
    }

    #[test]
    fn answers_group_repeated_roles() {
        let args = vec![
            (RoleLabel::adjunct("TMP"), "today".to_string()),
            (RoleLabel::core(0), "He".to_string()),
            (RoleLabel::adjunct("TMP"), "at \"noon\"".to_string()),
        ];
        assert_eq!(
            render_answer("ran", &args),
            r#"{"ran": {"TMP": ["today", "at \"noon\""], "A0": "He"}}"#
        );
        assert_eq!(render_answer("ran", &[]), r#"{"ran": {}}"#);
    }

    #[test]
    fn slot_values_are_not_rescanned() {
        let roles = sell_roles();
        let target = LabelQuery { id: "t", sentence: "a <predicate> b", predicate: "p", roles: &roles };
        let text = build_label_prompt(&target, PromptVariant::V3, &[], false).unwrap().text;
        assert!(text.starts_with("Give sentence: a <predicate> b, predicate: p,"));
    }
}
