//! PropBank frame XML to the JSON frame bank.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use indexmap::IndexMap;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::Serialize;
use srl_core::{FrameBank, NonCoreInventory};

#[derive(Debug, Serialize, PartialEq)]
struct RolesetOut {
    sense_id: String,
    description: String,
    roles: IndexMap<String, String>,
}

type Frames = IndexMap<String, Vec<RolesetOut>>;

/// Reads every input (files, or directories scanned for *.xml in name order) and returns
/// frame bank JSON that `FrameBank` accepts.
pub fn import(inputs: &[PathBuf]) -> Result<String> {
    let mut frames = Frames::new();
    for path in expand(inputs)? {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        parse_frameset(&text, &mut frames).with_context(|| format!("parsing {}", path.display()))?;
    }
    if frames.is_empty() {
        bail!("no rolesets found");
    }
    let json = serde_json::to_string_pretty(&frames)? + "\n";
    FrameBank::from_json_str(&json, NonCoreInventory::default()).context("validating converted frames")?;
    Ok(json)
}

fn expand(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for input in inputs {
        if input.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(input)
                .with_context(|| format!("listing {}", input.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|e| e == "xml"))
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(input.clone());
        }
    }
    Ok(files)
}

fn attr(e: &BytesStart, name: &str) -> Result<Option<String>> {
    for a in e.attributes() {
        let a = a?;
        if a.key.as_ref() == name.as_bytes() {
            return Ok(Some(a.unescape_value()?.into_owned()));
        }
    }
    Ok(None)
}

/// Numbered roles become A0..A5, "a" becomes AA, modifier roles ("m") are dropped since the
/// non-core inventory covers them.
fn role_label(n: &str) -> Option<String> {
    match n.to_ascii_lowercase().as_str() {
        "a" => Some("AA".into()),
        d if d.len() == 1 && d.as_bytes()[0].is_ascii_digit() => Some(format!("A{d}")),
        _ => None,
    }
}

fn parse_frameset(xml: &str, frames: &mut Frames) -> Result<()> {
    let mut reader = Reader::from_str(xml);
    let mut lemma: Option<String> = None;
    let mut current: Option<RolesetOut> = None;
    loop {
        let event = reader.read_event()?;
        match &event {
            Event::Start(e) | Event::Empty(e) => match e.name().as_ref() {
                b"predicate" => {
                    lemma = Some(attr(e, "lemma")?.ok_or_else(|| anyhow!("predicate without lemma"))?);
                }
                b"roleset" => {
                    let sense_id = attr(e, "id")?.ok_or_else(|| anyhow!("roleset without id"))?;
                    let roleset = RolesetOut {
                        sense_id,
                        description: attr(e, "name")?.unwrap_or_default(),
                        roles: IndexMap::new(),
                    };
                    if matches!(event, Event::Empty(_)) {
                        push(frames, lemma.as_deref(), roleset)?;
                    } else {
                        current = Some(roleset);
                    }
                }
                b"role" => {
                    if let (Some(rs), Some(n)) = (current.as_mut(), attr(e, "n")?) {
                        if let Some(label) = role_label(&n) {
                            rs.roles.insert(label, attr(e, "descr")?.unwrap_or_default());
                        }
                    }
                }
                _ => {}
            },
            Event::End(e) => match e.name().as_ref() {
                b"roleset" => {
                    if let Some(rs) = current.take() {
                        push(frames, lemma.as_deref(), rs)?;
                    }
                }
                b"predicate" => lemma = None,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
    }
    Ok(())
}

fn push(frames: &mut Frames, lemma: Option<&str>, roleset: RolesetOut) -> Result<()> {
    let lemma = lemma.ok_or_else(|| anyhow!("roleset {} outside a predicate", roleset.sense_id))?;
    if frames.values().flatten().any(|r| r.sense_id == roleset.sense_id) {
        bail!("duplicate roleset {}", roleset.sense_id);
    }
    frames.entry(lemma.to_string()).or_default().push(roleset);
    Ok(())
}
