use crate::corpus::{Corpus, PredicateInstance};
use crate::framebank::FrameBank;
use crate::gateway::{GatewayError, MockBackend};
use crate::prompting::{render_gold_answer, BLOCK_SEPARATOR};

const SENSE_MARKER: &str = "Question: What is the sense of predicate";

struct Entry {
    id: String,
    sentence: String,
    predicate: String,
    answer: String,
    sense_letter: char,
}

/// Answers pipeline prompts with the gold labels of a corpus. The target is recognized from
/// the sentence and predicate in the prompt's final block.
pub struct GoldResponder {
    entries: Vec<Entry>,
}

impl GoldResponder {
    pub fn new(corpus: &Corpus, bank: &FrameBank) -> Self {
        let entries = corpus
            .instances
            .iter()
            .map(|inst| Entry {
                id: inst.id(),
                sentence: inst.sentence.text.clone(),
                predicate: inst.predicate_text(),
                answer: render_gold_answer(inst),
                sense_letter: gold_letter(inst, bank),
            })
            .collect();
        GoldResponder { entries }
    }

    /// Replaces the labeling answer for one instance.
    pub fn with_answer(mut self, instance_id: &str, answer: impl Into<String>) -> Self {
        if let Some(e) = self.entries.iter_mut().find(|e| e.id == instance_id) {
            e.answer = answer.into();
        }
        self
    }

    pub fn respond(&self, prompt: &str) -> Option<String> {
        if prompt.contains(SENSE_MARKER) {
            return self
                .entries
                .iter()
                .find(|e| {
                    prompt.contains(&format!(": {}.\n", e.sentence))
                        && prompt.contains(&format!("{SENSE_MARKER} {} in", e.predicate))
                })
                .map(|e| e.sense_letter.to_string());
        }
        let target = prompt.rsplit(BLOCK_SEPARATOR).next().unwrap_or(prompt);
        self.entries
            .iter()
            .find(|e| {
                target.contains(&format!(": {}, ", e.sentence))
                    && target.contains(&format!("about predicate {} of the sentence", e.predicate))
            })
            .map(|e| e.answer.clone())
    }

    pub fn into_backend(self) -> MockBackend {
        MockBackend::from_fn(move |req| {
            self.respond(&req.prompt).ok_or_else(|| GatewayError::Unscripted {
                hash: crate::gateway::prompt_hash(&req.prompt),
            })
        })
    }
}

fn gold_letter(inst: &PredicateInstance, bank: &FrameBank) -> char {
    let senses = bank.senses_of(&inst.lemma).unwrap_or(&[]);
    let index = inst
        .gold_sense
        .as_deref()
        .and_then(|g| {
            senses
                .iter()
                .position(|r| r.sense_id == g || r.sense_id.rsplit('.').next() == g.rsplit('.').next())
        })
        .unwrap_or(0);
    ('A'..='Z').nth(index).unwrap_or('A')
}
