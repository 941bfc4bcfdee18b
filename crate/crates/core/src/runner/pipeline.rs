use std::collections::{HashMap, HashSet};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use super::record::{RunOutput, RunRecord, RunReport, TimingRecord};
use super::{load_corpus, ExperimentConfig, RunError};
use crate::corpus::{Corpus, ExemplarPool, PredicateInstance, RoleLabel};
use crate::evaluation::{evaluate, gold_tuples, predicted_tuples, EvalReport, SenseAccuracy};
use crate::extraction::{parse_argument_json_with, parse_choice};
use crate::framebank::{FrameBank, FrameError, NonCoreInventory, RoleMap, Roleset};
use crate::gateway::Gateway;
use crate::matcher::{ground_prediction, Prediction};
use crate::prompting::{build_label_prompt, build_sense_prompt, LabelQuery, PromptVariant, ShotExample, MAX_OPTIONS};

const CORE_LABELS: [&str; 7] = ["A0", "A1", "A2", "A3", "A4", "A5", "AA"];

struct Inputs {
    corpus: Corpus,
    bank: FrameBank,
    pool: ExemplarPool,
    /// The pool was drawn from the evaluation data, so each target must be left out.
    pool_is_dataset: bool,
}

/// Loaded inputs plus the config that drives a run. Cheap to re-point at another config.
#[derive(Clone)]
pub struct Experiment {
    config: ExperimentConfig,
    inputs: Arc<Inputs>,
}

impl Experiment {
    pub fn load(config: ExperimentConfig) -> Result<Self, RunError> {
        config.validate()?;
        let corpus = load_corpus(&config.dataset, config.sidecar.as_deref())?;
        let noncore = match &config.noncore {
            Some(path) => NonCoreInventory::load(path)?,
            None => NonCoreInventory::default(),
        };
        let bank = FrameBank::load(&config.frames, noncore)?;
        let pool = match &config.exemplars {
            Some(path) => {
                let train = load_corpus(path, config.exemplars_sidecar.as_deref())?;
                Some(ExemplarPool::from_instances(train.instances, config.seed))
            }
            None => None,
        };
        Ok(Self::from_parts(config, corpus, bank, pool))
    }

    /// Builds an experiment from in-memory inputs; `pool` falls back to the corpus itself.
    pub fn from_parts(config: ExperimentConfig, corpus: Corpus, bank: FrameBank, pool: Option<ExemplarPool>) -> Self {
        let pool_is_dataset = pool.is_none();
        let pool = pool.unwrap_or_else(|| ExemplarPool::from_instances(corpus.instances.clone(), config.seed));
        Experiment { config, inputs: Arc::new(Inputs { corpus, bank, pool, pool_is_dataset }) }
    }

    /// Same inputs, different settings. The exemplar pool keeps its original seed.
    pub fn with_config(&self, config: ExperimentConfig) -> Self {
        Experiment { config, inputs: Arc::clone(&self.inputs) }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn corpus(&self) -> &Corpus {
        &self.inputs.corpus
    }

    pub fn bank(&self) -> &FrameBank {
        &self.inputs.bank
    }

    /// The instances a run covers, honoring `limit`.
    pub fn instances(&self) -> &[PredicateInstance] {
        let all = &self.inputs.corpus.instances;
        &all[..self.config.limit.unwrap_or(all.len()).min(all.len())]
    }

    pub fn run(&self, gateway: &Gateway) -> Result<RunOutput, RunError> {
        self.config.validate()?;
        let variant = self.config.effective_variant()?;
        let available = self.inputs.pool.len() - usize::from(self.inputs.pool_is_dataset && !self.inputs.pool.is_empty());
        if self.config.shots > available {
            return Err(RunError::ConfigInvalid(format!(
                "{} shots requested but the exemplar pool offers {available}",
                self.config.shots
            )));
        }

        let instances = self.instances();
        let slots: Vec<Mutex<Option<(RunRecord, TimingRecord)>>> =
            instances.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = gateway.max_parallel().min(instances.len()).max(1);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(instance) = instances.get(i) else { break };
                    let result = self.process(instance, variant, gateway);
                    *slots[i].lock().expect("slot lock") = Some(result);
                });
            }
        });
        let (records, timings): (Vec<_>, Vec<_>) = slots
            .into_iter()
            .map(|s| s.into_inner().expect("slot lock").expect("every instance processed"))
            .unzip();

        let report = self.score(&records, variant, gateway);
        Ok(RunOutput { records, timings, report })
    }

    fn score(&self, records: &[RunRecord], variant: PromptVariant, gateway: &Gateway) -> RunReport {
        let scores = score_records(self.instances(), records);

        RunReport {
            config_hash: self.config.hash(),
            cache_hash: gateway.cache().map(|c| c.content_hash()),
            backend: gateway.backend_name().to_string(),
            variant,
            shots: self.config.shots,
            instances: records.len(),
            failed: records.iter().filter(|r| r.error.is_some()).count(),
            scores,
        }
    }

    fn process(&self, inst: &PredicateInstance, variant: PromptVariant, gateway: &Gateway) -> (RunRecord, TimingRecord) {
        let started = Instant::now();
        let mut record = RunRecord { instance: inst.id(), lemma: inst.lemma.clone(), ..Default::default() };
        let mut timing = TimingRecord { instance: record.instance.clone(), ..Default::default() };
        let result = self.stages(inst, variant, gateway, &mut record, &mut timing);
        if let Err(message) = result {
            record.error = Some(message);
            record.prediction = Prediction::default();
        }
        timing.total_ms = started.elapsed().as_millis() as u64;
        (record, timing)
    }

    fn stages(
        &self,
        inst: &PredicateInstance,
        variant: PromptVariant,
        gateway: &Gateway,
        record: &mut RunRecord,
        timing: &mut TimingRecord,
    ) -> Result<(), String> {
        let config = &self.config;
        let bank = &self.inputs.bank;
        let sentence = &inst.sentence.text;
        let predicate = inst.predicate_text();

        // Stage I: sense disambiguation, skipped for single-sense lemmas
        let clock = Instant::now();
        let senses = match bank.senses_of(&inst.lemma) {
            Ok(senses) => senses,
            Err(FrameError::UnknownLemma(_)) => {
                record.notes.push(format!("lemma {:?} not in frame bank; using non-core roles only", inst.lemma));
                &[]
            }
            Err(e) => return Err(e.to_string()),
        };
        let chosen: Option<&Roleset> = match senses {
            [] => None,
            [only] => Some(only),
            many => {
                let options: Vec<&str> = many.iter().take(MAX_OPTIONS).map(|r| r.description.as_str()).collect();
                if many.len() > MAX_OPTIONS {
                    record.notes.push(format!("only the first {MAX_OPTIONS} of {} senses offered", many.len()));
                }
                let prompt = build_sense_prompt(sentence, &predicate, &options).map_err(|e| e.to_string())?;
                record.sense_prompt = Some(prompt.text.clone());
                let response = gateway
                    .complete(&config.backend.request(prompt.text))
                    .map_err(|e| format!("sense stage: {e}"))?;
                let pick = match parse_choice(&response, &options) {
                    Ok(choice) => choice.index,
                    Err(e) => {
                        record.notes.push(format!("sense answer unreadable ({e}); using the first sense"));
                        0
                    }
                };
                record.sense_response = Some(response);
                Some(&many[pick])
            }
        };
        record.sense = chosen.map(|r| r.sense_id.clone());
        timing.sense_ms = clock.elapsed().as_millis() as u64;

        // Stage II: roles of the chosen sense
        let roles = bank.roles_for(chosen);
        let mut known: HashSet<RoleLabel> = roles.keys().cloned().collect();
        if chosen.is_none() {
            known.extend(CORE_LABELS.iter().map(|l| RoleLabel::parse(l).expect("core label")));
        }

        // Stage III: k-shot argument labeling
        let clock = Instant::now();
        let target_id = inst.id();
        let exclude = self.inputs.pool_is_dataset.then_some(target_id.as_str());
        let shots = self.inputs.pool.sample(config.shots, exclude).map_err(|e| e.to_string())?;
        let shot_data: Vec<(String, String, RoleMap)> = shots
            .iter()
            .map(|ex| (ex.id(), ex.instance.predicate_text(), self.exemplar_roles(&ex.instance)))
            .collect();
        let examples: Vec<ShotExample<'_>> = shots
            .iter()
            .zip(&shot_data)
            .map(|(ex, (id, pred, roles))| ShotExample {
                query: LabelQuery { id, sentence: &ex.instance.sentence.text, predicate: pred, roles },
                answer: &ex.answer,
            })
            .collect();
        let target = LabelQuery { id: &target_id, sentence, predicate: &predicate, roles: &roles };
        let prompt = build_label_prompt(&target, variant, &examples, config.fix_typos).map_err(|e| e.to_string())?;
        record.exemplars = prompt.exemplar_ids.clone();
        record.label_prompt = Some(prompt.text.clone());
        let response = gateway
            .complete(&config.backend.request(prompt.text))
            .map_err(|e| format!("labeling stage: {e}"))?;
        record.label_response = Some(response.clone());
        timing.label_ms = clock.elapsed().as_millis() as u64;

        let raw = parse_argument_json_with(&response, &known, &roles, config.key_threshold)
            .map_err(|e| format!("extraction: {e}"))?;

        // Stage IV: ground each argument in the sentence
        record.prediction = ground_prediction(&raw, &inst.sentence, &config.matcher, config.floor);
        record.raw = Some(raw);
        Ok(())
    }

    /// Roles shown in an exemplar block: those of its gold sense when known, else of the
    /// lemma's first sense.
    fn exemplar_roles(&self, inst: &PredicateInstance) -> RoleMap {
        let bank = &self.inputs.bank;
        let senses = bank.senses_of(&inst.lemma).unwrap_or(&[]);
        let by_gold = inst
            .gold_sense
            .as_deref()
            .and_then(|g| senses.iter().find(|r| same_sense(g, &r.sense_id)));
        bank.roles_for(by_gold.or(senses.first()))
    }
}

/// Sense ids match in full (`sell.01`) or by sense number alone (`01`).
fn same_sense(a: &str, b: &str) -> bool {
    let number = |s: &str| s.rsplit('.').next().unwrap_or(s).to_string();
    a == b || number(a) == number(b)
}

/// Scores records against gold instances, pairing them by instance id. Instances without a
/// record count as predicting nothing; records for unknown instances count as spurious.
pub fn score_records(instances: &[PredicateInstance], records: &[RunRecord]) -> EvalReport {
    let gold: Vec<_> = instances.iter().flat_map(gold_tuples).collect();
    let pred: Vec<_> = records
        .iter()
        .flat_map(|r| predicted_tuples(&r.instance, &r.prediction))
        .collect();
    let mut scores = evaluate(&pred, &gold);

    let senses: HashMap<&str, Option<&str>> =
        records.iter().map(|r| (r.instance.as_str(), r.sense.as_deref())).collect();
    let judged: Vec<bool> = instances
        .iter()
        .filter_map(|inst| {
            let gold = inst.gold_sense.as_deref()?;
            let picked = senses.get(inst.id().as_str()).copied().flatten();
            Some(picked.is_some_and(|s| same_sense(gold, s)))
        })
        .collect();
    if !judged.is_empty() {
        scores.sense_accuracy = Some(SenseAccuracy::new(judged.iter().filter(|c| **c).count(), judged.len()));
    }
    scores
}

/// Loads everything named in `config`, connects the configured backend and runs.
pub fn run_pipeline(config: &ExperimentConfig) -> Result<RunOutput, RunError> {
    config.validate()?;
    let gateway = Gateway::from_config(&config.backend).map_err(RunError::BackendUnavailable)?;
    Experiment::load(config.clone())?.run(&gateway)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sense_ids_compare_by_number() {
        assert!(same_sense("sell.01", "sell.01"));
        assert!(same_sense("01", "sell.01"));
        assert!(!same_sense("sell.02", "sell.01"));
    }
}
