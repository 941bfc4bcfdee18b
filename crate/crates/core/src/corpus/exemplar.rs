use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, PredicateInstance};
use crate::prompting::render_gold_answer;

/// A labeled training instance and its answer line in the argument-labeling JSON shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub instance: PredicateInstance,
    pub answer: String,
}

impl Exemplar {
    pub fn from_instance(instance: PredicateInstance) -> Self {
        let answer = render_gold_answer(&instance);
        Exemplar { instance, answer }
    }

    pub fn id(&self) -> String {
        self.instance.id()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExemplarPool {
    items: Vec<Exemplar>,
    seed: u64,
}

impl ExemplarPool {
    pub fn new(items: Vec<Exemplar>, seed: u64) -> Self {
        ExemplarPool { items, seed }
    }

    pub fn from_instances(instances: impl IntoIterator<Item = PredicateInstance>, seed: u64) -> Self {
        Self::new(instances.into_iter().map(Exemplar::from_instance).collect(), seed)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn items(&self) -> &[Exemplar] {
        &self.items
    }

    /// Draws `k` distinct exemplars, never the one whose id equals `exclude`.
    ///
    /// The draw depends only on the pool contents, the seed, `k` and `exclude`.
    pub fn sample(&self, k: usize, exclude: Option<&str>) -> Result<Vec<&Exemplar>, CorpusError> {
        if k == 0 {
            return Ok(Vec::new());
        }
        let eligible: Vec<&Exemplar> = self
            .items
            .iter()
            .filter(|e| exclude.is_none_or(|id| e.id() != id))
            .collect();
        if k > eligible.len() {
            return Err(CorpusError::PoolTooSmall {
                requested: k,
                available: eligible.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let picks = rand::seq::index::sample(&mut rng, eligible.len(), k);
        Ok(picks.into_iter().map(|i| eligible[i]).collect())
    }
}
