use std::path::PathBuf;

use srl_core::corpus::{parse_props, Exemplar, ExemplarPool, RoleLabel};
use srl_core::framebank::RoleMap;
use srl_core::prompting::{
    build_label_prompt, build_sense_prompt, count_answer_lines, LabelQuery, PromptVariant, ShotExample,
};

fn golden(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path).unwrap()
}

fn roles(pairs: &[(&str, &str)]) -> RoleMap {
    pairs.iter().map(|(l, d)| (RoleLabel::parse(l).unwrap(), d.to_string())).collect()
}

fn sell_roles() -> RoleMap {
    roles(&[("A0", "seller"), ("A1", "thing sold"), ("AM-TMP", "temporal")])
}

fn target(roles: &RoleMap) -> LabelQuery<'_> {
    LabelQuery { id: "t", sentence: "John sold the book to Mary yesterday .", predicate: "sold", roles }
}

#[test]
fn zero_shot_prompts_match_goldens() {
    let roles = sell_roles();
    for variant in PromptVariant::ALL {
        let prompt = build_label_prompt(&target(&roles), variant, &[], false).unwrap();
        assert_eq!(prompt.text, golden(&format!("{variant}_0shot.txt")), "{variant}");
        assert_eq!(count_answer_lines(&prompt.text), 0);
    }
}

#[test]
fn fixing_typos_only_changes_v1() {
    let roles = sell_roles();
    for variant in PromptVariant::ALL {
        let raw = build_label_prompt(&target(&roles), variant, &[], false).unwrap().text;
        let fixed = build_label_prompt(&target(&roles), variant, &[], true).unwrap().text;
        if variant == PromptVariant::V1 {
            assert_eq!(fixed, raw.replace("prdicate", "predicate"));
            assert_ne!(fixed, raw);
        } else {
            assert_eq!(fixed, raw);
        }
    }
}

#[test]
fn one_shot_prompt_matches_golden() {
    let target_roles = sell_roles();
    let shot_roles = roles(&[("A0", "buyer"), ("A1", "thing bought")]);
    let shot = ShotExample {
        query: LabelQuery { id: "e", sentence: "Mary bought a car .", predicate: "bought", roles: &shot_roles },
        answer: r#"{"bought": {"A0": "Mary", "A1": "a car"}}"#,
    };
    let prompt = build_label_prompt(&target(&target_roles), PromptVariant::Original, &[shot], false).unwrap();
    assert_eq!(prompt.text, golden("original_1shot.txt"));
    assert_eq!(prompt.exemplar_ids, vec!["e"]);
}

#[test]
fn sense_prompt_matches_golden() {
    let prompt = build_sense_prompt("The company left the market in 2001 .", "left", &["move away from", "give"]).unwrap();
    assert_eq!(prompt.text, golden("sense.txt"));
}

fn training_pool(seed: u64) -> ExemplarPool {
    let text = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/train.props")).unwrap();
    ExemplarPool::from_instances(parse_props(&text).unwrap(), seed)
}

#[test]
fn k_shot_prompts_carry_k_answer_lines() {
    let pool = training_pool(3);
    let roles = sell_roles();
    for k in [1, 3, 5, 7] {
        let shots = pool.sample(k, None).unwrap();
        let shot_roles = RoleMap::new();
        let examples: Vec<ShotExample<'_>> = shots
            .iter()
            .map(|ex: &&Exemplar| ShotExample {
                query: LabelQuery { id: "x", sentence: &ex.instance.sentence.text, predicate: "p", roles: &shot_roles },
                answer: &ex.answer,
            })
            .collect();
        for variant in [PromptVariant::V3, PromptVariant::V4, PromptVariant::NoDescription] {
            let prompt = build_label_prompt(&target(&roles), variant, &examples, false).unwrap();
            assert_eq!(count_answer_lines(&prompt.text), k, "{variant} k={k}");
            assert_eq!(prompt.shots, k);
        }
    }
}

#[test]
fn sampling_is_stable_for_a_fixed_seed() {
    let ids = |seed| -> Vec<String> { training_pool(seed).sample(3, None).unwrap().iter().map(|e| e.id()).collect() };
    assert_eq!(ids(7), ids(7));
    // frozen from the first run; guards against silent RNG or algorithm changes
    assert_eq!(ids(7), vec!["s5:3", "s1:2", "s2:1"]);
}
