use std::sync::LazyLock;

use dezh_core::de_inserter::{
    apply_insertions, find_candidates, remove_particles, CandidateStatus, DeInserter, InsertionPolicy,
};
use dezh_core::lexicon::{Lexicon, PosTagset};
use dezh_core::segmenter::analyze;
use proptest::prelude::*;

static LEXICON: LazyLock<Lexicon> = LazyLock::new(Lexicon::bundled);
static TAGSET: LazyLock<PosTagset> = LazyLock::new(PosTagset::default);
static POLICY: LazyLock<InsertionPolicy> = LazyLock::new(|| InsertionPolicy::bundled(&TAGSET));

/// Bundled words split by whether their primary tag is a noun, sorted so
/// generation is reproducible.
static WORDS: LazyLock<(Vec<String>, Vec<String>)> = LazyLock::new(|| {
    let mut nouns = Vec::new();
    let mut others = Vec::new();
    for e in LEXICON.entries() {
        if TAGSET.is_noun(e.primary_tag()) {
            nouns.push(e.surface.clone());
        } else {
            others.push(e.surface.clone());
        }
    }
    nouns.sort();
    others.sort();
    (nouns, others)
});

/// Sentences of 2..7 lexicon words, mostly nouns so candidates are common.
fn sentence() -> impl Strategy<Value = String> {
    let (nouns, others) = &*WORDS;
    prop::collection::vec(
        prop_oneof![
            4 => prop::sample::select(nouns.clone()),
            1 => prop::sample::select(others.clone()),
        ],
        2..7,
    )
    .prop_map(|w| w.concat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn removing_inserted_particles_restores_the_input(s in sentence()) {
        let particle = &POLICY.particle;
        let mut candidates = DeInserter::new(&LEXICON, &TAGSET, &POLICY).candidates("s", &s).unwrap();
        for c in &mut candidates {
            c.status = CandidateStatus::Accepted;
        }
        let modified = apply_insertions(&s, &candidates, particle).unwrap();
        let offsets: Vec<usize> = candidates.iter().map(|c| c.char_offset).collect();
        prop_assert_eq!(remove_particles(&modified, &offsets, particle).unwrap(), s.clone());
        prop_assert_eq!(modified.chars().count(), s.chars().count() + offsets.len());

        // Where each particle now sits, and the boundaries on either side.
        let plen = particle.chars().count();
        let mut blocked = Vec::new();
        for (k, &o) in offsets.iter().enumerate() {
            let at = o + k * plen;
            blocked.push(at);
            blocked.push(at + plen);
        }
        let again = find_candidates("s", &analyze(&modified, &LEXICON, &TAGSET), &POLICY, &LEXICON).unwrap();
        for c in &again {
            prop_assert!(!blocked.contains(&c.char_offset), "{modified}: candidate at {}", c.char_offset);
        }
    }
}

#[test]
fn auto_insert_applies_only_confident_candidates() {
    let out = DeInserter::new(&LEXICON, &TAGSET, &POLICY)
        .auto_insert("t", "中国经济发展")
        .unwrap();
    assert_eq!(out.text, "中国的经济发展");
    let applied: Vec<usize> = out.applied().map(|c| c.char_offset).collect();
    assert_eq!(applied, [2]);
    assert!(out.candidates.iter().any(|c| c.status == CandidateStatus::Proposed));
}

#[test]
fn whitelisted_compound_is_left_alone() {
    let out = DeInserter::new(&LEXICON, &TAGSET, &POLICY)
        .auto_insert("t", "北京大学")
        .unwrap();
    assert_eq!(out.text, "北京大学");
}

#[test]
fn particle_absorbed_into_a_word_blocks_the_site() {
    let inserter = DeInserter::new(&LEXICON, &TAGSET, &POLICY);
    let before = inserter.candidates("t", "头目一事").unwrap();
    assert_eq!(before.iter().map(|c| c.char_offset).collect::<Vec<_>>(), [2]);
    let after = inserter.candidates("t", "头目的一事").unwrap();
    // 头 目的 一事: nothing on either side of the particle.
    assert!(
        after.iter().all(|c| c.char_offset != 2 && c.char_offset != 3),
        "{after:?}"
    );
}
