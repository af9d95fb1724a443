//! Seeded template corpus of commodity-movement sentences.
//!
//! Every sentence has one or two movement events whose arguments are all
//! QUANTITY or DATE mentions, so entity type alone never decides the role.
//! The role is carried by the preposition heading each phrase:
//!
//! | preposition | entity   | role                      |
//! |-------------|----------|---------------------------|
//! | by          | QUANTITY | Difference                |
//! | from        | QUANTITY | Initial_value             |
//! | to          | QUANTITY | Final_value               |
//! | in          | DATE     | Reference_point           |
//! | since       | DATE     | Initial_reference_point   |
//!
//! A phrase is either shallow (`by 12 million barrels`, preposition one
//! hop from the entity head) or deep (`by the level reported last week at
//! 12 million barrels`, preposition three hops from the nearest entity
//! token). A trailing `, analysts said on DATE` clause adds a DATE that is
//! never an argument. Dependency heads follow fixed attachment rules.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Argument, EntityMention, EventMention, Sentence, Span, Token};

/// Roles whose value is decided by the preposition alone.
pub const CUE_ROLES: [&str; 5] =
    ["Difference", "Initial_value", "Final_value", "Reference_point", "Initial_reference_point"];

const UP: [&str; 4] = ["soared", "rose", "jumped", "climbed"];
const DOWN: [&str; 4] = ["fell", "plunged", "slipped", "dropped"];
const ITEMS: [&str; 6] = ["crude", "oil", "gasoline", "copper", "gold", "diesel"];
const ATTRIBUTES: [&str; 6] = ["stockpiles", "prices", "output", "inventories", "exports", "imports"];
const NUMBERS: [&str; 10] = ["1.350", "200", "438.9", "12", "75.5", "3.2", "40", "5.8", "610", "2.25"];
const UNITS: [&str; 3] = ["barrels", "tonnes", "gallons"];
const DATES: [&str; 6] = ["December", "Tuesday", "March", "2019", "January", "Friday"];

/// `(preposition, is_quantity, role)`.
const PHRASES: [(&str, bool, &str); 5] = [
    ("by", true, "Difference"),
    ("from", true, "Initial_value"),
    ("to", true, "Final_value"),
    ("in", false, "Reference_point"),
    ("since", false, "Initial_reference_point"),
];

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub sentences: usize,
    pub seed: u64,
    pub sentences_per_doc: usize,
    /// Probability that a phrase uses the deep attachment.
    pub deep_fraction: f64,
    pub second_event_probability: f64,
    pub distractor_probability: f64,
}

impl SyntheticConfig {
    pub fn new(sentences: usize, seed: u64) -> Self {
        SyntheticConfig {
            sentences,
            seed,
            sentences_per_doc: 2,
            deep_fraction: 0.5,
            second_event_probability: 0.4,
            distractor_probability: 0.3,
        }
    }
}

/// `generate(&SyntheticConfig::new(n, seed))`.
pub fn corpus(sentences: usize, seed: u64) -> Vec<Sentence> {
    generate(&SyntheticConfig::new(sentences, seed))
}

pub fn generate(config: &SyntheticConfig) -> Vec<Sentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let per_doc = config.sentences_per_doc.max(1);
    (0..config.sentences)
        .map(|i| {
            let mut s = sentence(&mut rng, config);
            s.doc_id = format!("synth-{:04}", i / per_doc);
            s.index = i % per_doc;
            s
        })
        .collect()
}

/// Every word the generator can emit.
pub fn vocabulary() -> Vec<&'static str> {
    let mut words: Vec<&str> = [&UP[..], &DOWN, &ITEMS, &ATTRIBUTES, &NUMBERS, &UNITS, &DATES]
        .concat()
        .into_iter()
        .chain(PHRASES.iter().map(|p| p.0))
        .chain(["million", "the", "level", "reported", "last", "week", "at", "period", "ending"])
        .chain([",", "while", "analysts", "said", "on", "."])
        .collect();
    words.sort_unstable();
    words.dedup();
    words
}

struct Builder {
    tokens: Vec<Token>,
    entities: Vec<EntityMention>,
}

impl Builder {
    fn push(&mut self, text: &str, pos: &str, deprel: &str) -> usize {
        let index = self.tokens.len() + 1;
        self.tokens.push(Token { index, text: text.to_string(), pos: pos.to_string(), head: 0, deprel: deprel.to_string() });
        index
    }

    fn attach(&mut self, child: usize, head: usize) {
        self.tokens[child - 1].head = head;
    }

    fn entity(&mut self, span: Span, entity_type: &str) -> usize {
        let id = self.entities.len();
        self.entities.push(EntityMention { id: format!("T{}", id + 1), span, entity_type: entity_type.to_string() });
        id
    }

    /// `[ITEM] ATTR TRIG`; returns the trigger index.
    fn clause(&mut self, rng: &mut ChaCha8Rng, trigger: &str, deprel: &str) -> usize {
        let item = self.push(ITEMS.choose(rng).unwrap(), "NOUN", "compound");
        let attr = self.push(ATTRIBUTES.choose(rng).unwrap(), "NOUN", "nsubj");
        let trig = self.push(trigger, "VERB", deprel);
        self.attach(item, attr);
        self.attach(attr, trig);
        trig
    }

    fn quantity(&mut self, rng: &mut ChaCha8Rng) -> (usize, Span) {
        let num = self.push(NUMBERS.choose(rng).unwrap(), "NUM", "compound");
        let million = self.push("million", "NUM", "nummod");
        let unit = self.push(UNITS.choose(rng).unwrap(), "NOUN", "obl");
        self.attach(num, million);
        self.attach(million, unit);
        (unit, Span::new(num, unit))
    }

    fn date(&mut self, rng: &mut ChaCha8Rng, deprel: &str) -> (usize, Span) {
        let text = DATES.choose(rng).unwrap();
        let pos = if text.parse::<u32>().is_ok() { "NUM" } else { "PROPN" };
        let d = self.push(text, pos, deprel);
        (d, Span::single(d))
    }

    /// One prepositional phrase under `trig`; returns the entity id.
    fn phrase(&mut self, rng: &mut ChaCha8Rng, trig: usize, prep: &str, quantity: bool, deep: bool) -> usize {
        let p = self.push(prep, "ADP", "case");
        if !deep {
            let (head, span) = if quantity { self.quantity(rng) } else { self.date(rng, "obl") };
            self.attach(p, head);
            self.attach(head, trig);
            return self.entity(span, if quantity { "QUANTITY" } else { "DATE" });
        }
        let det = self.push("the", "DET", "det");
        if quantity {
            let level = self.push("level", "NOUN", "obl");
            let reported = self.push("reported", "VERB", "acl");
            let last = self.push("last", "ADJ", "amod");
            let week = self.push("week", "NOUN", "obl:tmod");
            let at = self.push("at", "ADP", "case");
            let (unit, span) = self.quantity(rng);
            for (child, head) in [(p, level), (det, level), (level, trig), (reported, level), (last, week), (week, reported)] {
                self.attach(child, head);
            }
            self.attach(at, unit);
            self.attach(unit, reported);
            self.entity(span, "QUANTITY")
        } else {
            let period = self.push("period", "NOUN", "obl");
            let ending = self.push("ending", "VERB", "acl");
            let (d, span) = self.date(rng, "obj");
            for (child, head) in [(p, period), (det, period), (period, trig), (ending, period), (d, ending)] {
                self.attach(child, head);
            }
            self.entity(span, "DATE")
        }
    }

    /// Phrases for one trigger with distinct prepositions.
    fn phrases(&mut self, rng: &mut ChaCha8Rng, trig: usize, count: usize, deep_fraction: f64) -> Vec<Argument> {
        let mut kinds: Vec<&(&str, bool, &str)> = PHRASES.iter().collect();
        kinds.shuffle(rng);
        kinds
            .into_iter()
            .take(count)
            .map(|&(prep, quantity, role)| {
                let deep = rng.random_bool(deep_fraction);
                let entity = self.phrase(rng, trig, prep, quantity, deep);
                Argument { entity, role: role.to_string() }
            })
            .collect()
    }
}

fn trigger_word(rng: &mut ChaCha8Rng, avoid: Option<&str>) -> (&'static str, &'static str) {
    loop {
        let up = rng.random_bool(0.5);
        let word = if up { UP.choose(rng) } else { DOWN.choose(rng) }.unwrap();
        if Some(*word) != avoid {
            return (word, if up { "movement-up-gain" } else { "movement-down-loss" });
        }
    }
}

fn sentence(rng: &mut ChaCha8Rng, config: &SyntheticConfig) -> Sentence {
    let mut b = Builder { tokens: Vec::new(), entities: Vec::new() };
    let two_events = rng.random_bool(config.second_event_probability);
    let distractor = rng.random_bool(config.distractor_probability);
    // Entity budget 2..=4 counting the distractor.
    let budget = rng.random_range(2..=4usize) - usize::from(distractor);
    let (first_count, second_count) = if two_events {
        let first = rng.random_range(1..=budget.saturating_sub(1).max(1));
        (first, budget.saturating_sub(first).max(1))
    } else {
        (budget.max(1), 0)
    };

    let (word, event_type) = trigger_word(rng, None);
    let trig = b.clause(rng, word, "root");
    let arguments = b.phrases(rng, trig, first_count, config.deep_fraction);
    let mut events = alloc::vec![EventMention { trigger: Span::single(trig), event_type: event_type.into(), arguments }];

    if two_events {
        let comma = b.push(",", "PUNCT", "punct");
        let mark = b.push("while", "SCONJ", "mark");
        let (word2, event_type2) = trigger_word(rng, Some(word));
        let trig2 = b.clause(rng, word2, "advcl");
        b.attach(comma, trig2);
        b.attach(mark, trig2);
        b.attach(trig2, trig);
        let arguments = b.phrases(rng, trig2, second_count, config.deep_fraction);
        events.push(EventMention { trigger: Span::single(trig2), event_type: event_type2.into(), arguments });
    }

    if distractor {
        let comma = b.push(",", "PUNCT", "punct");
        let analysts = b.push("analysts", "NOUN", "nsubj");
        let said = b.push("said", "VERB", "parataxis");
        let on = b.push("on", "ADP", "case");
        let (d, span) = b.date(rng, "obl");
        for (child, head) in [(comma, said), (analysts, said), (said, trig), (on, d), (d, said)] {
            b.attach(child, head);
        }
        b.entity(span, "DATE");
    }

    let stop = b.push(".", "PUNCT", "punct");
    b.attach(stop, trig);
    Sentence { doc_id: String::new(), index: 0, tokens: b.tokens, entities: b.entities, events }
}
