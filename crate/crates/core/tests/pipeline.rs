use core::ops::ControlFlow;

use evgcn_core::corpus::{bio_encode, split_corpus};
use evgcn_core::pipeline::{evaluate, score, train_with, TrainConfig, TrainError};
use evgcn_core::synthetic::{corpus, vocabulary};
use evgcn_core::{
    Argument, EmbeddingError, EmbeddingProvider, EncoderConfig, EntityMention, EventMention, ExtractorModel,
    LabelVocab, Sentence, Span, StaticTable, Tensor, Token,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(dist: i32) -> EncoderConfig {
    EncoderConfig { word_dim: 16, pos_dim: 4, entity_dim: 4, gcn_hidden: 16, trigger_hidden: 16, dist, ..EncoderConfig::default() }
}

fn setup(n: usize, seed: u64) -> (Vec<Sentence>, LabelVocab, StaticTable) {
    let data = corpus(n, seed);
    let vocab = LabelVocab::commodity_news().with_pos_from(&data);
    (data, vocab, StaticTable::random(vocabulary(), 16, 2).unwrap())
}

fn run(
    data: &[Sentence],
    vocab: &LabelVocab,
    emb: &StaticTable,
    enc: EncoderConfig,
    tc: &TrainConfig,
) -> Result<(ExtractorModel, Vec<f64>), TrainError> {
    let model = ExtractorModel::new(enc, vocab.clone(), tc.seed)?;
    let out = train_with(model, data, emb, tc, |_, _| ControlFlow::Continue(()))?;
    Ok((out.model, out.losses))
}

#[test]
fn overfits_eight_sentences() {
    let (data, vocab, _) = setup(8, 3);
    let emb = StaticTable::random(vocabulary(), 32, 2).unwrap();
    let enc = EncoderConfig { word_dim: 32, gcn_hidden: 32, trigger_hidden: 32, ..small(1) };
    let tc = TrainConfig { epochs: 200, learning_rate: 0.02, ..TrainConfig::default() };
    let (_, losses) = run(&data, &vocab, &emb, enc, &tc).unwrap();
    assert_eq!(losses.len(), 200);
    let last = *losses.last().unwrap();
    assert!(last < 0.05, "final loss {last}");
    // Smoothed over 20-epoch windows the curve never rises by more than 5%.
    let windows: Vec<f64> = losses.chunks(20).map(|w| w.iter().sum::<f64>() / w.len() as f64).collect();
    for pair in windows.windows(2) {
        assert!(pair[1] <= pair[0] * 1.05, "{windows:?}");
    }
}

#[test]
fn same_seed_gives_identical_parameters() {
    let (data, vocab, emb) = setup(6, 4);
    let tc = TrainConfig { epochs: 5, negative_sample_ratio: Some(1.0), ..TrainConfig::default() };
    let (a, la) = run(&data, &vocab, &emb, small(1), &tc).unwrap();
    let (b, lb) = run(&data, &vocab, &emb, small(1), &tc).unwrap();
    assert_eq!(la.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), lb.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    for ((_, _, ta), (_, _, tb)) in a.params().iter().zip(b.params().iter()) {
        assert!(ta.data().iter().zip(tb.data()).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let (c, _) = run(&data, &vocab, &emb, small(1), &TrainConfig { seed: 99, ..tc }).unwrap();
    assert_ne!(a.params(), c.params());
}

#[test]
fn zero_beta_leaves_argument_head_untouched() {
    let (data, vocab, emb) = setup(6, 5);
    let enc = EncoderConfig { beta: 0.0, ..small(1) };
    let tc = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let initial = ExtractorModel::new(enc.clone(), vocab.clone(), tc.seed).unwrap();
    let (trained, _) = run(&data, &vocab, &emb, enc, &tc).unwrap();
    for name in ["arg.weight", "arg.bias", "gcn.0.weight", "gcn.1.bias"] {
        let id = initial.params().id(name).unwrap();
        assert_eq!(initial.params().get(id), trained.params().get(id), "{name}");
    }
    let id = initial.params().id("trigger.out.weight").unwrap();
    assert_ne!(initial.params().get(id), trained.params().get(id));
}

struct Poisoned;

impl EmbeddingProvider for Poisoned {
    fn dim(&self) -> usize {
        16
    }

    fn lookup(&self, sentence: &Sentence) -> Result<Tensor, EmbeddingError> {
        Ok(Tensor::matrix(sentence.len(), 16, vec![f64::NAN; sentence.len() * 16]))
    }
}

#[test]
fn nan_loss_aborts() {
    let (data, vocab, _) = setup(4, 6);
    let model = ExtractorModel::new(small(1), vocab, 0).unwrap();
    let err = train_with(model, &data, &Poisoned, &TrainConfig::default(), |_, _| ControlFlow::Continue(())).unwrap_err();
    assert!(matches!(err, TrainError::Diverged { epoch: 1, batch: 0, .. }), "{err}");
}

#[test]
fn config_errors() {
    let (data, vocab, emb) = setup(2, 6);
    for tc in [
        TrainConfig { epochs: 0, ..TrainConfig::default() },
        TrainConfig { batch_size: 0, ..TrainConfig::default() },
        TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
        TrainConfig { negative_sample_ratio: Some(-0.5), ..TrainConfig::default() },
    ] {
        assert!(matches!(run(&data, &vocab, &emb, small(1), &tc), Err(TrainError::Config(_))));
    }
    assert!(matches!(run(&[], &vocab, &emb, small(1), &TrainConfig::default()), Err(TrainError::EmptyTrainSet)));
}

#[test]
fn early_stop_and_evaluation_purity() {
    let (data, vocab, emb) = setup(4, 8);
    let model = ExtractorModel::new(small(1), vocab, 0).unwrap();
    let out = train_with(model, &data, &emb, &TrainConfig::default(), |r, _| {
        if r.epoch == 3 { ControlFlow::Break(()) } else { ControlFlow::Continue(()) }
    })
    .unwrap();
    assert_eq!(out.losses.len(), 3);
    let a = evaluate(&out.model, &data, &emb).unwrap();
    let b = evaluate(&out.model, &data, &emb).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gold_predictions_score_perfectly() {
    let (data, vocab, _) = setup(20, 9);
    let predicted: Vec<Vec<EventMention>> = data.iter().map(|s| s.events.clone()).collect();
    let r = score(&data, &predicted, &vocab);
    for p in [r.trigger_identification, r.trigger_classification, r.argument_identification, r.argument_role] {
        assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
    }
}

#[test]
fn split_by_document() {
    let data = corpus(20, 1);
    let (train, test) = split_corpus(&data, 0.7, 1).unwrap();
    let docs = |s: &[Sentence]| s.iter().map(|x| x.doc_id.clone()).collect::<std::collections::BTreeSet<_>>();
    assert_eq!((docs(&train).len(), docs(&test).len()), (7, 3));
    assert!(docs(&train).is_disjoint(&docs(&test)));
    assert_eq!(split_corpus(&data, 0.7, 1).unwrap(), (train.clone(), test));
    let (other, _) = split_corpus(&data, 0.7, 2).unwrap();
    assert_eq!(docs(&other).len(), 7);
    assert_ne!(docs(&other), docs(&train));
}

// Brute-force scorer: plain lists, linear scans, no shared code with the
// library.

fn naive_prf(correct: usize, predicted: usize, gold: usize) -> (f64, f64, f64) {
    let p = if predicted == 0 { 0.0 } else { correct as f64 / predicted as f64 };
    let r = if gold == 0 { 0.0 } else { correct as f64 / gold as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

fn dedup<T: PartialEq>(items: Vec<T>) -> Vec<T> {
    let mut out = Vec::new();
    for x in items {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}

fn count_matches<T: PartialEq>(pred: &[T], gold: &[T]) -> usize {
    pred.iter().filter(|p| gold.contains(p)).count()
}

type Tuple = (usize, usize, usize, String, usize, String);

fn arg_tuples(sentences: &[Sentence], events: &[Vec<EventMention>]) -> Vec<Tuple> {
    let mut out = Vec::new();
    for (s, evs) in events.iter().enumerate() {
        for ev in evs {
            for e in 0..sentences[s].entities.len() {
                let mut role = "NONE".to_string();
                for a in &ev.arguments {
                    if a.entity == e {
                        role = a.role.clone();
                        break;
                    }
                }
                if !out.iter().any(|t: &Tuple| (t.0, t.1, t.2, &t.3, t.4) == (s, ev.trigger.start, ev.trigger.end, &ev.event_type, e)) {
                    out.push((s, ev.trigger.start, ev.trigger.end, ev.event_type.clone(), e, role));
                }
            }
        }
    }
    out
}

fn random_events(rng: &mut ChaCha8Rng, n: usize, entities: usize) -> Vec<EventMention> {
    let types = ["movement-up-gain", "movement-down-loss", "oversupply"];
    let roles = ["Difference", "Final_value", "Initial_value", "Item"];
    (0..rng.random_range(0..=3))
        .map(|_| {
            let start = rng.random_range(1..=n);
            let end = (start + rng.random_range(0..2)).min(n);
            let mut arguments = Vec::new();
            for e in 0..entities {
                if rng.random_bool(0.5) {
                    arguments.push(Argument { entity: e, role: roles[rng.random_range(0..roles.len())].to_string() });
                }
            }
            EventMention { trigger: Span::new(start, end), event_type: types[rng.random_range(0..3)].to_string(), arguments }
        })
        .collect()
}

fn random_sentence(rng: &mut ChaCha8Rng, index: usize) -> Sentence {
    sentence_of(rng, index, 6)
}

fn sentence_of(rng: &mut ChaCha8Rng, index: usize, n: usize) -> Sentence {
    let tokens = (1..=n)
        .map(|i| Token { index: i, text: format!("w{i}"), pos: "X".into(), head: i - 1, deprel: "dep".into() })
        .collect();
    let entities = (0..rng.random_range(0..=3))
        .filter(|k| k + 3 <= n)
        .map(|k| EntityMention { id: format!("T{k}"), span: Span::single(k + 3), entity_type: "QUANTITY".into() })
        .collect::<Vec<_>>();
    let events = random_events(rng, n, entities.len());
    Sentence { doc_id: "r".into(), index, tokens, entities, events }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn scorer_matches_brute_force(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vocab = LabelVocab::commodity_news();
        let gold: Vec<Sentence> = (0..rng.random_range(1..=3)).map(|i| random_sentence(&mut rng, i)).collect();
        let pred: Vec<Vec<EventMention>> = gold.iter().map(|s| random_events(&mut rng, s.len(), s.entities.len())).collect();
        let gold_events: Vec<Vec<EventMention>> = gold.iter().map(|s| s.events.clone()).collect();
        let report = score(&gold, &pred, &vocab);

        let spans = |evs: &[Vec<EventMention>]| dedup(evs.iter().enumerate().flat_map(|(s, e)| e.iter().map(move |ev| (s, ev.trigger))).collect());
        let typed = |evs: &[Vec<EventMention>]| dedup(evs.iter().enumerate().flat_map(|(s, e)| e.iter().map(move |ev| (s, ev.trigger, ev.event_type.clone()))).collect());
        let (ps, gs) = (spans(&pred), spans(&gold_events));
        let (pt, gt) = (typed(&pred), typed(&gold_events));
        let pa = arg_tuples(&gold, &pred);
        let ga = arg_tuples(&gold, &gold_events);
        let linked = |t: &[Tuple], role: bool| -> Vec<Tuple> {
            t.iter().filter(|x| x.5 != "NONE").map(|x| { let mut y = x.clone(); if !role { y.5.clear(); } y }).collect()
        };

        let checks = [
            (report.trigger_identification, count_matches(&ps, &gs), ps.len(), gs.len()),
            (report.trigger_classification, count_matches(&pt, &gt), pt.len(), gt.len()),
            (report.argument_identification, count_matches(&linked(&pa, false), &linked(&ga, false)), linked(&pa, false).len(), linked(&ga, false).len()),
            (report.argument_role, count_matches(&linked(&pa, true), &linked(&ga, true)), linked(&pa, true).len(), linked(&ga, true).len()),
        ];
        for (prf, c, p, g) in checks {
            prop_assert_eq!((prf.correct, prf.predicted, prf.gold), (c, p, g));
            let (np, nr, nf) = naive_prf(c, p, g);
            prop_assert_eq!((prf.precision, prf.recall, prf.f1), (np, nr, nf));
            let recomputed = if prf.precision + prf.recall == 0.0 { 0.0 } else { 2.0 * prf.precision * prf.recall / (prf.precision + prf.recall) };
            prop_assert!((recomputed - prf.f1).abs() <= 1e-12);
        }
        prop_assert!(report.argument_role.correct <= report.argument_identification.correct);
        prop_assert!(report.argument_identification.correct <= report.argument_identification.gold);
        prop_assert!(report.trigger_classification.correct <= report.trigger_identification.correct);

        prop_assert_eq!(report.per_role.len(), 20);
        for (role, prf) in &report.per_role {
            let p: Vec<&Tuple> = pa.iter().filter(|t| &t.5 == role).collect();
            let g: Vec<&Tuple> = ga.iter().filter(|t| &t.5 == role).collect();
            prop_assert_eq!((prf.correct, prf.predicted, prf.gold), (count_matches(&p, &g), p.len(), g.len()));
        }
    }

    #[test]
    fn bio_matches_span_painting(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=12);
        let mut s = sentence_of(&mut rng, 0, n);
        s.events.clear();
        // Non-overlapping spans in random order.
        let mut entities = Vec::new();
        let mut i = 1;
        while i <= n {
            if rng.random_bool(0.4) {
                let len = rng.random_range(1..=3).min(n - i + 1);
                let ty = ["DATE", "QUANTITY"][rng.random_range(0..2)];
                entities.push(EntityMention { id: format!("T{i}"), span: Span::new(i, i + len - 1), entity_type: ty.into() });
                i += len;
            } else {
                i += 1;
            }
        }
        s.entities = entities.clone();
        let mut expected = vec!["O".to_string(); n];
        for e in &entities {
            for k in e.span.start..=e.span.end {
                let prefix = if k == e.span.start { "B" } else { "I" };
                expected[k - 1] = format!("{prefix}-{}", e.entity_type);
            }
        }
        prop_assert_eq!(bio_encode(&s), expected);
    }
}

#[test]
fn bio_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut s = random_sentence(&mut rng, 0);
    s.entities = vec![
        EntityMention { id: "a".into(), span: Span::single(2), entity_type: "DATE".into() },
        EntityMention { id: "b".into(), span: Span::single(3), entity_type: "DATE".into() },
    ];
    assert_eq!(bio_encode(&s), ["O", "B-DATE", "B-DATE", "O", "O", "O"]);
}
