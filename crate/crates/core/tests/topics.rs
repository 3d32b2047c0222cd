use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use atlas_core::rng::seeded;
use atlas_core::topics::{
    build_label_prompt, clean_completion, estimate_tokens, extract_topics, generate_label, label_topics, sparse_cosine,
    stopwords, tokenize, usable_budget, ChatError, ChatModel, ClassTfidf, LabelPrompt, TopicDoc, TopicError,
    TopicModelParams, EXAMPLE_LABEL, FLAG_ECHO, FLAG_EMPTY, FLAG_GATEWAY, NOISE_LABEL,
};
use rand::Rng;

fn toks(s: &str) -> Vec<String> {
    tokenize(s, true, stopwords("none").unwrap())
}

fn kw(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

#[test]
fn absent_term_has_zero_weight() {
    let (a, b) = (toks("meat beef"), toks("cat cat"));
    let m = ClassTfidf::fit([(0, a.as_slice()), (1, b.as_slice())]).unwrap();
    assert_eq!(m.weight("cat", 0), 0.0);
    assert!(m.weight("cat", 1) > 0.0);
}

#[test]
fn toy_matrix_matches_hand_calculation() {
    // A = 9/2; f = apple 2, banana 2, cherry 2, date 3
    let docs = [(0, toks("apple banana apple")), (0, toks("banana cherry")), (1, toks("cherry date date date"))];
    let m = ClassTfidf::fit(docs.iter().map(|(c, t)| (*c, t.as_slice()))).unwrap();
    let expect = [
        ("apple", 0, 2.3573099926832923),
        ("banana", 0, 2.3573099926832923),
        ("cherry", 0, 1.1786549963416462),
        ("date", 0, 0.0),
        ("apple", 1, 0.0),
        ("banana", 1, 0.0),
        ("cherry", 1, 1.1786549963416462),
        ("date", 1, 2.7488721956224653),
    ];
    for (t, c, w) in expect {
        assert!((m.weight(t, c) - w).abs() < 1e-9, "{t} in {c}");
    }
    assert_eq!(m.mean_class_tokens, 4.5);
    assert_eq!(m.top_keywords(0, 5), ["apple", "banana", "cherry"]);
    assert_eq!(m.top_keywords(0, 1), ["apple"]);
    assert_eq!(m.top_keywords(1, 5), ["date", "cherry"]);
}

#[test]
fn shared_term_gets_smallest_factor() {
    let docs = [(0, toks("common alpha")), (1, toks("common beta")), (2, toks("common gamma"))];
    let m = ClassTfidf::fit(docs.iter().map(|(c, t)| (*c, t.as_slice()))).unwrap();
    let min = m.idf.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(m.idf[m.term_position("common").unwrap()], min);
}

#[test]
fn empty_vocabulary_is_an_error() {
    let a = toks("a b c");
    assert_eq!(ClassTfidf::fit([(0, a.as_slice())]), Err(TopicError::EmptyVocabulary));
    assert_eq!(ClassTfidf::fit([(-1, a.as_slice())]), Err(TopicError::NoClusters));
}

#[test]
fn keyword_ties_resolve_alphabetically() {
    let a = toks("beta alpha gamma gamma");
    let m = ClassTfidf::fit([(0, a.as_slice())]).unwrap();
    assert_eq!(m.top_keywords(0, 2), ["gamma", "alpha"]);
}

#[test]
fn representative_docs_match_cosine_oracle() {
    let corpus = [
        ("r1", "phone call video chat friend"),
        ("r2", "video chat video chat"),
        ("r3", "friend message chat"),
        ("r4", "weather forecast rain"),
        ("r5", "chat friend video"),
    ];
    let tokens: Vec<Vec<String>> = corpus.iter().map(|d| toks(d.1)).collect();
    let m = ClassTfidf::fit(tokens.iter().map(|t| (0, t.as_slice()))).unwrap();
    let docs: Vec<(&str, &[String])> = corpus.iter().zip(&tokens).map(|(d, t)| (d.0, t.as_slice())).collect();
    let got = m.representative_docs(0, &docs, 5);

    // brute-force dense cosine
    let dense = |t: &[String]| -> Vec<f64> {
        m.terms.iter().enumerate().map(|(i, term)| t.iter().filter(|x| *x == term).count() as f64 * m.idf[i]).collect()
    };
    let centroid: Vec<f64> = m.terms.iter().map(|t| m.weight(t, 0)).collect();
    let cos = |a: &[f64], b: &[f64]| {
        let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        d / (a.iter().map(|x| x * x).sum::<f64>().sqrt() * b.iter().map(|x| x * x).sum::<f64>().sqrt())
    };
    let mut oracle: Vec<(f64, &str)> = docs.iter().map(|(id, t)| (cos(&dense(t), &centroid), *id)).collect();
    oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
    assert_eq!(got, oracle.iter().map(|o| o.1).collect::<Vec<_>>());
    assert_eq!(m.representative_docs(0, &docs[..1], 3), ["r1"]);
}

#[test]
fn centroid_direction_ranks_first() {
    let a = toks("one two three");
    let m = ClassTfidf::fit([(0, a.as_slice())]).unwrap();
    let odd = toks("one one");
    let docs: Vec<(&str, &[String])> = vec![("b", odd.as_slice()), ("z", a.as_slice())];
    assert_eq!(m.representative_docs(0, &docs, 2)[0], "z");
    assert!((sparse_cosine(&m.document_vector(&a), &m.rows[0]) - 1.0).abs() < 1e-12);
}

#[test]
fn prompt_matches_golden_snapshot() {
    let docs = [
        "The screenshot displays a football match score with betting odds.",
        "The screenshot shows a sportsbook app listing live bets.",
        "The screenshot features a basketball game and a wager slip.",
    ];
    let p = build_label_prompt(&docs, &kw(&["betting", "odds", "sportsbook", "wager", "match"]), &TopicModelParams::default()).unwrap();
    assert_eq!(p.text(), include_str!("golden/label_prompt.txt"));
    assert_eq!(p.n_documents, 3);
}

#[test]
fn long_documents_are_dropped_whole() {
    let params = TopicModelParams::default();
    let long = "word ".repeat(5000);
    let docs = [long.as_str(), long.as_str(), long.as_str()];
    let p = build_label_prompt(&docs[..1], &kw(&["w"]), &params);
    assert!(matches!(p, Err(TopicError::BudgetTooSmall { .. })));

    let fits = "word ".repeat(2400);
    let docs = [fits.as_str(), fits.as_str(), fits.as_str()];
    let p = build_label_prompt(&docs, &kw(&["w"]), &params).unwrap();
    assert_eq!(p.n_documents, 1);
    assert!(p.main.contains(fits.trim()));
    assert!(estimate_tokens(&p.text(), 4.0) <= usable_budget(&params));
}

#[test]
fn random_prompts_respect_budget() {
    let params = TopicModelParams::default();
    let mut rng = seeded(3);
    for _ in 0..200 {
        let docs: Vec<String> = (0..rng.random_range(1..8)).map(|_| "ab ".repeat(rng.random_range(1..2500))).collect();
        let refs: Vec<&str> = docs.iter().map(String::as_str).collect();
        if let Ok(p) = build_label_prompt(&refs, &kw(&["k"]), &params) {
            assert!(estimate_tokens(&p.text(), params.chars_per_token) <= params.token_budget);
            assert!(p.n_documents >= 1);
        }
    }
}

#[test]
fn completion_cleanup() {
    assert_eq!(clean_completion(" Sports Betting \n extra").as_deref(), Some("Sports Betting"));
    assert_eq!(clean_completion("\n\n \"Cooking Videos\"\n").as_deref(), Some("Cooking Videos"));
    assert_eq!(clean_completion("[/INST] 'Dating Apps' </s>").as_deref(), Some("Dating Apps"));
    assert_eq!(clean_completion("  \n \"\" \n"), None);
}

struct Scripted {
    replies: Mutex<Vec<Result<String, ChatError>>>,
    calls: AtomicUsize,
}

impl Scripted {
    fn new(replies: Vec<Result<String, ChatError>>) -> Self {
        Self {
            replies: Mutex::new(replies.into_iter().rev().collect()),
            calls: AtomicUsize::new(0),
        }
    }
}

impl ChatModel for Scripted {
    fn complete(&self, _: &LabelPrompt) -> Result<String, ChatError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.replies.lock().unwrap().pop().unwrap_or(Ok(String::new()))
    }
}

const DOCS: [&str; 3] = ["chat with a friend", "video call screen", "messages from mom"];

#[test]
fn echo_retries_with_fewer_docs_then_falls_back() {
    let params = TopicModelParams::default();
    let m = Scripted::new(vec![Ok(EXAMPLE_LABEL.into()), Ok(format!(" {} ", EXAMPLE_LABEL.to_lowercase()))]);
    let out = generate_label(&m, &DOCS, &kw(&["chat", "video"]), &params).unwrap();
    assert_eq!(out.label, "chat, video");
    assert_eq!(out.flags, [FLAG_ECHO]);
    assert_eq!(out.prompts.iter().map(|p| p.n_documents).collect::<Vec<_>>(), [3, 2]);

    let m = Scripted::new(vec![Ok(EXAMPLE_LABEL.into()), Ok("Personal Messaging".into())]);
    let out = generate_label(&m, &DOCS, &kw(&["chat"]), &params).unwrap();
    assert_eq!(out.label, "Personal Messaging");
    assert!(out.flags.is_empty());
}

#[test]
fn empty_or_failed_completion_falls_back() {
    let params = TopicModelParams::default();
    let out = generate_label(&Scripted::new(vec![Ok("  \n".into())]), &DOCS, &kw(&["a1", "b2"]), &params).unwrap();
    assert_eq!((out.label.as_str(), out.flags.clone()), ("a1, b2", vec![FLAG_EMPTY.to_string()]));

    let m = Scripted::new(vec![Err(ChatError::ContextOverflow), Err(ChatError::Failed("503".into()))]);
    let out = generate_label(&m, &DOCS, &kw(&["a1"]), &params).unwrap();
    assert_eq!(out.flags, [FLAG_GATEWAY]);
    assert_eq!(out.prompts.iter().map(|p| p.n_documents).collect::<Vec<_>>(), [3, 2]);
}

fn corpus() -> Vec<(String, i64, String)> {
    let mut out = Vec::new();
    let themes = [
        (0, "football betting odds match sportsbook"),
        (1, "recipe cooking pasta kitchen video"),
        (2, "weather forecast rain umbrella"),
    ];
    for (c, words) in themes {
        for i in 0..6 {
            let w: Vec<&str> = words.split(' ').collect();
            out.push((format!("r{c}{i}"), c, format!("The screenshot displays {} and {}", w[i % w.len()], words)));
        }
    }
    out.push(("noise1".into(), -1, "random lock screen".into()));
    out
}

struct Echo;

impl ChatModel for Echo {
    fn complete(&self, p: &LabelPrompt) -> Result<String, ChatError> {
        let line = p.main.lines().find(|l| l.starts_with("The topic is described")).unwrap();
        Ok(format!("Label for {}\nsecond line", &line[44..]))
    }
}

#[test]
fn every_cluster_gets_one_topic_and_noise_is_reserved() {
    let c = corpus();
    let docs: Vec<TopicDoc> = c.iter().map(|(id, l, t)| TopicDoc { record_id: id, cluster: *l, text: t }).collect();
    let params = TopicModelParams::default();
    let mut topics = extract_topics(&docs, &params).unwrap();
    assert_eq!(topics.iter().map(|t| t.topic_id).collect::<Vec<_>>(), [-1, 0, 1, 2]);
    assert_eq!(topics[0].label, NOISE_LABEL);
    assert_eq!(topics[1].keywords.len(), 5);
    assert_eq!(topics[1].representative_ids.len(), 3);
    let texts: HashMap<&str, &str> = c.iter().map(|(id, _, t)| (id.as_str(), t.as_str())).collect();
    let prompts = label_topics(&mut topics, &texts, &Echo, &params).unwrap();
    assert_eq!(prompts.len(), 3);
    for t in &topics[1..] {
        assert!(!t.label.is_empty() && !t.label.contains('\n'));
        assert!(t.flags.is_empty());
    }
    assert_eq!(topics[0].label, NOISE_LABEL);
}

#[test]
fn permuting_cluster_ids_keeps_member_sets_and_keywords() {
    let c = corpus();
    let params = TopicModelParams::default();
    let run = |map: &dyn Fn(i64) -> i64| {
        let docs: Vec<TopicDoc> =
            c.iter().map(|(id, l, t)| TopicDoc { record_id: id, cluster: if *l < 0 { -1 } else { map(*l) }, text: t }).collect();
        let topics = extract_topics(&docs, &params).unwrap();
        let mut pairs: Vec<(Vec<String>, Vec<String>)> = topics
            .iter()
            .map(|t| {
                let mut members: Vec<String> =
                    docs.iter().filter(|d| d.cluster == t.topic_id).map(|d| d.record_id.to_string()).collect();
                members.sort();
                (members, t.keywords.clone())
            })
            .collect();
        pairs.sort();
        pairs
    };
    assert_eq!(run(&|l| l), run(&|l| 2 - l));
}

#[test]
fn skeleton_must_fit_budget() {
    let p = TopicModelParams {
        token_budget: 200,
        ..Default::default()
    };
    assert!(p.validate().is_err());
    assert!(TopicModelParams::default().validate().is_ok());
}
