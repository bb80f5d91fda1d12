//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them all).
//!
//! Criterion 4 pins reference metric values for two count triples; one of
//! the pinned F1 figures (0.87) is not derivable from its own counts by the
//! harmonic-mean formula (the true value is 0.8630) and that check fails
//! honestly rather than being loosened. The arithmetic is printed by the
//! test.

use std::collections::HashSet;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use num_rational::Rational64;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pampo::{
    builtin_tagger, compute_metrics, default_bases, extract, generate_candidates, load_corpus,
    match_unique, normal_cdf, pretagged_provider, segment, ztest_from_summary, Document,
    EntityType, EvalMode, GoldAnnotation, Mention, PatternBases, Token,
};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn fixture_doc(dir: &str, file: &str) -> Document {
    let load = load_corpus(fixture(dir)).expect("fixture corpus loads");
    assert!(load.failures.is_empty());
    load.documents
        .into_iter()
        .find(|d| d.id == file)
        .expect("fixture document present")
}

const PHASE1_CANDIDATES: [&str; 8] = [
    "Irmandade do Bairro Ut O",
    "Conhecemos",
    "Parlamento do G",
    "L",
    "K",
    "Jorge Silva",
    "Ian",
    "ministro Miguel Relvas",
];

const PHASE2_ENTITIES: [&str; 5] = [
    "Irmandade do Bairro Ut O",
    "Parlamento do G",
    "Jorge Silva",
    "Ian",
    "ministro Miguel Relvas",
];

const ARTICLE_ENTITIES: [&str; 23] = [
    "Brasil",
    "Jogos Olímpicos de Atenas",
    "Jogos Olímpicos de Atenas",
    "Troféu Brasil de Atletismo",
    "São Paulo",
    "Jogos Olímpicos de Atlanta",
    "COB",
    "Federação Internacional de Tênis",
    "Brasil",
    "Sydney",
    "Brasil",
    "Federação Internacional de Natação",
    "Lucerne",
    "Suíça",
    "Jogos Olímpicos de Atlanta",
    "Confederações Brasileiras Olímpicas",
    "COB",
    "Lei Agnelo",
    "Piva",
    "Vale",
    "Federações Internacionais",
    "presidente do COB",
    "Carlos Arthur Nuzman",
];

#[test]
fn acceptance_01_worked_example_candidates() {
    let start = Instant::now();
    let doc = fixture_doc("worked", "paragraph.txt");
    let candidates = generate_candidates(&doc, &default_bases());
    let surfaces: Vec<&str> = candidates.iter().map(|c| c.surface.as_str()).collect();
    let elapsed = start.elapsed();
    assert_eq!(surfaces, PHASE1_CANDIDATES, "phase-1 candidate list");
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 1: PASS — 8/8 worked-example candidates in order ({:.1} ms)",
        elapsed.as_secs_f64() * 1000.0
    );
}

#[test]
fn acceptance_02_worked_example_selection() {
    let doc = fixture_doc("worked", "paragraph.txt");
    let bases = default_bases();

    let pretagged = pretagged_provider(fixture("worked.tags")).expect("pretagged fixture loads");
    assert!(pretagged.warnings().is_empty());
    let with_pretagged = extract(&doc, &bases, &pretagged).unwrap();
    let surfaces: Vec<&str> = with_pretagged.iter().map(|e| e.surface.as_str()).collect();
    assert_eq!(surfaces, PHASE2_ENTITIES, "selection with pre-tagged input");

    let with_builtin = extract(&doc, &bases, &builtin_tagger()).unwrap();
    let surfaces: Vec<&str> = with_builtin.iter().map(|e| e.surface.as_str()).collect();
    assert_eq!(surfaces, PHASE2_ENTITIES, "selection with builtin tagger");

    println!("criterion 2: PASS — 5/5 entities in order, pre-tagged and builtin taggers agree");
}

#[test]
fn acceptance_03_sports_article_reproduction() {
    let doc = fixture_doc("sports", "atenas2004.txt");
    let bases = default_bases();

    let pretagged = pretagged_provider(fixture("sports.tags")).expect("pretagged fixture loads");
    let entities = extract(&doc, &bases, &pretagged).unwrap();
    let surfaces: Vec<&str> = entities.iter().map(|e| e.surface.as_str()).collect();
    assert_eq!(
        surfaces, ARTICLE_ENTITIES,
        "23-entry list, byte-exact, in order"
    );

    // the builtin tagger reproduces the same list on this article
    let with_builtin = extract(&doc, &bases, &builtin_tagger()).unwrap();
    let surfaces: Vec<&str> = with_builtin.iter().map(|e| e.surface.as_str()).collect();
    assert_eq!(surfaces, ARTICLE_ENTITIES);

    println!("criterion 3: PASS — 23/23 article entities byte-exact and in order");
}

#[test]
fn acceptance_04_metric_reference_values() {
    struct Check {
        label: &'static str,
        got: f64,
        want: f64,
    }
    let r1 = compute_metrics(
        Rational64::from_integer(3205),
        3836,
        5089,
        EvalMode::OccurrenceHalf,
    );
    let r2 = compute_metrics(
        Rational64::from_integer(2982),
        3836,
        3075,
        EvalMode::OccurrenceHalf,
    );
    let checks = [
        Check {
            label: "phase-1 recall",
            got: r1.recall,
            want: 0.84,
        },
        Check {
            label: "phase-1 precision",
            got: r1.precision,
            want: 0.63,
        },
        Check {
            label: "phase-1 F1",
            got: r1.f1,
            want: 0.72,
        },
        Check {
            label: "phase-2 recall",
            got: r2.recall,
            want: 0.78,
        },
        Check {
            label: "phase-2 precision",
            got: r2.precision,
            want: 0.97,
        },
        Check {
            label: "phase-2 F1",
            got: r2.f1,
            want: 0.87,
        },
    ];
    let mut failed = Vec::new();
    for c in &checks {
        let ok = (c.got - c.want).abs() <= 0.005;
        println!(
            "criterion 4 value: {} = {:.4}, reference {:.2} ±0.005 -> {}",
            c.label,
            c.got,
            c.want,
            if ok { "ok" } else { "MISMATCH" }
        );
        if !ok {
            failed.push(c.label);
        }
    }
    if failed.is_empty() {
        println!("criterion 4: PASS — all six reference values reproduced");
    } else {
        println!(
            "criterion 4: FAIL — {failed:?} not reproducible; the phase-2 reference F1 0.87 \
             cannot follow from its own counts: recall = 2982/3836 = 0.7774, precision = \
             2982/3075 = 0.9698, and 2*p*r/(p+r) = 423444/490681 = 0.8630, which rounds to \
             0.86. The formula is implemented as specified; the pinned figure is inconsistent."
        );
    }
    assert!(
        failed.is_empty(),
        "reference values not reproduced: {failed:?}"
    );
}

#[test]
fn acceptance_05_partial_credit_weights() {
    let gold = vec![GoldAnnotation {
        doc: "d".into(),
        start: 0,
        end: 31,
        surface: "Jogos Olímpicos de Atlanta 1996".into(),
        entity_type: EntityType::Misc,
    }];
    let credit = |surface: &str| -> Rational64 {
        let extracted = vec![Mention {
            doc: "d".into(),
            surface: surface.into(),
            start: None,
            end: None,
        }];
        match_unique(&extracted, &gold)[0].credit
    };
    assert_eq!(credit("Atlanta"), Rational64::new(1, 4));
    assert_eq!(credit("Atlanta 1996"), Rational64::new(2, 4));
    assert_eq!(credit("Jogos Olímpicos"), Rational64::new(2, 4));
    assert_eq!(credit("Jogos Olímpicos de Atlanta"), Rational64::new(3, 4));

    let split = vec![
        Mention {
            doc: "d".into(),
            surface: "Atlanta 1996".into(),
            start: None,
            end: None,
        },
        Mention {
            doc: "d".into(),
            surface: "Jogos Olímpicos".into(),
            start: None,
            end: None,
        },
    ];
    let total: Rational64 = match_unique(&split, &gold).iter().map(|c| c.credit).sum();
    assert_eq!(total, Rational64::one());
    println!("criterion 5: PASS — fragment weights 1/4, 2/4, 2/4, 3/4 and split total exactly 1");
}

// --- criterion 6 helpers -------------------------------------------------

/// Independent reimplementation of the pair-credit rule for the brute-force
/// matcher: exact match 1; contiguous containment scores the covered
/// fraction of the gold's content tokens.
fn oracle_pair_credit(extracted: &str, gold: &str) -> Option<Rational64> {
    if extracted == gold {
        return Some(Rational64::one());
    }
    let connectors = ["de", "da", "do", "das", "dos", "e"];
    let content = |tokens: &[&str]| -> i64 {
        tokens
            .iter()
            .filter(|t| !connectors.contains(&t.to_lowercase().as_str()))
            .count() as i64
    };
    let e: Vec<&str> = extracted.split_whitespace().collect();
    let g: Vec<&str> = gold.split_whitespace().collect();
    let g_total = content(&g);
    if g_total == 0 {
        return None;
    }
    let contains = |hay: &[&str], needle: &[&str]| {
        !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
    };
    if contains(&g, &e) {
        let e_content = content(&e);
        (e_content > 0).then(|| Rational64::new(e_content, g_total))
    } else if contains(&e, &g) {
        Some(Rational64::one())
    } else {
        None
    }
}

/// Exhaustive best assignment of extracted surfaces to golds (each extracted
/// credits at most one gold; per-gold totals cap at 1).
fn oracle_optimal_credit(extracted: &[String], golds: &[String]) -> Rational64 {
    let credits: Vec<Vec<Option<Rational64>>> = extracted
        .iter()
        .map(|e| golds.iter().map(|g| oracle_pair_credit(e, g)).collect())
        .collect();
    fn capped_total(accum: &[Rational64]) -> Rational64 {
        accum.iter().map(|a| (*a).min(Rational64::one())).sum()
    }
    fn recurse(
        i: usize,
        credits: &[Vec<Option<Rational64>>],
        accum: &mut Vec<Rational64>,
    ) -> Rational64 {
        if i == credits.len() {
            return capped_total(accum);
        }
        let mut best = recurse(i + 1, credits, accum);
        for g in 0..accum.len() {
            if let Some(c) = credits[i][g] {
                accum[g] += c;
                best = best.max(recurse(i + 1, credits, accum));
                accum[g] -= c;
            }
        }
        best
    }
    let mut accum = vec![Rational64::zero(); golds.len()];
    recurse(0, &credits, &mut accum)
}

fn greedy_credit(extracted: &[String], golds: &[String]) -> Rational64 {
    let mentions: Vec<Mention> = extracted
        .iter()
        .map(|s| Mention {
            doc: "d".into(),
            surface: s.clone(),
            start: None,
            end: None,
        })
        .collect();
    let gold: Vec<GoldAnnotation> = golds
        .iter()
        .map(|s| GoldAnnotation {
            doc: "d".into(),
            start: 0,
            end: 1,
            surface: s.clone(),
            entity_type: EntityType::Misc,
        })
        .collect();
    match_unique(&mentions, &gold)
        .iter()
        .map(|c| c.credit)
        .sum()
}

/// A gold surface over its own vocabulary, with optional connectors, plus
/// the positions of its content tokens.
fn random_gold(rng: &mut ChaCha8Rng, id: usize, content_tokens: usize) -> Vec<String> {
    let mut tokens = Vec::new();
    for k in 0..content_tokens {
        if k > 0 && rng.gen_bool(0.3) {
            tokens.push(if rng.gen_bool(0.5) {
                "de".to_string()
            } else {
                "e".to_string()
            });
        }
        tokens.push(format!("Ent{id}w{k}"));
    }
    tokens
}

/// Contiguous fragments covering all tokens, each containing at least one
/// content token.
fn random_partition(rng: &mut ChaCha8Rng, tokens: &[String]) -> Vec<String> {
    let connectors = ["de", "e"];
    let is_content = |t: &String| !connectors.contains(&t.as_str());
    let mut fragments = Vec::new();
    let mut current: Vec<String> = Vec::new();
    let mut current_has_content = false;
    for (i, t) in tokens.iter().enumerate() {
        current.push(t.clone());
        current_has_content |= is_content(t);
        let rest_has_content = tokens[i + 1..].iter().any(is_content);
        if current_has_content && rest_has_content && rng.gen_bool(0.5) {
            fragments.push(current.join(" "));
            current.clear();
            current_has_content = false;
        }
    }
    if !current.is_empty() {
        fragments.push(current.join(" "));
    }
    fragments
}

#[test]
fn acceptance_06_matching_property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a17);

    // split-equivalence over 1000 randomized gold/extraction pairs
    for round in 0..1000 {
        let content = rng.gen_range(2..=6);
        let tokens = random_gold(&mut rng, round, content);
        let whole = vec![tokens.join(" ")];
        let parts = random_partition(&mut rng, &tokens);
        let golds = vec![tokens.join(" ")];
        let exact = greedy_credit(&whole, &golds);
        let split = greedy_credit(&parts, &golds);
        assert_eq!(exact, Rational64::one(), "round {round}");
        assert_eq!(split, exact, "round {round}: fragments {parts:?}");
    }

    // greedy equals brute-force optimal on small random fixtures; any gap
    // would be reported here
    let mut gaps = 0usize;
    for round in 0..300 {
        let gold_count = rng.gen_range(1..=4);
        let golds: Vec<Vec<String>> = (0..gold_count)
            .map(|g| {
                let content = rng.gen_range(1..=4);
                random_gold(&mut rng, g, content)
            })
            .collect();
        let gold_surfaces: Vec<String> = golds.iter().map(|g| g.join(" ")).collect();

        let mut extracted: Vec<String> = Vec::new();
        for tokens in &golds {
            match rng.gen_range(0..4) {
                0 => {}
                1 => extracted.push(tokens.join(" ")),
                _ => {
                    for fragment in random_partition(&mut rng, tokens) {
                        if rng.gen_bool(0.7) {
                            extracted.push(fragment);
                        }
                    }
                }
            }
        }
        if rng.gen_bool(0.3) {
            extracted.push(format!("Noise{round}"));
        }
        extracted.truncate(5);
        let unique: HashSet<&String> = extracted.iter().collect();
        if unique.len() != extracted.len() {
            continue;
        }

        let greedy = greedy_credit(&extracted, &gold_surfaces);
        let optimal = oracle_optimal_credit(&extracted, &gold_surfaces);
        assert!(
            greedy <= optimal,
            "greedy exceeded the optimum (round {round})"
        );
        if greedy != optimal {
            gaps += 1;
            println!(
                "criterion 6 gap (round {round}): greedy {greedy} < optimal {optimal}; \
                 extracted {extracted:?}, gold {gold_surfaces:?}"
            );
        }
        // the per-gold cap holds on every fixture
        let mentions: Vec<Mention> = extracted
            .iter()
            .map(|s| Mention {
                doc: "d".into(),
                surface: s.clone(),
                start: None,
                end: None,
            })
            .collect();
        let gold: Vec<GoldAnnotation> = gold_surfaces
            .iter()
            .map(|s| GoldAnnotation {
                doc: "d".into(),
                start: 0,
                end: 1,
                surface: s.clone(),
                entity_type: EntityType::Misc,
            })
            .collect();
        let mut per_gold = vec![Rational64::zero(); gold.len()];
        for c in match_unique(&mentions, &gold) {
            if let Some(g) = c.gold {
                per_gold[g] += c.credit;
            }
        }
        for total in per_gold {
            assert!(total <= Rational64::one());
        }
    }
    assert_eq!(gaps, 0, "greedy/optimal gaps found and reported above");

    // F1 stays between precision and recall whenever both are positive
    for _ in 0..1000 {
        let gold = rng.gen_range(1..=60usize);
        let extracted = rng.gen_range(1..=60usize);
        let max_credit = gold.min(extracted) as i64;
        let credit = Rational64::new(rng.gen_range(1..=max_credit * 4), 4)
            .min(Rational64::from_integer(max_credit));
        let r = compute_metrics(credit, gold, extracted, EvalMode::UniqueFractional);
        let lo = r.recall.min(r.precision);
        let hi = r.recall.max(r.precision);
        assert!(r.f1 >= lo - 1e-12 && r.f1 <= hi + 1e-12);
    }

    println!(
        "criterion 6: PASS — split-equivalence on 1000 pairs, credit cap, F1 bounds, \
         greedy = optimal on all sampled fixtures"
    );
}

#[test]
fn acceptance_07_ztest_and_normal_cdf() {
    let t = ztest_from_summary(0.284, 0.127, 881, 0.25).unwrap();
    assert!((t.z - 7.9463).abs() < 1e-3, "z = {}", t.z);
    assert!(t.p_value < 9.5e-5, "p = {}", t.p_value);

    let tabulated = [
        (0.0, 0.5),
        (1.0, 0.841_344_746_068_543),
        (1.96, 0.975_002_104_851_780),
        (3.0, 0.998_650_101_968_370),
    ];
    for (z, phi) in tabulated {
        let got = normal_cdf(z);
        assert!(
            (got - phi).abs() < 1e-7,
            "Phi({z}) = {got}, tabulated {phi}"
        );
    }
    println!(
        "criterion 7: PASS — one-sided p = {:.3e} < 9.5e-5 and Phi within 1e-7 at 4 points",
        t.p_value
    );
}

// --- criterion 8 helpers -------------------------------------------------

/// Independent full-window matcher for the default term-pattern semantics:
/// one capitalized token, or an optional trigger (with at most one
/// connector after it) followed by capitalized tokens separated by up to
/// two connectors; no leading/trailing connector; a multi-token window
/// cannot start with a single-letter capital.
fn oracle_window_matches(window: &[&Token], bases: &PatternBases) -> bool {
    let cap = |t: &Token| bases.is_cap(t);
    let trigger = |t: &Token| bases.is_trigger(t);
    let connector = |t: &Token| bases.is_connector(t);
    match window {
        [] => false,
        [only] => cap(only),
        _ => {
            if connector(window[0]) || connector(window[window.len() - 1]) {
                return false;
            }
            let mut i = 0;
            let has_trigger = trigger(window[0]);
            if has_trigger {
                i = 1;
                if i < window.len() && connector(window[i]) {
                    i += 1;
                }
            }
            if i >= window.len() || !cap(window[i]) {
                return false;
            }
            if !has_trigger && window[i].is_single_letter() {
                return false;
            }
            i += 1;
            while i < window.len() {
                let mut conns = 0;
                while i < window.len() && connector(window[i]) && conns < 2 {
                    i += 1;
                    conns += 1;
                }
                if i >= window.len() || !cap(window[i]) {
                    return false;
                }
                i += 1;
            }
            true
        }
    }
}

fn pool() -> Vec<&'static str> {
    vec![
        "o",
        "a",
        "os",
        "de",
        "da",
        "do",
        "das",
        "dos",
        "e",
        "em",
        "que",
        "não",
        "já",
        "casa",
        "cidade",
        "falou",
        "hoje",
        "ministro",
        "presidente",
        "rei",
        "irmão",
        "Brasil",
        "Lisboa",
        "Porto",
        "Silva",
        "Jorge",
        "Ana",
        "Maia",
        "COB",
        "GOL",
        "L",
        "O",
        "K",
        "Grande",
        "Oriente",
        "Dieta",
        "12",
        "2004",
        ",",
        "/",
        ";",
        "grão-mestre",
        "Às",
    ]
}

fn random_sentence_text(rng: &mut ChaCha8Rng, len: usize) -> String {
    let pool = pool();
    (0..len)
        .map(|_| pool[rng.gen_range(0..pool.len())])
        .collect::<Vec<_>>()
        .join(" ")
}

#[test]
fn acceptance_08_candidate_oracle_equivalence() {
    let start = Instant::now();
    let bases = default_bases();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0b05);
    let mut windows_checked = 0usize;
    let mut matches_checked = 0usize;

    for round in 0..400 {
        let len = rng.gen_range(1..=8);
        let text = random_sentence_text(&mut rng, len);
        let doc = segment(format!("s{round}"), text.clone());
        let candidates = generate_candidates(&doc, &bases);
        for sentence in &doc.sentences {
            if sentence.tokens.len() > 8 {
                continue;
            }
            let n = sentence.tokens.len();
            for i in 0..n {
                for j in i..n {
                    windows_checked += 1;
                    let window: Vec<&Token> = sentence.tokens[i..=j].iter().collect();
                    if !oracle_window_matches(&window, &bases) {
                        continue;
                    }
                    matches_checked += 1;
                    let contained = candidates.iter().any(|c| {
                        c.sentence_index == sentence.index
                            && c.token_span.0 <= i
                            && j <= c.token_span.1
                    });
                    assert!(
                        contained,
                        "oracle match [{i},{j}] of sentence {:?} (text {text:?}) not contained \
                         in any candidate: {candidates:?}",
                        sentence
                            .tokens
                            .iter()
                            .map(|t| &t.surface)
                            .collect::<Vec<_>>()
                    );
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60);
    println!(
        "criterion 8: PASS — {matches_checked} oracle matches (of {windows_checked} windows) \
         all contained in emitted candidates ({:.1} ms)",
        elapsed.as_secs_f64() * 1000.0
    );
}

fn synthetic_corpus(dir: &std::path::Path, docs: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for d in 0..docs {
        let mut text = String::new();
        for _ in 0..rng.gen_range(3..8) {
            let len = rng.gen_range(4..14);
            text.push_str(&random_sentence_text(&mut rng, len));
            text.push_str(". ");
        }
        text.push('\n');
        std::fs::write(dir.join(format!("doc{d:02}.txt")), text).unwrap();
    }
}

fn run_pampo(args: &[&str]) -> (Vec<u8>, Vec<u8>, Option<i32>) {
    let output = Command::new(env!("CARGO_BIN_EXE_pampo"))
        .args(args)
        .env_remove("PAMPO_PATTERNS")
        .output()
        .expect("binary runs");
    (output.stdout, output.stderr, output.status.code())
}

#[test]
fn acceptance_09_determinism_across_runs_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_corpus(dir.path(), 25, 0xd17e);
    let corpus = dir.path().to_str().unwrap();

    let (first, _, code) = run_pampo(&["extract", corpus, "--workers", "4"]);
    assert_eq!(code, Some(0));
    assert!(!first.is_empty());
    let (second, _, code) = run_pampo(&["extract", corpus, "--workers", "4"]);
    assert_eq!(code, Some(0));
    assert_eq!(first, second, "consecutive parallel runs differ");

    let (serial, _, code) = run_pampo(&["extract", corpus, "--workers", "1"]);
    assert_eq!(code, Some(0));
    assert_eq!(first, serial, "parallel and serial runs differ");

    let (freq_a, _, _) = run_pampo(&["freq", corpus, "--workers", "4", "--min-count", "2"]);
    let (freq_b, _, _) = run_pampo(&["freq", corpus, "--workers", "3", "--min-count", "2"]);
    assert_eq!(
        freq_a, freq_b,
        "frequency report differs across worker counts"
    );

    println!("criterion 9: PASS — byte-identical output across consecutive runs and worker counts");
}
