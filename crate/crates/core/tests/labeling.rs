use proptest::prelude::*;
use threadtoc::cluster::{rank_by_centrality, Cluster, Clustering, NOISE};
use threadtoc::ingest::SentenceUnit;
use threadtoc::labeling::{
    assemble_cluster_text, clean_completion, label_from_completion, truncate_tokens, Labeler, LabelingError,
};
use threadtoc::llm::{Catalog, MockBackend, Prompt};

fn units(n: usize) -> Vec<SentenceUnit> {
    (0..n)
        .map(|i| SentenceUnit {
            sentence_id: i,
            text: format!("Sentence number {i} about housing."),
            reply_id: format!("r{}", i / 4),
            index_in_reply: i % 4,
        })
        .collect()
}

/// One cluster over all points, λ rising with a scrambled index.
fn ranked_cluster(n: usize) -> (Clustering, Vec<f64>) {
    let lambda: Vec<f64> = (0..n).map(|i| ((i * 37) % n) as f64 / n as f64).collect();
    let clustering = rank_by_centrality(Clustering {
        assignments: vec![0; n],
        lambda: lambda.clone(),
        clusters: vec![Cluster { cluster_id: 0, member_ids: (0..n).collect(), centroid: vec![0.0] }],
    });
    (clustering, lambda)
}

#[test]
fn small_cluster_keeps_all_members_in_centrality_order() {
    let (c, _) = ranked_cluster(3);
    let a = assemble_cluster_text(&c.clusters[0], &units(3), 20, 6000).unwrap();
    let expected: Vec<String> = c.clusters[0].member_ids.iter().map(|&i| units(3)[i].text.clone()).collect();
    assert_eq!(a.text, expected.join("\n"));
}

#[test]
fn large_cluster_sends_exactly_the_top_twenty() {
    let (c, lambda) = ranked_cluster(50);
    let u = units(50);
    let a = assemble_cluster_text(&c.clusters[0], &u, 20, 6000).unwrap();
    assert_eq!(a.sentences, 20);
    let mut by_lambda: Vec<usize> = (0..50).collect();
    by_lambda.sort_by(|&x, &y| lambda[y].partial_cmp(&lambda[x]).unwrap().then(x.cmp(&y)));
    let expected: Vec<&str> = by_lambda[..20].iter().map(|&i| u[i].text.as_str()).collect();
    assert_eq!(a.text, expected.join("\n"));
}

#[test]
fn member_outside_units_is_reported() {
    let c = Cluster { cluster_id: 2, member_ids: vec![5], centroid: vec![] };
    assert!(matches!(
        assemble_cluster_text(&c, &units(3), 20, 100),
        Err(LabelingError::MemberOutOfRange { cluster_id: 2, point: 5, len: 3 })
    ));
}

#[test]
fn completion_cleanup_example() {
    let l = label_from_completion(0, "\"Debate about shoe sizes\"\nExtra", "m".into()).unwrap();
    assert_eq!(l.text, "Debate about shoe sizes");
    assert!(l.truncated);
    assert!(matches!(label_from_completion(1, " \"\" \n", "m".into()), Err(LabelingError::EmptyCompletion(1))));
}

#[test]
fn mock_labels_every_cluster_deterministically() {
    let u = units(12);
    let clustering = Clustering {
        assignments: vec![0, 0, 0, 1, 1, 1, NOISE, 2, 2, 2, 2, NOISE],
        lambda: vec![1.0; 12],
        clusters: vec![
            Cluster { cluster_id: 0, member_ids: vec![0, 1, 2], centroid: vec![] },
            Cluster { cluster_id: 1, member_ids: vec![3, 4, 5], centroid: vec![] },
            Cluster { cluster_id: 2, member_ids: vec![7, 8, 9, 10], centroid: vec![] },
        ],
    };
    let labeler = Labeler::new(Catalog::bundled(), "gpt35", 7).unwrap();
    let a = labeler.label_all(&clustering, &u, &MockBackend::default(), 3).unwrap();
    let b = labeler.label_all(&clustering, &u, &MockBackend::default(), 1).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|l| l.cluster_id).collect::<Vec<_>>(), [0, 1, 2]);
    assert_eq!(a[2].text, "LABEL(Sentence number 7 about housing.)");
    assert_eq!(a[0].model_id, "mock");
}

#[test]
fn instruction_formats_bind_instruction_and_input() {
    let labeler = Labeler::new(Catalog::bundled(), "label-alpaca", 0).unwrap();
    let Prompt::Text(p) = labeler.request("Some text.").unwrap().prompt else { panic!() };
    assert!(p.contains("### Instruction:\nEvery input is the content of a debate."));
    assert!(p.ends_with("### Input:\nSome text.\n### Response:"));
}

#[test]
fn catalog_context_sizing_is_used() {
    let labeler = Labeler::new(Catalog::bundled(), "gpt35", 0).unwrap();
    assert_eq!((labeler.top_k, labeler.char_budget, labeler.max_tokens), (20, 6000, 64));
}

const EDGE_QUOTES: &[char] = &['"', '\'', '\u{201c}', '\u{201d}'];

proptest! {
    #[test]
    fn cleaned_labels_are_single_line_without_edge_quotes(raw in "[\"'a-z \n\u{201c}\u{201d}]{0,40}") {
        let (text, _) = clean_completion(&raw);
        prop_assert!(!text.contains('\n'));
        prop_assert!(!text.starts_with(EDGE_QUOTES));
        prop_assert!(!text.ends_with(EDGE_QUOTES));
        prop_assert_eq!(text.trim(), &text);
    }

    #[test]
    fn truncation_is_idempotent(words in proptest::collection::vec("[a-z]{1,6}", 0..40), gaps in "[ \t]{1,3}", limit in 1usize..30) {
        let text = words.join(&gaps);
        let once = truncate_tokens(&text, limit);
        prop_assert_eq!(truncate_tokens(&once, limit), once.clone());
        prop_assert!(once.split_whitespace().count() <= limit);
    }

    #[test]
    fn assembled_text_fits_or_is_one_sentence(lens in proptest::collection::vec(1usize..80, 1..30), budget in 1usize..400, top_k in 1usize..25) {
        let u: Vec<SentenceUnit> = lens.iter().enumerate().map(|(i, &n)| SentenceUnit {
            sentence_id: i, text: "x".repeat(n), reply_id: "r".into(), index_in_reply: i,
        }).collect();
        let c = Cluster { cluster_id: 0, member_ids: (0..u.len()).collect(), centroid: vec![] };
        let a = assemble_cluster_text(&c, &u, top_k, budget).unwrap();
        prop_assert!(a.text.chars().count() <= budget || a.sentences == 1);
        prop_assert!(a.sentences <= top_k);
        prop_assert_eq!(a.text.lines().count(), a.sentences);
    }
}
