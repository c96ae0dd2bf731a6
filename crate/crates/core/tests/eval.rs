use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threadtoc::eval::{
    accuracy_by_k, accuracy_report, concordance_by_item, kendalls_w, label_quality_report, parse_jsonl, read_jsonl,
    rouge, rrf_fuse, topk_frame_accuracy, validate_references, EvalError, FramePrediction, LabelPrediction,
    PreferenceRanking, ReferenceSample, RougeVariant, RRF_K,
};
use threadtoc::framing::{FrameInventory, FrameSetting};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/eval").join(name)
}

fn reference(id: usize, frames: &[&str]) -> ReferenceSample {
    ReferenceSample { sample_id: format!("s{id}"), label: format!("label {id}"), frames: frames.iter().map(|s| s.to_string()).collect() }
}

fn prediction(id: usize, frames: &[&str]) -> FramePrediction {
    FramePrediction {
        sample_id: format!("s{id}"),
        model_id: "m".into(),
        setting: FrameSetting::ZeroShotLabels,
        frames: frames.iter().map(|s| s.to_string()).collect(),
    }
}

#[test]
fn two_of_three_first_frame_hits() {
    let refs = [reference(0, &["Economic"]), reference(1, &["Morality", "Political"]), reference(2, &["Crime & Punishment"])];
    let preds = [prediction(0, &["Economic"]), prediction(1, &["Political", "Economic"]), prediction(2, &["Economic"])];
    let acc = topk_frame_accuracy(&preds, &refs, 1).unwrap();
    assert!((acc - 200.0 / 3.0).abs() < 1e-12);
    assert_eq!(format!("{acc:.1}"), "66.7");
}

#[test]
fn empty_and_missing_predictions_are_misses() {
    let refs = [reference(0, &["Economic"]), reference(1, &["Morality"])];
    assert_eq!(topk_frame_accuracy(&[prediction(0, &[]), prediction(1, &[])], &refs, 3).unwrap(), 0.0);
    assert_eq!(topk_frame_accuracy(&[prediction(0, &["Economic"])], &refs, 1).unwrap(), 50.0);
}

#[test]
fn unknown_samples_and_bad_k_are_errors() {
    let refs = [reference(0, &["Economic"])];
    assert!(matches!(topk_frame_accuracy(&[prediction(9, &["Economic"])], &refs, 1), Err(EvalError::KeyMismatch(id)) if id == "s9"));
    assert!(matches!(topk_frame_accuracy(&[], &refs, 4), Err(EvalError::InvalidK(4))));
    assert!(matches!(
        topk_frame_accuracy(&[prediction(0, &[]), prediction(0, &[])], &refs, 1),
        Err(EvalError::Duplicate { .. })
    ));
}

/// 243 references; exactly 153 predictions lead with a reference frame, and
/// the rest place one second or third, or not at all.
fn planted(seed: u64) -> (Vec<ReferenceSample>, Vec<FramePrediction>, [usize; 3]) {
    let names = FrameInventory::bundled().canonical_names();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..243).collect();
    order.shuffle(&mut rng);
    let mut refs = Vec::new();
    let mut preds = Vec::new();
    let mut counts = [0usize; 3];
    for (slot, &id) in order.iter().enumerate() {
        let mut pool = names.clone();
        pool.shuffle(&mut rng);
        let truth = &pool[..rng.random_range(1..=2)];
        let others: Vec<&String> = pool[2..].iter().collect();
        refs.push(ReferenceSample { sample_id: format!("s{id}"), label: String::new(), frames: truth.to_vec() });
        let mut frames = vec![others[0].clone(), others[1].clone(), others[2].clone()];
        let rank = if slot < 153 { Some(0) } else { [Some(1), Some(2), None][slot % 3] };
        if let Some(r) = rank {
            frames[r] = truth[0].clone();
            for c in &mut counts[r..] {
                *c += 1;
            }
        }
        preds.push(FramePrediction { sample_id: format!("s{id}"), model_id: "m".into(), setting: FrameSetting::FewShot, frames });
    }
    (refs, preds, counts)
}

#[test]
fn planted_hits_report_the_closed_form_rate() {
    let (refs, preds, counts) = planted(1);
    assert_eq!(counts[0], 153);
    let acc = accuracy_by_k(&preds, &refs).unwrap();
    for k in 0..3 {
        assert_eq!(acc[k], 100.0 * counts[k] as f64 / 243.0);
    }
    assert_eq!(format!("{:.1}", acc[0]), "63.0");
}

#[test]
fn fixture_report_matches_the_expected_table() {
    let refs: Vec<ReferenceSample> = read_jsonl(&fixture("references.jsonl")).unwrap();
    validate_references(&refs, &FrameInventory::bundled()).unwrap();
    let preds: Vec<FramePrediction> = read_jsonl(&fixture("predictions.jsonl")).unwrap();
    let report = accuracy_report(&preds, &refs, 1).unwrap();
    assert_eq!(report.to_csv().unwrap(), std::fs::read_to_string(fixture("expected_top1.csv")).unwrap());
    let json: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(json["rows"][0]["short"], serde_json::Value::Null);
    assert!(json["rows"][0]["zero-shot"].is_number());
}

#[test]
fn reference_validation_rejects_unknown_frames() {
    let inv = FrameInventory::bundled();
    assert!(validate_references(&[reference(0, &["Economics"])], &inv).is_err());
    assert!(validate_references(&[reference(0, &[])], &inv).is_err());
    assert!(validate_references(&[reference(0, &["Economic", "Political", "Morality"])], &inv).is_err());
}

#[test]
fn jsonl_errors_carry_line_numbers() {
    let err = parse_jsonl::<ReferenceSample>("\n{\"sample_id\":\"a\",\"label\":\"b\",\"frames\":[]}\n{oops\n", "refs").unwrap_err();
    assert!(matches!(err, EvalError::Jsonl { line: 3, .. }), "{err}");
}

fn ranking(annotator: &str, order: &[&str]) -> PreferenceRanking {
    PreferenceRanking { annotator_id: annotator.into(), item_id: "i".into(), ranking: order.iter().map(|s| s.to_string()).collect() }
}

#[test]
fn rrf_matches_hand_computed_scores() {
    let one = rrf_fuse(&[ranking("a", &["A", "B"])], RRF_K).unwrap();
    assert_eq!(one[0].model_id, "A");
    assert!((one[0].score - 1.0 / 61.0).abs() < 1e-12);
    assert!((one[1].score - 1.0 / 62.0).abs() < 1e-12);
    assert!((one[0].score - 0.016393).abs() < 1e-6);

    let two = rrf_fuse(&[ranking("a", &["A", "B"]), ranking("b", &["B", "A"])], RRF_K).unwrap();
    let expected = 1.0 / 61.0 + 1.0 / 62.0;
    assert!(two.iter().all(|s| (s.score - expected).abs() < 1e-9));
    assert!((expected - 0.032522).abs() < 1e-6);
    assert_eq!(two[0].model_id, "A", "ties go to the smaller model id");
}

#[test]
fn identical_rankings_fuse_to_themselves() {
    let order = ["C", "A", "D", "B"];
    let rs: Vec<_> = (0..5).map(|i| ranking(&format!("a{i}"), &order)).collect();
    let fused: Vec<String> = rrf_fuse(&rs, RRF_K).unwrap().into_iter().map(|s| s.model_id).collect();
    assert_eq!(fused, order);
}

#[test]
fn rrf_rejects_mismatched_model_sets() {
    assert!(matches!(rrf_fuse(&[], RRF_K), Err(EvalError::NoRankings)));
    assert!(matches!(
        rrf_fuse(&[ranking("a", &["A", "B"]), ranking("b", &["A", "C"])], RRF_K),
        Err(EvalError::InconsistentModelSets { index: 1 })
    ));
    assert!(matches!(rrf_fuse(&[ranking("a", &["A", "A"])], RRF_K), Err(EvalError::InconsistentModelSets { index: 0 })));
}

#[test]
fn kendall_small_cases() {
    assert_eq!(kendalls_w(&[vec![1, 2, 3], vec![1, 2, 3]]).unwrap(), 1.0);
    // Opposite orders give equal rank sums, so there is no concordance at all.
    assert_eq!(kendalls_w(&[vec![1, 2, 3], vec![3, 2, 1]]).unwrap(), 0.0);
    assert!(matches!(kendalls_w(&[vec![1]]), Err(EvalError::DegenerateInput(_))));
    assert!(matches!(kendalls_w(&[]), Err(EvalError::DegenerateInput(_))));
    assert!(matches!(kendalls_w(&[vec![1, 1, 3]]), Err(EvalError::DegenerateInput(_))));
}

/// The same statistic through the expanded sum-of-squares form.
fn w_oracle(rows: &[Vec<usize>]) -> f64 {
    let (m, n) = (rows.len() as f64, rows[0].len() as f64);
    let sum_sq: f64 = (0..rows[0].len()).map(|j| rows.iter().map(|r| r[j] as f64).sum::<f64>().powi(2)).sum();
    (12.0 * sum_sq - 3.0 * m * m * n * (n + 1.0).powi(2)) / (m * m * n * (n * n - 1.0))
}

fn random_matrix(rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let (m, n) = (rng.random_range(1..=8), rng.random_range(2..=9));
    (0..m)
        .map(|_| {
            let mut row: Vec<usize> = (1..=n).collect();
            row.shuffle(rng);
            row
        })
        .collect()
}

#[test]
fn kendall_matches_the_expanded_formula_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for _ in 0..50 {
        let rows = random_matrix(&mut rng);
        let w = kendalls_w(&rows).unwrap();
        assert!((w - w_oracle(&rows)).abs() < 1e-9, "{rows:?}");
        assert!((-1e-12..=1.0 + 1e-12).contains(&w));
    }
}

#[test]
fn annotation_fixture_reproduces_stored_concordance() {
    let rankings: Vec<PreferenceRanking> = read_jsonl(&fixture("annotations.jsonl")).unwrap();
    let expected: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("annotations_expected.json")).unwrap()).unwrap();
    let per_item = concordance_by_item(&rankings).unwrap();
    let stored: BTreeMap<String, f64> = serde_json::from_value(expected["kendalls_w"].clone()).unwrap();
    assert_eq!(per_item.len(), stored.len());
    for (item, w) in &per_item {
        assert!((w - stored[item]).abs() < 1e-12, "{item}");
    }
    let mean = per_item.values().sum::<f64>() / per_item.len() as f64;
    assert!((mean - expected["mean_kendalls_w"].as_f64().unwrap()).abs() < 1e-12);
    let fused = rrf_fuse(&rankings, RRF_K).unwrap();
    for (got, want) in fused.iter().zip(expected["rrf"].as_array().unwrap()) {
        assert_eq!(got.model_id, want["model_id"].as_str().unwrap());
        assert!((got.score - want["score"].as_f64().unwrap()).abs() < 1e-12);
    }
}

#[test]
fn rouge_hand_counts() {
    let s = rouge("the cat sat", "the cat", RougeVariant::One);
    assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
    assert_eq!(s.recall, 1.0);
    assert!((s.f1 - 0.8).abs() < 1e-6);
    for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::Lcs] {
        assert_eq!(rouge("Rent is too high.", "rent is too HIGH", v).f1, 1.0);
        assert_eq!(rouge("", "rent is too high", v).f1, 0.0);
    }
    let lcs = rouge("police killed the gunman", "the gunman was killed by police", RougeVariant::Lcs);
    assert!((lcs.recall - 2.0 / 6.0).abs() < 1e-12 && (lcs.precision - 0.5).abs() < 1e-12);
}

#[test]
fn label_report_leaves_the_embedding_column_empty() {
    let refs = vec![
        ReferenceSample { sample_id: "a".into(), label: "the cat".into(), frames: vec!["Economic".into()] },
        ReferenceSample { sample_id: "b".into(), label: "rent is high".into(), frames: vec!["Economic".into()] },
    ];
    let preds = vec![LabelPrediction { sample_id: "a".into(), model_id: "m".into(), label: "the cat sat".into() }];
    let report = label_quality_report(&preds, &refs).unwrap();
    assert!((report.rows[0].rouge_1 - 0.4).abs() < 1e-12);
    let csv = report.to_csv().unwrap();
    assert_eq!(csv.lines().next().unwrap(), "model,rouge-1,rouge-2,rouge-l,bertscore");
    assert!(csv.lines().nth(1).unwrap().ends_with(','));
}

fn rank_rows() -> impl Strategy<Value = Vec<Vec<usize>>> {
    (1usize..6, 2usize..7).prop_flat_map(|(m, n)| {
        proptest::collection::vec(Just((1..=n).collect::<Vec<_>>()).prop_shuffle(), m)
    })
}

proptest! {
    #[test]
    fn topk_is_monotone_in_k(seed in 0u64..1000, n in 1usize..40) {
        let names = FrameInventory::bundled().canonical_names();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let refs: Vec<ReferenceSample> = (0..n).map(|i| ReferenceSample {
            sample_id: format!("s{i}"), label: String::new(), frames: vec![names[rng.random_range(0..names.len())].clone()],
        }).collect();
        let mut preds = Vec::new();
        for i in 0..n {
            if rng.random_bool(0.2) {
                continue;
            }
            let frames = (0..rng.random_range(0..=3)).map(|_| names[rng.random_range(0..names.len())].clone()).collect();
            preds.push(FramePrediction { sample_id: format!("s{i}"), model_id: "m".into(), setting: FrameSetting::FewShot, frames });
        }
        let a = accuracy_by_k(&preds, &refs).unwrap();
        prop_assert!(a[0] <= a[1] && a[1] <= a[2]);
    }

    #[test]
    fn rrf_ignores_ranking_order(rows in rank_rows(), seed in any::<u64>()) {
        let models = ["m1", "m2", "m3", "m4", "m5", "m6"];
        let rs: Vec<PreferenceRanking> = rows.iter().enumerate().map(|(i, r)| PreferenceRanking {
            annotator_id: format!("a{i}"), item_id: "x".into(), ranking: r.iter().map(|&k| models[k - 1].to_string()).collect(),
        }).collect();
        let mut shuffled = rs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (a, b) = (rrf_fuse(&rs, RRF_K).unwrap(), rrf_fuse(&shuffled, RRF_K).unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.model_id, &y.model_id);
            prop_assert!((x.score - y.score).abs() < 1e-12);
        }
    }

    #[test]
    fn kendall_relabeling_and_unit_agreement(rows in rank_rows(), seed in any::<u64>()) {
        let n = rows[0].len();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let relabeled: Vec<Vec<usize>> = rows.iter().map(|r| perm.iter().map(|&j| r[j]).collect()).collect();
        let w = kendalls_w(&rows).unwrap();
        prop_assert!((w - kendalls_w(&relabeled).unwrap()).abs() < 1e-12);
        let identical = rows.iter().all(|r| r == &rows[0]);
        prop_assert_eq!((w - 1.0).abs() < 1e-12, identical);
    }

    #[test]
    fn rouge_swaps_precision_and_recall(a in "[a-d ]{0,24}", b in "[a-d ]{0,24}") {
        for v in [RougeVariant::One, RougeVariant::Two, RougeVariant::Lcs] {
            let (x, y) = (rouge(&a, &b, v), rouge(&b, &a, v));
            prop_assert!((x.precision - y.recall).abs() < 1e-12);
            prop_assert!((x.recall - y.precision).abs() < 1e-12);
            prop_assert!((x.f1 - y.f1).abs() < 1e-12);
        }
    }
}
