use emoaug_core::classifier::compute_uar;
use emoaug_core::dataset::{generate_toy_dataset, LabelKind, ToyConfig};
use emoaug_core::models::{ModelBundle, ModelConfig};
use emoaug_core::report::{
    collect_representations, compute_tsne, emit_report, emit_tsne, silhouette, Metric, Origin, ReportLayout,
    RepresentationSet, TsneConfig,
};
use emoaug_core::Error;

fn blobs(per_class: usize, spread: f64) -> RepresentationSet {
    let mut set = RepresentationSet::default();
    for c in 0..3 {
        for i in 0..per_class {
            let jitter = spread * ((i * 7 + c * 3) % 11) as f64 / 11.0;
            set.representations.push(vec![10.0 * c as f64 + jitter, -5.0 * c as f64 + jitter * 0.5, jitter]);
            set.labels.push(format!("class{c}"));
            set.origins.push(if i % 2 == 0 { Origin::Original } else { Origin::Augmented });
        }
    }
    set
}

fn quick() -> TsneConfig {
    TsneConfig { iterations: 300, ..TsneConfig::default() }
}

#[test]
fn tsne_keeps_every_point_and_label() {
    let set = blobs(8, 1.0);
    let s = compute_tsne(&set, &TsneConfig::default(), 1).unwrap();
    assert_eq!(s.points.len(), set.len());
    let mut want = set.labels.clone();
    let mut got: Vec<String> = s.points.iter().map(|p| p.label.clone()).collect();
    want.sort();
    got.sort();
    assert_eq!(want, got);
    assert!(s.points.iter().all(|p| p.x.is_finite() && p.y.is_finite()));
    assert!(s.silhouette_2d > 0.5, "{}", s.silhouette_2d);
    assert!(s.silhouette_augmented.is_some());
}

#[test]
fn tsne_is_deterministic_per_seed() {
    let set = blobs(6, 2.0);
    assert_eq!(compute_tsne(&set, &quick(), 4).unwrap(), compute_tsne(&set, &quick(), 4).unwrap());
}

#[test]
fn single_class_sets_are_rejected() {
    let mut set = blobs(4, 1.0);
    set.labels.iter_mut().for_each(|l| *l = "only".into());
    assert!(matches!(compute_tsne(&set, &quick(), 0), Err(Error::TooFewClasses(1))));
}

#[test]
fn silhouette_orders_separation() {
    let (_, idx) = blobs(6, 1.0).label_indices();
    let tight = silhouette(&blobs(6, 1.0).representations, &idx, Metric::Manhattan).unwrap();
    let loose = silhouette(&blobs(6, 30.0).representations, &idx, Metric::Manhattan).unwrap();
    assert!(tight > loose);
    assert!((-1.0..=1.0).contains(&tight) && (-1.0..=1.0).contains(&loose));
}

#[test]
fn emitted_plot_files_exist() {
    let dir = tempfile::tempdir().unwrap();
    let (m, store) = generate_toy_dataset(&ToyConfig::default(), 0).unwrap();
    let bundle = ModelBundle::new(ModelConfig::toy(32, 16), 0).unwrap();
    let set = collect_representations(&m, &store, &bundle, LabelKind::Emotion, 5, 2, 3).unwrap();
    assert_eq!(set.len(), 4 * 5 * 3);
    assert_eq!(set.only(Origin::Augmented).len(), 40);
    emit_tsne(&set, &quick(), 0, dir.path()).unwrap();
    for f in ["tsne_points.csv", "tsne_summary.json", "tsne.png"] {
        assert!(dir.path().join(f).metadata().unwrap().len() > 0, "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("tsne_points.csv")).unwrap();
    assert_eq!(csv.lines().count(), 61);
}

#[test]
fn ablation_table_lists_the_four_systems() {
    let mut reports = Vec::new();
    for (i, sys) in ["L_Total", "L_Model", "NoAUG", "L_Model+L_VAR"].iter().enumerate() {
        let mut r = compute_uar(&[("a", "a"), ("b", if i % 2 == 0 { "b" } else { "a" })]).unwrap();
        r.meta.system = Some(sys.to_string());
        r.meta.fold = Some("0".into());
        reports.push(r);
    }
    let t = emit_report(&reports, ReportLayout::Ablation).unwrap();
    let names: Vec<&str> = t.rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(names, ["NoAUG", "L_Model", "L_Model+L_VAR", "L_Total"]);
    assert!(t.to_markdown().contains("| L_Total |"));
    assert_eq!(t.to_csv().lines().count(), 5);
}
