use mplx_core::ingest::RelationshipLabel;
use mplx_core::pipeline::{run_pipeline, AnalysisReport, RunConfig};
use mplx_core::profiles::Registry;
use mplx_core::synth::{generate, SyntheticSpec};
use mplx_core::verify::{self, verify_report};

fn synthetic_report() -> AnalysisReport {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let spec = SyntheticSpec {
        n_nodes: 12,
        ..SyntheticSpec::default()
    };
    generate(&spec, &Registry::default()).unwrap().write(&data).unwrap();
    run_pipeline(&RunConfig {
        data_dir: Some(data),
        output_dir: tmp.path().join("out"),
        permutations: 0,
        ..RunConfig::default()
    })
    .unwrap()
    .report
}

/// Overwrites the checked figures with the published values.
fn matching(mut r: AnalysisReport) -> AnalysisReport {
    for (layer, nodes, edges) in verify::LAYER_TABLE {
        let l = r.layers.iter_mut().find(|l| l.layer == layer).unwrap();
        l.nodes = nodes;
        l.edges = edges;
    }
    for (label, count) in verify::LABEL_COUNTS {
        let c = &mut r.label_counts_on_union;
        match label {
            RelationshipLabel::None => c.none = count,
            RelationshipLabel::FbOnly => c.fb_only = count,
            RelationshipLabel::Socialize => c.socialize = count,
            RelationshipLabel::CloseFriend => c.close_friend = count,
        }
    }
    r.overlaps
        .iter_mut()
        .find(|o| o.layer == "sms" && o.within == "calls")
        .unwrap()
        .fraction = Some(0.915);
    let pmf = r.pmfs.iter_mut().find(|p| p.aggregation == verify::INTERSECTION_ALL).unwrap();
    pmf.probabilities[RelationshipLabel::CloseFriend.index()].probability = Some(0.78);
    for (category, value) in verify::GRAPH_CORRELATIONS {
        r.categories.iter_mut().find(|c| c.category == category).unwrap().graph_correlation =
            Some(value - 0.04);
    }
    for (category, value) in verify::DEGREE_RANK {
        r.categories.iter_mut().find(|c| c.category == category).unwrap().spearman_rho =
            Some(value + 0.04);
    }
    r
}

#[test]
fn published_figures_pass_within_tolerance() {
    let v = verify_report(&matching(synthetic_report()));
    assert!(v.passed(), "{:#?}", v.lines());
    assert!(v.lines().iter().all(|l| l.starts_with("PASS") || l.starts_with("FAIL")));
}

#[test]
fn each_deviation_fails_its_own_check() {
    let base = matching(synthetic_report());

    let mut r = base.clone();
    r.layers[0].edges += 1;
    let v = verify_report(&r);
    assert!(!v.passed());
    let failed: Vec<&str> = v.checks.iter().filter(|c| c.primary && !c.passed).map(|c| c.name.as_str()).collect();
    assert_eq!(failed, vec![format!("layers.{}.edges", r.layers[0].layer).as_str()]);

    let mut r = base.clone();
    r.overlaps
        .iter_mut()
        .find(|o| o.layer == "sms" && o.within == "calls")
        .unwrap()
        .fraction = Some(0.9);
    assert!(!verify_report(&r).passed());

    let mut r = base.clone();
    r.categories[0].graph_correlation = None;
    assert!(!verify_report(&r).passed());

    let mut r = base;
    r.pmfs.retain(|p| p.aggregation != verify::INTERSECTION_ALL);
    let v = verify_report(&r);
    let check = v.checks.iter().find(|c| c.name.starts_with("pmf.intersection_all")).unwrap();
    assert!(!check.passed);
    assert!(check.note.is_some());
}

#[test]
fn synthetic_data_fails_the_dataset_checks() {
    assert!(!verify_report(&synthetic_report()).passed());
}
