use std::fmt::Write;

use mplx_core::ingest::RelationshipLabel;
use mplx_core::pipeline::AnalysisReport;

fn opt(x: Option<f64>) -> String {
    x.map_or("-".into(), |v| format!("{v:.3}"))
}

/// Markdown rendering of the headline tables.
pub fn markdown(r: &AnalysisReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Analysis report\n");
    let _ = writeln!(
        s,
        "{} participants, {} events ({} external, {} outside window), {} relationship reports.\n",
        r.inputs.participants,
        r.inputs.events,
        r.inputs.dropped_external_events,
        r.inputs.dropped_outside_window,
        r.inputs.reports
    );

    let _ = writeln!(s, "## Layers\n\n| layer | nodes | edges | avg degree |\n|---|---|---|---|");
    for l in &r.layers {
        let _ = writeln!(s, "| {} | {} | {} | {:.2} |", l.layer, l.nodes, l.edges, l.avg_degree);
    }
    if let Some(o) = r.overlap("sms", "calls") {
        let _ = writeln!(s, "\nSMS edges also in calls: {}", opt(o.fraction));
    }

    let _ = writeln!(s, "\n## Relationships (ordered pairs tied in the union)\n");
    for label in RelationshipLabel::ALL {
        let _ = writeln!(s, "- {label}: {}", r.label_counts_on_union.get(label));
    }
    if r.hierarchy_violations > 0 {
        let _ = writeln!(s, "- hierarchy violations: {}", r.hierarchy_violations);
    }

    let _ = writeln!(
        s,
        "\n## Label distribution by aggregation\n\n| aggregation | pairs | none | fb_only | socialize | close_friend |\n|---|---|---|---|---|---|"
    );
    for p in &r.pmfs {
        let probs: Vec<String> = p.probabilities.iter().map(|q| opt(q.probability)).collect();
        let _ = writeln!(s, "| {} | {} | {} |", p.aggregation, p.support_count, probs.join(" | "));
    }

    let _ = writeln!(
        s,
        "\n## Homophily\n\n| category | C | p | rho | median delta | share delta > 0 |\n|---|---|---|---|---|---|"
    );
    for c in &r.categories {
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} | {} |",
            c.category,
            opt(c.graph_correlation),
            opt(c.significance.as_ref().map(|x| x.p_value)),
            opt(c.spearman_rho),
            opt(c.delta.as_ref().map(|d| d.summary.median)),
            opt(c.delta.as_ref().map(|d| d.fraction_positive)),
        );
    }
    s
}
