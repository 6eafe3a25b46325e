use std::collections::HashMap;

use kdyn_core::regime::{count_prominent_peaks, PEAK_PROMINENCE};
use kdyn_core::trajectory::NormalizedTrajectory;
use kdyn_core::{builtin_presets, Regime};

fn runs() -> HashMap<String, (NormalizedTrajectory, Regime)> {
    builtin_presets()
        .into_iter()
        .map(|p| {
            let out = p.run().unwrap();
            let label = out.regime.expect("T = 1000 is long enough to classify").label;
            (p.name, (out.normalized, label))
        })
        .collect()
}

fn last(n: &NormalizedTrajectory) -> [f64; 5] {
    let i = n.len() - 1;
    [n.k_norm[i], n.q[i], n.theta[i], n.h_norm[i], n.q_norm[i]]
}

fn first(n: &NormalizedTrajectory) -> [f64; 5] {
    [n.k_norm[0], n.q[0], n.theta[0], n.h_norm[0], n.q_norm[0]]
}

#[test]
fn regime_signatures() {
    let r = runs();
    let get = |name: &str| &r[name].0;
    let (a, b, c) = (last(get("no_llms")), last(get("healthy_growth")), last(get("tighter_gate")));
    // b: larger archive and human skill than a, slightly lower quality.
    assert!(b[0] > a[0] && b[3] > a[3] && b[1] < a[1]);
    // c: higher quality and model skill than b, smaller archive.
    assert!(c[1] > b[1] && c[2] > b[2] && c[0] < b[0]);
    // d: quality and model skill fall.
    let d = get("inverted_flow");
    assert!(last(d)[1] < first(d)[1] && last(d)[2] < first(d)[2]);
    // f: mutual erosion with exploding demand.
    let f = get("inverted_flow_learning");
    for i in [1, 2, 3] {
        assert!(last(f)[i] < first(f)[i], "f component {i}");
    }
    assert!(last(f)[4] > first(f)[4]);
    // g: tightening the gate keeps human skill above its start.
    let g = get("gate_tightening");
    assert!(last(g)[3] > first(g)[3]);
    // h: model skill ends above its start while quality falls.
    let h = get("model_recovery");
    assert!(last(h)[2] > first(h)[2] && last(h)[1] < first(h)[1]);
}

#[test]
fn no_llm_quality_settles_at_flow_balance() {
    // With no AI inflow, K -> alpha_H H / delta_K, so alpha_H H / K -> delta_K
    // and the quality equation balances at q_H delta_K / (delta_K + delta_q).
    let r = runs();
    let q = last(&r["no_llms"].0)[1];
    let analytic = 0.95 * 0.01 / (0.01 + 0.001);
    assert!((q - analytic).abs() < 1e-3, "{q} vs {analytic}");
}

#[test]
fn oscillation_preset_peaks() {
    let r = runs();
    let q = &r["oscillations"].0.q;
    // Relaxation cycles of roughly 330 months: two prominent maxima by T = 1000.
    assert_eq!(count_prominent_peaks(q, PEAK_PROMINENCE), 2);
}

#[test]
fn frozen_labels() {
    let r = runs();
    let expected = [
        ("no_llms", Regime::Stagnation),
        ("healthy_growth", Regime::Growth),
        ("tighter_gate", Regime::Growth),
        ("inverted_flow", Regime::Mixed),
        ("inverted_learning", Regime::Growth),
        ("inverted_flow_learning", Regime::Decline),
        ("gate_tightening", Regime::Growth),
        ("model_recovery", Regime::Mixed),
        ("oscillations", Regime::Oscillatory),
        ("medical", Regime::Growth),
        ("open_source", Regime::Growth),
    ];
    for (name, label) in expected {
        assert_eq!(r[name].1, label, "{name}");
    }
}
