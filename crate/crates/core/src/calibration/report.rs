use std::fmt::Write;

use super::{FitResult, VariantMatrix};

/// One line per fit: era, estimates, flow RMSE and level RMSE.
pub fn render_fit_table(fits: &[FitResult]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<16} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "era", "alpha_H", "alpha_A", "delta_K", "RMSE", "RMSE_level"
    )
    .unwrap();
    for f in fits {
        let p = f.flow_params;
        writeln!(
            out,
            "{:<16} {:>12.6} {:>12.6e} {:>12.5e} {:>12.3} {:>12.3}",
            f.era.label, p.alpha_h, p.alpha_a, p.delta_k, f.rmse_flow, f.rmse_level
        )
        .unwrap();
    }
    out
}

/// Variant rows with pre- and post-era cells side by side.
pub fn render_variant_matrix(m: &VariantMatrix) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:<14} | {:>10} {:>11} {:>11} {:>10} {:>11} | {:>10} {:>11} {:>11} {:>10} {:>11}",
        "variant",
        "aH_pre",
        "aA_pre",
        "dK_pre",
        "rmse_pre",
        "level_pre",
        "aH_post",
        "aA_post",
        "dK_post",
        "rmse_post",
        "level_post"
    )
    .unwrap();
    let cell = |r: Option<&FitResult>, err: Option<&String>| match (r, err) {
        (Some(f), _) => {
            let p = f.flow_params;
            format!(
                "{:>10.6} {:>11.4e} {:>11.4e} {:>10.2} {:>11.2}",
                p.alpha_h, p.alpha_a, p.delta_k, f.rmse_flow, f.rmse_level
            )
        }
        (None, Some(e)) => format!("{:<57}", format!("failed: {}", e.chars().take(49).collect::<String>())),
        (None, None) => format!("{:<57}", "n/a"),
    };
    for row in &m.rows {
        writeln!(
            out,
            "{:<14} | {} | {}",
            row.variant,
            cell(row.pre.result.as_ref(), row.pre.error.as_ref()),
            cell(row.post.result.as_ref(), row.post.error.as_ref())
        )
        .unwrap();
    }
    match (&m.joint, &m.joint_error) {
        (Some(j), _) => {
            writeln!(out, "{:<14} | {} | {}", "joint_delta_K", cell(Some(&j.pre), None), cell(Some(&j.post), None))
                .unwrap()
        }
        (None, e) => writeln!(out, "{:<14} | {}", "joint_delta_K", cell(None, e.as_ref())).unwrap(),
    }
    out
}
