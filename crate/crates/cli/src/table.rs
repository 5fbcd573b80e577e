//! Text rendering of classification rows, verification reports and
//! structure checks. The classification table is golden-file tested, so
//! its layout is part of the CLI contract.

use genbundle_core::verify::{StructureCheck, Tolerances, VerifyReport};
use genbundle_core::z2::{Parallelizable, SwClassification};

const CLASSIFY_WIDTHS: [usize; 6] = [4, 10, 8, 10, 17, 9];

fn classify_row(cells: [&str; 6]) -> String {
    format!(
        "{:>w0$} | {:<w1$} | {:<w2$} | {:<w3$} | {:<w4$} | {}\n",
        cells[0],
        cells[1],
        cells[2],
        cells[3],
        cells[4],
        cells[5],
        w0 = CLASSIFY_WIDTHS[0],
        w1 = CLASSIFY_WIDTHS[1],
        w2 = CLASSIFY_WIDTHS[2],
        w3 = CLASSIFY_WIDTHS[3],
        w4 = CLASSIFY_WIDTHS[4],
    )
}

/// Triviality facts per dimension, one row per n.
pub fn classification_table(rows: &[SwClassification]) -> String {
    let mut out = classify_row([
        "n",
        "S^n: TM",
        "S^n: TTM",
        "RP^n: TM",
        "RP^n: obstruction",
        "RP^n: TTM",
    ]);
    let mut separator = String::new();
    for (i, w) in CLASSIFY_WIDTHS.iter().enumerate() {
        if i > 0 {
            separator.push('+');
        }
        let pad = if i == 0 { w + 1 } else { w + 2 };
        separator.push_str(&"-".repeat(pad));
    }
    out.push_str(&separator);
    out.push('\n');
    for row in rows {
        let n = row.n.to_string();
        let s_tm = trivial_word(row.sphere_tangent_trivial);
        let s_ttm = trivial_word(row.sphere_gen_trivial);
        let rp_tm = match row.parallelizable_known {
            Parallelizable::Yes => "trivial",
            Parallelizable::No => "nontrivial",
            Parallelizable::NotDecided => "undecided",
        };
        let obstruction = if row.obstruction_trivial {
            "zero"
        } else {
            "NONZERO"
        };
        let rp_ttm = match row.parallelizable_known {
            // Parallelizable implies a trivial generalized tangent bundle.
            Parallelizable::Yes => "trivial",
            // A nonzero class certifies non-triviality.
            _ if !row.obstruction_trivial => "nontrivial",
            // Vanishing obstruction alone decides nothing.
            _ => "undecided",
        };
        out.push_str(&classify_row([&n, s_tm, s_ttm, rp_tm, obstruction, rp_ttm]));
    }
    out
}

fn trivial_word(trivial: bool) -> &'static str {
    if trivial {
        "trivial"
    } else {
        "nontrivial"
    }
}

/// Pass/fail summary of verification reports.
pub fn report_table(reports: &[VerifyReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:>8} {:>12} {:>12} {:>12} {:>12} {:>12}  {}\n",
        "frame", "samples", "min det", "min rcond", "overlap", "identity", "agreement", "result"
    ));
    for r in reports {
        out.push_str(&format!(
            "{:<10} {:>8} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e}  {}\n",
            r.frame,
            r.samples,
            r.min_gram_det,
            r.min_rcond,
            r.max_overlap_residual,
            r.max_identity_residual,
            r.max_agreement_residual,
            if r.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}

/// Residual block for one structure check.
pub fn structure_block(check: &StructureCheck, tolerances: &Tolerances, pass: bool) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} [{}]\n",
        check.name,
        if pass { "PASS" } else { "FAIL" }
    ));
    out.push_str(&format!(
        "  involution residual   {:>12.4e}  (tol {:.0e})\n",
        check.identity_residual, tolerances.op_tol
    ));
    out.push_str(&format!(
        "  G0 symmetry residual  {:>12.4e}  ({})\n",
        check.symmetry_residual,
        if check.symmetry_gated {
            format!("tol {:.0e}", tolerances.op_tol)
        } else {
            "informational".to_string()
        }
    ));
    out.push_str(&format!(
        "  G0 skew residual      {:>12.4e}  (informational; O(1) marks a weak structure)\n",
        check.skew_residual
    ));
    if let Some(agreement) = check.agreement_residual {
        out.push_str(&format!(
            "  frame-vs-metric       {:>12.4e}  ({})\n",
            agreement,
            if check.agreement_gated {
                format!("tol {:.0e}", tolerances.agreement_tol)
            } else {
                "informational; pairing differs from the metric form".to_string()
            }
        ));
    }
    if let Some(ok) = check.eigen_rank_ok {
        out.push_str(&format!(
            "  eigen ranks (+1/-1)   {:>12}  (each must equal the dimension)\n",
            if ok { "ok" } else { "WRONG" }
        ));
    }
    out
}
