//! Tab-separated metric reports: one row per image plus an `average`
//! row, so a reader gets both the distribution and the headline number.
//! Values are printed with fixed precision to keep reruns byte-stable.

use std::path::Path;

use crate::io::{atomic_write, IoError};
use crate::metrics::{ClassMetrics, SegMetrics};

pub fn render_seg_report(rows: &[(String, SegMetrics)], average: &SegMetrics) -> String {
    let mut out = String::from("image\tdice\tdice2\taji\tdq\tsq\tpq\n");
    let mut push = |name: &str, m: &SegMetrics| {
        out.push_str(&format!(
            "{name}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
            m.dice, m.dice2, m.aji, m.dq, m.sq, m.pq
        ));
    };
    for (name, m) in rows {
        push(name, m);
    }
    push("average", average);
    out
}

pub fn write_seg_report(
    path: &Path,
    rows: &[(String, SegMetrics)],
    average: &SegMetrics,
) -> Result<(), IoError> {
    atomic_write(path, render_seg_report(rows, average).as_bytes())
}

pub fn render_class_report(m: &ClassMetrics) -> String {
    let mut out = String::from("metric\tvalue\n");
    out.push_str(&format!("tp_d\t{}\n", m.tp_d));
    out.push_str(&format!("fp_d\t{}\n", m.fp_d));
    out.push_str(&format!("fn_d\t{}\n", m.fn_d));
    out.push_str(&format!("unlabelled_matched\t{}\n", m.unlabelled_matched));
    out.push_str(&format!("f_d\t{:.6}\n", m.f_d));
    for (&type_id, &score) in &m.per_type {
        out.push_str(&format!("f_type_{type_id}\t{score:.6}\n"));
    }
    for (&type_id, counts) in &m.type_counts {
        out.push_str(&format!(
            "counts_type_{type_id}\ttp={} tn={} fp={} fn={}\n",
            counts.tp_c, counts.tn_c, counts.fp_c, counts.fn_c
        ));
    }
    out
}

pub fn write_class_report(path: &Path, metrics: &ClassMetrics) -> Result<(), IoError> {
    atomic_write(path, render_class_report(metrics).as_bytes())
}
