//! CSV, Markdown and SVG renderings of experiment results. Every function
//! here is pure: equal inputs give byte-equal output.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rolebench_core::probing::{column_order, AconfRecord, CellReport};
use rolebench_core::{Frame, Role, Voice};

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for r in rows {
        w.write_record(&r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("writing to memory")).expect("csv of strings is UTF-8")
}

pub fn records_csv(records: &[AconfRecord]) -> String {
    csv_string(
        &["sentence_id", "frame", "voice", "verb", "role", "position", "aconf", "saturated", "entropy"],
        records.iter().map(|r| {
            vec![
                r.sentence_id.to_string(),
                r.frame.to_string(),
                r.voice.to_string(),
                r.verb.clone(),
                r.role.to_string(),
                r.position.to_string(),
                r.aconf.to_string(),
                r.saturated.to_string(),
                r.entropy.to_string(),
            ]
        }),
    )
}

pub fn cells_csv(cells: &[CellReport]) -> String {
    csv_string(
        &[
            "frame",
            "voice",
            "verb",
            "role",
            "n",
            "mean_aconf",
            "mean_entropy",
            "t_aconf",
            "df_aconf",
            "p_aconf",
            "t_entropy",
            "df_entropy",
            "p_entropy",
        ],
        cells.iter().map(|c| {
            vec![
                c.frame.to_string(),
                c.voice.to_string(),
                c.verb.clone(),
                c.role.to_string(),
                c.n.to_string(),
                c.mean_aconf.to_string(),
                c.mean_entropy.to_string(),
                c.welch_aconf.t.to_string(),
                c.welch_aconf.df.to_string(),
                c.welch_aconf.p.to_string(),
                c.welch_entropy.t.to_string(),
                c.welch_entropy.df.to_string(),
                c.welch_entropy.p.to_string(),
            ]
        }),
    )
}

fn p_value(p: f64) -> String {
    if p < 1e-3 {
        format!("{p:.1e}")
    } else {
        format!("{p:.3}")
    }
}

pub fn cells_markdown(cells: &[CellReport]) -> String {
    let mut out = String::from(
        "| frame | voice | role | n | mean aconf | t | p | mean entropy | t | p |\n\
         |---|---|---|---:|---:|---:|---:|---:|---:|---:|\n",
    );
    for c in cells {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {} | {:.3} | {:.2} | {} | {:.3} | {:.2} | {} |",
            c.frame,
            c.voice,
            c.role,
            c.n,
            c.mean_aconf,
            c.welch_aconf.t,
            p_value(c.welch_aconf.p),
            c.mean_entropy,
            c.welch_entropy.t,
            p_value(c.welch_entropy.p),
        );
    }
    out
}

/// Run-averaged accuracies for one evaluation verb: one row per training
/// regimen, one column per frame × voice × role.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyTable {
    pub verb: String,
    pub rows: Vec<(Frame, BTreeMap<(Frame, Voice, Role), f64>)>,
}

impl AccuracyTable {
    pub fn get(&self, regimen: Frame, cell: (Frame, Voice, Role)) -> Option<f64> {
        self.rows.iter().find(|(r, _)| *r == regimen).and_then(|(_, m)| m.get(&cell).copied())
    }

    pub fn to_csv(&self) -> String {
        csv_string(
            &["training", "verb", "frame", "voice", "role", "accuracy"],
            self.rows.iter().flat_map(|(regimen, cells)| {
                column_order().into_iter().map(move |(f, v, r)| {
                    vec![
                        regimen.to_string(),
                        self.verb.clone(),
                        f.to_string(),
                        v.to_string(),
                        r.to_string(),
                        cells.get(&(f, v, r)).map(f64::to_string).unwrap_or_default(),
                    ]
                })
            }),
        )
    }

    pub fn to_markdown(&self) -> String {
        let cols = column_order();
        let mut out = format!("Evaluation verb: {}\n\n| Training |", self.verb);
        for (f, v, r) in &cols {
            let _ = write!(out, " {f} {v} {r} |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(cols.len()));
        out.push('\n');
        for (regimen, cells) in &self.rows {
            let _ = write!(out, "| {regimen} |");
            for c in &cols {
                match cells.get(c) {
                    Some(a) => {
                        let _ = write!(out, " {a:.1} |");
                    }
                    None => out.push_str(" — |"),
                }
            }
            out.push('\n');
        }
        out
    }
}

pub fn loss_csv(losses: &[(u64, f64)]) -> String {
    csv_string(&["step", "loss"], losses.iter().map(|(s, l)| vec![s.to_string(), l.to_string()]))
}

const THEME_COLOR: &str = "#d95f02";
const RECIPIENT_COLOR: &str = "#1b9e77";

/// Overlaid THEME and RECIPIENT histograms with a dashed line at each
/// role's mean.
pub fn histogram_svg(title: &str, x_label: &str, theme: &[f64], recipient: &[f64], bins: usize) -> String {
    let (w, h) = (480.0, 300.0);
    let (left, right, top, bottom) = (50.0, 20.0, 30.0, 45.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let all = theme.iter().chain(recipient).copied().filter(|x| x.is_finite());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        (lo, hi) = (-1.0, 1.0);
    }
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let count = |xs: &[f64]| {
        let mut c = vec![0usize; bins];
        for &x in xs.iter().filter(|x| x.is_finite()) {
            c[(((x - lo) / width) as usize).min(bins - 1)] += 1;
        }
        c
    };
    let (ct, cr) = (count(theme), count(recipient));
    let peak = ct.iter().chain(&cr).copied().max().unwrap_or(0).max(1) as f64;
    let sx = |x: f64| left + (x - lo) / (hi - lo) * pw;
    let sy = |c: f64| top + ph - c / peak * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="18" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, escape(title));
    for (counts, color) in [(&ct, THEME_COLOR), (&cr, RECIPIENT_COLOR)] {
        for (i, &c) in counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            let x0 = sx(lo + i as f64 * width);
            let y = sy(c as f64);
            let _ = writeln!(
                s,
                r#"<rect x="{x0:.2}" y="{y:.2}" width="{:.2}" height="{:.2}" fill="{color}" fill-opacity="0.5"/>"#,
                pw / bins as f64,
                top + ph - y
            );
        }
    }
    for (xs, color, name) in [(theme, THEME_COLOR, "THEME"), (recipient, RECIPIENT_COLOR, "RECIPIENT")] {
        if xs.is_empty() {
            continue;
        }
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        let x = sx(m);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{top}" x2="{x:.2}" y2="{}" stroke="{color}" stroke-width="2" stroke-dasharray="5,3"/>"#,
            top + ph
        );
        let _ = writeln!(s, r#"<title>{name} mean {m:.4}</title>"#);
    }
    let _ =
        writeln!(s, r##"<line x1="{left}" y1="{}" x2="{}" y2="{}" stroke="#333"/>"##, top + ph, left + pw, top + ph);
    let _ = writeln!(s, r##"<line x1="{left}" y1="{top}" x2="{left}" y2="{}" stroke="#333"/>"##, top + ph);
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{v:.2}</text>"#, sx(v), top + ph + 14.0);
    }
    let _ = writeln!(s, r#"<text x="{left}" y="{}" text-anchor="end">{}</text>"#, top + 4.0, peak as usize);
    let _ =
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 8.0, escape(x_label));
    for (i, (name, color)) in [("THEME", THEME_COLOR), ("RECIPIENT", RECIPIENT_COLOR)].iter().enumerate() {
        let y = top + 6.0 + 14.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}" fill-opacity="0.5"/><text x="{}" y="{}">{name}</text>"#,
            left + pw - 90.0,
            y,
            left + pw - 75.0,
            y + 9.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
