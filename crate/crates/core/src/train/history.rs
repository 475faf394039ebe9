//! Per-epoch metrics and their CSV / SVG exports.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::metrics::ConfusionMatrix;
use crate::error::{Error, Result};

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch of the saved (best validation accuracy) weights.
    pub best_epoch: Option<usize>,
    /// Validation confusion matrix of the best epoch.
    pub confusion: ConfusionMatrix,
}

impl TrainingHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.best_epoch
            .and_then(|e| self.epochs.iter().find(|r| r.epoch == e))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HISTORY_HEADER);
        out.push('\n');
        for r in &self.epochs {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch, r.train_loss, r.train_acc, r.val_loss, r.val_acc
            );
        }
        out
    }

    /// Parses the CSV produced by [`TrainingHistory::to_csv`].
    pub fn records_from_csv(text: &str) -> Result<Vec<EpochRecord>> {
        let mut lines = text.lines();
        if lines.next() != Some(HISTORY_HEADER) {
            return Err(Error::InvalidConfig("history CSV header mismatch".into()));
        }
        lines
            .filter(|l| !l.is_empty())
            .map(|line| {
                let f: Vec<&str> = line.split(',').collect();
                let bad = || Error::InvalidConfig(format!("bad history row {line:?}"));
                if f.len() != 5 {
                    return Err(bad());
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
                Ok(EpochRecord {
                    epoch: f[0].parse().map_err(|_| bad())?,
                    train_loss: num(f[1])?,
                    train_acc: num(f[2])?,
                    val_loss: num(f[3])?,
                    val_acc: num(f[4])?,
                })
            })
            .collect()
    }

    pub fn to_svg(&self) -> String {
        render_svg(&self.epochs)
    }

    pub fn export(&self, csv_path: &Path, svg_path: &Path) -> Result<()> {
        if self.epochs.is_empty() {
            return Err(Error::InvalidConfig("cannot export an empty history".into()));
        }
        for (path, body) in [(csv_path, self.to_csv()), (svg_path, self.to_svg())] {
            fs::write(path, body).map_err(|source| Error::OutputUnwritable {
                path: path.to_path_buf(),
                source,
            })?;
        }
        Ok(())
    }
}

const WIDTH: f64 = 640.0;
const PANEL_H: f64 = 220.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 30.0;
const GAP: f64 = 50.0;

struct Series<'a> {
    name: &'a str,
    color: &'a str,
    dashed: bool,
    values: Vec<f64>,
}

fn render_svg(records: &[EpochRecord]) -> String {
    let height = MARGIN_T * 2.0 + PANEL_H * 2.0 + GAP;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let epochs: Vec<f64> = records.iter().map(|r| r.epoch as f64).collect();
    let pick = |f: fn(&EpochRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let loss = [
        Series { name: "train loss", color: "#1f77b4", dashed: false, values: pick(|r| r.train_loss) },
        Series { name: "val loss", color: "#ff7f0e", dashed: true, values: pick(|r| r.val_loss) },
    ];
    let acc = [
        Series { name: "train acc", color: "#2ca02c", dashed: false, values: pick(|r| r.train_acc) },
        Series { name: "val acc", color: "#d62728", dashed: true, values: pick(|r| r.val_acc) },
    ];
    panel(&mut svg, MARGIN_T, "Loss", &epochs, &loss);
    panel(&mut svg, MARGIN_T + PANEL_H + GAP, "Accuracy", &epochs, &acc);
    svg.push_str("</svg>\n");
    svg
}

/// `(lo, hi)` with a non-zero span; single values get a unit-wide window.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    });
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

fn panel(svg: &mut String, top: f64, title: &str, epochs: &[f64], series: &[Series<'_>]) {
    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let (x_lo, x_hi) = range(epochs.iter().copied());
    let (y_lo, y_hi) = range(series.iter().flat_map(|s| s.values.iter().copied()));
    let sx = |x: f64| MARGIN_L + (x - x_lo) / (x_hi - x_lo) * plot_w;
    let sy = |y: f64| top + PANEL_H - (y - y_lo) / (y_hi - y_lo) * PANEL_H;

    let _ = writeln!(
        svg,
        r#"<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{title}</text>"#,
        MARGIN_L + plot_w / 2.0,
        top - 8.0
    );
    for (value, y) in [(y_hi, top), (y_lo, top + PANEL_H)] {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.1}" text-anchor="end">{value:.3}</text>"#,
            MARGIN_L - 5.0,
            y + 4.0
        );
    }
    for (value, x) in [(x_lo, MARGIN_L), (x_hi, MARGIN_L + plot_w)] {
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{value}</text>"#,
            top + PANEL_H + 15.0
        );
    }
    for (i, s) in series.iter().enumerate() {
        let points: Vec<String> = epochs
            .iter()
            .zip(&s.values)
            .map(|(&x, &y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6,3""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{}"/>"#,
            s.color,
            points.join(" ")
        );
        for p in &points {
            let (x, y) = p.split_once(',').expect("formatted as x,y");
            let _ = writeln!(svg, r#"<circle cx="{x}" cy="{y}" r="2" fill="{}"/>"#, s.color);
        }
        let ly = top + 15.0 + 18.0 * i as f64;
        let lx = WIDTH - MARGIN_R + 10.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="2"{dash}/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            s.color,
            lx + 25.0,
            ly + 4.0,
            s.name
        );
    }
}
