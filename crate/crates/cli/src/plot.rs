//! The `plot` command: per (source, r.f) pair, a scatter CSV and a minimal
//! standalone SVG, mirroring the source-vs-r.f panels used to inspect
//! generated features. The data files are never jittered; `--jitter` only
//! displaces the rendered SVG points so that overlapping rows stay visible.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use redfeat::dataset::Dataset;
use redfeat::mi::{baseline_psi, estimate_mi};
use redfeat::seed::derive;
use redfeat::{Error, Result};

use crate::commands::{print_json_value, ProvenanceFile, SCHEMA_VERSION};
use crate::config::{RunConfig, PLOT_JITTER_INDEX};

const WIDTH: f64 = 420.0;
const HEIGHT: f64 = 320.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 16.0;
const MARGIN_BOTTOM: f64 = 44.0;
/// Rendering-only jitter amplitude, as a fraction of the plot-area span.
const JITTER_FRACTION: f64 = 0.008;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

pub fn cmd_plot(
    data: &Dataset,
    cfg: &RunConfig,
    input: &Path,
    out_dir: Option<&Path>,
    jitter: bool,
    dump_trees: bool,
    json: bool,
) -> Result<()> {
    let prov_path = input.with_extension("provenance.json");
    if !prov_path.exists() {
        return Err(Error::DatasetFormat {
            path: prov_path.display().to_string(),
            msg: "missing provenance file (expected next to the augmented CSV)".into(),
        });
    }
    let provenance: ProvenanceFile = serde_json::from_str(&fs::read_to_string(&prov_path)?)?;

    let dir: PathBuf = match out_dir {
        Some(d) => d.to_path_buf(),
        None => {
            let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("plots");
            input.with_file_name(format!("{stem}_plots"))
        }
    };
    fs::create_dir_all(&dir)?;

    // MI labels are recomputed with the estimator that generated the r.fs.
    let est = &provenance.config.evolution.fitness.estimator;
    let mut psi_cache: BTreeMap<&str, f64> = BTreeMap::new();
    let classes = match data.labels() {
        Some(_) => data.classes()?,
        None => Vec::new(),
    };

    let mut pairs = Vec::new();
    for (index, (rf, info)) in provenance.rfs.iter().enumerate() {
        let source = data.column(&info.source)?;
        let rf_col = data.column(rf)?;
        let psi = match psi_cache.get(info.source.as_str()) {
            Some(&v) => v,
            None => {
                let v = baseline_psi(source, est)?;
                psi_cache.insert(info.source.as_str(), v);
                v
            }
        };
        let mi = estimate_mi(source, rf_col, est)? / psi;

        let base = format!("{}_{rf}", info.source);
        let csv_path = dir.join(format!("{base}.csv"));
        fs::write(&csv_path, scatter_csv(data, &info.source, rf)?)?;

        let jitter_seed = jitter.then(|| derive(derive(cfg.seed, PLOT_JITTER_INDEX), index as u64));
        let y_label = format!("{rf} (MI={mi:.2})");
        let svg_path = dir.join(format!("{base}.svg"));
        fs::write(
            &svg_path,
            scatter_svg(
                source.values(),
                rf_col.values(),
                data.labels(),
                &classes,
                &info.source,
                &y_label,
                jitter_seed,
            ),
        )?;

        if dump_trees && !json {
            println!("{rf}: {}", info.sexpr);
        }
        pairs.push(json!({
            "source": info.source,
            "rf": rf,
            "mi": mi,
            "csv": csv_path.display().to_string(),
            "svg": svg_path.display().to_string(),
            "sexpr": if dump_trees { Some(info.sexpr.clone()) } else { None },
        }));
    }

    if json {
        print_json_value(&json!({
            "schema_version": SCHEMA_VERSION,
            "command": "plot",
            "directory": dir.display().to_string(),
            "pairs": pairs,
            "config": provenance.config,
        }));
    } else {
        println!(
            "wrote {} scatter pairs (csv + svg) to {}",
            pairs.len(),
            dir.display()
        );
    }
    Ok(())
}

/// The raw pair data: one row per instance, labels appended when present.
fn scatter_csv(data: &Dataset, source: &str, rf: &str) -> Result<String> {
    let x = data.column(source)?.values();
    let y = data.column(rf)?.values();
    let labels = data.labels();
    let mut out = String::new();
    match labels {
        Some(_) => {
            let _ = writeln!(out, "{source},{rf},{}", data.label_name());
        }
        None => {
            let _ = writeln!(out, "{source},{rf}");
        }
    }
    for i in 0..x.len() {
        match labels {
            Some(l) => {
                let _ = writeln!(out, "{},{},{}", x[i], y[i], l[i]);
            }
            None => {
                let _ = writeln!(out, "{},{}", x[i], y[i]);
            }
        }
    }
    Ok(out)
}

fn esc(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A self-contained SVG scatter plot: axes, range tick labels, axis titles,
/// one circle per instance colored by class.
fn scatter_svg(
    xs: &[f64],
    ys: &[f64],
    labels: Option<&[String]>,
    classes: &[String],
    x_label: &str,
    y_label: &str,
    jitter_seed: Option<u64>,
) -> String {
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let (x_min, x_max) = span(xs);
    let (y_min, y_max) = span(ys);
    let to_px = |v: f64, lo: f64, hi: f64, extent: f64| {
        if hi > lo {
            (v - lo) / (hi - lo) * extent
        } else {
            extent / 2.0
        }
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, "  <desc>{} vs {}</desc>", esc(x_label), esc(y_label));
    let _ = writeln!(
        svg,
        r##"  <rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>"##
    );
    let axis_y = MARGIN_TOP + plot_h;
    let axis_x_end = MARGIN_LEFT + plot_w;
    let _ = writeln!(
        svg,
        r##"  <line x1="{MARGIN_LEFT}" y1="{axis_y}" x2="{axis_x_end}" y2="{axis_y}" stroke="#333333" stroke-width="1"/>"##
    );
    let _ = writeln!(
        svg,
        r##"  <line x1="{MARGIN_LEFT}" y1="{MARGIN_TOP}" x2="{MARGIN_LEFT}" y2="{axis_y}" stroke="#333333" stroke-width="1"/>"##
    );

    // Range tick labels at the axis extremes.
    let tick = |v: f64| format!("{v:.3}");
    let _ = writeln!(
        svg,
        r##"  <text x="{MARGIN_LEFT}" y="{y}" font-size="10" text-anchor="start" fill="#333333">{}</text>"##,
        esc(&tick(x_min)),
        y = axis_y + 14.0
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{axis_x_end}" y="{y}" font-size="10" text-anchor="end" fill="#333333">{}</text>"##,
        esc(&tick(x_max)),
        y = axis_y + 14.0
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{x}" y="{y}" font-size="10" text-anchor="end" fill="#333333">{}</text>"##,
        esc(&tick(y_min)),
        x = MARGIN_LEFT - 6.0,
        y = axis_y + 3.0
    );
    let _ = writeln!(
        svg,
        r##"  <text x="{x}" y="{y}" font-size="10" text-anchor="end" fill="#333333">{}</text>"##,
        esc(&tick(y_max)),
        x = MARGIN_LEFT - 6.0,
        y = MARGIN_TOP + 4.0
    );

    // Axis titles.
    let _ = writeln!(
        svg,
        r##"  <text x="{x}" y="{y}" font-size="12" text-anchor="middle" fill="#111111">{}</text>"##,
        esc(x_label),
        x = MARGIN_LEFT + plot_w / 2.0,
        y = HEIGHT - 10.0
    );
    let _ = writeln!(
        svg,
        r##"  <text x="14" y="{y}" font-size="12" text-anchor="middle" fill="#111111" transform="rotate(-90 14 {y})">{}</text>"##,
        esc(y_label),
        y = MARGIN_TOP + plot_h / 2.0
    );

    let class_index = |label: &str| classes.iter().position(|c| c == label).unwrap_or(0);
    let unit = |seed: u64, i: u64| (derive(seed, i) >> 11) as f64 / (1u64 << 53) as f64;
    for i in 0..xs.len() {
        let (mut dx, mut dy) = (0.0, 0.0);
        if let Some(seed) = jitter_seed {
            dx = (unit(seed, 2 * i as u64) - 0.5) * 2.0 * JITTER_FRACTION * plot_w;
            dy = (unit(seed, 2 * i as u64 + 1) - 0.5) * 2.0 * JITTER_FRACTION * plot_h;
        }
        let cx = MARGIN_LEFT + to_px(xs[i], x_min, x_max, plot_w) + dx;
        let cy = axis_y - to_px(ys[i], y_min, y_max, plot_h) + dy;
        let color = match labels {
            Some(l) => PALETTE[class_index(&l[i]) % PALETTE.len()],
            None => PALETTE[0],
        };
        let _ = writeln!(
            svg,
            r#"  <circle cx="{cx:.2}" cy="{cy:.2}" r="2" fill="{color}" fill-opacity="0.7"/>"#
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn span(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}
