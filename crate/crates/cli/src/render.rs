//! SVG figures: dashed trajectories, solid separatrices, filled turning points,
//! hollow poles, and a colour-mapped raster for transit-time grids.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use cplxdyn_core::{Region64, C64};

use crate::error::AppError;
use crate::scenario::Cx;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Trajectory,
    Separatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<C64>,
}

/// On-disk form of a transit-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFile {
    pub region: [f64; 4],
    pub resolution: [usize; 2],
    /// Row-major from the lowest `Im x`; `null` where the mirror point was not reached.
    pub times: Vec<Option<f64>>,
    pub boundary: Vec<Cx>,
}

/// Everything a figure is drawn from.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bundle {
    pub turning_points: Vec<C64>,
    pub poles: Vec<C64>,
    pub curves: Vec<Curve>,
    pub grids: Vec<GridFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("no trajectory or grid data intersects the plot region")]
    EmptyPlot,
}

pub const DEFAULT_WIDTH: u32 = 640;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 16.0;
const MARGIN_BOTTOM: f64 = 44.0;
const UNREACHED: &str = "#c8c8c8";

struct Frame {
    region: Region64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new(region: Region64, width: u32) -> Self {
        let w = f64::from(width.max(64));
        let aspect = (region.im_max - region.im_min) / (region.re_max - region.re_min);
        let h = (w * aspect).clamp(64.0, 4.0 * w);
        Self { region, w, h }
    }

    fn px(&self, z: C64) -> (f64, f64) {
        let r = &self.region;
        let u = (z.re - r.re_min) / (r.re_max - r.re_min);
        let v = (z.im - r.im_min) / (r.im_max - r.im_min);
        (MARGIN_LEFT + u * self.w, MARGIN_TOP + (1.0 - v) * self.h)
    }
}

fn overlaps(a: &Region64, g: &GridFile) -> bool {
    let [re0, re1, im0, im1] = g.region;
    re0 < a.re_max && re1 > a.re_min && im0 < a.im_max && im1 > a.im_min
}

/// Runs of consecutive points that are inside the region, each extended by the
/// neighbours on either side so the clip path trims at the frame edge.
fn visible_runs(points: &[C64], region: &Region64) -> Vec<Vec<C64>> {
    let inside: Vec<bool> = points.iter().map(|z| region.contains(*z)).collect();
    let mut runs = Vec::new();
    let mut cur: Vec<C64> = Vec::new();
    for (k, z) in points.iter().enumerate() {
        let near = inside[k] || (k > 0 && inside[k - 1]) || inside.get(k + 1).copied().unwrap_or(false);
        if near {
            cur.push(*z);
        } else if !cur.is_empty() {
            runs.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        runs.push(cur);
    }
    runs.retain(|r| r.len() >= 2);
    runs
}

/// Cool-to-warm ramp over `s` in `[0, 1]`.
fn colour(s: f64) -> String {
    let s = s.clamp(0.0, 1.0);
    let stops = [(0.0, [49.0, 54.0, 149.0]), (0.5, [255.0, 255.0, 191.0]), (1.0, [165.0, 0.0, 38.0])];
    let k = usize::from(s > 0.5);
    let (s0, c0) = stops[k];
    let (s1, c1) = stops[k + 1];
    let f = (s - s0) / (s1 - s0);
    let mix = |j: usize| (c0[j] + f * (c1[j] - c0[j])).round() as u8;
    format!("#{:02x}{:02x}{:02x}", mix(0), mix(1), mix(2))
}

fn nice_step(span: f64) -> f64 {
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{:.3}", v);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

pub fn render_svg(bundle: &Bundle, region: &Region64, width: u32) -> Result<String, RenderError> {
    let runs: Vec<(CurveKind, Vec<Vec<C64>>)> = bundle
        .curves
        .iter()
        .map(|c| (c.kind, visible_runs(&c.points, region)))
        .filter(|(_, r)| !r.is_empty())
        .collect();
    let grids: Vec<&GridFile> = bundle.grids.iter().filter(|g| overlaps(region, g)).collect();
    if runs.is_empty() && grids.is_empty() {
        return Err(RenderError::EmptyPlot);
    }

    let fr = Frame::new(*region, width);
    let total_w = MARGIN_LEFT + fr.w + MARGIN_RIGHT;
    let total_h = MARGIN_TOP + fr.h + MARGIN_BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0}" height="{total_h:.0}" viewBox="0 0 {total_w:.0} {total_h:.0}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{:.2}" height="{:.2}"/></clipPath></defs>"#,
        fr.w, fr.h
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let _ = writeln!(s, r#"<g clip-path="url(#plot)">"#);
    for g in &grids {
        draw_grid(&mut s, &fr, g);
    }
    // coordinate axes through the origin
    let (ox, oy) = fr.px(C64::new(0.0, 0.0));
    if region.re_min < 0.0 && region.re_max > 0.0 {
        let _ = writeln!(s, r##"<line class="axis" x1="{ox:.2}" y1="{MARGIN_TOP}" x2="{ox:.2}" y2="{:.2}" stroke="#999" stroke-width="0.5"/>"##, MARGIN_TOP + fr.h);
    }
    if region.im_min < 0.0 && region.im_max > 0.0 {
        let _ = writeln!(s, r##"<line class="axis" x1="{MARGIN_LEFT}" y1="{oy:.2}" x2="{:.2}" y2="{oy:.2}" stroke="#999" stroke-width="0.5"/>"##, MARGIN_LEFT + fr.w);
    }
    for (kind, parts) in &runs {
        let mut d = String::new();
        for run in parts {
            for (k, z) in run.iter().enumerate() {
                let (x, y) = fr.px(*z);
                let _ = write!(d, "{}{x:.2} {y:.2} ", if k == 0 { "M" } else { "L" });
            }
        }
        let d = d.trim_end();
        match kind {
            CurveKind::Trajectory => {
                let _ = writeln!(s, r##"<path class="trajectory" d="{d}" fill="none" stroke="#1f3a93" stroke-width="1" stroke-dasharray="5 3"/>"##);
            }
            CurveKind::Separatrix => {
                let _ = writeln!(s, r##"<path class="separatrix" d="{d}" fill="none" stroke="#000" stroke-width="1.5"/>"##);
            }
        }
    }
    let _ = writeln!(s, "</g>");

    for z in bundle.poles.iter().filter(|z| region.contains(**z)) {
        let (x, y) = fr.px(*z);
        let _ = writeln!(s, r##"<circle class="pole" cx="{x:.2}" cy="{y:.2}" r="5" fill="none" stroke="#000" stroke-width="1.5"/>"##);
    }
    for z in bundle.turning_points.iter().filter(|z| region.contains(**z)) {
        let (x, y) = fr.px(*z);
        let _ = writeln!(s, r##"<circle class="turning-point" cx="{x:.2}" cy="{y:.2}" r="4" fill="#000"/>"##);
    }

    draw_frame(&mut s, &fr);
    s.push_str("</svg>\n");
    Ok(s)
}

fn draw_grid(s: &mut String, fr: &Frame, g: &GridFile) {
    let [nx, ny] = g.resolution;
    let [re0, re1, im0, im1] = g.region;
    let (dx, dy) = ((re1 - re0) / nx as f64, (im1 - im0) / ny as f64);
    let reached = g.times.iter().flatten().copied();
    let (lo, hi) = reached.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), t| (a.min(t), b.max(t)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    for j in 0..ny {
        for i in 0..nx {
            let corner = C64::new(re0 + i as f64 * dx, im0 + (j + 1) as f64 * dy);
            let (x0, y0) = fr.px(corner);
            let (x1, y1) = fr.px(corner + C64::new(dx, -dy));
            let fill = match g.times[j * nx + i] {
                Some(t) => colour((t - lo) / span),
                None => UNREACHED.to_string(),
            };
            let _ = writeln!(
                s,
                r#"<rect class="cell" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                x1 - x0,
                y1 - y0
            );
        }
    }
    for b in &g.boundary {
        let (x, y) = fr.px(C64::from(*b));
        let _ = writeln!(s, r##"<circle class="boundary" cx="{x:.2}" cy="{y:.2}" r="1.5" fill="#000"/>"##);
    }
}

fn draw_frame(s: &mut String, fr: &Frame) {
    let r = &fr.region;
    let _ = writeln!(
        s,
        r##"<rect class="frame" x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{:.2}" height="{:.2}" fill="none" stroke="#000"/>"##,
        fr.w, fr.h
    );
    let bottom = MARGIN_TOP + fr.h;
    for v in ticks(r.re_min, r.re_max) {
        let (x, _) = fr.px(C64::new(v, r.im_min));
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{bottom:.2}" x2="{x:.2}" y2="{:.2}" stroke="#000"/>"##, bottom + 4.0);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, bottom + 17.0, fmt_tick(v));
    }
    for v in ticks(r.im_min, r.im_max) {
        let (_, y) = fr.px(C64::new(r.re_min, v));
        let _ = writeln!(s, r##"<line x1="{:.2}" y1="{y:.2}" x2="{MARGIN_LEFT}" y2="{y:.2}" stroke="#000"/>"##, MARGIN_LEFT - 4.0);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, MARGIN_LEFT - 7.0, y + 4.0, fmt_tick(v));
    }
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="{:.2}" y="{:.2}" text-anchor="middle">Re x</text>"#,
        MARGIN_LEFT + fr.w / 2.0,
        bottom + 36.0
    );
    let _ = writeln!(
        s,
        r#"<text class="axis-label" x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">Im x</text>"#,
        MARGIN_TOP + fr.h / 2.0,
        MARGIN_TOP + fr.h / 2.0
    );
}

/// Reads a run directory back into a [`Bundle`].
pub fn load_bundle(dir: &Path) -> Result<Bundle, AppError> {
    let io = |p: &Path, e: &dyn std::fmt::Display| AppError::Io(format!("{}: {e}", p.display()));
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| io(&path, &e))?;
    let m: serde_json::Value = serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))?;
    let bad = |what: &str| AppError::Config(format!("{}: malformed {what}", path.display()));
    let cx = |v: &serde_json::Value| -> Option<C64> { Some(C64::new(v.get("re")?.as_f64()?, v.get("im")?.as_f64()?)) };
    let locations = |key: &str| -> Result<Vec<C64>, AppError> {
        m.get(key)
            .and_then(|v| v.as_array())
            .ok_or_else(|| bad(key))?
            .iter()
            .map(|e| e.get("location").and_then(cx).ok_or_else(|| bad(key)))
            .collect()
    };
    let mut bundle = Bundle { turning_points: locations("turning_points")?, poles: locations("poles")?, ..Bundle::default() };

    for task in m.get("tasks").and_then(|t| t.as_array()).ok_or_else(|| bad("tasks"))? {
        let kind = task.get("kind").and_then(|k| k.as_str()).ok_or_else(|| bad("task kind"))?;
        let files = task
            .get("items")
            .and_then(|i| i.as_array())
            .into_iter()
            .flatten()
            .filter_map(|item| item.get("file").and_then(|f| f.as_str()));
        for file in files {
            let p = dir.join(file);
            match kind {
                "trajectory" | "separatrix" => {
                    let kind = if kind == "trajectory" { CurveKind::Trajectory } else { CurveKind::Separatrix };
                    bundle.curves.push(Curve { kind, points: read_curve(&p)? });
                }
                "transit-grid" => {
                    let text = std::fs::read_to_string(&p).map_err(|e| io(&p, &e))?;
                    let g: GridFile = serde_json::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", p.display())))?;
                    bundle.grids.push(g);
                }
                _ => {}
            }
        }
    }
    Ok(bundle)
}

fn read_curve(path: &Path) -> Result<Vec<C64>, AppError> {
    let bad = |e: &dyn std::fmt::Display| AppError::Config(format!("{}: {e}", path.display()));
    let mut rd = csv::Reader::from_path(path).map_err(|e| AppError::Io(format!("{}: {e}", path.display())))?;
    let headers = rd.headers().map_err(|e| bad(&e))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| bad(&format!("missing column {name}")));
    let (ire, iim) = (col("re_x")?, col("im_x")?);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| bad(&e))?;
        let num = |k: usize| rec.get(k).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad(&"non-numeric coordinate"));
        out.push(C64::new(num(ire)?, num(iim)?));
    }
    Ok(out)
}
