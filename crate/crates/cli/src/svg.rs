//! Plain SVG charts. Output depends only on the plotted numbers.
//!
//! Heatmaps use a 256-step ramp: entry `i` is
//! `(min(255, 3i), clamp(3i - 255, 0, 255), clamp(3i - 510, 0, 255))`,
//! black through red and yellow to white.

use std::f64::consts::PI;
use std::fmt::Write;

use synthprint::profiles::{AngularProfile, FisherProfile, PowerLawFit, ProfileMode, RadialProfile};
use synthprint::RealGrid;

const PLOT_W: f64 = 480.0;
const PLOT_H: f64 = 320.0;
const MARGIN: f64 = 56.0;
const HEATMAP_SIDE: f64 = 512.0;

/// Ramp entry `i`.
pub fn ramp(i: u8) -> [u8; 3] {
    let i = i32::from(i) * 3;
    [i.min(255) as u8, (i - 255).clamp(0, 255) as u8, (i - 510).clamp(0, 255) as u8]
}

fn hex(c: [u8; 3]) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Ramp index of `v` on `[lo, hi]`; values outside are clamped.
fn ramp_index(v: f64, lo: f64, hi: f64) -> u8 {
    if !(hi > lo) || !v.is_finite() {
        return if v.is_finite() && v > lo { 255 } else { 0 };
    }
    ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) as u8
}

fn header(w: f64, h: f64, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    let _ = writeln!(s, r#"<rect width="{w:.0}" height="{h:.0}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="20" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Heatmap of a row-major grid (row 0 at the top) with a color bar.
/// Runs of equal color within a row are merged into one rectangle.
pub fn heatmap(grid: &RealGrid, lo: f64, hi: f64, title: &str, bar_label: &str) -> String {
    let cell = HEATMAP_SIDE / grid.width.max(grid.height) as f64;
    let (gw, gh) = (cell * grid.width as f64, cell * grid.height as f64);
    let (x0, y0) = (20.0, 32.0);
    let mut s = header(gw + 140.0, gh + 52.0, title);
    let _ = writeln!(s, r#"<g shape-rendering="crispEdges">"#);
    for r in 0..grid.height {
        let mut c = 0;
        while c < grid.width {
            let idx = ramp_index(grid.get(r, c), lo, hi);
            let mut end = c + 1;
            while end < grid.width && ramp_index(grid.get(r, end), lo, hi) == idx {
                end += 1;
            }
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x0 + c as f64 * cell,
                y0 + r as f64 * cell,
                (end - c) as f64 * cell,
                cell,
                hex(ramp(idx))
            );
            c = end;
        }
    }
    // Color bar, top = hi.
    let bx = x0 + gw + 16.0;
    let step = gh / 256.0;
    for i in 0..=255u8 {
        let _ = writeln!(
            s,
            r#"<rect x="{bx:.2}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            y0 + (255 - i) as f64 * step,
            step,
            hex(ramp(i))
        );
    }
    let _ = writeln!(s, "</g>");
    let tx = bx + 22.0;
    let _ = writeln!(s, r#"<text x="{tx:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{hi:.3}</text>"#, y0 + 10.0);
    let _ = writeln!(s, r#"<text x="{tx:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{lo:.3}</text>"#, y0 + gh);
    let _ = writeln!(
        s,
        r#"<text x="{tx:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
        y0 + gh / 2.0,
        escape(bar_label)
    );
    s.push_str("</svg>\n");
    s
}

/// `log10` of the DC-centered power spectrum; the color scale spans the
/// positive bins, nonpositive bins take the lowest color.
pub fn power_heatmap(shifted_power: &RealGrid) -> String {
    let logs: Vec<f64> = shifted_power
        .values
        .iter()
        .map(|&v| if v > 0.0 { v.log10() } else { f64::NEG_INFINITY })
        .collect();
    let finite = logs.iter().filter(|v| v.is_finite());
    let lo = finite.clone().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = finite.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
    let grid = RealGrid {
        width: shifted_power.width,
        height: shifted_power.height,
        values: logs,
    };
    heatmap(&grid, lo, hi, "Averaged power spectrum (log10, DC centered)", "log10 P")
}

/// Zero-lag-centered autocorrelation crop. The scale spans every lag except
/// `(0, 0)`, which is clamped to the top color.
pub fn autocorr_heatmap(crop: &RealGrid) -> String {
    let center = (crop.height / 2) * crop.width + crop.width / 2;
    let others = crop.values.iter().enumerate().filter(|(i, _)| *i != center).map(|(_, v)| *v);
    let lo = others.clone().fold(f64::INFINITY, f64::min);
    let hi = others.fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 1.0) };
    heatmap(
        crop,
        lo,
        hi,
        &format!("Averaged autocorrelation, {}x{} lags", crop.width, crop.height),
        "R",
    )
}

struct Axes {
    x: (f64, f64),
    y: (f64, f64),
}

impl Axes {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x.0) / (self.x.1 - self.x.0) * PLOT_W
    }

    fn py(&self, y: f64) -> f64 {
        MARGIN + PLOT_H - (y - self.y.0) / (self.y.1 - self.y.0) * PLOT_H
    }

    fn frame(&self, s: &mut String, xlabel: &str, ylabel: &str) {
        let _ = writeln!(
            s,
            r#"<rect x="{MARGIN}" y="{MARGIN}" width="{PLOT_W}" height="{PLOT_H}" fill="none" stroke="black"/>"#
        );
        for k in 0..=4 {
            let t = k as f64 / 4.0;
            let xv = self.x.0 + t * (self.x.1 - self.x.0);
            let yv = self.y.0 + t * (self.y.1 - self.y.0);
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{xv:.3}</text>"#,
                self.px(xv),
                MARGIN + PLOT_H + 14.0
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{yv:.3}</text>"#,
                MARGIN - 4.0,
                self.py(yv) + 3.0
            );
        }
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            MARGIN + PLOT_W / 2.0,
            MARGIN + PLOT_H + 32.0,
            escape(xlabel)
        );
        let _ = writeln!(
            s,
            r#"<text x="14" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
            MARGIN + PLOT_H / 2.0,
            MARGIN + PLOT_H / 2.0,
            escape(ylabel)
        );
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return None;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    Some((lo - pad, hi + pad))
}

fn polyline(s: &mut String, pts: &[(f64, f64)], color: &str, dashed: bool) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = if dashed { r#" stroke-dasharray="6 4""# } else { "" };
    let _ = writeln!(
        s,
        r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>"#,
        coords.join(" ")
    );
}

fn empty_plot(title: &str) -> String {
    let mut s = header(PLOT_W + 2.0 * MARGIN, PLOT_H + 2.0 * MARGIN, title);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" text-anchor="middle">no defined values</text>"#,
        MARGIN + PLOT_W / 2.0,
        MARGIN + PLOT_H / 2.0
    );
    s.push_str("</svg>\n");
    s
}

/// Log-log radial spectrum with the fitted power law (dashed).
pub fn radial_plot(profile: &RadialProfile, fit: Option<&PowerLawFit>) -> String {
    let title = "Radial spectrum";
    let pts: Vec<(f64, f64)> = profile
        .centers
        .iter()
        .zip(&profile.mean)
        .filter_map(|(&r, m)| m.filter(|v| *v > 0.0).map(|v| (r.log10(), v.log10())))
        .collect();
    let Some(ybounds) = bounds(pts.iter().map(|p| p.1)) else {
        return empty_plot(title);
    };
    let xbounds = bounds(pts.iter().map(|p| p.0)).expect("non-empty");
    let axes = Axes { x: xbounds, y: ybounds };
    let mut s = header(PLOT_W + 2.0 * MARGIN, PLOT_H + 2.0 * MARGIN, title);
    let ylabel = match profile.mode {
        ProfileMode::Magnitude => "log10 mean |X|",
        ProfileMode::Power => "log10 mean |X|^2",
    };
    axes.frame(&mut s, "log10 rho", ylabel);
    let screen: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (axes.px(x), axes.py(y))).collect();
    polyline(&mut s, &screen, "#1f4e9c", false);
    if let Some(fit) = fit {
        // ln m = intercept + slope ln rho, slope = -alpha (power) or -alpha/2 (magnitude).
        let slope = match profile.mode {
            ProfileMode::Power => -fit.alpha,
            ProfileMode::Magnitude => -fit.alpha / 2.0,
        };
        let line: Vec<(f64, f64)> = [fit.rho_min, fit.rho_max]
            .iter()
            .map(|&r| {
                let y = (fit.intercept + slope * r.ln()) / std::f64::consts::LN_10;
                (axes.px(r.log10()), axes.py(y))
            })
            .collect();
        polyline(&mut s, &line, "#c0392b", true);
        let _ = writeln!(
            s,
            r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12" fill="#c0392b">fit: alpha = {:.3}</text>"##,
            MARGIN + 8.0,
            MARGIN + 16.0,
            fit.alpha
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Angular spectrum over `[0, pi)`.
pub fn angular_plot(profile: &AngularProfile) -> String {
    let title = "Angular spectrum";
    let pts: Vec<(f64, f64)> = profile
        .centers
        .iter()
        .zip(&profile.mean)
        .filter_map(|(&t, m)| m.map(|v| (t, v)))
        .collect();
    let Some(ybounds) = bounds(pts.iter().map(|p| p.1)) else {
        return empty_plot(title);
    };
    let axes = Axes { x: (0.0, PI), y: ybounds };
    let mut s = header(PLOT_W + 2.0 * MARGIN, PLOT_H + 2.0 * MARGIN, title);
    axes.frame(&mut s, "theta (rad)", "mean |X|");
    let screen: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (axes.px(x), axes.py(y))).collect();
    polyline(&mut s, &screen, "#1f4e9c", false);
    for &(x, y) in &screen {
        let _ = writeln!(s, r##"<circle cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#1f4e9c"/>"##);
    }
    s.push_str("</svg>\n");
    s
}

/// Polar plot of `1 + F(theta)` over the full circle, with the reference
/// corpus drawn as the unit circle.
pub fn fisher_polar(profile: &FisherProfile) -> String {
    let title = format!("Fisher profile: {} vs {}", profile.subject, profile.reference);
    let radii: Vec<Option<f64>> = profile.values.iter().map(|v| v.map(|f| (1.0 + f).max(0.0))).collect();
    let rmax = radii.iter().flatten().fold(1.0f64, |a, &b| a.max(b)) * 1.1;
    let side = 2.0 * (PLOT_H / 2.0) + 2.0 * MARGIN;
    let (cx, cy) = (side / 2.0, side / 2.0 + 10.0);
    let scale = PLOT_H / 2.0 / rmax;
    let mut s = header(side, side + 20.0, &title);
    for k in 1..=4 {
        let r = rmax * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#dddddd"/>"##,
            r * scale
        );
    }
    let _ = writeln!(
        s,
        r##"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" fill="none" stroke="#2e9e44" stroke-width="2"/>"##,
        scale
    );
    // Orientation theta and theta + pi carry the same value.
    let n = radii.len();
    let mut pts = Vec::new();
    for half in 0..2 {
        for (j, r) in radii.iter().enumerate() {
            let Some(r) = r else { continue };
            let t = profile.centers[j] + half as f64 * PI;
            pts.push((cx + r * scale * t.cos(), cy - r * scale * t.sin()));
        }
    }
    if pts.len() == 2 * n && n > 0 {
        pts.push(pts[0]);
    }
    polyline(&mut s, &pts, "#1f4e9c", false);
    let _ = writeln!(
        s,
        r##"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="11" fill="#2e9e44">reference (F = 0)</text>"##,
        8.0,
        side + 12.0
    );
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use synthprint::profiles::{radial_center, RADIAL_BINS};

    #[test]
    fn ramp_is_monotone() {
        assert_eq!(ramp(0), [0, 0, 0]);
        assert_eq!(ramp(85), [255, 0, 0]);
        assert_eq!(ramp(170), [255, 255, 0]);
        assert_eq!(ramp(255), [255, 255, 255]);
        for i in 1..=255u8 {
            let (a, b) = (ramp(i - 1), ramp(i));
            assert!((0..3).all(|k| b[k] >= a[k]));
            assert!(b.iter().map(|&v| u32::from(v)).sum::<u32>() > a.iter().map(|&v| u32::from(v)).sum::<u32>());
        }
    }

    #[test]
    fn index_mapping() {
        assert_eq!(ramp_index(0.0, 0.0, 1.0), 0);
        assert_eq!(ramp_index(1.0, 0.0, 1.0), 255);
        assert_eq!(ramp_index(2.0, 0.0, 1.0), 255);
        assert_eq!(ramp_index(0.5, 0.0, 1.0), 128);
        assert_eq!(ramp_index(f64::NEG_INFINITY, 0.0, 1.0), 0);
        assert_eq!(ramp_index(3.0, 3.0, 3.0), 0);
    }

    #[test]
    fn heatmap_merges_runs() {
        let grid = RealGrid::new(4, 2, vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0]).unwrap();
        let svg = heatmap(&grid, 0.0, 1.0, "t", "v");
        let cells = svg.matches(r#"height="128.00" fill"#).count();
        assert_eq!(cells, 3);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }

    #[test]
    fn plots_are_deterministic_and_handle_gaps() {
        let mean: Vec<Option<f64>> = (0..RADIAL_BINS).map(|j| (j % 7 != 0).then(|| radial_center(j).powf(-1.0))).collect();
        let p = RadialProfile::from_means(mean, ProfileMode::Magnitude);
        assert_eq!(radial_plot(&p, None), radial_plot(&p, None));
        let empty = RadialProfile::from_means(vec![None; RADIAL_BINS], ProfileMode::Magnitude);
        assert!(radial_plot(&empty, None).contains("no defined values"));
    }
}
