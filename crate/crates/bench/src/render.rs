use std::fmt::Write;

use hgff_core::{EpisodeTrace, Position, WsnInstance};

/// Drawing width of the longer map side, px.
const CANVAS: f64 = 640.0;
const MARGIN: f64 = 24.0;

/// Sink path as consecutive stays `(site, rounds)`. The path begins at the
/// start site, which counts as a stay of zero rounds when the first decision
/// moves the sink away.
pub fn route_stays(trace: &EpisodeTrace) -> Vec<(usize, u64)> {
    let mut out = vec![(trace.start_site, 0u64)];
    for &s in &trace.sites {
        match out.last_mut() {
            Some((site, n)) if *site == s => *n += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

struct Frame {
    scale: f64,
    height: f64,
}

impl Frame {
    fn new(instance: &WsnInstance) -> Self {
        let scale = CANVAS / instance.width.max(instance.height).max(1e-9);
        Self {
            scale,
            height: instance.height,
        }
    }

    fn at(&self, p: &Position) -> (f64, f64) {
        (
            MARGIN + p.x * self.scale,
            MARGIN + (self.height - p.y) * self.scale,
        )
    }
}

fn star(cx: f64, cy: f64, r: f64) -> String {
    let mut pts = Vec::with_capacity(10);
    for k in 0..10 {
        let rad = if k % 2 == 0 { r } else { r * 0.45 };
        let ang = std::f64::consts::PI * (k as f64 / 5.0 - 0.5);
        pts.push(format!(
            "{:.2},{:.2}",
            cx + rad * ang.cos(),
            cy + rad * ang.sin()
        ));
    }
    pts.join(" ")
}

/// SVG drawing of a finished episode: dashed circles for sites (grey when
/// inaccessible), dots for the initial sensor positions, a star at the start
/// site, numbered arrows for each move and `t=n` labels on stays longer than
/// one round.
pub fn render_route(trace: &EpisodeTrace, instance: &WsnInstance) -> String {
    let f = Frame::new(instance);
    let w = 2.0 * MARGIN + instance.width * f.scale;
    let h = 2.0 * MARGIN + instance.height * f.scale;
    let site_r = 0.35 * f.scale * site_spacing(instance);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.2} {h:.2}">"#
    );
    s.push_str(
        "<defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"9\" refY=\"5\" markerWidth=\"6\" markerHeight=\"6\" orient=\"auto\"><path d=\"M0,0 L10,5 L0,10 z\" fill=\"#c0392b\"/></marker></defs>\n",
    );
    let _ = writeln!(
        s,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{:.2}" height="{:.2}" fill="none" stroke="#999"/>"##,
        instance.width * f.scale,
        instance.height * f.scale
    );

    for (j, p) in instance.sites.iter().enumerate() {
        let (x, y) = f.at(p);
        let stroke = if instance.site_accessible[j] {
            "#2c3e50"
        } else {
            "#bbb"
        };
        let _ = writeln!(
            s,
            r#"<circle class="site" cx="{x:.2}" cy="{y:.2}" r="{site_r:.2}" fill="none" stroke="{stroke}" stroke-dasharray="4 3"/>"#
        );
    }
    for p in &instance.sensors_init {
        let (x, y) = f.at(p);
        let _ = writeln!(
            s,
            r##"<circle class="sensor" cx="{x:.2}" cy="{y:.2}" r="2.5" fill="#27ae60"/>"##
        );
    }

    let stays = route_stays(trace);
    for (k, pair) in stays.windows(2).enumerate() {
        let (x1, y1) = f.at(&instance.sites[pair[0].0]);
        let (x2, y2) = f.at(&instance.sites[pair[1].0]);
        let (dx, dy) = (x2 - x1, y2 - y1);
        let len = (dx * dx + dy * dy).sqrt().max(1e-9);
        let trim = site_r.min(len / 3.0);
        let (ux, uy) = (dx / len, dy / len);
        let _ = writeln!(
            s,
            r##"<line class="move" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#c0392b" stroke-width="1.5" marker-end="url(#arrow)"/>"##,
            x1 + ux * trim,
            y1 + uy * trim,
            x2 - ux * trim,
            y2 - uy * trim
        );
        let _ = writeln!(
            s,
            r##"<text class="step" x="{:.2}" y="{:.2}" font-size="11" fill="#c0392b">{}</text>"##,
            (x1 + x2) / 2.0 - uy * 8.0,
            (y1 + y2) / 2.0 + ux * 8.0,
            k + 1
        );
    }
    for &(site, rounds) in &stays {
        if rounds > 1 {
            let (x, y) = f.at(&instance.sites[site]);
            let _ = writeln!(
                s,
                r##"<text class="sojourn" x="{:.2}" y="{:.2}" font-size="11" fill="#2c3e50">t={rounds}</text>"##,
                x + site_r * 0.8,
                y - site_r * 0.8
            );
        }
    }

    let (sx, sy) = f.at(&instance.sites[trace.start_site]);
    let _ = writeln!(
        s,
        r##"<polygon class="start" points="{}" fill="#f1c40f" stroke="#7f6000"/>"##,
        star(sx, sy, 7.0)
    );
    s.push_str("</svg>\n");
    s
}

/// Smallest distance between two sites, m; the map width for a single site.
fn site_spacing(instance: &WsnInstance) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in instance.sites.iter().enumerate() {
        for b in &instance.sites[i + 1..] {
            best = best.min(a.distance(b));
        }
    }
    if best.is_finite() && best > 0.0 {
        best
    } else {
        instance.width
    }
}
