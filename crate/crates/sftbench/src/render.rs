//! Renderers: ASCII grids, SVG tilings (edge-colored square cells with a
//! legend), and DOT digraph export. All output is deterministic.

use crate::manifest::digest_bytes;
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// ASCII grid of tile ids, row 0 printed last (screen y grows upward).
pub fn ascii_tile_grid(rows: &[Vec<usize>]) -> String {
    let width = rows
        .iter()
        .flatten()
        .map(|t| t.to_string().len())
        .max()
        .unwrap_or(1);
    let mut out = String::new();
    for row in rows.iter().rev() {
        for (i, t) in row.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{t:>width$}");
        }
        out.push('\n');
    }
    out
}

/// Deterministic display color for an edge-color name: hash to a hue, full
/// saturation, mid lightness.
pub fn color_for(name: &str) -> String {
    let h = u64::from_str_radix(&digest_bytes(name.as_bytes())[..8], 16).unwrap_or(0);
    let hue = (h % 360) as f64;
    let (r, g, b) = hsl_to_rgb(hue, 0.65, 0.55);
    format!("#{r:02x}{g:02x}{b:02x}")
}

fn hsl_to_rgb(h: f64, s: f64, l: f64) -> (u8, u8, u8) {
    let c = (1.0 - (2.0 * l - 1.0).abs()) * s;
    let hp = h / 60.0;
    let x = c * (1.0 - (hp % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match hp as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = l - c / 2.0;
    (
        ((r1 + m) * 255.0).round() as u8,
        ((g1 + m) * 255.0).round() as u8,
        ((b1 + m) * 255.0).round() as u8,
    )
}

/// SVG rendering of a grid of square cells, each cell given as its four edge
/// color names in order [north, east, south, west]; cells are drawn as four
/// triangles meeting at the center. A legend maps color names to fills.
/// Row 0 is the bottom row.
pub fn svg_edge_grid(cells: &[Vec<[String; 4]>]) -> String {
    const CELL: f64 = 48.0;
    let h = cells.len();
    let w = cells.iter().map(|r| r.len()).max().unwrap_or(0);
    let mut legend: BTreeMap<String, String> = BTreeMap::new();
    for row in cells {
        for cell in row {
            for name in cell {
                legend
                    .entry(name.clone())
                    .or_insert_with(|| color_for(name));
            }
        }
    }
    let legend_height = 22.0 * legend.len() as f64 + 10.0;
    let width = w as f64 * CELL + 20.0;
    let height = h as f64 * CELL + legend_height + 20.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for (y, row) in cells.iter().enumerate() {
        for (x, cell) in row.iter().enumerate() {
            let x0 = 10.0 + x as f64 * CELL;
            // rows drawn bottom-up
            let y0 = 10.0 + (h - 1 - y) as f64 * CELL;
            let (x1, y1) = (x0 + CELL, y0 + CELL);
            let (cx, cy) = (x0 + CELL / 2.0, y0 + CELL / 2.0);
            let tri = |a: (f64, f64), b: (f64, f64), name: &str, out: &mut String| {
                let fill = &legend[name];
                let _ = writeln!(
                    out,
                    r#"<polygon points="{:.1},{:.1} {:.1},{:.1} {:.1},{:.1}" fill="{fill}" stroke="black" stroke-width="0.5"/>"#,
                    a.0, a.1, b.0, b.1, cx, cy
                );
            };
            tri((x0, y0), (x1, y0), &cell[0], &mut out); // north (svg top)
            tri((x1, y0), (x1, y1), &cell[1], &mut out); // east
            tri((x1, y1), (x0, y1), &cell[2], &mut out); // south
            tri((x0, y1), (x0, y0), &cell[3], &mut out); // west
        }
    }
    let mut ly = h as f64 * CELL + 30.0;
    for (name, fill) in &legend {
        let _ = writeln!(
            out,
            r#"<rect x="10" y="{:.1}" width="16" height="16" fill="{fill}" stroke="black" stroke-width="0.5"/>"#,
            ly
        );
        let _ = writeln!(
            out,
            r#"<text x="32" y="{:.1}" font-family="monospace" font-size="13">{}</text>"#,
            ly + 13.0,
            xml_escape(name)
        );
        ly += 22.0;
    }
    out.push_str("</svg>\n");
    out
}

pub fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// DOT export of a graph: node labels, edges by index, directed or not.
pub fn dot_graph(name: &str, nodes: &[String], edges: &[(usize, usize)], directed: bool) -> String {
    let mut out = String::new();
    let (kind, arrow) = if directed {
        ("digraph", "->")
    } else {
        ("graph", "--")
    };
    let _ = writeln!(out, "{kind} {name} {{");
    for (i, label) in nodes.iter().enumerate() {
        let _ = writeln!(out, "  n{i} [label=\"{}\"];", label.replace('"', "\\\""));
    }
    for &(a, b) in edges {
        let _ = writeln!(out, "  n{a} {arrow} n{b};");
    }
    out.push_str("}\n");
    out
}
