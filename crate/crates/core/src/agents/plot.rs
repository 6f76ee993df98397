//! Judge-facing views of simulated series: a line plot and a text summary.

use std::io::Cursor;

use image::{ImageFormat, Rgb, RgbImage};

use crate::numfmt::format_sig;
use crate::simulator::Trajectories;

const WIDTH: u32 = 960;
const HEIGHT: u32 = 480;
const MARGIN: u32 = 24;

const PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [127, 127, 127],
];

fn draw_line(img: &mut RgbImage, (x0, y0): (i64, i64), (x1, y1): (i64, i64), color: Rgb<u8>) {
    let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
    let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
    let (mut x, mut y, mut err) = (x0, y0, dx + dy);
    loop {
        if x >= 0 && y >= 0 && (x as u32) < img.width() && (y as u32) < img.height() {
            img.put_pixel(x as u32, y as u32, color);
        }
        if x == x1 && y == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
}

/// Every node's series on shared axes, encoded as PNG.
pub fn render_png(tr: &Trajectories) -> Result<Vec<u8>, image::ImageError> {
    let mut img = RgbImage::from_pixel(WIDTH, HEIGHT, Rgb([255, 255, 255]));
    let axis = Rgb([0, 0, 0]);
    let (left, right, top, bottom) = (MARGIN as i64, (WIDTH - MARGIN) as i64, MARGIN as i64, (HEIGHT - MARGIN) as i64);
    draw_line(&mut img, (left, bottom), (right, bottom), axis);
    draw_line(&mut img, (left, top), (left, bottom), axis);

    let finite = tr.values.iter().flatten().copied().filter(|v| v.is_finite());
    let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if lo.is_finite() && tr.seq_len > 0 {
        let span = if hi > lo { hi - lo } else { 1.0 };
        let steps = (tr.seq_len.max(2) - 1) as f64;
        let px = |t: usize| left + ((t as f64 / steps) * (right - left) as f64).round() as i64;
        let py = |v: f64| bottom - (((v - lo) / span) * (bottom - top) as f64).round() as i64;
        for (i, series) in tr.values.iter().enumerate() {
            let color = Rgb(PALETTE[i % PALETTE.len()]);
            for t in 1..series.len() {
                if series[t - 1].is_finite() && series[t].is_finite() {
                    draw_line(&mut img, (px(t - 1), py(series[t - 1])), (px(t), py(series[t])), color);
                }
            }
        }
    }
    let mut bytes = Vec::new();
    img.write_to(&mut Cursor::new(&mut bytes), ImageFormat::Png)?;
    Ok(bytes)
}

/// Per-node min, max, argmax, first and last values, one line per node.
pub fn text_summary(tr: &Trajectories) -> String {
    let mut out = String::from("Simulated series summary (4 significant digits):\n");
    for (id, series) in tr.node_ids.iter().zip(&tr.values) {
        let Some(&first) = series.first() else {
            out.push_str(&format!("node {id}: empty\n"));
            continue;
        };
        let last = *series.last().unwrap_or(&first);
        let (mut min, mut max, mut argmax) = (first, first, 0usize);
        for (t, &v) in series.iter().enumerate() {
            min = min.min(v);
            if v > max {
                max = v;
                argmax = t;
            }
        }
        out.push_str(&format!(
            "node {id}: min={} max={} argmax={argmax} first={} last={}\n",
            format_sig(min, 4),
            format_sig(max, 4),
            format_sig(first, 4),
            format_sig(last, 4)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::TrajectoryMeta;

    fn tr(values: Vec<Vec<f64>>) -> Trajectories {
        Trajectories {
            seq_len: values[0].len(),
            node_ids: (0..values.len()).collect(),
            values,
            meta: TrajectoryMeta { seed: 0, substeps: 10, scenario_id: None },
        }
    }

    #[test]
    fn summary_lines() {
        let s = text_summary(&tr(vec![vec![3.0, 9.0, 1.0, 2.5], vec![5.0, 5.0, 5.0, 5.0]]));
        assert!(s.contains("node 0: min=1 max=9 argmax=1 first=3 last=2.5"));
        assert!(s.contains("node 1: min=5 max=5 argmax=0 first=5 last=5"));
    }

    #[test]
    fn png_roundtrip() {
        let bytes = render_png(&tr(vec![vec![1.0, 4.0, 2.0], vec![0.0, 0.0, 3.0]])).unwrap();
        assert_eq!(&bytes[1..4], b"PNG");
        let img = image::load_from_memory(&bytes).unwrap();
        assert_eq!((img.width(), img.height()), (WIDTH, HEIGHT));
        // some pixel carries the first series colour
        let rgb = img.to_rgb8();
        assert!(rgb.pixels().any(|p| p.0 == PALETTE[0]));
    }

    #[test]
    fn png_is_deterministic() {
        let t = tr(vec![vec![1.0, 2.0, 3.0]]);
        assert_eq!(render_png(&t).unwrap(), render_png(&t).unwrap());
    }
}
