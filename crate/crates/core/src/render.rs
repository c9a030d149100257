//! PNG figures: color strips, R-hat traces and sample scatters with KDE
//! contours. Output depends only on the inputs.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::color::{hsl_to_rgb, Dimension, HslColor};
use crate::diagnostics::{RhatTrace, RHAT_THRESHOLD};
use crate::error::DomainError;
use crate::kde::{kde, KdeGrid, Projection};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("nothing to draw: no chains")]
    NoChains,
    #[error("R-hat trace is empty; chains need at least 2 iterations")]
    EmptyTrace,
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("{path}: {message}")]
    Write { path: PathBuf, message: String },
}

type Rgb = [u8; 3];

fn rgb(c: HslColor) -> Rgb {
    let (r, g, b) = hsl_to_rgb(c);
    [r, g, b]
}

const WHITE: Rgb = [255, 255, 255];
const BLACK: Rgb = [0, 0, 0];
const GRAY: Rgb = [150, 150, 150];
const RED: Rgb = [200, 30, 30];
const CONTOUR: Rgb = [90, 90, 90];
const PALETTE: [Rgb; 8] = [
    [31, 119, 180],
    [255, 127, 14],
    [44, 160, 44],
    [214, 39, 40],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [23, 190, 207],
];

/// An RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
    pub pixels: Vec<u8>,
}

impl Canvas {
    pub fn new(width: u32, height: u32, background: Rgb) -> Self {
        let pixels = background.iter().copied().cycle().take((width * height * 3) as usize).collect();
        Self { width, height, pixels }
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = ((y * self.width + x) * 3) as usize;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set(&mut self, x: i64, y: i64, c: Rgb) {
        if x < 0 || y < 0 || x >= self.width as i64 || y >= self.height as i64 {
            return;
        }
        let i = ((y as u32 * self.width + x as u32) * 3) as usize;
        self.pixels[i..i + 3].copy_from_slice(&c);
    }

    pub fn fill_rect(&mut self, x: i64, y: i64, w: i64, h: i64, c: Rgb) {
        for yy in y..y + h {
            for xx in x..x + w {
                self.set(xx, yy, c);
            }
        }
    }

    pub fn line(&mut self, (x0, y0): (i64, i64), (x1, y1): (i64, i64), c: Rgb) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y, c);
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

    pub fn write_png(&self, path: &Path) -> Result<(), RenderError> {
        let fail = |message: String| RenderError::Write { path: path.to_path_buf(), message };
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent).map_err(|e| fail(e.to_string()))?;
        }
        let file = File::create(path).map_err(|e| fail(e.to_string()))?;
        let mut encoder = png::Encoder::new(BufWriter::new(file), self.width, self.height);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header().map_err(|e| fail(e.to_string()))?;
        writer.write_image_data(&self.pixels).map_err(|e| fail(e.to_string()))?;
        writer.finish().map_err(|e| fail(e.to_string()))
    }
}

/// Pixel size of one strip cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StripStyle {
    pub cell_width: u32,
    pub cell_height: u32,
}

impl Default for StripStyle {
    fn default() -> Self {
        Self { cell_width: 1, cell_height: 1 }
    }
}

/// One row per chain and one column per sample. Shorter chains leave their
/// row white past the end.
pub fn color_strip(chains: &[Vec<HslColor>], style: StripStyle) -> Result<Canvas, RenderError> {
    let columns = chains.iter().map(Vec::len).max().unwrap_or(0) as u32;
    if chains.is_empty() || columns == 0 {
        return Err(RenderError::NoChains);
    }
    let (cw, ch) = (style.cell_width.max(1), style.cell_height.max(1));
    let mut canvas = Canvas::new(columns * cw, chains.len() as u32 * ch, WHITE);
    for (row, chain) in chains.iter().enumerate() {
        for (col, c) in chain.iter().enumerate() {
            canvas.fill_rect((col as u32 * cw) as i64, (row as u32 * ch) as i64, cw as i64, ch as i64, rgb(*c));
        }
    }
    Ok(canvas)
}

pub fn render_color_strip(chains: &[Vec<HslColor>], style: StripStyle, path: &Path) -> Result<(), RenderError> {
    color_strip(chains, style)?.write_png(path)
}

const PLOT_W: i64 = 640;
const PLOT_H: i64 = 360;
const MARGIN: i64 = 40;

/// Cumulative R-hat against iteration, one line per trace, with a dashed rule
/// at 1.1. Values above the plot ceiling, including infinities, are drawn at
/// the ceiling with a red tick.
pub fn rhat_plot(traces: &[RhatTrace]) -> Result<Canvas, RenderError> {
    if traces.is_empty() || traces.iter().any(|t| t.values.is_empty()) {
        return Err(RenderError::EmptyTrace);
    }
    let finite: Vec<f64> = traces.iter().flat_map(|t| t.values.iter().copied()).filter(|v| v.is_finite()).collect();
    let hi = finite.iter().copied().fold(RHAT_THRESHOLD, f64::max).clamp(1.5, 3.0);
    let lo = finite.iter().copied().fold(0.9, f64::min).max(0.0);
    let max_iter = traces.iter().map(|t| RhatTrace::iteration_at(t.values.len() - 1)).max().unwrap_or(2);

    let mut canvas = Canvas::new((PLOT_W + 2 * MARGIN) as u32, (PLOT_H + 2 * MARGIN) as u32, WHITE);
    let px = |iter: usize| MARGIN + ((iter - 2) as f64 / (max_iter.max(3) - 2) as f64 * PLOT_W as f64).round() as i64;
    let py = |v: f64| MARGIN + PLOT_H - ((v.min(hi) - lo) / (hi - lo) * PLOT_H as f64).round() as i64;

    canvas.line((MARGIN, MARGIN), (MARGIN, MARGIN + PLOT_H), BLACK);
    canvas.line((MARGIN, MARGIN + PLOT_H), (MARGIN + PLOT_W, MARGIN + PLOT_H), BLACK);
    let mut tick = (lo * 10.0).ceil() / 10.0;
    while tick <= hi + 1e-9 {
        canvas.line((MARGIN - 4, py(tick)), (MARGIN, py(tick)), BLACK);
        tick += 0.1;
    }
    let rule = py(RHAT_THRESHOLD);
    for x in (MARGIN..=MARGIN + PLOT_W).step_by(8) {
        canvas.line((x, rule), ((x + 3).min(MARGIN + PLOT_W), rule), GRAY);
    }

    for (k, trace) in traces.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let points: Vec<(i64, i64)> =
            trace.values.iter().enumerate().map(|(i, &v)| (px(RhatTrace::iteration_at(i)), py(v))).collect();
        for pair in points.windows(2) {
            canvas.line(pair[0], pair[1], color);
        }
        if points.len() == 1 {
            canvas.set(points[0].0, points[0].1, color);
        }
        for (i, &v) in trace.values.iter().enumerate() {
            if v > hi {
                let x = px(RhatTrace::iteration_at(i));
                canvas.line((x, MARGIN - 6), (x, MARGIN - 2), RED);
            }
        }
    }
    Ok(canvas)
}

pub fn render_rhat_trace(traces: &[RhatTrace], path: &Path) -> Result<(), RenderError> {
    rhat_plot(traces)?.write_png(path)
}

/// Pixels per HSL unit in scatter plots.
const SCATTER_SCALE: f64 = 2.0;
/// Contour levels as fractions of the peak density.
const CONTOUR_LEVELS: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
/// Kernel bandwidth, in HSL units, of the overlaid density.
pub const SCATTER_BANDWIDTH: f64 = 1.0;

fn axis_span(dim: Dimension) -> f64 {
    match dim {
        Dimension::Hue => 360.0,
        _ => 100.0,
    }
}

/// Samples projected on two dimensions with iso-density contours. The plot
/// area covers `[0, 360)` for hue and `[0, 100]` otherwise, origin bottom left.
pub fn scatter_kde(samples: &[HslColor], projection: Projection) -> Result<Canvas, RenderError> {
    let est = kde(samples, SCATTER_BANDWIDTH, projection, KdeGrid { step: 1.0 / SCATTER_SCALE, padding: 0.0 })?;
    let (nx, ny) = (est.xs.len() as i64, est.ys.len() as i64);
    let plot_w = (axis_span(projection.x) * SCATTER_SCALE) as i64;
    let plot_h = (axis_span(projection.y) * SCATTER_SCALE) as i64;
    let mut canvas = Canvas::new((plot_w + 2 * MARGIN + 1) as u32, (plot_h + 2 * MARGIN + 1) as u32, WHITE);
    // grid point (ix, iy) sits at pixel (MARGIN + ix, MARGIN + plot_h - iy)
    let to_px = |ix: i64, iy: i64| (MARGIN + ix, MARGIN + plot_h - iy);

    canvas.line(to_px(0, 0), to_px(plot_w, 0), BLACK);
    canvas.line(to_px(0, 0), to_px(0, plot_h), BLACK);
    for (dim, horizontal) in [(projection.x, true), (projection.y, false)] {
        let step = if dim == Dimension::Hue { 60.0 } else { 20.0 };
        let mut v = 0.0;
        while v <= axis_span(dim) + 1e-9 {
            let p = (v * SCATTER_SCALE) as i64;
            if horizontal {
                let (x, y) = to_px(p, 0);
                canvas.line((x, y), (x, y + 4), BLACK);
            } else {
                let (x, y) = to_px(0, p);
                canvas.line((x - 4, y), (x, y), BLACK);
            }
            v += step;
        }
    }

    let peak = est.max_density();
    if peak > 0.0 {
        for level in CONTOUR_LEVELS.map(|f| f * peak) {
            // inner boundary of the superlevel set
            let below = |ix: i64, iy: i64| {
                ix >= 0 && iy >= 0 && ix < nx && iy < ny && est.at(ix as usize, iy as usize) < level
            };
            for iy in 0..ny {
                for ix in 0..nx {
                    if est.at(ix as usize, iy as usize) >= level
                        && (below(ix + 1, iy) || below(ix - 1, iy) || below(ix, iy + 1) || below(ix, iy - 1))
                    {
                        let (x, y) = to_px(ix, iy);
                        canvas.set(x, y, CONTOUR);
                    }
                }
            }
        }
    }

    for c in samples {
        let ix = (c.get(projection.x) as f64 * SCATTER_SCALE) as i64;
        let iy = (c.get(projection.y) as f64 * SCATTER_SCALE) as i64;
        let (x, y) = to_px(ix, iy);
        canvas.fill_rect(x - 2, y - 2, 5, 5, BLACK);
        canvas.fill_rect(x - 1, y - 1, 3, 3, rgb(*c));
    }
    Ok(canvas)
}

pub fn render_scatter_kde(samples: &[HslColor], projection: Projection, path: &Path) -> Result<(), RenderError> {
    scatter_kde(samples, projection)?.write_png(path)
}
