use serde::{Deserialize, Serialize};

use super::MultiviewError;
use crate::frame::Frame;

/// Grid of view tiles. Tiles run left to right within a row and rows run
/// bottom to top, so view 0 (the leftmost camera) sits at the bottom-left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuiltLayout {
    pub columns: usize,
    pub rows: usize,
    pub tile_width: usize,
    pub tile_height: usize,
    pub n_views: usize,
}

impl QuiltLayout {
    pub fn new(
        columns: usize,
        rows: usize,
        tile_width: usize,
        tile_height: usize,
        n_views: usize,
    ) -> Result<Self, MultiviewError> {
        let l = QuiltLayout {
            columns,
            rows,
            tile_width,
            tile_height,
            n_views,
        };
        l.validate()?;
        Ok(l)
    }

    /// Largest whole tiles of a `columns x rows` grid fitting in `canvas`.
    pub fn fit(canvas: (usize, usize), columns: usize, rows: usize, n_views: usize) -> Result<Self, MultiviewError> {
        if columns == 0 || rows == 0 {
            return Err(MultiviewError::Layout(format!("{columns}x{rows} grid has no tiles")));
        }
        QuiltLayout::new(columns, rows, canvas.0 / columns, canvas.1 / rows, n_views)
    }

    /// Same tiles holding `n` views: the grid is kept when `n` fits, otherwise
    /// replaced by a near-square one.
    pub fn with_view_count(&self, n: usize) -> Result<Self, MultiviewError> {
        if n <= self.columns * self.rows {
            return QuiltLayout::new(self.columns, self.rows, self.tile_width, self.tile_height, n);
        }
        let columns = (n as f64).sqrt().ceil() as usize;
        QuiltLayout::new(columns, n.div_ceil(columns), self.tile_width, self.tile_height, n)
    }

    pub fn validate(&self) -> Result<(), MultiviewError> {
        if self.columns == 0 || self.rows == 0 || self.tile_width == 0 || self.tile_height == 0 {
            return Err(MultiviewError::Layout(format!(
                "{}x{} grid of {}x{} tiles is empty",
                self.columns, self.rows, self.tile_width, self.tile_height
            )));
        }
        if self.n_views == 0 || self.n_views > self.columns * self.rows {
            return Err(MultiviewError::Layout(format!(
                "{} views do not fit a {}x{} grid",
                self.n_views, self.columns, self.rows
            )));
        }
        Ok(())
    }

    pub fn size(&self) -> (usize, usize) {
        (self.columns * self.tile_width, self.rows * self.tile_height)
    }

    pub fn tile_size(&self) -> (usize, usize) {
        (self.tile_width, self.tile_height)
    }

    /// Top-left pixel of view `i`'s tile.
    pub fn tile_origin(&self, i: usize) -> (usize, usize) {
        let col = i % self.columns;
        let row_from_bottom = i / self.columns;
        (
            col * self.tile_width,
            (self.rows - 1 - row_from_bottom) * self.tile_height,
        )
    }

    pub fn tile_aspect(&self) -> f64 {
        self.tile_width as f64 / self.tile_height as f64
    }
}

pub fn assemble_quilt(views: &[Frame], layout: &QuiltLayout) -> Result<Frame, MultiviewError> {
    layout.validate()?;
    if views.len() != layout.n_views {
        return Err(MultiviewError::ViewCount {
            expected: layout.n_views,
            actual: views.len(),
        });
    }
    let (w, h) = layout.size();
    let mut quilt = Frame::filled(w, h, [0, 0, 0, 255]);
    for (i, v) in views.iter().enumerate() {
        write_tile(&mut quilt, layout, i, v)?;
    }
    Ok(quilt)
}

/// Overwrites view `i`'s tile.
pub fn write_tile(quilt: &mut Frame, layout: &QuiltLayout, i: usize, view: &Frame) -> Result<(), MultiviewError> {
    if view.size() != layout.tile_size() {
        return Err(MultiviewError::TileSize {
            expected: layout.tile_size(),
            actual: view.size(),
        });
    }
    if i >= layout.n_views {
        return Err(MultiviewError::ViewIndex(i, layout.n_views));
    }
    let (x, y) = layout.tile_origin(i);
    quilt.blit(view, x, y)?;
    Ok(())
}

pub fn extract_tile(quilt: &Frame, layout: &QuiltLayout, i: usize) -> Result<Frame, MultiviewError> {
    if i >= layout.n_views {
        return Err(MultiviewError::ViewIndex(i, layout.n_views));
    }
    let (x, y) = layout.tile_origin(i);
    Ok(quilt.crop(x, y, layout.tile_width, layout.tile_height)?)
}

pub fn extract_tiles(quilt: &Frame, layout: &QuiltLayout) -> Result<Vec<Frame>, MultiviewError> {
    (0..layout.n_views).map(|i| extract_tile(quilt, layout, i)).collect()
}

/// Places `quilt` at the bottom-left of a black `canvas`-sized frame.
pub fn pad_to_canvas(quilt: &Frame, canvas: (usize, usize)) -> Result<Frame, MultiviewError> {
    if quilt.size() == canvas {
        return Ok(quilt.clone());
    }
    let mut out = Frame::filled(canvas.0, canvas.1, [0, 0, 0, 255]);
    let y = canvas
        .1
        .checked_sub(quilt.height())
        .ok_or(MultiviewError::Layout("quilt taller than canvas".into()))?;
    out.blit(quilt, 0, y)?;
    Ok(out)
}

/// Aspect formatted with at most four decimals, trailing zeros trimmed.
pub fn format_aspect(aspect: f64) -> String {
    let s = format!("{aspect:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

/// `<stem>_qs<columns>x<rows>a<aspect>.png`
pub fn quilt_file_name(stem: &str, layout: &QuiltLayout, aspect: f64) -> String {
    format!(
        "{stem}_qs{}x{}a{}.png",
        layout.columns,
        layout.rows,
        format_aspect(aspect)
    )
}

/// Reads `(columns, rows, aspect)` back out of a quilt file name.
pub fn parse_quilt_file_name(name: &str) -> Option<(usize, usize, f64)> {
    let base = name.strip_suffix(".png").unwrap_or(name);
    let at = base.rfind("_qs")?;
    let spec = &base[at + 3..];
    let (grid, aspect) = spec.split_once('a')?;
    let (c, r) = grid.split_once('x')?;
    Some((c.parse().ok()?, r.parse().ok()?, aspect.parse().ok()?))
}
