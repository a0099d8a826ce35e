//! RGBA8 rasters, top-left origin, row-major.

use std::io::Cursor;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum FrameError {
    #[error("frame size mismatch: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("pixel buffer holds {actual} bytes, expected {expected}")]
    BufferLength { expected: usize, actual: usize },
    #[error("region {x},{y} {w}x{h} exceeds {width}x{height} frame")]
    OutOfBounds {
        x: usize,
        y: usize,
        w: usize,
        h: usize,
        width: usize,
        height: usize,
    },
    #[error("png encode: {0}")]
    Encode(#[from] png::EncodingError),
    #[error("png decode: {0}")]
    Decode(#[from] png::DecodingError),
    #[error("unsupported png layout {0:?}/{1:?}")]
    PngLayout(png::ColorType, png::BitDepth),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, PartialEq, Eq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl std::fmt::Debug for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Frame({}x{})", self.width, self.height)
    }
}

impl Frame {
    /// Transparent black.
    pub fn new(width: usize, height: usize) -> Self {
        Frame {
            width,
            height,
            pixels: vec![0; 4 * width * height],
        }
    }

    pub fn filled(width: usize, height: usize, rgba: [u8; 4]) -> Self {
        let mut pixels = Vec::with_capacity(4 * width * height);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgba);
        }
        Frame { width, height, pixels }
    }

    pub fn from_rgba(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, FrameError> {
        if pixels.len() != 4 * width * height {
            return Err(FrameError::BufferLength {
                expected: 4 * width * height,
                actual: pixels.len(),
            });
        }
        Ok(Frame { width, height, pixels })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn size(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 4] {
        let o = 4 * (y * self.width + x);
        [
            self.pixels[o],
            self.pixels[o + 1],
            self.pixels[o + 2],
            self.pixels[o + 3],
        ]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgba: [u8; 4]) {
        let o = 4 * (y * self.width + x);
        self.pixels[o..o + 4].copy_from_slice(&rgba);
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[4 * y * self.width..4 * (y + 1) * self.width]
    }

    pub fn ensure_same_size(&self, other: &Frame) -> Result<(), FrameError> {
        if self.size() != other.size() {
            return Err(FrameError::SizeMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Copies `src` with its top-left corner at `(x, y)`.
    pub fn blit(&mut self, src: &Frame, x: usize, y: usize) -> Result<(), FrameError> {
        self.check_region(x, y, src.width, src.height)?;
        for row in 0..src.height {
            let d = 4 * ((y + row) * self.width + x);
            self.pixels[d..d + 4 * src.width].copy_from_slice(src.row(row));
        }
        Ok(())
    }

    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Frame, FrameError> {
        self.check_region(x, y, w, h)?;
        let mut out = Frame::new(w, h);
        for row in 0..h {
            let s = 4 * ((y + row) * self.width + x);
            out.pixels[4 * row * w..4 * (row + 1) * w].copy_from_slice(&self.pixels[s..s + 4 * w]);
        }
        Ok(out)
    }

    fn check_region(&self, x: usize, y: usize, w: usize, h: usize) -> Result<(), FrameError> {
        if x + w > self.width || y + h > self.height {
            return Err(FrameError::OutOfBounds {
                x,
                y,
                w,
                h,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    /// Bilinear sample at normalized `(u, v)` in `[0,1]^2`, clamp-to-edge,
    /// pixel `i` centered at `(i + 0.5) / width`.
    pub fn sample_bilinear(&self, u: f64, v: f64) -> [u8; 4] {
        let fx = u * self.width as f64 - 0.5;
        let fy = v * self.height as f64 - 0.5;
        let x0f = fx.floor();
        let y0f = fy.floor();
        let tx = fx - x0f;
        let ty = fy - y0f;
        let clampi = |i: f64, n: usize| (i.max(0.0) as usize).min(n - 1);
        let (x0, x1) = (clampi(x0f, self.width), clampi(x0f + 1.0, self.width));
        let (y0, y1) = (clampi(y0f, self.height), clampi(y0f + 1.0, self.height));
        let (p00, p10, p01, p11) = (
            self.pixel(x0, y0),
            self.pixel(x1, y0),
            self.pixel(x0, y1),
            self.pixel(x1, y1),
        );
        let mut out = [0u8; 4];
        for c in 0..4 {
            let top = p00[c] as f64 + (p10[c] as f64 - p00[c] as f64) * tx;
            let bot = p01[c] as f64 + (p11[c] as f64 - p01[c] as f64) * tx;
            out[c] = (top + (bot - top) * ty).round().clamp(0.0, 255.0) as u8;
        }
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>, FrameError> {
        let mut buf = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut buf, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgba);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header()?;
            w.write_image_data(&self.pixels)?;
        }
        Ok(buf)
    }

    pub fn from_png(bytes: &[u8]) -> Result<Frame, FrameError> {
        let mut dec = png::Decoder::new(Cursor::new(bytes));
        dec.set_transformations(png::Transformations::EXPAND);
        let mut reader = dec.read_info()?;
        let mut buf = vec![0; reader.output_buffer_size()];
        let info = reader.next_frame(&mut buf)?;
        buf.truncate(info.buffer_size());
        let (w, h) = (info.width as usize, info.height as usize);
        let pixels = match (info.color_type, info.bit_depth) {
            (png::ColorType::Rgba, png::BitDepth::Eight) => buf,
            (png::ColorType::Rgb, png::BitDepth::Eight) => {
                buf.chunks_exact(3).flat_map(|p| [p[0], p[1], p[2], 255]).collect()
            }
            (png::ColorType::Grayscale, png::BitDepth::Eight) => buf.iter().flat_map(|&g| [g, g, g, 255]).collect(),
            (png::ColorType::GrayscaleAlpha, png::BitDepth::Eight) => {
                buf.chunks_exact(2).flat_map(|p| [p[0], p[0], p[0], p[1]]).collect()
            }
            (ct, bd) => return Err(FrameError::PngLayout(ct, bd)),
        };
        Frame::from_rgba(w, h, pixels)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), FrameError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_png()?).map_err(|source| FrameError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Frame, FrameError> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| FrameError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Frame::from_png(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn crop_and_blit() {
        let mut f = Frame::new(4, 3);
        let red = Frame::filled(2, 2, [255, 0, 0, 255]);
        f.blit(&red, 1, 1).unwrap();
        assert_eq!(f.pixel(2, 2), [255, 0, 0, 255]);
        assert_eq!(f.pixel(0, 0), [0; 4]);
        assert_eq!(f.crop(1, 1, 2, 2).unwrap(), red);
        assert!(f.blit(&red, 3, 0).is_err());
    }

    #[test]
    fn bilinear_identity_at_pixel_centers() {
        let mut f = Frame::new(3, 2);
        f.set_pixel(1, 0, [10, 20, 30, 40]);
        assert_eq!(f.sample_bilinear(1.5 / 3.0, 0.5 / 2.0), [10, 20, 30, 40]);
        assert_eq!(f.sample_bilinear(1.0 / 3.0, 0.25), [5, 10, 15, 20]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn png_round_trip(w in 1usize..9, h in 1usize..9, seed in any::<u8>()) {
            let px: Vec<u8> = (0..4 * w * h).map(|i| (i as u8).wrapping_mul(31).wrapping_add(seed)).collect();
            let f = Frame::from_rgba(w, h, px).unwrap();
            prop_assert_eq!(Frame::from_png(&f.to_png().unwrap()).unwrap(), f);
        }
    }
}
