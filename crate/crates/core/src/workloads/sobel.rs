//! Gaussian smoothing followed by Sobel edge magnitude.
//!
//! Both stages use 3x3 kernels with edge replication at the borders. The
//! blur is the binomial kernel divided by 16 with rounding to nearest; the
//! magnitude is |Gx| + |Gy| clamped to 255.

use super::WorkloadError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel buffer size");
        GrayImage { width, height, pixels }
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    /// Pixel at a possibly out-of-range coordinate, clamped to the border.
    fn clamped(&self, x: isize, y: isize) -> i32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.pixels[y * self.width + x] as i32
    }

    fn check(&self) -> Result<(), WorkloadError> {
        if self.width < 3 || self.height < 3 {
            return Err(WorkloadError::ImageTooSmall {
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    fn map3x3(&self, f: impl Fn(&dyn Fn(isize, isize) -> i32) -> u8) -> GrayImage {
        let mut out = Vec::with_capacity(self.pixels.len());
        for y in 0..self.height as isize {
            for x in 0..self.width as isize {
                out.push(f(&|dx, dy| self.clamped(x + dx, y + dy)));
            }
        }
        GrayImage::new(self.width, self.height, out)
    }
}

pub fn gaussian(img: &GrayImage) -> Result<GrayImage, WorkloadError> {
    img.check()?;
    Ok(img.map3x3(|p| {
        let s = p(-1, -1)
            + 2 * p(0, -1)
            + p(1, -1)
            + 2 * p(-1, 0)
            + 4 * p(0, 0)
            + 2 * p(1, 0)
            + p(-1, 1)
            + 2 * p(0, 1)
            + p(1, 1);
        ((s + 8) / 16) as u8
    }))
}

pub fn sobel(img: &GrayImage) -> Result<GrayImage, WorkloadError> {
    img.check()?;
    Ok(img.map3x3(|p| {
        let gx = (p(1, -1) + 2 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2 * p(-1, 0) + p(-1, 1));
        let gy = (p(-1, 1) + 2 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2 * p(0, -1) + p(1, -1));
        (gx.abs() + gy.abs()).min(255) as u8
    }))
}

/// The benchmark kernel: blur, then edge magnitude.
pub fn sobel_pipeline(img: &GrayImage) -> Result<GrayImage, WorkloadError> {
    sobel(&gaussian(img)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_no_edges() {
        let out = sobel_pipeline(&GrayImage::filled(8, 6, 200)).unwrap();
        assert_eq!((out.width, out.height), (8, 6));
        assert!(out.pixels.iter().all(|&v| v == 0));
    }

    #[test]
    fn too_small() {
        assert_eq!(
            sobel_pipeline(&GrayImage::filled(2, 5, 0)),
            Err(WorkloadError::ImageTooSmall { width: 2, height: 5 })
        );
    }

    #[test]
    fn vertical_step_peaks_at_the_edge() {
        let (w, h) = (10, 6);
        let px = (0..w * h).map(|i| if i % w < 5 { 0 } else { 255 }).collect();
        let out = sobel(&GrayImage::new(w, h, px)).unwrap();
        for y in 0..h {
            assert_eq!(out.get(4, y), 255);
            assert_eq!(out.get(5, y), 255);
            assert_eq!(out.get(1, y), 0);
            assert_eq!(out.get(8, y), 0);
        }
    }
}
