//! Dense cross-correlation through 2-D real FFTs.
//!
//! Valid placements of a template never wrap around, so the image is
//! transformed at its own size with no padding and the template is
//! zero-padded up to it.

use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::GrayImage;

pub(crate) struct CorrPlan {
    w: usize,
    h: usize,
    bins: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

/// Half spectrum stored column-major: `bins` columns of `h` values.
pub(crate) type Spectrum = Vec<Complex<f64>>;

impl CorrPlan {
    pub fn new(w: u32, h: u32) -> Self {
        let (w, h) = (w as usize, h as usize);
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        CorrPlan {
            w,
            h,
            bins: w / 2 + 1,
            r2c: real.plan_fft_forward(w),
            c2r: real.plan_fft_inverse(w),
            col_fwd: cplx.plan_fft_forward(h),
            col_inv: cplx.plan_fft_inverse(h),
        }
    }

    /// Spectrum of a `sw x sh` real signal placed at the origin and
    /// zero-padded to the plan size.
    fn forward(&self, sw: usize, sh: usize, value: impl Fn(usize, usize) -> f64) -> Spectrum {
        let mut spec = vec![Complex::new(0.0, 0.0); self.bins * self.h];
        let mut row = self.r2c.make_input_vec();
        let mut out = self.r2c.make_output_vec();
        for y in 0..sh.min(self.h) {
            row.iter_mut().for_each(|v| *v = 0.0);
            for (x, v) in row.iter_mut().enumerate().take(sw.min(self.w)) {
                *v = value(x, y);
            }
            self.r2c
                .process(&mut row, &mut out)
                .expect("buffer sizes come from the plan");
            for (k, c) in out.iter().enumerate() {
                spec[k * self.h + y] = *c;
            }
        }
        self.col_fwd.process(&mut spec);
        spec
    }

    pub fn image_spectrum(&self, img: &GrayImage) -> Spectrum {
        self.forward(img.width() as usize, img.height() as usize, |x, y| {
            f64::from(img.get(x as u32, y as u32))
        })
    }

    /// Spectrum of the template with its mean removed.
    pub fn template_spectrum(&self, tpl: &GrayImage) -> Spectrum {
        let n = tpl.data().len() as f64;
        let mean = tpl.data().iter().map(|&v| f64::from(v)).sum::<f64>() / n;
        self.forward(tpl.width() as usize, tpl.height() as usize, |x, y| {
            f64::from(tpl.get(x as u32, y as u32)) - mean
        })
    }

    /// Circular cross-correlation `c(x, y) = sum I(x+u, y+v) T(u, v)`,
    /// row-major `w x h`.
    pub fn correlate(&self, image: &Spectrum, template: &Spectrum) -> Vec<f64> {
        let mut prod: Spectrum = image
            .iter()
            .zip(template)
            .map(|(a, b)| a * b.conj())
            .collect();
        self.col_inv.process(&mut prod);
        let norm = 1.0 / (self.w * self.h) as f64;
        let mut out = vec![0.0; self.w * self.h];
        let mut row = self.c2r.make_input_vec();
        let mut real = self.c2r.make_output_vec();
        for y in 0..self.h {
            for (k, c) in row.iter_mut().enumerate() {
                *c = prod[k * self.h + y];
            }
            row[0].im = 0.0;
            if self.w % 2 == 0 {
                row[self.bins - 1].im = 0.0;
            }
            self.c2r
                .process(&mut row, &mut real)
                .expect("buffer sizes come from the plan");
            for (o, v) in out[y * self.w..(y + 1) * self.w].iter_mut().zip(&real) {
                *o = v * norm;
            }
        }
        out
    }
}
