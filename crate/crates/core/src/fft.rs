//! Internal frequency-domain helpers for stationary Gaussian filters.

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Squared magnitude of the DFT of a centered odd-length kernel embedded
/// circularly in a length-`n` axis. Evaluated directly; kernels are short.
pub fn kernel_power_spectrum(kernel: &[f64], n: usize) -> Vec<f64> {
    let mid = (kernel.len() / 2) as isize;
    let mut out = Vec::with_capacity(n);
    for u in 0..n {
        let (mut re, mut im) = (0.0f64, 0.0f64);
        for (j, &k) in kernel.iter().enumerate() {
            let shift = j as isize - mid;
            let angle = -2.0 * std::f64::consts::PI * (u as f64) * (shift as f64) / (n as f64);
            re += k * angle.cos();
            im += k * angle.sin();
        }
        out.push(re * re + im * im);
    }
    out
}

fn fft2(buf: &mut [Complex64], h: usize, w: usize, inverse: bool) {
    let (row_fft, col_fft) = PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        if inverse {
            (planner.plan_fft_inverse(w), planner.plan_fft_inverse(h))
        } else {
            (planner.plan_fft_forward(w), planner.plan_fft_forward(h))
        }
    });
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }
    let mut col = vec![Complex64::default(); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }
}

/// Applies the inverse of a stationary circular filter: returns
/// `IFFT( FFT(field) / lambda )` for a real single-channel field, where
/// `lambda[y * w + x]` is the filter's (real, positive) eigenvalue at
/// that frequency pair.
pub fn apply_inverse_filter(field: &[f64], h: usize, w: usize, lambda: &[f64]) -> Vec<f64> {
    debug_assert_eq!(field.len(), h * w);
    debug_assert_eq!(lambda.len(), h * w);
    let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft2(&mut buf, h, w, false);
    for (v, &l) in buf.iter_mut().zip(lambda.iter()) {
        *v /= l;
    }
    fft2(&mut buf, h, w, true);
    let norm = 1.0 / (h * w) as f64;
    buf.iter().map(|v| v.re * norm).collect()
}
