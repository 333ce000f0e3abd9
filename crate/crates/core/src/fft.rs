//! FFT-backed polynomial composition for long PGF coefficient tables (f64 only).

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

#[inline]
fn horner(poly: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(poly[poly.len() - 1], 0.0);
    for &c in poly.iter().rev().skip(1) {
        acc = acc * z + c;
    }
    acc
}

/// Coefficients `0..=keep` of `poly(s(z))`.
///
/// The transform length exceeds the full product degree, so nothing wraps
/// around; entries beyond the true degree come back as zero.
pub(crate) fn compose(poly: &[f64], s: &[f64], keep: usize) -> Vec<f64> {
    let deg_s = s.len().saturating_sub(1);
    let full = (poly.len() - 1) * deg_s;
    let len = (full + 1).next_power_of_two();
    let mut buf: Vec<Complex64> = Vec::with_capacity(len);
    buf.extend(s.iter().map(|&c| Complex64::new(c, 0.0)));
    buf.resize(len, Complex64::new(0.0, 0.0));

    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for v in buf.iter_mut() {
        *v = horner(poly, *v);
    }
    planner.plan_fft_inverse(len).process(&mut buf);

    let scale = 1.0 / len as f64;
    let mut out = vec![0.0; keep + 1];
    for (o, v) in out.iter_mut().zip(buf.iter()).take(full.min(keep) + 1) {
        *o = v.re * scale;
    }
    out
}

/// Coefficients of the `depth`-fold composition of `poly` (which must vanish
/// at 0), obtained by iterating `poly` pointwise on the unit circle and
/// transforming back once.
///
/// `degree` is `N^depth`. The factor z is divided out before the inverse
/// transform, so a transform length equal to `degree` suffices.
pub(crate) fn iterate_on_circle(poly: &[f64], depth: u32, degree: usize) -> Vec<f64> {
    let len = degree.next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let half = len / 2;
    for k in 0..=half.min(len - 1) {
        let angle = 2.0 * PI * (k as f64) / (len as f64);
        let w = Complex64::new(angle.cos(), angle.sin());
        let mut z = w;
        for _ in 0..depth {
            z = horner(poly, z);
        }
        buf[k] = z * w.conj();
    }
    // Real coefficients: values on the lower half circle are conjugates.
    for k in half + 1..len {
        buf[k] = buf[len - k].conj();
    }
    // c_j = (1/L) Σ_k f(w_k) w_k^{-j}: a forward transform in rustfft's sign
    // convention.
    FftPlanner::<f64>::new()
        .plan_fft_forward(len)
        .process(&mut buf);

    let scale = 1.0 / len as f64;
    let mut out = vec![0.0; degree + 1];
    for j in 0..degree {
        out[j + 1] = buf[j].re * scale;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_matches_hand_expansion() {
        // (1+z)^2 composed into p(w) = w^2 + 1
        let out = compose(&[1.0, 0.0, 1.0], &[1.0, 1.0], 4);
        let expect = [2.0, 2.0, 1.0, 0.0, 0.0];
        for (a, b) in out.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn circle_iteration_reproduces_two_fold_composition() {
        let p = [0.0, 0.1, 0.5, 0.4];
        let two = iterate_on_circle(&p, 2, 9);
        let direct = compose(&p, &p, 9);
        for (a, b) in two.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((two[1] - 0.01).abs() < 1e-16);
    }
}
