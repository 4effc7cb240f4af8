//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use hetmac::num_complex::Complex64;

/// Gauss-Hermite nodes and weights for `int e^{-t^2} f(t) dt`, by Newton
/// iteration on the orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..n.div_ceil(2) {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (pim4, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 3e-14 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Per-symbol moments of the density of a uniform point set on a unit-noise
/// complex AWGN channel, by 2-D Gauss-Hermite quadrature over the noise.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureMoments {
    pub mi: f64,
    pub dispersion: f64,
    pub third_moment: f64,
}

/// `i(x; y) = log2 [ exp(-|y-x|^2) / mean_x' exp(-|y-x'|^2) ]` at `y = x + z`.
fn density(points: &[Complex64], x: Complex64, z: Complex64) -> f64 {
    let terms: Vec<f64> = points
        .iter()
        .map(|p| -(x + z - p).norm_sqr() + z.norm_sqr())
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = top + terms.iter().map(|t| (t - top).exp()).sum::<f64>().ln();
    ((points.len() as f64).ln() - lse) / std::f64::consts::LN_2
}

pub fn qam_awgn_moments(points: &[Complex64], nodes: usize) -> QuadratureMoments {
    let (t, w) = gauss_hermite(nodes);
    // z = a + i b with a, b ~ N(0, 1/2): E f = (1/pi) sum w_i w_j f(t_i + i t_j).
    let mut values = Vec::new();
    for &x in points {
        for (i, &ti) in t.iter().enumerate() {
            for (j, &tj) in t.iter().enumerate() {
                let weight = w[i] * w[j] / std::f64::consts::PI / points.len() as f64;
                values.push((weight, density(points, x, Complex64::new(ti, tj))));
            }
        }
    }
    let mi: f64 = values.iter().map(|(w, v)| w * v).sum();
    let dispersion: f64 = values.iter().map(|(w, v)| w * (v - mi).powi(2)).sum();
    let third_moment: f64 = values.iter().map(|(w, v)| w * (v - mi).abs().powi(3)).sum();
    QuadratureMoments {
        mi,
        dispersion,
        third_moment,
    }
}

/// Square QAM with `2^bits` points and minimum distance `d`, built here
/// rather than taken from the library.
pub fn square_qam(bits: u32, d: f64) -> Vec<Complex64> {
    let side = 1usize << (bits / 2);
    let c = (side as f64 - 1.0) / 2.0;
    let mut pts = Vec::new();
    for a in 0..side {
        for b in 0..side {
            pts.push(Complex64::new((a as f64 - c) * d, (b as f64 - c) * d));
        }
    }
    pts
}

/// Square QAM scaled to average energy `snr`.
pub fn qam_at_snr(bits: u32, snr: f64) -> Vec<Complex64> {
    let m = f64::from(1u32 << bits);
    let d = (6.0 * snr / (m - 1.0)).sqrt();
    square_qam(bits, d)
}
