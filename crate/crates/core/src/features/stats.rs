//! Scalar statistics over a series. All functions return finite values for
//! finite input; degenerate cases (zero variance, empty spectrum) yield 0.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub fn mean(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn max(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn min(x: &[f64]) -> f64 {
    x.iter().copied().fold(f64::INFINITY, f64::min)
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolated quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(x: &[f64]) -> f64 {
    quantile_sorted(&sorted(x), 0.5)
}

/// Median absolute deviation from the median.
pub fn mad(x: &[f64]) -> f64 {
    let m = median(x);
    let dev: Vec<f64> = x.iter().map(|v| (v - m).abs()).collect();
    median(&dev)
}

/// Sum of squares divided by the number of values.
pub fn energy(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

pub fn iqr(x: &[f64]) -> f64 {
    let s = sorted(x);
    quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)
}

/// Signal magnitude area: mean absolute value per sample.
pub fn sma(x: &[f64]) -> f64 {
    mean(&x.iter().map(|v| v.abs()).collect::<Vec<_>>())
}

/// Shannon entropy (nats) of the normalized magnitudes `|x_i| / sum |x|`.
pub fn entropy(x: &[f64]) -> f64 {
    let total: f64 = x.iter().map(|v| v.abs()).sum();
    if total <= 0.0 {
        return 0.0;
    }
    -x.iter()
        .map(|v| v.abs() / total)
        .filter(|&p| p > 0.0)
        .map(|p| p * p.ln())
        .sum::<f64>()
}

/// Pearson correlation; 0 when either series has zero variance.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len().min(y.len());
    if n == 0 {
        return 0.0;
    }
    let (mx, my) = (mean(&x[..n]), mean(&y[..n]));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let (dx, dy) = (x[i] - mx, y[i] - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
}

/// Burg estimate of AR coefficients `a_1..a_order` in the convention
/// `x[n] + a_1 x[n-1] + ... + a_p x[n-p] = e[n]`.
pub fn ar_burg(x: &[f64], order: usize) -> Vec<f64> {
    let mut a = vec![1.0];
    if x.len() < 2 {
        return vec![0.0; order];
    }
    let mut ef: Vec<f64> = x[1..].to_vec();
    let mut eb: Vec<f64> = x[..x.len() - 1].to_vec();
    for _ in 0..order {
        let num: f64 = ef.iter().zip(&eb).map(|(f, b)| f * b).sum();
        let den: f64 = ef.iter().zip(&eb).map(|(f, b)| f * f + b * b).sum();
        let k = if den > 0.0 { -2.0 * num / den } else { 0.0 };

        let mut next = a.clone();
        next.push(0.0);
        for j in 1..next.len() {
            next[j] += k * a.get(next.len() - 1 - j).copied().unwrap_or(0.0);
        }
        a = next;

        if ef.len() < 2 {
            ef.clear();
            eb.clear();
            continue;
        }
        let nf: Vec<f64> = ef.iter().zip(&eb).map(|(f, b)| f + k * b).collect();
        let nb: Vec<f64> = ef.iter().zip(&eb).map(|(f, b)| b + k * f).collect();
        ef = nf[1..].to_vec();
        eb = nb[..nb.len() - 1].to_vec();
    }
    a[1..].to_vec()
}

/// One-sided magnitude spectrum of the mean-removed series, zero-padded to
/// `n_fft` when that is longer than the series. Returns bins `0..=n_fft/2`.
pub fn magnitude_spectrum(x: &[f64], n_fft: usize) -> Vec<f64> {
    let n_fft = n_fft.max(x.len()).max(1);
    let m = mean(x);
    let mut buf: Vec<Complex<f64>> = x.iter().map(|v| Complex::new(v - m, 0.0)).collect();
    buf.resize(n_fft, Complex::new(0.0, 0.0));
    FftPlanner::new().plan_fft_forward(n_fft).process(&mut buf);
    buf[..=n_fft / 2].iter().map(|c| c.norm()).collect()
}

/// Index of the largest bin (first on ties).
pub fn max_index(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if *v > x[best] {
            best = i;
        }
    }
    best
}

/// Skewness and excess kurtosis of a magnitude spectrum read as a
/// distribution over bin index. Both are 0 for a degenerate spectrum.
pub fn spectral_shape(spectrum: &[f64]) -> (f64, f64) {
    let total: f64 = spectrum.iter().sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let centroid = spectrum
        .iter()
        .enumerate()
        .map(|(k, p)| k as f64 * p)
        .sum::<f64>()
        / total;
    let moment = |r: i32| {
        spectrum
            .iter()
            .enumerate()
            .map(|(k, p)| p * (k as f64 - centroid).powi(r))
            .sum::<f64>()
            / total
    };
    let var = moment(2);
    if var <= 1e-24 {
        return (0.0, 0.0);
    }
    let sd = var.sqrt();
    (moment(3) / sd.powi(3), moment(4) / var.powi(2) - 3.0)
}

/// Sum of squared magnitudes over `n_bands` equal contiguous bands of the
/// first `n_bins` bins, each divided by the series length.
pub fn band_energies(spectrum: &[f64], n_bins: usize, n_bands: usize, len: usize) -> Vec<f64> {
    let width = n_bins / n_bands;
    (0..n_bands)
        .map(|b| {
            spectrum
                .iter()
                .skip(b * width)
                .take(width)
                .map(|v| v * v)
                .sum::<f64>()
                / len.max(1) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn basic_statistics() {
        let x = [1.0, -1.0, 1.0, -1.0];
        assert_eq!(energy(&x), 1.0);
        assert_eq!(mean(&x), 0.0);
        assert_eq!(std(&x), 1.0);
        assert_eq!(sma(&x), 1.0);
        assert_eq!(mad(&[1.0, 2.0, 3.0, 4.0, 100.0]), 1.0);
        assert_eq!(iqr(&[1.0, 2.0, 3.0, 4.0, 5.0]), 2.0);
        assert_eq!(quantile_sorted(&[0.0, 10.0], 0.25), 2.5);
        assert!((entropy(&[1.0, 1.0, 1.0, 1.0]) - 4f64.ln()).abs() < 1e-12);
        assert_eq!(entropy(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn correlation_cases() {
        let x = [1.0, 2.0, 4.0, 8.0];
        assert!((correlation(&x, &x) - 1.0).abs() < 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -2.0 * v + 1.0).collect();
        assert!((correlation(&x, &neg) + 1.0).abs() < 1e-12);
        assert_eq!(correlation(&x, &[3.0; 4]), 0.0);
    }

    #[test]
    fn burg_recovers_ar2() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut x = vec![0.0f64; 20000];
        for n in 2..x.len() {
            let e: f64 = StandardNormal.sample(&mut rng);
            x[n] = 0.75 * x[n - 1] - 0.5 * x[n - 2] + e;
        }
        let a = ar_burg(&x, 4);
        assert!((a[0] + 0.75).abs() < 0.03, "{a:?}");
        assert!((a[1] - 0.5).abs() < 0.03, "{a:?}");
        assert!(a[2].abs() < 0.03 && a[3].abs() < 0.03, "{a:?}");
    }

    #[test]
    fn burg_degenerate_inputs_are_finite() {
        for x in [vec![0.0; 10], vec![5.0; 10], vec![1.0], vec![1.0, 2.0, 3.0]] {
            let a = ar_burg(&x, 4);
            assert_eq!(a.len(), 4);
            assert!(a.iter().all(|v| v.is_finite()), "{x:?} -> {a:?}");
        }
    }

    #[test]
    fn spectrum_peak_bin_of_two_hz_tone() {
        // independent DFT oracle: bin k of an 80-sample window at 20 Hz is k/4 Hz
        let x: Vec<f64> = (0..80)
            .map(|i| (2.0 * std::f64::consts::PI * 2.0 * i as f64 / 20.0).sin())
            .collect();
        let dft_mag = |k: usize| {
            let (mut re, mut im) = (0.0, 0.0);
            for (n, v) in x.iter().enumerate() {
                let ang = -2.0 * std::f64::consts::PI * (k * n) as f64 / 80.0;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            (re * re + im * im).sqrt()
        };
        let oracle = (0..=40).max_by(|&a, &b| dft_mag(a).total_cmp(&dft_mag(b))).unwrap();
        assert_eq!(oracle, 8);
        let s = magnitude_spectrum(&x, 80);
        assert_eq!(s.len(), 41);
        assert_eq!(max_index(&s), oracle);
    }

    #[test]
    fn spectral_skewness_of_noise_is_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 1000;
        let mut acc = 0.0;
        for _ in 0..trials {
            let x: Vec<f64> = (0..80).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
            acc += spectral_shape(&magnitude_spectrum(&x, 80)).0;
        }
        let m = acc / trials as f64;
        assert!(m.abs() < 0.5, "mean skewness {m}");
    }

    #[test]
    fn band_energy_partition() {
        let spec = vec![1.0; 65];
        let bands = band_energies(&spec, 64, 8, 4);
        assert_eq!(bands, vec![2.0; 8]);
    }
}
