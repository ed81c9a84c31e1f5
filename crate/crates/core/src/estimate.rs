//! Small estimators used by the harness and the acceptance checks.

use rand::Rng;

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Standard error of the mean of a correlated series by non-overlapping
/// batch means.
pub fn batch_means_se(series: &[f64], batches: usize) -> Option<f64> {
    let batches = batches.max(2);
    let size = series.len() / batches;
    if size == 0 {
        return None;
    }
    let means: Vec<f64> = series
        .chunks_exact(size)
        .take(batches)
        .map(|c| c.iter().sum::<f64>() / size as f64)
        .collect();
    let m = mean(&means)?;
    let var = means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (batches - 1) as f64;
    Some((var / batches as f64).sqrt())
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_ci<R: Rng + ?Sized>(xs: &[f64], resamples: usize, level: f64, rng: &mut R) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len();
    let means: Vec<f64> = (0..resamples.max(1))
        .map(|_| (0..n).map(|_| xs[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let a = (1.0 - level) / 2.0;
    Some((quantile(&means, a)?, quantile(&means, 1.0 - a)?))
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let mx = mean(xs)?;
    let my = mean(ys)?;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn quantiles() {
        let xs = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&xs, 0.0), Some(1.0));
        assert_eq!(quantile(&xs, 1.0), Some(4.0));
        assert_eq!(quantile(&xs, 0.5), Some(2.5));
        assert_eq!(quantile(&[], 0.5), None);
    }

    #[test]
    fn line_fit() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| -0.5 * x + 2.0).collect();
        let (s, i) = least_squares(&xs, &ys).unwrap();
        assert!((s + 0.5).abs() < 1e-12 && (i - 2.0).abs() < 1e-12);
        assert!(least_squares(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn batch_se_of_iid_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let xs: Vec<f64> = (0..100_000).map(|_| rng.gen::<f64>()).collect();
        let se = batch_means_se(&xs, 50).unwrap();
        let want = (1.0f64 / 12.0 / 100_000.0).sqrt();
        assert!((se / want - 1.0).abs() < 0.4, "{se} vs {want}");
    }

    #[test]
    fn bootstrap_shrinks_with_sample_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let width = |n: usize, rng: &mut ChaCha8Rng| {
            let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let (lo, hi) = bootstrap_ci(&xs, 2000, 0.95, rng).unwrap();
            hi - lo
        };
        let w16 = width(16, &mut rng);
        let w256 = width(256, &mut rng);
        // expected ratio sqrt(16) = 4
        assert!(w16 / w256 > 2.5 && w16 / w256 < 6.0, "{w16} {w256}");
    }
}
