//! Peak detection for refined number-of-states curves.
//!
//! A fine-grid Ω(E) scan shows one peak per energy level; this module
//! smooths the noisy curve with a Gaussian kernel and reports local
//! maxima whose prominence clears a threshold.

use serde::{Deserialize, Serialize};

/// Detector settings: smoothing width in gridpoints and the minimum
/// prominence (height above the higher of the two flanking saddles)
/// for a maximum to count as a peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakParams {
    pub smooth_sigma: f64,
    pub min_prominence: f64,
}

impl Default for PeakParams {
    fn default() -> Self {
        PeakParams {
            smooth_sigma: 1.0,
            min_prominence: 0.2,
        }
    }
}

/// A detected peak: gridpoint index, smoothed height, and prominence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub height: f64,
    pub prominence: f64,
}

/// Gaussian smoothing with reflected boundary padding; `sigma` in
/// gridpoints, `sigma <= 0` returns the input unchanged.
pub fn gaussian_smooth(values: &[f64], sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 || values.len() < 2 {
        return values.to_vec();
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let kernel: Vec<f64> = (-radius..=radius)
        .map(|k| (-(k as f64) * (k as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let norm: f64 = kernel.iter().sum();
    let n = values.len() as isize;
    let reflect = |i: isize| -> usize {
        // reflect about the endpoints until the index lands in range
        let mut i = i;
        loop {
            if i < 0 {
                i = -i;
            } else if i >= n {
                i = 2 * (n - 1) - i;
            } else {
                return i as usize;
            }
        }
    };
    (0..n)
        .map(|i| {
            kernel
                .iter()
                .enumerate()
                .map(|(j, &w)| w * values[reflect(i + j as isize - radius)])
                .sum::<f64>()
                / norm
        })
        .collect()
}

/// Local maxima of `values` with prominence at least `min_prominence`.
/// Plateaus count once, at their leftmost point; endpoints are not peaks.
pub fn find_peaks(values: &[f64], min_prominence: f64) -> Vec<Peak> {
    let n = values.len();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] <= values[i - 1] {
            i += 1;
            continue;
        }
        // scan over a possible plateau
        let mut j = i;
        while j + 1 < n && values[j + 1] == values[i] {
            j += 1;
        }
        if j + 1 < n && values[j + 1] < values[i] {
            let prominence = prominence_at(values, i);
            if prominence >= min_prominence {
                peaks.push(Peak {
                    index: i,
                    height: values[i],
                    prominence,
                });
            }
        }
        i = j + 1;
    }
    peaks
}

fn prominence_at(values: &[f64], peak: usize) -> f64 {
    let h = values[peak];
    // walk each direction until a strictly higher point; track the lowest
    // saddle on the way; an edge reached without a higher point counts as
    // an unbounded side
    let mut left_min = f64::INFINITY;
    let mut found_higher_left = false;
    for i in (0..peak).rev() {
        if values[i] > h {
            found_higher_left = true;
            break;
        }
        left_min = left_min.min(values[i]);
    }
    let mut right_min = f64::INFINITY;
    let mut found_higher_right = false;
    for &v in &values[peak + 1..] {
        if v > h {
            found_higher_right = true;
            break;
        }
        right_min = right_min.min(v);
    }
    let base = match (found_higher_left, found_higher_right) {
        (true, true) => left_min.max(right_min),
        (true, false) => left_min,
        (false, true) => right_min,
        (false, false) => left_min.min(right_min),
    };
    h - base
}

/// Smooth, detect, and map peak indices to energies on a uniform grid.
pub fn detect_level_energies(
    energies: &[f64],
    omega: &[f64],
    params: &PeakParams,
) -> Vec<(f64, Peak)> {
    let smoothed = gaussian_smooth(omega, params.smooth_sigma);
    find_peaks(&smoothed, params.min_prominence)
        .into_iter()
        .map(|p| (energies[p.index], p))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn smoothing_preserves_constant_and_mass() {
        let c = vec![2.5; 40];
        let s = gaussian_smooth(&c, 2.0);
        for &v in &s {
            assert_abs_diff_eq!(v, 2.5, epsilon = 1e-12);
        }
        // reflected padding preserves total mass of a symmetric bump
        let mut bump = vec![0.0; 41];
        for (i, b) in bump.iter_mut().enumerate() {
            let x = i as f64 - 20.0;
            *b = (-x * x / 8.0).exp();
        }
        let s = gaussian_smooth(&bump, 1.5);
        assert_abs_diff_eq!(
            s.iter().sum::<f64>(),
            bump.iter().sum::<f64>(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn zero_sigma_is_identity() {
        let v = vec![1.0, -2.0, 3.0];
        assert_eq!(gaussian_smooth(&v, 0.0), v);
    }

    #[test]
    fn finds_isolated_peaks_with_prominence() {
        let mut v = vec![0.0; 50];
        v[10] = 3.0;
        v[11] = 1.0;
        v[30] = 1.5;
        let peaks = find_peaks(&v, 1.0);
        assert_eq!(peaks.len(), 2);
        assert_eq!(peaks[0].index, 10);
        assert_abs_diff_eq!(peaks[0].prominence, 3.0, epsilon = 1e-12);
        assert_eq!(peaks[1].index, 30);
        assert_abs_diff_eq!(peaks[1].prominence, 1.5, epsilon = 1e-12);
        // raising the threshold drops the smaller peak
        assert_eq!(find_peaks(&v, 2.0).len(), 1);
    }

    #[test]
    fn shoulder_prominence_measured_from_saddle() {
        // secondary peak on the flank of a taller one: prominence is its
        // height above the saddle between them, not above zero
        let v = vec![0.0, 5.0, 2.0, 3.0, 0.0];
        let peaks = find_peaks(&v, 0.5);
        assert_eq!(peaks.len(), 2);
        assert_abs_diff_eq!(peaks[1].prominence, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn plateau_counts_once_and_endpoints_excluded() {
        let v = vec![9.0, 0.0, 4.0, 4.0, 4.0, 0.0, 9.0];
        let peaks = find_peaks(&v, 0.1);
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].index, 2);
    }

    #[test]
    fn smoothing_merges_subresolution_noise() {
        // jittery single bump: raw curve has many maxima, smoothed has one
        let mut v = Vec::new();
        for i in 0..101 {
            let x = (i as f64 - 50.0) / 10.0;
            let jitter = if i % 2 == 0 { 0.05 } else { -0.05 };
            v.push(2.0 * (-x * x / 2.0).exp() + jitter);
        }
        assert!(find_peaks(&v, 0.01).len() > 5);
        let detected = detect_level_energies(
            &(0..101).map(|i| i as f64).collect::<Vec<_>>(),
            &v,
            &PeakParams {
                smooth_sigma: 2.0,
                min_prominence: 0.2,
            },
        );
        assert_eq!(detected.len(), 1);
        assert!((detected[0].0 - 50.0).abs() <= 1.0);
    }
}
