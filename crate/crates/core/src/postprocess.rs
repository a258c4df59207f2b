//! Gaussian smoothing and height-thresholded peak picking on op series.

use crate::labeling::OpSeries;
use crate::scalar::Scalar;

/// Gaussian filter parameters, both in partition-index units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig<T: Scalar = f64> {
    pub sigma: T,
    pub radius: usize,
}

impl<T: Scalar> SmoothingConfig<T> {
    pub fn new(sigma: T, radius: usize) -> Self {
        Self { sigma, radius }
    }
}

/// Normalized Gaussian kernel of length `2 * radius + 1`, centered.
pub fn gaussian_kernel<T: Scalar>(sigma: T, radius: usize) -> Vec<T> {
    assert!(sigma > T::zero(), "sigma must be positive");
    let two = T::lit(2.0);
    let norm = T::one() / ((two * T::PI()).sqrt() * sigma);
    let r = radius as isize;
    let raw: Vec<T> = (-r..=r)
        .map(|x| {
            let x = T::from_isize(x).expect("kernel offset");
            norm * (-(x * x) / (two * sigma * sigma)).exp()
        })
        .collect();
    let total: T = raw.iter().copied().sum();
    raw.into_iter().map(|g| g / total).collect()
}

/// Normalized convolution. Near the edges the kernel is truncated to the
/// in-range support and renormalized over it.
pub fn smooth<T: Scalar>(series: &OpSeries<T>, config: &SmoothingConfig<T>) -> OpSeries<T> {
    let kernel = gaussian_kernel(config.sigma, config.radius);
    let p = series.values();
    let n = p.len() as isize;
    let r = config.radius as isize;
    let values = (0..n)
        .map(|k| {
            let (mut num, mut den) = (T::zero(), T::zero());
            for x in -r..=r {
                let idx = k - x;
                if (0..n).contains(&idx) {
                    let g = kernel[(x + r) as usize];
                    num = num + p[idx as usize] * g;
                    den = den + g;
                }
            }
            num / den
        })
        .collect();
    series
        .with_values(values)
        .expect("smoothing preserves length")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak<T: Scalar = f64> {
    /// Partition index of the peak.
    pub index: usize,
    /// Partition mid-time `t_k + w_s / 2`.
    pub time: T,
    pub height: T,
}

/// Peaks in increasing time order, all at or above the threshold.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PeakList<T: Scalar = f64> {
    pub peaks: Vec<Peak<T>>,
}

impl<T: Scalar> PeakList<T> {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn times(&self) -> Vec<T> {
        self.peaks.iter().map(|p| p.time).collect()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.peaks.iter().map(|p| p.index).collect()
    }
}

/// Indices of strict local maxima; a flat plateau counts once, at its left
/// end, when both flanking values are strictly lower. Endpoints never
/// qualify.
pub fn local_maxima<T: Scalar>(values: &[T]) -> Vec<usize> {
    let n = values.len();
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                out.push(i);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Local maxima with height `>= threshold`.
pub fn find_peaks<T: Scalar>(series: &OpSeries<T>, threshold: T) -> PeakList<T> {
    let values = series.values();
    let peaks = local_maxima(values)
        .into_iter()
        .filter(|&k| values[k] >= threshold)
        .map(|k| Peak {
            index: k,
            time: series.mid_time(k),
            height: values[k],
        })
        .collect();
    PeakList { peaks }
}
