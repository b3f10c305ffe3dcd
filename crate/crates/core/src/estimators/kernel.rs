use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_BANDWIDTH_CONST: f64 = 1.0;
/// Kernel estimates are clipped to `[KERNEL_CLIP, 1 - KERNEL_CLIP]`.
pub const KERNEL_CLIP: f64 = 1e-6;

/// Nadaraya–Watson estimate of `P(Y = 1 | X = x)` with the Epanechnikov kernel
/// `K(u) = 3/4 (1 - u²)` on `|u| < 1`.
///
/// One-dimensional inputs are answered from prefix sums over the sorted training
/// points in `O(log n)`; higher dimensions scan the training set.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSmoother<T> {
    train: Dataset<T>,
    bandwidth: f64,
    beta: T,
    global_rate: f64,
    index: Option<SortedIndex>,
    train_ref: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
struct SortedIndex {
    center: f64,
    xs: Vec<f64>,
    // prefix sums of w, w·u, w·u² (u = x - center), over all points and over positives
    all: [Vec<f64>; 3],
    pos: [Vec<f64>; 3],
}

impl SortedIndex {
    fn build<T: Scalar>(data: &Dataset<T>) -> Self {
        let n = data.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| data.row(a)[0].as_f64().total_cmp(&data.row(b)[0].as_f64()));
        let center = data.rows().map(|r| r[0].as_f64()).sum::<f64>() / n as f64;
        let scale = n as f64;
        let mut xs = Vec::with_capacity(n);
        let mut all: [Vec<f64>; 3] = Default::default();
        let mut pos: [Vec<f64>; 3] = Default::default();
        for v in all.iter_mut().chain(pos.iter_mut()) {
            v.reserve(n + 1);
            v.push(0.0);
        }
        for &i in &order {
            let x = data.row(i)[0].as_f64();
            xs.push(x);
            let u = x - center;
            // weights scaled so that unweighted data contribute 1 per point
            let w = data.weight(i).as_f64() * scale;
            let terms = [w, w * u, w * u * u];
            let is_pos = data.labels()[i].is_pos();
            for k in 0..3 {
                let a = *all[k].last().unwrap();
                all[k].push(a + terms[k]);
                let p = *pos[k].last().unwrap();
                pos[k].push(p + if is_pos { terms[k] } else { 0.0 });
            }
        }
        Self { center, xs, all, pos }
    }

    /// `(Σ K, Σ K·1{y=+1}, count)` over points with `|x - xi| < h`.
    fn window(&self, x: f64, h: f64) -> (f64, f64, usize) {
        let lo = self.xs.partition_point(|&v| v <= x - h);
        let hi = self.xs.partition_point(|&v| v < x + h);
        if hi <= lo {
            return (0.0, 0.0, 0);
        }
        let u = x - self.center;
        let h2 = h * h;
        let kernel_sum = |s: &[Vec<f64>; 3]| -> f64 {
            let s0 = s[0][hi] - s[0][lo];
            let s1 = s[1][hi] - s[1][lo];
            let s2 = s[2][hi] - s[2][lo];
            // Σ (1 - (u - ui)²/h²)
            0.75 * (s0 - (u * u * s0 - 2.0 * u * s1 + s2) / h2)
        };
        (kernel_sum(&self.all), kernel_sum(&self.pos), hi - lo)
    }
}

impl<T: Scalar> KernelSmoother<T> {
    /// Smoother with an explicit bandwidth.
    pub fn with_bandwidth(train: Dataset<T>, bandwidth: T, beta: T) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyData);
        }
        if !(bandwidth > T::zero()) {
            return Err(Error::InvalidInput(format!("bandwidth must be positive, got {bandwidth}")));
        }
        let global_rate = train.positive_rate().as_f64();
        let index = (train.dim() == 1).then(|| SortedIndex::build(&train));
        Ok(Self { train, bandwidth: bandwidth.as_f64(), beta, global_rate, index, train_ref: None })
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    pub fn bandwidth(&self) -> T {
        T::lit(self.bandwidth)
    }

    pub fn beta(&self) -> T {
        self.beta
    }

    pub fn train(&self) -> &Dataset<T> {
        &self.train
    }

    pub fn train_ref(&self) -> Option<&str> {
        self.train_ref.as_deref()
    }

    pub fn set_train_ref(&mut self, path: String) {
        self.train_ref = Some(path);
    }

    /// Clipped estimate; windows without training points fall back to the global
    /// positive rate.
    pub fn predict(&self, x: &[T]) -> T {
        let h = self.bandwidth;
        let (den, num, count) = match &self.index {
            Some(idx) => idx.window(x[0].as_f64(), h),
            None => self.brute_window(x, h),
        };
        let raw = if count == 0 || !(den > 0.0) { self.global_rate } else { (num / den).clamp(0.0, 1.0) };
        T::lit(raw.clamp(KERNEL_CLIP, 1.0 - KERNEL_CLIP))
    }

    fn brute_window(&self, x: &[T], h: f64) -> (f64, f64, usize) {
        let scale = self.train.len() as f64;
        let (mut den, mut num, mut count) = (0.0, 0.0, 0);
        for (i, row) in self.train.rows().enumerate() {
            let d2: f64 = row.iter().zip(x).map(|(&a, &b)| (a.as_f64() - b.as_f64()).powi(2)).sum();
            let u2 = d2 / (h * h);
            if u2 < 1.0 {
                let k = 0.75 * (1.0 - u2) * self.train.weight(i).as_f64() * scale;
                den += k;
                if self.train.labels()[i].is_pos() {
                    num += k;
                }
                count += 1;
            }
        }
        (den, num, count)
    }
}

/// Fits a smoother with bandwidth `h = bandwidth_const · n^(-1/(2β + d))`.
pub fn fit_kernel_smoother<T: Scalar>(data: &Dataset<T>, beta: T, bandwidth_const: T) -> Result<KernelSmoother<T>> {
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    if data.len() < 10 {
        return Err(Error::InvalidInput(format!("kernel smoother needs n >= 10, got {}", data.len())));
    }
    if !(beta > T::zero()) || !(bandwidth_const > T::zero()) {
        return Err(Error::InvalidInput("beta and bandwidth constant must be positive".into()));
    }
    let n = data.len() as f64;
    let d = data.dim() as f64;
    let h = bandwidth_const.as_f64() * n.powf(-1.0 / (2.0 * beta.as_f64() + d));
    KernelSmoother::with_bandwidth(data.clone(), T::lit(h), beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use crate::synth::{HolderEta, HolderModel};

    #[test]
    fn constant_features_give_positive_rate() {
        let labels: Vec<Label> = (0..40).map(|i| if i % 4 == 0 { Label::Pos } else { Label::Neg }).collect();
        let data = Dataset::<f64>::new(1, vec![0.3; 40], labels, None).unwrap();
        let k = fit_kernel_smoother(&data, 1.0, 1.0).unwrap();
        for &x in &[0.3, 0.31, 5.0, -2.0] {
            assert!((k.predict(&[x]) - 0.25).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn sorted_index_matches_brute_force() {
        let data = HolderModel::<f64>::sine(1.0).sample(2_000, 5);
        let k = fit_kernel_smoother(&data, 1.0, 1.0).unwrap();
        let idx = k.index.as_ref().unwrap();
        for i in 0..=200 {
            let x = -0.05 + 1.1 * i as f64 / 200.0;
            let (d1, n1, c1) = idx.window(x, k.bandwidth);
            let (d2, n2, c2) = k.brute_window(&[x], k.bandwidth);
            assert_eq!(c1, c2);
            assert!((d1 - d2).abs() < 1e-8 * (1.0 + d2.abs()) && (n1 - n2).abs() < 1e-8 * (1.0 + n2.abs()));
        }
    }

    #[test]
    fn empty_window_falls_back() {
        let data = Dataset::new(
            1,
            (0..10).map(|i| i as f64 * 0.01).collect(),
            (0..10).map(|i| if i < 3 { Label::Pos } else { Label::Neg }).collect(),
            None,
        )
        .unwrap();
        let k = KernelSmoother::with_bandwidth(data, 0.05, 1.0).unwrap();
        assert!((k.predict(&[10.0]) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn output_is_clipped() {
        let data = Dataset::new(1, (0..10).map(f64::from).collect(), vec![Label::Pos; 10], None).unwrap();
        let k = fit_kernel_smoother(&data, 1.0, 1.0).unwrap();
        assert_eq!(k.predict(&[4.0]), 1.0 - KERNEL_CLIP);
    }

    #[test]
    fn pure_noise_labels_stay_near_half() {
        let h = HolderModel::<f64>::new(HolderEta::Half, 1.0).unwrap();
        let data = h.sample(10_000, 3);
        let k = fit_kernel_smoother(&data, 1.0, 1.0).unwrap();
        let worst = (0..=100).map(|i| (k.predict(&[i as f64 / 100.0]) - 0.5).abs()).fold(0.0, f64::max);
        assert!(worst <= 0.1, "{worst}");
    }

    #[test]
    fn multivariate_smoother_runs() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![(i % 7) as f64 / 7.0, (i % 5) as f64 / 5.0]).collect();
        let labels = (0..50).map(|i| if i % 7 > 3 { Label::Pos } else { Label::Neg }).collect();
        let data = Dataset::from_rows(&rows, labels).unwrap();
        let k = fit_kernel_smoother(&data, 1.0, 1.0).unwrap();
        let p = k.predict(&[0.9, 0.5]);
        assert!(p > 0.5 && p < 1.0);
    }

    #[test]
    fn rejects_small_samples() {
        let data = Dataset::new(1, vec![0.0; 5], vec![Label::Pos; 5], None).unwrap();
        assert!(fit_kernel_smoother(&data, 1.0, 1.0).is_err());
    }
}
