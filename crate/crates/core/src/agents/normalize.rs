/// Running per-feature mean/variance (Welford) used as an affine
/// observation normalizer.
///
/// Features whose observed spread is negligible relative to their magnitude
/// are centered but not rescaled, so the map stays finite and invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsNormalizer {
    count: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

const REL_FLOOR: f64 = 1e-8;

impl ObsNormalizer {
    pub fn new(dim: usize) -> Self {
        ObsNormalizer { count: 0.0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    pub fn from_parts(count: f64, mean: Vec<f64>, m2: Vec<f64>) -> Option<Self> {
        (mean.len() == m2.len() && count >= 0.0).then_some(ObsNormalizer { count, mean, m2 })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> f64 {
        self.count
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn m2(&self) -> &[f64] {
        &self.m2
    }

    pub fn update(&mut self, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim());
        self.count += 1.0;
        for ((m, s), &v) in self.mean.iter_mut().zip(&mut self.m2).zip(x) {
            let delta = v - *m;
            *m += delta / self.count;
            *s += delta * (v - *m);
        }
    }

    fn scale(&self, i: usize) -> f64 {
        if self.count < 2.0 {
            return 1.0;
        }
        let std = (self.m2[i] / self.count).sqrt();
        if std > REL_FLOOR * (1.0 + self.mean[i].abs()) {
            std
        } else {
            1.0
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(i, v)| (v - self.mean[i]) / self.scale(i)).collect()
    }

    pub fn denormalize(&self, z: &[f64]) -> Vec<f64> {
        z.iter().enumerate().map(|(i, v)| v * self.scale(i) + self.mean[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_batch_statistics() {
        let xs = [[1.0, 10.0], [3.0, 10.0], [5.0, 10.0]];
        let mut n = ObsNormalizer::new(2);
        xs.iter().for_each(|x| n.update(x));
        assert_eq!(n.mean(), &[3.0, 10.0]);
        let z = n.normalize(&[5.0, 12.0]);
        assert!((z[0] - 2.0 / (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        // constant feature: centered only
        assert_eq!(z[1], 2.0);
    }

    proptest! {
        #[test]
        fn round_trip(data in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 4), 1..30),
                      probe in prop::collection::vec(-1e6f64..1e6, 4)) {
            let mut n = ObsNormalizer::new(4);
            for x in &data {
                n.update(x);
            }
            let back = n.denormalize(&n.normalize(&probe));
            for (a, b) in back.iter().zip(&probe) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }
    }
}
