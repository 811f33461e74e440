use crate::error::ModelError;

/// Periodic box ℤ_N^d. Sites are indexed with axis 0 varying fastest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    pub dimension: usize,
    pub extent: usize,
}

/// Representative of x mod N in (−N/2, N/2].
#[inline]
pub fn minimal_image_component(x: i64, n: usize) -> i64 {
    let n = n as i64;
    let mut r = x.rem_euclid(n);
    if 2 * r > n {
        r -= n;
    }
    r
}

pub fn minimal_image(x: &[i64], n: usize) -> Vec<i64> {
    x.iter().map(|&c| minimal_image_component(c, n)).collect()
}

impl LatticeSpec {
    pub fn new(dimension: usize, extent: usize) -> Result<Self, ModelError> {
        if dimension == 0 || extent < 2 {
            return Err(ModelError::BadLattice { dimension, extent });
        }
        Ok(Self { dimension, extent })
    }

    pub fn sites(&self) -> usize {
        self.extent.pow(self.dimension as u32)
    }

    /// Coordinates in [0, N)^d.
    pub fn coords(&self, mut idx: usize) -> Vec<i64> {
        let mut c = Vec::with_capacity(self.dimension);
        for _ in 0..self.dimension {
            c.push((idx % self.extent) as i64);
            idx /= self.extent;
        }
        c
    }

    /// Index of a coordinate vector, wrapping each component.
    pub fn index(&self, coords: &[i64]) -> usize {
        debug_assert_eq!(coords.len(), self.dimension);
        let n = self.extent as i64;
        let mut idx = 0usize;
        for &c in coords.iter().rev() {
            idx = idx * self.extent + c.rem_euclid(n) as usize;
        }
        idx
    }

    /// Index of site `idx` displaced by `zeta`.
    pub fn shift(&self, idx: usize, zeta: &[i64]) -> usize {
        let mut c = self.coords(idx);
        for (ci, zi) in c.iter_mut().zip(zeta) {
            *ci += zi;
        }
        self.index(&c)
    }

    /// Index of −x.
    pub fn negate(&self, idx: usize) -> usize {
        let c: Vec<i64> = self.coords(idx).iter().map(|v| -v).collect();
        self.index(&c)
    }

    /// Minimal-image position of site `idx`.
    pub fn position(&self, idx: usize) -> Vec<i64> {
        minimal_image(&self.coords(idx), self.extent)
    }

    /// Table of minimal-image positions, one row per site.
    pub fn positions(&self) -> Vec<Vec<i64>> {
        (0..self.sites()).map(|i| self.position(i)).collect()
    }

    pub fn origin(&self) -> usize {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_image_examples() {
        assert_eq!(minimal_image_component(3, 4), -1);
        assert_eq!(minimal_image_component(2, 4), 2);
        assert_eq!(minimal_image_component(0, 4), 0);
        assert_eq!(minimal_image_component(-2, 4), 2);
        assert_eq!(minimal_image_component(2, 5), 2);
        assert_eq!(minimal_image_component(3, 5), -2);
    }

    #[test]
    fn index_roundtrip() {
        let l = LatticeSpec::new(3, 4).unwrap();
        for i in 0..l.sites() {
            assert_eq!(l.index(&l.coords(i)), i);
            assert_eq!(l.index(&l.position(i)), i);
        }
        assert_eq!(l.shift(0, &[-1, 0, 0]), 3);
    }

    #[test]
    fn rejects_small_boxes() {
        assert!(LatticeSpec::new(1, 1).is_err());
        assert!(LatticeSpec::new(0, 4).is_err());
    }

    proptest! {
        #[test]
        fn minimal_image_window(x in -1000i64..1000, n in 2usize..40) {
            let r = minimal_image_component(x, n);
            prop_assert_eq!((r - x).rem_euclid(n as i64), 0);
            prop_assert!(2 * r > -(n as i64) && 2 * r <= n as i64);
        }
    }
}
