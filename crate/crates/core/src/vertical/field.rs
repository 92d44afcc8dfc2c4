use crate::error::{Error, Result};

/// Variance of a tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    Upper,
    Lower,
}

/// Component samples of a tensor on the sphere bundle grid, homogeneous of
/// `degree` in `y`.
///
/// Each component holds `psi(x, theta)` with the ambient value at
/// `y = r (cos theta, sin theta)` equal to `r^degree * psi`. Components are
/// ordered row-major over the slot indices, so a rank-`r` field in dimension
/// two carries `2^r` components.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogeneousField {
    degree: i32,
    slots: Vec<Slot>,
    comps: Vec<Vec<f64>>,
}

impl HomogeneousField {
    pub fn scalar(degree: i32, samples: Vec<f64>) -> Self {
        HomogeneousField {
            degree,
            slots: Vec::new(),
            comps: vec![samples],
        }
    }

    pub fn zeros(degree: i32, slots: Vec<Slot>, len: usize) -> Self {
        let n = 1 << slots.len();
        HomogeneousField {
            degree,
            slots,
            comps: vec![vec![0.0; len]; n],
        }
    }

    pub fn from_components(degree: i32, slots: Vec<Slot>, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != 1 << slots.len() {
            return Err(Error::Shape(format!(
                "rank {} needs {} components, got {}",
                slots.len(),
                1 << slots.len(),
                comps.len()
            )));
        }
        let len = comps[0].len();
        if comps.iter().any(|c| c.len() != len) {
            return Err(Error::Shape("components differ in length".into()));
        }
        Ok(HomogeneousField {
            degree,
            slots,
            comps,
        })
    }

    /// Symmetric lower-index `(0,2)` field from its three independent
    /// components.
    pub fn symmetric_lower(degree: i32, s11: Vec<f64>, s12: Vec<f64>, s22: Vec<f64>) -> Self {
        HomogeneousField {
            degree,
            slots: vec![Slot::Lower, Slot::Lower],
            comps: vec![s11, s12.clone(), s12, s22],
        }
    }

    pub fn degree(&self) -> i32 {
        self.degree
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn rank(&self) -> usize {
        self.slots.len()
    }

    pub fn len(&self) -> usize {
        self.comps[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_components(&self) -> usize {
        self.comps.len()
    }

    /// Flat component position of a slot-index tuple.
    #[inline]
    pub fn flat(idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * 2 + i)
    }

    pub fn comp(&self, idx: &[usize]) -> &[f64] {
        debug_assert_eq!(idx.len(), self.rank());
        &self.comps[Self::flat(idx)]
    }

    pub fn comp_mut(&mut self, idx: &[usize]) -> &mut Vec<f64> {
        debug_assert_eq!(idx.len(), self.rank());
        &mut self.comps[Self::flat(idx)]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn components_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }

    pub fn into_components(self) -> Vec<Vec<f64>> {
        self.comps
    }

    /// Samples of a rank-0 field.
    pub fn values(&self) -> &[f64] {
        debug_assert_eq!(self.rank(), 0);
        &self.comps[0]
    }

    pub fn into_values(mut self) -> Vec<f64> {
        debug_assert_eq!(self.rank(), 0);
        self.comps.swap_remove(0)
    }

    /// Value of every component at one node, in flat order.
    pub fn at(&self, idx: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c[idx]).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn require_finite(&self, what: &'static str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite(what))
        }
    }

    pub fn require_slots(&self, slots: &[Slot]) -> Result<()> {
        if self.slots == slots {
            Ok(())
        } else {
            Err(Error::RankMismatch {
                expected: format!("{slots:?}"),
                found: format!("{:?}", self.slots),
            })
        }
    }

    pub fn with_degree(mut self, degree: i32) -> Self {
        self.degree = degree;
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.comps.iter_mut().flatten().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`, component by component.
    pub fn axpy(&self, s: f64, other: &Self) -> Result<Self> {
        if self.slots != other.slots || self.len() != other.len() {
            return Err(Error::Shape(
                "axpy operands differ in rank or length".into(),
            ));
        }
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            .collect();
        Ok(HomogeneousField {
            degree: self.degree,
            slots: self.slots.clone(),
            comps,
        })
    }

    /// Sup norm of the difference over all components.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Replaces a rank-2 field by its symmetric part.
    pub fn symmetrize(&mut self) {
        debug_assert_eq!(self.rank(), 2);
        let (lo, hi) = self.comps.split_at_mut(2);
        for (a, b) in lo[1].iter_mut().zip(hi[0].iter_mut()) {
            let s = 0.5 * (*a + *b);
            *a = s;
            *b = s;
        }
    }
}
