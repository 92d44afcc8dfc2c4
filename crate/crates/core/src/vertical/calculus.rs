//! Derivatives on the sphere bundle grid.
//!
//! Fiber derivatives are spectral (one complex FFT differentiates two real
//! fiber lines at once, since the multiplier `(i kappa)^p` maps real signals to
//! real signals). Chart derivatives are fourth-order central differences,
//! periodic on the torus and with one-sided closures at patch edges.
//! Derivatives in `y` are assembled from the Euler form
//! `df/dy^i = k psi e_i + psi_theta m_i` at `|y| = 1`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::field::{HomogeneousField, Slot};
use super::grid::{Chart, Grid};
use crate::error::{Error, Result};

impl Grid {
    /// Spectral multiplier for the `order`-th fiber derivative, scaled by
    /// the inverse FFT normalization.
    fn spectral_multiplier(&self, order: u32) -> Vec<Complex64> {
        let n = self.n_theta();
        let norm = 1.0 / n as f64;
        (0..n)
            .map(|j| {
                let kappa = if j <= n / 2 {
                    j as f64
                } else {
                    j as f64 - n as f64
                };
                if j == n / 2 && order % 2 == 1 {
                    return Complex64::new(0.0, 0.0);
                }
                Complex64::new(0.0, kappa).powu(order) * norm
            })
            .collect()
    }

    /// `order`-th derivative in `theta` of raw samples.
    pub fn theta_derivative_raw(&self, src: &[f64], order: u32) -> Vec<f64> {
        let n = self.n_theta();
        debug_assert_eq!(src.len(), self.len());
        let mult = self.spectral_multiplier(order);
        let scratch_len = self
            .fft
            .get_inplace_scratch_len()
            .max(self.ifft.get_inplace_scratch_len());
        let mut out = vec![0.0; src.len()];
        out.par_chunks_mut(2 * n)
            .zip(src.par_chunks(2 * n))
            .for_each_init(
                || {
                    (
                        vec![Complex64::default(); n],
                        vec![Complex64::default(); scratch_len],
                    )
                },
                |(buf, scratch), (dst, lines)| {
                    let paired = lines.len() == 2 * n;
                    for j in 0..n {
                        let im = if paired { lines[n + j] } else { 0.0 };
                        buf[j] = Complex64::new(lines[j], im);
                    }
                    self.fft.process_with_scratch(buf, scratch);
                    buf.iter_mut().zip(&mult).for_each(|(z, m)| *z *= m);
                    self.ifft.process_with_scratch(buf, scratch);
                    for j in 0..n {
                        dst[j] = buf[j].re;
                        if paired {
                            dst[n + j] = buf[j].im;
                        }
                    }
                },
            );
        out
    }

    /// Zeroes fiber Fourier modes whose amplitude is below `threshold` times
    /// the largest amplitude on the same line. Lines with nothing to remove
    /// are copied unchanged. Returns the filtered samples and the number of
    /// lines touched.
    pub fn theta_filter(&self, src: &[f64], threshold: f64) -> (Vec<f64>, usize) {
        let n = self.n_theta();
        debug_assert_eq!(src.len(), self.len());
        let norm = 1.0 / n as f64;
        let scratch_len = self
            .fft
            .get_inplace_scratch_len()
            .max(self.ifft.get_inplace_scratch_len());
        let mut out = src.to_vec();
        let touched = out
            .par_chunks_mut(n)
            .map_init(
                || {
                    (
                        vec![Complex64::default(); n],
                        vec![Complex64::default(); scratch_len],
                    )
                },
                |(buf, scratch), line| {
                    for (z, &v) in buf.iter_mut().zip(line.iter()) {
                        *z = Complex64::new(v, 0.0);
                    }
                    self.fft.process_with_scratch(buf, scratch);
                    let cut = threshold * buf.iter().map(|z| z.norm()).fold(0.0, f64::max);
                    let mut hit = false;
                    for z in buf.iter_mut() {
                        if *z != Complex64::default() && z.norm() < cut {
                            *z = Complex64::default();
                            hit = true;
                        }
                    }
                    if !hit {
                        return 0;
                    }
                    self.ifft.process_with_scratch(buf, scratch);
                    for (v, z) in line.iter_mut().zip(buf.iter()) {
                        *v = z.re * norm;
                    }
                    1
                },
            )
            .sum();
        (out, touched)
    }

    /// `order`-th chart derivative of raw samples along `axis` (0 or 1).
    pub fn x_derivative_raw(&self, src: &[f64], axis: usize, order: u32) -> Vec<f64> {
        debug_assert!(axis < 2 && (order == 1 || order == 2));
        let [n1, n2, nt] = self.dims();
        let h = self.h(axis);
        let (count, stride) = if axis == 0 { (n1, n2 * nt) } else { (n2, nt) };
        let scale = if order == 1 {
            1.0 / (12.0 * h)
        } else {
            1.0 / (12.0 * h * h)
        };
        let periodic = matches!(self.chart(), Chart::Torus);
        let mut out = vec![0.0; src.len()];
        // A row is one i1 slab; along axis 0 stencils cross rows, so index globally.
        out.par_chunks_mut(n2 * nt)
            .enumerate()
            .for_each(|(i1, row)| {
                for (local, slot) in row.iter_mut().enumerate() {
                    let idx = i1 * n2 * nt + local;
                    let pos = if axis == 0 { i1 } else { (local / nt) % n2 };
                    let base = idx - pos * stride;
                    let at = |p: usize| src[base + p * stride];
                    let v = if periodic {
                        let w =
                            |d: isize| at(((pos as isize + d).rem_euclid(count as isize)) as usize);
                        if order == 1 {
                            w(-2) - 8.0 * w(-1) + 8.0 * w(1) - w(2)
                        } else {
                            -w(-2) + 16.0 * w(-1) - 30.0 * w(0) + 16.0 * w(1) - w(2)
                        }
                    } else {
                        let (start, coeffs) = patch_stencil(pos, count, order);
                        coeffs
                            .iter()
                            .enumerate()
                            .map(|(j, c)| c * at(start + j))
                            .sum()
                    };
                    *slot = v * scale;
                }
            });
        out
    }

    /// Spectral `theta` derivative of every component; degree and slots kept.
    pub fn theta_derivative(&self, f: &HomogeneousField, order: u32) -> Result<HomogeneousField> {
        if order != 1 && order != 2 {
            return Err(Error::Config(format!(
                "theta derivative order must be 1 or 2, got {order}"
            )));
        }
        if !self.n_theta().is_multiple_of(2) {
            return Err(Error::Config(format!(
                "n_theta = {} is odd",
                self.n_theta()
            )));
        }
        self.check_len(f)?;
        let comps = f
            .components()
            .iter()
            .map(|c| self.theta_derivative_raw(c, order))
            .collect();
        HomogeneousField::from_components(f.degree(), f.slots().to_vec(), comps)
    }

    /// Fourth-order chart derivative along `axis` (1 or 2, chart numbering).
    pub fn x_derivative(
        &self,
        f: &HomogeneousField,
        axis: usize,
        order: u32,
    ) -> Result<HomogeneousField> {
        if axis != 1 && axis != 2 {
            return Err(Error::Config(format!(
                "chart axis must be 1 or 2, got {axis}"
            )));
        }
        if order != 1 && order != 2 {
            return Err(Error::Config(format!(
                "x derivative order must be 1 or 2, got {order}"
            )));
        }
        self.check_len(f)?;
        let comps = f
            .components()
            .iter()
            .map(|c| self.x_derivative_raw(c, axis - 1, order))
            .collect();
        HomogeneousField::from_components(f.degree(), f.slots().to_vec(), comps)
    }

    /// Vertical gradient: appends one lower slot and lowers the degree by one.
    pub fn y_derivative(&self, f: &HomogeneousField) -> HomogeneousField {
        let k = f.degree() as f64;
        let mut slots = f.slots().to_vec();
        slots.push(Slot::Lower);
        let mut comps = Vec::with_capacity(2 * f.n_components());
        for c in f.components() {
            let dt = self.theta_derivative_raw(c, 1);
            let [d1, d2] = self.euler_form(k, c, &dt);
            comps.push(d1);
            comps.push(d2);
        }
        HomogeneousField::from_components(f.degree() - 1, slots, comps)
            .expect("component count is consistent")
    }

    /// Both `y`-partials of one scalar component given its `theta` derivative.
    pub(crate) fn euler_form(&self, degree: f64, psi: &[f64], psi_theta: &[f64]) -> [Vec<f64>; 2] {
        let fr = self.frame();
        let nt = self.n_theta();
        let mut d1 = vec![0.0; psi.len()];
        let mut d2 = vec![0.0; psi.len()];
        for idx in 0..psi.len() {
            let kk = idx % nt;
            let (e, m) = (fr.e(kk), fr.m(kk));
            d1[idx] = degree * psi[idx] * e[0] + psi_theta[idx] * m[0];
            d2[idx] = degree * psi[idx] * e[1] + psi_theta[idx] * m[1];
        }
        [d1, d2]
    }

    /// Contracts the last (lower) slot with `y`, raising the degree by one.
    pub fn contract_y(&self, f: &HomogeneousField) -> Result<HomogeneousField> {
        match f.slots().last() {
            Some(Slot::Lower) => {}
            _ => {
                return Err(Error::RankMismatch {
                    expected: "trailing lower slot".into(),
                    found: format!("{:?}", f.slots()),
                })
            }
        }
        let nt = self.n_theta();
        let fr = self.frame();
        let comps: Vec<Vec<f64>> = f
            .components()
            .chunks(2)
            .map(|pair| {
                (0..pair[0].len())
                    .map(|idx| {
                        let e = fr.e(idx % nt);
                        e[0] * pair[0][idx] + e[1] * pair[1][idx]
                    })
                    .collect()
            })
            .collect();
        let slots = f.slots()[..f.rank() - 1].to_vec();
        HomogeneousField::from_components(f.degree() + 1, slots, comps)
    }

    /// `y`-component `i` at each node on the Euclidean unit circle.
    pub fn y_component(&self, i: usize) -> Vec<f64> {
        let nt = self.n_theta();
        let fr = self.frame();
        (0..self.len()).map(|idx| fr.e(idx % nt)[i]).collect()
    }

    fn check_len(&self, f: &HomogeneousField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::Shape(format!(
                "field has {} samples, grid has {}",
                f.len(),
                self.len()
            )));
        }
        Ok(())
    }
}

const FIRST_CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const FIRST_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const FIRST_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const SECOND_CENTRAL: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const SECOND_EDGE0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const SECOND_EDGE1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

/// Fourth-order stencil (start node and weights, unscaled) at `pos` on a
/// non-periodic line of `count` nodes.
fn patch_stencil(pos: usize, count: usize, order: u32) -> (usize, Vec<f64>) {
    let mirror = |w: &[f64], sign: f64| w.iter().rev().map(|c| sign * c).collect::<Vec<_>>();
    match order {
        1 => match pos {
            0 => (0, FIRST_EDGE0.to_vec()),
            1 => (0, FIRST_EDGE1.to_vec()),
            p if p + 1 == count => (count - 5, mirror(&FIRST_EDGE0, -1.0)),
            p if p + 2 == count => (count - 5, mirror(&FIRST_EDGE1, -1.0)),
            p => (p - 2, FIRST_CENTRAL.to_vec()),
        },
        _ => match pos {
            0 => (0, SECOND_EDGE0.to_vec()),
            1 => (0, SECOND_EDGE1.to_vec()),
            p if p + 1 == count => (count - 6, mirror(&SECOND_EDGE0, 1.0)),
            p if p + 2 == count => (count - 6, mirror(&SECOND_EDGE1, 1.0)),
            p => (p - 2, SECOND_CENTRAL.to_vec()),
        },
    }
}
