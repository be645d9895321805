use std::f64::consts::{PI, SQRT_2};

use super::{basis_len, LegendreTable, SphereField, SphereGrid};
use crate::error::{Error, Result};

/// Precomputed synthesis/analysis tables for one `(grid, cutoff)` pair.
///
/// Building the tables costs about as much as a single transform, so
/// anything that transforms more than once (ensembles, operator
/// assembly) should hold on to one of these.
#[derive(Clone, Debug)]
pub struct GridTransform<'g> {
    grid: &'g SphereGrid,
    cutoff: usize,
    /// Per ring, normalised Legendre values with the √2 of m > 0 folded in.
    legendre: Vec<f64>,
    legendre_stride: usize,
    /// `cos(m φ_j)`, `sin(m φ_j)` laid out as `j * (cutoff + 1) + m`.
    cos_table: Vec<f64>,
    sin_table: Vec<f64>,
}

impl<'g> GridTransform<'g> {
    pub fn new(grid: &'g SphereGrid, cutoff: usize) -> Result<Self> {
        grid.check_cutoff(cutoff)?;
        let width = cutoff + 1;
        let angles = grid.longitudes();
        let mut cos_table = vec![0.0; angles.len() * width];
        let mut sin_table = vec![0.0; angles.len() * width];
        for (j, a) in angles.iter().enumerate() {
            for m in 0..=cutoff {
                let (s, c) = (m as f64 * a).sin_cos();
                cos_table[j * width + m] = c;
                sin_table[j * width + m] = s;
            }
        }
        let (legendre, legendre_stride) = if grid.dim() == 2 {
            let stride = LegendreTable::stride(cutoff);
            let mut values = vec![0.0; stride * grid.ring_z().len()];
            for (r, z) in grid.ring_z().iter().enumerate() {
                let row = &mut values[r * stride..(r + 1) * stride];
                LegendreTable::fill(cutoff, *z, row);
                for l in 1..=cutoff {
                    for m in 1..=l {
                        row[LegendreTable::index(l, m)] *= SQRT_2;
                    }
                }
            }
            (values, stride)
        } else {
            (Vec::new(), 0)
        };
        Ok(Self {
            grid,
            cutoff,
            legendre,
            legendre_stride,
            cos_table,
            sin_table,
        })
    }

    pub fn grid(&self) -> &'g SphereGrid {
        self.grid
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    fn check_field(&self, field: &SphereField) -> Result<()> {
        if field.dim() != self.grid.dim() || field.cutoff() != self.cutoff {
            return Err(Error::Mismatch(format!(
                "field (d={}, L={}) vs transform (d={}, L={})",
                field.dim(),
                field.cutoff(),
                self.grid.dim(),
                self.cutoff
            )));
        }
        Ok(())
    }

    pub fn synthesize(&self, field: &SphereField) -> Result<Vec<f64>> {
        self.check_field(field)?;
        let mut out = vec![0.0; self.grid.len()];
        self.synthesize_into(field.coeffs(), &mut out);
        Ok(out)
    }

    /// Point values `Σ c_i Y_i(x)` at every grid node.
    pub fn synthesize_into(&self, coeffs: &[f64], out: &mut [f64]) {
        debug_assert_eq!(coeffs.len(), basis_len(self.grid.dim(), self.cutoff));
        debug_assert_eq!(out.len(), self.grid.len());
        let width = self.cutoff + 1;
        match self.grid.dim() {
            1 => {
                let c0 = coeffs[0] / (2.0 * PI).sqrt();
                let s = 1.0 / PI.sqrt();
                for (j, v) in out.iter_mut().enumerate() {
                    let cs = &self.cos_table[j * width..(j + 1) * width];
                    let sn = &self.sin_table[j * width..(j + 1) * width];
                    let mut acc = 0.0;
                    for l in 1..=self.cutoff {
                        acc += coeffs[2 * l - 1] * cs[l] + coeffs[2 * l] * sn[l];
                    }
                    *v = c0 + s * acc;
                }
            }
            _ => {
                let n_lon = self.grid.longitudes().len();
                let mut ac = vec![0.0; width];
                let mut asn = vec![0.0; width];
                for r in 0..self.grid.ring_z().len() {
                    let p = &self.legendre[r * self.legendre_stride..(r + 1) * self.legendre_stride];
                    ac.iter_mut().for_each(|x| *x = 0.0);
                    asn.iter_mut().for_each(|x| *x = 0.0);
                    for l in 0..=self.cutoff {
                        let base = l * l + l;
                        let prow = &p[LegendreTable::index(l, 0)..];
                        ac[0] += coeffs[base] * prow[0];
                        for m in 1..=l {
                            ac[m] += coeffs[base + m] * prow[m];
                            asn[m] += coeffs[base - m] * prow[m];
                        }
                    }
                    let ring = &mut out[r * n_lon..(r + 1) * n_lon];
                    for (j, v) in ring.iter_mut().enumerate() {
                        let cs = &self.cos_table[j * width..(j + 1) * width];
                        let sn = &self.sin_table[j * width..(j + 1) * width];
                        let mut acc = ac[0];
                        for m in 1..width {
                            acc += ac[m] * cs[m] + asn[m] * sn[m];
                        }
                        *v = acc;
                    }
                }
            }
        }
    }

    pub fn analyze(&self, samples: &[f64]) -> Result<SphereField> {
        if samples.len() != self.grid.len() {
            return Err(Error::Mismatch(format!(
                "{} samples for a grid of {} nodes",
                samples.len(),
                self.grid.len()
            )));
        }
        let mut coeffs = vec![0.0; basis_len(self.grid.dim(), self.cutoff)];
        self.analyze_into(samples, &mut coeffs);
        SphereField::from_coeffs(self.grid.dim(), self.cutoff, coeffs)
    }

    /// Quadrature projection `c_i = Σ_q w_q v_q Y_i(x_q)`.
    pub fn analyze_into(&self, samples: &[f64], coeffs: &mut [f64]) {
        let width = self.cutoff + 1;
        coeffs.iter_mut().for_each(|c| *c = 0.0);
        match self.grid.dim() {
            1 => {
                let w = self.grid.weights()[0];
                let mut sum0 = 0.0;
                for (j, v) in samples.iter().enumerate() {
                    let cs = &self.cos_table[j * width..(j + 1) * width];
                    let sn = &self.sin_table[j * width..(j + 1) * width];
                    sum0 += v;
                    for l in 1..=self.cutoff {
                        coeffs[2 * l - 1] += v * cs[l];
                        coeffs[2 * l] += v * sn[l];
                    }
                }
                coeffs[0] = w * sum0 / (2.0 * PI).sqrt();
                let s = w / PI.sqrt();
                coeffs[1..].iter_mut().for_each(|c| *c *= s);
            }
            _ => {
                let n_lon = self.grid.longitudes().len();
                let dphi = 2.0 * PI / n_lon as f64;
                let mut fc = vec![0.0; width];
                let mut fs = vec![0.0; width];
                for r in 0..self.grid.ring_z().len() {
                    fc.iter_mut().for_each(|x| *x = 0.0);
                    fs.iter_mut().for_each(|x| *x = 0.0);
                    let ring = &samples[r * n_lon..(r + 1) * n_lon];
                    for (j, v) in ring.iter().enumerate() {
                        let cs = &self.cos_table[j * width..(j + 1) * width];
                        let sn = &self.sin_table[j * width..(j + 1) * width];
                        for m in 0..width {
                            fc[m] += v * cs[m];
                            fs[m] += v * sn[m];
                        }
                    }
                    let w = self.grid.ring_weights()[r] * dphi;
                    let p = &self.legendre[r * self.legendre_stride..(r + 1) * self.legendre_stride];
                    for l in 0..=self.cutoff {
                        let base = l * l + l;
                        let prow = &p[LegendreTable::index(l, 0)..];
                        coeffs[base] += w * prow[0] * fc[0];
                        for m in 1..=l {
                            coeffs[base + m] += w * prow[m] * fc[m];
                            coeffs[base - m] += w * prow[m] * fs[m];
                        }
                    }
                }
            }
        }
    }
}
