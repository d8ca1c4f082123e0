//! Index bookkeeping for operators acting on a subset of sites, and the
//! kernels that multiply a full matrix by such an operator without forming
//! its embedding.

use crate::{Mat, C64};

/// Splits full-space indices into (support digits, remaining digits).
///
/// With site-0-major ordering a full index is `Σ_x digit_x · stride_x`. For a
/// support `X`, every full index is `base + offset[l]` where `l` enumerates
/// the digits on `X` and `base` has zeros there.
#[derive(Clone, Debug)]
pub struct LocalIndexer {
    total: usize,
    local: usize,
    offsets: Vec<usize>,
    bases: Vec<usize>,
}

impl LocalIndexer {
    /// `support` must be sorted, unique and inside `site_dims`.
    pub fn new(site_dims: &[usize], support: &[usize]) -> Self {
        let n = site_dims.len();
        let mut strides = vec![1usize; n];
        for x in (0..n.saturating_sub(1)).rev() {
            strides[x] = strides[x + 1] * site_dims[x + 1];
        }
        let total: usize = site_dims.iter().product();

        let local: usize = support.iter().map(|&x| site_dims[x]).product();
        let offsets = (0..local)
            .map(|mut l| {
                let mut off = 0;
                for &x in support.iter().rev() {
                    off += (l % site_dims[x]) * strides[x];
                    l /= site_dims[x];
                }
                off
            })
            .collect();

        let bases = (0..total)
            .filter(|&i| {
                support
                    .iter()
                    .all(|&x| (i / strides[x]).is_multiple_of(site_dims[x]))
            })
            .collect();

        Self {
            total,
            local,
            offsets,
            bases,
        }
    }

    pub fn total_dim(&self) -> usize {
        self.total
    }

    pub fn local_dim(&self) -> usize {
        self.local
    }

    /// Embedding `op ⊗ 𝟙` as a dense `total × total` matrix.
    pub fn embed(&self, op: &Mat) -> Mat {
        let mut out = Mat::zeros((self.total, self.total));
        for &r in &self.bases {
            for (l, &ol) in self.offsets.iter().enumerate() {
                for (m, &om) in self.offsets.iter().enumerate() {
                    out[[r + ol, r + om]] = op[[l, m]];
                }
            }
        }
        out
    }

    /// `(op ⊗ 𝟙) · a`.
    pub fn left_mul(&self, op: &Mat, a: &Mat) -> Mat {
        let d = self.total;
        let mut out = Mat::zeros((d, d));
        self.left_mul_add(op, a, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// `out += coeff · (op ⊗ 𝟙) · a`; `out` must be in standard layout.
    pub fn left_mul_add(&self, op: &Mat, a: &Mat, coeff: C64, out: &mut Mat) {
        let d = self.total;
        let a = a.as_standard_layout();
        let src = a.as_slice().expect("standard layout");
        let out = out.as_slice_mut().expect("standard layout");
        for &r in &self.bases {
            for (l, &ol) in self.offsets.iter().enumerate() {
                let dst = &mut out[(r + ol) * d..(r + ol + 1) * d];
                for (m, &om) in self.offsets.iter().enumerate() {
                    let c = coeff * op[[l, m]];
                    if c == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let row = &src[(r + om) * d..(r + om + 1) * d];
                    for (o, s) in dst.iter_mut().zip(row) {
                        *o += c * s;
                    }
                }
            }
        }
    }

    /// `a · (op ⊗ 𝟙)`.
    pub fn right_mul(&self, a: &Mat, op: &Mat) -> Mat {
        let d = self.total;
        let mut out = Mat::zeros((d, d));
        self.right_mul_add(a, op, C64::new(1.0, 0.0), &mut out);
        out
    }

    /// `out += coeff · a · (op ⊗ 𝟙)`; `out` must be in standard layout.
    pub fn right_mul_add(&self, a: &Mat, op: &Mat, coeff: C64, out: &mut Mat) {
        let d = self.total;
        let k = self.local;
        let a = a.as_standard_layout();
        let src = a.as_slice().expect("standard layout");
        let out = out.as_slice_mut().expect("standard layout");
        let opt: Vec<C64> = (0..k * k).map(|idx| coeff * op[[idx % k, idx / k]]).collect();
        let mut gathered = vec![C64::new(0.0, 0.0); k];
        for i in 0..d {
            let row = &src[i * d..(i + 1) * d];
            let dst = &mut out[i * d..(i + 1) * d];
            for &r in &self.bases {
                for (g, &om) in gathered.iter_mut().zip(&self.offsets) {
                    *g = row[r + om];
                }
                for (l, &ol) in self.offsets.iter().enumerate() {
                    // out[i, r+ol] += Σ_m a[i, r+om] op[m, l]
                    let col = &opt[l * k..(l + 1) * k];
                    let mut acc = C64::new(0.0, 0.0);
                    for (g, c) in gathered.iter().zip(col) {
                        acc += g * c;
                    }
                    dst[r + ol] += acc;
                }
            }
        }
    }
}
