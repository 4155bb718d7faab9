//! Orthonormal basis of `H` made of `mu`-normalised Fourier mode pairs.
//!
//! Every nonzero grid mode `k` is paired with its conjugate `-k (mod N)`. The
//! lexicographically larger member represents the pair and contributes a
//! cosine ("real") and a sine ("imaginary") element; self-conjugate Nyquist
//! modes contribute only the cosine. Elements are ordered by ascending `|k|`,
//! then lexicographically on `(k1, k2, k3)`, real part first.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::kernel::NoiseModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    Real,
    Imaginary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisElement {
    pub mode: [i64; 3],
    pub part: Part,
    /// Spectral index of `k`.
    pub index: usize,
    /// Spectral index of the conjugate partner; equal to `index` when self-conjugate.
    pub partner: usize,
    pub weight: f64,
}

impl BasisElement {
    fn self_conjugate(&self) -> bool {
        self.index == self.partner
    }

    /// Transform samples `F e_j(xi)` at `index` and `partner`.
    fn transform_pair(&self) -> (Complex64, Complex64) {
        if self.self_conjugate() {
            let v = Complex64::new(1.0 / self.weight.sqrt(), 0.0);
            return (v, v);
        }
        let a = 1.0 / (2.0 * self.weight).sqrt();
        match self.part {
            Part::Real => (Complex64::new(a, 0.0), Complex64::new(a, 0.0)),
            Part::Imaginary => (Complex64::new(0.0, -a), Complex64::new(0.0, a)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Basis {
    elements: Vec<BasisElement>,
    grid_len: usize,
}

impl Basis {
    /// Full basis of the grid (dimension `N^3 - 1`).
    pub fn full(model: &NoiseModel) -> Self {
        let grid = model.grid();
        let mut reps: Vec<(i64, [i64; 3], usize, usize)> = (1..grid.len())
            .filter_map(|idx| {
                let partner = grid.conjugate_index(idx);
                let k = grid.mode(idx);
                (k >= grid.mode(partner)).then(|| (k.iter().map(|c| c * c).sum(), k, idx, partner))
            })
            .collect();
        reps.sort_by_key(|a| (a.0, a.1));

        let weights = model.weights();
        let mut elements = Vec::with_capacity(grid.len() - 1);
        for (_, mode, index, partner) in reps {
            let weight = weights[index];
            elements.push(BasisElement { mode, part: Part::Real, index, partner, weight });
            if index != partner {
                elements.push(BasisElement { mode, part: Part::Imaginary, index, partner, weight });
            }
        }
        Self { elements, grid_len: grid.len() }
    }

    /// The first `truncation` elements.
    pub fn truncated(model: &NoiseModel, truncation: usize) -> Result<Self> {
        let mut basis = Self::full(model);
        if truncation == 0 || truncation > basis.elements.len() {
            return Err(Error::parameter(
                "truncation",
                format!("must lie in 1..={}, got {truncation}", basis.elements.len()),
            ));
        }
        basis.elements.truncate(truncation);
        Ok(basis)
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Number of spectral grid points the basis synthesises onto.
    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    pub fn elements(&self) -> &[BasisElement] {
        &self.elements
    }

    pub fn element(&self, j: usize) -> Result<&BasisElement> {
        self.elements.get(j).ok_or(Error::Index { index: j, len: self.elements.len() })
    }

    /// Transform samples of `e_j` on the full spectral grid.
    pub fn element_transform(&self, j: usize) -> Result<Vec<Complex64>> {
        let e = self.element(j)?;
        let mut out = vec![Complex64::default(); self.grid_len];
        let (a, b) = e.transform_pair();
        out[e.index] = a;
        out[e.partner] = b;
        Ok(out)
    }

    /// `<phi, e_j>_H` for every element, from transform samples of `phi`.
    pub fn coefficients(&self, spectral: &[Complex64]) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| {
                let (a, b) = e.transform_pair();
                let mut s = e.weight * spectral[e.index] * a.conj();
                if !e.self_conjugate() {
                    s += e.weight * spectral[e.partner] * b.conj();
                }
                s.re
            })
            .collect()
    }

    /// Series coefficients of `sum_j c_j (f * e_j)`, i.e. the physical noise
    /// field carried by the basis amplitudes `c_j`. Accumulates into `out`.
    pub fn synthesize_into(&self, amplitudes: &[f64], out: &mut [Complex64]) {
        debug_assert!(amplitudes.len() <= self.elements.len());
        for (e, &c) in self.elements.iter().zip(amplitudes) {
            if c == 0.0 {
                continue;
            }
            let (a, b) = e.transform_pair();
            // series coefficient of f * e_j is mu_k F e_j(xi_k)
            out[e.index] += e.weight * c * a;
            if !e.self_conjugate() {
                out[e.partner] += e.weight * c * b;
            }
        }
    }

    pub fn synthesize(&self, amplitudes: &[f64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.grid_len];
        self.synthesize_into(amplitudes, &mut out);
        out
    }
}

/// Real part of `sum_k mu_k a_k conj(b_k)`.
pub fn h_inner(a: &[Complex64], b: &[Complex64], model: &NoiseModel) -> f64 {
    a.iter().zip(b).zip(model.weights()).map(|((x, y), &w)| w * (x * y.conj()).re).sum()
}
