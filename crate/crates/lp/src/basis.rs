//! Basis inverse as an LU factorisation followed by a product-form eta file.

use crate::lu::LuFactors;

const ETA_DROP: f64 = 1e-14;

#[derive(Clone, Debug, Default)]
pub(crate) struct Basis {
    lu: LuFactors,
    eta_pos: Vec<usize>,
    eta_pivot: Vec<f64>,
    eta_start: Vec<usize>,
    eta_index: Vec<usize>,
    eta_value: Vec<f64>,
}

impl Basis {
    pub fn new(lu: LuFactors) -> Self {
        Self {
            lu,
            eta_start: vec![0],
            ..Default::default()
        }
    }

    pub fn num_updates(&self) -> usize {
        self.eta_pos.len()
    }

    pub fn eta_nnz(&self) -> usize {
        self.eta_index.len()
    }

    pub fn lu_nnz(&self) -> usize {
        self.lu.nnz()
    }

    /// Solves `B z = rhs` with `rhs` indexed by row (consumed) and `out` by
    /// basis position.
    pub fn ftran(&self, rhs: &mut [f64], out: &mut [f64], scratch: &mut [f64]) {
        self.lu.ftran(rhs, out, scratch);
        for e in 0..self.eta_pos.len() {
            let r = self.eta_pos[e];
            let zr = out[r] / self.eta_pivot[e];
            out[r] = zr;
            if zr != 0.0 {
                let (s, t) = (self.eta_start[e], self.eta_start[e + 1]);
                for (&i, &a) in self.eta_index[s..t].iter().zip(&self.eta_value[s..t]) {
                    out[i] -= a * zr;
                }
            }
        }
    }

    /// Solves `Bᵀ z = c` with `c` indexed by basis position (consumed) and
    /// `out` by row.
    pub fn btran(&self, c: &mut [f64], out: &mut [f64], scratch: &mut [f64]) {
        for e in (0..self.eta_pos.len()).rev() {
            let r = self.eta_pos[e];
            let (s, t) = (self.eta_start[e], self.eta_start[e + 1]);
            let mut v = c[r];
            for (&i, &a) in self.eta_index[s..t].iter().zip(&self.eta_value[s..t]) {
                v -= a * c[i];
            }
            c[r] = v / self.eta_pivot[e];
        }
        self.lu.btran(c, out, scratch);
    }

    /// Records the replacement of position `r` by a column whose representation
    /// `B⁻¹ a` is `alpha` (indexed by basis position).
    pub fn update(&mut self, r: usize, alpha: &[f64]) {
        self.eta_pos.push(r);
        self.eta_pivot.push(alpha[r]);
        for (i, &a) in alpha.iter().enumerate() {
            if i != r && a.abs() > ETA_DROP {
                self.eta_index.push(i);
                self.eta_value.push(a);
            }
        }
        self.eta_start.push(self.eta_index.len());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn update_matches_refactorisation() {
        // B = I (2x2) then replace position 0 by column (2, 1).
        let cols: Vec<(Vec<usize>, Vec<f64>)> = vec![(vec![0], vec![1.0]), (vec![1], vec![1.0])];
        let lu = LuFactors::factorize(2, |k| (&cols[k].0[..], &cols[k].1[..])).unwrap();
        let mut basis = Basis::new(lu);
        basis.update(0, &[2.0, 1.0]);
        // New B = [[2, 0], [1, 1]].
        let mut rhs = vec![4.0, 5.0];
        let mut out = vec![0.0; 2];
        let mut scratch = vec![0.0; 2];
        basis.ftran(&mut rhs, &mut out, &mut scratch);
        assert!((out[0] - 2.0).abs() < 1e-14 && (out[1] - 3.0).abs() < 1e-14);
        // Bᵀ z = (4, 5): z1 = 5, 2 z0 + z1 = 4.
        let mut c = vec![4.0, 5.0];
        basis.btran(&mut c, &mut out, &mut scratch);
        assert!((out[0] + 0.5).abs() < 1e-14 && (out[1] - 5.0).abs() < 1e-14);
    }
}
