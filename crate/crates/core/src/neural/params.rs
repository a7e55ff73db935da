use super::tensor::Tensor2;
use crate::error::{Error, Result};

/// A model whose trainable tensors can be enumerated in a fixed order.
///
/// The visiting order defines the layout of [`flatten`](Parameterized::flatten)
/// and must match between `visit` and `visit_mut`.
pub trait Parameterized {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Tensor2));
    fn visit_mut(&mut self, f: &mut dyn FnMut(&mut Tensor2));

    fn num_params(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, t| n += t.data().len());
        n
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.visit("", &mut |_, t| out.extend_from_slice(t.data()));
        out
    }

    fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        let expected = self.num_params();
        if flat.len() != expected {
            return Err(Error::ShapeMismatch { what: "flat parameter vector".into(), expected, got: flat.len() });
        }
        let mut offset = 0;
        self.visit_mut(&mut |t| {
            let n = t.data().len();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        });
        Ok(())
    }

    fn zero(&mut self) {
        self.visit_mut(&mut |t| t.fill(0.0));
    }

    /// Accumulates `other` (same architecture) into `self`.
    fn add_assign_flat(&mut self, other: &[f64]) {
        let mut offset = 0;
        self.visit_mut(&mut |t| {
            let n = t.data().len();
            for (a, b) in t.data_mut().iter_mut().zip(&other[offset..offset + n]) {
                *a += b;
            }
            offset += n;
        });
    }

    /// Named tensors in visiting order.
    fn sections(&self, prefix: &str) -> Vec<(String, Tensor2)> {
        let mut out = Vec::new();
        self.visit(prefix, &mut |name, t| out.push((name, t.clone())));
        out
    }

    fn all_finite(&self) -> bool {
        let mut ok = true;
        self.visit("", &mut |_, t| ok &= t.is_finite());
        ok
    }
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Loads named sections into `model`, matching names under `prefix` and
/// checking shapes.
pub fn load_sections<P: Parameterized>(model: &mut P, prefix: &str, sections: &[(String, Tensor2)]) -> Result<()> {
    let names: Vec<(String, usize, usize)> = {
        let mut v = Vec::new();
        model.visit(prefix, &mut |name, t| v.push((name, t.rows(), t.cols())));
        v
    };
    let mut found = Vec::with_capacity(names.len());
    for (name, rows, cols) in &names {
        let (_, tensor) = sections
            .iter()
            .find(|(n, _)| n == name)
            .ok_or_else(|| Error::format("parameter file", format!("missing section {name}")))?;
        if tensor.rows() != *rows || tensor.cols() != *cols {
            return Err(Error::format(
                "parameter file",
                format!("section {name} has shape {}x{}, expected {rows}x{cols}", tensor.rows(), tensor.cols()),
            ));
        }
        found.push(tensor.clone());
    }
    let mut it = found.into_iter();
    model.visit_mut(&mut |t| {
        if let Some(src) = it.next() {
            *t = src;
        }
    });
    Ok(())
}
