use crate::error::{Error, Result};
use crate::geometry::MetricField;
use crate::vertical::{HomogeneousField, Slot};

/// Nodewise norm of a tensor field with its grid supremum.
#[derive(Debug, Clone)]
pub struct TensorNorm {
    pub nodewise: Vec<f64>,
    pub sup: f64,
    /// Flat index of the supremum.
    pub argmax: usize,
}

/// `|Omega|_g^2` as the full contraction of `Omega` with itself, every lower
/// slot paired through `g^-1` and every upper slot through `g`.
pub fn tensor_norm(field: &HomogeneousField, metric: &MetricField) -> Result<TensorNorm> {
    if field.len() != metric.tensor().len() {
        return Err(Error::Shape(format!(
            "tensor has {} samples, metric has {}",
            field.len(),
            metric.tensor().len()
        )));
    }
    let rank = field.rank();
    let n = 1usize << rank;
    let slots = field.slots();
    let comps = field.components();
    let mut nodewise = vec![0.0; field.len()];
    let mut vals = vec![0.0; n];
    for (p, out) in nodewise.iter_mut().enumerate() {
        let lo = sym2(metric.inv_at(p));
        let up = sym2(metric.at(p));
        for (v, c) in vals.iter_mut().zip(comps) {
            *v = c[p];
        }
        let mut acc = 0.0;
        for a in 0..n {
            if vals[a] == 0.0 {
                continue;
            }
            for b in 0..n {
                let mut w = vals[a] * vals[b];
                for (s, slot) in slots.iter().enumerate() {
                    let shift = rank - 1 - s;
                    let (ia, ib) = ((a >> shift) & 1, (b >> shift) & 1);
                    w *= match slot {
                        Slot::Lower => lo[ia][ib],
                        Slot::Upper => up[ia][ib],
                    };
                }
                acc += w;
            }
        }
        *out = acc.max(0.0).sqrt();
    }
    let (argmax, sup) = nodewise.iter().enumerate().fold((0, 0.0), |best, (i, &v)| {
        if v > best.1 || v.is_nan() {
            (i, v)
        } else {
            best
        }
    });
    Ok(TensorNorm {
        nodewise,
        sup,
        argmax,
    })
}

#[inline]
fn sym2(m: [f64; 3]) -> [[f64; 2]; 2] {
    [[m[0], m[1]], [m[1], m[2]]]
}
