use crate::autodiff::{Graph, Node};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Array;

/// Handles for one SpaceConv layer: learnable `w_s [M×M]` and the fixed
/// propagation matrix `a_norm = D̃^{-1/2} (A + I) D̃^{-1/2}`.
#[derive(Clone, Copy, Debug)]
pub struct SpaceConvWeights {
    pub w_s: Node,
    pub a_norm: Node,
}

/// `(h · a_norm) · w_s` for `h` holding CSI rows `[N×M]` (AP axis last).
///
/// The first-order Chebyshev filter with tied weights reduces to this single
/// product; the AP axis is the graph axis, so propagation multiplies from
/// the right.
pub fn space_conv<S: Scalar>(g: &mut Graph<S>, h: Node, w: &SpaceConvWeights) -> Result<Node> {
    let propagated = g.matmul(h, w.a_norm)?;
    g.matmul(propagated, w.w_s)
}

fn check_adjacency(a: &Array<f64>, allow_diagonal: bool) -> Result<usize> {
    let s = a.shape();
    if s.len() != 2 || s[0] != s[1] {
        return Err(Error::Contract(format!("adjacency must be square, got {s:?}")));
    }
    let m = s[0];
    for i in 0..m {
        for j in 0..m {
            let v = a.at(i, j);
            if v < 0.0 {
                return Err(Error::Domain(format!("negative adjacency entry a[{i},{j}] = {v}")));
            }
            if (v - a.at(j, i)).abs() > 1e-12 {
                return Err(Error::Domain(format!("adjacency not symmetric at ({i},{j})")));
            }
        }
        if !allow_diagonal && a.at(i, i) != 0.0 {
            return Err(Error::Domain(format!("adjacency has self-loop at {i}")));
        }
    }
    Ok(m)
}

/// `D̃^{-1/2} (A + I) D̃^{-1/2}` with `D̃` the row sums of `A + I`.
pub fn renormalized_adjacency(a: &Array<f64>) -> Result<Array<f64>> {
    let m = check_adjacency(a, false)?;
    let tilde = a.add(&Array::eye(m))?;
    let inv_sqrt: Vec<f64> = (0..m)
        .map(|i| 1.0 / (0..m).map(|j| tilde.at(i, j)).sum::<f64>().sqrt())
        .collect();
    Ok(Array::from_fn(&[m, m], |k| {
        let (i, j) = (k / m, k % m);
        inv_sqrt[i] * tilde.at(i, j) * inv_sqrt[j]
    }))
}

/// `L = I − D^{-1/2} A D^{-1/2}` on the raw adjacency (zero diagonal).
///
/// Zero-degree nodes take `D^{-1/2} = 0`, so their row of `L` is the
/// identity row.
pub fn compute_normalized_laplacian(a: &Array<f64>) -> Result<Array<f64>> {
    let m = check_adjacency(a, false)?;
    let inv_sqrt: Vec<f64> = (0..m)
        .map(|i| {
            let d: f64 = (0..m).map(|j| a.at(i, j)).sum();
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(Array::from_fn(&[m, m], |k| {
        let (i, j) = (k / m, k % m);
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - inv_sqrt[i] * a.at(i, j) * inv_sqrt[j]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conv(h: Array<f64>, a_norm: Array<f64>, w_s: Array<f64>) -> Array<f64> {
        let mut g = Graph::new();
        let h = g.constant(h);
        let w = SpaceConvWeights { w_s: g.param(w_s), a_norm: g.constant(a_norm) };
        let out = space_conv(&mut g, h, &w).unwrap();
        g.value(out).clone()
    }

    #[test]
    fn empty_graph_identity_weights_is_identity() {
        let a = Array::zeros(&[3, 3]);
        let a_norm = renormalized_adjacency(&a).unwrap();
        assert_eq!(a_norm, Array::eye(3));
        let h = Array::from_fn(&[4, 3], |i| i as f64 - 2.5);
        assert_eq!(conv(h.clone(), a_norm, Array::eye(3)), h);
    }

    #[test]
    fn two_node_full_graph() {
        let a = Array::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let a_norm = renormalized_adjacency(&a).unwrap();
        for v in a_norm.data() {
            assert!((v - 0.5).abs() < 1e-15);
        }
        let h = Array::from_rows(&[&[1.0, 3.0]]).unwrap();
        let out = conv(h, a_norm, Array::eye(2));
        assert!(out.data().iter().all(|v| (v - 2.0).abs() < 1e-12), "{out:?}");
    }

    #[test]
    fn relabeling_permutes_output_columns() {
        let m = 4;
        let a = Array::from_fn(&[m, m], |k| {
            let (i, j) = (k / m, k % m);
            if i == j {
                0.0
            } else {
                1.0 / (1.0 + (i + j) as f64)
            }
        });
        let a_norm = renormalized_adjacency(&a).unwrap();
        let w_s = Array::from_fn(&[m, m], |k| ((k * 7) % 5) as f64 - 2.0);
        let h = Array::from_fn(&[3, m], |k| (k as f64 * 0.37).sin());
        let perm = [2, 0, 3, 1];
        let permute_cols = |x: &Array<f64>| {
            let (r, c) = (x.shape()[0], x.shape()[1]);
            Array::from_fn(&[r, c], |k| x.at(k / c, perm[k % c]))
        };
        let permute_both = |x: &Array<f64>| Array::from_fn(&[m, m], |k| x.at(perm[k / m], perm[k % m]));
        let base = conv(h.clone(), a_norm.clone(), w_s.clone());
        let permuted = conv(permute_cols(&h), permute_both(&a_norm), permute_both(&w_s));
        assert!(permuted.max_abs_diff(&permute_cols(&base)) < 1e-12);
    }

    #[test]
    fn laplacian_closed_forms() {
        assert_eq!(compute_normalized_laplacian(&Array::zeros(&[3, 3])).unwrap(), Array::eye(3));
        let a = Array::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let l = compute_normalized_laplacian(&a).unwrap();
        assert_eq!(l, Array::from_rows(&[&[1.0, -1.0], &[-1.0, 1.0]]).unwrap());
    }

    #[test]
    fn invalid_adjacency_rejected() {
        let asym = Array::from_rows(&[&[0.0, 1.0], &[0.5, 0.0]]).unwrap();
        assert!(compute_normalized_laplacian(&asym).is_err());
        let neg = Array::from_rows(&[&[0.0, -1.0], &[-1.0, 0.0]]).unwrap();
        assert!(renormalized_adjacency(&neg).is_err());
    }

    #[test]
    fn dimension_mismatch_with_ap_count() {
        let mut g = Graph::<f64>::new();
        let h = g.constant(Array::zeros(&[2, 3]));
        let w = SpaceConvWeights { w_s: g.param(Array::eye(4)), a_norm: g.constant(Array::eye(4)) };
        assert!(matches!(space_conv(&mut g, h, &w), Err(Error::Dimension { .. })));
    }
}
