//! Factor/weight vector types, the weighted cross-product objective and
//! Pearson correlation.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted positions of the nonzero entries.
pub fn support(values: ArrayView1<'_, f64>) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| (*v != 0.0).then_some(i))
        .collect()
}

/// A unit-norm loading vector with at most `budget` nonzeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorVector {
    pub values: Array1<f64>,
    pub budget: usize,
}

impl FactorVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn support(&self) -> Vec<usize> {
        support(self.values.view())
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }

    pub fn norm(&self) -> f64 {
        self.values.dot(&self.values).sqrt()
    }
}

/// Per-sample weights in `[0, 1]` with at most `budget` nonzeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub values: Array1<f64>,
    pub budget: usize,
}

impl WeightVector {
    pub fn ones(n: usize) -> Self {
        WeightVector {
            values: Array1::ones(n),
            budget: n,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Samples with a strictly positive weight.
    pub fn selected(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, w)| (*w > 0.0).then_some(i))
            .collect()
    }

    pub fn nnz(&self) -> usize {
        self.values.iter().filter(|v| **v != 0.0).count()
    }
}

/// `-sum_j w_j a_j b_j`, the objective written on latent scores `a = Xu`,
/// `b = Yv`. Every solver evaluates its objective through this function so
/// that traces from different code paths are bitwise comparable.
pub fn neg_weighted_inner(
    w: ArrayView1<'_, f64>,
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
) -> f64 {
    let mut acc = 0.0;
    for ((wj, aj), bj) in w.iter().zip(a.iter()).zip(b.iter()) {
        acc += wj * (aj * bj);
    }
    -acc
}

fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!(
            "{what} has length {got}, expected {want}"
        )));
    }
    Ok(())
}

/// Checks that `u`, `v`, `w` conform to `X` (n x p) and `Y` (n x q).
pub(crate) fn check_pair_dims(
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<()> {
    if x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, Y has {}",
            x.nrows(),
            y.nrows()
        )));
    }
    check_len("u", u.len(), x.ncols())?;
    check_len("v", v.len(), y.ncols())?;
    check_len("w", w.len(), x.nrows())
}

/// `f(u, v, w) = -w^T [(Xu) .* (Yv)]`.
pub fn objective(
    u: ArrayView1<'_, f64>,
    v: ArrayView1<'_, f64>,
    w: ArrayView1<'_, f64>,
    x: ArrayView2<'_, f64>,
    y: ArrayView2<'_, f64>,
) -> Result<f64> {
    check_pair_dims(u, v, w, x, y)?;
    let xu = x.dot(&u);
    let yv = y.dot(&v);
    Ok(neg_weighted_inner(w, xu.view(), yv.view()))
}

/// Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::ZeroVariance);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    type Instance = (
        Array2<f64>,
        Array2<f64>,
        Array1<f64>,
        Array1<f64>,
        Array1<f64>,
    );

    fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
        let n = rng.random_range(2..12);
        let p = rng.random_range(1..9);
        let q = rng.random_range(1..9);
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y = Array2::from_shape_fn((n, q), |_| rng.random::<f64>() * 2.0 - 1.0);
        let u = Array1::from_shape_fn(p, |_| rng.random::<f64>() - 0.5);
        let v = Array1::from_shape_fn(q, |_| rng.random::<f64>() - 0.5);
        let w = Array1::from_shape_fn(n, |_| rng.random::<f64>());
        (x, y, u, v, w)
    }

    #[test]
    fn zero_weight_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (x, y, u, v, w) = random_instance(&mut rng);
        let f = objective(u.view(), v.view(), (&w * 0.0).view(), x.view(), y.view()).unwrap();
        assert_eq!(f, 0.0);
    }

    #[test]
    fn unit_weight_is_negated_cross_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (x, y, u, v, w) = random_instance(&mut rng);
        let ones = Array1::ones(w.len());
        let f = objective(u.view(), v.view(), ones.view(), x.view(), y.view()).unwrap();
        let spls = u.dot(&x.t().dot(&y).dot(&v));
        assert!((f + spls).abs() <= 1e-12 * (1.0 + spls.abs()));
    }

    #[test]
    fn three_algebraic_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let (x, y, u, v, w) = random_instance(&mut rng);
            let f = objective(u.view(), v.view(), w.view(), x.view(), y.view()).unwrap();
            let form_u = -u.dot(&x.t().dot(&(&w * &y.dot(&v))));
            let form_v = -v.dot(&y.t().dot(&(&w * &x.dot(&u))));
            let scale = f.abs().max(1e-300);
            assert!((f - form_u).abs() / scale < 1e-9 || (f - form_u).abs() < 1e-14);
            assert!((f - form_v).abs() / scale < 1e-9 || (f - form_v).abs() < 1e-14);
        }
    }

    #[test]
    fn objective_dimension_mismatch() {
        let x = Array2::<f64>::zeros((3, 2));
        let y = Array2::<f64>::zeros((3, 4));
        let r = objective(
            Array1::zeros(3).view(),
            Array1::zeros(4).view(),
            Array1::zeros(3).view(),
            x.view(),
            y.view(),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn pearson_self_and_flip() {
        let x = [0.3, -1.2, 4.0, 2.2, 0.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &x).unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_textbook_formula() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let y = [2.0, 1.0, 5.0, 6.0];
        // single-pass textbook formula
        let n = 4.0;
        let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|b| b * b).sum();
        let r = (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt());
        assert!((pearson(&x, &y).unwrap() - r).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(Error::ZeroVariance)
        ));
    }

    proptest! {
        #[test]
        fn pearson_bounded_and_affine_invariant(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
            a in 0.01f64..50.0, b in -20.0f64..20.0,
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let Ok(r) = pearson(&x, &y) {
                prop_assert!(r.abs() <= 1.0);
                let xs: Vec<f64> = x.iter().map(|v| a * v + b).collect();
                let r2 = pearson(&xs, &y).unwrap();
                prop_assert!((r - r2).abs() < 1e-10);
            }
        }
    }
}
