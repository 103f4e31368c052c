//! Central-difference gradient verification.
//!
//! The numeric side only re-evaluates the forward closure; it never reads
//! anything recorded by the tape's backward rules.

use super::{Matrix, ParamStore, TensorError};

/// Worst discrepancy found for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub entries: usize,
    pub worst_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Denominator floor for the relative error. Entries whose analytic and
/// numeric values are both below it are compared in absolute terms.
pub const REL_ERROR_FLOOR: f64 = 1e-5;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares `analytic` gradients against central differences of `loss` with
/// step `eps`, perturbing every scalar of every tensor in `store`.
pub fn check_store<F>(
    store: &ParamStore,
    analytic: &[Matrix],
    eps: f64,
    mut loss: F,
) -> Result<Vec<TensorCheck>, TensorError>
where
    F: FnMut(&ParamStore) -> Result<f64, TensorError>,
{
    let mut probe = store.clone();
    let mut out = Vec::with_capacity(store.len());
    for id in store.ids() {
        let grad = &analytic[id.index()];
        let mut check = TensorCheck {
            name: store.name(id).to_string(),
            entries: grad.len(),
            worst_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for k in 0..grad.len() {
            let original = probe.get(id).as_slice()[k];
            probe.get_mut(id).as_mut_slice()[k] = original + eps;
            let up = loss(&probe)?;
            probe.get_mut(id).as_mut_slice()[k] = original - eps;
            let down = loss(&probe)?;
            probe.get_mut(id).as_mut_slice()[k] = original;
            let numeric = (up - down) / (2.0 * eps);
            let a = grad.as_slice()[k];
            let err = relative_error(a, numeric);
            if err > check.worst_rel_error || k == 0 {
                check.worst_rel_error = err;
                check.worst_index = k;
                check.analytic = a;
                check.numeric = numeric;
            }
        }
        out.push(check);
    }
    Ok(out)
}

/// Central-difference gradient of a scalar function of one matrix.
pub fn numeric_gradient<F>(x: &Matrix, eps: f64, mut f: F) -> Result<Matrix, TensorError>
where
    F: FnMut(&Matrix) -> Result<f64, TensorError>,
{
    let mut probe = x.clone();
    let mut grad = Matrix::zeros(x.rows(), x.cols());
    for k in 0..x.len() {
        let original = probe.as_slice()[k];
        probe.as_mut_slice()[k] = original + eps;
        let up = f(&probe)?;
        probe.as_mut_slice()[k] = original - eps;
        let down = f(&probe)?;
        probe.as_mut_slice()[k] = original;
        grad.as_mut_slice()[k] = (up - down) / (2.0 * eps);
    }
    Ok(grad)
}
