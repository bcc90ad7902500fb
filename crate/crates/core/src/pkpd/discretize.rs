use nalgebra::DMatrix;

use crate::{Error, Result};

/// Exact zero-order-hold discretization over a sampling interval `ts`:
/// `Ad = exp(Ac·ts)`, `Bd = ∫₀^ts exp(Ac·s) ds · Bc`.
///
/// Both blocks come from one exponential of the augmented matrix
/// `[[Ac, Bc], [0, 0]]·ts`.
pub fn discretize(
    ac: &DMatrix<f64>,
    bc: &DMatrix<f64>,
    ts: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if !(ts > 0.0 && ts.is_finite()) {
        return Err(Error::domain(format!(
            "sampling time must be positive, got {ts}"
        )));
    }
    let n = ac.nrows();
    let m = bc.ncols();
    if !ac.is_square() || bc.nrows() != n {
        return Err(Error::shape(
            "discretize needs a square Ac and a matching Bc",
        ));
    }
    let mut aug = DMatrix::zeros(n + m, n + m);
    aug.view_mut((0, 0), (n, n)).copy_from(ac);
    aug.view_mut((0, n), (n, m)).copy_from(bc);
    let e = (aug * ts).exp();
    let ad = e.view((0, 0), (n, n)).into_owned();
    let bd = e.view((0, n), (n, m)).into_owned();
    if !ad.iter().chain(bd.iter()).all(|v| v.is_finite()) {
        return Err(Error::Numerical(
            "discretization produced non-finite entries".into(),
        ));
    }
    Ok((ad, bd))
}
