//! Volume-preserving reshape folding adjacent time frames into channels.

use ndarray::Array2;

use crate::error::{Error, Result};

/// `[C × T] → [factor·C × T/factor]`. Output channel `k·C + c` holds the
/// time samples `x[c, factor·t + k]`, so for one input channel and
/// factor 2 the rows are the even and odd frames.
pub fn squeeze<T: Copy + num_traits::Zero>(x: &Array2<T>, factor: usize) -> Result<Array2<T>> {
    let (c, t) = x.dim();
    if factor == 0 || t % factor != 0 {
        return Err(Error::Shape(format!(
            "squeeze factor {factor} does not divide time length {t}"
        )));
    }
    let mut out = Array2::<T>::zeros((c * factor, t / factor));
    for k in 0..factor {
        for ch in 0..c {
            for tt in 0..t / factor {
                out[[k * c + ch, tt]] = x[[ch, factor * tt + k]];
            }
        }
    }
    Ok(out)
}

/// Exact inverse of [`squeeze`].
pub fn unsqueeze<T: Copy + num_traits::Zero>(y: &Array2<T>, factor: usize) -> Result<Array2<T>> {
    let (cf, t) = y.dim();
    if factor == 0 || cf % factor != 0 {
        return Err(Error::Shape(format!(
            "unsqueeze factor {factor} does not divide channel count {cf}"
        )));
    }
    let c = cf / factor;
    let mut out = Array2::<T>::zeros((c, t * factor));
    for k in 0..factor {
        for ch in 0..c {
            for tt in 0..t {
                out[[ch, factor * tt + k]] = y[[k * c + ch, tt]];
            }
        }
    }
    Ok(out)
}
