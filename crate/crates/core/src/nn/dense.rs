use crate::error::{Error, Result};

use super::tensor::Tensor2;

fn check(w: &Tensor2, b: &[f64], x: &[f64]) -> Result<()> {
    if b.len() != w.rows() || x.len() != w.cols() {
        return Err(Error::Shape(format!(
            "dense {}x{} with bias {} and input {}",
            w.rows(),
            w.cols(),
            b.len(),
            x.len()
        )));
    }
    Ok(())
}

/// `y = W x + b`
pub fn dense_forward(w: &Tensor2, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    check(w, b, x)?;
    let mut y = b.to_vec();
    w.matvec_acc(x, &mut y);
    Ok(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub dw: Tensor2,
    pub db: Vec<f64>,
    pub dx: Vec<f64>,
}

pub fn dense_backward(w: &Tensor2, x: &[f64], upstream: &[f64]) -> Result<DenseGrads> {
    let mut dw = Tensor2::zeros(w.rows(), w.cols());
    let mut db = vec![0.0; w.rows()];
    let mut dx = vec![0.0; w.cols()];
    dense_backward_acc(w, x, upstream, &mut dw, &mut db, Some(&mut dx))?;
    Ok(DenseGrads { dw, db, dx })
}

/// Accumulating form used inside models.
pub fn dense_backward_acc(
    w: &Tensor2,
    x: &[f64],
    upstream: &[f64],
    dw: &mut Tensor2,
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) -> Result<()> {
    if upstream.len() != w.rows() || x.len() != w.cols() || dw.shape() != w.shape() || db.len() != w.rows() {
        return Err(Error::Shape("dense backward".into()));
    }
    dw.add_outer(upstream, x);
    for (d, u) in db.iter_mut().zip(upstream) {
        *d += u;
    }
    if let Some(dx) = dx {
        w.matvec_t_acc(upstream, dx);
    }
    Ok(())
}
