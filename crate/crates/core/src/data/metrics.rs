use crate::error::{invalid, shape, Error, Result};
use crate::linalg::Vector;

/// `1 - |y - f|^2 / |y - mean(y)|^2`.
pub fn r_squared(y: &Vector, f_hat: &Vector) -> Result<f64> {
    if y.len() != f_hat.len() {
        return Err(shape(format!(
            "{} responses vs {} predictions",
            y.len(),
            f_hat.len()
        )));
    }
    if y.is_empty() {
        return Err(invalid("empty input"));
    }
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    if tss == 0.0 {
        return Err(Error::Undefined("R^2 of a constant response"));
    }
    let rss: f64 = y
        .iter()
        .zip(f_hat.iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(1.0 - rss / tss)
}

pub fn accuracy(labels: &[usize], predicted: &[usize]) -> Result<f64> {
    if labels.len() != predicted.len() {
        return Err(shape(format!(
            "{} labels vs {} predictions",
            labels.len(),
            predicted.len()
        )));
    }
    if labels.is_empty() {
        return Err(invalid("empty input"));
    }
    let hits = labels.iter().zip(predicted).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / labels.len() as f64)
}
