use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FdEstimate {
    pub value: f64,
    /// Difference between the two highest Richardson levels.
    pub error: f64,
}

/// Central difference at steps step·2^j, j = 0..=levels, combined by Richardson
/// extrapolation.
pub fn fd_derivative<F>(f: F, t0: f64, step: f64, richardson_levels: usize) -> Result<FdEstimate>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut table: Vec<f64> = Vec::with_capacity(richardson_levels + 1);
    for j in 0..=richardson_levels {
        let h = step * f64::powi(2.0, j as i32);
        table.push((f(t0 + h)? - f(t0 - h)?) / (2.0 * h));
    }
    // table[j] has error c h_j² + …; eliminate successive even powers
    let mut prev_best = table[0];
    for m in 1..=richardson_levels {
        let factor = f64::powi(4.0, m as i32);
        let next: Vec<f64> = table
            .windows(2)
            .map(|w| (factor * w[0] - w[1]) / (factor - 1.0))
            .collect();
        prev_best = table[0];
        table = next;
    }
    let value = table[0];
    let error = if richardson_levels == 0 {
        0.0
    } else {
        (value - prev_best).abs()
    };
    Ok(FdEstimate { value, error })
}
