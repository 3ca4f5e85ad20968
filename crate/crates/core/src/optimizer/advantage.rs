use crate::error::{Error, Result};

/// `(R_i - mean) / std` with the population standard deviation. A group whose
/// std is below `std_floor` gets all-zero advantages.
pub fn normalize_advantages(rewards: &[f64], std_floor: f64) -> Result<Vec<f64>> {
    let g = rewards.len();
    if g < 2 {
        return Err(Error::Group(format!("need at least 2 rewards, got {g}")));
    }
    if rewards.iter().any(|r| !r.is_finite()) {
        return Err(Error::Group("non-finite reward".into()));
    }
    let mean = rewards.iter().sum::<f64>() / g as f64;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g as f64;
    let std = var.sqrt();
    if std < std_floor {
        return Ok(vec![0.0; g]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}
