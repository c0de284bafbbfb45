use crate::error::{Error, Result};

/// Empirical CVaR of a reward sample: the mean of the ⌈α·n⌉ smallest
/// values. α = 1 gives the sample mean.
pub fn cvar_empirical(samples: &[f64], alpha: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParams(format!("alpha {alpha} outside (0, 1]")));
    }
    let n = samples.len();
    let raw = alpha * n as f64;
    // α·n like 0.07·100 lands a hair above an integer; do not round that up.
    let tail = ((raw - 1e-9 * raw.max(1.0)).ceil() as usize).clamp(1, n);
    let mut sorted = samples.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Ok(sorted[..tail].iter().sum::<f64>() / tail as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_samples() {
        for alpha in [0.01, 0.3, 1.0] {
            assert_eq!(cvar_empirical(&[2.5; 4], alpha).unwrap(), 2.5);
        }
    }

    #[test]
    fn alpha_one_is_mean() {
        let s = [3.0, 1.0, 2.0, 6.0];
        assert_eq!(cvar_empirical(&s, 1.0).unwrap(), 3.0);
    }

    #[test]
    fn lower_tail_of_one_to_hundred() {
        let s: Vec<f64> = (1..=100).rev().map(f64::from).collect();
        assert_eq!(cvar_empirical(&s, 0.1).unwrap(), 5.5);
        assert_eq!(cvar_empirical(&s, 0.07).unwrap(), 4.0);
    }

    #[test]
    fn tiny_alpha_takes_the_minimum() {
        assert_eq!(cvar_empirical(&[4.0, 1.0, 9.0], 1e-6).unwrap(), 1.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(cvar_empirical(&[], 0.5), Err(Error::EmptySamples)));
        assert!(cvar_empirical(&[1.0], 0.0).is_err());
    }
}
