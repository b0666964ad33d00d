//! Log-domain helpers shared by the solvers and the oracle.

/// `ln Σ exp(v)` with the usual max shift. Empty input gives `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

pub fn max_value(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `c · ln Σ exp(v / c)` for `c > 0`, and its `c → 0` limit `max v` otherwise.
pub fn soft_max(values: &[f64], c: f64) -> f64 {
    if c > 0.0 {
        let scaled: Vec<f64> = values.iter().map(|v| v / c).collect();
        c * log_sum_exp(&scaled)
    } else {
        max_value(values)
    }
}

/// Normalizes a log table into probabilities.
pub fn normalize_log(values: &[f64]) -> Vec<f64> {
    let z = log_sum_exp(values);
    values.iter().map(|v| (v - z).exp()).collect()
}

/// Shifts a table in place so its largest entry is zero; returns the shift
/// that was subtracted.
pub fn shift_max_to_zero(values: &mut [f64]) -> f64 {
    let max = max_value(values);
    if max.is_finite() {
        values.iter_mut().for_each(|v| *v -= max);
        max
    } else {
        0.0
    }
}

/// Row-major strides with the last variable fastest.
pub fn strides(cards: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; cards.len()];
    for k in (0..cards.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * cards[k + 1];
    }
    strides
}

/// Advances `x` to the next assignment in lexicographic order (last position
/// fastest). Returns false once every assignment has been visited.
pub fn next_assignment(x: &mut [usize], cards: &[usize]) -> bool {
    for k in (0..x.len()).rev() {
        x[k] += 1;
        if x[k] < cards[k] {
            return true;
        }
        x[k] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_is_stable_for_large_inputs() {
        let v = [1234.0, 1232.0];
        let expected = 1232.0 + (2f64.exp() + 1.0).ln();
        assert!((log_sum_exp(&v) - expected).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }

    #[test]
    fn soft_max_approaches_max_as_c_shrinks() {
        let v = [0.3, -1.2, 0.29, 2.0 / 3.0];
        let max = max_value(&v);
        for c in [1e-2, 1e-4, 1e-6] {
            let gap = soft_max(&v, c) - max;
            assert!(gap >= 0.0);
            assert!(gap <= c * (v.len() as f64).ln() + 1e-12, "c={c} gap={gap}");
        }
        assert_eq!(soft_max(&v, 0.0), max);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[2.0, 5.0, 5.0]), 1);
    }

    #[test]
    fn strides_and_enumeration_agree() {
        let cards = [2, 3, 2];
        let s = strides(&cards);
        assert_eq!(s, vec![6, 2, 1]);
        let mut x = vec![0; 3];
        let mut idx = 0;
        loop {
            let flat: usize = x.iter().zip(&s).map(|(a, b)| a * b).sum();
            assert_eq!(flat, idx);
            idx += 1;
            if !next_assignment(&mut x, &cards) {
                break;
            }
        }
        assert_eq!(idx, 12);
    }
}
