//! Fixed-order reductions. Every norm in the crate goes through these so
//! that repeated runs produce bit-identical reports.

const LEAF: usize = 64;

/// Pairwise (cascade) summation with a fixed split order.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(v)` over a slice, without materializing `f(v)`.
pub fn pairwise_map<T>(values: &[T], f: &impl Fn(&T) -> f64) -> f64 {
    if values.len() <= LEAF {
        return values.iter().map(f).sum();
    }
    let mid = values.len() / 2;
    pairwise_map(&values[..mid], f) + pairwise_map(&values[mid..], f)
}

/// Pairwise sum of `f(i, v)` where `i` is the position in the original slice.
pub fn pairwise_indexed<T>(values: &[T], f: &impl Fn(usize, &T) -> f64) -> f64 {
    fn go<T>(values: &[T], offset: usize, f: &impl Fn(usize, &T) -> f64) -> f64 {
        if values.len() <= LEAF {
            return values
                .iter()
                .enumerate()
                .map(|(i, v)| f(offset + i, v))
                .sum();
        }
        let mid = values.len() / 2;
        go(&values[..mid], offset, f) + go(&values[mid..], offset + mid, f)
    }
    go(values, 0, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_naive_sum_on_integers() {
        let v: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
        assert_eq!(pairwise_map(&v, &|x| 2.0 * x), 1001000.0);
        assert_eq!(pairwise_indexed(&v, &|i, x| x - i as f64), 1000.0);
    }

    #[test]
    fn beats_naive_accumulation() {
        let v = vec![0.1; 1 << 20];
        let exact = 0.1 * (1 << 20) as f64;
        let naive: f64 = v.iter().sum();
        assert!((pairwise_sum(&v) - exact).abs() <= (naive - exact).abs());
    }
}
