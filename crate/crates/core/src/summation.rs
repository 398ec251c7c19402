use std::ops::Add;

/// Column-wise pairwise sum of equal-length vectors, in a fixed tree
/// order so results do not depend on how the rows were produced.
pub(crate) fn pairwise_sum_vecs<T>(rows: &[Vec<T>], width: usize) -> Vec<T>
where
    T: Copy + Default + Add<Output = T>,
{
    match rows.len() {
        0 => vec![T::default(); width],
        1 => rows[0].clone(),
        n => {
            let mid = n / 2;
            let left = pairwise_sum_vecs(&rows[..mid], width);
            let right = pairwise_sum_vecs(&rows[mid..], width);
            left.into_iter().zip(right).map(|(a, b)| a + b).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_sums() {
        let rows = vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]];
        assert_eq!(pairwise_sum_vecs(&rows, 2), vec![9.0, 12.0]);
    }
}
