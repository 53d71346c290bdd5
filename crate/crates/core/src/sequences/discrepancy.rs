/// Centered L2 discrepancy of a point set given as rows of length `dimension`.
///
/// Closed form:
/// `CD^2 = (13/12)^d - 2/n sum_i prod_j (1 + |x_ij - 1/2|/2 - |x_ij - 1/2|^2/2)
///        + 1/n^2 sum_{i,k} prod_j (1 + |x_ij - 1/2|/2 + |x_kj - 1/2|/2 - |x_ij - x_kj|/2)`.
pub fn centered_l2_discrepancy(points: &[f64], dimension: usize) -> f64 {
    assert!(dimension > 0 && points.len().is_multiple_of(dimension));
    let n = points.len() / dimension;
    if n == 0 {
        return 0.0;
    }
    let rows: Vec<&[f64]> = points.chunks_exact(dimension).collect();
    let single: f64 = rows
        .iter()
        .map(|row| {
            row.iter()
                .map(|&x| {
                    let c = (x - 0.5).abs();
                    1.0 + 0.5 * c - 0.5 * c * c
                })
                .product::<f64>()
        })
        .sum();
    let mut pairs = 0.0;
    for a in &rows {
        for b in &rows {
            pairs += a
                .iter()
                .zip(b.iter())
                .map(|(&x, &y)| {
                    1.0 + 0.5 * (x - 0.5).abs() + 0.5 * (y - 0.5).abs() - 0.5 * (x - y).abs()
                })
                .product::<f64>();
        }
    }
    let n = n as f64;
    let squared = (13.0f64 / 12.0).powi(dimension as i32) - 2.0 / n * single + pairs / (n * n);
    squared.max(0.0).sqrt()
}
