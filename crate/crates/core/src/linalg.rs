use alloc::vec;
use alloc::vec::Vec;

/// A non-zero vector `d` with `cols · d = 0`, where `cols[j]` is column `j`
/// of a dense matrix, or `None` when the columns are independent.
pub(crate) fn null_vector(cols: &[Vec<f64>], tol: f64) -> Option<Vec<f64>> {
    let k = cols.len();
    if k == 0 {
        return None;
    }
    let rows = cols[0].len();
    // Row-major working copy.
    let mut a: Vec<Vec<f64>> = (0..rows).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..k {
        if r == rows {
            break;
        }
        let (best, mag) = (r..rows)
            .map(|i| (i, a[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= tol {
            continue;
        }
        a.swap(r, best);
        let p = a[r][c];
        for v in a[r].iter_mut() {
            *v /= p;
        }
        for i in 0..rows {
            if i != r {
                let f = a[i][c];
                if f != 0.0 {
                    for j in 0..k {
                        a[i][j] -= f * a[r][j];
                    }
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
    }
    let free = (0..k).find(|c| !pivot_cols.contains(c))?;
    let mut d = vec![0.0; k];
    d[free] = 1.0;
    for (row, &pc) in pivot_cols.iter().enumerate() {
        d[pc] = -a[row][free];
    }
    Some(d)
}
