//! Blocked dense score computation S = A * B^T for row-major matrices.
//!
//! Used by the exact auxiliary-variable update, where a block of word rows
//! is scored against every context row. B is tiled so a panel of context
//! rows stays cache-resident while the block of word rows streams by.

/// `a`: m x k row-major, `b`: n x k row-major, `out`: m x n row-major.
pub fn block_scores(a: &[f64], b: &[f64], k: usize, out: &mut [f64]) {
    assert!(k > 0);
    assert_eq!(a.len() % k, 0);
    assert_eq!(b.len() % k, 0);
    let m = a.len() / k;
    let n = b.len() / k;
    assert_eq!(out.len(), m * n);

    // ~32 KiB of B rows per tile at k = 100.
    let tile = (32_768 / (8 * k)).max(8);
    for jt in (0..n).step_by(tile) {
        let jhi = (jt + tile).min(n);
        for i in 0..m {
            let ar = &a[i * k..(i + 1) * k];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in jt..jhi {
                let br = &b[j * k..(j + 1) * k];
                let mut acc0 = 0.0;
                let mut acc1 = 0.0;
                let mut acc2 = 0.0;
                let mut acc3 = 0.0;
                let chunks = k / 4;
                for t in 0..chunks {
                    let t4 = t * 4;
                    acc0 += ar[t4] * br[t4];
                    acc1 += ar[t4 + 1] * br[t4 + 1];
                    acc2 += ar[t4 + 2] * br[t4 + 2];
                    acc3 += ar[t4 + 3] * br[t4 + 3];
                }
                let mut acc = (acc0 + acc1) + (acc2 + acc3);
                for t in chunks * 4..k {
                    acc += ar[t] * br[t];
                }
                orow[j] = acc;
            }
        }
    }
}
