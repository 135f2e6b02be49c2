//! Cached 3-D complex FFTs built from 1-D rustfft plans.
//!
//! Layout: flat index `(i*n + j)*n + k` for axes `(x, y, z)`; the z axis is
//! contiguous. No normalization is applied here — the forward (physical to
//! spectral) caller divides by `n^3`.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

type Plan = Arc<dyn Fft<f64>>;

static PLANS: LazyLock<Mutex<HashMap<(usize, bool), Plan>>> =
    LazyLock::new(|| Mutex::new(HashMap::new()));

fn plan(n: usize, forward: bool) -> Plan {
    let mut cache = PLANS.lock().unwrap();
    cache
        .entry((n, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

/// In-place 3-D DFT over an `n^3` buffer. `forward` uses the `e^{-ik.x}`
/// kernel (physical to spectral direction), the inverse uses `e^{+ik.x}`.
pub fn fft3(data: &mut [Complex64], n: usize, forward: bool) {
    assert_eq!(data.len(), n * n * n, "buffer does not match grid size");
    let p = plan(n, forward);
    let mut scratch = vec![Complex64::default(); p.get_inplace_scratch_len()];

    // z axis: contiguous runs of length n.
    for chunk in data.chunks_exact_mut(n) {
        p.process_with_scratch(chunk, &mut scratch);
    }

    // y axis: stride n within each x-slab.
    let mut col = vec![Complex64::default(); n];
    for i in 0..n {
        for k in 0..n {
            let base = i * n * n + k;
            for j in 0..n {
                col[j] = data[base + j * n];
            }
            p.process_with_scratch(&mut col, &mut scratch);
            for j in 0..n {
                data[base + j * n] = col[j];
            }
        }
    }

    // x axis: stride n^2.
    for j in 0..n {
        for k in 0..n {
            let base = j * n + k;
            for i in 0..n {
                col[i] = data[base + i * n * n];
            }
            p.process_with_scratch(&mut col, &mut scratch);
            for i in 0..n {
                data[base + i * n * n] = col[i];
            }
        }
    }
}
