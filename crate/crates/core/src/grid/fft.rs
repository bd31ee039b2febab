//! Square 2D FFTs on row-major buffers, with a per-thread plan cache.

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::Arc;

pub(crate) struct Fft2 {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    scratch: RefCell<Vec<Complex64>>,
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static PLANS: RefCell<HashMap<usize, Rc<Fft2>>> = RefCell::new(HashMap::new());
}

pub(crate) fn plan(n: usize) -> Rc<Fft2> {
    PLANS.with(|plans| {
        plans
            .borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let (fwd, inv) = PLANNER.with(|p| {
                    let mut p = p.borrow_mut();
                    (p.plan_fft_forward(n), p.plan_fft_inverse(n))
                });
                let len = fwd
                    .get_inplace_scratch_len()
                    .max(inv.get_inplace_scratch_len());
                Rc::new(Fft2 {
                    n,
                    fwd,
                    inv,
                    scratch: RefCell::new(vec![Complex64::new(0.0, 0.0); len]),
                })
            })
            .clone()
    })
}

impl Fft2 {
    /// Unnormalized forward DFT, `sum_x f(x) e^{-2 pi i k.x/n}`.
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &*self.fwd);
    }

    /// Unnormalized inverse DFT.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &*self.inv);
    }

    fn run(&self, data: &mut [Complex64], fft: &dyn Fft<f64>) {
        assert_eq!(data.len(), self.n * self.n);
        let mut scratch = self.scratch.borrow_mut();
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, self.n);
        fft.process_with_scratch(data, &mut scratch);
        transpose(data, self.n);
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    const B: usize = 16;
    for bi in (0..n).step_by(B) {
        for bj in (bi..n).step_by(B) {
            for i in bi..(bi + B).min(n) {
                let j0 = if bi == bj { i + 1 } else { bj };
                for j in j0..(bj + B).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}
