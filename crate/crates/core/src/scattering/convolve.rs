//! Products `y(p) = Σ_q v̂(p − q) x(q)` over a momentum lattice.
//!
//! Small lattices use a shifted-index kernel table. Large ones embed the
//! lattice in a periodic grid big enough that the cyclic convolution has no
//! wrap-around on the lattice, so both paths compute the same sum.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::lattice::{IVec3, MomentumLattice, TWO_PI};

/// Below this many lattice points the direct sum is used.
pub const DIRECT_LIMIT: usize = 10_000;

pub(crate) enum Convolver {
    Direct(DirectConv),
    Fft(FftConv),
}

impl Convolver {
    pub fn new(lattice: &MomentumLattice, kernel: &(dyn Fn(f64) -> f64 + Sync)) -> Self {
        if lattice.len() < DIRECT_LIMIT {
            Convolver::Direct(DirectConv::new(lattice, kernel))
        } else {
            Convolver::Fft(FftConv::new(lattice, kernel))
        }
    }

    pub fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        match self {
            Convolver::Direct(c) => c.apply(x, y),
            Convolver::Fft(c) => c.apply(x, y),
        }
    }
}

fn kernel_at(kernel: &(dyn Fn(f64) -> f64 + Sync), d: IVec3) -> f64 {
    let d2 = (d[0] as f64).powi(2) + (d[1] as f64).powi(2) + (d[2] as f64).powi(2);
    kernel(TWO_PI * d2.sqrt())
}

pub(crate) struct DirectConv {
    points: Vec<IVec3>,
    reach: i32,
    table: Vec<f64>,
}

impl DirectConv {
    pub fn new(lattice: &MomentumLattice, kernel: &(dyn Fn(f64) -> f64 + Sync)) -> Self {
        let reach = 2 * lattice.integer_radius();
        let side = (2 * reach + 1) as usize;
        let mut table = vec![0.0; side * side * side];
        for x in -reach..=reach {
            for y in -reach..=reach {
                for z in -reach..=reach {
                    let slot = ((x + reach) as usize * side + (y + reach) as usize) * side + (z + reach) as usize;
                    table[slot] = kernel_at(kernel, [x, y, z]);
                }
            }
        }
        DirectConv {
            points: lattice.points().to_vec(),
            reach,
            table,
        }
    }

    fn slot(&self, d: IVec3) -> usize {
        let side = (2 * self.reach + 1) as usize;
        ((d[0] + self.reach) as usize * side + (d[1] + self.reach) as usize) * side + (d[2] + self.reach) as usize
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let row = |p: &IVec3| {
            let mut terms = Vec::with_capacity(self.points.len());
            for (q, &xq) in self.points.iter().zip(x) {
                let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                terms.push(self.table[self.slot(d)] * xq);
            }
            crate::sum::pairwise_sum(&terms)
        };
        #[cfg(feature = "parallel")]
        {
            use rayon::prelude::*;
            y.par_iter_mut().zip(self.points.par_iter()).for_each(|(yi, p)| *yi = row(p));
        }
        #[cfg(not(feature = "parallel"))]
        for (yi, p) in y.iter_mut().zip(&self.points) {
            *yi = row(p);
        }
    }
}

/// Smallest `2^a 3^b 5^c 7^d` that is at least `n`.
pub(crate) fn smooth_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for f in [2, 3, 5, 7] {
            while r % f == 0 {
                r /= f;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

pub(crate) struct FftConv {
    n: usize,
    radius: i32,
    slots: Vec<usize>,
    kernel_hat: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex<f64>>,
    line: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl FftConv {
    pub fn new(lattice: &MomentumLattice, kernel: &(dyn Fn(f64) -> f64 + Sync)) -> Self {
        let radius = lattice.integer_radius();
        let n = smooth_size(4 * radius as usize + 1);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        let signed = |i: usize| if i <= n / 2 { i as i32 } else { i as i32 - n as i32 };
        let mut buf = vec![Complex::new(0.0, 0.0); n * n * n];
        for (idx, c) in buf.iter_mut().enumerate() {
            let d = [signed(idx / (n * n)), signed(idx / n % n), signed(idx % n)];
            *c = Complex::new(kernel_at(kernel, d), 0.0);
        }
        let wrap = |i: i32| i.rem_euclid(n as i32) as usize;
        let slots = lattice
            .points()
            .iter()
            .map(|p| (wrap(p[0]) * n + wrap(p[1])) * n + wrap(p[2]))
            .collect();
        let mut conv = FftConv {
            n,
            radius,
            slots,
            kernel_hat: Vec::new(),
            forward,
            inverse,
            buf: Vec::new(),
            line: vec![Complex::new(0.0, 0.0); n * n],
            scratch: vec![Complex::new(0.0, 0.0); scratch_len],
        };
        // The kernel is real and even, so its transform is real.
        conv.transform_full(&mut buf, false);
        let scale = 1.0 / (n * n * n) as f64;
        conv.kernel_hat = buf.iter().map(|c| c.re * scale).collect();
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        conv.buf = buf;
        conv
    }

    fn active(&self) -> Vec<usize> {
        let n = self.n as i32;
        (-self.radius..=self.radius).map(|i| i.rem_euclid(n) as usize).collect()
    }

    fn plan(&self, inverse: bool) -> Arc<dyn Fft<f64>> {
        if inverse {
            self.inverse.clone()
        } else {
            self.forward.clone()
        }
    }

    fn pass_z(&mut self, buf: &mut [Complex<f64>], rows: Option<&[usize]>, inverse: bool) {
        let n = self.n;
        let fft = self.plan(inverse);
        match rows {
            None => fft.process_with_scratch(buf, &mut self.scratch),
            Some(active) => {
                for &x in active {
                    for &y in active {
                        let start = (x * n + y) * n;
                        fft.process_with_scratch(&mut buf[start..start + n], &mut self.scratch);
                    }
                }
            }
        }
    }

    fn pass_y(&mut self, buf: &mut [Complex<f64>], slabs: &[usize], inverse: bool) {
        let n = self.n;
        let fft = self.plan(inverse);
        for &x in slabs {
            let slab = &mut buf[x * n * n..(x + 1) * n * n];
            for y in 0..n {
                for z in 0..n {
                    self.line[z * n + y] = slab[y * n + z];
                }
            }
            fft.process_with_scratch(&mut self.line, &mut self.scratch);
            for y in 0..n {
                for z in 0..n {
                    slab[y * n + z] = self.line[z * n + y];
                }
            }
        }
    }

    fn pass_x(&mut self, buf: &mut [Complex<f64>], inverse: bool) {
        let n = self.n;
        let fft = self.plan(inverse);
        for y in 0..n {
            for x in 0..n {
                let base = (x * n + y) * n;
                for z in 0..n {
                    self.line[z * n + x] = buf[base + z];
                }
            }
            fft.process_with_scratch(&mut self.line, &mut self.scratch);
            for x in 0..n {
                let base = (x * n + y) * n;
                for z in 0..n {
                    buf[base + z] = self.line[z * n + x];
                }
            }
        }
    }

    fn transform_full(&mut self, buf: &mut [Complex<f64>], inverse: bool) {
        let all: Vec<usize> = (0..self.n).collect();
        self.pass_z(buf, None, inverse);
        self.pass_y(buf, &all, inverse);
        self.pass_x(buf, inverse);
    }

    pub fn apply(&mut self, x: &[f64], y: &mut [f64]) {
        let mut buf = std::mem::take(&mut self.buf);
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (&s, &v) in self.slots.iter().zip(x) {
            buf[s] = Complex::new(v, 0.0);
        }
        let active = self.active();
        // Forward: only lines that can hold data are transformed.
        self.pass_z(&mut buf, Some(&active), false);
        self.pass_y(&mut buf, &active, false);
        self.pass_x(&mut buf, false);
        for (c, &k) in buf.iter_mut().zip(&self.kernel_hat) {
            *c *= k;
        }
        // Inverse: only lines that feed lattice outputs are needed.
        self.pass_x(&mut buf, true);
        self.pass_y(&mut buf, &active, true);
        self.pass_z(&mut buf, Some(&active), true);
        for (yi, &s) in y.iter_mut().zip(&self.slots) {
            *yi = buf[s].re;
        }
        self.buf = buf;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_sizes() {
        assert_eq!(smooth_size(1), 1);
        assert_eq!(smooth_size(11), 12);
        assert_eq!(smooth_size(97), 98);
        assert_eq!(smooth_size(218), 224);
    }

    #[test]
    fn paths_agree() {
        let lat = MomentumLattice::build(4.3 * TWO_PI).unwrap();
        let kernel = |k: f64| 3.0 * (-0.002 * k * k).exp() + 1.0 / (1.0 + k);
        let direct = DirectConv::new(&lat, &kernel);
        let mut fft = FftConv::new(&lat, &kernel);
        let x: Vec<f64> = (0..lat.len()).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.4).collect();
        let mut a = vec![0.0; lat.len()];
        let mut b = vec![0.0; lat.len()];
        direct.apply(&x, &mut a);
        fft.apply(&x, &mut b);
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() <= 1e-10 * scale, "{u} vs {v}");
        }
    }
}
