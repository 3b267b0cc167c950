//! Dense, strided 2D convolution and circular 1D convolution layers with
//! explicit backward passes. Convolutions are lowered to GEMM via im2col.
//!
//! All buffers are row-major `f64`. Weight layouts follow the usual
//! `[out, in, k...]` convention.

use ndarray::linalg::general_mat_mul;
use ndarray::{ArrayView2, ArrayViewMut2};
use rand::Rng;

fn view(data: &[f64], rows: usize, cols: usize) -> ArrayView2<'_, f64> {
    ArrayView2::from_shape((rows, cols), data).expect("buffer matches shape")
}

fn view_mut(data: &mut [f64], rows: usize, cols: usize) -> ArrayViewMut2<'_, f64> {
    ArrayViewMut2::from_shape((rows, cols), data).expect("buffer matches shape")
}

/// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
/// He-uniform weights: keeps activation variance roughly constant through
/// stacked ReLU layers so plain momentum SGD reaches the early layers.
fn init_uniform<R: Rng>(len: usize, fan_in: usize, rng: &mut R) -> Vec<f64> {
    let bound = (6.0 / fan_in as f64).sqrt();
    (0..len).map(|_| rng.random_range(-bound..bound)).collect()
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Zeroes `grad` wherever the ReLU output was not positive.
pub fn relu_backward(output: &[f64], grad: &mut [f64]) {
    for (g, &o) in grad.iter_mut().zip(output) {
        if o <= 0.0 {
            *g = 0.0;
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub in_dim: usize,
    pub out_dim: usize,
    /// `[out_dim, in_dim]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Linear {
    pub fn new<R: Rng>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        Self {
            in_dim,
            out_dim,
            weight: init_uniform(in_dim * out_dim, in_dim, rng),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: vec![0.0; self.weight.len()],
            bias: vec![0.0; self.bias.len()],
            ..*self
        }
    }

    /// `x: [batch, in]` to `[batch, out]`.
    pub fn forward(&self, x: &[f64], batch: usize) -> Vec<f64> {
        let mut y: Vec<f64> = (0..batch).flat_map(|_| self.bias.iter().copied()).collect();
        general_mat_mul(
            1.0,
            &view(x, batch, self.in_dim),
            &view(&self.weight, self.out_dim, self.in_dim).t(),
            1.0,
            &mut view_mut(&mut y, batch, self.out_dim),
        );
        y
    }

    /// Accumulates parameter gradients into `grad` and returns `dL/dx`.
    pub fn backward(
        &self,
        x: &[f64],
        dy: &[f64],
        batch: usize,
        grad: &mut Linear,
        need_dx: bool,
    ) -> Option<Vec<f64>> {
        general_mat_mul(
            1.0,
            &view(dy, batch, self.out_dim).t(),
            &view(x, batch, self.in_dim),
            1.0,
            &mut view_mut(&mut grad.weight, self.out_dim, self.in_dim),
        );
        for row in dy.chunks_exact(self.out_dim) {
            for (g, d) in grad.bias.iter_mut().zip(row) {
                *g += d;
            }
        }
        need_dx.then(|| {
            let mut dx = vec![0.0; batch * self.in_dim];
            general_mat_mul(
                1.0,
                &view(dy, batch, self.out_dim),
                &view(&self.weight, self.out_dim, self.in_dim),
                0.0,
                &mut view_mut(&mut dx, batch, self.in_dim),
            );
            dx
        })
    }
}

/// Unpadded strided 2D convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    /// `[c_out, c_in, kernel, kernel]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Conv2d {
    pub fn new<R: Rng>(c_in: usize, c_out: usize, kernel: usize, stride: usize, rng: &mut R) -> Self {
        let fan_in = c_in * kernel * kernel;
        Self {
            c_in,
            c_out,
            kernel,
            stride,
            weight: init_uniform(c_out * fan_in, fan_in, rng),
            bias: vec![0.0; c_out],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: vec![0.0; self.weight.len()],
            bias: vec![0.0; self.bias.len()],
            ..*self
        }
    }

    pub fn output_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h - self.kernel) / self.stride + 1,
            (w - self.kernel) / self.stride + 1,
        )
    }

    fn patch_len(&self) -> usize {
        self.c_in * self.kernel * self.kernel
    }

    /// `[c_in*k*k, ho*wo]` patch matrix of one `[c_in, h, w]` input.
    pub fn im2col(&self, x: &[f64], h: usize, w: usize) -> Vec<f64> {
        let (ho, wo) = self.output_hw(h, w);
        let k = self.kernel;
        let mut cols = vec![0.0; self.patch_len() * ho * wo];
        for c in 0..self.c_in {
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let dst = &mut cols[row * ho * wo..(row + 1) * ho * wo];
                    for oi in 0..ho {
                        let src = &x[(c * h + oi * self.stride + ki) * w..];
                        for oj in 0..wo {
                            dst[oi * wo + oj] = src[oj * self.stride + kj];
                        }
                    }
                }
            }
        }
        cols
    }

    fn col2im(&self, cols: &[f64], h: usize, w: usize) -> Vec<f64> {
        let (ho, wo) = self.output_hw(h, w);
        let k = self.kernel;
        let mut dx = vec![0.0; self.c_in * h * w];
        for c in 0..self.c_in {
            for ki in 0..k {
                for kj in 0..k {
                    let row = (c * k + ki) * k + kj;
                    let src = &cols[row * ho * wo..(row + 1) * ho * wo];
                    for oi in 0..ho {
                        let base = (c * h + oi * self.stride + ki) * w + kj;
                        for oj in 0..wo {
                            dx[base + oj * self.stride] += src[oi * wo + oj];
                        }
                    }
                }
            }
        }
        dx
    }

    /// Returns `(patches, output)`; output is `[c_out, ho*wo]` before activation.
    pub fn forward(&self, x: &[f64], h: usize, w: usize) -> (Vec<f64>, Vec<f64>) {
        let (ho, wo) = self.output_hw(h, w);
        let cols = self.im2col(x, h, w);
        let mut y: Vec<f64> = self
            .bias
            .iter()
            .flat_map(|&b| std::iter::repeat_n(b, ho * wo))
            .collect();
        general_mat_mul(
            1.0,
            &view(&self.weight, self.c_out, self.patch_len()),
            &view(&cols, self.patch_len(), ho * wo),
            1.0,
            &mut view_mut(&mut y, self.c_out, ho * wo),
        );
        (cols, y)
    }

    pub fn backward(
        &self,
        cols: &[f64],
        dy: &[f64],
        h: usize,
        w: usize,
        grad: &mut Conv2d,
        need_dx: bool,
    ) -> Option<Vec<f64>> {
        let (ho, wo) = self.output_hw(h, w);
        let p = ho * wo;
        general_mat_mul(
            1.0,
            &view(dy, self.c_out, p),
            &view(cols, self.patch_len(), p).t(),
            1.0,
            &mut view_mut(&mut grad.weight, self.c_out, self.patch_len()),
        );
        for (g, row) in grad.bias.iter_mut().zip(dy.chunks_exact(p)) {
            *g += row.iter().sum::<f64>();
        }
        need_dx.then(|| {
            let mut dcols = vec![0.0; self.patch_len() * p];
            general_mat_mul(
                1.0,
                &view(&self.weight, self.c_out, self.patch_len()).t(),
                &view(dy, self.c_out, p),
                0.0,
                &mut view_mut(&mut dcols, self.patch_len(), p),
            );
            self.col2im(&dcols, h, w)
        })
    }
}

/// 1D convolution over a ring of positions with circular padding, kernel 3.
#[derive(Debug, Clone, PartialEq)]
pub struct RingConv {
    pub c_in: usize,
    pub c_out: usize,
    /// `[c_out, c_in, 3]`
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

pub const RING_KERNEL: usize = 3;

impl RingConv {
    pub fn new<R: Rng>(c_in: usize, c_out: usize, rng: &mut R) -> Self {
        let fan_in = c_in * RING_KERNEL;
        Self {
            c_in,
            c_out,
            weight: init_uniform(c_out * fan_in, fan_in, rng),
            bias: vec![0.0; c_out],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            weight: vec![0.0; self.weight.len()],
            bias: vec![0.0; self.bias.len()],
            ..*self
        }
    }

    /// `cols[(c*3 + t), p] = x[c, (p + t - 1) mod n]`.
    fn im2col(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut cols = vec![0.0; self.c_in * RING_KERNEL * n];
        for c in 0..self.c_in {
            for t in 0..RING_KERNEL {
                let row = c * RING_KERNEL + t;
                for p in 0..n {
                    cols[row * n + p] = x[c * n + (p + n + t - 1) % n];
                }
            }
        }
        cols
    }

    pub fn forward(&self, x: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
        let cols = self.im2col(x, n);
        let k = self.c_in * RING_KERNEL;
        let mut y: Vec<f64> = self
            .bias
            .iter()
            .flat_map(|&b| std::iter::repeat_n(b, n))
            .collect();
        general_mat_mul(
            1.0,
            &view(&self.weight, self.c_out, k),
            &view(&cols, k, n),
            1.0,
            &mut view_mut(&mut y, self.c_out, n),
        );
        (cols, y)
    }

    pub fn backward(
        &self,
        cols: &[f64],
        dy: &[f64],
        n: usize,
        grad: &mut RingConv,
        need_dx: bool,
    ) -> Option<Vec<f64>> {
        let k = self.c_in * RING_KERNEL;
        general_mat_mul(
            1.0,
            &view(dy, self.c_out, n),
            &view(cols, k, n).t(),
            1.0,
            &mut view_mut(&mut grad.weight, self.c_out, k),
        );
        for (g, row) in grad.bias.iter_mut().zip(dy.chunks_exact(n)) {
            *g += row.iter().sum::<f64>();
        }
        need_dx.then(|| {
            let mut dcols = vec![0.0; k * n];
            general_mat_mul(
                1.0,
                &view(&self.weight, self.c_out, k).t(),
                &view(dy, self.c_out, n),
                0.0,
                &mut view_mut(&mut dcols, k, n),
            );
            let mut dx = vec![0.0; self.c_in * n];
            for c in 0..self.c_in {
                for t in 0..RING_KERNEL {
                    let row = c * RING_KERNEL + t;
                    for p in 0..n {
                        dx[c * n + (p + n + t - 1) % n] += dcols[row * n + p];
                    }
                }
            }
            dx
        })
    }
}
