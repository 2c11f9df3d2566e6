//! Quaternion rotation-scaling convolution, forward and backward.
//!
//! Each kernel element is a pair `(s, θ)` acting on a pixel `c` as
//! `(1/s)·w·c·w̄` with `w = s(cos θ/2 + (√3/3)(i+j+k) sin θ/2)`, which is
//! exactly a rotation of the imaginary (color) vector by `θ` about the RGB
//! gray diagonal followed by scaling with `s`.
//!
//! The rotation matrix about the gray axis has three structural parts,
//! `R(θ) = cosθ·I + ((1−cosθ)/3)·ones + (sinθ/√3)·E`, so the layer is
//! evaluated as three real matrix convolutions with scalar kernels
//! `α = s·cosθ`, `β = s(1−cosθ)/3`, `γ = s·sinθ/√3` over derived input
//! planes (the components, their sum, and the cross-product terms), each
//! lowered to a single GEMM over im2col columns. The brute-force
//! quaternion sandwich in the tests pins this route to the algebra.

use crate::error::{Error, Result};
use crate::feature::QuaternionImage;
use crate::quat::Quaternion;

/// Lower bound every kernel scale is clamped to after an optimizer step;
/// keeps the `1/s` in the sandwich normalization bounded.
pub const SCALE_MIN: f64 = 1e-4;

const INV_SQRT3: f64 = 0.577_350_269_189_625_8;

/// One rotation-scaling filter: an `L×L` grid of `(scale, angle)` pairs.
/// Scales stay strictly positive; angles are stored unconstrained and read
/// through cos/sin, which makes them inherently periodic.
#[derive(Debug, Clone, PartialEq)]
pub struct QKernel {
    size: usize,
    scale: Vec<f64>,
    angle: Vec<f64>,
}

impl QKernel {
    pub fn new(size: usize, scale: Vec<f64>, angle: Vec<f64>) -> Result<Self> {
        if size == 0 || scale.len() != size * size || angle.len() != size * size {
            return Err(Error::Shape(format!(
                "kernel {size}x{size} needs {} parameters per grid, got {} scales / {} angles",
                size * size,
                scale.len(),
                angle.len()
            )));
        }
        if scale.iter().any(|&s| !s.is_finite() || s <= 0.0)
            || angle.iter().any(|a| !a.is_finite())
        {
            return Err(Error::Input(
                "kernel scales must be finite and positive, angles finite".into(),
            ));
        }
        Ok(Self { size, scale, angle })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn angle(&self) -> &[f64] {
        &self.angle
    }

    /// The quaternion form `s(cos θ/2 + (√3/3)(i+j+k) sin θ/2)` of one
    /// grid element.
    pub fn element(&self, row: usize, col: usize) -> Quaternion {
        let idx = row * self.size + col;
        let s = self.scale[idx];
        let (sin, cos) = (self.angle[idx] / 2.0).sin_cos();
        Quaternion::new(
            s * cos,
            s * INV_SQRT3 * sin,
            s * INV_SQRT3 * sin,
            s * INV_SQRT3 * sin,
        )
    }
}

/// Convolution layer: one [`QKernel`] per (output, input) channel pair,
/// parameters held in two flat grids so the optimizer can treat each as a
/// contiguous group. Parameter count is exactly
/// `out_channels·in_channels·L²·2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QConvLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_size: usize,
    /// `[out][in][ky][kx]` row-major.
    pub scale: Vec<f64>,
    /// Same layout as `scale`.
    pub angle: Vec<f64>,
}

impl QConvLayer {
    pub fn new(in_channels: usize, out_channels: usize, kernel_size: usize) -> Result<Self> {
        if in_channels == 0 || out_channels == 0 || kernel_size == 0 {
            return Err(Error::Shape(
                "conv layer dimensions must all be positive".into(),
            ));
        }
        let n = out_channels * in_channels * kernel_size * kernel_size;
        Ok(Self {
            in_channels,
            out_channels,
            kernel_size,
            scale: vec![1.0; n],
            angle: vec![0.0; n],
        })
    }

    pub fn parameter_count(&self) -> usize {
        self.scale.len() + self.angle.len()
    }

    #[inline]
    fn element_index(&self, out_ch: usize, in_ch: usize, ky: usize, kx: usize) -> usize {
        ((out_ch * self.in_channels + in_ch) * self.kernel_size + ky) * self.kernel_size + kx
    }

    /// Extracts the kernel for one (output, input) channel pair.
    pub fn kernel(&self, out_ch: usize, in_ch: usize) -> QKernel {
        let l = self.kernel_size;
        let base = self.element_index(out_ch, in_ch, 0, 0);
        QKernel::new(
            l,
            self.scale[base..base + l * l].to_vec(),
            self.angle[base..base + l * l].to_vec(),
        )
        .expect("layer parameters are valid by construction")
    }

    pub fn set_kernel(&mut self, out_ch: usize, in_ch: usize, kernel: &QKernel) -> Result<()> {
        if kernel.size() != self.kernel_size {
            return Err(Error::Shape(format!(
                "kernel size {} does not match layer size {}",
                kernel.size(),
                self.kernel_size
            )));
        }
        let l = self.kernel_size;
        let base = self.element_index(out_ch, in_ch, 0, 0);
        self.scale[base..base + l * l].copy_from_slice(kernel.scale());
        self.angle[base..base + l * l].copy_from_slice(kernel.angle());
        Ok(())
    }

    /// Clamps every scale up to [`SCALE_MIN`]; called after optimizer steps.
    pub fn clamp_scales(&mut self) {
        for s in &mut self.scale {
            if *s < SCALE_MIN {
                *s = SCALE_MIN;
            }
        }
    }
}

/// Saved forward state consumed (by value) by the matching backward call:
/// the im2col column matrices of the derived input planes.
pub struct ConvCache {
    /// `[K × 3N]`: component planes, column blocks x | y | z.
    v_xyz: Vec<f64>,
    /// `[K × N]`: component-sum plane.
    v_sum: Vec<f64>,
    /// `[K × 3N]`: cross-product planes, column blocks zx | zy | zz.
    v_z3: Vec<f64>,
    /// `[K × N]` real-part columns; only built when the input was not pure.
    x_real: Option<Vec<f64>>,
    in_h: usize,
    in_w: usize,
    out_h: usize,
    out_w: usize,
    in_channels: usize,
    out_channels: usize,
    kernel_size: usize,
}

/// Row-major GEMM `c = a·b` with explicit input strides, single-threaded.
fn gemm_ex(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: isize,
    csa: isize,
    b: &[f64],
    rsb: isize,
    csb: isize,
    c: &mut [f64],
) {
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || k == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// The three scalar weight matrices `[C_out × K]` (`K = C_in·L²`) for the
/// structural parts of `s·R(θ)`.
fn build_weights(layer: &QConvLayer) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = layer.scale.len();
    let mut w_alpha = Vec::with_capacity(n);
    let mut w_beta = Vec::with_capacity(n);
    let mut w_gamma = Vec::with_capacity(n);
    for (&s, &th) in layer.scale.iter().zip(&layer.angle) {
        let (sin, cos) = th.sin_cos();
        w_alpha.push(s * cos);
        w_beta.push(s * (1.0 - cos) / 3.0);
        w_gamma.push(s * sin * INV_SQRT3);
    }
    (w_alpha, w_beta, w_gamma)
}

struct ColMatrices {
    v_xyz: Vec<f64>,
    v_sum: Vec<f64>,
    v_z3: Vec<f64>,
}

/// Unrolls the derived planes of every input window position into GEMM
/// column matrices. Row index is `(channel, ky, kx)`; within `v_xyz` and
/// `v_z3` the columns are three `N`-wide blocks, one per component.
fn im2col_planes(input: &QuaternionImage, l: usize, out_h: usize, out_w: usize) -> ColMatrices {
    let n = out_h * out_w;
    let c_in = input.channels;
    let k_rows = c_in * l * l;
    let pixels = input.pixels();
    let mut v_xyz = vec![0.0; k_rows * 3 * n];
    let mut v_sum = vec![0.0; k_rows * n];
    let mut v_z3 = vec![0.0; k_rows * 3 * n];
    for c in 0..c_in {
        for ky in 0..l {
            for kx in 0..l {
                let row = (c * l + ky) * l + kx;
                let xyz0 = row * 3 * n;
                let z0 = row * 3 * n;
                let s0 = row * n;
                for y in 0..out_h {
                    let src_row = ((y + ky) * input.width + kx) * c_in + c;
                    let dst = y * out_w;
                    for xx in 0..out_w {
                        let q = &pixels[src_row + xx * c_in];
                        let col = dst + xx;
                        v_xyz[xyz0 + col] = q.i;
                        v_xyz[xyz0 + n + col] = q.j;
                        v_xyz[xyz0 + 2 * n + col] = q.k;
                        v_sum[s0 + col] = q.i + q.j + q.k;
                        v_z3[z0 + col] = q.k - q.j;
                        v_z3[z0 + n + col] = q.i - q.k;
                        v_z3[z0 + 2 * n + col] = q.j - q.i;
                    }
                }
            }
        }
    }
    ColMatrices { v_xyz, v_sum, v_z3 }
}

fn im2col_real(input: &QuaternionImage, l: usize, out_h: usize, out_w: usize) -> Vec<f64> {
    let n = out_h * out_w;
    let c_in = input.channels;
    let pixels = input.pixels();
    let mut x = vec![0.0; c_in * l * l * n];
    for c in 0..c_in {
        for ky in 0..l {
            for kx in 0..l {
                let row = ((c * l + ky) * l + kx) * n;
                for y in 0..out_h {
                    let src_row = ((y + ky) * input.width + kx) * c_in + c;
                    let dst = row + y * out_w;
                    for xx in 0..out_w {
                        x[dst + xx] = pixels[src_row + xx * c_in].r;
                    }
                }
            }
        }
    }
    x
}

/// Valid (no padding, stride 1) quaternion convolution. Output spatial
/// dimensions are `(H−L+1) × (W−L+1)`; pure inputs produce pure outputs.
pub fn qconv2d_forward(
    input: &QuaternionImage,
    layer: &QConvLayer,
) -> Result<(QuaternionImage, ConvCache)> {
    if input.channels != layer.in_channels {
        return Err(Error::Shape(format!(
            "input has {} channels, layer expects {}",
            input.channels, layer.in_channels
        )));
    }
    let l = layer.kernel_size;
    if input.height < l || input.width < l {
        return Err(Error::Shape(format!(
            "input {}x{} smaller than kernel {l}x{l}",
            input.height, input.width
        )));
    }
    let out_h = input.height - l + 1;
    let out_w = input.width - l + 1;
    let n = out_h * out_w;
    let k_rows = layer.in_channels * l * l;
    let c_out = layer.out_channels;

    let cols = im2col_planes(input, l, out_h, out_w);
    let (w_alpha, w_beta, w_gamma) = build_weights(layer);

    let mut a_term = vec![0.0; c_out * 3 * n];
    gemm_ex(
        c_out,
        k_rows,
        3 * n,
        &w_alpha,
        k_rows as isize,
        1,
        &cols.v_xyz,
        (3 * n) as isize,
        1,
        &mut a_term,
    );
    let mut b_term = vec![0.0; c_out * n];
    gemm_ex(
        c_out,
        k_rows,
        n,
        &w_beta,
        k_rows as isize,
        1,
        &cols.v_sum,
        n as isize,
        1,
        &mut b_term,
    );
    let mut g_term = vec![0.0; c_out * 3 * n];
    gemm_ex(
        c_out,
        k_rows,
        3 * n,
        &w_gamma,
        k_rows as isize,
        1,
        &cols.v_z3,
        (3 * n) as isize,
        1,
        &mut g_term,
    );

    // The real channel maps through plain scaling (f_r = Σ s·c_r); skip it
    // entirely for the pure inputs the network always produces.
    let x_real = if input.is_pure() {
        None
    } else {
        Some(im2col_real(input, l, out_h, out_w))
    };
    let out_real = x_real.as_ref().map(|xr| {
        let mut or = vec![0.0; c_out * n];
        gemm_ex(
            c_out,
            k_rows,
            n,
            &layer.scale,
            k_rows as isize,
            1,
            xr,
            n as isize,
            1,
            &mut or,
        );
        or
    });

    let mut out = QuaternionImage::zeros(out_h, out_w, c_out);
    {
        let pixels = out.pixels_mut();
        for o in 0..c_out {
            let a0 = o * 3 * n;
            let b0 = o * n;
            for col in 0..n {
                let shared = b_term[b0 + col];
                let q = &mut pixels[col * c_out + o];
                q.r = out_real.as_ref().map_or(0.0, |or| or[b0 + col]);
                q.i = a_term[a0 + col] + shared + g_term[a0 + col];
                q.j = a_term[a0 + n + col] + shared + g_term[a0 + n + col];
                q.k = a_term[a0 + 2 * n + col] + shared + g_term[a0 + 2 * n + col];
            }
        }
    }

    let cache = ConvCache {
        v_xyz: cols.v_xyz,
        v_sum: cols.v_sum,
        v_z3: cols.v_z3,
        x_real,
        in_h: input.height,
        in_w: input.width,
        out_h,
        out_w,
        in_channels: layer.in_channels,
        out_channels: c_out,
        kernel_size: l,
    };
    Ok((out, cache))
}

/// Gradients of a scalar loss with respect to the convolution inputs and
/// the `(s, θ)` parameter grids. Parameter gradients accumulate over every
/// output position a kernel element touches.
pub fn qconv2d_backward(
    grad_out: &QuaternionImage,
    cache: ConvCache,
    layer: &QConvLayer,
) -> Result<(QuaternionImage, Vec<f64>, Vec<f64>)> {
    let l = layer.kernel_size;
    if cache.in_channels != layer.in_channels
        || cache.out_channels != layer.out_channels
        || cache.kernel_size != l
    {
        return Err(Error::State(
            "layer cache does not belong to this layer".into(),
        ));
    }
    if grad_out.height != cache.out_h
        || grad_out.width != cache.out_w
        || grad_out.channels != cache.out_channels
    {
        return Err(Error::State(format!(
            "upstream gradient {}x{}x{} does not match cached forward output {}x{}x{}",
            grad_out.height,
            grad_out.width,
            grad_out.channels,
            cache.out_h,
            cache.out_w,
            cache.out_channels
        )));
    }

    let n = cache.out_h * cache.out_w;
    let k_rows = layer.in_channels * l * l;
    let c_out = layer.out_channels;

    // upstream gradient in the same block layout as the forward GEMMs
    let mut g = vec![0.0; c_out * 3 * n];
    let mut g_sum = vec![0.0; c_out * n];
    let mut g_real_nonzero = false;
    {
        let pixels = grad_out.pixels();
        for o in 0..c_out {
            let g0 = o * 3 * n;
            let s0 = o * n;
            for col in 0..n {
                let q = &pixels[col * c_out + o];
                g[g0 + col] = q.i;
                g[g0 + n + col] = q.j;
                g[g0 + 2 * n + col] = q.k;
                g_sum[s0 + col] = q.i + q.j + q.k;
                g_real_nonzero |= q.r != 0.0;
            }
        }
    }

    // parameter gradients in (α, β, γ) space
    let mut g_alpha = vec![0.0; c_out * k_rows];
    gemm_ex(
        c_out,
        3 * n,
        k_rows,
        &g,
        (3 * n) as isize,
        1,
        &cache.v_xyz,
        1,
        (3 * n) as isize,
        &mut g_alpha,
    );
    let mut g_beta = vec![0.0; c_out * k_rows];
    gemm_ex(
        c_out,
        n,
        k_rows,
        &g_sum,
        n as isize,
        1,
        &cache.v_sum,
        1,
        n as isize,
        &mut g_beta,
    );
    let mut g_gamma = vec![0.0; c_out * k_rows];
    gemm_ex(
        c_out,
        3 * n,
        k_rows,
        &g,
        (3 * n) as isize,
        1,
        &cache.v_z3,
        1,
        (3 * n) as isize,
        &mut g_gamma,
    );

    // real-path parameter gradient needs the real input columns
    let grad_wr = match (&cache.x_real, g_real_nonzero) {
        (Some(xr), true) => {
            let mut gr = vec![0.0; c_out * n];
            let pixels = grad_out.pixels();
            for o in 0..c_out {
                for col in 0..n {
                    gr[o * n + col] = pixels[col * c_out + o].r;
                }
            }
            let mut gwr = vec![0.0; c_out * k_rows];
            gemm_ex(c_out, n, k_rows, &gr, n as isize, 1, xr, 1, n as isize, &mut gwr);
            Some(gwr)
        }
        _ => None,
    };

    // chain (α, β, γ) back to (s, θ): α = s·cosθ, β = s(1−cosθ)/3,
    // γ = s·sinθ/√3
    let mut grad_scale = vec![0.0; layer.scale.len()];
    let mut grad_angle = vec![0.0; layer.angle.len()];
    for (e, (&s, &th)) in layer.scale.iter().zip(&layer.angle).enumerate() {
        let (sin, cos) = th.sin_cos();
        let ga = g_alpha[e];
        let gb = g_beta[e];
        let gg = g_gamma[e];
        let mut ds = ga * cos + gb * (1.0 - cos) / 3.0 + gg * sin * INV_SQRT3;
        if let Some(gwr) = &grad_wr {
            ds += gwr[e];
        }
        grad_scale[e] = ds;
        grad_angle[e] = s * (-ga * sin + gb * sin / 3.0 + gg * cos * INV_SQRT3);
    }

    // input gradient: adjoint GEMMs back to the derived-plane columns
    let (w_alpha, w_beta, w_gamma) = build_weights(layer);
    let mut gv_xyz = vec![0.0; k_rows * 3 * n];
    gemm_ex(
        k_rows,
        c_out,
        3 * n,
        &w_alpha,
        1,
        k_rows as isize,
        &g,
        (3 * n) as isize,
        1,
        &mut gv_xyz,
    );
    let mut gv_sum = vec![0.0; k_rows * n];
    gemm_ex(
        k_rows,
        c_out,
        n,
        &w_beta,
        1,
        k_rows as isize,
        &g_sum,
        n as isize,
        1,
        &mut gv_sum,
    );
    let mut gv_z3 = vec![0.0; k_rows * 3 * n];
    gemm_ex(
        k_rows,
        c_out,
        3 * n,
        &w_gamma,
        1,
        k_rows as isize,
        &g,
        (3 * n) as isize,
        1,
        &mut gv_z3,
    );
    let gv_real = if g_real_nonzero {
        let mut gr = vec![0.0; c_out * n];
        let pixels = grad_out.pixels();
        for o in 0..c_out {
            for col in 0..n {
                gr[o * n + col] = pixels[col * c_out + o].r;
            }
        }
        let mut gxr = vec![0.0; k_rows * n];
        gemm_ex(
            k_rows,
            c_out,
            n,
            &layer.scale,
            1,
            k_rows as isize,
            &gr,
            n as isize,
            1,
            &mut gxr,
        );
        Some(gxr)
    } else {
        None
    };

    // scatter the plane gradients back through the derived-plane adjoint:
    // ∂L/∂vx = g_vx + g_sum + g_zy − g_zz (and cyclic for vy, vz)
    let mut grad_input = QuaternionImage::zeros(cache.in_h, cache.in_w, cache.in_channels);
    {
        let c_in = cache.in_channels;
        let in_w = cache.in_w;
        let pixels = grad_input.pixels_mut();
        for c in 0..c_in {
            for ky in 0..l {
                for kx in 0..l {
                    let row = (c * l + ky) * l + kx;
                    let xyz0 = row * 3 * n;
                    let z0 = row * 3 * n;
                    let s0 = row * n;
                    for y in 0..cache.out_h {
                        let dst_row = ((y + ky) * in_w + kx) * c_in + c;
                        let src = y * cache.out_w;
                        for xx in 0..cache.out_w {
                            let col = src + xx;
                            let g_s = gv_sum[s0 + col];
                            let g_zx = gv_z3[z0 + col];
                            let g_zy = gv_z3[z0 + n + col];
                            let g_zz = gv_z3[z0 + 2 * n + col];
                            let q = &mut pixels[dst_row + xx * c_in];
                            q.i += gv_xyz[xyz0 + col] + g_s + g_zy - g_zz;
                            q.j += gv_xyz[xyz0 + n + col] + g_s + g_zz - g_zx;
                            q.k += gv_xyz[xyz0 + 2 * n + col] + g_s + g_zx - g_zy;
                            if let Some(gxr) = &gv_real {
                                q.r += gxr[s0 + col];
                            }
                        }
                    }
                }
            }
        }
    }

    Ok((grad_input, grad_scale, grad_angle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quat::UnitAxisQuaternion;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Rotation by `theta` about the gray axis as an explicit 3×3 matrix;
    /// reference for the structured evaluation.
    fn gray_rotation(theta: f64) -> [[f64; 3]; 3] {
        let (sin, cos) = theta.sin_cos();
        let t = (1.0 - cos) / 3.0;
        let e = sin * INV_SQRT3;
        [
            [cos + t, t - e, t + e],
            [t + e, cos + t, t - e],
            [t - e, t + e, cos + t],
        ]
    }

    fn random_layer(rng: &mut ChaCha8Rng, c_in: usize, c_out: usize, l: usize) -> QConvLayer {
        let mut layer = QConvLayer::new(c_in, c_out, l).unwrap();
        for s in &mut layer.scale {
            *s = rng.random_range(0.2..1.5);
        }
        for a in &mut layer.angle {
            *a = rng.random_range(-3.0..3.0);
        }
        layer
    }

    fn random_pure_image(rng: &mut ChaCha8Rng, h: usize, w: usize, c: usize) -> QuaternionImage {
        let mut img = QuaternionImage::zeros(h, w, c);
        for q in img.pixels_mut() {
            *q = Quaternion::pure(
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            );
        }
        img
    }

    /// Brute-force reference: triple loop over output positions summing
    /// `scale · rotate(pixel)` through the quaternion algebra itself.
    fn conv_oracle(input: &QuaternionImage, layer: &QConvLayer) -> QuaternionImage {
        let l = layer.kernel_size;
        let out_h = input.height - l + 1;
        let out_w = input.width - l + 1;
        let mut out = QuaternionImage::zeros(out_h, out_w, layer.out_channels);
        for o in 0..layer.out_channels {
            for y in 0..out_h {
                for x in 0..out_w {
                    let mut acc = Quaternion::ZERO;
                    for i in 0..layer.in_channels {
                        let kernel = layer.kernel(o, i);
                        for ky in 0..l {
                            for kx in 0..l {
                                let s = kernel.scale()[ky * l + kx];
                                let th = kernel.angle()[ky * l + kx];
                                let c = input.get(y + ky, x + kx, i);
                                let rotated = UnitAxisQuaternion::gray(th).rotate(&c);
                                acc = acc + rotated.scale(s);
                            }
                        }
                    }
                    out.set(y, x, o, acc);
                }
            }
        }
        out
    }

    #[test]
    fn structured_weights_match_rotation_matrix() {
        // α·I + β·ones + γ·(√3·E) must reproduce s·R(θ) entrywise
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s: f64 = rng.random_range(0.1..2.0);
            let th: f64 = rng.random_range(-7.0..7.0);
            let r = gray_rotation(th);
            let (sin, cos) = th.sin_cos();
            let alpha = s * cos;
            let beta = s * (1.0 - cos) / 3.0;
            let gamma = s * sin * INV_SQRT3;
            let eps = [[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]];
            for a in 0..3 {
                for b in 0..3 {
                    let id = if a == b { 1.0 } else { 0.0 };
                    let got = alpha * id + beta + gamma * eps[a][b];
                    assert!((got - s * r[a][b]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn paper_shape_50x75_to_48x73() {
        let layer = QConvLayer::new(1, 32, 3).unwrap();
        let input = QuaternionImage::zeros(50, 75, 1);
        let (out, _) = qconv2d_forward(&input, &layer).unwrap();
        assert_eq!((out.height, out.width, out.channels), (48, 73, 32));
    }

    #[test]
    fn shape_contract_randomized() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..60 {
            let l = [1usize, 3, 5][rng.random_range(0..3)];
            let h = rng.random_range(l.max(3)..=64);
            let w = rng.random_range(l.max(3)..=64);
            let layer = QConvLayer::new(1, 2, l).unwrap();
            let input = QuaternionImage::zeros(h, w, 1);
            let (out, _) = qconv2d_forward(&input, &layer).unwrap();
            assert_eq!((out.height, out.width), (h - l + 1, w - l + 1));
        }
    }

    #[test]
    fn identity_kernel_passes_input_through() {
        // s=1, θ=0 on a 1×1 kernel: output equals input, real part included
        let layer = QConvLayer::new(1, 1, 1).unwrap();
        let mut input = QuaternionImage::zeros(2, 3, 1);
        for (n, q) in input.pixels_mut().iter_mut().enumerate() {
            *q = Quaternion::new(0.1 * n as f64, 0.2, -0.3, n as f64);
        }
        let (out, _) = qconv2d_forward(&input, &layer).unwrap();
        for (a, b) in out.pixels().iter().zip(input.pixels()) {
            assert!((a.r - b.r).abs() < 1e-15);
            assert!((a.i - b.i).abs() < 1e-15);
            assert!((a.j - b.j).abs() < 1e-15);
            assert!((a.k - b.k).abs() < 1e-15);
        }
    }

    #[test]
    fn gray_120_degree_rotation_permutes_channels() {
        let mut layer = QConvLayer::new(1, 1, 1).unwrap();
        layer.angle[0] = 2.0 * std::f64::consts::PI / 3.0;
        let mut input = QuaternionImage::zeros(1, 1, 1);
        input.set(0, 0, 0, Quaternion::pure(1.0, 2.0, 3.0));
        let (out, _) = qconv2d_forward(&input, &layer).unwrap();
        let q = out.get(0, 0, 0);
        assert!(q.r.abs() < 1e-12);
        assert!((q.i - 3.0).abs() < 1e-12);
        assert!((q.j - 1.0).abs() < 1e-12);
        assert!((q.k - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rotation_scaling_law_single_element() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let mut layer = QConvLayer::new(1, 1, 1).unwrap();
            let s = rng.random_range(0.1..3.0);
            layer.scale[0] = s;
            layer.angle[0] = rng.random_range(-6.0..6.0);
            let mut input = QuaternionImage::zeros(1, 1, 1);
            let v = Quaternion::pure(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            );
            input.set(0, 0, 0, v);
            let (out, _) = qconv2d_forward(&input, &layer).unwrap();
            let q = out.get(0, 0, 0);
            let n_in = (v.i * v.i + v.j * v.j + v.k * v.k).sqrt();
            let n_out = (q.i * q.i + q.j * q.j + q.k * q.k).sqrt();
            assert!((n_out - s * n_in).abs() <= 1e-9 * (s * n_in).max(1.0));
        }
    }

    #[test]
    fn matches_quaternion_sandwich_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for &(h, w, c_in, c_out, l) in &[
            (3usize, 3usize, 1usize, 1usize, 3usize),
            (5, 6, 2, 3, 3),
            (6, 6, 3, 2, 5),
            (4, 4, 3, 4, 1),
        ] {
            let layer = random_layer(&mut rng, c_in, c_out, l);
            let input = random_pure_image(&mut rng, h, w, c_in);
            let (got, _) = qconv2d_forward(&input, &layer).unwrap();
            let want = conv_oracle(&input, &layer);
            for (a, b) in got.pixels().iter().zip(want.pixels()) {
                assert!((a.r - b.r).abs() < 1e-12);
                assert!((a.i - b.i).abs() < 1e-12);
                assert!((a.j - b.j).abs() < 1e-12);
                assert!((a.k - b.k).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn purity_is_preserved() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let layer = random_layer(&mut rng, 2, 3, 3);
        let input = random_pure_image(&mut rng, 6, 7, 2);
        let (out, _) = qconv2d_forward(&input, &layer).unwrap();
        assert!(out.max_abs_real() < 1e-12);
    }

    #[test]
    fn shape_errors() {
        let layer = QConvLayer::new(2, 1, 3).unwrap();
        let wrong_channels = QuaternionImage::zeros(5, 5, 1);
        assert!(matches!(
            qconv2d_forward(&wrong_channels, &layer),
            Err(Error::Shape(_))
        ));
        let too_small = QuaternionImage::zeros(2, 5, 2);
        assert!(matches!(
            qconv2d_forward(&too_small, &layer),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn zero_upstream_gradient_gives_zero_parameter_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let layer = random_layer(&mut rng, 2, 2, 3);
        let input = random_pure_image(&mut rng, 5, 5, 2);
        let (out, cache) = qconv2d_forward(&input, &layer).unwrap();
        let zero_grad = QuaternionImage::zeros(out.height, out.width, out.channels);
        let (gin, gs, ga) = qconv2d_backward(&zero_grad, cache, &layer).unwrap();
        assert!(gs.iter().all(|&v| v == 0.0));
        assert!(ga.iter().all(|&v| v == 0.0));
        assert!(gin.pixels().iter().all(|q| *q == Quaternion::ZERO));
    }

    #[test]
    fn scale_gradient_at_zero_angle_is_the_pixel() {
        // f = s·c at θ=0, so ∂f/∂s = c; probe with the output itself
        let layer = QConvLayer::new(1, 1, 1).unwrap();
        let mut input = QuaternionImage::zeros(1, 1, 1);
        input.set(0, 0, 0, Quaternion::pure(0.3, -0.7, 0.2));
        let (out, cache) = qconv2d_forward(&input, &layer).unwrap();
        let (_, gs, ga) = qconv2d_backward(&out, cache, &layer).unwrap();
        // ⟨c, c⟩ = 0.09 + 0.49 + 0.04
        assert!((gs[0] - 0.62).abs() < 1e-12);
        // the rotation generator at θ=0 is antisymmetric, so ⟨c, dR c⟩ = 0
        assert!(ga[0].abs() < 1e-12);
    }

    #[test]
    fn stale_cache_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let layer_a = random_layer(&mut rng, 1, 2, 3);
        let layer_b = random_layer(&mut rng, 2, 2, 3);
        let input = random_pure_image(&mut rng, 5, 5, 1);
        let (out, cache) = qconv2d_forward(&input, &layer_a).unwrap();
        assert!(matches!(
            qconv2d_backward(&out, cache, &layer_b),
            Err(Error::State(_))
        ));

        let (out2, cache2) = qconv2d_forward(&input, &layer_a).unwrap();
        let bad_grad = QuaternionImage::zeros(out2.height + 1, out2.width, out2.channels);
        assert!(matches!(
            qconv2d_backward(&bad_grad, cache2, &layer_a),
            Err(Error::State(_))
        ));
    }

    /// Central finite differences over every parameter and input component
    /// of a small random layer, against the analytic backward pass.
    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut layer = random_layer(&mut rng, 2, 3, 3);
        let input = random_pure_image(&mut rng, 5, 6, 2);
        // fixed random linear functional of the output as the "loss"
        let (out, cache) = qconv2d_forward(&input, &layer).unwrap();
        let probe: Vec<f64> = (0..out.pixels().len() * 3)
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let loss = |img: &QuaternionImage| -> f64 {
            img.pixels()
                .iter()
                .enumerate()
                .map(|(n, q)| probe[3 * n] * q.i + probe[3 * n + 1] * q.j + probe[3 * n + 2] * q.k)
                .sum()
        };
        let mut grad_img = QuaternionImage::zeros(out.height, out.width, out.channels);
        for (n, q) in grad_img.pixels_mut().iter_mut().enumerate() {
            *q = Quaternion::pure(probe[3 * n], probe[3 * n + 1], probe[3 * n + 2]);
        }
        let (gin, gs, ga) = qconv2d_backward(&grad_img, cache, &layer).unwrap();

        let eps = 1e-5;
        let rel = |num: f64, ana: f64| (num - ana).abs() / (num.abs() + ana.abs()).max(1e-8);

        for e in 0..layer.scale.len() {
            let orig = layer.scale[e];
            layer.scale[e] = orig + eps;
            let plus = loss(&qconv2d_forward(&input, &layer).unwrap().0);
            layer.scale[e] = orig - eps;
            let minus = loss(&qconv2d_forward(&input, &layer).unwrap().0);
            layer.scale[e] = orig;
            let num = (plus - minus) / (2.0 * eps);
            assert!(rel(num, gs[e]) < 1e-4, "scale[{e}]: fd {num} vs {}", gs[e]);
        }
        for e in 0..layer.angle.len() {
            let orig = layer.angle[e];
            layer.angle[e] = orig + eps;
            let plus = loss(&qconv2d_forward(&input, &layer).unwrap().0);
            layer.angle[e] = orig - eps;
            let minus = loss(&qconv2d_forward(&input, &layer).unwrap().0);
            layer.angle[e] = orig;
            let num = (plus - minus) / (2.0 * eps);
            assert!(rel(num, ga[e]) < 1e-4, "angle[{e}]: fd {num} vs {}", ga[e]);
        }
        // input gradient, checked over every pixel component
        let mut perturbed = input.clone();
        for idx in 0..input.pixels().len() {
            for comp in 0..3 {
                let read = |q: &Quaternion| match comp {
                    0 => q.i,
                    1 => q.j,
                    _ => q.k,
                };
                let write = |q: &mut Quaternion, v: f64| match comp {
                    0 => q.i = v,
                    1 => q.j = v,
                    _ => q.k = v,
                };
                let orig = read(&input.pixels()[idx]);
                write(&mut perturbed.pixels_mut()[idx], orig + eps);
                let plus = loss(&qconv2d_forward(&perturbed, &layer).unwrap().0);
                write(&mut perturbed.pixels_mut()[idx], orig - eps);
                let minus = loss(&qconv2d_forward(&perturbed, &layer).unwrap().0);
                write(&mut perturbed.pixels_mut()[idx], orig);
                let num = (plus - minus) / (2.0 * eps);
                let ana = read(&gin.pixels()[idx]);
                assert!(rel(num, ana) < 1e-4, "input[{idx}].{comp}: fd {num} vs {ana}");
            }
        }
    }

    /// The real channel (for non-pure inputs) maps through plain scaling;
    /// its gradient path is exercised separately from the imaginary one.
    #[test]
    fn real_channel_forward_and_backward() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let layer = random_layer(&mut rng, 1, 2, 3);
        let mut input = random_pure_image(&mut rng, 5, 5, 1);
        for q in input.pixels_mut() {
            q.r = rng.random_range(-1.0..1.0);
        }
        let (out, cache) = qconv2d_forward(&input, &layer).unwrap();
        // forward: real part = Σ s·c_r over the window
        let l = layer.kernel_size;
        for o in 0..layer.out_channels {
            for y in 0..out.height {
                for x in 0..out.width {
                    let mut want = 0.0;
                    for ky in 0..l {
                        for kx in 0..l {
                            let s = layer.scale[(o * l + ky) * l + kx];
                            want += s * input.get(y + ky, x + kx, 0).r;
                        }
                    }
                    assert!((out.get(y, x, o).r - want).abs() < 1e-12);
                }
            }
        }
        // backward: FD on the real components against the analytic grad
        let probe: Vec<f64> = (0..out.pixels().len())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let loss = |img: &QuaternionImage| -> f64 {
            img.pixels()
                .iter()
                .zip(&probe)
                .map(|(q, p)| q.r * p)
                .sum()
        };
        let mut grad_img = QuaternionImage::zeros(out.height, out.width, out.channels);
        for (q, p) in grad_img.pixels_mut().iter_mut().zip(&probe) {
            q.r = *p;
        }
        let (gin, gs, _) = qconv2d_backward(&grad_img, cache, &layer).unwrap();
        let eps = 1e-6;
        let rel = |num: f64, ana: f64| (num - ana).abs() / (num.abs() + ana.abs()).max(1e-8);
        for idx in 0..input.pixels().len() {
            let orig = input.pixels()[idx].r;
            let mut perturbed = input.clone();
            perturbed.pixels_mut()[idx].r = orig + eps;
            let plus = loss(&qconv2d_forward(&perturbed, &layer).unwrap().0);
            perturbed.pixels_mut()[idx].r = orig - eps;
            let minus = loss(&qconv2d_forward(&perturbed, &layer).unwrap().0);
            let num = (plus - minus) / (2.0 * eps);
            assert!(rel(num, gin.pixels()[idx].r) < 1e-4);
        }
        // scale gradients also pick up the real path
        let mut layer2 = layer.clone();
        for e in 0..layer.scale.len() {
            let orig = layer.scale[e];
            layer2.scale[e] = orig + eps;
            let plus = loss(&qconv2d_forward(&input, &layer2).unwrap().0);
            layer2.scale[e] = orig - eps;
            let minus = loss(&qconv2d_forward(&input, &layer2).unwrap().0);
            layer2.scale[e] = orig;
            let num = (plus - minus) / (2.0 * eps);
            assert!(rel(num, gs[e]) < 1e-4, "scale[{e}] real path");
        }
    }

    #[test]
    fn parameter_count_contract() {
        let layer = QConvLayer::new(1, 32, 3).unwrap();
        assert_eq!(layer.parameter_count(), 32 * 1 * 9 * 2);
        let layer2 = QConvLayer::new(32, 64, 3).unwrap();
        assert_eq!(layer2.parameter_count(), 64 * 32 * 9 * 2);
    }

    #[test]
    fn kernel_element_quaternion_form() {
        let kernel = QKernel::new(1, vec![2.0], vec![std::f64::consts::PI]).unwrap();
        let q = kernel.element(0, 0);
        // s=2, θ=π → 2·(0 + (√3/3)(i+j+k)·1): norm must be s
        assert!(q.r.abs() < 1e-12);
        assert!((q.norm() - 2.0).abs() < 1e-12);
        assert!((q.i - q.j).abs() < 1e-15 && (q.j - q.k).abs() < 1e-15);
    }
}
