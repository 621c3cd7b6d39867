//! Differentiable dense-network substrate.

mod adam;
mod gaussian;
mod mlp;

pub use adam::{clip_grad_norm, Adam};
pub use gaussian::{DiagGaussian, LogStdBounds, HALF_LN_2PI, HALF_LN_2PI_E};
pub use mlp::{
    mlp_backward, mlp_forward, Activation, GradientTape, LayerShape, Mlp, MlpSpec, ParamVector,
};

/// 64-bit FNV-1a over the bit patterns of a slice of floats.
pub fn fingerprint(values: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        for b in v.to_bits().to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}
