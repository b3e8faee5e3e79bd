//! Dense row-major tensor with shape metadata, dual storage precision, and an
//! optional gradient slot.
//!
//! Arithmetic always runs in f64; a tensor whose dtype is [`DType::F32`] keeps
//! every stored value exactly representable in f32 (op results are rounded
//! through f32 on write). That makes f64 the verification precision and f32 a
//! storage precision, and it keeps save/load round trips bit-exact for both.

use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// Storage precision of a tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum DType {
    #[serde(rename = "f64")]
    F64,
    #[serde(rename = "f32")]
    F32,
}

impl DType {
    pub fn size_bytes(self) -> usize {
        match self {
            DType::F64 => 8,
            DType::F32 => 4,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            DType::F64 => 0,
            DType::F32 => 1,
        }
    }

    pub fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(DType::F64),
            1 => Ok(DType::F32),
            c => Err(Error::Format(alloc::format!("unknown dtype code {c}"))),
        }
    }

    /// Result precision when two operands combine: any f64 operand promotes.
    pub fn promote(self, other: DType) -> DType {
        if self == DType::F32 && other == DType::F32 {
            DType::F32
        } else {
            DType::F64
        }
    }
}

pub fn numel_of(shape: &[usize]) -> usize {
    shape.iter().product()
}

/// Row-major strides for a shape.
pub fn strides_of(shape: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * shape[i + 1];
    }
    strides
}

/// Dense multidimensional array. Cloning is cheap: the buffer is shared.
#[derive(Debug, Clone)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Arc<Vec<f64>>,
    dtype: DType,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>, dtype: DType) -> Result<Self> {
        if numel_of(&shape) != data.len() {
            return Err(Error::Dimension {
                op: "tensor_new",
                msg: alloc::format!("shape {:?} wants {} values, got {}", shape, numel_of(&shape), data.len()),
            });
        }
        let t = Tensor { shape, data: Arc::new(data), dtype, grad: None };
        let t = t.quantized();
        if crate::checked() {
            t.ensure_finite("tensor_new")?;
        }
        Ok(t)
    }

    pub fn from_vec(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        Tensor::new(shape, data, DType::F64)
    }

    pub fn scalar(v: f64) -> Self {
        Tensor { shape: vec![1], data: Arc::new(vec![v]), dtype: DType::F64, grad: None }
    }

    pub fn zeros(shape: &[usize], dtype: DType) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: Arc::new(vec![0.0; numel_of(shape)]),
            dtype,
            grad: None,
        }
    }

    pub fn full(shape: &[usize], v: f64, dtype: DType) -> Self {
        let t = Tensor {
            shape: shape.to_vec(),
            data: Arc::new(vec![v; numel_of(shape)]),
            dtype,
            grad: None,
        };
        t.quantized()
    }

    pub fn ones(shape: &[usize], dtype: DType) -> Self {
        Tensor::full(shape, 1.0, dtype)
    }

    pub fn rand_uniform<R: Rng>(shape: &[usize], lo: f64, hi: f64, rng: &mut R, dtype: DType) -> Self {
        let data: Vec<f64> = (0..numel_of(shape)).map(|_| rng.gen_range(lo..hi)).collect();
        Tensor { shape: shape.to_vec(), data: Arc::new(data), dtype, grad: None }.quantized()
    }

    /// Result of an op: rounds through f32 when the result dtype is F32.
    pub(crate) fn from_op(shape: Vec<usize>, data: Vec<f64>, dtype: DType) -> Self {
        debug_assert_eq!(numel_of(&shape), data.len());
        Tensor { shape, data: Arc::new(data), dtype, grad: None }.quantized()
    }

    fn quantized(mut self) -> Self {
        if self.dtype == DType::F32 {
            let data = Arc::make_mut(&mut self.data);
            for v in data.iter_mut() {
                *v = *v as f32 as f64;
            }
        }
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Mutable view of the buffer; copies if the buffer is currently shared.
    /// Reserved for designated in-place updates (optimizer steps, BN stats).
    pub fn data_mut(&mut self) -> &mut [f64] {
        Arc::make_mut(&mut self.data)
    }

    pub fn is_scalar(&self) -> bool {
        self.numel() == 1
    }

    pub fn storage_bytes(&self) -> usize {
        self.numel() * self.dtype.size_bytes()
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        assert_eq!(index.len(), self.rank(), "index rank mismatch");
        let strides = strides_of(&self.shape);
        let mut off = 0;
        for (i, (&ix, &st)) in index.iter().zip(strides.iter()).enumerate() {
            assert!(ix < self.shape[i], "index out of bounds");
            off += ix * st;
        }
        self.data[off]
    }

    pub fn to_dtype(&self, dtype: DType) -> Tensor {
        if dtype == self.dtype {
            return self.clone();
        }
        Tensor {
            shape: self.shape.clone(),
            data: self.data.clone(),
            dtype,
            grad: None,
        }
        .quantized()
    }

    pub fn reshaped(&self, shape: Vec<usize>) -> Result<Tensor> {
        if numel_of(&shape) != self.numel() {
            return Err(Error::Dimension {
                op: "reshape",
                msg: alloc::format!("cannot view {:?} as {:?}", self.shape, shape),
            });
        }
        let mut t = self.clone();
        t.shape = shape;
        t.grad = None;
        Ok(t)
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn set_grad(&mut self, grad: Vec<f64>) {
        debug_assert_eq!(grad.len(), self.numel());
        self.grad = Some(grad);
    }

    pub fn clear_grad(&mut self) {
        self.grad = None;
    }

    pub fn ensure_finite(&self, op: &str) -> Result<()> {
        if self.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { op: op.to_string(), step: 0 });
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    // ── TSR1 byte format ────────────────────────────────────────────────
    //
    // magic "TSR1" | u8 dtype code (0=f64, 1=f32) | u8 rank |
    // rank × u32 LE extents | row-major payload in the stored precision, LE.

    pub const MAGIC: &'static [u8; 4] = b"TSR1";

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(6 + 4 * self.rank() + self.storage_bytes());
        out.extend_from_slice(Self::MAGIC);
        out.push(self.dtype.code());
        out.push(self.rank() as u8);
        for &e in &self.shape {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
        match self.dtype {
            DType::F64 => {
                for v in self.data.iter() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            DType::F32 => {
                for v in self.data.iter() {
                    out.extend_from_slice(&(*v as f32).to_le_bytes());
                }
            }
        }
        out
    }

    /// Decodes one tensor from the front of `bytes`, returning it together
    /// with the number of bytes consumed.
    pub fn from_bytes(bytes: &[u8]) -> Result<(Tensor, usize)> {
        if bytes.len() < 6 {
            return Err(Error::Format("tensor header truncated".to_string()));
        }
        if &bytes[0..4] != Self::MAGIC {
            return Err(Error::Format(alloc::format!(
                "bad tensor magic {:?}, expected {:?}",
                &bytes[0..4],
                Self::MAGIC
            )));
        }
        let dtype = DType::from_code(bytes[4])?;
        let rank = bytes[5] as usize;
        let header = 6 + 4 * rank;
        if bytes.len() < header {
            return Err(Error::Format("tensor extents truncated".to_string()));
        }
        let mut shape = Vec::with_capacity(rank);
        for i in 0..rank {
            let off = 6 + 4 * i;
            let e = u32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]]);
            shape.push(e as usize);
        }
        let numel = numel_of(&shape);
        let payload = numel * dtype.size_bytes();
        if bytes.len() < header + payload {
            return Err(Error::Format(alloc::format!(
                "tensor payload truncated: want {} bytes, have {}",
                payload,
                bytes.len() - header
            )));
        }
        let body = &bytes[header..header + payload];
        let data: Vec<f64> = match dtype {
            DType::F64 => body
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes([c[0], c[1], c[2], c[3], c[4], c[5], c[6], c[7]]))
                .collect(),
            DType::F32 => body
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                .collect(),
        };
        let t = Tensor { shape, data: Arc::new(data), dtype, grad: None };
        Ok((t, header + payload))
    }
}

impl PartialEq for Tensor {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape && self.dtype == other.dtype && *self.data == *other.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn shape_numel_mismatch_rejected() {
        let err = Tensor::new(vec![2, 3], vec![1.0; 5], DType::F64).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    #[test]
    fn f32_tensors_hold_f32_representable_values() {
        let t = Tensor::new(vec![2], vec![0.1, core::f64::consts::PI], DType::F32).unwrap();
        for v in t.data() {
            assert_eq!(*v, *v as f32 as f64);
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let t = Tensor::from_vec(vec![2, 3], vec![1.5, -2.25, 1e-300, 0.0, 3.7, -0.125]).unwrap();
        let bytes = t.to_bytes();
        let (back, used) = Tensor::from_bytes(&bytes).unwrap();
        assert_eq!(used, bytes.len());
        assert_eq!(back, t);
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let mut bytes = Tensor::scalar(1.0).to_bytes();
        bytes[0] = b'X';
        assert!(matches!(Tensor::from_bytes(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_a_format_error() {
        let bytes = Tensor::from_vec(vec![4], vec![1.0, 2.0, 3.0, 4.0]).unwrap().to_bytes();
        assert!(matches!(Tensor::from_bytes(&bytes[..bytes.len() - 3]), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn codec_round_trip_any_shape(
            dims in proptest::collection::vec(1usize..5, 0..4),
            f32_mode in any::<bool>(),
            seed in any::<u64>(),
        ) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let dtype = if f32_mode { DType::F32 } else { DType::F64 };
            let t = Tensor::rand_uniform(&dims, -10.0, 10.0, &mut rng, dtype);
            let (back, used) = Tensor::from_bytes(&t.to_bytes()).unwrap();
            prop_assert_eq!(used, t.to_bytes().len());
            prop_assert_eq!(back, t);
        }
    }
}
