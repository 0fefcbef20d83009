//! Dense rank-4 tensors in NCHW layout and the channel algebra the network
//! is assembled from. Tensors are immutable once constructed; every operation
//! returns a fresh tensor.

use crate::error::{EdnError, Result};

/// Dense rank-4 feature map, `(n, c, h, w)` row-major, `f32` elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    n: usize,
    c: usize,
    h: usize,
    w: usize,
    data: Vec<f32>,
}

impl Tensor4 {
    pub fn new(n: usize, c: usize, h: usize, w: usize, data: Vec<f32>) -> Result<Self> {
        if n == 0 || c == 0 || h == 0 || w == 0 {
            return Err(EdnError::dimension(format!(
                "all dims must be >= 1, got ({n},{c},{h},{w})"
            )));
        }
        let expect = n * c * h * w;
        if data.len() != expect {
            return Err(EdnError::dimension(format!(
                "data length {} does not match dims ({n},{c},{h},{w}) = {expect}",
                data.len()
            )));
        }
        Ok(Tensor4 { n, c, h, w, data })
    }

    pub fn zeros(n: usize, c: usize, h: usize, w: usize) -> Result<Self> {
        Self::new(n, c, h, w, vec![0.0; n * c * h * w])
    }

    pub fn filled(n: usize, c: usize, h: usize, w: usize, v: f32) -> Result<Self> {
        Self::new(n, c, h, w, vec![v; n * c * h * w])
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.n, self.c, self.h, self.w)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Flat offset of `(n, c, y, x)`; the layout bijection everything else
    /// relies on.
    #[inline]
    pub fn offset(&self, n: usize, c: usize, y: usize, x: usize) -> usize {
        ((n * self.c + c) * self.h + y) * self.w + x
    }

    #[inline]
    pub fn at(&self, n: usize, c: usize, y: usize, x: usize) -> f32 {
        self.data[self.offset(n, c, y, x)]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// One `h*w` channel plane as a contiguous slice.
    #[inline]
    pub fn channel(&self, n: usize, c: usize) -> &[f32] {
        let plane = self.h * self.w;
        let start = (n * self.c + c) * plane;
        &self.data[start..start + plane]
    }

    /// Per-channel broadcast multiply: `out[n,c,y,x] = self[n,c,y,x] * v[c]`.
    pub fn mul_channels(&self, v: &ChannelVector) -> Result<Tensor4> {
        if v.len() != self.c {
            return Err(EdnError::dimension(format!(
                "channel vector length {} does not match tensor channels {}",
                v.len(),
                self.c
            )));
        }
        let plane = self.h * self.w;
        let mut data = Vec::with_capacity(self.data.len());
        for n in 0..self.n {
            for c in 0..self.c {
                let s = v.data[c];
                let start = (n * self.c + c) * plane;
                data.extend(self.data[start..start + plane].iter().map(|&x| x * s));
            }
        }
        Tensor4::new(self.n, self.c, self.h, self.w, data)
    }

    /// Concatenate along the channel dimension; batch and spatial dims must
    /// match.
    pub fn concat_channels(&self, other: &Tensor4) -> Result<Tensor4> {
        if self.n != other.n || self.h != other.h || self.w != other.w {
            return Err(EdnError::dimension(format!(
                "concat requires equal (n,h,w): ({},{},{}) vs ({},{},{})",
                self.n, self.h, self.w, other.n, other.h, other.w
            )));
        }
        let plane = self.h * self.w;
        let c_out = self.c + other.c;
        let mut data = Vec::with_capacity(self.n * c_out * plane);
        for n in 0..self.n {
            let a = n * self.c * plane;
            data.extend_from_slice(&self.data[a..a + self.c * plane]);
            let b = n * other.c * plane;
            data.extend_from_slice(&other.data[b..b + other.c * plane]);
        }
        Tensor4::new(self.n, c_out, self.h, self.w, data)
    }

    /// Split evenly along the channel dimension into `parts` tensors,
    /// channel order preserved.
    pub fn split_channels(&self, parts: usize) -> Result<Vec<Tensor4>> {
        if parts == 0 || !self.c.is_multiple_of(parts) {
            return Err(EdnError::dimension(format!(
                "cannot split {} channels into {} even parts",
                self.c, parts
            )));
        }
        let cp = self.c / parts;
        let plane = self.h * self.w;
        let mut out = Vec::with_capacity(parts);
        for p in 0..parts {
            let mut data = Vec::with_capacity(self.n * cp * plane);
            for n in 0..self.n {
                let start = (n * self.c + p * cp) * plane;
                data.extend_from_slice(&self.data[start..start + cp * plane]);
            }
            out.push(Tensor4::new(self.n, cp, self.h, self.w, data)?);
        }
        Ok(out)
    }

    /// Elementwise sum; dims must match exactly.
    pub fn add(&self, other: &Tensor4) -> Result<Tensor4> {
        if self.dims() != other.dims() {
            return Err(EdnError::dimension(format!(
                "add requires identical dims: {:?} vs {:?}",
                self.dims(),
                other.dims()
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a + b)
            .collect();
        Tensor4::new(self.n, self.c, self.h, self.w, data)
    }

    /// Apply `f` to every element, producing a new tensor.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Tensor4 {
        Tensor4 {
            n: self.n,
            c: self.c,
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

}

/// Per-channel vector, e.g. the output of global average pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVector {
    data: Vec<f32>,
}

impl ChannelVector {
    pub fn new(data: Vec<f32>) -> Result<Self> {
        if data.is_empty() {
            return Err(EdnError::dimension("channel vector must be non-empty"));
        }
        Ok(ChannelVector { data })
    }

    pub fn ones(c: usize) -> Result<Self> {
        Self::new(vec![1.0; c])
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// Elementwise logistic map; output lies strictly inside (0,1).
    pub fn sigmoid(&self) -> ChannelVector {
        ChannelVector {
            data: self.data.iter().map(|&x| crate::layers::sigmoid_scalar(x)).collect(),
        }
    }
}
