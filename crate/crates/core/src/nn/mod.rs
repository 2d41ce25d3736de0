//! The four layers of the hybrid network, each with a forward pass that
//! records its intermediates and a hand-derived backward pass.
//!
//! Parameter structs double as gradient containers: a backward pass returns
//! a value of the same type whose entries are ∂L/∂θ.

mod attention;
mod concat;
mod conv;
mod dense;
mod gradcheck;
mod lstm;

pub use attention::{attention_backward, attention_forward, AttentionCache, AttentionParams};
pub use concat::{concat_channels, split_channels};
pub use conv::{conv1d_backward, conv1d_forward, Conv1dCache, Conv1dParams};
pub use dense::{dense_backward, dense_forward, DenseParams};
pub use gradcheck::{finite_difference_check, relative_error};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmParams, LstmState};

/// Uniform access to every tensor of a parameter (or gradient) container in a
/// fixed order, used by the optimizer and by gradient checks.
pub trait Tensors {
    fn tensors(&self) -> alloc::vec::Vec<&[f64]>;
    fn tensors_mut(&mut self) -> alloc::vec::Vec<&mut [f64]>;

    fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// All entries concatenated in tensor order.
    fn flatten(&self) -> alloc::vec::Vec<f64> {
        self.tensors().concat()
    }

    /// Overwrites all entries from a buffer produced by [`Tensors::flatten`].
    fn assign_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat buffer length");
        let mut offset = 0;
        for t in self.tensors_mut() {
            t.copy_from_slice(&flat[offset..offset + t.len()]);
            offset += t.len();
        }
    }

    fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }

    fn zero(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }

    /// `self += other`, entry by entry; panics if the layouts differ.
    fn add_assign(&mut self, other: &Self) {
        let src = other.tensors();
        let mut dst = self.tensors_mut();
        assert_eq!(src.len(), dst.len(), "tensor count");
        for (d, s) in dst.iter_mut().zip(src) {
            assert_eq!(d.len(), s.len(), "tensor length");
            d.iter_mut().zip(s).for_each(|(a, b)| *a += b);
        }
    }
}
