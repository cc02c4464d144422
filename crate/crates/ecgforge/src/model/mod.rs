//! The sequence-to-sequence ECG surrogate.
//!
//! Architecture, per input sequence of T voltage frames:
//!
//! 1. **Encoder** — two conv blocks (conv, batch norm, ReLU, max pool,
//!    dropout), adaptive average pooling, flatten, one linear layer; each
//!    frame becomes a latent vector of `hidden_size`.
//! 2. **Time-aware additive attention** — at decode step t, scores
//!    `a_{t,i} = V_a' tanh(W_a h_t + U_a [l_i || e_i])` over all latents,
//!    softmax weights, and a context vector as the weighted latent sum.
//! 3. **LSTM decoder** — consumes `[c_t || l_t || e_t]`, its output is
//!    concatenated with the previous ECG prediction and pushed through two
//!    linear layers (ReLU between) to yield the next scalar. Decoding is
//!    free-running: the model feeds back its own predictions.
//!
//! Forward passes record a trace; `backward` consumes it and produces exact
//! parameter gradients by reverse accumulation through the unrolled
//! sequence (checked against central finite differences in the tests).
//!
//! Batch-norm statistics are computed over the frames of the sequence being
//! encoded, which keeps samples independent so per-sample gradients can run
//! in parallel; running statistics are tracked for eval mode.

mod attention;
mod decoder;
mod embedding;
mod encoder;
mod forward;
mod linalg;
mod params;

pub use attention::{attention_scores, attention_weights, context_vector};
pub use decoder::{decode_step, DecoderState};
pub use embedding::time_embedding;
pub use forward::{backward, forward_eval, forward_train, FrameSeqInput, SequenceTrace};
pub use params::{
    AttentionParams, BatchNormState, Conv2dParams, EncoderParams, HeadParams, LinearParams,
    LstmParams, ModelState, SurrogateParams,
};

pub(crate) use encoder::{encode_frames_impl, encoder_backward};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Component switches for the ablation arms. All off for the full model.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationFlags {
    /// Replace every latent with the frame's mean voltage broadcast to
    /// `hidden_size`.
    pub no_cnn: bool,
    /// Use `c_t = l_t` instead of attention.
    pub no_attention: bool,
    /// Zero both attention and decoder time embeddings.
    pub no_time_embedding: bool,
}

/// Architecture hyperparameters. Shapes of every parameter tensor are pure
/// functions of this struct.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub input_c: usize,
    pub input_h: usize,
    pub input_w: usize,
    /// Output channels of the two conv blocks.
    pub conv_channels: (usize, usize),
    /// Square kernel edge, odd (same padding).
    pub kernel: usize,
    /// Max-pool factor per block.
    pub pool: usize,
    pub dropout: f64,
    pub batch_norm: bool,
    /// Adaptive average-pool output (rows, cols).
    pub adaptive_pool: (usize, usize),
    pub hidden_size: usize,
    /// Sinusoidal embedding width, even.
    pub emb_dim: usize,
    /// Base period of the sinusoidal embeddings.
    pub base_period: f64,
    #[serde(default)]
    pub ablation: AblationFlags,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            input_c: 1,
            input_h: 32,
            input_w: 32,
            conv_channels: (16, 32),
            kernel: 3,
            pool: 2,
            dropout: 0.2,
            batch_norm: true,
            adaptive_pool: (4, 4),
            hidden_size: 64,
            emb_dim: 16,
            base_period: 10000.0,
            ablation: AblationFlags::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.input_c == 0 || self.input_h == 0 || self.input_w == 0 {
            return Err(Error::Config("input dims must be positive".into()));
        }
        if self.kernel == 0 || self.kernel % 2 == 0 {
            return Err(Error::Config(format!(
                "kernel {} must be odd and positive",
                self.kernel
            )));
        }
        if self.pool == 0 {
            return Err(Error::Config("pool factor must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!(
                "dropout {} must lie in [0, 1)",
                self.dropout
            )));
        }
        if self.hidden_size == 0 {
            return Err(Error::Config("hidden_size must be >= 1".into()));
        }
        if self.emb_dim < 2 || self.emb_dim % 2 != 0 {
            return Err(Error::Config(format!(
                "emb_dim {} must be even and >= 2",
                self.emb_dim
            )));
        }
        if self.adaptive_pool.0 == 0 || self.adaptive_pool.1 == 0 {
            return Err(Error::Config("adaptive_pool dims must be positive".into()));
        }
        if self.conv_channels.0 == 0 || self.conv_channels.1 == 0 {
            return Err(Error::Config("conv channels must be positive".into()));
        }
        let (h1, w1) = self.block1_out();
        let (h2, w2) = self.block2_out();
        if h1 == 0 || w1 == 0 || h2 == 0 || w2 == 0 {
            return Err(Error::Config(format!(
                "pooling factor {} collapses a {}x{} input",
                self.pool, self.input_h, self.input_w
            )));
        }
        Ok(())
    }

    /// Spatial dims after the first block's max pool.
    pub fn block1_out(&self) -> (usize, usize) {
        (self.input_h / self.pool, self.input_w / self.pool)
    }

    /// Spatial dims after the second block's max pool.
    pub fn block2_out(&self) -> (usize, usize) {
        let (h1, w1) = self.block1_out();
        (h1 / self.pool, w1 / self.pool)
    }

    /// Flattened size feeding the encoder's linear layer.
    pub fn flatten_size(&self) -> usize {
        self.conv_channels.1 * self.adaptive_pool.0 * self.adaptive_pool.1
    }

    /// Width of the LSTM input `[c_t || l_t || e_t]`.
    pub fn lstm_input_size(&self) -> usize {
        2 * self.hidden_size + self.emb_dim
    }

    /// Width of the output head input `[h_t || prev_pred]`.
    pub fn head_input_size(&self) -> usize {
        self.hidden_size + 1
    }
}
