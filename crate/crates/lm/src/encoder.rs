//! Character CNN word encoder: char embeddings, max-pooled convolutions
//! of several widths, highway layers and a linear projection.

use rand::Rng;

use polyglot_core::nn::{init_fan_in, init_normal, Linear};
use polyglot_core::{Graph, ParamId, ParamStore, Scalar, Tensor, Var};

use crate::chars::CharVocab;
use crate::config::CharEncoderConfig;

#[derive(Clone, Debug)]
pub struct Highway {
    /// `[D, 2D]`: transform half then gate half.
    pub layer: Linear,
    pub dim: usize,
}

#[derive(Clone, Debug)]
pub struct CharEncoder {
    pub config: CharEncoderConfig,
    pub table: ParamId,
    /// `(width, weight [width * char_dim, count], bias [1, count])`
    pub convs: Vec<(usize, ParamId, ParamId)>,
    pub highways: Vec<Highway>,
    pub projection: Linear,
}

impl CharEncoder {
    pub fn new<T: Scalar, R: Rng + ?Sized>(
        store: &mut ParamStore<T>,
        name: &str,
        config: &CharEncoderConfig,
        char_count: usize,
        rng: &mut R,
    ) -> Self {
        let table = store.add(
            format!("{}.chars", name),
            init_normal(rng, &[char_count, config.char_dim], 1.0),
        );
        let convs = config
            .filters
            .iter()
            .map(|&(w, c)| {
                let weight = store.add(
                    format!("{}.conv{}.weight", name, w),
                    init_fan_in(rng, w * config.char_dim, c),
                );
                let bias = store.add(format!("{}.conv{}.bias", name, w), Tensor::zeros(&[1, c]));
                (w, weight, bias)
            })
            .collect();
        let d = config.total_filters();
        let highways = (0..config.highway_layers)
            .map(|i| {
                let layer = Linear::new(
                    store,
                    &format!("{}.highway{}", name, i),
                    d,
                    2 * d,
                    true,
                    rng,
                );
                // Gate starts mostly closed so the layer begins near identity.
                let b = layer.bias.expect("highway bias");
                for x in &mut store.value_mut(b).data_mut()[d..] {
                    *x = T::lit(-2.0);
                }
                Highway { layer, dim: d }
            })
            .collect();
        let projection = Linear::new(
            store,
            &format!("{}.projection", name),
            d,
            config.projection,
            true,
            rng,
        );
        CharEncoder {
            config: config.clone(),
            table,
            convs,
            highways,
            projection,
        }
    }

    /// Char id rows for `words`, each exactly `max_word_len` long.
    pub fn char_ids(&self, chars: &CharVocab, words: &[&str]) -> Vec<usize> {
        words
            .iter()
            .flat_map(|w| chars.encode(w, self.config.max_word_len))
            .collect()
    }

    /// Pooled filter responses followed by the highway layers, `[n, Σ counts]`.
    pub fn features<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        ids: &[usize],
    ) -> Var {
        let len = self.config.max_word_len;
        let table = g.param(store, self.table);
        let emb = g.gather_rows(table, ids);
        let pooled: Vec<Var> = self
            .convs
            .iter()
            .map(|&(w, weight, bias)| {
                let wv = g.param(store, weight);
                let bv = g.param(store, bias);
                let conv = g.conv1d(emb, wv, bv, len, w);
                let pooled = g.max_pool_groups(conv, len - w + 1);
                g.relu(pooled)
            })
            .collect();
        let mut x = g.concat_cols(&pooled);
        for hw in &self.highways {
            let both = hw.layer.forward(g, store, x);
            let t = g.slice_cols(both, 0, hw.dim);
            let t = g.relu(t);
            let gate = g.slice_cols(both, hw.dim, hw.dim);
            let gate = g.sigmoid(gate);
            let moved = g.mul(gate, t);
            let carry = g.one_minus(gate);
            let kept = g.mul(carry, x);
            x = g.add(moved, kept);
        }
        x
    }

    /// `[n, projection]` encodings of `words`.
    pub fn forward<T: Scalar>(
        &self,
        g: &mut Graph<T>,
        store: &ParamStore<T>,
        chars: &CharVocab,
        words: &[&str],
    ) -> Var {
        let ids = self.char_ids(chars, words);
        let x = self.features(g, store, &ids);
        self.projection.forward(g, store, x)
    }
}
