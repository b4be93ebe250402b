//! Dense word/context embedding matrices.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

/// Word vectors U (one row per word id) and context vectors V (one row per
/// context id), both k-dimensional, stored row-major in 64-bit floats.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    u: Vec<f64>,
    v: Vec<f64>,
    words: usize,
    contexts: usize,
    k: usize,
}

impl EmbeddingModel {
    /// Seeded uniform initialization on [-0.5/k, 0.5/k]; the same seed
    /// always yields the same matrices.
    pub fn init(words: usize, contexts: usize, k: usize, seed: u64) -> EmbeddingModel {
        assert!(words >= 1 && contexts >= 1 && k >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / k as f64;
        let mut fill = |n: usize| -> Vec<f64> {
            (0..n).map(|_| (rng.random::<f64>() - 0.5) * scale).collect()
        };
        let u = fill(words * k);
        let v = fill(contexts * k);
        EmbeddingModel { u, v, words, contexts, k }
    }

    pub fn from_parts(
        u: Vec<f64>,
        v: Vec<f64>,
        words: usize,
        contexts: usize,
        k: usize,
    ) -> Result<EmbeddingModel> {
        if u.len() != words * k || v.len() != contexts * k {
            return Err(Error::Validation(format!(
                "matrix sizes {}/{} do not match {words}x{k} and {contexts}x{k}",
                u.len(),
                v.len()
            )));
        }
        if u.iter().chain(v.iter()).any(|x| !x.is_finite()) {
            return Err(Error::Validation("non-finite embedding entry".into()));
        }
        Ok(EmbeddingModel { u, v, words, contexts, k })
    }

    pub fn words(&self) -> usize {
        self.words
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn word_vec(&self, w: u32) -> &[f64] {
        let i = w as usize * self.k;
        &self.u[i..i + self.k]
    }

    pub fn context_vec(&self, c: u32) -> &[f64] {
        let i = c as usize * self.k;
        &self.v[i..i + self.k]
    }

    pub fn word_rows(&self) -> &[f64] {
        &self.u
    }

    pub fn context_rows(&self) -> &[f64] {
        &self.v
    }

    pub fn word_rows_mut(&mut self) -> &mut [f64] {
        &mut self.u
    }

    pub fn context_rows_mut(&mut self) -> &mut [f64] {
        &mut self.v
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut [f64], &mut [f64], usize) {
        (&mut self.u, &mut self.v, self.k)
    }

    /// Relevance score <u_w, v_c>.
    pub fn score(&self, w: u32, c: u32) -> f64 {
        dot(self.word_vec(w), self.context_vec(c))
    }

    /// Text export: optional "<vocab_size> <dim>" header, then one
    /// "word f1 .. fk" line per word in id order. `add_context` exports
    /// u_w + v_c instead of u_w.
    pub fn export_text(
        &self,
        vocab: &Vocabulary,
        path: &Path,
        add_context: bool,
        header: bool,
    ) -> Result<()> {
        use std::io::Write;
        if vocab.len() != self.words {
            return Err(Error::Validation(format!(
                "vocabulary has {} entries but model has {} word rows",
                vocab.len(),
                self.words
            )));
        }
        let file =
            std::fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut out = std::io::BufWriter::new(file);
        let werr = |e| Error::io("writing embedding export", e);
        if header {
            writeln!(out, "{} {}", self.words, self.k).map_err(werr)?;
        }
        for (id, (token, _)) in vocab.iter().enumerate() {
            write!(out, "{token}").map_err(werr)?;
            let u = self.word_vec(id as u32);
            if add_context {
                let v = self.context_vec(id as u32);
                for t in 0..self.k {
                    write!(out, " {}", u[t] + v[t]).map_err(werr)?;
                }
            } else {
                for x in u {
                    write!(out, " {x}").map_err(werr)?;
                }
            }
            writeln!(out).map_err(werr)?;
        }
        out.flush().map_err(werr)?;
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for i in 0..a.len() {
        acc += a[i] * b[i];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeded_init_is_deterministic() {
        let a = EmbeddingModel::init(30, 20, 7, 42);
        let b = EmbeddingModel::init(30, 20, 7, 42);
        assert_eq!(a, b);
        let c = EmbeddingModel::init(30, 20, 7, 43);
        assert_ne!(a, c);
    }

    #[test]
    fn init_entries_within_range() {
        let k = 7;
        let m = EmbeddingModel::init(50, 40, k, 1);
        let bound = 0.5 / k as f64;
        for &x in m.word_rows().iter().chain(m.context_rows()) {
            assert!(x >= -bound && x <= bound, "{x} out of [-{bound}, {bound}]");
        }
    }

    #[test]
    fn init_mean_near_zero() {
        // Uniform on [-b, b] has variance b^2/3; the mean of n entries has
        // standard deviation b/sqrt(3n). Check the 3-sigma band.
        let (words, k) = (1000, 10);
        let m = EmbeddingModel::init(words, 1, k, 7);
        let n = (words * k) as f64;
        let mean = m.word_rows().iter().sum::<f64>() / n;
        let sigma = (0.5 / k as f64) / (3.0 * n).sqrt();
        assert!(mean.abs() <= 3.0 * sigma, "mean {mean} vs 3sigma {}", 3.0 * sigma);
    }

    #[test]
    fn score_is_inner_product() {
        let m = EmbeddingModel::from_parts(vec![1.0, 2.0], vec![3.0, -1.0], 1, 1, 2).unwrap();
        assert_eq!(m.score(0, 0), 1.0);
    }

    #[test]
    fn zero_word_vector_scores_zero() {
        let m =
            EmbeddingModel::from_parts(vec![0.0, 0.0], vec![3.0, -1.0, 2.0, 5.0], 1, 2, 2).unwrap();
        assert_eq!(m.score(0, 0), 0.0);
        assert_eq!(m.score(0, 1), 0.0);
    }

    #[test]
    fn score_matches_loop_oracle() {
        let m = EmbeddingModel::init(5, 6, 8, 9);
        for w in 0..5u32 {
            for c in 0..6u32 {
                let mut expect = 0.0;
                for t in 0..8 {
                    expect += m.word_vec(w)[t] * m.context_vec(c)[t];
                }
                assert_eq!(m.score(w, c), expect);
            }
        }
    }

    #[test]
    fn from_parts_rejects_bad_shapes() {
        assert!(EmbeddingModel::from_parts(vec![0.0; 5], vec![0.0; 4], 2, 2, 2).is_err());
        assert!(EmbeddingModel::from_parts(vec![f64::NAN; 4], vec![0.0; 4], 2, 2, 2).is_err());
    }
}
