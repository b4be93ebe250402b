//! Intrinsic evaluation: Spearman word similarity, 3CosAdd/3CosMul word
//! analogies with the zero-score rule for out-of-vocabulary questions, and
//! nearest-neighbor listings.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{dot, EmbeddingModel};
use crate::vocab::Vocabulary;

/// Which vectors represent a word downstream: u_w alone (the similarity
/// convention) or u_w + v_c (the analogy convention).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VectorMode {
    #[default]
    Word,
    WordPlusContext,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalogyMethod {
    CosAdd,
    CosMul,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metric: String,
    pub value: f64,
    /// Items actually scored against the model.
    pub answered: usize,
    pub total: usize,
    /// Items dropped (similarity) or zero-scored (analogy) for OOV words.
    pub oov: usize,
    /// Diagnostic: cosine queries that hit an all-zero vector.
    pub zero_vectors: usize,
}

#[derive(Debug, Clone)]
pub struct SimilarityDataset {
    pub pairs: Vec<(String, String, f64)>,
    /// Malformed lines skipped during parsing.
    pub skipped: usize,
}

impl SimilarityDataset {
    /// One "word1 word2 score" per line (tabs or spaces); '#' comments.
    /// Words are lowercased to match corpus normalization.
    pub fn load(path: &Path) -> Result<SimilarityDataset> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(std::io::BufReader::new(file))
    }

    pub fn parse(reader: impl BufRead) -> Result<SimilarityDataset> {
        let mut pairs = Vec::new();
        let mut skipped = 0;
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io("reading similarity dataset", e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            match (it.next(), it.next(), it.next().map(str::parse::<f64>)) {
                (Some(a), Some(b), Some(Ok(score))) if score.is_finite() => {
                    pairs.push((a.to_lowercase(), b.to_lowercase(), score));
                }
                _ => skipped += 1,
            }
        }
        Ok(SimilarityDataset { pairs, skipped })
    }
}

#[derive(Debug, Clone)]
pub struct AnalogyQuestion {
    pub a: String,
    pub b: String,
    pub c: String,
    pub d: String,
    pub section: usize,
}

#[derive(Debug, Clone)]
pub struct AnalogyDataset {
    pub questions: Vec<AnalogyQuestion>,
    pub sections: Vec<String>,
    pub skipped: usize,
}

impl AnalogyDataset {
    /// Google analogy format: ": section-name" headers, then "a b c d"
    /// lines. Words are lowercased.
    pub fn load(path: &Path) -> Result<AnalogyDataset> {
        let file =
            std::fs::File::open(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse(std::io::BufReader::new(file))
    }

    pub fn parse(reader: impl BufRead) -> Result<AnalogyDataset> {
        let mut questions = Vec::new();
        let mut sections = Vec::new();
        let mut skipped = 0;
        for line in reader.lines() {
            let line = line.map_err(|e| Error::io("reading analogy dataset", e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix(':') {
                sections.push(name.trim().to_string());
                continue;
            }
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.len() != 4 || sections.is_empty() {
                skipped += 1;
                continue;
            }
            questions.push(AnalogyQuestion {
                a: words[0].to_lowercase(),
                b: words[1].to_lowercase(),
                c: words[2].to_lowercase(),
                d: words[3].to_lowercase(),
                section: sections.len() - 1,
            });
        }
        Ok(AnalogyDataset { questions, sections, skipped })
    }
}

/// Cosine similarity; zero vectors report 0 (callers count the diagnostic).
pub fn cosine(u: &[f64], v: &[f64]) -> f64 {
    let nu = dot(u, u).sqrt();
    let nv = dot(v, v).sqrt();
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    dot(u, v) / (nu * nv)
}

/// Fractional ranks with tied values sharing their average rank (1-based).
fn fractional_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).expect("NaN in rank input"));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson correlation of fractional ranks.
/// Zero rank variance (all values tied) is undefined and reported as an
/// error rather than a score.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Validation(format!(
            "rank correlation needs equal lengths, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::Undefined(
            "rank correlation needs at least 2 observations".into(),
        ));
    }
    if x.iter().chain(y.iter()).any(|v| v.is_nan()) {
        return Err(Error::Validation("NaN in rank correlation input".into()));
    }
    let rx = fractional_ranks(x);
    let ry = fractional_ranks(y);
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        let dx = rx[i] - mx;
        let dy = ry[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined(
            "rank correlation undefined: an input has zero rank variance".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Per-word vectors in the requested mode, flattened row-major, optionally
/// unit-normalized. Returns the count of all-zero rows (left as zeros).
fn project(model: &EmbeddingModel, mode: VectorMode, normalize: bool) -> (Vec<f64>, usize) {
    let k = model.k();
    let words = model.words();
    let mut data = vec![0.0; words * k];
    let mut zeros = 0;
    for w in 0..words {
        let row = &mut data[w * k..(w + 1) * k];
        row.copy_from_slice(model.word_vec(w as u32));
        if mode == VectorMode::WordPlusContext {
            let v = model.context_vec(w as u32);
            for t in 0..k {
                row[t] += v[t];
            }
        }
        if normalize {
            let norm = dot(row, row).sqrt();
            if norm == 0.0 {
                zeros += 1;
            } else {
                for t in row.iter_mut() {
                    *t /= norm;
                }
            }
        }
    }
    (data, zeros)
}

fn check_model_vocab(model: &EmbeddingModel, vocab: &Vocabulary, mode: VectorMode) -> Result<()> {
    if vocab.len() != model.words() {
        return Err(Error::Validation(format!(
            "vocabulary has {} entries but model has {} word rows",
            vocab.len(),
            model.words()
        )));
    }
    if mode == VectorMode::WordPlusContext && model.contexts() != model.words() {
        return Err(Error::Validation(
            "combined word+context vectors need matching word and context vocabularies".into(),
        ));
    }
    Ok(())
}

/// Spearman correlation between model cosines and human judgments over the
/// in-vocabulary pairs; OOV pairs are excluded and counted.
pub fn eval_similarity(
    model: &EmbeddingModel,
    vocab: &Vocabulary,
    dataset: &SimilarityDataset,
    mode: VectorMode,
) -> Result<EvalReport> {
    check_model_vocab(model, vocab, mode)?;
    let k = model.k();
    let (vecs, _) = project(model, mode, false);
    let mut model_scores = Vec::new();
    let mut human_scores = Vec::new();
    let mut oov = 0;
    let mut zero_vectors = 0;
    for (w1, w2, human) in &dataset.pairs {
        match (vocab.id(w1), vocab.id(w2)) {
            (Some(i), Some(j)) => {
                let vi = &vecs[i as usize * k..(i as usize + 1) * k];
                let vj = &vecs[j as usize * k..(j as usize + 1) * k];
                if dot(vi, vi) == 0.0 || dot(vj, vj) == 0.0 {
                    zero_vectors += 1;
                }
                model_scores.push(cosine(vi, vj));
                human_scores.push(*human);
            }
            _ => oov += 1,
        }
    }
    if model_scores.len() < 2 {
        return Err(Error::Undefined(format!(
            "only {} in-vocabulary pairs of {}; correlation undefined",
            model_scores.len(),
            dataset.pairs.len()
        )));
    }
    let value = spearman(&model_scores, &human_scores)?;
    Ok(EvalReport {
        metric: "similarity-spearman".into(),
        value,
        answered: model_scores.len(),
        total: dataset.pairs.len(),
        oov,
        zero_vectors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalogyAnswer {
    Word(u32),
    Unanswerable,
}

/// Argmax over unit-normalized candidate vectors, excluding the three
/// question words; ties break toward the lowest word id.
fn answer_from_projection(
    vecs: &[f64],
    k: usize,
    a: u32,
    b: u32,
    c: u32,
    method: AnalogyMethod,
) -> u32 {
    let words = vecs.len() / k;
    let row = |i: u32| &vecs[i as usize * k..(i as usize + 1) * k];
    let (ra, rb, rc) = (row(a), row(b), row(c));
    let mut best = u32::MAX;
    let mut best_score = f64::NEG_INFINITY;
    for d in 0..words as u32 {
        if d == a || d == b || d == c {
            continue;
        }
        let rd = row(d);
        let (ca, cb, cc) = (dot(rd, ra), dot(rd, rb), dot(rd, rc));
        let score = match method {
            AnalogyMethod::CosAdd => cb - ca + cc,
            AnalogyMethod::CosMul => cb * cc / (ca + 0.001),
        };
        if score > best_score {
            best_score = score;
            best = d;
        }
    }
    best
}

/// Answer a : b :: c : ? — returns the best candidate word, or
/// `Unanswerable` when any query word is out of vocabulary.
pub fn answer_analogy(
    model: &EmbeddingModel,
    vocab: &Vocabulary,
    a: &str,
    b: &str,
    c: &str,
    method: AnalogyMethod,
    mode: VectorMode,
) -> Result<AnalogyAnswer> {
    check_model_vocab(model, vocab, mode)?;
    let (ia, ib, ic) = match (vocab.id(a), vocab.id(b), vocab.id(c)) {
        (Some(x), Some(y), Some(z)) => (x, y, z),
        _ => return Ok(AnalogyAnswer::Unanswerable),
    };
    if vocab.len() <= 3 {
        return Ok(AnalogyAnswer::Unanswerable);
    }
    let (vecs, _) = project(model, mode, true);
    Ok(AnalogyAnswer::Word(answer_from_projection(
        &vecs,
        model.k(),
        ia,
        ib,
        ic,
        method,
    )))
}

#[derive(Debug, Clone)]
pub struct AnalogyBreakdown {
    pub overall: EvalReport,
    pub semantic: EvalReport,
    pub syntactic: EvalReport,
}

/// Exact-match accuracy over all questions; a question with any OOV word is
/// unanswerable and scores zero. Sections whose name starts with one of
/// `syntactic_prefixes` count as syntactic, the rest as semantic.
pub fn eval_analogy(
    model: &EmbeddingModel,
    vocab: &Vocabulary,
    dataset: &AnalogyDataset,
    method: AnalogyMethod,
    mode: VectorMode,
    syntactic_prefixes: &[String],
    workers: usize,
) -> Result<AnalogyBreakdown> {
    check_model_vocab(model, vocab, mode)?;
    if dataset.questions.is_empty() {
        return Err(Error::Validation("analogy dataset holds no questions".into()));
    }
    let k = model.k();
    let (vecs, _) = project(model, mode, true);
    let syntactic: Vec<bool> = dataset
        .sections
        .iter()
        .map(|name| syntactic_prefixes.iter().any(|p| name.starts_with(p.as_str())))
        .collect();

    // (section, answered, correct) per question, computed independently and
    // reduced in question order.
    let mut results: Vec<(usize, bool, bool)> = vec![(0, false, false); dataset.questions.len()];
    let workers = workers.max(1).min(dataset.questions.len());
    let chunk = dataset.questions.len().div_ceil(workers);
    std::thread::scope(|scope| {
        for (qchunk, rchunk) in dataset
            .questions
            .chunks(chunk)
            .zip(results.chunks_mut(chunk))
        {
            let vecs = &vecs;
            scope.spawn(move || {
                for (q, slot) in qchunk.iter().zip(rchunk.iter_mut()) {
                    let ids = (
                        vocab.id(&q.a),
                        vocab.id(&q.b),
                        vocab.id(&q.c),
                        vocab.id(&q.d),
                    );
                    *slot = match ids {
                        (Some(a), Some(b), Some(c), Some(d)) => {
                            let got = answer_from_projection(vecs, k, a, b, c, method);
                            (q.section, true, got == d)
                        }
                        _ => (q.section, false, false),
                    };
                }
            });
        }
    });

    let tally = |pick: &dyn Fn(usize) -> bool, metric: &str| -> EvalReport {
        let mut total = 0;
        let mut answered = 0;
        let mut correct = 0;
        for &(section, ans, ok) in &results {
            if pick(section) {
                total += 1;
                answered += usize::from(ans);
                correct += usize::from(ok);
            }
        }
        EvalReport {
            metric: metric.into(),
            value: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
            answered,
            total,
            oov: total - answered,
            zero_vectors: 0,
        }
    };
    let overall = tally(&|_| true, "analogy-accuracy");
    let semantic = tally(&|s| !syntactic[s], "analogy-semantic");
    let syntactic_report = tally(&|s| syntactic[s], "analogy-syntactic");
    Ok(AnalogyBreakdown { overall, semantic, syntactic: syntactic_report })
}

/// Top-n vocabulary words by cosine to the query word (query excluded),
/// descending, ties toward the lowest id.
pub fn nearest_neighbors(
    model: &EmbeddingModel,
    vocab: &Vocabulary,
    word: &str,
    n: usize,
    mode: VectorMode,
) -> Result<Vec<(String, f64)>> {
    check_model_vocab(model, vocab, mode)?;
    let query = vocab
        .id(word)
        .ok_or_else(|| Error::Validation(format!("query word {word:?} is out of vocabulary")))?;
    let k = model.k();
    let (vecs, _) = project(model, mode, false);
    let qrow = vecs[query as usize * k..(query as usize + 1) * k].to_vec();
    let mut scored: Vec<(u32, f64)> = (0..model.words() as u32)
        .filter(|&w| w != query)
        .map(|w| (w, cosine(&qrow, &vecs[w as usize * k..(w as usize + 1) * k])))
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(n);
    Ok(scored
        .into_iter()
        .map(|(w, s)| (vocab.token(w).unwrap().to_string(), s))
        .collect())
}
