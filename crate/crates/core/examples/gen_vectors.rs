//! Writes a deterministic word-vector table over the lemmas of a statute file.
//!
//! Vectors are rows of a positive PMI co-occurrence matrix (window 2) mapped
//! to `dim` components by a seeded sparse random projection. They exist to
//! exercise the distributional feature; they carry no pretrained semantics.
//!
//!     cargo run --example gen_vectors -- statutes.txt out.txt [dim] [seed]

use std::collections::BTreeMap;

use lexqa::{Corpus, EmbeddingTable, TextPipeline};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WINDOW: usize = 2;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.len() < 2 {
        return Err("usage: gen_vectors <statutes> <out> [dim] [seed]".into());
    }
    let dim: usize = args.get(2).map_or(Ok(50), |s| s.parse())?;
    let seed: u64 = args.get(3).map_or(Ok(7), |s| s.parse())?;

    let corpus = Corpus::load(&args[0])?;
    let pipeline = TextPipeline::default();
    let docs: Vec<Vec<String>> = corpus.articles().map(|a| pipeline.lemmas(&a.content())).collect();

    let mut vocab: BTreeMap<&str, usize> = BTreeMap::new();
    for w in docs.iter().flatten() {
        let n = vocab.len();
        vocab.entry(w).or_insert(n);
    }
    // Re-index in sorted order so the output does not depend on article order.
    for (i, v) in vocab.values_mut().enumerate() {
        *v = i;
    }
    let n = vocab.len();

    let mut cooc = vec![0.0f64; n * n];
    for doc in &docs {
        for (i, w) in doc.iter().enumerate() {
            let wi = vocab[w.as_str()];
            for c in &doc[i.saturating_sub(WINDOW)..(i + WINDOW + 1).min(doc.len())] {
                let ci = vocab[c.as_str()];
                if ci != wi {
                    cooc[wi * n + ci] += 1.0;
                }
            }
        }
    }
    let row: Vec<f64> = (0..n).map(|i| cooc[i * n..(i + 1) * n].iter().sum()).collect();
    let total: f64 = row.iter().sum();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = (3.0 / dim as f64).sqrt();
    let projection: Vec<f64> = (0..n * dim)
        .map(|_| match rng.gen_range(0..6) {
            0 => scale,
            1 => -scale,
            _ => 0.0,
        })
        .collect();

    let mut table = EmbeddingTable::new(dim);
    for (word, &i) in &vocab {
        let mut v = vec![0.0; dim];
        for j in 0..n {
            let c = cooc[i * n + j];
            if c == 0.0 {
                continue;
            }
            let pmi = (c * total / (row[i] * row[j])).ln();
            if pmi > 0.0 {
                for (d, x) in v.iter_mut().enumerate() {
                    *x += pmi * projection[j * dim + d];
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        table.insert(word.to_string(), v)?;
    }
    std::fs::write(&args[1], table.to_text())?;
    eprintln!("{} words, {dim} dimensions", table.len());
    Ok(())
}
