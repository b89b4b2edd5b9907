//! Shared fixture writers for integration tests.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

pub struct Fixture {
    pub embeddings: PathBuf,
    pub relations: PathBuf,
    pub pathways: PathBuf,
    pub names: PathBuf,
}

/// The six-relation toy knowledge base: drugs d1..d6, genes g1..g8, one
/// pathway with drugs {d1,d2,d3,d5} and genes {g1,g2,g4,g7}, plus a small
/// random embedding covering every entity.
pub fn toy_fixture(dir: &Path, seed: u64) -> Fixture {
    let relations = dir.join("relations.tsv");
    let mut f = File::create(&relations).unwrap();
    writeln!(f, "drug\tgene").unwrap();
    for (d, g) in [
        ("d1", "g1"),
        ("d1", "g2"),
        ("d1", "g3"),
        ("d2", "g4"),
        ("d3", "g5"),
        ("d4", "g6"),
    ] {
        writeln!(f, "D:{d}\tG:{g}").unwrap();
    }
    drop(f);

    let pathways = dir.join("pathways.tsv");
    let mut f = File::create(&pathways).unwrap();
    writeln!(f, "pathway\tkind\tentity").unwrap();
    for d in ["d1", "d2", "d3", "d5"] {
        writeln!(f, "p1\tdrug\tD:{d}").unwrap();
    }
    for g in ["g1", "g2", "g4", "g7"] {
        writeln!(f, "p1\tgene\tG:{g}").unwrap();
    }
    drop(f);

    let names = dir.join("names.tsv");
    let mut f = File::create(&names).unwrap();
    writeln!(f, "entity\tname").unwrap();
    for d in 1..=6 {
        writeln!(f, "D:d{d}\tdrug {d}").unwrap();
    }
    for g in 1..=8 {
        writeln!(f, "G:g{g}\tgene {g}").unwrap();
    }
    drop(f);

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let dim = 6;
    let mut tokens = Vec::new();
    for d in 1..=6 {
        tokens.push(format!("D:d{d}"));
    }
    for g in 1..=8 {
        tokens.push(format!("G:g{g}"));
    }
    let embeddings = dir.join("embeddings.txt");
    let mut f = File::create(&embeddings).unwrap();
    writeln!(f, "{} {}", tokens.len(), dim).unwrap();
    for token in &tokens {
        let values: Vec<String> = (0..dim)
            .map(|_| format!("{}", rng.random_range(-1.0f32..1.0)))
            .collect();
        writeln!(f, "{token} {}", values.join(" ")).unwrap();
    }
    drop(f);

    Fixture {
        embeddings,
        relations,
        pathways,
        names,
    }
}

/// A store where every gene embedding is its drug's embedding plus one shared
/// offset vector. The paired estimator recovers the offset exactly up to
/// rounding, making the planted gene the top-1 prediction for every drug.
pub fn planted_fixture(dir: &Path, n_pairs: usize, dim: usize, seed: u64) -> Fixture {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let offset: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();

    let relations = dir.join("relations.tsv");
    let mut rel = File::create(&relations).unwrap();
    writeln!(rel, "drug\tgene").unwrap();

    let names = dir.join("names.tsv");
    let mut nam = File::create(&names).unwrap();
    writeln!(nam, "entity\tname").unwrap();

    let embeddings = dir.join("embeddings.txt");
    let mut emb = File::create(&embeddings).unwrap();
    writeln!(emb, "{} {}", 2 * n_pairs, dim).unwrap();
    for i in 0..n_pairs {
        let drug: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let gene: Vec<f64> = drug.iter().zip(offset.iter()).map(|(x, v)| x + v).collect();
        writeln!(rel, "D:d{i:03}\tG:g{i:03}").unwrap();
        writeln!(nam, "D:d{i:03}\tdrug {i}").unwrap();
        writeln!(nam, "G:g{i:03}\tgene {i}").unwrap();
        let fmt = |v: &[f64]| {
            v.iter()
                .map(|x| format!("{}", *x as f32))
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(emb, "D:d{i:03} {}", fmt(&drug)).unwrap();
        writeln!(emb, "G:g{i:03} {}", fmt(&gene)).unwrap();
    }
    drop(rel);
    drop(nam);
    drop(emb);

    let pathways = dir.join("pathways.tsv");
    let mut f = File::create(&pathways).unwrap();
    writeln!(f, "pathway\tkind\tentity").unwrap();
    drop(f);

    Fixture {
        embeddings,
        relations,
        pathways,
        names,
    }
}
