#![allow(dead_code)]

use std::collections::BTreeSet;

use adaptrec_core::{IngestOptions, KnowledgeContext, Record};
use rand::Rng;

/// Random corpus with up to `records` records, `keywords` keywords and
/// `documents` citation targets (some of them records).
pub fn random_records<R: Rng>(rng: &mut R, records: usize, keywords: usize, documents: usize) -> Vec<Record> {
    let m = rng.gen_range(1..=records);
    let kw_pool = rng.gen_range(1..=keywords);
    let doc_pool = rng.gen_range(1..=documents);
    let kw_density = rng.gen_range(0.02..0.3);
    let cite_density = rng.gen_range(0.0..0.05);
    (0..m)
        .map(|r| {
            let kws: Vec<String> = (0..kw_pool)
                .filter(|_| rng.gen_bool(kw_density))
                .map(|k| format!("k{k:03}"))
                .collect();
            let cites: Vec<String> = (0..doc_pool)
                .filter(|_| rng.gen_bool(cite_density))
                .map(|d| {
                    if d < m && d % 3 == 0 {
                        format!("r{d:03}")
                    } else {
                        format!("s{d:03}")
                    }
                })
                .collect();
            Record::new(&format!("r{r:03}"), kws, cites)
        })
        .collect()
}

pub fn loose() -> IngestOptions {
    IngestOptions {
        min_keyword_frequency: 1,
        stem: false,
    }
}

pub fn random_context<R: Rng>(rng: &mut R) -> KnowledgeContext {
    KnowledgeContext::from_records(random_records(rng, 200, 50, 300), loose()).unwrap()
}

/// Brute-force Jaccard over explicit sets; 0 for an empty union.
pub fn jaccard_oracle(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> (usize, usize) {
    let both = a.intersection(b).count();
    let either = a.union(b).count();
    (both, either)
}
