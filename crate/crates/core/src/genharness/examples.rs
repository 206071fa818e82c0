//! One-shot example selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::ingest::ModelBundle;

pub const MIN_EXAMPLE_ARTICLES: usize = 3;
pub const MIN_EXAMPLE_NODES: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no example candidates for `{target}`: none left after the {filter} filter")]
pub struct ExampleSelectionError {
    pub target: String,
    pub filter: &'static str,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExampleSelection {
    /// One example id per run.
    pub ids: Vec<String>,
    /// The eligible pool was smaller than the number of runs.
    pub with_replacement: bool,
}

/// RNG seeded from `(seed, target id)` only.
pub fn target_rng(seed: u64, target_id: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(target_id.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes)
}

type Step<'a> = (&'static str, &'a dyn Fn(&ModelBundle) -> bool);

pub fn select_examples(
    target: &ModelBundle,
    pool: &[ModelBundle],
    runs: usize,
    seed: u64,
) -> Result<ExampleSelection, ExampleSelectionError> {
    let fail = |filter| ExampleSelectionError {
        target: target.graph.id.clone(),
        filter,
    };
    let mut eligible: Vec<&ModelBundle> = pool.iter().collect();
    let steps: [Step; 4] = [
        ("same model type", &|b| b.graph.model_type == target.graph.model_type),
        ("minimum article count", &|b| b.articles.len() >= MIN_EXAMPLE_ARTICLES),
        ("minimum node count", &|b| b.graph.nodes.len() >= MIN_EXAMPLE_NODES),
        ("exclude target", &|b| b.graph.id != target.graph.id),
    ];
    for (name, keep) in steps {
        eligible.retain(|b| keep(b));
        if eligible.is_empty() {
            return Err(fail(name));
        }
    }
    let mut ids: Vec<&str> = eligible.iter().map(|b| b.graph.id.as_str()).collect();
    ids.sort_unstable();
    ids.dedup();

    let mut rng = target_rng(seed, &target.graph.id);
    if ids.len() >= runs {
        let picked = rand::seq::index::sample(&mut rng, ids.len(), runs);
        Ok(ExampleSelection {
            ids: picked.iter().map(|i| ids[i].to_owned()).collect(),
            with_replacement: false,
        })
    } else {
        Ok(ExampleSelection {
            ids: (0..runs).map(|_| ids[rng.gen_range(0..ids.len())].to_owned()).collect(),
            with_replacement: true,
        })
    }
}
