//! Regenerates the DMN files of the bundled mini-corpus.

use std::path::PathBuf;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/mini_corpus/models");
    std::fs::create_dir_all(&dir)?;
    for (name, xml) in legaldmn::synth::mini_corpus_model_files() {
        std::fs::write(dir.join(&name), xml)?;
        println!("wrote {name}");
    }
    Ok(())
}
