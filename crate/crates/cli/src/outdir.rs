use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};

use crate::Failure;

/// Makes `dir` ready for a new run. An existing non-empty directory is
/// refused unless `force` (wipe) or `keep` (resume) is set.
pub fn prepare(dir: &Path, force: bool, keep: bool) -> Result<(), Failure> {
    let occupied = dir.exists()
        && fs::read_dir(dir)
            .map(|mut d| d.next().is_some())
            .unwrap_or(true);
    if occupied && !keep {
        if !force {
            return Err(Failure::Runtime(anyhow!(
                "output directory {} already exists; pass --force to replace it",
                dir.display()
            )));
        }
        fs::remove_dir_all(dir).with_context(|| format!("removing {}", dir.display()))?;
    }
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}
