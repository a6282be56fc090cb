use robustbench_core::annotations::{format_split_csv, split_dataset, write_annotations};
use robustbench_core::imaging::asset::synthetic_scene;
use robustbench_core::imaging::save_sequence;
use robustbench_core::rng::derive;

use super::{create_dir, subdirs, write_file};
use crate::{exit, required, resolve, CliError, CliResult, GenRefsArgs, SplitArgs};

pub const SPLIT_FILE: &str = "split.csv";

pub fn split(a: &SplitArgs) -> CliResult<()> {
    let cfg = resolve(
        &a.config,
        &[
            ("input", "input", &a.input),
            ("split_ratio", "ratio", &a.ratio),
            ("split_mode", "mode", &a.mode),
            ("seed", "seed", &a.seed),
            ("out", "out", &a.out),
        ],
    )?;
    let out = required(&cfg.out, "out")?;
    let ids: Vec<String> = match &a.ids {
        Some(list) => list.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
        None => subdirs(required(&cfg.input, "input")?, exit::IO)?.into_iter().map(|(id, _)| id).collect(),
    };
    let plan = split_dataset(&ids, cfg.split_ratio, cfg.seed, cfg.split_mode).map_err(|e| CliError::args(e.to_string()))?;
    create_dir(out, exit::IO)?;
    write_file(&out.join(SPLIT_FILE), &format_split_csv(&plan), exit::IO)?;
    cfg.echo(out)?;
    println!("split: {} train / {} test -> {}", plan.train_ids.len(), plan.test_ids.len(), out.join(SPLIT_FILE).display());
    Ok(())
}

/// Writes `<out>/refs/<id>/frame_*.png` and `<out>/gt/<id>.txt`.
pub fn gen_refs(a: &GenRefsArgs) -> CliResult<()> {
    let cfg = resolve(&a.config, &[("out", "out", &a.out), ("seed", "seed", &a.seed), ("format", "format", &a.format)])?;
    let out = required(&cfg.out, "out")?;
    if a.count == 0 || a.width == 0 || a.height == 0 || a.frames == 0 {
        return Err(CliError::args("--count, --width, --height and --frames must be positive"));
    }
    let (refs, gt) = (out.join("refs"), out.join("gt"));
    create_dir(&gt, exit::IO)?;
    for i in 0..a.count {
        let id = format!("ref{i:02}");
        let (seq, anns) = synthetic_scene(a.width, a.height, a.frames, derive(cfg.seed, &[i as u64]));
        save_sequence(&seq, refs.join(&id), cfg.format).map_err(|e| CliError::io(e.to_string()))?;
        write_annotations(&anns, gt.join(format!("{id}.txt"))).map_err(|e| CliError::io(e.to_string()))?;
    }
    cfg.echo(out)?;
    println!("gen-refs: {} references of {}x{}x{} -> {}", a.count, a.width, a.height, a.frames, out.display());
    Ok(())
}
