//! Determinism acceptance: every subcommand, rerun on identical inputs,
//! must reproduce its outputs byte for byte. Prints the final `[8/8]`
//! line of the acceptance suite (criteria 1–7 live in the core crate).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn ok(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_nuclei"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    assert!(
        out.status.success(),
        "command {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

/// Relative path → content for every file under `root`.
fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                files.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    files
}

#[test]
fn criterion_8_reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(
        tmp.path().join("scene.toml"),
        "scenes = 2\n\n[scene]\nheight = 96\nwidth = 96\ncount = 6\nseed = 9\n",
    )
    .unwrap();
    // one full workflow touching every subcommand; later steps consume
    // the earlier steps' outputs
    let commands: &[&[&str]] = &[
        &["synth", "--config", "../scene.toml", "--out-dir", "data"],
        &[
            "gen-targets",
            "--instances",
            "data/scene_000.png",
            "--types",
            "data/scene_000.csv",
            "--out-dir",
            "targets",
        ],
        &[
            "postproc",
            "--np",
            "targets/np.bin",
            "--hover",
            "targets/hover.bin",
            "--nc",
            "targets/nc.bin",
            "--out",
            "labels.png",
            "--types-out",
            "pred.csv",
        ],
        &[
            "eval-seg",
            "--gt",
            "data/scene_000.png",
            "data/scene_001.png",
            "--pred",
            "labels.png",
            "data/scene_001.png",
            "--out",
            "seg.tsv",
        ],
        &[
            "eval-class",
            "--gt-ann",
            "data/scene_000.csv",
            "--pred-ann",
            "pred.csv",
            "--out",
            "class.tsv",
        ],
        &["tile-plan", "--width", "1000", "--height", "1000", "--out", "plan.json"],
    ];

    let mut file_snaps = Vec::new();
    let mut stdout_snaps = Vec::new();
    for pass in ["a", "b"] {
        let root = tmp.path().join(pass);
        fs::create_dir(&root).unwrap();
        let stdouts: Vec<Vec<u8>> = commands.iter().map(|args| ok(&root, args)).collect();
        stdout_snaps.push(stdouts);
        file_snaps.push(snapshot(&root));
    }

    assert_eq!(
        stdout_snaps[0], stdout_snaps[1],
        "reruns changed what a command printed"
    );
    assert_eq!(
        file_snaps[0].keys().collect::<Vec<_>>(),
        file_snaps[1].keys().collect::<Vec<_>>(),
        "reruns produced different file sets"
    );
    let differing: Vec<String> = file_snaps[0]
        .iter()
        .filter(|(rel, bytes)| &&file_snaps[1][*rel] != bytes)
        .map(|(rel, _)| rel.display().to_string())
        .collect();
    if !differing.is_empty() {
        println!(
            "[8/8] command determinism: FAIL — {} files differ: {}",
            differing.len(),
            differing.join(", ")
        );
        panic!("reruns diverged on: {}", differing.join(", "));
    }
    println!(
        "[8/8] command determinism: PASS ({} commands, {} files byte-identical)",
        commands.len(),
        file_snaps[0].len()
    );
}
