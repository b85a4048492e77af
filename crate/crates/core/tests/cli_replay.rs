use std::fs;
use std::path::Path;

use redistrib::cli::run;
use serde_json::Value;

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

/// Reruns the arguments recorded in `dir/manifest.json` into `replay`.
fn replay(dir: &Path, replay: &Path) -> i32 {
    let manifest = read_json(&dir.join("manifest.json"));
    let mut args: Vec<String> = manifest["args"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a.as_str().unwrap().to_string())
        .collect();
    let at = args.iter().position(|a| a == "--out").unwrap();
    args[at + 1] = replay.display().to_string();
    run(std::iter::once("redistrib".to_string()).chain(args))
}

fn same_files(a: &Path, b: &Path, names: &[&str]) {
    for name in names {
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        assert!(x == y, "{name} differs");
    }
}

#[test]
fn train_replay_is_bit_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let args = ["redistrib", "train", "--n", "3", "--hidden", "3", "--mip-rounds", "3", "--lr", "1e-3", "--epochs", "100", "--seed", "7"];
    let code = run(args.iter().map(|s| s.to_string()).chain(["--out".into(), first.display().to_string()]));
    assert_eq!(code, 0);
    let manifest = read_json(&first.join("manifest.json"));
    for field in ["subcommand", "args", "seed", "version", "started", "finished", "exit_code", "outputs"] {
        assert!(manifest.get(field).is_some(), "manifest lacks {field}");
    }
    assert_eq!(manifest["seed"], 7);
    let summary = read_json(&first.join("summary.json"));
    for field in ["best_ratio", "gap", "goal", "rounds"] {
        assert!(summary.get(field).is_some(), "summary lacks {field}");
    }

    let second = tmp.path().join("second");
    assert_eq!(replay(&first, &second), 0);
    let mut names = vec!["history.csv", "store.txt", "summary.json"];
    if first.join("best.json").exists() {
        names.push("best.json");
    }
    same_files(&first, &second, &names);
    let header = fs::read_to_string(first.join("history.csv")).unwrap();
    assert!(header.starts_with("round,alpha_goal,mean_loss,eps_left,eps_right,achieved_ratio"));
}

#[test]
fn lottery_replay_and_store_modes() {
    let tmp = tempfile::tempdir().unwrap();
    let first = tmp.path().join("first");
    let base = [
        "redistrib", "lottery", "--n", "3", "--large", "5", "--ticket-size", "3", "--mip-rounds", "8",
        "--lr", "1e-3", "--epochs", "50", "--seed", "3",
    ];
    let with_out = |dir: &Path, extra: &[&str]| {
        base.iter()
            .map(|s| s.to_string())
            .chain(extra.iter().map(|s| s.to_string()))
            .chain(["--out".to_string(), dir.display().to_string()])
            .collect::<Vec<_>>()
    };
    assert_eq!(run(with_out(&first, &["--draws", "2"])), 0);
    let store_lines = |dir: &Path| fs::read_to_string(dir.join("store.txt")).unwrap().lines().count();
    assert_eq!(store_lines(&first), 32);
    let csv = fs::read_to_string(first.join("draws.csv")).unwrap();
    assert!(csv.starts_with("draw,novelty,best_ratio,gap"));
    assert_eq!(csv.lines().count(), 3);

    let second = tmp.path().join("second");
    assert_eq!(replay(&first, &second), 0);
    same_files(&first, &second, &["draws.csv", "store.txt", "summary.json"]);

    // persistent mode resumes from the existing store, fresh mode starts over
    assert_eq!(run(with_out(&first, &["--draws", "1"])), 0);
    assert_eq!(store_lines(&first), 48);
    assert_eq!(run(with_out(&first, &["--draws", "1", "--store", "fresh"])), 0);
    assert_eq!(store_lines(&first), 16);
}
