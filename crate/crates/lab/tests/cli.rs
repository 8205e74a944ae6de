use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::process::Command;

const SMALL: &str = r#"
experiment = "robustness"
name = "small"

[problem]
kind = "darcy"
nx = 24
ny = 24
boundary = "top_bottom"

[coefficients]
layout = "layers"
layers = 6
contrasts = [1.0, 1e4]

[decomposition]
grids = [[3, 3]]

[geneo]
selection = "fixed"
evs = [2, 4]
"#;

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn lab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_geneo-lab"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

#[test]
fn robustness_table_has_one_column_per_ev_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = lab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(out.join("small.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "Contrast, 2 EV, 4 EV");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("1e0, "));
    assert!(lines[2].starts_with("1e4, "));

    let mut runs = csv::Reader::from_path(out.join("small_runs.csv")).unwrap();
    let header = runs.headers().unwrap().clone();
    let first: Vec<&str> = header.iter().take(10).collect();
    assert_eq!(
        first,
        [
            "problem",
            "contrast",
            "subdomains",
            "evs_per_subdomain",
            "dim_VH",
            "iterations",
            "kappa_est",
            "kappa_bound",
            "setup_s",
            "solve_s"
        ]
    );
    assert_eq!(runs.records().count(), 4);
}

#[test]
fn unconverged_points_are_annotated_and_fail_the_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{SMALL}\n[solver]\nmax_iter = 2\n");
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = lab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let table = fs::read_to_string(out.join("small.csv")).unwrap();
    // Every point still has a row.
    assert_eq!(table.lines().count(), 3);
    assert!(table.contains("failed"));
}

#[test]
fn missing_layout_file_stops_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "layout = \"layers\"\nlayers = 6",
        "layout = \"skyscrapers\"\nlayout_file = \"nowhere.csv\"",
    );
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = lab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.csv"));
    assert!(!out.exists());
}

#[test]
fn check_subcommand_validates_shipped_configs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../experiments");
    let mut n = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let o = lab(&["check", path.to_str().unwrap()]);
            assert!(
                o.status.success(),
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&o.stderr)
            );
            n += 1;
        }
    }
    assert!(n >= 5);
}

#[test]
fn coarse_dimension_matches_basis_export() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "selection = \"fixed\"\nevs = [2, 4]",
        "selection = \"threshold\"",
    ) + "\n[output]\nbasis = true\n";
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = lab(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let mut runs = csv::Reader::from_path(out.join("small_runs.csv")).unwrap();
    let headers = runs.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let (dim_col, contrast_col, bound_col) = (col("dim_VH"), col("contrast"), col("bound_ok"));
    let mut checked = 0;
    for rec in runs.records() {
        let rec = rec.unwrap();
        assert_eq!(&rec[bound_col], "true");
        let contrast: f64 = rec[contrast_col].parse().unwrap();
        let file = out
            .join("basis")
            .join(format!("basis_3x3_tau=1_{contrast:e}.csv"));
        let mut vectors = BTreeSet::new();
        let mut reader = csv::Reader::from_path(&file).unwrap();
        for row in reader.records() {
            let row = row.unwrap();
            vectors.insert((row[0].to_string(), row[1].to_string()));
        }
        assert_eq!(rec[dim_col].parse::<usize>().unwrap(), vectors.len());
        checked += 1;
    }
    assert_eq!(checked, 2);
}

#[test]
fn seed_controls_random_right_hand_sides() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "boundary = \"top_bottom\"",
        "boundary = \"top_bottom\"\nrhs = \"random\"",
    );
    let cfg = write_config(dir.path(), &text);
    let mut tables = Vec::new();
    for (name, seed) in [("a", "1"), ("b", "1"), ("c", "2")] {
        let out = dir.path().join(name);
        let o = lab(&[
            "run",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert!(o.status.success());
        tables.push(fs::read(out.join("small_runs.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
    assert_ne!(tables[0], tables[2]);
}

#[test]
fn coarse_error_writes_fields_for_every_dof() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("rects.csv"),
        "# x0,y0,x1,y1\n0.2,0.2,0.4,0.8\n0.6,0.1,0.8,0.5\n",
    )
    .unwrap();
    let text = r#"
experiment = "coarse_error"
name = "ce"

[problem]
kind = "darcy"
nx = 20
ny = 20
boundary = "top_bottom"

[coefficients]
layout = "skyscrapers"
layout_file = "rects.csv"
contrasts = [1e4]

[decomposition]
grids = [[2, 2]]

[geneo]
selection = "fixed"
evs = [3, 1, 2]

[solver]
mode = "coarse_only"

[coarse_error]
lifting = "harmonic"
vtk = true
"#;
    let cfg = write_config(dir.path(), text);
    let o = lab(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // Output defaults to `out` next to the config.
    let out = dir.path().join("out");
    let mut reader = csv::Reader::from_path(out.join("ce.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    let ms: Vec<&str> = rows.iter().map(|r| &r[2]).collect();
    assert_eq!(ms, ["1", "2", "3"]);

    let field = fs::read_to_string(out.join("fields/error_2x2_1e4_m2.csv")).unwrap();
    assert_eq!(field.lines().next(), Some("x,y,value"));
    assert_eq!(field.lines().count(), 1 + 21 * 21);
    let vtk = fs::read_to_string(out.join("fields/error_2x2_1e4_m2.vtk")).unwrap();
    assert!(vtk.contains("DIMENSIONS 21 21 1"));
    assert!(vtk.contains("POINT_DATA 441"));
}
