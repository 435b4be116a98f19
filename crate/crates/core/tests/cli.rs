use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_diskdelay"))
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap().iter().map(str::to_string).collect()).collect()
}

fn eigen_rows(args: &[&str]) -> Vec<(usize, usize, f64, f64)> {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eigen.csv");
    let status = bin()
        .arg("eigen-table")
        .args(args)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let header = fs::read_to_string(&out).unwrap();
    assert!(header.starts_with("n,j,k,norm\n"));
    read_rows(&out)
        .into_iter()
        .map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap(), r[3].parse().unwrap()))
        .collect()
}

#[test]
fn eigen_table_rows() {
    let rows = eigen_rows(&["--n-max", "0", "--j-max", "2", "--radius", "1", "--bc", "dirichlet"]);
    assert_eq!(rows.len(), 2);
    assert!((rows[0].2 - 2.404826).abs() < 1e-6);
    assert!((rows[1].2 - 5.520078).abs() < 1e-6);

    let rows = eigen_rows(&["--n-max", "1", "--j-max", "1", "--bc", "dirichlet"]);
    let order1 = rows.iter().find(|r| r.0 == 1).unwrap();
    assert!((order1.2 - 3.8317).abs() < 1e-4);

    let rows = eigen_rows(&["--n-max", "0", "--j-max", "1", "--bc", "zero_flux"]);
    assert_eq!(rows[0].2, 0.0);
    assert!((rows[0].3 - 0.5).abs() < 1e-15);
}

#[test]
fn eigen_table_rejects_unwritable_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("eigen.csv");
    let output = bin().arg("eigen-table").arg("--out").arg(&out).output().unwrap();
    assert!(!output.status.success());
    assert!(String::from_utf8_lossy(&output.stderr).contains("eigen.csv"));
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    let out = dir.join("out");
    fs::write(&path, format!("output_dir = {:?}\n{body}", out.to_str().unwrap())).unwrap();
    path
}

#[test]
fn zero_end_time_writes_projected_initial_condition() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "variant = \"mode_forced\"\nbc = \"zero_flux\"\nt_end = 0.0\nn_max = 6\nj_max = 10\nn_r = 40\nn_theta = 16\n",
    );
    let status = bin().arg("run").arg(&cfg).status().unwrap();
    assert!(status.success());
    let out = dir.path().join("out");
    let snaps: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with("snapshot_"))
        .collect();
    assert_eq!(snaps, vec!["snapshot_0.0000.csv".to_string()]);
    let rows = read_rows(&out.join(&snaps[0]));
    assert_eq!(rows.len(), 40 * 16);
    // a 6x10 truncation of 0.2 + 0.02 sin(3x) cos(2y) stays close to the profile
    for r in rows {
        let (rad, th, v): (f64, f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap());
        let exact = 0.2 + 0.02 * (3.0 * rad * th.cos()).sin() * (2.0 * rad * th.sin()).cos();
        assert!((v - exact).abs() < 5e-3);
    }
    let diag = read_rows(&out.join("diagnostics.csv"));
    assert_eq!(diag.len(), 1);
    assert!(fs::read_to_string(out.join("diagnostics.csv"))
        .unwrap()
        .starts_with("t,max,min,total_population,dwdt_norm\n"));
    let coeffs = fs::read_to_string(out.join("coefficients.csv")).unwrap();
    assert!(coeffs.starts_with("n,j,a,b\n"));
    let summary = fs::read_to_string(out.join("summary")).unwrap();
    assert!(summary.contains("steps = 0"));
    let effective = fs::read_to_string(out.join("effective_config")).unwrap();
    for key in ["variant", "diffusion", "death", "eps", "alpha", "tau", "k2", "dt", "n_r", "initial_mean"] {
        assert!(effective.contains(&format!("\n{key} = ")) || effective.starts_with(&format!("{key} = ")), "{key}");
    }
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    for (body, key) in [
        ("variant = \"mode_forced\"\nalpha = -1.0\n", "alpha"),
        ("variant = \"mode_forced\"\nunknown_thing = 3\n", "unknown_thing"),
        ("variant = \"mode_forced\"\nbc = \"mixed\"\nbc_a = 1.0\n", "bc_b"),
    ] {
        let cfg = write_config(dir.path(), body);
        let output = bin().arg("run").arg(&cfg).output().unwrap();
        assert!(!output.status.success(), "{body}");
        let stderr = String::from_utf8_lossy(&output.stderr);
        assert!(stderr.contains(&format!("`{key}`")), "{body}: {stderr}");
    }
    let output = bin().arg("run").output().unwrap();
    assert!(!output.status.success());
}

#[test]
fn repeated_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let body = "variant = \"mode_forced_with_birth\"\nbc = \"zero_flux\"\nt_end = 2.0\ndt = 0.05\n\
                snapshot_every = 10\nn_max = 6\nj_max = 10\nn_r = 40\nn_theta = 16\n";
    let cfg = write_config(dir.path(), body);
    let outputs: Vec<Vec<(String, Vec<u8>)>> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("out{i}"));
            assert!(bin().arg("run").arg(&cfg).arg("--out").arg(&out).status().unwrap().success());
            let mut files: Vec<_> = fs::read_dir(&out)
                .unwrap()
                .map(|e| e.unwrap())
                .filter(|e| e.file_name().to_string_lossy().ends_with(".csv"))
                .map(|e| (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap()))
                .collect();
            files.sort();
            files
        })
        .collect();
    assert_eq!(outputs[0].len(), 7);
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn preset_flag_records_choice() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t_end = 0.5\nn_max = 4\nj_max = 8\nn_r = 32\nn_theta = 12\n");
    let status = bin()
        .args(["run", "--preset", "fig3_establishment"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.success());
    let effective = fs::read_to_string(dir.path().join("out").join("effective_config")).unwrap();
    assert!(effective.contains("preset = \"fig3_establishment\""));
    assert!(effective.contains("exponent_as_printed = false"));
    assert!(effective.contains("birth = \"ricker_quadratic\""));
    let summary = fs::read_to_string(dir.path().join("out").join("summary")).unwrap();
    assert!(summary.contains("equilibria = ["));
}
