use std::path::Path;
use std::process::Command;

fn lorfv(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_lorfv"))
        .args(args)
        .current_dir(cwd)
        .env("LORFV_THREADS", "2")
        .output()
        .expect("spawn");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

const TUBE: &str =
    "metric = minkowski\nflux = burgers\nnx = 16\nt_end = 0.5\ncfl = 0.5\nu0 = step\nu0.params = 1, 0, 0, 0.5\n";

#[test]
fn run_writes_csv_and_report_reads_it_back() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tube.cfg"), TUBE).unwrap();
    let (code, _) = lorfv(&["run", "tube.cfg"], dir.path());
    assert_eq!(code, 0);
    let out = dir.path().join("out");
    let sol = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let rows = summary.lines().count() - 1;
    // one summary row per hypersurface, Nx solution rows per hypersurface
    assert_eq!(sol.lines().count() - 1, 16 * rows);
    assert_eq!(sol.lines().next().unwrap(), "n,element,face,t_n,x,u");
    assert!(summary.lines().last().unwrap().ends_with(",,,,,,"));
    // mass column is conserved
    let masses: Vec<f64> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    assert!(masses.iter().all(|m| (m - 0.5).abs() < 1e-12));

    for pair in ["quadratic", "kruzkov"] {
        let (code, stdout) = lorfv(&["entropy-report", "out", "--entropy", pair], dir.path());
        assert_eq!(code, 0, "{stdout}");
    }
    let report = std::fs::read_to_string(out.join("entropy_report.csv")).unwrap();
    assert_eq!(report.lines().count() - 1, rows);
    let (code, _) = lorfv(&["entropy-report", "out", "--entropy", "cubic"], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("cfl.cfg"),
        "nx = 8\nnt = 1\nt_end = 0.5\nu0 = constant\nu0.params = 0.2\n",
    )
    .unwrap();
    assert_eq!(lorfv(&["run", "cfl.cfg"], p).0, 1);
    std::fs::write(p.join("bad.cfg"), "nx = 8\ncolour = red\n").unwrap();
    assert_eq!(lorfv(&["run", "bad.cfg"], p).0, 2);
    assert_eq!(lorfv(&["run", "missing.cfg"], p).0, 2);
    assert_eq!(lorfv(&["no-such-command"], p).0, 2);
    assert_eq!(lorfv(&["--help"], p).0, 0);
    // contracting background: u grows like e^t and leaves the declared range
    std::fs::write(
        p.join("grow.cfg"),
        "metric = flrw_exp\nmetric.k = -1\nnx = 16\nnt = 64\nt_end = 1\nu0 = constant\nu0.params = 0.9\n",
    )
    .unwrap();
    let (code, stdout) = lorfv(&["run", "grow.cfg"], p);
    assert_eq!(code, 1);
    assert!(stdout.contains("envelope"));
}

#[test]
fn mesh_round_trip_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let gen = |kind: &str, file: &str| {
        lorfv(
            &[
                "gen-mesh", kind, "--nx", "16", "--nt", "16", "--t-end", "0.5", "--shear", "0.3", "-o", file,
            ],
            p,
        )
        .0
    };
    assert_eq!(gen("uniform", "u.mesh"), 0);
    assert_eq!(gen("alternating", "a.mesh"), 0);
    assert_eq!(lorfv(&["check-mesh", "u.mesh", "--flux", "burgers"], p).0, 0);
    let (code, stdout) = lorfv(&["check-mesh", "a.mesh"], p);
    assert_eq!(code, 1);
    assert!(stdout.contains("admissible: no"));
    std::fs::write(p.join("junk.mesh"), "not a mesh\n").unwrap();
    assert_eq!(lorfv(&["check-mesh", "junk.mesh"], p).0, 2);

    // a run on the saved mesh matches a run on the generated one
    std::fs::write(
        p.join("file.cfg"),
        "mesh = u.mesh\nu0 = sine\nu0.params = 0.5, 0\nout = from_file\n",
    )
    .unwrap();
    std::fs::write(
        p.join("gen.cfg"),
        "nx = 16\nnt = 16\nt_end = 0.5\nu0 = sine\nu0.params = 0.5, 0\nout = generated\n",
    )
    .unwrap();
    assert_eq!(lorfv(&["run", "file.cfg"], p).0, 0);
    assert_eq!(lorfv(&["run", "gen.cfg"], p).0, 0);
    let last = |d: &str| -> Vec<f64> {
        let s = std::fs::read_to_string(p.join(d).join("solution.csv")).unwrap();
        s.lines()
            .skip(1)
            .filter(|l| l.starts_with("16,"))
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect()
    };
    let (a, b) = (last("from_file"), last("generated"));
    assert_eq!(a.len(), 16);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-12);
    }
    // run.cfg in the output names the mesh by absolute path
    let copied = std::fs::read_to_string(p.join("from_file").join("run.cfg")).unwrap();
    let mesh_line = copied.lines().find(|l| l.starts_with("mesh")).unwrap();
    assert!(Path::new(mesh_line.split('=').nth(1).unwrap().trim()).is_absolute());
}

#[test]
fn convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(
        p.join("conv.cfg"),
        "family = rarefaction\nnx_list = 16, 32, 64\nt_end = 0.25\ncfl = 0.5\n",
    )
    .unwrap();
    let (code, stdout) = lorfv(&["convergence", "conv.cfg"], p);
    assert_eq!(code, 0, "{stdout}");
    let csv = std::fs::read_to_string(p.join("out").join("convergence.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "nx,h,tau,h2_over_tau,l1_error,order");
    assert_eq!(csv.lines().count(), 4);
    std::fs::write(
        p.join("odd.cfg"),
        "family = shock\nnx_list = 16, 40\nt_end = 0.25\ncfl = 0.5\n",
    )
    .unwrap();
    assert_eq!(lorfv(&["convergence", "odd.cfg"], p).0, 2);
}
