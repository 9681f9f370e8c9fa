use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn npef(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_npef")).args(args).output().expect("spawn npef")
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

fn fails_with(out: &Output, code: i32, class: &str) {
    assert_eq!(out.status.code(), Some(code), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let err = String::from_utf8_lossy(&out.stderr);
    let errors: Vec<&str> = err.lines().filter(|l| l.starts_with("error")).collect();
    assert_eq!(errors.len(), 1, "{err}");
    assert!(errors[0].starts_with(&format!("error[{class}]: ")), "{err}");
    assert_eq!(err.lines().last(), Some(errors[0]));
}

fn read(path: &str) -> String {
    std::fs::read_to_string(path).unwrap()
}

fn write_sample(path: &Path) {
    let xs: Vec<String> = (0..60).map(|k| format!("{}", ((k * 37 % 60) as f64 / 10.0 - 3.0) * 0.9)).collect();
    std::fs::write(path, format!("x\n{}\n", xs.join("\n"))).unwrap();
}

#[test]
fn density_fit_eval_and_plot() {
    let d = TempDir::new().unwrap();
    write_sample(&d.path().join("s.csv"));
    let (s, m, k, e, c) = (p(&d, "s.csv"), p(&d, "m.json"), p(&d, "k.json"), p(&d, "e.csv"), p(&d, "c.csv"));
    ok(&npef(&["--quiet", "fit-density", "--input", &s, "--h", "1.0", "--out", &m]));
    assert!(read(&m).contains("\"model\": \"np-exp\""));
    let out = npef(&["eval-density", "--model", &m, "--input", &s, "--out", &e]);
    ok(&out);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("total_log_density="));
    let rows: Vec<String> = read(&e).lines().map(String::from).collect();
    assert_eq!(rows[0], "x0,log_density");
    assert_eq!(rows.len(), 61);
    ok(&npef(&["--quiet", "kde", "--input", &s, "--h", "0.5", "--out", &k]));
    ok(&npef(&["--quiet", "emit-plots", "--kind", "density", "--input", &m, &k, "--points", "11", "--out", &c]));
    let csv = read(&c);
    assert!(csv.starts_with("x,method,density\n"));
    assert_eq!(csv.lines().count(), 1 + 2 * 11);
    let par = p(&d, "par.json");
    ok(&npef(&["--quiet", "fit-density", "--input", &s, "--parametric", "--out", &par]));
    assert!(read(&par).contains("\"model\": \"exp-family\""));
}

#[test]
fn input_errors_exit_2_with_one_line() {
    let d = TempDir::new().unwrap();
    fails_with(&npef(&["fit-density", "--input", &p(&d, "missing.csv"), "--out", &p(&d, "m.json")]), 2, "input");
    fails_with(&npef(&["fit-density", "--bogus"]), 2, "input");
    fails_with(&npef(&["enumerate", "--n", "9", "--out", &p(&d, "h.csv")]), 2, "input");
    std::fs::write(d.path().join("a.csv"), "1,2\n3\n").unwrap();
    fails_with(&npef(&["kde", "--input", &p(&d, "a.csv"), "--out", &p(&d, "k.json")]), 2, "input");
    std::fs::write(d.path().join("g.edges"), "0 1\n1 2\n").unwrap();
    fails_with(
        &npef(&["emit-plots", "--kind", "histogram", "--input", &p(&d, "g.edges"), "--out", &p(&d, "x.csv")]),
        2,
        "input",
    );
    std::fs::write(d.path().join("empty.edges"), "# nodes 5\n").unwrap();
    fails_with(&npef(&["fit-ergm", "--graph", &p(&d, "empty.edges"), "--out", &p(&d, "e.json")]), 2, "input");
    fails_with(
        &npef(&["fit-ergm", "--graph", &p(&d, "g.edges"), "--nodes", "2", "--out", &p(&d, "e.json")]),
        2,
        "input",
    );
}

#[test]
fn diverging_mcmc_exits_3() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("g.edges"), "# nodes 6\n0 1\n0 2\n1 2\n2 3\n3 4\n").unwrap();
    let out = npef(&[
        "fit-ergm",
        "--graph",
        &p(&d, "g.edges"),
        "--mode",
        "mcmc",
        "--step-size",
        "1e6",
        "--samples",
        "200",
        "--thinning",
        "5",
        "--burn-in",
        "100",
        "--steps",
        "50",
        "--out",
        &p(&d, "e.json"),
    ]);
    fails_with(&out, 3, "numerical");
}

#[test]
fn enumerate_writes_histogram() {
    let d = TempDir::new().unwrap();
    let h = p(&d, "h4.csv");
    ok(&npef(&["--quiet", "enumerate", "--n", "4", "--out", &h]));
    let text = read(&h);
    assert!(text.starts_with("edges,triangles,count\n"));
    let total: u64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 64);
    assert!(text.contains("\n3,1,4\n"));
}

#[test]
fn graph_pipeline() {
    let d = TempDir::new().unwrap();
    let dir = p(&d, "g8");
    ok(&npef(&["--quiet", "experiment-g8", "--out-dir", &dir]));
    for f in ["ergm_mass.csv", "nergm_mass.csv"] {
        let text = read(&format!("{dir}/{f}"));
        assert!(text.starts_with("edges,triangles,mass\n"));
        let s: f64 = text.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap()).sum();
        assert!((s - 1.0).abs() < 1e-12, "{f}: {s}");
    }
    let report: serde_json::Value = serde_json::from_str(&read(&format!("{dir}/report.json"))).unwrap();
    assert!(report["nergm_mode_distance"].as_u64().unwrap() <= 3);
    assert!(report["ergm_mode_distance"].as_u64().unwrap() > 3);

    let g = format!("{dir}/g8.edges");
    let (hist, model) = (p(&d, "h8.csv"), p(&d, "nergm.json"));
    ok(&npef(&["--quiet", "enumerate", "--n", "8", "--out", &hist]));
    ok(&npef(&["--quiet", "fit-nergm", "--graph", &g, "--histogram", &hist, "--out", &model]));
    let saved: serde_json::Value = serde_json::from_str(&read(&model)).unwrap();
    assert_eq!(saved["model"], "ergm");
    assert_eq!(
        saved,
        report["nergm"]
            .as_object()
            .map(|o| {
                let mut o = o.clone();
                o.insert("model".into(), "ergm".into());
                serde_json::Value::Object(o)
            })
            .unwrap()
    );

    let samples = p(&d, "samples");
    ok(&npef(&[
        "--quiet",
        "--seed",
        "3",
        "sample-graphs",
        "--model",
        &model,
        "--count",
        "40",
        "--out-dir",
        &samples,
        "--observed",
        &g,
    ]));
    let diag: serde_json::Value = serde_json::from_str(&read(&format!("{samples}/diagnostics.json"))).unwrap();
    assert!(diag["unique_graphs"].as_u64() >= diag["unique_feature_tuples"].as_u64());
    let n_files = std::fs::read_dir(&samples)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "edges"))
        .count();
    assert_eq!(n_files, 40);

    let (gj, gc, plot) = (p(&d, "gof.json"), p(&d, "gof.csv"), p(&d, "gof_plot.csv"));
    ok(&npef(&["--quiet", "gof", "--observed", &g, "--samples-dir", &samples, "--out", &gj]));
    ok(&npef(&["--quiet", "gof", "--observed", &g, "--samples-dir", &samples, "--out", &gc]));
    assert!(read(&gc).starts_with("stat,bin,observed,p5,p50,p95,covered\n"));
    ok(&npef(&["--quiet", "emit-plots", "--kind", "gof", "--input", &gj, "--out", &plot]));
    assert!(read(&plot).starts_with("stat,bin,observed,p5,p50,p95\n"));
    let single = p(&d, "single.csv");
    ok(&npef(&["--quiet", "gof", "--observed", &g, "--out", &single]));
    assert!(read(&single).starts_with("stat,bin,value\n"));
}

#[test]
fn mcmc_fit_writes_model() {
    let d = TempDir::new().unwrap();
    std::fs::write(d.path().join("g.edges"), "# nodes 6\n0 1\n0 2\n0 3\n1 2\n1 3\n2 3\n3 4\n4 5\n5 0\n").unwrap();
    let m = p(&d, "m.json");
    ok(&npef(&[
        "--quiet",
        "fit-ergm",
        "--graph",
        &p(&d, "g.edges"),
        "--mode",
        "mcmc",
        "--step-size",
        "2",
        "--samples",
        "500",
        "--thinning",
        "10",
        "--steps",
        "100",
        "--out",
        &m,
    ]));
    let v: serde_json::Value = serde_json::from_str(&read(&m)).unwrap();
    assert_eq!(v["n"], 6);
    assert!(v["augmented"].is_null());
}

fn experiment(d: &TempDir, tag: &str, threads: &str, generator: &str) -> (String, String) {
    let (cells, summary) = (p(d, &format!("{tag}_cells.csv")), p(d, &format!("{tag}_summary.csv")));
    ok(&npef(&[
        "--quiet",
        "--threads",
        threads,
        "--seed",
        "5",
        "experiment-density",
        "--generator",
        generator,
        "--n",
        "10,30",
        "--seeds",
        "3",
        "--eval-n",
        "2000",
        "--h",
        "1.0",
        "--methods",
        "NPG,NPG-lgN,CNPG,KDE,parametric-MLE",
        "--points-per-dim",
        "801",
        "--out",
        &cells,
        "--summary",
        &summary,
    ]));
    (cells, summary)
}

#[test]
fn density_experiment_is_reproducible_and_plottable() {
    let d = TempDir::new().unwrap();
    let (c1, s1) = experiment(&d, "a", "1", "student-t(6)");
    let (c2, s2) = experiment(&d, "b", "2", "student-t(6)");
    assert_eq!(read(&c1), read(&c2));
    assert_eq!(read(&s1), read(&s2));
    let cells = read(&c1);
    assert!(cells.starts_with("generator,n,seed,method,heldout_ll,nonzero,h,error\n"));
    assert_eq!(cells.lines().count(), 1 + 2 * 3 * 5);
    let plot = p(&d, "ll.csv");
    ok(&npef(&["--quiet", "emit-plots", "--kind", "ll-vs-n", "--input", &s1, "--out", &plot]));
    let text = read(&plot);
    assert!(text.starts_with("generator,n,method,median_ll,mad\n"));
    assert_eq!(text.lines().count(), 1 + 2 * 5);
    assert!(text.contains("student-t(6)"));
}

#[test]
fn help_exits_zero() {
    let out = npef(&["--help"]);
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in [
        "fit-density",
        "eval-density",
        "kde",
        "fit-ergm",
        "fit-nergm",
        "sample-graphs",
        "gof",
        "enumerate",
        "experiment-density",
        "experiment-g8",
        "emit-plots",
    ] {
        assert!(text.contains(cmd), "{cmd}");
    }
}
