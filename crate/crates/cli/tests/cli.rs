use std::path::Path;
use std::process::{Command, Output};

use pgm_core::ensemble::{from_json, max_pairwise_fidelity, overlap_pair, to_json, StateEnsemble};
use tempfile::TempDir;

fn pgm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// `name value` lines from `eval`.
fn eval_field(text: &str, name: &str) -> String {
    text.lines()
        .find_map(|l| {
            let mut it = l.split_whitespace();
            (it.next() == Some(name)).then(|| it.next().unwrap().to_string())
        })
        .unwrap_or_else(|| panic!("no field {name} in\n{text}"))
}

fn eval_number(text: &str, name: &str) -> f64 {
    eval_field(text, name).parse().unwrap()
}

#[test]
fn gen_haar_round_trips_bit_exactly() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let o = pgm(&[
            "gen",
            "--kind",
            "haar",
            "--d",
            "4",
            "--m",
            "4",
            "--seed",
            "7",
            "--out",
            path_str(p),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    let e = from_json(&text).unwrap();
    assert_eq!((e.dim(), e.count()), (4, 4));
    for s in e.states() {
        assert!((s.amplitudes().norm() - 1.0).abs() < 1e-12);
    }
    assert_eq!(to_json(&e) + "\n", text);
}

#[test]
fn gen_equal_overlap_fidelity() {
    let o = pgm(&["gen", "--kind", "equal-overlap", "--m", "4", "--c", "0.3"]);
    assert_eq!(code(&o), 0);
    let e = from_json(&stdout(&o)).unwrap();
    assert_eq!(e.count(), 4);
    assert!((max_pairwise_fidelity(&e) - 0.09).abs() < 1e-12);
}

#[test]
fn gen_negative_overlap_trine_and_padding() {
    let o = pgm(&[
        "gen",
        "--kind",
        "equal-overlap",
        "--m",
        "3",
        "--c",
        "-0.5",
        "--d",
        "5",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let e = from_json(&stdout(&o)).unwrap();
    assert_eq!(e.dim(), 5);
    assert!((max_pairwise_fidelity(&e) - 0.25).abs() < 1e-12);
}

#[test]
fn gen_input_errors() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    std::fs::write(&g, "[[1, 2], [2, 1]]").unwrap();
    let o = pgm(&["gen", "--kind", "from-gram", "--gram", path_str(&g)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("eigenvalue -1"), "{}", stderr(&o));

    assert_eq!(code(&pgm(&["gen", "--kind", "haar", "--m", "3"])), 2);
    assert_eq!(
        code(&pgm(&[
            "gen",
            "--kind",
            "equal-overlap",
            "--m",
            "4",
            "--c",
            "1.5"
        ])),
        2
    );
    assert_eq!(code(&pgm(&["gen", "--kind", "spiral", "--m", "3"])), 2);
    assert_eq!(
        code(&pgm(&["gen", "--kind", "haar", "--d", "3", "--m", "1"])),
        2
    );

    let missing = dir.path().join("missing.json");
    assert_eq!(
        code(&pgm(&[
            "gen",
            "--kind",
            "from-gram",
            "--gram",
            path_str(&missing)
        ])),
        3
    );
}

#[test]
fn gen_from_gram_reproduces_gram() {
    let dir = TempDir::new().unwrap();
    let g = dir.path().join("g.json");
    std::fs::write(&g, "[[1, [0, 0.6]], [[0, -0.6], 1]]").unwrap();
    let o = pgm(&["gen", "--kind", "from-gram", "--gram", path_str(&g)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let e = from_json(&stdout(&o)).unwrap();
    let z = e.states()[0].inner(&e.states()[1]);
    assert!((z.re).abs() < 1e-12 && (z.im - 0.6).abs() < 1e-12, "{z}");
}

fn write_ensemble(dir: &TempDir, name: &str, e: &StateEnsemble) -> std::path::PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, to_json(e)).unwrap();
    p
}

#[test]
fn eval_orthonormal_is_all_ones() {
    let dir = TempDir::new().unwrap();
    let p = write_ensemble(&dir, "o.json", &StateEnsemble::orthonormal(4, 4).unwrap());
    let o = pgm(&["eval", "--in", path_str(&p)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(eval_number(&text, "F"), 0.0);
    for name in ["pgm", "sm", "linear", "refined", "eq3"] {
        assert!((eval_number(&text, name) - 1.0).abs() < 1e-12, "{name}");
    }
}

#[test]
fn eval_pair_and_csv_mirror() {
    let dir = TempDir::new().unwrap();
    let p = write_ensemble(&dir, "p.json", &overlap_pair(0.6).unwrap());
    let csv = dir.path().join("p.csv");
    let o = pgm(&["eval", "--in", path_str(&p), "--out", path_str(&csv)]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!((eval_number(&text, "pgm") - 0.9).abs() < 1e-12);
    assert!((eval_number(&text, "sm") - 0.5248).abs() < 1e-12);

    let csv = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    for (name, value) in lines[0].split(',').zip(lines[1].split(',')) {
        assert_eq!(eval_field(&text, name), value, "{name}");
    }
}

/// Flags recomputed from the printed values.
#[test]
fn eval_flags_agree_with_values() {
    let dir = TempDir::new().unwrap();
    for seed in 0..6 {
        let e = pgm_core::ensemble::haar_random(3 + seed as usize, 4, seed).unwrap();
        let p = write_ensemble(&dir, &format!("h{seed}.json"), &e);
        let text = stdout(&pgm(&["eval", "--in", path_str(&p), "--tol", "0"]));
        let v = |n| eval_number(&text, n);
        let b = |x: bool| if x { "true" } else { "false" };
        assert_eq!(
            eval_field(&text, "refined_ge_linear"),
            b(v("refined") >= v("linear"))
        );
        assert_eq!(
            eval_field(&text, "pgm_ge_refined"),
            b(v("pgm") >= v("refined"))
        );
        assert_eq!(
            eval_field(&text, "pgm_ge_linear"),
            b(v("pgm") >= v("linear"))
        );
        assert_eq!(eval_field(&text, "sm_ge_eq3"), b(v("sm") >= v("eq3")));
    }
}

#[test]
fn eval_input_errors() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"d": 2, "m": 2, "states": [[[1, 0], [0, 0]]]}"#).unwrap();
    assert_eq!(code(&pgm(&["eval", "--in", path_str(&bad)])), 2);
    std::fs::write(
        &bad,
        r#"{"d": 2, "m": 2, "states": [[[1, 0], [0, 0]], [[2, 0], [0, 0]]]}"#,
    )
    .unwrap();
    assert_eq!(code(&pgm(&["eval", "--in", path_str(&bad)])), 2);
    std::fs::write(&bad, "not json").unwrap();
    assert_eq!(code(&pgm(&["eval", "--in", path_str(&bad)])), 2);
    assert_eq!(
        code(&pgm(&[
            "eval",
            "--in",
            path_str(&dir.path().join("nope.json"))
        ])),
        3
    );
}

fn parse_sweep(csv: &str) -> Vec<(usize, f64, f64, f64, String)> {
    csv.lines()
        .skip(1)
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            (
                c[0].parse().unwrap(),
                c[1].parse().unwrap(),
                c[2].parse().unwrap(),
                c[3].parse().unwrap(),
                c[4].into(),
            )
        })
        .collect()
}

#[test]
fn sweep_rows_and_order() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.csv");
    let args = [
        "sweep",
        "--m",
        "2,4,8",
        "--f-max",
        "0.5",
        "--steps",
        "100",
        "--out",
        path_str(&out),
    ];
    assert_eq!(code(&pgm(&args)), 0);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next(), Some("m,F,linear,refined,dominance"));
    let rows = parse_sweep(&csv);
    assert_eq!(rows.len(), 300);
    assert!(rows.windows(2).all(|w| (w[0].0, w[0].1) < (w[1].0, w[1].1)));
    for r in &rows {
        if r.0 >= 4 {
            assert!(r.3 > r.2);
            assert_eq!(r.4, "true");
        } else {
            assert_eq!(r.4, "na");
        }
    }

    assert_eq!(code(&pgm(&args)), 0);
    assert_eq!(std::fs::read_to_string(&out).unwrap(), csv);
}

/// Near zero the linear bound falls off like `mF`, the refined one like
/// `(9m - 8)F²`.
#[test]
fn sweep_small_f_falloff() {
    let rows = parse_sweep(&stdout(&pgm(&[
        "sweep", "--m", "8", "--f-max", "0.01", "--steps", "1000",
    ])));
    for r in &rows[..2] {
        let (m, f) = (r.0 as f64, r.1);
        assert!(((1.0 - r.2) / f - m).abs() < 1e-9);
        let quad = (1.0 - r.3) / (f * f);
        assert!((quad - (9.0 * m - 8.0)).abs() < 1e-2 * quad, "{quad}");
    }
}

#[test]
fn sweep_errors() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("no/such/dir/s.csv");
    assert_eq!(code(&pgm(&["sweep", "--out", path_str(&out)])), 3);
    assert_eq!(code(&pgm(&["sweep", "--steps", "1"])), 2);
    assert_eq!(code(&pgm(&["sweep", "--f-max", "2"])), 2);
    assert_eq!(code(&pgm(&["sweep", "--m", "1,4"])), 2);
}

#[test]
fn verify_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = pgm(&[
            "verify",
            "--trials",
            "60",
            "--seed",
            "11",
            "--out",
            path_str(&out),
        ]);
        (code(&o), stdout(&o), std::fs::read_to_string(out).ok())
    };
    let (ca, sa, fa) = run("a.json");
    let (cb, sb, fb) = run("b.json");
    assert_eq!((ca, &sa, &fa), (cb, &sb, &fb));
    assert!(sa.contains("pgm_ge_linear"));
}

#[test]
fn verify_injected_fault_fails_with_counterexample() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ce.json");
    let o = pgm(&[
        "verify",
        "--trials",
        "20",
        "--d",
        "3..5",
        "--m",
        "2..3",
        "--tol",
        "1e-16",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains(path_str(&out)));
    let e = from_json(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert!((3..=5).contains(&e.dim()));
}

#[test]
fn verify_input_errors() {
    assert_eq!(code(&pgm(&["verify", "--trials", "0"])), 2);
    assert_eq!(code(&pgm(&["verify", "--d", "5..3"])), 2);
    assert_eq!(code(&pgm(&["verify", "--m", "x..3"])), 2);
    assert_eq!(
        code(&pgm(&[
            "verify",
            "--d",
            "2..4",
            "--m",
            "3..5",
            "--independent-only"
        ])),
        2
    );
}

#[test]
fn appendix_default_certifies() {
    let o = pgm(&["appendix"]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("certified: yes"));
    assert_eq!(code(&pgm(&["appendix", "--grid-step", "0.5"])), 2);
    assert_eq!(code(&pgm(&["appendix", "--m-max", "3"])), 2);
}
