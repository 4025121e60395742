use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use radialis_cli::{run_compare, run_solve, ExperimentConfig};
use serde_json::Value;

fn radialis(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radialis"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    std::fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

const HYDROGEN: &str = r#"
l = [0]
states = 2
energy_window = [-1.0, -1e-3]
[potential]
kind = "coulomb"
z = 1.0
"#;

/// `V₀` giving index `P` at `l = 0` and `m = 1`.
fn v0_for(p: f64) -> f64 {
    0.5 * (0.25 - p * p)
}

#[test]
fn classify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let c = json(&radialis(
        &[
            "classify",
            "--set",
            "potential.kind=coulomb",
            "--set",
            "potential.z=2",
        ],
        dir.path(),
    ));
    assert_eq!(c["class"], "regular");
    let c = json(&radialis(
        &[
            "classify",
            "--set",
            "potential.kind=inverse_square",
            "--set",
            "potential.v0=0.11",
        ],
        dir.path(),
    ));
    assert_eq!(c["class"], "transitive_singular");
    assert!((c["gamma"].as_f64().unwrap() - 0.22).abs() < 1e-15);
    let c = json(&radialis(
        &[
            "classify",
            "--set",
            "potential.kind=power_law",
            "--set",
            "potential.coefficient=-1",
            "--set",
            "potential.exponent=3",
        ],
        dir.path(),
    ));
    assert_eq!(c["class"], "strongly_singular");
    assert_eq!(c["solvable"], false);
}

#[test]
fn indicial_from_flags() {
    let dir = tempfile::tempdir().unwrap();
    let r = json(&radialis(
        &[
            "indicial",
            "--l",
            "1",
            "--gamma",
            "0",
            "--policy",
            "dirichlet",
        ],
        dir.path(),
    ));
    let res = &r["results"][0];
    assert_eq!(res["exponents"][0][0].as_f64(), Some(2.0));
    assert_eq!(res["exponents"][1][0].as_f64(), Some(-1.0));
    assert_eq!(res["regime"], "unique_admissible");
    let admissible = &res["policies"][0]["admissible"];
    assert_eq!(admissible["exponents"].as_array().unwrap().len(), 1);
    assert_eq!(admissible["needs_extension_parameter"], false);
}

#[test]
fn exit_codes_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.toml", HYDROGEN);
    assert_eq!(
        radialis(&["solve", "--config", &h], dir.path())
            .status
            .code(),
        Some(0)
    );
    // config error
    let out = radialis(&["solve", "--config", &h, "--grid-points", "3"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("grid.n_points"));
    let out = radialis(&["solve", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    // numerical failure: the bisection is not allowed to converge
    let out = radialis(
        &[
            "solve",
            "--config",
            &h,
            "--set",
            "tolerances.max_iterations=1",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    // regime refusal: fall to center without a cutoff
    let out = radialis(
        &[
            "solve",
            "--set",
            "potential.kind=inverse_square",
            "--set",
            "potential.v0=0.5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fall to center"));
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.toml", HYDROGEN);
    let a = radialis(&["solve", "--config", &h], dir.path());
    let b = radialis(&["solve", "--config", &h], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let energy = serde_json::from_str::<Value>(&text).unwrap()["results"][0]["states"][0]["energy"]
        .as_f64()
        .unwrap();
    assert!((energy + 0.5).abs() < 1e-9);
    assert!(text.contains(&format!("\"energy\": {energy:.16e}")));
}

#[test]
fn reports_embed_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.toml", HYDROGEN);
    let r = json(&radialis(
        &["solve", "--config", &h, "--tol-energy", "1e-9"],
        dir.path(),
    ));
    let prov = &r["provenance"];
    assert_eq!(
        prov["config"]["tolerances"]["energy_rel"].as_f64(),
        Some(1e-9)
    );
    assert_eq!(prov["config"]["mass"].as_f64(), Some(1.0));
    assert_eq!(prov["config_hash"].as_str().unwrap().len(), 64);
    let grid = &r["results"][0]["grid"];
    assert_eq!(grid["spacing"], "linear");
    assert_eq!(grid["n_points"], 40000);
    assert!(grid["r_min"].as_f64().is_some());
}

#[test]
fn energies_reproduce_from_the_provenance_block() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.toml", HYDROGEN);
    let r = json(&radialis(&["solve", "--config", &h], dir.path()));
    let embedded: ExperimentConfig =
        serde_json::from_value(r["provenance"]["config"].clone()).unwrap();
    let again = run_solve(&embedded).unwrap().report;
    let energies = |v: &Value| -> Vec<u64> {
        v["results"][0]["states"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s["energy"].as_f64().unwrap().to_bits())
            .collect()
    };
    assert_eq!(energies(&r), energies(&again));
}

#[test]
fn csv_format_and_out_path() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.toml", HYDROGEN);
    let out = radialis(
        &[
            "solve",
            "--config",
            &h,
            "--format",
            "csv",
            "--out",
            "solve.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("solve.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "policy_index,l,index,E [energy],node_count");
    assert_eq!(lines.len(), 3);
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(&cells[..3], ["0", "0", "0"]);
    assert!((cells[3].parse::<f64>().unwrap() + 0.5).abs() < 1e-9);
    assert_eq!(cells[4], "0");
}

#[test]
fn plot_files_for_states() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.toml", HYDROGEN);
    let out = radialis(
        &[
            "solve",
            "--config",
            &h,
            "--set",
            "output.plot_dir=\"plots\"",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let state =
        std::fs::read_to_string(dir.path().join("plots/state_p0_dirichlet_l0_n0.csv")).unwrap();
    let mut lines = state.lines();
    assert_eq!(lines.next(), Some("r [length],u [length^-1/2]"));
    let first: Vec<f64> = lines
        .next()
        .unwrap()
        .split(',')
        .map(|x| x.parse().unwrap())
        .collect();
    assert_eq!(first.len(), 2);
    assert_eq!(first[0], 1e-6);
    let spectrum =
        std::fs::read_to_string(dir.path().join("plots/spectrum_p0_dirichlet_l0.csv")).unwrap();
    assert_eq!(spectrum.lines().count(), 3);
}

#[test]
fn empty_spectrum_gives_header_only_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "rep.toml",
        &format!(
            "[potential]\nkind = \"inverse_square\"\nv0 = {}\n[grid]\nn_points = 8000\n[output]\nplot_dir = \"plots\"\n",
            v0_for(0.75)
        ),
    );
    let out = radialis(&["solve", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let spectrum =
        std::fs::read_to_string(dir.path().join("plots/spectrum_p0_dirichlet_l0.csv")).unwrap();
    assert_eq!(spectrum, "index,E [energy]\n");
}

#[test]
fn chi_sweep_leaves_blank_cells() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        &format!(
            "states = 2\n[potential]\nkind = \"inverse_square\"\nv0 = {}\n[[policies]]\nname = \"sae_mixing\"\nchi = 0.0\nr_s = 1.0\n[grid]\nn_points = 20000\n[sweep]\nparameter = \"chi\"\nvalues = [{}, {}]\n[output]\nplot_dir = \"plots\"\n",
            v0_for(0.75),
            PI / 4.0,
            2.0 * PI / 3.0
        ),
    );
    let r = json(&radialis(&["sweep", "--config", &cfg], dir.path()));
    let points = r["results"][0]["points"].as_array().unwrap();
    assert_eq!(points[0]["energies"].as_array().unwrap().len(), 0);
    assert_eq!(points[1]["energies"].as_array().unwrap().len(), 1);
    let table =
        std::fs::read_to_string(dir.path().join("plots/sweep_p0_sae_mixing_l0.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines[0], "chi [rad],E_0 [energy],E_1 [energy]");
    assert!(lines[1].ends_with(",,"));
    assert!(lines[2].ends_with(','));
    assert!(!lines[2].ends_with(",,"));
}

#[test]
fn sweep_is_independent_of_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "sweep.toml",
        "states = 2\nenergy_window = [-1.0, -1e-3]\n[potential]\nkind = \"coulomb\"\nz = 1.0\n[grid]\nr_max = 40.0\nn_points = 8000\n[sweep]\nparameter = \"z\"\nvalues = [0.5, 1.0, 1.5, 2.0]\n",
    );
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_radialis"))
            .args(["sweep", "--config", &cfg])
            .env("RADIALIS_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    let one = run("1");
    let four = run("4");
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(run("zero").status.code(), Some(2));
}

#[test]
fn sweep_needs_an_applicable_parameter() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(
        dir.path(),
        "h.toml",
        &format!("{HYDROGEN}[sweep]\nparameter = \"chi\"\nvalues = [0.1]\n"),
    );
    let out = radialis(&["sweep", "--config", &h], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sweep.parameter"));
}

#[test]
fn residual_of_a_probe_function() {
    let dir = tempfile::tempdir().unwrap();
    let base = [
        "residual",
        "--set",
        "potential.kind=coulomb",
        "--set",
        "potential.z=1",
    ];
    let run = |terms: &str| {
        let arg = format!("probe.terms={terms}");
        let mut args = base.to_vec();
        args.extend(["--set", &arg]);
        json(&radialis(&args, dir.path()))
    };
    let r = run("[[2.0, 0.0]]");
    let s = r["report"]["extrapolated_strength"].as_f64().unwrap();
    assert!((s / (-8.0 * PI) - 1.0).abs() < 1e-6);
    assert_eq!(r["report"]["compatible"], false);
    let r = run("[[1.0, 1.0]]");
    assert_eq!(r["report"]["compatible"], true);
    let r = run("[[1.0, -0.25]]");
    assert_eq!(r["report"]["divergent"], true);
    assert!(r["report"]["extrapolated_strength"].is_null());
}

#[test]
fn residual_audits_solved_states() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.toml", HYDROGEN);
    let r = json(&radialis(&["residual", "--config", &h], dir.path()));
    for s in r["results"][0]["states"].as_array().unwrap() {
        assert_eq!(s["report"]["compatible"], true);
    }
}

fn compare_config(potential: &str, policies: &[String], window: [f64; 2]) -> ExperimentConfig {
    let mut text = format!(
        "states = 3\nenergy_window = [{}, {}]\n[potential]\n{potential}\n",
        window[0], window[1]
    );
    for p in policies {
        text.push_str("[[policies]]\n");
        text.push_str(p);
        text.push('\n');
    }
    ExperimentConfig::from_toml(&text).unwrap()
}

fn sae(chi: f64) -> String {
    format!("name = \"sae_mixing\"\nchi = {chi}\nr_s = 1.0")
}

#[test]
fn compare_hydrogen_policies() {
    let c = compare_config(
        "kind = \"coulomb\"\nz = 1.0",
        &[
            "name = \"dirichlet\"".into(),
            "name = \"square_integrable_only\"".into(),
            sae(0.0),
        ],
        [-1.0, -1e-3],
    );
    let r = run_compare(&c).unwrap().report;
    let block = &r["results"][0];
    let columns = block["policies"].as_array().unwrap();
    assert_eq!(columns[0]["states"].as_array().unwrap().len(), 3);
    assert_eq!(columns[1]["error"]["needs_extension_parameter"], true);
    let agreement = block["agreement"].as_array().unwrap();
    assert_eq!(agreement.len(), 1);
    assert_eq!(agreement[0]["a"], 0);
    assert_eq!(agreement[0]["b"], 2);
    assert_eq!(agreement[0]["agree"], true);
    for s in columns[0]["states"].as_array().unwrap() {
        assert_eq!(s["audit"]["compatible"], true);
    }
}

#[test]
fn compare_repulsive_policies_flags_the_sae_states() {
    let c = compare_config(
        &format!("kind = \"inverse_square\"\nv0 = {}", v0_for(0.75)),
        &["name = \"dirichlet\"".into(), sae(2.0 * PI / 3.0)],
        [-1e3, -1e-6],
    );
    let r = run_compare(&c).unwrap().report;
    let block = &r["results"][0];
    let columns = block["policies"].as_array().unwrap();
    assert_eq!(columns[0]["states"].as_array().unwrap().len(), 0);
    assert!(!columns[1]["states"].as_array().unwrap().is_empty());
    let flag = &block["flags"][0];
    assert_eq!(flag["present_in"][0], 1);
    assert_eq!(flag["absent_in"][0], 0);
    assert_eq!(block["indicial"]["regime"], "square_integrable_both");
}

#[test]
fn compare_attractive_mixing_angles_gives_distinct_spectra() {
    let c = compare_config(
        &format!("kind = \"inverse_square\"\nv0 = {}", v0_for(0.3)),
        &[sae(7.0 * PI / 12.0), sae(2.0 * PI / 3.0), sae(0.75 * PI)],
        [-1e3, -1e-6],
    );
    let r = run_compare(&c).unwrap().report;
    let block = &r["results"][0];
    let lowest: Vec<f64> = block["policies"]
        .as_array()
        .unwrap()
        .iter()
        .map(|col| col["states"][0]["energy"].as_f64().unwrap())
        .collect();
    assert!(lowest[0] > lowest[1] && lowest[1] > lowest[2], "{lowest:?}");
    assert!(block["agreement"]
        .as_array()
        .unwrap()
        .iter()
        .all(|a| a["agree"] == false));
}

#[test]
fn compare_needs_two_policies() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.toml", HYDROGEN);
    let out = radialis(&["compare", "--config", &h], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_failures_stay_in_their_cell() {
    let c = compare_config(
        "kind = \"inverse_square\"\nv0 = 0.5",
        &[
            "name = \"dirichlet\"".into(),
            "name = \"square_integrable_only\"".into(),
        ],
        [-1e3, -1e-6],
    );
    let r = run_compare(&c).unwrap().report;
    for col in r["results"][0]["policies"].as_array().unwrap() {
        assert_eq!(col["error"]["refusal"], true);
    }
}
