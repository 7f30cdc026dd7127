//! End-to-end runs of the `tram` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use tram::circuit::parse_qasm;
use tram::device::DeviceModel;
use tram::tswap::nonconformant_gates;

fn bench(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/bench").join(name)
}

fn tram(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_tram")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn compile_writes_conformant_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = bench("fredkin_n3.qasm");
    let (code, stderr) = tram(&[
        "compile",
        "--circuit",
        circuit.to_str().unwrap(),
        "--device",
        "perth",
        "--simulate",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code, 0, "{stderr}");
    let dev = DeviceModel::builtin("perth").unwrap();
    for router in ["tram", "baseline"] {
        let text = fs::read_to_string(dir.path().join(format!("fredkin_n3.{router}.qasm"))).unwrap();
        let routed = parse_qasm(&text).unwrap();
        assert!(nonconformant_gates(&routed, &dev).is_empty());
        assert!(dir.path().join(format!("fredkin_n3.{router}.metrics.json")).exists());
        assert!(dir.path().join(format!("fredkin_n3.{router}.fidelity.json")).exists());
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn exit_codes() {
    let wide = bench("ghz_n16.qasm");
    let small = bench("bell_n2.qasm");
    let (code, _) = tram(&["compile", "--circuit", wide.to_str().unwrap(), "--device", "perth"]);
    assert_eq!(code, 2, "a 16-qubit circuit does not fit perth");
    let (code, _) = tram(&["compile", "--circuit", small.to_str().unwrap(), "--omega1=1.5"]);
    assert_eq!(code, 1);
    let (code, _) = tram(&["compile", "--circuit", small.to_str().unwrap(), "--device", "nowhere"]);
    assert_eq!(code, 1);
    let (code, _) = tram(&["compile", "--circuit", "/nonexistent.qasm"]);
    assert_eq!(code, 1);
    let (code, _) = tram(&["sweep"]);
    assert_eq!(code, 1);
    let (code, _) = tram(&["compile", "--no-such-flag"]);
    assert_eq!(code, 1);
    let (code, _) = tram(&["--help"]);
    assert_eq!(code, 0);
}
