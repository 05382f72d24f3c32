use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn grantdesk(store: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grantdesk"))
        .args(args)
        .env("STORE_PATH", store)
        .env("TOKEN_SECRET", "cli-test-secret-0123456789")
        .env("RUST_LOG", "warn")
        .env_remove("CLOCK_MODE")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "exit {:?}: {}", o.status, String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn operator_commands_drive_a_call() {
    let dir = tempfile::tempdir().unwrap();
    let db = dir.path().join("cli.db");

    let seeded = stdout(&grantdesk(&db, &["seed"]));
    assert!(seeded.contains("\"proposals\": 20"), "{seeded}");

    let refused = grantdesk(&db, &["assign", "call-01", "--now", "2026-06-13T00:00:00Z"]);
    assert!(!refused.status.success());
    assert!(String::from_utf8_lossy(&refused.stderr).contains("DEADLINE_NOT_REACHED"));

    let lines = stdout(&grantdesk(&db, &["assign", "call-01", "--now", "2026-06-14T00:00:00Z"]));
    assert_eq!(lines.lines().count(), 30);
    assert!(lines.lines().all(|l| l.split('\t').count() == 3));

    // Nothing is due until reviews arrive.
    let swept = stdout(&grantdesk(&db, &["sweep-deadlines", "--now", "2026-06-29T00:00:00Z"]));
    assert!(swept.is_empty());
    let decided = stdout(&grantdesk(&db, &["decide", "call-01", "--now", "2026-07-13T00:00:00Z"]));
    assert!(decided.is_empty());

    let export: Value = serde_json::from_str(&stdout(&grantdesk(&db, &["export", "call-01"]))).unwrap();
    assert_eq!(export["call"]["id"], "call-01");
    assert_eq!(export["assignments"].as_array().unwrap().len(), 30);

    let dump = dir.path().join("dump.json");
    stdout(&grantdesk(&db, &["dump", "--out", dump.to_str().unwrap()]));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(doc["manifest"]["counts"]["assignments"], 30);
}

#[test]
fn generate_is_reproducible_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        stdout(&grantdesk(&dir.path().join("unused.db"), &["generate", "--seed", "42", "--out", out.to_str().unwrap()]));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn missing_configuration_exits_with_code_two() {
    let o = Command::new(env!("CARGO_BIN_EXE_grantdesk"))
        .args(["assign", "call-01"])
        .env_remove("STORE_PATH")
        .env_remove("TOKEN_SECRET")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("CONFIG_MISSING"));
}
