use std::process::Command;

fn main() {
    // Stamp the commit into the artifact version when building from a
    // checkout; reports stay reproducible because the version is an input.
    let commit = Command::new("git")
        .args(["rev-parse", "--short=12", "HEAD"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty());
    if let Some(commit) = commit {
        println!("cargo:rustc-env=SCONCORD_BUILD_COMMIT={commit}");
    }
    println!("cargo:rerun-if-changed=build.rs");
}
