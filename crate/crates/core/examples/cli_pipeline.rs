//! Drive the command line in-process: synthesize from the recorded
//! transcript, generate QA, then score perfect answers.
//!
//! cargo run --example cli_pipeline

use std::path::Path;

use stsynth::cli::run_cli_with;

fn run(args: &[&str]) -> anyhow::Result<String> {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run_cli_with(std::iter::once("stsynth").chain(args.iter().copied()), &mut out, &mut err);
    anyhow::ensure!(code == 0, "{args:?} exited {code}: {}", String::from_utf8_lossy(&err));
    Ok(String::from_utf8(out)?)
}

fn main() -> anyhow::Result<()> {
    let work = std::env::temp_dir().join(format!("stsynth-cli-{}", std::process::id()));
    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/transcripts/showcase");
    let (run_dir, qa_dir) = (work.join("run"), work.join("qa"));
    let s = |p: &Path| p.to_string_lossy().into_owned();

    print!("{}", run(&["synthesize", "--nodes", "3", "--backend", &format!("scripted:{}", s(&script)), "--out", &s(&run_dir)])?);
    print!("{}", run(&["gen-align", "--run", &s(&run_dir), "--out", &s(&qa_dir)])?);

    let qa = std::fs::read_to_string(qa_dir.join("qa.jsonl"))?;
    let mut responses = String::new();
    for line in qa.lines() {
        let q: serde_json::Value = serde_json::from_str(line)?;
        let answer = q["answer"].as_str().unwrap_or_default();
        let rec = serde_json::json!({"question_id": q["question_id"], "response": format!("<think>lookup</think><answer>{answer}</answer>")});
        responses.push_str(&format!("{rec}\n"));
    }
    let responses_path = work.join("responses.jsonl");
    std::fs::write(&responses_path, responses)?;
    print!("{}", run(&["score", "--responses", &s(&responses_path), "--questions", &s(&qa_dir.join("qa.jsonl"))])?);

    std::fs::remove_dir_all(&work)?;
    Ok(())
}
