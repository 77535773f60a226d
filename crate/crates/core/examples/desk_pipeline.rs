//! Drive the command-line pipeline end to end in a temporary directory.
//!
//! cargo run --release --example desk_pipeline

fn main() {
    let out = std::env::temp_dir().join("accord_desk_pipeline");
    let cfg = out.join("desk.cfg");
    std::fs::create_dir_all(&out).expect("temp dir");
    std::fs::write(
        &cfg,
        "synth.sentences = 2000\nheldout.sentences = 400\nmodel.n_layers = 2\nmodel.d_model = 32\nmodel.d_ffn = 64\n\
         train.epochs = 2\nprobe.min_cell = 10\npositional.n_train = 100\npositional.n_test = 20\n",
    )
    .expect("config");
    let steps: [&[&str]; 9] = [
        &["synth"],
        &["train"],
        &["ppl"],
        &["eval"],
        &["intervene"],
        &["probe-regions"],
        &["probe-positions"],
        &["nonce", "--limit", "100"],
        &["compliance"],
    ];
    for step in steps {
        let mut argv = vec!["accord".to_string(), "--seed".into(), "5".into(), "--config".into(), cfg.display().to_string()];
        argv.extend(["--out".to_string(), out.display().to_string()]);
        argv.extend(step.iter().map(|s| s.to_string()));
        let code = accord::eval::cli::run(argv);
        println!("{:<16} exit {code}", step[0]);
        if code != 0 {
            std::process::exit(code);
        }
    }
    let report = std::fs::read_to_string(out.join("eval_report.csv")).expect("report");
    println!("\n{report}");
    println!("outputs and manifests in {}", out.display());
}
