//! Drive the command-line front end in-process from a config file.
//!
//! cargo run --release --example config_cli -- [config.toml]

fn main() {
    let config = std::env::args().nth(1).unwrap_or_else(|| "configs/quick-sweep.toml".into());
    let out = std::env::temp_dir().join("qkd-trojan-example");
    let code = qkd_trojan::cli::main_with([
        "qkd-trojan", "sweep", "--config", &config, "--workers", "2", "--out", out.to_str().unwrap(),
    ]);
    std::process::exit(code);
}
