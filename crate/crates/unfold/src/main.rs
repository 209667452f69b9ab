use std::process::ExitCode;

fn main() -> ExitCode {
    if let Some(n) = std::env::var("UNFOLD_THREADS").ok().and_then(|s| s.parse::<usize>().ok()).filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    ExitCode::from(unfold::run(std::env::args_os()) as u8)
}
