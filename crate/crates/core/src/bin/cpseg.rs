// SPDX-License-Identifier: MIT OR Apache-2.0

fn main() {
    std::process::exit(cpseg::cli::dispatch(std::env::args_os()));
}
