use rayon::prelude::*;
use ubw1::selftest::{criteria, format_line};

fn main() {
    let all = criteria();
    let outcomes: Vec<_> = all.par_iter().map(|c| (c.check)()).collect();
    let mut failed = 0;
    for (c, o) in all.iter().zip(&outcomes) {
        println!("{}", format_line(c, o));
        if !o.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", all.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
