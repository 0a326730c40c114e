// Builds every registry code, checks the CSS condition and reports `[[n, k]]`,
// then builds a custom code from a TOML definition.
//
// Run with: cargo run --example codes

use bblab::code::{parse_code_defs, registry};
use bblab::error::Result;

const CUSTOM: &str = r#"
[[code]]
name = "bb90"
l = 15
m = 3
a = ["9,0", "0,1", "0,2"]
b = ["0,0", "2,0", "7,0"]
"#;

pub fn run_example() -> Result<()> {
    println!("{:<8} {:>5} {:>4} {:>3} {:>4}  css", "code", "n", "k", "w", "rank");
    for code in registry() {
        println!(
            "{:<8} {:>5} {:>4} {:>3} {:>4}  {}",
            code.name,
            code.n(),
            code.k(),
            code.w,
            code.hx.rank(),
            code.css_holds()
        );
        assert!(code.css_holds());
    }

    for def in parse_code_defs(CUSTOM)? {
        let code = def.build()?;
        println!("custom {}: [[{}, {}]], A = {}, B = {}", code.name, code.n(), code.k(), code.a, code.b);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run_example()
}
