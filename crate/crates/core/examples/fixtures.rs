//! Writes the built-in fixture meshes as OBJ files plus a `bench.txt` list
//! usable with `fingersplit bench --list`.
//!
//! ```text
//! cargo run --release --example fixtures -- fixtures/
//! ```

use std::fmt::Write as _;
use std::path::PathBuf;

use fingersplit::surface::shapes;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;
    let mut list = String::from("# built-in fixtures, meters\n");
    for (name, surface) in shapes::fixture_set() {
        let mut text = String::new();
        for v in surface.vertices() {
            let _ = writeln!(text, "v {} {} {}", v.x, v.y, v.z);
        }
        for t in surface.triangles() {
            let _ = writeln!(text, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        let file = format!("{name}.obj");
        std::fs::write(dir.join(&file), text)?;
        let _ = writeln!(list, "{file}");
        println!(
            "{file}: {} vertices, {} triangles",
            surface.len(),
            surface.triangles().len()
        );
    }
    std::fs::write(dir.join("bench.txt"), list)
}
