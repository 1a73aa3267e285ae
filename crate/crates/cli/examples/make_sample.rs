//! Renders the sample panorama: `cargo run -p panoheat-cli --example make_sample -- <out.hdr> [width]`.

use std::path::PathBuf;

use panoheat::pano::io::write_rgbe;
use panoheat::synthetic::Fixture;

fn main() {
    let mut args = std::env::args().skip(1);
    let out = PathBuf::from(args.next().unwrap_or_else(|| "pano.hdr".into()));
    let width = args.next().map_or(512, |w| w.parse().expect("width is a number"));
    let pano = Fixture::desk_room().render(width).expect("fixture renders");
    write_rgbe(&out, &pano).expect("panorama written");
    println!("wrote {} ({}x{})", out.display(), pano.width(), pano.height());
}
