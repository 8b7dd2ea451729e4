//! Serialize a layout to the CSS-style grammar and parse a chatty model reply.
//!
//! ```text
//! cargo run --example css_round_trip
//! ```

use roomweaver::grammar::{parse_layout, serialize_layout};
use roomweaver::layout::{Layout, OrientedBox, RoomSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let room = RoomSpec::new("bedroom", 3.8, 3.2)?;
    let layout = Layout::new(
        room.clone(),
        vec![
            OrientedBox::new("double bed", [1.9, 2.15, 0.5], [1.6, 1.0, 2.05], 180.0)?,
            OrientedBox::new("nightstand", [0.8, 2.95, 0.28], [0.45, 0.55, 0.4], 180.0)?,
            OrientedBox::new("wardrobe", [3.5, 0.9, 1.1], [1.5, 2.2, 0.6], 270.0)?,
        ],
    )?;
    let text = serialize_layout(&layout);
    print!("{text}");
    assert_eq!(parse_layout(&text, &room)?, layout);

    let reply = format!("Sure, here is a layout for your room:\n```css\n{text}```\nLet me know if you want changes.");
    let parsed = parse_layout(&reply, &room)?;
    println!("parsed {} boxes from a wrapped reply", parsed.len());

    let broken = text.replace("orientation: 270; ", "");
    match parse_layout(&broken, &room) {
        Ok(_) => println!("unexpectedly parsed"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
