//! Line-oriented text format for single segmentation frames.
//!
//! Used as diff-friendly fixtures for the one-shot direction debugging
//! command. Units are pixels. Format, one directive per line:
//!
//! ```text
//! # comment
//! contour u,v u,v u,v ...          # ground polygon vertices (float px)
//! box id=NAME u_tl,v_tl u_br,v_br  # one object box (integer px)
//! ```

use crate::geometry::Polygon;
use crate::perception::{ObjectBox, SegmentationFrame};

/// Parses the frame text format; errors carry the offending line number.
pub fn parse_frame(text: &str) -> Result<SegmentationFrame, String> {
    let mut contour: Vec<(f64, f64)> = Vec::new();
    let mut boxes: Vec<ObjectBox> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("contour") => {
                for tok in tokens {
                    contour.push(parse_pair(tok).map_err(|e| format!("line {line_no}: {e}"))?);
                }
            }
            Some("box") => {
                let id_tok = tokens
                    .next()
                    .ok_or_else(|| format!("line {line_no}: box needs id=NAME"))?;
                let id = id_tok
                    .strip_prefix("id=")
                    .ok_or_else(|| format!("line {line_no}: expected id=NAME, got `{id_tok}`"))?;
                let tl = tokens
                    .next()
                    .ok_or_else(|| format!("line {line_no}: box needs a top-left corner"))?;
                let br = tokens
                    .next()
                    .ok_or_else(|| format!("line {line_no}: box needs a bottom-right corner"))?;
                let (u_tl, v_tl) = parse_pair(tl).map_err(|e| format!("line {line_no}: {e}"))?;
                let (u_br, v_br) = parse_pair(br).map_err(|e| format!("line {line_no}: {e}"))?;
                if u_br < u_tl || v_br < v_tl {
                    return Err(format!("line {line_no}: box corners are not ordered"));
                }
                boxes.push(ObjectBox {
                    object_id: id.to_string(),
                    u_tl: u_tl as u32,
                    v_tl: v_tl as u32,
                    u_br: u_br as u32,
                    v_br: v_br as u32,
                });
            }
            Some(other) => return Err(format!("line {line_no}: unknown directive `{other}`")),
            None => {}
        }
    }

    Ok(SegmentationFrame {
        ground_contour: Polygon::new(contour),
        object_boxes: boxes,
    })
}

fn parse_pair(tok: &str) -> Result<(f64, f64), String> {
    let (a, b) = tok
        .split_once(',')
        .ok_or_else(|| format!("expected `u,v`, got `{tok}`"))?;
    let u: f64 = a.parse().map_err(|e| format!("bad u `{a}`: {e}"))?;
    let v: f64 = b.parse().map_err(|e| format!("bad v `{b}`: {e}"))?;
    Ok((u, v))
}

/// Writes a frame back out in the same format.
pub fn format_frame(frame: &SegmentationFrame) -> String {
    let mut out = String::from("# segmentation frame, pixel units\n");
    if !frame.ground_contour.vertices.is_empty() {
        out.push_str("contour");
        for &(u, v) in &frame.ground_contour.vertices {
            out.push_str(&format!(" {u},{v}"));
        }
        out.push('\n');
    }
    for b in &frame.object_boxes {
        out.push_str(&format!(
            "box id={} {},{} {},{}\n",
            b.object_id, b.u_tl, b.v_tl, b.u_br, b.v_br
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        let text = "# comment\ncontour 10,479 630,479 500,100 140,100\nbox id=a 300,200 340,260\n";
        let frame = parse_frame(text).unwrap();
        assert_eq!(frame.ground_contour.vertices.len(), 4);
        assert_eq!(frame.object_boxes.len(), 1);
        assert_eq!(frame.object_boxes[0].object_id, "a");
        let again = parse_frame(&format_frame(&frame)).unwrap();
        assert_eq!(again, frame);
    }

    #[test]
    fn errors_name_the_line() {
        let err = parse_frame("contour 10,479 630,479\nbox 300,200 340,260\n").unwrap_err();
        assert!(err.contains("line 2"), "{err}");
    }
}
