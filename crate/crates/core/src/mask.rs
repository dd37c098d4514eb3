//! Photomask and element-table export.
//!
//! SVG output uses one user unit per micrometer; the root element carries the
//! physical size in millimeters so the drawing prints at scale. Patches are
//! centred on their element position with the resonant length along y, and
//! each non-zero stub runs along the patch's right-hand edge.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::layout::ArrayLayout;

/// Drawn width of a delay stub.
pub const STUB_WIDTH: f64 = 5e-6;

pub const CSV_HEADER: &str = "row,col,x_um,y_um,phase_rad,stub_um";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskFormat {
    Svg,
    Json,
    Csv,
}

impl MaskFormat {
    pub fn extension(self) -> &'static str {
        match self {
            MaskFormat::Svg => "svg",
            MaskFormat::Json => "json",
            MaskFormat::Csv => "csv",
        }
    }
}

impl FromStr for MaskFormat {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svg" => Ok(MaskFormat::Svg),
            "json" => Ok(MaskFormat::Json),
            "csv" => Ok(MaskFormat::Csv),
            other => Err(invalid(format!("unknown mask format `{other}`"))),
        }
    }
}

pub fn export_mask(layout: &ArrayLayout, format: MaskFormat) -> Result<Vec<u8>> {
    if layout.is_empty() {
        return Err(invalid("cannot export an empty layout"));
    }
    match format {
        MaskFormat::Svg => Ok(to_svg(layout).into_bytes()),
        MaskFormat::Json => Ok(serde_json::to_vec_pretty(layout)?),
        MaskFormat::Csv => Ok(to_csv(layout).into_bytes()),
    }
}

/// Reads back a layout written with [`MaskFormat::Json`].
pub fn import_json(bytes: &[u8]) -> Result<ArrayLayout> {
    Ok(serde_json::from_slice(bytes)?)
}

fn um(meters: f64) -> f64 {
    // round away float noise so identical geometry prints identically
    (meters * 1e9).round() / 1e3
}

fn to_svg(layout: &ArrayLayout) -> String {
    let (w, h) = layout.extent();
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}mm" height="{}mm" viewBox="0 0 {} {}">"#,
        um(w) / 1e3,
        um(h) / 1e3,
        um(w),
        um(h)
    );
    let _ = writeln!(s, r#"<g id="patches" fill="black">"#);
    for e in &layout.elements {
        let pw = layout.patch.width * e.scale;
        let pl = layout.patch.length * e.scale;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
            um(e.x - pw / 2.0),
            um(e.y - pl / 2.0),
            um(pw),
            um(pl)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="stubs" fill="black">"#);
    for e in layout.elements.iter().filter(|e| e.stub_length > 0.0) {
        let pw = layout.patch.width * e.scale;
        let pl = layout.patch.length * e.scale;
        let _ = writeln!(
            s,
            r#"<rect x="{}" y="{}" width="{}" height="{}"/>"#,
            um(e.x + pw / 2.0),
            um(e.y - pl / 2.0),
            um(STUB_WIDTH),
            um(e.stub_length)
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn to_csv(layout: &ArrayLayout) -> String {
    let mut s = String::with_capacity(48 * (layout.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for e in &layout.elements {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            e.row,
            e.col,
            e.x * 1e6,
            e.y * 1e6,
            e.phase,
            e.stub_length * 1e6
        );
    }
    s
}
