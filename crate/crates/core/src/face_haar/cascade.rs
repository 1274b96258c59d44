//! In-memory cascade model and the reader/writer for the old-style
//! `<stages>/<trees>/<feature>` XML layout.

use std::fmt::Write as _;

use roxmltree::{Document, Node};

use crate::error::{Error, Result};
use crate::imgcore::Rect;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedRect {
    pub rect: Rect,
    pub weight: f64,
}

/// Two or three weighted rectangles in base-window coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarFeature {
    pub rects: Vec<WeightedRect>,
}

/// Depth-one decision stump.
#[derive(Clone, Debug, PartialEq)]
pub struct WeakClassifier {
    pub feature: HaarFeature,
    pub threshold: f64,
    pub left: f64,
    pub right: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeStage {
    pub threshold: f64,
    pub weak: Vec<WeakClassifier>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CascadeModel {
    pub base_width: usize,
    pub base_height: usize,
    pub stages: Vec<CascadeStage>,
}

impl CascadeModel {
    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        parse_cascade(&std::fs::read_to_string(path)?)
    }

    pub fn weak_count(&self) -> usize {
        self.stages.iter().map(|s| s.weak.len()).sum()
    }

    /// Canonical XML in the same layout [`parse_cascade`] reads. Numbers are
    /// written in shortest round-trip form, so parse -> write -> parse is a
    /// fixed point.
    pub fn to_xml(&self) -> String {
        let mut out = String::new();
        out.push_str("<?xml version=\"1.0\"?>\n<opencv_storage>\n");
        out.push_str("<cascade_model type_id=\"opencv-haar-classifier\">\n");
        let _ = writeln!(out, "  <size>{} {}</size>", self.base_width, self.base_height);
        out.push_str("  <stages>\n");
        for stage in &self.stages {
            out.push_str("    <_>\n      <trees>\n");
            for weak in &stage.weak {
                out.push_str("        <_>\n          <_>\n            <feature>\n              <rects>\n");
                for r in &weak.feature.rects {
                    let _ = writeln!(
                        out,
                        "                <_>{} {} {} {} {:?}</_>",
                        r.rect.x, r.rect.y, r.rect.w, r.rect.h, r.weight
                    );
                }
                out.push_str("              </rects>\n              <tilted>0</tilted>\n            </feature>\n");
                let _ = writeln!(out, "            <threshold>{:?}</threshold>", weak.threshold);
                let _ = writeln!(out, "            <left_val>{:?}</left_val>", weak.left);
                let _ = writeln!(out, "            <right_val>{:?}</right_val>", weak.right);
                out.push_str("          </_>\n        </_>\n");
            }
            out.push_str("      </trees>\n");
            let _ = writeln!(out, "      <stage_threshold>{:?}</stage_threshold>", stage.threshold);
            out.push_str("    </_>\n");
        }
        out.push_str("  </stages>\n</cascade_model>\n</opencv_storage>\n");
        out
    }
}

fn line_of(node: Node) -> usize {
    node.document().text_pos_at(node.range().start).row as usize
}

fn parse_err(node: Node, message: impl Into<String>) -> Error {
    Error::Parse {
        line: line_of(node),
        message: message.into(),
    }
}

fn elements<'a, 'i>(node: Node<'a, 'i>) -> impl Iterator<Item = Node<'a, 'i>> {
    node.children().filter(|n| n.is_element())
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    elements(node).find(|n| n.has_tag_name(name))
}

fn required<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Result<Node<'a, 'i>> {
    child(node, name).ok_or_else(|| parse_err(node, format!("missing <{name}>")))
}

fn number(node: Node) -> Result<f64> {
    let text = node.text().unwrap_or("").trim();
    text.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| parse_err(node, format!("<{}> is not a number: {text:?}", node.tag_name().name())))
}

/// Parses a stump-based cascade in the old XML layout.
pub fn parse_cascade(text: &str) -> Result<CascadeModel> {
    let doc = Document::parse(text).map_err(|e| Error::Parse {
        line: e.pos().row as usize,
        message: e.to_string(),
    })?;
    let root = doc.root_element();
    // Either the classifier element itself or <opencv_storage> wrapping it.
    let classifier = if child(root, "stages").is_some() || child(root, "cascade").is_some() {
        root
    } else {
        elements(root)
            .find(|n| child(*n, "stages").is_some() || n.has_tag_name("cascade"))
            .ok_or_else(|| parse_err(root, "no cascade classifier element found"))?
    };
    if classifier.has_tag_name("cascade")
        || child(classifier, "cascade").is_some()
        || child(classifier, "stageType").is_some()
    {
        return Err(Error::UnsupportedCascade(
            "nested <cascade>/<weakClassifiers> layout; convert to the <stages>/<trees> layout".into(),
        ));
    }

    let size_node = required(classifier, "size")?;
    let dims: Vec<usize> = size_node
        .text()
        .unwrap_or("")
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(size_node, "<size> must hold two integers"))?;
    let [base_width, base_height] = dims[..] else {
        return Err(parse_err(size_node, "<size> must hold two integers"));
    };
    if base_width == 0 || base_height == 0 {
        return Err(parse_err(size_node, "base window must be non-empty"));
    }
    let base = Rect::new(0, 0, base_width, base_height);

    let stages_node = required(classifier, "stages")?;
    let mut stages = Vec::new();
    for stage_node in elements(stages_node) {
        let trees = required(stage_node, "trees")?;
        let mut weak = Vec::new();
        for tree in elements(trees) {
            weak.push(parse_stump(tree, base)?);
        }
        if weak.is_empty() {
            return Err(parse_err(stage_node, "stage has no trees"));
        }
        let threshold = number(required(stage_node, "stage_threshold")?)?;
        stages.push(CascadeStage { threshold, weak });
    }
    if stages.is_empty() {
        return Err(parse_err(stages_node, "cascade has no stages"));
    }
    Ok(CascadeModel {
        base_width,
        base_height,
        stages,
    })
}

fn parse_stump(tree: Node, base: Rect) -> Result<WeakClassifier> {
    let nodes: Vec<Node> = elements(tree).collect();
    let node = match nodes[..] {
        [n] => n,
        [] => return Err(parse_err(tree, "empty tree")),
        _ => {
            return Err(Error::UnsupportedCascade(format!(
                "tree at line {} has {} nodes; only stumps are supported",
                line_of(tree),
                nodes.len()
            )))
        }
    };
    if child(node, "left_node").is_some() || child(node, "right_node").is_some() {
        return Err(Error::UnsupportedCascade(format!(
            "tree at line {} branches to child nodes; only stumps are supported",
            line_of(tree)
        )));
    }
    let feature_node = required(node, "feature")?;
    if let Some(tilted) = child(feature_node, "tilted") {
        if tilted.text().map(str::trim).unwrap_or("0") != "0" {
            return Err(Error::UnsupportedCascade(format!(
                "tilted feature at line {}",
                line_of(tilted)
            )));
        }
    }
    let rects_node = required(feature_node, "rects")?;
    let mut rects = Vec::new();
    for r in elements(rects_node) {
        let fields: Vec<&str> = r.text().unwrap_or("").split_whitespace().collect();
        if fields.len() != 5 {
            return Err(parse_err(r, "rect must be \"x y w h weight\""));
        }
        let coords: Vec<usize> = fields[..4]
            .iter()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| parse_err(r, "rect coordinates must be non-negative integers"))?;
        let weight = fields[4]
            .parse::<f64>()
            .ok()
            .filter(|w| w.is_finite())
            .ok_or_else(|| parse_err(r, "rect weight is not a number"))?;
        let rect = Rect::new(coords[0], coords[1], coords[2], coords[3]);
        if rect.w == 0 || rect.h == 0 {
            return Err(parse_err(r, "rect has zero extent"));
        }
        if !base.contains_rect(&rect) {
            return Err(parse_err(
                r,
                format!("rect {:?} exceeds the {}x{} base window", rect, base.w, base.h),
            ));
        }
        rects.push(WeightedRect { rect, weight });
    }
    if !(2..=3).contains(&rects.len()) {
        return Err(parse_err(
            rects_node,
            format!("feature has {} rects, expected 2 or 3", rects.len()),
        ));
    }
    Ok(WeakClassifier {
        feature: HaarFeature { rects },
        threshold: number(required(node, "threshold")?)?,
        left: number(required(node, "left_val")?)?,
        right: number(required(node, "right_val")?)?,
    })
}
