//! Landmark sets, facial-part assignments and their text file formats.
//!
//! * template landmarks: one 0-based vertex index per line
//! * scan landmarks: `x y z [label]` per line, same order as the template file
//! * part definitions: `label ordinal` per line, assigning landmark ordinals to parts
//!
//! `#` starts a comment in all three formats; blank lines are skipped.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{Point, TriMesh};
use crate::rigid::SimilarityTransform;

/// Facial part a landmark belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PartLabel {
    Eyes,
    Nose,
    Mouth,
    LeftEar,
    RightEar,
    Other,
}

impl PartLabel {
    pub const ALL: [PartLabel; 6] = [
        PartLabel::Eyes,
        PartLabel::Nose,
        PartLabel::Mouth,
        PartLabel::LeftEar,
        PartLabel::RightEar,
        PartLabel::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PartLabel::Eyes => "eyes",
            PartLabel::Nose => "nose",
            PartLabel::Mouth => "mouth",
            PartLabel::LeftEar => "left_ear",
            PartLabel::RightEar => "right_ear",
            PartLabel::Other => "other",
        }
    }
}

impl fmt::Display for PartLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PartLabel::ALL
            .iter()
            .copied()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| Error::argument(format!("unknown part label `{s}`")))
    }
}

/// Ordered pairing of template vertex indices with scan-space points.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSpec {
    pub template_indices: Vec<usize>,
    pub scan_points: Vec<Point>,
    pub part_labels: Option<Vec<PartLabel>>,
}

impl LandmarkSpec {
    pub fn new(
        template_indices: Vec<usize>,
        scan_points: Vec<Point>,
        part_labels: Option<Vec<PartLabel>>,
    ) -> Result<Self> {
        let lm = Self {
            template_indices,
            scan_points,
            part_labels,
        };
        lm.check_lengths()?;
        Ok(lm)
    }

    fn check_lengths(&self) -> Result<()> {
        let k = self.template_indices.len();
        if self.scan_points.len() != k {
            return Err(Error::argument(format!(
                "{k} template landmarks but {} scan landmarks",
                self.scan_points.len()
            )));
        }
        if let Some(l) = &self.part_labels {
            if l.len() != k {
                return Err(Error::argument(format!("{k} landmarks but {} part labels", l.len())));
            }
        }
        if self.scan_points.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::argument("scan landmark is not finite"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.template_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.template_indices.is_empty()
    }

    /// Checks lengths and that every index is a vertex of a template with `n` vertices.
    pub fn validate(&self, n: usize) -> Result<()> {
        self.check_lengths()?;
        if let Some(&bad) = self.template_indices.iter().find(|&&i| i >= n) {
            return Err(Error::argument(format!(
                "landmark vertex {bad} out of range for a template with {n} vertices"
            )));
        }
        Ok(())
    }

    pub fn template_points(&self, template: &TriMesh) -> Vec<Point> {
        self.template_indices.iter().map(|&i| template.vertices()[i]).collect()
    }

    pub fn transformed(&self, t: &SimilarityTransform) -> Self {
        Self {
            template_indices: self.template_indices.clone(),
            scan_points: self.scan_points.iter().map(|p| t.apply(p)).collect(),
            part_labels: self.part_labels.clone(),
        }
    }
}

/// Assignment of landmark ordinals to facial parts.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartMap {
    pub parts: BTreeMap<PartLabel, Vec<usize>>,
}

impl PartMap {
    /// Parts taken from the landmarks' own labels; a single `other` part when unlabelled.
    pub fn from_landmarks(lm: &LandmarkSpec) -> Self {
        let mut parts: BTreeMap<PartLabel, Vec<usize>> = BTreeMap::new();
        match &lm.part_labels {
            Some(labels) => {
                for (i, l) in labels.iter().enumerate() {
                    parts.entry(*l).or_default().push(i);
                }
            }
            None => {
                parts.insert(PartLabel::Other, (0..lm.len()).collect());
            }
        }
        Self { parts }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut parts: BTreeMap<PartLabel, Vec<usize>> = BTreeMap::new();
        for (n, line) in content_lines(text) {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(Error::parse(n, "expected `label ordinal`"));
            }
            let label: PartLabel = tokens[0]
                .parse()
                .map_err(|_| Error::parse(n, format!("unknown part label `{}`", tokens[0])))?;
            let idx: usize = tokens[1]
                .parse()
                .map_err(|_| Error::parse(n, format!("bad landmark ordinal `{}`", tokens[1])))?;
            parts.entry(label).or_default().push(idx);
        }
        Ok(Self { parts })
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (label, idx) in &self.parts {
            for i in idx {
                let _ = writeln!(out, "{label} {i}");
            }
        }
        out
    }

    /// Every ordinal must be a valid landmark and appear in at most one part.
    pub fn validate(&self, num_landmarks: usize) -> Result<()> {
        let mut seen = vec![false; num_landmarks];
        for (label, idx) in &self.parts {
            for &i in idx {
                if i >= num_landmarks {
                    return Err(Error::argument(format!(
                        "part `{label}` references landmark {i} but only {num_landmarks} exist"
                    )));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(Error::argument(format!("landmark {i} is assigned to two parts")));
                }
            }
        }
        Ok(())
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn parse_template_landmarks(text: &str) -> Result<Vec<usize>> {
    content_lines(text)
        .map(|(n, l)| {
            l.parse::<usize>()
                .map_err(|_| Error::parse(n, format!("expected a vertex index, got `{l}`")))
        })
        .collect()
}

pub fn parse_scan_landmarks(text: &str) -> Result<(Vec<Point>, Option<Vec<PartLabel>>)> {
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (n, line) in content_lines(text) {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !(3..=4).contains(&tokens.len()) {
            return Err(Error::parse(n, "expected `x y z [label]`"));
        }
        let mut c = [0.0; 3];
        for k in 0..3 {
            c[k] = tokens[k]
                .parse()
                .map_err(|_| Error::parse(n, format!("bad coordinate `{}`", tokens[k])))?;
        }
        points.push(Point::new(c[0], c[1], c[2]));
        labels.push(match tokens.get(3) {
            Some(t) => Some(
                t.parse::<PartLabel>()
                    .map_err(|_| Error::parse(n, format!("unknown part label `{t}`")))?,
            ),
            None => None,
        });
    }
    let labels = if labels.iter().all(Option::is_some) && !labels.is_empty() {
        Some(labels.into_iter().map(Option::unwrap).collect())
    } else if labels.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::parse(0, "either all scan landmarks carry a part label or none do"));
    };
    Ok((points, labels))
}

pub fn format_template_landmarks(indices: &[usize]) -> String {
    let mut out = String::new();
    for i in indices {
        let _ = writeln!(out, "{i}");
    }
    out
}

pub fn format_scan_landmarks(points: &[Point], labels: Option<&[PartLabel]>) -> String {
    let mut out = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(out, "{:.8} {:.8} {:.8}", p.x, p.y, p.z);
        if let Some(l) = labels {
            let _ = write!(out, " {}", l[i]);
        }
        out.push('\n');
    }
    out
}

impl LandmarkSpec {
    /// Reads the paired template/scan landmark files.
    pub fn from_texts(template_text: &str, scan_text: &str) -> Result<Self> {
        let idx = parse_template_landmarks(template_text)?;
        let (points, labels) = parse_scan_landmarks(scan_text)?;
        Self::new(idx, points, labels)
    }
}
