//! Dataset manifests: one `video_id<TAB>path<TAB>split<TAB>origin` record
//! per line.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::frames::{ingest_frames, FrameSequence};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Test,
}

/// How an entry's frames derive from its source video.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Origin {
    Original,
    Hflip,
    Vflip,
}

impl Origin {
    fn suffix(self) -> &'static str {
        match self {
            Origin::Original => "",
            Origin::Hflip => "_hflip",
            Origin::Vflip => "_vflip",
        }
    }
}

macro_rules! text_enum {
    ($ty:ident, $field:literal, $($variant:ident => $text:literal),+) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $text),+ })
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(Error::format($field, format!("unknown value `{other}`"))),
                }
            }
        }
    };
}

text_enum!(Split, "split", Train => "train", Test => "test");
text_enum!(Origin, "origin", Original => "original", Hflip => "hflip", Vflip => "vflip");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub video_id: String,
    /// Frame directory or `.vten` container. Flipped entries share their
    /// source's path; the flip is applied on load.
    pub path: PathBuf,
    pub split: Split,
    pub origin: Origin,
}

impl ManifestEntry {
    /// Id of the original video (annotations are keyed by it).
    pub fn source_id(&self) -> &str {
        self.video_id.strip_suffix(self.origin.suffix()).unwrap_or(&self.video_id)
    }

    /// Loads the frames and applies this entry's flip. `base` resolves
    /// relative paths.
    pub fn load(&self, base: &Path) -> Result<FrameSequence> {
        let mut seq = ingest_frames(base.join(&self.path))?;
        seq = match self.origin {
            Origin::Original => seq,
            Origin::Hflip => seq.hflip(),
            Origin::Vflip => seq.vflip(),
        };
        seq.video_id = self.video_id.clone();
        Ok(seq)
    }
}

/// Augmentation multiplicity for the training split.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Multiplicity {
    /// Originals only.
    One,
    /// Originals and horizontal flips.
    Two,
    /// Originals and both flips.
    #[default]
    Three,
}

impl Multiplicity {
    pub fn from_count(n: usize) -> Result<Self> {
        match n {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            _ => Err(Error::Config(format!("augmentation multiplicity must be 1, 2 or 3, got {n}"))),
        }
    }

    fn origins(self) -> &'static [Origin] {
        match self {
            Self::One => &[],
            Self::Two => &[Origin::Hflip],
            Self::Three => &[Origin::Hflip, Origin::Vflip],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let m = Self { entries };
        m.validate()?;
        Ok(m)
    }

    /// Ids are unique and every flipped entry names an original in the
    /// same split with the same path.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.video_id.as_str()) {
                return Err(Error::Validation(format!("duplicate video id `{}`", e.video_id)));
            }
        }
        for e in self.entries.iter().filter(|e| e.origin != Origin::Original) {
            let src = e.source_id();
            let ok = src != e.video_id
                && self
                    .entries
                    .iter()
                    .any(|o| o.video_id == src && o.origin == Origin::Original && o.split == e.split && o.path == e.path);
            if !ok {
                return Err(Error::Validation(format!(
                    "augmented entry `{}` has no matching original",
                    e.video_id
                )));
            }
        }
        Ok(())
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    /// Adds flipped copies of every original training entry. Test entries
    /// are never augmented.
    pub fn augment(&self, multiplicity: Multiplicity) -> Result<Self> {
        let mut entries = self.entries.clone();
        for e in self.split(Split::Train).filter(|e| e.origin == Origin::Original) {
            for &origin in multiplicity.origins() {
                entries.push(ManifestEntry {
                    video_id: format!("{}{}", e.video_id, origin.suffix()),
                    path: e.path.clone(),
                    split: e.split,
                    origin,
                });
            }
        }
        Self::new(entries)
    }

    pub fn to_tsv(&self) -> String {
        self.entries
            .iter()
            .map(|e| format!("{}\t{}\t{}\t{}\n", e.video_id, e.path.display(), e.split, e.origin))
            .collect()
    }

    pub fn parse_tsv(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            let field = format!("manifest line {}", i + 1);
            let [id, path, split, origin] = cols[..] else {
                return Err(Error::format(field, format!("expected 4 tab-separated columns, found {}", cols.len())));
            };
            if id.is_empty() || path.is_empty() {
                return Err(Error::format(field, "empty video id or path"));
            }
            entries.push(ManifestEntry {
                video_id: id.into(),
                path: path.into(),
                split: split.parse().map_err(|e: Error| Error::format(field.clone(), e.to_string()))?,
                origin: origin.parse().map_err(|e: Error| Error::format(field.clone(), e.to_string()))?,
            });
        }
        Self::new(entries)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_tsv(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, split: Split) -> ManifestEntry {
        ManifestEntry {
            video_id: id.into(),
            path: format!("{id}.vten").into(),
            split,
            origin: Origin::Original,
        }
    }

    fn sample() -> DatasetManifest {
        DatasetManifest::new(vec![entry("a", Split::Train), entry("b", Split::Train), entry("c", Split::Test)]).unwrap()
    }

    #[test]
    fn augmentation_triples_train_only() {
        let m = sample().augment(Multiplicity::Three).unwrap();
        assert_eq!(m.split(Split::Train).count(), 6);
        assert_eq!(m.split(Split::Test).count(), 1);
        let h = m.entries.iter().find(|e| e.video_id == "a_hflip").unwrap();
        assert_eq!((h.source_id(), h.origin, h.path.to_str().unwrap()), ("a", Origin::Hflip, "a.vten"));
        assert_eq!(sample().augment(Multiplicity::Two).unwrap().entries.len(), 5);
        assert_eq!(sample().augment(Multiplicity::One).unwrap(), sample());
        assert!(Multiplicity::from_count(4).is_err());
    }

    #[test]
    fn tsv_round_trip() {
        let m = sample().augment(Multiplicity::Three).unwrap();
        assert_eq!(DatasetManifest::parse_tsv(&m.to_tsv()).unwrap(), m);
        assert!(m.to_tsv().starts_with("a\ta.vten\ttrain\toriginal\n"));
    }

    #[test]
    fn invalid_manifests() {
        assert!(matches!(DatasetManifest::parse_tsv("a\tp\ttrain\n"), Err(Error::Format { .. })));
        assert!(matches!(DatasetManifest::parse_tsv("a\tp\tdev\toriginal\n"), Err(Error::Format { .. })));
        assert!(matches!(
            DatasetManifest::parse_tsv("a\tp\ttrain\toriginal\na\tq\ttest\toriginal\n"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            DatasetManifest::parse_tsv("x_hflip\tp\ttrain\thflip\n"),
            Err(Error::Validation(_))
        ));
    }
}
