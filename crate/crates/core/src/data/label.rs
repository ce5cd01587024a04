use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The 13 anomaly classes plus `Normal`, in canonical index order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClassLabel {
    Abuse,
    Arrest,
    Arson,
    Assault,
    Burglary,
    Explosion,
    Fight,
    Normal,
    RoadAccidents,
    Robbery,
    Shooting,
    Shoplifting,
    Stealing,
    Vandalism,
}

impl ClassLabel {
    pub const COUNT: usize = 14;

    pub const ALL: [ClassLabel; Self::COUNT] = [
        ClassLabel::Abuse,
        ClassLabel::Arrest,
        ClassLabel::Arson,
        ClassLabel::Assault,
        ClassLabel::Burglary,
        ClassLabel::Explosion,
        ClassLabel::Fight,
        ClassLabel::Normal,
        ClassLabel::RoadAccidents,
        ClassLabel::Robbery,
        ClassLabel::Shooting,
        ClassLabel::Shoplifting,
        ClassLabel::Stealing,
        ClassLabel::Vandalism,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Result<Self> {
        Self::ALL.get(index).copied().ok_or(Error::Label {
            label: index,
            classes: Self::COUNT,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Abuse => "Abuse",
            ClassLabel::Arrest => "Arrest",
            ClassLabel::Arson => "Arson",
            ClassLabel::Assault => "Assault",
            ClassLabel::Burglary => "Burglary",
            ClassLabel::Explosion => "Explosion",
            ClassLabel::Fight => "Fight",
            ClassLabel::Normal => "Normal",
            ClassLabel::RoadAccidents => "RoadAccidents",
            ClassLabel::Robbery => "Robbery",
            ClassLabel::Shooting => "Shooting",
            ClassLabel::Shoplifting => "Shoplifting",
            ClassLabel::Stealing => "Stealing",
            ClassLabel::Vandalism => "Vandalism",
        }
    }

    pub fn is_anomalous(self) -> bool {
        self != ClassLabel::Normal
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::format("label", format!("unknown class name `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_indices_are_bijective() {
        for (i, c) in ClassLabel::ALL.iter().enumerate() {
            assert_eq!(c.index(), i);
            assert_eq!(ClassLabel::from_index(i).unwrap(), *c);
            assert_eq!(c.name().parse::<ClassLabel>().unwrap(), *c);
        }
        assert_eq!(ClassLabel::Normal.index(), 7);
        assert!(ClassLabel::from_index(14).is_err());
        assert!("normal".parse::<ClassLabel>().is_err());
    }
}
