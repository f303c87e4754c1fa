use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

macro_rules! chapters {
    ($($variant:ident => $num:expr, $short:expr, $full:expr;)*) => {
        /// One of the 22 semantic chapters of the Intercontinental Dictionary Series.
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum Chapter {
            $($variant,)*
        }

        impl Chapter {
            pub const ALL: [Chapter; 22] = [$(Chapter::$variant,)*];

            /// IDS chapter number, 1-based.
            pub fn number(self) -> u8 {
                match self { $(Chapter::$variant => $num,)* }
            }

            pub fn short(self) -> &'static str {
                match self { $(Chapter::$variant => $short,)* }
            }

            pub fn full_name(self) -> &'static str {
                match self { $(Chapter::$variant => $full,)* }
            }
        }
    };
}

chapters! {
    World => 1, "World", "Physical world";
    Kinship => 2, "Kinship", "Kinship";
    Animals => 3, "Animals", "Animals";
    Body => 4, "Body", "The body";
    Food => 5, "Food", "Food and drink";
    Cloth => 6, "Cloth", "Clothing and grooming";
    House => 7, "House", "The house";
    Agriculture => 8, "Agriculture", "Agricultural and vegetation";
    Action => 9, "Action", "Action and technology";
    Motion => 10, "Motion", "Motion";
    Possession => 11, "Possession", "Possession";
    Space => 12, "Space", "Spatial relations";
    Quantity => 13, "Quantity", "Quantity";
    Time => 14, "Time", "Time";
    Sense => 15, "Sense", "Sense perception";
    Values => 16, "Values", "Emotion and values";
    Cognition => 17, "Cognition", "Cognition";
    Language => 18, "Language", "Speech and language";
    Society => 19, "Society", "Society and politics";
    Warfare => 20, "Warfare", "Warfare and hunting";
    Law => 21, "Law", "Law";
    Religion => 22, "Religion", "Religion and belief";
}

impl fmt::Display for Chapter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short())
    }
}

impl FromStr for Chapter {
    type Err = Error;

    /// Accepts the chapter number, the short label or the full name
    /// (case-insensitive). "Cognit" is accepted as an abbreviation.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Ok(n) = t.parse::<u8>() {
            return Chapter::ALL
                .iter()
                .copied()
                .find(|c| c.number() == n)
                .ok_or_else(|| Error::UnknownChapter(s.to_string()));
        }
        if t.eq_ignore_ascii_case("cognit") {
            return Ok(Chapter::Cognition);
        }
        Chapter::ALL
            .iter()
            .copied()
            .find(|c| c.short().eq_ignore_ascii_case(t) || c.full_name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownChapter(s.to_string()))
    }
}

impl Serialize for Chapter {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.short())
    }
}

impl<'de> Deserialize<'de> for Chapter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

const DEFAULT_GROUPS: &str = include_str!("../../config/chapter_groups.toml");

/// Assignment of chapters to the coarse groups used in category breakdowns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChapterGroups {
    by_chapter: BTreeMap<Chapter, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GroupsFile {
    groups: BTreeMap<String, Vec<String>>,
}

impl ChapterGroups {
    /// Parses a TOML table `[groups] "Name" = ["Chapter", ...]`. Every chapter
    /// must be assigned exactly once.
    pub fn from_toml(text: &str) -> Result<Self> {
        let file: GroupsFile = toml::from_str(text).map_err(|e| Error::Config(format!("chapter groups: {e}")))?;
        let mut by_chapter = BTreeMap::new();
        for (group, chapters) in file.groups {
            for label in chapters {
                let ch: Chapter = label.parse()?;
                if by_chapter.insert(ch, group.clone()).is_some() {
                    return Err(Error::Config(format!("chapter {ch} assigned to two groups")));
                }
            }
        }
        if let Some(missing) = Chapter::ALL.iter().find(|c| !by_chapter.contains_key(c)) {
            return Err(Error::Config(format!("chapter {missing} has no group")));
        }
        Ok(ChapterGroups { by_chapter })
    }

    pub fn group_of(&self, chapter: Chapter) -> &str {
        &self.by_chapter[&chapter]
    }

    /// Group names in first-appearance order over the chapter list.
    pub fn group_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = Vec::new();
        for ch in Chapter::ALL {
            let g = self.group_of(ch);
            if !names.contains(&g) {
                names.push(g);
            }
        }
        names
    }
}

impl Default for ChapterGroups {
    fn default() -> Self {
        ChapterGroups::from_toml(DEFAULT_GROUPS).expect("bundled chapter groups are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!("1".parse::<Chapter>().unwrap(), Chapter::World);
        assert_eq!("physical world".parse::<Chapter>().unwrap(), Chapter::World);
        assert_eq!("Cognit".parse::<Chapter>().unwrap(), Chapter::Cognition);
        assert_eq!("22".parse::<Chapter>().unwrap(), Chapter::Religion);
        assert!("23".parse::<Chapter>().is_err());
        assert!("Weather".parse::<Chapter>().is_err());
    }

    #[test]
    fn default_groups_cover_named_examples() {
        let g = ChapterGroups::default();
        assert_eq!(g.group_of(Chapter::World), "Global Knowledge");
        assert_eq!(g.group_of(Chapter::Animals), "Global Knowledge");
        assert_eq!(g.group_of(Chapter::Action), "Perceptual Experience");
        assert_eq!(g.group_of(Chapter::Space), "Perceptual Experience");
        assert_eq!(g.group_of(Chapter::Values), "Cultural Ideologies");
        assert_eq!(g.group_of(Chapter::Society), "Cultural Ideologies");
        assert_eq!(g.group_names().len(), 3);
    }

    #[test]
    fn groups_reject_double_assignment() {
        let text = "[groups]\nA = [\"World\"]\nB = [\"World\"]\n";
        assert!(ChapterGroups::from_toml(text).is_err());
    }
}
