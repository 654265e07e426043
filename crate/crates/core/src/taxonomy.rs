//! The self-disclosure taxonomy: 13 demographic attributes and 6 personal experiences.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// The two top-level groups of the taxonomy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CategoryGroup {
    /// Static characteristics of the author.
    Attribute,
    /// Dynamic life events.
    Experience,
}

/// A self-disclosure category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    Location,
    Age,
    RelationshipStatus,
    AgeGender,
    Pet,
    Appearance,
    HusbandBF,
    WifeGF,
    Gender,
    RaceNationality,
    SexualOrientation,
    Name,
    Contact,
    Health,
    Family,
    Occupation,
    MentalHealth,
    Education,
    Finance,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown self-disclosure category `{0}`")]
pub struct UnknownCategory(pub String);

impl Category {
    pub const ALL: [Category; 19] = [
        Category::Location,
        Category::Age,
        Category::RelationshipStatus,
        Category::AgeGender,
        Category::Pet,
        Category::Appearance,
        Category::HusbandBF,
        Category::WifeGF,
        Category::Gender,
        Category::RaceNationality,
        Category::SexualOrientation,
        Category::Name,
        Category::Contact,
        Category::Health,
        Category::Family,
        Category::Occupation,
        Category::MentalHealth,
        Category::Education,
        Category::Finance,
    ];

    /// Categories a sequence tagger is expected to produce. `Name` and `Contact`
    /// are too rare to tag and come from the pattern/NER fallback instead.
    pub fn tagger_categories() -> impl Iterator<Item = Category> {
        Self::ALL.into_iter().filter(|c| !c.is_fallback_only())
    }

    pub fn is_fallback_only(self) -> bool {
        matches!(self, Category::Name | Category::Contact)
    }

    pub fn group(self) -> CategoryGroup {
        use Category::*;
        match self {
            Health | Family | Occupation | MentalHealth | Education | Finance => {
                CategoryGroup::Experience
            }
            _ => CategoryGroup::Attribute,
        }
    }

    /// Stable serialized name, matching the category spelling used in the prompt assets.
    pub fn as_str(self) -> &'static str {
        use Category::*;
        match self {
            Location => "Location",
            Age => "Age",
            RelationshipStatus => "Relationship_Status",
            AgeGender => "Age_Gender",
            Pet => "Pet",
            Appearance => "Appearance",
            HusbandBF => "Husband_BF",
            WifeGF => "Wife_GF",
            Gender => "Gender",
            RaceNationality => "Race_Nationality",
            SexualOrientation => "Sexual_Orientation",
            Name => "Name",
            Contact => "Contact",
            Health => "Health",
            Family => "Family",
            Occupation => "Occupation",
            MentalHealth => "Mental_Health",
            Education => "Education",
            Finance => "Finance",
        }
    }

    /// Human-readable label for report tables.
    pub fn display_name(self) -> &'static str {
        use Category::*;
        match self {
            RelationshipStatus => "Relationship Status",
            AgeGender => "Age & Gender",
            HusbandBF => "Husband/BF",
            WifeGF => "Wife/GF",
            RaceNationality => "Race/Nationality",
            SexualOrientation => "Sexual Orientation",
            MentalHealth => "Mental Health",
            other => other.as_str(),
        }
    }

    pub fn description(self) -> &'static str {
        use Category::*;
        match self {
            Location => "Specific geographic details such as addresses, cities, countries or landmarks.",
            Age => "The author's age, e.g. \"I am a 23-year-old\".",
            RelationshipStatus => "Marital status, being in a relationship, or being single, e.g. \"my partner\".",
            AgeGender => "Age and gender combined in a single token such as \"20F\" or \"32M\".",
            Pet => "Pets the author owns, e.g. \"I have two musk turtles\".",
            Appearance => "Physical appearance such as height or build, e.g. \"I am 6'2\".",
            HusbandBF => "The author has a husband, boyfriend or fiance, e.g. \"My bf\".",
            WifeGF => "The author has a wife, girlfriend or fiancee, e.g. \"My gf\".",
            Gender => "The author's gender, e.g. \"I'm just a girl\".",
            RaceNationality => "The author's nationality, race or ethnicity, e.g. \"As Italian\".",
            SexualOrientation => "The author's sexual orientation, e.g. \"I'm a straight man\".",
            Name => "The author's name, e.g. \"my name is xxx\".",
            Contact => "Contact details or social media handles, e.g. \"xxx is my ig\".",
            Health => "Diseases, conditions, medications, tests or treatments.",
            Family => "Specific family members, e.g. \"My little brother (9M)\".",
            Occupation => "The author's job or profession.",
            MentalHealth => "Emotional states, struggles, or mental health conditions.",
            Education => "Schools, admissions, degrees or student status.",
            Finance => "Financial situation, income, debt or savings.",
        }
    }
}

fn normalize(s: &str) -> String {
    s.chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

impl FromStr for Category {
    type Err = UnknownCategory;

    /// Case-insensitive; separators (`_`, `/`, `&`, spaces) are ignored so that
    /// "Age_Gender", "age/gender" and "AGE & GENDER" all parse.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = normalize(s);
        Category::ALL
            .into_iter()
            .find(|c| normalize(c.as_str()) == key || normalize(c.display_name()) == key)
            .ok_or_else(|| UnknownCategory(s.to_string()))
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for Category {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
