//! Questionnaire profiles and their text assembly.
//!
//! A profile is turned into text by concatenating its enabled fields in the
//! order of [`ProfileField::ALL`]. Demographic values follow in key order.
//! List fields contribute one piece per item. Only answers are used; question
//! labels never appear in the output.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use regex::RegexBuilder;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileField {
    Demographics,
    Hobbies,
    FavoriteBooks,
    BookGenres,
    FavoriteMovies,
    MovieGenres,
    FavoriteMusic,
}

impl ProfileField {
    /// Fixed assembly order.
    pub const ALL: [ProfileField; 7] = [
        ProfileField::Demographics,
        ProfileField::Hobbies,
        ProfileField::FavoriteBooks,
        ProfileField::BookGenres,
        ProfileField::FavoriteMovies,
        ProfileField::MovieGenres,
        ProfileField::FavoriteMusic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileField::Demographics => "demographics",
            ProfileField::Hobbies => "hobbies",
            ProfileField::FavoriteBooks => "favorite_books",
            ProfileField::BookGenres => "book_genres",
            ProfileField::FavoriteMovies => "favorite_movies",
            ProfileField::MovieGenres => "movie_genres",
            ProfileField::FavoriteMusic => "favorite_music",
        }
    }

    pub fn is_book_field(self) -> bool {
        matches!(self, ProfileField::FavoriteBooks | ProfileField::BookGenres)
    }
}

impl fmt::Display for ProfileField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProfileField::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::UnknownField(s.to_string()))
    }
}

/// Which fields (and whether entity descriptions) form the profile text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileVariant {
    Full,
    FullPlusEntities,
    NoBookFields,
    DemographicsHobbiesOnly,
}

impl ProfileVariant {
    pub const ALL: [ProfileVariant; 4] = [
        ProfileVariant::Full,
        ProfileVariant::FullPlusEntities,
        ProfileVariant::NoBookFields,
        ProfileVariant::DemographicsHobbiesOnly,
    ];

    pub fn admits(self, field: ProfileField) -> bool {
        match self {
            ProfileVariant::Full | ProfileVariant::FullPlusEntities => true,
            ProfileVariant::NoBookFields => !field.is_book_field(),
            ProfileVariant::DemographicsHobbiesOnly => {
                matches!(field, ProfileField::Demographics | ProfileField::Hobbies)
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProfileVariant::Full => "full",
            ProfileVariant::FullPlusEntities => "full_plus_entities",
            ProfileVariant::NoBookFields => "no_book_fields",
            ProfileVariant::DemographicsHobbiesOnly => "demographics_hobbies_only",
        }
    }
}

impl fmt::Display for ProfileVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProfileVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['-', '+'], "_");
        match norm.as_str() {
            "full" | "profile" => Ok(ProfileVariant::Full),
            "full_plus_entities" | "full_entities" | "profile_plus_entities" | "entities" => {
                Ok(ProfileVariant::FullPlusEntities)
            }
            "no_book_fields" | "no_books" => Ok(ProfileVariant::NoBookFields),
            "demographics_hobbies_only" | "demographics_hobbies" => {
                Ok(ProfileVariant::DemographicsHobbiesOnly)
            }
            _ => Err(Error::InvalidConfig(format!("unknown profile variant `{s}`"))),
        }
    }
}

/// A linked entity mention and its first-paragraph description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityDescription {
    pub owner_field: String,
    pub mention: String,
    pub entity_id: String,
    pub description: String,
}

impl EntityDescription {
    pub fn owner(&self) -> Result<ProfileField> {
        self.owner_field.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserProfile {
    pub user_id: String,
    #[serde(default)]
    pub demographics: BTreeMap<String, String>,
    #[serde(default)]
    pub hobbies: String,
    #[serde(default)]
    pub favorite_books: Vec<String>,
    #[serde(default)]
    pub book_genres: Vec<String>,
    #[serde(default)]
    pub favorite_movies: Vec<String>,
    #[serde(default)]
    pub movie_genres: Vec<String>,
    #[serde(default)]
    pub favorite_music: Vec<String>,
    #[serde(default)]
    pub field_enabled: BTreeMap<ProfileField, bool>,
    /// Attached descriptions; these come from the entity-links file and are
    /// not written back to the profiles file.
    #[serde(default)]
    pub entities: Vec<EntityDescription>,
}

impl UserProfile {
    pub fn new(user_id: impl Into<String>) -> Self {
        let mut p = Self {
            user_id: user_id.into(),
            demographics: BTreeMap::new(),
            hobbies: String::new(),
            favorite_books: vec![],
            book_genres: vec![],
            favorite_movies: vec![],
            movie_genres: vec![],
            favorite_music: vec![],
            field_enabled: BTreeMap::new(),
            entities: vec![],
        };
        p.fill_toggles();
        p
    }

    /// Ensures every field has a toggle; missing ones default to enabled.
    pub fn fill_toggles(&mut self) {
        for f in ProfileField::ALL {
            self.field_enabled.entry(f).or_insert(true);
        }
    }

    pub fn is_enabled(&self, field: ProfileField) -> bool {
        self.field_enabled.get(&field).copied().unwrap_or(true)
    }

    pub fn set_enabled(&mut self, field: ProfileField, enabled: bool) {
        self.field_enabled.insert(field, enabled);
    }

    /// Raw answer pieces of one field, in order.
    pub fn field_values(&self, field: ProfileField) -> Vec<&str> {
        fn list(v: &[String]) -> Vec<&str> {
            v.iter().map(String::as_str).collect()
        }
        match field {
            ProfileField::Demographics => self.demographics.values().map(String::as_str).collect(),
            ProfileField::Hobbies => vec![self.hobbies.as_str()],
            ProfileField::FavoriteBooks => list(&self.favorite_books),
            ProfileField::BookGenres => list(&self.book_genres),
            ProfileField::FavoriteMovies => list(&self.favorite_movies),
            ProfileField::MovieGenres => list(&self.movie_genres),
            ProfileField::FavoriteMusic => list(&self.favorite_music),
        }
    }
}

/// Where a piece of profile text (or a scored term) came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TermSource {
    Query,
    ProfileField {
        field: ProfileField,
    },
    EntityDescription {
        entity_id: String,
        owner_field: ProfileField,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileSegment {
    pub source: TermSource,
    pub text: String,
}

/// The profile text split into attributed segments, in assembly order.
pub fn profile_segments(profile: &UserProfile, variant: ProfileVariant) -> Vec<ProfileSegment> {
    let with_entities = variant == ProfileVariant::FullPlusEntities;
    let linked: Vec<(ProfileField, &EntityDescription)> = if with_entities {
        profile
            .entities
            .iter()
            .filter_map(|e| e.owner().ok().map(|f| (f, e)))
            .filter(|(f, _)| profile.is_enabled(*f))
            .collect()
    } else {
        vec![]
    };

    let mut segments = Vec::new();
    for field in ProfileField::ALL {
        if !variant.admits(field) || !profile.is_enabled(field) {
            continue;
        }
        let mentions: Vec<&str> = linked
            .iter()
            .filter(|(f, _)| *f == field)
            .map(|(_, e)| e.mention.as_str())
            .collect();
        for value in profile.field_values(field) {
            let text = if mentions.is_empty() {
                value.trim().to_string()
            } else {
                remove_mentions(value, &mentions)
            };
            if !text.is_empty() {
                segments.push(ProfileSegment {
                    source: TermSource::ProfileField { field },
                    text,
                });
            }
        }
    }
    for (owner_field, e) in linked {
        let text = e.description.trim();
        if !text.is_empty() {
            segments.push(ProfileSegment {
                source: TermSource::EntityDescription {
                    entity_id: e.entity_id.clone(),
                    owner_field,
                },
                text: text.to_string(),
            });
        }
    }
    segments
}

/// Space-joined profile text for `variant`, honoring revoked fields.
pub fn profile_text(profile: &UserProfile, variant: ProfileVariant) -> String {
    profile_segments(profile, variant)
        .into_iter()
        .map(|s| s.text)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Deletes whole-word, case-insensitive occurrences of each mention.
fn remove_mentions(value: &str, mentions: &[&str]) -> String {
    let mut out = value.to_string();
    for m in mentions {
        let m = m.trim();
        if m.is_empty() {
            continue;
        }
        let word = |c: char| c.is_alphanumeric() || c == '_';
        let lead = if m.starts_with(word) { r"\b" } else { "" };
        let trail = if m.ends_with(word) { r"\b" } else { "" };
        let pattern = format!("{lead}{}{trail}", regex::escape(m));
        let re = RegexBuilder::new(&pattern)
            .case_insensitive(true)
            .build()
            .expect("escaped mention is a valid pattern");
        out = re.replace_all(&out, " ").into_owned();
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileRecord {
    user_id: Option<String>,
    #[serde(default)]
    demographics: BTreeMap<String, String>,
    #[serde(default)]
    hobbies: String,
    #[serde(default)]
    favorite_books: Vec<String>,
    #[serde(default)]
    book_genres: Vec<String>,
    #[serde(default)]
    favorite_movies: Vec<String>,
    #[serde(default)]
    movie_genres: Vec<String>,
    #[serde(default)]
    favorite_music: Vec<String>,
    #[serde(default)]
    field_enabled: BTreeMap<ProfileField, bool>,
}

#[derive(Serialize)]
struct ProfileRecordOut<'a> {
    user_id: &'a str,
    demographics: &'a BTreeMap<String, String>,
    hobbies: &'a str,
    favorite_books: &'a [String],
    book_genres: &'a [String],
    favorite_movies: &'a [String],
    movie_genres: &'a [String],
    favorite_music: &'a [String],
    field_enabled: &'a BTreeMap<ProfileField, bool>,
}

/// Reads the profiles file. Every field toggle defaults to enabled.
pub fn load_profiles(path: &Path) -> Result<Vec<UserProfile>> {
    let records: Vec<(usize, ProfileRecord)> = io::read_jsonl(path)?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for (line, r) in records {
        let user_id = match r.user_id {
            Some(id) if !id.is_empty() => id,
            _ => return Err(Error::parse(path, line, "missing user_id")),
        };
        if !seen.insert(user_id.clone()) {
            return Err(Error::DuplicateUser(user_id));
        }
        let mut p = UserProfile {
            user_id,
            demographics: r.demographics,
            hobbies: r.hobbies,
            favorite_books: r.favorite_books,
            book_genres: r.book_genres,
            favorite_movies: r.favorite_movies,
            movie_genres: r.movie_genres,
            favorite_music: r.favorite_music,
            field_enabled: r.field_enabled,
            entities: vec![],
        };
        p.fill_toggles();
        out.push(p);
    }
    Ok(out)
}

/// Profiles-file serialization (entity attachments excluded).
pub fn profiles_to_jsonl<'a>(profiles: impl IntoIterator<Item = &'a UserProfile>) -> Result<String> {
    io::to_jsonl(profiles.into_iter().map(|p| ProfileRecordOut {
        user_id: &p.user_id,
        demographics: &p.demographics,
        hobbies: &p.hobbies,
        favorite_books: &p.favorite_books,
        book_genres: &p.book_genres,
        favorite_movies: &p.favorite_movies,
        movie_genres: &p.movie_genres,
        favorite_music: &p.favorite_music,
        field_enabled: &p.field_enabled,
    }))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityLink {
    pub user_id: String,
    pub owner_field: String,
    pub mention: String,
    pub entity_id: String,
    pub description: String,
}

impl From<EntityLink> for EntityDescription {
    fn from(l: EntityLink) -> Self {
        Self {
            owner_field: l.owner_field,
            mention: l.mention,
            entity_id: l.entity_id,
            description: l.description,
        }
    }
}

/// Reads the entity-descriptions file, grouped by user in file order.
pub fn load_entities(path: &Path) -> Result<BTreeMap<String, Vec<EntityDescription>>> {
    let records: Vec<(usize, EntityLink)> = io::read_jsonl(path)?;
    let mut out: BTreeMap<String, Vec<EntityDescription>> = BTreeMap::new();
    for (line, link) in records {
        if link.description.trim().is_empty() {
            return Err(Error::parse(path, line, "empty entity description"));
        }
        link.owner_field
            .parse::<ProfileField>()
            .map_err(|e| Error::parse(path, line, e))?;
        out.entry(link.user_id.clone()).or_default().push(link.into());
    }
    Ok(out)
}

/// Returns `profile` with `descriptions` appended to its attachments.
pub fn attach_entities(
    mut profile: UserProfile,
    descriptions: impl IntoIterator<Item = EntityDescription>,
) -> Result<UserProfile> {
    for d in descriptions {
        d.owner()?;
        if d.description.trim().is_empty() {
            return Err(Error::InvalidInput(format!(
                "entity `{}` has an empty description",
                d.entity_id
            )));
        }
        profile.entities.push(d);
    }
    Ok(profile)
}

/// Loads profiles and, when given, attaches entity descriptions. Links for
/// unknown users are rejected.
pub fn load_profiles_with_entities(
    profiles: &Path,
    entities: Option<&Path>,
) -> Result<Vec<UserProfile>> {
    let mut list = load_profiles(profiles)?;
    if let Some(path) = entities {
        let mut links = load_entities(path)?;
        for p in list.iter_mut() {
            if let Some(ds) = links.remove(&p.user_id) {
                *p = attach_entities(std::mem::replace(p, UserProfile::new("")), ds)?;
            }
        }
        if let Some(user) = links.keys().next() {
            return Err(Error::UnknownUser(user.clone()));
        }
    }
    Ok(list)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;
    use proptest::prelude::*;
    use std::io::Write;

    fn sample() -> UserProfile {
        let mut p = UserProfile::new("u1");
        p.demographics.insert("location".into(), "New York".into());
        p.hobbies = "hiking".into();
        p.favorite_books = vec!["Dune".into()];
        p
    }

    fn dune() -> EntityDescription {
        EntityDescription {
            owner_field: "favorite_books".into(),
            mention: "Dune".into(),
            entity_id: "Q190192".into(),
            description: "desert planet saga".into(),
        }
    }

    #[test]
    fn full_text() {
        assert_eq!(profile_text(&sample(), ProfileVariant::Full), "New York hiking Dune");
    }

    #[test]
    fn demographics_hobbies_only() {
        assert_eq!(
            profile_text(&sample(), ProfileVariant::DemographicsHobbiesOnly),
            "New York hiking"
        );
    }

    #[test]
    fn entities_replace_mentions() {
        let p = attach_entities(sample(), vec![dune()]).unwrap();
        let text = profile_text(&p, ProfileVariant::FullPlusEntities);
        assert!(text.contains("desert planet saga"));
        assert!(!text.contains("Dune"));
        assert_eq!(text, "New York hiking desert planet saga");
        // other variants keep the raw favorites
        assert_eq!(profile_text(&p, ProfileVariant::Full), "New York hiking Dune");
    }

    #[test]
    fn mention_removal_is_word_bounded() {
        assert_eq!(remove_mentions("Dune and Dunes; dune", &["Dune"]), "and Dunes;");
        assert_eq!(
            remove_mentions("Love poems from Pablo Neruda", &["love poems from pablo neruda"]),
            ""
        );
    }

    #[test]
    fn attach_validation() {
        let p = attach_entities(sample(), vec![]).unwrap();
        assert_eq!(p, sample());
        let mut bad = dune();
        bad.owner_field = "favorite_cars".into();
        assert!(matches!(
            attach_entities(sample(), vec![bad]),
            Err(Error::UnknownField(_))
        ));
    }

    #[test]
    fn revoked_field_disappears() {
        let mut p = attach_entities(sample(), vec![dune()]).unwrap();
        p.set_enabled(ProfileField::FavoriteBooks, false);
        for v in ProfileVariant::ALL {
            let text = profile_text(&p, v);
            assert!(!text.contains("Dune"), "{v}");
            assert!(!text.contains("desert"), "{v}");
        }
    }

    #[test]
    fn load_profiles_defaults_and_errors() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, r#"{{"user_id":"u1","hobbies":"reading hiking","favorite_books":["Dune"]}}"#).unwrap();
        let ps = load_profiles(f.path()).unwrap();
        assert_eq!(ps[0].hobbies, "reading hiking");
        assert!(ps[0].favorite_music.is_empty());
        assert_eq!(ps[0].field_enabled.len(), 7);
        assert!(ps[0].field_enabled.values().all(|e| *e));

        writeln!(f, r#"{{"user_id":"u1"}}"#).unwrap();
        assert!(matches!(load_profiles(f.path()), Err(Error::DuplicateUser(_))));

        let mut g = tempfile::NamedTempFile::new().unwrap();
        writeln!(g, r#"{{"hobbies":"x"}}"#).unwrap();
        assert!(matches!(load_profiles(g.path()), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn profiles_file_roundtrip() {
        let mut p = sample();
        p.set_enabled(ProfileField::Hobbies, false);
        let jsonl = profiles_to_jsonl([&p]).unwrap();
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(jsonl.as_bytes()).unwrap();
        assert_eq!(load_profiles(f.path()).unwrap(), vec![p]);
    }

    #[test]
    fn variant_parsing() {
        for v in ProfileVariant::ALL {
            assert_eq!(v.as_str().parse::<ProfileVariant>().unwrap(), v);
        }
        assert!("nope".parse::<ProfileVariant>().is_err());
    }

    fn words() -> impl Strategy<Value = Vec<String>> {
        prop::collection::vec("[a-h]{2,4}", 0..3)
    }

    prop_compose! {
        fn arb_profile()(hobbies in "[a-h ]{0,12}", books in words(), genres in words(),
                         movies in words(), music in words(), loc in "[a-h]{0,5}",
                         toggles in prop::collection::vec(any::<bool>(), 7)) -> UserProfile {
            let mut p = UserProfile::new("u");
            p.demographics.insert("location".into(), loc);
            p.hobbies = hobbies;
            p.favorite_books = books;
            p.book_genres = genres;
            p.favorite_movies = movies;
            p.favorite_music = music;
            for (f, on) in ProfileField::ALL.into_iter().zip(toggles) {
                p.set_enabled(f, on);
            }
            p
        }
    }

    fn field_tokens(p: &UserProfile, fields: &[ProfileField]) -> HashSet<String> {
        fields
            .iter()
            .flat_map(|f| p.field_values(*f))
            .flat_map(|v| tokenize(v, false).into_vec())
            .collect()
    }

    proptest! {
        #[test]
        fn no_book_fields_drops_book_only_tokens(p in arb_profile()) {
            let book = field_tokens(&p, &[ProfileField::FavoriteBooks, ProfileField::BookGenres]);
            let other: Vec<ProfileField> =
                ProfileField::ALL.into_iter().filter(|f| !f.is_book_field()).collect();
            let other = field_tokens(&p, &other);
            let out: HashSet<String> =
                tokenize(&profile_text(&p, ProfileVariant::NoBookFields), false).into_vec().into_iter().collect();
            for t in book.difference(&other) {
                prop_assert!(!out.contains(t));
            }
        }

        #[test]
        fn disabled_fields_vanish(p in arb_profile()) {
            let enabled: Vec<ProfileField> =
                ProfileField::ALL.into_iter().filter(|f| p.is_enabled(*f)).collect();
            let allowed = field_tokens(&p, &enabled);
            for v in ProfileVariant::ALL {
                for t in tokenize(&profile_text(&p, v), false).iter() {
                    prop_assert!(allowed.contains(t));
                }
            }
        }

        #[test]
        fn plus_entities_without_links_equals_full(p in arb_profile()) {
            prop_assert_eq!(
                profile_text(&p, ProfileVariant::FullPlusEntities),
                profile_text(&p, ProfileVariant::Full)
            );
        }
    }
}
