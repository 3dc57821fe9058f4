//! Prompt corpora for the temporal and spatial reasoning tasks.
//!
//! Each record holds three context sentences (a name, an action and one
//! temporal or geographic expression each) followed by a continuation cue
//! whose correct completion is one of the three names.

pub mod data;

use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Read, Write};
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SmdsError};
use crate::geometry::{geo_distance, DistanceKind, DistanceSpec, GeoPoint, LabelRange, RawLabel};
use data::Unit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Date,
    DateSeason,
    DateTemperature,
    Duration,
    Notable,
    Periodic,
    TimeOfDay,
    TimeOfDayPhase,
    Cities,
}

impl Task {
    pub const ALL: [Task; 9] = [
        Task::Date,
        Task::DateSeason,
        Task::DateTemperature,
        Task::Duration,
        Task::Notable,
        Task::Periodic,
        Task::TimeOfDay,
        Task::TimeOfDayPhase,
        Task::Cities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Task::Date => "date",
            Task::DateSeason => "date_season",
            Task::DateTemperature => "date_temperature",
            Task::Duration => "duration",
            Task::Notable => "notable",
            Task::Periodic => "periodic",
            Task::TimeOfDay => "time_of_day",
            Task::TimeOfDayPhase => "time_of_day_phase",
            Task::Cities => "cities",
        }
    }

    /// Declared range of the task's scalar label, for tasks that have one.
    ///
    /// Day-of-year and minute ranges extend one step past the last value so
    /// the cycle closes between the last and first day (or minute).
    pub fn label_range(self) -> Option<LabelRange> {
        match self {
            Task::Date => Some(LabelRange::new(1.0, 366.0)),
            Task::Duration => Some(LabelRange::new(1.0, 1461.0)),
            Task::Notable => Some(LabelRange::new(1900.0, 2000.0)),
            Task::Periodic => Some(LabelRange::new(1.0, 2192.0)),
            Task::TimeOfDay => Some(LabelRange::new(0.0, 1440.0)),
            _ => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = SmdsError;

    fn from_str(s: &str) -> Result<Self> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Task::ALL.iter().map(|t| t.name()).collect();
                SmdsError::InvalidInput(format!(
                    "unknown task `{s}` (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

const MONTHS: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];
const MONTH_DAYS: [u32; 12] = [31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31];
const MINUTES_PER_DAY: u32 = 1440;

/// 1-based day of a non-leap year.
pub fn day_of_year(month: u32, day: u32) -> Result<u32> {
    if !(1..=12).contains(&month) || day == 0 || day > MONTH_DAYS[month as usize - 1] {
        return Err(SmdsError::InvalidInput(format!(
            "no such date: month {month}, day {day}"
        )));
    }
    Ok(MONTH_DAYS[..month as usize - 1].iter().sum::<u32>() + day)
}

/// `(month, day)` of a 1-based day of a non-leap year.
pub fn month_day(doy: u32) -> (u32, u32) {
    assert!((1..=365).contains(&doy), "day of year {doy} out of range");
    let mut rest = doy;
    for (m, len) in MONTH_DAYS.iter().enumerate() {
        if rest <= *len {
            return (m as u32 + 1, rest);
        }
        rest -= len;
    }
    unreachable!()
}

fn ordinal(n: u32) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

fn date_expression(doy: u32) -> String {
    let (m, d) = month_day(doy);
    format!("on the {} of {}", ordinal(d), MONTHS[m as usize - 1])
}

/// Meteorological season of a day of the year.
pub fn season_of(doy: u32) -> &'static str {
    match month_day(doy).0 {
        12 | 1 | 2 => "winter",
        3..=5 => "spring",
        6..=8 => "summer",
        _ => "fall",
    }
}

/// `warm` for May to September, `cold` for November to March, none for
/// April and October.
pub fn temperature_of(doy: u32) -> Option<&'static str> {
    match month_day(doy).0 {
        5..=9 => Some("warm"),
        11 | 12 | 1..=3 => Some("cold"),
        _ => None,
    }
}

/// Phase of the day for minutes since midnight.
pub fn phase_of(minutes: u32) -> &'static str {
    match minutes {
        300..=719 => "morning",
        720..=1019 => "afternoon",
        1020..=1319 => "evening",
        _ => "night",
    }
}

/// Length in days: weeks are 7 days, months 30.4375 and years 365.25, both
/// rounded to whole days.
pub fn unit_days(k: u32, unit: Unit) -> u32 {
    match unit {
        Unit::Day => k,
        Unit::Week => 7 * k,
        Unit::Month => (30.4375 * k as f64).round() as u32,
        Unit::Year => (365.25 * k as f64).round() as u32,
    }
}

fn unit_word(unit: Unit) -> &'static str {
    match unit {
        Unit::Day => "day",
        Unit::Week => "week",
        Unit::Month => "month",
        Unit::Year => "year",
    }
}

fn duration_expression(k: u32, unit: Unit) -> String {
    let word = unit_word(unit);
    if k == 1 {
        format!("1 {word}")
    } else {
        format!("{k} {word}s")
    }
}

fn frequency_expression(k: u32, unit: Unit) -> String {
    const WORDS: [&str; 7] = ["", "", "two", "three", "four", "five", "six"];
    let word = unit_word(unit);
    match k {
        1 => format!("every {word}"),
        2..=6 => format!("every {} {word}s", WORDS[k as usize]),
        _ => format!("every {k} {word}s"),
    }
}

fn clock(minutes: u32) -> String {
    format!("{}:{:02}", minutes / 60, minutes % 60)
}

fn phase_phrase(phase: &str) -> String {
    if phase == "night" {
        "at night".into()
    } else {
        format!("in the {phase}")
    }
}

/// The quantity an entity's expression refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantity {
    DayOfYear {
        day: u32,
    },
    Duration {
        start_day: u32,
        days: u32,
        end_day: u32,
    },
    Event {
        year: i32,
        month: u32,
        day: u32,
    },
    Period {
        days: u32,
    },
    Minutes {
        minutes: u32,
    },
    Location {
        city: String,
        country: String,
        lat: f64,
        lon: f64,
    },
}

/// One of the three people in a prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub expression: String,
    pub quantity: Quantity,
}

/// What the continuation asks about, beyond the entities themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    /// The current time in the time-of-day task.
    Reference { minutes: u32 },
    /// The class named by a classification continuation.
    Class { class: String },
    /// The person whose neighbour is asked for.
    Person { name: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameMention {
    pub name: String,
    pub start: usize,
    pub end: usize,
}

/// Character offsets into `text` (Unicode scalar values, not bytes).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteHints {
    /// Last character of the answer entity's expression.
    pub te: usize,
    /// Last character of each entity's expression, in entity order.
    pub te_all: Vec<usize>,
    /// Last character of the prompt.
    pub lp: usize,
    /// Every name mention in text order; `end` is exclusive.
    pub names: Vec<NameMention>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub task: Task,
    pub seed: u64,
    pub index: usize,
    pub text: String,
    pub answer: String,
    pub answer_index: usize,
    pub labels: Vec<Entity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub query: Option<Query>,
    pub site_hints: SiteHints,
    /// Set on every record of a corpus that had to repeat prompts.
    #[serde(default)]
    pub with_replacement: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct City {
    pub city: String,
    pub country: String,
    pub lat: f64,
    pub lon: f64,
    pub population: u64,
}

/// Reads a city table with columns city,country,lat,lon,population.
///
/// US and Canadian cities are kept only above 100000 inhabitants; other rows
/// are taken as prominent and kept.
pub fn load_cities<R: Read>(input: R) -> Result<Vec<City>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut cities = Vec::new();
    for (i, row) in reader.deserialize::<City>().enumerate() {
        let city = row?;
        let p = GeoPoint::new(city.lat, city.lon);
        if !(-90.0..=90.0).contains(&p.lat) || !(p.lon > -180.0 && p.lon <= 180.0) {
            return Err(SmdsError::InvalidInput(format!(
                "city row {}: coordinates ({}, {}) out of range",
                i + 1,
                p.lat,
                p.lon
            )));
        }
        let north_america = matches!(city.country.as_str(), "United States" | "Canada");
        if !north_america || city.population > 100_000 {
            cities.push(city);
        }
    }
    Ok(cities)
}

pub fn bundled_cities() -> Vec<City> {
    load_cities(data::CITIES_CSV.as_bytes()).expect("bundled city table is valid")
}

/// Name and city pools to draw from.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSources {
    pub names: Vec<String>,
    pub cities: Vec<City>,
}

impl Default for PromptSources {
    fn default() -> Self {
        PromptSources {
            names: data::NAMES.iter().map(|s| s.to_string()).collect(),
            cities: bundled_cities(),
        }
    }
}

impl PromptSources {
    fn validate(&self, task: Task) -> Result<()> {
        let distinct: HashSet<&String> = self.names.iter().collect();
        if distinct.len() < 3 {
            return Err(SmdsError::InvalidInput(
                "need at least 3 distinct names".into(),
            ));
        }
        if let Some(bad) = self
            .names
            .iter()
            .find(|n| n.is_empty() || n.contains(char::is_whitespace))
        {
            return Err(SmdsError::InvalidInput(format!(
                "name `{bad}` is not a single word"
            )));
        }
        if task == Task::Cities && self.cities.len() < 3 {
            return Err(SmdsError::InvalidInput(
                "cities task needs at least 3 cities".into(),
            ));
        }
        Ok(())
    }
}

/// Index of the unique correct entity, or `None` when the entities do not
/// determine one.
pub fn answer_of(task: Task, entities: &[Entity], query: Option<&Query>) -> Option<usize> {
    fn unique_min<K: PartialOrd + Copy>(keys: &[K]) -> Option<usize> {
        let (best, key) = keys
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).expect("comparable keys"))?;
        let ties = keys.iter().filter(|k| !(*k > key || *k < key)).count();
        (ties == 1).then_some(best)
    }
    fn unique_member(classes: &[Option<&str>], target: &str) -> Option<usize> {
        let hits: Vec<usize> = (0..classes.len())
            .filter(|&i| classes[i] == Some(target))
            .collect();
        (hits.len() == 1).then(|| hits[0])
    }
    let target = || match query {
        Some(Query::Class { class }) => Some(class.as_str()),
        _ => None,
    };
    match task {
        Task::Date | Task::DateSeason | Task::DateTemperature => {
            let days: Vec<u32> = entities
                .iter()
                .map(|e| match e.quantity {
                    Quantity::DayOfYear { day } => Some(day),
                    _ => None,
                })
                .collect::<Option<_>>()?;
            match task {
                Task::Date => unique_min(&days),
                Task::DateSeason => {
                    let classes: Vec<_> = days.iter().map(|d| Some(season_of(*d))).collect();
                    unique_member(&classes, target()?)
                }
                _ => {
                    let classes: Vec<_> = days.iter().map(|d| temperature_of(*d)).collect();
                    unique_member(&classes, target()?)
                }
            }
        }
        Task::Duration => {
            let ends: Vec<u32> = entities
                .iter()
                .map(|e| match e.quantity {
                    Quantity::Duration { end_day, .. } => Some(end_day),
                    _ => None,
                })
                .collect::<Option<_>>()?;
            unique_min(&ends)
        }
        Task::Notable => {
            let dates: Vec<(i32, u32, u32)> = entities
                .iter()
                .map(|e| match e.quantity {
                    Quantity::Event { year, month, day } => Some((year, month, day)),
                    _ => None,
                })
                .collect::<Option<_>>()?;
            unique_min(&dates)
        }
        Task::Periodic => {
            let periods: Vec<u32> = entities
                .iter()
                .map(|e| match e.quantity {
                    Quantity::Period { days } => Some(days),
                    _ => None,
                })
                .collect::<Option<_>>()?;
            unique_min(&periods)
        }
        Task::TimeOfDay | Task::TimeOfDayPhase => {
            let minutes: Vec<u32> = entities
                .iter()
                .map(|e| match e.quantity {
                    Quantity::Minutes { minutes } => Some(minutes),
                    _ => None,
                })
                .collect::<Option<_>>()?;
            if task == Task::TimeOfDayPhase {
                let classes: Vec<_> = minutes.iter().map(|m| Some(phase_of(*m))).collect();
                return unique_member(&classes, target()?);
            }
            let now = match query {
                Some(Query::Reference { minutes }) => *minutes,
                _ => return None,
            };
            // Minutes since each action; an action happening right now is
            // not in the past.
            let elapsed: Vec<u32> = minutes
                .iter()
                .map(|m| (now + MINUTES_PER_DAY - m) % MINUTES_PER_DAY)
                .collect();
            if elapsed.contains(&0) {
                return None;
            }
            unique_min(&elapsed)
        }
        Task::Cities => {
            let person = match query {
                Some(Query::Person { name }) => name,
                _ => return None,
            };
            let q = entities.iter().position(|e| &e.name == person)?;
            let point = |e: &Entity| match e.quantity {
                Quantity::Location { lat, lon, .. } => Some(GeoPoint::new(lat, lon)),
                _ => None,
            };
            let origin = point(&entities[q])?;
            let spec = DistanceSpec::new(DistanceKind::GeoGeodesic);
            let mut others = Vec::new();
            for (i, e) in entities.iter().enumerate() {
                if i != q {
                    others.push((i, geo_distance(&spec, origin, point(e)?).ok()?));
                }
            }
            let dists: Vec<f64> = others.iter().map(|o| o.1).collect();
            unique_min(&dists).map(|k| others[k].0)
        }
    }
}

struct TextBuilder {
    text: String,
    len: usize,
    names: Vec<NameMention>,
    te: Vec<usize>,
}

impl TextBuilder {
    fn new() -> Self {
        TextBuilder {
            text: String::new(),
            len: 0,
            names: Vec::new(),
            te: Vec::new(),
        }
    }

    fn push(&mut self, s: &str) {
        self.text.push_str(s);
        self.len += s.chars().count();
    }

    fn name(&mut self, name: &str) {
        let start = self.len;
        self.push(name);
        self.names.push(NameMention {
            name: name.to_string(),
            start,
            end: self.len,
        });
    }

    /// Appends the expression the entity's label refers to.
    fn expression(&mut self, s: &str) {
        self.push(s);
        self.te.push(self.len - 1);
    }
}

struct Draft {
    text: String,
    entities: Vec<Entity>,
    answer_index: usize,
    query: Option<Query>,
    te_all: Vec<usize>,
    lp: usize,
    names: Vec<NameMention>,
}

fn pick<'a, T>(items: &'a [T], rng: &mut ChaCha8Rng) -> &'a T {
    items.choose(rng).expect("non-empty pool")
}

fn uniform_day(rng: &mut ChaCha8Rng) -> u32 {
    rng.random_range(1..=365)
}

/// One attempt at a record; `None` when the draw has no unique answer.
fn draw(task: Task, rng: &mut ChaCha8Rng, sources: &PromptSources) -> Option<Draft> {
    let names: Vec<&String> = sources.names.choose_multiple(rng, 3).collect();
    let mut b = TextBuilder::new();
    let mut entities = Vec::with_capacity(3);
    let sentence = |b: &mut TextBuilder, i: usize, before: &str, expr: &str, after: &str| {
        if i > 0 {
            b.push(" ");
        }
        b.name(names[i]);
        b.push(before);
        b.expression(expr);
        b.push(after);
    };

    let query;
    match task {
        Task::Date | Task::DateSeason | Task::DateTemperature => {
            let action = *pick(data::DATE_ACTIONS, rng);
            for i in 0..3 {
                let day = loop {
                    let d = uniform_day(rng);
                    if task != Task::DateTemperature || temperature_of(d).is_some() {
                        break d;
                    }
                };
                let expr = date_expression(day);
                sentence(&mut b, i, &format!(" {action} "), &expr, ".");
                entities.push(Entity {
                    name: names[i].clone(),
                    expression: expr,
                    quantity: Quantity::DayOfYear { day },
                });
            }
            let days: Vec<u32> = entities
                .iter()
                .map(|e| match e.quantity {
                    Quantity::DayOfYear { day } => day,
                    _ => unreachable!(),
                })
                .collect();
            match task {
                Task::Date => {
                    query = None;
                    b.push(&format!(" The first person that {action} was"));
                }
                Task::DateSeason => {
                    let class =
                        pick_unique_class(days.iter().map(|d| season_of(*d)).collect(), rng)?;
                    b.push(&format!(" The only person that {action} in {class} is"));
                    query = Some(Query::Class {
                        class: class.into(),
                    });
                }
                _ => {
                    let classes = days
                        .iter()
                        .map(|d| temperature_of(*d).expect("sampled warm or cold"))
                        .collect();
                    let class = pick_unique_class(classes, rng)?;
                    b.push(&format!(
                        " The only person that {action} in a {class} month is"
                    ));
                    query = Some(Query::Class {
                        class: class.into(),
                    });
                }
            }
        }
        Task::Duration => {
            let (phrase, link, noun) = *pick(data::DURATION_ACTIONS, rng);
            for i in 0..3 {
                let start = uniform_day(rng);
                let (k, unit) = *pick(data::DURATIONS, rng);
                let days = unit_days(k, unit);
                let start_expr = date_expression(start);
                let dur = duration_expression(k, unit);
                sentence(
                    &mut b,
                    i,
                    &format!(" {phrase} {start_expr} {link} "),
                    &dur,
                    ".",
                );
                entities.push(Entity {
                    name: names[i].clone(),
                    expression: format!("{start_expr} {link} {dur}"),
                    quantity: Quantity::Duration {
                        start_day: start,
                        days,
                        end_day: start + days,
                    },
                });
            }
            b.push(&format!(" The person whose {noun} ends first is"));
            query = None;
        }
        Task::Notable => {
            let events: Vec<_> = data::NOTABLE_EVENTS.choose_multiple(rng, 3).collect();
            for (i, (event, year, month, day)) in events.into_iter().enumerate() {
                let expr = format!("on the day {event}");
                sentence(&mut b, i, " was born ", &expr, ".");
                entities.push(Entity {
                    name: names[i].clone(),
                    expression: expr,
                    quantity: Quantity::Event {
                        year: *year,
                        month: *month,
                        day: *day,
                    },
                });
            }
            b.push(" The oldest is");
            query = None;
        }
        Task::Periodic => {
            let (action, lo, hi) = *pick(data::PERIODIC_ACTIONS, rng);
            let allowed: Vec<(u32, Unit)> = data::FREQUENCIES
                .iter()
                .copied()
                .filter(|(k, u)| (lo..=hi).contains(&unit_days(*k, *u)))
                .collect();
            for i in 0..3 {
                let (k, unit) = *pick(&allowed, rng);
                let expr = frequency_expression(k, unit);
                sentence(&mut b, i, &format!(" {action} "), &expr, ".");
                entities.push(Entity {
                    name: names[i].clone(),
                    expression: expr,
                    quantity: Quantity::Period {
                        days: unit_days(k, unit),
                    },
                });
            }
            b.push(&format!(" The person who {action} more often is"));
            query = None;
        }
        Task::TimeOfDay | Task::TimeOfDayPhase => {
            let (present, past) = *pick(data::TIME_ACTIONS, rng);
            for i in 0..3 {
                let minutes = 60 * rng.random_range(0..24) + 15 * rng.random_range(0..4);
                let expr = format!("at {}", clock(minutes));
                sentence(&mut b, i, &format!(" {present} "), &expr, ".");
                entities.push(Entity {
                    name: names[i].clone(),
                    expression: expr,
                    quantity: Quantity::Minutes { minutes },
                });
            }
            if task == Task::TimeOfDay {
                let now = rng.random_range(0..MINUTES_PER_DAY);
                b.push(&format!(
                    " It is now {}. The last person who {past} is",
                    clock(now)
                ));
                query = Some(Query::Reference { minutes: now });
            } else {
                let phases = entities
                    .iter()
                    .map(|e| match e.quantity {
                        Quantity::Minutes { minutes } => phase_of(minutes),
                        _ => unreachable!(),
                    })
                    .collect();
                let class = pick_unique_class(phases, rng)?;
                b.push(&format!(
                    " The only person that {present} {} is",
                    phase_phrase(class)
                ));
                query = Some(Query::Class {
                    class: class.into(),
                });
            }
        }
        Task::Cities => {
            let cities: Vec<&City> = sources.cities.choose_multiple(rng, 3).collect();
            for (i, c) in cities.iter().enumerate() {
                sentence(&mut b, i, " lives in ", &c.city, ".");
                entities.push(Entity {
                    name: names[i].clone(),
                    expression: c.city.clone(),
                    quantity: Quantity::Location {
                        city: c.city.clone(),
                        country: c.country.clone(),
                        lat: c.lat,
                        lon: c.lon,
                    },
                });
            }
            let q = rng.random_range(0..3);
            b.push(" The person who lives closest to ");
            b.name(names[q]);
            b.push(" is");
            query = Some(Query::Person {
                name: names[q].clone(),
            });
        }
    }

    let answer_index = answer_of(task, &entities, query.as_ref())?;
    Some(Draft {
        lp: b.len - 1,
        text: b.text,
        entities,
        answer_index,
        query,
        te_all: b.te,
        names: b.names,
    })
}

/// A class held by exactly one entity, chosen uniformly among such classes.
fn pick_unique_class(classes: Vec<&'static str>, rng: &mut ChaCha8Rng) -> Option<&'static str> {
    let mut singles: Vec<&'static str> = classes
        .iter()
        .copied()
        .filter(|c| classes.iter().filter(|o| *o == c).count() == 1)
        .collect();
    singles.sort_unstable();
    singles.choose(rng).copied()
}

const MAX_DRAWS_PER_RECORD: usize = 10_000;
const DUPLICATE_LIMIT: usize = 1_000;

pub fn gen_prompts(task: Task, n: usize, seed: u64) -> Result<Vec<PromptRecord>> {
    gen_prompts_with(task, n, seed, &PromptSources::default())
}

/// Generates `n` distinct records. When the pools cannot supply that many
/// distinct prompts, records repeat and every record is flagged with
/// `with_replacement`.
pub fn gen_prompts_with(
    task: Task,
    n: usize,
    seed: u64,
    sources: &PromptSources,
) -> Result<Vec<PromptRecord>> {
    if n == 0 {
        return Err(SmdsError::InvalidInput("n must be at least 1".into()));
    }
    sources.validate(task)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::new();
    let mut with_replacement = false;
    let mut duplicates = 0;
    let mut records = Vec::with_capacity(n);
    while records.len() < n {
        let draft = (0..MAX_DRAWS_PER_RECORD)
            .find_map(|_| draw(task, &mut rng, sources))
            .ok_or_else(|| {
                SmdsError::InvalidInput(format!(
                    "could not draw a {task} prompt with a unique answer in {MAX_DRAWS_PER_RECORD} attempts"
                ))
            })?;
        if !with_replacement && !seen.insert(draft.text.clone()) {
            duplicates += 1;
            if duplicates >= DUPLICATE_LIMIT {
                with_replacement = true;
            }
            continue;
        }
        duplicates = 0;
        let answer = draft.entities[draft.answer_index].name.clone();
        records.push(PromptRecord {
            task,
            seed,
            index: records.len(),
            site_hints: SiteHints {
                te: draft.te_all[draft.answer_index],
                te_all: draft.te_all,
                lp: draft.lp,
                names: draft.names,
            },
            text: draft.text,
            answer,
            answer_index: draft.answer_index,
            labels: draft.entities,
            query: draft.query,
            with_replacement: false,
        });
    }
    if with_replacement {
        for r in &mut records {
            r.with_replacement = true;
        }
    }
    Ok(records)
}

/// The correct entity's quantity under a task's labeling convention.
pub fn label_of(record: &PromptRecord, convention: Task) -> Result<RawLabel> {
    let entity = record.labels.get(record.answer_index).ok_or_else(|| {
        SmdsError::InvalidLabel(format!(
            "record {} has no entity at answer index {}",
            record.index, record.answer_index
        ))
    })?;
    let label = match (convention, &entity.quantity) {
        (Task::Date, Quantity::DayOfYear { day }) => Some(RawLabel::Scalar(*day as f64)),
        (Task::DateSeason, Quantity::DayOfYear { day }) => {
            Some(RawLabel::Class(season_of(*day).into()))
        }
        (Task::DateTemperature, Quantity::DayOfYear { day }) => {
            temperature_of(*day).map(|c| RawLabel::Class(c.into()))
        }
        (Task::Duration, Quantity::Duration { days, .. }) => Some(RawLabel::Scalar(*days as f64)),
        (Task::Notable, Quantity::Event { year, .. }) => Some(RawLabel::Scalar(*year as f64)),
        (Task::Periodic, Quantity::Period { days }) => Some(RawLabel::Scalar(*days as f64)),
        (Task::TimeOfDay, Quantity::Minutes { minutes }) => Some(RawLabel::Scalar(*minutes as f64)),
        (Task::TimeOfDayPhase, Quantity::Minutes { minutes }) => {
            Some(RawLabel::Class(phase_of(*minutes).into()))
        }
        (Task::Cities, Quantity::Location { lat, lon, .. }) => {
            Some(RawLabel::Geo(GeoPoint::new(*lat, *lon)))
        }
        _ => None,
    };
    label.ok_or_else(|| {
        SmdsError::InvalidLabel(format!(
            "record {} ({}) has no {convention} label",
            record.index, record.task
        ))
    })
}

pub fn write_jsonl<W: Write>(records: &[PromptRecord], mut out: W) -> Result<()> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| SmdsError::InvalidInput(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| SmdsError::io("<jsonl>", e))?;
    }
    out.flush().map_err(|e| SmdsError::io("<jsonl>", e))
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<PromptRecord>> {
    let mut records = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| SmdsError::io("<jsonl>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| SmdsError::InvalidInput(format!("prompt line {}: {e}", i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn calendar() {
        assert_eq!(day_of_year(3, 10).unwrap(), 69);
        assert_eq!(day_of_year(1, 1).unwrap(), 1);
        assert_eq!(day_of_year(12, 31).unwrap(), 365);
        assert!(day_of_year(2, 29).is_err());
        for d in 1..=365 {
            let (m, day) = month_day(d);
            assert_eq!(day_of_year(m, day).unwrap(), d);
        }
        assert_eq!(date_expression(16), "on the 16th of January");
        assert_eq!(ordinal(22), "22nd");
        assert_eq!(ordinal(11), "11th");
        assert_eq!(ordinal(31), "31st");
        assert_eq!(clock(975), "16:15");
        assert_eq!(clock(58), "0:58");
    }

    #[test]
    fn class_boundaries() {
        assert_eq!(season_of(day_of_year(3, 1).unwrap()), "spring");
        assert_eq!(season_of(day_of_year(2, 28).unwrap()), "winter");
        assert_eq!(season_of(day_of_year(12, 1).unwrap()), "winter");
        assert_eq!(season_of(day_of_year(9, 1).unwrap()), "fall");
        assert_eq!(temperature_of(day_of_year(5, 1).unwrap()), Some("warm"));
        assert_eq!(temperature_of(day_of_year(10, 15).unwrap()), None);
        assert_eq!(temperature_of(day_of_year(4, 15).unwrap()), None);
        assert_eq!(temperature_of(day_of_year(3, 31).unwrap()), Some("cold"));
        assert_eq!(phase_of(5 * 60), "morning");
        assert_eq!(phase_of(12 * 60 - 1), "morning");
        assert_eq!(phase_of(12 * 60), "afternoon");
        assert_eq!(phase_of(17 * 60), "evening");
        assert_eq!(phase_of(22 * 60), "night");
        assert_eq!(phase_of(4 * 60 + 59), "night");
    }

    #[test]
    fn durations() {
        assert_eq!(data::DURATIONS.len(), 38);
        assert_eq!(unit_days(1, Unit::Year), 365);
        assert_eq!(unit_days(4, Unit::Year), 1461);
        assert_eq!(unit_days(1, Unit::Month), 30);
        assert_eq!(unit_days(2, Unit::Week), 14);
        assert_eq!(duration_expression(1, Unit::Day), "1 day");
        assert_eq!(duration_expression(3, Unit::Month), "3 months");
        assert_eq!(frequency_expression(1, Unit::Day), "every day");
        assert_eq!(frequency_expression(6, Unit::Year), "every six years");
        let max = data::DURATIONS
            .iter()
            .map(|(k, u)| unit_days(*k, *u))
            .max()
            .unwrap();
        assert_eq!(
            Some(max as f64),
            Task::Duration.label_range().map(|r| r.max)
        );
        let max = data::FREQUENCIES
            .iter()
            .map(|(k, u)| unit_days(*k, *u))
            .max()
            .unwrap();
        assert_eq!(
            Some(max as f64),
            Task::Periodic.label_range().map(|r| r.max)
        );
    }

    #[test]
    fn every_periodic_action_has_three_frequencies() {
        for (action, lo, hi) in data::PERIODIC_ACTIONS {
            let n = data::FREQUENCIES
                .iter()
                .filter(|(k, u)| (*lo..=*hi).contains(&unit_days(*k, *u)))
                .count();
            assert!(n >= 3, "{action}");
        }
    }

    #[test]
    fn notable_events_in_range() {
        for (event, y, m, d) in data::NOTABLE_EVENTS {
            assert!((1900..=2000).contains(y), "{event}");
            assert!(day_of_year(*m, *d).is_ok(), "{event}");
        }
    }

    #[test]
    fn records_are_consistent() {
        for task in Task::ALL {
            let records = gen_prompts(task, 60, 3).unwrap();
            assert_eq!(records.len(), 60);
            for r in &records {
                let text = chars(&r.text);
                assert_eq!(r.labels.len(), 3);
                assert_eq!(r.labels[r.answer_index].name, r.answer);
                assert_eq!(r.site_hints.lp, text.len() - 1);
                assert_eq!(r.site_hints.te, r.site_hints.te_all[r.answer_index]);
                for (e, &te) in r.labels.iter().zip(&r.site_hints.te_all) {
                    let upto: String = text[..=te].iter().collect();
                    assert!(
                        upto.ends_with(&e.expression),
                        "{upto:?} vs {:?}",
                        e.expression
                    );
                }
                for m in &r.site_hints.names {
                    let got: String = text[m.start..m.end].iter().collect();
                    assert_eq!(got, m.name);
                }
                let mentioned: Vec<&str> =
                    r.site_hints.names.iter().map(|m| m.name.as_str()).collect();
                for e in &r.labels {
                    assert!(mentioned.contains(&e.name.as_str()));
                }
                assert!(!r.with_replacement);
            }
        }
    }

    #[test]
    fn example_templates() {
        let r = &gen_prompts(Task::Date, 1, 0).unwrap()[0];
        assert!(r.text.contains(" The first person that "));
        assert!(r.text.ends_with(" was"));
        let r = &gen_prompts(Task::Duration, 1, 0).unwrap()[0];
        assert!(r.text.contains(" ends first is"));
        if let Quantity::Duration {
            start_day,
            days,
            end_day,
        } = r.labels[0].quantity
        {
            assert_eq!(end_day, start_day + days);
        }
        let r = &gen_prompts(Task::TimeOfDay, 1, 0).unwrap()[0];
        assert!(r.text.contains(" It is now "));
    }

    #[test]
    fn ties_have_no_answer() {
        let e = |name: &str| Entity {
            name: name.into(),
            expression: "on the 10th of March".into(),
            quantity: Quantity::DayOfYear { day: 69 },
        };
        let same = [e("Anna"), e("Bob"), e("Emma")];
        assert_eq!(answer_of(Task::Date, &same, None), None);
        let mut later = same.clone();
        later[1].quantity = Quantity::DayOfYear { day: 70 };
        assert_eq!(answer_of(Task::Date, &later, None), None);
        later[0].quantity = Quantity::DayOfYear { day: 71 };
        assert_eq!(answer_of(Task::Date, &later, None), Some(2));
    }

    #[test]
    fn labels_follow_convention() {
        let mut r = gen_prompts(Task::TimeOfDay, 1, 9).unwrap().remove(0);
        r.labels[r.answer_index].quantity = Quantity::Minutes { minutes: 975 };
        assert_eq!(
            label_of(&r, Task::TimeOfDay).unwrap(),
            RawLabel::Scalar(975.0)
        );
        assert_eq!(
            label_of(&r, Task::TimeOfDayPhase).unwrap(),
            RawLabel::Class("afternoon".into())
        );
        assert!(label_of(&r, Task::Date).is_err());

        let mut r = gen_prompts(Task::Date, 1, 9).unwrap().remove(0);
        r.labels[r.answer_index].quantity = Quantity::DayOfYear { day: 69 };
        assert_eq!(label_of(&r, Task::Date).unwrap(), RawLabel::Scalar(69.0));
        assert_eq!(
            label_of(&r, Task::DateSeason).unwrap(),
            RawLabel::Class("spring".into())
        );

        let mut r = gen_prompts(Task::Notable, 1, 9).unwrap().remove(0);
        r.labels[r.answer_index].quantity = Quantity::Event {
            year: 1902,
            month: 5,
            day: 1,
        };
        assert_eq!(
            label_of(&r, Task::Notable).unwrap(),
            RawLabel::Scalar(1902.0)
        );

        let r = gen_prompts(Task::Cities, 1, 9).unwrap().remove(0);
        assert!(matches!(
            label_of(&r, Task::Cities).unwrap(),
            RawLabel::Geo(_)
        ));
        let mut broken = r.clone();
        broken.answer_index = 7;
        assert!(label_of(&broken, Task::Cities).is_err());
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = gen_prompts(Task::Periodic, 20, 5).unwrap();
        assert_eq!(a, gen_prompts(Task::Periodic, 20, 5).unwrap());
        assert_ne!(a, gen_prompts(Task::Periodic, 20, 6).unwrap());
    }

    #[test]
    fn small_pools_fall_back_to_replacement() {
        let sources = PromptSources {
            names: vec!["Anna".into(), "Bob".into(), "Emma".into()],
            cities: bundled_cities().into_iter().take(3).collect(),
        };
        let records = gen_prompts_with(Task::Cities, 200, 1, &sources).unwrap();
        assert_eq!(records.len(), 200);
        assert!(records.iter().all(|r| r.with_replacement));
        let distinct: HashSet<&String> = records.iter().map(|r| &r.text).collect();
        assert!(distinct.len() < 200);
    }

    #[test]
    fn rejects_bad_requests() {
        assert!(gen_prompts(Task::Date, 0, 1).is_err());
        assert!("weather".parse::<Task>().is_err());
        let sources = PromptSources {
            names: vec!["Anna".into(), "Bob".into()],
            cities: Vec::new(),
        };
        assert!(gen_prompts_with(Task::Date, 1, 1, &sources).is_err());
    }

    #[test]
    fn city_filter() {
        let csv = "city,country,lat,lon,population\nSmallville,United States,40.0,-90.0,50000\nLeuven,Belgium,50.88,4.70,100000\nBigtown,Canada,50.0,-100.0,200000\n";
        let cities = load_cities(csv.as_bytes()).unwrap();
        let names: Vec<&str> = cities.iter().map(|c| c.city.as_str()).collect();
        assert_eq!(names, ["Leuven", "Bigtown"]);
        let bad = "city,country,lat,lon,population\nX,Y,95.0,0.0,1\n";
        assert!(load_cities(bad.as_bytes()).is_err());
        assert!(bundled_cities().len() > 100);
    }

    #[test]
    fn jsonl_round_trip() {
        let records = gen_prompts(Task::DateSeason, 5, 2).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&records, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 5);
        let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        for key in ["text", "answer", "labels", "site_hints", "task", "seed"] {
            assert!(first.get(key).is_some(), "{key}");
        }
        assert_eq!(read_jsonl(buf.as_slice()).unwrap(), records);
        assert!(read_jsonl("{not json}\n".as_bytes()).is_err());
    }
}
