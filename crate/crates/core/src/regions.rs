//! Country → income group table and named country aggregates.
//!
//! The bundled default is the 2020 World Bank classification (218 economies)
//! and an EU-27 aggregate plus single-country `US` and `CN` aggregates. Both
//! are plain TSV data and can be replaced.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::CountryCode;
use crate::error::{Error, Result};

pub const DEFAULT_REGIONS_TSV: &str = include_str!("../data/regions.tsv");
pub const DEFAULT_AGGREGATES_TSV: &str = include_str!("../data/aggregates.tsv");

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub enum IncomeGroup {
    #[serde(rename = "HIC")]
    High,
    #[serde(rename = "UMC")]
    UpperMiddle,
    #[serde(rename = "LMC")]
    LowerMiddle,
    #[serde(rename = "LIC")]
    Low,
}

impl IncomeGroup {
    pub const ALL: [IncomeGroup; 4] = [
        IncomeGroup::High,
        IncomeGroup::UpperMiddle,
        IncomeGroup::LowerMiddle,
        IncomeGroup::Low,
    ];

    pub fn code(self) -> &'static str {
        match self {
            IncomeGroup::High => "HIC",
            IncomeGroup::UpperMiddle => "UMC",
            IncomeGroup::LowerMiddle => "LMC",
            IncomeGroup::Low => "LIC",
        }
    }
}

impl fmt::Display for IncomeGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for IncomeGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "HIC" => Ok(IncomeGroup::High),
            "UMC" => Ok(IncomeGroup::UpperMiddle),
            "LMC" => Ok(IncomeGroup::LowerMiddle),
            "LIC" => Ok(IncomeGroup::Low),
            _ => Err(Error::Config(format!("unknown income group {s:?}"))),
        }
    }
}

/// Result of classifying a country.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Classification {
    Group(IncomeGroup),
    Unknown,
}

/// A region that panels can key on.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum Region {
    World,
    Group(IncomeGroup),
    /// Countries absent from the income table.
    Unknown,
    Aggregate(String),
    Country(CountryCode),
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::World => f.write_str("WORLD"),
            Region::Group(g) => f.write_str(g.code()),
            Region::Unknown => f.write_str("UNKNOWN"),
            Region::Aggregate(name) => f.write_str(name),
            Region::Country(c) => write!(f, "iso:{c}"),
        }
    }
}

impl Serialize for Region {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Set-level view of a region, used for containment checks.
#[derive(Clone, PartialEq, Eq, Debug)]
enum Members {
    All,
    /// Every country not in the income table.
    OutsideTable,
    Finite(BTreeSet<CountryCode>),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RegionTable {
    groups: BTreeMap<CountryCode, IncomeGroup>,
    aggregates: BTreeMap<String, BTreeSet<CountryCode>>,
}

fn rows(text: &str, header: &str, file: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') || (i == 0 && line == header) {
            continue;
        }
        match line.split('\t').collect::<Vec<_>>().as_slice() {
            [a, b] => out.push((i + 1, a.trim().to_owned(), b.trim().to_owned())),
            _ => {
                return Err(Error::Malformed {
                    file: file.to_owned(),
                    line: i + 1,
                    message: "expected two tab-separated columns".into(),
                })
            }
        }
    }
    Ok(out)
}

fn country(code: &str, file: &str, line: usize) -> Result<CountryCode> {
    CountryCode::parse(code).ok_or_else(|| Error::Malformed {
        file: file.to_owned(),
        line,
        message: format!("invalid ISO-3166 code {code:?}"),
    })
}

impl RegionTable {
    /// Parses `regions.tsv` (`iso2<TAB>group`) and optional `aggregates.tsv`
    /// (`name<TAB>iso2`, one row per member).
    pub fn parse(regions: &str, aggregates: Option<&str>) -> Result<Self> {
        let mut groups = BTreeMap::new();
        for (line, code, group) in rows(regions, "iso2\tgroup", "regions.tsv")? {
            let c = country(&code, "regions.tsv", line)?;
            let g: IncomeGroup = group.parse().map_err(|_| Error::Malformed {
                file: "regions.tsv".into(),
                line,
                message: format!("unknown income group {group:?}"),
            })?;
            if let Some(prev) = groups.insert(c, g) {
                if prev != g {
                    return Err(Error::PartitionViolation {
                        country: code,
                        first: prev.to_string(),
                        second: g.to_string(),
                    });
                }
            }
        }
        let mut table = RegionTable {
            groups,
            aggregates: BTreeMap::new(),
        };
        if let Some(text) = aggregates {
            for (line, name, code) in rows(text, "name\tiso2", "aggregates.tsv")? {
                let c = country(&code, "aggregates.tsv", line)?;
                table.add_aggregate_member(&name, c)?;
            }
        }
        Ok(table)
    }

    pub fn load(regions: &Path, aggregates: Option<&Path>) -> Result<Self> {
        let r = std::fs::read_to_string(regions).map_err(|e| Error::io(regions, e))?;
        let a = aggregates
            .map(|p| std::fs::read_to_string(p).map_err(|e| Error::io(p, e)))
            .transpose()?;
        Self::parse(&r, a.as_deref())
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_REGIONS_TSV, Some(DEFAULT_AGGREGATES_TSV))
            .expect("bundled region table is valid")
    }

    pub fn add_aggregate_member(&mut self, name: &str, c: CountryCode) -> Result<()> {
        if !self.groups.contains_key(&c) {
            return Err(Error::UnknownAggregateMember {
                aggregate: name.to_owned(),
                country: c.to_string(),
            });
        }
        if name.is_empty() || IncomeGroup::from_str(name).is_ok() || name == "WORLD" || name == "UNKNOWN" {
            return Err(Error::Config(format!("reserved aggregate name {name:?}")));
        }
        self.aggregates.entry(name.to_owned()).or_default().insert(c);
        Ok(())
    }

    pub fn classify(&self, c: CountryCode) -> Classification {
        match self.groups.get(&c) {
            Some(&g) => Classification::Group(g),
            None => Classification::Unknown,
        }
    }

    pub fn countries(&self) -> impl Iterator<Item = (CountryCode, IncomeGroup)> + '_ {
        self.groups.iter().map(|(&c, &g)| (c, g))
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Number of countries per income group.
    pub fn group_sizes(&self) -> BTreeMap<IncomeGroup, usize> {
        let mut out: BTreeMap<IncomeGroup, usize> =
            IncomeGroup::ALL.iter().map(|&g| (g, 0)).collect();
        for g in self.groups.values() {
            *out.get_mut(g).unwrap() += 1;
        }
        out
    }

    pub fn aggregates(&self) -> &BTreeMap<String, BTreeSet<CountryCode>> {
        &self.aggregates
    }

    pub fn aggregate(&self, name: &str) -> Option<&BTreeSet<CountryCode>> {
        self.aggregates.get(name)
    }

    /// Parses a region name as printed by `Region`'s `Display`. Bare ISO
    /// codes resolve to an aggregate of that name first, then the country.
    pub fn resolve(&self, name: &str) -> Result<Region> {
        match name {
            "WORLD" => return Ok(Region::World),
            "UNKNOWN" => return Ok(Region::Unknown),
            _ => {}
        }
        if let Ok(g) = name.parse() {
            return Ok(Region::Group(g));
        }
        if self.aggregates.contains_key(name) {
            return Ok(Region::Aggregate(name.to_owned()));
        }
        let code = name.strip_prefix("iso:").unwrap_or(name);
        CountryCode::parse(code)
            .map(Region::Country)
            .ok_or_else(|| Error::UnknownRegion(name.to_owned()))
    }

    /// Whether `c` belongs to `region`.
    pub fn contains(&self, region: &Region, c: CountryCode) -> bool {
        match region {
            Region::World => true,
            Region::Group(g) => self.groups.get(&c) == Some(g),
            Region::Unknown => !self.groups.contains_key(&c),
            Region::Aggregate(name) => self.aggregates.get(name).is_some_and(|s| s.contains(&c)),
            Region::Country(x) => *x == c,
        }
    }

    fn members(&self, region: &Region) -> Result<Members> {
        Ok(match region {
            Region::World => Members::All,
            Region::Unknown => Members::OutsideTable,
            Region::Group(g) => Members::Finite(
                self.groups
                    .iter()
                    .filter(|(_, x)| *x == g)
                    .map(|(&c, _)| c)
                    .collect(),
            ),
            Region::Aggregate(name) => Members::Finite(
                self.aggregates
                    .get(name)
                    .cloned()
                    .ok_or_else(|| Error::UnknownRegion(name.clone()))?,
            ),
            Region::Country(c) => Members::Finite([*c].into()),
        })
    }

    /// Set containment `inner ⊆ outer`.
    pub fn is_subset(&self, inner: &Region, outer: &Region) -> Result<bool> {
        let (a, b) = (self.members(inner)?, self.members(outer)?);
        Ok(match (a, b) {
            (_, Members::All) => true,
            (Members::All, _) => false,
            (Members::OutsideTable, Members::OutsideTable) => true,
            (Members::OutsideTable, Members::Finite(_)) => false,
            (Members::Finite(x), Members::OutsideTable) => {
                x.iter().all(|c| !self.groups.contains_key(c))
            }
            (Members::Finite(x), Members::Finite(y)) => x.is_subset(&y),
        })
    }

    /// Whether two regions share no country.
    pub fn is_disjoint(&self, a: &Region, b: &Region) -> Result<bool> {
        let (x, y) = (self.members(a)?, self.members(b)?);
        Ok(match (x, y) {
            (Members::All, _) | (_, Members::All) => false,
            (Members::OutsideTable, Members::OutsideTable) => false,
            (Members::OutsideTable, Members::Finite(s)) | (Members::Finite(s), Members::OutsideTable) => {
                s.iter().all(|c| self.groups.contains_key(c))
            }
            (Members::Finite(s), Members::Finite(t)) => s.is_disjoint(&t),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cc(s: &str) -> CountryCode {
        CountryCode::parse(s).unwrap()
    }

    #[test]
    fn bundled_table_matches_world_bank_sizes() {
        let t = RegionTable::bundled();
        let sizes = t.group_sizes();
        assert_eq!(sizes[&IncomeGroup::High], 83);
        assert_eq!(sizes[&IncomeGroup::UpperMiddle], 56);
        assert_eq!(sizes[&IncomeGroup::LowerMiddle], 50);
        assert_eq!(sizes[&IncomeGroup::Low], 29);
        assert_eq!(t.len(), 218);
        assert_eq!(t.aggregate("EU").unwrap().len(), 27);
    }

    #[test]
    fn classify_examples() {
        let t = RegionTable::bundled();
        assert_eq!(t.classify(cc("US")), Classification::Group(IncomeGroup::High));
        assert_eq!(t.classify(cc("CN")), Classification::Group(IncomeGroup::UpperMiddle));
        assert_eq!(t.classify(cc("ZZ")), Classification::Unknown);
    }

    #[test]
    fn country_in_two_groups_is_rejected() {
        let err = RegionTable::parse("XX\tHIC\nXX\tLIC\n", None).unwrap_err();
        assert!(matches!(err, Error::PartitionViolation { .. }));
    }

    #[test]
    fn single_country_table() {
        let t = RegionTable::parse("FR\tHIC\n", None).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.group_sizes()[&IncomeGroup::High], 1);
    }

    #[test]
    fn aggregate_with_unknown_country_is_rejected() {
        let err = RegionTable::parse("FR\tHIC\n", Some("EU\tDE\n")).unwrap_err();
        assert!(matches!(err, Error::UnknownAggregateMember { .. }));
    }

    #[test]
    fn bad_group_is_malformed() {
        assert!(matches!(
            RegionTable::parse("FR\tRICH\n", None),
            Err(Error::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn containment() {
        let t = RegionTable::bundled();
        let us = Region::Aggregate("US".into());
        let hic = Region::Group(IncomeGroup::High);
        let eu = Region::Aggregate("EU".into());
        assert!(t.is_subset(&us, &hic).unwrap());
        // Bulgaria sits in the upper-middle group
        assert!(!t.is_subset(&eu, &hic).unwrap());
        assert!(!t.is_subset(&hic, &us).unwrap());
        assert!(t.is_subset(&Region::Unknown, &Region::World).unwrap());
        assert!(!t.is_subset(&Region::World, &hic).unwrap());
        assert!(t.is_subset(&Region::Country(cc("ZZ")), &Region::Unknown).unwrap());
        assert!(t.is_disjoint(&us, &eu).unwrap());
        assert!(!t.is_disjoint(&hic, &eu).unwrap());
        assert!(t.is_disjoint(&hic, &Region::Unknown).unwrap());
    }

    #[test]
    fn resolve_round_trips_display() {
        let t = RegionTable::bundled();
        for r in [
            Region::World,
            Region::Unknown,
            Region::Group(IncomeGroup::Low),
            Region::Aggregate("EU".into()),
            Region::Aggregate("US".into()),
            Region::Country(cc("DE")),
        ] {
            assert_eq!(t.resolve(&r.to_string()).unwrap(), r);
        }
        assert_eq!(t.resolve("DE").unwrap(), Region::Country(cc("DE")));
        assert!(t.resolve("nowhere").is_err());
    }
}
