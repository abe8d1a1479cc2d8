//! JSON file formats read and written by the command-line tool.
//!
//! Maps are keyed by object and arrow names and serialized with sorted keys, so emitted files
//! are byte-stable.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arrows::ArrowSet;
use crate::category::{
    poset_as_category, validate_category, Arr, CategoryReport, FiniteCategory, Obj, PosetError, PosetDecl, RawCategory,
};
use crate::coverage::{
    dense_topology, generate_topology, validate_topology, CoverageError, Presentation, Topology, TopologyReport,
};
use crate::mvs::{over, TestObject};
use crate::names::Universe;
use crate::psh::{Morphism, Presheaf, PshError, Subpresheaf};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{line}:{column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("invalid category: {0:?}")]
    Category(CategoryReport),
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("invalid topology: {0:?}")]
    Topology(TopologyReport),
    #[error(transparent)]
    Coverage(#[from] CoverageError),
    #[error(transparent)]
    Presheaf(#[from] PshError),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("unknown arrow {0}")]
    UnknownArrow(String),
    #[error("{0}")]
    Shape(String),
}

impl From<serde_json::Error> for IoError {
    fn from(e: serde_json::Error) -> IoError {
        IoError::Json { line: e.line(), column: e.column(), message: e.to_string() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CategoryBlock {
    /// `{"poset": {...}}`; the relation is closed reflexively and transitively first
    Poset {
        poset: PosetDecl,
    },
    Explicit(RawCategory),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TopologyBlock {
    Trivial,
    DensePoset,
    /// every covering sieve, listed per object
    Explicit {
        covers: BTreeMap<String, Vec<Vec<String>>>,
    },
    /// basic covers, closed upward
    Basis {
        covers: BTreeMap<String, Vec<Vec<String>>>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteFile {
    pub category: CategoryBlock,
    pub topology: TopologyBlock,
}

#[derive(Debug, Clone)]
pub struct Site {
    pub category: Arc<FiniteCategory>,
    pub topology: Topology,
}

fn object(cat: &FiniteCategory, name: &str) -> Result<Obj, IoError> {
    cat.object_by_name(name).ok_or_else(|| IoError::UnknownObject(name.to_string()))
}

fn arrow(cat: &FiniteCategory, name: &str) -> Result<Arr, IoError> {
    cat.arrow_by_name(name).ok_or_else(|| IoError::UnknownArrow(name.to_string()))
}

fn sieve_table(
    cat: &FiniteCategory,
    covers: &BTreeMap<String, Vec<Vec<String>>>,
) -> Result<Vec<Vec<ArrowSet>>, IoError> {
    let mut table = vec![Vec::new(); cat.num_objects()];
    for (o, sieves) in covers {
        let a = object(cat, o)?;
        for s in sieves {
            table[a].push(s.iter().map(|f| arrow(cat, f)).collect::<Result<ArrowSet, _>>()?);
        }
    }
    Ok(table)
}

impl CategoryBlock {
    pub fn build(&self) -> Result<FiniteCategory, IoError> {
        match self {
            CategoryBlock::Poset { poset } => Ok(poset_as_category(&poset.closed()?)?),
            CategoryBlock::Explicit(raw) => validate_category(raw).map_err(IoError::Category),
        }
    }
}

impl SiteFile {
    pub fn build(&self) -> Result<Site, IoError> {
        let cat = Arc::new(self.category.build()?);
        let topology = match &self.topology {
            TopologyBlock::Trivial => crate::coverage::trivial_topology(cat.clone()),
            TopologyBlock::DensePoset => dense_topology(cat.clone())?,
            TopologyBlock::Explicit { covers } => {
                let mut cov = sieve_table(&cat, covers)?;
                for row in cov.iter_mut() {
                    row.sort_unstable_by_key(|s| s.bits());
                    row.dedup();
                }
                validate_topology(cat.clone(), cov).map_err(IoError::Topology)?
            }
            TopologyBlock::Basis { covers } => {
                generate_topology(cat.clone(), Presentation { bcov: sieve_table(&cat, covers)? })?
            }
        };
        Ok(Site { category: cat, topology })
    }
}

pub fn parse_site(text: &str) -> Result<Site, IoError> {
    serde_json::from_str::<SiteFile>(text)?.build()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PresheafFile {
    /// element labels per object
    pub fibres: BTreeMap<String, Vec<String>>,
    /// for each arrow `f`, the image in `X(dom f)` of each element of `X(cod f)`; identities
    /// may be omitted
    #[serde(default)]
    pub restrict: BTreeMap<String, Vec<usize>>,
}

impl PresheafFile {
    pub fn from_presheaf(p: &Presheaf) -> PresheafFile {
        let cat = p.category();
        PresheafFile {
            fibres: cat.objects().map(|a| (cat.object_name(a).to_string(), p.labels()[a].clone())).collect(),
            restrict: cat
                .arrows()
                .filter(|&f| !cat.is_identity(f))
                .map(|f| (cat.arrow_name(f).to_string(), p.restriction_table(f).to_vec()))
                .collect(),
        }
    }

    pub fn build(&self, cat: &Arc<FiniteCategory>) -> Result<Presheaf, IoError> {
        let mut labels = vec![Vec::new(); cat.num_objects()];
        for (o, elems) in &self.fibres {
            labels[object(cat, o)?] = elems.clone();
        }
        let sizes: Vec<usize> = labels.iter().map(Vec::len).collect();
        let mut restrict: Vec<Option<Vec<usize>>> = vec![None; cat.num_arrows()];
        for (name, table) in &self.restrict {
            restrict[arrow(cat, name)?] = Some(table.clone());
        }
        let restrict = cat
            .arrows()
            .map(|f| match restrict[f].take() {
                Some(t) => Ok(t),
                None if cat.is_identity(f) => Ok((0..sizes[cat.cod(f)]).collect()),
                None if sizes[cat.cod(f)] == 0 => Ok(Vec::new()),
                None => Err(IoError::Shape(format!("missing restriction along {}", cat.arrow_name(f)))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Presheaf::with_labels(cat.clone(), sizes, restrict, labels)?)
    }
}

pub fn parse_presheaf(text: &str, cat: &Arc<FiniteCategory>) -> Result<Presheaf, IoError> {
    serde_json::from_str::<PresheafFile>(text)?.build(cat)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorphismFile {
    pub source: PresheafFile,
    pub target: PresheafFile,
    pub components: BTreeMap<String, Vec<usize>>,
}

impl MorphismFile {
    pub fn from_morphism(m: &Morphism) -> MorphismFile {
        let cat = m.src().category();
        MorphismFile {
            source: PresheafFile::from_presheaf(m.src()),
            target: PresheafFile::from_presheaf(m.dst()),
            components: cat.objects().map(|a| (cat.object_name(a).to_string(), m.components()[a].clone())).collect(),
        }
    }

    pub fn build(&self, cat: &Arc<FiniteCategory>) -> Result<Morphism, IoError> {
        let src = Arc::new(self.source.build(cat)?);
        let dst = Arc::new(self.target.build(cat)?);
        let mut comp = vec![Vec::new(); cat.num_objects()];
        for (o, c) in &self.components {
            comp[object(cat, o)?] = c.clone();
        }
        Ok(Morphism::new(src, dst, comp)?)
    }
}

pub fn parse_morphism(text: &str, cat: &Arc<FiniteCategory>) -> Result<Morphism, IoError> {
    serde_json::from_str::<MorphismFile>(text)?.build(cat)
}

/// Explicit mvs family. Global members list element indices of `B` per object; indexed members
/// sit over a representable `y(over)` and list indices into `y(over) × B`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyFile {
    #[serde(default)]
    pub members: Vec<BTreeMap<String, Vec<usize>>>,
    #[serde(default)]
    pub indexed: Vec<IndexedMemberFile>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexedMemberFile {
    pub over: String,
    pub elements: BTreeMap<String, Vec<usize>>,
}

impl FamilyFile {
    /// Every member with its index object, globals first.
    pub fn build(&self, phi: &Morphism) -> Result<Vec<(TestObject, Morphism, Subpresheaf)>, IoError> {
        let cat = phi.src().category();
        let carrier = |of: &Morphism, m: &BTreeMap<String, Vec<usize>>| -> Result<Subpresheaf, IoError> {
            let mut elems = vec![Vec::new(); cat.num_objects()];
            for (o, e) in m {
                elems[object(cat, o)?] = e.clone();
            }
            Ok(Subpresheaf::from_elements(of.src(), &elems)?)
        };
        let mut out = Vec::new();
        let one = TestObject { name: "1".into(), presheaf: Arc::new(Presheaf::terminal(cat.clone())) };
        for m in &self.members {
            let of = over(&one.presheaf, phi)?;
            let sub = carrier(&of, m)?;
            out.push((one.clone(), of, sub));
        }
        for m in &self.indexed {
            let c = object(cat, &m.over)?;
            let index = TestObject {
                name: format!("y({})", m.over),
                presheaf: Arc::new(Presheaf::representable(cat.clone(), c)),
            };
            let of = over(&index.presheaf, phi)?;
            let sub = carrier(&of, &m.elements)?;
            out.push((index, of, sub));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameEntry {
    /// literal index `#n`
    pub index: usize,
    pub object: String,
    pub class: usize,
    /// least rank containing this name
    pub level: usize,
    /// `[arrow, #m]` pairs of the canonical member table
    pub table: Vec<(String, usize)>,
    /// literals `#m` with `m ε` this name forced at its object
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniverseDump {
    pub rank: usize,
    pub sizes: BTreeMap<String, usize>,
    pub names: Vec<NameEntry>,
    /// restriction of each class along each arrow, as literal indices
    pub restrict: BTreeMap<String, Vec<usize>>,
}

impl UniverseDump {
    pub fn from_universe(u: &Universe) -> UniverseDump {
        let cat = u.category();
        let names = u
            .listing()
            .into_iter()
            .enumerate()
            .map(|(index, (c, v))| NameEntry {
                index,
                object: cat.object_name(c).to_string(),
                class: v,
                level: u.level(c, v),
                table: u.representatives[c][v]
                    .iter()
                    .map(|&(f, m)| (cat.arrow_name(f).to_string(), u.global_index(cat.dom(f), m)))
                    .collect(),
                members: u.members(c, v).into_iter().map(|m| u.global_index(c, m)).collect(),
            })
            .collect();
        UniverseDump {
            rank: u.rank,
            sizes: cat.objects().map(|c| (cat.object_name(c).to_string(), u.size(c))).collect(),
            names,
            restrict: cat
                .arrows()
                .map(|f| {
                    let d = cat.dom(f);
                    let row = (0..u.size(cat.cod(f))).map(|v| u.global_index(d, u.restrict(v, f))).collect();
                    (cat.arrow_name(f).to_string(), row)
                })
                .collect(),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::names::build_universe;

    const DENSE: &str = r#"{
        "category": {"poset": {"elements": ["0", "1"], "leq": [["0", "1"]]}},
        "topology": {"kind": "dense-poset"}
    }"#;

    #[test]
    fn site_kinds() {
        let site = parse_site(DENSE).unwrap();
        assert_eq!(site.category.num_arrows(), 3);
        assert_eq!(site.topology.covering(1).len(), 2);
        let explicit = r#"{
            "category": {"objects": ["*"], "arrows": [{"name": "id", "dom": "*", "cod": "*"}],
                         "identities": [["*", "id"]], "compose": [["id", "id", "id"]]},
            "topology": {"kind": "explicit", "covers": {"*": [["id"]]}}
        }"#;
        assert!(parse_site(explicit).unwrap().topology.is_trivial());
        let basis = r#"{
            "category": {"poset": {"elements": ["0", "1"], "leq": [["0", "1"]]}},
            "topology": {"kind": "basis", "covers": {"0": [[]], "1": [["id_1", "0<=1"]]}}
        }"#;
        assert_eq!(parse_site(basis).unwrap().topology.degenerate_objects(), vec![0]);
        let bad = r#"{
            "category": {"poset": {"elements": ["0", "1"], "leq": [["0", "1"]]}},
            "topology": {"kind": "explicit", "covers": {"0": [["id_0"]], "1": [["0<=1"]]}}
        }"#;
        assert!(matches!(parse_site(bad), Err(IoError::Topology(_))));
        let broken = "{\n  \"category\": ,\n}";
        match parse_site(broken) {
            Err(IoError::Json { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presheaf_round_trip() {
        let site = parse_site(DENSE).unwrap();
        let text = r#"{"fibres": {"0": ["a", "b"], "1": ["c"]}, "restrict": {"0<=1": [1]}}"#;
        let p = parse_presheaf(text, &site.category).unwrap();
        let file = PresheafFile::from_presheaf(&p);
        let again = parse_presheaf(&to_json(&file), &site.category).unwrap();
        assert_eq!(PresheafFile::from_presheaf(&again), file);
        assert_eq!(again.labels(), p.labels());
        let missing = r#"{"fibres": {"0": ["a"], "1": ["c"]}}"#;
        assert!(matches!(parse_presheaf(missing, &site.category), Err(IoError::Shape(_))));
    }

    #[test]
    fn morphism_and_universe_round_trip() {
        let site = parse_site(DENSE).unwrap();
        let y = Arc::new(Presheaf::representable(site.category.clone(), 1));
        let m = Morphism::identity(y);
        let file = MorphismFile::from_morphism(&m);
        let back = parse_morphism(&to_json(&file), &site.category).unwrap();
        assert_eq!(MorphismFile::from_morphism(&back), file);
        let u = build_universe(&site.topology, 3);
        let dump = UniverseDump::from_universe(&u);
        let text = to_json(&dump);
        assert_eq!(serde_json::from_str::<UniverseDump>(&text).unwrap(), dump);
        assert_eq!(to_json(&UniverseDump::from_universe(&build_universe(&site.topology, 3))), text);
    }
}
