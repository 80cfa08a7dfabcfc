//! JSON file formats and a registry resolving the names they refer to.
//!
//! Complex numbers are two-element arrays `[re, im]`; matrices are arrays of rows.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    build_algebra, diagonal_algebra, matrix_algebra, opposite_algebra, tensor_all, Algebra,
    LinearFunctional, TraceFunctional,
};
use crate::channels::ChannelMap;
use crate::error::{Error, Result};
use crate::geometry::SpectralTriple;
use crate::groups::{
    klein_twisted, Cocycle, FiniteGroup, LengthFunction, PositiveDefiniteFunction,
    TwistedGroupAlgebra,
};
use crate::linalg::{CMat, CVec, C64};

/// `[re, im]`.
pub type Cx = [f64; 2];
pub type MatrixJson = Vec<Vec<Cx>>;

pub fn cx(z: C64) -> Cx {
    [z.re, z.im]
}

pub fn from_cx(z: Cx) -> C64 {
    C64::new(z[0], z[1])
}

pub fn vec_to_json(v: &CVec) -> Vec<Cx> {
    v.iter().map(|z| cx(*z)).collect()
}

pub fn vec_from_json(v: &[Cx]) -> CVec {
    CVec::from_iterator(v.len(), v.iter().map(|z| from_cx(*z)))
}

pub fn matrix_to_json(m: &CMat) -> MatrixJson {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| cx(m[(i, j)])).collect())
        .collect()
}

pub fn matrix_from_json(m: &MatrixJson) -> Result<CMat> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::InvalidInput("ragged matrix rows".into()));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| from_cx(m[i][j])))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlgebraFile {
    pub name: String,
    pub ambient_dim: usize,
    pub basis: Vec<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalFile {
    pub algebra: String,
    pub values: Vec<Cx>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelFile {
    pub source: String,
    pub target: String,
    /// `d_B × d_A`.
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TripleFile {
    pub algebra: String,
    pub hilbert_dim: usize,
    pub rep: Vec<MatrixJson>,
    pub dirac: MatrixJson,
    pub grading: Option<MatrixJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFile {
    /// Registry name; defaults to the file stem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub order: usize,
    pub mult_table: Vec<Vec<usize>>,
    pub identity: usize,
    pub cocycle: Option<MatrixJson>,
    pub length: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdFunctionFile {
    pub group: String,
    pub values: Vec<Cx>,
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        context: path.display().to_string(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| Error::Json {
        context: path.display().to_string(),
        source,
    })?;
    std::fs::write(path, text + "\n").map_err(|source| Error::Io {
        context: path.display().to_string(),
        source,
    })
}

/// A group with its cocycle, length and algebra.
#[derive(Debug, Clone)]
pub struct GroupEntry {
    pub group: FiniteGroup,
    pub cocycle: Cocycle,
    pub length: LengthFunction,
    pub algebra: TwistedGroupAlgebra,
}

impl GroupEntry {
    pub fn new(
        group: FiniteGroup,
        cocycle: Cocycle,
        length: Option<LengthFunction>,
    ) -> Result<Self> {
        let length = match length {
            Some(l) => l,
            None => group.word_length()?,
        };
        let algebra = TwistedGroupAlgebra::new(&group, &cocycle)?;
        Ok(GroupEntry {
            group,
            cocycle,
            length,
            algebra,
        })
    }

    pub fn to_file(&self) -> GroupFile {
        let trivial = self
            .cocycle
            .table()
            .iter()
            .flatten()
            .all(|z| *z == C64::new(1.0, 0.0));
        GroupFile {
            name: Some(self.group.name.clone()),
            order: self.group.order(),
            mult_table: self.group.table().to_vec(),
            identity: self.group.identity(),
            cocycle: if trivial {
                None
            } else {
                Some(
                    self.cocycle
                        .table()
                        .iter()
                        .map(|r| r.iter().map(|z| cx(*z)).collect())
                        .collect(),
                )
            },
            length: Some(self.length.values.clone()),
        }
    }
}

/// Built-in groups: `Z<n>`, `D<n>`, `S<n>`, `Z2xZ2` and the twisted `Z2xZ2tw`.
pub fn builtin_group(name: &str) -> Result<GroupEntry> {
    let num = |s: &str| s.parse::<usize>().ok().filter(|&n| n >= 1);
    let bad = || Error::InvalidGroup(format!("unknown group `{name}`"));
    let (g, s) = if name == "Z2xZ2tw" {
        klein_twisted()
    } else if name == "Z2xZ2" {
        let g = FiniteGroup::direct_product(&FiniteGroup::cyclic(2), &FiniteGroup::cyclic(2));
        let s = Cocycle::trivial(&g);
        (g, s)
    } else if let Some(n) = name.strip_prefix('Z').and_then(num) {
        let g = FiniteGroup::cyclic(n);
        let s = Cocycle::trivial(&g);
        (g, s)
    } else if let Some(n) = name.strip_prefix('D').and_then(num).filter(|&n| n >= 2) {
        let g = FiniteGroup::dihedral(n);
        let s = Cocycle::trivial(&g);
        (g, s)
    } else if let Some(n) = name.strip_prefix('S').and_then(num).filter(|&n| n <= 5) {
        let g = FiniteGroup::symmetric(n);
        let s = Cocycle::trivial(&g);
        (g, s)
    } else {
        return Err(bad());
    };
    let mut e = GroupEntry::new(g, s, None)?;
    e.group.name = name.to_string();
    Ok(e)
}

/// Names seen so far, plus the built-in families `M_n`, `diag_n`, `C*(group)`
/// and their `^op` variants.
#[derive(Debug, Default, Clone)]
pub struct Registry {
    pub algebras: BTreeMap<String, Algebra>,
    pub groups: BTreeMap<String, GroupEntry>,
}

fn parse_suffix(name: &str, prefix: &str) -> Option<usize> {
    name.strip_prefix(prefix)?.parse().ok().filter(|&n| n >= 1)
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn group(&mut self, name: &str) -> Result<GroupEntry> {
        if let Some(g) = self.groups.get(name) {
            return Ok(g.clone());
        }
        let g = builtin_group(name)?;
        self.add_group(name, g.clone());
        Ok(g)
    }

    pub fn add_group(&mut self, name: &str, g: GroupEntry) {
        let alg = g.algebra.algebra.clone();
        self.algebras.insert(format!("C*({name})"), alg.clone());
        self.algebras
            .insert(format!("C*({name})^op"), opposite_algebra(&alg));
        self.groups.insert(name.to_string(), g);
    }

    pub fn add_algebra(&mut self, name: &str, alg: Algebra) {
        self.algebras
            .insert(format!("{name}^op"), opposite_algebra(&alg));
        self.algebras.insert(name.to_string(), alg);
    }

    pub fn algebra(&mut self, name: &str) -> Result<Algebra> {
        if let Some(a) = self.algebras.get(name) {
            return Ok(a.clone());
        }
        let parts = split_tensor(name);
        if parts.len() > 1 {
            let factors = parts
                .iter()
                .map(|p| self.algebra(p))
                .collect::<Result<Vec<_>>>()?;
            let a = tensor_all(&factors);
            self.algebras.insert(name.to_string(), a.clone());
            return Ok(a);
        }
        if let Some(base) = name.strip_suffix("^op") {
            let a = opposite_algebra(&self.algebra(base)?);
            self.algebras.insert(name.to_string(), a.clone());
            return Ok(a);
        }
        let alg = if let Some(n) = parse_suffix(name, "M_") {
            matrix_algebra(n)
        } else if let Some(n) = parse_suffix(name, "diag_") {
            diagonal_algebra(n)
        } else if let Some(g) = name.strip_prefix("C*(").and_then(|s| s.strip_suffix(')')) {
            return Ok(self.group(g)?.algebra.algebra.clone());
        } else {
            return Err(Error::InvalidInput(format!("unknown algebra `{name}`")));
        };
        self.algebras.insert(name.to_string(), alg.clone());
        Ok(alg)
    }

    /// Canonical trace of a group algebra (or a tensor of them), `Tr` otherwise.
    pub fn default_trace(&mut self, name: &str) -> Result<TraceFunctional> {
        let parts = split_tensor(name);
        if parts.len() > 1 && parts.iter().any(|p| p.starts_with("C*(")) {
            let traces = parts
                .iter()
                .map(|p| self.default_trace(p))
                .collect::<Result<Vec<_>>>()?;
            let mut it = traces.into_iter();
            let first = it.next().expect("non-empty");
            return Ok(it.fold(first, |acc, t| acc.tensor(&t)));
        }
        let base = name.strip_suffix("^op").unwrap_or(name);
        if parts.len() == 1 && base.starts_with("C*(") {
            let g = base
                .strip_prefix("C*(")
                .and_then(|s| s.strip_suffix(')'))
                .unwrap_or(base);
            let t = self.group(g)?.algebra.canonical_trace();
            if base.len() == name.len() {
                return Ok(t);
            }
            let alg = self.algebra(name)?;
            return TraceFunctional::new(
                "τ^op",
                LinearFunctional::new(&alg, t.functional.values.clone())?,
            );
        }
        TraceFunctional::ambient(&self.algebra(name)?, 1.0, "Tr")
    }

    /// Name under which an algebra is registered, if any.
    pub fn name_of(&self, alg: &Algebra) -> Option<String> {
        self.algebras
            .iter()
            .find(|(_, a)| std::sync::Arc::ptr_eq(a, alg))
            .map(|(k, _)| k.clone())
    }

    pub fn load_algebra(&mut self, f: &AlgebraFile) -> Result<Algebra> {
        let basis = f
            .basis
            .iter()
            .map(matrix_from_json)
            .collect::<Result<Vec<_>>>()?;
        let alg = build_algebra(&f.name, f.ambient_dim, basis)?;
        self.add_algebra(&f.name, alg.clone());
        Ok(alg)
    }

    pub fn load_functional(&mut self, f: &FunctionalFile) -> Result<LinearFunctional> {
        let alg = self.algebra(&f.algebra)?;
        LinearFunctional::new(&alg, vec_from_json(&f.values))
    }

    pub fn load_trace(&mut self, f: &FunctionalFile, name: &str) -> Result<TraceFunctional> {
        TraceFunctional::new(name, self.load_functional(f)?)
    }

    pub fn load_channel(&mut self, f: &ChannelFile) -> Result<ChannelMap> {
        let source = self.algebra(&f.source)?;
        let target = self.algebra(&f.target)?;
        ChannelMap::new(&source, &target, matrix_from_json(&f.matrix)?)
    }

    pub fn load_triple(&mut self, f: &TripleFile) -> Result<SpectralTriple> {
        let alg = self.algebra(&f.algebra)?;
        let rep = f
            .rep
            .iter()
            .map(matrix_from_json)
            .collect::<Result<Vec<_>>>()?;
        if rep.iter().any(|r| r.nrows() != f.hilbert_dim) {
            return Err(Error::InvalidTriple(format!(
                "rep matrices must be {0}x{0}",
                f.hilbert_dim
            )));
        }
        let grading = f.grading.as_ref().map(matrix_from_json).transpose()?;
        SpectralTriple::new(&alg, rep, matrix_from_json(&f.dirac)?, grading)
    }

    pub fn load_group(&mut self, f: &GroupFile, default_name: &str) -> Result<GroupEntry> {
        let name = f.name.clone().unwrap_or_else(|| default_name.to_string());
        if f.mult_table.len() != f.order {
            return Err(Error::InvalidGroup(format!(
                "order {} but table has {} rows",
                f.order,
                f.mult_table.len()
            )));
        }
        let g = FiniteGroup::from_table(&name, f.mult_table.clone(), f.identity)?;
        let cocycle = match &f.cocycle {
            Some(t) => Cocycle::new(
                &g,
                t.iter()
                    .map(|r| r.iter().map(|z| from_cx(*z)).collect())
                    .collect(),
            )?,
            None => Cocycle::trivial(&g),
        };
        // Without a length the word length over all non-identity elements is used.
        let length = f
            .length
            .as_ref()
            .map(|l| LengthFunction::new(&g, l.clone()))
            .transpose()?;
        let entry = GroupEntry::new(g, cocycle, length)?;
        self.add_group(&name, entry.clone());
        Ok(entry)
    }

    pub fn load_pd_function(
        &mut self,
        f: &PdFunctionFile,
    ) -> Result<(GroupEntry, PositiveDefiniteFunction)> {
        let g = self.group(&f.group)?;
        let phi = PositiveDefiniteFunction::new(&g.group, vec_from_json(&f.values))?;
        Ok((g, phi))
    }
}

pub fn algebra_to_file(name: &str, alg: &Algebra) -> AlgebraFile {
    AlgebraFile {
        name: name.to_string(),
        ambient_dim: alg.ambient_dim(),
        basis: alg.basis().iter().map(matrix_to_json).collect(),
    }
}

pub fn channel_to_file(source: &str, target: &str, f: &ChannelMap) -> ChannelFile {
    ChannelFile {
        source: source.to_string(),
        target: target.to_string(),
        matrix: matrix_to_json(&f.matrix),
    }
}

pub fn triple_to_file(name: &str, t: &SpectralTriple) -> TripleFile {
    TripleFile {
        algebra: name.to_string(),
        hilbert_dim: t.hilbert_dim,
        rep: t
            .rep
            .iter()
            .map(|r| matrix_to_json(&r.to_dense()))
            .collect(),
        dirac: matrix_to_json(&t.dirac_dense()),
        grading: t.grading_dense().as_ref().map(matrix_to_json),
    }
}

/// Kind of a JSON document, read off its keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FileKind {
    Algebra,
    Functional,
    Channel,
    Triple,
    Group,
    PdFunction,
}

pub fn detect_kind(value: &serde_json::Value) -> Option<FileKind> {
    let obj = value.as_object()?;
    let has = |k: &str| obj.contains_key(k);
    Some(if has("basis") {
        FileKind::Algebra
    } else if has("mult_table") {
        FileKind::Group
    } else if has("dirac") {
        FileKind::Triple
    } else if has("matrix") {
        FileKind::Channel
    } else if has("group") && has("values") {
        FileKind::PdFunction
    } else if has("algebra") && has("values") {
        FileKind::Functional
    } else {
        return None;
    })
}

/// What a file defined, after validation.
#[derive(Debug, Clone)]
#[allow(clippy::large_enum_variant)]
pub enum Loaded {
    Algebra(Algebra),
    Functional(LinearFunctional),
    Channel(ChannelMap),
    Triple(SpectralTriple),
    Group(String, GroupEntry),
    PdFunction(String, PositiveDefiniteFunction),
}

impl Loaded {
    pub fn kind(&self) -> FileKind {
        match self {
            Loaded::Algebra(_) => FileKind::Algebra,
            Loaded::Functional(_) => FileKind::Functional,
            Loaded::Channel(_) => FileKind::Channel,
            Loaded::Triple(_) => FileKind::Triple,
            Loaded::Group(..) => FileKind::Group,
            Loaded::PdFunction(..) => FileKind::PdFunction,
        }
    }
}

/// Parse and validate any supported file, registering what it defines.
/// Semantic errors carry the path; syntax errors also carry line and column.
pub fn load_file(reg: &mut Registry, path: &Path) -> Result<Loaded> {
    let context = path.display().to_string();
    let value: serde_json::Value = read_json(path)?;
    let kind = detect_kind(&value)
        .ok_or_else(|| Error::InvalidInput(format!("{context}: unrecognized document")))?;
    let with_path = |e: Error| match e {
        Error::Io { .. } | Error::Json { .. } => e,
        other => Error::InvalidInput(format!("{context}: {other}")),
    };
    macro_rules! typed {
        ($t:ty) => {
            serde_json::from_value::<$t>(value).map_err(|source| Error::Json {
                context: context.clone(),
                source,
            })?
        };
    }
    let loaded = match kind {
        FileKind::Algebra => reg.load_algebra(&typed!(AlgebraFile)).map(Loaded::Algebra),
        FileKind::Functional => reg
            .load_functional(&typed!(FunctionalFile))
            .map(Loaded::Functional),
        FileKind::Channel => reg.load_channel(&typed!(ChannelFile)).map(Loaded::Channel),
        FileKind::Triple => reg.load_triple(&typed!(TripleFile)).map(Loaded::Triple),
        FileKind::Group => {
            let file = typed!(GroupFile);
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("group")
                .to_string();
            let name = file.name.clone().unwrap_or_else(|| stem.clone());
            reg.load_group(&file, &stem).map(|g| Loaded::Group(name, g))
        }
        FileKind::PdFunction => {
            let file = typed!(PdFunctionFile);
            reg.load_pd_function(&file)
                .map(|(_, phi)| Loaded::PdFunction(file.group.clone(), phi))
        }
    };
    loaded.map_err(with_path)
}

/// Split an algebra name on `⊗` outside parentheses.
fn split_tensor(name: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let (mut depth, mut start) = (0i32, 0);
    for (i, ch) in name.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '⊗' if depth == 0 => {
                parts.push(&name[start..i]);
                start = i + ch.len_utf8();
            }
            _ => {}
        }
    }
    parts.push(&name[start..]);
    parts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_names_resolve() {
        let mut r = Registry::new();
        assert_eq!(r.algebra("M_3").unwrap().dim(), 9);
        assert!(r.algebra("M_2^op").unwrap().is_opposite());
        assert_eq!(r.algebra("C*(S3)").unwrap().dim(), 6);
        assert_eq!(r.algebra("C*(Z2xZ2tw)").unwrap().dim(), 4);
        assert!(r.algebra("nonsense").is_err());
        let tau = r.default_trace("C*(Z3)").unwrap();
        assert!((tau.values()[0].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn group_file_round_trip() {
        let mut r = Registry::new();
        let g = r.group("Z2xZ2tw").unwrap();
        let file = g.to_file();
        let text = serde_json::to_string(&file).unwrap();
        let back: GroupFile = serde_json::from_str(&text).unwrap();
        let mut r2 = Registry::new();
        let e = r2.load_group(&back, "k").unwrap();
        assert_eq!(e.group.table(), g.group.table());
        assert_eq!(e.length.values, g.length.values);
    }

    #[test]
    fn channel_file_round_trip() {
        let mut r = Registry::new();
        let a = r.algebra("M_2").unwrap();
        let t = ChannelMap::from_ambient_fn(&a, &a, |m| m.transpose()).unwrap();
        let f = channel_to_file("M_2", "M_2", &t);
        let back = r.load_channel(&f).unwrap();
        assert_eq!(back.matrix, t.matrix);
    }
}
