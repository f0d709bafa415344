//! Minimal enclosing subalgebras, sector decomposition of the adjoint
//! matrix, D-type generator sets and the su(3) exclusion check.

use std::collections::BTreeSet;
use std::fmt;

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::lie::{
    AdjointMatrix, GeneratorBasis, HamiltonianSpec, LieError, SignedLabel, SpinorLabel,
    COEFFICIENT_NAMES,
};
use crate::linalg::{commutator, frobenius, CMat, I};

/// Entries of A below this magnitude count as structural zeros.
const PATTERN_TOL: f64 = 1e-12;
const DEFAULT_SAMPLES: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifierError {
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("[{a}, {b}] is not a single generator of the basis")]
    Basis { a: String, b: String },
    #[error("charge conjugation failed: {0}")]
    Conjugation(String),
    #[error(transparent)]
    Lie(#[from] LieError),
}

/// Set of basis indices, kept sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GeneratorSet {
    members: Vec<usize>,
}

impl GeneratorSet {
    pub fn new<I: IntoIterator<Item = usize>>(members: I) -> Self {
        let set: BTreeSet<usize> = members.into_iter().collect();
        GeneratorSet {
            members: set.into_iter().collect(),
        }
    }

    /// Looks labels up in `basis`.
    pub fn from_labels(labels: &[&str], basis: &GeneratorBasis) -> Result<Self, LieError> {
        labels
            .iter()
            .map(|l| basis.index_of(l).ok_or_else(|| LieError::UnknownLabel((*l).into())))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn labels(&self, basis: &GeneratorBasis) -> Vec<String> {
        self.members.iter().map(|&i| basis.label(i).to_string()).collect()
    }
}

/// `[T_a, T_b]` as `coefficient · T_c`, or `None` when they commute.
fn single_commutator(
    basis: &GeneratorBasis,
    a: usize,
    b: usize,
) -> Result<Option<(usize, Complex64)>, ClassifierError> {
    let comm = commutator(basis.matrix(a), basis.matrix(b));
    if frobenius(&comm) < PATTERN_TOL {
        return Ok(None);
    }
    let coeffs = basis.project(&comm);
    let nonzero: Vec<_> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > PATTERN_TOL)
        .collect();
    match nonzero.as_slice() {
        [(c, v)] => Ok(Some((*c, **v))),
        _ => Err(ClassifierError::Basis {
            a: basis.label(a).into(),
            b: basis.label(b).into(),
        }),
    }
}

/// Smallest superset of `seed` closed under commutation, coefficients
/// ignored. Each commutator must be a single basis element.
pub fn commutator_closure(
    seed: &GeneratorSet,
    basis: &GeneratorBasis,
) -> Result<GeneratorSet, ClassifierError> {
    if seed.is_empty() {
        return Err(ClassifierError::Argument("empty seed set".into()));
    }
    if let Some(&bad) = seed.members.iter().find(|&&i| i >= basis.len()) {
        return Err(ClassifierError::Argument(format!("index {bad} outside the basis")));
    }
    let mut set: BTreeSet<usize> = seed.members.iter().copied().collect();
    let mut frontier: Vec<usize> = set.iter().copied().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        let current: Vec<usize> = set.iter().copied().collect();
        for &a in &frontier {
            for &b in &current {
                if let Some((c, _)) = single_commutator(basis, a, b)? {
                    if set.insert(c) {
                        next.push(c);
                    }
                }
            }
        }
        frontier = next;
    }
    Ok(GeneratorSet::new(set))
}

/// Labels reachable from the Hamiltonian family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SubalgebraName {
    #[serde(rename = "su(2)")]
    Su2,
    #[serde(rename = "su(2)⊕u(1)")]
    Su2U1,
    #[serde(rename = "so(4)")]
    So4,
    #[serde(rename = "so(4)⊕u(1)")]
    So4U1,
    #[serde(rename = "so(5)")]
    So5,
    #[serde(rename = "su(4)")]
    Su4,
    #[serde(rename = "unknown")]
    Unknown,
}

impl SubalgebraName {
    pub fn as_str(self) -> &'static str {
        match self {
            SubalgebraName::Su2 => "su(2)",
            SubalgebraName::Su2U1 => "su(2)⊕u(1)",
            SubalgebraName::So4 => "so(4)",
            SubalgebraName::So4U1 => "so(4)⊕u(1)",
            SubalgebraName::So5 => "so(5)",
            SubalgebraName::Su4 => "su(4)",
            SubalgebraName::Unknown => "unknown",
        }
    }
}

impl fmt::Display for SubalgebraName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A hit in the catalogue of maximal subalgebras of the Hamiltonian family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableMatch {
    pub name: SubalgebraName,
    /// Row within the catalogue entries of that name, from 1.
    pub row: usize,
    /// The (i, j, k) assignment, e.g. "xyz".
    pub indices: String,
    /// Whether the qubit-swapped table was needed.
    pub swapped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubalgebraLabel {
    pub name: SubalgebraName,
    pub dimension: usize,
    /// Size of the closed generator set itself.
    pub span_dimension: usize,
    /// Members of the span commuting with all of it.
    pub center: Vec<usize>,
    /// Spinor generators outside the span commuting with all of it.
    pub commutant: Vec<usize>,
    pub table_match: Option<TableMatch>,
}

/// Names a closed spinor generator set from its dimension, center and
/// commutant in su(4).
pub fn identify_subalgebra(
    span: &GeneratorSet,
    basis: &GeneratorBasis,
) -> Result<SubalgebraLabel, ClassifierError> {
    let commutes = |a: usize, b: usize| -> Result<bool, ClassifierError> {
        Ok(single_commutator(basis, a, b)?.is_none())
    };
    let mut center = Vec::new();
    for &a in span.members() {
        let mut all = true;
        for &b in span.members() {
            all &= commutes(a, b)?;
        }
        if all {
            center.push(a);
        }
    }
    let mut commutant = Vec::new();
    for c in (0..basis.len()).filter(|c| !span.contains(*c)) {
        let mut all = true;
        for &b in span.members() {
            all &= commutes(c, b)?;
        }
        if all {
            commutant.push(c);
        }
    }
    let d = span.len();
    let (name, dimension) = match (d, center.len()) {
        (3, 0) => (SubalgebraName::Su2, 3),
        (4, 1) => (SubalgebraName::Su2U1, 4),
        (6, 0) if commutant.len() == 1 => (SubalgebraName::So4U1, 7),
        (6, 0) => (SubalgebraName::So4, 6),
        (7, 1) => (SubalgebraName::So4U1, 7),
        (10, 0) => (SubalgebraName::So5, 10),
        (15, 0) => (SubalgebraName::Su4, 15),
        _ => (SubalgebraName::Unknown, d),
    };
    let table_match = if basis.kind() == crate::lie::BasisKind::Spinor {
        let mut full: BTreeSet<String> = span.labels(basis).into_iter().collect();
        if name == SubalgebraName::So4U1 && d == 6 {
            full.extend(commutant.iter().map(|&c| basis.label(c).to_string()));
        }
        match_table(&full)
    } else {
        None
    };
    Ok(SubalgebraLabel {
        name,
        dimension,
        span_dimension: d,
        center,
        commutant,
        table_match,
    })
}

/// Catalogue rows as patterns over placeholders i, j, k, `*` (all three)
/// and `1`.
const TABLE_ROWS: [(SubalgebraName, &[&str]); 5] = [
    (SubalgebraName::So4, &["ij", "jj", "k1", "ki", "kk", "1j"]),
    (SubalgebraName::So4U1, &["1*", "i*", "i1"]),
    (SubalgebraName::So4U1, &["i1", "1j", "jk", "ji", "ki", "kk", "ij"]),
    (SubalgebraName::So4U1, &["i1", "1i", "jk", "jj", "kj", "kk", "ii"]),
    (SubalgebraName::So5, &["i1", "1*", "j*", "k*"]),
];

fn expand_pattern(pattern: &[&str], ijk: [char; 3], swap: bool) -> BTreeSet<String> {
    let sub = |c: char| -> Vec<char> {
        match c {
            'i' => vec![ijk[0]],
            'j' => vec![ijk[1]],
            'k' => vec![ijk[2]],
            '*' => vec!['X', 'Y', 'Z'],
            other => vec![other],
        }
    };
    let mut out = BTreeSet::new();
    for p in pattern {
        let mut chars = p.chars();
        let (a, b) = (chars.next().unwrap(), chars.next().unwrap());
        for x in sub(a) {
            for y in sub(b) {
                let s = if swap { format!("{y}{x}") } else { format!("{x}{y}") };
                out.insert(s);
            }
        }
    }
    out
}

fn match_table(labels: &BTreeSet<String>) -> Option<TableMatch> {
    const PERMS: [[char; 3]; 6] = [
        ['X', 'Y', 'Z'],
        ['X', 'Z', 'Y'],
        ['Y', 'X', 'Z'],
        ['Y', 'Z', 'X'],
        ['Z', 'X', 'Y'],
        ['Z', 'Y', 'X'],
    ];
    let mut rows_seen = std::collections::HashMap::new();
    for (name, pattern) in TABLE_ROWS {
        let row = {
            let r = rows_seen.entry(name.as_str()).or_insert(0);
            *r += 1;
            *r
        };
        for swapped in [false, true] {
            for p in PERMS {
                if &expand_pattern(pattern, p, swapped) == labels {
                    return Some(TableMatch {
                        name,
                        row,
                        indices: p.iter().collect::<String>().to_lowercase(),
                        swapped,
                    });
                }
            }
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SectorKind {
    S,
    U1,
    D,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Sector {
    pub indices: Vec<usize>,
    pub kind: SectorKind,
    pub dimension_label: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SectorDecomposition {
    pub blocks: Vec<Sector>,
    /// The single u(1) generator Q, when there is exactly one.
    pub u1_generator: Option<usize>,
    pub hamiltonian_set: GeneratorSet,
}

impl SectorDecomposition {
    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    pub fn block_of(&self, index: usize) -> Option<usize> {
        self.blocks.iter().position(|b| b.indices.contains(&index))
    }

    pub fn of_kind(&self, kind: SectorKind) -> impl Iterator<Item = (usize, &Sector)> {
        self.blocks.iter().enumerate().filter(move |(_, b)| b.kind == kind)
    }
}

/// Deterministic low-discrepancy points in `[t0, tf]`.
pub fn default_sample_times(t0: f64, tf: f64) -> Vec<f64> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    (0..DEFAULT_SAMPLES)
        .map(|k| t0 + ((0.5 + k as f64 * phi) % 1.0) * (tf - t0))
        .collect()
}

/// Splits the generators into the connected components of the union of
/// A's nonzero pattern over `sample_times` and a few extra points spread
/// over their range.
pub fn sector_decompose(
    a: &AdjointMatrix,
    hamiltonian_set: &GeneratorSet,
    sample_times: &[f64],
) -> Result<SectorDecomposition, ClassifierError> {
    if sample_times.is_empty() {
        return Err(ClassifierError::Argument("no sample times".into()));
    }
    let n = a.dim();
    let lo = sample_times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = sample_times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let hi = if hi > lo { hi } else { lo + 1.0 };
    let mut times = sample_times.to_vec();
    times.extend(default_sample_times(lo, hi));

    let mut linked = vec![vec![false; n]; n];
    for &t in &times {
        let m = a.at(t)?;
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        for r in 0..n {
            for c in 0..n {
                if m[(r, c)].norm() > PATTERN_TOL * scale {
                    linked[r][c] = true;
                    linked[c][r] = true;
                }
            }
        }
    }

    // union-find over the pattern
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let next = p[y];
            p[y] = r;
            y = next;
        }
        r
    }
    for r in 0..n {
        for c in (r + 1)..n {
            if linked[r][c] {
                let (x, y) = (find(&mut parent, r), find(&mut parent, c));
                if x != y {
                    parent[x.max(y)] = x.min(y);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().push(i);
    }

    let mut blocks: Vec<Sector> = groups
        .into_values()
        .map(|indices| {
            let kind = if indices.iter().any(|i| hamiltonian_set.contains(*i)) {
                SectorKind::S
            } else if indices.len() == 1 && !linked[indices[0]].iter().any(|&x| x) {
                SectorKind::U1
            } else {
                SectorKind::D
            };
            let dimension_label = match kind {
                SectorKind::S => format!("S{}", indices.len()),
                SectorKind::U1 => "U1".to_string(),
                SectorKind::D => format!("D{}", indices.len()),
            };
            Sector {
                indices,
                kind,
                dimension_label,
            }
        })
        .collect();
    let rank = |k: SectorKind| match k {
        SectorKind::S => 0,
        SectorKind::U1 => 1,
        SectorKind::D => 2,
    };
    blocks.sort_by_key(|b| (rank(b.kind), b.indices[0]));
    let u1: Vec<usize> = blocks
        .iter()
        .filter(|b| b.kind == SectorKind::U1)
        .map(|b| b.indices[0])
        .collect();
    Ok(SectorDecomposition {
        blocks,
        u1_generator: if u1.len() == 1 { Some(u1[0]) } else { None },
        hamiltonian_set: hamiltonian_set.clone(),
    })
}

/// One D-type generator set with signs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DTypeSet {
    /// Index into [`SectorDecomposition::blocks`].
    pub block: usize,
    #[serde(serialize_with = "serialize_signed")]
    pub generators: Vec<SignedLabel>,
}

fn serialize_signed<S: serde::Serializer>(v: &[SignedLabel], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|l| l.to_string()))
}

/// D-type sets. With a u(1) generator Q they come in conjugate pairs
/// `(D, D̄)` at positions `(2m, 2m + 1)`, related elementwise by
/// `[Q, D_k] = -2i D̄_k` and `[Q, D̄_k] = 2i D_k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DTypeEnumeration {
    pub charge: Option<String>,
    pub sets: Vec<DTypeSet>,
}

impl DTypeEnumeration {
    pub fn conjugate_pairs(&self) -> Vec<(&DTypeSet, &DTypeSet)> {
        if self.charge.is_none() {
            return Vec::new();
        }
        self.sets.chunks(2).filter(|c| c.len() == 2).map(|c| (&c[0], &c[1])).collect()
    }
}

fn spinor_label(i: usize) -> SpinorLabel {
    crate::lie::SPINOR_ORDER[i].parse().expect("canonical label")
}

/// Signed D-type sets of a spinor-basis decomposition.
pub fn enumerate_dtype(decomp: &SectorDecomposition) -> Result<DTypeEnumeration, ClassifierError> {
    let d_blocks: Vec<usize> = decomp.of_kind(SectorKind::D).map(|(i, _)| i).collect();
    let plain = |b: usize| DTypeSet {
        block: b,
        generators: decomp.blocks[b]
            .indices
            .iter()
            .map(|&i| SignedLabel::positive(spinor_label(i)))
            .collect(),
    };
    let Some(q) = decomp.u1_generator else {
        return Ok(DTypeEnumeration {
            charge: None,
            sets: d_blocks.into_iter().map(plain).collect(),
        });
    };
    let basis = GeneratorBasis::spinor();
    let qm = basis.matrix(q);
    let mut sets = Vec::new();
    let mut used = BTreeSet::new();
    for &b in &d_blocks {
        if used.contains(&b) {
            continue;
        }
        let d = plain(b);
        let mut bar = Vec::new();
        let mut target = None;
        for g in &d.generators {
            let c = commutator(qm, &g.matrix());
            // D̄_k = [Q, D_k] / (-2i)
            let image = c * (I / 2.0);
            let (coeffs, residual) = basis.project_with_residual(&image);
            let hits: Vec<_> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() > PATTERN_TOL)
                .collect();
            let &[(idx, z)] = hits.as_slice() else {
                return Err(ClassifierError::Conjugation(format!(
                    "[{}, {g}] is not a single generator",
                    basis.label(q)
                )));
            };
            if residual > 1e-12 || (z.re.abs() - 1.0).abs() > 1e-12 || z.im.abs() > 1e-12 {
                return Err(ClassifierError::Conjugation(format!(
                    "[{}, {g}] has coefficient {z}",
                    basis.label(q)
                )));
            }
            let blk = decomp.block_of(idx);
            match (target, blk) {
                (None, Some(t)) if t != b && decomp.blocks[t].kind == SectorKind::D => target = Some(t),
                (Some(t), Some(u)) if t == u => {}
                _ => {
                    return Err(ClassifierError::Conjugation(format!(
                        "image of {g} leaves the conjugate block"
                    )))
                }
            }
            bar.push(SignedLabel {
                negative: z.re < 0.0,
                label: spinor_label(idx),
            });
        }
        // the inverse relation must hold with the chosen signs
        for (dk, bk) in d.generators.iter().zip(&bar) {
            let lhs = commutator(qm, &bk.matrix());
            let rhs = dk.matrix() * (I * 2.0);
            if frobenius(&(lhs - rhs)) > 1e-12 {
                return Err(ClassifierError::Conjugation(format!(
                    "[Q, {bk}] differs from 2i·{dk}"
                )));
            }
        }
        let t = target.expect("non-empty block");
        if bar.len() != decomp.blocks[t].indices.len() {
            return Err(ClassifierError::Conjugation("conjugate blocks differ in size".into()));
        }
        used.insert(b);
        used.insert(t);
        sets.push(d);
        sets.push(DTypeSet {
            block: t,
            generators: bar,
        });
    }
    Ok(DTypeEnumeration {
        charge: Some(basis.label(q).to_string()),
        sets,
    })
}

/// A linear condition on the Hamiltonian coefficients.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum Constraint {
    /// The named coefficient must vanish.
    Vanish { name: &'static str },
    /// The two coefficients must be equal.
    Equal { a: &'static str, b: &'static str },
    /// `Σ w_m x_m = 0` for anything else.
    Linear { terms: Vec<(&'static str, f64)> },
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Vanish { name } => write!(f, "{name} -> 0"),
            Constraint::Equal { a, b } => write!(f, "{a} = {b}"),
            Constraint::Linear { terms } => {
                let parts: Vec<String> = terms.iter().map(|(n, w)| format!("{w}*{n}")).collect();
                write!(f, "{} = 0", parts.join(" + "))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ForcedConstraint {
    pub constraint: Constraint,
    /// λ index (1-based) whose coefficient the condition removes.
    pub lambda: usize,
    /// Whether the given Hamiltonian already meets it at every sample.
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Su3Report {
    /// `L[k][m]`: coefficient of λ_{k+1} per unit of coefficient m
    /// ([`COEFFICIENT_NAMES`] order) in the expansion of H.
    pub lambda_map: Vec<[f64; 9]>,
    pub constraints_forced: Vec<ForcedConstraint>,
    /// λ generators left with a non-zero coefficient once every constraint
    /// is imposed.
    pub residual_span_dim: usize,
    pub residual_lambdas: Vec<usize>,
    /// Dimension of the Lie algebra generated by the residual λ set.
    pub generated_dim: usize,
    pub feasible: bool,
}

/// Linear map from the nine coefficients to the λ expansion of H.
pub fn lambda_expansion_map() -> Vec<[f64; 9]> {
    let lambda = GeneratorBasis::lambda();
    let mut out = vec![[0.0; 9]; 15];
    for (m, label) in crate::lie::COEFFICIENT_LABELS.iter().enumerate() {
        let s: SpinorLabel = label.parse().expect("static label");
        for (k, c) in lambda.project(&s.matrix()).into_iter().enumerate() {
            out[k][m] = if c.re.abs() < 1e-15 { 0.0 } else { c.re };
        }
    }
    out
}

/// Coefficients of H(t) over λ_1 … λ_15.
pub fn lambda_expansion(h: &HamiltonianSpec, t: f64) -> Result<[f64; 15], ClassifierError> {
    let x = h.coefficients_at(t).map_err(LieError::from)?;
    let map = lambda_expansion_map();
    let mut out = [0.0; 15];
    for (k, row) in map.iter().enumerate() {
        out[k] = row.iter().zip(x).map(|(w, v)| w * v).sum();
    }
    Ok(out)
}

fn constraint_from_row(row: &[f64; 9]) -> Option<Constraint> {
    let terms: Vec<(usize, f64)> = row
        .iter()
        .enumerate()
        .filter(|(_, w)| w.abs() > 1e-12)
        .map(|(m, w)| (m, *w))
        .collect();
    match terms.as_slice() {
        [] => None,
        [(m, _)] => Some(Constraint::Vanish {
            name: COEFFICIENT_NAMES[*m],
        }),
        [(a, wa), (b, wb)] if (wa + wb).abs() < 1e-12 => Some(Constraint::Equal {
            a: COEFFICIENT_NAMES[*a],
            b: COEFFICIENT_NAMES[*b],
        }),
        _ => Some(Constraint::Linear {
            terms: terms.iter().map(|(m, w)| (COEFFICIENT_NAMES[*m], *w)).collect(),
        }),
    }
}

/// Dimension of the real Lie algebra generated by the given matrices.
fn generated_dimension(seed: Vec<CMat>) -> usize {
    // Gram-Schmidt over the real span under the trace inner product
    let mut span: Vec<CMat> = Vec::new();
    let push = |span: &mut Vec<CMat>, m: CMat| -> bool {
        let mut v = m;
        for b in span.iter() {
            let p = crate::linalg::trace_product(&b.adjoint(), &v);
            v -= b * p;
        }
        let n = frobenius(&v);
        if n > 1e-9 {
            span.push(v / crate::linalg::re(n));
            true
        } else {
            false
        }
    };
    let mut queue = seed;
    while let Some(m) = queue.pop() {
        if push(&mut span, m.clone()) {
            let latest = span.last().unwrap().clone();
            for b in span.clone() {
                queue.push(commutator(&latest, &b) * (-I));
            }
        }
    }
    span.len()
}

/// Which conditions would remove λ_9 … λ_14 from H, and what survives.
pub fn su3_exclusion_check(h: &HamiltonianSpec) -> Su3Report {
    let map = lambda_expansion_map();
    let samples = default_sample_times(0.0, 1.0);
    let active: Vec<bool> = h.coefficients().iter().map(|c| !c.is_identically_zero()).collect();

    let mut constraints_forced = Vec::new();
    for (k, row) in map.iter().enumerate().take(14).skip(8) {
        let Some(constraint) = constraint_from_row(row) else {
            continue;
        };
        let involved = row.iter().enumerate().any(|(m, w)| w.abs() > 1e-12 && active[m]);
        if !involved {
            continue;
        }
        let satisfied = samples.iter().all(|&t| {
            h.coefficients_at(t)
                .map(|x| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>().abs() < 1e-12)
                .unwrap_or(false)
        });
        constraints_forced.push(ForcedConstraint {
            constraint,
            lambda: k + 1,
            satisfied,
        });
    }

    // impose every cross-term condition on the free coefficients
    let mut reduced = map.clone();
    for row in reduced.iter_mut() {
        for name in ["h1_x", "h1_y", "h2_x", "h2_y"] {
            row[COEFFICIENT_NAMES.iter().position(|n| *n == name).unwrap()] = 0.0;
        }
        row[0] += row[1];
        row[1] = 0.0;
    }
    let mut active_reduced = active.clone();
    active_reduced[0] |= active[1];
    let residual_lambdas: Vec<usize> = reduced
        .iter()
        .enumerate()
        .filter(|(_, row)| row.iter().enumerate().any(|(m, w)| w.abs() > 1e-12 && active_reduced[m]))
        .map(|(k, _)| k + 1)
        .collect();
    let generated_dim = generated_dimension(
        residual_lambdas
            .iter()
            .map(|&k| crate::lie::lambda_matrix(k))
            .collect(),
    );
    let su3_inside = {
        let n = generated_dimension(
            residual_lambdas
                .iter()
                .map(|&k| crate::lie::lambda_matrix(k))
                .chain((1..=8).map(crate::lie::lambda_matrix))
                .collect(),
        );
        n == generated_dim
    };
    let feasible = constraints_forced.iter().all(|c| c.satisfied) && generated_dim >= 8 && su3_inside;
    Su3Report {
        lambda_map: map,
        constraints_forced,
        residual_span_dim: residual_lambdas.len(),
        residual_lambdas,
        generated_dim,
        feasible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Coefficient;
    use proptest::prelude::*;

    fn spinor_set(labels: &[&str]) -> GeneratorSet {
        GeneratorSet::from_labels(labels, &GeneratorBasis::spinor()).unwrap()
    }

    fn ising() -> HamiltonianSpec {
        HamiltonianSpec::from_named([
            ("J_x", 1.0.into()),
            ("h2_x", Coefficient::parse("0.3+0.1*cos(t)").unwrap()),
            ("h2_y", 0.2.into()),
            ("h2_z", Coefficient::parse("sin(t)").unwrap()),
        ])
        .unwrap()
    }

    #[test]
    fn closures() {
        let b = GeneratorBasis::spinor();
        assert_eq!(
            commutator_closure(&spinor_set(&["X1", "Y1"]), &b).unwrap(),
            spinor_set(&["X1", "Y1", "Z1"])
        );
        assert_eq!(
            commutator_closure(&spinor_set(&["1X", "1Y", "1Z", "XX"]), &b).unwrap(),
            spinor_set(&["1X", "1Y", "1Z", "XX", "XY", "XZ"])
        );
        let so5 = spinor_set(&["1X", "1Y", "1Z", "XX", "YY", "Z1"]);
        assert_eq!(
            commutator_closure(&so5, &b).unwrap(),
            spinor_set(&["1X", "1Y", "1Z", "XX", "XY", "XZ", "YX", "YY", "YZ", "Z1"])
        );
        assert!(commutator_closure(&GeneratorSet::new([]), &b).is_err());
    }

    #[test]
    fn lambda_basis_closure_is_rejected() {
        let l = GeneratorBasis::lambda();
        // [λ4, λ5] mixes λ3 and λ8
        let seed = GeneratorSet::new([3, 4]);
        assert!(matches!(commutator_closure(&seed, &l), Err(ClassifierError::Basis { .. })));
    }

    #[test]
    fn labels() {
        let b = GeneratorBasis::spinor();
        let s = identify_subalgebra(&spinor_set(&["1X", "1Y", "1Z", "XX", "XY", "XZ"]), &b).unwrap();
        assert_eq!(s.name, SubalgebraName::So4U1);
        assert_eq!(s.dimension, 7);
        assert_eq!(s.commutant, vec![b.index_of("X1").unwrap()]);
        let m = s.table_match.unwrap();
        assert_eq!((m.row, m.indices.as_str(), m.swapped), (1, "xyz", false));

        let so5 = spinor_set(&["1X", "1Y", "1Z", "XX", "XY", "XZ", "YX", "YY", "YZ", "Z1"]);
        let s = identify_subalgebra(&so5, &b).unwrap();
        assert_eq!(s.name, SubalgebraName::So5);
        assert_eq!(s.table_match.unwrap().name, SubalgebraName::So5);

        assert_eq!(identify_subalgebra(&spinor_set(&["X1", "Y1", "Z1"]), &b).unwrap().name, SubalgebraName::Su2);
        let so4 = spinor_set(&["X1", "Y1", "Z1", "1X", "1Y", "1Z"]);
        assert_eq!(identify_subalgebra(&so4, &b).unwrap().name, SubalgebraName::So4);
        assert_eq!(identify_subalgebra(&GeneratorSet::new(0..15), &b).unwrap().name, SubalgebraName::Su4);
        let abelian = spinor_set(&["XX", "YY", "ZZ"]);
        assert_eq!(identify_subalgebra(&abelian, &b).unwrap().name, SubalgebraName::Unknown);
    }

    #[test]
    fn ising_sectors() {
        let h = ising();
        let a = AdjointMatrix::spinor(&h);
        let d = sector_decompose(&a, &GeneratorSet::new(h.support()), &[0.0, 2.0]).unwrap();
        assert_eq!(d.block_sizes(), vec![6, 1, 4, 4]);
        let b = GeneratorBasis::spinor();
        assert_eq!(d.u1_generator, b.index_of("X1"));
        let e = enumerate_dtype(&d).unwrap();
        assert_eq!(e.charge.as_deref(), Some("X1"));
        let show = |s: &DTypeSet| s.generators.iter().map(|g| g.to_string()).collect::<Vec<_>>();
        assert_eq!(show(&e.sets[0]), ["Y1", "ZX", "ZY", "ZZ"]);
        assert_eq!(show(&e.sets[1]), ["-Z1", "YX", "YY", "YZ"]);
        assert!(sector_decompose(&a, &GeneratorSet::new(h.support()), &[]).is_err());
    }

    #[test]
    fn so5_and_uncoupled_sectors() {
        let h = HamiltonianSpec::constant([0.7, -0.4, 0.0, 0.0, 0.0, 0.9, 0.3, 0.2, -0.5]).unwrap();
        let a = AdjointMatrix::spinor(&h);
        let d = sector_decompose(&a, &GeneratorSet::new(h.support()), &[0.0]).unwrap();
        assert_eq!(d.block_sizes(), vec![10, 5]);
        let e = enumerate_dtype(&d).unwrap();
        assert!(e.charge.is_none());
        let labels: Vec<String> = e.sets[0].generators.iter().map(|g| g.to_string()).collect();
        assert_eq!(labels, ["X1", "Y1", "ZX", "ZY", "ZZ"]);

        let h = HamiltonianSpec::new_uncoupled(
            [0.0, 0.0, 0.0, 0.3, -0.2, 0.5, 0.7, 0.1, 0.4].map(Coefficient::Constant),
        );
        let a = AdjointMatrix::spinor(&h);
        let d = sector_decompose(&a, &GeneratorSet::new(h.support()), &[0.0]).unwrap();
        assert_eq!(d.block_sizes(), vec![3, 3, 9]);
        assert_eq!(enumerate_dtype(&d).unwrap().sets[0].generators.len(), 9);
    }

    #[test]
    fn generic_is_single_block() {
        let h = HamiltonianSpec::constant([0.7, -0.4, 0.3, 0.2, 0.6, 0.9, 0.3, 0.2, -0.5]).unwrap();
        let a = AdjointMatrix::spinor(&h);
        let d = sector_decompose(&a, &GeneratorSet::new(h.support()), &[0.0]).unwrap();
        assert_eq!(d.block_sizes(), vec![15]);
    }

    #[test]
    fn blocks_are_closed_under_hamiltonian() {
        let b = GeneratorBasis::spinor();
        let h = ising();
        let a = AdjointMatrix::spinor(&h);
        let hs = GeneratorSet::new(h.support());
        let d = sector_decompose(&a, &hs, &[0.5]).unwrap();
        for block in &d.blocks {
            for &g in &block.indices {
                for &x in hs.members() {
                    if let Some((c, _)) = single_commutator(&b, x, g).unwrap() {
                        assert!(block.indices.contains(&c));
                    }
                }
            }
        }
    }

    #[test]
    fn su3_constraints() {
        let h = HamiltonianSpec::constant([0.7, -0.4, 0.3, 0.2, 0.6, 0.9, 0.3, 0.2, -0.5]).unwrap();
        let r = su3_exclusion_check(&h);
        let shown: Vec<String> = r.constraints_forced.iter().map(|c| c.constraint.to_string()).collect();
        assert_eq!(shown, ["J_x = J_y", "h1_x -> 0", "h1_y -> 0", "h2_x -> 0", "h2_y -> 0"]);
        assert_eq!(r.residual_span_dim, 4);
        assert_eq!(r.residual_lambdas, vec![3, 6, 8, 15]);
        assert!(!r.feasible);
        assert!(r.generated_dim < 8);

        let constrained = HamiltonianSpec::constant([0.5, 0.5, 0.3, 0.0, 0.0, 0.9, 0.0, 0.0, -0.5]).unwrap();
        let r = su3_exclusion_check(&constrained);
        assert!(r.constraints_forced.iter().all(|c| c.satisfied));
        assert_eq!(r.residual_span_dim, 4);
        assert!(!r.feasible);
    }

    proptest! {
        #[test]
        fn closure_is_idempotent(seed in prop::collection::btree_set(0usize..15, 1..5)) {
            let b = GeneratorBasis::spinor();
            let once = commutator_closure(&GeneratorSet::new(seed), &b).unwrap();
            let twice = commutator_closure(&once, &b).unwrap();
            prop_assert_eq!(once, twice);
        }
    }
}
