//! Bucketing codes: `T` pairs of subsets `(B0_t, B1_t)` of the two point
//! spaces, given as membership predicates with analytically known side
//! probabilities. Buckets are never materialized as point sets.
//!
//! Bucket ids are `u64`. Composite codes number their buckets as follows:
//! a tensor power uses little-endian mixed radix over its blocks (block 0 is
//! the least significant digit), a concatenation places the buckets of the
//! second code after those of the first.

mod descriptor;
mod exact;
mod shell;
mod typeclass;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng;

pub use descriptor::CodeDescriptor;
pub use exact::{code_success_enumerated, code_success_exact, code_success_exact_with, ENUMERATION_LIMIT};
pub use shell::{shell_analytics, shell_capture, shell_capture_count, ln_shell_capture, ShellAnalytics};
pub use typeclass::{round_blocks, typeclass_code, TypeClassCode};

/// How [`concatenate`] combines two codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConcatMode {
    /// Both codes act on the same coordinates; the bucket lists are joined.
    Union,
    /// The codes act on disjoint coordinate blocks; dimensions add.
    Disjoint,
}

/// Buckets sharing the same side probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideClass {
    /// `p_{B0,t*}`
    pub side0: f64,
    /// `p_{*B1,t}`
    pub side1: f64,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct TypeClassLayout {
    pub p: crate::probmodel::ProbabilityMatrix,
    pub blocks: Vec<crate::probmodel::NonnegMatrix>,
    pub segments: Vec<usize>,
    pub row_counts: Vec<Vec<u32>>,
    pub col_counts: Vec<Vec<u32>>,
    /// permutations of buckets `1..T`; empty when generated on demand
    pub perms: Vec<Vec<u32>>,
    pub side0: f64,
    pub side1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Node {
    FullSpace { b0: usize, b1: usize },
    Classical { k: usize, draws: u64, coords: Vec<Vec<usize>> },
    Shell { d0: usize, centers: Vec<Vec<u64>>, p_star: f64 },
    TypeClass(Box<TypeClassLayout>),
    TensorPower { base: Box<BucketingCode>, k: usize },
    Concat { first: Box<BucketingCode>, second: Box<BucketingCode>, mode: ConcatMode },
}

/// A data-independent bucketing code.
#[derive(Debug, Clone, PartialEq)]
pub struct BucketingCode {
    d: usize,
    t: u64,
    seed: u64,
    node: Node,
}

/// Bits of a binary point, little-endian within 64-bit words.
fn pack_bits(x: &[u8]) -> Vec<u64> {
    let mut out = vec![0u64; x.len().div_ceil(64).max(1)];
    for (c, &s) in x.iter().enumerate() {
        out[c / 64] |= ((s & 1) as u64) << (c % 64);
    }
    out
}

/// Full spaces on both sides: a single bucket pair.
pub fn full_space_code(d: usize, b0: usize, b1: usize) -> BucketingCode {
    BucketingCode { d, t: 1, seed: 0, node: Node::FullSpace { b0, b1 } }
}

/// `draws` independent random choices of `k` of the `d` binary coordinates;
/// each choice partitions the space into the `2^k` patterns on the chosen
/// coordinates, so the code has `draws · 2^k` buckets of side probability
/// `2^-k` under uniform marginals.
pub fn classical_code(d: usize, k: usize, draws: u64, seed: u64) -> Result<BucketingCode> {
    if k == 0 || k > d {
        return Err(Error::Domain(format!("need 1 <= k <= d, got k={k}, d={d}")));
    }
    if k >= 63 {
        return Err(Error::Overflow(format!("2^{k} patterns per draw")));
    }
    let t = draws
        .checked_mul(1u64 << k)
        .ok_or_else(|| Error::Overflow(format!("{draws} draws of 2^{k} buckets")))?;
    let coords = (0..draws)
        .map(|g| {
            let mut r = rng::stream(seed, "classical-coords", g);
            let mut c = index::sample(&mut r, d, k).into_vec();
            c.sort_unstable();
            c
        })
        .collect();
    Ok(BucketingCode { d, t, seed, node: Node::Classical { k, draws, coords } })
}

/// `T` shells around independent uniform centers: bucket `t` holds every
/// binary point agreeing with center `b_t` in exactly `d0 - 1` or `d0`
/// coordinates, on both sides.
pub fn shell_code(d: usize, d0: usize, t: u64, seed: u64) -> Result<BucketingCode> {
    if d0 == 0 || d0 > d {
        return Err(Error::Domain(format!("need 1 <= d0 <= d, got d0={d0}, d={d}")));
    }
    let centers = (0..t)
        .map(|i| {
            let mut r = rng::stream(seed, "shell-center", i);
            let bits: Vec<u8> = (0..d).map(|_| rand::Rng::random::<bool>(&mut r) as u8).collect();
            pack_bits(&bits)
        })
        .collect();
    let p_star = shell::ln_shell_mass(d, d0).exp();
    Ok(BucketingCode { d, t, seed, node: Node::Shell { d0, centers, p_star } })
}

/// `k`-th tensor power: dimension `k·d`, buckets indexed by `k`-tuples.
pub fn tensor_power(code: &BucketingCode, k: usize) -> Result<BucketingCode> {
    if k == 0 {
        return Err(Error::Domain("tensor power needs k >= 1".into()));
    }
    if k == 1 {
        return Ok(code.clone());
    }
    let t = u32::try_from(k)
        .ok()
        .and_then(|k32| code.t.checked_pow(k32))
        .ok_or_else(|| Error::Overflow(format!("{}^{k} buckets", code.t)))?;
    Ok(BucketingCode {
        d: code.d * k,
        t,
        seed: code.seed,
        node: Node::TensorPower { base: Box::new(code.clone()), k },
    })
}

/// Joins the bucket lists of two codes; `T = T1 + T2`.
pub fn concatenate(c1: &BucketingCode, c2: &BucketingCode, mode: ConcatMode) -> Result<BucketingCode> {
    if c1.alphabets() != c2.alphabets() {
        return Err(Error::DimensionMismatch("codes use different alphabets".into()));
    }
    let d = match mode {
        ConcatMode::Union if c1.d != c2.d => {
            return Err(Error::DimensionMismatch(format!("union of dimensions {} and {}", c1.d, c2.d)))
        }
        ConcatMode::Union => c1.d,
        ConcatMode::Disjoint => c1.d + c2.d,
    };
    let t = c1.t.checked_add(c2.t).ok_or_else(|| Error::Overflow("bucket count".into()))?;
    Ok(BucketingCode {
        d,
        t,
        seed: c1.seed,
        node: Node::Concat { first: Box::new(c1.clone()), second: Box::new(c2.clone()), mode },
    })
}

/// `W = Σ_t max(n0 p_{B0,t*}, n1 p_{*B1,t}, n0 p_{B0,t*} · n1 p_{*B1,t})`.
pub fn code_work(code: &BucketingCode, n0: f64, n1: f64) -> f64 {
    let terms = code
        .side_classes()
        .into_iter()
        .map(|c| {
            let (a, b) = (n0 * c.side0, n1 * c.side1);
            c.count * a.max(b).max(a * b)
        });
    crate::logspace::compensated_sum(terms)
}

fn merge_classes(mut classes: Vec<SideClass>) -> Vec<SideClass> {
    classes.sort_by(|x, y| x.side0.total_cmp(&y.side0).then(x.side1.total_cmp(&y.side1)));
    let mut out: Vec<SideClass> = Vec::with_capacity(classes.len());
    for c in classes {
        match out.last_mut() {
            Some(l)
                if (l.side0 - c.side0).abs() <= 1e-13 * l.side0.max(c.side0)
                    && (l.side1 - c.side1).abs() <= 1e-13 * l.side1.max(c.side1) =>
            {
                l.count += c.count
            }
            _ => out.push(c),
        }
    }
    out
}

impl BucketingCode {
    pub fn d(&self) -> usize {
        self.d
    }

    /// Number of bucket pairs `T`.
    pub fn bucket_count(&self) -> u64 {
        self.t
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kind(&self) -> &'static str {
        match &self.node {
            Node::FullSpace { .. } => "full_space",
            Node::Classical { .. } => "classical",
            Node::Shell { .. } => "shell",
            Node::TypeClass(_) => "type_class",
            Node::TensorPower { .. } => "tensor_power",
            Node::Concat { .. } => "concat",
        }
    }

    pub(crate) fn node(&self) -> &Node {
        &self.node
    }

    pub(crate) fn from_parts(d: usize, t: u64, seed: u64, node: Node) -> Self {
        Self { d, t, seed, node }
    }

    /// `(b0, b1)`
    pub fn alphabets(&self) -> (usize, usize) {
        match &self.node {
            Node::FullSpace { b0, b1 } => (*b0, *b1),
            Node::Classical { .. } | Node::Shell { .. } => (2, 2),
            Node::TypeClass(l) => (l.p.rows(), l.p.cols()),
            Node::TensorPower { base, .. } => base.alphabets(),
            Node::Concat { first, .. } => first.alphabets(),
        }
    }

    /// Multiset of side-probability pairs over all buckets.
    pub fn side_classes(&self) -> Vec<SideClass> {
        if self.t == 0 {
            return Vec::new();
        }
        match &self.node {
            Node::FullSpace { .. } => vec![SideClass { side0: 1.0, side1: 1.0, count: 1.0 }],
            Node::Classical { k, .. } => {
                let q = 0.5f64.powi(*k as i32);
                vec![SideClass { side0: q, side1: q, count: self.t as f64 }]
            }
            Node::Shell { p_star, .. } => {
                vec![SideClass { side0: *p_star, side1: *p_star, count: self.t as f64 }]
            }
            Node::TypeClass(l) => vec![SideClass { side0: l.side0, side1: l.side1, count: self.t as f64 }],
            Node::TensorPower { base, k } => {
                let unit = base.side_classes();
                let mut acc = vec![SideClass { side0: 1.0, side1: 1.0, count: 1.0 }];
                for _ in 0..*k {
                    let next = acc
                        .iter()
                        .flat_map(|a| {
                            unit.iter().map(move |u| SideClass {
                                side0: a.side0 * u.side0,
                                side1: a.side1 * u.side1,
                                count: a.count * u.count,
                            })
                        })
                        .collect();
                    acc = merge_classes(next);
                }
                acc
            }
            Node::Concat { first, second, .. } => {
                let mut v = first.side_classes();
                v.extend(second.side_classes());
                merge_classes(v)
            }
        }
    }

    /// `(p_{B0,t*}, p_{*B1,t})` under the marginals the code was built for.
    pub fn side_probabilities(&self, t: u64) -> (f64, f64) {
        assert!(t < self.t, "bucket {t} out of range");
        match &self.node {
            Node::FullSpace { .. } => (1.0, 1.0),
            Node::Classical { k, .. } => {
                let q = 0.5f64.powi(*k as i32);
                (q, q)
            }
            Node::Shell { p_star, .. } => (*p_star, *p_star),
            Node::TypeClass(l) => (l.side0, l.side1),
            Node::TensorPower { base, k } => {
                let mut rest = t;
                let (mut a, mut b) = (1.0, 1.0);
                for _ in 0..*k {
                    let (x, y) = base.side_probabilities(rest % base.t);
                    a *= x;
                    b *= y;
                    rest /= base.t;
                }
                (a, b)
            }
            Node::Concat { first, second, .. } => {
                if t < first.t {
                    first.side_probabilities(t)
                } else {
                    second.side_probabilities(t - first.t)
                }
            }
        }
    }

    /// Predicate evaluations needed to list the buckets of one point.
    pub fn membership_cost(&self) -> f64 {
        match &self.node {
            Node::FullSpace { .. } => 1.0,
            Node::Classical { draws, .. } => *draws as f64,
            Node::Shell { .. } | Node::TypeClass(_) => self.t as f64,
            Node::TensorPower { base, k } => *k as f64 * base.membership_cost(),
            Node::Concat { first, second, .. } => first.membership_cost() + second.membership_cost(),
        }
    }

    /// Sorted ids of the side-0 buckets containing `x`.
    pub fn buckets0(&self, x: &[u8]) -> Vec<u64> {
        self.buckets(x, 0)
    }

    /// Sorted ids of the side-1 buckets containing `y`.
    pub fn buckets1(&self, y: &[u8]) -> Vec<u64> {
        self.buckets(y, 1)
    }

    pub fn in_bucket0(&self, t: u64, x: &[u8]) -> bool {
        self.buckets0(x).binary_search(&t).is_ok()
    }

    pub fn in_bucket1(&self, t: u64, y: &[u8]) -> bool {
        self.buckets1(y).binary_search(&t).is_ok()
    }

    fn buckets(&self, x: &[u8], side: usize) -> Vec<u64> {
        assert_eq!(x.len(), self.d, "point dimension differs from code dimension");
        if self.t == 0 {
            return Vec::new();
        }
        match &self.node {
            Node::FullSpace { .. } => vec![0],
            Node::Classical { k, coords, .. } => coords
                .iter()
                .enumerate()
                .map(|(g, cs)| {
                    let pattern = cs.iter().enumerate().fold(0u64, |acc, (b, &c)| acc | (((x[c] & 1) as u64) << b));
                    ((g as u64) << k) | pattern
                })
                .collect(),
            Node::Shell { d0, centers, .. } => {
                let bits = pack_bits(x);
                let d = self.d as u32;
                centers
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| {
                        let disagree: u32 = c.iter().zip(&bits).map(|(a, b)| (a ^ b).count_ones()).sum();
                        let agree = (d - disagree) as usize;
                        agree == *d0 || agree + 1 == *d0
                    })
                    .map(|(t, _)| t as u64)
                    .collect()
            }
            Node::TypeClass(l) => typeclass::members(l, self.t, self.seed, x, side),
            Node::TensorPower { base, k } => {
                let bd = base.d;
                let mut ids = vec![0u64];
                let mut radix = 1u64;
                for b in 0..*k {
                    let part = base.buckets(&x[b * bd..(b + 1) * bd], side);
                    if part.is_empty() {
                        return Vec::new();
                    }
                    ids = ids
                        .iter()
                        .flat_map(|&acc| part.iter().map(move |&p| acc + p * radix))
                        .collect();
                    radix = radix.wrapping_mul(base.t);
                }
                ids.sort_unstable();
                ids
            }
            Node::Concat { first, second, mode } => {
                let (xa, xb) = match mode {
                    ConcatMode::Union => (x, x),
                    ConcatMode::Disjoint => x.split_at(first.d),
                };
                let mut ids = first.buckets(xa, side);
                ids.extend(second.buckets(xb, side).into_iter().map(|t| t + first.t));
                ids
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_points(d: usize) -> impl Iterator<Item = Vec<u8>> {
        (0u32..1 << d).map(move |v| (0..d).map(|c| (v >> c & 1) as u8).collect())
    }

    #[test]
    fn classical_with_all_coordinates_repeats_the_partition() {
        let c = classical_code(5, 5, 3, 7).unwrap();
        assert_eq!(c.bucket_count(), 3 * 32);
        if let Node::Classical { coords, .. } = c.node() {
            assert!(coords.iter().all(|cs| cs == &coords[0]));
        }
        let x = [1, 0, 1, 1, 0];
        let b = c.buckets0(&x);
        assert_eq!(b.len(), 3);
        assert_eq!(b[1] - b[0], 32);
        assert!(classical_code(4, 5, 1, 0).is_err());
    }

    #[test]
    fn classical_side_probability() {
        let c = classical_code(8, 3, 2, 1).unwrap();
        assert_eq!(c.side_probabilities(5), (0.125, 0.125));
        assert!((code_work(&c, 8.0, 8.0) - 16.0).abs() < 1e-12);
        let c = classical_code(10, 4, 1, 1).unwrap();
        assert!((code_work(&c, 16.0, 16.0) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn shell_bucket_sizes_match_mass() {
        let c = shell_code(4, 2, 1, 3).unwrap();
        let members = all_points(4).filter(|x| !c.buckets0(x).is_empty()).count();
        assert_eq!(members, 10);
        assert!((c.side_probabilities(0).0 - 0.625).abs() < 1e-15);
        let c = shell_code(4, 2, 3, 3).unwrap();
        assert!((code_work(&c, 1.6, 1.6) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn shell_center_membership() {
        let c = shell_code(6, 6, 1, 9).unwrap();
        if let Node::Shell { centers, .. } = c.node() {
            let b: Vec<u8> = (0..6).map(|i| (centers[0][0] >> i & 1) as u8).collect();
            assert_eq!(c.buckets0(&b), vec![0]);
        }
        let c = shell_code(6, 3, 1, 9).unwrap();
        if let Node::Shell { centers, .. } = c.node() {
            let b: Vec<u8> = (0..6).map(|i| (centers[0][0] >> i & 1) as u8).collect();
            assert!(c.buckets0(&b).is_empty());
        }
        assert_eq!(shell_code(12, 7, 4, 5).unwrap(), shell_code(12, 7, 4, 5).unwrap());
    }

    #[test]
    fn full_space_work() {
        let c = full_space_code(3, 2, 2);
        assert_eq!(code_work(&c, 5.0, 7.0), 35.0);
    }

    #[test]
    fn tensor_power_probabilities_and_ids() {
        let s = shell_code(4, 2, 3, 1).unwrap();
        assert_eq!(tensor_power(&s, 1).unwrap(), s);
        let sq = tensor_power(&s, 2).unwrap();
        assert_eq!((sq.d(), sq.bucket_count()), (8, 9));
        assert!((sq.side_probabilities(4).0 - 0.390625).abs() < 1e-15);
        let members = (0u32..256)
            .map(|v| (0..8).map(|c| (v >> c & 1) as u8).collect::<Vec<u8>>())
            .filter(|x| sq.in_bucket0(4, x))
            .count();
        assert_eq!(members, 100);
        let classes = sq.side_classes();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].count, 9.0);
        assert!(matches!(tensor_power(&classical_code(40, 30, 1, 0).unwrap(), 3), Err(Error::Overflow(_))));
    }

    #[test]
    fn concatenation_modes() {
        let s = shell_code(4, 2, 2, 1).unwrap();
        let u = concatenate(&s, &s, ConcatMode::Union).unwrap();
        assert_eq!((u.d(), u.bucket_count()), (4, 4));
        assert_eq!(u.side_probabilities(3), s.side_probabilities(1));
        let c = classical_code(6, 2, 1, 0).unwrap();
        assert!(matches!(concatenate(&s, &c, ConcatMode::Union), Err(Error::DimensionMismatch(_))));
        let dj = concatenate(&s, &c, ConcatMode::Disjoint).unwrap();
        assert_eq!((dj.d(), dj.bucket_count()), (10, 6));
        let w = code_work(&dj, 4.0, 4.0);
        assert!((w - code_work(&s, 4.0, 4.0) - code_work(&c, 4.0, 4.0)).abs() < 1e-12);
    }
}
