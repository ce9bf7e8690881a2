//! Interference graphs and the space of feasible schedules.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Schedules are stored as `u64` bit masks.
pub const MAX_LINKS: usize = 64;

/// Limits for exact enumeration of the schedule space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimit {
    pub max_links: usize,
    pub max_schedules: usize,
}

impl Default for EnumerationLimit {
    fn default() -> Self {
        Self {
            max_links: 24,
            max_schedules: 1 << 20,
        }
    }
}

#[inline]
pub(crate) fn bit(v: usize) -> u64 {
    1u64 << v
}

#[inline]
pub(crate) fn full_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Iterator over the set bits of a mask, lowest first.
#[derive(Debug, Clone)]
pub struct Bits(u64);

impl Iterator for Bits {
    type Item = usize;

    #[inline]
    fn next(&mut self) -> Option<usize> {
        if self.0 == 0 {
            return None;
        }
        let v = self.0.trailing_zeros() as usize;
        self.0 &= self.0 - 1;
        Some(v)
    }
}

#[inline]
pub fn bits(mask: u64) -> Bits {
    Bits(mask)
}

/// Conflict graph `G = (V, E)` over wireless links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterferenceGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
    masks: Vec<u64>,
}

impl InterferenceGraph {
    /// Builds a graph from undirected edges. Duplicates (in either
    /// orientation) are merged.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one link".into()));
        }
        if n > MAX_LINKS {
            return Err(Error::Capacity {
                what: "links per graph",
                n,
                limit: MAX_LINKS,
            });
        }
        let mut set = BTreeSet::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({u}, {v}) out of range for n = {n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidParameter(format!("self-loop at {u}")));
            }
            set.insert((u.min(v), u.max(v)));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = alloc::vec![Vec::new(); n];
        let mut masks = alloc::vec![0u64; n];
        for &(u, v) in &edges {
            neighbors[u].push(v);
            neighbors[v].push(u);
            masks[u] |= bit(v);
            masks[v] |= bit(u);
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        Ok(Self {
            n,
            edges,
            neighbors,
            masks,
        })
    }

    /// Parses the edge-list text format: the first meaningful line is `n`,
    /// then one `u v` pair per line. Blank lines and lines starting with `#`
    /// are skipped.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut tokens = line.split_whitespace();
            let parse = |tok: &str| -> Result<usize> {
                tok.parse::<usize>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("malformed token {tok:?}"),
                })
            };
            match n {
                None => {
                    let first = tokens.next().unwrap_or_default();
                    let value = parse(first)?;
                    if value == 0 {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "link count must be at least 1".into(),
                        });
                    }
                    if value > MAX_LINKS {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("link count {value} exceeds {MAX_LINKS}"),
                        });
                    }
                    if let Some(extra) = tokens.next() {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("unexpected token {extra:?} after link count"),
                        });
                    }
                    n = Some(value);
                }
                Some(count) => {
                    let (Some(a), Some(b)) = (tokens.next(), tokens.next()) else {
                        return Err(Error::Parse {
                            line: line_no,
                            message: "expected an edge \"u v\"".into(),
                        });
                    };
                    if let Some(extra) = tokens.next() {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("unexpected token {extra:?}"),
                        });
                    }
                    let (u, v) = (parse(a)?, parse(b)?);
                    if u >= count || v >= count {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("vertex index out of range (n = {count})"),
                        });
                    }
                    if u == v {
                        return Err(Error::Parse {
                            line: line_no,
                            message: format!("self-loop at vertex {u}"),
                        });
                    }
                    edges.push((u, v));
                }
            }
        }
        let n = n.ok_or(Error::Parse {
            line: 1,
            message: "missing link count".into(),
        })?;
        Self::new(n, edges)
    }

    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.n);
        for &(u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|v| (v - 1, v)))
    }

    /// Star on `n` vertices with centre 0.
    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|v| (0, v)))
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
    }

    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, core::iter::empty())
    }

    /// Erdős–Rényi `G(n, p)`; pairs are visited in lexicographic order, one
    /// draw each.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("edge probability {p} not in [0, 1]")));
        }
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        Self::new(n, edges)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    #[inline]
    pub fn neighbor_mask(&self, v: usize) -> u64 {
        self.masks[v]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.neighbors[v].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.neighbors.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn is_complete(&self) -> bool {
        self.edges.len() == self.n * (self.n - 1) / 2
    }

    #[inline]
    pub fn all_links(&self) -> u64 {
        full_mask(self.n)
    }

    /// True iff no edge has both endpoints in `mask`.
    #[inline]
    pub fn is_independent(&self, mask: u64) -> bool {
        bits(mask).all(|v| self.masks[v] & mask == 0)
    }

    /// True iff `mask` is independent and no further link can be added.
    pub fn is_maximal_independent(&self, mask: u64) -> bool {
        self.is_independent(mask) && (0..self.n).all(|v| mask & bit(v) != 0 || self.masks[v] & mask != 0)
    }

    pub fn is_feasible(&self, schedule: &Schedule) -> Result<bool> {
        if schedule.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: schedule.len(),
            });
        }
        Ok(self.is_independent(schedule.bits()))
    }

    /// Greedy maximal independent set drawn from `candidates` in ascending
    /// vertex order.
    pub fn greedy_independent(&self, candidates: u64) -> u64 {
        let mut chosen = 0u64;
        for v in bits(candidates & self.all_links()) {
            if self.masks[v] & chosen == 0 {
                chosen |= bit(v);
            }
        }
        chosen
    }

    /// Size of a maximum independent set inside `candidates`.
    pub fn max_independent_size(&self, candidates: u64) -> usize {
        if candidates == 0 {
            return 0;
        }
        let v = candidates.trailing_zeros() as usize;
        let rest = candidates & !bit(v);
        let local = self.masks[v] & rest;
        let with_v = 1 + self.max_independent_size(rest & !local);
        if local == 0 {
            return with_v;
        }
        with_v.max(self.max_independent_size(rest))
    }

    /// Interference degrees: `chi_i` is the largest number of links in
    /// `N_i` that can be active together, `chi = max_i chi_i`.
    pub fn interference_degree(&self) -> InterferenceDegree {
        let per_link: Vec<usize> = (0..self.n).map(|v| self.max_independent_size(self.masks[v])).collect();
        let max = per_link.iter().copied().max().unwrap_or(0);
        InterferenceDegree { per_link, max }
    }

    pub fn enumerate_feasible(&self) -> Result<ScheduleSpace> {
        ScheduleSpace::enumerate(self, EnumerationLimit::default())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InterferenceDegree {
    pub per_link: Vec<usize>,
    pub max: usize,
}

/// A set of links, stored as a bit mask of fixed width `len`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Schedule {
    len: usize,
    bits: u64,
}

impl Schedule {
    pub fn empty(len: usize) -> Self {
        Self { len, bits: 0 }
    }

    pub fn from_bits(len: usize, bits: u64) -> Result<Self> {
        if len > MAX_LINKS {
            return Err(Error::Capacity {
                what: "schedule width",
                n: len,
                limit: MAX_LINKS,
            });
        }
        if bits & !full_mask(len) != 0 {
            return Err(Error::Dimension {
                expected: len,
                got: 64 - bits.leading_zeros() as usize,
            });
        }
        Ok(Self { len, bits })
    }

    pub fn from_members(len: usize, members: &[usize]) -> Result<Self> {
        let mut bits = 0u64;
        for &m in members {
            if m >= len || m >= MAX_LINKS {
                return Err(Error::Dimension {
                    expected: len,
                    got: m + 1,
                });
            }
            bits |= bit(m);
        }
        Self::from_bits(len, bits)
    }

    pub fn from_indicators(indicators: &[bool]) -> Result<Self> {
        let members: Vec<usize> = indicators
            .iter()
            .enumerate()
            .filter_map(|(i, &on)| on.then_some(i))
            .collect();
        Self::from_members(indicators.len(), &members)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub fn contains(&self, link: usize) -> bool {
        link < self.len && self.bits & bit(link) != 0
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn members(&self) -> Bits {
        bits(self.bits)
    }

    pub fn indicators(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.contains(i)).collect()
    }
}

impl fmt::Debug for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, m) in self.members().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        f.write_str("}")
    }
}

/// All feasible schedules of a graph in ascending bit-pattern order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleSpace {
    n: usize,
    masks: Vec<u64>,
}

impl ScheduleSpace {
    pub fn enumerate(g: &InterferenceGraph, limit: EnumerationLimit) -> Result<Self> {
        let n = g.n();
        if n > limit.max_links {
            return Err(Error::Capacity {
                what: "links for exact enumeration",
                n,
                limit: limit.max_links,
            });
        }
        let mut masks = Vec::new();
        // Depth-first from the highest vertex, excluding before including,
        // emits masks in increasing numeric order.
        fn walk(g: &InterferenceGraph, v: usize, current: u64, out: &mut Vec<u64>, limit: usize) -> Result<()> {
            if v == 0 {
                if out.len() == limit {
                    return Err(Error::Capacity {
                        what: "feasible schedules",
                        n: g.n(),
                        limit,
                    });
                }
                out.push(current);
                return Ok(());
            }
            let u = v - 1;
            walk(g, u, current, out, limit)?;
            if g.neighbor_mask(u) & current == 0 {
                walk(g, u, current | bit(u), out, limit)?;
            }
            Ok(())
        }
        walk(g, n, 0, &mut masks, limit.max_schedules)?;
        Ok(Self { n, masks })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.masks.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    #[inline]
    pub fn masks(&self) -> &[u64] {
        &self.masks
    }

    pub fn get(&self, index: usize) -> Schedule {
        Schedule {
            len: self.n,
            bits: self.masks[index],
        }
    }

    #[inline]
    pub fn index_of_bits(&self, mask: u64) -> Option<usize> {
        self.masks.binary_search(&mask).ok()
    }

    pub fn index_of(&self, schedule: &Schedule) -> Option<usize> {
        if schedule.len() != self.n {
            return None;
        }
        self.index_of_bits(schedule.bits())
    }

    pub fn iter(&self) -> impl Iterator<Item = Schedule> + '_ {
        self.masks.iter().map(move |&bits| Schedule { len: self.n, bits })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn path3() -> InterferenceGraph {
        InterferenceGraph::parse_edge_list("3\n0 1\n1 2").unwrap()
    }

    #[test]
    fn parses_fig1_path() {
        let g = path3();
        assert_eq!(g.n(), 3);
        assert_eq!(g.max_degree(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
    }

    #[test]
    fn parses_single_vertex_and_star() {
        let g = InterferenceGraph::parse_edge_list("1").unwrap();
        assert_eq!(g.max_degree(), 0);
        let s = InterferenceGraph::parse_edge_list("4\n0 1\n0 2\n0 3").unwrap();
        assert_eq!(s.degrees(), vec![3, 1, 1, 1]);
    }

    #[test]
    fn parse_skips_comments_and_dedups() {
        let g = InterferenceGraph::parse_edge_list("# header\n3\n\n0 1\n1 0\n# x\n2 1\n").unwrap();
        assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = InterferenceGraph::parse_edge_list("3\n0 1\n1 x").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = InterferenceGraph::parse_edge_list("3\n0 3").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = InterferenceGraph::parse_edge_list("3\n\n2 2").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = InterferenceGraph::parse_edge_list("three").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(InterferenceGraph::parse_edge_list("").is_err());
    }

    #[test]
    fn edge_list_round_trips() {
        let g = InterferenceGraph::star(5).unwrap();
        assert_eq!(InterferenceGraph::parse_edge_list(&g.to_edge_list()).unwrap(), g);
    }

    #[test]
    fn path3_feasible_schedules() {
        let space = path3().enumerate_feasible().unwrap();
        // {}, {0}, {1}, {0,2}, {2} in bit order: 0, 1, 2, 4, 5
        assert_eq!(space.masks(), &[0b000, 0b001, 0b010, 0b100, 0b101]);
        assert_eq!(space.index_of_bits(0b101), Some(4));
        assert_eq!(space.index_of_bits(0b011), None);
    }

    #[test]
    fn complete_and_empty_counts() {
        for n in 1..=8 {
            let k = InterferenceGraph::complete(n).unwrap().enumerate_feasible().unwrap();
            assert_eq!(k.len(), n + 1);
            let e = InterferenceGraph::empty(n).unwrap().enumerate_feasible().unwrap();
            assert_eq!(e.len(), 1 << n);
        }
    }

    #[test]
    fn enumeration_limit_is_an_error() {
        let g = InterferenceGraph::empty(25).unwrap();
        assert!(matches!(
            g.enumerate_feasible(),
            Err(Error::Capacity { n: 25, limit: 24, .. })
        ));
        let g = InterferenceGraph::empty(21).unwrap();
        assert!(matches!(
            g.enumerate_feasible(),
            Err(Error::Capacity {
                what: "feasible schedules",
                ..
            })
        ));
        let small = EnumerationLimit {
            max_links: 24,
            max_schedules: 4,
        };
        assert!(ScheduleSpace::enumerate(&path3(), small).is_err());
    }

    #[test]
    fn interference_degree_examples() {
        let chi = path3().interference_degree();
        assert_eq!(chi.per_link, vec![1, 2, 1]);
        assert_eq!(chi.max, 2);
        assert_eq!(InterferenceGraph::complete(5).unwrap().interference_degree().max, 1);
        let star = InterferenceGraph::star(5).unwrap().interference_degree();
        assert_eq!(star.per_link[0], 4);
    }

    #[test]
    fn feasibility_examples() {
        let g = path3();
        assert!(g.is_feasible(&Schedule::from_members(3, &[0, 2]).unwrap()).unwrap());
        assert!(!g.is_feasible(&Schedule::from_members(3, &[0, 1]).unwrap()).unwrap());
        assert!(g.is_feasible(&Schedule::empty(3)).unwrap());
        assert!(matches!(
            g.is_feasible(&Schedule::empty(4)),
            Err(Error::Dimension { expected: 3, got: 4 })
        ));
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(InterferenceGraph::new(0, []).is_err());
        assert!(InterferenceGraph::new(3, [(1, 1)]).is_err());
        assert!(InterferenceGraph::new(3, [(0, 3)]).is_err());
        assert!(InterferenceGraph::new(65, []).is_err());
    }

    #[test]
    fn schedule_display() {
        let s = Schedule::from_members(4, &[3, 1]).unwrap();
        assert_eq!(alloc::format!("{s}"), "{1,3}");
        assert_eq!(s.indicators(), vec![false, true, false, true]);
        assert!(Schedule::from_bits(2, 0b100).is_err());
    }
}
