//! All-pairs lead-lag network inference with Bonferroni correction, plus
//! group assortativity and coarse-graining analytics.
//!
//! Every ordered pair of surviving series is backward-matched and tested
//! with the analytic chi-square p-value; an edge is kept when its p-value
//! clears the Bonferroni-corrected threshold `q_conf / n_tests`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::align::{backward_match, event_matrix_from_alignment};
use crate::error::{Result, TeError};
use crate::inference::te_significance_test;
use crate::par::par_map;
use crate::series::SymbolSeries;

/// Input to a network run: the series, their group labels, and the test
/// configuration.
#[derive(Debug, Clone)]
pub struct NetworkJob {
    pub series: Vec<SymbolSeries>,
    /// One group label (venue, sector, ...) per series.
    pub groups: Vec<String>,
    /// Global confidence parameter; the per-test threshold is
    /// `q_conf / n_tests`.
    pub q_conf: f64,
    /// Series with fewer events are excluded before testing.
    pub min_events: usize,
    pub past_window: u32,
    /// Shift applied to every pair's backward matching, in seconds.
    pub delta_t: f64,
    /// Overrides the `n(n+1)/2` test count in the Bonferroni threshold.
    pub n_tests_override: Option<u64>,
}

impl NetworkJob {
    pub fn new(series: Vec<SymbolSeries>, groups: Vec<String>) -> Self {
        Self {
            series,
            groups,
            q_conf: 0.01,
            min_events: 1000,
            past_window: 1,
            delta_t: 0.0,
            n_tests_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NodeInfo {
    pub label: String,
    pub group: String,
}

/// A retained directed edge; `source`/`target` index into the network's
/// node list.
#[derive(Debug, Clone, Serialize)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub te_nats: f64,
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
}

/// The Bonferroni-validated lead-lag network.
#[derive(Debug, Clone, Serialize)]
pub struct LeadLagNetwork {
    /// Series that survived the event-count filter.
    pub nodes: Vec<NodeInfo>,
    pub edges: Vec<Edge>,
    /// Number of pairs tested against the filter, before filtering.
    pub n_total_series: usize,
    pub n_tests: u64,
    /// Per-test p-value threshold `q_conf / n_tests`.
    pub threshold: f64,
    /// Ordered pairs that could not be tested (no overlap or too few
    /// retained events).
    pub untestable_pairs: usize,
}

impl LeadLagNetwork {
    /// Retained edges as a fraction of the `n(n-1)` ordered pairs.
    pub fn fraction_retained(&self) -> f64 {
        let n = self.nodes.len();
        if n < 2 {
            return 0.0;
        }
        self.edges.len() as f64 / (n * (n - 1)) as f64
    }

    /// Nodes that are the source or target of at least one edge.
    pub fn non_isolated_nodes(&self) -> usize {
        let mut seen = vec![false; self.nodes.len()];
        for e in &self.edges {
            seen[e.source] = true;
            seen[e.target] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }
}

/// The default Bonferroni test count for `n` series.
pub fn default_n_tests(n: usize) -> u64 {
    let n = n as u64;
    n * (n + 1) / 2
}

/// Runs the all-pairs lead-lag analysis.
///
/// Pairs are processed in a fixed lexicographic order and may be evaluated
/// in parallel; the edge list does not depend on the worker count. Pairs
/// whose matching leaves nothing to test are counted as untestable rather
/// than failing the run.
pub fn infer_network(job: &NetworkJob) -> Result<LeadLagNetwork> {
    if job.series.len() != job.groups.len() {
        return Err(TeError::InvalidInput(format!(
            "{} series but {} group labels",
            job.series.len(),
            job.groups.len()
        )));
    }
    if !(job.q_conf > 0.0 && job.q_conf < 1.0) {
        return Err(TeError::InvalidInput(format!(
            "confidence parameter must lie in (0, 1), got {}",
            job.q_conf
        )));
    }
    if job.past_window == 0 {
        return Err(TeError::InvalidInput("past window must be at least 1".into()));
    }
    if job.min_events < job.past_window as usize + 2 {
        return Err(TeError::InvalidInput(format!(
            "min_events {} cannot test anything with past window {}",
            job.min_events, job.past_window
        )));
    }
    if !(job.delta_t >= 0.0 && job.delta_t.is_finite()) {
        return Err(TeError::InvalidInput("shift must be finite and >= 0".into()));
    }

    let kept: Vec<usize> =
        (0..job.series.len()).filter(|&i| job.series[i].len() >= job.min_events).collect();
    if kept.len() < 2 {
        return Err(TeError::InsufficientSeries(kept.len()));
    }
    let n = kept.len();
    let n_tests = job.n_tests_override.unwrap_or_else(|| default_n_tests(n));
    if n_tests == 0 {
        return Err(TeError::InvalidInput("test count override must be positive".into()));
    }
    let threshold = job.q_conf / n_tests as f64;

    let pairs: Vec<(usize, usize)> =
        (0..n).flat_map(|s| (0..n).filter(move |&t| t != s).map(move |t| (s, t))).collect();
    let results = par_map(pairs.len(), |idx| -> Result<Option<Edge>> {
        let (s, t) = pairs[idx];
        let source = &job.series[kept[s]];
        let target = &job.series[kept[t]];
        let pair = match backward_match(target, source, job.delta_t) {
            Ok(p) => p,
            Err(TeError::NoOverlap) => return Ok(None),
            Err(e) => return Err(e),
        };
        let em = match event_matrix_from_alignment(&pair, job.past_window) {
            Ok(m) => m,
            Err(TeError::InsufficientHistory { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
        let test = match te_significance_test(&em) {
            Ok(r) => r,
            Err(TeError::DegenerateAlphabet) => return Ok(None),
            Err(e) => return Err(e),
        };
        Ok(Some(Edge {
            source: s,
            target: t,
            te_nats: test.te,
            statistic: test.statistic,
            df: test.df,
            p_value: test.p_value,
        }))
    });

    let mut edges = Vec::new();
    let mut untestable = 0usize;
    for r in results {
        match r? {
            Some(edge) if edge.p_value < threshold => edges.push(edge),
            Some(_) => {}
            None => untestable += 1,
        }
    }
    let nodes = kept
        .iter()
        .map(|&i| NodeInfo {
            label: job.series[i].label().to_string(),
            group: job.groups[i].clone(),
        })
        .collect();
    Ok(LeadLagNetwork {
        nodes,
        edges,
        n_total_series: job.series.len(),
        n_tests,
        threshold,
        untestable_pairs: untestable,
    })
}

/// Categorical assortativity of the directed edge mixing by group label:
/// `r = (sum_g e_gg - sum_g a_g b_g) / (1 - sum_g a_g b_g)` where `e_gh` is
/// the fraction of edges from group `g` to group `h` and `a`, `b` are its
/// row and column sums. A degenerate denominator (every edge inside one
/// group) yields 1.
pub fn assortativity(net: &LeadLagNetwork) -> Result<f64> {
    if net.edges.is_empty() {
        return Err(TeError::InvalidInput("assortativity needs at least one edge".into()));
    }
    let mut group_ids: BTreeMap<&str, usize> = BTreeMap::new();
    for node in &net.nodes {
        let next = group_ids.len();
        group_ids.entry(node.group.as_str()).or_insert(next);
    }
    let g = group_ids.len();
    let mut mixing = vec![0.0f64; g * g];
    let total = net.edges.len() as f64;
    for e in &net.edges {
        let gs = group_ids[net.nodes[e.source].group.as_str()];
        let gt = group_ids[net.nodes[e.target].group.as_str()];
        mixing[gs * g + gt] += 1.0 / total;
    }
    let mut diag = 0.0;
    let mut sum_ab = 0.0;
    for i in 0..g {
        diag += mixing[i * g + i];
        let a: f64 = (0..g).map(|j| mixing[i * g + j]).sum();
        let b: f64 = (0..g).map(|j| mixing[j * g + i]).sum();
        sum_ab += a * b;
    }
    let denom = 1.0 - sum_ab;
    if denom.abs() < 1e-12 {
        return Ok(1.0);
    }
    Ok((diag - sum_ab) / denom)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarseNode {
    pub group: String,
    pub members: u64,
    /// Natural log of the member count, used as a display size.
    pub size: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarseEdge {
    pub source_group: String,
    pub target_group: String,
    pub links: u64,
    /// Natural log of the link count, used as a display width.
    pub width: f64,
}

/// The network with all nodes of a group merged into one.
#[derive(Debug, Clone, Serialize)]
pub struct CoarseGraph {
    pub nodes: Vec<CoarseNode>,
    pub edges: Vec<CoarseEdge>,
}

/// Merges every group into a single node; group pairs without links are
/// omitted. Groups appear in node order, edges in lexicographic group-pair
/// order.
pub fn coarse_grain(net: &LeadLagNetwork) -> Result<CoarseGraph> {
    if net.nodes.is_empty() {
        return Err(TeError::InvalidInput("cannot coarse-grain an empty network".into()));
    }
    let mut member_counts: Vec<(String, u64)> = Vec::new();
    for node in &net.nodes {
        match member_counts.iter_mut().find(|(grp, _)| *grp == node.group) {
            Some((_, count)) => *count += 1,
            None => member_counts.push((node.group.clone(), 1)),
        }
    }
    let nodes = member_counts
        .iter()
        .map(|(group, members)| CoarseNode {
            group: group.clone(),
            members: *members,
            size: (*members as f64).ln(),
        })
        .collect();
    let mut links: BTreeMap<(String, String), u64> = BTreeMap::new();
    for e in &net.edges {
        let key = (net.nodes[e.source].group.clone(), net.nodes[e.target].group.clone());
        *links.entry(key).or_insert(0) += 1;
    }
    let edges = links
        .into_iter()
        .map(|((source_group, target_group), links)| CoarseEdge {
            source_group,
            target_group,
            links,
            width: (links as f64).ln(),
        })
        .collect();
    Ok(CoarseGraph { nodes, edges })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchgen::{gen_copy_chain, gen_poisson_binary, CopyChainSpec};
    use crate::rng::stream_rng;
    use rand::Rng;

    #[test]
    fn test_count_matches_large_scale_reference() {
        assert_eq!(default_n_tests(1177), 693_253);
        assert_eq!(default_n_tests(3), 6);
    }

    fn chain_job(n_series: usize, events: usize, seed: u64) -> NetworkJob {
        let chain = gen_copy_chain(&CopyChainSpec {
            n_series,
            events_per_series: events,
            fidelity: 0.8,
            period_s: 1.0,
            stagger_s: 0.001,
            seed,
        })
        .unwrap();
        let groups = (0..n_series).map(|j| format!("g{}", j / 3)).collect();
        let mut job = NetworkJob::new(chain, groups);
        job.min_events = 100;
        job
    }

    #[test]
    fn planted_chain_recovered_exactly() {
        let net = infer_network(&chain_job(5, 2000, 1301)).unwrap();
        assert_eq!(net.n_tests, 15);
        let mut got: Vec<(usize, usize)> = net.edges.iter().map(|e| (e.source, e.target)).collect();
        got.sort_unstable();
        assert_eq!(got, vec![(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(net.non_isolated_nodes(), 5);
        assert!((net.fraction_retained() - 4.0 / 20.0).abs() < 1e-12);
        for e in &net.edges {
            assert!((e.te_nats - 0.368).abs() < 0.05, "edge TE {}", e.te_nats);
        }
    }

    #[test]
    fn retained_p_values_recompute_bit_exactly() {
        let job = chain_job(4, 1500, 77);
        let net = infer_network(&job).unwrap();
        assert!(!net.edges.is_empty());
        for e in &net.edges {
            let pair = backward_match(&job.series[e.target], &job.series[e.source], 0.0).unwrap();
            let em = event_matrix_from_alignment(&pair, 1).unwrap();
            let redo = te_significance_test(&em).unwrap();
            assert_eq!(redo.p_value.to_bits(), e.p_value.to_bits());
            assert_eq!(redo.te.to_bits(), e.te_nats.to_bits());
        }
    }

    #[test]
    fn independent_series_produce_no_edges() {
        let series: Vec<SymbolSeries> = (0..3)
            .map(|i| {
                let mut rng = stream_rng(4000, i);
                gen_poisson_binary(5.0, 400.0, &format!("p{i}"), &mut rng).unwrap()
            })
            .collect();
        let mut job = NetworkJob::new(series, vec!["x".into(), "x".into(), "y".into()]);
        job.min_events = 100;
        let net = infer_network(&job).unwrap();
        assert!(net.edges.is_empty(), "false edges: {:?}", net.edges);
    }

    #[test]
    fn q_monotonicity() {
        let job = chain_job(5, 800, 5);
        let strict = infer_network(&NetworkJob { q_conf: 0.0001, ..job.clone() }).unwrap();
        let loose = infer_network(&NetworkJob { q_conf: 0.05, ..job }).unwrap();
        let loose_set: Vec<(usize, usize)> =
            loose.edges.iter().map(|e| (e.source, e.target)).collect();
        for e in &strict.edges {
            assert!(loose_set.contains(&(e.source, e.target)));
        }
        assert!(strict.edges.len() <= loose.edges.len());
    }

    #[test]
    fn short_series_are_filtered() {
        let mut job = chain_job(4, 2000, 9);
        let times: Vec<i64> = (0..50).map(|k| k * 7_000_000).collect();
        let symbols: Vec<u32> = (0..50).map(|k| (k % 2) as u32).collect();
        job.series.push(SymbolSeries::new(times, symbols, 2, "runt").unwrap());
        job.groups.push("g9".into());
        let net = infer_network(&job).unwrap();
        assert_eq!(net.nodes.len(), 4);
        assert!(net.nodes.iter().all(|n| n.label != "runt"));
        assert_eq!(net.n_total_series, 5);
    }

    #[test]
    fn too_few_surviving_series_is_an_error() {
        let mut job = chain_job(3, 200, 11);
        job.min_events = 1000;
        assert!(matches!(infer_network(&job), Err(TeError::InsufficientSeries(0))));
    }

    #[test]
    fn n_tests_override_shifts_threshold() {
        let job = chain_job(4, 800, 21);
        let default = infer_network(&job).unwrap();
        let custom = infer_network(&NetworkJob { n_tests_override: Some(100), ..job }).unwrap();
        assert_eq!(default.n_tests, 10);
        assert_eq!(custom.n_tests, 100);
        assert!(custom.threshold < default.threshold);
    }

    fn manual_net(groups: &[&str], edges: &[(usize, usize)]) -> LeadLagNetwork {
        let nodes = groups
            .iter()
            .enumerate()
            .map(|(i, g)| NodeInfo { label: format!("n{i}"), group: (*g).to_string() })
            .collect();
        let edges = edges
            .iter()
            .map(|&(s, t)| Edge {
                source: s,
                target: t,
                te_nats: 0.1,
                statistic: 10.0,
                df: 2,
                p_value: 1e-6,
            })
            .collect();
        LeadLagNetwork {
            nodes,
            edges,
            n_total_series: groups.len(),
            n_tests: default_n_tests(groups.len()),
            threshold: 1e-4,
            untestable_pairs: 0,
        }
    }

    #[test]
    fn assortativity_perfect_when_edges_stay_within_groups() {
        // Two groups, each with only internal edges: r = 1 exactly.
        let net = manual_net(&["a", "a", "b", "b"], &[(0, 1), (1, 0), (2, 3)]);
        assert_eq!(assortativity(&net).unwrap(), 1.0);
        // Degenerate case: several groups present but all edges in one.
        let one = manual_net(&["a", "a", "b"], &[(0, 1), (1, 0)]);
        assert_eq!(assortativity(&one).unwrap(), 1.0);
    }

    #[test]
    fn assortativity_zero_for_balanced_mixing() {
        // e = [[1/4, 1/4], [1/4, 1/4]].
        let net = manual_net(&["a", "a", "b", "b"], &[(0, 1), (0, 2), (2, 0), (2, 3)]);
        assert_eq!(assortativity(&net).unwrap(), 0.0);
    }

    #[test]
    fn assortativity_rejects_empty_edge_set() {
        let net = manual_net(&["a", "b"], &[]);
        assert!(assortativity(&net).is_err());
    }

    #[test]
    fn shuffled_edge_labels_average_to_zero() {
        // 500 edges, each endpoint's group drawn uniformly per shuffle;
        // the mean of r over 1000 shuffles should vanish.
        let mut rng = stream_rng(606, 0);
        let n_edges = 500;
        let edge_list: Vec<(usize, usize)> = (0..n_edges).map(|i| (2 * i, 2 * i + 1)).collect();
        let mut values = Vec::with_capacity(1000);
        for _ in 0..1000 {
            let groups: Vec<&str> =
                (0..2 * n_edges).map(|_| if rng.random::<bool>() { "a" } else { "b" }).collect();
            let net = manual_net(&groups, &edge_list);
            values.push(assortativity(&net).unwrap());
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let var =
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (values.len() - 1) as f64;
        let se = (var / values.len() as f64).sqrt();
        assert!(mean.abs() <= 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn coarse_grain_counts_match_construction() {
        let net = manual_net(
            &["a", "a", "a", "b", "b"],
            &[(0, 1), (1, 2), (0, 3), (1, 3), (2, 4), (3, 0)],
        );
        let coarse = coarse_grain(&net).unwrap();
        assert_eq!(coarse.nodes.len(), 2);
        assert_eq!(coarse.nodes[0].members, 3);
        assert!((coarse.nodes[0].size - 3f64.ln()).abs() < 1e-15);
        assert_eq!(coarse.nodes[1].members, 2);
        let find = |s: &str, t: &str| {
            coarse
                .edges
                .iter()
                .find(|e| e.source_group == s && e.target_group == t)
                .map(|e| e.links)
        };
        assert_eq!(find("a", "a"), Some(2));
        assert_eq!(find("a", "b"), Some(3));
        assert_eq!(find("b", "a"), Some(1));
        assert_eq!(find("b", "b"), None);
        let total: u64 = coarse.edges.iter().map(|e| e.links).sum();
        assert_eq!(total as usize, net.edges.len());
    }

    #[test]
    fn coarse_grain_single_group_self_loop() {
        let with_edge = manual_net(&["a", "a"], &[(0, 1)]);
        let coarse = coarse_grain(&with_edge).unwrap();
        assert_eq!(coarse.nodes.len(), 1);
        assert_eq!(coarse.edges.len(), 1);
        assert_eq!(coarse.edges[0].source_group, coarse.edges[0].target_group);

        let bare = manual_net(&["a", "a"], &[]);
        let coarse = coarse_grain(&bare).unwrap();
        assert_eq!(coarse.nodes.len(), 1);
        assert!(coarse.edges.is_empty());
    }
}
