//! Structural pre-detection: Louvain modularity maximization followed by the
//! community-size filter that fixes the number of communities `k`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{modularity_hard, AttributedGraph, Partition};

/// A local-moving phase stops once a full sweep improves modularity by no
/// more than this.
pub const MIN_SWEEP_GAIN: f64 = 1e-7;

/// Default coefficient on the standard deviation in `T = μ + coef·σ`.
pub const DEFAULT_THRESHOLD_COEF: f64 = 0.5;

/// Outcome of a Louvain run, with the hard modularity after every level.
#[derive(Debug, Clone)]
pub struct LouvainResult {
    pub partition: Partition,
    pub level_modularity: Vec<f64>,
}

/// Weighted graph at one Louvain level. `self_loops[i]` holds `A_ii` (intra
/// weight counted in both directions), so `degree[i] = self_loops[i] + Σ_j w_ij`.
struct LevelGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<f64>,
    degree: Vec<f64>,
    two_m: f64,
}

impl LevelGraph {
    fn from_graph(g: &AttributedGraph) -> Self {
        let n = g.num_nodes();
        let adj: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|i| g.neighbors(i).iter().map(|&j| (j, 1.0)).collect())
            .collect();
        let degree = (0..n).map(|i| g.degree(i) as f64).collect();
        Self {
            adj,
            self_loops: vec![0.0; n],
            degree,
            two_m: g.two_m() as f64,
        }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    /// Collapses each community into a single node.
    fn aggregate(&self, community: &[usize], count: usize) -> Self {
        let mut self_loops = vec![0.0; count];
        let mut degree = vec![0.0; count];
        let mut weights: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); count];
        for (i, &ci) in community.iter().enumerate() {
            self_loops[ci] += self.self_loops[i];
            degree[ci] += self.degree[i];
            for &(j, w) in &self.adj[i] {
                let cj = community[j];
                if cj == ci {
                    self_loops[ci] += w;
                } else {
                    *weights[ci].entry(cj).or_insert(0.0) += w;
                }
            }
        }
        Self {
            adj: weights.into_iter().map(|m| m.into_iter().collect()).collect(),
            self_loops,
            degree,
            two_m: self.two_m,
        }
    }
}

/// Moves nodes between communities until a sweep no longer pays off.
/// Returns contiguous community ids (first-appearance order), their count,
/// and whether any node moved.
fn local_moving(level: &LevelGraph, rng: &mut ChaCha8Rng) -> (Vec<usize>, usize, bool) {
    let n = level.len();
    let mut community: Vec<usize> = (0..n).collect();
    let mut total: Vec<f64> = level.degree.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut links = vec![0.0f64; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_moved = false;
    let two_m = level.two_m;

    loop {
        let mut sweep_gain = 0.0;
        let mut moved = false;
        for &i in &order {
            let home = community[i];
            let ki = level.degree[i];

            touched.clear();
            for &(j, w) in &level.adj[i] {
                let cj = community[j];
                if links[cj] == 0.0 {
                    touched.push(cj);
                }
                links[cj] += w;
            }
            touched.sort_unstable();

            total[home] -= ki;
            let stay = links[home] - total[home] * ki / two_m;
            let mut best = home;
            let mut best_gain = stay;
            for &c in &touched {
                if c == home {
                    continue;
                }
                let gain = links[c] - total[c] * ki / two_m;
                if gain > best_gain {
                    best = c;
                    best_gain = gain;
                }
            }
            total[best] += ki;
            if best != home {
                community[i] = best;
                sweep_gain += 2.0 * (best_gain - stay) / two_m;
                moved = true;
            }
            for &c in &touched {
                links[c] = 0.0;
            }
        }
        any_moved |= moved;
        if !moved || sweep_gain <= MIN_SWEEP_GAIN {
            break;
        }
    }

    let mut relabel = vec![usize::MAX; n];
    let mut count = 0;
    for c in community.iter_mut() {
        if relabel[*c] == usize::MAX {
            relabel[*c] = count;
            count += 1;
        }
        *c = relabel[*c];
    }
    (community, count, any_moved)
}

/// Louvain community detection with resolution 1.
///
/// Node visit order within each level is a seeded shuffle; among equally good
/// target communities the smallest id wins. Ids in the returned partition are
/// contiguous, ordered by the first node that belongs to each community.
pub fn louvain_detect(g: &AttributedGraph, seed: u64) -> Result<Partition> {
    Ok(louvain_with_levels(g, seed)?.partition)
}

/// [`louvain_detect`], also reporting the modularity reached after each level.
pub fn louvain_with_levels(g: &AttributedGraph, seed: u64) -> Result<LouvainResult> {
    if g.two_m() == 0 {
        return Err(Error::EmptyEdgeSet);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut membership: Vec<usize> = (0..g.num_nodes()).collect();
    let mut level = LevelGraph::from_graph(g);
    let mut level_modularity = vec![modularity_hard(g, &Partition::new(membership.clone())?)?];

    loop {
        let (community, count, moved) = local_moving(&level, &mut rng);
        if !moved {
            break;
        }
        for m in membership.iter_mut() {
            *m = community[*m];
        }
        let q = modularity_hard(g, &Partition::new(membership.clone())?)?;
        debug_assert!(
            q + 1e-12 >= *level_modularity.last().expect("initial level"),
            "modularity decreased across a Louvain level"
        );
        level_modularity.push(q);
        if count == level.len() {
            break;
        }
        level = level.aggregate(&community, count);
    }

    let partition = first_appearance(&membership);
    Ok(LouvainResult {
        partition,
        level_modularity,
    })
}

fn first_appearance(labels: &[usize]) -> Partition {
    let mut relabel = std::collections::HashMap::new();
    let assign = labels
        .iter()
        .map(|&l| {
            let next = relabel.len();
            *relabel.entry(l).or_insert(next)
        })
        .collect();
    Partition::new(assign).expect("first-appearance labels are contiguous")
}

/// Communities retained by the size filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterResult {
    /// Surviving pre-detected community ids, ascending; position is the
    /// community index used downstream.
    pub kept_ids: Vec<usize>,
    pub k: usize,
    pub threshold: f64,
    pub mean: f64,
    pub stddev: f64,
    /// Node ids of each kept community, ascending.
    pub member_lists: Vec<Vec<usize>>,
}

impl FilterResult {
    /// Uses explicit member lists as the structural communities, bypassing the
    /// size statistics.
    pub fn from_members(member_lists: Vec<Vec<usize>>) -> Result<Self> {
        if member_lists.is_empty() {
            return Err(Error::NoCommunities { threshold: 0.0 });
        }
        if let Some(index) = member_lists.iter().position(Vec::is_empty) {
            return Err(Error::EmptyCommunity { index });
        }
        let k = member_lists.len();
        Ok(Self {
            kept_ids: (0..k).collect(),
            k,
            threshold: 0.0,
            mean: 0.0,
            stddev: 0.0,
            member_lists,
        })
    }
}

/// Keeps the pre-detected communities whose size reaches
/// `T = μ + coef·σ`, with `μ = n/t` and `σ` the population standard
/// deviation of the `t` community sizes.
pub fn filter_communities(p: &Partition, n: usize, coef: f64) -> Result<FilterResult> {
    let t = p.num_communities();
    if t == 0 {
        return Err(Error::NoCommunities { threshold: f64::NAN });
    }
    let sizes = p.sizes();
    let mean = n as f64 / t as f64;
    let variance = sizes.iter().map(|&s| (s as f64 - mean).powi(2)).sum::<f64>() / t as f64;
    let stddev = variance.sqrt();
    let threshold = mean + coef * stddev;

    let kept_ids: Vec<usize> = (0..t).filter(|&c| sizes[c] as f64 >= threshold).collect();
    if kept_ids.is_empty() {
        return Err(Error::NoCommunities { threshold });
    }
    if kept_ids.len() == 1 {
        log::warn!("only one structural community survived the size filter; memberships will be constant");
    }
    let members = p.members();
    let member_lists = kept_ids.iter().map(|&c| members[c].clone()).collect();
    Ok(FilterResult {
        k: kept_ids.len(),
        kept_ids,
        threshold,
        mean,
        stddev,
        member_lists,
    })
}
