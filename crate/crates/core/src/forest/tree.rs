//! Growing a single oblique tree.

use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::config::TreeSettings;
use crate::data::{ColumnarDataset, SampleIndexSet};
use crate::profile::{NoRecorder, Phase, Recorder};
use crate::projection::{
    project_sample, sample_projection_matrix_into, CellScratch, ProjectionEntry, ProjectionMatrix,
};
use crate::real::Real;
use crate::rng::{child_seed, node_rng};
use crate::split::node::find_node_split_with;
use crate::split::SplitScratch;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum DecisionNode {
    Leaf {
        class_counts: Vec<u32>,
        predicted_class: u32,
    },
    /// A sample goes left iff its projected value is `<= threshold`.
    Internal {
        projection: Vec<ProjectionEntry>,
        threshold: f64,
        left: u32,
        right: u32,
    },
}

/// Node arena; the root is node 0 and siblings are adjacent (`right == left + 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<DecisionNode>,
}

impl Tree {
    pub fn nodes(&self) -> &[DecisionNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &DecisionNode {
        &self.nodes[id]
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, DecisionNode::Leaf { .. }))
            .count()
    }

    /// Depth of the deepest leaf (a lone root leaf has depth 0).
    pub fn depth(&self) -> usize {
        let mut deepest = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            deepest = deepest.max(d);
            if let DecisionNode::Internal { left, right, .. } = &self.nodes[id] {
                stack.push((*left as usize, d + 1));
                stack.push((*right as usize, d + 1));
            }
        }
        deepest
    }

    /// Id of the leaf reached by `sample` (row-major feature vector).
    pub fn leaf_for<T: Real>(&self, sample: &[T]) -> usize {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                DecisionNode::Leaf { .. } => return id,
                DecisionNode::Internal {
                    projection,
                    threshold,
                    left,
                    right,
                } => {
                    let v = project_sample(projection, sample).to_f64();
                    id = if v <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    pub fn predict<T: Real>(&self, sample: &[T]) -> u32 {
        match &self.nodes[self.leaf_for(sample)] {
            DecisionNode::Leaf {
                predicted_class, ..
            } => *predicted_class,
            DecisionNode::Internal { .. } => unreachable!(),
        }
    }

    pub(crate) fn max_feature(&self) -> Option<u32> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                DecisionNode::Internal { projection, .. } => {
                    projection.iter().map(|e| e.feature).max()
                }
                DecisionNode::Leaf { .. } => None,
            })
            .max()
    }
}

/// Buffers one worker reuses for every node of every tree it trains.
#[derive(Debug, Default)]
pub struct TreeWorkspace<T> {
    pub(crate) split: SplitScratch<T>,
    projections: ProjectionMatrix,
    cells: CellScratch,
}

impl<T: Real> TreeWorkspace<T> {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Grow a tree from `active`. The root's seed is drawn from `rng`; every
/// other node's randomness derives from its path, so the top of the tree does
/// not depend on how deeper nodes were split.
pub fn train_tree<T: Real, R: RngCore + ?Sized>(
    dataset: &ColumnarDataset<T>,
    active: &SampleIndexSet,
    settings: &TreeSettings,
    rng: &mut R,
    depth: usize,
) -> Tree {
    let mut ws = TreeWorkspace::new();
    grow_tree(
        dataset,
        active.as_slice().to_vec(),
        settings,
        rng.next_u64(),
        depth,
        &mut ws,
        &mut NoRecorder,
    )
}

struct Pending {
    id: usize,
    active: Vec<u32>,
    depth: usize,
    seed: u64,
}

pub(crate) fn grow_tree<T: Real, Rec: Recorder>(
    dataset: &ColumnarDataset<T>,
    active: Vec<u32>,
    settings: &TreeSettings,
    root_seed: u64,
    root_depth: usize,
    ws: &mut TreeWorkspace<T>,
    rec: &mut Rec,
) -> Tree {
    assert!(!active.is_empty(), "cannot grow a tree from no samples");
    let class_count = dataset.class_count();
    let labels = dataset.labels();
    let mut nodes = vec![placeholder()];
    let mut stack = vec![Pending {
        id: 0,
        active,
        depth: root_depth,
        seed: root_seed,
    }];
    let mut counts = vec![0u32; class_count];

    while let Some(Pending {
        id,
        active,
        depth,
        seed,
    }) = stack.pop()
    {
        counts.iter_mut().for_each(|c| *c = 0);
        for &i in &active {
            counts[labels[i as usize] as usize] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure
            || active.len() < settings.min_samples.max(2)
            || settings.max_depth.is_some_and(|m| depth >= m)
        {
            nodes[id] = leaf(&counts);
            continue;
        }

        let started = Rec::NODES.then(Instant::now);
        let method = settings.method_for(active.len());
        let mut rng = node_rng(seed);
        let mut found = None;
        for _ in 0..=settings.max_split_retries {
            let t = Rec::phase_start();
            sample_projection_matrix_into(
                &settings.projection,
                &mut rng,
                &mut ws.projections,
                &mut ws.cells,
            );
            rec.phase_end(Phase::SampleProjection, depth, t);
            found = find_node_split_with(
                dataset,
                &active,
                &ws.projections,
                method,
                &settings.split,
                &mut rng,
                &mut ws.split,
                rec,
                depth,
            );
            if found.is_some() {
                break;
            }
        }

        let Some(split) = found else {
            if let Some(t) = started {
                rec.node(depth, method, active.len(), t.elapsed());
            }
            nodes[id] = leaf(&counts);
            continue;
        };

        let values = ws.split.best_values();
        let mut left = Vec::with_capacity(split.left_count);
        let mut right = Vec::with_capacity(split.right_count);
        for (&i, &v) in active.iter().zip(values) {
            if split.goes_left(v) {
                left.push(i);
            } else {
                right.push(i);
            }
        }
        debug_assert_eq!((left.len(), right.len()), (split.left_count, split.right_count));
        if let Some(t) = started {
            rec.node(depth, method, active.len(), t.elapsed());
        }

        let left_id = nodes.len();
        let right_id = left_id + 1;
        nodes.push(placeholder());
        nodes.push(placeholder());
        nodes[id] = DecisionNode::Internal {
            projection: ws.projections.row(split.projection_index).to_vec(),
            threshold: split.routing_threshold().to_f64(),
            left: left_id as u32,
            right: right_id as u32,
        };
        drop(active);
        stack.push(Pending {
            id: right_id,
            active: right,
            depth: depth + 1,
            seed: child_seed(seed, 1),
        });
        stack.push(Pending {
            id: left_id,
            active: left,
            depth: depth + 1,
            seed: child_seed(seed, 0),
        });
    }
    Tree { nodes }
}

fn placeholder() -> DecisionNode {
    DecisionNode::Leaf {
        class_counts: Vec::new(),
        predicted_class: 0,
    }
}

fn leaf(counts: &[u32]) -> DecisionNode {
    // Majority class, lowest id on ties.
    let predicted_class = counts
        .iter()
        .enumerate()
        .fold((0usize, 0u32), |best, (c, &n)| if n > best.1 { (c, n) } else { best })
        .0 as u32;
    DecisionNode::Leaf {
        class_counts: counts.to_vec(),
        predicted_class,
    }
}
