//! Training-side machinery: loss functions with analytic gradients, a small
//! fully connected network, minibatch SGD, frame-pair sampling and the toy
//! track head.

pub mod loss;
pub mod mlp;
pub mod sampler;
pub mod track_head;
pub mod train;

pub use loss::{
    bce, bce_grad, smooth_l1, smooth_l1_grad, track_loss, track_loss_parts, triplet_loss,
    triplet_loss_grad, TrackLossParts, TrackSample, TrackTarget, TripletGrad,
};
pub use mlp::{Activation, ForwardCache, MlpModel, ModelTag, OutputKind};
pub use sampler::PairSampler;
pub use track_head::{HeadInput, TrackHead};
pub use train::{sgd_train, TrainConfig, TrainReport};

/// Area under the ROC curve (Mann-Whitney statistic, ties count one half).
///
/// Returns 0.5 when either class is missing.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    // average ranks over tied groups
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if labels[k] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    u / (n_pos * n_neg) as f64
}
