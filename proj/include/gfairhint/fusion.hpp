#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gfairhint/autodiff.hpp"
#include "gfairhint/backbones.hpp"
#include "gfairhint/graph.hpp"
#include "gfairhint/hint.hpp"
#include "gfairhint/metrics.hpp"
#include "gfairhint/ranking.hpp"

namespace gfairhint {

// Two-layer head over the concatenation [u, v_hint]. The printed fusion
// formula is affine-affine, so the mid nonlinearity defaults off.
struct FusionConfig {
  std::size_t d_mid = 0;  // 0: input width (square first layer)
  bool relu = false;
};

class FusionHead {
 public:
  // d_hint == 0 builds a plain MLP head over u alone.
  FusionHead(std::size_t d_u, std::size_t d_hint, std::size_t n_classes,
             FusionConfig cfg, std::uint64_t seed);

  struct BoundForward {
    Var logits;
    std::vector<Var> weight_vars;  // parallel to params()
  };

  // hints enter the tape as a gradient-free input; required iff d_hint > 0.
  BoundForward forward(Tape& tape, Var u, const Tensor* hints);
  Var forward_with(Tape& tape, Var u, const Tensor* hints,
                   const std::vector<Var>& weights);

  std::vector<Parameter>& params() { return params_; }
  std::size_t d_u() const { return d_u_; }
  std::size_t d_hint() const { return d_hint_; }
  std::size_t d_mid() const { return d_mid_; }
  std::size_t n_classes() const { return c_; }

 private:
  std::size_t d_u_ = 0, d_hint_ = 0, d_mid_ = 0, c_ = 0;
  bool relu_ = false;
  std::vector<Parameter> params_;  // w1, b1, w2, b2
};

// Softmax rows plus argmax labels; ties break toward the lower class id.
struct Predictions {
  Tensor probs;
  std::vector<int> labels;
};
Predictions predict(const Tensor& logits);

struct TrainConfig {
  std::size_t epochs = 300;
  std::size_t warmup_epochs = 50;  // utility-only lead-in
  double lr = 0.01;
  double gamma = 1.0;   // fairness loss weight
  std::size_t k = 10;   // ranking list length (plans and evaluation)
  bool use_hint = false;
  bool use_ranking_loss = false;
  bool mlp_head = false;
  std::uint64_t seed = 0;
  RankingConfig ranking;  // k is taken from this config's owner
  FusionConfig fusion;
};

// Weights plus everything needed to rebuild the forward pass.
struct TrainedModel {
  BackboneConfig backbone;
  std::size_t in_dim = 0;
  std::size_t n_classes = 0;
  bool mlp_head = false;
  bool use_hint = false;
  std::size_t d_hint = 0;
  std::size_t d_mid = 0;
  bool head_relu = false;
  std::vector<Tensor> backbone_weights;
  std::vector<Tensor> head_weights;  // w1, b1, w2, b2 when mlp_head
};

struct TrainReport {
  std::vector<double> utility_losses;
  std::vector<double> fairness_losses;  // zero while inactive
  std::vector<double> total_losses;
  std::vector<double> epoch_ms;
  std::size_t best_epoch = 0;
  double best_val_accuracy = -1.0;  // stays -1 without a validation split
  MetricReport best_metrics;        // test metrics of the returned weights
  MetricReport last_metrics;        // test metrics after the final epoch
  bool aborted = false;
  std::size_t abort_epoch = 0;
  std::string abort_reason;
  double hint_sum_sq_before = 0.0;  // equal after iff the hints stayed frozen
  double hint_sum_sq_after = 0.0;
  std::size_t ranking_skipped_nodes = 0;
};

// Full-batch training of backbone (+ head) under
// L = utility + gamma * fairness, with the fairness term active after the
// warm-up when use_ranking_loss is set. Hints never receive gradients.
// Returns the best-validation-accuracy checkpoint (last epoch without a
// validation split). A non-finite loss aborts and returns the last good
// checkpoint with report.aborted set.
std::pair<TrainedModel, TrainReport> train(const Graph& g,
                                           const OracleSimilarity& oracle,
                                           const HintMatrix* hints,
                                           BackboneConfig backbone_cfg,
                                           const TrainConfig& cfg);

struct ModelForward {
  Tensor u;       // backbone output, pre-head
  Tensor logits;  // equals u without the mlp head
};
ModelForward forward_model(const TrainedModel& model, const Graph& g,
                           const Tensor* hints);

// Text checkpoint; reload reproduces predictions bitwise.
void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

// Saliency of the head inputs: S_k is the pre-softmax logit of node k's
// predicted class; scores average |dS_k / d input| over dimensions and
// nodes. Requires the mlp head; score_hint is absent without hints.
ImportanceReport hint_importance(const TrainedModel& model, const Graph& g,
                                 const Tensor* hints);

}  // namespace gfairhint
