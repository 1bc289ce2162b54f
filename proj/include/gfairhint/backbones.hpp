#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gfairhint/autodiff.hpp"
#include "gfairhint/graph.hpp"
#include "gfairhint/optim.hpp"

namespace gfairhint {

enum class Architecture { Gcn, Sage, Gat };
enum class Nonlinearity { Relu, Identity };

const char* architecture_name(Architecture a);
Architecture parse_architecture(const std::string& s);

struct BackboneConfig {
  Architecture architecture = Architecture::Gcn;
  std::size_t n_layers = 2;
  std::size_t hidden_dim = 16;
  std::size_t out_dim = 0;  // 0: hidden_dim; headless runs map to n_classes
  std::size_t heads = 1;  // gat only; hidden_dim must divide evenly
  Nonlinearity nonlinearity = Nonlinearity::Relu;
  double dropout = 0.0;
  bool residual = false;  // off by default so depth effects stay observable
  std::uint64_t seed = 0;
};

// Attention weights recorded on the forward pass, one entry per gat layer.
// Pair k attends from nbr[k] into center dst group; seg_indptr delimits each
// center's contiguous block.
struct AttentionRecord {
  std::vector<std::size_t> nbr;
  std::vector<std::size_t> center;
  std::vector<std::size_t> seg_indptr;
  Tensor alpha;  // pairs x heads
};

// One backbone instance owns its weights; forwards are pure given them.
// Layer l maps (l == 0 ? in_dim : hidden) -> hidden; the final layer has no
// nonlinearity. Dropout applies to every layer input while training.
class Backbone {
 public:
  Backbone(BackboneConfig cfg, std::size_t in_dim);

  struct BoundForward {
    Var out;
    std::vector<Var> weight_vars;  // parallel to params()
  };

  // Registers the weights on the tape and runs the forward.
  BoundForward forward(Tape& tape, const Graph& g, bool training = false,
                       std::mt19937_64* dropout_rng = nullptr);

  // Forward with caller-supplied weight leaves (finite-difference checks).
  Var forward_with(Tape& tape, const Graph& g, const std::vector<Var>& weights,
                   bool training = false,
                   std::mt19937_64* dropout_rng = nullptr);

  std::vector<Parameter>& params() { return params_; }
  const BackboneConfig& config() const { return cfg_; }
  std::size_t in_dim() const { return in_dim_; }
  std::size_t out_dim() const {
    return cfg_.out_dim == 0 ? cfg_.hidden_dim : cfg_.out_dim;
  }

  // Filled by the latest gat forward; empty for other architectures.
  const std::vector<AttentionRecord>& last_attention() const {
    return attention_;
  }

 private:
  Var layer(Tape& tape, const Graph& g, Var h, std::size_t l,
            const std::vector<Var>& w, std::size_t* cursor);

  BackboneConfig cfg_;
  std::size_t in_dim_ = 0;
  std::vector<Parameter> params_;
  std::vector<AttentionRecord> attention_;
};

// Single-shot inference with freshly initialized weights from config.seed.
Tensor forward_gcn(const Graph& g, BackboneConfig cfg);
Tensor forward_sage(const Graph& g, BackboneConfig cfg);
Tensor forward_gat(const Graph& g, BackboneConfig cfg);

}  // namespace gfairhint
