#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gfairhint/backbones.hpp"
#include "gfairhint/fairness_graph.hpp"
#include "gfairhint/fusion.hpp"
#include "gfairhint/graph.hpp"
#include "gfairhint/hint.hpp"
#include "gfairhint/metrics.hpp"

namespace gfairhint {

// The method roster. Each name fixes (use_hint, use_ranking_loss, mlp_head);
// any other tuple needs ExperimentConfig::custom_shape.
enum class Method { Vanilla, Redress, RedressMlp, GFairHint, GFairHintRedress };

const char* method_name(Method m);
Method parse_method(const std::string& s);

struct MethodShape {
  bool use_hint = false;
  bool use_ranking_loss = false;
  bool mlp_head = false;
};

MethodShape method_shape(Method m);

// Where the similarity oracle comes from: node features, ground-truth
// community annotations, or an external pair/class file.
enum class OracleMode { Feature, Community, PairsFile, ClassesFile };

const char* oracle_mode_name(OracleMode m);
OracleMode parse_oracle_mode(const std::string& s);

struct ExperimentConfig {
  Method method = Method::Vanilla;
  OracleMode oracle_mode = OracleMode::Feature;
  SimilarityFn oracle_sim = SimilarityFn::Cosine;
  std::string oracle_path;      // file-mode oracles only
  std::size_t fairness_k = 10;  // fairness-graph out-degree
  HintConfig hint;
  BackboneConfig backbone;
  TrainConfig train;  // shape fields overwritten from method unless custom_shape
  std::vector<std::uint64_t> seeds{0};
  bool custom_shape = false;
};

// The train config a given run actually executes (seed applied, shape
// resolved from the method).
TrainConfig resolve_train_config(const ExperimentConfig& cfg,
                                 std::uint64_t seed);

// The run seed supersedes backbone.seed so every entry in seeds is an
// independent trial; init, head, and dropout streams all derive from it.
BackboneConfig resolve_backbone_config(const ExperimentConfig& cfg,
                                       std::uint64_t seed);

// One key=value per line; covers everything that changes results.
std::string describe_config(const ExperimentConfig& cfg);
std::uint64_t config_hash(const ExperimentConfig& cfg);

// Feature and Community modes only; file modes need the config overload.
OracleSimilarity build_oracle(const Graph& g,
                              const std::vector<std::int64_t>* communities,
                              OracleMode mode, SimilarityFn sim);
OracleSimilarity build_oracle(const Graph& g,
                              const std::vector<std::int64_t>* communities,
                              const ExperimentConfig& cfg);

// Everything that can change a trained hint. Two equal keys may share one.
struct HintKey {
  std::uint64_t dataset_fp = 0;
  OracleMode mode = OracleMode::Feature;
  SimilarityFn sim = SimilarityFn::Cosine;
  std::uint64_t oracle_fp = 0;  // file-mode oracles hash the file bytes
  std::size_t fairness_k = 10;
  std::size_t ranking_k = 10;
  std::uint64_t hint_fp = 0;  // HintConfig::fingerprint()
};

std::string hint_key_string(const HintKey& key);

// In-memory hint store with an optional spill directory; entries persist
// across processes when a directory is set.
class HintCache {
 public:
  HintCache() = default;
  explicit HintCache(std::string dir);

  const HintMatrix& get_or_train(const HintKey& key,
                                 const std::function<HintMatrix()>& trainer);
  const HintMatrix* find(const HintKey& key) const;

  std::size_t size() const { return mem_.size(); }
  std::size_t hits() const { return hits_; }
  std::size_t trains() const { return trains_; }

 private:
  std::string path_for(const HintKey& key) const;

  std::string dir_;
  std::map<std::string, HintMatrix> mem_;
  std::size_t hits_ = 0;
  std::size_t trains_ = 0;
};

struct RunRow {
  std::uint64_t seed = 0;
  MetricReport metrics;  // test metrics of the returned checkpoint
  double mean_epoch_ms = 0.0;
  std::size_t best_epoch = 0;
  bool aborted = false;
  bool hint_trained = false;  // false when the hint came from the cache
};

struct SummaryStat {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

struct ExperimentSummary {
  SummaryStat accuracy;
  SummaryStat ndcg;
  SummaryStat err;
  std::optional<SummaryStat> consistency;  // binary oracles only
  std::size_t n_runs = 0;
};

ExperimentSummary summarize(const std::vector<RunRow>& rows);

struct RunOutput {
  TrainedModel model;
  TrainReport report;
  RunRow row;
};

RunOutput run_one(const Graph& g, const OracleSimilarity& oracle,
                  const ExperimentConfig& cfg, std::uint64_t seed,
                  HintCache& cache);

struct ExperimentResult {
  std::vector<RunRow> rows;
  ExperimentSummary summary;
};

// Runs every seed in cfg.seeds against one oracle built once up front.
ExperimentResult run_experiment(const Graph& g,
                                const std::vector<std::int64_t>* communities,
                                const ExperimentConfig& cfg, HintCache& cache);

struct GammaRow {
  double gamma = 0.0;
  ExperimentSummary summary;
  bool pareto = false;  // maximal in the (accuracy, ndcg) partial order
};

struct GammaSweep {
  std::vector<GammaRow> rows;  // ascending gamma
  std::size_t pareto_count() const;
};

GammaSweep sweep_gamma(const Graph& g,
                       const std::vector<std::int64_t>* communities,
                       const ExperimentConfig& cfg,
                       const std::vector<double>& gammas, HintCache& cache);

struct KRow {
  std::size_t k = 0;
  ExperimentSummary summary;
  bool hint_trained = false;  // a fresh hint was fit for this k
};

struct KSweep {
  std::vector<KRow> rows;  // ascending k
};

// Rebuilds the fairness graph and hints per k; evaluates at the same k.
KSweep sweep_k(const Graph& g, const std::vector<std::int64_t>* communities,
               const ExperimentConfig& cfg, const std::vector<std::size_t>& ks,
               HintCache& cache);

struct TimingRow {
  std::string label;
  double mean_epoch_ms = 0.0;
  double ratio_vs_first = 1.0;
  std::uint64_t config_hash = 0;
};

struct TimingTable {
  std::vector<TimingRow> rows;  // config-list order
};

// Wall-clock mean epoch time per config, warm-up forced to zero so every
// epoch carries each method's full cost. Hint fitting happens before the
// timed region (the cache is primed first).
TimingTable benchmark_time(const Graph& g,
                           const std::vector<std::int64_t>* communities,
                           const std::vector<ExperimentConfig>& configs,
                           HintCache& cache, std::size_t epochs = 50);

}  // namespace gfairhint
