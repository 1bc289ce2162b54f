#include "gfairhint/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "gfairhint/error.hpp"
#include "gfairhint/ranking.hpp"
#include "gfairhint/rng.hpp"

namespace gfairhint {

const char* method_name(Method m) {
  switch (m) {
    case Method::Vanilla: return "vanilla";
    case Method::Redress: return "redress";
    case Method::RedressMlp: return "redress-mlp";
    case Method::GFairHint: return "gfairhint";
    case Method::GFairHintRedress: return "gfairhint-redress";
  }
  throw ContractError("unhandled method");
}

Method parse_method(const std::string& s) {
  for (Method m : {Method::Vanilla, Method::Redress, Method::RedressMlp,
                   Method::GFairHint, Method::GFairHintRedress})
    if (s == method_name(m)) return m;
  throw ConfigError("unknown method: " + s);
}

MethodShape method_shape(Method m) {
  switch (m) {
    case Method::Vanilla: return {false, false, false};
    case Method::Redress: return {false, true, false};
    case Method::RedressMlp: return {false, true, true};
    case Method::GFairHint: return {true, false, true};
    case Method::GFairHintRedress: return {true, true, true};
  }
  throw ContractError("unhandled method");
}

const char* oracle_mode_name(OracleMode m) {
  switch (m) {
    case OracleMode::Feature: return "feature";
    case OracleMode::Community: return "community";
    case OracleMode::PairsFile: return "pairs";
    case OracleMode::ClassesFile: return "classes";
  }
  throw ContractError("unhandled oracle mode");
}

OracleMode parse_oracle_mode(const std::string& s) {
  for (OracleMode m : {OracleMode::Feature, OracleMode::Community,
                       OracleMode::PairsFile, OracleMode::ClassesFile})
    if (s == oracle_mode_name(m)) return m;
  throw ConfigError("unknown oracle mode: " + s);
}

TrainConfig resolve_train_config(const ExperimentConfig& cfg,
                                 std::uint64_t seed) {
  TrainConfig t = cfg.train;
  t.seed = seed;
  if (!cfg.custom_shape) {
    MethodShape shape = method_shape(cfg.method);
    t.use_hint = shape.use_hint;
    t.use_ranking_loss = shape.use_ranking_loss;
    t.mlp_head = shape.mlp_head;
  }
  return t;
}

BackboneConfig resolve_backbone_config(const ExperimentConfig& cfg,
                                       std::uint64_t seed) {
  BackboneConfig b = cfg.backbone;
  b.seed = seed;
  return b;
}

std::string describe_config(const ExperimentConfig& cfg) {
  std::ostringstream ss;
  ss << "method=" << method_name(cfg.method) << "\n"
     << "custom_shape=" << (cfg.custom_shape ? 1 : 0) << "\n"
     << "use_hint=" << (cfg.train.use_hint ? 1 : 0) << "\n"
     << "use_ranking_loss=" << (cfg.train.use_ranking_loss ? 1 : 0) << "\n"
     << "mlp_head=" << (cfg.train.mlp_head ? 1 : 0) << "\n"
     << "oracle_mode=" << oracle_mode_name(cfg.oracle_mode) << "\n"
     << "oracle_path=" << cfg.oracle_path << "\n"
     << "oracle_sim="
     << (cfg.oracle_sim == SimilarityFn::Cosine ? "cosine" : "euclidean")
     << "\n"
     << "fairness_k=" << cfg.fairness_k << "\n"
     << "hint_dim=" << cfg.hint.dim << "\n"
     << "hint_epochs=" << cfg.hint.epochs << "\n"
     << "hint_lr=" << cfg.hint.lr << "\n"
     << "hint_seed=" << cfg.hint.seed << "\n"
     << "backbone=" << architecture_name(cfg.backbone.architecture) << "\n"
     << "layers=" << cfg.backbone.n_layers << "\n"
     << "hidden=" << cfg.backbone.hidden_dim << "\n"
     << "out_dim=" << cfg.backbone.out_dim << "\n"
     << "heads=" << cfg.backbone.heads << "\n"
     << "dropout=" << cfg.backbone.dropout << "\n"
     << "residual=" << (cfg.backbone.residual ? 1 : 0) << "\n"
     << "epochs=" << cfg.train.epochs << "\n"
     << "warmup=" << cfg.train.warmup_epochs << "\n"
     << "lr=" << cfg.train.lr << "\n"
     << "gamma=" << cfg.train.gamma << "\n"
     << "k=" << cfg.train.k << "\n"
     << "rank_metric=" << rank_metric_name(cfg.train.ranking.metric) << "\n"
     << "pair_mode=" << pair_mode_name(cfg.train.ranking.pair_mode) << "\n"
     << "outcome_sim=" << outcome_sim_name(cfg.train.ranking.outcome) << "\n"
     << "loss_norm=" << loss_norm_name(cfg.train.ranking.normalization) << "\n"
     << "fusion_d_mid=" << cfg.train.fusion.d_mid << "\n"
     << "fusion_relu=" << (cfg.train.fusion.relu ? 1 : 0) << "\n";
  ss << "seeds=";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i)
    ss << (i ? "," : "") << cfg.seeds[i];
  ss << "\n";
  return ss.str();
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  return fnv1a(describe_config(cfg));
}

OracleSimilarity build_oracle(const Graph& g,
                              const std::vector<std::int64_t>* communities,
                              OracleMode mode, SimilarityFn sim) {
  if (mode == OracleMode::Feature)
    return sim == SimilarityFn::Cosine
               ? OracleSimilarity::cosine(g.features())
               : OracleSimilarity::euclidean(g.features());
  if (mode != OracleMode::Community)
    throw ContractError("file oracles need a config with the file path");
  if (communities == nullptr)
    throw ContractError("community oracle needs community annotations");
  if (communities->size() != g.n_nodes())
    throw ContractError("community annotation length mismatch");
  return OracleSimilarity::from_classes(g.n_nodes(), *communities);
}

OracleSimilarity build_oracle(const Graph& g,
                              const std::vector<std::int64_t>* communities,
                              const ExperimentConfig& cfg) {
  switch (cfg.oracle_mode) {
    case OracleMode::Feature:
    case OracleMode::Community:
      return build_oracle(g, communities, cfg.oracle_mode, cfg.oracle_sim);
    case OracleMode::PairsFile:
      if (cfg.oracle_path.empty()) throw ConfigError("pairs oracle needs a path");
      return load_pairs_oracle(cfg.oracle_path, g.n_nodes());
    case OracleMode::ClassesFile:
      if (cfg.oracle_path.empty())
        throw ConfigError("classes oracle needs a path");
      return load_classes_oracle(cfg.oracle_path, g.n_nodes());
  }
  throw ContractError("unhandled oracle mode");
}

std::string hint_key_string(const HintKey& key) {
  std::ostringstream ss;
  ss << "fp=" << key.dataset_fp << " mode=" << oracle_mode_name(key.mode)
     << " sim=" << (key.sim == SimilarityFn::Cosine ? "cosine" : "euclidean")
     << " ofp=" << key.oracle_fp << " K=" << key.fairness_k
     << " k=" << key.ranking_k << " hint=" << key.hint_fp;
  return ss.str();
}

HintCache::HintCache(std::string dir) : dir_(std::move(dir)) {}

std::string HintCache::path_for(const HintKey& key) const {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a(hint_key_string(key))));
  return dir_ + "/hint-" + buf + ".txt";
}

const HintMatrix* HintCache::find(const HintKey& key) const {
  auto it = mem_.find(hint_key_string(key));
  return it == mem_.end() ? nullptr : &it->second;
}

const HintMatrix& HintCache::get_or_train(
    const HintKey& key, const std::function<HintMatrix()>& trainer) {
  std::string ks = hint_key_string(key);
  auto it = mem_.find(ks);
  if (it != mem_.end()) {
    ++hits_;
    return it->second;
  }
  if (!dir_.empty()) {
    std::string path = path_for(key);
    if (std::ifstream(path).good()) {
      ++hits_;
      return mem_.emplace(ks, HintMatrix::load(path)).first->second;
    }
  }
  HintMatrix hm = trainer();
  if (!hm.frozen) throw ContractError("cache only stores frozen hints");
  ++trains_;
  const HintMatrix& stored = mem_.emplace(ks, std::move(hm)).first->second;
  if (!dir_.empty()) stored.save(path_for(key));
  return stored;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) /
         static_cast<double>(v.size());
}

std::uint64_t oracle_source_fp(const ExperimentConfig& cfg) {
  if (cfg.oracle_mode != OracleMode::PairsFile &&
      cfg.oracle_mode != OracleMode::ClassesFile)
    return 0;
  std::ifstream in(cfg.oracle_path, std::ios::binary);
  if (!in) throw IoError("cannot read oracle file: " + cfg.oracle_path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return fnv1a(ss.str());
}

SummaryStat stat_of(const std::vector<double>& v) {
  SummaryStat s;
  if (v.empty()) return s;
  s.mean = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(acc / static_cast<double>(v.size()));
  return s;
}

}  // namespace

ExperimentSummary summarize(const std::vector<RunRow>& rows) {
  ExperimentSummary s;
  s.n_runs = rows.size();
  std::vector<double> acc, ndcg, err, cons;
  for (const RunRow& r : rows) {
    acc.push_back(r.metrics.accuracy);
    ndcg.push_back(r.metrics.ndcg);
    err.push_back(r.metrics.err);
    if (r.metrics.consistency) cons.push_back(*r.metrics.consistency);
  }
  s.accuracy = stat_of(acc);
  s.ndcg = stat_of(ndcg);
  s.err = stat_of(err);
  if (!cons.empty()) s.consistency = stat_of(cons);
  return s;
}

RunOutput run_one(const Graph& g, const OracleSimilarity& oracle,
                  const ExperimentConfig& cfg, std::uint64_t seed,
                  HintCache& cache) {
  TrainConfig t = resolve_train_config(cfg, seed);
  const HintMatrix* hints = nullptr;
  bool trained_now = false;
  if (t.use_hint) {
    HintKey key{g.fingerprint(), cfg.oracle_mode, cfg.oracle_sim,
                oracle_source_fp(cfg), cfg.fairness_k, t.k,
                cfg.hint.fingerprint()};
    hints = &cache.get_or_train(key, [&] {
      trained_now = true;
      FairnessGraph fg = oracle.is_binary()
                             ? build_from_annotations(oracle)
                             : build_topk(oracle, cfg.fairness_k);
      return train_hints(g.features(), fg, cfg.hint).first;
    });
  }
  auto [model, report] =
      train(g, oracle, hints, resolve_backbone_config(cfg, seed), t);
  RunRow row;
  row.seed = seed;
  row.metrics = report.best_metrics;
  row.mean_epoch_ms = mean_of(report.epoch_ms);
  row.best_epoch = report.best_epoch;
  row.aborted = report.aborted;
  row.hint_trained = trained_now;
  return {std::move(model), std::move(report), row};
}

ExperimentResult run_experiment(const Graph& g,
                                const std::vector<std::int64_t>* communities,
                                const ExperimentConfig& cfg, HintCache& cache) {
  if (cfg.seeds.empty()) throw ConfigError("seed list is empty");
  OracleSimilarity oracle =
      build_oracle(g, communities, cfg);
  ExperimentResult res;
  for (std::uint64_t seed : cfg.seeds)
    res.rows.push_back(run_one(g, oracle, cfg, seed, cache).row);
  res.summary = summarize(res.rows);
  return res;
}

std::size_t GammaSweep::pareto_count() const {
  std::size_t n = 0;
  for (const GammaRow& r : rows) n += r.pareto ? 1 : 0;
  return n;
}

GammaSweep sweep_gamma(const Graph& g,
                       const std::vector<std::int64_t>* communities,
                       const ExperimentConfig& cfg,
                       const std::vector<double>& gammas, HintCache& cache) {
  if (gammas.empty()) throw ConfigError("gamma list is empty");
  for (double gm : gammas)
    if (!(gm >= 0.0) || !std::isfinite(gm))
      throw ConfigError("gamma values must be finite and non-negative");
  TrainConfig shape = resolve_train_config(cfg, 0);
  if (!shape.use_ranking_loss)
    throw ConfigError("gamma sweep needs a ranking-loss method");

  std::vector<double> sorted = gammas;
  std::sort(sorted.begin(), sorted.end());
  GammaSweep sweep;
  for (double gm : sorted) {
    ExperimentConfig c = cfg;
    c.train.gamma = gm;
    GammaRow row;
    row.gamma = gm;
    row.summary = run_experiment(g, communities, c, cache).summary;
    sweep.rows.push_back(row);
  }
  // Pareto-maximal rows in (accuracy, ndcg); dominance needs one strict win.
  for (GammaRow& r : sweep.rows) {
    bool dominated = false;
    for (const GammaRow& s : sweep.rows) {
      bool geq = s.summary.accuracy.mean >= r.summary.accuracy.mean &&
                 s.summary.ndcg.mean >= r.summary.ndcg.mean;
      bool gt = s.summary.accuracy.mean > r.summary.accuracy.mean ||
                s.summary.ndcg.mean > r.summary.ndcg.mean;
      if (geq && gt) dominated = true;
    }
    r.pareto = !dominated;
  }
  return sweep;
}

KSweep sweep_k(const Graph& g, const std::vector<std::int64_t>* communities,
               const ExperimentConfig& cfg, const std::vector<std::size_t>& ks,
               HintCache& cache) {
  if (ks.empty()) throw ConfigError("k list is empty");
  for (std::size_t k : ks)
    if (k == 0) throw ConfigError("k must be positive");
  if (cfg.oracle_mode != OracleMode::Feature)
    throw ConfigError("k sweep needs a continuous oracle");

  std::vector<std::size_t> sorted = ks;
  std::sort(sorted.begin(), sorted.end());
  KSweep sweep;
  for (std::size_t k : sorted) {
    ExperimentConfig c = cfg;
    c.fairness_k = k;
    c.train.k = k;
    ExperimentResult res = run_experiment(g, communities, c, cache);
    KRow row;
    row.k = k;
    row.summary = res.summary;
    for (const RunRow& r : res.rows) row.hint_trained |= r.hint_trained;
    sweep.rows.push_back(row);
  }
  return sweep;
}

TimingTable benchmark_time(const Graph& g,
                           const std::vector<std::int64_t>* communities,
                           const std::vector<ExperimentConfig>& configs,
                           HintCache& cache, std::size_t epochs) {
  if (configs.size() < 2)
    throw ConfigError("timing needs at least two configs to compare");
  TimingTable table;
  for (const ExperimentConfig& base : configs) {
    ExperimentConfig c = base;
    c.train.epochs = epochs;
    c.train.warmup_epochs = 0;
    if (c.seeds.empty()) throw ConfigError("seed list is empty");
    c.seeds.resize(1);
    OracleSimilarity oracle =
        build_oracle(g, communities, c);
    RunOutput out = run_one(g, oracle, c, c.seeds[0], cache);
    TimingRow row;
    row.label = method_name(c.method);
    row.mean_epoch_ms = out.row.mean_epoch_ms;
    row.config_hash = config_hash(c);
    table.rows.push_back(row);
  }
  double base_ms = table.rows.front().mean_epoch_ms;
  for (TimingRow& r : table.rows)
    r.ratio_vs_first = base_ms > 0.0 ? r.mean_epoch_ms / base_ms : 0.0;
  return table;
}

}  // namespace gfairhint
