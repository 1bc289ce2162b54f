#include "gfairhint.h"

#include <cstdlib>
#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gfairhint/error.hpp"
#include "gfairhint/experiment.hpp"
#include "gfairhint/synthetic.hpp"

using json = nlohmann::json;
namespace gf = gfairhint;

struct gfh_graph {
  gf::Graph g;
  std::vector<std::int64_t> communities;  // empty unless synthesized
};

struct gfh_oracle {
  gf::OracleSimilarity o;
  gf::OracleMode mode;
  gf::SimilarityFn sim;
};

struct gfh_hint {
  gf::HintMatrix h;
};

struct gfh_model {
  gf::TrainedModel m;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out != nullptr) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs the body, converting exceptions into status codes + the thread
// message. Out-parameters are only assigned inside successful bodies.
template <typename Fn>
gfh_status guarded(Fn&& body) {
  try {
    body();
    g_last_error.clear();
    return GFH_OK;
  } catch (const gf::Error& e) {
    g_last_error = e.what();
    switch (e.kind()) {
      case gf::ErrorKind::Usage: return GFH_USAGE;
      case gf::ErrorKind::Data: return GFH_DATA;
      case gf::ErrorKind::Numeric: return GFH_NUMERIC;
    }
    return GFH_USAGE;
  } catch (const json::exception& e) {
    g_last_error = std::string("config json: ") + e.what();
    return GFH_USAGE;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GFH_DATA;
  }
}

void require(bool ok, const char* msg) {
  if (!ok) throw gf::ContractError(msg);
}

std::string opt_path(const char* p) { return p == nullptr ? "" : p; }

json parse_json(const char* text, const char* what) {
  require(text != nullptr, what);
  return json::parse(text);
}

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw gf::ConfigError(ctx + ": expected an object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) throw gf::ConfigError(ctx + ": unknown key: " + item.key());
  }
}

double as_num(const json& v, const std::string& ctx) {
  if (!v.is_number()) throw gf::ConfigError(ctx + ": expected a number");
  return v.get<double>();
}

std::size_t as_size(const json& v, const std::string& ctx) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
    throw gf::ConfigError(ctx + ": expected a non-negative integer");
  return static_cast<std::size_t>(v.get<std::int64_t>());
}

std::uint64_t as_u64(const json& v, const std::string& ctx) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw gf::ConfigError(ctx + ": expected a non-negative integer");
}

bool as_bool(const json& v, const std::string& ctx) {
  if (!v.is_boolean()) throw gf::ConfigError(ctx + ": expected a boolean");
  return v.get<bool>();
}

std::string as_str(const json& v, const std::string& ctx) {
  if (!v.is_string()) throw gf::ConfigError(ctx + ": expected a string");
  return v.get<std::string>();
}

gf::SimilarityFn parse_sim(const std::string& s) {
  if (s == "cosine") return gf::SimilarityFn::Cosine;
  if (s == "euclidean") return gf::SimilarityFn::Euclidean;
  throw gf::ConfigError("unknown similarity: " + s);
}

const char* sim_name(gf::SimilarityFn s) {
  return s == gf::SimilarityFn::Cosine ? "cosine" : "euclidean";
}

gf::Nonlinearity parse_nonlin(const std::string& s) {
  if (s == "relu") return gf::Nonlinearity::Relu;
  if (s == "identity") return gf::Nonlinearity::Identity;
  throw gf::ConfigError("unknown nonlinearity: " + s);
}

const char* nonlin_name(gf::Nonlinearity n) {
  return n == gf::Nonlinearity::Relu ? "relu" : "identity";
}

gf::SplitSpec parse_split(const json& j, std::uint64_t default_seed) {
  if (j.is_null()) return gf::SplitSpec::fractions(0.6, 0.2, 0.2, default_seed);
  check_keys(j, "split", {"train", "val", "test", "seed", "file"});
  if (j.contains("file")) {
    if (j.size() != 1)
      throw gf::ConfigError("split: file excludes fraction keys");
    return gf::SplitSpec::from_file(as_str(j["file"], "split.file"));
  }
  gf::SplitSpec s = gf::SplitSpec::fractions(0.6, 0.2, 0.2, default_seed);
  if (j.contains("train")) s.train = as_num(j["train"], "split.train");
  if (j.contains("val")) s.val = as_num(j["val"], "split.val");
  if (j.contains("test")) s.test = as_num(j["test"], "split.test");
  if (j.contains("seed")) s.seed = as_u64(j["seed"], "split.seed");
  return s;
}

gf::SyntheticSpec parse_synth_spec(const json& j) {
  check_keys(j, "synth",
             {"n_nodes", "n_communities", "p_within", "p_between",
              "feature_dim", "signal", "label_alignment", "label_noise",
              "seed", "split"});
  gf::SyntheticSpec s;
  if (j.contains("n_nodes")) s.n_nodes = as_size(j["n_nodes"], "n_nodes");
  if (j.contains("n_communities"))
    s.n_communities = as_size(j["n_communities"], "n_communities");
  if (j.contains("p_within")) s.p_within = as_num(j["p_within"], "p_within");
  if (j.contains("p_between"))
    s.p_between = as_num(j["p_between"], "p_between");
  if (j.contains("feature_dim"))
    s.feature_dim = as_size(j["feature_dim"], "feature_dim");
  if (j.contains("signal")) s.signal = as_num(j["signal"], "signal");
  if (j.contains("label_alignment"))
    s.label_alignment = as_num(j["label_alignment"], "label_alignment");
  if (j.contains("label_noise"))
    s.label_noise = as_num(j["label_noise"], "label_noise");
  if (j.contains("seed")) s.seed = as_u64(j["seed"], "seed");
  return s;
}

struct OracleSpec {
  gf::OracleMode mode = gf::OracleMode::Feature;
  gf::SimilarityFn sim = gf::SimilarityFn::Cosine;
  std::string path;
};

OracleSpec parse_oracle_spec(const json& j) {
  check_keys(j, "oracle", {"mode", "sim", "path"});
  OracleSpec spec;
  if (j.contains("mode"))
    spec.mode = gf::parse_oracle_mode(as_str(j["mode"], "oracle.mode"));
  if (j.contains("sim"))
    spec.sim = parse_sim(as_str(j["sim"], "oracle.sim"));
  if (j.contains("path")) spec.path = as_str(j["path"], "oracle.path");
  return spec;
}

gf::HintConfig parse_hint_config(const json& j) {
  check_keys(j, "hint",
             {"dim", "epochs", "lr", "val_frac", "test_frac", "seed"});
  gf::HintConfig h;
  if (j.contains("dim")) h.dim = as_size(j["dim"], "hint.dim");
  if (j.contains("epochs")) h.epochs = as_size(j["epochs"], "hint.epochs");
  if (j.contains("lr")) h.lr = as_num(j["lr"], "hint.lr");
  if (j.contains("val_frac")) h.val_frac = as_num(j["val_frac"], "hint.val_frac");
  if (j.contains("test_frac"))
    h.test_frac = as_num(j["test_frac"], "hint.test_frac");
  if (j.contains("seed")) h.seed = as_u64(j["seed"], "hint.seed");
  return h;
}

gf::BackboneConfig parse_backbone(const json& j) {
  check_keys(j, "backbone",
             {"arch", "layers", "hidden", "out_dim", "heads", "nonlin",
              "dropout", "residual", "seed"});
  gf::BackboneConfig b;
  if (j.contains("arch"))
    b.architecture = gf::parse_architecture(as_str(j["arch"], "backbone.arch"));
  if (j.contains("layers")) b.n_layers = as_size(j["layers"], "backbone.layers");
  if (j.contains("hidden"))
    b.hidden_dim = as_size(j["hidden"], "backbone.hidden");
  if (j.contains("out_dim"))
    b.out_dim = as_size(j["out_dim"], "backbone.out_dim");
  if (j.contains("heads")) b.heads = as_size(j["heads"], "backbone.heads");
  if (j.contains("nonlin"))
    b.nonlinearity = parse_nonlin(as_str(j["nonlin"], "backbone.nonlin"));
  if (j.contains("dropout")) b.dropout = as_num(j["dropout"], "backbone.dropout");
  if (j.contains("residual"))
    b.residual = as_bool(j["residual"], "backbone.residual");
  if (j.contains("seed")) b.seed = as_u64(j["seed"], "backbone.seed");
  return b;
}

void parse_train(const json& j, gf::TrainConfig& t) {
  check_keys(j, "train",
             {"epochs", "warmup", "lr", "gamma", "k", "rank_metric",
              "pair_mode", "outcome_sim", "loss_norm", "fusion_d_mid",
              "fusion_relu", "use_hint", "use_ranking_loss", "mlp_head"});
  if (j.contains("epochs")) t.epochs = as_size(j["epochs"], "train.epochs");
  if (j.contains("warmup"))
    t.warmup_epochs = as_size(j["warmup"], "train.warmup");
  if (j.contains("lr")) t.lr = as_num(j["lr"], "train.lr");
  if (j.contains("gamma")) t.gamma = as_num(j["gamma"], "train.gamma");
  if (j.contains("k")) t.k = as_size(j["k"], "train.k");
  if (j.contains("rank_metric"))
    t.ranking.metric =
        gf::parse_rank_metric(as_str(j["rank_metric"], "train.rank_metric"));
  if (j.contains("pair_mode"))
    t.ranking.pair_mode =
        gf::parse_pair_mode(as_str(j["pair_mode"], "train.pair_mode"));
  if (j.contains("outcome_sim"))
    t.ranking.outcome =
        gf::parse_outcome_sim(as_str(j["outcome_sim"], "train.outcome_sim"));
  if (j.contains("loss_norm"))
    t.ranking.normalization =
        gf::parse_loss_norm(as_str(j["loss_norm"], "train.loss_norm"));
  if (j.contains("fusion_d_mid"))
    t.fusion.d_mid = as_size(j["fusion_d_mid"], "train.fusion_d_mid");
  if (j.contains("fusion_relu"))
    t.fusion.relu = as_bool(j["fusion_relu"], "train.fusion_relu");
  if (j.contains("use_hint"))
    t.use_hint = as_bool(j["use_hint"], "train.use_hint");
  if (j.contains("use_ranking_loss"))
    t.use_ranking_loss =
        as_bool(j["use_ranking_loss"], "train.use_ranking_loss");
  if (j.contains("mlp_head")) t.mlp_head = as_bool(j["mlp_head"], "train.mlp_head");
}

struct ParsedExperiment {
  gf::ExperimentConfig cfg;
  std::string cache_dir;
};

ParsedExperiment parse_experiment(const json& j) {
  check_keys(j, "config",
             {"method", "oracle", "fairness_k", "hint", "backbone", "train",
              "seeds", "custom_shape", "cache_dir"});
  ParsedExperiment pe;
  if (j.contains("method"))
    pe.cfg.method = gf::parse_method(as_str(j["method"], "method"));
  if (j.contains("oracle")) {
    OracleSpec o = parse_oracle_spec(j["oracle"]);
    pe.cfg.oracle_mode = o.mode;
    pe.cfg.oracle_sim = o.sim;
    pe.cfg.oracle_path = o.path;
  }
  if (j.contains("fairness_k"))
    pe.cfg.fairness_k = as_size(j["fairness_k"], "fairness_k");
  if (j.contains("hint")) pe.cfg.hint = parse_hint_config(j["hint"]);
  if (j.contains("backbone")) pe.cfg.backbone = parse_backbone(j["backbone"]);
  if (j.contains("train")) parse_train(j["train"], pe.cfg.train);
  if (j.contains("custom_shape"))
    pe.cfg.custom_shape = as_bool(j["custom_shape"], "custom_shape");
  if (j.contains("seeds")) {
    if (!j["seeds"].is_array()) throw gf::ConfigError("seeds: expected an array");
    pe.cfg.seeds.clear();
    for (const json& s : j["seeds"]) pe.cfg.seeds.push_back(as_u64(s, "seeds"));
  }
  if (j.contains("cache_dir"))
    pe.cache_dir = as_str(j["cache_dir"], "cache_dir");
  return pe;
}

// Normalized echo of a config; every results file embeds one of these.
// The shape booleans are shown as resolved, not as typed.
json config_to_json(const gf::ExperimentConfig& c, const std::string& cache) {
  gf::TrainConfig shape = gf::resolve_train_config(c, 0);
  json j;
  j["method"] = gf::method_name(c.method);
  j["oracle"] = {{"mode", gf::oracle_mode_name(c.oracle_mode)},
                 {"sim", sim_name(c.oracle_sim)},
                 {"path", c.oracle_path}};
  j["fairness_k"] = c.fairness_k;
  j["hint"] = {{"dim", c.hint.dim},         {"epochs", c.hint.epochs},
               {"lr", c.hint.lr},           {"val_frac", c.hint.val_frac},
               {"test_frac", c.hint.test_frac}, {"seed", c.hint.seed}};
  j["backbone"] = {{"arch", gf::architecture_name(c.backbone.architecture)},
                   {"layers", c.backbone.n_layers},
                   {"hidden", c.backbone.hidden_dim},
                   {"out_dim", c.backbone.out_dim},
                   {"heads", c.backbone.heads},
                   {"nonlin", nonlin_name(c.backbone.nonlinearity)},
                   {"dropout", c.backbone.dropout},
                   {"residual", c.backbone.residual},
                   {"seed", c.backbone.seed}};
  j["train"] = {{"epochs", c.train.epochs},
                {"warmup", c.train.warmup_epochs},
                {"lr", c.train.lr},
                {"gamma", c.train.gamma},
                {"k", c.train.k},
                {"rank_metric", gf::rank_metric_name(c.train.ranking.metric)},
                {"pair_mode", gf::pair_mode_name(c.train.ranking.pair_mode)},
                {"outcome_sim", gf::outcome_sim_name(c.train.ranking.outcome)},
                {"loss_norm", gf::loss_norm_name(c.train.ranking.normalization)},
                {"fusion_d_mid", c.train.fusion.d_mid},
                {"fusion_relu", c.train.fusion.relu},
                {"use_hint", shape.use_hint},
                {"use_ranking_loss", shape.use_ranking_loss},
                {"mlp_head", shape.mlp_head}};
  j["seeds"] = c.seeds;
  j["custom_shape"] = c.custom_shape;
  j["cache_dir"] = cache;
  return j;
}

json metrics_to_json(const gf::MetricReport& m) {
  json j;
  j["accuracy"] = m.accuracy;
  j["ndcg"] = m.ndcg;
  j["err"] = m.err;
  j["consistency"] = m.consistency ? json(*m.consistency) : json(nullptr);
  j["k"] = m.k;
  j["nodes_evaluated"] = m.nodes_evaluated;
  return j;
}

json stat_to_json(const gf::SummaryStat& s) {
  return json{{"mean", s.mean}, {"std", s.stddev}};
}

json summary_to_json(const gf::ExperimentSummary& s) {
  json j;
  j["n_runs"] = s.n_runs;
  j["accuracy"] = stat_to_json(s.accuracy);
  j["ndcg"] = stat_to_json(s.ndcg);
  j["err"] = stat_to_json(s.err);
  j["consistency"] =
      s.consistency ? stat_to_json(*s.consistency) : json(nullptr);
  return j;
}

json row_to_json(const gf::RunRow& r) {
  json j;
  j["seed"] = r.seed;
  j["metrics"] = metrics_to_json(r.metrics);
  j["mean_epoch_ms"] = r.mean_epoch_ms;
  j["best_epoch"] = r.best_epoch;
  j["aborted"] = r.aborted;
  j["hint_trained"] = r.hint_trained;
  return j;
}

json report_to_json(const gf::TrainReport& r) {
  json j;
  j["epochs_run"] = r.utility_losses.size();
  j["best_epoch"] = r.best_epoch;
  j["best_val_accuracy"] = r.best_val_accuracy;
  j["best_metrics"] = metrics_to_json(r.best_metrics);
  j["last_metrics"] = metrics_to_json(r.last_metrics);
  j["aborted"] = r.aborted;
  j["abort_epoch"] = r.abort_epoch;
  j["abort_reason"] = r.abort_reason;
  j["ranking_skipped_nodes"] = r.ranking_skipped_nodes;
  j["losses"] = {{"utility", r.utility_losses},
                 {"fairness", r.fairness_losses},
                 {"total", r.total_losses}};
  j["epoch_ms"] = r.epoch_ms;
  return j;
}

const std::vector<std::int64_t>* communities_of(const gfh_graph* g) {
  return g->communities.empty() ? nullptr : &g->communities;
}

gf::FairnessGraph fairness_graph_for(const gf::OracleSimilarity& o,
                                     std::size_t k) {
  return o.is_binary() ? gf::build_from_annotations(o) : gf::build_topk(o, k);
}

void emit_json(char** out, const json& j) {
  require(out != nullptr, "null output pointer");
  *out = dup_string(j.dump(2));
  if (*out == nullptr) throw gf::IoError("out of memory");
}

}  // namespace

extern "C" {

const char* gfh_last_error(void) { return g_last_error.c_str(); }

void gfh_string_free(char* s) { std::free(s); }

gfh_status gfh_graph_load(const char* edge_path, const char* feature_path,
                          const char* label_path, const char* split_path,
                          gfh_graph** out) {
  return guarded([&] {
    require(edge_path != nullptr, "null edge path");
    require(feature_path != nullptr, "null feature path");
    require(out != nullptr, "null output pointer");
    gf::SplitSpec split;  // Mode::None
    if (split_path != nullptr) split = gf::SplitSpec::from_file(split_path);
    gf::Graph g =
        gf::Graph::load(edge_path, feature_path, opt_path(label_path), split);
    *out = new gfh_graph{std::move(g), {}};
  });
}

gfh_status gfh_graph_synth(const char* spec_json, gfh_graph** out) {
  return guarded([&] {
    require(out != nullptr, "null output pointer");
    json j = parse_json(spec_json, "null generator spec");
    gf::SyntheticSpec spec = parse_synth_spec(j);
    gf::SplitSpec split = parse_split(
        j.contains("split") ? j["split"] : json(nullptr), spec.seed);
    gf::SyntheticResult r = gf::generate_synthetic(spec, split);
    *out = new gfh_graph{std::move(r.graph), std::move(r.communities)};
  });
}

gfh_status gfh_graph_save(const gfh_graph* g, const char* edge_path,
                          const char* feature_path, const char* label_path,
                          const char* split_path) {
  return guarded([&] {
    require(g != nullptr, "null graph");
    require(edge_path != nullptr && feature_path != nullptr &&
                label_path != nullptr && split_path != nullptr,
            "null save path");
    g->g.save(edge_path, feature_path, label_path, split_path);
  });
}

gfh_status gfh_graph_info(const gfh_graph* g, char** json_out) {
  return guarded([&] {
    require(g != nullptr, "null graph");
    json j;
    j["n_nodes"] = g->g.n_nodes();
    j["n_edges"] = g->g.edges().size();
    j["feature_dim"] = g->g.features().cols();
    j["n_classes"] = g->g.n_classes();
    j["fingerprint"] = std::to_string(g->g.fingerprint());
    j["splits"] = {{"train", g->g.split_ids(gf::SplitTag::Train).size()},
                   {"val", g->g.split_ids(gf::SplitTag::Val).size()},
                   {"test", g->g.split_ids(gf::SplitTag::Test).size()}};
    j["has_communities"] = !g->communities.empty();
    emit_json(json_out, j);
  });
}

void gfh_graph_free(gfh_graph* g) { delete g; }

gfh_status gfh_oracle_build(const gfh_graph* g, const char* spec_json,
                            gfh_oracle** out) {
  return guarded([&] {
    require(g != nullptr, "null graph");
    require(out != nullptr, "null output pointer");
    OracleSpec spec = parse_oracle_spec(parse_json(spec_json, "null oracle spec"));
    gf::ExperimentConfig tmp;
    tmp.oracle_mode = spec.mode;
    tmp.oracle_sim = spec.sim;
    tmp.oracle_path = spec.path;
    gf::OracleSimilarity o = gf::build_oracle(g->g, communities_of(g), tmp);
    *out = new gfh_oracle{std::move(o), spec.mode, spec.sim};
  });
}

gfh_status gfh_oracle_info(const gfh_oracle* o, char** json_out) {
  return guarded([&] {
    require(o != nullptr, "null oracle");
    json j;
    j["n"] = o->o.n();
    j["binary"] = o->o.is_binary();
    j["mode"] = gf::oracle_mode_name(o->mode);
    j["sim"] = sim_name(o->sim);
    emit_json(json_out, j);
  });
}

gfh_status gfh_fairness_graph_build(const gfh_oracle* o, size_t k,
                                    const char* save_path, char** json_out) {
  return guarded([&] {
    require(o != nullptr, "null oracle");
    gf::FairnessGraph fg = fairness_graph_for(o->o, k);
    if (save_path != nullptr) fg.save(save_path);
    json j;
    j["n_nodes"] = fg.n_nodes;
    j["n_edges"] = fg.edges.size();
    j["binary_oracle"] = o->o.is_binary();
    j["k"] = o->o.is_binary() ? 0 : k;
    j["implied_epsilon"] = gf::implied_epsilon(fg, o->o);
    emit_json(json_out, j);
  });
}

void gfh_oracle_free(gfh_oracle* o) { delete o; }

gfh_status gfh_hint_train(const gfh_graph* g, const gfh_oracle* o,
                          const char* config_json, gfh_hint** out,
                          char** report_json) {
  return guarded([&] {
    require(g != nullptr, "null graph");
    require(o != nullptr, "null oracle");
    require(out != nullptr, "null output pointer");
    json j = parse_json(config_json, "null hint config");
    check_keys(j, "hint",
               {"dim", "epochs", "lr", "val_frac", "test_frac", "seed",
                "fairness_k", "delta"});
    json core = j;
    core.erase("fairness_k");
    core.erase("delta");
    gf::HintConfig hcfg = parse_hint_config(core);
    std::size_t fairness_k =
        j.contains("fairness_k") ? as_size(j["fairness_k"], "fairness_k") : 10;
    double delta = j.contains("delta") ? as_num(j["delta"], "delta") : 0.25;

    gf::FairnessGraph fg = fairness_graph_for(o->o, fairness_k);
    auto [hints, report] = gf::train_hints(g->g.features(), fg, hcfg);
    gf::FairnessReport bound =
        gf::verify_theorem(hints, fg, o->o, delta, hcfg.seed);

    json r;
    r["epochs"] = report.epoch_loss.size();
    r["final_loss"] =
        report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back();
    r["val_auc"] = report.val_auc;
    r["test_auc"] = report.test_auc;
    r["val_accuracy"] = report.val_accuracy;
    r["test_accuracy"] = report.test_accuracy;
    r["split_floored"] = report.split_floored;
    r["fairness_graph_edges"] = fg.edges.size();
    r["bound"] = {{"epsilon", bound.epsilon},
                  {"delta", bound.delta},
                  {"delta_in_range", bound.delta_in_range},
                  {"epsilon_exceeds_delta", bound.epsilon_exceeds_delta},
                  {"edge_fraction", bound.edge_fraction},
                  {"nonedge_fraction", bound.nonedge_fraction},
                  {"definition1_fraction", bound.definition1_fraction},
                  {"edges_checked", bound.edges_checked},
                  {"nonedges_checked", bound.nonedges_checked}};
    *out = new gfh_hint{std::move(hints)};
    if (report_json != nullptr) emit_json(report_json, r);
  });
}

gfh_status gfh_hint_save(const gfh_hint* h, const char* path) {
  return guarded([&] {
    require(h != nullptr, "null hint");
    require(path != nullptr, "null path");
    h->h.save(path);
  });
}

gfh_status gfh_hint_load(const char* path, gfh_hint** out) {
  return guarded([&] {
    require(path != nullptr, "null path");
    require(out != nullptr, "null output pointer");
    *out = new gfh_hint{gf::HintMatrix::load(path)};
  });
}

gfh_status gfh_hint_info(const gfh_hint* h, char** json_out) {
  return guarded([&] {
    require(h != nullptr, "null hint");
    json j;
    j["n"] = h->h.values.rows();
    j["d_hint"] = h->h.values.cols();
    j["seed"] = h->h.seed;
    j["frozen"] = h->h.frozen;
    emit_json(json_out, j);
  });
}

void gfh_hint_free(gfh_hint* h) { delete h; }

gfh_status gfh_train(const gfh_graph* g, const gfh_oracle* o,
                     const gfh_hint* hints, const char* config_json,
                     gfh_model** out, char** report_json) {
  return guarded([&] {
    require(g != nullptr, "null graph");
    require(o != nullptr, "null oracle");
    require(out != nullptr, "null output pointer");
    ParsedExperiment pe =
        parse_experiment(parse_json(config_json, "null config"));
    require(!pe.cfg.seeds.empty(), "empty seed list");
    gf::TrainConfig t = gf::resolve_train_config(pe.cfg, pe.cfg.seeds.front());
    if (t.use_hint) require(hints != nullptr, "method needs a hint matrix");
    auto [model, report] = gf::train(
        g->g, o->o, hints != nullptr ? &hints->h : nullptr,
        gf::resolve_backbone_config(pe.cfg, pe.cfg.seeds.front()), t);
    *out = new gfh_model{std::move(model)};
    if (report_json != nullptr) {
      json r = report_to_json(report);
      r["config"] = config_to_json(pe.cfg, pe.cache_dir);
      emit_json(report_json, r);
    }
  });
}

gfh_status gfh_model_save(const gfh_model* m, const char* path) {
  return guarded([&] {
    require(m != nullptr, "null model");
    require(path != nullptr, "null path");
    gf::save_model(m->m, path);
  });
}

gfh_status gfh_model_load(const char* path, gfh_model** out) {
  return guarded([&] {
    require(path != nullptr, "null path");
    require(out != nullptr, "null output pointer");
    *out = new gfh_model{gf::load_model(path)};
  });
}

gfh_status gfh_evaluate(const gfh_model* m, const gfh_graph* g,
                        const gfh_oracle* o, const gfh_hint* hints, size_t k,
                        int test_only, char** json_out) {
  return guarded([&] {
    require(m != nullptr, "null model");
    require(g != nullptr, "null graph");
    require(o != nullptr, "null oracle");
    gf::ModelForward mf = gf::forward_model(
        m->m, g->g, hints != nullptr ? &hints->h.values : nullptr);
    gf::Predictions preds = gf::predict(mf.logits);
    gf::EvalOptions opts;
    opts.k = k;
    opts.test_only = test_only != 0;
    gf::MetricReport report =
        gf::evaluate_node_metrics(mf.logits, preds.labels, g->g, o->o, opts);
    emit_json(json_out, metrics_to_json(report));
  });
}

gfh_status gfh_importance(const gfh_model* m, const gfh_graph* g,
                          const gfh_hint* hints, char** json_out) {
  return guarded([&] {
    require(m != nullptr, "null model");
    require(g != nullptr, "null graph");
    gf::ImportanceReport r = gf::hint_importance(
        m->m, g->g, hints != nullptr ? &hints->h.values : nullptr);
    json j;
    j["score_u"] = r.score_u;
    j["score_hint"] = r.score_hint ? json(*r.score_hint) : json(nullptr);
    j["ratio"] = r.ratio ? json(*r.ratio) : json(nullptr);
    emit_json(json_out, j);
  });
}

void gfh_model_free(gfh_model* m) { delete m; }

gfh_status gfh_experiment_run(const gfh_graph* g, const char* config_json,
                              const char* model_out, char** json_out) {
  return guarded([&] {
    require(g != nullptr, "null graph");
    ParsedExperiment pe =
        parse_experiment(parse_json(config_json, "null config"));
    require(!pe.cfg.seeds.empty(), "empty seed list");
    if (model_out != nullptr && pe.cfg.seeds.size() != 1)
      throw gf::ConfigError("model output needs exactly one seed");

    gf::HintCache cache(pe.cache_dir);
    gf::OracleSimilarity oracle =
        gf::build_oracle(g->g, communities_of(g), pe.cfg);
    std::vector<gf::RunRow> rows;
    for (std::uint64_t seed : pe.cfg.seeds) {
      gf::RunOutput run = gf::run_one(g->g, oracle, pe.cfg, seed, cache);
      rows.push_back(run.row);
      if (model_out != nullptr) gf::save_model(run.model, model_out);
    }

    json j;
    j["config"] = config_to_json(pe.cfg, pe.cache_dir);
    j["config_hash"] = std::to_string(gf::config_hash(pe.cfg));
    j["rows"] = json::array();
    for (const gf::RunRow& r : rows) j["rows"].push_back(row_to_json(r));
    j["summary"] = summary_to_json(gf::summarize(rows));
    j["cache"] = {{"trains", cache.trains()}, {"hits", cache.hits()}};
    emit_json(json_out, j);
  });
}

gfh_status gfh_sweep_gamma(const gfh_graph* g, const char* config_json,
                           const double* gammas, size_t n_gammas,
                           char** json_out) {
  return guarded([&] {
    require(g != nullptr, "null graph");
    require(gammas != nullptr || n_gammas == 0, "null gamma list");
    ParsedExperiment pe =
        parse_experiment(parse_json(config_json, "null config"));
    gf::HintCache cache(pe.cache_dir);
    gf::GammaSweep sweep =
        gf::sweep_gamma(g->g, communities_of(g), pe.cfg,
                        std::vector<double>(gammas, gammas + n_gammas), cache);
    json j;
    j["config"] = config_to_json(pe.cfg, pe.cache_dir);
    j["rows"] = json::array();
    for (const gf::GammaRow& r : sweep.rows)
      j["rows"].push_back(json{{"gamma", r.gamma},
                               {"summary", summary_to_json(r.summary)},
                               {"pareto", r.pareto}});
    j["pareto_count"] = sweep.pareto_count();
    emit_json(json_out, j);
  });
}

gfh_status gfh_sweep_k(const gfh_graph* g, const char* config_json,
                       const size_t* ks, size_t n_ks, char** json_out) {
  return guarded([&] {
    require(g != nullptr, "null graph");
    require(ks != nullptr || n_ks == 0, "null k list");
    ParsedExperiment pe =
        parse_experiment(parse_json(config_json, "null config"));
    gf::HintCache cache(pe.cache_dir);
    gf::KSweep sweep =
        gf::sweep_k(g->g, communities_of(g), pe.cfg,
                    std::vector<std::size_t>(ks, ks + n_ks), cache);
    json j;
    j["config"] = config_to_json(pe.cfg, pe.cache_dir);
    j["rows"] = json::array();
    for (const gf::KRow& r : sweep.rows)
      j["rows"].push_back(json{{"k", r.k},
                               {"summary", summary_to_json(r.summary)},
                               {"hint_trained", r.hint_trained}});
    emit_json(json_out, j);
  });
}

gfh_status gfh_benchmark(const gfh_graph* g, const char* configs_json,
                         size_t epochs, char** json_out) {
  return guarded([&] {
    require(g != nullptr, "null graph");
    json arr = parse_json(configs_json, "null config list");
    if (!arr.is_array())
      throw gf::ConfigError("benchmark expects a JSON array of configs");
    std::vector<gf::ExperimentConfig> configs;
    std::string cache_dir;
    for (const json& item : arr) {
      ParsedExperiment pe = parse_experiment(item);
      if (configs.empty()) cache_dir = pe.cache_dir;
      configs.push_back(std::move(pe.cfg));
    }
    gf::HintCache cache(cache_dir);
    gf::TimingTable table =
        gf::benchmark_time(g->g, communities_of(g), configs, cache, epochs);
    json j;
    j["epochs"] = epochs;
    j["rows"] = json::array();
    for (const gf::TimingRow& r : table.rows)
      j["rows"].push_back(json{{"label", r.label},
                               {"mean_epoch_ms", r.mean_epoch_ms},
                               {"ratio_vs_first", r.ratio_vs_first},
                               {"config_hash", std::to_string(r.config_hash)}});
    emit_json(json_out, j);
  });
}

}  // extern "C"
