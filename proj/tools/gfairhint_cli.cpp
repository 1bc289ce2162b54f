// Command-line front end. Talks to the library exclusively through the C
// API; every run is reproducible from the config echo embedded in its
// outputs.
//
// Config file: one JSON document. Schema (all keys optional, defaults in
// parentheses):
//   data.edges / data.features / data.labels / data.split   file dataset
//   data.synth.{n_nodes(600), n_communities(3), p_within(0.05),
//               p_between(0.005), feature_dim(16), signal(0.8),
//               label_alignment(1.0), label_noise(0.0), seed(0),
//               split.{train(0.6), val(0.2), test(0.2), seed}}
//   method(vanilla) | redress | redress-mlp | gfairhint | gfairhint-redress
//   oracle.{mode(feature)|community|pairs|classes, sim(cosine)|euclidean,
//           path}
//   fairness_k(10)
//   hint.{dim(128), epochs(200), lr(0.001), val_frac(0.025),
//         test_frac(0.05), seed(0)}
//   backbone.{arch(gcn)|sage|gat, layers(2), hidden(16), out_dim(0),
//             heads(1), nonlin(relu)|identity, dropout(0), residual(false),
//             seed(0)}
//   train.{epochs(300), warmup(50), lr(0.01), gamma(1), k(10),
//          rank_metric(ndcg)|err, pair_mode(cross)|union|all,
//          outcome_sim(cosine)|inner, loss_norm(mean-nodes)|sum,
//          fusion_d_mid(0), fusion_relu(false), use_hint, use_ranking_loss,
//          mlp_head}
//   seeds([0]), custom_shape(false), cache_dir("")
// Every key is overridable by a flag of the same dotted name.

#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gfairhint.h"

using json = nlohmann::json;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

int fail(gfh_status st) {
  std::fprintf(stderr, "error: %s\n", gfh_last_error());
  return static_cast<int>(st);
}

int fail_usage(const std::string& msg) {
  std::fprintf(stderr, "error: %s\n", msg.c_str());
  return kExitUsage;
}

struct StringOut {
  char* s = nullptr;
  ~StringOut() { gfh_string_free(s); }
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Flag values arrive as text; numbers and booleans become JSON scalars,
// everything else stays a string.
json coerce_value(const std::string& v) {
  json parsed = json::parse(v, nullptr, false);
  if (!parsed.is_discarded() && !parsed.is_object() && !parsed.is_array())
    return parsed;
  return json(v);
}

void set_path(json& root, const std::string& dotted, json value) {
  json* cur = &root;
  std::size_t start = 0;
  while (true) {
    std::size_t dot = dotted.find('.', start);
    std::string key = dotted.substr(start, dot - start);
    if (dot == std::string::npos) {
      (*cur)[key] = std::move(value);
      return;
    }
    cur = &(*cur)[key];
    start = dot + 1;
  }
}

// The documented schema, as dotted override names.
const std::vector<std::string>& override_keys() {
  static const std::vector<std::string> keys = {
      "data.edges",          "data.features",
      "data.labels",         "data.split",
      "data.synth.n_nodes",  "data.synth.n_communities",
      "data.synth.p_within", "data.synth.p_between",
      "data.synth.feature_dim", "data.synth.signal",
      "data.synth.label_alignment", "data.synth.label_noise",
      "data.synth.seed",     "data.synth.split.train",
      "data.synth.split.val", "data.synth.split.test",
      "data.synth.split.seed", "data.synth.split.file",
      "method",              "oracle.mode",
      "oracle.sim",          "oracle.path",
      "fairness_k",          "hint.dim",
      "hint.epochs",         "hint.lr",
      "hint.val_frac",       "hint.test_frac",
      "hint.seed",           "backbone.arch",
      "backbone.layers",     "backbone.hidden",
      "backbone.out_dim",    "backbone.heads",
      "backbone.nonlin",     "backbone.dropout",
      "backbone.residual",   "backbone.seed",
      "train.epochs",        "train.warmup",
      "train.lr",            "train.gamma",
      "train.k",             "train.rank_metric",
      "train.pair_mode",     "train.outcome_sim",
      "train.loss_norm",     "train.fusion_d_mid",
      "train.fusion_relu",   "train.use_hint",
      "train.use_ranking_loss", "train.mlp_head",
      "custom_shape",        "cache_dir",
  };
  return keys;
}

struct ConfigState {
  std::string config_file;
  std::vector<std::pair<std::string, std::string>> overrides;
  std::vector<std::uint64_t> seeds;
  bool seeds_given = false;
};

void add_config_options(CLI::App* cmd, ConfigState& st) {
  cmd->add_option("--config", st.config_file, "JSON config file");
  for (const std::string& key : override_keys()) {
    cmd->add_option_function<std::string>(
            "--" + key,
            [&st, key](const std::string& v) {
              st.overrides.emplace_back(key, v);
            },
            "override config key " + key)
        ->take_last();
  }
  cmd->add_option("--seeds", st.seeds, "seed list")
      ->delimiter(',')
      ->each([&st](const std::string&) { st.seeds_given = true; });
}

// File config, then flag overrides, in flag order.
int resolve_config(const ConfigState& st, json& out) {
  out = json::object();
  if (!st.config_file.empty()) {
    std::ifstream in(st.config_file);
    if (!in) return fail_usage("cannot open config: " + st.config_file);
    json parsed = json::parse(in, nullptr, false);
    if (parsed.is_discarded())
      return fail_usage("config is not valid JSON: " + st.config_file);
    if (!parsed.is_object())
      return fail_usage("config must be a JSON object: " + st.config_file);
    out = std::move(parsed);
  }
  for (const auto& [key, value] : st.overrides)
    set_path(out, key, coerce_value(value));
  if (st.seeds_given) out["seeds"] = st.seeds;
  return 0;
}

// The subset of the config the C API consumes.
json experiment_part(const json& cfg) {
  json out = cfg;
  out.erase("data");
  return out;
}

int open_graph(const json& cfg, gfh_graph** out) {
  json data = cfg.contains("data") ? cfg["data"] : json::object();
  if (!data.is_object()) return fail_usage("data: expected an object");
  bool has_files = data.contains("edges") || data.contains("features");
  bool has_synth = data.contains("synth");
  if (has_files && has_synth)
    return fail_usage("data: give either files or a synth spec, not both");
  if (has_files) {
    for (const char* req : {"edges", "features"})
      if (!data.contains(req))
        return fail_usage(std::string("data.") + req + " is required");
    std::string edges = data["edges"].get<std::string>();
    std::string feats = data["features"].get<std::string>();
    std::string labels =
        data.contains("labels") ? data["labels"].get<std::string>() : "";
    std::string split =
        data.contains("split") ? data["split"].get<std::string>() : "";
    gfh_status st = gfh_graph_load(
        edges.c_str(), feats.c_str(), labels.empty() ? nullptr : labels.c_str(),
        split.empty() ? nullptr : split.c_str(), out);
    if (st != GFH_OK) return fail(st);
    return 0;
  }
  json spec = has_synth ? data["synth"] : json::object();
  std::string text = spec.dump();
  gfh_status st = gfh_graph_synth(text.c_str(), out);
  if (st != GFH_OK) return fail(st);
  return 0;
}

// The synth command always generates, even when the config names files.
int open_graph_synth_only(const json& cfg, gfh_graph** out) {
  json data = cfg.contains("data") ? cfg["data"] : json::object();
  json spec = data.is_object() && data.contains("synth") ? data["synth"]
                                                         : json::object();
  gfh_status st = gfh_graph_synth(spec.dump().c_str(), out);
  if (st != GFH_OK) return fail(st);
  return 0;
}

std::string oracle_spec_of(const json& cfg) {
  return cfg.contains("oracle") ? cfg["oracle"].dump() : "{}";
}

void flatten(const json& j, const std::string& prefix,
             std::vector<std::string>& lines) {
  if (j.is_object()) {
    for (const auto& item : j.items())
      flatten(item.value(),
              prefix.empty() ? item.key() : prefix + "." + item.key(), lines);
    return;
  }
  lines.push_back(prefix + "=" + (j.is_string() ? j.get<std::string>()
                                                : j.dump()));
}

int write_csv(const std::string& path, const json& config_echo,
              const std::vector<std::string>& header,
              const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) {
    std::fprintf(stderr, "error: cannot write %s\n", path.c_str());
    return kExitData;
  }
  std::vector<std::string> lines;
  flatten(config_echo, "", lines);
  for (const std::string& line : lines) out << "# " << line << "\n";
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << "\n";
  }
  return 0;
}

std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return fmt_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

void summary_cells(const json& summary, std::vector<std::string>& row) {
  for (const char* metric : {"accuracy", "ndcg", "err", "consistency"}) {
    const json& m = summary[metric];
    if (m.is_null()) {
      row.push_back("");
      row.push_back("");
    } else {
      row.push_back(cell(m["mean"]));
      row.push_back(cell(m["std"]));
    }
  }
}

struct GraphGuard {
  gfh_graph* g = nullptr;
  ~GraphGuard() { gfh_graph_free(g); }
};

struct OracleGuard {
  gfh_oracle* o = nullptr;
  ~OracleGuard() { gfh_oracle_free(o); }
};

struct HintGuard {
  gfh_hint* h = nullptr;
  ~HintGuard() { gfh_hint_free(h); }
};

struct ModelGuard {
  gfh_model* m = nullptr;
  ~ModelGuard() { gfh_model_free(m); }
};

int cmd_synth(const ConfigState& st, const std::string& out_prefix) {
  json cfg;
  if (int rc = resolve_config(st, cfg)) return rc;
  GraphGuard g;
  if (int rc = open_graph_synth_only(cfg, &g.g)) return rc;
  if (!out_prefix.empty()) {
    gfh_status rc = gfh_graph_save(
        g.g, (out_prefix + ".edges").c_str(), (out_prefix + ".features").c_str(),
        (out_prefix + ".labels").c_str(), (out_prefix + ".split").c_str());
    if (rc != GFH_OK) return fail(rc);
  }
  StringOut info;
  gfh_status rc = gfh_graph_info(g.g, &info.s);
  if (rc != GFH_OK) return fail(rc);
  std::printf("%s\n", info.s);
  return 0;
}

int cmd_build_fairness_graph(const ConfigState& st, const std::string& out) {
  json cfg;
  if (int rc = resolve_config(st, cfg)) return rc;
  GraphGuard g;
  if (int rc = open_graph(cfg, &g.g)) return rc;
  OracleGuard o;
  gfh_status rc = gfh_oracle_build(g.g, oracle_spec_of(cfg).c_str(), &o.o);
  if (rc != GFH_OK) return fail(rc);
  std::size_t k = cfg.value("fairness_k", std::size_t{10});
  StringOut info;
  rc = gfh_fairness_graph_build(o.o, k, out.empty() ? nullptr : out.c_str(),
                                &info.s);
  if (rc != GFH_OK) return fail(rc);
  std::printf("%s\n", info.s);
  return 0;
}

int cmd_train_hint(const ConfigState& st, const std::string& out) {
  json cfg;
  if (int rc = resolve_config(st, cfg)) return rc;
  GraphGuard g;
  if (int rc = open_graph(cfg, &g.g)) return rc;
  OracleGuard o;
  gfh_status rc = gfh_oracle_build(g.g, oracle_spec_of(cfg).c_str(), &o.o);
  if (rc != GFH_OK) return fail(rc);
  json hint_cfg = cfg.contains("hint") ? cfg["hint"] : json::object();
  if (cfg.contains("fairness_k")) hint_cfg["fairness_k"] = cfg["fairness_k"];
  HintGuard h;
  StringOut report;
  rc = gfh_hint_train(g.g, o.o, hint_cfg.dump().c_str(), &h.h, &report.s);
  if (rc != GFH_OK) return fail(rc);
  if (!out.empty()) {
    rc = gfh_hint_save(h.h, out.c_str());
    if (rc != GFH_OK) return fail(rc);
  }
  std::printf("%s\n", report.s);
  return 0;
}

int cmd_train(const ConfigState& st, const std::string& model_out,
              const std::string& csv_out, const std::string& json_out) {
  json cfg;
  if (int rc = resolve_config(st, cfg)) return rc;
  GraphGuard g;
  if (int rc = open_graph(cfg, &g.g)) return rc;
  StringOut out;
  gfh_status rc = gfh_experiment_run(
      g.g, experiment_part(cfg).dump().c_str(),
      model_out.empty() ? nullptr : model_out.c_str(), &out.s);
  if (rc != GFH_OK) return fail(rc);
  json result = json::parse(out.s);
  if (!json_out.empty()) {
    std::ofstream f(json_out);
    if (!f) return fail_usage("cannot write " + json_out);
    f << out.s << "\n";
  }
  if (!csv_out.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const json& r : result["rows"]) {
      const json& m = r["metrics"];
      rows.push_back({cell(r["seed"]), cell(m["accuracy"]), cell(m["ndcg"]),
                      cell(m["err"]), cell(m["consistency"]),
                      cell(r["mean_epoch_ms"]), cell(r["best_epoch"]),
                      cell(r["aborted"]), cell(r["hint_trained"])});
    }
    const json& s = result["summary"];
    std::vector<std::string> mean_row{"mean"}, std_row{"std"};
    for (const char* metric : {"accuracy", "ndcg", "err", "consistency"}) {
      const json& m = s[metric];
      mean_row.push_back(m.is_null() ? "" : cell(m["mean"]));
      std_row.push_back(m.is_null() ? "" : cell(m["std"]));
    }
    for (int i = 0; i < 4; ++i) {
      mean_row.push_back("");
      std_row.push_back("");
    }
    rows.push_back(mean_row);
    rows.push_back(std_row);
    if (int wrc = write_csv(csv_out, result["config"],
                            {"seed", "accuracy", "ndcg", "err", "consistency",
                             "mean_epoch_ms", "best_epoch", "aborted",
                             "hint_trained"},
                            rows))
      return wrc;
  }
  std::printf("%s\n", out.s);
  for (const json& r : result["rows"])
    if (r["aborted"].get<bool>()) {
      std::fprintf(stderr, "error: a run aborted on a numeric failure\n");
      return kExitNumeric;
    }
  return 0;
}

int cmd_evaluate(const ConfigState& st, const std::string& model_path,
                 const std::string& hint_path, std::size_t k, bool all_nodes,
                 bool with_importance) {
  json cfg;
  if (int rc = resolve_config(st, cfg)) return rc;
  GraphGuard g;
  if (int rc = open_graph(cfg, &g.g)) return rc;
  OracleGuard o;
  gfh_status rc = gfh_oracle_build(g.g, oracle_spec_of(cfg).c_str(), &o.o);
  if (rc != GFH_OK) return fail(rc);
  ModelGuard m;
  rc = gfh_model_load(model_path.c_str(), &m.m);
  if (rc != GFH_OK) return fail(rc);
  HintGuard h;
  if (!hint_path.empty()) {
    rc = gfh_hint_load(hint_path.c_str(), &h.h);
    if (rc != GFH_OK) return fail(rc);
  }
  StringOut metrics;
  rc = gfh_evaluate(m.m, g.g, o.o, h.h, k, all_nodes ? 0 : 1, &metrics.s);
  if (rc != GFH_OK) return fail(rc);
  json out = json::parse(metrics.s);
  if (with_importance) {
    StringOut imp;
    rc = gfh_importance(m.m, g.g, h.h, &imp.s);
    if (rc != GFH_OK) return fail(rc);
    out["importance"] = json::parse(imp.s);
  }
  std::printf("%s\n", out.dump(2).c_str());
  return 0;
}

int cmd_sweep_gamma(const ConfigState& st, std::vector<double> gammas,
                    const std::string& csv_out) {
  json cfg;
  if (int rc = resolve_config(st, cfg)) return rc;
  GraphGuard g;
  if (int rc = open_graph(cfg, &g.g)) return rc;
  StringOut out;
  gfh_status rc =
      gfh_sweep_gamma(g.g, experiment_part(cfg).dump().c_str(), gammas.data(),
                      gammas.size(), &out.s);
  if (rc != GFH_OK) return fail(rc);
  json result = json::parse(out.s);
  if (!csv_out.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const json& r : result["rows"]) {
      std::vector<std::string> row{cell(r["gamma"])};
      summary_cells(r["summary"], row);
      row.push_back(cell(r["pareto"]));
      rows.push_back(row);
    }
    if (int wrc = write_csv(
            csv_out, result["config"],
            {"gamma", "accuracy_mean", "accuracy_std", "ndcg_mean", "ndcg_std",
             "err_mean", "err_std", "consistency_mean", "consistency_std",
             "pareto"},
            rows))
      return wrc;
  }
  std::printf("%s\n", out.s);
  return 0;
}

int cmd_sweep_k(const ConfigState& st, std::vector<std::size_t> ks,
                const std::string& csv_out) {
  json cfg;
  if (int rc = resolve_config(st, cfg)) return rc;
  GraphGuard g;
  if (int rc = open_graph(cfg, &g.g)) return rc;
  StringOut out;
  gfh_status rc = gfh_sweep_k(g.g, experiment_part(cfg).dump().c_str(),
                              ks.data(), ks.size(), &out.s);
  if (rc != GFH_OK) return fail(rc);
  json result = json::parse(out.s);
  if (!csv_out.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const json& r : result["rows"]) {
      std::vector<std::string> row{cell(r["k"])};
      summary_cells(r["summary"], row);
      row.push_back(cell(r["hint_trained"]));
      rows.push_back(row);
    }
    if (int wrc = write_csv(
            csv_out, result["config"],
            {"k", "accuracy_mean", "accuracy_std", "ndcg_mean", "ndcg_std",
             "err_mean", "err_std", "consistency_mean", "consistency_std",
             "hint_trained"},
            rows))
      return wrc;
  }
  std::printf("%s\n", out.s);
  return 0;
}

int cmd_benchmark(const ConfigState& st, std::vector<std::string> methods,
                  std::size_t epochs, const std::string& csv_out) {
  json cfg;
  if (int rc = resolve_config(st, cfg)) return rc;
  if (methods.size() < 2)
    return fail_usage("benchmark-time needs at least two methods");
  GraphGuard g;
  if (int rc = open_graph(cfg, &g.g)) return rc;
  json configs = json::array();
  for (const std::string& m : methods) {
    json c = experiment_part(cfg);
    c["method"] = m;
    configs.push_back(std::move(c));
  }
  StringOut out;
  gfh_status rc =
      gfh_benchmark(g.g, configs.dump().c_str(), epochs, &out.s);
  if (rc != GFH_OK) return fail(rc);
  json result = json::parse(out.s);
  if (!csv_out.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (const json& r : result["rows"])
      rows.push_back({cell(r["label"]), cell(r["mean_epoch_ms"]),
                      cell(r["ratio_vs_first"]), cell(r["config_hash"])});
    json echo = experiment_part(cfg);
    echo["benchmark_epochs"] = epochs;
    if (int wrc = write_csv(
            csv_out, echo,
            {"method", "mean_epoch_ms", "ratio_vs_first", "config_hash"},
            rows))
      return wrc;
  }
  std::printf("%s\n", out.s);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"individual-fairness toolkit for graph neural networks"};
  app.require_subcommand(1);

  ConfigState synth_st;
  std::string synth_out;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_config_options(synth, synth_st);
  synth->add_option("--out", synth_out, "output path prefix");

  ConfigState fg_st;
  std::string fg_out;
  CLI::App* fg = app.add_subcommand("build-fairness-graph",
                                    "materialize the fairness graph");
  add_config_options(fg, fg_st);
  fg->add_option("--out", fg_out, "edge-file output path");

  ConfigState hint_st;
  std::string hint_out;
  CLI::App* hint =
      app.add_subcommand("train-hint", "fit fairness hints by link prediction");
  add_config_options(hint, hint_st);
  hint->add_option("--out", hint_out, "hint-matrix output path");

  ConfigState train_st;
  std::string train_model_out, train_csv, train_json;
  CLI::App* train = app.add_subcommand("train", "train and evaluate a method");
  add_config_options(train, train_st);
  train->add_option("--model-out", train_model_out, "model checkpoint path");
  train->add_option("--csv", train_csv, "per-seed results CSV path");
  train->add_option("--json", train_json, "full report JSON path");

  ConfigState eval_st;
  std::string eval_model, eval_hint;
  std::size_t eval_k = 10;
  bool eval_all = false, eval_imp = false;
  CLI::App* eval = app.add_subcommand("evaluate", "evaluate a saved model");
  add_config_options(eval, eval_st);
  eval->add_option("--model", eval_model, "model checkpoint")->required();
  eval->add_option("--hint", eval_hint, "hint matrix for hint models");
  eval->add_option("--k", eval_k, "ranking cutoff");
  eval->add_flag("--all-nodes", eval_all, "rank every node, not just test");
  eval->add_flag("--importance", eval_imp, "include saliency scores");

  ConfigState sg_st;
  std::vector<double> sg_gammas{0.01, 0.1, 1.0, 10.0, 100.0};
  std::string sg_csv;
  CLI::App* sg =
      app.add_subcommand("sweep-gamma", "trade-off sweep over gamma");
  add_config_options(sg, sg_st);
  sg->add_option("--gammas", sg_gammas, "gamma values")->delimiter(',');
  sg->add_option("--csv", sg_csv, "results CSV path");

  ConfigState sk_st;
  std::vector<std::size_t> sk_ks{5, 10, 15, 20};
  std::string sk_csv;
  CLI::App* sk = app.add_subcommand("sweep-k", "sensitivity sweep over k");
  add_config_options(sk, sk_st);
  sk->add_option("--ks", sk_ks, "k values")->delimiter(',');
  sk->add_option("--csv", sk_csv, "results CSV path");

  ConfigState bm_st;
  std::vector<std::string> bm_methods{"vanilla", "gfairhint", "redress"};
  std::size_t bm_epochs = 50;
  std::string bm_csv;
  CLI::App* bm =
      app.add_subcommand("benchmark-time", "per-epoch wall-clock comparison");
  add_config_options(bm, bm_st);
  bm->add_option("--methods", bm_methods, "methods to time")->delimiter(',');
  bm->add_option("--epochs", bm_epochs, "epochs per method");
  bm->add_option("--csv", bm_csv, "results CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  }

  if (synth->parsed()) return cmd_synth(synth_st, synth_out);
  if (fg->parsed()) return cmd_build_fairness_graph(fg_st, fg_out);
  if (hint->parsed()) return cmd_train_hint(hint_st, hint_out);
  if (train->parsed())
    return cmd_train(train_st, train_model_out, train_csv, train_json);
  if (eval->parsed())
    return cmd_evaluate(eval_st, eval_model, eval_hint, eval_k, eval_all,
                        eval_imp);
  if (sg->parsed()) return cmd_sweep_gamma(sg_st, sg_gammas, sg_csv);
  if (sk->parsed()) return cmd_sweep_k(sk_st, sk_ks, sk_csv);
  if (bm->parsed()) return cmd_benchmark(bm_st, bm_methods, bm_epochs, bm_csv);
  return kExitUsage;
}
