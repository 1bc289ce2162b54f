#include "gfairhint/fusion.hpp"

#include <chrono>
#include <cmath>
#include <optional>

#include "gfairhint/error.hpp"
#include "gfairhint/rng.hpp"
#include "gfairhint/textio.hpp"

namespace gfairhint {

FusionHead::FusionHead(std::size_t d_u, std::size_t d_hint,
                       std::size_t n_classes, FusionConfig cfg,
                       std::uint64_t seed)
    : d_u_(d_u), d_hint_(d_hint), c_(n_classes), relu_(cfg.relu) {
  if (d_u == 0) throw ConfigError("fusion head: zero input width");
  if (n_classes == 0) throw ConfigError("fusion head: zero classes");
  std::size_t d_in = d_u + d_hint;
  d_mid_ = cfg.d_mid == 0 ? d_in : cfg.d_mid;

  std::mt19937_64 rng(seed);
  params_.emplace_back("head.w1", glorot_uniform(d_in, d_mid_, rng));
  params_.emplace_back("head.b1", Tensor({std::size_t{1}, d_mid_}));
  params_.emplace_back("head.w2", glorot_uniform(d_mid_, c_, rng));
  params_.emplace_back("head.b2", Tensor({std::size_t{1}, c_}));
}

FusionHead::BoundForward FusionHead::forward(Tape& tape, Var u,
                                             const Tensor* hints) {
  std::vector<Var> w;
  w.reserve(params_.size());
  for (Parameter& p : params_) w.push_back(tape.param(p.value));
  Var logits = forward_with(tape, u, hints, w);
  return {logits, std::move(w)};
}

Var FusionHead::forward_with(Tape& tape, Var u, const Tensor* hints,
                             const std::vector<Var>& weights) {
  if (weights.size() != 4)
    throw ContractError("fusion head: expected 4 weight tensors");
  if (u.value().cols() != d_u_)
    throw ConfigError("fusion head: input width " +
                      std::to_string(u.value().cols()) + ", built for " +
                      std::to_string(d_u_));
  Var x = u;
  if (d_hint_ > 0) {
    if (hints == nullptr)
      throw ContractError("fusion head: hints required but absent");
    if (hints->rows() != u.value().rows() || hints->cols() != d_hint_)
      throw ConfigError("fusion head: hint shape " + hints->shape_str() +
                        " does not match " +
                        std::to_string(u.value().rows()) + "x" +
                        std::to_string(d_hint_));
    // gradient-free leaf: the hints stay fixed during optimization
    x = concat_cols(u, tape.input(*hints));
  } else if (hints != nullptr) {
    throw ContractError("fusion head: built without hints but hints given");
  }
  Var h = add(matmul(x, weights[0]), weights[1]);
  if (relu_) h = relu(h);
  return add(matmul(h, weights[2]), weights[3]);
}

Predictions predict(const Tensor& logits) {
  if (logits.ndim() != 2 || logits.cols() < 2)
    throw ContractError("predict: need 2-d logits with at least two classes");
  Predictions out;
  out.probs = softmax_rows_value(logits);
  out.labels.resize(logits.rows());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    out.labels[i] = static_cast<int>(best);
  }
  return out;
}

namespace {

std::vector<Tensor> snapshot(const std::vector<Parameter>& ps) {
  std::vector<Tensor> out;
  out.reserve(ps.size());
  for (const Parameter& p : ps) out.push_back(p.value);
  return out;
}

double sum_sq(const Tensor& t) {
  double s = 0.0;
  for (double v : t.data()) s += v * v;
  return s;
}

MetricReport checkpoint_metrics(const TrainedModel& model, const Graph& g,
                                const OracleSimilarity& oracle,
                                const Tensor* hints, std::size_t k) {
  if (g.split_ids(SplitTag::Test).empty()) return {};
  ModelForward fwd = forward_model(model, g, hints);
  Predictions preds = predict(fwd.logits);
  EvalOptions opts;
  opts.k = k;
  return evaluate_node_metrics(fwd.logits, preds.labels, g, oracle, opts);
}

}  // namespace

std::pair<TrainedModel, TrainReport> train(const Graph& g,
                                           const OracleSimilarity& oracle,
                                           const HintMatrix* hints,
                                           BackboneConfig backbone_cfg,
                                           const TrainConfig& cfg) {
  if (cfg.epochs < cfg.warmup_epochs)
    throw ConfigError("train: epochs < warmup_epochs");
  if (cfg.gamma < 0.0) throw ConfigError("train: negative gamma");
  if (cfg.k == 0) throw ConfigError("train: k must be positive");
  if (cfg.lr <= 0.0) throw ConfigError("train: learning rate must be positive");
  if (cfg.use_hint && !cfg.mlp_head)
    throw ConfigError("train: hint fusion requires the mlp head");
  if (g.n_classes() < 2)
    throw ContractError("train: need at least two label classes");
  if (oracle.n() != g.n_nodes())
    throw ContractError("train: oracle and graph node counts differ");
  std::vector<std::size_t> train_ids = g.split_ids(SplitTag::Train);
  if (train_ids.empty()) throw ContractError("train: empty training split");
  std::vector<std::size_t> val_ids = g.split_ids(SplitTag::Val);

  const Tensor* hint_values = nullptr;
  std::size_t d_hint = 0;
  if (cfg.use_hint) {
    if (hints == nullptr)
      throw ContractError("train: use_hint set but no hints given");
    if (!hints->frozen) throw ContractError("train: hints must be frozen");
    if (hints->values.rows() != g.n_nodes())
      throw ContractError("train: hint rows != node count");
    hint_values = &hints->values;
    d_hint = hints->values.cols();
  }

  if (!cfg.mlp_head) backbone_cfg.out_dim = g.n_classes();
  Backbone bb(backbone_cfg, g.features().cols());
  std::optional<FusionHead> head;
  if (cfg.mlp_head)
    head.emplace(bb.out_dim(), d_hint, g.n_classes(), cfg.fusion,
                 derive_seed(cfg.seed, "head-init"));

  for (Parameter& p : bb.params()) p.adam.cfg.lr = cfg.lr;
  if (head)
    for (Parameter& p : head->params()) p.adam.cfg.lr = cfg.lr;

  RankingConfig rcfg = cfg.ranking;
  rcfg.k = cfg.k;

  std::mt19937_64 drop_rng(derive_seed(cfg.seed, "train-dropout"));

  TrainReport report;
  if (hint_values) {
    report.hint_sum_sq_before = sum_sq(*hint_values);
    report.hint_sum_sq_after = report.hint_sum_sq_before;
  }

  // forward through backbone and optional head on one tape
  auto model_logits = [&](Tape& tape, bool training,
                          std::vector<Var>* weight_vars) {
    auto bf = bb.forward(tape, g, training, training ? &drop_rng : nullptr);
    Var z = bf.out;
    if (weight_vars) *weight_vars = bf.weight_vars;
    if (head) {
      auto hf = head->forward(tape, z, hint_values);
      z = hf.logits;
      if (weight_vars)
        weight_vars->insert(weight_vars->end(), hf.weight_vars.begin(),
                            hf.weight_vars.end());
    }
    return z;
  };

  bool has_val = !val_ids.empty();
  std::vector<Tensor> best_bb, best_head;
  std::size_t best_epoch = 0;
  double best_val = -1.0;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    // a failed epoch rolls back to this state, so the returned model is the
    // last checkpoint that survived an epoch end to end
    std::vector<Tensor> pre_bb = snapshot(bb.params());
    std::vector<Tensor> pre_head =
        head ? snapshot(head->params()) : std::vector<Tensor>{};
    try {
      Tape tape;
      std::vector<Var> weight_vars;
      Var z = model_logits(tape, true, &weight_vars);
      Var loss_u = cross_entropy_mean(z, g.labels(), train_ids);
      double utility_val = loss_u.value().item();
      double fairness_val = 0.0;
      Var total = loss_u;

      bool fairness_on = cfg.use_ranking_loss && epoch >= cfg.warmup_epochs &&
                         cfg.gamma > 0.0;
      // the plan must stay alive until backward finishes
      std::optional<RankingPlan> plan;
      if (fairness_on) {
        plan.emplace(build_ranking_plan(z.value(), oracle, rcfg));
        report.ranking_skipped_nodes =
            std::max(report.ranking_skipped_nodes, plan->skipped_nodes);
        Var loss_f = ranking_fairness_loss(z, *plan);
        fairness_val = loss_f.value().item();
        total = add(loss_u, scale(loss_f, cfg.gamma));
      }
      double total_val = total.value().item();
      if (!std::isfinite(total_val))
        throw NumericError("non-finite training loss");

      tape.backward(total);
      for (const Var& wv : weight_vars)
        for (double gv : wv.grad().data())
          if (!std::isfinite(gv))
            throw NumericError("non-finite gradient");
      std::size_t n_bb = bb.params().size();
      for (std::size_t i = 0; i < n_bb; ++i)
        bb.params()[i].apply(weight_vars[i].grad());
      if (head)
        for (std::size_t i = 0; i < head->params().size(); ++i)
          head->params()[i].apply(weight_vars[n_bb + i].grad());

      if (has_val) {
        Tape eval_tape;
        Var ev = model_logits(eval_tape, false, nullptr);
        double acc =
            accuracy(predict(ev.value()).labels, g.labels(), val_ids);
        if (acc > best_val) {
          best_val = acc;
          best_epoch = epoch;
          best_bb = snapshot(bb.params());
          if (head) best_head = snapshot(head->params());
        }
      }

      report.utility_losses.push_back(utility_val);
      report.fairness_losses.push_back(fairness_val);
      report.total_losses.push_back(total_val);
    } catch (const NumericError& e) {
      for (std::size_t i = 0; i < pre_bb.size(); ++i)
        bb.params()[i].value = std::move(pre_bb[i]);
      if (head)
        for (std::size_t i = 0; i < pre_head.size(); ++i)
          head->params()[i].value = std::move(pre_head[i]);
      report.aborted = true;
      report.abort_epoch = epoch;
      report.abort_reason = e.what();
      break;
    }
    report.epoch_ms.push_back(std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count());
  }

  auto build_model = [&](std::vector<Tensor> bbw, std::vector<Tensor> hw) {
    TrainedModel m;
    m.backbone = backbone_cfg;
    m.in_dim = g.features().cols();
    m.n_classes = g.n_classes();
    m.mlp_head = cfg.mlp_head;
    m.use_hint = cfg.use_hint;
    m.d_hint = d_hint;
    m.d_mid = head ? head->d_mid() : 0;
    m.head_relu = cfg.fusion.relu;
    m.backbone_weights = std::move(bbw);
    m.head_weights = std::move(hw);
    return m;
  };

  TrainedModel last_model = build_model(
      snapshot(bb.params()), head ? snapshot(head->params())
                                  : std::vector<Tensor>{});
  TrainedModel best_model = last_model;
  if (has_val && !best_bb.empty()) {
    best_model = build_model(std::move(best_bb), std::move(best_head));
    report.best_epoch = best_epoch;
    report.best_val_accuracy = best_val;
  } else {
    report.best_epoch = report.total_losses.empty()
                            ? 0
                            : report.total_losses.size() - 1;
  }

  report.last_metrics =
      checkpoint_metrics(last_model, g, oracle, hint_values, cfg.k);
  report.best_metrics =
      checkpoint_metrics(best_model, g, oracle, hint_values, cfg.k);
  if (hint_values) report.hint_sum_sq_after = sum_sq(*hint_values);

  return {std::move(best_model), std::move(report)};
}

ModelForward forward_model(const TrainedModel& model, const Graph& g,
                           const Tensor* hints) {
  if (g.features().cols() != model.in_dim)
    throw ContractError("forward: feature width differs from the checkpoint");
  Backbone bb(model.backbone, model.in_dim);
  if (bb.params().size() != model.backbone_weights.size())
    throw ContractError("forward: backbone weight count mismatch");
  for (std::size_t i = 0; i < bb.params().size(); ++i) {
    if (!bb.params()[i].value.same_shape(model.backbone_weights[i]))
      throw ContractError("forward: backbone weight shape mismatch");
    bb.params()[i].value = model.backbone_weights[i];
  }

  Tape tape;
  auto bf = bb.forward(tape, g, false, nullptr);
  ModelForward out;
  out.u = bf.out.value();
  if (!model.mlp_head) {
    out.logits = out.u;
    return out;
  }

  FusionConfig fcfg;
  fcfg.d_mid = model.d_mid;
  fcfg.relu = model.head_relu;
  FusionHead head(bb.out_dim(), model.d_hint, model.n_classes, fcfg, 0);
  if (head.params().size() != model.head_weights.size())
    throw ContractError("forward: head weight count mismatch");
  for (std::size_t i = 0; i < head.params().size(); ++i) {
    if (!head.params()[i].value.same_shape(model.head_weights[i]))
      throw ContractError("forward: head weight shape mismatch");
    head.params()[i].value = model.head_weights[i];
  }
  const Tensor* hv = model.use_hint ? hints : nullptr;
  if (model.use_hint && hints == nullptr)
    throw ContractError("forward: checkpoint expects hints");
  auto hf = head.forward(tape, bf.out, hv);
  out.logits = hf.logits.value();
  return out;
}

ImportanceReport hint_importance(const TrainedModel& model, const Graph& g,
                                 const Tensor* hints) {
  if (!model.mlp_head)
    throw ContractError("importance: model has no fusion head");
  ModelForward fwd = forward_model(model, g, hints);
  std::size_t n = fwd.u.rows();

  Tape tape;
  Var uv = tape.param(fwd.u);
  std::optional<Var> hv;
  Var x = uv;
  if (model.use_hint) {
    hv = tape.param(*hints);
    x = concat_cols(uv, *hv);
  }
  Var h = add(matmul(x, tape.input(model.head_weights[0])),
              tape.input(model.head_weights[1]));
  if (model.head_relu) h = relu(h);
  Var logits = add(matmul(h, tape.input(model.head_weights[2])),
                   tape.input(model.head_weights[3]));

  // one backward gives every node's own-class gradient, since row k of the
  // logits depends only on row k of the inputs
  Predictions preds = predict(logits.value());
  Tensor mask({n, logits.value().cols()});
  for (std::size_t k = 0; k < n; ++k)
    mask(k, static_cast<std::size_t>(preds.labels[k])) = 1.0;
  Var s = sum(mul(logits, tape.input(mask)));
  tape.backward(s);

  auto mean_abs = [](const Tensor& t) {
    double acc = 0.0;
    for (double v : t.data()) acc += std::fabs(v);
    return acc / static_cast<double>(t.size());
  };
  ImportanceReport report;
  report.score_u = mean_abs(uv.grad());
  if (hv) {
    report.score_hint = mean_abs(hv->grad());
    if (*report.score_hint > 0.0)
      report.ratio = report.score_u / *report.score_hint;
  }
  return report;
}

namespace {

void write_tensor(std::ofstream& out, const Tensor& t) {
  out << "tensor " << t.ndim();
  for (std::size_t d : t.shape()) out << ' ' << d;
  out << '\n';
  std::size_t cols = t.ndim() == 2 ? t.cols() : t.size();
  std::size_t idx = 0;
  for (std::size_t i = 0; i < t.size() / std::max<std::size_t>(cols, 1); ++i) {
    for (std::size_t j = 0; j < cols; ++j, ++idx) {
      if (j) out << ' ';
      out << format_double(t.data()[idx]);
    }
    out << '\n';
  }
}

Tensor read_tensor(const std::vector<std::string>& lines, std::size_t& at) {
  if (at >= lines.size()) throw IngestError("model file: missing tensor");
  auto head = split_fields(lines[at]);
  if (head.size() < 2 || head[0] != "tensor")
    throw IngestError("model file: expected a tensor header at line '" +
                      lines[at] + "'");
  std::size_t ndim = parse_u64(head[1], "tensor ndim");
  if (head.size() != 2 + ndim)
    throw IngestError("model file: tensor header arity");
  std::vector<std::size_t> shape;
  std::size_t total = 1;
  for (std::size_t d = 0; d < ndim; ++d) {
    shape.push_back(parse_u64(head[2 + d], "tensor dim"));
    total *= shape.back();
  }
  ++at;
  std::vector<double> values;
  values.reserve(total);
  while (values.size() < total) {
    if (at >= lines.size())
      throw IngestError("model file: truncated tensor data");
    for (const std::string& f : split_fields(lines[at]))
      values.push_back(parse_double(f, "tensor value"));
    ++at;
  }
  if (values.size() != total)
    throw IngestError("model file: tensor data overrun");
  return Tensor(std::move(shape), std::move(values));
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out = open_for_write(path);
  out << "model v1\n";
  out << "backbone " << architecture_name(model.backbone.architecture) << ' '
      << model.backbone.n_layers << ' ' << model.backbone.hidden_dim << ' '
      << model.backbone.out_dim << ' ' << model.backbone.heads << ' '
      << (model.backbone.nonlinearity == Nonlinearity::Relu ? "relu"
                                                            : "identity")
      << ' ' << format_double(model.backbone.dropout) << ' '
      << (model.backbone.residual ? 1 : 0) << ' ' << model.backbone.seed
      << '\n';
  out << "head " << model.in_dim << ' ' << model.n_classes << ' '
      << (model.mlp_head ? 1 : 0) << ' ' << (model.use_hint ? 1 : 0) << ' '
      << model.d_hint << ' ' << model.d_mid << ' '
      << (model.head_relu ? 1 : 0) << '\n';
  out << "tensors " << model.backbone_weights.size() << ' '
      << model.head_weights.size() << '\n';
  for (const Tensor& t : model.backbone_weights) write_tensor(out, t);
  for (const Tensor& t : model.head_weights) write_tensor(out, t);
  if (!out) throw IoError("failed writing " + path);
}

TrainedModel load_model(const std::string& path) {
  std::vector<std::string> lines = read_data_lines(path);
  if (lines.empty() || lines[0] != "model v1")
    throw IngestError(path + ": not a model file");
  if (lines.size() < 4) throw IngestError(path + ": truncated model file");

  auto bk = split_fields(lines[1]);
  if (bk.size() != 10 || bk[0] != "backbone")
    throw IngestError(path + ": bad backbone line");
  TrainedModel m;
  m.backbone.architecture = parse_architecture(bk[1]);
  m.backbone.n_layers = parse_u64(bk[2], "n_layers");
  m.backbone.hidden_dim = parse_u64(bk[3], "hidden_dim");
  m.backbone.out_dim = parse_u64(bk[4], "out_dim");
  m.backbone.heads = parse_u64(bk[5], "heads");
  if (bk[6] == "relu")
    m.backbone.nonlinearity = Nonlinearity::Relu;
  else if (bk[6] == "identity")
    m.backbone.nonlinearity = Nonlinearity::Identity;
  else
    throw IngestError(path + ": unknown nonlinearity '" + bk[6] + "'");
  m.backbone.dropout = parse_double(bk[7], "dropout");
  m.backbone.residual = parse_u64(bk[8], "residual") != 0;
  m.backbone.seed = parse_u64(bk[9], "seed");

  auto hd = split_fields(lines[2]);
  if (hd.size() != 8 || hd[0] != "head")
    throw IngestError(path + ": bad head line");
  m.in_dim = parse_u64(hd[1], "in_dim");
  m.n_classes = parse_u64(hd[2], "n_classes");
  m.mlp_head = parse_u64(hd[3], "mlp_head") != 0;
  m.use_hint = parse_u64(hd[4], "use_hint") != 0;
  m.d_hint = parse_u64(hd[5], "d_hint");
  m.d_mid = parse_u64(hd[6], "d_mid");
  m.head_relu = parse_u64(hd[7], "head_relu") != 0;

  auto tc = split_fields(lines[3]);
  if (tc.size() != 3 || tc[0] != "tensors")
    throw IngestError(path + ": bad tensor count line");
  std::size_t n_bb = parse_u64(tc[1], "backbone tensor count");
  std::size_t n_head = parse_u64(tc[2], "head tensor count");

  std::size_t at = 4;
  for (std::size_t i = 0; i < n_bb; ++i)
    m.backbone_weights.push_back(read_tensor(lines, at));
  for (std::size_t i = 0; i < n_head; ++i)
    m.head_weights.push_back(read_tensor(lines, at));
  if (at != lines.size())
    throw IngestError(path + ": trailing content after tensors");
  return m;
}

}  // namespace gfairhint
