#include "mecllm/ecld/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mecllm/diff/adam.hpp"
#include "mecllm/ecld/importance.hpp"
#include "mecllm/ecld/offline_metrics.hpp"
#include "mecllm/ecld/quantize.hpp"

namespace mecllm::ecld {

namespace {

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& idx, std::size_t begin,
                   std::size_t end) {
  Matrix out(static_cast<Eigen::Index>(end - begin), x.cols());
  for (std::size_t i = begin; i < end; ++i) {
    out.row(static_cast<Eigen::Index>(i - begin)) = x.row(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

std::vector<int> gather(const std::vector<int>& v, const std::vector<std::size_t>& idx,
                        std::size_t begin, std::size_t end) {
  std::vector<int> out;
  for (std::size_t i = begin; i < end; ++i) out.push_back(v[idx[i]]);
  return out;
}

TrainSpec train_spec_from_json(const nlohmann::json& j, TrainSpec t) {
  t.epochs = j.value("epochs", t.epochs);
  t.batch = j.value("batch", t.batch);
  t.lr = j.value("lr", t.lr);
  return t;
}

nlohmann::json to_json(const TrainSpec& t) {
  return {{"epochs", t.epochs}, {"batch", t.batch}, {"lr", t.lr}};
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

int device_bits(const std::string& device) {
  if (device == "smartphone") return 4;
  if (device == "laptop" || device == "edge") return 8;
  throw std::invalid_argument("unknown target device: " + device);
}

int EcldConfig::resolved_bits() const { return bits ? *bits : device_bits(target_device); }

void EcldConfig::validate() const {
  network.validate();
  distill.validate();
  if (task.informative_dims == 0 || task.informative_dims > network.embed_dim) {
    throw std::invalid_argument("task.informative_dims must be in [1, embed_dim]");
  }
  if (task.n_train == 0 || task.n_test == 0 || task.n_calibration == 0) {
    throw std::invalid_argument("task sample counts must be positive");
  }
  if (teacher.batch == 0 || student.batch == 0) throw std::invalid_argument("batch must be > 0");
  if (!std::isfinite(theta_width) || !std::isfinite(theta_depth)) {
    throw std::invalid_argument("pruning thresholds must be finite");
  }
  QuantSpec{resolved_bits(), 0.0, 1.0}.validate();
  if (quant_grid < 2) throw std::invalid_argument("quantization.grid must be >= 2");
}

EcldConfig ecld_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  EcldConfig c;
  c.seed = j.value("seed", c.seed);
  if (j.contains("network")) {
    const auto& n = j["network"];
    c.network.embed_dim = n.value("embed_dim", c.network.embed_dim);
    c.network.hidden = n.value("hidden", c.network.hidden);
    c.network.heads = n.value("heads", c.network.heads);
    c.network.layers = n.value("layers", c.network.layers);
    c.network.classes = n.value("classes", c.network.classes);
  }
  if (j.contains("task")) {
    const auto& t = j["task"];
    c.task.informative_dims = t.value("informative_dims", c.task.informative_dims);
    c.task.n_train = t.value("n_train", c.task.n_train);
    c.task.n_test = t.value("n_test", c.task.n_test);
    c.task.n_calibration = t.value("n_calibration", c.task.n_calibration);
  }
  if (j.contains("teacher")) c.teacher = train_spec_from_json(j["teacher"], c.teacher);
  if (j.contains("pruning")) {
    const auto& p = j["pruning"];
    if (p.contains("theta")) c.theta_width = c.theta_depth = p["theta"].get<double>();
    c.theta_width = p.value("theta_width", c.theta_width);
    c.theta_depth = p.value("theta_depth", c.theta_depth);
  }
  if (j.contains("distillation")) {
    const auto& d = j["distillation"];
    c.distill.alpha = d.value("alpha", c.distill.alpha);
    c.distill.tau = d.value("tau", c.distill.tau);
    c.student = train_spec_from_json(d, c.student);
  }
  if (j.contains("quantization")) {
    const auto& q = j["quantization"];
    if (q.contains("bits") && !q["bits"].is_null()) c.bits = q["bits"].get<int>();
    c.target_device = q.value("target_device", c.target_device);
    c.quant_grid = q.value("grid", c.quant_grid);
    c.quant_refine = q.value("refine", c.quant_refine);
  }
  if (j.contains("corpora")) {
    const auto& k = j["corpora"];
    c.accuracy_corpus = resolve(base_dir, k.at("accuracy").get<std::string>());
    c.hallucination_corpus = resolve(base_dir, k.at("hallucination").get<std::string>());
  }
  if (j.contains("reference")) {
    c.reference_storage_mb = j["reference"].value("storage_mb", c.reference_storage_mb);
    c.reference_energy_wh = j["reference"].value("energy_wh", c.reference_energy_wh);
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const EcldConfig& c) {
  nlohmann::json d = to_json(c.student);
  d["alpha"] = c.distill.alpha;
  d["tau"] = c.distill.tau;
  return {
      {"seed", c.seed},
      {"network",
       {{"embed_dim", c.network.embed_dim},
        {"hidden", c.network.hidden},
        {"heads", c.network.heads},
        {"layers", c.network.layers},
        {"classes", c.network.classes}}},
      {"task",
       {{"informative_dims", c.task.informative_dims},
        {"n_train", c.task.n_train},
        {"n_test", c.task.n_test},
        {"n_calibration", c.task.n_calibration}}},
      {"teacher", to_json(c.teacher)},
      {"pruning", {{"theta_width", c.theta_width}, {"theta_depth", c.theta_depth}}},
      {"distillation", d},
      {"quantization",
       {{"bits", c.resolved_bits()},
        {"target_device", c.target_device},
        {"grid", c.quant_grid},
        {"refine", c.quant_refine}}},
      {"corpora",
       {{"accuracy", c.accuracy_corpus.generic_string()},
        {"hallucination", c.hallucination_corpus.generic_string()}}},
      {"reference",
       {{"storage_mb", c.reference_storage_mb}, {"energy_wh", c.reference_energy_wh}}},
  };
}

ToyTask make_task(const TaskSpec& spec, std::size_t embed_dim, std::size_t classes,
                  const Matrix& rule, std::size_t n, Rng& rng) {
  if (static_cast<std::size_t>(rule.rows()) != classes ||
      static_cast<std::size_t>(rule.cols()) != spec.informative_dims) {
    throw std::invalid_argument("make_task: rule must be (classes, informative_dims)");
  }
  ToyTask t;
  t.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(embed_dim));
  for (Eigen::Index i = 0; i < t.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < t.x.cols(); ++j) t.x(i, j) = rng.normal();
  }
  const Matrix scores =
      t.x.leftCols(static_cast<Eigen::Index>(spec.informative_dims)) * rule.transpose();
  t.labels.resize(n);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    Eigen::Index arg = 0;
    scores.row(i).maxCoeff(&arg);
    t.labels[static_cast<std::size_t>(i)] = static_cast<int>(arg);
  }
  return t;
}

double classification_accuracy(const ToyNet& net, const ToyTask& task) {
  const Matrix logits = net.forward(task.x);
  std::size_t hits = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (arg == task.labels[static_cast<std::size_t>(i)]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

double train_teacher(ToyNet& net, const ToyTask& data, const TrainSpec& spec, Rng& rng) {
  auto params = net.params();
  diff::Adam opt(params, {spec.lr});
  const DistillConfig ce_only{0.0, 1.0};
  const std::size_t n = data.labels.size();
  double last = 0.0;
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    const auto order = rng.permutation(n);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < n; b += spec.batch) {
      const std::size_t e = std::min(n, b + spec.batch);
      const Matrix x = gather_rows(data.x, order, b, e);
      const Matrix y = one_hot(gather(data.labels, order, b, e), net.spec().classes);
      ToyNetCache cache;
      const Matrix logits = net.forward(x, &cache);
      const auto loss = distill_loss(logits, logits, y, ce_only);
      opt.zero_grad();
      net.backward(cache, loss.grad);
      opt.step();
      sum += loss.value;
      ++batches;
    }
    last = sum / static_cast<double>(batches);
  }
  return last;
}

DistillResult distill_student(ToyNet& student, const ToyNet& teacher, const ToyTask& data,
                              const std::vector<Tensor>& mask, const DistillConfig& cfg,
                              const TrainSpec& spec, Rng& rng) {
  auto params = student.params();
  diff::Adam opt(params, {spec.lr});
  const std::size_t n = data.labels.size();
  const Matrix teacher_logits = teacher.forward(data.x);
  DistillResult last;
  apply_masks(student, mask);
  for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
    const auto order = rng.permutation(n);
    DistillResult sum;
    std::size_t batches = 0;
    for (std::size_t b = 0; b < n; b += spec.batch) {
      const std::size_t e = std::min(n, b + spec.batch);
      const Matrix x = gather_rows(data.x, order, b, e);
      const Matrix tl = gather_rows(teacher_logits, order, b, e);
      const Matrix y = one_hot(gather(data.labels, order, b, e), student.spec().classes);
      ToyNetCache cache;
      const Matrix logits = student.forward(x, &cache);
      const auto loss = distill_loss(logits, tl, y, cfg);
      opt.zero_grad();
      student.backward(cache, loss.grad);
      opt.step();
      apply_masks(student, mask);
      sum.loss += loss.value;
      sum.ce += loss.ce;
      sum.kl += loss.kl;
      ++batches;
    }
    const double nb = static_cast<double>(batches);
    last = {sum.loss / nb, sum.ce / nb, sum.kl / nb};
  }
  return last;
}

std::vector<TensorQuantReport> quantize_net(ToyNet& net, const std::vector<Tensor>& mask, int bits,
                                            std::size_t grid, bool refine) {
  auto params = net.params();
  if (mask.size() != params.size()) throw std::invalid_argument("quantize_net: mask count mismatch");
  std::vector<TensorQuantReport> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& w = *params[i].value;
    TensorQuantReport rep;
    rep.name = params[i].name;
    std::vector<double> kept;
    for (std::size_t j = 0; j < w.size(); ++j) {
      if (mask[i][j] != 0.0) kept.push_back(w[j]);
    }
    rep.kept = kept.size();
    if (!kept.empty()) {
      const Tensor survivors({kept.size()}, kept);
      const QuantFit fit = fit_quant_range(survivors, bits, grid, refine);
      rep.a = fit.spec.a;
      rep.b = fit.spec.b;
      rep.error = fit.error;
      rep.naive_error = fit.naive_error;
      rep.degenerate = fit.degenerate;
      for (std::size_t j = 0; j < w.size(); ++j) {
        w[j] = mask[i][j] != 0.0 ? quantize_value(w[j], fit.spec) : 0.0;
      }
    } else {
      w.fill(0.0);
    }
    out.push_back(rep);
  }
  return out;
}

double compressed_storage_bits(std::size_t kept, std::size_t total, std::size_t tensors, int bits) {
  return static_cast<double>(kept) * bits + static_cast<double>(total) +
         128.0 * static_cast<double>(tensors);
}

CompressionReport run_ecld(const EcldConfig& cfg) {
  cfg.validate();
  const ToyNetSpec& spec = cfg.network;
  Rng task_rng(cfg.seed, 1), init_rng(cfg.seed, 2), teacher_rng(cfg.seed, 3),
      student_rng(cfg.seed, 4);

  Matrix rule(static_cast<Eigen::Index>(spec.classes),
              static_cast<Eigen::Index>(cfg.task.informative_dims));
  for (Eigen::Index i = 0; i < rule.size(); ++i) rule.data()[i] = task_rng.normal();
  const ToyTask train =
      make_task(cfg.task, spec.embed_dim, spec.classes, rule, cfg.task.n_train, task_rng);
  const ToyTask test =
      make_task(cfg.task, spec.embed_dim, spec.classes, rule, cfg.task.n_test, task_rng);
  const ToyTask calib =
      make_task(cfg.task, spec.embed_dim, spec.classes, rule, cfg.task.n_calibration, task_rng);

  CompressionReport r;
  r.target_device = cfg.target_device;
  r.bits = cfg.resolved_bits();

  ToyNet teacher(spec);
  teacher.init(init_rng);
  r.teacher_loss = train_teacher(teacher, train, cfg.teacher, teacher_rng);
  r.teacher_accuracy = classification_accuracy(teacher, test);
  r.parameters = teacher.parameter_count();

  const ImportanceScores scores = compute_importance(teacher, calib.x);
  const PruningMask mask = build_masks(spec, scores, cfg.theta_width, cfg.theta_depth);
  r.width_popcount = mask.width_popcount();
  r.depth_broadcast_popcount = mask.depth_broadcast_popcount();
  r.combined_popcount = mask.combined_popcount();
  r.pruned_parameters = r.parameters - r.combined_popcount;
  for (double d : mask.depth.data()) r.layers_kept.push_back(d != 0.0 ? 1 : 0);

  ToyNet student = teacher;
  apply_masks(student, mask.combined);
  r.pruned_accuracy = classification_accuracy(student, test);

  const DistillResult dr =
      distill_student(student, teacher, train, mask.combined, cfg.distill, cfg.student, student_rng);
  r.distill_loss = dr.loss;
  r.distill_ce = dr.ce;
  r.distill_kl = dr.kl;
  r.distilled_accuracy = classification_accuracy(student, test);

  r.tensors = quantize_net(student, mask.combined, r.bits, cfg.quant_grid, cfg.quant_refine);
  for (const auto& t : r.tensors) {
    r.quant_error += t.error;
    r.quant_naive_error += t.naive_error;
  }
  r.quantized_accuracy = classification_accuracy(student, test);

  r.baseline_bits = 64.0 * static_cast<double>(r.parameters);
  r.compressed_bits =
      compressed_storage_bits(r.combined_popcount, r.parameters, r.tensors.size(), r.bits);
  r.storage_ratio = r.compressed_bits / r.baseline_bits;
  r.energy_ratio = static_cast<double>(r.combined_popcount) / static_cast<double>(r.parameters) *
                   (static_cast<double>(r.bits) / 64.0);
  r.accessibility_mb = cfg.reference_storage_mb * r.storage_ratio;
  r.energy_wh = cfg.reference_energy_wh * r.energy_ratio;

  if (!cfg.accuracy_corpus.empty()) {
    std::vector<Prediction> preds;
    std::vector<Reference> refs;
    load_accuracy_jsonl(cfg.accuracy_corpus, preds, refs);
    r.offline_accuracy = offline_accuracy(preds, refs);
  }
  if (!cfg.hallucination_corpus.empty()) {
    r.offline_hallucination = offline_hallucination(load_hallucination_jsonl(cfg.hallucination_corpus));
  }
  return r;
}

nlohmann::json to_json(const CompressionReport& r) {
  nlohmann::json tensors = nlohmann::json::array();
  for (const auto& t : r.tensors) {
    tensors.push_back({{"name", t.name},
                       {"a", t.a},
                       {"b", t.b},
                       {"kept", t.kept},
                       {"error", t.error},
                       {"naive_error", t.naive_error},
                       {"degenerate", t.degenerate}});
  }
  return {
      {"masks",
       {{"parameters", r.parameters},
        {"width_popcount", r.width_popcount},
        {"depth_broadcast_popcount", r.depth_broadcast_popcount},
        {"combined_popcount", r.combined_popcount},
        {"pruned_parameters", r.pruned_parameters},
        {"layers_kept", r.layers_kept}}},
      {"accuracy",
       {{"teacher", r.teacher_accuracy},
        {"pruned", r.pruned_accuracy},
        {"distilled", r.distilled_accuracy},
        {"quantized", r.quantized_accuracy}}},
      {"losses",
       {{"teacher_ce", r.teacher_loss},
        {"distill", r.distill_loss},
        {"distill_ce", r.distill_ce},
        {"distill_kl", r.distill_kl}}},
      {"quantization",
       {{"bits", r.bits},
        {"error", r.quant_error},
        {"naive_error", r.quant_naive_error},
        {"tensors", tensors}}},
      {"storage",
       {{"baseline_bits", r.baseline_bits},
        {"compressed_bits", r.compressed_bits},
        {"ratio", r.storage_ratio}}},
      {"metrics",
       {{"hallucination", r.offline_hallucination},
        {"accuracy", r.offline_accuracy},
        {"accessibility_mb", r.accessibility_mb},
        {"energy_wh", r.energy_wh}}},
  };
}

nlohmann::json deployment_report(const CompressionReport& r) {
  return {{"target_device", r.target_device},
          {"bits", r.bits},
          {"size_estimate_bytes", r.compressed_bits / 8.0},
          {"size_estimate_mb_scaled", r.accessibility_mb},
          {"kept_parameters", r.combined_popcount},
          {"artifact", nullptr}};
}

}  // namespace mecllm::ecld
