#include "latentprobe/probe.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "latentprobe/error.hpp"
#include "latentprobe/random.hpp"

using nlohmann::json;

namespace latentprobe {

namespace {

constexpr double kInitScale = 0.01;
constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void check_labels(std::span<const std::uint8_t> y) {
  if (std::any_of(y.begin(), y.end(), [](auto v) { return v > 1; })) {
    throw ValidationError("labels must be 0 or 1");
  }
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const std::uint8_t> y) {
  const auto n1 = static_cast<std::size_t>(std::count(y.begin(), y.end(), std::uint8_t{1}));
  return {y.size() - n1, n1};
}

void require_both_classes(std::span<const std::uint8_t> y) {
  const auto [n0, n1] = class_counts(y);
  if (n0 == 0 || n1 == 0) {
    throw ValidationError(fmt::format("degenerate labels: only class {} present", n1 == 0 ? 0 : 1));
  }
}

void require_dim(const LogisticProbe& p, const Matrix& x) {
  if (static_cast<std::size_t>(x.cols()) != p.dim()) {
    throw ValidationError(
        fmt::format("dimension mismatch: probe expects {} features, got {}", p.dim(), x.cols()));
  }
}

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void ProbeConfig::validate() const {
  if (!(l2_strength >= 0.0) || !std::isfinite(l2_strength)) {
    throw ValidationError("l2_strength must be a finite non-negative number");
  }
  if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
  if (!(tolerance > 0.0)) throw ValidationError("tolerance must be positive");
}

Matrix LogisticProbe::standardize(const Matrix& x) const {
  if (static_cast<std::size_t>(x.cols()) != dim()) {
    throw ValidationError(
        fmt::format("dimension mismatch: probe expects {} features, got {}", dim(), x.cols()));
  }
  Matrix out = x.rowwise() - feature_means.transpose();
  out.array().rowwise() /= feature_scales.transpose().array();
  return out;
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Vector class_sample_weights(std::span<const std::uint8_t> y, ClassWeighting weighting) {
  Vector c = Vector::Ones(static_cast<Eigen::Index>(y.size()));
  if (weighting == ClassWeighting::balanced) {
    const auto [n0, n1] = class_counts(y);
    const double n = static_cast<double>(y.size());
    const double w0 = n0 ? n / (2.0 * static_cast<double>(n0)) : 0.0;
    const double w1 = n1 ? n / (2.0 * static_cast<double>(n1)) : 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) c[static_cast<Eigen::Index>(i)] = y[i] ? w1 : w0;
  }
  return c;
}

LogisticObjective::LogisticObjective(const Matrix& x, std::span<const std::uint8_t> y,
                                     Vector sample_weights, double l2_strength)
    : x_(x), sample_weights_(std::move(sample_weights)), l2_(l2_strength) {
  if (static_cast<std::size_t>(x.rows()) != y.size() || sample_weights_.size() != x.rows()) {
    throw ValidationError("objective: row count mismatch");
  }
  targets_.resize(x.rows());
  for (std::size_t i = 0; i < y.size(); ++i) targets_[static_cast<Eigen::Index>(i)] = y[i];
}

double LogisticObjective::evaluate(const Vector& w, double b, Vector* grad_w, double* grad_b) const {
  const double n = static_cast<double>(x_.rows());
  const Vector z = (x_ * w).array() + b;
  double data_loss = 0.0;
  Vector residual(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    data_loss += sample_weights_[i] * (softplus(z[i]) - targets_[i] * z[i]);
    residual[i] = sample_weights_[i] * (sigmoid(z[i]) - targets_[i]);
  }
  if (grad_w) *grad_w = (x_.transpose() * residual) / n + (l2_ / n) * w;
  if (grad_b) *grad_b = residual.sum() / n;
  return data_loss / n + 0.5 * (l2_ / n) * w.squaredNorm();
}

Split split_stratified(std::span<const std::uint8_t> y, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ValidationError(fmt::format("test_fraction {} outside (0,1)", test_fraction));
  }
  check_labels(y);
  require_both_classes(y);

  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);

  Rng rng(seed);
  Split s;
  for (auto& members : by_class) {
    rng.shuffle(members.begin(), members.end());
    const auto n_test = static_cast<std::size_t>(
        std::floor(test_fraction * static_cast<double>(members.size()) + 0.5));
    s.test.insert(s.test.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_test));
    s.train.insert(s.train.end(), members.begin() + static_cast<std::ptrdiff_t>(n_test), members.end());
  }
  if (s.test.empty() || s.train.empty()) {
    throw ValidationError(fmt::format("test_fraction {} leaves the {} side empty", test_fraction,
                                      s.test.empty() ? "test" : "train"));
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

LogisticProbe train_probe(const Matrix& x, std::span<const std::uint8_t> y, const ProbeConfig& cfg) {
  cfg.validate();
  if (static_cast<std::size_t>(x.rows()) != y.size()) {
    throw ValidationError(fmt::format("{} feature rows but {} labels", x.rows(), y.size()));
  }
  if (x.rows() < 2) throw ValidationError("train_probe needs at least 2 samples");
  if (x.cols() < 1) throw ValidationError("train_probe needs at least 1 feature");
  if (!x.allFinite()) throw ValidationError("non-finite feature value");
  check_labels(y);
  require_both_classes(y);

  const auto d = x.cols();
  LogisticProbe p;
  p.config = cfg;
  p.feature_means = Vector::Zero(d);
  p.feature_scales = Vector::Ones(d);
  if (cfg.standardize) {
    p.feature_means = x.colwise().mean().transpose();
    const Matrix centered = x.rowwise() - p.feature_means.transpose();
    const Vector sd = (centered.colwise().squaredNorm() / static_cast<double>(x.rows()))
                          .transpose()
                          .cwiseSqrt();
    for (Eigen::Index j = 0; j < d; ++j) p.feature_scales[j] = sd[j] > 0.0 ? sd[j] : 1.0;
  }
  Matrix xs = x.rowwise() - p.feature_means.transpose();
  xs.array().rowwise() /= p.feature_scales.transpose().array();
  const LogisticObjective objective(xs, y, class_sample_weights(y, cfg.class_weighting),
                                    cfg.l2_strength);

  Rng rng(cfg.seed);
  Vector w(d);
  for (Eigen::Index j = 0; j < d; ++j) w[j] = kInitScale * rng.normal();
  double b = 0.0;

  Vector g;
  double gb = 0.0;
  double loss = objective.evaluate(w, b, &g, &gb);
  double step = 1.0;
  int iter = 0;
  for (; iter < cfg.max_iters; ++iter) {
    const double gnorm2 = g.squaredNorm() + gb * gb;
    if (std::sqrt(gnorm2) <= cfg.tolerance) break;

    double t = step;
    Vector w_new;
    double b_new = 0.0;
    double loss_new = 0.0;
    bool accepted = false;
    for (int k = 0; k < kMaxBacktracks; ++k) {
      w_new = w - t * g;
      b_new = b - t * gb;
      loss_new = objective.evaluate(w_new, b_new, nullptr, nullptr);
      if (loss_new <= loss - kArmijo * t * gnorm2) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // no descent possible at working precision

    Vector g_new;
    double gb_new = 0.0;
    loss_new = objective.evaluate(w_new, b_new, &g_new, &gb_new);

    // Barzilai-Borwein step for the next trial.
    const double ss = (w_new - w).squaredNorm() + (b_new - b) * (b_new - b);
    const double sr = (w_new - w).dot(g_new - g) + (b_new - b) * (gb_new - gb);
    step = sr > 0.0 ? std::clamp(ss / sr, 1e-10, 1e10) : std::min(2.0 * t, 1e10);

    w = std::move(w_new);
    b = b_new;
    g = std::move(g_new);
    gb = gb_new;
    loss = loss_new;
  }

  p.weights = std::move(w);
  p.intercept = b;
  p.iterations = iter;
  p.final_loss = loss;
  p.gradient_norm = std::sqrt(g.squaredNorm() + gb * gb);
  p.converged = p.gradient_norm <= cfg.tolerance;
  return p;
}

Vector decision_function(const LogisticProbe& p, const Matrix& x) {
  require_dim(p, x);
  return (p.standardize(x) * p.weights).array() + p.intercept;
}

Vector predict_proba(const LogisticProbe& p, const Matrix& x) {
  return decision_function(p, x).unaryExpr([](double z) { return sigmoid(z); });
}

LabelVector classify(const LogisticProbe& p, const Matrix& x, double cutoff) {
  const Vector prob = predict_proba(p, x);
  LabelVector out(static_cast<std::size_t>(prob.size()));
  for (Eigen::Index i = 0; i < prob.size(); ++i) out[static_cast<std::size_t>(i)] = prob[i] >= cutoff;
  return out;
}

ClassificationMetrics classification_metrics(std::span<const std::uint8_t> y_true,
                                             std::span<const std::uint8_t> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ValidationError(fmt::format("length mismatch: {} true labels, {} predictions",
                                      y_true.size(), y_pred.size()));
  }
  if (y_true.empty()) throw ValidationError("classification_metrics: empty input");
  check_labels(y_true);
  check_labels(y_pred);

  ClassificationMetrics m;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    if (y_true[i]) {
      (y_pred[i] ? m.tp : m.fn)++;
    } else {
      (y_pred[i] ? m.fp : m.tn)++;
    }
  }
  const auto ratio = [](std::size_t num, std::size_t den) {
    return static_cast<double>(num) / static_cast<double>(den);
  };
  m.accuracy = ratio(m.tp + m.tn, y_true.size());
  if (m.tp + m.fp > 0) m.precision = ratio(m.tp, m.tp + m.fp);
  if (m.tp + m.fn > 0) m.recall = ratio(m.tp, m.tp + m.fn);
  return m;
}

json to_json(const ProbeConfig& cfg) {
  return json{{"l2_strength", cfg.l2_strength},
              {"max_iters", cfg.max_iters},
              {"tolerance", cfg.tolerance},
              {"standardize", cfg.standardize},
              {"seed", cfg.seed},
              {"class_weighting", cfg.class_weighting == ClassWeighting::balanced ? "balanced" : "none"}};
}

ProbeConfig probe_config_from_json(const json& j) {
  ProbeConfig cfg;
  cfg.l2_strength = j.at("l2_strength").get<double>();
  cfg.max_iters = j.at("max_iters").get<int>();
  cfg.tolerance = j.at("tolerance").get<double>();
  cfg.standardize = j.at("standardize").get<bool>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  const auto cw = j.at("class_weighting").get<std::string>();
  if (cw == "balanced") {
    cfg.class_weighting = ClassWeighting::balanced;
  } else if (cw != "none") {
    throw ValidationError(fmt::format("unknown class_weighting '{}'", cw));
  }
  cfg.validate();
  return cfg;
}

json to_json(const LogisticProbe& p) {
  return json{{"concept", p.concept_name},
              {"weights", to_std(p.weights)},
              {"intercept", p.intercept},
              {"feature_means", to_std(p.feature_means)},
              {"feature_scales", to_std(p.feature_scales)},
              {"converged", p.converged},
              {"iterations", p.iterations},
              {"final_loss", p.final_loss},
              {"gradient_norm", p.gradient_norm},
              {"config", to_json(p.config)}};
}

LogisticProbe probe_from_json(const json& j) {
  LogisticProbe p;
  try {
    p.concept_name = j.value("concept", "");
    p.weights = from_std(j.at("weights").get<std::vector<double>>());
    p.intercept = j.at("intercept").get<double>();
    p.feature_means = from_std(j.at("feature_means").get<std::vector<double>>());
    p.feature_scales = from_std(j.at("feature_scales").get<std::vector<double>>());
    p.converged = j.at("converged").get<bool>();
    p.iterations = j.value("iterations", 0);
    p.final_loss = j.value("final_loss", 0.0);
    p.gradient_norm = j.value("gradient_norm", 0.0);
    p.config = probe_config_from_json(j.at("config"));
  } catch (const json::exception& e) {
    throw ValidationError(fmt::format("malformed probe JSON: {}", e.what()));
  }
  if (p.feature_means.size() != p.weights.size() || p.feature_scales.size() != p.weights.size()) {
    throw ValidationError("probe JSON: weight and scaling vectors differ in length");
  }
  if (!p.weights.allFinite() || !std::isfinite(p.intercept) || !p.feature_means.allFinite()) {
    throw ValidationError("probe JSON: non-finite parameter");
  }
  if (!(p.feature_scales.array() > 0.0).all() || !p.feature_scales.allFinite()) {
    throw ValidationError("probe JSON: feature_scales must be strictly positive");
  }
  return p;
}

json to_json(const ClassificationMetrics& m) {
  const auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"accuracy", m.accuracy}, {"precision", opt(m.precision)}, {"recall", opt(m.recall)},
              {"tp", m.tp}, {"fp", m.fp}, {"tn", m.tn}, {"fn", m.fn}};
}

}  // namespace latentprobe
