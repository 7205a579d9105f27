// Copyright 2026 The Wishart DP Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "wishart_dp/trainer.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <utility>

#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"
#include "wishart_dp/randmat.h"
#include "wishart_dp/status.h"

namespace wishart_dp {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Row-wise softmax, stabilized by the row maximum.
MatrixXd Softmax(const MatrixXd& logits) {
  MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    out.row(i) = (logits.row(i).array() - m).exp();
    out.row(i) /= out.row(i).sum();
  }
  return out;
}

double LogSumExp(const VectorXd& v) {
  const double m = v.maxCoeff();
  return m + std::log((v.array() - m).exp().sum());
}

double EntryVarOrDefault(double entry_var, int r) {
  return entry_var > 0.0 ? entry_var : 1.0 / r;
}

// Minibatch indices for one step: everything for batch == 0, otherwise
// Poisson sampling at rate batch / N or a uniform draw without replacement.
std::vector<int64_t> SelectBatch(int64_t n, const DpTrainConfig& config,
                                 Rng& rng) {
  std::vector<int64_t> idx;
  if (config.batch <= 0 || config.batch >= n) {
    idx.resize(n);
    for (int64_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
  }
  if (config.poisson) {
    const double q = static_cast<double>(config.batch) / n;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int64_t i = 0; i < n; ++i) {
      if (unif(rng) < q) idx.push_back(i);
    }
    return idx;
  }
  std::vector<int64_t> all(n);
  for (int64_t i = 0; i < n; ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(config.batch);
  std::sort(all.begin(), all.end());
  return all;
}

bool IsFullBatch(const TrainTask& task, const DpTrainConfig& config) {
  return config.batch <= 0 || config.batch >= task.size();
}

// Mean gradient over a subset of examples (the l2 term is added once).
MatrixXd BatchGradient(const TrainTask& task, const MatrixXd& w,
                       const std::vector<int64_t>& idx) {
  if (static_cast<int64_t>(idx.size()) == task.size()) return Gradient(task, w);
  MatrixXd g = task.l2 * w;
  if (idx.empty()) return g;
  TrainTask sub;
  sub.kind = task.kind;
  sub.n_classes = task.n_classes;
  sub.X.resize(idx.size(), task.X.cols());
  if (task.kind == TaskKind::kRidge) sub.targets.resize(idx.size(), task.targets.cols());
  for (size_t k = 0; k < idx.size(); ++k) {
    sub.X.row(k) = task.X.row(idx[k]);
    if (task.kind == TaskKind::kRidge) {
      sub.targets.row(k) = task.targets.row(idx[k]);
    } else {
      sub.labels.push_back(task.labels[idx[k]]);
    }
  }
  return Gradient(sub, w);
}

absl::StatusOr<MatrixXd> SampleLoraA(int r, int d, double entry_var,
                                     const Seed& seed) {
  return SampleGaussianMatrix(r, d, EntryVarOrDefault(entry_var, r), seed);
}

TrajectoryRow MakeRow(const TrainTask& task, const MatrixXd& w, int step,
                      double eps, double delta) {
  return {step, Loss(task, w), Gradient(task, w).norm(), eps, delta};
}

absl::Status ParseBool(absl::string_view value, bool* out) {
  const std::string v = absl::AsciiStrToLower(std::string(value));
  if (v == "true" || v == "1" || v == "yes") {
    *out = true;
  } else if (v == "false" || v == "0" || v == "no") {
    *out = false;
  } else {
    return ConfigError(absl::StrFormat("expected a boolean, got '%s'", value));
  }
  return absl::OkStatus();
}

absl::Status ParseDouble(absl::string_view value, double* out) {
  const std::string v = absl::AsciiStrToLower(std::string(value));
  if (v == "inf" || v == "infinity") {
    *out = kInf;
    return absl::OkStatus();
  }
  if (!absl::SimpleAtod(value, out)) {
    return ConfigError(absl::StrFormat("expected a number, got '%s'", value));
  }
  return absl::OkStatus();
}

}  // namespace

absl::Status TrainTask::Validate() const {
  if (X.rows() < 1 || X.cols() < 1) return DomainError("task has no data");
  if (!X.allFinite()) return DomainError("task features are not finite");
  if (kind == TaskKind::kRidge) {
    if (targets.rows() != X.rows() || targets.cols() < 1) {
      return DomainError("ridge targets must be N x n_outputs");
    }
  } else {
    if (n_classes < 2) return DomainError("logistic task needs >= 2 classes");
    if (static_cast<int64_t>(labels.size()) != X.rows()) {
      return DomainError("one label per example required");
    }
    for (int y : labels) {
      if (y < 0 || y >= n_classes) {
        return DomainError(absl::StrFormat("label %d out of range", y));
      }
    }
  }
  if (!(l2 >= 0.0)) return DomainError("l2 must be >= 0");
  return absl::OkStatus();
}

absl::StatusOr<TrainTask> MakeRidgeTask(int64_t n, int d, int n_outputs,
                                        double noise_std, double l2,
                                        const Seed& seed) {
  if (n < 1 || d < 1 || n_outputs < 1) return DomainError("bad task shape");
  TrainTask task;
  task.kind = TaskKind::kRidge;
  task.l2 = l2;
  WDP_ASSIGN_OR_RETURN(task.X, SampleGaussianMatrix(static_cast<int>(n), d, 1.0,
                                                    seed.Child(0)));
  WDP_ASSIGN_OR_RETURN(const MatrixXd w_star,
                       SampleGaussianMatrix(n_outputs, d, 1.0 / d, seed.Child(1)));
  task.targets = task.X * w_star.transpose();
  if (noise_std > 0.0) {
    WDP_ASSIGN_OR_RETURN(
        const MatrixXd noise,
        SampleGaussianMatrix(static_cast<int>(n), n_outputs,
                             noise_std * noise_std, seed.Child(2)));
    task.targets += noise;
  }
  return task;
}

absl::StatusOr<TrainTask> MakeLogisticTask(int64_t n, int d, int n_classes,
                                           double logit_scale, double l2,
                                           const Seed& seed) {
  if (n < 1 || d < 1) return DomainError("bad task shape");
  if (n_classes < 2) return DomainError("logistic task needs >= 2 classes");
  TrainTask task;
  task.kind = TaskKind::kLogistic;
  task.n_classes = n_classes;
  task.l2 = l2;
  WDP_ASSIGN_OR_RETURN(task.X, SampleGaussianMatrix(static_cast<int>(n), d, 1.0,
                                                    seed.Child(0)));
  WDP_ASSIGN_OR_RETURN(
      const MatrixXd w_star,
      SampleGaussianMatrix(n_classes, d, logit_scale * logit_scale / d,
                           seed.Child(1)));
  const MatrixXd probs = Softmax(task.X * w_star.transpose());
  Rng rng = MakeRng(seed.Child(2));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  task.labels.resize(n);
  for (int64_t i = 0; i < n; ++i) {
    const double u = unif(rng);
    double acc = 0.0;
    int label = n_classes - 1;
    for (int c = 0; c < n_classes; ++c) {
      acc += probs(i, c);
      if (u < acc) {
        label = c;
        break;
      }
    }
    task.labels[i] = label;
  }
  return task;
}

absl::StatusOr<TrainTask> WithExample(const TrainTask& task, const VectorXd& x,
                                      int label, const VectorXd& target) {
  if (x.size() != task.X.cols()) return DomainError("example has wrong dimension");
  TrainTask out = task;
  out.X.conservativeResize(task.X.rows() + 1, Eigen::NoChange);
  out.X.row(task.X.rows()) = x.transpose();
  if (task.kind == TaskKind::kRidge) {
    if (target.size() != task.targets.cols()) {
      return DomainError("ridge example needs a target of n_outputs entries");
    }
    out.targets.conservativeResize(task.targets.rows() + 1, Eigen::NoChange);
    out.targets.row(task.targets.rows()) = target.transpose();
  } else {
    if (label < 0 || label >= task.n_classes) {
      return DomainError(absl::StrFormat("label %d out of range", label));
    }
    out.labels.push_back(label);
  }
  return out;
}

MatrixXd Residuals(const TrainTask& task, const MatrixXd& w) {
  const MatrixXd logits = task.X * w.transpose();
  if (task.kind == TaskKind::kRidge) return logits - task.targets;
  MatrixXd p = Softmax(logits);
  for (int64_t i = 0; i < task.size(); ++i) p(i, task.labels[i]) -= 1.0;
  return p;
}

double Loss(const TrainTask& task, const MatrixXd& w) {
  const double reg = 0.5 * task.l2 * w.squaredNorm();
  const double n = static_cast<double>(task.size());
  const MatrixXd logits = task.X * w.transpose();
  if (task.kind == TaskKind::kRidge) {
    return 0.5 * (logits - task.targets).squaredNorm() / n + reg;
  }
  double total = 0.0;
  for (int64_t i = 0; i < task.size(); ++i) {
    const VectorXd row = logits.row(i).transpose();
    total += LogSumExp(row) - row(task.labels[i]);
  }
  return total / n + reg;
}

double ExampleLoss(const TrainTask& task, const MatrixXd& w, const VectorXd& x,
                   int label, const VectorXd& target) {
  const VectorXd out = w * x;
  if (task.kind == TaskKind::kRidge) return 0.5 * (out - target).squaredNorm();
  return LogSumExp(out) - out(label);
}

MatrixXd Gradient(const TrainTask& task, const MatrixXd& w) {
  const MatrixXd r = Residuals(task, w);
  return r.transpose() * task.X / static_cast<double>(task.size()) + task.l2 * w;
}

MatrixXd ExampleGradient(const TrainTask& task, const MatrixXd& w, int64_t i) {
  const MatrixXd logits = task.X.row(i) * w.transpose();
  VectorXd resid;
  if (task.kind == TaskKind::kRidge) {
    resid = (logits - task.targets.row(i)).transpose();
  } else {
    resid = Softmax(logits).row(0).transpose();
    resid(task.labels[i]) -= 1.0;
  }
  return resid * task.X.row(i) + task.l2 * w;
}

absl::StatusOr<MatrixXd> RidgeOptimum(const TrainTask& task) {
  if (task.kind != TaskKind::kRidge) return DomainError("not a ridge task");
  const double n = static_cast<double>(task.size());
  const int d = task.n_features();
  const MatrixXd h = task.X.transpose() * task.X / n +
                     task.l2 * MatrixXd::Identity(d, d);
  Eigen::LDLT<MatrixXd> ldlt(h);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
    return DegenerateInputError("ridge normal equations are singular");
  }
  const MatrixXd rhs = task.X.transpose() * task.targets / n;
  return MatrixXd(ldlt.solve(rhs).transpose());
}

absl::StatusOr<LoraState> InitLoraState(const MatrixXd& w0, int r,
                                        const Seed& seed) {
  if (r < 1) return DomainError("LoRA rank must be >= 1");
  if (w0.size() == 0) return DomainError("W0 is empty");
  LoraState state;
  state.W0 = w0;
  state.LoraB = MatrixXd::Zero(w0.rows(), r);
  WDP_ASSIGN_OR_RETURN(state.LoraA,
                       SampleLoraA(r, static_cast<int>(w0.cols()), 0.0, seed));
  return state;
}

absl::StatusOr<LoraState> LoraFaStep(const LoraState& state,
                                     const MatrixXd& grad_w, double eta) {
  if (grad_w.rows() != state.W0.rows() || grad_w.cols() != state.W0.cols()) {
    return DomainError(absl::StrFormat(
        "gradient is %dx%d but weights are %dx%d",
        static_cast<int>(grad_w.rows()), static_cast<int>(grad_w.cols()),
        static_cast<int>(state.W0.rows()), static_cast<int>(state.W0.cols())));
  }
  LoraState next = state;
  next.LoraB -= eta * (grad_w * state.LoraA.transpose());
  ++next.step;
  return next;
}

std::string_view TrainMechanismName(TrainMechanism mechanism) {
  switch (mechanism) {
    case TrainMechanism::kDpLoraFa:
      return "DP_LORA_FA";
    case TrainMechanism::kNoisyProj:
      return "NOISY_PROJ";
    case TrainMechanism::kRpGd:
      return "RP_GD";
    case TrainMechanism::kNoiseFreeLora:
      return "NOISE_FREE_LORA";
  }
  return "UNKNOWN";
}

absl::StatusOr<TrainMechanism> ParseTrainMechanism(std::string_view name) {
  const std::string upper = absl::AsciiStrToUpper(std::string(name));
  for (TrainMechanism m :
       {TrainMechanism::kDpLoraFa, TrainMechanism::kNoisyProj,
        TrainMechanism::kRpGd, TrainMechanism::kNoiseFreeLora}) {
    if (upper == TrainMechanismName(m)) return m;
  }
  if (upper == "NOISE_FREE") return TrainMechanism::kNoiseFreeLora;
  return ConfigError(absl::StrFormat("unknown training mechanism '%s'", std::string(name)));
}

absl::Status DpTrainConfig::Validate() const {
  if (T < 1) return ConfigError("T must be >= 1");
  if (!(eta > 0.0)) return ConfigError("eta must be > 0");
  if (r < 1) return ConfigError("r must be >= 1");
  if (batch < 0) return ConfigError("batch must be >= 0 (0 = full batch)");
  if (!(clip >= 0.0)) return ConfigError("clip must be >= 0");
  if (sigma.has_value() && eps_target.has_value()) {
    return ConfigError(
        "sigma and eps_target are both set; one is derived from the other");
  }
  if (sigma.has_value() && !(*sigma >= 0.0)) return ConfigError("sigma must be >= 0");
  if (eps_target.has_value() && !(*eps_target > 0.0)) {
    return ConfigError("eps_target must be > 0");
  }
  if (delta_target.has_value() && !(*delta_target > 0.0 && *delta_target < 1.0)) {
    return ConfigError("delta_target must lie in (0, 1)");
  }
  if (eps_target.has_value() && !delta_target.has_value()) {
    return ConfigError("eps_target requires delta_target");
  }
  const bool private_mech = mechanism == TrainMechanism::kDpLoraFa ||
                            mechanism == TrainMechanism::kNoisyProj;
  if (private_mech && !sigma.has_value() && !eps_target.has_value()) {
    return ConfigError(absl::StrFormat("%s needs sigma or eps_target",
                                       std::string(TrainMechanismName(mechanism))));
  }
  if (private_mech && eps_target.has_value() && std::isinf(clip)) {
    return ConfigError("calibrating sigma to a budget needs a finite clip");
  }
  if (mechanism == TrainMechanism::kNoisyProj && std::isinf(clip)) {
    return ConfigError("NOISY_PROJ needs a finite clip (beta')");
  }
  if (!private_mech && (sigma.has_value() || eps_target.has_value())) {
    return ConfigError(absl::StrFormat("%s takes no noise or privacy budget",
                                       std::string(TrainMechanismName(mechanism))));
  }
  if (alpha >= 1.0) return ConfigError("alpha must be < 1");
  return absl::OkStatus();
}

absl::StatusOr<DpTrainConfig> ParseTrainConfig(std::string_view text) {
  DpTrainConfig config;
  int line_no = 0;
  for (absl::string_view line :
       absl::StrSplit(absl::string_view(text.data(), text.size()), '\n')) {
    ++line_no;
    if (const size_t hash = line.find('#'); hash != absl::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = absl::StripAsciiWhitespace(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == absl::string_view::npos) {
      return ConfigError(absl::StrFormat("line %d: expected key = value", line_no));
    }
    const std::string key(absl::StripAsciiWhitespace(line.substr(0, eq)));
    const absl::string_view value = absl::StripAsciiWhitespace(line.substr(eq + 1));
    absl::Status st;
    double number = 0.0;
    if (key == "mechanism") {
      absl::StatusOr<TrainMechanism> m = ParseTrainMechanism(std::string(value));
      if (!m.ok()) return m.status();
      config.mechanism = *m;
    } else if (key == "T" || key == "r") {
      int v = 0;
      if (!absl::SimpleAtoi(value, &v)) {
        st = ConfigError(absl::StrFormat("expected an integer, got '%s'", value));
      }
      (key == "T" ? config.T : config.r) = v;
    } else if (key == "batch") {
      if (absl::AsciiStrToUpper(std::string(value)) == "FULL") {
        config.batch = 0;
      } else if (!absl::SimpleAtoi(value, &config.batch)) {
        st = ConfigError(absl::StrFormat("batch must be an integer or FULL, got '%s'",
                                         value));
      }
    } else if (key == "poisson") {
      st = ParseBool(value, &config.poisson);
    } else if (key == "resample_A") {
      st = ParseBool(value, &config.resample_A);
    } else if (key == "record_trajectory") {
      st = ParseBool(value, &config.record_trajectory);
    } else if (key == "constant") {
      const std::string v = absl::AsciiStrToLower(std::string(value));
      if (v == "lemma") {
        config.constant = GaussianConstant::kLemma;
      } else if (v == "algorithm") {
        config.constant = GaussianConstant::kAlgorithm;
      } else {
        st = ConfigError(absl::StrFormat("constant must be lemma or algorithm, got '%s'",
                                         value));
      }
    } else if (key == "eta" || key == "clip" || key == "entry_var" ||
               key == "alpha" || key == "account_eps") {
      st = ParseDouble(value, &number);
      if (key == "eta") config.eta = number;
      if (key == "clip") config.clip = number;
      if (key == "entry_var") config.entry_var = number;
      if (key == "alpha") config.alpha = number;
      if (key == "account_eps") config.account_eps = number;
    } else if (key == "sigma" || key == "eps_target" || key == "delta_target") {
      st = ParseDouble(value, &number);
      if (key == "sigma") config.sigma = number;
      if (key == "eps_target") config.eps_target = number;
      if (key == "delta_target") config.delta_target = number;
    } else {
      return ConfigError(absl::StrFormat("line %d: unknown key '%s'", line_no, key));
    }
    if (!st.ok()) {
      return ConfigError(absl::StrFormat("line %d (%s): %s", line_no, key,
                                         st.message()));
    }
  }
  WDP_RETURN_IF_ERROR(config.Validate());
  return config;
}

absl::StatusOr<DpTrainConfig> LoadTrainConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) return ConfigError(absl::StrFormat("cannot open config '%s'", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  return ParseTrainConfig(buffer.str());
}

std::string FormatTrainConfig(const DpTrainConfig& c) {
  auto num = [](double v) { return absl::StrFormat("%.17g", v); };
  std::string out;
  absl::StrAppend(&out, "mechanism = ", std::string(TrainMechanismName(c.mechanism)),
                  "\n");
  absl::StrAppend(&out, "T = ", c.T, "\n", "eta = ", num(c.eta), "\n");
  absl::StrAppend(&out, "batch = ", c.batch == 0 ? std::string("FULL") : absl::StrCat(c.batch), "\n");
  absl::StrAppend(&out, "poisson = ", c.poisson ? "true" : "false", "\n");
  absl::StrAppend(&out, "clip = ", std::isinf(c.clip) ? std::string("inf") : num(c.clip), "\n");
  if (c.sigma) absl::StrAppend(&out, "sigma = ", num(*c.sigma), "\n");
  if (c.eps_target) absl::StrAppend(&out, "eps_target = ", num(*c.eps_target), "\n");
  if (c.delta_target) absl::StrAppend(&out, "delta_target = ", num(*c.delta_target), "\n");
  absl::StrAppend(&out, "r = ", c.r, "\n", "entry_var = ", num(c.entry_var), "\n");
  absl::StrAppend(&out, "resample_A = ", c.resample_A ? "true" : "false", "\n");
  absl::StrAppend(&out, "alpha = ", num(c.alpha), "\n");
  absl::StrAppend(&out, "account_eps = ", num(c.account_eps), "\n");
  absl::StrAppend(&out, "constant = ",
                  c.constant == GaussianConstant::kLemma ? "lemma" : "algorithm", "\n");
  absl::StrAppend(&out, "record_trajectory = ", c.record_trajectory ? "true" : "false",
                  "\n");
  return out;
}

absl::StatusOr<DpLoraFaResult> DpLoraFa(const TrainTask& task,
                                        const LoraState& state,
                                        const DpTrainConfig& config,
                                        const Seed& seed) {
  WDP_RETURN_IF_ERROR(task.Validate());
  WDP_RETURN_IF_ERROR(config.Validate());
  if (config.mechanism != TrainMechanism::kDpLoraFa &&
      config.mechanism != TrainMechanism::kNoiseFreeLora) {
    return ConfigError("DpLoraFa needs mechanism DP_LORA_FA or NOISE_FREE_LORA");
  }
  if (state.W0.rows() != task.n_outputs() || state.W0.cols() != task.n_features()) {
    return DomainError("LoRA state does not match the task shape");
  }
  const double beta = config.clip;
  DpLoraFaResult result;
  result.state = state;
  if (config.eps_target.has_value()) {
    WDP_ASSIGN_OR_RETURN(const GaussianSigmaResult calibrated,
                         GaussianSigma(beta, *config.eps_target,
                                       *config.delta_target, config.constant));
    result.sigma = calibrated.sigma;
    result.sigma_out_of_range = calibrated.out_of_range;
    result.per_step = Budget{*config.eps_target, *config.delta_target};
  } else {
    result.sigma = config.sigma.value_or(0.0);
    if (config.delta_target.has_value()) {
      // Invert the calibration for the per-step eps at the reporting delta.
      const double factor =
          config.constant == GaussianConstant::kAlgorithm ? 2.0 : 1.0;
      const double eps =
          result.sigma > 0.0 && std::isfinite(beta)
              ? 2.0 * beta *
                    std::sqrt(factor * std::log(1.25 / *config.delta_target)) /
                    result.sigma
              : kInf;
      result.per_step = Budget{eps, *config.delta_target};
    }
  }
  if (result.per_step.has_value()) {
    WDP_ASSIGN_OR_RETURN(result.budget,
                         ComposeBasic({*result.per_step}, config.T));
  }

  const bool fast_path = std::isinf(beta) && result.sigma == 0.0 &&
                         IsFullBatch(task, config);
  const double denom = static_cast<double>(
      IsFullBatch(task, config) ? task.size() : config.batch);
  const int n_out = task.n_outputs();
  const int r = state.r();
  for (int t = 0; t < config.T; ++t) {
    const Seed step_seed = seed.Child(static_cast<uint64_t>(t));
    const MatrixXd w = result.state.Effective();
    if (fast_path) {
      WDP_ASSIGN_OR_RETURN(result.state,
                           LoraFaStep(result.state, Gradient(task, w), config.eta));
      result.batch_sizes.push_back(task.size());
    } else {
      Rng rng = MakeRng(step_seed);
      const std::vector<int64_t> idx = SelectBatch(task.size(), config, rng);
      result.batch_sizes.push_back(static_cast<int64_t>(idx.size()));
      const MatrixXd resid = Residuals(task, w);
      const MatrixXd& a = result.state.LoraA;
      const MatrixXd reg_b = task.l2 * (w * a.transpose());
      MatrixXd sum = MatrixXd::Zero(n_out, r);
      for (int64_t i : idx) {
        // grad_B l_i = (resid_i x_i^T + l2 W) A^T.
        const Eigen::RowVectorXd xa = task.X.row(i) * a.transpose();
        MatrixXd g = resid.row(i).transpose() * xa + reg_b;
        sum += ClipFrobenius(g, beta);
      }
      MatrixXd grad_b = sum / denom;
      if (result.sigma > 0.0) {
        MatrixXd noise(n_out, r);
        FillGaussian(rng, 1.0, noise);
        grad_b += (result.sigma / denom) * noise;
      }
      result.state.LoraB -= config.eta * grad_b;
      ++result.state.step;
    }
    if (config.record_trajectory) {
      const double k = t + 1.0;
      result.trajectory.push_back(MakeRow(
          task, result.state.Effective(), t + 1,
          result.per_step ? k * result.per_step->eps : kInf,
          result.per_step ? k * result.per_step->delta : 0.0));
    }
  }
  return result;
}

namespace {

double ResolveAlpha(const DpTrainConfig& config, int d) {
  if (config.alpha > 0.0) return config.alpha;
  return std::min(0.999, 1.5 * config.r / d);
}

int64_t DifferenceRank(const TrainTask& task) {
  return std::min<int64_t>(task.n_outputs(), task.n_features());
}

}  // namespace

absl::StatusOr<NoisyProjStepResult> NoisyProjStep(const TrainTask& task,
                                                  const LoraState& state,
                                                  const DpTrainConfig& config,
                                                  const Seed& seed) {
  WDP_RETURN_IF_ERROR(task.Validate());
  WDP_RETURN_IF_ERROR(config.Validate());
  if (config.mechanism != TrainMechanism::kNoisyProj) {
    return ConfigError("NoisyProjStep needs mechanism NOISY_PROJ");
  }
  if (!config.sigma.has_value()) {
    return ConfigError("NoisyProjStep needs a resolved sigma");
  }
  const int d = task.n_features();
  const int r = state.r();
  const double entry_var = EntryVarOrDefault(config.entry_var, r);
  NoisyProjStepResult result;
  result.state = state;
  if (config.resample_A) {
    WDP_ASSIGN_OR_RETURN(result.state.LoraA,
                         SampleLoraA(r, d, config.entry_var, seed.Child(0)));
  }
  const MatrixXd w = state.Effective();
  MatrixXd grad;
  if (IsFullBatch(task, config)) {
    grad = Gradient(task, w);
  } else {
    Rng rng = MakeRng(seed.Child(2));
    grad = BatchGradient(task, w, SelectBatch(task.size(), config, rng));
  }

  NoisyMechParams params;
  params.variant = *config.sigma > 0.0 ? Variant::kM2 : Variant::kNoiseFree;
  params.r = r;
  params.entry_var = entry_var;
  params.sigma_G = *config.sigma;
  params.clip_beta = config.clip;
  WDP_ASSIGN_OR_RETURN(
      const WishartDraw draw,
      WishartDraw::FromFactor(result.state.LoraA.transpose(), entry_var));
  // M2 acts on columns, so the n x d gradient enters transposed.
  WDP_ASSIGN_OR_RETURN(const MatrixXd released,
                       ApplyNoisyMech(grad.transpose(), params, draw,
                                      seed.Child(1)));
  result.update = released.transpose();
  result.state.W0 = w - config.eta * result.update;
  result.state.LoraB.setZero();
  ++result.state.step;

  if (*config.sigma > 0.0) {
    WDP_ASSIGN_OR_RETURN(
        result.report,
        AccountSmallR(config.eps_target.value_or(config.account_eps),
                      2.0 * config.clip, DifferenceRank(task), d, r,
                      *config.sigma, ResolveAlpha(config, d)));
  }
  return result;
}

absl::StatusOr<NoisyProjResult> NoisyProjTrain(const TrainTask& task,
                                               const LoraState& state,
                                               const DpTrainConfig& config,
                                               const Seed& seed) {
  WDP_RETURN_IF_ERROR(config.Validate());
  if (config.mechanism != TrainMechanism::kNoisyProj) {
    return ConfigError("NoisyProjTrain needs mechanism NOISY_PROJ");
  }
  const int d = task.n_features();
  const int r = state.r();
  const double alpha = ResolveAlpha(config, d);
  const int64_t s = DifferenceRank(task);
  const double eps = config.eps_target.value_or(config.account_eps);
  DpTrainConfig resolved = config;
  NoisyProjResult result;
  if (config.eps_target.has_value()) {
    // Smallest sigma with T(eps; T alpha (2 beta')^2 / sigma^2) + T delta_M
    // <= delta_target.
    WDP_ASSIGN_OR_RETURN(const BoundValue delta_m, DeltaMBound(s, alpha, r, d));
    const double fail = config.T * delta_m.value;
    const double target = *config.delta_target;
    if (!(fail < target)) {
      return RegimeError(
          "lower",
          absl::StrFormat("projection failure term T*delta_M = %.6g already "
                          "reaches delta_target = %g; raise r or alpha",
                          fail, target),
          r);
    }
    const double sens2 = 4.0 * config.clip * config.clip;
    auto total = [&](double sigma) {
      return *GaussianTradeoff(eps, config.T * alpha * sens2 / (sigma * sigma)) +
             fail;
    };
    double lo = 1e-8;
    double hi = 1.0;
    int guard = 0;
    while (total(hi) > target) {
      hi *= 2.0;
      if (++guard > 200) return ConvergenceError("sigma calibration diverged");
    }
    for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (total(mid) > target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    resolved.sigma = hi;
    resolved.eps_target.reset();
    resolved.account_eps = eps;
  }
  result.sigma = *resolved.sigma;
  result.eps = eps;
  result.state = state;
  for (int t = 0; t < config.T; ++t) {
    WDP_ASSIGN_OR_RETURN(
        NoisyProjStepResult step,
        NoisyProjStep(task, result.state, resolved, seed.Child(t)));
    result.state = std::move(step.state);
    result.per_step = step.report;
    result.mus.push_back(step.report.mu_bar);
    if (config.record_trajectory) {
      WDP_ASSIGN_OR_RETURN(
          const double delta_so_far,
          ComposeGaussianSteps(result.mus, eps, step.report.delta_M));
      result.trajectory.push_back(
          MakeRow(task, result.state.Effective(), t + 1, eps, delta_so_far));
    }
  }
  WDP_ASSIGN_OR_RETURN(result.delta, ComposeGaussianSteps(result.mus, eps,
                                                          result.per_step.delta_M));
  return result;
}

absl::StatusOr<RpGdResult> RpGd(const TrainTask& task, const MatrixXd& w0,
                                double eta, int T, int r, bool redraw_each_step,
                                const Seed& seed, double entry_var) {
  WDP_RETURN_IF_ERROR(task.Validate());
  if (w0.rows() != task.n_outputs() || w0.cols() != task.n_features()) {
    return DomainError("w0 does not match the task shape");
  }
  if (T < 0 || r < 1 || !(eta > 0.0)) return DomainError("bad RP-GD parameters");
  const int d = task.n_features();
  const double var = EntryVarOrDefault(entry_var, r);
  RpGdResult result;
  result.w = w0;
  WDP_ASSIGN_OR_RETURN(MatrixXd z, SampleGaussianMatrix(d, r, var, seed.Child(0)));
  for (int t = 0; t < T; ++t) {
    if (redraw_each_step && t > 0) {
      WDP_ASSIGN_OR_RETURN(z, SampleGaussianMatrix(d, r, var,
                                                   seed.Child(static_cast<uint64_t>(t))));
    }
    const MatrixXd g = Gradient(task, result.w);
    result.w -= eta * ((g * z) * z.transpose());
    result.trajectory.push_back(MakeRow(task, result.w, t + 1, kInf, 0.0));
  }
  return result;
}

absl::StatusOr<ClipComparison> ClipCompare(int64_t n, int64_t r,
                                           double delta_jl, double beta) {
  if (!(beta > 0.0)) return DomainError("beta must be > 0");
  WDP_ASSIGN_OR_RETURN(const JlZeta zeta, JlClipZeta(n, r, delta_jl));
  ClipComparison out;
  out.zeta = zeta.zeta;
  out.vacuous = zeta.vacuous;
  out.lower = beta / std::sqrt(1.0 + zeta.zeta);
  out.upper = zeta.zeta < 1.0 ? beta / std::sqrt(1.0 - zeta.zeta) : kInf;
  out.beta_prime_equiv = beta;
  return out;
}

absl::StatusOr<TrainResult> TrainModel(const TrainTask& task,
                                       const DpTrainConfig& config,
                                       const Seed& seed) {
  WDP_RETURN_IF_ERROR(task.Validate());
  WDP_RETURN_IF_ERROR(config.Validate());
  const MatrixXd w0 = MatrixXd::Zero(task.n_outputs(), task.n_features());
  TrainResult out;
  if (config.mechanism == TrainMechanism::kRpGd) {
    WDP_ASSIGN_OR_RETURN(RpGdResult rp,
                         RpGd(task, w0, config.eta, config.T, config.r,
                              config.resample_A, seed.Child(1), config.entry_var));
    out.w = std::move(rp.w);
    out.trajectory = std::move(rp.trajectory);
    out.accounting = "none (randomly projected GD carries no privacy guarantee)";
    return out;
  }
  LoraState state;
  state.W0 = w0;
  state.LoraB = MatrixXd::Zero(w0.rows(), config.r);
  WDP_ASSIGN_OR_RETURN(state.LoraA, SampleLoraA(config.r, task.n_features(),
                                                config.entry_var, seed.Child(0)));
  if (config.mechanism == TrainMechanism::kNoisyProj) {
    WDP_ASSIGN_OR_RETURN(NoisyProjResult np,
                         NoisyProjTrain(task, state, config, seed.Child(1)));
    out.w = np.state.Effective();
    out.trajectory = std::move(np.trajectory);
    out.budget = Budget{np.eps, np.delta};
    out.accounting = absl::StrFormat(
        "exact Gaussian trade-off on the summed per-step mu plus T*delta_M "
        "(sigma'=%.6g, alpha=%.6g)",
        np.sigma, np.per_step.alpha);
    return out;
  }
  WDP_ASSIGN_OR_RETURN(DpLoraFaResult dp,
                       DpLoraFa(task, state, config, seed.Child(1)));
  out.w = dp.state.Effective();
  out.trajectory = std::move(dp.trajectory);
  out.budget = dp.budget;
  out.accounting =
      config.mechanism == TrainMechanism::kDpLoraFa
          ? absl::StrFormat("basic composition of T per-step Gaussian "
                            "mechanisms, no subsampling amplification "
                            "(sigma=%.6g)",
                            dp.sigma)
          : "none (noise-free LoRA-FA carries no privacy guarantee)";
  return out;
}

}  // namespace wishart_dp
