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

#include "wdp_cli.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "Eigen/Dense"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/strings/str_format.h"
#include "absl/strings/str_join.h"
#include "selftest.h"
#include "wishart_dp/accountants.h"
#include "wishart_dp/attacks.h"
#include "wishart_dp/mechanisms.h"
#include "wishart_dp/profiler.h"
#include "wishart_dp/randmat.h"
#include "wishart_dp/report_io.h"
#include "wishart_dp/specialfn.h"
#include "wishart_dp/status.h"
#include "wishart_dp/trainer.h"

namespace wishart_dp::cli {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Everything a subcommand needs besides its own flags.
struct RunContext {
  std::ostream& err;
  RunManifest manifest;
  int threads = 0;
  Seed seed;
};

using Runner = std::function<absl::StatusOr<Json>(RunContext&)>;

struct Subcommand {
  CLI::App* app = nullptr;
  Runner run;
  bool randomized = false;
  std::string* out_path = nullptr;
  std::string* manifest_path = nullptr;
};

// Flags that every subcommand understands.
struct CommonFlags {
  uint64_t seed = 0;
  int threads = 0;
  std::string out;
  std::string manifest;
};

int ExitCodeFor(const absl::Status& status) {
  switch (KindOf(status)) {
    case ErrorKind::kConvergence:
      return kExitConvergence;
    case ErrorKind::kConfig:
      return kExitUsage;
    default:
      return kExitDomain;
  }
}

size_t EditDistance(const std::string& a, const std::string& b) {
  std::vector<size_t> row(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    size_t diag = row[0];
    row[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      const size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1])});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string Suggest(const std::string& word, const std::vector<std::string>& candidates) {
  std::string best;
  size_t best_d = std::max<size_t>(3, word.size() / 3) + 1;
  for (const std::string& c : candidates) {
    const size_t d = EditDistance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<std::string> LongNames(const CLI::App* app) {
  std::vector<std::string> names;
  for (const CLI::Option* opt : app->get_options()) {
    for (const std::string& n : opt->get_lnames()) names.push_back("--" + n);
  }
  return names;
}

// Records every flag of the chosen subcommand, explicit or defaulted.
void CaptureParams(const CLI::App* app, RunManifest& manifest) {
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    // Thread count never changes results, so it stays out of the record.
    if (name == "help" || name == "manifest" || name == "threads") continue;
    std::string value;
    if (opt->count() > 0) {
      value = absl::StrJoin(opt->results(), ",");
    } else {
      value = opt->get_default_str();
    }
    if (value.empty()) continue;
    manifest.params[name] = value;
  }
}

absl::Status WriteTextFile(const std::string& path,
                           const std::function<void(std::ostream&)>& body) {
  std::ofstream file(path);
  if (!file) return DomainError(absl::StrFormat("cannot open '%s' for writing", path));
  body(file);
  file.flush();
  if (!file) return DomainError(absl::StrFormat("error writing '%s'", path));
  return absl::OkStatus();
}

absl::Status WriteOutput(RunContext& ctx, const std::string& path,
                         const std::function<void(std::ostream&)>& body) {
  if (path.empty()) return absl::OkStatus();
  WDP_RETURN_IF_ERROR(WriteTextFile(path, body));
  ctx.manifest.outputs.push_back(path);
  return absl::OkStatus();
}

Json WithManifest(Json report, const RunManifest& manifest) {
  report["manifest"] = ToJson(manifest);
  return report;
}

// --- Flag helpers --------------------------------------------------------

CLI::Option* AddSeed(CLI::App* app, CommonFlags& f) {
  return app
      ->add_option("--seed", f.seed,
                   "master seed (unsigned integer); required, all randomness derives "
                   "from it")
      ->required();
}

CLI::Option* AddThreads(CLI::App* app, CommonFlags& f) {
  return app
      ->add_option("--threads", f.threads,
                   "worker threads for Monte Carlo chunks; 0 = $WISHART_DP_THREADS or "
                   "hardware concurrency. Results do not depend on it")
      ->capture_default_str();
}

CLI::Option* AddOut(CLI::App* app, CommonFlags& f, const std::string& what) {
  return app->add_option("--out", f.out, "CSV output path for " + what);
}

CLI::Option* AddManifest(CLI::App* app, CommonFlags& f) {
  return app->add_option(
      "--manifest", f.manifest,
      "run manifest path (default: <out>.manifest.json when --out is given)");
}

// --- Training flags shared by `train` and `mia` -------------------------

struct TrainFlags {
  std::string config_path;
  std::string mechanism;
  int T = 1;
  double eta = 0.1;
  int64_t batch = 0;
  bool poisson = true;
  double clip = kInf;
  double sigma = -1.0;
  double eps_target = -1.0;
  double delta_target = -1.0;
  int r = 8;
  double entry_var = 0.0;
  bool resample_a = false;
  double alpha = 0.0;
  double account_eps = 1.0;
  std::string constant = "algorithm";
  std::vector<CLI::Option*> options;
};

void AddTrainFlags(CLI::App* app, TrainFlags& t, const DpTrainConfig& defaults) {
  t.mechanism = std::string(TrainMechanismName(defaults.mechanism));
  t.T = defaults.T;
  t.eta = defaults.eta;
  t.batch = defaults.batch;
  t.poisson = defaults.poisson;
  t.clip = defaults.clip;
  t.sigma = defaults.sigma.value_or(-1.0);
  t.r = defaults.r;
  t.resample_a = defaults.resample_A;
  auto add = [&](CLI::Option* o) { t.options.push_back(o->capture_default_str()); };
  app->add_option("--config", t.config_path,
                  "flat key = value training config file; excludes the inline "
                  "training flags");
  add(app->add_option("--mechanism", t.mechanism,
                      "DP_LORA_FA | NOISY_PROJ | RP_GD | NOISE_FREE_LORA"));
  add(app->add_option("--T", t.T, "training steps"));
  add(app->add_option("--eta", t.eta, "step size"));
  add(app->add_option("--batch", t.batch, "minibatch size (examples); 0 = full batch"));
  add(app->add_option("--poisson", t.poisson,
                      "Poisson subsampling at rate batch/N (true) or fixed-size draws"));
  add(app->add_option("--clip", t.clip,
                      "clipping norm (Frobenius): beta for DP_LORA_FA, beta' for "
                      "NOISY_PROJ; inf disables"));
  add(app->add_option("--sigma", t.sigma,
                      "noise multiplier (gradient units); negative = unset, derive from "
                      "--eps-target"));
  add(app->add_option("--eps-target", t.eps_target,
                      "privacy budget epsilon used to calibrate sigma; negative = unset"));
  add(app->add_option("--delta-target", t.delta_target,
                      "privacy budget delta (probability); negative = unset"));
  add(app->add_option("--r", t.r, "projection / LoRA rank"));
  add(app->add_option("--entry-var", t.entry_var,
                      "variance of projection entries; 0 = 1/r"));
  add(app->add_option("--resample-a", t.resample_a,
                      "draw a fresh projection at every step"));
  add(app->add_option("--alpha", t.alpha,
                      "capture level for noisy-projection accounting; 0 = 1.5 r/d"));
  add(app->add_option("--account-eps", t.account_eps,
                      "epsilon at which the noisy-projection delta is reported"));
  add(app->add_option("--constant", t.constant,
                      "Gaussian calibration constant: algorithm | lemma"));
}

absl::StatusOr<DpTrainConfig> ResolveTrainConfig(const TrainFlags& t) {
  if (!t.config_path.empty()) {
    for (const CLI::Option* o : t.options) {
      if (o->count() > 0) {
        return ConfigError(absl::StrFormat("%s cannot be combined with --config",
                                           o->get_name()));
      }
    }
    return LoadTrainConfig(t.config_path);
  }
  DpTrainConfig c;
  WDP_ASSIGN_OR_RETURN(c.mechanism, ParseTrainMechanism(t.mechanism));
  c.T = t.T;
  c.eta = t.eta;
  c.batch = t.batch;
  c.poisson = t.poisson;
  c.clip = t.clip;
  if (t.sigma >= 0.0) c.sigma = t.sigma;
  if (t.eps_target >= 0.0) c.eps_target = t.eps_target;
  if (t.delta_target >= 0.0) c.delta_target = t.delta_target;
  c.r = t.r;
  c.entry_var = t.entry_var;
  c.resample_A = t.resample_a;
  c.alpha = t.alpha;
  c.account_eps = t.account_eps;
  if (t.constant == "lemma") {
    c.constant = GaussianConstant::kLemma;
  } else if (t.constant == "algorithm") {
    c.constant = GaussianConstant::kAlgorithm;
  } else {
    return ConfigError("--constant must be algorithm or lemma");
  }
  WDP_RETURN_IF_ERROR(c.Validate());
  return c;
}

Json BudgetJson(const std::optional<Budget>& b) {
  if (!b.has_value()) return nullptr;
  return Json{{"eps", JsonNumber(b->eps)}, {"delta", JsonNumber(b->delta)}};
}

std::vector<double> DefaultEpsGrid(double eps_max, double step) {
  std::vector<double> grid;
  const int n = static_cast<int>(std::floor(eps_max / step + 1e-9));
  for (int i = 0; i <= n; ++i) grid.push_back(i * step);
  return grid;
}

// --- Dispatcher ----------------------------------------------------------

class Cli {
 public:
  Cli() : app_("Wishart projection mechanism privacy toolkit", "wdp") {
    app_.require_subcommand(1, 1);
    app_.set_version_flag("--version", std::string(ToolVersion()));
    AddAccountVec();
    AddAccountSmallR();
    AddAccountLargeR();
    AddChooseAlpha();
    AddProfileMc();
    AddAmplify();
    AddSeparate();
    AddMia();
    AddTrain();
    AddSpectrum();
    AddSelftest();
  }

  int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

 private:
  Subcommand& Register(const std::string& name, const std::string& help,
                       bool randomized) {
    Subcommand& sub = subs_[name];
    sub.app = app_.add_subcommand(name, help);
    sub.randomized = randomized;
    return sub;
  }

  // Registers the flags every subcommand shares.
  void AddCommon(Subcommand& sub, const std::string& out_what) {
    if (sub.randomized) {
      AddSeed(sub.app, common_);
      AddThreads(sub.app, common_);
    }
    if (!out_what.empty()) {
      AddOut(sub.app, common_, out_what);
      sub.out_path = &common_.out;
    }
    AddManifest(sub.app, common_);
    sub.manifest_path = &common_.manifest;
  }

  void AddAccountVec();
  void AddAccountSmallR();
  void AddAccountLargeR();
  void AddChooseAlpha();
  void AddProfileMc();
  void AddAmplify();
  void AddSeparate();
  void AddMia();
  void AddTrain();
  void AddSpectrum();
  void AddSelftest();

  int Replay(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

  CLI::App app_;
  std::map<std::string, Subcommand> subs_;
  CommonFlags common_;
  int selftest_exit_ = kExitOk;

  // Flag storage; members so the lambdas can capture `this`.
  struct {
    double rho = 0.0;
    int d = 0;
    int r = 0;
    double delta_prime = 1e-3;
    int64_t support_samples = 1'000'000;
  } vec_;
  struct {
    double eps = 1.0, sens = 1.0, sigma = 1.0, alpha = 0.0;
    int64_t s = 1;
    int d = 0, r = 0;
  } small_;
  LargeRInputs large_;
  int64_t large_support_samples_ = 1'000'000;
  struct {
    double eps = 1.0, mu = 1.0, eta = 0.5;
    int64_t s = 1;
    int d = 0, r = 0;
    std::string tail_rule = "exact";
  } choose_;
  struct {
    double rho = 0.0;
    int d = 0;
    std::vector<int> r;
    double delta = 0.01;
    int64_t n = 1'000'000;
    std::vector<double> eps_grid;
    double eps_max = 3.0;
    double eps_step = 0.05;
  } profile_;
  struct {
    double rho = 0.2, gamma = 1.0, delta = 0.01;
    int d = 4000;
    int64_t trials = 10000;
  } amplify_;
  struct {
    int d = 8, n = 3, r = 2;
    int64_t trials = 10000;
    double entry_var = 0.0;
  } separate_;
  struct {
    int d = 20, classes = 10;
    int64_t n_data = 200;
    double logit_scale = 2.0, l2 = 1e-3;
    int n_in = 200, n_out = 200;
    TrainFlags train;
  } mia_;
  struct {
    std::string task = "ridge";
    int d = 32, outputs = 1, classes = 10;
    int64_t n_data = 1000;
    double noise = 0.1, l2 = 0.0, logit_scale = 2.0;
    TrainFlags train;
  } train_;
  struct {
    int d = 2000, r = 50, draws = 100;
    double t = 4.0, entry_var = 0.0;
    std::string dump_matrix;
  } spectrum_;
  std::string inject_fault_;
};

void Cli::AddAccountVec() {
  Subcommand& sub = Register(
      "account-vec", "(eps, delta) of the noise-free vector projection mechanism", true);
  CLI::App* a = sub.app;
  a->add_option("--rho", vec_.rho, "minimum alignment rho in (0, 1]")->required();
  a->add_option("--d", vec_.d, "ambient dimension")->required();
  a->add_option("--r", vec_.r, "Wishart rank")->required();
  a->add_option("--delta-prime", vec_.delta_prime,
                "per-quantile failure probability delta'")
      ->capture_default_str();
  a->add_option("--support-samples", vec_.support_samples,
                "Monte Carlo draws for the support term delta_support")
      ->capture_default_str();
  AddCommon(sub, "");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    VecAccountOptions o;
    o.support_samples = vec_.support_samples;
    o.support_seed = ctx.seed;
    o.monte_carlo.threads = ctx.threads;
    WDP_ASSIGN_OR_RETURN(const VecAccountReport rep,
                         AccountVec({vec_.rho, vec_.d, vec_.r}, vec_.delta_prime, o));
    ctx.err << absl::StrFormat(
        "account-vec: eps_rho = %.6g, delta_rho = %.6g (K = %.6g, b = %.6g)\n",
        rep.eps_rho, rep.delta_rho, rep.K, rep.b);
    return ToJson(rep);
  };
}

void Cli::AddAccountSmallR() {
  Subcommand& sub = Register("account-small-r",
                             "delta of the noisy matrix mechanism in the small-rank regime",
                             false);
  CLI::App* a = sub.app;
  a->add_option("--eps", small_.eps, "target epsilon")->required();
  a->add_option("--sens", small_.sens, "Frobenius sensitivity ||dV||_F")->required();
  a->add_option("--s", small_.s, "rank of the difference dV")->capture_default_str();
  a->add_option("--d", small_.d, "ambient dimension")->required();
  a->add_option("--r", small_.r, "Wishart rank")->required();
  a->add_option("--sigma", small_.sigma, "additive noise scale sigma_G")->required();
  a->add_option("--alpha", small_.alpha, "capture level alpha in (0, 1]")->required();
  AddCommon(sub, "");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    WDP_ASSIGN_OR_RETURN(const SmallRReport rep,
                         AccountSmallR(small_.eps, small_.sens, small_.s, small_.d,
                                       small_.r, small_.sigma, small_.alpha));
    ctx.err << absl::StrFormat(
        "account-small-r: delta_total = %.6g (delta_E = %.6g, delta_M = %.6g)\n",
        rep.delta_total, rep.delta_E, rep.delta_M);
    return ToJson(rep);
  };
}

void Cli::AddAccountLargeR() {
  Subcommand& sub = Register(
      "account-large-r", "(eps, delta) of the noisy matrix mechanism for large rank", true);
  CLI::App* a = sub.app;
  a->add_option("--d", large_.d, "ambient dimension")->required();
  a->add_option("--r", large_.r, "Wishart rank")->required();
  a->add_option("--s", large_.s, "sensitive subspace dimension")->required();
  a->add_option("--p", large_.p, "parallel block size, p <= min(s, r)")->required();
  a->add_option("--delta-v", large_.delta_v, "sensitivity Delta_v")->required();
  a->add_option("--sigma-g", large_.sigma_G, "additive noise scale sigma_G")->required();
  a->add_option("--sigma-m", large_.sigma_M, "Wishart entry standard deviation sigma_M")
      ->required();
  a->add_option("--beta", large_.beta, "failure probability of the Gamma_beta bound")
      ->required();
  a->add_option("--delta-par", large_.delta_par, "delta of the parallel Gaussian part")
      ->required();
  a->add_option("--rho-perp", large_.rho_perp, "alignment of the residual part")
      ->required();
  a->add_option("--delta-prime-perp", large_.delta_prime_perp,
                "delta' of the residual vector accountant")
      ->required();
  a->add_option("--support-samples", large_support_samples_,
                "Monte Carlo draws for the residual support term")
      ->capture_default_str();
  AddCommon(sub, "");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    VecAccountOptions o;
    o.support_samples = large_support_samples_;
    o.support_seed = ctx.seed;
    o.monte_carlo.threads = ctx.threads;
    WDP_ASSIGN_OR_RETURN(const LargeRReport rep, AccountLargeR(large_, o));
    ctx.err << absl::StrFormat(
        "account-large-r: eps_total = %.6g (par %.6g + perp %.6g), delta_total = %.6g\n",
        rep.eps_total, rep.eps_par, rep.eps_perp, rep.delta_total);
    return ToJson(rep);
  };
}

void Cli::AddChooseAlpha() {
  Subcommand& sub = Register(
      "choose-alpha", "pick the capture level alpha that beats the Gaussian baseline",
      false);
  CLI::App* a = sub.app;
  a->add_option("--eps", choose_.eps, "target epsilon")->required();
  a->add_option("--mu", choose_.mu, "Gaussian mu = sens^2 / sigma^2")->required();
  a->add_option("--s", choose_.s, "rank of the difference dV")->capture_default_str();
  a->add_option("--d", choose_.d, "ambient dimension")->required();
  a->add_option("--r", choose_.r, "Wishart rank, r <= d/2")->required();
  a->add_option("--eta", choose_.eta, "slack eta in (0, 1): alpha = (1 + eta) r / d")
      ->capture_default_str();
  a->add_option("--tail-rule", choose_.tail_rule,
                "projection-failure condition: exact (Beta tail) | exponential")
      ->capture_default_str();
  AddCommon(sub, "");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    ChooseAlphaOptions o;
    if (choose_.tail_rule == "exponential") {
      o.tail_rule = TailRule::kExponential;
    } else if (choose_.tail_rule != "exact") {
      return ConfigError("--tail-rule must be exact or exponential");
    }
    WDP_ASSIGN_OR_RETURN(const ChooseAlphaResult res,
                         ChooseAlpha(choose_.eps, choose_.mu, choose_.s, choose_.d,
                                     choose_.r, choose_.eta, o));
    ctx.err << absl::StrFormat(
        "choose-alpha: alpha = %.6g (alpha0 = %.6g), delta_total = %.6g < "
        "delta_gauss = %.6g\n",
        res.alpha, res.alpha0, res.report.delta_total, res.delta_gauss);
    return ToJson(res);
  };
}

void Cli::AddProfileMc() {
  Subcommand& sub = Register(
      "profile-mc", "Monte Carlo privacy profile delta(eps) of the vector mechanism", true);
  CLI::App* a = sub.app;
  a->add_option("--rho", profile_.rho, "alignment rho in (0, 1]")->required();
  a->add_option("--d", profile_.d, "ambient dimension")->required();
  a->add_option("--r", profile_.r, "Wishart ranks, comma separated")
      ->required()
      ->delimiter(',');
  a->add_option("--delta", profile_.delta, "delta at which eps_hat is read off")
      ->capture_default_str();
  a->add_option("--n", profile_.n, "privacy-loss samples per rank")->capture_default_str();
  a->add_option("--eps-grid", profile_.eps_grid,
                "epsilon grid, comma separated (default 0..eps-max by eps-step)")
      ->delimiter(',');
  a->add_option("--eps-max", profile_.eps_max, "largest default grid epsilon")
      ->capture_default_str();
  a->add_option("--eps-step", profile_.eps_step, "default grid spacing")
      ->capture_default_str();
  AddCommon(sub, "the (eps, delta_hat) sweep");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    const std::vector<double> grid =
        profile_.eps_grid.empty() ? DefaultEpsGrid(profile_.eps_max, profile_.eps_step)
                                  : profile_.eps_grid;
    MonteCarloOptions mc;
    mc.threads = ctx.threads;
    Json profiles = Json::array();
    std::vector<PrivacyProfile> all;
    for (int r : profile_.r) {
      // Every rank reuses the same seed: common random numbers across the sweep.
      WDP_ASSIGN_OR_RETURN(PrivacyProfile p,
                           McPrivacyProfile(profile_.rho, profile_.d, r, grid,
                                            profile_.n, ctx.seed, mc));
      Json j = ToJson(p);
      const std::optional<Estimate> eps = p.EpsilonAtDelta(profile_.delta);
      j["eps_at_delta"] =
          eps ? Json{{"value", JsonNumber(eps->value)},
                     {"stderr", JsonNumber(eps->std_error)}}
              : Json(nullptr);
      ctx.err << absl::StrFormat("profile-mc: r = %d, eps_hat(delta = %g) = %s\n", r,
                                 profile_.delta,
                                 eps ? absl::StrFormat("%.6g +- %.2g", eps->value,
                                                       eps->std_error)
                                     : std::string("unresolved"));
      profiles.push_back(std::move(j));
      p.sorted_losses.clear();
      p.sorted_losses.shrink_to_fit();
      all.push_back(std::move(p));
    }
    WDP_RETURN_IF_ERROR(WriteOutput(ctx, common_.out, [&](std::ostream& os) {
      WriteProfileCsvHeader(os);
      for (const PrivacyProfile& p : all) WriteProfileCsvRows(os, p);
    }));
    return Json{{"kind", "profile_sweep"},
                {"target_delta", JsonNumber(profile_.delta)},
                {"profiles", std::move(profiles)}};
  };
}

void Cli::AddAmplify() {
  Subcommand& sub = Register(
      "amplify", "empirical check of alignment amplification with a shared direction",
      true);
  CLI::App* a = sub.app;
  a->add_option("--rho", amplify_.rho, "cosine of the input pair")->capture_default_str();
  a->add_option("--d", amplify_.d, "dimension")->capture_default_str();
  a->add_option("--gamma", amplify_.gamma, "amplification radius gamma")
      ->capture_default_str();
  a->add_option("--delta", amplify_.delta, "failure probability delta")
      ->capture_default_str();
  a->add_option("--trials", amplify_.trials, "number of shared-direction draws")
      ->capture_default_str();
  AddCommon(sub, "");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    const int d = amplify_.d;
    if (d < 2) return DomainError("amplify needs d >= 2");
    if (!(amplify_.rho > -1.0 && amplify_.rho <= 1.0)) {
      return DomainError("rho must lie in (-1, 1]");
    }
    if (amplify_.trials < 1) return DomainError("trials must be >= 1");
    WDP_ASSIGN_OR_RETURN(const double gain, AmplificationGain(amplify_.rho, amplify_.gamma,
                                                              d, amplify_.delta));
    const VectorXd v = VectorXd::Unit(d, 0);
    const VectorXd vp = amplify_.rho * VectorXd::Unit(d, 0) +
                        std::sqrt(1.0 - amplify_.rho * amplify_.rho) * VectorXd::Unit(d, 1);
    const AmplifyParams params{amplify_.gamma, amplify_.delta};
    std::vector<double> cosines(amplify_.trials);
    absl::Status failure;
    for (int64_t k = 0; k < amplify_.trials; ++k) {
      absl::StatusOr<std::pair<VectorXd, VectorXd>> pair =
          AmplifyPair(v, vp, params, ctx.seed.Child(static_cast<uint64_t>(k)));
      if (!pair.ok()) return pair.status();
      cosines[k] = pair->first.dot(pair->second) /
                   (pair->first.norm() * pair->second.norm());
    }
    const double target = amplify_.rho + gain;
    const int64_t hits =
        std::count_if(cosines.begin(), cosines.end(), [&](double c) { return c >= target; });
    const double frac = static_cast<double>(hits) / amplify_.trials;
    double mean = 0;
    for (double c : cosines) mean += c / amplify_.trials;
    ctx.err << absl::StrFormat(
        "amplify: cosine >= rho + gain = %.6g in %.4f of %d trials (need >= %.4f)\n",
        target, frac, amplify_.trials, 1.0 - amplify_.delta);
    return Json{{"kind", "amplify"},
                {"inputs", Json{{"rho", amplify_.rho},
                                {"d", d},
                                {"gamma", amplify_.gamma},
                                {"delta", amplify_.delta},
                                {"trials", amplify_.trials}}},
                {"threshold", JsonNumber(AmplificationThreshold(amplify_.rho, d,
                                                                amplify_.delta))},
                {"gain", JsonNumber(gain)},
                {"target_cosine", JsonNumber(target)},
                {"fraction_at_target", JsonNumber(frac)},
                {"mean_cosine", JsonNumber(mean)},
                {"min_cosine", JsonNumber(*std::min_element(cosines.begin(),
                                                            cosines.end()))}};
  };
}

void Cli::AddSeparate() {
  Subcommand& sub = Register(
      "separate", "count Wishart draws with M V = M V' for a fixed pair V != V'", true);
  CLI::App* a = sub.app;
  a->add_option("--d", separate_.d, "rows of V")->capture_default_str();
  a->add_option("--n", separate_.n, "columns of V")->capture_default_str();
  a->add_option("--r", separate_.r, "Wishart rank")->capture_default_str();
  a->add_option("--trials", separate_.trials, "Wishart draws")->capture_default_str();
  a->add_option("--entry-var", separate_.entry_var, "entry variance of Z; 0 = 1/r")
      ->capture_default_str();
  AddCommon(sub, "");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    WDP_ASSIGN_OR_RETURN(const MatrixXd v, SampleGaussianMatrix(separate_.d, separate_.n,
                                                                1.0, ctx.seed.Child(0)));
    WDP_ASSIGN_OR_RETURN(const MatrixXd vp, SampleGaussianMatrix(separate_.d, separate_.n,
                                                                 1.0, ctx.seed.Child(1)));
    WDP_ASSIGN_OR_RETURN(const SeparationResult res,
                         SeparationTrial(v, vp, separate_.r, separate_.entry_var,
                                         separate_.trials, ctx.seed.Child(2),
                                         ctx.threads));
    ctx.err << absl::StrFormat(
        "separate: M V = M V' in %d of %d draws (smallest relative residual %.3g)\n",
        res.n_equal, res.n_trials, res.min_relative_residual);
    return ToJson(res);
  };
}

void Cli::AddMia() {
  Subcommand& sub = Register(
      "mia", "shadow-model membership inference against a synthetic logistic task", true);
  CLI::App* a = sub.app;
  a->add_option("--d", mia_.d, "feature dimension")->capture_default_str();
  a->add_option("--classes", mia_.classes, "number of classes")->capture_default_str();
  a->add_option("--n-data", mia_.n_data, "training set size |D|")->capture_default_str();
  a->add_option("--logit-scale", mia_.logit_scale, "ground-truth logit scale")
      ->capture_default_str();
  a->add_option("--l2", mia_.l2, "L2 regularization weight")->capture_default_str();
  a->add_option("--n-in", mia_.n_in, "IN shadow models")->capture_default_str();
  a->add_option("--n-out", mia_.n_out, "OUT shadow models")->capture_default_str();
  DpTrainConfig defaults;
  defaults.mechanism = TrainMechanism::kNoisyProj;
  defaults.sigma = 0.0;
  defaults.clip = 1e9;
  defaults.r = 8;
  defaults.T = 200;
  defaults.eta = 0.5;
  defaults.resample_A = true;
  AddTrainFlags(a, mia_.train, defaults);
  AddCommon(sub, "(label, score) canary losses");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    WDP_ASSIGN_OR_RETURN(const DpTrainConfig config, ResolveTrainConfig(mia_.train));
    WDP_ASSIGN_OR_RETURN(const TrainTask task,
                         MakeLogisticTask(mia_.n_data, mia_.d, mia_.classes,
                                          mia_.logit_scale, mia_.l2, ctx.seed.Child(0)));
    WDP_ASSIGN_OR_RETURN(const Canary canary,
                         CraftCanary(task, config, ctx.seed.Child(1)));
    WDP_ASSIGN_OR_RETURN(const MiaResult res,
                         RunMia(task, config, canary, mia_.n_in, mia_.n_out,
                                ctx.seed.Child(2), ctx.threads));
    WDP_RETURN_IF_ERROR(
        WriteOutput(ctx, common_.out, [&](std::ostream& os) { WriteMiaCsv(os, res); }));
    ctx.err << absl::StrFormat(
        "mia: AUC = %.4f +- %.4f, best balanced accuracy = %.4f (%d IN / %d OUT)\n",
        res.auc, res.auc_std_error, res.balanced_acc, mia_.n_in, mia_.n_out);
    Json j = ToJson(res);
    j["canary"] = Json{{"y_q", canary.y_q},
                       {"reference_seed", SeedJson(canary.reference_seed)}};
    j["config"] = FormatTrainConfig(config);
    return j;
  };
}

void Cli::AddTrain() {
  Subcommand& sub =
      Register("train", "train on a synthetic task with a private or projected optimizer",
               true);
  CLI::App* a = sub.app;
  a->add_option("--task", train_.task, "ridge | logistic")->capture_default_str();
  a->add_option("--d", train_.d, "feature dimension")->capture_default_str();
  a->add_option("--n-data", train_.n_data, "training set size")->capture_default_str();
  a->add_option("--outputs", train_.outputs, "ridge: output dimension")
      ->capture_default_str();
  a->add_option("--classes", train_.classes, "logistic: number of classes")
      ->capture_default_str();
  a->add_option("--noise", train_.noise, "ridge: label noise standard deviation")
      ->capture_default_str();
  a->add_option("--l2", train_.l2, "L2 regularization weight")->capture_default_str();
  a->add_option("--logit-scale", train_.logit_scale, "logistic: ground-truth logit scale")
      ->capture_default_str();
  AddTrainFlags(a, train_.train, DpTrainConfig{});
  AddCommon(sub, "the training trajectory (step, loss, grad_norm, eps_spent, delta_spent)");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    WDP_ASSIGN_OR_RETURN(const DpTrainConfig config, ResolveTrainConfig(train_.train));
    TrainTask task;
    if (train_.task == "ridge") {
      WDP_ASSIGN_OR_RETURN(task, MakeRidgeTask(train_.n_data, train_.d, train_.outputs,
                                               train_.noise, train_.l2, ctx.seed.Child(0)));
    } else if (train_.task == "logistic") {
      WDP_ASSIGN_OR_RETURN(task,
                           MakeLogisticTask(train_.n_data, train_.d, train_.classes,
                                            train_.logit_scale, train_.l2,
                                            ctx.seed.Child(0)));
    } else {
      return ConfigError("--task must be ridge or logistic");
    }
    const double initial = Loss(task, MatrixXd::Zero(task.n_outputs(), task.n_features()));
    WDP_ASSIGN_OR_RETURN(const TrainResult res, TrainModel(task, config, ctx.seed.Child(1)));
    WDP_RETURN_IF_ERROR(WriteOutput(
        ctx, common_.out, [&](std::ostream& os) { WriteTrajectoryCsv(os, res.trajectory); }));
    const double final_loss = Loss(task, res.w);
    ctx.err << absl::StrFormat("train: loss %.6g -> %.6g over %d steps; budget %s\n",
                               initial, final_loss, config.T,
                               res.budget ? absl::StrFormat("(%.6g, %.3g)", res.budget->eps,
                                                            res.budget->delta)
                                          : std::string("none"));
    Json j{{"kind", "train"},
           {"mechanism", std::string(TrainMechanismName(config.mechanism))},
           {"initial_loss", JsonNumber(initial)},
           {"final_loss", JsonNumber(final_loss)},
           {"budget", BudgetJson(res.budget)},
           {"accounting", res.accounting},
           {"steps", config.T},
           {"config", FormatTrainConfig(config)}};
    if (task.kind == TaskKind::kRidge) {
      absl::StatusOr<MatrixXd> opt = RidgeOptimum(task);
      if (opt.ok()) j["optimal_loss"] = JsonNumber(Loss(task, *opt));
    }
    return j;
  };
}

void Cli::AddSpectrum() {
  Subcommand& sub = Register(
      "spectrum", "check nonzero Wishart eigenvalues against the high-probability interval",
      true);
  CLI::App* a = sub.app;
  a->add_option("--d", spectrum_.d, "dimension")->capture_default_str();
  a->add_option("--r", spectrum_.r, "rank")->capture_default_str();
  a->add_option("--t", spectrum_.t, "deviation parameter t (probability 1 - 2 exp(-t^2/2))")
      ->capture_default_str();
  a->add_option("--draws", spectrum_.draws, "independent draws")->capture_default_str();
  a->add_option("--entry-var", spectrum_.entry_var, "entry variance of Z; 0 = 1/r")
      ->capture_default_str();
  a->add_option("--dump-matrix", spectrum_.dump_matrix,
                "debug: write the first factor Z (d x r, '# rows cols' CSV) here");
  AddCommon(sub, "per-draw extreme eigenvalues");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    if (spectrum_.draws < 1) return DomainError("draws must be >= 1");
    if (spectrum_.r < 1) return DomainError("r must be >= 1");
    const double var = spectrum_.entry_var > 0.0 ? spectrum_.entry_var : 1.0 / spectrum_.r;
    const SpectrumInterval iv =
        WishartSpectrumInterval(spectrum_.d, spectrum_.r, var, spectrum_.t);
    std::vector<double> lo(spectrum_.draws), hi(spectrum_.draws);
    int within = 0;
    for (int k = 0; k < spectrum_.draws; ++k) {
      WDP_ASSIGN_OR_RETURN(const WishartDraw draw,
                           DrawWishart(spectrum_.d, spectrum_.r, var, ctx.seed.Child(k)));
      const VectorXd eig = draw.NonzeroEigenvalues();
      lo[k] = eig.minCoeff();
      hi[k] = eig.maxCoeff();
      within += lo[k] >= iv.lower && hi[k] <= iv.upper;
      if (k == 0) {
        WDP_RETURN_IF_ERROR(WriteOutput(ctx, spectrum_.dump_matrix, [&](std::ostream& os) {
          WriteMatrixCsv(os, draw.Z());
        }));
      }
    }
    WDP_RETURN_IF_ERROR(WriteOutput(ctx, common_.out, [&](std::ostream& os) {
      os << "draw,min_eig,max_eig,within\n";
      for (int k = 0; k < spectrum_.draws; ++k) {
        os << k << ',' << absl::StrFormat("%.17g,%.17g", lo[k], hi[k]) << ','
           << (lo[k] >= iv.lower && hi[k] <= iv.upper ? 1 : 0) << '\n';
      }
    }));
    ctx.err << absl::StrFormat(
        "spectrum: %d of %d draws inside [%.6g, %.6g]\n", within, spectrum_.draws,
        iv.lower, iv.upper);
    return Json{{"kind", "spectrum"},
                {"inputs", Json{{"d", spectrum_.d},
                                {"r", spectrum_.r},
                                {"t", spectrum_.t},
                                {"entry_var", var},
                                {"draws", spectrum_.draws}}},
                {"lower", JsonNumber(iv.lower)},
                {"upper", JsonNumber(iv.upper)},
                {"within", within},
                {"min_eigenvalue", JsonNumber(*std::min_element(lo.begin(), lo.end()))},
                {"max_eigenvalue", JsonNumber(*std::max_element(hi.begin(), hi.end()))}};
  };
}

void Cli::AddSelftest() {
  Subcommand& sub = Register(
      "selftest", "evaluate the special-function table and fast invariants", false);
  // Hidden: lets a harness corrupt the quantile tolerance.
  sub.app->add_option("--inject-fault", inject_fault_, "")->group("");
  AddCommon(sub, "");
  sub.run = [this](RunContext& ctx) -> absl::StatusOr<Json> {
    QuantileOptions q;
    if (inject_fault_ == "quantile-tolerance") {
      q.rel_tol = -1.0;
    } else if (!inject_fault_.empty()) {
      return ConfigError("unknown fault '" + inject_fault_ + "'");
    }
    const std::vector<SelfCheck> checks = RunSelfChecks(q);
    Json rows = Json::array();
    int failed = 0;
    for (const SelfCheck& c : checks) {
      const bool ok = c.status.ok() && c.pass;
      failed += !ok;
      ctx.err << absl::StrFormat("%-4s %-46s %.17g  (expected %.17g, tol %g)%s\n",
                                 ok ? "PASS" : "FAIL", c.name, c.value, c.expected,
                                 c.tolerance,
                                 c.status.ok() ? std::string()
                                               : "  " + std::string(c.status.message()));
      Json row{{"name", c.name},
               {"value", JsonNumber(c.value)},
               {"expected", JsonNumber(c.expected)},
               {"tolerance", JsonNumber(c.tolerance)},
               {"pass", ok}};
      if (!c.status.ok()) row["error"] = std::string(c.status.message());
      rows.push_back(std::move(row));
    }
    ctx.err << absl::StrFormat("selftest: %d of %d checks passed\n",
                               static_cast<int>(checks.size()) - failed,
                               static_cast<int>(checks.size()));
    selftest_exit_ = failed > 0 ? kExitConvergence : kExitOk;
    return Json{{"kind", "selftest"},
                {"checks", std::move(rows)},
                {"failed", failed},
                {"passed", failed == 0}};
  };
}

int Cli::Replay(const std::vector<std::string>& args, std::ostream& out,
                std::ostream& err) {
  CLI::App replay("re-run the invocation recorded in a manifest", "wdp replay");
  std::string path, out_override;
  replay.add_option("--manifest", path, "manifest written by an earlier run")->required();
  replay.add_option("--out", out_override, "write the CSV here instead");
  try {
    std::vector<std::string> rev(args.rbegin(), args.rend() - 2);
    replay.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = replay.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }
  std::ifstream in(path);
  if (!in) {
    err << "wdp replay: cannot read manifest '" << path << "'\n";
    return kExitDomain;
  }
  Json m;
  try {
    m = Json::parse(in);
  } catch (const Json::exception& e) {
    err << "wdp replay: manifest is not valid JSON: " << e.what() << "\n";
    return kExitUsage;
  }
  std::vector<std::string> argv = {"wdp", m.value("subcommand", "")};
  for (const auto& [key, value] : m["params"].items()) {
    if (key == "out" && !out_override.empty()) continue;
    argv.push_back("--" + key);
    argv.push_back(value.get<std::string>());
  }
  if (!out_override.empty()) {
    argv.push_back("--out");
    argv.push_back(out_override);
  }
  Cli fresh;
  return fresh.Run(argv, out, err);
}

int Cli::Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.size() >= 2 && args[1] == "replay") return Replay(args, out, err);
  try {
    // CLI11 consumes the vector form back to front.
    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    app_.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app_.exit(e, out, err);
    if (code == 0) return kExitOk;  // --help, --version
    // Point at the closest valid spelling.
    const std::string sub_name = args.size() >= 2 ? args[1] : "";
    std::vector<std::string> names;
    for (const auto& [name, sub] : subs_) names.push_back(name);
    names.push_back("replay");
    if (!subs_.contains(sub_name) && !sub_name.empty() && sub_name[0] != '-') {
      const std::string s = Suggest(sub_name, names);
      if (!s.empty()) err << "did you mean '" << s << "'?\n";
    } else if (subs_.contains(sub_name)) {
      const std::vector<std::string> flags = LongNames(subs_[sub_name].app);
      for (size_t i = 2; i < args.size(); ++i) {
        if (args[i].rfind("--", 0) != 0) continue;
        const std::string flag = args[i].substr(0, args[i].find('='));
        if (std::find(flags.begin(), flags.end(), flag) != flags.end()) continue;
        const std::string s = Suggest(flag, flags);
        if (!s.empty()) err << "unknown flag " << flag << "; did you mean " << s << "?\n";
      }
    }
    return kExitUsage;
  }

  std::string name;
  Subcommand* chosen = nullptr;
  for (auto& [n, sub] : subs_) {
    if (sub.app->parsed()) {
      name = n;
      chosen = &sub;
    }
  }
  if (chosen == nullptr) return kExitUsage;

  RunContext ctx{err, RunManifest{}, common_.threads, Seed{common_.seed, 0}};
  ctx.manifest.subcommand = name;
  ctx.manifest.has_seed = chosen->randomized;
  ctx.manifest.seed = ctx.seed;
  CaptureParams(chosen->app, ctx.manifest);

  absl::StatusOr<Json> report = chosen->run(ctx);
  if (!report.ok()) {
    err << "wdp " << name << ": " << ErrorKindName(KindOf(report.status()))
        << " error: " << report.status().message() << "\n";
    return ExitCodeFor(report.status());
  }
  std::string manifest_path = common_.manifest;
  if (manifest_path.empty() && !common_.out.empty()) {
    manifest_path = common_.out + ".manifest.json";
  }
  if (!manifest_path.empty()) {
    const absl::Status st = WriteManifest(manifest_path, ctx.manifest);
    if (!st.ok()) {
      err << "wdp " << name << ": " << st.message() << "\n";
      return kExitDomain;
    }
  }
  out << WithManifest(*std::move(report), ctx.manifest).dump(2) << "\n";
  return name == "selftest" ? selftest_exit_ : kExitOk;
}

}  // namespace

int Dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Cli cli;
  return cli.Run(args, out, err);
}

int Dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::vector<std::string> args(argv, argv + argc);
  return Dispatch(args, out, err);
}

}  // namespace wishart_dp::cli
