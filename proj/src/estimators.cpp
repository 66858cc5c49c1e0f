#include "vrsplit/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vrsplit/errors.hpp"

namespace vrsplit {

namespace {

constexpr double kMinProbability = 1e-6;

Index floor_index(double v) { return static_cast<Index>(std::floor(v + 1e-9)); }

Index clamp_batch(Index b, Index n) { return std::clamp<Index>(b, 1, n); }

double clamp_probability(double p) { return std::clamp(p, kMinProbability, 1.0); }

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::FullBatch: return "full_batch";
    case EstimatorKind::Lsvrg: return "lsvrg";
    case EstimatorKind::Saga: return "saga";
    case EstimatorKind::Lsarah: return "lsarah";
    case EstimatorKind::Hsgd: return "hsgd";
  }
  return "unknown";
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
  if (name == "full_batch" || name == "full" || name == "deterministic") return EstimatorKind::FullBatch;
  if (name == "lsvrg" || name == "svrg") return EstimatorKind::Lsvrg;
  if (name == "saga") return EstimatorKind::Saga;
  if (name == "lsarah" || name == "sarah") return EstimatorKind::Lsarah;
  if (name == "hsgd") return EstimatorKind::Hsgd;
  throw ConfigError("unknown estimator '" + name + "'");
}

EstimatorConfig full_batch_config() {
  EstimatorConfig c;
  c.kind = EstimatorKind::FullBatch;
  c.description = "full_batch";
  return c;
}

EstimatorConfig fixed_config(EstimatorKind kind, Index batch, double probability) {
  if (batch < 1) throw ConfigError("batch size must be at least 1");
  if (!(probability >= 0.0 && probability <= 1.0)) throw ConfigError("probability must lie in [0, 1]");
  EstimatorConfig c;
  c.kind = kind;
  c.batch = [batch](Index) { return batch; };
  c.probability = [probability](Index) { return probability; };
  c.description = std::string(to_string(kind)) + " b=" + std::to_string(batch) +
                  " p=" + format_double(probability);
  return c;
}

EstimatorConfig build_schedule(EstimatorKind kind, Index n, double omega,
                               const ScheduleConstants& constants, SchedulePreset preset) {
  if (n < 1) throw ConfigError("component count must be at least 1");
  if (!(constants.mu > 0.0 && constants.mu < 2.0 / 3.0)) throw ConfigError("mu must lie in (0, 2/3)");
  if (kind == EstimatorKind::FullBatch) return full_batch_config();

  const double nd = static_cast<double>(n);
  const double mu = constants.mu;
  const double r = constants.r > 0.0 ? constants.r : 2.0 + 1.0 / mu;
  const double theta = constants.theta > 0.0 ? constants.theta : 1.0 / nd;

  EstimatorConfig c;
  c.kind = kind;
  c.theta = theta;

  std::ostringstream desc;
  desc << to_string(kind);

  if (kind == EstimatorKind::Hsgd) {
    if (!(theta > 0.0 && theta <= 1.0)) throw ConfigError("theta must lie in (0, 1]");
    c.tau = [mu, r, theta](Index k) {
      if (k <= 0) return 1.0;
      const double t = mu * (static_cast<double>(k) + r);
      const double tp = mu * (static_cast<double>(k - 1) + r);
      const double ratio = (1.0 - theta) * tp * (tp - 1.0) / (t * (t - 1.0));
      return std::clamp(1.0 - std::sqrt(std::max(ratio, 0.0)), 0.0, 1.0);
    };
    desc << " theta=" << format_double(theta);
  }

  if (preset == SchedulePreset::Practical || preset == SchedulePreset::PracticalHalved) {
    const bool halved = preset == SchedulePreset::PracticalHalved;
    double p = 1.0;
    Index b = 1;
    switch (kind) {
      case EstimatorKind::Lsvrg:
        p = 1.0 / (2.0 * std::cbrt(nd));
        b = floor_index(std::pow(nd, 2.0 / 3.0) / 2.0);
        break;
      case EstimatorKind::Saga:
        b = std::min(n, floor_index(std::pow(nd, 2.0 / 3.0) / 2.0));
        break;
      case EstimatorKind::Lsarah:
        p = 1.0 / (2.0 * std::sqrt(nd));
        b = floor_index(std::sqrt(nd) / 2.0);
        break;
      case EstimatorKind::Hsgd:
        b = floor_index(std::sqrt(nd) / 2.0);
        break;
      case EstimatorKind::FullBatch:
        break;
    }
    if (halved) {
      p /= 2.0;
      b /= 2;
    }
    p = n == 1 ? 1.0 : clamp_probability(p);
    b = clamp_batch(b, n);
    c.batch = [b](Index) { return b; };
    c.probability = [p](Index) { return p; };
    desc << (halved ? " halved" : " practical") << " b=" << b;
    if (kind == EstimatorKind::Lsvrg || kind == EstimatorKind::Lsarah) desc << " p=" << format_double(p);
    c.description = desc.str();
    return c;
  }

  // Theory schedules.
  const double cp = constants.c_p;
  const double cb = constants.c_b;
  if (!(cp > 0.0) || !(cb > 0.0)) throw ConfigError("c_p and c_b must be positive");
  const double a = mu * (r - 1.0) - 1.0;  // mu (k + r - 1) - 1 at k = 0
  auto warn = [&](bool ok, const std::string& what) {
    if (!ok) c.warnings.push_back(what);
  };

  switch (kind) {
    case EstimatorKind::Lsvrg: {
      const double nw = std::pow(nd, omega);
      const Index b = clamp_batch(floor_index(cb * std::pow(nd, 2.0 * omega)), n);
      const double k0 = std::floor(4.0 * cp * nw - r + 1.0 + 1.0 / mu + 1e-9);
      c.batch = [b](Index) { return b; };
      c.probability = [=](Index k) {
        const double kd = static_cast<double>(k);
        const double p = kd <= k0 ? 2.0 / (cp * nw) + 4.0 * mu / (mu * (kd + r - 1.0) - 1.0)
                                  : 3.0 / (cp * nw);
        return clamp_probability(p);
      };
      warn(r > 5.0 + 1.0 / mu, "svrg schedule wants r > 5 + 1/mu");
      if (mu * (r - 5.0) - 1.0 > 0.0) {
        const double need = std::max((2.0 * a) / (mu * (r - 5.0) - 1.0), a / (4.0 * mu)) / cp;
        warn(nw >= need, "svrg schedule wants n^omega >= " + format_double(need));
      }
      desc << " theory b=" << b;
      break;
    }
    case EstimatorKind::Saga: {
      const double n13 = std::cbrt(nd);
      const double n23 = n13 * n13;
      const double k0 = std::floor(4.0 * n13 + 1.0 + 1.0 / mu - r + 1e-9);
      c.batch = [=](Index k) {
        const double kd = static_cast<double>(k);
        const double b = kd <= k0 ? 2.0 * cb * n23 + 4.0 * mu * nd / (mu * (kd + r - 1.0) - 1.0)
                                  : 3.0 * cb * n23;
        return clamp_batch(floor_index(b), n);
      };
      warn(r > 5.0 + 1.0 / mu, "saga schedule wants r > 5 + 1/mu");
      if (mu * (r - 5.0) - 1.0 > 0.0) {
        const double need = std::max(2.0 * cb * a / (mu * (r - 5.0) - 1.0), a / (4.0 * mu));
        warn(n13 >= need, "saga schedule wants n^(1/3) >= " + format_double(need));
      }
      desc << " theory";
      break;
    }
    case EstimatorKind::Lsarah:
    case EstimatorKind::Hsgd: {
      const double nw = std::pow(nd, omega);
      const Index b = clamp_batch(floor_index(cb * nw), n);
      c.batch = [b](Index) { return b; };
      if (kind == EstimatorKind::Lsarah) {
        const double k0 = std::floor(2.0 * cp * nw - r + 1.0 + 1.0 / mu + 1e-9);
        c.probability = [=](Index k) {
          const double kd = static_cast<double>(k);
          const double p = kd <= k0 ? 1.0 / (cp * nw) + 2.0 * mu / (mu * (kd + r - 1.0) - 1.0)
                                    : 2.0 / (cp * nw);
          return clamp_probability(p);
        };
        warn(r > 3.0 + 1.0 / mu, "sarah schedule wants r > 3 + 1/mu");
        if (mu * (r - 3.0) - 1.0 > 0.0) {
          const double need = std::max(a / (mu * (r - 3.0) - 1.0), a / (2.0 * mu)) / cp;
          warn(nw >= need, "sarah schedule wants n^omega >= " + format_double(need));
        }
      } else {
        warn(r >= 5.0 + 1.0 / mu, "hsgd schedule wants r >= 5 + 1/mu");
      }
      desc << " theory b=" << b;
      break;
    }
    case EstimatorKind::FullBatch:
      break;
  }
  c.description = desc.str();
  return c;
}

VrEstimator::VrEstimator(const GeProblem& problem, EstimatorConfig config)
    : problem_(&problem), config_(std::move(config)), n_(problem.n_components()) {
  const auto k = config_.kind;
  const bool needs_batch = k != EstimatorKind::FullBatch;
  const bool needs_p = k == EstimatorKind::Lsvrg || k == EstimatorKind::Lsarah;
  if (needs_batch && !config_.batch) throw ConfigError("estimator needs a batch schedule");
  if (needs_p && !config_.probability) throw ConfigError("estimator needs a probability schedule");
  if (k == EstimatorKind::Hsgd && !config_.tau) throw ConfigError("hsgd needs a tau schedule");
  if (config_.mega_batch < 0) throw ConfigError("mega_batch must be nonnegative");
}

Index VrEstimator::batch_size(Index k) const {
  return config_.batch ? clamp_batch(config_.batch(k), n_) : n_;
}

Index VrEstimator::hat_batch_size(Index k) const {
  return config_.hat_batch ? clamp_batch(config_.hat_batch(k), n_) : batch_size(k);
}

double VrEstimator::probability(Index k) const {
  return config_.probability ? config_.probability(k) : 1.0;
}

double VrEstimator::tau(Index k) const { return config_.tau ? config_.tau(k) : 0.0; }

std::vector<Index> VrEstimator::sample(Rng& rng, Index size) const {
  std::vector<Index> idx(static_cast<std::size_t>(size));
  if (size >= n_) {
    idx.resize(static_cast<std::size_t>(n_));
    for (Index i = 0; i < n_; ++i) idx[static_cast<std::size_t>(i)] = i;
    return idx;
  }
  for (auto& i : idx) i = uniform_index(rng, n_);
  return idx;
}

Draw VrEstimator::draw(Rng& rng) const {
  Draw d;
  d.k = k_ + 1;
  const Index k = d.k;
  const bool mega = config_.mega_batch > 0;
  auto mega_draw = [&]() {
    std::vector<Index> idx(static_cast<std::size_t>(config_.mega_batch));
    for (auto& i : idx) i = uniform_index(rng, n_);
    return idx;
  };
  switch (config_.kind) {
    case EstimatorKind::FullBatch:
      if (mega) d.mega = mega_draw();
      break;
    case EstimatorKind::Lsvrg:
    case EstimatorKind::Lsarah: {
      const double p = probability(k);
      if (p >= 1.0) {
        d.refresh = true;
      } else if (p > 0.0) {
        d.refresh = uniform01(rng) < p;
      }
      if (config_.kind == EstimatorKind::Lsvrg || !d.refresh) d.batch = sample(rng, batch_size(k));
      if (d.refresh && mega) d.mega = mega_draw();
      break;
    }
    case EstimatorKind::Saga:
      d.batch = sample(rng, batch_size(k));
      break;
    case EstimatorKind::Hsgd: {
      const double t = tau(k);
      if (t < 1.0) d.batch = sample(rng, batch_size(k));
      if (t > 0.0) d.hat_batch = sample(rng, hat_batch_size(k));
      break;
    }
  }
  return d;
}

Vec VrEstimator::full_pass(const Vec& x, const std::vector<Index>& mega) {
  if (mega.empty()) {
    oracle_calls_ += n_;
    return problem_->component_mean(x);
  }
  return batch_mean(x, mega);
}

Vec VrEstimator::batch_mean(const Vec& x, const std::vector<Index>& idx) {
  Vec acc = Vec::Zero(problem_->dim());
  Vec tmp(problem_->dim());
  for (Index i : idx) {
    problem_->component(i, x, tmp);
    acc += tmp;
  }
  oracle_calls_ += static_cast<long long>(idx.size());
  return acc / static_cast<double>(idx.size());
}

Vec VrEstimator::batch_mean_diff(const Vec& x, const Vec& y, const std::vector<Index>& idx) {
  Vec acc = Vec::Zero(problem_->dim());
  Vec fx(problem_->dim()), fy(problem_->dim());
  for (Index i : idx) {
    problem_->component(i, x, fx);
    problem_->component(i, y, fy);
    acc += fx - fy;
  }
  oracle_calls_ += 2 * static_cast<long long>(idx.size());
  return acc / static_cast<double>(idx.size());
}

Vec VrEstimator::initialize(const Vec& x0, Rng& rng) {
  if (x0.size() != problem_->dim()) throw DimensionError("estimator initialize: dimension mismatch");
  k_ = 0;
  oracle_calls_ = 0;
  if (config_.kind == EstimatorKind::Saga) {
    table_.resize(n_, problem_->dim());
    Vec tmp(problem_->dim());
    for (Index i = 0; i < n_; ++i) {
      problem_->component(i, x0, tmp);
      table_.row(i) = tmp.transpose();
    }
    oracle_calls_ += n_;
    table_mean_ = table_.colwise().mean().transpose();
    table_updates_ = 0;
    prev_estimate_ = table_mean_;
  } else {
    std::vector<Index> mega;
    if (config_.mega_batch > 0) {
      mega.resize(static_cast<std::size_t>(config_.mega_batch));
      for (auto& i : mega) i = uniform_index(rng, n_);
    }
    prev_estimate_ = full_pass(x0, mega);
  }
  if (config_.kind == EstimatorKind::Lsvrg) {
    snapshot_x_ = x0;
    snapshot_F_ = prev_estimate_;
  }
  prev_x_ = x0;
  initialized_ = true;
  return prev_estimate_;
}

Vec VrEstimator::estimate(const Vec& x, Rng& rng) {
  if (!initialized_) throw StateError("estimator used before initialization");
  return estimate_with(x, draw(rng));
}

void VrEstimator::saga_overwrite(const std::vector<Index>& idx, const std::vector<Vec>& values) {
  const double inv_n = 1.0 / static_cast<double>(n_);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    const Index i = idx[j];
    table_mean_ += inv_n * (values[j] - table_.row(i).transpose());
    table_.row(i) = values[j].transpose();
    ++table_updates_;
  }
  // Running updates drift; resynchronize once per n row writes.
  if (table_updates_ >= n_) {
    table_mean_ = table_.colwise().mean().transpose();
    table_updates_ = 0;
  }
}

Vec VrEstimator::estimate_with(const Vec& x, const Draw& d) {
  if (!initialized_) throw StateError("estimator used before initialization");
  if (x.size() != problem_->dim()) throw DimensionError("estimate: dimension mismatch");
  if (d.k != k_ + 1) throw StateError("draw does not belong to the next step");

  Vec out;
  switch (config_.kind) {
    case EstimatorKind::FullBatch:
      out = full_pass(x, d.mega);
      break;
    case EstimatorKind::Lsvrg:
      if (d.refresh) {
        snapshot_x_ = prev_x_;
        snapshot_F_ = full_pass(prev_x_, d.mega);
      }
      out = snapshot_F_ + batch_mean_diff(x, snapshot_x_, d.batch);
      break;
    case EstimatorKind::Saga: {
      std::vector<Vec> values(d.batch.size());
      Vec corr = Vec::Zero(problem_->dim());
      for (std::size_t j = 0; j < d.batch.size(); ++j) {
        values[j] = problem_->component(d.batch[j], x);
        corr += values[j] - table_.row(d.batch[j]).transpose();
      }
      oracle_calls_ += static_cast<long long>(d.batch.size());
      out = table_mean_ + corr / static_cast<double>(d.batch.size());
      saga_overwrite(d.batch, values);
      break;
    }
    case EstimatorKind::Lsarah:
      if (d.refresh) {
        out = full_pass(x, d.mega);
      } else {
        out = prev_estimate_ + batch_mean_diff(x, prev_x_, d.batch);
      }
      break;
    case EstimatorKind::Hsgd: {
      const double t = tau(d.k);
      if (t == 0.0) {
        out = prev_estimate_ + batch_mean_diff(x, prev_x_, d.batch);
      } else if (t == 1.0) {
        out = batch_mean(x, d.hat_batch);
      } else {
        const Vec bracket = prev_estimate_ + batch_mean_diff(x, prev_x_, d.batch);
        out = (1.0 - t) * bracket + t * batch_mean(x, d.hat_batch);
      }
      break;
    }
  }
  prev_x_ = x;
  prev_estimate_ = out;
  k_ = d.k;
  return out;
}

}  // namespace vrsplit
