#include "capcon/mc_engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "capcon/error.hpp"
#include "capcon/philox.hpp"

namespace capcon {

namespace {

class MertonPolicy final : public Policy {
 public:
  explicit MertonPolicy(const Model& m)
      : kappa_(m.consts.kappa), mf_(m.consts.merton_fraction) {}
  PolicyPoint at(double x) const override {
    return x > 0 ? PolicyPoint{kappa_ * x, mf_ * x} : PolicyPoint{};
  }
  std::string name() const override { return "merton"; }

 private:
  double kappa_, mf_;
};

class ExactPolicy final : public Policy {
 public:
  explicit ExactPolicy(const ValueFunction& vf) : vf_(vf) {}
  PolicyPoint at(double x) const override { return vf_.policy(x); }
  std::string name() const override { return "optimal"; }

 private:
  ValueFunction vf_;
};

class ScaledPolicy final : public Policy {
 public:
  ScaledPolicy(PolicyPtr base, const ModelParams& m, double cf, double pf)
      : base_(std::move(base)), k_(m.k), ell_(m.ell), cf_(cf), pf_(pf) {}
  PolicyPoint at(double x) const override {
    if (!(x > 0)) return {};
    const PolicyPoint b = base_->at(x);
    return {std::min(cf_ * b.c, k_ * x + ell_), pf_ * b.pi};
  }
  std::string name() const override {
    std::ostringstream s;
    s << base_->name() << "[c*" << cf_ << ",pi*" << pf_ << "]";
    return s.str();
  }

 private:
  PolicyPtr base_;
  double k_, ell_, cf_, pf_;
};

class ZeroConsumption final : public Policy {
 public:
  explicit ZeroConsumption(PolicyPtr base) : base_(std::move(base)) {}
  PolicyPoint at(double x) const override { return {0.0, base_->at(x).pi}; }
  std::string name() const override { return "zero-consumption"; }

 private:
  PolicyPtr base_;
};

}  // namespace

PolicyPtr make_merton_policy(const Model& model) {
  if (!(model.consts.kappa > 0)) {
    throw Error(ErrorCode::IllPosed, model.consts.diagnostic);
  }
  return std::make_shared<MertonPolicy>(model);
}

PolicyPtr make_optimal_policy(const ValueFunction& vf) {
  if (vf.solution()) return std::make_shared<TabulatedPolicy>(vf);
  return std::make_shared<ExactPolicy>(vf);
}

PolicyPtr make_scaled_policy(PolicyPtr base, const Model& model,
                             double c_factor, double pi_factor) {
  if (!(c_factor >= 0) || !(pi_factor >= 0)) {
    throw Error(ErrorCode::InvalidParameter, "policy scale factors must be >= 0");
  }
  return std::make_shared<ScaledPolicy>(std::move(base), model.params,
                                        c_factor, pi_factor);
}

PolicyPtr make_zero_consumption_policy(PolicyPtr base) {
  return std::make_shared<ZeroConsumption>(std::move(base));
}

// ---------------------------------------------------------------------------

PolicyPoint TabulatedPolicy::Grid::eval(double q) const {
  const double pos = (std::log(q) - log_x0) * inv_h;
  const std::size_t last = nodes.size() - 1;
  std::size_t i = pos <= 0 ? 0 : static_cast<std::size_t>(pos);
  if (i >= last) i = last - 1;
  const Node& a = nodes[i];
  const Node& b = nodes[i + 1];
  const double h = b.x - a.x;
  const double s = (q - a.x) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = (s3 - 2 * s2 + s) * h;
  const double h01 = -2 * s3 + 3 * s2, h11 = (s3 - s2) * h;
  return {h00 * a.c + h10 * a.dc + h01 * b.c + h11 * b.dc,
          h00 * a.pi + h10 * a.dpi + h01 * b.pi + h11 * b.dpi};
}

TabulatedPolicy::TabulatedPolicy(const ValueFunction& vf, int nodes_per_side)
    : params_(vf.model().params), x_star_(vf.x_star()) {
  const ValueSolution* sol = vf.solution();
  if (!sol) {
    throw Error(ErrorCode::RegimeMismatch,
                "tabulated policy needs a free-boundary solution");
  }
  const Model& model = vf.model();
  const ModelParams& m = params_;
  const UMap& um = sol->umap;
  const double mf = model.consts.merton_fraction;
  const double b = um.coefficient();
  const double lam = um.lambda();
  const int n = std::max(nodes_per_side, 16);

  auto layout = [n](Grid& g, double x_lo, double x_hi) {
    g.log_x0 = std::log(x_lo);
    g.inv_h = (n - 1) / (std::log(x_hi) - g.log_x0);
    g.nodes.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      g.nodes[i].x = i + 1 == n ? x_hi : std::exp(g.log_x0 + i / g.inv_h);
    }
  };

  layout(u_, x_star_ * 1e-10, x_star_);
  for (int i = 0; i < n; ++i) {
    Node& nd = u_.nodes[i];
    const double c = i + 1 == n ? um.c_star() : um.c_of_x(nd.x);
    const double xp = um.dx_dc(c);
    const double xpp = -b * lam * (lam - 1) * std::pow(c, lam - 2);
    nd.c = c;
    nd.dc = 1 / xp;
    nd.pi = mf * c * xp;
    nd.dpi = mf * (xp + c * xpp) / xp;
  }

  // Allocation on C: pi = (mu / sigma^2) y v_yy, differentiated along the
  // dual ODE (dv/dy = v_y, dv_y/dy = v_yy).
  const double h2 = model.consts.half_sharpe_sq;
  const double gain = m.mu / (m.sigma * m.sigma);
  const double x_hi = vf.x_limit();
  layout(c_, x_star_, x_hi);
  for (int i = 0; i < n; ++i) {
    Node& nd = c_.nodes[i];
    const double x = i + 1 == n ? x_hi * (1 - 1e-14) : nd.x;
    const ValuePoint pt = vf.evaluate(x);
    const double y = pt.vx, w = -x, vyy = -1 / pt.vxx;
    const double v = pt.v - y * x;
    const double d = m.ell - m.k * w;
    const double num = m.beta * (v - y * w) + y * d + m.r * y * w -
                       std::pow(d, m.p) / m.p;
    const double dnum = -m.beta * y * vyy + d - m.k * y * vyy + m.r * w +
                        m.r * y * vyy + m.k * std::pow(d, m.p - 1) * vyy;
    const double d_yvyy = dnum / (h2 * y) - num / (h2 * y * y);
    nd.c = m.k * nd.x + m.ell;
    nd.dc = m.k;
    nd.pi = gain * y * vyy;
    nd.dpi = -gain * d_yvyy / vyy;
  }
  for (std::size_t i = 0; i < c_.nodes.size(); ++i) {
    Node& nd = c_.nodes[i];
    if (!std::isfinite(nd.dpi)) {
      const std::size_t lo = i == 0 ? 0 : i - 1;
      const std::size_t hi = std::min(i + 1, c_.nodes.size() - 1);
      nd.dpi = (c_.nodes[hi].pi - c_.nodes[lo].pi) /
               (c_.nodes[hi].x - c_.nodes[lo].x);
    }
  }
  pi_slope_far_ = c_.nodes.back().pi / c_.nodes.back().x;
}

PolicyPoint TabulatedPolicy::at(double x) const {
  if (!(x > 0)) return {};
  if (x < x_star_) {
    const Node& first = u_.nodes.front();
    if (x <= first.x) return {x * first.c / first.x, x * first.pi / first.x};
    return u_.eval(x);
  }
  if (x >= c_.nodes.back().x) {
    return {params_.k * x + params_.ell, pi_slope_far_ * x};
  }
  PolicyPoint pp = c_.eval(x);
  pp.c = params_.k * x + params_.ell;
  return pp;
}

// ---------------------------------------------------------------------------

namespace {

constexpr long kBlock = 256;

struct Moments {
  double n = 0, mean = 0, m2 = 0;

  // Chan et al. pairwise update.
  void merge(const Moments& o) {
    if (o.n == 0) return;
    const double tot = n + o.n;
    const double delta = o.mean - mean;
    mean += delta * o.n / tot;
    m2 += o.m2 + delta * delta * n * o.n / tot;
    n = tot;
  }

  static Moments of(const double* v, long count) {
    Moments r;
    if (count == 0) return r;
    double s = 0;
    for (long i = 0; i < count; ++i) s += v[i];
    r.n = double(count);
    r.mean = s / r.n;
    for (long i = 0; i < count; ++i) r.m2 += (v[i] - r.mean) * (v[i] - r.mean);
    return r;
  }

  double std_error() const { return n > 1 ? std::sqrt(m2 / (n - 1) / n) : 0.0; }
};

struct BlockResult {
  std::vector<Moments> utility, diff;
  std::vector<double> truncation, absorbed;
  std::exception_ptr error;
};

}  // namespace

Comparison compare_policies(const Model& model, const SimConfig& cfg,
                            const std::vector<PolicyPtr>& policies) {
  const ModelParams& m = model.params;
  if (!(model.consts.kappa > 0)) {
    throw Error(ErrorCode::IllPosed, model.consts.diagnostic);
  }
  if (!(cfg.dt > 0) || !(cfg.horizon > 0) || cfg.n_paths < 1 ||
      !(cfg.x0 >= 0) || policies.empty()) {
    throw Error(ErrorCode::InvalidParameter,
                "simulation needs dt > 0, horizon > 0, n_paths >= 1, x0 >= 0 "
                "and at least one policy");
  }
  const std::size_t np = policies.size();
  const long n_steps = std::max<long>(1, std::lround(cfg.horizon / cfg.dt));
  const double dt = cfg.dt;
  const double sqdt = std::sqrt(dt);
  const double step_discount = std::exp(-m.beta * dt);
  const double end_discount = std::exp(-m.beta * double(n_steps) * dt);
  const long n_blocks = (cfg.n_paths + kBlock - 1) / kBlock;

  std::vector<BlockResult> blocks(static_cast<std::size_t>(n_blocks));
  std::vector<std::vector<double>> keep_u(np), keep_x(np);
  if (cfg.keep_paths) {
    for (std::size_t j = 0; j < np; ++j) {
      keep_u[j].assign(static_cast<std::size_t>(cfg.n_paths), 0.0);
      keep_x[j].assign(static_cast<std::size_t>(cfg.n_paths), 0.0);
    }
  }
  std::atomic<long> next{0};
  std::atomic<bool> stop{false};

  auto run_block = [&](long b) {
    BlockResult& res = blocks[static_cast<std::size_t>(b)];
    const long first = b * kBlock;
    const long count = std::min(kBlock, cfg.n_paths - first);
    std::vector<double> util(np * count), xt(np * count), dbuf(count);
    std::vector<double> x(np), u(np);
    std::vector<char> alive(np);
    res.truncation.assign(np, 0.0);
    res.absorbed.assign(np, 0.0);
    for (long k = 0; k < count; ++k) {
      const long path = first + k;
      PhiloxStream rng(cfg.seed, static_cast<std::uint64_t>(path));
      std::normal_distribution<double> normal;
      std::fill(x.begin(), x.end(), cfg.x0);
      std::fill(u.begin(), u.end(), 0.0);
      std::size_t n_alive = 0;
      for (std::size_t j = 0; j < np; ++j) {
        alive[j] = cfg.x0 > 0;
        n_alive += alive[j];
      }
      double disc = 1.0;
      for (long s = 0; s < n_steps && n_alive > 0; ++s) {
        const double z = normal(rng);
        for (std::size_t j = 0; j < np; ++j) {
          if (!alive[j]) continue;
          const double xj = x[j];
          const PolicyPoint pp = policies[j]->at(xj);
          const double cap = m.k * xj + m.ell;
          if (!(pp.c >= 0) || pp.c > cap * (1 + 1e-12) ||
              !std::isfinite(pp.pi)) {
            std::ostringstream msg;
            msg.precision(12);
            msg << "policy " << policies[j]->name()
                << " violates 0 <= c <= k x + ell at t = " << double(s) * dt
                << ", x = " << xj << ", c = " << pp.c << " (cap " << cap
                << ", pi = " << pp.pi << ")";
            throw Error(ErrorCode::PolicyViolation, msg.str());
          }
          if (pp.c > 0) u[j] += disc * std::pow(pp.c, m.p) / m.p * dt;
          const double nx = xj + (m.r * xj + pp.pi * m.mu - pp.c) * dt +
                            pp.pi * m.sigma * sqdt * z;
          if (nx <= 0) {
            x[j] = 0.0;
            alive[j] = 0;
            --n_alive;
          } else {
            x[j] = nx;
          }
        }
        disc *= step_discount;
      }
      for (std::size_t j = 0; j < np; ++j) {
        util[j * count + k] = u[j];
        xt[j * count + k] = x[j];
        if (x[j] > 0) {
          res.truncation[j] += end_discount * merton_value(model, x[j]);
        } else {
          res.absorbed[j] += 1;
        }
        if (cfg.keep_paths) {
          keep_u[j][static_cast<std::size_t>(path)] = u[j];
          keep_x[j][static_cast<std::size_t>(path)] = x[j];
        }
      }
    }
    for (std::size_t j = 0; j < np; ++j) {
      res.utility.push_back(Moments::of(&util[j * count], count));
      for (long k = 0; k < count; ++k) dbuf[k] = util[k] - util[j * count + k];
      res.diff.push_back(Moments::of(dbuf.data(), count));
    }
  };

  auto worker = [&] {
    for (;;) {
      if (stop.load()) return;
      const long b = next.fetch_add(1);
      if (b >= n_blocks) return;
      try {
        run_block(b);
      } catch (...) {
        blocks[static_cast<std::size_t>(b)].error = std::current_exception();
        stop.store(true);
      }
    }
  };

  const int threads = std::clamp<long>(cfg.threads, 1, std::max<long>(1, n_blocks));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& br : blocks) {
    if (br.error) std::rethrow_exception(br.error);
  }

  Comparison out;
  for (std::size_t j = 0; j < np; ++j) {
    Moments util, diff;
    double trunc = 0, absorbed = 0;
    for (const auto& br : blocks) {
      util.merge(br.utility[j]);
      diff.merge(br.diff[j]);
      trunc += br.truncation[j];
      absorbed += br.absorbed[j];
    }
    SimEstimate est;
    est.policy = policies[j]->name();
    est.mean = util.mean;
    est.std_error = util.std_error();
    est.truncation_bound = trunc / double(cfg.n_paths);
    est.absorbed_fraction = absorbed / double(cfg.n_paths);
    est.n_paths = cfg.n_paths;
    est.n_steps = n_steps;
    if (cfg.keep_paths) {
      est.path_utility = std::move(keep_u[j]);
      est.terminal_wealth = std::move(keep_x[j]);
    }
    out.estimates.push_back(std::move(est));
    if (j > 0) {
      out.differences.push_back({policies[0]->name(), policies[j]->name(),
                                 diff.mean, diff.std_error()});
    }
  }
  return out;
}

SimEstimate simulate(const Model& model, const SimConfig& config,
                     const Policy& policy) {
  // Non-owning handle; the policy outlives the call.
  PolicyPtr handle(&policy, [](const Policy*) {});
  Comparison c = compare_policies(model, config, {handle});
  return std::move(c.estimates.front());
}

void write_path_quantiles(std::ostream& out, const SimEstimate& est) {
  if (est.path_utility.empty()) {
    throw Error(ErrorCode::InvalidParameter,
                "quantiles need per-path results (keep_paths)");
  }
  std::vector<double> u = est.path_utility;
  std::vector<double> x = est.terminal_wealth;
  std::sort(u.begin(), u.end());
  std::sort(x.begin(), x.end());
  auto pick = [](const std::vector<double>& v, double q) {
    const double pos = q * double(v.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - double(i);
    return i + 1 < v.size() ? v[i] * (1 - f) + v[i + 1] * f : v[i];
  };
  out.precision(17);
  out << "q,utility,terminal_wealth\n";
  for (double q : {0.0, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 1.0}) {
    out << q << ',' << pick(u, q) << ',' << pick(x, q) << '\n';
  }
}

}  // namespace capcon
