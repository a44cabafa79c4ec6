#include "mfg/sde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <thread>

#include "mfg/errors.hpp"
#include "mfg/rng.hpp"

namespace mfg {

int worker_count() {
  if (const char* env = std::getenv("MFG_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

SdeDrift sde_drift_from(std::function<Vec(double, VecRef)> b, int dim) {
  SdeDrift d;
  auto fn = std::move(b);
  d.eval = [fn, dim](double t, const double* x, double* out) {
    Eigen::Map<const Vec> xm(x, dim);
    const Vec v = fn(t, xm);
    for (int k = 0; k < dim; ++k) out[k] = v[k];
  };
  return d;
}

SdeSigma sde_sigma_from(const DiffusionField& a, int dim) {
  if (!a.has_sigma)
    fail(Errc::config_invalid, "SDE simulation needs a diffusion with a sigma factor");
  SdeSigma s;
  s.diagonal = a.diagonal;
  if (a.diagonal && a.sigma_diag_raw) {
    s.eval = a.sigma_diag_raw;
    return s;
  }
  auto fn = a.sigma;
  if (a.diagonal) {
    s.eval = [fn, dim](const double* x, double* out) {
      Eigen::Map<const Vec> xm(x, dim);
      const Mat m = fn(xm);
      for (int k = 0; k < dim; ++k) out[k] = m(k, k);
    };
  } else {
    s.eval = [fn, dim](const double* x, double* out) {
      Eigen::Map<const Vec> xm(x, dim);
      const Mat m = fn(xm);
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) out[r * dim + c] = m(r, c);
    };
  }
  return s;
}

namespace {

struct PathScratch {
  double x[kMaxDim];
  double trial[kMaxDim];
  double drift[kMaxDim];
  double sig[kMaxDim * kMaxDim];
  double noise[kMaxDim];
};

// One Euler-Maruyama substep of length tau from s.x; returns false when the
// proposal lands outside the domain (s.x is left untouched in that case).
bool try_step(const DomainSpec& domain, const SdeSigma& sigma, const SdeDrift& drift, double t,
              double tau, int dim, PathScratch& s, RandomStream& rng) {
  drift.eval(t, s.x, s.drift);
  sigma.eval(s.x, s.sig);
  for (int k = 0; k < dim; ++k) s.noise[k] = rng.next_normal();
  const double root = std::sqrt(2.0 * tau);
  for (int k = 0; k < dim; ++k) {
    double diff = 0.0;
    if (sigma.diagonal) {
      diff = s.sig[k] * s.noise[k];
    } else {
      for (int c = 0; c < dim; ++c) diff += s.sig[k * dim + c] * s.noise[c];
    }
    s.trial[k] = s.x[k] + s.drift[k] * tau + root * diff;
  }
  if (domain.distance_raw(s.trial) <= 0.0) return false;
  for (int k = 0; k < dim; ++k) s.x[k] = s.trial[k];
  return true;
}

// Advances by tau with recursive halving; depth counts halvings so far.
bool advance(const DomainSpec& domain, const SdeSigma& sigma, const SdeDrift& drift, double t,
             double tau, int dim, int depth, int limit, PathScratch& s, RandomStream& rng) {
  if (try_step(domain, sigma, drift, t, tau, dim, s, rng)) return true;
  if (depth >= limit) return false;
  if (!advance(domain, sigma, drift, t, 0.5 * tau, dim, depth + 1, limit, s, rng)) return false;
  return advance(domain, sigma, drift, t + 0.5 * tau, 0.5 * tau, dim, depth + 1, limit, s, rng);
}

double quantile(std::vector<double>& v, double q) {
  if (v.empty()) return 0.0;
  const std::size_t k = static_cast<std::size_t>(q * (v.size() - 1));
  std::nth_element(v.begin(), v.begin() + k, v.end());
  return v[k];
}

}  // namespace

ViabilityStats simulate(const DomainSpec& domain, const SdeSigma& sigma, const SdeDrift& drift,
                        const InitialState& x0, double T, const SDEConfig& config,
                        StoredPaths* paths_out) {
  const int dim = domain.dim;
  const long n_paths = config.n_paths;
  const long n_steps = std::max(1L, std::lround(T / config.dt));
  const double dt = T / static_cast<double>(n_steps);
  const int n_snap = std::max(2, config.snapshots);

  std::vector<long> snap_step(n_snap);
  for (int s = 0; s < n_snap; ++s)
    snap_step[s] = std::lround(static_cast<double>(s) * n_steps / (n_snap - 1));

  StoredPaths local;
  StoredPaths* paths = paths_out ? paths_out : &local;
  const bool store = paths_out != nullptr && config.store_paths;
  paths->dim = dim;
  paths->n_paths = n_paths;
  paths->times.resize(n_snap);
  for (int s = 0; s < n_snap; ++s) paths->times[s] = snap_step[s] * dt;
  if (store) paths->positions.assign(static_cast<std::size_t>(n_snap) * n_paths * dim, 0.0);
  paths->exited.assign(n_paths, 0);
  paths->exit_time.assign(n_paths, std::numeric_limits<double>::infinity());

  // cumulative distribution over mask cells for density-sampled starts
  std::vector<double> cdf;
  if (!x0.point) {
    if (!x0.grid || !x0.mask || x0.density.size() != x0.mask->size())
      fail(Errc::config_invalid, "density initial state needs grid, mask and values");
    cdf.resize(x0.density.size());
    double acc = 0.0;
    for (int i = 0; i < x0.density.size(); ++i) {
      acc += std::max(0.0, x0.density[i]);
      cdf[i] = acc;
    }
    if (acc <= 0.0) fail(Errc::config_invalid, "initial density has no mass");
    for (auto& c : cdf) c /= acc;
  } else if (distance_value(domain, *x0.point) <= 0.0) {
    fail(Errc::config_invalid, "initial point must lie strictly inside the domain");
  }

  std::vector<double> min_dist(n_paths, 0.0);
  std::vector<std::uint8_t>& exited = paths->exited;

  const int workers = std::min<long>(worker_count(), n_paths);
  std::vector<std::thread> pool;
  std::atomic<long> next_path{0};

  auto run_worker = [&]() {
    PathScratch scratch;
    for (;;) {
      const long p = next_path.fetch_add(1, std::memory_order_relaxed);
      if (p >= n_paths) break;
      RandomStream rng(config.seed, static_cast<std::uint64_t>(p));
      if (x0.point) {
        for (int k = 0; k < dim; ++k) scratch.x[k] = (*x0.point)[k];
      } else {
        // inverse-transform over cells, uniform within the cell
        const double u = rng.next_uniform();
        const auto it = std::lower_bound(cdf.begin(), cdf.end(), u);
        const int mi = static_cast<int>(it - cdf.begin());
        const Vec c = x0.grid->center(x0.mask->cells[std::min<int>(mi, x0.mask->size() - 1)]);
        for (int k = 0; k < dim; ++k)
          scratch.x[k] = c[k] + (rng.next_uniform() - 0.5) * x0.grid->h;
        if (domain.distance_raw(scratch.x) <= 0.0)
          for (int k = 0; k < dim; ++k) scratch.x[k] = c[k];
      }

      double mind = domain.distance_raw(scratch.x);
      int snap = 0;
      bool out = false;
      for (long step = 0; step <= n_steps; ++step) {
        while (snap < n_snap && snap_step[snap] == step) {
          if (store)
            for (int k = 0; k < dim; ++k)
              paths->positions[(static_cast<std::size_t>(snap) * n_paths + p) * dim + k] =
                  scratch.x[k];
          ++snap;
        }
        if (step == n_steps) break;
        if (!out) {
          const double t = step * dt;
          if (!advance(domain, sigma, drift, t, dt, dim, 0, config.substep_limit, scratch, rng)) {
            out = true;
            exited[p] = 1;
            paths->exit_time[p] = t + dt;
          } else {
            mind = std::min(mind, domain.distance_raw(scratch.x));
          }
        }
      }
      min_dist[p] = mind;
    }
  };

  if (workers <= 1) {
    run_worker();
  } else {
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(run_worker);
    for (auto& th : pool) th.join();
  }

  ViabilityStats stats;
  stats.n_paths = n_paths;
  stats.dt = dt;
  long n_exit = 0;
  for (long p = 0; p < n_paths; ++p) n_exit += exited[p];
  stats.exit_fraction = static_cast<double>(n_exit) / static_cast<double>(n_paths);
  stats.min_distance_q01 = quantile(min_dist, 0.01);
  stats.min_distance_q10 = quantile(min_dist, 0.10);
  stats.min_distance_q50 = quantile(min_dist, 0.50);
  return stats;
}

LyapunovReport lyapunov_check(const StoredPaths& paths, const DomainSpec& domain,
                              double C_expected) {
  if (paths.positions.empty()) fail(Errc::no_stored_paths, "simulation did not store paths");
  LyapunovReport report;
  report.times = paths.times;
  const int n_snap = static_cast<int>(paths.times.size());
  const long n = paths.n_paths;
  const int dim = paths.dim;
  report.mean_neg_log_d.resize(n_snap, 0.0);
  Vec x(dim);
  for (int s = 0; s < n_snap; ++s) {
    double acc = 0.0;
    for (long p = 0; p < n; ++p) {
      for (int k = 0; k < dim; ++k)
        x[k] = paths.positions[(static_cast<std::size_t>(s) * n + p) * dim + k];
      const double d = std::max(distance_value(domain, x), 1e-300);
      acc += -std::log(d);
    }
    report.mean_neg_log_d[s] = acc / static_cast<double>(n);
  }
  // least-squares slope of mean(-log d) against time
  const double t_mean =
      std::accumulate(report.times.begin(), report.times.end(), 0.0) / n_snap;
  const double y_mean =
      std::accumulate(report.mean_neg_log_d.begin(), report.mean_neg_log_d.end(), 0.0) / n_snap;
  double sxx = 0.0, sxy = 0.0;
  for (int s = 0; s < n_snap; ++s) {
    sxx += (report.times[s] - t_mean) * (report.times[s] - t_mean);
    sxy += (report.times[s] - t_mean) * (report.mean_neg_log_d[s] - y_mean);
  }
  report.fitted_slope = sxx > 0.0 ? sxy / sxx : 0.0;
  double ss_res = 0.0;
  for (int s = 0; s < n_snap; ++s) {
    const double fit = y_mean + report.fitted_slope * (report.times[s] - t_mean);
    ss_res += (report.mean_neg_log_d[s] - fit) * (report.mean_neg_log_d[s] - fit);
  }
  report.slope_stderr =
      (n_snap > 2 && sxx > 0.0) ? std::sqrt(ss_res / ((n_snap - 2) * sxx)) : 0.0;
  report.pass = report.fitted_slope <= C_expected + 2.0 * report.slope_stderr;
  report.diverged = report.fitted_slope > 5.0 * (std::abs(C_expected) + 1.0);
  return report;
}

SdeDrift feedback_drift(const GradientSampler& du, const HamiltonianModel& model, int dim) {
  SdeDrift d;
  const GradientSampler* sampler = &du;
  d.eval = [sampler, &model, dim](double t, const double* x, double* out) {
    double grad[kMaxDim];
    sampler->gradient_at(t, x, grad);
    Eigen::Map<const Vec> xm(x, dim);
    Eigen::Map<const Vec> gm(grad, dim);
    const Vec hp = model.Hp(t, xm, gm);
    for (int k = 0; k < dim; ++k) out[k] = -hp[k];
  };
  return d;
}

Eigen::VectorXd empirical_density(const StoredPaths& paths, const Grid& grid, const Mask& mask,
                                  double t, double* missing_mass) {
  if (paths.positions.empty()) fail(Errc::no_stored_paths, "simulation did not store paths");
  int snap = 0;
  for (int s = 1; s < static_cast<int>(paths.times.size()); ++s)
    if (std::abs(paths.times[s] - t) < std::abs(paths.times[snap] - t)) snap = s;
  Eigen::VectorXd density = Eigen::VectorXd::Zero(mask.size());
  const long n = paths.n_paths;
  const int dim = paths.dim;
  long missing = 0;
  int idx[kMaxDim];
  for (long p = 0; p < n; ++p) {
    if (paths.exited[p] && paths.exit_time[p] <= t) {
      ++missing;
      continue;
    }
    bool inside = true;
    int cell = 0;
    for (int k = 0; k < dim; ++k) {
      const double xk = paths.positions[(static_cast<std::size_t>(snap) * n + p) * dim + k];
      idx[k] = static_cast<int>(std::floor((xk - grid.lo[k]) / grid.h));
      if (idx[k] < 0 || idx[k] >= grid.shape[k]) inside = false;
    }
    if (inside) {
      for (int k = 0; k < dim; ++k) cell += idx[k] * grid.stride(k);
      const int mi = mask.index_of[cell];
      if (mi >= 0)
        density[mi] += 1.0;
      else
        inside = false;
    }
    if (!inside) ++missing;
  }
  density /= static_cast<double>(n) * grid.cell_volume();
  if (missing_mass) *missing_mass = static_cast<double>(missing) / static_cast<double>(n);
  return density;
}

}  // namespace mfg
