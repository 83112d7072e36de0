#include "rmplate/optimize.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>

#include "rmplate/fields.hpp"
#include "rmplate/rng.hpp"

namespace rmplate {

namespace {

double masked_maxnorm(const Eigen::VectorXd& g, const std::vector<std::uint8_t>& mask) {
  double m = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (mask.empty() || !mask[std::size_t(i)]) m = std::max(m, std::abs(g[i]));
  return m;
}

void mask_vector(Eigen::VectorXd& g, const std::vector<std::uint8_t>& mask) {
  if (mask.empty()) return;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    if (mask[std::size_t(i)]) g[i] = 0.0;
}

}  // namespace

MinimizeResult minimize(const EnergyFn& energy, const GradFn& gradient,
                        const Eigen::VectorXd& x0, const std::vector<std::uint8_t>& mask,
                        const MinimizeOptions& opts) {
  if (!mask.empty() && Eigen::Index(mask.size()) != x0.size())
    throw std::invalid_argument("minimize: mask size mismatch");
  if (!(opts.grad_tol > 0.0) || !(opts.armijo_c > 0.0 && opts.armijo_c < 1.0) ||
      !(opts.shrink > 0.0 && opts.shrink < 1.0))
    throw std::invalid_argument("minimize: invalid options");

  MinimizeResult res;
  res.x = x0;
  double e = energy(res.x);
  if (!std::isfinite(e)) throw std::invalid_argument("minimize: energy not finite at x0");

  Eigen::VectorXd g(x0.size());
  gradient(res.x, g);
  mask_vector(g, mask);
  double gnorm = masked_maxnorm(g, mask);
  const double tol = std::max(opts.grad_tol * gnorm, opts.grad_tol_abs);

  res.trace.push_back({0, e, gnorm, 0.0});

  std::deque<Eigen::VectorXd> svec, yvec;
  std::deque<double> rho;

  int stagnant = 0;
  int iter = 0;
  res.status = MinimizeStatus::max_iters;
  for (; iter < opts.max_iters; ++iter) {
    if (gnorm <= tol) {
      res.status = MinimizeStatus::converged;
      break;
    }

    // two-loop recursion
    Eigen::VectorXd q = g;
    const int mlen = int(svec.size());
    std::vector<double> alpha(static_cast<std::size_t>(mlen), 0.0);
    for (int i = mlen - 1; i >= 0; --i) {
      alpha[std::size_t(i)] = rho[std::size_t(i)] * svec[std::size_t(i)].dot(q);
      q -= alpha[std::size_t(i)] * yvec[std::size_t(i)];
    }
    if (mlen > 0) {
      const Eigen::VectorXd& ylast = yvec.back();
      const double yy = ylast.squaredNorm();
      if (yy > 0.0) q *= svec.back().dot(ylast) / yy;
    }
    for (int i = 0; i < mlen; ++i) {
      const double beta = rho[std::size_t(i)] * yvec[std::size_t(i)].dot(q);
      q += (alpha[std::size_t(i)] - beta) * svec[std::size_t(i)];
    }
    Eigen::VectorXd p = -q;
    mask_vector(p, mask);

    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      // fall back to steepest descent when the model loses definiteness
      p = -g;
      mask_vector(p, mask);
      slope = g.dot(p);
      svec.clear(); yvec.clear(); rho.clear();
      if (!(slope < 0.0)) {
        res.status = MinimizeStatus::line_search_failed;
        break;
      }
    }

    double step = 1.0;
    double enew = 0.0;
    bool accepted = false;
    while (step > 1e-20) {
      enew = energy(res.x + step * p);
      if (std::isfinite(enew) && enew <= e + opts.armijo_c * step * slope) {
        accepted = true;
        break;
      }
      step *= opts.shrink;
    }
    if (!accepted) {
      res.status = MinimizeStatus::line_search_failed;
      break;
    }

    Eigen::VectorXd xnew = res.x + step * p;
    if (!mask.empty())
      for (Eigen::Index i = 0; i < xnew.size(); ++i)
        if (mask[std::size_t(i)]) xnew[i] = res.x[i];  // keep held dofs bit-identical
    Eigen::VectorXd gnew(g.size());
    gradient(xnew, gnew);
    mask_vector(gnew, mask);

    const Eigen::VectorXd s = xnew - res.x;
    const Eigen::VectorXd ydiff = gnew - g;
    const double sy = s.dot(ydiff);
    if (sy > 1e-14 * s.norm() * ydiff.norm()) {
      svec.push_back(s);
      yvec.push_back(ydiff);
      rho.push_back(1.0 / sy);
      if (int(svec.size()) > opts.memory) {
        svec.pop_front(); yvec.pop_front(); rho.pop_front();
      }
    }

    const double rel_dec = (e - enew) / std::max(std::abs(e), 1e-300);
    stagnant = rel_dec <= 1e-14 ? stagnant + 1 : 0;

    res.x = xnew;
    e = enew;
    g.swap(gnew);
    gnorm = masked_maxnorm(g, mask);
    res.trace.push_back({iter + 1, e, gnorm, step});

    if (stagnant >= 20) {
      res.status = MinimizeStatus::stalled;
      ++iter;
      break;
    }
  }
  if (gnorm <= tol) res.status = MinimizeStatus::converged;

  res.energy = e;
  res.grad_norm = gnorm;
  res.iters = iter;
  return res;
}

double fd_gradient_check(const EnergyFn& energy, const GradFn& gradient,
                         const Eigen::VectorXd& x, int count, double step, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::VectorXd g(x.size());
  gradient(x, g);
  double worst = 0.0;
  for (int s = 0; s < count; ++s) {
    Eigen::VectorXd d(x.size());
    for (Eigen::Index i = 0; i < d.size(); ++i) d[i] = rng.normal();
    const double dn = d.norm();
    if (dn == 0.0) continue;
    d /= dn;
    const double ep = energy(x + step * d);
    const double em = energy(x - step * d);
    if (!std::isfinite(ep) || !std::isfinite(em)) continue;  // sentinel probe, skipped
    const double fd = (ep - em) / (2.0 * step);
    const double an = g.dot(d);
    const double scale = std::max({std::abs(fd), std::abs(an), 1e-12});
    worst = std::max(worst, std::abs(fd - an) / scale);
  }
  return worst;
}

void write_trace_csv(const std::string& path, const std::vector<TracePoint>& trace,
                     const std::string& trailer) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_trace_csv: cannot open " + path);
  os << "iter,energy,grad_norm,step\n";
  for (const auto& t : trace)
    os << t.iter << ',' << format_double(t.energy) << ',' << format_double(t.grad_norm) << ','
       << format_double(t.step) << '\n';
  if (!trailer.empty()) os << trailer << '\n';
}

}  // namespace rmplate
