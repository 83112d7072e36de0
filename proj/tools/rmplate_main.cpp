#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "rmplate/config.hpp"
#include "rmplate/limit2d.hpp"
#include "rmplate/optimize.hpp"
#include "rmplate/recovery.hpp"
#include "rmplate/rigidity.hpp"

namespace {

using namespace rmplate;

constexpr int kExitOk = 0;
constexpr int kExitScienceFail = 1;
constexpr int kExitUsage = 2;

std::string out_path(const RunConfig& c, const std::string& name) { return c.out + "/" + name; }

SmoothStateSpec state_from_config(const RunConfig& c) {
  SmoothStateSpec s = canonical_bump_state();
  s.lx = c.lx;
  s.ly = c.ly;
  if (c.state == "zero") {
    s.amp_u = s.amp_v = s.amp_phi = 0.0;
  } else {
    s.amp_u = c.amp_u;
    s.amp_v = c.amp_v;
    s.amp_phi = c.amp_phi;
  }
  return s;
}

Grid3 minimize_grid(const RunConfig& c, double h) {
  // node counts; the cap keeps the in-plane spacing at h/2 or finer so the
  // rotation-field mollifier stays resolved
  const int n = std::clamp(int(std::lround(4.0 / h)) + 1, 17, c.nx_cap);
  return Grid3(n, n, c.nz3d, c.lx, c.ly);
}

// stalls and failed line searches mark iterates that cannot make
// floating-point progress; only an exhausted budget is inconclusive
bool acceptable(const MinimizeResult& r) {
  return r.status != MinimizeStatus::max_iters;
}

struct Scaled3dProblem {
  const Grid3 grid;
  double h = 0.0;
  double scale = 0.0;
  const MaterialModel* model = nullptr;
  EnergyVariant variant = EnergyVariant::plain;
  BcMode bc = BcMode::enforce;
  const ForceSpec* force = nullptr;

  DeformationField3 unpack(const Eigen::VectorXd& x) const {
    DeformationField3 y(grid);
    for (Eigen::Index i = 0; i < x.size(); ++i) y.v[std::size_t(i)] = x[i];
    return y;
  }
  double energy(const Eigen::VectorXd& x) const {
    const DeformationField3 y = unpack(x);
    const EnergyBreakdown eb = force ? energy_jh(y, h, *model, *force, variant, bc)
                                     : energy_ih(y, h, *model, variant, bc);
    return scale * eb.total;
  }
  void gradient(const Eigen::VectorXd& x, Eigen::VectorXd& g) const {
    const DeformationField3 y = unpack(x);
    const std::vector<double> gr = grad_energy(y, h, *model, variant, bc, force);
    g.resize(Eigen::Index(gr.size()));
    for (std::size_t i = 0; i < gr.size(); ++i) g[Eigen::Index(i)] = scale * gr[i];
  }
};

MinimizeResult minimize_scaled_3d(const Scaled3dProblem& pr, const RunConfig& cfg) {
  const DeformationField3 y0 = identity_configuration(pr.grid, pr.h);
  Eigen::VectorXd x0(Eigen::Index(y0.v.size()));
  for (std::size_t i = 0; i < y0.v.size(); ++i) x0[Eigen::Index(i)] = y0.v[i];
  MinimizeOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.memory = 40;  // the thin-direction stiffness wants a longer history
  return minimize([&](const Eigen::VectorXd& x) { return pr.energy(x); },
                  [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { pr.gradient(x, g); },
                  x0, bc_mask(pr.grid), opts);
}

int cmd_check_material(const RunConfig& cfg) {
  const AssumptionReport rep = check_assumptions(cfg.mat, cfg.n_samples, cfg.seed);
  std::ofstream os(out_path(cfg, "material_report.csv"));
  os << "assumption,pass,worst,detail\n";
  for (const auto& e : rep.entries)
    os << e.name << ',' << (e.pass ? "pass" : "fail") << ',' << format_double(e.worst) << ",\""
       << e.detail << "\"\n";
  os << config_trailer(cfg) << '\n';
  for (const auto& e : rep.entries)
    std::cout << e.name << ": " << (e.pass ? "pass" : "FAIL") << " (" << e.detail << ")\n";
  return rep.all_pass() ? kExitOk : kExitScienceFail;
}

int cmd_qforms(const RunConfig& cfg) {
  const MaterialModel model(cfg.mat);
  auto dump_matrix = [&](const std::string& name, const Eigen::MatrixXd& m) {
    std::ofstream os(out_path(cfg, name));
    os << "row";
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << ",c" << j;
    os << '\n';
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      os << 'r' << i;
      for (Eigen::Index j = 0; j < m.cols(); ++j) os << ',' << format_double(m(i, j));
      os << '\n';
    }
    os << config_trailer(cfg) << '\n';
  };
  dump_matrix("hessian_w1.csv", model.form1().hessian);
  dump_matrix("hessian_w2.csv", model.form2().hessian);

  std::ofstream os(out_path(cfg, "qforms.csv"));
  os << "name,value\n";
  Eigen::Matrix2d e11_2 = Eigen::Matrix2d::Zero();
  e11_2(0, 0) = 1.0;
  Eigen::Matrix2d sym12 = Eigen::Matrix2d::Zero();
  sym12(0, 1) = sym12(1, 0) = 1.0;
  Eigen::Matrix3d e33 = Eigen::Matrix3d::Zero();
  e33(2, 2) = 1.0;
  Eigen::Matrix3d e11_3 = Eigen::Matrix3d::Zero();
  e11_3(0, 0) = 1.0;
  Eigen::Matrix3d sheared = Eigen::Matrix3d::Zero();
  sheared(0, 2) = sheared(2, 0) = 1.0;
  os << "q31_e11," << format_double(model.q3(1, e11_2)) << '\n';
  os << "q31_sym12," << format_double(model.q3(1, sym12)) << '\n';
  os << "q32_e11," << format_double(model.q3(2, e11_3)) << '\n';
  os << "q32_e33," << format_double(model.q3(2, e33)) << '\n';
  os << "q32_shear13," << format_double(model.q3(2, sheared)) << '\n';
  os << "q22_shear11," << format_double(model.q2_value(sheared)) << '\n';
  const RelaxedValue rv = model.q2_relaxed(sheared);
  os << "relax_cstar_shear11," << format_double(rv.c_star) << '\n';
  os << config_trailer(cfg) << '\n';
  return kExitOk;
}

int cmd_gamma_study(const RunConfig& cfg) {
  const MaterialModel model(cfg.mat);
  GammaStudyOptions opts;
  opts.nz = cfg.nz;
  opts.nx_min = cfg.nx_min;
  opts.bc = cfg.bc();
  const auto rows =
      gamma_study(state_from_config(cfg), cfg.h_list, cfg.mat.sigma, model,
                  cfg.energy_variant(), opts);
  write_study_csv(out_path(cfg, "gamma_study.csv"), rows, config_trailer(cfg));
  bool ok = true;
  for (const auto& r : rows) ok = ok && !r.flagged;
  const std::size_t n = rows.size();
  if (n >= 3) {
    for (std::size_t i = n - 3; i + 1 < n; ++i) {
      const bool both_zero = rows[i].rel_err < 1e-14 && rows[i + 1].rel_err < 1e-14;
      ok = ok && (rows[i + 1].rel_err < rows[i].rel_err || both_zero);
    }
  }
  for (const auto& r : rows)
    std::cout << "h=" << r.h << " scaled=" << r.scaled_total << " limit=" << r.limit_total
              << " rel_err=" << r.rel_err << (r.flagged ? " FLAGGED" : "") << '\n';
  return ok ? kExitOk : kExitScienceFail;
}

int cmd_minimize3d(const RunConfig& cfg) {
  const MaterialModel model(cfg.mat);
  const double h = cfg.h_list.front();
  const Grid3 g3 = minimize_grid(cfg, h);
  std::optional<ForceSpec> force;
  if (cfg.load == "bump")
    force = make_bump_load(g3.plane(), cfg.load_amplitude, cfg.derived_alpha());
  Scaled3dProblem pr{g3, h, std::pow(h, -cfg.mat.sigma), &model, cfg.energy_variant(), cfg.bc(),
                     force ? &*force : nullptr};
  const MinimizeResult r = minimize_scaled_3d(pr, cfg);
  write_trace_csv(out_path(cfg, "trace.csv"), r.trace, config_trailer(cfg));
  const DeformationField3 y = pr.unpack(r.x);
  write_plt3(out_path(cfg, "y.plt3"), y, h);
  const MollifiedRotation2d q = mollified_rotation_field_2d(y, h);
  const MidsurfaceExtract ex = extract_midsurface(y, h, cfg.mat.sigma, &q.q);
  write_midsurface_csv(out_path(cfg, "midsurface.csv"), ex.state, config_trailer(cfg));
  std::cout << "h=" << h << " scaled_energy=" << r.energy << " grad_norm=" << r.grad_norm
            << " iters=" << r.iters << '\n';
  return acceptable(r) ? kExitOk : kExitScienceFail;
}

int cmd_minimize_limit(const RunConfig& cfg) {
  const MaterialModel model(cfg.mat);
  const Grid2 g2(cfg.limit_nx, cfg.limit_nx, cfg.lx, cfg.ly);
  ForceSpec force;
  if (cfg.load == "bump") {
    force = make_bump_load(g2, cfg.load_amplitude, cfg.derived_alpha());
  } else {
    force.grid = g2;
    force.f3.assign(g2.count(), 0.0);
    force.alpha = cfg.derived_alpha();
  }
  const LimitMinimizeResult res = minimize_limit(g2, model, force);
  write_trace_csv(out_path(cfg, "limit_trace.csv"), res.opt.trace, config_trailer(cfg));
  write_limit_csv(out_path(cfg, "limit_breakdown.csv"), "plain", res.breakdown,
                  config_trailer(cfg));
  write_midsurface_csv(out_path(cfg, "limit_minimizer.csv"), res.state, config_trailer(cfg));
  std::cout << "limit min total=" << res.breakdown.total << " iters=" << res.opt.iters << '\n';
  return kExitOk;
}

int cmd_compare(const RunConfig& cfg) {
  const MaterialModel model(cfg.mat);
  std::ofstream os(out_path(cfg, "compare.csv"));
  os << "h,sigma,scaled3d_min,limit_min,gap,v_rel_l2,uh_l2,status\n";
  std::vector<double> gaps;
  bool all_ok = true;
  for (const double h : cfg.h_list) {
    const Grid3 g3 = minimize_grid(cfg, h);
    const Grid2 g2 = g3.plane();
    ForceSpec force;
    if (cfg.load == "bump") {
      force = make_bump_load(g2, cfg.load_amplitude, cfg.derived_alpha());
    } else {
      force.grid = g2;
      force.f3.assign(g2.count(), 0.0);
      force.alpha = cfg.derived_alpha();
    }
    Scaled3dProblem pr{g3, h, std::pow(h, -cfg.mat.sigma), &model, cfg.energy_variant(),
                       cfg.bc(), &force};
    const MinimizeResult r3 = minimize_scaled_3d(pr, cfg);
    const bool ok3 = acceptable(r3);
    all_ok = all_ok && ok3;

    const DeformationField3 y = pr.unpack(r3.x);
    const MollifiedRotation2d q = mollified_rotation_field_2d(y, h);
    const MidsurfaceExtract ex = extract_midsurface(y, h, cfg.mat.sigma, &q.q);

    const LimitMinimizeResult lim = minimize_limit(g2, model, force);

    double num = 0.0, den = 0.0, unorm = 0.0;
    for (int i = 0; i < g2.nx; ++i)
      for (int j = 0; j < g2.ny; ++j) {
        const double w = g2.weight(i, j);
        const std::size_t n = g2.idx(i, j);
        const double dv = ex.state.v[n] - lim.state.v[n];
        num += w * dv * dv;
        den += w * lim.state.v[n] * lim.state.v[n];
        unorm += w * (ex.state.u[2 * n] * ex.state.u[2 * n] +
                      ex.state.u[2 * n + 1] * ex.state.u[2 * n + 1]);
      }
    const double vrel = std::sqrt(num / std::max(den, 1e-300));
    const double gap = std::abs(r3.energy - lim.breakdown.total);
    gaps.push_back(gap);
    os << format_double(h) << ',' << format_double(cfg.mat.sigma) << ','
       << format_double(r3.energy) << ',' << format_double(lim.breakdown.total) << ','
       << format_double(gap) << ',' << format_double(vrel) << ','
       << format_double(std::sqrt(unorm)) << ',' << (ok3 ? "ok" : "not_converged") << '\n';
    std::cout << "h=" << h << " scaled3d=" << r3.energy << " limit=" << lim.breakdown.total
              << " gap=" << gap << " v_rel_l2=" << vrel << '\n';
  }
  os << config_trailer(cfg) << '\n';
  const bool all_zero = gaps.size() >= 2 && gaps.front() < 1e-14 && gaps.back() < 1e-14;
  const bool shrinks = gaps.size() < 2 || gaps.back() < gaps.front() || all_zero;
  return (all_ok && shrinks) ? kExitOk : kExitScienceFail;
}

int cmd_rigidity(const RunConfig& cfg) {
  const MaterialModel model(cfg.mat);
  std::vector<RigidityReport> rows;
  GammaStudyOptions gopt;
  gopt.nz = cfg.nz;
  gopt.nx_min = cfg.nx_min;

  try {
    if (cfg.field == "rigid") {
      for (const double h : cfg.h_list) {
        const Grid2 g2 = study_grid(h, cfg.lx, cfg.ly, gopt);
        Grid3 g3(g2.nx, g2.ny, cfg.nz, cfg.lx, cfg.ly);
        DeformationField3 y(g3);
        Eigen::Matrix2d q;
        q << std::cos(cfg.rigid_angle), -std::sin(cfg.rigid_angle), std::sin(cfg.rigid_angle),
            std::cos(cfg.rigid_angle);
        for (int i = 0; i < g3.nx; ++i)
          for (int j = 0; j < g3.ny; ++j)
            for (int k = 0; k < g3.nz; ++k) {
              const Eigen::Vector2d xp = q * Eigen::Vector2d(g3.x1(i), g3.x2(j));
              y.set(i, j, k, {xp[0], xp[1], h * g3.x3(k)});
            }
        rows.push_back(rigidity_report(y, h));
      }
    } else if (cfg.field == "recovery") {
      const SmoothStateSpec spec = state_from_config(cfg);
      for (const double h : cfg.h_list) {
        const Grid2 g2 = study_grid(h, cfg.lx, cfg.ly, gopt);
        const MidsurfaceState state = sample_state(spec, g2);
        const DeformationField3 y = build_recovery(state, cfg.mat.sigma, h, model, cfg.nz);
        rows.push_back(rigidity_report(y, h));
      }
    } else {  // perturbation sweep at fixed h
      const double h = cfg.h_list.front();
      const Grid2 g2 = study_grid(h, cfg.lx, cfg.ly, gopt);
      Grid3 g3(g2.nx, g2.ny, cfg.nz, cfg.lx, cfg.ly);
      const double nrm = std::pow(0.5 * cfg.lx, 2) * std::pow(0.5 * cfg.ly, 2);
      for (const double delta : cfg.deltas) {
        DeformationField3 y(g3);
        for (int i = 0; i < g3.nx; ++i)
          for (int j = 0; j < g3.ny; ++j) {
            const double x1 = g3.x1(i), x2 = g3.x2(j);
            const double b = std::pow(x1 * (cfg.lx - x1) * x2 * (cfg.ly - x2) / nrm, 2);
            const double d1 = b * (0.8 + 0.4 * x2 / cfg.ly);
            const double d2 = b * (-0.5 + 0.3 * x1 / cfg.lx);
            for (int k = 0; k < g3.nz; ++k) {
              const double mod = 1.0 + 0.3 * g3.x3(k);
              y.set(i, j, k, {x1 + delta * mod * d1, x2 + delta * mod * d2, h * g3.x3(k)});
            }
          }
        rows.push_back(rigidity_report(y, h));
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "rigidity: " << e.what() << '\n';
    return kExitScienceFail;
  }

  write_rigidity_csv(out_path(cfg, "rigidity.csv"), rows, config_trailer(cfg));
  for (const auto& r : rows)
    std::cout << "h=" << r.h << " E1=" << r.e1 << " E2=" << r.e2 << " r1=" << r.r1
              << " q1=" << r.q1 << " t1=" << r.t1
              << (r.exact_rigid ? " exact_rigid" : "") << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for anisotropically scaled plate energies and their"
               " Reissner-Mindlin limits"};
  app.require_subcommand(1);

  std::string config_path, h_list_str, bc_mode_str, out_str, variant_str;
  double sigma_flag = -1.0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "configuration file (key = value lines)");
    sub->add_option("--sigma", sigma_flag, "override sigma");
    sub->add_option("--h-list", h_list_str, "override h list (comma separated)");
    sub->add_option("--bc-mode", bc_mode_str, "override bc mode (enforce|ignore)");
    sub->add_option("--variant", variant_str, "override variant (plain|second_grad|auto)");
    sub->add_option("--out", out_str, "output directory");
  };

  CLI::App* c_check = app.add_subcommand("check-material", "verify the density assumptions");
  CLI::App* c_qforms = app.add_subcommand("qforms", "dump Hessians and quadratic-form tables");
  CLI::App* c_gamma = app.add_subcommand("gamma-study", "recovery-sequence h-sweep");
  CLI::App* c_min3d = app.add_subcommand("minimize3d", "minimize the scaled 3D energy");
  CLI::App* c_minlim = app.add_subcommand("minimize-limit", "minimize the limit energy");
  CLI::App* c_compare = app.add_subcommand("compare", "compare 3D and limit minimizers");
  CLI::App* c_rig = app.add_subcommand("rigidity", "rigidity diagnostics");
  for (CLI::App* s : {c_check, c_qforms, c_gamma, c_min3d, c_minlim, c_compare, c_rig})
    add_common(s);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    if (sigma_flag > 0.0) cfg.mat.sigma = sigma_flag;
    if (!h_list_str.empty()) cfg.h_list = parse_double_list(h_list_str);
    if (!bc_mode_str.empty()) cfg.bc_mode = bc_mode_str;
    if (!variant_str.empty()) cfg.variant = variant_str;
    if (!out_str.empty()) cfg.out = out_str;
    cfg.validate();

    DirLock lock(cfg.out);
    if (app.got_subcommand(c_check)) return cmd_check_material(cfg);
    if (app.got_subcommand(c_qforms)) return cmd_qforms(cfg);
    if (app.got_subcommand(c_gamma)) return cmd_gamma_study(cfg);
    if (app.got_subcommand(c_min3d)) return cmd_minimize3d(cfg);
    if (app.got_subcommand(c_minlim)) return cmd_minimize_limit(cfg);
    if (app.got_subcommand(c_compare)) return cmd_compare(cfg);
    if (app.got_subcommand(c_rig)) return cmd_rigidity(cfg);
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitScienceFail;
  }
}
