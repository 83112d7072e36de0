#include "rmplate/config.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rmplate/fields.hpp"

namespace rmplate {

BcMode RunConfig::bc() const {
  if (bc_mode == "enforce") return BcMode::enforce;
  if (bc_mode == "ignore") return BcMode::ignore;
  throw std::invalid_argument("config: bc_mode must be enforce or ignore");
}

EnergyVariant RunConfig::energy_variant() const {
  if (variant == "plain") return EnergyVariant::plain;
  if (variant == "second_grad") return EnergyVariant::second_grad;
  if (variant == "auto")
    return mat.sigma > 4.0 ? EnergyVariant::plain : EnergyVariant::second_grad;
  throw std::invalid_argument("config: variant must be plain, second_grad or auto");
}

void RunConfig::validate() const {
  mat.validate_for_checks();
  if (!(mat.sigma >= 4.0)) throw std::invalid_argument("config: sigma must be >= 4");
  if (h_list.empty()) throw std::invalid_argument("config: h_list must not be empty");
  for (std::size_t i = 0; i < h_list.size(); ++i) {
    if (!(h_list[i] > 0.0 && h_list[i] < 1.0))
      throw std::invalid_argument("config: h values must lie in (0,1)");
    if (i > 0 && !(h_list[i] < h_list[i - 1]))
      throw std::invalid_argument("config: h_list must be strictly decreasing");
  }
  bc();
  energy_variant();
  if (load != "none" && load != "bump")
    throw std::invalid_argument("config: load must be none or bump");
  if (state != "bump" && state != "zero")
    throw std::invalid_argument("config: state must be bump or zero");
  if (field != "rigid" && field != "recovery" && field != "perturbation")
    throw std::invalid_argument("config: field must be rigid, recovery or perturbation");
  if (load != "none") {
    const double a = derived_alpha();
    if (std::abs(mat.sigma - (2.0 * a - 2.0)) > 1e-12)
      throw std::invalid_argument("config: force requires sigma = 2*alpha - 2");
  }
  if (nz < 3 || nz3d < 3) throw std::invalid_argument("config: nz must be >= 3");
  if (nx_min < 4 || nx_cap < 4 || limit_nx < 4)
    throw std::invalid_argument("config: grid sizes must be >= 4");
  if (!(lx > 0.0 && ly > 0.0)) throw std::invalid_argument("config: lx, ly must be positive");
  if (n_samples < 1) throw std::invalid_argument("config: n_samples >= 1");
  if (max_iters < 1) throw std::invalid_argument("config: max_iters >= 1");
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) {
    std::size_t pos = 0;
    const double v = std::stod(item, &pos);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list value");
  return out;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_double(const std::string& v) {
  std::size_t pos = 0;
  const double x = std::stod(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("bad numeric value: " + v);
  return x;
}

int to_int(const std::string& v) {
  std::size_t pos = 0;
  const int x = std::stoi(v, &pos);
  if (pos != v.size()) throw std::invalid_argument("bad integer value: " + v);
  return x;
}

}  // namespace

void apply_config_kv(RunConfig& c, const std::string& rawkey, const std::string& rawval) {
  const std::string key = trim(rawkey), value = trim(rawval);
  try {
    if (key == "beta") c.mat.beta = to_double(value);
    else if (key == "mu") c.mat.mu = to_double(value);
    else if (key == "lambda") c.mat.lambda = to_double(value);
    else if (key == "c1") c.mat.c1 = to_double(value);
    else if (key == "l") c.mat.l = to_double(value);
    else if (key == "epsilon") c.mat.epsilon = to_double(value);
    else if (key == "sigma") c.mat.sigma = to_double(value);
    else if (key == "alpha") { c.alpha = to_double(value); c.alpha_given = true; }
    else if (key == "h_list") c.h_list = parse_double_list(value);
    else if (key == "lx") c.lx = to_double(value);
    else if (key == "ly") c.ly = to_double(value);
    else if (key == "nz") c.nz = to_int(value);
    else if (key == "nz3d") c.nz3d = to_int(value);
    else if (key == "nx_min") c.nx_min = to_int(value);
    else if (key == "nx_cap") c.nx_cap = to_int(value);
    else if (key == "limit_nx") c.limit_nx = to_int(value);
    else if (key == "bc_mode") c.bc_mode = value;
    else if (key == "variant") c.variant = value;
    else if (key == "load") c.load = value;
    else if (key == "load_amplitude") c.load_amplitude = to_double(value);
    else if (key == "state") c.state = value;
    else if (key == "amp_u") c.amp_u = to_double(value);
    else if (key == "amp_v") c.amp_v = to_double(value);
    else if (key == "amp_phi") c.amp_phi = to_double(value);
    else if (key == "field") c.field = value;
    else if (key == "deltas") c.deltas = parse_double_list(value);
    else if (key == "rigid_angle") c.rigid_angle = to_double(value);
    else if (key == "seed") c.seed = std::uint64_t(std::stoull(value));
    else if (key == "n_samples") c.n_samples = to_int(value);
    else if (key == "max_iters") c.max_iters = to_int(value);
    else if (key == "out") c.out = value;
    else throw std::invalid_argument("unknown config key: " + key);
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for config key " + key + ": " + value);
  }
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("cannot open config file " + path);
  RunConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    apply_config_kv(c, line.substr(0, eq), line.substr(eq + 1));
  }
  return c;
}

std::string canonical_config(const RunConfig& c) {
  std::ostringstream os;
  auto num = [](double v) { return format_double(v); };
  auto list = [&](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ',';
      s += num(v[i]);
    }
    return s;
  };
  os << "alpha=" << num(c.derived_alpha()) << '\n'
     << "amp_phi=" << num(c.amp_phi) << '\n'
     << "amp_u=" << num(c.amp_u) << '\n'
     << "amp_v=" << num(c.amp_v) << '\n'
     << "bc_mode=" << c.bc_mode << '\n'
     << "beta=" << num(c.mat.beta) << '\n'
     << "c1=" << num(c.mat.c1) << '\n'
     << "deltas=" << list(c.deltas) << '\n'
     << "epsilon=" << num(c.mat.epsilon) << '\n'
     << "field=" << c.field << '\n'
     << "h_list=" << list(c.h_list) << '\n'
     << "l=" << num(c.mat.l) << '\n'
     << "lambda=" << num(c.mat.lambda) << '\n'
     << "limit_nx=" << c.limit_nx << '\n'
     << "load=" << c.load << '\n'
     << "load_amplitude=" << num(c.load_amplitude) << '\n'
     << "lx=" << num(c.lx) << '\n'
     << "ly=" << num(c.ly) << '\n'
     << "max_iters=" << c.max_iters << '\n'
     << "mu=" << num(c.mat.mu) << '\n'
     << "n_samples=" << c.n_samples << '\n'
     << "nx_cap=" << c.nx_cap << '\n'
     << "nx_min=" << c.nx_min << '\n'
     << "nz=" << c.nz << '\n'
     << "nz3d=" << c.nz3d << '\n'
     << "rigid_angle=" << num(c.rigid_angle) << '\n'
     << "seed=" << c.seed << '\n'
     << "sigma=" << num(c.mat.sigma) << '\n'
     << "state=" << c.state << '\n'
     << "variant=" << c.variant << '\n';
  return os.str();
}

std::uint64_t config_hash(const RunConfig& c) {
  const std::string s = canonical_config(c);
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string config_trailer(const RunConfig& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(config_hash(c)));
  return std::string("# config_hash=") + buf;
}

DirLock::DirLock(const std::string& dir) {
  std::filesystem::create_directories(dir);
  path_ = dir + "/.lock";
  fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd_ < 0)
    throw std::runtime_error("run directory " + dir + " is locked by another run (found " +
                             path_ + ")");
}

DirLock::~DirLock() {
  if (fd_ >= 0) {
    ::close(fd_);
    ::unlink(path_.c_str());
  }
}

}  // namespace rmplate
