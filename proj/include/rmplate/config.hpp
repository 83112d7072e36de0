#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rmplate/energy3d.hpp"
#include "rmplate/material.hpp"

namespace rmplate {

// Plain "key = value" run configuration with '#' comments. Flags on the CLI
// override file keys.
struct RunConfig {
  MaterialParams mat;  // beta, mu, lambda, c1, l, epsilon, sigma

  double alpha = 4.0;  // force exponent; derived from sigma = 2 alpha - 2 unless given
  bool alpha_given = false;

  std::vector<double> h_list{0.125, 0.0625, 0.03125, 0.015625};

  double lx = 1.0, ly = 1.0;
  int nz = 8;        // x3 nodes for studies
  int nz3d = 5;      // x3 nodes for 3D minimization (4 elements)
  int nx_min = 32;   // study in-plane resolution max(nx_min, round(4/h)) nodes
  int nx_cap = 33;   // 3D-minimization in-plane node cap (32 elements)
  int limit_nx = 33; // minimize-limit grid

  std::string bc_mode = "enforce";   // enforce | ignore
  std::string variant = "auto";      // plain | second_grad | auto
  std::string load = "none";         // none | bump
  double load_amplitude = 1.0;
  std::string state = "bump";        // bump | zero
  double amp_u = 0.2, amp_v = 0.4, amp_phi = 0.5;

  std::string field = "recovery";    // rigidity: rigid | recovery | perturbation
  std::vector<double> deltas{1e-3, 1e-2, 1e-1};
  double rigid_angle = 0.3;

  std::uint64_t seed = 1;
  int n_samples = 1000;
  int max_iters = 20000;
  std::string out = "out";

  BcMode bc() const;
  EnergyVariant energy_variant() const;  // resolves "auto" from sigma
  void validate() const;                 // throws std::invalid_argument
  double derived_alpha() const { return alpha_given ? alpha : 0.5 * (mat.sigma + 2.0); }
};

// throws std::invalid_argument on unknown keys or malformed lines/values
void apply_config_kv(RunConfig& c, const std::string& key, const std::string& value);
RunConfig parse_config_file(const std::string& path);
std::vector<double> parse_double_list(const std::string& s);

// canonical serialization (fixed key order) and its FNV-1a hash
std::string canonical_config(const RunConfig& c);
std::uint64_t config_hash(const RunConfig& c);
std::string config_trailer(const RunConfig& c);  // "# config_hash=0x..."

// Exclusive lock on the run directory; the directory is created if missing.
// Throws std::runtime_error if another run holds the lock.
class DirLock {
 public:
  explicit DirLock(const std::string& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::string path_;
  int fd_ = -1;
};

}  // namespace rmplate
