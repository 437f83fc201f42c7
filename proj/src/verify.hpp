#pragma once

#include <string>
#include <vector>

namespace gfs {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Exhaustive ZC correlation properties for N_ZC in {7, 13}.
std::vector<CheckResult> verify_zc();

// Reverse-mode vs central finite differences, per layer and composed
// networks, in 64-bit mode.
std::vector<CheckResult> verify_grad();

// Simulator oracle equivalence and noise/channel statistics.
std::vector<CheckResult> verify_sim();

// suite in {zc, grad, sim, all}; returns the number of failures.
int run_verify_suite(const std::string& suite, std::vector<CheckResult>& out);

}  // namespace gfs
