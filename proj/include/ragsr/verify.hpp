#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ragsr/box_prep.hpp"

namespace ragsr {

// Self-check suites behind `verify`. Each suite compares the library against
// an independent reference computed inside the suite.
struct VerifyOptions {
  std::string suite = "all";  // all | masks | disjoint | grad | prep | gate
  std::size_t scenes = 1000;  // random scenes for masks / candidate lists for prep
  std::size_t disjoint_instances = 200;
  std::size_t grad_instances = 100;
  std::uint64_t seed = 0;
  PrepConfig prep_under_test;  // box-prep configuration checked against 0.4 / 5
};

struct SuiteResult {
  std::string name;
  bool passed = true;
  std::size_t cases = 0;
  std::size_t failures = 0;
  double metric = 0.0;  // suite-specific: exact matches, max rel error, ...
  std::string metric_name;
  std::vector<std::string> messages;  // first few failure descriptions
};

struct VerifyReport {
  std::vector<SuiteResult> suites;
  bool passed() const;
  std::string to_json() const;
};

const std::vector<std::string>& suite_names();

SuiteResult verify_masks(std::size_t scenes, std::uint64_t seed);
SuiteResult verify_disjoint(std::size_t instances, std::uint64_t seed);
SuiteResult verify_grad(std::size_t instances, std::uint64_t seed);
SuiteResult verify_prep(std::size_t lists, std::uint64_t seed, const PrepConfig& under_test);
SuiteResult verify_gate(std::uint64_t seed);

VerifyReport verify(const VerifyOptions& opts);

}  // namespace ragsr
