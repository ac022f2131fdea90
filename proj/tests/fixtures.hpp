#pragma once

// Shared, lazily built test data. Everything here is deterministic, so
// caching across tests in one binary does not couple their outcomes.

#include <memory>

#include "webrl/dataprep.hpp"
#include "webrl/policy.hpp"
#include "webrl/suite.hpp"
#include "webrl/trainer.hpp"

namespace webrl_test {

inline const webrl::TaskSuite& suite() {
  static const webrl::TaskSuite s = webrl::default_suite();
  return s;
}

inline const webrl::Dataset& dataset() {
  static const webrl::Dataset d = webrl::generate_dataset(suite(), 0, 4);
  return d;
}

inline std::shared_ptr<const webrl::Vocab> vocab() {
  static const auto v = std::make_shared<const webrl::Vocab>(webrl::corpus_vocab(suite(), dataset().sft));
  return v;
}

// One epoch of SFT at the CLI defaults: a partially trained policy.
inline const webrl::PolicyParams& warm_policy() {
  static const webrl::PolicyParams p = [] {
    webrl::SftConfig c;
    c.seed = 1;
    return webrl::run_sft(webrl::init_policy(vocab()), dataset().sft, c).params;
  }();
  return p;
}

inline const webrl::ActionSpace& space() {
  static const webrl::ActionSpace s = webrl::ActionSpace::standard();
  return s;
}

}  // namespace webrl_test
