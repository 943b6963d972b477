#include "fiagree/data.hpp"
#include "fiagree/rng.hpp"

namespace fiagree {

namespace {

bool usable(const BootstrapSplit& s, std::span<const int> labels) {
  if (s.test_indices.empty()) return false;
  if (labels.empty()) return true;
  std::size_t test_pos = 0;
  for (std::size_t i : s.test_indices) test_pos += labels[i] == 1;
  if (test_pos == 0 || test_pos == s.test_indices.size()) return false;
  std::size_t train_pos = 0;
  for (std::size_t i : s.train_indices) train_pos += labels[i] == 1;
  return train_pos >= 2 && s.train_indices.size() - train_pos >= 2;
}

}  // namespace

std::vector<BootstrapSplit> bootstrap_splits(std::size_t n_rows, std::size_t k, std::uint64_t seed,
                                             std::span<const int> labels) {
  if (n_rows < 10) throw UsageError("bootstrap needs at least 10 rows");
  if (k < 1) throw UsageError("bootstrap needs at least one iteration");
  if (!labels.empty() && labels.size() != n_rows) {
    throw InvariantError("bootstrap: label count does not match row count");
  }

  std::vector<BootstrapSplit> splits;
  splits.reserve(k);
  std::vector<char> drawn(n_rows);
  for (std::size_t it = 0; it < k; ++it) {
    bool done = false;
    for (std::size_t attempt = 0; attempt <= kMaxBootstrapRedraws && !done; ++attempt) {
      Rng rng(derive_seed(seed, it, attempt));
      BootstrapSplit s;
      s.iteration = it;
      s.train_indices.resize(n_rows);
      std::fill(drawn.begin(), drawn.end(), 0);
      for (auto& idx : s.train_indices) {
        idx = static_cast<std::size_t>(rng.below(n_rows));
        drawn[idx] = 1;
      }
      for (std::size_t i = 0; i < n_rows; ++i) {
        if (!drawn[i]) s.test_indices.push_back(i);
      }
      if (usable(s, labels)) {
        splits.push_back(std::move(s));
        done = true;
      }
    }
    if (!done) {
      throw DataError("bootstrap iteration " + std::to_string(it) + ": no usable resample after " +
                      std::to_string(kMaxBootstrapRedraws) + " redraws");
    }
  }
  return splits;
}

}  // namespace fiagree
