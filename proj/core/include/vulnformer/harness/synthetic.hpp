#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "vulnformer/harness/case_study.hpp"
#include "vulnformer/harness/dataset.hpp"

namespace vulnformer::harness {

// Generated C functions built from a small statement grammar. Labels are
// balanced and splits are assigned after a seeded shuffle, so the same
// options always give the same dataset.
struct SyntheticOptions {
  std::size_t count = 200;
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
  double validation_fraction = 0.15;
};

inline constexpr std::string_view kMarkerCall = "gets";

// Vulnerable iff the body calls gets(). Clean functions may still declare
// the same buffer.
DatasetSplit marker_dataset(const SyntheticOptions& options);

// Vulnerable iff memcpy(buf, src, n) runs without an enclosing
// `if (n < size)` guard. Clean functions either guard the copy or do not
// copy at all; unrelated branches and loops appear in both classes.
DatasetSplit separability_dataset(const SyntheticOptions& options);

// Four vulnerable/patched pairs: buffer overflow, wrong buffer-size
// arithmetic, and two missing pointer checks. The first matches the
// separability family.
std::vector<CasePair> builtin_case_pairs();

}  // namespace vulnformer::harness
