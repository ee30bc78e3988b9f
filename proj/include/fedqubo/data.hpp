#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fedqubo {

// Row-major sample matrix with integer class labels. Feature values live in
// [0, 1] after generation or loading.
struct RawDataset {
  std::vector<float> features;  // rows * cols
  std::vector<int> labels;
  int rows = 0;
  int cols = 0;
  int classes = 0;

  const float* sample(int i) const { return features.data() + static_cast<std::size_t>(i) * cols; }
};

// Gaussian blobs around seeded random class centers, min-max normalized per
// feature. Deterministic given the seed.
RawDataset synth_blobs(int classes, int dims, int per_class, double spread, std::uint64_t seed);

// IDX container files (big-endian magic + dimension sizes + raw bytes).
// Pixels are scaled to [0,1] by division by 255.
RawDataset load_idx(const std::string& images_path, const std::string& labels_path);

// Deterministic label-stratified split: returns (holdout, remainder) index
// lists, holdout holding ~fraction of every class.
struct SplitIndices {
  std::vector<int> holdout;
  std::vector<int> remainder;
};
SplitIndices stratified_split(const std::vector<int>& labels, double fraction,
                              std::uint64_t seed);

// Keeps a label-stratified subset of at most `max_rows` samples (0 = all).
RawDataset stratified_subset(const RawDataset& data, int max_rows, std::uint64_t seed);

}  // namespace fedqubo
