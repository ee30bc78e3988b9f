#include "fedqubo/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

#include "fedqubo/common.hpp"

namespace fedqubo {

RawDataset synth_blobs(int classes, int dims, int per_class, double spread, std::uint64_t seed) {
  if (classes < 2) throw std::invalid_argument("synth_blobs: classes must be >= 2");
  if (dims < 1) throw std::invalid_argument("synth_blobs: dims must be >= 1");
  if (per_class < 1) throw std::invalid_argument("synth_blobs: per_class must be >= 1");
  if (!(spread > 0.0)) throw std::invalid_argument("synth_blobs: spread must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, spread);

  std::vector<std::vector<double>> centers(classes, std::vector<double>(dims));
  for (auto& c : centers) {
    for (double& v : c) v = unif(rng);
  }

  RawDataset out;
  out.rows = classes * per_class;
  out.cols = dims;
  out.classes = classes;
  out.features.resize(static_cast<std::size_t>(out.rows) * dims);
  out.labels.resize(out.rows);

  std::vector<double> raw(static_cast<std::size_t>(out.rows) * dims);
  int row = 0;
  for (int c = 0; c < classes; ++c) {
    for (int s = 0; s < per_class; ++s, ++row) {
      out.labels[row] = c;
      for (int d = 0; d < dims; ++d) {
        raw[static_cast<std::size_t>(row) * dims + d] = centers[c][d] + noise(rng);
      }
    }
  }

  // per-feature min-max normalization into [0,1]
  for (int d = 0; d < dims; ++d) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < out.rows; ++r) {
      const double v = raw[static_cast<std::size_t>(r) * dims + d];
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    const double span = hi - lo;
    for (int r = 0; r < out.rows; ++r) {
      const std::size_t at = static_cast<std::size_t>(r) * dims + d;
      out.features[at] = span > 0.0 ? static_cast<float>((raw[at] - lo) / span) : 0.0f;
    }
  }
  return out;
}

namespace {

std::uint32_t read_be32(std::ifstream& in, const std::string& path, const char* what) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) {
    throw std::runtime_error("load_idx: " + path + " truncated while reading " + what);
  }
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

}  // namespace

RawDataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("load_idx: cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  if (!lab) throw std::runtime_error("load_idx: cannot open " + labels_path);

  const std::uint32_t img_magic = read_be32(img, images_path, "magic");
  if (img_magic != 0x00000803u) {
    throw std::runtime_error("load_idx: " + images_path + " has magic " +
                             std::to_string(img_magic) + ", expected 2051 (idx3 images)");
  }
  const std::uint32_t lab_magic = read_be32(lab, labels_path, "magic");
  if (lab_magic != 0x00000801u) {
    throw std::runtime_error("load_idx: " + labels_path + " has magic " +
                             std::to_string(lab_magic) + ", expected 2049 (idx1 labels)");
  }

  const std::uint32_t n_images = read_be32(img, images_path, "count");
  const std::uint32_t height = read_be32(img, images_path, "height");
  const std::uint32_t width = read_be32(img, images_path, "width");
  const std::uint32_t n_labels = read_be32(lab, labels_path, "count");
  if (n_images != n_labels) {
    throw std::runtime_error("load_idx: image count " + std::to_string(n_images) +
                             " does not match label count " + std::to_string(n_labels));
  }

  RawDataset out;
  out.rows = static_cast<int>(n_images);
  out.cols = static_cast<int>(height * width);
  out.features.resize(static_cast<std::size_t>(out.rows) * out.cols);
  out.labels.resize(out.rows);

  std::vector<unsigned char> buf(out.cols);
  for (int r = 0; r < out.rows; ++r) {
    if (!img.read(reinterpret_cast<char*>(buf.data()), out.cols)) {
      throw std::runtime_error("load_idx: " + images_path + " truncated at sample " +
                               std::to_string(r));
    }
    for (int c = 0; c < out.cols; ++c) {
      out.features[static_cast<std::size_t>(r) * out.cols + c] =
          static_cast<float>(buf[c]) / 255.0f;
    }
  }
  std::vector<unsigned char> lbuf(out.rows);
  if (!lab.read(reinterpret_cast<char*>(lbuf.data()), out.rows)) {
    throw std::runtime_error("load_idx: " + labels_path + " truncated label payload");
  }
  int max_label = 0;
  for (int r = 0; r < out.rows; ++r) {
    out.labels[r] = lbuf[r];
    max_label = std::max(max_label, out.labels[r]);
  }
  out.classes = max_label + 1;
  return out;
}

SplitIndices stratified_split(const std::vector<int>& labels, double fraction,
                              std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw std::invalid_argument("stratified_split: fraction must be in [0,1]");
  }
  int classes = 0;
  for (int l : labels) classes = std::max(classes, l + 1);
  std::vector<std::vector<int>> per_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) per_class[labels[i]].push_back(static_cast<int>(i));

  std::mt19937_64 rng(seed);
  SplitIndices out;
  for (auto& idx : per_class) {
    std::shuffle(idx.begin(), idx.end(), rng);
    const int take = static_cast<int>(std::lround(fraction * idx.size()));
    for (int i = 0; i < static_cast<int>(idx.size()); ++i) {
      (i < take ? out.holdout : out.remainder).push_back(idx[i]);
    }
  }
  std::sort(out.holdout.begin(), out.holdout.end());
  std::sort(out.remainder.begin(), out.remainder.end());
  return out;
}

RawDataset stratified_subset(const RawDataset& data, int max_rows, std::uint64_t seed) {
  if (max_rows <= 0 || max_rows >= data.rows) return data;
  const double fraction = static_cast<double>(max_rows) / data.rows;
  const SplitIndices split = stratified_split(data.labels, fraction, seed);

  RawDataset out;
  out.cols = data.cols;
  out.classes = data.classes;
  out.rows = static_cast<int>(split.holdout.size());
  out.features.resize(static_cast<std::size_t>(out.rows) * out.cols);
  out.labels.resize(out.rows);
  for (int r = 0; r < out.rows; ++r) {
    const int src = split.holdout[r];
    out.labels[r] = data.labels[src];
    std::copy_n(data.sample(src), out.cols, out.features.begin() + static_cast<std::size_t>(r) * out.cols);
  }
  return out;
}

}  // namespace fedqubo
