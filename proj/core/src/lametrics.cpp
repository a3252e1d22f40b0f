#include "ruq/lametrics.hpp"

#include <cmath>

#include "numeric.hpp"

namespace ruq {

namespace {

std::size_t l1_norm(std::span<const std::uint8_t> c) {
  std::size_t s = 0;
  for (auto v : c) s += v;
  return s;
}

std::size_t dot(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  std::size_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] & b[i];
  return s;
}

void check_pair(std::span<const std::uint8_t> c, std::span<const std::uint8_t> c_star) {
  if (c.size() != c_star.size()) {
    throw ValidationError("class vector length mismatch: " + std::to_string(c.size()) +
                          " vs " + std::to_string(c_star.size()));
  }
  if (l1_norm(c) == 0) {
    throw ValidationError("empty class vector: metric undefined for a sample with no classes");
  }
}

void check_mask_pair(MaskView m, MaskView m_star) {
  if (m.height != m_star.height || m.width != m_star.width ||
      m.num_classes != m_star.num_classes) {
    throw ValidationError("mask shape mismatch");
  }
}

void check_patch_grid(MaskView m, std::size_t p) {
  if (p == 0) throw ValidationError("patch grid size p must be positive");
  if (m.height < p || m.width < p) {
    throw ValidationError("patch grid " + std::to_string(p) + "x" + std::to_string(p) +
                          " larger than mask side (" + std::to_string(m.height) + "x" +
                          std::to_string(m.width) + ")");
  }
}

std::vector<std::uint8_t> class_presence(MaskView m) {
  std::vector<std::uint8_t> present(m.num_classes, 0);
  for (std::size_t r = 0; r < m.height; ++r) {
    for (std::size_t c = 0; c < m.width; ++c) present[m.at(r, c)] = 1;
  }
  return present;
}

// Cell bounds for a p x p partition: floor-sized cells, the last row/column
// of cells absorbs the remainder so every pixel is counted exactly once.
struct Cell {
  std::size_t r0, r1, c0, c1;
};

Cell cell_bounds(MaskView m, std::size_t p, std::size_t i, std::size_t j) {
  const std::size_t cell_h = m.height / p;
  const std::size_t cell_w = m.width / p;
  Cell cell;
  cell.r0 = i * cell_h;
  cell.r1 = (i + 1 == p) ? m.height : (i + 1) * cell_h;
  cell.c0 = j * cell_w;
  cell.c1 = (j + 1 == p) ? m.width : (j + 1) * cell_w;
  return cell;
}

std::uint16_t majority_class(MaskView m, const Cell& cell) {
  std::vector<std::size_t> counts(m.num_classes, 0);
  for (std::size_t r = cell.r0; r < cell.r1; ++r) {
    for (std::size_t c = cell.c0; c < cell.c1; ++c) ++counts[m.at(r, c)];
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < counts.size(); ++k) {
    if (counts[k] > counts[best]) best = k;  // tie keeps the smallest class
  }
  return static_cast<std::uint16_t>(best);
}

std::vector<double> class_fractions(MaskView m, const Cell& cell) {
  std::vector<std::size_t> counts(m.num_classes, 0);
  std::size_t total = 0;
  for (std::size_t r = cell.r0; r < cell.r1; ++r) {
    for (std::size_t c = cell.c0; c < cell.c1; ++c) {
      ++counts[m.at(r, c)];
      ++total;
    }
  }
  std::vector<double> frac(m.num_classes);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    frac[k] = static_cast<double>(counts[k]) / static_cast<double>(total);
  }
  return frac;
}

Cell full_cell(MaskView m) { return Cell{0, m.height, 0, m.width}; }

}  // namespace

LAKind la_kind_from_string(const std::string& s) {
  if (s == "one") return LAKind::one;
  if (s == "all") return LAKind::all;
  if (s == "pct") return LAKind::pct;
  if (s == "seg_all") return LAKind::seg_all;
  if (s == "patches") return LAKind::patches;
  if (s == "pd") return LAKind::pd;
  if (s == "patches_pd") return LAKind::patches_pd;
  throw ValidationError("unknown LA kind \"" + s + "\"");
}

const char* to_string(LAKind kind) {
  switch (kind) {
    case LAKind::one: return "one";
    case LAKind::all: return "all";
    case LAKind::pct: return "pct";
    case LAKind::seg_all: return "seg_all";
    case LAKind::patches: return "patches";
    case LAKind::pd: return "pd";
    case LAKind::patches_pd: return "patches_pd";
  }
  return "?";
}

bool la_kind_is_binary(LAKind kind) {
  return kind == LAKind::one || kind == LAKind::all || kind == LAKind::seg_all ||
         kind == LAKind::patches;
}

bool la_kind_for_segmentation(LAKind kind) {
  return kind == LAKind::seg_all || kind == LAKind::patches || kind == LAKind::pd ||
         kind == LAKind::patches_pd;
}

std::size_t LAVector::excluded_count() const {
  std::size_t n = 0;
  for (auto v : included) n += v == 0;
  return n;
}

double LAVector::mean() const {
  std::vector<double> scored;
  scored.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (included[i]) scored.push_back(values[i]);
  }
  if (scored.empty()) {
    throw ValidationError("LA mean undefined: every sample was excluded");
  }
  return detail::pairwise_sum(scored) / static_cast<double>(scored.size());
}

MaskView mask_view(const SegMaskSet& set, std::size_t i) {
  return MaskView{set.mask(i), set.height, set.width, set.num_classes};
}

int one_la(std::span<const std::uint8_t> c, std::span<const std::uint8_t> c_star) {
  check_pair(c, c_star);
  return dot(c, c_star) > 0 ? 1 : 0;
}

int all_la(std::span<const std::uint8_t> c, std::span<const std::uint8_t> c_star) {
  check_pair(c, c_star);
  return dot(c, c_star) == l1_norm(c) ? 1 : 0;
}

double pct_la(std::span<const std::uint8_t> c, std::span<const std::uint8_t> c_star) {
  check_pair(c, c_star);
  return static_cast<double>(dot(c, c_star)) / static_cast<double>(l1_norm(c));
}

int seg_all_la(MaskView m, MaskView m_star) {
  check_mask_pair(m, m_star);
  const auto c = class_presence(m);
  const auto c_star = class_presence(m_star);
  return all_la(c, c_star);
}

int patches_la(MaskView m, MaskView m_star, std::size_t p) {
  check_mask_pair(m, m_star);
  check_patch_grid(m, p);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const Cell cell = cell_bounds(m, p, i, j);
      if (majority_class(m, cell) != majority_class(m_star, cell)) return 0;
    }
  }
  return 1;
}

double hellinger(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ValidationError("distribution length mismatch: " + std::to_string(a.size()) +
                          " vs " + std::to_string(b.size()));
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] < 0.0 || b[i] < 0.0) {
      throw ValidationError("negative entry in probability vector");
    }
    sum_a += a[i];
    sum_b += b[i];
  }
  if (std::abs(sum_a - 1.0) > 1e-9 || std::abs(sum_b - 1.0) > 1e-9) {
    throw ValidationError("probability vector does not sum to 1 within 1e-9");
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::sqrt(a[i]) - std::sqrt(b[i]);
    acc += diff * diff;
  }
  const double hd = std::sqrt(0.5 * acc);
  return hd > 1.0 ? 1.0 : hd;  // guard rounding just above 1
}

double pd_la(MaskView m, MaskView m_star) {
  check_mask_pair(m, m_star);
  const auto pa = class_fractions(m, full_cell(m));
  const auto pb = class_fractions(m_star, full_cell(m_star));
  return 1.0 - hellinger(pa, pb);
}

double patches_pd_la(MaskView m, MaskView m_star, std::size_t p) {
  check_mask_pair(m, m_star);
  check_patch_grid(m, p);
  double acc = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      const Cell cell = cell_bounds(m, p, i, j);
      acc += hellinger(class_fractions(m, cell), class_fractions(m_star, cell));
    }
  }
  return 1.0 - acc / static_cast<double>(p * p);
}

namespace {

template <typename Score>
LAVector run_dataset_la(std::size_t n, const NeighborIndex& neighbors, LAKind kind,
                        std::size_t p, const Score& score_pair) {
  if (neighbors.count() != n) {
    throw ValidationError("count mismatch: " + std::to_string(n) + " labels vs " +
                          std::to_string(neighbors.count()) + " neighbor entries");
  }
  LAVector out;
  out.kind = kind;
  out.p = p;
  out.values.assign(n, 0.0);
  out.included.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    score_pair(i, neighbors.nn[i], out);
  }
  const std::size_t excluded = out.excluded_count();
  if (2 * excluded > n) {
    throw ValidationError("more than half of the samples (" + std::to_string(excluded) +
                          " of " + std::to_string(n) +
                          ") have empty class vectors; the metric mean is meaningless");
  }
  return out;
}

}  // namespace

LAVector dataset_la(const MultiLabelSet& labels, const NeighborIndex& neighbors, LAKind kind,
                    std::size_t p) {
  if (la_kind_for_segmentation(kind)) {
    throw ValidationError(std::string("LA kind \"") + to_string(kind) +
                          "\" requires segmentation masks, got multi-label vectors");
  }
  const std::size_t k = labels.num_classes;
  return run_dataset_la(
      labels.count, neighbors, kind, p,
      [&](std::size_t i, std::size_t j, LAVector& out) {
        const std::span<const std::uint8_t> c{labels.row(i), k};
        const std::span<const std::uint8_t> c_star{labels.row(j), k};
        if (l1_norm(c) == 0) {
          out.included[i] = 0;
          return;
        }
        switch (kind) {
          case LAKind::one: out.values[i] = one_la(c, c_star); break;
          case LAKind::all: out.values[i] = all_la(c, c_star); break;
          case LAKind::pct: out.values[i] = pct_la(c, c_star); break;
          default: break;
        }
      });
}

LAVector dataset_la(const SegMaskSet& labels, const NeighborIndex& neighbors, LAKind kind,
                    std::size_t p) {
  if (!la_kind_for_segmentation(kind)) {
    throw ValidationError(std::string("LA kind \"") + to_string(kind) +
                          "\" requires multi-label vectors, got segmentation masks");
  }
  return run_dataset_la(
      labels.count, neighbors, kind, p,
      [&](std::size_t i, std::size_t j, LAVector& out) {
        const MaskView m = mask_view(labels, i);
        const MaskView m_star = mask_view(labels, j);
        switch (kind) {
          case LAKind::seg_all: out.values[i] = seg_all_la(m, m_star); break;
          case LAKind::patches: out.values[i] = patches_la(m, m_star, p); break;
          case LAKind::pd: out.values[i] = pd_la(m, m_star); break;
          case LAKind::patches_pd: out.values[i] = patches_pd_la(m, m_star, p); break;
          default: break;
        }
      });
}

}  // namespace ruq
