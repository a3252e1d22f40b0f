#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ruq/datamodel.hpp"
#include "ruq/retrieval.hpp"

namespace ruq {

// The label-agreement metric family. one/all/pct apply to multi-label class
// vectors; seg_all/patches/pd/patches_pd apply to segmentation masks.
enum class LAKind { one, all, pct, seg_all, patches, pd, patches_pd };

LAKind la_kind_from_string(const std::string& s);
const char* to_string(LAKind kind);
bool la_kind_is_binary(LAKind kind);
bool la_kind_for_segmentation(LAKind kind);

// Per-sample label agreement against the nearest neighbor. Samples whose own
// class vector is empty are excluded from the mean instead of being scored.
struct LAVector {
  LAKind kind = LAKind::pct;
  std::size_t p = 3;  // patch grid size, meaningful for patch kinds
  std::vector<double> values;          // 0 where excluded
  std::vector<std::uint8_t> included;  // 1 = scored, 0 = excluded

  std::size_t count() const { return values.size(); }
  std::size_t excluded_count() const;
  // Mean over included samples, pairwise-summed for a fixed reduction order.
  double mean() const;
};

// Non-owning view of one segmentation mask.
struct MaskView {
  const std::uint16_t* data = nullptr;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t num_classes = 0;

  std::uint16_t at(std::size_t r, std::size_t c) const { return data[r * width + c]; }
};

MaskView mask_view(const SegMaskSet& set, std::size_t i);

// Multi-label agreement between a sample's class vector c and its neighbor's
// c*. All three throw ValidationError when c is all-zero (the formulas are
// undefined there; dataset_la excludes such samples instead).
int one_la(std::span<const std::uint8_t> c, std::span<const std::uint8_t> c_star);
int all_la(std::span<const std::uint8_t> c, std::span<const std::uint8_t> c_star);
double pct_la(std::span<const std::uint8_t> c, std::span<const std::uint8_t> c_star);

// Segmentation agreement.
int seg_all_la(MaskView m, MaskView m_star);
int patches_la(MaskView m, MaskView m_star, std::size_t p);
double pd_la(MaskView m, MaskView m_star);
double patches_pd_la(MaskView m, MaskView m_star, std::size_t p);

// sqrt(1/2 * sum (sqrt(a_i) - sqrt(b_i))^2) for two probability vectors.
// Requires non-negative entries each summing to 1 within 1e-9.
double hellinger(std::span<const double> a, std::span<const double> b);

// Dataset-level LA@1: scores every sample against labels[nn[i]]. Errors out
// when more than half of the samples are excluded.
LAVector dataset_la(const MultiLabelSet& labels, const NeighborIndex& neighbors, LAKind kind,
                    std::size_t p = 3);
LAVector dataset_la(const SegMaskSet& labels, const NeighborIndex& neighbors, LAKind kind,
                    std::size_t p = 3);

}  // namespace ruq
