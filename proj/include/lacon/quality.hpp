#pragma once

#include <array>
#include <cstddef>
#include <string_view>

namespace lacon {

enum class Attribute : int { aes = 0, wat = 1, cla = 2, ent = 3, luma = 4 };

inline constexpr std::size_t kNumAttributes = 5;
inline constexpr std::array<Attribute, kNumAttributes> kAllAttributes{
    Attribute::aes, Attribute::wat, Attribute::cla, Attribute::ent, Attribute::luma};

constexpr std::size_t index_of(Attribute a) { return static_cast<std::size_t>(a); }

std::string_view attribute_name(Attribute a);

// Throws std::invalid_argument listing the valid names.
Attribute parse_attribute(std::string_view name);

// The five-dimensional attribute label attached to every sample.
struct QualityVector {
  double s_aes = 0.0;   // aesthetic score, [0, 10]
  double s_wat = 0.0;   // watermark probability, [0, 1]
  double s_cla = 0.0;   // Laplacian variance in 8-bit intensity² units, >= 0
  double s_ent = 0.0;   // histogram entropy in bits, [0, 8]
  double s_luma = 0.0;  // mean HSV value, [0, 1]

  double operator[](Attribute a) const;
  double& operator[](Attribute a);

  bool operator==(const QualityVector&) const = default;
};

struct ValueRange {
  double lo;
  double hi;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Declared value range of each field; clarity is unbounded above.
ValueRange declared_range(Attribute a);

bool within_declared_ranges(const QualityVector& q);

}  // namespace lacon
