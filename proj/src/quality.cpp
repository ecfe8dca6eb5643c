#include "lacon/quality.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace lacon {

std::string_view attribute_name(Attribute a) {
  switch (a) {
    case Attribute::aes: return "aes";
    case Attribute::wat: return "wat";
    case Attribute::cla: return "cla";
    case Attribute::ent: return "ent";
    case Attribute::luma: return "luma";
  }
  return "?";
}

Attribute parse_attribute(std::string_view name) {
  for (Attribute a : kAllAttributes) {
    if (attribute_name(a) == name) return a;
  }
  throw std::invalid_argument("unknown attribute '" + std::string(name) +
                              "' (valid: aes, wat, cla, ent, luma)");
}

double QualityVector::operator[](Attribute a) const {
  switch (a) {
    case Attribute::aes: return s_aes;
    case Attribute::wat: return s_wat;
    case Attribute::cla: return s_cla;
    case Attribute::ent: return s_ent;
    case Attribute::luma: return s_luma;
  }
  return 0.0;
}

double& QualityVector::operator[](Attribute a) {
  switch (a) {
    case Attribute::aes: return s_aes;
    case Attribute::wat: return s_wat;
    case Attribute::cla: return s_cla;
    case Attribute::ent: return s_ent;
    case Attribute::luma: break;
  }
  return s_luma;
}

ValueRange declared_range(Attribute a) {
  switch (a) {
    case Attribute::aes: return {0.0, 10.0};
    case Attribute::wat: return {0.0, 1.0};
    case Attribute::cla: return {0.0, std::numeric_limits<double>::infinity()};
    case Attribute::ent: return {0.0, 8.0};
    case Attribute::luma: return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

bool within_declared_ranges(const QualityVector& q) {
  for (Attribute a : kAllAttributes) {
    const double v = q[a];
    if (std::isnan(v) || !declared_range(a).contains(v)) return false;
  }
  return true;
}

}  // namespace lacon
