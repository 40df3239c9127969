#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "latentprobe/matrix.hpp"
#include "latentprobe/time.hpp"

namespace latentprobe {

enum class Units { celsius, kelvin, percent, k_index, fraction };

std::string_view units_tag(Units u);
Units parse_units(std::string_view tag);

/// A 2-D scalar field (lat x lon) of one variable at one level and time.
///
/// `level_hpa` is empty for surface and column-integrated quantities, `time`
/// is empty for static fields such as the land-sea mask.
struct FieldGrid {
  std::string variable;
  Units units = Units::fraction;
  std::optional<int> level_hpa;
  std::optional<UtcInstant> time;
  Matrix values;

  Eigen::Index n_lat() const { return values.rows(); }
  Eigen::Index n_lon() const { return values.cols(); }
};

/// Short label such as "t@850" or "lsm@surface" for messages and provenance.
std::string describe(const FieldGrid& f);

}  // namespace latentprobe
