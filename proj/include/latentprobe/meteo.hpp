#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "latentprobe/field.hpp"

namespace latentprobe {

/// Magnus coefficients for saturation vapour pressure over water, referenced
/// to degrees Celsius.
struct MagnusCoefficients {
  static constexpr double a = 17.625;
  static constexpr double b = 243.04;
};

/// K-index class cutoffs used for the low and high instability concepts.
inline constexpr double kKIndexLowCutoff = 20.0;
inline constexpr double kKIndexHighCutoff = 35.0;

inline constexpr double kKelvinOffset = 273.15;

/// Dew point (degC) from temperature (degC) and relative humidity (percent).
///
/// Requires 0 < rh <= 100 and t > -b. The result never exceeds `t` and equals
/// it exactly at rh = 100. Throws DomainError outside the domain.
double dew_point(double t, double rh);

/// Inverse Magnus relation: relative humidity (percent) for a temperature and
/// dew point pair.
double relative_humidity(double t, double td);

/// K = (T850 - T500) + Td850 - (T700 - Td700), all in degC.
double k_index(double t850, double t700, double t500, double td850, double td700);

/// Returns a copy with Kelvin temperatures converted to degC; other units pass through.
FieldGrid to_celsius(FieldGrid f);

/// Elementwise dew point. Domain errors report the offending cell.
FieldGrid dew_point_field(const FieldGrid& t, const FieldGrid& rh);

/// Elementwise K-index from temperature at 850/700/500 hPa and relative
/// humidity at 850/700 hPa. Inputs must share shape and time.
FieldGrid k_index_field(const FieldGrid& t850, const FieldGrid& t700, const FieldGrid& t500,
                        const FieldGrid& rh850, const FieldGrid& rh700);

/// Nearest-rank percentile: the sorted sample at rank ceil(p/100 * n), 0 < p < 100.
double percentile_threshold(std::span<const double> samples, double p);

using MaskMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MaskProvenance {
  std::string source;
  double threshold = 0.0;
  std::optional<double> percentile;
  std::string reference;
  std::string regrid_rule = "none";
  std::size_t regrid_factor = 1;

  nlohmann::json to_json() const;
};

struct ConceptMask {
  MaskMatrix values;
  MaskProvenance provenance;
};

/// Cell is 1 iff value > threshold (strict).
ConceptMask threshold_mask(const FieldGrid& field, double threshold);

/// Majority pooling over factor x factor blocks; ties become 1.
ConceptMask regrid_mask(const ConceptMask& mask, std::size_t factor);

}  // namespace latentprobe
