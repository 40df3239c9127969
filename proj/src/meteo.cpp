#include "latentprobe/meteo.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "latentprobe/error.hpp"

namespace latentprobe {

namespace {

constexpr double kA = MagnusCoefficients::a;
constexpr double kB = MagnusCoefficients::b;

void require_same_grid(const FieldGrid& ref, const FieldGrid& other) {
  if (ref.values.rows() != other.values.rows() || ref.values.cols() != other.values.cols()) {
    throw ValidationError(fmt::format("shape mismatch: {} is {}x{}, {} is {}x{}", describe(ref),
                                      ref.n_lat(), ref.n_lon(), describe(other), other.n_lat(),
                                      other.n_lon()));
  }
  if (ref.time != other.time) {
    throw ValidationError(fmt::format("time mismatch between {} and {}", describe(ref), describe(other)));
  }
}

void require_units(const FieldGrid& f, Units u) {
  if (f.units != u) {
    throw ValidationError(fmt::format("{}: expected units {}, got {}", describe(f), units_tag(u),
                                      units_tag(f.units)));
  }
}

}  // namespace

double dew_point(double t, double rh) {
  if (!std::isfinite(t) || !std::isfinite(rh)) throw DomainError("dew_point: non-finite input");
  if (rh <= 0.0) throw DomainError(fmt::format("dew_point: rh = {} <= 0", rh));
  if (rh > 100.0) throw DomainError(fmt::format("dew_point: rh = {} > 100", rh));
  if (t <= -kB) throw DomainError(fmt::format("dew_point: t = {} <= -{}", t, kB));

  // Td = b*phi/(a - phi) with phi = ln(rh/100) + a*t/(b + t), rearranged as
  // t + L(b+t)^2 / (ab - L(b+t)) with L = ln(rh/100) <= 0. The correction is
  // non-positive, so Td <= t holds in floating point and rh = 100 gives t exactly.
  const double log_rh = std::log(rh / 100.0);
  const double bt = kB + t;
  const double denom = kA * kB - log_rh * bt;
  return t + log_rh * bt * bt / denom;
}

double relative_humidity(double t, double td) {
  if (t <= -kB || td <= -kB) throw DomainError("relative_humidity: temperature <= -b");
  return 100.0 * std::exp(kA * td / (kB + td) - kA * t / (kB + t));
}

double k_index(double t850, double t700, double t500, double td850, double td700) {
  if (!std::isfinite(t850) || !std::isfinite(t700) || !std::isfinite(t500) ||
      !std::isfinite(td850) || !std::isfinite(td700)) {
    throw DomainError("k_index: non-finite input");
  }
  return (t850 - t500) + td850 - (t700 - td700);
}

FieldGrid to_celsius(FieldGrid f) {
  if (f.units == Units::kelvin) {
    f.values.array() -= kKelvinOffset;
    f.units = Units::celsius;
  }
  return f;
}

FieldGrid dew_point_field(const FieldGrid& t, const FieldGrid& rh) {
  require_same_grid(t, rh);
  require_units(t, Units::celsius);
  require_units(rh, Units::percent);
  FieldGrid out{"td", Units::celsius, t.level_hpa, t.time, Matrix(t.n_lat(), t.n_lon())};
  for (Eigen::Index i = 0; i < t.n_lat(); ++i) {
    for (Eigen::Index j = 0; j < t.n_lon(); ++j) {
      try {
        out.values(i, j) = dew_point(t.values(i, j), rh.values(i, j));
      } catch (const DomainError& e) {
        throw DomainError(fmt::format("{} at cell ({},{}) of {}", e.what(), i, j, describe(rh)));
      }
    }
  }
  return out;
}

FieldGrid k_index_field(const FieldGrid& t850, const FieldGrid& t700, const FieldGrid& t500,
                        const FieldGrid& rh850, const FieldGrid& rh700) {
  for (const auto* f : {&t700, &t500, &rh850, &rh700}) require_same_grid(t850, *f);
  const FieldGrid td850 = dew_point_field(t850, rh850);
  const FieldGrid td700 = dew_point_field(t700, rh700);
  require_units(t500, Units::celsius);

  FieldGrid out{"kindex", Units::k_index, std::nullopt, t850.time, Matrix(t850.n_lat(), t850.n_lon())};
  for (Eigen::Index i = 0; i < out.n_lat(); ++i) {
    for (Eigen::Index j = 0; j < out.n_lon(); ++j) {
      try {
        out.values(i, j) = k_index(t850.values(i, j), t700.values(i, j), t500.values(i, j),
                                   td850.values(i, j), td700.values(i, j));
      } catch (const DomainError& e) {
        throw DomainError(fmt::format("{} at cell ({},{})", e.what(), i, j));
      }
    }
  }
  return out;
}

double percentile_threshold(std::span<const double> samples, double p) {
  if (samples.empty()) throw ValidationError("percentile_threshold: empty sample");
  if (!(p > 0.0 && p < 100.0)) {
    throw ValidationError(fmt::format("percentile_threshold: p = {} outside (0,100)", p));
  }
  if (std::any_of(samples.begin(), samples.end(), [](double v) { return std::isnan(v); })) {
    throw ValidationError("percentile_threshold: NaN in sample");
  }
  const auto n = samples.size();
  // p*n/100 is exact for integral p and moderate n; the slack absorbs
  // representation error for fractional p such as 99.9.
  const double exact = p * static_cast<double>(n) / 100.0;
  auto rank = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  rank = std::clamp<std::size_t>(rank, 1, n);

  std::vector<double> sorted(samples.begin(), samples.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(rank - 1), sorted.end());
  return sorted[rank - 1];
}

nlohmann::json MaskProvenance::to_json() const {
  nlohmann::json j{{"source", source},
                   {"threshold", threshold},
                   {"comparison", ">"},
                   {"regrid_rule", regrid_rule},
                   {"regrid_factor", regrid_factor}};
  if (percentile) j["percentile"] = *percentile;
  if (!reference.empty()) j["reference"] = reference;
  return j;
}

ConceptMask threshold_mask(const FieldGrid& field, double threshold) {
  if (std::isnan(threshold)) throw ValidationError("threshold_mask: NaN threshold");
  ConceptMask m;
  m.values = (field.values.array() > threshold).cast<std::uint8_t>();
  m.provenance.source = describe(field);
  m.provenance.threshold = threshold;
  return m;
}

ConceptMask regrid_mask(const ConceptMask& mask, std::size_t factor) {
  if (factor < 1) throw ValidationError("regrid_mask: factor must be >= 1");
  const auto f = static_cast<Eigen::Index>(factor);
  const auto rows = mask.values.rows();
  const auto cols = mask.values.cols();
  if (rows % f != 0 || cols % f != 0) {
    throw ValidationError(fmt::format("regrid_mask: {}x{} mask not divisible by factor {}", rows,
                                      cols, factor));
  }
  ConceptMask out;
  out.provenance = mask.provenance;
  out.provenance.regrid_rule = "majority, ties->1";
  out.provenance.regrid_factor = mask.provenance.regrid_factor * factor;
  out.values.resize(rows / f, cols / f);
  const auto block = f * f;
  for (Eigen::Index i = 0; i < out.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.values.cols(); ++j) {
      const auto count = mask.values.block(i * f, j * f, f, f).cast<Eigen::Index>().sum();
      out.values(i, j) = 2 * count >= block ? 1 : 0;
    }
  }
  return out;
}

}  // namespace latentprobe
