#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "gcx/decimal.hpp"

namespace gcx {

/// Count of floating-point operations. Unsigned 128-bit; overflow is an error.
using Flops = uint128;

/// Benchmarked baseline whose performance defines one compute hour per
/// operational hour.
struct ReferenceSystem {
  std::string id;
  Decimal reference_performance;  // FLOPS
  Decimal reference_efficiency;   // FLOPS per watt
  std::string benchmark_suite;
  std::int64_t version = 1;

  void validate() const;

  /// Copy with new numeric fields; the version is bumped only if a value changed.
  ReferenceSystem updated(Decimal performance, Decimal efficiency) const;
};

/// Measured characteristics of one provider's system. Benchmark numbers are
/// always inputs here, never measured by the library.
struct SystemProfile {
  std::string provider_id;
  Decimal measured_performance;  // FLOPS
  std::optional<Decimal> measured_power;  // watts
  Decimal uptime_pct;
  std::optional<Decimal> mtbf_hours;
  std::optional<Decimal> mttr_hours;
  std::optional<Decimal> utilization_pct;

  void validate() const;
};

/// Normalized unit of traded work.
class ComputeHours {
 public:
  constexpr ComputeHours() = default;
  explicit ComputeHours(Decimal value);

  Decimal value() const { return value_; }
  std::string str() const { return value_.str(); }

  ComputeHours& operator+=(ComputeHours rhs);
  friend ComputeHours operator+(ComputeHours a, ComputeHours b) { return a += b; }
  friend bool operator==(ComputeHours, ComputeHours) = default;
  friend auto operator<=>(ComputeHours a, ComputeHours b) { return a.value_ <=> b.value_; }

 private:
  Decimal value_;
};

struct ConvLayerSpec {
  std::uint64_t input_height = 1;
  std::uint64_t input_width = 1;
  std::uint64_t input_channels = 1;
  std::uint64_t output_channels = 1;
  std::uint64_t kernel_height = 1;
  std::uint64_t kernel_width = 1;
  std::uint64_t output_height = 1;
  std::uint64_t output_width = 1;

  void validate() const;
};

struct TrainingJobSpec {
  Flops model_flops_per_forward = 0;
  std::uint64_t dataset_samples = 0;
  std::uint64_t batch_size = 1;
  std::uint64_t epochs = 0;
  std::optional<Decimal> deadline_hours;
};

enum class FlopsMode {
  standard,      // 2 * kh * kw * cin * cout * oh * ow
  input_scaled,  // standard count additionally multiplied by ih * iw
};

enum class PerformanceGrade { A, B, C, D };
enum class ReliabilityGrade { R1 = 1, R2 = 2, R3 = 3, R4 = 4 };
enum class EnergyGrade { X, Y, Z };

struct GradeTriple {
  PerformanceGrade performance = PerformanceGrade::D;
  ReliabilityGrade reliability = ReliabilityGrade::R4;
  EnergyGrade energy = EnergyGrade::Z;

  /// True when every component is at least as good as the floor's.
  bool meets(const GradeTriple& floor) const;

  /// Compact form such as "C2Y".
  std::string str() const;
  static GradeTriple parse(std::string_view text);

  friend bool operator==(const GradeTriple&, const GradeTriple&) = default;
};

/// Uptime bands. Grade 1 is strictly above `excellent_above`; the lower bounds
/// of grades 2 and 3 are inclusive.
struct ReliabilityBands {
  Decimal excellent_above = Decimal::parse("99.9");
  Decimal good_from = Decimal::parse("99.0");
  Decimal fair_from = Decimal::parse("95.0");
};

struct GradingPolicy {
  // performance ratio measured / reference
  Decimal perf_a = Decimal::parse("1.5");
  Decimal perf_b = Decimal::parse("1.1");
  Decimal perf_c = Decimal::parse("0.9");
  // efficiency ratio (performance / power) / reference efficiency
  Decimal energy_x = Decimal::parse("1.25");
  Decimal energy_y = Decimal::parse("0.75");
  ReliabilityBands reliability;
};

struct GradeResult {
  GradeTriple grade;
  bool energy_defaulted = false;  // no power measurement; energy forced to Z
};

struct RequiredRate {
  Decimal flops_per_second;
  ComputeHours compute_hours;
};

ComputeHours compute_hours(const SystemProfile& profile, const ReferenceSystem& ref, Decimal operational_hours);
ComputeHours compute_hours(Decimal performance, const ReferenceSystem& ref, Decimal operational_hours);

Flops conv_layer_flops(const ConvLayerSpec& layer, FlopsMode mode = FlopsMode::standard);
Flops training_flops(const TrainingJobSpec& job);
RequiredRate required_rate(const TrainingJobSpec& job, const ReferenceSystem& ref);

ReliabilityGrade reliability_grade(Decimal uptime_pct, const ReliabilityBands& bands = {});
GradeResult grade(const SystemProfile& profile, const ReferenceSystem& ref, const GradingPolicy& policy = {});

/// "3.90625e16": exact, trailing zeros removed.
std::string format_flops_scientific(Flops flops);
/// "39 PFLOPs": nearest whole unit of the largest fitting SI prefix.
std::string format_flops_si(Flops flops);
Flops parse_flops(std::string_view text);

std::string_view to_string(FlopsMode mode);
FlopsMode parse_flops_mode(std::string_view text);

}  // namespace gcx
