#include "gcx/compute_units.hpp"

#include <array>

#include "gcx/error.hpp"

namespace gcx {
namespace {

Flops checked_mul(Flops a, Flops b) {
  Flops r;
  if (__builtin_mul_overflow(a, b, &r)) throw Error(ErrorCode::Overflow, "FLOPs count exceeds 128-bit range");
  return r;
}

void require_non_negative(const std::optional<Decimal>& v, const char* name) {
  if (v && v->is_negative()) throw Error(ErrorCode::InvalidArgument, std::string(name) + " must be non-negative");
}

// num / den >= threshold, decided exactly on raw values so grading does not
// depend on the common scale of num and den.
bool ratio_at_least(Decimal num, Decimal den, Decimal threshold) {
  return compare_products(num, Decimal(1), threshold, den) >= 0;
}

}  // namespace

void ReferenceSystem::validate() const {
  if (!reference_performance.is_positive())
    throw Error(ErrorCode::NonPositiveReference, "reference performance must be > 0");
  if (!reference_efficiency.is_positive())
    throw Error(ErrorCode::NonPositiveReference, "reference efficiency must be > 0");
}

ReferenceSystem ReferenceSystem::updated(Decimal performance, Decimal efficiency) const {
  ReferenceSystem next = *this;
  next.reference_performance = performance;
  next.reference_efficiency = efficiency;
  if (performance != reference_performance || efficiency != reference_efficiency) ++next.version;
  next.validate();
  return next;
}

void SystemProfile::validate() const {
  if (measured_performance.is_negative())
    throw Error(ErrorCode::InvalidArgument, "measured performance must be non-negative");
  if (measured_power && !measured_power->is_positive())
    throw Error(ErrorCode::InvalidArgument, "measured power must be > 0");
  if (uptime_pct.is_negative() || uptime_pct > Decimal(100))
    throw Error(ErrorCode::InvalidArgument, "uptime must lie in [0, 100]");
  require_non_negative(mtbf_hours, "mtbf_hours");
  require_non_negative(mttr_hours, "mttr_hours");
  if (utilization_pct && (utilization_pct->is_negative() || *utilization_pct > Decimal(100)))
    throw Error(ErrorCode::InvalidArgument, "utilization must lie in [0, 100]");
}

ComputeHours::ComputeHours(Decimal value) : value_(value) {
  if (value.is_negative()) throw Error(ErrorCode::InvalidArgument, "compute hours must be non-negative");
}

ComputeHours& ComputeHours::operator+=(ComputeHours rhs) {
  value_ += rhs.value_;
  return *this;
}

void ConvLayerSpec::validate() const {
  const std::array<std::uint64_t, 8> dims{input_height,   input_width, input_channels, output_channels,
                                          kernel_height, kernel_width, output_height,  output_width};
  for (auto d : dims)
    if (d < 1) throw Error(ErrorCode::InvalidArgument, "conv layer dimensions must be >= 1");
}

ComputeHours compute_hours(Decimal performance, const ReferenceSystem& ref, Decimal operational_hours) {
  if (!ref.reference_performance.is_positive())
    throw Error(ErrorCode::NonPositiveReference, "reference performance must be > 0");
  if (operational_hours.is_negative()) throw Error(ErrorCode::NegativeHours, "operational hours must be >= 0");
  if (performance.is_negative()) throw Error(ErrorCode::InvalidArgument, "performance must be >= 0");
  return ComputeHours(Decimal::mul_div(performance, operational_hours, ref.reference_performance));
}

ComputeHours compute_hours(const SystemProfile& profile, const ReferenceSystem& ref, Decimal operational_hours) {
  return compute_hours(profile.measured_performance, ref, operational_hours);
}

Flops conv_layer_flops(const ConvLayerSpec& layer, FlopsMode mode) {
  layer.validate();
  Flops total = 2;
  for (std::uint64_t f : {layer.kernel_height, layer.kernel_width, layer.input_channels, layer.output_channels,
                          layer.output_height, layer.output_width})
    total = checked_mul(total, f);
  if (mode == FlopsMode::input_scaled) {
    total = checked_mul(total, layer.input_height);
    total = checked_mul(total, layer.input_width);
  }
  return total;
}

Flops training_flops(const TrainingJobSpec& job) {
  if (job.batch_size == 0) throw Error(ErrorCode::ZeroBatch, "batch size must be >= 1");
  // model * (samples / batch) * epochs with the quotient kept exact: one
  // half-even rounding of the full numerator over batch.
  const Flops numerator = checked_mul(checked_mul(job.model_flops_per_forward, job.dataset_samples), job.epochs);
  const Flops batch = job.batch_size;
  Flops q = numerator / batch;
  const Flops r = numerator % batch;
  if (2 * r > batch || (2 * r == batch && (q & 1))) ++q;
  return q;
}

RequiredRate required_rate(const TrainingJobSpec& job, const ReferenceSystem& ref) {
  if (!job.deadline_hours) throw Error(ErrorCode::MissingDeadline, "job has no deadline");
  if (!job.deadline_hours->is_positive()) throw Error(ErrorCode::InvalidArgument, "deadline must be > 0 hours");
  const Flops total = training_flops(job);
  if (total > static_cast<Flops>(static_cast<int128>(~static_cast<uint128>(0) >> 1) / Decimal::kScale))
    throw Error(ErrorCode::Overflow, "FLOPs total too large for rate computation");
  const Decimal flops = Decimal::from_raw(static_cast<int128>(total) * Decimal::kScale);
  const Decimal seconds = *job.deadline_hours * Decimal(3600);
  const Decimal rate = flops / seconds;
  return {rate, compute_hours(rate, ref, *job.deadline_hours)};
}

ReliabilityGrade reliability_grade(Decimal uptime_pct, const ReliabilityBands& bands) {
  if (uptime_pct > bands.excellent_above) return ReliabilityGrade::R1;
  if (uptime_pct >= bands.good_from) return ReliabilityGrade::R2;
  if (uptime_pct >= bands.fair_from) return ReliabilityGrade::R3;
  return ReliabilityGrade::R4;
}

GradeResult grade(const SystemProfile& profile, const ReferenceSystem& ref, const GradingPolicy& policy) {
  profile.validate();
  ref.validate();
  GradeResult result;
  const Decimal perf = profile.measured_performance;
  const Decimal refp = ref.reference_performance;
  if (ratio_at_least(perf, refp, policy.perf_a)) {
    result.grade.performance = PerformanceGrade::A;
  } else if (ratio_at_least(perf, refp, policy.perf_b)) {
    result.grade.performance = PerformanceGrade::B;
  } else if (ratio_at_least(perf, refp, policy.perf_c)) {
    result.grade.performance = PerformanceGrade::C;
  } else {
    result.grade.performance = PerformanceGrade::D;
  }

  result.grade.reliability = reliability_grade(profile.uptime_pct, policy.reliability);

  if (!profile.measured_power) {
    result.grade.energy = EnergyGrade::Z;
    result.energy_defaulted = true;
  } else {
    const Decimal efficiency = perf / *profile.measured_power;
    const Decimal den = ref.reference_efficiency;
    if (ratio_at_least(efficiency, den, policy.energy_x)) {
      result.grade.energy = EnergyGrade::X;
    } else if (ratio_at_least(efficiency, den, policy.energy_y)) {
      result.grade.energy = EnergyGrade::Y;
    } else {
      result.grade.energy = EnergyGrade::Z;
    }
  }
  return result;
}

bool GradeTriple::meets(const GradeTriple& floor) const {
  return static_cast<int>(performance) <= static_cast<int>(floor.performance) &&
         static_cast<int>(reliability) <= static_cast<int>(floor.reliability) &&
         static_cast<int>(energy) <= static_cast<int>(floor.energy);
}

std::string GradeTriple::str() const {
  std::string out;
  out.push_back(static_cast<char>('A' + static_cast<int>(performance)));
  out.push_back(static_cast<char>('0' + static_cast<int>(reliability)));
  out.push_back(static_cast<char>('X' + static_cast<int>(energy)));
  return out;
}

GradeTriple GradeTriple::parse(std::string_view text) {
  if (text.size() != 3 || text[0] < 'A' || text[0] > 'D' || text[1] < '1' || text[1] > '4' || text[2] < 'X' ||
      text[2] > 'Z')
    throw Error(ErrorCode::Parse, "grade must look like 'C2Y': '" + std::string(text) + "'");
  GradeTriple g;
  g.performance = static_cast<PerformanceGrade>(text[0] - 'A');
  g.reliability = static_cast<ReliabilityGrade>(text[1] - '0');
  g.energy = static_cast<EnergyGrade>(text[2] - 'X');
  return g;
}

std::string format_flops_scientific(Flops flops) {
  const std::string digits = to_string_u128(flops);
  if (flops == 0) return "0";
  const std::size_t exponent = digits.size() - 1;
  std::string mantissa = digits.substr(0, 1);
  std::string rest = digits.substr(1);
  while (!rest.empty() && rest.back() == '0') rest.pop_back();
  if (!rest.empty()) mantissa += "." + rest;
  if (exponent == 0) return mantissa;
  return mantissa + "e" + std::to_string(exponent);
}

std::string format_flops_si(Flops flops) {
  static constexpr std::array<const char*, 7> kPrefixes{"", "K", "M", "G", "T", "P", "E"};
  std::size_t idx = 0;
  Flops unit = 1;
  while (idx + 1 < kPrefixes.size() && flops / (unit * 1000) >= 1) {
    unit *= 1000;
    ++idx;
  }
  Flops q = flops / unit;
  const Flops r = flops % unit;
  if (2 * r > unit || (2 * r == unit && (q & 1))) ++q;
  return to_string_u128(q) + " " + kPrefixes[idx] + "FLOPs";
}

Flops parse_flops(std::string_view text) {
  const Decimal d = Decimal::parse(text);
  if (d.is_negative() || !d.is_multiple_of(Decimal(1)))
    throw Error(ErrorCode::Parse, "FLOPs must be a non-negative integer: '" + std::string(text) + "'");
  return static_cast<Flops>(d.raw() / Decimal::kScale);
}

std::string_view to_string(FlopsMode mode) {
  return mode == FlopsMode::standard ? "standard" : "input_scaled";
}

FlopsMode parse_flops_mode(std::string_view text) {
  if (text == "standard") return FlopsMode::standard;
  if (text == "input_scaled") return FlopsMode::input_scaled;
  throw Error(ErrorCode::Parse, "unknown FLOPs mode '" + std::string(text) + "'");
}

}  // namespace gcx
