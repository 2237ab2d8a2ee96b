#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "flydram/geometry.hpp"
#include "flydram/kvconfig.hpp"
#include "flydram/units.hpp"

namespace flydram {

/// Piecewise-linear map from latency deficit to the probability that a
/// stored 0 reads back as 1. An implicit (0, 0) knot anchors the curve; past
/// the last knot the value is held.
class BerCurve {
 public:
  struct Knot {
    Picos deficit;
    double p;
    friend bool operator==(const Knot&, const Knot&) = default;
  };

  BerCurve() = default;
  explicit BerCurve(std::vector<Knot> knots);

  double at(Picos deficit) const;
  const std::vector<Knot>& knots() const { return knots_; }

  /// "2.5ns:0.0025, 5ns:0.05"
  static BerCurve parse(std::string_view text);
  std::string render() const;

  friend bool operator==(const BerCurve&, const BerCurve&) = default;

 private:
  std::vector<Knot> knots_;
};

enum class ClusterShape {
  ColumnMajor,  // slow entries line up on the same index across banks
  RowBand,      // slow entries form contiguous index bands
  BankSkew,     // slow entries concentrate in a few banks
};

std::string_view to_string(ClusterShape shape);
ClusterShape parse_cluster_shape(std::string_view text);

struct Clustering {
  ClusterShape shape = ClusterShape::ColumnMajor;
  /// Weight of per-entry noise versus the shape's structured score, in [0, 1].
  double jitter = 0.1;
  /// Number of contiguous bands for RowBand.
  std::uint32_t bands = 4;
  /// Exponent sharpening the bank preference for BankSkew (>= 0).
  double bank_skew = 2.0;

  friend bool operator==(const Clustering&, const Clustering&) = default;
};

/// Optional additive tRCD penalty for a contiguous band of rows (applies to
/// every column in every bank).
struct RowBandOffset {
  double start_frac = 0.0;
  double end_frac = 0.0;
  Picos offset = 0;

  bool active() const { return offset != 0 && end_frac > start_frac; }
  friend bool operator==(const RowBandOffset&, const RowBandOffset&) = default;
};

enum class FlipMode {
  Stochastic,
  Deterministic,  // every bit flips whenever the deficit is positive
};

/// Generative description of one DIMM model's latency variation.
struct VariationSpec {
  std::string model_name = "custom";
  double frac_fast_trcd = 1.0;
  double frac_fast_trp = 1.0;
  Picos fast_trcd = 7500;
  Picos slow_trcd = 10000;
  Picos fast_trp = 7500;
  Picos slow_trp = 10000;
  Clustering trcd_clustering{};
  Clustering trp_clustering{ClusterShape::RowBand, 0.1, 4, 2.0};
  RowBandOffset trcd_row_band{};
  BerCurve trcd_curve;
  BerCurve trp_curve;
  /// p(0->1) / p(1->0) at low error rates; decays to 1 as p approaches 0.5.
  double flip_asymmetry = 1.0;
  FlipMode flip_mode = FlipMode::Stochastic;
  /// Recorded and echoed, never used: the model has no temperature effect.
  double temperature_c = 20.0;

  /// Throws ValidationError when any invariant fails.
  void validate() const;

  /// Per-bit flip probabilities for a given deficit on the curve.
  struct FlipProbabilities {
    double zero_to_one = 0.0;
    double one_to_zero = 0.0;
  };
  FlipProbabilities trcd_flip(Picos deficit) const;
  FlipProbabilities trp_flip(Picos deficit) const;

  static VariationSpec from_config(const KvConfig& cfg);
  KvConfig to_config() const;

  friend bool operator==(const VariationSpec&, const VariationSpec&) = default;
};

/// Names of the shipped presets: A-M1, B-M1, C-M0 (characterized models) and
/// D2A, D7B, D2C (evaluation DIMMs).
std::vector<std::string> preset_names();
VariationSpec preset(std::string_view name);

/// Accepts a preset name or a path to a spec config file.
VariationSpec load_variation_spec(std::string_view name_or_path);

}  // namespace flydram
