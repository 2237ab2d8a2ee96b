#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "flydram/charlab.hpp"

namespace flydram {

/// Bit error rate over every cell of the result; 0 for an empty result.
double compute_ber(const CampaignResult& result);

enum class Granularity {
  RowColPerBank,  // one map per bank, rows x cols
  BankRow,        // banks x rows, a row counts if any of its lines erred
};

/// Probability of at least one error per cell across rounds. A round flags a
/// cell when any of its (latency, pattern) tests saw an error there, so pass
/// a single-latency result (CampaignResult::at_latency) for per-latency maps.
/// Dimensions follow the plan's scope.
struct Heatmap {
  Granularity granularity = Granularity::RowColPerBank;
  std::uint32_t bank_begin = 0, banks = 0;
  std::uint32_t row_begin = 0, rows = 0;
  std::uint32_t col_begin = 0, cols = 0;  // 1 for BankRow
  std::uint32_t rounds = 0;
  std::vector<double> values;  // bank-major, then row, then col

  double at(std::uint32_t bank, std::uint32_t row, std::uint32_t col = 0) const;
  /// Mean of each column over rows, for one bank (RowColPerBank only).
  std::vector<double> column_marginals(std::uint32_t bank) const;
};

Heatmap spatial_heatmap(const CampaignResult& result, Granularity granularity);

/// Same plan and cells restricted to rounds in [begin, end).
CampaignResult select_rounds(const CampaignResult& result, std::uint32_t begin, std::uint32_t end);

struct PermutationTest {
  double statistic = 0;  // variance of the per-column marginals
  double p_value = 1;
  std::uint32_t permutations = 0;
};

/// Column-clustering test on one bank of a RowColPerBank heatmap: the
/// observed marginal variance against `permutations` shuffles of the bank's
/// cells. p = (1 + #{shuffled >= observed}) / (1 + permutations).
PermutationTest column_clustering_test(const Heatmap& map, std::uint32_t bank, std::uint32_t permutations = 199,
                                       std::uint64_t seed = 1);

/// Error bits per 64-bit beat, over the beats of every erroneous line
/// occurrence (8 per erroneous line per test).
struct BeatHistogram {
  std::array<std::uint64_t, 5> counts{};  // 0, 1, 2, 3, >=4

  std::uint64_t total() const;
  /// Share of erroneous beats that carry exactly one error bit.
  double one_bit_share() const;
  void add(const LineError& line);
  friend bool operator==(const BeatHistogram&, const BeatHistogram&) = default;
};

BeatHistogram beat_density(const CampaignResult& result);

/// Worst per-beat error count each scope line reached across every test it
/// went through. Fed cell by cell so whole-device campaigns never hold their
/// line records at once.
class LineWorst {
 public:
  LineWorst(const Geometry& geometry, const Scope& scope);

  void add(const CampaignCell& cell);
  void add(const LineError& line);

  std::uint64_t lines() const { return worst_.size(); }
  /// Lines whose worst beat has at most k error bits.
  std::uint64_t correctable(std::uint32_t k) const;
  double error_free_fraction(std::uint32_t k = 0) const;

 private:
  Geometry geometry_;
  Scope scope_;
  std::vector<std::uint8_t> worst_;
};

enum class Aggregation { Pooled, PerDevice };

struct EccReport {
  std::uint32_t k = 0;
  double raw_error_free = 0;  // k = 0
  double error_free = 0;      // after k-bit-per-beat correction
};

/// A line is error-free after ECC iff in every test each of its 8 beats has
/// at most k error bits. A line erroneous in any round counts as erroneous.
EccReport ecc_correct(const CampaignResult& result, std::uint32_t k);
/// Several devices: pooled over all lines (default), or the mean of
/// per-device fractions.
EccReport ecc_correct(std::span<const CampaignResult> results, std::uint32_t k,
                      Aggregation aggregation = Aggregation::Pooled);

struct NamedResult {
  std::string name;
  const CampaignResult* result = nullptr;
};

/// Writes `summary.json` (schema "flydram-report/1"), `ber.csv`, `ecc.csv`
/// and `beats.csv` into `dir`. Output is a pure function of the inputs.
void export_report(std::span<const NamedResult> results, const std::filesystem::path& dir);

}  // namespace flydram
