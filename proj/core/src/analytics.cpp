#include "flydram/analytics.hpp"

#include <algorithm>
#include <bit>
#include <fstream>
#include <numeric>

#include <fmt/format.h>
#include "json.hpp"

#include "flydram/errors.hpp"
#include "flydram/rng.hpp"

namespace flydram {

double compute_ber(const CampaignResult& result) {
  auto tested = result.tested_bits();
  return tested ? static_cast<double>(result.error_bits()) / static_cast<double>(tested) : 0.0;
}

// ---------------------------------------------------------------- heatmap

double Heatmap::at(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const {
  if (bank < bank_begin || bank >= bank_begin + banks || row < row_begin || row >= row_begin + rows ||
      col < col_begin || col >= col_begin + cols)
    throw ValidationError(fmt::format("heatmap: ({}, {}, {}) outside the map", bank, row, col));
  return values[((std::size_t{bank - bank_begin} * rows) + (row - row_begin)) * cols + (col - col_begin)];
}

std::vector<double> Heatmap::column_marginals(std::uint32_t bank) const {
  if (granularity != Granularity::RowColPerBank) throw ValidationError("heatmap: column marginals need (row,col) maps");
  if (bank < bank_begin || bank >= bank_begin + banks) throw ValidationError("heatmap: bank outside the map");
  std::vector<double> m(cols, 0.0);
  const double* base = values.data() + std::size_t{bank - bank_begin} * rows * cols;
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) m[c] += base[std::size_t{r} * cols + c];
  for (auto& v : m) v /= rows;
  return m;
}

Heatmap spatial_heatmap(const CampaignResult& result, Granularity granularity) {
  const auto scope = result.plan.scope.resolved(result.geometry);
  Heatmap map;
  map.granularity = granularity;
  map.bank_begin = scope.bank_begin;
  map.banks = scope.bank_end - scope.bank_begin;
  map.row_begin = scope.row_begin;
  map.rows = scope.row_end - scope.row_begin;
  map.col_begin = granularity == Granularity::RowColPerBank ? scope.col_begin : 0;
  map.cols = granularity == Granularity::RowColPerBank ? scope.col_end - scope.col_begin : 1;
  map.rounds = result.plan.rounds;
  const std::size_t n = std::size_t{map.banks} * map.rows * map.cols;
  std::vector<std::uint32_t> hits(n, 0);
  std::vector<std::uint32_t> stamp(n, 0);  // round + 1 that last counted the cell
  for (const auto& cell : result.cells) {
    for (const auto& le : cell.lines) {
      if (le.bank < scope.bank_begin || le.bank >= scope.bank_end || le.row < scope.row_begin ||
          le.row >= scope.row_end || le.col < scope.col_begin || le.col >= scope.col_end)
        continue;
      std::size_t idx = (std::size_t{le.bank - map.bank_begin} * map.rows + (le.row - map.row_begin)) * map.cols;
      if (granularity == Granularity::RowColPerBank) idx += le.col - map.col_begin;
      if (stamp[idx] == cell.round + 1) continue;
      stamp[idx] = cell.round + 1;
      ++hits[idx];
    }
  }
  map.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) map.values[i] = map.rounds ? static_cast<double>(hits[i]) / map.rounds : 0.0;
  return map;
}

CampaignResult select_rounds(const CampaignResult& result, std::uint32_t begin, std::uint32_t end) {
  if (begin >= end || end > result.plan.rounds) throw ValidationError("select_rounds: empty or out-of-range subset");
  CampaignResult r{result.plan, result.geometry, {}};
  r.plan.rounds = end - begin;
  for (const auto& c : result.cells) {
    if (c.round < begin || c.round >= end) continue;
    r.cells.push_back(c);
    r.cells.back().round -= begin;
  }
  return r;
}

namespace {

double marginal_variance(const std::vector<double>& cells, std::uint32_t rows, std::uint32_t cols) {
  std::vector<double> m(cols, 0.0);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) m[c] += cells[std::size_t{r} * cols + c];
  double mean = 0;
  for (auto& v : m) mean += (v /= rows);
  mean /= cols;
  double var = 0;
  for (auto v : m) var += (v - mean) * (v - mean);
  return var / cols;
}

}  // namespace

PermutationTest column_clustering_test(const Heatmap& map, std::uint32_t bank, std::uint32_t permutations,
                                       std::uint64_t seed) {
  if (map.granularity != Granularity::RowColPerBank) throw ValidationError("permutation test needs a (row,col) map");
  if (bank < map.bank_begin || bank >= map.bank_begin + map.banks) throw ValidationError("bank outside the map");
  const std::size_t per_bank = std::size_t{map.rows} * map.cols;
  std::vector<double> cells(map.values.begin() + static_cast<std::ptrdiff_t>((bank - map.bank_begin) * per_bank),
                            map.values.begin() + static_cast<std::ptrdiff_t>((bank - map.bank_begin + 1) * per_bank));
  PermutationTest t;
  t.permutations = permutations;
  t.statistic = marginal_variance(cells, map.rows, map.cols);
  SplitMix64 rng(hash_combine(seed, bank));
  std::uint32_t at_least = 0;
  for (std::uint32_t i = 0; i < permutations; ++i) {
    for (std::size_t j = cells.size(); j > 1; --j) std::swap(cells[j - 1], cells[rng.below(j)]);
    if (marginal_variance(cells, map.rows, map.cols) >= t.statistic) ++at_least;
  }
  t.p_value = (1.0 + at_least) / (1.0 + permutations);
  return t;
}

// ---------------------------------------------------------------- density

std::uint64_t BeatHistogram::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

double BeatHistogram::one_bit_share() const {
  auto erroneous = counts[1] + counts[2] + counts[3] + counts[4];
  return erroneous ? static_cast<double>(counts[1]) / static_cast<double>(erroneous) : 0.0;
}

void BeatHistogram::add(const LineError& line) {
  for (auto w : line.flipped) ++counts[std::min(std::popcount(w), 4)];
}

BeatHistogram beat_density(const CampaignResult& result) {
  BeatHistogram h;
  for (const auto& c : result.cells)
    for (const auto& le : c.lines) h.add(le);
  return h;
}

// ---------------------------------------------------------------- ECC

LineWorst::LineWorst(const Geometry& geometry, const Scope& scope)
    : geometry_(geometry), scope_(scope.resolved(geometry)), worst_(scope_.lines(), 0) {}

void LineWorst::add(const LineError& le) {
  if (le.bank < scope_.bank_begin || le.bank >= scope_.bank_end || le.row < scope_.row_begin ||
      le.row >= scope_.row_end || le.col < scope_.col_begin || le.col >= scope_.col_end)
    return;
  const std::size_t idx =
      (std::size_t{le.bank - scope_.bank_begin} * (scope_.row_end - scope_.row_begin) + (le.row - scope_.row_begin)) *
          (scope_.col_end - scope_.col_begin) +
      (le.col - scope_.col_begin);
  int w = worst_[idx];
  for (auto beat : le.flipped) w = std::max(w, std::popcount(beat));
  worst_[idx] = static_cast<std::uint8_t>(w);
}

void LineWorst::add(const CampaignCell& cell) {
  if (cell.erroneous_lines != cell.lines.size())
    throw ValidationError("line statistics need line-level detail (plan detail = lines)");
  for (const auto& le : cell.lines) add(le);
}

std::uint64_t LineWorst::correctable(std::uint32_t k) const {
  return static_cast<std::uint64_t>(std::count_if(worst_.begin(), worst_.end(), [k](auto w) { return w <= k; }));
}

double LineWorst::error_free_fraction(std::uint32_t k) const {
  return worst_.empty() ? 1.0 : static_cast<double>(correctable(k)) / static_cast<double>(worst_.size());
}

namespace {

LineWorst worst_of(const CampaignResult& result) {
  LineWorst w(result.geometry, result.plan.scope);
  for (const auto& c : result.cells) w.add(c);
  return w;
}

}  // namespace

EccReport ecc_correct(const CampaignResult& result, std::uint32_t k) {
  auto w = worst_of(result);
  return {k, w.error_free_fraction(0), w.error_free_fraction(k)};
}

EccReport ecc_correct(std::span<const CampaignResult> results, std::uint32_t k, Aggregation aggregation) {
  EccReport rep{k, 0, 0};
  if (results.empty()) return rep;
  std::uint64_t lines = 0, raw = 0, fixed = 0;
  double raw_sum = 0, fixed_sum = 0;
  for (const auto& r : results) {
    auto w = worst_of(r);
    lines += w.lines();
    raw += w.correctable(0);
    fixed += w.correctable(k);
    raw_sum += w.error_free_fraction(0);
    fixed_sum += w.error_free_fraction(k);
  }
  if (aggregation == Aggregation::Pooled) {
    rep.raw_error_free = lines ? static_cast<double>(raw) / static_cast<double>(lines) : 1.0;
    rep.error_free = lines ? static_cast<double>(fixed) / static_cast<double>(lines) : 1.0;
  } else {
    rep.raw_error_free = raw_sum / static_cast<double>(results.size());
    rep.error_free = fixed_sum / static_cast<double>(results.size());
  }
  return rep;
}

// ---------------------------------------------------------------- report

void export_report(std::span<const NamedResult> results, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw ValidationError(fmt::format("cannot write {}", (dir / name).string()));
    return f;
  };
  auto ber_csv = open("ber.csv");
  auto ecc_csv = open("ecc.csv");
  auto beats_csv = open("beats.csv");
  ber_csv << "name,test,latency_ps,tested_bits,error_bits,ber,error_free_fraction\n";
  ecc_csv << "name,latency_ps,k,raw_error_free,error_free\n";
  beats_csv << "name,latency_ps,bucket,count\n";

  nlohmann::ordered_json summary;
  summary["schema"] = "flydram-report/1";
  summary["results"] = nlohmann::ordered_json::array();
  for (const auto& nr : results) {
    if (!nr.result) throw ValidationError("export_report: null result");
    const auto& res = *nr.result;
    const bool detailed = res.plan.detail == Detail::Lines;
    nlohmann::ordered_json entry;
    entry["name"] = nr.name;
    entry["test"] = std::string(to_string(res.plan.kind));
    entry["tested_bits"] = res.tested_bits();
    entry["error_bits"] = res.error_bits();
    entry["ber"] = compute_ber(res);
    entry["latencies"] = nlohmann::ordered_json::array();
    for (auto lat : res.plan.latencies) {
      auto sub = res.at_latency(lat);
      nlohmann::ordered_json le;
      le["latency_ps"] = lat;
      le["tested_bits"] = sub.tested_bits();
      le["error_bits"] = sub.error_bits();
      le["ber"] = compute_ber(sub);
      std::string frac_text;
      if (detailed) {
        auto worst = worst_of(sub);
        le["error_free_fraction"] = worst.error_free_fraction(0);
        frac_text = fmt::format("{}", worst.error_free_fraction(0));
        auto ecc = nlohmann::ordered_json::array();
        for (std::uint32_t k = 0; k <= 3; ++k) {
          nlohmann::ordered_json row;
          row["k"] = k;
          row["error_free"] = worst.error_free_fraction(k);
          ecc.push_back(row);
          ecc_csv << fmt::format("{},{},{},{},{}\n", nr.name, lat, k, worst.error_free_fraction(0),
                                 worst.error_free_fraction(k));
        }
        le["ecc"] = ecc;
        auto hist = beat_density(sub);
        le["beats"] = hist.counts;
        static constexpr const char* kBuckets[] = {"0", "1", "2", "3", ">=4"};
        for (std::size_t b = 0; b < hist.counts.size(); ++b)
          beats_csv << fmt::format("{},{},{},{}\n", nr.name, lat, kBuckets[b], hist.counts[b]);
      }
      ber_csv << fmt::format("{},{},{},{},{},{},{}\n", nr.name, to_string(res.plan.kind), lat, sub.tested_bits(),
                             sub.error_bits(), compute_ber(sub), frac_text);
      entry["latencies"].push_back(le);
    }
    summary["results"].push_back(entry);
  }
  auto json = open("summary.json");
  json << summary.dump(2) << '\n';
}

}  // namespace flydram
