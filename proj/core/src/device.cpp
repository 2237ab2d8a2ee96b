#include "flydram/device.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "binio.hpp"
#include "flydram/errors.hpp"
#include "flydram/rng.hpp"

namespace flydram {
namespace {

constexpr std::uint64_t kTrcdSalt = 0x7452434400000001ULL;
constexpr std::uint64_t kTrpSalt = 0x7452500000000002ULL;

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

double structured_score(const Clustering& c, std::uint32_t group, std::uint32_t index, std::uint32_t length,
                        std::uint64_t seed, const std::vector<double>& band_centers) {
  switch (c.shape) {
    case ClusterShape::ColumnMajor:
      return unit(hash_combine(seed ^ 0xC01, index));
    case ClusterShape::RowBand: {
      double x = (static_cast<double>(index) + 0.5) / static_cast<double>(length);
      double nearest = 1.0;
      for (double center : band_centers) {
        double d = std::abs(x - center);
        nearest = std::min(nearest, std::min(d, 1.0 - d));
      }
      return 1.0 - std::min(1.0, nearest * 2.0);
    }
    case ClusterShape::BankSkew: {
      double w = unit(hash_combine(seed ^ 0xBA7C, group));
      return std::pow(w, 1.0 / (1.0 + c.bank_skew));
    }
  }
  return 0.0;
}

}  // namespace

std::vector<std::int32_t> plant_threshold_map(std::uint32_t groups, std::uint32_t length, double frac_fast,
                                              Picos fast, Picos slow, const Clustering& clustering,
                                              std::uint64_t seed) {
  const std::size_t n = std::size_t{groups} * length;
  const auto fast_count = static_cast<std::size_t>(std::llround(frac_fast * static_cast<double>(n)));
  const std::size_t slow_count = n - std::min(fast_count, n);

  std::vector<double> band_centers;
  for (std::uint32_t b = 0; b < clustering.bands; ++b)
    band_centers.push_back(unit(hash_combine(seed ^ 0xBA4D, b)));

  // Highest score turns slow; ties are broken by the entry hash.
  struct Entry {
    double score;
    std::uint64_t tie;
    std::uint32_t pos;
  };
  std::vector<Entry> entries(n);
  for (std::uint32_t g = 0; g < groups; ++g)
    for (std::uint32_t i = 0; i < length; ++i) {
      auto pos = static_cast<std::uint32_t>(std::size_t{g} * length + i);
      std::uint64_t h = hash_combine(seed, pos);
      double s = (1.0 - clustering.jitter) * structured_score(clustering, g, i, length, seed, band_centers) +
                 clustering.jitter * unit(h);
      entries[pos] = {s, h, pos};
    }
  std::vector<std::int32_t> map(n, static_cast<std::int32_t>(fast));
  if (slow_count == 0) return map;
  std::nth_element(entries.begin(), entries.begin() + static_cast<std::ptrdiff_t>(slow_count - 1), entries.end(),
                   [](const Entry& a, const Entry& b) {
                     return a.score != b.score ? a.score > b.score : a.tie > b.tie;
                   });
  for (std::size_t k = 0; k < slow_count; ++k) map[entries[k].pos] = static_cast<std::int32_t>(slow);
  return map;
}

Device Device::build(const VariationSpec& spec, const Geometry& geometry, std::uint64_t seed) {
  spec.validate();
  geometry.validate();
  Device d;
  d.geometry_ = geometry;
  d.spec_ = spec;
  d.seed_ = seed;
  d.stream_key_ = seed;
  d.trcd_map_ = plant_threshold_map(geometry.banks, geometry.cols_per_row, spec.frac_fast_trcd, spec.fast_trcd,
                                    spec.slow_trcd, spec.trcd_clustering, hash_combine(seed, kTrcdSalt));
  d.trp_map_ = plant_threshold_map(geometry.banks, geometry.rows_per_bank, spec.frac_fast_trp, spec.fast_trp,
                                   spec.slow_trp, spec.trp_clustering, hash_combine(seed, kTrpSalt));
  if (spec.trcd_row_band.active()) {
    d.band_begin_ = static_cast<std::uint32_t>(std::floor(spec.trcd_row_band.start_frac * geometry.rows_per_bank));
    d.band_end_ = static_cast<std::uint32_t>(std::floor(spec.trcd_row_band.end_frac * geometry.rows_per_bank));
  }
  d.cells_.resize(geometry.rows());
  return d;
}

void Device::reseed_stream(std::uint64_t key) {
  stream_key_ = key;
  epoch_ = 0;
}

void Device::check_index(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const {
  if (bank >= geometry_.banks || row >= geometry_.rows_per_bank || col >= geometry_.cols_per_row)
    throw ValidationError(fmt::format("index (bank {}, row {}, col {}) outside geometry {}x{}x{}", bank, row, col,
                                      geometry_.banks, geometry_.rows_per_bank, geometry_.cols_per_row));
}

Picos Device::base_trcd(std::uint32_t bank, std::uint32_t col) const {
  check_index(bank, 0, col);
  return trcd_map_[std::size_t{bank} * geometry_.cols_per_row + col];
}

Picos Device::min_trcd(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const {
  check_index(bank, row, col);
  Picos base = trcd_map_[std::size_t{bank} * geometry_.cols_per_row + col];
  if (row >= band_begin_ && row < band_end_) base += spec_.trcd_row_band.offset;
  return base;
}

Picos Device::min_trp(std::uint32_t bank, std::uint32_t row) const {
  check_index(bank, row, 0);
  return trp_map_[geometry_.row_index(bank, row)];
}

Picos Device::column_max_trcd(std::uint32_t bank, std::uint32_t col) const {
  Picos base = base_trcd(bank, col);
  return band_end_ > band_begin_ ? base + spec_.trcd_row_band.offset : base;
}

Picos Device::bank_max_trp(std::uint32_t bank) const {
  check_index(bank, 0, 0);
  auto first = trp_map_.begin() + static_cast<std::ptrdiff_t>(geometry_.row_index(bank, 0));
  return *std::max_element(first, first + geometry_.rows_per_bank);
}

std::vector<std::uint64_t>& Device::materialize(std::uint32_t bank, std::uint32_t row) {
  auto& r = cells_[geometry_.row_index(bank, row)];
  if (r.empty()) r.assign(std::size_t{geometry_.cols_per_row} * kBeatsPerLine, 0);
  return r;
}

const std::uint64_t* Device::row_words(std::uint32_t bank, std::uint32_t row) const {
  const auto& r = cells_[geometry_.row_index(bank, row)];
  return r.empty() ? nullptr : r.data();
}

void Device::write_line(std::uint32_t bank, std::uint32_t row, std::uint32_t col, const CacheLine& data) {
  check_index(bank, row, col);
  auto& r = materialize(bank, row);
  std::copy(data.begin(), data.end(), r.begin() + std::ptrdiff_t{col} * kBeatsPerLine);
}

CacheLine Device::peek_line(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const {
  check_index(bank, row, col);
  CacheLine line{};
  if (const auto* words = row_words(bank, row))
    std::copy_n(words + std::size_t{col} * kBeatsPerLine, kBeatsPerLine, line.begin());
  return line;
}

CacheLine Device::subsequent_read(std::uint32_t bank, std::uint32_t row, std::uint32_t col) const {
  return peek_line(bank, row, col);
}

void Device::flip_line(std::uint64_t* words, std::uint32_t bank, std::uint32_t row, std::uint32_t col,
                       std::uint64_t threshold01, std::uint64_t threshold10, FlipReport& report) const {
  const std::uint64_t key = hash_combine(hash_combine(stream_key_, epoch_), geometry_.line_index(bank, row, col));
  for (std::uint32_t beat = 0; beat < kBeatsPerLine; ++beat) {
    const std::uint64_t stored = words[beat];
    std::uint64_t mask = 0;
    for (std::uint32_t b = 0; b < kBeatBits; ++b) {
      const std::uint32_t bit = beat * kBeatBits + b;
      const std::uint64_t h = mix64(key + (std::uint64_t{bit} + 1) * kGoldenGamma);
      const bool one = (stored >> b) & 1u;
      if (h < (one ? threshold10 : threshold01)) mask |= std::uint64_t{1} << b;
    }
    if (mask == 0) continue;
    words[beat] = stored ^ mask;
    for (std::uint64_t m = mask; m != 0; m &= m - 1) {
      auto b = static_cast<std::uint32_t>(std::countr_zero(m));
      auto old_bit = static_cast<std::uint8_t>((stored >> b) & 1u);
      report.flips.push_back({bank, row, col, static_cast<std::uint16_t>(beat * kBeatBits + b), old_bit,
                              static_cast<std::uint8_t>(old_bit ^ 1u)});
    }
  }
}

Device::ActivationRead Device::apply_activation_read(std::uint32_t bank, std::uint32_t row,
                                                     std::uint32_t first_col, Picos provided_trcd) {
  check_index(bank, row, first_col);
  if (provided_trcd <= 0) throw ValidationError("provided tRCD must be positive");
  ActivationRead out{};
  out.report.cause = FlipCause::Activation;
  out.report.deficit = std::max<Picos>(0, min_trcd(bank, row, first_col) - provided_trcd);
  if (out.report.deficit > 0) {
    auto p = spec_.trcd_flip(out.report.deficit);
    auto& r = materialize(bank, row);
    flip_line(r.data() + std::size_t{first_col} * kBeatsPerLine, bank, row, first_col,
              probability_threshold(p.zero_to_one), probability_threshold(p.one_to_zero), out.report);
    ++epoch_;
  }
  out.line = peek_line(bank, row, first_col);
  return out;
}

FlipReport Device::apply_precharge_activate(std::uint32_t bank, std::uint32_t new_row, Picos provided_trp) {
  check_index(bank, new_row, 0);
  if (provided_trp <= 0) throw ValidationError("provided tRP must be positive");
  FlipReport report;
  report.cause = FlipCause::Precharge;
  report.deficit = std::max<Picos>(0, min_trp(bank, new_row) - provided_trp);
  if (report.deficit == 0) return report;
  auto p = spec_.trp_flip(report.deficit);
  auto t01 = probability_threshold(p.zero_to_one);
  auto t10 = probability_threshold(p.one_to_zero);
  auto& r = materialize(bank, new_row);
  for (std::uint32_t col = 0; col < geometry_.cols_per_row; ++col)
    flip_line(r.data() + std::size_t{col} * kBeatsPerLine, bank, new_row, col, t01, t10, report);
  ++epoch_;
  return report;
}

void Device::clear_cells() {
  for (auto& r : cells_) std::vector<std::uint64_t>().swap(r);
}

std::size_t Device::materialized_rows() const {
  return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const auto& r) { return !r.empty(); }));
}

void Device::save(std::ostream& out) const {
  binio::put_magic(out, "FDLV1");
  binio::put<std::uint32_t>(out, geometry_.banks);
  binio::put<std::uint32_t>(out, geometry_.rows_per_bank);
  binio::put<std::uint32_t>(out, geometry_.cols_per_row);
  binio::put<std::uint32_t>(out, geometry_.line_bytes);
  binio::put<std::uint64_t>(out, seed_);
  binio::put<std::uint64_t>(out, stream_key_);
  binio::put<std::uint64_t>(out, epoch_);
  binio::put_string(out, spec_.to_config().render());
  for (auto v : trcd_map_) binio::put<std::int32_t>(out, v);
  for (auto v : trp_map_) binio::put<std::int32_t>(out, v);
  binio::put<std::uint64_t>(out, materialized_rows());
  for (std::uint64_t idx = 0; idx < cells_.size(); ++idx) {
    if (cells_[idx].empty()) continue;
    binio::put<std::uint64_t>(out, idx);
    for (auto w : cells_[idx]) binio::put<std::uint64_t>(out, w);
  }
}

Device Device::load(std::istream& in) {
  binio::expect_magic(in, "FDLV1");
  Device d;
  d.geometry_.banks = binio::get<std::uint32_t>(in);
  d.geometry_.rows_per_bank = binio::get<std::uint32_t>(in);
  d.geometry_.cols_per_row = binio::get<std::uint32_t>(in);
  d.geometry_.line_bytes = binio::get<std::uint32_t>(in);
  try {
    d.geometry_.validate();
  } catch (const ValidationError& e) {
    throw IntegrityError(fmt::format("device blob: {}", e.what()));
  }
  d.seed_ = binio::get<std::uint64_t>(in);
  d.stream_key_ = binio::get<std::uint64_t>(in);
  d.epoch_ = binio::get<std::uint64_t>(in);
  auto cfg = KvConfig::parse(binio::get_string(in), "device blob spec");
  d.spec_ = VariationSpec::from_config(cfg);
  if (d.spec_.trcd_row_band.active()) {
    d.band_begin_ = static_cast<std::uint32_t>(std::floor(d.spec_.trcd_row_band.start_frac * d.geometry_.rows_per_bank));
    d.band_end_ = static_cast<std::uint32_t>(std::floor(d.spec_.trcd_row_band.end_frac * d.geometry_.rows_per_bank));
  }
  d.trcd_map_.resize(std::size_t{d.geometry_.banks} * d.geometry_.cols_per_row);
  for (auto& v : d.trcd_map_) v = binio::get<std::int32_t>(in);
  d.trp_map_.resize(d.geometry_.rows());
  for (auto& v : d.trp_map_) v = binio::get<std::int32_t>(in);
  d.cells_.resize(d.geometry_.rows());
  auto rows = binio::get<std::uint64_t>(in);
  if (rows > d.geometry_.rows()) throw IntegrityError("device blob: too many rows");
  for (std::uint64_t i = 0; i < rows; ++i) {
    auto idx = binio::get<std::uint64_t>(in);
    if (idx >= d.cells_.size() || !d.cells_[idx].empty()) throw IntegrityError("device blob: bad row index");
    auto& r = d.cells_[idx];
    r.resize(std::size_t{d.geometry_.cols_per_row} * kBeatsPerLine);
    for (auto& w : r) w = binio::get<std::uint64_t>(in);
  }
  return d;
}

}  // namespace flydram
