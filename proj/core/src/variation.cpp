#include "flydram/variation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>

#include <fmt/format.h>

#include "flydram/errors.hpp"

namespace flydram {

void Geometry::validate() const {
  if (banks == 0 || rows_per_bank == 0 || cols_per_row == 0)
    throw ValidationError("geometry: banks, rows_per_bank and cols_per_row must be positive");
  if (banks > 256) throw ValidationError("geometry: at most 256 banks");
  if (cols_per_row > 65535) throw ValidationError("geometry: at most 65535 columns");
  if (std::uint64_t{kBeatsPerLine} * kBeatBits != std::uint64_t{line_bytes} * 8)
    throw ValidationError(fmt::format("geometry: line_bytes must be {} (8 beats x 64 bits)", kLineBits / 8));
}

BerCurve::BerCurve(std::vector<Knot> knots) : knots_(std::move(knots)) {
  Picos prev_deficit = 0;
  double prev_p = 0.0;
  for (const auto& k : knots_) {
    if (k.deficit <= prev_deficit)
      throw ValidationError("ber curve: knot deficits must be positive and strictly increasing");
    if (!(k.p >= 0.0 && k.p <= 0.5)) throw ValidationError("ber curve: probabilities must lie in [0, 0.5]");
    if (k.p < prev_p) throw ValidationError("ber curve: probabilities must be non-decreasing in deficit");
    prev_deficit = k.deficit;
    prev_p = k.p;
  }
}

double BerCurve::at(Picos deficit) const {
  if (deficit <= 0 || knots_.empty()) return 0.0;
  Picos x0 = 0;
  double y0 = 0.0;
  for (const auto& k : knots_) {
    if (deficit <= k.deficit) {
      double t = static_cast<double>(deficit - x0) / static_cast<double>(k.deficit - x0);
      return y0 + t * (k.p - y0);
    }
    x0 = k.deficit;
    y0 = k.p;
  }
  return y0;
}

BerCurve BerCurve::parse(std::string_view text) {
  std::vector<Knot> knots;
  for (const auto& item : split_list(text)) {
    auto colon = item.find(':');
    if (colon == std::string::npos) throw ValidationError(fmt::format("ber curve: knot '{}' needs deficit:p", item));
    Picos deficit = parse_latency(item.substr(0, colon));
    double p = 0.0;
    try {
      std::size_t used = 0;
      std::string ptext = item.substr(colon + 1);
      p = std::stod(ptext, &used);
      if (used != ptext.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError(fmt::format("ber curve: bad probability in '{}'", item));
    }
    knots.push_back({deficit, p});
  }
  return BerCurve(std::move(knots));
}

std::string BerCurve::render() const {
  std::string out;
  for (const auto& k : knots_) out += fmt::format("{}{}:{}", out.empty() ? "" : ", ", format_latency(k.deficit), k.p);
  return out;
}

std::string_view to_string(ClusterShape shape) {
  switch (shape) {
    case ClusterShape::ColumnMajor: return "column-major";
    case ClusterShape::RowBand: return "row-band";
    case ClusterShape::BankSkew: return "bank-skew";
  }
  return "?";
}

ClusterShape parse_cluster_shape(std::string_view text) {
  if (text == "column-major") return ClusterShape::ColumnMajor;
  if (text == "row-band") return ClusterShape::RowBand;
  if (text == "bank-skew") return ClusterShape::BankSkew;
  throw ValidationError(fmt::format("unknown clustering '{}' (column-major|row-band|bank-skew)", text));
}

namespace {

void validate_latency(std::string_view name, Picos ps) {
  if (ps <= 0 || !is_quantized(ps))
    throw ValidationError(fmt::format("{} = {}ps must be a positive multiple of {}ps", name, ps, kTimingQuantum));
}

void validate_clustering(std::string_view name, const Clustering& c) {
  if (!(c.jitter >= 0.0 && c.jitter <= 1.0)) throw ValidationError(fmt::format("{}: jitter must be in [0,1]", name));
  if (c.bands == 0) throw ValidationError(fmt::format("{}: bands must be >= 1", name));
  if (!(c.bank_skew >= 0.0)) throw ValidationError(fmt::format("{}: bank_skew must be >= 0", name));
}

// Effective asymmetry shrinks toward 1 as the curve approaches a coin toss.
VariationSpec::FlipProbabilities split(double p01, double asymmetry, FlipMode mode) {
  if (mode == FlipMode::Deterministic) return {p01 > 0.0 ? 1.0 : 0.0, p01 > 0.0 ? 1.0 : 0.0};
  if (p01 <= 0.0) return {};
  double effective = std::pow(asymmetry, std::max(0.0, 1.0 - 2.0 * p01));
  return {p01, p01 / effective};
}

}  // namespace

void VariationSpec::validate() const {
  if (!(frac_fast_trcd >= 0.0 && frac_fast_trcd <= 1.0))
    throw ValidationError("frac_fast_trcd must be in [0,1]");
  if (!(frac_fast_trp >= 0.0 && frac_fast_trp <= 1.0)) throw ValidationError("frac_fast_trp must be in [0,1]");
  validate_latency("fast_trcd", fast_trcd);
  validate_latency("slow_trcd", slow_trcd);
  validate_latency("fast_trp", fast_trp);
  validate_latency("slow_trp", slow_trp);
  if (fast_trcd >= slow_trcd) throw ValidationError("fast_trcd must be below slow_trcd");
  if (fast_trp >= slow_trp) throw ValidationError("fast_trp must be below slow_trp");
  validate_clustering("trcd_clustering", trcd_clustering);
  validate_clustering("trp_clustering", trp_clustering);
  if (trcd_row_band.offset < 0 || !is_quantized(trcd_row_band.offset))
    throw ValidationError("trcd_row_band_offset must be a non-negative multiple of the timing quantum");
  if (!(trcd_row_band.start_frac >= 0.0 && trcd_row_band.end_frac <= 1.0 &&
        trcd_row_band.start_frac <= trcd_row_band.end_frac))
    throw ValidationError("trcd row band must satisfy 0 <= start <= end <= 1");
  if (!(flip_asymmetry >= 1.0)) throw ValidationError("flip_asymmetry must be >= 1");
  // BerCurve enforces its own invariants at construction.
}

VariationSpec::FlipProbabilities VariationSpec::trcd_flip(Picos deficit) const {
  return split(trcd_curve.at(deficit), flip_asymmetry, flip_mode);
}

VariationSpec::FlipProbabilities VariationSpec::trp_flip(Picos deficit) const {
  return split(trp_curve.at(deficit), flip_asymmetry, flip_mode);
}

namespace {

Clustering clustering_from(const KvConfig& cfg, std::string_view prefix, Clustering fallback) {
  Clustering c = fallback;
  auto key = [&](std::string_view suffix) { return fmt::format("{}_{}", prefix, suffix); };
  if (cfg.has(fmt::format("{}_clustering", prefix)))
    c.shape = parse_cluster_shape(cfg.get_string(fmt::format("{}_clustering", prefix)));
  c.jitter = cfg.get_double(key("jitter"), c.jitter);
  c.bands = static_cast<std::uint32_t>(cfg.get_int(key("bands"), c.bands));
  c.bank_skew = cfg.get_double(key("bank_skew"), c.bank_skew);
  return c;
}

void clustering_to(KvConfig& cfg, std::string_view prefix, const Clustering& c) {
  cfg.set(fmt::format("{}_clustering", prefix), std::string(to_string(c.shape)));
  cfg.set(fmt::format("{}_jitter", prefix), fmt::format("{}", c.jitter));
  cfg.set(fmt::format("{}_bands", prefix), fmt::format("{}", c.bands));
  cfg.set(fmt::format("{}_bank_skew", prefix), fmt::format("{}", c.bank_skew));
}

}  // namespace

VariationSpec VariationSpec::from_config(const KvConfig& cfg) {
  VariationSpec s;
  s.model_name = cfg.get_string("model_name", s.model_name);
  s.frac_fast_trcd = cfg.get_double("frac_fast_trcd", s.frac_fast_trcd);
  s.frac_fast_trp = cfg.get_double("frac_fast_trp", s.frac_fast_trp);
  s.fast_trcd = cfg.get_latency("fast_trcd", s.fast_trcd);
  s.slow_trcd = cfg.get_latency("slow_trcd", s.slow_trcd);
  s.fast_trp = cfg.get_latency("fast_trp", s.fast_trp);
  s.slow_trp = cfg.get_latency("slow_trp", s.slow_trp);
  s.trcd_clustering = clustering_from(cfg, "trcd", s.trcd_clustering);
  s.trp_clustering = clustering_from(cfg, "trp", s.trp_clustering);
  s.trcd_row_band.start_frac = cfg.get_double("trcd_row_band_start", s.trcd_row_band.start_frac);
  s.trcd_row_band.end_frac = cfg.get_double("trcd_row_band_end", s.trcd_row_band.end_frac);
  s.trcd_row_band.offset = cfg.get_latency("trcd_row_band_offset", s.trcd_row_band.offset);
  if (cfg.has("ber_curve_trcd")) s.trcd_curve = BerCurve::parse(cfg.get_string("ber_curve_trcd"));
  if (cfg.has("ber_curve_trp")) s.trp_curve = BerCurve::parse(cfg.get_string("ber_curve_trp"));
  s.flip_asymmetry = cfg.get_double("flip_asymmetry", s.flip_asymmetry);
  if (cfg.has("flip_mode")) {
    auto mode = cfg.get_string("flip_mode");
    if (mode == "stochastic") s.flip_mode = FlipMode::Stochastic;
    else if (mode == "deterministic") s.flip_mode = FlipMode::Deterministic;
    else throw ValidationError(fmt::format("unknown flip_mode '{}'", mode));
  }
  s.temperature_c = cfg.get_double("temperature_c", s.temperature_c);
  s.validate();
  return s;
}

KvConfig VariationSpec::to_config() const {
  KvConfig cfg;
  cfg.set("model_name", model_name);
  cfg.set("frac_fast_trcd", fmt::format("{}", frac_fast_trcd));
  cfg.set("frac_fast_trp", fmt::format("{}", frac_fast_trp));
  cfg.set("fast_trcd", format_latency(fast_trcd));
  cfg.set("slow_trcd", format_latency(slow_trcd));
  cfg.set("fast_trp", format_latency(fast_trp));
  cfg.set("slow_trp", format_latency(slow_trp));
  clustering_to(cfg, "trcd", trcd_clustering);
  clustering_to(cfg, "trp", trp_clustering);
  cfg.set("trcd_row_band_start", fmt::format("{}", trcd_row_band.start_frac));
  cfg.set("trcd_row_band_end", fmt::format("{}", trcd_row_band.end_frac));
  cfg.set("trcd_row_band_offset", format_latency(trcd_row_band.offset));
  cfg.set("ber_curve_trcd", trcd_curve.render());
  cfg.set("ber_curve_trp", trp_curve.render());
  cfg.set("flip_asymmetry", fmt::format("{}", flip_asymmetry));
  cfg.set("flip_mode", flip_mode == FlipMode::Stochastic ? "stochastic" : "deterministic");
  cfg.set("temperature_c", fmt::format("{}", temperature_c));
  return cfg;
}

std::vector<std::string> preset_names() { return {"A-M1", "B-M1", "C-M0", "D2A", "D7B", "D2C"}; }

VariationSpec preset(std::string_view name) {
  // Fractions: error-free cache lines at 7.5ns per model, and the per-DIMM
  // class distributions used for the system evaluation. Curves are
  // calibration inputs chosen to land the measured medians and ECC gains.
  VariationSpec s;
  if (name == "A-M1" || name == "D2A") {
    s.frac_fast_trcd = 0.93;
    s.frac_fast_trp = name == "A-M1" ? 0.711 : 0.74;
    s.trcd_clustering = {ClusterShape::RowBand, 0.1, 6, 2.0};
    s.trp_clustering = {ClusterShape::RowBand, 0.1, 4, 2.0};
    s.trcd_curve = BerCurve({{2500, 0.0025}, {5000, 0.05}, {7500, 0.45}, {10000, 0.5}});
    s.trp_curve = BerCurve({{2500, 0.02}, {5000, 0.45}, {7500, 0.5}});
    s.flip_asymmetry = 8.0;
  } else if (name == "B-M1" || name == "D7B") {
    s.frac_fast_trcd = 0.12;
    s.frac_fast_trp = name == "B-M1" ? 0.136 : 0.13;
    s.trcd_clustering = {ClusterShape::BankSkew, 0.2, 4, 2.0};
    s.trp_clustering = {ClusterShape::RowBand, 0.2, 4, 2.0};
    s.trcd_curve = BerCurve({{2500, 0.015}, {5000, 0.3}, {7500, 0.5}});
    s.trp_curve = BerCurve({{2500, 0.08}, {5000, 0.5}});
    s.flip_asymmetry = 4.0;
  } else if (name == "C-M0" || name == "D2C") {
    s.frac_fast_trcd = 0.99;
    s.frac_fast_trp = name == "C-M0" ? 0.847 : 0.99;
    s.trcd_clustering = {ClusterShape::ColumnMajor, 0.1, 4, 2.0};
    s.trp_clustering = {ClusterShape::BankSkew, 0.1, 4, 2.0};
    s.trcd_curve = BerCurve({{2500, 0.0015}, {5000, 0.04}, {7500, 0.4}, {10000, 0.5}});
    s.trp_curve = BerCurve({{2500, 0.01}, {5000, 0.4}, {7500, 0.5}});
    s.flip_asymmetry = 10000.0;
  } else {
    throw ValidationError(fmt::format("unknown preset '{}'", name));
  }
  s.model_name = std::string(name);
  s.validate();
  return s;
}

VariationSpec load_variation_spec(std::string_view name_or_path) {
  for (const auto& n : preset_names())
    if (n == name_or_path) return preset(n);
  auto cfg = KvConfig::load(std::filesystem::path(name_or_path));
  auto spec = VariationSpec::from_config(cfg);
  cfg.reject_unknown();
  return spec;
}

}  // namespace flydram
