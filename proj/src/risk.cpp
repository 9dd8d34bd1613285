#include "v2x/risk.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "v2x/error.hpp"

namespace v2x::risk {

int reference_tbs_index(int behavior_id) {
  if (behavior_id == 1) return 1;
  if (behavior_id >= 2 && behavior_id <= 6) return 2;
  if (behavior_id >= 7 && behavior_id <= 9) return 3;
  if (behavior_id >= 10 && behavior_id <= kBehaviorCount) return 4;
  throw DomainError(fmt::format("unknown behavior id {}", behavior_id));
}

namespace {

std::vector<std::string> validate_entries(const std::vector<BehaviorEntry>& entries) {
  std::vector<std::string> errors;
  if (entries.size() != kBehaviorCount)
    errors.push_back(fmt::format("catalog must have {} entries, found {}", kBehaviorCount,
                                 entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const int expected_id = static_cast<int>(i) + 1;
    if (e.behavior_id != expected_id) {
      errors.push_back(fmt::format("row {}: behavior_id {} (expected {})", i + 1, e.behavior_id,
                                   expected_id));
      continue;
    }
    if (!(e.weight >= 0.0 && e.weight <= 1.0))
      errors.push_back(fmt::format("behavior {}: weight {} outside [0,1]", e.behavior_id, e.weight));
    if (e.behavior_id <= kBehaviorCount && e.tbs_index != reference_tbs_index(e.behavior_id))
      errors.push_back(fmt::format("behavior {}: tbs_index {} breaks the reference grouping "
                                   "(expected {})",
                                   e.behavior_id, e.tbs_index, reference_tbs_index(e.behavior_id)));
    if (i > 0 && e.weight > entries[i - 1].weight)
      errors.push_back(fmt::format("behavior {}: weight {} exceeds weight of behavior {}",
                                   e.behavior_id, e.weight, entries[i - 1].behavior_id));
  }
  return errors;
}

// Splits one CSV record; fields may be double-quoted with "" as an escaped quote.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

std::string trim(std::string s) {
  const auto ws = " \t\r\n";
  s.erase(0, s.find_first_not_of(ws));
  s.erase(s.find_last_not_of(ws) + 1);
  return s;
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  std::istringstream is(text);
  is >> out;
  return !is.fail() && is.eof();
}

}  // namespace

BehaviorCatalog::BehaviorCatalog(std::vector<BehaviorEntry> entries) : entries_(std::move(entries)) {
  auto errors = validate_entries(entries_);
  if (!errors.empty()) throw ValidationError(std::move(errors));
}

const BehaviorEntry& BehaviorCatalog::at(int behavior_id) const {
  if (behavior_id < 1 || behavior_id > size())
    throw DomainError(fmt::format("unknown behavior id {}", behavior_id));
  return entries_[static_cast<std::size_t>(behavior_id - 1)];
}

std::vector<double> BehaviorCatalog::weights() const {
  std::vector<double> w;
  w.reserve(entries_.size());
  for (const auto& e : entries_) w.push_back(e.weight);
  return w;
}

BehaviorCatalog default_catalog() {
  static const char* const kDescriptions[kBehaviorCount] = {
      "Driving too fast for conditions or in excess of posted limit",
      "Under the influence of alcohol, drugs, or medication",
      "Failure to keep in proper lane",
      "Failure to yield right of way",
      "Distracted (e.g., phone, talking, eating, etc)",
      "Overcorrecting / Oversteering",
      "Failure to obey traffic signs, signals, or officers",
      "Erratic, reckless, careless, or negligent operation of vehicle",
      "Swerving due to wind, slippery surface, object, etc",
      "Vision obscured due to rain, snow, glare, lights, etc",
      "Driving on wrong way / side of road",
      "Drowsy, asleep, fatigued, ill, or blackout",
      "Improper turn",
  };
  static constexpr double kPlateau[kTbsGroups] = {0.95, 0.65, 0.35, 0.05};
  std::vector<BehaviorEntry> entries;
  for (int id = 1; id <= kBehaviorCount; ++id) {
    const int group = reference_tbs_index(id);
    entries.push_back({id, kDescriptions[id - 1], kPlateau[group - 1], group});
  }
  return BehaviorCatalog(std::move(entries));
}

BehaviorCatalog parse_catalog(std::istream& in, const std::string& source) {
  std::vector<std::string> errors;
  std::vector<BehaviorEntry> entries;
  std::string line;
  int lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty() || trim(line).front() == '#') continue;
    auto fields = split_csv(line);
    for (auto& f : fields) f = trim(f);
    if (!header_seen) {
      header_seen = true;
      const std::vector<std::string> expected{"behavior_id", "description", "weight", "tbs_index"};
      if (fields != expected) {
        errors.push_back(fmt::format("{}:{}: expected header behavior_id,description,weight,"
                                     "tbs_index",
                                     source, lineno));
        break;
      }
      continue;
    }
    if (fields.size() != 4) {
      errors.push_back(fmt::format("{}:{}: expected 4 columns, found {}", source, lineno,
                                   fields.size()));
      continue;
    }
    BehaviorEntry e;
    e.description = fields[1];
    bool ok = true;
    if (!parse_number(fields[0], e.behavior_id)) {
      errors.push_back(fmt::format("{}:{}: bad behavior_id '{}'", source, lineno, fields[0]));
      ok = false;
    }
    if (!parse_number(fields[2], e.weight)) {
      errors.push_back(fmt::format("{}:{}: bad weight '{}'", source, lineno, fields[2]));
      ok = false;
    }
    if (!parse_number(fields[3], e.tbs_index)) {
      errors.push_back(fmt::format("{}:{}: bad tbs_index '{}'", source, lineno, fields[3]));
      ok = false;
    }
    if (ok) entries.push_back(std::move(e));
  }
  if (!header_seen) errors.push_back(fmt::format("{}: empty catalog", source));
  if (errors.empty()) {
    for (auto& msg : validate_entries(entries)) errors.push_back(source + ": " + msg);
  }
  if (!errors.empty()) throw ValidationError(std::move(errors));
  return BehaviorCatalog(std::move(entries));
}

BehaviorCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open behavior catalog '" + path.string() + "'");
  return parse_catalog(in, path.string());
}

void write_catalog(std::ostream& out, const BehaviorCatalog& catalog) {
  out << "behavior_id,description,weight,tbs_index\n";
  for (const auto& e : catalog.entries()) {
    std::string desc;
    for (char c : e.description) {
      if (c == '"') desc += '"';
      desc += c;
    }
    out << fmt::format("{},\"{}\",{},{}\n", e.behavior_id, desc, e.weight, e.tbs_index);
  }
}

double evaluate_polynomial(const CrashRiskCurve& curve, double x) {
  double acc = 0.0;
  for (double b : curve.coefficients) acc = acc * x + b;
  return acc;
}

double crash_probability(const CrashRiskCurve& curve, double x) {
  if (!(x >= 1.0 && x <= static_cast<double>(kBehaviorCount)))
    throw DomainError(fmt::format("crash_probability: x = {} outside [1, {}]", x, kBehaviorCount));
  return std::clamp(evaluate_polynomial(curve, x), 0.0, 1.0);
}

namespace {

// Solves V c = f in place for the monomial coefficients (ascending powers),
// where V[i][j] = nodes[i]^j (Bjorck & Pereyra, 1970).
void bjorck_pereyra(std::span<const double> x, std::span<double> a) {
  const std::size_t n = x.size();
  for (std::size_t k = 0; k + 1 < n; ++k)
    for (std::size_t j = n - 1; j > k; --j) a[j] = (a[j] - a[j - 1]) / (x[j] - x[j - k - 1]);
  for (std::size_t k = n - 1; k-- > 0;)
    for (std::size_t j = k; j + 1 < n; ++j) a[j] -= x[k] * a[j + 1];
}

}  // namespace

double vandermonde_condition(std::span<const double> nodes) {
  const std::size_t n = nodes.size();
  // ||V||_1: largest column sum of |x_i|^j.
  double norm_v = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    double col = 0.0;
    for (double x : nodes) col += std::pow(std::abs(x), static_cast<double>(j));
    norm_v = std::max(norm_v, col);
  }
  // ||V^-1||_1 column by column: solve V c = e_i.
  double norm_inv = 0.0;
  std::vector<double> col(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::fill(col.begin(), col.end(), 0.0);
    col[i] = 1.0;
    bjorck_pereyra(nodes, col);
    double s = 0.0;
    for (double c : col) s += std::abs(c);
    norm_inv = std::max(norm_inv, s);
  }
  return norm_v * norm_inv;
}

CrashRiskCurve fit_anchors(std::span<const double> nodes, std::span<const double> values,
                           double tolerance) {
  if (nodes.size() != kBehaviorCount || values.size() != kBehaviorCount)
    throw DomainError(fmt::format("fit needs {} anchors, got {} nodes and {} values",
                                  kBehaviorCount, nodes.size(), values.size()));
  std::vector<double> sorted(nodes.begin(), nodes.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw DomainError("fit anchors must be distinct");

  std::vector<double> a(values.begin(), values.end());
  bjorck_pereyra(nodes, a);
  CrashRiskCurve curve;
  std::reverse_copy(a.begin(), a.end(), curve.coefficients.begin());

  double worst = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    worst = std::max(worst, std::abs(evaluate_polynomial(curve, nodes[i]) - values[i]));
  if (!(worst <= tolerance)) {
    const double cond = vandermonde_condition(nodes);
    throw FitError(fmt::format("polynomial fit misses an anchor by {:.3e} (tolerance {:.1e}); "
                               "Vandermonde condition number {:.3e}",
                               worst, tolerance, cond),
                   cond);
  }
  return curve;
}

CrashRiskCurve fit_curve(const BehaviorCatalog& catalog, double tolerance) {
  std::vector<double> nodes;
  for (const auto& e : catalog.entries()) nodes.push_back(static_cast<double>(e.behavior_id));
  const auto w = catalog.weights();
  return fit_anchors(nodes, w, tolerance);
}

int oracle_tbs_index(const BehaviorCatalog& catalog, int behavior_id) {
  return catalog.at(behavior_id).tbs_index;
}

BehaviorContext::BehaviorContext(int behavior_count, int decay_rounds)
    : behavior_count_(behavior_count), decay_rounds_(decay_rounds) {
  if (behavior_count < 1) throw ConfigError("behavior context needs at least one behavior");
}

void BehaviorContext::update(std::optional<int> detected, std::int64_t t) {
  if (last_t_ && t <= *last_t_)
    throw StateError(fmt::format("context update at t={} after t={}", t, *last_t_));
  if (detected && (*detected < 1 || *detected > behavior_count_))
    throw DomainError(fmt::format("unknown behavior id {}", *detected));
  last_t_ = t;
  if (detected) {
    active_ = *detected;
    last_detection_t_ = t;
    history_.push_back({t, *detected});
  } else if (active_ && decay_rounds_ > 0 && t - last_detection_t_ >= decay_rounds_) {
    active_ = behavior_count_;
  }
}

BehaviorContext update_context(BehaviorContext ctx, std::optional<int> detected, std::int64_t t) {
  ctx.update(detected, t);
  return ctx;
}

}  // namespace v2x::risk
