#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace v2x::risk {

inline constexpr int kBehaviorCount = 13;
inline constexpr int kTbsGroups = 4;

/// One crash-causing driver behavior and the TBS index it maps to.
struct BehaviorEntry {
  int behavior_id = 0;
  std::string description;
  double weight = 0.0;  // crash-causing gravity in [0, 1]
  int tbs_index = 0;

  bool operator==(const BehaviorEntry&) const = default;
};

/// Reference grouping of behavior ids into TBS indices: id 1 -> 1, 2..6 -> 2,
/// 7..9 -> 3, 10..13 -> 4.
int reference_tbs_index(int behavior_id);

class BehaviorCatalog {
public:
  explicit BehaviorCatalog(std::vector<BehaviorEntry> entries);

  const std::vector<BehaviorEntry>& entries() const { return entries_; }
  const BehaviorEntry& at(int behavior_id) const;
  int size() const { return static_cast<int>(entries_.size()); }
  std::vector<double> weights() const;

  bool operator==(const BehaviorCatalog&) const = default;

private:
  std::vector<BehaviorEntry> entries_;
};

/// Factory catalog: four weight plateaus 0.95, 0.65, 0.35, 0.05 over the
/// reference groups.
BehaviorCatalog default_catalog();

/// CSV with header "behavior_id,description,weight,tbs_index". Descriptions
/// may be double-quoted. Throws ValidationError listing every problem, or
/// IoError if the file cannot be opened.
BehaviorCatalog load_catalog(const std::filesystem::path& path);
BehaviorCatalog parse_catalog(std::istream& in, const std::string& source = "<stream>");
void write_catalog(std::ostream& out, const BehaviorCatalog& catalog);

/// Degree-12 polynomial, coefficients highest degree first.
struct CrashRiskCurve {
  std::array<double, kBehaviorCount> coefficients{};
};

/// Horner evaluation without domain check or clamping.
double evaluate_polynomial(const CrashRiskCurve& curve, double x);

/// Crash probability at x in [1, 13], clamped to [0, 1]. Throws DomainError
/// outside the anchor range.
double crash_probability(const CrashRiskCurve& curve, double x);

/// Interpolates (id, weight) for ids 1..13 by solving the Vandermonde system
/// with the Bjorck-Pereyra algorithm. Throws FitError (with the 1-norm
/// condition number) if any anchor is missed by more than `tolerance`.
CrashRiskCurve fit_curve(const BehaviorCatalog& catalog, double tolerance = 1e-6);

/// Degree-12 interpolant through 13 distinct (node, value) anchors. Throws
/// FitError when an anchor residual exceeds `tolerance`.
CrashRiskCurve fit_anchors(std::span<const double> nodes, std::span<const double> values,
                           double tolerance = 1e-6);

/// 1-norm condition number of the Vandermonde matrix on the given nodes.
double vandermonde_condition(std::span<const double> nodes);

/// Ground-truth TBS index ("correct arm") for a behavior. Throws DomainError
/// for unknown ids.
int oracle_tbs_index(const BehaviorCatalog& catalog, int behavior_id);

struct Detection {
  std::int64_t t = 0;
  int behavior_id = 0;
  bool operator==(const Detection&) const = default;
};

/// Currently detected behavior of one vehicle.
///
/// A detection holds until `decay_rounds` rounds pass without a new one, after
/// which the context falls back to the lowest-risk behavior (the last id).
/// decay_rounds <= 0 disables the fallback.
class BehaviorContext {
public:
  explicit BehaviorContext(int behavior_count = kBehaviorCount, int decay_rounds = 100);

  /// Advances to round t. Throws StateError unless t is strictly greater than
  /// the previous update, DomainError for an unknown id.
  void update(std::optional<int> detected, std::int64_t t);

  std::optional<int> active() const { return active_; }
  /// Active behavior, or the lowest-risk id when nothing is active.
  int effective_behavior() const { return active_.value_or(behavior_count_); }
  const std::vector<Detection>& history() const { return history_; }
  std::optional<std::int64_t> last_update() const { return last_t_; }

  bool operator==(const BehaviorContext&) const = default;

private:
  int behavior_count_;
  int decay_rounds_;
  std::optional<int> active_;
  std::optional<std::int64_t> last_t_;
  std::int64_t last_detection_t_ = 0;
  std::vector<Detection> history_;
};

/// Value-returning form of BehaviorContext::update.
BehaviorContext update_context(BehaviorContext ctx, std::optional<int> detected, std::int64_t t);

}  // namespace v2x::risk
