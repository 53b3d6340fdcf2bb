#ifndef FACEPIPE_EVAL_HPP_
#define FACEPIPE_EVAL_HPP_

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace facepipe::eval {

/// Labeled verification scores; higher means more genuine for both lists.
struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

struct CurvePoint {
  double threshold = 0.0;
  double far = 0.0;  // percent of impostor trials accepted
  double frr = 0.0;  // percent of genuine trials rejected
};

/// Midpoints between consecutive distinct pooled scores, with -inf/+inf
/// sentinels so the curve always spans (FAR 100, FRR 0) .. (FAR 0, FRR 100).
std::vector<double> default_thresholds(const ScoreSet& scores);

/// Accept iff score >= t. FAR is non-increasing and FRR non-decreasing along
/// ascending thresholds.
std::vector<CurvePoint> far_frr_curve(const ScoreSet& scores,
                                      const std::vector<double>& thresholds);

struct EerResult {
  double eer = 0.0;       // percent
  double threshold = 0.0;
  bool crossed = false;   // false: no FAR/FRR crossing, closest approach used
};

/// Locates FAR(t) = FRR(t) by linear interpolation between the bracketing
/// curve points and returns (FAR+FRR)/2 there. Degenerate curves without a
/// crossing return the midpoint of the closest approach, flagged.
EerResult equal_error_rate(const std::vector<CurvePoint>& curve);

/// One verification probe: its feature scores are produced by the scorer.
struct Probe {
  std::string true_subject;
  std::size_t index = 0;  // caller-side handle passed back to the scorer
};

using Scorer = std::function<double(const std::string& claimed_subject,
                                    std::size_t probe_index)>;

/// One genuine trial per probe (claim = true id) and one impostor trial per
/// other enrolled subject.
ScoreSet build_scores(const std::vector<std::string>& enrolled_subjects,
                      const std::vector<Probe>& probes, const Scorer& scorer);

struct EvalReport {
  std::string method;
  std::string protocol;  // "F" or "FLR"
  double frr_at_eer = 0.0;
  double far_at_eer = 0.0;
  double eer = 0.0;
  double recognition_rate = 0.0;  // 100 - eer
  bool eer_crossed = true;
  std::vector<CurvePoint> curve;
};

/// Builds the report for one method/protocol from a score set.
EvalReport make_report(const std::string& method, const std::string& protocol,
                       const ScoreSet& scores);

/// Writes <method>_<protocol>_roc.csv, ..._det.csv and ..._summary.csv into
/// dir. All percentages carry 4 decimal places; emission is byte-deterministic.
void emit_report(const EvalReport& report, const std::filesystem::path& dir);

}  // namespace facepipe::eval

#endif  // FACEPIPE_EVAL_HPP_
