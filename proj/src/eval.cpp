#include "facepipe/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>

#include "facepipe/error.hpp"

namespace facepipe::eval {

namespace {

void validate_scores(const ScoreSet& scores) {
  if (scores.genuine.empty() || scores.impostor.empty())
    throw Error(Errc::empty_scores, "both genuine and impostor scores are required");
  for (double s : scores.genuine)
    if (!std::isfinite(s)) throw Error(Errc::invalid_argument, "non-finite genuine score");
  for (double s : scores.impostor)
    if (!std::isfinite(s)) throw Error(Errc::invalid_argument, "non-finite impostor score");
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", value);
  return buf;
}

}  // namespace

std::vector<double> default_thresholds(const ScoreSet& scores) {
  validate_scores(scores);
  std::set<double> distinct(scores.genuine.begin(), scores.genuine.end());
  distinct.insert(scores.impostor.begin(), scores.impostor.end());

  std::vector<double> thresholds;
  thresholds.reserve(distinct.size() + 1);
  thresholds.push_back(-std::numeric_limits<double>::infinity());
  double prev = 0.0;
  bool have_prev = false;
  for (double s : distinct) {
    if (have_prev) thresholds.push_back(prev + (s - prev) / 2.0);
    prev = s;
    have_prev = true;
  }
  thresholds.push_back(std::numeric_limits<double>::infinity());
  return thresholds;
}

std::vector<CurvePoint> far_frr_curve(const ScoreSet& scores,
                                      const std::vector<double>& thresholds) {
  validate_scores(scores);
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw Error(Errc::invalid_argument, "thresholds must be sorted ascending");

  std::vector<double> genuine = scores.genuine;
  std::vector<double> impostor = scores.impostor;
  std::sort(genuine.begin(), genuine.end());
  std::sort(impostor.begin(), impostor.end());

  std::vector<CurvePoint> curve;
  curve.reserve(thresholds.size());
  for (double t : thresholds) {
    // accept iff score >= t
    const auto impostor_below =
        std::lower_bound(impostor.begin(), impostor.end(), t) - impostor.begin();
    const auto genuine_below =
        std::lower_bound(genuine.begin(), genuine.end(), t) - genuine.begin();
    CurvePoint p;
    p.threshold = t;
    p.far = 100.0 * static_cast<double>(impostor.size() - impostor_below) /
            static_cast<double>(impostor.size());
    p.frr = 100.0 * static_cast<double>(genuine_below) /
            static_cast<double>(genuine.size());
    curve.push_back(p);
  }
  return curve;
}

EerResult equal_error_rate(const std::vector<CurvePoint>& curve) {
  if (curve.empty()) throw Error(Errc::empty_scores, "empty curve");

  // FAR - FRR is non-increasing along the curve; find the sign change.
  std::size_t after = curve.size();
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].far - curve[i].frr <= 0.0) {
      after = i;
      break;
    }
  }

  EerResult result;
  if (after == curve.size() || (after == 0 && curve[0].far - curve[0].frr < 0.0)) {
    // No bracketing pair: the curve never crosses. Report the closest approach.
    double best_gap = std::numeric_limits<double>::infinity();
    for (const CurvePoint& p : curve) {
      const double gap = std::abs(p.far - p.frr);
      if (gap < best_gap) {
        best_gap = gap;
        result.eer = (p.far + p.frr) / 2.0;
        result.threshold = p.threshold;
      }
    }
    result.crossed = false;
    return result;
  }

  result.crossed = true;
  if (after == 0 || curve[after].far == curve[after].frr) {
    result.eer = (curve[after].far + curve[after].frr) / 2.0;
    result.threshold = curve[after].threshold;
    return result;
  }

  const CurvePoint& lo = curve[after - 1];
  const CurvePoint& hi = curve[after];
  // Parametric interpolation between the bracketing points; s is where the
  // interpolated FAR and FRR segments meet.
  const double d0 = lo.far - lo.frr;   // >= 0
  const double d1 = hi.frr - hi.far;   // > 0 here
  const double s = (d0 + d1) > 0.0 ? d0 / (d0 + d1) : 0.0;
  const double far_at = lo.far + s * (hi.far - lo.far);
  const double frr_at = lo.frr + s * (hi.frr - lo.frr);
  result.eer = (far_at + frr_at) / 2.0;
  if (std::isfinite(lo.threshold) && std::isfinite(hi.threshold)) {
    result.threshold = lo.threshold + s * (hi.threshold - lo.threshold);
  } else if (std::isfinite(lo.threshold)) {
    result.threshold = lo.threshold;
  } else {
    result.threshold = hi.threshold;
  }
  return result;
}

ScoreSet build_scores(const std::vector<std::string>& enrolled_subjects,
                      const std::vector<Probe>& probes, const Scorer& scorer) {
  if (enrolled_subjects.empty())
    throw Error(Errc::empty_dataset, "no enrolled subjects");
  ScoreSet scores;
  for (const Probe& probe : probes) {
    if (std::find(enrolled_subjects.begin(), enrolled_subjects.end(),
                  probe.true_subject) == enrolled_subjects.end())
      throw Error(Errc::unknown_subject,
                  "probe subject not enrolled: " + probe.true_subject);
    for (const std::string& claimed : enrolled_subjects) {
      const double value = scorer(claimed, probe.index);
      if (claimed == probe.true_subject)
        scores.genuine.push_back(value);
      else
        scores.impostor.push_back(value);
    }
  }
  return scores;
}

EvalReport make_report(const std::string& method, const std::string& protocol,
                       const ScoreSet& scores) {
  EvalReport report;
  report.method = method;
  report.protocol = protocol;
  report.curve = far_frr_curve(scores, default_thresholds(scores));
  const EerResult eer = equal_error_rate(report.curve);
  report.eer = eer.eer;
  report.eer_crossed = eer.crossed;
  report.recognition_rate = 100.0 - eer.eer;

  // Operating FRR/FAR are read at the curve point nearest the EER threshold.
  double best_gap = std::numeric_limits<double>::infinity();
  for (const CurvePoint& p : report.curve) {
    double gap;
    if (std::isfinite(p.threshold) && std::isfinite(eer.threshold))
      gap = std::abs(p.threshold - eer.threshold);
    else
      gap = std::numeric_limits<double>::infinity();
    if (gap < best_gap) {
      best_gap = gap;
      report.far_at_eer = p.far;
      report.frr_at_eer = p.frr;
    }
  }
  if (!std::isfinite(best_gap)) {
    // All-infinite thresholds: fall back to the smallest |FAR - FRR|.
    for (const CurvePoint& p : report.curve) {
      const double gap = std::abs(p.far - p.frr);
      if (gap < best_gap) {
        best_gap = gap;
        report.far_at_eer = p.far;
        report.frr_at_eer = p.frr;
      }
    }
  }
  return report;
}

void emit_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir.string());

  const std::string stem = report.method + "_" + report.protocol;
  const auto open = [&](const std::string& name) {
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot write " + (dir / name).string());
    return out;
  };

  {
    std::ofstream roc = open(stem + "_roc.csv");
    roc << "far_percent,tar_percent\n";
    for (const CurvePoint& p : report.curve)
      roc << format_percent(p.far) << "," << format_percent(100.0 - p.frr) << "\n";
  }
  {
    std::ofstream det = open(stem + "_det.csv");
    det << "far_percent,frr_percent\n";
    for (const CurvePoint& p : report.curve)
      det << format_percent(p.far) << "," << format_percent(p.frr) << "\n";
  }
  {
    std::ofstream summary = open(stem + "_summary.csv");
    summary << "method,frr_percent,far_percent,recognition_rate_percent,eer_percent\n";
    summary << report.method << "," << format_percent(report.frr_at_eer) << ","
            << format_percent(report.far_at_eer) << ","
            << format_percent(report.recognition_rate) << ","
            << format_percent(report.eer) << "\n";
  }
}

}  // namespace facepipe::eval
